use crate::gridworld::ObsCode;
use crate::seeding::Rng;
use crate::Scalar;

use super::adam::Adam;
use super::dqn::encode_batch;
use super::net::{Activations, NetShape, TwoBranchNet};
use super::AgentError;

pub const RND_OUT: usize = 32;
pub const DEFAULT_RND_SCALE: f64 = 0.1;

/// Frozen random target plus a trained predictor; the bonus is the scaled
/// prediction error.
#[derive(Clone, Debug)]
pub struct RndPair<T> {
    target: TwoBranchNet<T>,
    predictor: TwoBranchNet<T>,
    adam: Adam<T>,
    bonus_scale: f64,
    channels: usize,
}

impl<T: Scalar> RndPair<T> {
    pub fn new(channels: usize, bonus_scale: f64, learning_rate: f64, rng: &mut Rng) -> Result<Self, AgentError> {
        let shape = NetShape::two_branch(channels, RND_OUT);
        let target = TwoBranchNet::init(shape.clone(), rng)?;
        let predictor = TwoBranchNet::init(shape, rng)?;
        Self::from_parts(target, predictor, channels, bonus_scale, learning_rate)
    }

    pub fn from_parts(
        target: TwoBranchNet<T>,
        predictor: TwoBranchNet<T>,
        channels: usize,
        bonus_scale: f64,
        learning_rate: f64,
    ) -> Result<Self, AgentError> {
        if target.shape() != predictor.shape() {
            return Err(AgentError::Shape("RND target and predictor shapes differ".into()));
        }
        if !(bonus_scale >= 0.0) {
            return Err(AgentError::Input(format!("RND bonus scale {bonus_scale} must be nonnegative")));
        }
        let adam = Adam::new(predictor.n_params(), learning_rate);
        Ok(Self { target, predictor, adam, bonus_scale, channels })
    }

    pub fn target(&self) -> &TwoBranchNet<T> {
        &self.target
    }

    pub fn predictor(&self) -> &TwoBranchNet<T> {
        &self.predictor
    }

    /// `beta * mean((target(o) - predictor(o))^2)`, one value per observation.
    pub fn bonus_batch(&self, obs: &[ObsCode]) -> Vec<f64> {
        let (mut g, mut v) = (Vec::new(), Vec::new());
        let n = encode_batch(obs, self.channels, &mut g, &mut v);
        let mut ta = Activations::default();
        let mut pa = Activations::default();
        let t = self.target.forward(&g, &v, n, &mut ta).expect("observation width matches the network");
        let p = self.predictor.forward(&g, &v, n, &mut pa).expect("observation width matches the network");
        let k = self.target.shape().n_out();
        t.chunks(k)
            .zip(p.chunks(k))
            .map(|(tr, pr)| {
                let mse: f64 = tr.iter().zip(pr).map(|(a, b)| (*a - *b).to_f64().unwrap().powi(2)).sum::<f64>() / k as f64;
                self.bonus_scale * mse
            })
            .collect()
    }

    pub fn bonus(&self, obs: &ObsCode) -> f64 {
        self.bonus_batch(std::slice::from_ref(obs))[0]
    }

    /// One Adam step on the predictor's mean squared error over `obs`.
    /// Returns the pre-update loss.
    pub fn train_step(&mut self, obs: &[ObsCode]) -> Result<f64, AgentError> {
        if obs.is_empty() {
            return Err(AgentError::Input("empty batch".into()));
        }
        let (mut g, mut v) = (Vec::new(), Vec::new());
        let n = encode_batch(obs, self.channels, &mut g, &mut v);
        let mut ta = Activations::default();
        let mut pa = Activations::default();
        let t = self.target.forward(&g, &v, n, &mut ta)?.to_vec();
        let p = self.predictor.forward(&g, &v, n, &mut pa)?.to_vec();
        let scale = T::lit(2.0 / t.len() as f64);
        let d: Vec<T> = p.iter().zip(&t).map(|(a, b)| scale * (*a - *b)).collect();
        let loss = p.iter().zip(&t).map(|(a, b)| (*a - *b).to_f64().unwrap().powi(2)).sum::<f64>() / t.len() as f64;
        let mut grads = vec![T::zero(); self.predictor.n_params()];
        self.predictor.backward(&g, &v, &mut pa, n, &d, &mut grads)?;
        self.adam.step(self.predictor.params_mut(), &grads);
        Ok(loss)
    }
}
