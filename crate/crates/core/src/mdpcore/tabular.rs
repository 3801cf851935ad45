use crate::scalar::Real;

use super::MdpError;

const ROW_TOL: f64 = 1e-12;

fn check_distribution<T: Real>(row: &[T], what: impl Fn() -> String) -> Result<(), MdpError> {
    if row.iter().any(|p| !(p.is_finite() && *p >= T::zero())) {
        return Err(MdpError::Invalid(format!("{} has a negative or non-finite entry", what())));
    }
    let total: T = row.iter().copied().sum();
    if (total - T::one()).abs() > T::lit(ROW_TOL).max(T::epsilon() * T::lit(8.0)) {
        return Err(MdpError::Invalid(format!("{} sums to {total}, not 1", what())));
    }
    Ok(())
}

/// Probability vector over states (or actions).
pub fn validate_distribution<T: Real>(dist: &[T]) -> Result<(), MdpError> {
    check_distribution(dist, || "distribution".to_string())
}

/// Transition kernel `P[s][a][s']` stored densely.
#[derive(Clone, Debug, PartialEq)]
pub struct Kernel<T> {
    n_states: usize,
    n_actions: usize,
    probs: Vec<T>,
}

impl<T: Real> Kernel<T> {
    pub fn new(n_states: usize, n_actions: usize, probs: Vec<T>) -> Result<Self, MdpError> {
        if n_states == 0 || n_actions == 0 {
            return Err(MdpError::Invalid("kernel needs at least one state and action".into()));
        }
        if probs.len() != n_states * n_actions * n_states {
            return Err(MdpError::Shape(format!(
                "kernel has {} entries, expected {}",
                probs.len(),
                n_states * n_actions * n_states
            )));
        }
        for s in 0..n_states {
            for a in 0..n_actions {
                let start = (s * n_actions + a) * n_states;
                check_distribution(&probs[start..start + n_states], || format!("row P[{s}][{a}]"))?;
            }
        }
        Ok(Self { n_states, n_actions, probs })
    }

    /// Builds a kernel from per-(s, a) rows.
    pub fn from_rows(rows: Vec<Vec<Vec<T>>>) -> Result<Self, MdpError> {
        let n_states = rows.len();
        let n_actions = rows.first().map_or(0, Vec::len);
        let mut probs = Vec::with_capacity(n_states * n_actions * n_states);
        for (s, per_action) in rows.into_iter().enumerate() {
            if per_action.len() != n_actions {
                return Err(MdpError::Shape(format!("state {s} has {} actions", per_action.len())));
            }
            for row in per_action {
                if row.len() != n_states {
                    return Err(MdpError::Shape(format!("a row of state {s} has length {}", row.len())));
                }
                probs.extend(row);
            }
        }
        Self::new(n_states, n_actions, probs)
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn row(&self, s: usize, a: usize) -> &[T] {
        let start = (s * self.n_actions + a) * self.n_states;
        &self.probs[start..start + self.n_states]
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.n_states == other.n_states && self.n_actions == other.n_actions
    }

    /// State-to-state matrix `P_pi[s][s'] = sum_a pi[s][a] P[s][a][s']`, row-major.
    pub fn under_policy(&self, policy: &PolicyTable<T>) -> Result<Vec<T>, MdpError> {
        if policy.n_states() != self.n_states || policy.n_actions() != self.n_actions {
            return Err(MdpError::Shape("policy shape does not match kernel".into()));
        }
        let n = self.n_states;
        let mut out = vec![T::zero(); n * n];
        for s in 0..n {
            for a in 0..self.n_actions {
                let w = policy.prob(s, a);
                if w == T::zero() {
                    continue;
                }
                for (o, p) in out[s * n..(s + 1) * n].iter_mut().zip(self.row(s, a)) {
                    *o = *o + w * *p;
                }
            }
        }
        Ok(out)
    }
}

/// Exact finite MDP `(P, R, gamma, rho)`.
#[derive(Clone, Debug, PartialEq)]
pub struct TabularMdp<T> {
    kernel: Kernel<T>,
    reward: Vec<T>,
    gamma: T,
    initial_dist: Vec<T>,
}

impl<T: Real> TabularMdp<T> {
    pub fn new(kernel: Kernel<T>, reward: Vec<T>, gamma: T, initial_dist: Vec<T>) -> Result<Self, MdpError> {
        let (n, m) = (kernel.n_states(), kernel.n_actions());
        if reward.len() != n * m {
            return Err(MdpError::Shape(format!("reward has {} entries, expected {}", reward.len(), n * m)));
        }
        if !(gamma >= T::zero() && gamma < T::one()) {
            return Err(MdpError::Invalid(format!("gamma {gamma} outside [0, 1)")));
        }
        if initial_dist.len() != n {
            return Err(MdpError::Shape("initial distribution length differs from n_states".into()));
        }
        check_distribution(&initial_dist, || "initial distribution".to_string())?;
        Ok(Self { kernel, reward, gamma, initial_dist })
    }

    pub fn n_states(&self) -> usize {
        self.kernel.n_states()
    }

    pub fn n_actions(&self) -> usize {
        self.kernel.n_actions()
    }

    pub fn kernel(&self) -> &Kernel<T> {
        &self.kernel
    }

    pub fn reward(&self, s: usize, a: usize) -> T {
        self.reward[s * self.n_actions() + a]
    }

    pub fn gamma(&self) -> T {
        self.gamma
    }

    pub fn initial_dist(&self) -> &[T] {
        &self.initial_dist
    }
}

/// Stochastic policy `pi[s][a]`.
#[derive(Clone, Debug, PartialEq)]
pub struct PolicyTable<T> {
    n_states: usize,
    n_actions: usize,
    probs: Vec<T>,
}

impl<T: Real> PolicyTable<T> {
    pub fn new(n_states: usize, n_actions: usize, probs: Vec<T>) -> Result<Self, MdpError> {
        if probs.len() != n_states * n_actions {
            return Err(MdpError::Shape("policy table size mismatch".into()));
        }
        for s in 0..n_states {
            check_distribution(&probs[s * n_actions..(s + 1) * n_actions], || format!("policy row {s}"))?;
        }
        Ok(Self { n_states, n_actions, probs })
    }

    pub fn uniform(n_states: usize, n_actions: usize) -> Self {
        let p = T::one() / T::from_usize(n_actions).expect("action count");
        Self { n_states, n_actions, probs: vec![p; n_states * n_actions] }
    }

    /// Deterministic policy choosing `actions[s]` in state `s`.
    pub fn deterministic(n_actions: usize, actions: &[usize]) -> Result<Self, MdpError> {
        let mut probs = vec![T::zero(); actions.len() * n_actions];
        for (s, &a) in actions.iter().enumerate() {
            if a >= n_actions {
                return Err(MdpError::Invalid(format!("action {a} out of range in state {s}")));
            }
            probs[s * n_actions + a] = T::one();
        }
        Ok(Self { n_states: actions.len(), n_actions, probs })
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn prob(&self, s: usize, a: usize) -> T {
        self.probs[s * self.n_actions + a]
    }

    /// True when every row puts all mass on one action.
    pub fn is_deterministic(&self) -> bool {
        (0..self.n_states).all(|s| {
            self.probs[s * self.n_actions..(s + 1) * self.n_actions]
                .iter()
                .filter(|p| **p != T::zero())
                .count()
                == 1
        })
    }
}

/// Normalized discounted state occupancy.
#[derive(Clone, Debug, PartialEq)]
pub struct VisitationVector<T>(Vec<T>);

impl<T: Real> VisitationVector<T> {
    pub fn new(d: Vec<T>) -> Result<Self, MdpError> {
        if d.iter().any(|x| !(x.is_finite() && *x >= T::zero())) {
            return Err(MdpError::Invalid("visitation has a negative or non-finite entry".into()));
        }
        let total: T = d.iter().copied().sum();
        if (total - T::one()).abs() > T::lit(1e-9).max(T::epsilon() * T::lit(64.0)) {
            return Err(MdpError::Invalid(format!("visitation sums to {total}")));
        }
        Ok(Self(d))
    }

    pub fn as_slice(&self) -> &[T] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl<T> std::ops::Index<usize> for VisitationVector<T> {
    type Output = T;
    fn index(&self, i: usize) -> &T {
        &self.0[i]
    }
}
