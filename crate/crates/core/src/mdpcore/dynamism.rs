//! Transition entropy and the "more dynamic means closer to uniform" check.
//!
//! The verifier works one step at a time: for a start distribution `rho` it
//! compares the pushforwards `rho^T P_pi` and `rho^T P~_pi` against the
//! uniform distribution using the max-component distance. The inequality is
//! only guaranteed for point-mass starts under a deterministic policy (a
//! single kernel row); [`fuzz_dynamism_theorem`] samples exactly that case.

use rand::Rng as _;

use crate::scalar::Real;
use crate::seeding::Rng;

use super::tabular::{validate_distribution, Kernel, PolicyTable};
use super::MdpError;

const ASSUMPTION_TOL: f64 = 1e-12;

/// Shannon entropy in nats with `0 ln 0 = 0`.
pub fn entropy<T: Real>(dist: &[T]) -> T {
    dist.iter()
        .filter(|p| **p > T::zero())
        .map(|p| -*p * p.ln())
        .sum()
}

/// Entropy of `P_pi(. | state)`.
pub fn row_entropy<T: Real>(kernel: &Kernel<T>, policy: &PolicyTable<T>, state: usize) -> Result<T, MdpError> {
    if state >= kernel.n_states() {
        return Err(MdpError::Shape(format!("state {state} out of range")));
    }
    let p_pi = kernel.under_policy(policy)?;
    let n = kernel.n_states();
    Ok(entropy(&p_pi[state * n..(state + 1) * n]))
}

fn extrema<T: Real>(row: &[T]) -> (T, T) {
    row.iter()
        .fold((T::neg_infinity(), T::infinity()), |(hi, lo), p| (hi.max(*p), lo.min(*p)))
}

/// Checks, for every `(s, a)`, that the modified row has a lower-or-equal
/// maximum, a higher-or-equal minimum and at least the original entropy.
pub fn check_dynamism_assumptions<T: Real>(p: &Kernel<T>, p_tilde: &Kernel<T>) -> Result<bool, MdpError> {
    if !p.same_shape(p_tilde) {
        return Err(MdpError::Shape("kernels differ in shape".into()));
    }
    let tol = T::lit(ASSUMPTION_TOL);
    for s in 0..p.n_states() {
        for a in 0..p.n_actions() {
            let (row, row_t) = (p.row(s, a), p_tilde.row(s, a));
            let (hi, lo) = extrema(row);
            let (hi_t, lo_t) = extrema(row_t);
            if hi_t > hi + tol || lo_t < lo - tol || entropy(row_t) < entropy(row) - tol {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Distances from the uniform distribution over `dist.len()` states.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UniformDistance<T> {
    /// `max_s |v[s] - 1/m|`
    pub linf: T,
    /// `1/2 sum_s |v[s] - 1/m|`
    pub tv: T,
}

pub fn distance_to_uniform<T: Real>(dist: &[T]) -> Result<UniformDistance<T>, MdpError> {
    if dist.is_empty() {
        return Err(MdpError::Shape("empty distribution".into()));
    }
    validate_distribution(dist)?;
    let mu = T::one() / T::from_usize(dist.len()).expect("len");
    let (linf, l1) = dist.iter().fold((T::zero(), T::zero()), |(m, s), v| {
        let d = (*v - mu).abs();
        (m.max(d), s + d)
    });
    Ok(UniformDistance { linf, tv: l1 / T::lit(2.0) })
}

/// Outcome for one start distribution.
#[derive(Clone, Debug, PartialEq)]
pub struct DynamismCase<T> {
    pub before: UniformDistance<T>,
    pub after: UniformDistance<T>,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DynamismReport<T> {
    pub cases: Vec<DynamismCase<T>>,
}

impl<T> DynamismReport<T> {
    pub fn all_pass(&self) -> bool {
        self.cases.iter().all(|c| c.pass)
    }

    pub fn violations(&self) -> usize {
        self.cases.iter().filter(|c| !c.pass).count()
    }
}

fn pushforward<T: Real>(p_pi: &[T], n: usize, rho: &[T]) -> Vec<T> {
    let mut out = vec![T::zero(); n];
    for (s, w) in rho.iter().enumerate() {
        if *w == T::zero() {
            continue;
        }
        for (o, p) in out.iter_mut().zip(&p_pi[s * n..(s + 1) * n]) {
            *o = *o + *w * *p;
        }
    }
    out
}

/// Compares one-step pushforwards of every start distribution under `P` and
/// `P~`. Refuses with [`MdpError::Precondition`] when the kernels do not
/// satisfy [`check_dynamism_assumptions`].
pub fn verify_dynamism_theorem<T: Real>(
    p: &Kernel<T>,
    p_tilde: &Kernel<T>,
    policy: &PolicyTable<T>,
    starts: &[Vec<T>],
) -> Result<DynamismReport<T>, MdpError> {
    if !check_dynamism_assumptions(p, p_tilde)? {
        return Err(MdpError::Precondition(
            "modified kernel does not satisfy the max/min/entropy assumptions".into(),
        ));
    }
    let n = p.n_states();
    let (base, modified) = (p.under_policy(policy)?, p_tilde.under_policy(policy)?);
    let tol = T::lit(ASSUMPTION_TOL);
    let cases = starts
        .iter()
        .map(|rho| {
            if rho.len() != n {
                return Err(MdpError::Shape("start distribution length differs from n_states".into()));
            }
            validate_distribution(rho)?;
            let before = distance_to_uniform(&pushforward(&base, n, rho))?;
            let after = distance_to_uniform(&pushforward(&modified, n, rho))?;
            Ok(DynamismCase { pass: after.linf <= before.linf + tol, before, after })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(DynamismReport { cases })
}

/// Moves `mass` from the first maximal entry to the first minimal entry.
///
/// For `mass <= (max - min) / 2` the result has a lower maximum, higher
/// minimum and no less entropy than `row`.
pub fn flatten_row<T: Real>(row: &[T], mass: T) -> Vec<T> {
    let mut out = row.to_vec();
    let (mut hi, mut lo) = (0, 0);
    for (i, v) in row.iter().enumerate() {
        if *v > row[hi] {
            hi = i;
        }
        if *v < row[lo] {
            lo = i;
        }
    }
    if hi != lo {
        out[hi] = out[hi] - mass;
        out[lo] = out[lo] + mass;
    }
    out
}

/// Draws a random probability row. Mixes flat and peaked rows.
fn random_row(rng: &mut Rng, n: usize) -> Vec<f64> {
    let sharpness = [0.5, 1.0, 3.0][rng.gen_range(0..3)];
    let raw: Vec<f64> = (0..n)
        .map(|_| (-(1.0 - rng.gen::<f64>()).ln()).powf(sharpness))
        .collect();
    let total: f64 = raw.iter().sum();
    let mut row: Vec<f64> = raw.iter().map(|v| v / total).collect();
    // Renormalize so the row sums to one within a few ulps.
    let drift: f64 = 1.0 - row.iter().sum::<f64>();
    row[0] += drift;
    if row[0] < 0.0 {
        row[0] = 0.0;
    }
    row
}

/// One fuzzed `(P, P~, rho)` triple and its verdict.
#[derive(Clone, Debug, PartialEq)]
pub struct FuzzTrial {
    pub trial_id: usize,
    pub n_states: usize,
    /// Mass moved in the row the start state and policy select.
    pub epsilon_mass: f64,
    pub linf_before: f64,
    pub linf_after: f64,
    pub pass: bool,
}

/// Random kernel pair built with [`flatten_row`], returning the moved mass per row.
pub fn random_kernel_pair(rng: &mut Rng, n_states: usize, n_actions: usize) -> (Kernel<f64>, Kernel<f64>, Vec<f64>) {
    let mut rows = Vec::with_capacity(n_states);
    let mut rows_t = Vec::with_capacity(n_states);
    let mut masses = Vec::with_capacity(n_states * n_actions);
    for _ in 0..n_states {
        let mut per_a = Vec::with_capacity(n_actions);
        let mut per_a_t = Vec::with_capacity(n_actions);
        for _ in 0..n_actions {
            let row = random_row(rng, n_states);
            let (hi, lo) = extrema(&row);
            let mass = rng.gen::<f64>() * 0.25 * (hi - lo);
            per_a_t.push(flatten_row(&row, mass));
            per_a.push(row);
            masses.push(mass);
        }
        rows.push(per_a);
        rows_t.push(per_a_t);
    }
    let p = Kernel::from_rows(rows).expect("generated rows are distributions");
    let p_t = Kernel::from_rows(rows_t).expect("flattened rows are distributions");
    (p, p_t, masses)
}

/// Runs `trials` random triples with point-mass starts and deterministic
/// policies. Each trial draws `n_states` in `2..=max_states`.
pub fn fuzz_dynamism_theorem(rng: &mut Rng, trials: usize, max_states: usize) -> Result<Vec<FuzzTrial>, MdpError> {
    let max_states = max_states.max(2);
    (0..trials)
        .map(|trial_id| {
            let n = rng.gen_range(2..=max_states);
            let m = rng.gen_range(1..=3);
            let (p, p_t, masses) = random_kernel_pair(rng, n, m);
            let actions: Vec<usize> = (0..n).map(|_| rng.gen_range(0..m)).collect();
            let policy = PolicyTable::deterministic(m, &actions)?;
            let start = rng.gen_range(0..n);
            let mut rho = vec![0.0; n];
            rho[start] = 1.0;
            let report = verify_dynamism_theorem(&p, &p_t, &policy, &[rho])?;
            let case = &report.cases[0];
            Ok(FuzzTrial {
                trial_id,
                n_states: n,
                epsilon_mass: masses[start * m + actions[start]],
                linf_before: case.before.linf,
                linf_after: case.after.linf,
                pass: case.pass,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn single_row(row: Vec<f64>) -> Kernel<f64> {
        let n = row.len();
        Kernel::from_rows((0..n).map(|_| vec![row.clone()]).collect()).unwrap()
    }

    #[test]
    fn entropy_examples() {
        assert_eq!(entropy(&[1.0, 0.0, 0.0]), 0.0);
        assert!((entropy(&[0.25f64; 4]) - 4f64.ln()).abs() < 1e-15);
        assert!((entropy(&[0.5, 0.5, 0.0, 0.0]) - 2f64.ln()).abs() < 1e-15);
        let k = single_row(vec![0.25; 4]);
        let h = row_entropy(&k, &PolicyTable::uniform(4, 1), 2).unwrap();
        assert!((h - 1.386294).abs() < 1e-6);
    }

    #[test]
    fn assumption_examples() {
        let p = single_row(vec![0.9, 0.1]);
        assert!(check_dynamism_assumptions(&p, &p).unwrap());
        assert!(check_dynamism_assumptions(&p, &single_row(vec![0.7, 0.3])).unwrap());
        assert!(!check_dynamism_assumptions(&p, &single_row(vec![1.0, 0.0])).unwrap());
        let other = Kernel::from_rows(vec![vec![vec![1.0]]]).unwrap();
        assert!(matches!(check_dynamism_assumptions(&p, &other), Err(MdpError::Shape(_))));
    }

    #[test]
    fn distance_examples() {
        assert_eq!(distance_to_uniform(&[0.5, 0.5]).unwrap(), UniformDistance { linf: 0.0, tv: 0.0 });
        assert_eq!(distance_to_uniform(&[1.0, 0.0]).unwrap(), UniformDistance { linf: 0.5, tv: 0.5 });
        let d = distance_to_uniform(&[0.7f64, 0.3]).unwrap();
        assert!((d.linf - 0.2).abs() < 1e-15 && (d.tv - 0.2).abs() < 1e-15);
    }

    #[test]
    fn two_state_verification() {
        let p = single_row(vec![0.9, 0.1]);
        let pt = single_row(vec![0.7, 0.3]);
        let pi = PolicyTable::uniform(2, 1);
        let report = verify_dynamism_theorem(&p, &pt, &pi, &[vec![1.0, 0.0]]).unwrap();
        let c = &report.cases[0];
        assert!((c.before.linf - 0.4).abs() < 1e-12 && (c.after.linf - 0.2).abs() < 1e-12);
        assert!(report.all_pass());
        let same = verify_dynamism_theorem(&p, &p, &pi, &[vec![0.3, 0.7]]).unwrap();
        assert_eq!(same.cases[0].before, same.cases[0].after);
    }

    #[test]
    fn refuses_when_assumptions_fail() {
        let p = single_row(vec![0.9, 0.1]);
        let err = verify_dynamism_theorem(&p, &single_row(vec![1.0, 0.0]), &PolicyTable::uniform(2, 1), &[vec![1.0, 0.0]]);
        assert!(matches!(err, Err(MdpError::Precondition(_))));
    }

    #[test]
    fn mixed_start_can_violate_the_inequality() {
        // Flattening state 0's row pushes mass onto entry 0, which state 1's
        // row already overweights; the even mixture moves away from uniform.
        let third = 1.0 / 3.0;
        let p = Kernel::from_rows(vec![
            vec![vec![0.0f64, 0.3, 0.7]],
            vec![vec![0.7, 0.3, 0.0]],
            vec![vec![third, third, third]],
        ])
        .unwrap();
        let pt = Kernel::from_rows(vec![
            vec![vec![0.1, 0.3, 0.6]],
            vec![vec![0.7, 0.3, 0.0]],
            vec![vec![third, third, third]],
        ])
        .unwrap();
        assert!(check_dynamism_assumptions(&p, &pt).unwrap());
        let pi = PolicyTable::uniform(3, 1);
        let points = verify_dynamism_theorem(&p, &pt, &pi, &[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]]).unwrap();
        assert!(points.all_pass());
        let mixed = verify_dynamism_theorem(&p, &pt, &pi, &[vec![0.5, 0.5, 0.0]]).unwrap();
        let c = &mixed.cases[0];
        assert!(!c.pass);
        assert!((c.before.linf - 1.0 / 30.0).abs() < 1e-12);
        assert!((c.after.linf - 1.0 / 15.0).abs() < 1e-12);
    }

    #[test]
    fn fuzzer_is_deterministic_and_passes() {
        let run = |seed| fuzz_dynamism_theorem(&mut Rng::seed_from_u64(seed), 2_000, 6).unwrap();
        let a = run(3);
        assert_eq!(a, run(3));
        assert!(a.iter().all(|t| t.pass));
        assert!(a.iter().all(|t| (2..=6).contains(&t.n_states)));
    }
}
