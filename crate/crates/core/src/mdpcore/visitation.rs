use crate::scalar::Real;

use super::tabular::{validate_distribution, PolicyTable, TabularMdp, VisitationVector};
use super::MdpError;

/// Solves `A x = b` for dense square `A` (row-major) by Gaussian elimination
/// with partial pivoting. Returns `None` when a pivot vanishes.
pub fn solve_dense<T: Real>(n: usize, a: &[T], b: &[T]) -> Option<Vec<T>> {
    let mut m = a.to_vec();
    let mut x = b.to_vec();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| {
            m[i * n + col]
                .abs()
                .partial_cmp(&m[j * n + col].abs())
                .unwrap_or(std::cmp::Ordering::Equal)
        })?;
        if m[pivot * n + col].abs() <= T::min_positive_value() {
            return None;
        }
        if pivot != col {
            for k in 0..n {
                m.swap(col * n + k, pivot * n + k);
            }
            x.swap(col, pivot);
        }
        let diag = m[col * n + col];
        for row in col + 1..n {
            let factor = m[row * n + col] / diag;
            if factor == T::zero() {
                continue;
            }
            for k in col..n {
                m[row * n + k] = m[row * n + k] - factor * m[col * n + k];
            }
            x[row] = x[row] - factor * x[col];
        }
    }
    for row in (0..n).rev() {
        let mut acc = x[row];
        for k in row + 1..n {
            acc = acc - m[row * n + k] * x[k];
        }
        x[row] = acc / m[row * n + row];
    }
    Some(x)
}

/// Discounted state visitation `d = (1 - gamma) sum_t gamma^t (P_pi^T)^t start`,
/// obtained from the linear system `(I - gamma P_pi^T) d = (1 - gamma) start`.
pub fn exact_visitation<T: Real>(
    mdp: &TabularMdp<T>,
    policy: &PolicyTable<T>,
    start: &[T],
) -> Result<VisitationVector<T>, MdpError> {
    let n = mdp.n_states();
    if start.len() != n {
        return Err(MdpError::Shape("start distribution length differs from n_states".into()));
    }
    validate_distribution(start)?;
    let p_pi = mdp.kernel().under_policy(policy)?;
    let gamma = mdp.gamma();

    // A = I - gamma P_pi^T
    let mut a = vec![T::zero(); n * n];
    for i in 0..n {
        for j in 0..n {
            let delta = if i == j { T::one() } else { T::zero() };
            a[i * n + j] = delta - gamma * p_pi[j * n + i];
        }
    }
    let rhs: Vec<T> = start.iter().map(|s| (T::one() - gamma) * *s).collect();
    let x = solve_dense(n, &a, &rhs).ok_or(MdpError::Numerical { residual: f64::INFINITY })?;

    let residual = (0..n)
        .map(|i| {
            let ax: T = (0..n).map(|j| a[i * n + j] * x[j]).sum();
            (ax - rhs[i]).abs()
        })
        .fold(T::zero(), T::max);
    let limit = T::lit(1e-8).max(T::epsilon() * T::lit(1e3) * T::from_usize(n).unwrap_or(T::one()));
    if !(residual <= limit) {
        return Err(MdpError::Numerical { residual: residual.to_f64().unwrap_or(f64::NAN) });
    }
    // Round-off can leave entries like -1e-17; clamp before validating.
    let d: Vec<T> = x.into_iter().map(|v| v.max(T::zero())).collect();
    VisitationVector::new(d)
}

/// `max_s d_star[s] / d_train[s]` with `0/0 = 0` and `x/0 = +inf` for `x > 0`.
pub fn mismatch_coefficient<T: Real>(
    d_star: &VisitationVector<T>,
    d_train: &VisitationVector<T>,
) -> Result<T, MdpError> {
    if d_star.len() != d_train.len() {
        return Err(MdpError::Shape(format!(
            "visitation lengths differ: {} vs {}",
            d_star.len(),
            d_train.len()
        )));
    }
    let mut worst = T::zero();
    for (num, den) in d_star.as_slice().iter().zip(d_train.as_slice()) {
        let ratio = if *den == T::zero() {
            if *num == T::zero() {
                T::zero()
            } else {
                return Ok(T::infinity());
            }
        } else {
            *num / *den
        };
        worst = worst.max(ratio);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::super::tabular::Kernel;
    use super::*;

    fn mdp(rows: Vec<Vec<Vec<f64>>>, gamma: f64) -> TabularMdp<f64> {
        let k = Kernel::from_rows(rows).unwrap();
        let (n, m) = (k.n_states(), k.n_actions());
        let mut rho = vec![0.0; n];
        rho[0] = 1.0;
        TabularMdp::new(k, vec![0.0; n * m], gamma, rho).unwrap()
    }

    #[test]
    fn single_state_is_all_mass() {
        for gamma in [0.0, 0.5, 0.99] {
            let m = mdp(vec![vec![vec![1.0], vec![1.0]]], gamma);
            let d = exact_visitation(&m, &PolicyTable::uniform(1, 2), &[1.0]).unwrap();
            assert_eq!(d.as_slice(), &[1.0]);
        }
    }

    #[test]
    fn deterministic_two_state_chain() {
        // (1 - g) [1, g + g^2 + ...] = [0.1, 0.9]; the power-iteration
        // cross-check lives in the integration tests.
        let m = mdp(vec![vec![vec![0.0, 1.0]], vec![vec![0.0, 1.0]]], 0.9);
        let d = exact_visitation(&m, &PolicyTable::uniform(2, 1), &[1.0, 0.0]).unwrap();
        assert!((d[0] - 0.1).abs() < 1e-12 && (d[1] - 0.9).abs() < 1e-12, "{d:?}");
    }

    #[test]
    fn symmetric_swap_chain_stays_uniform() {
        let m = mdp(vec![vec![vec![0.0, 1.0]], vec![vec![1.0, 0.0]]], 0.7);
        let d = exact_visitation(&m, &PolicyTable::uniform(2, 1), &[0.5, 0.5]).unwrap();
        assert!((d[0] - 0.5).abs() < 1e-12 && (d[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn mismatch_examples() {
        let v = |x: Vec<f64>| VisitationVector::new(x).unwrap();
        assert_eq!(mismatch_coefficient(&v(vec![0.3, 0.7]), &v(vec![0.3, 0.7])).unwrap(), 1.0);
        let r = mismatch_coefficient(&v(vec![0.9, 0.1]), &v(vec![0.5, 0.5])).unwrap();
        assert!((r - 1.8).abs() < 1e-15);
        assert_eq!(mismatch_coefficient(&v(vec![1.0, 0.0]), &v(vec![0.0, 1.0])).unwrap(), f64::INFINITY);
        // 0/0 contributes nothing.
        assert_eq!(mismatch_coefficient(&v(vec![1.0, 0.0]), &v(vec![1.0, 0.0])).unwrap(), 1.0);
        assert!(matches!(
            mismatch_coefficient(&v(vec![1.0]), &v(vec![0.5, 0.5])),
            Err(MdpError::Shape(_))
        ));
    }

    #[test]
    fn solver_reports_singular_matrix() {
        assert!(solve_dense(2, &[1.0f64, 2.0, 2.0, 4.0], &[1.0, 2.0]).is_none());
    }
}
