//! Gauss-Legendre quadrature on the reference interval [-1, 1].
//!
//! An n-point rule integrates polynomials up to degree 2n-1 exactly. Nodes
//! are the roots of the Legendre polynomial P_n, found by Newton iteration
//! from Chebyshev initial guesses; weights are 2 / ((1 - x^2) P_n'(x)^2).

use crate::error::{Result, SolverError};

/// Nodes and weights of a quadrature rule on [-1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct QuadRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Value and derivative of the Legendre polynomial P_n at x, by the
/// three-term recurrence together with P'_{k+1} = P'_{k-1} + (2k+1) P_k.
fn legendre_and_derivative(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let mut p_prev = 1.0;
    let mut p = x;
    let mut d_prev = 0.0;
    let mut d = 1.0;
    for k in 1..n {
        let kf = k as f64;
        let p_next = ((2.0 * kf + 1.0) * x * p - kf * p_prev) / (kf + 1.0);
        let d_next = d_prev + (2.0 * kf + 1.0) * p;
        p_prev = p;
        p = p_next;
        d_prev = d;
        d = d_next;
    }
    (p, d)
}

/// Build the n-point Gauss-Legendre rule.
pub fn gauss_legendre(n: usize) -> Result<QuadRule> {
    if n == 0 {
        return Err(SolverError::InvalidBasis(
            "quadrature rule needs at least one point".into(),
        ));
    }
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    // Roots come in +/- pairs; solve for the non-negative half and mirror so
    // the rule is exactly symmetric in floating point.
    for i in 0..(n + 1) / 2 {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (pn, d) = legendre_and_derivative(n, x);
            let dx = pn / d;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        // One clean-up iteration, then the weight from the settled root.
        let (pn, d) = legendre_and_derivative(n, x);
        x -= pn / d;
        let (_, dpn) = legendre_and_derivative(n, x);
        let w = 2.0 / ((1.0 - x * x) * dpn * dpn);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        // The middle node of an odd rule is exactly zero.
        nodes[n / 2] = 0.0;
    }
    Ok(QuadRule { nodes, weights })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn one_point_rule_is_midpoint() {
        let q = gauss_legendre(1).unwrap();
        assert_eq!(q.nodes, vec![0.0]);
        assert_eq!(q.weights, vec![2.0]);
    }

    #[test]
    fn two_point_rule() {
        let q = gauss_legendre(2).unwrap();
        let x = 1.0 / 3f64.sqrt();
        assert_abs_diff_eq!(q.nodes[0], -x, epsilon = 1e-15);
        assert_abs_diff_eq!(q.nodes[1], x, epsilon = 1e-15);
        assert_abs_diff_eq!(q.weights[0], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(q.weights[1], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn three_point_rule_integrates_quartic() {
        // int_{-1}^{1} x^4 dx = 2/5, exact for a 3-point rule (degree 5).
        let q = gauss_legendre(3).unwrap();
        let s: f64 = q
            .nodes
            .iter()
            .zip(&q.weights)
            .map(|(x, w)| w * x.powi(4))
            .sum();
        assert_abs_diff_eq!(s, 0.4, epsilon = 1e-15);
    }

    #[test]
    fn exactness_up_to_degree_2n_minus_1() {
        // Integrate random polynomials of every exact degree with fixed
        // coefficients derived from a small linear congruential sequence.
        let mut state = 0x2545f4914f6cdd1du64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        for n in 1..=6 {
            let q = gauss_legendre(n).unwrap();
            let deg = 2 * n - 1;
            let coeffs: Vec<f64> = (0..=deg).map(|_| next()).collect();
            // Exact integral: sum over even powers of 2 c_k / (k + 1).
            let exact: f64 = coeffs
                .iter()
                .enumerate()
                .filter(|(k, _)| k % 2 == 0)
                .map(|(k, c)| 2.0 * c / (k as f64 + 1.0))
                .sum();
            let num: f64 = q
                .nodes
                .iter()
                .zip(&q.weights)
                .map(|(x, w)| {
                    let mut p = 0.0;
                    for c in coeffs.iter().rev() {
                        p = p * x + c;
                    }
                    w * p
                })
                .sum();
            assert_abs_diff_eq!(num, exact, epsilon = 1e-12);
        }
    }

    #[test]
    fn weights_sum_to_two() {
        for n in 1..=12 {
            let q = gauss_legendre(n).unwrap();
            let s: f64 = q.weights.iter().sum();
            assert_abs_diff_eq!(s, 2.0, epsilon = 1e-13);
        }
    }

    #[test]
    fn nodes_are_symmetric_bitwise() {
        for n in 1..=9 {
            let q = gauss_legendre(n).unwrap();
            for i in 0..n {
                assert_eq!(q.nodes[i], -q.nodes[n - 1 - i]);
                assert_eq!(q.weights[i], q.weights[n - 1 - i]);
            }
        }
    }

    #[test]
    fn zero_points_rejected() {
        assert!(gauss_legendre(0).is_err());
    }
}
