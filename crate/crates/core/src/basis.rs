//! Orthonormal Legendre basis on the reference interval [-1, 1].
//!
//! psi_n(x) = sqrt((2n+1)/2) P_n(x), so that int psi_i psi_j dx = delta_ij
//! and the modal mass matrix is the identity. psi_n(-x) = (-1)^n psi_n(x),
//! psi_n(1) = sqrt((2n+1)/2).

use crate::error::{Result, SolverError};

/// Evaluate psi_0..psi_deg at x in [-1, 1] (inclusive), into `out`.
///
/// `out.len()` must be `deg + 1`. Values come from the Legendre three-term
/// recurrence scaled by the orthonormalisation factor.
pub fn eval(deg: usize, x: f64, out: &mut [f64]) -> Result<()> {
    if out.len() != deg + 1 {
        return Err(SolverError::InvalidBasis(format!(
            "output slice holds {} values, need {}",
            out.len(),
            deg + 1
        )));
    }
    if !(-1.0..=1.0).contains(&x) {
        return Err(SolverError::InvalidBasis(format!(
            "evaluation point {x} outside [-1, 1]"
        )));
    }
    let mut p_prev = 1.0;
    let mut p = x;
    out[0] = norm(0);
    if deg >= 1 {
        out[1] = norm(1) * p;
    }
    for n in 1..deg {
        let nf = n as f64;
        let p_next = ((2.0 * nf + 1.0) * x * p - nf * p_prev) / (nf + 1.0);
        p_prev = p;
        p = p_next;
        out[n + 1] = norm(n + 1) * p;
    }
    Ok(())
}

/// Evaluate values and first derivatives of psi_0..psi_deg at x.
pub fn eval_with_deriv(deg: usize, x: f64, values: &mut [f64], derivs: &mut [f64]) -> Result<()> {
    eval(deg, x, values)?;
    if derivs.len() != deg + 1 {
        return Err(SolverError::InvalidBasis(format!(
            "derivative slice holds {} values, need {}",
            derivs.len(),
            deg + 1
        )));
    }
    // P'_{n+1} = P'_{n-1} + (2n+1) P_n, valid on the closed interval.
    let mut p_prev = 1.0;
    let mut p = x;
    let mut d_prev = 0.0;
    let mut d = 1.0;
    derivs[0] = 0.0;
    if deg >= 1 {
        derivs[1] = norm(1);
    }
    for n in 1..deg {
        let nf = n as f64;
        let p_next = ((2.0 * nf + 1.0) * x * p - nf * p_prev) / (nf + 1.0);
        let d_next = d_prev + (2.0 * nf + 1.0) * p;
        p_prev = p;
        p = p_next;
        d_prev = d;
        d = d_next;
        derivs[n + 1] = norm(n + 1) * d;
    }
    Ok(())
}

/// Orthonormalisation factor sqrt((2n+1)/2).
#[inline]
pub fn norm(n: usize) -> f64 {
    ((2.0 * n as f64 + 1.0) / 2.0).sqrt()
}

/// psi_n(1); on the left endpoint use (-1)^n times this value.
#[inline]
pub fn endpoint_value(n: usize) -> f64 {
    norm(n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::gauss_legendre;
    use approx::assert_abs_diff_eq;

    #[test]
    fn constant_mode_value() {
        let mut v = [0.0; 2];
        eval(1, 0.0, &mut v).unwrap();
        assert_abs_diff_eq!(v[0], 1.0 / 2f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(v[1], 0.0, epsilon = 1e-15);
    }

    #[test]
    fn linear_mode_at_right_endpoint() {
        let mut v = [0.0; 2];
        eval(1, 1.0, &mut v).unwrap();
        assert_abs_diff_eq!(v[1], (1.5f64).sqrt(), epsilon = 1e-15);
        assert_eq!(v[1], endpoint_value(1));
    }

    #[test]
    fn parity_holds() {
        let mut a = [0.0; 3];
        let mut b = [0.0; 3];
        eval(2, 0.3, &mut a).unwrap();
        eval(2, -0.3, &mut b).unwrap();
        for n in 0..=2 {
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            assert_abs_diff_eq!(b[n], sign * a[n], epsilon = 1e-15);
        }
    }

    #[test]
    fn mass_matrix_is_identity() {
        // With an (deg+1)-point rule the products psi_i psi_j (degree <= 2 deg)
        // are integrated exactly.
        for deg in 0..=4 {
            let q = gauss_legendre(deg + 1).unwrap();
            let mut vals = vec![0.0; deg + 1];
            let mut mass = vec![vec![0.0; deg + 1]; deg + 1];
            for (x, w) in q.nodes.iter().zip(&q.weights) {
                eval(deg, *x, &mut vals).unwrap();
                for i in 0..=deg {
                    for j in 0..=deg {
                        mass[i][j] += w * vals[i] * vals[j];
                    }
                }
            }
            for i in 0..=deg {
                for j in 0..=deg {
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert_abs_diff_eq!(mass[i][j], expect, epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let deg = 4;
        let h = 1e-6;
        for &x in &[-0.9, -0.35, 0.0, 0.2, 0.77] {
            let mut vp = vec![0.0; deg + 1];
            let mut vm = vec![0.0; deg + 1];
            let mut v = vec![0.0; deg + 1];
            let mut d = vec![0.0; deg + 1];
            eval(deg, x + h, &mut vp).unwrap();
            eval(deg, x - h, &mut vm).unwrap();
            eval_with_deriv(deg, x, &mut v, &mut d).unwrap();
            for n in 0..=deg {
                let fd = (vp[n] - vm[n]) / (2.0 * h);
                let scale = d[n].abs().max(1.0);
                assert!(
                    (fd - d[n]).abs() / scale < 1e-6,
                    "mode {n} at x = {x}: fd = {fd}, analytic = {}",
                    d[n]
                );
            }
        }
    }

    #[test]
    fn endpoint_derivatives_are_finite() {
        let deg = 5;
        let mut v = vec![0.0; deg + 1];
        let mut d = vec![0.0; deg + 1];
        for &x in &[-1.0, 1.0] {
            eval_with_deriv(deg, x, &mut v, &mut d).unwrap();
            // P_n'(1) = n (n + 1) / 2.
            for n in 0..=deg {
                let expect = norm(n) * (n * (n + 1)) as f64 / 2.0 * x.powi(n as i32 + 1);
                assert_abs_diff_eq!(d[n], expect, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn out_of_range_point_rejected() {
        let mut v = [0.0; 2];
        assert!(eval(1, 1.0000001, &mut v).is_err());
        assert!(eval(1, f64::NAN, &mut v).is_err());
    }

    #[test]
    fn wrong_output_length_rejected() {
        let mut v = [0.0; 2];
        assert!(eval(2, 0.0, &mut v).is_err());
    }
}
