//! Compressible Euler equations with a gravity source term.
//!
//! Conserved state w = (rho, rho v, E) with E = p/(gamma - 1) + rho |v|^2 / 2.
//! Flux along axis a: (rho v_a, rho v_a v + p e_a, v_a (E + p)).
//! Gravity source: s = (0, -rho grad(Phi), -(rho v) . grad(Phi)).
//! The local Lax-Friedrichs flux uses the dissipative convention
//! fhat(a, b) = (f(a) + f(b)) / 2 - alpha (b - a) / 2 with alpha the largest
//! |v_n| + c_s over the two traces.

use crate::error::{Result, SolverError};

/// Conserved variables; `mom[1]` is zero for one-dimensional states.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Conserved {
    pub rho: f64,
    pub mom: [f64; 2],
    pub energy: f64,
}

/// Primitive variables; `vel[1]` is zero for one-dimensional states.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Primitive {
    pub rho: f64,
    pub vel: [f64; 2],
    pub pressure: f64,
}

impl Primitive {
    /// Total energy and momentum from primitive data.
    pub fn to_conserved(&self, gamma: f64) -> Conserved {
        let ke = 0.5 * self.rho * (self.vel[0] * self.vel[0] + self.vel[1] * self.vel[1]);
        Conserved {
            rho: self.rho,
            mom: [self.rho * self.vel[0], self.rho * self.vel[1]],
            energy: self.pressure / (gamma - 1.0) + ke,
        }
    }
}

impl Conserved {
    /// Invert the conserved-to-primitive map. Fails on non-positive density
    /// or pressure.
    pub fn to_primitive(&self, gamma: f64) -> Result<Primitive> {
        if !(self.rho > 0.0) {
            return Err(SolverError::Inadmissible {
                context: "conserved-to-primitive".into(),
                rho: self.rho,
                pressure: f64::NAN,
            });
        }
        let vx = self.mom[0] / self.rho;
        let vy = self.mom[1] / self.rho;
        let p = (gamma - 1.0) * (self.energy - 0.5 * (self.mom[0] * vx + self.mom[1] * vy));
        if !(p > 0.0) {
            return Err(SolverError::Inadmissible {
                context: "conserved-to-primitive".into(),
                rho: self.rho,
                pressure: p,
            });
        }
        Ok(Primitive {
            rho: self.rho,
            vel: [vx, vy],
            pressure: p,
        })
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.rho, self.mom[0], self.mom[1], self.energy]
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        Conserved {
            rho: a[0],
            mom: [a[1], a[2]],
            energy: a[3],
        }
    }
}

/// Adiabatic sound speed sqrt(gamma p / rho).
pub fn sound_speed(rho: f64, pressure: f64, gamma: f64) -> Result<f64> {
    if !(rho > 0.0) || !(pressure > 0.0) {
        return Err(SolverError::Inadmissible {
            context: "sound speed".into(),
            rho,
            pressure,
        });
    }
    Ok((gamma * pressure / rho).sqrt())
}

/// Physical flux of the conserved state along `axis` (0 or 1).
pub fn physical_flux(w: &Conserved, axis: usize, gamma: f64) -> Result<[f64; 4]> {
    let prim = w.to_primitive(gamma)?;
    Ok(d2::flux(&w.as_array(), prim.pressure, axis))
}

/// Gravity source (0, -rho grad_phi, -(rho v) . grad_phi); no admissibility
/// requirement since only products of state entries appear.
pub fn gravity_source(w: &Conserved, grad_phi: [f64; 2]) -> [f64; 4] {
    d2::source(&w.as_array(), grad_phi)
}

/// Local Lax-Friedrichs flux between the interior trace `a` and the exterior
/// trace `b` along `axis`.
pub fn llf_flux(a: &Conserved, b: &Conserved, axis: usize, gamma: f64) -> Result<[f64; 4]> {
    let pa = a.to_primitive(gamma)?;
    let pb = b.to_primitive(gamma)?;
    let aa = a.as_array();
    let bb = b.as_array();
    let alpha = d2::signal_speed(&aa, pa.pressure, axis, gamma)
        .max(d2::signal_speed(&bb, pb.pressure, axis, gamma));
    Ok(d2::llf_with_alpha(
        &aa,
        pa.pressure,
        &bb,
        pb.pressure,
        alpha,
        axis,
    ))
}

/// One-dimensional kernels over (rho, rho v, E) triples. Pressure is passed
/// in where needed so it is computed once per point.
pub mod d1 {
    #[inline(always)]
    pub fn pressure(u: &[f64; 3], gamma: f64) -> f64 {
        (gamma - 1.0) * (u[2] - 0.5 * u[1] * u[1] / u[0])
    }

    #[inline(always)]
    pub fn flux(u: &[f64; 3], p: f64) -> [f64; 3] {
        let v = u[1] / u[0];
        [u[1], u[1] * v + p, v * (u[2] + p)]
    }

    /// |v| + c_s.
    #[inline(always)]
    pub fn signal_speed(u: &[f64; 3], p: f64, gamma: f64) -> f64 {
        let v = u[1] / u[0];
        v.abs() + (gamma * p / u[0]).sqrt()
    }

    #[inline(always)]
    pub fn llf_with_alpha(a: &[f64; 3], pa: f64, b: &[f64; 3], pb: f64, alpha: f64) -> [f64; 3] {
        let fa = flux(a, pa);
        let fb = flux(b, pb);
        let mut out = [0.0; 3];
        for i in 0..3 {
            out[i] = 0.5 * (fa[i] + fb[i]) - 0.5 * alpha * (b[i] - a[i]);
        }
        out
    }

    #[inline(always)]
    pub fn source(u: &[f64; 3], grad_phi: f64) -> [f64; 3] {
        [0.0, -u[0] * grad_phi, -u[1] * grad_phi]
    }
}

/// Two-dimensional kernels over (rho, rho v_x, rho v_y, E) quadruples.
pub mod d2 {
    #[inline(always)]
    pub fn pressure(u: &[f64; 4], gamma: f64) -> f64 {
        (gamma - 1.0) * (u[3] - 0.5 * (u[1] * u[1] + u[2] * u[2]) / u[0])
    }

    #[inline(always)]
    pub fn flux(u: &[f64; 4], p: f64, axis: usize) -> [f64; 4] {
        let vn = u[1 + axis] / u[0];
        let mut f = [u[1 + axis], vn * u[1], vn * u[2], vn * (u[3] + p)];
        f[1 + axis] += p;
        f
    }

    /// |v_n| + c_s along `axis`.
    #[inline(always)]
    pub fn signal_speed(u: &[f64; 4], p: f64, axis: usize, gamma: f64) -> f64 {
        let vn = u[1 + axis] / u[0];
        vn.abs() + (gamma * p / u[0]).sqrt()
    }

    #[inline(always)]
    pub fn llf_with_alpha(
        a: &[f64; 4],
        pa: f64,
        b: &[f64; 4],
        pb: f64,
        alpha: f64,
        axis: usize,
    ) -> [f64; 4] {
        let fa = flux(a, pa, axis);
        let fb = flux(b, pb, axis);
        let mut out = [0.0; 4];
        for i in 0..4 {
            out[i] = 0.5 * (fa[i] + fb[i]) - 0.5 * alpha * (b[i] - a[i]);
        }
        out
    }

    #[inline(always)]
    pub fn source(u: &[f64; 4], grad_phi: [f64; 2]) -> [f64; 4] {
        [
            0.0,
            -u[0] * grad_phi[0],
            -u[0] * grad_phi[1],
            -(u[1] * grad_phi[0] + u[2] * grad_phi[1]),
        ]
    }
}
