//! Catalogue of analytic equilibria for the Euler-with-gravity system.
//!
//! Each entry supplies pointwise evaluators for the conserved equilibrium
//! state, its physical flux, the gravity gradient of the balancing
//! potential, and the gravity source, together with the benchmark domain
//! and final time. All evaluators are pure functions of position; the
//! well-balanced scheme relies on their bitwise determinism.

use std::sync::Arc;

use crate::error::{Result, SolverError};
use crate::euler::{self, Primitive};

type StateFn = Arc<dyn Fn([f64; 2]) -> [f64; 4] + Send + Sync>;
type PrimFn = Arc<dyn Fn([f64; 2]) -> Primitive + Send + Sync>;
type GradFn = Arc<dyn Fn([f64; 2]) -> [f64; 2] + Send + Sync>;

/// Ratio of specific heats shared by every benchmark case.
pub const GAMMA: f64 = 1.4;

/// Guard radius below which radial formulas are frozen to avoid division
/// by zero at the exact singular point.
pub const RADIAL_GUARD: f64 = 1e-12;

/// Outer damping and inner reset regions used by the disc runs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BufferSpec {
    /// Cells with centre radius below this are reset to the equilibrium
    /// projection after every stage.
    pub reset_radius: f64,
    /// Residuals are scaled by 1 / (1 + exp(r^2 - damp_r2)) at cell centres.
    pub damp_r2: f64,
}

impl BufferSpec {
    /// Damping factor at radius r: close to 1 inside, 1/2 at sqrt(damp_r2),
    /// close to 0 outside.
    pub fn damp(&self, r: f64) -> f64 {
        1.0 / (1.0 + (r * r - self.damp_r2).exp())
    }
}

#[derive(Clone)]
pub struct Equilibrium {
    pub name: String,
    pub dim: usize,
    pub gamma: f64,
    pub bounds: [(f64, f64); 2],
    pub t_final: f64,
    /// Centre of the Gaussian pressure perturbation, when the case defines
    /// one.
    pub pulse_center: Option<[f64; 2]>,
    pub buffers: Option<BufferSpec>,
    conserved: StateFn,
    primitive: PrimFn,
    grad_phi: GradFn,
    /// The all-zero pseudo-equilibrium used to check that the well-balanced
    /// residual degenerates to the classical one.
    zero_state: bool,
}

impl std::fmt::Debug for Equilibrium {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Equilibrium")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("bounds", &self.bounds)
            .field("t_final", &self.t_final)
            .finish()
    }
}

impl Equilibrium {
    /// Conserved equilibrium state at a physical point.
    #[inline]
    pub fn conserved_at(&self, x: [f64; 2]) -> [f64; 4] {
        (self.conserved)(x)
    }

    /// Primitive equilibrium state at a physical point.
    #[inline]
    pub fn primitive_at(&self, x: [f64; 2]) -> Primitive {
        (self.primitive)(x)
    }

    /// Gradient of the balancing potential at a physical point.
    #[inline]
    pub fn grad_phi_at(&self, x: [f64; 2]) -> [f64; 2] {
        (self.grad_phi)(x)
    }

    /// Physical flux of the equilibrium state along `axis`.
    #[inline]
    pub fn flux_at(&self, x: [f64; 2], axis: usize) -> [f64; 4] {
        if self.zero_state {
            return [0.0; 4];
        }
        let w = self.conserved_at(x);
        let p = euler::d2::pressure(&w, self.gamma);
        euler::d2::flux(&w, p, axis)
    }

    /// Gravity source of the equilibrium state.
    #[inline]
    pub fn source_at(&self, x: [f64; 2]) -> [f64; 4] {
        if self.zero_state {
            return [0.0; 4];
        }
        euler::d2::source(&self.conserved_at(x), self.grad_phi_at(x))
    }

    pub fn is_zero_state(&self) -> bool {
        self.zero_state
    }

    /// Gravity field of this equilibrium without any orbiting perturber.
    pub fn gravity(&self) -> Gravity {
        Gravity {
            base: self.grad_phi.clone(),
            planet: None,
        }
    }

    /// Initial condition with a Gaussian pressure perturbation of amplitude
    /// `eta` added at the catalogue centre. `eta == 0` reproduces the
    /// equilibrium primitives bit for bit.
    pub fn pulsed_initial_condition(
        &self,
        eta: f64,
    ) -> Result<impl Fn([f64; 2]) -> Primitive + Send + Sync> {
        let center = self.pulse_center.ok_or_else(|| {
            SolverError::InvalidConfig(format!(
                "case '{}' defines no pressure perturbation",
                self.name
            ))
        })?;
        let prim = self.primitive.clone();
        let dim = self.dim;
        Ok(move |x: [f64; 2]| {
            let mut p = prim(x);
            let mut r2 = (x[0] - center[0]) * (x[0] - center[0]);
            if dim == 2 {
                r2 += (x[1] - center[1]) * (x[1] - center[1]);
            }
            // The reference-state factor rho0 g / p0 equals one for every
            // catalogue case, kept explicit for the record.
            let shape = (-(1.0 * r2) / 0.01).exp();
            p.pressure += eta * shape;
            p
        })
    }
}

/// Gravity gradient used during a run: the static equilibrium field plus an
/// optional perturber on a circular orbit.
#[derive(Clone)]
pub struct Gravity {
    base: GradFn,
    planet: Option<Planet>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Planet {
    /// Mass ratio of the perturber.
    pub eta: f64,
    /// Orbit radius.
    pub orbit_radius: f64,
    /// Softening length shared with the central potential.
    pub softening: f64,
}

impl Planet {
    /// Position at time t on the circular orbit with the central field's
    /// orbital speed sqrt(1 / r_c).
    pub fn position(&self, t: f64) -> [f64; 2] {
        let rc = self.orbit_radius;
        let omega = rc.powf(-1.5);
        [rc * (omega * t).cos(), rc * (omega * t).sin()]
    }

    /// Orbital period 2 pi r_c^{3/2}.
    pub fn period(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.orbit_radius.powf(1.5)
    }
}

impl Gravity {
    /// Total potential gradient at position x and time t.
    #[inline]
    pub fn grad_phi(&self, x: [f64; 2], t: f64) -> [f64; 2] {
        let mut g = (self.base)(x);
        if let Some(pl) = &self.planet {
            if pl.eta != 0.0 {
                let xp = pl.position(t);
                let dx = x[0] - xp[0];
                let dy = x[1] - xp[1];
                let denom = (dx * dx + dy * dy + pl.softening * pl.softening).powf(1.5);
                g[0] += pl.eta * dx / denom;
                g[1] += pl.eta * dy / denom;
            }
        }
        g
    }

    pub fn with_planet(mut self, planet: Planet) -> Self {
        self.planet = Some(planet);
        self
    }

    pub fn planet(&self) -> Option<&Planet> {
        self.planet.as_ref()
    }

    /// True when the field varies in time.
    pub fn time_dependent(&self) -> bool {
        self.planet.map_or(false, |p| p.eta != 0.0)
    }
}

fn from_primitive(
    name: &str,
    dim: usize,
    bounds: [(f64, f64); 2],
    t_final: f64,
    pulse_center: Option<[f64; 2]>,
    prim: impl Fn([f64; 2]) -> Primitive + Send + Sync + 'static,
    grad: impl Fn([f64; 2]) -> [f64; 2] + Send + Sync + 'static,
) -> Equilibrium {
    let prim: PrimFn = Arc::new(prim);
    let prim2 = prim.clone();
    Equilibrium {
        name: name.into(),
        dim,
        gamma: GAMMA,
        bounds,
        t_final,
        pulse_center,
        buffers: None,
        conserved: Arc::new(move |x| prim2(x).to_conserved(GAMMA).as_array()),
        primitive: prim,
        grad_phi: Arc::new(grad),
        zero_state: false,
    }
}

/// Isothermal hydrostatic column on [0, 1]: rho = p = exp(-x), v = 0,
/// constant gravity gradient 1.
pub fn hydrostatic_1d() -> Equilibrium {
    from_primitive(
        "hydro1d",
        1,
        [(0.0, 1.0), (0.0, 1.0)],
        10.0,
        Some([0.5, 0.0]),
        |x| Primitive {
            rho: (-x[0]).exp(),
            vel: [0.0, 0.0],
            pressure: (-x[0]).exp(),
        },
        |_| [1.0, 0.0],
    )
}

/// Two-dimensional hydrostatic state on [0, 1]^2: rho = p = exp(-(x + y)),
/// potential gradient (1, 1).
pub fn hydrostatic_2d() -> Equilibrium {
    from_primitive(
        "hydro2d",
        2,
        [(0.0, 1.0), (0.0, 1.0)],
        10.0,
        Some([0.3, 0.3]),
        |x| {
            let e = (-(x[0] + x[1])).exp();
            Primitive {
                rho: e,
                vel: [0.0, 0.0],
                pressure: e,
            }
        },
        |_| [1.0, 1.0],
    )
}

/// Moving equilibrium on [0, 1] with constant mass flux rho v = 1:
/// rho = exp(-x), v = exp(x), p = exp(-gamma x), and the potential gradient
/// exp(x) (-exp(x) + gamma exp(-gamma x)) that balances it.
pub fn moving_1d() -> Equilibrium {
    from_primitive(
        "moving1d",
        1,
        [(0.0, 1.0), (0.0, 1.0)],
        10.0,
        Some([0.3, 0.0]),
        |x| Primitive {
            rho: (-x[0]).exp(),
            vel: [x[0].exp(), 0.0],
            pressure: (-GAMMA * x[0]).exp(),
        },
        |x| {
            let ex = x[0].exp();
            [ex * (-ex + GAMMA * (-GAMMA * x[0]).exp()), 0.0]
        },
    )
}

/// Triangular vortex on [0, 1]^2 held against an additional radial
/// potential alpha / r, alpha = 0.01, centred at (1/2, 1/2). The azimuthal
/// speed rises linearly to 1 at r = 0.2, falls back to 0 at r = 0.4, and
/// the pressure integrates the radial balance across the three branches.
/// Softening scale of the vortex potential. The pressure carries a
/// -alpha*Phi term, so an unsoftened 1/r turns it negative inside
/// r < alpha/5 and fine grids place quadrature points there. The softened
/// potential keeps the exact balance (the gradient below is its true
/// gradient) and bounds the central pressure at 5 - alpha/eps = 2.5.
pub const GRESHO_SOFTENING: f64 = 1.0e-2;

pub fn gresho_vortex() -> Equilibrium {
    const ALPHA: f64 = 0.01;
    const CX: f64 = 0.5;
    const CY: f64 = 0.5;
    let prim = move |x: [f64; 2]| {
        let dx = x[0] - CX;
        let dy = x[1] - CY;
        let r2 = dx * dx + dy * dy;
        let r = r2.sqrt().max(RADIAL_GUARD);
        let phi = 1.0 / (r2 + GRESHO_SOFTENING * GRESHO_SOFTENING).sqrt();
        let four_ln2 = 4.0 * std::f64::consts::LN_2;
        let (vx, vy, p) = if r < 0.2 {
            // v_theta = 5 r: the angular factor v_theta / r = 5 is smooth.
            (
                -5.0 * dy,
                5.0 * dx,
                5.0 + 12.5 * r * r - ALPHA * phi,
            )
        } else if r < 0.4 {
            let vt_over_r = 2.0 / r - 5.0;
            (
                -vt_over_r * dy,
                vt_over_r * dx,
                9.0 - 4.0 * (0.2f64).ln() + 12.5 * r * r - 20.0 * r + 4.0 * r.ln() - ALPHA * phi,
            )
        } else {
            (0.0, 0.0, 3.0 + four_ln2 - ALPHA * phi)
        };
        Primitive {
            rho: 1.0,
            vel: [vx, vy],
            pressure: p,
        }
    };
    let grad = move |x: [f64; 2]| {
        let dx = x[0] - CX;
        let dy = x[1] - CY;
        let s = dx * dx + dy * dy + GRESHO_SOFTENING * GRESHO_SOFTENING;
        // grad of alpha (r^2 + eps^2)^{-1/2} pulled back to Cartesian form.
        let f = -ALPHA / (s * s.sqrt());
        [f * dx, f * dy]
    };
    from_primitive(
        "gresho",
        2,
        [(0.0, 1.0), (0.0, 1.0)],
        1.0,
        None,
        prim,
        grad,
    )
}

/// Disc parameters shared between the equilibrium and the perturber runs.
pub const DISC_ASPECT: f64 = 0.03;
pub const DISC_SOFTENING: f64 = 0.01;
pub const DISC_TAPER_RADIUS: f64 = 4.2;
pub const DISC_TAPER_EXPONENT: f64 = 20.0;
pub const DISC_ORBIT_RADIUS: f64 = 2.2;

/// Radial taper of the disc surface density.
#[inline]
pub fn disc_taper(r: f64) -> f64 {
    1.0 / (1.0 + (r / DISC_TAPER_RADIUS).powf(DISC_TAPER_EXPONENT))
}

/// Cold rotating disc on [-6, 6]^2 around a softened point-mass potential.
///
/// rho tapers from 1 with `disc_taper`, the sound speed keeps a constant
/// aspect ratio (c_s = 0.03 sqrt(1/r)), and the azimuthal speed closes the
/// radial momentum balance against the softened potential and the tapered
/// pressure in closed form:
///   v^2 = r ((1/rho) dp/dr + dPhi/dr)
///       = a^2 (d'/d) - a^2 / r + r^2 / (r^2 + eps^2)^{3/2}.
/// Near the centre the softened attraction can no longer support rotation
/// against the pressure gradient; the square is clamped at zero there
/// (inside the reset buffer).
pub fn disc() -> Equilibrium {
    let a2 = DISC_ASPECT * DISC_ASPECT;
    let eps2 = DISC_SOFTENING * DISC_SOFTENING;
    let prim = move |x: [f64; 2]| {
        let r = (x[0] * x[0] + x[1] * x[1]).sqrt().max(RADIAL_GUARD);
        let s = (r / DISC_TAPER_RADIUS).powf(DISC_TAPER_EXPONENT);
        let d = 1.0 / (1.0 + s);
        let dlogd = -DISC_TAPER_EXPONENT * s / (r * (1.0 + s));
        let vk2_soft = r * r / (r * r + eps2).powf(1.5);
        let vt2 = (a2 * r * dlogd - a2) / r + vk2_soft;
        let vt = vt2.max(0.0).sqrt();
        Primitive {
            rho: d,
            vel: [-vt * x[1] / r, vt * x[0] / r],
            pressure: a2 * d / r,
        }
    };
    let grad = move |x: [f64; 2]| {
        let r2 = x[0] * x[0] + x[1] * x[1];
        let denom = (r2 + eps2).powf(1.5);
        [x[0] / denom, x[1] / denom]
    };
    let mut eq = from_primitive(
        "disc",
        2,
        [(-6.0, 6.0), (-6.0, 6.0)],
        2.0 * std::f64::consts::PI * DISC_ORBIT_RADIUS.powf(1.5),
        None,
        prim,
        grad,
    );
    eq.buffers = Some(BufferSpec {
        reset_radius: 0.75,
        damp_r2: 15.0,
    });
    eq
}

/// Perturber of mass ratio `eta` on the disc's circular orbit at r = 2.2.
pub fn disc_planet(eta: f64) -> Planet {
    Planet {
        eta,
        orbit_radius: DISC_ORBIT_RADIUS,
        softening: DISC_SOFTENING,
    }
}

/// Spatially constant state with zero gravity, for free-stream and
/// conservation tests.
pub fn uniform(dim: usize, prim: Primitive) -> Equilibrium {
    from_primitive(
        "uniform",
        dim,
        [(0.0, 1.0), (0.0, 1.0)],
        1.0,
        None,
        move |_| prim,
        |_| [0.0, 0.0],
    )
}

/// The all-zero reference state: using it in the well-balanced residual
/// must reproduce the classical residual bit for bit.
pub fn zero_reference(dim: usize) -> Equilibrium {
    Equilibrium {
        name: "zero".into(),
        dim,
        gamma: GAMMA,
        bounds: [(0.0, 1.0), (0.0, 1.0)],
        t_final: 1.0,
        pulse_center: None,
        buffers: None,
        conserved: Arc::new(|_| [0.0; 4]),
        primitive: Arc::new(|_| Primitive {
            rho: 0.0,
            vel: [0.0, 0.0],
            pressure: 0.0,
        }),
        grad_phi: Arc::new(|_| [0.0, 0.0]),
        zero_state: true,
    }
}

/// Catalogue lookup by case name.
pub fn by_name(name: &str) -> Result<Equilibrium> {
    match name {
        "hydro1d" => Ok(hydrostatic_1d()),
        "hydro2d" => Ok(hydrostatic_2d()),
        "moving1d" => Ok(moving_1d()),
        "gresho" => Ok(gresho_vortex()),
        "disc" => Ok(disc()),
        other => Err(SolverError::InvalidConfig(format!(
            "unknown case '{other}' (expected hydro1d, hydro2d, moving1d, gresho, disc)"
        ))),
    }
}
