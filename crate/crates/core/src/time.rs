//! Strong stability preserving Runge-Kutta stepping and the two-term
//! timestep bound (hyperbolic CFL plus a gravity constraint).

use crate::error::{Result, SolverError};

/// Explicit Runge-Kutta coefficients. `a` is strictly lower triangular,
/// stored as rows of length `stages`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tableau {
    pub name: &'static str,
    pub stages: usize,
    pub order: usize,
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
}

impl Tableau {
    fn checked(self) -> Self {
        let bsum: f64 = self.b.iter().sum();
        assert!(
            (bsum - 1.0).abs() <= 1e-10,
            "{}: weights sum to {bsum}",
            self.name
        );
        for (i, row) in self.a.iter().enumerate() {
            let rs: f64 = row.iter().sum();
            assert!(
                (rs - self.c[i]).abs() <= 1e-10,
                "{}: row {i} sums to {rs}, abscissa {}",
                self.name,
                self.c[i]
            );
        }
        let defect = order_defect(&self, self.order);
        assert!(
            defect <= 1e-9,
            "{}: order-{} condition defect {defect}",
            self.name,
            self.order
        );
        self
    }

    /// Heun's two-stage second-order scheme.
    pub fn ssp22() -> Self {
        Tableau {
            name: "SSP22",
            stages: 2,
            order: 2,
            a: vec![vec![0.0, 0.0], vec![1.0, 0.0]],
            b: vec![0.5, 0.5],
            c: vec![0.0, 1.0],
        }
        .checked()
    }

    /// The classical three-stage third-order scheme.
    pub fn ssp33() -> Self {
        Tableau {
            name: "SSP33",
            stages: 3,
            order: 3,
            a: vec![
                vec![0.0, 0.0, 0.0],
                vec![1.0, 0.0, 0.0],
                vec![0.25, 0.25, 0.0],
            ],
            b: vec![1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0],
            c: vec![0.0, 1.0, 0.5],
        }
        .checked()
    }

    /// Five-stage fourth-order scheme. The published decimal coefficients
    /// satisfy the order conditions only to about 1e-10, which is why the
    /// consistency checks carry tolerances instead of exact comparisons.
    pub fn ssp45() -> Self {
        Tableau {
            name: "SSP45",
            stages: 5,
            order: 4,
            a: vec![
                vec![0.0; 5],
                vec![0.39175222700392, 0.0, 0.0, 0.0, 0.0],
                vec![0.21766909633821, 0.36841059262959, 0.0, 0.0, 0.0],
                vec![0.08269208670950, 0.13995850206999, 0.25189177424738, 0.0, 0.0],
                vec![
                    0.06796628370320,
                    0.11503469844438,
                    0.20703489864929,
                    0.54497475021237,
                    0.0,
                ],
            ],
            b: vec![
                0.14681187618661,
                0.24848290924556,
                0.10425883036650,
                0.27443890091960,
                0.22600748319395,
            ],
            c: vec![
                0.0,
                0.39175222700392,
                0.58607968896779,
                0.47454236302687,
                0.93501063100924,
            ],
        }
        .checked()
    }

    /// Look up a shipped tableau by its label.
    pub fn by_name(name: &str) -> Result<Self> {
        match name.to_ascii_uppercase().as_str() {
            "SSP22" => Ok(Self::ssp22()),
            "SSP33" => Ok(Self::ssp33()),
            "SSP45" => Ok(Self::ssp45()),
            other => Err(SolverError::InvalidConfig(format!(
                "unknown time scheme '{other}'"
            ))),
        }
    }

    /// Time scheme paired with a spatial scheme of the given order label:
    /// 2 -> SSP22, 3 -> SSP33, 4 and up -> SSP45.
    pub fn for_order(order: usize) -> Self {
        match order {
            0 | 1 | 2 => Self::ssp22(),
            3 => Self::ssp33(),
            _ => Self::ssp45(),
        }
    }

    /// Deliberately defective two-stage variant (half-step abscissa with
    /// Heun weights). Fails the second-order condition; kept as a negative
    /// control for the order measurement tests. Not validated.
    pub fn defective_ssp22() -> Self {
        Tableau {
            name: "SSP22-defective",
            stages: 2,
            order: 1,
            a: vec![vec![0.0, 0.0], vec![0.5, 0.0]],
            b: vec![0.5, 0.5],
            c: vec![0.0, 0.5],
        }
    }

    /// Deliberately defective three-stage variant whose weights sum to 2/3.
    /// Not even first-order consistent; negative control. Not validated.
    pub fn defective_ssp33() -> Self {
        Tableau {
            name: "SSP33-defective",
            stages: 3,
            order: 1,
            a: vec![
                vec![0.0, 0.0, 0.0],
                vec![1.0, 0.0, 0.0],
                vec![0.25, 0.25, 0.0],
            ],
            b: vec![1.0 / 6.0, 1.0 / 6.0, 1.0 / 3.0],
            c: vec![0.0, 1.0, 0.75],
        }
    }
}

/// Largest absolute defect among the rooted-tree order conditions up to
/// the requested order (supported through order 4).
pub fn order_defect(tab: &Tableau, order: usize) -> f64 {
    let s = tab.stages;
    let b = &tab.b;
    let c = &tab.c;
    let ac: Vec<f64> = (0..s)
        .map(|i| (0..s).map(|j| tab.a[i][j] * c[j]).sum())
        .collect();
    let mut defects = vec![(b.iter().sum::<f64>() - 1.0).abs()];
    if order >= 2 {
        let s2: f64 = (0..s).map(|i| b[i] * c[i]).sum();
        defects.push((s2 - 0.5).abs());
    }
    if order >= 3 {
        let s3a: f64 = (0..s).map(|i| b[i] * c[i] * c[i]).sum();
        let s3b: f64 = (0..s).map(|i| b[i] * ac[i]).sum();
        defects.push((s3a - 1.0 / 3.0).abs());
        defects.push((s3b - 1.0 / 6.0).abs());
    }
    if order >= 4 {
        let ac2: Vec<f64> = (0..s)
            .map(|i| (0..s).map(|j| tab.a[i][j] * c[j] * c[j]).sum())
            .collect();
        let aac: Vec<f64> = (0..s)
            .map(|i| (0..s).map(|j| tab.a[i][j] * ac[j]).sum())
            .collect();
        let s4a: f64 = (0..s).map(|i| b[i] * c[i] * c[i] * c[i]).sum();
        let s4b: f64 = (0..s).map(|i| b[i] * c[i] * ac[i]).sum();
        let s4c: f64 = (0..s).map(|i| b[i] * ac2[i]).sum();
        let s4d: f64 = (0..s).map(|i| b[i] * aac[i]).sum();
        defects.push((s4a - 0.25).abs());
        defects.push((s4b - 0.125).abs());
        defects.push((s4c - 1.0 / 12.0).abs());
        defects.push((s4d - 1.0 / 24.0).abs());
    }
    assert!(order <= 4, "order conditions implemented through order 4");
    defects.into_iter().fold(0.0, f64::max)
}

/// Hooks applied while stepping. After each stage state is formed (and
/// after the final combination) `post_state` runs on it; after each
/// residual evaluation `post_residual` runs on the raw residual. This
/// ordering is part of the scheme: the limiter and the inner-region reset
/// act on states, the buffer damping acts on residuals.
#[derive(Default)]
pub struct Hooks<'a> {
    pub post_state: Option<&'a mut dyn FnMut(&mut [f64], f64) -> Result<()>>,
    pub post_residual: Option<&'a mut dyn FnMut(&mut [f64]) -> Result<()>>,
}

impl<'a> Hooks<'a> {
    pub fn none() -> Self {
        Self::default()
    }

    fn state(&mut self, u: &mut [f64], t: f64) -> Result<()> {
        if let Some(h) = self.post_state.as_mut() {
            h(u, t)?;
        }
        Ok(())
    }

    fn residual(&mut self, r: &mut [f64]) -> Result<()> {
        if let Some(h) = self.post_residual.as_mut() {
            h(r)?;
        }
        Ok(())
    }
}

/// Reusable stage storage for one coefficient vector shape.
pub struct Integrator {
    pub tableau: Tableau,
    k: Vec<Vec<f64>>,
    stage_u: Vec<f64>,
}

impl Integrator {
    pub fn new(tableau: Tableau, len: usize) -> Self {
        let k = (0..tableau.stages).map(|_| vec![0.0; len]).collect();
        Integrator {
            tableau,
            k,
            stage_u: vec![0.0; len],
        }
    }

    /// One explicit step of size dt from time t. `residual` fills its
    /// output with d/dt of the coefficients at the given stage time.
    pub fn step<R>(
        &mut self,
        u: &mut [f64],
        t: f64,
        dt: f64,
        mut residual: R,
        hooks: &mut Hooks,
    ) -> Result<()>
    where
        R: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
    {
        let tab = &self.tableau;
        let n = u.len();
        assert_eq!(self.stage_u.len(), n, "integrator built for another shape");
        for i in 0..tab.stages {
            if i == 0 {
                self.stage_u.copy_from_slice(u);
            } else {
                self.stage_u.copy_from_slice(u);
                for j in 0..i {
                    let aij = tab.a[i][j];
                    if aij != 0.0 {
                        let kj = &self.k[j];
                        for (su, kv) in self.stage_u.iter_mut().zip(kj) {
                            *su += dt * aij * kv;
                        }
                    }
                }
            }
            let stage_t = t + tab.c[i] * dt;
            // Stage 0 is the accepted state from the previous step; the
            // hooks already saw it, so they run on the later stages only.
            if i > 0 {
                hooks.state(&mut self.stage_u, stage_t)?;
            }
            residual(stage_t, &self.stage_u, &mut self.k[i])?;
            hooks.residual(&mut self.k[i])?;
        }
        for i in 0..tab.stages {
            let bi = tab.b[i];
            if bi != 0.0 {
                let ki = &self.k[i];
                for (uv, kv) in u.iter_mut().zip(ki) {
                    *uv += dt * bi * kv;
                }
            }
        }
        hooks.state(u, t + dt)?;
        Ok(())
    }
}

/// Timestep bound constant in front of the hyperbolic term.
pub const DEFAULT_CFL: f64 = 0.2;

/// Per-cell data needed by the timestep bound: velocity magnitudes by
/// axis, the sound speed (all from the cell average), and the gravity
/// gradient magnitude at the cell centre.
pub struct CellSignal {
    pub vel_abs: [f64; 2],
    pub sound: f64,
    pub grad_phi_abs: f64,
}

/// Two-term timestep: the hyperbolic bound C/(2 deg + 1) over the summed
/// per-axis signal speeds, and a gravity bound c_s / (sqrt(2 gamma
/// (gamma - 1)) |grad Phi|). Returns the minimum over cells.
pub fn compute_dt<I>(
    cells: I,
    deg: usize,
    dx: [f64; 2],
    dim: usize,
    cfl: f64,
    gamma: f64,
) -> Result<f64>
where
    I: IntoIterator<Item = CellSignal>,
{
    let mut dt = f64::INFINITY;
    let grav_coef = 1.0 / (2.0 * gamma * (gamma - 1.0)).sqrt();
    let order_coef = cfl / (2.0 * deg as f64 + 1.0);
    for cell in cells {
        let mut speed_sum = 0.0;
        for axis in 0..dim {
            speed_sum += (cell.vel_abs[axis] + cell.sound) / dx[axis];
        }
        let hyper = order_coef / speed_sum;
        let mut local = hyper;
        if cell.grad_phi_abs > 0.0 {
            local = local.min(grav_coef * cell.sound / cell.grad_phi_abs);
        }
        dt = dt.min(local);
    }
    if !(dt.is_finite() && dt > 0.0) {
        return Err(SolverError::TimeStepUnderflow { t: f64::NAN, dt });
    }
    Ok(dt)
}
