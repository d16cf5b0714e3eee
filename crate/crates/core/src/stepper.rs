//! Time stepping: CFL step selection, the linearised IMEX stage loop, and
//! the run driver with diagnostics and snapshot output.
//!
//! Each stage solves one Helmholtz problem for the density, obtained by
//! substituting the implicit momentum update into the implicit mass update
//! with the pressure linearised about `ρ₀`:
//!
//! ```text
//! (I − α Δ_h) ρ^i = ρ^n − Δt Σ_{j<i} a_ij D(ρu)^j − Δt a_ii D(ρu)^n
//!                 + Δt² a_ii Σ_{j<i} ã_ij D²(ρu⊗u)^j
//!                 + (Δt²/ε²) a_ii Σ_{j<i} a_ij Δ_h p^j,      α = (Δt a_ii/ε)² p'(ρ₀)
//! (ρu)^i = (ρu)^n − Δt Σ_{j<i} ã_ij D_conv(ρu⊗u)^j − (Δt/ε²) Σ_{j≤i} a_ij ∇_h p^j
//! ```
//!
//! Stage pressures enter as deviations `p'(ρ₀)(ρ − ρ₀)`. The dropped
//! constant `p(ρ₀)` has zero gradient and zero Laplacian, and leaving it out
//! keeps the `1/ε²` factor from amplifying its rounding error.

use crate::diagnostics::{global_energies, DiagnosticsRow};
use crate::elliptic::{HelmholtzSolver, DEFAULT_TOL};
use crate::error::{Error, Result};
use crate::grid::Field;
use crate::imex::{validate_tableau, DoubleTableau, Scheme};
use crate::model::{max_wave_speed, ModelParams};
use crate::spatial::{
    central_gradient, convective_divergence, double_divergence, mass_divergence,
    pressure_laplacian, DiscretisationType,
};

/// Which pressure drives the momentum update. The mass update always uses
/// the linearised pressure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PressureMode {
    #[default]
    Linearised,
    Nonlinear,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepControls {
    pub cfl: f64,
    pub t_final: f64,
    pub dt_cap: Option<f64>,
    /// Constant step size; overrides the CFL rule (still clipped at `t_final`).
    pub fixed_dt: Option<f64>,
    /// Linearisation density; the mean of the initial density when unset.
    pub linearisation_rho0: Option<f64>,
    pub helmholtz_tol: f64,
    pub pressure_mode: PressureMode,
}

impl StepControls {
    pub fn new(cfl: f64, t_final: f64) -> Result<Self> {
        let c = Self {
            cfl,
            t_final,
            dt_cap: None,
            fixed_dt: None,
            linearisation_rho0: None,
            helmholtz_tol: DEFAULT_TOL,
            pressure_mode: PressureMode::Linearised,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "cfl must lie in (0, 1], got {}",
                self.cfl
            )));
        }
        if !(self.t_final >= 0.0 && self.t_final.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "t_final must be >= 0, got {}",
                self.t_final
            )));
        }
        for (name, v) in [
            ("dt_cap", self.dt_cap),
            ("fixed_dt", self.fixed_dt),
            ("linearisation_rho0", self.linearisation_rho0),
        ] {
            if let Some(v) = v {
                if !positive(v) {
                    return Err(Error::InvalidParameter(format!(
                        "{name} must be > 0, got {v}"
                    )));
                }
            }
        }
        if !positive(self.helmholtz_tol) {
            return Err(Error::InvalidParameter(format!(
                "helmholtz_tol must be > 0, got {}",
                self.helmholtz_tol
            )));
        }
        Ok(())
    }
}

/// `Δt = C·min Δx / max Σ_k|u_k|`, capped, and clipped so that the last step
/// lands on `t_final`.
pub fn compute_dt(field: &Field, controls: &StepControls, t: f64) -> Result<f64> {
    let mut dt = match controls.fixed_dt {
        Some(dt) => dt,
        None => {
            let speed = max_wave_speed(field)?;
            if speed > 0.0 {
                controls.cfl * field.grid().min_dx() / speed
            } else {
                controls.dt_cap.ok_or(Error::ZeroWaveSpeed)?
            }
        }
    };
    if let Some(cap) = controls.dt_cap {
        dt = dt.min(cap);
    }
    let remaining = controls.t_final - t;
    // absorb a sliver left over from accumulated rounding into this step
    if dt >= remaining || remaining - dt <= 1e-10 * dt {
        dt = remaining;
    }
    Ok(dt)
}

/// `p(ρ₀) + p'(ρ₀)(ρ − ρ₀)` per cell.
pub fn linearised_pressure(rho: &[f64], rho0: f64, params: &ModelParams) -> Result<Vec<f64>> {
    let p0 = params.pressure(rho0)?;
    let dp0 = params.pressure_derivative(rho0)?;
    Ok(rho.iter().map(|r| p0 + dp0 * (r - rho0)).collect())
}

/// Explicit operator values of one stage, computed once and then only read.
#[derive(Debug, Clone)]
struct StageData {
    mass_div: Vec<f64>,
    conv_div: Vec<Vec<f64>>,
    double_div: Vec<f64>,
    /// Gradient of the momentum-driving pressure deviation.
    grad_p: Vec<Vec<f64>>,
    /// Laplacian of the linearised pressure deviation.
    lap_p: Vec<f64>,
}

/// Per-step cache of stage states and their operator evaluations.
#[derive(Debug, Default)]
pub struct StageWorkspace {
    states: Vec<Field>,
    data: Vec<StageData>,
}

impl StageWorkspace {
    pub fn stage_count(&self) -> usize {
        self.states.len()
    }

    pub fn stage(&self, i: usize) -> &Field {
        &self.states[i]
    }
}

/// Fully configured discrete time integrator.
#[derive(Debug, Clone)]
pub struct Stepper {
    params: ModelParams,
    disc: DiscretisationType,
    tableau: DoubleTableau,
    rho0: f64,
    dp0: f64,
    tol: f64,
    pressure_mode: PressureMode,
    solver: HelmholtzSolver,
}

impl Stepper {
    pub fn new(
        params: ModelParams,
        disc: DiscretisationType,
        tableau: DoubleTableau,
        grid: crate::grid::PeriodicGrid,
        rho0: f64,
        tol: f64,
        pressure_mode: PressureMode,
    ) -> Result<Self> {
        let violations = validate_tableau(&tableau);
        if !violations.is_empty() {
            return Err(Error::InvalidTableau(
                violations.iter().map(ToString::to_string).collect(),
            ));
        }
        let dp0 = params.pressure_derivative(rho0)?;
        if !(tol > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "tolerance must be > 0, got {tol}"
            )));
        }
        Ok(Self {
            params,
            disc,
            tableau,
            rho0,
            dp0,
            tol,
            pressure_mode,
            solver: HelmholtzSolver::new(grid),
        })
    }

    /// Stepper for a scheme with controls resolved against an initial field.
    pub fn for_run(
        params: ModelParams,
        disc: DiscretisationType,
        scheme: Scheme,
        controls: &StepControls,
        initial: &Field,
    ) -> Result<Self> {
        let rho0 = controls
            .linearisation_rho0
            .unwrap_or_else(|| initial.mean_density());
        Self::new(
            params,
            disc,
            scheme.tableau(),
            *initial.grid(),
            rho0,
            controls.helmholtz_tol,
            controls.pressure_mode,
        )
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn rho0(&self) -> f64 {
        self.rho0
    }

    fn eps2(&self) -> f64 {
        self.params.eps() * self.params.eps()
    }

    fn linear_deviation(&self, rho: &[f64]) -> Vec<f64> {
        rho.iter().map(|r| self.dp0 * (r - self.rho0)).collect()
    }

    fn momentum_pressure(&self, rho: &[f64]) -> Vec<f64> {
        match self.pressure_mode {
            PressureMode::Linearised => self.linear_deviation(rho),
            PressureMode::Nonlinear => {
                let p0 = self.params.p(self.rho0);
                rho.iter().map(|&r| self.params.p(r) - p0).collect()
            }
        }
    }

    fn check(&self, field: Field) -> Result<Field> {
        match field.find_non_physical() {
            Some(msg) => Err(Error::NonPhysical(msg)),
            None => Ok(field),
        }
    }

    /// Dedicated linearised backward/forward Euler step.
    pub fn first_order_step(&self, field: &Field, dt: f64) -> Result<Field> {
        let grid = *field.grid();
        let dim = grid.dim();
        let eps2 = self.eps2();

        let dm = mass_divergence(field, &self.disc);
        let dd = double_divergence(field);
        let rhs: Vec<f64> = (0..field.cell_count())
            .map(|c| field.rho()[c] - dt * dm[c] + dt * dt * dd[c])
            .collect();
        let alpha = dt * dt / eps2 * self.dp0;
        let rho = self.solver.solve(alpha, &rhs, self.tol)?;

        let conv = convective_divergence(field, &self.params, &self.disc);
        let grad = central_gradient(&self.momentum_pressure(&rho), &grid);
        let mom = (0..dim)
            .map(|k| {
                let m = field.mom(k);
                (0..m.len())
                    .map(|c| m[c] - dt * conv[k][c] - dt / eps2 * grad[k][c])
                    .collect()
            })
            .collect();
        self.check(Field::new(grid, rho, mom)?)
    }

    fn stage_data(&self, field: &Field) -> StageData {
        let grid = field.grid();
        StageData {
            mass_div: mass_divergence(field, &self.disc),
            conv_div: convective_divergence(field, &self.params, &self.disc),
            double_div: double_divergence(field),
            grad_p: central_gradient(&self.momentum_pressure(field.rho()), grid),
            lap_p: pressure_laplacian(&self.linear_deviation(field.rho()), grid),
        }
    }

    /// One IMEX-RK step; the result is the last stage.
    pub fn imex_rk_step(&self, field: &Field, dt: f64) -> Result<Field> {
        let mut ws = StageWorkspace::default();
        self.imex_rk_step_with(field, dt, &mut ws)
    }

    pub fn imex_rk_step_with(
        &self,
        field: &Field,
        dt: f64,
        ws: &mut StageWorkspace,
    ) -> Result<Field> {
        let t = &self.tableau;
        let s = t.stages();
        let grid = *field.grid();
        let dim = grid.dim();
        let n = field.cell_count();
        let eps2 = self.eps2();
        ws.states.clear();
        ws.data.clear();

        let base_mass_div = mass_divergence(field, &self.disc);

        for i in 0..s {
            let stage = if t.is_trivial_stage(i) {
                field.clone()
            } else {
                let aii = t.a_imp[i][i];
                let mut rhs = field.rho().to_vec();
                for (j, d) in ws.data.iter().enumerate() {
                    let (a, ae) = (t.a_imp[i][j], t.a_exp[i][j]);
                    for c in 0..n {
                        let mut v = 0.0;
                        if a != 0.0 {
                            v -= dt * a * d.mass_div[c];
                            v += dt * dt / eps2 * aii * a * d.lap_p[c];
                        }
                        if ae != 0.0 {
                            v += dt * dt * aii * ae * d.double_div[c];
                        }
                        rhs[c] += v;
                    }
                }
                for c in 0..n {
                    rhs[c] -= dt * aii * base_mass_div[c];
                }
                let alpha = (dt * aii) * (dt * aii) / eps2 * self.dp0;
                let rho = self.solver.solve(alpha, &rhs, self.tol)?;

                let grad_i = central_gradient(&self.momentum_pressure(&rho), &grid);
                let mut mom: Vec<Vec<f64>> = (0..dim).map(|k| field.mom(k).to_vec()).collect();
                for k in 0..dim {
                    for (j, d) in ws.data.iter().enumerate() {
                        let (a, ae) = (t.a_imp[i][j], t.a_exp[i][j]);
                        if ae != 0.0 {
                            mom[k]
                                .iter_mut()
                                .zip(&d.conv_div[k])
                                .for_each(|(m, v)| *m -= dt * ae * v);
                        }
                        if a != 0.0 {
                            mom[k]
                                .iter_mut()
                                .zip(&d.grad_p[k])
                                .for_each(|(m, g)| *m -= dt / eps2 * a * g);
                        }
                    }
                    mom[k]
                        .iter_mut()
                        .zip(&grad_i[k])
                        .for_each(|(m, g)| *m -= dt / eps2 * aii * g);
                }
                self.check(Field::new(grid, rho, mom)?)?
            };
            if i + 1 < s {
                ws.data.push(self.stage_data(&stage));
            }
            ws.states.push(stage);
        }
        Ok(ws.states.pop().expect("tableau has at least one stage"))
    }
}

/// Receiver for per-step diagnostics and snapshots.
pub trait RunSink {
    fn diagnostics(&mut self, row: &DiagnosticsRow) -> std::io::Result<()>;

    /// `requested` is the configured snapshot time, `t` the time of `field`.
    fn snapshot(&mut self, requested: f64, t: f64, field: &Field) -> std::io::Result<()>;
}

/// Keeps everything in memory.
#[derive(Debug, Default, Clone)]
pub struct MemorySink {
    pub rows: Vec<DiagnosticsRow>,
    pub snapshots: Vec<(f64, f64, Field)>,
}

impl RunSink for MemorySink {
    fn diagnostics(&mut self, row: &DiagnosticsRow) -> std::io::Result<()> {
        self.rows.push(*row);
        Ok(())
    }

    fn snapshot(&mut self, requested: f64, t: f64, field: &Field) -> std::io::Result<()> {
        self.snapshots.push((requested, t, field.clone()));
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub field: Field,
    pub t: f64,
    pub steps: usize,
}

/// Advance `initial` to `controls.t_final`, reporting to `sink` after every
/// step. A snapshot requested at time `s` receives the last state with
/// `t ≤ s`.
pub fn run(
    initial: Field,
    stepper: &Stepper,
    controls: &StepControls,
    snapshot_times: &[f64],
    sink: &mut dyn RunSink,
) -> Result<RunOutcome> {
    controls.validate()?;
    let params = *stepper.params();
    let mut pending: Vec<f64> = snapshot_times.to_vec();
    pending.sort_by(f64::total_cmp);
    pending.reverse();

    let mut field = initial;
    let mut t = 0.0;
    let mut steps = 0;
    let mut ws = StageWorkspace::default();
    sink.diagnostics(&global_energies(&field, &params, t)?)?;

    while t < controls.t_final {
        let dt = compute_dt(&field, controls, t)?;
        while let Some(&s) = pending.last() {
            if t + dt > s + 1e-12 * s.abs().max(1.0) {
                sink.snapshot(s, t, &field)?;
                pending.pop();
            } else {
                break;
            }
        }
        let next = match stepper.imex_rk_step_with(&field, dt, &mut ws) {
            Ok(f) => f,
            Err(Error::NonPhysical(reason)) => {
                return Err(Error::BlowUp {
                    step: steps + 1,
                    t,
                    reason,
                    last_state: Box::new(field),
                })
            }
            Err(e) => return Err(e),
        };
        field = next;
        steps += 1;
        t = if dt == controls.t_final - t {
            controls.t_final
        } else {
            t + dt
        };
        sink.diagnostics(&global_energies(&field, &params, t)?)?;
    }
    while let Some(s) = pending.pop() {
        sink.snapshot(s, t, &field)?;
    }
    Ok(RunOutcome { field, t, steps })
}
