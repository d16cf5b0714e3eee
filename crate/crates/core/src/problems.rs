//! Initial conditions and metadata of the benchmark problems. All domains
//! are periodic.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::grid::{sample_initial_condition, Field, PeriodicGrid};
use crate::model::{CellState, ModelParams};

pub const GRESHO_RADIUS: f64 = 0.4;
pub const GRESHO_BACKGROUND_U1: f64 = 0.1;
const GRESHO_CENTER: [f64; 2] = [0.5, 0.5];
const VORTEX_BACKGROUND_RHO: f64 = 110.0;
const VORTEX_BACKGROUND_U1: f64 = 0.6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemId {
    StandardPeriodic,
    CollidingAcoustic,
    Riemann,
    Gresho,
    TravellingVortex,
}

impl ProblemId {
    pub const ALL: [ProblemId; 5] = [
        ProblemId::StandardPeriodic,
        ProblemId::CollidingAcoustic,
        ProblemId::Riemann,
        ProblemId::Gresho,
        ProblemId::TravellingVortex,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ProblemId::StandardPeriodic => "standard_periodic",
            ProblemId::CollidingAcoustic => "colliding_acoustic",
            ProblemId::Riemann => "riemann",
            ProblemId::Gresho => "gresho",
            ProblemId::TravellingVortex => "travelling_vortex",
        }
    }
}

impl FromStr for ProblemId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ProblemId::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::UnknownName {
                kind: "problem",
                name: s.into(),
            })
    }
}

impl fmt::Display for ProblemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A benchmark problem at a given `ε`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub id: ProblemId,
    pub eps: f64,
    pub kappa: f64,
    pub gamma: f64,
    pub domain: Vec<(f64, f64)>,
    pub default_t_final: f64,
}

impl ProblemSpec {
    pub fn new(id: ProblemId, eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "eps must be > 0, got {eps}"
            )));
        }
        let unit = (0.0, 1.0);
        let (gamma, domain, t_final) = match id {
            ProblemId::StandardPeriodic => (2.0, vec![unit], 5.0),
            ProblemId::CollidingAcoustic => (1.4, vec![(-1.0, 1.0)], 0.08),
            ProblemId::Riemann => (2.0, vec![unit], 0.05),
            ProblemId::Gresho => (1.4, vec![unit, unit], GRESHO_RADIUS * PI),
            ProblemId::TravellingVortex => (1.4, vec![unit, unit], 1.0 / VORTEX_BACKGROUND_U1),
        };
        Ok(Self {
            id,
            eps,
            kappa: 1.0,
            gamma,
            domain,
            default_t_final: t_final,
        })
    }

    pub fn dim(&self) -> usize {
        self.domain.len()
    }

    pub fn params(&self) -> Result<ModelParams> {
        ModelParams::new(self.kappa, self.gamma, self.eps)
    }

    /// Background `u₁` subtracted by the perturbation diagnostics, if any.
    pub fn background_u1(&self) -> Option<f64> {
        match self.id {
            ProblemId::Gresho => Some(GRESHO_BACKGROUND_U1),
            ProblemId::TravellingVortex => Some(VORTEX_BACKGROUND_U1),
            _ => None,
        }
    }

    /// Grid on the problem domain; `n` holds one count per direction.
    pub fn grid(&self, n: &[usize]) -> Result<PeriodicGrid> {
        PeriodicGrid::from_domain(&self.domain, n)
    }

    pub fn initial_field(&self, grid: &PeriodicGrid) -> Result<Field> {
        if grid.dim() != self.dim() {
            return Err(Error::InvalidParameter(format!(
                "{} is {}-dimensional, grid is {}-dimensional",
                self.id,
                self.dim(),
                grid.dim()
            )));
        }
        sample_initial_condition(grid, |x| self.initial_state(x))
    }

    /// Pointwise initial state.
    pub fn initial_state(&self, x: &[f64]) -> CellState {
        let eps = self.eps;
        let eps2 = eps * eps;
        match self.id {
            ProblemId::StandardPeriodic => {
                let s = (2.0 * PI * x[0]).sin();
                primitive_1d(1.0 + eps2 * s, 1.0 + eps * s)
            }
            ProblemId::CollidingAcoustic => {
                let bump = 1.0 - (2.0 * PI * x[0]).cos();
                let sign = if x[0] > 0.0 {
                    1.0
                } else if x[0] < 0.0 {
                    -1.0
                } else {
                    0.0
                };
                primitive_1d(0.955 + 0.5 * eps * bump, -sign * self.gamma.sqrt() * bump)
            }
            ProblemId::Riemann => {
                let x = x[0];
                // intervals as printed; 0.8 lies in two of them and takes the right one
                let (rho, mom) = if x <= 0.2 || x >= 0.8 {
                    (1.0, 1.0 - eps2 / 2.0)
                } else if x <= 0.3 {
                    (1.0 + eps2, 1.0)
                } else if x <= 0.7 {
                    (1.0, 1.0 + eps2 / 2.0)
                } else {
                    (1.0 - eps2, 1.0)
                };
                CellState {
                    rho,
                    mom: [mom, 0.0],
                    dim: 1,
                }
            }
            ProblemId::Gresho => {
                let (dx1, dx2) = (x[0] - GRESHO_CENTER[0], x[1] - GRESHO_CENTER[1]);
                let r = dx1.hypot(dx2);
                let w = gresho_angular_rate(r);
                let rho = 1.0 + eps2 * gresho_p2(r) / self.gamma;
                primitive_2d(rho, GRESHO_BACKGROUND_U1 - dx2 * w, dx1 * w)
            }
            ProblemId::TravellingVortex => {
                let r = 4.0 * PI * (x[0] - 0.5).hypot(x[1] - 0.5);
                let (rho, u1, u2) = if r < PI {
                    let amp = 1.5 * (1.0 + r.cos());
                    (
                        VORTEX_BACKGROUND_RHO
                            + eps2 * (1.5 / (4.0 * PI)).powi(2) * (vortex_k(r) - vortex_k(PI)),
                        VORTEX_BACKGROUND_U1 + amp * (0.5 - x[1]),
                        amp * (x[0] - 0.5),
                    )
                } else {
                    (VORTEX_BACKGROUND_RHO, VORTEX_BACKGROUND_U1, 0.0)
                };
                primitive_2d(rho, u1, u2)
            }
        }
    }
}

fn primitive_1d(rho: f64, u: f64) -> CellState {
    CellState {
        rho,
        mom: [rho * u, 0.0],
        dim: 1,
    }
}

fn primitive_2d(rho: f64, u1: f64, u2: f64) -> CellState {
    CellState {
        rho,
        mom: [rho * u1, rho * u2],
        dim: 2,
    }
}

/// Gresho line velocity `u_θ(r)`.
pub fn gresho_u_theta(r: f64) -> f64 {
    let rr = GRESHO_RADIUS;
    if r < rr / 2.0 {
        2.0 * r / rr
    } else if r < rr {
        2.0 * (1.0 - r / rr)
    } else {
        0.0
    }
}

/// `u_θ(r)/r`, with its limit `2/R` at the centre.
fn gresho_angular_rate(r: f64) -> f64 {
    if r < GRESHO_RADIUS / 2.0 {
        2.0 / GRESHO_RADIUS
    } else {
        gresho_u_theta(r) / r
    }
}

/// Second-order pressure `p₂(r)` of the Gresho vortex, `p = p₀ + ε² p₂`.
pub fn gresho_p2(r: f64) -> f64 {
    let q = r / GRESHO_RADIUS;
    if q < 0.5 {
        2.0 * q * q + 2.0 - 16f64.ln()
    } else if q < 1.0 {
        2.0 * q * q - 8.0 * q + 4.0 * q.ln() + 6.0
    } else {
        0.0
    }
}

/// `k(q)` of the travelling vortex density.
pub fn vortex_k(q: f64) -> f64 {
    2.0 * q.cos()
        + 2.0 * q * q.sin()
        + (2.0 * q).cos() / 8.0
        + q * (2.0 * q).sin() / 4.0
        + 0.75 * q * q
}

pub fn standard_periodic(eps: f64) -> Result<ProblemSpec> {
    ProblemSpec::new(ProblemId::StandardPeriodic, eps)
}

pub fn colliding_acoustic(eps: f64) -> Result<ProblemSpec> {
    ProblemSpec::new(ProblemId::CollidingAcoustic, eps)
}

pub fn riemann(eps: f64) -> Result<ProblemSpec> {
    ProblemSpec::new(ProblemId::Riemann, eps)
}

pub fn gresho(eps: f64) -> Result<ProblemSpec> {
    ProblemSpec::new(ProblemId::Gresho, eps)
}

pub fn travelling_vortex(eps: f64) -> Result<ProblemSpec> {
    ProblemSpec::new(ProblemId::TravellingVortex, eps)
}
