//! Pressure law, entropy pair and wave speeds of the non-dimensional
//! barotropic Euler system
//!
//! ```text
//! ρ_t + ∇·(ρu) = 0
//! (ρu)_t + ∇·(ρu⊗u) + ∇p(ρ)/ε² = 0,      p(ρ) = κ ρ^γ
//! ```
//!
//! The physical energy `η = ½ρ|u|² + p/(ε²(γ−1))` is the mathematical
//! entropy, with flux `ω = u (η + p/ε²)`.

use crate::error::{Error, Result};
use crate::grid::Field;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    kappa: f64,
    gamma: f64,
    eps: f64,
}

impl ModelParams {
    pub fn new(kappa: f64, gamma: f64, eps: f64) -> Result<Self> {
        if !(kappa > 0.0 && kappa.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "kappa must be > 0, got {kappa}"
            )));
        }
        if !(gamma > 1.0 && gamma.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "gamma must be > 1, got {gamma}"
            )));
        }
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "eps must be > 0, got {eps}"
            )));
        }
        Ok(Self { kappa, gamma, eps })
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn with_eps(self, eps: f64) -> Result<Self> {
        Self::new(self.kappa, self.gamma, eps)
    }

    /// `p(ρ) = κρ^γ`.
    pub fn pressure(&self, rho: f64) -> Result<f64> {
        check_density(rho)?;
        Ok(self.p(rho))
    }

    /// `p'(ρ) = κγρ^{γ−1}`, the Helmholtz coefficient of the linearised solve.
    pub fn pressure_derivative(&self, rho: f64) -> Result<f64> {
        check_density(rho)?;
        Ok(self.dp(rho))
    }

    #[inline]
    pub(crate) fn p(&self, rho: f64) -> f64 {
        self.kappa * rho.powf(self.gamma)
    }

    #[inline]
    pub(crate) fn dp(&self, rho: f64) -> f64 {
        self.kappa * self.gamma * rho.powf(self.gamma - 1.0)
    }

    pub fn entropy_quantities(&self, state: &CellState) -> Result<EntropyQuantities> {
        check_density(state.rho)?;
        let dim = state.dim;
        let eps2 = self.eps * self.eps;
        let p = self.p(state.rho);
        let u = state.velocity();
        let u2: f64 = u[..dim].iter().map(|v| v * v).sum();

        let eta = 0.5 * state.rho * u2 + p / (eps2 * (self.gamma - 1.0));
        let mut omega = [0.0; 2];
        for k in 0..dim {
            omega[k] = u[k] * (eta + p / eps2);
        }
        let mut v = [0.0; 3];
        v[0] = -0.5 * u2
            + self.kappa * self.gamma / (self.gamma - 1.0) * state.rho.powf(self.gamma - 1.0)
                / eps2;
        v[1..=dim].copy_from_slice(&u[..dim]);
        Ok(EntropyQuantities { eta, omega, v, dim })
    }
}

fn check_density(rho: f64) -> Result<()> {
    if rho > 0.0 && rho.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain {
            quantity: "density",
            value: rho,
        })
    }
}

/// Conserved variables of a single cell, `U = [ρ, ρu₁(, ρu₂)]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellState {
    pub rho: f64,
    pub mom: [f64; 2],
    pub dim: usize,
}

impl CellState {
    pub fn new_1d(rho: f64, mom: f64) -> Result<Self> {
        check_density(rho)?;
        Ok(Self {
            rho,
            mom: [mom, 0.0],
            dim: 1,
        })
    }

    pub fn new_2d(rho: f64, mom1: f64, mom2: f64) -> Result<Self> {
        check_density(rho)?;
        Ok(Self {
            rho,
            mom: [mom1, mom2],
            dim: 2,
        })
    }

    pub fn from_primitive(rho: f64, u: &[f64]) -> Result<Self> {
        match *u {
            [u1] => Self::new_1d(rho, rho * u1),
            [u1, u2] => Self::new_2d(rho, rho * u1, rho * u2),
            _ => Err(Error::InvalidParameter(format!(
                "unsupported dimension {}",
                u.len()
            ))),
        }
    }

    pub fn velocity(&self) -> [f64; 2] {
        [self.mom[0] / self.rho, self.mom[1] / self.rho]
    }
}

/// Entropy `η`, entropy flux `ω` and entropy variables `V = dη/dU`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyQuantities {
    pub eta: f64,
    pub omega: [f64; 2],
    pub v: [f64; 3],
    pub dim: usize,
}

impl EntropyQuantities {
    pub fn omega(&self) -> &[f64] {
        &self.omega[..self.dim]
    }

    pub fn v(&self) -> &[f64] {
        &self.v[..=self.dim]
    }
}

/// Material wave speed `max_K Σ_k |u_k|` used by the CFL condition.
///
/// The acoustic speed `c/ε` is left out on purpose: acoustics are
/// integrated implicitly, so only convection restricts the step.
pub fn max_wave_speed(field: &Field) -> Result<f64> {
    if field.cell_count() == 0 {
        return Err(Error::EmptyField);
    }
    let dim = field.grid().dim();
    let mut speed: f64 = 0.0;
    for c in 0..field.cell_count() {
        let rho = field.rho()[c];
        check_density(rho)?;
        let s: f64 = (0..dim).map(|k| (field.mom(k)[c] / rho).abs()).sum();
        speed = speed.max(s);
    }
    Ok(speed)
}
