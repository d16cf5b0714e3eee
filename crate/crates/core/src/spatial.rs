//! Finite-volume space operators on periodic Cartesian grids.
//!
//! Every operator is written as a sum of face fluxes normalised by the cell
//! measure, `(1/|K|) Σ_σ |σ| F_σ·n_{σ,K}`. On a uniform grid this reduces to
//! `Σ_axis (F_{K+½} − F_{K−½}) / Δx_axis`, with each face flux evaluated
//! exactly once so that the discrete sums telescope.
//!
//! Three discretisation strategies pick operators for the explicit terms:
//!
//! | kind  | mass divergence | convective momentum flux            |
//! |-------|-----------------|-------------------------------------|
//! | Type1 | central         | upwind                              |
//! | Type2 | upwind          | upwind                              |
//! | Type3 | central         | entropy conservative (+ dissipation)|
//!
//! Pressure gradient, pressure Laplacian and the double divergence are
//! central for every kind.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::grid::{face_average, face_jump, Field, PeriodicGrid};
use crate::model::{CellState, ModelParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpaceKind {
    Type1,
    Type2,
    Type3,
}

impl SpaceKind {
    pub fn number(self) -> u8 {
        match self {
            SpaceKind::Type1 => 1,
            SpaceKind::Type2 => 2,
            SpaceKind::Type3 => 3,
        }
    }

    pub fn from_number(n: u8) -> Result<Self> {
        match n {
            1 => Ok(SpaceKind::Type1),
            2 => Ok(SpaceKind::Type2),
            3 => Ok(SpaceKind::Type3),
            _ => Err(Error::UnknownName {
                kind: "discretisation type",
                name: n.to_string(),
            }),
        }
    }
}

impl FromStr for SpaceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let n: u8 = s
            .trim_start_matches("type")
            .parse()
            .map_err(|_| Error::UnknownName {
                kind: "discretisation type",
                name: s.into(),
            })?;
        Self::from_number(n)
    }
}

impl fmt::Display for SpaceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.number())
    }
}

/// Space discretisation: kind, entropy-stable reconstruction order, and
/// dissipation strength `q`. `order` and `q` only matter for `Type3`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscretisationType {
    kind: SpaceKind,
    order: u8,
    q: f64,
}

impl DiscretisationType {
    pub fn new(kind: SpaceKind, order: u8, q: f64) -> Result<Self> {
        if !(order == 1 || order == 2) {
            return Err(Error::InvalidParameter(format!(
                "ES order must be 1 or 2, got {order}"
            )));
        }
        if !(q >= 0.0 && q.is_finite()) {
            return Err(Error::InvalidParameter(format!("q must be >= 0, got {q}")));
        }
        Ok(Self { kind, order, q })
    }

    pub fn type1() -> Self {
        Self {
            kind: SpaceKind::Type1,
            order: 1,
            q: 0.0,
        }
    }

    pub fn type2() -> Self {
        Self {
            kind: SpaceKind::Type2,
            order: 1,
            q: 0.0,
        }
    }

    pub fn type3(order: u8, q: f64) -> Result<Self> {
        Self::new(SpaceKind::Type3, order, q)
    }

    pub fn kind(&self) -> SpaceKind {
        self.kind
    }

    pub fn order(&self) -> u8 {
        self.order
    }

    pub fn q(&self) -> f64 {
        self.q
    }
}

/// `[a]⁺`
#[inline]
fn pos(a: f64) -> f64 {
    0.5 * (a + a.abs())
}

/// `[a]⁻`
#[inline]
fn neg(a: f64) -> f64 {
    0.5 * (a - a.abs())
}

/// Per-cell divergence from per-axis face fluxes, `flux[axis][c]` being the
/// flux through the upper face of cell `c`.
fn divergence_from_faces(grid: &PeriodicGrid, flux: &[Vec<f64>]) -> Vec<f64> {
    let mut out = vec![0.0; grid.cell_count()];
    for (axis, f) in flux.iter().enumerate() {
        let inv_dx = 1.0 / grid.dx(axis);
        for (c, o) in out.iter_mut().enumerate() {
            let below = grid.neighbor(c, axis, -1);
            *o += (f[c] - f[below]) * inv_dx;
        }
    }
    out
}

fn face_flux<F>(grid: &PeriodicGrid, axis: usize, mut flux: F) -> Vec<f64>
where
    F: FnMut(usize, usize) -> f64,
{
    (0..grid.cell_count())
        .map(|c| flux(c, grid.neighbor(c, axis, 1)))
        .collect()
}

/// Central divergence of a per-axis vector quantity, `Σ_σ {{w}}_σ·n_{σ,K}`.
pub fn central_divergence(grid: &PeriodicGrid, components: &[&[f64]]) -> Vec<f64> {
    let flux: Vec<Vec<f64>> = components
        .iter()
        .enumerate()
        .map(|(axis, w)| face_flux(grid, axis, |k, l| face_average(w[k], w[l])))
        .collect();
    divergence_from_faces(grid, &flux)
}

/// Central gradient of a scalar, `Σ_σ {{φ}}_σ n_{σ,K}`; one vector per axis.
pub fn central_gradient(values: &[f64], grid: &PeriodicGrid) -> Vec<Vec<f64>> {
    (0..grid.dim())
        .map(|axis| {
            let f = face_flux(grid, axis, |k, l| face_average(values[k], values[l]));
            let inv_dx = 1.0 / grid.dx(axis);
            (0..grid.cell_count())
                .map(|c| (f[c] - f[grid.neighbor(c, axis, -1)]) * inv_dx)
                .collect()
        })
        .collect()
}

/// `D_cen(ρu)`
pub fn central_mass_divergence(field: &Field) -> Vec<f64> {
    let grid = field.grid();
    let comps: Vec<&[f64]> = (0..grid.dim()).map(|k| field.mom(k)).collect();
    central_divergence(grid, &comps)
}

/// `D_upw(ρu)`: density upwinded with the sign of the face-mean normal velocity.
pub fn upwind_mass_divergence(field: &Field) -> Vec<f64> {
    let grid = field.grid();
    let rho = field.rho();
    let flux: Vec<Vec<f64>> = (0..grid.dim())
        .map(|axis| {
            let u = field.velocity(axis);
            face_flux(grid, axis, |k, l| {
                let a = face_average(u[k], u[l]);
                rho[k] * pos(a) + rho[l] * neg(a)
            })
        })
        .collect();
    divergence_from_faces(grid, &flux)
}

/// `D_upw(ρu⊗u)`; one vector per momentum component.
pub fn upwind_convective_divergence(field: &Field) -> Vec<Vec<f64>> {
    let grid = field.grid();
    let dim = grid.dim();
    let vel: Vec<Vec<f64>> = (0..dim).map(|k| field.velocity(k)).collect();
    (0..dim)
        .map(|j| {
            let m = field.mom(j);
            let flux: Vec<Vec<f64>> = (0..dim)
                .map(|axis| {
                    let u = &vel[axis];
                    face_flux(grid, axis, |k, l| {
                        let a = face_average(u[k], u[l]);
                        m[k] * pos(a) + m[l] * neg(a)
                    })
                })
                .collect();
            divergence_from_faces(grid, &flux)
        })
        .collect()
}

/// `D_cen(p)` with `p = κρ^γ`. The `1/ε²` factor belongs to the caller.
pub fn central_pressure_gradient(field: &Field, params: &ModelParams) -> Vec<Vec<f64>> {
    let p: Vec<f64> = field.rho().iter().map(|&r| params.p(r)).collect();
    central_gradient(&p, field.grid())
}

/// Compact Laplacian `Σ_σ |σ| [[p]]_σ / d_σ` (3-point in 1D, 5-point in 2D).
pub fn pressure_laplacian(p: &[f64], grid: &PeriodicGrid) -> Vec<f64> {
    let flux: Vec<Vec<f64>> = (0..grid.dim())
        .map(|axis| {
            let inv_d = 1.0 / grid.d_sigma(axis);
            face_flux(grid, axis, |k, l| face_jump(p[k], p[l]) * inv_d)
        })
        .collect();
    divergence_from_faces(grid, &flux)
}

/// `D_cen D_cen (ρu⊗u)`: wide-stencil central approximation of `∇²:(ρu⊗u)`.
pub fn double_divergence(field: &Field) -> Vec<f64> {
    let grid = field.grid();
    let dim = grid.dim();
    let rho = field.rho();
    // T_kj = m_k m_j / ρ; the inner divergence contracts the first index.
    let tensor = |k: usize, j: usize| -> Vec<f64> {
        let (mk, mj) = (field.mom(k), field.mom(j));
        (0..rho.len()).map(|c| mk[c] * mj[c] / rho[c]).collect()
    };
    let inner: Vec<Vec<f64>> = (0..dim)
        .map(|j| {
            let cols: Vec<Vec<f64>> = (0..dim).map(|k| tensor(k, j)).collect();
            let refs: Vec<&[f64]> = cols.iter().map(Vec::as_slice).collect();
            central_divergence(grid, &refs)
        })
        .collect();
    let refs: Vec<&[f64]> = inner.iter().map(Vec::as_slice).collect();
    central_divergence(grid, &refs)
}

/// Density mean `⟨ρ⟩^γ = ((γ−1)/γ) [[ρ^γ]] / [[ρ^{γ−1}]]` of the
/// entropy-conservative flux. Near-equal states fall back to the arithmetic
/// mean, which is the limit of the ratio.
pub fn rho_gamma_mean(rho_k: f64, rho_l: f64, gamma: f64) -> f64 {
    let gk = rho_k.powf(gamma - 1.0);
    let gl = rho_l.powf(gamma - 1.0);
    let den = gl - gk;
    if den.abs() < 1e-12 * gk.max(1.0) {
        return face_average(rho_k, rho_l);
    }
    (gamma - 1.0) / gamma * (rho_l * gl - rho_k * gk) / den
}

/// `minmod(a, b)`: the argument of smaller modulus when signs agree, else 0.
#[inline]
pub fn minmod(a: f64, b: f64) -> f64 {
    if a * b <= 0.0 {
        0.0
    } else if a.abs() < b.abs() {
        a
    } else {
        b
    }
}

/// Jump `u_L^rec − u_K^rec` of min-mod limited linear reconstructions at the
/// face between `K` and `L`, from four consecutive cell values.
pub fn minmod_reconstructed_jump(u_kk: f64, u_k: f64, u_l: f64, u_ll: f64) -> f64 {
    let rec_k = u_k + 0.5 * minmod(u_k - u_kk, u_l - u_k);
    let rec_l = u_l - 0.5 * minmod(u_l - u_k, u_ll - u_l);
    rec_l - rec_k
}

/// `D_EC(ρu⊗u)` with face flux `⟨ρ⟩^γ ({{u}}·n) {{u}}`.
pub fn ec_convective_divergence(field: &Field, params: &ModelParams) -> Vec<Vec<f64>> {
    entropy_flux_divergence(field, params, 0.0, 1)
}

/// `D_ES(ρu⊗u)`: the entropy-conservative flux minus the scalar dissipation
/// `(q/2)|{{u}}·n| Δu`, where `Δu` is the plain jump (order 1) or the
/// min-mod reconstructed jump (order 2).
pub fn es_convective_divergence(
    field: &Field,
    params: &ModelParams,
    disc: &DiscretisationType,
) -> Vec<Vec<f64>> {
    entropy_flux_divergence(field, params, disc.q, disc.order)
}

fn entropy_flux_divergence(
    field: &Field,
    params: &ModelParams,
    q: f64,
    order: u8,
) -> Vec<Vec<f64>> {
    let grid = field.grid();
    let dim = grid.dim();
    let rho = field.rho();
    let gamma = params.gamma();
    let vel: Vec<Vec<f64>> = (0..dim).map(|k| field.velocity(k)).collect();

    let jump = |u: &[f64], axis: usize, k: usize, l: usize| -> f64 {
        if order == 2 {
            let kk = grid.neighbor(k, axis, -1);
            let ll = grid.neighbor(l, axis, 1);
            minmod_reconstructed_jump(u[kk], u[k], u[l], u[ll])
        } else {
            face_jump(u[k], u[l])
        }
    };

    (0..dim)
        .map(|j| {
            let flux: Vec<Vec<f64>> = (0..dim)
                .map(|axis| {
                    let un = &vel[axis];
                    let uj = &vel[j];
                    face_flux(grid, axis, |k, l| {
                        let a = face_average(un[k], un[l]);
                        let central =
                            rho_gamma_mean(rho[k], rho[l], gamma) * a * face_average(uj[k], uj[l]);
                        if q == 0.0 {
                            central
                        } else {
                            central - 0.5 * q * a.abs() * jump(uj, axis, k, l)
                        }
                    })
                })
                .collect();
            divergence_from_faces(grid, &flux)
        })
        .collect()
}

/// Mass divergence for the mass update of the chosen discretisation.
pub fn mass_divergence(field: &Field, disc: &DiscretisationType) -> Vec<f64> {
    match disc.kind {
        SpaceKind::Type2 => upwind_mass_divergence(field),
        SpaceKind::Type1 | SpaceKind::Type3 => central_mass_divergence(field),
    }
}

/// Convective momentum divergence for the chosen discretisation.
pub fn convective_divergence(
    field: &Field,
    params: &ModelParams,
    disc: &DiscretisationType,
) -> Vec<Vec<f64>> {
    match disc.kind {
        SpaceKind::Type1 | SpaceKind::Type2 => upwind_convective_divergence(field),
        SpaceKind::Type3 => es_convective_divergence(field, params, disc),
    }
}

/// Physical flux `G^k(U) = [ρu_k, p δ_kj/ε² + ρu_k u_j]` in direction `axis`.
pub fn physical_flux(state: &CellState, params: &ModelParams, axis: usize) -> [f64; 3] {
    let u = state.velocity();
    let p = params.p(state.rho) / (params.eps() * params.eps());
    let mut g = [state.mom[axis], 0.0, 0.0];
    for j in 0..state.dim {
        g[1 + j] = state.mom[axis] * u[j] + if j == axis { p } else { 0.0 };
    }
    g
}

/// Full entropy-conservative interface flux `G*^k` between `left` and `right`,
/// mass component included.
pub fn ec_flux(left: &CellState, right: &CellState, params: &ModelParams, axis: usize) -> [f64; 3] {
    let (ul, ur) = (left.velocity(), right.velocity());
    let rho_hat = rho_gamma_mean(left.rho, right.rho, params.gamma());
    let un = face_average(ul[axis], ur[axis]);
    let p_bar =
        face_average(params.p(left.rho), params.p(right.rho)) / (params.eps() * params.eps());
    let mut g = [rho_hat * un, 0.0, 0.0];
    for j in 0..left.dim {
        g[1 + j] = rho_hat * un * face_average(ul[j], ur[j]) + if j == axis { p_bar } else { 0.0 };
    }
    g
}
