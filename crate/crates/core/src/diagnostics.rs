//! Global energy series, Gresho-specific diagnostics, L2 errors against a
//! finer reference, and experimental orders of convergence.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::grid::{Field, PeriodicGrid};
use crate::model::ModelParams;

/// Global entropy `η = KE + PE` at time `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticsRow {
    pub t: f64,
    pub entropy: f64,
    pub ke: f64,
    pub pe: f64,
}

/// `KE = Σ|K| ½ρ|u|²`, `PE = Σ|K| p/(ε²(γ−1))`.
pub fn global_energies(field: &Field, params: &ModelParams, t: f64) -> Result<DiagnosticsRow> {
    let grid = field.grid();
    let dim = grid.dim();
    let factor = 1.0 / (params.eps() * params.eps() * (params.gamma() - 1.0));
    let (mut ke, mut pe) = (0.0, 0.0);
    for c in 0..field.cell_count() {
        let rho = field.rho()[c];
        let p = params.pressure(rho)?;
        let m2: f64 = (0..dim).map(|k| field.mom(k)[c].powi(2)).sum();
        ke += 0.5 * m2 / rho;
        pe += p * factor;
    }
    let measure = grid.cell_measure();
    let (ke, pe) = (ke * measure, pe * measure);
    Ok(DiagnosticsRow {
        t,
        entropy: ke + pe,
        ke,
        pe,
    })
}

/// Perturbation kinetic energy `Σ|K| ½((u₁−u₁₀)² + u₂²)` (no density
/// weight) and per-cell Mach ratio `√(((u₁−u₁₀)² + u₂²)/(γp/ρ))`.
pub fn gresho_diagnostics(
    field: &Field,
    params: &ModelParams,
    background_u1: f64,
) -> Result<(f64, Vec<f64>)> {
    let grid = field.grid();
    let mut ke = 0.0;
    let mut mach = Vec::with_capacity(field.cell_count());
    for c in 0..field.cell_count() {
        let s = field.cell(c);
        let p = params.pressure(s.rho)?;
        let u = s.velocity();
        let du1 = u[0] - background_u1;
        let du2 = if grid.dim() == 2 { u[1] } else { 0.0 };
        let q2 = du1 * du1 + du2 * du2;
        ke += 0.5 * q2;
        mach.push((q2 / (params.gamma() * p / s.rho)).sqrt());
    }
    Ok((ke * grid.cell_measure(), mach))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variable {
    Rho,
    U1,
    U2,
}

impl Variable {
    pub fn name(self) -> &'static str {
        match self {
            Variable::Rho => "rho",
            Variable::U1 => "u1",
            Variable::U2 => "u2",
        }
    }

    /// Density plus every velocity component of a `dim`-dimensional field.
    pub fn all(dim: usize) -> Vec<Variable> {
        [Variable::Rho, Variable::U1, Variable::U2][..=dim].to_vec()
    }

    fn values(self, field: &Field) -> Result<Vec<f64>> {
        match self {
            Variable::Rho => Ok(field.rho().to_vec()),
            Variable::U1 => Ok(field.velocity(0)),
            Variable::U2 if field.grid().dim() == 2 => Ok(field.velocity(1)),
            Variable::U2 => Err(Error::InvalidParameter("u2 requested on a 1D field".into())),
        }
    }
}

impl FromStr for Variable {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rho" => Ok(Variable::Rho),
            "u1" => Ok(Variable::U1),
            "u2" => Ok(Variable::U2),
            _ => Err(Error::UnknownName {
                kind: "variable",
                name: s.into(),
            }),
        }
    }
}

impl fmt::Display for Variable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Average `fine` cell values over the blocks of fine cells that make up
/// each cell of `coarse`.
pub fn restrict_block_average(
    values: &[f64],
    fine: &PeriodicGrid,
    coarse: &PeriodicGrid,
) -> Result<Vec<f64>> {
    let ratio = nesting_ratio(coarse, fine)?;
    if values.len() != fine.cell_count() {
        return Err(Error::Shape {
            expected: fine.cell_count(),
            got: values.len(),
        });
    }
    let mut out = vec![0.0; coarse.cell_count()];
    for (f, v) in values.iter().enumerate() {
        let (i, j) = fine.coords(f);
        out[coarse.index(i / ratio[0], j / ratio[1])] += v;
    }
    let block = (ratio[0] * ratio[1]) as f64;
    out.iter_mut().for_each(|v| *v /= block);
    Ok(out)
}

fn nesting_ratio(coarse: &PeriodicGrid, fine: &PeriodicGrid) -> Result<[usize; 2]> {
    let non_nested = || Error::NonNestedGrids {
        coarse: coarse.shape(),
        reference: fine.shape(),
    };
    if coarse.dim() != fine.dim() {
        return Err(non_nested());
    }
    let mut ratio = [1, 1];
    for axis in 0..coarse.dim() {
        let (nc, nf) = (coarse.n(axis), fine.n(axis));
        if nf % nc != 0 || coarse.interval(axis) != fine.interval(axis) {
            return Err(non_nested());
        }
        ratio[axis] = nf / nc;
    }
    Ok(ratio)
}

/// `√(Σ_K |K| (φ_K − φ_K^ref)²)` per variable, with the reference
/// block-averaged onto the coarse grid.
pub fn l2_error(coarse: &Field, reference: &Field, variables: &[Variable]) -> Result<Vec<f64>> {
    let grid = coarse.grid();
    variables
        .iter()
        .map(|var| {
            let ref_vals = restrict_block_average(&var.values(reference)?, reference.grid(), grid)?;
            let vals = var.values(coarse)?;
            let sum: f64 = vals
                .iter()
                .zip(&ref_vals)
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            Ok((sum * grid.cell_measure()).sqrt())
        })
        .collect()
}

/// `ln(e_{i−1}/e_i) / ln(dx_{i−1}/dx_i)` for consecutive pairs; the first
/// entry is always `None`, as is any entry involving a zero error.
pub fn compute_eoc(errors: &[(f64, f64)]) -> Result<Vec<Option<f64>>> {
    if errors.is_empty() {
        return Err(Error::InvalidParameter("no errors to compare".into()));
    }
    if errors.windows(2).any(|w| !(w[1].0 < w[0].0)) {
        return Err(Error::InvalidParameter(
            "grid spacings must be strictly decreasing".into(),
        ));
    }
    let mut out = vec![None];
    for w in errors.windows(2) {
        let ((dx0, e0), (dx1, e1)) = (w[0], w[1]);
        let eoc = (e0 > 0.0 && e1 > 0.0).then(|| (e0 / e1).ln() / (dx0 / dx1).ln());
        out.push(eoc);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EocRow {
    pub n: usize,
    pub dx: f64,
    pub errors: Vec<f64>,
    pub eoc: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EocTable {
    pub variables: Vec<Variable>,
    pub rows: Vec<EocRow>,
}

impl EocTable {
    /// `errors[r][v]` is the error of variable `v` on grid `r`.
    pub fn new(
        variables: Vec<Variable>,
        grids: &[(usize, f64)],
        errors: &[Vec<f64>],
    ) -> Result<Self> {
        if grids.len() != errors.len() {
            return Err(Error::Shape {
                expected: grids.len(),
                got: errors.len(),
            });
        }
        let mut rows: Vec<EocRow> = grids
            .iter()
            .zip(errors)
            .map(|(&(n, dx), e)| EocRow {
                n,
                dx,
                errors: e.clone(),
                eoc: Vec::new(),
            })
            .collect();
        for v in 0..variables.len() {
            let pairs: Vec<(f64, f64)> = rows.iter().map(|r| (r.dx, r.errors[v])).collect();
            for (row, eoc) in rows.iter_mut().zip(compute_eoc(&pairs)?) {
                row.eoc.push(eoc);
            }
        }
        Ok(Self { variables, rows })
    }

    /// EOC of `var` between the two finest grids.
    pub fn finest_eoc(&self, var: Variable) -> Option<f64> {
        let v = self.variables.iter().position(|&x| x == var)?;
        self.rows.last()?.eoc[v]
    }

    pub fn errors(&self, var: Variable) -> Option<Vec<f64>> {
        let v = self.variables.iter().position(|&x| x == var)?;
        Some(self.rows.iter().map(|r| r.errors[v]).collect())
    }
}
