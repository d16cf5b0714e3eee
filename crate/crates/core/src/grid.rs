//! Uniform periodic Cartesian meshes in one and two dimensions, and the
//! piecewise-constant cell fields that live on them.
//!
//! Cells are stored row-major with `x₁` fastest: cell `(i, j)` has flat
//! index `i + n₁·j`. Every cell owns the face on its upper side in each
//! direction, so a face is identified by `(axis, lower cell)`.

use crate::error::{Error, Result};
use crate::model::CellState;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodicGrid {
    dim: usize,
    n: [usize; 2],
    lower: [f64; 2],
    upper: [f64; 2],
    dx: [f64; 2],
}

/// Interior face `σ = K|L` with normal `+e_axis` pointing from `lower` to `upper`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Face {
    pub axis: usize,
    pub lower: usize,
    pub upper: usize,
}

impl PeriodicGrid {
    pub fn new_1d(a: f64, b: f64, n: usize) -> Result<Self> {
        Self::build(1, [n, 1], [a, 0.0], [b, 1.0])
    }

    pub fn new_2d(x1: [f64; 2], x2: [f64; 2], n: [usize; 2]) -> Result<Self> {
        Self::build(2, n, [x1[0], x2[0]], [x1[1], x2[1]])
    }

    /// Build from per-direction intervals; `n.len()` selects the dimension.
    pub fn from_domain(domain: &[(f64, f64)], n: &[usize]) -> Result<Self> {
        match (domain, n) {
            ([(a, b)], [n1]) => Self::new_1d(*a, *b, *n1),
            ([(a1, b1), (a2, b2)], [n1, n2]) => Self::new_2d([*a1, *b1], [*a2, *b2], [*n1, *n2]),
            _ => Err(Error::InvalidParameter(format!(
                "domain has {} directions but {} cell counts were given",
                domain.len(),
                n.len()
            ))),
        }
    }

    fn build(dim: usize, n: [usize; 2], lower: [f64; 2], upper: [f64; 2]) -> Result<Self> {
        let mut dx = [1.0; 2];
        for k in 0..dim {
            if n[k] == 0 {
                return Err(Error::InvalidParameter(
                    "cell count must be positive".into(),
                ));
            }
            let width = upper[k] - lower[k];
            if !(width > 0.0 && width.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "empty interval [{}, {})",
                    lower[k], upper[k]
                )));
            }
            dx[k] = width / n[k] as f64;
        }
        Ok(Self {
            dim,
            n,
            lower,
            upper,
            dx,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n(&self, axis: usize) -> usize {
        self.n[axis]
    }

    pub fn shape(&self) -> Vec<usize> {
        self.n[..self.dim].to_vec()
    }

    pub fn dx(&self, axis: usize) -> f64 {
        self.dx[axis]
    }

    pub fn min_dx(&self) -> f64 {
        self.dx[..self.dim]
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn interval(&self, axis: usize) -> (f64, f64) {
        (self.lower[axis], self.upper[axis])
    }

    pub fn cell_count(&self) -> usize {
        self.n[..self.dim].iter().product()
    }

    /// `|K|`
    pub fn cell_measure(&self) -> f64 {
        self.dx[..self.dim].iter().product()
    }

    /// `|σ|` for a face normal to `axis`.
    pub fn face_measure(&self, axis: usize) -> f64 {
        match self.dim {
            1 => 1.0,
            _ => self.dx[1 - axis],
        }
    }

    /// `d_σ`, center-to-center distance across a face normal to `axis`.
    pub fn d_sigma(&self, axis: usize) -> f64 {
        self.dx[axis]
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        i + self.n[0] * j
    }

    pub fn coords(&self, c: usize) -> (usize, usize) {
        (c % self.n[0], c / self.n[0])
    }

    /// Periodic neighbour `offset` cells away along `axis`.
    pub fn neighbor(&self, c: usize, axis: usize, offset: isize) -> usize {
        let (i, j) = self.coords(c);
        let wrap = |idx: usize, n: usize| (idx as isize + offset).rem_euclid(n as isize) as usize;
        match axis {
            0 => self.index(wrap(i, self.n[0]), j),
            _ => self.index(i, wrap(j, self.n[1])),
        }
    }

    pub fn center(&self, c: usize) -> [f64; 2] {
        let (i, j) = self.coords(c);
        [
            self.lower[0] + (i as f64 + 0.5) * self.dx[0],
            self.lower[1] + (j as f64 + 0.5) * self.dx[1],
        ]
    }

    /// All faces, each visited once.
    pub fn faces(&self) -> impl Iterator<Item = Face> + '_ {
        (0..self.dim).flat_map(move |axis| {
            (0..self.cell_count()).map(move |c| Face {
                axis,
                lower: c,
                upper: self.neighbor(c, axis, 1),
            })
        })
    }

    /// Faces of cell `c` with the outward unit normal component (`±1`).
    pub fn cell_faces(&self, c: usize) -> impl Iterator<Item = (Face, f64)> + '_ {
        (0..self.dim).flat_map(move |axis| {
            let below = self.neighbor(c, axis, -1);
            [
                (
                    Face {
                        axis,
                        lower: c,
                        upper: self.neighbor(c, axis, 1),
                    },
                    1.0,
                ),
                (
                    Face {
                        axis,
                        lower: below,
                        upper: c,
                    },
                    -1.0,
                ),
            ]
        })
    }
}

/// `{{φ}}_σ = (φ_K + φ_L)/2`
#[inline]
pub fn face_average(phi_k: f64, phi_l: f64) -> f64 {
    0.5 * (phi_k + phi_l)
}

/// `[[φ]]_σ = φ_L − φ_K`, oriented from `K` into `L`.
#[inline]
pub fn face_jump(phi_k: f64, phi_l: f64) -> f64 {
    phi_l - phi_k
}

/// `Σ_K |K| φ_K`
pub fn integrate(values: &[f64], grid: &PeriodicGrid) -> f64 {
    values.iter().sum::<f64>() * grid.cell_measure()
}

/// Density and momentum on every cell of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: PeriodicGrid,
    rho: Vec<f64>,
    mom: Vec<Vec<f64>>,
}

impl Field {
    pub fn new(grid: PeriodicGrid, rho: Vec<f64>, mom: Vec<Vec<f64>>) -> Result<Self> {
        let cells = grid.cell_count();
        if rho.len() != cells {
            return Err(Error::Shape {
                expected: cells,
                got: rho.len(),
            });
        }
        if mom.len() != grid.dim() {
            return Err(Error::Shape {
                expected: grid.dim(),
                got: mom.len(),
            });
        }
        for m in &mom {
            if m.len() != cells {
                return Err(Error::Shape {
                    expected: cells,
                    got: m.len(),
                });
            }
        }
        Ok(Self { grid, rho, mom })
    }

    pub fn constant(grid: PeriodicGrid, state: CellState) -> Result<Self> {
        let cells = grid.cell_count();
        let mom = (0..grid.dim()).map(|k| vec![state.mom[k]; cells]).collect();
        Self::new(grid, vec![state.rho; cells], mom)
    }

    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }

    pub fn cell_count(&self) -> usize {
        self.rho.len()
    }

    pub fn rho(&self) -> &[f64] {
        &self.rho
    }

    pub fn mom(&self, axis: usize) -> &[f64] {
        &self.mom[axis]
    }

    pub fn velocity(&self, axis: usize) -> Vec<f64> {
        self.mom[axis]
            .iter()
            .zip(&self.rho)
            .map(|(m, r)| m / r)
            .collect()
    }

    pub fn cell(&self, c: usize) -> CellState {
        let mut mom = [0.0; 2];
        for (k, m) in self.mom.iter().enumerate() {
            mom[k] = m[c];
        }
        CellState {
            rho: self.rho[c],
            mom,
            dim: self.grid.dim(),
        }
    }

    pub fn into_parts(self) -> (PeriodicGrid, Vec<f64>, Vec<Vec<f64>>) {
        (self.grid, self.rho, self.mom)
    }

    pub fn total_mass(&self) -> f64 {
        integrate(&self.rho, &self.grid)
    }

    pub fn total_momentum(&self) -> Vec<f64> {
        self.mom.iter().map(|m| integrate(m, &self.grid)).collect()
    }

    pub fn mean_density(&self) -> f64 {
        self.rho.iter().sum::<f64>() / self.rho.len() as f64
    }

    /// First non-physical entry, if any: a non-finite value or `ρ ≤ 0`.
    pub fn find_non_physical(&self) -> Option<String> {
        for (c, &r) in self.rho.iter().enumerate() {
            if !r.is_finite() {
                return Some(format!("non-finite density {r} in cell {c}"));
            }
            if r <= 0.0 {
                return Some(format!("non-positive density {r} in cell {c}"));
            }
        }
        for (k, m) in self.mom.iter().enumerate() {
            if let Some((c, v)) = m.iter().enumerate().find(|(_, v)| !v.is_finite()) {
                return Some(format!(
                    "non-finite momentum component {k} = {v} in cell {c}"
                ));
            }
        }
        None
    }
}

/// Sample a pointwise initial condition at cell centers.
pub fn sample_initial_condition<F>(grid: &PeriodicGrid, ic: F) -> Result<Field>
where
    F: Fn(&[f64]) -> CellState,
{
    let dim = grid.dim();
    let cells = grid.cell_count();
    let mut rho = Vec::with_capacity(cells);
    let mut mom = vec![Vec::with_capacity(cells); dim];
    for c in 0..cells {
        let x = grid.center(c);
        let s = ic(&x[..dim]);
        if !(s.rho > 0.0 && s.rho.is_finite()) {
            return Err(Error::Domain {
                quantity: "initial density",
                value: s.rho,
            });
        }
        rho.push(s.rho);
        for (k, m) in mom.iter_mut().enumerate() {
            m.push(s.mom[k]);
        }
    }
    Field::new(*grid, rho, mom)
}
