//! Periodic Helmholtz solves `(I − αΔ_h) x = b` for the implicit acoustic step.
//!
//! `Δ_h` is the compact Laplacian of [`pressure_laplacian`]. In 1D the system
//! is cyclic tridiagonal and is solved with the Thomas algorithm plus a
//! Sherman–Morrison correction; in 2D the operator is diagonalised by the
//! discrete Fourier transform. Conjugate gradients act as a fallback when
//! the direct residual misses the tolerance.
//!
//! The constant mode has eigenvalue 1 while the others grow like `α/Δx²`,
//! so for large `α` the mean of `b` and its fluctuation live on wildly
//! different scales. Every solve therefore works on `b − mean(b)` and adds
//! the mean back at the end, which keeps the mean exact and avoids losing
//! the fluctuation to cancellation.

use std::sync::Arc;

use nalgebra::DMatrix;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::grid::PeriodicGrid;
use crate::spatial::pressure_laplacian;

pub const DEFAULT_TOL: f64 = 1e-12;
const DENSE_LIMIT: usize = 4096;
const CG_MAX_ITER_FACTOR: usize = 10;

/// `I − αΔ_h` on a periodic grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HelmholtzOperator {
    grid: PeriodicGrid,
    alpha: f64,
}

impl HelmholtzOperator {
    pub fn new(grid: PeriodicGrid, alpha: f64) -> Result<Self> {
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "alpha must be >= 0, got {alpha}"
            )));
        }
        Ok(Self { grid, alpha })
    }

    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// `(I − αΔ_h) x`
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let lap = pressure_laplacian(x, &self.grid);
        x.iter().zip(lap).map(|(x, l)| x - self.alpha * l).collect()
    }
}

/// Explicit matrix of `I − αΔ_h`, for oracle comparisons on small grids.
pub fn assemble_dense(op: &HelmholtzOperator) -> Result<DMatrix<f64>> {
    let grid = op.grid;
    let n = grid.cell_count();
    if n > DENSE_LIMIT {
        return Err(Error::GridTooLarge {
            cells: n,
            limit: DENSE_LIMIT,
        });
    }
    let mut a = DMatrix::<f64>::identity(n, n);
    for c in 0..n {
        for axis in 0..grid.dim() {
            let beta = op.alpha / (grid.dx(axis) * grid.d_sigma(axis));
            a[(c, c)] += 2.0 * beta;
            a[(c, grid.neighbor(c, axis, 1))] -= beta;
            a[(c, grid.neighbor(c, axis, -1))] -= beta;
        }
    }
    Ok(a)
}

/// One-shot solve. Prefer [`HelmholtzSolver`] when solving repeatedly on
/// the same grid.
pub fn solve_helmholtz(op: &HelmholtzOperator, b: &[f64], tol: f64) -> Result<Vec<f64>> {
    HelmholtzSolver::new(op.grid).solve(op.alpha, b, tol)
}

/// Helmholtz solver with transform plans and mode symbols cached per grid.
#[derive(Clone)]
pub struct HelmholtzSolver {
    grid: PeriodicGrid,
    fft: Option<FftCache>,
}

#[derive(Clone)]
struct FftCache {
    forward: [Arc<dyn Fft<f64>>; 2],
    inverse: [Arc<dyn Fft<f64>>; 2],
    /// `−Δ_h` eigenvalue of each mode, same layout as the cells.
    symbol: Vec<f64>,
}

impl std::fmt::Debug for HelmholtzSolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HelmholtzSolver")
            .field("grid", &self.grid)
            .field("fourier", &self.fft.is_some())
            .finish()
    }
}

impl HelmholtzSolver {
    pub fn new(grid: PeriodicGrid) -> Self {
        let use_fft = grid.dim() == 2 || grid.n(0) < 3;
        let fft = use_fft.then(|| FftCache::new(&grid));
        Self { grid, fft }
    }

    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }

    /// Solve `(I − αΔ_h) x = b` with `‖(I − αΔ_h)x − b‖₂ ≤ tol·‖b‖₂`.
    pub fn solve(&self, alpha: f64, b: &[f64], tol: f64) -> Result<Vec<f64>> {
        let n = self.grid.cell_count();
        if b.len() != n {
            return Err(Error::Shape {
                expected: n,
                got: b.len(),
            });
        }
        if !(tol > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "tolerance must be > 0, got {tol}"
            )));
        }
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "alpha must be >= 0, got {alpha}"
            )));
        }
        if let Some(v) = b.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonPhysical(format!(
                "non-finite Helmholtz right-hand side {v}"
            )));
        }
        if alpha == 0.0 || b.iter().all(|&v| v == b[0]) {
            return Ok(b.to_vec());
        }

        let mean_b = mean(b);
        let b_dev: Vec<f64> = b.iter().map(|v| v - mean_b).collect();
        let mut x_dev = match &self.fft {
            Some(cache) => cache.solve(&self.grid, alpha, &b_dev),
            None => {
                let beta = alpha / (self.grid.dx(0) * self.grid.d_sigma(0));
                cyclic_tridiagonal(1.0 + 2.0 * beta, -beta, &b_dev)
            }
        };
        remove_mean(&mut x_dev);

        let op = HelmholtzOperator {
            grid: self.grid,
            alpha,
        };
        let scale = norm(b);
        let mut res = residual_norm(&op, &x_dev, &b_dev);
        if res > tol * scale {
            x_dev = conjugate_gradient(&op, &b_dev, x_dev, tol * scale);
            remove_mean(&mut x_dev);
            res = residual_norm(&op, &x_dev, &b_dev);
            if !(res <= tol * scale) {
                return Err(Error::SolverBreakdown {
                    residual: res / scale,
                    tol,
                });
            }
        }
        Ok(x_dev.into_iter().map(|v| v + mean_b).collect())
    }
}

impl FftCache {
    fn new(grid: &PeriodicGrid) -> Self {
        let mut planner = FftPlanner::new();
        let (n0, n1) = (grid.n(0), grid.n(1));
        let forward = [planner.plan_fft_forward(n0), planner.plan_fft_forward(n1)];
        let inverse = [planner.plan_fft_inverse(n0), planner.plan_fft_inverse(n1)];
        let mode = |k: usize, n: usize, axis: usize| {
            let s = (std::f64::consts::PI * k as f64 / n as f64).sin();
            4.0 * s * s / (grid.dx(axis) * grid.d_sigma(axis))
        };
        let mut symbol = vec![0.0; grid.cell_count()];
        for (c, s) in symbol.iter_mut().enumerate() {
            let (i, j) = grid.coords(c);
            *s = mode(i, n0, 0);
            if grid.dim() == 2 {
                *s += mode(j, n1, 1);
            }
        }
        Self {
            forward,
            inverse,
            symbol,
        }
    }

    fn transform(
        &self,
        grid: &PeriodicGrid,
        data: &mut [Complex<f64>],
        plans: &[Arc<dyn Fft<f64>>; 2],
    ) {
        let (n0, n1) = (grid.n(0), grid.n(1));
        for row in data.chunks_exact_mut(n0) {
            plans[0].process(row);
        }
        if grid.dim() == 2 && n1 > 1 {
            let mut col = vec![Complex::new(0.0, 0.0); n1];
            for i in 0..n0 {
                for (j, v) in col.iter_mut().enumerate() {
                    *v = data[i + n0 * j];
                }
                plans[1].process(&mut col);
                for (j, v) in col.iter().enumerate() {
                    data[i + n0 * j] = *v;
                }
            }
        }
    }

    fn solve(&self, grid: &PeriodicGrid, alpha: f64, b_dev: &[f64]) -> Vec<f64> {
        let mut data: Vec<Complex<f64>> = b_dev.iter().map(|&v| Complex::new(v, 0.0)).collect();
        self.transform(grid, &mut data, &self.forward);
        data[0] = Complex::new(0.0, 0.0);
        for (v, s) in data.iter_mut().zip(&self.symbol).skip(1) {
            *v /= 1.0 + alpha * s;
        }
        self.transform(grid, &mut data, &self.inverse);
        let inv_n = 1.0 / grid.cell_count() as f64;
        data.iter().map(|v| v.re * inv_n).collect()
    }
}

/// Symmetric cyclic tridiagonal solve with constant diagonal `d` and
/// off-diagonals `e` (corners included), `n ≥ 3`.
fn cyclic_tridiagonal(d: f64, e: f64, rhs: &[f64]) -> Vec<f64> {
    let n = rhs.len();
    let gamma = -d;
    let mut diag = vec![d; n];
    diag[0] = d - gamma;
    diag[n - 1] = d - e * e / gamma;

    let mut u = vec![0.0; n];
    u[0] = gamma;
    u[n - 1] = e;

    let y = thomas(&diag, e, rhs);
    let z = thomas(&diag, e, &u);
    let v_last = e / gamma;
    let factor = (y[0] + v_last * y[n - 1]) / (1.0 + z[0] + v_last * z[n - 1]);
    y.iter().zip(&z).map(|(y, z)| y - factor * z).collect()
}

fn thomas(diag: &[f64], e: f64, rhs: &[f64]) -> Vec<f64> {
    let n = rhs.len();
    let mut c = vec![0.0; n];
    let mut x = vec![0.0; n];
    c[0] = e / diag[0];
    x[0] = rhs[0] / diag[0];
    for i in 1..n {
        let m = diag[i] - e * c[i - 1];
        c[i] = e / m;
        x[i] = (rhs[i] - e * x[i - 1]) / m;
    }
    for i in (0..n - 1).rev() {
        x[i] -= c[i] * x[i + 1];
    }
    x
}

fn conjugate_gradient(op: &HelmholtzOperator, b: &[f64], x0: Vec<f64>, abs_tol: f64) -> Vec<f64> {
    let mut x = x0;
    let ax = op.apply(&x);
    let mut r: Vec<f64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
    let mut p = r.clone();
    let mut rr = dot(&r, &r);
    let max_iter = CG_MAX_ITER_FACTOR * b.len() + 10;
    for _ in 0..max_iter {
        if rr.sqrt() <= abs_tol {
            break;
        }
        let ap = op.apply(&p);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            break;
        }
        let step = rr / pap;
        for i in 0..x.len() {
            x[i] += step * p[i];
            r[i] -= step * ap[i];
        }
        let rr_new = dot(&r, &r);
        let beta = rr_new / rr;
        for i in 0..p.len() {
            p[i] = r[i] + beta * p[i];
        }
        rr = rr_new;
    }
    x
}

fn residual_norm(op: &HelmholtzOperator, x: &[f64], b: &[f64]) -> f64 {
    let ax = op.apply(x);
    norm(&ax.iter().zip(b).map(|(a, b)| a - b).collect::<Vec<_>>())
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn remove_mean(v: &mut [f64]) {
    let m = mean(v);
    v.iter_mut().for_each(|x| *x -= m);
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(a, b)| a * b).sum()
}

fn norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn random_vec(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.gen_range(-1.0..1.0) + 2.0).collect()
    }

    /// Dense LU on the zero-mean part; rows sum to one, so the mean of the
    /// solution equals the mean of `b`.
    fn dense_oracle(op: &HelmholtzOperator, b: &[f64]) -> Vec<f64> {
        let a = assemble_dense(op).unwrap();
        let m = mean(b);
        let rhs = DVector::from_iterator(b.len(), b.iter().map(|v| v - m));
        let x = a.lu().solve(&rhs).unwrap();
        let xm = x.mean();
        x.iter().map(|v| v - xm + m).collect()
    }

    #[test]
    fn dense_three_cell_example() {
        let g = PeriodicGrid::new_1d(0.0, 3.0, 3).unwrap();
        let a = assemble_dense(&HelmholtzOperator::new(g, 1.0).unwrap()).unwrap();
        let expected = DMatrix::from_row_slice(3, 3, &[3., -1., -1., -1., 3., -1., -1., -1., 3.]);
        assert_eq!(a, expected);
        let id = assemble_dense(&HelmholtzOperator::new(g, 0.0).unwrap()).unwrap();
        assert_eq!(id, DMatrix::identity(3, 3));
    }

    #[test]
    fn dense_is_symmetric_with_unit_row_sums() {
        let g = PeriodicGrid::new_2d([0.0, 1.0], [0.0, 0.6], [5, 4]).unwrap();
        let a = assemble_dense(&HelmholtzOperator::new(g, 0.37).unwrap()).unwrap();
        assert_eq!(a, a.transpose());
        for r in a.row_iter() {
            assert!((r.sum() - 1.0).abs() < 1e-12);
        }
        let big = PeriodicGrid::new_2d([0.0, 1.0], [0.0, 1.0], [65, 64]).unwrap();
        assert!(matches!(
            assemble_dense(&HelmholtzOperator::new(big, 1.0).unwrap()),
            Err(Error::GridTooLarge { .. })
        ));
    }

    #[test]
    fn identity_and_constant_cases() {
        let g = PeriodicGrid::new_1d(0.0, 1.0, 10).unwrap();
        let b = random_vec(10, 1);
        assert_eq!(
            solve_helmholtz(&HelmholtzOperator::new(g, 0.0).unwrap(), &b, 1e-12).unwrap(),
            b
        );
        let c = vec![0.1; 10];
        assert_eq!(
            solve_helmholtz(&HelmholtzOperator::new(g, 5.0).unwrap(), &c, 1e-12).unwrap(),
            c
        );
    }

    #[test]
    fn single_fourier_mode() {
        let n = 64;
        let g = PeriodicGrid::new_1d(0.0, 1.0, n).unwrap();
        let dx = g.dx(0);
        let b: Vec<f64> = (0..n).map(|c| (2.0 * PI * g.center(c)[0]).sin()).collect();
        let lambda = 4.0 * (PI * dx).sin().powi(2) / (dx * dx);
        let x = solve_helmholtz(&HelmholtzOperator::new(g, 1.0).unwrap(), &b, 1e-12).unwrap();
        for c in 0..n {
            assert!((x[c] - b[c] / (1.0 + lambda)).abs() < 1e-13);
        }
    }

    #[test]
    fn matches_dense_oracle() {
        let grids = [
            PeriodicGrid::new_1d(0.0, 1.0, 1).unwrap(),
            PeriodicGrid::new_1d(0.0, 1.0, 2).unwrap(),
            PeriodicGrid::new_1d(0.0, 1.0, 3).unwrap(),
            PeriodicGrid::new_1d(-1.0, 1.0, 64).unwrap(),
            PeriodicGrid::new_2d([0.0, 1.0], [0.0, 1.0], [16, 16]).unwrap(),
            PeriodicGrid::new_2d([0.0, 2.0], [0.0, 1.0], [7, 3]).unwrap(),
        ];
        for (k, g) in grids.iter().enumerate() {
            let b = random_vec(g.cell_count(), k as u64);
            for alpha in [0.0, 1.0, 1e6] {
                let op = HelmholtzOperator::new(*g, alpha).unwrap();
                let x = solve_helmholtz(&op, &b, 1e-12).unwrap();
                let oracle = dense_oracle(&op, &b);
                let diff = x
                    .iter()
                    .zip(&oracle)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max);
                assert!(diff <= 1e-10, "grid {k} alpha {alpha}: {diff}");
                assert!((mean(&x) - mean(&b)).abs() <= 1e-12);
            }
        }
    }

    fn residual(op: &HelmholtzOperator, x: &[f64], b: &[f64]) -> f64 {
        let ax = op.apply(x);
        norm(&ax.iter().zip(b).map(|(a, b)| a - b).collect::<Vec<_>>())
    }

    #[test]
    fn residual_contract_holds() {
        let g = PeriodicGrid::new_2d([0.0, 1.0], [0.0, 1.0], [32, 24]).unwrap();
        let mut b = random_vec(g.cell_count(), 9);
        remove_mean(&mut b);
        for alpha in [1e-3, 1.0, 1e4] {
            let op = HelmholtzOperator::new(g, alpha).unwrap();
            let x = solve_helmholtz(&op, &b, 1e-12).unwrap();
            let r = residual(&op, &x, &b);
            assert!(r <= 1e-12 * norm(&b), "alpha {alpha}: {r}");
        }
    }

    #[test]
    fn residual_with_mean_is_bounded_by_representation() {
        // storing x = mean + small rounds the small part to ulp(mean); the
        // stencil then amplifies that by up to 1 + 4α Σ 1/Δx²
        let g = PeriodicGrid::new_2d([0.0, 1.0], [0.0, 1.0], [32, 24]).unwrap();
        let b = random_vec(g.cell_count(), 9);
        for alpha in [1e-3, 1.0, 1e4] {
            let op = HelmholtzOperator::new(g, alpha).unwrap();
            let x = solve_helmholtz(&op, &b, 1e-12).unwrap();
            let amp = 1.0 + 4.0 * alpha * (1.0 / g.dx(0).powi(2) + 1.0 / g.dx(1).powi(2));
            let xmax = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let repr = amp * xmax * f64::EPSILON * (g.cell_count() as f64).sqrt();
            let r = residual(&op, &x, &b);
            assert!(r <= 1e-12 * norm(&b) + repr, "alpha {alpha}: {r} vs {repr}");
        }
    }

    #[test]
    fn cg_agrees_with_direct() {
        let g = PeriodicGrid::new_1d(0.0, 1.0, 40).unwrap();
        let op = HelmholtzOperator::new(g, 0.01).unwrap();
        let mut b = random_vec(40, 3);
        remove_mean(&mut b);
        let direct = cyclic_tridiagonal(
            1.0 + 2.0 * 0.01 / g.dx(0).powi(2),
            -0.01 / g.dx(0).powi(2),
            &b,
        );
        let cg = conjugate_gradient(&op, &b, vec![0.0; 40], 1e-14);
        for (a, c) in direct.iter().zip(&cg) {
            assert!((a - c).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_input() {
        let g = PeriodicGrid::new_1d(0.0, 1.0, 4).unwrap();
        assert!(HelmholtzOperator::new(g, -1.0).is_err());
        let s = HelmholtzSolver::new(g);
        assert!(s.solve(1.0, &[1.0; 3], 1e-12).is_err());
        assert!(s.solve(1.0, &[1.0, f64::NAN, 1.0, 1.0], 1e-12).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn mean_is_preserved(
                b in proptest::collection::vec(-5.0f64..5.0, 3..80),
                log_alpha in -4.0f64..6.0,
            ) {
                let g = PeriodicGrid::new_1d(0.0, 1.0, b.len()).unwrap();
                let x = HelmholtzSolver::new(g).solve(10f64.powf(log_alpha), &b, 1e-12).unwrap();
                prop_assert!((mean(&x) - mean(&b)).abs() <= 1e-12 * (1.0 + mean(&b).abs()));
            }
        }
    }
}
