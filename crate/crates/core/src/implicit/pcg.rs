//! Matrix-free preconditioned conjugate gradients with an FFT preconditioner
//! for the shifted wide Laplacian on periodic grids.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::mesh::{Boundary, Field, Grid2D};
use crate::num::{lit, Real};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgReport<T> {
    pub iterations: usize,
    /// Final `||r||_2 / ||b||_2`.
    pub relative_residual: T,
    pub converged: bool,
}

/// Solves `A x = b` for symmetric positive (semi-)definite `A`.
///
/// Stops once `||r||_2 <= rel_tol ||b||_2`. `precond` applies an
/// approximation of `A^+`.
pub fn pcg<T: Real>(
    apply: impl Fn(&Field<T>) -> Field<T>,
    precond: impl Fn(&Field<T>) -> Field<T>,
    b: &Field<T>,
    rel_tol: T,
    max_iter: usize,
) -> (Field<T>, CgReport<T>) {
    let mut x = b.scaled(T::zero());
    let bnorm = b.dot(b).sqrt();
    if bnorm == T::zero() {
        return (
            x,
            CgReport {
                iterations: 0,
                relative_residual: T::zero(),
                converged: true,
            },
        );
    }
    let mut r = b.clone();
    let mut z = precond(&r);
    let mut p = z.clone();
    let mut rz = r.dot(&z);
    let mut rel = T::one();
    for it in 1..=max_iter {
        let ap = apply(&p);
        let pap = p.dot(&ap);
        if !(pap > T::zero()) {
            // Search direction fell into the null space: nothing left to resolve.
            return (
                x,
                CgReport {
                    iterations: it - 1,
                    relative_residual: rel,
                    converged: rel <= rel_tol,
                },
            );
        }
        let alpha = rz / pap;
        x.axpy(alpha, &p);
        r.axpy(-alpha, &ap);
        rel = r.dot(&r).sqrt() / bnorm;
        if rel <= rel_tol {
            return (
                x,
                CgReport {
                    iterations: it,
                    relative_residual: rel,
                    converged: true,
                },
            );
        }
        z = precond(&r);
        let rz_new = r.dot(&z);
        let beta = rz_new / rz;
        rz = rz_new;
        let mut next = z.clone();
        next.axpy(beta, &p);
        p = next;
    }
    (
        x,
        CgReport {
            iterations: max_iter,
            relative_residual: rel,
            converged: false,
        },
    )
}

/// Exact inverse of `-c Delta_h + s` on periodic grids via 2-D FFT, with
/// zero response on the modes where the operator vanishes.
pub struct SpectralSolver<T: Real> {
    nx: usize,
    ny: usize,
    /// Symbol of `-Delta_h` for every mode, row-major.
    symbol: Vec<T>,
    row_fwd: Arc<dyn Fft<T>>,
    row_inv: Arc<dyn Fft<T>>,
    col_fwd: Arc<dyn Fft<T>>,
    col_inv: Arc<dyn Fft<T>>,
}

impl<T: Real> std::fmt::Debug for SpectralSolver<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpectralSolver")
            .field("nx", &self.nx)
            .field("ny", &self.ny)
            .finish()
    }
}

/// `sin^2(2 pi k / n)`, exactly zero on the modes `k = 0` and `2k = n`.
fn wide_symbol<T: Real>(k: usize, n: usize) -> T {
    if k == 0 || 2 * k == n {
        return T::zero();
    }
    let theta = lit::<T>(2.0) * T::PI() * T::from_usize_lossy(k) / T::from_usize_lossy(n);
    let s = theta.sin();
    s * s
}

impl<T: Real> SpectralSolver<T> {
    /// `None` for non-periodic grids.
    pub fn new(grid: &Grid2D<T>) -> Option<Self> {
        if grid.bc != Boundary::Periodic {
            return None;
        }
        let (nx, ny) = (grid.nx, grid.ny);
        let mut planner = FftPlanner::<T>::new();
        let mut symbol = Vec::with_capacity(nx * ny);
        let (hx2, hy2) = (grid.dx * grid.dx, grid.dy * grid.dy);
        for j in 0..ny {
            for i in 0..nx {
                symbol.push(wide_symbol::<T>(i, nx) / hx2 + wide_symbol::<T>(j, ny) / hy2);
            }
        }
        Some(SpectralSolver {
            nx,
            ny,
            symbol,
            row_fwd: planner.plan_fft_forward(nx),
            row_inv: planner.plan_fft_inverse(nx),
            col_fwd: planner.plan_fft_forward(ny),
            col_inv: planner.plan_fft_inverse(ny),
        })
    }

    fn transform(&self, data: &mut [Complex<T>], forward: bool) {
        let (row, col) = if forward {
            (&self.row_fwd, &self.col_fwd)
        } else {
            (&self.row_inv, &self.col_inv)
        };
        for chunk in data.chunks_mut(self.nx) {
            row.process(chunk);
        }
        let mut column = vec![Complex::new(T::zero(), T::zero()); self.ny];
        for i in 0..self.nx {
            for j in 0..self.ny {
                column[j] = data[j * self.nx + i];
            }
            col.process(&mut column);
            for j in 0..self.ny {
                data[j * self.nx + i] = column[j];
            }
        }
    }

    /// Applies `(-c Delta_h + s)^+` to `r`.
    pub fn solve(&self, r: &Field<T>, c: T, s: T) -> Field<T> {
        let mut data: Vec<Complex<T>> = r
            .interior()
            .into_iter()
            .map(|v| Complex::new(v, T::zero()))
            .collect();
        self.transform(&mut data, true);
        for (z, &sym) in data.iter_mut().zip(&self.symbol) {
            let d = c * sym + s;
            *z = if d > T::zero() {
                *z / d
            } else {
                Complex::new(T::zero(), T::zero())
            };
        }
        self.transform(&mut data, false);
        let norm = T::from_usize_lossy(self.nx * self.ny).recip();
        let values: Vec<T> = data.into_iter().map(|z| z.re * norm).collect();
        Field::from_interior(*r.grid(), &values)
            .expect("spectral buffer matches grid")
            .with_parity(r.parity())
    }
}
