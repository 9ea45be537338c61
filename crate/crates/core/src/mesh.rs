//! Uniform Cartesian grid, cell-centered fields with two ghost layers, and
//! the central difference operators used throughout the scheme.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::num::{lit, Real};

/// Ghost layers on every side of a field.
pub const GHOST: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    Periodic,
    /// Reflective walls (experimental).
    Wall,
}

/// Reflection behaviour of a field at wall boundaries, per direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn flip(self) -> Parity {
        match self {
            Parity::Even => Parity::Odd,
            Parity::Odd => Parity::Even,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid2D<T> {
    pub nx: usize,
    pub ny: usize,
    pub x0: T,
    pub x1_end: T,
    pub y0: T,
    pub y1_end: T,
    pub dx: T,
    pub dy: T,
    pub bc: Boundary,
}

impl<T: Real> Grid2D<T> {
    pub fn new(nx: usize, ny: usize, x: (T, T), y: (T, T), bc: Boundary) -> Result<Self> {
        if nx < 4 || ny < 4 {
            return Err(Error::InvalidGrid(format!(
                "need at least 4 cells per direction, got {nx}x{ny}"
            )));
        }
        let dx = (x.1 - x.0) / T::from_usize_lossy(nx);
        let dy = (y.1 - y.0) / T::from_usize_lossy(ny);
        if !(dx > T::zero() && dy > T::zero()) || !dx.is_finite() || !dy.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "domain [{}, {}] x [{}, {}] has non-positive extent",
                x.0, x.1, y.0, y.1
            )));
        }
        Ok(Grid2D {
            nx,
            ny,
            x0: x.0,
            x1_end: x.1,
            y0: y.0,
            y1_end: y.1,
            dx,
            dy,
            bc,
        })
    }

    /// Periodic `n x n` grid on the unit square.
    pub fn unit_square(n: usize) -> Result<Self> {
        Self::new(n, n, (T::zero(), T::one()), (T::zero(), T::one()), Boundary::Periodic)
    }

    pub fn spacing(&self, dir: Dir) -> T {
        match dir {
            Dir::X1 => self.dx,
            Dir::X2 => self.dy,
        }
    }

    pub fn cells(&self, dir: Dir) -> usize {
        match dir {
            Dir::X1 => self.nx,
            Dir::X2 => self.ny,
        }
    }

    pub fn cell_area(&self) -> T {
        self.dx * self.dy
    }

    pub fn num_cells(&self) -> usize {
        self.nx * self.ny
    }

    /// Coordinates of the center of interior cell `(i, j)`.
    pub fn center(&self, i: usize, j: usize) -> (T, T) {
        let half = lit::<T>(0.5);
        (
            self.x0 + (T::from_usize_lossy(i) + half) * self.dx,
            self.y0 + (T::from_usize_lossy(j) + half) * self.dy,
        )
    }

    pub(crate) fn stride(&self) -> usize {
        self.nx + 2 * GHOST
    }

    pub(crate) fn storage_len(&self) -> usize {
        self.stride() * (self.ny + 2 * GHOST)
    }
}

/// Coordinate direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dir {
    X1,
    X2,
}

impl Dir {
    pub const BOTH: [Dir; 2] = [Dir::X1, Dir::X2];

    pub fn index(self) -> usize {
        match self {
            Dir::X1 => 0,
            Dir::X2 => 1,
        }
    }

    /// Parses the one-based direction number `1` or `2`.
    pub fn from_number(m: usize) -> Result<Dir> {
        match m {
            1 => Ok(Dir::X1),
            2 => Ok(Dir::X2),
            _ => Err(Error::InvalidParameter(format!("direction must be 1 or 2, got {m}"))),
        }
    }

    pub(crate) fn offset(self, s: isize) -> (isize, isize) {
        match self {
            Dir::X1 => (s, 0),
            Dir::X2 => (0, s),
        }
    }
}

/// Cell-centered scalar field with two ghost layers.
#[derive(Debug, Clone, PartialEq)]
pub struct Field<T> {
    grid: Grid2D<T>,
    parity: [Parity; 2],
    data: Vec<T>,
}

impl<T: Real> Field<T> {
    pub fn zeros(grid: Grid2D<T>) -> Self {
        Self::zeros_with_parity(grid, [Parity::Even; 2])
    }

    pub fn zeros_with_parity(grid: Grid2D<T>, parity: [Parity; 2]) -> Self {
        Field {
            grid,
            parity,
            data: vec![T::zero(); grid.storage_len()],
        }
    }

    pub fn constant(grid: Grid2D<T>, value: T) -> Self {
        Field {
            grid,
            parity: [Parity::Even; 2],
            data: vec![value; grid.storage_len()],
        }
    }

    /// Samples `f(x1, x2)` at cell centers and fills the ghost layers.
    pub fn from_fn(grid: Grid2D<T>, f: impl Fn(T, T) -> T + Sync) -> Self {
        Self::from_index_fn(grid, [Parity::Even; 2], |i, j| {
            let (x, y) = grid.center(i, j);
            f(x, y)
        })
    }

    /// Builds a field from per-cell values `f(i, j)` computed in parallel
    /// over rows, then fills the ghost layers.
    pub fn from_index_fn(
        grid: Grid2D<T>,
        parity: [Parity; 2],
        f: impl Fn(usize, usize) -> T + Sync,
    ) -> Self {
        let mut out = Self::zeros_with_parity(grid, parity);
        let sx = grid.stride();
        let (nx, ny) = (grid.nx, grid.ny);
        out.data
            .par_chunks_mut(sx)
            .enumerate()
            .for_each(|(row, chunk)| {
                if row < GHOST || row >= ny + GHOST {
                    return;
                }
                let j = row - GHOST;
                for i in 0..nx {
                    chunk[i + GHOST] = f(i, j);
                }
            });
        out.apply_bc();
        out
    }

    /// Builds a field from interior values in row-major order (`x1` fastest).
    pub fn from_interior(grid: Grid2D<T>, values: &[T]) -> Result<Self> {
        if values.len() != grid.num_cells() {
            return Err(Error::InvalidGrid(format!(
                "expected {} values, got {}",
                grid.num_cells(),
                values.len()
            )));
        }
        Ok(Self::from_index_fn(grid, [Parity::Even; 2], |i, j| {
            values[j * grid.nx + i]
        }))
    }

    pub fn grid(&self) -> &Grid2D<T> {
        &self.grid
    }

    pub fn parity(&self) -> [Parity; 2] {
        self.parity
    }

    /// Changes the wall reflection parity and refreshes the ghost layers.
    pub fn with_parity(mut self, parity: [Parity; 2]) -> Self {
        self.parity = parity;
        self.apply_bc();
        self
    }

    #[inline]
    fn idx(&self, i: isize, j: isize) -> usize {
        let g = GHOST as isize;
        debug_assert!(i >= -g && i < self.grid.nx as isize + g);
        debug_assert!(j >= -g && j < self.grid.ny as isize + g);
        ((j + g) as usize) * self.grid.stride() + (i + g) as usize
    }

    /// Value at `(i, j)`, where indices may reach into the ghost layers.
    #[inline]
    pub fn get(&self, i: isize, j: isize) -> T {
        self.data[self.idx(i, j)]
    }

    /// Value of interior cell `(i, j)`.
    #[inline]
    pub fn at(&self, i: usize, j: usize) -> T {
        self.get(i as isize, j as isize)
    }

    /// Sets an interior value; ghosts are stale until [`Field::apply_bc`].
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        let k = self.idx(i as isize, j as isize);
        self.data[k] = v;
    }

    /// Interior values in row-major order.
    pub fn interior(&self) -> Vec<T> {
        let mut out = Vec::with_capacity(self.grid.num_cells());
        for j in 0..self.grid.ny {
            for i in 0..self.grid.nx {
                out.push(self.at(i, j));
            }
        }
        out
    }

    /// Refreshes ghost layers from the interior.
    pub fn apply_bc(&mut self) {
        let (nx, ny) = (self.grid.nx as isize, self.grid.ny as isize);
        let g = GHOST as isize;
        let periodic = self.grid.bc == Boundary::Periodic;
        let sign = |p: Parity| match p {
            Parity::Even => T::one(),
            Parity::Odd => -T::one(),
        };
        let (s1, s2) = (sign(self.parity[0]), sign(self.parity[1]));
        for j in 0..ny {
            for k in 1..=g {
                let (l, r) = if periodic {
                    (self.get(nx - k, j), self.get(k - 1, j))
                } else {
                    (s1 * self.get(k - 1, j), s1 * self.get(nx - k, j))
                };
                let li = self.idx(-k, j);
                let ri = self.idx(nx - 1 + k, j);
                self.data[li] = l;
                self.data[ri] = r;
            }
        }
        for i in -g..nx + g {
            for k in 1..=g {
                let (b, t) = if periodic {
                    (self.get(i, ny - k), self.get(i, k - 1))
                } else {
                    (s2 * self.get(i, k - 1), s2 * self.get(i, ny - k))
                };
                let bi = self.idx(i, -k);
                let ti = self.idx(i, ny - 1 + k);
                self.data[bi] = b;
                self.data[ti] = t;
            }
        }
    }

    /// Sum of interior values.
    pub fn sum(&self) -> T {
        let mut s = T::zero();
        for j in 0..self.grid.ny {
            for i in 0..self.grid.nx {
                s = s + self.at(i, j);
            }
        }
        s
    }

    pub fn mean(&self) -> T {
        self.sum() / T::from_usize_lossy(self.grid.num_cells())
    }

    /// Plain (unweighted) inner product of interior values.
    pub fn dot(&self, other: &Field<T>) -> T {
        debug_assert_eq!(self.grid, other.grid);
        let mut s = T::zero();
        for j in 0..self.grid.ny {
            for i in 0..self.grid.nx {
                s = s + self.at(i, j) * other.at(i, j);
            }
        }
        s
    }

    pub fn max_abs(&self) -> T {
        let mut m = T::zero();
        for j in 0..self.grid.ny {
            for i in 0..self.grid.nx {
                m = m.max(self.at(i, j).abs());
            }
        }
        m
    }

    pub fn min(&self) -> T {
        let mut m = T::infinity();
        for j in 0..self.grid.ny {
            for i in 0..self.grid.nx {
                m = m.min(self.at(i, j));
            }
        }
        m
    }

    /// Location and value of the smallest interior entry.
    pub fn argmin(&self) -> ((usize, usize), T) {
        let mut best = ((0, 0), self.at(0, 0));
        for j in 0..self.grid.ny {
            for i in 0..self.grid.nx {
                let v = self.at(i, j);
                if !(v >= best.1) {
                    best = ((i, j), v);
                }
            }
        }
        best
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// `self += a * x`, ghosts included (both fields must share parity).
    pub fn axpy(&mut self, a: T, x: &Field<T>) {
        debug_assert_eq!(self.grid, x.grid);
        debug_assert_eq!(self.parity, x.parity);
        for (s, &v) in self.data.iter_mut().zip(&x.data) {
            *s = *s + a * v;
        }
    }

    pub fn scale(&mut self, a: T) {
        for s in &mut self.data {
            *s = *s * a;
        }
    }

    pub fn scaled(&self, a: T) -> Field<T> {
        let mut out = self.clone();
        out.scale(a);
        out
    }

    pub fn add_scalar(&mut self, a: T) {
        for s in &mut self.data {
            *s = *s + a;
        }
    }

    /// Pointwise map over every stored value, ghosts included.
    ///
    /// Only valid for maps that commute with the boundary reflection
    /// (any map for periodic grids or even parity).
    pub fn map(&self, f: impl Fn(T) -> T) -> Field<T> {
        Field {
            grid: self.grid,
            parity: self.parity,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Pointwise combination over every stored value, ghosts included.
    pub fn zip_map(&self, other: &Field<T>, f: impl Fn(T, T) -> T) -> Field<T> {
        debug_assert_eq!(self.grid, other.grid);
        Field {
            grid: self.grid,
            parity: self.parity,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    /// CSV dump with header `x1,x2,<name>`, cell centers in row-major
    /// order, 17 significant digits.
    pub fn to_csv(&self, name: &str) -> String {
        let mut s = format!("x1,x2,{name}\n");
        for j in 0..self.grid.ny {
            for i in 0..self.grid.nx {
                let (x, y) = self.grid.center(i, j);
                s.push_str(&format!(
                    "{:.16e},{:.16e},{:.16e}\n",
                    x.to_f64_lossy(),
                    y.to_f64_lossy(),
                    self.at(i, j).to_f64_lossy()
                ));
            }
        }
        s
    }
}

/// Returns a copy of `f` with refreshed ghost layers.
pub fn apply_bc<T: Real>(f: &Field<T>) -> Field<T> {
    let mut out = f.clone();
    out.apply_bc();
    out
}

#[inline]
fn diff<T: Real>(right: T, left: T, two_h: T) -> T {
    (right - left) / two_h
}

/// `(f_{i+1} - f_{i-1}) / (2 h)` in direction `dir`.
pub fn central_diff<T: Real>(f: &Field<T>, dir: Dir) -> Field<T> {
    let grid = *f.grid();
    let two_h = lit::<T>(2.0) * grid.spacing(dir);
    let (oi, oj) = dir.offset(1);
    let mut parity = f.parity();
    parity[dir.index()] = parity[dir.index()].flip();
    Field::from_index_fn(grid, parity, |i, j| {
        let (i, j) = (i as isize, j as isize);
        diff(f.get(i + oi, j + oj), f.get(i - oi, j - oj), two_h)
    })
}

/// Wide-stencil Laplacian `sum_m D_m D_m f`, with `D_m` the central
/// difference; equal bitwise to chaining [`central_diff`] calls.
pub fn wide_laplacian<T: Real>(f: &Field<T>) -> Field<T> {
    let grid = *f.grid();
    let two = lit::<T>(2.0);
    let (hx, hy) = (two * grid.dx, two * grid.dy);
    Field::from_index_fn(grid, f.parity(), |i, j| {
        let (i, j) = (i as isize, j as isize);
        let gxp = diff(f.get(i + 2, j), f.get(i, j), hx);
        let gxm = diff(f.get(i, j), f.get(i - 2, j), hx);
        let gyp = diff(f.get(i, j + 2), f.get(i, j), hy);
        let gym = diff(f.get(i, j), f.get(i, j - 2), hy);
        diff(gxp, gxm, hx) + diff(gyp, gym, hy)
    })
}

/// `D_1 u1 + D_2 u2`.
pub fn discrete_divergence<T: Real>(u1: &Field<T>, u2: &Field<T>) -> Field<T> {
    let grid = *u1.grid();
    let two = lit::<T>(2.0);
    let (hx, hy) = (two * grid.dx, two * grid.dy);
    Field::from_index_fn(grid, [Parity::Even; 2], |i, j| {
        let (i, j) = (i as isize, j as isize);
        diff(u1.get(i + 1, j), u1.get(i - 1, j), hx) + diff(u2.get(i, j + 1), u2.get(i, j - 1), hy)
    })
}

/// `(D_1 p, D_2 p)`.
pub fn discrete_gradient<T: Real>(p: &Field<T>) -> (Field<T>, Field<T>) {
    (central_diff(p, Dir::X1), central_diff(p, Dir::X2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn row_grid(bc: Boundary) -> Grid2D<f64> {
        Grid2D::new(4, 4, (0.0, 1.0), (0.0, 1.0), bc).unwrap()
    }

    fn random_field(grid: Grid2D<f64>, seed: u64) -> Field<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let vals: Vec<f64> = (0..grid.num_cells()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        Field::from_interior(grid, &vals).unwrap()
    }

    #[test]
    fn grid_rejects_small_or_degenerate() {
        assert!(Grid2D::<f64>::new(3, 8, (0.0, 1.0), (0.0, 1.0), Boundary::Periodic).is_err());
        assert!(Grid2D::<f64>::new(8, 8, (1.0, 1.0), (0.0, 1.0), Boundary::Periodic).is_err());
        let g = Grid2D::<f64>::new(10, 20, (-1.0, 1.0), (0.0, 1.0), Boundary::Periodic).unwrap();
        assert_eq!(g.dx, 0.2);
        assert_eq!(g.dy, 0.05);
    }

    #[test]
    fn periodic_wrap() {
        let g = row_grid(Boundary::Periodic);
        let f = Field::from_index_fn(g, [Parity::Even; 2], |i, _| (i + 1) as f64);
        assert_eq!((f.get(-2, 0), f.get(-1, 0)), (3.0, 4.0));
        assert_eq!((f.get(4, 0), f.get(5, 0)), (1.0, 2.0));
    }

    #[test]
    fn wall_even_and_odd_mirror() {
        let g = row_grid(Boundary::Wall);
        let rho = Field::from_index_fn(g, [Parity::Even; 2], |i, _| (i + 1) as f64);
        assert_eq!((rho.get(-2, 0), rho.get(-1, 0)), (2.0, 1.0));
        let q = Field::from_index_fn(g, [Parity::Odd, Parity::Even], |i, _| (i + 1) as f64);
        assert_eq!((q.get(-2, 0), q.get(-1, 0)), (-2.0, -1.0));
        assert_eq!((q.get(1, -1), q.get(1, -2)), (2.0, 2.0));
    }

    #[test]
    fn apply_bc_idempotent() {
        for bc in [Boundary::Periodic, Boundary::Wall] {
            let g = Grid2D::new(6, 5, (0.0, 1.0), (0.0, 1.0), bc).unwrap();
            let f = random_field(g, 3).with_parity([Parity::Odd, Parity::Even]);
            assert_eq!(apply_bc(&f), f);
            assert_eq!(apply_bc(&apply_bc(&f)), f);
        }
    }

    #[test]
    fn central_diff_constant_and_linear() {
        let g = Grid2D::new(8, 8, (0.0f64, 1.0), (0.0, 1.0), Boundary::Wall).unwrap();
        let c = Field::constant(g, 3.0);
        assert_eq!(central_diff(&c, Dir::X1).max_abs(), 0.0);
        let lin = Field::from_fn(g, |x, _| 2.5 * x);
        let d = central_diff(&lin, Dir::X1);
        for j in 0..8 {
            for i in 1..7 {
                assert!((d.at(i, j) - 2.5).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn central_diff_second_order() {
        let err = |n: usize| {
            let g = Grid2D::<f64>::unit_square(n).unwrap();
            let f = Field::from_fn(g, |x, _| (2.0 * std::f64::consts::PI * x).sin());
            let d = central_diff(&f, Dir::X1);
            let mut e = 0.0f64;
            for j in 0..n {
                for i in 0..n {
                    let (x, _) = g.center(i, j);
                    let exact = 2.0 * std::f64::consts::PI * (2.0 * std::f64::consts::PI * x).cos();
                    e = e.max((d.at(i, j) - exact).abs());
                }
            }
            e
        };
        let order = (err(32) / err(64)).log2();
        assert!(order >= 1.95, "order {order}");
    }

    #[test]
    fn wide_laplacian_exact_on_quadratic() {
        let g = Grid2D::new(10, 10, (0.0f64, 1.0), (0.0, 1.0), Boundary::Wall).unwrap();
        let f = Field::from_fn(g, |x, _| x * x);
        let l = wide_laplacian(&f);
        for j in 2..8 {
            for i in 2..8 {
                assert!((l.at(i, j) - 2.0).abs() < 1e-10, "{}", l.at(i, j));
            }
        }
        assert_eq!(wide_laplacian(&Field::constant(g, 1.0)).max_abs(), 0.0);
    }

    #[test]
    fn wide_laplacian_bitwise_composition() {
        for bc in [Boundary::Periodic, Boundary::Wall] {
            let g = Grid2D::new(9, 7, (0.0, 1.3), (0.0, 0.7), bc).unwrap();
            for parity in [[Parity::Even; 2], [Parity::Odd, Parity::Even]] {
                let f = random_field(g, 11).with_parity(parity);
                let chained = {
                    let a = central_diff(&central_diff(&f, Dir::X1), Dir::X1);
                    let b = central_diff(&central_diff(&f, Dir::X2), Dir::X2);
                    a.zip_map(&b, |x, y| x + y)
                };
                let (gx, gy) = discrete_gradient(&f);
                let composed = discrete_divergence(&gx, &gy);
                let fused = wide_laplacian(&f);
                assert_eq!(fused.interior(), chained.interior());
                assert_eq!(fused.interior(), composed.interior());
            }
        }
    }

    #[test]
    fn divergence_of_linear_field_vanishes() {
        let g = Grid2D::new(8, 8, (0.0f64, 1.0), (0.0, 1.0), Boundary::Wall).unwrap();
        let u1 = Field::from_fn(g, |x, _| x).with_parity([Parity::Odd, Parity::Even]);
        let u2 = Field::from_fn(g, |_, y| -y).with_parity([Parity::Even, Parity::Odd]);
        let d = discrete_divergence(&u1, &u2);
        for j in 1..7 {
            for i in 1..7 {
                assert!(d.at(i, j).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn summation_by_parts_and_symmetry() {
        let g = Grid2D::<f64>::unit_square(12).unwrap();
        let f = random_field(g, 1);
        let h = random_field(g, 2);
        assert!(central_diff(&f, Dir::X2).sum().abs() < 1e-12 * 12.0);
        let lhs = f.dot(&wide_laplacian(&h));
        let rhs = wide_laplacian(&f).dot(&h);
        assert!((lhs - rhs).abs() < 1e-12 * lhs.abs().max(1.0) * 144.0);
    }

    #[test]
    fn csv_layout() {
        let g = row_grid(Boundary::Periodic);
        let f = Field::constant(g, 1.0);
        let csv = f.to_csv("rho");
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("x1,x2,rho"));
        assert_eq!(
            lines.next(),
            Some("1.2500000000000000e-1,1.2500000000000000e-1,1.0000000000000000e0")
        );
        assert_eq!(csv.lines().count(), 17);
    }
}
