//! MUSCL reconstruction, Rusanov flux for the advective part and central
//! flux for the acoustic part.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::integrator::State;
use crate::mesh::{Dir, Field, Grid2D, Parity};
use crate::num::{lit, Real};
use crate::physics::{flux_nonstiff, flux_stiff, max_wave_speed, ConservedCell, EulerParams};

/// Regularisation of the CWENO weights.
pub const CWENO_DELTA: f64 = 1e-6;

/// Slope choice for the piecewise-linear reconstruction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Limiter<T> {
    Central,
    Cweno { delta: T },
}

impl<T: Real> Limiter<T> {
    pub fn cweno() -> Self {
        Limiter::Cweno {
            delta: lit(CWENO_DELTA),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Limiter::Central => "central",
            Limiter::Cweno { .. } => "cweno",
        }
    }

    /// Slope of the middle cell from three consecutive averages.
    #[inline]
    pub fn slope(&self, left: T, mid: T, right: T, h: T) -> T {
        match *self {
            Limiter::Central => slope_central(left, mid, right, h),
            Limiter::Cweno { delta } => slope_cweno_with(delta, (right - mid) / h, (mid - left) / h),
        }
    }
}

/// `(right - left) / (2 h)`.
#[inline]
pub fn slope_central<T: Real>(left: T, _mid: T, right: T, h: T) -> T {
    (right - left) / (lit::<T>(2.0) * h)
}

/// CWENO blend of one-sided slopes with the default regularisation.
#[inline]
pub fn slope_cweno<T: Real>(a: T, b: T) -> T {
    slope_cweno_with(lit(CWENO_DELTA), a, b)
}

/// `(w(a) a + w(b) b) / (w(a) + w(b))` with `w(x) = (delta + x^2)^-2`.
#[inline]
pub fn slope_cweno_with<T: Real>(delta: T, a: T, b: T) -> T {
    let w = |x: T| {
        let d = delta + x * x;
        (d * d).recip()
    };
    let (wa, wb) = (w(a), w(b));
    (wa * a + wb * b) / (wa + wb)
}

/// Reconstructed states on the faces of one direction.
///
/// Face `k` separates cells `k - 1` and `k` along the direction; `minus`
/// is the trace from cell `k - 1`, `plus` the trace from cell `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceStates<T> {
    pub dir: Dir,
    /// Faces along the direction (`cells + 1`).
    pub faces: usize,
    /// Cells across the direction.
    pub lanes: usize,
    pub minus: Vec<ConservedCell<T>>,
    pub plus: Vec<ConservedCell<T>>,
}

impl<T: Real> FaceStates<T> {
    #[inline]
    pub fn index(&self, face: usize, lane: usize) -> usize {
        lane * self.faces + face
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InterfaceStates<T> {
    pub x1: FaceStates<T>,
    pub x2: FaceStates<T>,
}

impl<T: Real> InterfaceStates<T> {
    pub fn dir(&self, dir: Dir) -> &FaceStates<T> {
        match dir {
            Dir::X1 => &self.x1,
            Dir::X2 => &self.x2,
        }
    }
}

fn reconstruct_dir<T: Real>(state: &State<T>, limiter: Limiter<T>, dir: Dir) -> Result<FaceStates<T>> {
    let grid = state.grid;
    let n = grid.cells(dir) as isize;
    let lanes = match dir {
        Dir::X1 => grid.ny,
        Dir::X2 => grid.nx,
    };
    let faces = n as usize + 1;
    let h = grid.spacing(dir);
    let half_h = lit::<T>(0.5) * h;
    let fields = [&state.rho, &state.q1, &state.q2];
    // (i, j) of the cell `s` steps along `dir` in lane `lane`.
    let cell = |s: isize, lane: usize| -> (isize, isize) {
        match dir {
            Dir::X1 => (s, lane as isize),
            Dir::X2 => (lane as isize, s),
        }
    };
    let (oi, oj) = dir.offset(1);
    let trace = |s: isize, lane: usize, sign: T| -> [T; 3] {
        let (i, j) = cell(s, lane);
        let mut out = [T::zero(); 3];
        for (c, f) in fields.iter().enumerate() {
            let mid = f.get(i, j);
            let slope = limiter.slope(f.get(i - oi, j - oj), mid, f.get(i + oi, j + oj), h);
            out[c] = mid + sign * slope * half_h;
        }
        out
    };
    let pairs: Vec<(ConservedCell<T>, ConservedCell<T>)> = (0..faces * lanes)
        .into_par_iter()
        .map(|idx| -> Result<(ConservedCell<T>, ConservedCell<T>)> {
            let (lane, k) = (idx / faces, (idx % faces) as isize);
            let m = ConservedCell::from_array(trace(k - 1, lane, T::one()));
            let p = ConservedCell::from_array(trace(k, lane, -T::one()));
            for (w, s) in [(&m, k - 1), (&p, k)] {
                if !(w.rho > T::zero()) {
                    let (i, j) = cell(s, lane);
                    return Err(Error::Positivity {
                        quantity: "reconstructed density",
                        value: w.rho.to_f64_lossy(),
                        location: format!("cell ({i}, {j})"),
                    });
                }
            }
            Ok((m, p))
        })
        .collect::<Result<_>>()?;
    let (minus, plus) = pairs.into_iter().unzip();
    Ok(FaceStates {
        dir,
        faces,
        lanes,
        minus,
        plus,
    })
}

/// Piecewise-linear traces of `(rho, q1, q2)` on every interior face.
pub fn reconstruct<T: Real>(state: &State<T>, limiter: Limiter<T>) -> Result<InterfaceStates<T>> {
    Ok(InterfaceStates {
        x1: reconstruct_dir(state, limiter, Dir::X1)?,
        x2: reconstruct_dir(state, limiter, Dir::X2)?,
    })
}

/// Rusanov flux of the advective part with speed `max |2 u_dir|`.
pub fn rusanov_flux<T: Real>(wl: ConservedCell<T>, wr: ConservedCell<T>, dir: Dir) -> Result<[T; 3]> {
    let fl = flux_nonstiff(wl, dir)?;
    let fr = flux_nonstiff(wr, dir)?;
    let alpha = max_wave_speed(wl, dir).max(max_wave_speed(wr, dir));
    Ok(rusanov_combine(fl, fr, wl.as_array(), wr.as_array(), alpha))
}

#[inline]
pub(crate) fn rusanov_combine<T: Real>(fl: [T; 3], fr: [T; 3], wl: [T; 3], wr: [T; 3], alpha: T) -> [T; 3] {
    let half = lit::<T>(0.5);
    let mut out = [T::zero(); 3];
    for c in 0..3 {
        out[c] = half * (fl[c] + fr[c]) - half * alpha * (wr[c] - wl[c]);
    }
    out
}

/// Arithmetic mean of the acoustic flux at two neighbouring cell averages.
pub fn central_stiff_flux<T: Real>(
    wi: ConservedCell<T>,
    wip1: ConservedCell<T>,
    dir: Dir,
    params: &EulerParams<T>,
) -> Result<[T; 3]> {
    let a = flux_stiff(wi, dir, params)?;
    let b = flux_stiff(wip1, dir, params)?;
    let half = lit::<T>(0.5);
    Ok([half * (a[0] + b[0]), half * (a[1] + b[1]), half * (a[2] + b[2])])
}

/// Component parities of `(rho, q1, q2)`.
pub fn conserved_parity() -> [[Parity; 2]; 3] {
    [
        [Parity::Even, Parity::Even],
        [Parity::Odd, Parity::Even],
        [Parity::Even, Parity::Odd],
    ]
}

fn face_fluxes<T: Real>(faces: &FaceStates<T>) -> Result<Vec<[T; 3]>> {
    (0..faces.minus.len())
        .into_par_iter()
        .map(|k| rusanov_flux(faces.minus[k], faces.plus[k], faces.dir))
        .collect()
}

/// Divergence of the Rusanov advective flux, `sum_m delta_m F_m / dx_m`,
/// for the three conserved components.
pub fn advective_divergence<T: Real>(state: &State<T>, limiter: Limiter<T>) -> Result<[Field<T>; 3]> {
    let rec = reconstruct(state, limiter)?;
    let fx = face_fluxes(&rec.x1)?;
    let fy = face_fluxes(&rec.x2)?;
    Ok(flux_difference(&state.grid, &rec, &fx, &fy))
}

pub(crate) fn flux_difference<T: Real>(
    grid: &Grid2D<T>,
    rec: &InterfaceStates<T>,
    fx: &[[T; 3]],
    fy: &[[T; 3]],
) -> [Field<T>; 3] {
    let par = conserved_parity();
    let (dx, dy) = (grid.dx, grid.dy);
    let comp = |c: usize| {
        Field::from_index_fn(*grid, par[c], |i, j| {
            let ex = rec.x1.index(i + 1, j);
            let wx = rec.x1.index(i, j);
            let ny_ = rec.x2.index(j + 1, i);
            let sy = rec.x2.index(j, i);
            (fx[ex][c] - fx[wx][c]) / dx + (fy[ny_][c] - fy[sy][c]) / dy
        })
    };
    [comp(0), comp(1), comp(2)]
}

/// Divergence of the central acoustic flux built from cell averages.
pub fn stiff_divergence<T: Real>(state: &State<T>, params: &EulerParams<T>) -> Result<[Field<T>; 3]> {
    let grid = state.grid;
    let par = conserved_parity();
    let cells: Vec<Vec<[T; 3]>> = Dir::BOTH
        .iter()
        .map(|&dir| {
            let (oi, oj) = dir.offset(1);
            (0..grid.num_cells())
                .into_par_iter()
                .map(|idx| -> Result<[T; 3]> {
                    let (i, j) = ((idx % grid.nx) as isize, (idx / grid.nx) as isize);
                    let e = central_stiff_flux(state.cell(i, j), state.cell(i + oi, j + oj), dir, params)?;
                    let w = central_stiff_flux(state.cell(i - oi, j - oj), state.cell(i, j), dir, params)?;
                    let h = grid.spacing(dir);
                    Ok([(e[0] - w[0]) / h, (e[1] - w[1]) / h, (e[2] - w[2]) / h])
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let comp = |c: usize| {
        Field::from_index_fn(grid, par[c], |i, j| {
            let k = j * grid.nx + i;
            cells[0][k][c] + cells[1][k][c]
        })
    };
    Ok([comp(0), comp(1), comp(2)])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{central_diff, Boundary, Grid2D};
    use crate::physics::pressure;
    use proptest::prelude::*;

    fn state_from(grid: Grid2D<f64>, f: impl Fn(f64, f64) -> [f64; 3] + Sync) -> State<f64> {
        let rho = Field::from_fn(grid, |x, y| f(x, y)[0]);
        let q1 = Field::from_fn(grid, |x, y| f(x, y)[1]);
        let q2 = Field::from_fn(grid, |x, y| f(x, y)[2]);
        State::new(rho, q1, q2, 0.0).unwrap()
    }

    #[test]
    fn slope_examples() {
        assert_eq!(slope_central(3.0, 3.0, 3.0, 0.1), 0.0);
        assert_eq!(slope_central(0.0, 1.0, 2.0, 1.0), 1.0);
        assert_eq!(slope_cweno(0.7, 0.7), 0.7);
        assert_eq!(slope_cweno(0.3, -0.3), 0.0);
        let w1 = (1.0f64 + 1e-6).powi(-2);
        let expected = w1 / (w1 + 1e12);
        let got = slope_cweno(1.0, 0.0);
        assert!((got - expected).abs() < 1e-24);
        assert!((got - 1.0e-12).abs() < 1e-15);
    }

    #[test]
    fn central_slope_matches_field_operator() {
        let g = Grid2D::<f64>::unit_square(8).unwrap();
        let f = Field::from_fn(g, |x, y| (6.0 * x).sin() * y);
        let d = central_diff(&f, Dir::X1);
        for j in 0..8 {
            for i in 0..8 {
                let (i_, j_) = (i as isize, j as isize);
                let s = slope_central(f.get(i_ - 1, j_), f.get(i_, j_), f.get(i_ + 1, j_), g.dx);
                assert_eq!(s, d.at(i, j));
            }
        }
    }

    #[test]
    fn constant_state_traces() {
        let g = Grid2D::<f64>::unit_square(6).unwrap();
        let s = state_from(g, |_, _| [1.3, 0.2, -0.1]);
        for lim in [Limiter::Central, Limiter::cweno()] {
            let rec = reconstruct(&s, lim).unwrap();
            for fs in [&rec.x1, &rec.x2] {
                for k in 0..fs.minus.len() {
                    assert_eq!(fs.minus[k], ConservedCell::new(1.3, 0.2, -0.1));
                    assert_eq!(fs.plus[k], fs.minus[k]);
                }
            }
        }
    }

    #[test]
    fn linear_density_traces_exact() {
        let g = Grid2D::new(8, 8, (0.0, 1.0), (0.0, 1.0), Boundary::Wall).unwrap();
        let s = state_from(g, |x, _| [1.0 + x, 0.0, 0.0]);
        let rec = reconstruct(&s, Limiter::Central).unwrap();
        for j in 0..8 {
            for k in 2..7 {
                let idx = rec.x1.index(k, j);
                let xf = k as f64 / 8.0;
                assert!((rec.x1.minus[idx].rho - (1.0 + xf)).abs() < 1e-14);
                assert!((rec.x1.plus[idx].rho - (1.0 + xf)).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn cweno_suppresses_step_overshoot() {
        let g = Grid2D::<f64>::unit_square(16).unwrap();
        let s = state_from(g, |x, _| [if x < 0.5 { 1.0 } else { 2.0 }, 0.0, 0.0]);
        let rec = reconstruct(&s, Limiter::cweno()).unwrap();
        for k in 0..rec.x1.minus.len() {
            for w in [rec.x1.minus[k], rec.x1.plus[k]] {
                assert!(w.rho >= 1.0 - 1e-6 && w.rho <= 2.0 + 1e-6, "{}", w.rho);
            }
        }
    }

    #[test]
    fn reconstruction_reports_negative_density() {
        let g = Grid2D::<f64>::unit_square(8).unwrap();
        let s = state_from(g, |x, _| [if (0.4..0.6).contains(&x) { 0.05 } else { 2.0 }, 0.0, 0.0]);
        match reconstruct(&s, Limiter::Central) {
            Err(Error::Positivity { location, .. }) => assert!(location.starts_with("cell")),
            other => panic!("expected positivity error, got {other:?}"),
        }
    }

    #[test]
    fn rusanov_examples() {
        let w = ConservedCell::new(1.2, 0.3, -0.4);
        let f = flux_nonstiff(w, Dir::X2).unwrap();
        assert_eq!(rusanov_flux(w, w, Dir::X2).unwrap(), f);
        let rest = ConservedCell::new(1.0, 0.0, 0.0);
        assert_eq!(rusanov_flux(rest, rest, Dir::X1).unwrap(), [0.0; 3]);
        let l = ConservedCell::new(1.0, 0.5, 0.0);
        let r = ConservedCell::new(1.0, -0.5, 0.0);
        assert_eq!(rusanov_flux(l, r, Dir::X1).unwrap(), [0.0, 0.75, 0.0]);
    }

    #[test]
    fn central_stiff_examples() {
        let p = EulerParams::new(0.1f64, 2.0, 0.45, 1.0).unwrap();
        let a = ConservedCell::new(1.0, 0.0, 0.0);
        let b = ConservedCell::new(2.0, 0.0, 0.0);
        let f = central_stiff_flux(a, b, Dir::X1, &p).unwrap();
        let expect = (pressure(1.0, 2.0).unwrap() + pressure(2.0, 2.0).unwrap()) / (2.0 * 0.01);
        assert_eq!(f[0], 0.0);
        assert!((f[1] - expect).abs() < 1e-12);
        assert_eq!(central_stiff_flux(b, b, Dir::X2, &p).unwrap(), flux_stiff(b, Dir::X2, &p).unwrap());
    }

    #[test]
    fn stiff_divergence_is_central_difference() {
        let g = Grid2D::<f64>::unit_square(10).unwrap();
        let p = EulerParams::new(0.3, 2.0, 0.45, 1.0).unwrap();
        let s = state_from(g, |x, y| {
            [1.5 + 0.2 * (6.0 * x).sin() * (6.3 * y).cos(), (6.3 * y).sin(), 0.3 * (6.3 * x).cos()]
        });
        let d = stiff_divergence(&s, &p).unwrap();
        let pr = s.rho.map(|r| r * r / 0.09);
        let (px, py) = (central_diff(&pr, Dir::X1), central_diff(&pr, Dir::X2));
        let div = crate::mesh::discrete_divergence(&s.q1, &s.q2);
        for j in 0..10 {
            for i in 0..10 {
                assert!((d[0].at(i, j) - div.at(i, j)).abs() < 1e-12);
                assert!((d[1].at(i, j) - px.at(i, j)).abs() < 1e-10 * px.max_abs());
                assert!((d[2].at(i, j) - py.at(i, j)).abs() < 1e-10 * py.max_abs());
            }
        }
    }

    #[test]
    fn flux_divergence_conserves() {
        let g = Grid2D::<f64>::unit_square(12).unwrap();
        let p = EulerParams::new(0.1, 2.0, 0.45, 1.0).unwrap();
        let s = state_from(g, |x, y| {
            [1.5 + 0.3 * (6.3 * x).sin(), 0.5 + (6.3 * y).sin(), 0.2 * (12.6 * x).cos()]
        });
        for lim in [Limiter::Central, Limiter::cweno()] {
            let df = advective_divergence(&s, lim).unwrap();
            for c in &df {
                assert!(c.sum().abs() < 1e-12 * c.max_abs().max(1.0) * 144.0);
            }
        }
        let dg = stiff_divergence(&s, &p).unwrap();
        for c in &dg {
            assert!(c.sum().abs() < 1e-12 * c.max_abs().max(1.0) * 144.0);
        }
    }

    proptest! {
        #[test]
        fn rusanov_swap_symmetry(rl in 0.2f64..3.0, rr in 0.2f64..3.0, a in -2.0f64..2.0, b in -2.0f64..2.0, c in -2.0f64..2.0, d in -2.0f64..2.0) {
            let wl = ConservedCell::new(rl, a, b);
            let wr = ConservedCell::new(rr, c, d);
            let f = rusanov_flux(wl, wr, Dir::X1).unwrap();
            let g = rusanov_flux(wr, wl, Dir::X1).unwrap();
            let alpha = max_wave_speed(wl, Dir::X1).max(max_wave_speed(wr, Dir::X1));
            let (l, r) = (wl.as_array(), wr.as_array());
            for k in 0..3 {
                // Swapping the arguments only flips the sign of the diffusion term.
                let diffusion = alpha * (r[k] - l[k]);
                prop_assert!((f[k] - g[k] + diffusion).abs() <= 1e-12 * (1.0 + diffusion.abs()));
            }
        }

        #[test]
        fn cweno_lies_between_arguments(a in -5.0f64..5.0, b in -5.0f64..5.0) {
            let s = slope_cweno(a, b);
            prop_assert!(s >= a.min(b) - 1e-12 && s <= a.max(b) + 1e-12);
        }
    }
}
