//! Initial data and exact solutions of the benchmark problems.

use crate::error::{Error, Result};
use crate::integrator::State;
use crate::mesh::{Boundary, Field, Grid2D};
use crate::num::{lit, Real};
use crate::spatial::Limiter;

/// Vortex intensity.
pub const VORTEX_GAMMA: f64 = 1.5;
/// Background density of the vortex.
pub const VORTEX_RHO0: f64 = 1.9;
/// Advection speed of the vortex.
pub const VORTEX_SPEED: f64 = 0.6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CaseKind {
    Vortex,
    IncompressibleAoc,
    Explosion,
}

impl CaseKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "vortex" => Ok(CaseKind::Vortex),
            "incompressible" | "incompressible_aoc" | "aoc" => Ok(CaseKind::IncompressibleAoc),
            "explosion" => Ok(CaseKind::Explosion),
            other => Err(Error::Config(format!(
                "unknown case `{other}` (valid: vortex, incompressible, explosion)"
            ))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            CaseKind::Vortex => "vortex",
            CaseKind::IncompressibleAoc => "incompressible",
            CaseKind::Explosion => "explosion",
        }
    }
}

/// How the vortex density amplitude `eta` follows from `epsilon`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VortexEta {
    /// `eta = epsilon sqrt(110) / 0.6`.
    Literal,
    /// `eta = epsilon`: the profile balances the centrifugal force for
    /// `p = rho^2 / 2`, and is slightly under-balanced for `p = rho^2`.
    Unit,
    /// `eta = epsilon / sqrt(2)`: exact balance for `p = rho^2`, so the
    /// translated vortex solves the compressible system exactly.
    Balanced,
}

impl VortexEta {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "literal" => Ok(VortexEta::Literal),
            "unit" => Ok(VortexEta::Unit),
            "balanced" => Ok(VortexEta::Balanced),
            other => Err(Error::Config(format!(
                "unknown vortex eta relation `{other}` (valid: literal, unit, balanced)"
            ))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            VortexEta::Literal => "literal",
            VortexEta::Unit => "unit",
            VortexEta::Balanced => "balanced",
        }
    }

    pub fn eta<T: Real>(self, epsilon: T) -> T {
        match self {
            VortexEta::Literal => vortex_eta(epsilon),
            VortexEta::Unit => epsilon,
            VortexEta::Balanced => epsilon / lit::<T>(2.0).sqrt(),
        }
    }
}

/// Everything needed to set up one benchmark run.
#[derive(Debug, Clone, PartialEq)]
pub struct CaseSpec<T> {
    pub kind: CaseKind,
    pub epsilon: T,
    /// Cells per direction.
    pub n: usize,
    pub t_end: T,
    pub tableau: String,
    pub limiter: Limiter<T>,
    pub gamma: T,
    pub cfl: T,
    /// `None` selects `1e-2 (t_end - t_start)`.
    pub dt_max: Option<T>,
    pub vortex_eta: VortexEta,
}

/// Exact solution `(t, x1, x2) -> (rho, u1, u2)`.
pub type ExactFn<T> = Box<dyn Fn(T, T, T) -> (T, T, T) + Send + Sync>;

impl<T: Real> CaseSpec<T> {
    /// Defaults of each benchmark.
    pub fn preset(kind: CaseKind, epsilon: T) -> Self {
        let (n, t_end, tableau, limiter, gamma) = match kind {
            CaseKind::Vortex => (40, lit(0.1), "ARS(2,2,2)", Limiter::Central, lit(2.0)),
            CaseKind::IncompressibleAoc => (40, lit(3.0), "ARS(2,2,2)", Limiter::Central, lit(2.0)),
            CaseKind::Explosion => (100, lit(0.24), "JIN(2,2,2)", Limiter::cweno(), T::one()),
        };
        CaseSpec {
            kind,
            epsilon,
            n,
            t_end,
            tableau: tableau.into(),
            limiter,
            gamma,
            cfl: lit(0.45),
            dt_max: None,
            vortex_eta: VortexEta::Unit,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > T::zero()) {
            return Err(Error::Config(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if self.n < 10 {
            return Err(Error::Config(format!("resolution must be at least 10, got {}", self.n)));
        }
        if !(self.t_end >= T::zero()) {
            return Err(Error::Config(format!("t_end must be non-negative, got {}", self.t_end)));
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<Grid2D<T>> {
        let (lo, hi) = match self.kind {
            CaseKind::Explosion => (-T::one(), T::one()),
            _ => (T::zero(), T::one()),
        };
        Grid2D::new(self.n, self.n, (lo, hi), (lo, hi), Boundary::Periodic)
    }

    pub fn initial_state(&self) -> Result<State<T>> {
        let grid = self.grid()?;
        match self.kind {
            CaseKind::Vortex => init_vortex_with(grid, self.epsilon, self.vortex_eta),
            CaseKind::IncompressibleAoc => init_incompressible(grid),
            CaseKind::Explosion => init_explosion(grid, self.epsilon),
        }
    }

    /// Exact or reference solution `(rho, u1, u2)` when one exists.
    pub fn exact(&self) -> Option<ExactFn<T>> {
        let eps = self.epsilon;
        let relation = self.vortex_eta;
        match self.kind {
            CaseKind::Vortex => Some(Box::new(move |t, x, y| exact_vortex_with(t, x, y, eps, relation))),
            CaseKind::IncompressibleAoc => Some(Box::new(|t, x, y| {
                let (u1, u2, _) = exact_incompressible(t, x, y);
                (T::one(), u1, u2)
            })),
            CaseKind::Explosion => None,
        }
    }
}

/// `eta = epsilon sqrt(110) / 0.6`.
pub fn vortex_eta<T: Real>(epsilon: T) -> T {
    epsilon * lit::<T>(110.0).sqrt() / lit(0.6)
}

/// Radial density profile `k(r)` of the vortex.
pub fn vortex_k<T: Real>(r: T) -> T {
    let two = lit::<T>(2.0);
    two * r.cos() + two * r * r.sin() + (two * r).cos() / lit(8.0) + r * (two * r).sin() / lit(4.0)
        + lit::<T>(0.75) * r * r
}

/// Exact vortex solution with the literal `eta` relation.
pub fn exact_vortex<T: Real>(t: T, x1: T, x2: T, epsilon: T) -> (T, T, T) {
    exact_vortex_with(t, x1, x2, epsilon, VortexEta::Literal)
}

pub fn exact_vortex_with<T: Real>(t: T, x1: T, x2: T, epsilon: T, relation: VortexEta) -> (T, T, T) {
    let half = lit::<T>(0.5);
    let shifted = x1 - lit::<T>(VORTEX_SPEED) * t;
    let x = shifted - shifted.floor();
    let (dx, dy) = (x - half, x2 - half);
    let r = (dx * dx + dy * dy).sqrt();
    let omega = lit::<T>(4.0) * T::PI();
    let big = lit::<T>(VORTEX_GAMMA);
    let rho0 = lit::<T>(VORTEX_RHO0);
    let u0 = lit::<T>(VORTEX_SPEED);
    if omega * r > T::PI() {
        return (rho0, u0, T::zero());
    }
    let eta = relation.eta(epsilon);
    let amp = big * eta / omega;
    let rho = rho0 + amp * amp * (vortex_k(omega * r) - vortex_k(T::PI()));
    let swirl = big * (T::one() + (omega * r).cos());
    (rho, u0 + swirl * (half - x2), swirl * (x - half))
}

pub fn init_vortex<T: Real>(grid: Grid2D<T>, epsilon: T) -> Result<State<T>> {
    init_vortex_with(grid, epsilon, VortexEta::Literal)
}

pub fn init_vortex_with<T: Real>(grid: Grid2D<T>, epsilon: T, relation: VortexEta) -> Result<State<T>> {
    let f = |k: usize| {
        move |x: T, y: T| {
            let (r, u1, u2) = exact_vortex_with(T::zero(), x, y, epsilon, relation);
            [r, r * u1, r * u2][k]
        }
    };
    State::new(
        Field::from_fn(grid, f(0)),
        Field::from_fn(grid, f(1)),
        Field::from_fn(grid, f(2)),
        T::zero(),
    )
}

/// Incompressible solution `(u1, u2, p2)` at time `t`.
pub fn exact_incompressible<T: Real>(t: T, x1: T, x2: T) -> (T, T, T) {
    let tau = lit::<T>(2.0) * T::PI();
    let two = lit::<T>(2.0);
    let (a, b) = (tau * (x1 - t), tau * (x2 - t));
    let u1 = T::one() - two * a.cos() * b.sin();
    let u2 = T::one() + two * a.sin() * b.cos();
    let p2 = -(two * a).cos() - (two * b).cos();
    (u1, u2, p2)
}

pub fn init_incompressible<T: Real>(grid: Grid2D<T>) -> Result<State<T>> {
    let rho = Field::constant(grid, T::one());
    let u1 = Field::from_fn(grid, |x, y| exact_incompressible(T::zero(), x, y).0);
    let u2 = Field::from_fn(grid, |x, y| exact_incompressible(T::zero(), x, y).1);
    State::from_primitive(rho, &u1, &u2, T::zero())
}

/// Cylindrical explosion on `[-1, 1]^2`.
pub fn explosion_point<T: Real>(x1: T, x2: T, epsilon: T) -> (T, T, T) {
    let r2 = x1 * x1 + x2 * x2;
    let r = r2.sqrt();
    let rho = if r2 <= lit(0.25) {
        T::one() + epsilon * epsilon
    } else {
        T::one()
    };
    if r < lit(1e-15) {
        return (rho, T::zero(), T::zero());
    }
    let alpha = (T::one() - r).max(T::zero()) * (T::one() - (lit::<T>(-16.0) * r2).exp());
    (rho, -alpha / rho * x1 / r, -alpha / rho * x2 / r)
}

pub fn init_explosion<T: Real>(grid: Grid2D<T>, epsilon: T) -> Result<State<T>> {
    let f = |k: usize| {
        move |x: T, y: T| {
            let (r, u1, u2) = explosion_point(x, y, epsilon);
            [r, r * u1, r * u2][k]
        }
    };
    State::new(
        Field::from_fn(grid, f(0)),
        Field::from_fn(grid, f(1)),
        Field::from_fn(grid, f(2)),
        T::zero(),
    )
}
