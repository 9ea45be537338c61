//! Time stepping: CFL step size, the IMEX-RK stage loop with its weighted
//! final update, the run loop, and a linear wave-equation mode.

use log::{debug, info};

use crate::diagnostics::{self, DiagnosticsRecord};
use crate::error::{Error, Result};
use crate::implicit::{assemble_stage, pcg, solve_stage, SolverOptions, SpectralSolver, StageRecord};
use crate::mesh::{discrete_divergence, discrete_gradient, wide_laplacian, Dir, Field, Grid2D};
use crate::num::{lit, Real};
use crate::physics::{max_wave_speed, ConservedCell, EulerParams};
use crate::spatial::{advective_divergence, conserved_parity, Limiter};
use crate::tableaux::DoubleTableau;

/// Conserved fields on a shared grid.
#[derive(Debug, Clone, PartialEq)]
pub struct State<T> {
    pub grid: Grid2D<T>,
    pub rho: Field<T>,
    pub q1: Field<T>,
    pub q2: Field<T>,
    pub time: T,
    /// `p / eps^2` up to an additive constant, carried over from the last
    /// stage of a GSA step; used by an explicit first stage.
    pub acoustic: Option<Field<T>>,
}

impl<T: Real> State<T> {
    /// Validates grids and density positivity and refreshes ghost layers
    /// with the wall parities of `(rho, q1, q2)`.
    pub fn new(rho: Field<T>, q1: Field<T>, q2: Field<T>, time: T) -> Result<Self> {
        let grid = *rho.grid();
        if *q1.grid() != grid || *q2.grid() != grid {
            return Err(Error::InvalidGrid("state fields live on different grids".into()));
        }
        let ((i, j), min) = rho.argmin();
        if !(min > T::zero()) {
            return Err(Error::Positivity {
                quantity: "density",
                value: min.to_f64_lossy(),
                location: format!("cell ({i}, {j})"),
            });
        }
        let par = conserved_parity();
        let fix = |f: Field<T>, p| if f.parity() == p { f } else { f.with_parity(p) };
        Ok(State {
            grid,
            rho: fix(rho, par[0]),
            q1: fix(q1, par[1]),
            q2: fix(q2, par[2]),
            time,
            acoustic: None,
        })
    }

    /// Builds a state from density and velocity fields.
    pub fn from_primitive(rho: Field<T>, u1: &Field<T>, u2: &Field<T>, time: T) -> Result<Self> {
        let q1 = rho.zip_map(u1, |r, u| r * u);
        let q2 = rho.zip_map(u2, |r, u| r * u);
        Self::new(rho, q1, q2, time)
    }

    #[inline]
    pub fn cell(&self, i: isize, j: isize) -> ConservedCell<T> {
        ConservedCell::new(self.rho.get(i, j), self.q1.get(i, j), self.q2.get(i, j))
    }

    pub fn velocity(&self) -> (Field<T>, Field<T>) {
        (
            self.q1.zip_map(&self.rho, |q, r| q / r),
            self.q2.zip_map(&self.rho, |q, r| q / r),
        )
    }

    /// `sum rho dx dy`.
    pub fn total_mass(&self) -> T {
        self.rho.sum() * self.grid.cell_area()
    }
}

/// `dt = cfl / max(|2 u1| / dx, |2 u2| / dy)`, capped at `dt_max`.
pub fn compute_dt<T: Real>(state: &State<T>, params: &EulerParams<T>) -> T {
    let g = state.grid;
    let mut rate = T::zero();
    for j in 0..g.ny {
        for i in 0..g.nx {
            let w = state.cell(i as isize, j as isize);
            rate = rate
                .max(max_wave_speed(w, Dir::X1) / g.dx)
                .max(max_wave_speed(w, Dir::X2) / g.dy);
        }
    }
    if rate == T::zero() {
        params.dt_max
    } else {
        (params.cfl / rate).min(params.dt_max)
    }
}

/// Spatial and solver settings of a step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepConfig<T> {
    pub limiter: Limiter<T>,
    pub solver: SolverOptions<T>,
}

impl<T: Real> Default for StepConfig<T> {
    fn default() -> Self {
        StepConfig {
            limiter: Limiter::Central,
            solver: SolverOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StepStats {
    pub dt: f64,
    pub newton_iterations: usize,
    pub cg_iterations: usize,
    pub max_residual: f64,
}

fn advective_needed<T: Real>(t: &DoubleTableau<T>, k: usize) -> bool {
    t.w_tilde[k] != T::zero() || (k + 1..t.stages()).any(|j| t.a_tilde[j][k] != T::zero())
}

/// Runs every stage of one step and returns the stage records.
pub fn imex_stages<T: Real>(
    state: &State<T>,
    tableau: &DoubleTableau<T>,
    params: &EulerParams<T>,
    cfg: &StepConfig<T>,
    dt: T,
) -> Result<(Vec<StageRecord<T>>, StepStats)> {
    let s = tableau.stages();
    let mut records: Vec<StageRecord<T>> = Vec::with_capacity(s);
    let mut stats = StepStats {
        dt: dt.to_f64_lossy(),
        ..StepStats::default()
    };
    for k in 0..s {
        let wrap = |e: Error| Error::Stage {
            stage: k + 1,
            source: Box::new(e),
        };
        let ctx = assemble_stage(state, &records, tableau, k, dt, params).map_err(wrap)?;
        let time = state.time + tableau.c[k] * dt;
        let carried = if k == 0 { state.acoustic.as_ref() } else { None };
        let (st, acoustic, st_stats) = solve_stage(&ctx, &cfg.solver, time, carried).map_err(wrap)?;
        stats.newton_iterations += st_stats.newton_iterations;
        stats.cg_iterations += st_stats.cg_iterations;
        stats.max_residual = stats.max_residual.max(st_stats.residual);
        let advective = if advective_needed(tableau, k) {
            Some(advective_divergence(&st, cfg.limiter).map_err(wrap)?)
        } else {
            None
        };
        let div_q = discrete_divergence(&st.q1, &st.q2);
        let (g1, g2) = discrete_gradient(&acoustic);
        records.push(StageRecord {
            state: st,
            acoustic,
            advective,
            div_q,
            grad_acoustic: [g1, g2],
        });
    }
    Ok((records, stats))
}

/// One IMEX-RK step of size `dt`; the new state is always formed from the
/// weighted stage flux divergences.
pub fn imex_step<T: Real>(
    state: &State<T>,
    tableau: &DoubleTableau<T>,
    params: &EulerParams<T>,
    cfg: &StepConfig<T>,
    dt: T,
) -> Result<(State<T>, StepStats)> {
    let (mut records, stats) = imex_stages(state, tableau, params, cfg, dt)?;
    let mut rho = state.rho.clone();
    let mut q1 = state.q1.clone();
    let mut q2 = state.q2.clone();
    for (k, rec) in records.iter().enumerate() {
        let (wt, w) = (tableau.w_tilde[k], tableau.w[k]);
        if wt != T::zero() {
            let adv = rec.advective.as_ref().expect("kept for nonzero weight");
            rho.axpy(-dt * wt, &adv[0]);
            q1.axpy(-dt * wt, &adv[1]);
            q2.axpy(-dt * wt, &adv[2]);
        }
        if w != T::zero() {
            rho.axpy(-dt * w, &rec.div_q);
            q1.axpy(-dt * w, &rec.grad_acoustic[0]);
            q2.axpy(-dt * w, &rec.grad_acoustic[1]);
        }
    }
    let mut next = State::new(rho, q1, q2, state.time + dt)?;
    let gsa = {
        let s = tableau.stages();
        (0..s).all(|j| tableau.a_tilde[s - 1][j] == tableau.w_tilde[j] && tableau.a[s - 1][j] == tableau.w[j])
    };
    if gsa {
        next.acoustic = records.pop().map(|r| r.acoustic);
    }
    Ok((next, stats))
}

/// Result of [`run`].
#[derive(Debug, Clone)]
pub struct RunOutput<T> {
    pub state: State<T>,
    pub series: Vec<DiagnosticsRecord>,
    pub steps: usize,
}

/// A failed run with everything computed before the failure.
#[derive(Clone)]
pub struct RunFailure<T> {
    pub error: Error,
    pub partial: RunOutput<T>,
}

impl<T> std::fmt::Debug for RunFailure<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RunFailure")
            .field("error", &self.error)
            .field("completed_steps", &self.partial.steps)
            .finish_non_exhaustive()
    }
}

impl<T> std::fmt::Display for RunFailure<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} (after {} completed steps)", self.error, self.partial.steps)
    }
}

/// Steps from `initial.time` to `t_end` with CFL time steps, shortening
/// the last one to land on `t_end`. `observer` sees every accepted state.
pub fn run<T: Real>(
    initial: &State<T>,
    tableau: &DoubleTableau<T>,
    params: &EulerParams<T>,
    cfg: &StepConfig<T>,
    t_end: T,
    mut observer: impl FnMut(&State<T>, &StepStats),
) -> std::result::Result<RunOutput<T>, Box<RunFailure<T>>> {
    let mut state = initial.clone();
    let ke0 = diagnostics::kinetic_energy(&state);
    let mut series = vec![diagnostics::sample(&state, 0.0, ke0, params)];
    let mut steps = 0usize;
    let fail = |error: Error, state: State<T>, series: Vec<DiagnosticsRecord>, steps: usize| {
        Box::new(RunFailure {
            error,
            partial: RunOutput {
                state,
                series,
                steps,
            },
        })
    };
    // Relative slack below which the remaining interval counts as reached.
    let slack = lit::<T>(1e-12) * (t_end.abs() + T::one());
    while t_end - state.time > slack {
        let mut dt = compute_dt(&state, params);
        let remaining = t_end - state.time;
        let last = dt >= remaining - slack;
        if last {
            dt = remaining;
        }
        match imex_step(&state, tableau, params, cfg, dt) {
            Ok((mut next, stats)) => {
                steps += 1;
                if last {
                    next.time = t_end;
                }
                info!(
                    "step {} t={:.6e} dt={:.6e} newton={} max_residual={:.3e}",
                    steps,
                    next.time.to_f64_lossy(),
                    stats.dt,
                    stats.newton_iterations,
                    stats.max_residual
                );
                series.push(diagnostics::sample(&next, stats.dt, ke0, params));
                observer(&next, &stats);
                state = next;
            }
            Err(e) => {
                let error = Error::Step {
                    step: steps + 1,
                    source: Box::new(e),
                };
                return Err(fail(error, state, series, steps));
            }
        }
    }
    debug!("run finished after {steps} steps");
    Ok(RunOutput {
        state,
        series,
        steps,
    })
}

/// Constant background of the linear wave system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearBackground<T> {
    pub rho_bar: T,
    pub u_bar: [T; 2],
    pub a_bar: T,
    pub epsilon: T,
}

impl<T: Real> LinearBackground<T> {
    pub fn new(rho_bar: T, u_bar: [T; 2], a_bar: T, epsilon: T) -> Result<Self> {
        if !(rho_bar > T::zero() && a_bar > T::zero() && epsilon > T::zero()) {
            return Err(Error::InvalidParameter(format!(
                "background needs positive rho_bar, a_bar, epsilon (got {rho_bar}, {a_bar}, {epsilon})"
            )));
        }
        Ok(LinearBackground {
            rho_bar,
            u_bar,
            a_bar,
            epsilon,
        })
    }

    /// Coefficient `a_bar^2 / (rho_bar eps^2)` of the pressure gradient.
    pub fn kappa(&self) -> T {
        self.a_bar * self.a_bar / (self.rho_bar * self.epsilon * self.epsilon)
    }
}

/// Density perturbation and velocity of the linear wave system.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveState<T> {
    pub rho: Field<T>,
    pub u1: Field<T>,
    pub u2: Field<T>,
}

impl<T: Real> WaveState<T> {
    pub fn zeros(grid: Grid2D<T>) -> Self {
        let par = conserved_parity();
        WaveState {
            rho: Field::zeros_with_parity(grid, par[0]),
            u1: Field::zeros_with_parity(grid, par[1]),
            u2: Field::zeros_with_parity(grid, par[2]),
        }
    }

    fn axpy(&mut self, a: T, x: &WaveState<T>) {
        self.rho.axpy(a, &x.rho);
        self.u1.axpy(a, &x.u1);
        self.u2.axpy(a, &x.u2);
    }
}

/// Frozen advection `u_bar . grad` by first-order upwinding (Rusanov flux
/// on piecewise-constant data with speed `|u_bar_m|`).
pub fn wave_advection<T: Real>(f: &Field<T>, u_bar: [T; 2]) -> Field<T> {
    let grid = *f.grid();
    let half = lit::<T>(0.5);
    let flux = |a: T, b: T, u: T| half * u * (a + b) - half * u.abs() * (b - a);
    Field::from_index_fn(grid, f.parity(), |i, j| {
        let (i, j) = (i as isize, j as isize);
        let c = f.get(i, j);
        let fx = flux(c, f.get(i + 1, j), u_bar[0]) - flux(f.get(i - 1, j), c, u_bar[0]);
        let fy = flux(c, f.get(i, j + 1), u_bar[1]) - flux(f.get(i, j - 1), c, u_bar[1]);
        fx / grid.dx + fy / grid.dy
    })
}

/// Explicit operator `H(W)` of the linear wave system.
pub fn wave_explicit<T: Real>(w: &WaveState<T>, bg: &LinearBackground<T>) -> WaveState<T> {
    WaveState {
        rho: wave_advection(&w.rho, bg.u_bar),
        u1: wave_advection(&w.u1, bg.u_bar),
        u2: wave_advection(&w.u2, bg.u_bar),
    }
}

/// Implicit acoustic operator `L(W) = (rho_bar div_h u, kappa grad_h rho)`.
pub fn wave_implicit<T: Real>(w: &WaveState<T>, bg: &LinearBackground<T>) -> WaveState<T> {
    let (g1, g2) = discrete_gradient(&w.rho);
    WaveState {
        rho: discrete_divergence(&w.u1, &w.u2).scaled(bg.rho_bar),
        u1: g1.scaled(bg.kappa()),
        u2: g2.scaled(bg.kappa()),
    }
}

/// One IMEX-RK step of the linear wave system
/// `W_t + H(W) + L(W) = 0`, with `H` explicit and `L` implicit. Each stage
/// reduces to `(I - dt^2 a_kk^2 (a_bar^2 / eps^2) Lap_h) rho^k = rhs`.
pub fn linear_wave_step<T: Real>(
    state: &WaveState<T>,
    bg: &LinearBackground<T>,
    tableau: &DoubleTableau<T>,
    dt: T,
    opts: &SolverOptions<T>,
) -> Result<WaveState<T>> {
    let grid = *state.rho.grid();
    let spectral = SpectralSolver::new(&grid);
    let s = tableau.stages();
    let mut h_stages: Vec<WaveState<T>> = Vec::with_capacity(s);
    let mut l_stages: Vec<WaveState<T>> = Vec::with_capacity(s);
    let kappa = bg.kappa();
    for k in 0..s {
        let mut hat = state.clone();
        for l in 0..k {
            if tableau.a_tilde[k][l] != T::zero() {
                hat.axpy(-dt * tableau.a_tilde[k][l], &h_stages[l]);
            }
            if tableau.a[k][l] != T::zero() {
                hat.axpy(-dt * tableau.a[k][l], &l_stages[l]);
            }
        }
        let akk = tableau.a[k][k];
        let stage = if akk == T::zero() {
            hat
        } else {
            let mut rhs = hat.rho.clone();
            rhs.axpy(-dt * akk * bg.rho_bar, &discrete_divergence(&hat.u1, &hat.u2));
            let c = dt * dt * akk * akk * bg.rho_bar * kappa;
            let apply = |v: &Field<T>| {
                let mut out = wide_laplacian(v).scaled(-c);
                out.axpy(T::one(), v);
                out
            };
            let (rho, rep) = match &spectral {
                Some(sp) => pcg(apply, |r| sp.solve(r, c, T::one()), &rhs, opts.cg_rel_tol, opts.max_cg),
                None => pcg(apply, |r| r.clone(), &rhs, opts.cg_rel_tol, opts.max_cg),
            };
            if !rep.converged {
                return Err(Error::Stage {
                    stage: k + 1,
                    source: Box::new(Error::SolverDiverged {
                        iterations: rep.iterations,
                        history: vec![rep.relative_residual.to_f64_lossy()],
                    }),
                });
            }
            let (g1, g2) = discrete_gradient(&rho);
            let mut u1 = hat.u1;
            let mut u2 = hat.u2;
            u1.axpy(-dt * akk * kappa, &g1);
            u2.axpy(-dt * akk * kappa, &g2);
            WaveState { rho, u1, u2 }
        };
        h_stages.push(wave_explicit(&stage, bg));
        l_stages.push(wave_implicit(&stage, bg));
    }
    let mut next = state.clone();
    for k in 0..s {
        if tableau.w_tilde[k] != T::zero() {
            next.axpy(-dt * tableau.w_tilde[k], &h_stages[k]);
        }
        if tableau.w[k] != T::zero() {
            next.axpy(-dt * tableau.w[k], &l_stages[k]);
        }
    }
    Ok(next)
}
