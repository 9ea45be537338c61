//! Per-stage elimination of the momentum into a semi-linear elliptic
//! equation for the stage pressure, and its Newton-Krylov solution.
//!
//! The unknown is the scaled pressure perturbation
//! `pi = (p - p_ref) / eps^2`, so the stage equation reads
//!
//! ```text
//! -dt^2 a_kk^2 Lap_h pi + (p_ref + eps^2 pi)^(1/gamma) = rho_hat - dt a_kk div_h q_hat
//! ```
//!
//! and the momentum update uses `grad_h pi` directly. Working with `pi`
//! instead of `p` keeps the acoustic gradient `grad p / eps^2` free of
//! cancellation as `eps -> 0`. With `eps^2 = 1` and `p_ref = 0` the unknown
//! is the pressure itself.

pub mod pcg;

use log::debug;

use crate::error::{Error, Result};
use crate::integrator::State;
use crate::mesh::{discrete_divergence, discrete_gradient, wide_laplacian, Field, Parity};
use crate::num::{lit, Real};
use crate::physics::{density_from_pressure, pressure, EulerParams};
use crate::tableaux::DoubleTableau;

pub use pcg::{pcg, CgReport, SpectralSolver};

/// Newton-Krylov settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions<T> {
    /// Absolute infinity-norm tolerance on the nonlinear residual.
    pub tol: T,
    pub max_newton: usize,
    /// Relative tolerance of the inner conjugate-gradient solves.
    pub cg_rel_tol: T,
    pub max_cg: usize,
    /// Step halvings allowed to keep the pressure positive.
    pub max_halvings: usize,
}

impl<T: Real> Default for SolverOptions<T> {
    fn default() -> Self {
        SolverOptions {
            tol: lit(1e-10),
            max_newton: 50,
            cg_rel_tol: lit(1e-12),
            max_cg: 2000,
            max_halvings: 30,
        }
    }
}

/// `-laplacian_coeff Lap_h u + (reference_pressure + pressure_scale u)^(1/gamma) = rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct EllipticProblem<T> {
    pub laplacian_coeff: T,
    pub pressure_scale: T,
    pub reference_pressure: T,
    pub rhs: Field<T>,
    pub gamma: T,
}

impl<T: Real> EllipticProblem<T> {
    /// Pressure form `-coeff Lap_h p + p^(1/gamma) = rhs`.
    pub fn new(coeff: T, rhs: Field<T>, gamma: T) -> Self {
        EllipticProblem {
            laplacian_coeff: coeff,
            pressure_scale: T::one(),
            reference_pressure: T::zero(),
            rhs,
            gamma,
        }
    }

    /// Stage problem in perturbation form with `p_ref = p(mean(rhs))`.
    pub fn for_stage(dt: T, akk: T, rhs: Field<T>, params: &EulerParams<T>) -> Result<Self> {
        let reference_pressure = pressure(rhs.mean(), params.gamma)?;
        Ok(EllipticProblem {
            laplacian_coeff: dt * dt * akk * akk,
            pressure_scale: params.eps2(),
            reference_pressure,
            rhs,
            gamma: params.gamma,
        })
    }

    /// Laplacian coefficient of the pressure form, `dt^2 a_kk^2 / eps^2`.
    pub fn coeff(&self) -> T {
        self.laplacian_coeff / self.pressure_scale
    }

    /// Pressure field belonging to the unknown `u`.
    pub fn pressure(&self, u: &Field<T>) -> Field<T> {
        let (r, s) = (self.reference_pressure, self.pressure_scale);
        u.map(|v| r + s * v)
    }

    fn density(&self, u: &Field<T>) -> Result<Field<T>> {
        let p = self.pressure(u);
        let ((i, j), pmin) = p.argmin();
        if !(pmin > T::zero()) {
            return Err(Error::Positivity {
                quantity: "pressure",
                value: pmin.to_f64_lossy(),
                location: format!("cell ({i}, {j})"),
            });
        }
        let g = self.gamma;
        Ok(if g == T::one() { p } else { p.map(|v| v.powf(g.recip())) })
    }

    /// Residual `-c Lap_h u + rho(u) - rhs`.
    pub fn residual(&self, u: &Field<T>) -> Result<Field<T>> {
        let mut f = self.density(u)?;
        f.axpy(-T::one(), &self.rhs);
        f.axpy(-self.laplacian_coeff, &wide_laplacian(u));
        Ok(f)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EllipticSolution<T> {
    /// Solution in the problem's unknown (the pressure in pressure form).
    pub unknown: Field<T>,
    pub newton_iterations: usize,
    pub cg_iterations: usize,
    /// Infinity norm of the residual before each Newton step and at exit.
    pub residual_history: Vec<f64>,
    pub residual: T,
}

/// Newton's method with the analytic diagonal Jacobian and PCG inner
/// solves, FFT-preconditioned on periodic grids.
pub fn solve_pressure_elliptic<T: Real>(
    prob: &EllipticProblem<T>,
    opts: &SolverOptions<T>,
) -> Result<EllipticSolution<T>> {
    if !(prob.laplacian_coeff >= T::zero()) {
        return Err(Error::InvalidParameter(format!(
            "Laplacian coefficient must be non-negative, got {}",
            prob.laplacian_coeff
        )));
    }
    if !prob.rhs.all_finite() {
        return Err(Error::InvalidParameter("elliptic right-hand side is not finite".into()));
    }
    let grid = *prob.rhs.grid();
    let spectral = SpectralSolver::new(&grid);
    let c = prob.laplacian_coeff;
    let jacobi_lap = c * (lit::<T>(0.5) / (grid.dx * grid.dx) + lit::<T>(0.5) / (grid.dy * grid.dy));
    let inv_gamma = prob.gamma.recip();

    // Start from the uniform state with the mean density.
    let start = (pressure(prob.rhs.mean(), prob.gamma)? - prob.reference_pressure) / prob.pressure_scale;
    let mut u = Field::zeros_with_parity(grid, [Parity::Even; 2]);
    u.add_scalar(start);
    let mut history = Vec::new();
    let mut cg_total = 0;
    let mut f = prob.residual(&u)?;
    for it in 0..=opts.max_newton {
        let rnorm = f.max_abs();
        history.push(rnorm.to_f64_lossy());
        if rnorm <= opts.tol {
            debug!(
                "elliptic solve: newton={} cg={} residual={:e}",
                it,
                cg_total,
                rnorm.to_f64_lossy()
            );
            return Ok(EllipticSolution {
                unknown: u,
                newton_iterations: it,
                cg_iterations: cg_total,
                residual_history: history,
                residual: rnorm,
            });
        }
        if it == opts.max_newton || !rnorm.is_finite() {
            break;
        }
        // d rho / d u = s / gamma * p^(1/gamma - 1)
        let s = prob.pressure_scale;
        let diag = prob.pressure(&u).map(|p| s * inv_gamma * p.powf(inv_gamma - T::one()));
        let shift = diag.mean();
        let apply = |v: &Field<T>| {
            let mut out = wide_laplacian(v).scaled(-c);
            out.axpy(T::one(), &diag.zip_map(v, |a, b| a * b));
            out
        };
        let neg_f = f.scaled(-T::one());
        let (delta, rep) = match &spectral {
            Some(sp) => pcg(apply, |r| sp.solve(r, c, shift), &neg_f, opts.cg_rel_tol, opts.max_cg),
            None => pcg(
                apply,
                |r| r.zip_map(&diag, |a, d| a / (jacobi_lap + d)),
                &neg_f,
                opts.cg_rel_tol,
                opts.max_cg,
            ),
        };
        cg_total += rep.iterations;

        let mut lambda = T::one();
        let mut accepted = None;
        for _ in 0..=opts.max_halvings {
            let mut trial = u.clone();
            trial.axpy(lambda, &delta);
            match prob.residual(&trial) {
                Ok(ft) => {
                    accepted = Some((trial, ft));
                    break;
                }
                Err(Error::Positivity { .. }) => lambda = lambda * lit(0.5),
                Err(e) => return Err(e),
            }
        }
        match accepted {
            Some((next, fnext)) => {
                u = next;
                f = fnext;
            }
            None => {
                return Err(Error::Positivity {
                    quantity: "pressure",
                    value: prob.pressure(&u).min().to_f64_lossy(),
                    location: format!("Newton step {} after {} halvings", it + 1, opts.max_halvings),
                })
            }
        }
    }
    Err(Error::SolverDiverged {
        iterations: history.len() - 1,
        history,
    })
}

/// Explicitly known parts of stage `stage` (zero-based).
#[derive(Debug, Clone, PartialEq)]
pub struct StageContext<T> {
    pub stage: usize,
    pub rho_hat: Field<T>,
    pub q_hat: [Field<T>; 2],
    pub akk: T,
    pub dt: T,
    pub params: EulerParams<T>,
}

/// A completed stage together with the flux divergences later stages and
/// the final update consume.
#[derive(Debug, Clone, PartialEq)]
pub struct StageRecord<T> {
    pub state: State<T>,
    /// `p / eps^2` up to an additive constant.
    pub acoustic: Field<T>,
    /// Rusanov flux divergence of `(rho, q1, q2)`; `None` when no later
    /// coefficient uses it.
    pub advective: Option<[Field<T>; 3]>,
    /// `div_h q`.
    pub div_q: Field<T>,
    /// `grad_h (p / eps^2)`.
    pub grad_acoustic: [Field<T>; 2],
}

/// Forms `rho_hat` and `q_hat` of stage `stage` from the completed stages.
///
/// `rho_hat = rho^n - dt sum_l (at_kl DF_rho^l + a_kl div_h q^l)` and
/// `q_hat = q^n - dt sum_l (at_kl DF_q^l + a_kl grad_h (p^l / eps^2))`,
/// where `DF` is the Rusanov flux divergence.
pub fn assemble_stage<T: Real>(
    state_n: &State<T>,
    prior: &[StageRecord<T>],
    tableau: &DoubleTableau<T>,
    stage: usize,
    dt: T,
    params: &EulerParams<T>,
) -> Result<StageContext<T>> {
    if stage >= tableau.stages() {
        return Err(Error::InvalidParameter(format!(
            "stage index {stage} out of range for a {}-stage tableau",
            tableau.stages()
        )));
    }
    if prior.len() < stage {
        return Err(Error::InvalidParameter(format!(
            "stage {stage} needs {stage} completed stages, got {}",
            prior.len()
        )));
    }
    let mut rho_hat = state_n.rho.clone();
    let mut q_hat = [state_n.q1.clone(), state_n.q2.clone()];
    for (l, rec) in prior.iter().take(stage).enumerate() {
        let at = tableau.a_tilde[stage][l];
        let a = tableau.a[stage][l];
        if at != T::zero() {
            let adv = rec.advective.as_ref().ok_or_else(|| {
                Error::InvalidParameter(format!("stage {l} advective divergence was not kept"))
            })?;
            rho_hat.axpy(-dt * at, &adv[0]);
            q_hat[0].axpy(-dt * at, &adv[1]);
            q_hat[1].axpy(-dt * at, &adv[2]);
        }
        if a != T::zero() {
            rho_hat.axpy(-dt * a, &rec.div_q);
            q_hat[0].axpy(-dt * a, &rec.grad_acoustic[0]);
            q_hat[1].axpy(-dt * a, &rec.grad_acoustic[1]);
        }
    }
    Ok(StageContext {
        stage,
        rho_hat,
        q_hat,
        akk: tableau.a[stage][stage],
        dt,
        params: *params,
    })
}

impl<T: Real> StageContext<T> {
    /// Right-hand side `rho_hat - dt a_kk div_h q_hat`.
    pub fn elliptic_rhs(&self) -> Field<T> {
        let mut rhs = self.rho_hat.clone();
        rhs.axpy(
            -self.dt * self.akk,
            &discrete_divergence(&self.q_hat[0], &self.q_hat[1]),
        );
        rhs
    }

    pub fn elliptic_problem(&self) -> Result<EllipticProblem<T>> {
        EllipticProblem::for_stage(self.dt, self.akk, self.elliptic_rhs(), &self.params)
    }
}

/// Back-substitutes the stage pressure: `rho^k = p^(1/gamma)`,
/// `q^k = q_hat - dt a_kk grad_h pi`. Fails when the coupled mass equation
/// is violated by more than `10 tol`.
pub fn complete_stage<T: Real>(
    ctx: &StageContext<T>,
    prob: &EllipticProblem<T>,
    unknown: &Field<T>,
    tol: T,
    time: T,
) -> Result<(State<T>, Field<T>)> {
    let p = prob.pressure(unknown);
    let gamma = ctx.params.gamma;
    let grid = *p.grid();
    let mut rho = Field::zeros(grid);
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let r = density_from_pressure(p.at(i, j), gamma).map_err(|e| match e {
                Error::Positivity { quantity, value, .. } => Error::Positivity {
                    quantity,
                    value,
                    location: format!("cell ({i}, {j})"),
                },
                other => other,
            })?;
            rho.set(i, j, r);
        }
    }
    rho.apply_bc();
    let (g1, g2) = discrete_gradient(unknown);
    let scale = ctx.dt * ctx.akk * (prob.pressure_scale / ctx.params.eps2());
    let mut q1 = ctx.q_hat[0].clone();
    let mut q2 = ctx.q_hat[1].clone();
    q1.axpy(-scale, &g1);
    q2.axpy(-scale, &g2);

    let mut implied = ctx.rho_hat.clone();
    implied.axpy(-ctx.dt * ctx.akk, &discrete_divergence(&q1, &q2));
    let residual = implied.zip_map(&rho, |a, b| a - b).max_abs();
    let limit = lit::<T>(10.0) * tol;
    if !(residual <= limit) {
        return Err(Error::BackSubstitution {
            residual: residual.to_f64_lossy(),
            limit: limit.to_f64_lossy(),
        });
    }
    let acoustic = unknown.scaled(prob.pressure_scale / ctx.params.eps2());
    Ok((State::new(rho, q1, q2, time)?, acoustic))
}

/// Statistics of one stage solve.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StageStats {
    pub newton_iterations: usize,
    pub cg_iterations: usize,
    pub residual: f64,
}

/// Runs the full implicit part of a stage: elliptic solve (skipped when
/// `a_kk = 0`) followed by back-substitution.
pub fn solve_stage<T: Real>(
    ctx: &StageContext<T>,
    opts: &SolverOptions<T>,
    time: T,
    carried_acoustic: Option<&Field<T>>,
) -> Result<(State<T>, Field<T>, StageStats)> {
    if ctx.akk == T::zero() {
        let state = State::new(
            ctx.rho_hat.clone(),
            ctx.q_hat[0].clone(),
            ctx.q_hat[1].clone(),
            time,
        )?;
        let acoustic = match carried_acoustic {
            Some(a) => a.clone(),
            None => acoustic_from_density(&state.rho, &ctx.params)?,
        };
        return Ok((state, acoustic, StageStats::default()));
    }
    let prob = ctx.elliptic_problem()?;
    let sol = solve_pressure_elliptic(&prob, opts)?;
    let (state, acoustic) = complete_stage(ctx, &prob, &sol.unknown, opts.tol, time)?;
    Ok((
        state,
        acoustic,
        StageStats {
            newton_iterations: sol.newton_iterations,
            cg_iterations: sol.cg_iterations,
            residual: sol.residual.to_f64_lossy(),
        },
    ))
}

/// `(p(rho) - p(mean rho)) / eps^2` evaluated from the density.
pub fn acoustic_from_density<T: Real>(rho: &Field<T>, params: &EulerParams<T>) -> Result<Field<T>> {
    let p_ref = pressure(rho.mean(), params.gamma)?;
    let inv = params.eps2().recip();
    let grid = *rho.grid();
    let mut out = Field::zeros(grid);
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            out.set(i, j, (pressure(rho.at(i, j), params.gamma)? - p_ref) * inv);
        }
    }
    out.apply_bc();
    Ok(out)
}
