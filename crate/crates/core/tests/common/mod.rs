//! Helpers shared by the integration test targets.

use machflow::integrator::{LinearBackground, WaveState};
use machflow::tableaux::DoubleTableau;
use nalgebra::{DMatrix, DVector};

/// Stacks the interiors of `(rho, u1, u2)` into one vector.
pub fn stack(w: &WaveState<f64>) -> DVector<f64> {
    let mut v = w.rho.interior();
    v.extend(w.u1.interior());
    v.extend(w.u2.interior());
    DVector::from_vec(v)
}

/// Dense assembly of one IMEX step of the linear wave system on an `n x n`
/// periodic grid, state ordered as `(rho, u1, u2)` blocks of row-major cells.
pub fn dense_wave_step(
    w0: &DVector<f64>,
    n: usize,
    h: f64,
    bg: &LinearBackground<f64>,
    t: &DoubleTableau<f64>,
    dt: f64,
) -> DVector<f64> {
    let m = n * n;
    let idx = |i: usize, j: usize| (j % n) * n + (i % n);
    let mut dx = DMatrix::zeros(m, m);
    let mut dy = DMatrix::zeros(m, m);
    let mut adv = DMatrix::zeros(m, m);
    let [ua, ub] = bg.u_bar;
    for j in 0..n {
        for i in 0..n {
            let c = idx(i, j);
            dx[(c, idx(i + 1, j))] += 0.5 / h;
            dx[(c, idx(i + n - 1, j))] -= 0.5 / h;
            dy[(c, idx(i, j + 1))] += 0.5 / h;
            dy[(c, idx(i, j + n - 1))] -= 0.5 / h;
            // Upwind differences.
            for (u, next, prev) in [(ua, idx(i + 1, j), idx(i + n - 1, j)), (ub, idx(i, j + 1), idx(i, j + n - 1))] {
                if u >= 0.0 {
                    adv[(c, c)] += u / h;
                    adv[(c, prev)] -= u / h;
                } else {
                    adv[(c, next)] += u / h;
                    adv[(c, c)] -= u / h;
                }
            }
        }
    }
    let kappa = bg.a_bar * bg.a_bar / (bg.rho_bar * bg.epsilon * bg.epsilon);
    let mut hop = DMatrix::zeros(3 * m, 3 * m);
    let mut lop = DMatrix::zeros(3 * m, 3 * m);
    for b in 0..3 {
        hop.view_mut((b * m, b * m), (m, m)).copy_from(&adv);
    }
    lop.view_mut((0, m), (m, m)).copy_from(&(&dx * bg.rho_bar));
    lop.view_mut((0, 2 * m), (m, m)).copy_from(&(&dy * bg.rho_bar));
    lop.view_mut((m, 0), (m, m)).copy_from(&(&dx * kappa));
    lop.view_mut((2 * m, 0), (m, m)).copy_from(&(&dy * kappa));
    let s = t.stages();
    let id = DMatrix::<f64>::identity(3 * m, 3 * m);
    let mut stages: Vec<DVector<f64>> = Vec::new();
    for k in 0..s {
        let mut rhs = w0.clone();
        for (l, wl) in stages.iter().enumerate() {
            rhs -= &hop * wl * (dt * t.a_tilde[k][l]) + &lop * wl * (dt * t.a[k][l]);
        }
        let sys = &id + &lop * (dt * t.a[k][k]);
        stages.push(sys.lu().solve(&rhs).expect("regular stage matrix"));
    }
    let mut out = w0.clone();
    for (k, wk) in stages.iter().enumerate() {
        out -= &hop * wk * (dt * t.w_tilde[k]) + &lop * wk * (dt * t.w[k]);
    }
    out
}
