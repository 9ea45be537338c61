//! Error norms, convergence orders, energies, the discrete Leray
//! projection and well-preparedness metrics.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::implicit::SpectralSolver;
use crate::integrator::{LinearBackground, State, WaveState};
use crate::mesh::{central_diff, discrete_divergence, discrete_gradient, Boundary, Dir, Field};
use crate::num::{lit, Real};
use crate::physics::{mach_number, pressure, EulerParams};

/// Scalars sampled after every step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticsRecord {
    pub time: f64,
    pub dt: f64,
    pub kinetic_energy: f64,
    pub relative_kinetic_energy: f64,
    pub total_scaled_energy: f64,
    pub incompressible_energy: f64,
    pub acoustic_energy: f64,
    pub rho_deviation: f64,
    pub div_norm: f64,
}

impl DiagnosticsRecord {
    pub const CSV_HEADER: &'static str = "time,dt,kinetic_energy,relative_kinetic_energy,total_scaled_energy,incompressible_energy,acoustic_energy,rho_deviation,div_norm";

    fn values(&self) -> [f64; 9] {
        [
            self.time,
            self.dt,
            self.kinetic_energy,
            self.relative_kinetic_energy,
            self.total_scaled_energy,
            self.incompressible_energy,
            self.acoustic_energy,
            self.rho_deviation,
            self.div_norm,
        ]
    }

    /// Time series as CSV with 17 significant digits.
    pub fn series_to_csv(series: &[DiagnosticsRecord]) -> String {
        let mut s = String::from(Self::CSV_HEADER);
        s.push('\n');
        for r in series {
            let row: Vec<String> = r.values().iter().map(|v| fmt_f64(*v)).collect();
            s.push_str(&row.join(","));
            s.push('\n');
        }
        s
    }

    pub fn series_from_csv(text: &str) -> Result<Vec<DiagnosticsRecord>> {
        let mut lines = text.lines();
        if lines.next() != Some(Self::CSV_HEADER) {
            return Err(Error::Config("time-series CSV header mismatch".into()));
        }
        lines
            .filter(|l| !l.trim().is_empty())
            .map(|l| {
                let v: Vec<f64> = l
                    .split(',')
                    .map(parse_f64)
                    .collect::<Result<_>>()?;
                if v.len() != 9 {
                    return Err(Error::Config(format!("expected 9 columns, got {}", v.len())));
                }
                Ok(DiagnosticsRecord {
                    time: v[0],
                    dt: v[1],
                    kinetic_energy: v[2],
                    relative_kinetic_energy: v[3],
                    total_scaled_energy: v[4],
                    incompressible_energy: v[5],
                    acoustic_energy: v[6],
                    rho_deviation: v[7],
                    div_norm: v[8],
                })
            })
            .collect()
    }
}

/// Formats with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn parse_f64(s: &str) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| Error::Config(format!("`{s}` is not a number")))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
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

    pub fn parse(s: &str) -> Result<Variable> {
        match s.trim() {
            "rho" => Ok(Variable::Rho),
            "u1" => Ok(Variable::U1),
            "u2" => Ok(Variable::U2),
            other => Err(Error::Config(format!("unknown variable `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Norms<T> {
    pub l1: T,
    pub l2: T,
}

/// `L1 = sum |e| dx dy` and `L2 = (sum e^2 dx dy)^(1/2)` of the pointwise
/// difference to `exact(t, x1, x2) -> (rho, u1, u2)` at cell centers.
pub fn error_norms<T: Real>(
    numeric: &State<T>,
    exact: impl Fn(T, T, T) -> (T, T, T),
    variables: &[Variable],
) -> Vec<(Variable, Norms<T>)> {
    let g = numeric.grid;
    let area = g.cell_area();
    let mut acc = vec![(T::zero(), T::zero()); variables.len()];
    for j in 0..g.ny {
        for i in 0..g.nx {
            let (x, y) = g.center(i, j);
            let (r, u1, u2) = exact(numeric.time, x, y);
            let rho = numeric.rho.at(i, j);
            for (k, v) in variables.iter().enumerate() {
                let e = match v {
                    Variable::Rho => rho - r,
                    Variable::U1 => numeric.q1.at(i, j) / rho - u1,
                    Variable::U2 => numeric.q2.at(i, j) / rho - u2,
                };
                acc[k].0 = acc[k].0 + e.abs();
                acc[k].1 = acc[k].1 + e * e;
            }
        }
    }
    variables
        .iter()
        .zip(acc)
        .map(|(&v, (l1, l2))| {
            (
                v,
                Norms {
                    l1: l1 * area,
                    l2: (l2 * area).sqrt(),
                },
            )
        })
        .collect()
}

/// Observed orders `log(e_c / e_f) / log(N_f / N_c)` of consecutive rows;
/// `None` where an error is zero.
pub fn eoc(rows: &[(usize, f64)]) -> Vec<Option<f64>> {
    rows.windows(2)
        .map(|w| {
            let ((nc, ec), (nf, ef)) = (w[0], w[1]);
            if ec > 0.0 && ef > 0.0 && nf != nc {
                Some((ec / ef).ln() / (nf as f64 / nc as f64).ln())
            } else {
                None
            }
        })
        .collect()
}

/// Removes the discrete gradient part of `u`: returns `u - grad_h phi`
/// with `Lap_h phi = div_h u`, so that `div_h` of the result vanishes.
pub fn leray_project<T: Real>(u1: &Field<T>, u2: &Field<T>) -> Result<(Field<T>, Field<T>)> {
    let grid = *u1.grid();
    if grid.bc != Boundary::Periodic {
        return Err(Error::Unsupported(
            "the discrete Leray projection needs periodic boundaries".into(),
        ));
    }
    let sp = SpectralSolver::new(&grid).expect("periodic grid");
    // The FFT solve is the exact pseudo-inverse of the wide Laplacian.
    let b = discrete_divergence(u1, u2).scaled(-T::one());
    let phi = sp.solve(&b, T::one(), T::zero());
    let (g1, g2) = discrete_gradient(&phi);
    let mut p1 = u1.clone();
    let mut p2 = u2.clone();
    p1.axpy(-T::one(), &g1.with_parity(u1.parity()));
    p2.axpy(-T::one(), &g2.with_parity(u2.parity()));
    Ok((p1, p2))
}

/// Scaled energies of a perturbation about a constant background.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Energies<T> {
    pub total: T,
    pub incompressible: T,
    pub acoustic: T,
    pub kinetic: T,
}

/// `E = a^2/(rho eps^2) |rho'|^2 + rho |u|^2`, split into the well-prepared
/// part (mean density, Leray-projected velocity) and its complement.
pub fn energies<T: Real>(w: &WaveState<T>, bg: &LinearBackground<T>) -> Result<Energies<T>> {
    let area = w.rho.grid().cell_area();
    let kappa = bg.a_bar * bg.a_bar / (bg.rho_bar * bg.epsilon * bg.epsilon);
    let sq = |f: &Field<T>| f.dot(f) * area;
    let mean = w.rho.mean();
    let mut fluct = w.rho.clone();
    fluct.add_scalar(-mean);
    let (p1, p2) = leray_project(&w.u1, &w.u2)?;
    let (c1, c2) = (w.u1.zip_map(&p1, |a, b| a - b), w.u2.zip_map(&p2, |a, b| a - b));
    let n = T::from_usize_lossy(w.rho.grid().num_cells());
    let total = kappa * sq(&w.rho) + bg.rho_bar * (sq(&w.u1) + sq(&w.u2));
    let incompressible = kappa * mean * mean * n * area + bg.rho_bar * (sq(&p1) + sq(&p2));
    let acoustic = kappa * sq(&fluct) + bg.rho_bar * (sq(&c1) + sq(&c2));
    let kinetic = lit::<T>(0.5) * bg.rho_bar * (sq(&w.u1) + sq(&w.u2));
    Ok(Energies {
        total,
        incompressible,
        acoustic,
        kinetic,
    })
}

/// `E` alone (no projection), valid on any boundary type.
pub fn scaled_energy<T: Real>(w: &WaveState<T>, bg: &LinearBackground<T>) -> T {
    let area = w.rho.grid().cell_area();
    let sq = |f: &Field<T>| f.dot(f) * area;
    bg.kappa() * sq(&w.rho) + bg.rho_bar * (sq(&w.u1) + sq(&w.u2))
}

/// `1/2 sum |q|^2 / rho dx dy`.
pub fn kinetic_energy<T: Real>(state: &State<T>) -> T {
    let g = state.grid;
    let mut s = T::zero();
    for j in 0..g.ny {
        for i in 0..g.nx {
            let (r, a, b) = (state.rho.at(i, j), state.q1.at(i, j), state.q2.at(i, j));
            s = s + (a * a + b * b) / r;
        }
    }
    lit::<T>(0.5) * s * g.cell_area()
}

/// Linearisation of a state about its mean density: background
/// `(mean rho, mean u, sqrt(p'(mean rho)), eps)` and perturbation
/// `(rho - mean rho, u)`.
pub fn linearize<T: Real>(state: &State<T>, params: &EulerParams<T>) -> Result<(WaveState<T>, LinearBackground<T>)> {
    let rho_bar = state.rho.mean();
    let (u1, u2) = state.velocity();
    let a_bar = (params.gamma * pressure(rho_bar, params.gamma)? / rho_bar).sqrt();
    let bg = LinearBackground::new(rho_bar, [u1.mean(), u2.mean()], a_bar, params.epsilon)?;
    let mut rho = state.rho.clone();
    rho.add_scalar(-rho_bar);
    Ok((WaveState { rho, u1, u2 }, bg))
}

/// Diagnostics of a nonlinear state; energies use [`linearize`] and are
/// `NaN` where the projection is unavailable.
pub fn sample<T: Real>(state: &State<T>, dt: f64, ke0: T, params: &EulerParams<T>) -> DiagnosticsRecord {
    let ke = kinetic_energy(state);
    let (rho_dev, div) = well_prepared_deviation(state);
    let en = linearize(state, params).and_then(|(w, bg)| energies(&w, &bg));
    let (e, ein, eac) = match en {
        Ok(en) => (
            en.total.to_f64_lossy(),
            en.incompressible.to_f64_lossy(),
            en.acoustic.to_f64_lossy(),
        ),
        Err(_) => (f64::NAN, f64::NAN, f64::NAN),
    };
    DiagnosticsRecord {
        time: state.time.to_f64_lossy(),
        dt,
        kinetic_energy: ke.to_f64_lossy(),
        relative_kinetic_energy: if ke0 > T::zero() {
            (ke / ke0).to_f64_lossy()
        } else {
            f64::NAN
        },
        total_scaled_energy: e,
        incompressible_energy: ein,
        acoustic_energy: eac,
        rho_deviation: rho_dev.to_f64_lossy(),
        div_norm: div.to_f64_lossy(),
    }
}

/// `D_1 u2 - D_2 u1`.
pub fn vorticity<T: Real>(u1: &Field<T>, u2: &Field<T>) -> Field<T> {
    central_diff(u2, Dir::X1).zip_map(&central_diff(u1, Dir::X2), |a, b| a - b)
}

/// Local Mach number `eps |u| / sqrt(gamma rho^(gamma - 1))` per cell.
pub fn mach_field<T: Real>(state: &State<T>, params: &EulerParams<T>) -> Result<Field<T>> {
    let g = state.grid;
    let mut out = Field::zeros(g);
    for j in 0..g.ny {
        for i in 0..g.nx {
            out.set(i, j, mach_number(state.cell(i as isize, j as isize), params)?);
        }
    }
    out.apply_bc();
    Ok(out)
}

/// `(max |rho - mean rho|, ||div_h u||_inf)`.
pub fn well_prepared_deviation<T: Real>(state: &State<T>) -> (T, T) {
    let mean = state.rho.mean();
    let dev = state.rho.map(|r| r - mean).max_abs();
    let (u1, u2) = state.velocity();
    (dev, discrete_divergence(&u1, &u2).max_abs())
}

/// Errors of one variable at one resolution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorPair {
    pub l1: f64,
    pub l2: f64,
}

/// L1 and L2 order columns of one variable.
type OrderPair = (Vec<Option<f64>>, Vec<Option<f64>>);

/// Refinement study table: one row per resolution, one `(L1, L2)` pair per
/// variable.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTable {
    pub variables: Vec<String>,
    pub rows: Vec<(usize, Vec<ErrorPair>)>,
}

impl ConvergenceTable {
    pub fn new(variables: Vec<String>) -> Self {
        ConvergenceTable {
            variables,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, n: usize, errors: Vec<ErrorPair>) -> Result<()> {
        if errors.len() != self.variables.len() {
            return Err(Error::InvalidParameter(format!(
                "expected {} error pairs, got {}",
                self.variables.len(),
                errors.len()
            )));
        }
        if let Some((last, _)) = self.rows.last() {
            if n <= *last {
                return Err(Error::InvalidParameter(format!(
                    "resolutions must increase ({n} after {last})"
                )));
            }
        }
        self.rows.push((n, errors));
        Ok(())
    }

    /// Orders of variable `var` in the L1 (`l2 = false`) or L2 norm, with
    /// `None` on the first row.
    pub fn orders(&self, var: usize, l2: bool) -> Vec<Option<f64>> {
        let col: Vec<(usize, f64)> = self
            .rows
            .iter()
            .map(|(n, e)| (*n, if l2 { e[var].l2 } else { e[var].l1 }))
            .collect();
        std::iter::once(None).chain(eoc(&col)).take(col.len()).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("N");
        for v in &self.variables {
            write!(s, ",{v}_L1,{v}_L1_order,{v}_L2,{v}_L2_order").unwrap();
        }
        s.push('\n');
        let orders: Vec<OrderPair> = (0..self.variables.len())
            .map(|k| (self.orders(k, false), self.orders(k, true)))
            .collect();
        let opt = |o: Option<f64>| o.map(fmt_f64).unwrap_or_default();
        for (r, (n, errs)) in self.rows.iter().enumerate() {
            s.push_str(&n.to_string());
            for (k, e) in errs.iter().enumerate() {
                write!(
                    s,
                    ",{},{},{},{}",
                    fmt_f64(e.l1),
                    opt(orders[k].0[r]),
                    fmt_f64(e.l2),
                    opt(orders[k].1[r])
                )
                .unwrap();
            }
            s.push('\n');
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| Error::Config("empty table".into()))?;
        let cols: Vec<&str> = header.split(',').collect();
        if cols.first() != Some(&"N") || !(cols.len() - 1).is_multiple_of(4) {
            return Err(Error::Config("malformed convergence table header".into()));
        }
        let variables: Vec<String> = cols[1..]
            .chunks(4)
            .map(|c| c[0].trim_end_matches("_L1").to_string())
            .collect();
        let mut table = ConvergenceTable::new(variables);
        for line in lines {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != cols.len() {
                return Err(Error::Config(format!("row has {} columns, expected {}", f.len(), cols.len())));
            }
            let n: usize = f[0]
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("`{}` is not a resolution", f[0])))?;
            let errs = f[1..]
                .chunks(4)
                .map(|c| Ok(ErrorPair { l1: parse_f64(c[0])?, l2: parse_f64(c[2])? }))
                .collect::<Result<Vec<_>>>()?;
            table.push(n, errs).map_err(|e| Error::Config(e.to_string()))?;
        }
        Ok(table)
    }

    /// Aligned plain-text layout: `N` followed by error/order columns per
    /// variable and norm.
    pub fn to_text(&self, title: &str) -> String {
        let mut s = String::new();
        if !title.is_empty() {
            writeln!(s, "{title}").unwrap();
        }
        write!(s, "{:>6}", "N").unwrap();
        for v in &self.variables {
            write!(s, " | {:>11} {:>7} {:>11} {:>7}", format!("L1({v})"), "EOC", format!("L2({v})"), "EOC").unwrap();
        }
        s.push('\n');
        let orders: Vec<OrderPair> = (0..self.variables.len())
            .map(|k| (self.orders(k, false), self.orders(k, true)))
            .collect();
        let opt = |o: Option<f64>| o.map(|x| format!("{x:.4}")).unwrap_or_else(|| "-".into());
        for (r, (n, errs)) in self.rows.iter().enumerate() {
            write!(s, "{n:>6}").unwrap();
            for (k, e) in errs.iter().enumerate() {
                write!(
                    s,
                    " | {:>11.4e} {:>7} {:>11.4e} {:>7}",
                    e.l1,
                    opt(orders[k].0[r]),
                    e.l2,
                    opt(orders[k].1[r])
                )
                .unwrap();
            }
            s.push('\n');
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::Grid2D;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(grid: Grid2D<f64>, seed: u64) -> Field<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v: Vec<f64> = (0..grid.num_cells()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        Field::from_interior(grid, &v).unwrap()
    }

    fn state(grid: Grid2D<f64>, rho: f64, u: (f64, f64)) -> State<f64> {
        State::new(
            Field::constant(grid, rho),
            Field::constant(grid, rho * u.0),
            Field::constant(grid, rho * u.1),
            0.0,
        )
        .unwrap()
    }

    #[test]
    fn norms_of_constant_error() {
        let g = Grid2D::unit_square(10).unwrap();
        let s = state(g, 1.0, (0.25, 0.0));
        let n = error_norms(&s, |_, _, _| (1.0, 0.0, 0.0), &[Variable::U1, Variable::Rho]);
        assert!((n[0].1.l1 - 0.25).abs() < 1e-14);
        assert!((n[0].1.l2 - 0.25).abs() < 1e-14);
        assert_eq!(n[1].1.l1, 0.0);
    }

    #[test]
    fn eoc_examples() {
        assert_eq!(eoc(&[(10, 4e-3), (20, 1e-3)]), vec![Some(2.0)]);
        assert_eq!(eoc(&[(10, 1e-3), (20, 1e-3)]), vec![Some(0.0)]);
        assert_eq!(eoc(&[(10, 0.0), (20, 1e-3)]), vec![None]);
        let table = [(10, 4.9120e-3), (20, 1.3454e-3), (40, 3.1818e-4), (80, 8.0467e-5)];
        let o: Vec<f64> = eoc(&table).into_iter().map(Option::unwrap).collect();
        for (a, b) in o.iter().zip([1.8683, 2.0801, 1.9834]) {
            assert!((a - b).abs() < 1e-4, "{a} vs {b}");
        }
        let exact: Vec<(usize, f64)> = (0..4).map(|k| (10 << k, 0.1 / 4f64.powi(k))).collect();
        for o in eoc(&exact) {
            assert!((o.unwrap() - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn leray_properties() {
        let g = Grid2D::unit_square(16).unwrap();
        let (u1, u2) = (random(g, 1), random(g, 2));
        let (p1, p2) = leray_project(&u1, &u2).unwrap();
        assert!(discrete_divergence(&p1, &p2).max_abs() < 1e-11);
        let (r1, r2) = leray_project(&p1, &p2).unwrap();
        assert!(r1.zip_map(&p1, |a, b| a - b).max_abs() < 1e-10);
        assert!(r2.zip_map(&p2, |a, b| a - b).max_abs() < 1e-10);

        let psi = random(g, 3);
        let (g1, g2) = discrete_gradient(&psi);
        let (z1, z2) = leray_project(&g1, &g2).unwrap();
        assert!(z1.max_abs() < 1e-10 && z2.max_abs() < 1e-10);

        let c = Field::constant(g, 0.7);
        let (c1, _) = leray_project(&c, &c).unwrap();
        assert!(c1.zip_map(&c, |a, b| a - b).max_abs() < 1e-14);
    }

    #[test]
    fn leray_rejects_walls() {
        let g = Grid2D::new(8, 8, (0.0, 1.0), (0.0, 1.0), Boundary::Wall).unwrap();
        let f = Field::zeros(g);
        assert!(matches!(leray_project(&f, &f), Err(Error::Unsupported(_))));
    }

    #[test]
    fn energy_split_is_orthogonal() {
        let g = Grid2D::unit_square(16).unwrap();
        let bg = LinearBackground::new(1.2, [0.3, 0.1], 0.9, 0.2).unwrap();
        let w = WaveState {
            rho: random(g, 4),
            u1: random(g, 5),
            u2: random(g, 6),
        };
        let e = energies(&w, &bg).unwrap();
        assert!((e.total - e.incompressible - e.acoustic).abs() < 1e-10 * e.total);
        assert!((scaled_energy(&w, &bg) - e.total).abs() < 1e-12 * e.total);

        let psi = random(g, 7);
        let (g1, g2) = discrete_gradient(&psi);
        let grad = WaveState {
            rho: Field::zeros(g),
            u1: g1,
            u2: g2,
        };
        assert!(energies(&grad, &bg).unwrap().incompressible < 1e-18);
    }

    #[test]
    fn kinetic_energy_example() {
        let g = Grid2D::unit_square(8).unwrap();
        assert!((kinetic_energy(&state(g, 1.0, (1.0, 0.0))) - 0.5).abs() < 1e-14);
    }

    #[test]
    fn vorticity_and_mach() {
        let g = Grid2D::new(8, 8, (0.0f64, 1.0), (0.0, 1.0), Boundary::Wall).unwrap();
        let u1 = Field::zeros(g);
        let u2 = Field::from_fn(g, |x, _| x);
        let w = vorticity(&u1, &u2);
        for j in 0..8 {
            for i in 1..7 {
                assert!((w.at(i, j) - 1.0).abs() < 1e-12);
            }
        }
        let gp = Grid2D::unit_square(8).unwrap();
        let p = EulerParams::new(0.1, 2.0, 0.45, 1.0).unwrap();
        let m = mach_field(&state(gp, 1.0, (0.6, 0.0)), &p).unwrap();
        assert!((m.at(3, 3) - 0.06 / 2f64.sqrt()).abs() < 1e-15);
        let (dev, div) = well_prepared_deviation(&state(gp, 1.0, (0.6, 0.2)));
        assert_eq!(dev, 0.0);
        assert!(div <= 1e-12);
    }

    #[test]
    fn table_roundtrip_and_layout() {
        let mut t = ConvergenceTable::new(vec!["u1".into(), "u2".into()]);
        t.push(10, vec![ErrorPair { l1: 4.9120e-3, l2: 8.8088e-3 }, ErrorPair { l1: 7.9419e-3, l2: 1.7131e-2 }]).unwrap();
        t.push(20, vec![ErrorPair { l1: 1.3454e-3, l2: 2.5016e-3 }, ErrorPair { l1: 2.6670e-3, l2: 5.7609e-3 }]).unwrap();
        assert!(t.push(20, vec![ErrorPair { l1: 1.0, l2: 1.0 }; 2]).is_err());
        let back = ConvergenceTable::from_csv(&t.to_csv()).unwrap();
        assert_eq!(back, t);
        let text = t.to_text("eps = 1e-6");
        assert!(text.contains("1.868"));
        assert_eq!(t.orders(0, false)[0], None);
    }

    #[test]
    fn series_roundtrip() {
        let r = DiagnosticsRecord {
            time: 0.1,
            dt: 1.0 / 3.0,
            kinetic_energy: 0.5,
            relative_kinetic_energy: 1.0,
            total_scaled_energy: 2.0,
            incompressible_energy: 1.5,
            acoustic_energy: 0.5,
            rho_deviation: 1e-17,
            div_norm: f64::NAN,
        };
        let csv = DiagnosticsRecord::series_to_csv(&[r, r]);
        let back = DiagnosticsRecord::series_from_csv(&csv).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[0].dt, r.dt);
        assert!(back[1].div_norm.is_nan());
        assert_eq!(DiagnosticsRecord::series_to_csv(&back), csv);
    }
}
