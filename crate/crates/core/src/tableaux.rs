//! Double Butcher tableaux for IMEX Runge-Kutta schemes.
//!
//! A [`DoubleTableau`] pairs an explicit table (`a_tilde`, `c_tilde`,
//! `w_tilde`) used for the non-stiff advective flux with a diagonally
//! implicit table (`a`, `c`, `w`) used for the stiff acoustic flux.
//! Besides the built-in schemes this module classifies tableaux (order,
//! GSA, type-A / type-CK) and evaluates the scalar coefficients `b2`, `b3`,
//! `b4` that drive the linear L2-stability predicates.

use std::fmt;
use std::path::Path;

use crate::error::{Error, Result};
use crate::num::{lit, Real};

/// Tolerance for consistency and order-condition checks.
pub const ORDER_TOL: f64 = 1e-12;

/// Default `gamma_p` of PR(2,2,2).
///
/// `1/sqrt(2)` turns the tableau into the SSP2(2,2,2) scheme of Pareschi and Russo (diagonal `1 - 1/sqrt(2)`).
pub const PR_GAMMA_DEFAULT: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Names accepted by [`builtin_tableau`].
pub const BUILTIN_NAMES: [&str; 5] = [
    "Euler(1,1,1)",
    "JIN(2,2,2)",
    "PR(2,2,2)",
    "ARS(2,2,2)",
    "CN(2,2,2)",
];

#[derive(Debug, Clone, PartialEq)]
pub struct DoubleTableau<T> {
    pub name: String,
    /// Explicit matrix, strictly lower triangular, row-major `s x s`.
    pub a_tilde: Vec<Vec<T>>,
    /// Implicit (DIRK) matrix, lower triangular.
    pub a: Vec<Vec<T>>,
    pub c_tilde: Vec<T>,
    pub c: Vec<T>,
    pub w_tilde: Vec<T>,
    pub w: Vec<T>,
    /// Order advertised by the scheme's `(s, sigma, p)` triplet, if known.
    pub declared_order: Option<usize>,
    /// Leading rows that only exist to fit a one-stage scheme into the
    /// two-row layout (Euler(1,1,1)); ignored by the type-A/CK test.
    pub padded_rows: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableauKind {
    TypeA,
    TypeCK,
    Neither,
}

impl fmt::Display for TableauKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TableauKind::TypeA => write!(f, "type-A"),
            TableauKind::TypeCK => write!(f, "type-CK"),
            TableauKind::Neither => write!(f, "neither"),
        }
    }
}

/// Structural classification produced by [`validate_tableau`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Classification {
    pub order_achieved: usize,
    pub is_gsa: bool,
    pub kind: TableauKind,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityCoefficients<T> {
    pub b2: [T; 3],
    pub b3: [T; 4],
    pub b4: [T; 4],
}

/// Output of [`predict_stability`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityPrediction<T> {
    pub coefficients: StabilityCoefficients<T>,
    /// All four `b4` entries negative.
    pub semi_discrete_stable: bool,
    /// `b2[0] < 0` and `b2[2] > 0`.
    pub fully_discrete_first_order_stable: bool,
    /// Largest admissible `dt` of the first-order CFL-like bound.
    pub cfl_constant: Option<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TableauReport<T> {
    pub name: String,
    pub order_achieved: usize,
    pub is_gsa: bool,
    pub kind: TableauKind,
    pub b2: [T; 3],
    pub b3: [T; 4],
    pub b4: [T; 4],
    pub semi_discrete_stable: bool,
    pub fully_discrete_first_order_stable: bool,
    pub cfl_constant: Option<T>,
}

impl<T: Real> TableauReport<T> {
    /// The stability verdict relevant for the achieved order: the
    /// fully-discrete first-order criterion for first-order schemes and the
    /// semi-discrete `b4` criterion for second-order ones.
    pub fn stability_holds(&self) -> bool {
        match self.order_achieved {
            0 => false,
            1 => self.fully_discrete_first_order_stable,
            _ => self.semi_discrete_stable,
        }
    }

    /// Aligned human-readable listing.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let row = |s: &mut String, k: &str, v: String| s.push_str(&format!("{k:<36}{v}\n"));
        row(&mut s, "tableau", self.name.clone());
        row(&mut s, "order_achieved", self.order_achieved.to_string());
        row(&mut s, "is_gsa", self.is_gsa.to_string());
        row(&mut s, "kind", self.kind.to_string());
        for (i, b) in self.b2.iter().enumerate() {
            row(&mut s, &format!("b2_{}", i + 1), format!("{:+.17e}", b.to_f64_lossy()));
        }
        for (i, b) in self.b3.iter().enumerate() {
            row(&mut s, &format!("b3_{}", i + 1), format!("{:+.17e}", b.to_f64_lossy()));
        }
        for (i, b) in self.b4.iter().enumerate() {
            row(&mut s, &format!("b4_{}", i + 1), format!("{:+.17e}", b.to_f64_lossy()));
        }
        row(&mut s, "semi_discrete_stable", self.semi_discrete_stable.to_string());
        row(
            &mut s,
            "fully_discrete_first_order_stable",
            self.fully_discrete_first_order_stable.to_string(),
        );
        row(
            &mut s,
            "cfl_constant",
            self.cfl_constant
                .map(|c| format!("{:.17e}", c.to_f64_lossy()))
                .unwrap_or_else(|| "absent".into()),
        );
        s
    }

    /// Two-line `key,...` / `value,...` CSV.
    pub fn to_csv(&self) -> String {
        let mut keys = vec![
            "tableau".to_string(),
            "order_achieved".into(),
            "is_gsa".into(),
            "kind".into(),
        ];
        let mut vals = vec![
            format!("\"{}\"", self.name),
            self.order_achieved.to_string(),
            self.is_gsa.to_string(),
            self.kind.to_string(),
        ];
        let mut push = |k: String, v: T| {
            keys.push(k);
            vals.push(format!("{:.16e}", v.to_f64_lossy()));
        };
        for (i, b) in self.b2.iter().enumerate() {
            push(format!("b2_{}", i + 1), *b);
        }
        for (i, b) in self.b3.iter().enumerate() {
            push(format!("b3_{}", i + 1), *b);
        }
        for (i, b) in self.b4.iter().enumerate() {
            push(format!("b4_{}", i + 1), *b);
        }
        keys.extend([
            "semi_discrete_stable".into(),
            "fully_discrete_first_order_stable".into(),
            "cfl_constant".into(),
        ]);
        vals.extend([
            self.semi_discrete_stable.to_string(),
            self.fully_discrete_first_order_stable.to_string(),
            self.cfl_constant
                .map(|c| format!("{:.16e}", c.to_f64_lossy()))
                .unwrap_or_default(),
        ]);
        format!("{}\n{}\n", keys.join(","), vals.join(","))
    }
}

impl<T: Real> DoubleTableau<T> {
    pub fn stages(&self) -> usize {
        self.w.len()
    }

    /// Checks shapes and triangular structure.
    pub fn check_structure(&self) -> Result<()> {
        let s = self.w.len();
        if s == 0 {
            return Err(Error::InvalidTableau("tableau has no stages".into()));
        }
        let square = |m: &Vec<Vec<T>>| m.len() == s && m.iter().all(|r| r.len() == s);
        if !square(&self.a_tilde) || !square(&self.a) {
            return Err(Error::InvalidTableau(format!(
                "matrices must be {s}x{s} to match the weight vectors"
            )));
        }
        if self.c_tilde.len() != s || self.c.len() != s || self.w_tilde.len() != s {
            return Err(Error::InvalidTableau(format!(
                "abscissae and weights must all have length {s}"
            )));
        }
        for i in 0..s {
            for j in i..s {
                if self.a_tilde[i][j] != T::zero() {
                    return Err(Error::InvalidTableau(format!(
                        "explicit matrix entry ({}, {}) must be zero",
                        i + 1,
                        j + 1
                    )));
                }
                if j > i && self.a[i][j] != T::zero() {
                    return Err(Error::InvalidTableau(format!(
                        "implicit matrix entry ({}, {}) above the diagonal must be zero",
                        i + 1,
                        j + 1
                    )));
                }
            }
        }
        if self.padded_rows >= s {
            return Err(Error::InvalidTableau("padding covers every stage".into()));
        }
        Ok(())
    }

    /// Zero-extends the tableau to `n` stages (no-op when already larger).
    pub fn padded_to(&self, n: usize) -> DoubleTableau<T> {
        let s = self.stages();
        if s >= n {
            return self.clone();
        }
        let grow_m = |m: &Vec<Vec<T>>| {
            let mut out = vec![vec![T::zero(); n]; n];
            for (i, row) in m.iter().enumerate() {
                out[i][..s].copy_from_slice(row);
            }
            out
        };
        let grow_v = |v: &Vec<T>| {
            let mut out = v.clone();
            out.resize(n, T::zero());
            out
        };
        DoubleTableau {
            name: self.name.clone(),
            a_tilde: grow_m(&self.a_tilde),
            a: grow_m(&self.a),
            c_tilde: grow_v(&self.c_tilde),
            c: grow_v(&self.c),
            w_tilde: grow_v(&self.w_tilde),
            w: grow_v(&self.w),
            declared_order: self.declared_order,
            padded_rows: self.padded_rows,
        }
    }

    /// Loads a tableau from the labeled plain-text block format.
    ///
    /// Blocks appear in the order `A_TILDE`, `A`, `C_TILDE`, `C`, `W_TILDE`,
    /// `W`; each label sits on its own line and is followed by
    /// whitespace-separated decimals (matrices row-major, one row per line).
    /// Optional header lines `NAME <text>`, `ORDER <p>` and `PADDED <rows>`
    /// may precede the blocks. `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        const BLOCKS: [&str; 6] = ["A_TILDE", "A", "C_TILDE", "C", "W_TILDE", "W"];
        let mut name = String::from("custom");
        let mut declared_order = None;
        let mut padded_rows = 0usize;
        let mut blocks: Vec<(String, Vec<Vec<T>>)> = Vec::new();

        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut toks = line.split_whitespace();
            let head = toks.next().unwrap_or("");
            match head {
                "NAME" => {
                    name = line["NAME".len()..].trim().to_string();
                    continue;
                }
                "ORDER" => {
                    declared_order = Some(parse_usize(toks.next(), lineno)?);
                    continue;
                }
                "PADDED" => {
                    padded_rows = parse_usize(toks.next(), lineno)?;
                    continue;
                }
                _ => {}
            }
            if BLOCKS.contains(&head) {
                if toks.next().is_some() {
                    return Err(Error::TableauParse(format!(
                        "line {}: block label `{head}` must stand alone",
                        lineno + 1
                    )));
                }
                blocks.push((head.to_string(), Vec::new()));
                continue;
            }
            let Some((_, rows)) = blocks.last_mut() else {
                return Err(Error::TableauParse(format!(
                    "line {}: numbers before the first block label",
                    lineno + 1
                )));
            };
            let row = line
                .split_whitespace()
                .map(|tok| {
                    tok.parse::<f64>().map(lit::<T>).map_err(|_| {
                        Error::TableauParse(format!("line {}: `{tok}` is not a number", lineno + 1))
                    })
                })
                .collect::<Result<Vec<T>>>()?;
            rows.push(row);
        }

        let labels: Vec<&str> = blocks.iter().map(|(l, _)| l.as_str()).collect();
        if labels != BLOCKS {
            return Err(Error::TableauParse(format!(
                "expected blocks {BLOCKS:?} in that order, found {labels:?}"
            )));
        }
        let mut it = blocks.into_iter().map(|(_, rows)| rows);
        let a_tilde = it.next().unwrap();
        let a = it.next().unwrap();
        let mut vector = |label: &str| -> Result<Vec<T>> {
            let rows = it.next().unwrap();
            let v: Vec<T> = rows.into_iter().flatten().collect();
            if v.is_empty() {
                return Err(Error::TableauParse(format!("block {label} is empty")));
            }
            Ok(v)
        };
        let c_tilde = vector("C_TILDE")?;
        let c = vector("C")?;
        let w_tilde = vector("W_TILDE")?;
        let w = vector("W")?;
        let t = DoubleTableau {
            name,
            a_tilde,
            a,
            c_tilde,
            c,
            w_tilde,
            w,
            declared_order,
            padded_rows,
        };
        t.check_structure()
            .map_err(|e| Error::TableauParse(e.to_string()))?;
        Ok(t)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    /// Serializes in the format accepted by [`DoubleTableau::parse`].
    pub fn to_text(&self) -> String {
        let mut out = format!("NAME {}\n", self.name);
        if let Some(p) = self.declared_order {
            out.push_str(&format!("ORDER {p}\n"));
        }
        if self.padded_rows > 0 {
            out.push_str(&format!("PADDED {}\n", self.padded_rows));
        }
        let fmt_row = |r: &[T]| {
            r.iter()
                .map(|v| format!("{:.17e}", v.to_f64_lossy()))
                .collect::<Vec<_>>()
                .join(" ")
        };
        for (label, m) in [("A_TILDE", &self.a_tilde), ("A", &self.a)] {
            out.push_str(label);
            out.push('\n');
            for r in m {
                out.push_str(&fmt_row(r));
                out.push('\n');
            }
        }
        for (label, v) in [
            ("C_TILDE", &self.c_tilde),
            ("C", &self.c),
            ("W_TILDE", &self.w_tilde),
            ("W", &self.w),
        ] {
            out.push_str(label);
            out.push('\n');
            out.push_str(&fmt_row(v));
            out.push('\n');
        }
        out
    }
}

fn parse_usize(tok: Option<&str>, lineno: usize) -> Result<usize> {
    tok.and_then(|t| t.parse().ok()).ok_or_else(|| {
        Error::TableauParse(format!("line {}: expected a non-negative integer", lineno + 1))
    })
}

fn m<T: Real>(rows: &[&[f64]]) -> Vec<Vec<T>> {
    rows.iter().map(|r| r.iter().map(|&x| lit(x)).collect()).collect()
}

fn v<T: Real>(xs: &[f64]) -> Vec<T> {
    xs.iter().map(|&x| lit(x)).collect()
}

/// Looks up one of the registered schemes by name (case-insensitive;
/// `RK2CN(2,2,2)` is accepted as an alias of `CN(2,2,2)`).
pub fn builtin_tableau<T: Real>(name: &str) -> Result<DoubleTableau<T>> {
    let key = name.trim().to_ascii_uppercase();
    match key.as_str() {
        "EULER(1,1,1)" | "EULER" => Ok(DoubleTableau {
            name: "Euler(1,1,1)".into(),
            a_tilde: m(&[&[0.0, 0.0], &[1.0, 0.0]]),
            a: m(&[&[0.0, 0.0], &[0.0, 1.0]]),
            c_tilde: v(&[0.0, 1.0]),
            c: v(&[0.0, 1.0]),
            w_tilde: v(&[1.0, 0.0]),
            w: v(&[0.0, 1.0]),
            declared_order: Some(1),
            padded_rows: 1,
        }),
        "JIN(2,2,2)" | "JIN" => Ok(DoubleTableau {
            name: "JIN(2,2,2)".into(),
            a_tilde: m(&[&[0.0, 0.0], &[1.0, 0.0]]),
            a: m(&[&[-1.0, 0.0], &[1.0, 1.0]]),
            c_tilde: v(&[0.0, 1.0]),
            c: v(&[-1.0, 2.0]),
            w_tilde: v(&[0.5, 0.5]),
            w: v(&[0.5, 0.5]),
            declared_order: Some(2),
            padded_rows: 0,
        }),
        "PR(2,2,2)" | "PR" => Ok(pr_tableau(lit(PR_GAMMA_DEFAULT))),
        "ARS(2,2,2)" | "ARS" => {
            let g = 1.0 - std::f64::consts::SQRT_2 / 2.0;
            let d = 1.0 - 1.0 / (2.0 * g);
            Ok(DoubleTableau {
                name: "ARS(2,2,2)".into(),
                a_tilde: m(&[&[0.0, 0.0, 0.0], &[g, 0.0, 0.0], &[d, 1.0 - d, 0.0]]),
                a: m(&[&[0.0, 0.0, 0.0], &[0.0, g, 0.0], &[0.0, 1.0 - g, g]]),
                c_tilde: v(&[0.0, g, 1.0]),
                c: v(&[0.0, g, 1.0]),
                w_tilde: v(&[d, 1.0 - d, 0.0]),
                w: v(&[0.0, 1.0 - g, g]),
                declared_order: Some(2),
                padded_rows: 0,
            })
        }
        // Explicit row 3 is (0, 1, 0): consistent with c_tilde_3 = 1 and
        // equal to the weights, so the explicit half is GSA too.
        "CN(2,2,2)" | "RK2CN(2,2,2)" | "CN" | "RK2CN" => Ok(DoubleTableau {
            name: "CN(2,2,2)".into(),
            a_tilde: m(&[&[0.0, 0.0, 0.0], &[0.5, 0.0, 0.0], &[0.0, 1.0, 0.0]]),
            a: m(&[&[0.0, 0.0, 0.0], &[0.0, 0.5, 0.0], &[0.5, 0.0, 0.5]]),
            c_tilde: v(&[0.0, 0.5, 1.0]),
            c: v(&[0.0, 0.5, 1.0]),
            w_tilde: v(&[0.0, 1.0, 0.0]),
            w: v(&[0.5, 0.0, 0.5]),
            declared_order: Some(2),
            padded_rows: 0,
        }),
        _ => Err(Error::UnknownTableau {
            name: name.to_string(),
            valid: BUILTIN_NAMES.join(", "),
        }),
    }
}

/// PR(2,2,2) with an explicit `gamma_p`; `delta_p = 1 - 1/(2 gamma_p)`.
pub fn pr_tableau<T: Real>(gamma_p: T) -> DoubleTableau<T> {
    let one = T::one();
    let half = lit::<T>(0.5);
    let delta_p = one - one / (lit::<T>(2.0) * gamma_p);
    DoubleTableau {
        name: "PR(2,2,2)".into(),
        a_tilde: vec![vec![T::zero(), T::zero()], vec![one, T::zero()]],
        a: vec![
            vec![one - gamma_p, T::zero()],
            vec![gamma_p - delta_p, delta_p],
        ],
        c_tilde: vec![T::zero(), one],
        c: vec![one - gamma_p, gamma_p],
        w_tilde: vec![half, half],
        w: vec![half, half],
        declared_order: Some(2),
        padded_rows: 0,
    }
}

fn close<T: Real>(a: T, b: T) -> bool {
    (a - b).abs() <= lit(ORDER_TOL)
}

/// Checks consistency and classifies order, GSA and DIRK type.
pub fn validate_tableau<T: Real>(t: &DoubleTableau<T>) -> Result<Classification> {
    t.check_structure()?;
    let s = t.stages();
    for i in 0..s {
        let ct: T = t.a_tilde[i][..i].iter().fold(T::zero(), |acc, &x| acc + x);
        let c: T = t.a[i][..=i].iter().fold(T::zero(), |acc, &x| acc + x);
        if !close(ct, t.c_tilde[i]) {
            return Err(Error::Consistency {
                row: i + 1,
                detail: format!(
                    "c_tilde = {} but explicit row sum = {}",
                    t.c_tilde[i], ct
                ),
            });
        }
        if !close(c, t.c[i]) {
            return Err(Error::Consistency {
                row: i + 1,
                detail: format!("c = {} but implicit row sum = {}", t.c[i], c),
            });
        }
    }

    let sum = |v: &[T]| v.iter().fold(T::zero(), |acc, &x| acc + x);
    let dot = |x: &[T], y: &[T]| x.iter().zip(y).fold(T::zero(), |acc, (&a, &b)| acc + a * b);
    let one = T::one();
    let half = lit::<T>(0.5);
    let first = close(sum(&t.w_tilde), one) && close(sum(&t.w), one);
    let second = first
        && close(dot(&t.w_tilde, &t.c_tilde), half)
        && close(dot(&t.w, &t.c), half)
        && close(dot(&t.w_tilde, &t.c), half)
        && close(dot(&t.w, &t.c_tilde), half);
    let order_achieved = if second {
        2
    } else if first {
        1
    } else {
        0
    };

    let is_gsa = (0..s).all(|j| t.a_tilde[s - 1][j] == t.w_tilde[j] && t.a[s - 1][j] == t.w[j]);

    Ok(Classification {
        order_achieved,
        is_gsa,
        kind: classify_kind(t),
    })
}

fn classify_kind<T: Real>(t: &DoubleTableau<T>) -> TableauKind {
    let p = t.padded_rows;
    let s = t.stages();
    let nonzero = |x: T| x.abs() > lit(ORDER_TOL);
    // Lower-triangular blocks are invertible iff the diagonal is zero-free.
    let block_invertible = |from: usize| (from..s).all(|i| nonzero(t.a[i][i]));
    if block_invertible(p) {
        return TableauKind::TypeA;
    }
    let n = s - p;
    let first_row_zero = (p..s).all(|j| !nonzero(t.a[p][j]));
    if n >= 2 && first_row_zero && block_invertible(p + 1) {
        TableauKind::TypeCK
    } else {
        TableauKind::Neither
    }
}

/// Evaluates the `b2`, `b3`, `b4` stability coefficients.
///
/// `b3` and `b4` are evaluated literally on the tableau zero-padded to three
/// stages. `b2` uses the full stage sums `sum w_tilde c_tilde - 1/2`,
/// `sum (w_tilde c + w c_tilde) - 1`, `sum w c - 1/2`, which coincide with the
/// two-stage expressions whenever `c_tilde_1 = 0`.
pub fn stability_coeffs<T: Real>(t: &DoubleTableau<T>) -> Result<StabilityCoefficients<T>> {
    t.check_structure()?;
    if t.stages() > 3 {
        return Err(Error::InvalidTableau(format!(
            "stability coefficients are defined for at most 3 stages, got {}",
            t.stages()
        )));
    }
    let half = lit::<T>(0.5);
    let sixth = lit::<T>(1.0 / 6.0);
    let dot = |x: &[T], y: &[T]| x.iter().zip(y).fold(T::zero(), |acc, (&a, &b)| acc + a * b);
    let b2 = [
        dot(&t.w_tilde, &t.c_tilde) - half,
        dot(&t.w_tilde, &t.c) + dot(&t.w, &t.c_tilde) - T::one(),
        dot(&t.w, &t.c) - half,
    ];

    let p = t.padded_to(3);
    // One-based accessors mirroring the coefficient formulas.
    let at = |i: usize, j: usize| p.a_tilde[i - 1][j - 1];
    let a = |i: usize, j: usize| p.a[i - 1][j - 1];
    let ct = |i: usize| p.c_tilde[i - 1];
    let c = |i: usize| p.c[i - 1];
    let wt = |i: usize| p.w_tilde[i - 1];
    let w = |i: usize| p.w[i - 1];
    let sum = |r: std::ops::RangeInclusive<usize>, f: &dyn Fn(usize) -> T| {
        r.fold(T::zero(), |acc, k| acc + f(k))
    };

    let diag2 = a(1, 1) + a(2, 2);
    let diag3 = diag2 + a(3, 3);
    let mixed3 = sum(1..=3, &|j| at(3, j) * c(j) + a(3, j) * ct(j));
    // sum_{i<=j} a_{j,i} c_i, i.e. (A c)_j
    let ac = |j: usize| sum(1..=j, &|i| a(j, i) * c(i));

    let b3 = [
        half - (wt(2) * ct(2) * diag2 + wt(3) * mixed3 + w(3) * ct(2) * at(3, 2)),
        sixth - wt(3) * ct(2) * at(3, 2),
        half - (sum(1..=3, &|i| wt(i) * ac(i)) + w(2) * ct(2) * diag2 + w(3) * mixed3),
        sixth - sum(1..=3, &|i| w(i) * sum(1..=3, &|j| a(i, j) * c(j))),
    ];

    let b4_1 = wt(2) * ct(2) * (a(1, 1) * diag2 + a(2, 2) * a(2, 2))
        + wt(3)
            * (sum(1..=2, &|j| at(3, j) * sum(1..=j, &|i| c(i) * a(j, i)))
                + a(3, 2) * ct(2) * diag2
                + a(3, 3) * sum(1..=2, &|i| at(3, i) * c(i))
                + sum(2..=3, &|j| a(3, j) * ct(j)))
        + w(3) * at(3, 2) * ct(2) * diag3
        - lit(0.25);
    let b4_2 = wt(3) * at(3, 2) * at(2, 1) * diag3 - sixth;
    let b4_3 = sum(1..=3, &|k| wt(k) * sum(1..=k, &|j| a(k, j) * ac(j)))
        + sum(2..=3, &|k| w(k) * sum(1..=k - 1, &|j| at(k, j) * ac(j)))
        + sum(2..=3, &|k| w(k) * at(2, 1) * a(k, 2) * diag2)
        + w(3) * a(3, 3) * sum(1..=2, &|j| at(3, j) * c(j) + a(3, j + 1) * ct(j + 1))
        - sixth;
    let b4_4 = sum(1..=3, &|k| w(k) * sum(1..=k, &|j| a(k, j) * ac(j))) - lit(1.0 / 24.0);

    Ok(StabilityCoefficients {
        b2,
        b3,
        b4: [b4_1, b4_2, b4_3, b4_4],
    })
}

/// Evaluates the semi-discrete (`b4 < 0`) and fully-discrete first-order
/// (`b2_1 < 0 < b2_3`) stability predicates for a background velocity and
/// mesh spacing.
pub fn predict_stability<T: Real>(
    t: &DoubleTableau<T>,
    background_velocity: [T; 2],
    dx: [T; 2],
) -> Result<StabilityPrediction<T>> {
    if !(dx[0] > T::zero() && dx[1] > T::zero()) {
        return Err(Error::InvalidParameter(format!(
            "mesh spacings must be positive, got ({}, {})",
            dx[0], dx[1]
        )));
    }
    let coefficients = stability_coeffs(t)?;
    let b2 = coefficients.b2;
    let semi_discrete_stable = coefficients.b4.iter().all(|&b| b < T::zero());
    let fully = b2[0] < T::zero() && b2[2] > T::zero();
    let [u1, u2] = background_velocity;
    let norm2 = u1 * u1 + u2 * u2;
    let cfl_constant = if fully && norm2 > T::zero() {
        Some(-b2[0] * u1.abs().min(u2.abs()) / norm2 * dx[0].min(dx[1]))
    } else {
        None
    };
    Ok(StabilityPrediction {
        coefficients,
        semi_discrete_stable,
        fully_discrete_first_order_stable: fully,
        cfl_constant,
    })
}

/// Full report: classification plus stability coefficients and predicates.
pub fn certify<T: Real>(
    t: &DoubleTableau<T>,
    background_velocity: [T; 2],
    dx: [T; 2],
) -> Result<TableauReport<T>> {
    let cls = validate_tableau(t)?;
    let pred = predict_stability(t, background_velocity, dx)?;
    Ok(TableauReport {
        name: t.name.clone(),
        order_achieved: cls.order_achieved,
        is_gsa: cls.is_gsa,
        kind: cls.kind,
        b2: pred.coefficients.b2,
        b3: pred.coefficients.b3,
        b4: pred.coefficients.b4,
        semi_discrete_stable: pred.semi_discrete_stable,
        fully_discrete_first_order_stable: pred.fully_discrete_first_order_stable,
        cfl_constant: pred.cfl_constant,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(name: &str) -> DoubleTableau<f64> {
        builtin_tableau(name).unwrap()
    }

    #[test]
    fn euler_entries_are_exact() {
        let e = t("Euler(1,1,1)");
        assert_eq!(e.w_tilde, vec![1.0, 0.0]);
        assert_eq!(e.w, vec![0.0, 1.0]);
        assert_eq!(e.c_tilde, vec![0.0, 1.0]);
        assert_eq!(e.c, vec![0.0, 1.0]);
    }

    #[test]
    fn ars_constants() {
        let a = t("ARS(2,2,2)");
        let g = a.a[1][1];
        let d = a.a_tilde[2][0];
        assert!((g - 0.29289321881).abs() < 1e-10);
        assert!((d + std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-10);
        assert_eq!(a.w_tilde, vec![d, 1.0 - d, 0.0]);
        assert_eq!(a.a[2], vec![0.0, 1.0 - g, g]);
    }

    #[test]
    fn unknown_name_lists_valid_names() {
        let err = builtin_tableau::<f64>("XYZ").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("unknown tableau"));
        assert!(msg.contains("ARS(2,2,2)"));
    }

    #[test]
    fn rk2cn_alias() {
        assert_eq!(t("RK2CN(2,2,2)"), t("CN(2,2,2)"));
    }

    #[test]
    fn classifications() {
        let ars = validate_tableau(&t("ARS(2,2,2)")).unwrap();
        assert_eq!(ars.order_achieved, 2);
        assert!(ars.is_gsa);
        assert_eq!(ars.kind, TableauKind::TypeCK);

        let eu = validate_tableau(&t("Euler(1,1,1)")).unwrap();
        assert_eq!(eu.order_achieved, 1);
        assert!(eu.is_gsa);
        assert_eq!(eu.kind, TableauKind::TypeA);

        let jin = validate_tableau(&t("JIN(2,2,2)")).unwrap();
        assert_eq!((jin.order_achieved, jin.is_gsa, jin.kind), (2, false, TableauKind::TypeA));
        let pr = validate_tableau(&t("PR(2,2,2)")).unwrap();
        assert_eq!((pr.order_achieved, pr.is_gsa, pr.kind), (2, false, TableauKind::TypeA));
        let cn = validate_tableau(&t("CN(2,2,2)")).unwrap();
        assert_eq!((cn.order_achieved, cn.is_gsa, cn.kind), (2, true, TableauKind::TypeCK));
    }

    #[test]
    fn every_builtin_reaches_declared_order() {
        for name in BUILTIN_NAMES {
            let tab = t(name);
            let cls = validate_tableau(&tab).unwrap();
            assert_eq!(Some(cls.order_achieved), tab.declared_order, "{name}");
        }
    }

    #[test]
    fn perturbed_weights_drop_to_order_zero() {
        let mut a = t("ARS(2,2,2)");
        let d = a.a_tilde[2][0];
        a.w_tilde = vec![d + 0.1, 1.0 - d, 0.0];
        assert_eq!(validate_tableau(&a).unwrap().order_achieved, 0);
    }

    #[test]
    fn consistency_violation_names_row() {
        let mut a = t("ARS(2,2,2)");
        a.c[2] = 0.9;
        match validate_tableau(&a) {
            Err(Error::Consistency { row, .. }) => assert_eq!(row, 3),
            other => panic!("expected consistency error, got {other:?}"),
        }
    }

    #[test]
    fn structure_errors() {
        let mut a = t("ARS(2,2,2)");
        a.a_tilde[0][0] = 0.5;
        assert!(matches!(validate_tableau(&a), Err(Error::InvalidTableau(_))));
        let mut b = t("ARS(2,2,2)");
        b.a[0][2] = 0.5;
        assert!(matches!(validate_tableau(&b), Err(Error::InvalidTableau(_))));
    }

    #[test]
    fn euler_b2_pattern() {
        let c = stability_coeffs(&t("Euler(1,1,1)")).unwrap();
        assert_eq!(c.b2, [-0.5, 0.0, 0.5]);
    }

    #[test]
    fn second_order_b2_vanishes() {
        for name in ["JIN(2,2,2)", "PR(2,2,2)", "ARS(2,2,2)", "CN(2,2,2)"] {
            let c = stability_coeffs(&t(name)).unwrap();
            for b in c.b2 {
                assert!(b.abs() < 1e-12, "{name}: {b}");
            }
        }
    }

    #[test]
    fn b_coefficients_are_pure() {
        let a = t("ARS(2,2,2)");
        assert_eq!(stability_coeffs(&a).unwrap(), stability_coeffs(&a).unwrap());
    }

    #[test]
    fn b4_frozen_values() {
        // Independent hand evaluation of b4_2 and b4_4 for ARS:
        // b4_2 = wt3*at32*at21*(g+g) - 1/6 = 0 - 1/6 (wt3 = 0)
        // b4_4 = w^T A^2 c - 1/24 = g^3 (4 - 3g) - 1/24
        let a = t("ARS(2,2,2)");
        let g = 1.0 - std::f64::consts::SQRT_2 / 2.0;
        let c = stability_coeffs(&a).unwrap();
        assert!((c.b4[1] + 1.0 / 6.0).abs() < 1e-14);
        assert!((c.b4[3] - (g.powi(3) * (4.0 - 3.0 * g) - 1.0 / 24.0)).abs() < 1e-14);
        // JIN: w^T A^2 c = 1/2 (A c = (1, 1), A^2 c = (-1, 2))
        let j = stability_coeffs(&t("JIN(2,2,2)")).unwrap();
        assert!((j.b4[3] - (0.5 - 1.0 / 24.0)).abs() < 1e-14);
    }

    #[test]
    fn euler_cfl_constant() {
        let p = predict_stability(&t("Euler(1,1,1)"), [1.0, 1.0], [0.1, 0.1]).unwrap();
        assert!(p.fully_discrete_first_order_stable);
        assert!((p.cfl_constant.unwrap() - 0.025).abs() < 1e-15);
    }

    #[test]
    fn zero_velocity_gives_absent_bound() {
        let p = predict_stability(&t("Euler(1,1,1)"), [0.0, 0.0], [0.1, 0.1]).unwrap();
        assert!(p.cfl_constant.is_none());
    }

    #[test]
    fn nonpositive_dx_rejected() {
        assert!(predict_stability(&t("Euler(1,1,1)"), [1.0, 1.0], [0.0, 0.1]).is_err());
    }

    #[test]
    fn padding_preserves_sums() {
        let e = t("JIN(2,2,2)");
        let p = e.padded_to(3);
        assert_eq!(p.stages(), 3);
        assert_eq!(validate_tableau(&p).unwrap().order_achieved, 2);
    }

    #[test]
    fn text_format_roundtrip() {
        for name in BUILTIN_NAMES {
            let tab = t(name);
            let back = DoubleTableau::<f64>::parse(&tab.to_text()).unwrap();
            assert_eq!(back, tab, "{name}");
        }
    }

    #[test]
    fn parse_rejects_malformed() {
        assert!(DoubleTableau::<f64>::parse("A_TILDE\n0 0\nA\n0 x\n").is_err());
        assert!(DoubleTableau::<f64>::parse("A\n1\nA_TILDE\n0\nC_TILDE\n0\nC\n1\nW_TILDE\n1\nW\n1\n").is_err());
        assert!(DoubleTableau::<f64>::parse("0 1\n").is_err());
    }

    #[test]
    fn parse_minimal_backward_euler() {
        let text = "NAME BE\nA_TILDE\n0\nA\n1\nC_TILDE\n0\nC\n1\nW_TILDE\n1\nW\n1\n";
        let tab = DoubleTableau::<f64>::parse(text).unwrap();
        let cls = validate_tableau(&tab).unwrap();
        assert_eq!(cls.order_achieved, 1);
        assert_eq!(cls.kind, TableauKind::TypeA);
    }

    #[test]
    fn f32_builtins_validate() {
        let a = builtin_tableau::<f32>("ARS(2,2,2)").unwrap();
        assert!(a.check_structure().is_ok());
    }
}
