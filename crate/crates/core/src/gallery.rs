//! Named example modules with their certified checks.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt::{self, Write as _};
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::cocycle::{twisted_scalar_model, StepFn};
use crate::cuntz::{
    compression_check, dilation_relation_residual, evaluate, nekrashevych, u_beta, CuntzModule,
};
use crate::error::{Error, Result};
use crate::exec::{self, Strategy};
use crate::opalg::{
    c, check_pythagorean, dense_module_from_json, CVec, Label, PythModule, SparseOp, C64,
};
use crate::rep::{act, coefficient_pathsum, vacuum_coefficient, LimitVec};
use crate::rotation::{
    empirical_rotation_limit, rotation_coefficient, solve_commuting_limit, x1, xj, RotationOpts,
};
use crate::thompson::{
    distance, enumerate_ball, g0, parse_element, Decoration, Flavor, FracElement,
};
use crate::trees::{enumerate_trees, full_tree, parse_tree, Forest, LeafAddress, Q};

/// Sizes of the finite group balls the checks run on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct BallConfig {
    pub f_leaves: usize,
    /// Ball for the exhaustive 1/3-stabiliser scan.
    pub car_leaves: usize,
    pub t_leaves: usize,
    pub ternary_leaves: usize,
    pub rotation_n: usize,
}

impl Default for BallConfig {
    fn default() -> Self {
        BallConfig {
            f_leaves: 6,
            car_leaves: 7,
            t_leaves: 5,
            ternary_leaves: 5,
            rotation_n: 10,
        }
    }
}

impl BallConfig {
    pub fn reduced() -> Self {
        BallConfig {
            f_leaves: 3,
            car_leaves: 3,
            t_leaves: 3,
            ternary_leaves: 3,
            rotation_n: 10,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckResult {
    pub id: String,
    pub anchor: String,
    pub expected: String,
    pub got: String,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExampleReport {
    pub preset: String,
    pub params: String,
    pub checks: Vec<CheckResult>,
    /// Diagnostics that are reported but not asserted.
    pub notes: Vec<String>,
}

impl ExampleReport {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteReport {
    pub config: BallConfig,
    pub presets: Vec<ExampleReport>,
}

impl SuiteReport {
    pub fn pass(&self) -> bool {
        self.presets.iter().all(|p| p.pass())
    }

    pub fn failures(&self) -> usize {
        self.presets
            .iter()
            .flat_map(|p| &p.checks)
            .filter(|c| !c.pass)
            .count()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn table(&self) -> String {
        let mut out = String::new();
        for p in &self.presets {
            out.push_str(&report_table(p));
        }
        let total: usize = self.presets.iter().map(|p| p.checks.len()).sum();
        let _ = writeln!(out, "{} checks, {} failed", total, self.failures());
        out
    }

    /// One row per check: `preset,check,pass,expected,got,tolerance,anchor`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("preset,check,pass,expected,got,tolerance,anchor\n");
        for p in &self.presets {
            for ch in &p.checks {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{:e},{}",
                    p.preset,
                    ch.id,
                    ch.pass,
                    csv_field(&ch.expected),
                    csv_field(&ch.got),
                    ch.tolerance,
                    csv_field(&ch.anchor)
                );
            }
        }
        out
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn report_table(p: &ExampleReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "== {} {}", p.preset, p.params);
    for ch in &p.checks {
        let _ = writeln!(
            out,
            "  [{}] {:<28} expected {}  got {}  (tol {:e})\n         {}",
            if ch.pass { "PASS" } else { "FAIL" },
            ch.id,
            ch.expected,
            ch.got,
            ch.tolerance,
            ch.anchor
        );
    }
    for n in &p.notes {
        let _ = writeln!(out, "  note: {n}");
    }
    out
}

pub fn fmt_c(z: C64) -> String {
    format!("{:.12}{:+.12}i", z.re, z.im)
}

fn num_check(id: &str, anchor: &str, expected: C64, got: C64, tol: f64) -> CheckResult {
    CheckResult {
        id: id.into(),
        anchor: anchor.into(),
        expected: fmt_c(expected),
        got: fmt_c(got),
        tolerance: tol,
        pass: (expected - got).norm() <= tol,
    }
}

fn real_check(id: &str, anchor: &str, expected: f64, got: f64, tol: f64) -> CheckResult {
    CheckResult {
        id: id.into(),
        anchor: anchor.into(),
        expected: format!("{expected:.6e}"),
        got: format!("{:.6e}", if got == 0.0 { 0.0 } else { got }),
        tolerance: tol,
        pass: (expected - got).abs() <= tol,
    }
}

fn bound_check(id: &str, anchor: &str, bound: f64, got: f64, tol: f64) -> CheckResult {
    CheckResult {
        id: id.into(),
        anchor: anchor.into(),
        expected: format!("<= {bound:.12}"),
        got: format!("{got:.12}"),
        tolerance: tol,
        pass: got <= bound + tol,
    }
}

fn count_check(id: &str, anchor: &str, mismatches: usize, scanned: usize) -> CheckResult {
    CheckResult {
        id: id.into(),
        anchor: anchor.into(),
        expected: format!("0 mismatches of {scanned}"),
        got: format!("{mismatches} mismatches of {scanned}"),
        tolerance: 0.0,
        pass: mismatches == 0,
    }
}

fn q_f64(q: Q) -> f64 {
    *q.numer() as f64 / *q.denom() as f64
}

fn scalar_dense(name: &str, members: &[C64], vacuum: &[C64]) -> Result<PythModule> {
    PythModule::dense(
        name,
        members
            .iter()
            .map(|&a| DMatrix::from_element(1, 1, a))
            .collect(),
        DVector::from_column_slice(vacuum),
    )
}

fn real_matrix(rows: usize, entries: &[f64]) -> DMatrix<C64> {
    DMatrix::from_row_iterator(rows, rows, entries.iter().map(|&x| c(x, 0.0)))
}

pub fn trivial_module() -> PythModule {
    scalar_dense("trivial", &[c(1.0, 0.0), c(0.0, 0.0)], &[c(1.0, 0.0)]).expect("valid")
}

pub fn lebesgue_module() -> PythModule {
    let h = c(FRAC_1_SQRT_2, 0.0);
    scalar_dense("lebesgue", &[h, h], &[c(1.0, 0.0)]).expect("valid")
}

pub fn scalar_module(theta: f64) -> PythModule {
    scalar_dense(
        "scalar",
        &[c(theta.cos(), 0.0), c(theta.sin(), 0.0)],
        &[c(1.0, 0.0)],
    )
    .expect("valid")
}

pub fn complex_scalar_module(a: C64, b: C64) -> Result<PythModule> {
    if (a.norm_sqr() + b.norm_sqr() - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidParams(format!(
            "|a|^2 + |b|^2 must be 1, got {}",
            a.norm_sqr() + b.norm_sqr()
        )));
    }
    scalar_dense("complex-scalar", &[a, b], &[c(1.0, 0.0)])
}

fn word_of(l: &Label) -> &[i8] {
    match l {
        Label::Word(w) => w,
        _ => panic!("free group module has word labels"),
    }
}

/// Left multiplication by the letter `x` on reduced words.
fn left_mul(x: i8, w: &[i8]) -> Vec<i8> {
    if w.first() == Some(&-x) {
        w[1..].to_vec()
    } else {
        let mut v = Vec::with_capacity(w.len() + 1);
        v.push(x);
        v.extend_from_slice(w);
        v
    }
}

/// `l^2` of the free group on `a, b` with `A = lambda(a) / sqrt 2`,
/// `B = lambda(b) / sqrt 2`, vacuum `delta_e`.
pub fn free_group_module() -> PythModule {
    let ops = [1i8, 2]
        .into_iter()
        .map(|g| {
            SparseOp::new(
                if g == 1 {
                    "lambda(a)/sqrt2"
                } else {
                    "lambda(b)/sqrt2"
                },
                move |l: &Label| {
                    vec![(Label::Word(left_mul(g, word_of(l))), c(FRAC_1_SQRT_2, 0.0))]
                },
                move |l: &Label| {
                    vec![(Label::Word(left_mul(-g, word_of(l))), c(FRAC_1_SQRT_2, 0.0))]
                },
            )
        })
        .collect();
    PythModule::sparse("free-group", ops, CVec::delta(Label::Word(vec![]))).expect("valid")
}

/// `A = a`, `B = a*` with `a e_2 = e_1`, vacuum `e_2`.
pub fn car_module() -> PythModule {
    let a = real_matrix(2, &[0.0, 1.0, 0.0, 0.0]);
    let astar = a.adjoint();
    PythModule::dense(
        "car",
        vec![a, astar],
        DVector::from_column_slice(&[c(0.0, 0.0), c(1.0, 0.0)]),
    )
    .expect("valid")
}

/// The CAR module on the labels `0, 1` through the sparse backend.
pub fn car_sparse_module() -> PythModule {
    let hop = |from: i64, to: i64| {
        move |l: &Label| {
            if *l == Label::Int(from) {
                vec![(Label::Int(to), c(1.0, 0.0))]
            } else {
                vec![]
            }
        }
    };
    let ops = vec![
        SparseOp::new("a", hop(1, 0), hop(0, 1)),
        SparseOp::new("a*", hop(0, 1), hop(1, 0)),
    ];
    PythModule::sparse("car-sparse", ops, CVec::delta(Label::Int(1))).expect("valid")
}

/// An eventually periodic binary digit stream `prefix (period)^infinity`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DigitStream {
    pub prefix: Vec<u8>,
    pub period: Vec<u8>,
}

impl DigitStream {
    /// Parses `"1(01)"`, `"(0)"` and similar.
    pub fn parse(s: &str) -> Result<DigitStream> {
        let bad = || {
            Error::InvalidParams(format!(
                "digit stream '{s}' is not of the form prefix(period)"
            ))
        };
        let open = s.find('(').ok_or_else(bad)?;
        if !s.ends_with(')') {
            return Err(bad());
        }
        let digits = |t: &str| -> Result<Vec<u8>> {
            t.chars()
                .map(|ch| match ch {
                    '0' => Ok(0),
                    '1' => Ok(1),
                    _ => Err(bad()),
                })
                .collect()
        };
        let prefix = digits(&s[..open])?;
        let period = digits(&s[open + 1..s.len() - 1])?;
        if period.is_empty() || prefix.len() + period.len() > 60 {
            return Err(bad());
        }
        Ok(DigitStream { prefix, period })
    }

    pub fn digit(&self, k: usize) -> u8 {
        if k < self.prefix.len() {
            self.prefix[k]
        } else {
            self.period[(k - self.prefix.len()) % self.period.len()]
        }
    }

    /// The point of `[0, 1]` with this binary expansion.
    pub fn value(&self) -> Q {
        let bits = |d: &[u8]| d.iter().fold(0i128, |acc, &b| 2 * acc + b as i128);
        let p = self.period.len() as u32;
        let k = self.prefix.len() as u32;
        let per = Q::new(bits(&self.period), (1i128 << p) - 1);
        (Q::from(bits(&self.prefix)) + per) / Q::from(1i128 << k)
    }

    pub fn is_prefix(&self, addr: &LeafAddress) -> bool {
        addr.digits
            .iter()
            .enumerate()
            .all(|(k, &d)| d == self.digit(k))
    }
}

impl fmt::Display for DigitStream {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for d in &self.prefix {
            write!(f, "{d}")?;
        }
        write!(f, "(")?;
        for d in &self.period {
            write!(f, "{d}")?;
        }
        write!(f, ")")
    }
}

fn nat_label(l: &Label) -> i64 {
    match l {
        Label::Int(k) => *k,
        _ => panic!("ray module has integer labels"),
    }
}

/// `l^2(N)` along the ray of `x`: the member indexed by `d_k` moves
/// `delta_k` to `delta_{k+1}`, the other kills it.
pub fn ray_module(digits: &DigitStream) -> PythModule {
    let ops = (0..2u8)
        .map(|bit| {
            let fwd = digits.clone();
            let adj = digits.clone();
            SparseOp::new(
                if bit == 0 { "A" } else { "B" },
                move |l: &Label| {
                    let k = nat_label(l);
                    if k >= 0 && fwd.digit(k as usize) == bit {
                        vec![(Label::Int(k + 1), c(1.0, 0.0))]
                    } else {
                        vec![]
                    }
                },
                move |l: &Label| {
                    let k = nat_label(l);
                    if k >= 1 && adj.digit(k as usize - 1) == bit {
                        vec![(Label::Int(k - 1), c(1.0, 0.0))]
                    } else {
                        vec![]
                    }
                },
            )
        })
        .collect();
    PythModule::sparse("ray", ops, CVec::delta(Label::Int(0))).expect("valid")
}

pub const PROJECTIONS_ANGLE: f64 = 0.7;

pub fn projections_module() -> PythModule {
    let p = real_matrix(2, &[1.0, 0.0, 0.0, 0.0]);
    let q = real_matrix(2, &[0.0, 0.0, 0.0, 1.0]);
    let v = [
        c(PROJECTIONS_ANGLE.cos(), 0.0),
        c(PROJECTIONS_ANGLE.sin(), 0.0),
    ];
    PythModule::dense("projections", vec![p, q], DVector::from_column_slice(&v)).expect("valid")
}

pub fn cantor_module() -> PythModule {
    let h = c(FRAC_1_SQRT_2, 0.0);
    scalar_dense("cantor", &[h, c(0.0, 0.0), h], &[c(1.0, 0.0)]).expect("valid")
}

/// Unit vectors at angles `0, -pi/3, pi/3` (as lines, pairwise at 60 degrees).
pub fn triple_vectors() -> [DVector<C64>; 3] {
    let s = 3f64.sqrt() / 2.0;
    [
        DVector::from_column_slice(&[c(1.0, 0.0), c(0.0, 0.0)]),
        DVector::from_column_slice(&[c(0.5, 0.0), c(-s, 0.0)]),
        DVector::from_column_slice(&[c(0.5, 0.0), c(s, 0.0)]),
    ]
}

pub fn triple_projections() -> [DMatrix<C64>; 3] {
    triple_vectors().map(|v| &v * v.adjoint())
}

/// `A_i = sqrt(2/3) p_i` with vacuum `xi_1`, or `(0, 1)` when `perp`.
pub fn triple_projections_module(perp: bool) -> PythModule {
    let k = c((2.0f64 / 3.0).sqrt(), 0.0);
    let ms = triple_projections().map(|p| p * k).to_vec();
    let vac = if perp {
        DVector::from_column_slice(&[c(0.0, 0.0), c(1.0, 0.0)])
    } else {
        triple_vectors()[0].clone()
    };
    PythModule::dense(
        if perp {
            "triple-projections:perp"
        } else {
            "triple-projections"
        },
        ms,
        vac,
    )
    .expect("valid")
}

/// The ternary element fixing `(0, 1)` in the triple-projection module.
pub const TRIPLE_FIXER: &str = "(((...)..)..)/((.(...).)..)";

/// `A delta_n = delta_{n+1} / sqrt 2`, `B delta_n = lambda^n delta_n / sqrt 2` on `l^2(Z)`.
pub fn connes_landi_module(lambda: C64) -> Result<PythModule> {
    if (lambda.norm() - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidParams(format!(
            "lambda must lie on the unit circle, |lambda| = {}",
            lambda.norm()
        )));
    }
    let lambda = lambda / lambda.norm();
    let h = c(FRAC_1_SQRT_2, 0.0);
    let shift = SparseOp::new(
        "shift/sqrt2",
        move |l: &Label| vec![(Label::Int(nat_label(l) + 1), h)],
        move |l: &Label| vec![(Label::Int(nat_label(l) - 1), h)],
    );
    let diag = SparseOp::new(
        "diag/sqrt2",
        move |l: &Label| {
            let n = nat_label(l);
            vec![(l.clone(), lambda.powi(n as i32) * h)]
        },
        move |l: &Label| {
            let n = nat_label(l);
            vec![(l.clone(), lambda.powi(n as i32).conj() * h)]
        },
    );
    PythModule::sparse(
        "connes-landi",
        vec![shift, diag],
        CVec::delta(Label::Int(0)),
    )
}

/// `g_n`: the full tree `t_n` with `((..).)` grafted on every leaf over
/// `t_n` with `(.(..))` grafted on every leaf.
pub fn weak_limit_element(n: usize) -> Result<FracElement> {
    let t = full_tree(n, 2);
    let a = parse_tree("((..).)", 2)?;
    let b = parse_tree("(.(..))", 2)?;
    let k = t.leaves();
    let top = t.graft(&Forest::new(2, vec![a; k])?)?;
    let bottom = t.graft(&Forest::new(2, vec![b; k])?)?;
    FracElement::new(top, bottom, Decoration::None)
}

/// Parses `a+bi`, `a-bi`, `a`, `bi`, `i`.
pub fn parse_complex(s: &str) -> Result<C64> {
    let bad = || Error::InvalidParams(format!("cannot parse complex number '{s}'"));
    let s = s.trim();
    if s.is_empty() {
        return Err(bad());
    }
    let Some(body) = s.strip_suffix('i') else {
        return s.parse::<f64>().map(|x| c(x, 0.0)).map_err(|_| bad());
    };
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let imag = |t: &str| -> Result<f64> {
        match t {
            "" | "+" => Ok(1.0),
            "-" => Ok(-1.0),
            _ => t.parse::<f64>().map_err(|_| bad()),
        }
    };
    match split {
        Some(k) => Ok(c(
            body[..k].parse::<f64>().map_err(|_| bad())?,
            imag(&body[k..])?,
        )),
        None => Ok(c(0.0, imag(body)?)),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Preset {
    Trivial,
    Lebesgue,
    Twisted(C64),
    Scalar(f64),
    ComplexScalar(C64, C64),
    FreeGroup,
    Car,
    Ray(DigitStream),
    Projections,
    Cantor,
    TripleProjections,
    ConnesLandi(C64),
}

pub const PRESET_IDS: &[&str] = &[
    "trivial",
    "lebesgue",
    "twisted",
    "scalar",
    "complex-scalar",
    "free-group",
    "car",
    "ray",
    "projections",
    "cantor",
    "triple-projections",
    "connes-landi",
];

#[derive(Clone, Debug)]
pub struct ExampleSpec {
    pub id: String,
    pub preset: Preset,
    pub module: Arc<PythModule>,
}

fn default_twist() -> C64 {
    c(0.6, 0.8)
}

fn two_params(p: &str) -> Result<(C64, C64)> {
    let (a, b) = p
        .split_once(',')
        .ok_or_else(|| Error::InvalidParams(format!("expected 'a,b', got '{p}'")))?;
    Ok((parse_complex(a)?, parse_complex(b)?))
}

fn parse_f64(p: &str) -> Result<f64> {
    p.trim()
        .parse()
        .map_err(|_| Error::InvalidParams(format!("expected a real number, got '{p}'")))
}

/// Builds a preset; `params` is the text after the colon of a selector.
pub fn preset(id: &str, params: Option<&str>) -> Result<ExampleSpec> {
    let p = params.map(str::trim).filter(|s| !s.is_empty());
    let (preset, module) = match id {
        "trivial" => (Preset::Trivial, trivial_module()),
        "lebesgue" => (Preset::Lebesgue, lebesgue_module()),
        "twisted" => {
            let ph = p
                .map(parse_complex)
                .transpose()?
                .unwrap_or_else(default_twist);
            let tm = twisted_scalar_model(ph)?;
            (Preset::Twisted(ph), (*tm.module).clone())
        }
        "scalar" => {
            let th = p.map(parse_f64).transpose()?.unwrap_or(0.3);
            (Preset::Scalar(th), scalar_module(th))
        }
        "complex-scalar" => {
            let (a, b) = p
                .map(two_params)
                .transpose()?
                .unwrap_or((c(0.96, 0.0), c(0.168, 0.224)));
            (Preset::ComplexScalar(a, b), complex_scalar_module(a, b)?)
        }
        "free-group" => (Preset::FreeGroup, free_group_module()),
        "car" => (Preset::Car, car_module()),
        "ray" => {
            let d = DigitStream::parse(p.unwrap_or("(01)"))?;
            let m = ray_module(&d);
            (Preset::Ray(d), m)
        }
        "projections" => (Preset::Projections, projections_module()),
        "cantor" => (Preset::Cantor, cantor_module()),
        "triple-projections" => (Preset::TripleProjections, triple_projections_module(false)),
        "connes-landi" => {
            let l = p.map(parse_complex).transpose()?.unwrap_or(c(1.0, 0.0));
            (Preset::ConnesLandi(l), connes_landi_module(l)?)
        }
        _ => {
            return Err(Error::UnknownPreset {
                id: id.into(),
                valid: PRESET_IDS.join(", "),
            })
        }
    };
    Ok(ExampleSpec {
        id: id.into(),
        preset,
        module: Arc::new(module),
    })
}

/// Every preset with its default parameters.
pub fn all_presets() -> Vec<ExampleSpec> {
    PRESET_IDS
        .iter()
        .map(|id| preset(id, None).expect("defaults are valid"))
        .collect()
}

/// Valid module selector ids, including modules that are not presets.
pub const SELECTOR_IDS: &[&str] = &[
    "trivial",
    "lebesgue",
    "twisted[:phase]",
    "scalar[:theta]",
    "complex-scalar[:a,b]",
    "free-group",
    "car",
    "car-sparse",
    "ray[:prefix(period)]",
    "projections",
    "cantor",
    "triple-projections[:perp]",
    "connes-landi[:lambda]",
    "interleave",
    "file:<path.json>",
];

/// Resolves a selector such as `scalar:0.3` or `connes-landi:0.5+0.866i`.
pub fn module_from_selector(sel: &str) -> Result<Arc<PythModule>> {
    let (id, params) = match sel.split_once(':') {
        Some((a, b)) => (a, Some(b)),
        None => (sel, None),
    };
    match id {
        "car-sparse" => Ok(Arc::new(car_sparse_module())),
        "interleave" => Ok(Arc::new(crate::cuntz::interleave_cuntz_module())),
        "triple-projections" => match params {
            None => Ok(Arc::new(triple_projections_module(false))),
            Some("perp") => Ok(Arc::new(triple_projections_module(true))),
            Some(p) => Err(Error::InvalidParams(format!(
                "unknown triple-projections option '{p}'"
            ))),
        },
        "file" => {
            let path = params.ok_or_else(|| Error::InvalidParams("file: needs a path".into()))?;
            let text =
                std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{path}: {e}")))?;
            Ok(Arc::new(dense_module_from_json(&text)?))
        }
        _ => match preset(id, params) {
            Err(Error::UnknownPreset { id, .. }) => Err(Error::UnknownPreset {
                id,
                valid: SELECTOR_IDS.join(", "),
            }),
            other => other.map(|s| s.module),
        },
    }
}

/// Modules used by the representation-wide property checks: every preset
/// plus the sparse CAR, the perpendicular-vacuum projections, a second
/// Connes-Landi parameter and the interleaved Cuntz model.
pub fn gallery_modules() -> Vec<(String, Arc<PythModule>)> {
    let mut out: Vec<(String, Arc<PythModule>)> = all_presets()
        .into_iter()
        .map(|s| (s.id, s.module))
        .collect();
    out.push(("car-sparse".into(), Arc::new(car_sparse_module())));
    out.push((
        "triple-projections:perp".into(),
        Arc::new(triple_projections_module(true)),
    ));
    out.push((
        "connes-landi:0.5+0.866i".into(),
        Arc::new(connes_landi_module(c(0.5, 3f64.sqrt() / 2.0)).expect("valid")),
    ));
    out.push((
        "interleave".into(),
        Arc::new(crate::cuntz::interleave_cuntz_module()),
    ));
    out
}

const TOL: f64 = 1e-12;

fn pathsum_ball_check<F>(
    id: &str,
    anchor: &str,
    m: &PythModule,
    ball: &[FracElement],
    expected: F,
) -> CheckResult
where
    F: Fn(&FracElement) -> C64 + Sync + Send,
{
    let bad = exec::map(Strategy::default(), ball, |g| {
        (coefficient_pathsum(g, m) - expected(g)).norm() > TOL
    })
    .into_iter()
    .filter(|&b| b)
    .count();
    count_check(id, anchor, bad, ball.len())
}

/// `|coefficient - 1| <= TOL` must agree with `oracle` on every element.
fn indicator_ball_check<F>(
    id: &str,
    anchor: &str,
    m: &PythModule,
    ball: &[FracElement],
    oracle: F,
) -> CheckResult
where
    F: Fn(&FracElement) -> bool + Sync + Send,
{
    let bad = exec::map(Strategy::default(), ball, |g| {
        ((coefficient_pathsum(g, m) - c(1.0, 0.0)).norm() <= TOL) != oracle(g)
    })
    .into_iter()
    .filter(|&b| b)
    .count();
    count_check(id, anchor, bad, ball.len())
}

fn pythagorean_check(m: &PythModule) -> Result<CheckResult> {
    let rep = check_pythagorean(m, &m.sample_basis())?;
    Ok(real_check(
        "pythagorean-relation",
        "sum_i A_i* A_i = 1",
        0.0,
        rep.max_residual,
        TOL,
    ))
}

fn pathsum_vs_act(m: &Arc<PythModule>, ball: &[FracElement]) -> Result<CheckResult> {
    let diffs = exec::map(Strategy::default(), ball, |g| -> Result<f64> {
        Ok((coefficient_pathsum(g, m) - vacuum_coefficient(g, m)?).norm())
    });
    let mut worst: f64 = 0.0;
    for d in diffs {
        worst = worst.max(d?);
    }
    Ok(real_check(
        "pathsum-vs-act",
        "sum_l <(A^t_l)* A^s_l Omega, Omega> = <pi(g) Omega, Omega>",
        0.0,
        worst,
        TOL,
    ))
}

impl ExampleSpec {
    pub fn params(&self) -> String {
        match &self.preset {
            Preset::Twisted(w) => format!("phase={}", fmt_c(*w)),
            Preset::Scalar(t) => format!("theta={t}"),
            Preset::ComplexScalar(a, b) => format!("a={} b={}", fmt_c(*a), fmt_c(*b)),
            Preset::Ray(d) => format!("digits={d}"),
            Preset::ConnesLandi(l) => format!("lambda={}", fmt_c(*l)),
            _ => String::new(),
        }
    }

    pub fn run(&self, cfg: &BallConfig) -> Result<ExampleReport> {
        let m = &self.module;
        let mut checks = vec![pythagorean_check(m)?];
        let mut notes = Vec::new();
        let arity = m.arity();
        let fball = if arity == 2 {
            enumerate_ball(cfg.f_leaves, Flavor::F, 2)?
        } else {
            enumerate_ball(cfg.ternary_leaves, Flavor::F, arity)?
        };
        match &self.preset {
            Preset::Trivial => self.run_trivial(cfg, &fball, &mut checks)?,
            Preset::Lebesgue => self.run_lebesgue(cfg, &mut checks)?,
            Preset::Twisted(w) => self.run_twisted(*w, &fball, &mut checks)?,
            Preset::Scalar(th) => self.run_scalar(*th, &fball, &mut checks)?,
            Preset::ComplexScalar(a, b) => self.run_complex(*a, *b, cfg, &mut checks)?,
            Preset::FreeGroup => self.run_free(&fball, &mut checks)?,
            Preset::Car => self.run_car(cfg, &mut checks)?,
            Preset::Ray(d) => self.run_ray(d, &fball, &mut checks, &mut notes)?,
            Preset::Projections => self.run_projections(cfg, &fball, &mut checks)?,
            Preset::Cantor => self.run_cantor(&fball, &mut checks)?,
            Preset::TripleProjections => self.run_triple(&fball, &mut checks)?,
            Preset::ConnesLandi(l) => self.run_connes_landi(*l, cfg, &mut checks)?,
        }
        if !matches!(self.preset, Preset::Scalar(_)) {
            checks.push(pathsum_vs_act(m, &fball)?);
        }
        Ok(ExampleReport {
            preset: self.id.clone(),
            params: self.params(),
            checks,
            notes,
        })
    }

    fn run_trivial(
        &self,
        cfg: &BallConfig,
        fball: &[FracElement],
        out: &mut Vec<CheckResult>,
    ) -> Result<()> {
        let m = &self.module;
        out.push(pathsum_ball_check(
            "F-ball-trivial",
            "A = 1, B = 0 gives the trivial representation of F",
            m,
            fball,
            |_| c(1.0, 0.0),
        ));
        let tball = enumerate_ball(cfg.t_leaves, Flavor::T, 2)?;
        out.push(pathsum_ball_check(
            "T-ball-fixes-0",
            "A = 1, B = 0: coefficient is 1 exactly when g(0) = 0",
            m,
            &tball,
            |g| {
                let fixes = g
                    .pl_eval(Q::from(0))
                    .map(|y| y == Q::from(0))
                    .unwrap_or(false);
                c(if fixes { 1.0 } else { 0.0 }, 0.0)
            },
        ));
        Ok(())
    }

    fn run_lebesgue(&self, cfg: &BallConfig, out: &mut Vec<CheckResult>) -> Result<()> {
        let m = &self.module;
        let tball = enumerate_ball(cfg.t_leaves, Flavor::T, 2)?;
        out.push(pathsum_ball_check(
            "T-ball-lebesgue",
            "coefficient = sum_l sqrt(Leb(I_s(l)) Leb(I_t(l))) (isomorphism with L^2 of the circle)",
            m,
            &tball,
            |g| {
                let ti = g.top().leaf_intervals();
                let bi = g.bottom().leaf_intervals();
                let s: f64 = g
                    .perm()
                    .iter()
                    .enumerate()
                    .map(|(l, &b)| (ti[l].length_f64() * bi[b].length_f64()).sqrt())
                    .sum();
                c(s, 0.0)
            },
        ));
        let o = LimitVec::vacuum(m.clone());
        let seq = empirical_rotation_limit(
            1,
            &o,
            &o,
            RotationOpts {
                n_max: cfg.rotation_n,
                stop_early: false,
                ..Default::default()
            },
        )?;
        out.push(num_check(
            "rotation-limit",
            "<pi(r_n) Omega, Omega> -> 1 (continuity of the circle action)",
            c(1.0, 0.0),
            seq.last(),
            TOL,
        ));
        Ok(())
    }

    fn run_twisted(&self, w: C64, fball: &[FracElement], out: &mut Vec<CheckResult>) -> Result<()> {
        let tm = twisted_scalar_model(w)?;
        let m = &tm.module;
        let one = StepFn::constant(CVec::real(&[1.0]));
        let mut worst: f64 = 0.0;
        for g in fball {
            let f = tm.transported_act(g, &one)?;
            let integral: C64 = f
                .intervals()
                .iter()
                .zip(f.values())
                .map(|(i, v)| v.get(&Label::Int(0)) * i.length_f64())
                .sum();
            worst = worst.max((integral - coefficient_pathsum(g, m)).norm());
        }
        out.push(real_check(
            "transported-coefficient",
            "(g.f)(y) = w^{log2 g'} g'^{-1/2} f(g^{-1} y) realises the twisted module on L^2",
            0.0,
            worst,
            TOL,
        ));
        let mut rng = ChaCha8Rng::seed_from_u64(0x7715);
        let mut iw: f64 = 0.0;
        for g in fball.iter().take(50) {
            let k = rng.gen_range(0..5);
            let x = LimitVec::random(m.clone(), &mut rng, k);
            let lhs = tm.intertwine(&act(g, &x)?)?;
            let rhs = tm.transported_act(g, &tm.intertwine(&x)?)?;
            iw = iw.max(lhs.dist(&rhs)?);
        }
        out.push(real_check(
            "twisted-intertwiner",
            "V pi(g) = (transported g) V on random vectors",
            0.0,
            iw,
            TOL,
        ));
        let leb = coefficient_pathsum(&g0(), &lebesgue_module());
        let tw = coefficient_pathsum(&g0(), m);
        let differs = (w - c(1.0, 0.0)).norm() < 1e-12 || (leb - tw).norm() > 1e-6;
        out.push(CheckResult {
            id: "twist-changes-coefficient".into(),
            anchor: "a phase w != 1 changes the representation".into(),
            expected: format!("!= {}", fmt_c(leb)),
            got: fmt_c(tw),
            tolerance: 1e-6,
            pass: differs,
        });
        Ok(())
    }

    fn run_scalar(&self, th: f64, fball: &[FracElement], out: &mut Vec<CheckResult>) -> Result<()> {
        let m = &self.module;
        let (cs, sn) = (th.cos(), th.sin());
        let k = cs.powi(3) + sn * sn * cs * cs + sn.powi(3);
        out.push(num_check(
            "g0-coefficient",
            "<pi(g0) Omega, Omega> = c^3 + s^2 c^2 + s^3",
            c(k, 0.0),
            vacuum_coefficient(&g0(), m)?,
            TOL,
        ));
        out.push(pathsum_vs_act(m, fball)?);
        let mut rng = ChaCha8Rng::seed_from_u64(0x5ca1a);
        let t2 = full_tree(2, 2);
        let mut worst: f64 = 0.0;
        for n in 3..=5 {
            let g = weak_limit_element(n)?;
            for _ in 0..4 {
                let rnd = |rng: &mut ChaCha8Rng| {
                    (0..4)
                        .map(|_| {
                            CVec::dense(&[c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))])
                        })
                        .collect::<Vec<_>>()
                };
                let xi = LimitVec::new(m.clone(), t2.clone(), rnd(&mut rng))?;
                let eta = LimitVec::new(m.clone(), t2.clone(), rnd(&mut rng))?;
                let got = act(&g, &xi)?.inner(&eta)?;
                worst = worst.max((got - xi.inner(&eta)? * k).norm());
            }
        }
        out.push(real_check(
            "weak-limit-g_n",
            "<pi(g_n) xi, eta> = (c^3 + s^2 c^2 + s^3) <xi, eta> once n exceeds the level of xi, eta",
            0.0,
            worst,
            TOL,
        ));
        if th == 0.0 {
            out.push(pathsum_ball_check(
                "degenerates-to-trivial",
                "theta = 0 is the module A = 1, B = 0",
                m,
                fball,
                |_| c(1.0, 0.0),
            ));
        }
        Ok(())
    }

    fn run_complex(
        &self,
        a: C64,
        b: C64,
        cfg: &BallConfig,
        out: &mut Vec<CheckResult>,
    ) -> Result<()> {
        let m = &self.module;
        let w = a * b.conj();
        let o = LimitVec::vacuum(m.clone());
        let opts = RotationOpts {
            n_max: cfg.rotation_n.max(16),
            stop_early: false,
            ..Default::default()
        };
        let tol = 1e-6;
        for j in [1u64, 3, 5] {
            let expected = if w.norm() <= 0.5 {
                xj(j, w)?.value
            } else if j == 1 {
                x1(w)
            } else {
                continue;
            };
            let seq = empirical_rotation_limit(j as i64, &o, &o, opts)?;
            out.push(num_check(
                &format!("rotation-limit-j{j}"),
                if j == 1 {
                    "x_1 = conj(w) / (1 - w)"
                } else {
                    "x_j from x_2k = x_k, x_2k+1 = conj(w) x_k + w x_k+1"
                },
                expected,
                seq.last(),
                tol,
            ));
        }
        let seq = empirical_rotation_limit(1, &o, &o, opts)?;
        let lim = x1(w);
        let errs: Vec<C64> = seq.values.iter().map(|(_, y)| y - lim).collect();
        let worst = errs
            .windows(2)
            .map(|e| (e[1] - w * e[0]).norm())
            .fold(0.0f64, f64::max);
        out.push(real_check(
            "geometric-ratio",
            "y_{n+1} - x_1 = w (y_n - x_1)",
            0.0,
            worst,
            1e-12,
        ));
        Ok(())
    }

    fn run_free(&self, fball: &[FracElement], out: &mut Vec<CheckResult>) -> Result<()> {
        let m = &self.module;
        out.push(pathsum_ball_check(
            "fixed-point-measure",
            "<pi(g) Omega, Omega> = Leb({fixed points of g})",
            m,
            fball,
            |g| c(q_f64(g.fixed_point_measure()), 0.0),
        ));
        let id = FracElement::identity(2, Flavor::F);
        out.push(pathsum_ball_check(
            "one-minus-distance",
            "<pi(g) Omega, Omega> = 1 - d(g, e), d(g, h) = Leb{g != h}",
            m,
            fball,
            |g| c(1.0 - q_f64(distance(g, &id)), 0.0),
        ));
        Ok(())
    }

    fn run_car(&self, cfg: &BallConfig, out: &mut Vec<CheckResult>) -> Result<()> {
        let m = &self.module;
        let ball = enumerate_ball(cfg.car_leaves, Flavor::F, 2)?;
        let third = Q::new(1, 3);
        out.push(pathsum_ball_check(
            "stabiliser-of-1/3",
            "<pi(g) Omega, Omega> = 1 if g(1/3) = 1/3 and 0 otherwise",
            m,
            &ball,
            |g| {
                c(
                    if g.pl_eval(third).ok() == Some(third) {
                        1.0
                    } else {
                        0.0
                    },
                    0.0,
                )
            },
        ));
        let sparse = car_sparse_module();
        let bad = exec::map(Strategy::default(), &ball, |g| {
            coefficient_pathsum(g, m) != coefficient_pathsum(g, &sparse)
        })
        .into_iter()
        .filter(|&b| b)
        .count();
        out.push(count_check(
            "dense-vs-sparse",
            "dense and sparse backends give identical coefficients",
            bad,
            ball.len(),
        ));
        Ok(())
    }

    fn run_ray(
        &self,
        d: &DigitStream,
        fball: &[FracElement],
        out: &mut Vec<CheckResult>,
        notes: &mut Vec<String>,
    ) -> Result<()> {
        let m = &self.module;
        out.push(pathsum_ball_check(
            "germ-at-x",
            "coefficient is 1 exactly when g is the identity on the leaf interval along the ray of x",
            m,
            fball,
            |g| c(if ray_germ_trivial(g, d) { 1.0 } else { 0.0 }, 0.0),
        ));
        let x = d.value();
        let mut fix_zero = 0;
        let mut nonfix_one = 0;
        let mut example = None;
        for g in fball {
            let fixes = g.pl_eval(x).ok() == Some(x);
            let p = coefficient_pathsum(g, m);
            if fixes && p.norm() < 0.5 {
                fix_zero += 1;
                example.get_or_insert_with(|| g.serialize());
            }
            if !fixes && p.norm() > 0.5 {
                nonfix_one += 1;
            }
        }
        notes.push(format!(
            "x = {x}: {fix_zero} elements fix x with coefficient 0 and {nonfix_one} move x with coefficient 1{}",
            example.map(|e| format!(" (e.g. {e})")).unwrap_or_default()
        ));
        Ok(())
    }

    fn run_projections(
        &self,
        cfg: &BallConfig,
        fball: &[FracElement],
        out: &mut Vec<CheckResult>,
    ) -> Result<()> {
        let m = &self.module;
        out.push(pathsum_ball_check(
            "F-ball-invariant",
            "Omega is F-invariant (induced from the trivial representation of F)",
            m,
            fball,
            |_| c(1.0, 0.0),
        ));
        let tball: Vec<FracElement> = enumerate_ball(cfg.t_leaves, Flavor::T, 2)?
            .into_iter()
            .filter(|g| g.rotation_index() != Some(0))
            .collect();
        out.push(pathsum_ball_check(
            "T-rotations-orthogonal",
            "<pi(g) Omega, Omega> = 0 for g outside F",
            m,
            &tball,
            |_| c(0.0, 0.0),
        ));
        Ok(())
    }

    fn run_cantor(&self, fball: &[FracElement], out: &mut Vec<CheckResult>) -> Result<()> {
        let m = &self.module;
        out.push(indicator_ball_check(
            "cantor-stabiliser",
            "stabiliser of Omega is F_c: g is the identity on every leaf interval with no middle turn",
            m,
            fball,
            cantor_oracle,
        ));
        Ok(())
    }

    fn run_triple(&self, fball: &[FracElement], out: &mut Vec<CheckResult>) -> Result<()> {
        let (r1, r2) = triple_relation_residuals();
        out.push(real_check("pipjpi", "p_i p_j p_i = p_i / 4", 0.0, r1, TOL));
        out.push(real_check(
            "pipjpkpi",
            "p_i p_j p_k p_i = -p_i / 8",
            0.0,
            r2,
            TOL,
        ));
        let m = &self.module;
        let fixers: Vec<String> = fball
            .iter()
            .filter(|g| (coefficient_pathsum(g, m) - c(1.0, 0.0)).norm() <= TOL)
            .map(|g| g.serialize())
            .collect();
        out.push(CheckResult {
            id: "stabiliser-trivial".into(),
            anchor: "only the identity fixes xi_1".into(),
            expected: "[(./.)]".into(),
            got: format!("{fixers:?}"),
            tolerance: TOL,
            pass: fixers.len() == 1 && fixers[0] == FracElement::identity(3, Flavor::F).serialize(),
        });
        let perp = Arc::new(triple_projections_module(true));
        let g = parse_element(TRIPLE_FIXER, 3)?;
        out.push(num_check(
            "constructed-fixer",
            "a nontrivial element of F_3 fixes Omega = (0, 1)",
            c(1.0, 0.0),
            vacuum_coefficient(&g, &perp)?,
            TOL,
        ));
        Ok(())
    }

    fn run_connes_landi(
        &self,
        lambda: C64,
        cfg: &BallConfig,
        out: &mut Vec<CheckResult>,
    ) -> Result<()> {
        let m = &self.module;
        let (modulus, index, phase) = connes_landi_components(m, lambda, cfg.f_leaves)?;
        out.push(real_check(
            "component-modulus",
            "(Phi(t) Omega)_j has modulus 2^{-d(t,j)/2}",
            0.0,
            modulus,
            TOL,
        ));
        out.push(count_check(
            "component-index",
            "(Phi(t) Omega)_j is supported on delta_{L(t,j)}, L = number of left turns",
            index,
            enumerate_trees(cfg.f_leaves, 2)?.len(),
        ));
        out.push(real_check(
            "component-phase",
            "phase lambda^R with R = sum over right turns of the preceding left turns",
            0.0,
            phase,
            TOL,
        ));
        let mut worst: f64 = 0.0;
        let samples: Vec<C64> = (0..8)
            .map(|k| C64::from_polar(1.0, 2.0 * PI * k as f64 / 8.0 + 0.1))
            .chain([lambda])
            .collect();
        for l in samples {
            let ml = Arc::new(connes_landi_module(l)?);
            let o = LimitVec::vacuum(ml.clone());
            for n in 1..=cfg.rotation_n {
                worst = worst.max(rotation_coefficient(n, 1, &o, &o, Strategy::default())?.norm());
            }
        }
        out.push(bound_check(
            "rotation-bound",
            "|<pi(r_n) Omega, Omega>| <= 1/4",
            0.25,
            worst,
            TOL,
        ));
        if (lambda - c(1.0, 0.0)).norm() < 1e-12 {
            let o = LimitVec::vacuum(m.clone());
            let delta0 = CVec::delta(Label::Int(0));
            let dom: Vec<CVec> = (-4..=4).map(|k| CVec::delta(Label::Int(k))).collect();
            let sol = solve_commuting_limit(m, &dom, 1e-12)?;
            out.push(num_check(
                "limit-equation",
                "x (1 - B*A) = A*B gives <x delta_0, delta_0> = 1/4",
                c(0.25, 0.0),
                sol.coefficient(&delta0, &delta0),
                1e-10,
            ));
            let v = rotation_coefficient(cfg.rotation_n, 1, &o, &o, Strategy::default())?;
            out.push(num_check(
                "rotation-limit",
                "<pi(r_n) Omega, Omega> -> 1/4 at lambda = 1",
                c(0.25, 0.0),
                v,
                1e-3,
            ));
        }
        Ok(())
    }
}

/// In the reduced pair, the top leaf along the ray of `x` is matched to the
/// bottom leaf with the same address.
pub fn ray_germ_trivial(g: &FracElement, d: &DigitStream) -> bool {
    let top = g.top().leaf_addresses();
    let bottom = g.bottom().leaf_addresses();
    top.iter()
        .enumerate()
        .any(|(l, a)| d.is_prefix(a) && bottom[g.perm()[l]] == *a)
}

/// Every bottom leaf whose address avoids the middle digit is matched to a
/// top leaf with the same address.
pub fn cantor_oracle(g: &FracElement) -> bool {
    let top = g.top().leaf_addresses();
    let bottom = g.bottom().leaf_addresses();
    let inv = g.pair().inverse_perm();
    bottom
        .iter()
        .enumerate()
        .filter(|(_, a)| a.digits.iter().all(|&x| x != 1))
        .all(|(b, a)| top[inv[b]] == *a)
}

/// `(max || p_i p_j p_i - p_i/4 ||, max || p_i p_j p_k p_i + p_i/8 ||)`.
pub fn triple_relation_residuals() -> (f64, f64) {
    let p = triple_projections();
    let mut r1: f64 = 0.0;
    let mut r2: f64 = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            if i == j {
                continue;
            }
            r1 = r1.max((&p[i] * &p[j] * &p[i] - &p[i] * c(0.25, 0.0)).norm());
            for k in 0..3 {
                if k != i && k != j {
                    r2 = r2.max((&p[i] * &p[j] * &p[k] * &p[i] + &p[i] * c(0.125, 0.0)).norm());
                }
            }
        }
    }
    (r1, r2)
}

/// Over all trees with `leaves` leaves: worst modulus error, number of trees
/// with a component off `delta_L`, worst phase error.
pub fn connes_landi_components(
    m: &PythModule,
    lambda: C64,
    leaves: usize,
) -> Result<(f64, usize, f64)> {
    let mut modulus: f64 = 0.0;
    let mut phase: f64 = 0.0;
    let mut index = 0;
    for t in enumerate_trees(leaves, 2)? {
        let mut bad = false;
        for a in t.leaf_addresses() {
            let v = m.apply_word(&a.digits, m.vacuum());
            let left = a.digits.iter().filter(|&&d| d == 0).count() as i64;
            let mut r = 0i32;
            let mut seen = 0i32;
            for &dg in &a.digits {
                if dg == 0 {
                    seen += 1;
                } else {
                    r += seen;
                }
            }
            let z = v.get(&Label::Int(left));
            if v.support() != vec![Label::Int(left)] {
                bad = true;
            }
            let expect = 2f64.powf(-(a.len() as f64) / 2.0);
            modulus = modulus.max((z.norm() - expect).abs());
            phase = phase.max((z - lambda.powi(r) * expect).norm());
        }
        index += bad as usize;
    }
    Ok((modulus, index, phase))
}

/// Dilation, compression and (for Cuntz modules) `U_beta` checks.
pub fn cuntz_report(
    name: &str,
    m: &Arc<PythModule>,
    samples: usize,
    ball_leaves: usize,
    seed: u64,
) -> Result<ExampleReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checks = Vec::new();
    let mut notes = Vec::new();
    let xs: Vec<LimitVec> = (0..samples)
        .map(|_| {
            let k = rng.gen_range(0..6);
            LimitVec::random(m.clone(), &mut rng, k)
        })
        .collect();
    let mut worst: f64 = 0.0;
    for x in &xs {
        worst = worst.max(dilation_relation_residual(x)?);
    }
    checks.push(real_check(
        "dilation-relations",
        "C_i C_j* = delta_ij and sum_i C_i* C_i = 1 on the direct limit",
        0.0,
        worst,
        TOL,
    ));
    let comp = compression_check(m, &m.sample_basis())?;
    checks.push(real_check(
        "root-invariance",
        "p C_i p = C_i p for the projection p onto root vectors",
        0.0,
        comp.invariance,
        TOL,
    ));
    checks.push(real_check(
        "compression",
        "p C_i* p = A_i* on root vectors",
        0.0,
        comp.compression,
        TOL,
    ));
    match CuntzModule::new(m.clone()) {
        Ok(cm) => {
            let mut iso: f64 = 0.0;
            for x in &xs {
                iso = iso.max((u_beta(&cm, x)?.norm() - x.norm()).abs());
            }
            checks.push(real_check(
                "u_beta-isometry",
                "||U_beta x|| = ||x||",
                0.0,
                iso,
                TOL,
            ));
            let flavor = if m.arity() == 2 { Flavor::T } else { Flavor::F };
            let ball = enumerate_ball(ball_leaves, flavor, m.arity())?;
            let mut tw: f64 = 0.0;
            let mut un: f64 = 0.0;
            for (g, x) in ball.iter().zip(xs.iter().cycle()) {
                let s = nekrashevych(g);
                let ux = u_beta(&cm, x)?;
                let lhs = u_beta(&cm, &act(g, x)?)?;
                let rhs = evaluate(&s, &cm, &ux)?;
                tw = tw.max(lhs.dist(&rhs));
                un = un.max((rhs.norm() - ux.norm()).abs());
            }
            checks.push(real_check(
                "u_beta-intertwining",
                "U_beta pi(g) = sigma(g) U_beta with sigma(g) = sum_l (A^t_l)* A^s_l, A_i = S_i*",
                0.0,
                tw,
                TOL,
            ));
            checks.push(real_check(
                "nekrashevych-unitary",
                "sigma(g) is unitary when the S_i are Cuntz isometries",
                0.0,
                un,
                TOL,
            ));
        }
        Err(Error::NotCuntz { residual }) => {
            notes.push(format!("member adjoints are not Cuntz isometries (residual {residual:e}); U_beta checks skipped"));
        }
        Err(e) => return Err(e),
    }
    Ok(ExampleReport {
        preset: name.into(),
        params: format!("samples={samples} ball={ball_leaves}"),
        checks,
        notes,
    })
}

/// Runs one preset.
pub fn run(id: &str, params: Option<&str>, cfg: &BallConfig) -> Result<ExampleReport> {
    preset(id, params)?.run(cfg)
}

/// Runs every preset with default parameters, in parallel per preset.
pub fn run_all(cfg: &BallConfig) -> Result<SuiteReport> {
    run_all_with(cfg, Strategy::default())
}

pub fn run_all_with(cfg: &BallConfig, strategy: Strategy) -> Result<SuiteReport> {
    let specs = all_presets();
    let reports = exec::map(strategy, &specs, |s| s.run(cfg));
    Ok(SuiteReport {
        config: *cfg,
        presets: reports.into_iter().collect::<Result<Vec<_>>>()?,
    })
}

/// A copy of `m` whose first member is scaled by `s`, for negative tests.
pub fn corrupted(m: &PythModule, s: f64) -> PythModule {
    m.scale_member(0, s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complex_parsing() {
        assert_eq!(parse_complex("0.5+0.866i").unwrap(), c(0.5, 0.866));
        assert_eq!(parse_complex("-1e-3-2i").unwrap(), c(-1e-3, -2.0));
        assert_eq!(parse_complex("i").unwrap(), c(0.0, 1.0));
        assert_eq!(parse_complex("-i").unwrap(), c(0.0, -1.0));
        assert_eq!(parse_complex("2.5").unwrap(), c(2.5, 0.0));
        assert!(parse_complex("x").is_err());
    }

    #[test]
    fn digit_streams() {
        let d = DigitStream::parse("(01)").unwrap();
        assert_eq!(d.value(), Q::new(1, 3));
        assert_eq!(DigitStream::parse("1(0)").unwrap().value(), Q::new(1, 2));
        assert!(DigitStream::parse("01").is_err());
    }

    #[test]
    fn weak_limit_element_shape() {
        let g = weak_limit_element(1).unwrap();
        assert_eq!(g.leaves(), 6);
    }

    #[test]
    fn unknown_preset_lists_ids() {
        let e = preset("nope", None).unwrap_err();
        assert!(e.to_string().contains("free-group"));
    }

    #[test]
    fn interleave_cuntz_report() {
        let m = Arc::new(crate::cuntz::interleave_cuntz_module());
        let r = cuntz_report("interleave", &m, 10, 4, 1).unwrap();
        assert!(r.pass() && r.checks.len() == 6, "{}", report_table(&r));
        let s = Arc::new(scalar_module(0.3));
        let r = cuntz_report("scalar", &s, 10, 4, 1).unwrap();
        assert!(r.pass() && r.checks.len() == 3 && r.notes.len() == 1);
    }

    #[test]
    fn reduced_suite_passes() {
        let r = run_all(&BallConfig::reduced()).unwrap();
        assert!(r.pass(), "{}", r.table());
    }
}
