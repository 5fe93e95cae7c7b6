//! Coefficient spaces and Pythagorean modules.
//!
//! Inner products are linear in the first argument and conjugate-linear in
//! the second: `inner(u, v) = sum_i u_i * conj(v_i)`.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;
use rand::Rng;
use serde::Deserialize;

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;

/// Entries of a sparse vector with modulus at most this are dropped.
pub const DROP_TOL: f64 = 1e-15;

/// Default absolute tolerance for pass/fail checks.
pub const DEFAULT_TOL: f64 = 1e-9;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Basis label of a sparse coefficient space.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Int(i64),
    /// Reduced word in a free group; `1, 2` are generators and `-1, -2`
    /// their inverses.
    Word(Vec<i8>),
    Tagged(u8, Box<Label>),
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Int(k) => write!(f, "{k}"),
            Label::Word(w) if w.is_empty() => f.write_str("e"),
            Label::Word(w) => {
                for &l in w {
                    let ch = match l {
                        1 => 'a',
                        2 => 'b',
                        -1 => 'A',
                        -2 => 'B',
                        _ => '?',
                    };
                    write!(f, "{ch}")?;
                }
                Ok(())
            }
            Label::Tagged(t, l) => write!(f, "{t}:{l}"),
        }
    }
}

/// A vector of the coefficient space, dense or finitely supported.
#[derive(Clone, Debug, PartialEq)]
pub enum CVec {
    Dense(DVector<C64>),
    Sparse(BTreeMap<Label, C64>),
}

impl CVec {
    pub fn dense(entries: &[C64]) -> CVec {
        CVec::Dense(DVector::from_column_slice(entries))
    }

    pub fn real(entries: &[f64]) -> CVec {
        CVec::Dense(DVector::from_iterator(
            entries.len(),
            entries.iter().map(|&x| c(x, 0.0)),
        ))
    }

    pub fn delta(label: Label) -> CVec {
        let mut m = BTreeMap::new();
        m.insert(label, c(1.0, 0.0));
        CVec::Sparse(m)
    }

    pub fn basis(dim: usize, i: usize) -> CVec {
        let mut v = DVector::zeros(dim);
        v[i] = c(1.0, 0.0);
        CVec::Dense(v)
    }

    pub fn zeros_like(&self) -> CVec {
        match self {
            CVec::Dense(v) => CVec::Dense(DVector::zeros(v.len())),
            CVec::Sparse(_) => CVec::Sparse(BTreeMap::new()),
        }
    }

    pub fn is_dense(&self) -> bool {
        matches!(self, CVec::Dense(_))
    }

    pub fn dim(&self) -> Option<usize> {
        match self {
            CVec::Dense(v) => Some(v.len()),
            CVec::Sparse(_) => None,
        }
    }

    /// Amplitude at a sparse label (or at an index for dense vectors).
    pub fn get(&self, label: &Label) -> C64 {
        match (self, label) {
            (CVec::Sparse(m), _) => m.get(label).copied().unwrap_or_default(),
            (CVec::Dense(v), Label::Int(i)) if *i >= 0 && (*i as usize) < v.len() => v[*i as usize],
            _ => C64::default(),
        }
    }

    pub fn support(&self) -> Vec<Label> {
        match self {
            CVec::Sparse(m) => m.keys().cloned().collect(),
            CVec::Dense(v) => (0..v.len())
                .filter(|&i| v[i].norm() > DROP_TOL)
                .map(|i| Label::Int(i as i64))
                .collect(),
        }
    }

    pub fn scale(&self, s: C64) -> CVec {
        match self {
            CVec::Dense(v) => CVec::Dense(v * s),
            CVec::Sparse(m) => {
                let mut out = BTreeMap::new();
                for (k, &a) in m {
                    let b = a * s;
                    if b.norm() > DROP_TOL {
                        out.insert(k.clone(), b);
                    }
                }
                CVec::Sparse(out)
            }
        }
    }

    /// `self + s * other`.
    pub fn axpy(&self, s: C64, other: &CVec) -> CVec {
        match (self, other) {
            (CVec::Dense(a), CVec::Dense(b)) => CVec::Dense(a + b * s),
            (CVec::Sparse(a), CVec::Sparse(b)) => {
                let mut out = a.clone();
                for (k, &v) in b {
                    *out.entry(k.clone()).or_default() += v * s;
                }
                out.retain(|_, v| v.norm() > DROP_TOL);
                CVec::Sparse(out)
            }
            _ => panic!("mixing dense and sparse vectors"),
        }
    }

    pub fn add(&self, other: &CVec) -> CVec {
        self.axpy(c(1.0, 0.0), other)
    }

    pub fn sub(&self, other: &CVec) -> CVec {
        self.axpy(c(-1.0, 0.0), other)
    }

    /// Linear in `self`, conjugate-linear in `other`.
    pub fn inner(&self, other: &CVec) -> C64 {
        match (self, other) {
            (CVec::Dense(a), CVec::Dense(b)) => {
                a.iter().zip(b.iter()).map(|(x, y)| x * y.conj()).sum()
            }
            (CVec::Sparse(a), CVec::Sparse(b)) => {
                let (small, big, flip) = if a.len() <= b.len() {
                    (a, b, false)
                } else {
                    (b, a, true)
                };
                let mut s = C64::default();
                for (k, x) in small {
                    if let Some(y) = big.get(k) {
                        s += if flip { y * x.conj() } else { x * y.conj() };
                    }
                }
                s
            }
            _ => panic!("mixing dense and sparse vectors"),
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        match self {
            CVec::Dense(v) => v.iter().fold(0.0, |a, x| a + x.norm_sqr()),
            CVec::Sparse(m) => m.values().fold(0.0, |a, x| a + x.norm_sqr()),
        }
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn dist(&self, other: &CVec) -> f64 {
        self.sub(other).norm()
    }

    /// Dense vectors as sparse vectors over `Int` labels.
    pub fn to_sparse(&self) -> CVec {
        match self {
            CVec::Sparse(_) => self.clone(),
            CVec::Dense(v) => CVec::Sparse(
                v.iter()
                    .enumerate()
                    .filter(|(_, x)| x.norm() > DROP_TOL)
                    .map(|(i, &x)| (Label::Int(i as i64), x))
                    .collect(),
            ),
        }
    }

    fn tagged(&self, tag: u8) -> CVec {
        match self.to_sparse() {
            CVec::Sparse(m) => CVec::Sparse(
                m.into_iter()
                    .map(|(k, v)| (Label::Tagged(tag, Box::new(k)), v))
                    .collect(),
            ),
            CVec::Dense(_) => unreachable!(),
        }
    }
}

impl fmt::Display for CVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let fmt_c = |z: &C64| format!("{:.6}{:+.6}i", z.re, z.im);
        match self {
            CVec::Dense(v) => {
                let parts: Vec<String> = v.iter().map(fmt_c).collect();
                write!(f, "({})", parts.join(", "))
            }
            CVec::Sparse(m) if m.is_empty() => f.write_str("0"),
            CVec::Sparse(m) => {
                let parts: Vec<String> = m
                    .iter()
                    .map(|(k, z)| format!("{} d[{k}]", fmt_c(z)))
                    .collect();
                f.write_str(&parts.join(" + "))
            }
        }
    }
}

pub type Rule = Arc<dyn Fn(&Label) -> Vec<(Label, C64)> + Send + Sync>;

/// An operator given by its action on basis labels, with an explicit adjoint.
#[derive(Clone)]
pub struct SparseOp {
    pub name: String,
    forward: Rule,
    adjoint: Rule,
}

impl SparseOp {
    pub fn new<F, G>(name: &str, forward: F, adjoint: G) -> SparseOp
    where
        F: Fn(&Label) -> Vec<(Label, C64)> + Send + Sync + 'static,
        G: Fn(&Label) -> Vec<(Label, C64)> + Send + Sync + 'static,
    {
        SparseOp {
            name: name.to_string(),
            forward: Arc::new(forward),
            adjoint: Arc::new(adjoint),
        }
    }

    pub fn image(&self, label: &Label) -> Vec<(Label, C64)> {
        (self.forward)(label)
    }

    pub fn adjoint_image(&self, label: &Label) -> Vec<(Label, C64)> {
        (self.adjoint)(label)
    }

    fn run(rule: &Rule, v: &BTreeMap<Label, C64>) -> BTreeMap<Label, C64> {
        let mut out: BTreeMap<Label, C64> = BTreeMap::new();
        for (k, &a) in v {
            for (l, b) in rule(k) {
                *out.entry(l).or_default() += a * b;
            }
        }
        out.retain(|_, z| z.norm() > DROP_TOL);
        out
    }

    pub fn adjoint(&self) -> SparseOp {
        SparseOp {
            name: format!("{}*", self.name),
            forward: self.adjoint.clone(),
            adjoint: self.forward.clone(),
        }
    }

    pub fn scaled(&self, s: C64) -> SparseOp {
        let f = self.forward.clone();
        let g = self.adjoint.clone();
        SparseOp {
            name: self.name.clone(),
            forward: Arc::new(move |l| f(l).into_iter().map(|(k, z)| (k, z * s)).collect()),
            adjoint: Arc::new(move |l| g(l).into_iter().map(|(k, z)| (k, z * s.conj())).collect()),
        }
    }
}

impl fmt::Debug for SparseOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SparseOp({})", self.name)
    }
}

#[derive(Clone, Debug)]
pub enum Op {
    Dense(DMatrix<C64>),
    Sparse(SparseOp),
}

impl Op {
    pub fn apply(&self, v: &CVec) -> CVec {
        match (self, v) {
            (Op::Dense(m), CVec::Dense(x)) => CVec::Dense(m * x),
            (Op::Sparse(s), CVec::Sparse(x)) => CVec::Sparse(SparseOp::run(&s.forward, x)),
            _ => panic!("operator and vector backends differ"),
        }
    }

    pub fn apply_adjoint(&self, v: &CVec) -> CVec {
        match (self, v) {
            (Op::Dense(m), CVec::Dense(x)) => CVec::Dense(m.adjoint() * x),
            (Op::Sparse(s), CVec::Sparse(x)) => CVec::Sparse(SparseOp::run(&s.adjoint, x)),
            _ => panic!("operator and vector backends differ"),
        }
    }

    pub fn adjoint(&self) -> Op {
        match self {
            Op::Dense(m) => Op::Dense(m.adjoint()),
            Op::Sparse(s) => Op::Sparse(s.adjoint()),
        }
    }

    pub fn scaled(&self, s: C64) -> Op {
        match self {
            Op::Dense(m) => Op::Dense(m * s),
            Op::Sparse(o) => Op::Sparse(o.scaled(s)),
        }
    }

    pub fn backend(&self) -> &'static str {
        match self {
            Op::Dense(_) => "dense",
            Op::Sparse(_) => "sparse",
        }
    }
}

/// Operators `A_1, ..., A_n` on a common space with `sum A_i* A_i = id`,
/// plus a unit vacuum vector.
#[derive(Clone, Debug)]
pub struct PythModule {
    pub name: String,
    members: Vec<Op>,
    vacuum: CVec,
    dim: Option<usize>,
    pool: Vec<Label>,
}

/// Depth of the default label ball used to sample sparse modules.
pub const SAMPLE_DEPTH: usize = 12;
/// Upper bound on the number of labels in a sampled ball.
pub const SAMPLE_CAP: usize = 20_000;

impl PythModule {
    /// Builds a module from square matrices of a common size.
    pub fn dense(
        name: &str,
        matrices: Vec<DMatrix<C64>>,
        vacuum: DVector<C64>,
    ) -> Result<PythModule> {
        if matrices.len() < 2 {
            return Err(Error::InvalidParams(
                "a module needs at least two members".into(),
            ));
        }
        let d = vacuum.len();
        for (i, m) in matrices.iter().enumerate() {
            if m.nrows() != d || m.ncols() != d {
                return Err(Error::DimensionMismatch(format!(
                    "member {} is {}x{}, vacuum has dimension {d}",
                    i + 1,
                    m.nrows(),
                    m.ncols()
                )));
            }
        }
        check_unit(vacuum.norm())?;
        Ok(PythModule {
            name: name.to_string(),
            members: matrices.into_iter().map(Op::Dense).collect(),
            vacuum: CVec::Dense(vacuum),
            dim: Some(d),
            pool: (0..d as i64).map(Label::Int).collect(),
        })
    }

    /// Builds a module from basis rules. The adjoint rules are checked
    /// against the forward rules on the label ball around the vacuum.
    pub fn sparse(name: &str, ops: Vec<SparseOp>, vacuum: CVec) -> Result<PythModule> {
        if ops.len() < 2 {
            return Err(Error::InvalidParams(
                "a module needs at least two members".into(),
            ));
        }
        if vacuum.is_dense() {
            return Err(Error::DimensionMismatch(
                "sparse module needs a sparse vacuum".into(),
            ));
        }
        check_unit(vacuum.norm())?;
        let mut m = PythModule {
            name: name.to_string(),
            members: ops.into_iter().map(Op::Sparse).collect(),
            vacuum,
            dim: None,
            pool: Vec::new(),
        };
        let ball = m.label_ball(SAMPLE_DEPTH, SAMPLE_CAP);
        let res = m.adjoint_residual(&ball);
        if res > 1e-12 {
            return Err(Error::AdjointInconsistent { residual: res });
        }
        m.pool = m.label_ball(3, 64);
        Ok(m)
    }

    pub fn arity(&self) -> usize {
        self.members.len()
    }

    pub fn members(&self) -> &[Op] {
        &self.members
    }

    pub fn member(&self, i: usize) -> &Op {
        &self.members[i]
    }

    pub fn vacuum(&self) -> &CVec {
        &self.vacuum
    }

    pub fn dim(&self) -> Option<usize> {
        self.dim
    }

    pub fn is_dense(&self) -> bool {
        self.dim.is_some()
    }

    /// Same operators with another vacuum.
    pub fn with_vacuum(&self, vacuum: CVec) -> Result<PythModule> {
        self.check_vec(&vacuum)?;
        check_unit(vacuum.norm())?;
        let mut m = self.clone();
        m.vacuum = vacuum;
        if !m.is_dense() {
            m.pool = m.label_ball(3, 64);
        }
        Ok(m)
    }

    pub fn renamed(mut self, name: &str) -> PythModule {
        self.name = name.to_string();
        self
    }

    /// Multiplies member `i` (0-based) by `s`; used to build broken modules.
    pub fn scale_member(&self, i: usize, s: f64) -> PythModule {
        let mut m = self.clone();
        m.members[i] = m.members[i].scaled(c(s, 0.0));
        m
    }

    pub fn zero(&self) -> CVec {
        self.vacuum.zeros_like()
    }

    pub fn check_vec(&self, v: &CVec) -> Result<()> {
        match (self.dim, v) {
            (Some(d), CVec::Dense(x)) if x.len() == d => Ok(()),
            (None, CVec::Sparse(_)) => Ok(()),
            (Some(d), _) => Err(Error::DimensionMismatch(format!(
                "expected a dense vector of dimension {d}"
            ))),
            (None, _) => Err(Error::DimensionMismatch("expected a sparse vector".into())),
        }
    }

    pub fn apply(&self, i: usize, v: &CVec) -> CVec {
        self.members[i].apply(v)
    }

    pub fn apply_adjoint(&self, i: usize, v: &CVec) -> CVec {
        self.members[i].apply_adjoint(v)
    }

    /// Applies `word[0]` first, then `word[1]`, and so on.
    pub fn apply_word(&self, word: &[u8], v: &CVec) -> CVec {
        word.iter()
            .fold(v.clone(), |acc, &i| self.apply(i as usize, &acc))
    }

    /// Adjoint of [`apply_word`](Self::apply_word): the last letter's
    /// adjoint acts first.
    pub fn apply_word_adjoint(&self, word: &[u8], v: &CVec) -> CVec {
        word.iter()
            .rev()
            .fold(v.clone(), |acc, &i| self.apply_adjoint(i as usize, &acc))
    }

    /// Labels reachable from the vacuum support by at most `depth`
    /// applications of members and adjoints, capped at `cap` labels.
    pub fn label_ball(&self, depth: usize, cap: usize) -> Vec<Label> {
        let mut seen: BTreeSet<Label> = BTreeSet::new();
        let mut queue: VecDeque<(Label, usize)> = VecDeque::new();
        for l in self.vacuum.support() {
            if seen.insert(l.clone()) {
                queue.push_back((l, 0));
            }
        }
        while let Some((l, d)) = queue.pop_front() {
            if d == depth || seen.len() >= cap {
                continue;
            }
            for op in &self.members {
                let Op::Sparse(s) = op else { continue };
                for (k, _) in s.image(&l).into_iter().chain(s.adjoint_image(&l)) {
                    if seen.len() >= cap {
                        break;
                    }
                    if seen.insert(k.clone()) {
                        queue.push_back((k, d + 1));
                    }
                }
            }
        }
        seen.into_iter().collect()
    }

    /// Basis vectors on which relations are checked: the full basis for
    /// dense modules and the default label ball for sparse ones.
    pub fn sample_basis(&self) -> Vec<CVec> {
        match self.dim {
            Some(d) => (0..d).map(|i| CVec::basis(d, i)).collect(),
            None => self
                .label_ball(SAMPLE_DEPTH, SAMPLE_CAP)
                .into_iter()
                .map(CVec::delta)
                .collect(),
        }
    }

    /// Max over basis labels of the mismatch between forward and adjoint rules.
    pub fn adjoint_residual(&self, ball: &[Label]) -> f64 {
        let mut worst: f64 = 0.0;
        for op in &self.members {
            let Op::Sparse(s) = op else { continue };
            for v in ball {
                for (w, a) in s.image(v) {
                    let back: C64 = s
                        .adjoint_image(&w)
                        .into_iter()
                        .filter(|(k, _)| k == v)
                        .map(|(_, z)| z)
                        .sum();
                    worst = worst.max((a - back.conj()).norm());
                }
                for (w, a) in s.adjoint_image(v) {
                    let fwd: C64 = s
                        .image(&w)
                        .into_iter()
                        .filter(|(k, _)| k == v)
                        .map(|(_, z)| z)
                        .sum();
                    worst = worst.max((a - fwd.conj()).norm());
                }
            }
        }
        worst
    }

    /// A random vector of norm 1 (dense: Gaussian-like entries; sparse:
    /// a random combination of a few labels near the vacuum).
    pub fn random_vector<R: Rng + ?Sized>(&self, rng: &mut R) -> CVec {
        let v = match self.dim {
            Some(d) => CVec::Dense(DVector::from_fn(d, |_, _| {
                c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
            })),
            None => {
                let k = rng.gen_range(1..=3.min(self.pool.len()).max(1));
                let mut m = BTreeMap::new();
                for _ in 0..k {
                    let l = self.pool[rng.gen_range(0..self.pool.len())].clone();
                    m.insert(l, c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
                }
                CVec::Sparse(m)
            }
        };
        let n = v.norm();
        if n < 1e-6 {
            return self.vacuum.clone();
        }
        v.scale(c(1.0 / n, 0.0))
    }
}

fn check_unit(n: f64) -> Result<()> {
    if (n - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidParams(format!(
            "vacuum must be a unit vector, norm is {n}"
        )));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct RelationReport {
    pub max_residual: f64,
    pub samples: usize,
}

impl RelationReport {
    pub fn pass(&self, tol: f64) -> bool {
        self.max_residual <= tol
    }
}

/// `max_v || sum_i A_i* A_i v - v ||` over the samples.
pub fn check_pythagorean(m: &PythModule, samples: &[CVec]) -> Result<RelationReport> {
    if samples.is_empty() {
        return Err(Error::Precondition("no sample vectors".into()));
    }
    let mut worst: f64 = 0.0;
    for v in samples {
        m.check_vec(v)?;
        let mut acc = m.zero();
        for i in 0..m.arity() {
            acc = acc.add(&m.apply_adjoint(i, &m.apply(i, v)));
        }
        worst = worst.max(acc.dist(v));
    }
    Ok(RelationReport {
        max_residual: worst,
        samples: samples.len(),
    })
}

/// `max || A_i A_j* v - delta_ij v ||` over the samples; zero exactly when the
/// adjoints of the members are Cuntz isometries on the sampled domain.
pub fn check_cuntz(m: &PythModule, samples: &[CVec]) -> Result<RelationReport> {
    if samples.is_empty() {
        return Err(Error::Precondition("no sample vectors".into()));
    }
    let mut worst: f64 = 0.0;
    for v in samples {
        m.check_vec(v)?;
        for i in 0..m.arity() {
            for j in 0..m.arity() {
                let w = m.apply(i, &m.apply_adjoint(j, v));
                let r = if i == j { w.dist(v) } else { w.norm() };
                worst = worst.max(r);
            }
        }
    }
    Ok(RelationReport {
        max_residual: worst,
        samples: samples.len(),
    })
}

/// Member-wise direct sum. The vacuum is `(O1 + O2) / sqrt 2`.
pub fn direct_sum(m1: &PythModule, m2: &PythModule) -> Result<PythModule> {
    if m1.arity() != m2.arity() {
        return Err(Error::IncompatibleArity {
            left: m1.arity(),
            right: m2.arity(),
        });
    }
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let name = format!("{} + {}", m1.name, m2.name);
    if let (Some(d1), Some(d2)) = (m1.dim, m2.dim) {
        let mats = m1
            .members
            .iter()
            .zip(&m2.members)
            .map(|(a, b)| {
                let (Op::Dense(a), Op::Dense(b)) = (a, b) else {
                    unreachable!()
                };
                let mut m = DMatrix::zeros(d1 + d2, d1 + d2);
                m.view_mut((0, 0), (d1, d1)).copy_from(a);
                m.view_mut((d1, d1), (d2, d2)).copy_from(b);
                m
            })
            .collect();
        let (CVec::Dense(o1), CVec::Dense(o2)) = (&m1.vacuum, &m2.vacuum) else {
            unreachable!()
        };
        let mut o = DVector::zeros(d1 + d2);
        o.rows_mut(0, d1).copy_from(&(o1 * c(s, 0.0)));
        o.rows_mut(d1, d2).copy_from(&(o2 * c(s, 0.0)));
        return PythModule::dense(&name, mats, o);
    }
    let ops = m1
        .members
        .iter()
        .zip(&m2.members)
        .enumerate()
        .map(|(i, (a, b))| {
            let (a, b) = (a.clone(), b.clone());
            let (a2, b2) = (a.clone(), b.clone());
            SparseOp::new(
                &format!("A{}", i + 1),
                move |l| block_rule(&a, &b, l, false),
                move |l| block_rule(&a2, &b2, l, true),
            )
        })
        .collect();
    let vac = m1
        .vacuum
        .tagged(0)
        .scale(c(s, 0.0))
        .add(&m2.vacuum.tagged(1).scale(c(s, 0.0)));
    PythModule::sparse(&name, ops, vac)
}

fn block_rule(a: &Op, b: &Op, l: &Label, adjoint: bool) -> Vec<(Label, C64)> {
    let Label::Tagged(tag, inner) = l else {
        return Vec::new();
    };
    let op = if *tag == 0 { a } else { b };
    let v = match op {
        Op::Dense(m) => CVec::basis(
            m.nrows(),
            match **inner {
                Label::Int(i) => i as usize,
                _ => return Vec::new(),
            },
        ),
        Op::Sparse(_) => CVec::delta((**inner).clone()),
    };
    let w = if adjoint {
        op.apply_adjoint(&v)
    } else {
        op.apply(&v)
    };
    match w.to_sparse() {
        CVec::Sparse(m) => m
            .into_iter()
            .map(|(k, z)| (Label::Tagged(*tag, Box::new(k)), z))
            .collect(),
        CVec::Dense(_) => unreachable!(),
    }
}

#[derive(Deserialize)]
struct JsonMatrix {
    re: Vec<Vec<f64>>,
    #[serde(default)]
    im: Option<Vec<Vec<f64>>>,
}

#[derive(Deserialize)]
struct JsonVector {
    re: Vec<f64>,
    #[serde(default)]
    im: Option<Vec<f64>>,
}

#[derive(Deserialize)]
struct JsonModule {
    #[serde(default)]
    name: Option<String>,
    members: Vec<JsonMatrix>,
    vacuum: JsonVector,
}

/// Loads a dense module from JSON:
/// `{"members": [{"re": [[..]], "im": [[..]]}, ..], "vacuum": {"re": [..], "im": [..]}}`.
/// The `im` parts are optional.
pub fn dense_module_from_json(text: &str) -> Result<PythModule> {
    let j: JsonModule = serde_json::from_str(text)
        .map_err(|e| Error::InvalidParams(format!("module json: {e}")))?;
    let d = j.vacuum.re.len();
    let mut mats = Vec::new();
    for (k, m) in j.members.iter().enumerate() {
        if m.re.len() != d || m.re.iter().any(|r| r.len() != d) {
            return Err(Error::DimensionMismatch(format!(
                "member {} is not {d}x{d}",
                k + 1
            )));
        }
        let im = m.im.clone().unwrap_or_else(|| vec![vec![0.0; d]; d]);
        if im.len() != d || im.iter().any(|r| r.len() != d) {
            return Err(Error::DimensionMismatch(format!(
                "imaginary part of member {} is not {d}x{d}",
                k + 1
            )));
        }
        mats.push(DMatrix::from_fn(d, d, |r, s| c(m.re[r][s], im[r][s])));
    }
    let vim = j.vacuum.im.clone().unwrap_or_else(|| vec![0.0; d]);
    if vim.len() != d {
        return Err(Error::DimensionMismatch(
            "vacuum parts differ in length".into(),
        ));
    }
    let vac = DVector::from_fn(d, |r, _| c(j.vacuum.re[r], vim[r]));
    PythModule::dense(j.name.as_deref().unwrap_or("file"), mats, vac)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(a: C64, b: C64) -> PythModule {
        PythModule::dense(
            "s",
            vec![
                DMatrix::from_element(1, 1, a),
                DMatrix::from_element(1, 1, b),
            ],
            DVector::from_element(1, c(1.0, 0.0)),
        )
        .unwrap()
    }

    #[test]
    fn scalar_relations() {
        let m = scalar(c(1.0, 0.0), c(0.0, 0.0));
        assert_eq!(
            check_pythagorean(&m, &m.sample_basis())
                .unwrap()
                .max_residual,
            0.0
        );
        for th in [0.0, 0.3, 1.2, 2.5f64] {
            let m = scalar(c(th.cos(), 0.0), c(th.sin(), 0.0));
            let r = check_pythagorean(&m, &m.sample_basis()).unwrap();
            assert!(r.pass(1e-15), "{th}: {}", r.max_residual);
        }
    }

    #[test]
    fn car_relations() {
        let a = DMatrix::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(0., 0.), c(0., 0.)]);
        let m = PythModule::dense(
            "car",
            vec![a.clone(), a.adjoint()],
            DVector::from_column_slice(&[c(0., 0.), c(1., 0.)]),
        )
        .unwrap();
        assert_eq!(
            check_pythagorean(&m, &m.sample_basis())
                .unwrap()
                .max_residual,
            0.0
        );
    }

    #[test]
    fn inner_convention() {
        let u = CVec::dense(&[c(0.0, 1.0)]);
        let v = CVec::dense(&[c(1.0, 0.0)]);
        assert_eq!(u.inner(&v), c(0.0, 1.0));
        assert_eq!(v.inner(&u), c(0.0, -1.0));
        let su = u.to_sparse();
        let sv = v.to_sparse();
        assert_eq!(su.inner(&sv), c(0.0, 1.0));
    }

    #[test]
    fn shift_adjoint() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let shift = SparseOp::new(
            "A",
            move |l| match l {
                Label::Int(k) => vec![(Label::Int(k + 1), c(s, 0.0))],
                _ => vec![],
            },
            move |l| match l {
                Label::Int(k) => vec![(Label::Int(k - 1), c(s, 0.0))],
                _ => vec![],
            },
        );
        let diag = SparseOp::new(
            "B",
            move |l| vec![(l.clone(), c(s, 0.0))],
            move |l| vec![(l.clone(), c(s, 0.0))],
        );
        let m = PythModule::sparse(
            "shift",
            vec![shift.clone(), diag.clone()],
            CVec::delta(Label::Int(0)),
        )
        .unwrap();
        let r = check_pythagorean(&m, &m.sample_basis()).unwrap();
        assert!(r.max_residual < 1e-15);
        // a broken adjoint is detected
        let bad = SparseOp::new(
            "A",
            move |l| match l {
                Label::Int(k) => vec![(Label::Int(k + 1), c(s, 0.0))],
                _ => vec![],
            },
            move |l| vec![(l.clone(), c(s, 0.0))],
        );
        assert!(matches!(
            PythModule::sparse("bad", vec![bad, diag], CVec::delta(Label::Int(0))),
            Err(Error::AdjointInconsistent { .. })
        ));
    }

    #[test]
    fn sums() {
        let t = scalar(c(1.0, 0.0), c(0.0, 0.0));
        let s = direct_sum(&t, &t).unwrap();
        assert_eq!(s.dim(), Some(2));
        assert_eq!(
            check_pythagorean(&s, &s.sample_basis())
                .unwrap()
                .max_residual,
            0.0
        );
        let broken = t.scale_member(0, 1.01);
        let bs = direct_sum(&t, &broken).unwrap();
        let r1 = check_pythagorean(&broken, &broken.sample_basis())
            .unwrap()
            .max_residual;
        let r2 = check_pythagorean(&bs, &bs.sample_basis())
            .unwrap()
            .max_residual;
        assert!((r1 - r2).abs() < 1e-15 && (r1 - 0.0201).abs() < 1e-12);
    }

    #[test]
    fn json_loader() {
        let text = r#"{"members": [{"re": [[0.6]]}, {"re": [[0]], "im": [[0.8]]}], "vacuum": {"re": [1]}}"#;
        let m = dense_module_from_json(text).unwrap();
        assert!(check_pythagorean(&m, &m.sample_basis())
            .unwrap()
            .pass(1e-15));
        assert!(dense_module_from_json(
            r#"{"members": [{"re": [[1, 0]]}], "vacuum": {"re": [1]}}"#
        )
        .is_err());
    }
}
