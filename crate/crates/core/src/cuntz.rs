//! Cuntz isometries on the direct limit, the unitary `U_beta` for modules
//! whose member adjoints are Cuntz isometries, and Nekrashevych word sums.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::exec::{self, Strategy};
use crate::opalg::{c, check_cuntz, CVec, Label, PythModule, SparseOp, C64};
use crate::rep::LimitVec;
use crate::thompson::FracElement;
use crate::trees::{Node, Tree};

fn with_root_caret(x: &LimitVec) -> Result<LimitVec> {
    if x.tree().is_leaf() {
        x.refine_to(&Tree::caret(x.tree().arity()))
    } else {
        Ok(x.clone())
    }
}

/// `C_i`: the `i`-th block of a vector whose tree starts with a caret.
pub fn dilation_c(i: usize, x: &LimitVec) -> Result<LimitVec> {
    let arity = x.tree().arity();
    if i >= arity {
        return Err(Error::IndexOutOfRange {
            index: i + 1,
            len: arity,
        });
    }
    let x = with_root_caret(x)?;
    let Node::Branch(children) = x.tree().root() else {
        unreachable!("refined to a caret")
    };
    let mut start = 0;
    for (k, child) in children.iter().enumerate() {
        let sub = Tree::from_node(arity, child.clone());
        let n = sub.leaves();
        if k == i {
            return LimitVec::new(
                x.module().clone(),
                sub,
                x.parts()[start..start + n].to_vec(),
            );
        }
        start += n;
    }
    unreachable!()
}

/// `C_i*`: places `x` under the `i`-th leaf of a caret, zero elsewhere.
pub fn dilation_c_star(i: usize, x: &LimitVec) -> Result<LimitVec> {
    let arity = x.tree().arity();
    if i >= arity {
        return Err(Error::IndexOutOfRange {
            index: i + 1,
            len: arity,
        });
    }
    let m = x.module();
    let mut children = vec![Node::Leaf; arity];
    children[i] = x.tree().root().clone();
    let tree = Tree::from_node(arity, Node::Branch(children.into_boxed_slice()));
    let mut parts = Vec::with_capacity(tree.leaves());
    for k in 0..arity {
        if k == i {
            parts.extend_from_slice(x.parts());
        } else {
            parts.push(m.zero());
        }
    }
    LimitVec::new(m.clone(), tree, parts)
}

/// Max of `|| C_i C_j* x - delta_ij x ||` and `|| sum_i C_i* C_i x - x ||`.
pub fn dilation_relation_residual(x: &LimitVec) -> Result<f64> {
    let n = x.tree().arity();
    let mut worst: f64 = 0.0;
    for j in 0..n {
        let s = dilation_c_star(j, x)?;
        for i in 0..n {
            let y = dilation_c(i, &s)?;
            let r = if i == j { y.dist(x)? } else { y.norm() };
            worst = worst.max(r);
        }
    }
    let mut acc = LimitVec::zero(x.module().clone());
    for i in 0..n {
        acc = acc.axpy(c(1.0, 0.0), &dilation_c_star(i, &dilation_c(i, x)?)?)?;
    }
    Ok(worst.max(acc.dist(x)?))
}

/// The orthogonal projection onto root vectors, read as a coefficient vector:
/// `(t, eta) -> sum_l (A^t_l)* eta_l`.
pub fn project_root(x: &LimitVec) -> CVec {
    let m = x.module();
    let mut acc = m.zero();
    for (a, v) in x.tree().leaf_addresses().iter().zip(x.parts()) {
        acc = acc.add(&m.apply_word_adjoint(&a.digits, v));
    }
    acc
}

#[derive(Clone, Debug, PartialEq)]
pub struct CompressionReport {
    /// `max || C_i p x - p C_i p x ||`
    pub invariance: f64,
    /// `max || p C_i* p x - A_i* p x ||`
    pub compression: f64,
    pub samples: usize,
}

impl CompressionReport {
    pub fn pass(&self, tol: f64) -> bool {
        self.invariance <= tol && self.compression <= tol
    }
}

/// Checks that root vectors are invariant under every `C_i` and that the
/// compression of `C_i*` to root vectors is `A_i*`.
pub fn compression_check(m: &Arc<PythModule>, samples: &[CVec]) -> Result<CompressionReport> {
    if samples.is_empty() {
        return Err(Error::Precondition("no sample vectors".into()));
    }
    let mut inv: f64 = 0.0;
    let mut comp: f64 = 0.0;
    for v in samples {
        let r = LimitVec::root(m.clone(), v.clone())?;
        for i in 0..m.arity() {
            let y = dilation_c(i, &r)?;
            let py = LimitVec::root(m.clone(), project_root(&y))?;
            inv = inv.max(y.dist(&py)?);
            let z = project_root(&dilation_c_star(i, &r)?);
            comp = comp.max(z.dist(&m.apply_adjoint(i, v)));
        }
    }
    Ok(CompressionReport {
        invariance: inv,
        compression: comp,
        samples: samples.len(),
    })
}

/// Matrix of `xi -> p C_i* (root, xi)` for dense modules.
pub fn compressed_matrix(m: &Arc<PythModule>, i: usize) -> Result<DMatrix<C64>> {
    let d = m
        .dim()
        .ok_or_else(|| Error::Precondition("matrix form needs a dense module".into()))?;
    let mut out = DMatrix::zeros(d, d);
    for k in 0..d {
        let r = LimitVec::root(m.clone(), CVec::basis(d, k))?;
        let CVec::Dense(col) = project_root(&dilation_c_star(i, &r)?) else {
            unreachable!()
        };
        out.set_column(k, &col);
    }
    Ok(out)
}

fn int_label(l: &Label) -> i64 {
    match l {
        Label::Int(k) => *k,
        _ => panic!("interleave module has integer labels"),
    }
}

/// `l^2(Z)` with `S_1 d_k = d_{2k}`, `S_2 d_k = d_{2k+1}` and members `A_i = S_i*`.
pub fn interleave_cuntz_module() -> PythModule {
    let ops = (0..2i64)
        .map(|r| {
            SparseOp::new(
                &format!("S{}*", r + 1),
                move |l: &Label| {
                    let k = int_label(l);
                    if k.rem_euclid(2) == r {
                        vec![(Label::Int(k.div_euclid(2)), c(1.0, 0.0))]
                    } else {
                        vec![]
                    }
                },
                move |l: &Label| vec![(Label::Int(2 * int_label(l) + r), c(1.0, 0.0))],
            )
        })
        .collect();
    PythModule::sparse("interleave", ops, CVec::delta(Label::Int(0)))
        .expect("interleave rules are adjoint")
        .renamed("interleave")
}

/// A module that passed the Cuntz check on its sample domain.
#[derive(Clone, Debug)]
pub struct CuntzModule {
    module: Arc<PythModule>,
    residual: f64,
}

pub const CUNTZ_TOL: f64 = 1e-12;

impl CuntzModule {
    pub fn new(module: Arc<PythModule>) -> Result<CuntzModule> {
        let rep = check_cuntz(&module, &module.sample_basis())?;
        if !rep.pass(CUNTZ_TOL) {
            return Err(Error::NotCuntz {
                residual: rep.max_residual,
            });
        }
        Ok(CuntzModule {
            module,
            residual: rep.max_residual,
        })
    }

    pub fn module(&self) -> &Arc<PythModule> {
        &self.module
    }

    pub fn residual(&self) -> f64 {
        self.residual
    }

    fn check_touched(&self, vs: &[CVec]) -> Result<()> {
        let mut basis = Vec::new();
        for v in vs {
            match v {
                CVec::Sparse(map) => basis.extend(map.keys().cloned().map(CVec::delta)),
                CVec::Dense(_) => return Ok(()),
            }
        }
        if basis.is_empty() {
            return Ok(());
        }
        let rep = check_cuntz(&self.module, &basis)?;
        if !rep.pass(CUNTZ_TOL) {
            return Err(Error::NotCuntz {
                residual: rep.max_residual,
            });
        }
        Ok(())
    }
}

/// `U_beta (t, eta) = sum_l (A^t_l)* eta_l`.
pub fn u_beta(cm: &CuntzModule, x: &LimitVec) -> Result<CVec> {
    if !Arc::ptr_eq(cm.module(), x.module()) {
        return Err(Error::ModuleMismatch);
    }
    cm.check_touched(x.parts())?;
    Ok(project_root(x))
}

/// `U_beta^{-1}`: a coefficient vector as a root vector.
pub fn u_beta_inverse(cm: &CuntzModule, v: &CVec) -> Result<LimitVec> {
    LimitVec::root(cm.module().clone(), v.clone())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Letter {
    /// 0-based generator index.
    pub index: usize,
    pub star: bool,
}

/// A formal sum of words in `S_i` and `S_i*`; the leftmost letter acts last.
#[derive(Clone, Debug, PartialEq)]
pub struct CuntzWordSum {
    pub terms: Vec<(C64, Vec<Letter>)>,
}

impl fmt::Display for CuntzWordSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (z, word)) in self.terms.iter().enumerate() {
            if k > 0 {
                write!(f, " + ")?;
            }
            if (*z - c(1.0, 0.0)).norm() > 0.0 {
                write!(f, "({}{:+}i) ", z.re, z.im)?;
            }
            if word.is_empty() {
                write!(f, "1")?;
            }
            for (n, l) in word.iter().enumerate() {
                if n > 0 {
                    write!(f, " ")?;
                }
                write!(f, "S{}{}", l.index + 1, if l.star { "*" } else { "" })?;
            }
        }
        Ok(())
    }
}

/// `sum_l (A^top_l)* A^bottom_{perm l}` written with `A_i = S_i*`.
pub fn nekrashevych(g: &FracElement) -> CuntzWordSum {
    let top = g.top().leaf_addresses();
    let bottom = g.bottom().leaf_addresses();
    let terms = g
        .perm()
        .iter()
        .enumerate()
        .map(|(l, &b)| {
            let mut word: Vec<Letter> = top[l]
                .digits
                .iter()
                .map(|&d| Letter {
                    index: d as usize,
                    star: false,
                })
                .collect();
            word.extend(bottom[b].digits.iter().rev().map(|&d| Letter {
                index: d as usize,
                star: true,
            }));
            (c(1.0, 0.0), word)
        })
        .collect();
    CuntzWordSum { terms }
}

fn apply_letters(m: &PythModule, word: &[Letter], v: &CVec) -> CVec {
    let mut w = v.clone();
    for l in word.iter().rev() {
        w = if l.star {
            m.apply(l.index, &w)
        } else {
            m.apply_adjoint(l.index, &w)
        };
    }
    w
}

/// Evaluates the word sum with `S_i = A_i*`.
pub fn evaluate(sum: &CuntzWordSum, cm: &CuntzModule, v: &CVec) -> Result<CVec> {
    evaluate_with(sum, cm, v, Strategy::default())
}

pub fn evaluate_with(
    sum: &CuntzWordSum,
    cm: &CuntzModule,
    v: &CVec,
    strategy: Strategy,
) -> Result<CVec> {
    let m = cm.module();
    m.check_vec(v)?;
    if let Some(l) = sum
        .terms
        .iter()
        .flat_map(|t| &t.1)
        .find(|l| l.index >= m.arity())
    {
        return Err(Error::IndexOutOfRange {
            index: l.index + 1,
            len: m.arity(),
        });
    }
    cm.check_touched(std::slice::from_ref(v))?;
    let parts = exec::map(strategy, &sum.terms, |(z, word)| {
        apply_letters(m, word, v).scale(*z)
    });
    Ok(parts.iter().fold(m.zero(), |acc, p| acc.add(p)))
}
