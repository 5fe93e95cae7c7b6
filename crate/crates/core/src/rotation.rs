//! Rotations `r_n` and their weak limits.
//!
//! For a scalar module `(a, b)` with `omega = a * conj(b)` the limits of
//! `<pi(r_n^j) Omega, Omega>` are the numbers `x_j`, with
//! `x_1 = conj(omega) / (1 - omega)`, `x_{2k} = x_k` and
//! `x_{2k+1} = conj(omega) x_k + omega x_{k+1}`.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::exec::{self, Strategy};
use crate::opalg::{CVec, PythModule, C64};
use crate::rep::{act, LimitVec};
use crate::thompson::{rotation, ROTATION_CAP};
use crate::trees::full_tree;

pub fn omega(a: C64, b: C64) -> C64 {
    a * b.conj()
}

fn require_binary(m: &PythModule) -> Result<()> {
    if m.arity() != 2 {
        return Err(Error::IncompatibleArity {
            left: m.arity(),
            right: 2,
        });
    }
    Ok(())
}

/// `<(B*)^n A^n xi, eta>` for `n = 1..=n_max`.
pub fn weak_decay(m: &PythModule, xi: &CVec, eta: &CVec, n_max: usize) -> Result<Vec<C64>> {
    require_binary(m)?;
    m.check_vec(xi)?;
    m.check_vec(eta)?;
    let mut a = xi.clone();
    let mut b = eta.clone();
    let mut out = Vec::with_capacity(n_max);
    for _ in 0..n_max {
        a = m.apply(0, &a);
        b = m.apply(1, &b);
        out.push(a.inner(&b));
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug)]
pub struct RotationOpts {
    pub n_max: usize,
    /// Stop once two successive values differ by less than this.
    pub tol: f64,
    pub stop_early: bool,
    pub strategy: Strategy,
}

impl Default for RotationOpts {
    fn default() -> Self {
        RotationOpts {
            n_max: 20,
            tol: 1e-10,
            stop_early: true,
            strategy: Strategy::default(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct RotationSequence {
    pub j: i64,
    /// `(n, <pi(r_n^j) xi, eta>)`.
    pub values: Vec<(usize, C64)>,
    pub converged: bool,
}

impl RotationSequence {
    pub fn last(&self) -> C64 {
        self.values.last().map(|v| v.1).unwrap_or_default()
    }
}

/// `<pi(r_n^j) xi, eta>` for `n = 1, 2, ...` until successive values agree
/// to `opts.tol` or `n_max` is reached.
pub fn empirical_rotation_limit(
    j: i64,
    xi: &LimitVec,
    eta: &LimitVec,
    opts: RotationOpts,
) -> Result<RotationSequence> {
    require_binary(xi.module())?;
    if opts.n_max > ROTATION_CAP {
        return Err(Error::CapExceeded {
            what: "rotation level",
            requested: opts.n_max,
            cap: ROTATION_CAP,
        });
    }
    let mut values: Vec<(usize, C64)> = Vec::new();
    let mut converged = false;
    for n in 1..=opts.n_max {
        let v = rotation_coefficient(n, j, xi, eta, opts.strategy)?;
        if let Some(&(_, prev)) = values.last() {
            if (v - prev).norm() < opts.tol {
                converged = true;
            }
        }
        values.push((n, v));
        if converged && opts.stop_early {
            break;
        }
    }
    Ok(RotationSequence {
        j,
        values,
        converged,
    })
}

/// `<pi(r_n^j) xi, eta>`. When both trees fit inside the full tree `t_n`
/// the rotation is a cyclic shift of the leaf vectors on `t_n`.
pub fn rotation_coefficient(
    n: usize,
    j: i64,
    xi: &LimitVec,
    eta: &LimitVec,
    strategy: Strategy,
) -> Result<C64> {
    if xi.tree().height() > n || eta.tree().height() > n {
        let g = rotation(n)?.pow(j)?;
        return act(&g, xi)?.inner(eta);
    }
    let t = full_tree(n, 2);
    let x = xi.refine_to(&t)?;
    let y = eta.refine_to(&t)?;
    let len = 1usize << n;
    let k = j.rem_euclid(len as i64) as usize;
    let (xp, yp) = (x.parts(), y.parts());
    let terms = exec::map_range(strategy, len, |l| xp[(l + k) % len].inner(&yp[l]));
    Ok(terms.into_iter().sum())
}

pub fn x1(omega: C64) -> C64 {
    omega.conj() / (C64::new(1.0, 0.0) - omega)
}

/// Largest `j` accepted by the `x_j` routines.
pub const XJ_CAP: u64 = 1 << 20;

fn check_j(j: u64, omega: C64) -> Result<()> {
    if j == 0 {
        return Err(Error::InvalidParams("j must be at least 1".into()));
    }
    if j > XJ_CAP {
        return Err(Error::CapExceeded {
            what: "x_j index",
            requested: j as usize,
            cap: XJ_CAP as usize,
        });
    }
    if omega.norm() > 0.5 + 1e-12 {
        return Err(Error::InvalidParams(format!(
            "|omega| = {} exceeds 1/2",
            omega.norm()
        )));
    }
    Ok(())
}

/// `x_j` by the recursion on `j`.
pub fn xj_recursive(j: u64, omega: C64) -> Result<C64> {
    check_j(j, omega)?;
    fn go(j: u64, w: C64, x1: C64, memo: &mut HashMap<u64, C64>) -> C64 {
        if let Some(&v) = memo.get(&j) {
            return v;
        }
        let v = if j == 1 {
            x1
        } else if j.is_multiple_of(2) {
            go(j / 2, w, x1, memo)
        } else {
            let k = j / 2;
            w.conj() * go(k, w, x1, memo) + w * go(k + 1, w, x1, memo)
        };
        memo.insert(j, v);
        v
    }
    Ok(go(j, omega, x1(omega), &mut HashMap::new()))
}

/// The tree `t(j)`: a node whose label has odd part `2k + 1` with `k > 0`
/// has children labelled `k` and `k + 1`; powers of two are leaves.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DecoratedTree {
    pub label: u64,
    pub children: Option<Box<(DecoratedTree, DecoratedTree)>>,
}

pub fn tj_tree(j: u64) -> Result<DecoratedTree> {
    check_j(j, C64::default())?;
    fn build(j: u64) -> DecoratedTree {
        let odd = j >> j.trailing_zeros();
        if odd == 1 {
            return DecoratedTree {
                label: j,
                children: None,
            };
        }
        let k = odd / 2;
        DecoratedTree {
            label: j,
            children: Some(Box::new((build(k), build(k + 1)))),
        }
    }
    Ok(build(j))
}

impl DecoratedTree {
    /// `(left turns, right turns)` for each leaf, left to right.
    pub fn leaf_turns(&self) -> Vec<(u32, u32)> {
        fn go(t: &DecoratedTree, l: u32, r: u32, out: &mut Vec<(u32, u32)>) {
            match &t.children {
                None => out.push((l, r)),
                Some(ch) => {
                    go(&ch.0, l + 1, r, out);
                    go(&ch.1, l, r + 1, out);
                }
            }
        }
        let mut out = Vec::new();
        go(self, 0, 0, &mut out);
        out
    }

    /// `sum over leaves of conj(omega)^l omega^r`.
    pub fn weight(&self, omega: C64) -> C64 {
        self.leaf_turns()
            .iter()
            .map(|&(l, r)| omega.conj().powu(l) * omega.powu(r))
            .sum()
    }
}

impl fmt::Display for DecoratedTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.children {
            None => write!(f, "{}", self.label),
            Some(ch) => write!(f, "{}({}, {})", self.label, ch.0, ch.1),
        }
    }
}

#[derive(Clone, Debug)]
pub struct XjResult {
    pub j: u64,
    pub value: C64,
    pub by_tree: C64,
    /// Set when `omega = 0`, where one of the scalars vanishes.
    pub degenerate: bool,
    pub tree: DecoratedTree,
}

/// `x_j` computed by the recursion and by the leaf sum over `t(j)`.
pub fn xj(j: u64, omega: C64) -> Result<XjResult> {
    check_j(j, omega)?;
    let tree = tj_tree(j)?;
    if omega.norm() == 0.0 {
        return Ok(XjResult {
            j,
            value: C64::default(),
            by_tree: C64::default(),
            degenerate: true,
            tree,
        });
    }
    let value = xj_recursive(j, omega)?;
    let by_tree = tree.weight(omega) * x1(omega);
    Ok(XjResult {
        j,
        value,
        by_tree,
        degenerate: false,
        tree,
    })
}

/// `x = A*B sum_m (B*A)^m`, the solution of `x (id - B*A) = A*B`, applied
/// lazily to vectors.
#[derive(Clone, Debug)]
pub struct CommutingLimit {
    module: Arc<PythModule>,
    pub commutator_residual: f64,
    pub equation_residual: f64,
    pub converged: bool,
    pub max_terms: usize,
}

const NEUMANN_TOL: f64 = 1e-14;
const NEUMANN_CAP: usize = 100_000;

impl CommutingLimit {
    /// `(x v, number of series terms, converged)`.
    pub fn apply_counted(&self, v: &CVec) -> (CVec, usize, bool) {
        neumann(&self.module, v)
    }

    pub fn apply(&self, v: &CVec) -> CVec {
        self.apply_counted(v).0
    }

    /// `<x xi, eta>`.
    pub fn coefficient(&self, xi: &CVec, eta: &CVec) -> C64 {
        self.apply(xi).inner(eta)
    }
}

fn neumann(m: &PythModule, v: &CVec) -> (CVec, usize, bool) {
    let mut sum = v.clone();
    let mut term = v.clone();
    let mut count = 1;
    let mut converged = false;
    while count < NEUMANN_CAP {
        term = m.apply_adjoint(1, &m.apply(0, &term));
        if term.norm() < NEUMANN_TOL {
            converged = true;
            break;
        }
        sum = sum.add(&term);
        count += 1;
    }
    let x = m.apply_adjoint(0, &m.apply(1, &sum));
    (x, count, converged)
}

/// Solves `x (id - B*A) = A*B` on the given domain after checking that
/// `A*B` commutes with `A, B, A*, B*` there.
pub fn solve_commuting_limit(
    m: &Arc<PythModule>,
    domain: &[CVec],
    tol: f64,
) -> Result<CommutingLimit> {
    require_binary(m)?;
    if domain.is_empty() {
        return Err(Error::Precondition("empty domain".into()));
    }
    let ab = |v: &CVec| m.apply_adjoint(0, &m.apply(1, v));
    let mut comm: f64 = 0.0;
    for v in domain {
        m.check_vec(v)?;
        for i in 0..2 {
            let x1 = ab(&m.apply(i, v)).sub(&m.apply(i, &ab(v)));
            let x2 = ab(&m.apply_adjoint(i, v)).sub(&m.apply_adjoint(i, &ab(v)));
            comm = comm.max(x1.norm()).max(x2.norm());
        }
    }
    if comm > tol {
        return Err(Error::HypothesisFailed(format!(
            "A*B does not commute with the members (residual {comm:e})"
        )));
    }
    let mut eq: f64 = 0.0;
    let mut all_conv = true;
    let mut max_terms = 0;
    for v in domain {
        let w = v.sub(&m.apply_adjoint(1, &m.apply(0, v)));
        let (xw, n, conv) = neumann(m, &w);
        eq = eq.max(xw.dist(&ab(v)));
        all_conv &= conv;
        max_terms = max_terms.max(n);
    }
    Ok(CommutingLimit {
        module: m.clone(),
        commutator_residual: comm,
        equation_residual: eq,
        converged: all_conv,
        max_terms,
    })
}
