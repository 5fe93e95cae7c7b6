//! The Pythagorean functor, direct-limit vectors and matrix coefficients.

use std::sync::Arc;

use rand::Rng;

use crate::error::{Error, Result};
use crate::exec::{self, Strategy};
use crate::opalg::{CVec, PythModule, C64};
use crate::thompson::FracElement;
use crate::trees::{self, common_refinement, Forest, Node, Tree};

/// Word of member indices along the path to leaf `leaf` (1-based); the
/// letter nearest the root acts first.
pub fn leaf_operator(t: &Tree, leaf: usize) -> Result<Vec<u8>> {
    Ok(t.leaf_address(leaf)?.digits)
}

fn expand(m: &PythModule, node: &Node, v: CVec, out: &mut Vec<CVec>) {
    match node {
        Node::Leaf => out.push(v),
        Node::Branch(ch) => {
            for (i, c) in ch.iter().enumerate() {
                expand(m, c, m.apply(i, &v), out);
            }
        }
    }
}

fn check_shape(m: &PythModule, arity: usize) -> Result<()> {
    if m.arity() != arity {
        return Err(Error::IncompatibleArity {
            left: m.arity(),
            right: arity,
        });
    }
    Ok(())
}

/// `Phi(f)` applied to one vector per root of `f`.
pub fn phi(m: &PythModule, f: &Forest, v: &[CVec]) -> Result<Vec<CVec>> {
    check_shape(m, f.arity())?;
    if v.len() != f.roots() {
        return Err(Error::ShapeMismatch(format!(
            "{} vectors for a forest with {} roots",
            v.len(),
            f.roots()
        )));
    }
    let mut out = Vec::with_capacity(f.leaves());
    for (t, x) in f.trees().iter().zip(v) {
        expand(m, t.root(), x.clone(), &mut out);
    }
    Ok(out)
}

/// `Phi(f)` computed generator by generator, following the definition on
/// the forests `f_{i,n}`.
pub fn phi_by_generators(m: &PythModule, f: &Forest, v: &[CVec]) -> Result<Vec<CVec>> {
    check_shape(m, f.arity())?;
    if v.len() != f.roots() {
        return Err(Error::ShapeMismatch(format!(
            "{} vectors for a forest with {} roots",
            v.len(),
            f.roots()
        )));
    }
    let mut cur = v.to_vec();
    for g in f.decompose() {
        let i = g.index - 1;
        let x = cur.remove(i);
        for k in (0..m.arity()).rev() {
            cur.insert(i, m.apply(k, &x));
        }
    }
    Ok(cur)
}

/// `(tree, leaf vectors)` representing a vector of the direct limit.
#[derive(Clone, Debug)]
pub struct LimitVec {
    module: Arc<PythModule>,
    tree: Tree,
    parts: Vec<CVec>,
}

impl LimitVec {
    pub fn new(module: Arc<PythModule>, tree: Tree, parts: Vec<CVec>) -> Result<LimitVec> {
        check_shape(&module, tree.arity())?;
        if parts.len() != tree.leaves() {
            return Err(Error::ShapeMismatch(format!(
                "{} vectors for a tree with {} leaves",
                parts.len(),
                tree.leaves()
            )));
        }
        for p in &parts {
            module.check_vec(p)?;
        }
        Ok(LimitVec {
            module,
            tree,
            parts,
        })
    }

    /// A coefficient-space vector sitting on the trivial tree.
    pub fn root(module: Arc<PythModule>, v: CVec) -> Result<LimitVec> {
        let t = Tree::leaf(module.arity());
        LimitVec::new(module, t, vec![v])
    }

    pub fn vacuum(module: Arc<PythModule>) -> LimitVec {
        let v = module.vacuum().clone();
        let t = Tree::leaf(module.arity());
        LimitVec {
            module,
            tree: t,
            parts: vec![v],
        }
    }

    pub fn zero(module: Arc<PythModule>) -> LimitVec {
        let v = module.zero();
        let t = Tree::leaf(module.arity());
        LimitVec {
            module,
            tree: t,
            parts: vec![v],
        }
    }

    /// A random vector on a random tree with `internal` carets.
    pub fn random<R: Rng + ?Sized>(
        module: Arc<PythModule>,
        rng: &mut R,
        internal: usize,
    ) -> LimitVec {
        let t = trees::random_tree(rng, internal, module.arity());
        let mut parts: Vec<CVec> = (0..t.leaves()).map(|_| module.random_vector(rng)).collect();
        let n: f64 = parts.iter().map(CVec::norm_sqr).sum::<f64>().sqrt();
        for p in &mut parts {
            *p = p.scale(C64::new(1.0 / n, 0.0));
        }
        LimitVec {
            module,
            tree: t,
            parts,
        }
    }

    pub fn module(&self) -> &Arc<PythModule> {
        &self.module
    }

    pub fn tree(&self) -> &Tree {
        &self.tree
    }

    pub fn parts(&self) -> &[CVec] {
        &self.parts
    }

    pub fn into_parts(self) -> (Tree, Vec<CVec>) {
        (self.tree, self.parts)
    }

    /// The same vector written on `compose(f, tree)`.
    pub fn refine(&self, f: &Forest) -> Result<LimitVec> {
        let tree = trees::compose(f, &Forest::from_tree(self.tree.clone()))?.into_single();
        let parts = phi(&self.module, f, &self.parts)?;
        Ok(LimitVec {
            module: self.module.clone(),
            tree,
            parts,
        })
    }

    /// The same vector written on `w`, which must refine the current tree.
    pub fn refine_to(&self, w: &Tree) -> Result<LimitVec> {
        if *w == self.tree {
            return Ok(self.clone());
        }
        let f = trees::growth_forest(&self.tree, w)
            .ok_or_else(|| Error::NotRefinable(w.serialize()))?;
        self.refine(&f)
    }

    fn same_module(&self, other: &LimitVec) -> Result<()> {
        if !Arc::ptr_eq(&self.module, &other.module) {
            return Err(Error::ModuleMismatch);
        }
        Ok(())
    }

    /// Both vectors written on their common refinement.
    pub fn align(&self, other: &LimitVec) -> Result<(LimitVec, LimitVec)> {
        self.same_module(other)?;
        let r = common_refinement(&self.tree, &other.tree)?;
        Ok((self.refine(&r.p)?, other.refine(&r.q)?))
    }

    pub fn inner(&self, other: &LimitVec) -> Result<C64> {
        if self.tree == other.tree {
            self.same_module(other)?;
            return Ok(self
                .parts
                .iter()
                .zip(&other.parts)
                .map(|(a, b)| a.inner(b))
                .sum());
        }
        let (a, b) = self.align(other)?;
        Ok(a.parts.iter().zip(&b.parts).map(|(x, y)| x.inner(y)).sum())
    }

    pub fn norm(&self) -> f64 {
        self.parts.iter().fold(0.0, |a, v| a + v.norm_sqr()).sqrt()
    }

    /// `self + s * other`, written on the common refinement.
    pub fn axpy(&self, s: C64, other: &LimitVec) -> Result<LimitVec> {
        let (a, b) = self.align(other)?;
        let parts = a
            .parts
            .iter()
            .zip(&b.parts)
            .map(|(x, y)| x.axpy(s, y))
            .collect();
        Ok(LimitVec {
            module: a.module,
            tree: a.tree,
            parts,
        })
    }

    pub fn scale(&self, s: C64) -> LimitVec {
        LimitVec {
            module: self.module.clone(),
            tree: self.tree.clone(),
            parts: self.parts.iter().map(|p| p.scale(s)).collect(),
        }
    }

    pub fn dist(&self, other: &LimitVec) -> Result<f64> {
        Ok(self.axpy(C64::new(-1.0, 0.0), other)?.norm())
    }

    /// Equality up to `tol * (1 + max norm)`.
    pub fn equal(&self, other: &LimitVec, tol: f64) -> Result<bool> {
        let d = self.dist(other)?;
        Ok(d <= tol * (1.0 + self.norm().max(other.norm())))
    }
}

/// `pi(g) x`: grow `g` and `x` to a common tree, then move the vector on
/// bottom leaf `perm[l]` to top leaf `l`.
pub fn act(g: &FracElement, x: &LimitVec) -> Result<LimitVec> {
    check_shape(&x.module, g.arity())?;
    let r = common_refinement(g.bottom(), &x.tree)?;
    let pair = g.pair().expand_bottom(&r.p)?;
    let xs = x.refine(&r.q)?;
    let parts = pair.perm.iter().map(|&b| xs.parts[b].clone()).collect();
    Ok(LimitVec {
        module: x.module.clone(),
        tree: pair.top,
        parts,
    })
}

/// `<pi(g) x, y>`.
pub fn coefficient(g: &FracElement, x: &LimitVec, y: &LimitVec) -> Result<C64> {
    act(g, x)?.inner(y)
}

/// `<pi(g) Omega, Omega>` via the direct-limit action.
pub fn vacuum_coefficient(g: &FracElement, m: &Arc<PythModule>) -> Result<C64> {
    let o = LimitVec::vacuum(m.clone());
    coefficient(g, &o, &o)
}

/// `<pi(g) Omega, Omega>` as a sum over leaves of path operators:
/// `sum_l < (A^top_l)* A^bottom_{perm l} Omega, Omega >`.
pub fn coefficient_pathsum(g: &FracElement, m: &PythModule) -> C64 {
    coefficient_pathsum_with(g, m, Strategy::Sequential)
}

pub fn coefficient_pathsum_with(g: &FracElement, m: &PythModule, strategy: Strategy) -> C64 {
    let top = g.top().leaf_addresses();
    let bottom = g.bottom().leaf_addresses();
    let omega = m.vacuum();
    let terms = exec::map_range(strategy, top.len(), |l| {
        let b = g.perm()[l];
        let v = m.apply_word(&bottom[b].digits, omega);
        let w = m.apply_word_adjoint(&top[l].digits, &v);
        w.inner(omega)
    });
    terms.into_iter().sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::opalg::c;
    use crate::thompson::{g0, rotation};
    use crate::trees::{full_tree, generator_forest};
    use nalgebra::{DMatrix, DVector};

    fn scalar(a: C64, b: C64) -> Arc<PythModule> {
        Arc::new(
            PythModule::dense(
                "s",
                vec![
                    DMatrix::from_element(1, 1, a),
                    DMatrix::from_element(1, 1, b),
                ],
                DVector::from_element(1, c(1.0, 0.0)),
            )
            .unwrap(),
        )
    }

    #[test]
    fn words() {
        let t = trees::parse_tree("((..).)", 2).unwrap();
        assert_eq!(leaf_operator(&Tree::caret(2), 1).unwrap(), vec![0]);
        assert_eq!(leaf_operator(&t, 2).unwrap(), vec![0, 1]);
        let u = trees::parse_tree("(.(..))", 2).unwrap();
        assert_eq!(leaf_operator(&u, 2).unwrap(), vec![1, 0]);
    }

    #[test]
    fn caret_phi() {
        let m = scalar(c(0.6, 0.0), c(0.0, 0.8));
        let out = phi(
            &m,
            &generator_forest(1, 1, 2).unwrap(),
            &[m.vacuum().clone()],
        )
        .unwrap();
        assert_eq!(out[0], CVec::dense(&[c(0.6, 0.0)]));
        assert_eq!(out[1], CVec::dense(&[c(0.0, 0.8)]));
    }

    #[test]
    fn g0_scalar_value() {
        let th: f64 = 0.3;
        let (cs, sn) = (th.cos(), th.sin());
        let m = scalar(c(cs, 0.0), c(sn, 0.0));
        let want = cs.powi(3) + sn * sn * cs * cs + sn.powi(3);
        let a = vacuum_coefficient(&g0(), &m).unwrap();
        let b = coefficient_pathsum(&g0(), &m);
        assert!((a.re - want).abs() < 1e-14 && a.im.abs() < 1e-14);
        assert!((b - a).norm() < 1e-14);
    }

    #[test]
    fn rotation_shifts_left() {
        let m = scalar(c(0.6, 0.0), c(0.8, 0.0));
        let t = full_tree(2, 2);
        let parts: Vec<CVec> = (0..4).map(|i| CVec::real(&[i as f64])).collect();
        let x = LimitVec::new(m.clone(), t.clone(), parts.clone()).unwrap();
        let y = act(&rotation(2).unwrap(), &x).unwrap();
        assert_eq!(y.tree(), &t);
        let want: Vec<CVec> = (0..4).map(|i| parts[(i + 1) % 4].clone()).collect();
        assert_eq!(y.parts(), want.as_slice());
    }

    #[test]
    fn quarter_rotation_display() {
        let m = scalar(c(0.3, 0.4), c(0.5, -std::f64::consts::FRAC_1_SQRT_2));
        let (a, b) = (c(0.3, 0.4), c(0.5, -std::f64::consts::FRAC_1_SQRT_2));
        let want = a.conj() * a.conj() * b * a
            + a.conj() * b.conj() * a * b
            + b.conj() * a.conj() * b * b
            + b.conj() * b.conj() * a * a;
        let r = rotation(2).unwrap();
        assert!((coefficient_pathsum(&r, &m) - want).norm() < 1e-14);
        assert!((vacuum_coefficient(&r, &m).unwrap() - want).norm() < 1e-14);
    }
}
