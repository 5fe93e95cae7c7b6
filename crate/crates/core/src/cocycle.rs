//! The L^2 model for modules `A = u / sqrt 2`, `B = v / sqrt 2` with `u, v`
//! unitary: the isometry `R` onto dyadic step functions, the cocycle
//! `U(g, J)` and the action `sigma` of F on step functions.

use std::fmt::Write as _;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::opalg::{c, CVec, PythModule, C64};
use crate::rep::LimitVec;
use crate::thompson::{Flavor, FracElement};
use crate::trees::{common_refinement, DyadicInterval, LeafAddress, Tree, Q};

/// A step function on a standard dyadic partition, one value per leaf.
#[derive(Clone, Debug)]
pub struct StepFn {
    tree: Tree,
    values: Vec<CVec>,
}

impl StepFn {
    pub fn new(tree: Tree, values: Vec<CVec>) -> Result<StepFn> {
        if tree.arity() != 2 {
            return Err(Error::IncompatibleArity {
                left: tree.arity(),
                right: 2,
            });
        }
        if values.len() != tree.leaves() {
            return Err(Error::ShapeMismatch(format!(
                "{} values for {} intervals",
                values.len(),
                tree.leaves()
            )));
        }
        Ok(StepFn { tree, values })
    }

    pub fn constant(v: CVec) -> StepFn {
        StepFn {
            tree: Tree::leaf(2),
            values: vec![v],
        }
    }

    pub fn tree(&self) -> &Tree {
        &self.tree
    }

    pub fn values(&self) -> &[CVec] {
        &self.values
    }

    pub fn intervals(&self) -> Vec<DyadicInterval> {
        self.tree.leaf_intervals()
    }

    pub fn norm(&self) -> f64 {
        self.intervals()
            .iter()
            .zip(&self.values)
            .map(|(i, v)| v.norm_sqr() * i.length_f64())
            .sum::<f64>()
            .sqrt()
    }

    /// The same function on the finer partition `w`.
    pub fn refine_to(&self, w: &Tree) -> Result<StepFn> {
        let coarse = self.intervals();
        let mut values = Vec::with_capacity(w.leaves());
        let mut k = 0;
        for i in w.leaf_intervals() {
            while k < coarse.len() && !coarse[k].contains(&i) {
                k += 1;
            }
            if k == coarse.len() {
                return Err(Error::NotRefinable(w.serialize()));
            }
            values.push(self.values[k].clone());
        }
        Ok(StepFn {
            tree: w.clone(),
            values,
        })
    }

    /// L^2 distance.
    pub fn dist(&self, other: &StepFn) -> Result<f64> {
        let r = common_refinement(&self.tree, &other.tree)?;
        let a = self.refine_to(&r.w)?;
        let b = other.refine_to(&r.w)?;
        Ok(a.intervals()
            .iter()
            .zip(a.values.iter().zip(&b.values))
            .map(|(i, (x, y))| x.sub(y).norm_sqr() * i.length_f64())
            .sum::<f64>()
            .sqrt())
    }

    /// Value on the interval containing `x` (intervals taken half-open,
    /// the last one closed).
    pub fn eval(&self, x: Q) -> Result<CVec> {
        let ivs = self.intervals();
        for (i, iv) in ivs.iter().enumerate() {
            if x >= iv.left() && (x < iv.right() || (i + 1 == ivs.len() && x == iv.right())) {
                return Ok(self.values[i].clone());
            }
        }
        Err(Error::OutOfDomain(x.to_string()))
    }

    /// `left,right,re_1,im_1,...` rows for dense values; sparse values are
    /// written as `label=re+imi` cells.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for (iv, v) in self.intervals().iter().zip(&self.values) {
            let _ = write!(out, "{},{}", iv.left(), iv.right());
            match v {
                CVec::Dense(d) => {
                    for z in d.iter() {
                        let _ = write!(out, ",{},{}", z.re, z.im);
                    }
                }
                CVec::Sparse(m) => {
                    for (k, z) in m {
                        let _ = write!(out, ",{k}={}{:+}i", z.re, z.im);
                    }
                }
            }
            out.push('\n');
        }
        out
    }
}

/// Max over sampled basis vectors of `|| 2 A_i* A_i v - v ||`.
pub fn unitary_pair_residual(m: &PythModule) -> f64 {
    let mut worst: f64 = 0.0;
    for v in m.sample_basis() {
        for i in 0..m.arity() {
            let w = m.apply_adjoint(i, &m.apply(i, &v)).scale(c(2.0, 0.0));
            worst = worst.max(w.dist(&v));
        }
    }
    worst
}

fn require_unitary_pair(m: &PythModule, tol: f64) -> Result<()> {
    if m.arity() != 2 {
        return Err(Error::IncompatibleArity {
            left: m.arity(),
            right: 2,
        });
    }
    let r = unitary_pair_residual(m);
    if r > tol {
        return Err(Error::Precondition(format!(
            "members are not unitaries divided by sqrt 2 (residual {r:e})"
        )));
    }
    Ok(())
}

const PAIR_TOL: f64 = 1e-9;

/// The map `R`: `(t, xi) -> sum_I A_I* xi_I chi_I / Leb(I)`.
pub fn to_l2(x: &LimitVec) -> Result<StepFn> {
    let m = x.module();
    require_unitary_pair(m, PAIR_TOL)?;
    let addrs = x.tree().leaf_addresses();
    let values = addrs
        .iter()
        .zip(x.parts())
        .map(|(a, v)| {
            let len = a.interval(2).length_f64();
            m.apply_word_adjoint(&a.digits, v).scale(c(1.0 / len, 0.0))
        })
        .collect();
    StepFn::new(x.tree().clone(), values)
}

/// A direct-limit vector mapped by `R` to `xi chi_I`.
pub fn l2_preimage(m: &Arc<PythModule>, interval: &DyadicInterval, xi: &CVec) -> Result<LimitVec> {
    require_unitary_pair(m, PAIR_TOL)?;
    let addr = interval.address();
    let tree = Tree::path_to(&addr, 2);
    let idx = tree.leaf_index(&addr).expect("path leaf") - 1;
    let parts = (0..tree.leaves())
        .map(|i| {
            if i == idx {
                m.apply_word(&addr.digits, xi)
            } else {
                m.zero()
            }
        })
        .collect();
    LimitVec::new(m.clone(), tree, parts)
}

/// `U(g, J) = A_{gJ}* A_J / sqrt(Leb(gJ) Leb(J))`.
#[derive(Clone, Debug)]
pub struct CocycleOp {
    pub j: DyadicInterval,
    pub gj: DyadicInterval,
    top_word: Vec<u8>,
    bottom_word: Vec<u8>,
    scale: f64,
}

impl CocycleOp {
    fn from_words(top: LeafAddress, bottom: LeafAddress) -> CocycleOp {
        let gj = top.interval(2);
        let j = bottom.interval(2);
        CocycleOp {
            scale: 1.0 / (gj.length_f64() * j.length_f64()).sqrt(),
            j,
            gj,
            top_word: top.digits,
            bottom_word: bottom.digits,
        }
    }

    pub fn apply(&self, m: &PythModule, v: &CVec) -> CVec {
        let w = m.apply_word(&self.bottom_word, v);
        m.apply_word_adjoint(&self.top_word, &w)
            .scale(c(self.scale, 0.0))
    }

    /// Matrix of the operator for dense modules.
    pub fn matrix(&self, m: &PythModule) -> Option<DMatrix<C64>> {
        let d = m.dim()?;
        let mut out = DMatrix::zeros(d, d);
        for k in 0..d {
            let CVec::Dense(col) = self.apply(m, &CVec::basis(d, k)) else {
                return None;
            };
            out.set_column(k, &col);
        }
        Some(out)
    }
}

fn require_f(g: &FracElement) -> Result<()> {
    if g.flavor() != Flavor::F || g.arity() != 2 {
        return Err(Error::FlavorMismatch(format!(
            "the L^2 model is defined for binary F elements, got {}",
            g
        )));
    }
    Ok(())
}

/// The cocycle at a dyadic interval `J` lying inside some bottom leaf of `g`.
pub fn cocycle_u(m: &PythModule, g: &FracElement, j: &DyadicInterval) -> Result<CocycleOp> {
    require_f(g)?;
    require_unitary_pair(m, PAIR_TOL)?;
    let bottom = g.bottom().leaf_intervals();
    let b = bottom
        .iter()
        .position(|iv| iv.contains(j))
        .ok_or_else(|| Error::NotRefinable(j.to_string()))?;
    let l = g
        .perm()
        .iter()
        .position(|&p| p == b)
        .expect("perm is a bijection");
    let j_addr = j.address();
    let rel = &j_addr.digits[bottom[b].level as usize..];
    let mut top = g.top().leaf_address(l + 1)?;
    top.digits.extend_from_slice(rel);
    Ok(CocycleOp::from_words(top, j_addr))
}

/// One cocycle per bottom leaf of the reduced pair, in bottom-leaf order.
pub fn cocycles_per_leaf(m: &PythModule, g: &FracElement) -> Result<Vec<CocycleOp>> {
    g.bottom()
        .leaf_intervals()
        .iter()
        .map(|j| cocycle_u(m, g, j))
        .collect()
}

/// `sigma_g(f)(y) = g'(x)^{-1/2} U(g, x) f(x)` with `x = g^{-1} y`.
pub fn sigma_act(m: &PythModule, g: &FracElement, f: &StepFn) -> Result<StepFn> {
    require_f(g)?;
    require_unitary_pair(m, PAIR_TOL)?;
    let r = common_refinement(g.bottom(), f.tree())?;
    let pair = g.pair().expand_bottom(&r.p)?;
    let fw = f.refine_to(&r.w)?;
    let top = pair.top.leaf_addresses();
    let bottom = pair.bottom.leaf_addresses();
    let values = pair
        .perm
        .iter()
        .enumerate()
        .map(|(l, &b)| {
            let op = CocycleOp::from_words(top[l].clone(), bottom[b].clone());
            let slope = op.gj.length_f64() / op.j.length_f64();
            op.apply(m, &fw.values[b]).scale(c(slope.powf(-0.5), 0.0))
        })
        .collect();
    StepFn::new(pair.top, values)
}

/// The scalar module `a = b = phase / sqrt 2` together with the isometry
/// `V: (t, xi) -> sum_I chi_I xi_I phase^{log2 Leb(I)} / sqrt(Leb(I))`.
#[derive(Clone, Debug)]
pub struct TwistedModel {
    pub phase: C64,
    pub module: Arc<PythModule>,
}

pub fn twisted_scalar_model(phase: C64) -> Result<TwistedModel> {
    if (phase.norm() - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidParams(format!(
            "phase must have modulus 1, got {}",
            phase.norm()
        )));
    }
    let a = phase * std::f64::consts::FRAC_1_SQRT_2;
    let module = PythModule::dense(
        "twisted",
        vec![
            DMatrix::from_element(1, 1, a),
            DMatrix::from_element(1, 1, a),
        ],
        DVector::from_element(1, c(1.0, 0.0)),
    )?;
    Ok(TwistedModel {
        phase,
        module: Arc::new(module),
    })
}

impl TwistedModel {
    pub fn intertwine(&self, x: &LimitVec) -> Result<StepFn> {
        let values = x
            .tree()
            .leaf_intervals()
            .iter()
            .zip(x.parts())
            .map(|(iv, v)| {
                let k = iv.level as i32;
                v.scale(self.phase.powi(-k) * 2f64.powf(k as f64 / 2.0))
            })
            .collect();
        StepFn::new(x.tree().clone(), values)
    }

    /// `(g . f)(y) = phase^{log2 g'(x)} g'(x)^{-1/2} f(x)` with `x = g^{-1} y`.
    pub fn transported_act(&self, g: &FracElement, f: &StepFn) -> Result<StepFn> {
        if g.arity() != 2 {
            return Err(Error::IncompatibleArity {
                left: g.arity(),
                right: 2,
            });
        }
        let r = common_refinement(g.bottom(), f.tree())?;
        let pair = g.pair().expand_bottom(&r.p)?;
        let fw = f.refine_to(&r.w)?;
        let top = pair.top.leaf_intervals();
        let bottom = pair.bottom.leaf_intervals();
        let values = pair
            .perm
            .iter()
            .enumerate()
            .map(|(l, &b)| {
                let log_slope = bottom[b].level as i32 - top[l].level as i32;
                let factor = self.phase.powi(log_slope) * 2f64.powf(-log_slope as f64 / 2.0);
                fw.values[b].scale(factor)
            })
            .collect();
        StepFn::new(pair.top, values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rep::act;
    use crate::thompson::g0;

    fn unitary_module(u: DMatrix<C64>, v: DMatrix<C64>, vac: DVector<C64>) -> Arc<PythModule> {
        let s = c(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        Arc::new(PythModule::dense("uv", vec![u * s, v * s], vac).unwrap())
    }

    #[test]
    fn g0_cocycle_is_u_star() {
        let th: f64 = 0.7;
        let u = DMatrix::from_row_slice(
            2,
            2,
            &[
                c(th.cos(), 0.0),
                c(-th.sin(), 0.0),
                c(th.sin(), 0.0),
                c(th.cos(), 0.0),
            ],
        );
        let v =
            DMatrix::from_row_slice(2, 2, &[c(0.0, 1.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        let m = unitary_module(
            u.clone(),
            v,
            DVector::from_column_slice(&[c(1.0, 0.0), c(0.0, 0.0)]),
        );
        let j = DyadicInterval {
            numerator: 0,
            level: 1,
            arity: 2,
        };
        let op = cocycle_u(&m, &g0(), &j).unwrap();
        let mat = op.matrix(&m).unwrap();
        assert!((mat - u.adjoint()).norm() < 1e-14);
    }

    #[test]
    fn vacuum_is_constant() {
        let m = unitary_module(
            DMatrix::identity(1, 1),
            DMatrix::identity(1, 1),
            DVector::from_element(1, c(1.0, 0.0)),
        );
        let f = to_l2(&LimitVec::vacuum(m.clone())).unwrap();
        assert_eq!(f.values(), &[m.vacuum().clone()]);
    }

    #[test]
    fn scalar_sigma_matches_circle_formula() {
        let m = unitary_module(
            DMatrix::identity(1, 1),
            DMatrix::identity(1, 1),
            DVector::from_element(1, c(1.0, 0.0)),
        );
        let g = g0();
        let f = StepFn::new(
            crate::trees::full_tree(2, 2),
            (0..4).map(|i| CVec::real(&[i as f64 + 1.0])).collect(),
        )
        .unwrap();
        let s = sigma_act(&m, &g, &f).unwrap();
        // g^{-1} . h (z) = sqrt(g'(z)) h(g z) with h = sigma_g f
        for k in 0..16 {
            let z = Q::new(2 * k + 1, 32);
            let gz = g.pl_eval(z).unwrap();
            let slope = g.slope(z).unwrap();
            let lhs = f.eval(z).unwrap();
            let slope_f = *slope.numer() as f64 / *slope.denom() as f64;
            let rhs = s.eval(gz).unwrap().scale(c(slope_f.sqrt(), 0.0));
            assert!(lhs.dist(&rhs) < 1e-14);
        }
    }

    #[test]
    fn twisted_intertwines() {
        let tm = twisted_scalar_model(c(0.6, 0.8)).unwrap();
        let m = tm.module.clone();
        let x = LimitVec::new(
            m.clone(),
            crate::trees::parse_tree("((..).)", 2).unwrap(),
            vec![
                CVec::real(&[1.0]),
                CVec::dense(&[c(0.0, 2.0)]),
                CVec::real(&[-0.5]),
            ],
        )
        .unwrap();
        let g = g0();
        let lhs = tm.intertwine(&act(&g, &x).unwrap()).unwrap();
        let rhs = tm.transported_act(&g, &tm.intertwine(&x).unwrap()).unwrap();
        assert!(lhs.dist(&rhs).unwrap() < 1e-14);
        assert!((tm.intertwine(&x).unwrap().norm() - x.norm()).abs() < 1e-14);
    }
}
