//! Elements of Thompson's groups F_n, T_n and V_n as reduced tree pairs.
//!
//! An element is stored as `(top, bottom, perm)` where `perm[l]` is the
//! bottom leaf matched with top leaf `l` (0-based). The induced map of the
//! interval sends the bottom leaf interval `perm[l]` affinely onto the top
//! leaf interval `l`; acting on a direct-limit vector moves the vector sitting
//! on bottom leaf `perm[l]` to top leaf `l`.

use std::collections::BTreeSet;
use std::fmt;

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::exec::{self, Strategy};
use crate::trees::{
    self, common_refinement, enumerate_trees_capped, full_tree, DyadicInterval, Forest,
    LeafAddress, Tree, Q,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Flavor {
    F,
    T,
    V,
}

impl Flavor {
    pub fn parse(s: &str) -> Result<Flavor> {
        match s {
            "F" | "f" => Ok(Flavor::F),
            "T" | "t" => Ok(Flavor::T),
            "V" | "v" => Ok(Flavor::V),
            _ => Err(Error::InvalidParams(format!(
                "unknown flavor '{s}' (use F, T or V)"
            ))),
        }
    }
}

impl fmt::Display for Flavor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Flavor::F => "F",
            Flavor::T => "T",
            Flavor::V => "V",
        };
        f.write_str(s)
    }
}

/// How the leaves of the two trees are matched.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Decoration {
    None,
    /// Top leaf `l` is matched with bottom leaf `l + k mod L`.
    Rotation(i64),
    /// `perm[l]` is the bottom leaf matched with top leaf `l` (0-based).
    Perm(Vec<usize>),
}

/// A possibly unreduced representative.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TreePair {
    pub top: Tree,
    pub bottom: Tree,
    pub perm: Vec<usize>,
}

impl TreePair {
    pub fn leaves(&self) -> usize {
        self.top.leaves()
    }

    pub fn inverse_perm(&self) -> Vec<usize> {
        invert(&self.perm)
    }

    /// Grows the bottom tree by `p` (one tree per bottom leaf) and the top
    /// tree by the matching trees, so the pair still represents the same
    /// element.
    pub fn expand_bottom(&self, p: &Forest) -> Result<TreePair> {
        let bottom = trees::compose(p, &Forest::from_tree(self.bottom.clone()))?.into_single();
        let grafts: Vec<Tree> = self.perm.iter().map(|&b| p.trees()[b].clone()).collect();
        let top_forest = Forest::new(self.top.arity(), grafts)?;
        let top = trees::compose(&top_forest, &Forest::from_tree(self.top.clone()))?.into_single();
        let off = offsets(p);
        let mut perm = Vec::with_capacity(top.leaves());
        for &b in &self.perm {
            for i in 0..p.trees()[b].leaves() {
                perm.push(off[b] + i);
            }
        }
        Ok(TreePair { top, bottom, perm })
    }

    /// Grows the top tree by `q` (one tree per top leaf).
    pub fn expand_top(&self, q: &Forest) -> Result<TreePair> {
        let top = trees::compose(q, &Forest::from_tree(self.top.clone()))?.into_single();
        let inv = self.inverse_perm();
        let grafts: Vec<Tree> = inv.iter().map(|&l| q.trees()[l].clone()).collect();
        let bottom_forest = Forest::new(self.bottom.arity(), grafts.clone())?;
        let bottom =
            trees::compose(&bottom_forest, &Forest::from_tree(self.bottom.clone()))?.into_single();
        let off_b = offsets(&bottom_forest);
        let mut perm = Vec::with_capacity(top.leaves());
        for (l, &b) in self.perm.iter().enumerate() {
            for i in 0..q.trees()[l].leaves() {
                perm.push(off_b[b] + i);
            }
        }
        Ok(TreePair { top, bottom, perm })
    }

    /// Cancels matched carets until none remain.
    pub fn reduced(mut self) -> TreePair {
        let arity = self.top.arity();
        loop {
            let ta = self.top.leaf_addresses();
            let ba = self.bottom.leaf_addresses();
            let n = ta.len();
            let mut drop_top = vec![false; n];
            let mut drop_bot = vec![false; n];
            let mut any = false;
            let mut l = 0;
            while l + arity <= n {
                if is_caret_at(&ta, l, arity) {
                    let b = self.perm[l];
                    let ok = (1..arity).all(|i| self.perm[l + i] == b + i)
                        && b + arity <= n
                        && is_caret_at(&ba, b, arity);
                    if ok {
                        for i in 1..arity {
                            drop_top[l + i] = true;
                            drop_bot[b + i] = true;
                        }
                        any = true;
                        l += arity;
                        continue;
                    }
                }
                l += 1;
            }
            if !any {
                return self;
            }
            let shorten = |addrs: &[LeafAddress], drop: &[bool]| -> Vec<LeafAddress> {
                let mut out = Vec::new();
                for (i, a) in addrs.iter().enumerate() {
                    if drop[i] {
                        continue;
                    }
                    if i + 1 < addrs.len() && drop[i + 1] {
                        let mut d = a.digits.clone();
                        d.pop();
                        out.push(LeafAddress::new(d));
                    } else {
                        out.push(a.clone());
                    }
                }
                out
            };
            let new_ta = shorten(&ta, &drop_top);
            let new_ba = shorten(&ba, &drop_bot);
            // new index of each surviving bottom leaf
            let mut bot_index = vec![usize::MAX; n];
            let mut k = 0;
            for (i, d) in drop_bot.iter().enumerate() {
                if !d {
                    bot_index[i] = k;
                    k += 1;
                }
            }
            let perm = (0..n)
                .filter(|&i| !drop_top[i])
                .map(|i| bot_index[self.perm[i]])
                .collect();
            self = TreePair {
                top: Tree::from_addresses(arity, &new_ta).expect("valid top"),
                bottom: Tree::from_addresses(arity, &new_ba).expect("valid bottom"),
                perm,
            };
        }
    }
}

fn is_caret_at(addrs: &[LeafAddress], l: usize, arity: usize) -> bool {
    let first = &addrs[l].digits;
    if first.is_empty() || *first.last().unwrap() != 0 {
        return false;
    }
    let prefix = &first[..first.len() - 1];
    (0..arity).all(|i| {
        let d = &addrs[l + i].digits;
        d.len() == first.len() && &d[..d.len() - 1] == prefix && d[d.len() - 1] as usize == i
    })
}

fn offsets(f: &Forest) -> Vec<usize> {
    let mut off = Vec::with_capacity(f.roots());
    let mut acc = 0;
    for t in f.trees() {
        off.push(acc);
        acc += t.leaves();
    }
    off
}

fn invert(perm: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; perm.len()];
    for (i, &p) in perm.iter().enumerate() {
        inv[p] = i;
    }
    inv
}

fn is_permutation(perm: &[usize]) -> bool {
    let mut seen = vec![false; perm.len()];
    for &p in perm {
        if p >= perm.len() || seen[p] {
            return false;
        }
        seen[p] = true;
    }
    true
}

/// Rotation amount `k` if `perm[l] = l + k mod L` for all `l`.
fn rotation_of(perm: &[usize]) -> Option<usize> {
    let n = perm.len();
    let k = perm[0];
    perm.iter()
        .enumerate()
        .all(|(l, &p)| p == (l + k) % n)
        .then_some(k)
}

/// A reduced element of F_n, T_n or V_n.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FracElement {
    pair: TreePair,
    flavor: Flavor,
}

impl FracElement {
    /// Builds and reduces an element.
    pub fn new(top: Tree, bottom: Tree, decoration: Decoration) -> Result<FracElement> {
        reduce(top, bottom, decoration)
    }

    pub fn identity(arity: usize, flavor: Flavor) -> FracElement {
        FracElement {
            pair: TreePair {
                top: Tree::leaf(arity),
                bottom: Tree::leaf(arity),
                perm: vec![0],
            },
            flavor,
        }
    }

    pub(crate) fn from_pair(pair: TreePair, flavor: Flavor) -> FracElement {
        FracElement {
            pair: pair.reduced(),
            flavor,
        }
    }

    pub fn top(&self) -> &Tree {
        &self.pair.top
    }

    pub fn bottom(&self) -> &Tree {
        &self.pair.bottom
    }

    pub fn perm(&self) -> &[usize] {
        &self.pair.perm
    }

    pub fn pair(&self) -> &TreePair {
        &self.pair
    }

    pub fn flavor(&self) -> Flavor {
        self.flavor
    }

    pub fn arity(&self) -> usize {
        self.pair.top.arity()
    }

    pub fn leaves(&self) -> usize {
        self.pair.leaves()
    }

    pub fn is_identity(&self) -> bool {
        self.leaves() == 1
    }

    /// Rotation index for T elements (and 0 for F elements).
    pub fn rotation_index(&self) -> Option<usize> {
        rotation_of(&self.pair.perm)
    }

    /// The same group element viewed in a larger group.
    pub fn promote(&self, flavor: Flavor) -> FracElement {
        FracElement {
            pair: self.pair.clone(),
            flavor: self.flavor.max(flavor),
        }
    }

    /// An equivalent unreduced representative whose bottom tree is `w`.
    pub fn with_bottom(&self, w: &Tree) -> Result<TreePair> {
        let p = trees::growth_forest(&self.pair.bottom, w)
            .ok_or_else(|| Error::NotRefinable(w.serialize()))?;
        self.pair.expand_bottom(&p)
    }

    pub fn multiply(&self, h: &FracElement) -> Result<FracElement> {
        multiply(self, h)
    }

    pub fn inverse(&self) -> FracElement {
        inverse(self)
    }

    pub fn pow(&self, k: i64) -> Result<FracElement> {
        let base = if k < 0 { self.inverse() } else { self.clone() };
        let mut acc = FracElement::identity(self.arity(), self.flavor);
        let mut b = base;
        let mut e = k.unsigned_abs();
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.multiply(&b)?;
            }
            e >>= 1;
            if e > 0 {
                b = b.multiply(&b)?;
            }
        }
        Ok(acc)
    }

    pub fn pl_map(&self) -> PLMap {
        PLMap::of_pair(&self.pair, self.flavor)
    }

    pub fn pl_eval(&self, x: Q) -> Result<Q> {
        self.pl_map().eval(x)
    }

    pub fn slope(&self, x: Q) -> Result<Q> {
        self.pl_map().slope(x)
    }

    /// Lebesgue measure of the set of fixed points.
    ///
    /// A leaf piece either is the identity (top and bottom intervals agree)
    /// or fixes at most one point, so only whole pieces contribute.
    pub fn fixed_point_measure(&self) -> Q {
        let ti = self.pair.top.leaf_intervals();
        let bi = self.pair.bottom.leaf_intervals();
        self.pair
            .perm
            .iter()
            .enumerate()
            .filter(|(l, &b)| ti[*l] == bi[b])
            .map(|(l, _)| ti[l].length())
            .fold(Q::zero(), |a, b| a + b)
    }

    pub fn serialize(&self) -> String {
        let mut s = format!("{}/{}", self.pair.top, self.pair.bottom);
        match self.flavor {
            Flavor::F => {}
            Flavor::T => {
                let k = self.rotation_index().unwrap_or(0);
                s.push_str(&format!("@{k}"));
            }
            Flavor::V => {
                s.push_str("@perm:");
                s.push_str(&cycles_text(&self.pair.perm));
            }
        }
        s
    }

    fn sort_key(&self) -> (usize, String, String, Vec<usize>) {
        (
            self.leaves(),
            self.pair.top.serialize(),
            self.pair.bottom.serialize(),
            self.pair.perm.clone(),
        )
    }
}

impl PartialOrd for FracElement {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for FracElement {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.flavor
            .cmp(&other.flavor)
            .then_with(|| self.sort_key().cmp(&other.sort_key()))
    }
}

impl fmt::Display for FracElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.serialize())
    }
}

fn cycles_text(perm: &[usize]) -> String {
    let mut seen = vec![false; perm.len()];
    let mut out = String::new();
    for start in 0..perm.len() {
        if seen[start] || perm[start] == start {
            continue;
        }
        let mut cyc = Vec::new();
        let mut i = start;
        while !seen[i] {
            seen[i] = true;
            cyc.push((i + 1).to_string());
            i = perm[i];
        }
        out.push('(');
        out.push_str(&cyc.join(" "));
        out.push(')');
    }
    if out.is_empty() {
        out.push_str("()");
    }
    out
}

/// Canonical reduced representative of `(top, bottom, decoration)`.
pub fn reduce(top: Tree, bottom: Tree, decoration: Decoration) -> Result<FracElement> {
    if top.arity() != bottom.arity() {
        return Err(Error::IncompatibleArity {
            left: top.arity(),
            right: bottom.arity(),
        });
    }
    let n = top.leaves();
    if n != bottom.leaves() {
        return Err(Error::LeafCountMismatch {
            top: n,
            bottom: bottom.leaves(),
        });
    }
    let (perm, flavor) = match decoration {
        Decoration::None => ((0..n).collect(), Flavor::F),
        Decoration::Rotation(k) => {
            let k = k.rem_euclid(n as i64) as usize;
            ((0..n).map(|l| (l + k) % n).collect(), Flavor::T)
        }
        Decoration::Perm(p) => {
            if p.len() != n || !is_permutation(&p) {
                return Err(Error::InvalidDecoration(format!(
                    "expected a permutation of {n} leaves"
                )));
            }
            (p, Flavor::V)
        }
    };
    Ok(FracElement::from_pair(
        TreePair { top, bottom, perm },
        flavor,
    ))
}

pub fn multiply(g: &FracElement, h: &FracElement) -> Result<FracElement> {
    if g.arity() != h.arity() {
        return Err(Error::IncompatibleArity {
            left: g.arity(),
            right: h.arity(),
        });
    }
    let r = common_refinement(&g.pair.bottom, &h.pair.top)?;
    let g2 = g.pair.expand_bottom(&r.p)?;
    let h2 = h.pair.expand_top(&r.q)?;
    let perm = g2.perm.iter().map(|&b| h2.perm[b]).collect();
    Ok(FracElement::from_pair(
        TreePair {
            top: g2.top,
            bottom: h2.bottom,
            perm,
        },
        g.flavor.max(h.flavor),
    ))
}

pub fn inverse(g: &FracElement) -> FracElement {
    FracElement {
        pair: TreePair {
            top: g.pair.bottom.clone(),
            bottom: g.pair.top.clone(),
            perm: invert(&g.pair.perm),
        },
        flavor: g.flavor,
    }
}

/// Maximal exponent accepted by [`rotation`].
pub const ROTATION_CAP: usize = 22;

/// The rotation `(t_n, t_n)` with every top leaf matched to the next bottom
/// leaf. Acting on `(t_n, (xi_1, ..., xi_{2^n}))` it gives
/// `(t_n, (xi_2, ..., xi_{2^n}, xi_1))`; its map of the circle is
/// `x -> x - 2^-n`.
pub fn rotation(n: usize) -> Result<FracElement> {
    rotation_arity(n, 2)
}

pub fn rotation_arity(n: usize, arity: usize) -> Result<FracElement> {
    if n > ROTATION_CAP {
        return Err(Error::CapExceeded {
            what: "rotation level",
            requested: n,
            cap: ROTATION_CAP,
        });
    }
    let t = full_tree(n, arity);
    reduce(t.clone(), t, Decoration::Rotation(1))
}

/// The element `((..).)/(.(..))` (binary) used throughout the examples.
pub fn g0() -> FracElement {
    let top = trees::parse_tree("((..).)", 2).unwrap();
    let bottom = trees::parse_tree("(.(..))", 2).unwrap();
    reduce(top, bottom, Decoration::None).unwrap()
}

/// Parses `top "/" bottom [ "@" k | "@perm:" cycles ]`.
pub fn parse_element(text: &str, arity: usize) -> Result<FracElement> {
    let (body, deco) = match text.find('@') {
        Some(i) => (&text[..i], Some((i, &text[i + 1..]))),
        None => (text, None),
    };
    let slash = body.find('/').ok_or(Error::Syntax {
        offset: body.len(),
        message: "expected '/' between top and bottom trees".into(),
    })?;
    let shift = |e: Error, by: usize| match e {
        Error::Syntax { offset, message } => Error::Syntax {
            offset: offset + by,
            message,
        },
        Error::ArityMismatch {
            offset,
            expected,
            found,
        } => Error::ArityMismatch {
            offset: offset + by,
            expected,
            found,
        },
        e => e,
    };
    let top = trees::parse_tree(&body[..slash], arity).map_err(|e| shift(e, 0))?;
    let bottom = trees::parse_tree(&body[slash + 1..], arity).map_err(|e| shift(e, slash + 1))?;
    let n = top.leaves();
    let decoration = match deco {
        None => Decoration::None,
        Some((at, d)) => {
            let d_trim = d.trim();
            if let Some(c) = d_trim.strip_prefix("perm:") {
                Decoration::Perm(parse_cycles(c, n).map_err(|e| shift(e, at + 6))?)
            } else {
                let k: i64 = d_trim.parse().map_err(|_| Error::Syntax {
                    offset: at + 1,
                    message: format!("expected rotation index or 'perm:', found '{d_trim}'"),
                })?;
                Decoration::Rotation(k)
            }
        }
    };
    reduce(top, bottom, decoration)
}

fn parse_cycles(text: &str, n: usize) -> Result<Vec<usize>> {
    let mut perm: Vec<usize> = (0..n).collect();
    let mut seen = vec![false; n];
    let bytes = text.as_bytes();
    let mut i = 0;
    let err = |offset: usize, m: &str| Error::Syntax {
        offset,
        message: m.to_string(),
    };
    while i < bytes.len() {
        match bytes[i] {
            b' ' | b'\t' => i += 1,
            b'(' => {
                let close = text[i..]
                    .find(')')
                    .map(|j| i + j)
                    .ok_or_else(|| err(i, "unclosed cycle"))?;
                let mut cyc = Vec::new();
                for tok in text[i + 1..close].split([' ', ',']) {
                    if tok.is_empty() {
                        continue;
                    }
                    let v: usize = tok.parse().map_err(|_| err(i, "bad cycle entry"))?;
                    if v == 0 || v > n {
                        return Err(Error::IndexOutOfRange { index: v, len: n });
                    }
                    if seen[v - 1] {
                        return Err(Error::InvalidDecoration(format!("leaf {v} repeated")));
                    }
                    seen[v - 1] = true;
                    cyc.push(v - 1);
                }
                for k in 0..cyc.len() {
                    perm[cyc[k]] = cyc[(k + 1) % cyc.len()];
                }
                i = close + 1;
            }
            _ => return Err(err(i, "expected '('")),
        }
    }
    Ok(perm)
}

fn for_each_perm(n: usize, f: &mut impl FnMut(&[usize])) {
    let mut p: Vec<usize> = (0..n).collect();
    loop {
        f(&p);
        // next lexicographic permutation
        let Some(i) = (1..n).rev().find(|&i| p[i - 1] < p[i]) else {
            return;
        };
        let j = (i..n).rev().find(|&j| p[j] > p[i - 1]).unwrap();
        p.swap(i - 1, j);
        p[i..].reverse();
    }
}

/// A random element built from two random trees with `internal` carets each
/// and a random decoration of the given flavor.
pub fn random_element<R: rand::Rng + ?Sized>(
    rng: &mut R,
    internal: usize,
    flavor: Flavor,
    arity: usize,
) -> FracElement {
    let top = trees::random_tree(rng, internal, arity);
    let bottom = trees::random_tree(rng, internal, arity);
    let n = top.leaves();
    let decoration = match flavor {
        Flavor::F => Decoration::None,
        Flavor::T => Decoration::Rotation(rng.gen_range(0..n as i64)),
        Flavor::V => {
            let mut p: Vec<usize> = (0..n).collect();
            for i in (1..n).rev() {
                p.swap(i, rng.gen_range(0..=i));
            }
            Decoration::Perm(p)
        }
    };
    reduce(top, bottom, decoration).expect("matching leaf counts")
}

/// Default leaf cap of [`enumerate_ball`] per flavor and arity.
pub fn ball_cap(flavor: Flavor, arity: usize) -> usize {
    match (flavor, arity) {
        (Flavor::F, 2) => 10,
        (Flavor::T, 2) => 8,
        (Flavor::V, 2) => 6,
        (Flavor::V, _) => 5,
        _ => 7,
    }
}

/// All distinct elements whose reduced representatives have at most
/// `max_leaves` leaves, sorted by (leaves, text).
pub fn enumerate_ball(max_leaves: usize, flavor: Flavor, arity: usize) -> Result<Vec<FracElement>> {
    enumerate_ball_with(max_leaves, flavor, arity, Strategy::default())
}

pub fn enumerate_ball_with(
    max_leaves: usize,
    flavor: Flavor,
    arity: usize,
    strategy: Strategy,
) -> Result<Vec<FracElement>> {
    let cap = ball_cap(flavor, arity);
    if max_leaves > cap {
        return Err(Error::CapExceeded {
            what: "ball leaves",
            requested: max_leaves,
            cap,
        });
    }
    let mut all = BTreeSet::new();
    for l in 1..=max_leaves {
        let ts = enumerate_trees_capped(l, arity, cap)?;
        if ts.is_empty() {
            continue;
        }
        let mut decorations = Vec::new();
        match flavor {
            Flavor::F => decorations.push(Decoration::None),
            Flavor::T => decorations.extend((0..l as i64).map(Decoration::Rotation)),
            Flavor::V => for_each_perm(l, &mut |p| decorations.push(Decoration::Perm(p.to_vec()))),
        }
        let tops: Vec<usize> = (0..ts.len()).collect();
        let chunks = exec::map(strategy, &tops, |&i| {
            let mut out = Vec::new();
            for b in &ts {
                for d in &decorations {
                    let g = reduce(ts[i].clone(), b.clone(), d.clone()).expect("valid pair");
                    if g.leaves() == l {
                        out.push(g);
                    }
                }
            }
            out
        });
        for c in chunks {
            all.extend(c);
        }
    }
    let mut v: Vec<FracElement> = all.into_iter().map(|g| g.promote(flavor)).collect();
    v.sort();
    v.dedup();
    Ok(v)
}

/// One affine piece `y = slope * x + offset` on the domain `[lo, hi]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Piece {
    pub lo: Q,
    pub hi: Q,
    pub slope: Q,
    pub offset: Q,
}

impl Piece {
    fn at(&self, x: Q) -> Q {
        self.slope * x + self.offset
    }
}

/// Piecewise-linear map of `[0, 1]` (F) or of the circle `[0, 1)` (T, V).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PLMap {
    pub flavor: Flavor,
    pub pieces: Vec<Piece>,
}

impl PLMap {
    pub fn of_pair(pair: &TreePair, flavor: Flavor) -> PLMap {
        let ti = pair.top.leaf_intervals();
        let bi = pair.bottom.leaf_intervals();
        let mut pieces: Vec<Piece> = pair
            .perm
            .iter()
            .enumerate()
            .map(|(l, &b)| piece(&bi[b], &ti[l]))
            .collect();
        pieces.sort_by_key(|p| p.lo);
        PLMap { flavor, pieces }
    }

    fn locate(&self, x: Q) -> Result<usize> {
        let zero = Q::zero();
        let one = Q::one();
        if x < zero || x > one {
            return Err(Error::OutOfDomain(x.to_string()));
        }
        if x == one {
            return Ok(self.pieces.len() - 1);
        }
        let i = self.pieces.partition_point(|p| p.lo <= x);
        Ok(i - 1)
    }

    pub fn eval(&self, x: Q) -> Result<Q> {
        if self.flavor != Flavor::F && x == Q::one() {
            return self.eval(Q::zero());
        }
        let y = self.pieces[self.locate(x)?].at(x);
        if self.flavor != Flavor::F && y == Q::one() {
            return Ok(Q::zero());
        }
        Ok(y)
    }

    /// Slope at `x`; a point where the one-sided slopes differ is an error.
    pub fn slope(&self, x: Q) -> Result<Q> {
        let i = self.locate(x)?;
        let p = &self.pieces[i];
        let circle = self.flavor != Flavor::F;
        let left = if x == p.lo && i > 0 {
            Some(&self.pieces[i - 1])
        } else if x == p.lo && circle {
            self.pieces.last()
        } else if x == Q::one() && circle {
            Some(&self.pieces[0])
        } else {
            None
        };
        let right = if x == Q::one() && circle {
            &self.pieces[0]
        } else {
            p
        };
        match left {
            Some(q) if q.slope != right.slope => Err(Error::Breakpoint(x.to_string())),
            _ => Ok(right.slope),
        }
    }

    /// Sorted domain breakpoints including 0 and 1.
    pub fn breakpoints(&self) -> Vec<Q> {
        let mut v: Vec<Q> = self.pieces.iter().map(|p| p.lo).collect();
        v.push(Q::one());
        v
    }

    /// Lebesgue measure of `{x : self(x) != other(x)}`.
    pub fn disagreement(&self, other: &PLMap) -> Q {
        let mut pts: Vec<Q> = self.breakpoints();
        pts.extend(other.breakpoints());
        pts.sort();
        pts.dedup();
        let mut total = Q::zero();
        for w in pts.windows(2) {
            let (a, b) = (w[0], w[1]);
            let third = (b - a) / Q::from_integer(3);
            let same = [a + third, b - third]
                .iter()
                .all(|&x| self.eval(x).ok() == other.eval(x).ok());
            if !same {
                total += b - a;
            }
        }
        total
    }
}

fn piece(from: &DyadicInterval, to: &DyadicInterval) -> Piece {
    let slope = to.length() / from.length();
    Piece {
        lo: from.left(),
        hi: from.right(),
        slope,
        offset: to.left() - slope * from.left(),
    }
}

/// `Leb{x : g(x) != h(x)}`, computed from the two PL maps.
pub fn distance(g: &FracElement, h: &FracElement) -> Q {
    g.pl_map().disagreement(&h.pl_map())
}

/// A morphism of the affine forest category: a forest together with a
/// cyclic offset of its leaves.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AffineMorphism {
    pub forest: Forest,
    pub shift: usize,
}

impl AffineMorphism {
    pub fn new(forest: Forest, shift: usize) -> AffineMorphism {
        let n = forest.leaves();
        AffineMorphism {
            forest,
            shift: shift % n,
        }
    }

    /// `self` followed by `g`: leaf `shift + 1` of `self` carries root 1 of
    /// `g`, continuing cyclically. The new offset is the number of leaves of
    /// the last `shift` trees of `g`, plus the offset of `g`.
    pub fn then(&self, g: &AffineMorphism) -> Result<AffineMorphism> {
        let n = self.forest.leaves();
        if g.forest.roots() != n {
            return Err(Error::ShapeMismatch(format!(
                "{} roots cannot sit on {} leaves",
                g.forest.roots(),
                n
            )));
        }
        let k = self.shift;
        let placed: Vec<Tree> = (0..n)
            .map(|i| g.forest.trees()[(i + n - k) % n].clone())
            .collect();
        let upper = Forest::new(g.forest.arity(), placed)?;
        let forest = trees::compose(&upper, &self.forest)?;
        let k_prime: usize = g.forest.trees()[n - k..].iter().map(Tree::leaves).sum();
        let p = forest.leaves();
        Ok(AffineMorphism {
            forest,
            shift: (k_prime + g.shift) % p,
        })
    }
}

/// The fraction `(t, a) / (s, b)` with distinguished leaves `a + 1` and
/// `b + 1` identified.
pub fn affine_fraction(top: &AffineMorphism, bottom: &AffineMorphism) -> Result<FracElement> {
    if top.forest.roots() != 1 || bottom.forest.roots() != 1 {
        return Err(Error::ShapeMismatch("fractions need single trees".into()));
    }
    let t = top.forest.trees()[0].clone();
    let s = bottom.forest.trees()[0].clone();
    let shift = bottom.shift as i64 - top.shift as i64;
    reduce(t, s, Decoration::Rotation(shift))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trees::parse_tree;

    fn q(a: i128, b: i128) -> Q {
        Q::new(a, b)
    }

    #[test]
    fn g0_map() {
        let g = g0();
        assert_eq!(g.leaves(), 3);
        assert_eq!(g.pl_eval(q(1, 3)).unwrap(), q(1, 6));
        assert_eq!(g.slope(q(1, 3)).unwrap(), q(1, 2));
        assert!(matches!(g.slope(q(1, 2)), Err(Error::Breakpoint(_))));
        assert_eq!(g.fixed_point_measure(), Q::zero());
    }

    #[test]
    fn reduce_cancels() {
        let t = parse_tree("((..)(..))", 2).unwrap();
        let id = reduce(t.clone(), t, Decoration::None).unwrap();
        assert!(id.is_identity());
        let top = parse_tree("((..)(..))", 2).unwrap();
        let bottom = parse_tree("(.(.(..)))", 2).unwrap();
        let g = reduce(top.clone(), bottom.clone(), Decoration::None).unwrap();
        assert_eq!(g.serialize(), "((..).)/(.(..))");
        let unreduced = PLMap::of_pair(
            &TreePair {
                top,
                bottom,
                perm: (0..4).collect(),
            },
            Flavor::F,
        );
        assert_eq!(unreduced.disagreement(&g.pl_map()), Q::zero());
    }

    #[test]
    fn conjugated_g0_fixes_half() {
        let g = parse_element("(((..).).)/((.(..)).)", 2).unwrap();
        assert_eq!(g.fixed_point_measure(), q(1, 2));
        assert_eq!(
            FracElement::identity(2, Flavor::F).fixed_point_measure(),
            Q::one()
        );
    }

    #[test]
    fn rotations() {
        let r1 = rotation(1).unwrap();
        assert!(r1.multiply(&r1).unwrap().is_identity());
        let r2 = rotation(2).unwrap();
        assert_eq!(r2.pl_eval(Q::zero()).unwrap(), q(3, 4));
        assert_eq!(r2.pl_eval(q(7, 8)).unwrap(), q(5, 8));
        assert!(r2.pow(4).unwrap().is_identity());
        assert!(rotation(3).unwrap().pow(8).unwrap().is_identity());
        for x in [q(0, 1), q(1, 4), q(3, 8)] {
            assert_eq!(r2.slope(x).unwrap(), Q::one());
        }
        assert!(rotation(ROTATION_CAP + 1).is_err());
    }

    #[test]
    fn small_balls() {
        assert_eq!(enumerate_ball(1, Flavor::F, 2).unwrap().len(), 1);
        assert_eq!(enumerate_ball(2, Flavor::F, 2).unwrap().len(), 1);
        let b3 = enumerate_ball(3, Flavor::F, 2).unwrap();
        assert_eq!(b3.len(), 3);
        assert!(b3.contains(&g0()) && b3.contains(&g0().inverse()));
    }

    #[test]
    fn text_roundtrip() {
        let r = rotation(2).unwrap();
        assert_eq!(r.serialize(), "((..)(..))/((..)(..))@1");
        assert_eq!(parse_element(&r.serialize(), 2).unwrap(), r);
        let v = parse_element("(..)/(..)@perm:(1 2)", 2).unwrap();
        assert_eq!(v.flavor(), Flavor::V);
        assert_eq!(v.perm(), &[1, 0]);
        assert_eq!(parse_element(&v.serialize(), 2).unwrap(), v);
        assert!(matches!(
            parse_element("(..)/(..", 2),
            Err(Error::Syntax { offset: 8, .. })
        ));
        assert!(matches!(
            parse_element("(..)/(...)", 2),
            Err(Error::ArityMismatch { offset: 5, .. })
        ));
    }

    #[test]
    fn v_with_identity_perm_is_f() {
        let t = parse_tree("((..).)", 2).unwrap();
        let s = parse_tree("(.(..))", 2).unwrap();
        let v = reduce(t, s, Decoration::Perm(vec![0, 1, 2])).unwrap();
        assert_eq!(v.pair(), g0().pair());
    }

    #[test]
    fn affine_composition_rule() {
        // (t_2, 1) / (t_2, 0) rotates by a quarter turn in the positive direction
        let t2 = Forest::from_tree(full_tree(2, 2));
        let r = affine_fraction(
            &AffineMorphism::new(t2.clone(), 1),
            &AffineMorphism::new(t2, 0),
        )
        .unwrap();
        assert_eq!(r.pl_eval(Q::zero()).unwrap(), q(1, 4));
        assert_eq!(r, rotation(2).unwrap().inverse());
    }
}
