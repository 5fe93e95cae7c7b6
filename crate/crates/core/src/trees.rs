//! Planar rooted n-ary trees and forests.
//!
//! A [`Tree`] with `L` leaves is a morphism `1 -> L`; a [`Forest`] with `k`
//! roots and `L` leaves is a morphism `k -> L`. Leaves and roots are numbered
//! from 1, left to right.

use std::fmt;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A node is either a leaf or an internal vertex with exactly `arity` children.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Node {
    Leaf,
    Branch(Box<[Node]>),
}

impl Node {
    pub fn caret(arity: usize) -> Node {
        Node::Branch(vec![Node::Leaf; arity].into_boxed_slice())
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self, Node::Leaf)
    }

    fn leaf_count(&self) -> usize {
        match self {
            Node::Leaf => 1,
            Node::Branch(ch) => ch.iter().map(Node::leaf_count).sum(),
        }
    }

    fn check_arity(&self, arity: usize) -> bool {
        match self {
            Node::Leaf => true,
            Node::Branch(ch) => ch.len() == arity && ch.iter().all(|c| c.check_arity(arity)),
        }
    }

    fn write(&self, out: &mut String) {
        match self {
            Node::Leaf => out.push('.'),
            Node::Branch(ch) => {
                out.push('(');
                for c in ch.iter() {
                    c.write(out);
                }
                out.push(')');
            }
        }
    }

    fn depth(&self) -> usize {
        match self {
            Node::Leaf => 0,
            Node::Branch(ch) => 1 + ch.iter().map(Node::depth).max().unwrap_or(0),
        }
    }

    /// Replaces the leaves of `self`, in order, by nodes drawn from `with`.
    fn graft(&self, with: &mut impl Iterator<Item = Node>) -> Node {
        match self {
            Node::Leaf => with.next().expect("graft: not enough trees"),
            Node::Branch(ch) => Node::Branch(ch.iter().map(|c| c.graft(with)).collect()),
        }
    }

    fn collect_addresses(&self, prefix: &mut Vec<u8>, out: &mut Vec<LeafAddress>) {
        match self {
            Node::Leaf => out.push(LeafAddress {
                digits: prefix.clone(),
            }),
            Node::Branch(ch) => {
                for (i, c) in ch.iter().enumerate() {
                    prefix.push(i as u8);
                    c.collect_addresses(prefix, out);
                    prefix.pop();
                }
            }
        }
    }
}

/// A planar rooted tree whose internal vertices all have `arity` children.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Tree {
    arity: usize,
    leaves: usize,
    root: Node,
}

impl Tree {
    pub fn new(arity: usize, root: Node) -> Result<Tree> {
        if arity < 2 {
            return Err(Error::InvalidParams(format!(
                "arity must be at least 2, got {arity}"
            )));
        }
        if !root.check_arity(arity) {
            return Err(Error::ShapeMismatch(format!(
                "some vertex does not have {arity} children"
            )));
        }
        let leaves = root.leaf_count();
        Ok(Tree {
            arity,
            leaves,
            root,
        })
    }

    pub(crate) fn from_node(arity: usize, root: Node) -> Tree {
        let leaves = root.leaf_count();
        Tree {
            arity,
            leaves,
            root,
        }
    }

    /// The trivial tree with one leaf (the identity morphism of 1).
    pub fn leaf(arity: usize) -> Tree {
        Tree {
            arity,
            leaves: 1,
            root: Node::Leaf,
        }
    }

    pub fn caret(arity: usize) -> Tree {
        Tree {
            arity,
            leaves: arity,
            root: Node::caret(arity),
        }
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn leaves(&self) -> usize {
        self.leaves
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    /// Number of internal vertices; satisfies `leaves = internal * (arity - 1) + 1`.
    pub fn internal_nodes(&self) -> usize {
        (self.leaves - 1) / (self.arity - 1)
    }

    pub fn height(&self) -> usize {
        self.root.depth()
    }

    pub fn is_leaf(&self) -> bool {
        self.root.is_leaf()
    }

    pub fn serialize(&self) -> String {
        let mut s = String::with_capacity(2 * self.leaves);
        self.root.write(&mut s);
        s
    }

    /// Addresses of all leaves, left to right.
    pub fn leaf_addresses(&self) -> Vec<LeafAddress> {
        let mut out = Vec::with_capacity(self.leaves);
        self.root.collect_addresses(&mut Vec::new(), &mut out);
        out
    }

    fn check_leaf(&self, leaf: usize) -> Result<()> {
        if leaf == 0 || leaf > self.leaves {
            return Err(Error::IndexOutOfRange {
                index: leaf,
                len: self.leaves,
            });
        }
        Ok(())
    }

    /// Address of leaf `leaf` (1-based), digits read from the root.
    pub fn leaf_address(&self, leaf: usize) -> Result<LeafAddress> {
        self.check_leaf(leaf)?;
        let mut digits = Vec::new();
        let mut node = &self.root;
        let mut skip = leaf - 1;
        while let Node::Branch(ch) = node {
            for (i, c) in ch.iter().enumerate() {
                let n = c.leaf_count();
                if skip < n {
                    digits.push(i as u8);
                    node = c;
                    break;
                }
                skip -= n;
            }
        }
        Ok(LeafAddress { digits })
    }

    pub fn leaf_interval(&self, leaf: usize) -> Result<DyadicInterval> {
        Ok(self.leaf_address(leaf)?.interval(self.arity))
    }

    pub fn leaf_intervals(&self) -> Vec<DyadicInterval> {
        self.leaf_addresses()
            .iter()
            .map(|a| a.interval(self.arity))
            .collect()
    }

    pub fn depth(&self, leaf: usize) -> Result<usize> {
        Ok(self.leaf_address(leaf)?.len())
    }

    /// Occurrences of each digit `0..arity` on the path to `leaf`.
    pub fn turn_counts(&self, leaf: usize) -> Result<Vec<usize>> {
        Ok(self.leaf_address(leaf)?.turn_counts(self.arity))
    }

    /// Grafts the trees of `f` (one per leaf of `self`) onto the leaves.
    pub fn graft(&self, f: &Forest) -> Result<Tree> {
        Forest::from_tree(self.clone())
            .compose_under(f)
            .map(|f| f.into_single())
    }

    /// The smallest tree having `addr` as a leaf: a caret at every vertex of
    /// the path and leaves everywhere else.
    pub fn path_to(addr: &LeafAddress, arity: usize) -> Tree {
        let mut node = Node::Leaf;
        for &d in addr.digits.iter().rev() {
            let mut ch = vec![Node::Leaf; arity];
            ch[d as usize] = node;
            node = Node::Branch(ch.into_boxed_slice());
        }
        Tree::from_node(arity, node)
    }

    /// 1-based index of the leaf with address `addr`, if any.
    pub fn leaf_index(&self, addr: &LeafAddress) -> Option<usize> {
        self.leaf_addresses()
            .iter()
            .position(|a| a == addr)
            .map(|i| i + 1)
    }

    /// Builds the minimal tree containing every leaf address in `addrs`
    /// as a vertex. Returns `None` if the addresses are not a prefix-free
    /// complete set.
    pub fn from_addresses(arity: usize, addrs: &[LeafAddress]) -> Option<Tree> {
        fn build(arity: usize, addrs: &[&[u8]]) -> Option<Node> {
            if addrs.len() == 1 && addrs[0].is_empty() {
                return Some(Node::Leaf);
            }
            if addrs.iter().any(|a| a.is_empty()) || addrs.is_empty() {
                return None;
            }
            let mut ch = Vec::with_capacity(arity);
            for d in 0..arity {
                let sub: Vec<&[u8]> = addrs
                    .iter()
                    .filter(|a| a[0] as usize == d)
                    .map(|a| &a[1..])
                    .collect();
                ch.push(build(arity, &sub)?);
            }
            Some(Node::Branch(ch.into_boxed_slice()))
        }
        let refs: Vec<&[u8]> = addrs.iter().map(|a| a.digits.as_slice()).collect();
        build(arity, &refs).map(|root| Tree::from_node(arity, root))
    }
}

impl fmt::Display for Tree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.serialize())
    }
}

impl PartialOrd for Tree {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// Trees are ordered by arity, leaf count, then canonical serialization.
impl Ord for Tree {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.arity, self.leaves)
            .cmp(&(other.arity, other.leaves))
            .then_with(|| self.serialize().cmp(&other.serialize()))
    }
}

/// Root-to-leaf path, one digit per edge.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct LeafAddress {
    pub digits: Vec<u8>,
}

impl LeafAddress {
    pub fn new(digits: Vec<u8>) -> Self {
        LeafAddress { digits }
    }

    pub fn len(&self) -> usize {
        self.digits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.digits.is_empty()
    }

    pub fn interval(&self, arity: usize) -> DyadicInterval {
        let mut numerator = 0u64;
        for &d in &self.digits {
            numerator = numerator * arity as u64 + d as u64;
        }
        DyadicInterval {
            numerator,
            level: self.digits.len() as u32,
            arity: arity as u32,
        }
    }

    pub fn turn_counts(&self, arity: usize) -> Vec<usize> {
        let mut c = vec![0; arity];
        for &d in &self.digits {
            c[d as usize] += 1;
        }
        c
    }

    pub fn is_prefix_of(&self, other: &LeafAddress) -> bool {
        other.digits.starts_with(&self.digits)
    }
}

impl fmt::Display for LeafAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for d in &self.digits {
            write!(f, "{d}")?;
        }
        Ok(())
    }
}

/// `[numerator / arity^level, (numerator + 1) / arity^level]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DyadicInterval {
    pub numerator: u64,
    pub level: u32,
    pub arity: u32,
}

pub type Q = Ratio<i128>;

impl DyadicInterval {
    pub fn unit(arity: usize) -> Self {
        DyadicInterval {
            numerator: 0,
            level: 0,
            arity: arity as u32,
        }
    }

    pub fn denominator(&self) -> i128 {
        (self.arity as i128).pow(self.level)
    }

    pub fn left(&self) -> Q {
        Q::new(self.numerator as i128, self.denominator())
    }

    pub fn right(&self) -> Q {
        Q::new(self.numerator as i128 + 1, self.denominator())
    }

    pub fn length(&self) -> Q {
        Q::new(1, self.denominator())
    }

    pub fn length_f64(&self) -> f64 {
        (self.arity as f64).powi(-(self.level as i32))
    }

    /// Digits of the path from the root of the infinite tree to this interval.
    pub fn address(&self) -> LeafAddress {
        let mut digits = vec![0u8; self.level as usize];
        let mut n = self.numerator;
        for d in digits.iter_mut().rev() {
            *d = (n % self.arity as u64) as u8;
            n /= self.arity as u64;
        }
        LeafAddress { digits }
    }

    pub fn contains(&self, other: &DyadicInterval) -> bool {
        self.arity == other.arity
            && other.level >= self.level
            && other.numerator / (self.arity as u64).pow(other.level - self.level) == self.numerator
    }
}

impl fmt::Display for DyadicInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.left(), self.right())
    }
}

/// Generator `f_{i,n}`: `n` roots with a caret on root `i` (1-based).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Generator {
    pub index: usize,
    pub roots: usize,
}

/// An ordered nonempty list of trees of a common arity.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Forest {
    arity: usize,
    trees: Vec<Tree>,
}

impl Forest {
    pub fn new(arity: usize, trees: Vec<Tree>) -> Result<Forest> {
        if trees.is_empty() {
            return Err(Error::ShapeMismatch(
                "a forest needs at least one tree".into(),
            ));
        }
        for t in &trees {
            if t.arity != arity {
                return Err(Error::IncompatibleArity {
                    left: arity,
                    right: t.arity,
                });
            }
        }
        Ok(Forest { arity, trees })
    }

    pub fn from_tree(t: Tree) -> Forest {
        Forest {
            arity: t.arity,
            trees: vec![t],
        }
    }

    /// `k` straight lines.
    pub fn identity(k: usize, arity: usize) -> Forest {
        Forest {
            arity,
            trees: vec![Tree::leaf(arity); k],
        }
    }

    pub fn generator(g: Generator, arity: usize) -> Result<Forest> {
        generator_forest(g.index, g.roots, arity)
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn trees(&self) -> &[Tree] {
        &self.trees
    }

    pub fn roots(&self) -> usize {
        self.trees.len()
    }

    pub fn leaves(&self) -> usize {
        self.trees.iter().map(Tree::leaves).sum()
    }

    pub fn is_identity(&self) -> bool {
        self.trees.iter().all(Tree::is_leaf)
    }

    pub fn into_single(mut self) -> Tree {
        debug_assert_eq!(self.trees.len(), 1);
        self.trees.pop().unwrap()
    }

    /// `compose(upper, self)`: root j of `upper` sits on leaf j of `self`.
    pub fn compose_under(&self, upper: &Forest) -> Result<Forest> {
        compose(upper, self)
    }

    /// Decomposes the forest into generators. The first entry acts first,
    /// i.e. sits closest to the roots.
    pub fn decompose(&self) -> Vec<Generator> {
        let mut out = Vec::new();
        let mut layer: Vec<Node> = self.trees.iter().map(|t| t.root.clone()).collect();
        while let Some(i) = layer.iter().position(|n| !n.is_leaf()) {
            out.push(Generator {
                index: i + 1,
                roots: layer.len(),
            });
            let Node::Branch(ch) = layer.remove(i) else {
                unreachable!()
            };
            for (k, c) in ch.into_vec().into_iter().enumerate() {
                layer.insert(i + k, c);
            }
        }
        out
    }

    pub fn serialize(&self) -> String {
        let parts: Vec<String> = self.trees.iter().map(Tree::serialize).collect();
        format!("[{}]", parts.join(", "))
    }
}

impl fmt::Display for Forest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.serialize())
    }
}

pub fn generator_forest(i: usize, n: usize, arity: usize) -> Result<Forest> {
    if i == 0 || i > n {
        return Err(Error::IndexOutOfRange { index: i, len: n });
    }
    let mut trees = vec![Tree::leaf(arity); n];
    trees[i - 1] = Tree::caret(arity);
    Ok(Forest { arity, trees })
}

/// Stacks `upper` on top of `lower`: root j of `upper` is attached to leaf j
/// of `lower`. The result has the roots of `lower` and the leaves of `upper`.
pub fn compose(upper: &Forest, lower: &Forest) -> Result<Forest> {
    if upper.arity != lower.arity {
        return Err(Error::IncompatibleArity {
            left: upper.arity,
            right: lower.arity,
        });
    }
    if upper.roots() != lower.leaves() {
        return Err(Error::ShapeMismatch(format!(
            "upper forest has {} roots but lower forest has {} leaves",
            upper.roots(),
            lower.leaves()
        )));
    }
    let mut it = upper.trees.iter().map(|t| t.root.clone());
    let trees = lower
        .trees
        .iter()
        .map(|t| Tree::from_node(lower.arity, t.root.graft(&mut it)))
        .collect();
    Ok(Forest {
        arity: lower.arity,
        trees,
    })
}

/// Horizontal concatenation, `p` to the left of `q`.
pub fn concat(p: &Forest, q: &Forest) -> Result<Forest> {
    if p.arity != q.arity {
        return Err(Error::IncompatibleArity {
            left: p.arity,
            right: q.arity,
        });
    }
    let mut trees = p.trees.clone();
    trees.extend(q.trees.iter().cloned());
    Ok(Forest {
        arity: p.arity,
        trees,
    })
}

/// Result of [`common_refinement`]: `compose(p, s) == compose(q, t) == w`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Refinement {
    pub w: Tree,
    pub p: Forest,
    pub q: Forest,
}

/// Smallest common multiple of two trees in the directed set of trees.
pub fn common_refinement(s: &Tree, t: &Tree) -> Result<Refinement> {
    if s.arity != t.arity {
        return Err(Error::IncompatibleArity {
            left: s.arity,
            right: t.arity,
        });
    }
    fn union(a: &Node, b: &Node) -> Node {
        match (a, b) {
            (Node::Leaf, _) => b.clone(),
            (_, Node::Leaf) => a.clone(),
            (Node::Branch(x), Node::Branch(y)) => {
                Node::Branch(x.iter().zip(y.iter()).map(|(u, v)| union(u, v)).collect())
            }
        }
    }
    // Collects, for each leaf of `small`, the subtree of `big` hanging there.
    fn growth(small: &Node, big: &Node, out: &mut Vec<Tree>, arity: usize) {
        match small {
            Node::Leaf => out.push(Tree::from_node(arity, big.clone())),
            Node::Branch(x) => {
                let Node::Branch(y) = big else {
                    unreachable!("refinement is not larger")
                };
                for (u, v) in x.iter().zip(y.iter()) {
                    growth(u, v, out, arity);
                }
            }
        }
    }
    let arity = s.arity;
    let w = Tree::from_node(arity, union(&s.root, &t.root));
    let mut p = Vec::with_capacity(s.leaves);
    growth(&s.root, &w.root, &mut p, arity);
    let mut q = Vec::with_capacity(t.leaves);
    growth(&t.root, &w.root, &mut q, arity);
    Ok(Refinement {
        w,
        p: Forest { arity, trees: p },
        q: Forest { arity, trees: q },
    })
}

/// The forest `f` with `compose(f, s) == w`, if `w` refines `s`.
pub fn growth_forest(s: &Tree, w: &Tree) -> Option<Forest> {
    let r = common_refinement(s, w).ok()?;
    if r.w != *w {
        return None;
    }
    Some(r.p)
}

/// Full tree of height `n`: `arity^n` leaves all at depth `n`.
pub fn full_tree(n: usize, arity: usize) -> Tree {
    let mut node = Node::Leaf;
    for _ in 0..n {
        node = Node::Branch(vec![node; arity].into_boxed_slice());
    }
    Tree::from_node(arity, node)
}

/// Default enumeration cap on the leaf count for a given arity.
pub fn default_leaf_cap(arity: usize) -> usize {
    if arity == 2 {
        10
    } else {
        7
    }
}

/// All trees with exactly `leaves` leaves, sorted by serialization.
pub fn enumerate_trees(leaves: usize, arity: usize) -> Result<Vec<Tree>> {
    enumerate_trees_capped(leaves, arity, default_leaf_cap(arity))
}

pub fn enumerate_trees_capped(leaves: usize, arity: usize, cap: usize) -> Result<Vec<Tree>> {
    if arity < 2 {
        return Err(Error::InvalidParams(format!(
            "arity must be at least 2, got {arity}"
        )));
    }
    if leaves > cap {
        return Err(Error::CapExceeded {
            what: "tree enumeration leaves",
            requested: leaves,
            cap,
        });
    }
    if leaves == 0 || !(leaves - 1).is_multiple_of(arity - 1) {
        return Ok(Vec::new());
    }
    // shapes[k] holds all nodes with k internal vertices.
    let m = (leaves - 1) / (arity - 1);
    let mut shapes: Vec<Vec<Node>> = vec![vec![Node::Leaf]];
    for k in 1..=m {
        let mut out = Vec::new();
        // distribute k-1 internal vertices among `arity` children
        let mut parts = vec![0usize; arity];
        distribute(k - 1, 0, &mut parts, &shapes, &mut out);
        shapes.push(out);
    }
    let mut trees: Vec<Tree> = shapes[m]
        .iter()
        .map(|n| Tree::from_node(arity, n.clone()))
        .collect();
    trees.sort_by_cached_key(Tree::serialize);
    Ok(trees)
}

fn distribute(
    remaining: usize,
    pos: usize,
    parts: &mut Vec<usize>,
    shapes: &[Vec<Node>],
    out: &mut Vec<Node>,
) {
    let arity = parts.len();
    if pos == arity - 1 {
        parts[pos] = remaining;
        let mut acc: Vec<Vec<Node>> = vec![Vec::new()];
        for &p in parts.iter() {
            let mut next = Vec::with_capacity(acc.len() * shapes[p].len());
            for prefix in &acc {
                for s in &shapes[p] {
                    let mut v = prefix.clone();
                    v.push(s.clone());
                    next.push(v);
                }
            }
            acc = next;
        }
        out.extend(acc.into_iter().map(|v| Node::Branch(v.into_boxed_slice())));
        return;
    }
    for r in 0..=remaining {
        parts[pos] = r;
        distribute(remaining - r, pos + 1, parts, shapes, out);
    }
}

/// A random tree with `internal` carets, grown by splitting uniformly chosen
/// leaves.
pub fn random_tree<R: rand::Rng + ?Sized>(rng: &mut R, internal: usize, arity: usize) -> Tree {
    let mut addrs = vec![LeafAddress::default()];
    for _ in 0..internal {
        let i = rng.gen_range(0..addrs.len());
        let a = addrs.remove(i);
        for d in (0..arity).rev() {
            let mut digits = a.digits.clone();
            digits.push(d as u8);
            addrs.insert(i, LeafAddress::new(digits));
        }
    }
    Tree::from_addresses(arity, &addrs).expect("complete address set")
}

/// Parses a tree written in the grammar `tree := "." | "(" tree^arity ")"`.
/// Whitespace is allowed between tokens.
pub fn parse_tree(text: &str, arity: usize) -> Result<Tree> {
    let mut p = Parser {
        bytes: text.as_bytes(),
        pos: 0,
        arity,
    };
    let node = p.node()?;
    p.skip_ws();
    if p.pos != p.bytes.len() {
        return Err(p.error("trailing input after tree"));
    }
    Tree::new(arity, node)
}

/// Parses `[tree, tree, ...]`; a bare tree is accepted as a one-tree forest.
pub fn parse_forest(text: &str, arity: usize) -> Result<Forest> {
    let mut p = Parser {
        bytes: text.as_bytes(),
        pos: 0,
        arity,
    };
    p.skip_ws();
    if p.peek() != Some(b'[') {
        return parse_tree(text, arity).map(Forest::from_tree);
    }
    p.pos += 1;
    let mut trees = Vec::new();
    loop {
        let node = p.node()?;
        trees.push(Tree::from_node(arity, node));
        p.skip_ws();
        match p.peek() {
            Some(b',') => p.pos += 1,
            Some(b']') => {
                p.pos += 1;
                break;
            }
            _ => return Err(p.error("expected ',' or ']'")),
        }
    }
    p.skip_ws();
    if p.pos != p.bytes.len() {
        return Err(p.error("trailing input after forest"));
    }
    Forest::new(arity, trees)
}

pub(crate) struct Parser<'a> {
    pub(crate) bytes: &'a [u8],
    pub(crate) pos: usize,
    pub(crate) arity: usize,
}

impl Parser<'_> {
    pub(crate) fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    pub(crate) fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    pub(crate) fn error(&self, msg: &str) -> Error {
        Error::Syntax {
            offset: self.pos,
            message: msg.to_string(),
        }
    }

    pub(crate) fn node(&mut self) -> Result<Node> {
        self.skip_ws();
        match self.peek() {
            Some(b'.') => {
                self.pos += 1;
                Ok(Node::Leaf)
            }
            Some(b'(') => {
                let open = self.pos;
                self.pos += 1;
                let mut ch = Vec::with_capacity(self.arity);
                loop {
                    self.skip_ws();
                    match self.peek() {
                        Some(b')') => {
                            self.pos += 1;
                            break;
                        }
                        Some(b'.') | Some(b'(') => ch.push(self.node()?),
                        None => return Err(self.error("unclosed '('")),
                        Some(_) => return Err(self.error("expected '.', '(' or ')'")),
                    }
                }
                if ch.len() != self.arity {
                    return Err(Error::ArityMismatch {
                        offset: open,
                        expected: self.arity,
                        found: ch.len(),
                    });
                }
                Ok(Node::Branch(ch.into_boxed_slice()))
            }
            None => Err(self.error("unexpected end of input")),
            Some(_) => Err(self.error("expected '.' or '('")),
        }
    }
}
