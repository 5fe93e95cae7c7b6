use std::sync::Arc;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use pythagorean::gallery;
use pythagorean::opalg::PythModule;
use pythagorean::rep::{act, coefficient_pathsum, vacuum_coefficient, LimitVec};
use pythagorean::thompson::{
    affine_fraction, parse_element, random_element, reduce, AffineMorphism, Decoration, Flavor,
    FracElement,
};
use pythagorean::trees::{compose, parse_tree, random_tree, Forest, Q};

fn flavor() -> impl Strategy<Value = Flavor> {
    prop_oneof![Just(Flavor::F), Just(Flavor::T), Just(Flavor::V)]
}

fn element(seed: u64, internal: usize, fl: Flavor, arity: usize) -> FracElement {
    random_element(&mut ChaCha8Rng::seed_from_u64(seed), internal, fl, arity)
}

fn module(k: usize) -> Arc<PythModule> {
    let mods = gallery::gallery_modules();
    mods[k % mods.len()].1.clone()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn multiplication_is_associative(s in any::<u64>(), i in 0usize..5, j in 0usize..5, k in 0usize..5, fl in flavor(), ternary in any::<bool>()) {
        let n = if ternary { 3 } else { 2 };
        let g = element(s, i, fl, n);
        let h = element(s ^ 1, j, fl, n);
        let f = element(s ^ 2, k, fl, n);
        let left = g.multiply(&h).unwrap().multiply(&f).unwrap();
        let right = g.multiply(&h.multiply(&f).unwrap()).unwrap();
        prop_assert_eq!(left, right);
    }

    #[test]
    fn inverse_cancels(s in any::<u64>(), i in 0usize..6, fl in flavor()) {
        let g = element(s, i, fl, 2);
        prop_assert!(g.multiply(&g.inverse()).unwrap().is_identity());
        prop_assert!(g.inverse().multiply(&g).unwrap().is_identity());
    }

    #[test]
    fn reduce_is_idempotent_and_grow_invariant(s in any::<u64>(), i in 0usize..5, grow in 0usize..4, fl in flavor()) {
        let g = element(s, i, fl, 2);
        let again = reduce(g.top().clone(), g.bottom().clone(), decoration(&g)).unwrap();
        prop_assert_eq!(again.pair(), g.pair());
        let w = random_tree(&mut ChaCha8Rng::seed_from_u64(s ^ 7), grow, 2);
        let p = Forest::new(2, vec![w; g.leaves()]).unwrap();
        let big = g.pair().expand_bottom(&p).unwrap();
        let back = reduce(big.top, big.bottom, Decoration::Perm(big.perm)).unwrap();
        prop_assert_eq!(back.pair(), g.pair());
    }

    #[test]
    fn decomposition_round_trips(s in any::<u64>(), internal in 0usize..12, roots in 1usize..4, ternary in any::<bool>()) {
        let n = if ternary { 3 } else { 2 };
        let mut rng = ChaCha8Rng::seed_from_u64(s);
        let trees = (0..roots).map(|k| random_tree(&mut rng, (internal + k) % 5, n)).collect();
        let f = Forest::new(n, trees).unwrap();
        let mut acc = Forest::identity(roots, n);
        for g in f.decompose() {
            acc = compose(&Forest::generator(g, n).unwrap(), &acc).unwrap();
        }
        prop_assert_eq!(acc, f);
    }

    #[test]
    fn pl_maps_compose(s in any::<u64>(), i in 0usize..5, j in 0usize..5, num in 0i128..1024, fl in flavor()) {
        let g = element(s, i, fl, 2);
        let h = element(s ^ 3, j, fl, 2);
        let x = Q::new(2 * num + 1, 2048);
        let gh = g.multiply(&h).unwrap();
        prop_assert_eq!(gh.pl_eval(x).unwrap(), g.pl_eval(h.pl_eval(x).unwrap()).unwrap());
    }

    #[test]
    fn text_round_trips(s in any::<u64>(), i in 0usize..6, fl in flavor()) {
        let g = element(s, i, fl, 2);
        let back = parse_element(&g.serialize(), 2).unwrap();
        prop_assert_eq!(back.pair(), g.pair());
    }

    #[test]
    fn action_is_unitary_homomorphism(s in any::<u64>(), i in 0usize..4, j in 0usize..4, k in 0usize..4, which in 0usize..64) {
        let m = module(which);
        let fl = if m.arity() == 2 { Flavor::V } else { Flavor::F };
        let g = element(s, i, fl, m.arity());
        let h = element(s ^ 5, j, fl, m.arity());
        let mut rng = ChaCha8Rng::seed_from_u64(s ^ 11);
        let x = LimitVec::random(m.clone(), &mut rng, k);
        let y = LimitVec::random(m.clone(), &mut rng, k);
        let gx = act(&g, &x).unwrap();
        prop_assert!((gx.norm() - x.norm()).abs() < 1e-12);
        prop_assert!((gx.inner(&act(&g, &y).unwrap()).unwrap() - x.inner(&y).unwrap()).norm() < 1e-12);
        let lhs = act(&g.multiply(&h).unwrap(), &x).unwrap();
        let rhs = act(&g, &act(&h, &x).unwrap()).unwrap();
        prop_assert!(lhs.dist(&rhs).unwrap() < 1e-12);
    }

    #[test]
    fn pathsum_matches_action(s in any::<u64>(), i in 0usize..6, which in 0usize..64) {
        let m = module(which);
        let fl = if m.arity() == 2 { Flavor::V } else { Flavor::F };
        let g = element(s, i, fl, m.arity());
        prop_assert!((coefficient_pathsum(&g, &m) - vacuum_coefficient(&g, &m).unwrap()).norm() < 1e-12);
    }

    #[test]
    fn refinement_preserves_vectors(s in any::<u64>(), k in 0usize..4, grow in 0usize..6, which in 0usize..64) {
        let m = module(which);
        let mut rng = ChaCha8Rng::seed_from_u64(s);
        let x = LimitVec::random(m.clone(), &mut rng, k);
        let w = random_tree(&mut rng, grow, m.arity());
        let f = Forest::new(m.arity(), vec![w; x.tree().leaves()]).unwrap();
        let y = x.refine(&f).unwrap();
        prop_assert!((y.norm() - x.norm()).abs() < 1e-12);
        prop_assert!(y.dist(&x).unwrap() < 1e-12);
    }

    #[test]
    fn affine_fractions_survive_common_extension(s in any::<u64>(), i in 0usize..5, grow in 0usize..6, a in 0usize..8, b in 0usize..8, k in 0usize..8) {
        let mut rng = ChaCha8Rng::seed_from_u64(s);
        let t = random_tree(&mut rng, i, 2);
        let u = random_tree(&mut rng, i, 2);
        let n = t.leaves();
        let top = AffineMorphism::new(Forest::from_tree(t), a);
        let bottom = AffineMorphism::new(Forest::from_tree(u), b);
        let trees = (0..n).map(|j| random_tree(&mut rng, (grow + j) % 3, 2)).collect();
        let g = AffineMorphism::new(Forest::new(2, trees).unwrap(), k);
        let before = affine_fraction(&top, &bottom).unwrap();
        let after = affine_fraction(&top.then(&g).unwrap(), &bottom.then(&g).unwrap()).unwrap();
        prop_assert_eq!(after, before);
    }
}

fn decoration(g: &FracElement) -> Decoration {
    Decoration::Perm(g.perm().to_vec())
}

#[test]
fn g0_text_parses() {
    let g = parse_element("((..).)/(.(..))", 2).unwrap();
    assert_eq!(g.top(), &parse_tree("((..).)", 2).unwrap());
    assert_eq!(g.flavor(), Flavor::F);
}
