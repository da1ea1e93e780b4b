use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::aaut::*;
use crate::tree::*;

fn a(s: &str) -> Address {
    Address::parse(s).unwrap()
}

fn portrait(entries: &[(&str, &[u16])]) -> Portrait {
    Portrait::from_labels(
        entries
            .iter()
            .map(|(at, p)| (a(at), p.to_vec()))
            .collect::<BTreeMap<_, _>>(),
    )
}

/// Exchange of the two root cones of the binary tree.
fn swap() -> AlmostAutomorphism {
    let star = AdmissibleTree::root_star(2, 2);
    AlmostAutomorphism::new(star.clone(), star, vec![1, 0], vec![Portrait::identity(); 2])
        .unwrap()
}

/// The basic binary translation: cones (0,10,11) → (00,01,1) rigidly.
fn b() -> AlmostAutomorphism {
    AlmostAutomorphism::from_leaf_triples(
        2,
        2,
        vec![
            (a("0"), a("00"), Portrait::identity()),
            (a("10"), a("01"), Portrait::identity()),
            (a("11"), a("1"), Portrait::identity()),
        ],
    )
    .unwrap()
}

fn random_aaut(rng: &mut ChaCha8Rng, d: u16, n: u16) -> AlmostAutomorphism {
    let grow = |rng: &mut ChaCha8Rng, extra: usize| {
        let mut t = AdmissibleTree::trivial(d, n).expand(&Address::root()).unwrap();
        for _ in 0..extra {
            let ls = t.leaves_ordered().to_vec();
            t = t.expand(&ls[rng.gen_range(0..ls.len())]).unwrap();
        }
        t
    };
    let extra = rng.gen_range(0..3);
    let dom = grow(rng, extra);
    let ran = grow(rng, extra);
    let h = dom.leaf_count();
    let mut leaf_map: Vec<usize> = (0..h).collect();
    for i in (1..h).rev() {
        leaf_map.swap(i, rng.gen_range(0..=i));
    }
    let portraits = (0..h)
        .map(|_| {
            let mut labels = BTreeMap::new();
            for _ in 0..rng.gen_range(0..3) {
                let depth = rng.gen_range(0..3usize);
                let at = Address::new((0..depth).map(|_| rng.gen_range(0..d)).collect());
                let mut p: Vec<u16> = (0..d).collect();
                for i in (1..d as usize).rev() {
                    p.swap(i, rng.gen_range(0..=i));
                }
                labels.insert(at, p);
            }
            Portrait::from_labels(labels)
        })
        .collect();
    AlmostAutomorphism::new(dom, ran, leaf_map, portraits).unwrap()
}

fn max_leaf_depth(gs: &[&AlmostAutomorphism]) -> usize {
    gs.iter()
        .flat_map(|g| g.domain().leaves_ordered().iter().map(|l| l.depth()))
        .max()
        .unwrap()
}

fn all_addresses(d: u16, n: u16, depth: usize) -> Vec<Address> {
    let mut out = vec![Address::root()];
    for level in 0..depth {
        let mut next = Vec::new();
        for addr in &out {
            if addr.depth() == level {
                let arity = if addr.is_root() { n } else { d };
                for i in 0..arity {
                    next.push(addr.child(i));
                }
            }
        }
        out = next;
    }
    out
}

#[test]
fn reduce_identity_presentation() {
    let t = special_tree(3, 2, 2).unwrap();
    let id3 = AlmostAutomorphism::new(
        t.clone(),
        t,
        vec![0, 1, 2],
        vec![Portrait::identity(); 3],
    )
    .unwrap();
    let r = id3.reduce();
    assert_eq!(r, AlmostAutomorphism::identity(2, 2));
    assert!(id3.is_identity());
}

#[test]
fn translation_already_reduced() {
    let b = b();
    assert_eq!(b.reduce(), b);
}

#[test]
fn reduce_idempotent_random() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..40 {
        let g = random_aaut(&mut rng, 2, 2);
        let r = g.reduce();
        assert_eq!(r.reduce(), r);
    }
}

#[test]
fn reduce_preserves_boundary_action() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..20 {
        let g = random_aaut(&mut rng, 2, 2);
        let r = g.reduce();
        let depth = 1 + max_leaf_depth(&[&g, &r]);
        for x in all_addresses(2, 2, depth) {
            assert_eq!(g.evaluate(&x).unwrap(), r.evaluate(&x).unwrap());
        }
    }
}

#[test]
fn compose_inverse_is_identity() {
    let b = b();
    assert!(b.compose(&b.invert()).unwrap().is_identity());
    let s = swap();
    assert!(s.compose(&s).unwrap().is_identity());
}

#[test]
fn compose_matches_pointwise_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..15 {
        let f = random_aaut(&mut rng, 2, 2);
        let g = random_aaut(&mut rng, 2, 2);
        let gf = g.compose(&f).unwrap();
        let depth = 1 + max_leaf_depth(&[&gf, &f, &g]);
        for x in all_addresses(2, 2, depth) {
            let via_f = f.evaluate(&x).unwrap();
            assert_eq!(gf.evaluate(&x).unwrap(), g.evaluate(&via_f).unwrap());
        }
    }
}

#[test]
fn compose_associative_random() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..10 {
        let f = random_aaut(&mut rng, 2, 2);
        let g = random_aaut(&mut rng, 2, 2);
        let h = random_aaut(&mut rng, 2, 2);
        let lhs = h.compose(&g).unwrap().compose(&f).unwrap();
        let rhs = h.compose(&g.compose(&f).unwrap()).unwrap();
        assert_eq!(lhs, rhs);
        let id = AlmostAutomorphism::identity(2, 2);
        assert!(g.equals(&id.compose(&g).unwrap()));
        assert!(g.equals(&g.compose(&id).unwrap()));
    }
}

#[test]
fn invert_examples() {
    let id = AlmostAutomorphism::identity(2, 2);
    assert_eq!(id.invert(), id);
    let b = b();
    assert_eq!(b.invert().domain(), b.range());
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20 {
        let g = random_aaut(&mut rng, 2, 2);
        assert_eq!(g.invert().invert(), g.reduce());
        assert!(g.compose(&g.invert()).unwrap().is_identity());
        assert!(g.invert().compose(&g).unwrap().is_identity());
    }
}

#[test]
fn expand_to_examples() {
    let t = special_tree(5, 3, 3).unwrap();
    let rep = AlmostAutomorphism::identity(3, 3).expand_to(&t).unwrap();
    assert_eq!(rep.range(), &t);
    // containment failure: b's canonical domain has leaf 10, absent here
    let small = special_tree(3, 2, 2).unwrap();
    assert_eq!(b().expand_to(&small).unwrap_err(), AautError::NotExpandable);
    // class invariance
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..20 {
        let g = random_aaut(&mut rng, 2, 2);
        let deep = g.reduce().domain().clone();
        let deeper = deep
            .expand(&deep.leaves_ordered()[0].clone())
            .unwrap();
        let rep = g.expand_to(&deeper).unwrap();
        assert_eq!(rep.domain(), &deeper);
        assert_eq!(rep.reduce(), g.reduce());
    }
}

#[test]
fn equality_examples() {
    let id = AlmostAutomorphism::identity(2, 2);
    let t = special_tree(3, 2, 2).unwrap();
    let id_deep = id.expand_to(&t).unwrap();
    assert!(id.equals(&id_deep));
    assert!(!b().equals(&swap()));
}

#[test]
fn classify_swap_elliptic() {
    let c = swap().classify(10).unwrap();
    assert_eq!(
        c,
        Classification::Elliptic {
            witness: AdmissibleTree::root_star(2, 2)
        }
    );
}

#[test]
fn classify_translation() {
    let c = b().classify(10).unwrap();
    assert_eq!(
        c,
        Classification::Translation {
            cone: a("0"),
            exponent: 1,
            image: a("00"),
        }
    );
    // the inverse translates too, in the other cone
    assert!(matches!(
        b().invert().classify(10).unwrap(),
        Classification::Translation { .. }
    ));
}

#[test]
fn classify_finite_order_is_elliptic() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    // tree automorphisms (domain = range structurally) have finite order
    for _ in 0..10 {
        let g = random_aaut(&mut rng, 2, 2);
        let auto = g.compose(&g.invert()).unwrap(); // identity: trivially elliptic
        assert!(matches!(
            auto.classify(10).unwrap(),
            Classification::Elliptic { .. }
        ));
    }
    // a genuine nontrivial automorphism: swap with a deeper twist
    let g = AlmostAutomorphism::from_leaf_triples(
        2,
        2,
        vec![
            (a("0"), a("1"), portrait(&[("0", &[1, 0])])),
            (a("1"), a("0"), Portrait::identity()),
        ],
    )
    .unwrap();
    assert!(matches!(
        g.classify(20).unwrap(),
        Classification::Elliptic { .. }
    ));
}

#[test]
fn classify_budget_exhaustion() {
    assert_eq!(b().classify(0).unwrap_err(), AautError::BudgetExceeded(0));
}

#[test]
fn elliptic_powers_stay_bounded() {
    let g = swap();
    let Classification::Elliptic { witness } = g.classify(10).unwrap() else {
        panic!("swap must be elliptic");
    };
    let mut p = g.clone();
    for _ in 0..20 {
        p = p.compose(&g).unwrap();
        assert!(p.domain().leaf_count() <= witness.leaf_count());
    }
}

#[test]
fn parity_representative_examples() {
    let id = AlmostAutomorphism::identity(2, 2);
    let star = AdmissibleTree::root_star(2, 2);
    assert_eq!(id.parity_of_representative(&star).unwrap(), 1);
    assert_eq!(swap().parity_of_representative(&star).unwrap(), -1);
    let depth2 = AdmissibleTree::from_leaves(
        2,
        2,
        &[a("00"), a("01"), a("10"), a("11")],
    )
    .unwrap();
    assert_eq!(swap().parity_of_representative(&depth2).unwrap(), 1);
}

#[test]
fn parity_examples() {
    assert_eq!(AlmostAutomorphism::identity(3, 3).parity().unwrap(), 1);
    // rigid exchange of two root cones, d=3
    let star = AdmissibleTree::root_star(3, 3);
    let rho = AlmostAutomorphism::new(
        star.clone(),
        star.clone(),
        vec![1, 0, 2],
        vec![Portrait::identity(); 3],
    )
    .unwrap();
    assert_eq!(rho.parity().unwrap(), -1);
    assert_eq!(rho.parity_of_representative(&star).unwrap(), -1);
    let deeper = star.expand(&a("0")).unwrap();
    assert_eq!(rho.parity_of_representative(&deeper).unwrap(), -1);
    // undefined cases
    assert!(matches!(
        swap().parity(),
        Err(AautError::ParityUndefined(_))
    ));
    let odd_portrait = AlmostAutomorphism::from_leaf_triples(
        3,
        3,
        vec![
            (a("0"), a("0"), portrait(&[("1", &[1, 0, 2])])),
            (a("1"), a("1"), Portrait::identity()),
            (a("2"), a("2"), Portrait::identity()),
        ],
    )
    .unwrap();
    assert!(matches!(
        odd_portrait.parity(),
        Err(AautError::ParityUndefined(_))
    ));
}

#[test]
fn parity_representative_independent() {
    // d = 3, even portraits: value constant over all valid targets up to
    // depth 3
    let g = AlmostAutomorphism::from_leaf_triples(
        3,
        3,
        vec![
            (a("0"), a("1"), portrait(&[("", &[1, 2, 0])])),
            (a("1"), a("0"), Portrait::identity()),
            (a("2"), a("2"), portrait(&[("0", &[2, 0, 1])])),
        ],
    )
    .unwrap();
    let base = g.parity().unwrap();
    // independence holds once the portrait supports are exhausted: all
    // expansions of the rigid representative's domain give the same sign
    let dom = g.rigid_representative().domain().clone();
    let mut targets = vec![dom];
    for _ in 0..2 {
        let mut next = Vec::new();
        for t in &targets {
            for l in t.leaves_ordered() {
                if l.depth() < 4 {
                    next.push(t.expand(l).unwrap());
                }
            }
        }
        targets.extend(next);
    }
    targets.dedup();
    for t in targets {
        assert_eq!(g.parity_of_representative(&t).unwrap(), base);
    }
}

#[test]
fn parity_multiplicative() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut found = 0;
    while found < 15 {
        let f = random_aaut(&mut rng, 3, 3);
        let g = random_aaut(&mut rng, 3, 3);
        let (Ok(pf), Ok(pg)) = (f.parity(), g.parity()) else {
            continue;
        };
        found += 1;
        // canonical composites can absorb odd block orders into portrait
        // root labels; the rigid representative always passes the gate
        let gf = g.compose(&f).unwrap().rigid_representative();
        assert_eq!(gf.parity().unwrap(), pg * pf);
    }
}

// index-level expansion law for the leaf-bijection sign: replacing a
// source point s (image r) by a block of d points mapped via β multiplies
// the sign by sign(β)·(−1)^{(r−s)(d−1)}
#[test]
fn expansion_sign_law() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..200 {
        let n = rng.gen_range(1..=8usize);
        let d = *[2usize, 3, 4].get(rng.gen_range(0..3)).unwrap();
        let mut sigma: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            sigma.swap(i, rng.gen_range(0..=i));
        }
        let mut beta: Vec<usize> = (0..d).collect();
        for i in (1..d).rev() {
            beta.swap(i, rng.gen_range(0..=i));
        }
        let s = rng.gen_range(0..n);
        let r = sigma[s];
        // expanded permutation on n+d−1 points: source block occupies
        // positions s..s+d, target block positions r..r+d
        let expanded: Vec<usize> = (0..n + d - 1)
            .map(|i| {
                let (old_src, offset) = if i < s {
                    (i, None)
                } else if i < s + d {
                    (s, Some(i - s))
                } else {
                    (i - d + 1, None)
                };
                let img = sigma[old_src];
                match offset {
                    None => {
                        if img < r {
                            img
                        } else {
                            img + d - 1
                        }
                    }
                    Some(k) => r + beta[k],
                }
            })
            .collect();
        let rs = r as i64 - s as i64;
        let factor = if (rs * (d as i64 - 1)) % 2 == 0 { 1 } else { -1 };
        assert_eq!(
            perm_sign(&expanded),
            perm_sign(&sigma) * perm_sign(&beta) * factor,
        );
    }
}

#[test]
fn transporter_examples() {
    let t = Transporter::new(3, 7).unwrap();
    assert_eq!(t.from_tree().leaf_count(), t.to_tree().leaf_count());
    let id = AlmostAutomorphism::identity(3, 7);
    assert!(t.transport(&id).unwrap().is_identity());
    assert!(matches!(
        Transporter::new(3, 6),
        Err(AautError::CongruenceFailure(6, 2))
    ));
}

#[test]
fn transporter_is_homomorphism() {
    let t = Transporter::new(3, 7).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for _ in 0..10 {
        let f = random_aaut(&mut rng, 3, 7);
        let g = random_aaut(&mut rng, 3, 7);
        let lhs = t.transport(&g.compose(&f).unwrap()).unwrap();
        let rhs = t
            .transport(&g)
            .unwrap()
            .compose(&t.transport(&f).unwrap())
            .unwrap();
        assert_eq!(lhs, rhs);
    }
}

#[test]
fn json_roundtrip() {
    let b = b();
    let s = serde_json::to_string(&b).unwrap();
    let back: AlmostAutomorphism = serde_json::from_str(&s).unwrap();
    assert_eq!(back, b);
    // bit-exact on canonical forms
    assert_eq!(serde_json::to_string(&back).unwrap(), s);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..10 {
        let g = random_aaut(&mut rng, 3, 3).reduce();
        let s = serde_json::to_string(&g).unwrap();
        let back: AlmostAutomorphism = serde_json::from_str(&s).unwrap();
        assert_eq!(back, g);
    }
}
