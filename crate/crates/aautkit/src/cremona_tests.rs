use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cremona::*;

fn f(q: u16) -> Fq {
    Fq::new(q).unwrap()
}

#[test]
fn field_axioms_exhaustive() {
    for q in [2u16, 3, 4, 5, 7, 8, 9] {
        assert!(f(q).verify_axioms(), "axioms fail for q = {q}");
    }
    assert_eq!(Fq::new(6).unwrap_err(), CremonaError::UnsupportedField(6));
    assert_eq!(Fq::new(16).unwrap_err(), CremonaError::UnsupportedField(16));
}

#[test]
fn point_counts_and_order() {
    assert_eq!(enumerate_points(&f(2), 1).len(), 3);
    assert_eq!(enumerate_points(&f(2), 2).len(), 7);
    assert_eq!(enumerate_points(&f(4), 2).len(), 21);
    assert_eq!(enumerate_points(&f(9), 2).len(), 91);
    // canonical: sorted lex, first nonzero coordinate 1
    let pts = enumerate_points(&f(2), 2);
    assert_eq!(pts[0].0, vec![0, 0, 1]);
    assert!(pts.windows(2).all(|w| w[0] < w[1]));
    for p in &pts {
        assert_eq!(*p.0.iter().find(|&&c| c != 0).unwrap(), 1);
    }
    // q+1 rational lines through every point
    for q in [2u16, 3, 4] {
        let fq = f(q);
        for p in enumerate_points(&fq, 2) {
            assert_eq!(lines_through(&fq, &p).len(), (q + 1) as usize);
        }
    }
}

#[test]
fn induced_permutation_examples() {
    let f2 = f(2);
    let id: Matrix = vec![vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, 1]];
    assert!(induced_permutation(&f2, &ProjMap::Linear(id)).unwrap().is_identity());
    let cyc: Matrix = vec![vec![0, 1, 0], vec![0, 0, 1], vec![1, 0, 0]];
    let perm = induced_permutation(&f2, &ProjMap::Linear(cyc)).unwrap();
    assert_eq!(perm.0.len(), 7);
    assert_eq!(perm.order(), 3);
    // the standard quadratic involution has three rational base points
    for q in [2u16, 3, 4, 5] {
        assert!(matches!(
            induced_permutation(&f(q), &ProjMap::QuadraticStd),
            Err(CremonaError::NotBijectiveOnRationalPoints(_))
        ));
    }
    // singular matrix rejected
    let sing: Matrix = vec![vec![1, 0, 0], vec![1, 0, 0], vec![0, 0, 1]];
    assert!(matches!(
        induced_permutation(&f2, &ProjMap::Linear(sing)),
        Err(CremonaError::BadMap(_))
    ));
}

#[test]
fn induced_permutation_is_homomorphism() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for q in [2u16, 3, 4] {
        let fq = f(q);
        for _ in 0..20 {
            let m1 = random_linear(&fq, &mut rng);
            let m2 = random_linear(&fq, &mut rng);
            let p1 = induced_permutation(&fq, &ProjMap::Linear(m1.clone())).unwrap();
            let p2 = induced_permutation(&fq, &ProjMap::Linear(m2.clone())).unwrap();
            let p12 = induced_permutation(&fq, &ProjMap::Linear(mat_mul(&fq, &m1, &m2))).unwrap();
            assert_eq!(p12, p1.compose(&p2));
        }
    }
}

#[test]
fn quadratic_ab_is_not_bijective_on_the_plane() {
    // conics through the rational point a and the conjugate pair {b, b̄}
    // define a quadratic map undefined at a and collapsing the rational
    // line through the pair; the permutation constructor reports this
    // honestly instead of inventing a completion
    let f2 = f(2);
    let m = ProjMap::QuadraticAB {
        a: ProjPoint(vec![1, 1, 1]),
        pair: ConjugatePair {
            b: vec![(0, 1), (1, 0), (0, 0)], // [s : 1 : 0] over F4
        },
    };
    // generic evaluation works
    let img = evaluate(&f2, &m, &ProjPoint(vec![0, 0, 1]));
    assert!(img.is_some());
    assert!(matches!(
        induced_permutation(&f2, &m),
        Err(CremonaError::NotBijectiveOnRationalPoints(_))
    ));
}

#[test]
fn pgl2_census() {
    for (q, expect_even) in [(2u16, false), (3, false), (4, true), (5, false), (8, true)] {
        let report = pgl2_parity_census(&f(q));
        assert_eq!(report.all_even, expect_even, "q = {q}");
        let qq = q as usize;
        assert_eq!(report.group_order, qq * (qq * qq - 1), "|PGL2(F{q})|");
        assert_eq!(report.all_even, report.odd_example.is_none());
    }
}

#[test]
fn permutation_parity_basics() {
    assert_eq!(Permutation::identity(5).sign(), 1);
    assert_eq!(Permutation(vec![1, 0, 2]).sign(), -1);
    assert_eq!(Permutation(vec![1, 2, 0]).sign(), 1);
}

#[test]
fn expand_at_examples() {
    // swap on 2 points, expand source 0 onto target 1 with a 2-block
    let perm = Permutation(vec![1, 0]);
    let out = expand_at(&perm, 0, 1, 2, &Permutation::identity(2)).unwrap();
    assert_eq!(out.0, vec![1, 2, 0]);
    assert_eq!(out.sign(), 1); // (−1)·1·(−1)^{1·1}
    // fixed point, β a transposition: only the block factor
    let perm = Permutation(vec![0, 1]);
    let out = expand_at(&perm, 0, 0, 2, &Permutation(vec![1, 0])).unwrap();
    assert_eq!(out.sign(), -1);
    // position mismatch
    assert_eq!(
        expand_at(&Permutation(vec![1, 0]), 0, 0, 2, &Permutation::identity(2)).unwrap_err(),
        CremonaError::PositionMismatch(0, 1)
    );
}

#[test]
fn expand_at_sign_law() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..1000 {
        let n = rng.gen_range(2..=8usize);
        let d = rng.gen_range(2..=4usize);
        let mut p: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            p.swap(i, rng.gen_range(0..=i));
        }
        let mut b: Vec<usize> = (0..d).collect();
        for i in (1..d).rev() {
            b.swap(i, rng.gen_range(0..=i));
        }
        let s = rng.gen_range(0..n);
        let perm = Permutation(p);
        let beta = Permutation(b);
        let r = perm.0[s];
        let out = expand_at(&perm, s, r, d, &beta).unwrap();
        let delta = (r as i64 - s as i64).unsigned_abs() as u32 * (d as u32 - 1);
        let expected = perm.sign() * beta.sign() * if delta.is_multiple_of(2) { 1 } else { -1 };
        assert_eq!(out.sign(), expected);
        // d odd with trivial β never changes the sign
        if d % 2 == 1 {
            let out = expand_at(&perm, s, r, d, &Permutation::identity(d)).unwrap();
            assert_eq!(out.sign(), perm.sign());
        }
    }
}

#[test]
fn bsgs_examples() {
    let three_cycle = Permutation(vec![1, 2, 0]);
    assert_eq!(Bsgs::new(3, &[three_cycle]).order(), 3);
    // Sym(7) from a transposition and a 7-cycle
    let t = Permutation(vec![1, 0, 2, 3, 4, 5, 6]);
    let c = Permutation(vec![1, 2, 3, 4, 5, 6, 0]);
    let sym7 = Bsgs::new(7, &[t.clone(), c.clone()]);
    assert_eq!(sym7.order(), 5040);
    assert!(sym7.contains(&c.compose(&t)));
    // PGL3(F2) on the 7 points of the Fano plane
    let f2 = f(2);
    let cyc: Matrix = vec![vec![0, 1, 0], vec![0, 0, 1], vec![1, 0, 0]];
    let trans: Matrix = vec![vec![1, 1, 0], vec![0, 1, 0], vec![0, 0, 1]];
    let gens: Vec<Permutation> = [cyc, trans]
        .iter()
        .map(|m| induced_permutation(&f2, &ProjMap::Linear(m.clone())).unwrap())
        .collect();
    let pgl = Bsgs::new(7, &gens);
    assert_eq!(pgl.order(), 168);
    // membership: the group is a proper subgroup of Sym(7)
    assert!(pgl.contains(&gens[0]));
    assert!(!pgl.contains(&t));
}

#[test]
fn bsgs_matches_naive_closure() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..20 {
        let n = rng.gen_range(3..=7usize);
        let gens: Vec<Permutation> = (0..2)
            .map(|_| {
                let mut p: Vec<usize> = (0..n).collect();
                for i in (1..n).rev() {
                    p.swap(i, rng.gen_range(0..=i));
                }
                Permutation(p)
            })
            .collect();
        let naive = naive_closure(&gens, 1_000_000).unwrap();
        let bsgs = Bsgs::new(n, &gens);
        assert_eq!(bsgs.order(), naive.len() as u128);
        for p in naive.iter().take(50) {
            assert!(bsgs.contains(p));
        }
    }
}

#[test]
fn depth1_identity_and_counts() {
    let f2 = f(2);
    let id: Matrix = vec![vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, 1]];
    let action = depth1_action(&f2, &ProjMap::Linear(id)).unwrap();
    // all 7 points and 7·3 pairs, each fixed
    assert_eq!(action.len(), 7 + 7 * 3);
    assert!(action.iter().all(|(a, b)| a == b));
    // QuadraticStd over F2: 4 plain points + 3·3 exceptional directions on
    // each side; the domain and range vertex sets coincide (involution)
    let action = depth1_action(&f2, &ProjMap::QuadraticStd).unwrap();
    assert_eq!(action.len(), 4 + 9);
    let dom: BTreeSet<_> = action.iter().map(|(a, _)| a.clone()).collect();
    let ran: BTreeSet<_> = action.iter().map(|(_, b)| b.clone()).collect();
    assert_eq!(dom, ran);
    // involution: applying the correspondence twice is the identity
    for (a, b) in &action {
        let (b2, a2) = action.iter().find(|(x, _)| x == b).unwrap();
        assert_eq!(b2, b);
        assert_eq!(a2, a);
    }
    // σ_{a,b} is not supported at depth 1
    let m = ProjMap::QuadraticAB {
        a: ProjPoint(vec![1, 1, 1]),
        pair: ConjugatePair { b: vec![(0, 1), (1, 0), (0, 0)] },
    };
    assert_eq!(depth1_action(&f2, &m).unwrap_err(), CremonaError::UnsupportedMap);
}

#[test]
fn depth1_linear_matches_line_images() {
    // the direction image of a Linear map equals the set-image of the line
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let f4 = f(4);
    let pts = enumerate_points(&f4, 2);
    for _ in 0..5 {
        let m = random_linear(&f4, &mut rng);
        let action = depth1_action(&f4, &ProjMap::Linear(m.clone())).unwrap();
        for (a, b) in &action {
            if let (BubbleVertex::Dir(p, l), BubbleVertex::Dir(ip, il)) = (a, b) {
                let on_l: BTreeSet<ProjPoint> = pts
                    .iter()
                    .filter(|v| {
                        v.0.iter()
                            .zip(&l.0)
                            .fold(0u8, |acc, (&x, &y)| f4.add(acc, f4.mul(x, y)))
                            == 0
                    })
                    .map(|v| evaluate(&f4, &ProjMap::Linear(m.clone()), v).unwrap())
                    .collect();
                let on_il: BTreeSet<ProjPoint> = pts
                    .iter()
                    .filter(|v| {
                        v.0.iter()
                            .zip(&il.0)
                            .fold(0u8, |acc, (&x, &y)| f4.add(acc, f4.mul(x, y)))
                            == 0
                    })
                    .cloned()
                    .collect();
                assert_eq!(on_l, on_il);
                assert_eq!(evaluate(&f4, &ProjMap::Linear(m.clone()), p).unwrap(), *ip);
            }
        }
    }
}

#[test]
fn depth1_commutes_with_composition() {
    let mut rng = ChaCha8Rng::seed_from_u64(50);
    let f3 = f(3);
    for _ in 0..10 {
        let m1 = random_linear(&f3, &mut rng);
        let m2 = random_linear(&f3, &mut rng);
        let a1 = depth1_action(&f3, &ProjMap::Linear(m1.clone())).unwrap();
        let a2 = depth1_action(&f3, &ProjMap::Linear(m2.clone())).unwrap();
        let a12 = depth1_action(&f3, &ProjMap::Linear(mat_mul(&f3, &m1, &m2))).unwrap();
        for (x, y) in &a12 {
            let (_, mid) = a2.iter().find(|(a, _)| a == x).unwrap();
            let (_, z) = a1.iter().find(|(a, _)| a == mid).unwrap();
            assert_eq!(z, y);
        }
    }
}

#[test]
fn induced_aaut_linear() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let f4 = f(4);
    for _ in 0..10 {
        let m = random_linear(&f4, &mut rng);
        let a = induced_aaut_level1(&f4, &ProjMap::Linear(m.clone())).unwrap();
        assert_eq!(a.d(), 5);
        assert_eq!(a.root_arity(), 21);
        assert_eq!(a.domain().leaf_count(), 21);
        assert_eq!(a.range().leaf_count(), 21);
        let perm = induced_permutation(&f4, &ProjMap::Linear(m)).unwrap();
        assert_eq!(a.parity().unwrap(), perm.sign());
    }
}

#[test]
fn induced_aaut_quadratic_std() {
    let f4 = f(4);
    let a = induced_aaut_level1(&f4, &ProjMap::QuadraticStd).unwrap();
    // 21 − 3 point leaves + 3·5 direction leaves = 33 on each side
    assert_eq!(a.domain().leaf_count(), 33);
    assert_eq!(a.range().leaf_count(), 33);
    assert_eq!(a.parity().unwrap(), 1);
    // over F2: 4 + 9 = 13 leaves, parity defined (d = 3 odd)
    let f2 = f(2);
    let a = induced_aaut_level1(&f2, &ProjMap::QuadraticStd).unwrap();
    assert_eq!(a.domain().leaf_count(), 13);
    a.parity().unwrap();
}

#[test]
fn induced_aaut_functorial_on_linear() {
    let mut rng = ChaCha8Rng::seed_from_u64(61);
    let f2 = f(2);
    for _ in 0..10 {
        let m1 = random_linear(&f2, &mut rng);
        let m2 = random_linear(&f2, &mut rng);
        let a1 = induced_aaut_level1(&f2, &ProjMap::Linear(m1.clone())).unwrap();
        let a2 = induced_aaut_level1(&f2, &ProjMap::Linear(m2.clone())).unwrap();
        let a12 =
            induced_aaut_level1(&f2, &ProjMap::Linear(mat_mul(&f2, &m1, &m2))).unwrap();
        assert!(a1.compose(&a2).unwrap().equals(&a12));
    }
}

#[test]
fn parity_suite_reports() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let r4 = parity_suite(&f(4), &mut rng, 30).unwrap();
    assert!(r4.all_linear_even);
    assert_eq!(r4.quadratic_std_parity, Some(1));
    let r2 = parity_suite(&f(2), &mut rng, 10).unwrap();
    assert_eq!(r2.closure_order, Some(168));
    // PGL3(F3) = PSL3(F3) is simple, so the sign homomorphism is trivial:
    // every linear map induces an even permutation of the 13 points. Odd
    // permutations over odd q require quadratic generators.
    let r3 = parity_suite(&f(3), &mut rng, 40).unwrap();
    assert!(!r3.odd_linear_found);
    assert!(r3.all_linear_even);
    assert_eq!(r3.closure_order, Some(5616)); // |PGL3(F3)|
}
