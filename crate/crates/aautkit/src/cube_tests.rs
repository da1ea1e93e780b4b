use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::aaut::*;
use crate::cube::*;
use crate::simplicial::interval_complex;
use crate::tree::*;

fn a(s: &str) -> Address {
    Address::parse(s).unwrap()
}

fn swap() -> AlmostAutomorphism {
    let star = AdmissibleTree::root_star(2, 2);
    AlmostAutomorphism::new(star.clone(), star, vec![1, 0], vec![Portrait::identity(); 2])
        .unwrap()
}

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

fn base(d: u16) -> CubeVertex {
    CubeVertex::base(d, d)
}

fn star_vertex(d: u16) -> CubeVertex {
    CubeVertex::new(
        AdmissibleTree::root_star(d, d),
        AlmostAutomorphism::identity(d, d),
    )
    .unwrap()
}

/// identity vertex over an arbitrary tree
fn tree_vertex(t: AdmissibleTree) -> CubeVertex {
    let (d, n) = t.arity();
    CubeVertex::new(t, AlmostAutomorphism::identity(d, n)).unwrap()
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

fn set(xs: &[usize]) -> BTreeSet<usize> {
    xs.iter().copied().collect()
}

#[test]
fn vertex_equal_examples() {
    let sv = star_vertex(2);
    let swapped = CubeVertex::new(AdmissibleTree::root_star(2, 2), swap()).unwrap();
    assert!(sv.vertex_equal(&swapped));
    assert!(swapped.vertex_equal(&sv));
    // different heights
    assert!(!base(2).vertex_equal(&sv));
    // composing a rigid permutation of the leaves into φ fixes the class
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let g = random_aaut(&mut rng, 2, 2);
        let t = g.domain().clone();
        let x = CubeVertex::new(t.clone(), g.clone()).unwrap();
        for rp in rigid_permutations(&t, 50).unwrap() {
            let rho = AlmostAutomorphism::new(
                t.clone(),
                t.clone(),
                rp.leaf_map().to_vec(),
                vec![Portrait::identity(); t.leaf_count()],
            )
            .unwrap();
            let y = CubeVertex::new(t.clone(), g.compose(&rho).unwrap()).unwrap();
            assert!(x.vertex_equal(&y));
        }
    }
}

#[test]
fn up_neighbor_examples() {
    // the height-1 base vertex has exactly h(x) = 1 up-neighbor
    let ups = base(2).up_neighbors();
    assert_eq!(ups.len(), 1);
    assert!(ups[0].vertex_equal(&star_vertex(2)));
    // root-star, d=2: two ups, pairwise distinct, heights h + (d-1)
    let ups = star_vertex(2).up_neighbors();
    assert_eq!(ups.len(), 2);
    assert!(!ups[0].vertex_equal(&ups[1]));
    for u in &ups {
        assert_eq!(u.height(), 3);
    }
    // height 3, d = 2
    let v = tree_vertex(AdmissibleTree::root_star(2, 2).expand(&a("0")).unwrap());
    assert_eq!(v.up_neighbors().len(), 3);
    for u in v.up_neighbors() {
        assert_eq!(u.height(), 4);
    }
}

#[test]
fn down_neighbor_examples() {
    // d=2, height 3: C(3,2) = 3 downs, pairwise distinct; degree 3 + 3 = 6
    let v = tree_vertex(AdmissibleTree::root_star(2, 2).expand(&a("0")).unwrap());
    let downs = v.down_neighbors().unwrap();
    assert_eq!(downs.len(), 3);
    for (i, (_, y)) in downs.iter().enumerate() {
        assert_eq!(y.height(), 2);
        for (_, z) in &downs[i + 1..] {
            assert!(!y.vertex_equal(z));
        }
        // x is an up-neighbor of each of its down-neighbors
        assert!(y.up_neighbors().iter().any(|u| u.vertex_equal(&v)));
    }
    assert_eq!(degree(&v).unwrap(), 6);
    // d=3, height 3: the single down is the base vertex
    let downs = star_vertex(3).down_neighbors().unwrap();
    assert_eq!(downs.len(), 1);
    assert!(downs[0].1.vertex_equal(&base(3)));
    // {root} has nothing to collapse
    assert_eq!(
        base(2).down_neighbors().unwrap_err(),
        CubeError::NoCollapsibleVertex
    );
}

#[test]
fn spans_cube_examples() {
    // height 4, d=2: the tree 00,01,10,11
    let t = AdmissibleTree::root_star(2, 2)
        .expand(&a("0"))
        .unwrap()
        .expand(&a("1"))
        .unwrap();
    let v = tree_vertex(t);
    let disjoint = [
        v.down_neighbor_for(&set(&[0, 1])).unwrap(),
        v.down_neighbor_for(&set(&[2, 3])).unwrap(),
    ];
    assert!(v.spans_cube(&disjoint).unwrap());
    let overlapping = [
        v.down_neighbor_for(&set(&[0, 1])).unwrap(),
        v.down_neighbor_for(&set(&[1, 2])).unwrap(),
    ];
    assert!(!v.spans_cube(&overlapping).unwrap());
    // a vertex that is not a down-neighbor at all
    assert_eq!(
        v.spans_cube(&[base(2)]).unwrap_err(),
        CubeError::NotANeighbor
    );
}

#[test]
fn distinct_ups_span_a_square() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for _ in 0..10 {
        let g = random_aaut(&mut rng, 2, 2);
        let x = CubeVertex::new(g.domain().clone(), g).unwrap();
        let leaves = x.tree().leaves_ordered().to_vec();
        for i in 0..leaves.len() {
            for j in i + 1..leaves.len() {
                let top = tree_vertex(
                    x.tree().expand(&leaves[i]).unwrap().expand(&leaves[j]).unwrap(),
                );
                let top = CubeVertex::new(top.tree().clone(), x.elt().clone()).unwrap();
                // both single expansions are down-neighbors of top spanning a square
                let y1 = CubeVertex::new(
                    x.tree().expand(&leaves[i]).unwrap(),
                    x.elt().clone(),
                )
                .unwrap();
                let y2 = CubeVertex::new(
                    x.tree().expand(&leaves[j]).unwrap(),
                    x.elt().clone(),
                )
                .unwrap();
                assert!(top.spans_cube(&[y1, y2]).unwrap());
            }
        }
    }
}

#[test]
fn descending_link_examples() {
    // h=3, d=2: three isolated vertices, so isomorphic to I(2,3)
    let v = tree_vertex(AdmissibleTree::root_star(2, 2).expand(&a("0")).unwrap());
    let (link, phi) = v.descending_link().unwrap();
    assert_eq!(link.vertex_count(), 3);
    assert_eq!(link.faces_of_dim(1).len(), 0);
    assert_eq!(phi.len(), 3);
    // h=5, d=2: I(2,5) = Petersen graph
    let t = AdmissibleTree::root_star(2, 2)
        .expand(&a("0"))
        .unwrap()
        .expand(&a("1"))
        .unwrap()
        .expand(&a("00"))
        .unwrap();
    let (link, phi) = tree_vertex(t).descending_link().unwrap();
    assert_eq!(link.vertex_count(), 10);
    assert_eq!(link.faces_of_dim(1).len(), 15);
    assert_eq!(link.faces_of_dim(2).len(), 0);
    assert_eq!(phi.len(), 10);
    // h=1: empty
    let (link, phi) = base(2).descending_link().unwrap();
    assert_eq!(link.vertex_count(), 0);
    assert!(phi.is_empty());
}

#[test]
fn descending_link_matches_interval_complex() {
    // Φ sends a down-neighbor to its leaf subset; two downs are joined by
    // an edge (span a square with x) iff their subsets are disjoint, which
    // is exactly the edge rule of the interval complex.
    for (d, t) in [
        (2u16, AdmissibleTree::root_star(2, 2).expand(&a("0")).unwrap()),
        (
            2,
            AdmissibleTree::root_star(2, 2)
                .expand(&a("0"))
                .unwrap()
                .expand(&a("1"))
                .unwrap(),
        ),
        (3, AdmissibleTree::root_star(3, 3).expand(&a("2")).unwrap()),
    ] {
        let v = tree_vertex(t);
        let h = v.height();
        let (link, phi) = v.descending_link().unwrap();
        let model = interval_complex(d as usize, h);
        assert_eq!(link.vertex_count(), model.vertex_count());
        assert_eq!(link.faces_of_dim(1), model.faces_of_dim(1));
        for (s, y) in &phi {
            for (s2, y2) in &phi {
                if s == s2 {
                    continue;
                }
                let spans = v.spans_cube(&[y.clone(), y2.clone()]).unwrap();
                assert_eq!(spans, s.is_disjoint(s2));
            }
        }
    }
}

#[test]
fn ascending_link_and_join() {
    // height 1: a single point; root-star: an edge; height 3: a 2-simplex
    assert_eq!(base(2).ascending_link().vertex_count(), 1);
    let star = star_vertex(2).ascending_link();
    assert_eq!(star.vertex_count(), 2);
    assert_eq!(star.faces_of_dim(1).len(), 1);
    let v = tree_vertex(AdmissibleTree::root_star(2, 2).expand(&a("0")).unwrap());
    let asc = v.ascending_link();
    assert_eq!(asc.vertex_count(), 3);
    assert_eq!(asc.faces_of_dim(2).len(), 1);
    // link = join(ascending, descending); it is flag with h + C(h,d) vertices
    let link = v.link().unwrap();
    assert_eq!(link.vertex_count(), 6);
    assert!(link.is_flag().is_ok());
    let link = star_vertex(3).link().unwrap();
    assert_eq!(link.vertex_count(), 3 + 1);
    assert!(link.is_flag().is_ok());
}

#[test]
fn ball_examples() {
    let b0 = ball(&base(2), 0, 10).unwrap();
    assert_eq!(b0.vertices.len(), 1);
    assert!(b0.edges.is_empty());
    // the base vertex has exactly one neighbor (its unique expansion), so
    // the radius-1 ball has 2 vertices
    let b1 = ball(&base(2), 1, 10).unwrap();
    assert_eq!(b1.vertices.len(), 2);
    assert_eq!(b1.edges.len(), 1);
    // the root-star vertex has degree 2 + 1 = 3
    let b1 = ball(&star_vertex(2), 1, 10).unwrap();
    assert_eq!(b1.vertices.len(), 4);
    assert!(b1.is_connected());
    // caps are honored
    assert_eq!(
        ball(&base(2), 3, 3).unwrap_err(),
        CubeError::CapExceeded(3)
    );
}

#[test]
fn ball_edge_height_rule_and_connectivity() {
    for d in [2u16, 3] {
        let bl = ball(&base(d), 2, 200).unwrap();
        assert!(bl.is_connected());
        for &(x, y) in &bl.edges {
            let (hx, hy) = (bl.vertices[x].height, bl.vertices[y].height);
            assert_eq!(hx.abs_diff(hy), (d - 1) as usize);
        }
    }
}

#[test]
fn ball_degree_law() {
    // every vertex of the complex has degree h + C(h,d)
    fn choose(n: usize, k: usize) -> usize {
        if k > n {
            return 0;
        }
        (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
    }
    for d in [2u16, 3] {
        let bl = ball(&base(d), 2, 500).unwrap();
        for v in &bl.vertices {
            let h = v.height;
            assert_eq!(degree(&v.vertex).unwrap(), h + choose(h, d as usize));
        }
    }
}

#[test]
fn ball_cubes() {
    // radius 3 from the base vertex of T_2 reaches height-4 tops whose
    // squares are fully explored
    let bl = ball(&base(2), 3, 300).unwrap();
    let cubes = all_cubes(&bl).unwrap();
    assert!(cubes.iter().any(|(dim, _)| *dim == 2));
    for (dim, ids) in &cubes {
        assert_eq!(ids.len(), 1 << dim);
        // a k-cube has corners at exactly C(k, j) heights top − j(d−1)
        let mut by_height: BTreeMap<usize, usize> = BTreeMap::new();
        for &i in ids {
            *by_height.entry(bl.vertices[i].height).or_insert(0) += 1;
        }
        let top = *by_height.keys().max().unwrap();
        for (h, count) in &by_height {
            let j = top - h; // d = 2 here, so one level per collapse
            let expected = (0..j).fold(1usize, |acc, i| acc * (dim - i) / (i + 1));
            assert_eq!(*count, expected);
        }
        if *dim == 1 {
            assert!(bl.edges.contains(&(ids[0].min(ids[1]), ids[0].max(ids[1]))));
        }
    }
    // maximal cubes are recorded and none contains another
    assert!(!bl.cubes.is_empty());
    for c in &bl.cubes {
        for d2 in &bl.cubes {
            if c != d2 {
                assert!(!c.iter().all(|x| d2.contains(x)));
            }
        }
    }
}

#[test]
fn cube_corner_order_independent() {
    let t = AdmissibleTree::root_star(2, 2)
        .expand(&a("0"))
        .unwrap()
        .expand(&a("1"))
        .unwrap();
    let v = tree_vertex(t);
    let f1 = [set(&[0, 1]), set(&[2, 3])];
    let f2 = [set(&[2, 3]), set(&[0, 1])];
    let c1 = v.cube_corner(&f1).unwrap();
    let c2 = v.cube_corner(&f2).unwrap();
    assert!(c1.vertex_equal(&c2));
    assert_eq!(c1.height(), 2);
    assert!(c1.vertex_equal(&star_vertex(2)));
}

#[test]
fn act_examples() {
    let bv = star_vertex(2);
    let id = AlmostAutomorphism::identity(2, 2);
    assert!(bv.act(&id).unwrap().vertex_equal(&bv));
    // swap stabilizes the root-star vertex
    assert!(bv.act(&swap()).unwrap().vertex_equal(&bv));
    // the translation b moves it
    assert!(!bv.act(&b()).unwrap().vertex_equal(&bv));
    assert!(!base(2).act(&b()).unwrap().vertex_equal(&base(2)));
}

#[test]
fn act_is_a_group_action() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..40 {
        let f = random_aaut(&mut rng, 2, 2);
        let g = random_aaut(&mut rng, 2, 2);
        let x = CubeVertex::new(f.domain().clone(), random_aaut(&mut rng, 2, 2)).unwrap();
        let lhs = x.act(&f).unwrap().act(&g).unwrap();
        let rhs = x.act(&g.compose(&f).unwrap()).unwrap();
        assert!(lhs.vertex_equal(&rhs));
        assert_eq!(lhs.height(), x.height());
    }
}

#[test]
fn stabilizer_examples() {
    let bv = star_vertex(2);
    let cert = bv.stabilizes(&swap()).unwrap().expect("swap stabilizes");
    assert_eq!(cert.domain(), bv.tree());
    assert_eq!(cert.range(), bv.tree());
    assert!(bv.stabilizes(&b()).unwrap().is_none());
    assert!(base(2).stabilizes(&b()).unwrap().is_none());
}

#[test]
fn stabilizer_certificates_random() {
    // conjugates of forest automorphisms off tree(x) stabilize [A, φ], and
    // the certificate expands between A and itself
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for _ in 0..50 {
        let phi = random_aaut(&mut rng, 2, 2);
        let x = CubeVertex::new(phi.domain().clone(), phi.clone()).unwrap();
        let t = x.tree().clone();
        let h = t.leaf_count();
        let mut leaf_map: Vec<usize> = (0..h).collect();
        for i in (1..h).rev() {
            leaf_map.swap(i, rng.gen_range(0..=i));
        }
        let rho = AlmostAutomorphism::new(
            t.clone(),
            t.clone(),
            leaf_map,
            vec![Portrait::identity(); h],
        )
        .unwrap();
        let g = phi.compose(&rho).unwrap().compose(&phi.invert()).unwrap();
        let cert = x.stabilizes(&g).unwrap().expect("conjugate stabilizes");
        assert_eq!(cert.domain(), &t);
        assert_eq!(cert.range(), &t);
        // the certificate is the conjugate itself
        assert!(cert.equals(&phi.invert().compose(&g).unwrap().compose(&phi).unwrap()));
    }
}

#[test]
fn orbit_census_bounds() {
    let bl = ball(&base(2), 3, 300).unwrap();
    let census = cube_orbit_census(&bl, 4).unwrap();
    for (h, c) in &census {
        assert_eq!(c.vertex_orbits, 1, "height {h}");
        assert!(c.cell_classes <= c.bound);
        assert_eq!(c.bound, 1 << (h + 1));
    }
    // height-1 cells: only the vertex class (cubes containing the base
    // vertex have it as their unique minimum), within the bound 4
    let h1 = &census[&1];
    assert!(h1.cell_classes <= 4);
    assert!(h1.dims.contains(&0));
}

#[test]
fn transporter_carries_vertices() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..20 {
        let f = random_aaut(&mut rng, 2, 2);
        let g = random_aaut(&mut rng, 2, 2);
        let x = CubeVertex::new(f.domain().clone(), f).unwrap();
        // grow g's vertex tree to the same height
        let mut t = g.domain().clone();
        while t.leaf_count() < x.height() {
            let l = t.leaves_ordered()[0].clone();
            t = t.expand(&l).unwrap();
        }
        if t.leaf_count() != x.height() {
            continue;
        }
        let y = CubeVertex::new(t.clone(), g).unwrap();
        let tr = transporter(&x, &y).unwrap();
        assert!(x.act(&tr).unwrap().vertex_equal(&y));
    }
}

#[test]
fn export_shapes() {
    let bl = ball(&base(2), 1, 10).unwrap();
    let json = bl.to_json();
    assert!(json.get("vertices").unwrap().is_array());
    assert!(json.get("edges").unwrap().is_array());
    assert!(json.get("cubes").unwrap().is_array());
    assert_eq!(json["vertices"][0]["height"], 1);
    let dot = bl.to_dot();
    assert!(dot.contains("graph ball"));
    assert!(dot.contains("h=1"));
    // determinism
    let bl2 = ball(&base(2), 1, 10).unwrap();
    assert_eq!(bl.to_json(), bl2.to_json());
}

// ---- null-homotopy certificate for short cycles ----------------------------

/// squares of the ball as 4-cycles (vertex id sequences)
fn square_cycles(bl: &ExploredBall) -> Vec<[usize; 4]> {
    let edges: BTreeSet<(usize, usize)> = bl.edges.iter().copied().collect();
    let adj = |x: usize, y: usize| edges.contains(&(x.min(y), x.max(y)));
    all_cubes(bl)
        .unwrap()
        .into_iter()
        .filter(|(dim, _)| *dim == 2)
        .map(|(_, ids)| {
            let a = ids[0];
            let nbrs: Vec<usize> = ids[1..].iter().copied().filter(|&x| adj(a, x)).collect();
            let opp = *ids[1..].iter().find(|&&x| !adj(a, x)).unwrap();
            assert_eq!(nbrs.len(), 2);
            [a, nbrs[0], opp, nbrs[1]]
        })
        .collect()
}

/// shrink a closed walk using backtrack removal and square moves; true if
/// it contracts to a point
fn null_homotopic(cycle: &[usize], squares: &[[usize; 4]]) -> bool {
    // corner move table: (prev, mid, next) -> other mid
    let mut corner: BTreeMap<(usize, usize, usize), usize> = BTreeMap::new();
    for s in squares {
        for i in 0..4 {
            let (p, m, n, o) = (s[i], s[(i + 1) % 4], s[(i + 2) % 4], s[(i + 3) % 4]);
            corner.insert((p, m, n), o);
            corner.insert((n, m, p), o);
        }
    }
    let canon = |w: &[usize]| -> Vec<usize> {
        if w.is_empty() {
            return Vec::new();
        }
        (0..w.len())
            .map(|r| {
                let mut v: Vec<usize> = w[r..].to_vec();
                v.extend_from_slice(&w[..r]);
                v
            })
            .min()
            .unwrap()
    };
    let mut seen: BTreeSet<Vec<usize>> = BTreeSet::new();
    let mut queue: VecDeque<Vec<usize>> = VecDeque::from([canon(cycle)]);
    let mut steps = 0usize;
    while let Some(w) = queue.pop_front() {
        if w.len() <= 2 {
            return true;
        }
        steps += 1;
        if steps > 200_000 {
            return false;
        }
        let n = w.len();
        for i in 0..n {
            let (p, m, nx) = (w[i], w[(i + 1) % n], w[(i + 2) % n]);
            if p == nx {
                // backtrack: drop two letters
                let mut v: Vec<usize> = Vec::with_capacity(n - 2);
                for (j, &x) in w.iter().enumerate() {
                    if j != (i + 1) % n && j != (i + 2) % n {
                        v.push(x);
                    }
                }
                let v = canon(&v);
                if seen.insert(v.clone()) {
                    queue.push_front(v);
                }
            } else if let Some(&o) = corner.get(&(p, m, nx)) {
                let mut v = w.clone();
                v[(i + 1) % n] = o;
                let v = canon(&v);
                if seen.insert(v.clone()) {
                    queue.push_back(v);
                }
            }
        }
    }
    false
}

/// all simple cycles of length ≤ max_len, one representative each
fn short_cycles(bl: &ExploredBall, max_len: usize) -> Vec<Vec<usize>> {
    let n = bl.vertices.len();
    let mut adj = vec![Vec::new(); n];
    for &(x, y) in &bl.edges {
        adj[x].push(y);
        adj[y].push(x);
    }
    let mut out = Vec::new();
    let mut path = Vec::new();
    fn dfs(
        v: usize,
        start: usize,
        adj: &[Vec<usize>],
        path: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
        max_len: usize,
    ) {
        for &w in &adj[v] {
            if w == start && path.len() >= 3 {
                // canonical: orientation with second vertex < last vertex
                if path[1] < *path.last().unwrap() {
                    out.push(path.clone());
                }
            } else if w > start && !path.contains(&w) && path.len() < max_len {
                path.push(w);
                dfs(w, start, adj, path, out, max_len);
                path.pop();
            }
        }
    }
    for s in 0..n {
        path.clear();
        path.push(s);
        dfs(s, s, &adj, &mut path, &mut out, max_len);
    }
    out
}

#[test]
fn short_cycles_null_homotopic() {
    for d in [2u16, 3] {
        let bl = ball(&base(d), 3, 400).unwrap();
        let squares = square_cycles(&bl);
        let cycles = short_cycles(&bl, 8);
        assert!(!cycles.is_empty() || d == 3);
        for c in &cycles {
            assert!(null_homotopic(c, &squares), "cycle {c:?} did not contract");
        }
    }
}
