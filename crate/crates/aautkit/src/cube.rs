//! The cube complex of tree pairs: vertices are classes [A, φ] of an
//! admissible tree and an almost automorphism, adjacent when one tree is
//! an elementary expansion of the other up to composing with a rigid
//! permutation. Provides neighbors, links, cube detection, the group
//! action, and capped ball exploration.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use thiserror::Error;

use crate::aaut::{AautError, AlmostAutomorphism, Portrait};
use crate::simplicial::{interval_complex, SimplicialComplex, SimplicialError};
use crate::tree::{rigid_moving_block, Address, AdmissibleTree};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CubeError {
    #[error(transparent)]
    Aaut(#[from] AautError),
    #[error(transparent)]
    Tree(#[from] crate::tree::TreeError),
    #[error(transparent)]
    Simplicial(#[from] SimplicialError),
    #[error("arity mismatch")]
    ArityMismatch,
    #[error("the tree {{root}} has no collapsible vertex")]
    NoCollapsibleVertex,
    #[error("vertex is not a down-neighbor")]
    NotANeighbor,
    #[error("exploration cap {0} exceeded")]
    CapExceeded(usize),
}

/// A vertex [A, φ] of the cube complex. Equality of the underlying
/// classes is `vertex_equal`, not structural equality of the fields.
#[derive(Clone, Debug)]
pub struct CubeVertex {
    tree: AdmissibleTree,
    elt: AlmostAutomorphism,
}

/// down-neighbors tagged with their leaf-position subsets
pub type Downs = Vec<(BTreeSet<usize>, CubeVertex)>;

impl CubeVertex {
    pub fn new(tree: AdmissibleTree, elt: AlmostAutomorphism) -> Result<Self, CubeError> {
        if tree.arity() != elt.domain().arity() {
            return Err(CubeError::ArityMismatch);
        }
        Ok(CubeVertex { tree, elt })
    }

    /// The base vertex [{root}, id].
    pub fn base(d: u16, root_arity: u16) -> Self {
        CubeVertex {
            tree: AdmissibleTree::trivial(d, root_arity),
            elt: AlmostAutomorphism::identity(d, root_arity),
        }
    }

    pub fn tree(&self) -> &AdmissibleTree {
        &self.tree
    }

    pub fn elt(&self) -> &AlmostAutomorphism {
        &self.elt
    }

    pub fn height(&self) -> usize {
        self.tree.leaf_count()
    }

    /// Class equality: χ = elt(y)⁻¹ ∘ elt(x) must restrict to a forest
    /// isomorphism carrying the cones off tree(x) to the cones off
    /// tree(y), i.e. expand to domain tree(x) with range tree(y).
    pub fn vertex_equal(&self, other: &CubeVertex) -> bool {
        if self.tree.arity() != other.tree.arity() || self.height() != other.height() {
            return false;
        }
        let chi = match other.elt.invert().compose(&self.elt) {
            Ok(chi) => chi,
            Err(_) => return false,
        };
        match chi.expand_to(&self.tree) {
            Ok(rep) => rep.range() == &other.tree,
            Err(_) => false,
        }
    }

    /// The 𝔥(x) neighbors of higher height, one per leaf expansion.
    pub fn up_neighbors(&self) -> Vec<CubeVertex> {
        self.tree
            .leaves_ordered()
            .iter()
            .map(|u| CubeVertex {
                tree: self.tree.expand(u).expect("leaf expansion"),
                elt: self.elt.clone(),
            })
            .collect()
    }

    /// The fixed (leftmost) collapsible vertex used to parametrize
    /// down-neighbors.
    fn pivot(&self) -> Result<Address, CubeError> {
        self.tree
            .collapsible_vertices()
            .into_iter()
            .next()
            .ok_or(CubeError::NoCollapsibleVertex)
    }

    /// The down-neighbor obtained by collapsing the block of leaves at the
    /// 0-based planar positions `subset` (|subset| = the pivot's arity).
    pub fn down_neighbor_for(&self, subset: &BTreeSet<usize>) -> Result<CubeVertex, CubeError> {
        let u = self.pivot()?;
        let src: Vec<usize> = self
            .tree
            .children(&u)
            .map(|c| self.tree.leaf_index(&c).expect("collapsible children are leaves"))
            .collect();
        let tgt: Vec<usize> = subset.iter().copied().collect();
        if tgt.len() != src.len() || tgt.iter().any(|&i| i >= self.height()) {
            return Err(CubeError::NotANeighbor);
        }
        let tau = rigid_moving_block(&self.tree, &src, &tgt);
        let tau_elt = AlmostAutomorphism::new(
            self.tree.clone(),
            self.tree.clone(),
            tau.leaf_map().to_vec(),
            vec![Portrait::identity(); self.height()],
        )?;
        Ok(CubeVertex {
            tree: self.tree.collapse(&u)?,
            elt: self.elt.compose(&tau_elt)?,
        })
    }

    /// All C(𝔥, d) down-neighbors, keyed by their 0-based leaf-position
    /// subsets in planar order.
    pub fn down_neighbors(&self) -> Result<Downs, CubeError> {
        use itertools::Itertools;
        let u = self.pivot()?;
        let block = self.tree.child_count(&u) as usize;
        (0..self.height())
            .combinations(block)
            .map(|c| {
                let subset: BTreeSet<usize> = c.into_iter().collect();
                let y = self.down_neighbor_for(&subset)?;
                Ok((subset, y))
            })
            .collect()
    }

    /// Given down-neighbors of this vertex, decide whether they span a
    /// cube together with it: their defining leaf subsets must be pairwise
    /// disjoint.
    pub fn spans_cube(&self, downs: &[CubeVertex]) -> Result<bool, CubeError> {
        let all = self.down_neighbors()?;
        let mut subsets = Vec::new();
        for y in downs {
            let (s, _) = all
                .iter()
                .find(|(_, z)| z.vertex_equal(y))
                .ok_or(CubeError::NotANeighbor)?;
            subsets.push(s.clone());
        }
        Ok(pairwise_disjoint(&subsets))
    }

    /// The descending link together with the isomorphism onto the interval
    /// complex: each down-neighbor is tagged with its 0-based leaf-position
    /// subset; shifting by one gives its vertex label in
    /// interval_complex(d, 𝔥).
    pub fn descending_link(&self) -> Result<(SimplicialComplex, Downs), CubeError> {
        if self.height() == 1 {
            return Ok((SimplicialComplex::empty(), Vec::new()));
        }
        let downs = self.down_neighbors()?;
        let block = downs[0].0.len();
        Ok((interval_complex(block, self.height()), downs))
    }

    /// The full simplex on the up-neighbors, with labels "up:<leaf>".
    pub fn ascending_link(&self) -> SimplicialComplex {
        let labels: Vec<String> = self
            .tree
            .leaves_ordered()
            .iter()
            .map(|l| format!("up:{l}"))
            .collect();
        let n = labels.len();
        SimplicialComplex::new(labels, vec![(0..n).collect()]).expect("distinct leaves")
    }

    /// link(x) = ascending_link(x) * descending_link(x).
    pub fn link(&self) -> Result<SimplicialComplex, CubeError> {
        let (desc, _) = self.descending_link()?;
        Ok(self.ascending_link().join(&desc)?)
    }

    /// The action g·[A, φ] = [A, g∘φ].
    pub fn act(&self, g: &AlmostAutomorphism) -> Result<CubeVertex, CubeError> {
        Ok(CubeVertex {
            tree: self.tree.clone(),
            elt: g.compose(&self.elt)?,
        })
    }

    /// If g stabilizes this vertex, the certificate φ⁻¹gφ presented as a
    /// forest automorphism off tree(x) (domain = range = tree(x)).
    pub fn stabilizes(&self, g: &AlmostAutomorphism) -> Result<Option<AlmostAutomorphism>, CubeError> {
        let moved = self.act(g)?;
        if !moved.vertex_equal(self) {
            return Ok(None);
        }
        let conj = self
            .elt
            .invert()
            .compose(g)?
            .compose(&self.elt)?
            .expand_to(&self.tree)?;
        debug_assert_eq!(conj.range(), &self.tree);
        Ok(Some(conj))
    }

    /// The corner of the cube below this vertex determined by collapsing
    /// the pairwise disjoint leaf-position subsets `family` (in any
    /// order; the class is order-independent).
    pub fn cube_corner(&self, family: &[BTreeSet<usize>]) -> Result<CubeVertex, CubeError> {
        assert!(pairwise_disjoint(family));
        let mut cur = self.clone();
        let mut remaining: Vec<BTreeSet<usize>> = family.to_vec();
        while let Some(subset) = remaining.pop() {
            let u = cur.pivot()?;
            let src: Vec<usize> = cur
                .tree
                .children(&u)
                .map(|c| cur.tree.leaf_index(&c).unwrap())
                .collect();
            let tgt: Vec<usize> = subset.iter().copied().collect();
            let tau = rigid_moving_block(&cur.tree, &src, &tgt);
            let next = cur.down_neighbor_for(&subset)?;
            // retranslate the remaining subsets into the collapsed tree
            let old_leaves = cur.tree.leaves_ordered().to_vec();
            let inv = tau.inverse();
            remaining = remaining
                .iter()
                .map(|s| {
                    s.iter()
                        .map(|&q| {
                            let leaf = &old_leaves[inv.apply_leaf(q)];
                            next.tree.leaf_index(leaf).expect("leaf survives the collapse")
                        })
                        .collect()
                })
                .collect();
            cur = next;
        }
        Ok(cur)
    }
}

/// The number of distinct neighbor classes: 𝔥 ups plus C(𝔥, d) downs.
pub fn degree(v: &CubeVertex) -> Result<usize, CubeError> {
    let mut reps: Vec<CubeVertex> = Vec::new();
    for n in neighbors(v)? {
        if !reps.iter().any(|r| r.vertex_equal(&n)) {
            reps.push(n);
        }
    }
    Ok(reps.len())
}

fn pairwise_disjoint(sets: &[BTreeSet<usize>]) -> bool {
    let mut seen = BTreeSet::new();
    for s in sets {
        for &x in s {
            if !seen.insert(x) {
                return false;
            }
        }
    }
    true
}

#[derive(Clone, Debug, Serialize)]
pub struct BallVertex {
    pub id: usize,
    pub height: usize,
    #[serde(skip)]
    pub vertex: CubeVertex,
}

/// A finite combinatorial ball of the cube complex, explored by BFS with
/// class-level dedup.
#[derive(Clone, Debug)]
pub struct ExploredBall {
    pub center: usize,
    pub radius: usize,
    pub vertices: Vec<BallVertex>,
    pub edges: Vec<(usize, usize)>,
    /// maximal explored cubes, as sorted vertex-id lists
    pub cubes: Vec<Vec<usize>>,
}

impl ExploredBall {
    fn find(&self, v: &CubeVertex) -> Option<usize> {
        self.vertices
            .iter()
            .filter(|b| b.height == v.height())
            .find(|b| b.vertex.vertex_equal(v))
            .map(|b| b.id)
    }

    pub fn is_connected(&self) -> bool {
        if self.vertices.is_empty() {
            return true;
        }
        let n = self.vertices.len();
        let mut adj = vec![Vec::new(); n];
        for &(a, b) in &self.edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(v) = stack.pop() {
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }
}

fn neighbors(v: &CubeVertex) -> Result<Vec<CubeVertex>, CubeError> {
    let mut out = v.up_neighbors();
    if v.height() > 1 {
        out.extend(v.down_neighbors()?.into_iter().map(|(_, y)| y));
    }
    Ok(out)
}

/// BFS ball of combinatorial radius `r`; fails if more than `cap`
/// distinct vertex classes are met.
pub fn ball(center: &CubeVertex, r: usize, cap: usize) -> Result<ExploredBall, CubeError> {
    let mut ball = ExploredBall {
        center: 0,
        radius: r,
        vertices: Vec::new(),
        edges: Vec::new(),
        cubes: Vec::new(),
    };
    let mut depth: Vec<usize> = Vec::new();
    let insert = |ball: &mut ExploredBall, v: CubeVertex| -> Result<usize, CubeError> {
        if let Some(id) = ball.find(&v) {
            return Ok(id);
        }
        if ball.vertices.len() >= cap {
            return Err(CubeError::CapExceeded(cap));
        }
        let id = ball.vertices.len();
        ball.vertices.push(BallVertex {
            id,
            height: v.height(),
            vertex: v,
        });
        Ok(id)
    };
    insert(&mut ball, center.clone())?;
    depth.push(0);
    let mut queue = std::collections::VecDeque::from([0usize]);
    let mut edges: BTreeSet<(usize, usize)> = BTreeSet::new();
    while let Some(id) = queue.pop_front() {
        if depth[id] >= r {
            continue;
        }
        let v = ball.vertices[id].vertex.clone();
        for n in neighbors(&v)? {
            let nid = insert(&mut ball, n)?;
            if nid == depth.len() {
                depth.push(depth[id] + 1);
                queue.push_back(nid);
            }
            edges.insert((id.min(nid), id.max(nid)));
        }
    }
    // edges between frontier vertices (not expanded above)
    let frontier: Vec<usize> = (0..ball.vertices.len())
        .filter(|&id| depth[id] == r)
        .collect();
    for &id in &frontier {
        let v = ball.vertices[id].vertex.clone();
        for n in neighbors(&v)? {
            if let Some(nid) = ball.find(&n) {
                edges.insert((id.min(nid), id.max(nid)));
            }
        }
    }
    ball.edges = edges.into_iter().collect();
    ball.cubes = maximal_cubes(&ball)?;
    Ok(ball)
}

/// All cubes of dimension ≥ 1 whose every corner lies in the ball, as
/// (dimension, sorted corner ids), enumerated from their top vertices.
pub fn all_cubes(ball: &ExploredBall) -> Result<Vec<(usize, Vec<usize>)>, CubeError> {
    let mut all: BTreeSet<(usize, Vec<usize>)> = BTreeSet::new();
    for b in &ball.vertices {
        if b.height == 1 {
            continue;
        }
        for family in disjoint_families(&b.vertex)? {
            if let Some(corners) = cube_corners_in_ball(ball, &b.vertex, &family)? {
                all.insert((family.len(), corners));
            }
        }
    }
    Ok(all.into_iter().collect())
}

/// The inclusion-maximal explored cubes.
fn maximal_cubes(ball: &ExploredBall) -> Result<Vec<Vec<usize>>, CubeError> {
    let list: Vec<Vec<usize>> = all_cubes(ball)?.into_iter().map(|(_, c)| c).collect();
    Ok(list
        .iter()
        .filter(|c| {
            !list.iter().any(|d| {
                d.len() > c.len() && c.iter().all(|x| d.contains(x))
            })
        })
        .cloned()
        .collect())
}

/// Nonempty families of pairwise disjoint block-size subsets of the leaf
/// positions of `v`.
fn disjoint_families(v: &CubeVertex) -> Result<Vec<Vec<BTreeSet<usize>>>, CubeError> {
    use itertools::Itertools;
    let h = v.height();
    if h == 1 {
        return Ok(Vec::new());
    }
    let u = v.pivot()?;
    let block = v.tree().child_count(&u) as usize;
    let mut out: Vec<Vec<BTreeSet<usize>>> = Vec::new();
    let singles: Vec<BTreeSet<usize>> = (0..h)
        .combinations(block)
        .map(|c| c.into_iter().collect())
        .collect();
    let mut frontier: Vec<Vec<BTreeSet<usize>>> =
        singles.iter().map(|s| vec![s.clone()]).collect();
    while !frontier.is_empty() {
        out.extend(frontier.iter().cloned());
        let mut next = Vec::new();
        for fam in &frontier {
            let last = fam.last().unwrap();
            for s in &singles {
                if s > last && fam.iter().all(|t| t.is_disjoint(s)) {
                    let mut bigger = fam.clone();
                    bigger.push(s.clone());
                    next.push(bigger);
                }
            }
        }
        frontier = next;
    }
    Ok(out)
}

fn cube_corners_in_ball(
    ball: &ExploredBall,
    top: &CubeVertex,
    family: &[BTreeSet<usize>],
) -> Result<Option<Vec<usize>>, CubeError> {
    let mut ids = Vec::new();
    let k = family.len();
    for mask in 0..(1u32 << k) {
        let sub: Vec<BTreeSet<usize>> = (0..k)
            .filter(|i| mask & (1 << i) != 0)
            .map(|i| family[i].clone())
            .collect();
        let corner = top.cube_corner(&sub)?;
        match ball.find(&corner) {
            Some(id) => ids.push(id),
            None => return Ok(None),
        }
    }
    ids.sort();
    ids.dedup();
    if ids.len() != 1 << k {
        // distinct subfamilies must give distinct corners
        return Ok(None);
    }
    Ok(Some(ids))
}

// ---- orbit census --------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct HeightCensus {
    /// orbit classes of vertices at this height (verified transitively)
    pub vertex_orbits: usize,
    /// distinct cell classes (by dimension) whose minimal vertex has this
    /// height
    pub cell_classes: usize,
    pub dims: BTreeSet<usize>,
    /// the 2^{h+1} bound the count is checked against
    pub bound: usize,
}

/// Census of cell classes per height over a ball, using the invariant
/// (height of the cube's minimal vertex, dimension). Verifies that all
/// explored vertices of equal height lie in one orbit.
pub fn cube_orbit_census(
    ball: &ExploredBall,
    max_height: usize,
) -> Result<BTreeMap<usize, HeightCensus>, CubeError> {
    // vertex transitivity per height, by explicit transporters
    let mut by_height: BTreeMap<usize, Vec<&BallVertex>> = BTreeMap::new();
    for b in &ball.vertices {
        if b.height <= max_height {
            by_height.entry(b.height).or_default().push(b);
        }
    }
    for vs in by_height.values() {
        for w in vs.iter().skip(1) {
            let g = transporter(&vs[0].vertex, &w.vertex)?;
            if !vs[0].vertex.act(&g)?.vertex_equal(&w.vertex) {
                return Err(CubeError::NotANeighbor); // unreachable by construction
            }
        }
    }
    // cells: all cubes in the ball, keyed by (height of minimal vertex, dim)
    let mut cells: BTreeSet<(usize, usize)> = BTreeSet::new();
    for b in &ball.vertices {
        cells.insert((b.height, 0));
    }
    for (dim, ids) in all_cubes(ball)? {
        let min_h = ids.iter().map(|&i| ball.vertices[i].height).min().unwrap();
        cells.insert((min_h, dim));
    }
    let mut out = BTreeMap::new();
    for (&h, vs) in &by_height {
        let dims: BTreeSet<usize> = cells
            .iter()
            .filter(|&&(mh, _)| mh == h)
            .map(|&(_, d)| d)
            .collect();
        let census = HeightCensus {
            vertex_orbits: if vs.is_empty() { 0 } else { 1 },
            cell_classes: dims.len(),
            dims: dims.clone(),
            bound: 1usize << (h + 1),
        };
        assert!(
            census.cell_classes <= census.bound,
            "cell class bound violated at height {h}"
        );
        out.insert(h, census);
    }
    Ok(out)
}

/// An element carrying x to y (same height): ψ∘ρ∘φ⁻¹ with ρ the
/// order-preserving identification of the two trees' leaves.
pub fn transporter(x: &CubeVertex, y: &CubeVertex) -> Result<AlmostAutomorphism, CubeError> {
    if x.height() != y.height() || x.tree.arity() != y.tree.arity() {
        return Err(CubeError::ArityMismatch);
    }
    let h = x.height();
    let rho = AlmostAutomorphism::new(
        x.tree.clone(),
        y.tree.clone(),
        (0..h).collect(),
        vec![Portrait::identity(); h],
    )?;
    Ok(y.elt.compose(&rho)?.compose(&x.elt.invert())?)
}

// ---- export ---------------------------------------------------------------

#[derive(Serialize)]
struct BallJson<'a> {
    vertices: Vec<&'a BallVertex>,
    edges: &'a [(usize, usize)],
    cubes: &'a [Vec<usize>],
}

impl ExploredBall {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(BallJson {
            vertices: self.vertices.iter().collect(),
            edges: &self.edges,
            cubes: &self.cubes,
        })
        .expect("serializable")
    }

    pub fn to_dot(&self) -> String {
        let mut s = String::from("graph ball {\n");
        for v in &self.vertices {
            s.push_str(&format!("  v{} [label=\"h={}\"];\n", v.id, v.height));
        }
        for (a, b) in &self.edges {
            s.push_str(&format!("  v{a} -- v{b};\n"));
        }
        s.push_str("}\n");
        s
    }
}
