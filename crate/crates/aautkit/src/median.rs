//! Finite median graphs: hyperplanes/halfspaces, the nested-chain metric
//! d∞, halfspace depth, and the constructive fixed-point procedure that
//! intersects the deep sides of all unbalanced hyperplanes.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MedianError {
    #[error("graph is not connected")]
    Disconnected,
    #[error("triple ({0}, {1}, {2}) has no unique median")]
    NotMedian(usize, usize, usize),
    #[error("generator {0} is not a graph automorphism")]
    NotAutomorphism(String),
    #[error("internal inconsistency: {0}")]
    InternalInconsistency(String),
    #[error("bad input: {0}")]
    BadInput(String),
}

/// A validated finite median graph.
#[derive(Clone, Debug)]
pub struct MedianGraph {
    n: usize,
    adj: Vec<BTreeSet<usize>>,
    edges: Vec<(usize, usize)>,
    dist: Vec<Vec<u32>>,
}

/// A hyperplane: an edge class with its two halfspaces. `plus` is the
/// deeper side when the hyperplane is unbalanced (either side otherwise).
#[derive(Clone, Debug)]
pub struct Hyperplane {
    pub edges: Vec<(usize, usize)>,
    pub side_a: BTreeSet<usize>,
    pub side_b: BTreeSet<usize>,
}

impl Hyperplane {
    pub fn carrier(&self) -> BTreeSet<usize> {
        self.edges.iter().flat_map(|&(a, b)| [a, b]).collect()
    }

    pub fn side_of(&self, v: usize) -> bool {
        self.side_a.contains(&v)
    }

    pub fn separates(&self, x: usize, y: usize) -> bool {
        self.side_of(x) != self.side_of(y)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Action {
    pub generators: Vec<(String, Vec<usize>)>,
}

impl MedianGraph {
    /// Validate a simple graph as a median graph: connected and every
    /// triple has a unique median.
    pub fn validate(n: usize, edge_list: &[(usize, usize)]) -> Result<Self, MedianError> {
        if n == 0 {
            return Err(MedianError::BadInput("empty graph".into()));
        }
        let mut adj = vec![BTreeSet::new(); n];
        let mut edges = Vec::new();
        for &(a, b) in edge_list {
            if a >= n || b >= n || a == b {
                return Err(MedianError::BadInput(format!("bad edge ({a}, {b})")));
            }
            if adj[a].insert(b) {
                adj[b].insert(a);
                edges.push((a.min(b), a.max(b)));
            }
        }
        edges.sort();
        let dist = all_pairs_bfs(n, &adj)?;
        let g = MedianGraph { n, adj, edges, dist };
        // intervals as bitsets, then triple scan
        let words = n.div_ceil(64);
        let mut intervals = vec![vec![0u64; words]; n * n];
        for x in 0..n {
            for y in x..n {
                let mut bits = vec![0u64; words];
                for v in 0..n {
                    if g.dist[x][v] + g.dist[v][y] == g.dist[x][y] {
                        bits[v / 64] |= 1 << (v % 64);
                    }
                }
                intervals[x * n + y] = bits.clone();
                intervals[y * n + x] = bits;
            }
        }
        for x in 0..n {
            for y in x + 1..n {
                for z in y + 1..n {
                    let mut count = 0u32;
                    for w in 0..words {
                        count += (intervals[x * n + y][w]
                            & intervals[y * n + z][w]
                            & intervals[x * n + z][w])
                            .count_ones();
                    }
                    if count != 1 {
                        return Err(MedianError::NotMedian(x, y, z));
                    }
                }
            }
        }
        Ok(g)
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn distance(&self, x: usize, y: usize) -> usize {
        self.dist[x][y] as usize
    }

    /// the metric interval I(x, y)
    pub fn interval(&self, x: usize, y: usize) -> BTreeSet<usize> {
        (0..self.n)
            .filter(|&v| self.dist[x][v] + self.dist[v][y] == self.dist[x][y])
            .collect()
    }

    pub fn median(&self, x: usize, y: usize, z: usize) -> usize {
        let i = self.interval(x, y);
        let j = self.interval(y, z);
        let k = self.interval(x, z);
        let m: Vec<usize> = i
            .intersection(&j)
            .copied()
            .collect::<BTreeSet<_>>()
            .intersection(&k)
            .copied()
            .collect();
        debug_assert_eq!(m.len(), 1);
        m[0]
    }

    /// Edge classes under the transitive closure of "opposite edges of a
    /// 4-cycle", each with its two halfspaces.
    pub fn hyperplanes(&self) -> Vec<Hyperplane> {
        let m = self.edges.len();
        let idx: BTreeMap<(usize, usize), usize> = self
            .edges
            .iter()
            .enumerate()
            .map(|(i, &e)| (e, i))
            .collect();
        let mut uf: Vec<usize> = (0..m).collect();
        fn find(uf: &mut [usize], x: usize) -> usize {
            let mut r = x;
            while uf[r] != r {
                r = uf[r];
            }
            let mut c = x;
            while uf[c] != r {
                let next = uf[c];
                uf[c] = r;
                c = next;
            }
            r
        }
        for (i, &(a, b)) in self.edges.iter().enumerate() {
            for &c in &self.adj[a] {
                if c == b {
                    continue;
                }
                for &d in &self.adj[b] {
                    if d == a || d == c {
                        continue;
                    }
                    if let Some(&j) = idx.get(&(c.min(d), c.max(d))) {
                        let (ri, rj) = (find(&mut uf, i), find(&mut uf, j));
                        if ri != rj {
                            uf[ri] = rj;
                        }
                    }
                }
            }
        }
        let mut classes: BTreeMap<usize, Vec<(usize, usize)>> = BTreeMap::new();
        for i in 0..m {
            let r = find(&mut uf, i);
            classes.entry(r).or_default().push(self.edges[i]);
        }
        classes
            .into_values()
            .map(|edges| {
                let cut: BTreeSet<(usize, usize)> = edges.iter().copied().collect();
                let side_a = self.component_avoiding(edges[0].0, &cut);
                let side_b = self.component_avoiding(edges[0].1, &cut);
                debug_assert_eq!(side_a.len() + side_b.len(), self.n);
                Hyperplane { edges, side_a, side_b }
            })
            .collect()
    }

    fn component_avoiding(&self, start: usize, cut: &BTreeSet<(usize, usize)>) -> BTreeSet<usize> {
        let mut seen = BTreeSet::from([start]);
        let mut queue = VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            for &w in &self.adj[v] {
                if cut.contains(&(v.min(w), v.max(w))) || seen.contains(&w) {
                    continue;
                }
                seen.insert(w);
                queue.push_back(w);
            }
        }
        seen
    }

    /// longest nested chain among the hyperplanes separating x and y
    pub fn d_infty(&self, hps: &[Hyperplane], x: usize, y: usize) -> usize {
        let seps: Vec<&Hyperplane> = hps.iter().filter(|j| j.separates(x, y)).collect();
        let sides: Vec<&BTreeSet<usize>> = seps
            .iter()
            .map(|j| if j.side_of(x) { &j.side_a } else { &j.side_b })
            .collect();
        // chain order: strict inclusion of the x-sides
        let k = seps.len();
        let mut best = vec![1usize; k];
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by_key(|&i| sides[i].len());
        let mut longest = 0;
        for (pos, &i) in order.iter().enumerate() {
            for &j in &order[..pos] {
                if sides[j].len() < sides[i].len() && sides[j].is_subset(sides[i]) {
                    best[i] = best[i].max(best[j] + 1);
                }
            }
            longest = longest.max(best[i]);
        }
        longest
    }

    /// d∞ from a vertex to a carrier: minimum over the carrier's vertices
    pub fn d_infty_to_set(&self, hps: &[Hyperplane], x: usize, set: &BTreeSet<usize>) -> usize {
        set.iter().map(|&c| self.d_infty(hps, x, c)).min().unwrap_or(0)
    }

    /// (depth of side_a, depth of side_b)
    pub fn depths(&self, hps: &[Hyperplane], j: &Hyperplane) -> (usize, usize) {
        let carrier = j.carrier();
        let depth_of = |side: &BTreeSet<usize>| {
            side.iter()
                .map(|&x| self.d_infty_to_set(hps, x, &carrier))
                .max()
                .unwrap_or(0)
        };
        (depth_of(&j.side_a), depth_of(&j.side_b))
    }

    pub fn is_balanced(&self, hps: &[Hyperplane], j: &Hyperplane) -> bool {
        let (a, b) = self.depths(hps, j);
        a == b
    }

    /// smallest convex superset: iterated interval closure
    pub fn convex_hull(&self, set: &BTreeSet<usize>) -> BTreeSet<usize> {
        let mut hull = set.clone();
        loop {
            let mut grown = hull.clone();
            for &x in &hull {
                for &y in &hull {
                    if x < y {
                        grown.extend(self.interval(x, y));
                    }
                }
            }
            if grown.len() == hull.len() {
                return hull;
            }
            hull = grown;
        }
    }

    pub fn validate_action(&self, action: &Action) -> Result<(), MedianError> {
        for (name, perm) in &action.generators {
            let ok = perm.len() == self.n
                && {
                    let mut seen = vec![false; self.n];
                    perm.iter().all(|&v| v < self.n && !std::mem::replace(&mut seen[v], true))
                }
                && self
                    .edges
                    .iter()
                    .all(|&(a, b)| self.adj[perm[a]].contains(&perm[b]));
            if !ok {
                return Err(MedianError::NotAutomorphism(name.clone()));
            }
        }
        Ok(())
    }

    pub fn orbit(&self, action: &Action, x: usize) -> BTreeSet<usize> {
        let mut seen = BTreeSet::from([x]);
        let mut queue = VecDeque::from([x]);
        while let Some(v) = queue.pop_front() {
            for (_, perm) in &action.generators {
                if seen.insert(perm[v]) {
                    queue.push_back(perm[v]);
                }
            }
        }
        seen
    }
}

fn all_pairs_bfs(n: usize, adj: &[BTreeSet<usize>]) -> Result<Vec<Vec<u32>>, MedianError> {
    let mut dist = vec![vec![u32::MAX; n]; n];
    for s in 0..n {
        dist[s][s] = 0;
        let mut queue = VecDeque::from([s]);
        while let Some(v) = queue.pop_front() {
            for &w in &adj[v] {
                if dist[s][w] == u32::MAX {
                    dist[s][w] = dist[s][v] + 1;
                    queue.push_back(w);
                }
            }
        }
        if dist[s].contains(&u32::MAX) {
            return Err(MedianError::Disconnected);
        }
    }
    Ok(dist)
}

fn transverse(j1: &Hyperplane, j2: &Hyperplane) -> bool {
    [
        (&j1.side_a, &j2.side_a),
        (&j1.side_a, &j2.side_b),
        (&j1.side_b, &j2.side_a),
        (&j1.side_b, &j2.side_b),
    ]
    .iter()
    .all(|(a, b)| a.intersection(b).next().is_some())
}

#[derive(Clone, Debug, Serialize)]
pub struct FixedRegionReport {
    pub region: BTreeSet<usize>,
    pub balanced: usize,
    pub unbalanced: usize,
    pub crossing_dimension: usize,
    pub trace: Vec<String>,
}

/// Intersect the deep halfspaces of all unbalanced hyperplanes; assert the
/// structural facts and generator-invariance; scan for the separation
/// pattern "gJ separates J and hJ" (impossible on finite valid input).
pub fn fixed_region(g: &MedianGraph, action: &Action) -> Result<FixedRegionReport, MedianError> {
    g.validate_action(action)?;
    let hps = g.hyperplanes();
    let mut trace = Vec::new();
    let mut unbalanced: Vec<(usize, &BTreeSet<usize>)> = Vec::new();
    let mut balanced: Vec<usize> = Vec::new();
    for (i, j) in hps.iter().enumerate() {
        let (da, db) = g.depths(&hps, j);
        if da == db {
            balanced.push(i);
        } else {
            // the deep side
            unbalanced.push((i, if da > db { &j.side_a } else { &j.side_b }));
        }
    }
    trace.push(format!(
        "{} hyperplanes: {} balanced, {} unbalanced",
        hps.len(),
        balanced.len(),
        unbalanced.len()
    ));
    // fact: deep sides pairwise intersect
    for (a, (i, si)) in unbalanced.iter().enumerate() {
        for (j, sj) in &unbalanced[a + 1..] {
            if si.intersection(sj).next().is_none() {
                return Err(MedianError::InternalInconsistency(format!(
                    "deep halfspaces of hyperplanes {i} and {j} are disjoint"
                )));
            }
        }
    }
    trace.push("deep halfspaces pairwise intersect".into());
    // fact: balanced hyperplanes pairwise transverse
    for (a, &i) in balanced.iter().enumerate() {
        for &j in &balanced[a + 1..] {
            if !transverse(&hps[i], &hps[j]) {
                return Err(MedianError::InternalInconsistency(format!(
                    "balanced hyperplanes {i} and {j} are not transverse"
                )));
            }
        }
    }
    trace.push("balanced hyperplanes pairwise transverse".into());
    // separation-pattern scan over generator pairs
    for (gn, gp) in &action.generators {
        for (hn, hp) in &action.generators {
            for j in &hps {
                let gj = image_hyperplane(&hps, j, gp);
                let hj = image_hyperplane(&hps, j, hp);
                let cj = j.carrier();
                let chj = hj.carrier();
                let sep = (cj.is_subset(&gj.side_a) && chj.is_subset(&gj.side_b))
                    || (cj.is_subset(&gj.side_b) && chj.is_subset(&gj.side_a));
                if sep {
                    return Err(MedianError::InternalInconsistency(format!(
                        "{gn}J separates J and {hn}J for some hyperplane J"
                    )));
                }
            }
        }
    }
    trace.push("no generator pair exhibits the skewering pattern".into());
    // the region
    let mut region: BTreeSet<usize> = (0..g.vertex_count()).collect();
    for (_, side) in &unbalanced {
        region = region.intersection(side).copied().collect();
    }
    if region.is_empty() {
        return Err(MedianError::InternalInconsistency(
            "intersection of deep halfspaces is empty".into(),
        ));
    }
    // invariance under every generator
    for (name, perm) in &action.generators {
        let image: BTreeSet<usize> = region.iter().map(|&v| perm[v]).collect();
        if image != region {
            return Err(MedianError::InternalInconsistency(format!(
                "region not invariant under generator {name}"
            )));
        }
    }
    trace.push("region invariant under all generators".into());
    // cube shape: convex, crossing hyperplanes pairwise transverse,
    // cardinality 2^(number of crossing hyperplanes)
    if g.convex_hull(&region) != region {
        return Err(MedianError::InternalInconsistency("region is not convex".into()));
    }
    let crossing: Vec<&Hyperplane> = hps
        .iter()
        .filter(|j| {
            region.iter().any(|v| j.side_of(*v)) && region.iter().any(|v| !j.side_of(*v))
        })
        .collect();
    for (a, i) in crossing.iter().enumerate() {
        for j in &crossing[a + 1..] {
            if !transverse(i, j) {
                return Err(MedianError::InternalInconsistency(
                    "crossing hyperplanes of the region are not transverse".into(),
                ));
            }
        }
    }
    if region.len() != 1usize << crossing.len() {
        return Err(MedianError::InternalInconsistency(format!(
            "region of size {} crossed by {} hyperplanes is not a cube",
            region.len(),
            crossing.len()
        )));
    }
    trace.push(format!("region is a {}-cube on {} vertices", crossing.len(), region.len()));
    Ok(FixedRegionReport {
        region,
        balanced: balanced.len(),
        unbalanced: unbalanced.len(),
        crossing_dimension: crossing.len(),
        trace,
    })
}

/// the hyperplane containing the image of j's first edge under perm
fn image_hyperplane<'a>(hps: &'a [Hyperplane], j: &Hyperplane, perm: &[usize]) -> &'a Hyperplane {
    let (a, b) = j.edges[0];
    let (x, y) = (perm[a].min(perm[b]), perm[a].max(perm[b]));
    hps.iter()
        .find(|h| h.edges.contains(&(x, y)))
        .expect("automorphisms permute edges")
}

// ---- random median graphs ---------------------------------------------------

/// A median graph generated as the median closure of random points of Q_n,
/// optionally symmetrized under random signed coordinate permutations so
/// that those act as automorphisms. Regenerates until validation passes.
pub fn random_median_graph(
    rng: &mut impl rand::Rng,
    coords: usize,
    seeds: usize,
    symmetries: usize,
) -> (MedianGraph, Action) {
    assert!(coords <= 10);
    loop {
        // signed coordinate permutations of Q_n: x ↦ π(x) ⊕ mask
        let mut gens: Vec<(Vec<usize>, u32)> = Vec::new();
        for _ in 0..symmetries {
            let mut pi: Vec<usize> = (0..coords).collect();
            for i in (1..coords).rev() {
                pi.swap(i, rng.gen_range(0..=i));
            }
            let mask = rng.gen_range(0..(1u32 << coords));
            gens.push((pi, mask));
        }
        let apply = |(pi, mask): &(Vec<usize>, u32), x: u32| -> u32 {
            let mut y = 0u32;
            for (i, &p) in pi.iter().enumerate() {
                if x & (1 << i) != 0 {
                    y |= 1 << p;
                }
            }
            y ^ mask
        };
        // seed points, closed under the symmetries and under medians
        let mut set: BTreeSet<u32> = (0..seeds.max(2))
            .map(|_| rng.gen_range(0..(1u32 << coords)))
            .collect();
        loop {
            let mut grown = set.clone();
            for g in &gens {
                grown.extend(set.iter().map(|&x| apply(g, x)));
            }
            let pts: Vec<u32> = grown.iter().copied().collect();
            for i in 0..pts.len() {
                for j in i + 1..pts.len() {
                    for k in j + 1..pts.len() {
                        let (x, y, z) = (pts[i], pts[j], pts[k]);
                        grown.insert((x & y) | (y & z) | (x & z));
                    }
                }
            }
            if grown.len() == set.len() {
                break;
            }
            set = grown;
        }
        let pts: Vec<u32> = set.iter().copied().collect();
        if pts.len() > 512 {
            continue;
        }
        let index: BTreeMap<u32, usize> = pts.iter().enumerate().map(|(i, &p)| (p, i)).collect();
        let mut edges = Vec::new();
        for (i, &p) in pts.iter().enumerate() {
            for b in 0..coords {
                if let Some(&j) = index.get(&(p ^ (1 << b))) {
                    if i < j {
                        edges.push((i, j));
                    }
                }
            }
        }
        let g = match MedianGraph::validate(pts.len(), &edges) {
            Ok(g) => g,
            Err(_) => continue,
        };
        let generators: Vec<(String, Vec<usize>)> = gens
            .iter()
            .enumerate()
            .map(|(k, gen)| {
                (
                    format!("s{k}"),
                    pts.iter().map(|&p| index[&apply(gen, p)]).collect(),
                )
            })
            .collect();
        let action = Action { generators };
        if g.validate_action(&action).is_err() {
            continue;
        }
        return (g, action);
    }
}

// ---- JSON ------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
pub struct GraphJson {
    pub vertices: Vec<usize>,
    pub edges: Vec<(usize, usize)>,
}

impl MedianGraph {
    pub fn to_json(&self) -> GraphJson {
        GraphJson {
            vertices: (0..self.n).collect(),
            edges: self.edges.clone(),
        }
    }

    pub fn from_json(j: &GraphJson) -> Result<Self, MedianError> {
        MedianGraph::validate(j.vertices.len(), &j.edges)
    }
}
