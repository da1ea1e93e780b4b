//! Finite abstract simplicial complexes: interval complexes of disjoint
//! p-subsets, joins, flagness, and exact integral homology via Smith
//! normal form.

use std::collections::{BTreeMap, BTreeSet};

use itertools::Itertools;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SimplicialError {
    #[error("vertex label collision: {0}")]
    LabelCollision(String),
    #[error("size bound exceeded: {0} faces > {1}")]
    SizeExceeded(usize, usize),
    #[error("integer overflow in Smith normal form")]
    Overflow,
    #[error("face uses unknown vertex {0}")]
    UnknownVertex(String),
}

/// Faces are stored as their maximal elements; the downward closure is
/// produced on demand.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SimplicialComplex {
    labels: Vec<String>,
    maximal_faces: Vec<BTreeSet<usize>>,
}

pub const DEFAULT_FACE_BOUND: usize = 200_000;

impl SimplicialComplex {
    pub fn new(
        labels: Vec<String>,
        faces: Vec<BTreeSet<usize>>,
    ) -> Result<Self, SimplicialError> {
        let mut seen = BTreeSet::new();
        for l in &labels {
            if !seen.insert(l) {
                return Err(SimplicialError::LabelCollision(l.clone()));
            }
        }
        for f in &faces {
            if let Some(&v) = f.iter().find(|&&v| v >= labels.len()) {
                return Err(SimplicialError::UnknownVertex(v.to_string()));
            }
        }
        // cover every vertex, then drop faces contained in others
        let mut faces = faces;
        for v in 0..labels.len() {
            if !faces.iter().any(|f| f.contains(&v)) {
                faces.push([v].into_iter().collect());
            }
        }
        let mut maximal: Vec<BTreeSet<usize>> = Vec::new();
        faces.sort_by_key(|f| std::cmp::Reverse(f.len()));
        for f in faces {
            if !maximal.iter().any(|m| f.is_subset(m)) {
                maximal.push(f);
            }
        }
        maximal.sort();
        Ok(SimplicialComplex {
            labels,
            maximal_faces: maximal,
        })
    }

    pub fn empty() -> Self {
        SimplicialComplex {
            labels: Vec::new(),
            maximal_faces: Vec::new(),
        }
    }

    pub fn from_labelled_faces(
        labels: Vec<String>,
        faces: Vec<Vec<String>>,
    ) -> Result<Self, SimplicialError> {
        let index: BTreeMap<&String, usize> =
            labels.iter().enumerate().map(|(i, l)| (l, i)).collect();
        let faces = faces
            .into_iter()
            .map(|f| {
                f.iter()
                    .map(|l| {
                        index
                            .get(l)
                            .copied()
                            .ok_or_else(|| SimplicialError::UnknownVertex(l.clone()))
                    })
                    .collect::<Result<BTreeSet<usize>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(labels, faces)
    }

    /// The full simplex on `n` vertices labelled `0..n`.
    pub fn simplex(n: usize) -> Self {
        SimplicialComplex {
            labels: (0..n).map(|i| i.to_string()).collect(),
            maximal_faces: if n == 0 {
                Vec::new()
            } else {
                vec![(0..n).collect()]
            },
        }
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn vertex_count(&self) -> usize {
        self.labels.len()
    }

    pub fn maximal_faces(&self) -> &[BTreeSet<usize>] {
        &self.maximal_faces
    }

    pub fn dimension(&self) -> Option<usize> {
        self.maximal_faces.iter().map(|f| f.len() - 1).max()
    }

    pub fn is_face(&self, f: &BTreeSet<usize>) -> bool {
        !f.is_empty() && self.maximal_faces.iter().any(|m| f.is_subset(m))
    }

    /// All faces with `k+1` vertices, sorted.
    pub fn faces_of_dim(&self, k: usize) -> Vec<BTreeSet<usize>> {
        let mut out: BTreeSet<BTreeSet<usize>> = BTreeSet::new();
        for m in &self.maximal_faces {
            if m.len() > k {
                for comb in m.iter().copied().combinations(k + 1) {
                    out.insert(comb.into_iter().collect());
                }
            }
        }
        out.into_iter().collect()
    }

    pub fn f_vector(&self) -> Vec<usize> {
        let Some(dim) = self.dimension() else {
            return Vec::new();
        };
        (0..=dim).map(|k| self.faces_of_dim(k).len()).collect()
    }

    pub fn total_face_count(&self) -> usize {
        self.f_vector().iter().sum()
    }

    /// Edges of the 1-skeleton as index pairs.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.faces_of_dim(1)
            .into_iter()
            .map(|e| {
                let v: Vec<usize> = e.into_iter().collect();
                (v[0], v[1])
            })
            .collect()
    }

    pub fn connected_components(&self) -> usize {
        let n = self.labels.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut Vec<usize>, x: usize) -> usize {
            if parent[x] != x {
                let r = find(parent, parent[x]);
                parent[x] = r;
            }
            parent[x]
        }
        for m in &self.maximal_faces {
            let mut it = m.iter();
            if let Some(&first) = it.next() {
                for &v in it {
                    let (a, b) = (find(&mut parent, first), find(&mut parent, v));
                    parent[a] = b;
                }
            }
        }
        (0..n).filter(|&v| find(&mut parent, v) == v).count()
    }

    /// Flagness of the complex: every clique of the 1-skeleton must be a
    /// face. Returns the labels of a minimal counterexample clique if not.
    pub fn is_flag(&self) -> Result<(), Vec<String>> {
        let n = self.labels.len();
        let mut adj = vec![vec![false; n]; n];
        for (a, b) in self.edges() {
            adj[a][b] = true;
            adj[b][a] = true;
        }
        for clique in max_cliques(&adj) {
            if clique.len() >= 2 && !self.is_face(&clique) {
                // shrink to a minimal non-face clique
                let mut c = clique;
                loop {
                    let mut shrunk = false;
                    for &v in c.clone().iter() {
                        let mut smaller = c.clone();
                        smaller.remove(&v);
                        if smaller.len() >= 2 && !self.is_face(&smaller) {
                            c = smaller;
                            shrunk = true;
                            break;
                        }
                    }
                    if !shrunk {
                        break;
                    }
                }
                return Err(c.iter().map(|&v| self.labels[v].clone()).collect());
            }
        }
        Ok(())
    }

    /// Simplicial join; vertex labels must be disjoint.
    pub fn join(&self, other: &SimplicialComplex) -> Result<Self, SimplicialError> {
        let mut labels = self.labels.clone();
        labels.extend(other.labels.iter().cloned());
        let off = self.labels.len();
        let shift =
            |f: &BTreeSet<usize>| -> BTreeSet<usize> { f.iter().map(|&v| v + off).collect() };
        let maximal = if self.maximal_faces.is_empty() {
            other.maximal_faces.iter().map(&shift).collect()
        } else if other.maximal_faces.is_empty() {
            self.maximal_faces.clone()
        } else {
            self.maximal_faces
                .iter()
                .cartesian_product(other.maximal_faces.iter())
                .map(|(a, b)| a.iter().copied().chain(shift(b)).collect())
                .collect()
        };
        Self::new(labels, maximal)
    }

    /// Boundary matrix ∂_k (rows: (k−1)-faces, cols: k-faces).
    fn boundary_matrix(
        &self,
        lower: &[BTreeSet<usize>],
        upper: &[BTreeSet<usize>],
    ) -> Vec<Vec<i128>> {
        let index: BTreeMap<&BTreeSet<usize>, usize> =
            lower.iter().enumerate().map(|(i, f)| (f, i)).collect();
        let mut m = vec![vec![0i128; upper.len()]; lower.len()];
        for (j, f) in upper.iter().enumerate() {
            let verts: Vec<usize> = f.iter().copied().collect();
            for (omit, _) in verts.iter().enumerate() {
                let face: BTreeSet<usize> = verts
                    .iter()
                    .enumerate()
                    .filter(|&(i, _)| i != omit)
                    .map(|(_, &v)| v)
                    .collect();
                let i = index[&face];
                m[i][j] = if omit % 2 == 0 { 1 } else { -1 };
            }
        }
        m
    }

    /// Exact integral homology (Betti numbers and torsion coefficients)
    /// in dimensions `0..=max_dim`, unreduced.
    pub fn homology(
        &self,
        max_dim: usize,
        face_bound: usize,
    ) -> Result<HomologyReport, SimplicialError> {
        let total = self.total_face_count();
        if total > face_bound {
            return Err(SimplicialError::SizeExceeded(total, face_bound));
        }
        let mut betti = Vec::new();
        let mut torsion = Vec::new();
        let mut faces: Vec<Vec<BTreeSet<usize>>> =
            (0..=max_dim + 1).map(|k| self.faces_of_dim(k)).collect();
        faces.insert(0, Vec::new()); // dim −1 placeholder for ∂₀ = 0
        let mut snfs: Vec<(usize, Vec<i128>)> = Vec::new(); // (rank, diagonal)
        for k in 0..=max_dim + 1 {
            let lower = &faces[k];      // (k−1)-faces
            let upper = &faces[k + 1];  // k-faces
            if k == 0 || lower.is_empty() || upper.is_empty() {
                snfs.push((0, Vec::new()));
            } else {
                let m = self.boundary_matrix(lower, upper);
                snfs.push(smith_normal_form(m)?);
            }
        }
        for k in 0..=max_dim {
            let n_k = faces[k + 1].len();
            let rank_dk = snfs[k].0;
            let (rank_dk1, diag) = &snfs[k + 1];
            betti.push(n_k - rank_dk - rank_dk1);
            torsion.push(
                diag.iter()
                    .filter(|&&d| d.abs() > 1)
                    .map(|&d| d.unsigned_abs() as u64)
                    .collect(),
            );
        }
        Ok(HomologyReport { betti, torsion })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HomologyReport {
    pub betti: Vec<usize>,
    pub torsion: Vec<Vec<u64>>,
}

/// All maximal cliques of an adjacency matrix (Bron–Kerbosch with pivot).
fn max_cliques(adj: &[Vec<bool>]) -> Vec<BTreeSet<usize>> {
    fn bk(
        adj: &[Vec<bool>],
        r: &mut BTreeSet<usize>,
        p: &mut BTreeSet<usize>,
        x: &mut BTreeSet<usize>,
        out: &mut Vec<BTreeSet<usize>>,
    ) {
        if p.is_empty() && x.is_empty() {
            out.push(r.clone());
            return;
        }
        let pivot = *p.iter().chain(x.iter()).next().unwrap();
        let candidates: Vec<usize> = p.iter().copied().filter(|&v| !adj[pivot][v]).collect();
        for v in candidates {
            r.insert(v);
            let mut p2: BTreeSet<usize> = p.iter().copied().filter(|&u| adj[v][u]).collect();
            let mut x2: BTreeSet<usize> = x.iter().copied().filter(|&u| adj[v][u]).collect();
            bk(adj, r, &mut p2, &mut x2, out);
            r.remove(&v);
            p.remove(&v);
            x.insert(v);
        }
    }
    let n = adj.len();
    let mut out = Vec::new();
    bk(
        adj,
        &mut BTreeSet::new(),
        &mut (0..n).collect(),
        &mut BTreeSet::new(),
        &mut out,
    );
    out
}

/// Smith normal form rank and diagonal, with checked arithmetic.
pub fn smith_normal_form(mut m: Vec<Vec<i128>>) -> Result<(usize, Vec<i128>), SimplicialError> {
    let rows = m.len();
    let cols = if rows == 0 { 0 } else { m[0].len() };
    let mut diag: Vec<i128> = Vec::new();
    let mut top = 0usize;
    while top < rows.min(cols) {
        // minimal nonzero pivot in the remaining block
        let mut pivot: Option<(usize, usize)> = None;
        for i in top..rows {
            for j in top..cols {
                if m[i][j] != 0
                    && pivot.is_none_or(|(pi, pj)| m[i][j].abs() < m[pi][pj].abs())
                {
                    pivot = Some((i, j));
                }
            }
        }
        let Some((pi, pj)) = pivot else { break };
        m.swap(top, pi);
        for row in m.iter_mut() {
            row.swap(top, pj);
        }
        'reduce: loop {
            for i in top + 1..rows {
                if m[i][top] != 0 {
                    let q = m[i][top].div_euclid(m[top][top]);
                    for j in top..cols {
                        let sub = m[top][j].checked_mul(q).ok_or(SimplicialError::Overflow)?;
                        m[i][j] = m[i][j].checked_sub(sub).ok_or(SimplicialError::Overflow)?;
                    }
                    if m[i][top] != 0 {
                        m.swap(top, i);
                        continue 'reduce;
                    }
                }
            }
            for j in top + 1..cols {
                if m[top][j] != 0 {
                    let q = m[top][j].div_euclid(m[top][top]);
                    for i in top..rows {
                        let sub = m[i][top].checked_mul(q).ok_or(SimplicialError::Overflow)?;
                        m[i][j] = m[i][j].checked_sub(sub).ok_or(SimplicialError::Overflow)?;
                    }
                    if m[top][j] != 0 {
                        for row in m.iter_mut() {
                            row.swap(top, j);
                        }
                        continue 'reduce;
                    }
                }
            }
            break;
        }
        diag.push(m[top][top].abs());
        top += 1;
    }
    // enforce the divisibility chain d_i | d_{i+1}
    let mut changed = true;
    while changed {
        changed = false;
        for i in 0..diag.len().saturating_sub(1) {
            if diag[i + 1] % diag[i] != 0 {
                let g = gcd(diag[i], diag[i + 1]);
                let l = diag[i] / g * diag[i + 1];
                diag[i] = g;
                diag[i + 1] = l;
                changed = true;
            }
        }
    }
    Ok((diag.len(), diag))
}

fn gcd(a: i128, b: i128) -> i128 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

/// The complex of pairwise disjoint p-subsets of {1..q}. Vertices are
/// labelled by the dot-joined sorted subset, e.g. "1.3".
pub fn interval_complex(p: usize, q: usize) -> SimplicialComplex {
    assert!(p >= 1);
    let subsets: Vec<BTreeSet<usize>> = (1..=q).combinations(p).map(|c| c.into_iter().collect()).collect();
    let labels: Vec<String> = subsets
        .iter()
        .map(|s| s.iter().map(|x| x.to_string()).join("."))
        .collect();
    // A maximal family of pairwise disjoint p-subsets leaves fewer than p
    // points uncovered, and the uncovered count is ≡ q (mod p), so it is
    // exactly q mod p: choose the uncovered set, then partition the rest
    // into p-blocks (greedily on the smallest remaining point, which
    // produces every partition exactly once).
    let index: BTreeMap<&BTreeSet<usize>, usize> =
        subsets.iter().enumerate().map(|(i, s)| (s, i)).collect();
    let mut maximal: Vec<BTreeSet<usize>> = Vec::new();
    fn partitions(
        points: &BTreeSet<usize>,
        p: usize,
        family: &mut Vec<BTreeSet<usize>>,
        out: &mut Vec<Vec<BTreeSet<usize>>>,
    ) {
        let Some(&first) = points.iter().next() else {
            out.push(family.clone());
            return;
        };
        let rest: Vec<usize> = points.iter().copied().filter(|&x| x != first).collect();
        for comb in rest.iter().copied().combinations(p - 1) {
            let block: BTreeSet<usize> =
                comb.into_iter().chain(std::iter::once(first)).collect();
            let remaining: BTreeSet<usize> =
                points.difference(&block).copied().collect();
            family.push(block);
            partitions(&remaining, p, family, out);
            family.pop();
        }
    }
    if q >= p {
        for uncovered in (1..=q).combinations(q % p) {
            let covered: BTreeSet<usize> =
                (1..=q).filter(|x| !uncovered.contains(x)).collect();
            let mut parts = Vec::new();
            partitions(&covered, p, &mut Vec::new(), &mut parts);
            for fam in parts {
                maximal.push(fam.iter().map(|b| index[b]).collect());
            }
        }
    }
    SimplicialComplex::new(labels, maximal).expect("labels are distinct")
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConnectivityReport {
    pub p: usize,
    pub q: usize,
    pub k: usize,
    /// q ≥ (3+2k)p
    pub applicable: bool,
    pub pass: bool,
    pub components: usize,
    pub betti_checked: Vec<usize>,
    /// above k = 0 only the homological shadow of k-connectivity is checked
    pub homological_proxy: bool,
}

/// Check the connectivity bound: I(p,q) should be k-connected when
/// q ≥ (3+2k)p. π₀ is exact; for k ≥ 1 vanishing of Betti₁..Bettiₖ is used
/// as a homological proxy.
pub fn verify_connectivity_bound(
    p: usize,
    q: usize,
    k: usize,
    face_bound: usize,
) -> Result<ConnectivityReport, SimplicialError> {
    let complex = interval_complex(p, q);
    let applicable = q >= (3 + 2 * k) * p;
    let components = complex.connected_components();
    let mut betti_checked = vec![components];
    let mut pass = components == 1;
    if k >= 1 {
        let hom = complex.homology(k, face_bound)?;
        for i in 1..=k {
            betti_checked.push(hom.betti[i]);
            pass &= hom.betti[i] == 0;
        }
    }
    Ok(ConnectivityReport {
        p,
        q,
        k,
        applicable,
        pass: applicable && pass,
        components,
        betti_checked,
        homological_proxy: k >= 1,
    })
}

// ---- JSON form ----------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct ComplexJson {
    vertices: Vec<String>,
    maximal_faces: Vec<Vec<String>>,
}

impl Serialize for SimplicialComplex {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        ComplexJson {
            vertices: self.labels.clone(),
            maximal_faces: self
                .maximal_faces
                .iter()
                .map(|f| f.iter().map(|&v| self.labels[v].clone()).collect())
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for SimplicialComplex {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = ComplexJson::deserialize(d)?;
        SimplicialComplex::from_labelled_faces(raw.vertices, raw.maximal_faces)
            .map_err(serde::de::Error::custom)
    }
}
