//! Rooted d-regular tree combinatorics: addresses, admissible subtrees,
//! planar leaf order and rigid permutations.
//!
//! Trees are stored as sorted vertex sets (lexicographic order on digit
//! strings, which restricts to the planar order on leaves) with a cached
//! leaf list. `root_arity` is carried on every tree so that the d-regular
//! tree and the trees with a distinguished root degree share one
//! implementation; root children are addressed `0..root_arity`.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TreeError {
    #[error("digit {digit} out of range (arity {arity})")]
    DigitOutOfRange { digit: u16, arity: u16 },
    #[error("vertex {0} is not a leaf")]
    NotALeaf(Address),
    #[error("vertex {0} is not collapsible")]
    NotCollapsible(Address),
    #[error("arity mismatch: ({0},{1}) vs ({2},{3})")]
    ArityMismatch(u16, u16, u16, u16),
    #[error("no admissible tree with {leaves} leaves for d={d}, root arity {root_arity}")]
    InfeasibleLeafCount { leaves: usize, d: u16, root_arity: u16 },
    #[error("enumeration bound exceeded: {0} leaves > bound {1}")]
    BoundExceeded(usize, usize),
    #[error("vertex set is not admissible: {0}")]
    NotAdmissible(String),
    #[error("cannot parse address {0:?}")]
    BadAddress(String),
}

/// A vertex of the rooted tree, as the digit sequence of the path from the
/// root. The empty sequence is the root.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Address(Vec<u16>);

impl Address {
    pub fn root() -> Self {
        Address(Vec::new())
    }

    pub fn new(digits: Vec<u16>) -> Self {
        Address(digits)
    }

    pub fn digits(&self) -> &[u16] {
        &self.0
    }

    pub fn is_root(&self) -> bool {
        self.0.is_empty()
    }

    pub fn depth(&self) -> usize {
        self.0.len()
    }

    pub fn child(&self, digit: u16) -> Address {
        let mut v = self.0.clone();
        v.push(digit);
        Address(v)
    }

    pub fn parent(&self) -> Option<Address> {
        if self.0.is_empty() {
            None
        } else {
            Some(Address(self.0[..self.0.len() - 1].to_vec()))
        }
    }

    pub fn last(&self) -> Option<u16> {
        self.0.last().copied()
    }

    pub fn is_prefix_of(&self, other: &Address) -> bool {
        other.0.len() >= self.0.len() && other.0[..self.0.len()] == self.0[..]
    }

    pub fn is_strict_prefix_of(&self, other: &Address) -> bool {
        other.0.len() > self.0.len() && self.is_prefix_of(other)
    }

    /// Concatenation `self · rest`.
    pub fn concat(&self, rest: &Address) -> Address {
        let mut v = self.0.clone();
        v.extend_from_slice(&rest.0);
        Address(v)
    }

    /// The suffix `w` such that `self = prefix · w`, if `prefix` is a prefix.
    pub fn strip_prefix(&self, prefix: &Address) -> Option<Address> {
        if prefix.is_prefix_of(self) {
            Some(Address(self.0[prefix.0.len()..].to_vec()))
        } else {
            None
        }
    }

    /// Text form. Digit characters when every digit is a single decimal
    /// digit, dot-separated decimal otherwise; the root is the empty string.
    pub fn to_text(&self) -> String {
        if self.0.iter().all(|&x| x < 10) {
            self.0.iter().map(|d| d.to_string()).collect()
        } else {
            self.0
                .iter()
                .map(|d| d.to_string())
                .collect::<Vec<_>>()
                .join(".")
        }
    }

    pub fn parse(s: &str) -> Result<Address, TreeError> {
        if s.is_empty() {
            return Ok(Address::root());
        }
        let digits: Option<Vec<u16>> = if s.contains('.') {
            s.split('.').map(|p| p.parse::<u16>().ok()).collect()
        } else {
            s.chars().map(|c| c.to_digit(10).map(|d| d as u16)).collect()
        };
        digits
            .map(Address)
            .ok_or_else(|| TreeError::BadAddress(s.to_string()))
    }
}

impl fmt::Debug for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "«{}»", self.to_text())
    }
}

impl fmt::Display for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_text())
    }
}

impl Serialize for Address {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_text())
    }
}

impl<'de> Deserialize<'de> for Address {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Address::parse(&s).map_err(serde::de::Error::custom)
    }
}

/// A finite rooted subtree containing the root in which every non-leaf
/// keeps all of its children.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct AdmissibleTree {
    d: u16,
    root_arity: u16,
    vertices: BTreeSet<Address>,
    leaves: Vec<Address>,
}

impl AdmissibleTree {
    /// The singleton tree `{root}`.
    pub fn trivial(d: u16, root_arity: u16) -> Self {
        assert!(d >= 2 && root_arity >= 1);
        let mut vertices = BTreeSet::new();
        vertices.insert(Address::root());
        AdmissibleTree {
            d,
            root_arity,
            vertices,
            leaves: vec![Address::root()],
        }
    }

    /// Root together with all of its children.
    pub fn root_star(d: u16, root_arity: u16) -> Self {
        Self::trivial(d, root_arity).expand(&Address::root()).unwrap()
    }

    pub fn d(&self) -> u16 {
        self.d
    }

    pub fn root_arity(&self) -> u16 {
        self.root_arity
    }

    pub fn arity(&self) -> (u16, u16) {
        (self.d, self.root_arity)
    }

    /// Number of children a vertex has in the ambient tree.
    pub fn child_count(&self, v: &Address) -> u16 {
        if v.is_root() {
            self.root_arity
        } else {
            self.d
        }
    }

    pub fn children(&self, v: &Address) -> impl Iterator<Item = Address> + '_ {
        let v = v.clone();
        (0..self.child_count(&v)).map(move |i| v.child(i))
    }

    pub fn vertices(&self) -> impl Iterator<Item = &Address> {
        self.vertices.iter()
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn contains(&self, v: &Address) -> bool {
        self.vertices.contains(v)
    }

    pub fn is_leaf(&self, v: &Address) -> bool {
        self.contains(v) && !self.vertices.contains(&v.child(0))
    }

    pub fn is_interior(&self, v: &Address) -> bool {
        self.contains(v) && self.vertices.contains(&v.child(0))
    }

    pub fn leaf_count(&self) -> usize {
        self.leaves.len()
    }

    /// Leaves in planar (left to right) order.
    pub fn leaves_ordered(&self) -> &[Address] {
        &self.leaves
    }

    pub fn leaf_index(&self, v: &Address) -> Option<usize> {
        self.leaves.binary_search(v).ok()
    }

    /// The leaf of this tree that is a prefix of `a`, if any.
    pub fn leaf_prefix_of(&self, a: &Address) -> Option<&Address> {
        // The candidate leaves are exactly the prefixes of `a`; walk down.
        let mut cur = Address::root();
        loop {
            if self.is_leaf(&cur) {
                return Some(self.leaves.get(self.leaf_index(&cur)?).unwrap());
            }
            if cur.depth() == a.depth() {
                return None;
            }
            cur = cur.child(a.digits()[cur.depth()]);
            if !self.contains(&cur) {
                return None;
            }
        }
    }

    fn recompute_leaves(&mut self) {
        self.leaves = self
            .vertices
            .iter()
            .filter(|v| !self.vertices.contains(&v.child(0)))
            .cloned()
            .collect();
    }

    /// Build from an arbitrary vertex set, validating admissibility.
    pub fn from_vertices(
        d: u16,
        root_arity: u16,
        vertices: BTreeSet<Address>,
    ) -> Result<Self, TreeError> {
        if !vertices.contains(&Address::root()) {
            return Err(TreeError::NotAdmissible("missing root".into()));
        }
        for v in &vertices {
            for (i, &digit) in v.digits().iter().enumerate() {
                let arity = if i == 0 { root_arity } else { d };
                if digit >= arity {
                    return Err(TreeError::DigitOutOfRange { digit, arity });
                }
            }
            if let Some(p) = v.parent() {
                if !vertices.contains(&p) {
                    return Err(TreeError::NotAdmissible(format!(
                        "vertex {} without its parent",
                        v
                    )));
                }
            }
        }
        let mut tree = AdmissibleTree {
            d,
            root_arity,
            vertices,
            leaves: Vec::new(),
        };
        // children-completeness
        for v in tree.vertices.clone() {
            if tree.vertices.contains(&v.child(0)) {
                for c in tree.children(&v).collect::<Vec<_>>() {
                    if !tree.vertices.contains(&c) {
                        return Err(TreeError::NotAdmissible(format!(
                            "vertex {} has some but not all children",
                            v
                        )));
                    }
                }
            }
        }
        tree.recompute_leaves();
        Ok(tree)
    }

    /// Build from a leaf set by prefix closure, then validate.
    pub fn from_leaves(
        d: u16,
        root_arity: u16,
        leaves: &[Address],
    ) -> Result<Self, TreeError> {
        let mut vertices = BTreeSet::new();
        for leaf in leaves {
            let mut cur = leaf.clone();
            loop {
                vertices.insert(cur.clone());
                match cur.parent() {
                    Some(p) => cur = p,
                    None => break,
                }
            }
        }
        let tree = Self::from_vertices(d, root_arity, vertices)?;
        let mut expected: Vec<Address> = leaves.to_vec();
        expected.sort();
        expected.dedup();
        if tree.leaves != expected {
            return Err(TreeError::NotAdmissible(
                "leaf set contains interior vertices".into(),
            ));
        }
        Ok(tree)
    }

    /// `T ∪ c(u)` for a leaf `u`; the leaf count grows by `arity(u) − 1`.
    pub fn expand(&self, u: &Address) -> Result<Self, TreeError> {
        if !self.is_leaf(u) {
            return Err(TreeError::NotALeaf(u.clone()));
        }
        let mut tree = self.clone();
        for c in self.children(u).collect::<Vec<_>>() {
            tree.vertices.insert(c);
        }
        tree.recompute_leaves();
        Ok(tree)
    }

    /// Remove `c(u)` for a vertex `u` all of whose children are leaves.
    pub fn collapse(&self, u: &Address) -> Result<Self, TreeError> {
        if !self.collapsible_vertices().contains(u) {
            return Err(TreeError::NotCollapsible(u.clone()));
        }
        let mut tree = self.clone();
        for c in self.children(u).collect::<Vec<_>>() {
            tree.vertices.remove(&c);
        }
        tree.recompute_leaves();
        Ok(tree)
    }

    /// Vertices all of whose children are present and are leaves.
    pub fn collapsible_vertices(&self) -> BTreeSet<Address> {
        self.vertices
            .iter()
            .filter(|v| {
                self.is_interior(v) && self.children(v).all(|c| self.is_leaf(&c))
            })
            .cloned()
            .collect()
    }

    /// Smallest admissible tree containing both. For admissible trees this
    /// is the plain vertex-set union: prefix closure and children
    /// completeness are preserved by unions.
    pub fn join(&self, other: &AdmissibleTree) -> Result<Self, TreeError> {
        if self.arity() != other.arity() {
            return Err(TreeError::ArityMismatch(
                self.d,
                self.root_arity,
                other.d,
                other.root_arity,
            ));
        }
        let mut tree = self.clone();
        tree.vertices.extend(other.vertices.iter().cloned());
        tree.recompute_leaves();
        Ok(tree)
    }

    pub fn is_subtree_of(&self, other: &AdmissibleTree) -> bool {
        self.arity() == other.arity() && self.vertices.is_subset(&other.vertices)
    }

    /// The subtree of this tree hanging below the vertex `u`, re-rooted at
    /// `u` (relative addresses, so root arity becomes `d`).
    pub fn subtree_below(&self, u: &Address) -> AdmissibleTree {
        assert!(!u.is_root() && self.contains(u));
        let mut vertices = BTreeSet::new();
        for v in self.vertices.iter() {
            if let Some(rel) = v.strip_prefix(u) {
                vertices.insert(rel);
            }
        }
        AdmissibleTree::from_vertices(self.d, self.d, vertices)
            .expect("subtree of an admissible tree below a vertex is admissible")
    }
}

impl fmt::Debug for AdmissibleTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "AdmissibleTree(d={}, n={}, leaves=[{}])",
            self.d,
            self.root_arity,
            self.leaves
                .iter()
                .map(|l| l.to_text())
                .collect::<Vec<_>>()
                .join(",")
        )
    }
}

/// The unique tree with `h` leaves grown breadth-first in planar order
/// (children are added to vertices following the top-to-bottom,
/// left-to-right total order).
pub fn special_tree(h: usize, d: u16, root_arity: u16) -> Result<AdmissibleTree, TreeError> {
    let mut tree = AdmissibleTree::trivial(d, root_arity);
    if h == 1 {
        return Ok(tree);
    }
    let feasible = h >= root_arity as usize
        && (h - root_arity as usize).is_multiple_of(d as usize - 1);
    if !feasible {
        return Err(TreeError::InfeasibleLeafCount {
            leaves: h,
            d,
            root_arity,
        });
    }
    // Expansion in the total order = expanding, at each step, the leaf that
    // is minimal by (depth, planar position).
    while tree.leaf_count() < h {
        let u = tree
            .leaves_ordered()
            .iter()
            .min_by_key(|l| (l.depth(), (*l).clone()))
            .unwrap()
            .clone();
        tree = tree.expand(&u)?;
    }
    Ok(tree)
}

/// A forest isomorphism permuting the cones at the leaves of a tree while
/// preserving the left-right order inside each cone: determined by an
/// arbitrary bijection of the leaves.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RigidPermutation {
    tree: AdmissibleTree,
    /// leaf index (planar order) -> leaf index (planar order)
    perm: Vec<usize>,
}

impl RigidPermutation {
    pub fn new(tree: AdmissibleTree, perm: Vec<usize>) -> Self {
        assert_eq!(perm.len(), tree.leaf_count());
        let mut seen = vec![false; perm.len()];
        for &i in &perm {
            assert!(i < perm.len() && !seen[i], "not a bijection");
            seen[i] = true;
        }
        RigidPermutation { tree, perm }
    }

    pub fn identity(tree: AdmissibleTree) -> Self {
        let n = tree.leaf_count();
        RigidPermutation {
            tree,
            perm: (0..n).collect(),
        }
    }

    pub fn tree(&self) -> &AdmissibleTree {
        &self.tree
    }

    pub fn leaf_map(&self) -> &[usize] {
        &self.perm
    }

    pub fn apply_leaf(&self, i: usize) -> usize {
        self.perm[i]
    }

    pub fn compose(&self, first: &RigidPermutation) -> RigidPermutation {
        assert_eq!(self.tree, first.tree);
        let perm = (0..self.perm.len())
            .map(|i| self.perm[first.perm[i]])
            .collect();
        RigidPermutation {
            tree: self.tree.clone(),
            perm,
        }
    }

    pub fn inverse(&self) -> RigidPermutation {
        let mut perm = vec![0; self.perm.len()];
        for (i, &j) in self.perm.iter().enumerate() {
            perm[j] = i;
        }
        RigidPermutation {
            tree: self.tree.clone(),
            perm,
        }
    }
}

/// All `h!` rigid permutations of the leaves of `T`, capped.
pub fn rigid_permutations(
    tree: &AdmissibleTree,
    bound: usize,
) -> Result<Vec<RigidPermutation>, TreeError> {
    let h = tree.leaf_count();
    if h > bound {
        return Err(TreeError::BoundExceeded(h, bound));
    }
    use itertools::Itertools;
    Ok((0..h)
        .permutations(h)
        .map(|perm| RigidPermutation::new(tree.clone(), perm))
        .collect())
}

/// The rigid permutation sending the ordered leaf block `source` to the
/// positions `target` order-preservingly, with the complement mapped
/// order-preservingly onto the complement.
pub fn rigid_moving_block(
    tree: &AdmissibleTree,
    source: &[usize],
    target: &[usize],
) -> RigidPermutation {
    let h = tree.leaf_count();
    assert_eq!(source.len(), target.len());
    let mut perm = vec![usize::MAX; h];
    for (&s, &t) in source.iter().zip(target.iter()) {
        perm[s] = t;
    }
    let rest_src: Vec<usize> = (0..h).filter(|i| !source.contains(i)).collect();
    let rest_tgt: Vec<usize> = (0..h).filter(|i| !target.contains(i)).collect();
    for (&s, &t) in rest_src.iter().zip(rest_tgt.iter()) {
        perm[s] = t;
    }
    RigidPermutation::new(tree.clone(), perm)
}

/// Sign of a permutation given as the image vector of `0..n`.
pub fn perm_sign(perm: &[usize]) -> i8 {
    let mut seen = vec![false; perm.len()];
    let mut sign = 1i8;
    for start in 0..perm.len() {
        if seen[start] {
            continue;
        }
        let mut len = 0;
        let mut i = start;
        while !seen[i] {
            seen[i] = true;
            i = perm[i];
            len += 1;
        }
        if len % 2 == 0 {
            sign = -sign;
        }
    }
    sign
}
