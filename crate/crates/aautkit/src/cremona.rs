//! Small finite fields, projective points and lines, PGL actions, the
//! standard quadratic involution, induced permutations and their parities,
//! permutation-group closure (Schreier–Sims), and the depth-1 bubble
//! action that feeds the almost-automorphism machinery with d = q+1,
//! n = q²+q+1.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::Serialize;
use thiserror::Error;

use crate::aaut::{AautError, AlmostAutomorphism, Portrait};
use crate::tree::{perm_sign, Address, AdmissibleTree};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CremonaError {
    #[error("unsupported field size {0}")]
    UnsupportedField(u16),
    #[error("map is not bijective on rational points: {0}")]
    NotBijectiveOnRationalPoints(String),
    #[error("operation does not support this map kind")]
    UnsupportedMap,
    #[error("permutation does not send position {0} to position {1}")]
    PositionMismatch(usize, usize),
    #[error("bad map: {0}")]
    BadMap(String),
    #[error(transparent)]
    Aaut(#[from] AautError),
}

// ---- fields -----------------------------------------------------------------

/// F_q for q ∈ {2,3,4,5,7,8,9}, table-driven. Elements are indices
/// 0..q; the index encodes the residue's coefficient vector in base p, so
/// 0 and 1 are the additive and multiplicative identities. Fixed moduli:
/// F4 = F2[t]/(t²+t+1), F8 = F2[t]/(t³+t+1), F9 = F3[t]/(t²+1).
#[derive(Clone, Debug)]
pub struct Fq {
    pub q: u16,
    pub p: u16,
    add: Vec<Vec<u8>>,
    mul: Vec<Vec<u8>>,
    inv: Vec<u8>,
    neg: Vec<u8>,
}

fn modulus_tail(q: u16) -> Vec<u16> {
    // non-leading coefficients of the fixed monic irreducible modulus
    match q {
        4 => vec![1, 1],    // t² + t + 1
        8 => vec![1, 1, 0], // t³ + t + 1
        9 => vec![1, 0],    // t² + 1
        _ => vec![],
    }
}

impl Fq {
    pub fn new(q: u16) -> Result<Fq, CremonaError> {
        let p = match q {
            2 | 3 | 5 | 7 => q,
            4 | 8 => 2,
            9 => 3,
            _ => return Err(CremonaError::UnsupportedField(q)),
        };
        let deg = {
            let mut d = 0;
            let mut t = 1u16;
            while t < q {
                t *= p;
                d += 1;
            }
            d.max(1)
        };
        let tail = modulus_tail(q);
        let to_vec = |x: u16| -> Vec<u16> {
            let mut v = vec![0u16; deg];
            let mut x = x;
            for c in v.iter_mut() {
                *c = x % p;
                x /= p;
            }
            v
        };
        let from_vec = |v: &[u16]| -> u16 { v.iter().rev().fold(0, |acc, &c| acc * p + c) };
        let addf = |a: u16, b: u16| -> u16 {
            let (va, vb) = (to_vec(a), to_vec(b));
            let s: Vec<u16> = va.iter().zip(&vb).map(|(x, y)| (x + y) % p).collect();
            from_vec(&s)
        };
        let mulf = |a: u16, b: u16| -> u16 {
            let (va, vb) = (to_vec(a), to_vec(b));
            let mut prod = vec![0u16; 2 * deg];
            for (i, &x) in va.iter().enumerate() {
                for (j, &y) in vb.iter().enumerate() {
                    prod[i + j] = (prod[i + j] + x * y) % p;
                }
            }
            // reduce by the modulus: t^deg = -(tail)
            for i in (deg..2 * deg).rev() {
                let c = prod[i];
                if c == 0 {
                    continue;
                }
                prod[i] = 0;
                for (k, &m) in tail.iter().enumerate() {
                    let idx = i - deg + k;
                    prod[idx] = (prod[idx] + (p - m % p) % p * c) % p;
                }
            }
            from_vec(&prod[..deg])
        };
        let n = q as usize;
        let mut add = vec![vec![0u8; n]; n];
        let mut mul = vec![vec![0u8; n]; n];
        for a in 0..q {
            for b in 0..q {
                add[a as usize][b as usize] = addf(a, b) as u8;
                mul[a as usize][b as usize] = mulf(a, b) as u8;
            }
        }
        let mut neg = vec![0u8; n];
        let mut inv = vec![0u8; n];
        for a in 0..n {
            neg[a] = (0..n).find(|&b| add[a][b] == 0).unwrap() as u8;
            if a != 0 {
                inv[a] = (1..n).find(|&b| mul[a][b] == 1).unwrap() as u8;
            }
        }
        Ok(Fq { q, p, add, mul, inv, neg })
    }

    pub fn add(&self, a: u8, b: u8) -> u8 {
        self.add[a as usize][b as usize]
    }

    pub fn mul(&self, a: u8, b: u8) -> u8 {
        self.mul[a as usize][b as usize]
    }

    pub fn neg(&self, a: u8) -> u8 {
        self.neg[a as usize]
    }

    pub fn sub(&self, a: u8, b: u8) -> u8 {
        self.add(a, self.neg(b))
    }

    pub fn inv(&self, a: u8) -> u8 {
        assert!(a != 0, "division by zero");
        self.inv[a as usize]
    }

    pub fn pow(&self, a: u8, e: u32) -> u8 {
        let mut r = 1u8;
        for _ in 0..e {
            r = self.mul(r, a);
        }
        r
    }

    /// exhaustive field-axiom check (used by the test suites)
    pub fn verify_axioms(&self) -> bool {
        let q = self.q as u8;
        let all = 0..q;
        for a in all.clone() {
            for b in 0..q {
                if self.add(a, b) != self.add(b, a) || self.mul(a, b) != self.mul(b, a) {
                    return false;
                }
                for c in 0..q {
                    if self.add(self.add(a, b), c) != self.add(a, self.add(b, c))
                        || self.mul(self.mul(a, b), c) != self.mul(a, self.mul(b, c))
                        || self.mul(a, self.add(b, c)) != self.add(self.mul(a, b), self.mul(a, c))
                    {
                        return false;
                    }
                }
            }
            if self.add(a, 0) != a || self.mul(a, 1) != a || self.add(a, self.neg(a)) != 0 {
                return false;
            }
            if a != 0 && self.mul(a, self.inv(a)) != 1 {
                return false;
            }
        }
        // Frobenius x ↦ x^p is additive
        for a in 0..q {
            for b in 0..q {
                if self.pow(self.add(a, b), self.p as u32)
                    != self.add(self.pow(a, self.p as u32), self.pow(b, self.p as u32))
                {
                    return false;
                }
            }
        }
        true
    }
}

// ---- projective points --------------------------------------------------------

/// Homogeneous coordinates normalized so the first nonzero entry is 1.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct ProjPoint(pub Vec<u8>);

impl ProjPoint {
    pub fn normalize(f: &Fq, coords: &[u8]) -> Option<ProjPoint> {
        let lead = coords.iter().position(|&c| c != 0)?;
        let s = f.inv(coords[lead]);
        Some(ProjPoint(coords.iter().map(|&c| f.mul(s, c)).collect()))
    }
}

/// canonical point list of P^dim(F_q), lexicographic on normalized coords
pub fn enumerate_points(f: &Fq, dim: usize) -> Vec<ProjPoint> {
    let q = f.q as usize;
    let len = dim + 1;
    let mut pts = BTreeSet::new();
    let mut coords = vec![0u8; len];
    loop {
        if let Some(p) = ProjPoint::normalize(f, &coords) {
            pts.insert(p);
        }
        let mut i = len;
        while i > 0 {
            i -= 1;
            if (coords[i] as usize) + 1 < q {
                coords[i] += 1;
                for c in coords[i + 1..].iter_mut() {
                    *c = 0;
                }
                break;
            }
            if i == 0 {
                return pts.into_iter().collect();
            }
        }
    }
}

/// rational lines through a point of P², as normalized dual coordinates
pub fn lines_through(f: &Fq, p: &ProjPoint) -> Vec<ProjPoint> {
    enumerate_points(f, 2)
        .into_iter()
        .filter(|l| dot(f, &l.0, &p.0) == 0)
        .collect()
}

fn dot(f: &Fq, a: &[u8], b: &[u8]) -> u8 {
    a.iter()
        .zip(b)
        .fold(0u8, |acc, (&x, &y)| f.add(acc, f.mul(x, y)))
}

// ---- matrices ---------------------------------------------------------------

pub type Matrix = Vec<Vec<u8>>;

pub fn mat_mul(f: &Fq, a: &Matrix, b: &Matrix) -> Matrix {
    let n = a.len();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| (0..n).fold(0u8, |acc, k| f.add(acc, f.mul(a[i][k], b[k][j]))))
                .collect()
        })
        .collect()
}

pub fn mat_apply(f: &Fq, m: &Matrix, v: &[u8]) -> Vec<u8> {
    m.iter().map(|row| dot(f, row, v)).collect()
}

pub fn det(f: &Fq, m: &Matrix) -> u8 {
    match m.len() {
        2 => f.sub(f.mul(m[0][0], m[1][1]), f.mul(m[0][1], m[1][0])),
        3 => {
            let mut d = 0u8;
            let cof = |i: usize, j: usize| {
                let r: Vec<usize> = (0..3).filter(|&x| x != i).collect();
                let c: Vec<usize> = (0..3).filter(|&x| x != j).collect();
                f.sub(
                    f.mul(m[r[0]][c[0]], m[r[1]][c[1]]),
                    f.mul(m[r[0]][c[1]], m[r[1]][c[0]]),
                )
            };
            for j in 0..3 {
                let t = f.mul(m[0][j], cof(0, j));
                d = if j == 1 { f.sub(d, t) } else { f.add(d, t) };
            }
            d
        }
        _ => panic!("only 2x2 and 3x3"),
    }
}

pub fn mat_inv(f: &Fq, m: &Matrix) -> Option<Matrix> {
    let d = det(f, m);
    if d == 0 {
        return None;
    }
    let di = f.inv(d);
    match m.len() {
        2 => Some(vec![
            vec![f.mul(di, m[1][1]), f.mul(di, f.neg(m[0][1]))],
            vec![f.mul(di, f.neg(m[1][0])), f.mul(di, m[0][0])],
        ]),
        3 => {
            let cof = |i: usize, j: usize| {
                let r: Vec<usize> = (0..3).filter(|&x| x != i).collect();
                let c: Vec<usize> = (0..3).filter(|&x| x != j).collect();
                let minor = f.sub(
                    f.mul(m[r[0]][c[0]], m[r[1]][c[1]]),
                    f.mul(m[r[0]][c[1]], m[r[1]][c[0]]),
                );
                if (i + j) % 2 == 1 {
                    f.neg(minor)
                } else {
                    minor
                }
            };
            Some(
                (0..3)
                    .map(|i| (0..3).map(|j| f.mul(di, cof(j, i))).collect())
                    .collect(),
            )
        }
        _ => None,
    }
}

// ---- projective maps -----------------------------------------------------------

/// A conjugate pair over F_{q²} presented by coordinates in the quadratic
/// extension; see `Fq2`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConjugatePair {
    pub b: Vec<(u8, u8)>, // three F_{q²} coordinates as (lo, hi) over F_q
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ProjMap {
    Linear(Matrix),
    /// [x:y:z] ↦ [yz : xz : xy]
    QuadraticStd,
    /// the quadratic involution defined by conics through a rational
    /// point and a Galois-conjugate pair
    QuadraticAB { a: ProjPoint, pair: ConjugatePair },
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Permutation(pub Vec<usize>);

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Permutation((0..n).collect())
    }

    pub fn compose(&self, first: &Permutation) -> Permutation {
        Permutation(first.0.iter().map(|&i| self.0[i]).collect())
    }

    pub fn inverse(&self) -> Permutation {
        let mut inv = vec![0usize; self.0.len()];
        for (i, &j) in self.0.iter().enumerate() {
            inv[j] = i;
        }
        Permutation(inv)
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().enumerate().all(|(i, &j)| i == j)
    }

    pub fn sign(&self) -> i8 {
        perm_sign(&self.0)
    }

    pub fn order(&self) -> usize {
        let mut k = 1;
        let mut cur = self.clone();
        while !cur.is_identity() {
            cur = cur.compose(self);
            k += 1;
        }
        k
    }
}

// ---- quadratic extension (for QuadraticAB) -------------------------------------

/// F_{q²} = F_q[s]/(s² − σ₁ s − σ₀) for the first monic irreducible found
/// in lexicographic order; elements are (lo, hi) = lo + hi·s.
pub struct Fq2<'a> {
    base: &'a Fq,
    s1: u8, // s² = s1·s + s0
    s0: u8,
}

impl<'a> Fq2<'a> {
    pub fn new(base: &'a Fq) -> Fq2<'a> {
        // find monic irreducible s² + a s + b: no roots in F_q
        for a in 0..base.q as u8 {
            for b in 0..base.q as u8 {
                let has_root = (0..base.q as u8)
                    .any(|x| base.add(base.add(base.mul(x, x), base.mul(a, x)), b) == 0);
                if !has_root {
                    return Fq2 {
                        base,
                        s1: base.neg(a),
                        s0: base.neg(b),
                    };
                }
            }
        }
        unreachable!("irreducible quadratics exist over every finite field")
    }

    pub fn add(&self, x: (u8, u8), y: (u8, u8)) -> (u8, u8) {
        (self.base.add(x.0, y.0), self.base.add(x.1, y.1))
    }

    pub fn mul(&self, x: (u8, u8), y: (u8, u8)) -> (u8, u8) {
        let f = self.base;
        // (a + b s)(c + d s) = ac + (ad + bc) s + bd s², s² = s1 s + s0
        let (a, b) = x;
        let (c, d) = y;
        let bd = f.mul(b, d);
        (
            f.add(f.mul(a, c), f.mul(bd, self.s0)),
            f.add(f.add(f.mul(a, d), f.mul(b, c)), f.mul(bd, self.s1)),
        )
    }

    pub fn is_zero(&self, x: (u8, u8)) -> bool {
        x == (0, 0)
    }

    /// Frobenius x ↦ x^q, the nontrivial Galois automorphism over F_q
    pub fn conj(&self, x: (u8, u8)) -> (u8, u8) {
        let mut r = (1u8, 0u8);
        for _ in 0..self.base.q {
            r = self.mul(r, x);
        }
        r
    }
}

// ---- induced permutations -------------------------------------------------------

/// evaluate a projective map at a point; None at indeterminacy
pub fn evaluate(f: &Fq, m: &ProjMap, p: &ProjPoint) -> Option<ProjPoint> {
    match m {
        ProjMap::Linear(mat) => ProjPoint::normalize(f, &mat_apply(f, mat, &p.0)),
        ProjMap::QuadraticStd => {
            let (x, y, z) = (p.0[0], p.0[1], p.0[2]);
            ProjPoint::normalize(f, &[f.mul(y, z), f.mul(x, z), f.mul(x, y)])
        }
        ProjMap::QuadraticAB { a, pair } => {
            let conics = conic_net(f, a, pair)?;
            let vals: Vec<u8> = conics.iter().map(|c| eval_conic(f, c, &p.0)).collect();
            ProjPoint::normalize(f, &vals)
        }
    }
}

/// basis of the net of conics through a, b, conj(b); None if the
/// configuration is degenerate
fn conic_net(f: &Fq, a: &ProjPoint, pair: &ConjugatePair) -> Option<Vec<[u8; 6]>> {
    let ext = Fq2::new(f);
    let b: Vec<(u8, u8)> = pair.b.clone();
    let bbar: Vec<(u8, u8)> = b.iter().map(|&c| ext.conj(c)).collect();
    if b == bbar {
        return None; // not a genuine conjugate pair
    }
    // conic c0 x² + c1 y² + c2 z² + c3 xy + c4 xz + c5 yz; conditions at
    // a (one F_q row) and at b (an F_{q²} row = two F_q rows)
    let monoms_q = |p: &[u8]| -> [u8; 6] {
        let (x, y, z) = (p[0], p[1], p[2]);
        [
            f.mul(x, x),
            f.mul(y, y),
            f.mul(z, z),
            f.mul(x, y),
            f.mul(x, z),
            f.mul(y, z),
        ]
    };
    let monoms_q2 = |p: &[(u8, u8)]| -> [(u8, u8); 6] {
        let (x, y, z) = (p[0], p[1], p[2]);
        [
            ext.mul(x, x),
            ext.mul(y, y),
            ext.mul(z, z),
            ext.mul(x, y),
            ext.mul(x, z),
            ext.mul(y, z),
        ]
    };
    let mut rows: Vec<[u8; 6]> = vec![monoms_q(&a.0)];
    let brow = monoms_q2(&b);
    rows.push(brow.map(|c| c.0));
    rows.push(brow.map(|c| c.1));
    let ns = nullspace(f, &rows);
    if ns.len() != 3 {
        return None;
    }
    Some(ns)
}

fn eval_conic(f: &Fq, c: &[u8; 6], p: &[u8]) -> u8 {
    let (x, y, z) = (p[0], p[1], p[2]);
    let terms = [
        f.mul(c[0], f.mul(x, x)),
        f.mul(c[1], f.mul(y, y)),
        f.mul(c[2], f.mul(z, z)),
        f.mul(c[3], f.mul(x, y)),
        f.mul(c[4], f.mul(x, z)),
        f.mul(c[5], f.mul(y, z)),
    ];
    terms.iter().fold(0u8, |acc, &t| f.add(acc, t))
}

/// nullspace basis of a small matrix over F_q
fn nullspace(f: &Fq, rows: &[[u8; 6]]) -> Vec<[u8; 6]> {
    let mut m: Vec<[u8; 6]> = rows.to_vec();
    let mut pivots: Vec<usize> = Vec::new();
    let mut r = 0usize;
    for col in 0..6 {
        if let Some(pr) = (r..m.len()).find(|&i| m[i][col] != 0) {
            m.swap(r, pr);
            let s = f.inv(m[r][col]);
            for x in m[r].iter_mut() {
                *x = f.mul(s, *x);
            }
            for i in 0..m.len() {
                if i != r && m[i][col] != 0 {
                    let c = m[i][col];
                    for j in 0..6 {
                        m[i][j] = f.sub(m[i][j], f.mul(c, m[r][j]));
                    }
                }
            }
            pivots.push(col);
            r += 1;
        }
    }
    let free: Vec<usize> = (0..6).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&fc| {
            let mut v = [0u8; 6];
            v[fc] = 1;
            for (ri, &pc) in pivots.iter().enumerate() {
                v[pc] = f.neg(m[ri][fc]);
            }
            v
        })
        .collect()
}

/// the permutation a projective map induces on the canonical point list,
/// verified bijective
pub fn induced_permutation(f: &Fq, m: &ProjMap) -> Result<Permutation, CremonaError> {
    let dim = match m {
        ProjMap::Linear(mat) => mat.len() - 1,
        _ => 2,
    };
    if let ProjMap::Linear(mat) = m {
        if det(f, mat) == 0 {
            return Err(CremonaError::BadMap("singular matrix".into()));
        }
    }
    let pts = enumerate_points(f, dim);
    let index: BTreeMap<&ProjPoint, usize> = pts.iter().enumerate().map(|(i, p)| (p, i)).collect();
    let mut map = Vec::with_capacity(pts.len());
    let mut hit = vec![false; pts.len()];
    for p in &pts {
        let img = evaluate(f, m, p).ok_or_else(|| {
            CremonaError::NotBijectiveOnRationalPoints(format!("indeterminate at {:?}", p.0))
        })?;
        let j = index[&img];
        if hit[j] {
            return Err(CremonaError::NotBijectiveOnRationalPoints(format!(
                "two points map to {:?}",
                img.0
            )));
        }
        hit[j] = true;
        map.push(j);
    }
    Ok(Permutation(map))
}

// ---- PGL2 parity census -----------------------------------------------------------

#[derive(Clone, Debug, Serialize)]
pub struct ParityCensus {
    pub q: u16,
    pub group_order: usize,
    pub all_even: bool,
    pub odd_example: Option<Vec<Vec<u8>>>,
}

/// enumerate PGL₂(F_q) and report whether every induced permutation of
/// P¹(F_q) is even
pub fn pgl2_parity_census(f: &Fq) -> ParityCensus {
    let q = f.q as usize;
    let mut seen: BTreeSet<Matrix> = BTreeSet::new();
    let mut all_even = true;
    let mut odd_example = None;
    for a in 0..q as u8 {
        for b in 0..q as u8 {
            for c in 0..q as u8 {
                for d in 0..q as u8 {
                    let m: Matrix = vec![vec![a, b], vec![c, d]];
                    if det(f, &m) == 0 {
                        continue;
                    }
                    // canonical scaling: first nonzero entry 1
                    let flat = [a, b, c, d];
                    let lead = flat.iter().find(|&&x| x != 0).unwrap();
                    let s = f.inv(*lead);
                    let canon: Matrix = m
                        .iter()
                        .map(|row| row.iter().map(|&x| f.mul(s, x)).collect())
                        .collect();
                    if !seen.insert(canon.clone()) {
                        continue;
                    }
                    let perm = induced_permutation(f, &ProjMap::Linear(canon.clone()))
                        .expect("linear maps act bijectively");
                    if perm.sign() < 0 && all_even {
                        all_even = false;
                        odd_example = Some(canon);
                    }
                }
            }
        }
    }
    ParityCensus {
        q: f.q,
        group_order: seen.len(),
        all_even,
        odd_example,
    }
}

// ---- block expansion of permutations ----------------------------------------------

/// Replace source position s (0-based) by a block of d positions mapped
/// onto the block at target position r via β, shifting everything else in
/// order. sign(result) = sign(perm)·sign(β)·(−1)^{(r−s)(d−1)}.
pub fn expand_at(
    perm: &Permutation,
    s: usize,
    r: usize,
    d: usize,
    beta: &Permutation,
) -> Result<Permutation, CremonaError> {
    let n = perm.0.len();
    assert!(s < n && r < n && beta.0.len() == d && d >= 1);
    if perm.0[s] != r {
        return Err(CremonaError::PositionMismatch(s, perm.0[s]));
    }
    let shift = |x: usize, at: usize| if x > at { x + d - 1 } else { x };
    let mut out = vec![usize::MAX; n + d - 1];
    for (i, &j) in perm.0.iter().enumerate() {
        if i != s {
            out[shift(i, s)] = shift(j, r);
        }
    }
    for k in 0..d {
        out[s + k] = r + beta.0[k];
    }
    Ok(Permutation(out))
}

// ---- Schreier–Sims ------------------------------------------------------------------

/// Base and strong generating set for a permutation group on ≤ 64 points.
/// Built with Schreier's lemma level by level; exact by construction.
pub struct Bsgs {
    pub n: usize,
    pub base: Vec<usize>,
    transversals: Vec<BTreeMap<usize, Permutation>>,
}

impl Bsgs {
    pub fn new(n: usize, generators: &[Permutation]) -> Bsgs {
        assert!(n <= 64);
        let mut base = Vec::new();
        let mut transversals = Vec::new();
        let mut gens: Vec<Permutation> = generators
            .iter()
            .filter(|g| !g.is_identity())
            .cloned()
            .collect();
        gens.sort();
        gens.dedup();
        while !gens.is_empty() {
            let b = (0..n)
                .find(|&x| gens.iter().any(|g| g.0[x] != x))
                .expect("non-identity generator moves a point");
            // orbit of b with transversal
            let mut tr: BTreeMap<usize, Permutation> = BTreeMap::new();
            tr.insert(b, Permutation::identity(n));
            let mut queue = VecDeque::from([b]);
            while let Some(u) = queue.pop_front() {
                for g in &gens {
                    let v = g.0[u];
                    if !tr.contains_key(&v) {
                        let t = g.compose(&tr[&u]);
                        tr.insert(v, t);
                        queue.push_back(v);
                    }
                }
            }
            // Schreier generators for the stabilizer of b
            let mut next: BTreeSet<Permutation> = BTreeSet::new();
            for (&u, tu) in &tr {
                for g in &gens {
                    let sg = tr[&g.0[u]].inverse().compose(&g.compose(tu));
                    if !sg.is_identity() {
                        next.insert(sg);
                    }
                }
            }
            base.push(b);
            transversals.push(tr);
            gens = next.into_iter().collect();
        }
        Bsgs { n, base, transversals }
    }

    pub fn order(&self) -> u128 {
        self.transversals
            .iter()
            .map(|t| t.len() as u128)
            .product()
    }

    pub fn contains(&self, perm: &Permutation) -> bool {
        let mut cur = perm.clone();
        for (b, tr) in self.base.iter().zip(&self.transversals) {
            let img = cur.0[*b];
            match tr.get(&img) {
                Some(t) => cur = t.inverse().compose(&cur),
                None => return false,
            }
        }
        cur.is_identity()
    }
}

/// naive closure, for cross-checking BSGS orders up to a cap
pub fn naive_closure(generators: &[Permutation], cap: usize) -> Option<BTreeSet<Permutation>> {
    let n = generators.first()?.0.len();
    let mut set = BTreeSet::from([Permutation::identity(n)]);
    let mut queue: VecDeque<Permutation> = set.iter().cloned().collect();
    while let Some(p) = queue.pop_front() {
        for g in generators {
            let q = g.compose(&p);
            if set.insert(q.clone()) {
                if set.len() > cap {
                    return None;
                }
                queue.push_back(q);
            }
        }
    }
    Some(set)
}

// ---- depth-1 bubble action ------------------------------------------------------------

/// A bubble vertex of depth ≤ 1: a rational point, or a tangent direction
/// at a point (the direction is the rational line through the point).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum BubbleVertex {
    Point(ProjPoint),
    Dir(ProjPoint, ProjPoint),
}

fn std_base_points(_f: &Fq) -> Vec<ProjPoint> {
    vec![
        ProjPoint(vec![1, 0, 0]),
        ProjPoint(vec![0, 1, 0]),
        ProjPoint(vec![0, 0, 1]),
    ]
}

/// the line through two distinct points of P²
fn line_through_pts(f: &Fq, p: &ProjPoint, v: &ProjPoint) -> ProjPoint {
    let c = |i: usize, j: usize| f.sub(f.mul(p.0[i], v.0[j]), f.mul(p.0[j], v.0[i]));
    // dual coordinates: cross product
    ProjPoint::normalize(f, &[c(1, 2), f.neg(c(0, 2)), c(0, 1)]).expect("distinct points")
}

/// the depth-≤1 action of a map: Linear maps act on all (point,
/// direction) pairs and on points; QuadraticStd exchanges its base points
/// with the directions along the contracted lines
pub fn depth1_action(
    f: &Fq,
    m: &ProjMap,
) -> Result<Vec<(BubbleVertex, BubbleVertex)>, CremonaError> {
    let pts = enumerate_points(f, 2);
    match m {
        ProjMap::Linear(mat) => {
            if det(f, mat) == 0 {
                return Err(CremonaError::BadMap("singular matrix".into()));
            }
            let mut out = Vec::new();
            for p in &pts {
                let ip = evaluate(f, m, p).unwrap();
                out.push((BubbleVertex::Point(p.clone()), BubbleVertex::Point(ip.clone())));
                for l in lines_through(f, p) {
                    // image of a line under p ↦ M p has dual ℓ M⁻¹
                    let minv = mat_inv(f, mat).unwrap();
                    let il = ProjPoint::normalize(
                        f,
                        &(0..3)
                            .map(|j| dot(f, &l.0, &minv.iter().map(|r| r[j]).collect::<Vec<_>>()))
                            .collect::<Vec<_>>(),
                    )
                    .unwrap();
                    out.push((
                        BubbleVertex::Dir(p.clone(), l),
                        BubbleVertex::Dir(ip.clone(), il),
                    ));
                }
            }
            verify_bijection(&out)?;
            Ok(out)
        }
        ProjMap::QuadraticStd => {
            let base = std_base_points(f);
            let mut out = Vec::new();
            for p in &pts {
                if base.contains(p) {
                    // E_{e_i} ↔ the opposite coordinate line: the direction
                    // with tangent vector v at e_i lands on that line at the
                    // image of v under the Jacobian degeneration; concretely
                    // dir (a,b) at e3 ↦ [b:a:0] and cyclically
                    let i = base.iter().position(|b| b == p).unwrap();
                    for l in lines_through(f, p) {
                        // a point v on l other than p gives the tangent vector
                        let v = point_on_line_not(f, &l, p);
                        let img =
                            ProjPoint::normalize(f, &exceptional_image(f, i, &v.0)).unwrap();
                        let target = if let Some(k) = base.iter().position(|b| *b == img) {
                            // corner case: l joins e_i to another base point
                            // e_j, and the strict transform of the line
                            // {x_i = 0} meets E_{e_k} in the direction along
                            // the line joining e_k and e_j
                            let ej = base
                                .iter()
                                .find(|b| *b != p && dot(f, &l.0, &b.0) == 0)
                                .expect("corner line joins two base points")
                                .clone();
                            let ek = base[k].clone();
                            let dir = line_through_pts(f, &ek, &ej);
                            BubbleVertex::Dir(ek, dir)
                        } else {
                            BubbleVertex::Point(img)
                        };
                        out.push((BubbleVertex::Dir(p.clone(), l), target));
                    }
                } else if let Some(img) = evaluate(f, m, p).filter(|ip| !base.contains(ip)) {
                    // generic point: the differential is defined
                    out.push((BubbleVertex::Point(p.clone()), BubbleVertex::Point(img.clone())));
                } else {
                    // p is on exactly one contracted line {x_i = 0}: it maps
                    // to the direction at e_i matching its position
                    let i = (0..3)
                        .find(|&i| p.0[i] == 0)
                        .expect("non-base point with degenerate image lies on a coordinate line");
                    let v = exceptional_image(f, i, &p.0); // involution: same formula back
                    let e = base[i].clone();
                    let l = line_through_pts(f, &e, &ProjPoint::normalize(f, &v).unwrap());
                    out.push((BubbleVertex::Point(p.clone()), BubbleVertex::Dir(e, l)));
                }
            }
            verify_bijection(&out)?;
            Ok(out)
        }
        ProjMap::QuadraticAB { .. } => Err(CremonaError::UnsupportedMap),
    }
}

/// the classical correspondence: the direction with tangent coordinates v
/// at base point e_i corresponds to the point on the opposite coordinate
/// line obtained by swapping the two non-i coordinates (an involution)
fn exceptional_image(f: &Fq, i: usize, v: &[u8]) -> Vec<u8> {
    let _ = f;
    let (j, k) = match i {
        0 => (1, 2),
        1 => (0, 2),
        _ => (0, 1),
    };
    let mut out = vec![0u8; 3];
    out[j] = v[k];
    out[k] = v[j];
    out
}

fn point_on_line_not(f: &Fq, l: &ProjPoint, p: &ProjPoint) -> ProjPoint {
    enumerate_points(f, 2)
        .into_iter()
        .find(|v| v != p && dot(f, &l.0, &v.0) == 0)
        .expect("a rational line has q+1 rational points")
}

fn verify_bijection(pairs: &[(BubbleVertex, BubbleVertex)]) -> Result<(), CremonaError> {
    let domain: BTreeSet<&BubbleVertex> = pairs.iter().map(|(a, _)| a).collect();
    let range: BTreeSet<&BubbleVertex> = pairs.iter().map(|(_, b)| b).collect();
    if domain.len() != pairs.len() || range.len() != pairs.len() {
        return Err(CremonaError::NotBijectiveOnRationalPoints(
            "depth-1 action has a collision".into(),
        ));
    }
    Ok(())
}

// ---- induced almost automorphism at level 1 ----------------------------------------------

/// The almost automorphism on 𝒯_{d,n}, d = q+1, n = q²+q+1, induced at
/// bubble depth ≤ 1: the domain tree expands the root and the base points
/// of m, the range tree likewise for m⁻¹, and the leaf bijection comes
/// from depth1_action. Portraits are trivial: the element is exact on
/// depth-≤1 vertices and truncated below.
pub fn induced_aaut_level1(f: &Fq, m: &ProjMap) -> Result<AlmostAutomorphism, CremonaError> {
    let pts = enumerate_points(f, 2);
    let n = pts.len() as u16;
    let d = f.q + 1;
    let pt_index: BTreeMap<&ProjPoint, usize> =
        pts.iter().enumerate().map(|(i, p)| (p, i)).collect();
    let base_pts: Vec<ProjPoint> = match m {
        ProjMap::Linear(_) => Vec::new(),
        ProjMap::QuadraticStd => std_base_points(f),
        ProjMap::QuadraticAB { .. } => return Err(CremonaError::UnsupportedMap),
    };
    let tree_with = |expanded: &[ProjPoint]| -> AdmissibleTree {
        let mut t = AdmissibleTree::root_star(d, n);
        for p in expanded {
            let leaf = Address::new(vec![pt_index[p] as u16]);
            t = t.expand(&leaf).expect("base-point leaf");
        }
        t
    };
    // the base points of the inverse: for the involution QuadraticStd they
    // coincide; Linear has none
    let domain = tree_with(&base_pts);
    let range = tree_with(&base_pts);
    // address of a bubble vertex as a leaf
    let addr = |v: &BubbleVertex| -> Address {
        match v {
            BubbleVertex::Point(p) => Address::new(vec![pt_index[p] as u16]),
            BubbleVertex::Dir(p, l) => {
                let lines = lines_through(f, p);
                let li = lines.iter().position(|x| x == l).unwrap();
                Address::new(vec![pt_index[p] as u16, li as u16])
            }
        }
    };
    let action = depth1_action(f, m)?;
    let img: BTreeMap<Address, Address> = action
        .iter()
        .map(|(a, b)| (addr(a), addr(b)))
        .collect();
    let h = domain.leaf_count();
    let mut leaf_map = vec![usize::MAX; h];
    for (i, leaf) in domain.leaves_ordered().iter().enumerate() {
        let target = img
            .get(leaf)
            .unwrap_or_else(|| panic!("no image for leaf {leaf}"));
        leaf_map[i] = range
            .leaf_index(target)
            .unwrap_or_else(|| panic!("image {target} is not a range leaf"));
    }
    Ok(AlmostAutomorphism::new(
        domain,
        range,
        leaf_map,
        vec![Portrait::identity(); h],
    )?)
}

// ---- parity suite -------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize)]
pub struct ParitySuiteReport {
    pub q: u16,
    pub linear_samples: usize,
    pub all_linear_even: bool,
    pub quadratic_std_parity: Option<i8>,
    pub closure_order: Option<u128>,
    pub odd_linear_found: bool,
}

/// random invertible 3×3 matrix over F_q
pub fn random_linear(f: &Fq, rng: &mut impl rand::Rng) -> Matrix {
    loop {
        let m: Matrix = (0..3)
            .map(|_| (0..3).map(|_| rng.gen_range(0..f.q) as u8).collect())
            .collect();
        if det(f, &m) != 0 {
            return m;
        }
    }
}

pub fn gl3_generators(f: &Fq) -> Vec<Matrix> {
    // all transvections I + c·E_ij plus a diagonal torus generator per
    // nonzero scalar: enough to generate GL₃
    let mut gens = Vec::new();
    for i in 0..3 {
        for j in 0..3 {
            if i == j {
                continue;
            }
            for c in 1..f.q as u8 {
                let mut m: Matrix = (0..3)
                    .map(|r| (0..3).map(|s| u8::from(r == s)).collect())
                    .collect();
                m[i][j] = c;
                gens.push(m);
            }
        }
    }
    for c in 2..f.q as u8 {
        let mut m: Matrix = (0..3)
            .map(|r| (0..3).map(|s| u8::from(r == s)).collect())
            .collect();
        m[0][0] = c;
        gens.push(m);
    }
    gens
}

/// parity evidence for the induced almost automorphisms over F_q
pub fn parity_suite(
    f: &Fq,
    rng: &mut impl rand::Rng,
    samples: usize,
) -> Result<ParitySuiteReport, CremonaError> {
    let mut all_linear_even = true;
    let mut odd_linear_found = false;
    for _ in 0..samples {
        let m = ProjMap::Linear(random_linear(f, rng));
        let a = induced_aaut_level1(f, &m)?;
        match a.parity() {
            Ok(1) => {}
            Ok(_) => {
                all_linear_even = false;
                odd_linear_found = true;
            }
            Err(_) => {
                // parity undefined for even d (odd q): fall back to the
                // plain permutation sign
                if induced_permutation(f, &m)?.sign() < 0 {
                    all_linear_even = false;
                    odd_linear_found = true;
                }
            }
        }
    }
    let quadratic_std_parity = if f.q.is_multiple_of(2) {
        Some(induced_aaut_level1(f, &ProjMap::QuadraticStd)?.parity()?)
    } else {
        None
    };
    // closure of the PGL₃ image on the rational points
    let closure_order = if f.q <= 3 {
        let gens: Vec<Permutation> = gl3_generators(f)
            .into_iter()
            .map(|m| induced_permutation(f, &ProjMap::Linear(m)).unwrap())
            .collect();
        let n = (f.q * f.q + f.q + 1) as usize;
        Some(Bsgs::new(n, &gens).order())
    } else {
        None
    };
    Ok(ParitySuiteReport {
        q: f.q,
        linear_samples: samples,
        all_linear_even,
        quadratic_std_parity,
        closure_order,
        odd_linear_found,
    })
}
