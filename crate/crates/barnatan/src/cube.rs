//! Sign and frame assignments on the n-cube, and the algebraic cube complex.
//!
//! Faces are encoded by their minimum vertex plus starred coordinates; the
//! star-string form (`"01*0"`) is used for serialization.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::complex::{ChainComplex, Generator};
use crate::diagram::State;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CubeError {
    #[error("cochain does not satisfy the sign assignment condition")]
    NotASignAssignment,
    #[error("assignments have different cube dimensions: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("sign and frame assignment are incompatible")]
    IncompatiblePair,
}

/// Edge of K(n): lower vertex plus the starred coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CubeEdge {
    pub base: u32,
    pub dir: usize,
}

/// 2-face of K(n): lower vertex plus the two starred coordinates, i < j.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CubeFace {
    pub base: u32,
    pub i: usize,
    pub j: usize,
}

impl CubeEdge {
    pub fn new(base: u32, dir: usize) -> Self {
        debug_assert_eq!(base >> dir & 1, 0);
        CubeEdge { base, dir }
    }

    pub fn upper(&self) -> u32 {
        self.base | (1 << self.dir)
    }

    pub fn star_string(&self, n: usize) -> String {
        star_string(self.base, &[self.dir], n)
    }
}

impl CubeFace {
    pub fn new(base: u32, i: usize, j: usize) -> Self {
        debug_assert!(i < j);
        debug_assert_eq!(base >> i & 1, 0);
        debug_assert_eq!(base >> j & 1, 0);
        CubeFace { base, i, j }
    }

    pub fn edges(&self) -> [CubeEdge; 4] {
        let CubeFace { base, i, j } = *self;
        [
            CubeEdge::new(base, i),
            CubeEdge::new(base, j),
            CubeEdge::new(base | (1 << i), j),
            CubeEdge::new(base | (1 << j), i),
        ]
    }

    pub fn star_string(&self, n: usize) -> String {
        star_string(self.base, &[self.i, self.j], n)
    }
}

fn star_string(base: u32, stars: &[usize], n: usize) -> String {
    (0..n)
        .map(|k| {
            if stars.contains(&k) {
                '*'
            } else if base >> k & 1 == 1 {
                '1'
            } else {
                '0'
            }
        })
        .collect()
}

pub fn edges(n: usize) -> Vec<CubeEdge> {
    let mut out = Vec::new();
    for base in 0..(1u64 << n) as u32 {
        for dir in 0..n {
            if base >> dir & 1 == 0 {
                out.push(CubeEdge::new(base, dir));
            }
        }
    }
    out
}

pub fn faces2(n: usize) -> Vec<CubeFace> {
    let mut out = Vec::new();
    for base in 0..(1u64 << n) as u32 {
        for i in 0..n {
            for j in (i + 1)..n {
                if base >> i & 1 == 0 && base >> j & 1 == 0 {
                    out.push(CubeFace::new(base, i, j));
                }
            }
        }
    }
    out
}

/// F2-valued 1-cochain on K(n) with δs = 1 on every 2-face.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignAssignment {
    pub n: usize,
    values: BTreeMap<CubeEdge, bool>,
}

/// F2-valued 2-cochain on K(n).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameAssignment {
    pub n: usize,
    values: BTreeMap<CubeFace, bool>,
}

impl SignAssignment {
    pub fn from_fn(n: usize, f: impl Fn(CubeEdge) -> bool) -> Self {
        let values = edges(n).into_iter().map(|e| (e, f(e))).collect();
        SignAssignment { n, values }
    }

    pub fn value(&self, e: CubeEdge) -> bool {
        self.values[&e]
    }

    pub fn set(&mut self, e: CubeEdge, v: bool) {
        self.values.insert(e, v);
    }

    /// Sign (-1)^(s(e)) of the edge from `base` in direction `dir`.
    pub fn sign(&self, base: u32, dir: usize) -> i64 {
        if self.value(CubeEdge::new(base, dir)) {
            -1
        } else {
            1
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        let map: BTreeMap<String, u8> =
            self.values.iter().map(|(e, &v)| (e.star_string(self.n), v as u8)).collect();
        serde_json::json!({ "schema": 1, "n": self.n, "kind": "sign", "values": map })
    }

    pub fn from_json(v: &serde_json::Value) -> Option<SignAssignment> {
        let n = v.get("n")?.as_u64()? as usize;
        let values = v.get("values")?.as_object()?;
        let mut out = standard_sign(n);
        for e in edges(n) {
            let key = e.star_string(n);
            let raw = values.get(&key).or_else(|| values.get(&key.replace('*', "\u{2605}")))?;
            out.set(e, raw.as_u64()? == 1);
        }
        Some(out)
    }
}

impl FrameAssignment {
    pub fn from_fn(n: usize, f: impl Fn(CubeFace) -> bool) -> Self {
        let values = faces2(n).into_iter().map(|e| (e, f(e))).collect();
        FrameAssignment { n, values }
    }

    pub fn value(&self, f: CubeFace) -> bool {
        self.values[&f]
    }

    pub fn to_json(&self) -> serde_json::Value {
        let map: BTreeMap<String, u8> =
            self.values.iter().map(|(e, &v)| (e.star_string(self.n), v as u8)).collect();
        serde_json::json!({ "schema": 1, "n": self.n, "kind": "frame", "values": map })
    }
}

/// Parity of the coordinates of `v` strictly below position `i`.
fn prefix_parity(v: u32, i: usize) -> bool {
    (v & ((1u32 << i) - 1)).count_ones() % 2 == 1
}

/// s(e) = v_1 + ... + v_(i-1) mod 2 for the edge starred at coordinate i.
pub fn standard_sign(n: usize) -> SignAssignment {
    SignAssignment::from_fn(n, |e| prefix_parity(e.base, e.dir))
}

/// f(e) = (v_1 + ... + v_(i-1)) (v_(i+1) + ... + v_(j-1)) for a 2-face
/// starred at coordinates i < j.
pub fn standard_frame(n: usize) -> FrameAssignment {
    FrameAssignment::from_fn(n, |f| {
        let low = prefix_parity(f.base, f.i);
        let mid_mask = ((1u32 << f.j) - 1) & !((1u32 << (f.i + 1)) - 1);
        let mid = (f.base & mid_mask).count_ones() % 2 == 1;
        low && mid
    })
}

/// δs = 1: the four edges of every 2-face sum to 1 mod 2.
pub fn verify_sign(s: &SignAssignment) -> bool {
    faces2(s.n).into_iter().all(|f| {
        let total: u8 = f.edges().iter().map(|&e| s.value(e) as u8).sum();
        total % 2 == 1
    })
}

/// δf(e_(u,v)) = Σ s(e_(w,v)) over the three w with v <_1 w <_2 u,
/// checked on every 3-face.
pub fn verify_frame_pair(s: &SignAssignment, f: &FrameAssignment) -> Result<bool, CubeError> {
    if s.n != f.n {
        return Err(CubeError::DimensionMismatch(s.n, f.n));
    }
    let n = s.n;
    for base in 0..(1u64 << n) as u32 {
        for i in 0..n {
            for j in (i + 1)..n {
                for k in (j + 1)..n {
                    if base >> i & 1 == 1 || base >> j & 1 == 1 || base >> k & 1 == 1 {
                        continue;
                    }
                    let mut df = 0u8;
                    for (a, b) in [(i, j), (i, k), (j, k)] {
                        let c = [i, j, k].into_iter().find(|&x| x != a && x != b).unwrap();
                        df += f.value(CubeFace::new(base, a, b)) as u8;
                        df += f.value(CubeFace::new(base | (1 << c), a, b)) as u8;
                    }
                    let mut rhs = 0u8;
                    for d in [i, j, k] {
                        rhs += s.value(CubeEdge::new(base, d)) as u8;
                    }
                    if df % 2 != rhs % 2 {
                        return Ok(false);
                    }
                }
            }
        }
    }
    Ok(true)
}

/// Construct a frame assignment compatible with `s`: put t = s - s0, solve
/// δb = t by integrating t along staircase paths from the origin, and set
/// f = f0 + g with g(e_(u,w)) = b(w) on 2-faces.
pub fn frame_from_sign(s: &SignAssignment) -> Result<FrameAssignment, CubeError> {
    if !verify_sign(s) {
        return Err(CubeError::NotASignAssignment);
    }
    let n = s.n;
    let s0 = standard_sign(n);
    let t = |e: CubeEdge| s.value(e) ^ s0.value(e);
    // b(v): integrate t along the lexicographic staircase path, b(origin) = 0
    let mut b = vec![false; 1usize << n];
    for v in 1..(1u64 << n) as u32 {
        let mut acc = false;
        let mut cur = 0u32;
        for i in 0..n {
            if v >> i & 1 == 1 {
                acc ^= t(CubeEdge::new(cur, i));
                cur |= 1 << i;
            }
        }
        b[v as usize] = acc;
    }
    let f0 = standard_frame(n);
    let f = FrameAssignment::from_fn(n, |face| f0.value(face) ^ b[face.base as usize]);
    debug_assert_eq!(verify_frame_pair(s, &f), Ok(true));
    Ok(f)
}

/// Chain complex of K(n): one generator per vertex graded by weight, with
/// ∂u = Σ (-1)^(s(e)) v over the codimension-1 predecessors. Stored in the
/// cochain convention (differential raises the grading).
#[derive(Debug, Clone)]
pub struct CubeComplex {
    pub n: usize,
    pub sign: SignAssignment,
    pub complex: ChainComplex,
}

pub fn cube_complex(n: usize, s: &SignAssignment) -> Result<CubeComplex, CubeError> {
    if s.n != n {
        return Err(CubeError::DimensionMismatch(s.n, n));
    }
    if !verify_sign(s) && n > 0 {
        return Err(CubeError::NotASignAssignment);
    }
    let mut cx = ChainComplex::new();
    for u in State::all(n) {
        cx.push_generator(u.weight() as i32, Generator { state: u, labels: 0, grq: None });
    }
    cx.finalize_generators();
    for u in State::all(n) {
        let deg = u.weight() as i32;
        let src = cx.index_of(deg, u, 0);
        for dir in 0..n {
            if !u.bit(dir) {
                let v = u.with_bit(dir, true);
                let dst = cx.index_of(deg + 1, v, 0);
                cx.add_entry(deg, src, dst, s.sign(u.bits, dir));
            }
        }
    }
    Ok(CubeComplex { n, sign: s.clone(), complex: cx })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::homology::{homology, Coeffs};

    #[test]
    fn standard_sign_values() {
        let s2 = standard_sign(2);
        // edge (*, 0): star at coordinate 0, empty prefix sum
        assert!(!s2.value(CubeEdge::new(0b00, 0)));
        // edge (1, *): star at coordinate 1, prefix v_0 = 1
        assert!(s2.value(CubeEdge::new(0b01, 1)));
        let s3 = standard_sign(3);
        // edge (1, 1, *): prefix 1 + 1 = 0
        assert!(!s3.value(CubeEdge::new(0b011, 2)));
    }

    #[test]
    fn standard_sign_verifies_up_to_8() {
        for n in 0..=8 {
            assert!(verify_sign(&standard_sign(n)), "n = {n}");
        }
    }

    #[test]
    fn zero_cochain_is_not_a_sign_assignment() {
        let z = SignAssignment::from_fn(2, |_| false);
        assert!(!verify_sign(&z));
    }

    #[test]
    fn standard_frame_values() {
        let f2 = standard_frame(2);
        assert!(!f2.value(CubeFace::new(0b00, 0, 1)));
        let f3 = standard_frame(3);
        assert!(!f3.value(CubeFace::new(0b001, 1, 2)));
        let f4 = standard_frame(4);
        // face (1,*,1,*): low = v_0 = 1, mid = v_2 = 1
        assert!(f4.value(CubeFace::new(0b0101, 1, 3)));
    }

    #[test]
    fn standard_pair_compatible_up_to_6() {
        for n in 0..=6 {
            assert_eq!(verify_frame_pair(&standard_sign(n), &standard_frame(n)), Ok(true), "n = {n}");
        }
    }

    #[test]
    fn zero_frame_against_standard_sign() {
        // at n = 3 the standard frame is identically zero, so the zero
        // cochain is compatible there; n = 4 is the first failure
        let z3 = FrameAssignment::from_fn(3, |_| false);
        assert_eq!(standard_frame(3), z3);
        assert_eq!(verify_frame_pair(&standard_sign(3), &z3), Ok(true));
        let z4 = FrameAssignment::from_fn(4, |_| false);
        assert_eq!(verify_frame_pair(&standard_sign(4), &z4), Ok(false));
    }

    #[test]
    fn dimension_mismatch() {
        let s = standard_sign(3);
        let f = standard_frame(2);
        assert!(matches!(verify_frame_pair(&s, &f), Err(CubeError::DimensionMismatch(3, 2))));
    }

    #[test]
    fn frame_from_standard_sign_is_standard_frame() {
        for n in 0..=5 {
            assert_eq!(frame_from_sign(&standard_sign(n)).unwrap(), standard_frame(n));
        }
    }

    /// Random valid sign assignments: s0 + δb for random 0-cochains b.
    pub(crate) fn random_sign(n: usize, seed: u64) -> SignAssignment {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let b: Vec<bool> = (0..(1usize << n)).map(|_| rng.gen()).collect();
        let s0 = standard_sign(n);
        SignAssignment::from_fn(n, |e| s0.value(e) ^ b[e.base as usize] ^ b[e.upper() as usize])
    }

    #[test]
    fn frame_from_random_signs_verifies() {
        for seed in 0..20 {
            let s = random_sign(4, seed);
            assert!(verify_sign(&s));
            let f = frame_from_sign(&s).unwrap();
            assert_eq!(verify_frame_pair(&s, &f), Ok(true));
        }
    }

    #[test]
    fn perturbed_sign_frame_verifies() {
        // s = s0 + δ(indicator of a vertex)
        let n = 3;
        let s0 = standard_sign(n);
        let v0 = 0b101u32;
        let s = SignAssignment::from_fn(n, |e| {
            s0.value(e) ^ (e.base == v0) ^ (e.upper() == v0)
        });
        assert!(verify_sign(&s));
        let f = frame_from_sign(&s).unwrap();
        assert_eq!(verify_frame_pair(&s, &f), Ok(true));
    }

    #[test]
    fn frame_from_invalid_sign_rejected() {
        let z = SignAssignment::from_fn(2, |_| false);
        assert!(matches!(frame_from_sign(&z), Err(CubeError::NotASignAssignment)));
    }

    #[test]
    fn cube_complex_n1() {
        let c = cube_complex(1, &standard_sign(1)).unwrap();
        assert!(c.complex.is_complex());
        let h = homology(&c.complex, Coeffs::Z);
        assert!(h.is_trivial());
    }

    #[test]
    fn cube_complex_acyclic_standard_and_random() {
        for n in 0..=5 {
            let c = cube_complex(n, &standard_sign(n)).unwrap();
            assert!(c.complex.is_complex());
            if n > 0 {
                assert!(homology(&c.complex, Coeffs::Z).is_trivial(), "n = {n}");
            }
        }
        for seed in 0..5 {
            let s = random_sign(5, 100 + seed);
            let c = cube_complex(5, &s).unwrap();
            assert!(c.complex.is_complex());
            assert!(homology(&c.complex, Coeffs::Z).is_trivial());
        }
    }

    #[test]
    fn coboundary_squared_vanishes() {
        // δδb = 1-coboundary of a 0-cochain summed over each 2-face is 0
        use rand::{Rng, SeedableRng};
        let n = 5;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let b: Vec<bool> = (0..(1usize << n)).map(|_| rng.gen()).collect();
        let db = SignAssignment::from_fn(n, |e| b[e.base as usize] ^ b[e.upper() as usize]);
        for f in faces2(n) {
            let total: u8 = f.edges().iter().map(|&e| db.value(e) as u8).sum();
            assert_eq!(total % 2, 0);
        }
    }

    #[test]
    fn frame_condition_rhs_is_a_cocycle() {
        // the sum over the 3-faces of any 4-face of the right hand side of
        // the compatibility condition vanishes
        for n in 4..=5 {
            let s = standard_sign(n);
            let rhs = |base: u32, dirs: [usize; 3]| -> u8 {
                dirs.iter().map(|&d| s.value(CubeEdge::new(base, d)) as u8).sum::<u8>() % 2
            };
            for base in 0..(1u64 << n) as u32 {
                for a in 0..n {
                    for b in (a + 1)..n {
                        for c in (b + 1)..n {
                            for d in (c + 1)..n {
                                if [a, b, c, d].iter().any(|&i| base >> i & 1 == 1) {
                                    continue;
                                }
                                // eight 3-faces of the 4-face (base; a,b,c,d)
                                let mut total = 0u8;
                                for (i, j, k) in [(a, b, c), (a, b, d), (a, c, d), (b, c, d)] {
                                    let other = [a, b, c, d]
                                        .into_iter()
                                        .find(|&x| x != i && x != j && x != k)
                                        .unwrap();
                                    total += rhs(base, [i, j, k]);
                                    total += rhs(base | (1 << other), [i, j, k]);
                                }
                                assert_eq!(total % 2, 0);
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn star_strings() {
        assert_eq!(CubeEdge::new(0b01, 1).star_string(2), "1*");
        assert_eq!(CubeFace::new(0b0101, 1, 3).star_string(4), "1*1*");
    }
}
