//! Frobenius algebras A_(h,t), the generalized Khovanov / Bar-Natan chain
//! complexes in the 1X and XY bases, gradings, and the basis-change
//! isomorphism between the two.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cube::SignAssignment;
use crate::diagram::{DiagramError, LinkDiagram, State};
use crate::matrix::SpMat;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ComplexError {
    #[error("X^2 - {0}X - {1} does not factor over the integers")]
    NotDiagonalizable(i64, i64),
    #[error("sign assignment has dimension {0}, diagram has {1} crossings")]
    DimensionMismatch(usize, usize),
    #[error(transparent)]
    Diagram(#[from] DiagramError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Basis {
    /// standard generators {1, X}: label bit 0 = X, bit 1 = 1
    OneX,
    /// diagonal generators {a, b} = {X - u, X - v}: bit 0 = a, bit 1 = b
    Xy,
}

/// Frobenius algebra structure on Z[X]/(X^2 - hX - t) in a chosen basis,
/// with multiplication and comultiplication tables on the 2-element basis.
#[derive(Debug, Clone)]
pub struct Frobenius {
    pub h: i64,
    pub t: i64,
    pub basis: Basis,
    /// merge[l1][l2] = list of (target label, coefficient)
    pub merge: [[Vec<(u8, i64)>; 2]; 2],
    /// split[l] = list of ((label1, label2), coefficient)
    pub split: [Vec<((u8, u8), i64)>; 2],
    /// the roots (u, v) of X^2 - hX - t, for the Xy basis
    pub roots: Option<(i64, i64)>,
}

pub fn frobenius(h: i64, t: i64, basis: Basis) -> Result<Frobenius, ComplexError> {
    let filter = |v: Vec<(u8, i64)>| v.into_iter().filter(|&(_, c)| c != 0).collect::<Vec<_>>();
    let filter2 =
        |v: Vec<((u8, u8), i64)>| v.into_iter().filter(|&(_, c)| c != 0).collect::<Vec<_>>();
    match basis {
        Basis::OneX => Ok(Frobenius {
            h,
            t,
            basis,
            merge: [
                [filter(vec![(0, h), (1, t)]), filter(vec![(0, 1)])],
                [filter(vec![(0, 1)]), filter(vec![(1, 1)])],
            ],
            split: [
                filter2(vec![((0, 0), 1), ((1, 1), t)]),
                filter2(vec![((0, 1), 1), ((1, 0), 1), ((1, 1), -h)]),
            ],
            roots: None,
        }),
        Basis::Xy => {
            let disc = h * h + 4 * t;
            if disc < 0 {
                return Err(ComplexError::NotDiagonalizable(h, t));
            }
            let sq = (disc as f64).sqrt().round() as i64;
            if sq * sq != disc || (h - sq) % 2 != 0 {
                return Err(ComplexError::NotDiagonalizable(h, t));
            }
            let u = (h - sq) / 2;
            let v = (h + sq) / 2;
            let c = v - u;
            Ok(Frobenius {
                h,
                t,
                basis,
                merge: [
                    [filter(vec![(0, c)]), vec![]],
                    [vec![], filter(vec![(1, -c)])],
                ],
                split: [vec![((0, 0), 1)], vec![((1, 1), 1)]],
                roots: Some((u, v)),
            })
        }
    }
}

impl Frobenius {
    pub fn bar_natan_1x() -> Frobenius {
        frobenius(1, 0, Basis::OneX).unwrap()
    }

    pub fn bar_natan_xy() -> Frobenius {
        frobenius(1, 0, Basis::Xy).unwrap()
    }
}

/// An enhanced state: resolution cube vertex plus per-circle labels.
/// Bit i of `labels` is the label of the i-th circle (circles ordered by
/// minimal edge), 0 meaning X.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Generator {
    pub state: State,
    pub labels: u32,
    pub grq: Option<i32>,
}

/// Free graded complex with the differential raising the grading by 1.
/// Generators are ordered (state, labels) lexicographically within each
/// degree; `d[k]` maps degree k to k+1 with entry (target row, source col).
#[derive(Debug, Clone, Default)]
pub struct ChainComplex {
    pub gens: BTreeMap<i32, Vec<Generator>>,
    index: BTreeMap<(i32, u32, u32), usize>,
    pub d: BTreeMap<i32, SpMat>,
}

impl ChainComplex {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push_generator(&mut self, deg: i32, g: Generator) {
        self.gens.entry(deg).or_default().push(g);
    }

    /// Sort generators canonically, build the index, allocate differentials.
    pub fn finalize_generators(&mut self) {
        self.index.clear();
        for (&deg, gens) in self.gens.iter_mut() {
            gens.sort_by_key(|g| (g.state.bits, g.labels));
            for (i, g) in gens.iter().enumerate() {
                self.index.insert((deg, g.state.bits, g.labels), i);
            }
        }
        let degs: Vec<i32> = self.gens.keys().copied().collect();
        for &deg in &degs {
            let rows = self.dim(deg + 1);
            let cols = self.dim(deg);
            self.d.insert(deg, SpMat::new(rows, cols));
        }
    }

    pub fn dim(&self, deg: i32) -> usize {
        self.gens.get(&deg).map_or(0, Vec::len)
    }

    pub fn total_dim(&self) -> usize {
        self.gens.values().map(Vec::len).sum()
    }

    pub fn degrees(&self) -> Vec<i32> {
        self.gens.keys().copied().collect()
    }

    pub fn index_of(&self, deg: i32, state: State, labels: u32) -> usize {
        self.index[&(deg, state.bits, labels)]
    }

    pub fn try_index_of(&self, deg: i32, state: State, labels: u32) -> Option<usize> {
        self.index.get(&(deg, state.bits, labels)).copied()
    }

    pub fn add_entry(&mut self, deg: i32, src: usize, dst: usize, coeff: i64) {
        self.d.get_mut(&deg).expect("degree not allocated").add(dst, src, coeff);
    }

    pub fn diff(&self, deg: i32) -> Option<&SpMat> {
        self.d.get(&deg)
    }

    /// d ∘ d = 0 on every pair of consecutive degrees.
    pub fn is_complex(&self) -> bool {
        self.degrees().iter().all(|&k| match (self.d.get(&k), self.d.get(&(k + 1))) {
            (Some(a), Some(b)) => b.mul(a).is_zero(),
            _ => true,
        })
    }

    /// Graded Euler characteristic Σ (-1)^k dim C^k.
    pub fn euler(&self) -> i64 {
        self.gens.iter().map(|(&k, g)| if k.rem_euclid(2) == 0 { g.len() as i64 } else { -(g.len() as i64) }).sum()
    }

    pub fn to_json(&self) -> serde_json::Value {
        let gens: BTreeMap<String, Vec<serde_json::Value>> = self
            .gens
            .iter()
            .map(|(&k, gs)| {
                (
                    k.to_string(),
                    gs.iter()
                        .map(|g| {
                            serde_json::json!({
                                "state": g.state.to_string(),
                                "labels": format!("{:0width$b}", g.labels, width = 1),
                                "grq": g.grq,
                            })
                        })
                        .collect(),
                )
            })
            .collect();
        let diffs: BTreeMap<String, Vec<(usize, usize, i64)>> = self
            .d
            .iter()
            .map(|(&k, m)| (k.to_string(), m.iter().collect()))
            .collect();
        serde_json::json!({ "schema": 1, "generators": gens, "differentials": diffs })
    }

    /// Plain-text form: one block per degree with ranks and matrix triplets.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for &k in &self.degrees() {
            out.push_str(&format!("degree {k}: rank {}\n", self.dim(k)));
        }
        for (&k, m) in &self.d {
            out.push_str(&format!("d[{k}] ({}x{}):\n", m.rows, m.cols));
            for (r, c, v) in m.iter() {
                out.push_str(&format!("  {r} {c} {v}\n"));
            }
        }
        out
    }
}

/// gr_q = |u| + 2|v| - r(u) + n+ - 2n- for a 1X generator, where bit i of
/// `labels` set means circle i carries the unit label.
pub fn quantum_grading(d: &LinkDiagram, state: State, labels: u32) -> Result<i32, DiagramError> {
    let r = d.resolve(state)?.r() as i32;
    Ok(state.weight() as i32 + 2 * (labels.count_ones() as i32) - r + d.n_plus() as i32
        - 2 * d.n_minus() as i32)
}

/// Per-edge transition of a resolution cube: which circles merge or split.
#[derive(Debug, Clone)]
pub enum Transition {
    /// circles (i, j) of the source merge into circle k of the target;
    /// `map[c]` is the target index of untouched source circle c
    Merge { i: usize, j: usize, k: usize, map: Vec<Option<usize>> },
    /// circle i splits into target circles (j, k)
    Split { i: usize, j: usize, k: usize, map: Vec<Option<usize>> },
}

/// Compute the merge/split data from D(u) to D(u + e_dir).
pub fn transition(
    src: &crate::diagram::Resolution,
    dst: &crate::diagram::Resolution,
    dir: usize,
) -> Transition {
    let (s0, s1) = src.crossing_circles(dir);
    let mut map = vec![None; src.r()];
    // untouched circles match by a representative edge; free loops by id
    for (ci, c) in src.circles.iter().enumerate() {
        if ci == s0 || ci == s1 {
            continue;
        }
        let ti = if let Some(k) = c.free_loop {
            dst.circles.iter().position(|t| t.free_loop == Some(k)).unwrap()
        } else {
            dst.circle_of_edge(c.edges[0])
        };
        map[ci] = Some(ti);
    }
    if s0 != s1 {
        let (t0, t1) = dst.crossing_circles(dir);
        debug_assert_eq!(t0, t1);
        Transition::Merge { i: s0, j: s1, k: t0, map }
    } else {
        let (t0, t1) = dst.crossing_circles(dir);
        debug_assert_ne!(t0, t1);
        Transition::Split { i: s0, j: t0, k: t1, map }
    }
}

fn label_bit(labels: u32, i: usize) -> u8 {
    ((labels >> i) & 1) as u8
}

/// The generalized Khovanov complex of `d` with the given Frobenius algebra
/// and sign assignment. Homological grading is |u| - n-, quantum grading is
/// attached for the 1X basis.
pub fn khovanov_complex(
    d: &LinkDiagram,
    frob: &Frobenius,
    s: &SignAssignment,
) -> Result<ChainComplex, ComplexError> {
    let n = d.n();
    if s.n != n {
        return Err(ComplexError::DimensionMismatch(s.n, n));
    }
    let shift = d.n_minus() as i32;
    let mut resolutions = Vec::with_capacity(1 << n);
    for u in State::all(n) {
        resolutions.push(d.resolve(u)?);
    }
    let mut cx = ChainComplex::new();
    for u in State::all(n) {
        let r = resolutions[u.bits as usize].r();
        let deg = u.weight() as i32 - shift;
        for labels in 0..(1u64 << r) as u32 {
            let grq = match frob.basis {
                Basis::OneX => Some(quantum_grading(d, u, labels)?),
                Basis::Xy => None,
            };
            cx.push_generator(deg, Generator { state: u, labels, grq });
        }
    }
    cx.finalize_generators();

    for u in State::all(n) {
        let src_res = &resolutions[u.bits as usize];
        let deg = u.weight() as i32 - shift;
        for dir in 0..n {
            if u.bit(dir) {
                continue;
            }
            let v = u.with_bit(dir, true);
            let dst_res = &resolutions[v.bits as usize];
            let tr = transition(src_res, dst_res, dir);
            let sign = s.sign(u.bits, dir);
            for labels in 0..(1u64 << src_res.r()) as u32 {
                let src_idx = cx.index_of(deg, u, labels);
                match &tr {
                    Transition::Merge { i, j, k, map } => {
                        let mut base = 0u32;
                        for (c, m) in map.iter().enumerate() {
                            if let Some(t) = m {
                                base |= u32::from(label_bit(labels, c)) << t;
                            }
                        }
                        for &(out, coeff) in
                            &frob.merge[label_bit(labels, *i) as usize][label_bit(labels, *j) as usize]
                        {
                            let tl = base | (u32::from(out) << k);
                            let dst_idx = cx.index_of(deg + 1, v, tl);
                            cx.add_entry(deg, src_idx, dst_idx, sign * coeff);
                        }
                    }
                    Transition::Split { i, j, k, map } => {
                        let mut base = 0u32;
                        for (c, m) in map.iter().enumerate() {
                            if let Some(t) = m {
                                base |= u32::from(label_bit(labels, c)) << t;
                            }
                        }
                        for &((o1, o2), coeff) in &frob.split[label_bit(labels, *i) as usize] {
                            let tl = base | (u32::from(o1) << j) | (u32::from(o2) << k);
                            let dst_idx = cx.index_of(deg + 1, v, tl);
                            cx.add_entry(deg, src_idx, dst_idx, sign * coeff);
                        }
                    }
                }
            }
        }
    }
    Ok(cx)
}

/// The XY-basis Bar-Natan complex: all merges and splits diagonal, the
/// m(b ⊗ b) = -b sign carried by the table.
pub fn xy_complex(d: &LinkDiagram, s: &SignAssignment) -> Result<ChainComplex, ComplexError> {
    khovanov_complex(d, &Frobenius::bar_natan_xy(), s)
}

/// Degree-0 chain isomorphism from the XY complex onto the 1X complex.
#[derive(Debug, Clone)]
pub struct ChainIso {
    /// per degree: matrix taking XY coordinates to 1X coordinates
    pub fwd: BTreeMap<i32, SpMat>,
    pub bwd: BTreeMap<i32, SpMat>,
}

/// Change of basis between the XY and 1X Bar-Natan complexes: per circle,
/// the second basis vector maps by b = X - 1 (and back by 1 = X - b).
pub fn basis_change(xy: &ChainComplex, one_x: &ChainComplex) -> ChainIso {
    let mut fwd = BTreeMap::new();
    let mut bwd = BTreeMap::new();
    for (&deg, gens) in &xy.gens {
        let m = gens.len();
        let mut f = SpMat::new(one_x.dim(deg), m);
        let mut b = SpMat::new(m, one_x.dim(deg));
        for (col, g) in gens.iter().enumerate() {
            // expand: Y-labelled circles produce X with +1 and 1 with -1
            let ys = g.labels;
            let mut sub = ys;
            loop {
                let ones = sub;
                let row = one_x.index_of(deg, g.state, ones);
                let coeff = if ones.count_ones() % 2 == 0 { 1 } else { -1 };
                f.add(row, col, coeff);
                if sub == 0 {
                    break;
                }
                sub = (sub - 1) & ys;
            }
        }
        for (col, g) in one_x.gens[&deg].iter().enumerate() {
            let ones = g.labels;
            let mut sub = ones;
            loop {
                let ys = sub;
                let row = xy.index_of(deg, g.state, ys);
                let coeff = if ys.count_ones() % 2 == 0 { 1 } else { -1 };
                b.add(row, col, coeff);
                if sub == 0 {
                    break;
                }
                sub = (sub - 1) & ones;
            }
        }
        fwd.insert(deg, f);
        bwd.insert(deg, b);
    }
    ChainIso { fwd, bwd }
}

impl ChainIso {
    /// fwd and bwd are mutually inverse chain maps.
    pub fn verify(&self, xy: &ChainComplex, one_x: &ChainComplex) -> bool {
        for (&deg, f) in &self.fwd {
            let b = &self.bwd[&deg];
            if !sp_is_identity(&f.mul(b)) || !sp_is_identity(&b.mul(f)) {
                return false;
            }
            if let (Some(dxy), Some(d1x)) = (xy.d.get(&deg), one_x.d.get(&deg)) {
                if let Some(fnext) = self.fwd.get(&(deg + 1)) {
                    if fnext.mul(dxy) != d1x.mul(f) {
                        return false;
                    }
                }
            }
        }
        true
    }
}

fn sp_is_identity(m: &SpMat) -> bool {
    m.rows == m.cols && m.nnz() == m.rows && m.iter().all(|(r, c, v)| r == c && v == 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cube::standard_sign;
    use crate::diagram::parse_pd;

    const TREFOIL_R: &str = "X[1,4,2,5] X[3,6,4,1] X[5,2,6,3]";

    #[test]
    fn bar_natan_tables() {
        let f = Frobenius::bar_natan_1x();
        // m(X ⊗ X) = X
        assert_eq!(f.merge[0][0], vec![(0, 1)]);
        // Δ(1) = X⊗1 + 1⊗X - 1⊗1
        assert_eq!(f.split[1], vec![((0, 1), 1), ((1, 0), 1), ((1, 1), -1)]);
        // Δ(X) = X⊗X
        assert_eq!(f.split[0], vec![((0, 0), 1)]);
    }

    #[test]
    fn khovanov_tables() {
        let f = frobenius(0, 0, Basis::OneX).unwrap();
        assert_eq!(f.merge[0][0], vec![]);
        assert_eq!(f.split[1], vec![((0, 1), 1), ((1, 0), 1)]);
    }

    #[test]
    fn xy_tables() {
        let f = Frobenius::bar_natan_xy();
        assert_eq!(f.roots, Some((0, 1)));
        // m(Y ⊗ Y) = -Y, Δ(X) = X⊗X
        assert_eq!(f.merge[1][1], vec![(1, -1)]);
        assert_eq!(f.merge[0][1], vec![]);
        assert_eq!(f.split[0], vec![((0, 0), 1)]);
        // Lee: c = 2
        let lee = frobenius(0, 1, Basis::Xy).unwrap();
        assert_eq!(lee.roots, Some((-1, 1)));
        assert_eq!(lee.merge[0][0], vec![(0, 2)]);
        // Khovanov diagonalizes with c = 0
        assert_eq!(frobenius(0, 0, Basis::Xy).unwrap().roots, Some((0, 0)));
        assert!(matches!(frobenius(0, 2, Basis::Xy), Err(ComplexError::NotDiagonalizable(0, 2))));
    }

    /// exhaustive Frobenius relation check on the 2-dimensional module
    fn frobenius_relation_holds(f: &Frobenius) -> bool {
        // Δ∘m and (id⊗m)∘(Δ⊗id) as maps A⊗A -> A⊗A, compared entrywise
        let dim = 2usize;
        let mut lhs = vec![vec![0i64; dim * dim]; dim * dim];
        let mut rhs1 = vec![vec![0i64; dim * dim]; dim * dim];
        let mut rhs2 = vec![vec![0i64; dim * dim]; dim * dim];
        for a in 0..dim {
            for b in 0..dim {
                let col = a * dim + b;
                for &(m1, c1) in &f.merge[a][b] {
                    for &((s1, s2), c2) in &f.split[m1 as usize] {
                        lhs[s1 as usize * dim + s2 as usize][col] += c1 * c2;
                    }
                }
                // (id ⊗ m)(Δ ⊗ id)(a ⊗ b)
                for &((s1, s2), c1) in &f.split[a] {
                    for &(m1, c2) in &f.merge[s2 as usize][b] {
                        rhs1[s1 as usize * dim + m1 as usize][col] += c1 * c2;
                    }
                }
                // (m ⊗ id)(id ⊗ Δ)(a ⊗ b)
                for &((s1, s2), c1) in &f.split[b] {
                    for &(m1, c2) in &f.merge[a][s1 as usize] {
                        rhs2[m1 as usize * dim + s2 as usize][col] += c1 * c2;
                    }
                }
            }
        }
        lhs == rhs1 && lhs == rhs2
    }

    #[test]
    fn frobenius_relation_all_supported() {
        for (h, t) in [(0, 0), (1, 0), (0, 1)] {
            assert!(frobenius_relation_holds(&frobenius(h, t, Basis::OneX).unwrap()), "1X ({h},{t})");
        }
        for (h, t) in [(0, 0), (1, 0), (0, 1)] {
            assert!(frobenius_relation_holds(&frobenius(h, t, Basis::Xy).unwrap()), "XY ({h},{t})");
        }
    }

    #[test]
    fn trefoil_generator_counts() {
        let d = parse_pd(TREFOIL_R).unwrap();
        let cx = khovanov_complex(&d, &frobenius(0, 0, Basis::OneX).unwrap(), &standard_sign(3)).unwrap();
        let counts: Vec<usize> = (0..=3).map(|k| cx.dim(k)).collect();
        assert_eq!(counts, vec![4, 6, 12, 8]);
        assert!(cx.is_complex());
    }

    #[test]
    fn sign_dimension_mismatch_rejected() {
        let d = parse_pd(TREFOIL_R).unwrap();
        assert!(matches!(
            khovanov_complex(&d, &Frobenius::bar_natan_1x(), &standard_sign(2)),
            Err(ComplexError::DimensionMismatch(2, 3))
        ));
    }

    #[test]
    fn empty_diagram_complex() {
        let d = parse_pd("").unwrap();
        let cx = khovanov_complex(&d, &Frobenius::bar_natan_1x(), &standard_sign(0)).unwrap();
        assert_eq!(cx.total_dim(), 1);
        assert_eq!(cx.dim(0), 1);
    }

    #[test]
    fn d_squared_zero_many() {
        for code in [TREFOIL_R, "X[1,4,2,3] X[3,2,4,1]", "X[1,1,2,2]", "X[1,2,2,1] O"] {
            let d = parse_pd(code).unwrap();
            let s = standard_sign(d.n());
            for (h, t) in [(0, 0), (1, 0), (0, 1)] {
                let cx = khovanov_complex(&d, &frobenius(h, t, Basis::OneX).unwrap(), &s).unwrap();
                assert!(cx.is_complex(), "{code} ({h},{t})");
            }
            let cx = xy_complex(&d, &s).unwrap();
            assert!(cx.is_complex(), "{code} xy");
        }
    }

    #[test]
    fn quantum_grading_values() {
        let u = parse_pd("O").unwrap();
        // single crossingless circle: label X -> -1, label 1 -> +1
        assert_eq!(quantum_grading(&u, State::zero(0), 0).unwrap(), -1);
        assert_eq!(quantum_grading(&u, State::zero(0), 1).unwrap(), 1);
        let d = parse_pd(TREFOIL_R).unwrap();
        // Seifert state, both circles labeled X
        assert_eq!(quantum_grading(&d, State::zero(3), 0).unwrap(), 1);
    }

    #[test]
    fn differential_is_quantum_nondecreasing() {
        let d = parse_pd(TREFOIL_R).unwrap();
        let cx = khovanov_complex(&d, &Frobenius::bar_natan_1x(), &standard_sign(3)).unwrap();
        for (&deg, m) in &cx.d {
            for (r, c, v) in m.iter() {
                if v != 0 {
                    let src = &cx.gens[&deg][c];
                    let dst = &cx.gens[&(deg + 1)][r];
                    assert!(dst.grq.unwrap() >= src.grq.unwrap());
                }
            }
        }
    }

    #[test]
    fn basis_change_is_chain_iso() {
        for code in [TREFOIL_R, "X[1,4,2,3] X[3,2,4,1]", "X[1,1,2,2]", "O"] {
            let d = parse_pd(code).unwrap();
            let s = standard_sign(d.n());
            let xy = xy_complex(&d, &s).unwrap();
            let ox = khovanov_complex(&d, &Frobenius::bar_natan_1x(), &s).unwrap();
            let iso = basis_change(&xy, &ox);
            assert!(iso.verify(&xy, &ox), "{code}");
        }
    }

    #[test]
    fn basis_change_single_circle() {
        let d = parse_pd("O").unwrap();
        let s = standard_sign(0);
        let xy = xy_complex(&d, &s).unwrap();
        let ox = khovanov_complex(&d, &Frobenius::bar_natan_1x(), &s).unwrap();
        let iso = basis_change(&xy, &ox);
        let f = &iso.fwd[&0];
        // X -> X, Y -> X - 1: columns ordered (X, Y), rows (X, 1)
        assert_eq!(f.get(0, 0), 1);
        assert_eq!(f.get(1, 0), 0);
        assert_eq!(f.get(0, 1), 1);
        assert_eq!(f.get(1, 1), -1);
    }
}
