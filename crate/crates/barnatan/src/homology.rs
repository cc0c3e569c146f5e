//! Integer and field homology, canonical cycles and classes, the quantum
//! filtration on homology, the s-invariant, and the mirror duality map.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::complex::{khovanov_complex, ChainComplex, ComplexError, Frobenius};
use crate::cube::standard_sign;
use crate::diagram::{AbLabel, DiagramError, LinkDiagram, State};
use crate::matrix::{rank_and_torsion, rank_mod_p, Field, FieldMat, SpMat};

pub use crate::matrix::{smith_normal_form, SmithDecomposition};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum HomologyError {
    #[error("differential does not square to zero")]
    NotAComplex,
    #[error("chain is not a cycle")]
    NotACycle,
    #[error(transparent)]
    Diagram(#[from] DiagramError),
    #[error(transparent)]
    Complex(#[from] ComplexError),
    #[error("no consistent sign solution for the duality map")]
    DualitySigns,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Coeffs {
    Z,
    Q,
    F2,
    F3,
}

impl Coeffs {
    pub fn field(self) -> Option<Field> {
        match self {
            Coeffs::Z => None,
            Coeffs::Q => Some(Field::Q),
            Coeffs::F2 => Some(Field::Fp(2)),
            Coeffs::F3 => Some(Field::Fp(3)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct Group {
    pub rank: usize,
    pub torsion: Vec<BigInt>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HomologySummary {
    pub coeffs: Coeffs,
    pub groups: BTreeMap<i32, Group>,
}

impl HomologySummary {
    /// Drop zero groups, for comparisons across complexes of different spans.
    pub fn nontrivial(&self) -> BTreeMap<i32, Group> {
        self.groups
            .iter()
            .filter(|(_, g)| g.rank > 0 || !g.torsion.is_empty())
            .map(|(&k, g)| (k, g.clone()))
            .collect()
    }

    pub fn is_trivial(&self) -> bool {
        self.groups.values().all(|g| g.rank == 0 && g.torsion.is_empty())
    }

    pub fn total_rank(&self) -> usize {
        self.groups.values().map(|g| g.rank).sum()
    }

    pub fn is_torsion_free(&self) -> bool {
        self.groups.values().all(|g| g.torsion.is_empty())
    }

    /// Multiset of gradings, each repeated by its rank.
    pub fn rank_gradings(&self) -> Vec<i32> {
        let mut out = Vec::new();
        for (&k, g) in &self.groups {
            out.extend(std::iter::repeat_n(k, g.rank));
        }
        out
    }

    pub fn euler(&self) -> i64 {
        self.groups
            .iter()
            .map(|(&k, g)| if k.rem_euclid(2) == 0 { g.rank as i64 } else { -(g.rank as i64) })
            .sum()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (&k, g) in &self.groups {
            if g.rank == 0 && g.torsion.is_empty() {
                continue;
            }
            let mut parts = Vec::new();
            if g.rank > 0 {
                parts.push(match self.coeffs {
                    Coeffs::Z => format!("Z^{}", g.rank),
                    Coeffs::Q => format!("Q^{}", g.rank),
                    Coeffs::F2 => format!("F2^{}", g.rank),
                    Coeffs::F3 => format!("F3^{}", g.rank),
                });
            }
            for t in &g.torsion {
                parts.push(format!("Z/{t}"));
            }
            out.push_str(&format!("{:>4}: {}\n", k, parts.join(" + ")));
        }
        if out.is_empty() {
            out.push_str("trivial\n");
        }
        out
    }
}

/// Homology of a graded complex: Smith normal form over Z, rank-nullity over
/// a field.
pub fn homology(cx: &ChainComplex, coeffs: Coeffs) -> HomologySummary {
    let mut groups = BTreeMap::new();
    let degs = cx.degrees();
    let empty = SpMat::new(0, 0);
    let mut rank_cache: BTreeMap<i32, usize> = BTreeMap::new();
    let mut torsion_cache: BTreeMap<i32, Vec<BigInt>> = BTreeMap::new();
    let mut rank_of = |k: i32, m: &SpMat| -> (usize, Vec<BigInt>) {
        if let Some(&r) = rank_cache.get(&k) {
            let t = torsion_cache.get(&k).cloned().unwrap_or_default();
            return (r, t);
        }
        let (r, t) = match coeffs {
            Coeffs::Z => rank_and_torsion(m),
            Coeffs::Q => (rank_and_torsion(m).0, Vec::new()),
            Coeffs::F2 => (rank_mod_p(m, 2), Vec::new()),
            Coeffs::F3 => (rank_mod_p(m, 3), Vec::new()),
        };
        rank_cache.insert(k, r);
        torsion_cache.insert(k, t.clone());
        (r, t)
    };
    for &k in &degs {
        let dim = cx.dim(k);
        let d_out = cx.diff(k).unwrap_or(&empty);
        let (r_out, _) = rank_of(k, d_out);
        let d_in = cx.diff(k - 1);
        let (r_in, mut torsion) = match d_in {
            Some(m) => rank_of(k - 1, m),
            None => (0, Vec::new()),
        };
        if coeffs != Coeffs::Z {
            // over F_p the integral torsion contributes to the mod-p ranks on
            // both sides; rank-nullity handles it directly
            torsion.clear();
        }
        let rank = dim - r_out - r_in;
        groups.insert(k, Group { rank, torsion });
    }
    HomologySummary { coeffs, groups }
}

// ---------------------------------------------------------------------------
// canonical cycles
// ---------------------------------------------------------------------------

/// A canonical cycle: the checkerboard-labeled Seifert-state chain for one
/// orientation, expanded in the 1X basis.
#[derive(Debug, Clone)]
pub struct CanonicalClass {
    /// component reversal mask
    pub orientation: u32,
    pub state: State,
    pub gr_h: i32,
    /// chain-level quantum grading: minimum over the support
    pub gr_q_chain: i32,
    /// coefficients on 1X generators (state, labels) -> coeff
    pub chain: BTreeMap<(u32, u32), i64>,
}

impl CanonicalClass {
    /// Coordinates in the degree `gr_h` part of `cx`.
    pub fn vector(&self, cx: &ChainComplex) -> BTreeMap<usize, i64> {
        self.chain
            .iter()
            .map(|(&(s, l), &c)| (cx.index_of(self.gr_h, State::new(s, self.state.len), l), c))
            .collect()
    }
}

/// All 2^|D| canonical cycles of the diagram, one per orientation, for the
/// Bar-Natan algebra. Labels expand as a = X and b = X - 1.
pub fn canonical_cycles(d: &LinkDiagram) -> Result<Vec<CanonicalClass>, HomologyError> {
    let comps = d.component_count();
    let shift = d.n_minus() as i32;
    let mut out = Vec::new();
    for mask in 0..(1u64 << comps) as u32 {
        let ab = d.ab_labeling(mask)?;
        let res = d.resolve(ab.state)?;
        let r = res.r();
        // expand the product of per-circle labels: a = X (bit 0), b = X - 1
        let mut chain: BTreeMap<(u32, u32), i64> = BTreeMap::new();
        let b_circles: Vec<usize> =
            (0..r).filter(|&i| ab.labels[i] == AbLabel::B).collect();
        let mut sub: u64 = 0;
        loop {
            // sub ranges over subsets of b_circles receiving the unit label
            let mut labels = 0u32;
            let mut sign = 1i64;
            for (bi, &ci) in b_circles.iter().enumerate() {
                if sub >> bi & 1 == 1 {
                    labels |= 1 << ci;
                    sign = -sign;
                }
            }
            *chain.entry((ab.state.bits, labels)).or_insert(0) += sign;
            sub += 1;
            if sub >= (1u64 << b_circles.len()) {
                break;
            }
        }
        let gr_h = ab.state.weight() as i32 - shift;
        let gr_q_chain = chain
            .keys()
            .map(|&(s, l)| {
                crate::complex::quantum_grading(d, State::new(s, d.n()), l).expect("grading")
            })
            .min()
            .unwrap();
        out.push(CanonicalClass { orientation: mask, state: ab.state, gr_h, gr_q_chain, chain });
    }
    Ok(out)
}

/// Homological grading predicted by linking numbers: 2 Σ lk(D_i, D_j) over
/// i reversed, j not reversed.
pub fn canonical_grading_from_linking(d: &LinkDiagram, mask: u32) -> i64 {
    let comps = d.component_count();
    let mut total = 0i64;
    for i in 0..comps {
        for j in 0..comps {
            if (mask >> i) & 1 == 1 && (mask >> j) & 1 == 0 {
                total += d.linking_number(i, j).unwrap();
            }
        }
    }
    2 * total
}

pub fn apply_differential(cx: &ChainComplex, deg: i32, v: &BTreeMap<usize, i64>) -> BTreeMap<usize, i64> {
    match cx.diff(deg) {
        Some(m) => m.mul_vec(v),
        None => BTreeMap::new(),
    }
}

// ---------------------------------------------------------------------------
// quantum filtration
// ---------------------------------------------------------------------------

/// Maximal j such that the class of `z` (a cycle in degree `deg`) lies in the
/// image of H(F^j C) -> H(C), where F^j C is spanned by generators of
/// quantum grading >= j.
pub fn quantum_homology_grading(
    cx: &ChainComplex,
    deg: i32,
    z: &BTreeMap<usize, i64>,
    field: Field,
) -> Result<i32, HomologyError> {
    let dz = apply_differential(cx, deg, z);
    if !dz.is_empty() {
        return Err(HomologyError::NotACycle);
    }
    let grqs: Vec<i32> = cx.gens[&deg].iter().map(|g| g.grq.expect("quantum grading")).collect();
    let mut levels: Vec<i32> = grqs.clone();
    levels.sort_unstable();
    levels.dedup();
    let mut best = None;
    for &j in &levels {
        if filtration_membership(cx, deg, z, j, field) {
            best = Some(j);
        } else {
            break;
        }
    }
    // levels ascend; membership is monotone decreasing in j, so scan upward
    // and keep the last level that still contains the class
    best.ok_or(HomologyError::NotACycle)
}

/// Is [z] in the image of H(F^j C) -> H(C)? Solve z = w + d(p) with w a
/// cycle supported in quantum grading >= j.
fn filtration_membership(
    cx: &ChainComplex,
    deg: i32,
    z: &BTreeMap<usize, i64>,
    j: i32,
    field: Field,
) -> bool {
    let dim = cx.dim(deg);
    // columns: a basis of cycles in F^j (kernel of d restricted to the
    // subspace spanned by generators with grq >= j), plus the image of d
    let keep: Vec<usize> = (0..dim)
        .filter(|&i| cx.gens[&deg][i].grq.expect("quantum grading") >= j)
        .collect();
    let empty = SpMat::new(0, dim);
    let d_out = cx.diff(deg).unwrap_or(&empty);
    let sub = d_out.submatrix(&(0..d_out.rows).collect::<Vec<_>>(), &keep);
    // kernel basis of `sub` over the field, embedded back into C^deg
    let kernel = field_kernel(&sub, field);
    let d_in = cx.diff(deg - 1);
    let in_cols = d_in.map_or(0, |m| m.cols);
    let mut a = FieldMat::zero(dim, kernel.len() + in_cols, field);
    for (col, kv) in kernel.iter().enumerate() {
        for (krow, val) in kv {
            set_field(&mut a, keep[*krow], col, val, field);
        }
    }
    if let Some(m) = d_in {
        for (r, c, v) in m.iter() {
            a.set_int(r, kernel.len() + c, v);
        }
    }
    let mut b = FieldMat::zero(dim, 1, field);
    for (&i, &v) in z {
        b.set_int(i, 0, v);
    }
    a.solves(&b)
}

#[derive(Debug, Clone)]
enum FieldVal {
    Q(num_rational::BigRational),
    P(u64),
}

fn set_field(a: &mut FieldMat, r: usize, c: usize, v: &FieldVal, _field: Field) {
    match v {
        FieldVal::Q(x) => {
            // kernel vectors over Q are produced with integer entries
            use num_traits::ToPrimitive;
            let num = x.numer().to_i64().expect("kernel entry");
            let den = x.denom().to_i64().expect("kernel entry");
            assert_eq!(den.abs(), 1);
            a.set_int(r, c, num * den.signum());
        }
        FieldVal::P(x) => a.set_int(r, c, *x as i64),
    }
}

/// Kernel basis of a over the field, as sparse columns.
fn field_kernel(a: &SpMat, field: Field) -> Vec<Vec<(usize, FieldVal)>> {
    // row reduce [A] and read off free columns; to keep entries integral over
    // Q, clear denominators per vector
    let mut m = FieldMat::from_sp(a, field);
    let pivots = m.row_reduce();
    let pivot_set: std::collections::BTreeSet<usize> = pivots.iter().copied().collect();
    let mut out = Vec::new();
    for free in 0..a.cols {
        if pivot_set.contains(&free) {
            continue;
        }
        // x_free = 1, pivots solve to -entry
        let mut v: Vec<(usize, FieldVal)> = Vec::new();
        match field {
            Field::Q => {
                use num_traits::One;
                let mut entries: Vec<(usize, num_rational::BigRational)> = Vec::new();
                for (row, &pc) in pivots.iter().enumerate() {
                    let e = m.q_entry(row, free);
                    if !num_traits::Zero::is_zero(&e) {
                        entries.push((pc, -e));
                    }
                }
                entries.push((free, num_rational::BigRational::one()));
                // clear denominators
                let mut denlcm = BigInt::from(1);
                for (_, e) in &entries {
                    denlcm = num_integer::lcm(denlcm.clone(), e.denom().clone());
                }
                for (i, e) in entries {
                    let scaled = e * num_rational::BigRational::from(denlcm.clone());
                    v.push((i, FieldVal::Q(scaled)));
                }
            }
            Field::Fp(p) => {
                for (row, &pc) in pivots.iter().enumerate() {
                    let e = m.p_entry(row, free);
                    if !e.is_multiple_of(p) {
                        v.push((pc, FieldVal::P((p - e % p) % p)));
                    }
                }
                v.push((free, FieldVal::P(1)));
            }
        }
        out.push(v);
    }
    out
}

/// s_min and s_max of the filtration on total homology over the field.
pub fn s_min_max(cx: &ChainComplex, field: Field) -> (i32, i32) {
    let mut smin = None;
    let mut smax = None;
    for &deg in &cx.degrees() {
        let dim = cx.dim(deg);
        if dim == 0 {
            continue;
        }
        let empty_out = SpMat::new(0, dim);
        let d_out = cx.diff(deg).cloned().unwrap_or(empty_out);
        let d_in = cx.diff(deg - 1);
        let h_dim = dim
            - field_rank(&d_out, field)
            - d_in.map_or(0, |m| field_rank(m, field));
        if h_dim == 0 {
            continue;
        }
        let mut levels: Vec<i32> =
            cx.gens[&deg].iter().map(|g| g.grq.expect("quantum grading")).collect();
        levels.sort_unstable();
        levels.dedup();
        // descending scan: largest j with a nonzero image, largest j with
        // full image (F^(min level) is the whole complex, so both exist)
        for &j in levels.iter().rev() {
            if filtration_image_dim(cx, deg, j, field) > 0 {
                smax = Some(smax.map_or(j, |s: i32| s.max(j)));
                break;
            }
        }
        for &j in levels.iter().rev() {
            if filtration_image_dim(cx, deg, j, field) == h_dim {
                smin = Some(smin.map_or(j, |s: i32| s.min(j)));
                break;
            }
        }
    }
    (smin.expect("nontrivial homology"), smax.expect("nontrivial homology"))
}

fn field_rank(m: &SpMat, field: Field) -> usize {
    match field {
        Field::Q => crate::matrix::rank_over_z(m),
        Field::Fp(p) => rank_mod_p(m, p),
    }
}

/// dim of Im(H(F^j C) -> H(C)) in degree `deg`.
fn filtration_image_dim(cx: &ChainComplex, deg: i32, j: i32, field: Field) -> usize {
    let dim = cx.dim(deg);
    let keep: Vec<usize> = (0..dim)
        .filter(|&i| cx.gens[&deg][i].grq.expect("quantum grading") >= j)
        .collect();
    let empty = SpMat::new(0, dim);
    let d_out = cx.diff(deg).unwrap_or(&empty);
    let sub = d_out.submatrix(&(0..d_out.rows).collect::<Vec<_>>(), &keep);
    let z_dim = keep.len() - field_rank(&sub, field);
    // dim (Z ∩ F^j + B) - dim B = z_dim - dim(Z∩F^j ∩ B)
    // dim(Z∩F^j ∩ B) = z_dim + rank(d_in) - dim(Z∩F^j + B)
    let d_in = cx.diff(deg - 1);
    let b_rank = d_in.map_or(0, |m| field_rank(m, field));
    if z_dim == 0 {
        return 0;
    }
    // build [kernel basis | d_in] and compute its rank
    let kernel = field_kernel(&sub, field);
    debug_assert_eq!(kernel.len(), z_dim);
    let in_cols = d_in.map_or(0, |m| m.cols);
    let mut a = FieldMat::zero(dim, kernel.len() + in_cols, field);
    for (col, kv) in kernel.iter().enumerate() {
        for (krow, val) in kv {
            set_field(&mut a, keep[*krow], col, val, field);
        }
    }
    if let Some(m) = d_in {
        for (r, c, v) in m.iter() {
            a.set_int(r, kernel.len() + c, v);
        }
    }
    let sum_dim = a.rank();
    let inter = z_dim + b_rank - sum_dim;
    z_dim - inter
}

/// The s-invariant of a knot over the field: gr_q[alpha] + 1, cross-checked
/// against (s_min + s_max) / 2.
pub fn s_invariant(d: &LinkDiagram, coeffs: Coeffs) -> Result<i32, HomologyError> {
    if d.component_count() != 1 {
        return Err(DiagramError::NotAKnot(d.component_count()).into());
    }
    let field = coeffs.field().expect("s-invariant needs a field");
    let s = standard_sign(d.n());
    let cx = khovanov_complex(d, &Frobenius::bar_natan_1x(), &s)?;
    let alpha = &canonical_cycles(d)?[0];
    let v = alpha.vector(&cx);
    let grq = quantum_homology_grading(&cx, alpha.gr_h, &v, field)?;
    let (smin, smax) = s_min_max(&cx, field);
    debug_assert_eq!(smax - smin, 2);
    debug_assert_eq!(grq, smin);
    Ok(grq + 1)
}

// ---------------------------------------------------------------------------
// mirror duality
// ---------------------------------------------------------------------------

/// The chain isomorphism from the Bar-Natan complex of the mirror onto the
/// dual of the Bar-Natan complex of the diagram.
#[derive(Debug)]
pub struct MirrorDuality {
    pub mirror: LinkDiagram,
    pub mirror_complex: ChainComplex,
    pub base_complex: ChainComplex,
    /// per degree k of the mirror complex: matrix into the dual generators
    /// (indexed by the base complex generators of degree -k)
    pub phi: BTreeMap<i32, SpMat>,
    /// per-state signs epsilon(u), solved from the chain map condition
    pub state_signs: BTreeMap<u32, i64>,
}

/// Build C(m(D)), C(D) and the isomorphism onto the dual complex given by
/// (u, x) -> eps(u) (complement(u), phi(x))* with phi(1) = -X, phi(X) = 1.
pub fn mirror_dual(d: &LinkDiagram) -> Result<MirrorDuality, HomologyError> {
    let m = d.mirror();
    let n = d.n();
    let frob = Frobenius::bar_natan_1x();
    let mirror_complex = khovanov_complex(&m, &frob, &standard_sign(n))?;
    let base_complex = khovanov_complex(d, &frob, &standard_sign(n))?;

    // solve the per-state signs greedily from the chain map condition:
    // for every differential entry of the mirror complex between states
    // (u, u + e_i) there is a matching dual entry, fixing eps(u+e_i)/eps(u)
    let mut state_signs: BTreeMap<u32, i64> = BTreeMap::new();
    state_signs.insert(0, 1);
    let mut frontier = vec![0u32];
    // precompute per-state label maps: circle sets of m(D)(u) and D(~u) agree
    let shift_m = m.n_minus() as i32;
    while let Some(u) = frontier.pop() {
        for i in 0..n {
            if u >> i & 1 == 1 {
                continue;
            }
            let v = u | (1 << i);
            if state_signs.contains_key(&v) {
                continue;
            }
            let ratio = dual_edge_ratio(&m, &mirror_complex, &base_complex, u, v, i, shift_m)?;
            state_signs.insert(v, ratio * state_signs[&u]);
            frontier.push(v);
        }
    }
    if n == 0 {
        state_signs.insert(0, 1);
    }

    let mut phi = BTreeMap::new();
    for (&deg, gens) in &mirror_complex.gens {
        let dual_deg = -deg;
        let rows = base_complex.dim(dual_deg);
        let mut mat = SpMat::new(rows, gens.len());
        for (col, g) in gens.iter().enumerate() {
            let (target_labels, sgn) = phi_labels(&m, g.state, g.labels)?;
            let comp = g.state.complement();
            let row = base_complex.index_of(dual_deg, comp, target_labels);
            mat.set(row, col, state_signs[&g.state.bits] * sgn);
        }
        phi.insert(deg, mat);
    }
    let out = MirrorDuality { mirror: m, mirror_complex, base_complex, phi, state_signs };
    if !out.verify() {
        return Err(HomologyError::DualitySigns);
    }
    Ok(out)
}

/// phi on labels: each circle labeled 1 becomes X with a -1, each X becomes 1.
fn phi_labels(m: &LinkDiagram, state: State, labels: u32) -> Result<(u32, i64), HomologyError> {
    let r = m.resolve(state)?.r();
    let mask = if r == 32 { u32::MAX } else { (1u32 << r) - 1 };
    let flipped = !labels & mask;
    let ones = labels.count_ones();
    Ok((flipped, if ones.is_multiple_of(2) { 1 } else { -1 }))
}

fn dual_edge_ratio(
    m: &LinkDiagram,
    mcx: &ChainComplex,
    bcx: &ChainComplex,
    u: u32,
    v: u32,
    _i: usize,
    shift_m: i32,
) -> Result<i64, HomologyError> {
    let n = m.n();
    let su = State::new(u, n);
    let sv = State::new(v, n);
    let deg_u = su.weight() as i32 - shift_m;
    // find a nonzero differential entry from (u, labels) to (v, labels')
    let du = mcx.diff(deg_u).expect("differential");
    let ru = m.resolve(su)?.r();
    for labels in 0..(1u64 << ru) as u32 {
        let col = mcx.index_of(deg_u, su, labels);
        for (row, c2, coeff) in du.iter() {
            if c2 != col || coeff == 0 {
                continue;
            }
            let tgt = &mcx.gens[&(deg_u + 1)][row];
            if tgt.state != sv {
                continue;
            }
            // chain map condition: phi(d_m x) = d_base^T (phi x)
            // entry-wise: eps(v) * sgn(phi labels_v) * coeff =
            //   eps(u) * sgn(phi labels_u) * <d_base phi(v-gen), phi(u-gen)>
            let (lu, sgn_u) = phi_labels(m, su, labels)?;
            let (lv, sgn_v) = phi_labels(m, sv, tgt.labels)?;
            let dual_deg_v = -(deg_u + 1);
            let drow = bcx.index_of(-deg_u, su.complement(), lu);
            let dcol = bcx.index_of(dual_deg_v, sv.complement(), lv);
            let dual_coeff = bcx.diff(dual_deg_v).map_or(0, |mm| mm.get(drow, dcol));
            if dual_coeff == 0 {
                continue;
            }
            // eps(v) * sgn_v * coeff = eps(u) * sgn_u * dual_coeff
            let lhs = sgn_v * coeff;
            let rhs = sgn_u * dual_coeff;
            if lhs.abs() != rhs.abs() {
                continue;
            }
            return Ok(rhs / lhs);
        }
    }
    Err(HomologyError::DualitySigns)
}

impl MirrorDuality {
    /// Exact chain map check: phi . d_m = d_dual . phi, with the dual
    /// differential the transpose of the base differential.
    pub fn verify(&self) -> bool {
        for (&deg, f) in &self.phi {
            let Some(dm) = self.mirror_complex.diff(deg) else { continue };
            if self.mirror_complex.dim(deg + 1) == 0 {
                continue;
            }
            let f_next = &self.phi[&(deg + 1)];
            // dual differential from dual-degree -deg to -deg-1 ... as maps of
            // the dual tower: (delta* g)(x) = g(d x), i.e. transpose of the
            // base differential d_(-deg-1)
            let lhs = f_next.mul(dm);
            let rhs = match self.base_complex.diff(-(deg + 1)) {
                Some(db) => db.transpose().mul(f),
                None => SpMat::new(self.base_complex.dim(-(deg + 1)), f.cols),
            };
            if lhs != rhs {
                return false;
            }
        }
        // invertibility: a signed permutation per degree
        for f in self.phi.values() {
            if f.cols != f.rows || f.nnz() != f.rows {
                return false;
            }
            let rows: std::collections::BTreeSet<usize> = f.iter().map(|(r, _, _)| r).collect();
            if rows.len() != f.rows || f.iter().any(|(_, _, v)| v.abs() != 1) {
                return false;
            }
        }
        true
    }

    /// Pairing of a mirror-complex chain with a base-complex chain.
    pub fn pairing(
        &self,
        deg: i32,
        zm: &BTreeMap<usize, i64>,
        zd: &BTreeMap<usize, i64>,
    ) -> i64 {
        let f = &self.phi[&deg];
        let fz = f.mul_vec(zm);
        fz.iter().map(|(&i, &a)| a * zd.get(&i).copied().unwrap_or(0)).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complex::Basis;
    use crate::diagram::parse_pd;

    const TREFOIL_R: &str = "X[1,4,2,5] X[3,6,4,1] X[5,2,6,3]";
    const HOPF_POS: &str = "X[1,4,2,3] X[3,2,4,1]";

    fn bn_complex(code: &str) -> (LinkDiagram, ChainComplex) {
        let d = parse_pd(code).unwrap();
        let s = standard_sign(d.n());
        let cx = khovanov_complex(&d, &Frobenius::bar_natan_1x(), &s).unwrap();
        (d, cx)
    }

    #[test]
    fn trefoil_bn_homology_rank_2() {
        let (_, cx) = bn_complex(TREFOIL_R);
        let h = homology(&cx, Coeffs::Z);
        assert_eq!(h.total_rank(), 2);
        assert!(h.is_torsion_free());
        assert_eq!(h.rank_gradings(), vec![0, 0]);
    }

    #[test]
    fn hopf_bn_homology() {
        let (_, cx) = bn_complex(HOPF_POS);
        let h = homology(&cx, Coeffs::Z);
        assert_eq!(h.total_rank(), 4);
        assert!(h.is_torsion_free());
        assert_eq!(h.rank_gradings(), vec![0, 0, 2, 2]);
    }

    #[test]
    fn khovanov_trefoil_homology() {
        // independent sanity: Khovanov homology of the right trefoil has
        // total rank 4 with Z/2 torsion in degree 3
        let d = parse_pd(TREFOIL_R).unwrap();
        let s = standard_sign(3);
        let cx = khovanov_complex(&d, &crate::complex::frobenius(0, 0, Basis::OneX).unwrap(), &s).unwrap();
        let h = homology(&cx, Coeffs::Z);
        assert_eq!(h.total_rank(), 4);
        assert_eq!(h.groups[&0].rank, 2);
        assert_eq!(h.groups[&2].rank, 1);
        assert_eq!(h.groups[&3].rank, 1);
        assert_eq!(h.groups[&3].torsion, vec![BigInt::from(2)]);
    }

    #[test]
    fn euler_characteristic_consistency() {
        let (_, cx) = bn_complex(TREFOIL_R);
        let h = homology(&cx, Coeffs::Z);
        assert_eq!(h.euler(), cx.euler());
    }

    #[test]
    fn canonical_cycles_are_cycles() {
        for code in [TREFOIL_R, HOPF_POS, "O", "X[1,1,2,2]"] {
            let (d, cx) = bn_complex(code);
            for c in canonical_cycles(&d).unwrap() {
                let v = c.vector(&cx);
                assert!(apply_differential(&cx, c.gr_h, &v).is_empty(), "{code}");
                assert_eq!(c.gr_h as i64, canonical_grading_from_linking(&d, c.orientation), "{code}");
            }
        }
    }

    #[test]
    fn canonical_counts_and_gradings() {
        let d = parse_pd(TREFOIL_R).unwrap();
        let cs = canonical_cycles(&d).unwrap();
        assert_eq!(cs.len(), 2);
        assert!(cs.iter().all(|c| c.gr_h == 0));
        let h = parse_pd(HOPF_POS).unwrap();
        let cs = canonical_cycles(&h).unwrap();
        assert_eq!(cs.len(), 4);
        let mut grs: Vec<i32> = cs.iter().map(|c| c.gr_h).collect();
        grs.sort_unstable();
        assert_eq!(grs, vec![0, 0, 2, 2]);
        let e = parse_pd("").unwrap();
        assert_eq!(canonical_cycles(&e).unwrap().len(), 1);
    }

    #[test]
    fn unknot_filtration_gradings() {
        let (_, cx) = bn_complex("O");
        // class [X]: the X generator (labels = 0)
        let x_idx = cx.index_of(0, State::zero(0), 0);
        let one_idx = cx.index_of(0, State::zero(0), 1);
        let zx: BTreeMap<usize, i64> = [(x_idx, 1)].into();
        let zo: BTreeMap<usize, i64> = [(one_idx, 1)].into();
        assert_eq!(quantum_homology_grading(&cx, 0, &zx, Field::Q).unwrap(), -1);
        assert_eq!(quantum_homology_grading(&cx, 0, &zo, Field::Q).unwrap(), 1);
    }

    #[test]
    fn s_invariants_small() {
        let unknot = parse_pd("O").unwrap();
        assert_eq!(s_invariant(&unknot, Coeffs::Q).unwrap(), 0);
        let trefoil = parse_pd(TREFOIL_R).unwrap();
        assert_eq!(s_invariant(&trefoil, Coeffs::Q).unwrap(), 2);
        assert_eq!(s_invariant(&trefoil, Coeffs::F2).unwrap(), 2);
        let left = trefoil.mirror();
        assert_eq!(s_invariant(&left, Coeffs::Q).unwrap(), -2);
        assert!(s_invariant(&parse_pd(HOPF_POS).unwrap(), Coeffs::Q).is_err());
    }

    #[test]
    fn torus_knot_s_values() {
        let t25 = parse_pd("X[1,6,2,7] X[7,2,8,3] X[3,8,4,9] X[9,4,10,5] X[5,10,6,1]").unwrap();
        assert_eq!(t25.n_plus(), 5);
        let t0 = std::time::Instant::now();
        assert_eq!(s_invariant(&t25, Coeffs::Q).unwrap(), 4);
        assert_eq!(s_invariant(&t25, Coeffs::F2).unwrap(), 4);
        println!("t25 in {:?}", t0.elapsed());
        let t34 = parse_pd("X[1,12,2,13] X[2,7,3,8] X[13,8,14,9] X[14,3,15,4] X[9,4,10,5] X[10,15,11,16] X[5,16,6,1] X[6,11,7,12]").unwrap();
        assert_eq!(t34.n_plus(), 8);
        assert_eq!(t34.component_count(), 1);
        let t0 = std::time::Instant::now();
        assert_eq!(s_invariant(&t34, Coeffs::Q).unwrap(), 6);
        println!("t34 Q in {:?}", t0.elapsed());
        let t0 = std::time::Instant::now();
        assert_eq!(s_invariant(&t34, Coeffs::F2).unwrap(), 6);
        println!("t34 F2 in {:?}", t0.elapsed());
        let t0 = std::time::Instant::now();
        let h = homology(&bn(&t34), Coeffs::Z);
        assert_eq!(h.total_rank(), 2);
        assert!(h.is_torsion_free());
        println!("t34 Z homology in {:?}", t0.elapsed());
    }

    fn bn(d: &LinkDiagram) -> ChainComplex {
        khovanov_complex(d, &Frobenius::bar_natan_1x(), &standard_sign(d.n())).unwrap()
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(10))]
        #[test]
        fn structure_theorem_random_braids(
            word in proptest::collection::vec(
                proptest::sample::select(vec![1i32, -1, 2, -2]), 1..5),
        ) {
            let code = crate::diagram::braid_closure_pd(3, &word);
            let d = parse_pd(&code).unwrap();
            let (_, cx) = {
                let s = standard_sign(d.n());
                let cx = khovanov_complex(&d, &Frobenius::bar_natan_1x(), &s).unwrap();
                (d.clone(), cx)
            };
            let h = homology(&cx, Coeffs::Z);
            proptest::prop_assert_eq!(h.total_rank(), 1usize << d.component_count());
            proptest::prop_assert!(h.is_torsion_free());
            let mut expected: Vec<i32> = (0..(1u32 << d.component_count()))
                .map(|m| canonical_grading_from_linking(&d, m) as i32)
                .collect();
            expected.sort_unstable();
            proptest::prop_assert_eq!(h.rank_gradings(), expected);
        }
    }

    #[test]
    fn field_homology_ranks_match_structure() {
        // c = 1 stays invertible over F2 and F3, so the field ranks agree
        // with the free rank over Z
        for code in [TREFOIL_R, HOPF_POS, "X[1,1,2,2]"] {
            let (d, cx) = bn_complex(code);
            let expect = 1usize << d.component_count();
            for coeffs in [Coeffs::Q, Coeffs::F2, Coeffs::F3] {
                assert_eq!(homology(&cx, coeffs).total_rank(), expect, "{code} {coeffs:?}");
            }
        }
    }

    #[test]
    fn alpha_and_beta_share_the_filtration_grading() {
        for code in [TREFOIL_R, "X[1,2,2,1]"] {
            let (d, cx) = bn_complex(code);
            let cycles = canonical_cycles(&d).unwrap();
            for field in [Field::Q, Field::Fp(2), Field::Fp(3)] {
                let grades: Vec<i32> = cycles
                    .iter()
                    .map(|c| quantum_homology_grading(&cx, c.gr_h, &c.vector(&cx), field).unwrap())
                    .collect();
                assert_eq!(grades[0], grades[1], "{code} {field:?}");
            }
        }
    }

    #[test]
    fn non_cycle_is_rejected() {
        let (_, cx) = bn_complex(TREFOIL_R);
        // a single degree-0 generator is not a cycle for the trefoil
        let z: BTreeMap<usize, i64> = [(0usize, 1i64)].into();
        assert!(matches!(
            quantum_homology_grading(&cx, 0, &z, Field::Q),
            Err(HomologyError::NotACycle)
        ));
    }

    #[test]
    fn mirror_duality_small() {
        for code in ["O", TREFOIL_R, HOPF_POS] {
            let d = parse_pd(code).unwrap();
            let md = mirror_dual(&d).unwrap();
            assert!(md.verify(), "{code}");
            // gradings of the mirror homology are negated
            let hm = homology(&md.mirror_complex, Coeffs::Z);
            let hb = homology(&md.base_complex, Coeffs::Z);
            let mut neg: Vec<i32> = hb.rank_gradings().iter().map(|&g| -g).collect();
            neg.sort_unstable();
            assert_eq!(hm.rank_gradings(), neg, "{code}");
        }
    }
}
