//! Resolution configurations: circles with marked points plus ordered
//! surgery arcs, labeled configurations, the poset generated by a basic
//! relation, and its cube decomposition.
//!
//! Circles hold their arc-endpoints in cyclic order (counterclockwise for
//! diagram-derived configurations) together with the boundary segments
//! between consecutive endpoints. Surgery re-glues along an arc as a saddle;
//! segments are never subdivided, only joined, so the minimal segment label
//! on a circle is a stable identity that does not depend on the order in
//! which arcs are surgered.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::complex::Frobenius;
use crate::diagram::{DiagramError, LinkDiagram, State};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ConfigError {
    #[error("arc {0} is not part of the configuration")]
    InvalidArc(usize),
    #[error(transparent)]
    Diagram(#[from] DiagramError),
}

/// One endpoint of an arc: (arc index, end 0 or 1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PointRef {
    pub arc: usize,
    pub end: u8,
}

impl PointRef {
    pub fn new(arc: usize, end: u8) -> Self {
        PointRef { arc, end }
    }
}

/// A circle: endpoints in cyclic order, `segs[i]` the boundary segment
/// following `points[i]`. A circle with no endpoints keeps its segments as
/// an unordered set (their cyclic order no longer matters).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CircleData {
    pub points: Vec<PointRef>,
    pub segs: Vec<usize>,
}

impl CircleData {
    /// Stable identity: the minimal segment label on the circle.
    pub fn key(&self) -> usize {
        *self.segs.iter().min().expect("circle without segments")
    }

    /// Rotate so the minimal segment comes last; cyclically equal circles
    /// then compare equal.
    fn normalize(&mut self) {
        if self.points.is_empty() {
            self.segs.sort_unstable();
            return;
        }
        let n = self.points.len();
        let min_pos = (0..n).min_by_key(|&i| self.segs[i]).unwrap();
        self.points.rotate_left((min_pos + 1) % n);
        self.segs.rotate_left((min_pos + 1) % n);
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Configuration {
    /// circle key (minimal segment) -> circle
    pub circles: BTreeMap<usize, CircleData>,
    /// live arcs, each with ends 0 and 1 on some circle
    pub arcs: BTreeSet<usize>,
    /// connected-component tag per circle key
    pub component: BTreeMap<usize, usize>,
}

/// (points after the cut, segments around them); `segs[0]` leads away from
/// the cut point and `segs[len]` returns to it.
struct Cut {
    pts: Vec<PointRef>,
    segs: Vec<usize>,
}

fn cut(c: &CircleData, p: PointRef) -> Cut {
    let n = c.points.len();
    let i = c.points.iter().position(|&q| q == p).expect("point on circle");
    let mut pts = Vec::with_capacity(n - 1);
    let mut segs = Vec::with_capacity(n);
    segs.push(c.segs[i]);
    for m in 1..n {
        pts.push(c.points[(i + m) % n]);
        segs.push(c.segs[(i + m) % n]);
    }
    Cut { pts, segs }
}

fn assemble_merge(c0: Cut, c1: Cut) -> CircleData {
    let (k0, k1) = (c0.pts.len(), c1.pts.len());
    if k0 == 0 && k1 == 0 {
        let s = *c0.segs.iter().chain(c1.segs.iter()).min().unwrap();
        return CircleData { points: vec![], segs: vec![s] };
    }
    if k0 == 0 {
        return assemble_merge(c1, c0);
    }
    let mut points = Vec::with_capacity(k0 + k1);
    let mut segs = Vec::with_capacity(k0 + k1);
    points.extend_from_slice(&c0.pts);
    for m in 1..k0 {
        segs.push(c0.segs[m]);
    }
    if k1 == 0 {
        // the lone segment of c1 splices between the two cut gaps of c0
        segs.push(c0.segs[k0].min(c1.segs[0]).min(c0.segs[0]));
    } else {
        segs.push(c0.segs[k0].min(c1.segs[0]));
        points.extend_from_slice(&c1.pts);
        for m in 1..k1 {
            segs.push(c1.segs[m]);
        }
        segs.push(c1.segs[k1].min(c0.segs[0]));
    }
    CircleData { points, segs }
}

/// One side of a split: points strictly between the cut indices `i0 -> i1`
/// in cyclic order, with the two bounding gaps joined.
fn assemble_split_side(c: &CircleData, i0: usize, i1: usize) -> CircleData {
    let n = c.points.len();
    let mut points = Vec::new();
    let mut segs = Vec::new();
    let mut k = (i0 + 1) % n;
    while k != i1 {
        points.push(c.points[k]);
        segs.push(c.segs[k]);
        k = (k + 1) % n;
    }
    if points.is_empty() {
        return CircleData { points, segs: vec![c.segs[i0]] };
    }
    // the last gap returns to the cut; join it with the gap leaving it
    let last = segs.last_mut().unwrap();
    *last = (*last).min(c.segs[i0]);
    CircleData { points, segs }
}

impl Configuration {
    /// Build from explicit circles given as cyclic endpoint lists; boundary
    /// segments are numbered consecutively in input order.
    pub fn from_circles(circle_points: Vec<Vec<PointRef>>) -> Configuration {
        let mut arcs = BTreeSet::new();
        let mut circles = BTreeMap::new();
        let mut next_seg = 0usize;
        for pts in circle_points {
            for p in &pts {
                arcs.insert(p.arc);
            }
            let k = pts.len().max(1);
            let segs: Vec<usize> = (next_seg..next_seg + k).collect();
            next_seg += k;
            let mut c = CircleData { points: pts, segs };
            c.normalize();
            circles.insert(c.key(), c);
        }
        let mut cfg = Configuration { circles, arcs, component: BTreeMap::new() };
        cfg.component = cfg.connected_components();
        cfg
    }

    pub fn index(&self) -> usize {
        self.arcs.len()
    }

    pub fn r(&self) -> usize {
        self.circles.len()
    }

    /// Circle keys in canonical (minimal segment) order.
    pub fn circle_order(&self) -> Vec<usize> {
        self.circles.keys().copied().collect()
    }

    pub fn circle_of(&self, p: PointRef) -> Option<usize> {
        self.circles.iter().find(|(_, c)| c.points.contains(&p)).map(|(&id, _)| id)
    }

    /// components of the circles-and-arcs graph, as circle key -> component id
    pub fn connected_components(&self) -> BTreeMap<usize, usize> {
        let ids: Vec<usize> = self.circles.keys().copied().collect();
        let mut parent: BTreeMap<usize, usize> = ids.iter().map(|&i| (i, i)).collect();
        fn find(parent: &mut BTreeMap<usize, usize>, x: usize) -> usize {
            let p = parent[&x];
            if p == x {
                x
            } else {
                let r = find(parent, p);
                parent.insert(x, r);
                r
            }
        }
        for &a in &self.arcs {
            let c0 = self.circle_of(PointRef::new(a, 0)).unwrap();
            let c1 = self.circle_of(PointRef::new(a, 1)).unwrap();
            let (r0, r1) = (find(&mut parent, c0), find(&mut parent, c1));
            if r0 != r1 {
                parent.insert(r0.max(r1), r0.min(r1));
            }
        }
        ids.iter().map(|&i| (i, find(&mut parent, i))).collect()
    }

    /// A leaf: a circle meeting exactly one arc endpoint.
    pub fn is_leaf(&self, circle: usize) -> bool {
        self.circles.get(&circle).is_some_and(|c| c.points.len() == 1)
    }

    /// A coleaf: an arc joining two points of a single circle that are
    /// adjacent in the cyclic order.
    pub fn is_coleaf(&self, arc: usize) -> bool {
        let (p0, p1) = (PointRef::new(arc, 0), PointRef::new(arc, 1));
        let Some(k0) = self.circle_of(p0) else { return false };
        if self.circle_of(p1) != Some(k0) {
            return false;
        }
        let pts = &self.circles[&k0].points;
        let i0 = pts.iter().position(|&p| p == p0).unwrap();
        let i1 = pts.iter().position(|&p| p == p1).unwrap();
        let n = pts.len();
        (i0 + 1) % n == i1 || (i1 + 1) % n == i0
    }

    /// Saddle re-gluing along one arc; the arc is consumed. Returns the
    /// transition in circle keys: (merged?, [in0, in1, out]) for a merge or
    /// (false, [in, out0, out1]) for a split.
    pub fn saddle(&mut self, arc: usize) -> Result<(bool, [usize; 3]), ConfigError> {
        if !self.arcs.contains(&arc) {
            return Err(ConfigError::InvalidArc(arc));
        }
        let (p0, p1) = (PointRef::new(arc, 0), PointRef::new(arc, 1));
        let k0 = self.circle_of(p0).ok_or(ConfigError::InvalidArc(arc))?;
        let k1 = self.circle_of(p1).ok_or(ConfigError::InvalidArc(arc))?;
        self.arcs.remove(&arc);
        if k0 != k1 {
            let c0 = self.circles.remove(&k0).unwrap();
            let c1 = self.circles.remove(&k1).unwrap();
            let comp = self.component[&k0];
            self.component.remove(&k0);
            self.component.remove(&k1);
            let mut merged = assemble_merge(cut(&c0, p0), cut(&c1, p1));
            merged.normalize();
            let key = merged.key();
            self.circles.insert(key, merged);
            self.component.insert(key, comp);
            Ok((true, [k0.min(k1), k0.max(k1), key]))
        } else {
            let c = self.circles.remove(&k0).unwrap();
            let comp = self.component[&k0];
            self.component.remove(&k0);
            let i0 = c.points.iter().position(|&p| p == p0).unwrap();
            let i1 = c.points.iter().position(|&p| p == p1).unwrap();
            let mut side_a = assemble_split_side(&c, i0, i1);
            let mut side_b = assemble_split_side(&c, i1, i0);
            side_a.normalize();
            side_b.normalize();
            let (ka, kb) = (side_a.key(), side_b.key());
            self.circles.insert(ka, side_a);
            self.circles.insert(kb, side_b);
            self.component.insert(ka, comp);
            self.component.insert(kb, comp);
            Ok((false, [k0, ka.min(kb), ka.max(kb)]))
        }
    }

    /// Embedded surgery along all arcs in `b`; surviving arcs keep their
    /// endpoints on the new circles. The result does not depend on the
    /// order in which the arcs are processed.
    pub fn surgery(&self, b: &BTreeSet<usize>) -> Result<Configuration, ConfigError> {
        let mut out = self.clone();
        for &a in b {
            out.saddle(a)?;
        }
        Ok(out)
    }

    /// Maximal surgery s(D).
    pub fn full_surgery(&self) -> Configuration {
        self.surgery(&self.arcs.clone()).expect("arcs are live")
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "schema": 1,
            "circles": self.circles.iter().map(|(id, c)| {
                serde_json::json!({
                    "id": id,
                    "points": c.points.iter().map(|p| vec![p.arc, p.end as usize]).collect::<Vec<_>>(),
                    "segments": c.segs,
                })
            }).collect::<Vec<_>>(),
            "arcs": self.arcs.iter().collect::<Vec<_>>(),
        })
    }
}

/// The configuration obtained by 0-resolving every crossing, one arc per
/// crossing. Circles are counterclockwise-oriented using the region depths.
pub fn associated_configuration(d: &LinkDiagram) -> Result<Configuration, ConfigError> {
    let res = d.resolve(State::zero(d.n()))?;
    let regions = d.regions(&res)?;
    let mut circle_points = Vec::new();
    for circ in &res.circles {
        let mut pts: Vec<PointRef> = circ
            .passages
            .iter()
            .map(|p| PointRef::new(p.crossing, p.strand_end()))
            .collect();
        if let Some(p) = circ.passages.first() {
            let dl = regions.depth[&regions.left_of(p)];
            let dr = regions.depth[&regions.right_of(p)];
            if dl < dr {
                pts.reverse();
            }
        }
        circle_points.push(pts);
    }
    Ok(Configuration::from_circles(circle_points))
}

// ---------------------------------------------------------------------------
// labeled configurations, basic relations, posets
// ---------------------------------------------------------------------------

/// S-labeling of a configuration: circle key -> label index.
pub type Labeling = BTreeMap<usize, u8>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledConfiguration {
    pub config: Configuration,
    pub labels: Labeling,
}

/// Decorated configuration (D; x, y): y labels D, x labels s(D).
#[derive(Debug, Clone)]
pub struct DecoratedConfiguration {
    pub config: Configuration,
    pub y: Labeling,
    pub x: Labeling,
}

/// A basic relation: allowed label moves across an index-1 surgery.
#[derive(Debug, Clone)]
pub struct BasicRelation {
    /// merge[l1][l2] = allowed labels of the merged circle
    pub merge: [[Vec<u8>; 2]; 2],
    /// split[l] = allowed label pairs of the two halves
    pub split: [Vec<(u8, u8)>; 2],
}

impl BasicRelation {
    pub fn from_frobenius(f: &Frobenius) -> BasicRelation {
        BasicRelation {
            merge: [
                [
                    f.merge[0][0].iter().map(|&(l, _)| l).collect(),
                    f.merge[0][1].iter().map(|&(l, _)| l).collect(),
                ],
                [
                    f.merge[1][0].iter().map(|&(l, _)| l).collect(),
                    f.merge[1][1].iter().map(|&(l, _)| l).collect(),
                ],
            ],
            split: [
                f.split[0].iter().map(|&(p, _)| p).collect(),
                f.split[1].iter().map(|&(p, _)| p).collect(),
            ],
        }
    }

    /// The Khovanov relation (labels 0 = X, 1 = 1).
    pub fn khovanov() -> BasicRelation {
        BasicRelation::from_frobenius(
            &crate::complex::frobenius(0, 0, crate::complex::Basis::OneX).unwrap(),
        )
    }

    /// The diagonal XY relation for the Bar-Natan algebra (0 = X, 1 = Y).
    pub fn xy() -> BasicRelation {
        BasicRelation::from_frobenius(&Frobenius::bar_natan_xy())
    }

    pub fn merge_allowed(&self, l1: u8, l2: u8, out: u8) -> bool {
        self.merge[l1 as usize][l2 as usize].contains(&out)
    }

    pub fn split_allowed(&self, l: u8, o1: u8, o2: u8) -> bool {
        self.split[l as usize].contains(&(o1, o2)) || self.split[l as usize].contains(&(o2, o1))
    }
}

/// An object of P_S(D): a surgered subset plus a labeling of its circles.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PosetObject {
    pub arcs: BTreeSet<usize>,
    pub labels: Labeling,
}

#[derive(Debug, Clone)]
pub struct Poset {
    pub objects: Vec<PosetObject>,
    /// covering relations (lower index, upper index)
    pub covers: Vec<(usize, usize)>,
}

/// All labeled configurations of all surgeries of `c`, with covering
/// relations generated by the basic relation (untouched circles keep their
/// labels across an index-1 surgery).
pub fn poset(c: &Configuration, rel: &BasicRelation) -> Result<Poset, ConfigError> {
    let arcs: Vec<usize> = c.arcs.iter().copied().collect();
    let n = arcs.len();
    let mut configs: BTreeMap<u32, Configuration> = BTreeMap::new();
    for bits in 0..(1u64 << n) as u32 {
        let b: BTreeSet<usize> =
            arcs.iter().enumerate().filter(|(i, _)| bits >> i & 1 == 1).map(|(_, &a)| a).collect();
        configs.insert(bits, c.surgery(&b)?);
    }
    let mut objects = Vec::new();
    let mut obj_index: BTreeMap<(u32, Vec<u8>), usize> = BTreeMap::new();
    for (&bits, cfg) in &configs {
        let ids = cfg.circle_order();
        for lab_bits in 0..(1u64 << ids.len()) as u32 {
            let labels: Labeling =
                ids.iter().enumerate().map(|(i, &id)| (id, (lab_bits >> i & 1) as u8)).collect();
            let key = (bits, ids.iter().map(|id| labels[id]).collect::<Vec<u8>>());
            obj_index.insert(key, objects.len());
            objects.push(PosetObject {
                arcs: arcs
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| bits >> i & 1 == 1)
                    .map(|(_, &a)| a)
                    .collect(),
                labels,
            });
        }
    }
    let mut covers = Vec::new();
    for (&bits, cfg) in &configs {
        for (i, &a) in arcs.iter().enumerate() {
            if bits >> i & 1 == 1 {
                continue;
            }
            let upper_bits = bits | (1 << i);
            let mut up = cfg.clone();
            let (is_merge, [x, y, z]) = up.saddle(a)?;
            let upper_ids = configs[&upper_bits].circle_order();
            debug_assert_eq!(up.circle_order(), upper_ids);
            for lab_bits in 0..(1u64 << cfg.r()) as u32 {
                let ids = cfg.circle_order();
                let labels: Labeling =
                    ids.iter().enumerate().map(|(k, &id)| (id, (lab_bits >> k & 1) as u8)).collect();
                let lower_key = (bits, ids.iter().map(|id| labels[id]).collect::<Vec<u8>>());
                let lower_idx = obj_index[&lower_key];
                let targets: Vec<Labeling> = if is_merge {
                    rel.merge[labels[&x] as usize][labels[&y] as usize]
                        .iter()
                        .map(|&out| {
                            let mut t: Labeling = labels.clone();
                            t.remove(&x);
                            t.remove(&y);
                            t.insert(z, out);
                            t
                        })
                        .collect()
                } else {
                    let mut ts = Vec::new();
                    for &(o1, o2) in &rel.split[labels[&x] as usize] {
                        let mut t: Labeling = labels.clone();
                        t.remove(&x);
                        t.insert(y, o1);
                        t.insert(z, o2);
                        if !ts.contains(&t) {
                            ts.push(t);
                        }
                    }
                    ts
                };
                for t in targets {
                    let key = (upper_bits, upper_ids.iter().map(|id| t[id]).collect::<Vec<u8>>());
                    covers.push((lower_idx, obj_index[&key]));
                }
            }
        }
    }
    covers.sort_unstable();
    covers.dedup();
    Ok(Poset { objects, covers })
}

/// Admissibility of an XY-decorated configuration: y constant on each
/// connected component, x constant on each surgered component, and the
/// restrictions agree.
pub fn admissible(dec: &DecoratedConfiguration) -> bool {
    let comp = &dec.config.component;
    let mut y_val: BTreeMap<usize, u8> = BTreeMap::new();
    for (&circle, &label) in &dec.y {
        match y_val.insert(comp[&circle], label) {
            Some(prev) if prev != label => return false,
            _ => {}
        }
    }
    // surgery preserves the component tags
    let s = dec.config.full_surgery();
    for (&circle, &label) in &dec.x {
        let c = s.component[&circle];
        match y_val.get(&c) {
            Some(&v) if v != label => return false,
            None => return false,
            _ => {}
        }
    }
    true
}

/// A cube block of P_XY(D): the interval from a minimal object to its unique
/// maximal successor, order-isomorphic to {0,1}^k.
#[derive(Debug, Clone)]
pub struct CubeBlock {
    pub min: PosetObject,
    pub max: PosetObject,
    /// free arc coordinates, ascending; the vertex w of {0,1}^k maps to
    /// min.arcs plus the chosen coordinates
    pub coords: Vec<usize>,
}

impl CubeBlock {
    pub fn k(&self) -> usize {
        self.coords.len()
    }

    pub fn size(&self) -> usize {
        1 << self.coords.len()
    }
}

/// Decompose P_XY(c) into cube blocks (each object lies in exactly one).
pub fn cube_decomposition(c: &Configuration) -> Result<Vec<CubeBlock>, ConfigError> {
    let rel = BasicRelation::xy();
    let p = poset(c, &rel)?;
    let mut preds: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for &(lo, hi) in &p.covers {
        preds.entry(hi).or_default().push(lo);
    }
    let mut block_of: Vec<usize> = (0..p.objects.len()).collect();
    for (i, slot) in block_of.iter_mut().enumerate() {
        let mut cur = i;
        while let Some(lo) = preds.get(&cur).and_then(|v| v.first()) {
            cur = *lo;
        }
        *slot = cur;
    }
    let mut blocks: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &b) in block_of.iter().enumerate() {
        blocks.entry(b).or_default().push(i);
    }
    let mut out = Vec::new();
    for (min_idx, members) in blocks {
        let min = p.objects[min_idx].clone();
        let max_idx = members.iter().copied().max_by_key(|&i| p.objects[i].arcs.len()).unwrap();
        let max = p.objects[max_idx].clone();
        let coords: Vec<usize> = max.arcs.difference(&min.arcs).copied().collect();
        debug_assert_eq!(members.len(), 1 << coords.len());
        out.push(CubeBlock { min, max, coords });
    }
    Ok(out)
}

/// One circle with two interleaved chords: the index-2 configuration whose
/// slid moduli exhibit the exceptional interval pattern.
pub fn ladybug() -> Configuration {
    Configuration::from_circles(vec![vec![
        PointRef::new(0, 0),
        PointRef::new(1, 0),
        PointRef::new(0, 1),
        PointRef::new(1, 1),
    ]])
}

/// Two circles joined by two parallel arcs.
pub fn hopf_config() -> Configuration {
    Configuration::from_circles(vec![
        vec![PointRef::new(0, 0), PointRef::new(1, 0)],
        vec![PointRef::new(0, 1), PointRef::new(1, 1)],
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagram::parse_pd;

    #[test]
    fn trefoil_associated_configuration() {
        let d = parse_pd("X[1,4,2,5] X[3,6,4,1] X[5,2,6,3]").unwrap();
        let c = associated_configuration(&d).unwrap();
        assert_eq!(c.r(), 2);
        assert_eq!(c.index(), 3);
        for a in 0..3 {
            let c0 = c.circle_of(PointRef::new(a, 0)).unwrap();
            let c1 = c.circle_of(PointRef::new(a, 1)).unwrap();
            assert_ne!(c0, c1);
        }
    }

    #[test]
    fn unknot_associated_configuration() {
        let d = parse_pd("O").unwrap();
        let c = associated_configuration(&d).unwrap();
        assert_eq!(c.r(), 1);
        assert_eq!(c.index(), 0);
    }

    #[test]
    fn hopf_associated_configuration() {
        let d = parse_pd("X[1,4,2,3] X[3,2,4,1]").unwrap();
        let c = associated_configuration(&d).unwrap();
        assert_eq!(c.r(), 2);
        assert_eq!(c.index(), 2);
    }

    #[test]
    fn surgery_counts() {
        let d = parse_pd("X[1,4,2,5] X[3,6,4,1] X[5,2,6,3]").unwrap();
        let c = associated_configuration(&d).unwrap();
        let one = c.surgery(&[1].into()).unwrap();
        assert_eq!(one.r(), 1);
        assert_eq!(one.index(), 2);
        assert_eq!(c.surgery(&BTreeSet::new()).unwrap(), c);
        // hopf ladder: merge then split back to two circles
        let h = hopf_config();
        let full = h.full_surgery();
        assert_eq!(full.r(), 2);
        assert_eq!(full.index(), 0);
        assert!(matches!(c.surgery(&[7].into()), Err(ConfigError::InvalidArc(7))));
    }

    #[test]
    fn surgery_index_property() {
        let d = parse_pd("X[1,4,2,5] X[3,6,4,1] X[5,2,6,3]").unwrap();
        let c = associated_configuration(&d).unwrap();
        for bits in 0u32..8 {
            let b: BTreeSet<usize> = (0..3).filter(|i| bits >> i & 1 == 1).collect();
            let s = c.surgery(&b).unwrap();
            assert_eq!(s.index(), c.index() - b.len());
        }
    }

    #[test]
    fn surgery_is_order_independent() {
        let d = parse_pd("X[1,4,2,5] X[3,6,4,1] X[5,2,6,3]").unwrap();
        let c = associated_configuration(&d).unwrap();
        let mut a = c.clone();
        a.saddle(0).unwrap();
        a.saddle(2).unwrap();
        let mut b = c.clone();
        b.saddle(2).unwrap();
        b.saddle(0).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn config_surgery_matches_diagram_resolutions() {
        // circle counts of iterated saddles match per-state resolutions
        for code in ["X[1,4,2,5] X[3,6,4,1] X[5,2,6,3]", "X[1,4,2,3] X[3,2,4,1]", "X[1,1,2,2]"] {
            let d = parse_pd(code).unwrap();
            let c = associated_configuration(&d).unwrap();
            for u in State::all(d.n()) {
                let b: BTreeSet<usize> = (0..d.n()).filter(|&i| u.bit(i)).collect();
                let s = c.surgery(&b).unwrap();
                assert_eq!(s.r(), d.resolve(u).unwrap().r(), "{code} at {u}");
            }
        }
    }

    #[test]
    fn ladybug_surgery_pattern() {
        let c = ladybug();
        let s0 = c.surgery(&[0].into()).unwrap();
        assert_eq!(s0.r(), 2);
        let a = s0.circle_of(PointRef::new(1, 0)).unwrap();
        let b = s0.circle_of(PointRef::new(1, 1)).unwrap();
        assert_ne!(a, b);
        assert_eq!(c.full_surgery().r(), 1);
    }

    #[test]
    fn leaf_and_coleaf() {
        let c = Configuration::from_circles(vec![
            vec![PointRef::new(0, 0)],
            vec![PointRef::new(0, 1), PointRef::new(1, 0), PointRef::new(1, 1)],
        ]);
        assert!(c.is_leaf(0));
        assert!(!c.is_leaf(1));
        assert!(c.is_coleaf(1));
        assert!(!c.is_coleaf(0));
        let l = ladybug();
        assert!(!l.is_coleaf(0));
        assert!(!l.is_coleaf(1));
    }

    #[test]
    fn basic_relation_tables() {
        let kh = BasicRelation::khovanov();
        assert_eq!(kh.merge[1][1], vec![1]);
        assert_eq!(kh.merge[0][1], vec![0]);
        assert!(kh.merge[0][0].is_empty());
        assert_eq!(kh.split[1].len(), 2);
        assert_eq!(kh.split[0], vec![(0, 0)]);
        let xy = BasicRelation::xy();
        assert_eq!(xy.merge[0][0], vec![0]);
        assert_eq!(xy.merge[1][1], vec![1]);
        assert!(xy.merge[0][1].is_empty());
        assert!(xy.merge_allowed(0, 0, 0));
        assert!(!xy.merge_allowed(0, 1, 0));
        assert!(xy.split_allowed(1, 1, 1));
    }

    #[test]
    fn khovanov_merge_poset_arrows() {
        // a single merge configuration: two circles, one joining arc
        let c = Configuration::from_circles(vec![
            vec![PointRef::new(0, 0)],
            vec![PointRef::new(0, 1)],
        ]);
        let p = poset(&c, &BasicRelation::khovanov()).unwrap();
        assert_eq!(p.objects.len(), 6);
        assert_eq!(p.covers.len(), 3);
        // Bar-Natan adds the (X,X) -> X merge
        let bn = BasicRelation::from_frobenius(&Frobenius::bar_natan_1x());
        let p = poset(&c, &bn).unwrap();
        assert_eq!(p.covers.len(), 4);
    }

    #[test]
    fn index_zero_poset() {
        let c = Configuration::from_circles(vec![vec![]]);
        let p = poset(&c, &BasicRelation::xy()).unwrap();
        assert_eq!(p.objects.len(), 2);
        assert!(p.covers.is_empty());
        let blocks = cube_decomposition(&c).unwrap();
        assert_eq!(blocks.len(), 2);
        assert!(blocks.iter().all(|b| b.k() == 0));
    }

    #[test]
    fn hopf_blocks() {
        let blocks = cube_decomposition(&hopf_config()).unwrap();
        let mut sizes: Vec<usize> = blocks.iter().map(CubeBlock::size).collect();
        sizes.sort_unstable();
        assert_eq!(sizes, vec![1, 1, 1, 1, 4, 4]);
    }

    #[test]
    fn ladybug_blocks() {
        let blocks = cube_decomposition(&ladybug()).unwrap();
        let mut sizes: Vec<usize> = blocks.iter().map(CubeBlock::size).collect();
        sizes.sort_unstable();
        assert_eq!(sizes, vec![1, 1, 1, 1, 4, 4]);
    }

    #[test]
    fn trefoil_blocks_match_brute_force() {
        // brute-force oracle: components of the comparability graph
        let d = parse_pd("X[1,4,2,5] X[3,6,4,1] X[5,2,6,3]").unwrap();
        let c = associated_configuration(&d).unwrap();
        let p = poset(&c, &BasicRelation::xy()).unwrap();
        let mut parent: Vec<usize> = (0..p.objects.len()).collect();
        fn find(parent: &mut Vec<usize>, x: usize) -> usize {
            if parent[x] != x {
                let r = find(parent, parent[x]);
                parent[x] = r;
                r
            } else {
                x
            }
        }
        for &(a, b) in &p.covers {
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra != rb {
                parent[ra.max(rb)] = ra.min(rb);
            }
        }
        let mut comp_sizes: BTreeMap<usize, usize> = BTreeMap::new();
        for i in 0..p.objects.len() {
            *comp_sizes.entry(find(&mut parent, i)).or_default() += 1;
        }
        let mut brute: Vec<usize> = comp_sizes.values().copied().collect();
        brute.sort_unstable();
        let blocks = cube_decomposition(&c).unwrap();
        let mut sizes: Vec<usize> = blocks.iter().map(CubeBlock::size).collect();
        sizes.sort_unstable();
        assert_eq!(sizes, brute);
        assert_eq!(sizes.iter().sum::<usize>(), p.objects.len());
    }

    #[test]
    fn admissibility() {
        let h = hopf_config();
        let ids = h.circle_order();
        let xx: Labeling = ids.iter().map(|&i| (i, 0u8)).collect();
        let s = h.full_surgery();
        let x_const: Labeling = s.circle_order().iter().map(|&i| (i, 0u8)).collect();
        assert!(admissible(&DecoratedConfiguration { config: h.clone(), y: xx, x: x_const.clone() }));
        let xy: Labeling = ids.iter().enumerate().map(|(k, &i)| (i, k as u8)).collect();
        assert!(!admissible(&DecoratedConfiguration { config: h.clone(), y: xy, x: x_const }));
        // two disjoint 1-arc components labeled differently, x matching
        let two = Configuration::from_circles(vec![
            vec![PointRef::new(0, 0), PointRef::new(0, 1)],
            vec![PointRef::new(1, 0), PointRef::new(1, 1)],
        ]);
        let y: Labeling = two
            .circle_order()
            .iter()
            .map(|&i| (i, u8::from(two.component[&i] != 0)))
            .collect();
        let s = two.full_surgery();
        let x: Labeling = s
            .circle_order()
            .iter()
            .map(|&i| (i, u8::from(s.component[&i] != 0)))
            .collect();
        assert!(admissible(&DecoratedConfiguration { config: two, y, x }));
    }
}
