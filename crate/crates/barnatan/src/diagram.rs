//! Oriented link diagrams from PD codes: parsing, resolutions, Seifert
//! circles, checkerboard labelings and linking numbers.
//!
//! Conventions, fixed once for the whole crate:
//! - a crossing tuple `(a, b, c, d)` starts at the incoming under-strand `a`;
//! - the over-strand runs through slots 1 and 3: if it enters at slot 1 the
//!   crossing is positive, if at slot 3 negative;
//! - the 0-smoothing joins slot pairs (0,3) and (1,2), the 1-smoothing joins
//!   (0,1) and (2,3). At a positive crossing the 0-smoothing is the oriented
//!   one, so the Seifert state assigns 0 to positive crossings.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Edge = usize;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DiagramError {
    #[error("malformed PD code: {0}")]
    MalformedPd(String),
    #[error("edge {0} appears {1} times, expected exactly 2")]
    InconsistentEdges(Edge, usize),
    #[error("PD code cannot be oriented consistently")]
    NonOrientable,
    #[error("PD code is not realizable as a planar diagram")]
    EmbeddingFailure,
    #[error("state has length {0} but the diagram has {1} crossings")]
    LengthMismatch(usize, usize),
    #[error("component index {0} out of range")]
    IndexOutOfRange(usize),
    #[error("linking number needs two distinct components")]
    SameComponent,
    #[error("operation requires a knot, diagram has {0} components")]
    NotAKnot(usize),
}

/// A vertex of the resolution cube: one bit per crossing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct State {
    pub bits: u32,
    pub len: usize,
}

impl State {
    pub fn new(bits: u32, len: usize) -> Self {
        assert!(len <= 32);
        State { bits: bits & mask(len), len }
    }

    pub fn zero(len: usize) -> Self {
        State::new(0, len)
    }

    pub fn full(len: usize) -> Self {
        State::new(mask(len), len)
    }

    pub fn bit(&self, i: usize) -> bool {
        (self.bits >> i) & 1 == 1
    }

    pub fn with_bit(&self, i: usize, v: bool) -> State {
        let bits = if v { self.bits | (1 << i) } else { self.bits & !(1 << i) };
        State::new(bits, self.len)
    }

    /// Manhattan norm: number of 1-bits.
    pub fn weight(&self) -> u32 {
        self.bits.count_ones()
    }

    pub fn complement(&self) -> State {
        State::new(!self.bits & mask(self.len), self.len)
    }

    pub fn all(len: usize) -> impl Iterator<Item = State> {
        (0..(1u64 << len)).map(move |b| State::new(b as u32, len))
    }
}

fn mask(len: usize) -> u32 {
    if len == 32 {
        u32::MAX
    } else {
        (1u32 << len) - 1
    }
}

impl std::fmt::Display for State {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for i in 0..self.len {
            write!(f, "{}", if self.bit(i) { '1' } else { '0' })?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkDiagram {
    crossings: Vec<[Edge; 4]>,
    /// over-strand enters at slot 1 (positive crossing)
    over_in_b: Vec<bool>,
    /// oriented edge cycles of crossing-bearing components, min edge first
    components: Vec<Vec<Edge>>,
    /// crossingless unknot components, drawn disjoint in the unbounded region
    free_loops: usize,
}

impl LinkDiagram {
    pub fn n(&self) -> usize {
        self.crossings.len()
    }

    pub fn crossings(&self) -> &[[Edge; 4]] {
        &self.crossings
    }

    pub fn sign(&self, i: usize) -> i8 {
        if self.over_in_b[i] {
            1
        } else {
            -1
        }
    }

    pub fn signs(&self) -> Vec<i8> {
        (0..self.n()).map(|i| self.sign(i)).collect()
    }

    pub fn n_plus(&self) -> usize {
        self.over_in_b.iter().filter(|&&b| b).count()
    }

    pub fn n_minus(&self) -> usize {
        self.n() - self.n_plus()
    }

    pub fn writhe(&self) -> i64 {
        self.n_plus() as i64 - self.n_minus() as i64
    }

    pub fn free_loops(&self) -> usize {
        self.free_loops
    }

    /// Total component count, crossing-bearing components first.
    pub fn component_count(&self) -> usize {
        self.components.len() + self.free_loops
    }

    pub fn components(&self) -> &[Vec<Edge>] {
        &self.components
    }

    pub fn component_of(&self, e: Edge) -> usize {
        self.components
            .iter()
            .position(|c| c.contains(&e))
            .expect("edge not in any component")
    }

    /// Edge of the over-strand entering crossing `i`.
    pub fn over_in(&self, i: usize) -> Edge {
        let t = self.crossings[i];
        if self.over_in_b[i] {
            t[1]
        } else {
            t[3]
        }
    }

    pub fn under_in(&self, i: usize) -> Edge {
        self.crossings[i][0]
    }

    /// Crossing sign after reversing the components in `mask`.
    pub fn sign_oriented(&self, i: usize, mask: u32) -> i8 {
        let cu = self.component_of(self.under_in(i));
        let co = self.component_of(self.over_in(i));
        let flip = ((mask >> cu) ^ (mask >> co)) & 1 == 1;
        if flip {
            -self.sign(i)
        } else {
            self.sign(i)
        }
    }

    pub fn edges(&self) -> Vec<Edge> {
        let mut es: Vec<Edge> = self.components.iter().flatten().copied().collect();
        es.sort_unstable();
        es
    }

    pub fn max_edge(&self) -> Edge {
        self.edges().last().copied().unwrap_or(0)
    }

    /// The state resolving every crossing compatibly with the orientation
    /// obtained by reversing the components in `mask`.
    pub fn seifert_state_oriented(&self, mask: u32) -> State {
        let mut s = State::zero(self.n());
        for i in 0..self.n() {
            s = s.with_bit(i, self.sign_oriented(i, mask) < 0);
        }
        s
    }

    pub fn seifert_state(&self) -> State {
        self.seifert_state_oriented(0)
    }

    pub fn linking_number(&self, i: usize, j: usize) -> Result<i64, DiagramError> {
        let nc = self.component_count();
        if i >= nc || j >= nc {
            return Err(DiagramError::IndexOutOfRange(i.max(j)));
        }
        if i == j {
            return Err(DiagramError::SameComponent);
        }
        let mut total = 0i64;
        for c in 0..self.n() {
            let cu = self.component_of(self.under_in(c));
            let co = self.component_of(self.over_in(c));
            if (cu, co) == (i, j) || (cu, co) == (j, i) {
                total += self.sign(c) as i64;
            }
        }
        Ok(total / 2)
    }

    /// Mirror image: reverses all crossings.
    pub fn mirror(&self) -> LinkDiagram {
        let crossings: Vec<[Edge; 4]> = self.crossings.iter().map(|&[a, b, c, d]| [a, d, c, b]).collect();
        let over_in_b = self.over_in_b.iter().map(|&b| !b).collect();
        LinkDiagram { crossings, over_in_b, components: self.components.clone(), free_loops: self.free_loops }
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "schema": 1,
            "crossings": self.crossings,
            "signs": self.signs(),
            "components": self.components,
            "free_loops": self.free_loops,
        })
    }

    pub fn to_pd_string(&self) -> String {
        let mut parts: Vec<String> = self
            .crossings
            .iter()
            .map(|t| format!("X[{},{},{},{}]", t[0], t[1], t[2], t[3]))
            .collect();
        for _ in 0..self.free_loops {
            parts.push("O".to_string());
        }
        if parts.is_empty() {
            String::new()
        } else {
            parts.join(" ")
        }
    }
}

/// Slot paired with `s` under the resolution bit `b`.
pub fn smoothing_partner(s: usize, b: bool) -> usize {
    if b {
        [1, 0, 3, 2][s]
    } else {
        [3, 2, 1, 0][s]
    }
}

// ---------------------------------------------------------------------------
// parsing
// ---------------------------------------------------------------------------

pub fn parse_pd(text: &str) -> Result<LinkDiagram, DiagramError> {
    let trimmed = text.trim();
    let (tuples, free_loops) = if trimmed.starts_with('[') {
        parse_json_form(trimmed)?
    } else {
        parse_text_form(trimmed)?
    };
    build_diagram(tuples, free_loops)
}

fn parse_json_form(text: &str) -> Result<(Vec<[Edge; 4]>, usize), DiagramError> {
    let v: serde_json::Value =
        serde_json::from_str(text).map_err(|e| DiagramError::MalformedPd(e.to_string()))?;
    let arr = v.as_array().ok_or_else(|| DiagramError::MalformedPd("expected an array".into()))?;
    let mut tuples = Vec::new();
    for item in arr {
        let t = item
            .as_array()
            .ok_or_else(|| DiagramError::MalformedPd("expected arrays of 4 integers".into()))?;
        if t.len() != 4 {
            return Err(DiagramError::MalformedPd(format!("crossing arity {} != 4", t.len())));
        }
        let mut tuple = [0usize; 4];
        for (i, x) in t.iter().enumerate() {
            let n = x
                .as_u64()
                .filter(|&n| n > 0)
                .ok_or_else(|| DiagramError::MalformedPd("edges must be positive integers".into()))?;
            tuple[i] = n as usize;
        }
        tuples.push(tuple);
    }
    Ok((tuples, 0))
}

fn parse_text_form(text: &str) -> Result<(Vec<[Edge; 4]>, usize), DiagramError> {
    let mut tuples = Vec::new();
    let mut free_loops = 0usize;
    for raw in text.split_whitespace() {
        let tok = raw.trim_end_matches(',');
        if tok.is_empty() {
            continue;
        }
        if tok == "O" || (tok.starts_with("O[") && tok.ends_with(']')) {
            free_loops += 1;
            continue;
        }
        let body = tok
            .strip_prefix("X[")
            .and_then(|s| s.strip_suffix(']'))
            .ok_or_else(|| DiagramError::MalformedPd(format!("unrecognized token `{tok}`")))?;
        let parts: Vec<&str> = body.split(',').map(str::trim).collect();
        if parts.len() != 4 {
            return Err(DiagramError::MalformedPd(format!("crossing arity {} != 4 in `{tok}`", parts.len())));
        }
        let mut tuple = [0usize; 4];
        for (i, p) in parts.iter().enumerate() {
            let n: usize = p
                .parse()
                .ok()
                .filter(|&n| n > 0)
                .ok_or_else(|| DiagramError::MalformedPd(format!("bad edge label `{p}`")))?;
            tuple[i] = n;
        }
        tuples.push(tuple);
    }
    Ok((tuples, free_loops))
}

/// Appearance role along the strand through a slot.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Role {
    In,
    Out,
    /// In iff (x_crossing XOR flip)
    Var { crossing: usize, flip: bool },
}

fn slot_role(crossing: usize, slot: usize) -> Role {
    match slot {
        0 => Role::In,
        2 => Role::Out,
        1 => Role::Var { crossing, flip: false },
        3 => Role::Var { crossing, flip: true },
        _ => unreachable!(),
    }
}

fn build_diagram(tuples: Vec<[Edge; 4]>, free_loops: usize) -> Result<LinkDiagram, DiagramError> {
    let n = tuples.len();
    assert!(n <= 32, "diagrams are limited to 32 crossings");
    let mut appearances: BTreeMap<Edge, Vec<(usize, usize)>> = BTreeMap::new();
    for (c, t) in tuples.iter().enumerate() {
        for (s, &e) in t.iter().enumerate() {
            appearances.entry(e).or_default().push((c, s));
        }
    }
    for (&e, apps) in &appearances {
        if apps.len() != 2 {
            return Err(DiagramError::InconsistentEdges(e, apps.len()));
        }
    }

    // solve over-strand directions: x_c = true means over enters at slot 1
    let mut assignment: Vec<Option<bool>> = vec![None; n];
    // adjacency: (other crossing, parity) meaning x_c XOR x_other = parity
    let mut adj: Vec<Vec<(usize, bool)>> = vec![Vec::new(); n];
    let mut forced: Vec<(usize, bool)> = Vec::new();
    for apps in appearances.values() {
        let (r1, r2) = (slot_role(apps[0].0, apps[0].1), slot_role(apps[1].0, apps[1].1));
        match (r1, r2) {
            (Role::In, Role::In) | (Role::Out, Role::Out) => return Err(DiagramError::NonOrientable),
            (Role::In, Role::Out) | (Role::Out, Role::In) => {}
            (Role::In, Role::Var { crossing, flip }) | (Role::Var { crossing, flip }, Role::In) => {
                // var appearance must be Out: x XOR flip = false
                forced.push((crossing, flip));
            }
            (Role::Out, Role::Var { crossing, flip }) | (Role::Var { crossing, flip }, Role::Out) => {
                forced.push((crossing, !flip));
            }
            (Role::Var { crossing: c1, flip: f1 }, Role::Var { crossing: c2, flip: f2 }) => {
                if c1 == c2 {
                    // both over slots of one crossing share the edge; either
                    // orientation is consistent, leave to the heuristic
                    continue;
                }
                // exactly one In: (x1^f1) XOR (x2^f2) = 1
                let parity = !(f1 ^ f2);
                adj[c1].push((c2, parity));
                adj[c2].push((c1, parity));
            }
        }
    }
    let mut queue: Vec<usize> = Vec::new();
    for (c, v) in forced {
        match assignment[c] {
            None => {
                assignment[c] = Some(v);
                queue.push(c);
            }
            Some(old) if old != v => return Err(DiagramError::NonOrientable),
            _ => {}
        }
    }
    loop {
        while let Some(c) = queue.pop() {
            let xc = assignment[c].unwrap();
            for &(o, parity) in &adj[c] {
                let want = xc ^ parity;
                match assignment[o] {
                    None => {
                        assignment[o] = Some(want);
                        queue.push(o);
                    }
                    Some(v) if v != want => return Err(DiagramError::NonOrientable),
                    _ => {}
                }
            }
        }
        // unanchored component: decide its lowest crossing by edge numbering
        match (0..n).find(|&c| assignment[c].is_none()) {
            Some(c) => {
                let (b, d) = (tuples[c][1], tuples[c][3]);
                let x = if d == b + 1 {
                    true
                } else if b == d + 1 {
                    false
                } else {
                    b >= d
                };
                assignment[c] = Some(x);
                queue.push(c);
            }
            None => break,
        }
    }
    let over_in_b: Vec<bool> = assignment.into_iter().map(Option::unwrap).collect();

    // validate: every edge has exactly one In appearance, and build successors
    let mut succ: BTreeMap<Edge, Edge> = BTreeMap::new();
    for (c, t) in tuples.iter().enumerate() {
        if succ.insert(t[0], t[2]).is_some() {
            return Err(DiagramError::NonOrientable);
        }
        let (from, to) = if over_in_b[c] { (t[1], t[3]) } else { (t[3], t[1]) };
        if succ.insert(from, to).is_some() {
            return Err(DiagramError::NonOrientable);
        }
    }
    if succ.len() != appearances.len() {
        return Err(DiagramError::NonOrientable);
    }

    let mut components = Vec::new();
    let mut seen: BTreeMap<Edge, bool> = BTreeMap::new();
    for &start in appearances.keys() {
        if seen.contains_key(&start) {
            continue;
        }
        let mut cycle = vec![start];
        seen.insert(start, true);
        let mut e = succ[&start];
        while e != start {
            if seen.insert(e, true).is_some() {
                return Err(DiagramError::NonOrientable);
            }
            cycle.push(e);
            e = *succ.get(&e).ok_or(DiagramError::NonOrientable)?;
        }
        components.push(cycle);
    }
    components.sort_by_key(|c| c[0]);

    Ok(LinkDiagram { crossings: tuples, over_in_b, components, free_loops })
}

// ---------------------------------------------------------------------------
// resolutions
// ---------------------------------------------------------------------------

/// One transit of a circle through a smoothed crossing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Passage {
    pub crossing: usize,
    pub slot_in: usize,
    pub slot_out: usize,
}

impl Passage {
    /// The smoothing strand through slots {0,3} carries arc end 0; the strand
    /// through {1,2} carries arc end 1 (0-smoothing), and analogously (0,1) /
    /// (2,3) for the 1-smoothing.
    pub fn strand_end(&self) -> u8 {
        if self.slot_in == 0 || self.slot_out == 0 {
            0
        } else {
            1
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Circle {
    /// traversed edges; `edges[i]` arrives at `passages[i]`
    pub edges: Vec<Edge>,
    pub passages: Vec<Passage>,
    /// Some(k) for the k-th crossingless unknot component
    pub free_loop: Option<usize>,
}

impl Circle {
    pub fn min_edge(&self) -> Option<Edge> {
        self.edges.iter().min().copied()
    }

    pub fn contains_edge(&self, e: Edge) -> bool {
        self.edges.contains(&e)
    }
}

#[derive(Debug, Clone)]
pub struct Resolution {
    pub state: State,
    pub circles: Vec<Circle>,
}

impl Resolution {
    pub fn r(&self) -> usize {
        self.circles.len()
    }

    pub fn circle_of_edge(&self, e: Edge) -> usize {
        self.circles.iter().position(|c| c.contains_edge(e)).expect("edge not on any circle")
    }

    /// Circle indices met by the two smoothing strands of crossing `i`:
    /// (strand through end 0, strand through end 1).
    pub fn crossing_circles(&self, i: usize) -> (usize, usize) {
        let mut end0 = None;
        let mut end1 = None;
        for (ci, circ) in self.circles.iter().enumerate() {
            for p in &circ.passages {
                if p.crossing == i {
                    if p.strand_end() == 0 {
                        end0 = Some(ci);
                    } else {
                        end1 = Some(ci);
                    }
                }
            }
        }
        (end0.expect("missing strand"), end1.expect("missing strand"))
    }
}

impl LinkDiagram {
    pub fn resolve(&self, u: State) -> Result<Resolution, DiagramError> {
        if u.len != self.n() {
            return Err(DiagramError::LengthMismatch(u.len, self.n()));
        }
        let mut appearances: BTreeMap<Edge, Vec<(usize, usize)>> = BTreeMap::new();
        for (c, t) in self.crossings.iter().enumerate() {
            for (s, &e) in t.iter().enumerate() {
                appearances.entry(e).or_default().push((c, s));
            }
        }
        let other_end = |e: Edge, at: (usize, usize)| -> (usize, usize) {
            let apps = &appearances[&e];
            if apps[0] == at {
                apps[1]
            } else {
                apps[0]
            }
        };

        let mut circles = Vec::new();
        let mut visited: BTreeMap<Edge, bool> = BTreeMap::new();
        for &start in appearances.keys() {
            if visited.contains_key(&start) {
                continue;
            }
            let mut edges = Vec::new();
            let mut passages = Vec::new();
            // arrive along `start` at its first appearance
            let mut edge = start;
            let mut arrive_at = appearances[&start][0];
            loop {
                visited.insert(edge, true);
                edges.push(edge);
                let (c, s) = arrive_at;
                let out = smoothing_partner(s, u.bit(c));
                passages.push(Passage { crossing: c, slot_in: s, slot_out: out });
                let next_edge = self.crossings[c][out];
                let next_arrival = other_end(next_edge, (c, out));
                if next_edge == start && next_arrival == appearances[&start][0] {
                    break;
                }
                edge = next_edge;
                arrive_at = next_arrival;
            }
            circles.push(Circle { edges, passages, free_loop: None });
        }
        circles.sort_by_key(|c| c.min_edge());
        for k in 0..self.free_loops {
            circles.push(Circle { edges: vec![], passages: vec![], free_loop: Some(k) });
        }
        Ok(Resolution { state: u, circles })
    }
}

// ---------------------------------------------------------------------------
// planar regions, checkerboard coloring, ab-labeling
// ---------------------------------------------------------------------------

struct Dsu {
    parent: Vec<usize>,
}

impl Dsu {
    fn new(n: usize) -> Self {
        Dsu { parent: (0..n).collect() }
    }

    fn find(&mut self, x: usize) -> usize {
        if self.parent[x] != x {
            let r = self.find(self.parent[x]);
            self.parent[x] = r;
            r
        } else {
            x
        }
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Region structure of a resolved diagram, for checkerboard coloring.
pub struct Regions {
    corner_class: Vec<usize>,
    /// nesting depth per region class id (unbounded region = 0)
    pub depth: BTreeMap<usize, usize>,
    pub unbounded: usize,
    /// synthetic region inside the k-th free loop
    loop_inside: Vec<usize>,
}

impl Regions {
    pub fn class(&self, crossing: usize, corner: usize) -> usize {
        self.corner_class[4 * crossing + corner]
    }

    /// Region immediately left of the traversal at a passage.
    pub fn left_of(&self, p: &Passage) -> usize {
        self.class(p.crossing, p.slot_in)
    }

    pub fn right_of(&self, p: &Passage) -> usize {
        self.class(p.crossing, (p.slot_in + 3) % 4)
    }

    /// true = black (odd depth); the unbounded region is white
    pub fn is_black(&self, region: usize) -> bool {
        self.depth[&region] % 2 == 1
    }
}

impl LinkDiagram {
    /// Compute the regions of the resolution `res` from the PD rotation
    /// system. Fails if the code does not define a planar embedding.
    pub fn regions(&self, res: &Resolution) -> Result<Regions, DiagramError> {
        let n = self.n();
        let corners = 4 * n;
        // synthetic nodes: one per free loop inside, plus one global unbounded
        let total = corners + self.free_loops + 1;
        let unbounded_node = corners + self.free_loops;

        let mut appearances: BTreeMap<Edge, Vec<(usize, usize)>> = BTreeMap::new();
        for (c, t) in self.crossings.iter().enumerate() {
            for (s, &e) in t.iter().enumerate() {
                appearances.entry(e).or_default().push((c, s));
            }
        }

        // edge side gluings determine the faces of the 4-valent graph
        let mut faces = Dsu::new(total);
        let mut edge_sides: Vec<(usize, usize)> = Vec::new(); // (left corner, right corner)
        for apps in appearances.values() {
            // from the Out appearance to the In appearance
            let (mut from, mut to) = (apps[0], apps[1]);
            if self.is_in_slot(from) {
                std::mem::swap(&mut from, &mut to);
            }
            let (co, so) = from;
            let (ci, si) = to;
            let left = (4 * co + (so + 3) % 4, 4 * ci + si);
            let right = (4 * co + so, 4 * ci + (si + 3) % 4);
            faces.union(left.0, left.1);
            faces.union(right.0, right.1);
            edge_sides.push(left);
            edge_sides.push(right);
        }

        if n > 0 {
            // Euler check: F = n + 2 * (graph components)
            let mut comp = Dsu::new(n);
            for apps in appearances.values() {
                comp.union(apps[0].0, apps[1].0);
            }
            let graph_components: std::collections::BTreeSet<usize> = (0..n).map(|c| comp.find(c)).collect();
            let face_reps: std::collections::BTreeSet<usize> = (0..corners).map(|c| faces.find(c)).collect();
            if face_reps.len() != n + 2 * graph_components.len() {
                return Err(DiagramError::EmbeddingFailure);
            }
            // outer face of each graph component: the face right of the
            // component's highest-numbered edge, all identified with the
            // global unbounded node
            for rep in graph_components {
                let max_edge = appearances
                    .iter()
                    .filter(|(_, apps)| comp.find(apps[0].0) == rep)
                    .map(|(&e, _)| e)
                    .max()
                    .unwrap();
                let apps = &appearances[&max_edge];
                let mut from = apps[0];
                if self.is_in_slot(from) {
                    from = apps[1];
                }
                let right_corner = 4 * from.0 + from.1;
                faces.union(right_corner, unbounded_node);
            }
        }

        // smoothing merges at each crossing
        for c in 0..n {
            if res.state.bit(c) {
                faces.union(4 * c + 1, 4 * c + 3);
            } else {
                faces.union(4 * c, 4 * c + 2);
            }
        }

        // region adjacency across curve segments
        let mut adjacency: Vec<(usize, usize)> = Vec::new();
        for &(l, r) in &edge_sides {
            adjacency.push((faces.find(l), faces.find(r)));
        }
        for circ in &res.circles {
            for p in &circ.passages {
                let l = faces.find(4 * p.crossing + p.slot_in);
                let r = faces.find(4 * p.crossing + (p.slot_in + 3) % 4);
                adjacency.push((l, r));
            }
        }
        for k in 0..self.free_loops {
            adjacency.push((faces.find(corners + k), faces.find(unbounded_node)));
        }

        // BFS depth from the unbounded region
        let start = faces.find(unbounded_node);
        let mut depth: BTreeMap<usize, usize> = BTreeMap::new();
        depth.insert(start, 0);
        let mut frontier = vec![start];
        while let Some(x) = frontier.pop() {
            let dx = depth[&x];
            for &(a, b) in &adjacency {
                for (p, q) in [(a, b), (b, a)] {
                    if p == x && !depth.contains_key(&q) {
                        depth.insert(q, dx + 1);
                        frontier.push(q);
                    }
                }
            }
        }
        let corner_class = (0..corners).map(|c| faces.find(c)).collect();
        let loop_inside = (0..self.free_loops).map(|k| faces.find(corners + k)).collect();
        Ok(Regions { corner_class, depth, unbounded: start, loop_inside })
    }

    fn is_in_slot(&self, app: (usize, usize)) -> bool {
        match app.1 {
            0 => true,
            2 => false,
            1 => self.over_in_b[app.0],
            3 => !self.over_in_b[app.0],
            _ => unreachable!(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AbLabel {
    A,
    B,
}

impl AbLabel {
    pub fn flip(self) -> AbLabel {
        match self {
            AbLabel::A => AbLabel::B,
            AbLabel::B => AbLabel::A,
        }
    }
}

#[derive(Debug, Clone)]
pub struct AbLabeling {
    /// reversal mask over components
    pub orientation: u32,
    pub state: State,
    /// one label per circle of the Seifert resolution, in circle order
    pub labels: Vec<AbLabel>,
}

impl LinkDiagram {
    /// Checkerboard labeling of the Seifert circles for the orientation
    /// obtained by reversing the components in `mask`.
    pub fn ab_labeling(&self, mask: u32) -> Result<AbLabeling, DiagramError> {
        let u = self.seifert_state_oriented(mask);
        let res = self.resolve(u)?;
        let regions = self.regions(&res)?;
        let mut labels = Vec::new();
        for circ in &res.circles {
            let left_region = if let Some(k) = circ.free_loop {
                // free loops run counterclockwise unless reversed
                let comp = self.components.len() + k;
                if (mask >> comp) & 1 == 0 {
                    regions.loop_inside[k]
                } else {
                    regions.unbounded
                }
            } else {
                // traversal direction vs orientation is constant on a Seifert circle
                let e = circ.edges[0];
                let arrives_in = self.is_in_slot((circ.passages[0].crossing, circ.passages[0].slot_in));
                let reversed = (mask >> self.component_of(e)) & 1 == 1;
                let follows = arrives_in != reversed;
                debug_assert!(circ.edges.iter().zip(&circ.passages).all(|(&e2, p)| {
                    let ai = self.is_in_slot((p.crossing, p.slot_in));
                    let rev = (mask >> self.component_of(e2)) & 1 == 1;
                    (ai != rev) == follows
                }));
                if follows {
                    regions.left_of(&circ.passages[0])
                } else {
                    regions.right_of(&circ.passages[0])
                }
            };
            labels.push(if regions.is_black(left_region) { AbLabel::A } else { AbLabel::B });
        }
        Ok(AbLabeling { orientation: mask, state: u, labels })
    }
}

// ---------------------------------------------------------------------------
// tests
// ---------------------------------------------------------------------------

/// PD code of a braid closure (strands flow downward, edges numbered along
/// each component). Positive letters: the right strand passes over.
/// Internal helper for fixture generation and tests.
#[allow(dead_code)]
pub(crate) fn braid_closure_pd(strands: usize, word: &[i32]) -> String {
    assert!(strands >= 2);
    let m = word.len();
    // seg_id[row][p]: edge label of the segment ABOVE letter `row` at
    // position p; the segment below the last letter wraps to row 0
    let mut seg_id: Vec<Vec<usize>> = vec![vec![usize::MAX; strands]; m.max(1)];
    let mut touched = vec![false; strands];
    for &w in word {
        let i = (w.unsigned_abs() as usize) - 1;
        touched[i] = true;
        touched[i + 1] = true;
    }
    let mut next_label = 1usize;
    let mut visited = vec![false; strands];
    let mut free_loops = 0usize;
    for start in 0..strands {
        if visited[start] {
            continue;
        }
        if !touched[start] {
            visited[start] = true;
            free_loops += 1;
            continue;
        }
        // walk the whole component; an edge label advances only when the
        // strand actually passes a crossing
        let mut stations: Vec<(usize, usize, bool)> = Vec::new();
        let mut pos = start;
        loop {
            visited[pos] = true;
            let mut p = pos;
            for (row, &w) in word.iter().enumerate() {
                let i = (w.unsigned_abs() as usize) - 1;
                let involved = p == i || p == i + 1;
                stations.push((row, p, involved));
                if p == i {
                    p = i + 1;
                } else if p == i + 1 {
                    p = i;
                }
            }
            pos = p;
            if pos == start {
                break;
            }
        }
        let k = stations.iter().filter(|s| s.2).count();
        let first = next_label;
        let mut lab = first;
        for (row, p, involved) in stations {
            seg_id[row][p] = lab;
            if involved {
                lab = if lab == first + k - 1 { first } else { lab + 1 };
            }
        }
        next_label += k;
    }
    let seg_above = |row: usize, p: usize| seg_id[row][p];
    let seg_below = |row: usize, q: usize| if row + 1 < m { seg_id[row + 1][q] } else { seg_id[0][q] };
    let mut out = Vec::new();
    for (row, &w) in word.iter().enumerate() {
        let i = (w.unsigned_abs() as usize) - 1;
        let (in_l, in_r) = (seg_above(row, i), seg_above(row, i + 1));
        let (out_l, out_r) = (seg_below(row, i), seg_below(row, i + 1));
        if w > 0 {
            // right strand over; under-in runs left to right
            out.push(format!("X[{},{},{},{}]", in_l, in_r, out_r, out_l));
        } else {
            // left strand over; under-in runs right to left
            out.push(format!("X[{},{},{},{}]", in_r, out_r, out_l, in_l));
        }
    }
    for _ in 0..free_loops {
        out.push("O".to_string());
    }
    out.join(" ")
}

#[cfg(test)]
mod tests {
    // corpus generation helper: `cargo test print_torus_codes -- --nocapture --ignored`

    use super::*;

    pub const TREFOIL_R: &str = "X[1,4,2,5] X[3,6,4,1] X[5,2,6,3]";
    pub const HOPF_POS: &str = "X[1,4,2,3] X[3,2,4,1]";

    #[test]
    fn parse_right_trefoil() {
        let d = parse_pd(TREFOIL_R).unwrap();
        assert_eq!(d.n(), 3);
        assert_eq!(d.component_count(), 1);
        assert_eq!(d.n_plus(), 3);
        assert_eq!(d.n_minus(), 0);
    }

    #[test]
    fn parse_empty() {
        let d = parse_pd("").unwrap();
        assert_eq!(d.n(), 0);
        assert_eq!(d.component_count(), 0);
    }

    #[test]
    fn parse_hopf() {
        let d = parse_pd(HOPF_POS).unwrap();
        assert_eq!(d.n(), 2);
        assert_eq!(d.component_count(), 2);
        assert_eq!(d.linking_number(0, 1).unwrap(), 1);
    }

    #[test]
    fn parse_json_array_form() {
        let d = parse_pd("[[1,4,2,5],[3,6,4,1],[5,2,6,3]]").unwrap();
        assert_eq!(d.n(), 3);
        assert_eq!(d.n_plus(), 3);
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(parse_pd("X[1,2,3]"), Err(DiagramError::MalformedPd(_))));
        assert!(matches!(parse_pd("X[1,4,2,5]"), Err(DiagramError::InconsistentEdges(_, _))));
    }

    #[test]
    fn kinked_unknots() {
        let pos = parse_pd("X[1,2,2,1]").unwrap();
        assert_eq!(pos.n_plus(), 1);
        assert_eq!(pos.component_count(), 1);
        let neg = parse_pd("X[1,1,2,2]").unwrap();
        assert_eq!(neg.n_minus(), 1);
    }

    #[test]
    fn trefoil_resolutions() {
        let d = parse_pd(TREFOIL_R).unwrap();
        assert_eq!(d.resolve(State::zero(3)).unwrap().r(), 2);
        assert_eq!(d.resolve(State::full(3)).unwrap().r(), 3);
        assert_eq!(d.resolve(State::new(0b001, 3)).unwrap().r(), 1);
        assert_eq!(d.resolve(State::new(0b011, 3)).unwrap().r(), 2);
    }

    #[test]
    fn resolve_length_mismatch() {
        let d = parse_pd(TREFOIL_R).unwrap();
        assert!(matches!(d.resolve(State::zero(2)), Err(DiagramError::LengthMismatch(2, 3))));
    }

    #[test]
    fn resolve_empty() {
        let d = parse_pd("").unwrap();
        assert_eq!(d.resolve(State::zero(0)).unwrap().r(), 0);
    }

    #[test]
    fn seifert_states() {
        let right = parse_pd(TREFOIL_R).unwrap();
        assert_eq!(right.seifert_state(), State::zero(3));
        let left = right.mirror();
        assert_eq!(left.seifert_state(), State::full(3));
        assert_eq!(parse_pd("").unwrap().seifert_state(), State::zero(0));
    }

    /// independent oracle: count cycles of the in-edge -> out-edge map that
    /// follows the orientation through each crossing
    fn seifert_circles_by_oriented_trace(d: &LinkDiagram) -> usize {
        let mut next: std::collections::BTreeMap<Edge, Edge> = std::collections::BTreeMap::new();
        for (i, t) in d.crossings().iter().enumerate() {
            if d.sign(i) > 0 {
                // over enters at slot 1: oriented smoothing joins a->d, b->c
                next.insert(t[0], t[3]);
                next.insert(t[1], t[2]);
            } else {
                next.insert(t[0], t[1]);
                next.insert(t[3], t[2]);
            }
        }
        let mut seen: std::collections::BTreeSet<Edge> = std::collections::BTreeSet::new();
        let mut cycles = 0;
        for &start in next.keys() {
            if seen.contains(&start) {
                continue;
            }
            cycles += 1;
            let mut e = start;
            loop {
                seen.insert(e);
                e = next[&e];
                if e == start {
                    break;
                }
            }
        }
        cycles + d.free_loops()
    }

    #[test]
    fn seifert_circle_count_matches_oriented_trace() {
        for code in [TREFOIL_R, HOPF_POS, "X[1,1,2,2]", "X[4,2,5,1] X[8,6,1,5] X[6,3,7,4] X[2,7,3,8]"] {
            let d = parse_pd(code).unwrap();
            let res = d.resolve(d.seifert_state()).unwrap();
            assert_eq!(res.r(), seifert_circles_by_oriented_trace(&d), "{code}");
        }
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(64))]
        #[test]
        fn parser_never_panics(text in "[XO0-9,\\[\\] ]{0,40}") {
            let _ = parse_pd(&text);
        }
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(24))]
        #[test]
        fn braid_closures_resolve_to_partitions(
            word in proptest::collection::vec(
                proptest::sample::select(vec![1i32, -1, 2, -2]), 1..5),
        ) {
            let code = braid_closure_pd(3, &word);
            let d = parse_pd(&code).unwrap();
            for u in State::all(d.n()) {
                let res = d.resolve(u).unwrap();
                let mut all: Vec<Edge> = res.circles.iter().flat_map(|c| c.edges.clone()).collect();
                all.sort_unstable();
                proptest::prop_assert_eq!(all, d.edges());
            }
            // oriented-trace oracle for the Seifert state
            let res = d.resolve(d.seifert_state()).unwrap();
            proptest::prop_assert_eq!(res.r(), seifert_circles_by_oriented_trace(&d));
        }
    }

    #[test]
    fn resolve_partition_property() {
        let d = parse_pd(TREFOIL_R).unwrap();
        for u in State::all(3) {
            let res = d.resolve(u).unwrap();
            let mut all: Vec<Edge> = res.circles.iter().flat_map(|c| c.edges.clone()).collect();
            all.sort_unstable();
            assert_eq!(all, d.edges());
        }
    }

    #[test]
    fn unknot_labels() {
        let d = parse_pd("O").unwrap();
        assert_eq!(d.component_count(), 1);
        let l = d.ab_labeling(0).unwrap();
        assert_eq!(l.labels, vec![AbLabel::A]);
        let r = d.ab_labeling(1).unwrap();
        assert_eq!(r.labels, vec![AbLabel::B]);
    }

    #[test]
    fn ab_labels_complementary_under_full_reversal() {
        for code in [TREFOIL_R, HOPF_POS, "X[1,1,2,2]"] {
            let d = parse_pd(code).unwrap();
            let nc = d.component_count() as u32;
            let full = (1u32 << nc) - 1;
            for mask in 0..(1u32 << nc) {
                let a = d.ab_labeling(mask).unwrap();
                let b = d.ab_labeling(mask ^ full).unwrap();
                assert_eq!(a.state, b.state);
                let flipped: Vec<AbLabel> = a.labels.iter().map(|l| l.flip()).collect();
                assert_eq!(flipped, b.labels);
            }
        }
    }

    #[test]
    fn hopf_seifert_labels_distinct() {
        let d = parse_pd(HOPF_POS).unwrap();
        let l = d.ab_labeling(0).unwrap();
        assert_eq!(l.labels.len(), 2);
        assert_ne!(l.labels[0], l.labels[1]);
    }

    #[test]
    fn linking_numbers() {
        let pos = parse_pd(HOPF_POS).unwrap();
        assert_eq!(pos.linking_number(0, 1).unwrap(), 1);
        assert_eq!(pos.linking_number(1, 0).unwrap(), 1);
        let neg = pos.mirror();
        assert_eq!(neg.linking_number(0, 1).unwrap(), -1);
        let unlink = parse_pd("O O").unwrap();
        assert_eq!(unlink.linking_number(0, 1).unwrap(), 0);
        assert!(matches!(unlink.linking_number(0, 0), Err(DiagramError::SameComponent)));
        assert!(matches!(unlink.linking_number(0, 2), Err(DiagramError::IndexOutOfRange(2))));
    }

    #[test]
    fn mirror_involutive() {
        let d = parse_pd(TREFOIL_R).unwrap();
        assert_eq!(d.mirror().mirror(), d);
        assert_eq!(d.mirror().n_minus(), 3);
    }

    #[test]
    fn braid_generator_trefoil() {
        let code = braid_closure_pd(2, &[1, 1, 1]);
        let d = parse_pd(&code).unwrap();
        assert_eq!(d.n(), 3);
        assert_eq!(d.component_count(), 1);
        assert_eq!(d.n_plus(), 3);
        assert_eq!(d.resolve(State::zero(3)).unwrap().r(), 2);
        assert_eq!(d.resolve(State::full(3)).unwrap().r(), 3);
    }

    #[test]
    #[ignore]
    fn print_torus_codes() {
        println!("T25 {}", braid_closure_pd(2, &[1, 1, 1, 1, 1]));
        println!("T34 {}", braid_closure_pd(3, &[1, 2, 1, 2, 1, 2, 1, 2]));
        println!("R3S {}", braid_closure_pd(3, &[1, 2, 1, 2]));
        println!("R3T {}", braid_closure_pd(3, &[2, 1, 2, 2]));
    }

    #[test]
    fn lk_sum_invariant_under_crossing_reorder() {
        // reordering the crossings of the PD input must not change |lk| sums
        let codes = [HOPF_POS, "X[3,2,4,1] X[1,4,2,3]"];
        let mut sums = Vec::new();
        for code in codes {
            let d = parse_pd(code).unwrap();
            let mut s = 0i64;
            for i in 0..d.component_count() {
                for j in (i + 1)..d.component_count() {
                    s += d.linking_number(i, j).unwrap().abs();
                }
            }
            sums.push(s);
        }
        assert_eq!(sums[0], sums[1]);
    }
}
