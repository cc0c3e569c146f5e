//! Verification suites over the bundled corpus: one runner per acceptance
//! check, shared by the integration tests and the command line.

use std::fmt::Write as _;

use crate::cobord::{
    canonical_degree, cobordism_map, insert_r2_site, reidemeister_map, CanonicalPick, MoveKind,
    R1Site,
};
use crate::complex::{basis_change, khovanov_complex, xy_complex, Frobenius};
use crate::corpus;
use crate::cube::{
    cube_complex, frame_from_sign, standard_frame, standard_sign, verify_frame_pair, verify_sign,
    CubeEdge, SignAssignment,
};
use crate::diagram::{parse_pd, LinkDiagram, State};
use crate::flowcat::{
    chains_oracle_0dim, chains_oracle_1dim, cube_skeleton, cubic_handle_slides,
    eliminate_quantum_increasing, moduli0_signs, moduli1_census, moduli1_counts, xy_flow_category,
    CubeModel, FlowCategory,
};
use crate::homology::{
    canonical_cycles, canonical_grading_from_linking, homology, mirror_dual, s_invariant,
    s_min_max, Coeffs,
};
use crate::matrix::Field;
use crate::resconf::{hopf_config, ladybug};

#[derive(Debug, Clone)]
pub struct Report {
    pub name: String,
    pub pass: bool,
    pub details: String,
}

impl Report {
    fn ok(name: &str, details: String) -> Report {
        Report { name: name.to_string(), pass: true, details }
    }

    fn fail(name: &str, details: String) -> Report {
        Report { name: name.to_string(), pass: false, details }
    }

    pub fn line(&self) -> String {
        format!("{}: {} ({})", self.name, if self.pass { "PASS" } else { "FAIL" }, self.details)
    }
}

fn catching(name: &str, f: impl FnOnce() -> Result<String, String>) -> Report {
    match f() {
        Ok(details) => Report::ok(name, details),
        Err(details) => Report::fail(name, details),
    }
}

fn corpus_within(max_crossings: usize) -> Vec<(&'static str, LinkDiagram)> {
    corpus::all().into_iter().filter(|(_, d)| d.n() <= max_crossings).collect()
}

/// Criterion 1: Z Bar-Natan homology is free of rank 2^|D| with homological
/// gradings given by the linking-number formula over all orientations.
pub fn structure_theorem(max_crossings: usize) -> Report {
    catching("structure theorem", || {
        let mut details = String::new();
        for (name, d) in corpus_within(max_crossings) {
            let cx = khovanov_complex(&d, &Frobenius::bar_natan_1x(), &standard_sign(d.n()))
                .map_err(|e| e.to_string())?;
            let h = homology(&cx, Coeffs::Z);
            let comps = d.component_count();
            if h.total_rank() != 1usize << comps || !h.is_torsion_free() {
                return Err(format!("{name}: rank {} with torsion", h.total_rank()));
            }
            let mut expected: Vec<i32> = (0..(1u32 << comps))
                .map(|mask| canonical_grading_from_linking(&d, mask) as i32)
                .collect();
            expected.sort_unstable();
            if h.rank_gradings() != expected {
                return Err(format!("{name}: gradings {:?} != {:?}", h.rank_gradings(), expected));
            }
            let _ = write!(details, "{name} ");
        }
        Ok(details.trim_end().to_string())
    })
}

/// Criterion 2: s-invariants of the corpus knots over Q and F2.
pub fn s_values() -> Report {
    catching("s-invariants", || {
        let mut details = String::new();
        for (name, d, expected) in corpus::knots_with_s() {
            for coeffs in [Coeffs::Q, Coeffs::F2] {
                let s = s_invariant(&d, coeffs).map_err(|e| format!("{name}: {e}"))?;
                if s != expected {
                    return Err(format!("{name} over {coeffs:?}: s = {s}, expected {expected}"));
                }
            }
            let _ = write!(details, "{name}={expected} ");
        }
        Ok(details.trim_end().to_string())
    })
}

/// Criterion 3: s_max - s_min = 2 for every corpus knot over Q, F2 and F3.
pub fn s_gap() -> Report {
    catching("s_max - s_min = 2", || {
        for (name, d, _) in corpus::knots_with_s() {
            let cx = khovanov_complex(&d, &Frobenius::bar_natan_1x(), &standard_sign(d.n()))
                .map_err(|e| e.to_string())?;
            for field in [Field::Q, Field::Fp(2), Field::Fp(3)] {
                let (lo, hi) = s_min_max(&cx, field);
                if hi - lo != 2 {
                    return Err(format!("{name} over {field:?}: gap {}", hi - lo));
                }
            }
        }
        Ok("all corpus knots, Q F2 F3".to_string())
    })
}

/// Criterion 4: sign and frame assignment checks.
pub fn sign_frame(n_random: usize) -> Report {
    sign_frame_at(8, 6, n_random)
}

pub fn sign_frame_at(sign_n: usize, pair_n: usize, n_random: usize) -> Report {
    catching("sign/frame assignments", || {
        let mut faces2_checked = 0usize;
        let mut faces3_checked = 0usize;
        for n in 0..=sign_n {
            if !verify_sign(&standard_sign(n)) {
                return Err(format!("standard sign fails at n = {n}"));
            }
            faces2_checked += crate::cube::faces2(n).len();
        }
        for n in 0..=pair_n {
            if verify_frame_pair(&standard_sign(n), &standard_frame(n)) != Ok(true) {
                return Err(format!("standard pair fails at n = {n}"));
            }
            faces3_checked += (1usize << n.saturating_sub(3)) * n * n.saturating_sub(1) * n.saturating_sub(2) / 6;
        }
        for n in [4, 5] {
            for seed in 0..n_random as u64 {
                let s = random_sign(n, seed);
                if !verify_sign(&s) {
                    return Err(format!("random sign invalid at n = {n}"));
                }
                let f = frame_from_sign(&s).map_err(|e| e.to_string())?;
                if verify_frame_pair(&s, &f) != Ok(true) {
                    return Err(format!("constructed frame fails at n = {n}, seed {seed}"));
                }
            }
        }
        Ok(format!(
            "delta s = 1 up to n={sign_n} ({faces2_checked} 2-faces); pairs up to n={pair_n} ({faces3_checked} 3-faces); {n_random} random signs at n=4,5"
        ))
    })
}

/// Deterministic pseudo-random valid sign assignment: s0 plus a coboundary.
pub fn random_sign(n: usize, seed: u64) -> SignAssignment {
    let mut state = seed.wrapping_mul(0x9e3779b97f4a7c15).wrapping_add(1);
    let mut bits = Vec::with_capacity(1 << n);
    for _ in 0..(1usize << n) {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        bits.push(state & 1 == 1);
    }
    let s0 = standard_sign(n);
    SignAssignment::from_fn(n, |e: CubeEdge| {
        s0.value(e) ^ bits[e.base as usize] ^ bits[e.upper() as usize]
    })
}

/// Criterion 5: cube complexes acyclic, skeleton invariants, contraction.
pub fn cube_machinery() -> Report {
    catching("cube machinery", || {
        for n in 1..=6 {
            let c = cube_complex(n, &standard_sign(n)).map_err(|e| e.to_string())?;
            if !c.complex.is_complex() || !homology(&c.complex, Coeffs::Z).is_trivial() {
                return Err(format!("standard cube complex not acyclic at n = {n}"));
            }
        }
        for seed in 0..5 {
            let s = random_sign(6, 1000 + seed);
            let c = cube_complex(6, &s).map_err(|e| e.to_string())?;
            if !homology(&c.complex, Coeffs::Z).is_trivial() {
                return Err(format!("random cube complex not acyclic (seed {seed})"));
            }
        }
        for n in 1..=5 {
            let skel = cube_skeleton(n, &standard_sign(n), &standard_frame(n))
                .map_err(|e| e.to_string())?;
            skel.check_invariants().map_err(|e| format!("skeleton n={n}: {e}"))?;
            // contraction: cancel (w, 0) < (w, 1) pairs in the last coordinate
            let mut cat = skel;
            for w in 0..(1u64 << (n - 1)) as u32 {
                let lower = State::new(w, n);
                let upper = lower.with_bit(n - 1, true);
                let x = cat.object(upper, 0).ok_or("missing object")?;
                let y = cat.object(lower, 0).ok_or("missing object")?;
                let before: usize = cat.m1.values().map(Vec::len).sum();
                cat = cat.handle_cancel(x, y).map_err(|e| e.to_string())?;
                let after: usize = cat.m1.values().map(Vec::len).sum();
                if after > before {
                    return Err(format!("contraction side effects at n = {n}"));
                }
                cat.check_invariants().map_err(|e| format!("after cancel n={n}: {e}"))?;
            }
            if cat.alive_count() != 0 {
                return Err(format!("contraction left {} objects at n = {n}", cat.alive_count()));
            }
        }
        Ok("acyclic n<=6 standard+random; skeleton invariants; contraction n<=5".to_string())
    })
}

/// Criterion 6: conjugating the XY differential by the basis change gives
/// the Bar-Natan differential entrywise.
pub fn basis_change_conjugation(max_crossings: usize) -> Report {
    catching("basis change", || {
        let mut names = String::new();
        for (name, d) in corpus_within(max_crossings) {
            let s = standard_sign(d.n());
            let xy = xy_complex(&d, &s).map_err(|e| e.to_string())?;
            let ox = khovanov_complex(&d, &Frobenius::bar_natan_1x(), &s).map_err(|e| e.to_string())?;
            let iso = basis_change(&xy, &ox);
            if !iso.verify(&xy, &ox) {
                return Err(format!("{name}: conjugation identity fails"));
            }
            let _ = write!(names, "{name} ");
        }
        Ok(names.trim_end().to_string())
    })
}

fn slid_category(d: &LinkDiagram) -> Result<(FlowCategory, CubeModel, FlowCategory), String> {
    let model = CubeModel::from_diagram(d).map_err(|e| e.to_string())?;
    let xy = xy_flow_category(d).map_err(|e| e.to_string())?;
    let bn = cubic_handle_slides(&xy, &model).map_err(|e| e.to_string())?;
    Ok((xy, model, bn))
}

/// Criterion 7: the slide engine agrees with the chain-shape oracles on
/// every corpus diagram with at most `max_crossings` crossings.
pub fn oracle_equivalence(max_crossings: usize) -> Report {
    catching("oracle equivalence", || {
        let mut names = String::new();
        for (name, d) in corpus_within(max_crossings) {
            let (xy, model, bn) = slid_category(&d)?;
            if moduli0_signs(&bn) != chains_oracle_0dim(&xy, &model) {
                return Err(format!("{name}: 0-dimensional moduli differ"));
            }
            if moduli1_counts(&bn) != chains_oracle_1dim(&xy, &model) {
                return Err(format!("{name}: 1-dimensional counts differ"));
            }
            let _ = write!(names, "{name} ");
        }
        Ok(names.trim_end().to_string())
    })
}

/// Criterion 8: the two worked configuration examples.
pub fn configuration_examples() -> Report {
    catching("configuration examples", || {
        // interleaved chords: 6 components before, two intervals after
        let c = ladybug();
        let model = CubeModel::from_configuration(&c).map_err(|e| e.to_string())?;
        let xy = crate::flowcat::xy_category_of_model(&model, &standard_sign(2))
            .map_err(|e| e.to_string())?;
        let bn = cubic_handle_slides(&xy, &model).map_err(|e| e.to_string())?;
        let x = bn.object(State::full(2), 0).ok_or("missing object")?;
        let y = bn.object(State::zero(2), 1).ok_or("missing object")?;
        if moduli1_census(&bn, x, y) != (6, 0) {
            return Err(format!("interleaved: pre census {:?}", moduli1_census(&bn, x, y)));
        }
        let elim = eliminate_quantum_increasing(&bn).map_err(|e| e.to_string())?;
        if moduli1_census(&elim, x, y) != (2, 0) {
            return Err(format!("interleaved: post census {:?}", moduli1_census(&elim, x, y)));
        }
        // parallel arcs: four intervals before, a single circle after
        let c = hopf_config();
        let model = CubeModel::from_configuration(&c).map_err(|e| e.to_string())?;
        let xy = crate::flowcat::xy_category_of_model(&model, &standard_sign(2))
            .map_err(|e| e.to_string())?;
        let bn = cubic_handle_slides(&xy, &model).map_err(|e| e.to_string())?;
        let x = bn.object(State::full(2), 0b00).ok_or("missing object")?;
        let y = bn.object(State::zero(2), 0b11).ok_or("missing object")?;
        if moduli1_census(&bn, x, y) != (4, 0) {
            return Err(format!("parallel: pre census {:?}", moduli1_census(&bn, x, y)));
        }
        let elim = eliminate_quantum_increasing(&bn).map_err(|e| e.to_string())?;
        if moduli1_census(&elim, x, y) != (0, 1) {
            return Err(format!("parallel: post census {:?}", moduli1_census(&elim, x, y)));
        }
        Ok("6 -> 2 intervals; 4 intervals -> 1 circle".to_string())
    })
}

/// Criterion 9: after elimination every nonempty 0-dimensional moduli space
/// is quantum non-increasing, and 1-dimensional components between
/// increasing pairs are circles.
pub fn quantum_elimination(max_crossings: usize) -> Report {
    catching("quantum elimination", || {
        let mut names = String::new();
        for (name, d) in corpus_within(max_crossings) {
            let (_, _, bn) = slid_category(&d)?;
            let elim = eliminate_quantum_increasing(&bn).map_err(|e| e.to_string())?;
            for (&(x, y), pts) in &elim.m0 {
                if !pts.is_empty() && elim.objects[x].grq < elim.objects[y].grq {
                    return Err(format!("{name}: increasing 0-dim moduli survive"));
                }
            }
            for (&(x, y), comps) in &elim.m1 {
                if elim.objects[x].grq < elim.objects[y].grq
                    && !comps.iter().all(crate::flowcat::Comp::is_circle)
                {
                    return Err(format!("{name}: increasing interval at relative grading 2"));
                }
            }
            // surviving arrows match the Bar-Natan differential
            let direct = khovanov_complex(&d, &Frobenius::bar_natan_1x(), &standard_sign(d.n()))
                .map_err(|e| e.to_string())?;
            if elim.cochain_complex().d != direct.d {
                return Err(format!("{name}: surviving moduli differ from the differential"));
            }
            let _ = write!(names, "{name} ");
        }
        Ok(names.trim_end().to_string())
    })
}

/// The five scripted move sites of criterion 10.
pub fn move_sites() -> Vec<(&'static str, LinkDiagram, MoveKind)> {
    let tr = corpus::diagram("trefoil_right").unwrap();
    let fe = corpus::diagram("figure_eight").unwrap();
    let hp = corpus::diagram("hopf_positive").unwrap();
    let tl = corpus::diagram("trefoil_left").unwrap();
    let r3_src = parse_pd(crate::cobord::R3_SOURCE).unwrap();
    let r3_dst = parse_pd(crate::cobord::R3_TARGET).unwrap();
    vec![
        ("r1+ trefoil_right e1", tr, MoveKind::R1Pos(R1Site::Edge(1))),
        ("r1- figure_eight e3", fe, MoveKind::R1Neg(R1Site::Edge(3))),
        ("r2 hopf_positive", hp.clone(), {
            let (o, u) = insert_r2_site(&hp).expect("planar poke site");
            MoveKind::R2 { over: o, under: u }
        }),
        ("r2 trefoil_left", tl.clone(), {
            let (o, u) = insert_r2_site(&tl).expect("planar poke site");
            MoveKind::R2 { over: o, under: u }
        }),
        ("r3 braid", r3_src, MoveKind::R3 { target: r3_dst }),
    ]
}

/// Criterion 10: homology and s unchanged under the scripted moves; each
/// move's mapping cone is acyclic.
pub fn move_invariance() -> Report {
    catching("move invariance", || {
        let mut names = String::new();
        for (name, d, mv) in move_sites() {
            let (d2, f) = reidemeister_map(&d, &mv).map_err(|e| format!("{name}: {e}"))?;
            if !f.is_chain_map() {
                return Err(format!("{name}: not a chain map"));
            }
            if !f.cone_is_acyclic() {
                return Err(format!("{name}: cone not acyclic"));
            }
            let h1 = homology(&f.source, Coeffs::Z).nontrivial();
            let h2 = homology(&f.target, Coeffs::Z).nontrivial();
            if h1 != h2 {
                return Err(format!("{name}: homology changed"));
            }
            if d.component_count() == 1 {
                let s1 = s_invariant(&d, Coeffs::Q).map_err(|e| e.to_string())?;
                let s2 = s_invariant(&d2, Coeffs::Q).map_err(|e| e.to_string())?;
                if s1 != s2 {
                    return Err(format!("{name}: s changed {s1} -> {s2}"));
                }
            }
            let _ = write!(names, "[{name}] ");
        }
        Ok(names.trim_end().to_string())
    })
}

/// Criterion 11: the duality map is a chain isomorphism and s is negated
/// under mirroring.
pub fn duality(max_crossings: usize) -> Report {
    catching("duality", || {
        let mut names = String::new();
        for (name, d) in corpus_within(max_crossings) {
            let md = mirror_dual(&d).map_err(|e| format!("{name}: {e}"))?;
            if !md.verify() {
                return Err(format!("{name}: duality map is not a chain isomorphism"));
            }
            let _ = write!(names, "{name} ");
        }
        for (name, d, expected) in corpus::knots_with_s() {
            if d.n() > max_crossings {
                continue;
            }
            let sm = s_invariant(&d.mirror(), Coeffs::Q).map_err(|e| e.to_string())?;
            if sm != -expected {
                return Err(format!("mirror {name}: s = {sm}, expected {}", -expected));
            }
        }
        Ok(names.trim_end().to_string())
    })
}

/// Criterion 12: canonical degrees of three scripted connected cobordisms.
pub fn canonical_degrees() -> Report {
    catching("canonical degrees", || {
        let tr = corpus::diagram("trefoil_right").unwrap();
        // identity cobordism
        check_degrees("identity", &tr, &[], true)?;
        // kink and unkink composite
        let (d2, f1) = reidemeister_map(&tr, &MoveKind::R1Pos(R1Site::Edge(1)))
            .map_err(|e| e.to_string())?;
        let (d3, f2) = reidemeister_map(&d2, &MoveKind::R1Neg(R1Site::Edge(4)))
            .map_err(|e| e.to_string())?;
        let (d4, g1) = reidemeister_map(&d3, &MoveKind::R1Rev(3)).map_err(|e| e.to_string())?;
        let (d5, g2) = reidemeister_map(&d4, &MoveKind::R1Rev(3)).map_err(|e| e.to_string())?;
        let total = f1
            .compose(&f2)
            .and_then(|m| m.compose(&g1))
            .and_then(|m| m.compose(&g2))
            .map_err(|e| e.to_string())?;
        check_degrees_map("kink-unkink", &tr, &d5, &total, &[], true)?;
        // tube: birth then saddle, the identity concordance of the unknot
        let u = corpus::diagram("unknot").unwrap();
        let tube = vec![MoveKind::Cup, MoveKind::SaddleLoops { a: 0, b: 1 }];
        check_degrees("tube", &u, &tube, true)?;
        Ok("identity, kink-unkink, tube".to_string())
    })
}

fn check_degrees(
    name: &str,
    d: &LinkDiagram,
    moves: &[MoveKind],
    strict_diagonal: bool,
) -> Result<(), String> {
    let (end, f) = cobordism_map(d, moves).map_err(|e| format!("{name}: {e}"))?;
    check_degrees_map(name, d, &end, &f, moves, strict_diagonal)
}

fn check_degrees_map(
    name: &str,
    d: &LinkDiagram,
    end: &LinkDiagram,
    f: &crate::cobord::ChainMap,
    moves: &[MoveKind],
    strict_diagonal: bool,
) -> Result<(), String> {
    let picks = [CanonicalPick::Alpha, CanonicalPick::Beta];
    let mut mat = [[0i64; 2]; 2];
    for (i, &a) in picks.iter().enumerate() {
        for (j, &b) in picks.iter().enumerate() {
            mat[i][j] =
                canonical_degree(d, end, f, (a, b), moves).map_err(|e| format!("{name}: {e}"))?;
        }
    }
    let diag = mat[0][0].abs() == 1 && mat[1][1].abs() == 1 && mat[0][1] == 0 && mat[1][0] == 0;
    let anti = mat[0][1].abs() == 1 && mat[1][0].abs() == 1 && mat[0][0] == 0 && mat[1][1] == 0;
    if strict_diagonal {
        if !diag {
            return Err(format!("{name}: pairing matrix {mat:?}"));
        }
    } else if !diag && !anti {
        return Err(format!("{name}: pairing matrix {mat:?}"));
    }
    Ok(())
}

/// Every canonical cycle is killed by the differential and sits in the
/// grading predicted by linking numbers.
pub fn canonical_cycle_checks(max_crossings: usize) -> Report {
    catching("canonical cycles", || {
        for (name, d) in corpus_within(max_crossings) {
            let cx = khovanov_complex(&d, &Frobenius::bar_natan_1x(), &standard_sign(d.n()))
                .map_err(|e| e.to_string())?;
            let cycles = canonical_cycles(&d).map_err(|e| e.to_string())?;
            if cycles.len() != 1 << d.component_count() {
                return Err(format!("{name}: {} cycles", cycles.len()));
            }
            for c in &cycles {
                let v = c.vector(&cx);
                if !crate::homology::apply_differential(&cx, c.gr_h, &v).is_empty() {
                    return Err(format!("{name}: canonical chain is not a cycle"));
                }
                if c.gr_h as i64 != canonical_grading_from_linking(&d, c.orientation) {
                    return Err(format!("{name}: grading mismatch"));
                }
            }
        }
        Ok("cycles verified".to_string())
    })
}

/// Named suites for the command line.
pub fn run_suite(name: &str, max_crossings: usize) -> Option<Vec<Report>> {
    let all = |mc: usize| -> Vec<Report> {
        vec![
            structure_theorem(mc),
            s_values(),
            s_gap(),
            sign_frame(100),
            cube_machinery(),
            basis_change_conjugation(mc),
            oracle_equivalence(mc.min(6)),
            configuration_examples(),
            quantum_elimination(mc),
            move_invariance(),
            duality(mc),
            canonical_degrees(),
            canonical_cycle_checks(mc),
        ]
    };
    Some(match name {
        "all" => all(max_crossings),
        "structure" => vec![structure_theorem(max_crossings)],
        "s" => vec![s_values(), s_gap()],
        "sign-assignments" | "frame-assignments" => vec![sign_frame(100)],
        "cube" => vec![cube_machinery()],
        "basis-change" => vec![basis_change_conjugation(max_crossings)],
        "oracle" => vec![oracle_equivalence(max_crossings.min(6))],
        "examples" => vec![configuration_examples()],
        "quantum" => vec![quantum_elimination(max_crossings)],
        "moves" => vec![move_invariance()],
        "duality" => vec![duality(max_crossings)],
        "canonical" => vec![canonical_degrees(), canonical_cycle_checks(max_crossings)],
        _ => return None,
    })
}
