//! Acceptance suite: one test per criterion, each printing a pass/fail line.

use barnatan::verify;

fn run(n: usize, r: verify::Report) {
    println!("criterion {n:2}: {}", r.line());
    assert!(r.pass, "criterion {n}: {}", r.details);
}

#[test]
fn c01_structure_theorem() {
    run(1, verify::structure_theorem(8));
}

#[test]
fn c02_s_invariants() {
    run(2, verify::s_values());
}

#[test]
fn c03_s_gap() {
    run(3, verify::s_gap());
}

#[test]
fn c04_sign_frame_assignments() {
    run(4, verify::sign_frame(100));
}

#[test]
fn c05_cube_machinery() {
    run(5, verify::cube_machinery());
}

#[test]
fn c06_basis_change() {
    run(6, verify::basis_change_conjugation(8));
}

#[test]
fn c07_oracle_equivalence() {
    run(7, verify::oracle_equivalence(6));
}

#[test]
fn c08_configuration_examples() {
    run(8, verify::configuration_examples());
}

#[test]
fn c09_quantum_elimination() {
    run(9, verify::quantum_elimination(8));
}

#[test]
fn c10_move_invariance() {
    run(10, verify::move_invariance());
}

#[test]
fn c11_duality() {
    run(11, verify::duality(8));
}

#[test]
fn c12_canonical_degrees() {
    run(12, verify::canonical_degrees());
}
