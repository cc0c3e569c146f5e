//! The bundled diagram corpus: fixed PD codes used by the verification
//! suites and available by name from the command line.

use crate::diagram::{parse_pd, LinkDiagram};

pub const UNKNOT: &str = include_str!("../corpus/unknot.pd");
pub const TREFOIL_RIGHT: &str = include_str!("../corpus/trefoil_right.pd");
pub const TREFOIL_LEFT: &str = include_str!("../corpus/trefoil_left.pd");
pub const FIGURE_EIGHT: &str = include_str!("../corpus/figure_eight.pd");
pub const HOPF_POSITIVE: &str = include_str!("../corpus/hopf_positive.pd");
pub const HOPF_NEGATIVE: &str = include_str!("../corpus/hopf_negative.pd");
pub const T25: &str = include_str!("../corpus/t25.pd");
pub const T34: &str = include_str!("../corpus/t34.pd");
pub const UNLINK2: &str = include_str!("../corpus/unlink2.pd");

pub const NAMES: [&str; 9] = [
    "unknot",
    "trefoil_right",
    "trefoil_left",
    "figure_eight",
    "hopf_positive",
    "hopf_negative",
    "t25",
    "t34",
    "unlink2",
];

pub fn by_name(name: &str) -> Option<&'static str> {
    match name {
        "unknot" => Some(UNKNOT),
        "trefoil_right" => Some(TREFOIL_RIGHT),
        "trefoil_left" => Some(TREFOIL_LEFT),
        "figure_eight" => Some(FIGURE_EIGHT),
        "hopf_positive" => Some(HOPF_POSITIVE),
        "hopf_negative" => Some(HOPF_NEGATIVE),
        "t25" => Some(T25),
        "t34" => Some(T34),
        "unlink2" => Some(UNLINK2),
        _ => None,
    }
}

pub fn diagram(name: &str) -> Option<LinkDiagram> {
    by_name(name).map(|code| parse_pd(code).expect("bundled code parses"))
}

/// All corpus diagrams, knots first.
pub fn all() -> Vec<(&'static str, LinkDiagram)> {
    NAMES.iter().map(|&n| (n, diagram(n).unwrap())).collect()
}

/// The corpus knots with their expected s-invariants.
pub fn knots_with_s() -> Vec<(&'static str, LinkDiagram, i32)> {
    [
        ("unknot", 0),
        ("trefoil_right", 2),
        ("trefoil_left", -2),
        ("figure_eight", 0),
        ("t25", 4),
        ("t34", 6),
    ]
    .into_iter()
    .map(|(n, s)| (n, diagram(n).unwrap(), s))
    .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corpus_parses() {
        for (name, d) in all() {
            assert!(d.component_count() >= 1, "{name}");
        }
        let right = diagram("trefoil_right").unwrap();
        assert_eq!(right.n_plus(), 3);
        let left = diagram("trefoil_left").unwrap();
        assert_eq!(left.n_minus(), 3);
        assert_eq!(diagram("figure_eight").unwrap().writhe(), 0);
        assert_eq!(diagram("hopf_positive").unwrap().linking_number(0, 1).unwrap(), 1);
        assert_eq!(diagram("hopf_negative").unwrap().linking_number(0, 1).unwrap(), -1);
        assert_eq!(diagram("t25").unwrap().n_plus(), 5);
        assert_eq!(diagram("t34").unwrap().n_plus(), 8);
    }
}
