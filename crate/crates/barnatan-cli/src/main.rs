//! Command line front end: complexes, homology, s-invariants, canonical
//! classes, flow categories, move scripts, verification suites and exports.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use barnatan::cobord::{self, ChainMap, MoveKind, R1Site};
use barnatan::complex::{khovanov_complex, xy_complex, Basis, ChainComplex, Frobenius};
use barnatan::corpus;
use barnatan::cube::{standard_frame, standard_sign, SignAssignment};
use barnatan::diagram::{parse_pd, LinkDiagram};
use barnatan::flowcat::{
    cubic_handle_slides, eliminate_quantum_increasing, xy_flow_category, CubeModel, FlowCategory,
};
use barnatan::homology::{canonical_cycles, homology, mirror_dual, s_invariant, Coeffs};
use barnatan::verify;

#[derive(Parser)]
#[command(name = "barnatan", version, about = "Bar-Natan complexes, homology and s-invariants for link diagrams")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Input {
    /// inline PD code, e.g. "X[1,4,2,5] X[3,6,4,1] X[5,2,6,3]"
    #[arg(long)]
    pd: Option<String>,

    /// bundled diagram name (unknot, trefoil_right, trefoil_left,
    /// figure_eight, hopf_positive, hopf_negative, t25, t34, unlink2)
    #[arg(long)]
    knot: Option<String>,

    /// path to a PD code file
    #[arg(long)]
    file: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum CoeffArg {
    #[value(name = "z", alias = "Z")]
    Z,
    #[value(name = "q", alias = "Q")]
    Q,
    #[value(name = "f2", alias = "F2")]
    F2,
    #[value(name = "f3", alias = "F3")]
    F3,
}

impl From<CoeffArg> for Coeffs {
    fn from(c: CoeffArg) -> Coeffs {
        match c {
            CoeffArg::Z => Coeffs::Z,
            CoeffArg::Q => Coeffs::Q,
            CoeffArg::F2 => Coeffs::F2,
            CoeffArg::F3 => Coeffs::F3,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum BasisArg {
    #[value(name = "1x")]
    OneX,
    Xy,
}

#[derive(Subcommand)]
enum Command {
    /// Build a chain complex and print its ranks (or export it)
    Complex {
        #[command(flatten)]
        input: Input,
        #[arg(long, value_enum, default_value = "1x")]
        basis: BasisArg,
        #[arg(long, default_value_t = 1)]
        h: i64,
        #[arg(long, default_value_t = 0)]
        t: i64,
        /// sign assignment: "standard" or "file:<path>" (JSON)
        #[arg(long, default_value = "standard")]
        sign: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Homology groups of the Bar-Natan complex
    Homology {
        #[command(flatten)]
        input: Input,
        #[arg(long, value_enum, default_value = "z")]
        coeffs: CoeffArg,
        /// sign assignment: "standard" or "file:<path>" (JSON)
        #[arg(long, default_value = "standard")]
        sign: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// The s-invariant of a knot diagram
    S {
        #[command(flatten)]
        input: Input,
        /// fields to evaluate (default: Q, F2, F3)
        #[arg(long, value_enum)]
        coeffs: Vec<CoeffArg>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Canonical cycles and classes
    Canonical {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Flow category census (XY by default)
    Flowcat {
        #[command(flatten)]
        input: Input,
        /// perform the cubic handle slides
        #[arg(long)]
        slides: bool,
        /// also eliminate quantum-increasing moduli
        #[arg(long)]
        eliminate: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Apply a move script (diagram moves or flow-category moves)
    Moves {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        script: PathBuf,
    },
    /// Run a verification suite
    Verify {
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long, default_value_t = 8)]
        max_crossings: usize,
        /// cube dimension for the sign/frame suite
        #[arg(long)]
        n: Option<usize>,
    },
    /// Export data as JSON
    Export {
        #[command(flatten)]
        input: Input,
        /// what to export: diagram, complex, complex-text, xy-complex,
        /// sign, frame, config
        #[arg(long)]
        what: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Mirror duality data
    Mirror {
        #[command(flatten)]
        input: Input,
    },
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Domain(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Domain(m) => write!(f, "{m}"),
        }
    }
}

fn domain<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Domain(e.to_string())
}

fn load(input: &Input) -> Result<LinkDiagram, CliError> {
    let sources = [input.pd.is_some(), input.knot.is_some(), input.file.is_some()];
    if sources.iter().filter(|&&b| b).count() != 1 {
        return Err(CliError::Usage("exactly one of --pd, --knot, --file is required".into()));
    }
    let text = if let Some(pd) = &input.pd {
        pd.clone()
    } else if let Some(name) = &input.knot {
        corpus::by_name(name)
            .ok_or_else(|| CliError::Usage(format!("unknown bundled diagram `{name}`")))?
            .to_string()
    } else {
        std::fs::read_to_string(input.file.as_ref().unwrap()).map_err(domain)?
    };
    parse_pd(&text).map_err(domain)
}

fn load_sign(spec: &str, n: usize) -> Result<SignAssignment, CliError> {
    if spec == "standard" {
        return Ok(standard_sign(n));
    }
    if let Some(path) = spec.strip_prefix("file:") {
        let text = std::fs::read_to_string(path).map_err(domain)?;
        let v: serde_json::Value = serde_json::from_str(&text).map_err(domain)?;
        return SignAssignment::from_json(&v)
            .filter(|s| s.n == n)
            .ok_or_else(|| CliError::Domain("sign assignment file does not match the diagram".into()));
    }
    Err(CliError::Usage("--sign expects `standard` or `file:<path>`".into()))
}

fn emit(out: &Option<PathBuf>, content: &str) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, content).map_err(domain),
        None => {
            println!("{content}");
            Ok(())
        }
    }
}

fn complex_summary(cx: &ChainComplex) -> String {
    let mut s = String::new();
    for k in cx.degrees() {
        let _ = writeln!(s, "degree {k:>3}: rank {}", cx.dim(k));
    }
    s
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Complex { input, basis, h, t, sign, out } => {
            let d = load(&input)?;
            let s = load_sign(&sign, d.n())?;
            let cx = match basis {
                BasisArg::OneX => {
                    let frob = barnatan::complex::frobenius(h, t, Basis::OneX).map_err(domain)?;
                    khovanov_complex(&d, &frob, &s).map_err(domain)?
                }
                BasisArg::Xy => xy_complex(&d, &s).map_err(domain)?,
            };
            emit(&out, &serde_json::to_string_pretty(&cx.to_json()).map_err(domain)?)?;
            if out.is_some() {
                print!("{}", complex_summary(&cx));
            }
            Ok(())
        }
        Command::Homology { input, coeffs, sign, out } => {
            let d = load(&input)?;
            let s = load_sign(&sign, d.n())?;
            let cx = khovanov_complex(&d, &Frobenius::bar_natan_1x(), &s).map_err(domain)?;
            let h = homology(&cx, coeffs.into());
            if let Some(path) = out {
                let json = serde_json::json!({
                    "schema": 1,
                    "coeffs": format!("{:?}", Coeffs::from(coeffs)),
                    "groups": h.groups.iter().map(|(k, g)| {
                        serde_json::json!({
                            "degree": k,
                            "rank": g.rank,
                            "torsion": g.torsion.iter().map(|t| t.to_string()).collect::<Vec<_>>(),
                        })
                    }).collect::<Vec<_>>(),
                });
                emit(&Some(path), &serde_json::to_string_pretty(&json).map_err(domain)?)?;
            } else {
                print!("{}", h.to_text());
            }
            Ok(())
        }
        Command::S { input, coeffs, out } => {
            let d = load(&input)?;
            let fields = if coeffs.is_empty() {
                vec![CoeffArg::Q, CoeffArg::F2, CoeffArg::F3]
            } else {
                coeffs
            };
            let mut values = serde_json::Map::new();
            for c in fields {
                let coeffs: Coeffs = c.into();
                if coeffs == Coeffs::Z {
                    return Err(CliError::Usage("the s-invariant needs a field".into()));
                }
                let s = s_invariant(&d, coeffs).map_err(domain)?;
                println!("s[{coeffs:?}] = {s}");
                values.insert(format!("{coeffs:?}"), serde_json::json!(s));
            }
            if let Some(path) = out {
                let json = serde_json::json!({"schema": 1, "s": values});
                std::fs::write(path, serde_json::to_string_pretty(&json).map_err(domain)?)
                    .map_err(domain)?;
            }
            Ok(())
        }
        Command::Canonical { input, out } => {
            let d = load(&input)?;
            let cycles = canonical_cycles(&d).map_err(domain)?;
            let mut text = String::new();
            let mut json = Vec::new();
            for c in &cycles {
                let _ = writeln!(
                    text,
                    "orientation {:0w$b}: state {}, gr_h {}, chain gr_q {}, {} terms",
                    c.orientation,
                    c.state,
                    c.gr_h,
                    c.gr_q_chain,
                    c.chain.len(),
                    w = d.component_count()
                );
                json.push(serde_json::json!({
                    "orientation": c.orientation,
                    "state": c.state.to_string(),
                    "gr_h": c.gr_h,
                    "gr_q_chain": c.gr_q_chain,
                    "terms": c.chain.iter().map(|(&(s, l), &v)| {
                        serde_json::json!({"state": s, "labels": l, "coeff": v})
                    }).collect::<Vec<_>>(),
                }));
            }
            match out {
                Some(path) => emit(
                    &Some(path),
                    &serde_json::to_string_pretty(&serde_json::json!({"schema": 1, "classes": json}))
                        .map_err(domain)?,
                )?,
                None => print!("{text}"),
            }
            Ok(())
        }
        Command::Flowcat { input, slides, eliminate, out } => {
            let d = load(&input)?;
            let model = CubeModel::from_diagram(&d).map_err(domain)?;
            let mut cat = xy_flow_category(&d).map_err(domain)?;
            if slides || eliminate {
                cat = cubic_handle_slides(&cat, &model).map_err(domain)?;
            }
            if eliminate {
                cat = eliminate_quantum_increasing(&cat).map_err(domain)?;
            }
            cat.check_invariants().map_err(CliError::Domain)?;
            let text = category_census(&cat);
            match out {
                Some(path) => emit(&Some(path), &category_json(&cat))?,
                None => print!("{text}"),
            }
            Ok(())
        }
        Command::Moves { input, script } => {
            let d = load(&input)?;
            let text = std::fs::read_to_string(&script).map_err(domain)?;
            if text.lines().any(|l| {
                let t = l.trim();
                t.starts_with("cancel") || t.starts_with("slide") || t.starts_with("whitney")
            }) {
                run_flow_script(&d, &text)
            } else {
                run_diagram_script(&d, &text)
            }
        }
        Command::Verify { suite, max_crossings, n } => {
            let reports = if suite == "frame-assignments" || suite == "sign-assignments" {
                let n = n.unwrap_or(6);
                vec![verify::sign_frame_at(n.max(4), n.min(6), 100)]
            } else {
                verify::run_suite(&suite, max_crossings)
                    .ok_or_else(|| CliError::Usage(format!("unknown suite `{suite}`")))?
            };
            let mut all_pass = true;
            for r in &reports {
                println!("{}", r.line());
                all_pass &= r.pass;
            }
            if all_pass {
                Ok(())
            } else {
                Err(CliError::Domain("verification failed".into()))
            }
        }
        Command::Export { input, what, out } => {
            let d = load(&input)?;
            let content = match what.as_str() {
                "diagram" => serde_json::to_string_pretty(&d.to_json()).map_err(domain)?,
                "complex" => {
                    let cx = cobord::bn_complex(&d).map_err(domain)?;
                    serde_json::to_string_pretty(&cx.to_json()).map_err(domain)?
                }
                "complex-text" => cobord::bn_complex(&d).map_err(domain)?.to_text(),
                "xy-complex" => {
                    let cx = xy_complex(&d, &standard_sign(d.n())).map_err(domain)?;
                    serde_json::to_string_pretty(&cx.to_json()).map_err(domain)?
                }
                "sign" => serde_json::to_string_pretty(&standard_sign(d.n()).to_json())
                    .map_err(domain)?,
                "frame" => serde_json::to_string_pretty(&standard_frame(d.n()).to_json())
                    .map_err(domain)?,
                "config" => {
                    let c = barnatan::resconf::associated_configuration(&d).map_err(domain)?;
                    serde_json::to_string_pretty(&c.to_json()).map_err(domain)?
                }
                other => return Err(CliError::Usage(format!("unknown export kind `{other}`"))),
            };
            emit(&out, &content)
        }
        Command::Mirror { input } => {
            let d = load(&input)?;
            let md = mirror_dual(&d).map_err(domain)?;
            println!("mirror: {}", md.mirror.to_pd_string());
            println!("duality map verified: {}", md.verify());
            let h = homology(&md.mirror_complex, Coeffs::Z);
            print!("mirror homology:\n{}", h.to_text());
            Ok(())
        }
    }
}

fn category_census(cat: &FlowCategory) -> String {
    let mut s = String::new();
    let pts: usize = cat.m0.values().map(Vec::len).sum();
    let mut intervals = 0usize;
    let mut circles = 0usize;
    for comps in cat.m1.values() {
        for c in comps {
            if c.is_circle() {
                circles += 1;
            } else {
                intervals += 1;
            }
        }
    }
    let _ = writeln!(
        s,
        "objects {}, points {}, intervals {}, circles {}",
        cat.alive_count(),
        pts,
        intervals,
        circles
    );
    for i in cat.alive() {
        let o = &cat.objects[i];
        let _ = writeln!(
            s,
            "#{i}: u={} v={:0w$b} gr={} gr_q={}{}",
            o.state,
            o.labels,
            o.gr,
            o.grq,
            if o.reversed { " (reversed)" } else { "" },
            w = 1
        );
    }
    if cat.alive_count() <= 64 {
        for (&(x, y), pts) in &cat.m0 {
            if pts.is_empty() {
                continue;
            }
            let desc: Vec<String> = pts
                .iter()
                .map(|p| format!("{}{}", if p.sign > 0 { '+' } else { '-' }, p.id))
                .collect();
            let _ = writeln!(s, "M(#{x}, #{y}) = {{{}}}", desc.join(", "));
        }
        for (&(x, y), comps) in &cat.m1 {
            if comps.is_empty() {
                continue;
            }
            let (i, c) = (
                comps.iter().filter(|c| !c.is_circle()).count(),
                comps.iter().filter(|c| c.is_circle()).count(),
            );
            let _ = writeln!(s, "M1(#{x}, #{y}): {i} intervals, {c} circles");
        }
    }
    s
}

fn category_json(cat: &FlowCategory) -> String {
    let objects: Vec<serde_json::Value> = cat
        .alive()
        .map(|i| {
            let o = &cat.objects[i];
            serde_json::json!({
                "id": i,
                "state": o.state.to_string(),
                "labels": o.labels,
                "gr": o.gr,
                "gr_q": o.grq,
                "reversed": o.reversed,
            })
        })
        .collect();
    let moduli0: Vec<serde_json::Value> = cat
        .m0
        .iter()
        .filter(|(_, pts)| !pts.is_empty())
        .map(|(&(x, y), pts)| {
            serde_json::json!({
                "from": x,
                "to": y,
                "points": pts.iter().map(|p| serde_json::json!({"id": p.id, "sign": p.sign})).collect::<Vec<_>>(),
            })
        })
        .collect();
    let moduli1: Vec<serde_json::Value> = cat
        .m1
        .iter()
        .filter(|(_, cs)| !cs.is_empty())
        .map(|(&(x, y), cs)| {
            let comps: Vec<serde_json::Value> = cs
                .iter()
                .map(|c| match c {
                    barnatan::flowcat::Comp::Interval { id, framing, ends } => serde_json::json!({
                        "kind": "interval",
                        "id": id,
                        "framing": *framing as u8,
                        "ends": ends.iter().map(|e| serde_json::json!({
                            "mid": e.mid, "lower": e.lower, "upper": e.upper,
                        })).collect::<Vec<_>>(),
                    }),
                    barnatan::flowcat::Comp::Circle { id, framing } => serde_json::json!({
                        "kind": "circle",
                        "id": id,
                        "framing": *framing as u8,
                    }),
                })
                .collect();
            serde_json::json!({"from": x, "to": y, "components": comps})
        })
        .collect();
    serde_json::to_string_pretty(&serde_json::json!({
        "schema": 1,
        "objects": objects,
        "moduli0": moduli0,
        "moduli1": moduli1,
        "moves": cat.log.moves.iter().map(|m| match m {
            barnatan::flowcat::MoveRecord::Cancel { x, y } =>
                serde_json::json!({"move": "cancel", "x": x, "y": y}),
            barnatan::flowcat::MoveRecord::Slide { x, y, eps } =>
                serde_json::json!({"move": "slide", "x": x, "y": y, "eps": eps}),
            barnatan::flowcat::MoveRecord::Whitney { x, y, p, q } =>
                serde_json::json!({"move": "whitney", "x": x, "y": y, "p": p, "q": q}),
        }).collect::<Vec<_>>(),
    }))
    .expect("serializable")
}

fn run_flow_script(d: &LinkDiagram, text: &str) -> Result<(), CliError> {
    let model = CubeModel::from_diagram(d).map_err(domain)?;
    let initial = xy_flow_category(d).map_err(domain)?;
    let mut cat = cubic_handle_slides(&initial, &model).map_err(domain)?;
    for (ln, line) in text.lines().enumerate() {
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.is_empty() || toks[0].starts_with('#') {
            continue;
        }
        let parse_idx = |s: &str| -> Result<usize, CliError> {
            s.parse().map_err(|_| CliError::Usage(format!("line {}: bad object id `{s}`", ln + 1)))
        };
        match toks[0] {
            "cancel" if toks.len() == 3 => {
                cat = cat.handle_cancel(parse_idx(toks[1])?, parse_idx(toks[2])?).map_err(domain)?;
            }
            "slide" if toks.len() == 4 => {
                let eps = match toks[3] {
                    "+1" | "+" => 1,
                    "-1" | "-" => -1,
                    other => return Err(CliError::Usage(format!("line {}: bad sign `{other}`", ln + 1))),
                };
                cat = cat.handle_slide(parse_idx(toks[1])?, parse_idx(toks[2])?, eps).map_err(domain)?;
            }
            "whitney" if toks.len() == 5 => {
                cat = cat
                    .whitney_trick(
                        parse_idx(toks[1])?,
                        parse_idx(toks[2])?,
                        toks[3].parse().map_err(|_| CliError::Usage("bad point id".into()))?,
                        toks[4].parse().map_err(|_| CliError::Usage("bad point id".into()))?,
                    )
                    .map_err(domain)?;
            }
            other => return Err(CliError::Usage(format!("line {}: unknown move `{other}`", ln + 1))),
        }
        cat.check_invariants().map_err(CliError::Domain)?;
    }
    print!("{}", category_census(&cat));
    let before = homology(&cubic_handle_slides(&initial, &model).map_err(domain)?.cochain_complex(), Coeffs::Z);
    let after = homology(&cat.cochain_complex(), Coeffs::Z);
    println!(
        "homology preserved: {}",
        if before.nontrivial() == after.nontrivial() { "yes" } else { "NO" }
    );
    Ok(())
}

fn run_diagram_script(d: &LinkDiagram, text: &str) -> Result<(), CliError> {
    let mut cur = d.clone();
    let mut composite: Option<ChainMap> = Some(ChainMap::identity(d).map_err(domain)?);
    for (ln, line) in text.lines().enumerate() {
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.is_empty() || toks[0].starts_with('#') {
            continue;
        }
        let usage = |m: &str| CliError::Usage(format!("line {}: {m}", ln + 1));
        let edge = |s: &str| -> Result<usize, CliError> {
            s.trim_start_matches('e').parse().map_err(|_| usage("bad edge"))
        };
        let mv = match toks[0] {
            "r1+" if toks.len() == 2 => {
                if let Some(l) = toks[1].strip_prefix('l') {
                    MoveKind::R1Pos(R1Site::Loop(l.parse().map_err(|_| usage("bad loop"))?))
                } else {
                    MoveKind::R1Pos(R1Site::Edge(edge(toks[1])?))
                }
            }
            "r1-" if toks.len() == 2 => {
                if let Some(l) = toks[1].strip_prefix('l') {
                    MoveKind::R1Neg(R1Site::Loop(l.parse().map_err(|_| usage("bad loop"))?))
                } else {
                    MoveKind::R1Neg(R1Site::Edge(edge(toks[1])?))
                }
            }
            "r1rev" if toks.len() == 2 => {
                MoveKind::R1Rev(toks[1].trim_start_matches('c').parse().map_err(|_| usage("bad crossing"))?)
            }
            "r2" if toks.len() == 3 => MoveKind::R2 { over: edge(toks[1])?, under: edge(toks[2])? },
            "r3" => {
                let target = parse_pd(&toks[1..].join(" ")).map_err(domain)?;
                MoveKind::R3 { target }
            }
            "cup" => MoveKind::Cup,
            "cap" if toks.len() == 2 => MoveKind::Cap {
                loop_idx: toks[1].trim_start_matches('l').parse().map_err(|_| usage("bad loop"))?,
            },
            "saddle" if toks.len() == 2 => MoveKind::SaddleCrossing(
                toks[1].trim_start_matches('c').parse().map_err(|_| usage("bad crossing"))?,
            ),
            "saddle" if toks.len() == 3 => {
                let a = toks[1];
                let b = toks[2];
                if let (Some(la), Some(lb)) = (a.strip_prefix('l'), b.strip_prefix('l')) {
                    MoveKind::SaddleLoops {
                        a: la.parse().map_err(|_| usage("bad loop"))?,
                        b: lb.parse().map_err(|_| usage("bad loop"))?,
                    }
                } else if let Some(la) = a.strip_prefix('l') {
                    MoveKind::SaddleLoopEdge {
                        loop_idx: la.parse().map_err(|_| usage("bad loop"))?,
                        edge: edge(b)?,
                    }
                } else {
                    return Err(usage("saddle expects `saddle cN` or loop sites"));
                }
            }
            other => return Err(usage(&format!("unknown move `{other}`"))),
        };
        let (next, f) = match &mv {
            MoveKind::Cup
            | MoveKind::Cap { .. }
            | MoveKind::SaddleCrossing(_)
            | MoveKind::SaddleLoops { .. }
            | MoveKind::SaddleLoopEdge { .. } => cobord::morse_map(&cur, &mv).map_err(domain)?,
            _ => cobord::reidemeister_map(&cur, &mv).map_err(domain)?,
        };
        composite = Some(composite.take().unwrap().compose(&f).map_err(domain)?);
        cur = next;
        println!("{} -> {}", toks.join(" "), cur.to_pd_string());
    }
    let f = composite.unwrap();
    println!("chain map verified: {}", f.is_chain_map());
    println!("q-degree shift: {}", f.q_shift);
    let hs = homology(&f.source, Coeffs::Z);
    let ht = homology(&f.target, Coeffs::Z);
    println!("source homology:\n{}", hs.to_text());
    println!("target homology:\n{}", ht.to_text());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Domain(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(CliError::Usage(m)) => {
            eprintln!("usage error: {m}");
            ExitCode::from(2)
        }
    }
}
