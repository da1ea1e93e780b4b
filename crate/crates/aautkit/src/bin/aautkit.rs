//! command-line frontend: exploration, reports, and the acceptance suites.
//!
//! exit codes: 0 success, 1 suite failure, 2 resource cap, 3 undecided
//! (budget exhausted), 64 usage, 65 parse.

use std::fs;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use aautkit::aaut::{AautError, AlmostAutomorphism, Classification};
use aautkit::cremona::{naive_closure, pgl2_parity_census, parity_suite, Bsgs, Fq, Permutation};
use aautkit::cube::{ball, CubeError, CubeVertex};
use aautkit::median::{fixed_region, random_median_graph, Action, GraphJson, MedianGraph};
use aautkit::simplicial::interval_complex;
use aautkit::tree::AdmissibleTree;
use aautkit::verify;

const EXIT_SUITE_FAIL: u8 = 1;
const EXIT_CAP: u8 = 2;
const EXIT_UNDECIDED: u8 = 3;
const EXIT_USAGE: u8 = 64;
const EXIT_PARSE: u8 = 65;

/// conventions embedded in every report, for reproducibility
fn conventions() -> serde_json::Value {
    json!({
        "planarOrder": "addresses in lexicographic order, children 0..d-1 left to right",
        "fieldModuli": {"F4": "t^2+t+1", "F8": "t^3+t+1", "F9": "t^2+1"},
        "pointOrder": "projective points normalized to leading 1, lexicographic",
    })
}

#[derive(Parser)]
#[command(name = "aautkit", version, about = "exact computations with tree almost automorphisms")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Dot,
}

#[derive(Subcommand)]
enum Cmd {
    /// BFS-explore a ball around the base vertex of the cube complex
    Explore {
        #[arg(long, default_value_t = 2)]
        d: u16,
        #[arg(long, default_value_t = 2)]
        radius: usize,
        #[arg(long, default_value_t = 100_000)]
        cap: usize,
        /// basename for output files ({out}.json, {out}.dot)
        #[arg(long)]
        out: Option<String>,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// check the descending link of a height-h vertex against I(d,h)
    Link {
        #[arg(long, default_value_t = 2)]
        d: u16,
        #[arg(long)]
        height: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
    /// report on the interval complex I(p,q): components, f-vector, homology
    Ipq {
        #[arg(long)]
        p: usize,
        #[arg(long)]
        q: usize,
        /// also compute integral homology up to this dimension
        #[arg(long)]
        homology: Option<usize>,
        #[arg(long, default_value_t = 200_000)]
        cap: usize,
    },
    /// classify an element (JSON file) as elliptic or translation
    Classify {
        input: String,
        #[arg(long, default_value_t = 64)]
        budget: usize,
    },
    /// parity of an element (JSON file)
    Parity { input: String },
    /// fixed region of a group action on a median graph
    Fixpoint {
        /// JSON file {"graph": {...}, "action": {...}}; omitted = random demo
        input: Option<String>,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
    /// finite-field projective plane reports for one q
    Cremona {
        #[arg(long)]
        q: u16,
        #[arg(long, default_value_t = 40)]
        samples: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
    /// run an acceptance suite
    Verify {
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long, default_value_t = 2024)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            // help/version requests are successes, everything else is usage
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    ExitCode::SUCCESS
                }
                _ => ExitCode::from(EXIT_USAGE),
            };
        }
    };
    match run(cli.cmd) {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}

fn run(cmd: Cmd) -> Result<ExitCode, String> {
    match cmd {
        Cmd::Explore { d, radius, cap, out, format } => cmd_explore(d, radius, cap, out, format),
        Cmd::Link { d, height, seed } => cmd_link(d, height, seed),
        Cmd::Ipq { p, q, homology, cap } => cmd_ipq(p, q, homology, cap),
        Cmd::Classify { input, budget } => cmd_classify(&input, budget),
        Cmd::Parity { input } => cmd_parity(&input),
        Cmd::Fixpoint { input, seed } => cmd_fixpoint(input.as_deref(), seed),
        Cmd::Cremona { q, samples, seed } => cmd_cremona(q, samples, seed),
        Cmd::Verify { suite, seed } => cmd_verify(&suite, seed),
    }
}

fn cmd_explore(
    d: u16,
    radius: usize,
    cap: usize,
    out: Option<String>,
    format: Format,
) -> Result<ExitCode, String> {
    if d < 2 {
        return Err("--d must be at least 2".into());
    }
    if radius > 6 {
        return Err("--radius must be at most 6".into());
    }
    if cap == 0 {
        return Err("--cap must be positive".into());
    }
    let bl = match ball(&CubeVertex::base(d, d), radius, cap) {
        Ok(b) => b,
        Err(CubeError::CapExceeded(n)) => {
            eprintln!("explored {n} vertices before hitting the cap {cap}");
            return Ok(ExitCode::from(EXIT_CAP));
        }
        Err(e) => return Err(e.to_string()),
    };
    let mut report = bl.to_json();
    report["conventions"] = conventions();
    let json = serde_json::to_string_pretty(&report).map_err(|e| e.to_string())?;
    let dot = bl.to_dot();
    if let Some(base) = out {
        fs::write(format!("{base}.json"), &json).map_err(|e| e.to_string())?;
        fs::write(format!("{base}.dot"), &dot).map_err(|e| e.to_string())?;
        println!("wrote {base}.json and {base}.dot ({} vertices)", bl.vertices.len());
    } else {
        match format {
            Format::Json => println!("{json}"),
            Format::Dot => println!("{dot}"),
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_link(d: u16, height: usize, seed: u64) -> Result<ExitCode, String> {
    if d < 2 {
        return Err("--d must be at least 2".into());
    }
    if height == 0 || height > 9 {
        return Err("--height must be between 1 and 9".into());
    }
    if (height as i64 - 1).rem_euclid(d as i64 - 1) != 0 {
        return Err(format!(
            "infeasible leaf count: no admissible tree of arity {d} has {height} leaves"
        ));
    }
    let mut t = AdmissibleTree::trivial(d, d);
    while t.leaf_count() < height {
        let l = t.leaves_ordered()[0].clone();
        t = t.expand(&l).map_err(|e| e.to_string())?;
    }
    let v = CubeVertex::new(t, AlmostAutomorphism::identity(d, d)).map_err(|e| e.to_string())?;
    let model = interval_complex(d as usize, height);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let verdict = verify::descending_matches(&v, d as usize, &mut rng);
    let report = json!({
        "d": d,
        "height": height,
        "seed": seed,
        "fVector": model.f_vector(),
        "components": model.connected_components(),
        "pass": verdict.is_ok(),
        "detail": verdict.clone().err(),
        "conventions": conventions(),
    });
    println!("{}", serde_json::to_string_pretty(&report).map_err(|e| e.to_string())?);
    Ok(if verdict.is_ok() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_SUITE_FAIL)
    })
}

fn cmd_ipq(p: usize, q: usize, homology: Option<usize>, cap: usize) -> Result<ExitCode, String> {
    if p == 0 || q == 0 {
        return Err("--p and --q must be positive".into());
    }
    let k = interval_complex(p, q);
    let mut report = json!({
        "p": p,
        "q": q,
        "vertices": k.vertex_count(),
        "fVector": k.f_vector(),
        "components": k.connected_components(),
        "flag": k.is_flag().is_ok(),
        "conventions": conventions(),
    });
    if let Some(dim) = homology {
        match k.homology(dim, cap) {
            Ok(h) => {
                report["betti"] = json!(h.betti);
                report["torsion"] = json!(h.torsion);
            }
            Err(e) => {
                eprintln!("homology skipped: {e}");
                return Ok(ExitCode::from(EXIT_CAP));
            }
        }
    }
    println!("{}", serde_json::to_string_pretty(&report).map_err(|e| e.to_string())?);
    Ok(ExitCode::SUCCESS)
}

fn read_element(path: &str) -> Result<AlmostAutomorphism, ExitCode> {
    let text = fs::read_to_string(path).map_err(|e| {
        eprintln!("error: cannot read {path}: {e}");
        ExitCode::from(EXIT_PARSE)
    })?;
    serde_json::from_str(&text).map_err(|e| {
        eprintln!("error: {path}: {e}");
        ExitCode::from(EXIT_PARSE)
    })
}

fn cmd_classify(input: &str, budget: usize) -> Result<ExitCode, String> {
    let g = match read_element(input) {
        Ok(g) => g,
        Err(code) => return Ok(code),
    };
    let (report, code) = match g.classify(budget) {
        Ok(Classification::Elliptic { witness }) => (
            json!({
                "type": "elliptic",
                "witnessLeaves": witness.leaves_ordered().iter().map(|a| a.to_string()).collect::<Vec<_>>(),
            }),
            ExitCode::SUCCESS,
        ),
        Ok(Classification::Translation { cone, exponent, image }) => (
            json!({
                "type": "translation",
                "cone": cone.to_string(),
                "exponent": exponent,
                "image": image.to_string(),
            }),
            ExitCode::SUCCESS,
        ),
        Err(AautError::BudgetExceeded(b)) => (
            json!({"type": "undecided", "budget": b}),
            ExitCode::from(EXIT_UNDECIDED),
        ),
        Err(e) => return Err(e.to_string()),
    };
    println!("{}", serde_json::to_string_pretty(&report).map_err(|e| e.to_string())?);
    Ok(code)
}

fn cmd_parity(input: &str) -> Result<ExitCode, String> {
    let g = match read_element(input) {
        Ok(g) => g,
        Err(code) => return Ok(code),
    };
    let report = match g.parity() {
        Ok(p) => json!({"parity": p}),
        Err(e) => json!({"parity": null, "reason": e.to_string()}),
    };
    println!("{}", serde_json::to_string_pretty(&report).map_err(|e| e.to_string())?);
    Ok(ExitCode::SUCCESS)
}

fn cmd_fixpoint(input: Option<&str>, seed: u64) -> Result<ExitCode, String> {
    let (g, action, source) = match input {
        Some(path) => {
            #[derive(serde::Deserialize)]
            struct In {
                graph: GraphJson,
                action: Action,
            }
            let text = match fs::read_to_string(path) {
                Ok(t) => t,
                Err(e) => {
                    eprintln!("error: cannot read {path}: {e}");
                    return Ok(ExitCode::from(EXIT_PARSE));
                }
            };
            let parsed: In = match serde_json::from_str(&text) {
                Ok(p) => p,
                Err(e) => {
                    eprintln!("error: {path}: {e}");
                    return Ok(ExitCode::from(EXIT_PARSE));
                }
            };
            let g = MedianGraph::from_json(&parsed.graph).map_err(|e| e.to_string())?;
            (g, parsed.action, json!(path))
        }
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (g, action) = random_median_graph(&mut rng, 6, 4, 2);
            (g, action, json!({"random": {"seed": seed}}))
        }
    };
    let report = fixed_region(&g, &action).map_err(|e| e.to_string())?;
    let out = json!({
        "source": source,
        "vertices": g.vertex_count(),
        "generators": action.generators.iter().map(|(n, _)| n).collect::<Vec<_>>(),
        "report": report,
        "conventions": conventions(),
    });
    println!("{}", serde_json::to_string_pretty(&out).map_err(|e| e.to_string())?);
    Ok(ExitCode::SUCCESS)
}

fn cmd_cremona(q: u16, samples: usize, seed: u64) -> Result<ExitCode, String> {
    let f = Fq::new(q).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let census = pgl2_parity_census(&f);
    let suite = parity_suite(&f, &mut rng, samples).map_err(|e| e.to_string())?;
    let closure = if q <= 3 {
        let gens: Vec<Permutation> = aautkit::cremona::gl3_generators(&f)
            .into_iter()
            .map(|m| aautkit::cremona::induced_permutation(&f, &aautkit::cremona::ProjMap::Linear(m)))
            .collect::<Result<_, _>>()
            .map_err(|e: aautkit::cremona::CremonaError| e.to_string())?;
        let n = (q * q + q + 1) as usize;
        let bsgs = Bsgs::new(n, &gens);
        let naive = naive_closure(&gens, 1_000_000).map(|s| s.len());
        json!({"bsgsOrder": bsgs.order().to_string(), "naiveOrder": naive})
    } else {
        json!(null)
    };
    let report = json!({
        "q": q,
        "seed": seed,
        "planePoints": (q * q + q + 1),
        "pgl2": {"order": census.group_order, "allEven": census.all_even},
        "paritySuite": suite,
        "pgl3Closure": closure,
        "conventions": conventions(),
    });
    println!("{}", serde_json::to_string_pretty(&report).map_err(|e| e.to_string())?);
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(suite: &str, seed: u64) -> Result<ExitCode, String> {
    let Some(ids) = verify::suite_criteria(suite) else {
        return Err(format!(
            "unknown suite {suite:?} (use trees, aaut, cube, simplicial, median, cremona, all)"
        ));
    };
    let results = verify::run_selected(seed, &ids);
    let pass = results.iter().all(|r| r.pass);
    for r in &results {
        eprintln!(
            "{} {:2} {:<30} ({:6.2}s) {}",
            if r.pass { "PASS" } else { "FAIL" },
            r.id,
            r.name,
            r.seconds,
            r.details
        );
    }
    let report = json!({
        "suite": suite,
        "seed": seed,
        "pass": pass,
        "criteria": results,
        "conventions": conventions(),
    });
    println!("{}", serde_json::to_string_pretty(&report).map_err(|e| e.to_string())?);
    Ok(if pass { ExitCode::SUCCESS } else { ExitCode::from(EXIT_SUITE_FAIL) })
}
