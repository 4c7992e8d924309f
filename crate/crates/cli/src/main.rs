//! Batch interface: parse spec/solution JSON, run verification, solving,
//! population, factorization and connection checks, emit one JSON report to
//! standard output.
//!
//! Exit codes: 0 when every check passes, 1 on mathematical failure (nonzero
//! residual, unequal chains, no solutions found), 2 on usage or document
//! errors.

use clap::{Parser, Subcommand};
use qqsys_core::backlund::{odd_step_slnm, populate, weyl_swap, StepKind};
use qqsys_core::bethe::{residual_vector, solve_bethe, SolverConfig};
use qqsys_core::json::{
    chain_to_json, connection_to_json, parse_roots, parse_solution_doc, parse_spec,
    poly_to_strings, scalar_to_string, to_canonical_string, ChainFactorJson, DiagnosticJson,
    RatFuncJson, ReportJson, RootsJson, SolutionJson, SpecJson,
};
use qqsys_core::operconn::{build_miura_sl2, check_mp_block, check_z_twisted_sl2};
use qqsys_core::psdo::{build_r, chains_equal};
use qqsys_core::qqsystem::{
    build_f, check_nondegenerate, residual_pq, residual_qq, GreySource, NodeSource,
};
use qqsys_core::ratfunc::RatFunc;
use qqsys_core::rootdata::NodeColor;
use qqsys_core::{ExactSolution, ExactSpec};
use serde_json::json;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

#[derive(Parser)]
#[command(
    name = "qqsys",
    about = "Exact verification and numerical solving for qq/pq-systems of Lie superalgebras",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Verify a qq-solution against a spec (identically-zero residuals).
    Verify {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        solution: PathBuf,
    },
    /// Verify a pq-solution: differential and product equations.
    VerifyPq {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        solution: PathBuf,
    },
    /// Emit the Bethe-equation descriptors generated by a spec.
    BetheGen {
        #[arg(long)]
        spec: PathBuf,
    },
    /// Solve the Bethe system by multi-start damped Newton iteration.
    BetheSolve {
        #[arg(long)]
        spec: PathBuf,
        /// Target degree of q_plus per node, comma separated, e.g. "1,0".
        #[arg(long)]
        degrees: String,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long, default_value_t = 64)]
        starts: usize,
        #[arg(long, default_value_t = 60)]
        max_iter: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Evaluate Bethe residuals at supplied roots.
    BetheCheck {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        roots: PathBuf,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
    /// Fold reflection steps along a word, verifying every intermediate.
    Populate {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        solution: PathBuf,
        /// Node indices, e.g. "1 2 1".
        #[arg(long)]
        word: String,
    },
    /// Build the operator factorization, fold steps, compare R against R^w.
    RopCheck {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        solution: PathBuf,
        #[arg(long)]
        word: Option<String>,
    },
    /// Check the Cartan and 2x2 block equations with supplied p data.
    OperCheck {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        solution: PathBuf,
        #[arg(long)]
        p: PathBuf,
    },
}

struct Outcome {
    pass: bool,
    diagnostics: Vec<DiagnosticJson>,
    payload: Option<serde_json::Value>,
}

#[derive(Debug)]
struct CliError(String);

impl<E: std::error::Error> From<E> for CliError {
    fn from(e: E) -> Self {
        CliError(e.to_string())
    }
}

fn read(path: &PathBuf) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError(format!("cannot read {}: {e}", path.display())))
}

fn load_spec(path: &PathBuf) -> Result<ExactSpec, CliError> {
    Ok(parse_spec(&read(path)?)?)
}

fn load_qq_solution(path: &PathBuf) -> Result<ExactSolution, CliError> {
    Ok(parse_solution_doc(&read(path)?)?.to_qq_solution()?)
}

fn parse_word(word: &str) -> Result<Vec<usize>, CliError> {
    word.split(|c: char| c.is_whitespace() || c == ',')
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<usize>()
                .map_err(|_| CliError(format!("bad word entry: {t}")))
        })
        .collect()
}

fn diag(node: Option<usize>, detail: impl Into<String>) -> DiagnosticJson {
    DiagnosticJson {
        node,
        detail: detail.into(),
    }
}

// ---------------------------------------------------------------------------
// Command handlers
// ---------------------------------------------------------------------------

fn cmd_verify(spec: &PathBuf, solution: &PathBuf) -> Result<Outcome, CliError> {
    let spec = load_spec(spec)?;
    let sol = load_qq_solution(solution)?;
    let residuals = residual_qq(&spec, &sol)?;
    let mut diagnostics = Vec::new();
    let mut pass = true;
    for (i, r) in residuals.iter().enumerate() {
        if r.is_zero() {
            diagnostics.push(diag(Some(i + 1), "residual 0"));
        } else {
            pass = false;
            diagnostics.push(diag(Some(i + 1), format!("residual {r}")));
        }
    }
    let report = check_nondegenerate(&spec, &sol)?;
    for v in &report.violations {
        diagnostics.push(diag(
            Some(v.node),
            format!("nondegeneracy: {} (witness {})", v.clause, v.witness),
        ));
    }
    Ok(Outcome {
        pass,
        diagnostics,
        payload: Some(json!({ "nondegenerate": report.is_nondegenerate() })),
    })
}

fn cmd_verify_pq(spec: &PathBuf, solution: &PathBuf) -> Result<Outcome, CliError> {
    let spec = load_spec(spec)?;
    let sol = parse_solution_doc(&read(solution)?)?.to_pq_solution()?;
    let residuals = residual_pq(&spec, &sol)?;
    let mut diagnostics = Vec::new();
    let mut pass = true;
    for (i, r) in residuals.iter().enumerate() {
        let node = Some(i + 1);
        match &r.differential {
            Some(d) if d.is_zero() => diagnostics.push(diag(node, "differential residual 0")),
            Some(d) => {
                pass = false;
                diagnostics.push(diag(node, format!("differential residual {d}")));
            }
            None => diagnostics.push(diag(node, "no differential equation (grey node)")),
        }
        if r.product.is_zero() {
            diagnostics.push(diag(node, "product residual 0"));
        } else {
            pass = false;
            diagnostics.push(diag(node, format!("product residual {}", r.product)));
        }
    }
    Ok(Outcome {
        pass,
        diagnostics,
        payload: None,
    })
}

fn cmd_bethe_gen(spec: &PathBuf) -> Result<Outcome, CliError> {
    let spec = load_spec(spec)?;
    let two = qqsys_core::Rat::from_integer(2.into());
    let diagram = spec.diagram();
    let mut nodes = Vec::new();
    for node in diagram.nodes() {
        let color = diagram.color(node)?;
        let pairing = scalar_to_string(&spec.pairing(node)?);
        let entry = match spec.source(node) {
            NodeSource::Even { l, .. } => {
                let mut exponents = serde_json::Map::new();
                for j in diagram.nodes() {
                    if j == node {
                        continue;
                    }
                    let a_ji = diagram.cartan(j, node)?.clone();
                    if a_ji == qqsys_core::Rat::from_integer(0.into()) {
                        continue;
                    }
                    let desc = match (color, diagram.color(j)?) {
                        (NodeColor::White, NodeColor::White) => {
                            json!({ "base": "q_plus", "exponent": (-a_ji).to_string() })
                        }
                        (NodeColor::White, NodeColor::Black) => {
                            json!({ "base": "q_plus", "exponent": (-(a_ji / two.clone())).to_string() })
                        }
                        (NodeColor::White, NodeColor::Grey) => {
                            json!({ "base": "q_fraction", "exponent": a_ji.to_string() })
                        }
                        (NodeColor::Black, NodeColor::White) => {
                            json!({ "base": "q_plus", "exponent": (-(a_ji * two.clone())).to_string() })
                        }
                        (NodeColor::Black, NodeColor::Black) => {
                            json!({ "base": "q_plus", "exponent": (-a_ji).to_string() })
                        }
                        (NodeColor::Black, NodeColor::Grey) => {
                            json!({ "base": "q_fraction", "exponent": (a_ji * two.clone()).to_string() })
                        }
                        (NodeColor::Grey, _) => unreachable!("grey handled below"),
                    };
                    exponents.insert(j.to_string(), desc);
                }
                json!({
                    "node": node,
                    "kind": "even",
                    "pairing": pairing,
                    "l": RatFuncJson::from_ratfunc(l),
                    "exponents": exponents,
                    "equation": "pairing + [F'/F](w) - sum_{l'!=l} 2/(w_l - w_l') = 0",
                })
            }
            NodeSource::Grey(GreySource::Explicit(p)) => json!({
                "node": node,
                "kind": "odd",
                "pairing": pairing,
                "lambda_tilde": poly_to_strings(p),
                "equation": "lambda_tilde(w) = 0, solved by division",
            }),
            NodeSource::Grey(_) => json!({
                "node": node,
                "kind": "odd",
                "pairing": pairing,
                "lambda_tilde": "deferred",
                "equation": "[d/dz log(source argument)](w) = 0, solved by division",
            }),
        };
        nodes.push(entry);
    }
    Ok(Outcome {
        pass: true,
        diagnostics: vec![diag(None, format!("{} equations generated", nodes.len()))],
        payload: Some(json!({ "nodes": nodes })),
    })
}

fn cmd_bethe_solve(
    spec: &PathBuf,
    degrees: &str,
    config: SolverConfig,
) -> Result<Outcome, CliError> {
    let spec = load_spec(spec)?;
    let degrees: Vec<usize> = degrees
        .split(',')
        .map(|t| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| CliError(format!("bad degree entry: {t}")))
        })
        .collect::<Result<_, _>>()?;
    let out = solve_bethe(&spec, &degrees, &config)?;
    let pass = !out.solutions.is_empty();
    let diagnostics = vec![diag(
        None,
        format!(
            "{} distinct solutions from {} starts ({} converged, {} stalled)",
            out.solutions.len(),
            out.starts_run,
            out.converged,
            out.stalled
        ),
    )];
    let payload = json!({
        "solutions": out
            .solutions
            .iter()
            .map(RootsJson::from_roots)
            .collect::<Vec<_>>(),
        "config": { "tol": config.tol, "starts": config.starts,
                    "max_iter": config.max_iter, "seed": config.seed },
    });
    Ok(Outcome {
        pass,
        diagnostics,
        payload: Some(payload),
    })
}

fn cmd_bethe_check(spec: &PathBuf, roots: &PathBuf, tol: f64) -> Result<Outcome, CliError> {
    let spec = load_spec(spec)?;
    let roots = parse_roots(&read(roots)?)?.to_roots();
    let cspec = spec.to_complex();
    let residuals = residual_vector(&cspec, &roots)?;
    let max = residuals.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let pass = max <= tol;
    Ok(Outcome {
        pass,
        diagnostics: vec![diag(
            None,
            format!("max |residual| = {max:.3e} (tol {tol:.1e})"),
        )],
        payload: Some(json!({ "max_residual": max })),
    })
}

fn step_record_json(step: &qqsys_core::backlund::PopulationStep) -> serde_json::Value {
    json!({
        "node": step.node,
        "kind": match step.kind {
            StepKind::EvenReflection => "even-reflection",
            StepKind::OddReflection => "odd-reflection",
        },
        "scale": step.scale.as_ref().map(scalar_to_string),
        "t_before": step
            .t_before
            .as_ref()
            .map(|ts| ts.iter().map(poly_to_strings).collect::<Vec<_>>()),
        "t_after": step
            .t_after
            .as_ref()
            .map(|ts| ts.iter().map(poly_to_strings).collect::<Vec<_>>()),
    })
}

fn cmd_populate(spec: &PathBuf, solution: &PathBuf, word: &str) -> Result<Outcome, CliError> {
    let spec = load_spec(spec)?;
    let sol = load_qq_solution(solution)?;
    let word = parse_word(word)?;
    let pop = populate(&spec, &sol, &word);
    let entries: Vec<serde_json::Value> = pop
        .entries
        .iter()
        .enumerate()
        .map(|(k, e)| {
            json!({
                "word_prefix": e.word_prefix,
                "spec": SpecJson::from_spec(&e.spec),
                "solution": SolutionJson::from_qq_solution(&e.solution),
                "transform_record": if k == 0 {
                    serde_json::Value::Null
                } else {
                    step_record_json(&pop.steps[k - 1])
                },
            })
        })
        .collect();
    let mut diagnostics = vec![diag(
        None,
        format!("{} of {} steps completed", pop.steps.len(), word.len()),
    )];
    if let Some((idx, err)) = &pop.error {
        diagnostics.push(diag(None, format!("step {} failed: {err}", idx + 1)));
    }
    Ok(Outcome {
        pass: pop.completed(),
        diagnostics,
        payload: Some(serde_json::Value::Array(entries)),
    })
}

fn cmd_rop_check(
    spec: &PathBuf,
    solution: &PathBuf,
    word: Option<&str>,
) -> Result<Outcome, CliError> {
    let spec = load_spec(spec)?;
    let sol = load_qq_solution(solution)?;
    let r_before = build_r(&spec, &sol)?;

    let word = match word {
        Some(w) => parse_word(w)?,
        None => Vec::new(),
    };
    let mut cur_spec = spec.clone();
    let mut cur_sol = sol.clone();
    for &node in &word {
        if cur_spec.diagram().color(node)? == NodeColor::Grey {
            let out = odd_step_slnm(&cur_spec, &cur_sol, node)?;
            cur_spec = out.spec;
            cur_sol = out.solution;
        } else {
            let out = weyl_swap(&cur_spec, &cur_sol, node)?;
            cur_spec = out.spec;
            cur_sol = out.solution;
        }
    }
    let r_after = build_r(&cur_spec, &cur_sol)?;
    let equal = chains_equal(&r_before, &r_after)?;
    Ok(Outcome {
        pass: equal,
        diagnostics: vec![diag(
            None,
            if equal {
                "factorizations agree"
            } else {
                "factorizations differ"
            },
        )],
        payload: Some(json!({
            "r": chain_to_json(&r_before)
                .into_iter()
                .collect::<Vec<ChainFactorJson>>(),
            "r_w": chain_to_json(&r_after)
                .into_iter()
                .collect::<Vec<ChainFactorJson>>(),
        })),
    })
}

fn cmd_oper_check(spec: &PathBuf, solution: &PathBuf, p: &PathBuf) -> Result<Outcome, CliError> {
    let spec = load_spec(spec)?;
    let sol = load_qq_solution(solution)?;
    let p_data = parse_solution_doc(&read(p)?)?.to_mp_data()?;
    let diagram = spec.diagram();
    let mut diagnostics = Vec::new();
    let mut pass = true;
    for node in diagram.nodes() {
        let ok = check_mp_block(&spec, &sol, &p_data, node)?;
        pass &= ok;
        diagnostics.push(diag(
            Some(node),
            if ok {
                "block equations hold"
            } else {
                "block equations fail"
            },
        ));
    }

    // rank-one even families also admit the full matrix check
    let mut payload = serde_json::Map::new();
    if diagram.rank() == 1 && diagram.color(1)? != NodeColor::Grey {
        let pair = sol.pair(1);
        let q_plus_frac = RatFunc::from_poly(pair.q_plus().clone());
        let u = &RatFunc::constant(spec.zeta(1).clone())
            - &q_plus_frac
                .log_derivative()
                .map_err(qqsys_core::qqsystem::QqError::Poly)?;
        let lambda = build_f(&spec, &sol, 1)?;
        let conn = build_miura_sl2(&u, &lambda);
        let q = pair.fraction();
        let p_frac = p_data[0].fraction()?;
        let twisted = check_z_twisted_sl2(&conn, spec.zeta(1), &q, &p_frac)?;
        pass &= twisted;
        diagnostics.push(diag(
            Some(1),
            if twisted {
                "matrix Z-twist check holds"
            } else {
                "matrix Z-twist check fails"
            },
        ));
        payload.insert(
            "connection".to_string(),
            serde_json::to_value(connection_to_json(&conn)).expect("serializable"),
        );
    }

    Ok(Outcome {
        pass,
        diagnostics,
        payload: Some(serde_json::Value::Object(payload)),
    })
}

// ---------------------------------------------------------------------------
// Entry point
// ---------------------------------------------------------------------------

fn dispatch(command: &Command) -> (String, Result<Outcome, CliError>) {
    match command {
        Command::Verify { spec, solution } => ("verify".into(), cmd_verify(spec, solution)),
        Command::VerifyPq { spec, solution } => {
            ("verify-pq".into(), cmd_verify_pq(spec, solution))
        }
        Command::BetheGen { spec } => ("bethe-gen".into(), cmd_bethe_gen(spec)),
        Command::BetheSolve {
            spec,
            degrees,
            tol,
            starts,
            max_iter,
            seed,
        } => (
            "bethe-solve".into(),
            cmd_bethe_solve(
                spec,
                degrees,
                SolverConfig {
                    tol: *tol,
                    starts: *starts,
                    max_iter: *max_iter,
                    seed: *seed,
                },
            ),
        ),
        Command::BetheCheck { spec, roots, tol } => {
            ("bethe-check".into(), cmd_bethe_check(spec, roots, *tol))
        }
        Command::Populate {
            spec,
            solution,
            word,
        } => ("populate".into(), cmd_populate(spec, solution, word)),
        Command::RopCheck {
            spec,
            solution,
            word,
        } => (
            "rop-check".into(),
            cmd_rop_check(spec, solution, word.as_deref()),
        ),
        Command::OperCheck { spec, solution, p } => {
            ("oper-check".into(), cmd_oper_check(spec, solution, p))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let start = Instant::now();
    let (command, result) = dispatch(&cli.command);
    match result {
        Ok(outcome) => {
            let report = ReportJson {
                command,
                status: if outcome.pass { "pass" } else { "fail" }.to_string(),
                diagnostics: outcome.diagnostics,
                timing_ms: start.elapsed().as_millis(),
                payload: outcome.payload,
            };
            print!("{}", to_canonical_string(&report));
            if outcome.pass {
                ExitCode::from(0)
            } else {
                ExitCode::from(1)
            }
        }
        Err(CliError(message)) => {
            let report = ReportJson {
                command,
                status: "error".to_string(),
                diagnostics: vec![DiagnosticJson {
                    node: None,
                    detail: message,
                }],
                timing_ms: start.elapsed().as_millis(),
                payload: None,
            };
            print!("{}", to_canonical_string(&report));
            ExitCode::from(2)
        }
    }
}
