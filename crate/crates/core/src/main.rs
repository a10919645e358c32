use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use vulnscope::assess::{assess, AssessOptions, Verdict};
use vulnscope::flat::ode::{CircadianParams, SocialParams};
use vulnscope::flat::{recover_circadian, recover_social, simulate_ode, OdeKind, Trajectory};
use vulnscope::hds::compose_abstraction;
use vulnscope::ltl::{decode_witness, encode_bmc, sat_solve_with, SatResult, SolverConfig};
use vulnscope::model::{compile, ModelFile};

#[derive(Parser)]
#[command(name = "vulnscope", version, about = "Vulnerability assessment of hybrid systems by finite abstraction and bounded model checking")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the composed finite abstraction and print its size.
    Abstract {
        model: PathBuf,
        /// Write the abstraction as Graphviz DOT.
        #[arg(long)]
        dot: Option<PathBuf>,
        /// Write the abstraction as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Encode one bounded check, solve it and print the verdict.
    Check {
        model: PathBuf,
        #[arg(long)]
        spec: String,
        #[arg(long)]
        bound: Option<usize>,
        /// Write the CNF in DIMACS format.
        #[arg(long)]
        dimacs: Option<PathBuf>,
    },
    /// Run the full assessment and write a report.
    Assess {
        model: PathBuf,
        #[arg(long)]
        spec: String,
        #[arg(long)]
        bound: Option<usize>,
        /// Deepen the bound up to this value, stopping at the first witness.
        #[arg(long)]
        bound_max: Option<usize>,
        #[arg(long)]
        report: Option<PathBuf>,
        /// Write the witness as CSV.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Leave timings out of the report.
        #[arg(long)]
        no_timing: bool,
    },
    /// Integrate an ODE plant and write its trajectory as CSV.
    Simulate {
        model: PathBuf,
        #[arg(long)]
        plant: String,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Recover all states and the input of an ODE plant from its flat output.
    Recover {
        model: PathBuf,
        #[arg(long)]
        plant: String,
        /// Trajectory CSV holding a `time` column and the flat output column.
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

struct Failure(String);

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure(e.to_string())
    }
}

fn load(path: &Path) -> Result<ModelFile, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure(format!("{}: {e}", path.display())))?;
    ModelFile::from_json_str(&text).map_err(|e| Failure(format!("{}: {e}", path.display())))
}

fn write_out(path: &Option<PathBuf>, content: &str) -> Result<(), Failure> {
    match path {
        Some(p) => fs::write(p, content).map_err(|e| Failure(format!("{}: {e}", p.display()))),
        None => match std::io::stdout().write_all(content.as_bytes()) {
            Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(Failure(e.to_string())),
            _ => Ok(()),
        },
    }
}

fn solver_config(model: &ModelFile) -> SolverConfig {
    let mut cfg = SolverConfig { conflict_limit: model.analysis.conflict_limit, ..SolverConfig::default() };
    if let Some(seed) = model.analysis.seed {
        cfg.seed = seed;
    }
    cfg
}

fn bound_of(model: &ModelFile, bound: Option<usize>) -> Result<usize, Failure> {
    bound
        .or(model.analysis.bound)
        .ok_or_else(|| Failure("no bound given: pass --bound or set analysis.bound".into()))
}

fn run(cli: Cli) -> Result<i32, Failure> {
    match cli.command {
        Command::Abstract { model, dot, json } => {
            let m = load(&model)?;
            let compiled = compile(&m)?;
            let ts = compose_abstraction(&compiled.hybrid)?;
            println!("states: {}", ts.num_states());
            println!("edges: {}", ts.num_edges());
            println!("outputs: {}", ts.outputs().len());
            if let Some(p) = dot {
                fs::write(&p, ts.to_dot()).map_err(|e| Failure(format!("{}: {e}", p.display())))?;
            }
            if let Some(p) = json {
                fs::write(&p, ts.to_json_string()).map_err(|e| Failure(format!("{}: {e}", p.display())))?;
            }
            Ok(0)
        }
        Command::Check { model, spec, bound, dimacs } => {
            let m = load(&model)?;
            let k = bound_of(&m, bound)?;
            let text = m.spec(&spec)?;
            let compiled = compile(&m)?;
            let phi = compiled.parse_spec(&spec, text)?;
            let ts = compose_abstraction(&compiled.hybrid)?;
            let enc = encode_bmc(&ts, &phi, k)?;
            if let Some(p) = dimacs {
                fs::write(&p, enc.to_dimacs()).map_err(|e| Failure(format!("{}: {e}", p.display())))?;
            }
            println!("cnf: {} variables, {} clauses", enc.cnf.num_vars(), enc.cnf.num_clauses());
            let (result, _) = sat_solve_with(&enc.cnf, &solver_config(&m));
            let verdict = match result {
                SatResult::Sat(model) => {
                    let w = decode_witness(&enc, &ts, &model)?;
                    for (i, s) in w.trace.steps.iter().enumerate() {
                        println!("  {i}: ({},{}) {}", s.q, s.k, s.abstract_state.as_deref().unwrap_or(""));
                    }
                    if let Some(l) = w.trace.loop_back {
                        println!("  loop back to step {l}");
                    }
                    Verdict::Vulnerable
                }
                SatResult::Unsat => Verdict::NotVulnerableAtBound,
                SatResult::Timeout => Verdict::Timeout,
            };
            println!("verdict: {verdict} (bound {k})");
            Ok(verdict.exit_code())
        }
        Command::Assess { model, spec, bound, bound_max, report, trace, no_timing } => {
            let m = load(&model)?;
            let k = bound_of(&m, bound)?;
            let opts = AssessOptions { bound: k, bound_max, timing: !no_timing, solver: solver_config(&m) };
            let r = assess(&m, &spec, &opts)?;
            if let (Some(p), Some(w)) = (&trace, &r.witness) {
                fs::write(p, w.trace().to_csv()).map_err(|e| Failure(format!("{}: {e}", p.display())))?;
            }
            match &report {
                Some(p) => {
                    fs::write(p, r.to_json_string()).map_err(|e| Failure(format!("{}: {e}", p.display())))?;
                    println!("verdict: {} (bound {})", r.verdict, r.bound);
                }
                None => write_out(&None, &r.to_json_string())?,
            }
            Ok(r.verdict.exit_code())
        }
        Command::Simulate { model, plant, csv } => {
            let m = load(&model)?;
            let traj = simulate_ode(m.ode_plant(&plant)?)?;
            let mut buf = Vec::new();
            traj.write_csv(&mut buf)?;
            write_out(&csv, &String::from_utf8(buf)?)?;
            Ok(0)
        }
        Command::Recover { model, plant, input, csv } => {
            let m = load(&model)?;
            let ode = m.ode_plant(&plant)?;
            let file = fs::File::open(&input).map_err(|e| Failure(format!("{}: {e}", input.display())))?;
            let traj = Trajectory::read_csv(file)?;
            let flat = ode.flat_output();
            let y = traj.column(flat).ok_or_else(|| Failure(format!("input has no `{flat}` column")))?;
            let h = traj.step().ok_or_else(|| Failure("input needs at least two samples".into()))?;
            let t0 = traj.times[0];
            let (names, cols, valid): (Vec<&str>, Vec<Vec<f64>>, _) = match ode.model {
                OdeKind::Social => {
                    let r = recover_social(&y, h, t0, &SocialParams::from_map(&ode.parameters)?)?;
                    (vec!["P", "M", "Lambda"], vec![r.p, r.m, r.lambda], r.valid)
                }
                OdeKind::Circadian => {
                    let p = CircadianParams::from_map(&ode.parameters, ode.readings)?;
                    let r = recover_circadian(&y, h, t0, &p)?;
                    (vec!["C", "P_2", "P_1", "P_0", "M_P", "v_sp"], vec![r.c, r.p2, r.p1, r.p0, r.mp, r.v_sp], r.valid)
                }
            };
            let out = Trajectory {
                names: names.iter().map(|s| s.to_string()).collect(),
                times: traj.times[valid.clone()].to_vec(),
                states: valid.map(|i| cols.iter().map(|c| c[i]).collect()).collect(),
            };
            let mut buf = Vec::new();
            out.write_csv(&mut buf)?;
            write_out(&csv, &String::from_utf8(buf)?)?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(Failure(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
