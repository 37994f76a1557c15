//! Command-line front end: validation, solving, generation, the Min-2-SAT
//! pipeline, and a small benchmark runner. Reports on stdout are
//! byte-reproducible for a fixed (instance, algorithm, seed); wall time goes
//! to stderr.
//!
//! Exit codes: 0 satisfiable / valid, 1 unsatisfiable / invalid, 2 error.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::csp23;
use crate::induced2::{self, Signs, SymmetricSpec};
use crate::instance::{
    self, assignment_string, parse_instance, serialize_instance, validate_complete, Instance,
};
use crate::kcsp;
use crate::min2sat;
use crate::oracle;
use crate::pac::{self, PacInstance, PacMode};
use crate::reductions::{self, GadgetKind};
use crate::twocsp;
use crate::util::derive_seed;

#[derive(Parser)]
#[command(name = "ccsp", version, about = "solvers and generators for complete CSP instances")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse an instance file and validate completeness (or matching shape).
    Check(CheckArgs),
    /// Decide or enumerate an instance.
    Solve(SolveArgs),
    /// Generate an instance file.
    Gen(GenArgs),
    /// Approximate Min-2-SAT pipeline.
    Min2sat(Min2SatArgs),
    /// Run a solver family across instance sizes, emitting CSV.
    Bench(BenchArgs),
}

#[derive(Args)]
struct PacFlag {
    /// Treat the file as a coloring instance: `--pac <r> <ell> <complete|overcomplete>`.
    #[arg(long, num_args = 3, value_names = ["R", "ELL", "MODE"])]
    pac: Option<Vec<String>>,
}

impl PacFlag {
    fn parse(&self) -> Result<Option<(usize, usize, PacMode)>> {
        let Some(parts) = &self.pac else {
            return Ok(None);
        };
        let r: usize = parts[0].parse().context("--pac r")?;
        let ell: usize = parts[1].parse().context("--pac ell")?;
        let mode = match parts[2].as_str() {
            "complete" => PacMode::Complete,
            "overcomplete" => PacMode::OverComplete,
            other => bail!("unknown mode `{other}` (use complete|overcomplete)"),
        };
        Ok(Some((r, ell, mode)))
    }
}

#[derive(Args)]
struct CheckArgs {
    file: PathBuf,
    #[command(flatten)]
    pac: PacFlag,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, ValueEnum)]
enum Algo {
    Auto,
    Bruteforce,
    Kcsp,
    #[value(name = "3sat")]
    ThreeSat,
    Induced2,
    Csp23,
    Pac43,
    Pac55,
}

#[derive(Args)]
struct SolveArgs {
    file: PathBuf,
    #[arg(long, value_enum, default_value = "auto")]
    algo: Algo,
    /// Emit every solution instead of a single witness.
    #[arg(long)]
    enumerate: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    pac: PacFlag,
}

#[derive(Args)]
struct Min2SatArgs {
    file: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 5000)]
    sdp_iters: usize,
    #[arg(long, default_value_t = 32)]
    trials: usize,
    /// Also compute the exact optimum and the cost ratio (n <= 16).
    #[arg(long)]
    exact: bool,
}

#[derive(Args)]
struct GenArgs {
    #[command(subcommand)]
    family: GenFamily,
}

#[derive(Subcommand)]
enum GenFamily {
    /// Random complete instance with uniform UNSAT tables.
    Random {
        #[arg(long, default_value_t = 2)]
        k: usize,
        #[arg(long, default_value_t = 2)]
        r: usize,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        max_tuples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Complete instance with a symmetric predicate on every clause.
    Symmetric {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 3)]
        k: usize,
        /// Accepted true-literal counts, comma separated (e.g. `1,2`).
        #[arg(long, value_delimiter = ',')]
        s: Vec<usize>,
        #[arg(long, default_value = "positive")]
        signs: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Complete Boolean instance whose unique solution is a random plant.
    Planted {
        #[arg(long, default_value_t = 3)]
        k: usize,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Random coloring instance with per-pair forbidden matchings.
    Pac {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 4)]
        r: usize,
        #[arg(long, default_value_t = 3)]
        l: usize,
        #[arg(long, default_value = "overcomplete")]
        mode: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Pad a DIMACS formula with dummy variables to near-complete density.
    Densify {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 0.5)]
        epsilon: f64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Blow up a DIMACS formula into a complete instance with sampled dummies.
    Product {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 2)]
        t: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Search for a verified reduction gadget.
    Gadget {
        #[arg(long, value_enum)]
        kind: GadgetKindArg,
        #[arg(long, default_value_t = 2)]
        t: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 50)]
        max_tries: usize,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Complete a 3-uniform DIMACS formula into a complete ternary-arity file.
    FromCnf {
        #[arg(long)]
        input: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum GadgetKindArg {
    Pac41,
    Sixpac,
    Csp33,
}

#[derive(Args)]
struct BenchArgs {
    /// Instance family: twosat | threesat | csp23 | pac43.
    #[arg(long)]
    family: String,
    /// Comma-separated instance sizes.
    #[arg(long, value_delimiter = ',')]
    ns: Vec<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Include wall-clock milliseconds (breaks byte reproducibility).
    #[arg(long)]
    time: bool,
}

/// Entry point; returns the process exit code.
pub fn run() -> i32 {
    let cli = Cli::parse();
    let started = Instant::now();
    let outcome = match cli.command {
        Command::Check(args) => cmd_check(args),
        Command::Solve(args) => cmd_solve(args),
        Command::Gen(args) => cmd_gen(args),
        Command::Min2sat(args) => cmd_min2sat(args),
        Command::Bench(args) => cmd_bench(args),
    };
    eprintln!("wall-time-ms {}", started.elapsed().as_millis());
    match outcome {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            2
        }
    }
}

fn read_instance(path: &PathBuf) -> Result<Instance> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))?;
    parse_instance(&text).map_err(|e| anyhow!("{e}"))
}

fn write_output(output: &Option<PathBuf>, content: &str) -> Result<()> {
    match output {
        Some(path) => std::fs::write(path, content)
            .with_context(|| format!("writing {}", path.display()))?,
        None => print!("{content}"),
    }
    Ok(())
}

fn cmd_check(args: CheckArgs) -> Result<i32> {
    let inst = read_instance(&args.file)?;
    let report = match args.pac.parse()? {
        Some((r, ell, mode)) => {
            if inst.r() != r {
                bail!("file alphabet {} does not match --pac r {}", inst.r(), r);
            }
            let p = PacInstance::from_instance(&inst, ell).map_err(|e| anyhow!("{e}"))?;
            pac::validate_pac(&p, mode)
        }
        None => validate_complete(&inst),
    };
    print!("{report}");
    Ok(if report.ok() { 0 } else { 1 })
}

/// Header lines shared by solver reports; identical inputs and seed give
/// byte-identical bodies.
fn report_header(algo: &str, inst: &Instance, seed: u64) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "c algorithm {algo}");
    let _ = writeln!(out, "c instance {}", inst.digest());
    let _ = writeln!(out, "c seed {seed}");
    out
}

fn pick_auto(inst: &Instance, enumerate: bool) -> Result<Algo> {
    if inst.k() == 2 && inst.r() == 2 {
        return Ok(Algo::Kcsp); // dispatched to the binary enumerator below
    }
    if inst.r() == 2 && inst.k() >= 3 {
        if !enumerate {
            if let Ok(true) = induced2::is_induced2(inst) {
                return Ok(Algo::Induced2);
            }
        }
        return Ok(Algo::Kcsp);
    }
    if inst.k() == 2 && inst.r() == 3 {
        return Ok(Algo::Csp23);
    }
    bail!(
        "no solver for arity {} over {} labels; use --algo bruteforce",
        inst.k(),
        inst.r()
    )
}

fn cmd_solve(args: SolveArgs) -> Result<i32> {
    let inst = read_instance(&args.file)?;
    let pac_meta = args.pac.parse()?;
    let algo = match (args.algo, &pac_meta) {
        (Algo::Auto, Some((4, _, _))) => Algo::Pac43,
        (Algo::Auto, Some((5, 5, _))) => Algo::Pac55,
        (Algo::Auto, Some((r, ell, _))) => {
            bail!("no coloring solver for r = {r}, ell = {ell}")
        }
        (Algo::Auto, None) => pick_auto(&inst, args.enumerate)?,
        (a, _) => a,
    };

    let mut body = String::new();
    let mut nodes = 0usize;
    let (sat, witness, solutions): (bool, Option<Vec<u8>>, Option<oracle::SolutionSet>) =
        match algo {
            Algo::Auto => unreachable!("resolved above"),
            Algo::Bruteforce => {
                let sols = oracle::enumerate_bruteforce(&inst).map_err(|e| anyhow!("{e}"))?;
                let witness = sols.iter().next().map(|s| s.to_vec());
                body.push_str(&report_header("bruteforce", &inst, args.seed));
                (!sols.is_empty(), witness, Some(sols))
            }
            Algo::Kcsp if inst.k() == 2 => {
                if inst.r() != 2 {
                    bail!("algorithm mismatch: binary enumerator needs a Boolean instance");
                }
                let e = twocsp::enumerate_complete_2csp(&inst).map_err(|e| anyhow!("{e}"))?;
                nodes = e.decide_calls;
                body.push_str(&report_header("2csp", &inst, args.seed));
                let witness = e.solutions.iter().next().map(|s| s.to_vec());
                (!e.solutions.is_empty(), witness, Some(e.solutions))
            }
            Algo::Kcsp | Algo::ThreeSat => {
                if algo == Algo::ThreeSat && inst.k() != 3 {
                    bail!("algorithm mismatch: 3sat needs arity 3, file has {}", inst.k());
                }
                if inst.k() < 3 {
                    bail!("algorithm mismatch: kcsp needs arity >= 3; auto picks the binary solver");
                }
                let e = kcsp::enumerate_kcsp(&inst).map_err(|e| anyhow!("algorithm mismatch: {e}"))?;
                nodes = e.stats.nodes;
                let name = if algo == Algo::ThreeSat { "3sat" } else { "kcsp" };
                body.push_str(&report_header(name, &inst, args.seed));
                let witness = e.solutions.iter().next().map(|s| s.to_vec());
                (!e.solutions.is_empty(), witness, Some(e.solutions))
            }
            Algo::Induced2 => {
                let d = induced2::decide_induced2(&inst).map_err(|e| anyhow!("algorithm mismatch: {e}"))?;
                body.push_str(&report_header("induced2", &inst, args.seed));
                (d.sat, d.witness, None)
            }
            Algo::Csp23 => {
                let d = csp23::decide_23csp(&inst).map_err(|e| anyhow!("algorithm mismatch: {e}"))?;
                body.push_str(&report_header("csp23", &inst, args.seed));
                (d.sat, d.witness, None)
            }
            Algo::Pac43 | Algo::Pac55 => {
                let (_, ell, _) = pac_meta
                    .ok_or_else(|| anyhow!("coloring solvers need `--pac <r> <ell> <mode>`"))?;
                let p = PacInstance::from_instance(&inst, ell).map_err(|e| anyhow!("{e}"))?;
                let d = if algo == Algo::Pac43 {
                    pac::decide_pac43(&p).map_err(|e| anyhow!("algorithm mismatch: {e}"))?
                } else {
                    pac::decide_pac55(&p).map_err(|e| anyhow!("algorithm mismatch: {e}"))?
                };
                let name = if algo == Algo::Pac43 { "pac43" } else { "pac55" };
                body.push_str(&report_header(name, &inst, args.seed));
                (d.sat, d.witness, None)
            }
        };

    let _ = writeln!(body, "c nodes {nodes}");
    if args.enumerate {
        let sols = solutions
            .ok_or_else(|| anyhow!("--enumerate is not supported by decision-only algorithms"))?;
        let _ = writeln!(body, "c solutions {}", sols.len());
        let _ = writeln!(body, "s {}", if sat { "SATISFIABLE" } else { "UNSATISFIABLE" });
        for line in sols.lines() {
            let _ = writeln!(body, "{line}");
        }
    } else {
        let _ = writeln!(body, "s {}", if sat { "SATISFIABLE" } else { "UNSATISFIABLE" });
        if let Some(w) = witness {
            debug_assert!(inst.satisfied_by(&w));
            let _ = writeln!(body, "v {}", assignment_string(&w));
        }
    }
    print!("{body}");
    Ok(if sat { 0 } else { 1 })
}

fn cmd_min2sat(args: Min2SatArgs) -> Result<i32> {
    let inst = read_instance(&args.file)?;
    let (outcome, solution) = min2sat::min2sat_approx(
        &inst,
        &min2sat::PipelineParams {
            seed: args.seed,
            sdp_iterations: args.sdp_iters,
            trials: args.trials,
        },
    )
    .map_err(|e| anyhow!("{e}"))?;
    let mut body = report_header("min2sat", &inst, args.seed);
    let _ = writeln!(body, "c sdp-objective {:.6}", solution.objective);
    let _ = writeln!(body, "c sdp-converged {}", solution.converged);
    let _ = writeln!(body, "c trials {}", args.trials);
    let _ = writeln!(body, "cost {}", outcome.cost);
    let ids: Vec<String> = outcome.deleted.iter().map(|c| c.to_string()).collect();
    let _ = writeln!(body, "deleted {}", ids.join(" "));
    if let Some(a) = &outcome.assignment {
        let labels: Vec<u8> = a.iter().map(|&b| b as u8).collect();
        let _ = writeln!(body, "assignment {}", assignment_string(&labels));
        let _ = writeln!(body, "assignment-cost {}", outcome.assignment_cost);
    }
    if args.exact {
        if inst.n() > 16 {
            bail!("--exact is capped at n <= 16, file has n = {}", inst.n());
        }
        let (opt, _) = oracle::min_unsat_bruteforce(&inst).map_err(|e| anyhow!("{e}"))?;
        let _ = writeln!(body, "opt {opt}");
        if opt > 0 {
            let _ = writeln!(body, "ratio {:.4}", outcome.cost as f64 / opt as f64);
        } else {
            let _ = writeln!(body, "ratio exact" );
        }
    }
    print!("{body}");
    Ok(0)
}

fn parse_pac_mode(s: &str) -> Result<PacMode> {
    match s {
        "complete" => Ok(PacMode::Complete),
        "overcomplete" => Ok(PacMode::OverComplete),
        other => bail!("unknown mode `{other}`"),
    }
}

fn cmd_gen(args: GenArgs) -> Result<i32> {
    match args.family {
        GenFamily::Random {
            k,
            r,
            n,
            max_tuples,
            seed,
            output,
        } => {
            let inst = instance::random_complete(k, r, n, max_tuples, seed);
            write_output(&output, &serialize_instance(&inst))?;
        }
        GenFamily::Symmetric {
            n,
            k,
            s,
            signs,
            seed,
            output,
        } => {
            let spec = SymmetricSpec::new(k, s.into_iter().collect()).map_err(|e| anyhow!("{e}"))?;
            let signs = match signs.as_str() {
                "positive" => Signs::AllPositive,
                "random" => Signs::Random(derive_seed(seed, "signs")),
                other => bail!("unknown signs mode `{other}` (use positive|random)"),
            };
            let inst =
                induced2::build_symmetric_instance(n, &spec, signs).map_err(|e| anyhow!("{e}"))?;
            write_output(&output, &serialize_instance(&inst))?;
        }
        GenFamily::Planted { k, n, seed, output } => {
            use rand::prelude::*;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let alpha: Vec<u8> = (0..n).map(|_| rng.random_range(0..2) as u8).collect();
            let inst = kcsp::planted_instance(k, &alpha);
            write_output(&output, &serialize_instance(&inst))?;
        }
        GenFamily::Pac {
            n,
            r,
            l,
            mode,
            seed,
            output,
        } => {
            let mode = parse_pac_mode(&mode)?;
            let p = pac::random_pac(n, r, l, mode, seed);
            let report = pac::validate_pac(&p, mode);
            if !report.ok() {
                bail!("generated instance failed validation:\n{report}");
            }
            write_output(&output, &serialize_instance(&pac::pac_to_csp(&p)))?;
        }
        GenFamily::Densify {
            input,
            epsilon,
            output,
        } => {
            let text = std::fs::read_to_string(&input)
                .with_context(|| format!("reading {}", input.display()))?;
            let cnf = reductions::parse_dimacs(&text).map_err(|e| anyhow!("{e}"))?;
            let dense = reductions::densify(&cnf, epsilon).map_err(|e| anyhow!("{e}"))?;
            write_output(&output, &reductions::serialize_dimacs(&dense))?;
        }
        GenFamily::Product {
            input,
            t,
            seed,
            output,
        } => {
            let text = std::fs::read_to_string(&input)
                .with_context(|| format!("reading {}", input.display()))?;
            let cnf = reductions::parse_dimacs(&text).map_err(|e| anyhow!("{e}"))?;
            let dist = reductions::PredicateDistribution::uniform_single_tuple(cnf.k, 2);
            let prod =
                reductions::product_reduction(&cnf, &dist, t, seed).map_err(|e| anyhow!("{e}"))?;
            write_output(&output, &serialize_instance(&prod.instance))?;
        }
        GenFamily::Gadget {
            kind,
            t,
            seed,
            max_tries,
            output,
        } => {
            let kind = match kind {
                GadgetKindArg::Pac41 => GadgetKind::Pac41,
                GadgetKindArg::Sixpac => GadgetKind::SixPac,
                GadgetKindArg::Csp33 => GadgetKind::Csp33,
            };
            match reductions::gadget_search(kind, t, seed, max_tries) {
                Ok(gadget) => {
                    let mut text = String::new();
                    let _ = writeln!(text, "c gadget kind {:?} t {} tries {}", kind, gadget.t, gadget.tries);
                    for p in &gadget.report.properties {
                        let _ = writeln!(text, "c property {} holds {}", p.name, p.holds);
                    }
                    let inst = match (&gadget.csp, &gadget.pac) {
                        (Some(csp), _) => csp.clone(),
                        (None, Some(p)) => pac::pac_to_csp(p),
                        _ => unreachable!("gadget carries a payload"),
                    };
                    text.push_str(&serialize_instance(&inst));
                    write_output(&output, &text)?;
                }
                Err(reductions::GadgetSearchError::NotFound { tries, last }) => {
                    println!("c no verified gadget in {tries} tries");
                    for p in &last.properties {
                        println!("c property {} holds {}", p.name, p.holds);
                    }
                    return Ok(1);
                }
                Err(e) => return Err(anyhow!("{e}")),
            }
        }
        GenFamily::FromCnf { input, output } => {
            let text = std::fs::read_to_string(&input)
                .with_context(|| format!("reading {}", input.display()))?;
            let cnf = reductions::parse_dimacs(&text).map_err(|e| anyhow!("{e}"))?;
            let inst = reductions::cnf_to_complete3sat(&cnf).map_err(|e| anyhow!("{e}"))?;
            write_output(&output, &serialize_instance(&inst))?;
        }
    }
    Ok(0)
}

fn cmd_bench(args: BenchArgs) -> Result<i32> {
    let mut out = String::from("family,n,seed,algorithm,nodes,solutions");
    if args.time {
        out.push_str(",millis");
    }
    out.push('\n');
    for &n in &args.ns {
        let seed = derive_seed(args.seed, &format!("bench-{n}"));
        let started = Instant::now();
        let (algo, nodes, solutions): (&str, usize, usize) = match args.family.as_str() {
            "twosat" => {
                let inst = instance::random_complete(2, 2, n, 1, seed);
                let e = twocsp::enumerate_complete_2csp(&inst).map_err(|e| anyhow!("{e}"))?;
                ("2csp", e.decide_calls, e.solutions.len())
            }
            "threesat" => {
                let inst = instance::random_complete(3, 2, n, 1, seed);
                let e = kcsp::enumerate_kcsp(&inst).map_err(|e| anyhow!("{e}"))?;
                ("kcsp", e.stats.nodes, e.solutions.len())
            }
            "csp23" => {
                let inst = instance::random_complete(2, 3, n, 3, seed);
                let d = csp23::decide_23csp(&inst).map_err(|e| anyhow!("{e}"))?;
                ("csp23", 0, d.sat as usize)
            }
            "pac43" => {
                let p = pac::random_pac(n, 4, 3, PacMode::OverComplete, seed);
                let d = pac::decide_pac43(&p).map_err(|e| anyhow!("{e}"))?;
                ("pac43", 0, d.sat as usize)
            }
            other => bail!("unknown family `{other}` (twosat|threesat|csp23|pac43)"),
        };
        let _ = write!(out, "{},{},{},{},{},{}", args.family, n, seed, algo, nodes, solutions);
        if args.time {
            let _ = write!(out, ",{}", started.elapsed().as_millis());
        }
        out.push('\n');
    }
    print!("{out}");
    Ok(0)
}
