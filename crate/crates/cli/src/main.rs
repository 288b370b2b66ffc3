//! `lkw`: batch front end to the workbench.
//!
//! Exit codes: 0 on success or a true verdict, 1 on a false verdict
//! (`equiv`, `dsep`, `locsep`, `devmem`), 2 on bad input.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use lkw_core::closure::{ClosureConfig, ClosureOperator};
use lkw_core::corpus::{all_digraphs, random_structures};
use lkw_core::dag::Dag;
use lkw_core::invariant::{build_invariant_with, InvariantStructure};
use lkw_core::logic::{ifp_stages, ExpandedFormula};
use lkw_core::pebble::{pebble_game_equivalent_capped, refine_joint, RefineOptions, DEFAULT_POSITION_CAP};
use lkw_core::program::{
    build_construction_graph, deviation_member, eval_star, locally_separated, CommandOperator, ConstructionGraph,
    PartialType, ProgramSpec, RunTrace, Strength, DEFAULT_SUBSET_LIMIT,
};
use lkw_core::tableau::{amalgamate, cap_search, check_axioms, realize, to_tableau, Tableau, TableauTheory};
use lkw_core::FiniteStructure;

#[derive(Parser)]
#[command(name = "lkw", version, about = "k-variable finite model theory workbench")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Stable k-type partition of a structure.
    Types {
        structure: PathBuf,
        #[arg(short)]
        k: usize,
        /// Lift the tuple-space cap.
        #[arg(long)]
        allow_large: bool,
    },
    /// Decide ≡^k of two structures.
    Equiv {
        left: PathBuf,
        right: PathBuf,
        #[arg(short)]
        k: usize,
        /// Decide with the pebble game instead of refinement.
        #[arg(long)]
        game: bool,
        /// Lift the tuple-space cap.
        #[arg(long)]
        allow_large: bool,
    },
    /// Canonical invariant dump.
    Invariant {
        structure: PathBuf,
        #[arg(short)]
        k: usize,
        /// Lift the tuple-space cap.
        #[arg(long)]
        allow_large: bool,
    },
    /// Game tableau of a structure.
    Tableau {
        structure: PathBuf,
        #[arg(short)]
        k: usize,
        /// Invariant dump to type against; defaults to the structure's own.
        #[arg(long)]
        theory: Option<PathBuf>,
    },
    /// Structure realized by a tableau.
    Realize {
        tableau: PathBuf,
        #[arg(long)]
        theory: PathBuf,
    },
    /// Check the axioms G1-G6.
    Check {
        tableau: PathBuf,
        #[arg(long)]
        theory: PathBuf,
    },
    /// Amalgamate two tableaux over a common one.
    Amalgamate {
        a: PathBuf,
        m0: PathBuf,
        m1: PathBuf,
        #[arg(long)]
        theory: PathBuf,
        /// Images of A's elements in M0.
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        i0: Vec<usize>,
        /// Images of A's elements in M1.
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        i1: Vec<usize>,
    },
    /// Search for a finite model of the theory extending a tableau.
    Cap {
        tableau: PathBuf,
        #[arg(long)]
        theory: PathBuf,
        #[arg(long)]
        max_size: usize,
    },
    /// Inflationary fixed-point stages.
    Ifp {
        structure: PathBuf,
        /// Formula over the signature plus `X`, free in x0..x{r-1}.
        #[arg(long)]
        formula: String,
        #[arg(short)]
        r: usize,
    },
    /// d-separation query on a DAG file.
    Dsep {
        dag: PathBuf,
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        x: Vec<String>,
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        y: Vec<String>,
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        z: Vec<String>,
    },
    /// Run a program in a world.
    RunProgram(RunArgs),
    /// Construction graph of a run.
    Cg(RunArgs),
    /// Local separation inside the construction graph of a run.
    Locsep {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        a: Vec<usize>,
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        b: Vec<usize>,
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        c: Vec<usize>,
        #[arg(long, default_value_t = DEFAULT_SUBSET_LIMIT)]
        limit: usize,
    },
    /// Deviation membership of the run's base set.
    Devmem {
        #[command(flatten)]
        run: RunArgs,
        /// Parameters of the type, all in B ∪ C.
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        params: Vec<usize>,
        /// Tuple whose type over the parameters is meant.
        #[arg(long, value_delimiter = ',', required = true)]
        witness: Vec<usize>,
        #[arg(long, value_enum, default_value_t = StrengthArg::Qf)]
        strength: StrengthArg,
        /// Variable count for `--strength colour`.
        #[arg(long, default_value_t = 2)]
        colour_k: usize,
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        b: Vec<usize>,
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        c: Vec<usize>,
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        d: Vec<usize>,
        #[arg(long, default_value_t = DEFAULT_SUBSET_LIMIT)]
        limit: usize,
    },
    /// Write a corpus of structure files.
    Corpus {
        #[arg(value_enum)]
        kind: CorpusKind,
        #[arg(long)]
        out: PathBuf,
        /// Vertex count (all-digraphs) or maximum size (random).
        #[arg(short)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 10)]
        count: usize,
    },
}

#[derive(Args)]
struct RunArgs {
    program: PathBuf,
    world: PathBuf,
    /// Start set A_{-1}.
    #[arg(long, value_delimiter = ',', required = true)]
    start: Vec<usize>,
    #[arg(long, value_enum, default_value_t = ClosureArg::Trivial)]
    closure: ClosureArg,
    /// Variables used by `--closure count`.
    #[arg(long, default_value_t = 2)]
    closure_k: usize,
    #[arg(long, default_value_t = 1)]
    threshold: usize,
    #[arg(long, default_value_t = 64)]
    max_steps: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum ClosureArg {
    Trivial,
    Count,
}

#[derive(Clone, Copy, ValueEnum)]
enum StrengthArg {
    Qf,
    Colour,
}

#[derive(Clone, Copy, ValueEnum)]
enum CorpusKind {
    AllDigraphs,
    Random,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("{}: cannot read", path.display()))
}

/// Parses a file, naming it in any error.
fn load<T>(path: &Path, parse: impl Fn(&str) -> lkw_core::Result<T>) -> Result<T> {
    parse(&read(path)?).map_err(|e| anyhow!("{}: {e}", path.display()))
}

fn theory(path: &Path) -> Result<TableauTheory> {
    let inv = load(path, InvariantStructure::parse)?;
    TableauTheory::from_invariant(inv).map_err(|e| anyhow!("{}: {e}", path.display()))
}

fn refine_opts(allow_large: bool) -> RefineOptions {
    let mut opts = RefineOptions::default();
    if allow_large {
        opts.tuple_cap = None;
    }
    opts
}

fn set(v: &[usize]) -> BTreeSet<usize> {
    v.iter().copied().collect()
}

struct Run {
    spec: ProgramSpec,
    world: FiniteStructure,
    closure: ClosureOperator,
    trace: RunTrace,
}

impl RunArgs {
    fn execute(&self) -> Result<Run> {
        let spec = load(&self.program, ProgramSpec::parse)?;
        let world = load(&self.world, FiniteStructure::parse)?;
        let cfg = match self.closure {
            ClosureArg::Trivial => ClosureConfig::trivial(),
            ClosureArg::Count => ClosureConfig::k_type_count(self.closure_k, self.threshold)?,
        };
        let closure = ClosureOperator::new(&world, cfg)?;
        let op = CommandOperator::new(&spec, &world).map_err(|e| anyhow!("{}: {e}", self.program.display()))?;
        let name = self.world.display().to_string();
        let trace = eval_star(&set(&self.start), &spec, &op, &world, &name, &closure, self.max_steps)?;
        Ok(Run { spec, world, closure, trace })
    }

    fn graph(&self) -> Result<(Run, ConstructionGraph)> {
        let run = self.execute()?;
        let cg = build_construction_graph(&run.trace, &run.spec, &run.world, &run.closure)?;
        Ok((run, cg))
    }
}

fn verdict(ok: bool, yes: &str, no: &str) -> (String, u8) {
    if ok {
        (format!("{yes}\n"), 0)
    } else {
        (format!("{no}\n"), 1)
    }
}

fn fmt_stage(s: &BTreeSet<Vec<usize>>) -> String {
    s.iter()
        .map(|t| format!("({})", t.iter().map(|e| e.to_string()).collect::<Vec<_>>().join(",")))
        .collect::<Vec<_>>()
        .join(" ")
}

fn run(cmd: Cmd) -> Result<(String, u8)> {
    Ok(match cmd {
        Cmd::Types { structure, k, allow_large } => {
            let m = load(&structure, FiniteStructure::parse)?;
            (refine_joint(&[&m], k, refine_opts(allow_large))?.dump(0), 0)
        }
        Cmd::Equiv { left, right, k, game, allow_large } => {
            let (m, n) = (load(&left, FiniteStructure::parse)?, load(&right, FiniteStructure::parse)?);
            let eq = if game {
                let cap = if allow_large { u128::MAX } else { DEFAULT_POSITION_CAP };
                pebble_game_equivalent_capped(&m, &n, k, cap)?
            } else {
                let p = refine_joint(&[&m, &n], k, refine_opts(allow_large))?;
                p.realized(0) == p.realized(1)
            };
            verdict(eq, "equivalent", "not equivalent")
        }
        Cmd::Invariant { structure, k, allow_large } => {
            let m = load(&structure, FiniteStructure::parse)?;
            (build_invariant_with(&m, k, refine_opts(allow_large))?.to_string(), 0)
        }
        Cmd::Tableau { structure, k, theory: th } => {
            let m = load(&structure, FiniteStructure::parse)?;
            let th = match th {
                Some(p) => theory(&p)?,
                None => TableauTheory::of_structure(&m, k)?,
            };
            if th.k() != k {
                bail!("theory has k = {} but -k {k} was given", th.k());
            }
            (to_tableau(&m, &th)?.to_string(), 0)
        }
        Cmd::Realize { tableau, theory: th } => {
            let t = load(&tableau, Tableau::parse)?;
            (realize(&t, &theory(&th)?)?.to_string(), 0)
        }
        Cmd::Check { tableau, theory: th } => {
            let t = load(&tableau, Tableau::parse)?;
            (check_axioms(&t, &theory(&th)?).to_string(), 0)
        }
        Cmd::Amalgamate { a, m0, m1, theory: th, i0, i1 } => {
            let th = theory(&th)?;
            let (a, m0, m1) = (load(&a, Tableau::parse)?, load(&m0, Tableau::parse)?, load(&m1, Tableau::parse)?);
            let r = amalgamate(&a, &m0, &m1, &i0, &i1, &th)?;
            let mut out = String::new();
            for step in &r.log {
                writeln!(out, "# {step}")?;
            }
            for (name, g) in [("g0", &r.g0), ("g1", &r.g1)] {
                let pairs: Vec<String> = g.pairs().iter().map(|(x, y)| format!("{x}:{y}")).collect();
                writeln!(out, "# {name} {}", pairs.join(" "))?;
            }
            out.push_str(&r.c.to_string());
            (out, 0)
        }
        Cmd::Cap { tableau, theory: th, max_size } => {
            let t = load(&tableau, Tableau::parse)?;
            match cap_search(&t, &theory(&th)?, max_size)? {
                Some(found) => (found.to_string(), 0),
                None => (format!("no model up to size {max_size}\n"), 0),
            }
        }
        Cmd::Ifp { structure, formula, r } => {
            let m = load(&structure, FiniteStructure::parse)?;
            let psi = ExpandedFormula::parse(&formula, r).context("--formula")?;
            let s = ifp_stages(&m, &psi)?;
            let mut out = String::new();
            for (t, stage) in s.stages().iter().enumerate() {
                writeln!(out, "{}", format!("stage {t} {}", fmt_stage(stage)).trim_end())?;
            }
            writeln!(out, "stabilized {}", s.stabilization_index())?;
            (out, 0)
        }
        Cmd::Dsep { dag, x, y, z } => {
            let d = load(&dag, Dag::parse)?;
            let ids = |v: &[String]| d.indices(&v.iter().map(|s| s.as_str()).collect::<Vec<_>>());
            let sep = d.d_separated(&ids(&x)?, &ids(&y)?, &ids(&z)?)?;
            verdict(sep, "d-separated", "not d-separated")
        }
        Cmd::RunProgram(args) => (args.execute()?.trace.to_string(), 0),
        Cmd::Cg(args) => (args.graph()?.1.to_string(), 0),
        Cmd::Locsep { run, a, b, c, limit } => {
            let (_, cg) = run.graph()?;
            verdict(locally_separated(&cg, &set(&a), &set(&b), &set(&c), limit)?, "locally separated", "not locally separated")
        }
        Cmd::Devmem { run, params, witness, strength, colour_k, b, c, d, limit } => {
            let (r, cg) = run.graph()?;
            let strength = match strength {
                StrengthArg::Qf => Strength::Qf,
                StrengthArg::Colour => Strength::Colour(colour_k),
            };
            let pi = PartialType::new(params, witness, strength);
            let member = deviation_member(&cg, &r.world, &pi, &set(&b), &set(&c), &set(&d), limit)?;
            verdict(member, "member", "not member")
        }
        Cmd::Corpus { kind, out, n, seed, count } => {
            let (structures, prefix, header) = match kind {
                CorpusKind::AllDigraphs => (all_digraphs(n)?, format!("d{n}"), format!("# all digraphs on {n} vertices")),
                CorpusKind::Random => (random_structures(seed, count, n)?, "r".to_string(), format!("# random seed {seed}")),
            };
            fs::create_dir_all(&out).with_context(|| format!("{}: cannot create", out.display()))?;
            let mut listing = format!("{header}\n");
            for (i, m) in structures.iter().enumerate() {
                let path = out.join(format!("{prefix}_{i:05}.str"));
                fs::write(&path, format!("{header}, index {i}\n{m}")).with_context(|| format!("{}: cannot write", path.display()))?;
                writeln!(listing, "{}", path.display())?;
            }
            (listing, 0)
        }
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.cmd) {
        Ok((out, code)) => {
            print!("{out}");
            ExitCode::from(code)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
