//! `lgraph`: command-line front end for the learning-graph library.
//!
//! Options are `key=value` words after the subcommand (`lgraph count
//! l=2,2 spec=1,1`), optionally merged over a parameter file given with
//! `--params`. Exit codes: 0 success, 2 invalid input, 3 infeasible or
//! failed check, 4 resource cap.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use learning_graph::formats::{KeyValues, Provenance};
use learning_graph::graph::DEFAULT_VERTEX_CAP;
use learning_graph::Error;

#[derive(Parser, Debug)]
#[command(name = "lgraph", version, about = "Learning graphs, adversary certificates and k-distinctness experiments")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    global: Global,
}

#[derive(Args, Debug, Clone)]
pub struct Global {
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Monte Carlo trials.
    #[arg(long, global = true, default_value_t = 100_000)]
    pub trials: u64,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Largest graph that will be built.
    #[arg(long, global = true, default_value_t = DEFAULT_VERTEX_CAP)]
    pub cap_vertices: usize,
    /// Largest input enumeration (and number of input pairs) accepted.
    #[arg(long, global = true, default_value_t = 10_000_000)]
    pub cap_inputs: u64,
    /// Numerical tolerance for flow validity and pair sums.
    #[arg(long, global = true, default_value_t = 1e-9)]
    pub tolerance: f64,
    /// Use exact rational arithmetic.
    #[arg(long, global = true)]
    pub exact: bool,
    /// Parameter file of `key=value` words; command-line options win.
    #[arg(long, global = true)]
    pub params: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct Io {
    /// Options as key=value words.
    #[arg(value_name = "KEY=VALUE")]
    pub options: Vec<String>,
    /// Input file.
    #[arg(long = "in")]
    pub input: Option<PathBuf>,
    /// Output file.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Stage exponents for k, and stage sizes when n is given.
    Params(Io),
    /// Subsets of the tuple blocks with a given specification.
    Count(Io),
    /// Expected number of t-subtuples in a random r-subset.
    Expect(Io),
    /// Build a k-distinctness learning graph and write it.
    Build(Io),
    /// Complexity of a graph file.
    Complexity(Io),
    /// Compile a graph file into a dual adversary certificate.
    Certify(Io),
    /// Check every positive/negative pair of a certificate.
    Verify(Io),
    /// Log-log fit of the class-level complexity estimate.
    Scaling(Io),
    /// Concentration tails (martingale or subset type deviation).
    McTail(Io),
    /// Key-vertex flow ratios against type distance.
    FlowRatio(Io),
    /// Group-average the weights and flows of a graph file.
    Symmetrize(Io),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Params(_) => "params",
            Command::Count(_) => "count",
            Command::Expect(_) => "expect",
            Command::Build(_) => "build",
            Command::Complexity(_) => "complexity",
            Command::Certify(_) => "certify",
            Command::Verify(_) => "verify",
            Command::Scaling(_) => "scaling",
            Command::McTail(_) => "mc-tail",
            Command::FlowRatio(_) => "flow-ratio",
            Command::Symmetrize(_) => "symmetrize",
        }
    }

    fn io(&self) -> &Io {
        match self {
            Command::Params(io)
            | Command::Count(io)
            | Command::Expect(io)
            | Command::Build(io)
            | Command::Complexity(io)
            | Command::Certify(io)
            | Command::Verify(io)
            | Command::Scaling(io)
            | Command::McTail(io)
            | Command::FlowRatio(io)
            | Command::Symmetrize(io) => io,
        }
    }
}

/// Everything a command needs: resolved options, paths and global flags.
pub struct Ctx {
    pub command: &'static str,
    pub kv: KeyValues,
    pub input: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub global: Global,
}

impl Ctx {
    pub fn provenance(&self) -> Provenance {
        let g = &self.global;
        let mut config: Vec<(String, String)> = self.kv.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
        config.push(("trials".into(), g.trials.to_string()));
        config.push(("cap-vertices".into(), g.cap_vertices.to_string()));
        config.push(("cap-inputs".into(), g.cap_inputs.to_string()));
        config.push(("tolerance".into(), format!("{:e}", g.tolerance)));
        config.push(("exact".into(), g.exact.to_string()));
        if let Some(p) = &self.input {
            config.push(("in".into(), p.display().to_string()));
        }
        if let Some(p) = &self.out {
            config.push(("out".into(), p.display().to_string()));
        }
        Provenance {
            tool: format!("lgraph {}", env!("CARGO_PKG_VERSION")),
            command: self.command.to_string(),
            config,
            seed: Some(g.seed),
        }
    }
}

/// Failures of a command, mapped onto exit codes.
#[derive(Debug)]
pub enum Failure {
    Lib(Error),
    /// A check ran but its result is outside tolerance.
    Check(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Lib(Error::Io(e))
    }
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Check(_) => 3,
            Failure::Lib(e) => match e {
                Error::Input(_) | Error::Parse { .. } | Error::Io(_) | Error::Csv(_) => 2,
                Error::Infeasible(_)
                | Error::Degenerate(_)
                | Error::Construction(_)
                | Error::TransportUnsound(_) => 3,
                Error::Resource(_) | Error::Sampler(_) => 4,
            },
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Lib(e) => write!(f, "{e}"),
            Failure::Check(m) => write!(f, "check failed: {m}"),
        }
    }
}

fn resolve(cli: Cli) -> Result<(Command, Ctx), Failure> {
    let io = cli.command.io().clone();
    let mut kv = KeyValues::from_tokens(io.options.iter().map(String::as_str))?;
    if let Some(path) = &cli.global.params {
        let text = std::fs::read_to_string(path)?;
        kv = KeyValues::parse(&text)?.merged(kv);
    }
    let ctx = Ctx {
        command: cli.command.name(),
        kv,
        input: io.input,
        out: io.out,
        global: cli.global,
    };
    Ok((cli.command, ctx))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(jobs) = cli.global.jobs {
        if jobs == 0 {
            eprintln!("error: --jobs must be at least 1");
            return ExitCode::from(2);
        }
        rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global().ok();
    }
    let result = resolve(cli).and_then(|(command, ctx)| {
        eprint!("{}", ctx.provenance().header());
        match command {
            Command::Params(_) => commands::params(&ctx),
            Command::Count(_) => commands::count(&ctx),
            Command::Expect(_) => commands::expect(&ctx),
            Command::Build(_) => commands::build(&ctx),
            Command::Complexity(_) => commands::complexity(&ctx),
            Command::Certify(_) => commands::certify(&ctx),
            Command::Verify(_) => commands::verify(&ctx),
            Command::Scaling(_) => commands::scaling(&ctx),
            Command::McTail(_) => commands::mc_tail(&ctx),
            Command::FlowRatio(_) => commands::flow_ratio(&ctx),
            Command::Symmetrize(_) => commands::symmetrize(&ctx),
        }
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code())
        }
    }
}
