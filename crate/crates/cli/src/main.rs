use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rotwave::{Error, Result};
use rotwave_cli::{args, commands, RunConfig};

#[derive(Parser)]
#[command(
    name = "rotwave",
    version,
    about = "Rotating and modulated rotating waves on a sphere"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write one trajectory CSV per λ.
    Simulate(RunArgs),
    /// Primary frequency, classification and tip circle per λ, as JSON.
    Frequency(RunArgs),
    /// Compose two rotation vectors in closed form.
    Bch(BchArgs),
    /// Orthogonal resonant drift branch μ*(λ), as JSON.
    Drift(RunArgs),
    /// Compare integrated scenarios with their closed forms.
    Verify(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON run configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    scenario: Option<String>,
    /// Single λ; shorthand for a one-point grid.
    #[arg(long, allow_negative_numbers = true, conflicts_with = "lambda_grid")]
    lambda: Option<String>,
    /// Comma-separated ascending λ values.
    #[arg(long, allow_negative_numbers = true)]
    lambda_grid: Option<String>,
    /// μ, or `lo,hi` for the drift bracket.
    #[arg(long, allow_negative_numbers = true)]
    mu: Option<String>,
    /// Horizon in forcing periods.
    #[arg(long, allow_negative_numbers = true)]
    horizon: Option<String>,
    #[arg(long)]
    samples_per_period: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    rtol: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    atol: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    restart_margin: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print the effective configuration and exit.
    #[arg(long)]
    dump_config: bool,
}

#[derive(Args)]
struct BchArgs {
    /// `x1 x2 x3 y1 y2 y3`, or `x1,x2,x3 y1,y2,y3`.
    #[arg(allow_hyphen_values = true, num_args = 1..)]
    operands: Vec<String>,
    /// Also print ‖e^Z − e^X e^Y‖_F.
    #[arg(long)]
    check: bool,
}

impl RunArgs {
    fn effective(&self, drift: bool) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| {
                    Error::Config(format!("cannot read config {}: {e}", path.display()))
                })?;
                RunConfig::from_json_str(&text)?
            }
            None => RunConfig::default(),
        };
        if let Some(s) = &self.scenario {
            cfg.scenario = s.clone();
        }
        if let Some(l) = &self.lambda {
            cfg.lambda_grid = vec![args::parse_real(l)?];
        }
        if let Some(g) = &self.lambda_grid {
            cfg.lambda_grid = args::parse_real_list(g)?;
        }
        if let Some(m) = &self.mu {
            match args::parse_real_list(m)?.as_slice() {
                [mu] => cfg.mu = *mu,
                [lo, hi] if drift => cfg.mu_bracket = [*lo, *hi],
                _ if drift => return Err(Error::Config("--mu takes mu or lo,hi".into())),
                _ => return Err(Error::Config("--mu takes a single value here".into())),
            }
        }
        if let Some(h) = &self.horizon {
            cfg.horizon = args::parse_real(h)?;
        }
        if let Some(n) = self.samples_per_period {
            cfg.samples_per_period = n;
        }
        if let Some(x) = &self.rtol {
            cfg.integrator.rtol = args::parse_real(x)?;
        }
        if let Some(x) = &self.atol {
            cfg.integrator.atol = args::parse_real(x)?;
        }
        if let Some(x) = &self.restart_margin {
            cfg.integrator.restart_margin = args::parse_real(x)?;
        }
        if let Some(o) = &self.out {
            cfg.out = o.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn run(cli: Cli) -> Result<bool> {
    let (run_args, drift) = match &cli.command {
        Command::Bch(b) => {
            // Hyphenated operands make clap keep a trailing `--check` as a value.
            let check = b.check || b.operands.iter().any(|s| s == "--check");
            let operands: Vec<&String> = b.operands.iter().filter(|s| *s != "--check").collect();
            let (x, y) = args::parse_bch_operands(&operands)?;
            print!("{}", commands::bch_report(&x, &y, check));
            return Ok(true);
        }
        Command::Drift(a) => (a, true),
        Command::Simulate(a) | Command::Frequency(a) | Command::Verify(a) => (a, false),
    };
    let cfg = run_args.effective(drift)?;
    if run_args.dump_config {
        println!("{}", cfg.to_json_pretty());
        return Ok(true);
    }
    match cli.command {
        Command::Simulate(_) => {
            for path in commands::simulate(&cfg)? {
                println!("{}", path.display());
            }
        }
        Command::Frequency(_) => {
            let (path, entries) = commands::frequency(&cfg)?;
            print!("{}", commands::to_json(&entries));
            eprintln!("wrote {}", path.display());
        }
        Command::Drift(_) => {
            let (path, entries) = commands::drift(&cfg)?;
            print!("{}", commands::to_json(&entries));
            eprintln!("wrote {}", path.display());
        }
        Command::Verify(_) => {
            let report = commands::verify(&cfg)?;
            print!("{}", commands::to_json(&report));
            return Ok(report.pass);
        }
        Command::Bch(_) => unreachable!(),
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("error: verification failed");
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
