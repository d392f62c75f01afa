mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use chainswitch_core::experiment::{
    self, ArtifactBundle, ExperimentConfig, OutputFormat, Preset, ProfileSpec, SweepParam,
    ToleranceProfile,
};
use chainswitch_core::Error;

const EXIT_CONFIG: u8 = 1;
const EXIT_NUMERIC: u8 = 2;
const EXIT_TOLERANCE: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "chainswitch", version, about = "Switching dynamics of a site coupled to a semi-infinite chain")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Integrate the Schrödinger equation and tabulate site probabilities.
    Propagate(RunArgs),
    /// Evaluate the exact Bessel series and compare it with the integrator.
    Analytic(RunArgs),
    /// Asymptotic sums, pole component and regime ansatz.
    Regimes(RunArgs),
    /// Closed-form walk counts against direct enumeration.
    Diagrams {
        #[arg(long, default_value_t = 12)]
        max_lines: u32,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Exact rational identities and the memory double series.
    Identities {
        #[arg(long, default_value_t = 20)]
        k_max: u32,
        #[arg(long, default_value_t = 0.3)]
        delta: f64,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Regenerate the data behind one figure.
    Reproduce {
        /// fig3, fig5, fig6, fig7 or fig8
        preset: String,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Run `propagate` over a list of values of one parameter, concurrently.
    Sweep {
        /// delta, rise-time or initial-site
        #[arg(long)]
        param: String,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        #[command(flatten)]
        run: RunArgs,
    },
}

#[derive(Args, Debug, Default)]
struct OutArgs {
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    format: Option<String>,
}

#[derive(Args, Debug, Default)]
struct RunArgs {
    /// TOML file with run settings; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    delta: Option<f64>,
    /// sudden, linear or custom:<path>
    #[arg(long)]
    profile: Option<String>,
    #[arg(long)]
    rise_time: Option<f64>,
    #[arg(long)]
    initial_site: Option<usize>,
    #[arg(long)]
    t_max: Option<f64>,
    #[arg(long)]
    step: Option<f64>,
    /// Integrator steps between output samples.
    #[arg(long)]
    stride: Option<usize>,
    /// Number of sites tabulated.
    #[arg(long)]
    sites: Option<usize>,
    #[arg(long)]
    tolerance_profile: Option<String>,
    #[command(flatten)]
    out: OutArgs,
}

/// Error carrying the exit code it should produce.
#[derive(Debug)]
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = if e.is_config() { EXIT_CONFIG } else { EXIT_NUMERIC };
        Failure {
            code,
            error: e.into(),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(error: anyhow::Error) -> Self {
        let code = match error.downcast_ref::<Error>() {
            Some(e) if !e.is_config() => EXIT_NUMERIC,
            _ => EXIT_CONFIG,
        };
        Failure { code, error }
    }
}

impl RunArgs {
    fn config(&self) -> Result<ExperimentConfig, Failure> {
        let cfg = self.merged()?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// File settings with flag overrides, not yet validated.
    fn merged(&self) -> Result<ExperimentConfig, Failure> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("reading config {}", path.display()))?;
                ExperimentConfig::from_toml(&text)
                    .with_context(|| format!("in config {}", path.display()))?
            }
            None => ExperimentConfig::default(),
        };
        if let Some(v) = self.delta {
            cfg.delta = v;
        }
        if let Some(v) = &self.profile {
            cfg.profile = v.parse::<ProfileSpec>()?;
        }
        if let Some(v) = self.rise_time {
            cfg.rise_time = v;
        }
        if let Some(v) = self.initial_site {
            cfg.initial_site = v;
        }
        if let Some(v) = self.t_max {
            cfg.t_max = v;
        }
        if let Some(v) = self.step {
            cfg.step = v;
        }
        if let Some(v) = self.stride {
            cfg.output_stride = v;
        }
        if let Some(v) = self.sites {
            cfg.sites = v;
        }
        if let Some(v) = &self.tolerance_profile {
            cfg.tolerance_profile = v.parse::<ToleranceProfile>()?;
        }
        self.out.apply(&mut cfg)?;
        Ok(cfg)
    }
}

impl OutArgs {
    fn apply(&self, cfg: &mut ExperimentConfig) -> Result<(), Failure> {
        if let Some(v) = &self.out {
            cfg.out = v.clone();
        }
        if let Some(v) = &self.format {
            cfg.format = v.parse::<OutputFormat>()?;
        }
        Ok(())
    }

    fn config(&self) -> Result<ExperimentConfig, Failure> {
        let mut cfg = ExperimentConfig::default();
        self.apply(&mut cfg)?;
        Ok(cfg)
    }
}

fn report(bundle: &ArtifactBundle, dest: &std::path::Path) {
    println!("{} -> {}", bundle.name, dest.display());
    for c in &bundle.comparisons {
        println!(
            "  {:<4} {:<40} max {:.3e}  rms {:.3e}  tol {:.3e}",
            if c.passed { "ok" } else { "FAIL" },
            c.name,
            c.max_deviation,
            c.rms_deviation,
            c.tolerance
        );
    }
    for f in &bundle.fits {
        println!("  fit  {:<40} {:.6} ± {:.1e}", f.name, f.fit.value, f.fit.stderr);
    }
}

fn emit(bundle: &ArtifactBundle, cfg: &ExperimentConfig) -> Result<bool, Failure> {
    let dest = output::write_bundle(bundle, &cfg.out, cfg.format)?;
    report(bundle, &dest);
    Ok(bundle.passed())
}

fn run(cli: Cli) -> Result<bool, Failure> {
    match cli.command {
        Command::Propagate(args) => {
            let cfg = args.config()?;
            emit(&experiment::run_propagate(&cfg)?, &cfg)
        }
        Command::Analytic(args) => {
            let cfg = args.config()?;
            emit(&experiment::run_analytic(&cfg)?, &cfg)
        }
        Command::Regimes(args) => {
            let cfg = args.config()?;
            emit(&experiment::run_regimes(&cfg)?, &cfg)
        }
        Command::Diagrams { max_lines, out } => {
            let cfg = out.config()?;
            emit(&experiment::run_diagrams(max_lines)?, &cfg)
        }
        Command::Identities { k_max, delta, out } => {
            let cfg = out.config()?;
            emit(&experiment::run_identities(k_max, delta)?, &cfg)
        }
        Command::Reproduce { preset, run } => {
            let preset: Preset = preset.parse()?;
            let cfg = run.config()?;
            emit(&experiment::reproduce(preset, &cfg)?, &cfg)
        }
        Command::Sweep { param, values, run } => {
            let param: SweepParam = param.parse()?;
            let cfg = run.merged()?;
            for &v in &values {
                param.apply(&cfg, v)?.validate()?;
            }
            let results = experiment::sweep(&cfg, param, &values);
            let root = cfg.out.join("sweep");
            let mut all_passed = true;
            let mut first_error = None;
            for (i, (v, r)) in values.iter().zip(results).enumerate() {
                match r {
                    Ok(mut bundle) => {
                        bundle.name = format!("point{i:03}");
                        bundle.meta("sweep_param", param_name(param));
                        bundle.meta("sweep_value", v);
                        let dest = output::write_bundle(&bundle, &root, cfg.format)?;
                        report(&bundle, &dest);
                        all_passed &= bundle.passed();
                    }
                    Err(e) => {
                        eprintln!("point {i} ({v}): {e}");
                        first_error.get_or_insert(e);
                    }
                }
            }
            match first_error {
                Some(e) => Err(e.into()),
                None => Ok(all_passed),
            }
        }
    }
}

fn param_name(p: SweepParam) -> &'static str {
    match p {
        SweepParam::Delta => "delta",
        SweepParam::RiseTime => "rise-time",
        SweepParam::InitialSite => "initial-site",
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("error: declared tolerance exceeded");
            ExitCode::from(EXIT_TOLERANCE)
        }
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
