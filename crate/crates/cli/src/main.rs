use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use kuragap_cli::config::{parse_config, CommandName, ConfigError, Format, Job, RunConfig};
use kuragap_cli::{commands, output, plot};

#[derive(Parser)]
#[command(
    name = "kuragap",
    version,
    about = "Kuramoto oscillators with gapped Gamma-distributed delays"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// JSON run configuration; its command must match the subcommand.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output file (standard output if omitted).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[arg(long, global = true, value_enum)]
    format: Option<Format>,

    /// Base seed for seeded commands (ensemble-probe, verify).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads.
    #[arg(long, global = true, env = "KURAGAP_THREADS")]
    threads: Option<usize>,

    /// Also write `<out>.plot.py`.
    #[arg(long, global = true)]
    emit_plot_script: bool,

    /// Print the effective configuration and exit.
    #[arg(long, global = true)]
    print_config: bool,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Hopf points along a kernel parameter.
    HopfLocus,
    /// Normal-form coefficients at the first Hopf point.
    NormalForm,
    /// First Hopf value over a plane of kernel parameters.
    RegionMap,
    /// Number of crossed Hopf branches over (kernel parameter, coupling).
    Diagram,
    /// Integrate the reduced mean-field equation.
    Meanfield,
    /// Up/down continuation sweep of the mean field in the coupling.
    Sweep,
    /// Finite-N stability probe over couplings.
    EnsembleProbe,
    /// Locate a crossing of two Hopf branches.
    DoubleHopf,
    /// Run the acceptance suite.
    Verify,
}

impl Command {
    fn name(self) -> CommandName {
        match self {
            Command::HopfLocus => CommandName::HopfLocus,
            Command::NormalForm => CommandName::NormalForm,
            Command::RegionMap => CommandName::RegionMap,
            Command::Diagram => CommandName::Diagram,
            Command::Meanfield => CommandName::Meanfield,
            Command::Sweep => CommandName::Sweep,
            Command::EnsembleProbe => CommandName::EnsembleProbe,
            Command::DoubleHopf => CommandName::DoubleHopf,
            Command::Verify => CommandName::Verify,
        }
    }
}

fn fail(kind: &str, command: CommandName, message: String, code: u8) -> ExitCode {
    let record = json!({"error": {"kind": kind, "command": command.as_str(), "message": message}});
    eprintln!("{record}");
    ExitCode::from(code)
}

fn build_config(cli: &Cli) -> Result<RunConfig, ConfigError> {
    let name = cli.command.name();
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| ConfigError::Semantic(format!("cannot read {}: {e}", path.display())))?;
            parse_config(&text)?
        }
        None => RunConfig::new(Job::default_for(name)),
    };
    if cfg.command() != name {
        return Err(ConfigError::Semantic(format!(
            "configuration is for {} but the subcommand is {}",
            cfg.command().as_str(),
            name.as_str()
        )));
    }
    if let Some(out) = &cli.out {
        cfg.output.path = Some(out.clone());
    }
    if let Some(f) = cli.format {
        cfg.output.format = f;
    }
    if cli.emit_plot_script {
        cfg.output.emit_plot_script = true;
    }
    if let Some(seed) = cli.seed {
        if !cfg.job.set_seed(seed) {
            eprintln!("warning: {} takes no seed; --seed ignored", name.as_str());
        }
    }
    if cli.threads.is_some() {
        cfg.threads = cli.threads;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let name = cli.command.name();
    let cfg = match build_config(&cli) {
        Ok(c) => c,
        Err(e) => return fail(e.kind(), name, e.to_string(), 2),
    };
    if cli.print_config {
        println!("{}", cfg.to_json());
        return ExitCode::SUCCESS;
    }
    if let Some(n) = cfg.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            return fail("runtime", name, e.to_string(), 1);
        }
    }

    let report = match commands::run(&cfg) {
        Ok(r) => r,
        Err(e) => return fail("compute", name, format!("{e:#}"), 1),
    };
    let text = output::render(&cfg, &report);
    let written = match &cfg.output.path {
        Some(path) => fs::write(path, &text).map_err(|e| format!("cannot write {}: {e}", path.display())),
        None => std::io::stdout().write_all(text.as_bytes()).map_err(|e| e.to_string()),
    };
    if let Err(e) = written {
        return fail("io", name, e, 1);
    }
    if let (true, Some(path)) = (cfg.output.emit_plot_script, &cfg.output.path) {
        let script = plot::script_path(path);
        if let Err(e) = fs::write(&script, plot::script(name, path)) {
            return fail("io", name, format!("cannot write {}: {e}", script.display()), 1);
        }
    }
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    if !report.warnings.is_empty() {
        eprintln!("{} warnings", report.warnings.len());
    }
    if report.failed {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    }
}
