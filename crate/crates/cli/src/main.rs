use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use symptube_cli::config::{Format, IntegratorChoice, RunConfig, Target};
use symptube_cli::{specfile, suite};

#[derive(Parser)]
#[command(
    name = "symptube",
    version,
    about = "Builds symplectizations and adapted complex tubes of explicit pseudo-Hermitian manifolds and certifies their structure identities numerically"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
#[allow(clippy::large_enum_variant)]
enum Command {
    /// List the builtin example manifolds.
    ListExamples,
    /// Run the verification suite and emit a report.
    Verify(VerifyArgs),
    /// Write a builtin example as a manifold-spec JSON file.
    ExportSpec(ExportArgs),
}

#[derive(Args)]
struct TargetArgs {
    /// Builtin example name (see `list-examples`).
    #[arg(long, conflicts_with = "spec")]
    example: Option<String>,
    /// Path to a manifold-spec JSON file.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// CR dimension n for builtin examples (chart dimension 2n+1).
    #[arg(long, default_value_t = 1)]
    n: usize,
}

impl TargetArgs {
    fn target(&self) -> Result<Target, String> {
        match (&self.example, &self.spec) {
            (Some(name), None) => Ok(Target::Example {
                name: name.clone(),
                n: self.n,
            }),
            (None, Some(path)) => Ok(Target::SpecFile { path: path.clone() }),
            (None, None) => Err("one of --example or --spec is required".into()),
            (Some(_), Some(_)) => Err("--example and --spec are mutually exclusive".into()),
        }
    }
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    target: TargetArgs,
    /// Half-width of the fiber interval; defaults to the example's profile.
    #[arg(long)]
    sigma_max: Option<f64>,
    /// Base sample count for the pointwise checks.
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    /// Halton scramble offset; fixes the sample sequence.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Integration method for the flow construction.
    #[arg(long, value_parser = ["rkf45", "rk4"], default_value = "rkf45")]
    integrator: String,
    /// Relative tolerance of the adaptive integrator.
    #[arg(long, default_value_t = 1e-10)]
    rel_tol: f64,
    /// Report destination (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Report format.
    #[arg(long, value_parser = ["json", "csv"], default_value = "json")]
    format: String,

    #[arg(long, help = "Tolerance override for spec_validation")]
    tol_spec_validation: Option<f64>,
    #[arg(long, help = "Tolerance override for reeb_conditions")]
    tol_reeb_conditions: Option<f64>,
    #[arg(long, help = "Tolerance override for structure_identities")]
    tol_structure_identities: Option<f64>,
    #[arg(long, help = "Tolerance override for holomorphy")]
    tol_holomorphy: Option<f64>,
    #[arg(long, help = "Tolerance override for tube_agreement")]
    tol_tube_agreement: Option<f64>,
    #[arg(long, help = "Tolerance override for j_squared")]
    tol_j_squared: Option<f64>,
    #[arg(long, help = "Tolerance override for reeb_rotation")]
    tol_reeb_rotation: Option<f64>,
    #[arg(long, help = "Tolerance override for cr_restriction")]
    tol_cr_restriction: Option<f64>,
    #[arg(long, help = "Tolerance override for boundary_trace")]
    tol_boundary_trace: Option<f64>,
    #[arg(long, help = "Tolerance override for lie_derivative")]
    tol_lie_derivative: Option<f64>,
    #[arg(long, help = "Tolerance override for monge_ampere")]
    tol_monge_ampere: Option<f64>,
    #[arg(long, help = "Tolerance override for nondegeneracy")]
    tol_nondegeneracy: Option<f64>,
    #[arg(long, help = "Tolerance override for nijenhuis")]
    tol_nijenhuis: Option<f64>,
}

impl VerifyArgs {
    fn run_config(&self) -> Result<RunConfig, String> {
        let mut cfg = RunConfig {
            target: self.target.target()?,
            sigma_max: self.sigma_max,
            samples: self.samples,
            seed: self.seed,
            tolerance_overrides: Default::default(),
            integrator: match self.integrator.as_str() {
                "rk4" => IntegratorChoice::Rk4,
                _ => IntegratorChoice::Rkf45,
            },
            rel_tol: self.rel_tol,
            out: self.out.clone(),
            format: match self.format.as_str() {
                "csv" => Format::Csv,
                _ => Format::Json,
            },
        };
        let overrides = [
            ("spec_validation", self.tol_spec_validation),
            ("reeb_conditions", self.tol_reeb_conditions),
            ("structure_identities", self.tol_structure_identities),
            ("holomorphy", self.tol_holomorphy),
            ("tube_agreement", self.tol_tube_agreement),
            ("j_squared", self.tol_j_squared),
            ("reeb_rotation", self.tol_reeb_rotation),
            ("cr_restriction", self.tol_cr_restriction),
            ("boundary_trace", self.tol_boundary_trace),
            ("lie_derivative", self.tol_lie_derivative),
            ("monge_ampere", self.tol_monge_ampere),
            ("nondegeneracy", self.tol_nondegeneracy),
            ("nijenhuis", self.tol_nijenhuis),
        ];
        for (name, value) in overrides {
            if let Some(v) = value {
                cfg.tolerance_overrides.insert(name.to_string(), v);
            }
        }
        Ok(cfg)
    }
}

#[derive(Args)]
struct ExportArgs {
    #[command(flatten)]
    target: TargetArgs,
    /// Output path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

// exit status: 0 pass, 1 check failure, 2 configuration or spec error
fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::ListExamples => {
            print!("{}", suite::list_examples());
            ExitCode::SUCCESS
        }
        Command::Verify(args) => {
            let cfg = match args.run_config() {
                Ok(cfg) => cfg,
                Err(msg) => return config_error(&msg),
            };
            let report = match suite::run_verify(&cfg) {
                Ok(report) => report,
                Err(err) => return config_error(&format!("{err:#}")),
            };
            let body = match cfg.format {
                Format::Json => report.to_json(),
                Format::Csv => report.to_csv(),
            };
            if let Some(path) = &cfg.out {
                if let Err(err) = std::fs::write(path, &body) {
                    return config_error(&format!("cannot write {}: {err}", path.display()));
                }
            } else {
                print!("{body}");
            }
            let _ = report.print_summary(std::io::stderr());
            if report.overall_pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Command::ExportSpec(args) => {
            let target = match args.target.target() {
                Ok(t) => t,
                Err(msg) => return config_error(&msg),
            };
            let cfg = RunConfig {
                target,
                ..RunConfig::example("", 1)
            };
            let (spec, _) = match suite::resolve_spec(&cfg) {
                Ok(s) => s,
                Err(err) => return config_error(&format!("{err:#}")),
            };
            let body = specfile::export_spec(&spec);
            if let Some(path) = &args.out {
                if let Err(err) = std::fs::write(path, &body) {
                    return config_error(&format!("cannot write {}: {err}", path.display()));
                }
            } else {
                print!("{body}");
            }
            ExitCode::SUCCESS
        }
    }
}

fn config_error(msg: &str) -> ExitCode {
    let _ = writeln!(std::io::stderr(), "error: {msg}");
    ExitCode::from(2)
}
