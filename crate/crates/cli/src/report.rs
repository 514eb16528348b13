//! Machine-readable run reports.
//!
//! Reports are deterministic for a fixed configuration and seed except for
//! the timestamp and per-check timings; [`Report::canonical_bytes`] zeroes
//! those so byte-level comparison is meaningful.

use std::collections::BTreeMap;
use std::io::Write;

use symptube::tube::CheckReport;

use crate::config::{IntegratorChoice, RunConfig, Target};

#[derive(Debug, Clone, serde::Serialize)]
pub struct ConfigEcho {
    pub target: String,
    pub n: Option<usize>,
    pub sigma_max: f64,
    pub samples: usize,
    pub seed: u64,
    pub integrator: String,
    pub rel_tol: f64,
    pub tolerances: BTreeMap<String, f64>,
}

impl ConfigEcho {
    pub fn new(cfg: &RunConfig, sigma_max: f64, tolerances: BTreeMap<String, f64>) -> Self {
        let (target, n) = match &cfg.target {
            Target::Example { name, n } => (name.clone(), Some(*n)),
            Target::SpecFile { path } => (path.display().to_string(), None),
        };
        ConfigEcho {
            target,
            n,
            sigma_max,
            samples: cfg.samples,
            seed: cfg.seed,
            integrator: match cfg.integrator {
                IntegratorChoice::Rkf45 => "rkf45-adaptive".into(),
                IntegratorChoice::Rk4 => "rk4-fixed".into(),
            },
            rel_tol: cfg.rel_tol,
            tolerances,
        }
    }
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct CheckEntry {
    #[serde(flatten)]
    pub check: CheckReport,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct Report {
    pub version: String,
    pub generated_at_unix: u64,
    pub config: ConfigEcho,
    pub checks: Vec<CheckEntry>,
    pub overall_pass: bool,
}

impl Report {
    pub fn new(config: ConfigEcho, checks: Vec<CheckEntry>) -> Self {
        let overall_pass = checks.iter().all(|c| c.check.pass);
        Report {
            version: env!("CARGO_PKG_VERSION").to_string(),
            generated_at_unix: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            config,
            checks,
            overall_pass,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// JSON bytes with the timestamp and timings zeroed.
    pub fn canonical_bytes(&self) -> Vec<u8> {
        let mut clone = self.clone();
        clone.generated_at_unix = 0;
        for c in &mut clone.checks {
            c.wall_ms = 0.0;
        }
        let mut s = serde_json::to_string_pretty(&clone).expect("report serializes");
        s.push('\n');
        s.into_bytes()
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "name",
            "samples",
            "max_residual",
            "tolerance",
            "pass",
            "worst_point",
        ])
        .expect("csv header");
        for entry in &self.checks {
            let c = &entry.check;
            let worst = c
                .worst_point
                .as_ref()
                .map(|p| {
                    p.iter()
                        .map(|x| format!("{x}"))
                        .collect::<Vec<_>>()
                        .join(" ")
                })
                .unwrap_or_default();
            w.write_record([
                c.name.clone(),
                c.samples.to_string(),
                format!("{:e}", c.max_residual),
                format!("{:e}", c.tolerance),
                c.pass.to_string(),
                worst,
            ])
            .expect("csv row");
        }
        String::from_utf8(w.into_inner().expect("csv flush")).expect("csv utf8")
    }

    /// One human-readable line per check.
    pub fn print_summary(&self, mut out: impl Write) -> std::io::Result<()> {
        for entry in &self.checks {
            let c = &entry.check;
            let status = if c.pass { "PASS" } else { "FAIL" };
            write!(
                out,
                "{status}  {:<22} samples {:>5}  max {:>12.3e}  tol {:>8.1e}",
                c.name, c.samples, c.max_residual, c.tolerance
            )?;
            if let Some(err) = &c.error {
                write!(out, "  ({err})")?;
            }
            writeln!(out)?;
        }
        writeln!(
            out,
            "overall: {}",
            if self.overall_pass { "PASS" } else { "FAIL" }
        )
    }
}
