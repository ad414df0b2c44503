//! Experiment configuration, dispatch and result persistence.

mod config;
mod experiments;
mod report;

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

pub use config::{
    DynamicsConfig, ExperimentConfig, GeometryConfig, GmcConfig, LqgConfig, McConfig, OutputConfig, PunctureConfig,
};
pub use report::{canonical_json, num, CsvSeries, EstimateRecord, Manifest, Provenance, Report, Timestamp};

use crate::error::{Error, Result};
use crate::rng::RngStream;
use experiments::Context;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Environment variable fixing the worker thread count.
pub const THREADS_ENV: &str = "LIOUVILLE_THREADS";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Experiment {
    Spectrum,
    GffCov,
    GmcMoments,
    Green,
    Partition,
    Simulate,
    Invariance,
    Blowup,
}

impl Experiment {
    pub const ALL: [Experiment; 8] = [
        Self::Spectrum,
        Self::GffCov,
        Self::GmcMoments,
        Self::Green,
        Self::Partition,
        Self::Simulate,
        Self::Invariance,
        Self::Blowup,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Self::Spectrum => "spectrum",
            Self::GffCov => "gff-cov",
            Self::GmcMoments => "gmc-moments",
            Self::Green => "green",
            Self::Partition => "partition",
            Self::Simulate => "simulate",
            Self::Invariance => "invariance",
            Self::Blowup => "blowup",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|e| e.name() == s).ok_or_else(|| {
            let known: Vec<&str> = Self::ALL.iter().map(|e| e.name()).collect();
            Error::Config(format!(
                "unknown experiment `{s}`; expected one of {}",
                known.join(", ")
            ))
        })
    }
}

/// Process exit codes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExitStatus {
    Pass = 0,
    AssertFail = 1,
    ConfigError = 2,
    ResourceError = 3,
    SeibergRefusal = 4,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        self as i32
    }

    pub fn from_error(err: &Error) -> Self {
        match err {
            Error::Config(_) | Error::Domain(_) | Error::UnderResolved { .. } => Self::ConfigError,
            Error::Resource(_) | Error::Io(_) | Error::Csv(_) | Error::Json(_) => Self::ResourceError,
            Error::Seiberg(_) => Self::SeibergRefusal,
            Error::Overflow { .. } | Error::Contract(_) | Error::Numerical(_) => Self::AssertFail,
        }
    }
}

/// Installs the global worker pool: `LIOUVILLE_THREADS` first, then the
/// configured count. Results do not depend on the thread count.
pub fn configure_threads(config: &ExperimentConfig) -> Result<Option<usize>> {
    let from_env = match std::env::var(THREADS_ENV) {
        Ok(v) => Some(
            v.trim()
                .parse::<usize>()
                .map_err(|e| Error::Config(format!("{THREADS_ENV}=`{v}`: {e}")))?,
        ),
        Err(_) => None,
    };
    let threads = from_env.or(config.mc.threads);
    if let Some(n) = threads {
        if n == 0 {
            return Err(Error::Config("thread count must be positive".into()));
        }
        if rayon::ThreadPoolBuilder::new().num_threads(n).build_global().is_err() {
            log::debug!("global thread pool already initialized");
        }
    }
    Ok(threads)
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub report: Report,
    pub out_dir: PathBuf,
    pub files: Vec<PathBuf>,
}

impl RunOutcome {
    pub fn exit_status(&self) -> ExitStatus {
        if self.report.pass {
            ExitStatus::Pass
        } else {
            ExitStatus::AssertFail
        }
    }
}

/// Runs `experiment` and writes `report.json`, its CSV series and
/// `manifest.json` under `config.output.dir`.
pub fn run_experiment(experiment: Experiment, config: &ExperimentConfig) -> Result<RunOutcome> {
    let started = Instant::now();
    let config_hash = config.hash()?;
    let provenance = Provenance {
        config_hash: config_hash.clone(),
        seed: config.mc.seed,
    };
    let ctx = Context {
        config,
        provenance,
        stream: RngStream::new(config.mc.seed, 0),
    };
    log::info!("running {experiment} (config {config_hash})");
    let outcome = match experiment {
        Experiment::Spectrum => experiments::spectrum(&ctx),
        Experiment::GffCov => experiments::gff_covariance(&ctx),
        Experiment::GmcMoments => experiments::gmc_moments(&ctx),
        Experiment::Green => experiments::green(&ctx),
        Experiment::Partition => experiments::partition(&ctx),
        Experiment::Simulate => experiments::simulate(&ctx),
        Experiment::Invariance => experiments::invariance(&ctx),
        Experiment::Blowup => experiments::blowup(&ctx),
    }?;

    let out_dir = config.output.dir.clone();
    std::fs::create_dir_all(&out_dir)
        .map_err(|e| Error::Resource(format!("cannot create output directory {}: {e}", out_dir.display())))?;
    let mut files = Vec::new();
    if config.output.csv {
        for s in &outcome.series {
            files.push(s.write(&out_dir)?);
        }
    }
    let timestamp = Timestamp {
        unix_seconds: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        runtime_seconds: started.elapsed().as_secs_f64(),
    };
    let report = Report {
        experiment: experiment.name().to_string(),
        version: VERSION.to_string(),
        config_hash: config_hash.clone(),
        seed: config.mc.seed,
        replicas: config.mc.replicas,
        params: config.clone(),
        pass: outcome.pass,
        seiberg_report: outcome.seiberg,
        ess: outcome.ess,
        estimates: outcome.estimates,
        details: outcome.details,
        timestamp: timestamp.clone(),
    };
    let report_path = out_dir.join("report.json");
    std::fs::write(&report_path, report.to_json()?)?;
    files.insert(0, report_path);
    let manifest = Manifest {
        experiment: experiment.name().to_string(),
        version: VERSION.to_string(),
        config_hash,
        seed: config.mc.seed,
        files: files
            .iter()
            .filter_map(|p| p.file_name().map(|f| f.to_string_lossy().into_owned()))
            .collect(),
        extra: outcome.manifest_extra,
        timestamp,
    };
    let manifest_path = out_dir.join("manifest.json");
    std::fs::write(&manifest_path, serde_json::to_string_pretty(&manifest)?)?;
    files.push(manifest_path);
    log::info!("{experiment}: {}", if report.pass { "pass" } else { "FAIL" });
    Ok(RunOutcome { report, out_dir, files })
}
