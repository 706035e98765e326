//! JSON run configuration.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use tenreg::benchmarks::synthetic_100_space;
use tenreg::solver::SolverConfig;
use tenreg::{Marginal, ParameterSpace};

/// Failure classes that map to distinct exit codes.
#[derive(Debug)]
pub enum Failure {
    Config(String),
    Simulator(String),
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Config(m) => write!(f, "configuration error: {m}"),
            Failure::Simulator(m) => write!(f, "simulator error: {m}"),
        }
    }
}

impl std::error::Error for Failure {}

/// Parameter space, either listed per input, as `dim` copies of one
/// marginal, or by benchmark name.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum SpaceSpec {
    List(Vec<Marginal>),
    Iid { iid: Marginal, dim: usize },
    Benchmark { benchmark: String },
}

impl SpaceSpec {
    pub fn build(&self) -> Result<ParameterSpace, String> {
        match self {
            SpaceSpec::List(m) => ParameterSpace::new(m.clone()).map_err(|e| e.to_string()),
            SpaceSpec::Iid { iid, dim } => ParameterSpace::iid(*iid, *dim).map_err(|e| e.to_string()),
            SpaceSpec::Benchmark { benchmark } => match benchmark.as_str() {
                "synthetic_100" => Ok(synthetic_100_space()),
                other => Err(format!("unknown benchmark space {other:?}")),
            },
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplerSettings {
    /// Monte Carlo samples per design point.
    pub m_factor: usize,
    pub batch_size: usize,
    /// Total number of labeled samples an adaptive run may reach.
    pub budget: Option<usize>,
}

impl Default for SamplerSettings {
    fn default() -> Self {
        Self {
            m_factor: tenreg::sampler::DEFAULT_M_FACTOR,
            batch_size: 1,
            budget: None,
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub samples: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub reports: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub space: Option<SpaceSpec>,
    pub degree: usize,
    pub solver: SolverConfig,
    pub sampler: SamplerSettings,
    pub n_init: Option<usize>,
    pub seed: Option<u64>,
    pub paths: Paths,
    /// Where in the source file each top-level key sits, for messages.
    #[serde(skip)]
    source: Option<(PathBuf, String)>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            space: None,
            degree: 2,
            solver: SolverConfig::default(),
            sampler: SamplerSettings::default(),
            n_init: None,
            seed: None,
            paths: Paths::default(),
            source: None,
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str, origin: &Path) -> Result<Self, Failure> {
        let mut cfg: RunConfig = serde_json::from_str(text).map_err(|e| {
            Failure::Config(format!(
                "{}:{}:{}: {}",
                origin.display(),
                e.line(),
                e.column(),
                strip_position(&e.to_string())
            ))
        })?;
        cfg.source = Some((origin.to_path_buf(), text.to_string()));
        Ok(cfg)
    }

    pub fn load(path: Option<&Path>) -> Result<Self, Failure> {
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| Failure::Config(format!("{}: {e}", p.display())))?;
                Self::parse(&text, p)
            }
        }
    }

    /// A config error located at the first occurrence of `"key"` in the
    /// source file, when there is one.
    pub fn error_at(&self, key: &str, msg: impl fmt::Display) -> Failure {
        if let Some((path, text)) = &self.source {
            let needle = format!("\"{key}\"");
            if let Some(line) = text.lines().position(|l| l.contains(&needle)) {
                return Failure::Config(format!("{}:{}: {key}: {msg}", path.display(), line + 1));
            }
        }
        Failure::Config(format!("{key}: {msg}"))
    }

    pub fn space(&self) -> Result<ParameterSpace, Failure> {
        match &self.space {
            Some(spec) => spec.build().map_err(|m| self.error_at("space", m)),
            None => Err(Failure::Config(
                "no parameter space: set \"space\" in the config file".into(),
            )),
        }
    }

    /// Checks the fields every command relies on.
    pub fn validate(&self) -> Result<(), Failure> {
        self.solver.validate().map_err(|e| self.error_at("solver", e))?;
        if self.sampler.m_factor == 0 {
            return Err(self.error_at("m_factor", "must be at least 1"));
        }
        if self.sampler.batch_size == 0 {
            return Err(self.error_at("batch_size", "must be at least 1"));
        }
        if let Some(spec) = &self.space {
            spec.build().map_err(|m| self.error_at("space", m))?;
        }
        Ok(())
    }
}

fn strip_position(msg: &str) -> &str {
    match msg.rfind(" at line ") {
        Some(i) => &msg[..i],
        None => msg,
    }
}
