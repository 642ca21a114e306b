//! Flat `key = value` run configuration.
//!
//! Blank lines and lines starting with `#` are ignored; unknown or repeated
//! keys are errors. The hash is the SHA-256 of the canonical rendering,
//! which omits the output directory.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use sha2::{Digest, Sha256};
use werner_core::tomography::TomographySettings;
use werner_core::werner::FidelityConvention;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Backend {
    DensityOperator,
    TrapSim,
}

impl Backend {
    pub fn as_str(self) -> &'static str {
        match self {
            Backend::DensityOperator => "density-operator",
            Backend::TrapSim => "trap-sim",
        }
    }
}

impl FromStr for Backend {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "density-operator" => Ok(Backend::DensityOperator),
            "trap-sim" => Ok(Backend::TrapSim),
            _ => Err(format!("unknown backend `{s}` (density-operator, trap-sim)")),
        }
    }
}

fn convention_str(c: FidelityConvention) -> &'static str {
    match c {
        FidelityConvention::ColumnNorm => "column-norm",
        FidelityConvention::TraceNorm => "trace-norm",
    }
}

fn parse_convention(s: &str) -> Result<FidelityConvention, String> {
    match s {
        "column-norm" => Ok(FidelityConvention::ColumnNorm),
        "trace-norm" => Ok(FidelityConvention::TraceNorm),
        _ => Err(format!("unknown fidelity convention `{s}` (column-norm, trace-norm)")),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub alpha: f64,
    pub cutoff: usize,
    pub beta_abs: f64,
    pub n_phases: usize,
    pub n_max: usize,
    pub n_cutoff: usize,
    /// Events per phase.
    pub events: u64,
    pub eta: f64,
    pub seed: u64,
    pub backend: Backend,
    pub alpha_min: f64,
    pub alpha_max: f64,
    pub steps: usize,
    pub fidelity: FidelityConvention,
    pub grid_step: f64,
    pub grid_im_extent: f64,
    pub out: PathBuf,
}

impl Default for RunConfig {
    /// The reference simulation: α = 0.7, |β| = 0.6, N_φ = 96, 10⁴ events, N = N_c = 31, η = 0.9.
    fn default() -> Self {
        let t = TomographySettings::REFERENCE;
        Self {
            alpha: 0.7,
            cutoff: werner_core::DEFAULT_CUTOFF,
            beta_abs: t.beta_abs,
            n_phases: t.n_phases,
            n_max: t.n_max,
            n_cutoff: t.n_cutoff,
            events: 10_000,
            eta: t.eta,
            seed: 1,
            backend: Backend::DensityOperator,
            alpha_min: 0.0,
            alpha_max: 2.0,
            steps: 201,
            fidelity: FidelityConvention::ColumnNorm,
            grid_step: 0.1,
            grid_im_extent: 3.0,
            out: PathBuf::from("out"),
        }
    }
}

pub const KEYS: [&str; 17] = [
    "alpha",
    "cutoff",
    "beta_abs",
    "n_phases",
    "n_max",
    "n_cutoff",
    "events",
    "eta",
    "seed",
    "backend",
    "alpha_min",
    "alpha_max",
    "steps",
    "fidelity",
    "grid_step",
    "grid_im_extent",
    "out",
];

fn parse_value<T: FromStr>(key: &str, value: &str, line: usize) -> Result<T, CliError>
where
    T::Err: std::fmt::Display,
{
    value
        .parse()
        .map_err(|e| CliError::Config(format!("line {line}: `{key}`: {e}")))
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut cfg = RunConfig::default();
        let mut seen = std::collections::HashSet::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let l = raw.trim();
            if l.is_empty() || l.starts_with('#') {
                continue;
            }
            let (key, value) = l
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {line}: expected `key = value`")))?;
            let (key, value) = (key.trim(), value.trim());
            if !seen.insert(key.to_string()) && KEYS.contains(&key) {
                return Err(CliError::Config(format!("line {line}: `{key}` given twice")));
            }
            match key {
                "alpha" => cfg.alpha = parse_value(key, value, line)?,
                "cutoff" => cfg.cutoff = parse_value(key, value, line)?,
                "beta_abs" => cfg.beta_abs = parse_value(key, value, line)?,
                "n_phases" => cfg.n_phases = parse_value(key, value, line)?,
                "n_max" => cfg.n_max = parse_value(key, value, line)?,
                "n_cutoff" => cfg.n_cutoff = parse_value(key, value, line)?,
                "events" => cfg.events = parse_value(key, value, line)?,
                "eta" => cfg.eta = parse_value(key, value, line)?,
                "seed" => cfg.seed = parse_value(key, value, line)?,
                "backend" => cfg.backend = parse_value(key, value, line)?,
                "alpha_min" => cfg.alpha_min = parse_value(key, value, line)?,
                "alpha_max" => cfg.alpha_max = parse_value(key, value, line)?,
                "steps" => cfg.steps = parse_value(key, value, line)?,
                "fidelity" => {
                    cfg.fidelity = parse_convention(value).map_err(|e| CliError::Config(format!("line {line}: {e}")))?
                }
                "grid_step" => cfg.grid_step = parse_value(key, value, line)?,
                "grid_im_extent" => cfg.grid_im_extent = parse_value(key, value, line)?,
                "out" => cfg.out = PathBuf::from(value),
                _ => return Err(CliError::Config(format!("line {line}: unknown key `{key}`"))),
            }
        }
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text)
    }

    pub fn tomography(&self) -> TomographySettings {
        TomographySettings {
            beta_abs: self.beta_abs,
            n_phases: self.n_phases,
            n_max: self.n_max,
            n_cutoff: self.n_cutoff,
            eta: self.eta,
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        self.tomography()
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return bad(format!("alpha must be finite and non-negative, got {}", self.alpha));
        }
        if self.cutoff < self.n_cutoff + 1 {
            return bad(format!("cutoff {} must exceed N_c = {}", self.cutoff, self.n_cutoff));
        }
        if self.events == 0 {
            return bad("events must be positive".into());
        }
        if self.steps < 2 {
            return bad(format!("steps must be at least 2, got {}", self.steps));
        }
        if !(self.alpha_min >= 0.0 && self.alpha_max > self.alpha_min && self.alpha_max.is_finite()) {
            return bad(format!("alpha range [{}, {}] is empty or negative", self.alpha_min, self.alpha_max));
        }
        if !(self.grid_step > 0.0 && self.grid_step <= 0.1) {
            return bad(format!("grid_step must lie in (0, 0.1], got {}", self.grid_step));
        }
        if !(self.grid_im_extent > 0.0 && self.grid_im_extent.is_finite()) {
            return bad(format!("grid_im_extent must be positive, got {}", self.grid_im_extent));
        }
        Ok(())
    }

    /// Every key but `out`, in schema order.
    pub fn canonical(&self) -> String {
        let mut s = String::new();
        for (k, v) in self.entries() {
            if k != "out" {
                let _ = writeln!(s, "{k} = {v}");
            }
        }
        s
    }

    /// All keys including `out`; parses back to an equal config.
    pub fn render(&self) -> String {
        let mut s = String::new();
        for (k, v) in self.entries() {
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }

    fn entries(&self) -> Vec<(&'static str, String)> {
        vec![
            ("alpha", self.alpha.to_string()),
            ("cutoff", self.cutoff.to_string()),
            ("beta_abs", self.beta_abs.to_string()),
            ("n_phases", self.n_phases.to_string()),
            ("n_max", self.n_max.to_string()),
            ("n_cutoff", self.n_cutoff.to_string()),
            ("events", self.events.to_string()),
            ("eta", self.eta.to_string()),
            ("seed", self.seed.to_string()),
            ("backend", self.backend.as_str().to_string()),
            ("alpha_min", self.alpha_min.to_string()),
            ("alpha_max", self.alpha_max.to_string()),
            ("steps", self.steps.to_string()),
            ("fidelity", convention_str(self.fidelity).to_string()),
            ("grid_step", self.grid_step.to_string()),
            ("grid_im_extent", self.grid_im_extent.to_string()),
            ("out", self.out.display().to_string()),
        ]
    }

    pub fn hash(&self) -> String {
        hash_text(&self.canonical())
    }
}

pub fn hash_text(text: &str) -> String {
    Sha256::digest(text.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        RunConfig::default().validate().unwrap();
    }

    #[test]
    fn render_round_trips() {
        let c = RunConfig {
            alpha: 0.1 + 0.2,
            backend: Backend::TrapSim,
            fidelity: FidelityConvention::TraceNorm,
            out: PathBuf::from("some/dir"),
            ..RunConfig::default()
        };
        assert_eq!(RunConfig::parse(&c.render()).unwrap(), c);
    }

    #[test]
    fn unknown_and_repeated_keys_fail() {
        assert!(matches!(RunConfig::parse("alpah = 1"), Err(CliError::Config(_))));
        assert!(matches!(RunConfig::parse("alpha = 1\nalpha = 2"), Err(CliError::Config(_))));
        assert!(matches!(RunConfig::parse("alpha"), Err(CliError::Config(_))));
        assert!(matches!(RunConfig::parse("n_phases = -3"), Err(CliError::Config(_))));
    }

    #[test]
    fn comments_and_blanks_are_skipped() {
        let c = RunConfig::parse("# reference run\n\n  alpha = 0.5  \n").unwrap();
        assert_eq!(c.alpha, 0.5);
    }

    #[test]
    fn hash_ignores_output_directory() {
        let a = RunConfig::default();
        let b = RunConfig {
            out: PathBuf::from("elsewhere"),
            ..RunConfig::default()
        };
        let c = RunConfig {
            seed: 2,
            ..RunConfig::default()
        };
        assert_eq!(a.hash(), b.hash());
        assert_ne!(a.hash(), c.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn invalid_settings_rejected_at_load() {
        for text in ["n_phases = 60", "n_max = 20", "eta = 0", "grid_step = 0.2", "cutoff = 16"] {
            let c = RunConfig::parse(text).unwrap();
            assert!(c.validate().is_err(), "{text}");
        }
    }
}
