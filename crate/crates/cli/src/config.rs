//! Experiment configuration: a TOML file with an `[experiment]` table and
//! one flat table per sampler.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const MIN_SAMPLES: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExampleId {
    Iso,
    Ex1,
    Ex2,
    Ex3,
    Ex4,
    Ex5,
}

impl ExampleId {
    pub const ALL: [ExampleId; 6] = [Self::Iso, Self::Ex1, Self::Ex2, Self::Ex3, Self::Ex4, Self::Ex5];

    pub fn name(self) -> &'static str {
        match self {
            Self::Iso => "iso",
            Self::Ex1 => "ex1",
            Self::Ex2 => "ex2",
            Self::Ex3 => "ex3",
            Self::Ex4 => "ex4",
            Self::Ex5 => "ex5",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Self::Iso => "standard normal target N(0, I); sizes are dimensions n",
            Self::Ex1 => "exponential-covariance prior on [0, L], every other point observed; sizes are L",
            Self::Ex2 => "squared-Laplacian precision prior on [0, L], every other point observed; sizes are L",
            Self::Ex3 => "tridiagonal covariance with dense precision; sizes are n",
            Self::Ex4 => "periodic image deblurring with a Laplacian prior; sizes are image sides",
            Self::Ex5 => "Lorenz'96 initial-state estimation; sizes are n",
        }
    }

    /// Samplers that can run on this example.
    pub fn samplers(self) -> &'static [SamplerKind] {
        use SamplerKind::*;
        match self {
            Self::Iso => &[Gibbs, Rwm, Mala, Hmc],
            Self::Ex1 | Self::Ex2 | Self::Ex3 => &[Rwm, Mala, Hmc, Pcn, LmwgCov, LmwgPrec],
            Self::Ex4 => &[Gibbs, GibbsParallel],
            Self::Ex5 => &[Lmwg, Pcn, Mala, Rwm, Hmc],
        }
    }

    pub fn default_q(self) -> usize {
        match self {
            Self::Iso => 1,
            Self::Ex4 => 16,
            _ => 2,
        }
    }

    /// Exponent k of the step schedule c·n^(−k) used when a sampler table
    /// does not give one.
    pub fn default_step_k(self, s: SamplerKind) -> f64 {
        use SamplerKind::*;
        match (self, s) {
            (Self::Ex1, Mala) => 1.0 / 6.0,
            (Self::Ex2 | Self::Ex3, Mala) => 0.25,
            (Self::Ex3, Hmc | Pcn) => 1.0 / 3.0,
            (Self::Iso, Mala) => 1.0 / 3.0,
            (Self::Iso, Hmc) => 0.25,
            (Self::Ex5, _) => 0.0,
            _ => 0.5,
        }
    }
}

impl fmt::Display for ExampleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplerKind {
    Gibbs,
    GibbsParallel,
    Rwm,
    Mala,
    Hmc,
    Pcn,
    Lmwg,
    LmwgCov,
    LmwgPrec,
}

impl SamplerKind {
    pub const ALL: [SamplerKind; 9] =
        [Self::Gibbs, Self::GibbsParallel, Self::Rwm, Self::Mala, Self::Hmc, Self::Pcn, Self::Lmwg, Self::LmwgCov, Self::LmwgPrec];

    pub fn name(self) -> &'static str {
        match self {
            Self::Gibbs => "gibbs",
            Self::GibbsParallel => "gibbs_parallel",
            Self::Rwm => "rwm",
            Self::Mala => "mala",
            Self::Hmc => "hmc",
            Self::Pcn => "pcn",
            Self::Lmwg => "lmwg",
            Self::LmwgCov => "lmwg_cov",
            Self::LmwgPrec => "lmwg_prec",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }

    /// Samplers with a step size to choose.
    pub fn has_step(self) -> bool {
        matches!(self, Self::Rwm | Self::Mala | Self::Hmc | Self::Pcn)
    }

    /// Acceptance rate aimed for when a step prefactor is tuned by pilot
    /// runs.
    pub fn target_acceptance(self) -> f64 {
        match self {
            Self::Mala => 0.574,
            Self::Hmc => 0.65,
            _ => 0.234,
        }
    }
}

impl fmt::Display for SamplerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn default_burn_in() -> f64 {
    0.1
}

fn default_out() -> PathBuf {
    PathBuf::from("results")
}

fn default_max_tracked() -> usize {
    10_000_000
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub example: ExampleId,
    pub samplers: Vec<String>,
    /// L for ex1/ex2, image side for ex4, dimension otherwise.
    pub sizes: Vec<f64>,
    #[serde(default)]
    pub q: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_burn_in")]
    pub burn_in: f64,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    /// Every stride-th coordinate enters the mean IACT; 8 for ex4 and 1
    /// otherwise when absent.
    #[serde(default)]
    pub iact_stride: Option<usize>,
    /// Upper bound on recorded values per chain; the stride grows to meet it.
    #[serde(default = "default_max_tracked")]
    pub max_tracked_values: usize,
    /// Zeroes wall-clock fields so that reports are byte-reproducible.
    #[serde(default)]
    pub deterministic: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerSection {
    pub samples: Option<usize>,
    /// Fixed step at every size.
    pub step: Option<f64>,
    /// Schedule step = step_c · n^(−step_k).
    pub step_c: Option<f64>,
    pub step_k: Option<f64>,
    /// Steps tried per size; the one with the smallest pilot IACT is used.
    pub candidates: Option<Vec<f64>>,
    /// Length of each pilot run.
    pub pilot: Option<usize>,
    pub n_leapfrog: Option<usize>,
    /// Observations on each side assigned to an l-MwG block (ex5).
    pub halo: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: ExperimentSection,
    #[serde(flatten)]
    pub sampler_tables: BTreeMap<String, SamplerSection>,
}

/// A sampler with its table merged with the defaults.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplerSpec {
    pub kind: SamplerKind,
    pub samples: usize,
    pub step: StepRule,
    pub pilot: usize,
    pub n_leapfrog: usize,
    pub halo: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum StepRule {
    None,
    Fixed { step: f64 },
    /// c·n^(−k); c is tuned on the first size when absent.
    Schedule { c: Option<f64>, k: f64 },
    Candidates { steps: Vec<f64> },
}

pub const DEFAULT_PILOT: usize = 2000;
pub const DEFAULT_LEAPFROG: usize = 10;
pub const DEFAULT_HALO: usize = 2;

impl ExperimentConfig {
    pub fn from_toml_str(s: &str) -> CliResult<Self> {
        let cfg: Self = toml::from_str(s).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> CliResult<Self> {
        let s = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&s)
    }

    pub fn q(&self) -> usize {
        self.experiment.q.unwrap_or(self.experiment.example.default_q())
    }

    pub fn iact_stride(&self) -> usize {
        self.experiment.iact_stride.unwrap_or(if self.experiment.example == ExampleId::Ex4 { 8 } else { 1 })
    }

    pub fn validate(&self) -> CliResult<()> {
        let e = &self.experiment;
        let bad = |m: String| Err(CliError::Config(m));
        if e.samplers.is_empty() {
            return bad("no samplers listed".into());
        }
        if e.sizes.is_empty() {
            return bad("no sizes listed".into());
        }
        if e.sizes.windows(2).any(|w| !(w[1] > w[0])) || !(e.sizes[0] > 0.0) {
            return bad("sizes must be positive and strictly increasing".into());
        }
        if matches!(e.example, ExampleId::Iso | ExampleId::Ex3 | ExampleId::Ex4 | ExampleId::Ex5) && e.sizes.iter().any(|s| s.fract() != 0.0) {
            return bad(format!("sizes of {} must be integers", e.example));
        }
        if !(0.0..1.0).contains(&e.burn_in) {
            return bad("burn_in must lie in [0, 1)".into());
        }
        if self.iact_stride() == 0 || e.max_tracked_values == 0 {
            return bad("iact_stride and max_tracked_values must be positive".into());
        }
        if self.q() == 0 {
            return bad("block size q must be positive".into());
        }
        for name in &e.samplers {
            let Some(kind) = SamplerKind::parse(name) else {
                return bad(format!("unknown sampler `{name}`"));
            };
            if !e.example.samplers().contains(&kind) {
                return bad(format!("sampler `{name}` is not available for {}", e.example));
            }
        }
        for (name, t) in &self.sampler_tables {
            if SamplerKind::parse(name).is_none() {
                return bad(format!("table [{name}] does not name a sampler"));
            }
            if let Some(n) = t.samples {
                if n < MIN_SAMPLES {
                    return bad(format!("[{name}] samples must be at least {MIN_SAMPLES}"));
                }
            }
            let rules = usize::from(t.step.is_some()) + usize::from(t.candidates.is_some()) + usize::from(t.step_c.is_some() || t.step_k.is_some());
            if rules > 1 {
                return bad(format!("[{name}] sets more than one of step, candidates, step_c/step_k"));
            }
            if let Some(c) = &t.candidates {
                if c.is_empty() || c.iter().any(|v| !(*v > 0.0)) {
                    return bad(format!("[{name}] candidates must be positive and non-empty"));
                }
            }
            if t.step.is_some_and(|v| !(v >= 0.0)) || t.step_c.is_some_and(|v| !(v > 0.0)) {
                return bad(format!("[{name}] step values must be positive"));
            }
            if t.pilot.is_some_and(|p| p < MIN_SAMPLES) {
                return bad(format!("[{name}] pilot must be at least {MIN_SAMPLES}"));
            }
        }
        Ok(())
    }

    pub fn sampler_specs(&self) -> Vec<SamplerSpec> {
        let ex = self.experiment.example;
        self.experiment
            .samplers
            .iter()
            .map(|name| {
                let kind = SamplerKind::parse(name).expect("validated");
                let t = self.sampler_tables.get(name).cloned().unwrap_or_default();
                let step = if !kind.has_step() {
                    StepRule::None
                } else if let Some(s) = t.step {
                    StepRule::Fixed { step: s }
                } else if let Some(c) = t.candidates {
                    StepRule::Candidates { steps: c }
                } else if ex == ExampleId::Ex5 && kind == SamplerKind::Pcn && t.step_c.is_none() && t.step_k.is_none() {
                    StepRule::Candidates { steps: vec![0.02, 0.05, 0.1, 0.2] }
                } else {
                    StepRule::Schedule { c: t.step_c, k: t.step_k.unwrap_or(ex.default_step_k(kind)) }
                };
                let samples = t.samples.unwrap_or(default_samples(ex, kind));
                // Picking among candidates compares IACTs, which needs
                // longer pilots than matching an acceptance rate.
                let pilot = match step {
                    StepRule::Candidates { .. } => t.pilot.unwrap_or(DEFAULT_PILOT.max(samples / 10)),
                    _ => t.pilot.unwrap_or(DEFAULT_PILOT),
                };
                SamplerSpec {
                    kind,
                    samples,
                    step,
                    pilot,
                    n_leapfrog: t.n_leapfrog.unwrap_or(DEFAULT_LEAPFROG),
                    halo: t.halo.unwrap_or(DEFAULT_HALO),
                }
            })
            .collect()
    }
}

/// Desk-scale sample counts.
pub fn default_samples(ex: ExampleId, kind: SamplerKind) -> usize {
    use SamplerKind::*;
    match (ex, kind) {
        (ExampleId::Ex3, LmwgCov | LmwgPrec) => 5000,
        (ExampleId::Ex5, Pcn | Rwm) => 1_000_000,
        (ExampleId::Ex5, _) => 10_000,
        (ExampleId::Ex4, _) => 10_000,
        (_, Rwm | Pcn) => 100_000,
        (_, Hmc) => 10_000,
        (_, Mala) => 1000,
        (_, LmwgCov | LmwgPrec | Lmwg) => 500,
        (_, Gibbs | GibbsParallel) => 1000,
    }
}

pub const CONFIG_TEMPLATE: &str = r#"# Experiment runner configuration.
[experiment]
# iso | ex1 | ex2 | ex3 | ex4 | ex5
example = "ex1"
# One or more of: gibbs gibbs_parallel rwm mala hmc pcn lmwg lmwg_cov lmwg_prec
samplers = ["rwm", "mala", "lmwg_cov", "lmwg_prec"]
# Domain lengths L (ex1, ex2), image sides (ex4) or dimensions (iso, ex3, ex5).
sizes = [0.5, 1.0, 2.0, 3.0]
# Block size; image tile side for ex4.
q = 2
seed = 1
# Fraction of each chain discarded before diagnostics.
burn_in = 0.1
out = "results/ex1"
# Every iact_stride-th coordinate enters the mean IACT.
iact_stride = 1
# Recorded values per chain are capped by widening the stride.
max_tracked_values = 10000000
# Write zero wall-clock times so that reports are reproducible byte for byte.
deterministic = false

# One table per sampler. Keys: samples, step, step_c, step_k, candidates,
# pilot, n_leapfrog, halo. Without step or step_c the prefactor c of the
# schedule c * n^(-step_k) is tuned on the first size by pilot runs.
[rwm]
samples = 100000
step_k = 0.5

[mala]
samples = 1000
step_k = 0.1666666667

[lmwg_cov]
samples = 500

[lmwg_prec]
samples = 500
"#;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn template_parses() {
        let c = ExperimentConfig::from_toml_str(CONFIG_TEMPLATE).unwrap();
        assert_eq!(c.experiment.example, ExampleId::Ex1);
        let specs = c.sampler_specs();
        assert_eq!(specs.len(), 4);
        assert_eq!(specs[0].samples, 100_000);
        assert_eq!(specs[0].step, StepRule::Schedule { c: None, k: 0.5 });
        assert_eq!(specs[2].step, StepRule::None);
    }

    #[test]
    fn rejects_bad_configs() {
        let base = "[experiment]\nexample = \"ex1\"\nsamplers = [\"rwm\"]\n";
        assert!(ExperimentConfig::from_toml_str(&format!("{base}sizes = [1.0, 0.5]\n")).is_err());
        assert!(ExperimentConfig::from_toml_str(&format!("{base}sizes = [1.0]\n[rwm]\nsamples = 10\n")).is_err());
        assert!(ExperimentConfig::from_toml_str(&format!("{base}sizes = [1.0]\n[rwm]\nstep = 0.1\nstep_c = 1.0\n")).is_err());
        assert!(ExperimentConfig::from_toml_str(&format!("{base}sizes = [1.0]\n[nope]\nsamples = 200\n")).is_err());
        assert!(ExperimentConfig::from_toml_str("[experiment]\nexample = \"ex4\"\nsamplers = [\"rwm\"]\nsizes = [32]\n").is_err());
        assert!(ExperimentConfig::from_toml_str(&format!("{base}sizes = [1.0]\ncolour = 1\n")).is_err());
    }

    #[test]
    fn ex5_pcn_defaults_to_candidates() {
        let c = ExperimentConfig::from_toml_str("[experiment]\nexample = \"ex5\"\nsamplers = [\"pcn\"]\nsizes = [40]\n").unwrap();
        assert_eq!(c.sampler_specs()[0].step, StepRule::Candidates { steps: vec![0.02, 0.05, 0.1, 0.2] });
    }
}
