//! Experiment configuration: flat `key = value` text with dotted namespaces.
//!
//! ```text
//! experiment = poincare-gap
//! grid.d = 3
//! data.seed = 42
//! ```
//!
//! Blank lines and `#` comments are ignored. The bare field names (`d`,
//! `lambda`, `T`, ...) are accepted as aliases of the dotted keys. Keys left
//! out take the defaults of the chosen experiment.

use crate::error::{LabError, Result};
use caloric::heat_flow::HeatScheme;
use caloric::targets::{HarmonicProfile, ProfileFamily};
use std::fmt::Write as _;
use std::path::PathBuf;

/// Registered experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Experiment {
    SolitonEnergy,
    SolitonStability,
    HeatSmoothing,
    CaloricGaugeResiduals,
    DispersiveDecay,
    StrichartzSweep,
    LpReconstruction,
    PoincareGap,
    LaplacianConsistency,
}

impl Experiment {
    pub const ALL: [Experiment; 9] = [
        Experiment::SolitonEnergy,
        Experiment::SolitonStability,
        Experiment::HeatSmoothing,
        Experiment::CaloricGaugeResiduals,
        Experiment::DispersiveDecay,
        Experiment::StrichartzSweep,
        Experiment::LpReconstruction,
        Experiment::PoincareGap,
        Experiment::LaplacianConsistency,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::SolitonEnergy => "soliton-energy",
            Experiment::SolitonStability => "soliton-stability",
            Experiment::HeatSmoothing => "heat-smoothing",
            Experiment::CaloricGaugeResiduals => "caloric-gauge-residuals",
            Experiment::DispersiveDecay => "dispersive-decay",
            Experiment::StrichartzSweep => "strichartz-sweep",
            Experiment::LpReconstruction => "lp-reconstruction",
            Experiment::PoincareGap => "poincare-gap",
            Experiment::LaplacianConsistency => "laplacian-consistency",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|e| e.name() == name).ok_or_else(|| LabError::UnknownExperiment { name: name.into() })
    }

    /// One-line summary for `caloric-lab list`.
    pub fn summary(self) -> &'static str {
        match self {
            Experiment::SolitonEnergy => "energy of the P/Q harmonic profiles against their closed forms",
            Experiment::SolitonStability => {
                "stationarity of a soliton under the equivariant wave map flow, optional perturbation decay"
            }
            Experiment::HeatSmoothing => "parabolic smoothing norms of the heat flow and their linearity in the data size",
            Experiment::CaloricGaugeResiduals => "full gauge identity suite on a small radial S^2-valued wave map",
            Experiment::DispersiveDecay => "fitted L^q decay exponent of a linear wave",
            Experiment::StrichartzSweep => "Strichartz ratios over a seeded random corpus",
            Experiment::LpReconstruction => "heat-flow Littlewood-Paley reconstruction on a seeded corpus",
            Experiment::PoincareGap => "Rayleigh quotients of a seeded corpus and a broad-bump sequence against the spectral gap",
            Experiment::LaplacianConsistency => "discrete Laplacian of cosh r against d cosh r",
        }
    }

    /// Whether [`crate::convergence_study`] applies.
    pub fn refinable(self) -> bool {
        matches!(
            self,
            Experiment::SolitonEnergy
                | Experiment::SolitonStability
                | Experiment::CaloricGaugeResiduals
                | Experiment::LaplacianConsistency
        )
    }
}

/// A validated experiment configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub d: usize,
    pub r_max: f64,
    pub n: usize,
    pub dt: f64,
    pub t_end: f64,
    pub family: ProfileFamily,
    pub lambda: f64,
    pub amplitude: f64,
    pub seed: u64,
    pub s_max: f64,
    pub rho: f64,
    pub scheme: HeatScheme,
    pub output: Option<PathBuf>,
}

/// Canonical keys in serialization order, with their bare aliases.
pub const KEYS: [(&str, &str); 14] = [
    ("experiment", "experiment"),
    ("grid.d", "d"),
    ("grid.r_max", "r_max"),
    ("grid.n", "n"),
    ("time.dt", "dt"),
    ("time.T", "T"),
    ("profile.family", "family"),
    ("profile.lambda", "lambda"),
    ("data.amplitude", "amplitude"),
    ("data.seed", "seed"),
    ("heat.s_max", "s_max"),
    ("heat.rho", "rho"),
    ("heat.scheme", "scheme"),
    ("output.path", "output"),
];

/// Maps a key or alias to its canonical form.
pub fn canonical_key(key: &str) -> Result<&'static str> {
    KEYS.iter()
        .find(|(k, alias)| *k == key || *alias == key)
        .map(|(k, _)| *k)
        .ok_or_else(|| LabError::UnknownKey { key: key.into() })
}

impl ExperimentConfig {
    /// Defaults of `experiment`, sized so a run finishes well within a minute.
    pub fn defaults(experiment: Experiment) -> Self {
        let base = Self {
            experiment,
            d: 4,
            r_max: 20.0,
            n: 400,
            dt: 0.025,
            t_end: 20.0,
            family: ProfileFamily::P,
            lambda: 0.5,
            amplitude: 0.0,
            seed: 1,
            s_max: 20.0,
            rho: 2f64.powf(0.25),
            scheme: HeatScheme::ExplicitRk4,
            output: None,
        };
        match experiment {
            Experiment::SolitonEnergy => Self { d: 2, r_max: 30.0, n: 3000, lambda: std::f64::consts::FRAC_1_SQRT_2, ..base },
            Experiment::SolitonStability => Self { d: 2, r_max: 10.0, n: 2000, dt: 0.0025, t_end: 10.0, ..base },
            Experiment::HeatSmoothing => Self { r_max: 8.0, n: 80, amplitude: 0.05, s_max: 50.0, ..base },
            Experiment::CaloricGaugeResiduals => {
                Self { r_max: 6.0, n: 120, dt: 0.01, t_end: 0.5, amplitude: 0.004, rho: 2f64.powf(0.125), ..base }
            }
            Experiment::DispersiveDecay => Self { d: 3, r_max: 60.0, n: 1200, dt: 0.02, t_end: 50.0, amplitude: 1.0, ..base },
            Experiment::StrichartzSweep => Self { r_max: 40.0, n: 800, amplitude: 1.0, ..base },
            Experiment::LpReconstruction => Self { seed: 7, ..base },
            Experiment::PoincareGap => Self { seed: 11, ..base },
            Experiment::LaplacianConsistency => Self { r_max: 4.0, n: 80, ..base },
        }
    }

    /// Sets one key from its text value, without cross-field validation.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let canonical = canonical_key(key)?;
        let bad = |reason: &str| LabError::BadValue { key: canonical.into(), value: value.into(), reason: reason.into() };
        let float = || value.parse::<f64>().map_err(|_| bad("expected a number"));
        let int = || value.parse::<usize>().map_err(|_| bad("expected a nonnegative integer"));
        match canonical {
            "experiment" => {
                let e = Experiment::from_name(value)?;
                if e != self.experiment {
                    *self = Self { output: self.output.take(), ..Self::defaults(e) };
                }
            }
            "grid.d" => self.d = int()?,
            "grid.r_max" => self.r_max = float()?,
            "grid.n" => self.n = int()?,
            "time.dt" => self.dt = float()?,
            "time.T" => self.t_end = float()?,
            "profile.family" => {
                self.family = match value {
                    "P" | "p" => ProfileFamily::P,
                    "Q" | "q" => ProfileFamily::Q,
                    _ => return Err(bad("expected P or Q")),
                }
            }
            "profile.lambda" => self.lambda = float()?,
            "data.amplitude" => self.amplitude = float()?,
            "data.seed" => self.seed = value.parse().map_err(|_| bad("expected a 64-bit unsigned integer"))?,
            "heat.s_max" => self.s_max = float()?,
            "heat.rho" => self.rho = float()?,
            "heat.scheme" => {
                self.scheme = match value {
                    "rk4" => HeatScheme::ExplicitRk4,
                    "imex" => HeatScheme::Imex,
                    _ => return Err(bad("expected rk4 or imex")),
                }
            }
            "output.path" => self.output = if value.is_empty() { None } else { Some(PathBuf::from(value)) },
            _ => unreachable!("canonical_key only returns listed keys"),
        }
        Ok(())
    }

    /// Text value of a canonical key, as written by [`serialize`].
    pub fn get(&self, key: &str) -> Result<String> {
        Ok(match canonical_key(key)? {
            "experiment" => self.experiment.name().into(),
            "grid.d" => self.d.to_string(),
            "grid.r_max" => self.r_max.to_string(),
            "grid.n" => self.n.to_string(),
            "time.dt" => self.dt.to_string(),
            "time.T" => self.t_end.to_string(),
            "profile.family" => format!("{:?}", self.family),
            "profile.lambda" => self.lambda.to_string(),
            "data.amplitude" => self.amplitude.to_string(),
            "data.seed" => self.seed.to_string(),
            "heat.s_max" => self.s_max.to_string(),
            "heat.rho" => self.rho.to_string(),
            "heat.scheme" => match self.scheme {
                HeatScheme::ExplicitRk4 => "rk4".into(),
                HeatScheme::Imex => "imex".into(),
            },
            "output.path" => self.output.as_ref().map(|p| p.display().to_string()).unwrap_or_default(),
            _ => unreachable!("canonical_key only returns listed keys"),
        })
    }

    /// Checks every numeric field against its documented range and the
    /// requirements of the chosen experiment.
    pub fn validate(&self) -> Result<()> {
        let range = |key: &str, ok: bool, reason: &str| {
            if ok {
                Ok(())
            } else {
                Err(LabError::OutOfRange { key: key.into(), reason: reason.into() })
            }
        };
        range("grid.d", (2..=8).contains(&self.d), "dimension must lie in 2..=8")?;
        range("grid.r_max", self.r_max.is_finite() && self.r_max > 0.0 && self.r_max <= 500.0, "must lie in (0, 500]")?;
        range("grid.n", (8..=200_000).contains(&self.n), "must lie in 8..=200000")?;
        range("time.dt", self.dt.is_finite() && self.dt > 0.0 && self.dt <= 1.0, "must lie in (0, 1]")?;
        range("time.T", self.t_end.is_finite() && self.t_end > 0.0 && self.t_end <= 1e4, "must lie in (0, 1e4]")?;
        range("data.amplitude", self.amplitude.is_finite() && (0.0..=1.0).contains(&self.amplitude), "must lie in [0, 1]")?;
        range("heat.s_max", self.s_max.is_finite() && self.s_max > 0.0 && self.s_max <= 1e4, "must lie in (0, 1e4]")?;
        range("heat.rho", self.rho > 1.0 && self.rho <= 2.0, "must lie in (1, 2]")?;
        HarmonicProfile::new(self.family, self.lambda).map_err(|e| LabError::OutOfRange {
            key: "profile.lambda".into(),
            reason: match e {
                caloric::CaloricError::InvalidParameter { reason, .. } => reason,
                other => other.to_string(),
            },
        })?;
        match self.experiment {
            Experiment::SolitonEnergy | Experiment::SolitonStability => {
                range("grid.d", self.d == 2, "the soliton families live on H^2")?
            }
            Experiment::DispersiveDecay => range("grid.d", self.d == 3 || self.d == 4, "decay is fitted on H^3 or H^4")?,
            Experiment::StrichartzSweep => range("grid.d", self.d == 4, "the sampled triples are admissible on H^4")?,
            Experiment::HeatSmoothing => {
                range("data.amplitude", self.amplitude > 0.0, "linearity needs nonzero data")?;
                range("data.amplitude", self.amplitude <= 0.2, "the smoothing bounds are checked for small data (<= 0.2)")?
            }
            Experiment::CaloricGaugeResiduals => {
                range("data.amplitude", self.amplitude <= 0.05, "the gauge is built for small data (<= 0.05)")?
            }
            _ => {}
        }
        Ok(())
    }

    /// `d`, `r_max / n`, and friends as record parameters.
    pub fn params(&self) -> Vec<(String, String)> {
        KEYS.iter()
            .filter(|(k, _)| !matches!(*k, "experiment" | "output.path"))
            .map(|(k, _)| (k.to_string(), self.get(k).expect("listed key")))
            .collect()
    }
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self::defaults(Experiment::SolitonEnergy)
    }
}

/// Parses and validates configuration text. Empty text gives the
/// `soliton-energy` defaults.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let mut pairs: Vec<(usize, &'static str, String)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| LabError::Malformed { line: i + 1, text: raw.trim().into() })?;
        let key = canonical_key(key.trim())?;
        if pairs.iter().any(|(_, k, _)| *k == key) {
            return Err(LabError::DuplicateKey { key: key.into() });
        }
        pairs.push((i + 1, key, value.trim().to_string()));
    }
    let experiment = match pairs.iter().find(|(_, k, _)| *k == "experiment") {
        Some((_, _, name)) => Experiment::from_name(name)?,
        None => Experiment::SolitonEnergy,
    };
    let mut cfg = ExperimentConfig::defaults(experiment);
    for (_, key, value) in pairs.iter().filter(|(_, k, _)| *k != "experiment") {
        cfg.set(key, value)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Writes every key in canonical order; `parse_config` reads it back to the
/// same config. The output path is omitted when unset.
pub fn serialize(cfg: &ExperimentConfig) -> String {
    let mut out = String::new();
    for (key, _) in KEYS {
        if key == "output.path" && cfg.output.is_none() {
            continue;
        }
        let _ = writeln!(out, "{key} = {}", cfg.get(key).expect("listed key"));
    }
    out
}

/// Canonical form of configuration text.
pub fn normalize(text: &str) -> Result<String> {
    parse_config(text).map(|c| serialize(&c))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn aliases_resolve() {
        assert_eq!(canonical_key("lambda").unwrap(), "profile.lambda");
        assert_eq!(canonical_key("grid.n").unwrap(), "grid.n");
        assert!(canonical_key("grid.m").is_err());
    }

    #[test]
    fn switching_experiment_resets_defaults() {
        let mut c = ExperimentConfig::default();
        c.set("experiment", "poincare-gap").unwrap();
        assert_eq!(c, ExperimentConfig::defaults(Experiment::PoincareGap));
    }
}
