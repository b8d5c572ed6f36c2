//! Experiment configuration: JSON with every section optional except the
//! model, unknown keys rejected, and all defaults materialized on resolve.

use std::path::{Path, PathBuf};

use impurity_vqe::ansatz::{AnsatzFamily, AnsatzSpec};
use impurity_vqe::models::StarImpurityModel;
use impurity_vqe::vqe::OptimizerConfig;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelConfig {
    SingleSite {
        u: f64,
        mu: f64,
        v: Vec<f64>,
        eps: Vec<f64>,
    },
    TwoSite {
        u: f64,
        mu: f64,
        t: f64,
        v: f64,
        eps: Vec<f64>,
    },
}

impl ModelConfig {
    pub fn build(&self) -> impurity_vqe::Result<StarImpurityModel> {
        match self {
            ModelConfig::SingleSite { u, mu, v, eps } => StarImpurityModel::single_site(*u, *mu, v, eps),
            ModelConfig::TwoSite { u, mu, t, v, eps } => StarImpurityModel::two_site(*u, *mu, *t, *v, eps),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnsatzConfig {
    pub family: AnsatzFamily,
    pub sparse: bool,
    /// Layer count for k-uCJ; with `warm_start` this is `k_max`.
    pub k: usize,
    pub warm_start: bool,
}

impl Default for AnsatzConfig {
    fn default() -> Self {
        Self {
            family: AnsatzFamily::Kucj,
            sparse: false,
            k: 5,
            warm_start: true,
        }
    }
}

impl AnsatzConfig {
    pub fn spec(&self, model: &StarImpurityModel) -> AnsatzSpec {
        match self.family {
            AnsatzFamily::Uccgsd => AnsatzSpec::uccgsd(model, self.sparse),
            AnsatzFamily::Kucj => AnsatzSpec::kucj(model, self.k, self.sparse),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitKind {
    Variational,
    /// Exact normalization instead of fitting (reference mode).
    Exact,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MomentsConfig {
    pub n_mom: usize,
    /// Tracked spin-orbitals; one particle and one hole run each.
    pub orbitals: Vec<usize>,
    pub fit: FitKind,
    /// Fit restarts; defaults to the VQE restart count.
    pub restarts: Option<usize>,
}

impl Default for MomentsConfig {
    fn default() -> Self {
        Self {
            n_mom: 7,
            orbitals: vec![0],
            fit: FitKind::Variational,
            restarts: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GreensConfig {
    pub eta: f64,
    pub omega_min: f64,
    pub omega_max: f64,
    pub omega_points: usize,
    pub tau_max: f64,
    pub tau_points: usize,
    pub pole_cut: f64,
    /// Moment orders `N_mom` for which poles, spectra and G(τ) are written;
    /// empty means the configured `n_mom` only.
    pub truncations: Vec<usize>,
}

impl Default for GreensConfig {
    fn default() -> Self {
        Self {
            eta: impurity_vqe::greens::DEFAULT_ETA,
            omega_min: -20.0,
            omega_max: 20.0,
            omega_points: 8001,
            tau_max: 10.0,
            tau_points: 201,
            pole_cut: 0.0,
            truncations: Vec::new(),
        }
    }
}

impl GreensConfig {
    pub fn omega_grid(&self) -> Vec<f64> {
        linspace(self.omega_min, self.omega_max, self.omega_points)
    }

    pub fn tau_grid(&self) -> Vec<f64> {
        linspace(0.0, self.tau_max, self.tau_points)
    }
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseConfig {
    pub enabled: bool,
    pub shots_per_term: u64,
    pub n_seed_repeats: usize,
    pub seed: u64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            enabled: false,
            shots_per_term: 30_000,
            n_seed_repeats: 10,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelConfig,
    #[serde(default)]
    pub ansatz: AnsatzConfig,
    #[serde(default)]
    pub vqe: OptimizerConfig,
    #[serde(default)]
    pub moments: Option<MomentsConfig>,
    #[serde(default)]
    pub greens: GreensConfig,
    #[serde(default)]
    pub noise: NoiseConfig,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("run")
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        serde_json::from_str(text).map_err(|e| format!("invalid configuration: {e}"))
    }

    /// Applies overrides, fills derived defaults and validates.
    pub fn resolve(mut self, out: Option<&Path>, seed_override: Option<u64>) -> Result<Self, String> {
        if let Some(out) = out {
            self.output_dir = out.to_path_buf();
        }
        if let Some(seed) = seed_override {
            self.vqe.seed = seed;
            self.noise.seed = seed;
        }
        let restarts = self.vqe.restarts;
        if let Some(m) = &mut self.moments {
            m.restarts.get_or_insert(restarts);
            if self.greens.truncations.is_empty() {
                self.greens.truncations = vec![m.n_mom];
            }
        }
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), String> {
        let model = self.model.build().map_err(|e| e.to_string())?;
        model.hamiltonian().map_err(|e| e.to_string())?;
        if self.ansatz.k == 0 {
            return Err("ansatz.k must be at least 1".into());
        }
        if self.ansatz.warm_start && self.ansatz.family != AnsatzFamily::Kucj {
            return Err("ansatz.warm_start requires family \"kucj\"".into());
        }
        self.vqe.validate().map_err(|e| e.to_string())?;
        if let Some(m) = &self.moments {
            if m.orbitals.is_empty() {
                return Err("moments.orbitals must not be empty".into());
            }
            let n = model.n_modes();
            if let Some(o) = m.orbitals.iter().find(|&&o| o >= n) {
                return Err(format!("moments.orbitals: mode {o} out of range for {n} modes"));
            }
            let mut sorted = m.orbitals.clone();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted.len() != m.orbitals.len() {
                return Err("moments.orbitals must be distinct".into());
            }
            if m.restarts == Some(0) {
                return Err("moments.restarts must be at least 1".into());
            }
            if let Some(t) = self.greens.truncations.iter().find(|&&t| t > m.n_mom) {
                return Err(format!("greens.truncations: {t} exceeds moments.n_mom"));
            }
        }
        let g = &self.greens;
        if !(g.eta > 0.0 && g.eta.is_finite()) {
            return Err("greens.eta must be positive".into());
        }
        if !(g.omega_max > g.omega_min) || g.omega_points < 2 {
            return Err("greens omega grid is empty".into());
        }
        if !(g.tau_max > 0.0) || g.tau_points < 2 {
            return Err("greens tau grid is empty".into());
        }
        if !(g.pole_cut >= 0.0) {
            return Err("greens.pole_cut must be nonnegative".into());
        }
        if self.noise.enabled {
            if self.noise.shots_per_term == 0 || self.noise.n_seed_repeats == 0 {
                return Err("noise.shots_per_term and noise.n_seed_repeats must be positive".into());
            }
            if self.moments.is_none() {
                return Err("noise requires a moments section".into());
            }
        }
        Ok(())
    }

    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    /// SHA-256 of the canonical JSON with the output directory blanked, so
    /// the same experiment written to two places shares one digest.
    pub fn digest(&self) -> String {
        let mut c = self.clone();
        c.output_dir = PathBuf::new();
        hex::encode(Sha256::digest(c.canonical_json().as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{"model": {"kind": "single_site", "u": 0.0, "mu": 0.0, "v": [0, 0, 0], "eps": [-1, 0, 1]}}"#;

    #[test]
    fn defaults_are_materialized() {
        let c = ExperimentConfig::parse(MINIMAL).unwrap().resolve(None, Some(3)).unwrap();
        assert_eq!(c.vqe.seed, 3);
        assert_eq!(c.ansatz.k, 5);
        let json = c.canonical_json();
        assert!(json.contains("\"shots_per_term\":30000"));
        let again = ExperimentConfig::parse(&json).unwrap();
        assert_eq!(again, c);
        assert_eq!(again.digest(), c.digest());
    }

    #[test]
    fn unknown_keys_rejected() {
        let bad = MINIMAL.replace("\"u\": 0.0", "\"u\": 0.0, \"w\": 1");
        assert!(ExperimentConfig::parse(&bad).is_err());
        let bad = MINIMAL.replace("}}", "}, \"vqe\": {\"restart\": 2}}");
        assert!(ExperimentConfig::parse(&bad).is_err());
    }

    #[test]
    fn validation_catches_bad_values() {
        let bad = MINIMAL.replace("[0, 0, 0]", "[0, 0]");
        assert!(ExperimentConfig::parse(&bad).unwrap().resolve(None, None).is_err());
        let bad = MINIMAL.replace("}}", "}, \"moments\": {\"orbitals\": [9]}}");
        assert!(ExperimentConfig::parse(&bad).unwrap().resolve(None, None).is_err());
    }
}
