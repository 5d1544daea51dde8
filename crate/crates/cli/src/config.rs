//! Experiment configuration: one TOML file, every key optional.

use std::path::{Path, PathBuf};

use nlperi::kernels::{CoefficientField, Horizon, KernelSpec, DEFAULT_R_MAX};
use nlperi::marcinkiewicz::TailPolicy;
use nlperi::poisson::TimeGrid;
use nlperi::solver::{OperatorPath, SolveOptions};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::{CliError, Result};

const D: f64 = 2.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimeGridConfig {
    pub nodes: usize,
    pub t_min: f64,
    pub t_max: f64,
}

impl Default for TimeGridConfig {
    fn default() -> Self {
        Self { nodes: 96, t_min: 1e-4, t_max: 8.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub varpi: f64,
    pub cg_tol: f64,
    pub max_iter: usize,
    pub operator_path: OperatorPath,
    /// Seeded test fields for the weak-residual certificate.
    pub trial_count: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let o = SolveOptions::default();
        Self { varpi: o.varpi, cg_tol: o.cg_tol, max_iter: o.max_iter, operator_path: o.operator_path, trial_count: 8 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeyersConfig {
    pub n_list: Vec<usize>,
    /// Allowed growth of a p > 2 norm per n-doubling.
    pub growth_factor: f64,
    /// Mollifier width of the disk indicator, in cells of the coarsest grid.
    pub mollifier_cells: f64,
    pub disk_radius: f64,
    pub max_iter: usize,
    pub cg_tol: f64,
}

impl Default for MeyersConfig {
    fn default() -> Self {
        Self { n_list: vec![32, 64, 128], growth_factor: 1.5, mollifier_cells: 1.0, disk_radius: 0.25, max_iter: 20_000, cg_tol: 1e-9 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CharacterizeConfig {
    pub s_list: Vec<f64>,
    pub p_list: Vec<f64>,
    pub n_list: Vec<usize>,
    pub fields: usize,
    pub kmax: usize,
    /// Relative band for the n-doubling stability flag.
    pub stability: f64,
}

impl Default for CharacterizeConfig {
    fn default() -> Self {
        Self { s_list: vec![0.3, 0.5, 0.7], p_list: vec![1.6, 2.0, 3.0], n_list: vec![32, 64], fields: 20, kmax: 4, stability: 0.2 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KornConfig {
    pub fields: usize,
    pub kmax: usize,
    /// Quadrature slack allowed on the q = 2 bounds.
    pub slack: f64,
}

impl Default for KornConfig {
    fn default() -> Self {
        Self { fields: 500, kmax: 4, slack: 0.01 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub prefix: String,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: PathBuf::from("out"), prefix: String::new() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: String,
    pub n: usize,
    pub s: f64,
    /// Finite horizon; absent means 𝔥 = ∞.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    /// Kernel normalization; absent means the default for the horizon.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c_h: Option<f64>,
    pub p_list: Vec<f64>,
    pub delta0: f64,
    pub seed: u64,
    pub r_max: f64,
    /// Band limit of the seeded test fields.
    pub kmax: usize,
    pub horizon_list: Vec<f64>,
    pub coefficient: CoefficientField,
    pub time_grid: TimeGridConfig,
    pub solver: SolverConfig,
    pub meyers: MeyersConfig,
    pub characterize: CharacterizeConfig,
    pub korn: KornConfig,
    pub output: OutputConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            experiment: "verify".into(),
            n: 32,
            s: 0.5,
            horizon: None,
            c_h: None,
            p_list: vec![2.0, 2.1, 2.2],
            delta0: 0.5,
            seed: 1,
            r_max: DEFAULT_R_MAX,
            kmax: 4,
            horizon_list: vec![0.4, 0.2, 0.1, 0.05],
            coefficient: CoefficientField::checkerboard(1.0, 10.0, 8),
            time_grid: TimeGridConfig::default(),
            solver: SolverConfig::default(),
            meyers: MeyersConfig::default(),
            characterize: CharacterizeConfig::default(),
            korn: KornConfig::default(),
            output: OutputConfig::default(),
        }
    }
}

/// Exponents fixed by (d, s) and the exponent r of the data embedding for each p.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DerivedExponents {
    /// 2^{*_s} = 2d/(d − 2s).
    pub sobolev_upper: f64,
    /// 2_{*_s} = 2d/(d + 2s).
    pub sobolev_lower: f64,
    /// r(p) = dp/((2 − p/2)d + sp), one per entry of p_list.
    pub data_exponents: Vec<f64>,
    /// r(p) − 2_{*_s} < δ₀ and p ∈ [2, 2^{*_s}), per entry of p_list.
    pub admissible: Vec<bool>,
}

pub fn data_exponent(p: f64, s: f64) -> f64 {
    D * p / ((2.0 - p / 2.0) * D + s * p)
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(CliError::Config(m));
        let pow2 = |n: usize| n >= 4 && n.is_power_of_two();
        if !pow2(self.n) {
            return bad(format!("n must be a power of two ≥ 4, got {}", self.n));
        }
        if let Some(&m) = self.meyers.n_list.iter().chain(&self.characterize.n_list).find(|&&m| !pow2(m)) {
            return bad(format!("grid sizes must be powers of two ≥ 4, got {m}"));
        }
        if !(self.s > 0.0 && self.s < 1.0) {
            return bad(format!("s must lie in (0, 1), got {}", self.s));
        }
        if let Some(p) = self.p_list.iter().chain(&self.characterize.p_list).find(|p| !(**p > 1.0 && p.is_finite())) {
            return bad(format!("exponents must lie in (1, ∞), got {p}"));
        }
        if !(self.delta0 > 0.0) {
            return bad(format!("delta0 must be positive, got {}", self.delta0));
        }
        if self.kmax == 0 || 2 * self.kmax >= self.n {
            return bad(format!("kmax must lie in [1, n/2), got {}", self.kmax));
        }
        self.coefficient.validate()?;
        self.kernel()?;
        self.tail()?;
        self.time_grid()?;
        self.solve_options().validate()?;
        Ok(())
    }

    pub fn kernel(&self) -> Result<KernelSpec> {
        let spec = match (self.horizon, self.c_h) {
            (None, None) => KernelSpec::infinite(self.s)?,
            (Some(h), None) => KernelSpec::finite(self.s, h)?,
            (h, Some(c)) => KernelSpec::new(self.s, h.map_or(Horizon::Infinite, Horizon::Finite), c)?,
        };
        Ok(spec.with_r_max(self.r_max)?)
    }

    pub fn tail(&self) -> Result<TailPolicy> {
        Ok(TailPolicy::new(self.r_max, true)?)
    }

    pub fn time_grid(&self) -> Result<TimeGrid> {
        let t = &self.time_grid;
        Ok(TimeGrid::log_spaced(t.nodes, t.t_min, t.t_max)?)
    }

    pub fn solve_options(&self) -> SolveOptions {
        let c = &self.solver;
        SolveOptions { varpi: c.varpi, cg_tol: c.cg_tol, max_iter: c.max_iter, operator_path: c.operator_path }
    }

    pub fn derived(&self) -> DerivedExponents {
        let upper = 2.0 * D / (D - 2.0 * self.s);
        let lower = 2.0 * D / (D + 2.0 * self.s);
        let data: Vec<f64> = self.p_list.iter().map(|&p| data_exponent(p, self.s)).collect();
        let admissible =
            self.p_list.iter().zip(&data).map(|(&p, &r)| (2.0..upper).contains(&p) && r - lower < self.delta0).collect();
        DerivedExponents { sobolev_upper: upper, sobolev_lower: lower, data_exponents: data, admissible }
    }

    /// SHA-256 of the canonical JSON form, hex encoded. Output location is left out.
    pub fn hash(&self) -> String {
        let bare = Self { output: OutputConfig::default(), ..self.clone() };
        let text = serde_json::to_string(&bare).expect("config serializes");
        Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let c = ExperimentConfig::default();
        let back = ExperimentConfig::from_toml(&c.to_toml()).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.hash(), c.hash());
    }

    #[test]
    fn partial_file_and_derived_exponents() {
        let c = ExperimentConfig::from_toml("n = 16\ns = 0.5\np_list = [2.0, 2.1]\n[coefficient]\nkind = \"constant\"\nalpha = 2.0\n").unwrap();
        assert_eq!(c.n, 16);
        let d = c.derived();
        assert!((d.sobolev_upper - 4.0).abs() < 1e-15 && (d.sobolev_lower - 4.0 / 3.0).abs() < 1e-15);
        assert!((d.data_exponents[0] - 4.0 / 3.0).abs() < 1e-15);
        assert!(d.admissible[0] && d.admissible[1]);
    }

    #[test]
    fn rejects_bad_values() {
        assert!(ExperimentConfig::from_toml("n = 24").is_err());
        assert!(ExperimentConfig::from_toml("p_list = [0.5]").is_err());
        assert!(ExperimentConfig::from_toml("s = 1.0").is_err());
        assert!(ExperimentConfig::from_toml("unknown_key = 1").is_err());
        assert!(ExperimentConfig::from_toml("horizon = 0.7").is_err());
    }

    #[test]
    fn hash_tracks_content() {
        let a = ExperimentConfig::default();
        let b = ExperimentConfig { seed: 2, ..a.clone() };
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
        let mut moved = a.clone();
        moved.output.dir = "elsewhere".into();
        assert_eq!(moved.hash(), a.hash());
    }
}
