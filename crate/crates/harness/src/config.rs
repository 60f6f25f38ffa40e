//! Experiment configuration: a versioned JSON schema whose defaults mirror
//! the benchmark's standard settings (burn-in 2000, thinning 50, penalty
//! grid of 100 points, ND beta 0.95, ARACNE tolerance 0).

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use mrf_bench_core::plm::EdgeRule;

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NetworkType {
    Grid,
    ScaleFree,
    SmallWorld,
}

impl NetworkType {
    pub fn name(&self) -> &'static str {
        match self {
            NetworkType::Grid => "grid",
            NetworkType::ScaleFree => "scale_free",
            NetworkType::SmallWorld => "small_world",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "grid" => Ok(NetworkType::Grid),
            "scale_free" => Ok(NetworkType::ScaleFree),
            "small_world" => Ok(NetworkType::SmallWorld),
            other => bail!("unknown network type `{other}` (grid, scale_free, small_world)"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Mi,
    Clr,
    Aracne,
    Nd,
    Plml1,
    Plmdca,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Mi,
        Method::Clr,
        Method::Aracne,
        Method::Nd,
        Method::Plml1,
        Method::Plmdca,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Method::Mi => "mi",
            Method::Clr => "clr",
            Method::Aracne => "aracne",
            Method::Nd => "nd",
            Method::Plml1 => "plml1",
            Method::Plmdca => "plmdca",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Method::ALL
            .iter()
            .find(|m| m.name() == s)
            .copied()
            .with_context(|| format!("unknown method `{s}` (mi, clr, aracne, nd, plml1, plmdca)"))
    }

    /// Whether this method consumes the shared MI matrix.
    pub fn uses_mi(&self) -> bool {
        matches!(self, Method::Mi | Method::Clr | Method::Aracne | Method::Nd)
    }
}

pub fn parse_method_list(csv: &str) -> Result<Vec<Method>> {
    let mut methods = Vec::new();
    for tok in csv.split(',') {
        let tok = tok.trim();
        if tok.is_empty() {
            continue;
        }
        let m = Method::parse(tok)?;
        if !methods.contains(&m) {
            methods.push(m);
        }
    }
    if methods.is_empty() {
        bail!("method list is empty");
    }
    Ok(methods)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SamplerSettings {
    pub burn_in: usize,
    pub thinning: usize,
    /// Parallelize the within-sweep hidden/visible updates. Output is
    /// identical either way; this is purely a scheduling choice.
    pub parallel_phases: bool,
}

impl Default for SamplerSettings {
    fn default() -> Self {
        Self { burn_in: 2000, thinning: 50, parallel_phases: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum L1Rule {
    Max,
    Min,
}

impl From<L1Rule> for EdgeRule {
    fn from(rule: L1Rule) -> EdgeRule {
        match rule {
            L1Rule::Max => EdgeRule::Max,
            L1Rule::Min => EdgeRule::Min,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MethodSettings {
    /// Number of penalty grid points for the L1 path.
    pub grid_size: usize,
    /// Eigenvalue ceiling for network deconvolution.
    pub nd_beta: f64,
    pub aracne_tolerance: f64,
    /// Edge-inclusion rule for plmL1.
    pub l1_rule: L1Rule,
    /// Override the sample-size rule for the plmDCA bias penalty.
    pub plm_lambda_bias: Option<f64>,
    /// Override the sample-size rule for the plmDCA coupling penalty.
    pub plm_lambda_couple: Option<f64>,
    /// Scale-free generator seed size and attachment count.
    pub sf_m0: usize,
    pub sf_m: usize,
    /// Small-world ring neighbours and rewiring probability.
    pub sw_k: usize,
    pub sw_p: f64,
}

impl Default for MethodSettings {
    fn default() -> Self {
        Self {
            grid_size: 100,
            nd_beta: 0.95,
            aracne_tolerance: 0.0,
            l1_rule: L1Rule::Max,
            plm_lambda_bias: None,
            plm_lambda_couple: None,
            sf_m0: 3,
            sf_m: 2,
            sw_k: 4,
            sw_p: 0.25,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub version: u32,
    pub network: NetworkType,
    pub d: usize,
    pub n: usize,
    pub replicates: usize,
    pub seed: u64,
    pub methods: Vec<Method>,
    #[serde(default)]
    pub sampler: SamplerSettings,
    #[serde(default)]
    pub settings: MethodSettings,
    pub output_dir: PathBuf,
    /// Run replicates concurrently (per-replicate RNG streams keep the
    /// output independent of scheduling).
    #[serde(default = "default_true")]
    pub parallel_replicates: bool,
}

fn default_true() -> bool {
    true
}

impl ExperimentConfig {
    pub fn new(network: NetworkType, d: usize, n: usize, replicates: usize, seed: u64, methods: Vec<Method>, output_dir: PathBuf) -> Self {
        Self {
            version: CONFIG_VERSION,
            network,
            d,
            n,
            replicates,
            seed,
            methods,
            sampler: SamplerSettings::default(),
            settings: MethodSettings::default(),
            output_dir,
            parallel_replicates: true,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text).context("invalid config")?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialization cannot fail")
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != CONFIG_VERSION {
            bail!("unsupported config version {} (expected {CONFIG_VERSION})", self.version);
        }
        if self.d < 2 {
            bail!("d must be at least 2");
        }
        if self.n == 0 {
            bail!("n must be positive");
        }
        if self.replicates == 0 {
            bail!("replicates must be at least 1");
        }
        if self.methods.is_empty() {
            bail!("at least one method is required");
        }
        let mut seen = Vec::new();
        for m in &self.methods {
            if seen.contains(m) {
                bail!("duplicate method `{}`", m.name());
            }
            seen.push(*m);
        }
        if self.sampler.thinning == 0 {
            bail!("thinning must be positive");
        }
        if self.settings.grid_size == 0 {
            bail!("grid_size must be positive");
        }
        if !(0.0 < self.settings.nd_beta && self.settings.nd_beta < 1.0) {
            bail!("nd_beta must lie in (0, 1)");
        }
        if self.settings.aracne_tolerance < 0.0 {
            bail!("aracne_tolerance must be non-negative");
        }
        match self.network {
            NetworkType::ScaleFree => {
                let (m0, m) = (self.settings.sf_m0, self.settings.sf_m);
                if m < 1 || m > m0 || self.d <= m0 {
                    bail!("scale-free parameters need d > m0 >= m >= 1");
                }
            }
            NetworkType::SmallWorld => {
                let k = self.settings.sw_k;
                if k == 0 || !k.is_multiple_of(2) || k >= self.d {
                    bail!("small-world parameters need even 0 < k < d");
                }
                if !(0.0..=1.0).contains(&self.settings.sw_p) {
                    bail!("small-world p must lie in [0, 1]");
                }
            }
            NetworkType::Grid => {}
        }
        Ok(())
    }
}
