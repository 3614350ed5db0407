//! Layered run configuration: built-in defaults, then an optional config
//! file, then command-line flags. The resolved result is rendered with every
//! key present so a run can be repeated from its echo.

use std::path::Path;

use pcstruct::kvconfig::fmt_real;
use pcstruct::{CannyParams, FilterBankConfig, KvConfig, LossWeights, SimilarityParams};

use crate::error::{CliError, CliResult};

/// Keys under this prefix describe the invocation (command, inputs) and are
/// ignored when a rendered config is loaded back.
pub const RUN_PREFIX: &str = "run.";

const KEYS: [&str; 22] = [
    "scales",
    "orientations",
    "min_wavelength",
    "mult",
    "sigma_on_f",
    "d_theta_sigma",
    "epsilon",
    "t1",
    "t2",
    "alpha",
    "beta",
    "gamma",
    "lambda",
    "pc_start_epoch",
    "step_scale",
    "seed",
    "align_scale",
    "canny_sigma",
    "canny_low",
    "canny_high",
    "noise_k",
    "pc_bits",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    pub bank: FilterBankConfig,
    pub epsilon: f64,
    pub similarity: SimilarityParams,
    pub weights: LossWeights,
    pub step_scale: f64,
    pub seed: Option<u64>,
    pub align_scale: bool,
    pub canny: CannyParams,
    /// `None` selects plain phase congruency; `Some(k)` subtracts a Rayleigh
    /// noise floor of mean + k standard deviations.
    pub noise_k: Option<f64>,
    pub pc_bits: u32,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            bank: FilterBankConfig::default(),
            epsilon: pcstruct::phase::DEFAULT_EPSILON,
            similarity: SimilarityParams::default(),
            weights: LossWeights::default(),
            step_scale: 1.0,
            seed: None,
            align_scale: false,
            canny: CannyParams::default(),
            noise_k: None,
            pc_bits: 8,
        }
    }
}

fn opt_text(v: Option<impl ToString>) -> String {
    v.map_or_else(|| "none".to_string(), |v| v.to_string())
}

fn get_opt<T: std::str::FromStr>(kv: &KvConfig, key: &str) -> CliResult<Option<T>> {
    match kv.get_str(key) {
        None | Some("none") => Ok(None),
        Some(_) => Ok(kv.get(key)?),
    }
}

fn require<T: std::str::FromStr>(kv: &KvConfig, key: &str) -> CliResult<T> {
    kv.get(key)?
        .ok_or_else(|| CliError::usage(format!("missing config key {key}")))
}

fn positive(name: &str, v: f64) -> CliResult<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::usage(format!("{name} must be positive, got {v}")))
    }
}

impl Params {
    pub fn to_kv(&self) -> KvConfig {
        let mut kv = KvConfig::new();
        self.bank.write_kv(&mut kv);
        // reals go through fmt_real so the echo reproduces them bit for bit
        for key in ["min_wavelength", "mult", "sigma_on_f", "d_theta_sigma"] {
            let v: f64 = kv.get(key).ok().flatten().unwrap_or_default();
            kv.set(key, fmt_real(v));
        }
        self.weights.write_kv(&mut kv);
        for (key, v) in [
            ("alpha", self.weights.alpha),
            ("beta", self.weights.beta),
            ("gamma", self.weights.gamma),
            ("lambda", self.weights.lambda),
            ("epsilon", self.epsilon),
            ("t1", self.similarity.t1),
            ("t2", self.similarity.t2),
            ("step_scale", self.step_scale),
            ("canny_sigma", self.canny.sigma),
            ("canny_low", self.canny.low),
            ("canny_high", self.canny.high),
        ] {
            kv.set(key, fmt_real(v));
        }
        kv.set("seed", opt_text(self.seed));
        kv.set("align_scale", self.align_scale);
        kv.set("noise_k", opt_text(self.noise_k.map(fmt_real)));
        kv.set("pc_bits", self.pc_bits);
        kv
    }

    /// Reads a complete parameter set; every key must be present.
    pub fn from_kv(kv: &KvConfig) -> CliResult<Self> {
        for (key, _) in kv.iter() {
            if !key.starts_with(RUN_PREFIX) && !KEYS.contains(&key) {
                return Err(CliError::usage(format!("unknown config key {key}")));
            }
        }
        let bank = FilterBankConfig::from_kv(kv)?;
        let weights = LossWeights::from_kv(kv)?;
        let similarity = SimilarityParams {
            t1: positive("t1", require(kv, "t1")?)?,
            t2: positive("t2", require(kv, "t2")?)?,
        };
        let canny = CannyParams {
            sigma: positive("canny_sigma", require(kv, "canny_sigma")?)?,
            low: require(kv, "canny_low")?,
            high: require(kv, "canny_high")?,
        };
        let noise_k: Option<f64> = get_opt(kv, "noise_k")?;
        if let Some(k) = noise_k {
            if !(k >= 0.0 && k.is_finite()) {
                return Err(CliError::usage(format!("noise_k must be non-negative, got {k}")));
            }
        }
        let pc_bits: u32 = require(kv, "pc_bits")?;
        if pc_bits != 8 && pc_bits != 16 {
            return Err(CliError::usage(format!("pc_bits must be 8 or 16, got {pc_bits}")));
        }
        Ok(Self {
            bank,
            epsilon: positive("epsilon", require(kv, "epsilon")?)?,
            similarity,
            weights,
            step_scale: positive("step_scale", require(kv, "step_scale")?)?,
            seed: get_opt(kv, "seed")?,
            align_scale: require(kv, "align_scale")?,
            canny,
            noise_k,
            pc_bits,
        })
    }

    /// Defaults, overlaid with `file` (if any), overlaid with `overrides`.
    pub fn resolve(file: Option<&Path>, overrides: &KvConfig) -> CliResult<Self> {
        let mut kv = Self::default().to_kv();
        if let Some(path) = file {
            kv.merge(&KvConfig::load(path)?);
        }
        kv.merge(overrides);
        Self::from_kv(&kv)
    }
}

/// The full echo for one invocation: parameters plus `run.*` descriptors.
pub fn render(params: &Params, run: &[(&str, String)]) -> String {
    let mut kv = params.to_kv();
    for (k, v) in run {
        kv.set(&format!("{RUN_PREFIX}{k}"), v);
    }
    kv.render()
}
