//! Flat `key = value` experiment configuration.
//!
//! Every experiment here is a flat hyperparameter tuple, so the config format
//! is deliberately plain: one `key = value` pair per line, `#` starts a
//! comment line, blank lines are ignored, list values are comma-separated
//! (`n_grid = 32,64,128`). No sections, no nesting, no quoting.
//!
//! Keys are validated against the selected command before anything runs:
//! unknown keys, duplicate keys, malformed values and out-of-range numbers
//! are all hard errors that name the offending key. Omitted keys take the
//! defaults documented on each config struct, and [`echo`] lists every
//! effective setting, so the run report alone is enough to reproduce a run.
//!
//! [`echo`]: ExperimentSettings::echo

use std::collections::BTreeMap;
use std::fmt::Display;
use std::str::FromStr;

use crate::error::{RandresError, Result};
use crate::feedback::{horizon_for_tail, RiskSpec};
use crate::targets::ContractionTarget;

/// Master seed when neither the config file nor `--seed` provides one.
pub const DEFAULT_SEED: u64 = 17;

/// Parsed `key = value` lines, before command-specific interpretation.
#[derive(Clone, Debug, Default)]
pub struct KvMap {
    entries: BTreeMap<String, String>,
}

impl KvMap {
    /// Parses config text. Lines without `=` and repeated keys are errors;
    /// later commands reject keys they do not recognize.
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(RandresError::Config(format!(
                    "line {}: expected `key = value`, got `{line}`",
                    idx + 1
                )));
            };
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if key.is_empty() {
                return Err(RandresError::Config(format!("line {}: empty key", idx + 1)));
            }
            if entries.insert(key.clone(), value).is_some() {
                return Err(RandresError::Config(format!(
                    "line {}: duplicate key `{key}`",
                    idx + 1
                )));
            }
        }
        Ok(KvMap { entries })
    }

    /// Errors on any key outside `known`, listing the valid set.
    pub fn check_known(&self, command: &str, known: &[&str]) -> Result<()> {
        for key in self.entries.keys() {
            if !known.contains(&key.as_str()) {
                return Err(RandresError::Config(format!(
                    "unknown key `{key}` for {command} (known keys: {})",
                    known.join(", ")
                )));
            }
        }
        Ok(())
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|s| s.as_str())
    }

    /// Scalar value with a default.
    pub fn get<T>(&self, key: &str, default: T) -> Result<T>
    where
        T: FromStr,
        T::Err: Display,
    {
        match self.raw(key) {
            None => Ok(default),
            Some(raw) => parse_one(key, raw),
        }
    }

    /// Optional scalar: `None` when the key is absent.
    pub fn get_opt<T>(&self, key: &str) -> Result<Option<T>>
    where
        T: FromStr,
        T::Err: Display,
    {
        self.raw(key).map(|raw| parse_one(key, raw)).transpose()
    }

    /// Comma-separated list with a default.
    pub fn get_list<T>(&self, key: &str, default: &[T]) -> Result<Vec<T>>
    where
        T: FromStr + Clone,
        T::Err: Display,
    {
        match self.raw(key) {
            None => Ok(default.to_vec()),
            Some(raw) => raw.split(',').map(|part| parse_one(key, part.trim())).collect(),
        }
    }

    /// One of a fixed set of lowercase words.
    pub fn get_choice(&self, key: &str, default: &str, choices: &[&str]) -> Result<String> {
        let raw = self.raw(key).unwrap_or(default);
        if choices.contains(&raw) {
            Ok(raw.to_string())
        } else {
            Err(RandresError::Config(format!(
                "key `{key}`: expected one of {}, got `{raw}`",
                choices.join("|")
            )))
        }
    }
}

fn parse_one<T>(key: &str, raw: &str) -> Result<T>
where
    T: FromStr,
    T::Err: Display,
{
    raw.parse()
        .map_err(|e| RandresError::Config(format!("key `{key}`: invalid value `{raw}` ({e})")))
}

fn require(cond: bool, key: &str, what: &str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(RandresError::Config(format!("key `{key}`: {what}")))
    }
}

fn resolve_seed(kv: &KvMap, flag: Option<u64>) -> Result<u64> {
    match flag {
        Some(s) => Ok(s),
        None => kv.get("seed", DEFAULT_SEED),
    }
}

fn join_list<T: Display>(xs: &[T]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

/// Common surface of the per-command config structs.
pub trait ExperimentSettings {
    /// Every effective setting as `(key, value)` pairs in a fixed order,
    /// defaults included. Feeding these lines back through [`KvMap::parse`]
    /// reproduces the run bit-exactly.
    fn echo(&self) -> Vec<(&'static str, String)>;
    /// The resolved master seed.
    fn seed(&self) -> u64;
}

/// `represent-check`: Monte Carlo test of the integral representation
/// `f(v) = int pi(w,u) sigma(<v,w> + u) dw du` on a diagonal probe grid.
///
/// Defaults: `q = 1`, `m = 1`, `r_support = 5`, `grid_points = 5`,
/// `n_samples = 1000000`.
#[derive(Clone, Debug)]
pub struct RepresentCheckConfig {
    pub q: usize,
    pub m: f64,
    pub r_support: f64,
    pub grid_points: usize,
    pub n_samples: u64,
    pub seed: u64,
}

impl RepresentCheckConfig {
    pub const KEYS: &'static [&'static str] =
        &["q", "m", "r_support", "grid_points", "n_samples", "seed"];

    pub fn from_kv(kv: &KvMap, seed_flag: Option<u64>) -> Result<Self> {
        kv.check_known("represent-check", Self::KEYS)?;
        let cfg = RepresentCheckConfig {
            q: kv.get("q", 1)?,
            m: kv.get("m", 1.0)?,
            r_support: kv.get("r_support", 5.0)?,
            grid_points: kv.get("grid_points", 5)?,
            n_samples: kv.get("n_samples", 1_000_000)?,
            seed: resolve_seed(kv, seed_flag)?,
        };
        require(cfg.q >= 1, "q", "input dimension must be at least 1")?;
        require(cfg.m > 0.0 && cfg.m.is_finite(), "m", "input bound must be positive")?;
        require(
            cfg.r_support > 0.0 && cfg.r_support.is_finite(),
            "r_support",
            "support radius must be positive",
        )?;
        require(cfg.grid_points >= 1, "grid_points", "need at least one probe")?;
        require(cfg.n_samples >= 1_000, "n_samples", "need at least 1000 samples")?;
        Ok(cfg)
    }
}

impl ExperimentSettings for RepresentCheckConfig {
    fn echo(&self) -> Vec<(&'static str, String)> {
        vec![
            ("q", self.q.to_string()),
            ("m", self.m.to_string()),
            ("r_support", self.r_support.to_string()),
            ("grid_points", self.grid_points.to_string()),
            ("n_samples", self.n_samples.to_string()),
            ("seed", self.seed.to_string()),
        ]
    }

    fn seed(&self) -> u64 {
        self.seed
    }
}

/// `static-conv`: mean squared error of the random feature approximation
/// versus width, with the oracle readout and optionally a ridge baseline.
///
/// Defaults: `q = 1`, `m = 1`, `r_support = 5`,
/// `n_grid = 32,...,4096` (doubling), `n_seeds = 40`, `n_test = 512`,
/// `readout = oracle` (others: `ridge`, `both`), `ridge_lambda = 1e-6`,
/// `ridge_train = 4096`.
#[derive(Clone, Debug)]
pub struct StaticConvConfig {
    pub q: usize,
    pub m: f64,
    pub r_support: f64,
    pub n_grid: Vec<usize>,
    pub n_seeds: usize,
    pub n_test: usize,
    pub readout: String,
    pub ridge_lambda: f64,
    pub ridge_train: usize,
    pub seed: u64,
}

impl StaticConvConfig {
    pub const KEYS: &'static [&'static str] = &[
        "q",
        "m",
        "r_support",
        "n_grid",
        "n_seeds",
        "n_test",
        "readout",
        "ridge_lambda",
        "ridge_train",
        "seed",
    ];

    pub fn from_kv(kv: &KvMap, seed_flag: Option<u64>) -> Result<Self> {
        kv.check_known("static-conv", Self::KEYS)?;
        let cfg = StaticConvConfig {
            q: kv.get("q", 1)?,
            m: kv.get("m", 1.0)?,
            r_support: kv.get("r_support", 5.0)?,
            n_grid: kv.get_list("n_grid", &[32, 64, 128, 256, 512, 1024, 2048, 4096])?,
            n_seeds: kv.get("n_seeds", 40)?,
            n_test: kv.get("n_test", 512)?,
            readout: kv.get_choice("readout", "oracle", &["oracle", "ridge", "both"])?,
            ridge_lambda: kv.get("ridge_lambda", 1e-6)?,
            ridge_train: kv.get("ridge_train", 4096)?,
            seed: resolve_seed(kv, seed_flag)?,
        };
        require(cfg.q >= 1, "q", "input dimension must be at least 1")?;
        require(cfg.m > 0.0 && cfg.m.is_finite(), "m", "input bound must be positive")?;
        require(
            cfg.r_support > 0.0 && cfg.r_support.is_finite(),
            "r_support",
            "support radius must be positive",
        )?;
        require(!cfg.n_grid.is_empty(), "n_grid", "need at least one width")?;
        require(cfg.n_grid.iter().all(|&n| n >= 1), "n_grid", "widths must be at least 1")?;
        require(cfg.n_seeds >= 2, "n_seeds", "need at least 2 seeds for a CI")?;
        require(cfg.n_test >= 1, "n_test", "need at least one test point")?;
        if cfg.readout != "oracle" {
            require(
                cfg.ridge_lambda > 0.0 && cfg.ridge_lambda.is_finite(),
                "ridge_lambda",
                "regularization must be positive",
            )?;
            require(cfg.ridge_train >= 1, "ridge_train", "need at least one training point")?;
        }
        Ok(cfg)
    }
}

impl ExperimentSettings for StaticConvConfig {
    fn echo(&self) -> Vec<(&'static str, String)> {
        vec![
            ("q", self.q.to_string()),
            ("m", self.m.to_string()),
            ("r_support", self.r_support.to_string()),
            ("n_grid", join_list(&self.n_grid)),
            ("n_seeds", self.n_seeds.to_string()),
            ("n_test", self.n_test.to_string()),
            ("readout", self.readout.clone()),
            ("ridge_lambda", self.ridge_lambda.to_string()),
            ("ridge_train", self.ridge_train.to_string()),
            ("seed", self.seed.to_string()),
        ]
    }

    fn seed(&self) -> u64 {
        self.seed
    }
}

/// `esn-equiv`: structural equivalence trials for the doubled
/// shift-reservoir network; trials cycle through `t_list` x `n_list`.
///
/// Defaults: `d = 1`, `t_list = 1,2,4`, `n_list = 4,16`, `trials = 100`,
/// `r_support = 3`, `m = 1`.
#[derive(Clone, Debug)]
pub struct EsnEquivConfig {
    pub d: usize,
    pub t_list: Vec<usize>,
    pub n_list: Vec<usize>,
    pub trials: usize,
    pub r_support: f64,
    pub m: f64,
    pub seed: u64,
}

impl EsnEquivConfig {
    pub const KEYS: &'static [&'static str] =
        &["d", "t_list", "n_list", "trials", "r_support", "m", "seed"];

    pub fn from_kv(kv: &KvMap, seed_flag: Option<u64>) -> Result<Self> {
        kv.check_known("esn-equiv", Self::KEYS)?;
        let cfg = EsnEquivConfig {
            d: kv.get("d", 1)?,
            t_list: kv.get_list("t_list", &[1, 2, 4])?,
            n_list: kv.get_list("n_list", &[4, 16])?,
            trials: kv.get("trials", 100)?,
            r_support: kv.get("r_support", 3.0)?,
            m: kv.get("m", 1.0)?,
            seed: resolve_seed(kv, seed_flag)?,
        };
        require(cfg.d >= 1, "d", "input dimension must be at least 1")?;
        require(
            !cfg.t_list.is_empty() && cfg.t_list.iter().all(|&t| t >= 1),
            "t_list",
            "lag depths must be nonempty and at least 1",
        )?;
        require(
            !cfg.n_list.is_empty() && cfg.n_list.iter().all(|&n| n >= 1),
            "n_list",
            "widths must be nonempty and at least 1",
        )?;
        require(cfg.trials >= 1, "trials", "need at least one trial")?;
        require(
            cfg.r_support > 0.0 && cfg.r_support.is_finite(),
            "r_support",
            "support radius must be positive",
        )?;
        require(cfg.m > 0.0 && cfg.m.is_finite(), "m", "input bound must be positive")?;
        Ok(cfg)
    }
}

impl ExperimentSettings for EsnEquivConfig {
    fn echo(&self) -> Vec<(&'static str, String)> {
        vec![
            ("d", self.d.to_string()),
            ("t_list", join_list(&self.t_list)),
            ("n_list", join_list(&self.n_list)),
            ("trials", self.trials.to_string()),
            ("r_support", self.r_support.to_string()),
            ("m", self.m.to_string()),
            ("seed", self.seed.to_string()),
        ]
    }

    fn seed(&self) -> u64 {
        self.seed
    }
}

/// `esn-conv`: ESN error versus width for the exponential-memory functional
/// under the logarithmic schedule `T+1 = ceil(alpha ln sqrt N)`,
/// `R = beta ln sqrt N`.
///
/// Defaults: `lambda = 0.5`, `alpha = 0.5`, `beta = 2`,
/// `n_grid = 64,...,8192` (doubling), `n_seeds = 30`, `n_test = 256`,
/// `m = 1`.
#[derive(Clone, Debug)]
pub struct EsnConvConfig {
    pub lambda: f64,
    pub alpha: f64,
    pub beta: f64,
    pub n_grid: Vec<usize>,
    pub n_seeds: usize,
    pub n_test: usize,
    pub m: f64,
    pub seed: u64,
}

impl EsnConvConfig {
    pub const KEYS: &'static [&'static str] =
        &["lambda", "alpha", "beta", "n_grid", "n_seeds", "n_test", "m", "seed"];

    pub fn from_kv(kv: &KvMap, seed_flag: Option<u64>) -> Result<Self> {
        kv.check_known("esn-conv", Self::KEYS)?;
        let cfg = EsnConvConfig {
            lambda: kv.get("lambda", 0.5)?,
            alpha: kv.get("alpha", 0.5)?,
            beta: kv.get("beta", 2.0)?,
            n_grid: kv.get_list("n_grid", &[64, 128, 256, 512, 1024, 2048, 4096, 8192])?,
            n_seeds: kv.get("n_seeds", 30)?,
            n_test: kv.get("n_test", 256)?,
            m: kv.get("m", 1.0)?,
            seed: resolve_seed(kv, seed_flag)?,
        };
        require(
            cfg.lambda > 0.0 && cfg.lambda < 1.0,
            "lambda",
            "memory decay must lie in (0, 1)",
        )?;
        require(cfg.alpha > 0.0 && cfg.alpha.is_finite(), "alpha", "must be positive")?;
        if !(cfg.beta > cfg.alpha) {
            return Err(RandresError::Config(format!(
                "key `beta`: the logarithmic rate schedule requires beta > alpha > 0 \
                 (got alpha = {}, beta = {}); the convergence exponent is not positive otherwise",
                cfg.alpha, cfg.beta
            )));
        }
        require(!cfg.n_grid.is_empty(), "n_grid", "need at least one width")?;
        require(cfg.n_grid.iter().all(|&n| n >= 2), "n_grid", "widths must be at least 2")?;
        require(cfg.n_seeds >= 2, "n_seeds", "need at least 2 seeds for a CI")?;
        require(cfg.n_test >= 1, "n_test", "need at least one test sequence")?;
        require(cfg.m > 0.0 && cfg.m.is_finite(), "m", "input bound must be positive")?;
        Ok(cfg)
    }
}

impl ExperimentSettings for EsnConvConfig {
    fn echo(&self) -> Vec<(&'static str, String)> {
        vec![
            ("lambda", self.lambda.to_string()),
            ("alpha", self.alpha.to_string()),
            ("beta", self.beta.to_string()),
            ("n_grid", join_list(&self.n_grid)),
            ("n_seeds", self.n_seeds.to_string()),
            ("n_test", self.n_test.to_string()),
            ("m", self.m.to_string()),
            ("seed", self.seed.to_string()),
        ]
    }

    fn seed(&self) -> u64 {
        self.seed
    }
}

/// `feedback-conv`: risk gap of the feedback network versus width, plus the
/// ESP event frequency at `esp_width` and the mean-field defect `s_n`.
///
/// Defaults: `m = 1`, `amplitude = 0.5` (its length sets the state
/// dimension), `input_dim = 1`, `n_grid = 64,256,1024`, `n_mc = 2000`,
/// `n_seeds = 40`, `delta = 0.5`, `noise = 0.01`, `esp_width = 512`,
/// `esp_trials = 50`, `esp_grid = 9`, `s_n_grid = 5`. `t_horizon` defaults
/// to the smallest horizon whose contraction tail drops below 1e-6;
/// `s_n_trunc` is unset (exact density), set it to a radius to measure the
/// defect of a truncated sampler.
#[derive(Clone, Debug)]
pub struct FeedbackConvConfig {
    pub m: f64,
    pub amplitude: Vec<f64>,
    pub input_dim: usize,
    pub n_grid: Vec<usize>,
    pub n_mc: usize,
    pub n_seeds: usize,
    pub t_horizon: usize,
    pub delta: f64,
    pub noise: f64,
    pub esp_width: usize,
    pub esp_trials: usize,
    pub esp_grid: usize,
    pub s_n_grid: usize,
    pub s_n_trunc: Option<f64>,
    pub seed: u64,
}

impl FeedbackConvConfig {
    pub const KEYS: &'static [&'static str] = &[
        "m",
        "amplitude",
        "input_dim",
        "n_grid",
        "n_mc",
        "n_seeds",
        "t_horizon",
        "delta",
        "noise",
        "esp_width",
        "esp_trials",
        "esp_grid",
        "s_n_grid",
        "s_n_trunc",
        "seed",
    ];

    pub fn from_kv(kv: &KvMap, seed_flag: Option<u64>) -> Result<Self> {
        kv.check_known("feedback-conv", Self::KEYS)?;
        let m: f64 = kv.get("m", 1.0)?;
        let amplitude: Vec<f64> = kv.get_list("amplitude", &[0.5])?;
        let input_dim: usize = kv.get("input_dim", 1)?;
        require(m > 0.0 && m.is_finite(), "m", "input bound must be positive")?;
        require(!amplitude.is_empty(), "amplitude", "need at least one component")?;
        require(
            amplitude.iter().all(|a| a.is_finite()),
            "amplitude",
            "components must be finite",
        )?;
        require(input_dim >= 1, "input_dim", "input dimension must be at least 1")?;
        // The default horizon depends on the target's contraction factor, so
        // build the target first; this also front-loads its own validation.
        let target = ContractionTarget::new(amplitude.len(), input_dim, m, amplitude.clone())
            .map_err(|e| RandresError::Config(e.to_string()))?;
        let t_horizon = match kv.get_opt("t_horizon")? {
            Some(t) => t,
            None => horizon_for_tail(target.contraction_r, 1e-6),
        };
        let cfg = FeedbackConvConfig {
            m,
            amplitude,
            input_dim,
            n_grid: kv.get_list("n_grid", &[64, 256, 1024])?,
            n_mc: kv.get("n_mc", 2000)?,
            n_seeds: kv.get("n_seeds", 40)?,
            t_horizon,
            delta: kv.get("delta", 0.5)?,
            noise: kv.get("noise", 0.01)?,
            esp_width: kv.get("esp_width", 512)?,
            esp_trials: kv.get("esp_trials", 50)?,
            esp_grid: kv.get("esp_grid", 9)?,
            s_n_grid: kv.get("s_n_grid", 5)?,
            s_n_trunc: kv.get_opt("s_n_trunc")?,
            seed: resolve_seed(kv, seed_flag)?,
        };
        require(!cfg.n_grid.is_empty(), "n_grid", "need at least one width")?;
        require(cfg.n_grid.iter().all(|&n| n >= 1), "n_grid", "widths must be at least 1")?;
        require(cfg.n_mc >= 1, "n_mc", "need at least one test window")?;
        require(cfg.n_seeds >= 2, "n_seeds", "need at least 2 seeds for a CI")?;
        require(cfg.delta > 0.0 && cfg.delta < 1.0, "delta", "must lie in (0, 1)")?;
        require(cfg.noise >= 0.0 && cfg.noise.is_finite(), "noise", "must be finite and >= 0")?;
        require(cfg.esp_width >= 1, "esp_width", "width must be at least 1")?;
        require(
            cfg.esp_trials >= 30,
            "esp_trials",
            "need at least 30 trials for a stable frequency",
        )?;
        require(cfg.esp_grid >= 1, "esp_grid", "need at least one probe per axis")?;
        require(cfg.s_n_grid >= 1, "s_n_grid", "need at least one probe state")?;
        if let Some(r) = cfg.s_n_trunc {
            require(r > 0.0 && r.is_finite(), "s_n_trunc", "truncation radius must be positive")?;
        }
        Ok(cfg)
    }

    /// The target this config describes.
    pub fn target(&self) -> Result<ContractionTarget> {
        ContractionTarget::new(
            self.amplitude.len(),
            self.input_dim,
            self.m,
            self.amplitude.clone(),
        )
    }

    /// The risk specification this config describes.
    pub fn risk_spec(&self) -> RiskSpec {
        RiskSpec {
            loss: crate::feedback::LossKind::Absolute,
            label_noise: self.noise,
            t_horizon: self.t_horizon,
            delta: self.delta,
        }
    }
}

impl ExperimentSettings for FeedbackConvConfig {
    fn echo(&self) -> Vec<(&'static str, String)> {
        let mut lines = vec![
            ("m", self.m.to_string()),
            ("amplitude", join_list(&self.amplitude)),
            ("input_dim", self.input_dim.to_string()),
            ("n_grid", join_list(&self.n_grid)),
            ("n_mc", self.n_mc.to_string()),
            ("n_seeds", self.n_seeds.to_string()),
            ("t_horizon", self.t_horizon.to_string()),
            ("delta", self.delta.to_string()),
            ("noise", self.noise.to_string()),
            ("esp_width", self.esp_width.to_string()),
            ("esp_trials", self.esp_trials.to_string()),
            ("esp_grid", self.esp_grid.to_string()),
            ("s_n_grid", self.s_n_grid.to_string()),
        ];
        if let Some(r) = self.s_n_trunc {
            lines.push(("s_n_trunc", r.to_string()));
        }
        lines.push(("seed", self.seed.to_string()));
        lines
    }

    fn seed(&self) -> u64 {
        self.seed
    }
}

/// `constants`: the error-bound constants of the static construction,
/// evaluated by quadrature.
///
/// Defaults: `q = 1`, `m = 1`, `r_support = 5`, `n_at = 1024` (the width the
/// predicted root MSE is quoted at).
#[derive(Clone, Debug)]
pub struct ConstantsConfig {
    pub q: usize,
    pub m: f64,
    pub r_support: f64,
    pub n_at: usize,
    pub seed: u64,
}

impl ConstantsConfig {
    pub const KEYS: &'static [&'static str] = &["q", "m", "r_support", "n_at", "seed"];

    pub fn from_kv(kv: &KvMap, seed_flag: Option<u64>) -> Result<Self> {
        kv.check_known("constants", Self::KEYS)?;
        let cfg = ConstantsConfig {
            q: kv.get("q", 1)?,
            m: kv.get("m", 1.0)?,
            r_support: kv.get("r_support", 5.0)?,
            n_at: kv.get("n_at", 1024)?,
            seed: resolve_seed(kv, seed_flag)?,
        };
        require(cfg.q >= 1, "q", "input dimension must be at least 1")?;
        require(cfg.m > 0.0 && cfg.m.is_finite(), "m", "input bound must be positive")?;
        require(
            cfg.r_support > 0.0 && cfg.r_support.is_finite(),
            "r_support",
            "support radius must be positive",
        )?;
        require(cfg.n_at >= 1, "n_at", "width must be at least 1")?;
        Ok(cfg)
    }
}

impl ExperimentSettings for ConstantsConfig {
    fn echo(&self) -> Vec<(&'static str, String)> {
        vec![
            ("q", self.q.to_string()),
            ("m", self.m.to_string()),
            ("r_support", self.r_support.to_string()),
            ("n_at", self.n_at.to_string()),
            ("seed", self.seed.to_string()),
        ]
    }

    fn seed(&self) -> u64 {
        self.seed
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parser_handles_comments_blanks_and_spacing() {
        let kv = KvMap::parse(
            "# a comment\n\n  n_seeds =  8 \nreadout=ridge\n\t# indented comment\nn_grid = 32, 64\n",
        )
        .unwrap();
        assert_eq!(kv.get::<usize>("n_seeds", 0).unwrap(), 8);
        assert_eq!(kv.get_choice("readout", "oracle", &["oracle", "ridge"]).unwrap(), "ridge");
        assert_eq!(kv.get_list::<usize>("n_grid", &[]).unwrap(), vec![32, 64]);
        assert_eq!(kv.get::<usize>("absent", 7).unwrap(), 7);
    }

    #[test]
    fn parser_rejects_duplicates_and_malformed_lines() {
        let err = KvMap::parse("a = 1\na = 2\n").unwrap_err().to_string();
        assert!(err.contains("duplicate key `a`"), "{err}");
        let err = KvMap::parse("just words\n").unwrap_err().to_string();
        assert!(err.contains("expected `key = value`"), "{err}");
        let err = KvMap::parse("= 3\n").unwrap_err().to_string();
        assert!(err.contains("empty key"), "{err}");
    }

    #[test]
    fn unknown_keys_are_named() {
        let kv = KvMap::parse("grid_pints = 5\n").unwrap();
        let err = RepresentCheckConfig::from_kv(&kv, None).unwrap_err().to_string();
        assert!(err.contains("unknown key `grid_pints`"), "{err}");
        assert!(err.contains("grid_points"), "should list the valid keys: {err}");
    }

    #[test]
    fn minimal_static_config_is_fully_populated() {
        let cfg = StaticConvConfig::from_kv(&KvMap::default(), None).unwrap();
        assert_eq!(cfg.q, 1);
        assert_eq!(cfg.m, 1.0);
        assert_eq!(cfg.r_support, 5.0);
        assert_eq!(cfg.n_grid, vec![32, 64, 128, 256, 512, 1024, 2048, 4096]);
        assert_eq!(cfg.n_seeds, 40);
        assert_eq!(cfg.n_test, 512);
        assert_eq!(cfg.readout, "oracle");
        assert_eq!(cfg.seed, DEFAULT_SEED);
        // Round trip: echoing and reparsing gives the same config.
        let text: String =
            cfg.echo().iter().map(|(k, v)| format!("{k} = {v}\n")).collect();
        let again = StaticConvConfig::from_kv(&KvMap::parse(&text).unwrap(), None).unwrap();
        assert_eq!(again.n_grid, cfg.n_grid);
        assert_eq!(again.seed, cfg.seed);
    }

    #[test]
    fn negative_widths_are_rejected_by_key_name() {
        let kv = KvMap::parse("n_grid = 32,-64\n").unwrap();
        let err = StaticConvConfig::from_kv(&kv, None).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        let msg = err.to_string();
        assert!(msg.contains("`n_grid`") && msg.contains("-64"), "{msg}");
    }

    #[test]
    fn flat_schedule_is_rejected_with_the_hypothesis() {
        let kv = KvMap::parse("alpha = 2.0\nbeta = 0.5\n").unwrap();
        let err = EsnConvConfig::from_kv(&kv, None).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        let msg = err.to_string();
        assert!(msg.contains("beta > alpha"), "{msg}");
        // Equality is rejected too.
        let kv = KvMap::parse("alpha = 1.0\nbeta = 1.0\n").unwrap();
        assert!(EsnConvConfig::from_kv(&kv, None).is_err());
    }

    #[test]
    fn seed_flag_overrides_the_config_file() {
        let kv = KvMap::parse("seed = 5\n").unwrap();
        assert_eq!(ConstantsConfig::from_kv(&kv, None).unwrap().seed, 5);
        assert_eq!(ConstantsConfig::from_kv(&kv, Some(9)).unwrap().seed, 9);
        assert_eq!(
            ConstantsConfig::from_kv(&KvMap::default(), None).unwrap().seed,
            DEFAULT_SEED
        );
    }

    #[test]
    fn feedback_horizon_defaults_to_the_tail_cutoff() {
        let cfg = FeedbackConvConfig::from_kv(&KvMap::default(), None).unwrap();
        let target = cfg.target().unwrap();
        assert_eq!(cfg.t_horizon, horizon_for_tail(target.contraction_r, 1e-6));
        let kv = KvMap::parse("t_horizon = 3\n").unwrap();
        assert_eq!(FeedbackConvConfig::from_kv(&kv, None).unwrap().t_horizon, 3);
    }

    #[test]
    fn bad_choice_and_bad_float_are_descriptive() {
        let kv = KvMap::parse("readout = lasso\n").unwrap();
        let msg = StaticConvConfig::from_kv(&kv, None).unwrap_err().to_string();
        assert!(msg.contains("oracle|ridge|both"), "{msg}");
        let kv = KvMap::parse("m = one\n").unwrap();
        let msg = StaticConvConfig::from_kv(&kv, None).unwrap_err().to_string();
        assert!(msg.contains("`m`") && msg.contains("`one`"), "{msg}");
    }
}
