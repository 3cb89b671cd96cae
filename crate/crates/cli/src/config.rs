//! Experiment configuration: schema, loading, overrides, validation, hashing.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use qcl_core::dynamics::{
    Distribution, HyperbolicMap, IntMatrix, Observable, Piece, RandomSystem, Shear, TrigPoly, TrigTerm,
};
use qcl_core::operator::BalanceMode;

/// A rejected configuration, pointing at the offending field (or line, for
/// syntax errors).
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub location: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.location, self.message)
    }
}

fn err(location: impl Into<String>, message: impl Into<String>) -> ConfigError {
    ConfigError { location: location.into(), message: message.into() }
}

fn default_output_dir() -> String {
    "out".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: String,
    pub system: SystemConfig,
    pub observable: ObservableConfig,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub density: DensityConfig,
    #[serde(default)]
    pub spectrum: SpectrumConfig,
    #[serde(default)]
    pub lambda: LambdaConfig,
    #[serde(default)]
    pub rate: RateConfig,
    #[serde(default)]
    pub variance: VarianceConfig,
    #[serde(default)]
    pub aperiodicity: AperiodicityConfig,
    #[serde(default)]
    pub clt: CltConfig,
    #[serde(default)]
    pub ldp: LdpConfig,
    #[serde(default)]
    pub lclt: LcltConfig,
}

fn cat() -> [[i64; 2]; 2] {
    IntMatrix::CAT.0
}

fn default_delta() -> f64 {
    0.05
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    #[serde(default = "cat")]
    pub base: [[i64; 2]; 2],
    /// Cap on every shear amplitude.
    #[serde(default = "default_delta")]
    pub delta: f64,
    /// Symbol probabilities of the i.i.d. driving.
    pub distribution: Vec<f64>,
    /// One fiber map per symbol.
    pub maps: Vec<MapConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MapConfig {
    Linear,
    Perturbed { shears: Vec<ShearConfig> },
    Piecewise { pieces: Vec<PieceConfig> },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShearConfig {
    pub frequency: [i64; 2],
    pub direction: [f64; 2],
    pub amplitude: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PieceConfig {
    pub start: f64,
    #[serde(default)]
    pub offset: [f64; 2],
    /// Defaults to the system base matrix.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<[[i64; 2]; 2]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermConfig {
    pub frequency: [i64; 2],
    #[serde(default)]
    pub cos: f64,
    #[serde(default)]
    pub sin: f64,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservableConfig {
    /// Trigonometric terms of `g(a, ·)` for each symbol `a`.
    pub symbols: Vec<Vec<TermConfig>>,
    /// Optional `r`, adding `r − r∘T_a` to every symbol.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coboundary: Option<Vec<TermConfig>>,
    /// Subtract per-symbol means against the equivariant densities.
    #[serde(default = "yes")]
    pub center: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BalanceConfig {
    Auto,
    Never,
    Always,
}

impl From<BalanceConfig> for BalanceMode {
    fn from(b: BalanceConfig) -> Self {
        match b {
            BalanceConfig::Auto => BalanceMode::Auto,
            BalanceConfig::Never => BalanceMode::Never,
            BalanceConfig::Always => BalanceMode::Always,
        }
    }
}

/// Monte Carlo sample counts; the Birkhoff length lives with each check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanConfig {
    pub n_samples: usize,
    #[serde(default)]
    pub burn_in: usize,
    pub batches: usize,
}

impl PlanConfig {
    const fn new(n_samples: usize, batches: usize) -> Self {
        Self { n_samples, burn_in: 0, batches }
    }
}

macro_rules! section {
    ($(#[$m:meta])* $name:ident { $($(#[$fm:meta])* $field:ident : $ty:ty = $default:expr),* $(,)? }) => {
        $(#[$m])*
        #[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
        #[serde(default, deny_unknown_fields)]
        pub struct $name {
            $($(#[$fm])* pub $field: $ty,)*
        }

        impl Default for $name {
            fn default() -> Self {
                Self { $($field: $default,)* }
            }
        }
    };
}

section!(GridConfig {
    k: usize = 64,
    samples_per_cell: usize = 64,
    balance: BalanceConfig = BalanceConfig::Auto,
});

section!(DensityConfig {
    n_pullback: usize = 50,
    decay_n_max: usize = 40,
    /// Consecutive fibers checked for equivariance.
    fibers: usize = 5,
    equivariance_tol: f64 = 5e-3,
    min_r_squared: f64 = 0.95,
    /// Path positions averaged for the centering offsets.
    centering_positions: usize = 20,
});

section!(SpectrumConfig {
    n_steps: usize = 500,
    exponents: usize = 2,
    reorth_period: usize = 5,
    top_tol: f64 = 0.01,
    second_max: f64 = -0.05,
});

section!(LambdaConfig {
    theta_max: f64 = 1.0,
    spacing: f64 = 0.1,
    /// Finite-difference step `h` for `Λ''(0)`.
    fd_step: f64 = 0.05,
    n_fibers: usize = 2000,
    n_pullback: usize = 30,
    batches: usize = 20,
    /// Monte Carlo estimator of `Λ` at every real grid point.
    mc_n: usize = 200,
    mc_plan: PlanConfig = PlanConfig::new(20_000, 20),
    /// `θ` at which the two estimators must agree.
    agreement_theta: f64 = 0.1,
    agreement_floor: f64 = 0.01,
    convexity_k: f64 = 3.0,
});

section!(RateConfig {
    /// Deviation levels in units of `Σ̂`.
    eps_over_sigma: Vec<f64> = (1..=12).map(|i| 0.05 * i as f64).collect(),
});

section!(VarianceConfig {
    n_max: usize = 30,
    window: usize = 100,
    stride: i64 = 97,
    series_plan: PlanConfig = PlanConfig::new(20_000, 20),
    empirical_n: usize = 2000,
    empirical_plan: PlanConfig = PlanConfig::new(100_000, 20),
    degeneracy_threshold: f64 = 0.01,
    agreement: f64 = 0.10,
});

section!(AperiodicityConfig {
    t_min: f64 = 0.5,
    t_max: f64 = 2.0,
    n_t: usize = 7,
    n: usize = 40,
    periodic_symbol: usize = 0,
});

section!(CltConfig {
    ns: Vec<usize> = vec![200, 2000],
    plan: PlanConfig = PlanConfig::new(100_000, 20),
    /// Independent driving paths; path 0 is the main one.
    paths: usize = 5,
    ks_tol: f64 = 0.02,
});

section!(LdpConfig {
    ns: Vec<usize> = vec![200, 400, 800],
    plan: PlanConfig = PlanConfig::new(1_000_000, 20),
    eps_over_sigma: Vec<f64> = vec![0.2, 0.5],
    rel_tol: f64 = 0.25,
});

section!(LcltConfig {
    n: usize = 2000,
    plan: PlanConfig = PlanConfig::new(1_000_000, 20),
    /// `|J|` in units of `Σ̂`; `J = [0, |J|)`.
    interval_over_sigma: f64 = 0.5,
    /// Shifts `s` in units of `Σ̂√n`.
    s_over_scale: Vec<f64> = vec![-2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0],
    rel_tol: f64 = 0.15,
});

/// Parse a config file; the format follows the extension (`.json` or TOML).
pub fn parse_source(text: &str, path: &Path) -> Result<Value, ConfigError> {
    let name = path.display().to_string();
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
        serde_json::from_str(text)
            .map_err(|e| err(format!("{name}:{}:{}", e.line(), e.column()), e.to_string()))
    } else {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| {
            let loc = match e.span() {
                Some(span) => {
                    let line = text[..span.start].matches('\n').count() + 1;
                    let col = span.start - text[..span.start].rfind('\n').map_or(0, |i| i + 1) + 1;
                    format!("{name}:{line}:{col}")
                }
                None => name.clone(),
            };
            err(loc, e.message().to_string())
        })?;
        serde_json::to_value(table).map_err(|e| err(name, e.to_string()))
    }
}

/// Apply `key.path=value`; the value is read as a TOML literal, falling back
/// to a bare string. Numeric segments index arrays.
pub fn apply_override(root: &mut Value, assignment: &str) -> Result<(), ConfigError> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| err("--set", format!("expected key=value, got `{assignment}`")))?;
    let key = key.trim();
    if key.is_empty() {
        return Err(err("--set", "empty key"));
    }
    let value = match format!("v = {}", raw.trim()).parse::<toml::Table>() {
        Ok(mut t) => serde_json::to_value(t.remove("v").expect("key present")).map_err(|e| err(key, e.to_string()))?,
        Err(_) => Value::String(raw.trim().to_string()),
    };
    let mut cur = root;
    let segments: Vec<&str> = key.split('.').collect();
    for (i, seg) in segments.iter().enumerate() {
        let last = i + 1 == segments.len();
        cur = match cur {
            Value::Object(map) => {
                if last {
                    map.insert(seg.to_string(), value);
                    return Ok(());
                }
                map.entry(seg.to_string()).or_insert_with(|| Value::Object(Default::default()))
            }
            Value::Array(items) => {
                let idx: usize = seg.parse().map_err(|_| err(key, format!("`{seg}` is not an array index")))?;
                let len = items.len();
                let slot = items
                    .get_mut(idx)
                    .ok_or_else(|| err(key, format!("index {idx} out of range (length {len})")))?;
                if last {
                    *slot = value;
                    return Ok(());
                }
                slot
            }
            _ => return Err(err(key, format!("`{seg}` is inside a non-table value"))),
        };
    }
    unreachable!("loop returns on the last segment")
}

/// Deserialize with the failing field's path in the error.
pub fn from_value(value: Value) -> Result<ExperimentConfig, ConfigError> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        let location = if path == "." { "config".to_string() } else { path };
        err(location, e.into_inner().to_string())
    })
}

/// Load, override and validate. `seed_override` comes from `QCL_SEED`.
pub fn load(path: &Path, overrides: &[String], seed_override: Option<&str>) -> Result<ExperimentConfig, Vec<ConfigError>> {
    let text = std::fs::read_to_string(path).map_err(|e| vec![err(path.display().to_string(), e.to_string())])?;
    let mut value = parse_source(&text, path).map_err(|e| vec![e])?;
    // materialize defaulted sections so an override can touch one field of
    // a nested default (e.g. `clt.plan.n_samples`)
    if let Ok(full) = from_value(value.clone()) {
        value = serde_json::to_value(full).expect("config serializes");
    }
    for o in overrides {
        apply_override(&mut value, o).map_err(|e| vec![e])?;
    }
    if let Some(s) = seed_override {
        let seed: u64 = s
            .trim()
            .parse()
            .map_err(|_| vec![err("QCL_SEED", format!("`{s}` is not an unsigned 64-bit integer"))])?;
        apply_override(&mut value, &format!("seed={seed}")).map_err(|e| vec![e])?;
    }
    let config = from_value(value).map_err(|e| vec![e])?;
    config.validate()?;
    Ok(config)
}

fn terms(ts: &[TermConfig]) -> TrigPoly {
    TrigPoly::new(
        ts.iter()
            .map(|t| TrigTerm { frequency: t.frequency, cos: t.cos, sin: t.sin })
            .collect(),
    )
}

struct Checker(Vec<ConfigError>);

impl Checker {
    fn require(&mut self, ok: bool, field: impl Into<String>, message: impl Into<String>) {
        if !ok {
            self.0.push(err(field, message));
        }
    }

    fn positive(&mut self, v: f64, field: &str) {
        self.require(v > 0.0 && v.is_finite(), field, format!("must be positive and finite, got {v}"));
    }

    fn at_least(&mut self, v: usize, min: usize, field: &str) {
        self.require(v >= min, field, format!("must be at least {min}, got {v}"));
    }

    fn plan(&mut self, p: &PlanConfig, field: &str) {
        self.at_least(p.n_samples, 100, &format!("{field}.n_samples"));
        self.require(
            p.batches >= 2 && p.n_samples % p.batches == 0,
            format!("{field}.batches"),
            format!("must be at least 2 and divide n_samples ({}), got {}", p.n_samples, p.batches),
        );
    }

    fn lengths(&mut self, ns: &[usize], field: &str) {
        self.require(!ns.is_empty(), field, "must not be empty");
        self.require(ns.iter().all(|&n| n >= 1), field, "lengths must be at least 1");
    }

    fn fractions(&mut self, v: &[f64], field: &str) {
        self.require(!v.is_empty(), field, "must not be empty");
        self.require(v.iter().all(|&x| x > 0.0 && x.is_finite()), field, "entries must be positive and finite");
    }
}

impl ExperimentConfig {
    pub fn alphabet_size(&self) -> usize {
        self.system.maps.len()
    }

    /// Every violated constraint, each tagged with its field.
    pub fn validate(&self) -> Result<(), Vec<ConfigError>> {
        let mut c = Checker(Vec::new());
        let s = &self.system;
        let a = s.maps.len();
        c.require(a >= 1, "system.maps", "at least one map is required");
        c.require(
            s.distribution.len() == a,
            "system.distribution",
            format!("{} probabilities for {a} maps", s.distribution.len()),
        );
        if let Err(e) = Distribution::new(s.distribution.clone()) {
            c.require(false, "system.distribution", e.to_string());
        }
        c.positive(s.delta, "system.delta");
        if let Err(e) = HyperbolicMap::linear(IntMatrix(s.base)) {
            c.require(false, "system.base", e.to_string());
        }
        for (i, m) in s.maps.iter().enumerate() {
            if let MapConfig::Perturbed { shears } = m {
                c.require(!shears.is_empty(), format!("system.maps[{i}].shears"), "must not be empty");
            }
            if let Err(e) = self.build_map(m) {
                c.require(false, format!("system.maps[{i}]"), e.to_string());
            }
        }
        let o = &self.observable;
        c.require(
            o.symbols.len() == a,
            "observable.symbols",
            format!("{} symbol entries for {a} maps", o.symbols.len()),
        );
        c.require(
            o.symbols.iter().any(|t| !t.is_empty()) || o.coboundary.as_ref().is_some_and(|t| !t.is_empty()),
            "observable",
            "observable has no terms",
        );
        for (i, ts) in o.symbols.iter().enumerate() {
            for (j, t) in ts.iter().enumerate() {
                c.require(
                    t.cos.is_finite() && t.sin.is_finite(),
                    format!("observable.symbols[{i}][{j}]"),
                    "coefficients must be finite",
                );
            }
        }

        let g = &self.grid;
        c.at_least(g.k, 2, "grid.k");
        c.require(g.k <= 512, "grid.k", format!("must be at most 512, got {}", g.k));
        c.at_least(g.samples_per_cell, 1, "grid.samples_per_cell");

        let d = &self.density;
        c.at_least(d.n_pullback, 1, "density.n_pullback");
        c.at_least(d.decay_n_max, 2, "density.decay_n_max");
        c.at_least(d.fibers, 1, "density.fibers");
        c.at_least(d.centering_positions, 1, "density.centering_positions");
        c.positive(d.equivariance_tol, "density.equivariance_tol");
        c.require(
            d.min_r_squared > 0.0 && d.min_r_squared <= 1.0,
            "density.min_r_squared",
            format!("must be in (0, 1], got {}", d.min_r_squared),
        );

        let sp = &self.spectrum;
        c.require(
            (1..=12).contains(&sp.exponents),
            "spectrum.exponents",
            format!("must be in 1..=12, got {}", sp.exponents),
        );
        c.at_least(sp.reorth_period, 1, "spectrum.reorth_period");
        c.require(
            sp.n_steps >= sp.reorth_period,
            "spectrum.n_steps",
            format!("must be at least reorth_period ({}), got {}", sp.reorth_period, sp.n_steps),
        );
        c.positive(sp.top_tol, "spectrum.top_tol");

        let l = &self.lambda;
        c.positive(l.theta_max, "lambda.theta_max");
        c.require(
            l.spacing > 0.0 && l.spacing <= l.theta_max,
            "lambda.spacing",
            format!("must be in (0, theta_max], got {}", l.spacing),
        );
        c.require(
            l.fd_step > 0.0 && 2.0 * l.fd_step <= l.theta_max,
            "lambda.fd_step",
            format!("must satisfy 0 < 2·fd_step <= theta_max, got {}", l.fd_step),
        );
        c.at_least(l.n_fibers, 10, "lambda.n_fibers");
        c.at_least(l.n_pullback, 1, "lambda.n_pullback");
        c.require(
            l.batches >= 2 && l.batches <= l.n_fibers,
            "lambda.batches",
            format!("must be in 2..=n_fibers, got {}", l.batches),
        );
        c.at_least(l.mc_n, 1, "lambda.mc_n");
        c.plan(&l.mc_plan, "lambda.mc_plan");
        c.require(
            l.agreement_theta.abs() <= l.theta_max,
            "lambda.agreement_theta",
            "must lie inside [-theta_max, theta_max]",
        );
        c.positive(l.agreement_floor, "lambda.agreement_floor");
        c.positive(l.convexity_k, "lambda.convexity_k");

        c.fractions(&self.rate.eps_over_sigma, "rate.eps_over_sigma");

        let v = &self.variance;
        c.at_least(v.n_max, 1, "variance.n_max");
        c.at_least(v.window, 1, "variance.window");
        c.require(v.stride >= 0, "variance.stride", "must be nonnegative");
        c.plan(&v.series_plan, "variance.series_plan");
        c.at_least(v.empirical_n, 1, "variance.empirical_n");
        c.plan(&v.empirical_plan, "variance.empirical_plan");
        c.positive(v.degeneracy_threshold, "variance.degeneracy_threshold");
        c.positive(v.agreement, "variance.agreement");

        let ap = &self.aperiodicity;
        c.require(
            ap.t_min.is_finite() && ap.t_max.is_finite() && ap.t_min <= ap.t_max,
            "aperiodicity.t_min",
            "must not exceed t_max",
        );
        c.require(
            ap.t_min > 0.0 || ap.t_max < 0.0,
            "aperiodicity.t_min",
            "the t window must exclude 0",
        );
        c.at_least(ap.n_t, 1, "aperiodicity.n_t");
        c.at_least(ap.n, 20, "aperiodicity.n");
        c.require(
            ap.periodic_symbol < a.max(1),
            "aperiodicity.periodic_symbol",
            format!("no symbol {} in an alphabet of {a}", ap.periodic_symbol),
        );

        c.lengths(&self.clt.ns, "clt.ns");
        c.plan(&self.clt.plan, "clt.plan");
        c.at_least(self.clt.paths, 1, "clt.paths");
        c.positive(self.clt.ks_tol, "clt.ks_tol");

        c.lengths(&self.ldp.ns, "ldp.ns");
        c.plan(&self.ldp.plan, "ldp.plan");
        c.fractions(&self.ldp.eps_over_sigma, "ldp.eps_over_sigma");
        c.positive(self.ldp.rel_tol, "ldp.rel_tol");

        c.at_least(self.lclt.n, 1, "lclt.n");
        c.plan(&self.lclt.plan, "lclt.plan");
        c.positive(self.lclt.interval_over_sigma, "lclt.interval_over_sigma");
        c.require(!self.lclt.s_over_scale.is_empty(), "lclt.s_over_scale", "must not be empty");
        c.positive(self.lclt.rel_tol, "lclt.rel_tol");

        if c.0.is_empty() {
            Ok(())
        } else {
            Err(c.0)
        }
    }

    fn build_map(&self, m: &MapConfig) -> qcl_core::Result<HyperbolicMap> {
        let base = IntMatrix(self.system.base);
        match m {
            MapConfig::Linear => HyperbolicMap::linear(base),
            MapConfig::Perturbed { shears } => HyperbolicMap::perturbed(
                base,
                shears
                    .iter()
                    .map(|s| Shear { frequency: s.frequency, direction: s.direction, amplitude: s.amplitude })
                    .collect(),
                self.system.delta,
            ),
            MapConfig::Piecewise { pieces } => HyperbolicMap::piecewise(
                base,
                pieces
                    .iter()
                    .map(|p| Piece { start: p.start, matrix: IntMatrix(p.matrix.unwrap_or(self.system.base)), offset: p.offset })
                    .collect(),
            ),
        }
    }

    /// The random system with the uncentered observable.
    pub fn build_system(&self) -> qcl_core::Result<RandomSystem> {
        let maps = self.system.maps.iter().map(|m| self.build_map(m)).collect::<qcl_core::Result<_>>()?;
        let polys = self.observable.symbols.iter().map(|t| terms(t)).collect();
        let observable = Observable::new(polys, self.observable.coboundary.as_deref().map(terms))?;
        RandomSystem::new(maps, Distribution::new(self.system.distribution.clone())?, observable)
    }

    /// Canonical JSON (sorted keys, no output directory); the basis of the
    /// config hash and of the resolved config written with every run.
    pub fn canonical_json(&self) -> String {
        let mut v = serde_json::to_value(self).expect("config serializes");
        if let Value::Object(map) = &mut v {
            map.remove("output_dir");
        }
        serde_json::to_string_pretty(&v).expect("value serializes")
    }

    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_json().as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn minimal() -> Value {
        json!({
            "seed": 1,
            "system": { "distribution": [1.0], "maps": [{ "kind": "linear" }] },
            "observable": { "symbols": [[{ "frequency": [1, 0], "cos": 1.0 }]] }
        })
    }

    #[test]
    fn minimal_config_gets_defaults() {
        let c = from_value(minimal()).unwrap();
        assert_eq!(c.grid.k, 64);
        assert_eq!(c.system.base, [[2, 1], [1, 1]]);
        assert!(c.observable.center);
        c.validate().unwrap();
    }

    #[test]
    fn overrides_reach_nested_fields_and_arrays() {
        let mut v = minimal();
        apply_override(&mut v, "grid.k=32").unwrap();
        apply_override(&mut v, "clt.ns=[10, 20]").unwrap();
        apply_override(&mut v, "system.maps.0.kind=linear").unwrap();
        apply_override(&mut v, "grid.balance=never").unwrap();
        let c = from_value(v).unwrap();
        assert_eq!(c.grid.k, 32);
        assert_eq!(c.clt.ns, vec![10, 20]);
        assert_eq!(c.grid.balance, BalanceConfig::Never);
    }

    #[test]
    fn bad_override_paths_are_reported() {
        let mut v = minimal();
        assert!(apply_override(&mut v, "grid.k").is_err());
        assert!(apply_override(&mut v, "system.maps.7.kind=linear").is_err());
        assert!(apply_override(&mut v, "seed.x=1").is_err());
    }

    #[test]
    fn overrides_keep_sibling_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        std::fs::write(&path, minimal().to_string()).unwrap();
        let c = load(&path, &["clt.plan.n_samples=2000".into()], Some("9")).unwrap();
        assert_eq!(c.clt.plan.n_samples, 2000);
        assert_eq!(c.clt.plan.batches, CltConfig::default().plan.batches);
        assert_eq!(c.seed, 9);
    }

    #[test]
    fn hash_ignores_output_dir() {
        let a = from_value(minimal()).unwrap();
        let mut b = a.clone();
        b.output_dir = "elsewhere".into();
        assert_eq!(a.hash(), b.hash());
        b.seed = 2;
        assert_ne!(a.hash(), b.hash());
    }

    #[test]
    fn toml_syntax_errors_carry_a_line() {
        let e = parse_source("seed = 1\n[grid\nk = 2\n", Path::new("x.toml")).unwrap_err();
        assert!(e.location.starts_with("x.toml:2:"), "{e}");
    }
}
