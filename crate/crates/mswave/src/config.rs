//! Run configuration: a flat TOML document with dotted keys, plus
//! command-line `--set key=value` overrides (overrides win). Every summary
//! echoes the fully resolved configuration.

use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::diagnostics::NormsSource;
use crate::error::{Error, Result};
use crate::model::Params;
use crate::spectral::{Dealias, Grid, RealField};
use crate::timestepper::StepControls;

/// Initial-condition library.
#[derive(Clone, Debug, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialCondition {
    /// amplitude * sin(2 pi mode x)
    Sine { amplitude: f64, mode: u32 },
    /// Sum of (mode, cosine-amplitude, sine-amplitude) terms, scaled.
    Multisine { amplitude: f64, coefficients: Vec<(u32, f64, f64)> },
    /// Periodic Gaussian-like bump centred at 1/2, mean-subtracted.
    Bump { amplitude: f64, width: f64 },
    /// Explicit Fourier coefficients, or `random_modes` seeded modes.
    Fourier { amplitude: f64, coefficients: Vec<(u32, f64, f64)>, random_modes: u32 },
}

impl InitialCondition {
    /// Sample the profile on a grid. Random `fourier` modes draw from a
    /// ChaCha stream seeded by `seed`, with a 1/mode amplitude decay.
    pub fn build(&self, grid: &Grid, seed: u64) -> Result<RealField> {
        use std::f64::consts::PI;
        match self {
            InitialCondition::Sine { amplitude, mode } => {
                let (a, m) = (*amplitude, *mode as f64);
                Ok(RealField::from_fn(grid.clone(), |x| a * (2.0 * PI * m * x).sin()))
            }
            InitialCondition::Multisine { amplitude, coefficients }
            | InitialCondition::Fourier { amplitude, coefficients, random_modes: 0 } => {
                let a = *amplitude;
                let coeffs = coefficients.clone();
                Ok(RealField::from_fn(grid.clone(), |x| {
                    coeffs
                        .iter()
                        .map(|&(m, c, s)| {
                            let phase = 2.0 * PI * m as f64 * x;
                            a * (c * phase.cos() + s * phase.sin())
                        })
                        .sum()
                }))
            }
            InitialCondition::Fourier { amplitude, random_modes, .. } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let coeffs: Vec<(u32, f64, f64)> = (1..=*random_modes)
                    .map(|m| {
                        let c: f64 = rng.gen_range(-1.0..1.0);
                        let s: f64 = rng.gen_range(-1.0..1.0);
                        (m, c / m as f64, s / m as f64)
                    })
                    .collect();
                InitialCondition::Multisine { amplitude: *amplitude, coefficients: coeffs }
                    .build(grid, seed)
            }
            InitialCondition::Bump { amplitude, width } => {
                let (a, w) = (*amplitude, *width);
                let raw = RealField::from_fn(grid.clone(), |x| {
                    (-3..=3)
                        .map(|m| {
                            let d = (x - 0.5 + m as f64) / w;
                            a * (-d * d).exp()
                        })
                        .sum()
                });
                let mean = raw.mean();
                RealField::new(
                    grid.clone(),
                    raw.values().iter().map(|v| v - mean).collect(),
                )
            }
        }
    }
}

/// Fully resolved run configuration.
#[derive(Clone, Debug, Serialize)]
pub struct RunConfig {
    pub params: Params,
    pub n: usize,
    pub controls: StepControls,
    pub ic: InitialCondition,
    pub norms_source: NormsSource,
    pub output_csv: PathBuf,
    pub output_json: PathBuf,
    pub seed: u64,
}

impl RunConfig {
    pub fn initial_field(&self) -> Result<RealField> {
        let grid = Grid::new(self.n)?;
        self.ic.build(&grid, self.seed)
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    epsilon: f64,
    mu: f64,
    t_end: f64,
    n: Option<usize>,
    dt_init: Option<f64>,
    dt_min: Option<f64>,
    rel_tol: Option<f64>,
    s_max: Option<f64>,
    tail_max: Option<f64>,
    sample_interval: Option<f64>,
    dealias: Option<Dealias>,
    exp_filter: Option<bool>,
    ic: RawIc,
    norms_source: Option<NormsSource>,
    output_csv: Option<PathBuf>,
    output_json: Option<PathBuf>,
    seed: Option<u64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawIc {
    kind: String,
    amplitude: Option<f64>,
    mode: Option<u32>,
    coefficients: Option<Vec<(u32, f64, f64)>>,
    width: Option<f64>,
    random_modes: Option<u32>,
}

fn require_positive(name: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Config(format!("{name} = {v} must be positive and finite")))
    }
}

fn resolve_ic(raw: &RawIc) -> Result<InitialCondition> {
    let amplitude = raw.amplitude;
    match raw.kind.as_str() {
        "sine" => Ok(InitialCondition::Sine {
            amplitude: require_positive(
                "ic.amplitude",
                amplitude.ok_or_else(|| Error::Config("ic.amplitude is required for kind = sine".into()))?,
            )?,
            mode: raw.mode.unwrap_or(1).max(1),
        }),
        "multisine" => Ok(InitialCondition::Multisine {
            amplitude: amplitude.unwrap_or(1.0),
            coefficients: raw
                .coefficients
                .clone()
                .ok_or_else(|| Error::Config("ic.coefficients is required for kind = multisine".into()))?,
        }),
        "bump" => Ok(InitialCondition::Bump {
            amplitude: require_positive(
                "ic.amplitude",
                amplitude.ok_or_else(|| Error::Config("ic.amplitude is required for kind = bump".into()))?,
            )?,
            width: require_positive("ic.width", raw.width.unwrap_or(0.1))?,
        }),
        "fourier" => {
            let random_modes = raw.random_modes.unwrap_or(0);
            let coefficients = raw.coefficients.clone().unwrap_or_default();
            if random_modes == 0 && coefficients.is_empty() {
                return Err(Error::Config(
                    "ic.kind = fourier needs ic.coefficients or ic.random_modes".into(),
                ));
            }
            Ok(InitialCondition::Fourier {
                amplitude: amplitude.unwrap_or(1.0),
                coefficients,
                random_modes,
            })
        }
        other => Err(Error::Config(format!(
            "ic.kind = {other:?} is not one of sine, multisine, bump, fourier"
        ))),
    }
}

fn resolve(raw: RawConfig) -> Result<RunConfig> {
    let params = Params::new(raw.epsilon, raw.mu)
        .map_err(|e| Error::Config(format!("params: {e}")))?;
    let n = raw.n.unwrap_or(256);
    if n < 8 || n % 2 != 0 {
        return Err(Error::Config(format!("n = {n} must be even and >= 8")));
    }
    let t_end = require_positive("t_end", raw.t_end)?;
    let mut controls = StepControls::with_t_end(t_end);
    if let Some(v) = raw.dt_init {
        controls.dt_init = require_positive("dt_init", v)?;
    } else {
        controls.dt_init = controls.dt_init.min(t_end / 10.0);
    }
    if let Some(v) = raw.dt_min {
        controls.dt_min = require_positive("dt_min", v)?;
    }
    if let Some(v) = raw.rel_tol {
        controls.rel_tol = require_positive("rel_tol", v)?;
    }
    if let Some(v) = raw.s_max {
        controls.s_max = require_positive("s_max", v)?;
    }
    if let Some(v) = raw.tail_max {
        controls.tail_max = require_positive("tail_max", v)?;
    }
    if let Some(v) = raw.sample_interval {
        controls.sample_interval = require_positive("sample_interval", v)?;
    }
    if let Some(d) = raw.dealias {
        controls.dealias = d;
    }
    if let Some(f) = raw.exp_filter {
        controls.exp_filter = f;
    }
    controls.validate().map_err(|e| Error::Config(e.to_string()))?;
    Ok(RunConfig {
        params,
        n,
        controls,
        ic: resolve_ic(&raw.ic)?,
        norms_source: raw.norms_source.unwrap_or_default(),
        output_csv: raw.output_csv.unwrap_or_else(|| PathBuf::from("output.csv")),
        output_json: raw.output_json.unwrap_or_else(|| PathBuf::from("output.json")),
        seed: raw.seed.unwrap_or(0),
    })
}

/// Parse a TOML config document and apply `--set key=value` overrides.
pub fn parse_config(text: &str, overrides: &[String]) -> Result<RunConfig> {
    let mut table: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| Error::Config(format!("config parse error: {e}")))?;
    for ov in overrides {
        apply_override(&mut table, ov)?;
    }
    let raw: RawConfig = RawConfig::deserialize(toml::Value::Table(table))
        .map_err(|e| Error::Config(format!("config error: {e}")))?;
    resolve(raw)
}

fn apply_override(table: &mut toml::Table, spec: &str) -> Result<()> {
    let (key, value) = spec
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override {spec:?} is not of the form key=value")))?;
    let key = key.trim();
    let parsed: toml::Value = match format!("v = {value}").parse::<toml::Table>() {
        Ok(t) => t["v"].clone(),
        Err(_) => toml::Value::String(value.trim().to_string()),
    };
    let mut parts = key.split('.').peekable();
    let mut current = table;
    loop {
        let part = parts
            .next()
            .ok_or_else(|| Error::Config(format!("empty override key in {spec:?}")))?;
        if parts.peek().is_none() {
            current.insert(part.to_string(), parsed);
            return Ok(());
        }
        current = current
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("override key {key:?} crosses a non-table value")))?;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
epsilon = 0.1
mu = 1.0
t_end = 5.0
ic.kind = "sine"
ic.amplitude = 0.1
ic.mode = 1
"#;

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = parse_config(MINIMAL, &[]).unwrap();
        assert_eq!(cfg.n, 256);
        assert_eq!(cfg.controls.rel_tol, 1e-10);
        assert_eq!(cfg.controls.dt_min, 1e-12);
        assert_eq!(cfg.controls.s_max, 1e6);
        assert_eq!(cfg.controls.tail_max, 1e-3);
        assert_eq!(cfg.controls.sample_interval, 5.0 / 1000.0);
        assert_eq!(cfg.norms_source, NormsSource::Numeric);
        assert_eq!(cfg.controls.dealias, Dealias::TwoThirds);
        assert!(!cfg.controls.exp_filter);
    }

    #[test]
    fn negative_epsilon_names_the_field() {
        let text = MINIMAL.replace("epsilon = 0.1", "epsilon = -1.0");
        let err = parse_config(&text, &[]).unwrap_err().to_string();
        assert!(err.contains("epsilon"), "{err}");
    }

    #[test]
    fn duplicate_key_reports_position() {
        let text = format!("{MINIMAL}\nepsilon = 0.2\n");
        let err = parse_config(&text, &[]).unwrap_err().to_string();
        assert!(err.contains("duplicate"), "{err}");
        assert!(err.contains("line"), "{err}");
    }

    #[test]
    fn unknown_key_is_listed() {
        let text = format!("{MINIMAL}\nwhatever = 3\n");
        let err = parse_config(&text, &[]).unwrap_err().to_string();
        assert!(err.contains("whatever"), "{err}");
    }

    #[test]
    fn overrides_win() {
        let cfg = parse_config(
            MINIMAL,
            &["epsilon=0.5".into(), "ic.amplitude=0.3".into(), "n=128".into()],
        )
        .unwrap();
        assert_eq!(cfg.params.epsilon, 0.5);
        assert_eq!(cfg.n, 128);
        match cfg.ic {
            InitialCondition::Sine { amplitude, .. } => assert_eq!(amplitude, 0.3),
            other => panic!("unexpected ic {other:?}"),
        }
    }

    #[test]
    fn bump_has_zero_mean() {
        let ic = InitialCondition::Bump { amplitude: 0.8, width: 0.07 };
        let grid = Grid::new(256).unwrap();
        let field = ic.build(&grid, 0).unwrap();
        assert!(field.mean().abs() < 1e-12);
    }

    #[test]
    fn random_fourier_is_seed_deterministic() {
        let ic = InitialCondition::Fourier { amplitude: 0.2, coefficients: vec![], random_modes: 5 };
        let grid = Grid::new(128).unwrap();
        let a = ic.build(&grid, 7).unwrap();
        let b = ic.build(&grid, 7).unwrap();
        let c = ic.build(&grid, 8).unwrap();
        assert_eq!(a.values(), b.values());
        assert!(a.max_abs_diff(&c) > 1e-6);
    }

    #[test]
    fn odd_n_rejected() {
        let text = format!("{MINIMAL}\nn = 7\n");
        assert!(parse_config(&text, &[]).is_err());
    }
}
