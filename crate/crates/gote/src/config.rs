//! Experiment configuration: a flat key=value text format.
//!
//! Example:
//!
//! ```text
//! kind = edge
//! r = 4
//! n = 1000
//! replications = 100
//! master_seed = 7
//! regime = fixed_r
//! sampler = equivalent_law
//! ```
//!
//! Unknown keys are rejected so a typo cannot silently fall back to a
//! default.  Kind-specific keys (`rho`, `c`, `epsilon`, ...) have defaults
//! documented on [`ExperimentConfig`].

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use gote_core::rng::GaussianStream;
use gote_core::theory::Regime;
use gote_core::{Error, Result};

use crate::seed::shared_key;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExperimentKind {
    Bulk,
    Edge,
    Fluctuation,
    Overlap,
    Directional,
    MixedCompare,
    CovValidate,
    Concentration,
    TvBound,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 9] = [
        ExperimentKind::Bulk,
        ExperimentKind::Edge,
        ExperimentKind::Fluctuation,
        ExperimentKind::Overlap,
        ExperimentKind::Directional,
        ExperimentKind::MixedCompare,
        ExperimentKind::CovValidate,
        ExperimentKind::Concentration,
        ExperimentKind::TvBound,
    ];

    pub fn tag(&self) -> &'static str {
        match self {
            ExperimentKind::Bulk => "bulk",
            ExperimentKind::Edge => "edge",
            ExperimentKind::Fluctuation => "fluctuation",
            ExperimentKind::Overlap => "overlap",
            ExperimentKind::Directional => "directional",
            ExperimentKind::MixedCompare => "mixed_compare",
            ExperimentKind::CovValidate => "cov_validate",
            ExperimentKind::Concentration => "concentration",
            ExperimentKind::TvBound => "tv_bound",
        }
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ExperimentKind::ALL
            .into_iter()
            .find(|k| k.tag() == s)
            .ok_or_else(|| Error::Parse(format!("unknown experiment kind {s:?}")))
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// Growth regime plus the ratio parameter for the proportional one.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RegimeSpec {
    pub name: RegimeName,
    pub c: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RegimeName {
    FixedR,
    RMuchLessN,
    Proportional,
    RMuchGreaterN,
}

impl RegimeName {
    pub fn tag(&self) -> &'static str {
        match self {
            RegimeName::FixedR => "fixed_r",
            RegimeName::RMuchLessN => "r_much_less_n",
            RegimeName::Proportional => "proportional",
            RegimeName::RMuchGreaterN => "r_much_greater_n",
        }
    }
}

impl FromStr for RegimeName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fixed_r" => Ok(RegimeName::FixedR),
            "r_much_less_n" => Ok(RegimeName::RMuchLessN),
            "proportional" => Ok(RegimeName::Proportional),
            "r_much_greater_n" => Ok(RegimeName::RMuchGreaterN),
            other => Err(Error::Parse(format!(
                "unknown regime {other:?} (expected fixed_r, r_much_less_n, proportional, r_much_greater_n)"
            ))),
        }
    }
}

impl RegimeSpec {
    pub fn to_regime(&self) -> Result<Regime> {
        match self.name {
            RegimeName::FixedR => Ok(Regime::FixedR),
            RegimeName::RMuchLessN => Ok(Regime::RMuchLessN),
            RegimeName::RMuchGreaterN => Ok(Regime::RMuchGreaterN),
            RegimeName::Proportional => {
                let c = self.c.ok_or_else(|| {
                    Error::Parse("proportional regime needs the key c".into())
                })?;
                Ok(Regime::Proportional { c })
            }
        }
    }
}

/// How the contraction direction is chosen.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DirectionSpec {
    /// First standard basis vector.
    E1,
    /// Uniform on the sphere, drawn once per experiment from the master
    /// seed (not per replication).
    Random,
    /// One comma-separated row of `n` floats; normalized on load.
    Csv(String),
}

impl DirectionSpec {
    pub fn parse(s: &str) -> DirectionSpec {
        match s {
            "e1" => DirectionSpec::E1,
            "random" => DirectionSpec::Random,
            path => DirectionSpec::Csv(path.to_string()),
        }
    }

    pub fn label(&self) -> String {
        match self {
            DirectionSpec::E1 => "e1".to_string(),
            DirectionSpec::Random => "random".to_string(),
            DirectionSpec::Csv(path) => path.clone(),
        }
    }

    /// Materializes the unit direction.
    pub fn resolve(&self, n: usize, master_seed: u64) -> Result<Vec<f64>> {
        match self {
            DirectionSpec::E1 => {
                let mut w = vec![0.0; n];
                w[0] = 1.0;
                Ok(w)
            }
            DirectionSpec::Random => {
                let mut stream = GaussianStream::new(&shared_key(master_seed, "direction"));
                Ok(stream.next_unit_vec(n))
            }
            DirectionSpec::Csv(path) => {
                let text = fs::read_to_string(path)?;
                let line = text
                    .lines()
                    .find(|l| !l.trim().is_empty())
                    .ok_or_else(|| Error::Parse(format!("{path}: empty direction file")))?;
                let mut w = Vec::with_capacity(n);
                for field in line.split(',') {
                    let x: f64 = field.trim().parse().map_err(|_| {
                        Error::Parse(format!("{path}: bad float {:?}", field.trim()))
                    })?;
                    w.push(x);
                }
                if w.len() != n {
                    return Err(Error::Shape(format!(
                        "{path}: direction has {} entries, expected {n}",
                        w.len()
                    )));
                }
                let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
                if norm < 1e-12 {
                    return Err(Error::Degenerate(format!("{path}: zero direction")));
                }
                for x in &mut w {
                    *x /= norm;
                }
                Ok(w)
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SamplerKind {
    DirectTensor,
    EquivalentLaw,
}

impl SamplerKind {
    pub fn tag(&self) -> &'static str {
        match self {
            SamplerKind::DirectTensor => "direct_tensor",
            SamplerKind::EquivalentLaw => "equivalent_law",
        }
    }
}

impl FromStr for SamplerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "direct_tensor" => Ok(SamplerKind::DirectTensor),
            "equivalent_law" => Ok(SamplerKind::EquivalentLaw),
            other => Err(Error::Parse(format!(
                "unknown sampler {other:?} (expected direct_tensor or equivalent_law)"
            ))),
        }
    }
}

/// Covariance model selector for the kinds that support both.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModelMode {
    Pure,
    Mixed4,
}

impl ModelMode {
    pub fn tag(&self) -> &'static str {
        match self {
            ModelMode::Pure => "pure",
            ModelMode::Mixed4 => "mixed4",
        }
    }
}

impl FromStr for ModelMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pure" => Ok(ModelMode::Pure),
            "mixed4" => Ok(ModelMode::Mixed4),
            other => Err(Error::Parse(format!(
                "unknown mode {other:?} (expected pure or mixed4)"
            ))),
        }
    }
}

/// Default half-width added to the bulk edge when counting outliers in the
/// mixed comparison.  The window top 2 theta + delta must thread the gap
/// varpi_4 - 2 theta_4 ~ 0.070: large delta swallows the outliers (their
/// fluctuation SD is ~ 0.8/sqrt(n)), small delta lets the second bulk
/// eigenvalue leak out through its Tracy-Widom tail.  0.015 maximizes the
/// measured two-vs-zero success rate at n = 800 (0.94 / 0.97 / 0.95 / 0.92
/// for delta = 0.010 / 0.015 / 0.020 / 0.025 over 250 replications).
pub const DEFAULT_BULK_DELTA: f64 = 0.015;

/// Parsed experiment configuration.  Key names match field names.
#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub r: usize,
    pub n: usize,
    pub replications: u64,
    pub master_seed: u64,
    pub regime: RegimeSpec,
    pub direction: DirectionSpec,
    pub rho: f64,
    pub sampler: SamplerKind,
    pub mode: ModelMode,
    /// Outlier-count window half-width for `mixed_compare`.
    pub bulk_delta: f64,
    /// Tail threshold for `concentration`.
    pub epsilon: f64,
    pub out_dir: Option<String>,
}

struct RawConfig {
    kind: Option<ExperimentKind>,
    r: Option<usize>,
    n: Option<usize>,
    replications: Option<u64>,
    master_seed: Option<u64>,
    regime: Option<RegimeName>,
    c: Option<f64>,
    direction: Option<DirectionSpec>,
    rho: Option<f64>,
    sampler: Option<SamplerKind>,
    mode: Option<ModelMode>,
    bulk_delta: Option<f64>,
    epsilon: Option<f64>,
    out_dir: Option<String>,
}

impl ExperimentConfig {
    /// Parses the key=value text.  `kind_override` is the CLI-positional
    /// kind; if the file also names one they must agree.
    pub fn parse(text: &str, kind_override: Option<ExperimentKind>) -> Result<ExperimentConfig> {
        let mut raw = RawConfig {
            kind: None,
            r: None,
            n: None,
            replications: None,
            master_seed: None,
            regime: None,
            c: None,
            direction: None,
            rho: None,
            sampler: None,
            mode: None,
            bulk_delta: None,
            epsilon: None,
            out_dir: None,
        };
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Parse(format!("line {}: expected key = value", lineno + 1))
            })?;
            let key = key.trim();
            let value = value.trim();
            let dup = |name: &str| Error::Parse(format!("line {}: duplicate key {name}", lineno + 1));
            match key {
                "kind" => set_once(&mut raw.kind, value.parse()?, || dup("kind"))?,
                "r" => set_once(&mut raw.r, parse_num(key, value)?, || dup("r"))?,
                "n" => set_once(&mut raw.n, parse_num(key, value)?, || dup("n"))?,
                "replications" => {
                    set_once(&mut raw.replications, parse_num(key, value)?, || {
                        dup("replications")
                    })?
                }
                "master_seed" => {
                    set_once(&mut raw.master_seed, parse_num(key, value)?, || {
                        dup("master_seed")
                    })?
                }
                "regime" => set_once(&mut raw.regime, value.parse()?, || dup("regime"))?,
                "c" => set_once(&mut raw.c, parse_float(key, value)?, || dup("c"))?,
                "direction" => {
                    set_once(&mut raw.direction, DirectionSpec::parse(value), || {
                        dup("direction")
                    })?
                }
                "rho" => set_once(&mut raw.rho, parse_float(key, value)?, || dup("rho"))?,
                "sampler" => set_once(&mut raw.sampler, value.parse()?, || dup("sampler"))?,
                "mode" => set_once(&mut raw.mode, value.parse()?, || dup("mode"))?,
                "bulk_delta" => {
                    set_once(&mut raw.bulk_delta, parse_float(key, value)?, || {
                        dup("bulk_delta")
                    })?
                }
                "epsilon" => {
                    set_once(&mut raw.epsilon, parse_float(key, value)?, || dup("epsilon"))?
                }
                "out_dir" => {
                    set_once(&mut raw.out_dir, value.to_string(), || dup("out_dir"))?
                }
                other => {
                    return Err(Error::Parse(format!(
                        "line {}: unknown key {other:?}",
                        lineno + 1
                    )))
                }
            }
        }

        let kind = match (kind_override, raw.kind) {
            (Some(cli), Some(file)) if cli != file => {
                return Err(Error::Parse(format!(
                    "kind mismatch: command line says {cli}, config says {file}"
                )))
            }
            (Some(cli), _) => cli,
            (None, Some(file)) => file,
            (None, None) => return Err(Error::Parse("missing key kind".into())),
        };

        let config = ExperimentConfig {
            kind,
            r: raw.r.unwrap_or(4),
            n: raw.n.ok_or_else(|| Error::Parse("missing key n".into()))?,
            replications: raw.replications.unwrap_or(1),
            master_seed: raw.master_seed.unwrap_or(0),
            regime: RegimeSpec { name: raw.regime.unwrap_or(RegimeName::FixedR), c: raw.c },
            direction: raw.direction.unwrap_or(DirectionSpec::Random),
            rho: raw.rho.unwrap_or(0.0),
            sampler: raw.sampler.unwrap_or(SamplerKind::EquivalentLaw),
            mode: raw.mode.unwrap_or(ModelMode::Pure),
            bulk_delta: raw.bulk_delta.unwrap_or(DEFAULT_BULK_DELTA),
            epsilon: raw.epsilon.unwrap_or(0.3),
            out_dir: raw.out_dir,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path, kind_override: Option<ExperimentKind>) -> Result<ExperimentConfig> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        Self::parse(&text, kind_override)
    }

    fn validate(&self) -> Result<()> {
        if self.replications < 1 {
            return Err(Error::Parse("replications must be >= 1".into()));
        }
        if self.n < 1 {
            return Err(Error::Parse("n must be >= 1".into()));
        }
        if self.r < 3 {
            return Err(Error::Parse(format!("r must be >= 3, got {}", self.r)));
        }
        if !(-1.0..=1.0).contains(&self.rho) {
            return Err(Error::Parse(format!("rho = {} outside [-1, 1]", self.rho)));
        }
        if self.regime.name == RegimeName::Proportional {
            match self.regime.c {
                Some(c) if c > 0.0 && c.is_finite() => {}
                Some(c) => {
                    return Err(Error::Parse(format!("c must be finite and positive, got {c}")))
                }
                None => return Err(Error::Parse("proportional regime needs the key c".into())),
            }
        }
        match self.kind {
            ExperimentKind::MixedCompare if self.r != 4 => {
                Err(Error::Parse("mixed_compare is an order-4 experiment; set r = 4".into()))
            }
            ExperimentKind::TvBound if self.r != 4 => {
                Err(Error::Parse("tv_bound uses the order-4 model; set r = 4".into()))
            }
            ExperimentKind::Directional | ExperimentKind::CovValidate
                if self.mode == ModelMode::Mixed4 && self.r != 4 =>
            {
                Err(Error::Parse("mode mixed4 requires r = 4".into()))
            }
            ExperimentKind::Bulk if self.mode == ModelMode::Mixed4 && self.r != 4 => {
                Err(Error::Parse("mode mixed4 requires r = 4".into()))
            }
            _ => Ok(()),
        }
    }

    /// Echo of the configuration as ordered key=value pairs (the parseable
    /// form; also embedded in summary.json).
    pub fn echo(&self) -> Vec<(String, String)> {
        let mut fields = vec![
            ("kind".to_string(), self.kind.tag().to_string()),
            ("r".to_string(), self.r.to_string()),
            ("n".to_string(), self.n.to_string()),
            ("replications".to_string(), self.replications.to_string()),
            ("master_seed".to_string(), self.master_seed.to_string()),
            ("regime".to_string(), self.regime.name.tag().to_string()),
        ];
        if let Some(c) = self.regime.c {
            fields.push(("c".to_string(), gote_core::tensor::fmt_float(c)));
        }
        fields.push(("direction".to_string(), self.direction.label()));
        fields.push(("rho".to_string(), gote_core::tensor::fmt_float(self.rho)));
        fields.push(("sampler".to_string(), self.sampler.tag().to_string()));
        fields.push(("mode".to_string(), self.mode.tag().to_string()));
        fields.push(("bulk_delta".to_string(), gote_core::tensor::fmt_float(self.bulk_delta)));
        fields.push(("epsilon".to_string(), gote_core::tensor::fmt_float(self.epsilon)));
        fields
    }
}

fn set_once<T>(slot: &mut Option<T>, value: T, dup: impl Fn() -> Error) -> Result<()> {
    if slot.is_some() {
        return Err(dup());
    }
    *slot = Some(value);
    Ok(())
}

fn parse_num<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Parse(format!("key {key}: bad integer {value:?}")))
}

fn parse_float(key: &str, value: &str) -> Result<f64> {
    let x: f64 = value
        .parse()
        .map_err(|_| Error::Parse(format!("key {key}: bad float {value:?}")))?;
    if !x.is_finite() {
        return Err(Error::Parse(format!("key {key}: non-finite value {value:?}")));
    }
    Ok(x)
}
