//! TOML experiment configuration and its resolution into simulation inputs.
//!
//! A config names one flow source, either a `date,fii_net,dii_net` file or
//! synthetic Gaussian flow, and a list of regimes. Regimes are bounded by
//! calendar dates (resolved to trading-day offsets against the loaded data)
//! or by day counts. Relative paths are resolved against `RECOVERY_LAB_DATA`
//! when set, otherwise against the directory holding the config.

use std::fs;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Deserializer, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::io::data::{load_flows, load_prices};
use crate::model::{
    antifragility, sector_antifragility, Antifragility, CompanyFinancials, RegimeKind,
    RegimeSchedule, RegimeSegment, Sentiment, ShapeThresholds,
};
use crate::synthflow::{
    flow_stream_seed, gen_flow, reference_flow, reference_lambda, RegimeFlowSpec, SweepAxis,
    SweepFixed, SweepGrid,
};

/// Environment variable that, when set, prefixes relative data paths.
pub const DATA_ENV: &str = "RECOVERY_LAB_DATA";

const DEFAULT_SYNTHETIC_PRICE: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowSource {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub synthetic: bool,
}

/// One regime. Its extent is a start date, a day count, or both.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegimeConfig {
    pub kind: RegimeKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(
        default,
        deserialize_with = "de_opt_date",
        skip_serializing_if = "Option::is_none"
    )]
    pub start: Option<NaiveDate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub length: Option<usize>,
    /// Defaults to the regime's reference flow share.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    /// Defaults to -1 in negative-sentiment regimes and +1 elsewhere.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<Sentiment>,
    /// Synthetic flow mean; defaults to the regime's reference.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    /// Synthetic flow standard deviation; defaults to the regime's reference.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
}

impl RegimeConfig {
    fn name(&self, i: usize) -> String {
        match &self.label {
            Some(l) => format!("`{l}` (#{})", i + 1),
            None => format!("`{}` (#{})", self.kind.as_str(), i + 1),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisToggles {
    pub emd: bool,
    pub sst: bool,
    pub timescale: bool,
    pub correlation: bool,
}

impl Default for AnalysisToggles {
    fn default() -> Self {
        Self {
            emd: true,
            sst: true,
            timescale: true,
            correlation: true,
        }
    }
}

impl AnalysisToggles {
    pub fn none() -> Self {
        Self {
            emd: false,
            sst: false,
            timescale: false,
            correlation: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    /// Number of seeds, counted up from the config seed.
    #[serde(default = "default_seed_count")]
    pub seeds: usize,
    #[serde(default)]
    pub fixed: SweepFixed,
}

fn default_seed_count() -> usize {
    100
}

/// A dated marker drawn on overlay plots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Annotation {
    #[serde(deserialize_with = "de_date")]
    pub date: NaiveDate,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    /// Defaults to the first close for real data and 0.5 for synthetic runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_price: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<f64>,
    /// Constituents whose mean antifragility is used instead of `phi`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub companies: Vec<CompanyFinancials>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prices: Option<PathBuf>,
    #[serde(default = "default_confidence")]
    pub confidence: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub flow: FlowSource,
    #[serde(default)]
    pub analysis: AnalysisToggles,
    #[serde(default)]
    pub thresholds: ShapeThresholds,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub regimes: Vec<RegimeConfig>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub annotations: Vec<Annotation>,
    /// Directory relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn default_confidence() -> f64 {
    0.99
}

#[derive(Deserialize)]
#[serde(untagged)]
enum DateRepr {
    Text(String),
    Toml(toml::value::Datetime),
}

fn to_date(repr: DateRepr) -> std::result::Result<NaiveDate, String> {
    let text = match repr {
        DateRepr::Text(s) => s,
        DateRepr::Toml(d) => d.to_string(),
    };
    NaiveDate::parse_from_str(&text, "%Y-%m-%d").map_err(|e| format!("bad date `{text}`: {e}"))
}

fn de_date<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<NaiveDate, D::Error> {
    to_date(DateRepr::deserialize(d)?).map_err(serde::de::Error::custom)
}

fn de_opt_date<'de, D: Deserializer<'de>>(
    d: D,
) -> std::result::Result<Option<NaiveDate>, D::Error> {
    de_date(d).map(Some)
}

/// Flow calendar join counts for real-data runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct JoinReport {
    pub price_rows: usize,
    pub flow_rows: usize,
    pub aligned: usize,
}

/// Everything a single (non-sweep) run needs.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedRun {
    /// Trading calendar; empty for synthetic runs.
    pub dates: Vec<NaiveDate>,
    /// Observed closes on `dates`; empty for synthetic runs.
    pub original: Vec<f64>,
    /// One normalized flow per simulation step.
    pub psi: Vec<f64>,
    pub schedule: RegimeSchedule,
    pub phi: Antifragility,
    pub initial_price: f64,
    pub join: Option<JoinReport>,
}

impl ResolvedRun {
    pub fn has_original(&self) -> bool {
        !self.original.is_empty()
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str, base_dir: impl Into<PathBuf>) -> Result<Self> {
        let mut cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.base_dir = base_dir.into();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_toml(&text, dir).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            e => e,
        })
    }

    /// Canonical TOML form of the config.
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// SHA-256 of the canonical TOML form, in hex.
    pub fn hash(&self) -> Result<String> {
        Ok(hex::encode(Sha256::digest(self.to_toml()?.as_bytes())))
    }

    pub fn validate(&self) -> Result<()> {
        let cfg_err = |m: String| Err(Error::Config(m));
        if self.name.trim().is_empty() {
            return cfg_err("`name` must not be empty".into());
        }
        match (&self.flow.file, self.flow.synthetic) {
            (Some(_), true) => {
                return cfg_err("flow: give either `file` or `synthetic`, not both".into())
            }
            (None, false) => {
                return cfg_err("flow: one of `file` or `synthetic = true` is required".into())
            }
            _ => {}
        }
        if let Some(p) = self.initial_price {
            if !(p > 0.0) {
                return cfg_err(format!("initial_price must be positive, got {p}"));
            }
        }
        if self.phi.is_some() && !self.companies.is_empty() {
            return cfg_err("give either `phi` or `companies`, not both".into());
        }
        if let Some(sweep) = &self.sweep {
            if !self.flow.synthetic {
                return cfg_err("a sweep needs `flow.synthetic = true`".into());
            }
            if !self.regimes.is_empty() || self.prices.is_some() {
                return cfg_err(
                    "a sweep builds its own regimes; drop `regimes` and `prices`".into(),
                );
            }
            if sweep.seeds == 0 {
                return cfg_err("sweep.seeds must be positive".into());
            }
        } else {
            if self.phi.is_none() && self.companies.is_empty() {
                return cfg_err("one of `phi` or `companies` is required".into());
            }
            if self.regimes.is_empty() {
                return cfg_err("at least one regime is required".into());
            }
            if self.flow.synthetic && self.prices.is_some() {
                return cfg_err("synthetic flow runs do not take `prices`".into());
            }
        }
        for (i, r) in self.regimes.iter().enumerate() {
            if self.flow.synthetic && r.start.is_some() {
                return cfg_err(format!(
                    "regime {}: synthetic runs need `length`, not `start`",
                    r.name(i)
                ));
            }
            if self.flow.synthetic && r.length.is_none() {
                return cfg_err(format!("regime {}: `length` is required", r.name(i)));
            }
            if !self.flow.synthetic && (r.mu.is_some() || r.sigma.is_some()) {
                return cfg_err(format!(
                    "regime {}: `mu`/`sigma` only apply to synthetic flow",
                    r.name(i)
                ));
            }
        }
        Ok(())
    }

    /// `path` resolved against the data directory.
    pub fn resolve_path(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            return path.to_path_buf();
        }
        match std::env::var_os(DATA_ENV) {
            Some(dir) if !dir.is_empty() => PathBuf::from(dir).join(path),
            _ => self.base_dir.join(path),
        }
    }

    pub fn antifragility(&self) -> Result<Antifragility> {
        if let Some(phi) = self.phi {
            if !phi.is_finite() {
                return Err(Error::Config(format!("phi must be finite, got {phi}")));
            }
            return Ok(Antifragility(phi));
        }
        let phis = self
            .companies
            .iter()
            .map(antifragility)
            .collect::<Result<Vec<_>>>()?;
        sector_antifragility(&phis)
    }

    /// The sweep grid, with seeds counted up from `seed`.
    pub fn sweep_grid(&self) -> Option<SweepGrid> {
        self.sweep.as_ref().map(|s| SweepGrid {
            axis: s.axis,
            values: s.values.clone(),
            fixed: s.fixed,
            seeds: (0..s.seeds as u64)
                .map(|i| self.seed.wrapping_add(i))
                .collect(),
        })
    }

    /// Loads data, aligns calendars and builds the schedule of a single run.
    pub fn resolve(&self) -> Result<ResolvedRun> {
        if self.sweep.is_some() {
            return Err(Error::Config(
                "sweep configs resolve through `sweep_grid`".into(),
            ));
        }
        let phi = self.antifragility()?;
        if self.flow.synthetic {
            return self.resolve_synthetic(phi);
        }
        let flow_path = self.resolve_path(self.flow.file.as_deref().expect("validated"));
        let flows = load_flows(&flow_path)?;
        let (dates, original, psi_on_dates, join) = match &self.prices {
            Some(p) => {
                let prices = load_prices(&self.resolve_path(p))?;
                let (dates, psi) = flows.inner_join(prices.dates());
                let original: Vec<f64> = dates
                    .iter()
                    .map(|d| prices.values()[prices.offset_of(*d).expect("joined date")])
                    .collect();
                let join = JoinReport {
                    price_rows: prices.len(),
                    flow_rows: flows.len(),
                    aligned: dates.len(),
                };
                (dates, original, psi, Some(join))
            }
            None => (
                flows.dates().to_vec(),
                Vec::new(),
                flows.psi().to_vec(),
                None,
            ),
        };
        if dates.len() < 2 {
            return Err(Error::Config(format!(
                "only {} dates shared by prices and flows",
                dates.len()
            )));
        }
        let steps = dates.len() - 1;
        let schedule = self.build_schedule(steps, Some(&dates))?;
        let initial_price = match (self.initial_price, original.first()) {
            (Some(p), _) => p,
            (None, Some(&p)) => p,
            (None, None) => {
                return Err(Error::Config(
                    "initial_price is required when no prices are given".into(),
                ))
            }
        };
        Ok(ResolvedRun {
            psi: psi_on_dates[..steps].to_vec(),
            dates,
            original,
            schedule,
            phi,
            initial_price,
            join,
        })
    }

    /// Flow specification for synthetic runs, one entry per regime.
    pub fn flow_specs(&self) -> Result<Vec<RegimeFlowSpec>> {
        self.regimes
            .iter()
            .map(|r| {
                let (mu, sigma) = reference_flow(r.kind);
                RegimeFlowSpec::new(
                    r.kind,
                    r.mu.unwrap_or(mu),
                    r.sigma.unwrap_or(sigma),
                    r.length.unwrap_or(0),
                )
            })
            .collect()
    }

    fn resolve_synthetic(&self, phi: Antifragility) -> Result<ResolvedRun> {
        let steps: usize = self.regimes.iter().filter_map(|r| r.length).sum();
        let schedule = self.build_schedule(steps, None)?;
        let specs = self.flow_specs()?;
        let psi = gen_flow(&specs, flow_stream_seed(self.seed, &specs))?;
        Ok(ResolvedRun {
            dates: Vec::new(),
            original: Vec::new(),
            psi,
            schedule,
            phi,
            initial_price: self.initial_price.unwrap_or(DEFAULT_SYNTHETIC_PRICE),
            join: None,
        })
    }

    /// Turns regimes into a schedule covering exactly `steps` steps.
    ///
    /// A regime starts at its resolved `start` date (first trading day on or
    /// after it) or where the previous one ends. It runs until the next
    /// regime's start, for its `length`, or, for the last one, to the end.
    pub fn build_schedule(
        &self,
        steps: usize,
        calendar: Option<&[NaiveDate]>,
    ) -> Result<RegimeSchedule> {
        let seg_err = |i: usize, msg: String| {
            Error::Config(format!("regime {}: {msg}", self.regimes[i].name(i)))
        };
        let mut offsets = Vec::with_capacity(self.regimes.len());
        for (i, r) in self.regimes.iter().enumerate() {
            let offset = match (r.start, calendar) {
                (Some(date), Some(cal)) => {
                    let first = cal[0];
                    let last = cal[cal.len() - 1];
                    if date > last {
                        return Err(seg_err(
                            i,
                            format!("start {date} lies outside the data range {first}..{last}"),
                        ));
                    }
                    let off = cal.partition_point(|d| *d < date);
                    if i == 0 && off != 0 {
                        return Err(seg_err(
                            i,
                            format!("the first regime must start on or before {first}, got {date}"),
                        ));
                    }
                    off
                }
                (Some(_), None) => return Err(seg_err(i, "dates need a data calendar".into())),
                (None, _) if i == 0 => 0,
                (None, _) => match self.regimes[i - 1].length {
                    Some(len) => offsets[i - 1] + len,
                    None => {
                        return Err(seg_err(
                            i,
                            "needs `start` because the previous regime has no `length`".into(),
                        ))
                    }
                },
            };
            if let Some(&prev) = offsets.last() {
                if offset < prev {
                    return Err(seg_err(i, "starts before the previous regime".into()));
                }
            }
            if offset > steps {
                return Err(seg_err(
                    i,
                    format!("starts at step {offset}, beyond the {steps} available"),
                ));
            }
            offsets.push(offset);
        }
        let mut segments = Vec::with_capacity(self.regimes.len());
        for (i, r) in self.regimes.iter().enumerate() {
            let end = offsets.get(i + 1).copied().unwrap_or(match r.length {
                Some(len) if i + 1 == self.regimes.len() && calendar.is_none() => offsets[i] + len,
                _ => steps,
            });
            let length = end - offsets[i];
            if let Some(len) = r.length {
                if len != length {
                    return Err(seg_err(
                        i,
                        format!(
                            "length {len} disagrees with the {length} days up to the next boundary"
                        ),
                    ));
                }
            }
            let lambda = r.lambda.unwrap_or_else(|| reference_lambda(r.kind));
            let sentiment = r.theta.unwrap_or_else(|| r.kind.default_sentiment());
            segments.push(
                RegimeSegment::with_sentiment(r.kind, length, lambda, sentiment)
                    .map_err(|e| seg_err(i, e.to_string()))?,
            );
        }
        let schedule = RegimeSchedule::new(segments);
        if schedule.total_len() != steps {
            return Err(Error::Config(format!(
                "regimes cover {} steps but the data has {steps}",
                schedule.total_len()
            )));
        }
        Ok(schedule)
    }

    /// Sweep axis name, if any.
    pub fn sweep_axis(&self) -> Option<SweepAxis> {
        self.sweep.as_ref().map(|s| s.axis)
    }

    pub fn shape_thresholds(&self) -> ShapeThresholds {
        self.thresholds
    }
}
