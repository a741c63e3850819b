//! Synthetic normalized fund-flow for COVID-like shock experiments, and the
//! parameter sweeps built on top of it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::model::{self, Antifragility, RegimeKind, RegimeSchedule, RegimeSegment};

/// Gaussian flow distribution of one regime.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeFlowSpec {
    pub kind: RegimeKind,
    pub mu: f64,
    /// Standard deviation, not variance.
    pub sigma: f64,
    pub length: usize,
}

impl RegimeFlowSpec {
    pub fn new(kind: RegimeKind, mu: f64, sigma: f64, length: usize) -> Result<Self> {
        if !(sigma > 0.0) || !mu.is_finite() || !sigma.is_finite() {
            return Err(Error::InvalidSegment(format!(
                "{}: need finite mu and sigma > 0, got mu={mu} sigma={sigma}",
                kind.as_str()
            )));
        }
        Ok(Self {
            kind,
            mu,
            sigma,
            length,
        })
    }

    /// The regime's reference distribution from [`reference_flow`].
    pub fn reference(kind: RegimeKind, length: usize) -> Self {
        let (mu, sigma) = reference_flow(kind);
        Self {
            kind,
            mu,
            sigma,
            length,
        }
    }
}

/// `(mu, sigma)` of the synthetic flow in each regime.
pub fn reference_flow(kind: RegimeKind) -> (f64, f64) {
    match kind {
        RegimeKind::Normal => (0.0, 0.28),
        RegimeKind::Shock => (-0.237, 0.56),
        RegimeKind::NegativeSentiment => (0.009, 0.41),
        RegimeKind::Recovery => (0.17, 0.53),
        RegimeKind::PostRecovery => (0.051, 0.43),
    }
}

/// Flow share `lambda` used with synthetic flow in each regime.
pub fn reference_lambda(kind: RegimeKind) -> f64 {
    match kind {
        RegimeKind::Normal => 0.3,
        RegimeKind::Shock => 0.4,
        RegimeKind::NegativeSentiment => 0.2,
        RegimeKind::Recovery => 0.6,
        RegimeKind::PostRecovery => 0.3,
    }
}

/// Concatenated i.i.d. Gaussian draws per segment, clipped to [-1, 1].
pub fn gen_flow(specs: &[RegimeFlowSpec], seed: u64) -> Result<Vec<f64>> {
    if !specs.iter().any(|s| s.length > 0) {
        return Err(Error::EmptySchedule);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(specs.iter().map(|s| s.length).sum());
    for spec in specs {
        let normal = Normal::new(spec.mu, spec.sigma)
            .map_err(|e| Error::InvalidSegment(format!("{}: {e}", spec.kind.as_str())))?;
        out.extend((0..spec.length).map(|_| normal.sample(&mut rng).clamp(-1.0, 1.0)));
    }
    Ok(out)
}

/// Derives a stream seed from a base seed and an arbitrary stable key.
pub fn derive_seed(base: u64, key: &str) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(base.to_le_bytes());
    hasher.update(key.as_bytes());
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}

/// Stream seed for one flow specification. Experiments that share the flow
/// specification and base seed share the flow draws.
pub fn flow_stream_seed(base: u64, specs: &[RegimeFlowSpec]) -> u64 {
    let key: String = specs
        .iter()
        .map(|s| {
            format!(
                "{}:{:016x}:{:016x}:{};",
                s.kind.as_str(),
                s.mu.to_bits(),
                s.sigma.to_bits(),
                s.length
            )
        })
        .collect();
    derive_seed(base, &key)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SweepAxis {
    #[serde(rename = "t_s")]
    ShockLength,
    #[serde(rename = "t_n")]
    NegativeLength,
    #[serde(rename = "phi")]
    Phi,
    #[serde(rename = "lambda_recovery")]
    RecoveryLambda,
}

impl SweepAxis {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepAxis::ShockLength => "t_s",
            SweepAxis::NegativeLength => "t_n",
            SweepAxis::Phi => "phi",
            SweepAxis::RecoveryLambda => "lambda_recovery",
        }
    }
}

/// Parameters held constant across a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepFixed {
    pub phi: f64,
    pub shock_len: usize,
    pub negative_len: usize,
    pub recovery_lambda: f64,
    pub normal_len: usize,
    pub recovery_len: usize,
    pub post_recovery_len: usize,
    /// When set, the post-recovery segment is stretched or shortened so every
    /// experiment covers this many steps.
    pub horizon: Option<usize>,
    pub initial_price: f64,
}

impl Default for SweepFixed {
    fn default() -> Self {
        Self {
            phi: 0.9,
            shock_len: 25,
            negative_len: 50,
            recovery_lambda: reference_lambda(RegimeKind::Recovery),
            normal_len: 50,
            recovery_len: 100,
            post_recovery_len: 100,
            horizon: None,
            initial_price: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    #[serde(default)]
    pub fixed: SweepFixed,
    pub seeds: Vec<u64>,
}

/// The varied parameters of one experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepPoint {
    pub phi: f64,
    pub shock_len: usize,
    pub negative_len: usize,
    pub recovery_lambda: f64,
}

/// One fully specified synthetic run.
#[derive(Debug, Clone, PartialEq)]
pub struct Experiment {
    pub axis: SweepAxis,
    pub value: f64,
    pub point: SweepPoint,
    pub seed: u64,
    pub flow_seed: u64,
    pub initial_price: f64,
    pub schedule: RegimeSchedule,
    pub flows: Vec<RegimeFlowSpec>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRun {
    pub psi: Vec<f64>,
    pub path: Vec<f64>,
}

impl Experiment {
    pub fn run(&self) -> Result<ExperimentRun> {
        let psi = gen_flow(&self.flows, self.flow_seed)?;
        let path = model::simulate(
            self.initial_price,
            &psi,
            &self.schedule,
            Antifragility(self.point.phi),
        )?;
        Ok(ExperimentRun { psi, path })
    }

    /// Step at which sentiment turns positive again (end of the negative period).
    pub fn sentiment_flip(&self) -> usize {
        let (start, len) = self
            .schedule
            .span_of(RegimeKind::Shock)
            .expect("sweep schedules always contain a shock");
        start + len + self.point.negative_len
    }
}

fn whole_days(axis: SweepAxis, v: f64) -> Result<usize> {
    if v.fract() != 0.0 || v < 0.0 || !v.is_finite() {
        return Err(Error::InvalidGrid(format!(
            "{} values must be whole non-negative day counts, got {v}",
            axis.as_str()
        )));
    }
    Ok(v as usize)
}

/// Regime schedule and flow specification for one sweep point.
pub fn schedule_for(
    point: &SweepPoint,
    fixed: &SweepFixed,
) -> Result<(RegimeSchedule, Vec<RegimeFlowSpec>)> {
    let before_post = fixed.normal_len + point.shock_len + point.negative_len + fixed.recovery_len;
    let post = match fixed.horizon {
        Some(h) if h < before_post => {
            return Err(Error::InvalidGrid(format!(
                "horizon {h} shorter than the {before_post} steps before post-recovery"
            )))
        }
        Some(h) => h - before_post,
        None => fixed.post_recovery_len,
    };
    let lengths = [
        (RegimeKind::Normal, fixed.normal_len),
        (RegimeKind::Shock, point.shock_len),
        (RegimeKind::NegativeSentiment, point.negative_len),
        (RegimeKind::Recovery, fixed.recovery_len),
        (RegimeKind::PostRecovery, post),
    ];
    let mut segments = Vec::with_capacity(5);
    let mut flows = Vec::with_capacity(5);
    for (kind, len) in lengths {
        let lambda = if kind == RegimeKind::Recovery {
            point.recovery_lambda
        } else {
            reference_lambda(kind)
        };
        segments.push(RegimeSegment::new(kind, len, lambda)?);
        flows.push(RegimeFlowSpec::reference(kind, len));
    }
    Ok((RegimeSchedule::new(segments), flows))
}

/// Expands a grid into one experiment per value and seed, values outermost.
pub fn build_sweep(grid: &SweepGrid) -> Result<Vec<Experiment>> {
    if grid.values.is_empty() {
        return Err(Error::InvalidGrid("no grid values".into()));
    }
    if grid.seeds.is_empty() {
        return Err(Error::InvalidGrid("no seeds".into()));
    }
    for (i, a) in grid.values.iter().enumerate() {
        if grid.values[..i].contains(a) {
            return Err(Error::InvalidGrid(format!("duplicate grid value {a}")));
        }
    }
    for (i, s) in grid.seeds.iter().enumerate() {
        if grid.seeds[..i].contains(s) {
            return Err(Error::InvalidGrid(format!("duplicate seed {s}")));
        }
    }
    let fixed = &grid.fixed;
    if !(fixed.initial_price > 0.0) {
        return Err(Error::InvalidGrid("initial price must be positive".into()));
    }
    let mut out = Vec::with_capacity(grid.values.len() * grid.seeds.len());
    for &value in &grid.values {
        let mut point = SweepPoint {
            phi: fixed.phi,
            shock_len: fixed.shock_len,
            negative_len: fixed.negative_len,
            recovery_lambda: fixed.recovery_lambda,
        };
        match grid.axis {
            SweepAxis::ShockLength => point.shock_len = whole_days(grid.axis, value)?,
            SweepAxis::NegativeLength => point.negative_len = whole_days(grid.axis, value)?,
            SweepAxis::Phi if value.is_finite() => point.phi = value,
            SweepAxis::RecoveryLambda if value > 0.0 && value <= 1.0 => {
                point.recovery_lambda = value
            }
            axis => {
                return Err(Error::InvalidGrid(format!(
                    "value {value} is not valid for axis {}",
                    axis.as_str()
                )))
            }
        }
        if point.shock_len == 0 {
            return Err(Error::InvalidGrid("shock length must be positive".into()));
        }
        let (schedule, flows) = schedule_for(&point, fixed)?;
        for &seed in &grid.seeds {
            out.push(Experiment {
                axis: grid.axis,
                value,
                point,
                seed,
                flow_seed: flow_stream_seed(seed, &flows),
                initial_price: fixed.initial_price,
                schedule: schedule.clone(),
                flows: flows.clone(),
            });
        }
    }
    Ok(out)
}
