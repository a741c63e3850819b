//! Fund-flow driven price model with investor sentiment.
//!
//! Prices evolve multiplicatively from the normalized institutional net
//! flow `psi`. Inside a shock the update follows flow alone,
//! `P[t+1] = P[t] * (1 + lambda * psi[t])`; everywhere else antifragility
//! and sentiment scale the flow, `P[t+1] = P[t] * (1 + lambda * psi[t] * phi * theta)`.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Divides every value by the largest absolute value in the sample.
pub fn normalize_flow(raw: &[f64]) -> Result<Vec<f64>> {
    if raw.is_empty() {
        return Err(Error::EmptySeries);
    }
    let scale = raw.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return Err(Error::AllZeroFlow);
    }
    Ok(raw.iter().map(|v| v / scale).collect())
}

/// Dated net institutional flow and its normalized form.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowSeries {
    dates: Vec<NaiveDate>,
    raw: Vec<f64>,
    psi: Vec<f64>,
}

impl FlowSeries {
    /// Builds the series, normalizing over the whole sample.
    pub fn from_raw(dates: Vec<NaiveDate>, raw: Vec<f64>) -> Result<Self> {
        if dates.len() != raw.len() {
            return Err(Error::LengthMismatch {
                expected: dates.len(),
                actual: raw.len(),
            });
        }
        check_increasing(&dates)?;
        let psi = normalize_flow(&raw)?;
        Ok(Self { dates, raw, psi })
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn raw(&self) -> &[f64] {
        &self.raw
    }

    pub fn psi(&self) -> &[f64] {
        &self.psi
    }

    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    /// Normalized flow looked up on each of `dates`, skipping dates without a flow
    /// record. Returns the matched dates and their `psi`. Normalization is kept
    /// from the full sample.
    pub fn inner_join(&self, dates: &[NaiveDate]) -> (Vec<NaiveDate>, Vec<f64>) {
        let mut out_dates = Vec::new();
        let mut out_psi = Vec::new();
        let (mut i, mut j) = (0, 0);
        while i < self.dates.len() && j < dates.len() {
            match self.dates[i].cmp(&dates[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    out_dates.push(dates[j]);
                    out_psi.push(self.psi[i]);
                    i += 1;
                    j += 1;
                }
            }
        }
        (out_dates, out_psi)
    }
}

fn check_increasing(dates: &[NaiveDate]) -> Result<()> {
    if let Some(w) = dates.windows(2).find(|w| w[1] <= w[0]) {
        return Err(Error::InvalidSegment(format!(
            "dates must be strictly increasing ({} then {})",
            w[0], w[1]
        )));
    }
    Ok(())
}

/// Balance-sheet items of one company.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompanyFinancials {
    pub current_assets: f64,
    pub current_liabilities: f64,
    pub operating_expenses: f64,
}

/// Financial antifragility. Indian equities mostly sit in (-2, 2) but the
/// range is not enforced.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Antifragility(pub f64);

impl Antifragility {
    pub fn value(self) -> f64 {
        self.0
    }
}

/// `(current assets - current liabilities) / operating expenses`.
pub fn antifragility(fin: &CompanyFinancials) -> Result<Antifragility> {
    if !(fin.operating_expenses > 0.0) {
        return Err(Error::NonPositiveExpenses(fin.operating_expenses));
    }
    Ok(Antifragility(
        (fin.current_assets - fin.current_liabilities) / fin.operating_expenses,
    ))
}

/// Sector antifragility: arithmetic mean over constituents.
pub fn sector_antifragility(phis: &[Antifragility]) -> Result<Antifragility> {
    if phis.is_empty() {
        return Err(Error::EmptySeries);
    }
    let sum: f64 = phis.iter().map(|p| p.0).sum();
    Ok(Antifragility(sum / phis.len() as f64))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegimeKind {
    Normal,
    Shock,
    NegativeSentiment,
    Recovery,
    PostRecovery,
}

impl RegimeKind {
    pub const ALL: [RegimeKind; 5] = [
        RegimeKind::Normal,
        RegimeKind::Shock,
        RegimeKind::NegativeSentiment,
        RegimeKind::Recovery,
        RegimeKind::PostRecovery,
    ];

    pub fn default_sentiment(self) -> Sentiment {
        match self {
            RegimeKind::NegativeSentiment => Sentiment::Negative,
            _ => Sentiment::Positive,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            RegimeKind::Normal => "normal",
            RegimeKind::Shock => "shock",
            RegimeKind::NegativeSentiment => "negative_sentiment",
            RegimeKind::Recovery => "recovery",
            RegimeKind::PostRecovery => "post_recovery",
        }
    }
}

/// Investor sentiment, `theta` in the price update.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "i8", into = "i8")]
pub enum Sentiment {
    Negative,
    Neutral,
    Positive,
}

impl Sentiment {
    pub fn theta(self) -> f64 {
        match self {
            Sentiment::Negative => -1.0,
            Sentiment::Neutral => 0.0,
            Sentiment::Positive => 1.0,
        }
    }
}

impl TryFrom<i8> for Sentiment {
    type Error = String;

    fn try_from(v: i8) -> std::result::Result<Self, String> {
        match v {
            -1 => Ok(Sentiment::Negative),
            0 => Ok(Sentiment::Neutral),
            1 => Ok(Sentiment::Positive),
            other => Err(format!("theta must be -1, 0 or 1, got {other}")),
        }
    }
}

impl From<Sentiment> for i8 {
    fn from(s: Sentiment) -> i8 {
        s.theta() as i8
    }
}

/// A run of trading days sharing one update rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegimeSegment {
    pub kind: RegimeKind,
    pub length: usize,
    pub lambda: f64,
    pub sentiment: Sentiment,
}

impl RegimeSegment {
    /// Segment with the kind's default sentiment.
    pub fn new(kind: RegimeKind, length: usize, lambda: f64) -> Result<Self> {
        Self::with_sentiment(kind, length, lambda, kind.default_sentiment())
    }

    pub fn with_sentiment(
        kind: RegimeKind,
        length: usize,
        lambda: f64,
        sentiment: Sentiment,
    ) -> Result<Self> {
        if !(lambda > 0.0 && lambda <= 1.0) {
            return Err(Error::InvalidSegment(format!(
                "{}: lambda must lie in (0, 1], got {lambda}",
                kind.as_str()
            )));
        }
        Ok(Self {
            kind,
            length,
            lambda,
            sentiment,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RegimeSchedule {
    segments: Vec<RegimeSegment>,
}

impl RegimeSchedule {
    pub fn new(segments: Vec<RegimeSegment>) -> Self {
        Self { segments }
    }

    pub fn segments(&self) -> &[RegimeSegment] {
        &self.segments
    }

    pub fn total_len(&self) -> usize {
        self.segments.iter().map(|s| s.length).sum()
    }

    /// Per-step segment, in order.
    pub fn steps(&self) -> impl Iterator<Item = &RegimeSegment> + '_ {
        self.segments
            .iter()
            .flat_map(|s| std::iter::repeat_n(s, s.length))
    }

    /// Step offset and length of the first segment of `kind` with positive length.
    pub fn span_of(&self, kind: RegimeKind) -> Option<(usize, usize)> {
        let mut start = 0;
        for s in &self.segments {
            if s.kind == kind && s.length > 0 {
                return Some((start, s.length));
            }
            start += s.length;
        }
        None
    }
}

/// Dated positive price levels.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceSeries {
    dates: Vec<NaiveDate>,
    values: Vec<f64>,
}

impl PriceSeries {
    pub fn new(dates: Vec<NaiveDate>, values: Vec<f64>) -> Result<Self> {
        if dates.len() != values.len() {
            return Err(Error::LengthMismatch {
                expected: dates.len(),
                actual: values.len(),
            });
        }
        check_increasing(&dates)?;
        if let Some(v) = values.iter().find(|v| !(**v > 0.0)) {
            return Err(Error::InvalidSegment(format!("price {v} is not positive")));
        }
        Ok(Self { dates, values })
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Offset of the first trading day on or after `date`.
    pub fn offset_of(&self, date: NaiveDate) -> Option<usize> {
        let i = self.dates.partition_point(|d| *d < date);
        (i < self.dates.len()).then_some(i)
    }
}

/// Runs the price update over `psi`. The returned path starts with `p0`
/// and has `psi.len() + 1` points.
pub fn simulate(
    p0: f64,
    psi: &[f64],
    schedule: &RegimeSchedule,
    phi: Antifragility,
) -> Result<Vec<f64>> {
    if schedule.total_len() != psi.len() {
        return Err(Error::LengthMismatch {
            expected: psi.len(),
            actual: schedule.total_len(),
        });
    }
    if !(p0 > 0.0) {
        return Err(Error::NonPositiveInitialPrice(p0));
    }
    let phi = phi.value();
    let gain = phi.abs().max(1.0);
    let mut path = Vec::with_capacity(psi.len() + 1);
    path.push(p0);
    let mut price = p0;
    for (step, (seg, &flow)) in schedule.steps().zip(psi).enumerate() {
        let magnitude = seg.lambda * flow.abs() * gain;
        if magnitude >= 1.0 {
            return Err(Error::BlowupRisk { step, magnitude });
        }
        let factor = match seg.kind {
            RegimeKind::Shock => 1.0 + seg.lambda * flow,
            _ => 1.0 + seg.lambda * flow * phi * seg.sentiment.theta(),
        };
        price *= factor;
        path.push(price);
    }
    Ok(path)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RecoveryShape {
    V,
    U,
    Swoosh,
    L,
    Undetermined,
}

impl std::fmt::Display for RecoveryShape {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            RecoveryShape::V => "V",
            RecoveryShape::U => "U",
            RecoveryShape::Swoosh => "Swoosh",
            RecoveryShape::L => "L",
            RecoveryShape::Undetermined => "Undetermined",
        };
        f.write_str(s)
    }
}

/// Heuristic cut-offs for [`classify_recovery`]. None of these come from the
/// model itself; they formalize the usual letter vocabulary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ShapeThresholds {
    /// Trough band half-width as a fraction of the drawdown.
    pub trough_eps: f64,
    /// Post-shock days inside the trough band that make a U.
    pub u_dwell: usize,
    /// A recovery slower than this many shock lengths is a swoosh.
    pub swoosh_factor: f64,
    /// Share of the drawdown that must be regained to count as recovering at all.
    pub min_recovery: f64,
    /// Share of the pre-shock level that counts as fully recovered.
    pub full_recovery: f64,
}

impl Default for ShapeThresholds {
    fn default() -> Self {
        Self {
            trough_eps: 0.05,
            u_dwell: 20,
            swoosh_factor: 2.0,
            min_recovery: 0.5,
            full_recovery: 0.9,
        }
    }
}

/// Trough geometry of a path around its shock.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecoveryProfile {
    pub shape: RecoveryShape,
    pub shock_start: usize,
    pub shock_end: usize,
    pub pre_shock: f64,
    pub trough: f64,
    pub trough_index: usize,
    /// Post-shock days within the trough band before the path regains `min_recovery`.
    pub dwell: usize,
    /// First index regaining `min_recovery` of the drawdown.
    pub partial_recovery_index: Option<usize>,
    /// First index back above `full_recovery` of the pre-shock level.
    pub full_recovery_index: Option<usize>,
}

/// Labels the recovery after the schedule's first shock.
///
/// `path` must be the simulated path (one more point than the schedule has steps)
/// or any path indexed the same way.
pub fn classify_recovery(
    path: &[f64],
    schedule: &RegimeSchedule,
    thresholds: &ShapeThresholds,
) -> Result<RecoveryProfile> {
    let (start, len) = schedule
        .span_of(RegimeKind::Shock)
        .ok_or(Error::NoShockSegment)?;
    if path.len() <= start + len {
        return Err(Error::LengthMismatch {
            expected: schedule.total_len() + 1,
            actual: path.len(),
        });
    }
    let end = start + len;
    let pre = path[start];
    let (trough_index, trough) =
        path[start..]
            .iter()
            .enumerate()
            .fold(
                (start, pre),
                |acc, (i, &v)| {
                    if v < acc.1 {
                        (start + i, v)
                    } else {
                        acc
                    }
                },
            );
    let mut profile = RecoveryProfile {
        shape: RecoveryShape::Undetermined,
        shock_start: start,
        shock_end: end,
        pre_shock: pre,
        trough,
        trough_index,
        dwell: 0,
        partial_recovery_index: None,
        full_recovery_index: None,
    };
    let drawdown = pre - trough;
    if !(drawdown > 0.0) {
        return Ok(profile);
    }
    let after =
        |pred: &dyn Fn(f64) -> bool| (trough_index + 1..path.len()).find(|&t| pred(path[t]));
    profile.partial_recovery_index = after(&|v| v - trough >= thresholds.min_recovery * drawdown);
    profile.full_recovery_index = after(&|v| v >= thresholds.full_recovery * pre);
    let Some(partial) = profile.partial_recovery_index else {
        profile.shape = RecoveryShape::L;
        return Ok(profile);
    };
    let band = trough + thresholds.trough_eps * drawdown;
    profile.dwell = (end..partial).filter(|&t| path[t] <= band).count();
    profile.shape = if profile.dwell >= thresholds.u_dwell {
        RecoveryShape::U
    } else {
        let horizon = profile.full_recovery_index.unwrap_or(path.len()) as f64 - end as f64;
        if horizon >= thresholds.swoosh_factor * len as f64 {
            RecoveryShape::Swoosh
        } else {
            RecoveryShape::V
        }
    };
    Ok(profile)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn seg(kind: RegimeKind, length: usize, lambda: f64) -> RegimeSegment {
        RegimeSegment::new(kind, length, lambda).unwrap()
    }

    #[test]
    fn normalize_examples() {
        assert_eq!(normalize_flow(&[1.0]).unwrap(), vec![1.0]);
        assert_eq!(normalize_flow(&[-3.0]).unwrap(), vec![-1.0]);
        assert_eq!(
            normalize_flow(&[2.0, -4.0, 1.0]).unwrap(),
            vec![0.5, -1.0, 0.25]
        );
        assert!(matches!(
            normalize_flow(&[0.0, 0.0]),
            Err(Error::AllZeroFlow)
        ));
        assert!(matches!(normalize_flow(&[]), Err(Error::EmptySeries)));
    }

    #[test]
    fn antifragility_examples() {
        let f = |a, l, e| CompanyFinancials {
            current_assets: a,
            current_liabilities: l,
            operating_expenses: e,
        };
        assert_eq!(antifragility(&f(5.0, 5.0, 2.0)).unwrap().value(), 0.0);
        assert_eq!(antifragility(&f(10.0, 4.0, 3.0)).unwrap().value(), 2.0);
        assert!(matches!(
            antifragility(&f(1.0, 0.0, 0.0)),
            Err(Error::NonPositiveExpenses(_))
        ));
        assert!(antifragility(&f(1.0, 0.0, -1.0)).is_err());
    }

    #[test]
    fn sector_mean() {
        let phis = [Antifragility(1.0), Antifragility(2.0), Antifragility(3.0)];
        assert_eq!(sector_antifragility(&phis).unwrap().value(), 2.0);
        assert_eq!(
            sector_antifragility(&[Antifragility(0.45)])
                .unwrap()
                .value(),
            0.45
        );
        assert!(matches!(sector_antifragility(&[]), Err(Error::EmptySeries)));
    }

    #[test]
    fn shock_step_by_hand() {
        let schedule = RegimeSchedule::new(vec![seg(RegimeKind::Shock, 1, 0.4)]);
        let path = simulate(0.5, &[-1.0], &schedule, Antifragility(1.3)).unwrap();
        assert_relative_eq!(path[1], 0.3, epsilon = 1e-15);
    }

    #[test]
    fn zero_flow_is_flat() {
        let schedule = RegimeSchedule::new(vec![
            seg(RegimeKind::Normal, 3, 0.3),
            seg(RegimeKind::Shock, 2, 0.4),
            seg(RegimeKind::Recovery, 4, 0.6),
        ]);
        let path = simulate(2.0, &[0.0; 9], &schedule, Antifragility(0.9)).unwrap();
        assert_eq!(path, vec![2.0; 10]);
    }

    #[test]
    fn neutral_segment_is_flat() {
        let neutral =
            RegimeSegment::with_sentiment(RegimeKind::Recovery, 3, 0.6, Sentiment::Neutral)
                .unwrap();
        let schedule = RegimeSchedule::new(vec![neutral]);
        let path = simulate(1.0, &[0.7, -0.9, 0.3], &schedule, Antifragility(1.1)).unwrap();
        assert_eq!(path, vec![1.0; 4]);
    }

    #[test]
    fn guards() {
        let schedule = RegimeSchedule::new(vec![seg(RegimeKind::Normal, 2, 0.6)]);
        assert!(matches!(
            simulate(1.0, &[0.1], &schedule, Antifragility(1.0)),
            Err(Error::LengthMismatch { .. })
        ));
        assert!(matches!(
            simulate(1.0, &[0.1, 1.0], &schedule, Antifragility(1.8)),
            Err(Error::BlowupRisk { step: 1, .. })
        ));
        assert!(simulate(0.0, &[0.1, 0.1], &schedule, Antifragility(1.0)).is_err());
        assert!(RegimeSegment::new(RegimeKind::Normal, 1, 0.0).is_err());
        assert!(RegimeSegment::new(RegimeKind::Normal, 1, 1.5).is_err());
    }

    #[test]
    fn default_sentiments() {
        assert_eq!(
            RegimeKind::NegativeSentiment.default_sentiment(),
            Sentiment::Negative
        );
        for k in [
            RegimeKind::Normal,
            RegimeKind::Shock,
            RegimeKind::Recovery,
            RegimeKind::PostRecovery,
        ] {
            assert_eq!(k.default_sentiment(), Sentiment::Positive);
        }
    }

    #[test]
    fn flow_join_keeps_sample_normalization() {
        let d = |day| NaiveDate::from_ymd_opt(2020, 3, day).unwrap();
        let flows =
            FlowSeries::from_raw(vec![d(2), d(3), d(4), d(5)], vec![1.0, -4.0, 2.0, 0.5]).unwrap();
        let (dates, psi) = flows.inner_join(&[d(3), d(5), d(6)]);
        assert_eq!(dates, vec![d(3), d(5)]);
        assert_eq!(psi, vec![-1.0, 0.125]);
    }

    fn shock_schedule() -> RegimeSchedule {
        RegimeSchedule::new(vec![
            seg(RegimeKind::Normal, 5, 0.3),
            seg(RegimeKind::Shock, 10, 0.4),
            seg(RegimeKind::NegativeSentiment, 40, 0.2),
            seg(RegimeKind::Recovery, 60, 0.6),
        ])
    }

    #[test]
    fn classify_l_when_flat_after_crash() {
        let schedule = shock_schedule();
        let mut path = vec![1.0; 6];
        path.extend((1..=10).map(|i| 1.0 - 0.05 * i as f64));
        path.extend(std::iter::repeat_n(0.5, 100));
        let profile = classify_recovery(&path, &schedule, &ShapeThresholds::default()).unwrap();
        assert_eq!(profile.shape, RecoveryShape::L);
    }

    #[test]
    fn classify_u_and_swoosh_and_v() {
        let schedule = shock_schedule();
        let crash: Vec<f64> = (0..=15)
            .map(|i| {
                if i <= 5 {
                    1.0
                } else {
                    1.0 - 0.05 * (i - 5) as f64
                }
            })
            .collect();
        // Long flat bottom then quick rise.
        let mut u = crash.clone();
        u.extend(std::iter::repeat_n(0.5, 40));
        u.extend((1..=60).map(|i| (0.5 + 0.05 * i as f64).min(1.0)));
        // Slow rise straight away.
        let mut swoosh = crash.clone();
        swoosh.extend((1..=100).map(|i| 0.5 + 0.005 * i as f64));
        // Fast rebound.
        let mut v = crash;
        v.extend((1..=100).map(|i| (0.5 + 0.1 * i as f64).min(1.0)));
        let th = ShapeThresholds::default();
        assert_eq!(
            classify_recovery(&u, &schedule, &th).unwrap().shape,
            RecoveryShape::U
        );
        assert_eq!(
            classify_recovery(&swoosh, &schedule, &th).unwrap().shape,
            RecoveryShape::Swoosh
        );
        assert_eq!(
            classify_recovery(&v, &schedule, &th).unwrap().shape,
            RecoveryShape::V
        );
    }

    #[test]
    fn classify_needs_shock_and_drop() {
        let schedule = RegimeSchedule::new(vec![seg(RegimeKind::Normal, 3, 0.3)]);
        assert!(matches!(
            classify_recovery(&[1.0; 4], &schedule, &ShapeThresholds::default()),
            Err(Error::NoShockSegment)
        ));
        let schedule = shock_schedule();
        let rising: Vec<f64> = (0..=115).map(|i| 1.0 + i as f64).collect();
        assert_eq!(
            classify_recovery(&rising, &schedule, &ShapeThresholds::default())
                .unwrap()
                .shape,
            RecoveryShape::Undetermined
        );
    }

    fn mixed_schedule(n: usize) -> RegimeSchedule {
        let a = n / 4;
        RegimeSchedule::new(vec![
            seg(RegimeKind::Normal, a, 0.3),
            seg(RegimeKind::Shock, a, 0.4),
            seg(RegimeKind::NegativeSentiment, a, 0.2),
            seg(RegimeKind::Recovery, n - 3 * a, 0.6),
        ])
    }

    proptest! {
        #[test]
        fn sign_coherence(psi in 0.01f64..1.0, phi in 0.01f64..1.5, lambda in 0.05f64..0.6) {
            let up = RegimeSchedule::new(vec![seg(RegimeKind::Recovery, 1, lambda)]);
            let down = RegimeSchedule::new(vec![
                RegimeSegment::with_sentiment(RegimeKind::Recovery, 1, lambda, Sentiment::Negative).unwrap(),
            ]);
            let a = simulate(1.0, &[psi], &up, Antifragility(phi)).unwrap();
            let b = simulate(1.0, &[psi], &down, Antifragility(phi)).unwrap();
            prop_assert!(a[1] > 1.0);
            prop_assert!(b[1] < 1.0);
        }

        #[test]
        fn shock_ignores_phi_and_theta(
            psi in prop::collection::vec(-1.0f64..1.0, 30),
            phi_a in -1.5f64..1.5,
            phi_b in -1.5f64..1.5,
        ) {
            let a = RegimeSchedule::new(vec![
                seg(RegimeKind::Shock, 10, 0.4),
                seg(RegimeKind::Recovery, 20, 0.5),
            ]);
            let b = RegimeSchedule::new(vec![
                seg(RegimeKind::Shock, 10, 0.4),
                RegimeSegment::with_sentiment(RegimeKind::Recovery, 20, 0.5, Sentiment::Negative).unwrap(),
            ]);
            let pa = simulate(1.0, &psi, &a, Antifragility(phi_a)).unwrap();
            let pb = simulate(1.0, &psi, &b, Antifragility(phi_b)).unwrap();
            prop_assert_eq!(&pa[..=10], &pb[..=10]);
        }

        #[test]
        fn scale_equivariance(
            psi in prop::collection::vec(-1.0f64..1.0, 40),
            c in 0.01f64..100.0,
        ) {
            let schedule = mixed_schedule(40);
            let a = simulate(0.5, &psi, &schedule, Antifragility(0.9)).unwrap();
            let b = simulate(0.5 * c, &psi, &schedule, Antifragility(0.9)).unwrap();
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x * c - y).abs() <= 1e-12 * y.abs());
            }
        }

        #[test]
        fn normalize_is_scale_free(
            raw in prop::collection::vec(-1e6f64..1e6, 1..50),
            c in 1e-3f64..1e3,
        ) {
            prop_assume!(raw.iter().any(|v| *v != 0.0));
            let a = normalize_flow(&raw).unwrap();
            let scaled: Vec<f64> = raw.iter().map(|v| v * c).collect();
            let b = normalize_flow(&scaled).unwrap();
            prop_assert!(a.iter().all(|v| v.abs() <= 1.0));
            prop_assert!(a.iter().any(|v| v.abs() == 1.0));
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x - y).abs() <= 1e-12);
            }
        }

        #[test]
        fn terminal_price_monotone_in_phi_for_nonnegative_flow(
            psi in prop::collection::vec(0.0f64..1.0, 20),
            phi_lo in 0.0f64..0.8,
            dphi in 0.0f64..0.5,
        ) {
            let schedule = RegimeSchedule::new(vec![seg(RegimeKind::Recovery, 20, 0.6)]);
            let lo = simulate(1.0, &psi, &schedule, Antifragility(phi_lo)).unwrap();
            let hi = simulate(1.0, &psi, &schedule, Antifragility(phi_lo + dphi)).unwrap();
            prop_assert!(hi[20] >= lo[20]);
        }
    }
}
