//! Deterministic surrogate market data for the bundled case studies.
//!
//! Index levels follow hand-picked anchor levels of the four sectoral indices
//! and the broad market between July 2019 and May 2021, log-interpolated over
//! an exchange-style trading calendar, with AR(1) log noise whose volatility
//! rises around the crash. Institutional flows are drawn with a fixed
//! contemporaneous correlation to the broad-market return. None of this is
//! market data; it only has the right calendar, scale and gross shape.

use std::path::Path;

use chrono::{Datelike, NaiveDate, Weekday};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::Result;
use crate::io::data::{
    flows_csv, prices_csv, sector_flows_csv, write_file, Cadence, FlowTable, SectorFlows,
};
use crate::model::PriceSeries;
use crate::synthflow::derive_seed;

/// Base seed of every fixture stream.
pub const FIXTURE_SEED: u64 = 20_200_302;

/// Correlation between daily net institutional flow and the market return.
pub const FLOW_RETURN_CORRELATION: f64 = 0.5;

/// Scale of the daily net flow, in crore.
const FLOW_SCALE: f64 = 1800.0;
const AR_COEFF: f64 = 0.85;

const FIRST_DAY: (i32, u32, u32) = (2019, 7, 1);
const LAST_DAY: (i32, u32, u32) = (2021, 5, 31);

const HOLIDAYS: [&str; 29] = [
    "2019-08-12",
    "2019-08-15",
    "2019-09-02",
    "2019-09-10",
    "2019-10-02",
    "2019-10-08",
    "2019-10-21",
    "2019-10-28",
    "2019-11-12",
    "2019-12-25",
    "2020-02-21",
    "2020-03-10",
    "2020-04-02",
    "2020-04-06",
    "2020-04-10",
    "2020-04-14",
    "2020-05-01",
    "2020-05-25",
    "2020-10-02",
    "2020-11-16",
    "2020-11-30",
    "2020-12-25",
    "2021-01-26",
    "2021-03-11",
    "2021-03-29",
    "2021-04-02",
    "2021-04-14",
    "2021-04-21",
    "2021-05-13",
];

/// Price file names, by scenario id.
pub const PRICE_FILES: [(&str, &str); 4] = [
    ("bank", "nifty_bank.csv"),
    ("financial", "nifty_financial.csv"),
    ("realty", "nifty_realty.csv"),
    ("it", "nifty_it.csv"),
];
pub const FLOW_FILE: &str = "fii_dii_flows.csv";
pub const SECTOR_FLOW_FILE: &str = "sector_flows.csv";

fn date(s: &str) -> NaiveDate {
    NaiveDate::parse_from_str(s, "%Y-%m-%d").expect("literal date")
}

/// Weekdays from July 2019 to May 2021 less exchange holidays.
pub fn trading_calendar() -> Vec<NaiveDate> {
    let holidays: Vec<NaiveDate> = HOLIDAYS.iter().map(|s| date(s)).collect();
    let first = NaiveDate::from_ymd_opt(FIRST_DAY.0, FIRST_DAY.1, FIRST_DAY.2).expect("date");
    let last = NaiveDate::from_ymd_opt(LAST_DAY.0, LAST_DAY.1, LAST_DAY.2).expect("date");
    first
        .iter_days()
        .take_while(|d| *d <= last)
        .filter(|d| !matches!(d.weekday(), Weekday::Sat | Weekday::Sun))
        .filter(|d| !holidays.contains(d))
        .collect()
}

type Anchors = &'static [(&'static str, f64)];

const NIFTY_50: Anchors = &[
    ("2019-07-01", 11_850.0),
    ("2019-08-22", 10_750.0),
    ("2019-09-30", 11_470.0),
    ("2019-12-31", 12_170.0),
    ("2020-01-20", 12_350.0),
    ("2020-02-20", 12_080.0),
    ("2020-03-23", 7_610.0),
    ("2020-04-30", 9_860.0),
    ("2020-05-22", 9_040.0),
    ("2020-06-30", 10_300.0),
    ("2020-08-31", 11_390.0),
    ("2020-09-24", 10_800.0),
    ("2020-10-30", 11_640.0),
    ("2020-11-30", 12_970.0),
    ("2020-12-31", 13_980.0),
    ("2021-01-29", 13_630.0),
    ("2021-02-15", 15_310.0),
    ("2021-03-31", 14_690.0),
    ("2021-04-22", 14_400.0),
    ("2021-05-31", 15_580.0),
];

const NIFTY_BANK: Anchors = &[
    ("2019-07-01", 31_000.0),
    ("2019-08-22", 27_500.0),
    ("2019-09-30", 29_100.0),
    ("2019-12-31", 32_100.0),
    ("2020-01-20", 31_600.0),
    ("2020-02-20", 30_200.0),
    ("2020-03-24", 16_900.0),
    ("2020-04-30", 19_800.0),
    ("2020-05-22", 17_300.0),
    ("2020-06-30", 21_400.0),
    ("2020-07-31", 21_600.0),
    ("2020-08-31", 23_800.0),
    ("2020-09-24", 21_000.0),
    ("2020-10-30", 23_900.0),
    ("2020-11-30", 29_600.0),
    ("2020-12-31", 31_260.0),
    ("2021-01-29", 30_560.0),
    ("2021-02-15", 37_300.0),
    ("2021-03-31", 33_300.0),
    ("2021-04-22", 31_800.0),
    ("2021-05-31", 35_500.0),
];

const NIFTY_FINANCIAL: Anchors = &[
    ("2019-07-01", 13_600.0),
    ("2019-08-22", 12_300.0),
    ("2019-09-30", 13_200.0),
    ("2019-12-31", 14_700.0),
    ("2020-01-20", 14_600.0),
    ("2020-02-20", 14_100.0),
    ("2020-03-24", 8_200.0),
    ("2020-04-30", 9_900.0),
    ("2020-05-22", 8_750.0),
    ("2020-06-30", 10_500.0),
    ("2020-07-31", 10_650.0),
    ("2020-08-31", 11_800.0),
    ("2020-09-24", 10_900.0),
    ("2020-10-30", 12_000.0),
    ("2020-11-30", 14_300.0),
    ("2020-12-31", 15_300.0),
    ("2021-01-29", 14_700.0),
    ("2021-02-15", 17_200.0),
    ("2021-03-31", 15_900.0),
    ("2021-04-22", 15_300.0),
    ("2021-05-31", 16_900.0),
];

const NIFTY_REALTY: Anchors = &[
    ("2019-07-01", 300.0),
    ("2019-08-22", 255.0),
    ("2019-09-30", 270.0),
    ("2019-12-31", 290.0),
    ("2020-01-20", 335.0),
    ("2020-02-20", 312.0),
    ("2020-03-24", 166.0),
    ("2020-04-30", 190.0),
    ("2020-05-22", 172.0),
    ("2020-06-30", 195.0),
    ("2020-07-31", 188.0),
    ("2020-08-31", 205.0),
    ("2020-09-24", 192.0),
    ("2020-10-30", 228.0),
    ("2020-11-30", 280.0),
    ("2020-12-31", 320.0),
    ("2021-01-29", 310.0),
    ("2021-02-15", 345.0),
    ("2021-03-31", 352.0),
    ("2021-04-22", 330.0),
    ("2021-05-31", 380.0),
];

const NIFTY_IT: Anchors = &[
    ("2019-07-01", 15_800.0),
    ("2019-08-22", 15_600.0),
    ("2019-09-30", 15_300.0),
    ("2019-12-31", 15_700.0),
    ("2020-01-20", 16_500.0),
    ("2020-02-20", 16_100.0),
    ("2020-03-24", 11_800.0),
    ("2020-04-30", 13_300.0),
    ("2020-05-22", 13_200.0),
    ("2020-06-30", 14_600.0),
    ("2020-07-31", 17_100.0),
    ("2020-08-31", 18_300.0),
    ("2020-09-24", 19_500.0),
    ("2020-10-30", 20_900.0),
    ("2020-11-30", 22_100.0),
    ("2020-12-31", 24_300.0),
    ("2021-01-29", 25_100.0),
    ("2021-02-15", 26_600.0),
    ("2021-03-31", 26_400.0),
    ("2021-04-22", 26_900.0),
    ("2021-05-31", 27_500.0),
];

/// Daily log-noise standard deviation on `d`.
fn volatility(d: NaiveDate) -> f64 {
    if d >= date("2020-03-01") && d < date("2020-05-01") {
        0.025
    } else if d >= date("2020-05-01") && d < date("2020-07-01") {
        0.012
    } else {
        0.007
    }
}

/// Log-linear interpolation between anchors over trading-day offsets, times
/// `exp` of a mean-reverting noise term.
fn anchored_path(calendar: &[NaiveDate], anchors: Anchors, key: &str) -> Vec<f64> {
    let knots: Vec<(f64, f64)> = anchors
        .iter()
        .map(|(d, v)| (calendar.partition_point(|c| *c < date(d)) as f64, v.ln()))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(FIXTURE_SEED, key));
    let mut noise = 0.0;
    calendar
        .iter()
        .enumerate()
        .map(|(t, d)| {
            let t = t as f64;
            let k = knots
                .partition_point(|(x, _)| *x <= t)
                .clamp(1, knots.len() - 1);
            let ((x0, y0), (x1, y1)) = (knots[k - 1], knots[k]);
            let w = if x1 > x0 {
                ((t - x0) / (x1 - x0)).clamp(0.0, 1.0)
            } else {
                1.0
            };
            let eps: f64 = StandardNormal.sample(&mut rng);
            noise = AR_COEFF * noise + volatility(*d) * eps;
            round_to((y0 + w * (y1 - y0) + noise).exp(), 2)
        })
        .collect()
}

fn round_to(v: f64, digits: i32) -> f64 {
    let s = 10f64.powi(digits);
    (v * s).round() / s
}

/// All fixture artifacts in memory.
#[derive(Debug, Clone, PartialEq)]
pub struct FixtureSet {
    pub prices: Vec<(&'static str, PriceSeries)>,
    pub flows: FlowTable,
    pub sector_flows: SectorFlows,
}

fn log_returns(levels: &[f64]) -> Vec<f64> {
    std::iter::once(0.0)
        .chain(levels.windows(2).map(|w| (w[1] / w[0]).ln()))
        .collect()
}

fn std_dev(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n).sqrt()
}

/// Builds every fixture series from the fixed seeds.
pub fn generate() -> Result<FixtureSet> {
    let calendar = trading_calendar();
    let market = anchored_path(&calendar, NIFTY_50, "nifty_50");
    let sectors = [
        ("bank", NIFTY_BANK),
        ("financial", NIFTY_FINANCIAL),
        ("realty", NIFTY_REALTY),
        ("it", NIFTY_IT),
    ];
    let mut prices = Vec::with_capacity(sectors.len());
    for (id, anchors) in sectors {
        let file = PRICE_FILES.iter().find(|(i, _)| *i == id).expect("file").1;
        let levels = anchored_path(&calendar, anchors, file);
        prices.push((file, PriceSeries::new(calendar.clone(), levels)?));
    }

    let r = log_returns(&market);
    let sr = std_dev(&r);
    let rho = FLOW_RETURN_CORRELATION;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(FIXTURE_SEED, FLOW_FILE));
    let mut flows = FlowTable {
        dates: calendar.clone(),
        fii_net: Vec::with_capacity(calendar.len()),
        dii_net: Vec::with_capacity(calendar.len()),
    };
    for &rt in &r {
        let e: f64 = StandardNormal.sample(&mut rng);
        let split: f64 = StandardNormal.sample(&mut rng);
        let net = FLOW_SCALE * (rho * rt / sr + (1.0 - rho * rho).sqrt() * e);
        // Domestic institutions absorb part of the foreign flow.
        let fii = round_to(1.5 * net + 0.5 * FLOW_SCALE * split, 2);
        flows.fii_net.push(fii);
        flows.dii_net.push(round_to(net - fii, 2));
    }

    let month_ends: Vec<usize> = (0..calendar.len())
        .filter(|&i| i + 1 == calendar.len() || calendar[i + 1].month() != calendar[i].month())
        .collect();
    let mut values: [Vec<f64>; 4] = Default::default();
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(FIXTURE_SEED, SECTOR_FLOW_FILE));
    for (col, (_, series)) in values.iter_mut().zip(&prices) {
        let v = series.values();
        let monthly: Vec<f64> = std::iter::once(0)
            .chain(month_ends.iter().copied())
            .collect::<Vec<_>>()
            .windows(2)
            .map(|w| (v[w[1]] / v[w[0]]).ln())
            .collect();
        let s = std_dev(&monthly);
        let raw: Vec<f64> = monthly
            .iter()
            .map(|m| {
                let e: f64 = StandardNormal.sample(&mut rng);
                0.7 * m / s + 0.3 * e
            })
            .collect();
        let scale = raw.iter().fold(0.0_f64, |a, x| a.max(x.abs()));
        *col = raw.iter().map(|x| round_to(x / scale, 4)).collect();
    }
    let sector_flows = SectorFlows {
        cadence: Cadence::Monthly,
        dates: month_ends.iter().map(|&i| calendar[i]).collect(),
        values,
    };
    Ok(FixtureSet {
        prices,
        flows,
        sector_flows,
    })
}

/// File name and canonical CSV text of every fixture.
pub fn render() -> Result<Vec<(String, String)>> {
    let set = generate()?;
    let mut out: Vec<(String, String)> = set
        .prices
        .iter()
        .map(|(name, s)| (name.to_string(), prices_csv(s)))
        .collect();
    out.push((FLOW_FILE.to_string(), flows_csv(&set.flows)));
    out.push((
        SECTOR_FLOW_FILE.to_string(),
        sector_flows_csv(&set.sector_flows),
    ));
    Ok(out)
}

/// Writes every fixture CSV into `dir`.
pub fn write_all(dir: &Path) -> Result<()> {
    for (name, text) in render()? {
        write_file(&dir.join(name), &text)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn calendar_shape() {
        let cal = trading_calendar();
        assert_eq!(cal.first(), Some(&date("2019-07-01")));
        assert_eq!(cal.last(), Some(&date("2021-05-31")));
        assert!(cal.windows(2).all(|w| w[0] < w[1]));
        assert!(!cal.contains(&date("2020-03-10")));
        assert!(!cal.contains(&date("2020-03-07")));
    }

    #[test]
    fn anchors_are_respected_up_to_noise() {
        let set = generate().unwrap();
        let cal = trading_calendar();
        let bank = &set.prices[0].1;
        let i = cal.partition_point(|d| *d < date("2020-03-24"));
        let ratio = bank.values()[i] / 16_900.0;
        assert!((0.85..1.15).contains(&ratio), "{ratio}");
    }

    #[test]
    fn generation_is_deterministic() {
        assert_eq!(render().unwrap(), render().unwrap());
    }

    #[test]
    fn flows_track_the_market() {
        let set = generate().unwrap();
        let net: Vec<f64> = set
            .flows
            .fii_net
            .iter()
            .zip(&set.flows.dii_net)
            .map(|(a, b)| a + b)
            .collect();
        let cal = trading_calendar();
        let market = anchored_path(&cal, NIFTY_50, "nifty_50");
        let r = log_returns(&market);
        let c = crate::metrics::pearson(&net, &r).unwrap();
        assert!((c - FLOW_RETURN_CORRELATION).abs() < 0.1, "{c}");
    }
}
