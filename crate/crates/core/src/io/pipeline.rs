//! End-to-end runs: load, simulate, decompose, test, correlate, and write
//! the artifact bundle. Every error is tagged with the stage that raised it.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::emd::{ImfSet, SiftConfig};
use crate::error::{Error, Result, StageExt};
use crate::hilbert::{mean_timescale, TimeScale};
use crate::io::config::{AnalysisToggles, ExperimentConfig, JoinReport, ResolvedRun};
use crate::io::data::write_file;
use crate::io::svg::{render, Panel, Series};
use crate::metrics::{correlate, dominant_imf, CorrelationResult};
use crate::model::{classify_recovery, simulate, RecoveryProfile, RegimeSchedule};
use crate::sst::SstReport;
use crate::synthflow::{build_sweep, Experiment};

/// Hilbert-Huang reading of one price series.
#[derive(Debug, Clone, PartialEq)]
pub struct Analysis {
    /// IMFs of the standardized series.
    pub imfs: ImfSet,
    pub mean: f64,
    pub sd: f64,
    pub sst: Option<SstReport>,
    /// Per IMF; `None` where the IMF does not oscillate.
    pub timescales: Vec<Option<TimeScale>>,
    /// Per IMF, against the series itself.
    pub correlations: Vec<Option<CorrelationResult>>,
    pub dominant: Option<DominantReading>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DominantReading {
    pub index: usize,
    pub nu: f64,
    pub tau: Option<f64>,
    /// Whether it is also the slowest significant IMF.
    pub is_last_significant: bool,
}

impl Analysis {
    /// IMFs and residue back in the units of the input series.
    pub fn imfs_in_units(&self) -> ImfSet {
        let scaled = self.imfs.scaled(self.sd);
        let residue = scaled.residue().iter().map(|r| r + self.mean).collect();
        ImfSet::new(scaled.imfs().to_vec(), residue)
    }
}

/// Decomposes `series` and runs the enabled analyses.
pub fn analyze(series: &[f64], toggles: &AnalysisToggles, confidence: f64) -> Result<Analysis> {
    let sift_cfg = SiftConfig::default();
    let (z, mean, sd) = crate::sst::standardize(series).stage("emd")?;
    let imfs = crate::emd::sift(&z, &sift_cfg).stage("emd")?;
    let sst = if toggles.sst {
        Some(crate::sst::classify_significance(&imfs, z.len(), confidence).stage("sst")?)
    } else {
        None
    };
    let timescales = if toggles.timescale {
        imfs.imfs()
            .iter()
            .map(|imf| match mean_timescale(&imf.values) {
                Ok(ts) => Ok(Some(ts)),
                Err(Error::NonOscillatory) => Ok(None),
                Err(e) => Err(e),
            })
            .collect::<Result<Vec<_>>>()
            .stage("timescale")?
    } else {
        Vec::new()
    };
    let correlations = if toggles.correlation {
        imfs.imfs()
            .iter()
            .map(|imf| match correlate(series, &imf.values) {
                Ok(c) => Ok(Some(c)),
                Err(Error::ConstantInput) => Ok(None),
                Err(e) => Err(e),
            })
            .collect::<Result<Vec<_>>>()
            .stage("correlate")?
    } else {
        Vec::new()
    };
    let dominant = match (&sst, toggles.correlation) {
        (Some(report), true) => match dominant_imf(series, &imfs, report) {
            Ok(d) => {
                let last = report.significant_indices().last().copied();
                Some(DominantReading {
                    index: d.index,
                    nu: d.nu,
                    tau: timescales
                        .get(d.index - 1)
                        .and_then(|t| t.as_ref())
                        .map(|t| t.tau),
                    is_last_significant: last == Some(d.index),
                })
            }
            Err(Error::NoSignificantImf) => None,
            Err(e) => return Err(e).stage("correlate"),
        },
        _ => None,
    };
    Ok(Analysis {
        imfs,
        mean,
        sd,
        sst,
        timescales,
        correlations,
        dominant,
    })
}

/// What a run produced.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub name: String,
    pub seed: u64,
    pub config_hash: String,
    /// File name and SHA-256 of each artifact, in write order.
    pub outputs: Vec<(String, String)>,
    pub simulated: Vec<f64>,
    pub original: Vec<f64>,
    pub schedule: Option<RegimeSchedule>,
    pub join: Option<JoinReport>,
    pub recovery: Option<RecoveryProfile>,
    /// Original against simulated.
    pub fit: Option<CorrelationResult>,
    pub analysis: Option<Analysis>,
    pub sweep: Vec<SweepSummaryRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSummaryRow {
    pub value: f64,
    pub mean_terminal: f64,
    pub median_terminal: f64,
    pub median_path_shape: String,
    pub median_path: Vec<f64>,
}

/// Collects artifacts, writing them to `dir` when one is set.
struct Bundle {
    dir: Option<PathBuf>,
    outputs: Vec<(String, String)>,
}

impl Bundle {
    fn new(dir: Option<&Path>) -> Self {
        Self {
            dir: dir.map(Path::to_path_buf),
            outputs: Vec::new(),
        }
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        if let Some(dir) = &self.dir {
            write_file(&dir.join(name), contents).stage("write")?;
        }
        self.outputs.push((
            name.to_string(),
            hex::encode(Sha256::digest(contents.as_bytes())),
        ));
        Ok(())
    }
}

/// Output directory: `out` if given, else the config's `output`, else `out/<name>`.
pub fn output_dir(config: &ExperimentConfig, out: Option<&Path>) -> PathBuf {
    match (out, &config.output) {
        (Some(o), _) => o.to_path_buf(),
        (None, Some(o)) if o.is_absolute() => o.clone(),
        (None, Some(o)) => config.base_dir.join(o),
        (None, None) => PathBuf::from("out").join(&config.name),
    }
}

/// Runs `config` and writes its artifacts into `out`.
pub fn run_experiment(config: &ExperimentConfig, out: &Path) -> Result<RunSummary> {
    execute(config, Some(out))
}

/// Runs `config` without touching the file system; artifact hashes are still
/// recorded.
pub fn evaluate(config: &ExperimentConfig) -> Result<RunSummary> {
    execute(config, None)
}

/// Writes the synthetic fund-flow series of `config` into `out`: `psi.csv`
/// for a single run, one `psi_<axis>_<value>.csv` per grid value (base seed)
/// for a sweep. Returns the written file names.
pub fn write_synthetic_flows(config: &ExperimentConfig, out: &Path) -> Result<Vec<String>> {
    if !config.flow.synthetic {
        return Err(Error::Config(
            "synthetic flows need `flow.synthetic = true`".into(),
        ))
        .stage("synth");
    }
    let mut files = Vec::new();
    let mut emit = |name: String, psi: &[f64], schedule: &RegimeSchedule| -> Result<()> {
        let mut csv = String::from("step,regime,psi\n");
        for ((t, v), seg) in psi.iter().enumerate().zip(schedule.steps()) {
            let _ = writeln!(csv, "{t},{},{v}", seg.kind.as_str());
        }
        write_file(&out.join(&name), &csv).stage("write")?;
        files.push(name);
        Ok(())
    };
    match config.sweep_grid() {
        Some(grid) => {
            let base = grid.seeds[0];
            for e in build_sweep(&grid)
                .stage("sweep")?
                .iter()
                .filter(|e| e.seed == base)
            {
                let run = e.run().stage("synth")?;
                emit(
                    format!("psi_{}_{}.csv", grid.axis.as_str(), e.value),
                    &run.psi,
                    &e.schedule,
                )?;
            }
        }
        None => {
            let run = config.resolve().stage("synth")?;
            emit("psi.csv".into(), &run.psi, &run.schedule)?;
        }
    }
    Ok(files)
}

fn execute(config: &ExperimentConfig, out: Option<&Path>) -> Result<RunSummary> {
    let hash = config.hash().stage("config")?;
    let mut bundle = Bundle::new(out);
    let mut summary = if config.sweep.is_some() {
        run_sweep(config, &mut bundle)?
    } else {
        run_single(config, &mut bundle)?
    };
    summary.config_hash = hash.clone();
    let mut manifest = String::new();
    let _ = writeln!(manifest, "name = {:?}", config.name);
    let _ = writeln!(manifest, "seed = {}", config.seed);
    let _ = writeln!(manifest, "config_sha256 = {hash:?}");
    let _ = writeln!(
        manifest,
        "crate = \"{} {}\"",
        env!("CARGO_PKG_NAME"),
        env!("CARGO_PKG_VERSION")
    );
    for (name, sha) in &bundle.outputs {
        let _ = writeln!(manifest, "\n[[outputs]]\nfile = {name:?}\nsha256 = {sha:?}");
    }
    bundle.write("manifest.toml", &manifest)?;
    summary.outputs = bundle.outputs;
    Ok(summary)
}

fn empty_summary(config: &ExperimentConfig) -> RunSummary {
    RunSummary {
        name: config.name.clone(),
        seed: config.seed,
        config_hash: String::new(),
        outputs: Vec::new(),
        simulated: Vec::new(),
        original: Vec::new(),
        schedule: None,
        join: None,
        recovery: None,
        fit: None,
        analysis: None,
        sweep: Vec::new(),
    }
}

fn fmt_opt<T: std::fmt::Display>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

fn step_label(run: &ResolvedRun, t: usize) -> String {
    run.dates
        .get(t)
        .map(|d| d.to_string())
        .unwrap_or_else(|| t.to_string())
}

fn regime_markers(schedule: &RegimeSchedule) -> Vec<(f64, String)> {
    let mut at = 0;
    let mut out = Vec::new();
    for seg in schedule.segments() {
        if seg.length > 0 {
            out.push((at as f64, seg.kind.as_str().to_string()));
        }
        at += seg.length;
    }
    out
}

fn run_single(config: &ExperimentConfig, bundle: &mut Bundle) -> Result<RunSummary> {
    let run = config.resolve().stage("load")?;
    let path = simulate(run.initial_price, &run.psi, &run.schedule, run.phi).stage("simulate")?;
    let recovery = classify_recovery(&path, &run.schedule, &config.thresholds).stage("classify")?;
    let mut summary = empty_summary(config);

    let mut csv = String::from(if run.dates.is_empty() {
        "step,original,simulated,psi,regime\n"
    } else {
        "date,original,simulated,psi,regime\n"
    });
    let kinds: Vec<&str> = run.schedule.steps().map(|s| s.kind.as_str()).collect();
    for (t, p) in path.iter().enumerate() {
        let _ = writeln!(
            csv,
            "{},{},{p},{},{}",
            step_label(&run, t),
            fmt_opt(run.original.get(t)),
            fmt_opt(run.psi.get(t)),
            kinds.get(t).copied().unwrap_or("")
        );
    }
    bundle.write("path.csv", &csv)?;

    let mut panel = Panel::new(
        format!("{}: phi = {}", config.name, run.phi.value()),
        "trading day",
        "price",
    );
    if run.has_original() {
        panel = panel.with(Series::indexed("original", &run.original));
    }
    panel = panel.with(Series::indexed("simulated", &path));
    for (x, label) in regime_markers(&run.schedule) {
        panel = panel.marker(x, label);
    }
    for a in &config.annotations {
        if let Some(i) = run.dates.iter().position(|d| *d >= a.date) {
            panel = panel.marker(i as f64, a.label.clone());
        }
    }
    bundle.write("overlay.svg", &render(&[panel]))?;

    let mut rec = String::from(
        "series,shape,shock_start,shock_end,pre_shock,trough,trough_index,dwell,partial_recovery_index,full_recovery_index\n",
    );
    let mut profiles = vec![("simulated", recovery.clone())];
    if run.has_original() {
        profiles.push((
            "original",
            classify_recovery(&run.original, &run.schedule, &config.thresholds)
                .stage("classify")?,
        ));
    }
    for (name, p) in &profiles {
        let _ = writeln!(
            rec,
            "{name},{},{},{},{},{},{},{},{},{}",
            p.shape,
            p.shock_start,
            p.shock_end,
            p.pre_shock,
            p.trough,
            p.trough_index,
            p.dwell,
            fmt_opt(p.partial_recovery_index),
            fmt_opt(p.full_recovery_index)
        );
    }
    bundle.write("recovery.csv", &rec)?;

    if run.has_original() && config.analysis.correlation {
        let fit = correlate(&run.original, &path).stage("correlate")?;
        let mut t1 = String::from("series,n,nu,p,log10_p\n");
        let _ = writeln!(
            t1,
            "{},{},{:.6},{},{:.4}",
            config.name,
            fit.n,
            fit.nu,
            fit.p,
            fit.p.log10()
        );
        bundle.write("correlation.csv", &t1)?;
        summary.fit = Some(fit);
    }

    if config.analysis.emd {
        let target: &[f64] = if run.has_original() {
            &run.original
        } else {
            &path
        };
        let analysis = analyze(target, &config.analysis, config.confidence)?;
        write_analysis(bundle, &config.name, &run, &analysis)?;
        summary.analysis = Some(analysis);
    }

    summary.simulated = path;
    summary.original = run.original.clone();
    summary.schedule = Some(run.schedule.clone());
    summary.join = run.join;
    summary.recovery = Some(recovery);
    Ok(summary)
}

fn write_analysis(bundle: &mut Bundle, name: &str, run: &ResolvedRun, a: &Analysis) -> Result<()> {
    let units = a.imfs_in_units();
    let k = units.len();
    let mut csv = String::from(if run.dates.is_empty() { "step" } else { "date" });
    for i in 1..=k {
        let _ = write!(csv, ",imf{i}");
    }
    csv.push_str(",residue\n");
    for t in 0..units.series_len() {
        csv.push_str(&step_label(run, t));
        for imf in units.imfs() {
            let _ = write!(csv, ",{}", imf.values[t]);
        }
        let _ = writeln!(csv, ",{}", units.residue()[t]);
    }
    bundle.write("imfs.csv", &csv)?;

    let mut panels: Vec<Panel> = units
        .imfs()
        .iter()
        .map(|imf| {
            Panel::new(format!("IMF {}", imf.index), "trading day", "")
                .with(Series::indexed("imf", &imf.values))
        })
        .collect();
    panels.push(
        Panel::new("residue", "trading day", "").with(Series::indexed("residue", units.residue())),
    );
    bundle.write("imfs.svg", &render(&panels))?;

    if let Some(sst) = &a.sst {
        let mut csv = String::from(
            "imf,energy,mean_period,ln_period,ln_energy,lower,upper,position,significant,excluded\n",
        );
        for (i, s) in sst.stats.iter().enumerate() {
            let (lo, hi) = crate::sst::spread_lines(&[s.x], sst.samples, sst.k);
            let _ = writeln!(
                csv,
                "{},{},{},{},{},{},{},{:?},{},{}",
                s.n,
                s.energy,
                s.mean_period,
                s.x,
                fmt_opt(s.y),
                lo[0],
                hi[0],
                sst.position[i],
                sst.significant[i],
                sst.excluded[i]
            );
        }
        bundle.write("sst.csv", &csv)?;
        let pts = |want: bool| -> Vec<(f64, f64)> {
            sst.stats
                .iter()
                .zip(&sst.significant)
                .filter(|(_, s)| **s == want)
                .filter_map(|(st, _)| st.y.map(|y| (st.x, y)))
                .collect()
        };
        let panel = Panel::new(
            format!("{name}: significance at {}", sst.confidence),
            "ln mean period",
            "ln energy density",
        )
        .with(Series::dots("significant", pts(true)))
        .with(Series::dots("not significant", pts(false)))
        .with(Series::line(
            "white noise",
            sst.spread.iter().map(|p| (p.x, -p.x)).collect(),
        ))
        .with(Series::dashed(
            "upper",
            sst.spread.iter().map(|p| (p.x, p.upper)).collect(),
        ))
        .with(Series::dashed(
            "lower",
            sst.spread.iter().map(|p| (p.x, p.lower)).collect(),
        ));
        bundle.write("sst.svg", &render(&[panel]))?;
    }

    if !a.timescales.is_empty() || !a.correlations.is_empty() {
        let mut csv = String::from("imf,tau,tau_maxima,nu,p,log10_p,significant,dominant\n");
        for (i, imf) in a.imfs.imfs().iter().enumerate() {
            let ts = a.timescales.get(i).and_then(|t| t.as_ref());
            let c = a.correlations.get(i).and_then(|c| c.as_ref());
            let sig = a.sst.as_ref().map(|s| s.significant[i]);
            let dom = a.dominant.map(|d| d.index == imf.index);
            let _ = writeln!(
                csv,
                "{},{},{},{},{},{},{},{}",
                imf.index,
                fmt_opt(ts.map(|t| format!("{:.3}", t.tau))),
                fmt_opt(ts.map(|t| format!("{:.3}", t.tau_maxima))),
                fmt_opt(c.map(|c| format!("{:.6}", c.nu))),
                fmt_opt(c.map(|c| c.p)),
                fmt_opt(c.map(|c| format!("{:.4}", c.p.log10()))),
                fmt_opt(sig),
                fmt_opt(dom)
            );
        }
        bundle.write("timescales.csv", &csv)?;
    }
    Ok(())
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Pointwise median across equally long paths.
pub fn median_path(paths: &[Vec<f64>]) -> Vec<f64> {
    let len = paths.iter().map(Vec::len).min().unwrap_or(0);
    (0..len)
        .map(|t| median(&mut paths.iter().map(|p| p[t]).collect::<Vec<_>>()))
        .collect()
}

/// Runs every experiment of a sweep in parallel; results keep input order.
pub fn run_all(experiments: &[Experiment]) -> Result<Vec<Vec<f64>>> {
    experiments
        .par_iter()
        .map(|e| e.run().map(|r| r.path))
        .collect()
}

fn run_sweep(config: &ExperimentConfig, bundle: &mut Bundle) -> Result<RunSummary> {
    let grid = config.sweep_grid().expect("sweep config");
    let experiments = build_sweep(&grid).stage("sweep")?;
    let paths = run_all(&experiments).stage("simulate")?;
    let mut groups: BTreeMap<usize, (f64, Vec<usize>)> = BTreeMap::new();
    for (i, e) in experiments.iter().enumerate() {
        let slot = grid
            .values
            .iter()
            .position(|v| *v == e.value)
            .expect("grid value");
        groups
            .entry(slot)
            .or_insert((e.value, Vec::new()))
            .1
            .push(i);
    }
    let axis = grid.axis.as_str();
    let mut panel = Panel::new(
        format!(
            "{}: {} sweep, median of {} seeds",
            config.name,
            axis,
            grid.seeds.len()
        ),
        "trading day",
        "price",
    );
    let mut rows = Vec::new();
    for (value, members) in groups.values() {
        let group: Vec<Vec<f64>> = members.iter().map(|&i| paths[i].clone()).collect();
        let med = median_path(&group);
        let first = &experiments[members[0]];
        let mut csv = String::from("step,price,median\n");
        for (t, m) in med.iter().enumerate() {
            let _ = writeln!(csv, "{t},{},{m}", group[0][t]);
        }
        bundle.write(&format!("path_{axis}_{value}.csv"), &csv)?;
        let shape = classify_recovery(&med, &first.schedule, &config.thresholds)
            .stage("classify")?
            .shape;
        let mut terminals: Vec<f64> = group
            .iter()
            .map(|p| *p.last().expect("non-empty"))
            .collect();
        let mean_terminal = terminals.iter().sum::<f64>() / terminals.len() as f64;
        panel = panel.with(Series::indexed(format!("{axis} = {value}"), &med));
        rows.push(SweepSummaryRow {
            value: *value,
            mean_terminal,
            median_terminal: median(&mut terminals),
            median_path_shape: shape.to_string(),
            median_path: med,
        });
    }
    bundle.write("overlay.svg", &render(&[panel]))?;
    let mut csv = format!("{axis},mean_terminal,median_terminal,median_path_shape\n");
    for r in &rows {
        let _ = writeln!(
            csv,
            "{},{},{},{}",
            r.value, r.mean_terminal, r.median_terminal, r.median_path_shape
        );
    }
    bundle.write("sweep_summary.csv", &csv)?;
    let mut summary = empty_summary(config);
    summary.sweep = rows;
    Ok(summary)
}
