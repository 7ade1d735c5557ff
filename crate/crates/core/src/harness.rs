//! Monte-Carlo experiment driver: configuration, frame-parallel runs,
//! CSV tables and paired receiver comparisons.

use std::collections::{BTreeMap, HashMap};
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Deserialize;
use statrs::distribution::{Binomial, DiscreteCDF};

use crate::channel::{
    frame_seed, noise_var_for_snr_db, real_taps, simulate_frame, ChannelSpec, Theta0Mode, PROAKIS_C,
};
use crate::error::{Error, Result};
use crate::gaussian::Tolerances;
use crate::obs::CircularMoment;
use crate::receiver::{receive, FrameSetup, ReceiverKind, ReceiverOptions};
use crate::tx::{CodeSpec, FrameLayout, Interleaver};

pub const RESULT_HEADER: [&str; 11] = [
    "receiver",
    "snr_db",
    "iteration",
    "n_frames",
    "n_bit_errors",
    "n_bits",
    "ber",
    "pn_mse_mean",
    "pn_mse_median",
    "wall_ms_per_frame",
    "seed",
];

pub const FRAME_HEADER: [&str; 7] = [
    "receiver",
    "snr_db",
    "iteration",
    "frame",
    "seed",
    "n_bit_errors",
    "pn_mse",
];

/// Optional overrides of [`Tolerances`], one flat key each.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default)]
pub struct ToleranceOverrides {
    pub vacuous_precision: Option<f64>,
    pub divide_slack: Option<f64>,
    pub delta_precision: Option<f64>,
    pub ep_variance_floor: Option<f64>,
    pub vacuous_variance: Option<f64>,
    pub pilot_variance: Option<f64>,
    pub curvature_eps: Option<f64>,
    pub singular_condition: Option<f64>,
}

impl ToleranceOverrides {
    pub fn apply(&self, mut t: Tolerances) -> Tolerances {
        let set = |dst: &mut f64, src: Option<f64>| {
            if let Some(v) = src {
                *dst = v;
            }
        };
        set(&mut t.vacuous_precision, self.vacuous_precision);
        set(&mut t.divide_slack, self.divide_slack);
        set(&mut t.delta_precision, self.delta_precision);
        set(&mut t.ep_variance_floor, self.ep_variance_floor);
        set(&mut t.vacuous_variance, self.vacuous_variance);
        set(&mut t.pilot_variance, self.pilot_variance);
        set(&mut t.curvature_eps, self.curvature_eps);
        set(&mut t.singular_condition, self.singular_condition);
        t
    }
}

/// Experiment configuration. Every key is optional in the config file.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub snr_db_grid: Vec<f64>,
    pub n_frames: usize,
    /// Rows are emitted for every iteration `1..=iters`.
    pub iters: usize,
    #[serde(alias = "receiver")]
    pub receivers: Vec<ReceiverKind>,
    pub pn_var: f64,
    /// Real channel taps, `h_0` first.
    pub taps: Vec<f64>,
    pub n_data_symbols: usize,
    pub pilot_period: usize,
    pub pilots_per_block: usize,
    pub master_seed: u64,
    pub interleaver_seed: u64,
    pub theta0: Theta0Mode,
    pub circular: CircularMoment,
    pub damping: f64,
    pub eq_inner_iters: usize,
    /// Measure wall time; when false the timing column is written as 0 so
    /// that repeated runs produce identical files.
    pub record_timing: bool,
    pub out: Option<PathBuf>,
    #[serde(flatten)]
    pub tolerances: ToleranceOverrides,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            snr_db_grid: (2..=10).map(|i| 2.0 * i as f64).collect(),
            n_frames: 1000,
            iters: 10,
            receivers: vec![
                ReceiverKind::BpMfEp,
                ReceiverKind::Eks,
                ReceiverKind::KnownPn,
            ],
            pn_var: 1e-4,
            taps: PROAKIS_C.to_vec(),
            n_data_symbols: 1024,
            pilot_period: 256,
            pilots_per_block: 5,
            master_seed: 0,
            interleaver_seed: 0,
            theta0: Theta0Mode::Zero,
            circular: CircularMoment::Taylor,
            damping: 1.0,
            eq_inner_iters: 1,
            record_timing: false,
            out: None,
            tolerances: ToleranceOverrides::default(),
        }
    }
}

/// Keys understood in a config file.
pub const CONFIG_KEYS: [&str; 26] = [
    "snr_db_grid",
    "n_frames",
    "iters",
    "receivers",
    "receiver",
    "pn_var",
    "taps",
    "n_data_symbols",
    "pilot_period",
    "pilots_per_block",
    "master_seed",
    "interleaver_seed",
    "theta0",
    "circular",
    "damping",
    "eq_inner_iters",
    "record_timing",
    "out",
    "vacuous_precision",
    "divide_slack",
    "delta_precision",
    "ep_variance_floor",
    "vacuous_variance",
    "pilot_variance",
    "curvature_eps",
    "singular_condition",
];

impl RunConfig {
    /// Parses a TOML config. Returns the config and the unknown keys, which
    /// are ignored.
    pub fn from_toml_str(text: &str) -> Result<(Self, Vec<String>)> {
        let table: toml::Table = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let unknown: Vec<String> = table
            .keys()
            .filter(|k| !CONFIG_KEYS.contains(&k.as_str()))
            .cloned()
            .collect();
        for key in &unknown {
            log::warn!("ignoring unknown config key `{key}`");
        }
        let config: RunConfig = table
            .try_into()
            .map_err(|e: toml::de::Error| Error::Parse(e.to_string()))?;
        config.validate()?;
        Ok((config, unknown))
    }

    pub fn from_file(path: &Path) -> Result<(Self, Vec<String>)> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.snr_db_grid.is_empty() {
            return Err(Error::config("snr_db_grid", "must not be empty"));
        }
        if self.snr_db_grid.iter().any(|s| !s.is_finite()) {
            return Err(Error::config("snr_db_grid", "values must be finite"));
        }
        if self.n_frames == 0 {
            return Err(Error::config("n_frames", "must be at least 1"));
        }
        if self.iters == 0 {
            return Err(Error::config("iters", "must be at least 1"));
        }
        if self.receivers.is_empty() {
            return Err(Error::config(
                "receivers",
                "must name at least one receiver",
            ));
        }
        if !(self.pn_var >= 0.0 && self.pn_var.is_finite()) {
            return Err(Error::config("pn_var", "must be finite and nonnegative"));
        }
        if self.taps.is_empty()
            || self.taps.iter().any(|t| !t.is_finite())
            || self.taps.iter().all(|&t| t == 0.0)
        {
            return Err(Error::config(
                "taps",
                "need at least one finite nonzero tap",
            ));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::config("damping", "must lie in (0, 1]"));
        }
        if self.eq_inner_iters == 0 {
            return Err(Error::config("eq_inner_iters", "must be at least 1"));
        }
        self.layout()
            .map_err(|e| Error::config("layout", e.to_string()))?
            .n_info_bits(&CodeSpec::default())
            .map_err(|e| Error::config("n_data_symbols", e.to_string()))?;
        Ok(())
    }

    pub fn layout(&self) -> Result<FrameLayout> {
        FrameLayout::new(
            self.n_data_symbols,
            self.pilot_period,
            self.pilots_per_block,
        )
    }

    pub fn receiver_options(&self) -> ReceiverOptions {
        ReceiverOptions {
            iters: self.iters,
            eq_inner_iters: self.eq_inner_iters,
            damping: self.damping,
            circular: self.circular,
            tol: self.tolerances.apply(Tolerances::default()),
            pin_phase: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub receiver: ReceiverKind,
    pub snr_db: f64,
    pub iteration: usize,
    pub n_frames: usize,
    pub n_bit_errors: u64,
    pub n_bits: u64,
    pub ber: f64,
    pub pn_mse_mean: f64,
    pub pn_mse_median: f64,
    pub wall_ms_per_frame: f64,
    pub seed: u64,
}

/// Per-frame outcome backing the paired statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameRecord {
    pub receiver: ReceiverKind,
    pub snr_db: f64,
    pub iteration: usize,
    pub frame: u64,
    pub seed: u64,
    pub n_bit_errors: u64,
    pub pn_mse: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExperimentResult {
    pub rows: Vec<ResultRow>,
    pub frames: Vec<FrameRecord>,
}

impl ExperimentResult {
    fn sort(&mut self) {
        self.rows.sort_by(|a, b| {
            a.receiver
                .cmp(&b.receiver)
                .then(a.snr_db.total_cmp(&b.snr_db))
                .then(a.iteration.cmp(&b.iteration))
        });
        self.frames.sort_by(|a, b| {
            a.receiver
                .cmp(&b.receiver)
                .then(a.snr_db.total_cmp(&b.snr_db))
                .then(a.iteration.cmp(&b.iteration))
                .then(a.frame.cmp(&b.frame))
        });
    }
}

fn worker_count() -> Option<usize> {
    std::env::var("PNLAB_THREADS")
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .filter(|&n| n > 0)
}

pub fn run_experiment(config: &RunConfig) -> Result<ExperimentResult> {
    run_experiment_with(config, |_| Ok(()))
}

/// Runs the experiment, calling `checkpoint` with everything finished so
/// far after each SNR point.
pub fn run_experiment_with<F>(config: &RunConfig, mut checkpoint: F) -> Result<ExperimentResult>
where
    F: FnMut(&ExperimentResult) -> Result<()>,
{
    config.validate()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = worker_count() {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::config("PNLAB_THREADS", e.to_string()))?;

    let layout = config.layout()?;
    let code = CodeSpec::default();
    let interleaver = Interleaver::new(layout.n_coded_bits(), config.interleaver_seed);
    let taps = real_taps(&config.taps);
    let opts = config.receiver_options();
    let iters = config.iters;

    let mut result = ExperimentResult::default();
    for &snr in &config.snr_db_grid {
        let nv = noise_var_for_snr_db(&taps, snr);
        let mut spec = ChannelSpec::new(taps.clone(), nv, config.pn_var)?;
        spec.theta0 = config.theta0;
        let setup = FrameSetup::new(
            layout.clone(),
            code.clone(),
            interleaver.clone(),
            taps.clone(),
            nv,
            config.pn_var,
        )?;

        // frame -> receiver -> per-iteration (errors, mse, micros)
        type Outcome = Vec<Vec<(u64, f64, u64)>>;
        let outcomes: Vec<Outcome> = pool.install(|| {
            (0..config.n_frames as u64)
                .into_par_iter()
                .map(|f| -> Result<Outcome> {
                    let seed = frame_seed(config.master_seed, f);
                    let truth = simulate_frame(&layout, &code, &interleaver, &spec, seed)
                        .map_err(|e| e.in_frame(f))?;
                    config
                        .receivers
                        .iter()
                        .map(|&kind| {
                            let out = receive(kind, &setup, &truth.y, &opts, Some(&truth))
                                .map_err(|e| e.in_frame(f))?;
                            Ok(out
                                .diagnostics
                                .iterations
                                .iter()
                                .map(|d| {
                                    (
                                        d.bit_errors.unwrap_or(0) as u64,
                                        d.pn_mse.unwrap_or(f64::NAN),
                                        d.elapsed_us,
                                    )
                                })
                                .collect())
                        })
                        .collect()
                })
                .collect::<Result<Vec<_>>>()
        })?;

        let n_bits_frame = setup.n_info() as u64;
        for (r, &kind) in config.receivers.iter().enumerate() {
            for it in 0..iters {
                let mut errors = 0u64;
                let mut mses = Vec::with_capacity(outcomes.len());
                let mut micros = 0u64;
                for (f, o) in outcomes.iter().enumerate() {
                    let (e, m, us) = o[r][it];
                    errors += e;
                    micros += us;
                    mses.push(m);
                    result.frames.push(FrameRecord {
                        receiver: kind,
                        snr_db: snr,
                        iteration: it + 1,
                        frame: f as u64,
                        seed: frame_seed(config.master_seed, f as u64),
                        n_bit_errors: e,
                        pn_mse: m,
                    });
                }
                let n_frames = outcomes.len();
                let n_bits = n_bits_frame * n_frames as u64;
                let wall = if config.record_timing {
                    (micros as f64 / 1e3 / n_frames as f64).max(f64::MIN_POSITIVE)
                } else {
                    0.0
                };
                result.rows.push(ResultRow {
                    receiver: kind,
                    snr_db: snr,
                    iteration: it + 1,
                    n_frames,
                    n_bit_errors: errors,
                    n_bits,
                    ber: errors as f64 / n_bits as f64,
                    pn_mse_mean: mses.iter().sum::<f64>() / n_frames as f64,
                    pn_mse_median: median(&mses),
                    wall_ms_per_frame: wall,
                    seed: config.master_seed,
                });
            }
        }
        result.sort();
        checkpoint(&result)?;
    }
    Ok(result)
}

pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Scientific notation with 17 significant digits, enough to round-trip.
pub fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn csv_writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w)
}

fn csv_err(e: csv::Error) -> Error {
    Error::Parse(e.to_string())
}

pub fn write_results<W: Write>(rows: &[ResultRow], w: W) -> Result<()> {
    let mut out = csv_writer(w);
    out.write_record(RESULT_HEADER).map_err(csv_err)?;
    for r in rows {
        out.write_record([
            r.receiver.name().to_string(),
            fmt_float(r.snr_db),
            r.iteration.to_string(),
            r.n_frames.to_string(),
            r.n_bit_errors.to_string(),
            r.n_bits.to_string(),
            fmt_float(r.ber),
            fmt_float(r.pn_mse_mean),
            fmt_float(r.pn_mse_median),
            fmt_float(r.wall_ms_per_frame),
            r.seed.to_string(),
        ])
        .map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_frames<W: Write>(frames: &[FrameRecord], w: W) -> Result<()> {
    let mut out = csv_writer(w);
    out.write_record(FRAME_HEADER).map_err(csv_err)?;
    for f in frames {
        out.write_record([
            f.receiver.name().to_string(),
            fmt_float(f.snr_db),
            f.iteration.to_string(),
            f.frame.to_string(),
            f.seed.to_string(),
            f.n_bit_errors.to_string(),
            fmt_float(f.pn_mse),
        ])
        .map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

/// Path of the per-frame table written next to a results file.
pub fn frames_path(results: &Path) -> PathBuf {
    let stem = results
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "results".into());
    results.with_file_name(format!("{stem}.frames.csv"))
}

/// Writes the results table and its per-frame sidecar.
pub fn write_experiment(result: &ExperimentResult, path: &Path) -> Result<()> {
    write_results(
        &result.rows,
        std::io::BufWriter::new(std::fs::File::create(path)?),
    )?;
    write_frames(
        &result.frames,
        std::io::BufWriter::new(std::fs::File::create(frames_path(path))?),
    )?;
    Ok(())
}

fn field<T: std::str::FromStr>(
    rec: &csv::StringRecord,
    idx: &HashMap<String, usize>,
    name: &str,
) -> Result<T> {
    let i = *idx
        .get(name)
        .ok_or_else(|| Error::Parse(format!("missing column `{name}`")))?;
    let raw = rec
        .get(i)
        .ok_or_else(|| Error::Parse(format!("short row, no `{name}`")))?;
    raw.trim()
        .parse()
        .map_err(|_| Error::Parse(format!("bad `{name}` value `{raw}`")))
}

fn read_table<R: Read>(r: R) -> Result<(HashMap<String, usize>, Vec<csv::StringRecord>)> {
    let mut rdr = csv::ReaderBuilder::new().from_reader(r);
    let idx = rdr
        .headers()
        .map_err(csv_err)?
        .iter()
        .enumerate()
        .map(|(i, h)| (h.to_string(), i))
        .collect();
    let recs = rdr
        .records()
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(csv_err)?;
    Ok((idx, recs))
}

pub fn read_results<R: Read>(r: R) -> Result<Vec<ResultRow>> {
    let (idx, recs) = read_table(r)?;
    recs.iter()
        .map(|rec| {
            Ok(ResultRow {
                receiver: field(rec, &idx, "receiver")?,
                snr_db: field(rec, &idx, "snr_db")?,
                iteration: field(rec, &idx, "iteration")?,
                n_frames: field(rec, &idx, "n_frames")?,
                n_bit_errors: field(rec, &idx, "n_bit_errors")?,
                n_bits: field(rec, &idx, "n_bits")?,
                ber: field(rec, &idx, "ber")?,
                pn_mse_mean: field(rec, &idx, "pn_mse_mean")?,
                pn_mse_median: field(rec, &idx, "pn_mse_median")?,
                wall_ms_per_frame: field(rec, &idx, "wall_ms_per_frame")?,
                seed: field(rec, &idx, "seed")?,
            })
        })
        .collect()
}

pub fn read_frames<R: Read>(r: R) -> Result<Vec<FrameRecord>> {
    let (idx, recs) = read_table(r)?;
    recs.iter()
        .map(|rec| {
            Ok(FrameRecord {
                receiver: field(rec, &idx, "receiver")?,
                snr_db: field(rec, &idx, "snr_db")?,
                iteration: field(rec, &idx, "iteration")?,
                frame: field(rec, &idx, "frame")?,
                seed: field(rec, &idx, "seed")?,
                n_bit_errors: field(rec, &idx, "n_bit_errors")?,
                pn_mse: field(rec, &idx, "pn_mse")?,
            })
        })
        .collect()
}

/// Two-sided exact sign test: `wins` against `losses`, ties dropped.
pub fn sign_test(wins: u64, losses: u64) -> f64 {
    let n = wins + losses;
    if n == 0 {
        return 1.0;
    }
    let k = wins.min(losses);
    let tail = Binomial::new(0.5, n).expect("valid binomial").cdf(k);
    (2.0 * tail).min(1.0)
}

fn ratio(num: f64, den: f64) -> f64 {
    if num == den {
        1.0
    } else {
        num / den
    }
}

/// One (snr, iteration) cell of a paired comparison. Ratios are
/// subject over baseline; "better" means strictly smaller.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub snr_db: f64,
    pub iteration: usize,
    pub n_frames: usize,
    pub mse_baseline: f64,
    pub mse_subject: f64,
    pub mse_ratio: f64,
    pub errors_baseline: f64,
    pub errors_subject: f64,
    pub errors_ratio: f64,
    pub mse_subject_better: u64,
    pub mse_baseline_better: u64,
    pub mse_sign_p: f64,
    pub errors_subject_better: u64,
    pub errors_baseline_better: u64,
    pub errors_sign_p: f64,
}

pub const COMPARISON_HEADER: [&str; 15] = [
    "snr_db",
    "iteration",
    "n_frames",
    "mse_baseline",
    "mse_subject",
    "mse_ratio",
    "errors_baseline",
    "errors_subject",
    "errors_ratio",
    "mse_subject_better",
    "mse_baseline_better",
    "mse_sign_p",
    "errors_subject_better",
    "errors_baseline_better",
    "errors_sign_p",
];

type CellKey = (u64, usize);

fn cell_key(snr: f64, it: usize) -> CellKey {
    (snr.to_bits(), it)
}

/// Pairs frames of `baseline` and `subject` by (snr, iteration, seed).
/// MSE columns are medians over frames; `errors_*` are mean bit errors per
/// frame, so `errors_ratio` equals the BER ratio.
pub fn summarize(
    frames: &[FrameRecord],
    baseline: ReceiverKind,
    subject: ReceiverKind,
) -> Result<Vec<Comparison>> {
    let collect = |kind: ReceiverKind| -> BTreeMap<CellKey, BTreeMap<u64, &FrameRecord>> {
        let mut m: BTreeMap<CellKey, BTreeMap<u64, &FrameRecord>> = BTreeMap::new();
        for f in frames.iter().filter(|f| f.receiver == kind) {
            m.entry(cell_key(f.snr_db, f.iteration))
                .or_default()
                .insert(f.seed, f);
        }
        m
    };
    let base = collect(baseline);
    let subj = collect(subject);
    if base.is_empty() || subj.is_empty() {
        return Err(Error::MismatchedGrids(format!(
            "no frames for {}",
            if base.is_empty() { baseline } else { subject }
        )));
    }
    if base.keys().ne(subj.keys()) {
        return Err(Error::MismatchedGrids(
            "receivers cover different (snr, iteration) cells".into(),
        ));
    }
    let mut out = Vec::new();
    for (key, bf) in &base {
        let sf = &subj[key];
        if bf.keys().ne(sf.keys()) {
            return Err(Error::MismatchedGrids(format!(
                "frame seeds differ at snr {} dB, iteration {}",
                f64::from_bits(key.0),
                key.1
            )));
        }
        let (mut mw, mut ml, mut bw, mut bl) = (0u64, 0u64, 0u64, 0u64);
        let (mut be, mut se) = (0u64, 0u64);
        let mut bm = Vec::with_capacity(bf.len());
        let mut sm = Vec::with_capacity(bf.len());
        for (seed, b) in bf {
            let s = sf[seed];
            mw += u64::from(s.pn_mse < b.pn_mse);
            ml += u64::from(s.pn_mse > b.pn_mse);
            bw += u64::from(s.n_bit_errors < b.n_bit_errors);
            bl += u64::from(s.n_bit_errors > b.n_bit_errors);
            be += b.n_bit_errors;
            se += s.n_bit_errors;
            bm.push(b.pn_mse);
            sm.push(s.pn_mse);
        }
        let (mse_b, mse_s) = (median(&bm), median(&sm));
        let n = bf.len();
        let (err_b, err_s) = (be as f64 / n as f64, se as f64 / n as f64);
        out.push(Comparison {
            snr_db: f64::from_bits(key.0),
            iteration: key.1,
            n_frames: n,
            mse_baseline: mse_b,
            mse_subject: mse_s,
            mse_ratio: ratio(mse_s, mse_b),
            errors_baseline: err_b,
            errors_subject: err_s,
            errors_ratio: ratio(se as f64, be as f64),
            mse_subject_better: mw,
            mse_baseline_better: ml,
            mse_sign_p: sign_test(mw, ml),
            errors_subject_better: bw,
            errors_baseline_better: bl,
            errors_sign_p: sign_test(bw, bl),
        });
    }
    out.sort_by(|a, b| {
        a.snr_db
            .total_cmp(&b.snr_db)
            .then(a.iteration.cmp(&b.iteration))
    });
    Ok(out)
}

pub fn write_comparison<W: Write>(rows: &[Comparison], w: W) -> Result<()> {
    let mut out = csv_writer(w);
    out.write_record(COMPARISON_HEADER).map_err(csv_err)?;
    for c in rows {
        out.write_record([
            fmt_float(c.snr_db),
            c.iteration.to_string(),
            c.n_frames.to_string(),
            fmt_float(c.mse_baseline),
            fmt_float(c.mse_subject),
            fmt_float(c.mse_ratio),
            fmt_float(c.errors_baseline),
            fmt_float(c.errors_subject),
            fmt_float(c.errors_ratio),
            c.mse_subject_better.to_string(),
            c.mse_baseline_better.to_string(),
            fmt_float(c.mse_sign_p),
            c.errors_subject_better.to_string(),
            c.errors_baseline_better.to_string(),
            fmt_float(c.errors_sign_p),
        ])
        .map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}
