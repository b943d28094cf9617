//! Batch execution, parameter sweeps, summary statistics, and the CSV
//! formats the command-line tool emits.
//!
//! A sweep varies one scalar config field over a list of values and runs
//! a block of seeded simulations per value. Every seed is fixed up front
//! (`base seed + row * runs_per_value + run`), so any cell can be
//! reproduced in isolation and results never depend on scheduling.
//! Escort-time statistics are computed over successful runs only; the
//! success rate is reported alongside.

use std::fmt;
use std::io::{self, BufRead, Write};
use std::str::FromStr;

use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal, StudentsT};
use thiserror::Error;

use crate::engine::{self, ConfigError, Outcome, RunRecord, ScenarioConfig};
use crate::geometry::Vec3;

#[derive(Debug, Error, PartialEq)]
pub enum StatError {
    #[error("need at least {need} samples, got {got}")]
    TooFewSamples { need: usize, got: usize },
    #[error("samples have zero variance")]
    ZeroVariance,
    #[error("paired samples differ in length: {0} vs {1}")]
    LengthMismatch(usize, usize),
}

/// Anderson-Darling normality test with mean and variance estimated from
/// the sample (the composite case). Returns the small-sample corrected
/// statistic `A2* = A2 * (1 + 0.75/n + 2.25/n^2)` and its p-value.
/// Samples must be finite.
pub fn anderson_darling_normality(samples: &[f64]) -> Result<(f64, f64), StatError> {
    let n = samples.len();
    if n < 8 {
        return Err(StatError::TooFewSamples { need: 8, got: n });
    }
    let nf = n as f64;
    let mean = samples.iter().sum::<f64>() / nf;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (nf - 1.0);
    if var <= 0.0 {
        return Err(StatError::ZeroVariance);
    }
    let sd = var.sqrt();
    let mut z: Vec<f64> = samples.iter().map(|x| (x - mean) / sd).collect();
    z.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let std_normal = Normal::new(0.0, 1.0).unwrap();
    let cdf: Vec<f64> = z.iter().map(|&v| std_normal.cdf(v)).collect();
    let mut acc = 0.0;
    for i in 0..n {
        acc += (2 * i + 1) as f64 * (cdf[i].ln() + (1.0 - cdf[n - 1 - i]).ln());
    }
    let a2 = -nf - acc / nf;
    let a2_star = a2 * (1.0 + 0.75 / nf + 2.25 / (nf * nf));
    Ok((a2_star, ad_p_value(a2_star)))
}

/// Piecewise exponential fit for the tail probability of the corrected
/// statistic, split at 0.2 / 0.34 / 0.6 / 13.
fn ad_p_value(a2_star: f64) -> f64 {
    let a = a2_star;
    if a < 0.2 {
        1.0 - (-13.436 + 101.14 * a - 223.73 * a * a).exp()
    } else if a < 0.34 {
        1.0 - (-8.318 + 42.796 * a - 59.938 * a * a).exp()
    } else if a < 0.6 {
        (0.9177 - 4.279 * a - 1.38 * a * a).exp()
    } else if a <= 13.0 {
        (1.2937 - 5.709 * a + 0.0186 * a * a).exp()
    } else {
        0.0
    }
}

/// Spearman rank correlation with average ranks for ties. The p-value is
/// two-sided, from the t approximation with `n - 2` degrees of freedom.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<(f64, f64), StatError> {
    if xs.len() != ys.len() {
        return Err(StatError::LengthMismatch(xs.len(), ys.len()));
    }
    let n = xs.len();
    if n < 3 {
        return Err(StatError::TooFewSamples { need: 3, got: n });
    }
    let rx = average_ranks(xs);
    let ry = average_ranks(ys);
    let nf = n as f64;
    let mx = rx.iter().sum::<f64>() / nf;
    let my = ry.iter().sum::<f64>() / nf;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for i in 0..n {
        let dx = rx[i] - mx;
        let dy = ry[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(StatError::ZeroVariance);
    }
    let rho = sxy / (sxx * syy).sqrt();
    let p = if rho.abs() >= 1.0 {
        0.0
    } else {
        let df = nf - 2.0;
        let t = rho * (df / (1.0 - rho * rho)).sqrt();
        let dist = StudentsT::new(0.0, 1.0, df).unwrap();
        2.0 * (1.0 - dist.cdf(t.abs()))
    };
    Ok((rho, p))
}

/// 1-based ranks; tied values share the average of their positions.
fn average_ranks(v: &[f64]) -> Vec<f64> {
    let n = v.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| v[a].partial_cmp(&v[b]).unwrap());
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Config fields a sweep may vary: every scalar, so everything except
/// `zone_dims`.
pub const SWEEPABLE: &[&str] = &[
    "n_duavs",
    "comm_range",
    "duav_wobble",
    "muav_wobble",
    "eps_d",
    "eps_m",
    "n_branches",
    "theta_override",
    "speed",
    "body_radius",
    "max_k",
    "prediction_factor",
    "beta_max",
    "enclosure_ticks",
    "speed_ratio",
    "max_ticks",
    "seed",
];

/// Applies a numeric value to one named scalar config field. Integer
/// fields accept only whole numbers.
pub fn set_param(cfg: &mut ScenarioConfig, name: &str, value: f64) -> Result<(), ConfigError> {
    if !SWEEPABLE.contains(&name) {
        return Err(ConfigError::UnknownKey(name.to_string()));
    }
    let text = if value.fract() == 0.0 && value.abs() < 9.0e15 {
        format!("{}", value as i64)
    } else {
        value.to_string()
    };
    cfg.set(name, &text)
}

/// One-dimensional parameter sweep: which field to vary, the values to
/// try, and how many seeded runs to launch per value.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub param: String,
    pub values: Vec<f64>,
    pub runs_per_value: u32,
}

impl SweepSpec {
    pub fn new(
        param: impl Into<String>,
        values: Vec<f64>,
        runs_per_value: u32,
    ) -> Result<Self, ConfigError> {
        let param = param.into();
        if !SWEEPABLE.contains(&param.as_str()) {
            return Err(ConfigError::UnknownKey(param));
        }
        if values.is_empty() {
            return Err(ConfigError::InvalidValue {
                key: "values".to_string(),
                reason: "need at least one value".to_string(),
            });
        }
        if runs_per_value == 0 {
            return Err(ConfigError::InvalidValue {
                key: "runs".to_string(),
                reason: "need at least one run per value".to_string(),
            });
        }
        Ok(SweepSpec { param, values, runs_per_value })
    }

    /// Parses `40,50,60` or `40:70:10`. A range includes its stop when
    /// the step lands on it.
    pub fn parse_values(text: &str) -> Result<Vec<f64>, ConfigError> {
        let invalid = |reason: String| ConfigError::InvalidValue {
            key: "values".to_string(),
            reason,
        };
        let number = |part: &str| -> Result<f64, ConfigError> {
            part.trim()
                .parse::<f64>()
                .map_err(|e| invalid(format!("`{part}`: {e}")))
        };
        if text.contains(':') {
            let parts: Vec<&str> = text.split(':').collect();
            if parts.len() != 3 {
                return Err(invalid("range must be start:stop:step".to_string()));
            }
            let (start, stop, step) = (number(parts[0])?, number(parts[1])?, number(parts[2])?);
            if step <= 0.0 {
                return Err(invalid("step must be positive".to_string()));
            }
            if stop < start {
                return Err(invalid("stop must not be below start".to_string()));
            }
            let slack = step * 1e-9;
            let mut values = Vec::new();
            let mut k = 0u32;
            loop {
                let v = start + f64::from(k) * step;
                if v > stop + slack {
                    break;
                }
                values.push(v);
                k += 1;
            }
            Ok(values)
        } else {
            let values: Vec<f64> = text
                .split(',')
                .map(number)
                .collect::<Result<_, _>>()?;
            if values.is_empty() {
                return Err(invalid("need at least one value".to_string()));
            }
            Ok(values)
        }
    }
}

/// Aggregate of one block of runs sharing a parameter value. Escort-tick
/// fields cover successful runs only and are `None` without any (the
/// standard deviation needs two); the normality test fields are `None`
/// until it is defined (eight spread-out samples).
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub value: f64,
    pub n_success: u32,
    pub n_timeout: u32,
    pub mean_ticks: Option<f64>,
    pub stddev_ticks: Option<f64>,
    pub min_ticks: Option<u64>,
    pub max_ticks: Option<u64>,
    pub mean_clusterless: f64,
    pub ad_stat: Option<f64>,
    pub ad_p: Option<f64>,
}

impl fmt::Display for SummaryRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn opt(v: Option<f64>, digits: usize) -> String {
            v.map_or_else(|| "-".to_string(), |x| format!("{x:.digits$}"))
        }
        write!(
            f,
            "escorted={}/{} mean_ticks={} stddev={} clusterless={:.2} ad_p={}",
            self.n_success,
            self.n_success + self.n_timeout,
            opt(self.mean_ticks, 1),
            opt(self.stddev_ticks, 1),
            self.mean_clusterless,
            opt(self.ad_p, 3),
        )
    }
}

/// Collapses one block of records into a [`SummaryRow`]. The standard
/// deviation uses the n-1 denominator.
pub fn summarize(value: f64, records: &[RunRecord]) -> SummaryRow {
    let ticks: Vec<f64> = records
        .iter()
        .filter(|r| r.outcome == Outcome::Escorted)
        .map(|r| r.escort_ticks as f64)
        .collect();
    let n_success = ticks.len() as u32;
    let n_timeout = records.len() as u32 - n_success;
    let mean_ticks = (n_success > 0).then(|| ticks.iter().sum::<f64>() / ticks.len() as f64);
    let stddev_ticks = (n_success > 1).then(|| {
        let m = mean_ticks.unwrap();
        (ticks.iter().map(|t| (t - m).powi(2)).sum::<f64>() / (ticks.len() - 1) as f64).sqrt()
    });
    let escorted = || records.iter().filter(|r| r.outcome == Outcome::Escorted);
    let min_ticks = escorted().map(|r| r.escort_ticks).min();
    let max_ticks = escorted().map(|r| r.escort_ticks).max();
    let mean_clusterless = if records.is_empty() {
        0.0
    } else {
        records.iter().map(|r| r.clusterless_final as f64).sum::<f64>() / records.len() as f64
    };
    let (ad_stat, ad_p) = match anderson_darling_normality(&ticks) {
        Ok((stat, p)) => (Some(stat), Some(p)),
        Err(_) => (None, None),
    };
    SummaryRow {
        value,
        n_success,
        n_timeout,
        mean_ticks,
        stddev_ticks,
        min_ticks,
        max_ticks,
        mean_clusterless,
        ad_stat,
        ad_p,
    }
}

/// Runs `runs` simulations seeded `cfg.seed`, `cfg.seed + 1`, ... in
/// parallel. Records come back in seed order regardless of scheduling.
pub fn batch(cfg: &ScenarioConfig, runs: u32) -> Vec<RunRecord> {
    (0..u64::from(runs))
        .into_par_iter()
        .map(|i| {
            let mut one = cfg.clone();
            one.seed = cfg.seed.wrapping_add(i);
            engine::run(&one)
        })
        .collect()
}

/// One sweep row with the records behind it, in seed order.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    pub summary: SummaryRow,
    pub records: Vec<RunRecord>,
}

/// Runs the whole grid in parallel. Row `j` run `i` uses seed
/// `base.seed + j * runs_per_value + i`; rows come back in value order.
pub fn sweep(base: &ScenarioConfig, spec: &SweepSpec) -> Result<Vec<SweepCell>, ConfigError> {
    let runs = u64::from(spec.runs_per_value);
    let mut jobs = Vec::new();
    for (row, &value) in spec.values.iter().enumerate() {
        let mut cell = base.clone();
        set_param(&mut cell, &spec.param, value)?;
        cell.validate()?;
        for i in 0..runs {
            let mut one = cell.clone();
            one.seed = base.seed.wrapping_add(row as u64 * runs).wrapping_add(i);
            jobs.push(one);
        }
    }
    let records: Vec<RunRecord> = jobs.par_iter().map(engine::run).collect();
    Ok(spec
        .values
        .iter()
        .zip(records.chunks(spec.runs_per_value as usize))
        .map(|(&value, chunk)| SweepCell {
            summary: summarize(value, chunk),
            records: chunk.to_vec(),
        })
        .collect())
}

pub const RUN_CSV_HEADER: &str = "seed,zone_x,zone_y,zone_z,n_duavs,comm_range,duav_wobble,\
muav_wobble,eps_d,eps_m,n_branches,theta_override,speed,body_radius,max_k,prediction_factor,\
beta_max,enclosure_ticks,speed_ratio,max_ticks,outcome,escort_ticks,clusterless_final";

pub const SUMMARY_CSV_HEADER: &str = "value,n_success,n_timeout,mean_ticks,stddev_ticks,\
min_ticks,max_ticks,mean_clusterless,ad_stat,ad_p";

const RUN_COLUMNS: usize = 23;

#[derive(Debug, Error)]
pub enum CsvError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("line 1: expected header `{expected}`")]
    Header { expected: &'static str },
    #[error("line {line}: expected {expected} columns, found {found}")]
    Columns { line: usize, expected: usize, found: usize },
    #[error("line {line}, column {column}: {reason}")]
    Field { line: usize, column: &'static str, reason: String },
}

/// Writes the per-run CSV: header plus one line per record, in order.
pub fn write_run_csv<W: Write>(out: &mut W, records: &[RunRecord]) -> io::Result<()> {
    writeln!(out, "{RUN_CSV_HEADER}")?;
    for r in records {
        let c = &r.config;
        let theta = c.theta_override.map(|v| v.to_string()).unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.seed,
            c.zone_dims.x,
            c.zone_dims.y,
            c.zone_dims.z,
            c.n_duavs,
            c.comm_range,
            c.duav_wobble,
            c.muav_wobble,
            c.eps_d,
            c.eps_m,
            c.n_branches,
            theta,
            c.speed,
            c.body_radius,
            c.max_k,
            c.prediction_factor,
            c.beta_max,
            c.enclosure_ticks,
            c.speed_ratio,
            c.max_ticks,
            r.outcome,
            r.escort_ticks,
            r.clusterless_final,
        )?;
    }
    Ok(())
}

/// Reads back what [`write_run_csv`] emits. The `seed` column is the seed
/// the run actually used, so it lands in both the record and its config.
pub fn parse_run_csv<R: BufRead>(input: R) -> Result<Vec<RunRecord>, CsvError> {
    let mut lines = input.lines();
    match lines.next().transpose()? {
        Some(first) if first.trim_end() == RUN_CSV_HEADER => {}
        _ => return Err(CsvError::Header { expected: RUN_CSV_HEADER }),
    }
    let mut records = Vec::new();
    for (idx, line) in lines.enumerate() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let lineno = idx + 2;
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != RUN_COLUMNS {
            return Err(CsvError::Columns {
                line: lineno,
                expected: RUN_COLUMNS,
                found: cells.len(),
            });
        }
        let mut col = 0usize;
        let mut next = || {
            let cell = cells[col];
            col += 1;
            (cell, column_name(col - 1))
        };
        fn cell_value<T: FromStr>(
            (cell, column): (&str, &'static str),
            line: usize,
        ) -> Result<T, CsvError>
        where
            T::Err: fmt::Display,
        {
            cell.parse().map_err(|e: T::Err| CsvError::Field {
                line,
                column,
                reason: e.to_string(),
            })
        }
        let seed: u64 = cell_value(next(), lineno)?;
        let zone_x: f64 = cell_value(next(), lineno)?;
        let zone_y: f64 = cell_value(next(), lineno)?;
        let zone_z: f64 = cell_value(next(), lineno)?;
        let n_duavs: usize = cell_value(next(), lineno)?;
        let comm_range: f64 = cell_value(next(), lineno)?;
        let duav_wobble: f64 = cell_value(next(), lineno)?;
        let muav_wobble: f64 = cell_value(next(), lineno)?;
        let eps_d: f64 = cell_value(next(), lineno)?;
        let eps_m: f64 = cell_value(next(), lineno)?;
        let n_branches: usize = cell_value(next(), lineno)?;
        let (theta_cell, theta_col) = next();
        let theta_override = if theta_cell.is_empty() {
            None
        } else {
            Some(cell_value::<f64>((theta_cell, theta_col), lineno)?)
        };
        let speed: f64 = cell_value(next(), lineno)?;
        let body_radius: f64 = cell_value(next(), lineno)?;
        let max_k: u32 = cell_value(next(), lineno)?;
        let prediction_factor: f64 = cell_value(next(), lineno)?;
        let beta_max: f64 = cell_value(next(), lineno)?;
        let enclosure_ticks: u32 = cell_value(next(), lineno)?;
        let speed_ratio: f64 = cell_value(next(), lineno)?;
        let max_ticks: u64 = cell_value(next(), lineno)?;
        let outcome: Outcome = cell_value(next(), lineno)?;
        let escort_ticks: u64 = cell_value(next(), lineno)?;
        let clusterless_final: usize = cell_value(next(), lineno)?;
        records.push(RunRecord {
            seed,
            outcome,
            escort_ticks,
            clusterless_final,
            config: ScenarioConfig {
                zone_dims: Vec3::new(zone_x, zone_y, zone_z),
                n_duavs,
                comm_range,
                duav_wobble,
                muav_wobble,
                eps_d,
                eps_m,
                n_branches,
                theta_override,
                speed,
                body_radius,
                max_k,
                prediction_factor,
                beta_max,
                enclosure_ticks,
                speed_ratio,
                max_ticks,
                seed,
            },
        });
    }
    Ok(records)
}

fn column_name(idx: usize) -> &'static str {
    RUN_CSV_HEADER.split(',').nth(idx).unwrap_or("?")
}

/// Writes the summary CSV; undefined statistics become empty cells.
pub fn write_summary_csv<W: Write>(out: &mut W, rows: &[SummaryRow]) -> io::Result<()> {
    fn opt<T: fmt::Display>(v: Option<T>) -> String {
        v.map(|x| x.to_string()).unwrap_or_default()
    }
    writeln!(out, "{SUMMARY_CSV_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.value,
            r.n_success,
            r.n_timeout,
            opt(r.mean_ticks),
            opt(r.stddev_ticks),
            opt(r.min_ticks),
            opt(r.max_ticks),
            r.mean_clusterless,
            opt(r.ad_stat),
            opt(r.ad_p),
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn normal_samples(seed: u64, n: usize) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let u1: f64 = rng.random_range(f64::MIN_POSITIVE..1.0);
                let u2: f64 = rng.random_range(0.0..1.0);
                (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
            })
            .collect()
    }

    fn uniform_samples(seed: u64, n: usize) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.random_range(0.0..1.0)).collect()
    }

    // Expected values frozen from a reference statistical package run on
    // these exact sequences.
    #[test]
    fn ad_matches_reference_on_gaussian_samples() {
        let (a2s, p) = anderson_darling_normality(&normal_samples(7, 100)).unwrap();
        assert!((a2s - 0.4459475752868096).abs() < 1e-9, "A2*={a2s}");
        assert!((p - 0.2822536270013797).abs() < 1e-9, "p={p}");
        assert!(p > 0.05);
    }

    #[test]
    fn ad_rejects_uniform_samples() {
        let (a2s, p) = anderson_darling_normality(&uniform_samples(11, 100)).unwrap();
        assert!((a2s - 1.6878515855487803).abs() < 1e-9, "A2*={a2s}");
        assert!((p - 0.0002512012310850462).abs() < 1e-9, "p={p}");
        assert!(p < 0.01);
    }

    #[test]
    fn ad_needs_eight_spread_samples() {
        let short = vec![1.0; 7];
        assert_eq!(
            anderson_darling_normality(&short),
            Err(StatError::TooFewSamples { need: 8, got: 7 })
        );
        let flat = vec![5.0; 12];
        assert_eq!(anderson_darling_normality(&flat), Err(StatError::ZeroVariance));
    }

    #[test]
    fn spearman_matches_reference_with_ties() {
        let xs = [1.0, 1.0, 2.0, 2.0, 3.0, 4.0, 5.0, 5.0, 6.0, 7.0];
        let ys = [3.0, 4.0, 4.0, 6.0, 5.0, 8.0, 7.0, 9.0, 9.0, 10.0];
        let (rho, p) = spearman(&xs, &ys).unwrap();
        assert!((rho - 0.9384659809145663).abs() < 1e-12, "rho={rho}");
        assert!((p - 5.8210843518455314e-5).abs() < 1e-12, "p={p}");

        let ys_down = [9.0, 8.0, 8.0, 7.0, 5.0, 5.0, 4.0, 2.0, 2.0, 1.0];
        let (rho, p) = spearman(&xs, &ys_down).unwrap();
        assert!((rho + 0.9722222222222222).abs() < 1e-12, "rho={rho}");
        assert!((p - 2.518937575320559e-6).abs() < 1e-12, "p={p}");
    }

    #[test]
    fn spearman_perfect_monotone_has_zero_p() {
        let xs = [1.0, 2.0, 3.0, 4.0, 5.0];
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 * x + 1.0).collect();
        let (rho, p) = spearman(&xs, &ys).unwrap();
        assert_eq!(rho, 1.0);
        assert_eq!(p, 0.0);
    }

    #[test]
    fn spearman_guards_degenerate_input() {
        assert_eq!(
            spearman(&[1.0, 2.0], &[1.0, 2.0, 3.0]),
            Err(StatError::LengthMismatch(2, 3))
        );
        assert_eq!(
            spearman(&[1.0, 2.0], &[3.0, 4.0]),
            Err(StatError::TooFewSamples { need: 3, got: 2 })
        );
        assert_eq!(
            spearman(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]),
            Err(StatError::ZeroVariance)
        );
    }

    #[test]
    fn ties_share_average_ranks() {
        assert_eq!(average_ranks(&[10.0, 20.0, 20.0, 30.0]), vec![1.0, 2.5, 2.5, 4.0]);
        assert_eq!(average_ranks(&[5.0, 5.0, 5.0]), vec![2.0, 2.0, 2.0]);
        assert_eq!(average_ranks(&[3.0, 1.0, 2.0]), vec![3.0, 1.0, 2.0]);
    }

    #[test]
    fn every_scalar_field_is_sweepable() {
        for &key in SWEEPABLE {
            let mut cfg = ScenarioConfig::default();
            set_param(&mut cfg, key, 3.0).unwrap_or_else(|e| panic!("{key}: {e}"));
        }
        let mut cfg = ScenarioConfig::default();
        assert!(matches!(
            set_param(&mut cfg, "zone_dims", 500.0),
            Err(ConfigError::UnknownKey(_))
        ));
        assert!(set_param(&mut cfg, "n_duavs", 2.5).is_err());
    }

    #[test]
    fn value_text_accepts_lists_and_ranges() {
        assert_eq!(SweepSpec::parse_values("40,50,60").unwrap(), vec![40.0, 50.0, 60.0]);
        assert_eq!(
            SweepSpec::parse_values("40:70:10").unwrap(),
            vec![40.0, 50.0, 60.0, 70.0]
        );
        assert_eq!(SweepSpec::parse_values("0:100:30").unwrap(), vec![0.0, 30.0, 60.0, 90.0]);
        assert_eq!(SweepSpec::parse_values("5").unwrap(), vec![5.0]);
        assert!(SweepSpec::parse_values("").is_err());
        assert!(SweepSpec::parse_values("a,b").is_err());
        assert!(SweepSpec::parse_values("1:2:0").is_err());
        assert!(SweepSpec::parse_values("5:1:1").is_err());
        assert!(SweepSpec::parse_values("1:2").is_err());
    }

    fn tiny_config() -> ScenarioConfig {
        let mut cfg = ScenarioConfig::default();
        cfg.n_duavs = 2;
        cfg.max_ticks = 3;
        cfg.seed = 100;
        cfg
    }

    #[test]
    fn batch_seeds_count_up_from_the_base() {
        let cfg = tiny_config();
        let records = batch(&cfg, 4);
        let seeds: Vec<u64> = records.iter().map(|r| r.seed).collect();
        assert_eq!(seeds, vec![100, 101, 102, 103]);
        for r in &records {
            let mut one = cfg.clone();
            one.seed = r.seed;
            assert_eq!(*r, engine::run(&one));
        }
    }

    #[test]
    fn sweep_assigns_seeds_value_major() {
        let spec = SweepSpec::new("eps_d", vec![40.0, 50.0], 3).unwrap();
        let cells = sweep(&tiny_config(), &spec).unwrap();
        assert_eq!(cells.len(), 2);
        let seeds: Vec<u64> = cells
            .iter()
            .flat_map(|c| c.records.iter().map(|r| r.seed))
            .collect();
        assert_eq!(seeds, vec![100, 101, 102, 103, 104, 105]);
        assert!(cells[0].records.iter().all(|r| r.config.eps_d == 40.0));
        assert!(cells[1].records.iter().all(|r| r.config.eps_d == 50.0));
        assert_eq!(cells[0].summary.value, 40.0);
        let s = &cells[1].summary;
        assert_eq!(s.n_success + s.n_timeout, 3);
    }

    #[test]
    fn sweep_rejects_bad_parameters() {
        assert!(matches!(
            SweepSpec::new("zone_dims", vec![1.0], 1),
            Err(ConfigError::UnknownKey(_))
        ));
        assert!(SweepSpec::new("eps_d", vec![], 1).is_err());
        assert!(SweepSpec::new("eps_d", vec![40.0], 0).is_err());
        let spec = SweepSpec {
            param: "eps_d".to_string(),
            values: vec![-1.0],
            runs_per_value: 1,
        };
        assert!(sweep(&tiny_config(), &spec).is_err());
    }

    #[test]
    fn run_csv_round_trips() {
        let mut records = batch(&tiny_config(), 3);
        records[1].config.theta_override = Some(1.25);
        records[2].outcome = Outcome::Timeout;
        let mut buf = Vec::new();
        write_run_csv(&mut buf, &records).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().count(), 4);
        assert!(text.ends_with('\n'));
        assert_eq!(parse_run_csv(&buf[..]).unwrap(), records);

        let mut empty = Vec::new();
        write_run_csv(&mut empty, &[]).unwrap();
        assert_eq!(String::from_utf8(empty.clone()).unwrap(), format!("{RUN_CSV_HEADER}\n"));
        assert_eq!(parse_run_csv(&empty[..]).unwrap(), vec![]);
    }

    #[test]
    fn run_csv_parser_rejects_damage() {
        let mut buf = Vec::new();
        write_run_csv(&mut buf, &batch(&tiny_config(), 1)).unwrap();
        let good = String::from_utf8(buf).unwrap();

        let bad_header = good.replacen("seed,", "sead,", 1);
        assert!(matches!(
            parse_run_csv(bad_header.as_bytes()),
            Err(CsvError::Header { .. })
        ));

        let mut lines: Vec<&str> = good.lines().collect();
        let trimmed = lines[1].rsplit_once(',').unwrap().0;
        lines[1] = trimmed;
        let short = lines.join("\n");
        assert!(matches!(
            parse_run_csv(short.as_bytes()),
            Err(CsvError::Columns { line: 2, expected: 23, found: 22 })
        ));

        let garbled = good.replacen("ESCORTED", "ESCAPED", 1).replacen("TIMEOUT", "ESCAPED", 1);
        if garbled != good {
            assert!(matches!(
                parse_run_csv(garbled.as_bytes()),
                Err(CsvError::Field { .. })
            ));
        }
    }

    #[test]
    fn summary_recomputed_from_run_csv_matches() {
        let spec = SweepSpec::new("eps_d", vec![40.0, 50.0], 4).unwrap();
        for cell in sweep(&tiny_config(), &spec).unwrap() {
            let mut buf = Vec::new();
            write_run_csv(&mut buf, &cell.records).unwrap();
            let parsed = parse_run_csv(&buf[..]).unwrap();
            assert_eq!(summarize(cell.summary.value, &parsed), cell.summary);
        }
    }

    #[test]
    fn summary_csv_leaves_undefined_cells_empty() {
        let defined = summarize(40.0, &batch(&tiny_config(), 2));
        let undefined = SummaryRow {
            value: 70.0,
            n_success: 0,
            n_timeout: 2,
            mean_ticks: None,
            stddev_ticks: None,
            min_ticks: None,
            max_ticks: None,
            mean_clusterless: 1.5,
            ad_stat: None,
            ad_p: None,
        };
        let mut buf = Vec::new();
        write_summary_csv(&mut buf, &[defined, undefined]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some(SUMMARY_CSV_HEADER));
        assert_eq!(lines.clone().count(), 2);
        let last = lines.nth(1).unwrap();
        assert_eq!(last, "70,0,2,,,,,1.5,,");
        assert_eq!(SUMMARY_CSV_HEADER.split(',').count(), 10);
    }

    #[test]
    fn summarize_counts_and_bounds_agree_with_records() {
        let records = batch(&tiny_config(), 5);
        let s = summarize(1.0, &records);
        assert_eq!((s.n_success + s.n_timeout) as usize, records.len());
        if let (Some(lo), Some(hi)) = (s.min_ticks, s.max_ticks) {
            assert!(lo <= hi);
            if let Some(mean) = s.mean_ticks {
                assert!(lo as f64 <= mean && mean <= hi as f64);
            }
        }
    }

    prop_compose! {
        fn arb_record()(
            seed in 0u64..1_000_000,
            zone in 50.0f64..2000.0,
            n_duavs in 1usize..64,
            comm in 10.0f64..400.0,
            dw in 0.0f64..200.0,
            mw in 0.0f64..200.0,
            eps_d in 20.5f64..100.0,
            eps_m in 20.0f64..100.0,
            branches in 1usize..8,
            theta in proptest::option::of(0.1f64..6.2),
            speed in 0.1f64..5.0,
            max_k in 1u32..6,
            pf in 0.0f64..4.0,
            beta in 1.6f64..3.1,
            et in 1u32..200,
            sr in 0.1f64..1.0,
            mt in 1u64..50_000,
            escorted in proptest::bool::ANY,
            ticks in 0u64..50_000,
            free in 0usize..64,
        ) -> RunRecord {
            RunRecord {
                seed,
                outcome: if escorted { Outcome::Escorted } else { Outcome::Timeout },
                escort_ticks: ticks,
                clusterless_final: free,
                config: ScenarioConfig {
                    zone_dims: Vec3::new(zone, zone * 0.5, zone * 0.25),
                    n_duavs,
                    comm_range: comm,
                    duav_wobble: dw,
                    muav_wobble: mw,
                    eps_d,
                    eps_m,
                    n_branches: branches,
                    theta_override: theta,
                    speed,
                    body_radius: 10.0,
                    max_k,
                    prediction_factor: pf,
                    beta_max: beta,
                    enclosure_ticks: et,
                    speed_ratio: sr,
                    max_ticks: mt,
                    seed,
                },
            }
        }
    }

    proptest! {
        #[test]
        fn any_record_survives_the_csv_round_trip(records in proptest::collection::vec(arb_record(), 0..12)) {
            let mut buf = Vec::new();
            write_run_csv(&mut buf, &records).unwrap();
            prop_assert_eq!(parse_run_csv(&buf[..]).unwrap(), records);
        }
    }
}
