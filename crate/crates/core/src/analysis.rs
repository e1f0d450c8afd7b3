//! Trace analysis: logistic curve fitting, plateau/ignition detection, and
//! plot-ready CSV/JSON export.

use std::io::{BufRead, Write};

use crate::cascade::{CascadeTrace, MonteCarloRun, StopReason};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Fitted three-parameter logistic y = A / (1 + exp(-rate * (x - midpoint))).
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct SigmoidFit<F> {
    pub amplitude: F,
    pub rate: F,
    pub midpoint: F,
    /// Coefficient of determination against the input series.
    pub r2: F,
    /// True when the fitted rate sits on the search boundary, which is the
    /// signature of near-linear (or otherwise non-sigmoid) input.
    pub rate_at_bound: bool,
}

const RATE_MIN: f64 = 1e-3;
const RATE_MAX: f64 = 10.0;
const RATE_GRID: usize = 25;
const MIDPOINT_GRID: usize = 21;
const REFINE_REL_TOL: f64 = 1e-6;

/// Fits the logistic to a cumulative series sampled at x = 0, 1, 2, ...
///
/// Deterministic: a fixed grid over rate (log-spaced in [1e-3, 10]) and
/// midpoint (over the x range) seeds a pattern-search refinement down to
/// relative step 1e-6. The amplitude is solved in closed form at every
/// candidate, so only two parameters are searched.
pub fn fit_sigmoid<F: Real>(series: &[F]) -> Result<SigmoidFit<F>> {
    let xs: Vec<F> = (0..series.len()).map(F::from_usize_lossy).collect();
    fit_sigmoid_xy(&xs, series)
}

/// [`fit_sigmoid`] with explicit x coordinates (must be increasing).
pub fn fit_sigmoid_xy<F: Real>(xs: &[F], ys: &[F]) -> Result<SigmoidFit<F>> {
    if xs.len() != ys.len() {
        return Err(Error::InvalidParam(format!(
            "x and y series differ in length: {} vs {}",
            xs.len(),
            ys.len()
        )));
    }
    if ys.len() < 5 {
        return Err(Error::SeriesTooShort {
            min: 5,
            got: ys.len(),
        });
    }
    for i in 1..ys.len() {
        if ys[i] < ys[i - 1] {
            return Err(Error::DecreasingSeries(i));
        }
        if xs[i] <= xs[i - 1] {
            return Err(Error::InvalidParam(format!(
                "x values must be strictly increasing (index {i})"
            )));
        }
    }
    if ys[ys.len() - 1] == ys[0] {
        return Err(Error::DegenerateFit);
    }

    let n = F::from_usize_lossy(ys.len());
    let y_mean = ys.iter().copied().sum::<F>() / n;
    let sst = ys.iter().map(|&y| (y - y_mean) * (y - y_mean)).sum::<F>();

    // SSE with the amplitude solved in closed form: for fixed shape s_i,
    // the least-squares amplitude is sum(y*s) / sum(s^2).
    let eval = |rate: F, midpoint: F| -> Option<(F, F)> {
        let mut sum_ys = F::zero();
        let mut sum_ss = F::zero();
        for (&x, &y) in xs.iter().zip(ys) {
            let s = F::one() / (F::one() + (-(rate * (x - midpoint))).exp());
            sum_ys += y * s;
            sum_ss += s * s;
        }
        if !(sum_ss > F::zero()) {
            return None;
        }
        let amp = sum_ys / sum_ss;
        if !(amp > F::zero() && amp.is_finite()) {
            return None;
        }
        let mut sse = F::zero();
        for (&x, &y) in xs.iter().zip(ys) {
            let s = F::one() / (F::one() + (-(rate * (x - midpoint))).exp());
            let d = y - amp * s;
            sse += d * d;
        }
        Some((amp, sse))
    };

    let x_lo = xs[0];
    let x_hi = xs[xs.len() - 1];
    let x_span = (x_hi - x_lo).to_f64_lossy().max(1.0);
    // The midpoint may sit beyond the sampled range (a cascade cut off
    // mid-rise), but letting it run away degenerates the logistic into a
    // bare exponential with absurd amplitude. One span of slack each side
    // keeps fits physical.
    let mid_lo = x_lo - (x_hi - x_lo);
    let mid_hi = x_hi + (x_hi - x_lo);

    // Grid seeding.
    let mut best: Option<(F, F, F, F)> = None; // (rate, midpoint, amp, sse)
    for i in 0..RATE_GRID {
        let lg = -3.0 + 4.0 * i as f64 / (RATE_GRID - 1) as f64;
        let rate = F::from_f64_lossy(10f64.powf(lg));
        for j in 0..MIDPOINT_GRID {
            let frac = j as f64 / (MIDPOINT_GRID - 1) as f64;
            let midpoint = x_lo + (x_hi - x_lo) * F::from_f64_lossy(frac);
            if let Some((amp, sse)) = eval(rate, midpoint) {
                if best.map_or(true, |(_, _, _, b)| sse < b) {
                    best = Some((rate, midpoint, amp, sse));
                }
            }
        }
    }
    let (mut rate, mut midpoint, mut amp, mut sse) = best.ok_or(Error::DegenerateFit)?;

    // Pattern search: multiplicative steps in rate, additive in midpoint,
    // halved whenever no neighbor improves. Diagonal moves matter: the
    // rate/midpoint error surface has a bent valley and axis-only steps
    // stall partway along it. Steps start at the grid spacing and stop at
    // relative 1e-6.
    let mut log_step = 4.0 * std::f64::consts::LN_10 / (RATE_GRID - 1) as f64;
    let mut x_step = x_span / (MIDPOINT_GRID - 1) as f64;
    let rate_min = F::from_f64_lossy(RATE_MIN);
    let rate_max = F::from_f64_lossy(RATE_MAX);
    for _ in 0..20_000 {
        let mut improved = false;
        let up = F::from_f64_lossy(log_step.exp());
        let dx = F::from_f64_lossy(x_step);
        let r_hi = (rate * up).min(rate_max);
        let r_lo = (rate / up).max(rate_min);
        let m_hi = (midpoint + dx).min(mid_hi);
        let m_lo = (midpoint - dx).max(mid_lo);
        let candidates = [
            (r_hi, midpoint),
            (r_lo, midpoint),
            (rate, m_hi),
            (rate, m_lo),
            (r_hi, m_hi),
            (r_hi, m_lo),
            (r_lo, m_hi),
            (r_lo, m_lo),
        ];
        for (r, m) in candidates {
            if let Some((a, e)) = eval(r, m) {
                if e < sse {
                    rate = r;
                    midpoint = m;
                    amp = a;
                    sse = e;
                    improved = true;
                }
            }
        }
        if !improved {
            log_step *= 0.5;
            x_step *= 0.5;
            if log_step < REFINE_REL_TOL && x_step < REFINE_REL_TOL * x_span {
                break;
            }
        }
    }

    let r2 = F::one() - sse / sst;
    let rate_f = rate.to_f64_lossy();
    let rate_at_bound = rate_f <= RATE_MIN * (1.0 + 1e-9) || rate_f >= RATE_MAX * (1.0 - 1e-9);
    Ok(SigmoidFit {
        amplitude: amp,
        rate,
        midpoint,
        r2,
        rate_at_bound,
    })
}

/// Plateau structure of a single trace.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct PlateauReport<F> {
    /// First iteration with an infected core node; `None` when the core is
    /// never reached (the plateau never ends).
    pub plateau_end: Option<usize>,
    /// Mean new infections per iteration over [0, plateau_end); over the
    /// whole trace when the plateau never ends; 0 when plateau_end = 0.
    pub pre_rate: F,
    /// Mean new infections per iteration over the closed window
    /// [plateau_end, plateau_end + window]; `None` when the plateau never
    /// ends.
    pub post_rate: Option<F>,
    /// post_rate / pre_rate; defined only when pre_rate > 0.
    pub ignition_ratio: Option<F>,
}

pub fn plateau_report<F: Real>(trace: &CascadeTrace, window: usize) -> Result<PlateauReport<F>> {
    let cum_core: Vec<usize> = trace.records.iter().map(|r| r.cumulative_core).collect();
    plateau_from_series(&trace.new_counts(), &cum_core, window)
}

/// [`plateau_report`] over exported per-iteration columns.
pub fn plateau_from_series<F: Real>(
    new: &[usize],
    cumulative_core: &[usize],
    window: usize,
) -> Result<PlateauReport<F>> {
    if window == 0 {
        return Err(Error::InvalidParam("window must be positive".into()));
    }
    if new.is_empty() {
        return Err(Error::InvalidParam("trace has no iterations".into()));
    }
    if new.len() != cumulative_core.len() {
        return Err(Error::InvalidParam(
            "new and core series differ in length".into(),
        ));
    }
    let mean_over = |lo: usize, hi: usize| -> F {
        // Mean of new[lo..hi]; empty ranges give 0.
        if hi <= lo {
            return F::zero();
        }
        let sum: usize = new[lo..hi].iter().sum();
        F::from_usize_lossy(sum) / F::from_usize_lossy(hi - lo)
    };

    let plateau_end = cumulative_core.iter().position(|&c| c > 0);
    let (pre_rate, post_rate) = match plateau_end {
        Some(end) => {
            let post_hi = (end + window + 1).min(new.len());
            (mean_over(0, end), Some(mean_over(end, post_hi)))
        }
        None => (mean_over(0, new.len()), None),
    };
    let ignition_ratio = match post_rate {
        Some(post) if pre_rate > F::zero() => Some(post / pre_rate),
        _ => None,
    };
    Ok(PlateauReport {
        plateau_end,
        pre_rate,
        post_rate,
        ignition_ratio,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Csv,
    Json,
}

/// Integer-count rows of a single trace, as exported.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct TraceRow {
    pub iteration: u64,
    pub new: u64,
    pub cumulative: u64,
    pub cum_core: u64,
    pub cum_periphery: u64,
    pub communities: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct TraceTable {
    pub kind: String,
    pub node_count: u64,
    pub community_count: u64,
    pub stop: StopReason,
    pub rows: Vec<TraceRow>,
}

impl TraceTable {
    pub fn from_trace(trace: &CascadeTrace) -> Self {
        let rows = trace
            .records
            .iter()
            .map(|r| TraceRow {
                iteration: r.iteration as u64,
                new: r.newly_infected.len() as u64,
                cumulative: r.cumulative as u64,
                cum_core: r.cumulative_core as u64,
                cum_periphery: r.cumulative_periphery as u64,
                communities: r.cumulative_by_community.iter().map(|&c| c as u64).collect(),
            })
            .collect();
        TraceTable {
            kind: "trace".into(),
            node_count: trace.node_count as u64,
            community_count: trace.community_count as u64,
            stop: trace.stop,
            rows,
        }
    }
}

/// Mean/std rows of an aggregated run, as exported. Means and stds are
/// pre-rounded to 6 significant digits so CSV and JSON agree bit for bit.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct AggregateRow {
    pub iteration: u64,
    pub new_mean: f64,
    pub new_std: f64,
    pub cumulative_mean: f64,
    pub cumulative_std: f64,
    pub cum_core_mean: f64,
    pub cum_core_std: f64,
    pub cum_periphery_mean: f64,
    pub cum_periphery_std: f64,
    pub communities_mean: Vec<f64>,
    pub communities_std: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct AggregateTable {
    pub kind: String,
    pub trials: u64,
    pub rows: Vec<AggregateRow>,
}

impl AggregateTable {
    pub fn from_run<F: Real>(run: &MonteCarloRun<F>) -> Self {
        let rows = run
            .records
            .iter()
            .map(|r| AggregateRow {
                iteration: r.iteration as u64,
                new_mean: round_sig6(r.new.mean.to_f64_lossy()),
                new_std: round_sig6(r.new.std.to_f64_lossy()),
                cumulative_mean: round_sig6(r.cumulative.mean.to_f64_lossy()),
                cumulative_std: round_sig6(r.cumulative.std.to_f64_lossy()),
                cum_core_mean: round_sig6(r.cumulative_core.mean.to_f64_lossy()),
                cum_core_std: round_sig6(r.cumulative_core.std.to_f64_lossy()),
                cum_periphery_mean: round_sig6(r.cumulative_periphery.mean.to_f64_lossy()),
                cum_periphery_std: round_sig6(r.cumulative_periphery.std.to_f64_lossy()),
                communities_mean: r
                    .communities
                    .iter()
                    .map(|m| round_sig6(m.mean.to_f64_lossy()))
                    .collect(),
                communities_std: r
                    .communities
                    .iter()
                    .map(|m| round_sig6(m.std.to_f64_lossy()))
                    .collect(),
            })
            .collect();
        AggregateTable {
            kind: "aggregate".into(),
            trials: run.trials as u64,
            rows,
        }
    }
}

/// Rounds to 6 significant decimal digits, deterministically.
pub fn round_sig6(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.5e}").parse().expect("sig-digit format round-trips")
}

pub fn write_trace(table: &TraceTable, format: ExportFormat, mut out: impl Write) -> Result<()> {
    match format {
        ExportFormat::Json => {
            serde_json::to_writer(&mut out, table)?;
            writeln!(out)?;
        }
        ExportFormat::Csv => {
            write!(out, "iteration,new,cumulative,cum_core,cum_periphery")?;
            for c in 0..table.community_count {
                write!(out, ",community_{c}")?;
            }
            writeln!(out)?;
            for row in &table.rows {
                write!(
                    out,
                    "{},{},{},{},{}",
                    row.iteration, row.new, row.cumulative, row.cum_core, row.cum_periphery
                )?;
                for c in &row.communities {
                    write!(out, ",{c}")?;
                }
                writeln!(out)?;
            }
        }
    }
    Ok(())
}

pub fn write_aggregate(
    table: &AggregateTable,
    format: ExportFormat,
    mut out: impl Write,
) -> Result<()> {
    match format {
        ExportFormat::Json => {
            serde_json::to_writer(&mut out, table)?;
            writeln!(out)?;
        }
        ExportFormat::Csv => {
            let communities = table.rows.first().map_or(0, |r| r.communities_mean.len());
            write!(
                out,
                "iteration,new_mean,new_std,cumulative_mean,cumulative_std,cum_core_mean,cum_core_std,cum_periphery_mean,cum_periphery_std"
            )?;
            for c in 0..communities {
                write!(out, ",community_{c}_mean,community_{c}_std")?;
            }
            writeln!(out)?;
            for row in &table.rows {
                write!(
                    out,
                    "{},{},{},{},{},{},{},{},{}",
                    row.iteration,
                    row.new_mean,
                    row.new_std,
                    row.cumulative_mean,
                    row.cumulative_std,
                    row.cum_core_mean,
                    row.cum_core_std,
                    row.cum_periphery_mean,
                    row.cum_periphery_std
                )?;
                for (m, s) in row.communities_mean.iter().zip(&row.communities_std) {
                    write!(out, ",{m},{s}")?;
                }
                writeln!(out)?;
            }
        }
    }
    Ok(())
}

pub fn read_trace_table(mut source: impl BufRead) -> Result<TraceTable> {
    let mut text = String::new();
    source.read_to_string(&mut text)?;
    Ok(serde_json::from_str(&text)?)
}

/// Extracts the cumulative series from an exported trace or aggregate file,
/// accepting either CSV or JSON. Aggregates yield the cumulative mean.
pub fn read_cumulative(mut source: impl BufRead) -> Result<Vec<f64>> {
    let mut text = String::new();
    source.read_to_string(&mut text)?;
    let trimmed = text.trim_start();
    if trimmed.starts_with('{') {
        let value: serde_json::Value = serde_json::from_str(trimmed)?;
        let rows = value
            .get("rows")
            .and_then(|r| r.as_array())
            .ok_or(Error::EmptyInput)?;
        let key = match value.get("kind").and_then(|k| k.as_str()) {
            Some("aggregate") => "cumulative_mean",
            _ => "cumulative",
        };
        let series: Vec<f64> = rows
            .iter()
            .filter_map(|row| row.get(key).and_then(|v| v.as_f64()))
            .collect();
        if series.len() != rows.len() || series.is_empty() {
            return Err(Error::EmptyInput);
        }
        return Ok(series);
    }

    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or(Error::EmptyInput)?;
    let columns: Vec<&str> = header.split(',').map(str::trim).collect();
    let col = columns
        .iter()
        .position(|&c| c == "cumulative" || c == "cumulative_mean")
        .ok_or_else(|| Error::Parse {
            line: 1,
            msg: "no cumulative or cumulative_mean column".into(),
        })?;
    let mut series = Vec::new();
    for (idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        let raw = fields.get(col).ok_or_else(|| Error::Parse {
            line: idx + 1,
            msg: format!("row has {} fields, column {} missing", fields.len(), col + 1),
        })?;
        series.push(raw.trim().parse().map_err(|_| Error::Parse {
            line: idx + 1,
            msg: format!("invalid number {raw:?}"),
        })?);
    }
    if series.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(series)
}
