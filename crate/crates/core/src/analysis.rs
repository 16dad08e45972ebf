//! Windowed averages of recorded series, convergence-order studies over the
//! number of averaged periods, endpoint-shift comparisons and divergence tables.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{analytic_output, analytic_output_sensitivity, AnalyticSignalSpec};
use crate::primal::estimate_period;
use crate::windows::{discrete_weights, DiscreteWeights, Normalization, WindowKind};

/// `J_w` of `outputs` over steps `transient..=end`.
pub fn windowed_average(
    outputs: &[f64],
    kind: WindowKind,
    transient: usize,
    end: usize,
    mode: Normalization,
) -> Result<f64> {
    let w = discrete_weights(kind, transient, end, mode)?;
    w.average(outputs)
}

/// Closed-form signal sampled at `t_n = n dt`, `n = 0..len`.
pub fn analytic_series(spec: &AnalyticSignalSpec, sigma: &[f64], dt: f64, len: usize) -> Vec<f64> {
    (0..len).map(|n| analytic_output(spec, n as f64 * dt, sigma)).collect()
}

/// Component `j` of the closed-form sensitivity sampled at `t_n = n dt`.
pub fn analytic_sensitivity_series(
    spec: &AnalyticSignalSpec,
    sigma: &[f64],
    dt: f64,
    len: usize,
    j: usize,
) -> Vec<f64> {
    (0..len)
        .map(|n| analytic_output_sensitivity(spec, n as f64 * dt, sigma)[j])
        .collect()
}

/// How the error at period count `k` is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ErrorMeasure {
    /// `max |J_w(N) - J_ref|` over one period of end steps starting at `N(k)`.
    /// At integer `k` the error of a pure harmonic can vanish by symmetry; the
    /// envelope over a period is the bound the order statement is about.
    #[default]
    PeriodEnvelope,
    /// `|J_w(N(k)) - J_ref|`.
    AtSpan,
}

/// Where the limit value of a study comes from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Reference {
    ClosedForm(f64),
    /// Bump-window average over this many periods.
    BumpAtPeriods(usize),
}

impl Reference {
    pub fn label(&self) -> String {
        match self {
            Reference::ClosedForm(_) => "closed-form".to_string(),
            Reference::BumpAtPeriods(k) => format!("bump-at-k={k}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StudyOptions {
    pub measure: ErrorMeasure,
    pub normalization: Normalization,
    /// Period to use; estimated from the series when absent.
    pub period: Option<f64>,
}

impl Default for StudyOptions {
    fn default() -> Self {
        StudyOptions {
            measure: ErrorMeasure::PeriodEnvelope,
            normalization: Normalization::PaperFaithful,
            period: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceStudy {
    pub kind: WindowKind,
    pub transient: usize,
    pub period: f64,
    pub k_values: Vec<usize>,
    pub ends: Vec<usize>,
    /// `J_w(N(k))`.
    pub values: Vec<f64>,
    pub errors: Vec<f64>,
    pub reference: f64,
    pub reference_source: String,
    /// Least-squares slope of `ln error` against `ln k`.
    pub slope: f64,
    /// Root-mean-square residual of the fit in log space.
    pub fit_residual: f64,
    /// Errors above this floor entered the fit.
    pub noise_floor: f64,
    pub fitted_points: usize,
}

impl ConvergenceStudy {
    /// Measured order, `-slope`.
    pub fn order(&self) -> f64 {
        -self.slope
    }

    pub fn error_at(&self, k: usize) -> Option<f64> {
        self.k_values.iter().position(|&x| x == k).map(|i| self.errors[i])
    }
}

/// `N(k) = n_tr + round(k T / dt)`.
pub fn end_step(transient: usize, period: f64, dt: f64, k: f64) -> usize {
    transient + (k * period / dt).round() as usize
}

/// Least-squares line through `(x, y)`; returns `(slope, intercept, rms residual)`.
pub fn fit_line(x: &[f64], y: &[f64]) -> Result<(f64, f64, f64)> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return Err(Error::DegenerateFit { usable: n.min(y.len()) });
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::DegenerateFit { usable: n });
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum();
    Ok((slope, intercept, (rss / n as f64).sqrt()))
}

fn resolve_period(series: &[f64], transient: usize, dt: f64, options: &StudyOptions) -> Result<f64> {
    match options.period {
        Some(p) if p > 0.0 && p.is_finite() => Ok(p),
        Some(p) => Err(Error::InsufficientData(format!("period {p} is not positive"))),
        None => Ok(estimate_period(series, transient, dt)?.period),
    }
}

/// Last step a study over `k_list` reads (inclusive), given the period.
pub fn required_len(
    transient: usize,
    period: f64,
    dt: f64,
    k_list: &[usize],
    reference: &Reference,
    measure: ErrorMeasure,
) -> usize {
    let k_max = k_list.iter().copied().max().unwrap_or(0);
    let mut last = end_step(transient, period, dt, k_max as f64);
    if measure == ErrorMeasure::PeriodEnvelope {
        last += ((period / dt).round() as usize).saturating_sub(1);
    }
    if let Reference::BumpAtPeriods(k) = reference {
        last = last.max(end_step(transient, period, dt, *k as f64));
    }
    last + 1
}

/// Errors of the windowed average of `series` versus a reference for each `k`,
/// with a log-log slope fit.
pub fn convergence_study(
    series: &[f64],
    kind: WindowKind,
    transient: usize,
    dt: f64,
    k_list: &[usize],
    reference: Reference,
    options: &StudyOptions,
) -> Result<ConvergenceStudy> {
    if k_list.is_empty() || k_list.windows(2).any(|w| w[0] >= w[1]) || k_list[0] == 0 {
        return Err(Error::InsufficientData(
            "k values must be positive and strictly increasing".into(),
        ));
    }
    let period = resolve_period(series, transient, dt, options)?;
    let needed = required_len(transient, period, dt, k_list, &reference, options.measure);
    if series.len() < needed {
        return Err(Error::InsufficientData(format!(
            "study needs {needed} samples, series has {}",
            series.len()
        )));
    }
    let mode = options.normalization;
    let (reference_value, reference_source) = match reference {
        Reference::ClosedForm(v) => (v, reference.label()),
        Reference::BumpAtPeriods(k) => {
            let end = end_step(transient, period, dt, k as f64);
            (
                windowed_average(series, WindowKind::Bump, transient, end, mode)?,
                reference.label(),
            )
        }
    };

    let per_period = ((period / dt).round() as usize).max(1);
    let mut ends = Vec::with_capacity(k_list.len());
    let mut values = Vec::with_capacity(k_list.len());
    let mut errors = Vec::with_capacity(k_list.len());
    for &k in k_list {
        let end = end_step(transient, period, dt, k as f64);
        let value = windowed_average(series, kind, transient, end, mode)?;
        let error = match options.measure {
            ErrorMeasure::AtSpan => (value - reference_value).abs(),
            ErrorMeasure::PeriodEnvelope => {
                let mut worst = 0.0f64;
                for e in end..end + per_period {
                    let v = windowed_average(series, kind, transient, e, mode)?;
                    worst = worst.max((v - reference_value).abs());
                }
                worst
            }
        };
        ends.push(end);
        values.push(value);
        errors.push(error);
    }

    let scale = series[transient..needed.min(series.len())]
        .iter()
        .fold(reference_value.abs(), |m, v| m.max(v.abs()));
    let noise_floor = 100.0 * f64::EPSILON * scale;
    let (lx, ly): (Vec<f64>, Vec<f64>) = k_list
        .iter()
        .zip(&errors)
        .filter(|(_, &e)| e > noise_floor)
        .map(|(&k, &e)| ((k as f64).ln(), e.ln()))
        .unzip();
    let (slope, _, fit_residual) = fit_line(&lx, &ly)?;

    Ok(ConvergenceStudy {
        kind,
        transient,
        period,
        k_values: k_list.to_vec(),
        ends,
        values,
        errors,
        reference: reference_value,
        reference_source,
        slope,
        fit_residual,
        noise_floor,
        fitted_points: lx.len(),
    })
}

/// Relative change `||v2 - v1|| / ||v1||` of a windowed sensitivity vector when
/// the last averaged step moves from `end` to `end + shift`.
pub fn endpoint_shift_robustness<F>(
    mut sensitivity: F,
    kind: WindowKind,
    transient: usize,
    end: usize,
    shift: usize,
    mode: Normalization,
) -> Result<f64>
where
    F: FnMut(&DiscreteWeights) -> Result<DVector<f64>>,
{
    let v1 = sensitivity(&discrete_weights(kind, transient, end, mode)?)?;
    let v2 = sensitivity(&discrete_weights(kind, transient, end + shift, mode)?)?;
    let base = v1.norm();
    if base == 0.0 || !base.is_finite() {
        return Err(Error::ZeroBaseline);
    }
    Ok((v2 - v1).norm() / base)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DivergenceRow {
    pub k: usize,
    pub end: usize,
    pub value: f64,
    /// `max |J_w|` over one period of end steps starting at `end`.
    pub magnitude: f64,
    /// Ratio of this magnitude to the previous row's.
    pub growth: Option<f64>,
    pub growing: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DivergenceTable {
    pub kind: WindowKind,
    pub period: f64,
    pub rows: Vec<DivergenceRow>,
}

impl DivergenceTable {
    pub fn any_growth(&self) -> bool {
        self.rows.iter().any(|r| r.growing)
    }
}

/// Windowed values of `series` over `k_list` with growth flags; no convergence
/// is assumed.
pub fn divergence_diagnostic(
    series: &[f64],
    kind: WindowKind,
    transient: usize,
    dt: f64,
    k_list: &[usize],
    options: &StudyOptions,
) -> Result<DivergenceTable> {
    let period = resolve_period(series, transient, dt, options)?;
    let per_period = ((period / dt).round() as usize).max(1);
    let mut rows: Vec<DivergenceRow> = Vec::with_capacity(k_list.len());
    for &k in k_list {
        let end = end_step(transient, period, dt, k as f64);
        if end + per_period > series.len() {
            return Err(Error::InsufficientData(format!(
                "k = {k} needs {} samples, series has {}",
                end + per_period,
                series.len()
            )));
        }
        let value = windowed_average(series, kind, transient, end, options.normalization)?;
        let mut magnitude = 0.0f64;
        for e in end..end + per_period {
            let v = windowed_average(series, kind, transient, e, options.normalization)?;
            magnitude = magnitude.max(v.abs());
        }
        let growth = rows.last().map(|r| magnitude / r.magnitude);
        let growing = rows
            .last()
            .is_some_and(|r| magnitude > r.magnitude * (1.0 + 1e-9));
        rows.push(DivergenceRow {
            k,
            end,
            value,
            magnitude,
            growth,
            growing,
        });
    }
    Ok(DivergenceTable { kind, period, rows })
}
