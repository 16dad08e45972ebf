//! Window functions on `(0, 1)` and the discrete weights of the midpoint-rule
//! windowed average.
//!
//! Every window vanishes outside the open unit interval and integrates to one.
//! Its smoothness class `l` fixes the convergence order of the windowed average
//! (`p`) and of the windowed sensitivity (`p_s = p - 1`) as the number of
//! averaged periods grows:
//!
//! | window       | `l`  | `p` | `p_s` |
//! |--------------|------|-----|-------|
//! | Square       | -1   | 1   | 0     |
//! | Hann         | 1    | 3   | 2     |
//! | Hann-Square  | 3    | 5   | 4     |
//! | Bump         | inf  | inf | inf   |

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature;

/// Relative tolerance used for the cached bump normalization constant.
pub const BUMP_NORM_TOLERANCE: f64 = 1e-13;

static BUMP_NORM: OnceLock<f64> = OnceLock::new();

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WindowKind {
    Square,
    Hann,
    HannSquare,
    Bump,
}

/// Differentiability class of a window.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Smoothness {
    /// `C^l`; `l = -1` stands for piecewise continuous.
    Finite(i32),
    Infinite,
}

/// Algebraic convergence order, or exponential convergence for `C^inf` windows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Order {
    Algebraic(u32),
    Exponential,
}

impl Order {
    /// Average order implied by a smoothness class.
    pub fn of_average(smoothness: Smoothness) -> Order {
        match smoothness {
            Smoothness::Infinite => Order::Exponential,
            Smoothness::Finite(l) if l < 0 => Order::Algebraic(1),
            Smoothness::Finite(l) if l % 2 == 0 => Order::Algebraic(l as u32 + 1),
            Smoothness::Finite(l) => Order::Algebraic(l as u32 + 2),
        }
    }

    /// Sensitivity order: one less than the average order.
    pub fn of_sensitivity(smoothness: Smoothness) -> Order {
        match Order::of_average(smoothness) {
            Order::Algebraic(p) => Order::Algebraic(p - 1),
            Order::Exponential => Order::Exponential,
        }
    }

    pub fn as_f64(self) -> f64 {
        match self {
            Order::Algebraic(p) => p as f64,
            Order::Exponential => f64::INFINITY,
        }
    }
}

impl WindowKind {
    pub const ALL: [WindowKind; 4] = [
        WindowKind::Square,
        WindowKind::Hann,
        WindowKind::HannSquare,
        WindowKind::Bump,
    ];

    pub fn name(self) -> &'static str {
        match self {
            WindowKind::Square => "square",
            WindowKind::Hann => "hann",
            WindowKind::HannSquare => "hann-square",
            WindowKind::Bump => "bump",
        }
    }

    pub fn smoothness(self) -> Smoothness {
        match self {
            WindowKind::Square => Smoothness::Finite(-1),
            WindowKind::Hann => Smoothness::Finite(1),
            WindowKind::HannSquare => Smoothness::Finite(3),
            WindowKind::Bump => Smoothness::Infinite,
        }
    }

    pub fn average_order(self) -> Order {
        Order::of_average(self.smoothness())
    }

    pub fn sensitivity_order(self) -> Order {
        Order::of_sensitivity(self.smoothness())
    }

    /// `w(s)`; exactly zero for `s` outside the open interval `(0, 1)`.
    #[inline]
    pub fn value(self, s: f64) -> f64 {
        if !(s > 0.0 && s < 1.0) {
            return 0.0;
        }
        match self {
            WindowKind::Square => 1.0,
            WindowKind::Hann => 1.0 - (2.0 * PI * s).cos(),
            WindowKind::HannSquare => {
                let h = 1.0 - (2.0 * PI * s).cos();
                2.0 / 3.0 * h * h
            }
            WindowKind::Bump => bump_kernel(s) / bump_normalization(),
        }
    }
}

impl fmt::Display for WindowKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for WindowKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "square" => Ok(WindowKind::Square),
            "hann" => Ok(WindowKind::Hann),
            "hann-square" | "hann_square" | "hannsquare" => Ok(WindowKind::HannSquare),
            "bump" => Ok(WindowKind::Bump),
            other => Err(Error::Config(format!(
                "unknown window '{other}' (expected square, hann, hann-square or bump)"
            ))),
        }
    }
}

/// Free-function form of [`WindowKind::value`].
pub fn window_value(kind: WindowKind, s: f64) -> f64 {
    kind.value(s)
}

/// Unnormalized bump `exp(-1/(s - s^2))`, with the removable endpoint limits set to zero.
#[inline]
fn bump_kernel(s: f64) -> f64 {
    let q = s * (1.0 - s);
    if q <= 0.0 {
        0.0
    } else {
        (-1.0 / q).exp()
    }
}

/// Normalization constant of the bump window, computed once per process.
pub fn bump_normalization() -> f64 {
    *BUMP_NORM.get_or_init(|| {
        bump_normalization_with_tolerance(BUMP_NORM_TOLERANCE)
            .expect("bump integrand is smooth; adaptive quadrature must converge")
    })
}

/// Integral of `exp(-1/(s - s^2))` over `(0, 1)` to relative tolerance `rel_tol`.
pub fn bump_normalization_with_tolerance(rel_tol: f64) -> Result<f64> {
    // Symmetric about 1/2, so integrate one half.
    quadrature::integrate(bump_kernel, 0.0, 0.5, rel_tol).map(|half| 2.0 * half)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Normalization {
    /// `(1/(N - n_tr)) * sum_{n=n_tr}^{N} w(s_n)`, exactly as the midpoint rule reads.
    #[default]
    PaperFaithful,
    /// Weights rescaled by one common factor so that they sum to `N - n_tr`.
    Renormalized,
}

impl FromStr for Normalization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "paper-faithful" | "paper_faithful" | "faithful" => Ok(Normalization::PaperFaithful),
            "renormalized" => Ok(Normalization::Renormalized),
            other => Err(Error::Config(format!(
                "unknown normalization '{other}' (expected paper-faithful or renormalized)"
            ))),
        }
    }
}

/// Weights `w((n - n_tr)/(N - n_tr))` for `n = n_tr..=N`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteWeights {
    transient: usize,
    end: usize,
    values: Vec<f64>,
    normalization: Normalization,
}

/// Builds the discrete weights of `kind` over steps `n_tr..=end`.
pub fn discrete_weights(
    kind: WindowKind,
    transient: usize,
    end: usize,
    normalization: Normalization,
) -> Result<DiscreteWeights> {
    if end <= transient {
        return Err(Error::InvalidSpan { transient, end });
    }
    let span = (end - transient) as f64;
    let mut values: Vec<f64> = (transient..=end)
        .map(|n| kind.value((n - transient) as f64 / span))
        .collect();
    if normalization == Normalization::Renormalized {
        let sum: f64 = values.iter().sum();
        if sum <= 0.0 {
            return Err(Error::DegenerateWeights { transient, end });
        }
        let factor = span / sum;
        values.iter_mut().for_each(|v| *v *= factor);
    }
    Ok(DiscreteWeights {
        transient,
        end,
        values,
        normalization,
    })
}

impl DiscreteWeights {
    pub fn transient(&self) -> usize {
        self.transient
    }

    pub fn end(&self) -> usize {
        self.end
    }

    /// `N - n_tr`, the divisor of the discrete average.
    pub fn span(&self) -> usize {
        self.end - self.transient
    }

    pub fn normalization(&self) -> Normalization {
        self.normalization
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Weight of step `n`, zero outside `n_tr..=N`.
    pub fn weight(&self, n: usize) -> f64 {
        if n < self.transient || n > self.end {
            0.0
        } else {
            self.values[n - self.transient]
        }
    }

    /// Weight of step `n` divided by `N - n_tr`: the coefficient of `g(n)` in the average.
    pub fn coefficient(&self, n: usize) -> f64 {
        self.weight(n) / self.span() as f64
    }

    /// Same span and normalization tag, all weights multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> DiscreteWeights {
        DiscreteWeights {
            values: self.values.iter().map(|v| v * factor).collect(),
            ..self.clone()
        }
    }

    /// Discrete windowed average of `series[n_tr..=N]`.
    pub fn average(&self, series: &[f64]) -> Result<f64> {
        if series.len() <= self.end {
            return Err(Error::MissingStates {
                available: series.len(),
                requested: self.end,
            });
        }
        let sum: f64 = self
            .values
            .iter()
            .zip(&series[self.transient..=self.end])
            .map(|(w, g)| w * g)
            .sum();
        Ok(sum / self.span() as f64)
    }

    /// `(step, s, weight)` rows for CSV export.
    pub fn rows(&self) -> impl Iterator<Item = (usize, f64, f64)> + '_ {
        let span = self.span() as f64;
        self.values
            .iter()
            .enumerate()
            .map(move |(i, &w)| (self.transient + i, i as f64 / span, w))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orders_follow_smoothness_table() {
        let expect = [
            (WindowKind::Square, Smoothness::Finite(-1), 1.0, 0.0),
            (WindowKind::Hann, Smoothness::Finite(1), 3.0, 2.0),
            (WindowKind::HannSquare, Smoothness::Finite(3), 5.0, 4.0),
            (
                WindowKind::Bump,
                Smoothness::Infinite,
                f64::INFINITY,
                f64::INFINITY,
            ),
        ];
        for (kind, l, p, ps) in expect {
            assert_eq!(kind.smoothness(), l);
            assert_eq!(kind.average_order().as_f64(), p);
            assert_eq!(kind.sensitivity_order().as_f64(), ps);
        }
        // Even smoothness classes: p = l + 1.
        assert_eq!(Order::of_average(Smoothness::Finite(2)), Order::Algebraic(3));
        assert_eq!(Order::of_average(Smoothness::Finite(0)), Order::Algebraic(1));
    }

    #[test]
    fn point_values() {
        assert_eq!(window_value(WindowKind::Hann, 0.5), 2.0);
        assert!((window_value(WindowKind::HannSquare, 0.5) - 8.0 / 3.0).abs() < 1e-15);
        assert_eq!(window_value(WindowKind::Square, 1.5), 0.0);
        let a = bump_normalization();
        let expected = (-4.0f64).exp() / a;
        assert!((window_value(WindowKind::Bump, 0.5) - expected).abs() < 1e-14 * expected);
    }

    #[test]
    fn endpoints_are_zero() {
        for kind in WindowKind::ALL {
            assert_eq!(kind.value(0.0), 0.0, "{kind}");
            assert_eq!(kind.value(1.0), 0.0, "{kind}");
            assert_eq!(kind.value(-0.2), 0.0, "{kind}");
            assert_eq!(kind.value(f64::NAN), 0.0, "{kind}");
        }
    }

    #[test]
    fn bump_normalization_self_consistent() {
        let coarse = bump_normalization_with_tolerance(1e-12).unwrap();
        let fine = bump_normalization_with_tolerance(1e-14).unwrap();
        assert!((coarse - fine).abs() / fine < 1e-11);
        assert!(fine < (-4.0f64).exp());
        assert_eq!(bump_normalization(), bump_normalization());
    }

    #[test]
    fn bump_normalization_matches_riemann_sum() {
        let cells = 1_000_000;
        let h = 1.0 / cells as f64;
        let riemann: f64 = (0..cells)
            .map(|i| bump_kernel((i as f64 + 0.5) * h))
            .sum::<f64>()
            * h;
        let a = bump_normalization();
        assert!((riemann - a).abs() / a < 1e-9);
    }

    #[test]
    fn square_weights_exclude_endpoints() {
        let w = discrete_weights(WindowKind::Square, 500, 1200, Normalization::PaperFaithful).unwrap();
        assert_eq!(w.values().len(), 701);
        assert_eq!(w.values()[0], 0.0);
        assert_eq!(*w.values().last().unwrap(), 0.0);
        assert!(w.values()[1..700].iter().all(|&v| v == 1.0));
    }

    #[test]
    fn hann_weights_small_span() {
        for mode in [Normalization::PaperFaithful, Normalization::Renormalized] {
            let w = discrete_weights(WindowKind::Hann, 0, 4, mode).unwrap();
            let expect = [0.0, 1.0, 2.0, 1.0, 0.0];
            for (v, e) in w.values().iter().zip(expect) {
                assert!((v - e).abs() < 1e-15, "{mode:?}: {v} vs {e}");
            }
        }
    }

    #[test]
    fn renormalized_weights_sum_to_span() {
        for kind in WindowKind::ALL {
            let w = discrete_weights(kind, 7, 40, Normalization::Renormalized).unwrap();
            let sum: f64 = w.values().iter().sum();
            assert!((sum - 33.0).abs() < 1e-12, "{kind}: {sum}");
        }
    }

    #[test]
    fn invalid_span_rejected() {
        assert!(matches!(
            discrete_weights(WindowKind::Hann, 10, 10, Normalization::PaperFaithful),
            Err(Error::InvalidSpan { .. })
        ));
        assert!(matches!(
            discrete_weights(WindowKind::Square, 3, 4, Normalization::Renormalized),
            Err(Error::DegenerateWeights { .. })
        ));
    }

    #[test]
    fn discrete_consistency_orders() {
        let err = |kind: WindowKind, span: usize| {
            let w = discrete_weights(kind, 0, span, Normalization::PaperFaithful).unwrap();
            w.values().iter().sum::<f64>() / span as f64 - 1.0
        };
        // Square: error exactly -1/span, so doubling the span halves it.
        for span in [16, 32, 64, 128] {
            let ratio = err(WindowKind::Square, span) / err(WindowKind::Square, 2 * span);
            assert!((ratio - 2.0).abs() < 1e-9);
        }
        // Smooth windows: error is o(1/span^2).
        for kind in [WindowKind::Hann, WindowKind::HannSquare, WindowKind::Bump] {
            let scaled: Vec<f64> = [32usize, 64, 128, 256]
                .iter()
                .map(|&s| err(kind, s).abs() * (s * s) as f64)
                .collect();
            assert!(scaled.iter().all(|&v| v < 1e-4), "{kind}: {scaled:?}");
            assert!(scaled[3] < 1e-6, "{kind}: {scaled:?}");
        }
    }

    #[test]
    fn scaled_and_coefficients() {
        let w = discrete_weights(WindowKind::Hann, 2, 6, Normalization::PaperFaithful).unwrap();
        assert_eq!(w.weight(1), 0.0);
        assert_eq!(w.weight(7), 0.0);
        assert!((w.coefficient(4) - 2.0 / 4.0).abs() < 1e-15);
        assert!(w.scaled(0.0).values().iter().all(|&v| v == 0.0));
        let rows: Vec<_> = w.rows().collect();
        assert_eq!(rows[2].0, 4);
        assert_eq!(rows[2].1, 0.5);
    }

    #[test]
    fn parse_names() {
        for kind in WindowKind::ALL {
            assert_eq!(kind.name().parse::<WindowKind>().unwrap(), kind);
        }
        assert!("triangle".parse::<WindowKind>().is_err());
    }
}
