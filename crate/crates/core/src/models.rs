//! Small dynamical systems `du/dt + R(u; sigma, t) = 0` with limit cycles or
//! periodic responses, and the scalar outputs `g(u, sigma)` averaged over them.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Design vector with its admissible box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignVector {
    values: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl DesignVector {
    pub fn new(values: Vec<f64>, lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Config("design vector must have at least one component".into()));
        }
        Error::check_dim("design lower bound", values.len(), lower.len())?;
        Error::check_dim("design upper bound", values.len(), upper.len())?;
        if lower.iter().zip(&upper).any(|(l, u)| !(l <= u)) {
            return Err(Error::Config("design box is empty (lower > upper)".into()));
        }
        let design = DesignVector { values, lower, upper };
        if !design.contains(&design.values) {
            return Err(Error::OutsideBox { values: design.values });
        }
        Ok(design)
    }

    /// Design without bounds.
    pub fn unbounded(values: Vec<f64>) -> Self {
        let n = values.len();
        DesignVector {
            values,
            lower: vec![f64::NEG_INFINITY; n],
            upper: vec![f64::INFINITY; n],
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn contains(&self, candidate: &[f64]) -> bool {
        candidate.len() == self.values.len()
            && candidate
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (l, u))| *l <= *v && *v <= *u)
    }

    /// Componentwise clamp onto the box.
    pub fn project(&self, candidate: &[f64]) -> Vec<f64> {
        candidate
            .iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(v, (l, u))| v.max(*l).min(*u))
            .collect()
    }

    /// Same box, new values (must lie inside it).
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Error::check_dim("design vector", self.values.len(), values.len())?;
        if !self.contains(&values) {
            return Err(Error::OutsideBox { values });
        }
        Ok(DesignVector {
            values,
            ..self.clone()
        })
    }
}

/// `a(sigma) = offset + slope . sigma + curvature * |sigma - center|^2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeanMap {
    pub offset: f64,
    #[serde(default)]
    pub slope: Vec<f64>,
    #[serde(default)]
    pub curvature: f64,
    #[serde(default)]
    pub center: Vec<f64>,
}

impl MeanMap {
    pub fn affine(offset: f64, slope: Vec<f64>) -> Self {
        MeanMap {
            offset,
            slope,
            curvature: 0.0,
            center: Vec::new(),
        }
    }

    pub fn quadratic(offset: f64, curvature: f64, center: Vec<f64>) -> Self {
        MeanMap {
            offset,
            slope: vec![0.0; center.len()],
            curvature,
            center,
        }
    }

    fn center(&self, j: usize) -> f64 {
        self.center.get(j).copied().unwrap_or(0.0)
    }

    pub fn value(&self, sigma: &[f64]) -> f64 {
        let mut a = self.offset;
        for (j, s) in sigma.iter().enumerate() {
            let d = s - self.center(j);
            a += self.slope.get(j).copied().unwrap_or(0.0) * s + self.curvature * d * d;
        }
        a
    }

    pub fn gradient(&self, sigma: &[f64]) -> Vec<f64> {
        sigma
            .iter()
            .enumerate()
            .map(|(j, s)| {
                self.slope.get(j).copied().unwrap_or(0.0)
                    + 2.0 * self.curvature * (s - self.center(j))
            })
            .collect()
    }
}

/// Closed-form periodic signal `g = a(sigma) + b sin(2 pi t / T(sigma))` with
/// `T(sigma) = T0 (1 + sigma_1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalyticSignalSpec {
    pub mean: MeanMap,
    pub amplitude: f64,
    pub base_period: f64,
    /// Rate of the `exp(growth_rate * t)` envelope applied to the period-induced
    /// part of the closed-form sensitivity.
    #[serde(default)]
    pub growth_rate: f64,
}

impl AnalyticSignalSpec {
    pub fn design_dim(&self) -> usize {
        self.mean.slope.len().max(self.mean.center.len()).max(1)
    }

    pub fn period(&self, sigma: &[f64]) -> f64 {
        self.base_period * (1.0 + sigma[0])
    }

    fn angular_frequency(&self, sigma: &[f64]) -> f64 {
        2.0 * PI / self.period(sigma)
    }
}

/// `g(t, sigma)` of the closed-form signal.
pub fn analytic_output(spec: &AnalyticSignalSpec, t: f64, sigma: &[f64]) -> f64 {
    spec.mean.value(sigma) + spec.amplitude * (2.0 * PI * t / spec.period(sigma)).sin()
}

/// `dg/dsigma(t, sigma)` of the closed-form signal; the period-induced term
/// carries the `exp(growth_rate * t)` envelope.
pub fn analytic_output_sensitivity(spec: &AnalyticSignalSpec, t: f64, sigma: &[f64]) -> Vec<f64> {
    let period = spec.period(sigma);
    let phase = 2.0 * PI * t / period;
    // d/dT sin(2 pi t / T) = -cos(phase) * 2 pi t / T^2, and dT/dsigma_1 = T0.
    let period_term = -spec.amplitude * phase.cos() * 2.0 * PI * t / (period * period)
        * spec.base_period
        * (spec.growth_rate * t).exp();
    let mut grad = spec.mean.gradient(sigma);
    grad[0] += period_term;
    grad
}

/// Damped linear oscillator `x'' + c x' + k x = F cos(omega t)` with
/// `k = k0 (1 + sigma_1)` and `c = c0 (1 + sigma_2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForcedOscillator {
    pub stiffness: f64,
    pub damping: f64,
    pub forcing: f64,
    pub omega: f64,
    #[serde(default)]
    pub initial: [f64; 2],
}

impl Default for ForcedOscillator {
    fn default() -> Self {
        ForcedOscillator {
            stiffness: 4.0,
            damping: 1.0,
            forcing: 1.0,
            omega: 1.5,
            initial: [0.0, 0.0],
        }
    }
}

impl ForcedOscillator {
    pub fn period(&self) -> f64 {
        2.0 * PI / self.omega
    }
}

/// Van der Pol oscillator with `sigma_1 = mu`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VanDerPol {
    pub initial: [f64; 2],
}

impl Default for VanDerPol {
    fn default() -> Self {
        VanDerPol { initial: [0.5, 0.0] }
    }
}

/// Linear system `du/dt + (1 + sigma_1) A u = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearSystem {
    /// Row-major square matrix `A`.
    pub matrix: Vec<Vec<f64>>,
    pub initial: Vec<f64>,
}

impl LinearSystem {
    /// Scalar decay `u' = -rate (1 + sigma) u`.
    pub fn decay(rate: f64, initial: f64) -> Self {
        LinearSystem {
            matrix: vec![vec![rate]],
            initial: vec![initial],
        }
    }

    fn matrix(&self) -> DMatrix<f64> {
        let n = self.matrix.len();
        DMatrix::from_fn(n, n, |i, j| self.matrix[i][j])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Model {
    /// Harmonic carrier `x = sin(2 pi t / T(sigma))` whose natural output is the
    /// analytic signal `a(sigma) + b x`.
    AnalyticSignal(AnalyticSignalSpec),
    VanDerPol(VanDerPol),
    ForcedOscillator(ForcedOscillator),
    Linear(LinearSystem),
}

impl Model {
    pub fn van_der_pol() -> Self {
        Model::VanDerPol(VanDerPol::default())
    }

    pub fn name(&self) -> &'static str {
        match self {
            Model::AnalyticSignal(_) => "analytic-signal",
            Model::VanDerPol(_) => "van-der-pol",
            Model::ForcedOscillator(_) => "forced-oscillator",
            Model::Linear(_) => "linear",
        }
    }

    pub fn state_dim(&self) -> usize {
        match self {
            Model::Linear(l) => l.initial.len(),
            _ => 2,
        }
    }

    pub fn design_dim(&self) -> usize {
        match self {
            Model::AnalyticSignal(spec) => spec.design_dim(),
            Model::VanDerPol(_) => 1,
            Model::ForcedOscillator(_) => 2,
            Model::Linear(_) => 1,
        }
    }

    /// Initial state; independent of the design.
    pub fn initial_state(&self) -> DVector<f64> {
        match self {
            Model::AnalyticSignal(_) => DVector::from_vec(vec![0.0, 1.0]),
            Model::VanDerPol(v) => DVector::from_column_slice(&v.initial),
            Model::ForcedOscillator(f) => DVector::from_column_slice(&f.initial),
            Model::Linear(l) => DVector::from_column_slice(&l.initial),
        }
    }

    /// Output the model is usually observed through.
    pub fn default_output(&self) -> Output {
        match self {
            Model::AnalyticSignal(spec) => Output::Signal {
                mean: spec.mean.clone(),
                amplitude: spec.amplitude,
            },
            _ => Output::State(0),
        }
    }

    /// Checks internal consistency (square matrices, positive periods, ...).
    pub fn validate(&self) -> Result<()> {
        match self {
            Model::AnalyticSignal(spec) => {
                if !(spec.base_period > 0.0) || !spec.amplitude.is_finite() {
                    return Err(Error::Config(
                        "analytic signal needs base_period > 0 and finite amplitude".into(),
                    ));
                }
            }
            Model::ForcedOscillator(f) => {
                if !(f.omega > 0.0) {
                    return Err(Error::Config("forced oscillator needs omega > 0".into()));
                }
            }
            Model::Linear(l) => {
                let n = l.initial.len();
                if n == 0 || l.matrix.len() != n || l.matrix.iter().any(|r| r.len() != n) {
                    return Err(Error::Config(
                        "linear model needs a square matrix matching the initial state".into(),
                    ));
                }
            }
            Model::VanDerPol(_) => {}
        }
        Ok(())
    }

    fn check(&self, u: &DVector<f64>, sigma: &[f64]) -> Result<()> {
        Error::check_dim("state vector", self.state_dim(), u.len())?;
        Error::check_dim("design vector", self.design_dim(), sigma.len())
    }

    /// `R(u; sigma, t)`.
    pub fn residual(&self, u: &DVector<f64>, sigma: &[f64], t: f64) -> Result<DVector<f64>> {
        self.check(u, sigma)?;
        Ok(self.residual_unchecked(u, sigma, t))
    }

    /// `dR/du`.
    pub fn residual_jacobian(&self, u: &DVector<f64>, sigma: &[f64], t: f64) -> Result<DMatrix<f64>> {
        self.check(u, sigma)?;
        Ok(self.jacobian_unchecked(u, sigma, t))
    }

    /// `dR/dsigma`, a `d_u x n_d` matrix.
    pub fn residual_design_derivative(
        &self,
        u: &DVector<f64>,
        sigma: &[f64],
        t: f64,
    ) -> Result<DMatrix<f64>> {
        self.check(u, sigma)?;
        Ok(self.design_derivative_unchecked(u, sigma, t))
    }

    pub(crate) fn residual_unchecked(&self, u: &DVector<f64>, sigma: &[f64], t: f64) -> DVector<f64> {
        match self {
            Model::AnalyticSignal(spec) => {
                let w = spec.angular_frequency(sigma);
                DVector::from_vec(vec![-w * u[1], w * u[0]])
            }
            Model::VanDerPol(_) => {
                let mu = sigma[0];
                let (x, v) = (u[0], u[1]);
                DVector::from_vec(vec![-v, -mu * (1.0 - x * x) * v + x])
            }
            Model::ForcedOscillator(f) => {
                let k = f.stiffness * (1.0 + sigma[0]);
                let c = f.damping * (1.0 + sigma[1]);
                let (x, v) = (u[0], u[1]);
                DVector::from_vec(vec![-v, c * v + k * x - f.forcing * (f.omega * t).cos()])
            }
            Model::Linear(l) => (1.0 + sigma[0]) * (l.matrix() * u),
        }
    }

    pub(crate) fn jacobian_unchecked(&self, u: &DVector<f64>, sigma: &[f64], _t: f64) -> DMatrix<f64> {
        match self {
            Model::AnalyticSignal(spec) => {
                let w = spec.angular_frequency(sigma);
                DMatrix::from_row_slice(2, 2, &[0.0, -w, w, 0.0])
            }
            Model::VanDerPol(_) => {
                let mu = sigma[0];
                let (x, v) = (u[0], u[1]);
                DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 2.0 * mu * x * v + 1.0, -mu * (1.0 - x * x)])
            }
            Model::ForcedOscillator(f) => {
                let k = f.stiffness * (1.0 + sigma[0]);
                let c = f.damping * (1.0 + sigma[1]);
                DMatrix::from_row_slice(2, 2, &[0.0, -1.0, k, c])
            }
            Model::Linear(l) => (1.0 + sigma[0]) * l.matrix(),
        }
    }

    pub(crate) fn design_derivative_unchecked(
        &self,
        u: &DVector<f64>,
        sigma: &[f64],
        _t: f64,
    ) -> DMatrix<f64> {
        let nd = self.design_dim();
        let mut d = DMatrix::zeros(self.state_dim(), nd);
        match self {
            Model::AnalyticSignal(spec) => {
                // omega = 2 pi / (T0 (1 + sigma_1))  =>  d omega / d sigma_1 = -omega / (1 + sigma_1)
                let w = spec.angular_frequency(sigma);
                let dw = -w / (1.0 + sigma[0]);
                d[(0, 0)] = -dw * u[1];
                d[(1, 0)] = dw * u[0];
            }
            Model::VanDerPol(_) => {
                let (x, v) = (u[0], u[1]);
                d[(1, 0)] = -(1.0 - x * x) * v;
            }
            Model::ForcedOscillator(f) => {
                d[(1, 0)] = f.stiffness * u[0];
                d[(1, 1)] = f.damping * u[1];
            }
            Model::Linear(l) => {
                d.set_column(0, &(l.matrix() * u));
            }
        }
        d
    }
}

/// Scalar instantaneous output `g(u, sigma)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "args", rename_all = "kebab-case")]
pub enum Output {
    /// `g = u_i`.
    State(usize),
    /// `g = u_i^2`.
    StateSquared(usize),
    /// `g = a(sigma) + amplitude * u_0`.
    Signal { mean: MeanMap, amplitude: f64 },
}

impl Output {
    pub fn label(&self) -> String {
        match self {
            Output::State(i) => format!("u{i}"),
            Output::StateSquared(i) => format!("u{i}^2"),
            Output::Signal { .. } => "signal".to_string(),
        }
    }

    pub fn value(&self, u: &DVector<f64>, sigma: &[f64]) -> f64 {
        match self {
            Output::State(i) => u[*i],
            Output::StateSquared(i) => u[*i] * u[*i],
            Output::Signal { mean, amplitude } => mean.value(sigma) + amplitude * u[0],
        }
    }

    /// `dg/du`.
    pub fn state_gradient(&self, u: &DVector<f64>, _sigma: &[f64]) -> DVector<f64> {
        let mut g = DVector::zeros(u.len());
        match self {
            Output::State(i) => g[*i] = 1.0,
            Output::StateSquared(i) => g[*i] = 2.0 * u[*i],
            Output::Signal { amplitude, .. } => g[0] = *amplitude,
        }
        g
    }

    /// Explicit `dg/dsigma` at fixed state.
    pub fn design_gradient(&self, _u: &DVector<f64>, sigma: &[f64]) -> DVector<f64> {
        match self {
            Output::Signal { mean, .. } => DVector::from_vec(mean.gradient(sigma)),
            _ => DVector::zeros(sigma.len()),
        }
    }

    pub fn validate(&self, model: &Model) -> Result<()> {
        let index = match self {
            Output::State(i) | Output::StateSquared(i) => *i,
            Output::Signal { .. } => 0,
        };
        if index >= model.state_dim() {
            return Err(Error::Config(format!(
                "output refers to state component {index}, model has {}",
                model.state_dim()
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(x)
    }

    fn fd_jacobian(model: &Model, u: &DVector<f64>, sigma: &[f64], t: f64) -> DMatrix<f64> {
        let h = 1e-6;
        let n = u.len();
        let mut jac = DMatrix::zeros(n, n);
        for j in 0..n {
            let mut up = u.clone();
            let mut um = u.clone();
            up[j] += h;
            um[j] -= h;
            let col = (model.residual(&up, sigma, t).unwrap() - model.residual(&um, sigma, t).unwrap())
                / (2.0 * h);
            jac.set_column(j, &col);
        }
        jac
    }

    fn fd_design(model: &Model, u: &DVector<f64>, sigma: &[f64], t: f64) -> DMatrix<f64> {
        let h = 1e-6;
        let mut jac = DMatrix::zeros(u.len(), sigma.len());
        for j in 0..sigma.len() {
            let mut sp = sigma.to_vec();
            let mut sm = sigma.to_vec();
            sp[j] += h;
            sm[j] -= h;
            let col = (model.residual(u, &sp, t).unwrap() - model.residual(u, &sm, t).unwrap()) / (2.0 * h);
            jac.set_column(j, &col);
        }
        jac
    }

    fn all_models() -> Vec<(Model, Vec<f64>)> {
        vec![
            (Model::van_der_pol(), vec![1.3]),
            (Model::ForcedOscillator(ForcedOscillator::default()), vec![0.1, -0.2]),
            (
                Model::AnalyticSignal(AnalyticSignalSpec {
                    mean: MeanMap::affine(1.0, vec![0.5]),
                    amplitude: 1.0,
                    base_period: 2.0,
                    growth_rate: 0.0,
                }),
                vec![0.15],
            ),
            (
                Model::Linear(LinearSystem {
                    matrix: vec![vec![0.5, -1.0], vec![2.0, 0.3]],
                    initial: vec![1.0, 0.0],
                }),
                vec![0.4],
            ),
        ]
    }

    #[test]
    fn van_der_pol_residual_examples() {
        let m = Model::van_der_pol();
        assert_eq!(m.residual(&v(&[0.0, 0.0]), &[1.0], 0.0).unwrap(), v(&[0.0, 0.0]));
        assert_eq!(m.residual(&v(&[1.0, 1.0]), &[0.0], 0.0).unwrap(), v(&[-1.0, 1.0]));
    }

    #[test]
    fn van_der_pol_jacobian_examples() {
        let m = Model::van_der_pol();
        let j = m.residual_jacobian(&v(&[0.0, 0.0]), &[1.0], 0.0).unwrap();
        assert_eq!(j, DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, -1.0]));
        // mu = 0: the generator of a rotation, independent of the state.
        let a = m.residual_jacobian(&v(&[0.3, -2.0]), &[0.0], 0.0).unwrap();
        let b = m.residual_jacobian(&v(&[-1.7, 0.4]), &[0.0], 0.0).unwrap();
        assert_eq!(a, DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]));
        assert_eq!(a, b);
    }

    #[test]
    fn van_der_pol_design_derivative_examples() {
        let m = Model::van_der_pol();
        let d = m.residual_design_derivative(&v(&[1.0, 1.0]), &[1.0], 0.0).unwrap();
        assert_eq!(d.column(0).into_owned(), v(&[0.0, 0.0]));
        let d = m.residual_design_derivative(&v(&[0.0, 1.0]), &[1.0], 0.0).unwrap();
        assert_eq!(d.column(0).into_owned(), v(&[0.0, -1.0]));
    }

    #[test]
    fn forced_oscillator_zero_state_is_forcing_only() {
        let f = ForcedOscillator::default();
        let m = Model::ForcedOscillator(f.clone());
        let t = 0.7;
        let r = m.residual(&v(&[0.0, 0.0]), &[0.3, 0.1], t).unwrap();
        assert_eq!(r, v(&[0.0, -f.forcing * (f.omega * t).cos()]));
    }

    #[test]
    fn jacobians_match_finite_differences() {
        let states = [[0.3, -0.8], [1.9, 0.4], [-1.1, 2.2], [0.05, -0.01]];
        for (model, sigma) in all_models() {
            for s in states {
                let u = v(&s);
                let t = 1.234;
                let exact = model.residual_jacobian(&u, &sigma, t).unwrap();
                let fd = fd_jacobian(&model, &u, &sigma, t);
                assert!((exact - fd).amax() < 1e-6, "{}", model.name());
                let exact = model.residual_design_derivative(&u, &sigma, t).unwrap();
                let fd = fd_design(&model, &u, &sigma, t);
                assert!((exact - fd).amax() < 1e-6, "{}", model.name());
            }
        }
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let m = Model::van_der_pol();
        assert!(matches!(
            m.residual(&v(&[1.0, 2.0, 3.0]), &[1.0], 0.0),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            m.residual_jacobian(&v(&[1.0, 2.0]), &[1.0, 2.0], 0.0),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn analytic_output_examples() {
        let spec = AnalyticSignalSpec {
            mean: MeanMap::affine(2.0, vec![0.5]),
            amplitude: 0.0,
            base_period: 1.0,
            growth_rate: 0.0,
        };
        for t in [0.0, 0.3, 10.0] {
            assert_eq!(analytic_output(&spec, t, &[0.2]), 2.1);
            assert_eq!(analytic_output_sensitivity(&spec, t, &[0.2]), vec![0.5]);
        }
        let spec = AnalyticSignalSpec { amplitude: 1.5, ..spec };
        let sigma = [0.2];
        let period = spec.period(&sigma);
        assert!((analytic_output(&spec, period, &sigma) - 2.1).abs() < 1e-14);
    }

    #[test]
    fn analytic_sensitivity_matches_finite_differences() {
        let spec = AnalyticSignalSpec {
            mean: MeanMap {
                offset: 1.0,
                slope: vec![0.5, -0.25],
                curvature: 0.3,
                center: vec![0.1, 0.2],
            },
            amplitude: 0.8,
            base_period: 1.7,
            growth_rate: 0.0,
        };
        let sigma = [0.12, -0.4];
        for t in [0.0, 0.9, 7.3, 30.0] {
            let exact = analytic_output_sensitivity(&spec, t, &sigma);
            for j in 0..2 {
                let h = 1e-6;
                let mut sp = sigma;
                let mut sm = sigma;
                sp[j] += h;
                sm[j] -= h;
                let fd = (analytic_output(&spec, t, &sp) - analytic_output(&spec, t, &sm)) / (2.0 * h);
                assert!((fd - exact[j]).abs() < 1e-6 * (1.0 + t), "t={t} j={j}");
            }
        }
    }

    #[test]
    fn analytic_sensitivity_envelope_grows() {
        let mut spec = AnalyticSignalSpec {
            mean: MeanMap::affine(0.0, vec![0.0]),
            amplitude: 1.0,
            base_period: 1.0,
            growth_rate: 0.0,
        };
        // Envelope over one period around time t (period term only).
        let envelope = |spec: &AnalyticSignalSpec, t0: f64| {
            (0..200)
                .map(|i| analytic_output_sensitivity(spec, t0 + i as f64 / 200.0, &[0.0])[0].abs())
                .fold(0.0, f64::max)
        };
        let e10 = envelope(&spec, 10.0);
        let e20 = envelope(&spec, 20.0);
        // Linear growth: doubling t roughly doubles the envelope.
        assert!((e20 / e10 - 2.0).abs() < 0.15);
        spec.growth_rate = 0.1;
        let e10 = envelope(&spec, 10.0);
        let e20 = envelope(&spec, 20.0);
        assert!(e20 / e10 > 2.0 * 1.0f64.exp() * 0.9);
    }

    #[test]
    fn output_gradients() {
        let u = v(&[1.5, -2.0]);
        let o = Output::StateSquared(0);
        assert_eq!(o.value(&u, &[0.0]), 2.25);
        assert_eq!(o.state_gradient(&u, &[0.0]), v(&[3.0, 0.0]));
        let s = Output::Signal {
            mean: MeanMap::affine(1.0, vec![2.0]),
            amplitude: 0.5,
        };
        assert_eq!(s.value(&u, &[0.25]), 1.0 + 0.5 + 0.75);
        assert_eq!(s.design_gradient(&u, &[0.25]), v(&[2.0]));
        assert!(Output::State(2).validate(&Model::van_der_pol()).is_err());
    }

    #[test]
    fn design_vector_box() {
        let d = DesignVector::new(vec![1.0], vec![0.5], vec![2.0]).unwrap();
        assert_eq!(d.project(&[3.0]), vec![2.0]);
        assert_eq!(d.project(&[0.1]), vec![0.5]);
        assert!(d.with_values(vec![2.5]).is_err());
        assert!(DesignVector::new(vec![3.0], vec![0.5], vec![2.0]).is_err());
        assert!(DesignVector::new(vec![1.0], vec![0.5, 0.0], vec![2.0]).is_err());
    }
}
