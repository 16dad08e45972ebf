use lco::analysis::{analytic_series, convergence_study, windowed_average, Reference, StudyOptions};
use lco::models::{AnalyticSignalSpec, LinearSystem, MeanMap};
use lco::primal::{extended_residual, PseudoTimeConfig};
use lco::windows::window_value;
use lco::{
    adjoint_sweep, discrete_weights, simulate, tangent, windowed_tangent_sensitivity, AdjointConfig, DesignVector,
    Model, Normalization, Output, TimeGrid, WindowKind,
};
use nalgebra::DVector;
use proptest::prelude::*;

fn kind() -> impl Strategy<Value = WindowKind> {
    prop::sample::select(WindowKind::ALL.to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn windows_are_symmetric_and_supported(k in kind(), s in -0.5f64..1.5) {
        let w = window_value(k, s);
        prop_assert!(w >= 0.0 && w.is_finite());
        if s <= 0.0 || s >= 1.0 {
            prop_assert_eq!(w, 0.0);
        } else {
            prop_assert!((w - window_value(k, 1.0 - s)).abs() <= 1e-12 * w.max(1.0));
        }
    }

    #[test]
    fn renormalized_average_of_constant(k in kind(), c in -5.0f64..5.0, tr in 0usize..40, span in 2usize..400) {
        let series = vec![c; tr + span + 1];
        let v = windowed_average(&series, k, tr, tr + span, Normalization::Renormalized).unwrap();
        prop_assert!((v - c).abs() <= 1e-12 * c.abs().max(1.0));
    }

    #[test]
    fn averages_are_linear(k in kind(), a in -3.0f64..3.0, seed in 0u64..1000) {
        let n = 120;
        let x: Vec<f64> = (0..=n).map(|i| ((i as u64 * 31 + seed) % 17) as f64 - 8.0).collect();
        let y: Vec<f64> = (0..=n).map(|i| ((i as u64 * 7 + seed) % 11) as f64).collect();
        let z: Vec<f64> = x.iter().zip(&y).map(|(p, q)| a * p + q).collect();
        let m = Normalization::PaperFaithful;
        let lhs = windowed_average(&z, k, 10, n, m).unwrap();
        let rhs = a * windowed_average(&x, k, 10, n, m).unwrap() + windowed_average(&y, k, 10, n, m).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
    }

    #[test]
    fn projection_stays_in_box(values in prop::collection::vec(-2.0f64..2.0, 3)) {
        let b = DesignVector::new(vec![0.0; 3], vec![-1.0, -0.5, 0.0], vec![1.0, 0.5, 0.0]).unwrap();
        let p = b.project(&values);
        prop_assert!(b.contains(&p));
        prop_assert_eq!(b.project(&p), p);
    }

    #[test]
    fn converged_steps_satisfy_extended_residual(rate in 0.1f64..3.0, dt in 0.01f64..0.5, sigma in -0.5f64..0.5) {
        let m = Model::Linear(LinearSystem {
            matrix: vec![vec![rate, -1.0], vec![1.0, rate]],
            initial: vec![1.0, -0.5],
        });
        let grid = TimeGrid::new(dt, 12, 0).unwrap();
        let traj = simulate(&m, &Output::State(0), &[sigma], &grid, &PseudoTimeConfig::default()).unwrap();
        for n in 2..=12 {
            let r = extended_residual(
                &m, &traj.states[n], &traj.states[n - 1], &traj.states[n - 2], &[sigma], dt, traj.time(n),
            ).unwrap();
            prop_assert!(r.norm() <= 1e-10);
        }
    }

    #[test]
    fn adjoint_equals_tangent_on_linear_models(
        a in 0.05f64..0.5,
        w in 0.5f64..3.0,
        sigma in -0.3f64..0.3,
        k in kind(),
        tr in 0usize..40,
    ) {
        let m = Model::Linear(LinearSystem {
            matrix: vec![vec![a, -w], vec![w, a]],
            initial: vec![1.0, 0.3],
        });
        let out = Output::StateSquared(1);
        let grid = TimeGrid::new(0.05, 120, tr).unwrap();
        let traj = simulate(&m, &out, &[sigma], &grid, &PseudoTimeConfig::default()).unwrap();
        let tan = tangent(&m, &out, &traj).unwrap();
        let weights = discrete_weights(k, tr, 120, Normalization::PaperFaithful).unwrap();
        let t = windowed_tangent_sensitivity(&tan, &weights).unwrap()[0];
        let g = adjoint_sweep(&m, &out, &traj, &weights, &AdjointConfig::default()).unwrap().gradient[0];
        prop_assert!((t - g).abs() <= 1e-6 * t.abs().max(1e-12), "{} vs {}", t, g);
    }
}

/// Error ordering between windows at a fixed span of the closed-form signal.
/// Bump only overtakes Hann-Square once the span is past roughly 25 periods.
#[test]
fn window_hierarchy_on_closed_form_signal() {
    let spec = AnalyticSignalSpec {
        mean: MeanMap::affine(0.5, vec![2.0]),
        amplitude: 1.0,
        base_period: 1.0,
        growth_rate: 0.0,
    };
    let dt = 0.02;
    let series = analytic_series(&spec, &[0.0], dt, 4000);
    let opts = StudyOptions {
        period: Some(1.0),
        ..Default::default()
    };
    let k_list = [5, 8, 16, 32, 48, 64];
    let err = |kind| {
        convergence_study(&series, kind, 0, dt, &k_list, Reference::ClosedForm(0.5), &opts)
            .unwrap()
            .errors
    };
    let (sq, hann, hs, bump) = (
        err(WindowKind::Square),
        err(WindowKind::Hann),
        err(WindowKind::HannSquare),
        err(WindowKind::Bump),
    );
    for i in 0..k_list.len() {
        assert!(hs[i] <= hann[i] && hann[i] <= 10.0 * sq[i], "k={}", k_list[i]);
        if k_list[i] >= 32 {
            assert!(bump[i] <= hs[i], "k={}: bump {} hann-square {}", k_list[i], bump[i], hs[i]);
        }
    }
}

/// The running Square average crosses its limit within every period; smooth
/// windows settle on one side after a few periods.
#[test]
fn square_average_oscillates_about_its_limit() {
    let spec = AnalyticSignalSpec {
        mean: MeanMap::affine(0.5, vec![0.0]),
        amplitude: 1.0,
        base_period: 1.0,
        growth_rate: 0.0,
    };
    let per = 40;
    let series = analytic_series(&spec, &[0.0], 1.0 / per as f64, per * 30 + 1);
    let sign_changes = |kind| {
        let errs: Vec<f64> = (per * 5..=per * 29)
            .map(|end| windowed_average(&series, kind, 0, end, Normalization::PaperFaithful).unwrap() - 0.5)
            .collect();
        // Errors at the round-off floor (integer period counts) carry no sign.
        let signed: Vec<f64> = errs.into_iter().filter(|e| e.abs() > 1e-12).collect();
        signed.windows(2).filter(|w| w[0].signum() != w[1].signum()).count()
    };
    assert!(sign_changes(WindowKind::Square) >= 24);
    for kind in [WindowKind::Hann, WindowKind::HannSquare] {
        assert_eq!(sign_changes(kind), 0, "{kind}");
    }
}

#[test]
fn zero_seed_gives_zero_adjoint_states() {
    let m = Model::van_der_pol();
    let grid = TimeGrid::new(0.2, 80, 20).unwrap();
    let traj = simulate(&m, &Output::State(0), &[1.0], &grid, &PseudoTimeConfig::default()).unwrap();
    let w = discrete_weights(WindowKind::Hann, 20, 80, Normalization::PaperFaithful)
        .unwrap()
        .scaled(0.0);
    let sweep = adjoint_sweep(&m, &Output::State(0), &traj, &w, &AdjointConfig::default()).unwrap();
    assert!(sweep.adjoints.iter().all(|u| *u == DVector::zeros(2)));
}
