use felab::dynamics::{Dynamics, SimParams, TrajectoryState};
use felab::error::FelabError;
use felab::forcing::ForcingConfig;
use felab::rng::StreamId;
use felab::spectral::{sobolev_norm, sobolev_norm_sq, Grid2D, SpectralField};
use felab::observables::*;

#[test]
fn alpha_schedule() {
    let s = SmoothingSchedule::new(1.0, 0.5).unwrap();
    assert_eq!(s.alpha_at(0.0), 0.0);
    assert_eq!(s.alpha_at(0.25), 0.5);
    assert_eq!(s.alpha_at(5.0), 1.0);
    assert_eq!(s.alpha_at(0.5), 1.0);
    let mut last = 0.0;
    for i in 0..100 {
        let t = 0.01 * i as f64;
        let a = s.alpha_at(t);
        assert!(a >= last);
        assert!((a - last) <= s.lipschitz() * 0.01 + 1e-15);
        last = a;
    }
    assert!(SmoothingSchedule::new(-1.0, 1.0).is_err());
    assert!(SmoothingSchedule::new(1.0, 0.0).is_err());
    let c = ControlSchedule { r: 2.5, gamma: 0.5 };
    assert_eq!(c.s_at(0.0), 1.5);
    assert_eq!(c.s_at(1.0), 2.0);
    assert_eq!(c.s_at(10.0), 2.5);
}

#[test]
fn series_ordering_and_csv() {
    let mut a = MomentSeries::new("x", vec![0.0, 1.0]).unwrap();
    a.push(3, vec![1.0, 2.0]).unwrap();
    a.push(1, vec![3.0, 4.0]).unwrap();
    let mut b = MomentSeries::new("x", vec![0.0, 1.0]).unwrap();
    b.push(1, vec![3.0, 4.0]).unwrap();
    let mut c = MomentSeries::new("x", vec![0.0, 1.0]).unwrap();
    c.push(3, vec![1.0, 2.0]).unwrap();
    b.merge(c).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.mean(), vec![2.0, 3.0]);
    assert!(a.push(1, vec![0.0, 0.0]).is_err());
    assert!(a.push(5, vec![0.0]).is_err());
    let csv = a.to_csv();
    assert!(csv.starts_with("t,trajectory_id,value\n"));
    assert_eq!(csv.lines().count(), 5);
    assert!(MomentSeries::new("y", vec![0.0, 0.0]).is_err());
}

fn single_mode_linear(gamma: f64) -> (Dynamics, SpectralField) {
    let mut p = SimParams::new(gamma, 16, 0.01, 1.0);
    p.nonlinear = false;
    let d = Dynamics::new(&p, &ForcingConfig::none()).unwrap();
    let w = SpectralField::single_mode(d.grid(), (2, 1), 1.0, false).unwrap();
    (d, w)
}

#[test]
fn smoothing_linear_closed_form() {
    let gamma = 1.0;
    let (d, w0) = single_mode_linear(gamma);
    let mut s = TrajectoryState::new(w0.clone(), StreamId::new(0, 0));
    let sched = SmoothingSchedule::new(0.0, 1.0).unwrap();
    let (r, q) = (2.0, 4.0);
    let mut rec = SmoothingRecorder::new(sched, r, q, gamma);
    rec.observe(0.0, &s.omega);
    for _ in 0..100 {
        s = d.step_main(&s).unwrap();
        rec.observe(s.t, &s.omega);
    }
    let tr = rec.finish();
    let n0 = sobolev_norm(&w0, r);
    assert!((tr.running_sup[100] - n0.powf(q)).abs() < 1e-12 * n0.powf(q));
    // integrand = |k|^γ N0^q e^{-q|k|^γ t}
    let lam = 5f64.sqrt().powf(gamma);
    let exact = n0.powf(q) * (1.0 - (-q * lam).exp()) / q;
    let rel = (tr.dissipation[100] - exact).abs() / exact;
    assert!(rel < 1e-3, "rel={rel}");
    let n1 = n0 * (-lam).exp();
    assert!((tr.norm[100] - n1).abs() < 1e-12 * n1);
}

#[test]
fn kappa_budget_examples() {
    let b = kappa_zero(4.0, &ForcingConfig::none(), 1.0).unwrap();
    assert_eq!(b.kappa, 0.5);
    assert_eq!(KappaBudget::max_kappa(3.0, 1.0), 0.125);
    let cfg = ForcingConfig::ball(2.0, 1.0, 0.1).unwrap();
    let mut last = f64::INFINITY;
    for f in [1.0, 2.0, 4.0] {
        let k = kappa_zero(4.0, &cfg.scaled(f), 1.0).unwrap();
        assert!(k.kappa < last);
        assert!(k.kappa * k.factor() <= 0.5 * (1.0 + 1e-15));
        last = k.kappa;
    }
    let k1 = kappa_zero(4.0, &cfg, 1.0).unwrap();
    let k2 = kappa_zero(4.0, &cfg.scaled(2.0), 1.0).unwrap();
    assert!(((k2.factor() - 1.0) / (k1.factor() - 1.0) - 4.0).abs() < 1e-10);
    assert!(kappa_zero(3.0, &cfg, 1.0).is_err());
}

#[test]
fn exp_estimators() {
    let b = kappa_zero(4.0, &ForcingConfig::ball(2.0, 1.0, 0.1).unwrap(), 1.0).unwrap();
    let vals = [0.3, 1.0, 2.0, 0.5];
    let e = exp_moment_estimator(&vals, 0.0, &b).unwrap();
    assert_eq!(e.mean, 1.0);
    assert_eq!(e.ci.width(), 0.0);
    assert!(matches!(
        exp_moment_estimator(&vals, 2.0 * b.kappa, &b),
        Err(FelabError::KappaBudget { .. })
    ));
    let e = exp_moment_estimator(&[0.0; 8], b.kappa, &b).unwrap();
    assert_eq!(e.mean, 1.0);
    let i = exp_time_integral_estimator(&[2.0, 2.0], b.kappa, &b).unwrap();
    assert!((i.mean - (2.0 * b.kappa).exp()).abs() < 1e-15);
}

#[test]
fn exp_time_integral_closed_form() {
    // σ = 0, B off: ‖ω(t)‖²_{L²} = N0² e^{-2|k|^γ t}
    let gamma = 0.5;
    let (d, w0) = single_mode_linear(gamma);
    let budget = kappa_zero(2.0, &ForcingConfig::none(), gamma).unwrap();
    let mut s = TrajectoryState::new(w0.clone(), StreamId::new(0, 0));
    let mut acc = TimeIntegral::default();
    acc.push(0.0, sobolev_norm_sq(&s.omega, 0.0));
    for _ in 0..100 {
        s = d.step_main(&s).unwrap();
        acc.push(s.t, sobolev_norm_sq(&s.omega, 0.0));
    }
    let lam = 5f64.sqrt().powf(gamma);
    let n0 = sobolev_norm_sq(&w0, 0.0);
    let exact = n0 * (1.0 - (-2.0 * lam).exp()) / (2.0 * lam);
    let kappa = 0.1;
    let est = exp_time_integral_estimator(&[acc.value], kappa, &budget).unwrap();
    // trapezoid error O(dt²)
    assert!(((est.mean - (kappa * exact).exp()) / (kappa * exact).exp()).abs() < 1e-4);
}

#[test]
fn decay_fits() {
    let t: Vec<f64> = (0..50).map(|i| 0.1 * i as f64).collect();
    for a in [-10.0, -2.0, 0.0, 3.0, 10.0] {
        let v: Vec<f64> = t.iter().map(|x| (a * x).exp()).collect();
        let f = fit_log_slope(&t, &v, (0.0, 10.0)).unwrap();
        assert!((f.slope - a).abs() < 1e-10, "a={a}");
    }
    let mut s = MomentSeries::new("c", t.clone()).unwrap();
    s.push(0, vec![2.0; 50]).unwrap();
    assert!(fit_decay_rate(&s, (0.0, 5.0)).unwrap().slope.abs() < 1e-14);
    let mut z = MomentSeries::new("z", t.clone()).unwrap();
    let mut vals = vec![1.0; 50];
    vals[3] = 0.0;
    z.push(0, vals).unwrap();
    assert!(matches!(fit_decay_rate(&z, (0.0, 5.0)), Err(FelabError::NonPositive { .. })));
}

#[test]
fn control_mode_decay_slope() {
    // ω = 0, ρ = e_k with |k| = 1, γ = 1, N = 2: ‖ρ‖² decays at 2(1 + N)
    let p = SimParams::new(1.0, 16, 0.01, 1.0);
    let d = Dynamics::new(&p, &ForcingConfig::none()).unwrap();
    let zero = SpectralField::zeros(d.grid());
    let mut rho = SpectralField::single_mode(d.grid(), (1, 0), 1.0, false).unwrap();
    let mut s = MomentSeries::new("rho", (0..=50).map(|i| 0.01 * i as f64).collect()).unwrap();
    let mut vals = vec![sobolev_norm_sq(&rho, 0.0)];
    for _ in 0..50 {
        rho = d.step_control(&rho, &zero, 2).unwrap();
        vals.push(sobolev_norm_sq(&rho, 0.0));
    }
    s.push(0, vals).unwrap();
    let f = fit_decay_rate(&s, (0.0, 1.0)).unwrap();
    assert!((f.slope + 2.0 * (1.0 + 2.0)).abs() < 1e-10);
}

#[test]
fn time_average_trivial() {
    let g = Grid2D::new(16).unwrap();
    let w = SpectralField::single_mode(&g, (1, 0), 1.0, false).unwrap();
    let fs = vec![Functional::Constant, Functional::TanhEnergy { scale: 10.0 }];
    let mut a = TimeAverager::new(fs.clone(), 1.0);
    let mut b = TimeAverager::new(fs, 1.0);
    for i in 0..=10 {
        a.observe(0.1 * i as f64, &w);
        b.observe(0.1 * i as f64, &w);
    }
    let r = time_average_diagnostic(&a, &b).unwrap();
    assert_eq!(r.sup_difference, 0.0);
    assert!(r.all_agree);
    assert!((r.functionals[0].avg[0] - 1.0).abs() < 1e-15);
    assert!(Functional::SpectrumBand { lo: 0.0, hi: 2.0, scale: 1.0 }.eval(&w) > 0.0);
    assert_eq!(Functional::LowMode { k: (3, 0), scale: 1.0 }.eval(&w), 0.0);
}
