use super::*;
use crate::model::C_LIGHT;
use proptest::prelude::*;

fn beam(e0: f64, phi: f64) -> BeamConfig {
    BeamConfig::plane_wave(e0, 30e-9, phi)
}

fn el(v: f64) -> ElectronConfig {
    ElectronConfig::plane_wave(v)
}

/// Absorptive population as a plain double sum at a fixed cap.
fn brute_absorptive(l: i64, o: i64, ac: f64, as_: f64, cap: i64) -> f64 {
    let jc = BesselTable::new(ac, cap as usize);
    let js = BesselTable::new(as_, 3 * cap as usize);
    let mut acc = Complex64::new(0.0, 0.0);
    for m in -cap..=cap {
        for n in -cap..=cap {
            let t = js.get(n - l) * js.get(m - o) * jc.get(n) * jc.get(m);
            acc += i_pow(-(m + n)) * t;
        }
    }
    acc.norm_sqr()
}

/// Combined population as a plain triple sum at a fixed cap.
fn brute_combined(l: i64, o: i64, ac: f64, as_: f64, b: f64, cap: i64) -> f64 {
    let jb = BesselTable::new(b, cap as usize);
    let jc = BesselTable::new(ac, cap as usize);
    let js = BesselTable::new(as_, 4 * cap as usize);
    let mut acc = Complex64::new(0.0, 0.0);
    for p in -cap..=cap {
        for n in -cap..=cap {
            for m in -cap..=cap {
                let t = jb.get(p) * jc.get(n) * jc.get(m) * js.get(n + p - l) * js.get(m - o - p);
                acc += i_pow(p - (l + n + o + m)) * t;
            }
        }
    }
    acc.norm_sqr()
}

#[test]
fn coupling_example_matches_constant_substitution() {
    let b = beam(200e9, 50.0);
    let e = el(0.03);
    let w = InteractionWindow::from_periods(0.3, &b).unwrap();
    let cp = coupling_params(&b, &e, &w, 0.0).unwrap();
    // K = e k_el E0 / (ω² m0) = e v E0 / (ħ ω²)
    let (q, hbar, c) = (1.602176634e-19, 1.054571817e-34, 299792458.0);
    let omega = 2.0 * std::f64::consts::PI * c / 30e-9;
    let k = q * 0.03 * c * 200e9 / (hbar * omega * omega) * 50f64.to_radians().sin();
    let ph = omega * w.delta_t;
    let ac = k * (1.0 - ph.cos());
    let as_ = k * ph.sin();
    assert!((cp.alpha_c / ac - 1.0).abs() < 1e-12, "{} vs {}", cp.alpha_c, ac);
    assert!((cp.alpha_s / as_ - 1.0).abs() < 1e-12, "{} vs {}", cp.alpha_s, as_);
    assert_eq!(cp.beta, 0.0);
}

#[test]
fn couplings_vanish_at_normal_axis_and_whole_periods() {
    let e = el(0.03);
    let b0 = beam(200e9, 0.0);
    let w = InteractionWindow::from_periods(0.3, &b0).unwrap();
    let cp = coupling_params(&b0, &e, &w, 1e-9).unwrap();
    assert_eq!((cp.alpha_c, cp.alpha_s), (0.0, 0.0));
    let b = beam(200e9, 50.0);
    for n in 1..=3 {
        let w = InteractionWindow::from_periods(n as f64, &b).unwrap();
        let cp = coupling_params(&b, &e, &w, 0.0).unwrap();
        assert_eq!((cp.alpha_c, cp.alpha_s), (0.0, 0.0));
    }
}

#[test]
fn coupling_signs_over_one_period() {
    let b = beam(200e9, 50.0);
    let e = el(0.03);
    for i in 1..100 {
        let f = i as f64 / 100.0;
        let cp = coupling_params(&b, &e, &InteractionWindow::from_periods(f, &b).unwrap(), 0.0).unwrap();
        assert!(cp.alpha_c >= 0.0);
        if f < 0.5 {
            assert!(cp.alpha_s > 0.0);
        } else if f > 0.5 {
            assert!(cp.alpha_s < 0.0);
        }
    }
}

#[test]
fn beta_zero_cases() {
    let e = el(0.05);
    assert_eq!(ponderomotive_argument(&beam(300e9, 45.0), &e, 1e-6).unwrap(), 0.0);
    assert_eq!(ponderomotive_argument(&beam(0.0, 30.0), &e, 1e-6).unwrap(), 0.0);
    assert_eq!(ponderomotive_argument(&beam(300e9, 30.0), &e, 0.0).unwrap(), 0.0);
    assert!(coupling_params(&beam(1e9, 30.0), &el(0.0), &InteractionWindow { delta_t: 0.0, periods: 0.0 }, 0.0)
        .is_err());
}

#[test]
fn forty_five_degrees_cancels_diffraction() {
    for &(e0, v) in &[(1e9, 0.01), (400e9, 0.1), (50e9, 0.003)] {
        for n in -5..=5 {
            let p = p_ponderomotive(n, &beam(e0, 45.0), &el(v), 3e-7).unwrap();
            assert_eq!(p, if n == 0 { 1.0 } else { 0.0 });
        }
    }
}

#[test]
fn ninety_degrees_flips_sign_only() {
    let (b, e, x) = (beam(150e9, 90.0), el(0.02), 2e-8);
    let beta = ponderomotive_argument(&b, &e, x).unwrap();
    let kd = normal_kd_argument(&b, &e, x).unwrap();
    assert_eq!(beta, -kd);
    for n in -4..=4 {
        let p = p_ponderomotive(n, &b, &e, x).unwrap();
        assert!((p - bessel::bessel_j(n, kd).powi(2)).abs() < 1e-15);
    }
}

#[test]
fn zero_coupling_is_delta() {
    for l in -2..=2 {
        for o in -2..=2 {
            let p = p_absorptive(OrderState::new(l, o), &CouplingParams::ZERO, 1e-12).unwrap();
            assert_eq!(p, if l == 0 && o == 0 { 1.0 } else { 0.0 });
        }
    }
}

#[test]
fn absorptive_matches_brute_force_and_graf_closed_form() {
    for &(ac, as_) in &[(0.3, 0.9), (2.5, -1.7), (6.0, 4.0), (0.0, 3.3)] {
        let cp = CouplingParams::new(ac, as_, 0.0);
        let rho = f64::hypot(ac, as_);
        for l in -3..=3 {
            for o in -3..=3 {
                let st = OrderState::new(l, o);
                let got = p_absorptive(st, &cp, 1e-13).unwrap();
                let brute = brute_absorptive(l, o, ac, as_, 40);
                let graf = (bessel::bessel_j(l, rho) * bessel::bessel_j(o, rho)).powi(2);
                assert!((got - brute).abs() < 1e-12, "({l},{o}) {got} {brute}");
                assert!((got - graf).abs() < 1e-12, "({l},{o}) {got} {graf}");
            }
        }
    }
}

#[test]
fn combined_matches_brute_force() {
    for &(ac, as_, b) in &[(0.4, 1.1, 0.7), (1.5, -0.8, -2.2), (2.0, 1.0, 3.0)] {
        let cp = CouplingParams::new(ac, as_, b);
        for &(l, o) in &[(0, 0), (1, -1), (1, 0), (-2, 1), (2, 2)] {
            let got = p_combined(OrderState::new(l, o), &cp, 1e-13).unwrap();
            let brute = brute_combined(l, o, ac, as_, b, 24);
            assert!((got - brute).abs() < 1e-12, "({l},{o}) {got} {brute}");
        }
    }
}

#[test]
fn four_equal_first_order_states() {
    let b = beam(200e9, 50.0);
    let cp = coupling_params(&b, &el(0.03), &InteractionWindow::from_periods(0.3, &b).unwrap(), 0.0).unwrap();
    let p = |l, o| p_absorptive(OrderState::new(l, o), &cp, 1e-13).unwrap();
    let base = p(1, -1);
    assert!(base > 1e-6);
    for (l, o) in [(-1, 1), (1, 1), (-1, -1)] {
        assert!((p(l, o) - base).abs() < 1e-14, "({l},{o})");
    }
}

#[test]
fn combined_reduces_to_limits() {
    let cp = CouplingParams::new(1.3, -2.1, 0.0);
    let cq = CouplingParams::new(0.0, 0.0, 2.7);
    for l in -3..=3 {
        for o in -3..=3 {
            let st = OrderState::new(l, o);
            let a = p_absorptive(st, &cp, 1e-13).unwrap();
            let c = p_combined(st, &cp, 1e-13).unwrap();
            assert!((a - c).abs() < 1e-12);
            let pc = p_combined(st, &cq, 1e-13).unwrap();
            let want = if o == -l { bessel::bessel_j(l, 2.7).powi(2) } else { 0.0 };
            assert!((pc - want).abs() < 1e-12, "({l},{o})");
        }
    }
}

#[test]
fn truncation_cap_is_reported() {
    let cp = CouplingParams::new(300.0, 0.0, 0.0);
    assert!(matches!(p_absorptive(OrderState::new(0, 0), &cp, 1e-10), Err(Error::Truncation { .. })));
    assert!(p_absorptive(OrderState::new(0, 0), &CouplingParams::ZERO, 0.0).is_err());
}

#[test]
fn table_is_schedule_independent() {
    let cp = CouplingParams::new(3.1, 2.2, -4.5);
    let a = population_table(Channel::Combined, &cp, 1e-10, Exec::Sequential).unwrap();
    let b = population_table(Channel::Combined, &cp, 1e-10, Exec::Parallel).unwrap();
    assert_eq!(a, b);
    assert!(a.residual < 1e-10 && a.residual > -1e-9);
    assert!(a.to_csv().starts_with("l,o,probability,truncation,residual\n"));
    let p = population_table(Channel::Ponderomotive, &cp, 1e-12, Exec::Sequential).unwrap();
    assert!(p.entries.keys().all(|s| s.o == -s.l));
    assert!((p.get(2, -2) - bessel::bessel_j(2, -4.5).powi(2)).abs() < 1e-15);
}

#[test]
fn free_wavefunction_without_field() {
    let b = beam(0.0, 50.0);
    let e = el(0.03);
    let cp = coupling_params(&b, &e, &InteractionWindow::from_periods(0.3, &b).unwrap(), 1e-8).unwrap();
    let norm = (2.0 * std::f64::consts::PI).powf(-1.5);
    for &(x, y, t) in &[(0.0, 0.0, 0.0), (3e-9, -7e-9, 1e-15), (1e-7, 2e-8, 4e-14)] {
        let got = wavefunction_analytic([x, y], t, &cp, &b, &e, 1e-12).unwrap();
        let want = Complex64::from_polar(norm, e.k_el() * x - e.omega_kin() * t);
        assert!((got - want).norm() < 1e-14 * norm, "{got} {want}");
    }
    assert!(AnalyticWavefunction::new(&cp, &b, &ElectronConfig::packet(0.03, 1e-9, 1e-9), 1e-9).is_err());
}

#[test]
fn lattice_sum_fourier_modes_are_populations() {
    // sample one period in (u, w) = (k1·r, k2·r) and project on each mode
    let b = beam(200e9, 50.0);
    let cp = CouplingParams { alpha_c: 0.8, alpha_s: 1.4, beta: -1.1, global_phase_rate: 0.0 };
    let wf = AnalyticWavefunction::new(&cp, &b, &el(0.03), 1e-13).unwrap();
    let (k, (s, c)) = (b.k_ph(), b.phi.radians().sin_cos());
    let n = 64;
    let h = 2.0 * std::f64::consts::PI / n as f64;
    let mut samples = vec![Complex64::new(0.0, 0.0); n * n];
    for i in 0..n {
        for j in 0..n {
            let (u, w) = (i as f64 * h, j as f64 * h);
            samples[i * n + j] = wf.lattice_sum((u + w) / (2.0 * k * c), (u - w) / (2.0 * k * s));
        }
    }
    let table = population_table(Channel::Combined, &cp, 1e-13, Exec::Sequential).unwrap();
    let mut total = 0.0;
    for l in -4i64..=4 {
        for o in -4i64..=4 {
            let mut acc = Complex64::new(0.0, 0.0);
            for i in 0..n {
                for j in 0..n {
                    let ph = -(l as f64 * i as f64 + o as f64 * j as f64) * h;
                    acc += samples[i * n + j] * Complex64::from_polar(1.0, ph);
                }
            }
            let p = (acc / (n * n) as f64).norm_sqr();
            total += p;
            assert!((p - table.get(l, o)).abs() < 1e-12, "({l},{o})");
        }
    }
    assert!(total > 0.999);
}

#[test]
fn normal_kd_wavefunction_has_even_harmonics() {
    let b = beam(100e9, 90.0);
    let cp = CouplingParams::new(0.0, 0.0, 1.9);
    let wf = AnalyticWavefunction::new(&cp, &b, &el(0.02), 1e-13).unwrap();
    let k = b.k_ph();
    for &y in &[0.0, 3e-9, 11e-9] {
        let want: Complex64 = (-30i64..=30)
            .map(|n| i_pow(n) * bessel::bessel_j(n, 1.9) * Complex64::from_polar(1.0, 2.0 * n as f64 * k * y))
            .sum();
        let got = wf.lattice_sum(0.0, y);
        assert!((got - want).norm() < 1e-12, "{got} {want}");
    }
}

#[test]
fn interference_criterion_values() {
    assert_eq!(interference_criterion(&el(0.0)), 0.0);
    let want = 2.0 * 9.1093837015e-31 * 0.1 * C_LIGHT / 1.602176634e-19;
    assert!((interference_criterion(&el(0.1)) / want - 1.0).abs() < 1e-15);
    assert_eq!(interference_criterion(&el(0.04)), 2.0 * interference_criterion(&el(0.02)));
}

fn turning_points_over_e0(v: f64) -> usize {
    let e = el(v);
    let vals: Vec<f64> = (0..=80)
        .map(|i| {
            let b = beam(5e9 * i as f64, 50.0);
            let w = InteractionWindow::from_periods(0.3, &b).unwrap();
            let cp = coupling_params(&b, &e, &w, e.v_el() * w.delta_t).unwrap();
            p_combined(OrderState::new(1, -1), &cp, 1e-12).unwrap()
        })
        .collect();
    vals.windows(3).filter(|w| (w[1] - w[0]) * (w[2] - w[1]) < 0.0).count()
}

#[test]
fn e0_map_oscillates_for_first_order() {
    // with x = v δt the oscillation only develops at intermediate and high
    // velocities; at 0.03c the first order rises monotonically up to 400 GV/m
    let turns: Vec<usize> = [0.03, 0.05, 0.07, 0.1].iter().map(|&v| turning_points_over_e0(v)).collect();
    assert_eq!(turns[0], 0);
    assert!(turns.windows(2).all(|w| w[0] <= w[1]));
    assert!(turns[3] >= 2, "{turns:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn combined_normalization(ac in -20.0f64..20.0, as_ in -20.0f64..20.0, b in -20.0f64..20.0) {
        let t = population_table(Channel::Combined, &CouplingParams::new(ac, as_, b), 1e-8, Exec::Parallel).unwrap();
        prop_assert!((t.total() - 1.0).abs() < 1e-6);
        prop_assert!(t.entries.values().all(|&p| (0.0..=1.0 + 1e-12).contains(&p)));
    }

    #[test]
    fn absorptive_reflection_symmetry(ac in -8.0f64..8.0, as_ in -8.0f64..8.0, l in -4i64..=4, o in -4i64..=4) {
        let cp = CouplingParams::new(ac, as_, 0.0);
        let a = p_absorptive(OrderState::new(l, o), &cp, 1e-13).unwrap();
        let b = p_absorptive(OrderState::new(-l, -o), &cp, 1e-13).unwrap();
        prop_assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn ponderomotive_closure(b in -50.0f64..50.0) {
        let t = BesselTable::new(b, 200);
        let s = sum_real((-200..=200).map(|n| t.get(n).powi(2)));
        prop_assert!((s - 1.0).abs() < 1e-12);
    }
}
