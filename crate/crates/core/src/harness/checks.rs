//! Quick invariant suite run by `kapdirac check`.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::analytic::{self, bessel, Channel, CouplingParams};
use crate::error::Result;
use crate::model::{BeamConfig, ElectronConfig, InteractionWindow};
use crate::par::Exec;
use crate::tdse::{self, Grid2D, Hamiltonian, HamiltonianMode, PropagatorConfig};

use super::scan::h1_h2_gap;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn outcome(name: &'static str, err: f64, limit: f64) -> CheckOutcome {
    CheckOutcome { name, passed: err <= limit, detail: format!("error {err:.3e} (limit {limit:.0e})") }
}

fn cancellation_at_45() -> Result<CheckOutcome> {
    let beam = BeamConfig::plane_wave(400e9, 30e-9, 45.0);
    let mut err = 0.0f64;
    for v in [0.005, 0.03, 0.1] {
        let e = ElectronConfig::plane_wave(v);
        for n in -5..=5 {
            let p = analytic::p_ponderomotive(n, &beam, &e, 1e-6)?;
            err = err.max((p - f64::from(n == 0)).abs());
        }
    }
    Ok(outcome("phi=45 deg cancels ponderomotive diffraction", err, 0.0))
}

fn unitarity(rng: &mut ChaCha8Rng) -> Result<CheckOutcome> {
    let mut err = 0.0f64;
    for _ in 0..5 {
        let cp = CouplingParams::new(rng.random_range(-8.0..8.0), rng.random_range(-8.0..8.0), rng.random_range(-8.0..8.0));
        for ch in [Channel::Ponderomotive, Channel::Absorptive, Channel::Combined] {
            let t = analytic::population_table(ch, &cp, 1e-10, Exec::Parallel)?;
            err = err.max((t.total() - 1.0).abs());
        }
    }
    Ok(outcome("population tables sum to one", err, 1e-6))
}

fn rabi_return() -> Result<CheckOutcome> {
    let beam = BeamConfig::plane_wave(300e9, 30e-9, 50.0);
    let e = ElectronConfig::plane_wave(0.05);
    let mut err = 0.0f64;
    for n in 1..=3 {
        let w = InteractionWindow::from_periods(n as f64, &beam)?;
        let mut cp = analytic::coupling_params(&beam, &e, &w, 0.0)?;
        cp.beta = 0.0;
        let t = analytic::population_table(Channel::Absorptive, &cp, 1e-12, Exec::Sequential)?;
        err = err.max((t.get(0, 0) - 1.0).abs()).max(t.total() - t.get(0, 0));
    }
    Ok(outcome("absorptive populations return to |0,0> after whole periods", err, 0.0))
}

fn gap_zero() -> CheckOutcome {
    let e = ElectronConfig::plane_wave(0.05);
    let mut b = BeamConfig::plane_wave(0.0, 1250e-9, 50.0);
    b.e0 = analytic::interference_criterion(&e) * b.omega();
    let scale = (crate::model::E_CHARGE * b.a0()).powi(2) / (2.0 * crate::model::M_ELECTRON);
    outcome("|H1 - H2| vanishes at A0 = 2 m v / e", h1_h2_gap(&b, &e) / scale, 1e-12)
}

fn bessel_sum_rule() -> CheckOutcome {
    let mut err = 0.0f64;
    for x in [0.5, 7.0, 33.0, 120.0] {
        let t = bessel::BesselTable::new(x, x as usize + 60);
        let s: f64 = (-(t.n_max() as i64)..=t.n_max() as i64).map(|n| t.get(n).powi(2)).sum();
        err = err.max((s - 1.0).abs());
    }
    outcome("Bessel sum rule", err, 1e-13)
}

fn hermiticity(rng: &mut ChaCha8Rng) -> Result<CheckOutcome> {
    let g = Grid2D::centered(32, 32, 0.5e-9, 0.5e-9)?;
    let beam = BeamConfig::plane_wave(300e9, 30e-9, 50.0);
    let mut worst = 0.0f64;
    for mode in [HamiltonianMode::Full, HamiltonianMode::PonderomotiveOnly] {
        let mut h = Hamiltonian::new(g, mode, 0.03 * crate::model::C_LIGHT, Exec::Parallel);
        h.set_field(&beam, 1.3e-16);
        let mut rand_vec = || -> Vec<Complex64> {
            (0..g.len()).map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect()
        };
        let (u, v) = (rand_vec(), rand_vec());
        let (mut hu, mut hv) = (vec![Complex64::default(); g.len()], vec![Complex64::default(); g.len()]);
        h.apply(&u, &mut hu);
        h.apply(&v, &mut hv);
        let a: Complex64 = u.iter().zip(&hv).map(|(x, y)| x.conj() * y).sum();
        let b: Complex64 = hu.iter().zip(&v).map(|(x, y)| x.conj() * y).sum();
        worst = worst.max((a - b).norm() / a.norm().max(b.norm()));
    }
    Ok(outcome("Hamiltonian is Hermitian", worst, 1e-10))
}

fn tdse_norm() -> Result<CheckOutcome> {
    let beam = BeamConfig::plane_wave(200e9, 30e-9, 50.0);
    let e = ElectronConfig::packet(0.03, 4e-9, 6e-9);
    let g = Grid2D::centered(64, 64, 0.5e-9, 0.5e-9)?;
    let cfg = PropagatorConfig { mode: HamiltonianMode::PonderomotiveOnly, ..PropagatorConfig::for_beam(&beam, 40) };
    let sched = tdse::Schedule { t_end: 2.0 * beam.period(), snapshot_every: 0, free_flight: 0.0 };
    let out = tdse::run(&e, &beam, &g, &cfg, &sched, Exec::Parallel)?;
    Ok(outcome("TDSE norm conservation over 80 steps", out.max_norm_drift, 1e-9))
}

/// Runs every check; errors inside a check are reported as failures.
pub fn run_checks() -> Vec<CheckOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let wrap = |name: &'static str, r: Result<CheckOutcome>| {
        r.unwrap_or_else(|e| CheckOutcome { name, passed: false, detail: e.to_string() })
    };
    vec![
        wrap("phi=45 deg cancels ponderomotive diffraction", cancellation_at_45()),
        wrap("population tables sum to one", unitarity(&mut rng)),
        wrap("absorptive populations return to |0,0> after whole periods", rabi_return()),
        gap_zero(),
        bessel_sum_rule(),
        wrap("Hamiltonian is Hermitian", hermiticity(&mut rng)),
        wrap("TDSE norm conservation over 80 steps", tdse_norm()),
    ]
}
