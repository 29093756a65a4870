use super::snapshot::{list_snapshots, read_snapshot, write_snapshot, SnapshotFormat, SnapshotMeta};
use super::*;
use crate::diagnostics::{spectrum_of, MomentumWavefunction};

fn beam(e0: f64) -> BeamConfig {
    BeamConfig::plane_wave(e0, 30e-9, 50.0)
}

fn lab_packet() -> (ElectronConfig, Grid2D) {
    // slow electron so that the lab-frame carrier fits on the grid
    (ElectronConfig::packet(0.002, 2e-9, 3e-9), Grid2D::centered(256, 64, 0.125e-9, 0.5e-9).unwrap())
}

#[test]
fn gaussian_is_normalized_with_expected_momentum() {
    let (e, g) = lab_packet();
    let psi = init_gaussian(&e, &g).unwrap();
    assert!((psi.norm() - 1.0).abs() < 1e-12);
    let m = MomentumWavefunction::from_wavefunction(&psi, Exec::Sequential);
    let c = m.centroid();
    assert!((c[0] / e.k_el() - 1.0).abs() < 1e-9, "{c:?}");
    assert!(c[1].abs() < 1e-3 * m.dky());
    assert!((m.total() - 1.0).abs() < 1e-12);
}

#[test]
fn momentum_widths_are_inverse_widths() {
    // |ψ̃|² falls to 1/e at |k - k0| = 1/W on each axis
    let e = ElectronConfig::packet(0.01, 4e-9, 6e-9);
    let g = Grid2D::centered(256, 256, 0.25e-9, 0.25e-9).unwrap();
    let psi = init_gaussian_in_frame(&e, &g, e.v_el()).unwrap();
    let m = MomentumWavefunction::from_wavefunction(&psi, Exec::Parallel);
    // |ψ̃|² ∝ exp(-(k - k0)² W²) has variance 1/(2W²) along each axis
    let ny = m.ky.len();
    let c = m.centroid();
    let (mut vx, mut vy, mut tot) = (0.0, 0.0, 0.0);
    for i in 0..m.kx.len() {
        for j in 0..ny {
            let d = m.density(i, j);
            vx += d * (m.kx[i] - c[0]).powi(2);
            vy += d * (m.ky[j] - c[1]).powi(2);
            tot += d;
        }
    }
    let wx = (2.0 * vx / tot).sqrt();
    let wy = (2.0 * vy / tot).sqrt();
    assert!((wx * e.w_x - 1.0).abs() < 0.02, "{}", wx * e.w_x);
    assert!((wy * e.w_y - 1.0).abs() < 0.02, "{}", wy * e.w_y);
}

#[test]
fn rejects_unresolved_packets() {
    let g = Grid2D::centered(64, 64, 1e-9, 1e-9).unwrap();
    assert!(init_gaussian(&ElectronConfig::packet(0.001, 3e-9, 10e-9), &g).is_err());
    // carrier far beyond the grid's momentum range in the lab frame
    assert!(init_gaussian(&ElectronConfig::packet(0.03, 10e-9, 10e-9), &g).is_err());
    let e = ElectronConfig::packet(0.03, 10e-9, 10e-9);
    assert!(init_gaussian_in_frame(&e, &g, e.v_el()).is_ok());
    assert!(init_gaussian(&ElectronConfig::plane_wave(0.03), &g).is_err());
}

#[test]
fn config_validation() {
    let b = beam(1e9);
    let mut c = PropagatorConfig::for_beam(&b, 40);
    assert!(c.validate(&b).is_ok());
    c.dt *= 1.01;
    assert!(c.validate(&b).is_err());
    let mut c = PropagatorConfig::for_beam(&b, 80);
    c.krylov_dim = 3;
    assert!(c.validate(&b).is_err());
    c.krylov_dim = 65;
    assert!(c.validate(&b).is_err());
}

#[test]
fn free_packet_moves_and_spreads() {
    let (e, g) = lab_packet();
    let b = beam(0.0);
    let cfg = PropagatorConfig { frame: Frame::Lab, ..PropagatorConfig::for_beam(&b, 40) };
    let mut psi = init_gaussian(&e, &g).unwrap();
    let mut p = Propagator::new(g, &b, 0.0, &cfg, Exec::Parallel).unwrap();
    for _ in 0..100 {
        p.step(&mut psi).unwrap();
    }
    let t = psi.time;
    let c = psi.centroid();
    assert!((c[0] - e.v_el() * t).abs() < 1e-6 * e.v_el() * t, "{} vs {}", c[0], e.v_el() * t);
    let w = psi.grid.cell_area() / psi.norm();
    let var_y: f64 = psi.amplitudes.iter().enumerate().map(|(i, a)| a.norm_sqr() * w * psi.grid.y(i % g.ny).powi(2)).sum();
    let want = 0.5 * e.w_y.powi(2) * (1.0 + (HBAR * t / (M_ELECTRON * e.w_y.powi(2))).powi(2));
    assert!((var_y / want - 1.0).abs() < 1e-6, "{var_y} {want}");
}

#[test]
fn frozen_field_conserves_energy() {
    let e = ElectronConfig::packet(0.03, 4e-9, 6e-9);
    let g = Grid2D::centered(64, 64, 0.5e-9, 0.5e-9).unwrap();
    let b = beam(100e9);
    let cfg = PropagatorConfig::for_beam(&b, 40);
    let mut psi = init_gaussian_in_frame(&e, &g, e.v_el()).unwrap();
    let mut p = Propagator::new(g, &b, e.v_el(), &cfg, Exec::Parallel).unwrap();
    p.freeze_field_at(1.3e-17);
    p.step(&mut psi).unwrap();
    let e0 = p.hamiltonian().expectation(&psi.amplitudes);
    for _ in 0..100 {
        p.step(&mut psi).unwrap();
    }
    let e1 = p.hamiltonian().expectation(&psi.amplitudes);
    assert!(((e1 - e0) / e0).abs() < 1e-8, "{e0} {e1}");
    assert!((psi.norm() - 1.0).abs() < 1e-11);
}

#[test]
fn lab_and_comoving_frames_agree() {
    let (e, g) = lab_packet();
    let b = beam(150e9);
    let mut spectra = Vec::new();
    for frame in [Frame::Lab, Frame::CoMoving] {
        let cfg = PropagatorConfig { frame, ..PropagatorConfig::for_beam(&b, 80) };
        let sched = Schedule { t_end: 2.0 * b.period(), snapshot_every: 0, free_flight: 0.0 };
        let out = run(&e, &b, &g, &cfg, &sched, Exec::Parallel).unwrap();
        let m = MomentumWavefunction::from_wavefunction(out.last(), Exec::Parallel);
        spectra.push((spectrum_of(&m), m.centroid()));
    }
    let (a, b_) = (&spectra[0].0, &spectra[1].0);
    let max = a.p.iter().fold(0.0f64, |m, &v| m.max(v));
    let diff = a.p.iter().zip(&b_.p).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    assert!(diff < 1e-6 * max, "{diff} vs {max}");
    assert!((spectra[0].1[0] / spectra[1].1[0] - 1.0).abs() < 1e-9);
}

#[test]
fn mask_accounts_for_absorbed_probability() {
    // a lab-frame packet that drifts into the right-hand absorbing layer
    let e = ElectronConfig { x0: 2e-9, ..ElectronConfig::packet(0.002, 1.5e-9, 4e-9) };
    let g = Grid2D::centered(64, 32, 0.25e-9, 1e-9).unwrap();
    let b = BeamConfig::plane_wave(0.0, 300e-9, 50.0);
    let mut cfg = PropagatorConfig::for_beam(&b, 40);
    cfg.frame = Frame::Lab;
    cfg.absorbing_mask = AbsorbingMask::CosineRamp { width: 3e-9 };
    let mut psi = init_gaussian(&e, &g).unwrap();
    let mut p = Propagator::new(g, &b, 0.0, &cfg, Exec::Sequential).unwrap();
    for _ in 0..400 {
        p.step(&mut psi).unwrap();
    }
    assert!(psi.absorbed > 1e-3, "{}", psi.absorbed);
    assert!((psi.norm() + psi.absorbed - 1.0).abs() < 1e-9);
}

#[test]
fn free_flight_matches_krylov_steps() {
    let e = ElectronConfig::packet(0.01, 3e-9, 3e-9);
    let g = Grid2D::centered(64, 64, 0.5e-9, 0.5e-9).unwrap();
    let b = beam(0.0);
    let cfg = PropagatorConfig::for_beam(&b, 40);
    let mut a = init_gaussian_in_frame(&e, &g, e.v_el()).unwrap();
    let mut c = a.clone();
    let mut p = Propagator::new(g, &b, e.v_el(), &cfg, Exec::Parallel).unwrap();
    for _ in 0..50 {
        p.step(&mut a).unwrap();
    }
    free_flight(&mut c, 50.0 * cfg.dt, Exec::Parallel);
    let err = a.amplitudes.iter().zip(&c.amplitudes).fold(0.0f64, |m, (x, y)| m.max((x - y).norm()));
    let scale = a.amplitudes.iter().fold(0.0f64, |m, x| m.max(x.norm()));
    assert!(err < 1e-9 * scale, "{err}");
    assert!((a.time - c.time).abs() < 1e-25);
}

#[test]
fn zero_field_run_preserves_momentum_density() {
    let e = ElectronConfig::packet(0.03, 4e-9, 6e-9);
    let g = Grid2D::centered(64, 64, 0.5e-9, 0.5e-9).unwrap();
    let b = beam(0.0);
    let cfg = PropagatorConfig::for_beam(&b, 40);
    let sched = Schedule { t_end: 3.0 * b.period(), snapshot_every: 40, free_flight: 1e-15 };
    let out = run(&e, &b, &g, &cfg, &sched, Exec::Parallel).unwrap();
    assert_eq!(out.snapshots.len(), 5);
    assert_eq!(out.snapshots.last().unwrap().stage, Stage::FreeFlight);
    let m0 = MomentumWavefunction::from_wavefunction(&out.snapshots[0].psi, Exec::Parallel);
    let m1 = MomentumWavefunction::from_wavefunction(out.last(), Exec::Parallel);
    let d = m0
        .amplitudes
        .iter()
        .zip(&m1.amplitudes)
        .fold(0.0f64, |m, (a, b)| m.max((a.norm_sqr() - b.norm_sqr()).abs()))
        * m0.dkx()
        * m0.dky();
    assert!(d < 1e-8, "{d}");
}

#[test]
fn krylov_reports_nonconvergence() {
    let e = ElectronConfig::packet(0.03, 4e-9, 6e-9);
    let g = Grid2D::centered(32, 32, 0.5e-9, 0.5e-9).unwrap();
    let b = beam(400e9);
    let mut cfg = PropagatorConfig::for_beam(&b, 40);
    cfg.krylov_dim = 4;
    cfg.krylov_tol = 1e-15;
    let mut psi = init_gaussian_in_frame(&e, &g, e.v_el()).unwrap();
    let r = Propagator::new(g, &b, e.v_el(), &cfg, Exec::Sequential).unwrap().step(&mut psi);
    assert!(matches!(r, Err(Error::KrylovNonConvergence { .. })), "{r:?}");
}

#[test]
fn nyquist_guard_rejects_coarse_grid() {
    let e = ElectronConfig::packet(0.03, 40e-9, 40e-9);
    let g = Grid2D::centered(64, 64, 10e-9, 10e-9).unwrap();
    let b = beam(1e9);
    let cfg = PropagatorConfig::for_beam(&b, 40);
    let sched = Schedule { t_end: b.period(), snapshot_every: 0, free_flight: 0.0 };
    assert!(matches!(run(&e, &b, &g, &cfg, &sched, Exec::Sequential), Err(Error::Precondition(_))));
}

#[test]
fn snapshots_round_trip() {
    let e = ElectronConfig::packet(0.03, 4e-9, 6e-9);
    let g = Grid2D::centered(32, 32, 0.5e-9, 0.5e-9).unwrap();
    let b = beam(100e9);
    let cfg = PropagatorConfig::for_beam(&b, 40);
    let mut psi = init_gaussian_in_frame(&e, &g, e.v_el()).unwrap();
    let mut p = Propagator::new(g, &b, e.v_el(), &cfg, Exec::Sequential).unwrap();
    for _ in 0..7 {
        p.step(&mut psi).unwrap();
    }
    let dir = tempfile::tempdir().unwrap();
    for (i, fmt) in [SnapshotFormat::Bin, SnapshotFormat::Csv].into_iter().enumerate() {
        let meta = SnapshotMeta { index: i, step: 7, stage: Stage::Interaction, mode: cfg.mode, beam: &b, electron: &e };
        write_snapshot(dir.path(), &psi, &meta, fmt).unwrap();
        let (back, side) = read_snapshot(dir.path(), i).unwrap();
        assert_eq!(side.grid, g);
        assert_eq!(side.beam, b);
        let err = back.amplitudes.iter().zip(&psi.amplitudes).fold(0.0f64, |m, (a, b)| m.max((a - b).norm()));
        let scale = psi.amplitudes.iter().fold(0.0f64, |m, a| m.max(a.norm()));
        assert!(err < 1e-12 * scale, "{err}");
        assert!(dir.path().join(format!("snap_{i}_momentum.{}", if i == 0 { "bin" } else { "csv" })).exists());
    }
    assert_eq!(list_snapshots(dir.path()).unwrap(), vec![0, 1]);
}
