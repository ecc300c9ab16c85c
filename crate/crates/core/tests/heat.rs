mod support;

use revmc::heat::{
    compare_paths, compute_gradient, run_forward, Control, GradientMode, GradientOptions, PathCapture, SimConfig,
    BLOCK_PARTICLES,
};
use support::stats::relative_l2;

fn desk(particles: usize, seed: u64) -> SimConfig<f64> {
    SimConfig {
        particles,
        seed,
        ..SimConfig::desk()
    }
}

fn pool(threads: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap()
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let cfg = SimConfig {
        steps: 20,
        ..desk(2 * BLOCK_PARTICLES + 1234, 8)
    };
    let u = Control::new((0..100).map(|n| (n % 7) as f64 * 0.3).collect());
    let runs: Vec<_> = [1, 3, 4]
        .iter()
        .map(|&t| pool(t).install(|| compute_gradient(&cfg, &u, &GradientOptions::default()).unwrap()))
        .collect();
    for r in &runs[1..] {
        assert_eq!(r.gradient, runs[0].gradient);
        assert_eq!(r.field.data(), runs[0].field.data());
        assert_eq!(r.objective.to_bits(), runs[0].objective.to_bits());
    }
}

#[test]
fn zero_control_conserves_mass() {
    let cfg = desk(20_000, 1);
    let run = run_forward(&cfg, &Control::zeros(100), PathCapture::Discard).unwrap();
    let m0 = run.field.mass(0);
    for tau in 0..run.field.levels() {
        assert!((run.field.mass(tau) / m0 - 1.0).abs() < 1e-12);
    }
    // Initial binning reproduces the profile's cell-centre values.
    let grid = cfg.grid().unwrap();
    for n in 0..100 {
        let expected = cfg.profile.value(grid.center(n), cfg.length);
        assert!((run.field.row(0)[n] - expected).abs() < 1e-9 * expected);
    }
}

#[test]
fn constant_control_decays_mass_exponentially() {
    let cfg = desk(5_000, 2);
    let c = 1.7;
    let run = run_forward(&cfg, &Control::constant(100, c), PathCapture::Discard).unwrap();
    let m0 = run.field.mass(0);
    for tau in [1, 50, 200] {
        let expected = m0 * (-c * cfg.dt * tau as f64).exp();
        assert!((run.field.mass(tau) / expected - 1.0).abs() < 1e-11);
    }
}

#[test]
fn field_follows_the_heat_equation() {
    let cfg = desk(200_000, 3);
    let run = run_forward(&cfg, &Control::zeros(100), PathCapture::Discard).unwrap();
    let grid = cfg.grid().unwrap();
    for tau in [40, 200] {
        let t = tau as f64 * cfg.dt;
        let exact: Vec<f64> = (0..100)
            .map(|n| cfg.profile.heat_solution(grid.center(n), t, cfg.length))
            .collect();
        let e = relative_l2(run.field.row(tau), &exact);
        assert!(e < 0.03, "tau={tau}: {e}");
    }
}

#[test]
fn path_reconstruction_at_desk_scale() {
    let a = compare_paths(&desk(3_000, 4), &Control::new((0..100).map(|n| (n as f64 / 10.0).sin()).collect())).unwrap();
    assert!(a.generators_restored);
    assert!(a.max_position_error < 1e-9, "{a:?}");
    assert!(a.max_weight_ratio_error < 1e-10, "{a:?}");
}

#[test]
fn memory_counters() {
    let cfg = SimConfig {
        steps: 1000,
        dt: 0.001,
        ..desk(2_000, 5)
    };
    let (p, t, n) = (2_000usize, 1000usize, 100usize);
    let u = Control::zeros(n);
    let stored = compute_gradient(
        &cfg,
        &u,
        &GradientOptions {
            mode: GradientMode::Stored,
            path_budget_bytes: None,
        },
    )
    .unwrap();
    let rev = compute_gradient(&cfg, &u, &GradientOptions::default()).unwrap();
    assert!(stored.diagnostics.peak_path_bytes >= 16 * p * t);
    assert!(rev.diagnostics.peak_path_bytes <= 64 * p + 8 * n * (t + 1));
    let e = relative_l2(&rev.gradient, &stored.gradient);
    assert!(e < 1e-6, "{e}");
}

#[test]
fn single_precision_tracks_double() {
    let cfg64 = SimConfig {
        steps: 50,
        ..desk(4_000, 6)
    };
    let cfg32 = SimConfig::<f32> {
        length: 10.0,
        dx: 0.1,
        dt: 0.005,
        steps: 50,
        particles: 4_000,
        nu: 1.0,
        seed: 6,
        ..SimConfig::default()
    };
    let g64 = compute_gradient(&cfg64, &Control::zeros(100), &GradientOptions::default()).unwrap();
    let g32 = compute_gradient(&cfg32, &Control::zeros(100), &GradientOptions::default()).unwrap();
    let as64: Vec<f64> = g32.gradient.iter().map(|&v| v as f64).collect();
    assert!(relative_l2(&as64, &g64.gradient) < 1e-3);
    assert_eq!(g32.diagnostics.generators_restored, Some(true));
}

#[test]
fn config_file_round_trip() {
    let text = "\
# desk-scale settings
L = 10
dx = 0.1
dt = 0.005
t_end = 1
particles = 10000
nu = 1
seed = 0
theta0_amplitude = 50
theta0_offset = 90
theta0_modes = 4
";
    let cfg = SimConfig::<f64>::from_ini_str(text).unwrap();
    assert_eq!(cfg, SimConfig::desk());
    assert!(SimConfig::<f64>::from_ini_str("L = 10\nbogus = 1\n").is_err());
    assert!(SimConfig::<f64>::from_ini_str("L 10\n").is_err());
}
