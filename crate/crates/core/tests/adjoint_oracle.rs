mod support;

use revmc::heat::{
    adjoint_step, compute_gradient, run_forward, terminal_adjoint, trapezoid_weight, Control, GradientMode,
    GradientOptions, InitialProfile, PathCapture, SimConfig,
};
use support::dense_oracle::dense_adjoint;

fn tiny(particles: usize, steps: usize, seed: u64) -> SimConfig<f64> {
    SimConfig {
        length: 1.0,
        dx: 0.125,
        dt: 0.01,
        steps,
        particles,
        nu: 0.7,
        seed,
        profile: InitialProfile {
            amplitude: 1.0,
            offset: 2.0,
            modes: 1,
        },
    }
}

fn controls() -> Vec<Vec<f64>> {
    vec![
        vec![0.0; 8],
        (0..8).map(|n| 0.5 * n as f64 - 1.0).collect(),
        vec![3.0, -1.0, 0.25, 2.0, 0.0, 1.5, -0.5, 4.0],
    ]
}

fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
    let den: f64 = b.iter().map(|y| y * y).sum();
    (num / den).sqrt()
}

#[test]
fn gradient_matches_dense_oracle() {
    for (p, t) in [(1, 1), (2, 2), (3, 3), (3, 1), (1, 3)] {
        for seed in 0..4 {
            let cfg = tiny(p, t, seed);
            for u in controls() {
                let oracle = dense_adjoint(&cfg, &u);
                for mode in [GradientMode::Stored, GradientMode::Reversible] {
                    let rep = compute_gradient(
                        &cfg,
                        &Control::new(u.clone()),
                        &GradientOptions {
                            mode,
                            path_budget_bytes: None,
                        },
                    )
                    .unwrap();
                    let e = rel_err(&rep.gradient, &oracle.gradient);
                    assert!(e <= 1e-12, "P={p} T={t} seed={seed} {mode:?}: {e}");
                    assert!((rep.objective - oracle.objective).abs() <= 1e-12 * oracle.objective);
                }
            }
        }
    }
}

#[test]
fn position_adjoint_vanishes() {
    for seed in 0..4 {
        let cfg = tiny(3, 3, seed);
        for u in controls() {
            let oracle = dense_adjoint(&cfg, &u);
            for row in &oracle.x_adjoint {
                assert!(row.iter().all(|&v| v.abs() <= 1e-15), "{row:?}");
            }
        }
    }
}

#[test]
fn weight_adjoint_matches_recursion() {
    for seed in 0..4 {
        let cfg = tiny(3, 3, seed);
        for u in controls() {
            let oracle = dense_adjoint(&cfg, &u);
            let control = Control::new(u.clone());
            let run = run_forward(&cfg, &control, PathCapture::Store { budget_bytes: None }).unwrap();
            let paths = run.paths.as_ref().unwrap();
            let grid = cfg.grid().unwrap();
            for p in 0..cfg.particles {
                let t = cfg.steps;
                let mut ws = terminal_adjoint(paths.position(p, t), run.field.row(t), &grid, cfg.dt);
                assert!((ws - oracle.w_adjoint[p][t]).abs() <= 1e-14 * ws.abs().max(1e-3));
                for tau in (0..t).rev() {
                    ws = adjoint_step(
                        ws,
                        paths.position(p, tau + 1),
                        paths.position(p, tau),
                        run.field.row(tau),
                        &control,
                        &grid,
                        cfg.dt,
                        trapezoid_weight(tau, t),
                    );
                    let o = oracle.w_adjoint[p][tau];
                    assert!((ws - o).abs() <= 1e-13 * o.abs().max(1e-3), "p={p} tau={tau}: {ws} vs {o}");
                }
                for tau in 0..=t {
                    assert_eq!(paths.position(p, tau), oracle.positions[p][tau]);
                    assert!((paths.weight(p, tau) - oracle.weights[p][tau]).abs() <= 1e-15 * oracle.weights[p][tau]);
                }
            }
        }
    }
}

#[test]
fn two_particle_two_step_chain_rule() {
    // Unrolled by hand: J = dt sum_tau c_tau dx/2 |theta_tau|^2 + nu dx/2 |u|^2 with
    // theta_tau(n) = sum_p 1[x_p,tau in n] w_p,tau / dx, w_p,tau = w_p,0 prod exp(-dt u(x)).
    let cfg = tiny(2, 2, 5);
    let u = vec![0.4, 1.0, -0.3, 2.0, 0.1, 0.0, 0.7, 1.2];
    let control = Control::new(u.clone());
    let run = run_forward(&cfg, &control, PathCapture::Store { budget_bytes: None }).unwrap();
    let paths = run.paths.unwrap();
    let grid = cfg.grid().unwrap();
    let (dt, dx) = (cfg.dt, cfg.dx);
    let cell = |p: usize, tau: usize| grid.cell_of(paths.position(p, tau));
    let w = |p: usize, tau: usize| paths.weight(p, tau);
    let theta_at = |tau: usize, n: usize| {
        (0..2)
            .filter(|&q| cell(q, tau) == n)
            .map(|q| w(q, tau))
            .sum::<f64>()
            / dx
    };
    let mut g: Vec<f64> = u.iter().map(|v| cfg.nu * dx * v).collect();
    for p in 0..2 {
        // dJ/dw_{p,tau} = dt c_tau theta_tau(x_{p,tau}); dw_{p,1}/du_n = -dt w_{p,1} [n = cell(p,1)],
        // dw_{p,2}/du_n = -dt w_{p,2} ([n = cell(p,1)] + [n = cell(p,2)]).
        let dj1 = dt * 1.0 * theta_at(1, cell(p, 1));
        let dj2 = dt * 0.5 * theta_at(2, cell(p, 2));
        g[cell(p, 1)] -= dj1 * dt * w(p, 1);
        g[cell(p, 1)] -= dj2 * dt * w(p, 2);
        g[cell(p, 2)] -= dj2 * dt * w(p, 2);
    }
    let rep = compute_gradient(&cfg, &control, &GradientOptions::default()).unwrap();
    assert!(rel_err(&rep.gradient, &g) < 1e-13, "{:?} vs {g:?}", rep.gradient);
}
