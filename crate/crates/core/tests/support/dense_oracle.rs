//! Dense-Jacobian adjoint for tiny particle instances.
//!
//! Every path quantity (positions, weights, binned temperatures) is an
//! unknown of one linear-algebra problem. The constraint Jacobian is
//! assembled entry by entry, the transposed system is solved by LU, and the
//! gradient follows from the control Jacobian. Nothing here reuses the
//! library's backward recursion.

use nalgebra::{DMatrix, DVector};
use revmc::heat::{assign_initial_weights, particle_generator, sample_initial_positions, SimConfig};
use revmc::rng::Direction;
use revmc::sampling::sample_normal;

pub struct OracleResult {
    pub objective: f64,
    pub gradient: Vec<f64>,
    /// Position and weight multipliers, `[p][tau]`.
    pub x_adjoint: Vec<Vec<f64>>,
    pub w_adjoint: Vec<Vec<f64>>,
    pub positions: Vec<Vec<f64>>,
    pub weights: Vec<Vec<f64>>,
}

pub fn dense_adjoint(cfg: &SimConfig<f64>, u: &[f64]) -> OracleResult {
    let grid = cfg.grid().unwrap();
    let (np, t, nc) = (cfg.particles, cfg.steps, grid.cells());
    let (dt, dx) = (cfg.dt, cfg.dx);
    let levels = t + 1;

    // Forward paths from the same per-particle generators.
    let mut gens: Vec<_> = (0..np).map(|p| particle_generator(cfg.seed, p)).collect();
    let x0 = sample_initial_positions(cfg, &grid, &mut gens);
    let theta0: Vec<f64> = (0..nc)
        .map(|n| cfg.profile.value(grid.center(n), cfg.length))
        .collect();
    let (w0, _) = assign_initial_weights(&x0, &theta0, &grid);
    let mut xs = vec![vec![0.0; levels]; np];
    let mut ws = vec![vec![0.0; levels]; np];
    for p in 0..np {
        xs[p][0] = x0[p];
        ws[p][0] = w0[p];
        for tau in 1..levels {
            let xi = sample_normal(&mut gens[p], Direction::Forward);
            let x = grid.wrap(xs[p][tau - 1] + (2.0 * dt).sqrt() * xi);
            xs[p][tau] = x;
            ws[p][tau] = ws[p][tau - 1] * (-dt * u[grid.cell_of(x)]).exp();
        }
    }
    let ind = |x: f64, n: usize| if grid.cell_of(x) == n { 1.0 } else { 0.0 };
    let mut theta = vec![vec![0.0; nc]; levels];
    for (tau, row) in theta.iter_mut().enumerate() {
        for (n, v) in row.iter_mut().enumerate() {
            *v = (0..np).map(|p| ind(xs[p][tau], n) * ws[p][tau]).sum::<f64>() / dx;
        }
    }
    let c = |tau: usize| if tau == 0 || tau == t { 0.5 } else { 1.0 };

    let ix = |p: usize, tau: usize| p * levels + tau;
    let iw = |p: usize, tau: usize| np * levels + p * levels + tau;
    let ith = |tau: usize, n: usize| 2 * np * levels + tau * nc + n;
    let m = 2 * np * levels + levels * nc;

    // a = dF/dy, b = dF/du; rows are indexed like the unknowns.
    let mut a = DMatrix::<f64>::zeros(m, m);
    let mut b = DMatrix::<f64>::zeros(m, nc);
    for p in 0..np {
        a[(ix(p, 0), ix(p, 0))] = 1.0;
        a[(iw(p, 0), iw(p, 0))] = 1.0;
        for tau in 1..levels {
            // X_tau - wrap(X_{tau-1} + s xi): wrap has unit slope a.e.
            a[(ix(p, tau), ix(p, tau))] = 1.0;
            a[(ix(p, tau), ix(p, tau - 1))] = -1.0;
            // W_tau - W_{tau-1} exp(-dt u(X_tau)); u is piecewise constant in X.
            let cell = grid.cell_of(xs[p][tau]);
            let e = (-dt * u[cell]).exp();
            a[(iw(p, tau), iw(p, tau))] = 1.0;
            a[(iw(p, tau), iw(p, tau - 1))] = -e;
            a[(iw(p, tau), ix(p, tau))] = 0.0;
            b[(iw(p, tau), cell)] = ws[p][tau - 1] * e * dt;
        }
    }
    for tau in 0..levels {
        for n in 0..nc {
            let row = ith(tau, n);
            a[(row, row)] = 1.0;
            for p in 0..np {
                a[(row, iw(p, tau))] -= ind(xs[p][tau], n) / dx;
            }
        }
    }

    let mut dj_dy = DVector::<f64>::zeros(m);
    let mut objective = 0.0;
    for tau in 0..levels {
        for n in 0..nc {
            dj_dy[ith(tau, n)] = dt * c(tau) * dx * theta[tau][n];
            objective += dt * c(tau) * dx * 0.5 * theta[tau][n].powi(2);
        }
    }
    objective += cfg.nu * dx * 0.5 * u.iter().map(|v| v * v).sum::<f64>();

    let lambda = a.transpose().lu().solve(&(-dj_dy)).expect("constraint Jacobian is invertible");
    let bt_lambda = b.transpose() * &lambda;
    let gradient = (0..nc).map(|n| cfg.nu * dx * u[n] + bt_lambda[n]).collect();
    OracleResult {
        objective,
        gradient,
        x_adjoint: (0..np).map(|p| (0..levels).map(|tau| lambda[ix(p, tau)]).collect()).collect(),
        w_adjoint: (0..np).map(|p| (0..levels).map(|tau| lambda[iw(p, tau)]).collect()).collect(),
        positions: xs,
        weights: ws,
    }
}
