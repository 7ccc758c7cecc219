mod common;

use std::sync::Arc;

use krotov::dynamics::PropagationOptions;
use krotov::models::*;
use krotov::operator::pauli;
use krotov::textio::read_columns;
use krotov::{
    iterate, orthonormal_basis, DenseOperator, FinalTimeFunctional, Hamiltonian, OptimizationOptions, SquareModulus, TimeGrid, C64,
};

fn sm() -> Arc<dyn FinalTimeFunctional> {
    Arc::new(SquareModulus::new(1.0).unwrap())
}

#[test]
fn builders_are_consistent() {
    let settings = ControlSettings { n_steps: 100, ..Default::default() };
    let mut problems = vec![
        make_tls(1.0, pauli(1), TlsTarget::StateToState, sm(), &settings).unwrap(),
        make_tls(1.0, pauli(1), TlsTarget::Hadamard, sm(), &settings).unwrap(),
        make_lambda(&LambdaParams::default(), sm(), &settings).unwrap().problem,
        make_spin_spin(&[[0.0; 4], [0.0, 1.0, 0.0, 0.0], [0.0; 4], [0.0; 4]], 1.0, sm(), &settings).unwrap(),
    ];
    let r: Vec<f64> = (0..32).map(|i| -4.0 + 0.25 * i as f64).collect();
    let v: Vec<f64> = r.iter().map(|x| 0.5 * x * x).collect();
    let grid_model = make_fourier_grid(&r, vec![v.clone(), v.iter().map(|x| x + 3.0).collect()], 1.0, 0.1, 1.0).unwrap();
    problems.push(grid_model.problem(TlsTarget::StateToState, (1, 0), sm(), &settings).unwrap());
    for p in &problems {
        p.validate().unwrap();
        assert!(p.initial.orthonormality_error() < 1e-12);
        let traj = p.forward(p.guess.values()).unwrap();
        for phi in traj.last().iter() {
            assert!((phi.norm() - 1.0).abs() < 1e-9);
        }
    }
}

#[test]
fn tls_without_field_keeps_populations() {
    let h = tls_hamiltonian(1.3, pauli(1)).unwrap();
    let grid = TimeGrid::new(200, 10.0).unwrap();
    let init = krotov::StateSet::new(vec![krotov::StateVector::from_vec(vec![C64::new(0.6, 0.0), C64::new(0.0, 0.8)])]).unwrap();
    let traj = krotov::dynamics::propagate_forward(&init, &[0.0; 200], &grid, &h, &PropagationOptions::default()).unwrap();
    for set in traj.iter() {
        assert!((set.get(0)[0].norm_sqr() - 0.36).abs() < 1e-12);
    }
}

#[test]
fn tls_rabi_oscillations() {
    // constant drive: P₁(t) = 4ε²/(ω² + 4ε²) sin²(√(ω²/4 + ε²) t)
    for (omega, eps) in [(0.0, 0.3), (1.0, 0.2), (2.0, 0.7)] {
        let h = tls_hamiltonian(omega, pauli(1)).unwrap();
        let grid = TimeGrid::new(300, 7.0).unwrap();
        let traj = krotov::dynamics::propagate_forward(
            &orthonormal_basis(2, &[0]).unwrap(),
            &[eps; 300],
            &grid,
            &h,
            &PropagationOptions::default(),
        )
        .unwrap();
        let rabi = (omega * omega / 4.0 + eps * eps).sqrt();
        for j in (0..=300).step_by(30) {
            let t = grid.point(j);
            let exact = 4.0 * eps * eps / (omega * omega + 4.0 * eps * eps) * (rabi * t).sin().powi(2);
            assert!((traj.at(j).get(0)[1].norm_sqr() - exact).abs() < 1e-9);
        }
    }
    // resonant π pulse: ∫ε dt = π/2
    let h = tls_hamiltonian(0.0, pauli(1)).unwrap();
    let grid = TimeGrid::new(100, 5.0).unwrap();
    let eps = std::f64::consts::FRAC_PI_2 / 5.0;
    let traj =
        krotov::dynamics::propagate_forward(&orthonormal_basis(2, &[0]).unwrap(), &[eps; 100], &grid, &h, &PropagationOptions::default())
            .unwrap();
    assert!((traj.last().get(0)[1].norm_sqr() - 1.0).abs() < 1e-6);
}

#[test]
fn tls_hadamard_is_reachable() {
    let settings = ControlSettings { t_final: 10.0, n_steps: 400, eps0: 0.2, guess_omega: 1.0, lambda_a: 0.5, ..Default::default() };
    let p = make_tls(1.0, pauli(1), TlsTarget::Hadamard, sm(), &settings).unwrap();
    let rec = iterate(&p, &OptimizationOptions { max_iter: 500, j_tol: 1e-10, ..Default::default() }).unwrap();
    let reached = rec.iterations.iter().position(|r| r.j_t <= -0.95).expect("Hadamard fidelity not reached");
    assert!(reached <= 500);
    assert!(rec.is_monotonic());
}

#[test]
fn lambda_system_costs() {
    let settings = ControlSettings { t_final: 2.0, n_steps: 50, eps0: 0.0, ..Default::default() };
    // without a field the state stays in level 0, inside the allowed subspace
    let allow = LambdaParams { lambda_b: -3.0, cost: CostChoice::Allow, ..Default::default() };
    let sys = make_lambda(&allow, sm(), &settings).unwrap();
    let traj = sys.problem.forward(sys.problem.guess.values()).unwrap();
    let gb = krotov::running_cost::g_b_integral(&traj, &sys.problem.grid, sys.problem.cost());
    assert!((gb + 3.0).abs() < 1e-12);

    let plain = make_lambda(&LambdaParams::default(), sm(), &settings).unwrap();
    assert!(plain.problem.cost.is_none());
    assert!(!plain.second_order_required);

    let forbid = LambdaParams { lambda_b: 20.0, cost: CostChoice::Forbid, ..Default::default() };
    let sys = make_lambda(&forbid, sm(), &settings).unwrap();
    assert!((sys.problem.analytic_estimate(None).unwrap().c + 10.0).abs() < 1e-10);

    assert!(make_lambda(&LambdaParams { lambda_b: 1.0, cost: CostChoice::Allow, ..Default::default() }, sm(), &settings).is_err());
    assert!(make_lambda(&LambdaParams { lambda_b: -1.0, cost: CostChoice::Forbid, ..Default::default() }, sm(), &settings).is_err());
}

#[test]
fn spin_spin_model() {
    let a = [[0.0, 0.0, 0.0, 0.2], [0.0, 1.0, 0.3, 0.0], [0.0, 0.3, 0.8, 0.0], [0.2, 0.0, 0.0, -0.5]];
    let hbar = 0.7;
    let h = spin_spin_hamiltonian(&a, hbar).unwrap();
    assert!(!h.flags().linear_in_field);
    assert!(h.flags().hermitian);

    // Ω ≡ 0 → identity evolution
    let grid = TimeGrid::new(50, 3.0).unwrap();
    let init = orthonormal_basis(4, &[0, 1, 2, 3]).unwrap();
    let traj = krotov::dynamics::propagate_forward(&init, &[0.0; 50], &grid, &h, &PropagationOptions::with_hbar(hbar)).unwrap();
    for (a, b) in traj.last().iter().zip(init.iter()) {
        assert!(a.sub(b).norm() < 1e-14);
    }

    // second difference of H(ε) equals (ħ/4) Σ σ a σ
    let expected = spin_spin_operator(&a).unwrap().scaled(hbar / 4.0);
    for eps in [-1.0, 0.3, 2.0] {
        let d = 1e-3;
        let second = (h.operator(None, eps + d, 0.0).matrix() - h.operator(None, eps, 0.0).matrix() * C64::new(2.0, 0.0)
            + h.operator(None, eps - d, 0.0).matrix())
            / C64::new(d * d, 0.0);
        assert!((second - expected.matrix()).norm() < 1e-10 * (1.0 + expected.matrix().norm()) * 1e3);
        let analytic = h.field_derivative(None, eps + d, 0.0).matrix() - h.field_derivative(None, eps - d, 0.0).matrix();
        assert!((analytic / C64::new(2.0 * d, 0.0) - expected.matrix()).norm() < 1e-10);
    }
    match h.second_field_derivative_bound() {
        krotov::Bound::Finite(m) => assert!((m - expected.spectral_norm()).abs() < 1e-10),
        other => panic!("{other:?}"),
    }
    let asym = [[0.0, 1.0, 0.0, 0.0], [0.0; 4], [0.0; 4], [0.0; 4]];
    assert!(spin_spin_hamiltonian(&asym, 1.0).is_err());
}

#[test]
fn b_gate_is_unitary() {
    let b = b_gate();
    let prod = b.matrix().adjoint() * b.matrix();
    assert!((prod - DenseOperator::identity(4).matrix()).norm() < 1e-14);
    let c = (std::f64::consts::PI / 8.0).cos();
    assert_eq!(b.matrix()[(0, 0)], C64::new(c, 0.0));
}

fn harmonic(n: usize, omega: f64) -> FourierGrid {
    let half = 8.0;
    let dx = 2.0 * half / n as f64;
    let r: Vec<f64> = (0..n).map(|i| -half + dx * i as f64).collect();
    let v = r.iter().map(|x| 0.5 * omega * omega * x * x).collect();
    make_fourier_grid(&r, vec![v], 1.0, 0.0, 1.0).unwrap()
}

#[test]
fn fourier_grid_harmonic_ground_state() {
    let model = harmonic(64, 1.0);
    let (energies, _) = model.eigenstates(0, 3).unwrap();
    assert!((energies[0] - 0.5).abs() / 0.5 < 1e-6);
    assert!((energies[1] - 1.5).abs() / 1.5 < 1e-6);
    assert!(make_fourier_grid(&[0.0, 1.0, 2.0], vec![vec![0.0; 3]], 1.0, 0.0, 1.0).is_err());
}

#[test]
fn fourier_grid_eigenstate_phases() {
    let model = harmonic(32, 1.0);
    let (energies, states) = model.eigenstates(0, 2).unwrap();
    let h = model.hamiltonian().unwrap();
    let grid = TimeGrid::new(20, 2.0).unwrap();
    let init = krotov::StateSet::new(states.clone()).unwrap();
    let traj = krotov::dynamics::propagate_forward(&init, &[0.7; 20], &grid, &h, &PropagationOptions::default()).unwrap();
    for (k, e) in energies.iter().enumerate() {
        let phase = C64::new(0.0, -e * 2.0).exp();
        assert!(traj.last().get(k).sub(&states[k].scaled(phase)).norm() < 1e-9);
    }
}

#[test]
fn fourier_grid_uncoupled_surfaces_keep_populations() {
    let n = 32;
    let r: Vec<f64> = (0..n).map(|i| -4.0 + 0.25 * i as f64).collect();
    let v1: Vec<f64> = r.iter().map(|x| 0.5 * x * x).collect();
    let v2: Vec<f64> = r.iter().map(|x| 0.5 * (x - 1.0).powi(2) + 2.0).collect();
    let model = make_fourier_grid(&r, vec![v1.clone(), v2.clone(), v1], 1.0, 0.0, 1.0).unwrap();
    assert_eq!(model.dim(), 3 * n);
    let (_, g1) = model.eigenstates(0, 1).unwrap();
    let (_, g2) = model.eigenstates(1, 1).unwrap();
    let mixed = g1[0].scaled(C64::new(0.6, 0.0)).add(&g2[0].scaled(C64::new(0.0, 0.8)));
    let grid = TimeGrid::new(40, 4.0).unwrap();
    let traj = krotov::dynamics::propagate_forward(
        &krotov::StateSet::new(vec![mixed]).unwrap(),
        &[1.0; 40],
        &grid,
        &model.hamiltonian().unwrap(),
        &PropagationOptions::default(),
    )
    .unwrap();
    let pops = model.surface_populations(traj.last().get(0));
    assert!((pops[0] - 0.36).abs() < 1e-10 && (pops[1] - 0.64).abs() < 1e-10 && pops[2] < 1e-20);

    // with coupling the driven population leaves the first surface
    let coupled = make_fourier_grid(model.r(), vec![v2.clone(), v2], 1.0, 0.5, 1.0).unwrap();
    let (_, g) = coupled.eigenstates(0, 1).unwrap();
    let traj = krotov::dynamics::propagate_forward(
        &krotov::StateSet::new(vec![g[0].clone()]).unwrap(),
        &[1.0; 40],
        &grid,
        &coupled.hamiltonian().unwrap(),
        &PropagationOptions::default(),
    )
    .unwrap();
    assert!(coupled.surface_populations(traj.last().get(0))[1] > 0.01);
}

#[test]
fn fourier_grid_from_potential_file() {
    let text = "# R V1 V2\n0.0 1.0 2.0\n0.5 0.5 1.5\n1.0 0.25 1.0\n1.5 0.5 1.5\n";
    let cols = read_columns(text.as_bytes()).unwrap();
    let model = FourierGrid::from_columns(&cols, 2.0, 0.1, 1.0).unwrap();
    assert_eq!((model.n_r(), model.n_surfaces()), (4, 2));
    assert!(FourierGrid::from_columns(&[vec![0.0], vec![1.0]], 1.0, 0.0, 1.0).is_err());
}
