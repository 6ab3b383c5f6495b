use ndarray::Array2;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::circuits::{
    build_csd_mps_ansatz, build_modular_ansatz, build_qdb_mps_ansatz, min_params_csd_mps, min_params_modular,
    min_params_qdb_mps, Operation,
};
use crate::hamiltonians::{blue_sideband, ssh_terms};
use crate::hilbert::{
    neel_state, thermal_state, trace_out_boson, DensityMatrix, Pauli, PauliString, PauliSum, ProductState,
    PureState,
};

type C64 = Complex64;

/// `exp(A)` by scaling and squaring of a Taylor series.
fn expm(a: &Array2<C64>) -> Array2<C64> {
    let norm: f64 = a.iter().map(|x| x.norm()).sum();
    let s = (norm.max(1.0).log2().ceil() as i32 + 1).max(0);
    let b = a.mapv(|x| x / 2f64.powi(s));
    let n = a.nrows();
    let mut out = Array2::<C64>::eye(n);
    let mut term = Array2::<C64>::eye(n);
    for k in 1..40 {
        term = term.dot(&b).mapv(|x| x / k as f64);
        out = out + &term;
    }
    for _ in 0..s {
        out = out.dot(&out);
    }
    out
}

fn dagger(m: &Array2<C64>) -> Array2<C64> {
    m.t().mapv(|x| x.conj())
}

/// Dense composite evolution gate by gate; resets re-prepare `rho0`.
fn dense_oracle(
    circuit: &crate::circuits::ParametrizedCircuit,
    theta: &[f64],
    psi: &PureState,
    rho0: &DensityMatrix,
) -> DensityMatrix {
    let mut rho = DensityMatrix::from_pure(psi).kron(rho0).unwrap();
    let space = rho.space();
    for op in &circuit.ops {
        match op {
            Operation::Gate(g) => {
                let h = g.generator.operator(space).unwrap().to_dense();
                let u = expm(&h.mapv(|x| x * C64::new(0.0, -g.sign * theta[g.slot])));
                let m = u.dot(rho.matrix()).dot(&dagger(&u));
                rho = DensityMatrix::new_unchecked(space, m);
            }
            Operation::ResetBoson => {
                rho = trace_out_boson(&rho).unwrap().kron(rho0).unwrap();
            }
        }
    }
    trace_out_boson(&rho).unwrap()
}

fn max_diff(a: &Array2<C64>, b: &Array2<C64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

fn random_theta(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.random_range(-1.5..1.5)).collect()
}

fn correlators(n: usize) -> Vec<PauliSum> {
    let mut out = Vec::new();
    for i in 0..n {
        out.push(PauliSum::from_string(PauliString::single(i, Pauli::Z)));
        out.push(PauliSum::from_string(PauliString::single(i, Pauli::X)));
        for j in i + 1..n {
            out.push(PauliSum::from_string(PauliString::pair(i, Pauli::X, j, Pauli::X).unwrap()));
            out.push(PauliSum::from_string(PauliString::pair(i, Pauli::Y, j, Pauli::Z).unwrap()));
        }
    }
    if n >= 3 {
        let s = PauliString::new(vec![(0, Pauli::X), (1, Pauli::Y), (n - 1, Pauli::X)]).unwrap();
        out.push(PauliSum::from_string(s));
    }
    out
}

#[test]
fn generator_matches_dense_exponential() {
    let space = SpinBosonSpace::new(2, 4);
    let h = blue_sideband(1, space, 1.0).unwrap();
    let psi = PureState::normalized(
        space,
        (0..space.dim()).map(|i| C64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos())).collect(),
    )
    .unwrap();
    let theta = 0.83;
    let out = apply_generator(&psi, &h, theta).unwrap();
    let u = expm(&h.to_dense().mapv(|x| x * C64::new(0.0, -theta)));
    let want = u.dot(psi.vector());
    let err = out.vector().iter().zip(want.iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    assert!(err < 1e-12, "{err}");

    let rho = DensityMatrix::from_pure(&psi);
    let r2 = apply_generator_density(&rho, &h, theta).unwrap();
    let want = u.dot(rho.matrix()).dot(&dagger(&u));
    assert!(max_diff(r2.matrix(), &want) < 1e-12);
}

#[test]
fn generator_is_a_one_parameter_group() {
    let space = SpinBosonSpace::new(1, 5);
    let h = blue_sideband(0, space, 1.0).unwrap();
    let psi = PureState::basis(space, 5 + 1).unwrap();
    let a = apply_generator(&apply_generator(&psi, &h, 0.3).unwrap(), &h, 0.45).unwrap();
    let b = apply_generator(&psi, &h, 0.75).unwrap();
    assert!((a.overlap(&b).unwrap().norm() - 1.0).abs() < 1e-13);
    let z = apply_generator(&psi, &h, 0.0).unwrap();
    assert_eq!(z.vector(), psi.vector());
}

#[test]
fn sideband_full_transfer_area() {
    // |↓,q⟩ ↔ |↑,q+1⟩ couple with matrix element √(q+1)
    for q in 0..4 {
        let space = SpinBosonSpace::new(1, 6);
        let h = blue_sideband(0, space, 1.0).unwrap();
        let start = PureState::basis(space, 6 + q).unwrap();
        let target = PureState::basis(space, q + 1).unwrap();
        let theta = std::f64::consts::PI / (2.0 * ((q + 1) as f64).sqrt());
        let out = apply_generator(&start, &h, theta).unwrap();
        assert!((out.overlap(&target).unwrap().norm() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn full_route_matches_dense_oracle() {
    let d = 4;
    let (rho0, _) = thermal_state(0.05, d).unwrap();
    for (c, seed) in [
        (build_qdb_mps_ansatz(4, 2, 14).unwrap(), 1),
        (build_qdb_mps_ansatz(4, 3, 18).unwrap(), 2),
        (build_csd_mps_ansatz(4, 2, min_params_csd_mps(4, 2)).unwrap(), 3),
        (build_modular_ansatz(2, 3, 3, min_params_modular(2, 3)).unwrap(), 4),
    ] {
        let theta = random_theta(c.n_params, seed);
        let psi = neel_state(c.n_qubits);
        let rho0 = if c.uses_boson() { rho0.clone() } else { thermal_state(0.0, 2).unwrap().0 };
        let want = dense_oracle(&c, &theta, &psi, &rho0);
        let got = run_full(&c, &theta, &psi, Some(&rho0)).unwrap();
        assert!(max_diff(got.matrix(), want.matrix()) < 1e-11, "{:?}", c.family);
        assert!((got.trace().re - 1.0).abs() < 1e-12);
    }
}

#[test]
fn density_route_matches_trajectories_and_oracle() {
    let d = 4;
    let c = build_modular_ansatz(2, 3, 3, min_params_modular(2, 3)).unwrap();
    let theta = random_theta(c.n_params, 9);
    let psi = neel_state(6);
    let (thermal, _) = thermal_state(0.1, d).unwrap();
    let cc = CompiledCircuit::new(&c, d).unwrap();
    let composite = DensityMatrix::from_pure(&psi).kron(&thermal).unwrap();
    let dens = trace_out_boson(&evolve_density(&cc, &theta, &composite, Some(&thermal)).unwrap()).unwrap();
    let traj = run_full_ensemble(&c, d, &theta, &psi, Some(&thermal)).unwrap().qubits.to_density();
    assert!(max_diff(dens.matrix(), traj.matrix()) < 1e-12);

    // a coherent boson superposition forces the density route
    let mut m = Array2::<C64>::zeros((d, d));
    let amp = [0.8, 0.6, 0.0, 0.0];
    for x in 0..d {
        for y in 0..d {
            m[[x, y]] = C64::new(amp[x] * amp[y], 0.0);
        }
    }
    let coherent = DensityMatrix::new(SpinBosonSpace::boson(d), m).unwrap();
    let got = run_full(&c, &theta, &psi, Some(&coherent)).unwrap();
    let want = dense_oracle(&c, &theta, &psi, &coherent);
    assert!(max_diff(got.matrix(), want.matrix()) < 1e-11);
}

#[test]
fn zero_angles_leave_the_input() {
    let c = build_qdb_mps_ansatz(4, 2, min_params_qdb_mps(4)).unwrap();
    let psi = neel_state(4);
    let (rho0, _) = thermal_state(0.0, 3).unwrap();
    let out = run_full(&c, &vec![0.0; c.n_params], &psi, Some(&rho0)).unwrap();
    let want = DensityMatrix::from_pure(&psi);
    assert!(max_diff(out.matrix(), want.matrix()) < 1e-15);
    let full = run_full_ensemble(&c, 3, &vec![0.3; c.n_params], &psi, None).unwrap();
    // vacuum input: the composite stays pure
    let e = Ensemble { space: full.composite_space, members: full.composite };
    assert!((e.purity() - 1.0).abs() < 1e-12);
}

#[test]
fn unitary_of_reset_free_circuit() {
    let c = build_qdb_mps_ansatz(3, 2, min_params_qdb_mps(3)).unwrap();
    let cc = CompiledCircuit::new(&c, 3).unwrap();
    let u = unitary_matrix(&cc, &random_theta(c.n_params, 5)).unwrap();
    let prod = dagger(&u).dot(&u);
    assert!(max_diff(&prod, &Array2::eye(u.nrows())) < 1e-12);
}

#[test]
fn streaming_matches_full_route() {
    for (n, l, n0, d) in [(4, 2, 0.0, 4), (4, 3, 0.05, 4), (5, 3, 0.05, 5), (6, 2, 0.0, 4)] {
        let c = build_qdb_mps_ansatz(n, l, min_params_qdb_mps(n)).unwrap();
        let theta = random_theta(c.n_params, (n * 10 + l) as u64);
        let (rho0, _) = thermal_state(n0, d).unwrap();
        let mut obs = correlators(n);
        obs.push(ssh_terms(n, 0.5, 0.1).unwrap());
        let got = run_streaming(&c, &theta, &ProductState::neel(n), Some(&rho0), &obs).unwrap();
        let full = run_full_ensemble(&c, d, &theta, &neel_state(n), Some(&rho0)).unwrap().qubits;
        for (o, g) in obs.iter().zip(&got) {
            let want = full.expectation(&o.operator(full.space).unwrap()).unwrap();
            assert!((g - want).abs() < 1e-10, "N={n} l={l}: {g} vs {want}");
        }
    }
}

#[test]
fn streaming_handles_resets_and_ms_gates() {
    let d = 4;
    let (rho0, _) = thermal_state(0.05, d).unwrap();
    for c in [build_modular_ansatz(2, 3, 3, min_params_modular(2, 3)).unwrap(), build_csd_mps_ansatz(5, 3, min_params_csd_mps(5, 3)).unwrap()] {
        let n = c.n_qubits;
        let theta = random_theta(c.n_params, 17);
        let obs = correlators(n);
        let got = run_streaming(&c, &theta, &ProductState::neel(n), Some(&rho0), &obs);
        let got = match got {
            Ok(v) => v,
            Err(e) => {
                assert!(!c.uses_boson(), "{e}");
                StreamingEvaluator::new(&c, 0, &ProductState::neel(n), None, &obs).unwrap().evaluate(&theta).unwrap()
            }
        };
        let want = run_full(&c, &theta, &neel_state(n), c.uses_boson().then_some(&rho0)).unwrap();
        for (o, g) in obs.iter().zip(&got) {
            let w = want.expectation(&o.operator(want.space()).unwrap()).unwrap();
            assert!((g - w).abs() < 1e-10, "{:?}: {g} vs {w}", c.family);
        }
    }
}

#[test]
fn streaming_window_stays_within_the_box() {
    let c = build_qdb_mps_ansatz(8, 3, min_params_qdb_mps(8)).unwrap();
    let ev = StreamingEvaluator::new(&c, 4, &ProductState::neel(8), None, &[]).unwrap();
    assert!(ev.window_peak() <= 3);
    let csa = crate::circuits::build_csa_ansatz(4, 1, Default::default()).unwrap();
    assert!(matches!(
        StreamingEvaluator::new(&csa, 0, &ProductState::neel(4), None, &[]),
        Err(Error::NotStreamable(_))
    ));
}

#[test]
fn streaming_with_superposed_input() {
    // a non-basis input disables charge grading
    let n = 4;
    let c = build_qdb_mps_ansatz(n, 2, min_params_qdb_mps(n)).unwrap();
    let theta = random_theta(c.n_params, 33);
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut psi = ProductState::neel(n);
    psi.locals[1] = [C64::new(h, 0.0), C64::new(0.0, h)];
    let (rho0, _) = thermal_state(0.02, 4).unwrap();
    let obs = correlators(n);
    let got = run_streaming(&c, &theta, &psi, Some(&rho0), &obs).unwrap();
    let want = run_full(&c, &theta, &psi.to_pure().unwrap(), Some(&rho0)).unwrap();
    for (o, g) in obs.iter().zip(&got) {
        let w = want.expectation(&o.operator(want.space()).unwrap()).unwrap();
        assert!((g - w).abs() < 1e-10);
    }
}

