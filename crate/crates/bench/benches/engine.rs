use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use qbus::circuits::{build_csa_ansatz_with_params, build_qdb_mps_ansatz, CsaConstraints};
use qbus::engine::{run_full_ensemble, StreamingEvaluator};
use qbus::hamiltonians::ssh_terms;
use qbus::hilbert::{fock_cutoff_for, neel_state, thermal_state, ProductState};
use qbus::reference::ground_truth;
use qbus::vqe::VqeProblem;

fn angles(np: usize) -> Vec<f64> {
    (0..np).map(|i| 0.1 + 0.07 * i as f64).collect()
}

/// One energy evaluation of the sideband circuit, streamed and full.
fn energy_routes(c: &mut Criterion) {
    let mut g = c.benchmark_group("energy");
    g.sample_size(20);
    for (n, np, n0) in [(6usize, 18usize, 0.0f64), (6, 18, 0.01), (8, 18, 0.0), (10, 18, 0.0)] {
        let circuit = build_qdb_mps_ansatz(n, 3, np).unwrap();
        let d = fock_cutoff_for(n0, n);
        let (rho0, _) = thermal_state(n0, d).unwrap();
        let obs = [ssh_terms(n, 0.5, 0.1).unwrap()];
        let ev = StreamingEvaluator::new(&circuit, d, &ProductState::neel(n), Some(&rho0), &obs).unwrap();
        let theta = angles(np);
        let id = format!("N{n}/n0={n0}");
        g.bench_with_input(BenchmarkId::new("streamed", &id), &theta, |b, t| {
            b.iter(|| ev.evaluate(black_box(t)).unwrap())
        });
        if n <= 8 {
            let psi = neel_state(n);
            g.bench_with_input(BenchmarkId::new("full", &id), &theta, |b, t| {
                b.iter(|| run_full_ensemble(&circuit, d, black_box(t), &psi, Some(&rho0)).unwrap())
            });
        }
    }
    g.finish();
}

/// Cost seen by the optimizer, including the all-to-all reference family.
fn vqe_cost(c: &mut Criterion) {
    let mut g = c.benchmark_group("vqe_cost");
    g.sample_size(20);
    let gt = ground_truth(6, 0.5, 0.1).unwrap();
    let sideband = VqeProblem::new(&build_qdb_mps_ansatz(6, 3, 22).unwrap(), 0.0, gt.clone()).unwrap();
    let theta = angles(22);
    g.bench_function("qdb-mps/N6", |b| b.iter(|| sideband.epsilon(black_box(&theta)).unwrap()));
    let csa = build_csa_ansatz_with_params(6, 12, CsaConstraints::default(), 1.34, 1.0, 20.0).unwrap();
    let csa = VqeProblem::new(&csa, 0.0, gt).unwrap();
    let theta = angles(12);
    g.bench_function("csa/N6", |b| b.iter(|| csa.epsilon(black_box(&theta)).unwrap()));
    g.finish();
}

criterion_group!(benches, energy_routes, vqe_cost);
criterion_main!(benches);
