use std::io::Write;
use std::path::{Path, PathBuf};

use qbus::analysis::{
    bond_dimension_audit, bound_trials, charge_defect, charge_sector, effective_generators, lie_closure_dimension,
    symmetry_audit, thermal_error_decomposition, transfer_population_error, MetricsBundle, COMMUTATOR_TOL,
};
use qbus::circuits::{
    build_csa_ansatz_with_params, build_csd_mps_ansatz, build_modular_ansatz, build_qdb_mps_ansatz, AnsatzFamily,
    ParametrizedCircuit,
};
use qbus::engine::{correlation_observables, run_full_ensemble, StreamingEvaluator};
use qbus::hamiltonians::{blue_sideband, extended_magnetization};
use qbus::hilbert::{embed, fock_cutoff_for, sigma_x, thermal_state, ProductState, Site, SpinBosonSpace};
use qbus::optimize::warm_start_sweep;
use qbus::reference::{sector_indices, GroundTruth};
use qbus::vqe::{optimize_vqe, OptimizationRecord, RecordId, VqeGrid, VqeProblem};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{ExperimentConfig, ScanAxis};
use crate::error::CliError;

/// Directory of cached reference data, from `QBUS_CACHE_DIR` or `./.qbus-cache`.
pub fn cache_dir() -> PathBuf {
    std::env::var_os("QBUS_CACHE_DIR").map(PathBuf::from).unwrap_or_else(|| PathBuf::from(".qbus-cache"))
}

fn reference(n: usize, t: f64, b_tilde: f64) -> Result<GroundTruth, CliError> {
    Ok(GroundTruth::cached(&cache_dir(), n, t, b_tilde)?.0)
}

pub fn build_circuit(cfg: &ExperimentConfig, n: usize, np: usize) -> Result<ParametrizedCircuit, CliError> {
    let c = match cfg.family()? {
        AnsatzFamily::QdbMps => build_qdb_mps_ansatz(n, cfg.l, np),
        AnsatzFamily::CsdMps => build_csd_mps_ansatz(n, cfg.l, np),
        AnsatzFamily::Csa => build_csa_ansatz_with_params(n, np, cfg.csa, cfg.alpha, cfg.j0, cfg.b_field),
        AnsatzFamily::QdbMpsModular => build_modular_ansatz(cfg.n_traps, n / cfg.n_traps, cfg.l, np),
    };
    Ok(c?)
}

fn write_text(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            std::fs::write(p, text)?;
        }
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

/// Optimized (or, in a dry run, unoptimized) record of one configuration.
fn record_for(cfg: &ExperimentConfig, problem: &VqeProblem) -> Result<OptimizationRecord, CliError> {
    let mut rec = if cfg.dry_run {
        let theta = vec![0.0; problem.circuit().n_params];
        let metrics = problem.metrics(&theta)?;
        OptimizationRecord {
            id: RecordId {
                ansatz: problem.circuit().family,
                n_qubits: problem.circuit().n_qubits,
                n_params: theta.len(),
                n0: problem.n0(),
                seed: cfg.seed,
            },
            theta_init: theta.clone(),
            theta_opt: theta,
            trajectory: vec![(1, metrics.energy)],
            metrics,
            wall_time_s: None,
        }
    } else {
        optimize_vqe(problem, &cfg.optimizer.vqe(cfg.seed), cfg.seed)?
    };
    if !cfg.record_wall_time {
        rec.wall_time_s = None;
    }
    Ok(rec)
}

fn check_metrics(m: &MetricsBundle, gt: &GroundTruth, what: &str) -> Result<(), CliError> {
    m.check(gt).map_err(|e| CliError::Invariant(format!("{what}: {e}")))
}

/// Optimizes one configuration and writes its record as JSON.
pub fn cmd_run(cfg: &ExperimentConfig) -> Result<OptimizationRecord, CliError> {
    cfg.validate()?;
    cfg.require_single_point()?;
    let (n, np, n0) = (cfg.n.values()[0], cfg.np.values()[0], cfg.n0.values()[0]);
    let gt = reference(n, cfg.t, cfg.b_tilde)?;
    let circuit = build_circuit(cfg, n, np)?;
    let problem = VqeProblem::new(&circuit, n0, gt.clone())?;
    let rec = record_for(cfg, &problem)?;
    write_text(cfg.output.as_deref(), &(serde_json::to_string_pretty(&rec)? + "\n"))?;
    check_metrics(&rec.metrics, &gt, "record")?;
    Ok(rec)
}

/// One CSV row of a scan.
#[derive(Clone, Debug, Serialize)]
pub struct ScanRow {
    pub axis: &'static str,
    pub value: f64,
    pub metrics: MetricsBundle,
    pub eps_0: Option<f64>,
    pub eps_1: Option<f64>,
}

pub const CSV_HEADER: &str = "axis,value,energy,epsilon,fidelity,purity,f_err,fidelity_lower_bound,purity_lower_bound,mutual_information,eps_0,eps_1";

/// Shortest round-trip decimal, identical to the JSON rendering of the same value.
fn num(x: f64) -> String {
    serde_json::to_string(&x).expect("finite floats serialize")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

impl ScanRow {
    pub fn csv(&self) -> String {
        let m = &self.metrics;
        [
            self.axis.to_string(),
            if self.axis == "n0" { num(self.value) } else { format!("{}", self.value as usize) },
            num(m.energy),
            opt(m.epsilon),
            num(m.fidelity),
            num(m.purity),
            num(m.f_err),
            opt(m.fidelity_lower_bound),
            opt(m.purity_lower_bound),
            opt(m.mutual_information),
            opt(self.eps_0),
            opt(self.eps_1),
        ]
        .join(",")
    }
}

#[derive(Clone, Debug)]
pub struct ScanOutput {
    pub records: Vec<OptimizationRecord>,
    pub jsonl: PathBuf,
    pub csv: PathBuf,
    pub sweep_passes: usize,
}

/// Output stem: the configured path without extension, `scan` by default.
fn scan_paths(cfg: &ExperimentConfig) -> (PathBuf, PathBuf) {
    let base = cfg.output.clone().unwrap_or_else(|| PathBuf::from("scan"));
    (base.with_extension("jsonl"), base.with_extension("csv"))
}

/// Whether final costs are ordered along the axis as the warm-start sweep promises.
pub fn monotone_along(axis: ScanAxis, values: &[f64], costs: &[f64]) -> bool {
    let mut pairs: Vec<(f64, f64)> = values.iter().copied().zip(costs.iter().copied()).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.windows(2).all(|w| match axis {
        ScanAxis::Np => w[1].1 <= w[0].1 + 1e-9,
        ScanAxis::N | ScanAxis::N0 => w[1].1 >= w[0].1 - 1e-9,
    })
}

/// Optimizes every grid point independently, then sweeps warm starts along the axis.
pub fn cmd_scan(cfg: &ExperimentConfig) -> Result<ScanOutput, CliError> {
    cfg.validate()?;
    let axis = cfg.scan_axis()?;
    let (ns, nps, n0s) = (cfg.n.values(), cfg.np.values(), cfg.n0.values());
    let len = ns.len().max(nps.len()).max(n0s.len());
    let pick = |v: &Vec<usize>, i: usize| if v.len() == 1 { v[0] } else { v[i] };
    let mut problems = Vec::with_capacity(len);
    let mut values = Vec::with_capacity(len);
    for i in 0..len {
        let (n, np) = (pick(&ns, i), pick(&nps, i));
        let n0 = if n0s.len() == 1 { n0s[0] } else { n0s[i] };
        values.push(match axis {
            ScanAxis::N => n as f64,
            ScanAxis::Np => np as f64,
            ScanAxis::N0 => n0,
        });
        let gt = reference(n, cfg.t, cfg.b_tilde)?;
        problems.push(VqeProblem::new(&build_circuit(cfg, n, np)?, n0, gt)?);
    }
    let mut records: Vec<OptimizationRecord> =
        problems.iter().map(|p| record_for(cfg, p)).collect::<Result<_, _>>()?;
    let grid = VqeGrid { points: problems, bfgs: cfg.optimizer.basin(cfg.seed).bfgs };
    let outcome = warm_start_sweep(&grid, records.iter().map(|r| r.theta_opt.clone()).collect(), &cfg.optimizer.sweep())?;
    let mut rows = Vec::with_capacity(len);
    for (i, point) in outcome.points.iter().enumerate() {
        let p = &grid.points[i];
        if point.seeded_by.is_some() {
            records[i].theta_opt = point.theta.clone();
            records[i].metrics = p.metrics(&point.theta)?;
        }
        let (eps_0, eps_1) = if p.circuit().uses_boson() && !p.ground_truth().degenerate {
            let t = thermal_error_decomposition(p.circuit(), &point.theta, p.ground_truth(), p.n0())?;
            (Some(t.eps_q[0]), Some(t.eps_q[1]))
        } else {
            (None, None)
        };
        rows.push(ScanRow { axis: axis.name(), value: values[i], metrics: records[i].metrics.clone(), eps_0, eps_1 });
    }
    let (jsonl, csv) = scan_paths(cfg);
    let mut text = String::new();
    for r in &records {
        text += &serde_json::to_string(r)?;
        text.push('\n');
    }
    write_text(Some(&jsonl), &text)?;
    let mut table = String::from(CSV_HEADER);
    table.push('\n');
    for r in &rows {
        table += &r.csv();
        table.push('\n');
    }
    write_text(Some(&csv), &table)?;
    let costs: Vec<f64> = outcome.points.iter().map(|p| p.cost).collect();
    for (r, p) in records.iter().zip(&grid.points) {
        check_metrics(&r.metrics, p.ground_truth(), &format!("grid point N={} Np={}", r.id.n_qubits, r.id.n_params))?;
    }
    if !monotone_along(axis, &values, &costs) {
        return Err(CliError::Invariant(format!(
            "final costs {costs:?} are not monotone along {} = {values:?}",
            axis.name()
        )));
    }
    Ok(ScanOutput { records, jsonl, csv, sweep_passes: outcome.passes })
}

#[derive(Clone, Debug, Serialize)]
pub struct AuditCheck {
    pub name: String,
    pub passed: bool,
    pub detail: Value,
}

#[derive(Clone, Debug, Serialize)]
pub struct AuditReport {
    pub passed: bool,
    pub checks: Vec<AuditCheck>,
}

fn check(name: impl Into<String>, passed: bool, detail: Value) -> AuditCheck {
    AuditCheck { name: name.into(), passed, detail }
}

/// Structural audits at fixed small sizes. With `corrupt`, a sideband generator
/// plus a stray `σ^x` joins the audited bus generators, which must fail.
pub fn cmd_audit(seed: u64, corrupt: bool, output: Option<&Path>) -> Result<AuditReport, CliError> {
    let mut checks = Vec::new();
    for family in [AnsatzFamily::QdbMps, AnsatzFamily::CsdMps, AnsatzFamily::Csa] {
        for n in 2..=4 {
            let r = symmetry_audit(family, n, 20, seed)?;
            checks.push(check(format!("symmetry/{}/N{n}", family.name()), r.passed(), serde_json::to_value(&r)?));
        }
    }
    // negative control: the stray σ^x must be detected
    let space = SpinBosonSpace::new(2, fock_cutoff_for(0.0, 2));
    let z = extended_magnetization(space);
    let mut gens = vec![blue_sideband(0, space, 1.0)?, blue_sideband(1, space, 1.0)?];
    let corrupted = gens[1].add(&embed(&sigma_x(), &[Site::Qubit(0)], space)?)?;
    let control = charge_defect(&[corrupted.clone()], &z)?;
    checks.push(check("symmetry/negative-control", control >= COMMUTATOR_TOL, json!({ "defect": control })));
    if corrupt {
        gens.push(corrupted);
        let defect = charge_defect(&gens, &z)?;
        checks.push(check(
            "symmetry/qdb-mps/N2/[G, Z] (corrupted generator)",
            defect < COMMUTATOR_TOL,
            json!({ "defect": defect, "threshold": COMMUTATOR_TOL }),
        ));
    }
    for (n, m2) in [(2usize, 0i32), (3, -1)] {
        let sector = sector_indices(SpinBosonSpace::qubits(n), m2);
        let dm = sector.len();
        let dim = lie_closure_dimension(&effective_generators(n)?, &sector)?;
        checks.push(check(
            format!("controllability/N{n}/d_m{dm}"),
            dim == dm * (dm - 1) / 2,
            json!({ "closure_dimension": dim, "expected": dm * (dm - 1) / 2 }),
        ));
    }
    let raw_space = SpinBosonSpace::new(2, 2);
    let raw = [blue_sideband(0, raw_space, 1.0)?, blue_sideband(1, raw_space, 1.0)?];
    let raw_sector = charge_sector(raw_space, -2);
    let raw_dim = lie_closure_dimension(&raw, &raw_sector)?;
    checks.push(check("controllability/raw-sideband-smoke", raw_dim == 3, json!({ "closure_dimension": raw_dim })));
    for q in 0..3 {
        let err = transfer_population_error(q)?;
        checks.push(check(format!("transfer/q{q}"), err < 1e-10, json!({ "population_error": err })));
    }
    let bond = bond_dimension_audit(6, 2, 20, seed)?;
    checks.push(check(
        "bond-dimension/N6/l2",
        bond.passed(),
        json!({ "violations": bond.violations, "marginal": bond.marginal, "draws": bond.draws,
                "max_rank": bond.profiles.iter().map(|p| p.max_rank).max() }),
    ));
    let trials = bound_trials(6, 0.5, 0.1, 1000, seed)?;
    checks.push(check("energy-bounds/random-states", trials.violations == 0, serde_json::to_value(&trials)?));
    for (n, l, n0) in [(4usize, 2usize, 0.0), (6, 3, 0.05)] {
        let err = streaming_deviation(n, l, n0, seed)?;
        checks.push(check(
            format!("streaming/N{n}/l{l}/n0={n0}"),
            err < 1e-10,
            json!({ "max_deviation": err }),
        ));
    }
    let report = AuditReport { passed: checks.iter().all(|c| c.passed), checks };
    write_text(output, &(serde_json::to_string_pretty(&report)? + "\n"))?;
    if !report.passed {
        let failed: Vec<&str> = report.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
        return Err(CliError::Invariant(format!("failed checks: {}", failed.join(", "))));
    }
    Ok(report)
}

/// Largest difference between streamed and full correlators at a few angles.
fn streaming_deviation(n: usize, l: usize, n0: f64, seed: u64) -> Result<f64, CliError> {
    let circuit = build_qdb_mps_ansatz(n, l, qbus::circuits::min_params_qdb_mps(n) + 3)?;
    let d = fock_cutoff_for(n0, n);
    let (rho0, _) = thermal_state(n0, d)?;
    let psi = ProductState::neel(n);
    let obs = correlation_observables(n);
    let ev = StreamingEvaluator::new(&circuit, d, &psi, Some(&rho0), &obs)?;
    let mut worst = 0.0f64;
    for k in 0..3 {
        let theta: Vec<f64> =
            (0..circuit.n_params).map(|i| ((i * 7 + k * 13) as f64 + seed as f64 * 0.37).sin() * 1.3).collect();
        let streamed = ev.evaluate(&theta)?;
        let full = run_full_ensemble(&circuit, d, &theta, &psi.to_pure()?, Some(&rho0))?;
        for (o, s) in obs.iter().zip(&streamed) {
            let f = full.qubits.expectation(&o.operator(SpinBosonSpace::qubits(n))?)?;
            worst = worst.max((f - s).abs());
        }
    }
    Ok(worst)
}

#[derive(Clone, Debug, Serialize)]
pub struct OracleSummary {
    pub path: PathBuf,
    pub cache_hit: bool,
    pub n: usize,
    pub e0: f64,
    pub e1: f64,
    pub gap: f64,
}

/// Computes or loads the cached reference data of one chain.
pub fn cmd_oracle(n: usize, t: f64, b_tilde: f64) -> Result<OracleSummary, CliError> {
    let (gt, path, cache_hit) = GroundTruth::cached(&cache_dir(), n, t, b_tilde)?;
    if !(gt.e0 < gt.e1) {
        return Err(CliError::Invariant(format!("E0 = {} is not below E1 = {}", gt.e0, gt.e1)));
    }
    Ok(OracleSummary { path, cache_hit, n, e0: gt.e0, e1: gt.e1, gap: gt.gap })
}
