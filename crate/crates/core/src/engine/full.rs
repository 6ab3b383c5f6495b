use ndarray::{Array1, Array2};
use num_complex::Complex64;

use super::ensemble::Ensemble;
use super::kernel::{apply_vector, GatePlan, Graded, Layout};
use super::{local_charges, CompiledCircuit, SpectralGenerator, Step};
use crate::circuits::ParametrizedCircuit;
use crate::error::{Error, Result};
use crate::hilbert::{
    thermal_state, trace_out_boson, DensityMatrix, LinearOperator, PureState, Site, SpinBosonSpace,
};

type C64 = Complex64;
const ZERO: C64 = C64::new(0.0, 0.0);

pub(crate) fn full_layout(space: SpinBosonSpace) -> Layout {
    let labels = space.sites();
    let dims = labels
        .iter()
        .map(|s| if *s == Site::Boson { space.fock_cutoff } else { 2 })
        .collect();
    Layout::new(labels, dims)
}

/// Output of the full route: composite members and the reduced qubit ensemble.
#[derive(Clone, Debug)]
pub struct FullOutput {
    pub composite_space: SpinBosonSpace,
    /// `ρ_total = Σ |m⟩⟨m|` over these unnormalized vectors.
    pub composite: Vec<Vec<C64>>,
    pub qubits: Ensemble,
}

fn angle(theta: &[f64], slot: usize, sign: f64) -> f64 {
    sign * theta[slot]
}

/// Applies every gate of a reset-free circuit to a composite vector.
pub fn evolve_pure(cc: &CompiledCircuit, theta: &[f64], v: &mut [C64]) -> Result<()> {
    cc.circuit().check_params(theta)?;
    let layout = full_layout(cc.space());
    if v.len() != layout.total {
        return Err(Error::DimensionMismatch(format!(
            "vector of length {} for dimension {}",
            v.len(),
            layout.total
        )));
    }
    for step in cc.steps() {
        match step {
            Step::Gate { gen, sites, slot, sign } => {
                let plan = GatePlan::new(&layout, &layout.positions(sites)?);
                let u = cc.generator(*gen).unitary(angle(theta, *slot, *sign), false);
                apply_vector(v, &plan, &u);
            }
            Step::Reset => {
                return Err(Error::InvalidArgument(
                    "a boson reset needs the mixed-state route".into(),
                ))
            }
        }
    }
    Ok(())
}

/// Runs the circuit on `|ψ_in⟩ ⊗ ρ0` as pure trajectories over the diagonal of `ρ0`
/// (the thermal state when `rho0` is `None`), branching over boson levels at resets.
pub fn run_full_ensemble(
    circuit: &ParametrizedCircuit,
    fock_cutoff: usize,
    theta: &[f64],
    psi_in: &PureState,
    rho0: Option<&DensityMatrix>,
) -> Result<FullOutput> {
    let cc = CompiledCircuit::new(circuit, fock_cutoff)?;
    run_compiled_ensemble(&cc, theta, psi_in, rho0)
}

pub(crate) fn boson_populations(cc: &CompiledCircuit, rho0: Option<&DensityMatrix>) -> Result<Vec<f64>> {
    let d = cc.fock_cutoff();
    if d == 0 {
        return Ok(vec![1.0]);
    }
    match rho0 {
        None => Ok(vec![1.0].into_iter().chain(std::iter::repeat(0.0).take(d - 1)).collect()),
        Some(r) => {
            if r.space() != SpinBosonSpace::boson(d) {
                return Err(Error::DimensionMismatch(format!(
                    "initial boson state on {:?}, circuit cutoff {d}",
                    r.space()
                )));
            }
            if !r.is_diagonal() {
                return Err(Error::InvalidArgument("trajectories need a diagonal boson state".into()));
            }
            Ok((0..d).map(|q| r.matrix()[[q, q]].re).collect())
        }
    }
}

pub(crate) fn run_compiled_ensemble(
    cc: &CompiledCircuit,
    theta: &[f64],
    psi_in: &PureState,
    rho0: Option<&DensityMatrix>,
) -> Result<FullOutput> {
    cc.circuit().check_params(theta)?;
    let n = cc.circuit().n_qubits;
    if psi_in.space() != SpinBosonSpace::qubits(n) {
        return Err(Error::DimensionMismatch("input state must live on the qubits".into()));
    }
    let space = cc.space();
    let d = space.boson_dim();
    let pops = boson_populations(cc, rho0)?;
    let layout = full_layout(space);
    let psi = psi_in.vector();
    let mut members: Vec<Vec<C64>> = Vec::new();
    for (q, &p) in pops.iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        let w = p.sqrt();
        let mut v = vec![ZERO; space.dim()];
        for (i, a) in psi.iter().enumerate() {
            v[i * d + q] = a * w;
        }
        members.push(v);
    }
    for step in cc.steps() {
        match step {
            Step::Gate { gen, sites, slot, sign } => {
                let plan = GatePlan::new(&layout, &layout.positions(sites)?);
                let u = cc.generator(*gen).unitary(angle(theta, *slot, *sign), false);
                for v in members.iter_mut() {
                    apply_vector(v, &plan, &u);
                }
            }
            Step::Reset => {
                let mut next = Vec::new();
                for v in &members {
                    for level in 0..d {
                        let nz = (0..v.len() / d).any(|i| v[i * d + level] != ZERO);
                        if !nz {
                            continue;
                        }
                        for (q, &p) in pops.iter().enumerate() {
                            if p == 0.0 {
                                continue;
                            }
                            let w = p.sqrt();
                            let mut out = vec![ZERO; v.len()];
                            for i in 0..v.len() / d {
                                out[i * d + q] = v[i * d + level] * w;
                            }
                            next.push(out);
                        }
                    }
                }
                members = next;
            }
        }
    }
    let mut qubit_members = Vec::new();
    for v in &members {
        for level in 0..d {
            let phi: Vec<C64> = (0..v.len() / d).map(|i| v[i * d + level]).collect();
            if phi.iter().any(|a| *a != ZERO) {
                qubit_members.push(phi);
            }
        }
    }
    Ok(FullOutput {
        composite_space: space,
        composite: members,
        qubits: Ensemble { space: SpinBosonSpace::qubits(n), members: qubit_members },
    })
}

/// Reduced qubit state after running the circuit on `|ψ_in⟩ ⊗ ρ0`.
///
/// Diagonal `ρ0` uses pure trajectories; any other `ρ0` the dense density-matrix route.
pub fn run_full(
    circuit: &ParametrizedCircuit,
    theta: &[f64],
    psi_in: &PureState,
    rho0: Option<&DensityMatrix>,
) -> Result<DensityMatrix> {
    let d = match rho0 {
        Some(r) => r.space().fock_cutoff,
        None if circuit.uses_boson() => {
            return Err(Error::InvalidArgument("circuit needs an initial boson state".into()))
        }
        None => 0,
    };
    let cc = CompiledCircuit::new(circuit, d)?;
    match rho0 {
        Some(r) if circuit.uses_boson() && !r.is_diagonal() => {
            let composite = DensityMatrix::from_pure(psi_in).kron(r)?;
            trace_out_boson(&evolve_density(&cc, theta, &composite, Some(r))?)
        }
        _ => Ok(run_compiled_ensemble(&cc, theta, psi_in, rho0)?.qubits.to_density()),
    }
}

/// Dense evolution of a composite density matrix; resets re-prepare `reset_state`
/// (the vacuum when `None`).
pub fn evolve_density(
    cc: &CompiledCircuit,
    theta: &[f64],
    rho: &DensityMatrix,
    reset_state: Option<&DensityMatrix>,
) -> Result<DensityMatrix> {
    cc.circuit().check_params(theta)?;
    let space = cc.space();
    if rho.space() != space {
        return Err(Error::DimensionMismatch(format!(
            "state on {:?}, circuit on {:?}",
            rho.space(),
            space
        )));
    }
    let mut layout = full_layout(space);
    let mut g = Graded { m: rho.matrix().iter().copied().collect(), delta: None };
    g.delta = graded_delta(&g.m, &layout);
    let reset = match reset_state {
        Some(r) => r.clone(),
        None if space.has_boson() => thermal_state(0.0, space.fock_cutoff)?.0,
        None => DensityMatrix::new_unchecked(SpinBosonSpace::qubits(0), Array2::ones((1, 1))),
    };
    let reset_flat: Vec<C64> = reset.matrix().iter().copied().collect();
    let reset_delta = super::kernel::local_delta(
        &reset_flat,
        &super::kernel::factor_charges(Site::Boson, space.boson_dim()),
    );
    for step in cc.steps() {
        match step {
            Step::Gate { gen, sites, slot, sign } => {
                let plan = GatePlan::new(&layout, &layout.positions(sites)?);
                let u = cc.generator(*gen).unitary(angle(theta, *slot, *sign), true);
                g.conjugate(&layout, &plan, &u);
            }
            Step::Reset => {
                let pos = layout.position(Site::Boson).ok_or(Error::NoBoson)?;
                let (t, l2) = g.trace_out(&layout, pos, None);
                g = t.adjoin(l2.total, &reset_flat, space.fock_cutoff, reset_delta);
                layout = l2.with_appended(Site::Boson, space.fock_cutoff);
            }
        }
    }
    let dim = layout.total;
    Ok(DensityMatrix::new_unchecked(space, Array2::from_shape_vec((dim, dim), g.m).expect("square")))
}

/// Charge offset shared by every nonzero entry, if any.
pub(crate) fn graded_delta(m: &[C64], layout: &Layout) -> Option<i32> {
    let d = layout.total;
    let mut delta = None;
    for r in 0..d {
        for c in 0..d {
            if m[r * d + c] != ZERO {
                let dq = layout.charge[r] - layout.charge[c];
                match delta {
                    None => delta = Some(dq),
                    Some(x) if x != dq => return None,
                    _ => {}
                }
            }
        }
    }
    Some(delta.unwrap_or(0))
}

fn full_generator(h: &LinearOperator) -> Result<(SpectralGenerator, Layout)> {
    let space = h.space();
    let layout = full_layout(space);
    let charges = local_charges(&layout.labels, &layout.dims);
    Ok((SpectralGenerator::new(h, layout.dims.clone(), &charges)?, layout))
}

/// `exp(-iθH)|ψ⟩` for a Hermitian operator on the state's space.
pub fn apply_generator(psi: &PureState, h: &LinearOperator, theta: f64) -> Result<PureState> {
    if h.space().dim() != psi.space().dim() {
        return Err(Error::DimensionMismatch("generator and state".into()));
    }
    let (g, layout) = full_generator(&h.with_space(psi.space())?)?;
    let positions: Vec<usize> = (0..layout.dims.len()).collect();
    let plan = GatePlan::new(&layout, &positions);
    let mut v = psi.vector().to_vec();
    apply_vector(&mut v, &plan, &g.unitary(theta, false));
    PureState::new(psi.space(), Array1::from(v))
}

/// `exp(-iθH) ρ exp(iθH)`.
pub fn apply_generator_density(rho: &DensityMatrix, h: &LinearOperator, theta: f64) -> Result<DensityMatrix> {
    if h.space().dim() != rho.space().dim() {
        return Err(Error::DimensionMismatch("generator and state".into()));
    }
    let (g, layout) = full_generator(&h.with_space(rho.space())?)?;
    let positions: Vec<usize> = (0..layout.dims.len()).collect();
    let plan = GatePlan::new(&layout, &positions);
    let mut gm = Graded { m: rho.matrix().iter().copied().collect(), delta: None };
    gm.delta = graded_delta(&gm.m, &layout);
    gm.conjugate(&layout, &plan, &g.unitary(theta, true));
    let dim = layout.total;
    DensityMatrix::new(rho.space(), Array2::from_shape_vec((dim, dim), gm.m).expect("square"))
}

/// Full unitary of a reset-free circuit, column by column.
pub fn unitary_matrix(cc: &CompiledCircuit, theta: &[f64]) -> Result<Array2<C64>> {
    let dim = cc.space().dim();
    let mut u = Array2::zeros((dim, dim));
    for c in 0..dim {
        let mut v = vec![ZERO; dim];
        v[c] = C64::new(1.0, 0.0);
        evolve_pure(cc, theta, &mut v)?;
        for r in 0..dim {
            u[[r, c]] = v[r];
        }
    }
    Ok(u)
}
