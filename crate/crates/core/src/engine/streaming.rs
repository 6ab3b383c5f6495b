//! Reduced-state evaluation that holds only the qubits between their first and last
//! gate, plus the boson.
//!
//! Each observable is expanded into products of ladder factors `σ⁺`, `σ⁻`, `σ^z`.
//! Factors of one product are ordered by the retirement time of their site. When a
//! site retires, every matrix that still contains it (the base state and the live
//! tags) is traced against the factors waiting on that site: the last factor of a
//! product yields a number, an earlier factor yields a new tag
//! `Tr_i[(L_i ⊗ I) M]` that is evolved like the base state from then on.

use std::collections::HashMap;

use num_complex::Complex64;

use super::kernel::{factor_charges, local_delta, qubit_projector, GatePlan, Graded, Layout};
use super::{CompiledCircuit, Step};
use crate::circuits::{AnsatzFamily, ParametrizedCircuit};
use crate::error::{Error, Result};
use crate::hilbert::{thermal_state, DensityMatrix, Pauli, PauliSum, ProductState, Site, SpinBosonSpace};

type C64 = Complex64;
const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum Ladder {
    Plus,
    Minus,
    Z,
}

impl Ladder {
    fn entries(self) -> &'static [(usize, usize, C64)] {
        const P: [(usize, usize, C64); 1] = [(0, 1, ONE)];
        const M: [(usize, usize, C64); 1] = [(1, 0, ONE)];
        const Z: [(usize, usize, C64); 2] = [(0, 0, ONE), (1, 1, C64::new(-1.0, 0.0))];
        match self {
            Ladder::Plus => &P,
            Ladder::Minus => &M,
            Ladder::Z => &Z,
        }
    }

    /// Change of the remaining charge offset after tracing against this factor.
    fn dq(self) -> i32 {
        match self {
            Ladder::Plus => 2,
            Ladder::Minus => -2,
            Ladder::Z => 0,
        }
    }
}

fn expand(p: Pauli) -> Vec<(C64, Ladder)> {
    match p {
        Pauli::X => vec![(ONE, Ladder::Plus), (ONE, Ladder::Minus)],
        Pauli::Y => vec![(-I, Ladder::Plus), (I, Ladder::Minus)],
        Pauli::Z => vec![(ONE, Ladder::Z)],
    }
}

type Key = Vec<(usize, Ladder)>;

#[derive(Clone, Debug)]
enum Instr {
    Adjoin { sigma: Vec<C64>, delta: Option<i32>, layout: usize },
    Gate { gen: usize, slot: usize, sign: f64, layout: usize, plan: usize },
    Retire(Retirement),
    Reset { pos: usize, layout_before: usize },
}

#[derive(Clone, Debug)]
struct Retirement {
    pos: usize,
    layout_before: usize,
    /// `(source tag, factor, observable, coefficient)`.
    reads: Vec<(usize, Ladder, usize, C64)>,
    /// `(source tag, factor, new tag)`.
    creates: Vec<(usize, Ladder, usize)>,
    drops: Vec<usize>,
}

/// Precompiled streaming evaluation of fixed observables for one circuit and input.
#[derive(Clone, Debug)]
pub struct StreamingEvaluator {
    compiled: CompiledCircuit,
    layouts: Vec<Layout>,
    plans: Vec<GatePlan>,
    program: Vec<Instr>,
    initial: Graded,
    reset_sigma: Vec<C64>,
    reset_delta: Option<i32>,
    n_tags: usize,
    constants: Vec<f64>,
    window_peak: usize,
}

impl StreamingEvaluator {
    /// `rho0` is the initial and reset state of the boson (the vacuum when `None`).
    pub fn new(
        circuit: &ParametrizedCircuit,
        fock_cutoff: usize,
        psi_in: &ProductState,
        rho0: Option<&DensityMatrix>,
        observables: &[PauliSum],
    ) -> Result<Self> {
        if circuit.family == AnsatzFamily::Csa {
            return Err(Error::NotStreamable("every gate spans the whole chain".into()));
        }
        let compiled = CompiledCircuit::new(circuit, fock_cutoff)?;
        let n = circuit.n_qubits;
        if psi_in.n_qubits() != n {
            return Err(Error::DimensionMismatch(format!(
                "product state on {} qubits, circuit on {n}",
                psi_in.n_qubits()
            )));
        }
        let d = compiled.fock_cutoff();
        let reset = match (rho0, d) {
            (_, 0) => None,
            (Some(r), _) => {
                if r.space() != SpinBosonSpace::boson(d) {
                    return Err(Error::DimensionMismatch(format!(
                        "boson state on {:?}, cutoff {d}",
                        r.space()
                    )));
                }
                Some(r.clone())
            }
            (None, _) => Some(thermal_state(0.0, d)?.0),
        };
        let reset_sigma: Vec<C64> = reset.as_ref().map(|r| r.matrix().iter().copied().collect()).unwrap_or_default();
        let reset_delta = if d > 0 { local_delta(&reset_sigma, &factor_charges(Site::Boson, d)) } else { Some(0) };

        let locals: Vec<(Vec<C64>, Option<i32>)> = psi_in
            .locals
            .iter()
            .map(|s| {
                let p = qubit_projector(s);
                let dl = local_delta(&p, &[1, -1]);
                (p, dl)
            })
            .collect();
        let graded = compiled.conserves_charge()
            && reset_delta == Some(0)
            && locals.iter().all(|(_, dl)| *dl == Some(0));

        // retirement order
        let last = circuit.retirement_schedule();
        let rank = |j: usize| -> (i64, usize) { (last[j].map_or(-1, |x| x as i64), j) };

        // ladder terms merged per observable
        let mut constants = vec![0.0; observables.len()];
        let mut merged: HashMap<(usize, Key), C64> = HashMap::new();
        for (o, obs) in observables.iter().enumerate() {
            constants[o] += obs.constant;
            for (c, s) in &obs.terms {
                if let Some(m) = s.max_site() {
                    if m >= n {
                        return Err(Error::SiteOutOfRange { site: m, n_qubits: n });
                    }
                }
                let mut products: Vec<(C64, Key)> = vec![(C64::new(*c, 0.0), Vec::new())];
                for &(site, p) in s.factors() {
                    let mut next = Vec::with_capacity(products.len() * 2);
                    for (coef, key) in &products {
                        for (a, l) in expand(p) {
                            let mut k = key.clone();
                            k.push((site, l));
                            next.push((coef * a, k));
                        }
                    }
                    products = next;
                }
                for (coef, mut key) in products {
                    if key.is_empty() {
                        constants[o] += coef.re;
                        continue;
                    }
                    if graded && key.iter().map(|(_, l)| l.dq()).sum::<i32>() != 0 {
                        continue;
                    }
                    key.sort_by_key(|(s, _)| rank(*s));
                    *merged.entry((o, key)).or_insert(ZERO) += coef;
                }
            }
        }
        let mut terms: Vec<(usize, Key, C64)> =
            merged.into_iter().filter(|(_, c)| *c != ZERO).map(|((o, k), c)| (o, k, c)).collect();
        terms.sort_by(|a, b| (a.0, &a.1).cmp(&(b.0, &b.1)));

        // tags: interned proper prefixes, id 0 is the empty prefix (base state)
        let mut tag_ids: HashMap<Key, usize> = HashMap::new();
        tag_ids.insert(Vec::new(), 0);
        let mut death: Vec<(i64, usize)> = vec![(i64::MAX, usize::MAX)];
        for (_, key, _) in &terms {
            for k in 0..key.len() {
                let prefix = key[..k].to_vec();
                let next = tag_ids.len();
                let id = *tag_ids.entry(prefix).or_insert(next);
                if id == death.len() {
                    death.push((i64::MIN, 0));
                }
                if id != 0 {
                    death[id] = death[id].max(rank(key[k].0));
                }
            }
        }
        let n_tags = tag_ids.len();

        // per-site actions
        let mut reads: Vec<Vec<(usize, Ladder, usize, C64)>> = vec![Vec::new(); n];
        let mut creates: Vec<Vec<(usize, Ladder, usize)>> = vec![Vec::new(); n];
        for (o, key, c) in &terms {
            for k in 0..key.len() {
                let (site, l) = key[k];
                let src = tag_ids[&key[..k]];
                if k + 1 == key.len() {
                    reads[site].push((src, l, *o, *c));
                } else {
                    let dst = tag_ids[&key[..k + 1]];
                    if !creates[site].iter().any(|x| x.2 == dst) {
                        creates[site].push((src, l, dst));
                    }
                }
            }
        }
        let mut drops: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (id, r) in death.iter().enumerate().skip(1) {
            drops[r.1].push(id);
        }

        // program
        let mut layouts = Vec::new();
        let mut plans = Vec::new();
        let mut program = Vec::new();
        let mut layout = if d > 0 { Layout::new(vec![Site::Boson], vec![d]) } else { Layout::new(Vec::new(), Vec::new()) };
        let initial = Graded { m: reset_sigma.clone(), delta: reset_delta };
        let initial = if d > 0 { initial } else { Graded { m: vec![ONE], delta: Some(0) } };
        layouts.push(layout.clone());
        let mut active = vec![false; n];
        let mut window_peak = 0;
        let box_size = circuit.box_size;

        let mut adjoin = |j: usize,
                          layout: &mut Layout,
                          layouts: &mut Vec<Layout>,
                          program: &mut Vec<Instr>,
                          active: &mut Vec<bool>|
         -> Result<()> {
            *layout = layout.with_appended(Site::Qubit(j), 2);
            layouts.push(layout.clone());
            active[j] = true;
            let count = active.iter().filter(|a| **a).count();
            window_peak = window_peak.max(count);
            if count > box_size {
                return Err(Error::Invariant(format!(
                    "{count} active qubits exceed the window of {box_size}"
                )));
            }
            program.push(Instr::Adjoin {
                sigma: locals[j].0.clone(),
                delta: locals[j].1,
                layout: layouts.len() - 1,
            });
            Ok(())
        };
        let retire = |j: usize,
                      layout: &mut Layout,
                      layouts: &mut Vec<Layout>,
                      program: &mut Vec<Instr>,
                      active: &mut Vec<bool>| {
            let pos = layout.position(Site::Qubit(j)).expect("active qubit");
            let before = layouts.len() - 1;
            *layout = layout.without(pos);
            layouts.push(layout.clone());
            active[j] = false;
            program.push(Instr::Retire(Retirement {
                pos,
                layout_before: before,
                reads: reads[j].clone(),
                creates: creates[j].clone(),
                drops: drops[j].clone(),
            }));
        };

        for j in 0..n {
            if last[j].is_none() {
                adjoin(j, &mut layout, &mut layouts, &mut program, &mut active)?;
                retire(j, &mut layout, &mut layouts, &mut program, &mut active);
            }
        }
        let mut retiring: Vec<Vec<usize>> = vec![Vec::new(); circuit.ops.len()];
        for j in 0..n {
            if let Some(i) = last[j] {
                retiring[i].push(j);
            }
        }
        for (i, step) in compiled.steps().iter().enumerate() {
            match step {
                Step::Gate { gen, sites, slot, sign } => {
                    for s in sites {
                        if let Site::Qubit(j) = *s {
                            if !active[j] {
                                adjoin(j, &mut layout, &mut layouts, &mut program, &mut active)?;
                            }
                        }
                    }
                    plans.push(GatePlan::new(&layout, &layout.positions(sites)?));
                    program.push(Instr::Gate {
                        gen: *gen,
                        slot: *slot,
                        sign: *sign,
                        layout: layouts.len() - 1,
                        plan: plans.len() - 1,
                    });
                }
                Step::Reset => {
                    let pos = layout.position(Site::Boson).ok_or(Error::NoBoson)?;
                    let before = layouts.len() - 1;
                    layout = layout.without(pos).with_appended(Site::Boson, d);
                    layouts.push(layout.clone());
                    program.push(Instr::Reset { pos, layout_before: before });
                }
            }
            for &j in &retiring[i] {
                retire(j, &mut layout, &mut layouts, &mut program, &mut active);
            }
        }

        Ok(Self {
            compiled,
            layouts,
            plans,
            program,
            initial,
            reset_sigma,
            reset_delta,
            n_tags,
            constants,
            window_peak,
        })
    }

    pub fn circuit(&self) -> &ParametrizedCircuit {
        self.compiled.circuit()
    }

    /// Most qubits held at once.
    pub fn window_peak(&self) -> usize {
        self.window_peak
    }

    /// Expectation value of every observable at `theta`.
    pub fn evaluate(&self, theta: &[f64]) -> Result<Vec<f64>> {
        self.compiled.circuit().check_params(theta)?;
        let mut values: Vec<C64> = self.constants.iter().map(|&c| C64::new(c, 0.0)).collect();
        let mut tags: Vec<Option<Graded>> = vec![None; self.n_tags];
        tags[0] = Some(self.initial.clone());
        let d = self.compiled.fock_cutoff();
        for instr in &self.program {
            match instr {
                Instr::Adjoin { sigma, delta, layout } => {
                    let old = self.layouts[*layout - 1].total;
                    for t in tags.iter_mut().flatten() {
                        *t = t.adjoin(old, sigma, 2, *delta);
                    }
                }
                Instr::Gate { gen, slot, sign, layout, plan } => {
                    let u = self.compiled.generator(*gen).unitary(sign * theta[*slot], true);
                    for t in tags.iter_mut().flatten() {
                        t.conjugate(&self.layouts[*layout], &self.plans[*plan], &u);
                    }
                }
                Instr::Reset { pos, layout_before, .. } => {
                    let lb = &self.layouts[*layout_before];
                    for t in tags.iter_mut().flatten() {
                        let (traced, l2) = t.trace_out(lb, *pos, None);
                        *t = traced.adjoin(l2.total, &self.reset_sigma, d, self.reset_delta);
                    }
                }
                Instr::Retire(r) => {
                    let lb = &self.layouts[r.layout_before];
                    for &(src, l, o, c) in &r.reads {
                        let m = tags[src].as_ref().ok_or_else(|| missing(src))?;
                        values[o] += c * m.trace_with(lb, r.pos, l.entries(), l.dq());
                    }
                    let mut created = Vec::with_capacity(r.creates.len());
                    for &(src, l, dst) in &r.creates {
                        let m = tags[src].as_ref().ok_or_else(|| missing(src))?;
                        created.push((dst, m.trace_out(lb, r.pos, Some((l.entries(), l.dq()))).0));
                    }
                    for &id in &r.drops {
                        tags[id] = None;
                    }
                    for t in tags.iter_mut().flatten() {
                        *t = t.trace_out(lb, r.pos, None).0;
                    }
                    for (dst, m) in created {
                        tags[dst] = Some(m);
                    }
                }
            }
        }
        values
            .into_iter()
            .map(|v| {
                if v.im.abs() > 1e-8 * (1.0 + v.re.abs()) {
                    Err(Error::Invariant(format!("expectation value with imaginary part {}", v.im)))
                } else {
                    Ok(v.re)
                }
            })
            .collect()
    }
}

fn missing(id: usize) -> Error {
    Error::Invariant(format!("tag {id} used after it was dropped"))
}

/// Expectation values of `observables` after running `circuit` on `|ψ_in⟩ ⊗ ρ0`
/// with the streaming evaluator.
pub fn run_streaming(
    circuit: &ParametrizedCircuit,
    theta: &[f64],
    psi_in: &ProductState,
    rho0: Option<&DensityMatrix>,
    observables: &[PauliSum],
) -> Result<Vec<f64>> {
    let d = match rho0 {
        Some(r) => r.space().fock_cutoff,
        None if circuit.uses_boson() => {
            return Err(Error::InvalidArgument("circuit needs an initial boson state".into()))
        }
        None => 0,
    };
    StreamingEvaluator::new(circuit, d, psi_in, rho0, observables)?.evaluate(theta)
}
