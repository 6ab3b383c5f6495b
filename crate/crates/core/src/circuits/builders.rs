use serde::{Deserialize, Serialize};

use super::{AnsatzFamily, BoxInfo, BoxKind, BuildParams, Gate, Operation, ParametrizedCircuit};
use crate::error::{Error, Result};
use crate::hamiltonians::{
    GeneratorSpec, DEFAULT_XY_ALPHA, DEFAULT_XY_COUPLING, DEFAULT_XY_FIELD,
};

/// Gates per bulk box before any extra parameters are added.
const BULK_BASE: usize = 5;
const EDGE_OPS: usize = 2;
const CSD_EDGE_OPS: usize = 3;
const INTERFACE_OPS: usize = 2;

fn bulk_kind(k: usize) -> BoxKind {
    if k % 2 == 0 {
        BoxKind::BulkOdd
    } else {
        BoxKind::BulkEven
    }
}

fn kinds_present(n: usize) -> usize {
    n.saturating_sub(2).min(2)
}

struct Builder {
    ops: Vec<Operation>,
    boxes: Vec<BoxInfo>,
}

impl Builder {
    fn new() -> Self {
        Self { ops: Vec::new(), boxes: Vec::new() }
    }

    fn push_box(&mut self, kind: BoxKind, new_qubit: Option<usize>, ops: Vec<Operation>) {
        let start = self.ops.len();
        self.ops.extend(ops);
        self.boxes.push(BoxInfo { kind, ops: start..self.ops.len(), new_qubit });
    }

    fn finish(self, family: AnsatzFamily, n: usize, np: usize, box_size: usize, build: BuildParams) -> Result<ParametrizedCircuit> {
        let c = ParametrizedCircuit {
            family,
            n_qubits: n,
            n_params: np,
            box_size,
            ops: self.ops,
            boxes: self.boxes,
            build,
        };
        c.validate()?;
        Ok(c)
    }
}

fn gate(generator: GeneratorSpec, slot: usize) -> Operation {
    Operation::Gate(Gate { generator, slot, sign: 1.0 })
}

fn older_sites(k: usize, l: usize) -> Vec<usize> {
    let lo = (k + 1).saturating_sub(l);
    (lo..k).rev().collect()
}

/// Site sequence of a bulk box with `m ≥ 5` gates, as `(site, kind-local id)`.
///
/// Gates alternate between the new qubit `k` and the older window sites. Each
/// extra gate is inserted into the previous sequence, so kind-local ids keep their
/// site. With two or more older sites the box always starts and ends on `k`.
fn bulk_sequence(k: usize, older: &[usize], m: usize) -> Vec<(usize, usize)> {
    let r = older.len();
    let mut seq = vec![(k, 0), (older[0], 1), (k, 2), (older[1 % r], 3), (k, 4)];
    let mut n_older = 2;
    for id in BULK_BASE..m {
        let len = seq.len();
        if r == 1 {
            let site = if len % 2 == 1 { older[0] } else { k };
            seq.push((site, id));
        } else if len % 2 == 1 {
            seq.insert(len - 1, (older[n_older % r], id));
            n_older += 1;
        } else {
            seq.insert(len - 2, (k, id));
        }
    }
    seq
}

/// Smallest parameter count of the sideband ansatz.
pub fn min_params_qdb_mps(n: usize) -> usize {
    2 * EDGE_OPS + kinds_present(n) * BULK_BASE
}

/// Extra gates given to each bulk kind, alternating and starting with the odd kind.
fn split_extras(extra: usize, kinds: usize) -> [usize; 2] {
    match kinds {
        2 => [(extra + 1) / 2, extra / 2],
        _ => [extra, 0],
    }
}

/// Global slot of a kind-local id. `base` is the first slot after the minimal set.
fn bulk_slot(kind: BoxKind, local: usize, min_bulk_start: usize, base: usize, kinds: usize) -> usize {
    let k_idx = if kind == BoxKind::BulkOdd { 0 } else { 1 };
    if local < BULK_BASE {
        min_bulk_start + k_idx * BULK_BASE + local
    } else {
        let i = local - BULK_BASE;
        if kinds == 2 {
            base + 2 * i + k_idx
        } else {
            base + i
        }
    }
}

fn check_common(n: usize, l: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidArgument("need at least two qubits".into()));
    }
    if n > crate::hilbert::MAX_QUBITS {
        return Err(Error::SizeCap { n, cap: crate::hilbert::MAX_QUBITS });
    }
    if l < 2 {
        return Err(Error::InvalidArgument("box size must be at least 2".into()));
    }
    Ok(())
}

struct SidebandPlan {
    min_bulk_start: usize,
    base: usize,
    kinds: usize,
    per_kind: [usize; 2],
}

impl SidebandPlan {
    fn new(n: usize, np: usize, base: usize, min_np: usize) -> Result<Self> {
        if np < min_np {
            return Err(Error::TooFewParameters { got: np, min: min_np });
        }
        let kinds = kinds_present(n);
        if kinds == 0 && np > min_np {
            return Err(Error::InvalidArgument("two qubits leave no bulk box to extend".into()));
        }
        let extras = split_extras(np - min_np, kinds);
        Ok(Self {
            min_bulk_start: 2 * EDGE_OPS,
            base,
            kinds,
            per_kind: [BULK_BASE + extras[0], BULK_BASE + extras[1]],
        })
    }

    fn bulk_box(&self, b: &mut Builder, k: usize, l: usize) {
        let kind = bulk_kind(k);
        let m = self.per_kind[if kind == BoxKind::BulkOdd { 0 } else { 1 }];
        let ops = bulk_sequence(k, &older_sites(k, l), m)
            .into_iter()
            .map(|(site, local)| {
                gate(
                    GeneratorSpec::sideband(site),
                    bulk_slot(kind, local, self.min_bulk_start, self.base, self.kinds),
                )
            })
            .collect();
        b.push_box(kind, Some(k), ops);
    }
}

fn left_edge(b: &mut Builder) {
    b.push_box(
        BoxKind::LeftEdge,
        None,
        vec![gate(GeneratorSpec::sideband(0), 0), gate(GeneratorSpec::sideband(1), 1)],
    );
}

fn right_edge(b: &mut Builder, n: usize) {
    b.push_box(
        BoxKind::RightEdge,
        None,
        vec![gate(GeneratorSpec::sideband(n - 2), 2), gate(GeneratorSpec::sideband(n - 1), 3)],
    );
}

/// Sideband ansatz with a single bus: left edge box on qubits 0 and 1, one bulk box
/// per further qubit acting on the last `l` qubits, and a right edge box.
pub fn build_qdb_mps_ansatz(n: usize, l: usize, np: usize) -> Result<ParametrizedCircuit> {
    check_common(n, l)?;
    let min = min_params_qdb_mps(n);
    let plan = SidebandPlan::new(n, np, min, min)?;
    let mut b = Builder::new();
    left_edge(&mut b);
    for k in 2..n {
        plan.bulk_box(&mut b, k, l);
    }
    right_edge(&mut b, n);
    b.finish(AnsatzFamily::QdbMps, n, np, l.min(n), BuildParams::QdbMps { n, l, np })
}

pub fn min_params_modular(n_traps: usize, ions_per_trap: usize) -> usize {
    let n = n_traps * ions_per_trap;
    min_params_qdb_mps(n) + if n_traps > 1 { INTERFACE_OPS } else { 0 }
}

/// Sideband ansatz spread over `n_traps` traps of `ions_per_trap` new qubits each.
///
/// After the last qubit of a trap, `U_I` (two sideband gates on the two most recent
/// qubits) moves the bus state into the carried qubits, the bus is reset, and `U_I†`
/// moves it back in the next trap. All interfaces share two slots that follow the
/// minimal bulk set. With one trap the result equals [`build_qdb_mps_ansatz`].
pub fn build_modular_ansatz(n_traps: usize, ions_per_trap: usize, l: usize, np: usize) -> Result<ParametrizedCircuit> {
    if n_traps == 0 || ions_per_trap < 2 {
        return Err(Error::InvalidArgument("need at least one trap of two ions".into()));
    }
    let n = n_traps * ions_per_trap;
    if n_traps == 1 {
        return build_qdb_mps_ansatz(n, l, np);
    }
    check_common(n, l)?;
    if l < 3 {
        return Err(Error::InvalidArgument(
            "the trap interface needs a box size of at least 3".into(),
        ));
    }
    let single_min = min_params_qdb_mps(n);
    let min = single_min + INTERFACE_OPS;
    let plan = SidebandPlan::new(n, np, min, min)?;
    let (ia, ib) = (single_min, single_min + 1);
    let mut b = Builder::new();
    left_edge(&mut b);
    let interface = |b: &mut Builder, last: usize| {
        let (p, q) = (last - 1, last);
        let ops = vec![
            gate(GeneratorSpec::sideband(p), ia),
            gate(GeneratorSpec::sideband(q), ib),
            Operation::ResetBoson,
            Operation::Gate(Gate { generator: GeneratorSpec::sideband(q), slot: ib, sign: -1.0 }),
            Operation::Gate(Gate { generator: GeneratorSpec::sideband(p), slot: ia, sign: -1.0 }),
        ];
        b.push_box(BoxKind::Interface, None, ops);
    };
    for k in 2..n {
        if k % ions_per_trap == 0 {
            interface(&mut b, k - 1);
        }
        plan.bulk_box(&mut b, k, l);
    }
    right_edge(&mut b, n);
    b.finish(
        AnsatzFamily::QdbMpsModular,
        n,
        np,
        l.min(n),
        BuildParams::Modular { n_traps, ions_per_trap, l, np },
    )
}

pub fn min_params_csd_mps(n: usize, l: usize) -> usize {
    2 * CSD_EDGE_OPS + kinds_present(n) * (1 + l)
}

/// Collective-coupling ansatz: boxes of one all-to-all `σ^xσ^x` gate on the window
/// followed by `σ^z` rotations on each window site, repeated in layers.
pub fn build_csd_mps_ansatz(n: usize, l: usize, np: usize) -> Result<ParametrizedCircuit> {
    check_common(n, l)?;
    if l > n {
        return Err(Error::InvalidArgument(format!("box size {l} exceeds {n} qubits")));
    }
    let min = min_params_csd_mps(n, l);
    if np < min {
        return Err(Error::TooFewParameters { got: np, min });
    }
    let kinds = kinds_present(n);
    if kinds == 0 && np > min {
        return Err(Error::InvalidArgument("two qubits leave no bulk box to extend".into()));
    }
    let layer = 1 + l;
    // kind-local op count and the global slot of every kind-local id
    let mut slots: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
    let mut next = 2 * CSD_EDGE_OPS;
    for k_idx in 0..kinds {
        for _ in 0..layer {
            slots[k_idx].push(next);
            next += 1;
        }
    }
    for e in 0..np - min {
        let k_idx = if kinds == 2 { (e / layer) % 2 } else { 0 };
        slots[k_idx].push(next);
        next += 1;
    }
    let mut b = Builder::new();
    let edge = |b: &mut Builder, kind, p: usize, q: usize, s0: usize| {
        b.push_box(
            kind,
            None,
            vec![
                gate(GeneratorSpec::ms(vec![p, q]), s0),
                gate(GeneratorSpec::z_rotation(p), s0 + 1),
                gate(GeneratorSpec::z_rotation(q), s0 + 2),
            ],
        );
    };
    edge(&mut b, BoxKind::LeftEdge, 0, 1, 0);
    for k in 2..n {
        let kind = bulk_kind(k);
        let k_slots = &slots[if kind == BoxKind::BulkOdd { 0 } else { 1 }];
        let window: Vec<usize> = ((k + 1).saturating_sub(l)..=k).collect();
        let mut ops = Vec::new();
        for (local, &slot) in k_slots.iter().enumerate() {
            let pos = local % layer;
            if pos == 0 {
                ops.push(gate(GeneratorSpec::ms(window.clone()), slot));
            } else if pos - 1 <= k && window.contains(&(k - (pos - 1))) {
                ops.push(gate(GeneratorSpec::z_rotation(k - (pos - 1)), slot));
            }
        }
        b.push_box(kind, Some(k), ops);
    }
    edge(&mut b, BoxKind::RightEdge, n - 2, n - 1, CSD_EDGE_OPS);
    b.finish(AnsatzFamily::CsdMps, n, np, l, BuildParams::CsdMps { n, l, np })
}

/// Angle-sharing constraints of the global ansatz.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CsaConstraints {
    /// `θ_j = −θ_{N−1−j}` for the `σ^z` rotations.
    pub chiral: bool,
    /// `θ_j = θ_{j+2}` between bulk sites.
    pub translation: bool,
    /// Sites at each end excluded from the translation constraint.
    pub edge_sites: usize,
}

impl Default for CsaConstraints {
    fn default() -> Self {
        Self { chiral: true, translation: true, edge_sites: 1 }
    }
}

/// Groups rotation sites into shared slots: `(site, sign)` per class, ordered by the
/// smallest site. Sites forced equal to their own negative are dropped.
pub fn csa_slot_classes(n: usize, c: CsaConstraints) -> Vec<Vec<(usize, f64)>> {
    // union-find with parity: value(j) = parity(j) · value(root(j))
    let mut parent: Vec<usize> = (0..n).collect();
    let mut parity = vec![1.0f64; n];
    let mut pinned = vec![false; n];
    fn find(parent: &mut Vec<usize>, parity: &mut Vec<f64>, j: usize) -> (usize, f64) {
        if parent[j] == j {
            return (j, 1.0);
        }
        let (r, p) = find(parent, parity, parent[j]);
        parent[j] = r;
        parity[j] *= p;
        (r, parity[j])
    }
    let mut link = |a: usize, b: usize, sign: f64| {
        let (ra, pa) = find(&mut parent, &mut parity, a);
        let (rb, pb) = find(&mut parent, &mut parity, b);
        if ra == rb {
            if pa * pb != sign {
                pinned[ra] = true;
            }
        } else {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            parent[hi] = lo;
            parity[hi] = pa * pb * sign;
            pinned[lo] = pinned[lo] || pinned[hi];
        }
    };
    if c.chiral {
        for j in 0..n / 2 + n % 2 {
            link(j, n - 1 - j, -1.0);
        }
    }
    if c.translation {
        let lo = c.edge_sites;
        let hi = n.saturating_sub(c.edge_sites);
        for j in lo..hi.saturating_sub(2) {
            link(j, j + 2, 1.0);
        }
    }
    let mut classes: Vec<(usize, Vec<(usize, f64)>)> = Vec::new();
    for j in 0..n {
        let (r, p) = find(&mut parent, &mut parity, j);
        if pinned[r] {
            continue;
        }
        match classes.iter_mut().find(|(root, _)| *root == r) {
            Some((_, v)) => v.push((j, p)),
            None => classes.push((r, vec![(j, p)])),
        }
    }
    classes
        .into_iter()
        .map(|(_, mut v)| {
            let s0 = v[0].1;
            for x in v.iter_mut() {
                x.1 *= s0;
            }
            v
        })
        .collect()
}

/// Global ansatz with `n_layers` layers of one long-range XY evolution followed by
/// constrained `σ^z` rotations, default XY parameters.
pub fn build_csa_ansatz(n: usize, n_layers: usize, constraints: CsaConstraints) -> Result<ParametrizedCircuit> {
    let per_layer = 1 + csa_slot_classes(n, constraints).len();
    build_csa_ansatz_with_params(
        n,
        n_layers * per_layer,
        constraints,
        DEFAULT_XY_ALPHA,
        DEFAULT_XY_COUPLING,
        DEFAULT_XY_FIELD,
    )
}

/// Global ansatz with exactly `np` slots; the last layer may be partial.
pub fn build_csa_ansatz_with_params(
    n: usize,
    np: usize,
    constraints: CsaConstraints,
    alpha: f64,
    j0: f64,
    b_field: f64,
) -> Result<ParametrizedCircuit> {
    check_common(n, 2)?;
    if np == 0 {
        return Err(Error::TooFewParameters { got: 0, min: 1 });
    }
    let classes = csa_slot_classes(n, constraints);
    let per_layer = 1 + classes.len();
    let mut b = Builder::new();
    let mut slot = 0;
    while slot < np {
        let mut ops = vec![gate(GeneratorSpec::xy(alpha, j0, b_field), slot)];
        slot += 1;
        for class in &classes {
            if slot >= np {
                break;
            }
            for &(site, sign) in class {
                ops.push(Operation::Gate(Gate { generator: GeneratorSpec::z_rotation(site), slot, sign }));
            }
            slot += 1;
        }
        b.push_box(BoxKind::Layer, None, ops);
    }
    debug_assert!(per_layer > 0);
    b.finish(
        AnsatzFamily::Csa,
        n,
        np,
        n,
        BuildParams::Csa { n, np, constraints, alpha, j0, b: b_field },
    )
}
