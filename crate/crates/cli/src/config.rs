//! Experiment configuration: a JSON file with command-line overrides.

use std::path::{Path, PathBuf};

use qbus::circuits::{AnsatzFamily, CsaConstraints};
use qbus::hamiltonians::{
    DEFAULT_DIMERIZATION, DEFAULT_EDGE_FIELD, DEFAULT_XY_ALPHA, DEFAULT_XY_COUPLING, DEFAULT_XY_FIELD,
};
use qbus::optimize::{BasinHoppingOptions, BfgsOptions, SweepOptions};
use qbus::vqe::VqeOptions;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// A single value or a grid of values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Axis<T> {
    One(T),
    Grid(Vec<T>),
}

impl<T: Clone> Axis<T> {
    pub fn values(&self) -> Vec<T> {
        match self {
            Axis::One(v) => vec![v.clone()],
            Axis::Grid(v) => v.clone(),
        }
    }

    pub fn is_grid(&self) -> bool {
        matches!(self, Axis::Grid(v) if v.len() > 1)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerConfig {
    pub restarts: usize,
    pub n_hops: usize,
    pub step_scale: f64,
    pub temperature_scale: f64,
    pub gtol: f64,
    pub max_iter: usize,
    pub init_low: f64,
    pub init_high: f64,
    pub sweep_tol: f64,
    pub sweep_max_passes: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        let v = VqeOptions::default();
        let s = SweepOptions::default();
        Self {
            restarts: v.restarts,
            n_hops: v.basin.n_hops,
            step_scale: v.basin.step_scale,
            temperature_scale: v.basin.temperature_scale,
            gtol: v.basin.bfgs.gtol,
            max_iter: v.basin.bfgs.max_iter,
            init_low: v.init_low,
            init_high: v.init_high,
            sweep_tol: s.tol,
            sweep_max_passes: s.max_passes,
        }
    }
}

impl OptimizerConfig {
    pub fn basin(&self, seed: u64) -> BasinHoppingOptions {
        BasinHoppingOptions {
            n_hops: self.n_hops,
            step_scale: self.step_scale,
            temperature_scale: self.temperature_scale,
            seed,
            bfgs: BfgsOptions { gtol: self.gtol, max_iter: self.max_iter },
        }
    }

    pub fn vqe(&self, seed: u64) -> VqeOptions {
        VqeOptions {
            restarts: self.restarts,
            init_low: self.init_low,
            init_high: self.init_high,
            basin: self.basin(seed),
            target_energy: None,
        }
    }

    pub fn sweep(&self) -> SweepOptions {
        SweepOptions { tol: self.sweep_tol, max_passes: self.sweep_max_passes }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub ansatz: String,
    pub n: Axis<usize>,
    /// Parameter count; for the modular family it includes the two interface slots.
    pub np: Axis<usize>,
    pub n0: Axis<f64>,
    pub t: f64,
    pub b_tilde: f64,
    /// Bulk box size of the sequential families.
    pub l: usize,
    /// Traps of the modular family; the qubits are split evenly.
    pub n_traps: usize,
    pub alpha: f64,
    pub b_field: f64,
    pub j0: f64,
    pub csa: CsaConstraints,
    pub optimizer: OptimizerConfig,
    pub seed: u64,
    pub output: Option<PathBuf>,
    /// Evaluate at θ = 0 instead of optimizing.
    pub dry_run: bool,
    pub record_wall_time: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            ansatz: "qdb-mps".into(),
            n: Axis::One(6),
            np: Axis::One(18),
            n0: Axis::One(0.0),
            t: DEFAULT_DIMERIZATION,
            b_tilde: DEFAULT_EDGE_FIELD,
            l: 3,
            n_traps: 2,
            alpha: DEFAULT_XY_ALPHA,
            b_field: DEFAULT_XY_FIELD,
            j0: DEFAULT_XY_COUPLING,
            csa: CsaConstraints::default(),
            optimizer: OptimizerConfig::default(),
            seed: 0,
            output: None,
            dry_run: false,
            record_wall_time: false,
        }
    }
}

/// Which grid axis a scan runs along.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScanAxis {
    N,
    Np,
    N0,
}

impl ScanAxis {
    pub fn name(self) -> &'static str {
        match self {
            ScanAxis::N => "n",
            ScanAxis::Np => "np",
            ScanAxis::N0 => "n0",
        }
    }
}

fn strictly_monotone(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] > w[0]) || v.windows(2).all(|w| w[1] < w[0])
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn family(&self) -> Result<AnsatzFamily, CliError> {
        AnsatzFamily::parse(&self.ansatz).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Checks grids and value ranges.
    pub fn validate(&self) -> Result<(), CliError> {
        let family = self.family()?;
        let cfg = |m: String| Err(CliError::Config(m));
        let n = self.n.values();
        let np = self.np.values();
        let n0 = self.n0.values();
        if n.is_empty() || np.is_empty() || n0.is_empty() {
            return cfg("grids must not be empty".into());
        }
        for (name, v) in [
            ("n", n.iter().map(|&x| x as f64).collect::<Vec<_>>()),
            ("np", np.iter().map(|&x| x as f64).collect()),
            ("n0", n0.clone()),
        ] {
            if !strictly_monotone(&v) {
                return cfg(format!("grid `{name}` must be strictly monotone"));
            }
        }
        if let Some(x) = n0.iter().find(|x| !(**x >= 0.0 && x.is_finite())) {
            return cfg(format!("n0 = {x} must be a finite non-negative number"));
        }
        if !family.uses_boson() && n0.iter().any(|&x| x != 0.0) {
            return cfg(format!("{} has no bus; n0 must be 0", family.name()));
        }
        if let Some(x) = n.iter().find(|&&x| x % 2 == 1) {
            return cfg(format!("N = {x} is odd; the Néel input needs an even chain"));
        }
        if family == AnsatzFamily::QdbMpsModular {
            if self.n_traps == 0 {
                return cfg("n_traps must be positive".into());
            }
            if let Some(x) = n.iter().find(|&&x| x % self.n_traps != 0) {
                return cfg(format!("N = {x} does not split into {} traps", self.n_traps));
            }
        }
        if self.optimizer.restarts == 0 || self.optimizer.n_hops == 0 {
            return cfg("restarts and n_hops must be positive".into());
        }
        if !(self.optimizer.init_low < self.optimizer.init_high) {
            return cfg("init_low must be below init_high".into());
        }
        Ok(())
    }

    /// The single axis holding more than one value, if exactly one does.
    pub fn scan_axis(&self) -> Result<ScanAxis, CliError> {
        let grids: Vec<ScanAxis> = [
            (self.n.is_grid(), ScanAxis::N),
            (self.np.is_grid(), ScanAxis::Np),
            (self.n0.is_grid(), ScanAxis::N0),
        ]
        .into_iter()
        .filter_map(|(g, a)| g.then_some(a))
        .collect();
        match grids.as_slice() {
            [a] => Ok(*a),
            [] => Err(CliError::Config("a scan needs one grid axis with several values".into())),
            _ => Err(CliError::Config("a scan takes exactly one grid axis".into())),
        }
    }

    pub fn require_single_point(&self) -> Result<(), CliError> {
        if self.n.is_grid() || self.np.is_grid() || self.n0.is_grid() {
            return Err(CliError::Config("run takes single values; use scan for grids".into()));
        }
        Ok(())
    }
}

/// Parses `6` or `6,8,10`.
pub fn parse_axis<T: std::str::FromStr>(s: &str) -> Result<Axis<T>, String>
where
    T::Err: std::fmt::Display,
{
    let vals: Vec<T> = s
        .split(',')
        .map(|p| p.trim().parse::<T>().map_err(|e| format!("`{p}`: {e}")))
        .collect::<Result<_, _>>()?;
    Ok(if vals.len() == 1 { Axis::One(vals.into_iter().next().unwrap()) } else { Axis::Grid(vals) })
}
