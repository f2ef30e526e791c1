//! Serialized report layouts. Field order is fixed so that outputs are
//! byte-identical across runs.

use pruefer_core::flow::{
    ComparisonReport, ComparisonRow, RotationMethod, StabilizationCheck, SweepPoint,
};
use pruefer_core::krein::DENOMINATOR_FLOOR;
use pruefer_core::pruefer::{POSITIVITY_TOL, PROJECTION_TARGET, REUNITARIZE_THRESHOLD};
use pruefer_core::spectra::SINGULAR_PIVOT_RTOL;
use serde::Serialize;

use crate::config::RunConfig;

#[derive(Debug, Serialize)]
pub struct Provenance {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub seed: u64,
    pub tolerances: Tolerances,
    pub config: RunConfig,
}

#[derive(Debug, Serialize)]
pub struct Tolerances {
    pub positivity: f64,
    pub reunitarize_threshold: f64,
    pub projection_target: f64,
    pub denominator_floor: f64,
    pub singular_pivot_rtol: f64,
    pub energy_perturbation: &'static str,
}

impl Provenance {
    pub fn new(command: &'static str, config: &RunConfig) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command,
            seed: config.model.seed,
            tolerances: Tolerances {
                positivity: POSITIVITY_TOL,
                reunitarize_threshold: REUNITARIZE_THRESHOLD,
                projection_target: PROJECTION_TARGET,
                denominator_floor: DENOMINATOR_FLOOR,
                singular_pivot_rtol: SINGULAR_PIVOT_RTOL,
                energy_perturbation: "1e-9*(1+|E|)",
            },
            config: config.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct CompareCsvRow {
    #[serde(rename = "E")]
    pub energy: f64,
    pub idos: f64,
    pub rotation: f64,
    pub diff: f64,
}

impl From<&ComparisonRow> for CompareCsvRow {
    fn from(r: &ComparisonRow) -> Self {
        Self {
            energy: r.energy,
            idos: r.idos,
            rotation: r.rotation,
            diff: r.diff,
        }
    }
}

pub fn method_name(m: RotationMethod) -> &'static str {
    match m {
        RotationMethod::Lift => "lift",
        RotationMethod::Panels => "panels",
    }
}

#[derive(Debug, Serialize)]
pub struct CompareSummary {
    pub length: usize,
    pub fiber: usize,
    pub lambda: f64,
    pub method: &'static str,
    pub e_cut: f64,
    pub panels: usize,
    pub tail_low: f64,
    pub max_abs_diff: f64,
    pub bound: f64,
    pub budget: f64,
    pub pass: bool,
    pub min_velocity: f64,
    pub perturbed_points: usize,
}

impl From<&ComparisonReport> for CompareSummary {
    fn from(r: &ComparisonReport) -> Self {
        Self {
            length: r.length,
            fiber: r.fiber,
            lambda: r.lambda,
            method: method_name(r.method),
            e_cut: r.e_cut,
            panels: r.panels,
            tail_low: r.tail_low,
            max_abs_diff: r.max_abs_diff,
            bound: r.bound,
            budget: r.budget,
            pass: r.pass,
            min_velocity: r.min_velocity,
            perturbed_points: r.perturbed_points,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct CompareDocument {
    pub provenance: Provenance,
    pub summary: CompareSummary,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub runtime_seconds: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rows: Option<Vec<CompareCsvRow>>,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct IdosRow {
    #[serde(rename = "E")]
    pub energy: f64,
    pub count: usize,
    pub idos: f64,
    pub perturbed: bool,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct RotationRow {
    #[serde(rename = "E")]
    pub energy: f64,
    pub rotation: f64,
    pub velocity: f64,
}

#[derive(Debug, Serialize)]
pub struct TableDocument<R> {
    pub provenance: Provenance,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub runtime_seconds: Option<f64>,
    pub rows: Vec<R>,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SweepCsvRow {
    pub value: usize,
    #[serde(rename = "N")]
    pub length: usize,
    pub m: usize,
    #[serde(rename = "E")]
    pub energy: f64,
    pub idos_mean: f64,
    pub idos_stderr: f64,
    pub rotation_mean: f64,
    pub rotation_stderr: f64,
}

#[derive(Debug, Serialize)]
pub struct SweepPointSummary {
    pub value: usize,
    pub length: usize,
    pub fiber: usize,
    pub realizations: usize,
    pub max_abs_diff: f64,
    pub scaled_diff: f64,
    pub bound: f64,
    pub pass: bool,
}

impl From<&SweepPoint> for SweepPointSummary {
    fn from(p: &SweepPoint) -> Self {
        Self {
            value: p.value,
            length: p.length,
            fiber: p.fiber,
            realizations: p.realizations,
            max_abs_diff: p.max_abs_diff,
            scaled_diff: p.scaled_diff,
            bound: p.bound,
            pass: p.pass,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct StabilizationRow {
    pub from: usize,
    pub to: usize,
    #[serde(rename = "E")]
    pub energy: f64,
    pub idos_z: f64,
    pub rotation_z: f64,
}

impl From<&StabilizationCheck> for StabilizationRow {
    fn from(c: &StabilizationCheck) -> Self {
        Self {
            from: c.from,
            to: c.to,
            energy: c.energy,
            idos_z: c.idos_z,
            rotation_z: c.rotation_z,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct SweepDocument {
    pub provenance: Provenance,
    pub axis: &'static str,
    pub points: Vec<SweepPointSummary>,
    pub stabilization: Vec<StabilizationRow>,
    /// Joint standard errors allowed between successive `L` values.
    pub stabilization_sigmas: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub runtime_seconds: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rows: Option<Vec<SweepCsvRow>>,
}

#[derive(Debug, Serialize)]
pub struct CheckRow {
    pub check: &'static str,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Serialize)]
pub struct ValidateDocument {
    pub provenance: Provenance,
    pub checks: Vec<CheckRow>,
    pub pass: bool,
}
