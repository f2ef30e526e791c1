//! Rotation numbers and their comparison with the IDOS.
//!
//! The rotation number at `E` is `(1/2π)∫_{−∞}^E Tr(S^e)/m de`. Two
//! evaluations are offered.
//!
//! * [`RotationMethod::Lift`] uses `N·Tr(S) = dΘ/dE` with `Θ` the continuous
//!   branch of `arg det U_N^E`, which [`PrueferChain::lifted`] computes
//!   exactly at a single energy. This is the default.
//! * [`RotationMethod::Panels`] integrates the velocity on fixed composite
//!   panels over `[−E_cut, E]` and adds the high-energy tail `S ≈ 2/(N e²)`
//!   below `−E_cut`. Panels are denser on `[−(3Λ+1), 3Λ+1]`. The velocity
//!   carries peaks of width down to `O(N⁻³)` at band edges and exponentially
//!   small for localized states, so fixed panels only converge for short
//!   strips.

use alloc::vec::Vec;

use crate::exec::{Executor, Sequential};
use crate::model::{build_finite_jacobi, BlockJacobi, ModelParams};
use crate::pruefer::{phase_velocity, PrueferChain};
use crate::spectra::{idos, realization_params};
use crate::stats::{EnsembleStat, RunningStats};
use crate::{Error, Result};

const GL4_NODES: [f64; 2] = [0.339_981_043_584_856_3, 0.861_136_311_594_052_6];
const GL4_WEIGHTS: [f64; 2] = [0.652_145_154_862_546_1, 0.347_854_845_137_453_8];

/// Share of the panels placed on the spectral core `[−(3Λ+1), 3Λ+1]`.
pub const CORE_FRACTION: f64 = 0.75;
/// Default allowance for quadrature, tail and unitarity errors in comparisons.
pub const DEFAULT_BUDGET: f64 = 5e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum QuadratureRule {
    #[default]
    GaussLegendre4,
    Simpson,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TailModel {
    #[default]
    Asymptotic,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RotationMethod {
    #[default]
    Lift,
    Panels,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    pub method: RotationMethod,
    /// Truncation energy; `None` means `10Λ + 10`.
    pub e_cut: Option<f64>,
    pub panels: usize,
    pub rule: QuadratureRule,
    pub tail: TailModel,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            method: RotationMethod::Lift,
            e_cut: None,
            panels: 512,
            rule: QuadratureRule::GaussLegendre4,
            tail: TailModel::Asymptotic,
        }
    }
}

impl QuadratureSpec {
    pub fn cutoff(&self, lambda: f64) -> f64 {
        self.e_cut.unwrap_or(10.0 * lambda + 10.0)
    }

    /// Fixes the panel layout for an operator with bound `Λ`.
    pub fn resolve(&self, lambda: f64) -> Result<Quadrature> {
        let e_cut = self.cutoff(lambda);
        if !(e_cut > 0.0) || !e_cut.is_finite() {
            return Err(Error::InvalidParams(alloc::format!(
                "E_cut must be positive, got {e_cut}"
            )));
        }
        if self.tail == TailModel::Asymptotic && e_cut < 4.0 * lambda {
            return Err(Error::InvalidParams(alloc::format!(
                "E_cut = {e_cut} is below 4*Lambda = {}, outside the asymptotic regime",
                4.0 * lambda
            )));
        }
        if self.panels < 4 {
            return Err(Error::InvalidParams("at least 4 panels are needed".into()));
        }
        let core = 3.0 * lambda + 1.0;
        let mut breaks = Vec::with_capacity(self.panels + 1);
        if core < e_cut {
            let wing =
                (libm::round(self.panels as f64 * (1.0 - CORE_FRACTION) / 2.0) as usize).max(1);
            let inner = self.panels - 2 * wing;
            push_uniform(&mut breaks, -e_cut, -core, wing);
            push_uniform(&mut breaks, -core, core, inner);
            push_uniform(&mut breaks, core, e_cut, wing);
            breaks.push(e_cut);
        } else {
            push_uniform(&mut breaks, -e_cut, e_cut, self.panels);
            breaks.push(e_cut);
        }
        Ok(Quadrature {
            e_cut,
            breaks,
            rule: self.rule,
            tail: self.tail,
        })
    }
}

/// Left endpoints of `n` equal panels on `[a, b)`.
fn push_uniform(out: &mut Vec<f64>, a: f64, b: f64, n: usize) {
    let h = (b - a) / n as f64;
    out.extend((0..n).map(|k| a + h * k as f64));
}

/// `n` equally spaced points on `[a, b]`, endpoints included.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => alloc::vec![a],
        _ => {
            let h = (b - a) / (n - 1) as f64;
            (0..n)
                .map(|k| if k + 1 == n { b } else { a + h * k as f64 })
                .collect()
        }
    }
}

/// `points` energies on `[−3Λ−2, 3Λ+2]`.
pub fn default_grid(lambda: f64, points: usize) -> Vec<f64> {
    let r = 3.0 * lambda + 2.0;
    linspace(-r, r, points)
}

/// A resolved panel layout.
#[derive(Debug, Clone, PartialEq)]
pub struct Quadrature {
    pub e_cut: f64,
    /// Panel boundaries, ascending from `−E_cut` to `E_cut`.
    pub breaks: Vec<f64>,
    pub rule: QuadratureRule,
    pub tail: TailModel,
}

impl Quadrature {
    pub fn panels(&self) -> usize {
        self.breaks.len() - 1
    }

    /// Rotation mass beyond `±E_cut` for a strip of length `N`:
    /// `(1/2π)∫_{E_cut}^∞ 2/(N e²) de = 1/(πN·E_cut)`.
    pub fn tail(&self, length: usize) -> f64 {
        match self.tail {
            TailModel::Asymptotic => 1.0 / (core::f64::consts::PI * length as f64 * self.e_cut),
            TailModel::None => 0.0,
        }
    }

    /// Appends the nodes and weights of the rule on `[a, b]`.
    fn push_rule(&self, a: f64, b: f64, nodes: &mut Vec<(f64, f64)>) {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        match self.rule {
            QuadratureRule::GaussLegendre4 => {
                for (x, w) in GL4_NODES.iter().zip(GL4_WEIGHTS) {
                    nodes.push((mid - half * x, half * w));
                    nodes.push((mid + half * x, half * w));
                }
            }
            QuadratureRule::Simpson => {
                let h = b - a;
                nodes.push((a, h / 6.0));
                nodes.push((mid, 4.0 * h / 6.0));
                nodes.push((b, h / 6.0));
            }
        }
    }

    /// Index of the panel whose half-open interval `[b_k, b_{k+1})` holds `e`.
    fn panel_of(&self, e: f64) -> usize {
        let k = self.breaks.partition_point(|&b| b <= e);
        k.saturating_sub(1).min(self.panels() - 1)
    }
}

/// Rotation numbers and velocities at a set of energies.
#[derive(Debug, Clone, PartialEq)]
pub struct RotationProfile {
    pub grid: Vec<f64>,
    /// `Tr(S)/m` at each grid energy.
    pub velocity: Vec<f64>,
    /// Rotation number at each grid energy, lower tail included.
    pub cumulative: Vec<f64>,
    pub tail_low: f64,
    /// Mass above `E_cut`, `1 −` this is the expected total.
    pub tail_high: f64,
    /// Smallest velocity met at any quadrature node or grid point.
    pub min_velocity: f64,
}

/// `Tr(S^E)/m` at each energy.
pub fn velocity_profile(j: &BlockJacobi, grid: &[f64], exec: &impl Executor) -> Result<Vec<f64>> {
    let chain = PrueferChain::new(j)?;
    velocities(&chain, grid, exec)
}

fn velocities(chain: &PrueferChain, energies: &[f64], exec: &impl Executor) -> Result<Vec<f64>> {
    exec.map(energies.len(), |k| {
        chain.velocity(energies[k]).map(|v| v.trace_per_site())
    })
    .into_iter()
    .collect()
}

/// Rotation numbers at every energy in `grid` (any order).
pub fn rotation_profile(
    j: &BlockJacobi,
    grid: &[f64],
    q: &Quadrature,
    exec: &impl Executor,
) -> Result<RotationProfile> {
    for &e in grid {
        if !(e >= -q.e_cut) {
            return Err(Error::EnergyBelowCutoff {
                energy: e,
                cutoff: q.e_cut,
            });
        }
        if !(e <= q.e_cut) {
            return Err(Error::InvalidParams(alloc::format!(
                "energy {e} lies above the quadrature cutoff {}",
                q.e_cut
            )));
        }
    }
    let e_max = grid.iter().copied().fold(-q.e_cut, f64::max);
    // Full panels needed to reach the largest energy.
    let full = if e_max >= q.e_cut {
        q.panels()
    } else {
        q.panel_of(e_max)
    };

    let mut nodes = Vec::new();
    for k in 0..full {
        q.push_rule(q.breaks[k], q.breaks[k + 1], &mut nodes);
    }
    let full_nodes = nodes.len();
    let mut partial_ranges = Vec::with_capacity(grid.len());
    for &e in grid {
        let k = if e >= q.e_cut {
            q.panels()
        } else {
            q.panel_of(e)
        };
        let start = nodes.len();
        if k < q.panels() && e > q.breaks[k] {
            q.push_rule(q.breaks[k], e, &mut nodes);
        }
        partial_ranges.push((k, start, nodes.len()));
    }
    let velocity_start = nodes.len();
    nodes.extend(grid.iter().map(|&e| (e, 0.0)));

    let energies: Vec<f64> = nodes.iter().map(|n| n.0).collect();
    let chain = PrueferChain::new(j)?;
    let values = velocities(&chain, &energies, exec)?;
    let min_velocity = values.iter().copied().fold(f64::INFINITY, f64::min);

    let per_panel = full_nodes.checked_div(full).unwrap_or(0);
    let mut cumulative_panels = Vec::with_capacity(full + 1);
    let mut acc = 0.0;
    cumulative_panels.push(0.0);
    for k in 0..full {
        for i in k * per_panel..(k + 1) * per_panel {
            acc += nodes[i].1 * values[i];
        }
        cumulative_panels.push(acc);
    }

    let two_pi = 2.0 * core::f64::consts::PI;
    let tail = q.tail(j.len());
    let cumulative = partial_ranges
        .iter()
        .map(|&(k, start, end)| {
            let partial: f64 = (start..end).map(|i| nodes[i].1 * values[i]).sum();
            tail + (cumulative_panels[k] + partial) / two_pi
        })
        .collect();
    Ok(RotationProfile {
        grid: grid.to_vec(),
        velocity: values[velocity_start..].to_vec(),
        cumulative,
        tail_low: tail,
        tail_high: tail,
        min_velocity,
    })
}

/// Rotation numbers from the lifted phase. No cutoff is involved, so both
/// tails are reported as zero.
pub fn lifted_profile(
    j: &BlockJacobi,
    grid: &[f64],
    exec: &impl Executor,
) -> Result<RotationProfile> {
    let chain = PrueferChain::new(j)?;
    let evaluated: Vec<(f64, f64)> = exec
        .map(grid.len(), |k| {
            let lifted = chain.lifted(grid[k])?;
            let velocity = phase_velocity(&lifted.state)?.trace_per_site();
            Ok((lifted.rotation(), velocity))
        })
        .into_iter()
        .collect::<Result<_>>()?;
    Ok(RotationProfile {
        grid: grid.to_vec(),
        velocity: evaluated.iter().map(|x| x.1).collect(),
        cumulative: evaluated.iter().map(|x| x.0).collect(),
        tail_low: 0.0,
        tail_high: 0.0,
        min_velocity: evaluated.iter().map(|x| x.1).fold(f64::INFINITY, f64::min),
    })
}

/// Rotation numbers on `grid` by the method selected in `q`.
pub fn rotation_curve(
    j: &BlockJacobi,
    grid: &[f64],
    q: &QuadratureSpec,
    exec: &impl Executor,
) -> Result<RotationProfile> {
    match q.method {
        RotationMethod::Lift => lifted_profile(j, grid, exec),
        RotationMethod::Panels => rotation_profile(j, grid, &q.resolve(j.lambda_bound())?, exec),
    }
}

pub fn rotation_number(j: &BlockJacobi, energy: f64, q: &QuadratureSpec) -> Result<f64> {
    Ok(rotation_curve(j, &[energy], q, &Sequential)?.cumulative[0])
}

/// Rotation up to `E_cut` plus the asymptotic mass above it; equals 1 up to
/// the truncation error of the tail model (and quadrature error for panels).
pub fn total_rotation(j: &BlockJacobi, q: &QuadratureSpec, exec: &impl Executor) -> Result<f64> {
    let quad = q.resolve(j.lambda_bound())?;
    let below = rotation_curve(j, &[quad.e_cut], q, exec)?.cumulative[0];
    Ok(below + quad.tail(j.len()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparisonRow {
    pub energy: f64,
    pub idos: f64,
    pub rotation: f64,
    /// `idos − rotation`.
    pub diff: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub length: usize,
    pub fiber: usize,
    pub lambda: f64,
    pub rows: Vec<ComparisonRow>,
    pub max_abs_diff: f64,
    /// `2/N`.
    pub bound: f64,
    pub budget: f64,
    pub pass: bool,
    pub method: RotationMethod,
    pub e_cut: f64,
    pub panels: usize,
    pub tail_low: f64,
    pub min_velocity: f64,
    /// Grid energies at which the eigenvalue count needed an energy shift.
    pub perturbed_points: usize,
}

/// IDOS against rotation number on `grid`, with the verdict
/// `max |idos − rotation| ≤ 2/N + budget`.
pub fn compare(
    j: &BlockJacobi,
    grid: &[f64],
    q: &QuadratureSpec,
    budget: f64,
    exec: &impl Executor,
) -> Result<ComparisonReport> {
    let lambda = j.lambda_bound();
    let quad = q.resolve(lambda)?;
    let profile = rotation_curve(j, grid, q, exec)?;
    let counts = exec.map(grid.len(), |k| idos(j, grid[k]));
    let rows: Vec<ComparisonRow> = counts
        .iter()
        .zip(&profile.cumulative)
        .map(|(p, &rotation)| ComparisonRow {
            energy: p.energy,
            idos: p.idos,
            rotation,
            diff: p.idos - rotation,
        })
        .collect();
    let max_abs_diff = rows.iter().map(|r| r.diff.abs()).fold(0.0, f64::max);
    let bound = 2.0 / j.len() as f64;
    Ok(ComparisonReport {
        length: j.len(),
        fiber: j.fiber(),
        lambda,
        rows,
        max_abs_diff,
        bound,
        budget,
        pass: max_abs_diff <= bound + budget,
        method: q.method,
        e_cut: quad.e_cut,
        panels: quad.panels(),
        tail_low: profile.tail_low,
        min_velocity: profile.min_velocity,
        perturbed_points: counts.iter().filter(|p| p.perturbed).count(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    /// Strip length `N`.
    Length,
    /// Transverse radius `L`.
    Radius,
}

impl SweepAxis {
    pub fn apply(&self, template: &ModelParams, value: usize) -> ModelParams {
        let mut p = template.clone();
        match self {
            SweepAxis::Length => p.length = value,
            SweepAxis::Radius => p.transverse_radius = value,
        }
        p
    }
}

/// Ensemble summary for one value of the swept parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub value: usize,
    pub length: usize,
    pub fiber: usize,
    pub realizations: usize,
    /// Largest `|idos − rotation|` over grid and realizations.
    pub max_abs_diff: f64,
    /// `N·max_abs_diff`, the measured constant in the `C/N` bound.
    pub scaled_diff: f64,
    pub bound: f64,
    pub pass: bool,
    /// Ensemble mean and standard error of the IDOS at each grid energy.
    pub idos: Vec<EnsembleStat>,
    pub rotation: Vec<EnsembleStat>,
}

/// Agreement of ensemble means between two successive sweep values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilizationCheck {
    pub from: usize,
    pub to: usize,
    pub energy: f64,
    /// `|Δmean|` in units of the joint standard error.
    pub idos_z: f64,
    pub rotation_z: f64,
}

impl StabilizationCheck {
    pub fn within(&self, k: f64) -> bool {
        self.idos_z <= k && self.rotation_z <= k
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub axis: SweepAxis,
    pub grid: Vec<f64>,
    pub points: Vec<SweepPoint>,
    /// Filled for the `L` axis only.
    pub stabilization: Vec<StabilizationCheck>,
}

impl SweepReport {
    pub fn bounds_pass(&self) -> bool {
        self.points.iter().all(|p| p.pass)
    }

    pub fn stable(&self, k: f64) -> bool {
        self.stabilization.iter().all(|c| c.within(k))
    }
}

fn z_score(a: &EnsembleStat, b: &EnsembleStat) -> f64 {
    let diff = (a.mean - b.mean).abs();
    let se = libm::hypot(a.stderr, b.stderr);
    if diff == 0.0 {
        0.0
    } else if se == 0.0 {
        f64::INFINITY
    } else {
        diff / se
    }
}

pub struct SweepSpec<'a> {
    pub template: &'a ModelParams,
    pub axis: SweepAxis,
    pub values: &'a [usize],
    pub grid: &'a [f64],
    pub quadrature: &'a QuadratureSpec,
    pub realizations: usize,
    pub budget: f64,
}

/// Runs [`compare`] over `realizations` disorder samples for each value of
/// the swept parameter. Realization `r` uses the seed derived from
/// `(template.seed, r)`, so results do not depend on the executor.
pub fn sweep(spec: &SweepSpec<'_>, exec: &impl Executor) -> Result<SweepReport> {
    if spec.realizations == 0 || spec.values.is_empty() {
        return Err(Error::InvalidParams(
            "a sweep needs values and realizations".into(),
        ));
    }
    if spec.values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParams(
            "sweep values must be strictly ascending".into(),
        ));
    }
    let mut points = Vec::with_capacity(spec.values.len());
    for &value in spec.values {
        let params = spec.axis.apply(spec.template, value);
        params.validate()?;
        let run = |r: usize, inner: &dyn Fn(&BlockJacobi) -> Result<ComparisonReport>| {
            build_finite_jacobi(&realization_params(&params, r)).and_then(|j| inner(&j))
        };
        let reports: Vec<ComparisonReport> = if spec.realizations == 1 {
            alloc::vec![run(0, &|j| compare(
                j,
                spec.grid,
                spec.quadrature,
                spec.budget,
                exec
            ))?]
        } else {
            exec.map(spec.realizations, |r| {
                run(r, &|j| {
                    compare(j, spec.grid, spec.quadrature, spec.budget, &Sequential)
                })
            })
            .into_iter()
            .collect::<Result<_>>()?
        };
        let mut idos_stats = alloc::vec![RunningStats::default(); spec.grid.len()];
        let mut rot_stats = alloc::vec![RunningStats::default(); spec.grid.len()];
        for rep in &reports {
            for (k, row) in rep.rows.iter().enumerate() {
                idos_stats[k].push(row.idos);
                rot_stats[k].push(row.rotation);
            }
        }
        let max_abs_diff = reports.iter().map(|r| r.max_abs_diff).fold(0.0, f64::max);
        points.push(SweepPoint {
            value,
            length: params.length,
            fiber: params.fiber_dim(),
            realizations: spec.realizations,
            max_abs_diff,
            scaled_diff: params.length as f64 * max_abs_diff,
            bound: 2.0 / params.length as f64,
            pass: reports.iter().all(|r| r.pass),
            idos: idos_stats.iter().map(RunningStats::summary).collect(),
            rotation: rot_stats.iter().map(RunningStats::summary).collect(),
        });
    }
    let mut stabilization = Vec::new();
    if spec.axis == SweepAxis::Radius {
        for w in points.windows(2) {
            for (k, &energy) in spec.grid.iter().enumerate() {
                stabilization.push(StabilizationCheck {
                    from: w[0].value,
                    to: w[1].value,
                    energy,
                    idos_z: z_score(&w[0].idos[k], &w[1].idos[k]),
                    rotation_z: z_score(&w[0].rotation[k], &w[1].rotation[k]),
                });
            }
        }
    }
    Ok(SweepReport {
        axis: spec.axis,
        grid: spec.grid.to_vec(),
        points,
        stabilization,
    })
}
