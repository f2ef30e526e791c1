use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use pruefer_core::exec::Executor;
use pruefer_core::flow::{self, compare, rotation_curve, sweep, SweepAxis, SweepSpec};
use pruefer_core::krein::{contraction, dc_contraction_bound};
use pruefer_core::linalg::{hermitian_eigen_capped, ComplexMatrix, Lu};
use pruefer_core::model::{assemble_dense, build_finite_jacobi, BlockJacobi, HoppingKind};
use pruefer_core::pruefer::{
    asymptotic_checks, phase_velocity_via_frames, pruefer_phase_raw, site_transfer, PrueferChain,
    POSITIVITY_TOL,
};
use pruefer_core::spectra::{idos_grid, sturm_count};
use serde::Serialize;

use crate::config::{ConfigError, Format, RunConfig};
use crate::report::*;

/// Largest `N·m` for which `validate` runs the dense eigensolve oracle.
const DENSE_ORACLE_DIM: usize = 400;
/// Prefix length for the raw-product route, which loses digits to the
/// exponential growth of the unnormalized frame.
const VALIDATE_RAW_SITES: usize = 8;
/// Joint standard errors tolerated between successive `L` in a sweep.
pub const STABILIZATION_SIGMAS: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Validate,
    Idos,
    Rotation,
    Compare,
    Sweep,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Validate => "validate",
            Command::Idos => "idos",
            Command::Rotation => "rotation",
            Command::Compare => "compare",
            Command::Sweep => "sweep",
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("numerical failure: {0}")]
    Numerical(pruefer_core::Error),
    #[error("io: {0}")]
    Io(#[from] io::Error),
}

impl From<pruefer_core::Error> for RunError {
    fn from(e: pruefer_core::Error) -> Self {
        match e {
            pruefer_core::Error::InvalidParams(msg) => RunError::Config(ConfigError::Validation {
                section: "model",
                message: msg,
            }),
            e @ pruefer_core::Error::EnergyBelowCutoff { .. } => {
                RunError::Config(ConfigError::Validation {
                    section: "grid",
                    message: e.to_string(),
                })
            }
            e => RunError::Numerical(e),
        }
    }
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) | RunError::Io(_) => 2,
            RunError::Numerical(_) => 3,
        }
    }
}

impl From<csv::Error> for RunError {
    fn from(e: csv::Error) -> Self {
        RunError::Io(io::Error::other(e))
    }
}

pub struct Invocation<'a, E: Executor> {
    pub command: Command,
    pub config: &'a RunConfig,
    pub exec: &'a E,
    /// Adds wall-clock runtimes to the reports (which breaks byte identity).
    pub timing: bool,
}

/// Runs one command; `Ok(false)` means an asserted bound failed.
pub fn run<E: Executor>(inv: &Invocation<'_, E>) -> Result<bool, RunError> {
    let start = Instant::now();
    let config = inv.config;
    let mut sink = Sink::open(config.output.path.as_deref())?;
    let runtime = |start: Instant| inv.timing.then(|| start.elapsed().as_secs_f64());
    let provenance = || Provenance::new(inv.command.name(), config);
    let pass = match inv.command {
        Command::Compare => {
            let j = build_finite_jacobi(&config.model_params())?;
            let grid = config.energies();
            let rep = compare(
                &j,
                &grid,
                &config.quadrature_spec(),
                config.quadrature.budget,
                inv.exec,
            )?;
            let rows: Vec<CompareCsvRow> = rep.rows.iter().map(CompareCsvRow::from).collect();
            log::info!(
                "N = {}, m = {}: max |idos - rotation| = {:.3e}, bound 2/N = {:.4}, {}",
                rep.length,
                rep.fiber,
                rep.max_abs_diff,
                rep.bound,
                if rep.pass { "pass" } else { "FAIL" }
            );
            let elapsed = runtime(start);
            log::info!("compare finished in {:.3} s", start.elapsed().as_secs_f64());
            let mut doc = CompareDocument {
                provenance: provenance(),
                summary: CompareSummary::from(&rep),
                runtime_seconds: elapsed,
                rows: None,
            };
            match config.output.format {
                Format::Csv => {
                    sink.csv(&rows)?;
                    sink.sidecar(&doc)?;
                }
                Format::Json => {
                    doc.rows = Some(rows);
                    sink.json(&doc)?;
                }
            }
            rep.pass
        }
        Command::Idos => {
            let j = build_finite_jacobi(&config.model_params())?;
            let grid = config.energies();
            let rows: Vec<IdosRow> = idos_grid(&j, &grid)
                .iter()
                .map(|p| IdosRow {
                    energy: p.energy,
                    count: p.count,
                    idos: p.idos,
                    perturbed: p.perturbed,
                })
                .collect();
            sink.table(config.output.format, provenance(), runtime(start), rows)?;
            true
        }
        Command::Rotation => {
            let j = build_finite_jacobi(&config.model_params())?;
            let grid = config.energies();
            let prof = rotation_curve(&j, &grid, &config.quadrature_spec(), inv.exec)?;
            let rows: Vec<RotationRow> = grid
                .iter()
                .zip(prof.cumulative.iter().zip(&prof.velocity))
                .map(|(&energy, (&rotation, &velocity))| RotationRow {
                    energy,
                    rotation,
                    velocity,
                })
                .collect();
            sink.table(config.output.format, provenance(), runtime(start), rows)?;
            prof.min_velocity >= -POSITIVITY_TOL
        }
        Command::Sweep => run_sweep(inv, &mut sink, start)?,
        Command::Validate => {
            let checks = validate_checks(config, inv.exec)?;
            let pass = checks.iter().all(|c| c.pass);
            match config.output.format {
                Format::Csv => {
                    let mut w = sink.writer();
                    for c in &checks {
                        writeln!(
                            w,
                            "{:<4}  {:<20} {}",
                            if c.pass { "PASS" } else { "FAIL" },
                            c.check,
                            c.detail
                        )?;
                    }
                    w.flush()?;
                }
                Format::Json => sink.json(&ValidateDocument {
                    provenance: provenance(),
                    checks,
                    pass,
                })?,
            }
            pass
        }
    };
    Ok(pass)
}

fn run_sweep<E: Executor>(
    inv: &Invocation<'_, E>,
    sink: &mut Sink,
    start: Instant,
) -> Result<bool, RunError> {
    let config = inv.config;
    let template = config.model_params();
    let grid = config.energies();
    let q = config.quadrature_spec();
    let axis = config.sweep_axis();
    let spec = SweepSpec {
        template: &template,
        axis,
        values: &config.sweep.values,
        grid: &grid,
        quadrature: &q,
        realizations: config.run.realizations,
        budget: config.quadrature.budget,
    };
    let rep = sweep(&spec, inv.exec)?;
    let mut rows = Vec::new();
    for p in &rep.points {
        log::info!(
            "{} = {}: N·max|diff| = {:.4}, bound {}",
            if axis == SweepAxis::Length { "N" } else { "L" },
            p.value,
            p.scaled_diff,
            if p.pass { "holds" } else { "FAILS" }
        );
        for (k, &energy) in grid.iter().enumerate() {
            rows.push(SweepCsvRow {
                value: p.value,
                length: p.length,
                m: p.fiber,
                energy,
                idos_mean: p.idos[k].mean,
                idos_stderr: p.idos[k].stderr,
                rotation_mean: p.rotation[k].mean,
                rotation_stderr: p.rotation[k].stderr,
            });
        }
    }
    let pass = rep.bounds_pass() && rep.stable(STABILIZATION_SIGMAS);
    let mut doc = SweepDocument {
        provenance: Provenance::new("sweep", config),
        axis: if axis == SweepAxis::Length { "N" } else { "L" },
        points: rep.points.iter().map(SweepPointSummary::from).collect(),
        stabilization: rep
            .stabilization
            .iter()
            .map(StabilizationRow::from)
            .collect(),
        stabilization_sigmas: STABILIZATION_SIGMAS,
        pass,
        runtime_seconds: inv.timing.then(|| start.elapsed().as_secs_f64()),
        rows: None,
    };
    match config.output.format {
        Format::Csv => {
            sink.csv(&rows)?;
            sink.sidecar(&doc)?;
        }
        Format::Json => {
            doc.rows = Some(rows);
            sink.json(&doc)?;
        }
    }
    Ok(pass)
}

fn check(name: &'static str, pass: bool, detail: impl Into<String>) -> CheckRow {
    CheckRow {
        check: name,
        pass,
        detail: detail.into(),
    }
}

fn prefix(j: &BlockJacobi, sites: usize) -> Result<BlockJacobi, pruefer_core::Error> {
    let k = sites.min(j.len());
    BlockJacobi::new(j.potentials()[..k].to_vec(), j.hoppings()[..k].to_vec())
}

/// The invariant suites, run on the configured realization.
fn validate_checks(config: &RunConfig, exec: &impl Executor) -> Result<Vec<CheckRow>, RunError> {
    let params = config.model_params();
    let j = build_finite_jacobi(&params)?;
    let grid = config.energies();
    let lambda = j.lambda_bound();
    let mut out = Vec::new();

    if j.dim() <= DENSE_ORACLE_DIM {
        let eig = hermitian_eigen_capped(&assemble_dense(&j)?, DENSE_ORACLE_DIM)?.eigenvalues;
        let mut mismatches = 0;
        let mut compared = 0;
        for &e in &grid {
            if eig.iter().any(|l| (l - e).abs() < 1e-7) {
                continue;
            }
            compared += 1;
            if sturm_count(&j, e).count != eig.iter().filter(|&&l| l <= e).count() {
                mismatches += 1;
            }
        }
        out.push(check(
            "sturm-vs-dense",
            mismatches == 0,
            format!("{mismatches} mismatches in {compared} energies"),
        ));
    } else {
        out.push(check(
            "sturm-vs-dense",
            true,
            format!("skipped, N*m = {} > {DENSE_ORACLE_DIM}", j.dim()),
        ));
    }

    let short = prefix(&j, VALIDATE_RAW_SITES)?;
    let short_chain = PrueferChain::new(&short)?;
    let probe = flow::linspace(grid[0], grid[grid.len() - 1], 11);
    let (mut raw_dev, mut frame_dev) = (0.0f64, 0.0f64);
    for &e in &probe {
        let stable = short_chain.phase(e)?;
        raw_dev = raw_dev.max((&stable.u - &pruefer_phase_raw(&short, e)?.u).frobenius_norm());
        let s = pruefer_core::pruefer::phase_velocity(&stable)?.s;
        frame_dev = frame_dev.max((&s - &phase_velocity_via_frames(&short, e)?.s).frobenius_norm());
    }
    out.push(check(
        "raw-product",
        raw_dev <= 1e-8,
        format!("max |U - U_raw| = {raw_dev:.2e} on {} sites", short.len()),
    ));
    out.push(check(
        "frame-sum",
        frame_dev <= 1e-7,
        format!("max |S - S_frames| = {frame_dev:.2e}"),
    ));

    // Per-site contraction against its a-priori bound, and the margin
    // `1 − ‖D⁻¹C‖` of products of `k` sites. No constructive bound is known
    // for products; their margin decays like the inverse growth of the
    // product and is only resolved in floating point for short prefixes.
    let mut site_ok = true;
    let mut margins = vec![f64::INFINITY; short.len()];
    for &e in &probe {
        let mut product = ComplexMatrix::identity(2 * short.fiber());
        for site in 1..=short.len() {
            let tm = site_transfer(&short, e, site)?.matrix;
            site_ok &= dc_contraction_bound(&tm, lambda, e)?.holds();
            product = &tm * &product;
            margins[site - 1] = margins[site - 1].min(1.0 - contraction(&product)?);
        }
    }
    let listed: Vec<String> = margins
        .iter()
        .enumerate()
        .map(|(k, m)| format!("{}:{m:.1e}", k + 1))
        .collect();
    log::info!(
        "product contraction margins by length: {}",
        listed.join(" ")
    );
    let worst = margins.iter().copied().fold(f64::INFINITY, f64::min);
    out.push(check(
        "contraction",
        site_ok && worst >= -1e-9,
        format!(
            "per-site bounds {}; 1 - |D^-1 C| by length {}",
            if site_ok { "hold" } else { "fail" },
            listed.join(" ")
        ),
    ));

    let chain = PrueferChain::new(&j)?;
    let e0 = 0.3 * lambda;
    let du = chain.phase(e0)?.du;
    let fd_err = |h: f64| -> Result<f64, RunError> {
        let fd = (&chain.phase(e0 + h)?.u - &chain.phase(e0 - h)?.u).scale_real(0.5 / h);
        Ok((&fd - &du).frobenius_norm())
    };
    let (e1, e2) = (fd_err(1e-3)?, fd_err(5e-4)?);
    let rate = e1 / e2;
    let rate_ok = (rate - 4.0).abs() <= 1.2 || e1 <= 1e-10 * du.frobenius_norm().max(1.0);
    out.push(check(
        "derivative",
        rate_ok,
        format!("error ratio {rate:.3} between h = 1e-3 and 5e-4"),
    ));

    let mut phase_gap = 0.0f64;
    for &e in &probe {
        let lifted = chain.lifted(e)?;
        let det = Lu::factor(&lifted.state.u)?.determinant();
        let turns = (lifted.theta - det.arg()) / (2.0 * std::f64::consts::PI);
        phase_gap = phase_gap.max((turns - turns.round()).abs());
    }
    out.push(check(
        "lift-branch",
        phase_gap <= 1e-9,
        format!("max distance to a branch of arg det U: {phase_gap:.2e} turns"),
    ));

    let q = config.quadrature_spec();
    let rep = compare(&j, &grid, &q, config.quadrature.budget, exec)?;
    out.push(check(
        "positivity",
        rep.min_velocity >= -POSITIVITY_TOL,
        format!("min Tr(S)/m = {:.3e}", rep.min_velocity),
    ));
    let idos_mono = rep.rows.windows(2).all(|w| w[0].idos <= w[1].idos);
    out.push(check("idos-monotone", idos_mono, ""));
    let rot_mono = rep
        .rows
        .windows(2)
        .all(|w| w[0].rotation <= w[1].rotation + 1e-12);
    out.push(check("rotation-monotone", rot_mono, ""));
    out.push(check(
        "bound",
        rep.pass,
        format!(
            "max |idos - rotation| = {:.3e}, 2/N + budget = {:.4}",
            rep.max_abs_diff,
            rep.bound + rep.budget
        ),
    ));
    let total = flow::total_rotation(&j, &q, exec)?;
    out.push(check(
        "total-rotation",
        (total - 1.0).abs() <= 2e-3,
        format!("{total:.6}"),
    ));

    let energies: Vec<f64> = [16.0, 32.0, 64.0, 128.0]
        .iter()
        .map(|k| k * lambda)
        .collect();
    let asym = asymptotic_checks(&j, &energies)?;
    out.push(check(
        "asymptotics",
        asym.max_tail_ratio() <= 1.5,
        {
            let [c, c1, c2] = asym.max_scaled();
            format!(
                "max doubling ratio {:.3}; measured constants {c:.3}, {c1:.3}, {c2:.3} (U, dU, S)",
                asym.max_tail_ratio()
            )
        },
    ));

    let free = params.disorder_width == 0.0
        && params.transverse_dim == 0
        && params.hopping == HoppingKind::Identity;
    if free {
        let n = params.length;
        let levels: Vec<f64> = (1..=n)
            .map(|k| 2.0 * (k as f64 * std::f64::consts::PI / (n + 1) as f64).cos())
            .collect();
        let bad = grid
            .iter()
            .filter(|&&e| levels.iter().all(|l| (l - e).abs() >= 1e-9))
            .filter(|&&e| sturm_count(&j, e).count != levels.iter().filter(|&&l| l <= e).count())
            .count();
        out.push(check(
            "free-chain",
            bad == 0,
            format!("{bad} energies off the closed form"),
        ));
    }
    Ok(out)
}

/// Destination of the main artifact; the sidecar goes next to it.
struct Sink {
    path: Option<PathBuf>,
}

impl Sink {
    fn open(path: Option<&Path>) -> io::Result<Self> {
        Ok(Self {
            path: path.map(Path::to_path_buf),
        })
    }

    fn writer(&self) -> Box<dyn Write> {
        match &self.path {
            Some(p) => match File::create(p) {
                Ok(f) => Box::new(BufWriter::new(f)),
                Err(e) => Box::new(FailingWriter(Some(e))),
            },
            None => Box::new(io::stdout().lock()),
        }
    }

    fn csv<R: Serialize>(&self, rows: &[R]) -> Result<(), RunError> {
        let mut w = csv::Writer::from_writer(self.writer());
        for r in rows {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }

    fn json<D: Serialize>(&self, doc: &D) -> Result<(), RunError> {
        let mut w = self.writer();
        serde_json::to_writer_pretty(&mut w, doc).map_err(io::Error::other)?;
        writeln!(w)?;
        w.flush()?;
        Ok(())
    }

    /// JSON summary next to a CSV file; skipped when writing to stdout.
    fn sidecar<D: Serialize>(&self, doc: &D) -> Result<(), RunError> {
        match &self.path {
            Some(p) => Sink {
                path: Some(p.with_extension("json")),
            }
            .json(doc),
            None => Ok(()),
        }
    }

    fn table<R: Serialize>(
        &self,
        format: Format,
        provenance: Provenance,
        runtime_seconds: Option<f64>,
        rows: Vec<R>,
    ) -> Result<(), RunError> {
        match format {
            Format::Csv => self.csv(&rows),
            Format::Json => self.json(&TableDocument {
                provenance,
                runtime_seconds,
                rows,
            }),
        }
    }
}

/// Defers a file-creation error to the first write.
struct FailingWriter(Option<io::Error>);

impl Write for FailingWriter {
    fn write(&mut self, _: &[u8]) -> io::Result<usize> {
        Err(self
            .0
            .take()
            .unwrap_or_else(|| io::Error::other("output unavailable")))
    }

    fn flush(&mut self) -> io::Result<()> {
        Ok(())
    }
}
