//! The four studies: CW steady-state initialisation, pulsed initialisation
//! with per-duration optimization, photon-counting readout maps, and the
//! pure-dephasing robustness reruns.
//!
//! Every sweep point is an independent, pure job; sweeps run on the rayon
//! pool and results are collected in deterministic grid order.

use crate::dynamics::{evolve, steady_state, IntegratorConfig, Trajectory};
use crate::hilbert::DensityMatrix;
use crate::metrics::{
    emitted_photons, readout_fidelity, trace_distance, PhotonMetric, ReadoutStats,
};
use crate::model::{
    bimodal, coupling_for_purcell, init_laser_detuning, single_mode, y_mode_detuning, CavityMode,
    DriveSpec, Model, Polarization, PulseEnvelope, SystemParams, DEFAULT_Y_PHASE,
};
use crate::{ghz, Result, SimError};
use rayon::prelude::*;
use std::time::Instant;

/// Spin level the initialisation protocols pump into (the state dark to
/// the readout mode).
pub const TARGET_LEVEL: usize = 1;

/// CW Rabi frequency used by the steady-state initialisation study,
/// Omega/2pi = 1e-3 GHz.
pub fn steady_drive_amplitude() -> f64 {
    ghz(1e-3)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CavityConfig {
    SingleMode,
    BiModal,
}

impl CavityConfig {
    pub fn label(&self) -> &'static str {
        match self {
            CavityConfig::SingleMode => "single_mode",
            CavityConfig::BiModal => "bi_modal",
        }
    }

    fn modes(&self, params: &SystemParams, kappa: f64, g: f64, n_max: usize) -> Vec<CavityMode> {
        match self {
            CavityConfig::SingleMode => single_mode(params, kappa, g, n_max),
            CavityConfig::BiModal => bimodal(params, kappa, g, n_max, DEFAULT_Y_PHASE),
        }
    }
}

/// Named sweep axes; each experiment uses the axes it needs and validates
/// them nonempty.
#[derive(Debug, Clone)]
pub struct SweepGrid {
    pub cavity: CavityConfig,
    /// Cavity linewidths, rad/ns.
    pub kappa: Vec<f64>,
    /// Purcell factors (cavity strength axis of the readout maps and the
    /// pulsed studies).
    pub purcell: Vec<f64>,
    /// Coupling-to-linewidth ratios (cavity strength axis of the
    /// steady-state study).
    pub g_over_kappa: Vec<f64>,
    /// Pulse durations, ns (square width or Gaussian intensity FWHM).
    pub durations: Vec<f64>,
    /// Trion pure-dephasing rate, 1/ns.
    pub pure_dephasing: f64,
    /// Base Fock cutoff; convergence is checked at `n_max + 2`.
    pub n_max: usize,
}

impl SweepGrid {
    pub fn new(cavity: CavityConfig) -> Self {
        SweepGrid {
            cavity,
            kappa: vec![],
            purcell: vec![],
            g_over_kappa: vec![],
            durations: vec![],
            pure_dephasing: 0.0,
            n_max: 1,
        }
    }

    fn validate_axes(&self, axes: &[(&str, &Vec<f64>)]) -> Result<()> {
        for (name, values) in axes {
            if values.is_empty() {
                return Err(SimError::InvalidParameter(format!("axis {name} is empty")));
            }
            if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(SimError::InvalidParameter(format!(
                    "axis {name} contains a nonfinite or negative value"
                )));
            }
        }
        if self.kappa.iter().any(|k| *k <= 0.0) {
            return Err(SimError::InvalidParameter("kappa values must be positive".into()));
        }
        if self.pure_dephasing < 0.0 || !self.pure_dephasing.is_finite() {
            return Err(SimError::InvalidParameter("pure_dephasing must be >= 0".into()));
        }
        if self.n_max < 1 {
            return Err(SimError::InvalidParameter("n_max must be at least 1".into()));
        }
        Ok(())
    }

    fn params(&self) -> SystemParams {
        SystemParams { pure_dephasing: self.pure_dephasing, ..SystemParams::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PulseKind {
    Square,
    Gaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptVariable {
    /// Square-pulse Rabi frequency, rad/ns.
    RabiFrequency,
    /// Gaussian pulse area, rad.
    PulseArea,
}

/// One-dimensional optimizer contract: coarse scan then golden-section
/// refinement around the best coarse point.
#[derive(Debug, Clone, Copy)]
pub struct OptimizationSpec {
    pub variable: OptVariable,
    pub lo: f64,
    pub hi: f64,
    pub coarse_points: usize,
    /// Refinement tolerance, relative to the range width.
    pub refine_tol: f64,
}

impl OptimizationSpec {
    /// Square-pulse default: Omega_X in [0, 10 gamma].
    pub fn rabi(gamma: f64) -> Self {
        OptimizationSpec {
            variable: OptVariable::RabiFrequency,
            lo: 0.0,
            hi: 10.0 * gamma,
            coarse_points: 201,
            refine_tol: 1e-4,
        }
    }

    /// Gaussian-pulse default: area in [0.01 pi, 5 pi].
    pub fn area() -> Self {
        OptimizationSpec {
            variable: OptVariable::PulseArea,
            lo: 0.01 * std::f64::consts::PI,
            hi: 5.0 * std::f64::consts::PI,
            coarse_points: 201,
            refine_tol: 1e-4,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lo < self.hi) {
            return Err(SimError::InvalidParameter("optimizer range needs lo < hi".into()));
        }
        if self.coarse_points < 50 {
            return Err(SimError::InvalidParameter(
                "optimizer needs at least 50 coarse points".into(),
            ));
        }
        if !(self.refine_tol > 0.0) {
            return Err(SimError::InvalidParameter("refine_tol must be positive".into()));
        }
        Ok(())
    }
}

/// Per-point convergence and sanity diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Diagnostics {
    /// Fock cutoff the reported metric was evaluated at.
    pub fock_cutoff: usize,
    pub fock_converged: bool,
    /// Metric change over the last cutoff increase.
    pub fock_change: f64,
    pub max_trace_error: f64,
    pub min_eigenvalue: f64,
    /// The optimizer argmin sat on the sweep-range boundary; the true
    /// optimum may lie outside the contracted range.
    pub optimizer_at_boundary: bool,
}

impl Diagnostics {
    fn new(fock_cutoff: usize) -> Self {
        Diagnostics {
            fock_cutoff,
            fock_converged: true,
            fock_change: 0.0,
            max_trace_error: 0.0,
            min_eigenvalue: 0.0,
            optimizer_at_boundary: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    /// Named parameter point in deterministic axis order.
    pub point: Vec<(String, f64)>,
    /// Headline metric: trace distance or readout fidelity.
    pub metric: f64,
    /// Optimizer argmin (pulsed studies only).
    pub argopt: Option<f64>,
    /// Full counting statistics (readout studies only).
    pub readout: Option<ReadoutStats>,
    pub diagnostics: Diagnostics,
    pub wall_time_s: f64,
}

/// A failed sweep point, carrying enough context to report it without
/// discarding the rest of the sweep.
#[derive(Debug)]
pub struct PointError {
    pub point: Vec<(String, f64)>,
    pub error: SimError,
}

pub type PointOutcome = std::result::Result<ExperimentResult, PointError>;

fn label(pairs: &[(&str, f64)]) -> Vec<(String, f64)> {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

/// Relative Fock-cutoff convergence: |f(n+2) - f(n)| <= 1e-4 |f(n+2)| + 1e-6.
/// The absolute floor keeps metrics that are themselves tiny (trace
/// distances of 1e-4) from demanding impossible relative accuracy.
const FOCK_REL: f64 = 1e-4;
const FOCK_ABS: f64 = 1e-6;

/// Evaluate `f` at increasing cutoffs until two evaluations two steps apart
/// agree; returns the converged value and diagnostics. At most `max_cutoff`
/// is tried; non-convergence is reported, not fatal.
fn converge_fock<F>(base: usize, max_cutoff: usize, f: F) -> Result<(f64, Diagnostics)>
where
    F: Fn(usize) -> Result<f64>,
{
    let mut n = base;
    let mut current = f(n)?;
    loop {
        let next_n = n + 2;
        let next = f(next_n)?;
        let change = (next - current).abs();
        if change <= FOCK_REL * next.abs() + FOCK_ABS {
            let mut diag = Diagnostics::new(next_n);
            diag.fock_change = change;
            return Ok((next, diag));
        }
        if next_n + 2 > max_cutoff {
            let mut diag = Diagnostics::new(next_n);
            diag.fock_converged = false;
            diag.fock_change = change;
            return Ok((next, diag));
        }
        n = next_n;
        current = next;
    }
}

// ---------------------------------------------------------------------------
// steady-state initialisation (Fig. 2)
// ---------------------------------------------------------------------------

/// CW drive on the vertical transition; metric is the trace distance
/// between the steady state (traced to the 4LS) and the target ground
/// state. Point axes: kappa x g_over_kappa.
pub fn run_steady_state_initialisation(grid: &SweepGrid) -> Result<Vec<PointOutcome>> {
    grid.validate_axes(&[("kappa", &grid.kappa), ("g_over_kappa", &grid.g_over_kappa)])?;
    let params = grid.params();
    let mut points = Vec::new();
    for &kappa in &grid.kappa {
        for &ratio in &grid.g_over_kappa {
            points.push((kappa, ratio));
        }
    }

    Ok(points
        .par_iter()
        .map(|&(kappa, ratio)| {
            let start = Instant::now();
            let point = label(&[("kappa", kappa), ("g_over_kappa", ratio)]);
            steady_point(grid, &params, kappa, ratio * kappa)
                .map(|(metric, diag)| ExperimentResult {
                    point: point.clone(),
                    metric,
                    argopt: None,
                    readout: None,
                    diagnostics: diag,
                    wall_time_s: start.elapsed().as_secs_f64(),
                })
                .map_err(|error| PointError { point, error })
        })
        .collect())
}

fn steady_point(
    grid: &SweepGrid,
    params: &SystemParams,
    kappa: f64,
    g: f64,
) -> Result<(f64, Diagnostics)> {
    let drive = DriveSpec {
        laser_detuning: init_laser_detuning(params),
        qd_x: Some(PulseEnvelope::Cw { amplitude: steady_drive_amplitude() }),
        ..Default::default()
    };
    let target = DensityMatrix::pure_system(TARGET_LEVEL);

    let eval = |n_max: usize| -> Result<f64> {
        let model = Model::new(*params, grid.cavity.modes(params, kappa, g, n_max), drive.clone())?;
        let rho = steady_state(&model)?;
        let reduced = rho.trace_out_cavities();
        trace_distance(&reduced, &target)
    };

    let (metric, mut diag) = converge_fock(grid.n_max, grid.n_max + 4, &eval)?;
    // trace/positivity diagnostics from one solve at the converged cutoff
    let model =
        Model::new(*params, grid.cavity.modes(params, kappa, g, diag.fock_cutoff), drive)?;
    let rho = steady_state(&model)?;
    diag.max_trace_error = (rho.trace() - crate::C64::new(1.0, 0.0)).norm();
    diag.min_eigenvalue = rho.min_eigenvalue()?;
    Ok((metric, diag))
}

// ---------------------------------------------------------------------------
// pulsed initialisation (Fig. 3)
// ---------------------------------------------------------------------------

/// Square or Gaussian pulse on the vertical transition, minimized over the
/// drive strength per duration. Point axes: kappa x purcell x durations.
pub fn run_pulsed_initialisation(
    grid: &SweepGrid,
    kind: PulseKind,
    opt: &OptimizationSpec,
) -> Result<Vec<PointOutcome>> {
    grid.validate_axes(&[
        ("kappa", &grid.kappa),
        ("purcell", &grid.purcell),
        ("durations", &grid.durations),
    ])?;
    opt.validate()?;
    match (kind, opt.variable) {
        (PulseKind::Square, OptVariable::RabiFrequency) => {}
        (PulseKind::Gaussian, OptVariable::PulseArea) => {}
        _ => {
            return Err(SimError::InvalidParameter(
                "square pulses optimize the Rabi frequency, Gaussian pulses the area".into(),
            ))
        }
    }
    let params = grid.params();
    let mut points = Vec::new();
    for &kappa in &grid.kappa {
        for &fp in &grid.purcell {
            for &duration in &grid.durations {
                points.push((kappa, fp, duration));
            }
        }
    }

    Ok(points
        .par_iter()
        .map(|&(kappa, fp, duration)| {
            let start = Instant::now();
            let point =
                label(&[("kappa", kappa), ("purcell", fp), ("duration", duration)]);
            pulsed_point(grid, &params, kappa, fp, duration, kind, opt)
                .map(|(metric, argopt, diag)| ExperimentResult {
                    point: point.clone(),
                    metric,
                    argopt: Some(argopt),
                    readout: None,
                    diagnostics: diag,
                    wall_time_s: start.elapsed().as_secs_f64(),
                })
                .map_err(|error| PointError { point, error })
        })
        .collect())
}

/// Trace distance after one optimized pulse; exposed for determinism
/// checks (rerunning at a reported argmin).
pub fn pulsed_trace_distance(
    grid: &SweepGrid,
    kappa: f64,
    purcell: f64,
    duration: f64,
    kind: PulseKind,
    x: f64,
    n_max: usize,
) -> Result<f64> {
    let params = grid.params();
    let g = coupling_for_purcell(purcell, kappa, params.gamma_x)?;
    pulse_objective(&grid.cavity, &params, kappa, g, n_max, kind, duration, x).map(|(t, _)| t)
}

fn pulsed_point(
    grid: &SweepGrid,
    params: &SystemParams,
    kappa: f64,
    fp: f64,
    duration: f64,
    kind: PulseKind,
    opt: &OptimizationSpec,
) -> Result<(f64, f64, Diagnostics)> {
    let g = coupling_for_purcell(fp, kappa, params.gamma_x)?;

    let objective = |x: f64, n_max: usize| -> Result<(f64, TrajStats)> {
        pulse_objective(&grid.cavity, params, kappa, g, n_max, kind, duration, x)
    };

    // coarse scan at the base cutoff
    let mut best = (opt.lo, f64::INFINITY);
    let mut best_idx = 0;
    let mut stats = TrajStats::default();
    let n = opt.coarse_points;
    for i in 0..n {
        let x = opt.lo + (opt.hi - opt.lo) * i as f64 / (n - 1) as f64;
        let (t, s) = objective(x, grid.n_max)?;
        stats.merge(&s);
        if t < best.1 {
            best = (x, t);
            best_idx = i;
        }
    }

    // golden-section refinement around the best coarse point
    let step = (opt.hi - opt.lo) / (n - 1) as f64;
    let lo = (best.0 - step).max(opt.lo);
    let hi = (best.0 + step).min(opt.hi);
    let tol = opt.refine_tol * (opt.hi - opt.lo);
    let (x_opt, t_opt) = golden_section(
        |x| objective(x, grid.n_max).map(|(t, _)| t),
        lo,
        hi,
        tol,
    )?;
    let (x_opt, _) = if t_opt < best.1 { (x_opt, t_opt) } else { best };

    // Fock-convergence check at the argmin only
    let (metric, mut diag) =
        converge_fock(grid.n_max, grid.n_max + 4, |n_max| {
            objective(x_opt, n_max).map(|(t, _)| t)
        })?;
    diag.max_trace_error = stats.max_trace_error;
    diag.min_eigenvalue = stats.min_eigenvalue;
    diag.optimizer_at_boundary = best_idx == 0 || best_idx == n - 1;
    // the zero edge of a Rabi sweep is a physical "no pulse" anchor, not a
    // truncated optimum
    if opt.variable == OptVariable::RabiFrequency && best_idx == 0 {
        diag.optimizer_at_boundary = false;
    }
    Ok((metric, x_opt, diag))
}

/// Running trajectory-invariant extremes across many evolutions.
#[derive(Debug, Clone, Copy)]
struct TrajStats {
    max_trace_error: f64,
    min_eigenvalue: f64,
}

impl Default for TrajStats {
    fn default() -> Self {
        TrajStats { max_trace_error: 0.0, min_eigenvalue: f64::INFINITY }
    }
}

impl TrajStats {
    fn merge(&mut self, other: &TrajStats) {
        self.max_trace_error = self.max_trace_error.max(other.max_trace_error);
        self.min_eigenvalue = self.min_eigenvalue.min(other.min_eigenvalue);
    }

    fn absorb(&mut self, traj: &Trajectory) {
        self.max_trace_error = self.max_trace_error.max(traj.max_trace_error());
        self.min_eigenvalue = self.min_eigenvalue.min(traj.min_eigenvalue());
    }
}

/// How long the system may relax after the pulse before the residual
/// excitation is declared stuck, in units of 1/gamma.
const RELAX_LIMIT: f64 = 10.0;
const RELAX_CHUNK: f64 = 1.0;
const EXCITATION_FLOOR: f64 = 1e-10;

#[allow(clippy::too_many_arguments)]
fn pulse_objective(
    cavity: &CavityConfig,
    params: &SystemParams,
    kappa: f64,
    g: f64,
    n_max: usize,
    kind: PulseKind,
    duration: f64,
    x: f64,
) -> Result<(f64, TrajStats)> {
    let target = DensityMatrix::pure_system(TARGET_LEVEL);
    let mut stats = TrajStats::default();
    if duration <= 0.0 || x <= 0.0 {
        // no pulse: the initial mixture is unchanged
        let t = trace_distance(&DensityMatrix::mixed_ground(), &target)?;
        stats.min_eigenvalue = 0.0;
        return Ok((t, stats));
    }

    let envelope = match kind {
        PulseKind::Square => {
            PulseEnvelope::Square { amplitude: x, center: duration / 2.0, width: duration }
        }
        PulseKind::Gaussian => {
            let w = PulseEnvelope::gaussian_width(duration);
            PulseEnvelope::Gaussian { area: x, center: 6.0 * w, fwhm: duration }
        }
    };
    let drive = DriveSpec {
        laser_detuning: init_laser_detuning(params),
        qd_x: Some(envelope),
        ..Default::default()
    };
    let model = Model::new(*params, cavity.modes(params, kappa, g, n_max), drive)?;
    let rho0 = DensityMatrix::mixed_ground().with_vacuum(model.space())?;

    let horizon = envelope.support_end();
    let traj = evolve(&rho0, &model, &IntegratorConfig::new(horizon))?;
    stats.absorb(&traj);
    let mut state = traj.final_state().clone();

    // relax with the drive off until the total excitation has drained
    let relax_drive = DriveSpec {
        laser_detuning: init_laser_detuning(params),
        ..Default::default()
    };
    let relax_model = Model::new(*params, cavity.modes(params, kappa, g, n_max), relax_drive)?;
    let n_exc = relax_model.excitation_number();
    let mut elapsed = 0.0;
    let gamma = params.gamma_x.max(params.gamma_y);
    while state.expect(&n_exc)?.re > EXCITATION_FLOOR && elapsed < RELAX_LIMIT / gamma {
        let traj = evolve(&state, &relax_model, &IntegratorConfig::new(RELAX_CHUNK / gamma))?;
        stats.absorb(&traj);
        state = traj.final_state().clone();
        elapsed += RELAX_CHUNK / gamma;
    }

    let t = trace_distance(&state.trace_out_cavities(), &target)?;
    Ok((t, stats))
}

/// Golden-section minimization of a unimodal function on `[lo, hi]` to an
/// absolute tolerance in the argument.
pub fn golden_section<F>(f: F, lo: f64, hi: f64, tol: f64) -> Result<(f64, f64)>
where
    F: Fn(f64) -> Result<f64>,
{
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d)?;
        }
    }
    Ok(if fc < fd { (c, fc) } else { (d, fd) })
}

// ---------------------------------------------------------------------------
// readout (Fig. 4)
// ---------------------------------------------------------------------------

/// Readout pulse length, ns.
pub const READOUT_TAU: f64 = 35.0;

/// Cavity drive strength for the readout study,
/// `epsilon_Y = sqrt(0.01 * 2 |g_Y|^2)`.
pub fn readout_drive_amplitude(g: f64) -> f64 {
    (0.01 * 2.0 * g * g).sqrt()
}

/// Photon-counting readout over a kappa x purcell map: drive the Y mode
/// with a square pulse for `tau` ns from both spin states, count photons,
/// and discriminate.
pub fn run_readout(grid: &SweepGrid, tau: f64, eta: f64) -> Result<Vec<PointOutcome>> {
    grid.validate_axes(&[("kappa", &grid.kappa), ("purcell", &grid.purcell)])?;
    if !(tau > 0.0) {
        return Err(SimError::InvalidParameter("readout duration must be positive".into()));
    }
    let params = grid.params();
    let mut points = Vec::new();
    for &kappa in &grid.kappa {
        for &fp in &grid.purcell {
            points.push((kappa, fp));
        }
    }

    Ok(points
        .par_iter()
        .map(|&(kappa, fp)| {
            let start = Instant::now();
            let point = label(&[("kappa", kappa), ("purcell", fp)]);
            readout_point(grid, &params, kappa, fp, tau, eta)
                .map(|(stats, diag)| ExperimentResult {
                    point: point.clone(),
                    metric: stats.fidelity,
                    argopt: None,
                    readout: Some(stats),
                    diagnostics: diag,
                    wall_time_s: start.elapsed().as_secs_f64(),
                })
                .map_err(|error| PointError { point, error })
        })
        .collect())
}

fn readout_point(
    grid: &SweepGrid,
    params: &SystemParams,
    kappa: f64,
    fp: f64,
    tau: f64,
    eta: f64,
) -> Result<(ReadoutStats, Diagnostics)> {
    let g = coupling_for_purcell(fp, kappa, params.gamma_x)?;
    let mut stats = TrajStats::default();
    // the driven mode holds real population; a cutoff of 1 cannot resolve it
    let base = grid.n_max.max(2);

    let counts = |n_max: usize, stats: Option<&mut TrajStats>| -> Result<(f64, f64)> {
        let eps = readout_drive_amplitude(g);
        let drive = DriveSpec {
            laser_detuning: y_mode_detuning(params),
            cavity_y: Some(PulseEnvelope::Square {
                amplitude: eps,
                center: tau / 2.0,
                width: tau,
            }),
            ..Default::default()
        };
        let model = Model::new(*params, grid.cavity.modes(params, kappa, g, n_max), drive)?;
        let mut cfg = IntegratorConfig::with_uniform_samples(tau, 4096);
        cfg.diag_stride = 64;
        let run = |level: usize| -> Result<(f64, TrajStats)> {
            let rho0 = DensityMatrix::pure_system(level).with_vacuum(model.space())?;
            let traj = evolve(&rho0, &model, &cfg)?;
            let n = emitted_photons(
                &traj,
                &model,
                Polarization::Y,
                eta,
                PhotonMetric::CoherentAmplitude,
            )?;
            let mut ts = TrajStats::default();
            ts.absorb(&traj);
            Ok((n, ts))
        };
        // level 0 transmits (bright), the target level blocks (dark)
        let (n_bright, s0) = run(0)?;
        let (n_dark, s1) = run(TARGET_LEVEL)?;
        if let Some(acc) = stats {
            acc.merge(&s0);
            acc.merge(&s1);
        }
        Ok((n_bright, n_dark))
    };

    let (n_bright_base, n_dark_base) = counts(base, Some(&mut stats))?;
    let base_fidelity = readout_fidelity(n_bright_base, n_dark_base)?.fidelity;

    // convergence check on the fidelity at one raised cutoff
    let (n_bright_hi, n_dark_hi) = counts(base + 2, None)?;
    let final_stats = readout_fidelity(n_bright_hi, n_dark_hi)?;
    let change = (final_stats.fidelity - base_fidelity).abs();

    let mut diag = Diagnostics::new(base + 2);
    diag.fock_converged = change <= FOCK_REL * final_stats.fidelity.abs() + FOCK_ABS;
    diag.fock_change = change;
    diag.max_trace_error = stats.max_trace_error;
    diag.min_eigenvalue = stats.min_eigenvalue;
    Ok((final_stats, diag))
}

// ---------------------------------------------------------------------------
// dephasing study (Appendix B)
// ---------------------------------------------------------------------------

/// Which study the dephasing sweep reruns.
#[derive(Debug, Clone)]
pub enum BaseExperiment {
    PulsedInit { kind: PulseKind, opt: OptimizationSpec },
    Readout { tau: f64, eta: f64 },
}

/// Rerun a base study at each pure-dephasing rate; each result's point is
/// prefixed with the `gamma_deph` axis.
pub fn run_dephasing_study(
    grid: &SweepGrid,
    base: &BaseExperiment,
    dephasing_rates: &[f64],
) -> Result<Vec<PointOutcome>> {
    if dephasing_rates.is_empty() {
        return Err(SimError::InvalidParameter("dephasing rate list is empty".into()));
    }
    let mut all = Vec::new();
    for &rate in dephasing_rates {
        if rate < 0.0 || !rate.is_finite() {
            return Err(SimError::InvalidParameter(format!(
                "dephasing rate must be finite and nonnegative, got {rate}"
            )));
        }
        let sub = SweepGrid { pure_dephasing: rate, ..grid.clone() };
        let outcomes = match base {
            BaseExperiment::PulsedInit { kind, opt } => {
                run_pulsed_initialisation(&sub, *kind, opt)?
            }
            BaseExperiment::Readout { tau, eta } => run_readout(&sub, *tau, *eta)?,
        };
        for outcome in outcomes {
            all.push(match outcome {
                Ok(mut r) => {
                    r.point.insert(0, ("gamma_deph".to_string(), rate));
                    Ok(r)
                }
                Err(mut e) => {
                    e.point.insert(0, ("gamma_deph".to_string(), rate));
                    Err(e)
                }
            });
        }
    }
    Ok(all)
}
