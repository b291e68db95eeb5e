//! Time evolution of the master equation and steady states of the
//! CW-driven Liouvillian.
//!
//! The integrator is an adaptive embedded Dormand-Prince 5(4) scheme acting
//! on the density matrix. The right-hand side is evaluated from the
//! nonzero entries of the (dense) model operators, extracted once per
//! `evolve` call; the Hamiltonians and collapse operators here have O(d)
//! nonzeros, which keeps a step at O(d^2) instead of O(d^3).

use crate::hilbert::{min_eigenvalue, DensityMatrix, HilbertSpace};
use crate::liouville::{trace_row, unvec, Superoperator};
use crate::model::Model;
use crate::{C64, Result, SimError};
use ndarray::{Array1, Array2};
use ndarray_linalg::Solve;

#[derive(Debug, Clone)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Maximum step, ns.
    pub max_step: f64,
    /// Integration horizon, ns.
    pub horizon: f64,
    /// Output grid; when `None`, only segment boundaries are sampled.
    pub sample_times: Option<Vec<f64>>,
    /// Positivity (min-eigenvalue) diagnostics are computed on every
    /// `diag_stride`-th sample plus the final one; trace error is always
    /// per-sample. The eigensolve dominates sample cost for large spaces.
    pub diag_stride: usize,
}

impl IntegratorConfig {
    pub fn new(horizon: f64) -> Self {
        IntegratorConfig {
            rel_tol: 1e-8,
            abs_tol: 1e-10,
            max_step: f64::INFINITY,
            horizon,
            sample_times: None,
            diag_stride: 1,
        }
    }

    /// Uniform output grid with `n` intervals over the horizon.
    pub fn with_uniform_samples(horizon: f64, n: usize) -> Self {
        let times = (0..=n).map(|k| horizon * k as f64 / n as f64).collect();
        IntegratorConfig { sample_times: Some(times), ..Self::new(horizon) }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.horizon > 0.0) {
            return Err(SimError::InvalidParameter("horizon must be positive".into()));
        }
        for (name, tol) in [("rel_tol", self.rel_tol), ("abs_tol", self.abs_tol)] {
            if !(tol > 0.0 && tol <= 1e-2) {
                return Err(SimError::InvalidParameter(format!(
                    "{name} must lie in (0, 1e-2], got {tol}"
                )));
            }
        }
        if self.diag_stride == 0 {
            return Err(SimError::InvalidParameter("diag_stride must be at least 1".into()));
        }
        Ok(())
    }
}

/// Density matrices on an output grid with per-sample diagnostics.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
    /// Minimum eigenvalues (positivity monitor), evaluated on the
    /// `diag_stride`-subsampled grid plus the final sample.
    pub min_eigs: Vec<f64>,
    /// `|Tr rho - 1|` per sample.
    pub trace_errors: Vec<f64>,
}

impl Trajectory {
    pub fn final_state(&self) -> &DensityMatrix {
        self.states.last().expect("trajectory has at least the initial sample")
    }

    pub fn max_trace_error(&self) -> f64 {
        self.trace_errors.iter().cloned().fold(0.0, f64::max)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.min_eigs.iter().cloned().fold(f64::INFINITY, f64::min)
    }
}

/// `Tr[rho (s22 + s33)]`: total trion population.
pub fn excited_population(rho: &DensityMatrix) -> f64 {
    let d_env: usize = rho.space().factors()[1..].iter().product();
    let m = rho.matrix();
    let mut acc = 0.0;
    for level in [2usize, 3] {
        for k in 0..d_env {
            acc += m[[level * d_env + k, level * d_env + k]].re;
        }
    }
    acc
}

/// Sparse triplet view of a dense operator matrix.
struct SparseOp {
    entries: Vec<(usize, usize, C64)>,
}

impl SparseOp {
    fn from_dense(m: &Array2<C64>) -> Self {
        let mut entries = Vec::new();
        for ((i, j), &v) in m.indexed_iter() {
            if v.norm_sqr() > 0.0 {
                entries.push((i, j, v));
            }
        }
        SparseOp { entries }
    }

    /// `out += scale * A . rho`
    fn acc_left(&self, rho: &Array2<C64>, out: &mut Array2<C64>, scale: C64) {
        let d = rho.ncols();
        let rho_s = rho.as_slice().expect("contiguous");
        let out_s = out.as_slice_mut().expect("contiguous");
        for &(i, k, v) in &self.entries {
            let sv = scale * v;
            let src = &rho_s[k * d..(k + 1) * d];
            let dst = &mut out_s[i * d..(i + 1) * d];
            for (o, r) in dst.iter_mut().zip(src) {
                *o += sv * r;
            }
        }
    }

    /// `out += scale * rho . A`
    fn acc_right(&self, rho: &Array2<C64>, out: &mut Array2<C64>, scale: C64) {
        let d = rho.ncols();
        let rho_s = rho.as_slice().expect("contiguous");
        let out_s = out.as_slice_mut().expect("contiguous");
        for &(k, j, v) in &self.entries {
            let sv = scale * v;
            for i in 0..d {
                out_s[i * d + j] += rho_s[i * d + k] * sv;
            }
        }
    }
}

/// Model compiled for fast RHS evaluation:
/// `drho = -i(K rho - rho K^dag) + sum_c r_c O_c rho O_c^dag`
/// with `K = H_static - (i/2) sum_c r_c O_c^dag O_c` plus drive terms.
struct CompiledGenerator {
    dim: usize,
    k_op: SparseOp,
    k_dag: SparseOp,
    drives: Vec<(crate::model::PulseEnvelope, SparseOp)>,
    jumps: Vec<(f64, SparseOp, SparseOp)>,
}

impl CompiledGenerator {
    fn compile(model: &Model) -> Self {
        let dim = model.space().dim();
        let h = model.static_hamiltonian();
        let channels = model.collapse_channels();

        let mut k = h.matrix().clone();
        for (rate, op) in &channels {
            let odo = op.dagger().matmul(op).unwrap();
            k = k + odo.matrix().mapv(|z| C64::new(0.0, -rate / 2.0) * z);
        }
        let k_dag = k.t().mapv(|z| z.conj());

        let drives = model
            .drive_terms()
            .into_iter()
            .map(|(env, op)| (env, SparseOp::from_dense(op.matrix())))
            .collect();

        let jumps = channels
            .iter()
            .filter(|(rate, _)| *rate > 0.0)
            .map(|(rate, op)| {
                (
                    *rate,
                    SparseOp::from_dense(op.matrix()),
                    SparseOp::from_dense(op.dagger().matrix()),
                )
            })
            .collect();

        CompiledGenerator {
            dim,
            k_op: SparseOp::from_dense(&k),
            k_dag: SparseOp::from_dense(&k_dag),
            drives,
            jumps,
        }
    }

    fn rhs(&self, t: f64, rho: &Array2<C64>, out: &mut Array2<C64>, scratch: &mut Array2<C64>) {
        let minus_i = C64::new(0.0, -1.0);
        let plus_i = C64::new(0.0, 1.0);
        out.fill(C64::new(0.0, 0.0));

        self.k_op.acc_left(rho, out, minus_i);
        self.k_dag.acc_right(rho, out, plus_i);

        for (env, op) in &self.drives {
            let amp = env.evaluate(t);
            if amp != 0.0 {
                op.acc_left(rho, out, minus_i * amp);
                op.acc_right(rho, out, plus_i * amp);
            }
        }

        for (rate, o, od) in &self.jumps {
            scratch.fill(C64::new(0.0, 0.0));
            o.acc_left(rho, scratch, C64::new(1.0, 0.0));
            od.acc_right(scratch, out, C64::new(*rate, 0.0));
        }
    }
}

// Dormand-Prince 5(4) tableau.
const DP_C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const DP_A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const DP_B5: [f64; 7] =
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const DP_B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Integrate the master equation from `initial` over `cfg.horizon`.
///
/// The integrator restarts at every envelope discontinuity so no step
/// straddles a pulse edge, and steps are clamped so every requested sample
/// time is hit exactly. Trace drift and positivity are recorded per sample.
pub fn evolve(initial: &DensityMatrix, model: &Model, cfg: &IntegratorConfig) -> Result<Trajectory> {
    cfg.validate()?;
    if initial.space() != model.space() {
        return Err(SimError::SpaceMismatch);
    }
    let gen = CompiledGenerator::compile(model);
    let d = gen.dim;

    let mut boundaries: Vec<f64> = model
        .drive()
        .breakpoints()
        .into_iter()
        .filter(|&t| t > 1e-12 && t < cfg.horizon - 1e-12)
        .collect();
    boundaries.push(cfg.horizon);

    let mut samples: Vec<f64> = match &cfg.sample_times {
        Some(ts) => {
            let mut ts = ts.clone();
            ts.retain(|&t| t >= 0.0 && t <= cfg.horizon + 1e-12);
            ts.sort_by(|a, b| a.partial_cmp(b).unwrap());
            ts
        }
        None => {
            let mut ts = vec![0.0];
            ts.extend(boundaries.iter().cloned());
            ts
        }
    };
    if samples.first().map_or(true, |&t| t > 1e-12) {
        samples.insert(0, 0.0);
    }
    if samples.last().map_or(true, |&t| (t - cfg.horizon).abs() > 1e-12) {
        samples.push(cfg.horizon);
    }
    samples.dedup_by(|a, b| (*a - *b).abs() < 1e-12);

    let mut traj = Trajectory {
        times: Vec::with_capacity(samples.len()),
        states: Vec::with_capacity(samples.len()),
        min_eigs: Vec::with_capacity(samples.len()),
        trace_errors: Vec::with_capacity(samples.len()),
    };

    let n_samples = samples.len();
    let record = |t: f64, rho: &Array2<C64>, traj: &mut Trajectory| -> Result<()> {
        let tr: C64 = rho.diag().sum();
        let idx = traj.times.len();
        traj.times.push(t);
        traj.trace_errors.push((tr - C64::new(1.0, 0.0)).norm());
        if idx % cfg.diag_stride == 0 || idx + 1 == n_samples {
            traj.min_eigs.push(min_eigenvalue(rho)?);
        }
        traj.states
            .push(DensityMatrix::new_unchecked(initial.space().clone(), rho.clone()));
        Ok(())
    };

    let mut rho = initial.matrix().clone();
    let mut t = 0.0;
    record(t, &rho, &mut traj)?;
    let mut sample_idx = 1; // samples[0] == 0 is recorded

    let mut k: Vec<Array2<C64>> = (0..7).map(|_| Array2::zeros((d, d))).collect();
    let mut scratch = Array2::zeros((d, d));
    let mut ytmp = Array2::zeros((d, d));
    let mut h_guess: Option<f64> = None;

    for &seg_end in &boundaries {
        if seg_end <= t + 1e-14 {
            continue;
        }
        // fresh derivative at segment start (restart across discontinuities)
        gen.rhs(t, &rho, &mut k[0], &mut scratch);

        if h_guess.is_none() {
            let ynorm = rho.iter().map(|z| z.norm()).fold(0.0, f64::max);
            let fnorm = k[0].iter().map(|z| z.norm()).fold(0.0, f64::max);
            let h0 = if fnorm > 0.0 { 0.01 * ynorm.max(1e-3) / fnorm } else { 1e-3 };
            h_guess = Some(h0);
        }
        let mut h = h_guess.unwrap();

        while t < seg_end - 1e-14 {
            let next_stop = if sample_idx < samples.len() {
                seg_end.min(samples[sample_idx])
            } else {
                seg_end
            };
            let h_step = h.min(cfg.max_step).min(next_stop - t);
            if h_step < 1e-14 * t.abs().max(1.0) {
                return Err(SimError::StepSizeUnderflow { t });
            }

            for stage in 1..7 {
                ytmp.assign(&rho);
                for j in 0..stage {
                    let a = if stage < 6 { DP_A[stage - 1][j] } else { DP_B5[j] };
                    if a != 0.0 {
                        ytmp.scaled_add(C64::new(h_step * a, 0.0), &k[j]);
                    }
                }
                gen.rhs(t + DP_C[stage] * h_step, &ytmp, &mut k[stage], &mut scratch);
            }
            // after the stage loop ytmp holds the 5th-order solution (FSAL:
            // the last stage argument equals it) and k[6] its derivative

            // error estimate against the embedded 4th-order solution
            let mut err_sq = 0.0;
            let n = (d * d) as f64;
            for i in 0..d {
                for j in 0..d {
                    let mut e = C64::new(0.0, 0.0);
                    for s in [0usize, 2, 3, 4, 5, 6] {
                        e += C64::new(h_step * (DP_B5[s] - DP_B4[s]), 0.0) * k[s][[i, j]];
                    }
                    let sc =
                        cfg.abs_tol + cfg.rel_tol * rho[[i, j]].norm().max(ytmp[[i, j]].norm());
                    err_sq += e.norm_sqr() / (sc * sc);
                }
            }
            let err = (err_sq / n).sqrt();

            let clamped = h_step < h;
            let factor = if err > 0.0 { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) } else { 5.0 };
            if err <= 1.0 {
                t += h_step;
                std::mem::swap(&mut rho, &mut ytmp);
                k.swap(0, 6); // FSAL: k7 = f(t+h, y_new) seeds the next step

                if sample_idx < samples.len() && (t - samples[sample_idx]).abs() < 1e-12 {
                    record(t, &rho, &mut traj)?;
                    sample_idx += 1;
                }
                // a step clamped to an output time says nothing about the
                // accuracy-limited step size; keep the previous guess
                if !clamped {
                    h = h_step * factor;
                }
            } else {
                h = h_step * factor;
            }
            h_guess = Some(h);
        }
    }

    Ok(traj)
}

/// Steady state of a time-independent model: direct linear solve of
/// `L vec(rho) = 0` with one row replaced by the trace functional.
///
/// Fails explicitly when the Liouvillian nullspace is degenerate (e.g. no
/// drive: both spin ground states are stationary).
pub fn steady_state(model: &Model) -> Result<DensityMatrix> {
    if !model.is_time_independent() {
        return Err(SimError::InvalidParameter(
            "steady_state requires CW (time-independent) drives".into(),
        ));
    }
    let l = model.liouvillian_at(0.0)?;
    steady_state_from_liouvillian(&l, model.space())
}

/// Steady-state solve on an explicit Liouvillian.
///
/// Degeneracy detection deliberately avoids eigenvalue-magnitude
/// thresholds: spin-pumping Liouvillians have physically meaningful decay
/// rates many orders of magnitude below the fast scales (the return rate
/// out of the pumped state), indistinguishable from a numerical zero by
/// magnitude alone. Instead the solve is performed twice with the trace
/// row in different positions; a truly degenerate nullspace either blows
/// up the solution norm (numerically singular system) or makes the two
/// solutions pick different nullspace mixtures, while a merely
/// ill-conditioned unique solve stays consistent.
pub fn steady_state_from_liouvillian(
    l: &Superoperator,
    space: &HilbertSpace,
) -> Result<DensityMatrix> {
    let d = l.dim();
    if space.dim() != d {
        return Err(SimError::SpaceMismatch);
    }
    let n = d * d;
    let lm = l.matrix();
    let linf = lm.iter().map(|z| z.norm()).fold(0.0, f64::max);

    let a = solve_with_trace_row(lm, d, 0, linf, space)?;
    let b = solve_with_trace_row(lm, d, n - 1, linf, space)?;
    let dev = crate::hilbert::max_abs_diff(a.matrix(), b.matrix());
    if dev > 1e-2 {
        return Err(SimError::DegenerateSteadyState);
    }
    Ok(a)
}

fn solve_with_trace_row(
    lm: &Array2<C64>,
    d: usize,
    row: usize,
    linf: f64,
    space: &HilbertSpace,
) -> Result<DensityMatrix> {
    let n = d * d;
    let mut m = lm.clone();
    let tr = trace_row(d);
    for j in 0..n {
        m[[row, j]] = tr[j];
    }
    let mut rhs: Array1<C64> = Array1::zeros(n);
    rhs[row] = C64::new(1.0, 0.0);
    // an exactly singular row-replaced system is a nullspace of dimension
    // > 1 (LAPACK reports the zero pivot); a numerically singular one
    // surfaces as a blown-up solution norm instead
    let x = m.solve(&rhs).map_err(|_| SimError::DegenerateSteadyState)?;

    let xnorm = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if !xnorm.is_finite() || xnorm > 1e8 {
        return Err(SimError::DegenerateSteadyState);
    }

    // relative residual against the original Liouvillian; a backward-stable
    // solve keeps this small regardless of conditioning
    let residual = lm.dot(&x);
    let res = residual.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if res > 1e-10 * linf.max(1.0) * xnorm.max(1.0) {
        return Err(SimError::DegenerateSteadyState);
    }

    let mut rho = unvec(&x, d);
    // symmetrize and renormalize before invariant validation
    rho = (&rho + &rho.t().mapv(|z| z.conj())).mapv(|z| 0.5 * z);
    let tr: C64 = rho.diag().sum();
    rho.mapv_inplace(|z| z / tr);
    DensityMatrix::new(space.clone(), rho)
}
