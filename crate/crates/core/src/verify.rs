//! Self-contained analytic oracle checks, shared by the `verify`
//! subcommand and the integration tests. Every check compares the
//! simulator against a closed-form result computable by hand.

use crate::dynamics::{evolve, IntegratorConfig};
use crate::hilbert::{max_abs_diff, DensityMatrix};
use crate::linalg::expm;
use crate::liouville::{unvec, vec_op};
use crate::metrics::{
    brute_force_threshold, emitted_photons, optimal_threshold, readout_fidelity, trace_distance,
    PhotonMetric,
};
use crate::model::{
    single_mode, CavityMode, DriveSpec, Model, Polarization, PulseEnvelope, SystemParams,
};
use crate::{ghz, C64};
use ndarray::Array2;

pub enum CheckOutcome {
    Pass(String),
    Fail(String),
}

pub struct OracleCheck {
    pub name: &'static str,
    pub run: fn() -> CheckOutcome,
}

fn pass(detail: impl Into<String>) -> CheckOutcome {
    CheckOutcome::Pass(detail.into())
}

fn fail(detail: impl Into<String>) -> CheckOutcome {
    CheckOutcome::Fail(detail.into())
}

macro_rules! try_check {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(err) => return fail(format!("error: {err}")),
        }
    };
}

fn free_decay() -> CheckOutcome {
    let model = try_check!(Model::new(
        SystemParams::default(),
        vec![],
        DriveSpec::default()
    ));
    let rho0 = DensityMatrix::pure_system(3);
    let traj = try_check!(evolve(&rho0, &model, &IntegratorConfig::new(1.0)));
    let rho = traj.final_state();
    let p33 = rho.matrix()[[3, 3]].re;
    let expected = (-2.0f64).exp();
    let sym = (rho.matrix()[[0, 0]].re - rho.matrix()[[1, 1]].re).abs();
    if (p33 - expected).abs() < 1e-6 && sym < 1e-8 {
        pass(format!("p33(1ns) = {p33:.9} vs e^-2, ground asymmetry {sym:.1e}"))
    } else {
        fail(format!("p33 = {p33:.9}, expected {expected:.9}; asymmetry {sym:.1e}"))
    }
}

fn propagator_vs_expm() -> CheckOutcome {
    let params = SystemParams::default();
    let mut modes = single_mode(&params, ghz(20.0), ghz(5.0), 1);
    modes[0].detuning = ghz(1.0);
    let drive = DriveSpec {
        laser_detuning: ghz(27.5),
        qd_x: Some(PulseEnvelope::Cw { amplitude: ghz(0.5) }),
        ..Default::default()
    };
    let model = try_check!(Model::new(params, modes, drive));
    let rho0 = DensityMatrix::pure_system(0).with_vacuum(model.space());
    let rho0 = try_check!(rho0);
    let t = 1.0;
    let mut cfg = IntegratorConfig::new(t);
    cfg.rel_tol = 1e-10;
    cfg.abs_tol = 1e-12;
    let traj = try_check!(evolve(&rho0, &model, &cfg));
    let l = try_check!(model.liouvillian_at(0.0));
    let prop = try_check!(expm(&l.matrix().mapv(|z| z * C64::new(t, 0.0))));
    let d = model.space().dim();
    let reference: Array2<C64> = unvec(&prop.dot(&vec_op(rho0.matrix())), d);
    let dev = max_abs_diff(traj.final_state().matrix(), &reference);
    if dev < 1e-8 {
        pass(format!("max deviation {dev:.2e} at t = 1 ns"))
    } else {
        fail(format!("max deviation {dev:.2e}, needed < 1e-8"))
    }
}

fn driven_empty_cavity() -> CheckOutcome {
    // with g = 0 and a weak resonant drive, N = 4 eta eps^2 tau / kappa
    let params = SystemParams::default();
    let kappa = 10.0;
    let eps = 0.2;
    let tau = 50.0;
    let modes = vec![CavityMode {
        polarization: Polarization::Y,
        detuning: 0.0,
        linewidth: kappa,
        coupling: C64::new(0.0, 0.0),
        n_max: 3,
    }];
    let drive = DriveSpec {
        laser_detuning: 0.0,
        cavity_y: Some(PulseEnvelope::Cw { amplitude: eps }),
        ..Default::default()
    };
    let model = try_check!(Model::new(params, modes, drive));
    let rho0 = try_check!(DensityMatrix::pure_system(1).with_vacuum(model.space()));
    let cfg = IntegratorConfig::with_uniform_samples(tau, 2000);
    let traj = try_check!(evolve(&rho0, &model, &cfg));
    let n = try_check!(emitted_photons(
        &traj,
        &model,
        Polarization::Y,
        1.0,
        PhotonMetric::CoherentAmplitude
    ));
    let expected = 4.0 * eps * eps * tau / kappa;
    let rel = (n - expected).abs() / expected;
    if rel < 0.02 {
        pass(format!("N = {n:.4} vs 4*eps^2*tau/kappa = {expected:.4} ({rel:.1e} rel)"))
    } else {
        fail(format!("N = {n:.4}, expected {expected:.4} ({rel:.1e} rel)"))
    }
}

fn threshold_and_fidelity() -> CheckOutcome {
    let m = match optimal_threshold(1.0, 10.0) {
        Ok(m) => m,
        Err(e) => return fail(format!("error: {e}")),
    };
    if m != 3 {
        return fail(format!("threshold(1, 10) = {m}, expected 3"));
    }
    for (lo, hi) in [(1.0, 10.0), (0.5, 7.3), (2.0, 2.0001), (0.0, 5.0), (3.0, 80.0)] {
        let formula = try_check!(optimal_threshold(lo, hi));
        let brute = brute_force_threshold(lo, hi, 200);
        if formula != brute {
            return fail(format!(
                "threshold({lo}, {hi}): formula {formula} vs brute-force {brute}"
            ));
        }
    }
    let stats = try_check!(readout_fidelity(10.0, 1.0));
    if (stats.fidelity - 0.985338).abs() > 1e-6 {
        return fail(format!("R(10, 1) = {:.6}, expected 0.985338", stats.fidelity));
    }
    let dark0 = try_check!(readout_fidelity(10.0, 0.0));
    let expected = 1.0 - (-10.0f64).exp() / 2.0;
    if (dark0.fidelity - expected).abs() > 1e-12 {
        return fail(format!("R(10, 0) = {}, expected {expected}", dark0.fidelity));
    }
    pass("threshold(1,10) = 3, brute-force agreement on 5 pairs, R(10,1) = 0.985338")
}

fn metric_axioms() -> CheckOutcome {
    // deterministic pseudo-random density matrices from a trig generator
    let mut seed = 0.5f64;
    let mut next = move || {
        seed = (seed * 997.0 + 0.123).sin().abs();
        seed - 0.5
    };
    let random_state = |gen: &mut dyn FnMut() -> f64| -> DensityMatrix {
        let raw = Array2::from_shape_fn((4, 4), |_| C64::new(gen(), gen()));
        let h = &raw + &raw.t().mapv(|z| z.conj());
        let sq = h.dot(&h.t().mapv(|z| z.conj()).to_owned());
        let tr: C64 = sq.diag().sum();
        DensityMatrix::new(
            crate::hilbert::HilbertSpace::system_only(),
            sq.mapv(|z| z / tr),
        )
        .expect("psd by construction")
    };
    for trial in 0..20 {
        let a = random_state(&mut next);
        let b = random_state(&mut next);
        let c = random_state(&mut next);
        let tab = try_check!(trace_distance(&a, &b));
        let tba = try_check!(trace_distance(&b, &a));
        let tac = try_check!(trace_distance(&a, &c));
        let tcb = try_check!(trace_distance(&c, &b));
        let taa = try_check!(trace_distance(&a, &a));
        if taa > 1e-12 {
            return fail(format!("trial {trial}: T(a,a) = {taa:.2e}"));
        }
        if (tab - tba).abs() > 1e-12 {
            return fail(format!("trial {trial}: symmetry violated"));
        }
        if !(0.0..=1.0 + 1e-12).contains(&tab) {
            return fail(format!("trial {trial}: T = {tab} out of range"));
        }
        if tab > tac + tcb + 1e-12 {
            return fail(format!("trial {trial}: triangle inequality violated"));
        }
    }
    pass("identity, symmetry, range and triangle inequality on 20 deterministic triples")
}

/// The full oracle suite, in execution order.
pub fn oracle_checks() -> Vec<OracleCheck> {
    vec![
        OracleCheck { name: "free-decay exponential", run: free_decay },
        OracleCheck { name: "propagator vs matrix exponential", run: propagator_vs_expm },
        OracleCheck { name: "driven empty cavity photon number", run: driven_empty_cavity },
        OracleCheck { name: "threshold and fidelity scalars", run: threshold_and_fidelity },
        OracleCheck { name: "trace-distance metric axioms", run: metric_axioms },
    ]
}
