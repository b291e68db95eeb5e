//! Minimal integration example: free radiative decay of a trion state,
//! compared with the closed-form exponential.

use spinterface::dynamics::{evolve, IntegratorConfig};
use spinterface::hilbert::DensityMatrix;
use spinterface::model::{DriveSpec, Model, SystemParams};

fn main() -> spinterface::Result<()> {
    // bare 4LS, no cavity, no drive
    let model = Model::new(SystemParams::default(), vec![], DriveSpec::default())?;
    let rho0 = DensityMatrix::pure_system(3);

    let cfg = IntegratorConfig::with_uniform_samples(2.0, 9);
    let traj = evolve(&rho0, &model, &cfg)?;

    println!("{:>6} {:>12} {:>12} {:>10} {:>10}", "t/ns", "p_trion", "exp(-2gt)", "p_ground0", "p_ground1");
    for (t, rho) in traj.times.iter().zip(traj.states.iter()) {
        let m = rho.matrix();
        println!(
            "{t:>6.2} {:>12.6} {:>12.6} {:>10.6} {:>10.6}",
            m[[3, 3]].re,
            (-2.0 * t).exp(),
            m[[0, 0]].re,
            m[[1, 1]].re,
        );
    }
    println!("\nmax trace error {:.2e}", traj.max_trace_error());
    Ok(())
}
