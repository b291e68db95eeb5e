//! Pulsed spin initialisation: minimize the post-pulse trace distance
//! over the Rabi frequency of a square pulse at one cavity point.

use spinterface::experiments::{
    run_pulsed_initialisation, CavityConfig, OptimizationSpec, PulseKind, SweepGrid,
};
use spinterface::ghz;

fn main() -> spinterface::Result<()> {
    let mut grid = SweepGrid::new(CavityConfig::SingleMode);
    grid.kappa = vec![ghz(20.0)];
    grid.purcell = vec![10.0];
    grid.durations = vec![1.0, 3.0];

    // coarser scan than the full study; adequate for a demo
    let opt = OptimizationSpec { coarse_points: 81, ..OptimizationSpec::rabi(1.0) };
    let results = run_pulsed_initialisation(&grid, PulseKind::Square, &opt)?;

    println!("{:>10} {:>14} {:>16} {:>10}", "width/ns", "min T", "Omega*/rad ns^-1", "converged");
    for r in results {
        let r = r.expect("pulsed point");
        let duration = r.point.iter().find(|(n, _)| n == "duration").unwrap().1;
        println!(
            "{duration:>10.2} {:>14.6e} {:>16.4} {:>10}",
            r.metric,
            r.argopt.unwrap(),
            r.diagnostics.fock_converged,
        );
    }
    Ok(())
}
