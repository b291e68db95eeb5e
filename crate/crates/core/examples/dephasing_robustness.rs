//! Robustness of the readout stage against trion pure dephasing: rerun
//! the readout point at increasing dephasing rates.

use spinterface::experiments::{
    run_dephasing_study, BaseExperiment, CavityConfig, SweepGrid, READOUT_TAU,
};
use spinterface::ghz;

fn main() -> spinterface::Result<()> {
    let mut grid = SweepGrid::new(CavityConfig::SingleMode);
    grid.kappa = vec![ghz(20.0)];
    grid.purcell = vec![19.0];

    let base = BaseExperiment::Readout { tau: READOUT_TAU, eta: 1.0 };
    let results = run_dephasing_study(&grid, &base, &[0.0, 1.0, 10.0])?;

    println!("{:>12} {:>10}", "Gamma/gamma", "R");
    for r in results {
        let r = r.expect("dephasing point");
        let rate = r.point.iter().find(|(n, _)| n == "gamma_deph").unwrap().1;
        println!("{rate:>12.1} {:>10.5}", r.metric);
    }
    Ok(())
}
