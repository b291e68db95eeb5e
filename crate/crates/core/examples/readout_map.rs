//! Photon-counting spin readout: probe the Y-polarised mode for 35 ns
//! from both spin states, count transmitted photons, and threshold.

use spinterface::experiments::{run_readout, CavityConfig, SweepGrid, READOUT_TAU};
use spinterface::ghz;

fn main() -> spinterface::Result<()> {
    let mut grid = SweepGrid::new(CavityConfig::SingleMode);
    grid.kappa = vec![ghz(20.0)];
    grid.purcell = vec![7.0, 10.0, 19.0];

    let results = run_readout(&grid, READOUT_TAU, 1.0)?;

    println!("{:>8} {:>10} {:>10} {:>6} {:>10}", "F_P", "n_bright", "n_dark", "M", "R");
    for r in results {
        let r = r.expect("readout point");
        let fp = r.point.iter().find(|(n, _)| n == "purcell").unwrap().1;
        let s = r.readout.unwrap();
        println!(
            "{fp:>8.1} {:>10.4} {:>10.4} {:>6} {:>10.5}",
            s.n_bright, s.n_dark, s.threshold, s.fidelity
        );
    }
    Ok(())
}
