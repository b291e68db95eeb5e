//! Steady-state spin initialisation under CW driving: trace distance to
//! the target spin state as a function of g/kappa, for a single-mode and
//! a bi-modal cavity.

use spinterface::experiments::{run_steady_state_initialisation, CavityConfig, SweepGrid};
use spinterface::ghz;

fn main() -> spinterface::Result<()> {
    let ratios = vec![0.1, 0.3, 1.0, 3.0, 10.0];

    println!("{:>8} {:>14} {:>14}", "g/kappa", "T single", "T bi-modal");
    let mut columns = Vec::new();
    for cavity in [CavityConfig::SingleMode, CavityConfig::BiModal] {
        let mut grid = SweepGrid::new(cavity);
        grid.kappa = vec![ghz(20.0)];
        grid.g_over_kappa = ratios.clone();
        let results = run_steady_state_initialisation(&grid)?;
        columns.push(
            results
                .into_iter()
                .map(|r| r.expect("steady point").metric)
                .collect::<Vec<_>>(),
        );
    }
    for (i, ratio) in ratios.iter().enumerate() {
        println!("{ratio:>8.2} {:>14.6} {:>14.6}", columns[0][i], columns[1][i]);
    }
    Ok(())
}
