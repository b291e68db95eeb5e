//! Small dense linear-algebra helpers shared by the solver and oracle tests.

use crate::{C64, Result};
use ndarray::Array2;
use ndarray_linalg::Solve;

/// Dense matrix exponential via scaling-and-squaring with a [13/13] Pade
/// approximant. Intended for moderate dimensions (propagator oracles and
/// steady-state diagnostics), not for the evolution hot path.
pub fn expm(a: &Array2<C64>) -> Result<Array2<C64>> {
    let n = a.nrows();
    assert_eq!(n, a.ncols());

    let norm: f64 = a
        .rows()
        .into_iter()
        .map(|row| row.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max);

    // scale so the Pade approximant stays in its accuracy region
    let theta13 = 5.37;
    let s = if norm > theta13 {
        (norm / theta13).log2().ceil() as i32
    } else {
        0
    };
    let a = a.mapv(|z| z / C64::new(2f64.powi(s), 0.0));

    const B: [f64; 14] = [
        64764752532480000.0,
        32382376266240000.0,
        7771770303897600.0,
        1187353796428800.0,
        129060195264000.0,
        10559470521600.0,
        670442572800.0,
        33522128640.0,
        1323241920.0,
        40840800.0,
        960960.0,
        16380.0,
        182.0,
        1.0,
    ];

    let id = Array2::<C64>::eye(n);
    let a2 = a.dot(&a);
    let a4 = a2.dot(&a2);
    let a6 = a2.dot(&a4);

    let u_inner = &a6.mapv(|z| z * B[13])
        + &a4.mapv(|z| z * B[11])
        + &a2.mapv(|z| z * B[9]);
    let u = a.dot(
        &(a6.dot(&u_inner)
            + &a6.mapv(|z| z * B[7])
            + &a4.mapv(|z| z * B[5])
            + &a2.mapv(|z| z * B[3])
            + &id.mapv(|z| z * B[1])),
    );
    let v_inner = &a6.mapv(|z| z * B[12])
        + &a4.mapv(|z| z * B[10])
        + &a2.mapv(|z| z * B[8]);
    let v = a6.dot(&v_inner)
        + &a6.mapv(|z| z * B[6])
        + &a4.mapv(|z| z * B[4])
        + &a2.mapv(|z| z * B[2])
        + &id.mapv(|z| z * B[0]);

    // solve (V - U) X = (V + U)
    let lhs = &v - &u;
    let rhs = &v + &u;
    let mut x = Array2::<C64>::zeros((n, n));
    for j in 0..n {
        let col = rhs.column(j).to_owned();
        let sol = lhs.solve(&col)?;
        x.column_mut(j).assign(&sol);
    }

    for _ in 0..s {
        x = x.dot(&x);
    }
    Ok(x)
}
