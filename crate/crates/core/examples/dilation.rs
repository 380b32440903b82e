// Unitary power dilation, the Schäffer window, and the unitary / c.n.u. split.
//
// `cargo run --example dilation`

use traceform::calculus::ThetaGrid;
use traceform::dilation::{cnu_split, power_dilation, schaffer_block, semi_spectral_measure};
use traceform::linalg::{fro_norm, identity, mat_pow, random_ensemble, Contraction, OperatorKind};
use traceform::Result;

pub fn main() -> Result<()> {
    let t = Contraction::new(random_ensemble(OperatorKind::Contraction, 2, 50))?;
    let w = power_dilation(&t, 4)?;
    let unitarity = fro_norm(&(w.w.adjoint() * &w.w - identity(w.w.nrows())));
    println!("W is {}x{}, ‖W*W − I‖ = {:.1e}", w.w.nrows(), w.w.ncols(), unitarity);
    for n in 0..=4 {
        println!("  ‖P W^{n} P − T^{n}‖ = {:.1e}", fro_norm(&(w.compress_power(n) - mat_pow(t.matrix(), n))));
    }

    let win = schaffer_block(&t, 3)?;
    println!("Schäffer window: {} blocks of size {}", 2 * win.halfwidth + 1, win.dim);

    let split = cnu_split(&t);
    println!("unitary part has dimension {}, coupling {:.1e}", split.unitary_dim(), split.coupling);

    let m = semi_spectral_measure(&t, ThetaGrid::shifted(1024)?)?;
    let first = m.moment(1);
    println!("first moment of the semi-spectral measure vs T: {:.1e}", fro_norm(&(first - t.matrix())));
    Ok(())
}
