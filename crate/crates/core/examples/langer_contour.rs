// Trace of `f(T1) − f(T0)` from the perturbation determinant on a contour.
//
// `cargo run --example langer_contour`

use num_complex::Complex64 as C64;
use traceform::calculus::LaurentPoly;
use traceform::linalg::{random_ensemble, OperatorKind};
use traceform::shift::{langer_contour_trace, Contour};
use traceform::Result;

pub fn main() -> Result<()> {
    let t0 = random_ensemble(OperatorKind::Contraction, 3, 70);
    let t1 = random_ensemble(OperatorKind::Contraction, 3, 71);
    let contour = Contour { center: C64::new(0.0, 0.0), radius: 1.5, nodes: 4096 };
    for n in 1..=3 {
        let f = LaurentPoly::monomial(n);
        let via = langer_contour_trace(&f, &t0, &t1, contour)?;
        let want = (t1.pow(n as u32) - t0.pow(n as u32)).trace();
        println!("ζ^{n}: contour {:+.8} {:+.8}i, error {:.1e}", via.re, via.im, (via - want).norm());
    }
    Ok(())
}
