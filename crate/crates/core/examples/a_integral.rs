// Trace formula through A-integrals of the Riesz parts of the shift.
//
// `cargo run --example a_integral`

use traceform::calculus::LaurentPoly;
use traceform::linalg::{random_ensemble, Contraction, OperatorKind};
use traceform::shift::{a_integral_trace, QuadratureSpec};
use traceform::Result;

pub fn main() -> Result<()> {
    let t0 = Contraction::new(random_ensemble(OperatorKind::Contraction, 2, 80))?;
    let t1 = Contraction::new(random_ensemble(OperatorKind::Contraction, 2, 81))?;
    let f = LaurentPoly::monomial(2);
    let r = a_integral_trace(&t0, &t1, &f, &QuadratureSpec::default())?;
    println!("trace          {:+.8} {:+.8}i", r.trace.re, r.trace.im);
    println!("via η₋         {:+.8} {:+.8}i", r.via_eta_minus.re, r.via_eta_minus.im);
    println!("via real ξ     {:+.8} {:+.8}i", r.via_xi_r.re, r.via_xi_r.im);
    println!("analytic part  {:.1e}", r.analytic_part.norm());
    Ok(())
}
