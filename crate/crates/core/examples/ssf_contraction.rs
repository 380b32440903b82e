// Spectral shift of a pair of contractions and its trace formula.
//
// `cargo run --example ssf_contraction`

use traceform::calculus::LaurentPoly;
use traceform::linalg::{random_ensemble, Contraction, OperatorKind};
use traceform::shift::{ssf_contraction_pair, verify_trace_formula, OperatorPair, QuadratureSpec, TestFn};
use traceform::Result;

pub fn main() -> Result<()> {
    let t0 = Contraction::new(random_ensemble(OperatorKind::Contraction, 3, 1))?;
    let t1 = Contraction::new(random_ensemble(OperatorKind::Contraction, 3, 2))?;
    let xi = ssf_contraction_pair(&t0, &t1, &QuadratureSpec::default())?;
    println!("grid {} points, max |Im ξ| = {:.3e}", xi.grid.len(), xi.max_abs_im());

    let pair = OperatorPair::Contraction(t0, t1);
    for n in 1..=4 {
        let r = verify_trace_formula(&pair, &TestFn::Circle(LaurentPoly::monomial(n)), &xi)?;
        println!("{:>6}  trace {:+.6} {:+.6}i  residual {:.2e}", r.function, r.trace[0], r.trace[1], r.absolute);
    }
    Ok(())
}
