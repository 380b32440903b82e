// Counting spectral shift of two unitaries via eigenphase tracking.
//
// `cargo run --example ssf_unitary`

use traceform::calculus::LaurentPoly;
use traceform::linalg::{random_ensemble, OperatorKind, Unitary};
use traceform::shift::{ssf_unitary_pair, verify_trace_formula, OperatorPair, QuadratureSpec, TestFn};
use traceform::Result;

pub fn main() -> Result<()> {
    let u0 = Unitary::new(random_ensemble(OperatorKind::Unitary, 4, 10))?;
    let u1 = Unitary::new(random_ensemble(OperatorKind::Unitary, 4, 11))?;
    let xi = ssf_unitary_pair(&u0, &u1, &QuadratureSpec::default())?;
    println!("{} steps, real-valued: {}", xi.steps.len(), xi.max_abs_im() == 0.0);
    for s in &xi.steps {
        println!("  [{:.4}, {:.4}) value {:+}", s.from, s.to, s.value);
    }

    let pair = OperatorPair::Unitary(u0, u1);
    for n in [1, 2, -1] {
        let r = verify_trace_formula(&pair, &TestFn::Circle(LaurentPoly::monomial(n)), &xi)?;
        println!("{:>6}  residual {:.2e}", r.function, r.absolute);
    }
    Ok(())
}
