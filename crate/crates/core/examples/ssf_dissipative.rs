// Dissipative pairs on the line: resolvent comparison and the additive path.
//
// `cargo run --example ssf_dissipative`

use traceform::calculus::{LaurentPoly, LineFn};
use traceform::linalg::{random_ensemble, Dissipative, OperatorKind};
use traceform::shift::{
    ssf_dissipative_additive, ssf_dissipative_resolvent_pair, verify_trace_formula, OperatorPair, QuadratureSpec,
    TestFn,
};
use traceform::Result;

pub fn main() -> Result<()> {
    let l0 = Dissipative::new(random_ensemble(OperatorKind::Dissipative, 3, 30))?;
    let l1 = Dissipative::new(random_ensemble(OperatorKind::Dissipative, 3, 31))?;
    let spec = QuadratureSpec::default().shifted();
    let pair = OperatorPair::Dissipative(l0.clone(), l1.clone());

    let resolvent = ssf_dissipative_resolvent_pair(&l0, &l1, &spec)?;
    let additive = ssf_dissipative_additive(&l0, &(l1.matrix() - l0.matrix()), &spec)?;
    for n in 1..=3 {
        let f = TestFn::Line(LineFn::new(LaurentPoly::monomial(n))?);
        let a = verify_trace_formula(&pair, &f, &resolvent)?;
        let b = verify_trace_formula(&pair, &f, &additive)?;
        println!("{:>12}  resolvent {:.2e}  additive {:.2e}", a.function, a.absolute, b.absolute);
    }
    Ok(())
}
