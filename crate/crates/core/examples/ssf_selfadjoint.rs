// Self-adjoint pairs: eigenvalue counting, the perturbation determinant,
// and agreement with the Cayley-transformed unitary pair.
//
// `cargo run --example ssf_selfadjoint`

use traceform::calculus::LaurentPoly;
use traceform::linalg::{random_ensemble, Hermitian, OperatorKind};
use traceform::shift::{
    selfadjoint_cayley_check, ssf_selfadjoint_pair, ssf_via_determinant, verify_trace_formula, OperatorPair,
    QuadratureSpec, TestFn,
};
use traceform::Result;

pub fn main() -> Result<()> {
    let a0 = Hermitian::new(random_ensemble(OperatorKind::Hermitian, 4, 20))?;
    let a1 = Hermitian::new(random_ensemble(OperatorKind::Hermitian, 4, 21))?;
    let xi = ssf_selfadjoint_pair(&a0, &a1)?;
    let pair = OperatorPair::Hermitian(a0.clone(), a1.clone());
    for n in 1..=3 {
        let r = verify_trace_formula(&pair, &TestFn::Polynomial(LaurentPoly::monomial(n)), &xi)?;
        println!("{:>6}  residual {:.2e}", r.function, r.absolute);
    }

    let ladder = [1.0, 1e-1, 1e-2, 1e-3, 1e-4];
    let d = ssf_via_determinant(&a0, &a1, 0.123, &ladder)?;
    println!("ξ(0.123): determinant {:+.6}, counting {:+}", d.value, d.reference);

    let check = selfadjoint_cayley_check(&a0, &a1, &QuadratureSpec::default())?;
    println!("Cayley gauge offset {:+}, mismatch {:.1e}", check.offset, check.mismatch);
    Ok(())
}
