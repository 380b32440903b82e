// Double operator integrals: differences, derivatives and their traces.
//
// `cargo run --example double_operator_integral`

use traceform::calculus::{eval_on_contraction, LaurentPoly};
use traceform::doi::{doi_trace, lipschitz_difference, parametric_derivative};
use traceform::linalg::{fro_norm, random_ensemble, Contraction, OperatorKind};
use traceform::Result;

pub fn main() -> Result<()> {
    let t0 = Contraction::new(random_ensemble(OperatorKind::Contraction, 3, 40))?;
    let t1 = Contraction::new(random_ensemble(OperatorKind::Contraction, 3, 41))?;
    let f = LaurentPoly::analytic_real(&[0.0, 1.0, -0.5, 0.25]);

    let diff = lipschitz_difference(&f, &t1, &t0)?;
    let direct = eval_on_contraction(&f, &t1) - eval_on_contraction(&f, &t0);
    println!("f(T1) − f(T0) via DOI: error {:.2e}", fro_norm(&(diff - direct)));

    let k = (t1.matrix() - t0.matrix()).scale(0.5);
    let d = parametric_derivative(&f, &t0, &k, 0.3)?;
    println!("d/dt f(T0 + tK) at t = 0.3: finite-difference shrink ratio {:.1}", d.shrink_ratio());

    let tr = doi_trace(&f, &t0, &k)?;
    println!("trace {:+.6} {:+.6}i, measure quadrature residual {:.2e}", tr.value.re, tr.value.im, tr.residual());
    Ok(())
}
