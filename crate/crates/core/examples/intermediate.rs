// Intermediate contraction: split a pair into pieces whose shifts have
// imaginary parts of fixed sign.
//
// `cargo run --example intermediate`

use traceform::intermediate::{
    imaginary_range, intermediate_contraction, intermediate_general, ssf_unitary_to_contraction,
};
use traceform::linalg::{diag_real, random_ensemble, Contraction, OperatorKind, Unitary};
use traceform::shift::QuadratureSpec;
use traceform::Result;

pub fn main() -> Result<()> {
    // Close to the circle the shifts decay slowly; use many grid points.
    let spec = QuadratureSpec::new(8, 16384);

    let t0 = Contraction::new(random_ensemble(OperatorKind::Contraction, 3, 60))?;
    let t1 = Contraction::new(random_ensemble(OperatorKind::Contraction, 3, 61))?;
    let r = intermediate_contraction(&t0, &t1, &spec)?;
    let c = &r.certificates;
    println!("invertible pair: min Im ξ0 {:+.2e}, max Im ξ1 {:+.2e}, passed {}", c.min_im_xi0, c.max_im_xi1, c.passed);

    let singular = Contraction::new(diag_real(&[0.0, 0.5, 0.7]))?;
    let g = intermediate_general(&singular, &t1, &spec)?;
    println!("singular endpoint: Im ξ0 range {:?}, passed {}", imaginary_range(&g.xi0), g.certificates.passed);

    let u = Unitary::new(random_ensemble(OperatorKind::Unitary, 3, 62))?;
    let s = ssf_unitary_to_contraction(&u, &t0, &spec)?;
    println!("unitary to contraction: min Im ξ {:+.2e}, passed {}", s.min_im, s.passed);
    Ok(())
}
