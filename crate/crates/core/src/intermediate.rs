//! Multiplicative factorizations of contraction pairs: SSFs of unitary and
//! positive factors, the intermediate contraction, Fredholm regularization
//! and dilation transfer.
//!
//! Factor SSFs come from `ν = ∫₀¹ trace(Y 𝓔_{T_t}) dt` along `T_t = e^{tZ}T`:
//! for `Z = iA` the trace integral is `∫ f′(ζ) iζ dν` (real `ξ = g/2π`), for
//! `Z = −D` it is `−∫ f′(ζ) ζ dν` (`ξ = ig/2π`, `Im ξ ≥ 0`).

use std::f64::consts::PI;

use serde::Serialize;

use crate::calculus::LaurentPoly;
use crate::dilation::{power_dilation, Atom, PowerDilation};
use crate::error::{Error, Result};
use crate::linalg::{
    c, defect_of, ensure_same_dim, exp_hermitian, exp_neg_hermitian, expi_hermitian, fro_norm, hermitian_eig,
    hermitian_log_split, hermitian_part, identity, mat_pow, op_norm, polar_decompose, svd, unitary_log, ComplexMatrix,
    Contraction, Unitary, C64, I,
};
use crate::shift::{
    path_measure, ssf_unitary_pair_tracked, verify_trace_formula, AtomPolicy, Domain, Gauge, OperatorPair, PointMass,
    QuadratureSpec, SsfSample, TestFn,
};

const TWO_PI: f64 = 2.0 * PI;

/// Smallest eigenvalue accepted for a positive factor, and the singular
/// value below which a contraction is treated as non-invertible.
pub const INVERTIBILITY_FLOOR: f64 = 1e-8;

/// Test polynomials up to this degree are reproduced exactly by the
/// dilation transfer used for regularizers.
pub const TRANSFER_DEGREE: usize = 16;

/// Sign certificates only look at masses above this size.
const SIGN_TOL: f64 = 1e-8;

/// `(min Im, max Im)` over density samples and the `ξ`-weights of atoms.
pub fn imaginary_range(xi: &SsfSample) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    if let Some(d) = &xi.density {
        for v in d {
            lo = lo.min(v.im);
            hi = hi.max(v.im);
        }
    }
    for a in &xi.atoms {
        // A point mass `c` of `ξ dζ` at `ζ` is a mass `c/(iζ)` of `2π ξ dm`.
        let w = a.mass() / (I * C64::from_polar(1.0, a.at));
        lo = lo.min(w.im);
        hi = hi.max(w.im);
    }
    if lo > hi {
        (0.0, 0.0)
    } else {
        (lo, hi)
    }
}

fn factor_sample(
    spec: &QuadratureSpec,
    g: Vec<C64>,
    atoms: Vec<Atom<C64>>,
    density: C64,
    atom: C64,
) -> Result<SsfSample> {
    let grid = spec.grid()?;
    let density = g.into_iter().map(|v| v * density / TWO_PI).collect();
    let atoms = atoms
        .into_iter()
        .filter(|a| a.weight.norm() > 1e-15)
        .map(|a| {
            let m = a.weight * atom * C64::from_polar(1.0, a.theta);
            PointMass { at: a.theta.rem_euclid(TWO_PI), re: m.re, im: m.im }
        })
        .collect();
    Ok(SsfSample { domain: Domain::Circle, gauge: Gauge::Raw, grid, density: Some(density), steps: vec![], atoms })
}

/// SSF of the pair `{T, UT}` along `T_t = e^{itA}T`, `A = −i log U`.
pub fn ssf_unitary_factor(t: &Contraction, u: &Unitary, spec: &QuadratureSpec) -> Result<SsfSample> {
    spec.validate()?;
    ensure_same_dim(t.matrix(), u.matrix())?;
    let a = unitary_log(u.matrix())?;
    if fro_norm(&a) == 0.0 {
        return Ok(SsfSample::zero(Domain::Circle, Gauge::Raw, spec.grid()?));
    }
    let dec = hermitian_eig(&a)?;
    let (g, atoms) = path_measure(spec, |s| Ok(expi_hermitian(&dec, s) * t.matrix()), &a, AtomPolicy::Keep)?;
    factor_sample(spec, g, atoms, c(1.0, 0.0), I)
}

/// SSF of the pair `{T, XT}` for positive invertible `X ≤ I` along
/// `T_t = e^{−tD}T`, `D = −log X`. Its imaginary part is nonnegative.
pub fn ssf_positive_factor(t: &Contraction, x: &ComplexMatrix, spec: &QuadratureSpec) -> Result<SsfSample> {
    spec.validate()?;
    ensure_same_dim(t.matrix(), x)?;
    let xh = hermitian_part(x);
    if fro_norm(&(&xh - x)) > spec.tolerance.max(1e-12) * (1.0 + fro_norm(x)) {
        return Err(Error::NotHermitian { residual: fro_norm(&(&xh - x)) });
    }
    let eig = hermitian_eig(&xh)?;
    let min_eig = eig.eigenvalues.first().map_or(1.0, |z| z.re);
    let max_eig = eig.eigenvalues.last().map_or(0.0, |z| z.re);
    if min_eig < INVERTIBILITY_FLOOR {
        return Err(Error::NotPositiveDefinite { min_eig });
    }
    if max_eig > 1.0 + spec.tolerance {
        return Err(Error::NotContraction { norm: max_eig, tol: spec.tolerance });
    }
    let d = hermitian_part(&eig.apply(|z| c((-z.re.min(1.0).ln()).max(0.0), 0.0)));
    if fro_norm(&d) == 0.0 {
        return Ok(SsfSample::zero(Domain::Circle, Gauge::Raw, spec.grid()?));
    }
    let dd = hermitian_eig(&d)?;
    let (g, atoms) = path_measure(spec, |s| Ok(exp_neg_hermitian(&dd, s) * t.matrix()), &d, AtomPolicy::Keep)?;
    factor_sample(spec, g, atoms, I, c(-1.0, 0.0))
}

// ---------------------------------------------------------------------------
// Intermediate contraction
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct IntermediateCertificates {
    /// `‖T − e^{−UC₊U*}T1‖`
    pub factorization: f64,
    /// `‖C₊C₋‖`
    pub commutation: f64,
    pub distance_t0: f64,
    pub distance_t1: f64,
    /// `min Im ξ0`
    pub min_im_xi0: f64,
    /// `max Im ξ1`
    pub max_im_xi1: f64,
    pub passed: bool,
}

/// `T` between `T0` and `T1` with `Im ξ0 ≥ 0` for `{T0, T}` and
/// `Im ξ1 ≤ 0` for `{T, T1}`.
#[derive(Debug, Clone)]
pub struct IntermediateResult {
    pub t: ComplexMatrix,
    pub u: ComplexMatrix,
    pub c_plus: ComplexMatrix,
    pub c_minus: ComplexMatrix,
    pub xi0: SsfSample,
    pub xi1: SsfSample,
    pub xi: SsfSample,
    pub certificates: IntermediateCertificates,
}

fn min_singular_value(m: &ComplexMatrix) -> Result<f64> {
    Ok(svd(m)?.singular_values.last().copied().unwrap_or(1.0))
}

fn certify(
    t: &ComplexMatrix,
    t0: &ComplexMatrix,
    t1: &ComplexMatrix,
    factorization: f64,
    commutation: f64,
    xi0: &SsfSample,
    xi1: &SsfSample,
) -> IntermediateCertificates {
    let min_im_xi0 = imaginary_range(xi0).0;
    let max_im_xi1 = imaginary_range(xi1).1;
    let passed = factorization <= 1e-9 * op_norm(t1).max(1e-300)
        && commutation <= 1e-9
        && min_im_xi0 >= -SIGN_TOL
        && max_im_xi1 <= SIGN_TOL;
    IntermediateCertificates {
        factorization,
        commutation,
        distance_t0: op_norm(&(t - t0)),
        distance_t1: op_norm(&(t - t1)),
        min_im_xi0,
        max_im_xi1,
        passed,
    }
}

fn trivial_result(t0: &Contraction, spec: &QuadratureSpec) -> Result<IntermediateResult> {
    let n = t0.dim();
    let zero = SsfSample::zero(Domain::Circle, Gauge::Raw, spec.grid()?);
    let certificates = certify(t0.matrix(), t0.matrix(), t0.matrix(), 0.0, 0.0, &zero, &zero);
    Ok(IntermediateResult {
        t: t0.matrix().clone(),
        u: identity(n),
        c_plus: ComplexMatrix::zeros(n, n),
        c_minus: ComplexMatrix::zeros(n, n),
        xi0: zero.clone(),
        xi1: zero.clone(),
        xi: zero,
        certificates,
    })
}

/// Factor `T1T0^{-1} = U e^{C₊ − C₋}` and set `T = U e^{−C₋} T0`, so that
/// `T = e^{−UC₊U*} T1`.
pub fn intermediate_contraction(
    t0: &Contraction,
    t1: &Contraction,
    spec: &QuadratureSpec,
) -> Result<IntermediateResult> {
    spec.validate()?;
    ensure_same_dim(t0.matrix(), t1.matrix())?;
    for m in [t0.matrix(), t1.matrix()] {
        if min_singular_value(m)? < INVERTIBILITY_FLOOR {
            return Err(Error::Singular);
        }
    }
    if fro_norm(&(t1.matrix() - t0.matrix())) == 0.0 {
        return trivial_result(t0, spec);
    }
    let t0_inv = t0.matrix().clone().try_inverse().ok_or(Error::Singular)?;
    let r = t1.matrix() * t0_inv;
    let polar = polar_decompose(&r)?;
    let u = polar.unitary;
    let split = hermitian_log_split(&polar.positive)?;
    let x0 = exp_hermitian(&(-&split.minus))?;
    let t2 = Contraction::with_tolerance(&x0 * t0.matrix(), spec.tolerance)?;
    let t = Contraction::with_tolerance(&u * t2.matrix(), spec.tolerance)?;
    let uc = hermitian_part(&(&u * &split.plus * u.adjoint()));
    let x1 = exp_hermitian(&(-&uc))?;
    let factorization = op_norm(&(t.matrix() - &x1 * t1.matrix()));
    let commutation = op_norm(&(&split.plus * &split.minus));

    let eta0 = ssf_positive_factor(t0, &x0, spec)?;
    let digamma = ssf_unitary_factor(&t2, &Unitary::with_tolerance(u.clone(), 1e-9)?, spec)?;
    let xi0 = eta0.try_add(&digamma)?;
    let xi1 = ssf_positive_factor(t1, &x1, spec)?.scale(-1.0);
    let xi = xi0.try_add(&xi1)?;
    let certificates = certify(t.matrix(), t0.matrix(), t1.matrix(), factorization, commutation, &xi0, &xi1);
    Ok(IntermediateResult {
        t: t.into_matrix(),
        u,
        c_plus: split.plus,
        c_minus: split.minus,
        xi0,
        xi1,
        xi,
        certificates,
    })
}

// ---------------------------------------------------------------------------
// Fredholm regularization
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct FredholmRegularization {
    /// `Q = T + V`, invertible.
    pub q: Contraction,
    /// Partial isometry from `Ker T` onto `Ker T*`.
    pub v: ComplexMatrix,
    pub kernel_dim: usize,
    pub min_singular_value: f64,
    /// `max ‖D_Q² − (D_T − V*V)²‖` over `T` and `T*`
    pub defect_residual: f64,
}

/// Rotate a vector so that its largest entry is real and positive.
fn normalize_phase(v: &mut nalgebra::DVector<C64>) {
    let k = (0..v.len()).max_by(|&a, &b| v[a].norm().total_cmp(&v[b].norm())).unwrap_or(0);
    let z = v[k];
    if z.norm() > 0.0 {
        let ph = z.conj() / z.norm();
        v.apply(|x| *x *= ph);
    }
}

/// `Q = T + V` with `V` mapping the `k`-th right null vector to the `k`-th
/// left null vector (each phase-normalized).
pub fn fredholm_regularize(t: &Contraction) -> Result<FredholmRegularization> {
    let tm = t.matrix();
    let n = t.dim();
    let s = svd(tm)?;
    let kernel: Vec<usize> = (0..n).filter(|&k| s.singular_values[k] < INVERTIBILITY_FLOOR).collect();
    let mut v = ComplexMatrix::zeros(n, n);
    let mut tt = tm.clone();
    for &k in &kernel {
        let mut left = s.u.column(k).into_owned();
        let mut right = s.v.column(k).into_owned();
        normalize_phase(&mut left);
        normalize_phase(&mut right);
        v += &left * right.adjoint();
        // Drop the negligible singular component so that Q*Q = T*T + V*V.
        tt -= s.u.column(k) * s.v.column(k).adjoint() * c(s.singular_values[k], 0.0);
    }
    let q = Contraction::with_tolerance(&tt + &v, 1e-10)?;
    let min_singular_value = min_singular_value(q.matrix())?;
    // Squared form: the square root of the zero eigenvalues of `I − Q*Q`
    // would amplify rounding to ~1e-8.
    let id = identity(n);
    let dq = defect_of(&tt) - v.adjoint() * &v;
    let dqs = defect_of(&tt.adjoint()) - &v * v.adjoint();
    let d_res = fro_norm(&(&id - q.matrix().adjoint() * q.matrix() - &dq * &dq));
    let ds_res = fro_norm(&(&id - q.matrix() * q.matrix().adjoint() - &dqs * &dqs));
    Ok(FredholmRegularization {
        q,
        v,
        kernel_dim: kernel.len(),
        min_singular_value,
        defect_residual: d_res.max(ds_res),
    })
}

// ---------------------------------------------------------------------------
// Dilation transfer
// ---------------------------------------------------------------------------

/// Real SSF of `{T, Q}` taken from the counting SSF of their power
/// dilations of order `degree + 1`; valid for test polynomials of degree at
/// most `degree`.
pub fn dilation_transfer_ssf(
    t: &Contraction,
    q: &Contraction,
    degree: usize,
    spec: &QuadratureSpec,
) -> Result<SsfSample> {
    ensure_same_dim(t.matrix(), q.matrix())?;
    if fro_norm(&(t.matrix() - q.matrix())) == 0.0 {
        return Ok(SsfSample::zero(Domain::Circle, Gauge::Counting, spec.grid()?));
    }
    let wt = power_dilation(t, degree + 1)?;
    let wq = power_dilation(q, degree + 1)?;
    Ok(ssf_unitary_pair_tracked(&wt.w, &wq.w, spec)?.0)
}

#[derive(Debug, Clone)]
pub struct SchafferTransfer {
    pub order: usize,
    /// `|trace(W_Qⁿ − W_Tⁿ) − trace(Qⁿ − Tⁿ)|` for `n = 1..=order`.
    pub trace_errors: Vec<f64>,
    pub max_trace_error: f64,
    /// `‖D_T − D_Q‖`
    pub defect_difference: f64,
    /// `‖D_{T*} − D_{Q*}‖`
    pub defect_star_difference: f64,
    /// Counting SSF of the two dilations.
    pub xi: SsfSample,
    /// Relative trace-formula residual of `xi` on `{T, Q}` for `f = ζ²`.
    pub residual: f64,
}

/// Compare `{T, Q}` with the pair of their power dilations.
pub fn ssf_schaffer_transfer(
    t: &Contraction,
    q: &Contraction,
    order: usize,
    spec: &QuadratureSpec,
) -> Result<SchafferTransfer> {
    ensure_same_dim(t.matrix(), q.matrix())?;
    if order == 0 {
        return Err(Error::InvalidInput("transfer order must be at least 1".into()));
    }
    let wt: PowerDilation = power_dilation(t, order + 1)?;
    let wq = power_dilation(q, order + 1)?;
    let trace_errors: Vec<f64> = (1..=order)
        .map(|k| {
            let big = (mat_pow(&wq.w, k) - mat_pow(&wt.w, k)).trace();
            let small = (mat_pow(q.matrix(), k) - mat_pow(t.matrix(), k)).trace();
            (big - small).norm()
        })
        .collect();
    let max_trace_error = trace_errors.iter().copied().fold(0.0, f64::max);
    let xi = dilation_transfer_ssf(t, q, order, spec)?;
    let pair = OperatorPair::Contraction(t.clone(), q.clone());
    let residual = verify_trace_formula(&pair, &TestFn::Circle(LaurentPoly::monomial(2)), &xi)?.relative;
    Ok(SchafferTransfer {
        order,
        trace_errors,
        max_trace_error,
        defect_difference: op_norm(&(defect_of(t.matrix()) - defect_of(q.matrix()))),
        defect_star_difference: op_norm(&(defect_of(&t.matrix().adjoint()) - defect_of(&q.matrix().adjoint()))),
        xi,
        residual,
    })
}

/// Intermediate contraction for arbitrary contractions: both endpoints are
/// regularized, the invertible pair is factored, and real regularizer SSFs
/// (valid up to degree [`TRANSFER_DEGREE`]) are attached at both ends.
pub fn intermediate_general(t0: &Contraction, t1: &Contraction, spec: &QuadratureSpec) -> Result<IntermediateResult> {
    spec.validate()?;
    ensure_same_dim(t0.matrix(), t1.matrix())?;
    if fro_norm(&(t1.matrix() - t0.matrix())) == 0.0 {
        return trivial_result(t0, spec);
    }
    let r0 = fredholm_regularize(t0)?;
    let r1 = fredholm_regularize(t1)?;
    if r0.kernel_dim == 0 && r1.kernel_dim == 0 {
        return intermediate_contraction(t0, t1, spec);
    }
    let inner = intermediate_contraction(&r0.q, &r1.q, spec)?;
    let f0 = dilation_transfer_ssf(t0, &r0.q, TRANSFER_DEGREE, spec)?;
    let f1 = dilation_transfer_ssf(&r1.q, t1, TRANSFER_DEGREE, spec)?;
    let xi0 = f0.try_add(&inner.xi0)?;
    let xi1 = inner.xi1.try_add(&f1)?;
    let xi = xi0.try_add(&xi1)?;
    let certificates = certify(
        &inner.t,
        t0.matrix(),
        t1.matrix(),
        inner.certificates.factorization,
        inner.certificates.commutation,
        &xi0,
        &xi1,
    );
    Ok(IntermediateResult { xi0, xi1, xi, certificates, ..inner })
}

// ---------------------------------------------------------------------------
// Unitary to contraction
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct SignedShift {
    pub xi: SsfSample,
    pub min_im: f64,
    /// Whether `T` had to be regularized first.
    pub regularized: bool,
    pub passed: bool,
}

/// SSF of `{U, T}` with nonnegative imaginary part: `{U, V}` is a unitary
/// pair and `{V, T}` a positive factor, where `T = (V|T|V*)·V`.
pub fn ssf_unitary_to_contraction(u: &Unitary, t: &Contraction, spec: &QuadratureSpec) -> Result<SignedShift> {
    spec.validate()?;
    ensure_same_dim(u.matrix(), t.matrix())?;
    let reg = fredholm_regularize(t)?;
    let regularized = reg.kernel_dim > 0;
    let q = if regularized { reg.q.clone() } else { t.clone() };
    let polar = polar_decompose(q.matrix())?;
    let v = polar.unitary;
    let x = hermitian_part(&(&v * &polar.positive * v.adjoint()));
    let mut xi = ssf_unitary_pair_tracked(u.matrix(), &v, spec)?.0;
    xi = xi.try_add(&ssf_positive_factor(&Contraction::with_tolerance(v, 1e-9)?, &x, spec)?)?;
    if regularized {
        xi = xi.try_add(&dilation_transfer_ssf(&q, t, TRANSFER_DEGREE, spec)?)?;
    }
    let min_im = imaginary_range(&xi).0;
    Ok(SignedShift { xi, min_im, regularized, passed: min_im >= -SIGN_TOL })
}
