//! Double operator integrals for spectral and semi-spectral measures.

use serde::Serialize;

use crate::calculus::{
    divided_difference, eval_on_dissipative, eval_on_matrix, haagerup_terms, LaurentPoly, LineFn, ThetaGrid,
};
use crate::dilation::{semi_spectral_matrix, ScalarMeasure};
use crate::error::{Error, Result};
use crate::linalg::{
    cayley, ensure_same_dim, ensure_square, fro_norm, identity, normal_eig, ComplexMatrix, Contraction, Dissipative,
    C64, I,
};

/// Symbol `Φ(x, y)` of a double operator integral.
#[derive(Debug, Clone)]
pub enum SchurSymbol {
    /// `(f(x) − f(y))/(x − y)` for an analytic polynomial `f`.
    DividedDifference(LaurentPoly),
    /// `Σ φ_k(x) ψ_k(y)`.
    Haagerup(Vec<(LaurentPoly, LaurentPoly)>),
}

impl SchurSymbol {
    pub fn divided_difference(f: LaurentPoly) -> Result<Self> {
        f.require_analytic()?;
        Ok(SchurSymbol::DividedDifference(f))
    }

    pub fn eval(&self, x: C64, y: C64) -> C64 {
        match self {
            SchurSymbol::DividedDifference(f) => divided_difference(f, x, y).expect("checked analytic"),
            SchurSymbol::Haagerup(terms) => terms.iter().map(|(p, q)| p.eval(x) * q.eval(y)).sum(),
        }
    }

    /// Haagerup form of the symbol.
    pub fn terms(&self) -> Result<Vec<(LaurentPoly, LaurentPoly)>> {
        match self {
            SchurSymbol::DividedDifference(f) => haagerup_terms(f),
            SchurSymbol::Haagerup(t) => Ok(t.clone()),
        }
    }
}

/// `∬ Φ(x, y) dE_A(x) Q dE_B(y)` for normal `A`, `B`: the Schur product of
/// `[Φ(λ_i, μ_j)]` with `Q` written in the two eigenbases.
pub fn doi_spectral(
    phi: &SchurSymbol,
    a: &ComplexMatrix,
    b: &ComplexMatrix,
    q: &ComplexMatrix,
) -> Result<ComplexMatrix> {
    ensure_square(a)?;
    ensure_square(b)?;
    if q.nrows() != a.nrows() || q.ncols() != b.nrows() {
        return Err(Error::DimensionMismatch { expected: a.nrows(), found: q.nrows() });
    }
    let ea = normal_eig(a)?;
    let eb = normal_eig(b)?;
    let mut qq = ea.vectors.adjoint() * q * &eb.vectors;
    for i in 0..qq.nrows() {
        for j in 0..qq.ncols() {
            qq[(i, j)] *= phi.eval(ea.eigenvalues[i], eb.eigenvalues[j]);
        }
    }
    Ok(&ea.vectors * qq * eb.vectors.adjoint())
}

/// `Σ_k φ_k(T1) Q ψ_k(T0)` over the Haagerup list of `∂f`.
pub fn doi_semispectral(
    f: &LaurentPoly,
    t1: &Contraction,
    t0: &Contraction,
    q: &ComplexMatrix,
) -> Result<ComplexMatrix> {
    doi_semispectral_matrix(f, t1.matrix(), t0.matrix(), q)
}

pub(crate) fn doi_semispectral_matrix(
    f: &LaurentPoly,
    t1: &ComplexMatrix,
    t0: &ComplexMatrix,
    q: &ComplexMatrix,
) -> Result<ComplexMatrix> {
    ensure_square(t1)?;
    ensure_square(t0)?;
    if q.nrows() != t1.nrows() || q.ncols() != t0.nrows() {
        return Err(Error::DimensionMismatch { expected: t1.nrows(), found: q.nrows() });
    }
    let terms = haagerup_terms(f)?;
    let mut out = ComplexMatrix::zeros(t1.nrows(), t0.nrows());
    for (phi, psi) in &terms {
        out += eval_on_matrix(phi, t1) * q * eval_on_matrix(psi, t0);
    }
    Ok(out)
}

/// `f(T1) − f(T0)` as the double operator integral of `∂f` against `T1 − T0`.
pub fn lipschitz_difference(f: &LaurentPoly, t1: &Contraction, t0: &Contraction) -> Result<ComplexMatrix> {
    ensure_same_dim(t1.matrix(), t0.matrix())?;
    doi_semispectral(f, t1, t0, &(t1.matrix() - t0.matrix()))
}

#[derive(Debug, Clone, Serialize)]
pub struct FiniteDifferenceCheck {
    pub h: f64,
    pub error: f64,
}

#[derive(Debug, Clone)]
pub struct ParametricDerivative {
    pub value: ComplexMatrix,
    /// Forward-difference errors at `h = 1e-4` and `1e-5`.
    pub checks: Vec<FiniteDifferenceCheck>,
}

impl ParametricDerivative {
    /// Ratio of the coarse to the fine finite-difference error.
    pub fn shrink_ratio(&self) -> f64 {
        self.checks[0].error / self.checks[1].error.max(f64::MIN_POSITIVE)
    }
}

/// `d/dt f(T0 + tK)` as `∬ ∂f d𝓔_t K d𝓔_t`.
pub fn parametric_derivative(
    f: &LaurentPoly,
    t0: &Contraction,
    k: &ComplexMatrix,
    t: f64,
) -> Result<ParametricDerivative> {
    ensure_same_dim(t0.matrix(), k)?;
    let tt = Contraction::new(t0.matrix() + k * C64::from(t))?;
    let value = doi_semispectral(f, &tt, &tt, k)?;
    let base = eval_on_matrix(f, tt.matrix());
    let checks = [1e-4, 1e-5]
        .iter()
        .map(|&h| {
            let shifted = tt.matrix() + k * C64::from(h);
            let fd = (eval_on_matrix(f, &shifted) - &base) / C64::from(h);
            FiniteDifferenceCheck { h, error: fro_norm(&(fd - &value)) }
        })
        .collect();
    Ok(ParametricDerivative { value, checks })
}

#[derive(Debug, Clone)]
pub struct DoiTrace {
    pub value: C64,
    /// `Δ ↦ trace(K 𝓔_T(Δ))`.
    pub measure: ScalarMeasure,
    /// `∫ f′ dμ` by grid quadrature plus atoms.
    pub quadrature: C64,
}

impl DoiTrace {
    pub fn residual(&self) -> f64 {
        (self.value - self.quadrature).norm()
    }
}

/// `trace ∬ ∂f d𝓔_T K d𝓔_T` together with the scalar measure representing it.
pub fn doi_trace(f: &LaurentPoly, t: &Contraction, k: &ComplexMatrix) -> Result<DoiTrace> {
    doi_trace_on(f, t, k, ThetaGrid::shifted(crate::calculus::DEFAULT_GRID)?)
}

pub fn doi_trace_on(f: &LaurentPoly, t: &Contraction, k: &ComplexMatrix, grid: ThetaGrid) -> Result<DoiTrace> {
    ensure_same_dim(t.matrix(), k)?;
    let value = doi_semispectral(f, t, t, k)?.trace();
    let measure = if fro_norm(k) == 0.0 {
        ScalarMeasure::zero()
    } else {
        semi_spectral_matrix(t.matrix(), grid)?.trace_against(k)
    };
    let df = f.derivative();
    let quadrature = measure.integrate(|z| df.eval(z));
    Ok(DoiTrace { value, measure, quadrature })
}

#[derive(Debug, Clone)]
pub struct DissipativeDifference {
    pub value: ComplexMatrix,
    /// Distance between the direct difference and the circle DOI of the
    /// pulled-back symbol applied to `T1 − T0`.
    pub cross_check: f64,
}

/// `f(L1) − f(L0)` for dissipative matrices via the Cayley transform,
/// cross-checked against `∬ ∂φ d𝓔_{T1} (T1 − T0) d𝓔_{T0}` with
/// `T1 − T0 = −2i((L1 + i)^{-1} − (L0 + i)^{-1})`.
pub fn doi_dissipative_difference(f: &LineFn, l1: &Dissipative, l0: &Dissipative) -> Result<DissipativeDifference> {
    let n = ensure_same_dim(l1.matrix(), l0.matrix())?;
    let value = eval_on_dissipative(f, l1)? - eval_on_dissipative(f, l0)?;
    let t1 = cayley(l1.matrix())?;
    let t0 = cayley(l0.matrix())?;
    let r1 = (l1.matrix() + identity(n) * I).try_inverse().ok_or(Error::SingularCayley)?;
    let r0 = (l0.matrix() + identity(n) * I).try_inverse().ok_or(Error::SingularCayley)?;
    let diff = (r1 - r0) * (-2.0 * I);
    let via_doi = doi_semispectral_matrix(f.circle_rep(), &t1, &t0, &diff)?;
    let cross_check = fro_norm(&(&via_doi - &value)).max(fro_norm(&(diff - (&t1 - &t0))));
    Ok(DissipativeDifference { value, cross_check })
}
