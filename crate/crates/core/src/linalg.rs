//! Dense complex matrices, operator classes and decompositions.

use std::f64::consts::PI;

use nalgebra::{DMatrix, Schur, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type ComplexMatrix = DMatrix<C64>;

/// Default tolerance for class validation.
pub const DEFAULT_TOL: f64 = 1e-10;

pub const I: C64 = C64::new(0.0, 1.0);

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn identity(n: usize) -> ComplexMatrix {
    ComplexMatrix::identity(n, n)
}

pub fn zeros(n: usize) -> ComplexMatrix {
    ComplexMatrix::zeros(n, n)
}

/// Diagonal matrix with the given complex entries.
pub fn diag(values: &[C64]) -> ComplexMatrix {
    let n = values.len();
    let mut m = zeros(n);
    for (i, v) in values.iter().enumerate() {
        m[(i, i)] = *v;
    }
    m
}

pub fn diag_real(values: &[f64]) -> ComplexMatrix {
    diag(&values.iter().map(|&x| c(x, 0.0)).collect::<Vec<_>>())
}

/// Build a matrix from real row-major rows.
pub fn from_real_rows(rows: &[&[f64]]) -> ComplexMatrix {
    let n = rows.len();
    let m = rows.first().map_or(0, |r| r.len());
    ComplexMatrix::from_fn(n, m, |i, j| c(rows[i][j], 0.0))
}

pub fn scalar(z: C64) -> ComplexMatrix {
    ComplexMatrix::from_element(1, 1, z)
}

/// Largest singular value.
pub fn op_norm(m: &ComplexMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.singular_values().max()
}

pub fn fro_norm(m: &ComplexMatrix) -> f64 {
    m.norm()
}

pub fn ensure_square(m: &ComplexMatrix) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare { rows: m.nrows(), cols: m.ncols() });
    }
    Ok(m.nrows())
}

pub fn ensure_same_dim(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<usize> {
    let n = ensure_square(a)?;
    let k = ensure_square(b)?;
    if n != k {
        return Err(Error::DimensionMismatch { expected: n, found: k });
    }
    Ok(n)
}

fn ensure_finite(m: &ComplexMatrix) -> Result<()> {
    if m.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite)
    }
}

pub fn inverse(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    ensure_square(m)?;
    m.clone().try_inverse().ok_or(Error::Singular)
}

pub fn mat_pow(m: &ComplexMatrix, n: usize) -> ComplexMatrix {
    let mut out = identity(m.nrows());
    let mut base = m.clone();
    let mut k = n;
    while k > 0 {
        if k & 1 == 1 {
            out = &out * &base;
        }
        k >>= 1;
        if k > 0 {
            base = &base * &base;
        }
    }
    out
}

/// Hermitian part (M + M*)/2.
pub fn hermitian_part(m: &ComplexMatrix) -> ComplexMatrix {
    (m + m.adjoint()).scale(0.5)
}

/// Imaginary part (M − M*)/(2i).
pub fn imaginary_part(m: &ComplexMatrix) -> ComplexMatrix {
    (m - m.adjoint()) * c(0.0, -0.5)
}

// ---------------------------------------------------------------------------
// Operator classes
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OperatorKind {
    Contraction,
    Unitary,
    Hermitian,
    Dissipative,
}

/// A matrix that passed validation for its class.
#[derive(Debug, Clone)]
pub struct OperatorClass {
    pub kind: OperatorKind,
    pub matrix: ComplexMatrix,
    pub tolerance: f64,
}

impl OperatorClass {
    pub fn new(kind: OperatorKind, m: ComplexMatrix) -> Result<Self> {
        Self::with_tolerance(kind, m, DEFAULT_TOL)
    }

    pub fn with_tolerance(kind: OperatorKind, m: ComplexMatrix, tol: f64) -> Result<Self> {
        let n = ensure_square(&m)?;
        ensure_finite(&m)?;
        let matrix = match kind {
            OperatorKind::Contraction => {
                let norm = op_norm(&m);
                if norm > 1.0 + tol {
                    return Err(Error::NotContraction { norm, tol });
                }
                if norm > 1.0 {
                    m.unscale(norm)
                } else {
                    m
                }
            }
            OperatorKind::Unitary => {
                let residual = fro_norm(&(m.adjoint() * &m - identity(n)));
                if residual > tol {
                    return Err(Error::NotUnitary { residual });
                }
                m
            }
            OperatorKind::Hermitian => {
                let residual = fro_norm(&(&m - m.adjoint()));
                if residual > tol {
                    return Err(Error::NotHermitian { residual });
                }
                hermitian_part(&m)
            }
            OperatorKind::Dissipative => {
                let min_eig = hermitian_eigenvalues(&imaginary_part(&m)).first().copied().unwrap_or(0.0);
                if min_eig < -tol {
                    return Err(Error::NotDissipative { min_eig });
                }
                m
            }
        };
        Ok(Self { kind, matrix, tolerance: tol })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }
}

macro_rules! class_newtype {
    ($(#[$doc:meta])* $name:ident, $kind:expr) => {
        $(#[$doc])*
        #[derive(Debug, Clone)]
        pub struct $name(ComplexMatrix);

        impl $name {
            pub fn new(m: ComplexMatrix) -> Result<Self> {
                Self::with_tolerance(m, DEFAULT_TOL)
            }

            pub fn with_tolerance(m: ComplexMatrix, tol: f64) -> Result<Self> {
                Ok(Self(OperatorClass::with_tolerance($kind, m, tol)?.matrix))
            }

            /// Wrap without validation. The caller vouches for the class.
            pub fn new_unchecked(m: ComplexMatrix) -> Self {
                Self(m)
            }

            pub fn matrix(&self) -> &ComplexMatrix {
                &self.0
            }

            pub fn into_matrix(self) -> ComplexMatrix {
                self.0
            }

            pub fn dim(&self) -> usize {
                self.0.nrows()
            }
        }

        impl AsRef<ComplexMatrix> for $name {
            fn as_ref(&self) -> &ComplexMatrix {
                &self.0
            }
        }
    };
}

class_newtype!(
    /// Matrix with operator norm at most one.
    Contraction,
    OperatorKind::Contraction
);
class_newtype!(Unitary, OperatorKind::Unitary);
class_newtype!(Hermitian, OperatorKind::Hermitian);
class_newtype!(
    /// Matrix with positive semidefinite imaginary part.
    Dissipative,
    OperatorKind::Dissipative
);

impl Contraction {
    pub fn adjoint(&self) -> Contraction {
        Contraction(self.0.adjoint())
    }
}

impl Unitary {
    pub fn as_contraction(&self) -> Contraction {
        Contraction(self.0.clone())
    }

    pub fn adjoint(&self) -> Unitary {
        Unitary(self.0.adjoint())
    }
}

impl Hermitian {
    pub fn as_dissipative(&self) -> Dissipative {
        Dissipative(self.0.clone())
    }
}

// ---------------------------------------------------------------------------
// Decompositions
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecompositionKind {
    HermitianEig,
    UnitaryEig,
    Schur,
    Svd,
    Polar,
}

/// Eigen-type factorization `M = V diag(λ) V*` with unitary `V`.
#[derive(Debug, Clone)]
pub struct Decomposition {
    pub kind: DecompositionKind,
    pub eigenvalues: Vec<C64>,
    pub vectors: ComplexMatrix,
}

impl Decomposition {
    pub fn reconstruct(&self) -> ComplexMatrix {
        self.apply(|z| z)
    }

    /// `V diag(f(λ)) V*`.
    pub fn apply(&self, f: impl Fn(C64) -> C64) -> ComplexMatrix {
        let mut scaled = self.vectors.clone();
        for (j, &lam) in self.eigenvalues.iter().enumerate() {
            let fz = f(lam);
            for i in 0..scaled.nrows() {
                scaled[(i, j)] *= fz;
            }
        }
        scaled * self.vectors.adjoint()
    }

    pub fn real_eigenvalues(&self) -> Vec<f64> {
        self.eigenvalues.iter().map(|z| z.re).collect()
    }

    /// Orthogonal projection onto the span of the selected eigenvectors.
    pub fn projection(&self, select: impl Fn(usize) -> bool) -> ComplexMatrix {
        let n = self.vectors.nrows();
        let mut p = zeros(n);
        for j in (0..self.eigenvalues.len()).filter(|&j| select(j)) {
            let v = self.vectors.column(j);
            p += v * v.adjoint();
        }
        p
    }
}

fn permute_columns(m: &ComplexMatrix, order: &[usize]) -> ComplexMatrix {
    ComplexMatrix::from_fn(m.nrows(), order.len(), |i, j| m[(i, order[j])])
}

/// Hermitian eigendecomposition, eigenvalues ascending.
pub fn hermitian_eig(m: &ComplexMatrix) -> Result<Decomposition> {
    ensure_square(m)?;
    ensure_finite(m)?;
    let eig = SymmetricEigen::new(hermitian_part(m));
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    Ok(Decomposition {
        kind: DecompositionKind::HermitianEig,
        eigenvalues: order.iter().map(|&k| c(eig.eigenvalues[k], 0.0)).collect(),
        vectors: permute_columns(&eig.eigenvectors, &order),
    })
}

pub fn hermitian_eigenvalues(m: &ComplexMatrix) -> Vec<f64> {
    let mut v: Vec<f64> = SymmetricEigen::new(hermitian_part(m)).eigenvalues.iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

/// Complex Schur form `M = Q T Q*`. Shifted QR can stall on exactly
/// structured input (cyclic permutations); it is then retried on fixed
/// random unitary conjugates, which leave the spectrum unchanged.
pub fn schur_form(m: &ComplexMatrix) -> Result<(ComplexMatrix, ComplexMatrix)> {
    let n = ensure_square(m)?;
    if let Some(s) = Schur::try_new(m.clone(), 1e-15, 10_000) {
        return Ok(s.unpack());
    }
    for seed in 0..4u64 {
        let w = random_ensemble(OperatorKind::Unitary, n, 0x5eed + seed);
        if let Some(s) = Schur::try_new(&w * m * w.adjoint(), 1e-15, 10_000) {
            let (q, t) = s.unpack();
            return Ok((w.adjoint() * q, t));
        }
    }
    Err(Error::NonConvergence("Schur iteration".into()))
}

/// Schur-based eigendecomposition of a normal matrix. Eigenvalues are left
/// in Schur order.
pub fn normal_eig(m: &ComplexMatrix) -> Result<Decomposition> {
    let n = ensure_square(m)?;
    ensure_finite(m)?;
    if n == 0 {
        return Ok(Decomposition { kind: DecompositionKind::Schur, eigenvalues: vec![], vectors: zeros(0) });
    }
    let (q, t) = schur_form(m)?;
    let mut off = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                off += t[(i, j)].norm_sqr();
            }
        }
    }
    let residual = off.sqrt();
    if residual > 1e-9 * fro_norm(m).max(f64::MIN_POSITIVE) {
        return Err(Error::NotNormal { residual });
    }
    Ok(Decomposition { kind: DecompositionKind::Schur, eigenvalues: (0..n).map(|i| t[(i, i)]).collect(), vectors: q })
}

/// Eigendecomposition of a unitary, eigenvalues sorted by principal
/// argument in (−π, π] and projected onto the circle.
pub fn unitary_eig(m: &ComplexMatrix) -> Result<Decomposition> {
    let d = normal_eig(m)?;
    let mut order: Vec<usize> = (0..d.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| principal_arg(d.eigenvalues[a]).total_cmp(&principal_arg(d.eigenvalues[b])));
    Ok(Decomposition {
        kind: DecompositionKind::UnitaryEig,
        eigenvalues: order.iter().map(|&k| d.eigenvalues[k] / d.eigenvalues[k].norm()).collect(),
        vectors: permute_columns(&d.vectors, &order),
    })
}

/// Argument in (−π, π].
pub fn principal_arg(z: C64) -> f64 {
    let a = z.arg();
    if a <= -PI {
        a + 2.0 * PI
    } else {
        a
    }
}

/// Singular value decomposition `M = U diag(s) V*`, `s` descending.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: ComplexMatrix,
    pub singular_values: Vec<f64>,
    pub v: ComplexMatrix,
}

impl Svd {
    pub fn reconstruct(&self) -> ComplexMatrix {
        let s = diag_real(&self.singular_values);
        &self.u * s * self.v.adjoint()
    }
}

pub fn svd(m: &ComplexMatrix) -> Result<Svd> {
    ensure_square(m)?;
    ensure_finite(m)?;
    let n = m.nrows();
    if n == 0 {
        return Ok(Svd { u: zeros(0), singular_values: vec![], v: zeros(0) });
    }
    let s = m.clone().svd(true, true);
    let u = s.u.ok_or_else(|| Error::NonConvergence("SVD".into()))?;
    let v_t = s.v_t.ok_or_else(|| Error::NonConvergence("SVD".into()))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| s.singular_values[b].total_cmp(&s.singular_values[a]));
    let v = v_t.adjoint();
    Ok(Svd {
        u: permute_columns(&u, &order),
        singular_values: order.iter().map(|&k| s.singular_values[k]).collect(),
        v: permute_columns(&v, &order),
    })
}

/// Polar factors `M = U P`.
#[derive(Debug, Clone)]
pub struct Polar {
    pub unitary: ComplexMatrix,
    pub positive: ComplexMatrix,
}

/// Polar decomposition with `P = (M*M)^{1/2}`. For invertible `M` the factor
/// `U` is unitary; otherwise it is the partial isometry with initial space
/// `range(P)`.
pub fn polar_decompose(m: &ComplexMatrix) -> Result<Polar> {
    let s = svd(m)?;
    let smax = s.singular_values.first().copied().unwrap_or(0.0);
    let cutoff = 1e-13 * smax.max(f64::MIN_POSITIVE);
    let n = m.nrows();
    let mut unitary = zeros(n);
    for (k, &sv) in s.singular_values.iter().enumerate() {
        if sv > cutoff {
            unitary += s.u.column(k) * s.v.column(k).adjoint();
        }
    }
    let positive = hermitian_part(&(&s.v * diag_real(&s.singular_values) * s.v.adjoint()));
    Ok(Polar { unitary, positive })
}

/// `(C₊, C₋)` with `C₊ − C₋ = log P`, both positive semidefinite and
/// supported on complementary spectral subspaces.
#[derive(Debug, Clone)]
pub struct LogSplit {
    pub plus: ComplexMatrix,
    pub minus: ComplexMatrix,
}

pub fn hermitian_log_split(p: &ComplexMatrix) -> Result<LogSplit> {
    let eig = hermitian_eig(p)?;
    let min_eig = eig.eigenvalues.first().map_or(1.0, |z| z.re);
    if min_eig <= 0.0 {
        return Err(Error::NotPositiveDefinite { min_eig });
    }
    let plus = eig.apply(|z| c(z.re.ln().max(0.0), 0.0));
    let minus = eig.apply(|z| c((-z.re.ln()).max(0.0), 0.0));
    Ok(LogSplit { plus: hermitian_part(&plus), minus: hermitian_part(&minus) })
}

/// Defect operator `D_T = (I − T*T)^{1/2}`.
pub fn defect(t: &Contraction) -> ComplexMatrix {
    defect_of(t.matrix())
}

pub(crate) fn defect_of(t: &ComplexMatrix) -> ComplexMatrix {
    let n = t.nrows();
    let gram = identity(n) - t.adjoint() * t;
    let eig = hermitian_eig(&gram).expect("square by construction");
    hermitian_part(&eig.apply(|z| c(z.re.max(0.0).sqrt(), 0.0)))
}

/// Functional calculus `V f(Λ) V*` for Hermitian or unitary (normal) input.
pub fn matfun(f: impl Fn(C64) -> C64, m: &ComplexMatrix) -> Result<ComplexMatrix> {
    let n = ensure_square(m)?;
    let herm_res = fro_norm(&(m - m.adjoint()));
    if herm_res <= DEFAULT_TOL * fro_norm(m).max(1.0) {
        return Ok(hermitian_eig(m)?.apply(f));
    }
    let d = normal_eig(m)?;
    let _ = n;
    Ok(d.apply(f))
}

/// Exponential of `i·t·A` for Hermitian `A`.
pub fn expi_hermitian(a: &Decomposition, t: f64) -> ComplexMatrix {
    a.apply(|z| C64::from_polar(1.0, t * z.re))
}

/// Exponential of `−t·D` for Hermitian `D`.
pub fn exp_neg_hermitian(d: &Decomposition, t: f64) -> ComplexMatrix {
    hermitian_part(&d.apply(|z| c((-t * z.re).exp(), 0.0)))
}

/// Matrix exponential of a Hermitian matrix.
pub fn exp_hermitian(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    Ok(hermitian_part(&hermitian_eig(m)?.apply(|z| c(z.re.exp(), 0.0))))
}

/// Hermitian `A` with `e^{iA} = U`. The branch cut sits at −1 unless an
/// eigenvalue lies within `1e-9` of it, in which case it is rotated to the
/// middle of the largest gap between eigenphases.
pub fn unitary_log(u: &ComplexMatrix) -> Result<ComplexMatrix> {
    let d = unitary_eig(u)?;
    let phases: Vec<f64> = d.eigenvalues.iter().map(|z| principal_arg(*z)).collect();
    let near_cut = d.eigenvalues.iter().any(|z| (z + 1.0).norm() < 1e-9);
    let cut = if near_cut { largest_gap_midpoint(&phases) } else { PI };
    // Phases are lifted into (cut − 2π, cut].
    let lifted: Vec<f64> = phases
        .iter()
        .map(|&p| {
            let mut q = p;
            while q > cut {
                q -= 2.0 * PI;
            }
            while q <= cut - 2.0 * PI {
                q += 2.0 * PI;
            }
            q
        })
        .collect();
    let dec = Decomposition {
        kind: DecompositionKind::HermitianEig,
        eigenvalues: lifted.iter().map(|&x| c(x, 0.0)).collect(),
        vectors: d.vectors,
    };
    Ok(hermitian_part(&dec.reconstruct()))
}

fn largest_gap_midpoint(sorted_phases: &[f64]) -> f64 {
    if sorted_phases.is_empty() {
        return PI;
    }
    let n = sorted_phases.len();
    let mut best = (0.0, PI);
    for k in 0..n {
        let a = sorted_phases[k];
        let b = if k + 1 < n { sorted_phases[k + 1] } else { sorted_phases[0] + 2.0 * PI };
        if b - a > best.0 {
            best = (b - a, 0.5 * (a + b));
        }
    }
    best.1
}

/// Cayley transform `(L − iI)(L + iI)^{-1}`.
pub fn cayley(l: &ComplexMatrix) -> Result<ComplexMatrix> {
    let n = ensure_square(l)?;
    let plus = l + identity(n) * I;
    let inv = plus.try_inverse().ok_or(Error::SingularCayley)?;
    Ok((l - identity(n) * I) * inv)
}

// ---------------------------------------------------------------------------
// Random ensembles
// ---------------------------------------------------------------------------

fn gaussian(n: usize, rng: &mut ChaCha8Rng) -> ComplexMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    ComplexMatrix::from_fn(n, n, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        c(re * s, im * s)
    })
}

/// Deterministic random matrix of the given class.
pub fn random_ensemble(kind: OperatorKind, n: usize, seed: u64) -> ComplexMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = gaussian(n, &mut rng);
    match kind {
        OperatorKind::Unitary => {
            let qr = g.qr();
            let (q, r) = (qr.q(), qr.r());
            let mut q = q;
            for j in 0..n {
                let d = r[(j, j)];
                let ph = if d.norm() > 0.0 { d / d.norm() } else { c(1.0, 0.0) };
                for i in 0..n {
                    q[(i, j)] *= ph;
                }
            }
            q
        }
        OperatorKind::Hermitian => hermitian_part(&g),
        OperatorKind::Contraction => {
            let norm = op_norm(&g);
            g.scale(0.9 / norm)
        }
        OperatorKind::Dissipative => {
            let h = hermitian_part(&g);
            let b = gaussian(n, &mut rng);
            let p = hermitian_part(&(&b * b.adjoint())).unscale(n as f64);
            h + p * I
        }
    }
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixJson {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<[f64; 2]>,
}

impl From<&ComplexMatrix> for MatrixJson {
    fn from(m: &ComplexMatrix) -> Self {
        let mut data = Vec::with_capacity(m.len());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                data.push([m[(i, j)].re, m[(i, j)].im]);
            }
        }
        MatrixJson { rows: m.nrows(), cols: m.ncols(), data }
    }
}

impl TryFrom<MatrixJson> for ComplexMatrix {
    type Error = Error;

    fn try_from(j: MatrixJson) -> Result<Self> {
        if j.data.len() != j.rows * j.cols {
            return Err(Error::InvalidInput(format!(
                "matrix data has {} entries, expected {}x{}",
                j.data.len(),
                j.rows,
                j.cols
            )));
        }
        let m = ComplexMatrix::from_fn(j.rows, j.cols, |r, col| {
            let [re, im] = j.data[r * j.cols + col];
            c(re, im)
        });
        ensure_finite(&m)?;
        Ok(m)
    }
}

pub fn matrix_to_json(m: &ComplexMatrix) -> String {
    serde_json::to_string(&MatrixJson::from(m)).expect("matrix serializes")
}

pub fn matrix_from_json(s: &str) -> Result<ComplexMatrix> {
    let j: MatrixJson = serde_json::from_str(s)?;
    j.try_into()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn close(a: &ComplexMatrix, b: &ComplexMatrix, tol: f64) -> bool {
        fro_norm(&(a - b)) <= tol
    }

    #[test]
    fn polar_of_positive_and_diagonal() {
        let p = polar_decompose(&diag_real(&[2.0, 2.0])).unwrap();
        assert!(close(&p.unitary, &identity(2), 1e-12));
        assert!(close(&p.positive, &diag_real(&[2.0, 2.0]), 1e-12));

        let p = polar_decompose(&diag_real(&[-1.0, 3.0])).unwrap();
        assert!(close(&p.unitary, &diag_real(&[-1.0, 1.0]), 1e-12));
        assert!(close(&p.positive, &diag_real(&[1.0, 3.0]), 1e-12));
    }

    #[test]
    fn polar_of_nilpotent_is_partial_isometry() {
        let m = from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]);
        let p = polar_decompose(&m).unwrap();
        assert!(close(&p.positive, &diag_real(&[0.0, 1.0]), 1e-12));
        assert!(close(&(&p.unitary * &p.positive), &m, 1e-12));
        // e2 -> e1, and e1 is annihilated
        assert_abs_diff_eq!(p.unitary[(0, 1)].norm(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.unitary.column(0).norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn polar_reconstructs_random() {
        for seed in 0..8 {
            let m = random_ensemble(OperatorKind::Contraction, 2 + seed as usize, seed);
            let p = polar_decompose(&m).unwrap();
            assert!(close(&(&p.unitary * &p.positive), &m, 1e-10 * op_norm(&m)));
            let u = &p.unitary;
            assert!(close(&(u.adjoint() * u), &identity(m.nrows()), 1e-10));
        }
    }

    #[test]
    fn log_split_examples() {
        let s = hermitian_log_split(&identity(3)).unwrap();
        assert!(close(&s.plus, &zeros(3), 1e-14));
        assert!(close(&s.minus, &zeros(3), 1e-14));

        let e = std::f64::consts::E;
        let s = hermitian_log_split(&diag_real(&[e, e.powi(-2)])).unwrap();
        assert!(close(&s.plus, &diag_real(&[1.0, 0.0]), 1e-12));
        assert!(close(&s.minus, &diag_real(&[0.0, 2.0]), 1e-12));
    }

    #[test]
    fn log_split_roundtrip() {
        let g = random_ensemble(OperatorKind::Hermitian, 4, 11);
        let p = exp_hermitian(&g).unwrap();
        let s = hermitian_log_split(&p).unwrap();
        let back = exp_hermitian(&(&s.plus - &s.minus)).unwrap();
        assert!(close(&back, &p, 1e-10 * op_norm(&p)));
        assert!(close(&(&s.plus * &s.minus), &zeros(4), 1e-12));
    }

    #[test]
    fn log_split_rejects_singular() {
        assert!(matches!(hermitian_log_split(&diag_real(&[1.0, 0.0])), Err(Error::NotPositiveDefinite { .. })));
    }

    #[test]
    fn defect_examples() {
        let z = Contraction::new(zeros(3)).unwrap();
        assert!(close(&defect(&z), &identity(3), 1e-14));

        let u = Contraction::new(random_ensemble(OperatorKind::Unitary, 3, 5)).unwrap();
        assert!(fro_norm(&defect(&u)) < 1e-7);

        let t = Contraction::new(from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]])).unwrap();
        assert!(close(&defect(&t), &diag_real(&[1.0, 0.0]), 1e-12));
        assert!(close(&defect(&t.adjoint()), &diag_real(&[0.0, 1.0]), 1e-12));
    }

    #[test]
    fn defect_squares_back() {
        let t = random_ensemble(OperatorKind::Contraction, 5, 3);
        let d = defect_of(&t);
        let gram = identity(5) - t.adjoint() * &t;
        assert!(close(&(&d * &d), &gram, 1e-12));
        assert!(close(&(&d * &(t.adjoint() * &t)), &(&(t.adjoint() * &t) * &d), 1e-12));
    }

    #[test]
    fn matfun_examples() {
        assert!(close(&matfun(|z| z.exp(), &zeros(2)).unwrap(), &identity(2), 1e-14));
        let m = diag_real(&[1.0, -2.0]);
        assert!(close(&matfun(|z| z * z, &m).unwrap(), &diag_real(&[1.0, 4.0]), 1e-12));
        let u = diag(&[I, -I]);
        let l = matfun(|z| z.ln(), &u).unwrap();
        assert!(close(&l, &diag(&[I * (PI / 2.0), -I * (PI / 2.0)]), 1e-12));
    }

    #[test]
    fn matfun_identity_roundtrip() {
        let h = random_ensemble(OperatorKind::Hermitian, 6, 9);
        assert!(close(&matfun(|z| z, &h).unwrap(), &h, 1e-12));
        let u = random_ensemble(OperatorKind::Unitary, 6, 9);
        assert!(close(&matfun(|z| z, &u).unwrap(), &u, 1e-12));
    }

    #[test]
    fn matfun_rejects_non_normal() {
        let m = from_real_rows(&[&[1.0, 1.0], &[0.0, 2.0]]);
        assert!(matches!(matfun(|z| z, &m), Err(Error::NotNormal { .. })));
    }

    #[test]
    fn ensembles() {
        let u = random_ensemble(OperatorKind::Unitary, 4, 42);
        assert!(close(&(u.adjoint() * &u), &identity(4), 1e-12));
        let t = random_ensemble(OperatorKind::Contraction, 6, 7);
        assert!(op_norm(&t) <= 0.9 + 1e-14);
        assert_eq!(random_ensemble(OperatorKind::Dissipative, 3, 1), random_ensemble(OperatorKind::Dissipative, 3, 1));
        let l = random_ensemble(OperatorKind::Dissipative, 3, 1);
        assert!(Dissipative::new(l).is_ok());
        assert!(Hermitian::new(random_ensemble(OperatorKind::Hermitian, 5, 2)).is_ok());
    }

    #[test]
    fn contraction_clamp_and_reject() {
        let m = diag_real(&[1.0 + 5e-11, 0.5]);
        let t = Contraction::new(m).unwrap();
        assert!(op_norm(t.matrix()) <= 1.0);
        assert!(matches!(Contraction::new(diag_real(&[1.1])), Err(Error::NotContraction { .. })));
        assert!(matches!(Contraction::new(ComplexMatrix::zeros(2, 3)), Err(Error::NotSquare { .. })));
    }

    #[test]
    fn eig_sorting_and_reconstruction() {
        let h = random_ensemble(OperatorKind::Hermitian, 7, 4);
        let d = hermitian_eig(&h).unwrap();
        let ev = d.real_eigenvalues();
        assert!(ev.windows(2).all(|w| w[0] <= w[1]));
        assert!(close(&d.reconstruct(), &h, 1e-10 * op_norm(&h)));

        let u = random_ensemble(OperatorKind::Unitary, 7, 4);
        let d = unitary_eig(&u).unwrap();
        let args: Vec<f64> = d.eigenvalues.iter().map(|z| principal_arg(*z)).collect();
        assert!(args.windows(2).all(|w| w[0] <= w[1]));
        assert!(d.eigenvalues.iter().all(|z| (z.norm() - 1.0).abs() < 1e-10));
        assert!(close(&d.reconstruct(), &u, 1e-10));
    }

    #[test]
    fn svd_reconstructs() {
        let m = random_ensemble(OperatorKind::Dissipative, 5, 8);
        let s = svd(&m).unwrap();
        assert!(close(&s.reconstruct(), &m, 1e-10 * op_norm(&m)));
        assert!(s.singular_values.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn unitary_log_rotates_cut() {
        let u = diag(&[c(-1.0, 0.0), I]);
        let a = unitary_log(&u).unwrap();
        let back = matfun(|z| C64::from_polar(1.0, z.re), &a).unwrap();
        assert!(close(&back, &u, 1e-12));
        let r = random_ensemble(OperatorKind::Unitary, 5, 21);
        let a = unitary_log(&r).unwrap();
        assert!(op_norm(&a) <= PI + 1e-12);
        let back = matfun(|z| C64::from_polar(1.0, z.re), &a).unwrap();
        assert!(close(&back, &r, 1e-10));
    }

    #[test]
    fn cayley_scalars() {
        assert_abs_diff_eq!(cayley(&scalar(I)).unwrap()[(0, 0)].norm(), 0.0, epsilon = 1e-15);
        let z = cayley(&scalar(c(0.0, 2.0))).unwrap()[(0, 0)];
        assert_abs_diff_eq!((z - c(1.0 / 3.0, 0.0)).norm(), 0.0, epsilon = 1e-15);
        assert!(matches!(cayley(&scalar(-I)), Err(Error::SingularCayley)));
    }

    #[test]
    fn json_roundtrip_and_reject() {
        let m = random_ensemble(OperatorKind::Unitary, 3, 1);
        let back = matrix_from_json(&matrix_to_json(&m)).unwrap();
        assert_eq!(back, m);
        assert!(matrix_from_json(r#"{"rows":2,"cols":2,"data":[[1,0]]}"#).is_err());
    }
}
