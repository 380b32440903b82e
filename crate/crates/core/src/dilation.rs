//! Unitary dilations of contractions and their semi-spectral measures.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calculus::{GridFunction, ThetaGrid};
use crate::error::{Error, Result};
use crate::linalg::{
    c, defect_of, fro_norm, hermitian_eig, identity, mat_pow, principal_arg, schur_form, unitary_eig, zeros,
    ComplexMatrix, Contraction, MatrixJson, C64,
};

/// Kernel threshold applied to eigenvalues of `I − T*T`, i.e. to squared
/// defect singular values.
pub const KERNEL_TOL: f64 = 1e-10;

/// Two phases closer than this are treated as one atom.
const ATOM_MERGE_TOL: f64 = 1e-8;

// ---------------------------------------------------------------------------
// Schäffer window
// ---------------------------------------------------------------------------

/// Central `(2W+1)`-block window of the Schäffer unitary dilation. Block
/// rows and columns are indexed by `−W..=W`. Not unitary: the truncation
/// cuts the shift at both ends.
#[derive(Debug, Clone)]
pub struct SchafferWindow {
    pub dim: usize,
    pub halfwidth: usize,
    pub matrix: ComplexMatrix,
}

impl SchafferWindow {
    fn offset(&self, j: i64) -> usize {
        (j + self.halfwidth as i64) as usize * self.dim
    }

    pub fn block(&self, i: i64, j: i64) -> ComplexMatrix {
        let d = self.dim;
        self.matrix.view((self.offset(i), self.offset(j)), (d, d)).into_owned()
    }
}

pub fn schaffer_block(t: &Contraction, halfwidth: usize) -> Result<SchafferWindow> {
    if halfwidth == 0 {
        return Err(Error::InvalidInput("window halfwidth must be at least 1".into()));
    }
    let d = t.dim();
    let tm = t.matrix();
    let w = halfwidth as i64;
    let size = (2 * halfwidth + 1) * d;
    let mut win = SchafferWindow { dim: d, halfwidth, matrix: zeros(size) };
    let put = |win: &mut SchafferWindow, i: i64, j: i64, b: &ComplexMatrix| {
        let (r, col) = (win.offset(i), win.offset(j));
        win.matrix.view_mut((r, col), (d, d)).copy_from(b);
    };
    put(&mut win, 0, 0, tm);
    put(&mut win, 0, 1, &defect_of(&tm.adjoint()));
    put(&mut win, -1, 0, &defect_of(tm));
    put(&mut win, -1, 1, &(-tm.adjoint()));
    for j in -w..w {
        if j != 0 && j != -1 {
            put(&mut win, j, j + 1, &identity(d));
        }
    }
    Ok(win)
}

/// Orthonormal basis (columns) of the eigenvectors of a PSD matrix with
/// eigenvalue at most `tol`, and of the remaining ones.
fn split_kernel(psd: &ComplexMatrix, tol: f64) -> (ComplexMatrix, ComplexMatrix) {
    let eig = hermitian_eig(psd).expect("square");
    let n = psd.nrows();
    let k = eig.eigenvalues.iter().filter(|z| z.re <= tol).count();
    let ker = eig.vectors.columns(0, k).into_owned();
    let rest = eig.vectors.columns(k, n - k).into_owned();
    (ker, rest)
}

#[derive(Debug, Clone, Serialize)]
pub struct KernelIsometryReport {
    pub kernel_dim: usize,
    pub cokernel_dim: usize,
    /// `max |‖Tx‖ − 1|` over the kernel basis.
    pub isometry_residual: f64,
    /// `max ‖D_{T*}(−Tx)‖` over the kernel basis.
    pub range_residual: f64,
    pub passed: bool,
}

/// Check that `−T` maps `Ker D_T` isometrically onto `Ker D_{T*}`, the
/// structural fact behind the bilateral-shift part of the dilation.
pub fn kernel_isometry_check(t: &Contraction) -> KernelIsometryReport {
    let tm = t.matrix();
    let n = tm.nrows();
    let (ker, _) = split_kernel(&(identity(n) - tm.adjoint() * tm), KERNEL_TOL);
    let (coker, _) = split_kernel(&(identity(n) - tm * tm.adjoint()), KERNEL_TOL);
    let gram_star = identity(n) - tm * tm.adjoint();
    let mut iso: f64 = 0.0;
    let mut range: f64 = 0.0;
    for x in ker.column_iter() {
        let y = -(tm * x);
        iso = iso.max((y.norm() - 1.0).abs());
        // ‖D_{T*} y‖² = ⟨(I − TT*)y, y⟩
        let q = (y.adjoint() * &gram_star * &y)[(0, 0)].re.max(0.0);
        range = range.max(q.sqrt());
    }
    let passed = ker.ncols() == coker.ncols() && iso <= 1e-8 && range <= 1e-5;
    KernelIsometryReport {
        kernel_dim: ker.ncols(),
        cokernel_dim: coker.ncols(),
        isometry_residual: iso,
        range_residual: range,
        passed,
    }
}

// ---------------------------------------------------------------------------
// Power dilation
// ---------------------------------------------------------------------------

/// Unitary `W` on `N+1` copies of the base space with
/// `P₀ Wⁿ|₀ = Tⁿ` for `0 ≤ n ≤ N`.
#[derive(Debug, Clone)]
pub struct PowerDilation {
    pub dim: usize,
    pub order: usize,
    pub w: ComplexMatrix,
}

impl PowerDilation {
    /// Compression of `W^n` to block 0.
    pub fn compress_power(&self, n: usize) -> ComplexMatrix {
        let d = self.dim;
        mat_pow(&self.w, n).view((0, 0), (d, d)).into_owned()
    }
}

pub fn power_dilation(t: &Contraction, order: usize) -> Result<PowerDilation> {
    if order == 0 {
        return Err(Error::InvalidInput("dilation order must be at least 1".into()));
    }
    let d = t.dim();
    let tm = t.matrix();
    let mut w = zeros((order + 1) * d);
    let last = order * d;
    w.view_mut((0, 0), (d, d)).copy_from(tm);
    w.view_mut((d, 0), (d, d)).copy_from(&defect_of(tm));
    w.view_mut((0, last), (d, d)).copy_from(&defect_of(&tm.adjoint()));
    w.view_mut((d, last), (d, d)).copy_from(&(-tm.adjoint()));
    for j in 1..order {
        w.view_mut(((j + 1) * d, j * d), (d, d)).copy_from(&identity(d));
    }
    Ok(PowerDilation { dim: d, order, w })
}

// ---------------------------------------------------------------------------
// Unitary / completely nonunitary split
// ---------------------------------------------------------------------------

/// Orthogonal decomposition of the space into the largest reducing subspace
/// on which `T` is unitary and its complement.
#[derive(Debug, Clone)]
pub struct CnuSplit {
    /// Orthonormal columns spanning the unitary subspace.
    pub unitary_basis: ComplexMatrix,
    /// Orthonormal columns spanning the c.n.u. subspace.
    pub cnu_basis: ComplexMatrix,
    pub unitary_part: ComplexMatrix,
    pub cnu_part: ComplexMatrix,
    /// Frobenius norm of the off-diagonal blocks of `T` in the adapted basis.
    pub coupling: f64,
}

impl CnuSplit {
    pub fn unitary_dim(&self) -> usize {
        self.unitary_basis.ncols()
    }
}

pub fn cnu_split(t: &Contraction) -> CnuSplit {
    cnu_split_matrix(t.matrix())
}

pub(crate) fn cnu_split_matrix(tm: &ComplexMatrix) -> CnuSplit {
    let n = tm.nrows();
    // Ker of Σ_k (I − T^k* T^k) + (I − T^k T^k*) is the intersection of all
    // defect kernels of powers.
    let mut acc = zeros(n);
    let mut p = identity(n);
    for _ in 0..n {
        p = &p * tm;
        acc += identity(n) - p.adjoint() * &p;
        acc += identity(n) - &p * p.adjoint();
    }
    let (ub, cb) = split_kernel(&acc, KERNEL_TOL);
    let unitary_part = ub.adjoint() * tm * &ub;
    let cnu_part = cb.adjoint() * tm * &cb;
    let coupling = (fro_norm(&(cb.adjoint() * tm * &ub)).powi(2) + fro_norm(&(ub.adjoint() * tm * &cb)).powi(2)).sqrt();
    CnuSplit { unitary_basis: ub, cnu_basis: cb, unitary_part, cnu_part, coupling }
}

pub fn spectral_radius(m: &ComplexMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    match schur_form(m) {
        Ok((_, t)) => (0..t.nrows()).map(|i| t[(i, i)].norm()).fold(0.0, f64::max),
        Err(_) => f64::INFINITY,
    }
}

// ---------------------------------------------------------------------------
// Semi-spectral densities and measures
// ---------------------------------------------------------------------------

/// `(I − e^{−iθ}T)^{-1}`.
pub(crate) fn poisson_resolvent(t: &ComplexMatrix, theta: f64) -> Result<ComplexMatrix> {
    let n = t.nrows();
    (identity(n) - t * C64::from_polar(1.0, -theta)).try_inverse().ok_or(Error::SpectralRadius { radius: 1.0 })
}

/// Operator Poisson kernel `K(θ) = R + R* − I`, `R = (I − e^{−iθ}T)^{-1}`.
pub fn poisson_density(t_cnu: &Contraction, theta: f64) -> Result<ComplexMatrix> {
    let radius = spectral_radius(t_cnu.matrix());
    if radius >= 1.0 {
        return Err(Error::SpectralRadius { radius });
    }
    poisson_kernel(t_cnu.matrix(), theta)
}

pub(crate) fn poisson_kernel(t: &ComplexMatrix, theta: f64) -> Result<ComplexMatrix> {
    let r = poisson_resolvent(t, theta)?;
    Ok(&r + r.adjoint() - identity(t.nrows()))
}

/// Point mass of an operator-valued measure.
#[derive(Debug, Clone)]
pub struct Atom<V> {
    pub theta: f64,
    pub weight: V,
}

/// Measure on the circle: atoms plus density samples against normalized
/// Lebesgue measure `dm = dθ/2π` on a uniform grid.
#[derive(Debug, Clone)]
pub struct CircleMeasure {
    pub dim: usize,
    pub atoms: Vec<Atom<ComplexMatrix>>,
    pub grid: Option<ThetaGrid>,
    pub density: Vec<ComplexMatrix>,
}

/// Scalar counterpart of [`CircleMeasure`].
#[derive(Debug, Clone)]
pub struct ScalarMeasure {
    pub atoms: Vec<Atom<C64>>,
    pub density: Option<GridFunction>,
}

impl CircleMeasure {
    /// `∫ e^{inθ} d𝓔`.
    pub fn moment(&self, n: i64) -> ComplexMatrix {
        let mut out = zeros(self.dim);
        for a in &self.atoms {
            out += &a.weight * C64::from_polar(1.0, n as f64 * a.theta);
        }
        if let Some(g) = self.grid {
            let inv = 1.0 / g.len() as f64;
            for (k, s) in self.density.iter().enumerate() {
                out += s * (C64::from_polar(1.0, n as f64 * g.theta(k)) * inv);
            }
        }
        out
    }

    pub fn total_mass(&self) -> ComplexMatrix {
        self.moment(0)
    }

    /// Mass of the half-open arc `[a, b)`, `0 ≤ a < b ≤ 2π`, by the grid rule.
    pub fn arc_mass(&self, a: f64, b: f64) -> ComplexMatrix {
        let inside = |th: f64| {
            let th = th.rem_euclid(2.0 * PI);
            th >= a && th < b
        };
        let mut out = zeros(self.dim);
        for at in self.atoms.iter().filter(|at| inside(at.theta)) {
            out += &at.weight;
        }
        if let Some(g) = self.grid {
            let inv = 1.0 / g.len() as f64;
            for (k, s) in self.density.iter().enumerate() {
                if inside(g.theta(k)) {
                    out += s * c(inv, 0.0);
                }
            }
        }
        out
    }

    /// Scalar measure `Δ ↦ trace(K 𝓔(Δ))`.
    pub fn trace_against(&self, k: &ComplexMatrix) -> ScalarMeasure {
        let atoms = self.atoms.iter().map(|a| Atom { theta: a.theta, weight: (k * &a.weight).trace() }).collect();
        let density =
            self.grid.map(|g| GridFunction { grid: g, values: self.density.iter().map(|s| (k * s).trace()).collect() });
        ScalarMeasure { atoms, density }
    }

    pub fn to_json(&self) -> serde_json::Value {
        let atoms: Vec<_> = self
            .atoms
            .iter()
            .map(|a| serde_json::json!({ "theta": a.theta, "weight": MatrixJson::from(&a.weight) }))
            .collect();
        let mut v = serde_json::json!({ "atoms": atoms });
        if let Some(g) = self.grid {
            let samples: Vec<MatrixJson> = self.density.iter().map(MatrixJson::from).collect();
            v["density"] = serde_json::json!({ "grid": g.len(), "shifted": g.is_shifted(), "samples": samples });
        }
        v
    }
}

#[derive(Serialize, Deserialize)]
struct ScalarAtomJson {
    theta: f64,
    weight: [f64; 2],
}

impl ScalarMeasure {
    pub fn zero() -> Self {
        ScalarMeasure { atoms: vec![], density: None }
    }

    pub fn moment(&self, n: i64) -> C64 {
        let mut out: C64 = self.atoms.iter().map(|a| a.weight * C64::from_polar(1.0, n as f64 * a.theta)).sum();
        if let Some(g) = &self.density {
            out += g.map(|th, _, v| v * C64::from_polar(1.0, n as f64 * th)).mean();
        }
        out
    }

    /// `∫ φ dμ` for a function given on the circle.
    pub fn integrate(&self, phi: impl Fn(C64) -> C64) -> C64 {
        let mut out: C64 = self.atoms.iter().map(|a| a.weight * phi(C64::from_polar(1.0, a.theta))).sum();
        if let Some(g) = &self.density {
            out += g.map(|_, z, v| v * phi(z)).mean();
        }
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        let atoms: Vec<_> =
            self.atoms.iter().map(|a| ScalarAtomJson { theta: a.theta, weight: [a.weight.re, a.weight.im] }).collect();
        let mut v = serde_json::json!({ "atoms": atoms });
        if let Some(g) = &self.density {
            let samples: Vec<[f64; 2]> = g.values.iter().map(|z| [z.re, z.im]).collect();
            v["density"] =
                serde_json::json!({ "grid": g.grid.len(), "shifted": g.grid.is_shifted(), "samples": samples });
        }
        v
    }
}

/// Group unitary eigenvalues into atoms with projection weights expressed in
/// the coordinates of `basis` (columns of the ambient space).
pub(crate) fn unitary_atoms(u: &ComplexMatrix, basis: &ComplexMatrix) -> Result<Vec<Atom<ComplexMatrix>>> {
    if u.nrows() == 0 {
        return Ok(vec![]);
    }
    let eig = unitary_eig(u)?;
    let n = basis.nrows();
    let mut atoms: Vec<Atom<ComplexMatrix>> = Vec::new();
    let mut last: Option<C64> = None;
    for (j, &lam) in eig.eigenvalues.iter().enumerate() {
        let v = basis * eig.vectors.column(j);
        let p = &v * v.adjoint();
        match (last, atoms.last_mut()) {
            (Some(prev), Some(a)) if (lam - prev).norm() < ATOM_MERGE_TOL => a.weight += p,
            _ => {
                let theta = principal_arg(lam).rem_euclid(2.0 * PI);
                atoms.push(Atom { theta, weight: p });
            }
        }
        last = Some(lam);
    }
    // merge a wrap-around pair straddling θ = 0
    if atoms.len() > 1 {
        let first = C64::from_polar(1.0, atoms[0].theta);
        let lastz = C64::from_polar(1.0, atoms[atoms.len() - 1].theta);
        if (first - lastz).norm() < ATOM_MERGE_TOL {
            let tail = atoms.pop().unwrap();
            atoms[0].weight += tail.weight;
        }
    }
    let _ = n;
    Ok(atoms)
}

/// Semi-spectral measure `𝓔_T`: atoms at the eigenphases of the unitary part
/// plus the operator Poisson density of the c.n.u. part.
pub fn semi_spectral_measure(t: &Contraction, grid: ThetaGrid) -> Result<CircleMeasure> {
    semi_spectral_matrix(t.matrix(), grid)
}

pub(crate) fn semi_spectral_matrix(tm: &ComplexMatrix, grid: ThetaGrid) -> Result<CircleMeasure> {
    let n = tm.nrows();
    let split = cnu_split_matrix(tm);
    let atoms = unitary_atoms(&split.unitary_part, &split.unitary_basis)?;
    let cb = &split.cnu_basis;
    let tc = &split.cnu_part;
    let density = if cb.ncols() == 0 {
        (0..grid.len()).map(|_| zeros(n)).collect()
    } else {
        (0..grid.len())
            .into_par_iter()
            .map(|k| poisson_kernel(tc, grid.theta(k)).map(|kk| cb * kk * cb.adjoint()))
            .collect::<Result<Vec<_>>>()?
    };
    Ok(CircleMeasure { dim: n, atoms, grid: Some(grid), density })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::{eval_on_contraction, LaurentPoly};
    use crate::linalg::{diag, diag_real, from_real_rows, op_norm, random_ensemble, scalar, OperatorKind, I};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn contraction(m: ComplexMatrix) -> Contraction {
        Contraction::new(m).unwrap()
    }

    #[test]
    fn schaffer_window_of_zero_is_shift() {
        let w = schaffer_block(&contraction(scalar(c(0.0, 0.0))), 2).unwrap();
        let mut shift = zeros(5);
        for i in 0..4 {
            shift[(i, i + 1)] = c(1.0, 0.0);
        }
        assert!(fro_norm(&(w.matrix - shift)) < 1e-15);
    }

    #[test]
    fn schaffer_window_layout() {
        let t = contraction(random_ensemble(OperatorKind::Contraction, 2, 3));
        let w = schaffer_block(&t, 3).unwrap();
        assert!(fro_norm(&(w.block(0, 0) - t.matrix())) < 1e-15);
        assert!(fro_norm(&(w.block(0, 1) - defect_of(&t.matrix().adjoint()))) < 1e-15);
        assert!(fro_norm(&(w.block(-1, 0) - defect_of(t.matrix()))) < 1e-15);
        assert!(fro_norm(&(w.block(-1, 1) + t.matrix().adjoint())) < 1e-15);
        for j in [-3, -2, 1, 2] {
            assert!(fro_norm(&(w.block(j, j + 1) - identity(2))) < 1e-15);
        }
        assert!(fro_norm(&w.block(2, 0)) == 0.0 && fro_norm(&w.block(0, -1)) == 0.0);
    }

    #[test]
    fn schaffer_window_unitary_center_decouples() {
        let u = contraction(random_ensemble(OperatorKind::Unitary, 2, 1));
        let w = schaffer_block(&u, 1).unwrap();
        assert!(fro_norm(&w.block(0, 1)) < 1e-7);
        assert!(fro_norm(&w.block(-1, 0)) < 1e-7);
    }

    #[test]
    fn kernel_isometry_examples() {
        let t = contraction(from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]));
        let r = kernel_isometry_check(&t);
        assert_eq!((r.kernel_dim, r.cokernel_dim), (1, 1));
        assert!(r.passed);

        let s = kernel_isometry_check(&contraction(random_ensemble(OperatorKind::Contraction, 3, 2)));
        assert_eq!((s.kernel_dim, s.cokernel_dim), (0, 0));
        assert!(s.passed);

        let u = kernel_isometry_check(&contraction(random_ensemble(OperatorKind::Unitary, 3, 2)));
        assert_eq!((u.kernel_dim, u.cokernel_dim), (3, 3));
        assert!(u.passed);
    }

    #[test]
    fn power_dilation_of_zero_is_cyclic() {
        let p = power_dilation(&contraction(scalar(c(0.0, 0.0))), 2).unwrap();
        let expect = from_real_rows(&[&[0.0, 0.0, 1.0], &[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]]);
        assert!(fro_norm(&(&p.w - expect)) < 1e-15);
        assert_eq!(p.compress_power(1)[(0, 0)], c(0.0, 0.0));
        assert_eq!(p.compress_power(2)[(0, 0)], c(0.0, 0.0));
    }

    #[test]
    fn power_dilation_scalar_half() {
        let p = power_dilation(&contraction(scalar(c(0.5, 0.0))), 4).unwrap();
        for n in 0..=4 {
            assert_abs_diff_eq!(
                (p.compress_power(n)[(0, 0)] - c(0.5f64.powi(n as i32), 0.0)).norm(),
                0.0,
                epsilon = 1e-15
            );
        }
        // the identity stops one step past the order
        assert!((p.compress_power(5)[(0, 0)] - c(0.5f64.powi(5), 0.0)).norm() > 1e-3);
    }

    #[test]
    fn power_dilation_of_unitary_is_exact_for_all_powers() {
        let u = contraction(random_ensemble(OperatorKind::Unitary, 2, 8));
        let p = power_dilation(&u, 3).unwrap();
        for n in 0..12 {
            assert!(fro_norm(&(p.compress_power(n) - mat_pow(u.matrix(), n))) < 1e-7);
        }
    }

    #[test]
    fn cnu_split_examples() {
        let u = contraction(random_ensemble(OperatorKind::Unitary, 3, 4));
        let s = cnu_split(&u);
        assert_eq!(s.unitary_dim(), 3);
        assert_eq!(s.cnu_part.nrows(), 0);

        let t = contraction(random_ensemble(OperatorKind::Contraction, 3, 4));
        assert_eq!(cnu_split(&t).unitary_dim(), 0);

        let d = cnu_split(&contraction(diag_real(&[1.0, 0.5])));
        assert_eq!(d.unitary_dim(), 1);
        assert_abs_diff_eq!(d.unitary_part[(0, 0)].norm(), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(d.unitary_basis[(0, 0)].norm(), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!((d.cnu_part[(0, 0)] - c(0.5, 0.0)).norm(), 0.0, epsilon = 1e-14);
        assert!(d.coupling < 1e-14);
    }

    #[test]
    fn cnu_split_detects_hidden_unitary_block() {
        // unitary rotation on span{e1,e2} mixed into a c.n.u. block by a change of basis
        let v = random_ensemble(OperatorKind::Unitary, 4, 17);
        let mut core = zeros(4);
        core[(0, 1)] = c(1.0, 0.0);
        core[(1, 0)] = I;
        core[(2, 2)] = c(0.3, 0.0);
        core[(2, 3)] = c(0.5, 0.0);
        core[(3, 3)] = c(-0.2, 0.1);
        let t = contraction(&v * core * v.adjoint());
        let s = cnu_split(&t);
        assert_eq!(s.unitary_dim(), 2);
        assert!(s.coupling < 1e-10);
        let uu = &s.unitary_part;
        assert!(fro_norm(&(uu.adjoint() * uu - identity(2))) < 1e-10);
        assert!(spectral_radius(&s.cnu_part) < 1.0 - 1e-12);
    }

    #[test]
    fn poisson_density_examples() {
        let z = contraction(zeros(2));
        assert!(fro_norm(&(poisson_density(&z, 0.7).unwrap() - identity(2))) < 1e-15);
        let h = contraction(scalar(c(0.5, 0.0)));
        assert_abs_diff_eq!(poisson_density(&h, 0.0).unwrap()[(0, 0)].re, 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(poisson_density(&h, PI).unwrap()[(0, 0)].re, 1.0 / 3.0, epsilon = 1e-14);
        let th = 1.3;
        assert_abs_diff_eq!(poisson_density(&h, th).unwrap()[(0, 0)].re, 0.75 / (1.25 - th.cos()), epsilon = 1e-14);
        assert!(matches!(poisson_density(&contraction(scalar(c(1.0, 0.0))), 0.3), Err(Error::SpectralRadius { .. })));
    }

    #[test]
    fn poisson_moment_scalar() {
        let g = ThetaGrid::new(2048, false).unwrap();
        let m = semi_spectral_measure(&contraction(scalar(c(0.5, 0.0))), g).unwrap();
        assert_abs_diff_eq!((m.moment(1)[(0, 0)] - c(0.5, 0.0)).norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn measure_examples() {
        let g = ThetaGrid::new(256, false).unwrap();
        let m = semi_spectral_measure(&contraction(diag(&[c(1.0, 0.0), I])), g).unwrap();
        assert_eq!(m.atoms.len(), 2);
        assert!(m.density.iter().all(|s| fro_norm(s) < 1e-14));
        let thetas: Vec<f64> = m.atoms.iter().map(|a| a.theta).collect();
        assert!(thetas.iter().any(|t| t.abs() < 1e-12) && thetas.iter().any(|t| (t - PI / 2.0).abs() < 1e-12));

        let m = semi_spectral_measure(&contraction(zeros(2)), g).unwrap();
        assert!(m.atoms.is_empty());
        assert!(m.density.iter().all(|s| fro_norm(&(s - identity(2))) < 1e-14));

        let m = semi_spectral_measure(&contraction(diag_real(&[1.0, 0.5])), g).unwrap();
        assert_eq!(m.atoms.len(), 1);
        assert!(fro_norm(&(&m.atoms[0].weight - diag_real(&[1.0, 0.0]))) < 1e-12);
        let k0 = &m.density[0];
        assert_abs_diff_eq!(k0[(1, 1)].re, 3.0, epsilon = 1e-12);
        assert!(k0[(0, 0)].norm() < 1e-12);
        assert!(fro_norm(&(m.total_mass() - identity(2))) < 1e-8);
    }

    #[test]
    fn atoms_match_unimodular_point_spectrum() {
        let v = random_ensemble(OperatorKind::Unitary, 3, 5);
        let core = diag(&[C64::from_polar(1.0, 0.4), C64::from_polar(1.0, -2.0), c(0.3, 0.2)]);
        let t = contraction(&v * core * v.adjoint());
        let m = semi_spectral_measure(&t, ThetaGrid::new(512, false).unwrap()).unwrap();
        let mut thetas: Vec<f64> = m.atoms.iter().map(|a| a.theta).collect();
        thetas.sort_by(f64::total_cmp);
        assert_eq!(thetas.len(), 2);
        assert_abs_diff_eq!(thetas[0], 0.4, epsilon = 1e-10);
        assert_abs_diff_eq!(thetas[1], 2.0 * PI - 2.0, epsilon = 1e-10);
        for a in &m.atoms {
            let x = v.column(0) * v.column(0).adjoint() + v.column(1) * v.column(1).adjoint();
            assert!(fro_norm(&(&x * &a.weight - &a.weight)) < 1e-10);
        }
    }

    #[test]
    fn arc_mass_converges_along_scaled_sequence() {
        let g = ThetaGrid::new(4096, true).unwrap();
        let t = random_ensemble(OperatorKind::Contraction, 3, 12);
        let target = semi_spectral_matrix(&t, g).unwrap().arc_mass(0.5, 2.0);
        let mut prev = f64::INFINITY;
        for k in [4.0, 16.0, 64.0, 256.0] {
            let tk = t.scale(1.0 - 1.0 / k);
            let err = fro_norm(&(semi_spectral_matrix(&tk, g).unwrap().arc_mass(0.5, 2.0) - &target));
            assert!(err < prev);
            prev = err;
        }
        assert!(prev < 5e-3);
    }

    #[test]
    fn density_json_shape() {
        let g = ThetaGrid::new(4, false).unwrap();
        let m = semi_spectral_measure(&contraction(diag_real(&[1.0, 0.0])), g).unwrap();
        let v = m.to_json();
        assert_eq!(v["atoms"].as_array().unwrap().len(), 1);
        assert_eq!(v["density"]["grid"], 4);
        assert_eq!(v["density"]["samples"].as_array().unwrap().len(), 4);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn power_dilation_compresses(seed in 0u64..10_000, n in 1usize..=6, order in 1usize..=16) {
            let t = contraction(random_ensemble(OperatorKind::Contraction, n, seed));
            let p = power_dilation(&t, order).unwrap();
            let size = p.w.nrows();
            prop_assert!(fro_norm(&(p.w.adjoint() * &p.w - identity(size))) <= 1e-12 * size as f64);
            let mut w_pow = identity(size);
            let mut t_pow = identity(n);
            for _ in 0..=order {
                prop_assert!(op_norm(&(w_pow.view((0, 0), (n, n)).into_owned() - &t_pow)) <= 1e-12);
                w_pow = &w_pow * &p.w;
                t_pow = &t_pow * t.matrix();
            }
        }

        #[test]
        fn semi_spectral_moments(seed in 0u64..10_000, n in 1usize..=4) {
            let t = contraction(random_ensemble(OperatorKind::Contraction, n, seed));
            let m = semi_spectral_measure(&t, ThetaGrid::new(2048, false).unwrap()).unwrap();
            for k in -8i64..=8 {
                let expect = eval_on_contraction(&LaurentPoly::monomial(k), &t);
                prop_assert!(fro_norm(&(m.moment(k) - expect)) <= 1e-8);
            }
        }
    }
}
