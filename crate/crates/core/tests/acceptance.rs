//! Acceptance suite: one line per criterion, nonzero exit if any fails.
//!
//! Trace oracles are computed from eigenvalues (`trace f(X) = Σ f(λ)`),
//! independently of the matrix polynomial evaluation used by the library.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use traceform::calculus::{gauss_legendre_unit, LaurentPoly, LineFn, ThetaGrid};
use traceform::dilation::{power_dilation, semi_spectral_measure, ScalarMeasure};
use traceform::doi::{doi_trace_on, lipschitz_difference, parametric_derivative};
use traceform::intermediate::{intermediate_contraction, ssf_unitary_to_contraction};
use traceform::linalg::{
    c, fro_norm, hermitian_eigenvalues, identity, mat_pow, op_norm, random_ensemble, scalar, schur_form, ComplexMatrix,
    Contraction, Dissipative, Hermitian, OperatorKind, Unitary, C64,
};
use traceform::shift::{
    a_integral_trace, brothers_riesz_check, langer_contour_trace, ssf_contraction_pair, ssf_dissipative_resolvent_pair,
    ssf_selfadjoint_pair, ssf_unitary_pair, ssf_via_determinant, Contour, QuadratureSpec, SsfSample, TestFn,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn eigenvalues(m: &ComplexMatrix) -> Vec<C64> {
    let (_, t) = schur_form(m).unwrap();
    (0..t.nrows()).map(|i| t[(i, i)]).collect()
}

/// `trace(f(X1) − f(X0))` from eigenvalues.
fn trace_diff(f: &LaurentPoly, x0: &ComplexMatrix, x1: &ComplexMatrix) -> C64 {
    let s = |m: &ComplexMatrix| eigenvalues(m).iter().map(|&z| f.eval(z)).sum::<C64>();
    s(x1) - s(x0)
}

/// `trace(f(A1) − f(A0))` for a line function of Hermitian matrices.
fn trace_diff_line(f: &LineFn, a0: &ComplexMatrix, a1: &ComplexMatrix) -> C64 {
    let s = |m: &ComplexMatrix| hermitian_eigenvalues(m).iter().map(|&x| f.eval(c(x, 0.0))).sum::<C64>();
    s(a1) - s(a0)
}

fn random_poly(rng: &mut ChaCha8Rng, degree: usize) -> LaurentPoly {
    LaurentPoly::analytic((0..=degree).map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect())
}

fn rel(err: C64, reference: C64) -> f64 {
    err.norm() / reference.norm().max(1.0)
}

fn contraction(kind_seed: u64, n: usize) -> Contraction {
    Contraction::new(random_ensemble(OperatorKind::Contraction, n, kind_seed)).unwrap()
}

/// Invertible contraction with singular values in [0.05, 0.9].
fn invertible(n: usize, seed: u64) -> Contraction {
    let m = random_ensemble(OperatorKind::Contraction, n, seed);
    Contraction::new((m + identity(n) * c(0.9, 0.0)) * c(0.5, 0.0)).unwrap()
}

fn circle(n: i64) -> TestFn {
    TestFn::Circle(LaurentPoly::monomial(n))
}

fn criterion_1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    let mut slowest: f64 = 0.0;
    for n in 1..=8 {
        for rep in 0..3u64 {
            let seed = 100 * n as u64 + 2 * rep;
            let start = Instant::now();
            let a0 = Hermitian::new(random_ensemble(OperatorKind::Hermitian, n, seed)).unwrap();
            let a1 = Hermitian::new(random_ensemble(OperatorKind::Hermitian, n, seed + 1)).unwrap();
            let xi = ssf_selfadjoint_pair(&a0, &a1).unwrap();
            for degree in 1..=6 {
                let f = random_poly(&mut rng, degree);
                let s = |m: &ComplexMatrix| hermitian_eigenvalues(m).iter().map(|&x| f.eval(c(x, 0.0))).sum::<C64>();
                let tr = s(a1.matrix()) - s(a0.matrix());
                let int = xi.integrate(&TestFn::Polynomial(f.clone())).unwrap();
                worst = worst.max((tr - int).norm() / (1.0 + tr.norm()));
            }
            slowest = slowest.max(start.elapsed().as_secs_f64());
        }
    }
    outcome(
        worst <= 1e-10 && slowest < 1.0,
        format!("max |res|/(1+|trace|) = {worst:.2e} (≤ 1e-10), slowest pair {slowest:.3}s (< 1s)"),
    )
}

fn criterion_2() -> Outcome {
    let spec = QuadratureSpec::default().with_steps(2000);
    let mut worst: f64 = 0.0;
    let mut worst_im: f64 = 0.0;
    for n in 1..=6 {
        let seed = 200 + 2 * n as u64;
        let u0 = Unitary::new(random_ensemble(OperatorKind::Unitary, n, seed)).unwrap();
        let u1 = Unitary::new(random_ensemble(OperatorKind::Unitary, n, seed + 1)).unwrap();
        let xi = ssf_unitary_pair(&u0, &u1, &spec).unwrap();
        worst_im = worst_im.max(xi.max_abs_im());
        for k in [1, 2, 3, -1] {
            let f = LaurentPoly::monomial(k);
            let tr = trace_diff(&f, u0.matrix(), u1.matrix());
            worst = worst.max(rel(tr - xi.integrate(&TestFn::Circle(f)).unwrap(), tr));
        }
    }
    outcome(
        worst <= 1e-8 && worst_im <= 1e-8,
        format!("max relative residual {worst:.2e} (≤ 1e-8), max |Im ξ| {worst_im:.1e} (≤ 1e-8)"),
    )
}

fn criterion_3() -> Outcome {
    let t0 = Contraction::new(scalar(c(0.0, 0.0))).unwrap();
    let t1 = Contraction::new(scalar(c(0.5, 0.0))).unwrap();
    let xi = ssf_contraction_pair(&t0, &t1, &QuadratureSpec::new(64, 2048)).unwrap();
    let scalar_err = (xi.integrate(&circle(2)).unwrap() - c(0.25, 0.0)).norm();

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    for n in 1..=6 {
        let seed = 300 + 2 * n as u64;
        let (a, b) = (contraction(seed, n), contraction(seed + 1, n));
        let xi = ssf_contraction_pair(&a, &b, &QuadratureSpec::default()).unwrap();
        for degree in 1..=4 {
            let f = random_poly(&mut rng, degree);
            let tr = trace_diff(&f, a.matrix(), b.matrix());
            worst = worst.max(rel(tr - xi.integrate(&TestFn::Circle(f)).unwrap(), tr));
        }
    }
    outcome(
        scalar_err <= 1e-8 && worst <= 1e-6,
        format!("scalar |∫f′ξ − 0.25| = {scalar_err:.2e} (≤ 1e-8), random max relative {worst:.2e} (≤ 1e-6)"),
    )
}

/// `f(T)` by explicit powers.
fn poly_of(f: &LaurentPoly, t: &ComplexMatrix) -> ComplexMatrix {
    let n = t.nrows();
    let mut out = ComplexMatrix::zeros(n, n);
    let mut p = identity(n);
    for k in 0..=f.nmax().max(0) {
        out += &p * f.coeff(k);
        p = &p * t;
    }
    out
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    for n in 1..=6 {
        for degree in [1, 4, 8] {
            let seed = 400 + 10 * n as u64 + degree as u64;
            let (a, b) = (contraction(seed, n), contraction(seed + 1, n));
            let f = random_poly(&mut rng, degree);
            let direct = poly_of(&f, b.matrix()) - poly_of(&f, a.matrix());
            let via = lipschitz_difference(&f, &b, &a).unwrap();
            let err = fro_norm(&(via - &direct));
            let bound = 1e-10 * fro_norm(&direct) + 1e-12;
            worst = worst.max(err / bound);
        }
    }
    outcome(worst <= 1.0, format!("max error / (1e-10‖Δf‖ + 1e-12) = {worst:.2e} (≤ 1)"))
}

fn criterion_5() -> Outcome {
    let mut worst = f64::INFINITY;
    for (n, seed) in [(2usize, 51u64), (3, 53), (4, 55)] {
        let t0 = Contraction::new(random_ensemble(OperatorKind::Contraction, n, seed) * c(0.8, 0.0)).unwrap();
        let k = random_ensemble(OperatorKind::Contraction, n, seed + 1) * c(0.1, 0.0);
        let f = LaurentPoly::analytic_real(&[0.3, -1.0, 0.5, 2.0, 0.25]);
        let d = parametric_derivative(&f, &t0, &k, 0.3).unwrap();
        let base = &(t0.matrix() + &k * c(0.3, 0.0));
        let fd =
            |h: f64| fro_norm(&((poly_of(&f, &(base + &k * c(h, 0.0))) - poly_of(&f, base)) / c(h, 0.0) - &d.value));
        worst = worst.min(fd(1e-4) / fd(1e-5));
    }
    outcome(worst >= 5.0, format!("min FD error ratio e(1e-4)/e(1e-5) = {worst:.2} (≥ 5)"))
}

fn criterion_6() -> Outcome {
    let mut worst_pow: f64 = 0.0;
    let mut worst_unit: f64 = 0.0;
    for n in 1..=6 {
        let t = contraction(600 + n as u64, n);
        let w = power_dilation(&t, 16).unwrap();
        let dim = w.w.nrows();
        worst_unit = worst_unit.max(op_norm(&(w.w.adjoint() * &w.w - identity(dim))));
        let mut p = identity(n);
        for k in 0..=16 {
            worst_pow = worst_pow.max(op_norm(&(w.compress_power(k) - &p)));
            p = &p * t.matrix();
        }
    }
    outcome(
        worst_pow <= 1e-12 && worst_unit <= 1e-12,
        format!("max ‖P₀Wⁿ|₀ − Tⁿ‖ = {worst_pow:.1e}, ‖W*W − I‖ = {worst_unit:.1e} (both ≤ 1e-12)"),
    )
}

fn criterion_7() -> Outcome {
    let grid = ThetaGrid::new(2048, false).unwrap();
    let mut worst: f64 = 0.0;
    let mut cases: Vec<ComplexMatrix> =
        (1..=4).map(|n| random_ensemble(OperatorKind::Contraction, n, 700 + n as u64)).collect();
    // A contraction with a unitary direct summand, exercising the atoms.
    let mut mixed = ComplexMatrix::zeros(3, 3);
    mixed[(0, 0)] = C64::from_polar(1.0, 0.7);
    mixed.view_mut((1, 1), (2, 2)).copy_from(&random_ensemble(OperatorKind::Contraction, 2, 777));
    cases.push(mixed);
    for m in cases {
        let t = Contraction::new(m).unwrap();
        let meas = semi_spectral_measure(&t, grid).unwrap();
        for k in -8i64..=8 {
            let expect =
                if k >= 0 { mat_pow(t.matrix(), k as usize) } else { mat_pow(&t.matrix().adjoint(), (-k) as usize) };
            worst = worst.max(op_norm(&(meas.moment(k) - expect)));
        }
    }
    outcome(worst <= 1e-8, format!("max moment error {worst:.2e} (≤ 1e-8) for |n| ≤ 8 at grid 2048"))
}

fn criterion_8() -> Outcome {
    let ladder: Vec<f64> = (0..=6).map(|k| 10f64.powi(-k)).collect();
    let herm = |x: f64| Hermitian::new(scalar(c(x, 0.0))).unwrap();
    let r = ssf_via_determinant(&herm(0.0), &herm(1.0), 0.5, &ladder).unwrap();
    let scalar_err = (r.value - 1.0).abs();
    let mut worst: f64 = 0.0;
    let mut probes = 0;
    for n in 1..=4 {
        let seed = 800 + 2 * n as u64;
        let a0 = Hermitian::new(random_ensemble(OperatorKind::Hermitian, n, seed)).unwrap();
        let a1 = Hermitian::new(random_ensemble(OperatorKind::Hermitian, n, seed + 1)).unwrap();
        let l0 = hermitian_eigenvalues(a0.matrix());
        let l1 = hermitian_eigenvalues(a1.matrix());
        let mut pts: Vec<f64> = l0.iter().chain(&l1).copied().collect();
        pts.sort_by(f64::total_cmp);
        let mut probe_at: Vec<f64> = pts.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        probe_at.push(pts[0] - 0.5);
        probe_at.push(pts[pts.len() - 1] + 0.5);
        for t in probe_at {
            if pts.iter().any(|p| (p - t).abs() < 1e-3) {
                continue;
            }
            let count = |v: &[f64]| v.iter().filter(|&&x| x <= t).count() as f64;
            let r = ssf_via_determinant(&a0, &a1, t, &ladder).unwrap();
            worst = worst.max((r.value - (count(&l0) - count(&l1))).abs());
            probes += 1;
        }
    }
    outcome(
        scalar_err <= 1e-4 && worst <= 0.01,
        format!("scalar ξ(0.5) error {scalar_err:.1e} (≤ 1e-4), random max deviation {worst:.1e} over {probes} points (≤ 0.01)"),
    )
}

fn criterion_9() -> Outcome {
    let contour = Contour { center: c(0.0, 0.0), radius: 2.0, nodes: 4096 };
    let v =
        langer_contour_trace(&LaurentPoly::monomial(2), &scalar(c(0.0, 0.0)), &scalar(c(0.5, 0.0)), contour).unwrap();
    let err = (v - c(0.25, 0.0)).norm();
    outcome(err <= 1e-6, format!("contour value {:.12} (0.25 ± 1e-6)", v.re))
}

fn criterion_10() -> Outcome {
    let spec = QuadratureSpec::default();
    let mut fact: f64 = 0.0;
    let mut min_im0 = f64::INFINITY;
    let mut max_im1 = f64::NEG_INFINITY;
    let mut worst: f64 = 0.0;
    for n in 1..=4 {
        let seed = 1000 + 2 * n as u64;
        let (t0, t1) = (invertible(n, seed), invertible(n, seed + 1));
        let r = intermediate_contraction(&t0, &t1, &spec).unwrap();
        fact = fact.max(r.certificates.factorization);
        min_im0 = min_im0.min(r.certificates.min_im_xi0);
        max_im1 = max_im1.max(r.certificates.max_im_xi1);
        for k in [1, 2] {
            let f = LaurentPoly::monomial(k);
            let tr = trace_diff(&f, t0.matrix(), t1.matrix());
            worst = worst.max(rel(tr - r.xi.integrate(&TestFn::Circle(f)).unwrap(), tr));
        }
    }
    outcome(
        fact <= 1e-9 && min_im0 >= -1e-8 && max_im1 <= 1e-8 && worst <= 1e-5,
        format!("‖T − e^(−UC₊U*)T1‖ ≤ {fact:.1e}, min Im ξ0 {min_im0:.2e}, max Im ξ1 {max_im1:.2e}, residual {worst:.2e} (≤ 1e-5)"),
    )
}

fn criterion_11() -> Outcome {
    // Near-unitary paths: fewer t-nodes keep away from t = 0, a finer grid
    // resolves the Poisson peaks.
    let spec = QuadratureSpec::new(8, 16384);
    let mut min_im = f64::INFINITY;
    let mut worst: f64 = 0.0;
    for n in 1..=4 {
        let seed = 1100 + 2 * n as u64;
        let u = Unitary::new(random_ensemble(OperatorKind::Unitary, n, seed)).unwrap();
        let t = Contraction::new(random_ensemble(OperatorKind::Contraction, n, seed + 1) * c(0.9, 0.0)).unwrap();
        let r = ssf_unitary_to_contraction(&u, &t, &spec).unwrap();
        min_im = min_im.min(r.min_im);
        for k in [1, 2] {
            let f = LaurentPoly::monomial(k);
            let tr = trace_diff(&f, u.matrix(), t.matrix());
            worst = worst.max(rel(tr - r.xi.integrate(&TestFn::Circle(f)).unwrap(), tr));
        }
    }
    outcome(min_im >= -1e-8 && worst <= 1e-5, format!("min Im ξ {min_im:.2e} (≥ −1e-8), residual {worst:.2e} (≤ 1e-5)"))
}

fn criterion_12() -> Outcome {
    let t0 = Contraction::new(scalar(c(0.0, 0.0))).unwrap();
    let t1 = Contraction::new(scalar(c(0.5, 0.0))).unwrap();
    let r = a_integral_trace(&t0, &t1, &LaurentPoly::monomial(2), &QuadratureSpec::new(32, 8192)).unwrap();
    let e1 = (r.via_eta_minus - c(0.25, 0.0)).norm();
    let e2 = (r.via_xi_r - c(0.25, 0.0)).norm();
    let a = r.analytic_part.norm();
    outcome(
        e1 <= 1e-4 && e2 <= 1e-4 && a <= 1e-3,
        format!("η₋ path error {e1:.1e}, ξ_r path error {e2:.1e} (≤ 1e-4), |(A)∫f′ℙ₊ξ dζ| = {a:.1e} (≤ 1e-3)"),
    )
}

/// `ν = ∫₀¹ trace(K 𝓔_{T0 + tK}) dt` assembled from DOI trace measures.
fn path_measure_from_doi(t0: &ComplexMatrix, k: &ComplexMatrix, grid: ThetaGrid) -> ScalarMeasure {
    let mut dens = vec![c(0.0, 0.0); grid.len()];
    for (t, w) in gauss_legendre_unit(32).unwrap() {
        let tt = Contraction::new(t0 + k * c(t, 0.0)).unwrap();
        let m = doi_trace_on(&LaurentPoly::monomial(1), &tt, k, grid).unwrap().measure;
        for (d, v) in dens.iter_mut().zip(&m.density.unwrap().values) {
            *d += v * w;
        }
    }
    ScalarMeasure { atoms: vec![], density: Some(traceform::calculus::GridFunction::new(grid, dens).unwrap()) }
}

fn criterion_13() -> Outcome {
    let grid = ThetaGrid::new(4096, false).unwrap();
    let pairs = [
        (scalar(c(0.0, 0.0)), scalar(c(0.5, 0.0))),
        (random_ensemble(OperatorKind::Contraction, 2, 1301), random_ensemble(OperatorKind::Contraction, 2, 1302)),
    ];
    let mut worst: f64 = 0.0;
    for (a, b) in pairs {
        let k = &b - &a;
        let nu = path_measure_from_doi(&a, &k, grid);
        let xi = ssf_contraction_pair(
            &Contraction::new(a).unwrap(),
            &Contraction::new(b).unwrap(),
            &QuadratureSpec::new(32, 2048),
        )
        .unwrap();
        worst = worst.max(brothers_riesz_check(&nu, &xi, 8).unwrap().max_abs);
    }
    outcome(worst <= 1e-6, format!("max |λ̂(j)|, −8 ≤ j ≤ −1: {worst:.2e} (≤ 1e-6)"))
}

fn criterion_14() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let mut worst: f64 = 0.0;
    for n in 1..=4 {
        let seed = 1400 + 2 * n as u64;
        let (a, b) = (contraction(seed, n), contraction(seed + 1, n));
        let xi = ssf_contraction_pair(&a, &b, &QuadratureSpec::default()).unwrap();
        let deg = rng.random_range(0..=5);
        let h = random_poly(&mut rng, deg);
        let shifted: SsfSample = xi.add_analytic(&h).unwrap();
        for degree in 1..=4 {
            let f = TestFn::Circle(random_poly(&mut rng, degree));
            let d = (xi.integrate(&f).unwrap() - shifted.integrate(&f).unwrap()).norm();
            worst = worst.max(d);
        }
    }
    outcome(worst <= 1e-10, format!("max change of ∫f′ξ dζ under ξ ↦ ξ + h: {worst:.1e} (≤ 1e-10)"))
}

fn criterion_15() -> Outcome {
    // The Cayley transforms are unitary, so the resolvent path starts and
    // ends on the circle: near-unitary quadrature as in criterion 11.
    let spec = QuadratureSpec::new(8, 16384);
    let mut worst: f64 = 0.0;
    for n in 1..=3 {
        let seed = 1500 + 2 * n as u64;
        let a0 = random_ensemble(OperatorKind::Hermitian, n, seed);
        let a1 = random_ensemble(OperatorKind::Hermitian, n, seed + 1);
        let counting =
            ssf_selfadjoint_pair(&Hermitian::new(a0.clone()).unwrap(), &Hermitian::new(a1.clone()).unwrap()).unwrap();
        let resolvent = ssf_dissipative_resolvent_pair(
            &Dissipative::new(a0.clone()).unwrap(),
            &Dissipative::new(a1.clone()).unwrap(),
            &spec,
        )
        .unwrap();
        for k in 1..=3 {
            let f = LineFn::new(LaurentPoly::monomial(k)).unwrap();
            let tr = trace_diff_line(&f, &a0, &a1);
            let r_count = (tr - counting.integrate(&TestFn::Line(f.clone())).unwrap()).norm();
            let r_res = (tr - resolvent.integrate(&TestFn::Line(f)).unwrap()).norm();
            worst = worst.max((r_count - r_res).abs()).max(r_res);
        }
    }
    outcome(worst <= 1e-6, format!("max residual gap between counting and resolvent paths {worst:.2e} (≤ 1e-6)"))
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 15] = [
        ("self-adjoint trace formula", criterion_1),
        ("unitary trace formula", criterion_2),
        ("contraction SSF", criterion_3),
        ("DOI difference identity", criterion_4),
        ("parametric derivative", criterion_5),
        ("power dilation", criterion_6),
        ("semi-spectral moments", criterion_7),
        ("perturbation-determinant inversion", criterion_8),
        ("Langer contour", criterion_9),
        ("intermediate construction", criterion_10),
        ("unitary-to-contraction sign", criterion_11),
        ("A-integral trace formula", criterion_12),
        ("Brothers-Riesz consistency", criterion_13),
        ("gauge invariance", criterion_14),
        ("Cayley transfer", criterion_15),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = run();
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!("criterion {:>2} [{tag}] {name}: {} ({:.1}s)", i + 1, o.detail, start.elapsed().as_secs_f64());
        if !o.pass {
            failed += 1;
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
