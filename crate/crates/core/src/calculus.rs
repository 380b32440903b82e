//! Laurent polynomials on the circle, functions on the line via the Cayley
//! map, grid functions and Riesz projections.

use std::f64::consts::PI;
use std::io::{Read, Write};
use std::num::NonZeroUsize;
use std::ops::{Add, Mul, Neg, Sub};

use gauss_quad::legendre::GaussLegendre;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, cayley, identity, zeros, ComplexMatrix, Contraction, Dissipative, C64, I};

pub const DEFAULT_GRID: usize = 2048;

/// Finitely supported Laurent series `Σ a_n ζⁿ`, `n ≥ nmin`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LaurentJson", into = "LaurentJson")]
pub struct LaurentPoly {
    nmin: i64,
    coeffs: Vec<C64>,
}

#[derive(Serialize, Deserialize)]
struct LaurentJson {
    nmin: i64,
    coeffs: Vec<[f64; 2]>,
}

impl TryFrom<LaurentJson> for LaurentPoly {
    type Error = Error;

    fn try_from(j: LaurentJson) -> Result<Self> {
        if j.coeffs.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(LaurentPoly::new(j.nmin, j.coeffs.iter().map(|[re, im]| c(*re, *im)).collect()))
    }
}

impl From<LaurentPoly> for LaurentJson {
    fn from(p: LaurentPoly) -> Self {
        LaurentJson { nmin: p.nmin, coeffs: p.coeffs.iter().map(|z| [z.re, z.im]).collect() }
    }
}

impl LaurentPoly {
    pub fn new(nmin: i64, coeffs: Vec<C64>) -> Self {
        let mut p = LaurentPoly { nmin, coeffs };
        p.trim();
        p
    }

    pub fn zero() -> Self {
        LaurentPoly { nmin: 0, coeffs: vec![] }
    }

    pub fn constant(a: C64) -> Self {
        Self::new(0, vec![a])
    }

    /// `ζⁿ`
    pub fn monomial(n: i64) -> Self {
        Self::new(n, vec![c(1.0, 0.0)])
    }

    /// Analytic polynomial `Σ_{n≥0} a_n ζⁿ`.
    pub fn analytic(coeffs: Vec<C64>) -> Self {
        Self::new(0, coeffs)
    }

    pub fn analytic_real(coeffs: &[f64]) -> Self {
        Self::analytic(coeffs.iter().map(|&x| c(x, 0.0)).collect())
    }

    fn trim(&mut self) {
        while self.coeffs.last().is_some_and(|z| *z == c(0.0, 0.0)) {
            self.coeffs.pop();
        }
        let lead = self.coeffs.iter().take_while(|z| **z == c(0.0, 0.0)).count();
        if lead > 0 {
            self.coeffs.drain(..lead);
            self.nmin += lead as i64;
        }
        if self.coeffs.is_empty() {
            self.nmin = 0;
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn nmin(&self) -> i64 {
        self.nmin
    }

    /// Highest index with a (possibly) nonzero coefficient.
    pub fn nmax(&self) -> i64 {
        self.nmin + self.coeffs.len() as i64 - 1
    }

    pub fn coeff(&self, n: i64) -> C64 {
        let k = n - self.nmin;
        if k < 0 || k >= self.coeffs.len() as i64 {
            c(0.0, 0.0)
        } else {
            self.coeffs[k as usize]
        }
    }

    /// `(n, a_n)` over the stored range.
    pub fn terms(&self) -> impl Iterator<Item = (i64, C64)> + '_ {
        self.coeffs.iter().enumerate().map(move |(k, &a)| (self.nmin + k as i64, a))
    }

    pub fn is_analytic(&self) -> bool {
        self.is_zero() || self.nmin >= 0
    }

    pub fn require_analytic(&self) -> Result<()> {
        if self.is_analytic() {
            Ok(())
        } else {
            Err(Error::NonAnalytic { index: self.nmin })
        }
    }

    pub fn eval(&self, z: C64) -> C64 {
        // Horner in z over the shifted polynomial, times z^nmin.
        let mut acc = c(0.0, 0.0);
        for a in self.coeffs.iter().rev() {
            acc = acc * z + a;
        }
        if self.nmin == 0 || self.is_zero() {
            acc
        } else {
            acc * z.powi(self.nmin as i32)
        }
    }

    pub fn derivative(&self) -> Self {
        let coeffs = self.terms().map(|(n, a)| a * n as f64).collect();
        Self::new(self.nmin - 1, coeffs)
    }

    pub fn scale(&self, s: C64) -> Self {
        Self::new(self.nmin, self.coeffs.iter().map(|a| a * s).collect())
    }

    /// Coefficients with index ≥ 0 (`Plus`) or < 0 (`Minus`).
    pub fn riesz_project(&self, sign: RieszSign) -> Self {
        let coeffs = self.terms().map(|(n, a)| if sign.keeps(n) { a } else { c(0.0, 0.0) }).collect();
        Self::new(self.nmin, coeffs)
    }

    pub fn sample(&self, grid: ThetaGrid) -> GridFunction {
        GridFunction::from_fn(grid, |_, z| self.eval(z))
    }
}

impl Add for &LaurentPoly {
    type Output = LaurentPoly;

    fn add(self, rhs: &LaurentPoly) -> LaurentPoly {
        if self.is_zero() {
            return rhs.clone();
        }
        if rhs.is_zero() {
            return self.clone();
        }
        let lo = self.nmin.min(rhs.nmin);
        let hi = self.nmax().max(rhs.nmax());
        LaurentPoly::new(lo, (lo..=hi).map(|n| self.coeff(n) + rhs.coeff(n)).collect())
    }
}

impl Sub for &LaurentPoly {
    type Output = LaurentPoly;

    fn sub(self, rhs: &LaurentPoly) -> LaurentPoly {
        self + &(-rhs)
    }
}

impl Neg for &LaurentPoly {
    type Output = LaurentPoly;

    fn neg(self) -> LaurentPoly {
        self.scale(c(-1.0, 0.0))
    }
}

impl Mul for &LaurentPoly {
    type Output = LaurentPoly;

    fn mul(self, rhs: &LaurentPoly) -> LaurentPoly {
        if self.is_zero() || rhs.is_zero() {
            return LaurentPoly::zero();
        }
        let mut out = vec![c(0.0, 0.0); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in rhs.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        LaurentPoly::new(self.nmin + rhs.nmin, out)
    }
}

/// Function on `ℝ ∪ {∞}` given by `f(t) = φ((t − i)/(t + i))` for an
/// analytic polynomial `φ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineFn {
    circle_rep: LaurentPoly,
}

impl LineFn {
    pub fn new(circle_rep: LaurentPoly) -> Result<Self> {
        circle_rep.require_analytic()?;
        Ok(LineFn { circle_rep })
    }

    pub fn circle_rep(&self) -> &LaurentPoly {
        &self.circle_rep
    }

    pub fn eval(&self, t: C64) -> C64 {
        self.circle_rep.eval(cayley_point(t))
    }

    pub fn derivative(&self, t: C64) -> C64 {
        let dzdt = 2.0 * I / ((t + I) * (t + I));
        self.circle_rep.derivative().eval(cayley_point(t)) * dzdt
    }
}

/// `(t − i)/(t + i)`.
pub fn cayley_point(t: C64) -> C64 {
    (t - I) / (t + I)
}

/// Inverse Cayley map on the circle: `θ ↦ −cot(θ/2)`.
pub fn line_point(theta: f64) -> f64 {
    -1.0 / (0.5 * theta).tan()
}

/// `dt/dθ` along the inverse Cayley map.
pub fn line_jacobian(theta: f64) -> f64 {
    let t = line_point(theta);
    0.5 * (1.0 + t * t)
}

// ---------------------------------------------------------------------------
// Divided differences and Haagerup lists
// ---------------------------------------------------------------------------

/// `(f(z) − f(w))/(z − w)`, with `f′(z)` on the diagonal.
pub fn divided_difference(f: &LaurentPoly, z: C64, w: C64) -> Result<C64> {
    f.require_analytic()?;
    if (z - w).norm() >= 1e-7 {
        return Ok((f.eval(z) - f.eval(w)) / (z - w));
    }
    let mut acc = c(0.0, 0.0);
    for (n, a) in f.terms().filter(|(n, _)| *n >= 1) {
        let mut s = c(0.0, 0.0);
        for j in 0..n {
            s += z.powi(j as i32) * w.powi((n - 1 - j) as i32);
        }
        acc += a * s;
    }
    Ok(acc)
}

/// Finite Haagerup list for `∂f`, one term per power of `w`:
/// `∂f(z, w) = Σ_k φ_k(z) w^k` with `φ_k(z) = Σ_{n>k} a_n z^{n−1−k}`.
pub fn haagerup_terms(f: &LaurentPoly) -> Result<Vec<(LaurentPoly, LaurentPoly)>> {
    f.require_analytic()?;
    if f.is_zero() {
        return Ok(vec![]);
    }
    let top = f.nmax();
    let mut terms = Vec::new();
    for k in 0..top {
        let phi = LaurentPoly::analytic(((k + 1)..=top).map(|n| f.coeff(n)).collect());
        if !phi.is_zero() {
            terms.push((phi, LaurentPoly::monomial(k)));
        }
    }
    Ok(terms)
}

// ---------------------------------------------------------------------------
// Functional calculus
// ---------------------------------------------------------------------------

/// Semi-spectral calculus `Σ_{n≥0} a_n Tⁿ + Σ_{n<0} a_n T*^{|n|}`.
pub fn eval_on_contraction(f: &LaurentPoly, t: &Contraction) -> ComplexMatrix {
    eval_on_matrix(f, t.matrix())
}

pub(crate) fn eval_on_matrix(f: &LaurentPoly, t: &ComplexMatrix) -> ComplexMatrix {
    let n = t.nrows();
    let mut out = zeros(n);
    if f.is_zero() {
        return out;
    }
    let top = f.nmax();
    if top >= 0 {
        let mut acc = zeros(n);
        for k in (0..=top).rev() {
            acc = &acc * t + identity(n) * f.coeff(k);
        }
        out += acc;
    }
    if f.nmin() < 0 {
        let ts = t.adjoint();
        let mut acc = zeros(n);
        for k in (1..=-f.nmin()).rev() {
            acc = (&acc + identity(n) * f.coeff(-k)) * &ts;
        }
        out += acc;
    }
    out
}

/// `f(L)` for a dissipative `L`, through the contraction `cayley(L)`.
pub fn eval_on_dissipative(f: &LineFn, l: &Dissipative) -> Result<ComplexMatrix> {
    let t = cayley(l.matrix())?;
    Ok(eval_on_matrix(f.circle_rep(), &t))
}

// ---------------------------------------------------------------------------
// Grids
// ---------------------------------------------------------------------------

/// Uniform grid of `m` angles, `θ_k = (k + s)·2π/m` with `s ∈ {0, ½}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ThetaGrid {
    m: usize,
    shifted: bool,
}

impl ThetaGrid {
    pub fn new(m: usize, shifted: bool) -> Result<Self> {
        if m < 2 || !m.is_power_of_two() {
            return Err(Error::InvalidInput(format!("grid size {m} is not a power of two ≥ 2")));
        }
        Ok(ThetaGrid { m, shifted })
    }

    pub fn shifted(m: usize) -> Result<Self> {
        Self::new(m, true)
    }

    pub fn len(&self) -> usize {
        self.m
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn is_shifted(&self) -> bool {
        self.shifted
    }

    pub fn step(&self) -> f64 {
        2.0 * PI / self.m as f64
    }

    pub fn theta(&self, k: usize) -> f64 {
        (k as f64 + if self.shifted { 0.5 } else { 0.0 }) * self.step()
    }

    pub fn zeta(&self, k: usize) -> C64 {
        C64::from_polar(1.0, self.theta(k))
    }

    pub fn thetas(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.m).map(|k| self.theta(k))
    }
}

/// Samples of a function on a [`ThetaGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    pub grid: ThetaGrid,
    pub values: Vec<C64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RieszSign {
    Plus,
    Minus,
}

impl RieszSign {
    fn keeps(self, n: i64) -> bool {
        match self {
            RieszSign::Plus => n >= 0,
            RieszSign::Minus => n < 0,
        }
    }
}

impl GridFunction {
    pub fn new(grid: ThetaGrid, values: Vec<C64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::DimensionMismatch { expected: grid.len(), found: values.len() });
        }
        Ok(GridFunction { grid, values })
    }

    pub fn from_fn(grid: ThetaGrid, f: impl Fn(f64, C64) -> C64) -> Self {
        let values = (0..grid.len()).map(|k| f(grid.theta(k), grid.zeta(k))).collect();
        GridFunction { grid, values }
    }

    pub fn zeros(grid: ThetaGrid) -> Self {
        GridFunction { grid, values: vec![c(0.0, 0.0); grid.len()] }
    }

    pub fn map(&self, f: impl Fn(f64, C64, C64) -> C64) -> Self {
        let values =
            self.values.iter().enumerate().map(|(k, &v)| f(self.grid.theta(k), self.grid.zeta(k), v)).collect();
        GridFunction { grid: self.grid, values }
    }

    fn check_grid(&self, other: &GridFunction) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::InvalidInput("grid functions live on different grids".into()));
        }
        Ok(())
    }

    pub fn try_add(&self, other: &GridFunction) -> Result<Self> {
        self.check_grid(other)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect();
        Ok(GridFunction { grid: self.grid, values })
    }

    pub fn scale(&self, s: C64) -> Self {
        GridFunction { grid: self.grid, values: self.values.iter().map(|v| v * s).collect() }
    }

    /// Mean against normalized Lebesgue measure.
    pub fn mean(&self) -> C64 {
        self.values.iter().sum::<C64>() / self.values.len() as f64
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Discrete Fourier coefficients `ĝ(n)`, `n ∈ (−M/2, M/2]`, returned in
    /// FFT order (index `k` holds `n = k` for `k ≤ M/2`, else `k − M`).
    pub fn fourier_coefficients(&self) -> Vec<C64> {
        let m = self.grid.len();
        let mut buf = self.values.clone();
        FftPlanner::new().plan_fft_forward(m).process(&mut buf);
        let half_step = if self.grid.is_shifted() { 0.5 * self.grid.step() } else { 0.0 };
        buf.iter()
            .enumerate()
            .map(|(k, v)| v / m as f64 * C64::from_polar(1.0, -(fft_index(k, m) as f64) * half_step))
            .collect()
    }

    pub fn fourier_coefficient(&self, n: i64) -> C64 {
        let m = self.grid.len() as i64;
        let k = n.rem_euclid(m) as usize;
        self.fourier_coefficients()[k]
    }

    /// Keep Fourier modes `n ≥ 0` (`Plus`) or `n < 0` (`Minus`). The Nyquist
    /// mode `M/2` is counted as nonnegative.
    pub fn riesz_project(&self, sign: RieszSign) -> Self {
        let m = self.grid.len();
        let mut buf = self.values.clone();
        let mut planner = FftPlanner::new();
        planner.plan_fft_forward(m).process(&mut buf);
        for (k, v) in buf.iter_mut().enumerate() {
            if !sign.keeps(fft_index(k, m)) {
                *v = c(0.0, 0.0);
            }
        }
        planner.plan_fft_inverse(m).process(&mut buf);
        let inv = 1.0 / m as f64;
        GridFunction { grid: self.grid, values: buf.into_iter().map(|v| v * inv).collect() }
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["theta", "re", "im"])?;
        for (k, v) in self.values.iter().enumerate() {
            wr.write_record([fmt17(self.grid.theta(k)), fmt17(v.re), fmt17(v.im)])?;
        }
        wr.flush()?;
        Ok(())
    }

    /// Read `theta,re,im` rows; the grid size and shift are inferred and the
    /// angles must match the uniform grid.
    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(r);
        let mut thetas = Vec::new();
        let mut values = Vec::new();
        for rec in rd.records() {
            let rec = rec?;
            if rec.len() != 3 {
                return Err(Error::InvalidInput(format!("expected 3 columns, found {}", rec.len())));
            }
            let parse = |s: &str| -> Result<f64> {
                s.trim().parse::<f64>().map_err(|e| Error::InvalidInput(format!("bad number {s:?}: {e}")))
            };
            thetas.push(parse(&rec[0])?);
            values.push(c(parse(&rec[1])?, parse(&rec[2])?));
        }
        let m = values.len();
        let first = thetas.first().copied().unwrap_or(0.0);
        let grid = ThetaGrid::new(m, first > 0.25 * 2.0 * PI / m.max(1) as f64)?;
        for (k, th) in thetas.iter().enumerate() {
            if (th - grid.theta(k)).abs() > 1e-9 {
                return Err(Error::InvalidInput(format!("row {k}: angle {th} is off the uniform grid")));
            }
        }
        GridFunction::new(grid, values)
    }
}

fn fft_index(k: usize, m: usize) -> i64 {
    if k <= m / 2 {
        k as i64
    } else {
        k as i64 - m as i64
    }
}

/// Seventeen significant digits, enough to round-trip an `f64`.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

// ---------------------------------------------------------------------------
// A-integral and the real-valued gauge
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct AIntegral {
    pub value: C64,
    pub thresholds: Vec<f64>,
    pub truncated: Vec<C64>,
    /// `t·m{|g| > t}` per threshold.
    pub tails: Vec<f64>,
    pub converged: bool,
}

/// Truncated integrals `∫_{|g|<t} g dm` over increasing thresholds.
pub fn a_integral(g: &GridFunction, thresholds: &[f64]) -> Result<AIntegral> {
    if thresholds.is_empty() {
        return Err(Error::InvalidInput("no thresholds given".into()));
    }
    if thresholds.windows(2).any(|w| w[0] >= w[1]) || thresholds[0] <= 0.0 {
        return Err(Error::InvalidInput("thresholds must be positive and ascending".into()));
    }
    let m = g.values.len() as f64;
    let mut truncated = Vec::with_capacity(thresholds.len());
    let mut tails = Vec::with_capacity(thresholds.len());
    for &t in thresholds {
        let mut sum = c(0.0, 0.0);
        let mut above = 0usize;
        for v in &g.values {
            if v.norm() < t {
                sum += v;
            } else {
                above += 1;
            }
        }
        truncated.push(sum / m);
        tails.push(t * above as f64 / m);
    }
    let converged = if truncated.len() == 1 {
        tails[0] == 0.0
    } else {
        let n = truncated.len();
        (truncated[n - 1] - truncated[n - 2]).norm() < 1e-6 && tails.windows(2).all(|w| w[1] <= w[0])
    };
    Ok(AIntegral { value: *truncated.last().unwrap(), thresholds: thresholds.to_vec(), truncated, tails, converged })
}

/// `Re ξ + i(ℙ₋ Im ξ − conj ℙ₋ Im ξ)`: real-valued and differing from `ξ`
/// by an analytic function.
pub fn realize_real_ssf(xi: &GridFunction) -> GridFunction {
    let im = xi.map(|_, _, v| c(v.im, 0.0));
    let minus = im.riesz_project(RieszSign::Minus);
    let values = xi.values.iter().zip(&minus.values).map(|(v, p)| c(v.re - 2.0 * p.im, 0.0)).collect();
    GridFunction { grid: xi.grid, values }
}

/// Gauss–Legendre nodes and weights on `(0, 1)`.
pub fn gauss_legendre_unit(n: usize) -> Result<Vec<(f64, f64)>> {
    let deg = NonZeroUsize::new(n).ok_or_else(|| Error::InvalidInput("need at least one node".into()))?;
    let rule = GaussLegendre::new(deg);
    let mut out: Vec<(f64, f64)> = rule.nodes().zip(rule.weights()).map(|(x, w)| (0.5 * (x + 1.0), 0.5 * w)).collect();
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(out)
}
