//! Spectral shift functions for pairs of contractions, unitaries,
//! self-adjoint and dissipative matrices.
//!
//! Normalization: on the circle `trace(f(X1) − f(X0)) = ∫ f′(ζ) ξ(ζ) dζ`
//! with `dζ = 2πiζ dm`, so a measure `ν = g dm` corresponds to
//! `ξ = g/(2πiζ)`. On the line the element is plain `dt`.

use std::f64::consts::PI;
use std::io::{Read, Write};

use rayon::prelude::*;
use serde::Serialize;

use crate::calculus::{
    a_integral, cayley_point, eval_on_matrix, fmt17, gauss_legendre_unit, line_point, realize_real_ssf, AIntegral,
    GridFunction, LaurentPoly, LineFn, RieszSign, ThetaGrid,
};
use crate::dilation::{cnu_split_matrix, poisson_resolvent, unitary_atoms, Atom, ScalarMeasure};
use crate::error::{Error, Result};
use crate::linalg::{
    c, cayley, ensure_same_dim, fro_norm, hermitian_eig, identity, imaginary_part, op_norm, principal_arg, schur_form,
    unitary_log, ComplexMatrix, Contraction, Dissipative, Hermitian, Unitary, C64, DEFAULT_TOL, I,
};

const TWO_PI: f64 = 2.0 * PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    Circle,
    Line,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Gauge {
    Raw,
    RealPart,
    Counting,
}

/// Piecewise-constant part of an SSF: value `value` on `[from, to)`
/// (angles on the circle, real points on the line).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Step {
    pub from: f64,
    pub to: f64,
    pub value: f64,
}

/// Point mass `c` at `x` in the `ξ dζ` (or `ξ dt`) measure: contributes
/// `f′(x)·c` to the trace integral. `x` is an angle on the circle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PointMass {
    pub at: f64,
    pub re: f64,
    pub im: f64,
}

impl PointMass {
    pub fn mass(&self) -> C64 {
        c(self.re, self.im)
    }
}

/// Sampled spectral shift function.
///
/// The trace integral is the sum of three exact-or-quadrature parts: grid
/// samples of an absolutely continuous part, exact steps, and point masses.
#[derive(Debug, Clone)]
pub struct SsfSample {
    pub domain: Domain,
    pub gauge: Gauge,
    pub grid: ThetaGrid,
    /// Values at `θ_k` (circle) or `t_k = −cot(θ_k/2)` (line).
    pub density: Option<Vec<C64>>,
    pub steps: Vec<Step>,
    pub atoms: Vec<PointMass>,
}

/// Test function for a trace formula.
#[derive(Debug, Clone)]
pub enum TestFn {
    /// Laurent polynomial on the circle.
    Circle(LaurentPoly),
    /// `φ((t − i)/(t + i))` on the line.
    Line(LineFn),
    /// Polynomial in the line variable.
    Polynomial(LaurentPoly),
}

impl TestFn {
    pub fn domain(&self) -> Domain {
        match self {
            TestFn::Circle(_) => Domain::Circle,
            _ => Domain::Line,
        }
    }

    pub fn value(&self, x: C64) -> C64 {
        match self {
            TestFn::Circle(p) | TestFn::Polynomial(p) => p.eval(x),
            TestFn::Line(f) => f.eval(x),
        }
    }

    pub fn derivative(&self, x: C64) -> C64 {
        match self {
            TestFn::Circle(p) | TestFn::Polynomial(p) => p.derivative().eval(x),
            TestFn::Line(f) => f.derivative(x),
        }
    }

    pub fn label(&self) -> String {
        match self {
            TestFn::Circle(p) => format!("circle:{}", serde_json::to_string(p).unwrap_or_default()),
            TestFn::Line(f) => format!("line:{}", serde_json::to_string(f.circle_rep()).unwrap_or_default()),
            TestFn::Polynomial(p) => format!("poly:{}", serde_json::to_string(p).unwrap_or_default()),
        }
    }
}

impl SsfSample {
    pub fn zero(domain: Domain, gauge: Gauge, grid: ThetaGrid) -> Self {
        SsfSample { domain, gauge, grid, density: Some(vec![c(0.0, 0.0); grid.len()]), steps: vec![], atoms: vec![] }
    }

    /// Grid abscissa `k`: an angle on the circle, a real point on the line.
    pub fn abscissa(&self, k: usize) -> f64 {
        match self.domain {
            Domain::Circle => self.grid.theta(k),
            Domain::Line => line_point(self.grid.theta(k)),
        }
    }

    fn step_value_at(&self, x: f64) -> f64 {
        self.steps.iter().filter(|s| x >= s.from && x < s.to).map(|s| s.value).sum()
    }

    /// Pointwise values on the grid: density plus steps (atoms are not
    /// representable pointwise).
    pub fn samples(&self) -> Vec<C64> {
        (0..self.grid.len())
            .map(|k| {
                let d = self.density.as_ref().map_or(c(0.0, 0.0), |v| v[k]);
                d + self.step_value_at(self.abscissa(k))
            })
            .collect()
    }

    pub fn as_grid_function(&self) -> Result<GridFunction> {
        if self.domain != Domain::Circle {
            return Err(Error::NormalizationMismatch("grid functions live on the circle".into()));
        }
        GridFunction::new(self.grid, self.samples())
    }

    pub fn max_abs_im(&self) -> f64 {
        let d = self.density.as_ref().map_or(0.0, |v| v.iter().map(|z| z.im.abs()).fold(0.0, f64::max));
        d
    }

    pub fn min_im(&self) -> f64 {
        self.density.as_ref().map_or(0.0, |v| v.iter().map(|z| z.im).fold(f64::INFINITY, f64::min))
    }

    pub fn max_im(&self) -> f64 {
        self.density.as_ref().map_or(0.0, |v| v.iter().map(|z| z.im).fold(f64::NEG_INFINITY, f64::max))
    }

    pub fn max_abs_re(&self) -> f64 {
        self.density.as_ref().map_or(0.0, |v| v.iter().map(|z| z.re.abs()).fold(0.0, f64::max))
    }

    /// `∫ f′ ξ` in the sample's normalization.
    pub fn integrate(&self, f: &TestFn) -> Result<C64> {
        if f.domain() != self.domain {
            return Err(Error::NormalizationMismatch(format!(
                "test function lives on the {:?}, SSF on the {:?}",
                f.domain(),
                self.domain
            )));
        }
        let m = self.grid.len() as f64;
        let mut total = c(0.0, 0.0);
        if let Some(d) = &self.density {
            for (k, xi) in d.iter().enumerate() {
                let th = self.grid.theta(k);
                total += match self.domain {
                    Domain::Circle => {
                        let z = C64::from_polar(1.0, th);
                        f.derivative(z) * xi * z * (TWO_PI * I) / m
                    }
                    Domain::Line => {
                        let t = line_point(th);
                        f.derivative(c(t, 0.0)) * xi * (0.5 * (1.0 + t * t)) * (TWO_PI / m)
                    }
                };
            }
        }
        for s in &self.steps {
            let (a, b) = match self.domain {
                Domain::Circle => (C64::from_polar(1.0, s.from), C64::from_polar(1.0, s.to)),
                Domain::Line => (c(s.from, 0.0), c(s.to, 0.0)),
            };
            total += (f.value(b) - f.value(a)) * s.value;
        }
        for a in &self.atoms {
            let x = match self.domain {
                Domain::Circle => C64::from_polar(1.0, a.at),
                Domain::Line => c(a.at, 0.0),
            };
            total += f.derivative(x) * a.mass();
        }
        Ok(total)
    }

    /// `∫ ζⁿ ξ dζ` for circle samples, `n ≥ 0`.
    pub fn circle_moment(&self, n: i64) -> Result<C64> {
        let f = LaurentPoly::monomial(n + 1).scale(c(1.0 / (n + 1) as f64, 0.0));
        self.integrate(&TestFn::Circle(f))
    }

    pub fn try_add(&self, other: &SsfSample) -> Result<SsfSample> {
        if self.domain != other.domain || self.grid != other.grid {
            return Err(Error::NormalizationMismatch("SSF samples live on different grids".into()));
        }
        let density = match (&self.density, &other.density) {
            (None, None) => None,
            (a, b) => {
                let zero = vec![c(0.0, 0.0); self.grid.len()];
                let a = a.as_ref().unwrap_or(&zero);
                let b = b.as_ref().unwrap_or(&zero);
                Some(a.iter().zip(b).map(|(x, y)| x + y).collect())
            }
        };
        let gauge = if self.gauge == other.gauge { self.gauge } else { Gauge::Raw };
        Ok(SsfSample {
            domain: self.domain,
            gauge,
            grid: self.grid,
            density,
            steps: self.steps.iter().chain(&other.steps).copied().collect(),
            atoms: self.atoms.iter().chain(&other.atoms).copied().collect(),
        })
    }

    pub fn scale(&self, s: f64) -> SsfSample {
        SsfSample {
            domain: self.domain,
            gauge: self.gauge,
            grid: self.grid,
            density: self.density.as_ref().map(|d| d.iter().map(|z| z * s).collect()),
            steps: self.steps.iter().map(|st| Step { value: st.value * s, ..*st }).collect(),
            atoms: self.atoms.iter().map(|a| PointMass { at: a.at, re: a.re * s, im: a.im * s }).collect(),
        }
    }

    /// Add an analytic polynomial to the density (circle only).
    pub fn add_analytic(&self, h: &LaurentPoly) -> Result<SsfSample> {
        h.require_analytic()?;
        if self.domain != Domain::Circle {
            return Err(Error::NormalizationMismatch("gauge shifts act on circle samples".into()));
        }
        let mut out = self.clone();
        let d = out.density.get_or_insert_with(|| vec![c(0.0, 0.0); self.grid.len()]);
        for (k, v) in d.iter_mut().enumerate() {
            *v += h.eval(self.grid.zeta(k));
        }
        Ok(out)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let head = match self.domain {
            Domain::Circle => "theta",
            Domain::Line => "t",
        };
        wr.write_record([head, "re_xi", "im_xi"])?;
        for (k, v) in self.samples().iter().enumerate() {
            wr.write_record([fmt17(self.abscissa(k)), fmt17(v.re), fmt17(v.im)])?;
        }
        wr.flush()?;
        Ok(())
    }

    /// Read a circle (`theta`) or line (`t`) CSV as a pure density sample.
    pub fn read_csv<R: Read>(r: R) -> Result<SsfSample> {
        let mut rd = csv::Reader::from_reader(r);
        let head = rd.headers()?.get(0).unwrap_or("").trim().to_string();
        let domain = match head.as_str() {
            "theta" => Domain::Circle,
            "t" => Domain::Line,
            other => return Err(Error::InvalidInput(format!("unknown abscissa column {other:?}"))),
        };
        let mut xs = Vec::new();
        let mut vals = Vec::new();
        for rec in rd.records() {
            let rec = rec?;
            if rec.len() != 3 {
                return Err(Error::InvalidInput(format!("expected 3 columns, found {}", rec.len())));
            }
            let p =
                |s: &str| s.trim().parse::<f64>().map_err(|e| Error::InvalidInput(format!("bad number {s:?}: {e}")));
            xs.push(p(&rec[0])?);
            vals.push(c(p(&rec[1])?, p(&rec[2])?));
        }
        let m = vals.len();
        let grid = match domain {
            Domain::Circle => {
                let first = xs.first().copied().unwrap_or(0.0);
                ThetaGrid::new(m, first > 0.25 * TWO_PI / m.max(1) as f64)?
            }
            Domain::Line => ThetaGrid::shifted(m)?,
        };
        for (k, x) in xs.iter().enumerate() {
            let expect = match domain {
                Domain::Circle => grid.theta(k),
                Domain::Line => line_point(grid.theta(k)),
            };
            if (x - expect).abs() > 1e-9 * (1.0 + expect.abs()) {
                return Err(Error::InvalidInput(format!("row {k}: abscissa {x} is off the grid")));
            }
        }
        Ok(SsfSample { domain, gauge: Gauge::Raw, grid, density: Some(vals), steps: vec![], atoms: vec![] })
    }

    pub fn summary_json(&self) -> serde_json::Value {
        serde_json::json!({
            "domain": self.domain,
            "gauge": self.gauge,
            "normalization": "dzeta-convention",
            "grid": self.grid.len(),
            "shifted": self.grid.is_shifted(),
            "steps": self.steps,
            "atoms": self.atoms,
        })
    }
}

// ---------------------------------------------------------------------------
// Quadrature
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, Serialize)]
pub struct QuadratureSpec {
    pub t_nodes: usize,
    pub theta_grid: usize,
    pub path_steps: usize,
    pub shift_grid: bool,
    pub tolerance: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec { t_nodes: 32, theta_grid: 2048, path_steps: 2000, shift_grid: false, tolerance: DEFAULT_TOL }
    }
}

impl QuadratureSpec {
    pub fn new(t_nodes: usize, theta_grid: usize) -> Self {
        QuadratureSpec { t_nodes, theta_grid, ..Default::default() }
    }

    pub fn with_steps(mut self, steps: usize) -> Self {
        self.path_steps = steps;
        self
    }

    pub fn shifted(mut self) -> Self {
        self.shift_grid = true;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.t_nodes < 2 {
            return Err(Error::InvalidInput("at least two t-nodes are required".into()));
        }
        if self.path_steps == 0 {
            return Err(Error::InvalidInput("path steps must be positive".into()));
        }
        if self.tolerance <= 0.0 {
            return Err(Error::InvalidInput("tolerance must be positive".into()));
        }
        self.grid().map(|_| ())
    }

    pub fn grid(&self) -> Result<ThetaGrid> {
        ThetaGrid::new(self.theta_grid, self.shift_grid)
    }

    pub fn nodes(&self) -> Result<Vec<(f64, f64)>> {
        gauss_legendre_unit(self.t_nodes)
    }
}

/// What to do with point masses of the unitary part along a path.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum AtomPolicy {
    /// The perturbation must vanish on the unitary part.
    Reject,
    Keep,
}

/// `∫₀¹ trace(X 𝓔_{T_t}) dt` by Gauss–Legendre in `t`: density samples of
/// `g = dν/dm` and merged atoms `(θ, mass)`.
pub(crate) fn path_measure(
    spec: &QuadratureSpec,
    path: impl Fn(f64) -> Result<ComplexMatrix> + Sync,
    x: &ComplexMatrix,
    policy: AtomPolicy,
) -> Result<(Vec<C64>, Vec<Atom<C64>>)> {
    let grid = spec.grid()?;
    let nodes = spec.nodes()?;
    let per_node: Vec<(Vec<C64>, Vec<Atom<C64>>)> = nodes
        .iter()
        .map(|&(t, w)| {
            let tt = path(t)?;
            let split = cnu_split_matrix(&tt);
            let mut atoms = Vec::new();
            for a in unitary_atoms(&split.unitary_part, &split.unitary_basis)? {
                let mass = (x * &a.weight).trace();
                match policy {
                    AtomPolicy::Reject if mass.norm() > 1e-10 => {
                        return Err(Error::UnitaryPartCoupling { mass: mass.norm() });
                    }
                    AtomPolicy::Reject => {}
                    AtomPolicy::Keep => atoms.push(Atom { theta: a.theta, weight: mass * w }),
                }
            }
            let cb = &split.cnu_basis;
            let g = if cb.ncols() == 0 {
                vec![c(0.0, 0.0); grid.len()]
            } else {
                let xc = cb.adjoint() * x * cb;
                let xc_star = xc.adjoint();
                let tr = xc.trace();
                let tc = &split.cnu_part;
                (0..grid.len())
                    .into_par_iter()
                    .map(|k| {
                        let r = poisson_resolvent(tc, grid.theta(k))?;
                        let a = (&xc * &r).trace();
                        let b = (&xc_star * &r).trace().conj();
                        Ok((a + b - tr) * w)
                    })
                    .collect::<Result<Vec<_>>>()?
            };
            Ok((g, atoms))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut g = vec![c(0.0, 0.0); grid.len()];
    let mut atoms: Vec<Atom<C64>> = Vec::new();
    for (gn, an) in per_node {
        for (acc, v) in g.iter_mut().zip(gn) {
            *acc += v;
        }
        for a in an {
            match atoms
                .iter_mut()
                .find(|b| (C64::from_polar(1.0, b.theta) - C64::from_polar(1.0, a.theta)).norm() < 1e-8)
            {
                Some(b) => b.weight += a.weight,
                None => atoms.push(a),
            }
        }
    }
    Ok((g, atoms))
}

// ---------------------------------------------------------------------------
// Contractions
// ---------------------------------------------------------------------------

/// SSF of a contraction pair from the measures `trace(K 𝓔_{T_t})` along the
/// segment `T_t = T0 + tK`.
pub fn ssf_contraction_pair(t0: &Contraction, t1: &Contraction, spec: &QuadratureSpec) -> Result<SsfSample> {
    spec.validate()?;
    ensure_same_dim(t0.matrix(), t1.matrix())?;
    let grid = spec.grid()?;
    let k = t1.matrix() - t0.matrix();
    if fro_norm(&k) == 0.0 {
        return Ok(SsfSample::zero(Domain::Circle, Gauge::Raw, grid));
    }
    let tol = spec.tolerance;
    let (g, _) = path_measure(
        spec,
        |t| Ok(Contraction::with_tolerance(t0.matrix() + &k * c(t, 0.0), tol)?.into_matrix()),
        &k,
        AtomPolicy::Reject,
    )?;
    let density = g.iter().enumerate().map(|(j, gv)| gv / (TWO_PI * I * grid.zeta(j))).collect();
    Ok(SsfSample {
        domain: Domain::Circle,
        gauge: Gauge::Raw,
        grid,
        density: Some(density),
        steps: vec![],
        atoms: vec![],
    })
}

// ---------------------------------------------------------------------------
// Unitaries
// ---------------------------------------------------------------------------

/// Eigenphases of a unitary in (−π, π], ascending.
fn unitary_phases(u: &ComplexMatrix) -> Result<Vec<f64>> {
    let n = u.nrows();
    if n == 0 {
        return Ok(vec![]);
    }
    let (_, t) = schur_form(u)?;
    let mut p: Vec<f64> = (0..n).map(|i| principal_arg(t[(i, i)])).collect();
    p.sort_by(f64::total_cmp);
    Ok(p)
}

/// Lifted eigenphase endpoints of the path `e^{itA}U0`, `t ∈ [0, 1]`.
#[derive(Debug, Clone, Serialize)]
pub struct PhaseTrack {
    pub initial: Vec<f64>,
    pub terminal: Vec<f64>,
    /// `|Σ(b_j − a_j) − trace A|`
    pub trace_certificate: f64,
    pub refinements: usize,
}

fn match_phases(old: &[f64], new: &[f64], bound: f64) -> Option<Vec<f64>> {
    let n = old.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| old[a].rem_euclid(TWO_PI).total_cmp(&old[b].rem_euclid(TWO_PI)));
    let mut accepted: Option<Vec<f64>> = None;
    for r in 0..n {
        let mut lifted = Vec::with_capacity(n);
        let mut cost: f64 = 0.0;
        for (j, &oi) in order.iter().enumerate() {
            let psi = new[(j + r) % n];
            let phi = old[oi];
            let l = psi + TWO_PI * ((phi - psi) / TWO_PI).round();
            cost = cost.max((l - phi).abs());
            lifted.push(l);
        }
        if cost > bound {
            continue;
        }
        lifted.sort_by(f64::total_cmp);
        match &accepted {
            None => accepted = Some(lifted),
            Some(prev) => {
                if prev.iter().zip(&lifted).any(|(a, b)| (a - b).abs() > 1e-9) {
                    return None;
                }
            }
        }
    }
    accepted
}

pub fn track_phases(a: &ComplexMatrix, u0: &ComplexMatrix, steps: usize) -> Result<PhaseTrack> {
    let dec = hermitian_eig(a)?;
    let norm_a = dec.eigenvalues.iter().map(|z| z.re.abs()).fold(0.0, f64::max);
    let initial = unitary_phases(u0)?;
    let mut state = initial.clone();
    let mut refinements = 0usize;
    let evolve = |t: f64| -> Result<Vec<f64>> { unitary_phases(&(dec.apply(|z| C64::from_polar(1.0, t * z.re)) * u0)) };
    let h = 1.0 / steps as f64;
    let mut stack: Vec<(f64, f64, u32)> = (0..steps).rev().map(|k| (k as f64 * h, (k + 1) as f64 * h, 0)).collect();
    while let Some((t_a, t_b, depth)) = stack.pop() {
        let new = evolve(t_b)?;
        let bound = 0.5 * PI * norm_a * (t_b - t_a) + 1e-9;
        match match_phases(&state, &new, bound) {
            Some(l) => state = l,
            None if depth < 24 => {
                refinements += 1;
                let mid = 0.5 * (t_a + t_b);
                stack.push((mid, t_b, depth + 1));
                stack.push((t_a, mid, depth + 1));
            }
            None => return Err(Error::PhaseMatching { t: t_a, steps }),
        }
    }
    let moved: f64 = state.iter().sum::<f64>() - initial.iter().sum::<f64>();
    let trace_certificate = (moved - a.trace().re).abs();
    if trace_certificate > 1e-6 * (1.0 + initial.len() as f64) {
        return Err(Error::PhaseMatching { t: 1.0, steps });
    }
    Ok(PhaseTrack { initial, terminal: state, trace_certificate, refinements })
}

/// Counting function `Σ_j #{k : a_j ≤ θ + 2πk < b_j}` (signed) as steps on
/// `[0, 2π)`.
pub(crate) fn arc_counting_steps(initial: &[f64], terminal: &[f64]) -> Vec<Step> {
    let value = |th: f64| -> f64 {
        initial.iter().zip(terminal).map(|(a, b)| ((b - th) / TWO_PI).ceil() - ((a - th) / TWO_PI).ceil()).sum()
    };
    let mut cuts: Vec<f64> = initial.iter().chain(terminal).map(|x| x.rem_euclid(TWO_PI)).collect();
    cuts.push(0.0);
    cuts.push(TWO_PI);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
    let mut steps: Vec<Step> = Vec::new();
    for w in cuts.windows(2) {
        let v = value(0.5 * (w[0] + w[1]));
        if v == 0.0 {
            continue;
        }
        match steps.last_mut() {
            Some(s) if s.to == w[0] && s.value == v => s.to = w[1],
            _ => steps.push(Step { from: w[0], to: w[1], value: v }),
        }
    }
    steps
}

/// Counting SSF of a unitary pair along `U_t = e^{itA}U0`,
/// `A = −i log(U1 U0*)`.
pub fn ssf_unitary_pair(u0: &Unitary, u1: &Unitary, spec: &QuadratureSpec) -> Result<SsfSample> {
    Ok(ssf_unitary_pair_tracked(u0.matrix(), u1.matrix(), spec)?.0)
}

pub(crate) fn ssf_unitary_pair_tracked(
    u0: &ComplexMatrix,
    u1: &ComplexMatrix,
    spec: &QuadratureSpec,
) -> Result<(SsfSample, PhaseTrack)> {
    spec.validate()?;
    ensure_same_dim(u0, u1)?;
    let grid = spec.grid()?;
    let a = unitary_log(&(u1 * u0.adjoint()))?;
    let track = track_phases(&a, u0, spec.path_steps)?;
    let steps = arc_counting_steps(&track.initial, &track.terminal);
    Ok((SsfSample { domain: Domain::Circle, gauge: Gauge::Counting, grid, density: None, steps, atoms: vec![] }, track))
}

// ---------------------------------------------------------------------------
// Self-adjoint pairs
// ---------------------------------------------------------------------------

/// Counting SSF `#{λ(A0) ≤ t} − #{λ(A1) ≤ t}`.
pub fn ssf_selfadjoint_pair(a0: &Hermitian, a1: &Hermitian) -> Result<SsfSample> {
    ensure_same_dim(a0.matrix(), a1.matrix())?;
    let l0 = hermitian_eig(a0.matrix())?.real_eigenvalues();
    let l1 = hermitian_eig(a1.matrix())?.real_eigenvalues();
    let mut cuts: Vec<f64> = l0.iter().chain(&l1).copied().collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let count = |v: &[f64], t: f64| v.iter().filter(|&&x| x <= t).count() as f64;
    let mut steps: Vec<Step> = Vec::new();
    for w in cuts.windows(2) {
        let v = count(&l0, w[0]) - count(&l1, w[0]);
        if v != 0.0 {
            steps.push(Step { from: w[0], to: w[1], value: v });
        }
    }
    let grid = ThetaGrid::shifted(crate::calculus::DEFAULT_GRID)?;
    Ok(SsfSample { domain: Domain::Line, gauge: Gauge::Counting, grid, density: None, steps, atoms: vec![] })
}

#[derive(Debug, Clone, Serialize)]
pub struct CayleyTransferCheck {
    /// Integer constant separating the two gauges.
    pub offset: f64,
    /// `max |ξ(t) − ξ_u((t − i)/(t + i)) − offset|` over interval midpoints.
    pub mismatch: f64,
}

/// Compare the counting SSF with the unitary SSF of the Cayley transforms.
pub fn selfadjoint_cayley_check(a0: &Hermitian, a1: &Hermitian, spec: &QuadratureSpec) -> Result<CayleyTransferCheck> {
    let xi = ssf_selfadjoint_pair(a0, a1)?;
    let u0 = cayley(a0.matrix())?;
    let u1 = cayley(a1.matrix())?;
    let (xu, _) = ssf_unitary_pair_tracked(&u0, &u1, spec)?;
    let mut cuts: Vec<f64> = xi.steps.iter().flat_map(|s| [s.from, s.to]).collect();
    for s in &xu.steps {
        for th in [s.from, s.to] {
            if th > 0.0 && th < TWO_PI {
                cuts.push(line_point(th));
            }
        }
    }
    cuts.sort_by(f64::total_cmp);
    // The two gauges place the same breakpoint a few ulps apart.
    cuts.dedup_by(|a, b| (*a - *b).abs() <= 1e-9 * (1.0 + b.abs()));
    let mut probes: Vec<f64> = cuts.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    probes.push(cuts.first().copied().unwrap_or(0.0) - 1.0);
    probes.push(cuts.last().copied().unwrap_or(0.0) + 1.0);
    let diffs: Vec<f64> = probes
        .iter()
        .map(|&t| {
            let th = principal_arg(cayley_point(c(t, 0.0))).rem_euclid(TWO_PI);
            xi.step_value_at(t) - xu.step_value_at(th)
        })
        .collect();
    let offset = diffs.first().copied().unwrap_or(0.0).round();
    let mismatch = diffs.iter().map(|d| (d - offset).abs()).fold(0.0, f64::max);
    Ok(CayleyTransferCheck { offset, mismatch })
}

/// `det(I + (X1 − X0)(X0 − z)^{-1}) = det(X1 − z)/det(X0 − z)`.
pub fn perturbation_determinant(a0: &Hermitian, a1: &Hermitian, z: C64) -> Result<C64> {
    ensure_same_dim(a0.matrix(), a1.matrix())?;
    if z.im.abs() < 1e-14 {
        let ev = hermitian_eig(a0.matrix())?.real_eigenvalues();
        if ev.iter().any(|l| (l - z.re).abs() < 1e-14) {
            return Err(Error::OnSpectrum { point: z.re });
        }
    }
    determinant_ratio(a1.matrix(), a0.matrix(), z)
}

fn determinant_ratio(x1: &ComplexMatrix, x0: &ComplexMatrix, z: C64) -> Result<C64> {
    let n = x0.nrows();
    let d1 = (x1 - identity(n) * z).determinant();
    let d0 = (x0 - identity(n) * z).determinant();
    if d0.norm() == 0.0 {
        return Err(Error::Singular);
    }
    Ok(d1 / d0)
}

#[derive(Debug, Clone, Serialize)]
pub struct DeterminantInversion {
    pub t: f64,
    pub ladder: Vec<f64>,
    /// `(1/π) Im log Δ(t + iy)` at each ladder point.
    pub values: Vec<f64>,
    pub value: f64,
    /// Counting SSF at `t`.
    pub reference: f64,
    pub converged: bool,
}

/// Recover `ξ(t)` from the boundary argument of the perturbation determinant
/// with a continuously tracked branch of `log Δ(t + iy)` from large `y`.
pub fn ssf_via_determinant(a0: &Hermitian, a1: &Hermitian, t: f64, y_ladder: &[f64]) -> Result<DeterminantInversion> {
    ensure_same_dim(a0.matrix(), a1.matrix())?;
    if y_ladder.is_empty() || y_ladder.iter().any(|&y| y <= 0.0) || y_ladder.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidInput("ladder must be positive and strictly decreasing".into()));
    }
    let l0 = hermitian_eig(a0.matrix())?.real_eigenvalues();
    let l1 = hermitian_eig(a1.matrix())?.real_eigenvalues();
    if l0.iter().chain(&l1).any(|l| (l - t).abs() < 1e-8) {
        return Err(Error::OnSpectrum { point: t });
    }
    let delta = |y: f64| determinant_ratio(a1.matrix(), a0.matrix(), c(t, y));
    // Start far enough up that Δ is close to 1 and the principal branch is right.
    let scale = l0.iter().chain(&l1).map(|x| x.abs()).fold(t.abs(), f64::max) + 1.0;
    let mut y = (1e3 * scale).max(y_ladder[0]);
    let mut prev = delta(y)?;
    let mut arg = prev.arg();
    let mut values = Vec::with_capacity(y_ladder.len());
    for &target in y_ladder {
        while y > target {
            let next_y = (0.5 * y).max(target);
            let d = delta(next_y)?;
            let inc = (d / prev).arg();
            if inc.abs() > 0.5 * PI {
                return Err(Error::BranchJump { jump: inc, from: y, to: next_y });
            }
            arg += inc;
            prev = d;
            y = next_y;
        }
        values.push(arg / PI);
    }
    let reference = l0.iter().filter(|&&x| x <= t).count() as f64 - l1.iter().filter(|&&x| x <= t).count() as f64;
    let value = *values.last().unwrap();
    let converged = values.len() < 2 || (values[values.len() - 1] - values[values.len() - 2]).abs() < 1e-3;
    Ok(DeterminantInversion { t, ladder: y_ladder.to_vec(), values, value, reference, converged })
}

/// Circle contour `center + radius·e^{iθ}`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Contour {
    pub center: C64,
    pub radius: f64,
    pub nodes: usize,
}

/// `trace(f(T1) − f(T0)) = −(1/2πi) ∮ f′(z) log Δ(z) dz` for a polynomial
/// `f`, with `Δ(z) = det(T1 − z)/det(T0 − z)` and a branch of `log Δ`
/// continued around the contour.
pub fn langer_contour_trace(f: &LaurentPoly, t0: &ComplexMatrix, t1: &ComplexMatrix, contour: Contour) -> Result<C64> {
    f.require_analytic()?;
    ensure_same_dim(t0, t1)?;
    if contour.nodes < 3 || contour.radius <= 0.0 {
        return Err(Error::InvalidInput("contour needs a positive radius and at least 3 nodes".into()));
    }
    let df = f.derivative();
    let n = contour.nodes;
    let mut log_prev: Option<C64> = None;
    let mut d_prev = c(1.0, 0.0);
    let mut total = c(0.0, 0.0);
    let mut first = c(0.0, 0.0);
    for k in 0..=n {
        let e = C64::from_polar(1.0, TWO_PI * k as f64 / n as f64);
        let z = contour.center + e * contour.radius;
        let d = determinant_ratio(t1, t0, z)?;
        if d.norm() == 0.0 {
            return Err(Error::InvalidInput("perturbation determinant vanishes on the contour".into()));
        }
        let lg = match log_prev {
            None => {
                first = d.ln();
                first
            }
            Some(lp) => {
                let inc = (d / d_prev).arg();
                if inc.abs() > 0.5 * PI {
                    return Err(Error::InvalidInput("contour too coarse for branch tracking".into()));
                }
                c(d.norm().ln(), lp.im + inc)
            }
        };
        if k == n {
            let winding = ((lg.im - first.im) / TWO_PI).round() as i64;
            if winding != 0 {
                return Err(Error::WindingMismatch { winding });
            }
            break;
        }
        total += df.eval(z) * lg * e * contour.radius;
        log_prev = Some(lg);
        d_prev = d;
    }
    Ok(-total / n as f64)
}

// ---------------------------------------------------------------------------
// Dissipative pairs
// ---------------------------------------------------------------------------

/// Line SSF from the contraction SSF of the Cayley transforms:
/// `ξ(t) = ξ_c((t − i)/(t + i))`.
pub fn ssf_dissipative_resolvent_pair(l0: &Dissipative, l1: &Dissipative, spec: &QuadratureSpec) -> Result<SsfSample> {
    ensure_same_dim(l0.matrix(), l1.matrix())?;
    let spec = spec.shifted();
    let t0 = Contraction::with_tolerance(cayley(l0.matrix())?, spec.tolerance)?;
    let t1 = Contraction::with_tolerance(cayley(l1.matrix())?, spec.tolerance)?;
    let xi = ssf_contraction_pair(&t0, &t1, &spec)?;
    Ok(SsfSample { domain: Domain::Line, ..xi })
}

/// Line SSF along `L_s = L0 + sK` from the Cayley pullbacks of the
/// semi-spectral measures of `L_s`.
pub fn ssf_dissipative_additive(l0: &Dissipative, k: &ComplexMatrix, spec: &QuadratureSpec) -> Result<SsfSample> {
    ensure_same_dim(l0.matrix(), k)?;
    let spec = spec.shifted();
    spec.validate()?;
    let grid = spec.grid()?;
    if fro_norm(k) == 0.0 {
        return Ok(SsfSample::zero(Domain::Line, Gauge::Raw, grid));
    }
    let tol = spec.tolerance;
    let (g, atoms) = path_measure(
        &spec,
        |s| {
            let ls = l0.matrix() + k * c(s, 0.0);
            let min_eig = hermitian_eig(&imaginary_part(&ls))?.eigenvalues.first().map_or(0.0, |z| z.re);
            if min_eig < -tol {
                return Err(Error::NotDissipative { min_eig });
            }
            cayley(&ls)
        },
        k,
        AtomPolicy::Keep,
    )?;
    // d𝓔/dt = K_c(θ)/(2π)·dθ/dt with dθ/dt = 2/(1 + t²).
    let density = g
        .iter()
        .enumerate()
        .map(|(j, gv)| {
            let t = line_point(grid.theta(j));
            gv / (PI * (1.0 + t * t))
        })
        .collect();
    let atoms = atoms
        .into_iter()
        .filter(|a| a.theta.rem_euclid(TWO_PI) > 1e-12)
        .map(|a| PointMass { at: line_point(a.theta), re: a.weight.re, im: a.weight.im })
        .collect();
    Ok(SsfSample { domain: Domain::Line, gauge: Gauge::Raw, grid, density: Some(density), steps: vec![], atoms })
}

// ---------------------------------------------------------------------------
// Verification
// ---------------------------------------------------------------------------

/// A pair of operators of one class.
#[derive(Debug, Clone)]
pub enum OperatorPair {
    Contraction(Contraction, Contraction),
    Unitary(Unitary, Unitary),
    Hermitian(Hermitian, Hermitian),
    Dissipative(Dissipative, Dissipative),
}

impl OperatorPair {
    fn trace_difference(&self, f: &TestFn) -> Result<C64> {
        let mismatch =
            |what: &str| Err(Error::NormalizationMismatch(format!("{what} pairs need a different test function")));
        match (self, f) {
            (OperatorPair::Contraction(t0, t1), TestFn::Circle(p)) => {
                p.require_analytic()?;
                Ok((eval_on_matrix(p, t1.matrix()) - eval_on_matrix(p, t0.matrix())).trace())
            }
            (OperatorPair::Unitary(u0, u1), TestFn::Circle(p)) => {
                Ok((eval_on_matrix(p, u1.matrix()) - eval_on_matrix(p, u0.matrix())).trace())
            }
            (OperatorPair::Hermitian(a0, a1), TestFn::Polynomial(p)) => {
                p.require_analytic()?;
                Ok((eval_on_matrix(p, a1.matrix()) - eval_on_matrix(p, a0.matrix())).trace())
            }
            (OperatorPair::Hermitian(a0, a1), TestFn::Line(g)) => {
                Ok((eval_on_matrix(g.circle_rep(), &cayley(a1.matrix())?)
                    - eval_on_matrix(g.circle_rep(), &cayley(a0.matrix())?))
                .trace())
            }
            (OperatorPair::Dissipative(l0, l1), TestFn::Line(g)) => {
                Ok((eval_on_matrix(g.circle_rep(), &cayley(l1.matrix())?)
                    - eval_on_matrix(g.circle_rep(), &cayley(l0.matrix())?))
                .trace())
            }
            (OperatorPair::Contraction(..), _) => mismatch("contraction"),
            (OperatorPair::Unitary(..), _) => mismatch("unitary"),
            (OperatorPair::Hermitian(..), _) => mismatch("self-adjoint"),
            (OperatorPair::Dissipative(..), _) => mismatch("dissipative"),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Residual {
    pub function: String,
    pub trace: [f64; 2],
    pub integral: [f64; 2],
    pub absolute: f64,
    /// `absolute / max(|trace|, 1)`
    pub relative: f64,
}

pub fn verify_trace_formula(pair: &OperatorPair, f: &TestFn, xi: &SsfSample) -> Result<Residual> {
    let trace = pair.trace_difference(f)?;
    let integral = xi.integrate(f)?;
    let absolute = (trace - integral).norm();
    Ok(Residual {
        function: f.label(),
        trace: [trace.re, trace.im],
        integral: [integral.re, integral.im],
        absolute,
        relative: absolute / trace.norm().max(1.0),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct BrothersRiesz {
    /// `(j, λ̂(j))` for `j = −1, …, −J`.
    pub coefficients: Vec<(i64, [f64; 2])>,
    pub max_abs: f64,
}

/// Negative Fourier coefficients of `λ = ν − ξ dζ`; small values certify
/// that the two descriptions agree up to an analytic measure.
pub fn brothers_riesz_check(nu: &ScalarMeasure, xi: &SsfSample, depth: usize) -> Result<BrothersRiesz> {
    let mut coefficients = Vec::with_capacity(depth);
    let mut max_abs: f64 = 0.0;
    for n in 1..=depth as i64 {
        let v = nu.moment(n) - xi.circle_moment(n)?;
        max_abs = max_abs.max(v.norm());
        coefficients.push((-n, [v.re, v.im]));
    }
    Ok(BrothersRiesz { coefficients, max_abs })
}

#[derive(Debug, Clone, Serialize)]
pub struct AIntegralTrace {
    pub via_eta_minus: C64,
    pub via_xi_r: C64,
    /// `(A)∫ f′ ℙ₊ξ dζ`, which should vanish.
    pub analytic_part: C64,
    pub trace: C64,
    pub eta_minus: AIntegral,
    pub xi_r: AIntegral,
}

fn dzeta_integrand(f: &LaurentPoly, g: &GridFunction) -> GridFunction {
    let df = f.derivative();
    g.map(|_, z, v| df.eval(z) * v * z * (TWO_PI * I))
}

fn default_thresholds(g: &GridFunction) -> Vec<f64> {
    let top = g.max_abs().max(1e-300);
    (0..5).map(|k| top * 2f64.powi(k)).collect()
}

/// Trace formula through A-integrals of `f′η₋` and `f′ξ_r`.
pub fn a_integral_trace(
    t0: &Contraction,
    t1: &Contraction,
    f: &LaurentPoly,
    spec: &QuadratureSpec,
) -> Result<AIntegralTrace> {
    f.require_analytic()?;
    let xi = ssf_contraction_pair(t0, t1, spec)?.as_grid_function()?;
    let eta_minus = xi.riesz_project(RieszSign::Minus);
    let eta_plus = xi.riesz_project(RieszSign::Plus);
    let xi_r = realize_real_ssf(&xi);
    let run = |g: &GridFunction| {
        let h = dzeta_integrand(f, g);
        a_integral(&h, &default_thresholds(&h))
    };
    let em = run(&eta_minus)?;
    let xr = run(&xi_r)?;
    let ep = run(&eta_plus)?;
    if !em.converged || !xr.converged {
        return Err(Error::NonConvergence("A-integral truncations did not settle".into()));
    }
    let trace = (eval_on_matrix(f, t1.matrix()) - eval_on_matrix(f, t0.matrix())).trace();
    Ok(AIntegralTrace {
        via_eta_minus: em.value,
        via_xi_r: xr.value,
        analytic_part: ep.value,
        trace,
        eta_minus: em,
        xi_r: xr,
    })
}

/// Largest singular value of `X1 − X0`; convenient report scale.
pub fn perturbation_size(x0: &ComplexMatrix, x1: &ComplexMatrix) -> f64 {
    op_norm(&(x1 - x0))
}
