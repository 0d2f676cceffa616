//! Nonlinearities `F: ℂ⁴ → [0, ∞)` built from the scalar bilinear
//! `q = ψ̄ψ` and the pseudoscalar bilinear `g = ⟨γ⁰γ⁵ψ, ψ⟩`.
//!
//! Every model is a sum `Σ cₜ φₜ(bₜ(ψ))` with `bₜ(ψ) = ⟨Gₜψ, ψ⟩` for a
//! Hermitian `Gₜ`. Gradients are taken with respect to the real inner product
//! on `ℂ⁴ ≅ ℝ⁸`, so `∇bₜ = 2Gₜψ` and
//! `F''(ψ)v = Σ cₜ[φₜ''(bₜ)·2Re⟨Gₜψ, v⟩·2Gₜψ + φₜ'(bₜ)·2Gₜv]`.
//! The Hessian is real-linear only: it does not commute with multiplication
//! by `i`.

use rand::Rng;

use crate::clifford::{dirac_bilinear, gamma5_bilinear, Spinor4};
use crate::error::{Error, Result};
use crate::field::{GridField, SpinorField, SpinorSpace};

/// Constants declared for the growth hypotheses:
/// `0 ≤ F ≤ A1(|ψ|^α1 + |ψ|^α2)`, `|F''(ψ)| ≤ A2|ψ|^{α2−2}` for large `|ψ|`,
/// `⟨dF(ψ), ψ⟩ ≥ αF(ψ)`, `F ≥ A3|ψ̄ψ|^ν − A4` and
/// `|dF(ψ)| ≤ A5(1 + F^{1/β})|ψ|`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HypothesisConstants {
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub a4: f64,
    pub a5: f64,
    pub alpha: f64,
    pub beta: f64,
    pub nu: f64,
    pub alpha1: f64,
    pub alpha2: f64,
}

impl HypothesisConstants {
    /// Constants that hold for `|ψ̄ψ|^p + b|ψ̄γ⁵ψ|^p`.
    ///
    /// Both bilinears are bounded by `|ψ|²`, so `F ≤ (1 + b)|ψ|^{2p}`; the
    /// model is `2p`-homogeneous, and `|dF| ≤ 2p(1 + b)|ψ|^{2p−1}`, which the
    /// gradient-growth form absorbs for any `β ≤ p/(p − 1)`.
    pub fn for_soler_power(p: f64, b: f64) -> Self {
        HypothesisConstants {
            a1: 1.0 + b,
            a2: 1.0,
            a3: 1.0,
            a4: 0.0,
            a5: 2.0 * p * (1.0 + b),
            alpha: 2.0 * p,
            beta: 4.0_f64.min(p / (p - 1.0)),
            nu: p,
            alpha1: 2.0 * p,
            alpha2: 2.0 * p,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let c = self;
        let fail = |msg: String| Err(Error::InvalidModel(msg));
        for (name, v) in [("A1", c.a1), ("A2", c.a2), ("A3", c.a3), ("A5", c.a5)] {
            if !(v > 0.0 && v.is_finite()) {
                return fail(format!("{name} must be positive, got {v}"));
            }
        }
        if !(c.a4 >= 0.0 && c.a4.is_finite()) {
            return fail(format!("A4 must be nonnegative, got {}", c.a4));
        }
        if !(c.alpha > 2.0) {
            return fail(format!("alpha must exceed 2, got {}", c.alpha));
        }
        if !(c.beta > 3.0) {
            return fail(format!("beta must exceed 3, got {}", c.beta));
        }
        if !(c.nu > 1.0) {
            return fail(format!("nu must exceed 1, got {}", c.nu));
        }
        if !(2.0 < c.alpha1 && c.alpha1 <= c.alpha2 && c.alpha2 < 3.0) {
            return fail(format!(
                "need 2 < alpha1 <= alpha2 < 3, got alpha1 = {}, alpha2 = {}",
                c.alpha1, c.alpha2
            ));
        }
        Ok(())
    }
}

/// Natural cubic spline through `(knots[i], values[i])`, extended linearly
/// past the last knot.
#[derive(Clone, Debug, PartialEq)]
pub struct CubicSpline {
    knots: Vec<f64>,
    values: Vec<f64>,
    second: Vec<f64>,
}

impl CubicSpline {
    pub fn new(knots: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let n = knots.len();
        if n < 2 || values.len() != n {
            return Err(Error::InvalidModel(
                "spline needs at least two knots and one value per knot".into(),
            ));
        }
        if knots.iter().chain(&values).any(|x| !x.is_finite()) {
            return Err(Error::InvalidModel("spline data must be finite".into()));
        }
        if knots.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidModel("spline knots must increase strictly".into()));
        }
        // Tridiagonal system for interior second derivatives (Thomas algorithm).
        let mut second = vec![0.0; n];
        if n > 2 {
            let h: Vec<f64> = knots.windows(2).map(|w| w[1] - w[0]).collect();
            let m = n - 2;
            let mut diag = vec![0.0; m];
            let mut rhs = vec![0.0; m];
            for i in 0..m {
                diag[i] = 2.0 * (h[i] + h[i + 1]);
                rhs[i] = 6.0
                    * ((values[i + 2] - values[i + 1]) / h[i + 1] - (values[i + 1] - values[i]) / h[i]);
            }
            for i in 1..m {
                let w = h[i] / diag[i - 1];
                diag[i] -= w * h[i];
                rhs[i] -= w * rhs[i - 1];
            }
            second[m] = rhs[m - 1] / diag[m - 1];
            for i in (0..m - 1).rev() {
                second[i + 1] = (rhs[i] - h[i + 1] * second[i + 2]) / diag[i];
            }
        }
        Ok(CubicSpline {
            knots,
            values,
            second,
        })
    }

    /// Value, first and second derivative at `x` (`x` at or above the first knot).
    pub fn eval(&self, x: f64) -> (f64, f64, f64) {
        let n = self.knots.len();
        let last = self.knots[n - 1];
        if x >= last {
            let (v, d, _) = self.eval_interval(n - 2, last);
            return (v + d * (x - last), d, 0.0);
        }
        let i = match self.knots.partition_point(|&k| k <= x) {
            0 => 0,
            p => (p - 1).min(n - 2),
        };
        self.eval_interval(i, x)
    }

    fn eval_interval(&self, i: usize, x: f64) -> (f64, f64, f64) {
        let (x0, x1) = (self.knots[i], self.knots[i + 1]);
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        let (m0, m1) = (self.second[i], self.second[i + 1]);
        let h = x1 - x0;
        let a = (x1 - x) / h;
        let b = (x - x0) / h;
        let v = a * y0 + b * y1 + ((a * a * a - a) * m0 + (b * b * b - b) * m1) * h * h / 6.0;
        let d = (y1 - y0) / h + ((1.0 - 3.0 * a * a) * m0 + (3.0 * b * b - 1.0) * m1) * h / 6.0;
        let dd = a * m0 + b * m1;
        (v, d, dd)
    }

    pub fn first_knot(&self) -> f64 {
        self.knots[0]
    }
}

/// The profile `G` of a Soler model `F = ½G(ψ̄ψ)`, identically zero for
/// nonpositive arguments.
#[derive(Clone, Debug, PartialEq)]
pub enum GProfile {
    /// `G(s) = coeff·s^exponent` for `s > 0`.
    PositivePower { coeff: f64, exponent: f64 },
    Tabulated(CubicSpline),
}

impl GProfile {
    fn eval(&self, s: f64) -> (f64, f64, f64) {
        if s <= 0.0 {
            return (0.0, 0.0, 0.0);
        }
        match self {
            GProfile::PositivePower { coeff, exponent } => {
                let k = *exponent;
                let v = coeff * s.powf(k);
                (v, k * v / s, k * (k - 1.0) * v / (s * s))
            }
            GProfile::Tabulated(spline) => {
                if s < spline.first_knot() {
                    (0.0, 0.0, 0.0)
                } else {
                    spline.eval(s)
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ModelKind {
    /// `|ψ̄ψ|^p + b|ψ̄γ⁵ψ|^p`.
    SolerPower { p: f64, b: f64 },
    /// `½G(ψ̄ψ)`.
    SolerG { profile: GProfile },
    /// The power model with `|x|^p` replaced by `(x² + δ²)^{p/2} − δ^p`,
    /// which is smooth across the null cone.
    Smoothed { inner: Box<ModelKind>, delta: f64 },
}

/// One scalar law `φ` applied to one bilinear.
#[derive(Clone, Copy)]
enum Law<'a> {
    Power(f64),
    SmoothPower { p: f64, delta: f64, offset: f64 },
    Profile(&'a GProfile),
}

impl Law<'_> {
    fn value(&self, x: f64) -> f64 {
        match *self {
            Law::Power(p) => x.abs().powf(p),
            Law::SmoothPower { p, delta, offset } => (x * x + delta * delta).powf(p / 2.0) - offset,
            Law::Profile(g) => g.eval(x).0,
        }
    }

    fn d1(&self, x: f64) -> f64 {
        match *self {
            Law::Power(p) => {
                if x == 0.0 {
                    0.0
                } else {
                    p * x.abs().powf(p - 1.0) * x.signum()
                }
            }
            Law::SmoothPower { p, delta, .. } => p * x * (x * x + delta * delta).powf(p / 2.0 - 1.0),
            Law::Profile(g) => g.eval(x).1,
        }
    }

    fn d2(&self, x: f64) -> f64 {
        match *self {
            Law::Power(p) => {
                if x == 0.0 && p < 2.0 {
                    f64::INFINITY
                } else {
                    p * (p - 1.0) * x.abs().powf(p - 2.0)
                }
            }
            Law::SmoothPower { p, delta, .. } => {
                let s = x * x + delta * delta;
                p * s.powf(p / 2.0 - 1.0) + p * (p - 2.0) * x * x * s.powf(p / 2.0 - 2.0)
            }
            Law::Profile(g) => g.eval(x).2,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Bilinear {
    Scalar,
    Pseudo,
}

impl Bilinear {
    fn value(self, psi: &Spinor4) -> f64 {
        match self {
            Bilinear::Scalar => dirac_bilinear(psi),
            Bilinear::Pseudo => gamma5_bilinear(psi).re,
        }
    }

    fn apply(self, v: &Spinor4) -> Spinor4 {
        match self {
            Bilinear::Scalar => v.gamma0(),
            Bilinear::Pseudo => v.gamma0_gamma5(),
        }
    }
}

/// A nonlinearity with its declared hypothesis constants.
#[derive(Clone, Debug, PartialEq)]
pub struct NonlinearityModel {
    pub kind: ModelKind,
    pub constants: HypothesisConstants,
}

fn check_power(p: f64, b: f64) -> Result<()> {
    if !(p > 1.0 && p < 1.5) {
        return Err(Error::InvalidModel(format!("exponent p must lie in (1, 3/2), got {p}")));
    }
    if !(b >= 0.0 && b.is_finite()) {
        return Err(Error::InvalidModel(format!("coefficient b must be nonnegative, got {b}")));
    }
    Ok(())
}

impl NonlinearityModel {
    /// `|ψ̄ψ|^p + b|ψ̄γ⁵ψ|^p` with constants from
    /// [`HypothesisConstants::for_soler_power`].
    pub fn soler_power(p: f64, b: f64) -> Result<Self> {
        check_power(p, b)?;
        Self::new(
            ModelKind::SolerPower { p, b },
            HypothesisConstants::for_soler_power(p, b),
        )
    }

    pub fn new(kind: ModelKind, constants: HypothesisConstants) -> Result<Self> {
        match &kind {
            ModelKind::SolerPower { p, b } => check_power(*p, *b)?,
            ModelKind::SolerG { profile } => {
                if let GProfile::PositivePower { coeff, exponent } = profile {
                    if !(*coeff > 0.0 && *exponent > 1.0) {
                        return Err(Error::InvalidModel(format!(
                            "power profile needs coeff > 0 and exponent > 1, got {coeff}, {exponent}"
                        )));
                    }
                }
            }
            ModelKind::Smoothed { inner, delta } => {
                let ModelKind::SolerPower { p, b } = **inner else {
                    return Err(Error::InvalidModel("smoothing applies to the power model only".into()));
                };
                check_power(p, b)?;
                if !(*delta >= 0.0 && delta.is_finite()) {
                    return Err(Error::InvalidModel(format!("delta must be nonnegative, got {delta}")));
                }
            }
        }
        constants.validate()?;
        Ok(NonlinearityModel { kind, constants })
    }

    pub fn default_model() -> Self {
        Self::soler_power(1.25, 0.0).expect("default parameters are valid")
    }

    /// Copy of a power model with smoothing `delta`; other models are
    /// returned unchanged.
    pub fn smoothed(&self, delta: f64) -> Self {
        let kind = match &self.kind {
            ModelKind::SolerPower { .. } => ModelKind::Smoothed {
                inner: Box::new(self.kind.clone()),
                delta,
            },
            ModelKind::Smoothed { inner, .. } => ModelKind::Smoothed {
                inner: inner.clone(),
                delta,
            },
            other => other.clone(),
        };
        NonlinearityModel {
            kind,
            constants: self.constants,
        }
    }

    fn for_each_term(&self, mut f: impl FnMut(f64, Law<'_>, Bilinear)) {
        match &self.kind {
            ModelKind::SolerPower { p, b } => {
                f(1.0, Law::Power(*p), Bilinear::Scalar);
                if *b != 0.0 {
                    f(*b, Law::Power(*p), Bilinear::Pseudo);
                }
            }
            ModelKind::SolerG { profile } => f(0.5, Law::Profile(profile), Bilinear::Scalar),
            ModelKind::Smoothed { inner, delta } => {
                let ModelKind::SolerPower { p, b } = **inner else {
                    unreachable!("validated at construction")
                };
                let law = Law::SmoothPower {
                    p,
                    delta: *delta,
                    offset: delta.powf(p),
                };
                f(1.0, law, Bilinear::Scalar);
                if b != 0.0 {
                    f(b, law, Bilinear::Pseudo);
                }
            }
        }
    }

    pub fn value(&self, psi: &Spinor4) -> f64 {
        let mut acc = 0.0;
        self.for_each_term(|c, law, bl| acc += c * law.value(bl.value(psi)));
        acc
    }

    /// Real gradient of `F` at `psi`.
    pub fn gradient(&self, psi: &Spinor4) -> Spinor4 {
        let mut acc = Spinor4::ZERO;
        self.for_each_term(|c, law, bl| {
            let d = law.d1(bl.value(psi));
            if d != 0.0 {
                acc += bl.apply(psi) * (2.0 * c * d);
            }
        });
        acc
    }

    /// `F` and its gradient in one pass.
    pub fn value_and_gradient(&self, psi: &Spinor4) -> (f64, Spinor4) {
        let mut val = 0.0;
        let mut grad = Spinor4::ZERO;
        self.for_each_term(|c, law, bl| {
            let x = bl.value(psi);
            val += c * law.value(x);
            let d = law.d1(x);
            if d != 0.0 {
                grad += bl.apply(psi) * (2.0 * c * d);
            }
        });
        (val, grad)
    }

    /// `F''(ψ)v`. Fails where the second derivative of a scalar law is
    /// infinite, which for the unsmoothed power model is the null cone.
    pub fn hessian_apply(&self, psi: &Spinor4, v: &Spinor4) -> Result<Spinor4> {
        let mut acc = Spinor4::ZERO;
        let mut singular = None;
        self.for_each_term(|c, law, bl| {
            let x = bl.value(psi);
            let d2 = law.d2(x);
            if !d2.is_finite() {
                singular = Some(x);
                return;
            }
            let gpsi = bl.apply(psi);
            let gv = bl.apply(v);
            acc += gpsi * (4.0 * c * d2 * gpsi.real_dot(v));
            acc += gv * (2.0 * c * law.d1(x));
        });
        match singular {
            Some(value) => Err(Error::NullCone { value }),
            None => Ok(acc),
        }
    }

    /// `∫F` by grid quadrature.
    pub fn integral(&self, space: &SpinorSpace, grid: &GridField) -> f64 {
        grid.values.iter().map(|p| self.value(p)).sum::<f64>() * space.cell_volume()
    }

    /// Pointwise gradient on the grid.
    pub fn gradient_grid(&self, grid: &GridField) -> GridField {
        GridField {
            dims: grid.dims,
            values: grid.values.iter().map(|p| self.gradient(p)).collect(),
        }
    }

    /// Mode coefficients of the pointwise gradient, with the fraction of its
    /// discrete energy above the truncation.
    pub fn gradient_field(&self, space: &SpinorSpace, f: &SpinorField) -> (SpinorField, f64) {
        space.to_modes(&self.gradient_grid(&space.to_grid(f)))
    }
}

/// Worst observed margin of one hypothesis over the sample.
#[derive(Clone, Debug)]
pub struct HypothesisCheck {
    pub name: &'static str,
    /// Smallest `rhs − lhs` over the sample, each scaled by `max(1, |rhs|)`.
    pub worst_margin: f64,
    pub samples: usize,
    pub passed: bool,
    /// Whether a failure should fail verification. The Hessian growth bound
    /// is not gating because the power model violates it near the null cone.
    pub gating: bool,
    pub note: String,
}

#[derive(Clone, Debug)]
pub struct HypothesisReport {
    pub checks: Vec<HypothesisCheck>,
}

impl HypothesisReport {
    pub fn gating_passed(&self) -> bool {
        self.checks.iter().filter(|c| c.gating).all(|c| c.passed)
    }

    pub fn get(&self, name: &str) -> Option<&HypothesisCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

const MARGIN_TOL: f64 = 1e-12;

struct MarginTracker {
    worst: f64,
    count: usize,
}

impl MarginTracker {
    fn new() -> Self {
        MarginTracker {
            worst: f64::INFINITY,
            count: 0,
        }
    }

    /// Records `rhs − lhs` for the inequality `lhs ≤ rhs`.
    fn push(&mut self, lhs: f64, rhs: f64) {
        let scale = lhs.abs().max(rhs.abs()).max(1.0);
        let m = if lhs.is_finite() && rhs.is_finite() {
            (rhs - lhs) / scale
        } else {
            f64::NEG_INFINITY
        };
        self.worst = self.worst.min(m);
        self.count += 1;
    }

    fn finish(self, name: &'static str, gating: bool, note: String) -> HypothesisCheck {
        HypothesisCheck {
            name,
            worst_margin: self.worst,
            samples: self.count,
            passed: self.worst >= -MARGIN_TOL,
            gating,
            note,
        }
    }
}

/// Operator norm of the symmetric real 8×8 Hessian at `psi`.
fn hessian_norm(model: &NonlinearityModel, psi: &Spinor4) -> Result<f64> {
    let mut cols = Vec::with_capacity(8);
    for k in 0..8 {
        let mut v = Spinor4::ZERO;
        v.0[k / 2] = if k % 2 == 0 {
            num_complex::Complex64::new(1.0, 0.0)
        } else {
            num_complex::Complex64::new(0.0, 1.0)
        };
        cols.push(model.hessian_apply(psi, &v)?);
    }
    let real = |s: &Spinor4, k: usize| if k % 2 == 0 { s.0[k / 2].re } else { s.0[k / 2].im };
    let mat = faer::Mat::<f64>::from_fn(8, 8, |i, j| 0.5 * (real(&cols[j], i) + real(&cols[i], j)));
    let vals = mat
        .self_adjoint_eigenvalues(faer::Side::Lower)
        .map_err(|e| Error::InvalidModel(format!("Hessian eigenvalues: {e:?}")))?;
    Ok(vals.iter().map(|v| v.abs()).fold(0.0, f64::max))
}

fn sample_points(sample_count: usize, radius: f64, seed: u64) -> Vec<Spinor4> {
    let mut rng = crate::rng::stream(seed, "hypotheses");
    let mut pts = Vec::with_capacity(sample_count + 16);
    let h = std::f64::consts::FRAC_1_SQRT_2;
    for t in [0.25, 1.0, 4.0] {
        let t = t * radius / 4.0;
        pts.push(Spinor4::unit(0) * t);
        pts.push(Spinor4::unit(2) * t);
        pts.push(Spinor4::from_real([h, 0.0, h, 0.0]) * t);
        pts.push(Spinor4([
            num_complex::Complex64::new(h, 0.0),
            num_complex::Complex64::new(0.0, 0.0),
            num_complex::Complex64::new(0.0, h),
            num_complex::Complex64::new(0.0, 0.0),
        ]) * t);
    }
    for _ in 0..sample_count {
        let dir = Spinor4(std::array::from_fn(|_| {
            num_complex::Complex64::new(crate::rng::normal(&mut rng), crate::rng::normal(&mut rng))
        }));
        let r = radius * (1.0 - rng.random::<f64>());
        pts.push(dir * (r / dir.norm()));
    }
    pts
}

/// Samples points with `|ψ| ≤ radius` and checks each hypothesis with the
/// declared constants. Violations are reported, never raised.
pub fn verify_hypotheses(
    model: &NonlinearityModel,
    sample_count: usize,
    radius: f64,
    seed: u64,
) -> HypothesisReport {
    let c = model.constants;
    let pts = sample_points(sample_count.max(1), radius, seed);

    let mut origin = MarginTracker::new();
    let zero = Spinor4::ZERO;
    origin.push(model.value(&zero).abs(), 0.0);
    origin.push(model.gradient(&zero).norm(), 0.0);

    let mut f1 = MarginTracker::new();
    let mut f2 = MarginTracker::new();
    let mut f3 = MarginTracker::new();
    let mut f4 = MarginTracker::new();
    let mut f5 = MarginTracker::new();
    let mut singular = 0usize;
    let mut c5: f64 = 0.0;

    for psi in &pts {
        let r = psi.norm();
        let (f, grad) = model.value_and_gradient(psi);
        let q = dirac_bilinear(psi);
        if r > 0.0 {
            c5 = c5.max(gamma5_bilinear(psi).norm() / (r * r));
        }
        f1.push(-f, 0.0);
        f1.push(f, c.a1 * (r.powf(c.alpha1) + r.powf(c.alpha2)));
        if r >= 1.0 {
            match hessian_norm(model, psi) {
                Ok(h) => f2.push(h, c.a2 * r.powf(c.alpha2 - 2.0)),
                Err(_) => {
                    singular += 1;
                    f2.push(f64::INFINITY, c.a2 * r.powf(c.alpha2 - 2.0));
                }
            }
        }
        f3.push(c.alpha * f, grad.real_dot(psi));
        f4.push(c.a3 * q.abs().powf(c.nu) - c.a4, f);
        f5.push(grad.norm(), c.a5 * (1.0 + f.powf(1.0 / c.beta)) * r);
    }

    let f2_note = if f2.count == 0 {
        "no samples with |psi| >= 1; increase the radius".to_string()
    } else if singular > 0 {
        format!("{singular} samples on the null cone where the Hessian is unbounded")
    } else {
        String::new()
    };
    HypothesisReport {
        checks: vec![
            origin.finish("F(0) = dF(0) = 0", true, String::new()),
            f1.finish("growth bound", true, format!("sampled max |pseudoscalar|/|psi|^2 = {c5:.6}")),
            f2.finish("Hessian growth", false, f2_note),
            f3.finish("superquadratic", true, String::new()),
            f4.finish("coercivity", true, String::new()),
            f5.finish("gradient growth", true, String::new()),
        ],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn random_spinor(rng: &mut impl Rng, scale: f64) -> Spinor4 {
        Spinor4(std::array::from_fn(|_| {
            Complex64::new(crate::rng::normal(rng), crate::rng::normal(rng)) * scale
        }))
    }

    fn basis8(k: usize) -> Spinor4 {
        let mut v = Spinor4::ZERO;
        v.0[k / 2] = if k % 2 == 0 {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 1.0)
        };
        v
    }

    /// Central-difference gradient over the eight real coordinates.
    fn fd_gradient(model: &NonlinearityModel, psi: &Spinor4, h: f64) -> Spinor4 {
        let mut g = Spinor4::ZERO;
        for k in 0..8 {
            let e = basis8(k);
            let d = (model.value(&(*psi + e * h)) - model.value(&(*psi - e * h))) / (2.0 * h);
            g += e * d;
        }
        g
    }

    #[test]
    fn power_model_values() {
        let m = NonlinearityModel::default_model();
        assert_eq!(m.value(&Spinor4::unit(0)), 1.0);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!(m.value(&Spinor4::from_real([h, 0.0, h, 0.0])) < 1e-16);
        assert_eq!(m.value(&Spinor4::ZERO), 0.0);
        assert_eq!(m.gradient(&Spinor4::ZERO), Spinor4::ZERO);
        let g = m.gradient(&Spinor4::unit(0));
        assert!((g - Spinor4::from_real([2.5, 0.0, 0.0, 0.0])).norm() < 1e-15);
        let fd = fd_gradient(&m, &Spinor4::unit(0), 1e-6);
        assert!((fd - g).norm() < 1e-8);
    }

    #[test]
    fn constructor_validation() {
        assert!(NonlinearityModel::soler_power(1.5, 0.0).is_err());
        assert!(NonlinearityModel::soler_power(1.0, 0.0).is_err());
        assert!(NonlinearityModel::soler_power(1.2, -1.0).is_err());
        let mut c = HypothesisConstants::for_soler_power(1.25, 0.0);
        c.alpha2 = 3.0;
        assert!(NonlinearityModel::new(ModelKind::SolerPower { p: 1.25, b: 0.0 }, c).is_err());
        let smoothed_g = ModelKind::Smoothed {
            inner: Box::new(ModelKind::SolerG {
                profile: GProfile::PositivePower { coeff: 1.0, exponent: 1.25 },
            }),
            delta: 1e-3,
        };
        assert!(NonlinearityModel::new(smoothed_g, HypothesisConstants::for_soler_power(1.25, 0.0)).is_err());
    }

    #[test]
    fn euler_identity_and_phase_invariance() {
        for b in [0.0, 0.7] {
            let m = NonlinearityModel::soler_power(1.25, b).unwrap();
            let mut rng = crate::rng::stream(11, "euler");
            for _ in 0..100 {
                let psi = random_spinor(&mut rng, 0.8);
                let f = m.value(&psi);
                assert!(f >= 0.0);
                let pair = m.gradient(&psi).real_dot(&psi);
                assert!((pair - 2.5 * f).abs() < 1e-12 * f.max(1.0));
                let rotated = psi * Complex64::from_polar(1.0, 0.83);
                assert!((m.value(&rotated) - f).abs() < 1e-13 * f.max(1.0));
            }
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        for b in [0.0, 0.5] {
            let m = NonlinearityModel::soler_power(1.3, b).unwrap();
            let mut rng = crate::rng::stream(12, "fd-grad");
            for _ in 0..50 {
                let psi = random_spinor(&mut rng, 1.0);
                let g = m.gradient(&psi);
                let fd = fd_gradient(&m, &psi, 1e-6);
                assert!((g - fd).norm() < 1e-5 * g.norm().max(1e-3), "{g:?} vs {fd:?}");
            }
        }
    }

    #[test]
    fn hessian_matches_directional_differences_and_is_symmetric() {
        for model in [
            NonlinearityModel::soler_power(1.25, 0.0).unwrap(),
            NonlinearityModel::soler_power(1.4, 0.3).unwrap(),
            NonlinearityModel::default_model().smoothed(1e-2),
        ] {
            let mut rng = crate::rng::stream(13, "fd-hess");
            for _ in 0..50 {
                let psi = random_spinor(&mut rng, 1.0);
                let v = random_spinor(&mut rng, 1.0);
                let w = random_spinor(&mut rng, 1.0);
                let hv = model.hessian_apply(&psi, &v).unwrap();
                let h = 1e-6;
                let fd = (model.gradient(&(psi + v * h)) - model.gradient(&(psi - v * h))) * (0.5 / h);
                assert!((hv - fd).norm() < 1e-5 * hv.norm().max(1e-3), "{hv:?} vs {fd:?}");
                let hw = model.hessian_apply(&psi, &w).unwrap();
                assert!((hv.real_dot(&w) - hw.real_dot(&v)).abs() < 1e-10 * hv.norm().max(1.0));
            }
        }
    }

    #[test]
    fn null_cone_behaviour() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let cone = Spinor4::from_real([h, 0.0, h, 0.0]);
        let m = NonlinearityModel::default_model();
        assert!(matches!(
            m.hessian_apply(&cone, &Spinor4::unit(0)),
            Err(Error::NullCone { .. })
        ));
        let s = m.smoothed(1e-3);
        let hv = s.hessian_apply(&cone, &Spinor4::unit(0)).unwrap();
        assert!(hv.is_finite());
        // δ = 0 reproduces the unsmoothed values.
        let z = m.smoothed(0.0);
        let psi = Spinor4::from_real([0.3, 0.2, -0.5, 0.1]);
        assert!((z.value(&psi) - m.value(&psi)).abs() < 1e-15);
        assert!((z.gradient(&psi) - m.gradient(&psi)).norm() < 1e-15);
    }

    #[test]
    fn soler_g_models() {
        let c = HypothesisConstants::for_soler_power(1.25, 0.0);
        let pw = NonlinearityModel::new(
            ModelKind::SolerG {
                profile: GProfile::PositivePower { coeff: 2.0, exponent: 1.25 },
            },
            c,
        )
        .unwrap();
        let power = NonlinearityModel::default_model();
        let psi = Spinor4::from_real([0.6, 0.1, 0.2, 0.0]);
        // ½·2·q^p equals the power model for positive q.
        assert!((pw.value(&psi) - power.value(&psi)).abs() < 1e-15);
        assert_eq!(pw.value(&Spinor4::unit(2)), 0.0);

        // Spline through s³ reproduces a cubic away from the natural ends.
        let knots: Vec<f64> = (0..=40).map(|i| i as f64 * 0.05).collect();
        let vals: Vec<f64> = knots.iter().map(|s| s * s).collect();
        let spline = CubicSpline::new(knots, vals).unwrap();
        let (v, d, dd) = spline.eval(1.0);
        assert!((v - 1.0).abs() < 1e-4 && (d - 2.0).abs() < 1e-3 && (dd - 2.0).abs() < 1e-2);
        let (v_out, d_out, _) = spline.eval(3.0);
        let (v_end, d_end, _) = spline.eval(2.0);
        assert!((v_out - (v_end + d_end)).abs() < 1e-12 && d_out == d_end);
        let tab = NonlinearityModel::new(
            ModelKind::SolerG {
                profile: GProfile::Tabulated(spline),
            },
            c,
        )
        .unwrap();
        let mut rng = crate::rng::stream(14, "spline-grad");
        for _ in 0..20 {
            let psi = random_spinor(&mut rng, 0.7);
            let g = tab.gradient(&psi);
            let fd = fd_gradient(&tab, &psi, 1e-6);
            assert!((g - fd).norm() < 1e-5 * g.norm().max(1e-3));
        }
        assert!(CubicSpline::new(vec![0.0, 0.0], vec![0.0, 1.0]).is_err());
    }

    #[test]
    fn hypotheses_on_default_model() {
        let m = NonlinearityModel::default_model();
        let report = verify_hypotheses(&m, 2000, 3.0, 1);
        for name in ["F(0) = dF(0) = 0", "growth bound", "superquadratic", "coercivity", "gradient growth"] {
            let c = report.get(name).unwrap();
            assert!(c.passed, "{name}: {c:?}");
        }
        // Equalities for the homogeneous model.
        assert!(report.get("superquadratic").unwrap().worst_margin.abs() < 1e-12);
        assert!(report.get("coercivity").unwrap().worst_margin.abs() < 1e-12);
        assert!(report.gating_passed());
        // The Hessian bound fails on the null cone and is reported as such.
        let f2 = report.get("Hessian growth").unwrap();
        assert!(!f2.passed && !f2.gating && f2.note.contains("null cone"));
    }

    #[test]
    fn hypotheses_with_pseudoscalar_term() {
        let m = NonlinearityModel::soler_power(1.25, 0.5).unwrap();
        let report = verify_hypotheses(&m, 1000, 3.0, 2);
        assert!(report.gating_passed(), "{:?}", report.checks);
        let mut tight = m.clone();
        tight.constants.a1 = 0.5;
        assert!(!verify_hypotheses(&tight, 1000, 3.0, 2).get("growth bound").unwrap().passed);
    }
}
