//! The action
//! `J_ε(ψ) = ∫ ½⟨ψ, Dψ⟩ − (a/2)|ψ|² − (M/2)|ψ|² − F(ψ) − ε|ψ|^{α₂}`
//! on the truncated space, its gradients and the linearization of its
//! Euler-Lagrange operator.
//!
//! The quadratic Dirac term is computed spectrally; every pointwise term is
//! summed on the collocation grid. Because the residual is the grid gradient
//! projected back onto the truncated modes, `dJ_ε(ψ)[v] = ⟨r(ψ), v⟩_{L²}`
//! holds exactly for the discrete functional.

use crate::clifford::Spinor4;
use crate::error::{Error, Result};
use crate::field::{GridField, SpinorField, SpinorSpace};
use crate::nonlinear::NonlinearityModel;
use crate::rng;
use crate::solver::geometry::{halton_direction, LinkingGeometry};
use crate::spectral::LatticeSpec;

/// A nonnegative scalar potential `M(θ)`.
#[derive(Clone, Debug, PartialEq)]
pub enum ExternalField {
    /// `amplitude·(1 + cos(2πθ_axis / l_axis))`, axis numbered from 1.
    Cosine { amplitude: f64, axis: usize },
    Constant(f64),
    /// Explicit values on the collocation grid, row-major.
    Grid(Vec<f64>),
}

impl ExternalField {
    pub fn max_value(&self) -> f64 {
        match self {
            ExternalField::Cosine { amplitude, .. } => 2.0 * amplitude,
            ExternalField::Constant(v) => *v,
            ExternalField::Grid(v) => v.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }

    pub fn min_value(&self) -> f64 {
        match self {
            ExternalField::Cosine { .. } => 0.0,
            ExternalField::Constant(v) => *v,
            ExternalField::Grid(v) => v.iter().copied().fold(f64::INFINITY, f64::min),
        }
    }

    pub fn on_grid(&self, space: &SpinorSpace) -> Result<Vec<f64>> {
        let n = space.grid_len();
        match self {
            ExternalField::Cosine { amplitude, axis } => {
                if !(1..=3).contains(axis) {
                    return Err(Error::InvalidParams(format!("external axis {axis} not in 1..=3")));
                }
                let a = axis - 1;
                let l = space.lattice().lengths[a];
                Ok((0..n)
                    .map(|p| {
                        let th = space.grid_point(p)[a];
                        amplitude * (1.0 + (std::f64::consts::TAU * th / l).cos())
                    })
                    .collect())
            }
            ExternalField::Constant(v) => Ok(vec![*v; n]),
            ExternalField::Grid(v) => {
                if v.len() != n {
                    return Err(Error::InvalidParams(format!(
                        "external field has {} values, grid has {n}",
                        v.len()
                    )));
                }
                Ok(v.clone())
            }
        }
    }
}

/// Mass `m`, frequency `a`, perturbation weight `ε`, lattice and optional
/// potential, validated so that `0 < a ≤ a + M < m`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProblemParams {
    pub mass: f64,
    pub frequency: f64,
    pub eps: f64,
    pub lattice: LatticeSpec,
    pub external: Option<ExternalField>,
}

impl ProblemParams {
    pub fn new(lattice: LatticeSpec, mass: f64, frequency: f64, eps: f64) -> Result<Self> {
        let p = ProblemParams {
            mass,
            frequency,
            eps,
            lattice,
            external: None,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_external(mut self, external: ExternalField) -> Result<Self> {
        self.external = Some(external);
        self.validate()?;
        Ok(self)
    }

    pub fn with_eps(&self, eps: f64) -> Result<Self> {
        let mut p = self.clone();
        p.eps = eps;
        p.validate()?;
        Ok(p)
    }

    /// Largest value of `M` (zero without a potential).
    pub fn max_external(&self) -> f64 {
        self.external.as_ref().map_or(0.0, ExternalField::max_value)
    }

    pub fn validate(&self) -> Result<()> {
        let (m, a) = (self.mass, self.frequency);
        if !(m > 0.0 && m.is_finite()) {
            return Err(Error::InvalidParams(format!("mass must be positive, got {m}")));
        }
        if !(a > 0.0 && a < m) {
            return Err(Error::InvalidParams(format!("requires 0 < a < m, got a = {a}, m = {m}")));
        }
        if !(0.0..=1.0).contains(&self.eps) {
            return Err(Error::InvalidParams(format!("eps must lie in [0, 1], got {}", self.eps)));
        }
        if let Some(ext) = &self.external {
            if !(ext.min_value() >= 0.0) {
                return Err(Error::InvalidParams("external field must be nonnegative".into()));
            }
            if let ExternalField::Cosine { amplitude, axis } = ext {
                if !(1..=3).contains(axis) || !amplitude.is_finite() {
                    return Err(Error::InvalidParams(format!(
                        "cosine field needs axis in 1..=3 and a finite amplitude, got {axis}, {amplitude}"
                    )));
                }
            }
            if !(a + ext.max_value() < m) {
                return Err(Error::InvalidParams(format!(
                    "requires a + M < m everywhere, got a + max M = {}",
                    a + ext.max_value()
                )));
            }
        }
        Ok(())
    }
}

/// All terms of `J_ε` at one field.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvaluationBundle {
    pub j_eps: f64,
    /// `½⟨Dψ, ψ⟩`.
    pub kinetic: f64,
    /// `(a/2)‖ψ‖²`.
    pub mass_term: f64,
    /// `∫(M/2)|ψ|²`, zero without a potential.
    pub external_term: f64,
    pub f_int: f64,
    /// `∫|ψ|^{α₂}`.
    pub pert_int: f64,
    /// `‖r‖_{E*}`.
    pub residual_dual: f64,
    /// Fraction of the grid gradient's energy above the truncation.
    pub aliasing_tail: f64,
}

/// Both sides of `2J_ε − dJ_ε[ψ] = ∫dF[ψ] − 2F + ε(α₂ − 2)|ψ|^{α₂}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PsIdentity {
    pub lhs: f64,
    pub rhs: f64,
    pub gap: f64,
}

#[derive(Clone, Copy, Debug, Default)]
struct PointSums {
    f: f64,
    pert: f64,
    external: f64,
    /// `Σ (⟨dF, ψ⟩ − 2F + ε(α₂−2)|ψ|^{α₂})`.
    ps_rhs: f64,
}

/// `J_ε` for one parameter set and model on one discretization.
#[derive(Clone, Debug)]
pub struct ActionFunctional<'a> {
    space: &'a SpinorSpace,
    params: ProblemParams,
    model: NonlinearityModel,
    potential: Option<Vec<f64>>,
}

impl<'a> ActionFunctional<'a> {
    pub fn new(space: &'a SpinorSpace, params: &ProblemParams, model: &NonlinearityModel) -> Result<Self> {
        params.validate()?;
        if params.lattice != *space.lattice() {
            return Err(Error::InvalidParams("parameters and space disagree on the lattice".into()));
        }
        if params.mass != space.mass() {
            return Err(Error::InvalidParams(format!(
                "parameters use mass {}, space was built for {}",
                params.mass,
                space.mass()
            )));
        }
        let potential = params.external.as_ref().map(|e| e.on_grid(space)).transpose()?;
        Ok(ActionFunctional {
            space,
            params: params.clone(),
            model: model.clone(),
            potential,
        })
    }

    pub fn space(&self) -> &'a SpinorSpace {
        self.space
    }

    pub fn params(&self) -> &ProblemParams {
        &self.params
    }

    pub fn model(&self) -> &NonlinearityModel {
        &self.model
    }

    pub fn eps(&self) -> f64 {
        self.params.eps
    }

    pub fn potential(&self) -> Option<&[f64]> {
        self.potential.as_deref()
    }

    /// Same functional at another `ε`.
    pub fn with_eps(&self, eps: f64) -> Result<Self> {
        let mut out = self.clone();
        out.params = self.params.with_eps(eps)?;
        Ok(out)
    }

    fn alpha2(&self) -> f64 {
        self.model.constants.alpha2
    }

    /// Pointwise sums and, optionally, the pointwise gradient
    /// `dF + εα₂|ψ|^{α₂−2}ψ + Mψ`.
    fn pointwise(&self, grid: &GridField, want_grad: bool) -> (PointSums, Option<GridField>) {
        let eps = self.params.eps;
        let a2 = self.alpha2();
        let mut sums = PointSums::default();
        let mut grad = want_grad.then(|| Vec::with_capacity(grid.values.len()));
        for (j, psi) in grid.values.iter().enumerate() {
            let n2 = psi.norm_sqr();
            let (f, mut g) = if want_grad {
                self.model.value_and_gradient(psi)
            } else {
                (self.model.value(psi), Spinor4::ZERO)
            };
            let pert = if n2 > 0.0 { n2.powf(0.5 * a2) } else { 0.0 };
            sums.f += f;
            sums.pert += pert;
            if let Some(m) = &self.potential {
                sums.external += 0.5 * m[j] * n2;
            }
            if let Some(out) = grad.as_mut() {
                sums.ps_rhs += g.real_dot(psi) - 2.0 * f + eps * (a2 - 2.0) * pert;
                if n2 > 0.0 && eps != 0.0 {
                    g += *psi * (eps * a2 * pert / n2);
                }
                if let Some(m) = &self.potential {
                    g += *psi * m[j];
                }
                out.push(g);
            }
        }
        let w = self.space.cell_volume();
        sums.f *= w;
        sums.pert *= w;
        sums.external *= w;
        sums.ps_rhs *= w;
        let grad = grad.map(|values| GridField {
            dims: grid.dims,
            values,
        });
        (sums, grad)
    }

    fn quadratic(&self, f: &SpinorField) -> (f64, f64) {
        let kinetic = 0.5 * self.space.dirac_form(f);
        let mass_term = 0.5 * self.params.frequency * self.space.inner_l2(f, f);
        (kinetic, mass_term)
    }

    /// `J_ε(ψ)` alone.
    pub fn value(&self, f: &SpinorField) -> f64 {
        let (kinetic, mass_term) = self.quadratic(f);
        let (s, _) = self.pointwise(&self.space.to_grid(f), false);
        kinetic - mass_term - s.external - s.f - self.params.eps * s.pert
    }

    /// `J_ε(ψ)` and the residual from one grid pass.
    pub fn value_and_residual(&self, f: &SpinorField) -> (f64, SpinorField) {
        let (b, r, _) = self.full(f);
        (b.j_eps, r)
    }

    fn full(&self, f: &SpinorField) -> (EvaluationBundle, SpinorField, PointSums) {
        let (kinetic, mass_term) = self.quadratic(f);
        let (s, grad) = self.pointwise(&self.space.to_grid(f), true);
        let (g_modes, tail) = self.space.to_modes(&grad.expect("gradient requested"));
        let mut r = self.space.apply_dirac(f);
        r.axpy(-self.params.frequency, f);
        r -= &g_modes;
        let bundle = EvaluationBundle {
            j_eps: kinetic - mass_term - s.external - s.f - self.params.eps * s.pert,
            kinetic,
            mass_term,
            external_term: s.external,
            f_int: s.f,
            pert_int: s.pert,
            residual_dual: self.space.dual_norm(&r),
            aliasing_tail: tail,
        };
        (bundle, r, s)
    }

    pub fn evaluate(&self, f: &SpinorField) -> EvaluationBundle {
        self.full(f).0
    }

    /// Euler-Lagrange residual `Dψ − aψ − Mψ − dF(ψ) − εα₂|ψ|^{α₂−2}ψ`,
    /// the L²-gradient of `J_ε`.
    pub fn residual(&self, f: &SpinorField) -> SpinorField {
        self.full(f).1
    }

    /// Gradient in the energy metric, `|D|^{-1} r`.
    pub fn grad_energy(&self, f: &SpinorField) -> SpinorField {
        self.space.apply_abs_dirac_pow(&self.residual(f), -1.0)
    }

    /// `dJ_ε(ψ)[v]`.
    pub fn directional_derivative(&self, f: &SpinorField, v: &SpinorField) -> f64 {
        self.space.inner_l2(&self.residual(f), v)
    }

    pub fn ps_identity(&self, f: &SpinorField) -> PsIdentity {
        let (b, r, s) = self.full(f);
        let lhs = 2.0 * b.j_eps - self.space.inner_l2(&r, f);
        PsIdentity {
            lhs,
            rhs: s.ps_rhs,
            gap: lhs - s.ps_rhs,
        }
    }

    /// `∫⟨dF_ε(ψ), ψ⟩` with `F_ε = F + ε|ψ|^{α₂}`.
    pub fn pairing(&self, f: &SpinorField) -> f64 {
        let g = self.space.to_grid(f);
        let eps = self.params.eps;
        let a2 = self.alpha2();
        g.values
            .iter()
            .map(|p| self.model.gradient(p).real_dot(p) + eps * a2 * p.norm_sqr().powf(0.5 * a2))
            .sum::<f64>()
            * self.space.cell_volume()
    }

    /// Linearization of the residual at `f`, with the power model smoothed
    /// by `smoothing` so that the null cone is harmless.
    pub fn linearize(&self, f: &SpinorField, smoothing: f64) -> Linearization<'_> {
        Linearization {
            functional: self,
            grid: self.space.to_grid(f),
            model: if smoothing > 0.0 {
                self.model.smoothed(smoothing)
            } else {
                self.model.clone()
            },
        }
    }
}

/// `v ↦ Dv − av − P[(M + F''(ψ) + εα₂ H_pert(ψ))v]`, real-linear.
pub struct Linearization<'f> {
    functional: &'f ActionFunctional<'f>,
    grid: GridField,
    model: NonlinearityModel,
}

impl Linearization<'_> {
    pub fn apply(&self, v: &SpinorField) -> Result<SpinorField> {
        let fun = self.functional;
        let space = fun.space;
        let vg = space.to_grid(v);
        let eps = fun.params.eps;
        let a2 = fun.alpha2();
        let mut out = Vec::with_capacity(vg.values.len());
        for (j, (psi, w)) in self.grid.values.iter().zip(&vg.values).enumerate() {
            let mut h = self.model.hessian_apply(psi, w)?;
            let n2 = psi.norm_sqr();
            if eps != 0.0 && n2 > 0.0 {
                let base = n2.powf(0.5 * a2 - 1.0);
                h += *w * (eps * a2 * base);
                h += *psi * (eps * a2 * (a2 - 2.0) * base / n2 * psi.real_dot(w));
            }
            if let Some(m) = &fun.potential {
                h += *w * m[j];
            }
            out.push(h);
        }
        let (h_modes, _) = space.to_modes(&GridField {
            dims: vg.dims,
            values: out,
        });
        let mut r = space.apply_dirac(v);
        r.axpy(-fun.params.frequency, v);
        r -= &h_modes;
        Ok(r)
    }
}

/// Computed bracket `c₁ < Λ < c₂` for the linking level.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LevelBracket {
    /// Sphere floor `C*`.
    pub c1: f64,
    /// Upper estimate: the polished sup with a 5% margin.
    pub c2: f64,
    /// Largest `J₀` among the low-discrepancy samples.
    pub sample_max: f64,
    /// Sup after local ascent from the best sample.
    pub polished_max: f64,
    pub samples: usize,
}

const C2_MARGIN: f64 = 1.05;

/// Estimates the sup of `J₀` over the cylinder by graded low-discrepancy
/// sampling followed by a compass search, and pairs it with the sphere
/// floor. `J₀` dominates every `J_ε`, so the bracket holds for all `ε`.
pub fn level_bracket(
    functional: &ActionFunctional<'_>,
    geometry: &LinkingGeometry,
    samples: usize,
) -> Result<LevelBracket> {
    if !(geometry.small_r < geometry.big_r) {
        return Err(Error::DegenerateGeometry(format!(
            "requires r < R, got r = {}, R = {}",
            geometry.small_r, geometry.big_r
        )));
    }
    let space = functional.space();
    let j0 = functional.with_eps(0.0)?;
    let dim = geometry.real_dim();
    let big_r = geometry.big_r;
    let eval = |x: &[f64]| j0.value(&geometry.cylinder_point(space, &x[..dim], x[dim]));

    // Grading toward small λ and small ψ⁻, where the top of the cylinder sits.
    let mut best_x = vec![0.0; dim + 1];
    let mut sample_max = f64::NEG_INFINITY;
    for i in 0..samples as u64 {
        let lambda = big_r * rng::halton(i, 0).powi(2);
        let radius = big_r * rng::halton(i, 1).powi(3);
        let mut x: Vec<f64> = halton_direction(i, 2, dim).into_iter().map(|c| c * radius).collect();
        x.push(lambda);
        let v = eval(&x);
        if v > sample_max {
            sample_max = v;
            best_x = x;
        }
    }

    let inside = |x: &[f64]| {
        let n2: f64 = x[..dim].iter().map(|c| c * c).sum();
        n2 <= big_r * big_r && (0.0..=big_r).contains(&x[dim])
    };
    let mut value = sample_max;
    let mut h = 0.05 * big_r;
    while h > 1e-7 * big_r {
        let mut moved = false;
        for c in 0..=dim {
            for sign in [1.0, -1.0] {
                let mut y = best_x.clone();
                y[c] += sign * h;
                if !inside(&y) {
                    continue;
                }
                let v = eval(&y);
                if v > value {
                    value = v;
                    best_x = y;
                    moved = true;
                }
            }
        }
        if !moved {
            h *= 0.5;
        }
    }
    if !(value.is_finite() && value > 0.0) {
        return Err(Error::DegenerateGeometry(format!("cylinder sup {value} is not positive")));
    }
    Ok(LevelBracket {
        c1: geometry.c_star,
        c2: C2_MARGIN * value,
        sample_max,
        polished_max: value,
        samples,
    })
}
