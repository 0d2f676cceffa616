//! The linking pair: a cylinder over the truncated negative space plus the
//! ray through `e`, and a small sphere in the positive space.
//!
//! The cylinder is `{ψ⁻ + λe : ‖ψ⁻‖_E ≤ R, 0 ≤ λ ≤ R}` with `ψ⁻` restricted
//! to the negative eigendirections whose eigenvalue magnitude is at most the
//! configured cutoff. The sphere is `{ψ ∈ P⁺ : ‖ψ‖_E = r}`. On the cylinder's
//! boundary the action is nonpositive and on the sphere it stays above the
//! floor `C*`.

use num_complex::Complex64;

use crate::clifford::Spinor4;
use crate::error::{Error, Result};
use crate::field::{NormKind, Sign, SpinorField, SpinorSpace};
use crate::functional::ActionFunctional;
use crate::nonlinear::HypothesisConstants;
use crate::rng;

/// One eigendirection of the truncated negative space.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NegativeDirection {
    pub mode: usize,
    /// Eigenvector column, 2 or 3.
    pub column: usize,
    pub lambda: f64,
}

/// Sampled embedding constant `S_q` with `‖ψ‖_{L^q} ≤ S_q‖ψ‖_E` on `P⁺`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EmbeddingEstimate {
    pub exponent: f64,
    pub sampled_max: f64,
    /// `sampled_max` with the safety factor applied.
    pub constant: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GeometryConfig {
    /// Negative directions with `|λ| ≤ neg_cutoff·m` span the cylinder.
    pub neg_cutoff: f64,
    pub embed_samples: usize,
    pub seed: u64,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        GeometryConfig {
            neg_cutoff: 3.0,
            embed_samples: 200,
            seed: 1,
        }
    }
}

#[derive(Clone, Debug)]
pub struct LinkingGeometry {
    /// Unit-energy constant spinor `(1, 0, 0, 0)/√(m·vol)`.
    pub e: SpinorField,
    pub big_r: f64,
    pub small_r: f64,
    pub c_star: f64,
    pub negative: Vec<NegativeDirection>,
    pub embeddings: [EmbeddingEstimate; 2],
}

const EMBEDDING_SAFETY: f64 = 2.0;
const RADIUS_MARGIN: f64 = 1.05;

/// Largest root `R₀` of `½R² − A₃vol^{1−ν}(2m)^{−ν}R^{2ν} + A₄vol`.
pub fn big_r_root(constants: &HypothesisConstants, volume: f64, mass: f64) -> Result<f64> {
    let nu = constants.nu;
    let a3 = constants.a3;
    let a4 = constants.a4;
    if !(nu > 1.0 && a3 > 0.0 && a4 >= 0.0 && volume > 0.0 && mass > 0.0) {
        return Err(Error::DegenerateGeometry(format!(
            "cylinder radius needs nu > 1, A3 > 0, A4 >= 0; got nu = {nu}, A3 = {a3}, A4 = {a4}"
        )));
    }
    let c = a3 * volume.powf(1.0 - nu) * (2.0 * mass).powf(-nu);
    let g = |r: f64| 0.5 * r * r - c * r.powf(2.0 * nu) + a4 * volume;
    // g rises up to its critical point and falls after it, so the largest
    // root lies beyond that point.
    let mut lo = (1.0 / (2.0 * nu * c)).powf(1.0 / (2.0 * nu - 2.0));
    let mut hi = 2.0 * lo;
    while g(hi) > 0.0 {
        lo = hi;
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(Error::DegenerateGeometry("no positive root for the cylinder radius".into()));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Cylinder radius `R`, the root `R₀` with a 5% margin.
pub fn choose_big_r(constants: &HypothesisConstants, volume: f64, mass: f64) -> Result<f64> {
    Ok(RADIUS_MARGIN * big_r_root(constants, volume, mass)?)
}

/// Lower bound for the action on the positive sphere of radius `r`, valid
/// for every `ε ∈ [0, 1]`:
/// `½κr² − A₁(S₁^{α₁}r^{α₁} + S₂^{α₂}r^{α₂}) − S₂^{α₂}r^{α₂}`
/// with `κ = 1 − max(a + M)/m`.
pub fn sphere_floor(kappa: f64, constants: &HypothesisConstants, s: [f64; 2], r: f64) -> f64 {
    let (a1, al1, al2) = (constants.a1, constants.alpha1, constants.alpha2);
    let t1 = s[0].powf(al1) * r.powf(al1);
    let t2 = s[1].powf(al2) * r.powf(al2);
    0.5 * kappa * r * r - a1 * (t1 + t2) - t2
}

/// Maximizer of `sphere_floor` over `(0, r_cap]` and its value.
pub fn maximize_sphere_floor(
    kappa: f64,
    constants: &HypothesisConstants,
    s: [f64; 2],
    r_cap: f64,
) -> Result<(f64, f64)> {
    let (a1, al1, al2) = (constants.a1, constants.alpha1, constants.alpha2);
    let k1 = a1 * al1 * s[0].powf(al1);
    let k2 = (a1 + 1.0) * al2 * s[1].powf(al2);
    // φ'(r)/r, strictly decreasing because both exponents exceed 2.
    let slope = |r: f64| kappa - k1 * r.powf(al1 - 2.0) - k2 * r.powf(al2 - 2.0);
    if !(kappa > 0.0) {
        return Err(Error::DegenerateGeometry(format!(
            "quadratic coefficient 1 - max(a+M)/m = {kappa} is not positive"
        )));
    }
    let r = if slope(r_cap) >= 0.0 {
        r_cap
    } else {
        let (mut lo, mut hi) = (0.0, r_cap);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if slope(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };
    let floor = sphere_floor(kappa, constants, s, r);
    if !(floor > 0.0) {
        return Err(Error::DegenerateGeometry(format!(
            "sphere floor {floor:e} is not positive; the hypothesis constants are too weak at this truncation"
        )));
    }
    Ok((r, floor))
}

/// Samples `‖ψ‖_{L^q}/‖ψ‖_E` over random positive-space fields and `e`.
pub fn estimate_embedding(space: &SpinorSpace, e: &SpinorField, q: f64, samples: usize, seed: u64) -> EmbeddingEstimate {
    let mut rng = rng::stream(seed, "embedding");
    let ratio = |f: &SpinorField| space.norm(f, NormKind::Lq(q)) / space.norm(f, NormKind::Energy);
    let mut best = ratio(e);
    for i in 0..samples {
        // Alternate smooth and rough draws; the smooth ones dominate in practice.
        let decay = if i % 2 == 0 { 2.0 } else { 0.5 };
        let f = space.project(&space.random_field(&mut rng, decay), Sign::Positive);
        let r = ratio(&f);
        if r.is_finite() {
            best = best.max(r);
        }
    }
    EmbeddingEstimate {
        exponent: q,
        sampled_max: best,
        constant: EMBEDDING_SAFETY * best,
    }
}

impl LinkingGeometry {
    pub fn build(functional: &ActionFunctional<'_>, config: &GeometryConfig) -> Result<Self> {
        let space = functional.space();
        let params = functional.params();
        let constants = &functional.model().constants;
        let m = space.mass();
        let vol = space.volume();
        let big_r = choose_big_r(constants, vol, m)?;

        let e = space.constant(Spinor4::unit(0) * (1.0 / (m * vol).sqrt()));

        let cutoff = config.neg_cutoff * m;
        let mut negative = Vec::new();
        for (idx, b) in space.bases().iter().enumerate() {
            if b.lambda_neg.abs() <= cutoff * (1.0 + 1e-12) {
                for column in [2, 3] {
                    negative.push(NegativeDirection {
                        mode: idx,
                        column,
                        lambda: b.lambda_neg,
                    });
                }
            }
        }
        if negative.is_empty() {
            return Err(Error::DegenerateGeometry(format!(
                "no negative directions below |lambda| = {cutoff}"
            )));
        }

        let embeddings = [constants.alpha1, constants.alpha2].map(|q| {
            estimate_embedding(space, &e, q, config.embed_samples, config.seed)
        });
        let kappa = 1.0 - (params.frequency + params.max_external()) / m;
        let s = [embeddings[0].constant, embeddings[1].constant];
        let (small_r, c_star) = maximize_sphere_floor(kappa, constants, s, 0.5 * big_r)?;

        let geom = LinkingGeometry {
            e,
            big_r,
            small_r,
            c_star,
            negative,
            embeddings,
        };
        geom.validate(space)?;
        Ok(geom)
    }

    /// Complex dimension of the truncated negative space.
    pub fn neg_dim(&self) -> usize {
        self.negative.len()
    }

    /// Real coordinates needed to describe `ψ⁻`.
    pub fn real_dim(&self) -> usize {
        2 * self.negative.len()
    }

    pub fn validate(&self, space: &SpinorSpace) -> Result<()> {
        let e_norm = space.norm(&self.e, NormKind::Energy);
        let neg = space.norm(&space.project(&self.e, Sign::Negative), NormKind::L2);
        if (e_norm - 1.0).abs() > 1e-12 || neg > 1e-12 {
            return Err(Error::DegenerateGeometry(format!(
                "e must be a unit positive field, has ‖e‖_E = {e_norm}, ‖P⁻e‖ = {neg:e}"
            )));
        }
        if !(0.0 < self.small_r && self.small_r < self.big_r) {
            return Err(Error::DegenerateGeometry(format!(
                "requires 0 < r < R, got r = {}, R = {}",
                self.small_r, self.big_r
            )));
        }
        if !(self.c_star > 0.0) {
            return Err(Error::DegenerateGeometry(format!("sphere floor {} is not positive", self.c_star)));
        }
        Ok(())
    }

    /// `ψ⁻` from real coordinates; the E-norm of the result equals the
    /// Euclidean norm of `coords`.
    pub fn negative_field(&self, space: &SpinorSpace, coords: &[f64]) -> SpinorField {
        assert_eq!(coords.len(), self.real_dim(), "coordinate count");
        let mut f = space.zeros();
        let vol = space.volume();
        for (d, pair) in self.negative.iter().zip(coords.chunks_exact(2)) {
            let basis = &space.bases()[d.mode];
            let w = Complex64::new(pair[0], pair[1]) / (d.lambda.abs() * vol).sqrt();
            let col = basis.column(d.column);
            let c = &mut f.coeffs[d.mode];
            for (k, z) in c.0.iter_mut().enumerate() {
                *z += w * col[k];
            }
        }
        f
    }

    /// `ψ⁻ + λe`.
    pub fn cylinder_point(&self, space: &SpinorSpace, coords: &[f64], lambda: f64) -> SpinorField {
        let mut f = self.negative_field(space, coords);
        f.axpy(lambda, &self.e);
        f
    }
}

/// Deterministic direction on the unit sphere of `R^dim`.
pub(crate) fn halton_direction(index: u64, first_dim: usize, dim: usize) -> Vec<f64> {
    let mut v = rng::halton_gaussian(index, first_dim, dim);
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    } else {
        v[0] = 1.0;
    }
    v
}

#[derive(Clone, Debug, PartialEq)]
pub struct FaceAudit {
    pub name: &'static str,
    pub samples: usize,
    pub max_value: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryAudit {
    pub faces: Vec<FaceAudit>,
    pub max_value: f64,
    pub passed: bool,
}

pub const BOUNDARY_TOL: f64 = 1e-9;

/// Samples the three boundary pieces of the cylinder and reports the largest
/// action found on each.
pub fn boundary_audit(
    functional: &ActionFunctional<'_>,
    geometry: &LinkingGeometry,
    samples: usize,
) -> BoundaryAudit {
    let space = functional.space();
    let dim = geometry.real_dim();
    let big_r = geometry.big_r;
    let per_face = samples.div_ceil(3).max(1);
    let mut faces = Vec::with_capacity(3);
    for (face, name) in ["side |psi-| = R", "bottom lambda = 0", "top lambda = R"].into_iter().enumerate() {
        let mut max_value = f64::NEG_INFINITY;
        for i in 0..per_face as u64 {
            let dir = halton_direction(i, 0, dim);
            let u = rng::halton(i, dim + 1);
            let v = rng::halton(i, dim + 2);
            let (radius, lambda) = match face {
                0 => (big_r, big_r * u),
                1 => (big_r * v.powf(1.0 / dim as f64), 0.0),
                _ => (big_r * v.powf(1.0 / dim as f64), big_r),
            };
            let coords: Vec<f64> = dir.iter().map(|x| x * radius).collect();
            let j = functional.value(&geometry.cylinder_point(space, &coords, lambda));
            max_value = max_value.max(j);
        }
        faces.push(FaceAudit {
            name,
            samples: per_face,
            max_value,
        });
    }
    let max_value = faces.iter().map(|f| f.max_value).fold(f64::NEG_INFINITY, f64::max);
    BoundaryAudit {
        faces,
        max_value,
        passed: max_value <= BOUNDARY_TOL,
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SphereAudit {
    pub samples: usize,
    pub min_value: f64,
    pub floor: f64,
    pub passed: bool,
}

pub const SPHERE_TOL: f64 = 1e-9;

/// Samples the positive sphere of radius `r` and compares the smallest action
/// with the floor `C*`. Every fourth sample is a constant upper spinor, the
/// direction where the nonlinearity bites hardest.
pub fn sphere_audit(
    functional: &ActionFunctional<'_>,
    geometry: &LinkingGeometry,
    samples: usize,
    seed: u64,
) -> SphereAudit {
    let space = functional.space();
    let mut rng = rng::stream(seed, "sphere-audit");
    let mut min_value = f64::INFINITY;
    for i in 0..samples {
        let f = if i % 4 == 0 {
            let z: Vec<f64> = (0..4).map(|_| rng::normal(&mut rng)).collect();
            space.constant(Spinor4::new([
                Complex64::new(z[0], z[1]),
                Complex64::new(z[2], z[3]),
                Complex64::ZERO,
                Complex64::ZERO,
            ]))
        } else {
            let decay = if i % 2 == 0 { 2.0 } else { 0.5 };
            space.project(&space.random_field(&mut rng, decay), Sign::Positive)
        };
        let norm = space.norm(&f, NormKind::Energy);
        if !(norm > 0.0) {
            continue;
        }
        let j = functional.value(&f.scaled(geometry.small_r / norm));
        min_value = min_value.min(j);
    }
    SphereAudit {
        samples,
        min_value,
        floor: geometry.c_star,
        passed: min_value >= geometry.c_star - SPHERE_TOL,
    }
}
