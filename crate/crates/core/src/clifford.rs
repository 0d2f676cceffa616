//! Dirac-representation gamma matrices and the spinor bilinears.
//!
//! Conventions: `γ⁰ = diag(1, 1, -1, -1)`, `γᵏ = [[0, σₖ], [-σₖ, 0]]` and
//! `γ⁵ = γ⁰γ¹γ²γ³`. The inner product on ℂ⁴ is antilinear in its first slot.

use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type Matrix2 = nalgebra::Matrix2<Complex64>;
pub type Matrix4 = nalgebra::Matrix4<Complex64>;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Pauli matrix `σₖ`, `k ∈ {1, 2, 3}`.
pub fn pauli(k: usize) -> Result<Matrix2> {
    match k {
        1 => Ok(Matrix2::new(ZERO, ONE, ONE, ZERO)),
        2 => Ok(Matrix2::new(ZERO, -I, I, ZERO)),
        3 => Ok(Matrix2::new(ONE, ZERO, ZERO, -ONE)),
        _ => Err(Error::InvalidIndex(format!("Pauli index {k} not in 1..=3"))),
    }
}

fn blocks(tl: Matrix2, tr: Matrix2, bl: Matrix2, br: Matrix2) -> Matrix4 {
    let mut out = Matrix4::zeros();
    out.fixed_view_mut::<2, 2>(0, 0).copy_from(&tl);
    out.fixed_view_mut::<2, 2>(0, 2).copy_from(&tr);
    out.fixed_view_mut::<2, 2>(2, 0).copy_from(&bl);
    out.fixed_view_mut::<2, 2>(2, 2).copy_from(&br);
    out
}

/// Gamma matrix `γ^μ`, `μ ∈ {0, 1, 2, 3}`.
pub fn gamma(mu: usize) -> Result<Matrix4> {
    let z = Matrix2::zeros();
    let id = Matrix2::identity();
    match mu {
        0 => Ok(blocks(id, z, z, -id)),
        1..=3 => {
            let s = pauli(mu)?;
            Ok(blocks(z, s, -s, z))
        }
        _ => Err(Error::InvalidIndex(format!("gamma index {mu} not in 0..=3"))),
    }
}

fn gamma_unchecked(mu: usize) -> Matrix4 {
    gamma(mu).expect("index in range")
}

/// `γ⁵ = γ⁰γ¹γ²γ³`.
pub fn gamma5() -> Matrix4 {
    gamma_unchecked(0) * gamma_unchecked(1) * gamma_unchecked(2) * gamma_unchecked(3)
}

/// Velocity matrix `αₖ = γ⁰γᵏ`, Hermitian.
pub fn alpha(k: usize) -> Result<Matrix4> {
    if !(1..=3).contains(&k) {
        return Err(Error::InvalidIndex(format!("alpha index {k} not in 1..=3")));
    }
    Ok(gamma_unchecked(0) * gamma_unchecked(k))
}

/// A four-component spinor value.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Spinor4(pub [Complex64; 4]);

impl Spinor4 {
    pub const ZERO: Spinor4 = Spinor4([ZERO; 4]);

    pub fn new(c: [Complex64; 4]) -> Self {
        Spinor4(c)
    }

    pub fn from_real(c: [f64; 4]) -> Self {
        Spinor4(c.map(|x| Complex64::new(x, 0.0)))
    }

    /// Canonical basis vector `e_k`, `k ∈ 0..4`.
    pub fn unit(k: usize) -> Self {
        let mut s = Self::ZERO;
        s.0[k] = ONE;
        s
    }

    pub fn up(&self) -> [Complex64; 2] {
        [self.0[0], self.0[1]]
    }

    pub fn low(&self) -> [Complex64; 2] {
        [self.0[2], self.0[3]]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Hermitian product `Σ conj(selfᵢ)·otherᵢ`.
    pub fn dot(&self, other: &Spinor4) -> Complex64 {
        self.0.iter().zip(&other.0).map(|(a, b)| a.conj() * b).sum()
    }

    /// Real inner product on ℂ⁴ ≅ ℝ⁸.
    pub fn real_dot(&self, other: &Spinor4) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| a.re * b.re + a.im * b.im)
            .sum()
    }

    /// `γ⁰ψ`.
    pub fn gamma0(&self) -> Spinor4 {
        let c = self.0;
        Spinor4([c[0], c[1], -c[2], -c[3]])
    }

    /// `γ⁰γ⁵ψ`; the matrix is `-i[[0, I], [-I, 0]]`.
    pub fn gamma0_gamma5(&self) -> Spinor4 {
        let c = self.0;
        Spinor4([-I * c[2], -I * c[3], I * c[0], I * c[1]])
    }

    pub fn apply(&self, m: &Matrix4) -> Spinor4 {
        let v = m * self.to_vector();
        Spinor4([v[0], v[1], v[2], v[3]])
    }

    pub fn to_vector(&self) -> nalgebra::Vector4<Complex64> {
        nalgebra::Vector4::new(self.0[0], self.0[1], self.0[2], self.0[3])
    }

    pub fn from_vector(v: &nalgebra::Vector4<Complex64>) -> Self {
        Spinor4([v[0], v[1], v[2], v[3]])
    }

    pub fn scale(&self, s: f64) -> Spinor4 {
        Spinor4(self.0.map(|c| c * s))
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }
}

impl Add for Spinor4 {
    type Output = Spinor4;
    fn add(self, o: Spinor4) -> Spinor4 {
        Spinor4(std::array::from_fn(|i| self.0[i] + o.0[i]))
    }
}

impl Sub for Spinor4 {
    type Output = Spinor4;
    fn sub(self, o: Spinor4) -> Spinor4 {
        Spinor4(std::array::from_fn(|i| self.0[i] - o.0[i]))
    }
}

impl AddAssign for Spinor4 {
    fn add_assign(&mut self, o: Spinor4) {
        for (a, b) in self.0.iter_mut().zip(o.0) {
            *a += b;
        }
    }
}

impl SubAssign for Spinor4 {
    fn sub_assign(&mut self, o: Spinor4) {
        for (a, b) in self.0.iter_mut().zip(o.0) {
            *a -= b;
        }
    }
}

impl Neg for Spinor4 {
    type Output = Spinor4;
    fn neg(self) -> Spinor4 {
        Spinor4(self.0.map(|c| -c))
    }
}

impl Mul<f64> for Spinor4 {
    type Output = Spinor4;
    fn mul(self, s: f64) -> Spinor4 {
        self.scale(s)
    }
}

impl Mul<Complex64> for Spinor4 {
    type Output = Spinor4;
    fn mul(self, s: Complex64) -> Spinor4 {
        Spinor4(self.0.map(|c| c * s))
    }
}

/// `ψ̄ψ = ⟨γ⁰ψ, ψ⟩ = |ψ_up|² − |ψ_low|²`.
pub fn dirac_bilinear(psi: &Spinor4) -> f64 {
    let c = psi.0;
    c[0].norm_sqr() + c[1].norm_sqr() - c[2].norm_sqr() - c[3].norm_sqr()
}

/// `⟨γ⁰γ⁵ψ, ψ⟩`.
///
/// `γ⁰γ⁵` is Hermitian in this representation, so the value is real; it is
/// returned as a complex number with zero imaginary part. Closed form:
/// `2·Im(conj(ψ¹)ψ³ + conj(ψ²)ψ⁴)`.
pub fn gamma5_bilinear(psi: &Spinor4) -> Complex64 {
    let c = psi.0;
    let w = c[0].conj() * c[2] + c[1].conj() * c[3];
    Complex64::new(2.0 * w.im, 0.0)
}

/// Outcome of one algebraic relation.
#[derive(Clone, Debug)]
pub struct IdentityCheck {
    pub name: String,
    /// Largest entry of the difference between the two sides.
    pub max_deviation: f64,
    pub passed: bool,
}

#[derive(Clone, Debug)]
pub struct CliffordReport {
    /// Anticommutation relations, all of which must hold exactly.
    pub identities: Vec<IdentityCheck>,
    /// Hermiticity of `α₁, α₂, α₃`.
    pub hermiticity: Vec<IdentityCheck>,
}

impl CliffordReport {
    pub fn all_passed(&self) -> bool {
        self.identities.iter().chain(&self.hermiticity).all(|c| c.passed)
    }

    pub fn failures(&self) -> Vec<&str> {
        self.identities
            .iter()
            .chain(&self.hermiticity)
            .filter(|c| !c.passed)
            .map(|c| c.name.as_str())
            .collect()
    }
}

/// A set of Pauli and gamma matrices to be checked. Built from the standard
/// representation, or supplied by hand to exercise the checker.
#[derive(Clone, Debug)]
pub struct CliffordSet {
    pub sigma: [Matrix2; 3],
    pub gamma: [Matrix4; 4],
}

fn max_entry<'a>(entries: impl IntoIterator<Item = &'a Complex64>) -> f64 {
    entries.into_iter().map(|c| c.norm()).fold(0.0, f64::max)
}

fn check(name: String, deviation: f64) -> IdentityCheck {
    IdentityCheck {
        name,
        max_deviation: deviation,
        passed: deviation == 0.0,
    }
}

impl CliffordSet {
    pub fn standard() -> Self {
        CliffordSet {
            sigma: [1, 2, 3].map(|k| pauli(k).expect("index in range")),
            gamma: [0, 1, 2, 3].map(gamma_unchecked),
        }
    }

    /// Checks, with zero tolerance:
    /// `σʲσᵏ + σᵏσʲ = 2δ I₂` (6), `γʲγᵏ + γᵏγʲ = -2δ I₄` (6),
    /// `γ⁰γᵏ + γᵏγ⁰ = 0` (3), `(γ⁰)² = I₄` (1) and
    /// `(-iγ⁰γᵏ)(-iγ⁰γʲ) + (-iγ⁰γʲ)(-iγ⁰γᵏ) = -2δ I₄` (6),
    /// plus Hermiticity of each `γ⁰γᵏ`.
    pub fn verify(&self) -> CliffordReport {
        let mut identities = Vec::with_capacity(22);
        let id2 = Matrix2::identity();
        let id4 = Matrix4::identity();
        let delta = |j: usize, k: usize| if j == k { 1.0 } else { 0.0 };

        for j in 0..3 {
            for k in j..3 {
                let (a, b) = (&self.sigma[j], &self.sigma[k]);
                let lhs = a * b + b * a;
                let rhs = id2 * Complex64::new(2.0 * delta(j, k), 0.0);
                identities.push(check(
                    format!("sigma{}·sigma{} + sigma{}·sigma{} = {}I2", j + 1, k + 1, k + 1, j + 1, 2.0 * delta(j, k)),
                    max_entry((lhs - rhs).iter()),
                ));
            }
        }
        for j in 1..4 {
            for k in j..4 {
                let (a, b) = (&self.gamma[j], &self.gamma[k]);
                let lhs = a * b + b * a;
                let rhs = id4 * Complex64::new(-2.0 * delta(j, k), 0.0);
                identities.push(check(
                    format!("gamma{j}·gamma{k} + gamma{k}·gamma{j} = {}I4", -2.0 * delta(j, k)),
                    max_entry((lhs - rhs).iter()),
                ));
            }
        }
        let g0 = &self.gamma[0];
        for k in 1..4 {
            let gk = &self.gamma[k];
            identities.push(check(
                format!("gamma0·gamma{k} + gamma{k}·gamma0 = 0"),
                max_entry((g0 * gk + gk * g0).iter()),
            ));
        }
        identities.push(check("gamma0·gamma0 = I4".into(), max_entry((g0 * g0 - id4).iter())));

        let rotated: Vec<Matrix4> = (1..4).map(|k| g0 * self.gamma[k] * (-I)).collect();
        for j in 0..3 {
            for k in j..3 {
                let (a, b) = (&rotated[j], &rotated[k]);
                let lhs = a * b + b * a;
                let rhs = id4 * Complex64::new(-2.0 * delta(j, k), 0.0);
                identities.push(check(
                    format!("(-i·gamma0·gamma{})(-i·gamma0·gamma{}) anticommutator = {}I4", j + 1, k + 1, -2.0 * delta(j, k)),
                    max_entry((lhs - rhs).iter()),
                ));
            }
        }

        let hermiticity = (1..4)
            .map(|k| {
                let a = g0 * self.gamma[k];
                check(format!("alpha{k} Hermitian"), max_entry((a - a.adjoint()).iter()))
            })
            .collect();

        CliffordReport {
            identities,
            hermiticity,
        }
    }
}

/// Runs the relation checks on the standard representation.
pub fn verify_clifford() -> CliffordReport {
    CliffordSet::standard().verify()
}
