//! Spinor fields on the discretized torus.
//!
//! A field is stored by its Fourier coefficients on the truncated dual
//! lattice, `ψ(θ) = Σₙ cₙ exp(2πi ζₙ·θ)`, one [`Spinor4`] per mode in the
//! canonical order of [`enumerate_modes`]. Nonlinear terms are evaluated on an
//! oversampled collocation grid `θⱼ = (j₁l₁/N₁, j₂l₂/N₂, j₃l₃/N₃)`.
//!
//! The working norm is `‖ψ‖²_E = ⟨|D|ψ, ψ⟩_{L²}`. With
//! `‖ψ‖²_{H^{1/2}} = ‖ψ‖²_{L²} + ‖|D|^{1/2}ψ‖²_{L²}` and the gap `|λ| ≥ m`,
//! `‖ψ‖²_E ≤ ‖ψ‖²_{H^{1/2}} ≤ (1 + 1/m)‖ψ‖²_E`.

mod fft;
pub mod snapshot;

use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use nalgebra::Vector4;
use num_complex::Complex64;
use rand::Rng;

use crate::clifford::Spinor4;
use crate::error::{Error, Result};
use crate::spectral::{enumerate_modes, mode_eigenbasis, DualMode, LatticeSpec, ModeEigenBasis};
use fft::Fft3;

/// Fourier coefficients of a spinor field.
#[derive(Clone, Debug, PartialEq)]
pub struct SpinorField {
    pub coeffs: Vec<Spinor4>,
}

impl SpinorField {
    pub fn zeros(n_modes: usize) -> Self {
        SpinorField {
            coeffs: vec![Spinor4::ZERO; n_modes],
        }
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `self += a·x`.
    pub fn axpy(&mut self, a: f64, x: &SpinorField) {
        assert_eq!(self.len(), x.len());
        for (s, v) in self.coeffs.iter_mut().zip(&x.coeffs) {
            *s += *v * a;
        }
    }

    pub fn scaled(&self, a: f64) -> SpinorField {
        SpinorField {
            coeffs: self.coeffs.iter().map(|c| *c * a).collect(),
        }
    }

    pub fn phase_rotated(&self, theta: f64) -> SpinorField {
        let w = Complex64::from_polar(1.0, theta);
        SpinorField {
            coeffs: self.coeffs.iter().map(|c| *c * w).collect(),
        }
    }

    /// Real inner product of the raw coefficient vectors (no volume factor).
    pub fn coeff_dot(&self, other: &SpinorField) -> f64 {
        self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a.real_dot(b)).sum()
    }

    pub fn max_abs_diff(&self, other: &SpinorField) -> f64 {
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .flat_map(|(a, b)| (0..4).map(move |i| (a.0[i] - b.0[i]).norm()))
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(Spinor4::is_finite)
    }
}

impl Add<&SpinorField> for SpinorField {
    type Output = SpinorField;
    fn add(mut self, o: &SpinorField) -> SpinorField {
        self += o;
        self
    }
}

impl Sub<&SpinorField> for SpinorField {
    type Output = SpinorField;
    fn sub(mut self, o: &SpinorField) -> SpinorField {
        self -= o;
        self
    }
}

impl AddAssign<&SpinorField> for SpinorField {
    fn add_assign(&mut self, o: &SpinorField) {
        assert_eq!(self.len(), o.len());
        for (a, b) in self.coeffs.iter_mut().zip(&o.coeffs) {
            *a += *b;
        }
    }
}

impl SubAssign<&SpinorField> for SpinorField {
    fn sub_assign(&mut self, o: &SpinorField) {
        assert_eq!(self.len(), o.len());
        for (a, b) in self.coeffs.iter_mut().zip(&o.coeffs) {
            *a -= *b;
        }
    }
}

impl Mul<f64> for SpinorField {
    type Output = SpinorField;
    fn mul(mut self, s: f64) -> SpinorField {
        self.coeffs.iter_mut().for_each(|c| *c = *c * s);
        self
    }
}

impl Neg for SpinorField {
    type Output = SpinorField;
    fn neg(self) -> SpinorField {
        self * -1.0
    }
}

/// Point values of a spinor field on the collocation grid, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct GridField {
    pub dims: [usize; 3],
    pub values: Vec<Spinor4>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NormKind {
    L2,
    /// `⟨|D|ψ, ψ⟩^{1/2}`.
    Energy,
    /// Grid quadrature of `|ψ|^q`.
    Lq(f64),
    /// `Σ (1 + 4π²|ζ|²)|cₙ|²·vol`.
    H1,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sign {
    Positive,
    Negative,
}

/// `ψ = ψ⁺ + ψ⁻` with respect to the sign of the Dirac spectrum.
#[derive(Clone, Debug)]
pub struct EnergyDecomposition {
    pub pos: SpinorField,
    pub neg: SpinorField,
}

/// The discretization: lattice, truncation, collocation grid and mass, with
/// the per-mode eigenbases and FFT plans built once.
#[derive(Debug)]
pub struct SpinorSpace {
    lattice: LatticeSpec,
    grid: [usize; 3],
    mass: f64,
    modes: Vec<DualMode>,
    bases: Vec<ModeEigenBasis>,
    grid_index: Vec<usize>,
    fft: Fft3,
}

impl SpinorSpace {
    pub fn new(lattice: LatticeSpec, grid: [usize; 3], mass: f64) -> Result<Self> {
        let side = lattice.side();
        if grid.iter().any(|&n| n < side) {
            return Err(Error::InvalidGrid(format!(
                "grid {grid:?} too small for truncation K = {} (need at least {side} points per axis)",
                lattice.k
            )));
        }
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::InvalidParams(format!("mass must be positive, got {mass}")));
        }
        let modes = enumerate_modes(&lattice);
        let bases = modes
            .iter()
            .map(|m| mode_eigenbasis(m, mass))
            .collect::<Result<Vec<_>>>()?;
        let grid_index = modes
            .iter()
            .map(|m| {
                let w = |axis: usize| (m.n[axis] as i64).rem_euclid(grid[axis] as i64) as usize;
                (w(0) * grid[1] + w(1)) * grid[2] + w(2)
            })
            .collect();
        Ok(SpinorSpace {
            lattice,
            grid,
            mass,
            modes,
            bases,
            grid_index,
            fft: Fft3::new(grid),
        })
    }

    /// Grid with the default oversampling `N = 2(2K + 1)` on every axis.
    pub fn with_default_grid(lattice: LatticeSpec, mass: f64) -> Result<Self> {
        let n = 2 * lattice.side();
        Self::new(lattice, [n; 3], mass)
    }

    pub fn lattice(&self) -> &LatticeSpec {
        &self.lattice
    }

    pub fn grid(&self) -> [usize; 3] {
        self.grid
    }

    pub fn grid_len(&self) -> usize {
        self.grid.iter().product()
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn modes(&self) -> &[DualMode] {
        &self.modes
    }

    pub fn bases(&self) -> &[ModeEigenBasis] {
        &self.bases
    }

    pub fn n_modes(&self) -> usize {
        self.modes.len()
    }

    pub fn volume(&self) -> f64 {
        self.lattice.volume()
    }

    /// Quadrature weight of one grid point, `vol / (N₁N₂N₃)`.
    pub fn cell_volume(&self) -> f64 {
        self.volume() / self.grid_len() as f64
    }

    /// Index of the zero mode in the canonical order.
    pub fn zero_mode(&self) -> usize {
        self.n_modes() / 2
    }

    pub fn zeros(&self) -> SpinorField {
        SpinorField::zeros(self.n_modes())
    }

    pub fn constant(&self, value: Spinor4) -> SpinorField {
        let mut f = self.zeros();
        f.coeffs[self.zero_mode()] = value;
        f
    }

    /// `value·exp(2πi ζₙ·θ)`.
    pub fn plane_wave(&self, n: [i32; 3], value: Spinor4) -> Result<SpinorField> {
        let idx = self
            .lattice
            .mode_index(n)
            .ok_or_else(|| Error::InvalidIndex(format!("mode {n:?} outside the truncation")))?;
        let mut f = self.zeros();
        f.coeffs[idx] = value;
        Ok(f)
    }

    fn check(&self, f: &SpinorField) {
        assert_eq!(
            f.len(),
            self.n_modes(),
            "field has {} modes, space has {}",
            f.len(),
            self.n_modes()
        );
    }

    pub fn validate(&self, f: &SpinorField) -> Result<()> {
        if f.len() != self.n_modes() {
            return Err(Error::DimensionMismatch {
                expected: self.n_modes(),
                found: f.len(),
            });
        }
        Ok(())
    }

    /// Collocation point `θⱼ` for a flat grid index.
    pub fn grid_point(&self, flat: usize) -> [f64; 3] {
        let [_, n2, n3] = self.grid;
        let j = [flat / (n2 * n3), (flat / n3) % n2, flat % n3];
        std::array::from_fn(|a| j[a] as f64 * self.lattice.lengths[a] / self.grid[a] as f64)
    }

    pub fn to_grid(&self, f: &SpinorField) -> GridField {
        self.check(f);
        let len = self.grid_len();
        let zero = Complex64::new(0.0, 0.0);
        let mut comps = vec![vec![zero; len]; 4];
        for (c, &g) in f.coeffs.iter().zip(&self.grid_index) {
            for k in 0..4 {
                comps[k][g] = c.0[k];
            }
        }
        for comp in comps.iter_mut() {
            self.fft.inverse(comp);
        }
        let values = (0..len)
            .map(|p| Spinor4([comps[0][p], comps[1][p], comps[2][p], comps[3][p]]))
            .collect();
        GridField {
            dims: self.grid,
            values,
        }
    }

    /// Projects grid values onto the truncated modes. Also returns the fraction
    /// of the discrete energy that lies outside the truncation (aliasing tail).
    pub fn to_modes(&self, g: &GridField) -> (SpinorField, f64) {
        assert_eq!(g.dims, self.grid);
        let len = self.grid_len();
        let scale = 1.0 / len as f64;
        let mut out = self.zeros();
        let mut total = 0.0;
        let mut kept = 0.0;
        for k in 0..4 {
            let mut comp: Vec<Complex64> = g.values.iter().map(|s| s.0[k]).collect();
            self.fft.forward(&mut comp);
            total += comp.iter().map(|z| z.norm_sqr()).sum::<f64>() * scale * scale;
            for (c, &gi) in out.coeffs.iter_mut().zip(&self.grid_index) {
                c.0[k] = comp[gi] * scale;
                kept += c.0[k].norm_sqr();
            }
        }
        let tail = if total > 0.0 {
            ((total - kept) / total).max(0.0)
        } else {
            0.0
        };
        (out, tail)
    }

    /// Applies `g(λ)` in every mode's eigenbasis.
    pub fn apply_spectral(&self, f: &SpinorField, g: impl Fn(f64) -> f64) -> SpinorField {
        self.check(f);
        let coeffs = f
            .coeffs
            .iter()
            .zip(&self.bases)
            .map(|(c, b)| {
                let gp = Complex64::new(g(b.lambda_pos), 0.0);
                let gn = Complex64::new(g(b.lambda_neg), 0.0);
                let mut w = b.vectors_adj * c.to_vector();
                w[0] *= gp;
                w[1] *= gp;
                w[2] *= gn;
                w[3] *= gn;
                Spinor4::from_vector(&(b.vectors * w))
            })
            .collect();
        SpinorField { coeffs }
    }

    /// `Dψ`.
    pub fn apply_dirac(&self, f: &SpinorField) -> SpinorField {
        self.apply_spectral(f, |l| l)
    }

    /// `|D|^s ψ`.
    pub fn apply_abs_dirac_pow(&self, f: &SpinorField, s: f64) -> SpinorField {
        self.apply_spectral(f, |l| l.abs().powf(s))
    }

    pub fn project(&self, f: &SpinorField, sign: Sign) -> SpinorField {
        match sign {
            Sign::Positive => self.apply_spectral(f, |l| if l > 0.0 { 1.0 } else { 0.0 }),
            Sign::Negative => self.apply_spectral(f, |l| if l < 0.0 { 1.0 } else { 0.0 }),
        }
    }

    pub fn decompose(&self, f: &SpinorField) -> EnergyDecomposition {
        let pos = self.project(f, Sign::Positive);
        let neg = f.clone() - &pos;
        EnergyDecomposition { pos, neg }
    }

    /// `vol·Σₙ Σⱼ w(λⱼ)|⟨vⱼ, cₙ⟩|²`.
    pub fn spectral_sum(&self, f: &SpinorField, w: impl Fn(f64) -> f64) -> f64 {
        self.check(f);
        let mut acc = 0.0;
        for (c, b) in f.coeffs.iter().zip(&self.bases) {
            let proj = b.vectors_adj * c.to_vector();
            let wp = w(b.lambda_pos);
            let wn = w(b.lambda_neg);
            acc += wp * (proj[0].norm_sqr() + proj[1].norm_sqr())
                + wn * (proj[2].norm_sqr() + proj[3].norm_sqr());
        }
        acc * self.volume()
    }

    /// `⟨u, v⟩_{L²} = vol·Re Σ conj(uₙ)·vₙ`.
    pub fn inner_l2(&self, u: &SpinorField, v: &SpinorField) -> f64 {
        self.check(u);
        self.check(v);
        u.coeff_dot(v) * self.volume()
    }

    /// `⟨|D|u, v⟩_{L²}`.
    pub fn inner_energy(&self, u: &SpinorField, v: &SpinorField) -> f64 {
        self.check(u);
        self.check(v);
        let mut acc = 0.0;
        for ((a, b), basis) in u.coeffs.iter().zip(&v.coeffs).zip(&self.bases) {
            let pa: Vector4<Complex64> = basis.vectors_adj * a.to_vector();
            let pb: Vector4<Complex64> = basis.vectors_adj * b.to_vector();
            for j in 0..4 {
                acc += basis.eigenvalue(j).abs() * (pa[j].conj() * pb[j]).re;
            }
        }
        acc * self.volume()
    }

    /// `⟨Dψ, ψ⟩_{L²}`.
    pub fn dirac_form(&self, f: &SpinorField) -> f64 {
        self.spectral_sum(f, |l| l)
    }

    pub fn norm(&self, f: &SpinorField, kind: NormKind) -> f64 {
        match kind {
            NormKind::L2 => self.inner_l2(f, f).sqrt(),
            NormKind::Energy => self.spectral_sum(f, f64::abs).sqrt(),
            NormKind::H1 => {
                let vol = self.volume();
                let s: f64 = f
                    .coeffs
                    .iter()
                    .zip(&self.modes)
                    .map(|(c, m)| (1.0 + m.mu_abs * m.mu_abs) * c.norm_sqr())
                    .sum();
                (s * vol).sqrt()
            }
            NormKind::Lq(q) => self.grid_lq(&self.to_grid(f), q),
        }
    }

    /// `(Σⱼ |ψⱼ|^q · vol/N)^{1/q}` over grid values.
    pub fn grid_lq(&self, g: &GridField, q: f64) -> f64 {
        let s: f64 = g.values.iter().map(|v| v.norm_sqr().powf(q / 2.0)).sum();
        (s * self.cell_volume()).powf(1.0 / q)
    }

    /// Residual norm `‖|D|^{-1/2} r‖_{L²}`.
    pub fn dual_norm(&self, r: &SpinorField) -> f64 {
        self.spectral_sum(r, |l| 1.0 / l.abs()).sqrt()
    }

    /// `ψ(· − τ)` for the grid shift `τₐ = sₐ lₐ / Nₐ`.
    pub fn translated(&self, f: &SpinorField, shift: [i64; 3]) -> SpinorField {
        self.check(f);
        let coeffs = f
            .coeffs
            .iter()
            .zip(&self.modes)
            .map(|(c, m)| {
                let phase: f64 = (0..3)
                    .map(|a| f64::from(m.n[a]) * shift[a] as f64 / self.grid[a] as f64)
                    .sum();
                *c * Complex64::from_polar(1.0, -std::f64::consts::TAU * phase)
            })
            .collect();
        SpinorField { coeffs }
    }

    /// Random field with complex Gaussian coefficients damped by
    /// `(1 + |n|²)^{-decay/2}`; a positive decay makes it smooth.
    pub fn random_field(&self, rng: &mut impl Rng, decay: f64) -> SpinorField {
        let coeffs = self
            .modes
            .iter()
            .map(|m| {
                let n2: f64 = m.n.iter().map(|&x| f64::from(x * x)).sum();
                let amp = (1.0 + n2).powf(-decay / 2.0);
                Spinor4(std::array::from_fn(|_| {
                    Complex64::new(crate::rng::normal(rng), crate::rng::normal(rng)) * amp
                }))
            })
            .collect();
        SpinorField { coeffs }
    }

    /// The field whose only nonzero coefficient is eigenvector `j` of mode `idx`.
    pub fn eigenfield(&self, idx: usize, j: usize) -> SpinorField {
        let mut f = self.zeros();
        f.coeffs[idx] = Spinor4::from_vector(&self.bases[idx].column(j));
        f
    }
}
