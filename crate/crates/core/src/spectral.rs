//! Lattice and dual-lattice bookkeeping and the per-mode eigendecomposition
//! of the massive Dirac symbol.
//!
//! On the plane wave `exp(2πi ζ·θ)` the operator acts as the Hermitian matrix
//! `Σₖ 2πζₖ αₖ + mγ⁰`, whose eigenvalues are `±√(μ² + m²)` with `μ = 2π|ζ|`,
//! each twice. Eigenvectors are built from the massless eigenspace as
//! `ψ + tγ⁰ψ` with `t = (−μ ± √(μ² + m²))/m`.

use std::f64::consts::TAU;

use nalgebra::Vector4;
use num_complex::Complex64;

use crate::clifford::{alpha, gamma, Matrix4};
use crate::error::{Error, Result};

/// Rectangular period lattice `l1ℤ × l2ℤ × l3ℤ` with a cube truncation of the
/// dual lattice at `|nᵢ| ≤ k`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LatticeSpec {
    pub lengths: [f64; 3],
    pub k: usize,
}

impl LatticeSpec {
    pub fn new(lengths: [f64; 3], k: usize) -> Result<Self> {
        if lengths.iter().any(|l| !l.is_finite() || *l <= 0.0) {
            return Err(Error::InvalidLattice(format!(
                "lengths must be positive and finite, got {lengths:?}"
            )));
        }
        if !(lengths[0] <= lengths[1] && lengths[1] <= lengths[2]) {
            return Err(Error::InvalidLattice(format!(
                "lengths must satisfy l1 <= l2 <= l3, got {lengths:?}"
            )));
        }
        Ok(LatticeSpec { lengths, k })
    }

    pub fn unit(k: usize) -> Self {
        LatticeSpec {
            lengths: [1.0; 3],
            k,
        }
    }

    pub fn volume(&self) -> f64 {
        self.lengths.iter().product()
    }

    /// Number of modes per axis, `2K + 1`.
    pub fn side(&self) -> usize {
        2 * self.k + 1
    }

    pub fn mode_count(&self) -> usize {
        self.side().pow(3)
    }

    /// Position of the integer triple `n` in the canonical ordering.
    pub fn mode_index(&self, n: [i32; 3]) -> Option<usize> {
        let k = self.k as i32;
        if n.iter().any(|&x| x.abs() > k) {
            return None;
        }
        let s = self.side();
        let [a, b, c] = n.map(|x| (x + k) as usize);
        Some((a * s + b) * s + c)
    }
}

/// A dual-lattice frequency.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DualMode {
    pub n: [i32; 3],
    /// `(n₁/l₁, n₂/l₂, n₃/l₃)`.
    pub zeta: [f64; 3],
    /// `2π|ζ|`.
    pub mu_abs: f64,
}

impl DualMode {
    pub fn new(n: [i32; 3], lattice: &LatticeSpec) -> Self {
        let zeta = std::array::from_fn(|i| f64::from(n[i]) / lattice.lengths[i]);
        let mu_abs = TAU * zeta.iter().map(|z| z * z).sum::<f64>().sqrt();
        DualMode { n, zeta, mu_abs }
    }

    pub fn is_zero(&self) -> bool {
        self.n == [0, 0, 0]
    }
}

/// All `(2K+1)³` modes, lexicographic in `n` with `n₁` slowest.
pub fn enumerate_modes(lattice: &LatticeSpec) -> Vec<DualMode> {
    let k = lattice.k as i32;
    let mut out = Vec::with_capacity(lattice.mode_count());
    for a in -k..=k {
        for b in -k..=k {
            for c in -k..=k {
                out.push(DualMode::new([a, b, c], lattice));
            }
        }
    }
    out
}

/// Massless part `Σₖ 2πζₖ αₖ` of the symbol.
pub fn slashed_symbol(mode: &DualMode) -> Matrix4 {
    (0..3).fold(Matrix4::zeros(), |acc, k| {
        acc + alpha(k + 1).expect("index in range") * Complex64::new(TAU * mode.zeta[k], 0.0)
    })
}

/// Full symbol `Σₖ 2πζₖ αₖ + mγ⁰`.
pub fn dirac_symbol(mode: &DualMode, m: f64) -> Matrix4 {
    slashed_symbol(mode) + gamma(0).expect("index in range") * Complex64::new(m, 0.0)
}

/// Mixing coefficients `(t₊, t₋)` for the positive and negative branch,
/// evaluated without cancellation for large `μ`.
pub fn mixing_coefficients(mu: f64, m: f64) -> (f64, f64) {
    let root = mu.hypot(m);
    (m / (mu + root), -(mu + root) / m)
}

/// Orthonormal eigenvectors of one mode's symbol.
#[derive(Clone, Debug)]
pub struct ModeEigenBasis {
    pub mode: DualMode,
    pub lambda_pos: f64,
    pub lambda_neg: f64,
    /// Columns are `v₁..v₄`; the first two belong to `lambda_pos`.
    pub vectors: Matrix4,
    /// Conjugate transpose of `vectors`, kept for the hot path.
    pub vectors_adj: Matrix4,
}

const CROSS_CHECK_TOL: f64 = 1e-10;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Makes the first component that is not negligible real and positive.
fn fix_phase(v: &mut Vector4<Complex64>) {
    if let Some(z) = v.iter().find(|z| z.norm() > 1e-12).copied() {
        let phase = z.conj() / z.norm();
        *v *= phase;
    }
}

fn gram_schmidt(vs: &mut [Vector4<Complex64>]) {
    for i in 0..vs.len() {
        for j in 0..i {
            let proj = vs[j].dotc(&vs[i]);
            let vj = vs[j];
            vs[i] -= vj * proj;
        }
        let n = vs[i].norm();
        vs[i] /= Complex64::new(n, 0.0);
    }
}

impl ModeEigenBasis {
    /// Eigenvalue paired with column `j`.
    pub fn eigenvalue(&self, j: usize) -> f64 {
        if j < 2 {
            self.lambda_pos
        } else {
            self.lambda_neg
        }
    }

    pub fn eigenvalues(&self) -> [f64; 4] {
        [self.lambda_pos, self.lambda_pos, self.lambda_neg, self.lambda_neg]
    }

    pub fn column(&self, j: usize) -> Vector4<Complex64> {
        self.vectors.column(j).into_owned()
    }

    /// Largest deviation of the stored eigenvectors from the mixing
    /// construction. For `μ > 0` the massless component
    /// `(v − tγ⁰v)/(1 − t²)` must be a `+μ` eigenvector of the massless symbol;
    /// for `μ = 0` the vectors must satisfy `γ⁰v = ±v`.
    pub fn construction_defect(&self, m: f64) -> f64 {
        let g0 = gamma(0).expect("index in range");
        let mu = self.mode.mu_abs;
        let (tp, tn) = mixing_coefficients(mu, m);
        let mut worst: f64 = 0.0;
        for j in 0..4 {
            let v = self.column(j);
            let gv = g0 * v;
            if mu == 0.0 {
                let sign = if j < 2 { 1.0 } else { -1.0 };
                worst = worst.max((gv - v * c(sign, 0.0)).norm());
            } else {
                let t = if j < 2 { tp } else { tn };
                let psi = (v - gv * c(t, 0.0)) / c(1.0 - t * t, 0.0);
                let slashed = slashed_symbol(&self.mode);
                let defect = (slashed * psi - psi * c(mu, 0.0)).norm() / psi.norm().max(1e-300);
                worst = worst.max(defect / mu.max(1.0));
            }
        }
        worst
    }

    /// `‖VᴴV − I‖` entrywise maximum.
    pub fn unitarity_defect(&self) -> f64 {
        (self.vectors_adj * self.vectors - Matrix4::identity())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// Largest `‖S vⱼ − λⱼ vⱼ‖` for the symbol `S`.
    pub fn residual(&self, m: f64) -> f64 {
        let s = dirac_symbol(&self.mode, m);
        (0..4)
            .map(|j| {
                let v = self.column(j);
                (s * v - v * c(self.eigenvalue(j), 0.0)).norm()
            })
            .fold(0.0, f64::max)
    }
}

/// Unit eigenvectors of `σ·n̂` for eigenvalues `+1` and `−1`.
fn pauli_eigenvectors(nhat: [f64; 3]) -> (nalgebra::Vector2<Complex64>, nalgebra::Vector2<Complex64>) {
    let [x, y, z] = nhat;
    let (plus, minus) = if z >= 0.0 {
        (
            nalgebra::Vector2::new(c(1.0 + z, 0.0), c(x, y)),
            nalgebra::Vector2::new(c(-x, y), c(1.0 + z, 0.0)),
        )
    } else {
        (
            nalgebra::Vector2::new(c(x, -y), c(1.0 - z, 0.0)),
            nalgebra::Vector2::new(c(1.0 - z, 0.0), c(-x, -y)),
        )
    };
    (plus.normalize(), minus.normalize())
}

/// Eigenbasis of one mode, with a cross-check against dense diagonalization.
pub fn mode_eigenbasis(mode: &DualMode, m: f64) -> Result<ModeEigenBasis> {
    if !(m > 0.0 && m.is_finite()) {
        return Err(Error::InvalidParams(format!("mass must be positive, got {m}")));
    }
    let mu = mode.mu_abs;
    let lambda = mu.hypot(m);
    let g0 = gamma(0).expect("index in range");

    // Massless +μ eigenvectors; for μ = 0 the canonical basis is used and the
    // mixing coefficients are ±1.
    let seeds: Vec<Vector4<Complex64>> = if mu == 0.0 {
        (0..4)
            .map(|k| {
                let mut v = Vector4::zeros();
                v[k] = c(1.0, 0.0);
                v
            })
            .collect()
    } else {
        let nhat = mode.zeta.map(|z| TAU * z / mu);
        let (p, q) = pauli_eigenvectors(nhat);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        vec![
            Vector4::new(p[0], p[1], p[0], p[1]) * c(s, 0.0),
            Vector4::new(q[0], q[1], -q[0], -q[1]) * c(s, 0.0),
        ]
    };
    let (tp, tn) = if mu == 0.0 {
        (1.0, -1.0)
    } else {
        mixing_coefficients(mu, m)
    };

    let branch = |t: f64| -> Vec<Vector4<Complex64>> {
        let mut out: Vec<Vector4<Complex64>> = seeds
            .iter()
            .map(|psi| psi + g0 * psi * c(t, 0.0))
            .filter(|v| v.norm() > 1e-8)
            .collect();
        gram_schmidt(&mut out);
        out.iter_mut().for_each(fix_phase);
        out
    };
    let pos = branch(tp);
    let neg = branch(tn);
    if pos.len() != 2 || neg.len() != 2 {
        return Err(Error::CrossCheck(format!(
            "mode {:?}: eigenspaces of dimension {} and {}",
            mode.n,
            pos.len(),
            neg.len()
        )));
    }
    let vectors = Matrix4::from_columns(&[pos[0], pos[1], neg[0], neg[1]]);
    let basis = ModeEigenBasis {
        mode: *mode,
        lambda_pos: lambda,
        lambda_neg: -lambda,
        vectors,
        vectors_adj: vectors.adjoint(),
    };
    cross_check(&basis, m)?;
    Ok(basis)
}

/// Compares against a dense Hermitian eigensolver: eigenvalues and the
/// positive spectral projector must agree.
fn cross_check(basis: &ModeEigenBasis, m: f64) -> Result<()> {
    let symbol = dirac_symbol(&basis.mode, m);
    let scale = basis.lambda_pos.max(1.0);
    let dense = faer::Mat::<Complex64>::from_fn(4, 4, |i, j| symbol[(i, j)]);
    let eig = dense
        .self_adjoint_eigen(faer::Side::Lower)
        .map_err(|e| Error::CrossCheck(format!("mode {:?}: {e:?}", basis.mode.n)))?;
    let values: Vec<f64> = (0..4).map(|j| eig.S()[j].re).collect();
    let value_err = values
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let want = if i < 2 { basis.lambda_neg } else { basis.lambda_pos };
            (v - want).abs()
        })
        .fold(0.0, f64::max);
    if value_err > CROSS_CHECK_TOL * scale {
        return Err(Error::CrossCheck(format!(
            "mode {:?}: eigenvalue mismatch {value_err:e}",
            basis.mode.n
        )));
    }

    let u = eig.U();
    let p_dense = Matrix4::from_fn(|i, j| {
        (2..4).map(|k| u[(i, k)] * u[(j, k)].conj()).sum::<Complex64>()
    });
    let vp = basis.vectors.columns(0, 2);
    let p_ours = vp * vp.adjoint();
    let proj_err = (p_dense - p_ours).iter().map(|z| z.norm()).fold(0.0, f64::max);
    if proj_err > CROSS_CHECK_TOL {
        return Err(Error::CrossCheck(format!(
            "mode {:?}: projector mismatch {proj_err:e}",
            basis.mode.n
        )));
    }
    let res = basis.residual(m);
    if res > CROSS_CHECK_TOL * scale {
        return Err(Error::CrossCheck(format!(
            "mode {:?}: eigen-residual {res:e}",
            basis.mode.n
        )));
    }
    Ok(())
}

/// One distinct eigenvalue and how often it occurs in the truncation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectrumEntry {
    pub value: f64,
    pub multiplicity: usize,
}

/// Two eigenvalues are counted as one if they differ by less than
/// `1e-9·max(1, |λ|)`.
pub fn same_eigenvalue(a: f64, b: f64) -> bool {
    (a - b).abs() < 1e-9 * a.abs().max(1.0)
}

/// Sorted distinct eigenvalues of the truncated operator with multiplicities.
pub fn spectrum_table(lattice: &LatticeSpec, m: f64) -> Result<Vec<SpectrumEntry>> {
    let mut values = Vec::with_capacity(4 * lattice.mode_count());
    for mode in enumerate_modes(lattice) {
        values.extend(mode_eigenbasis(&mode, m)?.eigenvalues());
    }
    values.sort_by(f64::total_cmp);
    let mut table: Vec<SpectrumEntry> = Vec::new();
    for v in values {
        match table.last_mut() {
            Some(last) if same_eigenvalue(last.value, v) => last.multiplicity += 1,
            _ => table.push(SpectrumEntry {
                value: v,
                multiplicity: 1,
            }),
        }
    }
    Ok(table)
}
