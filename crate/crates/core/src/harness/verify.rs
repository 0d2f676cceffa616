//! The `verify` suite: Clifford identities, per-mode eigenbases, the
//! nonlinearity hypotheses and the consistency of the action's gradients.

use rand::Rng;

use crate::clifford::{dirac_bilinear, verify_clifford, Spinor4};
use crate::field::{NormKind, SpinorField, SpinorSpace};
use crate::functional::ActionFunctional;
use crate::nonlinear::verify_hypotheses;
use crate::rng;

#[derive(Clone, Debug, PartialEq)]
pub struct CheckLine {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckLine {
    fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        CheckLine {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

pub const EIGEN_TOL: f64 = 1e-10;
pub const FD_STEP: f64 = 1e-4;
pub const FD_TOL: f64 = 1e-5;
pub const IDENTITY_TOL: f64 = 1e-10;

/// A field whose scalar bilinear is positive on every grid point: a constant
/// upper spinor plus smooth noise. The action is smooth near such fields, so
/// central differences converge at their nominal order.
pub fn off_cone_field(space: &SpinorSpace, rng: &mut impl Rng) -> SpinorField {
    let base = space.constant(Spinor4::unit(0) * 0.3);
    let noise = space.random_field(rng, 2.0);
    let noise = noise.scaled(0.03 / space.norm(&noise, NormKind::Energy));
    let mut scale = 1.0;
    loop {
        let f = base.clone() + &noise.scaled(scale);
        let grid = space.to_grid(&f);
        if grid.values.iter().all(|p| dirac_bilinear(p) > 0.0) {
            return f;
        }
        scale *= 0.5;
    }
}

/// `dJ[v]` against central differences, the E-gradient against the
/// derivative it represents, and the Palais-Smale identity.
pub fn gradient_checks(functional: &ActionFunctional<'_>, seed: u64) -> Vec<CheckLine> {
    let space = functional.space();
    let mut rng = rng::stream(seed, "verify-gradient");

    let mut fd_worst: f64 = 0.0;
    let mut adj_worst: f64 = 0.0;
    for _ in 0..20 {
        let f = off_cone_field(space, &mut rng);
        let v = space.random_field(&mut rng, 2.0);
        let v = v.scaled(1.0 / space.norm(&v, NormKind::Energy));
        let mut plus = f.clone();
        plus.axpy(FD_STEP, &v);
        let mut minus = f.clone();
        minus.axpy(-FD_STEP, &v);
        let fd = (functional.value(&plus) - functional.value(&minus)) / (2.0 * FD_STEP);
        let an = functional.directional_derivative(&f, &v);
        fd_worst = fd_worst.max((fd - an).abs() / an.abs());
        let via_e = space.inner_energy(&functional.grad_energy(&f), &v);
        adj_worst = adj_worst.max((via_e - an).abs() / an.abs());
    }

    let mut ps_worst: f64 = 0.0;
    for i in 0..50 {
        let f = space.random_field(&mut rng, 1.0 + (i % 3) as f64).scaled(0.1);
        let ps = functional.ps_identity(&f);
        ps_worst = ps_worst.max(ps.gap.abs() / (1.0 + functional.value(&f).abs()));
    }

    vec![
        CheckLine::new(
            "gradient vs central differences",
            fd_worst < FD_TOL,
            format!("worst relative error {fd_worst:.3e} over 20 pairs, h = {FD_STEP:e}"),
        ),
        CheckLine::new(
            "energy gradient represents dJ",
            adj_worst < IDENTITY_TOL,
            format!("worst relative error {adj_worst:.3e} over 20 pairs"),
        ),
        CheckLine::new(
            "Palais-Smale identity",
            ps_worst < IDENTITY_TOL,
            format!("worst gap {ps_worst:.3e} relative to 1 + |J| over 50 fields"),
        ),
    ]
}

pub fn verify_suite(functional: &ActionFunctional<'_>, seed: u64) -> Vec<CheckLine> {
    let mut lines = Vec::new();

    let cl = verify_clifford();
    let failures = cl.failures();
    lines.push(CheckLine::new(
        "Clifford identities",
        cl.all_passed(),
        if failures.is_empty() {
            format!("{} identities and {} Hermiticity checks exact", cl.identities.len(), cl.hermiticity.len())
        } else {
            format!("failed: {}", failures.join(", "))
        },
    ));

    let space = functional.space();
    let m = space.mass();
    let (mut construction, mut unitarity, mut residual) = (0.0f64, 0.0f64, 0.0f64);
    for b in space.bases() {
        construction = construction.max(b.construction_defect(m));
        unitarity = unitarity.max(b.unitarity_defect());
        residual = residual.max(b.residual(m) / b.lambda_pos.max(1.0));
    }
    lines.push(CheckLine::new(
        "per-mode eigenbases",
        construction < EIGEN_TOL && unitarity < EIGEN_TOL && residual < EIGEN_TOL,
        format!(
            "{} modes; construction {construction:.1e}, unitarity {unitarity:.1e}, residual {residual:.1e}",
            space.n_modes()
        ),
    ));

    let hyp = verify_hypotheses(functional.model(), 2000, 3.0, seed);
    for c in &hyp.checks {
        let status = if c.gating { c.passed } else { true };
        let mut detail = format!("worst margin {:.3e} over {} samples", c.worst_margin, c.samples);
        if !c.gating {
            detail.push_str(&format!(" (informational: {})", c.note));
        }
        lines.push(CheckLine::new(format!("hypothesis {}", c.name), status, detail));
    }

    lines.extend(gradient_checks(functional, seed));
    lines
}
