//! The `ε → 0` ladder: a min-max solve at the first `ε`, then warm-started
//! Newton solves down to `ε = 0`, with the a-priori bounds checked at every
//! converged stage.

use crate::clifford::dirac_bilinear;
use crate::error::{Error, Result};
use crate::field::{NormKind, SpinorField};
use crate::functional::{level_bracket, ActionFunctional, LevelBracket};
use crate::nonlinear::HypothesisConstants;

use super::flow::{flow_minmax, FlowConfig, FlowOutcome};
use super::geometry::{boundary_audit, BoundaryAudit, GeometryConfig, LinkingGeometry};
use super::newton::{newton_refine, NewtonConfig};

/// Geometric ladder `eps0·ratio^k`, `k = 0..steps−1`, with the last value
/// replaced by exactly zero.
#[derive(Clone, Debug, PartialEq)]
pub struct EpsSchedule {
    pub eps0: f64,
    pub steps: usize,
    pub ratio: f64,
}

impl Default for EpsSchedule {
    fn default() -> Self {
        EpsSchedule {
            eps0: 0.5,
            steps: 12,
            ratio: 0.5,
        }
    }
}

impl EpsSchedule {
    pub fn validate(&self) -> Result<()> {
        if !(self.eps0 > 0.0 && self.eps0 <= 1.0) {
            return Err(Error::InvalidParams(format!("eps0 must lie in (0, 1], got {}", self.eps0)));
        }
        if !(self.ratio > 0.0 && self.ratio < 1.0) {
            return Err(Error::InvalidParams(format!("ratio must lie in (0, 1), got {}", self.ratio)));
        }
        if self.steps < 2 {
            return Err(Error::InvalidParams(format!("need at least 2 steps, got {}", self.steps)));
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        let mut v: Vec<f64> = (0..self.steps - 1)
            .map(|k| self.eps0 * self.ratio.powi(k as i32))
            .collect();
        v.push(0.0);
        v
    }
}

/// Everything the solver needs beyond the problem itself.
#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    pub geometry: GeometryConfig,
    pub flow: FlowConfig,
    pub newton: NewtonConfig,
    pub c2_samples: usize,
    pub audit_samples: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            geometry: GeometryConfig::default(),
            flow: FlowConfig::default(),
            newton: NewtonConfig::default(),
            c2_samples: 10_000,
            audit_samples: 1000,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StageBounds {
    pub f_int: f64,
    pub pert_int: f64,
    /// `∫⟨dF_ε(ψ), ψ⟩`.
    pub pairing: f64,
    pub l2: f64,
    pub l3: f64,
    pub h1: f64,
    /// `∫ψ̄ψ`.
    pub qbar: f64,
}

impl StageBounds {
    pub fn measure(functional: &ActionFunctional<'_>, field: &SpinorField) -> Self {
        let space = functional.space();
        let bundle = functional.evaluate(field);
        let grid = space.to_grid(field);
        let qbar = grid.values.iter().map(dirac_bilinear).sum::<f64>() * space.cell_volume();
        StageBounds {
            f_int: bundle.f_int,
            pert_int: bundle.pert_int,
            pairing: functional.pairing(field),
            l2: space.norm(field, NormKind::L2),
            l3: space.grid_lq(&grid, 3.0),
            h1: space.norm(field, NormKind::H1),
            qbar,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ContinuationRecord {
    pub stage: usize,
    pub eps: f64,
    pub field: SpinorField,
    pub level: f64,
    pub residual_dual: f64,
    pub bounds: StageBounds,
    pub newton_iterations: usize,
    /// Action of the starting field at this stage's `ε`, before refinement.
    pub warm_level: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundCheck {
    pub name: &'static str,
    pub lhs: f64,
    pub rhs: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundReport {
    pub checks: Vec<BoundCheck>,
}

impl BoundReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Relative slack for the a-priori inequalities.
pub const BOUND_SLACK: f64 = 1e-8;

/// The a-priori inequalities a critical point must satisfy, with the
/// record's own level in place of `c₂`.
pub fn bound_report(record: &ContinuationRecord, constants: &HypothesisConstants, frequency: f64, mass: f64, volume: f64) -> BoundReport {
    let b = &record.bounds;
    let alpha = constants.alpha;
    let level = record.level;
    let cap = 2.0 * level / (alpha - 2.0);
    let check = |name, lhs: f64, rhs: f64| BoundCheck {
        name,
        lhs,
        rhs,
        passed: lhs <= rhs + BOUND_SLACK * rhs.abs(),
    };
    let nu = constants.nu;
    let qbar_cap = (mass - frequency)
        * volume.powf(1.0 - 1.0 / nu)
        * ((b.f_int + constants.a4 * volume) / constants.a3).powf(1.0 / nu);
    BoundReport {
        checks: vec![
            check("F_int <= 2 level/(alpha-2)", b.f_int, cap),
            check("eps pert_int <= 2 level/(alpha-2)", record.eps * b.pert_int, cap),
            check("dF pairing <= 2 level alpha/(alpha-2)", b.pairing, cap * alpha),
            check("(m-a) qbar <= (m-a) vol^(1-1/nu) ((F_int+A4 vol)/A3)^(1/nu)", (mass - frequency) * b.qbar, qbar_cap),
        ],
    }
}

#[derive(Clone, Debug)]
pub struct ContinuationRun {
    pub geometry: LinkingGeometry,
    pub bracket: LevelBracket,
    pub audit: BoundaryAudit,
    pub flow: FlowOutcome,
    pub records: Vec<ContinuationRecord>,
}

impl ContinuationRun {
    pub fn last(&self) -> &ContinuationRecord {
        self.records.last().expect("a run has at least one record")
    }
}

fn record(
    functional: &ActionFunctional<'_>,
    stage: usize,
    start: &SpinorField,
    config: &NewtonConfig,
    last_good_eps: Option<f64>,
) -> Result<ContinuationRecord> {
    let eps = functional.eps();
    let warm_level = functional.value(start);
    let out = newton_refine(functional, start, config).map_err(|e| Error::StageDivergence {
        eps,
        last_good_eps,
        source: Box::new(e),
    })?;
    Ok(ContinuationRecord {
        stage,
        eps,
        level: functional.value(&out.field),
        residual_dual: out.residual_dual,
        bounds: StageBounds::measure(functional, &out.field),
        newton_iterations: out.iterations,
        warm_level,
        field: out.field,
    })
}

/// Builds the linking geometry, runs the min-max flow at the first `ε` and
/// refines, then walks the ladder down to zero with warm-started Newton.
pub fn run_continuation(
    functional: &ActionFunctional<'_>,
    schedule: &EpsSchedule,
    config: &SolverConfig,
) -> Result<ContinuationRun> {
    schedule.validate()?;
    let eps_values = schedule.values();
    let first = functional.with_eps(eps_values[0])?;
    let geometry = LinkingGeometry::build(&first, &config.geometry)?;
    let audit = boundary_audit(&first, &geometry, config.audit_samples);
    if !audit.passed {
        return Err(Error::DegenerateGeometry(format!(
            "action reaches {:e} on the cylinder boundary; increase the radius or the negative cutoff",
            audit.max_value
        )));
    }
    let bracket = level_bracket(&first, &geometry, config.c2_samples)?;
    let flow = flow_minmax(&first, &geometry, &config.flow, bracket.c1)?;

    let mut records = Vec::with_capacity(eps_values.len());
    let mut start = flow.field.clone();
    let mut last_good = None;
    for (stage, &eps) in eps_values.iter().enumerate() {
        let fun = functional.with_eps(eps)?;
        let rec = record(&fun, stage, &start, &config.newton, last_good)?;
        start = rec.field.clone();
        last_good = Some(eps);
        records.push(rec);
    }
    Ok(ContinuationRun {
        geometry,
        bracket,
        audit,
        flow,
        records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clifford::Spinor4;
    use crate::field::SpinorSpace;
    use crate::functional::ProblemParams;
    use crate::nonlinear::NonlinearityModel;
    use crate::spectral::LatticeSpec;

    #[test]
    fn default_ladder() {
        let v = EpsSchedule::default().values();
        assert_eq!(v.len(), 12);
        assert_eq!(v[0], 0.5);
        assert_eq!(v[10], 0.5f64.powi(11));
        assert_eq!(v[11], 0.0);
        assert!(v.windows(2).all(|w| w[1] < w[0]));
        assert!(EpsSchedule { eps0: 0.5, steps: 1, ratio: 0.5 }.validate().is_err());
    }

    #[test]
    fn trivial_record_meets_every_bound() {
        let c = HypothesisConstants::for_soler_power(1.25, 0.0);
        let rec = ContinuationRecord {
            stage: 0,
            eps: 0.0,
            field: SpinorField::zeros(1),
            level: 0.0,
            residual_dual: 0.0,
            bounds: StageBounds {
                f_int: 0.0,
                pert_int: 0.0,
                pairing: 0.0,
                l2: 0.0,
                l3: 0.0,
                h1: 0.0,
                qbar: 0.0,
            },
            newton_iterations: 0,
            warm_level: 0.0,
        };
        let r = bound_report(&rec, &c, 0.5, 1.0, 1.0);
        assert!(r.all_passed());
        assert!(r.checks.iter().all(|c| c.lhs == 0.0));
    }

    #[test]
    fn small_ladder_ends_at_constant_solution() {
        let space = SpinorSpace::new(LatticeSpec::unit(1), [4; 3], 1.0).unwrap();
        let params = ProblemParams::new(*space.lattice(), 1.0, 0.5, 0.0).unwrap();
        let model = NonlinearityModel::default_model();
        let fun = ActionFunctional::new(&space, &params, &model).unwrap();
        let config = SolverConfig {
            flow: FlowConfig {
                fibers: 4,
                ladder: 12,
                ..FlowConfig::default()
            },
            c2_samples: 300,
            audit_samples: 60,
            ..SolverConfig::default()
        };
        let schedule = EpsSchedule {
            eps0: 0.5,
            steps: 4,
            ratio: 0.25,
        };
        let run = run_continuation(&fun, &schedule, &config).unwrap();
        assert_eq!(run.records.len(), 4);
        let last = run.last();
        assert_eq!(last.eps, 0.0);
        let exact = space.constant(Spinor4::unit(0) * 0.04);
        assert!(space.norm(&(last.field.clone() - &exact), NormKind::Energy) < 1e-10);
        for rec in &run.records {
            assert!(rec.residual_dual < 1e-12);
            assert!(rec.level > run.bracket.c1 && rec.level < run.bracket.c2, "{} {:?}", rec.level, run.bracket);
            assert!(bound_report(&rec, &model.constants, 0.5, 1.0, 1.0).all_passed());
        }
        for w in run.records.windows(2) {
            let lower = w[0].level - (w[0].eps - w[1].eps) * w[0].bounds.pert_int;
            assert!(w[1].warm_level >= lower - 1e-15);
        }
    }
}
