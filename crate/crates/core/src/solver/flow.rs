//! Min-max estimate of the linking level by descending a point cloud on the
//! cylinder along `−∇_E J_ε`.
//!
//! The cloud is a set of fibers `{ψ⁻_f + λe}`, each a ladder of `λ` values.
//! Every fiber keeps its two end rungs (`λ = 0` and `λ = R`) and spends the
//! rest of its rungs on the bracket around its initial maximizer, so the
//! top of every fiber is resolved finely. Points whose action drops to zero
//! or below are frozen, as in the usual deformation that fixes the boundary
//! of the cylinder; the sup over the cloud is therefore decided by points
//! above zero.

use crate::error::{Error, Result};
use crate::field::{NormKind, Sign, SpinorField};
use crate::functional::ActionFunctional;
use crate::rng;

use super::geometry::{halton_direction, LinkingGeometry};

#[derive(Clone, Debug, PartialEq)]
pub struct FlowConfig {
    pub fibers: usize,
    pub ladder: usize,
    pub max_sweeps: usize,
    /// Stop once a sweep lowers the sup by less than
    /// `level_tol + level_tol_rel·|S|`.
    pub level_tol: f64,
    pub level_tol_rel: f64,
    pub armijo: f64,
    pub max_step: f64,
    /// Abort when no fiber crosses the positive sphere any more.
    pub require_witness: bool,
}

impl Default for FlowConfig {
    fn default() -> Self {
        FlowConfig {
            fibers: 16,
            ladder: 32,
            max_sweeps: 200,
            level_tol: 1e-12,
            level_tol_rel: 1e-6,
            armijo: 1e-4,
            max_step: 1.0,
            require_witness: true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FlowStop {
    /// The sup decreased by less than the tolerance.
    Stalled,
    /// The decrease grew on consecutive sweeps: the top point is sliding off
    /// the saddle, so the flow is stopped at the slowest sweep seen.
    Accelerating,
    MaxSweeps,
}

#[derive(Clone, Debug)]
pub struct FlowOutcome {
    /// Sup of the cloud at the returned sweep.
    pub level: f64,
    /// Cloud point attaining that sup.
    pub field: SpinorField,
    /// Sweep the returned level belongs to.
    pub sweep: usize,
    pub sweeps_run: usize,
    /// Sup after every sweep, starting with the initial cloud.
    pub history: Vec<f64>,
    /// Fibers crossing the sphere `‖P⁺ψ‖_E = r` at the final sweep.
    pub crossing_fibers: usize,
    pub stop: FlowStop,
    pub cloud_size: usize,
}

struct CloudPoint {
    field: SpinorField,
    value: f64,
    step: f64,
    frozen: bool,
}

struct Cloud {
    /// Fiber-major, rungs ordered by increasing `λ`.
    points: Vec<CloudPoint>,
    ladder: usize,
}

impl Cloud {
    /// Sup and the lowest index attaining it.
    fn sup(&self) -> (f64, usize) {
        let mut best = (f64::NEG_INFINITY, 0);
        for (i, p) in self.points.iter().enumerate() {
            if p.value > best.0 {
                best = (p.value, i);
            }
        }
        best
    }

    fn crossing_fibers(&self, functional: &ActionFunctional<'_>, radius: f64) -> usize {
        let space = functional.space();
        let side: Vec<bool> = self
            .points
            .iter()
            .map(|p| space.norm(&space.project(&p.field, Sign::Positive), NormKind::Energy) >= radius)
            .collect();
        side.chunks(self.ladder)
            .filter(|fiber| fiber.windows(2).any(|w| w[0] != w[1]))
            .count()
    }
}

fn build_cloud(functional: &ActionFunctional<'_>, geometry: &LinkingGeometry, config: &FlowConfig) -> Cloud {
    let space = functional.space();
    let dim = geometry.real_dim();
    let big_r = geometry.big_r;
    let ladder = config.ladder.max(4);
    let mut points = Vec::with_capacity(config.fibers * ladder);
    for f in 0..config.fibers as u64 {
        let coords: Vec<f64> = if f == 0 {
            vec![0.0; dim]
        } else {
            let radius = big_r * rng::halton(f, dim).powf(1.0 / dim as f64);
            halton_direction(f, 0, dim).into_iter().map(|x| x * radius).collect()
        };
        let coarse: Vec<f64> = (0..ladder)
            .map(|i| big_r * i as f64 / (ladder - 1) as f64)
            .collect();
        let values: Vec<f64> = coarse
            .iter()
            .map(|&l| functional.value(&geometry.cylinder_point(space, &coords, l)))
            .collect();
        let top = values
            .iter()
            .enumerate()
            .fold(0, |b, (i, &v)| if v > values[b] { i } else { b });
        let lo = coarse[top.saturating_sub(1)];
        let hi = coarse[(top + 1).min(ladder - 1)];
        let inner = ladder - 2;
        let mut lambdas = Vec::with_capacity(ladder);
        lambdas.push(0.0);
        lambdas.extend((0..inner).map(|i| lo + (hi - lo) * i as f64 / (inner - 1) as f64));
        lambdas.push(big_r);
        for l in lambdas {
            let field = geometry.cylinder_point(space, &coords, l);
            let value = functional.value(&field);
            points.push(CloudPoint {
                field,
                value,
                step: config.max_step,
                frozen: value <= 0.0,
            });
        }
    }
    Cloud { points, ladder }
}

/// One Armijo descent step for every live point.
fn sweep(functional: &ActionFunctional<'_>, cloud: &mut Cloud, config: &FlowConfig) {
    let space = functional.space();
    for p in cloud.points.iter_mut().filter(|p| !p.frozen) {
        let (value, residual) = functional.value_and_residual(&p.field);
        p.value = value;
        let slope = {
            let d = space.dual_norm(&residual);
            d * d
        };
        if slope == 0.0 {
            continue;
        }
        let grad = space.apply_abs_dirac_pow(&residual, -1.0);
        let mut tau = p.step;
        loop {
            let mut trial = p.field.clone();
            trial.axpy(-tau, &grad);
            let tv = functional.value(&trial);
            if tv <= value - config.armijo * tau * slope {
                p.field = trial;
                p.value = tv;
                p.step = (2.0 * tau).min(config.max_step);
                break;
            }
            tau *= 0.5;
            if tau < 1e-14 * config.max_step {
                // No measurable decrease left: the point sits at a critical point
                // to working precision.
                p.step = tau;
                p.frozen = true;
                break;
            }
        }
        if p.value <= 0.0 {
            p.frozen = true;
        }
    }
}

/// Flows the cloud until its sup settles and returns the sup with the point
/// attaining it. `floor` is the level below which the estimate is rejected
/// (the sphere floor `C*` in production).
pub fn flow_minmax(
    functional: &ActionFunctional<'_>,
    geometry: &LinkingGeometry,
    config: &FlowConfig,
    floor: f64,
) -> Result<FlowOutcome> {
    let mut cloud = build_cloud(functional, geometry, config);
    let cloud_size = cloud.points.len();
    let (s0, i0) = cloud.sup();
    let mut history = vec![s0];
    let mut best = (f64::INFINITY, s0, cloud.points[i0].field.clone(), 0usize);
    let mut last_drop = f64::INFINITY;
    let mut rising = 0;
    let mut stop = FlowStop::MaxSweeps;
    let mut sweeps_run = 0;
    let mut crossing_fibers = cloud.crossing_fibers(functional, geometry.small_r);
    if config.require_witness && crossing_fibers == 0 {
        return Err(Error::LostIntersection { sweep: 0 });
    }
    for k in 1..=config.max_sweeps {
        sweep(functional, &mut cloud, config);
        sweeps_run = k;
        let (s, idx) = cloud.sup();
        let prev = *history.last().expect("history starts non-empty");
        history.push(s);
        if s > prev {
            return Err(Error::StepSizeFailure { sweep: k });
        }
        if s < floor {
            return Err(Error::LevelCollapse { level: s, floor });
        }
        crossing_fibers = cloud.crossing_fibers(functional, geometry.small_r);
        if config.require_witness && crossing_fibers == 0 {
            return Err(Error::LostIntersection { sweep: k });
        }
        let drop = prev - s;
        if drop < best.0 {
            best = (drop, s, cloud.points[idx].field.clone(), k);
        }
        if drop < config.level_tol + config.level_tol_rel * s.abs() {
            stop = FlowStop::Stalled;
            best = (drop, s, cloud.points[idx].field.clone(), k);
            break;
        }
        rising = if drop > last_drop { rising + 1 } else { 0 };
        last_drop = drop;
        if rising >= 2 {
            stop = FlowStop::Accelerating;
            break;
        }
    }
    let (_, level, field, sweep) = best;
    Ok(FlowOutcome {
        level,
        field,
        sweep,
        sweeps_run,
        history,
        crossing_fibers,
        stop,
        cloud_size,
    })
}
