//! Flat `section.key = value` run configuration.
//!
//! `#` starts a comment. Every key is optional; unknown keys, repeated keys,
//! malformed values and constraint violations are all reported together,
//! each with its line number.

use std::collections::HashMap;
use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::functional::{ExternalField, ProblemParams};
use crate::nonlinear::{CubicSpline, GProfile, HypothesisConstants, ModelKind, NonlinearityModel};
use crate::solver::{EpsSchedule, FlowConfig, GeometryConfig, NewtonConfig, SolverConfig};
use crate::spectral::LatticeSpec;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Kind {
    Float,
    Count,
    Text,
    FloatList,
}

const KEYS: &[(&str, Kind)] = &[
    ("lattice.l1", Kind::Float),
    ("lattice.l2", Kind::Float),
    ("lattice.l3", Kind::Float),
    ("lattice.K", Kind::Count),
    ("grid.n", Kind::Count),
    ("grid.n1", Kind::Count),
    ("grid.n2", Kind::Count),
    ("grid.n3", Kind::Count),
    ("params.m", Kind::Float),
    ("params.a", Kind::Float),
    ("params.eps", Kind::Float),
    ("external.type", Kind::Text),
    ("external.amplitude", Kind::Float),
    ("external.axis", Kind::Count),
    ("schedule.eps0", Kind::Float),
    ("schedule.steps", Kind::Count),
    ("schedule.ratio", Kind::Float),
    ("model.type", Kind::Text),
    ("model.p", Kind::Float),
    ("model.b", Kind::Float),
    ("model.delta", Kind::Float),
    ("model.g_coeff", Kind::Float),
    ("model.g_exponent", Kind::Float),
    ("model.g_knots", Kind::FloatList),
    ("model.g_values", Kind::FloatList),
    ("model.A1", Kind::Float),
    ("model.A2", Kind::Float),
    ("model.A3", Kind::Float),
    ("model.A4", Kind::Float),
    ("model.A5", Kind::Float),
    ("model.alpha", Kind::Float),
    ("model.beta", Kind::Float),
    ("model.nu", Kind::Float),
    ("model.alpha1", Kind::Float),
    ("model.alpha2", Kind::Float),
    ("solver.fibers", Kind::Count),
    ("solver.ladder", Kind::Count),
    ("solver.neg_cutoff", Kind::Float),
    ("solver.flow_max_sweeps", Kind::Count),
    ("solver.level_tol", Kind::Float),
    ("solver.level_tol_rel", Kind::Float),
    ("solver.newton_tol", Kind::Float),
    ("solver.newton_max_iter", Kind::Count),
    ("solver.newton_smoothing", Kind::Float),
    ("solver.c2_samples", Kind::Count),
    ("solver.embed_samples", Kind::Count),
    ("solver.audit_samples", Kind::Count),
    ("solver.seed", Kind::Count),
    ("output.dir", Kind::Text),
];

#[derive(Clone, Debug, PartialEq)]
enum Value {
    Float(f64),
    Count(u64),
    Text(String),
    FloatList(Vec<f64>),
}

/// A validated run.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub lattice: LatticeSpec,
    pub grid: [usize; 3],
    pub params: ProblemParams,
    pub schedule: EpsSchedule,
    pub model: NonlinearityModel,
    pub solver: SolverConfig,
    pub seed: u64,
    pub output_dir: PathBuf,
    /// The text the config was parsed from, hashed into the manifest.
    pub source: String,
}

struct Entries {
    values: HashMap<&'static str, (usize, Value)>,
    errors: Vec<String>,
}

impl Entries {
    fn line(&self, key: &str) -> usize {
        self.values.get(key).map_or(0, |(l, _)| *l)
    }

    fn float(&self, key: &str, default: f64) -> f64 {
        match self.values.get(key) {
            Some((_, Value::Float(x))) => *x,
            _ => default,
        }
    }

    fn opt_float(&self, key: &str) -> Option<f64> {
        match self.values.get(key) {
            Some((_, Value::Float(x))) => Some(*x),
            _ => None,
        }
    }

    fn count(&self, key: &str, default: u64) -> u64 {
        match self.values.get(key) {
            Some((_, Value::Count(x))) => *x,
            _ => default,
        }
    }

    fn opt_count(&self, key: &str) -> Option<u64> {
        match self.values.get(key) {
            Some((_, Value::Count(x))) => Some(*x),
            _ => None,
        }
    }

    fn text<'a>(&'a self, key: &str, default: &'a str) -> &'a str {
        match self.values.get(key) {
            Some((_, Value::Text(x))) => x,
            _ => default,
        }
    }

    fn list(&self, key: &str) -> Option<&[f64]> {
        match self.values.get(key) {
            Some((_, Value::FloatList(x))) => Some(x),
            _ => None,
        }
    }

    /// Records an error against the line that set `key`, if any.
    fn fail(&mut self, key: &str, msg: impl std::fmt::Display) {
        let line = self.line(key);
        if line > 0 {
            self.errors.push(format!("line {line}: {msg}"));
        } else {
            self.errors.push(msg.to_string());
        }
    }
}

fn parse_value(kind: Kind, raw: &str) -> std::result::Result<Value, String> {
    match kind {
        Kind::Float => raw
            .parse::<f64>()
            .ok()
            .filter(|x| x.is_finite())
            .map(Value::Float)
            .ok_or_else(|| format!("expected a finite number, got `{raw}`")),
        Kind::Count => raw
            .parse::<u64>()
            .map(Value::Count)
            .map_err(|_| format!("expected a nonnegative integer, got `{raw}`")),
        Kind::Text => {
            let t = raw.trim_matches('"');
            if t.is_empty() {
                Err("expected a non-empty value".into())
            } else {
                Ok(Value::Text(t.to_string()))
            }
        }
        Kind::FloatList => raw
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| format!("expected a comma-separated list of numbers, got `{raw}`"))
            })
            .collect::<std::result::Result<Vec<_>, _>>()
            .map(Value::FloatList),
    }
}

fn tokenize(text: &str) -> Entries {
    let mut entries = Entries {
        values: HashMap::new(),
        errors: Vec::new(),
    };
    for (i, raw_line) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw_line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            entries.errors.push(format!("line {line_no}: expected `section.key = value`"));
            continue;
        };
        let key = key.trim();
        let value = value.trim();
        let Some(&(name, kind)) = KEYS.iter().find(|(k, _)| *k == key) else {
            entries.errors.push(format!("line {line_no}: unknown key `{key}`"));
            continue;
        };
        if let Some((first, _)) = entries.values.get(name) {
            entries
                .errors
                .push(format!("line {line_no}: duplicate key `{key}` (first set on line {first})"));
            continue;
        }
        match parse_value(kind, value) {
            Ok(v) => {
                entries.values.insert(name, (line_no, v));
            }
            Err(msg) => entries.errors.push(format!("line {line_no}: {key}: {msg}")),
        }
    }
    entries
}

fn build_model(e: &mut Entries) -> Option<NonlinearityModel> {
    let p = e.float("model.p", 1.25);
    let b = e.float("model.b", 0.0);
    let kind_name = e.text("model.type", "soler_power").to_string();
    let kind = match kind_name.as_str() {
        "soler_power" => ModelKind::SolerPower { p, b },
        "smoothed" => ModelKind::Smoothed {
            inner: Box::new(ModelKind::SolerPower { p, b }),
            delta: e.float("model.delta", 1e-3),
        },
        "soler_g" => {
            let profile = match (e.list("model.g_knots"), e.list("model.g_values")) {
                (Some(k), Some(v)) => match CubicSpline::new(k.to_vec(), v.to_vec()) {
                    Ok(s) => GProfile::Tabulated(s),
                    Err(err) => {
                        e.fail("model.g_knots", err);
                        return None;
                    }
                },
                (None, None) => GProfile::PositivePower {
                    coeff: e.float("model.g_coeff", 1.0),
                    exponent: e.float("model.g_exponent", p),
                },
                _ => {
                    e.fail("model.type", "model.g_knots and model.g_values must be given together");
                    return None;
                }
            };
            ModelKind::SolerG { profile }
        }
        other => {
            e.fail("model.type", format!("unknown model type `{other}` (soler_power, soler_g, smoothed)"));
            return None;
        }
    };
    let names = [
        "model.A1",
        "model.A2",
        "model.A3",
        "model.A4",
        "model.A5",
        "model.alpha",
        "model.beta",
        "model.nu",
        "model.alpha1",
        "model.alpha2",
    ];
    let given: Vec<Option<f64>> = names.iter().map(|n| e.opt_float(n)).collect();
    let base = if kind_name == "soler_g" {
        if let Some(i) = given.iter().position(Option::is_none) {
            e.fail("model.type", format!("model.type = soler_g needs every hypothesis constant; {} is missing", names[i]));
            return None;
        }
        HypothesisConstants::for_soler_power(1.25, 0.0)
    } else {
        HypothesisConstants::for_soler_power(p, b)
    };
    let pick = |i: usize, d: f64| given[i].unwrap_or(d);
    let constants = HypothesisConstants {
        a1: pick(0, base.a1),
        a2: pick(1, base.a2),
        a3: pick(2, base.a3),
        a4: pick(3, base.a4),
        a5: pick(4, base.a5),
        alpha: pick(5, base.alpha),
        beta: pick(6, base.beta),
        nu: pick(7, base.nu),
        alpha1: pick(8, base.alpha1),
        alpha2: pick(9, base.alpha2),
    };
    match NonlinearityModel::new(kind, constants) {
        Ok(m) => Some(m),
        Err(err) => {
            e.fail("model.type", err);
            None
        }
    }
}

/// Parses and validates a configuration.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut e = tokenize(text);

    let k = e.count("lattice.K", 8) as usize;
    let lengths = ["lattice.l1", "lattice.l2", "lattice.l3"].map(|key| e.float(key, 1.0));
    let lattice = match LatticeSpec::new(lengths, k) {
        Ok(l) => Some(l),
        Err(err) => {
            e.fail("lattice.K", err);
            None
        }
    };

    let default_n = e.opt_count("grid.n").unwrap_or(2 * (2 * k as u64 + 1));
    let grid = ["grid.n1", "grid.n2", "grid.n3"].map(|key| e.count(key, default_n) as usize);
    for (axis, &n) in grid.iter().enumerate() {
        if n < 2 * k + 1 {
            let key = ["grid.n1", "grid.n2", "grid.n3"][axis];
            let key = if e.values.contains_key(key) { key } else { "grid.n" };
            e.fail(key, format!("grid size {n} on axis {} is below 2K+1 = {}", axis + 1, 2 * k + 1));
        }
    }

    let m = e.float("params.m", 1.0);
    let a = e.float("params.a", 0.5);
    let eps = e.float("params.eps", 0.5);
    let external = match e.text("external.type", "none") {
        "none" => None,
        "constant" => Some(ExternalField::Constant(e.float("external.amplitude", 0.1))),
        "cosine" => Some(ExternalField::Cosine {
            amplitude: e.float("external.amplitude", 0.1),
            axis: e.count("external.axis", 1) as usize,
        }),
        other => {
            let msg = format!("unknown external field type `{other}` (none, constant, cosine)");
            e.fail("external.type", msg);
            None
        }
    };
    let params = lattice.and_then(|lat| {
        let p = ProblemParams::new(lat, m, a, eps).and_then(|p| match external.clone() {
            Some(x) => p.with_external(x),
            None => Ok(p),
        });
        match p {
            Ok(p) => Some(p),
            Err(err) => {
                let key = if e.values.contains_key("params.a") { "params.a" } else { "params.m" };
                e.fail(key, err);
                None
            }
        }
    });

    let schedule = EpsSchedule {
        eps0: e.float("schedule.eps0", 0.5),
        steps: e.count("schedule.steps", 12) as usize,
        ratio: e.float("schedule.ratio", 0.5),
    };
    if let Err(err) = schedule.validate() {
        e.fail("schedule.eps0", err);
    }

    let model = build_model(&mut e);

    let seed = e.count("solver.seed", 1);
    let defaults = SolverConfig::default();
    let solver = SolverConfig {
        geometry: GeometryConfig {
            neg_cutoff: e.float("solver.neg_cutoff", defaults.geometry.neg_cutoff),
            embed_samples: e.count("solver.embed_samples", defaults.geometry.embed_samples as u64) as usize,
            seed,
        },
        flow: FlowConfig {
            fibers: e.count("solver.fibers", defaults.flow.fibers as u64) as usize,
            ladder: e.count("solver.ladder", defaults.flow.ladder as u64) as usize,
            max_sweeps: e.count("solver.flow_max_sweeps", defaults.flow.max_sweeps as u64) as usize,
            level_tol: e.float("solver.level_tol", defaults.flow.level_tol),
            level_tol_rel: e.float("solver.level_tol_rel", defaults.flow.level_tol_rel),
            ..defaults.flow
        },
        newton: NewtonConfig {
            tol: e.float("solver.newton_tol", defaults.newton.tol),
            max_iter: e.count("solver.newton_max_iter", defaults.newton.max_iter as u64) as usize,
            smoothing: e.float("solver.newton_smoothing", defaults.newton.smoothing),
            ..defaults.newton
        },
        c2_samples: e.count("solver.c2_samples", defaults.c2_samples as u64) as usize,
        audit_samples: e.count("solver.audit_samples", defaults.audit_samples as u64) as usize,
    };
    if solver.flow.fibers == 0 {
        e.fail("solver.fibers", "solver.fibers must be positive");
    }
    if solver.flow.ladder < 4 {
        e.fail("solver.ladder", "solver.ladder must be at least 4");
    }
    if !(solver.geometry.neg_cutoff >= 1.0) {
        e.fail("solver.neg_cutoff", "solver.neg_cutoff must be at least 1 (the mass gap)");
    }
    if !(solver.newton.tol > 0.0) {
        e.fail("solver.newton_tol", "solver.newton_tol must be positive");
    }
    if !(solver.newton.smoothing >= 0.0) {
        e.fail("solver.newton_smoothing", "solver.newton_smoothing must be nonnegative");
    }

    let output_dir = PathBuf::from(e.text("output.dir", "out"));

    if !e.errors.is_empty() {
        return Err(Error::Config(e.errors.join("\n")));
    }
    let (Some(lattice), Some(params), Some(model)) = (lattice, params, model) else {
        unreachable!("every failed piece records an error");
    };
    Ok(RunConfig {
        lattice,
        grid,
        params,
        schedule,
        model,
        solver,
        seed,
        output_dir,
        source: text.to_string(),
    })
}
