//! Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any
//! criterion fails. The oracles here are written independently of the
//! library: hand-entered gamma matrices, closed-form roots and levels, and
//! bilinears and power laws evaluated directly on grid values.

use std::f64::consts::{PI, SQRT_2, TAU};
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use dirac_torus::clifford::{alpha, gamma, gamma5, pauli, verify_clifford, Matrix2, Matrix4, Spinor4};
use dirac_torus::field::{NormKind, Sign, SpinorField, SpinorSpace};
use dirac_torus::functional::{ActionFunctional, ExternalField, ProblemParams};
use dirac_torus::harness::{load_snapshot, parse_config, run, Command, RunConfig};
use dirac_torus::nonlinear::NonlinearityModel;
use dirac_torus::solver::{
    big_r_root, boundary_audit, newton_refine, sphere_audit, LinkingGeometry, NewtonConfig,
};
use dirac_torus::spectral::{mode_eigenbasis, DualMode, LatticeSpec};
use nalgebra::Vector4;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = (bool, String);

const EIGEN_TOL: f64 = 1e-10;
const ROUNDTRIP_TOL: f64 = 1e-12;
const FD_STEP: f64 = 1e-4;
const FD_TOL: f64 = 1e-5;
const PS_TOL: f64 = 1e-10;
const NEWTON_E_TOL: f64 = 1e-10;
const LEVEL_TOL: f64 = 1e-12;
const BOUND_SLACK: f64 = 1e-8;
const FINAL_RESIDUAL: f64 = 1e-6;
const NONTRIVIAL_L2: f64 = 1e-3;
const RUNTIME_LIMIT: Duration = Duration::from_secs(600);

fn z(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn repo_path(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").join(rel)
}

fn load_config(rel: &str) -> RunConfig {
    let text = fs::read_to_string(repo_path(rel)).expect("shipped config is readable");
    parse_config(&text).expect("shipped config parses")
}

// ---------------------------------------------------------------------------
// Reference matrices in the Dirac representation.

fn ref_pauli(k: usize) -> Matrix2 {
    let (o, i, n) = (z(0.0, 0.0), z(1.0, 0.0), z(0.0, 1.0));
    match k {
        1 => Matrix2::new(o, i, i, o),
        2 => Matrix2::new(o, -n, n, o),
        _ => Matrix2::new(i, o, o, -i),
    }
}

fn ref_gamma(mu: usize) -> Matrix4 {
    let mut g = Matrix4::zeros();
    if mu == 0 {
        for d in 0..4 {
            g[(d, d)] = z(if d < 2 { 1.0 } else { -1.0 }, 0.0);
        }
        return g;
    }
    let s = ref_pauli(mu);
    for r in 0..2 {
        for c in 0..2 {
            g[(r, c + 2)] = s[(r, c)];
            g[(r + 2, c)] = -s[(r, c)];
        }
    }
    g
}

fn ref_alpha(k: usize) -> Matrix4 {
    ref_gamma(0) * ref_gamma(k)
}

/// `Σₖ 2πζₖαₖ + mγ⁰` from the reference matrices.
fn ref_symbol(zeta: [f64; 3], m: f64) -> Matrix4 {
    let mut s = ref_gamma(0) * z(m, 0.0);
    for k in 0..3 {
        s += ref_alpha(k + 1) * z(TAU * zeta[k], 0.0);
    }
    s
}

fn ref_slashed(zeta: [f64; 3]) -> Matrix4 {
    ref_symbol(zeta, 0.0)
}

// ---------------------------------------------------------------------------
// Direct pointwise oracles.

fn scalar_bilinear(p: &Spinor4) -> f64 {
    let c = p.0;
    c[0].norm_sqr() + c[1].norm_sqr() - c[2].norm_sqr() - c[3].norm_sqr()
}

fn grid_integral(space: &SpinorSpace, f: &SpinorField, pointwise: impl Fn(&Spinor4) -> f64) -> f64 {
    space.to_grid(f).values.iter().map(pointwise).sum::<f64>() * space.cell_volume()
}

/// A field with `ψ̄ψ > 0` at every grid point, checked with the direct
/// bilinear: a constant upper spinor plus smooth noise, halved until clear
/// of the null cone.
fn off_cone_field(space: &SpinorSpace, rng: &mut ChaCha8Rng) -> SpinorField {
    let base = space.constant(Spinor4::unit(0) * 0.3);
    let noise = space.random_field(rng, 2.0);
    let mut noise = noise.scaled(0.03 / space.norm(&noise, NormKind::Energy));
    loop {
        let f = base.clone() + &noise;
        if space.to_grid(&f).values.iter().all(|p| scalar_bilinear(p) > 0.0) {
            return f;
        }
        noise = noise.scaled(0.5);
    }
}

fn unit_energy(space: &SpinorSpace, v: SpinorField) -> SpinorField {
    let n = space.norm(&v, NormKind::Energy);
    v.scaled(1.0 / n)
}

fn fd_worst(fun: &ActionFunctional<'_>, pairs: &[(SpinorField, SpinorField)]) -> f64 {
    pairs
        .iter()
        .map(|(f, v)| {
            let mut plus = f.clone();
            plus.axpy(FD_STEP, v);
            let mut minus = f.clone();
            minus.axpy(-FD_STEP, v);
            let fd = (fun.value(&plus) - fun.value(&minus)) / (2.0 * FD_STEP);
            let an = fun.directional_derivative(f, v);
            (fd - an).abs() / an.abs()
        })
        .fold(0.0, f64::max)
}

/// Worst central-difference error for off-cone base points at `ε ∈ {0, ½, 1}`.
fn gradient_criterion(space: &SpinorSpace, params: &ProblemParams, seed: u64) -> (f64, f64) {
    let model = NonlinearityModel::default_model();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for (k, eps) in [0.0, 0.5, 1.0].into_iter().enumerate() {
        let p = params.with_eps(eps).unwrap();
        let fun = ActionFunctional::new(space, &p, &model).unwrap();
        let count = if k == 2 { 6 } else { 7 };
        let pairs: Vec<_> = (0..count)
            .map(|_| {
                let f = off_cone_field(space, &mut rng);
                let v = unit_energy(space, space.random_field(&mut rng, 2.0));
                (f, v)
            })
            .collect();
        worst = worst.max(fd_worst(&fun, &pairs));
    }
    // Generic fields cross the null cone, where the power law is only
    // C^{1,1/4}; reported for information.
    let fun = ActionFunctional::new(space, params, &model).unwrap();
    let generic: Vec<_> = (0..5)
        .map(|_| {
            let f = space.random_field(&mut rng, 2.0).scaled(0.1);
            let v = unit_energy(space, space.random_field(&mut rng, 2.0));
            (f, v)
        })
        .collect();
    (worst, fd_worst(&fun, &generic))
}

/// `2J − dJ[ψ]` against `(2p − 2)∫F + ε(α₂ − 2)∫|ψ|^{α₂}` for the power
/// law with `p = 5/4`, `α₂ = 2p`, relative to `1 + |J|`.
fn ps_criterion(space: &SpinorSpace, params: &ProblemParams, seed: u64) -> f64 {
    let model = NonlinearityModel::default_model();
    let p = 1.25;
    let alpha2 = 2.0 * p;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for i in 0..50 {
        let eps = [0.0, 0.5, 1.0][i % 3];
        let prm = params.with_eps(eps).unwrap();
        let fun = ActionFunctional::new(space, &prm, &model).unwrap();
        let scale = [0.05, 0.2, 1.0][i % 3];
        let f = space.random_field(&mut rng, 1.0 + (i % 4) as f64 * 0.5).scaled(scale);
        let lhs = 2.0 * fun.value(&f) - fun.directional_derivative(&f, &f);
        let f_int = grid_integral(space, &f, |q| scalar_bilinear(q).abs().powf(p));
        let pert = grid_integral(space, &f, |q| q.norm_sqr().powf(alpha2 / 2.0));
        let rhs = (2.0 * p - 2.0) * f_int + eps * (alpha2 - 2.0) * pert;
        worst = worst.max((lhs - rhs).abs() / (1.0 + fun.value(&f).abs()));
    }
    worst
}

/// Newton from `0.05·e₁` against the closed-form constant root.
fn newton_criterion(space: &SpinorSpace, params: &ProblemParams, root: f64, level: f64) -> Outcome {
    let model = NonlinearityModel::default_model();
    let fun = ActionFunctional::new(space, params, &model).unwrap();
    let start = space.constant(Spinor4::unit(0) * 0.05);
    match newton_refine(&fun, &start, &NewtonConfig::default()) {
        Ok(out) => {
            let exact = space.constant(Spinor4::unit(0) * root);
            let err = space.norm(&(out.field.clone() - &exact), NormKind::Energy);
            let j = fun.value(&out.field);
            let ok = err < NEWTON_E_TOL && (j - level).abs() < LEVEL_TOL;
            (
                ok,
                format!(
                    "root {root:e}: E-error {err:.2e}, J = {j:.12e} vs {level:.12e}, {} steps",
                    out.iterations
                ),
            )
        }
        Err(e) => (false, format!("newton failed: {e}")),
    }
}

struct ContinueRun {
    dir: tempfile::TempDir,
    elapsed: Duration,
    error: Option<String>,
}

fn continue_run(config: &RunConfig) -> ContinueRun {
    let dir = tempfile::tempdir().unwrap();
    let start = Instant::now();
    let summary = run(&Command::Continue, config, Some(dir.path()));
    ContinueRun {
        dir,
        elapsed: start.elapsed(),
        error: summary.error.map(|e| e.to_string()),
    }
}

fn parse_rows(text: &str) -> Vec<std::collections::HashMap<String, f64>> {
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap_or("").split(',').collect();
    lines
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            header
                .iter()
                .zip(l.split(','))
                .map(|(h, v)| (h.to_string(), v.parse::<f64>().unwrap_or(f64::NAN)))
                .collect()
        })
        .collect()
}

/// Checks a finished `continue` run from its files alone, re-evaluating the
/// final snapshot with a fresh functional.
fn audit_continuation(config: &RunConfig, out: &ContinueRun) -> Outcome {
    if let Some(e) = &out.error {
        return (false, format!("run failed: {e}"));
    }
    let Ok(text) = fs::read_to_string(out.dir.path().join("diagnostics.csv")) else {
        return (false, "diagnostics.csv missing".into());
    };
    let rows = parse_rows(&text);
    let alpha = config.model.constants.alpha;
    let mut problems = Vec::new();
    for r in &rows {
        let (level, c1, c2) = (r["level"], r["c1"], r["c2"]);
        if !(c1 < level && level < c2) {
            problems.push(format!("stage {}: level {level:e} outside ({c1:e}, {c2:e})", r["stage"]));
        }
        let cap = 2.0 * level / (alpha - 2.0) * (1.0 + BOUND_SLACK);
        if !(r["F_int"] <= cap) {
            problems.push(format!("stage {}: F_int {:e} above {cap:e}", r["stage"], r["F_int"]));
        }
    }
    let Some(last) = rows.last() else {
        return (false, "no stages".into());
    };
    if last["eps"] != 0.0 {
        problems.push(format!("last stage has eps {:e}", last["eps"]));
    }

    let snap = out.dir.path().join(format!("stage_{:02}.bin", rows.len() - 1));
    let (recheck_res, recheck_l2, recheck_level) = match load_snapshot(&snap) {
        Ok((_, field)) => {
            let space = SpinorSpace::new(config.lattice, config.grid, config.params.mass).unwrap();
            let params = config.params.with_eps(0.0).unwrap();
            let fun = ActionFunctional::new(&space, &params, &config.model).unwrap();
            let res = space.dual_norm(&fun.residual(&field));
            (res, space.norm(&field, NormKind::L2), fun.value(&field))
        }
        Err(e) => return (false, format!("final snapshot unreadable: {e}")),
    };
    if !(recheck_res < FINAL_RESIDUAL) {
        problems.push(format!("final residual {recheck_res:e}"));
    }
    if !(recheck_level >= last["c1"] && last["c1"] > 0.0) {
        problems.push(format!("final level {recheck_level:e} below c1 {:e}", last["c1"]));
    }
    if !(recheck_l2 > NONTRIVIAL_L2) {
        problems.push(format!("final L2 norm {recheck_l2:e}"));
    }
    if out.elapsed > RUNTIME_LIMIT {
        problems.push(format!("runtime {:.0} s", out.elapsed.as_secs_f64()));
    }
    let detail = format!(
        "{} stages in {:.0} s; levels within (c1, c2) = ({:.3e}, {:.3e}); final level {recheck_level:.6e}, residual {recheck_res:.1e}, L2 {recheck_l2:.4e}",
        rows.len(),
        out.elapsed.as_secs_f64(),
        last["c1"],
        last["c2"],
    );
    if problems.is_empty() {
        (true, detail)
    } else {
        (false, format!("{detail}; {}", problems.join("; ")))
    }
}

// ---------------------------------------------------------------------------
// Criteria.

fn criterion_1() -> Outcome {
    let id2 = Matrix2::identity();
    let id4 = Matrix4::identity();
    let mut checks = 0;
    let mut failed = Vec::new();
    let mut check = |name: String, ok: bool| {
        checks += 1;
        if !ok {
            failed.push(name);
        }
    };
    for j in 1..=3 {
        check(format!("sigma{j} entries"), pauli(j).unwrap() == ref_pauli(j));
        for k in j..=3 {
            let (a, b) = (pauli(j).unwrap(), pauli(k).unwrap());
            let want = if j == k { id2 * z(2.0, 0.0) } else { Matrix2::zeros() };
            check(format!("sigma{j}sigma{k}"), a * b + b * a == want);
        }
    }
    let eta = |mu: usize| if mu == 0 { 1.0 } else { -1.0 };
    for mu in 0..4 {
        check(format!("gamma{mu} entries"), gamma(mu).unwrap() == ref_gamma(mu));
        for nu in mu..4 {
            let (a, b) = (gamma(mu).unwrap(), gamma(nu).unwrap());
            let want = if mu == nu { id4 * z(2.0 * eta(mu), 0.0) } else { Matrix4::zeros() };
            check(format!("gamma{mu}gamma{nu}"), a * b + b * a == want);
        }
    }
    let g5 = gamma5();
    let product = ref_gamma(0) * ref_gamma(1) * ref_gamma(2) * ref_gamma(3);
    check("gamma5 product".into(), g5 == product);
    check("gamma5 square".into(), g5 * g5 == -id4);
    for mu in 0..4 {
        let g = gamma(mu).unwrap();
        check(format!("gamma5 gamma{mu}"), g5 * g + g * g5 == Matrix4::zeros());
    }
    for j in 1..=3 {
        let a = alpha(j).unwrap();
        check(format!("alpha{j} Hermitian"), a.adjoint() == a);
        for k in j..=3 {
            let b = alpha(k).unwrap();
            let want = if j == k { id4 * z(2.0, 0.0) } else { Matrix4::zeros() };
            check(format!("alpha{j}alpha{k}"), a * b + b * a == want);
        }
    }
    let report = verify_clifford();
    check(
        format!("library suite ({} identities)", report.identities.len()),
        report.all_passed() && report.identities.len() == 22,
    );
    if failed.is_empty() {
        (true, format!("{checks} exact checks, library suite reports 22 identities"))
    } else {
        (false, format!("failed: {}", failed.join(", ")))
    }
}

fn criterion_2() -> Outcome {
    let mut modes = 0;
    let mut worst = [0.0f64; 4];
    let mut bad = Vec::new();
    for m in [0.5, 1.0, 2.0] {
        for lengths in [[1.0, 1.0, 1.0], [1.0, 2.0, 3.0]] {
            let lattice = LatticeSpec::new(lengths, 6).unwrap();
            let k = 6i32;
            for a in -k..=k {
                for b in -k..=k {
                    for c in -k..=k {
                        let n = [a, b, c];
                        let zeta: [f64; 3] = std::array::from_fn(|i| f64::from(n[i]) / lengths[i]);
                        let mu = 2.0 * PI * zeta.iter().map(|x| x * x).sum::<f64>().sqrt();
                        let lam = (mu * mu + m * m).sqrt();
                        let basis = match mode_eigenbasis(&DualMode::new(n, &lattice), m) {
                            Ok(b) => b,
                            Err(e) => {
                                bad.push(format!("{n:?}: {e}"));
                                continue;
                            }
                        };
                        modes += 1;
                        let sym = ref_symbol(zeta, m);
                        let slashed = ref_slashed(zeta);
                        let g0 = ref_gamma(0);
                        let v = basis.vectors;
                        let ortho = (v.adjoint() * v - Matrix4::identity()).norm();
                        let mut residual: f64 = 0.0;
                        let mut construction: f64 = 0.0;
                        let mut count = [0usize; 2];
                        for j in 0..4 {
                            let col: Vector4<Complex64> = v.column(j).into_owned();
                            let rq = (col.adjoint() * sym * col)[(0, 0)].re;
                            if (rq - lam).abs() < EIGEN_TOL * lam {
                                count[0] += 1;
                            } else if (rq + lam).abs() < EIGEN_TOL * lam {
                                count[1] += 1;
                            }
                            residual = residual.max((sym * col - col * z(rq, 0.0)).norm() / lam);
                            if mu == 0.0 {
                                let s = rq.signum();
                                construction = construction.max((g0 * col - col * z(s, 0.0)).norm());
                            } else {
                                let t = (rq - mu) / m;
                                let psi = (col - g0 * col * z(t, 0.0)) / z(1.0 - t * t, 0.0);
                                let d = (slashed * psi - psi * z(mu, 0.0)).norm() / (psi.norm() * (1.0 + mu));
                                construction = construction.max(d);
                            }
                        }
                        worst[0] = worst[0].max((basis.lambda_pos - lam).abs() / lam);
                        worst[1] = worst[1].max(residual);
                        worst[2] = worst[2].max(ortho);
                        worst[3] = worst[3].max(construction);
                        if count != [2, 2] {
                            bad.push(format!("m = {m}, n = {n:?}: multiplicities {count:?}"));
                        }
                    }
                }
            }
        }
    }
    let ok = bad.is_empty() && worst.iter().all(|w| *w < EIGEN_TOL);
    let detail = format!(
        "{modes} modes: eigenvalue {:.1e}, residual {:.1e}, orthonormality {:.1e}, construction {:.1e}; multiplicity 2 each sign",
        worst[0], worst[1], worst[2], worst[3]
    );
    if bad.is_empty() {
        (ok, detail)
    } else {
        (false, format!("{detail}; {}", bad.into_iter().take(5).collect::<Vec<_>>().join("; ")))
    }
}

fn criterion_3() -> Outcome {
    let lattice = LatticeSpec::new([1.0, 1.5, 2.0], 4).unwrap();
    let space = SpinorSpace::new(lattice, [10, 12, 9], 0.8).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = [0.0f64; 5];
    for i in 0..50 {
        let f = space.random_field(&mut rng, (i % 4) as f64);
        let scale = f.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);

        let (back, tail) = space.to_modes(&space.to_grid(&f));
        worst[0] = worst[0].max(back.max_abs_diff(&f) / scale + tail);

        let l2 = space.norm(&f, NormKind::L2).powi(2);
        let grid_l2 = grid_integral(&space, &f, Spinor4::norm_sqr);
        worst[1] = worst[1].max((l2 - grid_l2).abs() / l2);

        let pos = space.project(&f, Sign::Positive);
        let neg = space.project(&f, Sign::Negative);
        let idem = space.project(&pos, Sign::Positive).max_abs_diff(&pos)
            + space.project(&neg, Sign::Negative).max_abs_diff(&neg)
            + space.project(&pos, Sign::Negative).max_abs_diff(&space.zeros())
            + (pos.clone() + &neg).max_abs_diff(&f);
        worst[2] = worst[2].max(idem / scale);
        worst[3] = worst[3].max(space.inner_l2(&pos, &neg).abs() / l2);

        let form: f64 = f
            .coeffs
            .iter()
            .zip(space.modes())
            .map(|(c, m)| {
                let v = c.to_vector();
                (v.adjoint() * ref_symbol(m.zeta, 0.8) * v)[(0, 0)].re
            })
            .sum::<f64>()
            * space.volume();
        let split = space.norm(&pos, NormKind::Energy).powi(2) - space.norm(&neg, NormKind::Energy).powi(2);
        worst[4] = worst[4].max((form - split).abs() / form.abs().max(1.0));
    }
    let ok = worst[..4].iter().all(|w| *w < ROUNDTRIP_TOL) && worst[4] < EIGEN_TOL;
    (
        ok,
        format!(
            "50 fields: round trip {:.1e}, Parseval {:.1e}, projector algebra {:.1e}, P+/P- orthogonality {:.1e}, <D psi, psi> split {:.1e}",
            worst[0], worst[1], worst[2], worst[3], worst[4]
        ),
    )
}

fn criterion_4(space: &SpinorSpace, params: &ProblemParams) -> Outcome {
    let (worst, generic) = gradient_criterion(space, params, 4);
    (
        worst < FD_TOL,
        format!(
            "20 off-cone pairs, h = {FD_STEP:e}: worst relative error {worst:.2e} (fields crossing psi-bar psi = 0: {generic:.2e}, informational)"
        ),
    )
}

fn criterion_5(space: &SpinorSpace, params: &ProblemParams) -> Outcome {
    let worst = ps_criterion(space, params, 5);
    (worst < PS_TOL, format!("50 fields: worst gap {worst:.2e} relative to 1 + |J|"))
}

fn criterion_6(config: &RunConfig, space: &SpinorSpace) -> Outcome {
    let model = NonlinearityModel::default_model();
    let r0 = match big_r_root(&model.constants, space.volume(), space.mass()) {
        Ok(r) => r,
        Err(e) => return (false, format!("radius failed: {e}")),
    };
    let mut ok = (r0 - SQRT_2).abs() < 1e-10;
    let mut parts = vec![format!("R0 = {r0:.12} (sqrt 2 to {:.1e})", (r0 - SQRT_2).abs())];
    let geo_config = config.solver.geometry.clone();
    for eps in [0.0, 0.5, 1.0] {
        let params = config.params.with_eps(eps).unwrap();
        let fun = ActionFunctional::new(space, &params, &model).unwrap();
        let geo = match LinkingGeometry::build(&fun, &geo_config) {
            Ok(g) => g,
            Err(e) => return (false, format!("geometry at eps {eps} failed: {e}")),
        };
        let boundary = boundary_audit(&fun, &geo, 1000);
        let sphere = sphere_audit(&fun, &geo, 1000, config.seed);
        let b_ok = boundary.max_value <= 1e-9;
        let s_ok = sphere.min_value >= geo.c_star - 1e-9;
        ok &= b_ok && s_ok;
        parts.push(format!(
            "eps {eps}: boundary max {:.3e}, sphere min {:.3e} >= C* {:.3e}",
            boundary.max_value, sphere.min_value, geo.c_star
        ));
    }
    (ok, parts.join("; "))
}

fn criterion_7(space: &SpinorSpace, params: &ProblemParams) -> Outcome {
    let params = params.with_eps(0.0).unwrap();
    // (m − a)s = 2p s^{2p−1} with p = 5/4 gives s = ((m − a)/2p)².
    let root = (0.5f64 / 2.5).powi(2);
    let level = space.volume() * (0.5 * 0.5 * root * root - root.powf(2.5));
    newton_criterion(space, &params, root, level)
}

fn criterion_8(config: &RunConfig) -> (Outcome, ContinueRun) {
    let out = continue_run(config);
    (audit_continuation(config, &out), out)
}

fn criterion_9() -> Outcome {
    let config = load_config("configs/external.conf");
    let space = SpinorSpace::new(config.lattice, config.grid, config.params.mass).unwrap();
    let mut parts = Vec::new();
    let mut ok = true;
    let fun = ActionFunctional::new(&space, &config.params, &config.model).unwrap();
    let potential_err = match fun.potential() {
        Some(m) => m
            .iter()
            .enumerate()
            .map(|(p, v)| (v - 0.1 * (1.0 + (TAU * space.grid_point(p)[0]).cos())).abs())
            .fold(0.0, f64::max),
        None => f64::INFINITY,
    };
    ok &= potential_err < 1e-15;
    parts.push(format!("potential vs 0.1(1 + cos 2 pi x1) {potential_err:.1e}"));

    let (fd, _) = gradient_criterion(&space, &config.params, 9);
    ok &= fd < FD_TOL;
    parts.push(format!("gradient {fd:.2e}"));

    let ps = ps_criterion(&space, &config.params, 9);
    ok &= ps < PS_TOL;
    parts.push(format!("identity gap {ps:.2e}"));

    // Constant M = 0.1: (m − a − M)s = 2p s^{2p−1}.
    let shifted = ProblemParams::new(config.lattice, 1.0, 0.5, 0.0)
        .unwrap()
        .with_external(ExternalField::Constant(0.1))
        .unwrap();
    let root = (0.4f64 / 2.5).powi(2);
    let level = space.volume() * (0.5 * 0.4 * root * root - root.powf(2.5));
    let (n_ok, n_detail) = newton_criterion(&space, &shifted, root, level);
    ok &= n_ok;
    parts.push(n_detail);

    let out = continue_run(&config);
    let (c_ok, c_detail) = audit_continuation(&config, &out);
    ok &= c_ok;
    parts.push(c_detail);
    (ok, format!("cosine field: {}", parts.join("; ")))
}

fn criterion_10(config: &RunConfig, space: &SpinorSpace, first: &ContinueRun) -> Outcome {
    let model = NonlinearityModel::default_model();
    let fun = ActionFunctional::new(space, &config.params, &model).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let (mut phase, mut shift) = (0.0f64, 0.0f64);
    for _ in 0..20 {
        let f = space.random_field(&mut rng, 1.5).scaled(0.2);
        let j = fun.value(&f);
        let theta = rng.random_range(0.0..TAU);
        phase = phase.max((fun.value(&f.phase_rotated(theta)) - j).abs());
        let s: [i64; 3] = std::array::from_fn(|_| rng.random_range(-40..40));
        shift = shift.max((fun.value(&space.translated(&f, s)) - j).abs());
    }
    let mut ok = phase < 1e-10 && shift < 1e-10;
    let mut detail = format!("phase {phase:.1e}, grid shift {shift:.1e}");

    let second = continue_run(config);
    let mut compared = 0;
    let mut differing = Vec::new();
    let mut names: Vec<_> = fs::read_dir(first.dir.path())
        .map(|d| d.filter_map(|e| e.ok()).map(|e| e.file_name()).collect())
        .unwrap_or_default();
    names.sort();
    for name in names {
        let name = name.to_string_lossy().to_string();
        if name == "manifest.json" {
            continue;
        }
        compared += 1;
        let a = fs::read(first.dir.path().join(&name)).ok();
        let b = fs::read(second.dir.path().join(&name)).ok();
        if a.is_none() || a != b {
            differing.push(name);
        }
    }
    ok &= second.error.is_none() && compared > 0 && differing.is_empty();
    detail.push_str(&format!("; rerun of the default config: {compared} files compared"));
    if !differing.is_empty() {
        detail.push_str(&format!(", differing: {}", differing.join(", ")));
    } else if compared > 0 {
        detail.push_str(", byte-identical");
    }
    (ok, detail)
}

fn guarded(f: impl FnOnce() -> Outcome) -> Outcome {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| (false, "panicked".into()))
}

fn main() {
    let config = load_config("configs/default.conf");
    let space = SpinorSpace::new(config.lattice, config.grid, config.params.mass).unwrap();
    let mut results: Vec<(usize, &str, Outcome)> = Vec::new();
    let mut report = |n: usize, name: &'static str, o: Outcome| {
        println!("{} criterion {n} ({name}): {}", if o.0 { "PASS" } else { "FAIL" }, o.1);
        results.push((n, name, o));
    };

    report(1, "Clifford identities", guarded(criterion_1));
    report(2, "per-mode spectrum", guarded(criterion_2));
    report(3, "transforms and projectors", guarded(criterion_3));
    report(4, "gradient", guarded(|| criterion_4(&space, &config.params)));
    report(5, "Palais-Smale identity", guarded(|| criterion_5(&space, &config.params)));
    report(6, "linking geometry", guarded(|| criterion_6(&config, &space)));
    report(7, "Newton on the constant branch", guarded(|| criterion_7(&space, &config.params)));
    let first = catch_unwind(AssertUnwindSafe(|| criterion_8(&config)));
    let first = match first {
        Ok((o, run)) => {
            report(8, "default continuation", o);
            Some(run)
        }
        Err(_) => {
            report(8, "default continuation", (false, "panicked".into()));
            None
        }
    };
    report(9, "external field", guarded(criterion_9));
    report(
        10,
        "invariances and determinism",
        match &first {
            Some(run) => guarded(|| criterion_10(&config, &space, run)),
            None => (false, "no default run to compare against".into()),
        },
    );

    let failed: Vec<usize> = results.iter().filter(|r| !r.2 .0).map(|r| r.0).collect();
    println!("{} of {} criteria passed", results.len() - failed.len(), results.len());
    if !failed.is_empty() {
        std::process::exit(1);
    }
}
