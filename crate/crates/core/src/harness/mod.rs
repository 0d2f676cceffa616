//! Command orchestration behind the `dirac-torus` binary: each subcommand
//! reads a [`RunConfig`], writes its artifacts under one output directory
//! and finishes with a `manifest.json` naming them.

pub mod config;
pub mod verify;

use std::fmt::Write as _;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::field::snapshot::{read_snapshot, write_snapshot, SnapshotHeader};
use crate::field::{SpinorField, SpinorSpace};
use crate::functional::{level_bracket, ActionFunctional, LevelBracket};
use crate::solver::{
    bound_report, boundary_audit, flow_minmax, newton_refine, run_continuation, ContinuationRecord, FlowOutcome,
    LinkingGeometry, StageBounds,
};
use crate::spectral::LatticeSpec;

pub use config::{parse_config, RunConfig};
pub use verify::{verify_suite, CheckLine};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Command {
    Verify,
    Spectrum,
    Solve,
    Continue,
    Export { snapshot: PathBuf },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Verify => "verify",
            Command::Spectrum => "spectrum",
            Command::Solve => "solve",
            Command::Continue => "continue",
            Command::Export { .. } => "export",
        }
    }
}

/// Human-readable lines for the terminal, the files written and the
/// failure, if any.
#[derive(Debug, Default)]
pub struct RunSummary {
    pub lines: Vec<String>,
    pub files: Vec<PathBuf>,
    pub error: Option<Error>,
}

impl RunSummary {
    pub fn exit_code(&self) -> i32 {
        self.error.as_ref().map_or(0, Error::exit_code)
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    config_sha256: String,
    seed: u64,
    version: &'a str,
    files: Vec<String>,
}

pub const DIAGNOSTICS_HEADER: &str = "stage,eps,level,residual_dual,F_int,pert_int,l2,l3,h1,qbar,c1,c2";

/// Final-stage residual required by `continue`.
pub const FINAL_RESIDUAL: f64 = 1e-6;
/// Final-stage L² norm required by `continue`.
pub const NONTRIVIAL_L2: f64 = 1e-3;

/// Shortest representation that parses back to the same `f64`.
pub fn num(x: f64) -> String {
    format!("{x:e}")
}

pub fn config_hash(text: &str) -> String {
    Sha256::digest(text.as_bytes()).iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

struct Output {
    dir: PathBuf,
    files: Vec<PathBuf>,
}

impl Output {
    fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Output {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    fn create(&mut self, name: &str) -> Result<BufWriter<fs::File>> {
        let path = self.dir.join(name);
        let f = fs::File::create(&path)?;
        self.files.push(path);
        Ok(BufWriter::new(f))
    }

    fn text(&mut self, name: &str, body: &str) -> Result<()> {
        let mut w = self.create(name)?;
        w.write_all(body.as_bytes())?;
        w.flush()?;
        Ok(())
    }

    fn finish(mut self, command: &Command, config: &RunConfig) -> Result<Vec<PathBuf>> {
        let manifest = Manifest {
            command: command.name(),
            config_sha256: config_hash(&config.source),
            seed: config.seed,
            version: env!("CARGO_PKG_VERSION"),
            files: self
                .files
                .iter()
                .filter_map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
                .collect(),
        };
        let body = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Io(e.into()))?;
        self.text("manifest.json", &(body + "\n"))?;
        Ok(self.files)
    }
}

fn build_space(config: &RunConfig) -> Result<SpinorSpace> {
    SpinorSpace::new(config.lattice, config.grid, config.params.mass)
}

fn diagnostics_row(rec: &ContinuationRecord, bracket: &LevelBracket) -> String {
    let b: &StageBounds = &rec.bounds;
    [
        rec.stage.to_string(),
        num(rec.eps),
        num(rec.level),
        num(rec.residual_dual),
        num(b.f_int),
        num(b.pert_int),
        num(b.l2),
        num(b.l3),
        num(b.h1),
        num(b.qbar),
        num(bracket.c1),
        num(bracket.c2),
    ]
    .join(",")
}

fn write_flow(out: &mut Output, flow: &FlowOutcome) -> Result<()> {
    let mut body = String::from("sweep,sup_level\n");
    for (k, s) in flow.history.iter().enumerate() {
        let _ = writeln!(body, "{k},{}", num(*s));
    }
    out.text("flow.csv", &body)
}

fn write_stage_snapshot(out: &mut Output, space: &SpinorSpace, rec: &ContinuationRecord, frequency: f64) -> Result<()> {
    let header = SnapshotHeader::for_space(space, frequency, rec.eps);
    let mut w = out.create(&format!("stage_{:02}.bin", rec.stage))?;
    write_snapshot(&mut w, &header, &rec.field)?;
    w.flush()?;
    Ok(())
}

/// Monitor failures of a converged record, empty when all hold.
fn record_failures(rec: &ContinuationRecord, bracket: &LevelBracket, functional: &ActionFunctional<'_>) -> Vec<String> {
    let mut bad = Vec::new();
    if !(rec.level > bracket.c1 && rec.level < bracket.c2) {
        bad.push(format!(
            "stage {}: level {} outside ({}, {})",
            rec.stage,
            num(rec.level),
            num(bracket.c1),
            num(bracket.c2)
        ));
    }
    let p = functional.params();
    let report = bound_report(
        rec,
        &functional.model().constants,
        p.frequency,
        p.mass,
        functional.space().volume(),
    );
    for c in report.checks.iter().filter(|c| !c.passed) {
        bad.push(format!("stage {}: {} ({} > {})", rec.stage, c.name, num(c.lhs), num(c.rhs)));
    }
    bad
}

fn cmd_verify(config: &RunConfig, out: &mut Output, summary: &mut RunSummary) -> Result<()> {
    let space = build_space(config).map_err(|e| match e {
        Error::CrossCheck(msg) => Error::Verification(msg),
        other => other,
    })?;
    let fun = ActionFunctional::new(&space, &config.params, &config.model)?;
    let lines = verify_suite(&fun, config.seed);
    let mut body = String::new();
    for l in &lines {
        let tag = if l.passed { "PASS" } else { "FAIL" };
        let _ = writeln!(body, "{tag} {}: {}", l.name, l.detail);
    }
    out.text("verify.txt", &body)?;
    summary.lines.extend(body.lines().map(str::to_string));
    let failed: Vec<&str> = lines.iter().filter(|l| !l.passed).map(|l| l.name.as_str()).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Error::Verification(failed.join(", ")))
    }
}

fn cmd_spectrum(config: &RunConfig, out: &mut Output, summary: &mut RunSummary) -> Result<()> {
    let space = build_space(config)?;
    let mut w = out.create("spectrum.csv")?;
    writeln!(w, "n1,n2,n3,mu_abs,lambda")?;
    for b in space.bases() {
        let [n1, n2, n3] = b.mode.n;
        for l in b.eigenvalues() {
            writeln!(w, "{n1},{n2},{n3},{},{}", num(b.mode.mu_abs), num(l))?;
        }
    }
    w.flush()?;
    summary.lines.push(format!(
        "{} modes, {} eigenvalues; spectral gap [-{m}, {m}]",
        space.n_modes(),
        4 * space.n_modes(),
        m = num(space.mass())
    ));
    Ok(())
}

fn cmd_solve(config: &RunConfig, out: &mut Output, summary: &mut RunSummary) -> Result<()> {
    let space = build_space(config)?;
    let fun = ActionFunctional::new(&space, &config.params, &config.model)?;
    let geometry = LinkingGeometry::build(&fun, &config.solver.geometry)?;
    let audit = boundary_audit(&fun, &geometry, config.solver.audit_samples);
    if !audit.passed {
        return Err(Error::DegenerateGeometry(format!(
            "action reaches {} on the cylinder boundary",
            num(audit.max_value)
        )));
    }
    let bracket = level_bracket(&fun, &geometry, config.solver.c2_samples)?;
    let flow = flow_minmax(&fun, &geometry, &config.solver.flow, bracket.c1)?;
    write_flow(out, &flow)?;
    let refined = newton_refine(&fun, &flow.field, &config.solver.newton)?;
    let rec = ContinuationRecord {
        stage: 0,
        eps: fun.eps(),
        level: fun.value(&refined.field),
        residual_dual: refined.residual_dual,
        bounds: StageBounds::measure(&fun, &refined.field),
        newton_iterations: refined.iterations,
        warm_level: flow.level,
        field: refined.field,
    };
    out.text("diagnostics.csv", &format!("{DIAGNOSTICS_HEADER}\n{}\n", diagnostics_row(&rec, &bracket)))?;
    write_stage_snapshot(out, &space, &rec, config.params.frequency)?;
    summary.lines.push(format!(
        "eps {}: flow level {} after {} sweeps, refined level {} with residual {}",
        num(rec.eps),
        num(flow.level),
        flow.sweeps_run,
        num(rec.level),
        num(rec.residual_dual)
    ));
    let bad = record_failures(&rec, &bracket, &fun);
    if bad.is_empty() {
        Ok(())
    } else {
        Err(Error::Verification(bad.join("; ")))
    }
}

fn cmd_continue(config: &RunConfig, out: &mut Output, summary: &mut RunSummary) -> Result<()> {
    let space = build_space(config)?;
    let fun = ActionFunctional::new(&space, &config.params, &config.model)?;
    let run = run_continuation(&fun, &config.schedule, &config.solver)?;
    write_flow(out, &run.flow)?;
    let mut body = format!("{DIAGNOSTICS_HEADER}\n");
    let mut bad = Vec::new();
    for rec in &run.records {
        body.push_str(&diagnostics_row(rec, &run.bracket));
        body.push('\n');
        write_stage_snapshot(out, &space, rec, config.params.frequency)?;
        let stage_fun = fun.with_eps(rec.eps)?;
        bad.extend(record_failures(rec, &run.bracket, &stage_fun));
    }
    out.text("diagnostics.csv", &body)?;
    let last = run.last();
    if !(last.residual_dual < FINAL_RESIDUAL) {
        bad.push(format!("final residual {} is not below {}", num(last.residual_dual), num(FINAL_RESIDUAL)));
    }
    if !(last.bounds.l2 > NONTRIVIAL_L2) {
        bad.push(format!("final L2 norm {} is not above {}", num(last.bounds.l2), num(NONTRIVIAL_L2)));
    }
    summary.lines.push(format!(
        "bracket c1 = {}, c2 = {}; flow level {} after {} sweeps",
        num(run.bracket.c1),
        num(run.bracket.c2),
        num(run.flow.level),
        run.flow.sweeps_run
    ));
    summary.lines.push(format!(
        "{} stages; final eps 0 level {}, residual {}, L2 norm {}",
        run.records.len(),
        num(last.level),
        num(last.residual_dual),
        num(last.bounds.l2)
    ));
    if bad.is_empty() {
        Ok(())
    } else {
        Err(Error::Verification(bad.join("; ")))
    }
}

fn cmd_export(config: &RunConfig, snapshot: &Path, out: &mut Output, summary: &mut RunSummary) -> Result<()> {
    let (header, field) = read_snapshot(&mut fs::File::open(snapshot)?)?;
    let lattice = LatticeSpec::new(config.lattice.lengths, header.k as usize)?;
    let space = SpinorSpace::new(lattice, header.grid.map(|n| n as usize), header.mass)?;
    let grid = space.to_grid(&field);
    let mut w = out.create("export.csv")?;
    writeln!(w, "i1,i2,i3,x1,x2,x3,re1,im1,re2,im2,re3,im3,re4,im4")?;
    let [_, n2, n3] = grid.dims;
    for (flat, v) in grid.values.iter().enumerate() {
        let (i1, i2, i3) = (flat / (n2 * n3), (flat / n3) % n2, flat % n3);
        let x = space.grid_point(flat);
        let mut row = format!("{i1},{i2},{i3},{},{},{}", num(x[0]), num(x[1]), num(x[2]));
        for z in v.0 {
            let _ = write!(row, ",{},{}", num(z.re), num(z.im));
        }
        writeln!(w, "{row}")?;
    }
    w.flush()?;
    summary.lines.push(format!(
        "exported {} grid points of a K = {} field (eps = {})",
        grid.values.len(),
        header.k,
        num(header.eps)
    ));
    Ok(())
}

/// Runs `command`, writing artifacts under `out_dir` (or the configured
/// directory). Artifacts and the manifest are written even when a check
/// fails.
pub fn run(command: &Command, config: &RunConfig, out_dir: Option<&Path>) -> RunSummary {
    let dir = out_dir.map_or_else(|| config.output_dir.clone(), Path::to_path_buf);
    let mut summary = RunSummary::default();
    let mut out = match Output::new(&dir) {
        Ok(o) => o,
        Err(e) => {
            summary.error = Some(e);
            return summary;
        }
    };
    let outcome = match command {
        Command::Verify => cmd_verify(config, &mut out, &mut summary),
        Command::Spectrum => cmd_spectrum(config, &mut out, &mut summary),
        Command::Solve => cmd_solve(config, &mut out, &mut summary),
        Command::Continue => cmd_continue(config, &mut out, &mut summary),
        Command::Export { snapshot } => cmd_export(config, snapshot, &mut out, &mut summary),
    };
    match out.finish(command, config) {
        Ok(files) => summary.files = files,
        Err(e) => summary.error = Some(e),
    }
    if let Err(e) = outcome {
        summary.error = Some(e);
    }
    summary
}

/// Loads a snapshot written by `solve` or `continue`.
pub fn load_snapshot(path: &Path) -> Result<(SnapshotHeader, SpinorField)> {
    read_snapshot(&mut fs::File::open(path)?)
}
