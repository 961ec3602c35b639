//! Command implementations behind the `attrep` binary.
//!
//! Each command writes its human-readable report to the supplied writer and
//! returns the process exit status: 0 on success, 2 when a run ends in a
//! suspected blow-up or step collapse, or when an MMS study misses its order
//! threshold. Failures surface as [`CommandError`] and map to status 1.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::config::{ConfigError, RunConfig};
use crate::criteria::{classify_regime, REPORT_CSV_HEADER};
use crate::error::Error;
use crate::grid::{write_field_csv, write_pgm, ScalarField};
use crate::oracles::{estimate_c_rho, mms_convergence, MmsCase, ESTIMATE_CSV_HEADER};
use crate::sweep::{run_sweep, write_phase_csv, SweepSpec};
use crate::timestep::{run_simulation_with, VerdictKind};
use crate::VERSION;

#[derive(Debug, Error)]
pub enum CommandError {
    #[error(transparent)]
    Config(#[from] ConfigError),

    #[error(transparent)]
    Model(#[from] Error),

    #[error("cannot access {path}")]
    Io { path: PathBuf, source: io::Error },
}

type CmdResult<T> = std::result::Result<T, CommandError>;

fn io_at(path: &Path) -> impl FnOnce(io::Error) -> CommandError + '_ {
    move |source| CommandError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Comment lines opening every output file: version, then the resolved
/// configuration.
pub fn header_lines(cfg: &RunConfig) -> Vec<String> {
    let mut lines = vec![format!("attrep {VERSION}")];
    lines.extend(cfg.header_lines());
    lines
}

fn write_file(path: &Path, body: impl FnOnce(&mut BufWriter<File>) -> io::Result<()>) -> CmdResult<()> {
    let file = File::create(path).map_err(io_at(path))?;
    let mut w = BufWriter::new(file);
    body(&mut w).and_then(|_| w.flush()).map_err(io_at(path))
}

fn write_comments(w: &mut impl Write, comments: &[String]) -> io::Result<()> {
    comments.iter().try_for_each(|c| writeln!(w, "# {c}"))
}

fn write_snapshot(dir: &Path, stem: &str, field: &ScalarField, comments: &[String]) -> CmdResult<()> {
    let pgm = dir.join(format!("{stem}.pgm"));
    let mut scale = None;
    write_file(&pgm, |w| {
        scale = Some(write_pgm(w, field, comments)?);
        Ok(())
    })?;
    let scale = scale.expect("written");
    write_file(&dir.join(format!("{stem}.pgm.scale")), |w| writeln!(w, "{}", scale.sidecar_line()))
}

fn ensure_dir(dir: &Path) -> CmdResult<()> {
    fs::create_dir_all(dir).map_err(io_at(dir))
}

/// Simulates the configured problem and persists norms, verdict, regime
/// report and snapshots under `cfg.output_dir`.
pub fn cmd_run(cfg: &RunConfig, out: &mut dyn Write) -> CmdResult<i32> {
    let dir = cfg.output_dir.as_path();
    ensure_dir(dir)?;
    let header = header_lines(cfg);
    let model = cfg.model()?;
    let init = cfg.initial_state()?;
    let report = classify_regime(&cfg.model, cfg.c_reg)?;

    if cfg.snapshot_every == 0 {
        write_snapshot(dir, "u_initial", &init.u, &header)?;
    }
    let mut row_index = 0usize;
    let mut snapshot_error = None;
    let outcome = run_simulation_with(&model, init, &cfg.run_options(), |state, _| {
        if cfg.snapshot_every > 0 && row_index.is_multiple_of(cfg.snapshot_every) && snapshot_error.is_none() {
            let mut comments = header.clone();
            comments.push(format!("t = {}", state.t));
            if let Err(e) = write_snapshot(dir, &format!("u_{row_index:06}"), &state.u, &comments) {
                snapshot_error = Some(e);
            }
        }
        row_index += 1;
    })?;
    if let Some(e) = snapshot_error {
        return Err(e);
    }

    let norms = dir.join("norms.csv");
    write_file(&norms, |w| outcome.series.write_csv(w, &header))?;
    let verdict = outcome.verdict;
    write_file(&dir.join("verdict.txt"), |w| {
        write_comments(w, &header)?;
        writeln!(w, "{}", verdict.summary_line())
    })?;
    write_file(&dir.join("regime.txt"), |w| {
        write_comments(w, &header)?;
        w.write_all(report.to_kv().as_bytes())
    })?;
    write_file(&dir.join("regime.csv"), |w| {
        write_comments(w, &header)?;
        writeln!(w, "{REPORT_CSV_HEADER}\n{}", report.to_csv_row())
    })?;

    let mut final_comments = header.clone();
    final_comments.push(format!("t = {}", outcome.state.t));
    for (name, field) in [("u", &outcome.state.u), ("v", &outcome.state.v), ("w", &outcome.state.w)] {
        write_snapshot(dir, &format!("{name}_final"), field, &final_comments)?;
        write_file(&dir.join(format!("{name}_final.csv")), |w| {
            write_field_csv(w, field, &final_comments)
        })?;
    }

    log::info!(
        "{} accepted steps, {} rejected, clipped mass {:e}",
        outcome.steps,
        outcome.rejected_steps,
        outcome.clipped_mass
    );
    writeln!(out, "{}", verdict.summary_line()).map_err(io_at(Path::new("<stdout>")))?;
    writeln!(out, "regime={}", report.regime).map_err(io_at(Path::new("<stdout>")))?;
    Ok(match verdict.kind {
        VerdictKind::BoundedRun | VerdictKind::HorizonReached => 0,
        VerdictKind::BlowupSuspected | VerdictKind::StepCollapse => 2,
    })
}

/// Prints the regime report for the configured coefficients.
pub fn cmd_classify(cfg: &RunConfig, out: &mut dyn Write) -> CmdResult<i32> {
    let report = classify_regime(&cfg.model, cfg.c_reg)?;
    out.write_all(report.to_kv().as_bytes())
        .map_err(io_at(Path::new("<stdout>")))?;
    Ok(0)
}

/// Prints the analytic constants and the bracket value.
pub fn cmd_constants(cfg: &RunConfig, out: &mut dyn Write) -> CmdResult<i32> {
    let r = classify_regime(&cfg.model, cfg.c_reg)?;
    let mut text = format!(
        "p_bar = {}\nA = {}\nXi = {}\ngamma0_threshold = {}\nbracket = {}\nepsilon = {}\n",
        r.p_bar, r.a_const, r.xi_const, r.gamma0_threshold, r.bracket_value, r.epsilon
    );
    if !r.admissible_gammas_exist() {
        text.push_str(&format!(
            "no admissible (gamma0, gamma1): C = {} >= A = {}\n",
            r.c_reg, r.a_const
        ));
    }
    out.write_all(text.as_bytes())
        .map_err(io_at(Path::new("<stdout>")))?;
    Ok(0)
}

/// Runs the configured sweep and writes `phase.csv`.
pub fn cmd_sweep(cfg: &RunConfig, out: &mut dyn Write) -> CmdResult<i32> {
    let spec = SweepSpec::from_config(cfg)?;
    let dir = cfg.output_dir.as_path();
    ensure_dir(dir)?;
    let rows = run_sweep(&spec)?;
    let path = dir.join("phase.csv");
    write_file(&path, |w| write_phase_csv(w, &spec, &rows, &header_lines(cfg)))?;
    let failed = rows.iter().filter(|r| r.error.is_some()).count();
    writeln!(
        out,
        "{} points, {} failed, table written to {}",
        rows.len(),
        failed,
        path.display()
    )
    .map_err(io_at(Path::new("<stdout>")))?;
    Ok(0)
}

/// Estimates a lower bound for the maximal-regularity constant and compares
/// it with the structural constant `A` of the configured coefficients.
pub fn cmd_estimate_creg(cfg: &RunConfig, out: &mut dyn Write) -> CmdResult<i32> {
    let est = estimate_c_rho(cfg.grid, &cfg.estimate)?;
    let a = classify_regime(&cfg.model, cfg.c_reg)?.a_const;
    let dir = cfg.output_dir.as_path();
    ensure_dir(dir)?;
    write_file(&dir.join("estimate.csv"), |w| {
        write_comments(w, &header_lines(cfg))?;
        writeln!(w, "{ESTIMATE_CSV_HEADER}\n{}", est.to_csv_row())
    })?;
    let verdict = if est.c_lower >= a {
        format!("condition C < A falsified at C = {} (A = {a})", est.c_lower)
    } else {
        format!("condition C < A not falsified (c_lower = {} < A = {a})", est.c_lower)
    };
    write!(out, "{}A = {a}\n{verdict}\n", est.to_kv()).map_err(io_at(Path::new("<stdout>")))?;
    Ok(0)
}

/// Runs a manufactured-solution refinement study.
pub fn cmd_mms(case: MmsCase, out: &mut dyn Write) -> CmdResult<i32> {
    let report = mms_convergence(case)?;
    out.write_all(report.to_kv().as_bytes())
        .map_err(io_at(Path::new("<stdout>")))?;
    Ok(if report.passed { 0 } else { 2 })
}
