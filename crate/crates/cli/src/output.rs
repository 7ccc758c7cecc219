//! Run artifacts: convergence table, optimized field, final overlaps.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};
use krotov::textio::write_field;
use krotov::{OptimizationRecord, Problem, Termination};

pub const CONVERGENCE: &str = "convergence.csv";
pub const FIELD: &str = "field.dat";
pub const OVERLAPS: &str = "overlaps.dat";
pub const SUMMARY: &str = "summary.csv";

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| format!("cannot create {}", path.display()))?))
}

pub fn write_run(dir: &Path, problem: &Problem, record: &OptimizationRecord) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create output directory {}", dir.display()))?;

    let mut csv = create(&dir.join(CONVERGENCE))?;
    record.write_csv(&mut csv)?;
    csv.flush()?;

    let mut field = create(&dir.join(FIELD))?;
    writeln!(field, "# t epsilon (interval midpoints)")?;
    write_field(&mut field, &problem.grid.midpoints(), record.final_field.values())?;
    field.flush()?;

    let mut overlaps = create(&dir.join(OVERLAPS))?;
    writeln!(overlaps, "# k re im |<target_k|phi_k(T)>|^2")?;
    for (k, phi) in record.final_states.iter().enumerate() {
        let z = problem.targets.get(k).inner(phi);
        writeln!(overlaps, "{k} {:.16e} {:.16e} {:.16e}", z.re, z.im, z.norm_sqr())?;
    }
    overlaps.flush()?;
    Ok(())
}

pub fn termination_label(t: Termination) -> String {
    match t {
        Termination::MaxIterations => "max_iter".into(),
        Termination::Converged => "converged".into(),
        Termination::Diverged { last_good } => format!("diverged_after_{last_good}"),
    }
}

/// One row per scanned value, in the order the values were given.
pub fn write_summary(dir: &Path, parameter: &str, rows: &[(f64, &OptimizationRecord)]) -> Result<()> {
    let mut out = create(&dir.join(SUMMARY))?;
    writeln!(out, "parameter,value,iterations,J,J_T,violations,retries,termination")?;
    for (value, rec) in rows {
        let last = rec.last();
        let retries: usize = rec.iterations.iter().map(|r| r.retries).sum();
        writeln!(
            out,
            "{parameter},{value},{},{:.16e},{:.16e},{},{retries},{}",
            rec.completed(),
            last.j,
            last.j_t,
            rec.violations(),
            termination_label(rec.termination)
        )?;
    }
    out.flush()?;
    Ok(())
}
