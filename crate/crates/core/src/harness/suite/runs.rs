//! Criteria evaluated on full scenario runs.

use std::fs;

use super::{Context, Verdict};
use crate::coupler::Termination;
use crate::harness::{checkpoint_path, resume, run, Checkpoint, Row, RunOutcome, Status, CSV_FILE, SUMMARY_FILE};

fn clean(run: &RunOutcome, label: &str) -> Result<(), String> {
    match run.summary.errors.first() {
        Some(e) => Err(format!("{label} run failed at step {}: {}", e.step, e.message)),
        None => Ok(()),
    }
}

fn upto(run: &RunOutcome, last: usize) -> &[Row] {
    let n = run.rows.iter().take_while(|r| r.step <= last).count();
    &run.rows[..n]
}

fn mass_drift(rows: &[Row]) -> f64 {
    let m0 = rows[0].mass;
    rows.iter().map(|r| (r.mass - m0).abs() / m0).fold(0.0, f64::max)
}

fn min_f(rows: &[Row]) -> f64 {
    rows.iter().map(|r| r.min_f).fold(f64::INFINITY, f64::min)
}

/// `(max_t sup_x ||f||, sup_x ||f_0||, max kinetic energy of the fluid)`.
fn principle(rows: &[Row]) -> (f64, f64, f64) {
    let top = rows.iter().map(|r| r.max_principle).fold(0.0, f64::max);
    let kinetic = rows.iter().filter_map(|r| r.kinetic_fluid).fold(0.0, f64::max);
    (top, rows[0].max_principle, kinetic)
}

fn steps(rows: &[Row]) -> usize {
    rows.last().map_or(0, |r| r.step)
}

pub fn mass(ctx: &Context) -> Verdict {
    let run = ctx.benign()?;
    clean(run, "benign")?;
    let rows = upto(run, 500);
    let drift = mass_drift(rows);
    let n = steps(rows);
    Ok((n == 500 && drift <= 1e-10, format!("max |m(t) - m(0)| / m(0) = {drift:.2e} over {n} steps (limit 1e-10)")))
}

pub fn nonnegativity(ctx: &Context) -> Verdict {
    let (global, local) = (ctx.benign()?, ctx.local()?);
    clean(global, "co-rotational")?;
    clean(local, "full-gradient")?;
    let (g, l) = (upto(global, 500), upto(local, 500));
    let start = g[0].min_f.min(l[0].min_f);
    let (mg, ml) = (min_f(g), min_f(l));
    let passed = start >= 0.0 && mg >= -1e-12 && ml >= -1e-12 && steps(g) == 500 && steps(l) == 500;
    Ok((passed, format!("min f0 = {start:.3e}; min f over 500 steps: co-rotational {mg:.3e}, full-gradient {ml:.3e}")))
}

pub fn maximum_principle(ctx: &Context) -> Verdict {
    let run = ctx.benign()?;
    clean(run, "benign")?;
    let rows = upto(run, 500);
    let (top, first, kinetic) = principle(rows);
    let passed = top <= first * (1.0 + 1e-8) && kinetic > 0.0 && steps(rows) == 500;
    Ok((passed, format!("sup ||f(t)|| / sup ||f0|| - 1 = {:.2e} (limit 1e-8), max fluid kinetic energy {kinetic:.3e}", top / first - 1.0)))
}

pub fn constraints(ctx: &Context) -> Verdict {
    let mut worst = (0.0f64, 0.0f64);
    let mut checked = 0;
    for (label, run) in [("benign", ctx.benign()?), ("solvent-structure", ctx.solvent()?)] {
        clean(run, label)?;
        for r in &run.rows[1..] {
            let (Some(d), Some(t)) = (r.divergence_residual, r.trace_residual) else {
                return Err(format!("{label} row {} has no constraint residuals", r.step));
            };
            worst = (worst.0.max(d), worst.1.max(t));
            checked += 1;
        }
    }
    Ok((
        worst.0 <= 1e-9 && worst.1 <= 1e-9,
        format!("{checked} steps: max divergence residual {:.2e}, max trace residual {:.2e} (limit 1e-9)", worst.0, worst.1),
    ))
}

pub fn termination(ctx: &Context) -> Verdict {
    let inflating = run(&ctx.config("inflating")).map_err(|e| e.to_string())?;
    let taxonomy = match &inflating.summary.termination {
        Some(Termination::Event(e)) if inflating.summary.errors.is_empty() => Ok(format!(
            "inflating: one event `{}` at step {} ({:.3e} vs {:.3e})",
            serde_json::to_value(e.criterion).unwrap().as_str().unwrap_or("?"),
            e.step,
            e.value,
            e.threshold
        )),
        other => Err(format!("inflating: expected a single termination event, got {other:?}")),
    };
    let benign = ctx.benign()?;
    let rows = &benign.rows[..];
    let (top, first, _) = principle(rows);
    let horizon = matches!(benign.summary.termination, Some(Termination::Horizon)) && steps(rows) == 1000;
    let intact = mass_drift(rows) <= 1e-10 && min_f(rows) >= -1e-12 && top <= first * (1.0 + 1e-8);
    let tail = format!(
        "benign: {} steps, {}, drift {:.2e}, min f {:.2e}, principle excess {:.2e}",
        steps(rows),
        if horizon { "horizon reached" } else { "horizon not reached" },
        mass_drift(rows),
        min_f(rows),
        top / first - 1.0
    );
    Ok(match taxonomy {
        Ok(head) => (horizon && intact, format!("{head}; {tail}")),
        Err(head) => (false, format!("{head}; {tail}")),
    })
}

pub fn persistence(ctx: &Context) -> Verdict {
    let io = |e: std::io::Error| e.to_string();
    let mut config = ctx.config("benign");
    config.horizon = 48;
    config.output.checkpoint_every = 16;
    let dirs: Vec<_> = ["first", "second", "resumed"].iter().map(|d| ctx.scratch.join("persistence").join(d)).collect();
    for d in &dirs {
        let _ = fs::remove_dir_all(d);
    }
    let mut outcomes = Vec::new();
    for d in &dirs[..2] {
        config.output.dir = Some(d.clone());
        let out = run(&config).map_err(|e| e.to_string())?;
        if out.summary.status != Status::Ok {
            return Err(format!("persistence run failed: {:?}", out.summary.errors));
        }
        outcomes.push(out);
    }
    let read = |d: &std::path::Path, f: &str| fs::read(d.join(f)).map_err(io);
    let same_csv = read(&dirs[0], CSV_FILE)? == read(&dirs[1], CSV_FILE)?;
    let same_summary = read(&dirs[0], SUMMARY_FILE)? == read(&dirs[1], SUMMARY_FILE)?;

    let ckpt = checkpoint_path(&dirs[0], 16);
    let stored = Checkpoint::load(&ckpt).map_err(|e| e.to_string())?;
    let reloaded = Checkpoint::from_bytes(&stored.to_bytes()).map_err(|e| e.to_string())?;
    let bit_exact = reloaded == stored;
    let resumed = resume(&ckpt, Some(&dirs[2])).map_err(|e| e.to_string())?;
    let full = String::from_utf8(read(&dirs[0], CSV_FILE)?).map_err(|e| e.to_string())?;
    let tail: Vec<&str> = full.lines().skip(1).filter(|l| l.split(',').next().and_then(|s| s.parse::<usize>().ok()) > Some(16)).collect();
    let again = String::from_utf8(read(&dirs[2], CSV_FILE)?).map_err(|e| e.to_string())?;
    let again: Vec<&str> = again.lines().skip(1).collect();
    let same_tail = !tail.is_empty() && tail == again;
    let same_state = resumed.final_state == outcomes[0].final_state;
    let passed = same_csv && same_summary && bit_exact && same_tail && same_state;
    Ok((
        passed,
        format!(
            "rerun csv identical: {same_csv}, summary identical: {same_summary}; checkpoint round trip exact: {bit_exact}; \
             resume from step 16: {} rows identical: {same_tail}, final state identical: {same_state}",
            again.len()
        ),
    ))
}
