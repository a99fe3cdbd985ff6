//! Deterministic text output: `trajectory.csv`, `events.csv`, `meta.txt`.
//! Numbers are serialized with Rust's shortest round-trippable formatting.

use crate::runner::{Record, RunLog};
use anyhow::{Context, Result};
use cl_observer_core::history::StackEvent;
use std::fmt::Write as _;
use std::path::Path;

pub const TRAJECTORY_HEADER: &str = "t,p1,p2,q1,q2,p_hat1,p_hat2,q_hat1,q_hat2,\
theta_hat1,theta_hat2,theta_hat3,theta_hat4,x_err,theta_err,smin_main,smin_transient,\
gamma_eig_min,gamma_eig_max,u1,u2";

fn push_record(s: &mut String, r: &Record) {
    let _ = write!(s, "{}", r.t);
    for v in r
        .p
        .iter()
        .chain(&r.q)
        .chain(&r.p_hat)
        .chain(&r.q_hat)
        .chain(&r.theta_hat)
    {
        let _ = write!(s, ",{v}");
    }
    let _ = write!(
        s,
        ",{},{},{},{},{},{}",
        r.x_err, r.theta_err, r.smin_main, r.smin_transient, r.gamma_eig_min, r.gamma_eig_max
    );
    let _ = writeln!(s, ",{},{}", r.u[0], r.u[1]);
}

pub fn trajectory_csv(log: &RunLog) -> String {
    let mut s = String::with_capacity(64 * (log.records.len() + 1));
    s.push_str(TRAJECTORY_HEADER);
    s.push('\n');
    for r in &log.records {
        push_record(&mut s, r);
    }
    s
}

pub fn events_csv(log: &RunLog) -> String {
    let mut s = String::from("time,event,detail\n");
    for e in &log.events {
        match e {
            StackEvent::Inserted {
                t,
                smin_before,
                smin_after,
            } => {
                let _ = writeln!(s, "{t},insert,smin {smin_before} -> {smin_after}");
            }
            StackEvent::Rejected { t, smin } => {
                let _ = writeln!(s, "{t},reject,smin {smin}");
            }
            StackEvent::Purged {
                t,
                main_smin_before,
                main_smin_after,
            } => {
                let _ = writeln!(s, "{t},purge,main smin {main_smin_before} -> {main_smin_after}");
            }
        }
    }
    s
}

/// Write the three run files into `dir` (created if needed).
pub fn write_outputs(log: &RunLog, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)
        .with_context(|| format!("creating output dir {}", dir.display()))?;
    std::fs::write(dir.join("trajectory.csv"), trajectory_csv(log))?;
    std::fs::write(dir.join("events.csv"), events_csv(log))?;
    std::fs::write(dir.join("meta.txt"), &log.meta)?;
    Ok(())
}
