//! The four subcommands. Each writes one CSV table with a pinned header;
//! sweep points are evaluated in parallel but emitted in sweep order, so
//! output bytes never depend on scheduling.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use rayon::prelude::*;

use raidrel::{
    build_generator, build_raid5_delay, count_extrema, dde_integrate, delay_naive_mttdl,
    model_pdl_at_horizon, moments_via_resolvent, mttdl_via_reliability_integral, no_repair_mttdl,
    pde_rebuild_integrate, pde_rebuild_mttdl, raid5_moments, simulate, Error, ModelKind,
    RaidConfig, Trajectory,
};

use crate::units::fmt_csv;
use crate::{CliError, Resolved};

/// Survival tolerance handed to the reliability-integral method.
const INTEGRAL_TOL: f64 = 1e-6;
/// How many resolvent means out the reliability integral is truncated.
const INTEGRAL_SPAN: f64 = 30.0;
/// Steps per delay interval when a step size is not given explicitly.
const STEPS_PER_DELAY: f64 = 64.0;

pub fn make_writer(out: &Option<PathBuf>) -> Result<Box<dyn Write>, CliError> {
    Ok(match out {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(BufWriter::new(std::io::stdout())),
    })
}

/// The columns shared by every per-configuration table.
fn prefix(kind: ModelKind, cfg: &RaidConfig) -> String {
    format!(
        "{},{},{},{},{},{},{},{}",
        kind,
        cfg.n_data,
        cfg.m_check,
        fmt_csv(cfg.lambda),
        fmt_csv(cfg.mu),
        fmt_csv(cfg.p),
        fmt_csv(cfg.lambda_s),
        fmt_csv(cfg.mu_s),
    )
}

fn require_single_check_drive(cfg: &RaidConfig) -> raidrel::Result<()> {
    if cfg.m_check != 1 {
        return Err(Error::InvalidConfig(
            "delay models are defined for exactly one check drive (M = 1)".into(),
        ));
    }
    Ok(())
}

fn delay_step(h: f64, t_end: f64) -> f64 {
    if h > 0.0 {
        (h / STEPS_PER_DELAY).min(t_end)
    } else {
        t_end / 4096.0
    }
}

/// PDL at the configured horizon for any model, chain or delayed.
fn eval_pdl(kind: ModelKind, cfg: &RaidConfig) -> raidrel::Result<f64> {
    if kind.is_chain() {
        return model_pdl_at_horizon(kind, cfg);
    }
    require_single_check_drive(cfg)?;
    let t = cfg.horizon;
    let dt = delay_step(cfg.h, t);
    let traj = match kind {
        ModelKind::DelayNaive => {
            let sys = build_raid5_delay(cfg.n_data, cfg.lambda, cfg.mu, cfg.h);
            dde_integrate(&sys, t, dt)?
        }
        ModelKind::DelayRebuild => {
            pde_rebuild_integrate(cfg.n_data, cfg.lambda, cfg.mu, cfg.h, t, dt)?.0
        }
        _ => unreachable!("chain models handled above"),
    };
    Ok(traj.pdl(traj.len() - 1))
}

pub fn run_pdl(r: &Resolved, out: &mut dyn Write) -> Result<(), CliError> {
    writeln!(
        out,
        "model,N,M,lambda_per_yr,mu_per_yr,p,lambda_s_per_yr,mu_s_per_yr,t_yr,pdl"
    )?;
    let points: Vec<(u32, u32)> = r
        .ns
        .iter()
        .flat_map(|&n| r.ms.iter().map(move |&m| (n, m)))
        .collect();
    let rows: Vec<raidrel::Result<String>> = points
        .par_iter()
        .map(|&(n, m)| {
            let cfg = r.at(n, m);
            let pdl = eval_pdl(r.kind, &cfg)?;
            Ok(format!(
                "{},{},{}",
                prefix(r.kind, &cfg),
                fmt_csv(cfg.horizon),
                fmt_csv(pdl)
            ))
        })
        .collect();
    for row in rows {
        writeln!(out, "{}", row?)?;
    }
    out.flush()?;
    Ok(())
}

/// Every MTTDL method applicable to one configuration, in presentation
/// order. Variance is NaN where a method only yields the mean.
fn mttdl_methods(
    kind: ModelKind,
    cfg: &RaidConfig,
    with_integral: bool,
) -> raidrel::Result<Vec<(f64, f64, &'static str)>> {
    let mut rows = Vec::new();
    if kind.is_chain() {
        match kind {
            ModelKind::NoRepair => rows.push((
                no_repair_mttdl(cfg.n_data, cfg.m_check, cfg.lambda),
                f64::NAN,
                "closed-form",
            )),
            ModelKind::IndividualRepair if cfg.m_check == 1 => {
                let rep = raid5_moments(cfg.n_data, cfg.lambda, cfg.mu);
                rows.push((rep.m1, rep.variance, "closed-form"));
            }
            _ => {}
        }
        let gen = build_generator(kind, cfg)?;
        let rep = moments_via_resolvent(&gen, 2)?;
        rows.push((rep.m1, rep.variance, "resolvent"));
        if with_integral {
            let v = mttdl_via_reliability_integral(&gen, INTEGRAL_SPAN * rep.m1, INTEGRAL_TOL)?;
            rows.push((v, f64::NAN, "integral"));
        }
    } else {
        require_single_check_drive(cfg)?;
        let v = match kind {
            ModelKind::DelayNaive => delay_naive_mttdl(cfg.n_data, cfg.lambda, cfg.mu, cfg.h),
            ModelKind::DelayRebuild => pde_rebuild_mttdl(cfg.n_data, cfg.lambda, cfg.mu, cfg.h),
            _ => unreachable!("chain models handled above"),
        };
        rows.push((v, f64::NAN, "closed-form"));
    }
    Ok(rows)
}

pub fn run_mttdl(r: &Resolved, with_integral: bool, out: &mut dyn Write) -> Result<(), CliError> {
    writeln!(
        out,
        "model,N,M,lambda_per_yr,mu_per_yr,p,lambda_s_per_yr,mu_s_per_yr,h_yr,mttdl_yr,variance_yr2,method"
    )?;
    let points: Vec<(u32, u32)> = r
        .ns
        .iter()
        .flat_map(|&n| r.ms.iter().map(move |&m| (n, m)))
        .collect();
    let blocks: Vec<raidrel::Result<String>> = points
        .par_iter()
        .map(|&(n, m)| {
            let cfg = r.at(n, m);
            let mut block = String::new();
            for (mttdl, variance, method) in mttdl_methods(r.kind, &cfg, with_integral)? {
                block.push_str(&format!(
                    "{},{},{},{},{}\n",
                    prefix(r.kind, &cfg),
                    fmt_csv(cfg.h),
                    fmt_csv(mttdl),
                    fmt_csv(variance),
                    method
                ));
            }
            Ok(block)
        })
        .collect();
    for block in blocks {
        write!(out, "{}", block?)?;
    }
    out.flush()?;
    Ok(())
}

pub fn run_simulate(
    r: &Resolved,
    trials: u64,
    seed: u64,
    ttdl: bool,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    writeln!(
        out,
        "model,N,M,lambda_per_yr,mu_per_yr,p,lambda_s_per_yr,mu_s_per_yr,t_yr,trials,seed,failures,pdl_estimate,stderr,mttdl"
    )?;
    // Trials are already parallel inside the simulator; sweep points run
    // sequentially so results stay independent of the point count.
    for &n in &r.ns {
        for &m in &r.ms {
            let cfg = r.at(n, m);
            let res = simulate(r.kind, &cfg, trials, seed, ttdl)?;
            writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                prefix(r.kind, &cfg),
                fmt_csv(cfg.horizon),
                res.n_trials,
                seed,
                res.failures_by_horizon,
                fmt_csv(res.pdl_estimate),
                fmt_csv(res.pdl_stderr),
                fmt_csv(res.mttdl_estimate),
            )?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn run_delay_trace(
    r: &Resolved,
    t_end: f64,
    dt: Option<f64>,
    oscillation_check: bool,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let cfg = r.at(r.ns[0], r.ms[0]);
    require_single_check_drive(&cfg)?;
    let dt = dt.unwrap_or_else(|| delay_step(cfg.h, t_end));
    let traj: Trajectory = match r.kind {
        ModelKind::DelayNaive => {
            let sys = build_raid5_delay(cfg.n_data, cfg.lambda, cfg.mu, cfg.h);
            dde_integrate(&sys, t_end, dt)?
        }
        ModelKind::DelayRebuild => {
            pde_rebuild_integrate(cfg.n_data, cfg.lambda, cfg.mu, cfg.h, t_end, dt)?.0
        }
        other => {
            return Err(CliError::Usage(format!(
                "delay-trace needs a delay model, got '{other}'"
            )))
        }
    };
    writeln!(out, "t,q0,q1,q2")?;
    for i in 0..traj.len() {
        let q = &traj.probs[i];
        writeln!(
            out,
            "{},{},{},{}",
            fmt_csv(traj.times[i]),
            fmt_csv(q[0]),
            fmt_csv(q[1]),
            fmt_csv(q[2]),
        )?;
    }
    out.flush()?;
    if oscillation_check {
        let q0: Vec<f64> = traj.probs.iter().map(|q| q[0]).collect();
        eprintln!("oscillation check: {} extrema in q0", count_extrema(&q0));
    }
    Ok(())
}
