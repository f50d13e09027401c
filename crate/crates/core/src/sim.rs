//! Discrete-event simulation of every model, used as an independent oracle
//! for the analytic and numerical paths.
//!
//! Chain models are simulated directly on their generator matrix by
//! competing exponentials: sample the sojourn from the state's total exit
//! rate, then pick the destination categorically. Each trial draws from its
//! own counter-seeded stream, and trials are reduced in fixed-size blocks
//! merged in index order, so results are bit-identical regardless of how
//! many worker threads run the blocks.

use rayon::prelude::*;
use statrs::distribution::{Beta, ContinuousCDF};

use crate::config::RaidConfig;
use crate::error::{Error, Result};
use crate::generator::Generator;
use crate::model::{build_generator, ModelKind};

/// Trials per reduction block; merging is sequential over blocks.
const BLOCK: u64 = 4096;
/// Per-trial jump budget; exceeding it means absorption is far slower than
/// anything worth simulating directly.
const EVENT_CAP: u64 = 50_000_000;
/// At most this many time-to-data-loss samples are kept verbatim.
const MAX_TTDL_SAMPLES: usize = 1_000_000;
/// Asymptotic Kolmogorov-Smirnov critical value at significance 0.01.
const KS_CRITICAL_01: f64 = 1.62762;

/// Aggregated simulation output.
#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    pub n_trials: u64,
    /// Trials absorbed at or before the configured horizon.
    pub failures_by_horizon: u64,
    pub pdl_estimate: f64,
    pub pdl_stderr: f64,
    /// Raw absorption times, capped; only present when requested.
    pub ttdl_samples: Option<Vec<f64>>,
    /// Mean absorption time, years; NaN unless absorption times were
    /// collected (without collection, trials stop at the horizon).
    pub mttdl_estimate: f64,
    pub mttdl_stderr: f64,
}

/// SplitMix64: tiny, splittable, and plenty for sampling exponentials.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }

    /// Uniform on (0, 1]; never zero, so logarithms stay finite.
    pub fn next_unit(&mut self) -> f64 {
        (((self.next_u64() >> 11) + 1) as f64) * (1.0 / 9_007_199_254_740_992.0)
    }

    pub fn next_exp(&mut self, rate: f64) -> f64 {
        -self.next_unit().ln() / rate
    }
}

/// Stream for one trial: decorrelated from neighbors by running the trial
/// index through the generator's own mixing function.
fn trial_rng(seed: u64, trial: u64) -> SplitMix64 {
    let mut boot = SplitMix64::new(seed ^ trial.wrapping_mul(0xd1b5_4a32_d192_ed03));
    let s = boot.next_u64();
    SplitMix64::new(s)
}

/// Chain model in jump form: per-state exit rate and cumulative destination
/// weights.
struct JumpChain {
    exit_rate: Vec<f64>,
    /// For each state, (cumulative probability, destination).
    transitions: Vec<Vec<(f64, usize)>>,
    fail: usize,
}

impl JumpChain {
    fn from_generator(gen: &Generator) -> JumpChain {
        let n = gen.dim();
        let mut exit_rate = vec![0.0; n];
        let mut transitions = vec![Vec::new(); n];
        for from in 0..n {
            let total = -gen.a[(from, from)];
            exit_rate[from] = total;
            if total <= 0.0 {
                continue;
            }
            let mut cum = 0.0;
            for to in 0..n {
                if to != from && gen.a[(to, from)] > 0.0 {
                    cum += gen.a[(to, from)] / total;
                    transitions[from].push((cum, to));
                }
            }
            // Guard against roundoff in the last cumulative weight.
            if let Some(last) = transitions[from].last_mut() {
                last.0 = 1.0;
            }
        }
        JumpChain {
            exit_rate,
            transitions,
            fail: gen.fail_index(),
        }
    }

    /// Absorption time of one trajectory; `stop_at` truncates trials that
    /// outlive the horizon (returns None for censored survivors).
    fn run_trial(&self, rng: &mut SplitMix64, stop_at: Option<f64>) -> Result<Option<f64>> {
        let mut state = 0usize;
        let mut t = 0.0f64;
        for _ in 0..EVENT_CAP {
            if state == self.fail {
                return Ok(Some(t));
            }
            let rate = self.exit_rate[state];
            if rate <= 0.0 {
                return Ok(None); // nothing can ever happen
            }
            t += rng.next_exp(rate);
            if let Some(cap) = stop_at {
                if t > cap {
                    return Ok(None);
                }
            }
            let u = rng.next_unit();
            let row = &self.transitions[state];
            state = row
                .iter()
                .find(|&&(c, _)| u <= c)
                .map(|&(_, to)| to)
                .unwrap_or(row.last().expect("nonzero exit rate").1);
        }
        Err(Error::EventCapExceeded)
    }
}

/// One trial of the M = 1 delay models. `frozen_rebuild` is the naive
/// variant where nothing fails while the replacement is in transit.
fn run_delay_trial(
    cfg: &RaidConfig,
    frozen_rebuild: bool,
    rng: &mut SplitMix64,
    stop_at: Option<f64>,
) -> Result<Option<f64>> {
    let n = cfg.n_data as f64;
    let lam = cfg.lambda;
    let all_rate = (n + 1.0) * lam;
    let mut t = 0.0f64;
    for _ in 0..EVENT_CAP {
        if let Some(cap) = stop_at {
            if t > cap {
                return Ok(None);
            }
        }
        // All drives working: wait for the first failure.
        t += rng.next_exp(all_rate);
        // One drive down: failure of a second drive races the service.
        let total = n * lam + cfg.mu;
        if total <= 0.0 {
            return Ok(None);
        }
        t += rng.next_exp(total);
        if rng.next_unit() <= n * lam / total {
            return Ok(Some(t));
        }
        // Service arrived: the rebuild takes a fixed h.
        if frozen_rebuild {
            t += cfg.h;
        } else {
            // Any of the N + 1 drives failing mid-rebuild loses data.
            let crash = rng.next_exp(all_rate);
            if crash < cfg.h {
                return Ok(Some(t + crash));
            }
            t += cfg.h;
        }
    }
    Err(Error::EventCapExceeded)
}

#[derive(Clone, Default)]
struct BlockStats {
    trials: u64,
    failures_by_horizon: u64,
    count: u64,
    sum: f64,
    sumsq: f64,
    samples: Vec<f64>,
}

/// Runs `n_trials` of the given model. With `collect_ttdl` set, every trial
/// runs to absorption and the mean time to data loss is estimated; without
/// it, trials are censored at the horizon and only the PDL fields are
/// meaningful.
pub fn simulate(
    kind: ModelKind,
    cfg: &RaidConfig,
    n_trials: u64,
    seed: u64,
    collect_ttdl: bool,
) -> Result<SimResult> {
    if n_trials < 1 {
        return Err(Error::InvalidConfig("need at least one trial".into()));
    }
    cfg.validate()?;
    let chain = if kind.is_chain() {
        Some(JumpChain::from_generator(&build_generator(kind, cfg)?))
    } else {
        if cfg.m_check != 1 {
            return Err(Error::InvalidConfig(
                "delay models are defined for exactly one check drive (M = 1)".into(),
            ));
        }
        None
    };
    let frozen = kind == ModelKind::DelayNaive;
    let horizon = cfg.horizon;
    let stop_at = if collect_ttdl { None } else { Some(horizon) };
    let keep_samples = collect_ttdl && n_trials as usize <= MAX_TTDL_SAMPLES;

    let n_blocks = n_trials.div_ceil(BLOCK);
    let blocks: Vec<Result<BlockStats>> = (0..n_blocks)
        .into_par_iter()
        .map(|b| {
            let lo = b * BLOCK;
            let hi = (lo + BLOCK).min(n_trials);
            let mut stats = BlockStats::default();
            for trial in lo..hi {
                let mut rng = trial_rng(seed, trial);
                let outcome = match &chain {
                    Some(c) => c.run_trial(&mut rng, stop_at)?,
                    None => run_delay_trial(cfg, frozen, &mut rng, stop_at)?,
                };
                stats.trials += 1;
                if let Some(ttdl) = outcome {
                    if ttdl <= horizon {
                        stats.failures_by_horizon += 1;
                    }
                    if collect_ttdl {
                        stats.count += 1;
                        stats.sum += ttdl;
                        stats.sumsq += ttdl * ttdl;
                        if keep_samples {
                            stats.samples.push(ttdl);
                        }
                    }
                }
            }
            Ok(stats)
        })
        .collect();

    // Sequential merge in block order keeps the floating-point reduction
    // independent of the parallel schedule.
    let mut total = BlockStats::default();
    for block in blocks {
        let block = block?;
        total.trials += block.trials;
        total.failures_by_horizon += block.failures_by_horizon;
        total.count += block.count;
        total.sum += block.sum;
        total.sumsq += block.sumsq;
        total.samples.extend(block.samples);
    }

    let n = total.trials as f64;
    let p = total.failures_by_horizon as f64 / n;
    let (mttdl, mttdl_se) = if collect_ttdl && total.count > 1 {
        let c = total.count as f64;
        let mean = total.sum / c;
        let var = ((total.sumsq - total.sum * total.sum / c) / (c - 1.0)).max(0.0);
        (mean, (var / c).sqrt())
    } else {
        (f64::NAN, f64::NAN)
    };
    Ok(SimResult {
        n_trials: total.trials,
        failures_by_horizon: total.failures_by_horizon,
        pdl_estimate: p,
        pdl_stderr: (p * (1.0 - p) / n).sqrt(),
        ttdl_samples: keep_samples.then_some(total.samples),
        mttdl_estimate: mttdl,
        mttdl_stderr: mttdl_se,
    })
}

/// One-sample Kolmogorov-Smirnov test of U = 1 - e^{-lambda T_fail} under
/// the no-repair model against Beta(alpha, beta) at significance 0.01.
/// Returns (statistic, reject).
pub fn beta_ks_check_with(
    cfg: &RaidConfig,
    n_samples: u64,
    seed: u64,
    alpha: u32,
    beta: u32,
) -> Result<(f64, bool)> {
    let res = simulate(ModelKind::NoRepair, cfg, n_samples, seed, true)?;
    let samples = res.ttdl_samples.ok_or_else(|| {
        Error::InvalidConfig("sample count exceeds the stored-sample cap".into())
    })?;
    let mut u: Vec<f64> = samples
        .iter()
        .map(|&t| -(-cfg.lambda * t).exp_m1())
        .collect();
    u.sort_by(|a, b| a.partial_cmp(b).expect("finite transforms"));
    let dist = Beta::new(alpha as f64, beta as f64)
        .map_err(|e| Error::InvalidConfig(format!("bad beta shapes: {e}")))?;
    let n = u.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in u.iter().enumerate() {
        let f = dist.cdf(x);
        d = d.max((i + 1) as f64 / n - f);
        d = d.max(f - i as f64 / n);
    }
    Ok((d, d * n.sqrt() > KS_CRITICAL_01))
}

/// [`beta_ks_check_with`] at the law implied by the configuration,
/// Beta(M+1, N).
pub fn beta_ks_check(cfg: &RaidConfig, n_samples: u64, seed: u64) -> Result<(f64, bool)> {
    beta_ks_check_with(cfg, n_samples, seed, cfg.m_check + 1, cfg.n_data)
}
