//! Model 5: the two-dimensional sector-error chain.
//!
//! State `(i, j)` means `i` failed drives and `j` working drives with sector
//! errors, with `i + j <= M`. Boundary states with `i + j = M + 1` (written
//! `ij+`) aggregate "j or more drives with sector errors". A transition whose
//! target has `i = M + 1`, or `i = M` with `j >= 1`, is redirected into FAIL.
//!
//! One modeling note: the chain figure labels the edge from the `(1, 2)+`
//! boundary state towards `(0, 3)+` with a drive-failure rate while the rate
//! table has no such transition; the tables are treated as normative here.

use nalgebra::{DMatrix, DVector};

use crate::config::RaidConfig;
use crate::error::{Error, Result};
use crate::generator::{Generator, StateSpace};

/// Labeled states of the sector chain, lexicographic by `(i, j)`, FAIL last.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SectorStateSpace {
    pub m_check: u32,
    /// All non-FAIL states as `(failed, sector_errors)` pairs.
    pub states: Vec<(u32, u32)>,
}

impl SectorStateSpace {
    pub fn len(&self) -> usize {
        self.states.len() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn fail_index(&self) -> usize {
        self.states.len()
    }

    /// Index of the non-FAIL state `(i, j)`, if it exists.
    pub fn index_of(&self, i: u32, j: u32) -> Option<usize> {
        self.states.binary_search(&(i, j)).ok()
    }

    /// `(i, j)` pair for a non-FAIL index.
    pub fn state(&self, idx: usize) -> Option<(u32, u32)> {
        self.states.get(idx).copied()
    }

    /// True for aggregate `ij+` states (`i + j = M + 1`).
    pub fn is_boundary(&self, idx: usize) -> bool {
        self.state(idx)
            .map(|(i, j)| i + j == self.m_check + 1)
            .unwrap_or(false)
    }

    pub fn label(&self, idx: usize) -> String {
        match self.state(idx) {
            None => "FAIL".to_string(),
            Some((i, j)) if i + j == self.m_check + 1 => format!("{i}{j}+"),
            Some((i, j)) => format!("{i}{j}"),
        }
    }

    /// Index a transition target lands in, folding data-loss targets into FAIL.
    fn target(&self, i: u32, j: u32) -> usize {
        let m = self.m_check;
        if i >= m + 1 || (i == m && j >= 1) {
            self.fail_index()
        } else {
            self.index_of(i, j)
                .expect("transition target must be a valid state")
        }
    }
}

/// Enumerates the sector-chain state space for `M >= 1`.
///
/// Interior states satisfy `i + j <= M`; boundary states have `i + j = M + 1`
/// with `i <= M - 1`; the count is `(M+1)(M+2)/2 + M + 1` including FAIL.
pub fn enumerate_sector_states(m_check: u32) -> Result<SectorStateSpace> {
    if m_check == 0 {
        return Err(Error::InvalidConfig(
            "the sector model needs M >= 1 so that state 01 is distinct from FAIL".into(),
        ));
    }
    let mut states = Vec::new();
    for i in 0..=m_check {
        for j in 0..=(m_check + 1 - i) {
            let sum = i + j;
            if sum <= m_check || (sum == m_check + 1 && i + 1 <= m_check) {
                states.push((i, j));
            }
        }
    }
    debug_assert!(states.windows(2).all(|w| w[0] < w[1]));
    Ok(SectorStateSpace { m_check, states })
}

fn empty_generator(space: SectorStateSpace) -> Generator {
    let n = space.len();
    let mut initial = DVector::zeros(n);
    initial[0] = 1.0; // state 00
    Generator {
        space: StateSpace::Sector(space),
        a: DMatrix::zeros(n, n),
        initial,
    }
}

/// Model 5: sector errors with simultaneous repair and scrubbing.
pub fn build_sector_generator(cfg: &RaidConfig) -> Result<Generator> {
    cfg.validate()?;
    let space = enumerate_sector_states(cfg.m_check)?;
    let m = cfg.m_check;
    let t = cfg.total_drives();
    let tf = t as f64;
    let (lam, mu, lam_s, mu_s) = (cfg.lambda, cfg.mu, cfg.lambda_s, cfg.mu_s);
    let mut gen = empty_generator(space.clone());
    for (idx, &(i, j)) in space.states.iter().enumerate() {
        let remaining = tf - (i + j) as f64;
        if i + j <= m {
            // Type 1: failure of a clean drive.
            gen.add_rate(idx, space.target(i + 1, j), remaining * lam);
            // Type 2: replacement of all failed drives.
            if i >= 1 {
                gen.add_rate(idx, space.target(0, j), mu);
            }
            // Type 3: a clean drive develops a sector error.
            gen.add_rate(idx, space.target(i, j + 1), remaining * lam_s);
            // Type 4: scrubbing removes all sector errors.
            if j >= 1 {
                gen.add_rate(idx, space.target(i, 0), mu_s);
            }
            // Type 5: failure of a drive that has a sector error.
            if j >= 1 {
                gen.add_rate(idx, space.target(i + 1, j - 1), j as f64 * lam);
            }
        } else {
            // Boundary `ij+` states: any drive failure counts (type 6), and
            // repair/scrub still reset to the respective axis.
            gen.add_rate(idx, space.target(i + 1, j - 1), (tf - i as f64) * lam);
            if i >= 1 {
                gen.add_rate(idx, space.target(0, j), mu);
            }
            gen.add_rate(idx, space.target(i, 0), mu_s);
        }
    }
    gen.finalize();
    Ok(gen)
}

/// Model 5 with imperfect repair: service events damage a working drive with
/// probability `p`, allocated between clean drives and drives with sector
/// errors by the fractions `(T-i-j)/(T-i)` and `j/(T-i)`.
pub fn build_sector_imperfect_generator(cfg: &RaidConfig) -> Result<Generator> {
    cfg.validate()?;
    let space = enumerate_sector_states(cfg.m_check)?;
    let m = cfg.m_check;
    let t = cfg.total_drives();
    let tf = t as f64;
    let (lam, mu, lam_s, mu_s, p) = (cfg.lambda, cfg.mu, cfg.lambda_s, cfg.mu_s, cfg.p);
    let mut gen = empty_generator(space.clone());
    for (idx, &(i, j)) in space.states.iter().enumerate() {
        let remaining = tf - (i + j) as f64;
        let working = tf - i as f64;
        if i + j <= m {
            // Types 1a/1b.
            let r1 = if i == 0 {
                remaining * lam
            } else {
                remaining * lam + (remaining / working) * mu * p
            };
            gen.add_rate(idx, space.target(i + 1, j), r1);
            // Type 2: successful replacement.
            if i >= 1 {
                gen.add_rate(idx, space.target(0, j), mu * (1.0 - p));
            }
            // Type 3.
            gen.add_rate(idx, space.target(i, j + 1), remaining * lam_s);
            // Type 4.
            if j >= 1 {
                gen.add_rate(idx, space.target(i, 0), mu_s);
            }
            // Types 5a/5b.
            if j >= 1 {
                let r5 = if i == 0 {
                    j as f64 * lam
                } else {
                    j as f64 * lam + (j as f64 / working) * mu * p
                };
                gen.add_rate(idx, space.target(i + 1, j - 1), r5);
            }
        } else {
            // Types 6a/6b on the boundary, plus repair/scrub as in the
            // perfect-repair table.
            let r6 = if i == 0 { tf * lam } else { working * lam + mu * p };
            gen.add_rate(idx, space.target(i + 1, j - 1), r6);
            if i >= 1 {
                gen.add_rate(idx, space.target(0, j), mu * (1.0 - p));
            }
            gen.add_rate(idx, space.target(i, 0), mu_s);
        }
    }
    gen.finalize();
    Ok(gen)
}
