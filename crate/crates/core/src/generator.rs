//! CTMC generator matrices over explicit state spaces.
//!
//! Column convention throughout: `dq/dt = A q`, so entry `a[(j, k)]` is the
//! rate from state `k` into state `j` and every column of `A` sums to zero.
//! Most CTMC texts use the transposed (row) convention; everything in this
//! crate, including the solvers, assumes columns.

use nalgebra::{DMatrix, DVector};

use crate::config::RaidConfig;
use crate::error::Result;
use crate::sector::SectorStateSpace;

/// States 0..=M+1 where state `i` means "i drives failed"; M+1 is FAIL.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateSpace1D {
    pub m_check: u32,
}

impl StateSpace1D {
    pub fn len(&self) -> usize {
        self.m_check as usize + 2
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn fail_index(&self) -> usize {
        self.m_check as usize + 1
    }

    pub fn label(&self, idx: usize) -> String {
        if idx == self.fail_index() {
            "FAIL".to_string()
        } else {
            idx.to_string()
        }
    }
}

/// The state space a generator is defined over.
#[derive(Debug, Clone, PartialEq)]
pub enum StateSpace {
    /// Failure-count chain (Models 1-4).
    Chain(StateSpace1D),
    /// Two-dimensional (failed drives, sector-error drives) chain (Model 5).
    Sector(SectorStateSpace),
}

impl StateSpace {
    pub fn len(&self) -> usize {
        match self {
            StateSpace::Chain(s) => s.len(),
            StateSpace::Sector(s) => s.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn fail_index(&self) -> usize {
        match self {
            StateSpace::Chain(s) => s.fail_index(),
            StateSpace::Sector(s) => s.fail_index(),
        }
    }

    pub fn label(&self, idx: usize) -> String {
        match self {
            StateSpace::Chain(s) => s.label(idx),
            StateSpace::Sector(s) => s.label(idx),
        }
    }
}

/// A CTMC generator: rate matrix (column convention), its state space, and
/// the initial distribution (all mass on the all-working state).
#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    pub space: StateSpace,
    pub a: DMatrix<f64>,
    pub initial: DVector<f64>,
}

impl Generator {
    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn fail_index(&self) -> usize {
        self.space.fail_index()
    }

    /// Adds a transition `from -> to` at `rate`.
    pub(crate) fn add_rate(&mut self, from: usize, to: usize, rate: f64) {
        self.a[(to, from)] += rate;
        self.a[(from, from)] -= rate;
    }

    /// Rebuilds every diagonal entry as the negated sum of its column's
    /// off-diagonal entries, accumulated in increasing row order. Summing a
    /// column in that same order (off-diagonals first, diagonal last) then
    /// cancels to exactly zero in floating point, not just approximately.
    pub(crate) fn finalize(&mut self) {
        let n = self.dim();
        for col in 0..n {
            let mut s = 0.0;
            for row in 0..n {
                if row != col {
                    s += self.a[(row, col)];
                }
            }
            self.a[(col, col)] = -s;
        }
    }

    fn empty_chain(m_check: u32) -> Generator {
        let space = StateSpace::Chain(StateSpace1D { m_check });
        let n = space.len();
        let mut initial = DVector::zeros(n);
        initial[0] = 1.0;
        Generator {
            space,
            a: DMatrix::zeros(n, n),
            initial,
        }
    }
}

/// Model 1: drives fail at `(T - i) lambda` and are never repaired.
pub fn build_no_repair(cfg: &RaidConfig) -> Result<Generator> {
    cfg.validate()?;
    let t = cfg.total_drives() as f64;
    let m = cfg.m_check;
    let mut gen = Generator::empty_chain(m);
    for i in 0..=m as usize {
        gen.add_rate(i, i + 1, (t - i as f64) * cfg.lambda);
    }
    gen.finalize();
    Ok(gen)
}

/// Model 2: as Model 1, plus one-at-a-time repair at rate `mu` from every
/// degraded state.
pub fn build_individual_repair(cfg: &RaidConfig) -> Result<Generator> {
    let mut gen = build_no_repair(cfg)?;
    for j in 1..=cfg.m_check as usize {
        gen.add_rate(j, j - 1, cfg.mu);
    }
    gen.finalize();
    Ok(gen)
}

/// Model 3: repairs fix all failed drives at once, jumping straight to
/// state 0.
pub fn build_simultaneous_repair(cfg: &RaidConfig) -> Result<Generator> {
    let mut gen = build_no_repair(cfg)?;
    for j in 1..=cfg.m_check as usize {
        gen.add_rate(j, 0, cfg.mu);
    }
    gen.finalize();
    Ok(gen)
}

/// Model 4: simultaneous repair where a service event damages a working
/// drive with probability `p`. Effective rates: `lambda_0 = T lambda`,
/// `lambda_j = (T - j) lambda + mu p` for `j > 0`, `mu_j = mu (1 - p)`.
pub fn build_imperfect_repair(cfg: &RaidConfig) -> Result<Generator> {
    cfg.validate()?;
    let t = cfg.total_drives() as f64;
    let m = cfg.m_check;
    let mut gen = Generator::empty_chain(m);
    gen.add_rate(0, 1, t * cfg.lambda);
    for j in 1..=m as usize {
        gen.add_rate(j, j + 1, (t - j as f64) * cfg.lambda + cfg.mu * cfg.p);
        gen.add_rate(j, 0, cfg.mu * (1.0 - cfg.p));
    }
    gen.finalize();
    Ok(gen)
}

#[cfg(test)]
mod tests {
    use super::*;

    // Off-diagonals in row order, then the diagonal: the cancellation
    // order `finalize` guarantees.
    fn col_sums(gen: &Generator) -> Vec<f64> {
        (0..gen.dim())
            .map(|c| {
                let s: f64 = (0..gen.dim())
                    .filter(|&r| r != c)
                    .map(|r| gen.a[(r, c)])
                    .sum();
                s + gen.a[(c, c)]
            })
            .collect()
    }

    #[test]
    fn no_repair_mirrors_the_chain_edge_labels() {
        // N=1, M=1: T*lambda = 0.2 out of state 0, N*lambda = 0.1 out of 1.
        let cfg = RaidConfig::new(1, 1);
        let gen = build_no_repair(&cfg).unwrap();
        assert_eq!(gen.dim(), 3);
        assert_eq!(gen.a[(1, 0)], 0.2);
        assert_eq!(gen.a[(2, 1)], 0.1);
        assert_eq!(gen.a[(0, 0)], -0.2);
        assert_eq!(gen.initial[0], 1.0);
    }

    #[test]
    fn no_repair_degenerate_m_zero() {
        let cfg = RaidConfig::new(3, 0);
        let gen = build_no_repair(&cfg).unwrap();
        assert_eq!(gen.dim(), 2);
        assert_eq!(gen.a[(1, 0)], 3.0 * 0.1);
        assert_eq!(gen.fail_index(), 1);
    }

    #[test]
    fn column_sums_are_exactly_zero() {
        for (n, m) in [(1u32, 0u32), (4, 2), (8, 5), (64, 8)] {
            let cfg = RaidConfig::new(n, m).with_p(0.3);
            for gen in [
                build_no_repair(&cfg).unwrap(),
                build_individual_repair(&cfg).unwrap(),
                build_simultaneous_repair(&cfg).unwrap(),
                build_imperfect_repair(&cfg).unwrap(),
            ] {
                for s in col_sums(&gen) {
                    assert_eq!(s, 0.0);
                }
                // FAIL column identically zero: absorbing.
                let f = gen.fail_index();
                for r in 0..gen.dim() {
                    assert_eq!(gen.a[(r, f)], 0.0);
                }
            }
        }
    }

    #[test]
    fn individual_repair_matches_the_raid5_matrix() {
        // N data drives, M=1: the 3x3 matrix with repair entry mu at (0,1).
        let n = 4u32;
        let cfg = RaidConfig::new(n, 1);
        let gen = build_individual_repair(&cfg).unwrap();
        let lam = cfg.lambda;
        let mu = cfg.mu;
        let nf = n as f64;
        let expected = DMatrix::from_row_slice(
            3,
            3,
            &[
                -(nf + 1.0) * lam,
                mu,
                0.0,
                (nf + 1.0) * lam,
                -nf * lam - mu,
                0.0,
                0.0,
                nf * lam,
                0.0,
            ],
        );
        assert_eq!(gen.a, expected);
    }

    #[test]
    fn individual_repair_with_zero_mu_is_no_repair() {
        let cfg = RaidConfig::new(6, 3).with_mu(0.0);
        assert_eq!(
            build_individual_repair(&cfg).unwrap().a,
            build_no_repair(&cfg).unwrap().a
        );
    }

    #[test]
    fn individual_repair_hand_entries() {
        let cfg = RaidConfig::new(4, 2);
        let gen = build_individual_repair(&cfg).unwrap();
        assert_eq!(gen.a[(0, 1)], 1460.0);
        assert_eq!(gen.a[(2, 1)], 0.5);
    }

    #[test]
    fn simultaneous_equals_individual_for_one_check_drive() {
        let cfg = RaidConfig::new(7, 1);
        assert_eq!(
            build_simultaneous_repair(&cfg).unwrap().a,
            build_individual_repair(&cfg).unwrap().a
        );
    }

    #[test]
    fn simultaneous_repairs_only_enter_row_zero() {
        let cfg = RaidConfig::new(4, 3);
        let gen = build_simultaneous_repair(&cfg).unwrap();
        assert_eq!(gen.a[(0, 1)], 1460.0);
        assert_eq!(gen.a[(0, 2)], 1460.0);
        assert_eq!(gen.a[(0, 3)], 1460.0);
        assert_eq!(gen.a[(1, 2)], 0.0);
        assert_eq!(gen.a[(2, 3)], 0.0);
    }

    #[test]
    fn imperfect_with_p_zero_is_simultaneous() {
        let cfg = RaidConfig::new(5, 4);
        assert_eq!(
            build_imperfect_repair(&cfg).unwrap().a,
            build_simultaneous_repair(&cfg).unwrap().a
        );
    }

    #[test]
    fn imperfect_effective_rates() {
        let cfg = RaidConfig::new(4, 2).with_p(0.05);
        let gen = build_imperfect_repair(&cfg).unwrap();
        // Out of state 1: (T-1) lambda + mu p = 0.5 + 73.0.
        assert!((gen.a[(2, 1)] - 73.5).abs() < 1e-12);
        // Repairs at mu (1 - p) = 1387.
        assert!((gen.a[(0, 1)] - 1387.0).abs() < 1e-12);
        assert!((gen.a[(0, 2)] - 1387.0).abs() < 1e-12);
    }

    #[test]
    fn imperfect_rejects_p_of_one() {
        let cfg = RaidConfig::new(4, 2).with_p(1.0);
        assert!(build_imperfect_repair(&cfg).is_err());
    }
}
