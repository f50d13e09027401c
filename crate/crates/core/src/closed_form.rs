//! Closed-form reliability quantities: the no-repair PDL/MTTDL family, the
//! RAID-4/5 moments, delay-model means, the CLT approximation, and the
//! silent-corruption remapping.

use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::gamma::ln_gamma;

use crate::config::RaidConfig;
use crate::error::{Error, Result};
use crate::model::{build_generator, ModelKind};
use crate::solver::{evolve, MomentReport};

/// Largest T for which binomial coefficients are taken exactly in integer
/// arithmetic; beyond this, log-gamma evaluation is used.
pub const EXACT_BINOMIAL_MAX_T: u32 = 60;

/// Shape parameters of the transformed failure-time law.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BetaParams {
    /// First shape, M + 1.
    pub alpha: u32,
    /// Second shape, N.
    pub beta: u32,
}

/// With U = 1 - exp(-lambda T_fail), U is Beta(M+1, N) under the no-repair
/// model.
pub fn beta_transform_params(n_data: u32, m_check: u32) -> BetaParams {
    BetaParams {
        alpha: m_check + 1,
        beta: n_data,
    }
}

/// Exact binomial coefficient; valid without overflow for n <= 60.
pub fn choose_u128(n: u32, k: u32) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

fn ln_choose(n: u32, k: u32) -> f64 {
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

/// No-repair probability of data loss by time t.
///
/// Each drive has failed by t with probability p = 1 - e^{-lambda t}; data
/// is lost once more than M of T have failed, so PDL is the upper binomial
/// tail. Summing the tail directly (all terms nonnegative, evaluated in log
/// space) keeps relative accuracy when the tail is small.
pub fn no_repair_pdl(n_data: u32, m_check: u32, lambda: f64, t: f64) -> f64 {
    let total = n_data + m_check;
    let ln_p = ln1m_exp(lambda * t);
    if ln_p == f64::NEG_INFINITY {
        return 0.0;
    }
    let mut acc = 0.0;
    for k in (m_check + 1)..=total {
        let ln_term = ln_choose(total, k) + k as f64 * ln_p - ((total - k) as f64) * lambda * t;
        acc += ln_term.exp();
    }
    acc.clamp(0.0, 1.0)
}

/// ln(1 - e^{-x}) for x >= 0, stable at both ends.
fn ln1m_exp(x: f64) -> f64 {
    if x <= 0.0 {
        f64::NEG_INFINITY
    } else if x < std::f64::consts::LN_2 {
        (-(-x).exp_m1()).ln()
    } else {
        (-(-x).exp()).ln_1p()
    }
}

/// A double-double value hi + lo. The alternating eigen sum runs through
/// intermediates up to ~1e9 times its result, so plain f64 arithmetic
/// loses seven digits to cancellation; the extra limb keeps them.
#[derive(Clone, Copy)]
struct Dd {
    hi: f64,
    lo: f64,
}

fn two_sum(a: f64, b: f64) -> Dd {
    let s = a + b;
    let bb = s - a;
    Dd {
        hi: s,
        lo: (a - (s - bb)) + (b - bb),
    }
}

fn two_prod(a: f64, b: f64) -> Dd {
    let p = a * b;
    Dd {
        hi: p,
        lo: a.mul_add(b, -p),
    }
}

impl Dd {
    fn from(x: f64) -> Dd {
        Dd { hi: x, lo: 0.0 }
    }

    /// Exact for integers below 2^106, which covers every C(n, k) kept in
    /// integer arithmetic here.
    fn from_u128(v: u128) -> Dd {
        let hi = v as f64;
        let lo = (v as i128 - hi as i128) as f64;
        Dd { hi, lo }
    }

    fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }

    fn add(self, other: Dd) -> Dd {
        let s = two_sum(self.hi, other.hi);
        two_sum(s.hi, s.lo + self.lo + other.lo)
    }

    fn mul(self, other: Dd) -> Dd {
        let p = two_prod(self.hi, other.hi);
        two_sum(p.hi, p.lo + self.hi * other.lo + self.lo * other.hi)
    }

    fn div_f64(self, d: f64) -> Dd {
        let q1 = self.hi / d;
        let r = two_prod(q1, d);
        let q2 = ((self.hi - r.hi) - r.lo + self.lo) / d;
        two_sum(q1, q2)
    }

    fn value(self) -> f64 {
        self.hi + self.lo
    }
}

/// No-repair PDL through the explicit spectral formula,
/// 1 - T C(T-1, M) sum_i (-1)^{M-i} C(M, i) e^{-(T-i) lambda t} / (T-i).
///
/// Mathematically identical to [`no_repair_pdl`]; kept as an independent
/// evaluation path. Every exponential is a power of the single base
/// x = e^{-lambda t} and every coefficient is an exact integer ratio, so
/// the sum is evaluated in double-double arithmetic with powers built by
/// repeated multiplication; the one rounding of x itself is harmless
/// because the sum, as a function of x, is well conditioned. T > 60 is
/// rejected before the binomial coefficients can overflow.
pub fn no_repair_pdl_eigen(n_data: u32, m_check: u32, lambda: f64, t: f64) -> Result<f64> {
    let total = n_data + m_check;
    if total > EXACT_BINOMIAL_MAX_T {
        return Err(Error::EigenFormOverflow {
            max: EXACT_BINOMIAL_MAX_T,
        });
    }
    let m = m_check;
    let x = Dd::from((-lambda * t).exp());
    // Substituting j = M - i turns the sum into
    // sum_j (-1)^j C(M, j) x^{N+j} / (N+j).
    let mut power = Dd::from(1.0);
    for _ in 0..n_data {
        power = power.mul(x);
    }
    let mut sum = Dd::from(0.0);
    for j in 0..=m {
        let coeff = Dd::from_u128(choose_u128(m, j)).div_f64((n_data + j) as f64);
        let term = coeff.mul(power);
        sum = sum.add(if j % 2 == 0 { term } else { term.neg() });
        power = power.mul(x);
    }
    let prefactor = Dd::from_u128(choose_u128(total - 1, m)).mul(Dd::from(total as f64));
    let survival = prefactor.mul(sum).value();
    Ok((1.0 - survival).clamp(0.0, 1.0))
}

/// Lower-triangular change-of-basis matrix of the no-repair chain's
/// eigendecomposition: S[k][l] = (-1)^{k-l} C(T-l, k-l), exact integers.
pub fn eigen_s_matrix(total: u32) -> Vec<Vec<i128>> {
    let dim = total as usize + 1;
    let mut s = vec![vec![0i128; dim]; dim];
    for k in 0..dim {
        for l in 0..=k {
            let c = choose_u128(total - l as u32, (k - l) as u32) as i128;
            s[k][l] = if (k - l) % 2 == 0 { c } else { -c };
        }
    }
    s
}

/// Exact inverse of [`eigen_s_matrix`]: S_inv[k][l] = C(T-l, k-l).
pub fn eigen_s_inv_matrix(total: u32) -> Vec<Vec<i128>> {
    let dim = total as usize + 1;
    let mut s = vec![vec![0i128; dim]; dim];
    for k in 0..dim {
        for l in 0..=k {
            s[k][l] = choose_u128(total - l as u32, (k - l) as u32) as i128;
        }
    }
    s
}

/// No-repair mean time to data loss, (1/lambda) sum_{k=T-M}^{T} 1/k.
pub fn no_repair_mttdl(n_data: u32, m_check: u32, lambda: f64) -> f64 {
    let total = n_data + m_check;
    let mut sum = 0.0f64;
    for k in (total - m_check)..=total {
        sum += 1.0 / k as f64;
    }
    sum / lambda
}

/// Digamma at a positive integer: psi(n) = -gamma + H_{n-1}, summed with
/// compensation so the identity holds to full precision for large n.
pub fn digamma_int(n: u32) -> f64 {
    assert!(n >= 1, "digamma_int needs a positive integer");
    let mut sum = 0.0f64;
    let mut carry = 0.0f64;
    for k in 1..n {
        let y = 1.0 / k as f64 - carry;
        let t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
    sum - statrs::consts::EULER_MASCHERONI
}

/// Large-system approximation MTTDL ~ ln(1 + M/N) / lambda; good to a few
/// percent once T is in the tens.
pub fn no_repair_mttdl_approx(n_data: u32, m_check: u32, lambda: f64) -> f64 {
    (m_check as f64 / n_data as f64).ln_1p() / lambda
}

/// CLT approximation to the no-repair PDL: the failed-drive count is
/// Binomial(T, 1 - e^{-lambda t}), approximated by a normal with a 0.5
/// continuity correction on the threshold count M.
pub fn normal_approx_pdl(n_data: u32, m_check: u32, lambda: f64, t: f64) -> f64 {
    let total = (n_data + m_check) as f64;
    let p = -(-lambda * t).exp_m1();
    let var = total * p * (1.0 - p);
    if var == 0.0 {
        // Degenerate point mass: all drives alive (p=0) or all failed (p=1).
        return if p > 0.5 { 1.0 } else { 0.0 };
    }
    let z = (m_check as f64 + 0.5 - total * p) / var.sqrt();
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    1.0 - normal.cdf(z)
}

/// Exact first two absorption moments of the M = 1 individual-repair chain.
pub fn raid5_moments(n_data: u32, lambda: f64, mu: f64) -> MomentReport {
    let n = n_data as f64;
    let l2 = lambda * lambda;
    let m1 = ((2.0 * n + 1.0) * lambda + mu) / (n * (n + 1.0) * l2);
    let denom = (n.powi(4) + 2.0 * n.powi(3) + n * n) * l2 * l2;
    let m2 = ((6.0 * n * n + 6.0 * n + 2.0) * l2 + (8.0 * n + 4.0) * mu * lambda + 2.0 * mu * mu)
        / denom;
    MomentReport {
        m1,
        m2,
        variance: m2 - m1 * m1,
        moments: vec![m1, m2],
    }
}

/// Mean time to data loss when every repair is preceded by a frozen waiting
/// period h (the naive delay model). Grows without bound in h.
pub fn delay_naive_mttdl(n_data: u32, lambda: f64, mu: f64, h: f64) -> f64 {
    let n = n_data as f64;
    ((2.0 * n + 1.0) * lambda + mu) / ((n * n + n) * lambda * lambda) + mu * h / (n * lambda)
}

/// Mean time to data loss of the rebuild model where repair takes a fixed
/// time h during which the surviving drives keep failing. Monotone
/// nonincreasing in h with a finite h -> infinity limit.
pub fn pde_rebuild_mttdl(n_data: u32, lambda: f64, mu: f64, h: f64) -> f64 {
    let n = n_data as f64;
    let e = (-(n + 1.0) * lambda * h).exp();
    ((2.0 * n + 1.0) * lambda + (2.0 - e) * mu)
        / ((n * n + n) * lambda * lambda + (1.0 - e) * (n + 1.0) * lambda * mu)
}

/// PDL of a chain model at the configured horizon; the common evaluation
/// path behind the CLI and the corruption mapping below.
pub fn model_pdl_at_horizon(kind: ModelKind, cfg: &RaidConfig) -> Result<f64> {
    let gen = build_generator(kind, cfg)?;
    let traj = evolve(&gen, &[cfg.horizon])?;
    Ok(traj.pdl(0))
}

/// PDL when errors are silent: without integrity metadata, one check-drive
/// pair per recovered error is spent on detect-and-correct, so the system
/// behaves like (N+2, M-2) under the same model and rates.
pub fn silent_corruption_pdl(kind: ModelKind, cfg: &RaidConfig) -> Result<f64> {
    if cfg.m_check < 2 {
        return Err(Error::InsufficientCheckDrives);
    }
    let mut mapped = cfg.clone();
    mapped.n_data = cfg.n_data + 2;
    mapped.m_check = cfg.m_check - 2;
    model_pdl_at_horizon(kind, &mapped)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pdl_basics() {
        assert_eq!(no_repair_pdl(4, 2, 0.1, 0.0), 0.0);
        assert!((no_repair_pdl(1, 1, 0.1, 5.0) - 0.154819).abs() < 1e-6);
        // M = T-1: every drive must fail.
        let p = -(-0.1f64 * 5.0).exp_m1();
        assert!((no_repair_pdl(1, 3, 0.1, 5.0) - p.powi(4)).abs() < 1e-14);
    }

    #[test]
    fn eigen_form_matches_binomial_form() {
        for (n, m) in [(1u32, 1u32), (4, 2), (10, 5), (25, 5), (28, 2)] {
            for t in [0.1, 1.0, 5.0, 20.0] {
                let a = no_repair_pdl(n, m, 0.1, t);
                let b = no_repair_pdl_eigen(n, m, 0.1, t).unwrap();
                assert!((a - b).abs() < 1e-9, "N={n} M={m} t={t}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn eigen_form_edge_cases() {
        // M=0 collapses to a single exponential.
        let v = no_repair_pdl_eigen(5, 0, 0.1, 2.0).unwrap();
        assert!((v - (1.0 - (-1.0f64).exp())).abs() < 1e-12);
        // Long horizon absorbs everything.
        assert!((no_repair_pdl_eigen(3, 2, 0.1, 1e4).unwrap() - 1.0).abs() < 1e-12);
        assert!(no_repair_pdl_eigen(60, 5, 0.1, 1.0).is_err());
    }

    #[test]
    fn s_matrices_invert_exactly() {
        for total in [2u32, 5, 12, 20] {
            let s = eigen_s_matrix(total);
            let si = eigen_s_inv_matrix(total);
            let dim = total as usize + 1;
            for k in 0..dim {
                for m in 0..dim {
                    let dot: i128 = (0..dim).map(|l| s[k][l] * si[l][m]).sum();
                    assert_eq!(dot, if k == m { 1 } else { 0 }, "T={total} ({k},{m})");
                }
            }
        }
    }

    #[test]
    fn mttdl_values() {
        assert!((no_repair_mttdl(1, 0, 0.1) - 10.0).abs() < 1e-12);
        let expected = 10.0 * (1.0 / 4.0 + 1.0 / 5.0 + 1.0 / 6.0);
        assert!((no_repair_mttdl(4, 2, 0.1) - expected).abs() < 1e-12);
    }

    #[test]
    fn digamma_identity_matches_harmonic_sums() {
        for total in [2u32, 10, 100, 10_000] {
            for m in [0u32, 1, total.min(6)] {
                let m = m.min(total - 1);
                let n = total - m;
                let via_digamma = (digamma_int(total + 1) - digamma_int(n)) / 0.1;
                let direct = no_repair_mttdl(n, m, 0.1);
                assert!(
                    (via_digamma - direct).abs() <= 1e-12 * direct.max(1.0),
                    "T={total} M={m}"
                );
            }
        }
    }

    #[test]
    fn log_approximation() {
        let lam = 0.1;
        assert!((no_repair_mttdl_approx(8, 8, lam) - 2.0f64.ln() / lam).abs() < 1e-12);
        // First order in M/N.
        let small = no_repair_mttdl_approx(1000, 1, lam);
        assert!((small - 1.0 / (1000.0 * lam)).abs() < 1e-5);
        // The harmonic sum has M+1 terms but the integral that yields the
        // logarithm only covers M of them, so the gap shrinks like 1/N at
        // fixed M/N; it is ~11% at N=64, M=8 and inside 1% only for arrays
        // in the thousands.
        let exact = no_repair_mttdl(6400, 800, lam);
        let approx = no_repair_mttdl_approx(6400, 800, lam);
        assert!(((approx - exact) / exact).abs() < 0.01);
        let exact = no_repair_mttdl(64, 8, lam);
        let approx = no_repair_mttdl_approx(64, 8, lam);
        assert!(((approx - exact) / exact).abs() < 0.15);
    }

    #[test]
    fn beta_params() {
        assert_eq!(
            beta_transform_params(4, 1),
            BetaParams { alpha: 2, beta: 4 }
        );
        assert_eq!(
            beta_transform_params(1, 0),
            BetaParams { alpha: 1, beta: 1 }
        );
        assert_eq!(
            beta_transform_params(4, 2),
            BetaParams { alpha: 3, beta: 4 }
        );
    }

    #[test]
    fn normal_approximation_near_the_mean() {
        // T=1000, lambda t = 0.1: threshold at the mean failure count gives
        // a probability near one half.
        let lam = 0.1f64;
        let t = 1.0;
        let p = -(-lam * t).exp_m1();
        let m = (1000.0 * p).round() as u32;
        let n = 1000 - m;
        let approx = normal_approx_pdl(n, m, lam, t);
        let exact = no_repair_pdl(n, m, lam, t);
        assert!((approx - exact).abs() < 0.02, "{approx} vs {exact}");
        assert!((approx - 0.5).abs() < 0.05);
        assert_eq!(normal_approx_pdl(4, 2, lam, 0.0), 0.0);
    }

    #[test]
    fn normal_approximation_large_t_sup_error() {
        let total = 10_000u32;
        let lam_t = 0.1f64;
        let p = -(-lam_t).exp_m1();
        let mean = total as f64 * p;
        let sd = (total as f64 * p * (1.0 - p)).sqrt();
        let lo = (mean - 6.0 * sd).max(0.0) as u32;
        let hi = (mean + 6.0 * sd).min(total as f64 - 1.0) as u32;
        let mut sup = 0.0f64;
        for m in lo..=hi {
            let exact = no_repair_pdl(total - m, m, lam_t, 1.0);
            let approx = normal_approx_pdl(total - m, m, lam_t, 1.0);
            sup = sup.max((exact - approx).abs());
        }
        assert!(sup < 0.01, "sup error {sup}");
    }

    #[test]
    fn raid5_moment_values() {
        let rep = raid5_moments(4, 0.1, 1460.0);
        assert!((rep.m1 - 7304.5).abs() < 1e-9 * 7304.5);
        assert!(rep.variance >= 0.0);
        // mu=0 reduces to the no-repair harmonic sum with M=1.
        let rep0 = raid5_moments(7, 0.2, 0.0);
        assert!((rep0.m1 - no_repair_mttdl(7, 1, 0.2)).abs() < 1e-12 * rep0.m1);
    }

    #[test]
    fn delay_means() {
        // h=0 reproduces the repairable-array mean in both delay models.
        let base = raid5_moments(4, 0.1, 1460.0).m1;
        assert!((delay_naive_mttdl(4, 0.1, 1460.0, 0.0) - base).abs() < 1e-9 * base);
        assert!((pde_rebuild_mttdl(4, 0.1, 1460.0, 0.0) - base).abs() < 1e-9 * base);
        // Hand values at the oscillation-figure parameters.
        assert!((delay_naive_mttdl(1, 0.01, 0.01, 300.0) - 500.0).abs() < 1e-9);
        assert!((pde_rebuild_mttdl(1, 0.01, 0.01, 300.0) - 125.0934).abs() < 1e-3);
        // The naive model grows in h; the rebuild model shrinks towards its
        // limit.
        assert!(delay_naive_mttdl(1, 0.01, 0.01, 600.0) > 500.0);
        let limit = (2.0 + 1.0) * 0.01 + 2.0 * 0.01;
        let limit = limit / (2.0 * 0.01 * (0.01 + 0.01));
        assert!((pde_rebuild_mttdl(1, 0.01, 0.01, 1e9) - limit).abs() < 1e-6 * limit);
        let mut prev = f64::INFINITY;
        for k in 0..=10 {
            let h = 10.0f64 * 2f64.powi(k);
            let v = pde_rebuild_mttdl(1, 0.01, 0.01, h);
            assert!(v <= prev + 1e-12 && v >= limit - 1e-9);
            prev = v;
        }
    }

    #[test]
    fn silent_corruption_mapping() {
        let cfg = RaidConfig::new(8, 4);
        let mapped = silent_corruption_pdl(ModelKind::NoRepair, &cfg).unwrap();
        let direct = model_pdl_at_horizon(ModelKind::NoRepair, &RaidConfig::new(10, 2)).unwrap();
        assert_eq!(mapped.to_bits(), direct.to_bits());
        assert!(
            (mapped - no_repair_pdl(10, 2, cfg.lambda, cfg.horizon)).abs() < 1e-10
        );
        assert!(silent_corruption_pdl(ModelKind::NoRepair, &RaidConfig::new(8, 1)).is_err());
        // M=2 maps to a wholly unprotected wider array.
        let m2 = silent_corruption_pdl(ModelKind::NoRepair, &RaidConfig::new(4, 2)).unwrap();
        assert!((m2 - no_repair_pdl(6, 0, 0.1, 5.0)).abs() < 1e-10);
    }
}
