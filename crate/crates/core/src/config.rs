use crate::error::{Error, Result};

/// Hours in a year under the repo-wide unit convention (1 y = 8760 h = 365 d).
pub const HOURS_PER_YEAR: f64 = 8760.0;
/// Days in a year.
pub const DAYS_PER_YEAR: f64 = 365.0;

/// Parameters shared by every reliability model.
///
/// All rates are per year and all durations are in years; unit conversion is
/// the CLI's job. Defaults follow the numerical studies: drive failures once
/// per ten years, repair once per six hours, sector errors once per two days
/// per drive, scrubbing once per six hours, and a five-year deployment.
#[derive(Debug, Clone, PartialEq)]
pub struct RaidConfig {
    /// Number of data drives N (payload).
    pub n_data: u32,
    /// Number of check drives M (redundancy); any M+1 failures lose data.
    pub m_check: u32,
    /// Per-drive failure rate lambda, per year.
    pub lambda: f64,
    /// Repair rate mu, per year.
    pub mu: f64,
    /// Probability that a service event damages a working drive instead of
    /// repairing, in [0, 1).
    pub p: f64,
    /// Sector-error rate per drive (lambda'), per year.
    pub lambda_s: f64,
    /// Scrub rate (mu'), per year.
    pub mu_s: f64,
    /// Rebuild delay h, years.
    pub h: f64,
    /// Deployment time horizon, years.
    pub horizon: f64,
}

impl RaidConfig {
    /// Config with the default rates for the given drive counts.
    pub fn new(n_data: u32, m_check: u32) -> Self {
        RaidConfig {
            n_data,
            m_check,
            lambda: 1.0 / 10.0,
            mu: HOURS_PER_YEAR / 6.0,
            p: 0.0,
            lambda_s: DAYS_PER_YEAR / 2.0,
            mu_s: HOURS_PER_YEAR / 6.0,
            h: 0.0,
            horizon: 5.0,
        }
    }

    /// Total drive count T = N + M.
    pub fn total_drives(&self) -> u32 {
        self.n_data + self.m_check
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_data < 1 {
            return Err(Error::InvalidConfig("need at least one data drive".into()));
        }
        let rates = [
            ("lambda", self.lambda),
            ("mu", self.mu),
            ("lambda_s", self.lambda_s),
            ("mu_s", self.mu_s),
        ];
        for (name, r) in rates {
            if !r.is_finite() || r < 0.0 {
                return Err(Error::InvalidConfig(format!(
                    "rate {name} must be finite and non-negative, got {r}"
                )));
            }
        }
        if !self.p.is_finite() || !(0.0..1.0).contains(&self.p) {
            return Err(Error::InvalidConfig(format!(
                "human-error probability p must lie in [0, 1), got {}",
                self.p
            )));
        }
        if !self.h.is_finite() || self.h < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "rebuild delay h must be finite and non-negative, got {}",
                self.h
            )));
        }
        if !self.horizon.is_finite() || self.horizon <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "horizon must be positive, got {}",
                self.horizon
            )));
        }
        Ok(())
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn with_mu(mut self, mu: f64) -> Self {
        self.mu = mu;
        self
    }

    pub fn with_p(mut self, p: f64) -> Self {
        self.p = p;
        self
    }

    pub fn with_sector_rates(mut self, lambda_s: f64, mu_s: f64) -> Self {
        self.lambda_s = lambda_s;
        self.mu_s = mu_s;
        self
    }

    pub fn with_delay(mut self, h: f64) -> Self {
        self.h = h;
        self
    }

    pub fn with_horizon(mut self, horizon: f64) -> Self {
        self.horizon = horizon;
        self
    }
}
