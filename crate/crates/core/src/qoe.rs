//! QoE metrics, the constrained objective and its Lagrangian relaxation.
//!
//! Per user and episode three quantities are tracked: average PSNR `Q`,
//! total rebuffering `S` and average absolute PSNR change `V`. The agent's
//! per-step reward is the change of the *unnormalized* running Lagrangian
//! (`Σq − μ0 Σstall − μ1 Σ|Δq|`), which keeps rewards local regardless of
//! episode length. The targets `H0`, `H1` only move the multipliers.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct QoeAccumulator {
    pub quality_sum: f64,
    pub quality_sq_sum: f64,
    pub variation_sum: f64,
    pub stall_sum: f64,
    pub gop_count: usize,
    pub last_quality: Option<f64>,
}

/// Contribution of one delivered GoP.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GopOutcome {
    pub quality_db: f64,
    pub stall_s: f64,
}

impl QoeAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds one GoP. Returns the absolute quality change it introduced
    /// (zero for the first GoP, which has no predecessor).
    pub fn record(&mut self, gop: GopOutcome) -> f64 {
        let change = self
            .last_quality
            .map_or(0.0, |prev| (gop.quality_db - prev).abs());
        self.quality_sum += gop.quality_db;
        self.quality_sq_sum += gop.quality_db * gop.quality_db;
        self.variation_sum += change;
        self.stall_sum += gop.stall_s;
        self.gop_count += 1;
        self.last_quality = Some(gop.quality_db);
        change
    }

    /// `Q`: mean per-GoP PSNR.
    pub fn average_quality(&self) -> Result<f64> {
        if self.gop_count == 0 {
            return Err(Error::Domain(
                "average quality needs at least one GoP".into(),
            ));
        }
        Ok(self.quality_sum / self.gop_count as f64)
    }

    /// Population standard deviation of per-GoP PSNR.
    pub fn quality_std(&self) -> Result<f64> {
        let mean = self.average_quality()?;
        let var = self.quality_sq_sum / self.gop_count as f64 - mean * mean;
        Ok(var.max(0.0).sqrt())
    }

    /// `V`: mean absolute PSNR change between consecutive GoPs.
    pub fn quality_variation(&self) -> Result<f64> {
        if self.gop_count < 2 {
            return Err(Error::Domain(
                "quality variation needs at least two GoPs".into(),
            ));
        }
        Ok(self.variation_sum / (self.gop_count - 1) as f64)
    }

    /// `S`: total rebuffering time.
    pub fn rebuffering(&self) -> f64 {
        self.stall_sum
    }

    /// `Q − μ0·S − μ1·V`.
    pub fn weighted_qoe(&self, mu0: f64, mu1: f64) -> Result<f64> {
        Ok(self.average_quality()? - mu0 * self.stall_sum - mu1 * self.quality_variation()?)
    }

    /// `Q + μ0(H0 − S) + μ1(H1 − V)`.
    pub fn lagrangian_qoe(&self, lag: &LagrangianState) -> Result<f64> {
        let q = self.average_quality()?;
        let v = self.quality_variation()?;
        Ok(q + lag.mu0 * (lag.h0 - self.stall_sum) + lag.mu1 * (lag.h1 - v))
    }

    /// `Σq − μ0·Σstall − μ1·Σ|Δq|`; the per-step rewards telescope to this.
    pub fn running_objective(&self, lag: &LagrangianState) -> f64 {
        self.quality_sum - lag.mu0 * self.stall_sum - lag.mu1 * self.variation_sum
    }

    /// Unnormalized Lagrangian `Σq + μ0(H0 − Σstall) + μ1(H1 − Σ|Δq|)`.
    pub fn unnormalized_lagrangian(&self, lag: &LagrangianState) -> f64 {
        self.quality_sum
            + lag.mu0 * (lag.h0 - self.stall_sum)
            + lag.mu1 * (lag.h1 - self.variation_sum)
    }
}

/// Reward for one GoP from its local quantities: `q − μ0·stall − μ1·|Δq|`.
pub fn gop_reward(gop: GopOutcome, change_db: f64, lag: &LagrangianState) -> f64 {
    gop.quality_db - lag.mu0 * gop.stall_s - lag.mu1 * change_db
}

/// Reward between two accumulator snapshots one GoP apart.
pub fn step_reward(
    before: &QoeAccumulator,
    after: &QoeAccumulator,
    lag: &LagrangianState,
) -> Result<f64> {
    if after.gop_count != before.gop_count + 1 {
        return Err(Error::Domain(format!(
            "step reward needs exactly one GoP between snapshots, got {} -> {}",
            before.gop_count, after.gop_count
        )));
    }
    Ok(after.running_objective(lag) - before.running_objective(lag))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LagrangianState {
    pub mu0: f64,
    pub mu1: f64,
    /// Target total rebuffering per user and episode, seconds.
    pub h0: f64,
    /// Target average quality variation per user and episode, dB.
    pub h1: f64,
    pub step_size: f64,
    pub mu_max: f64,
}

impl Default for LagrangianState {
    fn default() -> Self {
        Self {
            mu0: 1.0,
            mu1: 1.0,
            h0: 0.5,
            h1: 2.0,
            step_size: 0.01,
            mu_max: 100.0,
        }
    }
}

impl LagrangianState {
    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.mu0,
            self.mu1,
            self.h0,
            self.h1,
            self.step_size,
            self.mu_max,
        ]
        .iter()
        .all(|x| x.is_finite());
        if !finite || self.step_size < 0.0 || self.mu_max < 0.0 {
            return Err(Error::Config(
                "multiplier settings must be finite with nonnegative step size and cap".into(),
            ));
        }
        if !(0.0..=self.mu_max).contains(&self.mu0) || !(0.0..=self.mu_max).contains(&self.mu1) {
            return Err(Error::Config(format!(
                "multipliers must lie in [0, {}]",
                self.mu_max
            )));
        }
        Ok(())
    }

    /// Projected gradient step on `μ0(H0 − S) + μ1(H1 − V)`.
    pub fn updated(&self, stall_s: f64, variation_db: f64) -> Self {
        let step = |mu: f64, slack: f64| (mu - self.step_size * slack).clamp(0.0, self.mu_max);
        Self {
            mu0: step(self.mu0, self.h0 - stall_s),
            mu1: step(self.mu1, self.h1 - variation_db),
            ..*self
        }
    }
}

/// Multiplier update from one finished episode's accumulator. A one-GoP
/// episode has no variation and counts as `V = 0`.
pub fn update_multipliers(lag: &LagrangianState, acc: &QoeAccumulator) -> LagrangianState {
    lag.updated(acc.rebuffering(), acc.quality_variation().unwrap_or(0.0))
}

/// Per-user episode record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeSummary {
    pub user: usize,
    pub psnr_mean_db: f64,
    pub psnr_std_db: f64,
    pub rebuffering_s: f64,
    pub aqv_db: f64,
    pub weighted_qoe: f64,
    pub lagrangian_qoe: f64,
    pub mu0: f64,
    pub mu1: f64,
}

impl EpisodeSummary {
    pub fn from_accumulator(
        user: usize,
        acc: &QoeAccumulator,
        lag: &LagrangianState,
    ) -> Result<Self> {
        let q = acc.average_quality()?;
        let v = acc.quality_variation().unwrap_or(0.0);
        Ok(Self {
            user,
            psnr_mean_db: q,
            psnr_std_db: acc.quality_std()?,
            rebuffering_s: acc.stall_sum,
            aqv_db: v,
            weighted_qoe: q - lag.mu0 * acc.stall_sum - lag.mu1 * v,
            lagrangian_qoe: q + lag.mu0 * (lag.h0 - acc.stall_sum) + lag.mu1 * (lag.h1 - v),
            mu0: lag.mu0,
            mu1: lag.mu1,
        })
    }
}
