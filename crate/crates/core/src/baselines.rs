//! Reference policies and the evaluation harness.
//!
//! Fixed-placement policies keep every GoP on one placement and pick the
//! layer count with a rate rule; the random policy draws uniformly from the
//! legal joint actions.

use std::fmt;
use std::path::Path;
use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::compute::{stage_times, Placement};
use crate::env::{
    DecisionContext, EnvStep, Environment, JointAction, Observation, Scenario, UserView,
};
use crate::playback::TelemetryRow;
use crate::rng::{self, Stream};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RateRule {
    /// Largest layer count whose estimated preparation time fits in the
    /// buffer minus `margin_s`, never below the base layer.
    MaxAffordable {
        margin_s: f64,
    },
    FixedLayer(usize),
    /// Base layer below `reservoir_s` of buffer, top layer above
    /// `reservoir_s + cushion_s`, linear in between.
    BufferThreshold {
        reservoir_s: f64,
        cushion_s: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PolicySpec {
    FixedPlacement {
        placement: Placement,
        rate: RateRule,
    },
    Random {
        seed: u64,
    },
}

impl PolicySpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            PolicySpec::FixedPlacement { rate, .. } => match rate {
                RateRule::MaxAffordable { margin_s } if !(margin_s >= 0.0) => Err(Error::Config(
                    format!("margin must be nonnegative, got {margin_s}"),
                )),
                RateRule::FixedLayer(0) => {
                    Err(Error::Config("fixed layer count must be at least 1".into()))
                }
                RateRule::BufferThreshold {
                    reservoir_s,
                    cushion_s,
                } if !(reservoir_s >= 0.0 && cushion_s > 0.0) => Err(Error::Config(
                    "buffer thresholds need reservoir >= 0 and cushion > 0".into(),
                )),
                _ => Ok(()),
            },
            PolicySpec::Random { .. } => Ok(()),
        }
    }

    pub fn name(&self) -> String {
        match self {
            PolicySpec::FixedPlacement { placement, rate } => match rate {
                RateRule::MaxAffordable { .. } => format!("{placement}/max-affordable"),
                RateRule::FixedLayer(k) => format!("{placement}/layer-{k}"),
                RateRule::BufferThreshold { .. } => format!("{placement}/buffer-rate"),
            },
            PolicySpec::Random { .. } => "random".into(),
        }
    }
}

/// Estimated `D + P + T` for streaming `layers` of the user's next GoP.
pub fn estimate_preparation(
    view: &UserView,
    placement: Placement,
    layers: usize,
    ecu_shares: (f64, f64),
    throughput_bps: f64,
) -> Result<f64> {
    let d = view.layer_sizes[layers - 1];
    let stages = stage_times(
        placement,
        &view.manifest,
        d,
        view.headset,
        ecu_shares.0,
        ecu_shares.1,
    )?;
    let transmit = if stages.payload_bits == 0.0 {
        0.0
    } else if throughput_bps > 0.0 {
        stages.payload_bits / throughput_bps
    } else {
        f64::INFINITY
    };
    Ok(stages.decode_s + stages.render_s + transmit)
}

/// A policy together with its random state.
#[derive(Debug, Clone)]
pub struct Policy {
    spec: PolicySpec,
    rng: ChaCha8Rng,
}

impl Policy {
    pub fn new(spec: PolicySpec) -> Result<Self> {
        spec.validate()?;
        let seed = match spec {
            PolicySpec::Random { seed } => seed,
            PolicySpec::FixedPlacement { .. } => 0,
        };
        Ok(Self {
            spec,
            rng: rng::stream(seed, Stream::Policy),
        })
    }

    pub fn spec(&self) -> &PolicySpec {
        &self.spec
    }

    /// Re-keys the random stream for an episode so episodes do not depend on
    /// the order they are run in.
    pub fn begin_episode(&mut self, episode: u64) {
        if let PolicySpec::Random { seed } = self.spec {
            self.rng = rng::stream(rng::mix(seed, episode), Stream::Policy);
        }
    }

    pub fn decide(&mut self, obs: &Observation, ctx: &DecisionContext) -> Result<JointAction> {
        let users = ctx.users.len();
        if obs.users() != users {
            return Err(Error::Config(format!(
                "observation has {} users, context {users}",
                obs.users()
            )));
        }
        match self.spec {
            PolicySpec::Random { .. } => {
                let mut action = JointAction {
                    layers: Vec::with_capacity(users),
                    placements: Vec::with_capacity(users),
                };
                for view in &ctx.users {
                    action
                        .layers
                        .push(self.rng.gen_range(1..=view.layer_sizes.len()));
                    action.placements.push(self.rng.gen_range(0..3));
                }
                Ok(action)
            }
            PolicySpec::FixedPlacement { placement, rate } => {
                let active = ctx.users.iter().filter(|u| u.active).count().max(1) as f64;
                let shares = match placement {
                    Placement::EcuBoth => {
                        (ctx.ecu_decode_bps / active, ctx.ecu_render_bps / active)
                    }
                    Placement::EcuDecodeHeadsetRender => (ctx.ecu_decode_bps / active, 0.0),
                    Placement::HeadsetBoth => (0.0, 0.0),
                };
                let layers = ctx
                    .users
                    .iter()
                    .enumerate()
                    .map(|(n, view)| {
                        if !view.active {
                            return Ok(1);
                        }
                        let top = view.layer_sizes.len();
                        let buffer = obs.buffer_s(n);
                        Ok(match rate {
                            RateRule::FixedLayer(k) => k.min(top),
                            RateRule::MaxAffordable { margin_s } => {
                                let budget = buffer - margin_s;
                                let throughput = obs.last_throughput(n);
                                let mut best = 1;
                                for k in 1..=top {
                                    if estimate_preparation(view, placement, k, shares, throughput)?
                                        <= budget
                                    {
                                        best = k;
                                    }
                                }
                                best
                            }
                            RateRule::BufferThreshold {
                                reservoir_s,
                                cushion_s,
                            } => {
                                let frac = ((buffer - reservoir_s) / cushion_s).clamp(0.0, 1.0);
                                1 + (frac * (top - 1) as f64).floor() as usize
                            }
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(JointAction {
                    layers,
                    placements: vec![placement.index(); users],
                })
            }
        }
    }
}

/// One user in one evaluation episode.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpisodeRow {
    pub episode: usize,
    pub seed: u64,
    pub user: usize,
    pub video: String,
    pub psnr_mean_db: f64,
    pub psnr_std_db: f64,
    pub rebuffering_s: f64,
    pub aqv_db: f64,
    pub weighted_qoe: f64,
    pub lagrangian_qoe: f64,
    pub mu0: f64,
    pub mu1: f64,
    pub mean_transmit_s: f64,
    pub mean_preparation_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Stat {
    /// Mean over all user-episodes.
    pub mean: f64,
    /// Population standard deviation over all user-episodes.
    pub std: f64,
    /// Standard deviation of the per-episode user averages.
    pub episode_std: f64,
}

impl Stat {
    fn of(rows: &[EpisodeRow], field: impl Fn(&EpisodeRow) -> f64) -> Self {
        let values: Vec<f64> = rows.iter().map(&field).collect();
        let (mean, std) = mean_std(&values);
        let episodes = rows.iter().map(|r| r.episode).max().map_or(0, |e| e + 1);
        let mut sums = vec![(0.0, 0usize); episodes];
        for r in rows {
            sums[r.episode].0 += field(r);
            sums[r.episode].1 += 1;
        }
        let per_episode: Vec<f64> = sums
            .iter()
            .filter(|s| s.1 > 0)
            .map(|s| s.0 / s.1 as f64)
            .collect();
        Self {
            mean,
            std,
            episode_std: mean_std(&per_episode).1,
        }
    }
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub psnr_db: Stat,
    pub rebuffering_s: Stat,
    pub aqv_db: Stat,
    pub weighted_qoe: Stat,
    pub lagrangian_qoe: Stat,
    pub transmit_s: Stat,
    pub preparation_s: Stat,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub policy: String,
    pub episodes: usize,
    pub rows: Vec<EpisodeRow>,
    pub summary: Summary,
}

#[derive(Serialize)]
struct SummaryRecord<'a> {
    policy: &'a str,
    episodes: usize,
    psnr_mean_db: f64,
    psnr_std_db: f64,
    rebuffering_mean_s: f64,
    rebuffering_std_s: f64,
    aqv_mean_db: f64,
    aqv_std_db: f64,
    weighted_qoe_mean: f64,
    weighted_qoe_std: f64,
    lagrangian_qoe_mean: f64,
    lagrangian_qoe_std: f64,
    transmit_mean_s: f64,
    transmit_std_s: f64,
    preparation_mean_s: f64,
    preparation_std_s: f64,
}

impl MetricsReport {
    fn new(policy: String, episodes: usize, rows: Vec<EpisodeRow>) -> Self {
        let summary = Summary {
            psnr_db: Stat::of(&rows, |r| r.psnr_mean_db),
            rebuffering_s: Stat::of(&rows, |r| r.rebuffering_s),
            aqv_db: Stat::of(&rows, |r| r.aqv_db),
            weighted_qoe: Stat::of(&rows, |r| r.weighted_qoe),
            lagrangian_qoe: Stat::of(&rows, |r| r.lagrangian_qoe),
            transmit_s: Stat::of(&rows, |r| r.mean_transmit_s),
            preparation_s: Stat::of(&rows, |r| r.mean_preparation_s),
        };
        Self {
            policy,
            episodes,
            rows,
            summary,
        }
    }

    fn summary_record(&self) -> SummaryRecord<'_> {
        let s = &self.summary;
        SummaryRecord {
            policy: &self.policy,
            episodes: self.episodes,
            psnr_mean_db: s.psnr_db.mean,
            psnr_std_db: s.psnr_db.std,
            rebuffering_mean_s: s.rebuffering_s.mean,
            rebuffering_std_s: s.rebuffering_s.std,
            aqv_mean_db: s.aqv_db.mean,
            aqv_std_db: s.aqv_db.std,
            weighted_qoe_mean: s.weighted_qoe.mean,
            weighted_qoe_std: s.weighted_qoe.std,
            lagrangian_qoe_mean: s.lagrangian_qoe.mean,
            lagrangian_qoe_std: s.lagrangian_qoe.std,
            transmit_mean_s: s.transmit_s.mean,
            transmit_std_s: s.transmit_s.std,
            preparation_mean_s: s.preparation_s.mean,
            preparation_std_s: s.preparation_s.std,
        }
    }

    pub fn write_summary_csv<W: std::io::Write>(
        reports: &[&MetricsReport],
        writer: W,
    ) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for r in reports {
            w.serialize(r.summary_record())?;
        }
        w.flush().map_err(|e| Error::io("summary.csv", e))
    }

    pub fn write_episodes_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for row in &self.rows {
            w.serialize(row)?;
        }
        w.flush().map_err(|e| Error::io("per_episode.csv", e))
    }
}

impl fmt::Display for MetricsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = &self.summary;
        writeln!(f, "policy: {} ({} episodes)", self.policy, self.episodes)?;
        let lines = [
            ("PSNR (dB)", s.psnr_db),
            ("rebuffering (s)", s.rebuffering_s),
            ("AQV (dB)", s.aqv_db),
            ("weighted QoE", s.weighted_qoe),
            ("Lagrangian QoE", s.lagrangian_qoe),
            ("transmit time (s)", s.transmit_s),
            ("preparation (s)", s.preparation_s),
        ];
        for (name, stat) in lines {
            writeln!(f, "  {name:<18} {:>12.4} ± {:<10.4}", stat.mean, stat.std)?;
        }
        Ok(())
    }
}

/// Runs `episodes` episodes, calling `on_step` after every environment step.
/// Episode `i` is reset with seed `mix(seed, i)`.
pub fn evaluate_with(
    spec: PolicySpec,
    scenario: Arc<Scenario>,
    episodes: usize,
    seed: u64,
    mut on_step: impl FnMut(usize, &EnvStep) -> Result<()>,
) -> Result<MetricsReport> {
    if episodes == 0 {
        return Err(Error::Config(
            "evaluation needs at least one episode".into(),
        ));
    }
    let mut policy = Policy::new(spec)?;
    let mut env = Environment::new(scenario);
    let mut rows = Vec::new();
    for episode in 0..episodes {
        let episode_seed = rng::mix(seed, episode as u64);
        policy.begin_episode(episode as u64);
        let mut obs = env.reset(episode_seed)?;
        let users = env.users();
        let mut transmit = vec![(0.0, 0usize); users];
        let mut prep = vec![0.0; users];
        let mut videos = vec![String::new(); users];
        loop {
            let ctx = env.decision_context()?;
            let action = policy.decide(&obs, &ctx)?;
            let step = env.step(&action)?;
            for u in &step.info.users {
                videos[u.user].clone_from(&u.video);
                if let Some(s) = &u.step {
                    transmit[u.user].0 += s.timing.transmit_s;
                    transmit[u.user].1 += 1;
                    prep[u.user] += s.timing.preparation_s();
                }
            }
            on_step(episode, &step)?;
            obs = step.observation;
            if step.done {
                break;
            }
        }
        for s in env.episode_summaries()? {
            let (t_sum, count) = transmit[s.user];
            rows.push(EpisodeRow {
                episode,
                seed: episode_seed,
                user: s.user,
                video: videos[s.user].clone(),
                psnr_mean_db: s.psnr_mean_db,
                psnr_std_db: s.psnr_std_db,
                rebuffering_s: s.rebuffering_s,
                aqv_db: s.aqv_db,
                weighted_qoe: s.weighted_qoe,
                lagrangian_qoe: s.lagrangian_qoe,
                mu0: s.mu0,
                mu1: s.mu1,
                mean_transmit_s: t_sum / count as f64,
                mean_preparation_s: prep[s.user] / count as f64,
            });
        }
    }
    Ok(MetricsReport::new(spec.name(), episodes, rows))
}

pub fn evaluate(
    spec: PolicySpec,
    scenario: Arc<Scenario>,
    episodes: usize,
    seed: u64,
) -> Result<MetricsReport> {
    evaluate_with(spec, scenario, episodes, seed, |_, _| Ok(()))
}

/// Evaluates a policy and writes `telemetry/episode_XXXX.csv`,
/// `per_episode.csv` and `summary.csv` under `out`.
pub fn run_to_dir(
    spec: PolicySpec,
    scenario: Arc<Scenario>,
    episodes: usize,
    seed: u64,
    out: &Path,
) -> Result<MetricsReport> {
    let telemetry_dir = out.join("telemetry");
    std::fs::create_dir_all(&telemetry_dir).map_err(|e| Error::io(&telemetry_dir, e))?;
    let mut current: Option<(usize, csv::Writer<std::fs::File>)> = None;
    let report = evaluate_with(spec, scenario, episodes, seed, |episode, step| {
        if current.as_ref().map(|c| c.0) != Some(episode) {
            if let Some((_, mut w)) = current.take() {
                w.flush().map_err(|e| Error::io(&telemetry_dir, e))?;
            }
            let path = telemetry_dir.join(format!("episode_{episode:04}.csv"));
            current = Some((episode, csv::Writer::from_path(&path)?));
        }
        let (_, w) = current.as_mut().expect("writer opened above");
        for row in step.telemetry_rows() {
            w.serialize::<TelemetryRow>(row)?;
        }
        Ok(())
    })?;
    if let Some((_, mut w)) = current.take() {
        w.flush().map_err(|e| Error::io(&telemetry_dir, e))?;
    }
    let file = |name: &str| {
        let path = out.join(name);
        std::fs::File::create(&path).map_err(|e| Error::io(&path, e))
    };
    report.write_episodes_csv(file("per_episode.csv")?)?;
    MetricsReport::write_summary_csv(&[&report], file("summary.csv")?)?;
    Ok(report)
}
