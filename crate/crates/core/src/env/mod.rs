//! The multi-user streaming environment.
//!
//! All users advance in lockstep: one call to [`Environment::step`] prepares
//! and plays out one GoP for every user still watching. Each user's clock
//! still evolves on its own, so traces are read at that user's clock. Users
//! that finish early produce zero rows and zero rewards until everyone is
//! done.

mod config;
mod observation;
pub mod protocol;
pub mod server;

use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

pub use config::{
    load_scenario, ComputeConfig, Normalization, Randomize, Scenario, ScenarioConfig, Settings,
    VideoAsset, VideoRef,
};
pub use observation::{Layout, Observation};

use crate::compute::{ecu_allocate, EcuRequest, HeadsetSpeeds, Placement};
use crate::network::ThroughputTrace;
use crate::playback::{
    prepare_size, GopRequest, Preparation, SessionState, StepTiming, TelemetryRow,
};
use crate::qoe::{gop_reward, EpisodeSummary, GopOutcome, LagrangianState, QoeAccumulator};
use crate::rng::{self, Stream};
use crate::video::{LayerSelection, VideoManifest, ViewportTrace};
use crate::{Error, Result};

/// Per-user layer counts (`1..=L`) and placement indices (`0..3`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JointAction {
    pub layers: Vec<usize>,
    pub placements: Vec<usize>,
}

impl JointAction {
    pub fn uniform(users: usize, layers: usize, placement: Placement) -> Self {
        Self {
            layers: vec![layers; users],
            placements: vec![placement.index(); users],
        }
    }
}

/// What happened to one user during a step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserStep {
    pub gop: usize,
    pub placement: Placement,
    pub layers: usize,
    pub psnr_db: f64,
    pub quality_change_db: f64,
    pub ecu_decode_bps: f64,
    pub ecu_render_bps: f64,
    pub timing: StepTiming,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserInfo {
    pub user: usize,
    pub video: String,
    /// `None` once the user's session has completed.
    pub step: Option<UserStep>,
    pub clock_s: f64,
    pub buffer_s: f64,
    pub qoe: QoeAccumulator,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepInfo {
    pub users: Vec<UserInfo>,
    pub mu0: f64,
    pub mu1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvStep {
    pub observation: Observation,
    pub rewards: Vec<f64>,
    pub done: bool,
    pub info: StepInfo,
}

impl EnvStep {
    /// Telemetry rows for the users that played a GoP this step.
    pub fn telemetry_rows(&self) -> Vec<TelemetryRow> {
        self.info
            .users
            .iter()
            .filter_map(|u| {
                let s = u.step.as_ref()?;
                Some(TelemetryRow::new(
                    u.user,
                    s.gop,
                    s.placement,
                    s.layers,
                    &s.timing,
                    s.psnr_db,
                ))
            })
            .collect()
    }
}

/// Everything a rate heuristic may know about one user's next GoP.
#[derive(Debug, Clone, PartialEq)]
pub struct UserView {
    pub active: bool,
    /// Compressed viewport size for every layer count `1..=L`.
    pub layer_sizes: Vec<f64>,
    pub manifest: Arc<VideoManifest>,
    pub headset: HeadsetSpeeds,
    pub gop_duration_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecisionContext {
    pub users: Vec<UserView>,
    pub ecu_decode_bps: f64,
    pub ecu_render_bps: f64,
}

#[derive(Debug, Clone)]
struct UserSlot {
    video_index: usize,
    trace_index: usize,
    manifest: Arc<VideoManifest>,
    viewports: Arc<ViewportTrace>,
    trace: Arc<ThroughputTrace>,
    session: SessionState,
    qoe: QoeAccumulator,
}

#[derive(Debug, Clone)]
struct Episode {
    seed: u64,
    users: Vec<UserSlot>,
    steps: usize,
    done: bool,
}

/// One environment instance; serves one protocol session.
#[derive(Debug, Clone)]
pub struct Environment {
    scenario: Arc<Scenario>,
    lagrangian: LagrangianState,
    episode: Option<Episode>,
    /// `(S, V)` per user of every episode finished since the last update.
    finished: Vec<(f64, f64)>,
}

impl Environment {
    pub fn new(scenario: Arc<Scenario>) -> Self {
        let lagrangian = scenario.settings.lagrangian;
        Self {
            scenario,
            lagrangian,
            episode: None,
            finished: Vec::new(),
        }
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn users(&self) -> usize {
        self.scenario.users
    }

    pub fn lagrangian(&self) -> &LagrangianState {
        &self.lagrangian
    }

    pub fn set_lagrangian(&mut self, lag: LagrangianState) {
        self.lagrangian = lag;
    }

    pub fn layout(&self) -> Layout {
        let s = &self.scenario.settings;
        Layout {
            history: s.history,
            layers: self.scenario.num_layers(),
            future: s.future_window,
        }
    }

    pub fn is_active(&self) -> bool {
        self.episode.as_ref().is_some_and(|e| !e.done)
    }

    pub fn episode_seed(&self) -> Option<u64> {
        self.episode.as_ref().map(|e| e.seed)
    }

    /// Starts a new episode. Asset picks drawn at random come from streams
    /// keyed by `seed`; fixed picks assign asset `n % len` to user `n`.
    pub fn reset(&mut self, seed: u64) -> Result<Observation> {
        let sc = &self.scenario;
        let s = &sc.settings;
        let mut video_rng = rng::stream(seed, Stream::VideoPick);
        let mut trace_rng = rng::stream(seed, Stream::TracePick);
        let walk_seed = if s.randomize.viewport { seed } else { s.seed };
        let mut walk_rng = rng::stream(walk_seed, Stream::ViewportWalk);
        let mut users = Vec::with_capacity(sc.users);
        for n in 0..sc.users {
            let video_index = if s.randomize.video {
                video_rng.gen_range(0..sc.videos.len())
            } else {
                n % sc.videos.len()
            };
            let trace_index = if s.randomize.trace {
                trace_rng.gen_range(0..sc.traces.len())
            } else {
                n % sc.traces.len()
            };
            let asset = &sc.videos[video_index];
            let manifest = asset.manifest.clone();
            let viewports = if asset.viewports.is_empty() {
                let [w, h] = s.viewport_size;
                Arc::new(ViewportTrace::random_walk(
                    manifest.grid_h,
                    manifest.grid_v,
                    w,
                    h,
                    manifest.num_gops,
                    &mut walk_rng,
                )?)
            } else if s.randomize.viewport {
                asset.viewports[walk_rng.gen_range(0..asset.viewports.len())].clone()
            } else {
                asset.viewports[n % asset.viewports.len()].clone()
            };
            let cap = s.buffer_cap_s.unwrap_or(4.0 * manifest.gop_duration_s);
            let base_q = manifest.gop_quality(0, LayerSelection::BASE)?;
            users.push(UserSlot {
                video_index,
                trace_index,
                session: SessionState::new(n, manifest.num_gops, cap, base_q, s.history),
                qoe: QoeAccumulator::new(),
                manifest,
                viewports,
                trace: sc.traces[trace_index].clone(),
            });
        }
        self.episode = Some(Episode {
            seed,
            users,
            steps: 0,
            done: false,
        });
        self.observe()
    }

    fn episode(&self) -> Result<&Episode> {
        self.episode
            .as_ref()
            .ok_or_else(|| Error::Protocol("no episode in progress; send reset first".into()))
    }

    /// Assets picked for each user in the current episode: (video, trace).
    pub fn assignments(&self) -> Result<Vec<(usize, usize)>> {
        Ok(self
            .episode()?
            .users
            .iter()
            .map(|u| (u.video_index, u.trace_index))
            .collect())
    }

    fn check_action(
        &self,
        ep: &Episode,
        action: &JointAction,
    ) -> Result<Vec<(LayerSelection, Placement)>> {
        let n = self.scenario.users;
        if action.layers.len() != n || action.placements.len() != n {
            return Err(Error::Protocol(format!(
                "action must list {n} layers and {n} placements, got {} and {}",
                action.layers.len(),
                action.placements.len()
            )));
        }
        ep.users
            .iter()
            .zip(action.layers.iter().zip(&action.placements))
            .map(|(u, (&layers, &placement))| {
                let sel = u
                    .manifest
                    .selection(layers)
                    .map_err(|e| Error::Protocol(e.to_string()))?;
                let placement =
                    Placement::from_index(placement).map_err(|e| Error::Protocol(e.to_string()))?;
                Ok((sel, placement))
            })
            .collect()
    }

    /// Applies one joint action. On error the episode is left untouched.
    pub fn step(&mut self, action: &JointAction) -> Result<EnvStep> {
        let ep = self.episode()?;
        if ep.done {
            return Err(Error::Protocol("episode finished; send reset".into()));
        }
        let decisions = self.check_action(ep, action)?;
        let profile = &self.scenario.compute;
        let users = self.scenario.users;

        let mut sizes = vec![0.0; users];
        let mut requests = Vec::new();
        for (n, u) in ep.users.iter().enumerate() {
            if u.session.is_complete() {
                continue;
            }
            let (sel, placement) = decisions[n];
            let m = u.session.gop_cursor;
            sizes[n] = u.manifest.segment_size(m, u.viewports.at(m), sel)?;
            requests.extend(EcuRequest::for_placement(
                n,
                placement,
                sizes[n],
                u.manifest.beta,
            ));
        }
        let alloc = ecu_allocate(profile, users, &requests)?;

        let mut preps: Vec<Option<Preparation>> = vec![None; users];
        for (n, u) in ep.users.iter().enumerate() {
            if u.session.is_complete() {
                continue;
            }
            let (sel, placement) = decisions[n];
            let m = u.session.gop_cursor;
            let req = GopRequest {
                manifest: &u.manifest,
                viewport: u.viewports.at(m),
                trace: &u.trace,
                placement,
                selection: sel,
            };
            preps[n] = Some(prepare_size(
                u.session.clock_s,
                n,
                sizes[n],
                req,
                profile,
                &alloc,
            )?);
        }

        let lag = self.lagrangian;
        let ep = self.episode.as_mut().expect("checked above");
        let mut rewards = vec![0.0; users];
        let mut infos = Vec::with_capacity(users);
        for (n, u) in ep.users.iter_mut().enumerate() {
            let step = match preps[n] {
                Some(prep) => {
                    let (sel, placement) = decisions[n];
                    let gop = u.session.gop_cursor;
                    let timing = u.session.step(&prep, u.manifest.gop_duration_s)?;
                    let psnr_db = u.manifest.gop_quality(gop, sel)?;
                    let outcome = GopOutcome {
                        quality_db: psnr_db,
                        stall_s: timing.stall_s,
                    };
                    let change = u.qoe.record(outcome);
                    rewards[n] = gop_reward(outcome, change, &lag);
                    u.session.last_quality_db = psnr_db;
                    u.session.telemetry.last_selection = Some(sel);
                    Some(UserStep {
                        gop,
                        placement,
                        layers: sel.count(),
                        psnr_db,
                        quality_change_db: change,
                        ecu_decode_bps: alloc.decode_bps[n],
                        ecu_render_bps: alloc.render_bps[n],
                        timing,
                    })
                }
                None => None,
            };
            infos.push(UserInfo {
                user: n,
                video: u.manifest.video_id.clone(),
                step,
                clock_s: u.session.clock_s,
                buffer_s: u.session.buffer_s,
                qoe: u.qoe.clone(),
            });
        }
        ep.steps += 1;
        ep.done = ep.users.iter().all(|u| u.session.is_complete());
        if ep.done {
            for u in &ep.users {
                self.finished.push((
                    u.qoe.rebuffering(),
                    u.qoe.quality_variation().unwrap_or(0.0),
                ));
            }
        }
        let done = ep.done;
        Ok(EnvStep {
            observation: self.observe()?,
            rewards,
            done,
            info: StepInfo {
                users: infos,
                mu0: lag.mu0,
                mu1: lag.mu1,
            },
        })
    }

    /// Assembles the normalized joint observation.
    pub fn observe(&self) -> Result<Observation> {
        let ep = self.episode()?;
        let layout = self.layout();
        let norm = self.scenario.settings.normalization;
        let mut obs = Observation::zeros(ep.users.len(), layout);
        for (n, u) in ep.users.iter().enumerate() {
            let dt = u.manifest.gop_duration_s;
            let s = &u.session;
            let t = &s.telemetry;
            let active = !s.is_complete();
            let value = |x: f64| if active { x } else { 0.0 };
            let groups = [
                (layout.throughput(), &t.throughput_bps, norm.throughput_bps),
                (layout.decode(), &t.decode_s, dt),
                (layout.transmit(), &t.transmit_s, dt),
                (layout.render(), &t.render_s, dt),
            ];
            for (range, hist, scale) in groups {
                for (i, x) in range.zip(hist.padded()) {
                    obs.set(n, i, value(x), scale);
                }
            }
            if let (Some(sel), true) = (t.last_selection, active) {
                obs.set(n, layout.last_selection().start + sel.count() - 1, 1.0, 1.0);
            }
            obs.set(n, layout.buffer(), value(s.buffer_s), s.buffer_cap_s);
            let future = layout.future_sizes();
            let viewport = active.then(|| u.viewports.at(s.gop_cursor));
            for (j, i) in future.enumerate() {
                let gop = s.gop_cursor + j;
                let size = match viewport {
                    Some(vp) if gop < u.manifest.num_gops => {
                        u.manifest.segment_size(gop, vp, LayerSelection::BASE)?
                    }
                    _ => 0.0,
                };
                obs.set(n, i, size, norm.segment_bits);
            }
            obs.set(
                n,
                layout.remaining(),
                value(s.remaining_gops() as f64),
                u.manifest.num_gops as f64,
            );
        }
        Ok(obs)
    }

    /// Rate/placement-relevant facts about every user's next GoP.
    pub fn decision_context(&self) -> Result<DecisionContext> {
        let ep = self.episode()?;
        let profile = &self.scenario.compute;
        let users = ep
            .users
            .iter()
            .enumerate()
            .map(|(n, u)| {
                let active = !u.session.is_complete();
                let layer_sizes = if active {
                    let m = u.session.gop_cursor;
                    u.manifest.segment_sizes(m, u.viewports.at(m))?
                } else {
                    vec![0.0; u.manifest.num_layers]
                };
                Ok(UserView {
                    active,
                    layer_sizes,
                    manifest: u.manifest.clone(),
                    headset: profile.headsets[n],
                    gop_duration_s: u.manifest.gop_duration_s,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(DecisionContext {
            users,
            ecu_decode_bps: profile.ecu_decode_bps,
            ecu_render_bps: profile.ecu_render_bps,
        })
    }

    /// Per-user records for the current episode.
    pub fn episode_summaries(&self) -> Result<Vec<EpisodeSummary>> {
        let ep = self.episode()?;
        ep.users
            .iter()
            .enumerate()
            .map(|(n, u)| EpisodeSummary::from_accumulator(n, &u.qoe, &self.lagrangian))
            .collect()
    }

    pub fn accumulators(&self) -> Result<Vec<QoeAccumulator>> {
        Ok(self
            .episode()?
            .users
            .iter()
            .map(|u| u.qoe.clone())
            .collect())
    }

    pub fn sessions(&self) -> Result<Vec<SessionState>> {
        Ok(self
            .episode()?
            .users
            .iter()
            .map(|u| u.session.clone())
            .collect())
    }

    /// Number of user-episodes waiting for the next multiplier update.
    pub fn pending_updates(&self) -> usize {
        self.finished.len()
    }

    /// Moves the multipliers using the mean `S` and `V` over every user of
    /// every episode finished since the previous call.
    pub fn update_multipliers_epoch(&mut self) -> Result<(f64, f64)> {
        if self.finished.is_empty() {
            return Err(Error::Protocol(
                "no episode completed since the last multiplier update".into(),
            ));
        }
        let count = self.finished.len() as f64;
        let (s, v) = self
            .finished
            .iter()
            .fold((0.0, 0.0), |acc, x| (acc.0 + x.0, acc.1 + x.1));
        self.lagrangian = self.lagrangian.updated(s / count, v / count);
        self.finished.clear();
        Ok((self.lagrangian.mu0, self.lagrangian.mu1))
    }
}
