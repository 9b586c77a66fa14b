//! Scenario configuration files and their resolved in-memory form.
//!
//! A scenario file is a JSON object. Asset paths are resolved relative to
//! the directory holding the file:
//!
//! ```json
//! {
//!   "users": 2,
//!   "videos": [{ "manifest": "videos/v0.json", "viewports": ["videos/v0_u0.json"] }],
//!   "traces": ["traces/t0.trace"],
//!   "compute": { "ecu_decode_bps": 7.5e9, "ecu_render_bps": 2e10,
//!                "headset": { "decode_bps": 2e8, "render_bps": 9.4e9 } },
//!   "buffer_cap_s": null,
//!   "history": 8,
//!   "future_window": 5,
//!   "lagrangian": { "mu0": 1.0, "mu1": 1.0, "h0": 0.5, "h1": 2.0, "step_size": 0.01, "mu_max": 100.0 },
//!   "seed": 0,
//!   "randomize": { "video": true, "trace": true, "viewport": true },
//!   "viewport_size": [3, 3],
//!   "normalization": { "throughput_bps": 1e9, "segment_bits": 1e8 }
//! }
//! ```
//!
//! Everything except `users`, `videos` and `traces` is optional. A video
//! without viewport files gets a seeded random-walk viewport per user.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::compute::{
    ComputeProfile, HeadsetSpeeds, DEFAULT_ECU_DECODE_BPS, DEFAULT_ECU_RENDER_BPS,
};
use crate::network::ThroughputTrace;
use crate::qoe::LagrangianState;
use crate::video::{VideoManifest, ViewportTrace};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoRef {
    pub manifest: PathBuf,
    #[serde(default)]
    pub viewports: Vec<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub users: usize,
    pub videos: Vec<VideoRef>,
    pub traces: Vec<PathBuf>,
    #[serde(flatten)]
    pub settings: Settings,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ComputeConfig {
    pub ecu_decode_bps: f64,
    pub ecu_render_bps: f64,
    pub headset: HeadsetSpeeds,
    /// Per-user overrides; must list every user when present.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub headsets: Option<Vec<HeadsetSpeeds>>,
}

impl Default for ComputeConfig {
    fn default() -> Self {
        Self {
            ecu_decode_bps: DEFAULT_ECU_DECODE_BPS,
            ecu_render_bps: DEFAULT_ECU_RENDER_BPS,
            headset: HeadsetSpeeds::default(),
            headsets: None,
        }
    }
}

impl ComputeConfig {
    pub fn profile(&self, users: usize) -> Result<ComputeProfile> {
        let headsets = match &self.headsets {
            Some(list) if list.len() != users => {
                return Err(Error::Config(format!(
                    "{} headset entries for {users} users",
                    list.len()
                )))
            }
            Some(list) => list.clone(),
            None => vec![self.headset; users],
        };
        let profile = ComputeProfile {
            headsets,
            ecu_decode_bps: self.ecu_decode_bps,
            ecu_render_bps: self.ecu_render_bps,
        };
        profile.validate()?;
        Ok(profile)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Randomize {
    pub video: bool,
    pub trace: bool,
    pub viewport: bool,
}

impl Default for Randomize {
    fn default() -> Self {
        Self {
            video: true,
            trace: true,
            viewport: true,
        }
    }
}

impl Randomize {
    pub const OFF: Randomize = Randomize {
        video: false,
        trace: false,
        viewport: false,
    };
}

/// Reference scales for observation features.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Normalization {
    pub throughput_bps: f64,
    pub segment_bits: f64,
}

impl Default for Normalization {
    fn default() -> Self {
        Self {
            throughput_bps: 1e9,
            segment_bits: 1e8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Settings {
    pub compute: ComputeConfig,
    /// Buffer capacity in seconds; `None` means four GoP durations.
    pub buffer_cap_s: Option<f64>,
    pub history: usize,
    pub future_window: usize,
    pub lagrangian: LagrangianState,
    pub seed: u64,
    pub randomize: Randomize,
    /// Width and height in tiles of synthetic viewports.
    pub viewport_size: [usize; 2],
    pub normalization: Normalization,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            compute: ComputeConfig::default(),
            buffer_cap_s: None,
            history: 8,
            future_window: 5,
            lagrangian: LagrangianState::default(),
            seed: 0,
            randomize: Randomize::default(),
            viewport_size: [3, 3],
            normalization: Normalization::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VideoAsset {
    pub manifest: Arc<VideoManifest>,
    pub viewports: Vec<Arc<ViewportTrace>>,
}

impl VideoAsset {
    pub fn new(manifest: VideoManifest, viewports: Vec<ViewportTrace>) -> Self {
        Self {
            manifest: Arc::new(manifest),
            viewports: viewports.into_iter().map(Arc::new).collect(),
        }
    }
}

/// Fully loaded and validated scenario, shareable between environments.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub users: usize,
    pub videos: Vec<VideoAsset>,
    pub traces: Vec<Arc<ThroughputTrace>>,
    pub compute: ComputeProfile,
    pub settings: Settings,
}

impl Scenario {
    pub fn new(
        users: usize,
        videos: Vec<VideoAsset>,
        traces: Vec<ThroughputTrace>,
        settings: Settings,
    ) -> Result<Self> {
        let compute = settings.compute.profile(users)?;
        let scenario = Self {
            users,
            videos,
            traces: traces.into_iter().map(Arc::new).collect(),
            compute,
            settings,
        };
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn validate(&self) -> Result<()> {
        let s = &self.settings;
        if self.users == 0 {
            return Err(Error::Config("scenario needs at least one user".into()));
        }
        if s.history == 0 || s.future_window == 0 {
            return Err(Error::Config(
                "history and future_window must be at least 1".into(),
            ));
        }
        if self.videos.is_empty() || self.traces.is_empty() {
            return Err(Error::Config(
                "scenario needs at least one video and one trace".into(),
            ));
        }
        if s.viewport_size.contains(&0) {
            return Err(Error::Config("viewport_size must be positive".into()));
        }
        if let Some(cap) = s.buffer_cap_s {
            if !(cap.is_finite() && cap > 0.0) {
                return Err(Error::Config(format!(
                    "buffer_cap_s must be positive, got {cap}"
                )));
            }
        }
        let n = s.normalization;
        if !(n.throughput_bps > 0.0 && n.segment_bits > 0.0) {
            return Err(Error::Config(
                "normalization scales must be positive".into(),
            ));
        }
        s.lagrangian.validate()?;
        self.compute.validate()?;
        if self.compute.headsets.len() != self.users {
            return Err(Error::Config(
                "compute profile must list one headset per user".into(),
            ));
        }
        let layers = self.videos[0].manifest.num_layers;
        for v in &self.videos {
            let m = &v.manifest;
            m.validate()?;
            if m.num_layers != layers {
                return Err(Error::Config(format!(
                    "video {} has {} layers, expected {layers}: all videos must share the layer count",
                    m.video_id, m.num_layers
                )));
            }
            for vp in &v.viewports {
                vp.validate()?;
                if (vp.grid_h, vp.grid_v) != (m.grid_h, m.grid_v) {
                    return Err(Error::Config(format!(
                        "viewport trace grid does not match video {}",
                        m.video_id
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn num_layers(&self) -> usize {
        self.videos[0].manifest.num_layers
    }
}

impl ScenarioConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::parse(path, e))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::parse(path, e))?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    /// Loads every referenced asset, resolving relative paths against `base`.
    pub fn resolve(&self, base: &Path) -> Result<Scenario> {
        let at = |p: &Path| {
            if p.is_absolute() {
                p.to_path_buf()
            } else {
                base.join(p)
            }
        };
        let videos = self
            .videos
            .iter()
            .map(|v| {
                let manifest = VideoManifest::load(&at(&v.manifest))?;
                let viewports = v
                    .viewports
                    .iter()
                    .map(|p| ViewportTrace::load(&at(p)))
                    .collect::<Result<Vec<_>>>()?;
                Ok(VideoAsset::new(manifest, viewports))
            })
            .collect::<Result<Vec<_>>>()?;
        let traces = self
            .traces
            .iter()
            .map(|p| ThroughputTrace::load(&at(p)))
            .collect::<Result<Vec<_>>>()?;
        Scenario::new(self.users, videos, traces, self.settings.clone())
    }
}

/// Reads a scenario file and all assets it points at.
pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let config = ScenarioConfig::load(path)?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    config.resolve(base)
}
