//! Synthetic asset sets: manifests, viewport walks and throughput traces,
//! optionally written to disk together with a scenario file.

use std::path::{Path, PathBuf};

use crate::env::{Scenario, ScenarioConfig, Settings, VideoAsset, VideoRef};
use crate::network::{SyntheticTrace, ThroughputTrace};
use crate::rng::{self, Stream};
use crate::video::{SyntheticVideo, VideoManifest, ViewportTrace};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct AssetSpec {
    pub videos: usize,
    pub traces: usize,
    /// Viewport traces generated per video; zero leaves viewports to the
    /// environment's own random walk.
    pub viewports_per_video: usize,
    pub viewport_size: [usize; 2],
    pub video: SyntheticVideo,
    pub trace: SyntheticTrace,
}

impl Default for AssetSpec {
    fn default() -> Self {
        Self {
            videos: 9,
            traces: 8,
            viewports_per_video: 6,
            viewport_size: [3, 3],
            video: SyntheticVideo::default(),
            trace: SyntheticTrace::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Assets {
    pub videos: Vec<(VideoManifest, Vec<ViewportTrace>)>,
    pub traces: Vec<ThroughputTrace>,
}

impl AssetSpec {
    pub fn generate(&self, seed: u64) -> Result<Assets> {
        if self.videos == 0 || self.traces == 0 {
            return Err(Error::Config(
                "need at least one video and one trace".into(),
            ));
        }
        let mut rng = rng::stream(seed, Stream::Synthetic);
        let mut videos = Vec::with_capacity(self.videos);
        for i in 0..self.videos {
            let manifest = self.video.generate(&format!("video_{i:02}"), &mut rng)?;
            let [w, h] = self.viewport_size;
            let viewports = (0..self.viewports_per_video)
                .map(|_| {
                    ViewportTrace::random_walk(
                        manifest.grid_h,
                        manifest.grid_v,
                        w,
                        h,
                        manifest.num_gops,
                        &mut rng,
                    )
                })
                .collect::<Result<Vec<_>>>()?;
            videos.push((manifest, viewports));
        }
        let traces = (0..self.traces)
            .map(|_| self.trace.generate(&mut rng))
            .collect::<Result<Vec<_>>>()?;
        Ok(Assets { videos, traces })
    }
}

impl Assets {
    pub fn into_scenario(self, users: usize, settings: Settings) -> Result<Scenario> {
        let videos = self
            .videos
            .into_iter()
            .map(|(m, v)| VideoAsset::new(m, v))
            .collect();
        Scenario::new(users, videos, self.traces, settings)
    }

    /// Writes `videos/`, `traces/` and `scenario.json` under `dir`; returns
    /// the scenario path.
    pub fn write(&self, dir: &Path, users: usize, settings: Settings) -> Result<PathBuf> {
        let video_dir = dir.join("videos");
        let trace_dir = dir.join("traces");
        for d in [&video_dir, &trace_dir] {
            std::fs::create_dir_all(d).map_err(|e| Error::io(d, e))?;
        }
        let mut refs = Vec::new();
        for (manifest, viewports) in &self.videos {
            let name = format!("{}.json", manifest.video_id);
            manifest.save(&video_dir.join(&name))?;
            let mut vp_refs = Vec::new();
            for (j, vp) in viewports.iter().enumerate() {
                let vp_name = format!("{}_viewport_{j:02}.json", manifest.video_id);
                vp.save(&video_dir.join(&vp_name))?;
                vp_refs.push(PathBuf::from("videos").join(vp_name));
            }
            refs.push(VideoRef {
                manifest: PathBuf::from("videos").join(name),
                viewports: vp_refs,
            });
        }
        let mut trace_refs = Vec::new();
        for (i, t) in self.traces.iter().enumerate() {
            let name = format!("trace_{i:02}.trace");
            t.save(&trace_dir.join(&name))?;
            trace_refs.push(PathBuf::from("traces").join(name));
        }
        let config = ScenarioConfig {
            users,
            videos: refs,
            traces: trace_refs,
            settings,
        };
        let path = dir.join("scenario.json");
        config.save(&path)?;
        Ok(path)
    }
}
