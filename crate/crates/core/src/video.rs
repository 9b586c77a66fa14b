//! Multi-layer tiled 360° video.
//!
//! A video is a sequence of GoPs of fixed duration. Every panorama frame is
//! cut into a `grid_h × grid_v` tile grid and every tile is coded as a base
//! layer plus enhancement layers. Rates are stored *per layer increment*: the
//! bitrate of a tile streamed with `k` layers is the sum of its first `k`
//! entries. Distortion is tracked per GoP and layer count.
//!
//! Tiles are indexed row-major: `tile = row * grid_h + col`.

use std::collections::BTreeSet;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Peak pixel value for 8-bit video.
const PEAK: f64 = 255.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoManifest {
    pub video_id: String,
    pub num_gops: usize,
    pub gop_duration_s: f64,
    pub grid_h: usize,
    pub grid_v: usize,
    pub num_layers: usize,
    /// Compression reduction factor, decoded size is `d / beta`.
    pub beta: f64,
    /// Rendering expansion factor, rendered size is `alpha * d / beta`.
    pub alpha: f64,
    /// `[gop][tile][layer]` incremental bitrate in bits/second.
    pub layer_rate_bps: Vec<Vec<Vec<f64>>>,
    /// `[gop][layer]` mean squared error when streaming `layer + 1` layers.
    pub layer_mse: Vec<Vec<f64>>,
}

/// Number of layers streamed for one GoP, `1` meaning base layer only.
///
/// This is the canonical form of the one-hot layer vector: position
/// `count - 1` is the active entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LayerSelection(usize);

impl LayerSelection {
    pub const BASE: LayerSelection = LayerSelection(1);

    pub fn new(count: usize, num_layers: usize) -> Result<Self> {
        if count == 0 || count > num_layers {
            return Err(Error::Bounds {
                what: "layer",
                index: count,
                limit: num_layers,
            });
        }
        Ok(LayerSelection(count))
    }

    pub fn count(self) -> usize {
        self.0
    }

    pub fn one_hot(self, num_layers: usize) -> Vec<f64> {
        let mut v = vec![0.0; num_layers];
        if let Some(slot) = v.get_mut(self.0 - 1) {
            *slot = 1.0;
        }
        v
    }
}

/// Tiles inside the user's field of view for one GoP.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Viewport(Vec<usize>);

impl Viewport {
    /// Builds a viewport, sorting and de-duplicating the tile indices.
    pub fn new(tiles: impl IntoIterator<Item = usize>, num_tiles: usize) -> Result<Self> {
        let set: BTreeSet<usize> = tiles.into_iter().collect();
        if set.is_empty() {
            return Err(Error::Config(
                "viewport must contain at least one tile".into(),
            ));
        }
        if let Some(&bad) = set.iter().find(|&&t| t >= num_tiles) {
            return Err(Error::Bounds {
                what: "tile",
                index: bad,
                limit: num_tiles,
            });
        }
        Ok(Viewport(set.into_iter().collect()))
    }

    pub fn tiles(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    fn check(&self, num_tiles: usize) -> Result<()> {
        if self.0.is_empty() {
            return Err(Error::Config(
                "viewport must contain at least one tile".into(),
            ));
        }
        match self.0.iter().find(|&&t| t >= num_tiles) {
            Some(&bad) => Err(Error::Bounds {
                what: "tile",
                index: bad,
                limit: num_tiles,
            }),
            None => Ok(()),
        }
    }
}

/// Per-GoP viewports for one user watching one video.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ViewportTrace {
    pub grid_h: usize,
    pub grid_v: usize,
    pub viewports: Vec<Viewport>,
}

impl ViewportTrace {
    pub fn validate(&self) -> Result<()> {
        if self.viewports.is_empty() {
            return Err(Error::Config("viewport trace has no GoPs".into()));
        }
        let n = self.grid_h * self.grid_v;
        self.viewports.iter().try_for_each(|v| v.check(n))
    }

    /// Viewport for `gop`, repeating the last entry if the trace is shorter
    /// than the video.
    pub fn at(&self, gop: usize) -> &Viewport {
        let i = gop.min(self.viewports.len() - 1);
        &self.viewports[i]
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let trace: ViewportTrace =
            serde_json::from_str(&text).map_err(|e| Error::parse(path, e))?;
        trace.validate().map_err(|e| Error::parse(path, e))?;
        Ok(trace)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string(self).map_err(|e| Error::parse(path, e))?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    /// Random walk of a `width × height` window over the grid. The window
    /// wraps around horizontally (yaw) and is clamped vertically (pitch).
    pub fn random_walk<R: Rng + ?Sized>(
        grid_h: usize,
        grid_v: usize,
        width: usize,
        height: usize,
        gops: usize,
        rng: &mut R,
    ) -> Result<Self> {
        if grid_h == 0 || grid_v == 0 || gops == 0 {
            return Err(Error::Config(
                "viewport walk needs a nonempty grid and at least one GoP".into(),
            ));
        }
        let width = width.clamp(1, grid_h);
        let height = height.clamp(1, grid_v);
        let max_row = grid_v - height;
        let mut col = rng.gen_range(0..grid_h);
        let mut row = rng.gen_range(0..=max_row);
        let mut viewports = Vec::with_capacity(gops);
        for _ in 0..gops {
            let tiles = (0..height)
                .flat_map(|dr| (0..width).map(move |dc| (row + dr) * grid_h + (col + dc) % grid_h));
            viewports.push(Viewport::new(tiles, grid_h * grid_v)?);
            let dc: i64 = rng.gen_range(-1..=1);
            let dr: i64 = rng.gen_range(-1..=1);
            col = (col as i64 + dc).rem_euclid(grid_h as i64) as usize;
            row = (row as i64 + dr).clamp(0, max_row as i64) as usize;
        }
        Ok(ViewportTrace {
            grid_h,
            grid_v,
            viewports,
        })
    }
}

impl VideoManifest {
    pub fn num_tiles(&self) -> usize {
        self.grid_h * self.grid_v
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(format!("video {}: {msg}", self.video_id)));
        if self.num_gops == 0 || self.grid_h == 0 || self.grid_v == 0 || self.num_layers == 0 {
            return fail("num_gops, grid and num_layers must be positive".into());
        }
        if !(self.gop_duration_s.is_finite() && self.gop_duration_s > 0.0) {
            return fail(format!(
                "gop_duration_s must be positive, got {}",
                self.gop_duration_s
            ));
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return fail(format!("beta must lie in (0, 1), got {}", self.beta));
        }
        if !(self.alpha.is_finite() && self.alpha >= 2.0) {
            return fail(format!("alpha must be at least 2, got {}", self.alpha));
        }
        if self.layer_rate_bps.len() != self.num_gops || self.layer_mse.len() != self.num_gops {
            return fail("rate and distortion tables must have one entry per GoP".into());
        }
        for (m, tiles) in self.layer_rate_bps.iter().enumerate() {
            if tiles.len() != self.num_tiles() {
                return fail(format!(
                    "gop {m}: expected {} tiles, got {}",
                    self.num_tiles(),
                    tiles.len()
                ));
            }
            for (t, layers) in tiles.iter().enumerate() {
                if layers.len() != self.num_layers {
                    return fail(format!(
                        "gop {m} tile {t}: expected {} layers",
                        self.num_layers
                    ));
                }
                if layers.iter().any(|r| !(r.is_finite() && *r >= 0.0)) {
                    return fail(format!(
                        "gop {m} tile {t}: rates must be finite and nonnegative"
                    ));
                }
                // cumulative rate strictly increasing in the layer count
                if layers[1..].iter().any(|r| *r <= 0.0) {
                    return fail(format!(
                        "gop {m} tile {t}: enhancement layers must add positive rate"
                    ));
                }
            }
        }
        for (m, mse) in self.layer_mse.iter().enumerate() {
            if mse.len() != self.num_layers {
                return fail(format!("gop {m}: expected {} MSE entries", self.num_layers));
            }
            if mse.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
                return fail(format!("gop {m}: MSE must be finite and positive"));
            }
            if mse.windows(2).any(|w| w[1] >= w[0]) {
                return fail(format!(
                    "gop {m}: MSE must strictly decrease with the layer count"
                ));
            }
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let manifest: VideoManifest =
            serde_json::from_str(&text).map_err(|e| Error::parse(path, e))?;
        manifest.validate().map_err(|e| Error::parse(path, e))?;
        Ok(manifest)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::parse(path, e))?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn selection(&self, count: usize) -> Result<LayerSelection> {
        LayerSelection::new(count, self.num_layers)
    }

    fn check_gop(&self, gop: usize) -> Result<()> {
        if gop >= self.num_gops {
            return Err(Error::Bounds {
                what: "gop",
                index: gop,
                limit: self.num_gops,
            });
        }
        Ok(())
    }

    fn check_selection(&self, sel: LayerSelection) -> Result<()> {
        if sel.count() > self.num_layers {
            return Err(Error::Bounds {
                what: "layer",
                index: sel.count(),
                limit: self.num_layers,
            });
        }
        Ok(())
    }

    /// Compressed size `d(e)` in bits of the viewport tiles of `gop` when
    /// streaming `sel` layers.
    pub fn segment_size(
        &self,
        gop: usize,
        viewport: &Viewport,
        sel: LayerSelection,
    ) -> Result<f64> {
        self.check_gop(gop)?;
        self.check_selection(sel)?;
        viewport.check(self.num_tiles())?;
        let tiles = &self.layer_rate_bps[gop];
        let rate: f64 = viewport
            .tiles()
            .iter()
            .map(|&t| tiles[t][..sel.count()].iter().sum::<f64>())
            .sum();
        Ok(self.gop_duration_s * rate)
    }

    /// Compressed sizes for every layer count `1..=L`.
    pub fn segment_sizes(&self, gop: usize, viewport: &Viewport) -> Result<Vec<f64>> {
        self.check_gop(gop)?;
        viewport.check(self.num_tiles())?;
        let tiles = &self.layer_rate_bps[gop];
        let mut cumulative = vec![0.0; self.num_layers];
        for &t in viewport.tiles() {
            let mut acc = 0.0;
            for (k, r) in tiles[t].iter().enumerate() {
                acc += r;
                cumulative[k] += acc;
            }
        }
        Ok(cumulative
            .into_iter()
            .map(|r| r * self.gop_duration_s)
            .collect())
    }

    pub fn decoded_size(&self, d: f64) -> f64 {
        d / self.beta
    }

    pub fn rendered_size(&self, d: f64) -> f64 {
        self.alpha * d / self.beta
    }

    /// PSNR in dB of `gop` streamed with `sel` layers.
    pub fn gop_quality(&self, gop: usize, sel: LayerSelection) -> Result<f64> {
        self.check_gop(gop)?;
        self.check_selection(sel)?;
        psnr(self.layer_mse[gop][sel.count() - 1])
    }
}

/// `10 log10(255² / mse)`.
pub fn psnr(mse: f64) -> Result<f64> {
    if !(mse > 0.0) {
        return Err(Error::Domain(format!("MSE must be positive, got {mse}")));
    }
    Ok(10.0 * (PEAK * PEAK / mse).log10())
}

/// Parameters of the synthetic manifest generator.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticVideo {
    pub num_gops: usize,
    pub num_layers: usize,
    pub grid_h: usize,
    pub grid_v: usize,
    pub gop_duration_s: f64,
    pub alpha: f64,
    pub beta: f64,
    /// Range of the per-tile base-layer rate, bits/second.
    pub base_rate_bps: (f64, f64),
    /// Range of each per-tile enhancement increment, bits/second.
    pub increment_bps: (f64, f64),
    /// Range of the base-layer MSE.
    pub base_mse: (f64, f64),
    /// Range of the per-layer geometric MSE decay ratio, each in (0, 1).
    pub mse_ratio: (f64, f64),
}

impl Default for SyntheticVideo {
    fn default() -> Self {
        Self {
            num_gops: 60,
            num_layers: 7,
            grid_h: 8,
            grid_v: 8,
            gop_duration_s: 1.0,
            alpha: 2.0,
            beta: 0.5,
            base_rate_bps: (1.0e6, 3.0e6),
            increment_bps: (0.5e6, 2.0e6),
            base_mse: (40.0, 120.0),
            mse_ratio: (0.6, 0.8),
        }
    }
}

impl SyntheticVideo {
    /// Generates a manifest whose cumulative rates and distortions are
    /// monotone by construction.
    pub fn generate<R: Rng + ?Sized>(&self, video_id: &str, rng: &mut R) -> Result<VideoManifest> {
        let span =
            |rng: &mut R, (lo, hi): (f64, f64)| if hi > lo { rng.gen_range(lo..hi) } else { lo };
        // per-tile spatial complexity is stable over time
        let complexity: Vec<f64> = (0..self.grid_h * self.grid_v)
            .map(|_| rng.gen_range(0.6..1.4))
            .collect();
        let mut layer_rate_bps = Vec::with_capacity(self.num_gops);
        let mut layer_mse = Vec::with_capacity(self.num_gops);
        for _ in 0..self.num_gops {
            let temporal = rng.gen_range(0.8..1.2);
            let tiles = complexity
                .iter()
                .map(|c| {
                    (0..self.num_layers)
                        .map(|k| {
                            let range = if k == 0 {
                                self.base_rate_bps
                            } else {
                                self.increment_bps
                            };
                            c * temporal * span(rng, range)
                        })
                        .collect()
                })
                .collect();
            layer_rate_bps.push(tiles);
            let mut mse = span(rng, self.base_mse);
            let ratio = span(rng, self.mse_ratio);
            layer_mse.push(
                (0..self.num_layers)
                    .map(|_| {
                        let current = mse;
                        mse *= ratio;
                        current
                    })
                    .collect(),
            );
        }
        let manifest = VideoManifest {
            video_id: video_id.to_string(),
            num_gops: self.num_gops,
            gop_duration_s: self.gop_duration_s,
            grid_h: self.grid_h,
            grid_v: self.grid_v,
            num_layers: self.num_layers,
            beta: self.beta,
            alpha: self.alpha,
            layer_rate_bps,
            layer_mse,
        };
        manifest.validate()?;
        Ok(manifest)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Manifest where tile `t` has a constant increment `rates[t][k]` in every GoP.
    fn manifest(grid: (usize, usize), rates: Vec<Vec<f64>>, dt: f64, gops: usize) -> VideoManifest {
        let layers = rates[0].len();
        VideoManifest {
            video_id: "t".into(),
            num_gops: gops,
            gop_duration_s: dt,
            grid_h: grid.0,
            grid_v: grid.1,
            num_layers: layers,
            beta: 0.5,
            alpha: 2.0,
            layer_rate_bps: vec![rates; gops],
            layer_mse: vec![(0..layers).map(|k| 100.0 / (k + 1) as f64).collect(); gops],
        }
    }

    #[test]
    fn single_tile_single_layer() {
        let m = manifest((1, 1), vec![vec![10e6]], 1.0, 1);
        m.validate().unwrap();
        let vp = Viewport::new([0], 1).unwrap();
        assert_eq!(m.segment_size(0, &vp, LayerSelection::BASE).unwrap(), 10e6);
    }

    #[test]
    fn two_tiles_cumulative_through_layer_two() {
        // cumulative through layer 2: tile 0 → 10 Mbps, tile 1 → 20 Mbps
        let m = manifest(
            (2, 1),
            vec![vec![4e6, 6e6, 1e6], vec![5e6, 15e6, 1e6]],
            2.0,
            1,
        );
        m.validate().unwrap();
        let vp = Viewport::new([0, 1], 2).unwrap();
        let sel = m.selection(2).unwrap();
        assert_relative_eq!(
            m.segment_size(0, &vp, sel).unwrap(),
            60e6,
            max_relative = 1e-12
        );
    }

    #[test]
    fn full_eight_by_eight_viewport_matches_independent_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = SyntheticVideo {
            num_gops: 3,
            ..Default::default()
        }
        .generate("v", &mut rng)
        .unwrap();
        let vp = Viewport::new(0..64, 64).unwrap();
        assert_eq!(vp.len(), 64);
        for k in 1..=m.num_layers {
            let mut expected = 0.0;
            for tile in 0..64 {
                for layer in 0..k {
                    expected += m.layer_rate_bps[1][tile][layer] * m.gop_duration_s;
                }
            }
            let got = m.segment_size(1, &vp, m.selection(k).unwrap()).unwrap();
            assert_relative_eq!(got, expected, max_relative = 1e-12);
        }
    }

    #[test]
    fn viewport_rejects_empty_and_out_of_range() {
        assert!(Viewport::new([], 4).is_err());
        assert!(matches!(Viewport::new([4], 4), Err(Error::Bounds { .. })));
        let vp = Viewport::new([3, 1, 3], 4).unwrap();
        assert_eq!(vp.tiles(), &[1, 3]);
    }

    #[test]
    fn segment_size_bounds() {
        let m = manifest((1, 1), vec![vec![1e6, 1e6]], 1.0, 2);
        let vp = Viewport::new([0], 1).unwrap();
        assert!(matches!(
            m.segment_size(2, &vp, LayerSelection::BASE),
            Err(Error::Bounds { what: "gop", .. })
        ));
        assert!(LayerSelection::new(3, 2).is_err());
        assert!(LayerSelection::new(0, 2).is_err());
    }

    #[test]
    fn size_algebra() {
        let m = manifest((1, 1), vec![vec![1e6]], 1.0, 1);
        assert_eq!(m.decoded_size(0.0), 0.0);
        assert_eq!(m.rendered_size(0.0), 0.0);
        assert_relative_eq!(m.decoded_size(50e6), 100e6);
        assert_relative_eq!(m.rendered_size(50e6), 200e6);
        assert_relative_eq!(m.rendered_size(50e6) / m.decoded_size(50e6), m.alpha);
        let near_one = VideoManifest {
            beta: 1.0 - 1e-12,
            ..m.clone()
        };
        assert!(near_one.decoded_size(50e6) >= 50e6);
    }

    #[test]
    fn psnr_values() {
        assert_eq!(psnr(255.0 * 255.0).unwrap(), 0.0);
        assert!((psnr(1.0).unwrap() - 48.1308).abs() < 1e-3);
        assert_relative_eq!(
            psnr(10.0).unwrap() - psnr(20.0).unwrap(),
            10.0 * 2f64.log10(),
            epsilon = 1e-12
        );
        assert!(matches!(psnr(0.0), Err(Error::Domain(_))));
        assert!(psnr(-1.0).is_err());
    }

    #[test]
    fn validation_catches_bad_tables() {
        let good = manifest((1, 1), vec![vec![1e6, 1e6]], 1.0, 1);
        good.validate().unwrap();
        let mut bad = good.clone();
        bad.layer_mse[0] = vec![10.0, 10.0];
        assert!(bad.validate().is_err());
        let mut bad = good.clone();
        bad.layer_rate_bps[0][0][1] = 0.0;
        assert!(bad.validate().is_err());
        let bad = VideoManifest {
            beta: 1.0,
            ..good.clone()
        };
        assert!(bad.validate().is_err());
        let bad = VideoManifest { alpha: 1.5, ..good };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn manifest_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = SyntheticVideo {
            num_gops: 4,
            num_layers: 3,
            ..Default::default()
        }
        .generate("v0", &mut rng)
        .unwrap();
        let path = dir.path().join("v0.json");
        m.save(&path).unwrap();
        assert_eq!(VideoManifest::load(&path).unwrap(), m);
    }

    #[test]
    fn random_walk_stays_on_grid() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let trace = ViewportTrace::random_walk(8, 8, 3, 3, 100, &mut rng).unwrap();
        trace.validate().unwrap();
        assert!(trace.viewports.iter().all(|v| v.len() == 9));
        assert_eq!(trace.at(500), trace.at(99));
    }

    fn arb_manifest() -> impl Strategy<Value = VideoManifest> {
        (
            1usize..4,
            1usize..4,
            1usize..5,
            1usize..4,
            0.1f64..3.0,
            any::<u64>(),
        )
            .prop_map(|(h, v, layers, gops, dt, seed)| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                SyntheticVideo {
                    num_gops: gops,
                    num_layers: layers,
                    grid_h: h,
                    grid_v: v,
                    gop_duration_s: dt,
                    ..Default::default()
                }
                .generate("p", &mut rng)
                .unwrap()
            })
    }

    proptest! {
        #[test]
        fn segment_size_matches_naive_loop(m in arb_manifest(), picks in prop::collection::vec(any::<prop::sample::Index>(), 1..6)) {
            let n = m.num_tiles();
            let vp = Viewport::new(picks.iter().map(|i| i.index(n)), n).unwrap();
            for gop in 0..m.num_gops {
                let all = m.segment_sizes(gop, &vp).unwrap();
                let mut prev = 0.0;
                let mut prev_q = f64::NEG_INFINITY;
                for k in 1..=m.num_layers {
                    let mut naive = 0.0;
                    for &t in vp.tiles() {
                        for layer in 0..k {
                            naive += m.layer_rate_bps[gop][t][layer];
                        }
                    }
                    naive *= m.gop_duration_s;
                    let sel = m.selection(k).unwrap();
                    let got = m.segment_size(gop, &vp, sel).unwrap();
                    prop_assert!((got - naive).abs() <= 1e-9 * naive);
                    prop_assert!((all[k - 1] - naive).abs() <= 1e-9 * naive);
                    prop_assert!(got > prev);
                    let q = m.gop_quality(gop, sel).unwrap();
                    prop_assert!(q > prev_q);
                    prev = got;
                    prev_q = q;
                }
            }
        }

        #[test]
        fn segment_size_is_additive_and_scales_with_duration(m in arb_manifest(), split in any::<prop::sample::Index>(), factor in 0.1f64..10.0) {
            let n = m.num_tiles();
            prop_assume!(n >= 2);
            let cut = 1 + split.index(n - 1);
            let left = Viewport::new(0..cut, n).unwrap();
            let right = Viewport::new(cut..n, n).unwrap();
            let whole = Viewport::new(0..n, n).unwrap();
            let sel = m.selection(m.num_layers).unwrap();
            let sum = m.segment_size(0, &left, sel).unwrap() + m.segment_size(0, &right, sel).unwrap();
            let total = m.segment_size(0, &whole, sel).unwrap();
            prop_assert!((sum - total).abs() <= 1e-9 * total);
            let stretched = VideoManifest { gop_duration_s: m.gop_duration_s * factor, ..m.clone() };
            let scaled = stretched.segment_size(0, &whole, sel).unwrap();
            prop_assert!((scaled - factor * total).abs() <= 1e-9 * scaled);
        }

        #[test]
        fn size_chain(d in 0.0f64..1e10, beta in 0.01f64..0.99, alpha in 2.0f64..8.0) {
            let m = VideoManifest { beta, alpha, ..manifest((1, 1), vec![vec![1.0]], 1.0, 1) };
            let dec = m.decoded_size(d);
            let rend = m.rendered_size(d);
            prop_assert!(d <= dec && dec <= rend);
            prop_assert!(rend >= 2.0 * dec * (1.0 - 1e-15));
            if d > 0.0 {
                prop_assert!(d < dec && dec < rend);
            }
        }
    }
}
