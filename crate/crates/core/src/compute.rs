//! Decode/render placement and the edge computing unit's resource split.

use serde::{Deserialize, Serialize};

use crate::video::VideoManifest;
use crate::{Error, Result};

pub const DEFAULT_ECU_DECODE_BPS: f64 = 7.5e9;
pub const DEFAULT_ECU_RENDER_BPS: f64 = 20e9;
pub const DEFAULT_HEADSET_DECODE_BPS: f64 = 0.2e9;
pub const DEFAULT_HEADSET_RENDER_BPS: f64 = 9.4e9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeadsetSpeeds {
    pub decode_bps: f64,
    pub render_bps: f64,
}

impl Default for HeadsetSpeeds {
    fn default() -> Self {
        Self {
            decode_bps: DEFAULT_HEADSET_DECODE_BPS,
            render_bps: DEFAULT_HEADSET_RENDER_BPS,
        }
    }
}

/// Processing speeds of every headset and of the shared ECU.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComputeProfile {
    pub headsets: Vec<HeadsetSpeeds>,
    pub ecu_decode_bps: f64,
    pub ecu_render_bps: f64,
}

impl ComputeProfile {
    pub fn uniform(
        users: usize,
        headset: HeadsetSpeeds,
        ecu_decode_bps: f64,
        ecu_render_bps: f64,
    ) -> Self {
        Self {
            headsets: vec![headset; users],
            ecu_decode_bps,
            ecu_render_bps,
        }
    }

    pub fn with_defaults(users: usize) -> Self {
        Self::uniform(
            users,
            HeadsetSpeeds::default(),
            DEFAULT_ECU_DECODE_BPS,
            DEFAULT_ECU_RENDER_BPS,
        )
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |x: f64| x.is_finite() && x > 0.0;
        if !positive(self.ecu_decode_bps) || !positive(self.ecu_render_bps) {
            return Err(Error::Config("ECU speeds must be strictly positive".into()));
        }
        if let Some(n) = self
            .headsets
            .iter()
            .position(|h| !positive(h.decode_bps) || !positive(h.render_bps))
        {
            return Err(Error::Config(format!(
                "headset {n} speeds must be strictly positive"
            )));
        }
        Ok(())
    }

    pub fn headset(&self, user: usize) -> Result<HeadsetSpeeds> {
        self.headsets.get(user).copied().ok_or(Error::Bounds {
            what: "user",
            index: user,
            limit: self.headsets.len(),
        })
    }
}

/// Where a GoP is decoded and rendered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Placement {
    EcuBoth,
    EcuDecodeHeadsetRender,
    HeadsetBoth,
}

impl Placement {
    pub const ALL: [Placement; 3] = [
        Placement::EcuBoth,
        Placement::EcuDecodeHeadsetRender,
        Placement::HeadsetBoth,
    ];

    /// Position of the active entry in the three-element one-hot vector.
    pub fn index(self) -> usize {
        match self {
            Placement::EcuBoth => 0,
            Placement::EcuDecodeHeadsetRender => 1,
            Placement::HeadsetBoth => 2,
        }
    }

    pub fn from_index(i: usize) -> Result<Self> {
        Self::ALL.get(i).copied().ok_or(Error::Bounds {
            what: "placement",
            index: i,
            limit: 3,
        })
    }

    pub fn decodes_on_ecu(self) -> bool {
        matches!(self, Placement::EcuBoth | Placement::EcuDecodeHeadsetRender)
    }

    pub fn renders_on_ecu(self) -> bool {
        matches!(self, Placement::EcuBoth)
    }

    pub fn name(self) -> &'static str {
        match self {
            Placement::EcuBoth => "ecu-both",
            Placement::EcuDecodeHeadsetRender => "ecu-decode-headset-render",
            Placement::HeadsetBoth => "headset-both",
        }
    }
}

impl std::fmt::Display for Placement {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Decoding complexity of a GoP equals its compressed size.
pub fn decode_workload(d: f64) -> f64 {
    d
}

/// Rendering complexity of a GoP equals its decoded size.
pub fn render_workload(manifest: &VideoManifest, d: f64) -> f64 {
    manifest.decoded_size(d)
}

/// One user's demand on the ECU for the current decision step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EcuRequest {
    pub user: usize,
    pub decode_bits: f64,
    pub render_bits: f64,
}

impl EcuRequest {
    /// Builds the request implied by `placement`, or `None` when the GoP
    /// never touches the ECU.
    pub fn for_placement(user: usize, placement: Placement, d: f64, beta: f64) -> Option<Self> {
        if !placement.decodes_on_ecu() {
            return None;
        }
        Some(EcuRequest {
            user,
            decode_bits: d,
            render_bits: if placement.renders_on_ecu() {
                d / beta
            } else {
                0.0
            },
        })
    }
}

/// Per-user ECU decode (`decode_bps`) and render (`render_bps`) shares.
#[derive(Debug, Clone, PartialEq)]
pub struct EcuAllocation {
    pub decode_bps: Vec<f64>,
    pub render_bps: Vec<f64>,
}

impl EcuAllocation {
    pub fn empty(users: usize) -> Self {
        Self {
            decode_bps: vec![0.0; users],
            render_bps: vec![0.0; users],
        }
    }
}

/// Splits ECU capacity among the users of this step in proportion to their
/// workloads. Users absent from `requests` (or with zero workload for a
/// stage) receive nothing for that stage; the rest share the full capacity.
pub fn ecu_allocate(
    profile: &ComputeProfile,
    users: usize,
    requests: &[EcuRequest],
) -> Result<EcuAllocation> {
    let mut alloc = EcuAllocation::empty(users);
    for r in requests {
        if r.user >= users {
            return Err(Error::Bounds {
                what: "user",
                index: r.user,
                limit: users,
            });
        }
        if !(r.decode_bits >= 0.0 && r.render_bits >= 0.0) {
            return Err(Error::Domain(format!(
                "user {}: workloads must be nonnegative",
                r.user
            )));
        }
    }
    split(
        profile.ecu_decode_bps,
        requests.iter().map(|r| (r.user, r.decode_bits)),
        &mut alloc.decode_bps,
    );
    split(
        profile.ecu_render_bps,
        requests.iter().map(|r| (r.user, r.render_bits)),
        &mut alloc.render_bps,
    );
    Ok(alloc)
}

fn split(capacity: f64, demand: impl Iterator<Item = (usize, f64)> + Clone, out: &mut [f64]) {
    let total: f64 = demand.clone().map(|(_, w)| w).sum();
    if total <= 0.0 {
        return;
    }
    for (user, w) in demand {
        out[user] += capacity * w / total;
    }
}

/// Decode, render and link payload for one GoP under a placement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StageTimes {
    pub decode_s: f64,
    pub render_s: f64,
    pub payload_bits: f64,
}

impl StageTimes {
    /// Time spent on the ECU before the payload can be sent.
    pub fn ecu_time(&self, placement: Placement) -> f64 {
        match placement {
            Placement::EcuBoth => self.decode_s + self.render_s,
            Placement::EcuDecodeHeadsetRender => self.decode_s,
            Placement::HeadsetBoth => 0.0,
        }
    }
}

pub fn stage_times(
    placement: Placement,
    manifest: &VideoManifest,
    d: f64,
    headset: HeadsetSpeeds,
    ecu_decode_share: f64,
    ecu_render_share: f64,
) -> Result<StageTimes> {
    if !(d >= 0.0) {
        return Err(Error::Domain(format!(
            "segment size must be nonnegative, got {d}"
        )));
    }
    if d == 0.0 {
        return Ok(StageTimes {
            decode_s: 0.0,
            render_s: 0.0,
            payload_bits: 0.0,
        });
    }
    let need = |share: f64, stage: &str| {
        if share > 0.0 {
            Ok(share)
        } else {
            Err(Error::Config(format!(
                "{placement} placement needs a positive ECU {stage} share"
            )))
        }
    };
    let decode_work = decode_workload(d);
    let render_work = render_workload(manifest, d);
    let times = match placement {
        Placement::EcuBoth => StageTimes {
            decode_s: decode_work / need(ecu_decode_share, "decode")?,
            render_s: render_work / need(ecu_render_share, "render")?,
            payload_bits: manifest.rendered_size(d),
        },
        Placement::EcuDecodeHeadsetRender => StageTimes {
            decode_s: decode_work / need(ecu_decode_share, "decode")?,
            render_s: render_work / headset.render_bps,
            payload_bits: manifest.decoded_size(d),
        },
        Placement::HeadsetBoth => StageTimes {
            decode_s: decode_work / headset.decode_bps,
            render_s: render_work / headset.render_bps,
            payload_bits: d,
        },
    };
    Ok(times)
}

/// Convenience wrapper that reads the shares for `user` out of `alloc`.
pub fn stage_times_for(
    placement: Placement,
    manifest: &VideoManifest,
    d: f64,
    profile: &ComputeProfile,
    alloc: &EcuAllocation,
    user: usize,
) -> Result<StageTimes> {
    let headset = profile.headset(user)?;
    let decode = alloc.decode_bps.get(user).copied().unwrap_or(0.0);
    let render = alloc.render_bps.get(user).copied().unwrap_or(0.0);
    stage_times(placement, manifest, d, headset, decode, render)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn manifest(alpha: f64, beta: f64) -> VideoManifest {
        VideoManifest {
            video_id: "c".into(),
            num_gops: 1,
            gop_duration_s: 1.0,
            grid_h: 1,
            grid_v: 1,
            num_layers: 1,
            beta,
            alpha,
            layer_rate_bps: vec![vec![vec![1e6]]],
            layer_mse: vec![vec![10.0]],
        }
    }

    #[test]
    fn workloads() {
        let m = manifest(2.0, 0.5);
        assert_eq!(decode_workload(0.0), 0.0);
        assert_eq!(decode_workload(50e6), 50e6);
        assert_eq!(render_workload(&m, 0.0), 0.0);
        assert_relative_eq!(render_workload(&m, 50e6), 100e6);
        assert_eq!(render_workload(&m, 50e6), m.decoded_size(50e6));
    }

    #[test]
    fn single_user_gets_everything() {
        let p = ComputeProfile::with_defaults(3);
        let reqs = [EcuRequest::for_placement(1, Placement::EcuBoth, 10e6, 0.5).unwrap()];
        let a = ecu_allocate(&p, 3, &reqs).unwrap();
        assert_eq!(a.decode_bps, vec![0.0, 7.5e9, 0.0]);
        assert_eq!(a.render_bps, vec![0.0, 20e9, 0.0]);
    }

    #[test]
    fn proportional_split() {
        let p = ComputeProfile::with_defaults(2);
        let reqs = [
            EcuRequest {
                user: 0,
                decode_bits: 2e6,
                render_bits: 0.0,
            },
            EcuRequest {
                user: 1,
                decode_bits: 1e6,
                render_bits: 0.0,
            },
        ];
        let a = ecu_allocate(&p, 2, &reqs).unwrap();
        assert_relative_eq!(a.decode_bps[0], 5.0e9, max_relative = 1e-12);
        assert_relative_eq!(a.decode_bps[1], 2.5e9, max_relative = 1e-12);
        assert_eq!(a.render_bps, vec![0.0, 0.0]);
    }

    #[test]
    fn headset_users_get_nothing_and_empty_requests_are_zero() {
        assert!(EcuRequest::for_placement(0, Placement::HeadsetBoth, 1e6, 0.5).is_none());
        let p = ComputeProfile::with_defaults(2);
        assert_eq!(ecu_allocate(&p, 2, &[]).unwrap(), EcuAllocation::empty(2));
        let r = EcuRequest::for_placement(0, Placement::EcuDecodeHeadsetRender, 1e6, 0.5).unwrap();
        assert_eq!(r.render_bits, 0.0);
    }

    #[test]
    fn headset_both_branch() {
        let m = manifest(2.0, 0.5);
        let t = stage_times(
            Placement::HeadsetBoth,
            &m,
            100e6,
            HeadsetSpeeds::default(),
            0.0,
            0.0,
        )
        .unwrap();
        assert_relative_eq!(t.decode_s, 0.5, max_relative = 1e-12);
        assert_relative_eq!(t.render_s, 200e6 / 9.4e9, max_relative = 1e-12);
        assert!((t.render_s - 0.02128).abs() < 1e-5);
        assert_eq!(t.payload_bits, 100e6);
    }

    #[test]
    fn ecu_both_branch() {
        let m = manifest(2.0, 0.5);
        let t = stage_times(
            Placement::EcuBoth,
            &m,
            100e6,
            HeadsetSpeeds::default(),
            7.5e9,
            20e9,
        )
        .unwrap();
        assert_relative_eq!(t.decode_s, 100e6 / 7.5e9, max_relative = 1e-12);
        assert!((t.decode_s - 0.01333).abs() < 1e-5);
        assert_relative_eq!(t.render_s, 0.01, max_relative = 1e-12);
        assert_relative_eq!(t.payload_bits, 400e6, max_relative = 1e-12);
    }

    #[test]
    fn zero_size_and_missing_share() {
        let m = manifest(2.0, 0.5);
        for p in Placement::ALL {
            let t = stage_times(p, &m, 0.0, HeadsetSpeeds::default(), 0.0, 0.0).unwrap();
            assert_eq!((t.decode_s, t.render_s, t.payload_bits), (0.0, 0.0, 0.0));
        }
        let err = stage_times(
            Placement::EcuBoth,
            &m,
            1e6,
            HeadsetSpeeds::default(),
            1e9,
            0.0,
        );
        assert!(matches!(err, Err(Error::Config(_))));
        let err = stage_times(
            Placement::EcuDecodeHeadsetRender,
            &m,
            1e6,
            HeadsetSpeeds::default(),
            0.0,
            0.0,
        );
        assert!(matches!(err, Err(Error::Config(_))));
    }

    #[test]
    fn placement_index_round_trip() {
        for p in Placement::ALL {
            assert_eq!(Placement::from_index(p.index()).unwrap(), p);
        }
        assert!(Placement::from_index(3).is_err());
    }

    proptest! {
        #[test]
        fn allocation_respects_capacity(work in prop::collection::vec((0.0f64..1e9, 0.0f64..1e9, any::<bool>()), 1..8)) {
            let users = work.len();
            let p = ComputeProfile::with_defaults(users);
            let reqs: Vec<EcuRequest> = work.iter().enumerate().filter(|(_, w)| w.2)
                .map(|(user, &(d, r, _))| EcuRequest { user, decode_bits: d, render_bits: r }).collect();
            let a = ecu_allocate(&p, users, &reqs).unwrap();
            let dec: f64 = a.decode_bps.iter().sum();
            let ren: f64 = a.render_bps.iter().sum();
            prop_assert!(dec <= p.ecu_decode_bps * (1.0 + 1e-12));
            prop_assert!(ren <= p.ecu_render_bps * (1.0 + 1e-12));
            if reqs.iter().any(|r| r.decode_bits > 0.0) {
                prop_assert!((dec - p.ecu_decode_bps).abs() <= 1e-12 * p.ecu_decode_bps);
            }
            for (user, w) in work.iter().enumerate() {
                if !w.2 {
                    prop_assert_eq!(a.decode_bps[user], 0.0);
                    prop_assert_eq!(a.render_bps[user], 0.0);
                }
            }
        }

        #[test]
        fn payload_ordering_and_homogeneity(d in 1.0f64..1e9, beta in 0.05f64..0.95, alpha in 2.0f64..6.0, k in 0.1f64..10.0) {
            let m = manifest(alpha, beta);
            let h = HeadsetSpeeds::default();
            let t = |p, d| stage_times(p, &m, d, h, 7.5e9, 20e9).unwrap();
            let hb = t(Placement::HeadsetBoth, d);
            let mid = t(Placement::EcuDecodeHeadsetRender, d);
            let eb = t(Placement::EcuBoth, d);
            prop_assert!(hb.payload_bits < mid.payload_bits && mid.payload_bits < eb.payload_bits);
            // ECU decode faster than the headset whenever its share is larger
            prop_assert!(eb.decode_s < hb.decode_s);
            for p in Placement::ALL {
                let a = t(p, d);
                let b = t(p, k * d);
                prop_assert!((b.decode_s - k * a.decode_s).abs() <= 1e-9 * b.decode_s);
                prop_assert!((b.render_s - k * a.render_s).abs() <= 1e-9 * b.render_s);
                prop_assert!((b.payload_bits - k * a.payload_bits).abs() <= 1e-9 * b.payload_bits);
            }
        }
    }
}
