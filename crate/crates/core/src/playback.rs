//! Per-user playback sessions: GoP preparation timing and buffer dynamics.
//!
//! Preparation is store-and-forward. Stages placed on the ECU run first, the
//! payload is then transmitted, and headset stages run after reception, so a
//! GoP's preparation time is always `D + P + T`. Once it lands, the buffer
//! gains one GoP duration; if that overfills the buffer the headset waits
//! before issuing the next request.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::compute::{stage_times_for, ComputeProfile, EcuAllocation, Placement};
use crate::network::ThroughputTrace;
use crate::video::{LayerSelection, VideoManifest, Viewport};
use crate::{Error, Result};

/// `max(0, x)`.
pub fn positive_part(x: f64) -> f64 {
    x.max(0.0)
}

/// Output of preparing one GoP, before buffer accounting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Preparation {
    pub d_bits: f64,
    pub payload_bits: f64,
    pub decode_s: f64,
    pub render_s: f64,
    pub transmit_s: f64,
    /// Mean link throughput while the payload was on the air.
    pub throughput_bps: f64,
}

impl Preparation {
    pub fn total_s(&self) -> f64 {
        self.decode_s + self.render_s + self.transmit_s
    }
}

/// Timing of one completed GoP step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepTiming {
    pub d_bits: f64,
    pub payload_bits: f64,
    pub decode_s: f64,
    pub render_s: f64,
    pub transmit_s: f64,
    pub wait_s: f64,
    pub stall_s: f64,
    pub throughput_bps: f64,
    /// Buffer level when the GoP was requested.
    pub buffer_s: f64,
}

impl StepTiming {
    pub fn preparation_s(&self) -> f64 {
        self.decode_s + self.render_s + self.transmit_s
    }
}

/// Sliding window of the last `k` values, oldest first.
#[derive(Debug, Clone, PartialEq)]
pub struct History {
    values: VecDeque<f64>,
    len: usize,
}

impl History {
    pub fn new(len: usize) -> Self {
        Self {
            values: VecDeque::with_capacity(len),
            len,
        }
    }

    pub fn push(&mut self, v: f64) {
        if self.values.len() == self.len {
            self.values.pop_front();
        }
        self.values.push_back(v);
    }

    pub fn last(&self) -> Option<f64> {
        self.values.back().copied()
    }

    /// Exactly `k` values, zero-padded in front until the window fills.
    pub fn padded(&self) -> impl Iterator<Item = f64> + '_ {
        std::iter::repeat_n(0.0, self.len - self.values.len()).chain(self.values.iter().copied())
    }
}

/// Playback statistics the agent observes.
#[derive(Debug, Clone, PartialEq)]
pub struct Telemetry {
    pub throughput_bps: History,
    pub decode_s: History,
    pub transmit_s: History,
    pub render_s: History,
    pub last_selection: Option<LayerSelection>,
}

impl Telemetry {
    pub fn new(k: usize) -> Self {
        Self {
            throughput_bps: History::new(k),
            decode_s: History::new(k),
            transmit_s: History::new(k),
            render_s: History::new(k),
            last_selection: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SessionState {
    pub user: usize,
    /// Request time of the current GoP.
    pub clock_s: f64,
    pub gop_cursor: usize,
    pub num_gops: usize,
    pub buffer_s: f64,
    pub buffer_cap_s: f64,
    pub cumulative_stall_s: f64,
    pub last_quality_db: f64,
    pub telemetry: Telemetry,
}

impl SessionState {
    /// Fresh session at `t = 0` with an empty buffer.
    pub fn new(
        user: usize,
        num_gops: usize,
        buffer_cap_s: f64,
        initial_quality_db: f64,
        history: usize,
    ) -> Self {
        Self {
            user,
            clock_s: 0.0,
            gop_cursor: 0,
            num_gops,
            buffer_s: 0.0,
            buffer_cap_s,
            cumulative_stall_s: 0.0,
            last_quality_db: initial_quality_db,
            telemetry: Telemetry::new(history),
        }
    }

    pub fn is_complete(&self) -> bool {
        self.gop_cursor >= self.num_gops
    }

    pub fn remaining_gops(&self) -> usize {
        self.num_gops.saturating_sub(self.gop_cursor)
    }

    /// Rebuffering incurred if the current GoP takes `prep_s` to prepare.
    pub fn rebuffer_time(&self, prep_s: f64) -> f64 {
        rebuffer_time(self.buffer_s, prep_s)
    }

    /// Plays out one GoP of `gop_duration_s` prepared in `prep`.
    pub fn step(&mut self, prep: &Preparation, gop_duration_s: f64) -> Result<StepTiming> {
        if self.is_complete() {
            return Err(Error::SessionComplete { user: self.user });
        }
        let (next, timing) = step_user(self.buffer_s, prep, gop_duration_s, self.buffer_cap_s);
        self.buffer_s = next;
        self.clock_s += prep.total_s() + timing.wait_s;
        self.cumulative_stall_s += timing.stall_s;
        self.gop_cursor += 1;
        let t = &mut self.telemetry;
        t.throughput_bps.push(prep.throughput_bps);
        t.decode_s.push(prep.decode_s);
        t.transmit_s.push(prep.transmit_s);
        t.render_s.push(prep.render_s);
        Ok(timing)
    }
}

/// `(prep - buffer)+`.
pub fn rebuffer_time(buffer_s: f64, prep_s: f64) -> f64 {
    positive_part(prep_s - buffer_s)
}

/// Buffer recursion for one GoP. Returns the buffer level at the next
/// request and the step's timing.
pub fn step_user(
    buffer_s: f64,
    prep: &Preparation,
    gop_duration_s: f64,
    buffer_cap_s: f64,
) -> (f64, StepTiming) {
    let busy = prep.total_s();
    let drained = positive_part(buffer_s - busy);
    let wait = positive_part(drained + gop_duration_s - buffer_cap_s);
    let next = positive_part(drained + gop_duration_s - wait);
    let timing = StepTiming {
        d_bits: prep.d_bits,
        payload_bits: prep.payload_bits,
        decode_s: prep.decode_s,
        render_s: prep.render_s,
        transmit_s: prep.transmit_s,
        wait_s: wait,
        stall_s: rebuffer_time(buffer_s, busy),
        throughput_bps: prep.throughput_bps,
        buffer_s,
    };
    (next, timing)
}

/// Everything needed to prepare one user's GoP.
#[derive(Debug, Clone, Copy)]
pub struct GopRequest<'a> {
    pub manifest: &'a VideoManifest,
    pub viewport: &'a Viewport,
    pub trace: &'a ThroughputTrace,
    pub placement: Placement,
    pub selection: LayerSelection,
}

/// Computes the decode/render/transmit durations of the session's current
/// GoP. The link is read starting at the request clock plus any ECU time.
pub fn prepare_gop(
    state: &SessionState,
    req: GopRequest<'_>,
    profile: &ComputeProfile,
    alloc: &EcuAllocation,
) -> Result<Preparation> {
    if state.is_complete() {
        return Err(Error::SessionComplete { user: state.user });
    }
    let d = req
        .manifest
        .segment_size(state.gop_cursor, req.viewport, req.selection)?;
    prepare_size(state.clock_s, state.user, d, req, profile, alloc)
}

pub(crate) fn prepare_size(
    clock_s: f64,
    user: usize,
    d: f64,
    req: GopRequest<'_>,
    profile: &ComputeProfile,
    alloc: &EcuAllocation,
) -> Result<Preparation> {
    let stages = stage_times_for(req.placement, req.manifest, d, profile, alloc, user)?;
    let transmit_start = clock_s + stages.ecu_time(req.placement);
    let transmit_s = req
        .trace
        .transmission_time(transmit_start, stages.payload_bits)?;
    let throughput_bps = if transmit_s > 0.0 {
        stages.payload_bits / transmit_s
    } else {
        req.trace.instantaneous_rate(transmit_start)?
    };
    Ok(Preparation {
        d_bits: d,
        payload_bits: stages.payload_bits,
        decode_s: stages.decode_s,
        render_s: stages.render_s,
        transmit_s,
        throughput_bps,
    })
}

/// One row of the per-step telemetry CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TelemetryRow {
    pub user: usize,
    pub m: usize,
    pub placement: Placement,
    pub layers: usize,
    pub d_bits: f64,
    pub payload_bits: f64,
    #[serde(rename = "D_s")]
    pub decode_s: f64,
    #[serde(rename = "P_s")]
    pub render_s: f64,
    #[serde(rename = "T_s")]
    pub transmit_s: f64,
    pub wait_s: f64,
    pub stall_s: f64,
    pub buffer_s: f64,
    pub psnr_db: f64,
}

impl TelemetryRow {
    pub fn new(
        user: usize,
        m: usize,
        placement: Placement,
        layers: usize,
        t: &StepTiming,
        psnr_db: f64,
    ) -> Self {
        Self {
            user,
            m,
            placement,
            layers,
            d_bits: t.d_bits,
            payload_bits: t.payload_bits,
            decode_s: t.decode_s,
            render_s: t.render_s,
            transmit_s: t.transmit_s,
            wait_s: t.wait_s,
            stall_s: t.stall_s,
            buffer_s: t.buffer_s,
            psnr_db,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compute::{ecu_allocate, EcuRequest};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn prep(total: f64) -> Preparation {
        Preparation {
            d_bits: 1.0,
            payload_bits: 1.0,
            decode_s: total * 0.25,
            render_s: total * 0.25,
            transmit_s: total * 0.5,
            throughput_bps: 1.0,
        }
    }

    #[test]
    fn steady_buffer() {
        let (b, t) = step_user(4.0, &prep(1.0), 1.0, 10.0);
        assert_eq!((t.stall_s, t.wait_s), (0.0, 0.0));
        assert_relative_eq!(b, 4.0);
    }

    #[test]
    fn stall_when_buffer_runs_dry() {
        let (b, t) = step_user(0.5, &prep(1.2), 1.0, 10.0);
        assert_relative_eq!(t.stall_s, 0.7, epsilon = 1e-12);
        assert_eq!(t.wait_s, 0.0);
        assert_relative_eq!(b, 1.0);
    }

    #[test]
    fn wait_absorbs_overflow() {
        let (b, t) = step_user(4.0, &prep(0.5), 1.0, 4.0);
        assert_relative_eq!(t.wait_s, 0.5);
        assert_relative_eq!(b, 4.0);
        assert_eq!(t.stall_s, 0.0);
    }

    #[test]
    fn rebuffer_time_cases() {
        assert_eq!(rebuffer_time(3.0, 2.0), 0.0);
        assert_eq!(rebuffer_time(0.0, 2.5), 2.5);
    }

    #[test]
    fn session_advances_clock_and_completes() {
        let mut s = SessionState::new(0, 2, 4.0, 30.0, 3);
        let a = s.step(&prep(1.5), 1.0).unwrap();
        assert_eq!(a.stall_s, 1.5);
        assert_relative_eq!(s.clock_s, 1.5);
        let b = s.step(&prep(0.5), 1.0).unwrap();
        assert_relative_eq!(s.clock_s, 2.0);
        assert_eq!(b.buffer_s, 1.0);
        assert!(s.is_complete());
        assert!(matches!(
            s.step(&prep(0.5), 1.0),
            Err(Error::SessionComplete { user: 0 })
        ));
        assert_eq!(
            s.telemetry.decode_s.padded().collect::<Vec<_>>(),
            vec![0.0, 0.375, 0.125]
        );
    }

    fn manifest() -> VideoManifest {
        // one tile, one layer, 100 Mbit per GoP
        VideoManifest {
            video_id: "p".into(),
            num_gops: 2,
            gop_duration_s: 1.0,
            grid_h: 1,
            grid_v: 1,
            num_layers: 1,
            beta: 0.5,
            alpha: 2.0,
            layer_rate_bps: vec![vec![vec![100e6]]; 2],
            layer_mse: vec![vec![20.0]; 2],
        }
    }

    #[test]
    fn prepare_headset_both() {
        let m = manifest();
        let vp = Viewport::new([0], 1).unwrap();
        let trace = ThroughputTrace::constant(1e9).unwrap();
        let profile = ComputeProfile::with_defaults(1);
        let s = SessionState::new(0, 2, 4.0, 0.0, 2);
        let req = GopRequest {
            manifest: &m,
            viewport: &vp,
            trace: &trace,
            placement: Placement::HeadsetBoth,
            selection: LayerSelection::BASE,
        };
        let p = prepare_gop(&s, req, &profile, &EcuAllocation::empty(1)).unwrap();
        assert_relative_eq!(p.transmit_s, 0.1, max_relative = 1e-12);
        assert_relative_eq!(p.decode_s, 0.5, max_relative = 1e-12);
        assert_relative_eq!(p.render_s, 200e6 / 9.4e9, max_relative = 1e-12);
        assert!((p.total_s() - 0.62128).abs() < 1e-5);
        assert_relative_eq!(p.throughput_bps, 1e9, max_relative = 1e-12);
    }

    #[test]
    fn prepare_ecu_both() {
        let m = manifest();
        let vp = Viewport::new([0], 1).unwrap();
        let trace = ThroughputTrace::constant(1e9).unwrap();
        let profile = ComputeProfile::with_defaults(1);
        let alloc = ecu_allocate(
            &profile,
            1,
            &[EcuRequest::for_placement(0, Placement::EcuBoth, 100e6, 0.5).unwrap()],
        )
        .unwrap();
        let s = SessionState::new(0, 2, 4.0, 0.0, 2);
        let req = GopRequest {
            manifest: &m,
            viewport: &vp,
            trace: &trace,
            placement: Placement::EcuBoth,
            selection: LayerSelection::BASE,
        };
        let p = prepare_gop(&s, req, &profile, &alloc).unwrap();
        assert_relative_eq!(p.payload_bits, 400e6, max_relative = 1e-12);
        assert_relative_eq!(p.transmit_s, 0.4, max_relative = 1e-12);
        assert!((p.total_s() - 0.42333).abs() < 1e-5);
        assert!(p.d_bits > 0.0);
    }

    #[test]
    fn transmission_starts_after_ecu_stages() {
        // link is dead for the first 0.5 s; ECU time shifts the transmit window
        let m = manifest();
        let vp = Viewport::new([0], 1).unwrap();
        let trace =
            ThroughputTrace::new(vec![(0.0, 0.0), (0.5, 1e9)], crate::network::Replay::Extend)
                .unwrap();
        let profile = ComputeProfile::with_defaults(1);
        let alloc = ecu_allocate(
            &profile,
            1,
            &[
                EcuRequest::for_placement(0, Placement::EcuDecodeHeadsetRender, 100e6, 0.5)
                    .unwrap(),
            ],
        )
        .unwrap();
        let s = SessionState::new(0, 2, 4.0, 0.0, 2);
        let req = GopRequest {
            manifest: &m,
            viewport: &vp,
            trace: &trace,
            placement: Placement::EcuDecodeHeadsetRender,
            selection: LayerSelection::BASE,
        };
        let p = prepare_gop(&s, req, &profile, &alloc).unwrap();
        let start = 100e6 / 7.5e9;
        assert_relative_eq!(p.transmit_s, 0.5 - start + 0.2, max_relative = 1e-12);
    }

    proptest! {
        #[test]
        fn buffer_stays_in_bounds(b0 in 0.0f64..4.0, totals in prop::collection::vec(0.0f64..5.0, 1..40), dt in 0.1f64..2.0, cap_gops in 1.0f64..6.0) {
            let cap = cap_gops * dt;
            let mut b = b0.min(cap);
            for total in totals {
                let (next, t) = step_user(b, &prep(total), dt, cap);
                prop_assert!(next >= 0.0 && next <= cap + 1e-12);
                prop_assert!(t.wait_s >= 0.0 && t.stall_s >= 0.0);
                prop_assert_eq!(t.stall_s, rebuffer_time(b, total));
                b = next;
            }
        }

        #[test]
        fn more_work_never_reduces_stall(b in 0.0f64..5.0, total in 0.0f64..5.0, extra in 0.0f64..5.0, stage in 0usize..3) {
            let base = prep(total);
            let mut worse = base;
            match stage {
                0 => worse.decode_s += extra,
                1 => worse.render_s += extra,
                _ => worse.transmit_s += extra,
            }
            let (_, a) = step_user(b, &base, 1.0, 4.0);
            let (_, c) = step_user(b, &worse, 1.0, 4.0);
            prop_assert!(c.stall_s >= a.stall_s);
        }
    }
}
