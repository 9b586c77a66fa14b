//! Throughput trace replay and exact transmission-time inversion.
//!
//! A trace is a list of `(timestamp, rate)` samples read piecewise-constant:
//! sample `i` applies on `[t_i, t_{i+1})`. Without wraparound the last rate
//! holds forever; with wraparound the trace repeats with a fixed period.

use std::io::Write;
use std::path::Path;

use rand::Rng;

use crate::{Error, Result};

pub const TRACE_HEADER: &str = "trace-version 1";

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Replay {
    /// Final sample's rate extends to +∞.
    Extend,
    /// The trace repeats every `period` seconds; must exceed the last timestamp.
    Wrap { period: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThroughputTrace {
    times: Vec<f64>,
    rates: Vec<f64>,
    replay: Replay,
    /// Bits delivered from 0 to `times[i]`.
    prefix_bits: Vec<f64>,
    /// Bits delivered over one full period (wraparound only).
    period_bits: f64,
}

impl ThroughputTrace {
    pub fn new(samples: Vec<(f64, f64)>, replay: Replay) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Config("trace needs at least one sample".into()));
        }
        if samples[0].0 != 0.0 {
            return Err(Error::Config("trace must start at t=0".into()));
        }
        if samples.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return Err(Error::Config(
                "trace timestamps must be strictly increasing".into(),
            ));
        }
        if samples
            .iter()
            .any(|&(t, r)| !(t.is_finite() && r.is_finite() && r >= 0.0))
        {
            return Err(Error::Config(
                "trace rates must be finite and nonnegative".into(),
            ));
        }
        if samples.iter().all(|&(_, r)| r == 0.0) {
            return Err(Error::Config("trace rates are all zero".into()));
        }
        let (times, rates): (Vec<f64>, Vec<f64>) = samples.into_iter().unzip();
        let last = *times.last().unwrap();
        if let Replay::Wrap { period } = replay {
            if !(period.is_finite() && period > last) {
                return Err(Error::Config(format!(
                    "wrap period {period} must exceed the last timestamp {last}"
                )));
            }
        }
        let mut prefix_bits = Vec::with_capacity(times.len());
        let mut acc = 0.0;
        prefix_bits.push(0.0);
        for i in 1..times.len() {
            acc += rates[i - 1] * (times[i] - times[i - 1]);
            prefix_bits.push(acc);
        }
        let period_bits = match replay {
            Replay::Wrap { period } => acc + rates[rates.len() - 1] * (period - last),
            Replay::Extend => f64::INFINITY,
        };
        if period_bits <= 0.0 {
            return Err(Error::Config(
                "trace delivers no bits over its period".into(),
            ));
        }
        Ok(Self {
            times,
            rates,
            replay,
            prefix_bits,
            period_bits,
        })
    }

    /// Wrapping trace whose final sample lasts as long as the one before it.
    /// A single-sample trace is constant and never needs to wrap.
    pub fn wrapping(samples: Vec<(f64, f64)>) -> Result<Self> {
        let replay = match samples.len() {
            0 | 1 => Replay::Extend,
            n => {
                let last = samples[n - 1].0;
                Replay::Wrap {
                    period: last + (last - samples[n - 2].0),
                }
            }
        };
        Self::new(samples, replay)
    }

    pub fn constant(rate_bps: f64) -> Result<Self> {
        Self::new(vec![(0.0, rate_bps)], Replay::Extend)
    }

    pub fn replay(&self) -> Replay {
        self.replay
    }

    pub fn samples(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.times.iter().copied().zip(self.rates.iter().copied())
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Mean rate over one period (or over the listed samples when extending).
    pub fn mean_rate(&self) -> f64 {
        match self.replay {
            Replay::Wrap { period } => self.period_bits / period,
            Replay::Extend if self.times.len() == 1 => self.rates[0],
            Replay::Extend => {
                let end = *self.times.last().unwrap();
                self.prefix_bits[self.times.len() - 1] / end
            }
        }
    }

    /// Index of the segment containing local time `t`.
    fn segment(&self, t: f64) -> usize {
        self.times.partition_point(|&ts| ts <= t).saturating_sub(1)
    }

    fn segment_end(&self, i: usize) -> f64 {
        match (self.times.get(i + 1), self.replay) {
            (Some(&next), _) => next,
            (None, Replay::Wrap { period }) => period,
            (None, Replay::Extend) => f64::INFINITY,
        }
    }

    /// Splits absolute time into (whole periods, local time).
    fn fold(&self, t: f64) -> (f64, f64) {
        match self.replay {
            Replay::Extend => (0.0, t),
            Replay::Wrap { period } => {
                let cycles = (t / period).floor();
                let local = (t - cycles * period).clamp(0.0, period);
                if local >= period {
                    (cycles + 1.0, 0.0)
                } else {
                    (cycles, local)
                }
            }
        }
    }

    pub fn instantaneous_rate(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return Err(Error::Domain(format!("time must be nonnegative, got {t}")));
        }
        let (_, local) = self.fold(t);
        Ok(self.rates[self.segment(local)])
    }

    /// Bits the channel delivers on `[0, t]`.
    pub fn cumulative_bits(&self, t: f64) -> f64 {
        let (cycles, local) = self.fold(t);
        let i = self.segment(local);
        let within = self.prefix_bits[i] + self.rates[i] * (local - self.times[i]);
        if cycles > 0.0 {
            cycles * self.period_bits + within
        } else {
            within
        }
    }

    pub fn bits_between(&self, t_s: f64, t_e: f64) -> f64 {
        self.cumulative_bits(t_e) - self.cumulative_bits(t_s)
    }

    /// Integral average of the rate over `[t_s, t_e]`.
    pub fn mean_throughput(&self, t_s: f64, t_e: f64) -> Result<f64> {
        if !(t_s >= 0.0 && t_e > t_s) {
            return Err(Error::Domain(format!(
                "need 0 <= t_s < t_e, got [{t_s}, {t_e}]"
            )));
        }
        Ok(self.bits_between(t_s, t_e) / (t_e - t_s))
    }

    /// Smallest `tau >= 0` such that the channel delivers `size` bits on
    /// `[t_start, t_start + tau]`.
    pub fn transmission_time(&self, t_start: f64, size: f64) -> Result<f64> {
        if !(t_start >= 0.0) {
            return Err(Error::Domain(format!(
                "start time must be nonnegative, got {t_start}"
            )));
        }
        if !(size >= 0.0 && size.is_finite()) {
            return Err(Error::Domain(format!(
                "size must be finite and nonnegative, got {size}"
            )));
        }
        if size == 0.0 {
            return Ok(0.0);
        }
        let (_, mut local) = self.fold(t_start);
        let mut remaining = size;
        let mut tau = 0.0;
        let mut i = self.segment(local);
        let mut skipped = false;
        loop {
            let end = self.segment_end(i);
            let rate = self.rates[i];
            let len = end - local;
            let capacity = rate * len;
            if rate > 0.0 && capacity >= remaining {
                return Ok(tau + remaining / rate);
            }
            if end.is_infinite() {
                return Err(Error::Unreachable {
                    remaining_bits: remaining,
                    at_s: t_start + tau,
                });
            }
            remaining -= capacity;
            tau += len;
            i += 1;
            local = end;
            if i == self.times.len() {
                // wrapped back to the start of the trace
                let Replay::Wrap { period } = self.replay else {
                    unreachable!("only wrapping traces have a finite last segment")
                };
                i = 0;
                local = 0.0;
                if !skipped && remaining > self.period_bits {
                    // keep at most one period of work so the walk ends within it
                    let cycles = (remaining / self.period_bits).ceil() - 1.0;
                    remaining -= cycles * self.period_bits;
                    tau += cycles * period;
                    skipped = true;
                }
            }
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|e| Error::parse(path, e))
    }

    /// Parses the `trace-version 1` text format. Traces read from text
    /// replay with wraparound.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        match lines.next() {
            Some(TRACE_HEADER) => {}
            other => {
                return Err(Error::Config(format!(
                    "expected `{TRACE_HEADER}` header, found {other:?}"
                )))
            }
        }
        let mut samples = Vec::new();
        for (n, line) in lines.enumerate() {
            let mut parts = line.split_whitespace();
            let pair = (parts.next(), parts.next(), parts.next());
            let (Some(t), Some(r), None) = pair else {
                return Err(Error::Config(format!(
                    "sample {n}: expected `timestamp_s rate_bps`, got `{line}`"
                )));
            };
            let t: f64 = t
                .parse()
                .map_err(|e| Error::Config(format!("sample {n}: bad timestamp: {e}")))?;
            let r: f64 = r
                .parse()
                .map_err(|e| Error::Config(format!("sample {n}: bad rate: {e}")))?;
            samples.push((t, r));
        }
        Self::wrapping(samples)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from(TRACE_HEADER);
        out.push('\n');
        for (t, r) in self.samples() {
            out.push_str(&format!("{t} {r}\n"));
        }
        out
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        file.write_all(self.to_text().as_bytes())
            .map_err(|e| Error::io(path, e))
    }
}

/// Column mapping for importing external CSV throughput logs.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceImport {
    /// Column holding timestamps; `None` means rows are `interval_s` apart.
    pub time_column: Option<String>,
    pub rate_column: String,
    /// Multiplier turning the time column into seconds.
    pub time_scale: f64,
    /// Multiplier turning the rate column into bits/second (1e6 for Mbps).
    pub rate_scale: f64,
    pub interval_s: f64,
}

impl Default for TraceImport {
    fn default() -> Self {
        Self {
            time_column: None,
            rate_column: "throughput_mbps".into(),
            time_scale: 1.0,
            rate_scale: 1e6,
            interval_s: 1.0,
        }
    }
}

impl TraceImport {
    /// Reads a headered CSV and rebases timestamps to start at zero.
    pub fn read<R: std::io::Read>(&self, reader: R) -> Result<ThroughputTrace> {
        let mut csv = csv::Reader::from_reader(reader);
        let headers = csv.headers()?.clone();
        let column = |name: &str| {
            headers
                .iter()
                .position(|h| h.trim() == name)
                .ok_or_else(|| Error::Config(format!("column `{name}` not found")))
        };
        let rate_col = column(&self.rate_column)?;
        let time_col = self.time_column.as_deref().map(column).transpose()?;
        let mut samples = Vec::new();
        for (n, record) in csv.records().enumerate() {
            let record = record?;
            let field = |i: usize| -> Result<f64> {
                record
                    .get(i)
                    .unwrap_or("")
                    .trim()
                    .parse()
                    .map_err(|e| Error::Config(format!("row {n}: {e}")))
            };
            let t = match time_col {
                Some(i) => field(i)? * self.time_scale,
                None => n as f64 * self.interval_s,
            };
            samples.push((t, field(rate_col)? * self.rate_scale));
        }
        if let Some(&(t0, _)) = samples.first() {
            samples.iter_mut().for_each(|s| s.0 -= t0);
        }
        ThroughputTrace::wrapping(samples)
    }
}

/// Parameters of the synthetic mmWave-like trace generator: a log-space
/// random walk with occasional blockage dips.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticTrace {
    pub duration_s: f64,
    pub interval_s: f64,
    pub mean_bps: f64,
    pub min_bps: f64,
    pub max_bps: f64,
    /// Standard step of the log-rate walk.
    pub volatility: f64,
    /// Per-sample probability of a blockage dip.
    pub blockage_prob: f64,
    /// Rate multiplier during a blockage.
    pub blockage_factor: f64,
}

impl Default for SyntheticTrace {
    fn default() -> Self {
        Self {
            duration_s: 300.0,
            interval_s: 1.0,
            mean_bps: 800e6,
            min_bps: 50e6,
            max_bps: 2e9,
            volatility: 0.15,
            blockage_prob: 0.05,
            blockage_factor: 0.1,
        }
    }
}

impl SyntheticTrace {
    pub fn generate<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<ThroughputTrace> {
        if !(self.interval_s > 0.0 && self.duration_s >= self.interval_s) {
            return Err(Error::Config(
                "synthetic trace needs duration >= interval > 0".into(),
            ));
        }
        let steps = (self.duration_s / self.interval_s).round() as usize;
        let (lo, hi, mean) = (self.min_bps.ln(), self.max_bps.ln(), self.mean_bps.ln());
        let mut level = mean;
        let samples = (0..steps)
            .map(|i| {
                // mean-reverting walk in log space
                let shock: f64 = rng.gen_range(-1.0..1.0) * self.volatility * 3f64.sqrt();
                level = (level + 0.1 * (mean - level) + shock).clamp(lo, hi);
                let mut rate = level.exp();
                if rng.gen_bool(self.blockage_prob.clamp(0.0, 1.0)) {
                    rate *= self.blockage_factor;
                }
                (
                    i as f64 * self.interval_s,
                    rate.max(self.min_bps * self.blockage_factor),
                )
            })
            .collect();
        ThroughputTrace::wrapping(samples)
    }
}
