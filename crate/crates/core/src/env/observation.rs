//! Joint observation layout.
//!
//! Each user contributes one row of `4k + L + 1 + w + 1` features, in order:
//! past throughput, past decode time, past transmit time, past render time
//! (each `k` values, oldest first, zero-padded), the last layer selection as
//! a one-hot of length `L`, the buffer level, the base-layer sizes of the
//! next `w` GoPs at the current viewport, and the remaining GoP count.
//!
//! `data` holds normalized values and `scale` the matching reference scales:
//! `raw = data * scale` element-wise.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Layout {
    pub history: usize,
    pub layers: usize,
    pub future: usize,
}

impl Layout {
    pub fn width(&self) -> usize {
        4 * self.history + self.layers + 1 + self.future + 1
    }

    pub fn throughput(&self) -> std::ops::Range<usize> {
        0..self.history
    }

    pub fn decode(&self) -> std::ops::Range<usize> {
        self.history..2 * self.history
    }

    pub fn transmit(&self) -> std::ops::Range<usize> {
        2 * self.history..3 * self.history
    }

    pub fn render(&self) -> std::ops::Range<usize> {
        3 * self.history..4 * self.history
    }

    pub fn last_selection(&self) -> std::ops::Range<usize> {
        4 * self.history..4 * self.history + self.layers
    }

    pub fn buffer(&self) -> usize {
        4 * self.history + self.layers
    }

    pub fn future_sizes(&self) -> std::ops::Range<usize> {
        let start = self.buffer() + 1;
        start..start + self.future
    }

    pub fn remaining(&self) -> usize {
        self.width() - 1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    /// `[users, features]`.
    pub shape: [usize; 2],
    pub data: Vec<f64>,
    pub scale: Vec<f64>,
    pub layout: Layout,
}

impl Observation {
    pub fn zeros(users: usize, layout: Layout) -> Self {
        let n = users * layout.width();
        Self {
            shape: [users, layout.width()],
            data: vec![0.0; n],
            scale: vec![1.0; n],
            layout,
        }
    }

    pub fn users(&self) -> usize {
        self.shape[0]
    }

    pub fn row(&self, user: usize) -> &[f64] {
        let w = self.shape[1];
        &self.data[user * w..(user + 1) * w]
    }

    pub fn scale_row(&self, user: usize) -> &[f64] {
        let w = self.shape[1];
        &self.scale[user * w..(user + 1) * w]
    }

    /// Un-normalized value of one feature.
    pub fn raw(&self, user: usize, feature: usize) -> f64 {
        let i = user * self.shape[1] + feature;
        self.data[i] * self.scale[i]
    }

    pub fn denormalized(&self) -> Vec<f64> {
        self.data
            .iter()
            .zip(&self.scale)
            .map(|(d, s)| d * s)
            .collect()
    }

    /// Most recent past throughput, bits/second (0 before the first GoP).
    pub fn last_throughput(&self, user: usize) -> f64 {
        self.raw(user, self.layout.throughput().end - 1)
    }

    pub fn buffer_s(&self, user: usize) -> f64 {
        self.raw(user, self.layout.buffer())
    }

    pub fn remaining_gops(&self, user: usize) -> f64 {
        self.raw(user, self.layout.remaining())
    }

    pub(crate) fn set(&mut self, user: usize, feature: usize, raw: f64, scale: f64) {
        let i = user * self.shape[1] + feature;
        self.scale[i] = scale;
        self.data[i] = raw / scale;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_partitions_the_row() {
        let l = Layout {
            history: 8,
            layers: 7,
            future: 5,
        };
        assert_eq!(l.width(), 4 * 8 + 7 + 1 + 5 + 1);
        assert_eq!(l.render().end, l.last_selection().start);
        assert_eq!(l.last_selection().end, l.buffer());
        assert_eq!(l.future_sizes().start, l.buffer() + 1);
        assert_eq!(l.future_sizes().end, l.remaining());
    }

    #[test]
    fn set_and_raw_invert() {
        let l = Layout {
            history: 1,
            layers: 2,
            future: 1,
        };
        let mut o = Observation::zeros(2, l);
        o.set(1, l.buffer(), 3.0, 4.0);
        assert_eq!(o.row(1)[l.buffer()], 0.75);
        assert_eq!(o.buffer_s(1), 3.0);
        assert_eq!(o.denormalized()[l.width() + l.buffer()], 3.0);
    }
}
