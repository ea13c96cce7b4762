use std::collections::VecDeque;

/// Relative spread below which a window counts as constant.
pub const ZERO_SPREAD: f64 = 1e-12;

/// Trailing-window standardization over the last `w` rows.
///
/// Row `t` maps to `(x_t - mean) / std` with the mean and population
/// standard deviation of rows `t-w+1..=t`. A standard deviation within
/// rounding of zero (relative to the window's largest magnitude) maps to 0.
/// Nothing is emitted until `w` rows have been seen.
#[derive(Debug, Clone)]
pub struct RollingNormalizer<const D: usize> {
    window: usize,
    buffer: VecDeque<[f64; D]>,
}

impl<const D: usize> RollingNormalizer<D> {
    pub fn new(window: usize) -> Self {
        assert!(window >= 1, "window must hold at least one row");
        RollingNormalizer {
            window,
            buffer: VecDeque::with_capacity(window),
        }
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn push(&mut self, row: [f64; D]) -> Option<[f64; D]> {
        if self.buffer.len() == self.window {
            self.buffer.pop_front();
        }
        self.buffer.push_back(row);
        if self.buffer.len() < self.window {
            return None;
        }
        let n = self.window as f64;
        let mut out = [0.0; D];
        for (k, slot) in out.iter_mut().enumerate() {
            let mean = self.buffer.iter().map(|r| r[k]).sum::<f64>() / n;
            let var = self
                .buffer
                .iter()
                .map(|r| {
                    let d = r[k] - mean;
                    d * d
                })
                .sum::<f64>()
                / n;
            let std = var.sqrt();
            let scale = self.buffer.iter().fold(0.0f64, |m, r| m.max(r[k].abs()));
            *slot = if std > ZERO_SPREAD * scale { (row[k] - mean) / std } else { 0.0 };
        }
        Some(out)
    }
}

/// Normalize a whole series; the output has `max(0, n - w + 1)` rows.
pub fn rolling_normalize<const D: usize>(rows: &[[f64; D]], window: usize) -> Vec<[f64; D]> {
    if rows.len() < window {
        log::debug!(
            "series of {} rows is shorter than the {}-row window",
            rows.len(),
            window
        );
    }
    let mut norm = RollingNormalizer::new(window);
    rows.iter().filter_map(|r| norm.push(*r)).collect()
}
