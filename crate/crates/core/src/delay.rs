//! Fixed-capacity history of one scalar signal.

/// Ring buffer holding the most recent `capacity` samples of a signal.
///
/// Samples are mirrored into a buffer of twice the capacity so the history is
/// always available as one contiguous slice, newest sample first:
/// `history()[i]` is the sample pushed `i` steps ago. Unfilled slots are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct DelayLine {
    buf: Vec<f64>,
    head: usize,
    capacity: usize,
}

impl DelayLine {
    /// # Panics
    /// If `capacity` is zero.
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "delay line capacity must be positive");
        DelayLine {
            buf: vec![0.0; 2 * capacity],
            head: 0,
            capacity,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn push(&mut self, sample: f64) {
        self.head = if self.head == 0 {
            self.capacity - 1
        } else {
            self.head - 1
        };
        self.buf[self.head] = sample;
        self.buf[self.head + self.capacity] = sample;
    }

    /// The full history, newest first.
    #[inline]
    pub fn history(&self) -> &[f64] {
        &self.buf[self.head..self.head + self.capacity]
    }

    /// Sample pushed `lag` steps ago.
    #[inline]
    pub fn get(&self, lag: usize) -> f64 {
        self.history()[lag]
    }

    /// Inner product of the newest `taps.len()` samples with `taps`.
    #[inline]
    pub fn dot(&self, taps: &[f64]) -> f64 {
        dot(&self.history()[..taps.len()], taps)
    }

    pub fn reset(&mut self) {
        self.buf.iter_mut().for_each(|v| *v = 0.0);
        self.head = 0;
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub(crate) fn norm_sq(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn newest_first_with_wraparound() {
        let mut line = DelayLine::new(3);
        assert_eq!(line.history(), &[0.0, 0.0, 0.0]);
        for v in 1..=5 {
            line.push(v as f64);
        }
        assert_eq!(line.history(), &[5.0, 4.0, 3.0]);
        assert_eq!(line.get(2), 3.0);
        assert_eq!(line.dot(&[1.0, 10.0]), 45.0);
        line.reset();
        assert_eq!(line.history(), &[0.0; 3]);
    }

    #[test]
    fn capacity_one() {
        let mut line = DelayLine::new(1);
        line.push(2.0);
        line.push(7.0);
        assert_eq!(line.history(), &[7.0]);
    }
}
