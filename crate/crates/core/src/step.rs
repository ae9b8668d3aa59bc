//! Right-continuous step functions over integer-nanosecond time.
//!
//! A non-finite value marks a stretch where the function is undefined (for
//! example a size-imbalance fraction whose denominator is zero). Such
//! stretches are skipped by [`StepSeries::time_weighted_avg`], which
//! renormalizes by the defined time only.

use crate::ingest::Timestamp;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct StepSeries {
    times: Vec<Timestamp>,
    values: Vec<f64>,
}

impl StepSeries {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a series from time-ordered change points. Several points at one
    /// timestamp collapse to the last of them.
    pub fn from_points<I>(points: I) -> Self
    where
        I: IntoIterator<Item = (Timestamp, f64)>,
    {
        let mut s = StepSeries::new();
        for (t, v) in points {
            s.push(t, v);
        }
        s
    }

    /// Appends a change point. Panics if `t` precedes the last point.
    pub fn push(&mut self, t: Timestamp, v: f64) {
        match self.times.last() {
            Some(&last) if last == t => {
                *self.values.last_mut().unwrap() = v;
            }
            Some(&last) => {
                assert!(t > last, "change points out of order: {t} after {last}");
                self.times.push(t);
                self.values.push(v);
            }
            None => {
                self.times.push(t);
                self.values.push(v);
            }
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn points(&self) -> impl Iterator<Item = (Timestamp, f64)> + '_ {
        self.times.iter().copied().zip(self.values.iter().copied())
    }

    /// Index of the last change point at or before `t`.
    fn index_at(&self, t: Timestamp) -> Option<usize> {
        self.times.partition_point(|&x| x <= t).checked_sub(1)
    }

    /// Value of the latest change point at or before `t`; `None` before the
    /// first point or on an undefined stretch.
    pub fn last_prevailing(&self, t: Timestamp) -> Option<f64> {
        self.index_at(t)
            .map(|i| self.values[i])
            .filter(|v| v.is_finite())
    }

    /// State just before the end of `[t0, t1)`, i.e. the value prevailing at
    /// `t1 - 1ns`.
    pub fn last_in(&self, t1: Timestamp) -> Option<f64> {
        self.last_prevailing(t1 - 1)
    }

    /// Pieces `(start, end, value)` covering `[t0, t1)` where the series has
    /// a change point at or before the piece start.
    fn pieces(&self, t0: Timestamp, t1: Timestamp) -> impl Iterator<Item = (Timestamp, Timestamp, f64)> + '_ {
        let first = self.index_at(t0).unwrap_or(0);
        let end = self.times.partition_point(|&x| x < t1);
        (first..end).filter_map(move |i| {
            let start = self.times[i].max(t0);
            let stop = self.times.get(i + 1).map_or(t1, |&n| n.min(t1));
            (stop > start).then_some((start, stop, self.values[i]))
        })
    }

    /// Time-weighted mean over `[t0, t1)` of the defined part of the series.
    /// `None` when the series is undefined across the whole interval.
    pub fn time_weighted_avg(&self, t0: Timestamp, t1: Timestamp) -> Option<f64> {
        let mut weighted = 0.0;
        let mut duration: i64 = 0;
        for (start, stop, v) in self.pieces(t0, t1) {
            if v.is_finite() {
                let dt = stop - start;
                weighted += v * dt as f64;
                duration += dt;
            }
        }
        (duration > 0).then(|| weighted / duration as f64)
    }

    /// Minimum and maximum of the defined values taken on `[t0, t1)`,
    /// including the value prevailing at `t0`.
    pub fn range(&self, t0: Timestamp, t1: Timestamp) -> Option<(f64, f64)> {
        self.pieces(t0, t1)
            .map(|(_, _, v)| v)
            .filter(|v| v.is_finite())
            .fold(None, |acc, v| match acc {
                None => Some((v, v)),
                Some((lo, hi)) => Some((lo.min(v), hi.max(v))),
            })
    }
}
