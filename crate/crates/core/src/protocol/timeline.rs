use crate::error::{Error, Result};

/// One storage interval with constant bias field and gradient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub duration: f64,
    /// Bias field, G.
    pub bias_field: f64,
    /// dB/dz, G/m.
    pub gradient: f64,
}

/// Where the |1⟩ reservoir is when the coupling beam comes back on.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Reservoir {
    #[default]
    Present,
    /// Transferred to a spectator state and left there.
    Away,
    /// Transferred away and returned just before read-out.
    Restored,
    /// Only this fraction of the reservoir is back in |1⟩ at read-out.
    Partial(f64),
}

impl Reservoir {
    pub fn fraction(&self) -> f64 {
        match *self {
            Reservoir::Present | Reservoir::Restored => 1.0,
            Reservoir::Away => 0.0,
            Reservoir::Partial(f) => f,
        }
    }
}

/// Write at t = 0, store through contiguous segments, read at the end.
#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolTimeline {
    pub segments: Vec<Segment>,
    /// Interval between observable samples, s.
    pub sample_interval: f64,
    pub snapshot_times: Vec<f64>,
    pub reservoir: Reservoir,
}

impl ProtocolTimeline {
    /// A single segment at fixed field and gradient.
    pub fn constant(storage: f64, bias_field: f64, gradient: f64, sample_interval: f64) -> Self {
        Self {
            segments: vec![Segment { duration: storage, bias_field, gradient }],
            sample_interval,
            snapshot_times: Vec::new(),
            reservoir: Reservoir::Present,
        }
    }

    pub fn storage_duration(&self) -> f64 {
        self.segments.iter().map(|s| s.duration).sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.segments.is_empty() {
            return Err(Error::Timeline("no storage segments".into()));
        }
        for (i, s) in self.segments.iter().enumerate() {
            if !(s.duration >= 0.0 && s.duration.is_finite()) {
                return Err(Error::Timeline(format!("segment {i} has duration {}", s.duration)));
            }
            if !(s.bias_field.is_finite() && s.gradient.is_finite()) {
                return Err(Error::Timeline(format!("segment {i} has a non-finite field setting")));
            }
        }
        if !(self.sample_interval > 0.0) {
            return Err(Error::Timeline(format!("sample interval {} must be > 0", self.sample_interval)));
        }
        let end = self.storage_duration();
        for &t in &self.snapshot_times {
            if !(0.0..=end).contains(&t) {
                return Err(Error::Timeline(format!("snapshot time {t} s outside storage [0, {end}] s")));
            }
        }
        if let Reservoir::Partial(f) = self.reservoir {
            if !(0.0..=1.0).contains(&f) {
                return Err(Error::Timeline(format!("reservoir fraction {f} outside [0, 1]")));
            }
        }
        Ok(())
    }

    /// The same schedule cut off (or extended in its last segment) so that
    /// storage lasts exactly `storage`.
    pub fn with_storage(&self, storage: f64) -> Self {
        let mut out = self.clone();
        out.segments.clear();
        let mut remaining = storage;
        for (i, s) in self.segments.iter().enumerate() {
            let last = i + 1 == self.segments.len();
            let d = if last { remaining } else { s.duration.min(remaining) };
            out.segments.push(Segment { duration: d, ..*s });
            remaining -= d;
            if remaining <= 0.0 && !last {
                break;
            }
        }
        out.snapshot_times.retain(|&t| t <= storage);
        out
    }

    /// Replaces the bias field in every segment.
    pub fn with_bias_field(&self, bias_field: f64) -> Self {
        let mut out = self.clone();
        for s in &mut out.segments {
            s.bias_field = bias_field;
        }
        out
    }

    pub fn with_gradient(&self, gradient: f64) -> Self {
        let mut out = self.clone();
        for s in &mut out.segments {
            s.gradient = gradient;
        }
        out
    }
}

/// Step counts per segment for a time step `dt`.
pub(crate) fn segment_steps(segments: &[Segment], dt: f64) -> Vec<u64> {
    segments.iter().map(|s| (s.duration / dt).round() as u64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_phase() -> ProtocolTimeline {
        ProtocolTimeline {
            segments: vec![
                Segment { duration: 0.05, bias_field: 132.4, gradient: 0.0 },
                Segment { duration: 0.2, bias_field: 132.4, gradient: 20.0 },
            ],
            sample_interval: 0.01,
            snapshot_times: vec![0.0, 0.1, 0.25],
            reservoir: Reservoir::Present,
        }
    }

    #[test]
    fn validation() {
        assert!(two_phase().validate().is_ok());
        let mut t = two_phase();
        t.segments[0].duration = -1.0;
        assert!(t.validate().is_err());
        let mut t = two_phase();
        t.snapshot_times.push(0.3);
        assert!(t.validate().is_err());
        let mut t = two_phase();
        t.reservoir = Reservoir::Partial(1.5);
        assert!(t.validate().is_err());
    }

    #[test]
    fn truncation_and_extension() {
        let t = two_phase();
        let short = t.with_storage(0.03);
        assert_eq!(short.segments.len(), 1);
        assert!((short.storage_duration() - 0.03).abs() < 1e-15);
        assert_eq!(short.snapshot_times, vec![0.0]);
        let long = t.with_storage(1.0);
        assert_eq!(long.segments.len(), 2);
        assert!((long.segments[1].duration - 0.95).abs() < 1e-12);
        assert_eq!(segment_steps(&long.segments, 1e-5), vec![5000, 95000]);
    }

    #[test]
    fn reservoir_fractions() {
        assert_eq!(Reservoir::Away.fraction(), 0.0);
        assert_eq!(Reservoir::Restored.fraction(), Reservoir::Present.fraction());
        assert_eq!(Reservoir::Partial(0.3).fraction(), 0.3);
    }
}
