use std::fmt;
use std::io::Write;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    Start,
    /// Zig-Zag flip of one velocity coordinate.
    Flip(usize),
    Bounce,
    Refresh,
    End,
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EventKind::Start => write!(f, "start"),
            EventKind::Flip(i) => write!(f, "flip:{}", i + 1),
            EventKind::Bounce => write!(f, "bounce"),
            EventKind::Refresh => write!(f, "refresh"),
            EventKind::End => write!(f, "end"),
        }
    }
}

/// Event-sparse piecewise-linear path. Entry `k` holds the event time, the
/// position there and the velocity used on `[t_k, t_{k+1})`. The final entry
/// is the horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct PdmpPath {
    d: usize,
    times: Vec<f64>,
    positions: Vec<f64>,
    velocities: Vec<f64>,
    kinds: Vec<EventKind>,
}

impl PdmpPath {
    pub(crate) fn from_raw(d: usize, times: Vec<f64>, positions: Vec<f64>, velocities: Vec<f64>, kinds: Vec<EventKind>) -> Self {
        Self { d, times, positions, velocities, kinds }
    }

    /// Builds a path from flattened per-event data, checking shapes, time
    /// ordering and continuity (relative tolerance `1e-12`).
    pub fn from_parts(
        d: usize,
        times: Vec<f64>,
        positions: Vec<f64>,
        velocities: Vec<f64>,
        kinds: Vec<EventKind>,
    ) -> Result<Self> {
        let m = times.len();
        if d == 0 || m < 2 || positions.len() != m * d || velocities.len() != m * d || kinds.len() != m {
            return Err(Error::InvalidArgument("inconsistent path dimensions".into()));
        }
        if times[0] != 0.0 || times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidArgument("event times must start at 0 and increase".into()));
        }
        let p = Self { d, times, positions, velocities, kinds };
        if p.max_continuity_gap() > 1e-12 {
            return Err(Error::InvalidArgument("positions are not continuous across events".into()));
        }
        Ok(p)
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().unwrap()
    }

    /// Event times including the start `0` and the horizon.
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn kinds(&self) -> &[EventKind] {
        &self.kinds
    }

    pub fn n_segments(&self) -> usize {
        self.times.len() - 1
    }

    /// Number of velocity-changing events.
    pub fn n_events(&self) -> usize {
        self.times.len() - 2
    }

    /// Position at the start of segment `k` and its velocity.
    pub fn segment(&self, k: usize) -> (&[f64], &[f64]) {
        let r = k * self.d..(k + 1) * self.d;
        (&self.positions[r.clone()], &self.velocities[r])
    }

    pub fn position(&self, k: usize) -> &[f64] {
        &self.positions[k * self.d..(k + 1) * self.d]
    }

    pub fn velocity(&self, k: usize) -> &[f64] {
        &self.velocities[k * self.d..(k + 1) * self.d]
    }

    fn segment_index(&self, t: f64) -> usize {
        let k = self.times.partition_point(|s| *s <= t);
        k.saturating_sub(1).min(self.n_segments() - 1)
    }

    pub fn position_at(&self, t: f64) -> Vec<f64> {
        let k = self.segment_index(t);
        let (x, v) = self.segment(k);
        let dt = t - self.times[k];
        x.iter().zip(v).map(|(x, v)| x + v * dt).collect()
    }

    pub fn velocity_at(&self, t: f64) -> Vec<f64> {
        self.velocity(self.segment_index(t)).to_vec()
    }

    /// Largest relative mismatch between a recorded position and the flow
    /// of the previous segment.
    pub fn max_continuity_gap(&self) -> f64 {
        let mut worst = 0.0f64;
        for k in 0..self.n_segments() {
            let (x, v) = self.segment(k);
            let dt = self.times[k + 1] - self.times[k];
            for (i, next) in self.position(k + 1).iter().enumerate() {
                let flow = x[i] + v[i] * dt;
                worst = worst.max((flow - next).abs() / (1.0 + next.abs()));
            }
        }
        worst
    }

    /// CSV with columns `t_event, x_1..x_d, v_1..v_d, event_kind`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["t_event".to_string()];
        header.extend((1..=self.d).map(|i| format!("x_{i}")));
        header.extend((1..=self.d).map(|i| format!("v_{i}")));
        header.push("event_kind".into());
        w.write_record(&header)?;
        for k in 0..self.times.len() {
            let mut row = vec![self.times[k].to_string()];
            row.extend(self.position(k).iter().map(|x| x.to_string()));
            row.extend(self.velocity(k).iter().map(|x| x.to_string()));
            row.push(self.kinds[k].to_string());
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}
