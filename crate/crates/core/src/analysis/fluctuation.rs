use std::collections::VecDeque;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use super::experiments::run_replicates;
use crate::rng::Streams;
use crate::trajectory::{CumulativeIntegral, Functional, Trajectory};
use crate::{Error, Result};

/// `β_T = (2a_T [log(T/a_T) + log log T])^{-1/2}`.
pub fn beta_normalizer(t: f64, a: f64) -> Result<f64> {
    if !(t > std::f64::consts::E) {
        return Err(Error::DomainError(format!("log log T needs T > e, got T = {t}")));
    }
    if !(a > 0.0) {
        return Err(Error::InvalidArgument(format!("window must be positive, got {a}")));
    }
    if a > t {
        return Err(Error::WindowTooLarge { a, horizon: t });
    }
    Ok((2.0 * a * ((t / a).ln() + t.ln().ln())).powf(-0.5))
}

/// Admissible window starts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum WindowStarts {
    /// `t ∈ [0, T − a]` with full windows `[t, t + a]`.
    Restricted,
    /// `t ∈ [0, T]` with windows `[t, min(t + a, T)]`; the supremum is then
    /// non-decreasing in `a`.
    Unrestricted,
}

struct Cursor<'a> {
    times: &'a [f64],
    values: &'a [f64],
    k: usize,
}

impl Cursor<'_> {
    /// Linear interpolation at non-decreasing query points.
    fn eval(&mut self, x: f64) -> f64 {
        let last = self.times.len() - 1;
        while self.k + 1 < last && self.times[self.k + 1] <= x {
            self.k += 1;
        }
        let (t0, t1) = (self.times[self.k], self.times[self.k + 1]);
        let (v0, v1) = (self.values[self.k], self.values[self.k + 1]);
        if x <= t0 {
            return v0;
        }
        if x >= t1 {
            return v1;
        }
        v0 + (v1 - v0) * (x - t0) / (t1 - t0)
    }
}

/// `sup_t sup_{0≤u≤a} |F(t+u) − F(t)|` for the piecewise-linear interpolant of
/// `(times, values)`. Exact: the inner extrema are attained at breakpoints or
/// window ends, and the outer supremum at breakpoints or breakpoints shifted
/// by `−a`. Monotone deques keep the cost linear.
pub fn window_sup(times: &[f64], values: &[f64], a: f64, starts: WindowStarts) -> Result<f64> {
    let n = times.len();
    if n < 2 || values.len() != n {
        return Err(Error::InvalidArgument("need at least two breakpoints with values".into()));
    }
    let horizon = times[n - 1] - times[0];
    if !(a > 0.0) {
        return Err(Error::InvalidArgument(format!("window must be positive, got {a}")));
    }
    if a > horizon {
        return Err(Error::WindowTooLarge { a, horizon });
    }
    let t0 = times[0];
    let end = times[n - 1];
    let t_max = match starts {
        WindowStarts::Restricted => end - a,
        WindowStarts::Unrestricted => end,
    };
    // Candidate starts: breakpoints and breakpoints minus a, merged in order.
    let mut cand = Vec::with_capacity(2 * n + 2);
    cand.push(t0);
    let (mut i, mut j) = (0usize, 0usize);
    while i < n || j < n {
        let take_shifted = j < n && (i >= n || times[j] - a < times[i]);
        let c = if take_shifted {
            j += 1;
            times[j - 1] - a
        } else {
            i += 1;
            times[i - 1]
        };
        if c >= t0 && c <= t_max && c > *cand.last().unwrap() {
            cand.push(c);
        }
    }
    if t_max > *cand.last().unwrap() {
        cand.push(t_max);
    }
    let mut at_start = Cursor { times, values, k: 0 };
    let mut at_end = Cursor { times, values, k: 0 };
    let mut maxq: VecDeque<usize> = VecDeque::new();
    let mut minq: VecDeque<usize> = VecDeque::new();
    let mut next = 0usize;
    let mut best = 0.0f64;
    for &t in &cand {
        let e = (t + a).min(end);
        while next < n && times[next] <= e {
            while maxq.back().is_some_and(|&b| values[b] <= values[next]) {
                maxq.pop_back();
            }
            maxq.push_back(next);
            while minq.back().is_some_and(|&b| values[b] >= values[next]) {
                minq.pop_back();
            }
            minq.push_back(next);
            next += 1;
        }
        while maxq.front().is_some_and(|&b| times[b] < t) {
            maxq.pop_front();
        }
        while minq.front().is_some_and(|&b| times[b] < t) {
            minq.pop_front();
        }
        let ft = at_start.eval(t);
        let fe = at_end.eval(e);
        let mut hi = ft.max(fe);
        let mut lo = ft.min(fe);
        if let Some(&b) = maxq.front() {
            hi = hi.max(values[b]);
        }
        if let Some(&b) = minq.front() {
            lo = lo.min(values[b]);
        }
        best = best.max(hi - ft).max(ft - lo);
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FluctuationStat {
    pub a_t: f64,
    pub beta_t: f64,
    /// `sup_{0≤t≤T−a} sup_{0≤u≤a} |∫_t^{t+u} (f − μ)|`.
    pub raw_sup: f64,
    /// `β_T · raw_sup`.
    pub value: f64,
}

/// Windowed increment supremum of the centred additive functional. Exact on
/// jump paths; on PDMP and grid paths it uses the cumulative integral at the
/// breakpoints.
pub fn fluctuation_statistic(traj: &Trajectory, f: &Functional, a_t: f64, mean: f64) -> Result<FluctuationStat> {
    let horizon = traj.horizon();
    if a_t > horizon {
        return Err(Error::WindowTooLarge { a: a_t, horizon });
    }
    let beta_t = beta_normalizer(horizon, a_t)?;
    let cum = CumulativeIntegral::new(traj, f)?;
    let centred: Vec<f64> = cum.times().iter().zip(cum.values()).map(|(t, v)| v - mean * t).collect();
    let raw_sup = window_sup(cum.times(), &centred, a_t, WindowStarts::Restricted)?;
    Ok(FluctuationStat { a_t, beta_t, raw_sup, value: beta_t * raw_sup })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BrownianReport {
    pub horizon: f64,
    pub a_t: f64,
    pub step: f64,
    /// Normalised increment supremum per path.
    pub values: Vec<f64>,
    pub max: f64,
    /// `max − 1`.
    pub gap: f64,
    /// Values on the midpoint-refined grid, when requested.
    pub refined: Option<Vec<f64>>,
    /// Largest relative change under refinement.
    pub max_refinement_change: Option<f64>,
}

/// Normalised increment suprema of standard Brownian paths on a grid with
/// spacing `step`. With `refine`, each path is also refined by Brownian-bridge
/// midpoints to half the spacing and re-evaluated.
pub fn brownian_increment_check(
    horizon: f64,
    a_t: f64,
    reps: usize,
    step: f64,
    refine: bool,
    streams: &Streams,
) -> Result<BrownianReport> {
    let beta = beta_normalizer(horizon, a_t)?;
    if reps == 0 || !(step > 0.0) || step > a_t {
        return Err(Error::InvalidArgument("need reps >= 1 and 0 < step <= a_T".into()));
    }
    let m = (horizon / step).round() as usize;
    let per_path = run_replicates(streams, reps, |_, rng| {
        let sd = step.sqrt();
        let mut w = Vec::with_capacity(m + 1);
        w.push(0.0f64);
        for k in 0..m {
            let z: f64 = rng.sample(StandardNormal);
            w.push(w[k] + sd * z);
        }
        let times: Vec<f64> = (0..=m).map(|k| k as f64 * step).collect();
        let coarse = beta * window_sup(&times, &w, a_t, WindowStarts::Restricted)?;
        if !refine {
            return Ok((coarse, None));
        }
        let half = 0.5 * sd;
        let mut wf = Vec::with_capacity(2 * m + 1);
        for k in 0..m {
            let z: f64 = rng.sample(StandardNormal);
            wf.push(w[k]);
            wf.push(0.5 * (w[k] + w[k + 1]) + half * z);
        }
        wf.push(w[m]);
        let tf: Vec<f64> = (0..=2 * m).map(|k| k as f64 * 0.5 * step).collect();
        let fine = beta * window_sup(&tf, &wf, a_t, WindowStarts::Restricted)?;
        Ok((coarse, Some(fine)))
    })?;
    let values: Vec<f64> = per_path.iter().map(|p| p.0).collect();
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let (refined, change) = if refine {
        let r: Vec<f64> = per_path.iter().map(|p| p.1.expect("refined")).collect();
        let c = values.iter().zip(&r).map(|(a, b)| ((b - a) / a).abs()).fold(0.0, f64::max);
        (Some(r), Some(c))
    } else {
        (None, None)
    };
    Ok(BrownianReport { horizon, a_t, step, values, max, gap: max - 1.0, refined, max_refinement_change: change })
}
