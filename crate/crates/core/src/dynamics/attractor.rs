use serde::{Deserialize, Serialize};

use super::Trajectory;
use crate::equilibrium::Equilibrium;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttractorOptions {
    /// Leading fraction of the run discarded as transient.
    pub transient_fraction: f64,
    /// Convergence threshold relative to `max(1, |eq|_inf)`.
    pub converge_tol: f64,
    /// Peak-to-peak amplitudes below this are not called periodic.
    pub amplitude_floor: f64,
    /// Allowed relative spread of peak heights.
    pub peak_spread: f64,
    pub min_peaks: usize,
    pub min_samples: usize,
    /// State component whose peaks are tracked.
    pub component: usize,
}

impl Default for AttractorOptions {
    fn default() -> Self {
        Self {
            transient_fraction: 0.5,
            converge_tol: 1e-4,
            amplitude_floor: 1e-3,
            peak_spread: 0.01,
            min_peaks: 5,
            min_samples: 100,
            component: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum AttractorVerdict {
    ConvergedToEquilibrium {
        deviation: f64,
    },
    Periodic {
        period: f64,
        /// Peak-to-peak amplitude of each state component over the window.
        amplitudes: Vec<f64>,
        /// Amplitude of the tracked component divided by its equilibrium value.
        relative_amplitude: f64,
        peaks: usize,
        peak_spread: f64,
        deviation: f64,
    },
    Undetermined {
        deviation: f64,
        reason: String,
    },
}

impl AttractorVerdict {
    pub fn name(&self) -> &'static str {
        match self {
            AttractorVerdict::ConvergedToEquilibrium { .. } => "ConvergedToEquilibrium",
            AttractorVerdict::Periodic { .. } => "Periodic",
            AttractorVerdict::Undetermined { .. } => "Undetermined",
        }
    }

    pub fn period(&self) -> Option<f64> {
        match self {
            AttractorVerdict::Periodic { period, .. } => Some(*period),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    pub t: f64,
    pub value: f64,
}

/// Local maxima of a sampled signal, refined by a parabola through the
/// three samples around each discrete maximum.
pub fn find_peaks(times: &[f64], values: &[f64]) -> Vec<Peak> {
    let mut peaks = Vec::new();
    for i in 1..values.len().saturating_sub(1) {
        if values[i] > values[i - 1] && values[i] >= values[i + 1] {
            peaks.push(refine(&times[i - 1..=i + 1], &values[i - 1..=i + 1]));
        }
    }
    peaks
}

fn refine(t: &[f64], y: &[f64]) -> Peak {
    let f01 = (y[1] - y[0]) / (t[1] - t[0]);
    let f12 = (y[2] - y[1]) / (t[2] - t[1]);
    let a = (f12 - f01) / (t[2] - t[0]);
    if !(a < 0.0) {
        return Peak { t: t[1], value: y[1] };
    }
    // y(s) = y0 + f01 (s - t0) + a (s - t0)(s - t1)
    let ts = 0.5 * (t[0] + t[1]) - f01 / (2.0 * a);
    let ts = ts.clamp(t[0], t[2]);
    let value = y[0] + f01 * (ts - t[0]) + a * (ts - t[0]) * (ts - t[1]);
    Peak { t: ts, value }
}

/// Classifies the long-time behaviour of `traj` against the equilibrium `eq`.
pub fn classify_attractor(traj: &Trajectory, eq: &Equilibrium, opts: &AttractorOptions) -> AttractorVerdict {
    let eq_state = eq.state();
    let dim = eq_state.len();
    let t0 = traj.times.first().copied().unwrap_or(0.0);
    let t1 = traj.times.last().copied().unwrap_or(0.0);
    let cut = t0 + opts.transient_fraction.clamp(0.0, 1.0) * (t1 - t0);
    let start = traj.times.partition_point(|t| *t < cut);
    let times = &traj.times[start..];
    let states = &traj.states[start..];

    let deviation = states
        .iter()
        .flat_map(|s| s.iter().zip(&eq_state).map(|(a, b)| (a - b).abs()))
        .fold(0.0, f64::max);

    if times.len() < opts.min_samples {
        return AttractorVerdict::Undetermined {
            deviation,
            reason: format!("only {} samples after the transient", times.len()),
        };
    }
    let scale = eq_state.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    if deviation < opts.converge_tol * scale {
        return AttractorVerdict::ConvergedToEquilibrium { deviation };
    }

    let c = opts.component.min(dim.saturating_sub(1));
    let signal: Vec<f64> = states.iter().map(|s| s[c]).collect();
    let mut amplitudes = vec![0.0; dim];
    for (k, amp) in amplitudes.iter_mut().enumerate() {
        let (lo, hi) = states.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| (lo.min(s[k]), hi.max(s[k])));
        *amp = hi - lo;
    }
    if amplitudes[c] < opts.amplitude_floor {
        return AttractorVerdict::Undetermined {
            deviation,
            reason: format!("amplitude {:e} below floor", amplitudes[c]),
        };
    }

    let peaks = find_peaks(times, &signal);
    if peaks.len() < opts.min_peaks {
        return AttractorVerdict::Undetermined { deviation, reason: format!("only {} peaks", peaks.len()) };
    }
    let (lo, hi) = peaks.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p.value), hi.max(p.value)));
    let spread = (hi - lo) / hi.abs().max(f64::MIN_POSITIVE);
    if spread >= opts.peak_spread {
        return AttractorVerdict::Undetermined { deviation, reason: format!("peak heights spread {spread:.3e}") };
    }
    let period = (peaks[peaks.len() - 1].t - peaks[0].t) / (peaks.len() - 1) as f64;
    let relative_amplitude = amplitudes[c] / eq_state[c].abs().max(f64::MIN_POSITIVE);
    AttractorVerdict::Periodic { period, amplitudes, relative_amplitude, peaks: peaks.len(), peak_spread: spread, deviation }
}
