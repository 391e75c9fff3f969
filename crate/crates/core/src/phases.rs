//! Behavioral phase classification of one-qubit trajectories.
//!
//! Features are computed on a late window of the state-history fidelity
//! series F_t = Tr[ρ_{t−a}ρ_t] and of the level populations.  A threshold
//! table maps features onto the five principal phases:
//!
//! | phase | rule |
//! |-------|------|
//! | I   fixed point            | F fixed; populations fixed on the memory scale |
//! | II  regular oscillation    | F fixed; populations oscillate on the memory scale |
//! | III irregular              | F oscillates widely without repeating structure |
//! | IV  structured modules     | F oscillates widely with a strong autocorrelation peak |
//! | V   bistable swaps         | F sits on the plateau F ≈ 1, broken by sharp dips |
//!
//! "On the memory scale" means after a moving average over one memory
//! distance a.  This is the τ = t/a resolution at which the phases are
//! defined; precession much faster than 1/a averages out.

use rustfft::{num_complex::Complex64 as FftC, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrator::Trajectory;
use crate::linalg;
use crate::qstate::StateHistory;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PhaseLabel {
    #[serde(rename = "I")]
    IFixedPoint,
    #[serde(rename = "II")]
    IIRegularOscillation,
    #[serde(rename = "III")]
    IIIIrregular,
    #[serde(rename = "IV")]
    IVStructuredModules,
    #[serde(rename = "V")]
    VBistableSwaps,
    Mixed(Vec<PhaseLabel>),
    Undetermined,
}

impl PhaseLabel {
    /// Short name: I … V, "I+V" for mixtures, "?" for undetermined.
    pub fn short(&self) -> String {
        match self {
            PhaseLabel::IFixedPoint => "I".into(),
            PhaseLabel::IIRegularOscillation => "II".into(),
            PhaseLabel::IIIIrregular => "III".into(),
            PhaseLabel::IVStructuredModules => "IV".into(),
            PhaseLabel::VBistableSwaps => "V".into(),
            PhaseLabel::Mixed(parts) => parts.iter().map(|p| p.short()).collect::<Vec<_>>().join("+"),
            PhaseLabel::Undetermined => "?".into(),
        }
    }

    /// Principal labels contained in this label.
    pub fn components(&self) -> Vec<PhaseLabel> {
        match self {
            PhaseLabel::Mixed(parts) => parts.clone(),
            PhaseLabel::Undetermined => Vec::new(),
            other => vec![other.clone()],
        }
    }
}

impl std::fmt::Display for PhaseLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.short())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseFeatures {
    pub window_start: f64,
    pub window_end: f64,
    pub f_mean: f64,
    pub f_variance: f64,
    pub f_min: f64,
    pub f_max: f64,
    /// Largest max − min of a level population over the window.
    pub population_amplitude: f64,
    /// Same after a moving average over one memory distance.
    pub coarse_population_amplitude: f64,
    /// Share of the (non-DC) power in the strongest frequency bin of F.
    pub dominant_power_fraction: f64,
    /// Normalized Shannon entropy of the F power spectrum, in [0, 1].
    pub spectral_entropy: f64,
    /// Fraction of the window with F above the plateau level.
    pub plateau_fraction: f64,
    /// Number of sharp dips below the plateau.
    pub swap_count: usize,
    pub swap_spacing_mean: f64,
    /// Relative standard deviation of inter-dip spacings.
    pub swap_spacing_rel_std: f64,
    /// Highest autocorrelation of F beyond its first zero crossing.
    pub module_score: f64,
}

impl PhaseFeatures {
    pub fn f_std(&self) -> f64 {
        self.f_variance.sqrt()
    }

    /// Column names matching [`PhaseFeatures::values`].
    pub fn columns() -> &'static [&'static str] {
        &[
            "f_mean",
            "f_variance",
            "f_min",
            "f_max",
            "population_amplitude",
            "coarse_population_amplitude",
            "dominant_power_fraction",
            "spectral_entropy",
            "plateau_fraction",
            "swap_count",
            "swap_spacing_mean",
            "swap_spacing_rel_std",
            "module_score",
        ]
    }

    pub fn values(&self) -> Vec<f64> {
        vec![
            self.f_mean,
            self.f_variance,
            self.f_min,
            self.f_max,
            self.population_amplitude,
            self.coarse_population_amplitude,
            self.dominant_power_fraction,
            self.spectral_entropy,
            self.plateau_fraction,
            self.swap_count as f64,
            self.swap_spacing_mean,
            self.swap_spacing_rel_std,
            self.module_score,
        ]
    }
}

/// Versioned decision thresholds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub version: u32,
    /// F counts as fixed when its standard deviation is at most this.
    pub fixed_f_std: f64,
    /// F oscillations count as large from this standard deviation on.
    pub large_f_std: f64,
    /// Memory-scale population amplitude separating I from II.
    pub coarse_amplitude: f64,
    /// Plateau level is 1 − plateau_tolerance.
    pub plateau_tolerance: f64,
    /// A dip must reach below 1 − dip_depth.
    pub dip_depth: f64,
    pub min_plateau_fraction: f64,
    pub min_swaps: usize,
    /// Autocorrelation peak separating IV from III.
    pub module_score: f64,
    /// Two rules whose scores are within this ratio produce a mixed label.
    pub mixed_ratio: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            version: 1,
            fixed_f_std: 0.01,
            large_f_std: 0.05,
            coarse_amplitude: 0.1,
            plateau_tolerance: 0.02,
            dip_depth: 0.05,
            min_plateau_fraction: 0.5,
            min_swaps: 2,
            module_score: 0.8,
            mixed_ratio: 1.5,
        }
    }
}

/// Raw series a classification works on: F_t and level populations, sampled
/// on a common grid with spacing dt, with the memory distance a.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSeries {
    pub t0: f64,
    pub dt: f64,
    pub a: f64,
    pub fidelity: Vec<f64>,
    pub populations: Vec<Vec<f64>>,
}

impl PhaseSeries {
    /// F_t and populations from the first grid index evolved under the
    /// history-dependent Hamiltonian (and where t − a is stored).
    pub fn from_trajectory(traj: &Trajectory, a: f64) -> Result<Self> {
        Self::from_history(&traj.history, a, traj.ec_start_index)
    }

    /// Series from grid index `max(start, steps(a))` of a stored history.
    pub fn from_history(h: &StateHistory, a: f64, start: usize) -> Result<Self> {
        let s = h.steps_for_distance(a)?;
        let start = s.max(start);
        if start >= h.len() {
            return Err(Error::WindowTooShort(format!("history ends before t = {}", h.time(start.min(h.len())))));
        }
        let fidelity = (start..h.len())
            .map(|k| linalg::trace_product(h.state(k - s).matrix(), h.state(k).matrix()).re)
            .collect();
        let populations =
            (0..h.dim()).map(|n| h.states()[start..].iter().map(|r| r.matrix()[(n, n)].re).collect()).collect();
        Ok(Self { t0: h.time(start), dt: h.dt(), a, fidelity, populations })
    }

    pub fn len(&self) -> usize {
        self.fidelity.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fidelity.is_empty()
    }

    pub fn end_time(&self) -> f64 {
        self.t0 + (self.len().saturating_sub(1)) as f64 * self.dt
    }

    /// Sub-series over sample indices [lo, hi).
    pub fn slice(&self, lo: usize, hi: usize) -> Self {
        Self {
            t0: self.t0 + lo as f64 * self.dt,
            dt: self.dt,
            a: self.a,
            fidelity: self.fidelity[lo..hi].to_vec(),
            populations: self.populations.iter().map(|p| p[lo..hi].to_vec()).collect(),
        }
    }
}

/// Features over the late window [late_fraction · horizon, horizon] of a
/// trajectory evolved under a history-dependent Hamiltonian.
pub fn extract_features(traj: &Trajectory, a: f64, late_fraction: f64) -> Result<PhaseFeatures> {
    extract_history_features(&traj.history, a, traj.ec_start_index, late_fraction, &Thresholds::default())
}

/// [`extract_features`] for a stored history whose history-dependent
/// segment starts at grid index `start`.
pub fn extract_history_features(
    history: &StateHistory,
    a: f64,
    start: usize,
    late_fraction: f64,
    th: &Thresholds,
) -> Result<PhaseFeatures> {
    if !(0.0..1.0).contains(&late_fraction) {
        return Err(Error::Config(format!("late_fraction {late_fraction} outside [0, 1)")));
    }
    let horizon = history.last_time();
    if horizon < a / (1.0 - late_fraction) {
        return Err(Error::WindowTooShort(format!("horizon {horizon} < a/(1 − late_fraction)")));
    }
    let series = PhaseSeries::from_history(history, a, start)?;
    let start_t = (late_fraction * horizon).max(series.t0);
    let lo = ((start_t - series.t0) / series.dt).round() as usize;
    series_features(&series.slice(lo.min(series.len()), series.len()), th)
}

/// Features of a whole series.
pub fn series_features(s: &PhaseSeries, th: &Thresholds) -> Result<PhaseFeatures> {
    let n = s.len();
    let mem = (s.a / s.dt).round().max(1.0) as usize;
    if n < 4 || n < mem + 2 {
        return Err(Error::WindowTooShort(format!("{n} samples for a memory of {mem} samples")));
    }
    let f = &s.fidelity;
    let mean = f.iter().sum::<f64>() / n as f64;
    let var = f.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n as f64;
    let f_min = f.iter().cloned().fold(f64::INFINITY, f64::min);
    let f_max = f.iter().cloned().fold(f64::NEG_INFINITY, f64::max);

    let spread = |v: &[f64]| v.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - v.iter().cloned().fold(f64::INFINITY, f64::min);
    let population_amplitude = s.populations.iter().map(|p| spread(p)).fold(0.0, f64::max);
    let coarse_population_amplitude = s.populations.iter().map(|p| spread(&moving_average(p, mem))).fold(0.0, f64::max);

    let (dominant_power_fraction, spectral_entropy) = spectrum_features(f, mean, var);

    let level = 1.0 - th.plateau_tolerance;
    let plateau_fraction = f.iter().filter(|&&x| x >= level).count() as f64 / n as f64;
    let dips = dip_times(f, level, 1.0 - th.dip_depth);
    let spacings: Vec<f64> = dips.windows(2).map(|w| (w[1] - w[0]) as f64 * s.dt).collect();
    let (swap_spacing_mean, swap_spacing_rel_std) = if spacings.is_empty() {
        (0.0, 0.0)
    } else {
        let m = spacings.iter().sum::<f64>() / spacings.len() as f64;
        let sd = (spacings.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / spacings.len() as f64).sqrt();
        (m, if m > 0.0 { sd / m } else { 0.0 })
    };

    Ok(PhaseFeatures {
        window_start: s.t0,
        window_end: s.end_time(),
        f_mean: mean,
        f_variance: var,
        f_min,
        f_max,
        population_amplitude,
        coarse_population_amplitude,
        dominant_power_fraction,
        spectral_entropy,
        plateau_fraction,
        swap_count: dips.len(),
        swap_spacing_mean,
        swap_spacing_rel_std,
        module_score: module_score(f, mean, var),
    })
}

/// Centered moving average over `w` samples (only full windows).
fn moving_average(x: &[f64], w: usize) -> Vec<f64> {
    if x.len() < w || w == 0 {
        return x.to_vec();
    }
    let mut out = Vec::with_capacity(x.len() - w + 1);
    let mut acc: f64 = x[..w].iter().sum();
    out.push(acc / w as f64);
    for i in w..x.len() {
        acc += x[i] - x[i - w];
        out.push(acc / w as f64);
    }
    out
}

fn spectrum_features(f: &[f64], mean: f64, var: f64) -> (f64, f64) {
    if var < 1e-14 {
        return (0.0, 0.0);
    }
    let n = f.len();
    let mut buf: Vec<FftC> = f.iter().map(|&x| FftC::new(x - mean, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let power: Vec<f64> = buf[1..=n / 2].iter().map(|z| z.norm_sqr()).collect();
    let total: f64 = power.iter().sum();
    if total <= 0.0 || power.len() < 2 {
        return (0.0, 0.0);
    }
    let dominant = power.iter().cloned().fold(0.0, f64::max) / total;
    let entropy = -power.iter().map(|p| p / total).filter(|&p| p > 0.0).map(|p| p * p.ln()).sum::<f64>();
    (dominant, entropy / (power.len() as f64).ln())
}

/// Sample indices of the minima of excursions below `level` that reach
/// below `depth`.
fn dip_times(f: &[f64], level: f64, depth: f64) -> Vec<usize> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < f.len() {
        if f[i] >= level {
            i += 1;
            continue;
        }
        let start = i;
        while i < f.len() && f[i] < level {
            i += 1;
        }
        // Excursions touching the window edges are incomplete.
        if start == 0 || i == f.len() {
            continue;
        }
        let (arg, min) = f[start..i].iter().enumerate().fold((0, f64::INFINITY), |acc, (k, &x)| if x < acc.1 { (k, x) } else { acc });
        if min < depth {
            out.push(start + arg);
        }
    }
    out
}

/// Largest autocorrelation beyond the first zero crossing, using an FFT.
fn module_score(f: &[f64], mean: f64, var: f64) -> f64 {
    if var < 1e-14 {
        return 0.0;
    }
    let n = f.len();
    let m = (2 * n).next_power_of_two();
    let mut buf: Vec<FftC> = f.iter().map(|&x| FftC::new(x - mean, 0.0)).chain(std::iter::repeat(FftC::new(0.0, 0.0))).take(m).collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(m).process(&mut buf);
    for z in buf.iter_mut() {
        *z = FftC::new(z.norm_sqr(), 0.0);
    }
    planner.plan_fft_inverse(m).process(&mut buf);
    let r0 = buf[0].re;
    let max_lag = n / 2;
    let r = |lag: usize| buf[lag].re / r0 * n as f64 / (n - lag) as f64;
    let mut lag = 1;
    while lag < max_lag && r(lag) > 0.0 {
        lag += 1;
    }
    (lag..max_lag).map(r).fold(f64::NEG_INFINITY, f64::max).max(0.0)
}

/// Map features onto a label with the given thresholds.
///
/// Each rule gets a score equal to its weakest margin (value over
/// threshold, inverted for upper bounds, capped at 10); rules with score
/// ≥ 1 fire.  The best-scoring rule wins unless the runner-up is within
/// `mixed_ratio`, in which case both are reported as a mixture.
pub fn classify(features: &PhaseFeatures, th: &Thresholds) -> PhaseLabel {
    let above = |v: f64, t: f64| if t <= 0.0 { 10.0 } else { (v / t).min(10.0) };
    let below = |v: f64, t: f64| if v <= 0.0 { 10.0 } else { (t / v).min(10.0) };
    let std = features.f_std();
    let no_swaps = if features.swap_count < th.min_swaps { 10.0 } else { 0.0 };
    let swaps = if features.swap_count >= th.min_swaps { 10.0 } else { 0.0 };
    let off_plateau = below(features.plateau_fraction.max(1e-12), th.min_plateau_fraction);

    let rules = [
        (PhaseLabel::IFixedPoint, [below(std, th.fixed_f_std), below(features.coarse_population_amplitude, th.coarse_amplitude), no_swaps]),
        (
            PhaseLabel::IIRegularOscillation,
            [below(std, th.fixed_f_std), above(features.coarse_population_amplitude, th.coarse_amplitude), no_swaps],
        ),
        (PhaseLabel::IIIIrregular, [above(std, th.large_f_std), below(features.module_score, th.module_score), off_plateau]),
        (PhaseLabel::IVStructuredModules, [above(std, th.large_f_std), above(features.module_score, th.module_score), off_plateau]),
        (PhaseLabel::VBistableSwaps, [above(features.plateau_fraction, th.min_plateau_fraction), swaps, 10.0]),
    ];
    let mut fired: Vec<(PhaseLabel, f64)> = rules
        .into_iter()
        .map(|(label, margins)| (label, margins.iter().cloned().fold(f64::INFINITY, f64::min)))
        .filter(|(_, s)| *s >= 1.0)
        .collect();
    fired.sort_by(|a, b| b.1.total_cmp(&a.1));
    match fired.len() {
        0 => PhaseLabel::Undetermined,
        1 => fired.remove(0).0,
        _ if fired[0].1 / fired[1].1 < th.mixed_ratio => {
            let mut parts: Vec<PhaseLabel> = fired.into_iter().take(2).map(|(l, _)| l).collect();
            parts.sort_by_key(rank);
            PhaseLabel::Mixed(parts)
        }
        _ => fired.remove(0).0,
    }
}

fn rank(l: &PhaseLabel) -> usize {
    match l {
        PhaseLabel::IFixedPoint => 1,
        PhaseLabel::IIRegularOscillation => 2,
        PhaseLabel::IIIIrregular => 3,
        PhaseLabel::IVStructuredModules => 4,
        PhaseLabel::VBistableSwaps => 5,
        _ => 9,
    }
}

/// A change of label at `time` from `from` to `to`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub time: f64,
    pub from: PhaseLabel,
    pub to: PhaseLabel,
}

/// Labels of consecutive non-overlapping windows of length `window`.
pub fn window_labels(s: &PhaseSeries, window: f64, th: &Thresholds) -> Result<Vec<(f64, PhaseLabel)>> {
    let w = (window / s.dt).round() as usize;
    if w == 0 || s.len() < 3 * w {
        return Err(Error::WindowTooShort(format!("series of {} samples needs ≥ 3 windows of {w}", s.len())));
    }
    (0..s.len() / w)
        .map(|j| {
            let part = s.slice(j * w, (j + 1) * w);
            Ok((part.t0, classify(&series_features(&part, th)?, th)))
        })
        .collect()
}

/// Change points where the window label changes and the new label holds
/// for at least two consecutive windows.
pub fn detect_transitions(traj: &Trajectory, a: f64, window: f64) -> Result<Vec<Transition>> {
    let series = PhaseSeries::from_trajectory(traj, a)?;
    detect_transitions_in(&series, window, &Thresholds::default())
}

pub fn detect_transitions_in(s: &PhaseSeries, window: f64, th: &Thresholds) -> Result<Vec<Transition>> {
    Ok(transitions_from_labels(&window_labels(s, window, th)?))
}

/// Two-window hysteresis over a label sequence.
pub fn transitions_from_labels(labels: &[(f64, PhaseLabel)]) -> Vec<Transition> {
    let mut out = Vec::new();
    let mut current: Option<PhaseLabel> = None;
    for j in 0..labels.len().saturating_sub(1) {
        let (t, ref l) = labels[j];
        if labels[j + 1].1 != *l {
            continue;
        }
        match &current {
            None => current = Some(l.clone()),
            Some(c) if c != l => {
                out.push(Transition { time: t, from: c.clone(), to: l.clone() });
                current = Some(l.clone());
            }
            _ => {}
        }
    }
    out
}

/// Label of the last stable (two-window) stretch, if any.
pub fn final_stable_label(labels: &[(f64, PhaseLabel)]) -> Option<PhaseLabel> {
    labels.windows(2).rev().find(|w| w[0].1 == w[1].1).map(|w| w[0].1.clone())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(f: Vec<f64>, p: Vec<f64>, dt: f64, a: f64) -> PhaseSeries {
        let q = p.iter().map(|x| 1.0 - x).collect();
        PhaseSeries { t0: 0.0, dt, a, fidelity: f, populations: vec![p, q] }
    }

    #[test]
    fn constant_series_has_no_variation() {
        let s = series(vec![0.7; 1000], vec![0.3; 1000], 0.01, 1.0);
        let f = series_features(&s, &Thresholds::default()).unwrap();
        assert!(f.f_variance < 1e-24);
        assert_eq!(f.population_amplitude, 0.0);
        assert_eq!(classify(&f, &Thresholds::default()), PhaseLabel::IFixedPoint);
    }

    #[test]
    fn sinusoid_is_spectrally_concentrated() {
        let n = 4096;
        let f: Vec<f64> = (0..n).map(|k| 0.5 + 0.4 * (2.0 * std::f64::consts::PI * 32.0 * k as f64 / n as f64).sin()).collect();
        let s = series(f, vec![0.5; n], 0.01, 1.0);
        let feat = series_features(&s, &Thresholds::default()).unwrap();
        assert!(feat.dominant_power_fraction >= 0.95);
        assert!(feat.module_score > 0.9);
    }

    #[test]
    fn periodic_dips_are_equally_spaced() {
        let n = 10_000;
        let f: Vec<f64> = (0..n).map(|k| if k % 1000 >= 480 && k % 1000 < 520 { 0.8 } else { 1.0 }).collect();
        let s = series(f, vec![0.5; n], 0.01, 1.0);
        let feat = series_features(&s, &Thresholds::default()).unwrap();
        assert!((feat.plateau_fraction - 0.96).abs() < 1e-12);
        assert_eq!(feat.swap_count, 10);
        assert!(feat.swap_spacing_rel_std < 1e-12);
        assert!(classify(&feat, &Thresholds::default()).components().contains(&PhaseLabel::VBistableSwaps));
    }

    #[test]
    fn stationary_series_has_no_transition() {
        let s = series(vec![0.7; 6000], vec![0.3; 6000], 0.01, 1.0);
        assert!(detect_transitions_in(&s, 10.0, &Thresholds::default()).unwrap().is_empty());
    }

    #[test]
    fn splice_gives_one_transition() {
        let n = 6000;
        let f: Vec<f64> = (0..n)
            .map(|k| if k < 3000 { 0.7 } else if k % 500 >= 240 && k % 500 < 260 { 0.8 } else { 1.0 })
            .collect();
        let s = series(f, vec![0.3; n], 0.01, 1.0);
        let tr = detect_transitions_in(&s, 10.0, &Thresholds::default()).unwrap();
        assert_eq!(tr.len(), 1);
        assert!((tr[0].time - 30.0).abs() <= 10.0);
        assert_eq!(tr[0].from, PhaseLabel::IFixedPoint);
        assert!(tr[0].to.components().contains(&PhaseLabel::VBistableSwaps));
    }

    #[test]
    fn short_series_is_rejected() {
        let s = series(vec![0.5; 10], vec![0.5; 10], 0.01, 1.0);
        assert!(matches!(series_features(&s, &Thresholds::default()), Err(Error::WindowTooShort(_))));
    }
}
