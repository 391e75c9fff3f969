//! Closed-form oracles for derivative-coupled deformations of ordinary
//! dynamics, ℍ_t = H − ξρ̇_t and its relatives.
//!
//! These evaluators are the reference values that integrator runs are
//! checked against: localization profiles, characteristic and landing
//! times, the near-Markovian parameter map, the resummed deep-memory
//! fidelity profile, and the landing (η_t, λ_t) schedules.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Spectrum of a time-independent H with initial level populations and phases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumInit {
    pub energies: Vec<f64>,
    pub p0: Vec<f64>,
    #[serde(default)]
    pub phases0: Vec<f64>,
}

impl SpectrumInit {
    pub fn new(energies: Vec<f64>, p0: Vec<f64>) -> Result<Self> {
        let phases0 = vec![0.0; energies.len()];
        Self::with_phases(energies, p0, phases0)
    }

    pub fn with_phases(energies: Vec<f64>, p0: Vec<f64>, phases0: Vec<f64>) -> Result<Self> {
        let s = Self { energies, p0, phases0 };
        s.validate()?;
        Ok(s)
    }

    /// Two levels with imbalance s0 = p_2 − p_1.
    pub fn qubit(e1: f64, e2: f64, s0: f64) -> Result<Self> {
        Self::new(vec![e1, e2], vec![(1.0 - s0) / 2.0, (1.0 + s0) / 2.0])
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.energies.len();
        if d < 2 || self.p0.len() != d || self.phases0.len() != d {
            return Err(Error::Config("spectrum needs ≥ 2 levels with matching populations and phases".into()));
        }
        if self.energies.windows(2).any(|w| !(w[1] >= w[0])) {
            return Err(Error::Config("energies must be sorted ascending".into()));
        }
        if !(self.energies[1] > self.energies[0]) || !(self.energies[d - 1] > self.energies[d - 2]) {
            return Err(Error::Config("ground and top levels must be nondegenerate".into()));
        }
        if self.p0.iter().any(|&p| !(p >= 0.0)) || (self.p0.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            return Err(Error::Config("populations must be nonnegative and sum to 1".into()));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    /// s0 = p_2 − p_1 (meaningful for two levels).
    pub fn imbalance(&self) -> f64 {
        self.p0[1] - self.p0[0]
    }

    /// Top-to-ground spread E_d − E_1.
    pub fn spread(&self) -> f64 {
        self.energies[self.dim() - 1] - self.energies[0]
    }
}

/// Level populations under ℍ = H − ξρ̇:
/// p_{t,n} ∝ p_{0,n} exp(2ξE_n t/(1 + ξ²)), normalized over a shared
/// denominator (evaluated in log-sum-exp form).
pub fn localization_profile(s: &SpectrumInit, xi: f64, t: f64) -> Vec<f64> {
    let k = 2.0 * xi * t / (1.0 + xi * xi);
    let logs: Vec<f64> = s
        .energies
        .iter()
        .zip(&s.p0)
        .map(|(&e, &p)| if p > 0.0 { p.ln() + k * e } else { f64::NEG_INFINITY })
        .collect();
    let top = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = logs.iter().map(|&l| (l - top).exp()).collect();
    let z: f64 = weights.iter().sum();
    weights.iter().map(|w| w / z).collect()
}

/// Time scale τ = (1 + ξ²)/(2|ξ|·gap), with the edge gap at the attractor
/// selected by sign(ξ): E_2 − E_1 for ξ < 0, E_d − E_{d−1} for ξ > 0.
pub fn characteristic_time(s: &SpectrumInit, xi: f64) -> Result<f64> {
    if xi == 0.0 {
        return Err(Error::ZeroXi);
    }
    let d = s.dim();
    let gap = if xi < 0.0 { s.energies[1] - s.energies[0] } else { s.energies[d - 1] - s.energies[d - 2] };
    Ok((1.0 + xi * xi) / (2.0 * xi.abs() * gap))
}

/// Rate of change of the phase difference φ_n − φ_m under ℍ = H − ξρ̇:
/// −(E_n − E_m)/(1 + ξ²).
pub fn phase_difference_rate(s: &SpectrumInit, xi: f64, n: usize, m: usize) -> f64 {
    -(s.energies[n] - s.energies[m]) / (1.0 + xi * xi)
}

/// Parameters of the short-memory reduction of the one-qubit [[2,2]] form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NearMarkovian {
    /// ξ1 = a(λ_{t−a} + λ^R).
    pub xi1: f64,
    /// ξ2^I = aλ^I.
    pub xi2_i: f64,
    /// Effective derivative coupling ξ1/(1 + ξ2^I).
    pub xi_eff: f64,
    /// Factor multiplying H in the effective [[1,1]] form, 1/(1 + ξ2^I).
    pub h_scale: f64,
}

pub fn near_markovian_map(lambda_tma: f64, lambda_r: f64, lambda_i: f64, a: f64) -> Result<NearMarkovian> {
    let xi1 = a * (lambda_tma + lambda_r);
    let xi2_i = a * lambda_i;
    let denom = 1.0 + xi2_i;
    if denom.abs() < 1e-14 {
        return Err(Error::UnitDenominator);
    }
    Ok(NearMarkovian { xi1, xi2_i, xi_eff: xi1 / denom, h_scale: 1.0 / denom })
}

/// Dominant resummed fidelity profile for ground-state localization at
/// memory distance a and coupling magnitude |λ|:
/// F = [1 + Σ_{l>1} (p_{0,l}/p_{0,1}) e^{−2a|λ|(E_l − E_1)t}]⁻¹.
pub fn deep_nm_fidelity(s: &SpectrumInit, lambda_abs: f64, a: f64, t: f64) -> Result<f64> {
    let p1 = s.p0[0];
    if !(p1 > 0.0) {
        return Err(Error::ZeroPopulation);
    }
    let rate = 2.0 * a * lambda_abs;
    let tail: f64 = s.energies[1..]
        .iter()
        .zip(&s.p0[1..])
        .map(|(&e, &p)| (p / p1) * (-rate * (e - s.energies[0]) * t).exp())
        .sum();
    Ok(1.0 / (1.0 + tail))
}

/// Landing time t_land = ΔE (1 − p_{0,1})/(2|ξ|).
pub fn finite_landing_time(xi: f64, delta_e: f64, p0_ground: f64) -> Result<f64> {
    if xi == 0.0 {
        return Err(Error::ZeroXi);
    }
    Ok(delta_e * (1.0 - p0_ground) / (2.0 * xi.abs()))
}

/// Ground population on the landing schedule, p_{t,1} = p_{0,1} + (2|ξ|/ΔE)t,
/// capped at 1 after landing.
pub fn landing_ground_population(xi: f64, delta_e: f64, p0_ground: f64, t: f64) -> f64 {
    (p0_ground + 2.0 * xi.abs() * t / delta_e).min(1.0)
}

/// (η_t, λ_t) of the finite-time landing schedule:
/// λ_t = −|ξ|, η_t = (1 + ξ²)/(ΔE² p_{t,1}(1 − p_{t,1})).
pub fn landing_schedule(xi: f64, delta_e: f64, p0_ground: f64, t: f64) -> Result<(f64, f64)> {
    let t_land = finite_landing_time(xi, delta_e, p0_ground)?;
    if t >= t_land {
        return Err(Error::PastLanding { t, t_land });
    }
    let p = landing_ground_population(xi, delta_e, p0_ground, t);
    if !(p > 0.0) {
        return Err(Error::ZeroPopulation);
    }
    let eta = (1.0 + xi * xi) / (delta_e * delta_e * p * (1.0 - p));
    Ok((eta, -xi.abs()))
}

/// Lyapunov energy ε_t = (1 + ξ²)/(ΔE p_{t,1}), constant at
/// (1 + ξ²)/ΔE after landing.
pub fn lyapunov(xi: f64, delta_e: f64, p0_ground: f64, t: f64) -> Result<f64> {
    if xi == 0.0 {
        return Err(Error::ZeroXi);
    }
    let p = landing_ground_population(xi, delta_e, p0_ground, t);
    if !(p > 0.0) {
        return Err(Error::ZeroPopulation);
    }
    Ok((1.0 + xi * xi) / (delta_e * p))
}

/// Latest time at which the root-coupled schedule stays real for H = σ³
/// from p_{0,1} = ½: t_max = √(1 − 2|ξ|)/(2|ξ|), valid for 0 < |ξ| < ½.
pub fn root_coupled_window_end(xi: f64) -> Result<f64> {
    let x = xi.abs();
    if !(x > 0.0 && x < 0.5) {
        return Err(Error::XiOutOfRange(xi));
    }
    Ok((1.0 - 2.0 * x).sqrt() / (2.0 * x))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn localization_examples() {
        let s = SpectrumInit::qubit(-1.0, 1.0, 0.0).unwrap();
        assert_eq!(localization_profile(&s, 0.7, 0.0), vec![0.5, 0.5]);
        let xi = 0.6;
        let t = 1.3;
        let p = localization_profile(&s, xi, t);
        let expected = 1.0 / (1.0 + (-4.0 * xi * t / (1.0 + xi * xi)).exp());
        assert!((p[1] - expected).abs() < 1e-15);
        let q = localization_profile(&s, -xi, t);
        assert!((q[0] - expected).abs() < 1e-15);
        let far = localization_profile(&s, xi, 1e4);
        assert!((far[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn characteristic_time_examples() {
        let s = SpectrumInit::qubit(-1.0, 1.0, 0.0).unwrap();
        assert!((characteristic_time(&s, 1.0).unwrap() - 0.5).abs() < 1e-15);
        assert!((characteristic_time(&s, 3.0).unwrap() - characteristic_time(&s, 1.0 / 3.0).unwrap()).abs() < 1e-14);
        assert_eq!(characteristic_time(&s, 0.0), Err(Error::ZeroXi));
    }

    #[test]
    fn near_markovian_examples() {
        let m = near_markovian_map(2.0, 1.0, 0.0, 0.1).unwrap();
        assert!((m.xi1 - 0.3).abs() < 1e-15 && m.xi2_i == 0.0 && m.h_scale == 1.0);
        assert_eq!(near_markovian_map(0.0, 0.0, -10.0, 0.1), Err(Error::UnitDenominator));
    }

    #[test]
    fn landing_examples() {
        let (eta, lambda) = landing_schedule(-1.0, 2.0, 0.5, 0.0).unwrap();
        assert!((eta - 2.0).abs() < 1e-15 && lambda == -1.0);
        assert!((finite_landing_time(-1.0, 2.0, 0.0).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(finite_landing_time(-1.0, 2.0, 1.0).unwrap(), 0.0);
        assert!(matches!(landing_schedule(-1.0, 2.0, 0.0, 1.0), Err(Error::PastLanding { .. })));
        assert!((lyapunov(-1.0, 2.0, 0.0, 5.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((lyapunov(-1.0, 2.0, 0.5, 0.0).unwrap() - 2.0).abs() < 1e-15);
        assert_eq!(lyapunov(-1.0, 2.0, 0.0, 0.0), Err(Error::ZeroPopulation));
    }

    #[test]
    fn root_window_examples() {
        assert!((root_coupled_window_end(0.25).unwrap() - 0.5f64.sqrt() / 0.5).abs() < 1e-12);
        assert!(root_coupled_window_end(0.5 - 1e-12).unwrap() < 1e-5);
        assert!(matches!(root_coupled_window_end(0.6), Err(Error::XiOutOfRange(_))));
    }

    #[test]
    fn deep_profile_examples() {
        let s = SpectrumInit::qubit(-1.0, 1.0, 0.2).unwrap();
        assert!((deep_nm_fidelity(&s, 1.0, 2.0, 0.0).unwrap() - 0.4).abs() < 1e-15);
        assert!((deep_nm_fidelity(&s, 1.0, 2.0, 100.0).unwrap() - 1.0).abs() < 1e-12);
    }
}
