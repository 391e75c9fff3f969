//! Delay-aware unitary time evolution.
//!
//! A run has two segments.  On `[0, a_max]` an ordinary "kicker"
//! Hamiltonian generates the prehistory that the memory terms need.  From
//! `a_max` on, each step assembles ℍ_t from the stored history and applies
//! the exact propagator `e^{−iℍ dt}` obtained from a Hermitian
//! eigendecomposition.
//!
//! Hamiltonians that depend on the present time derivative `ρ̇_t`
//! ([`evolve_effective_timelocal`]) are integrated through their resolved
//! explicit form: the Schrödinger velocity is computed in closed form, and
//! the Hermitian generator `ηA − λρ̇` is then exponentiated.

use serde::{Deserialize, Serialize};

use crate::echam::{self, ECHamiltonianSpec};
use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix, CVector, C64};
use crate::qstate::{self, DensityOperator, PureState, StateHistory};

/// What to do about accumulated norm/purity drift.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum UnitarityPolicy {
    RenormalizeEachStep,
    /// Report drift; fail with `PurityDriftExceeded` beyond the bound.
    #[default]
    MonitorOnly,
}

/// Where in the step the Hamiltonian is assembled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Stepping {
    /// ℍ assembled at the start of each step (first order).
    LeftEndpoint,
    /// Average of ℍ at both ends, with the end state predicted by a
    /// left-endpoint step (second order).
    #[default]
    Trapezoid,
}

/// Propagator construction; only exact Hermitian eigendecomposition is offered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ExpMethod {
    #[default]
    HermitianEigendecomposition,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub dt: f64,
    pub horizon: f64,
    #[serde(default)]
    pub unitarity_policy: UnitarityPolicy,
    #[serde(default)]
    pub stepping: Stepping,
    #[serde(default)]
    pub exp_method: ExpMethod,
    /// Export stride; the in-memory history always keeps every state.
    #[serde(default = "one")]
    pub record_stride: usize,
    /// Drift bound for the monitor-only policy.
    #[serde(default = "default_drift_bound")]
    pub drift_bound: f64,
}

fn one() -> usize {
    1
}

fn default_drift_bound() -> f64 {
    1e-6
}

impl IntegratorConfig {
    pub fn new(dt: f64, horizon: f64) -> Self {
        Self {
            dt,
            horizon,
            unitarity_policy: UnitarityPolicy::MonitorOnly,
            stepping: Stepping::Trapezoid,
            exp_method: ExpMethod::HermitianEigendecomposition,
            record_stride: 1,
            drift_bound: default_drift_bound(),
        }
    }

    pub fn with_stepping(mut self, stepping: Stepping) -> Self {
        self.stepping = stepping;
        self
    }

    pub fn with_policy(mut self, policy: UnitarityPolicy) -> Self {
        self.unitarity_policy = policy;
        self
    }

    fn check(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::Config(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.horizon >= 0.0) || !self.horizon.is_finite() {
            return Err(Error::Config(format!("horizon must be nonnegative, got {}", self.horizon)));
        }
        if self.record_stride == 0 {
            return Err(Error::Config("record_stride must be ≥ 1".into()));
        }
        Ok(())
    }

    /// Number of grid points covering [0, horizon].
    pub fn n_points(&self) -> usize {
        (self.horizon / self.dt + 1e-9).floor() as usize + 1
    }
}

/// Squared overlap F_t = Tr[ρ_{t−a} ρ_t] on the history grid, starting at the
/// first index where t − a is stored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FidelitySeries {
    pub distance: f64,
    pub start_index: usize,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// max |Tr ρ² − Tr ρ_0²| over the run.
    pub max_purity_drift: f64,
    /// max entrywise |ℍ − ℍ†| over the assembled Hamiltonians.
    pub max_hermiticity_residual: f64,
    pub steps: usize,
    /// Time at which a finite-time landing schedule reached its attractor.
    pub landing_time: Option<f64>,
}

/// Evolved record of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub history: StateHistory,
    /// ε_t = Tr[ρ_t ℍ_t] at every grid index; on the prehistory segment the
    /// kicker plays the role of ℍ_t.
    pub energies: Vec<f64>,
    /// The Hamiltonian generating each step, aligned with `energies`.
    pub generators: Vec<CMatrix>,
    /// First grid index evolved under the history-dependent Hamiltonian.
    pub ec_start_index: usize,
    pub fidelity: Vec<FidelitySeries>,
    pub diagnostics: Diagnostics,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.history.len()
    }

    pub fn is_empty(&self) -> bool {
        self.history.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|k| self.history.time(k)).collect()
    }

    pub fn dt(&self) -> f64 {
        self.history.dt()
    }

    pub fn final_state(&self) -> &DensityOperator {
        self.history.state(self.len() - 1)
    }

    pub fn fidelity_series(&self, a: f64) -> Option<&FidelitySeries> {
        self.fidelity.iter().find(|f| (f.distance - a).abs() < 1e-12)
    }

    /// ρ_{t,nn} for level n (computational basis) at every grid index.
    pub fn population_series(&self, n: usize) -> Vec<f64> {
        self.history.states().iter().map(|s| s.matrix()[(n, n)].re).collect()
    }

    /// |⟨v|Ψ_t⟩|² at every grid index for a fixed normalized vector v.
    pub fn projection_series(&self, v: &CVector) -> Vec<f64> {
        self.history.states().iter().map(|s| (v.adjoint() * s.matrix() * v)[(0, 0)].re).collect()
    }

    /// Compute (or recompute) F_t for memory distance a.
    pub fn add_fidelity_series(&mut self, a: f64) -> Result<()> {
        if self.fidelity_series(a).is_some() {
            return Ok(());
        }
        let s = self.history.steps_for_distance(a)?;
        let values = (s..self.len())
            .map(|k| linalg::trace_product(self.history.state(k - s).matrix(), self.history.state(k).matrix()).re)
            .collect();
        self.fidelity.push(FidelitySeries { distance: a, start_index: s, values });
        Ok(())
    }
}

/// History on [0, a_max] generated by the kicker: ρ_t = e^{−iKt} ρ_0 e^{iKt}.
/// Pure initial states produce pure histories (state vectors retained).
pub fn prehistory(kicker: &CMatrix, rho0: &DensityOperator, a_max: f64, dt: f64) -> Result<StateHistory> {
    let r = linalg::hermiticity_residual(kicker);
    if r > 1e-10 {
        return Err(Error::NonHermitian { residual: r });
    }
    if kicker.nrows() != rho0.dim() {
        return Err(Error::DimensionMismatch("kicker and initial state dimensions differ".into()));
    }
    let n = qstate::steps_for_distance(a_max, dt)?;
    let (vals, vecs) = linalg::eigh(kicker);
    let prop = |t: f64| -> CMatrix {
        let d = CVector::from_iterator(vals.len(), vals.iter().map(|&e| C64::from_polar(1.0, -e * t)));
        CMatrix::from_fn(vecs.nrows(), vecs.ncols(), |i, j| vecs[(i, j)] * d[j]) * vecs.adjoint()
    };
    if rho0.is_pure(1e-10) {
        let psi0 = rho0.dominant_vector();
        let mut h = StateHistory::new_pure(0.0, dt)?;
        for k in 0..=n {
            h.push_pure(PureState::from_vector_unchecked(prop(k as f64 * dt) * psi0.amplitudes()))?;
        }
        Ok(h)
    } else {
        let mut h = StateHistory::new_mixed(0.0, dt)?;
        for k in 0..=n {
            let u = prop(k as f64 * dt);
            h.push_state(DensityOperator::from_matrix_unchecked(linalg::conjugate(&u, rho0.matrix())))?;
        }
        Ok(h)
    }
}

/// One exact unitary step ρ → e^{−iH dt} ρ e^{iH dt}.
pub fn step_unitary(h: &CMatrix, rho: &DensityOperator, dt: f64) -> Result<DensityOperator> {
    let r = linalg::hermiticity_residual(h);
    if r > 1e-8 {
        return Err(Error::NonHermitian { residual: r });
    }
    let u = linalg::expm_hermitian(h, dt);
    Ok(DensityOperator::from_matrix_unchecked(linalg::conjugate(&u, rho.matrix())))
}

fn advance(history: &mut StateHistory, u: &CMatrix, policy: UnitarityPolicy) -> Result<()> {
    let k = history.len() - 1;
    match history.vector(k) {
        Some(psi) => {
            let mut next = u * psi;
            if policy == UnitarityPolicy::RenormalizeEachStep {
                next = next.normalize();
            }
            history.push_pure(PureState::from_vector_unchecked(next))
        }
        None => {
            let mut next = linalg::conjugate(u, history.state(k).matrix());
            if policy == UnitarityPolicy::RenormalizeEachStep {
                let tr = next.trace();
                next = linalg::hermitian_part(&next) / tr;
            }
            history.push_state(DensityOperator::from_matrix_unchecked(next))
        }
    }
}

/// Evolve `rho0` under the kicker on [0, a_max] and then under the assembled
/// history-dependent Hamiltonian up to `cfg.horizon`.
pub fn evolve(
    spec: &ECHamiltonianSpec,
    kicker: &CMatrix,
    rho0: &DensityOperator,
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    cfg.check()?;
    spec.validate(cfg.dt)?;
    if rho0.dim() != spec.dim {
        return Err(Error::DimensionMismatch("initial state and spec dimensions differ".into()));
    }
    let a_max = spec.a_max();
    if cfg.horizon + 1e-12 < a_max {
        return Err(Error::Config(format!("horizon {} is shorter than the largest memory {a_max}", cfg.horizon)));
    }
    let mut history = prehistory(kicker, rho0, a_max, cfg.dt)?;
    let start = history.len() - 1;
    let n_points = cfg.n_points();
    let purity0 = rho0.purity();

    let mut energies: Vec<f64> = history
        .states()
        .iter()
        .take(start)
        .map(|s| linalg::trace_product(s.matrix(), kicker).re)
        .collect();
    let mut generators: Vec<CMatrix> = vec![kicker.clone(); start];
    let mut diag = Diagnostics::default();

    for k in start..n_points {
        let hk = echam::assemble_at_index(spec, &history, k)?;
        diag.max_hermiticity_residual = diag.max_hermiticity_residual.max(linalg::hermiticity_residual(&hk));
        energies.push(linalg::trace_product(history.state(k).matrix(), &hk).re);
        generators.push(hk.clone());
        if k + 1 == n_points {
            break;
        }
        let u0 = linalg::expm_hermitian(&hk, cfg.dt);
        let u = match cfg.stepping {
            Stepping::LeftEndpoint => u0,
            Stepping::Trapezoid => {
                advance(&mut history, &u0, cfg.unitarity_policy)?;
                let predicted = echam::assemble_at_index(spec, &history, k + 1);
                history.pop();
                let h1 = predicted?;
                linalg::expm_hermitian(&((&hk + h1) * c(0.5, 0.0)), cfg.dt)
            }
        };
        advance(&mut history, &u, cfg.unitarity_policy)?;
        diag.steps += 1;
        let drift = (history.state(k + 1).purity() - purity0).abs();
        diag.max_purity_drift = diag.max_purity_drift.max(drift);
        if cfg.unitarity_policy == UnitarityPolicy::MonitorOnly && drift > cfg.drift_bound {
            return Err(Error::PurityDriftExceeded { drift, t: history.time(k + 1) });
        }
    }

    let mut traj = Trajectory { history, energies, generators, ec_start_index: start, fidelity: Vec::new(), diagnostics: diag };
    for a in spec.distances() {
        if a > 0.0 {
            traj.add_fidelity_series(a)?;
        }
    }
    Ok(traj)
}

/// Couplings of derivative-coupled Hamiltonians ℍ_t = η_t A − λ_t ρ̇_t.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TimeLocalSchedule {
    /// η = 1, λ = ξ, A = H: the minimal deformation H − ξρ̇.
    #[default]
    Fixed,
    /// Finite-time landing on the ground state of a qubit H:
    /// A = H − E_1𝟙, λ = −|ξ|, η = −det ρ̇ evaluated through the on-shell
    /// identity η = (1+ξ²)/(ΔE² p_1 (1−p_1)).  The state is frozen once it
    /// lands.
    Landing,
    /// η = 1, A = H, λ_t the smaller-magnitude real root of
    /// |ξ|λ² + ΔE² p_1(1−p_1) λ + |ξ| = 0.  Fails with `ComplexRoot`
    /// once the root leaves the real axis.
    RootCoupled,
}

/// Schrödinger velocity of ℍ = ηA − λρ̇ for a normalized ψ:
/// ψ̇ = η (λ − i)/(1 + λ²) (A − iλ⟨A⟩) ψ.
pub fn resolved_velocity(a: &CMatrix, eta: f64, lambda: f64, psi: &CVector) -> CVector {
    let mean = (psi.adjoint() * a * psi)[(0, 0)].re;
    let pref = c(eta * lambda, -eta) / (1.0 + lambda * lambda);
    let shifted = a * psi - psi * c(0.0, lambda * mean);
    shifted * pref
}

/// ρ̇ = ψ̇ψ† + ψψ̇†.
pub fn rho_dot(psi: &CVector, psi_dot: &CVector) -> CMatrix {
    linalg::outer(psi_dot, psi) + linalg::outer(psi, psi_dot)
}

/// Fixed-point solve of ρ̇ = −i[ηA − λρ̇, ρ] starting from ρ̇ = 0.
/// Converges for |λ| < 1; used to cross-check the resolved form.
pub fn rho_dot_fixed_point(a: &CMatrix, eta: f64, lambda: f64, rho: &CMatrix, iterations: usize) -> CMatrix {
    let mut rd = CMatrix::zeros(rho.nrows(), rho.ncols());
    for _ in 0..iterations {
        let h = a * c(eta, 0.0) - &rd * c(lambda, 0.0);
        rd = linalg::commutator(&h, rho) * c(0.0, -1.0);
    }
    rd
}

/// Largest generator rotation ‖ℍ‖·h allowed per substep of a scheduled
/// time-local step.
const MAX_SUBSTEP_ROTATION: f64 = 0.05;

/// Cap on the substeps per grid step.
const MAX_SUBSTEPS: usize = 100_000;

struct LocalModel<'a> {
    h: &'a CMatrix,
    xi: f64,
    schedule: TimeLocalSchedule,
    ground: CVector,
    gap: f64,
    shifted: CMatrix,
}

impl<'a> LocalModel<'a> {
    fn new(h: &'a CMatrix, xi: f64, schedule: TimeLocalSchedule) -> Result<Self> {
        let (vals, vecs) = linalg::eigh(h);
        let d = h.nrows();
        if schedule != TimeLocalSchedule::Fixed && d != 2 {
            return Err(Error::NonQubit(d));
        }
        if schedule != TimeLocalSchedule::Fixed && xi == 0.0 {
            return Err(Error::ZeroXi);
        }
        let shifted = h - linalg::identity(d) * c(vals[0], 0.0);
        Ok(Self {
            h,
            xi,
            schedule,
            ground: vecs.column(0).into_owned(),
            gap: vals[d - 1] - vals[0],
            shifted,
        })
    }

    fn ground_population(&self, psi: &CVector) -> f64 {
        self.ground.dotc(psi).norm_sqr()
    }

    /// (A, η, λ) at the state ψ.
    fn couplings(&self, psi: &CVector, t: f64) -> Result<(&CMatrix, f64, f64)> {
        match self.schedule {
            TimeLocalSchedule::Fixed => Ok((self.h, 1.0, self.xi)),
            TimeLocalSchedule::Landing => {
                let p1 = self.ground_population(psi);
                let q = p1 * (1.0 - p1);
                if !(q > 0.0) {
                    return Err(Error::ScheduleSingularity { t });
                }
                let eta = (1.0 + self.xi * self.xi) / (self.gap * self.gap * q);
                Ok((&self.shifted, eta, -self.xi.abs()))
            }
            TimeLocalSchedule::RootCoupled => {
                let p1 = self.ground_population(psi);
                let b = self.gap * self.gap * p1 * (1.0 - p1);
                let x = self.xi.abs();
                let disc = b * b - 4.0 * x * x;
                if disc < 0.0 {
                    return Err(Error::ComplexRoot { t });
                }
                Ok((self.h, 1.0, (-b + disc.sqrt()) / (2.0 * x)))
            }
        }
    }

    /// Hermitian generator ηA − λρ̇ and the energy Tr[ρℍ].
    fn generator(&self, psi: &CVector, t: f64) -> Result<(CMatrix, f64)> {
        let (a, eta, lambda) = self.couplings(psi, t)?;
        let v = resolved_velocity(a, eta, lambda, psi);
        let g = a * c(eta, 0.0) - rho_dot(psi, &v) * c(lambda, 0.0);
        let energy = (psi.adjoint() * &g * psi)[(0, 0)].re;
        Ok((g, energy))
    }
}

/// Evolve a pure state under ℍ_t = η_t A − λ_t ρ̇_t (see
/// [`TimeLocalSchedule`]) with second-order exponential midpoint steps.
///
/// `xi = 0` with the fixed schedule reduces to ordinary Schrödinger
/// evolution under `h`.
pub fn evolve_effective_timelocal(
    h: &CMatrix,
    xi: f64,
    schedule: TimeLocalSchedule,
    rho0: &DensityOperator,
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    cfg.check()?;
    let r = linalg::hermiticity_residual(h);
    if r > 1e-10 {
        return Err(Error::NonHermitian { residual: r });
    }
    if !rho0.is_pure(1e-10) {
        return Err(Error::InvalidState("derivative-coupled evolution needs a pure initial state".into()));
    }
    let model = LocalModel::new(h, xi, schedule)?;
    let mut history = StateHistory::new_pure(0.0, cfg.dt)?;
    history.push_pure(rho0.dominant_vector())?;
    let n_points = cfg.n_points();
    let mut energies = Vec::with_capacity(n_points);
    let mut generators = Vec::with_capacity(n_points);
    let mut diag = Diagnostics::default();
    let rate = 2.0 * xi.abs() / model.gap;
    let mut landed = false;

    for k in 0..n_points {
        let t = history.time(k);
        let psi = history.vector(k).expect("pure history").clone();
        if schedule == TimeLocalSchedule::Landing && !landed && 1.0 - model.ground_population(&psi) <= 1e-12 {
            landed = true;
            diag.landing_time.get_or_insert(t);
        }
        if landed {
            // On the attractor ℍ annihilates the state: ε is the landing value.
            let p1 = model.ground_population(&psi);
            energies.push((1.0 + xi * xi) / (model.gap * p1));
            generators.push(linalg::zeros(h.nrows()));
            if k + 1 < n_points {
                history.push_pure(PureState::from_vector_unchecked(psi))?;
            }
            continue;
        }
        let (g0, energy) = model.generator(&psi, t)?;
        diag.max_hermiticity_residual = diag.max_hermiticity_residual.max(linalg::hermiticity_residual(&g0));
        energies.push(energy);
        generators.push(g0.clone());
        if k + 1 == n_points {
            break;
        }
        if schedule == TimeLocalSchedule::Landing {
            let p2 = 1.0 - model.ground_population(&psi);
            if p2 <= rate * cfg.dt {
                // The linear ramp reaches the attractor inside this step.
                let overlap = model.ground.dotc(&psi);
                let next = &model.ground * (overlap / overlap.norm());
                history.push_pure(PureState::from_vector_unchecked(next))?;
                landed = true;
                diag.landing_time = Some(t + p2 / rate);
                diag.steps += 1;
                continue;
            }
        }
        // Scheduled couplings diverge near the poles of p_1(1 − p_1); split
        // the grid step so that each substep rotates by a bounded angle.
        let substeps = if schedule == TimeLocalSchedule::Fixed {
            1
        } else {
            let spread = 2.0 * linalg::fro_norm(&g0) * cfg.dt;
            ((spread / MAX_SUBSTEP_ROTATION).ceil() as usize).clamp(1, MAX_SUBSTEPS)
        };
        let h_sub = cfg.dt / substeps as f64;
        let mut next = psi.clone();
        for j in 0..substeps {
            let ts = t + j as f64 * h_sub;
            let (gs, _) = if j == 0 { (g0.clone(), energy) } else { model.generator(&next, ts)? };
            let half = linalg::expm_hermitian(&gs, 0.5 * h_sub) * &next;
            let (gm, _) = model.generator(&half, ts + 0.5 * h_sub)?;
            next = linalg::expm_hermitian(&gm, h_sub) * &next;
        }
        if cfg.unitarity_policy == UnitarityPolicy::RenormalizeEachStep {
            next = next.normalize();
        }
        let drift = (next.norm_squared() - 1.0).abs();
        diag.max_purity_drift = diag.max_purity_drift.max(drift);
        if cfg.unitarity_policy == UnitarityPolicy::MonitorOnly && drift > cfg.drift_bound {
            return Err(Error::PurityDriftExceeded { drift, t: t + cfg.dt });
        }
        history.push_pure(PureState::from_vector_unchecked(next))?;
        diag.steps += 1;
    }
    Ok(Trajectory { history, energies, generators, ec_start_index: 0, fidelity: Vec::new(), diagnostics: diag })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::echam::{CouplingSchedule, MonomialTerm, Parity};
    use crate::linalg::pauli;

    #[test]
    fn zero_kicker_gives_constant_prehistory() {
        let rho = PureState::plus().density();
        let h = prehistory(&linalg::zeros(2), &rho, 1.0, 0.1).unwrap();
        assert_eq!(h.len(), 11);
        for s in h.states() {
            assert!(linalg::max_abs_diff(s.matrix(), rho.matrix()) < 1e-15);
        }
    }

    #[test]
    fn kicked_prehistory_is_a_y_rotation() {
        // e^{−i5σ²t} rotates the Bloch vector about y by angle 10t: x = cos 10t, z = −sin 10t.
        let h = prehistory(&(pauli(2) * c(5.0, 0.0)), &PureState::plus().density(), 3.0, 0.01).unwrap();
        for k in (0..h.len()).step_by(37) {
            let t = h.time(k);
            let r = h.state(k).matrix();
            let x = linalg::trace_product(r, &pauli(1)).re;
            let z = linalg::trace_product(r, &pauli(3)).re;
            assert!((x - (10.0 * t).cos()).abs() < 1e-12);
            assert!((z + (10.0 * t).sin()).abs() < 1e-12);
            assert!((h.state(k).purity() - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn step_unitary_examples() {
        let rho = DensityOperator::new(linalg::identity(2) * c(0.5, 0.0) + pauli(1) * c(0.3, 0.0)).unwrap();
        let same = step_unitary(&linalg::zeros(2), &rho, 0.3).unwrap();
        assert!(linalg::max_abs_diff(same.matrix(), rho.matrix()) < 1e-15);
        let back = step_unitary(&pauli(3), &rho, std::f64::consts::PI).unwrap();
        assert!(linalg::max_abs_diff(back.matrix(), rho.matrix()) < 1e-14);
        assert!(step_unitary(&(pauli(1) * linalg::I), &rho, 0.1).is_err());
    }

    #[test]
    fn sqt_spec_gives_larmor_precession() {
        let spec = ECHamiltonianSpec::sqt(pauli(3));
        let cfg = IntegratorConfig::new(1e-3, 2.0);
        let traj = evolve(&spec, &pauli(3), &PureState::plus().density(), &cfg).unwrap();
        for k in (0..traj.len()).step_by(97) {
            let t = traj.history.time(k);
            let x = linalg::trace_product(traj.history.state(k).matrix(), &pauli(1)).re;
            assert!((x - (2.0 * t).cos()).abs() < 1e-10);
        }
    }

    #[test]
    fn one_one_energy_equals_lambda_times_fidelity() {
        let a = 0.5;
        let lambda = 1.7;
        let spec = ECHamiltonianSpec::one_one(lambda, a);
        let cfg = IntegratorConfig::new(0.01, 4.0);
        let traj = evolve(&spec, &(pauli(2) * c(2.0, 0.0)), &PureState::plus().density(), &cfg).unwrap();
        let f = traj.fidelity_series(a).unwrap();
        for k in traj.ec_start_index..traj.len() {
            let fid = f.values[k - f.start_index];
            assert!((traj.energies[k] - lambda * fid).abs() < 1e-12);
        }
    }

    #[test]
    fn resolved_velocity_solves_implicit_equation() {
        let h = CMatrix::from_row_slice(
            3,
            3,
            &[c(-1.0, 0.0), c(0.2, 0.1), c(0.0, 0.0), c(0.2, -0.1), c(0.3, 0.0), c(0.4, 0.0), c(0.0, 0.0), c(0.4, 0.0), c(1.1, 0.0)],
        );
        let psi = PureState::normalized(linalg::vector(&[c(0.3, 0.1), c(-0.5, 0.2), c(0.6, -0.4)])).unwrap();
        for &(eta, lambda) in &[(1.0, 0.4), (2.0, -0.7), (0.5, 3.0)] {
            let v = resolved_velocity(&h, eta, lambda, psi.amplitudes());
            let rd = rho_dot(psi.amplitudes(), &v);
            let rho = psi.density().into_matrix();
            let hh = &h * c(eta, 0.0) - &rd * c(lambda, 0.0);
            let residual = &rd + linalg::commutator(&hh, &rho) * c(0.0, 1.0);
            assert!(linalg::max_abs(&residual) < 1e-13);
            if lambda.abs() < 1.0 {
                let fp = rho_dot_fixed_point(&h, eta, lambda, &rho, 200);
                assert!(linalg::max_abs_diff(&fp, &rd) < 1e-10);
            }
        }
    }

    #[test]
    fn zero_xi_is_schrodinger() {
        let cfg = IntegratorConfig::new(1e-3, 1.0);
        let traj = evolve_effective_timelocal(&pauli(3), 0.0, TimeLocalSchedule::Fixed, &PureState::plus().density(), &cfg)
            .unwrap();
        let x = linalg::trace_product(traj.final_state().matrix(), &pauli(1)).re;
        assert!((x - 2.0f64.cos()).abs() < 1e-10);
    }

    #[test]
    fn off_grid_memory_is_rejected_before_compute() {
        let spec = ECHamiltonianSpec::empty(2)
            .with_term(MonomialTerm::primitive(Parity::Plus, &[0.333]), CouplingSchedule::constant(1.0));
        let cfg = IntegratorConfig::new(0.01, 1.0);
        let err = evolve(&spec, &pauli(3), &PureState::plus().density(), &cfg).unwrap_err();
        assert!(matches!(err, Error::OffGridDistance { .. }));
    }
}
