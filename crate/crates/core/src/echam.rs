//! History-dependent Hamiltonians: declarative specs and per-step assembly.
//!
//! A Hamiltonian is an ordinary (history-independent) part plus a real linear
//! combination of *history monomials*
//!
//! ```text
//! M = A_0 ρ_{t−a_1}^{n_1} A_1 ρ_{t−a_2}^{n_2} A_2 … ρ_{t−a_L}^{n_L} A_L
//! ```
//!
//! entering either Hermitian-symmetrised (`M + M†`, parity `+`) or
//! anti-symmetrised with a factor `i` (`i(M − M†)`, parity `−`).  Length-one
//! monomials whose content is already Hermitian enter bare (`M`), so that the
//! coupling of a single history projector is exactly its prefactor.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, c, serde_cmatrix, serde_cmatrix_vec, CMatrix, I};
use crate::qstate::{self, PureState, StateHistory};
use crate::reform;

/// Whether a monomial enters Hermitian-symmetrised or anti-symmetrised.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    #[serde(alias = "+", alias = "hermitian")]
    Plus,
    #[serde(alias = "-", alias = "antihermitian")]
    Minus,
}

/// Restriction of a history state to one tensor factor before raising it to a
/// power; the result is re-embedded with identities on the other factors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Subsystem {
    pub dims: Vec<usize>,
    pub index: usize,
}

/// One history factor ρ_{t−a}^n.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Factor {
    #[serde(rename = "a")]
    pub distance: f64,
    #[serde(default = "one")]
    pub power: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subsystem: Option<Subsystem>,
}

fn one() -> u32 {
    1
}

impl Factor {
    pub fn at(distance: f64) -> Self {
        Self { distance, power: 1, subsystem: None }
    }
}

/// A history monomial with its parity.
///
/// `sandwiches` holds the fixed operators `A_0 … A_L`; an empty list means all
/// identities (a *primitive* monomial).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonomialTerm {
    pub parity: Parity,
    pub factors: Vec<Factor>,
    #[serde(default, with = "serde_cmatrix_vec", skip_serializing_if = "Vec::is_empty")]
    pub sandwiches: Vec<CMatrix>,
}

impl MonomialTerm {
    pub fn new(parity: Parity, factors: Vec<Factor>, sandwiches: Vec<CMatrix>) -> Result<Self> {
        let t = Self { parity, factors, sandwiches };
        t.check_shape()?;
        Ok(t)
    }

    /// Identity-sandwiched monomial over the given memory distances
    /// (ordered left to right).
    pub fn primitive(parity: Parity, distances: &[f64]) -> Self {
        Self { parity, factors: distances.iter().map(|&a| Factor::at(a)).collect(), sandwiches: Vec::new() }
    }

    /// A ρ_{t−a} B with a single history factor.
    pub fn sandwiched(parity: Parity, a: f64, left: CMatrix, right: CMatrix) -> Self {
        Self { parity, factors: vec![Factor::at(a)], sandwiches: vec![left, right] }
    }

    fn check_shape(&self) -> Result<()> {
        if self.factors.is_empty() {
            return Err(Error::Config("a monomial needs at least one history factor".into()));
        }
        if !self.sandwiches.is_empty() && self.sandwiches.len() != self.factors.len() + 1 {
            return Err(Error::Config(format!(
                "monomial with {} factors needs {} sandwich operators, got {}",
                self.factors.len(),
                self.factors.len() + 1,
                self.sandwiches.len()
            )));
        }
        if self.sandwiches.iter().any(|a| a.iter().any(|z| !z.re.is_finite() || !z.im.is_finite())) {
            return Err(Error::Config("sandwich operator has non-finite entries".into()));
        }
        if self.factors.iter().any(|f| f.power == 0) {
            return Err(Error::Config("factor powers must be ≥ 1".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn is_primitive(&self) -> bool {
        self.sandwiches.is_empty()
    }

    /// Length one with A_1 = A_0†, so that M itself is Hermitian.
    pub fn has_hermitian_content(&self) -> bool {
        self.len() == 1
            && (self.is_primitive()
                || linalg::max_abs_diff(&self.sandwiches[1], &self.sandwiches[0].adjoint()) <= 1e-14)
    }

    /// Largest memory distance among the factors.
    pub fn max_distance(&self) -> f64 {
        self.factors.iter().map(|f| f.distance).fold(0.0, f64::max)
    }

    /// The raw product M at time t.
    pub fn product(&self, history: &StateHistory, t: f64) -> Result<CMatrix> {
        let k = history.index_of(t)?;
        self.product_at_index(history, k)
    }

    pub(crate) fn product_at_index(&self, history: &StateHistory, k: usize) -> Result<CMatrix> {
        let mut m = match self.sandwiches.first() {
            Some(a0) => a0.clone(),
            None => linalg::identity(history.dim()),
        };
        for (s, f) in self.factors.iter().enumerate() {
            let steps = history.steps_for_distance(f.distance)?;
            if steps > k {
                let t = history.time(k);
                return Err(Error::MemoryUnderflow { requested: t - f.distance, t0: history.t0() });
            }
            let rho = factor_state(history.state(k - steps).matrix(), f)?;
            m = if s == 0 && self.is_primitive() { rho } else { m * rho };
            if let Some(a) = self.sandwiches.get(s + 1) {
                m *= a;
            }
        }
        Ok(m)
    }

    /// Contribution to the Hamiltonian per unit coupling: a Hermitian
    /// operator (bare `M`, `M + M†`, or `i(M − M†)`).
    pub fn basis_operator(&self, history: &StateHistory, t: f64) -> Result<CMatrix> {
        let k = history.index_of(t)?;
        self.basis_operator_at_index(history, k)
    }

    pub(crate) fn basis_operator_at_index(&self, history: &StateHistory, k: usize) -> Result<CMatrix> {
        let m = self.product_at_index(history, k)?;
        Ok(match self.parity {
            Parity::Plus if self.has_hermitian_content() => m,
            Parity::Plus => &m + m.adjoint(),
            Parity::Minus => (&m - m.adjoint()) * I,
        })
    }
}

/// ρ^n, optionally reduced to a tensor factor first and re-embedded.
fn factor_state(rho: &CMatrix, f: &Factor) -> Result<CMatrix> {
    let base = match &f.subsystem {
        Some(sub) => qstate::partial_trace_matrix(rho, &sub.dims, sub.index)?,
        None => rho.clone(),
    };
    let mut p = base.clone();
    for _ in 1..f.power {
        p = &p * &base;
    }
    match &f.subsystem {
        Some(sub) => qstate::embed(&p, &sub.dims, sub.index),
        None => Ok(p),
    }
}

/// The literal symmetrised monomial: `M + M†` (parity +) or `M − M†` (parity −).
///
/// This is the raw definition, without the bare-length-one convention or the
/// factor `i` used by [`assemble`]; see [`MonomialTerm::basis_operator`].
pub fn eval_monomial(term: &MonomialTerm, history: &StateHistory, t: f64) -> Result<CMatrix> {
    let m = term.product(history, t)?;
    Ok(match term.parity {
        Parity::Plus => &m + m.adjoint(),
        Parity::Minus => &m - m.adjoint(),
    })
}

/// Which of the four one-qubit reformulation couplings a schedule reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QubitCoupling {
    Present,
    Past,
    AntiCommutator,
    Commutator,
}

/// Registered coupling functions of the history.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum Builtin {
    /// Polynomial in the history fidelity F = Tr[ρ_{t−a}ρ_t]:
    /// λ = Σ_k coefficients[k]·F^k.
    FidelityPolynomial { distance: f64, coefficients: Vec<f64> },
    /// One of the couplings that rewrite a fixed qubit Hamiltonian `target`
    /// in the two-state history form at memory distance `distance`.
    QubitReformulation {
        #[serde(with = "serde_cmatrix")]
        target: CMatrix,
        distance: f64,
        coupling: QubitCoupling,
    },
    /// Time-dependent scale factor of the finite-time landing schedule.
    LandingScale { xi: f64, delta_e: f64, p0_ground: f64 },
    /// Constant drag coupling −|ξ| of the finite-time landing schedule.
    LandingDrag { xi: f64 },
}

/// A real coupling λ_t.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CouplingSchedule {
    Constant { value: f64 },
    /// Piecewise-constant table on a uniform grid, clamped at both ends.
    Table { t0: f64, dt: f64, values: Vec<f64> },
    Builtin(Builtin),
}

impl CouplingSchedule {
    pub fn constant(value: f64) -> Self {
        CouplingSchedule::Constant { value }
    }

    pub fn is_zero_constant(&self) -> bool {
        matches!(self, CouplingSchedule::Constant { value } if *value == 0.0)
    }

    /// Evaluate at grid index k of the history.
    pub fn value_at_index(&self, history: &StateHistory, k: usize) -> Result<f64> {
        let t = history.time(k);
        let v = match self {
            CouplingSchedule::Constant { value } => *value,
            CouplingSchedule::Table { t0, dt, values } => {
                if values.is_empty() {
                    return Err(Error::Config("empty coupling table".into()));
                }
                let x = ((t - t0) / dt + 1e-9).floor();
                let i = if x < 0.0 { 0 } else { (x as usize).min(values.len() - 1) };
                values[i]
            }
            CouplingSchedule::Builtin(b) => match b {
                Builtin::FidelityPolynomial { distance, coefficients } => {
                    let s = history.steps_for_distance(*distance)?;
                    if s > k {
                        return Err(Error::MemoryUnderflow { requested: t - distance, t0: history.t0() });
                    }
                    let f = linalg::trace_product(history.state(k - s).matrix(), history.state(k).matrix()).re;
                    coefficients.iter().rev().fold(0.0, |acc, &ck| acc * f + ck)
                }
                Builtin::QubitReformulation { target, distance, coupling } => {
                    let s = history.steps_for_distance(*distance)?;
                    if s > k {
                        return Err(Error::MemoryUnderflow { requested: t - distance, t0: history.t0() });
                    }
                    let cp = reform::ec_couplings_one_qubit(target, history.state(k), history.state(k - s))?;
                    match coupling {
                        QubitCoupling::Present => cp.lambda_t,
                        QubitCoupling::Past => cp.lambda_tma,
                        QubitCoupling::AntiCommutator => cp.lambda_r,
                        QubitCoupling::Commutator => cp.lambda_i,
                    }
                }
                Builtin::LandingScale { xi, delta_e, p0_ground } => {
                    crate::deform::landing_schedule(*xi, *delta_e, *p0_ground, t)?.0
                }
                Builtin::LandingDrag { xi } => -xi.abs(),
            },
        };
        if !v.is_finite() {
            return Err(Error::NonFiniteCoupling { t });
        }
        Ok(v)
    }

    pub fn value(&self, history: &StateHistory, t: f64) -> Result<f64> {
        self.value_at_index(history, history.index_of(t)?)
    }
}

/// One (monomial, coupling) pair of a spec.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpecTerm {
    #[serde(flatten)]
    pub monomial: MonomialTerm,
    pub coupling: CouplingSchedule,
}

/// Declarative history-dependent Hamiltonian: `sqt_part + Σ λ_k B_k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ECHamiltonianSpec {
    pub dim: usize,
    #[serde(with = "serde_cmatrix")]
    pub sqt_part: CMatrix,
    #[serde(default)]
    pub terms: Vec<SpecTerm>,
    #[serde(default)]
    pub label: String,
}

impl ECHamiltonianSpec {
    /// Spec with only a history-independent part.
    pub fn sqt(h: CMatrix) -> Self {
        Self { dim: h.nrows(), sqt_part: h, terms: Vec::new(), label: String::new() }
    }

    /// Spec with zero history-independent part.
    pub fn empty(dim: usize) -> Self {
        Self::sqt(linalg::zeros(dim))
    }

    pub fn with_term(mut self, monomial: MonomialTerm, coupling: CouplingSchedule) -> Self {
        self.terms.push(SpecTerm { monomial, coupling });
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// λ·ρ_{t−a}.
    pub fn one_one(lambda: f64, a: f64) -> Self {
        Self::empty(2).with_term(MonomialTerm::primitive(Parity::Plus, &[a]), CouplingSchedule::constant(lambda))
    }

    /// λ_t ρ_t + λ_{t−a} ρ_{t−a} + λ^R {ρ_{t−a}, ρ_t} + i λ^I [ρ_{t−a}, ρ_t]
    /// added to `sqt_part`.
    pub fn two_two(sqt_part: CMatrix, lambda_t: f64, lambda_tma: f64, lambda_r: f64, lambda_i: f64, a: f64) -> Self {
        Self::sqt(sqt_part)
            .with_term(MonomialTerm::primitive(Parity::Plus, &[0.0]), CouplingSchedule::constant(lambda_t))
            .with_term(MonomialTerm::primitive(Parity::Plus, &[a]), CouplingSchedule::constant(lambda_tma))
            .with_term(MonomialTerm::primitive(Parity::Plus, &[a, 0.0]), CouplingSchedule::constant(lambda_r))
            .with_term(MonomialTerm::primitive(Parity::Minus, &[a, 0.0]), CouplingSchedule::constant(lambda_i))
    }

    /// κ ρ_{t−a} ρ_{t−b} ρ_t + h.c. with κ = κ^R + iκ^I.
    pub fn three_three(sqt_part: CMatrix, kappa_r: f64, kappa_i: f64, a: f64, b: f64) -> Self {
        Self::sqt(sqt_part)
            .with_term(MonomialTerm::primitive(Parity::Plus, &[a, b, 0.0]), CouplingSchedule::constant(kappa_r))
            .with_term(MonomialTerm::primitive(Parity::Minus, &[a, b, 0.0]), CouplingSchedule::constant(kappa_i))
    }

    /// Adds ν·(ρ_t)^T for a qubit, written as sandwiched history monomials:
    /// ρ^T = ½(ρ + σ¹ρσ¹ − σ²ρσ² + σ³ρσ³) in the computational basis.
    pub fn with_transpose_term(mut self, nu: f64) -> Self {
        for (k, sign) in [(0usize, 1.0), (1, 1.0), (2, -1.0), (3, 1.0)] {
            let p = linalg::pauli(k);
            self = self.with_term(
                MonomialTerm::sandwiched(Parity::Plus, 0.0, p.clone(), p),
                CouplingSchedule::constant(0.5 * sign * nu),
            );
        }
        self
    }

    /// Largest memory distance a_max.
    pub fn a_max(&self) -> f64 {
        self.terms.iter().map(|t| t.monomial.max_distance()).fold(0.0, f64::max)
    }

    /// Distinct memory distances (ascending), including 0 if present.
    pub fn distances(&self) -> Vec<f64> {
        let mut d: Vec<f64> = self.terms.iter().flat_map(|t| t.monomial.factors.iter().map(|f| f.distance)).collect();
        d.sort_by(f64::total_cmp);
        d.dedup_by(|x, y| (*x - *y).abs() < 1e-12);
        d
    }

    /// N = number of distinct memory distances.
    pub fn n_distances(&self) -> usize {
        self.distances().len()
    }

    /// L = largest number of factors in a monomial.
    pub fn max_length(&self) -> usize {
        self.terms.iter().map(|t| t.monomial.len()).max().unwrap_or(0)
    }

    /// Check shapes, Hermiticity and grid alignment for step `dt`.
    pub fn validate(&self, dt: f64) -> Result<()> {
        if self.sqt_part.nrows() != self.dim || self.sqt_part.ncols() != self.dim {
            return Err(Error::Config(format!("sqt_part must be {0}x{0}", self.dim)));
        }
        let r = linalg::hermiticity_residual(&self.sqt_part);
        if r > 1e-10 {
            return Err(Error::NonHermitian { residual: r });
        }
        for term in &self.terms {
            term.monomial.check_shape()?;
            for a in &term.monomial.sandwiches {
                if a.nrows() != self.dim || a.ncols() != self.dim {
                    return Err(Error::Config("sandwich operator has the wrong dimension".into()));
                }
            }
            for f in &term.monomial.factors {
                qstate::steps_for_distance(f.distance, dt)?;
                if let Some(sub) = &f.subsystem {
                    if sub.dims.iter().product::<usize>() != self.dim || sub.index >= sub.dims.len() {
                        return Err(Error::Config("subsystem selector does not match the dimension".into()));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Instantaneous Hamiltonian ℍ_t for the history up to (and including) t.
pub fn assemble(spec: &ECHamiltonianSpec, history: &StateHistory, t: f64) -> Result<CMatrix> {
    assemble_at_index(spec, history, history.index_of(t)?)
}

pub(crate) fn assemble_at_index(spec: &ECHamiltonianSpec, history: &StateHistory, k: usize) -> Result<CMatrix> {
    let mut h = spec.sqt_part.clone();
    for term in &spec.terms {
        let lambda = term.coupling.value_at_index(history, k)?;
        if lambda == 0.0 {
            continue;
        }
        let b = term.monomial.basis_operator_at_index(history, k)?;
        h += b * c(lambda, 0.0);
    }
    Ok(h)
}

/// Σ_k |⟨k|Ψ⟩|² |k⟩⟨k| = Σ_k P_k ρ P_k for a complete rank-1 projector set.
pub fn gross_pitaevskii(psi: &PureState, basis: &[CMatrix]) -> Result<CMatrix> {
    let d = psi.dim();
    let mut sum = linalg::zeros(d);
    for p in basis {
        if p.nrows() != d || p.ncols() != d {
            return Err(Error::IncompleteBasis);
        }
        let idem = linalg::max_abs_diff(&(p * p), p);
        if linalg::hermiticity_residual(p) > 1e-10 || idem > 1e-10 || (p.trace().re - 1.0).abs() > 1e-10 {
            return Err(Error::IncompleteBasis);
        }
        sum += p;
    }
    if basis.len() != d || linalg::max_abs_diff(&sum, &linalg::identity(d)) > 1e-10 {
        return Err(Error::IncompleteBasis);
    }
    let rho = psi.density();
    Ok(basis.iter().fold(linalg::zeros(d), |acc, p| acc + p * rho.matrix() * p))
}

/// |Tr[ρ(H − H†)]|: vanishes whenever H generates norm-preserving flow on ρ.
pub fn isometry_residual(h: &CMatrix, rho: &CMatrix) -> Result<f64> {
    if h.nrows() != rho.nrows() || !h.is_square() || !rho.is_square() {
        return Err(Error::DimensionMismatch("isometry residual needs equal square matrices".into()));
    }
    Ok(linalg::trace_product(rho, &(h - h.adjoint())).norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{pauli, ONE};

    fn kicked_history(a_steps: usize, dt: f64) -> StateHistory {
        let k = pauli(2) * c(0.9, 0.0) + pauli(3) * c(0.4, 0.0);
        let psi0 = PureState::plus();
        StateHistory::from_pure_states(
            0.0,
            dt,
            (0..=a_steps).map(|n| {
                PureState::from_vector_unchecked(linalg::expm_hermitian(&k, n as f64 * dt) * psi0.amplitudes())
            }),
        )
        .unwrap()
    }

    #[test]
    fn single_factor_literal_doubles_and_assembled_is_bare() {
        let h = kicked_history(20, 0.05);
        let t = 1.0;
        let a = 0.5;
        let term = MonomialTerm::primitive(Parity::Plus, &[a]);
        let rho = h.state_at(t - a).unwrap().matrix().clone();
        let lit = eval_monomial(&term, &h, t).unwrap();
        assert!(linalg::max_abs_diff(&lit, &(&rho * c(2.0, 0.0))) < 1e-14);
        let spec = ECHamiltonianSpec::one_one(3.0, a);
        let hh = assemble(&spec, &h, t).unwrap();
        assert!(linalg::max_abs_diff(&hh, &(&rho * c(3.0, 0.0))) < 1e-14);
    }

    #[test]
    fn two_factor_minus_is_commutator() {
        let h = kicked_history(20, 0.05);
        let (t, a) = (1.0, 0.35);
        let term = MonomialTerm::primitive(Parity::Minus, &[a, 0.0]);
        let ra = h.state_at(t - a).unwrap().matrix().clone();
        let rt = h.state_at(t).unwrap().matrix().clone();
        let lit = eval_monomial(&term, &h, t).unwrap();
        assert!(linalg::max_abs_diff(&lit, &linalg::commutator(&ra, &rt)) < 1e-14);
        assert!(linalg::antihermiticity_residual(&lit) < 1e-14);
    }

    #[test]
    fn example_two_matches_hand_assembly() {
        let h = kicked_history(20, 0.05);
        let (t, a) = (1.0, 0.4);
        let spec = ECHamiltonianSpec::sqt(pauli(1))
            .with_term(
                MonomialTerm::primitive(Parity::Plus, &[a]),
                CouplingSchedule::Builtin(Builtin::FidelityPolynomial { distance: a, coefficients: vec![1.0, -1.0] }),
            )
            .with_term(
                MonomialTerm::new(
                    Parity::Plus,
                    vec![Factor::at(0.0)],
                    vec![linalg::identity(2), pauli(1)],
                )
                .unwrap(),
                CouplingSchedule::constant(5.0),
            )
            .with_term(MonomialTerm::sandwiched(Parity::Plus, 0.0, pauli(3), pauli(3)), CouplingSchedule::constant(1.0));
        let ra = h.state_at(t - a).unwrap().matrix().clone();
        let rt = h.state_at(t).unwrap().matrix().clone();
        let fid = linalg::trace_product(&ra, &rt).re;
        let expected = pauli(1)
            + &ra * c(1.0 - fid, 0.0)
            + linalg::anticommutator(&rt, &pauli(1)) * c(5.0, 0.0)
            + pauli(3) * &rt * pauli(3);
        let got = assemble(&spec, &h, t).unwrap();
        assert!(linalg::max_abs_diff(&got, &expected) < 1e-13);
    }

    #[test]
    fn empty_spec_returns_sqt_part_and_zero_terms_are_inert() {
        let h = kicked_history(10, 0.1);
        let spec = ECHamiltonianSpec::sqt(pauli(1));
        assert_eq!(assemble(&spec, &h, 1.0).unwrap(), pauli(1));
        let base = ECHamiltonianSpec::two_two(pauli(3), 0.0, 0.3, 1.2, -0.7, 0.5);
        let padded = base.clone().with_term(MonomialTerm::primitive(Parity::Plus, &[0.3, 0.0]), CouplingSchedule::constant(0.0));
        assert_eq!(assemble(&base, &h, 1.0).unwrap(), assemble(&padded, &h, 1.0).unwrap());
    }

    #[test]
    fn pure_two_two_equals_rank_two_outer_product_form() {
        let h = kicked_history(20, 0.05);
        let (t, a) = (1.0, 0.45);
        let (lt, la, lr, li) = (0.3, -0.8, 1.1, 0.6);
        let spec = ECHamiltonianSpec::two_two(linalg::zeros(2), lt, la, lr, li, a);
        let ka = h.index_of(t - a).unwrap();
        let kt = h.index_of(t).unwrap();
        let (pa, pt) = (h.vector(ka).unwrap(), h.vector(kt).unwrap());
        let m = pa.dotc(pt);
        let lam = c(lr, li);
        let cross = linalg::outer(pa, pt) * (lam * m);
        let expected = linalg::outer(pa, pa) * c(la, 0.0)
            + linalg::outer(pt, pt) * c(lt, 0.0)
            + &cross
            + cross.adjoint();
        let got = assemble(&spec, &h, t).unwrap();
        assert!(linalg::max_abs_diff(&got, &expected) < 1e-13);
    }

    #[test]
    fn transpose_term_matches_matrix_transpose() {
        let h = kicked_history(10, 0.1);
        let spec = ECHamiltonianSpec::empty(2).with_transpose_term(4.74);
        let rt = h.state_at(1.0).unwrap().matrix().clone();
        let got = assemble(&spec, &h, 1.0).unwrap();
        assert!(linalg::max_abs_diff(&got, &(rt.transpose() * c(4.74, 0.0))) < 1e-14);
    }

    #[test]
    fn memory_underflow_is_reported() {
        let h = kicked_history(10, 0.1);
        let spec = ECHamiltonianSpec::one_one(1.0, 0.5);
        assert!(matches!(assemble(&spec, &h, 0.3), Err(Error::MemoryUnderflow { .. })));
    }

    #[test]
    fn gross_pitaevskii_examples() {
        let basis = vec![
            CMatrix::from_row_slice(2, 2, &[ONE, c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]),
            CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), ONE]),
        ];
        let g = gross_pitaevskii(&PureState::basis(2, 0), &basis).unwrap();
        assert!((g[(0, 0)] - ONE).norm() < 1e-15 && g[(1, 1)].norm() < 1e-15);
        let g = gross_pitaevskii(&PureState::plus(), &basis).unwrap();
        assert!((g[(0, 0)].re - 0.5).abs() < 1e-15 && (g[(1, 1)].re - 0.5).abs() < 1e-15);
        assert!(gross_pitaevskii(&PureState::plus(), &basis[..1]).is_err());
    }

    #[test]
    fn isometry_examples() {
        let rho = PureState::plus().density().into_matrix();
        assert!(isometry_residual(&pauli(1), &rho).unwrap() < 1e-15);
        let r = isometry_residual(&(&rho * I), &rho).unwrap();
        assert!((r - 2.0).abs() < 1e-14);
    }

    #[test]
    fn spec_json_round_trip() {
        let spec = ECHamiltonianSpec::two_two(pauli(3), 0.0, 0.0, 1.15, -0.4, 3.0).with_transpose_term(0.05);
        let json = serde_json::to_string(&spec).unwrap();
        let back: ECHamiltonianSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back, spec);
        assert_eq!(spec.n_distances(), 2);
        assert_eq!(spec.max_length(), 2);
    }
}
