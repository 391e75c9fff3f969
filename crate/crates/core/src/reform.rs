//! Rewriting an ordinary Hamiltonian as a history-dependent one.
//!
//! Three routes are provided:
//!
//! * one-qubit closed forms expressing H through ρ_t, ρ_{t−a} and their
//!   (anti)commutators ([`ec_couplings_one_qubit`]), together with the
//!   spectrum-only versions for time-independent H
//!   ([`ec_couplings_time_independent`]);
//! * the orthonormal-pair expansion that underlies them
//!   ([`basis_dependent_couplings`]);
//! * a basis-independent linear system `T λ = h` built from trace products
//!   of history monomials ([`build_t_matrix`], [`h_vector_for_target`],
//!   [`solve_couplings`]), valid in any dimension.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::echam::{MonomialTerm, Parity};
use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix, CVector, C64, I, ONE, ZERO};
use crate::qstate::{DensityOperator, StateHistory};

/// Largest admissible history overlap before the couplings are declared
/// degenerate (they scale as (1 − w²)⁻²).
pub const OVERLAP_GUARD: f64 = 1e-8;

/// Default bound on the condition number of T.
pub const MAX_CONDITION: f64 = 1e10;

/// Couplings of the one-qubit form
/// H = λ_t ρ_t + λ_{t−a} ρ_{t−a} + λ^R {ρ_{t−a}, ρ_t} + iλ^I [ρ_{t−a}, ρ_t].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QubitECCouplings {
    pub lambda_t: f64,
    pub lambda_tma: f64,
    pub lambda_r: f64,
    pub lambda_i: f64,
}

impl QubitECCouplings {
    /// Rebuild the Hamiltonian from the couplings and the two states.
    pub fn assemble(&self, rho_t: &CMatrix, rho_tma: &CMatrix) -> CMatrix {
        rho_t * c(self.lambda_t, 0.0)
            + rho_tma * c(self.lambda_tma, 0.0)
            + linalg::anticommutator(rho_tma, rho_t) * c(self.lambda_r, 0.0)
            + linalg::commutator(rho_tma, rho_t) * c(0.0, self.lambda_i)
    }

    /// λ̄^R = λ_{t−a} + λ^R, the combination that survives in the dynamics.
    pub fn lambda_bar_r(&self) -> f64 {
        self.lambda_tma + self.lambda_r
    }

    pub fn is_finite(&self) -> bool {
        [self.lambda_t, self.lambda_tma, self.lambda_r, self.lambda_i].iter().all(|x| x.is_finite())
    }
}

fn require_qubit(d: usize) -> Result<()> {
    if d != 2 {
        return Err(Error::NonQubit(d));
    }
    Ok(())
}

/// One-qubit couplings reproducing `h` exactly from two pure states.
pub fn ec_couplings_one_qubit(h: &CMatrix, rho_t: &DensityOperator, rho_tma: &DensityOperator) -> Result<QubitECCouplings> {
    require_qubit(h.nrows())?;
    require_qubit(rho_t.dim())?;
    require_qubit(rho_tma.dim())?;
    let r = linalg::hermiticity_residual(h);
    if r > 1e-10 {
        return Err(Error::NonHermitian { residual: r });
    }
    if !rho_t.is_pure(1e-8) || !rho_tma.is_pure(1e-8) {
        return Err(Error::InvalidState("one-qubit reformulation needs pure states".into()));
    }
    let (rt, ra) = (rho_t.matrix(), rho_tma.matrix());
    let w2 = linalg::trace_product(ra, rt).re.clamp(0.0, 1.0);
    let w = w2.sqrt();
    if w >= 1.0 - OVERLAP_GUARD {
        return Err(Error::DegenerateOverlap { w });
    }
    let g2 = 1.0 - w2;
    let g4 = g2 * g2;
    let x = (ra * h * rt).trace();
    let tt = linalg::trace_product(rt, h).re;
    let ta = linalg::trace_product(ra, h).re;
    let out = QubitECCouplings {
        lambda_t: (tt + w2 * ta - 2.0 * x.re) / g4,
        lambda_tma: (ta + w2 * tt - 2.0 * x.re) / g4,
        lambda_r: ((1.0 + 1.0 / w2) * x.re - (ta + tt)) / g4,
        lambda_i: -(1.0 - 1.0 / w2) * x.im / g4,
    };
    if !out.is_finite() {
        return Err(Error::DegenerateOverlap { w });
    }
    Ok(out)
}

/// Coefficients of a qubit Hamiltonian in the orthonormal pair
/// {|Ψ_t⟩, |Ψ̂_{t−a}⟩}, where |Ψ̂_{t−a}⟩ = (e^{iα}|Ψ_{t−a}⟩ − w|Ψ_t⟩)/γ and
/// ⟨Ψ_{t−a}|Ψ_t⟩ = w e^{iα}:
///
/// H = λ̂_t |Ψ_t⟩⟨Ψ_t| + λ̂_{t−a} |Ψ̂⟩⟨Ψ̂| + λ̂_× |Ψ̂⟩⟨Ψ_t| + λ̂_×* |Ψ_t⟩⟨Ψ̂|.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairCouplings {
    pub lambda_t: f64,
    pub lambda_tma: f64,
    pub cross: C64,
}

/// The orthonormalized partner |Ψ̂_{t−a}⟩ of |Ψ_t⟩.
pub fn orthonormal_partner(psi_t: &CVector, psi_tma: &CVector) -> Result<CVector> {
    let m = psi_tma.dotc(psi_t);
    let w = m.norm();
    if w >= 1.0 - OVERLAP_GUARD {
        return Err(Error::DegenerateOverlap { w });
    }
    let phase = if w > 0.0 { m / w } else { ONE };
    let gamma = (1.0 - w * w).sqrt();
    Ok((psi_tma * phase - psi_t * c(w, 0.0)) / c(gamma, 0.0))
}

/// Pair-basis expansion of a qubit Hamiltonian (see [`PairCouplings`]).
pub fn basis_dependent_couplings(h: &CMatrix, psi_t: &CVector, psi_tma: &CVector) -> Result<PairCouplings> {
    require_qubit(h.nrows())?;
    require_qubit(psi_t.len())?;
    let w = psi_tma.dotc(psi_t).norm();
    if w >= 1.0 - OVERLAP_GUARD {
        return Err(Error::DegenerateOverlap { w });
    }
    let g = (1.0 - w * w).sqrt();
    let (rt, ra) = (linalg::outer(psi_t, psi_t), linalg::outer(psi_tma, psi_tma));
    let x = (&ra * h * &rt).trace();
    let tt = linalg::trace_product(&rt, h).re;
    let ta = linalg::trace_product(&ra, h).re;
    if w == 0.0 {
        let hat = orthonormal_partner(psi_t, psi_tma)?;
        return Ok(PairCouplings { lambda_t: tt, lambda_tma: ta, cross: (hat.adjoint() * h * psi_t)[(0, 0)] });
    }
    Ok(PairCouplings {
        lambda_t: tt,
        lambda_tma: (ta - 2.0 * x.re + w * w * tt) / (g * g),
        cross: x / (g * w) - c(w * tt / g, 0.0),
    })
}

impl PairCouplings {
    pub fn assemble(&self, psi_t: &CVector, psi_tma: &CVector) -> Result<CMatrix> {
        let hat = orthonormal_partner(psi_t, psi_tma)?;
        Ok(linalg::outer(psi_t, psi_t) * c(self.lambda_t, 0.0)
            + linalg::outer(&hat, &hat) * c(self.lambda_tma, 0.0)
            + linalg::outer(&hat, psi_t) * self.cross
            + linalg::outer(psi_t, &hat) * self.cross.conj())
    }
}

/// Closed-form history quantities for a qubit evolving under a
/// time-independent H with levels E1 < E2 and initial population imbalance
/// s0 = p_2 − p_1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FidelityPhase {
    /// F = w² = ½[1 + s0² + (1 − s0²) cos(aΔE)].
    pub fidelity: f64,
    /// α = arg⟨Ψ_{t−a}|Ψ_t⟩.
    pub phase: f64,
    /// ∂F/∂a.
    pub d_fidelity: f64,
    /// ∂α/∂a.
    pub d_phase: f64,
    /// ν = ⟨H⟩ = (E1 + E2 + s0ΔE)/2.
    pub nu: f64,
}

fn check_spectrum(e1: f64, e2: f64, s0: f64) -> Result<()> {
    if !(e2 > e1) {
        return Err(Error::Config(format!("levels must satisfy E2 > E1, got ({e1}, {e2})")));
    }
    if !(-1.0..=1.0).contains(&s0) {
        return Err(Error::Config(format!("population imbalance s0 = {s0} outside [−1, 1]")));
    }
    Ok(())
}

pub fn fidelity_phase_closed_form(e1: f64, e2: f64, s0: f64, a: f64) -> Result<FidelityPhase> {
    check_spectrum(e1, e2, s0)?;
    let de = e2 - e1;
    let (p1, p2) = ((1.0 - s0) / 2.0, (1.0 + s0) / 2.0);
    let cs = (a * de).cos();
    let fidelity = 0.5 * (1.0 + s0 * s0 + (1.0 - s0 * s0) * cs);
    let m = C64::from_polar(p1, -a * e1) + C64::from_polar(p2, -a * e2);
    let d_phase = if fidelity > 0.0 {
        -(p1 * p1 * e1 + p2 * p2 * e2 + p1 * p2 * (e1 + e2) * cs) / fidelity
    } else {
        f64::NAN
    };
    Ok(FidelityPhase {
        fidelity,
        phase: m.arg(),
        d_fidelity: -0.5 * (1.0 - s0 * s0) * de * (a * de).sin(),
        d_phase,
        nu: 0.5 * (e1 + e2 + s0 * de),
    })
}

/// The two couplings (λ̄^R, λ^I) that govern the one-qubit reformulation of
/// a time-independent H along its own trajectory.
///
/// At s0 = ±1 the states never move and the couplings are undetermined; the
/// convention λ^I = 0, λ̄^R = 2 ± ΔE − (E1 + E2) cos(aΔE) is returned there.
pub fn ec_couplings_time_independent(e1: f64, e2: f64, s0: f64, a: f64) -> Result<(f64, f64)> {
    check_spectrum(e1, e2, s0)?;
    let de = e2 - e1;
    let cs = (a * de).cos();
    if s0.abs() == 1.0 {
        return Ok((2.0 + s0 * de - (e1 + e2) * cs, 0.0));
    }
    if 1.0 - s0.abs() < 1e-12 {
        return Err(Error::SingularMemoryDistance);
    }
    let fp = fidelity_phase_closed_form(e1, e2, s0, a)?;
    let gamma2 = 1.0 - fp.fidelity;
    let denom = (1.0 - cs) * (1.0 + s0 * s0 + (1.0 - s0 * s0) * cs);
    if gamma2 < 1e-12 || denom.abs() < 1e-12 || fp.fidelity < 1e-12 {
        return Err(Error::SingularMemoryDistance);
    }
    let lambda_bar_r = -(fp.d_phase + fp.nu) / gamma2;
    let lambda_i = -de * (a * de).sin() / denom;
    Ok((lambda_bar_r, lambda_i))
}

/// Closed-form couplings that rewrite H = σ³ along its own evolution, for an
/// initial state with ν = ⟨Ψ_0|σ³|Ψ_0⟩ and memory distance a:
/// λ_t = λ_{t−a} = −ν/γ², λ^R = ν/(γw)², λ^I = −cot(a)/w², with
/// w² = cos²a + ν² sin²a and γ² = (1 − ν²) sin²a.
pub fn sigma3_couplings(nu: f64, a: f64) -> Result<QubitECCouplings> {
    let (s, co) = a.sin_cos();
    let w2 = co * co + nu * nu * s * s;
    let gamma2 = (1.0 - nu * nu) * s * s;
    if gamma2 < 1e-12 || w2 < 1e-12 {
        return Err(Error::SingularMemoryDistance);
    }
    let past = -nu / gamma2;
    Ok(QubitECCouplings {
        lambda_t: past,
        lambda_tma: past,
        lambda_r: nu / (gamma2 * w2),
        lambda_i: -co / s / w2,
    })
}

/// Residuals of the two trace constraints that any SQT-equivalent one-qubit
/// coupling set must satisfy:
/// r1 = λ_t + λ_{t−a} + 2w²λ^R − Tr H, r2 = λ_t + w²(λ_{t−a} + 2λ^R) − Tr[Hρ_t].
pub fn sqt_constraint_residual(cp: &QubitECCouplings, w: f64, tr_h: f64, tr_h_rho: f64) -> (f64, f64) {
    let w2 = w * w;
    let r1 = cp.lambda_t + cp.lambda_tma + 2.0 * w2 * cp.lambda_r - tr_h;
    let r2 = cp.lambda_t + w2 * (cp.lambda_tma + 2.0 * cp.lambda_r) - tr_h_rho;
    (r1, r2)
}

/// One-qubit couplings at every grid index where ρ_{t−a} is stored.
pub fn couplings_along_history(h: &CMatrix, history: &StateHistory, a: f64) -> Result<Vec<(f64, QubitECCouplings)>> {
    let s = history.steps_for_distance(a)?;
    (s..history.len())
        .map(|k| Ok((history.time(k), ec_couplings_one_qubit(h, history.state(k), history.state(k - s))?)))
        .collect()
}

/// Largest violations of the conditions a one-qubit history form must meet
/// to equal a fixed Hamiltonian `H` along a history.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SqtWitness {
    /// max |λ_t + λ_{t−a} + 2w²λ^R − Tr H|.
    pub trace: f64,
    /// max |λ_t + w²(λ_{t−a} + 2λ^R) − Tr[Hρ_t]|.
    pub energy: f64,
    /// max |λ^I − λ^I[H]|, the commutator coupling that H itself induces.
    pub commutator: f64,
    /// Grid points skipped because ρ_{t−a} and ρ_t coincide.
    pub skipped: usize,
}

impl SqtWitness {
    pub fn max(&self) -> f64 {
        self.trace.max(self.energy).max(self.commutator)
    }
}

/// Evaluate [`SqtWitness`] for couplings given at grid indices of `history`
/// against the candidate Hamiltonian `h`.
pub fn sqt_witness(
    couplings: &[(usize, QubitECCouplings)],
    h: &CMatrix,
    history: &StateHistory,
    a: f64,
) -> Result<SqtWitness> {
    let s = history.steps_for_distance(a)?;
    let tr_h = linalg::trace(h).re;
    let mut out = SqtWitness::default();
    for &(k, cp) in couplings {
        if k < s || k >= history.len() {
            return Err(Error::MemoryUnderflow { requested: history.time(k.min(history.len() - 1)) - a, t0: history.t0() });
        }
        let (now, past) = (history.state(k), history.state(k - s));
        let w2 = linalg::trace_product(past.matrix(), now.matrix()).re.clamp(0.0, 1.0);
        let (r1, r2) = sqt_constraint_residual(&cp, w2.sqrt(), tr_h, linalg::trace_product(h, now.matrix()).re);
        out.trace = out.trace.max(r1.abs());
        out.energy = out.energy.max(r2.abs());
        match ec_couplings_one_qubit(h, now, past) {
            Ok(induced) => out.commutator = out.commutator.max((cp.lambda_i - induced.lambda_i).abs()),
            Err(Error::DegenerateOverlap { .. }) => out.skipped += 1,
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

// ---- basis-independent recipe ------------------------------------------------

/// Linear system T λ = h for expressing a target through a monomial basis.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingSystem {
    pub basis: Vec<MonomialTerm>,
    /// T_sr = Tr[B_s B_r] with B the Hermitian basis operators.
    pub t_mat: DMatrix<f64>,
    /// h_s = Tr[B_s H].
    pub h_vec: DVector<f64>,
}

impl CouplingSystem {
    pub fn build(target: &CMatrix, basis: &[MonomialTerm], history: &StateHistory, t: f64) -> Result<Self> {
        Ok(Self {
            basis: basis.to_vec(),
            t_mat: build_t_matrix(basis, history, t)?,
            h_vec: h_vector_for_target(target, basis, history, t)?,
        })
    }

    pub fn len(&self) -> usize {
        self.basis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.basis.is_empty()
    }
}

fn basis_operators(basis: &[MonomialTerm], history: &StateHistory, t: f64) -> Result<Vec<CMatrix>> {
    basis.iter().map(|m| m.basis_operator(history, t)).collect()
}

/// T_sr = Tr[B_s B_r] computed by direct trace products.
pub fn build_t_matrix(basis: &[MonomialTerm], history: &StateHistory, t: f64) -> Result<DMatrix<f64>> {
    let ops = basis_operators(basis, history, t)?;
    let n = ops.len();
    Ok(DMatrix::from_fn(n, n, |s, r| linalg::trace_product(&ops[s], &ops[r]).re))
}

/// h_s = Tr[B_s H] computed by direct trace products.
pub fn h_vector_for_target(target: &CMatrix, basis: &[MonomialTerm], history: &StateHistory, t: f64) -> Result<DVector<f64>> {
    let r = linalg::hermiticity_residual(target);
    if r > 1e-10 {
        return Err(Error::NonHermitian { residual: r });
    }
    let ops = basis_operators(basis, history, t)?;
    Ok(DVector::from_iterator(ops.len(), ops.iter().map(|b| linalg::trace_product(b, target).re)))
}

/// B = c M + d M† for each basis term.
fn basis_weights(term: &MonomialTerm) -> (C64, C64) {
    match term.parity {
        Parity::Plus if term.has_hermitian_content() => (ONE, ZERO),
        Parity::Plus => (ONE, ONE),
        Parity::Minus => (I, -I),
    }
}

/// Rank-one data of a primitive monomial on a pure history:
/// M = μ |ψ_first⟩⟨ψ_last|.
struct ChainData {
    mu: C64,
    first: CVector,
    last: CVector,
}

fn chain_data(term: &MonomialTerm, history: &StateHistory, k: usize) -> Result<ChainData> {
    if !term.is_primitive() || term.factors.iter().any(|f| f.power != 1 || f.subsystem.is_some()) {
        return Err(Error::Config("closed-form trace products need primitive monomials".into()));
    }
    let mut idx = Vec::with_capacity(term.len());
    for f in &term.factors {
        let s = history.steps_for_distance(f.distance)?;
        if s > k {
            return Err(Error::MemoryUnderflow { requested: history.time(k) - f.distance, t0: history.t0() });
        }
        idx.push(k - s);
    }
    let vec = |i: usize| history.vector(i).cloned().ok_or(Error::PhaseUndefinedForMixed);
    let mut mu = ONE;
    for pair in idx.windows(2) {
        mu *= vec(pair[0])?.dotc(&vec(pair[1])?);
    }
    Ok(ChainData { mu, first: vec(idx[0])?, last: vec(*idx.last().expect("nonempty"))? })
}

/// T computed from the rank-one chain structure of pure-history monomials:
/// Tr[M_s M_r] = μ_s μ_r ⟨ψ_{s,L}|ψ_{r,1}⟩⟨ψ_{r,L}|ψ_{s,1}⟩ and
/// Tr[M_s M_r†] = μ_s μ_r* ⟨ψ_{s,L}|ψ_{r,L}⟩⟨ψ_{r,1}|ψ_{s,1}⟩.
pub fn build_t_matrix_pure(basis: &[MonomialTerm], history: &StateHistory, t: f64) -> Result<DMatrix<f64>> {
    if !history.purity_flag() {
        return Err(Error::PhaseUndefinedForMixed);
    }
    let k = history.index_of(t)?;
    let chains: Vec<ChainData> = basis.iter().map(|m| chain_data(m, history, k)).collect::<Result<_>>()?;
    let n = basis.len();
    Ok(DMatrix::from_fn(n, n, |s, r| {
        let (a, b) = (&chains[s], &chains[r]);
        let p = a.mu * b.mu * a.last.dotc(&b.first) * b.last.dotc(&a.first);
        let q = a.mu * b.mu.conj() * a.last.dotc(&b.last) * b.first.dotc(&a.first);
        let (cs, ds) = basis_weights(&basis[s]);
        let (cr, dr) = basis_weights(&basis[r]);
        (cs * cr * p + cs * dr * q + ds * cr * q.conj() + ds * dr * p.conj()).re
    }))
}

/// h for a time-independent target H = Σ E_n |n⟩⟨n| along its own
/// trajectory, from the spectrum and the (conserved) level populations only.
///
/// With overlaps m_{τ,τ'} = Σ p_n e^{−iE_n(τ'−τ)} chained along the factor
/// times τ_1 … τ_L, each term is z = μ Σ p_n E_n e^{−iE_n(τ_1−τ_L)} and
/// h = 2 Re z (+), Re z (bare), −2 Im z (−); equivalently 2w Σ p_n E_n
/// cos(E_n(τ_1 − τ_L) − α) and its sine partner with μ = w e^{iα}.
pub fn h_vector_time_independent(energies: &[f64], populations: &[f64], basis: &[MonomialTerm], t: f64) -> Result<DVector<f64>> {
    if energies.len() != populations.len() {
        return Err(Error::DimensionMismatch("energies and populations differ in length".into()));
    }
    let overlap = |delta: f64| -> C64 {
        energies.iter().zip(populations).map(|(&e, &p)| C64::from_polar(p, -e * delta)).sum()
    };
    let mut out = Vec::with_capacity(basis.len());
    for term in basis {
        if !term.is_primitive() || term.factors.iter().any(|f| f.power != 1 || f.subsystem.is_some()) {
            return Err(Error::Config("closed-form h needs primitive monomials".into()));
        }
        let taus: Vec<f64> = term.factors.iter().map(|f| t - f.distance).collect();
        let mu: C64 = taus.windows(2).map(|p| overlap(p[1] - p[0])).product();
        let delta = taus[0] - taus[taus.len() - 1];
        let z = mu * energies.iter().zip(populations).map(|(&e, &p)| C64::from_polar(p * e, -e * delta)).sum::<C64>();
        out.push(match term.parity {
            Parity::Plus if term.has_hermitian_content() => z.re,
            Parity::Plus => 2.0 * z.re,
            Parity::Minus => -2.0 * z.im,
        });
    }
    Ok(DVector::from_vec(out))
}

/// Condition number of T from its singular values.
pub fn condition_number(t_mat: &DMatrix<f64>) -> f64 {
    let sv = t_mat.clone().svd(false, false).singular_values;
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// λ = T⁻¹ h with the default condition bound.
pub fn solve_couplings(system: &CouplingSystem) -> Result<Vec<f64>> {
    solve_couplings_with_bound(system, MAX_CONDITION)
}

/// λ = T⁻¹ h via SVD; fails with `SingularT` when cond(T) > `max_cond`.
pub fn solve_couplings_with_bound(system: &CouplingSystem, max_cond: f64) -> Result<Vec<f64>> {
    let n = system.len();
    if system.t_mat.nrows() != n || system.t_mat.ncols() != n || system.h_vec.len() != n {
        return Err(Error::DimensionMismatch("T, h and basis sizes differ".into()));
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let cond = condition_number(&system.t_mat);
    if !(cond <= max_cond) {
        return Err(Error::SingularT { cond });
    }
    let svd = system.t_mat.clone().svd(true, true);
    let x = svd.solve(&system.h_vec, 0.0).map_err(|e| Error::Config(e.to_string()))?;
    Ok(x.iter().cloned().collect())
}

/// Σ λ_s B_s at time t.
pub fn reassemble(basis: &[MonomialTerm], lambdas: &[f64], history: &StateHistory, t: f64) -> Result<CMatrix> {
    if basis.len() != lambdas.len() {
        return Err(Error::DimensionMismatch("basis and coupling counts differ".into()));
    }
    let mut h = linalg::zeros(history.dim());
    for (m, &l) in basis.iter().zip(lambdas) {
        h += m.basis_operator(history, t)? * c(l, 0.0);
    }
    Ok(h)
}

/// Number of distinct basis operators available from N distances and
/// lengths up to L: Σ_{k=1}^{L} N^k.
pub fn basis_capacity(n_distances: usize, max_length: u32) -> usize {
    (1..=max_length).map(|k| n_distances.pow(k)).sum()
}

/// The [[2,2]] basis {ρ_t, ρ_{t−a}, ρ_{t−a}ρ_t (+), ρ_{t−a}ρ_t (−)}.
pub fn qubit_basis(a: f64) -> Vec<MonomialTerm> {
    vec![
        MonomialTerm::primitive(Parity::Plus, &[0.0]),
        MonomialTerm::primitive(Parity::Plus, &[a]),
        MonomialTerm::primitive(Parity::Plus, &[a, 0.0]),
        MonomialTerm::primitive(Parity::Minus, &[a, 0.0]),
    ]
}
