//! Gate-level simulation of the protocol that realises history-dependent
//! dynamics with ordinary (history-independent) quantum operations.
//!
//! The building blocks are
//!
//! * an interferometer that writes a scalar `λ = Tr[UΓ]` into the amplitude
//!   of a control qubit, `|ψ_λ⟩ = |−⟩ − iδλ|+⟩` ([`prepare_psi_lambda`]);
//! * controlled-SWAP gates that, after postselecting the control, apply the
//!   non-Hermitian half-step `e^{−iδλρρ′} σ e^{iδλ*ρ′ρ}` to a simulator
//!   register ([`dme_halfstep`]);
//! * the Hermitian completion of that half-step ([`monomial_step`]) and a
//!   first-order Trotter driver over all monomials ([`trotter_simulate`],
//!   [`evolve_ec_circuit`]);
//! * the tomography-style general path, which splits a Hermitian generator
//!   into positive parts and exponentiates each by repeated partial SWAPs
//!   ([`split_hamiltonian`], [`dme_exponentiate`], [`general_protocol_step`]).
//!
//! Every state is a dense matrix on the joint register; postselection keeps
//! the branch weight in the trace instead of renormalising, so success
//! probabilities stay visible.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::echam::{Builtin, CouplingSchedule, ECHamiltonianSpec, Parity};
use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix, C64, I, ONE, ZERO};
use crate::qstate::{self, DensityOperator, StateHistory};

/// Largest admissible `δ·|λ|` for one interferometric step.
pub const MAX_STEP_COUPLING: f64 = 0.1;

/// Constant in the reported Trotter bound `C·M·(Λt)²/m`.
pub const TROTTER_CONSTANT: f64 = 2.0;

// ---------------------------------------------------------------------------
// Register states
// ---------------------------------------------------------------------------

/// Density matrix of a multi-part register, possibly subnormalised after a
/// selective measurement.  `norm()` is the trace, i.e. the probability
/// weight of the branch that was kept.
#[derive(Debug, Clone, PartialEq)]
pub struct RegisterState {
    dims: Vec<usize>,
    matrix: CMatrix,
}

impl RegisterState {
    pub fn new(dims: Vec<usize>, matrix: CMatrix) -> Result<Self> {
        let d: usize = dims.iter().product();
        if dims.is_empty() || matrix.nrows() != d || matrix.ncols() != d {
            return Err(Error::DimensionMismatch(format!(
                "register dims {dims:?} do not match a {}x{} matrix",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let r = linalg::hermiticity_residual(&matrix);
        if r > 1e-10 {
            return Err(Error::InvalidState(format!("register state is not Hermitian (residual {r:.3e})")));
        }
        let tr = linalg::trace(&matrix);
        if tr.re > 1.0 + 1e-10 || tr.re < -1e-12 {
            return Err(Error::InvalidState(format!("register norm {} outside [0, 1]", tr.re)));
        }
        Ok(Self { dims, matrix })
    }

    pub fn from_density(rho: &DensityOperator) -> Self {
        Self { dims: vec![rho.dim()], matrix: rho.matrix().clone() }
    }

    /// Computational basis state |k⟩ of a `d`-level system.
    pub fn basis(d: usize, k: usize) -> Self {
        let mut m = linalg::zeros(d);
        m[(k, k)] = ONE;
        Self { dims: vec![d], matrix: m }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    /// Branch weight Tr[ρ].
    pub fn norm(&self) -> f64 {
        linalg::trace(&self.matrix).re
    }

    /// `self ⊗ other`.
    pub fn tensor(&self, other: &RegisterState) -> RegisterState {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        RegisterState { dims, matrix: linalg::kron(&self.matrix, &other.matrix) }
    }

    /// `U ρ U†` with a full-register gate.
    pub fn apply(&self, gate: &CMatrix) -> Result<RegisterState> {
        if gate.nrows() != self.dim() || gate.ncols() != self.dim() {
            return Err(Error::DimensionMismatch("gate does not match the register".into()));
        }
        Ok(RegisterState { dims: self.dims.clone(), matrix: linalg::conjugate(gate, &self.matrix) })
    }

    /// Apply `gate` to the listed subsystems (in that order).
    pub fn apply_on(&self, gate: &CMatrix, targets: &[usize]) -> Result<RegisterState> {
        self.apply(&embed_gate(gate, &self.dims, targets)?)
    }

    /// Keep the branch in which subsystem `index` is found in |k⟩.  The
    /// result is subnormalised by the outcome probability.
    pub fn postselect(&self, index: usize, k: usize) -> Result<RegisterState> {
        let d = *self
            .dims
            .get(index)
            .ok_or_else(|| Error::DimensionMismatch(format!("subsystem {index} out of range")))?;
        if k >= d {
            return Err(Error::DimensionMismatch(format!("outcome {k} out of range for a {d}-level system")));
        }
        let mut p = linalg::zeros(d);
        p[(k, k)] = ONE;
        let proj = embed_gate(&p, &self.dims, &[index])?;
        Ok(RegisterState { dims: self.dims.clone(), matrix: &proj * &self.matrix * &proj })
    }

    /// All branches of a computational-basis measurement of subsystem
    /// `index`; their norms add up to `self.norm()`.
    pub fn measure(&self, index: usize) -> Result<Vec<RegisterState>> {
        let d = *self
            .dims
            .get(index)
            .ok_or_else(|| Error::DimensionMismatch(format!("subsystem {index} out of range")))?;
        (0..d).map(|k| self.postselect(index, k)).collect()
    }

    /// Reduced state of subsystem `keep`, weight preserved.
    pub fn marginal(&self, keep: usize) -> Result<RegisterState> {
        let m = qstate::partial_trace_matrix(&self.matrix, &self.dims, keep)?;
        Ok(RegisterState { dims: vec![self.dims[keep]], matrix: m })
    }

    /// Rescaled to unit trace.
    pub fn normalized(&self) -> Result<RegisterState> {
        let n = self.norm();
        if !(n > 0.0) {
            return Err(Error::InvalidState("cannot normalise a zero-weight branch".into()));
        }
        Ok(RegisterState { dims: self.dims.clone(), matrix: &self.matrix / c(n, 0.0) })
    }

    /// Unit-trace density operator of a single-part register.
    pub fn to_density(&self) -> Result<DensityOperator> {
        let m = linalg::hermitian_part(self.normalized()?.matrix());
        DensityOperator::new(m)
    }
}

// ---------------------------------------------------------------------------
// Gates
// ---------------------------------------------------------------------------

/// Which control value triggers a controlled gate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControlOn {
    Zero,
    One,
}

/// Balanced Hadamard gate.
pub fn hadamard() -> CMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    CMatrix::from_row_slice(2, 2, &[c(s, 0.0), c(s, 0.0), c(s, 0.0), c(-s, 0.0)])
}

/// Unbalanced beam splitter `[[sin δ, cos δ], [cos δ, −sin δ]]`.
pub fn unbalanced_hadamard(delta: f64) -> CMatrix {
    let (s, co) = delta.sin_cos();
    CMatrix::from_row_slice(2, 2, &[c(s, 0.0), c(co, 0.0), c(co, 0.0), c(-s, 0.0)])
}

/// Phase shift `e^{iφ}` on the |1⟩ amplitude of the control qubit.
pub fn controlled_phase(phi: f64) -> CMatrix {
    let mut m = linalg::identity(2);
    m[(1, 1)] = C64::from_polar(1.0, phi);
    m
}

/// `|v⟩⟨v| ⊗ U + |v̄⟩⟨v̄| ⊗ 𝟙` with the control as the first factor.
pub fn controlled(u: &CMatrix, on: ControlOn) -> CMatrix {
    let d = u.nrows();
    let mut p = linalg::zeros(2);
    let mut q = linalg::zeros(2);
    let (k, kbar) = match on {
        ControlOn::Zero => (0, 1),
        ControlOn::One => (1, 0),
    };
    p[(k, k)] = ONE;
    q[(kbar, kbar)] = ONE;
    linalg::kron(&p, u) + linalg::kron(&q, &linalg::identity(d))
}

/// SWAP on two `d`-level systems.
pub fn swap(d: usize) -> CMatrix {
    let mut s = linalg::zeros(d * d);
    for i in 0..d {
        for j in 0..d {
            s[(j * d + i, i * d + j)] = ONE;
        }
    }
    s
}

/// Controlled-SWAP (Fredkin) gate on control ⊗ d ⊗ d.
pub fn fredkin(d: usize, on: ControlOn) -> CMatrix {
    controlled(&swap(d), on)
}

/// Cyclic shift `|i_1 i_2 … i_n⟩ ↦ |i_2 … i_n i_1⟩` on `n` systems of
/// dimension `d`.  For `n = 2` this is SWAP; in general
/// `Tr_{1…n−1}[P (A_1 ⊗ … ⊗ A_n)] = A_1 A_2 ⋯ A_n`.
pub fn cyclic_shift(d: usize, n: usize) -> CMatrix {
    let dims = vec![d; n];
    let total = d.pow(n as u32);
    let mut p = linalg::zeros(total);
    let mut digits = vec![0usize; n];
    for col in 0..total {
        decompose(col, &dims, &mut digits);
        let mut row = 0;
        for k in 0..n {
            row = row * d + digits[(k + 1) % n];
        }
        p[(row, col)] = ONE;
    }
    p
}

/// Lift a gate acting on `targets` (in that order) to the full register.
pub fn embed_gate(gate: &CMatrix, dims: &[usize], targets: &[usize]) -> Result<CMatrix> {
    let sub: usize = targets.iter().map(|&t| dims.get(t).copied().unwrap_or(0)).product();
    if targets.is_empty() || gate.nrows() != sub || gate.ncols() != sub {
        return Err(Error::DimensionMismatch(format!(
            "a {}-dim gate cannot act on subsystems {targets:?} of {dims:?}",
            gate.nrows()
        )));
    }
    let mut seen = vec![false; dims.len()];
    for &t in targets {
        if seen[t] {
            return Err(Error::DimensionMismatch(format!("repeated target {t}")));
        }
        seen[t] = true;
    }
    let total: usize = dims.iter().product();
    let mut out = linalg::zeros(total);
    let mut digits = vec![0usize; dims.len()];
    for col in 0..total {
        decompose(col, dims, &mut digits);
        let mut gcol = 0;
        for &t in targets {
            gcol = gcol * dims[t] + digits[t];
        }
        for grow in 0..sub {
            let a = gate[(grow, gcol)];
            if a == ZERO {
                continue;
            }
            let mut rd = digits.clone();
            let mut rest = grow;
            for &t in targets.iter().rev() {
                rd[t] = rest % dims[t];
                rest /= dims[t];
            }
            let mut row = 0;
            for (k, &dk) in dims.iter().enumerate() {
                row = row * dk + rd[k];
            }
            out[(row, col)] += a;
        }
    }
    Ok(out)
}

fn decompose(mut index: usize, dims: &[usize], digits: &mut [usize]) {
    for k in (0..dims.len()).rev() {
        digits[k] = index % dims[k];
        index /= dims[k];
    }
}

fn check_unitary(u: &CMatrix) -> Result<()> {
    if !u.is_square() {
        return Err(Error::NonUnitary { residual: f64::INFINITY });
    }
    let r = linalg::unitarity_residual(u);
    if r > 1e-10 {
        return Err(Error::NonUnitary { residual: r });
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Interferometric coupling preparation and the half-step
// ---------------------------------------------------------------------------

/// Prepare the control qubit `|ψ_λ⟩ = |−⟩ − iδλ|+⟩ + O(δ²)` with
/// `λ = Tr[UΓ]` (or `λ*` when `conjugate` is set), starting from
/// `|0⟩⟨0| ⊗ Γ`.
///
/// Gate sequence: unbalanced Hadamard `H_δ`, phase `π/2` on |1⟩, a
/// controlled unitary acting when the control is |1⟩, and a Hadamard.  Since
/// `H_δ|0⟩` puts the large amplitude on |1⟩, the |1⟩-controlled gate must be
/// `U†` to produce `λ = Tr[UΓ]`; the conjugate preparation uses `U`.
pub fn prepare_psi_lambda(gamma: &RegisterState, u: &CMatrix, delta: f64, conjugate: bool) -> Result<RegisterState> {
    check_unitary(u)?;
    if u.nrows() != gamma.dim() {
        return Err(Error::DimensionMismatch("U does not act on Γ's space".into()));
    }
    let v = if conjugate { u.clone() } else { u.adjoint() };
    let reg = RegisterState::basis(2, 0).tensor(gamma);
    let mut dims = vec![2];
    dims.push(gamma.dim());
    let reg = RegisterState { dims, matrix: reg.matrix };
    let reg = reg.apply_on(&unbalanced_hadamard(delta), &[0])?;
    let reg = reg.apply_on(&controlled_phase(std::f64::consts::FRAC_PI_2), &[0])?;
    let reg = reg.apply(&controlled(&v, ControlOn::One))?;
    let reg = reg.apply_on(&hadamard(), &[0])?;
    reg.marginal(0)
}

/// Ideal control state `|ψ_λ⟩⟨ψ_λ|` (unnormalised, as written).
pub fn ideal_psi_lambda(lambda: C64, delta: f64) -> CMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let minus = linalg::vector(&[c(s, 0.0), c(-s, 0.0)]);
    let plus = linalg::vector(&[c(s, 0.0), c(s, 0.0)]);
    let psi = minus - plus * (I * lambda * delta);
    linalg::outer(&psi, &psi)
}

/// Recover λ from a prepared control state: the |+⟩⟨−| coherence equals
/// `−iδλ` to first order.
pub fn extract_lambda(control: &RegisterState, delta: f64) -> C64 {
    let h = hadamard();
    let m = linalg::conjugate(&h, control.matrix());
    // In the Hadamard-rotated frame |+⟩ ↦ |0⟩ and |−⟩ ↦ |1⟩.
    m[(0, 1)] / (-I * delta)
}

/// One half-step: control ⊗ ρ_1 ⊗ … ⊗ ρ_l ⊗ σ, controlled cyclic SWAPs
/// (built from |0⟩-controlled Fredkin gates between each factor and the
/// simulator, conjugated by Hadamards on the control so that they fire on
/// |+⟩), then postselection of the control on |0⟩ and a trace over all
/// ancillas.  The simulator marginal is
/// `½ e^{−iδλ ρ_1⋯ρ_l} σ e^{iδλ* ρ_l⋯ρ_1} + O(δ²)`, subnormalised.
pub fn dme_halfstep(control: &RegisterState, factors: &[CMatrix], sigma: &RegisterState) -> Result<RegisterState> {
    if control.dim() != 2 {
        return Err(Error::DimensionMismatch("control must be a qubit".into()));
    }
    if factors.is_empty() {
        return Err(Error::DimensionMismatch("a half-step needs at least one factor state".into()));
    }
    let d = sigma.dim();
    if factors.iter().any(|f| f.nrows() != d || f.ncols() != d) {
        return Err(Error::DimensionMismatch("factor states and simulator must share one dimension".into()));
    }
    let l = factors.len();
    let mut dims = vec![2];
    dims.extend(std::iter::repeat(d).take(l + 1));
    let mut m = control.matrix().clone();
    for f in factors {
        m = linalg::kron(&m, f);
    }
    m = linalg::kron(&m, sigma.matrix());
    let mut reg = RegisterState { dims: dims.clone(), matrix: m };
    reg = reg.apply_on(&hadamard(), &[0])?;
    // S_{1,σ} S_{2,σ} ⋯ S_{l,σ} composes to the cyclic shift of (ρ_1 … ρ_l σ).
    let fred = fredkin(d, ControlOn::Zero);
    let mut gate = linalg::identity(reg.dim());
    for k in 1..=l {
        gate *= embed_gate(&fred, &dims, &[0, k, l + 1])?;
    }
    reg = reg.apply(&gate)?;
    reg = reg.apply_on(&hadamard(), &[0])?;
    reg.postselect(0, 0)?.marginal(l + 1)
}

/// `λ ρ_1⋯ρ_l + λ* ρ_l⋯ρ_1`, the Hermitian generator of one monomial.
pub fn monomial_generator(lambda: C64, factors: &[CMatrix]) -> CMatrix {
    let d = factors[0].nrows();
    let mut p = linalg::identity(d);
    for f in factors {
        p *= f;
    }
    &p * lambda + p.adjoint() * lambda.conj()
}

/// Result of one postselected protocol step.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    /// Normalised simulator state.
    pub state: DensityOperator,
    /// Product of the postselection probabilities.
    pub success_probability: f64,
}

/// Both half-steps for `λ_Γ ρ_1⋯ρ_l + h.c.`: control `|ψ_λ⟩` with the
/// factors in order, then `|ψ*_λ⟩` with the factors reversed.  The output
/// is renormalised; it equals `e^{−iδℍ} σ e^{iδℍ} + O(δ²)` with
/// `ℍ = λρ_1⋯ρ_l + λ*ρ_l⋯ρ_1`.
pub fn monomial_step(
    gamma: &RegisterState,
    u: &CMatrix,
    factors: &[CMatrix],
    sigma: &DensityOperator,
    delta: f64,
) -> Result<StepOutcome> {
    if delta.abs() > MAX_STEP_COUPLING {
        return Err(Error::Config(format!(
            "interferometric step δ·|λ| ≤ {MAX_STEP_COUPLING} required, got δ = {delta}"
        )));
    }
    let ctrl = prepare_psi_lambda(gamma, u, delta, false)?;
    let half = dme_halfstep(&ctrl, factors, &RegisterState::from_density(sigma))?;
    let ctrl_c = prepare_psi_lambda(gamma, u, delta, true)?;
    let reversed: Vec<CMatrix> = factors.iter().rev().cloned().collect();
    let full = dme_halfstep(&ctrl_c, &reversed, &half)?;
    let p = full.norm();
    Ok(StepOutcome { state: full.to_density()?, success_probability: p })
}

/// Exact target of [`monomial_step`].
pub fn exact_monomial_step(lambda: C64, factors: &[CMatrix], sigma: &DensityOperator, delta: f64) -> CMatrix {
    let h = monomial_generator(lambda, factors);
    linalg::conjugate(&linalg::expm_hermitian(&h, delta), sigma.matrix())
}

// ---------------------------------------------------------------------------
// Protocol specification and Trotter driver
// ---------------------------------------------------------------------------

/// Where the coupling register Γ comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GammaSource {
    /// A fixed ancilla state.
    Fixed {
        #[serde(with = "linalg::serde_cmatrix")]
        state: CMatrix,
    },
    /// The tensor product of history states at the listed distances, so
    /// that `λ = Tr[U (ρ_{t−a_1} ⊗ …)]` tracks the history.
    History { distances: Vec<f64> },
}

/// One monomial `scale·(λ_Γ ρ_{t−a_1}⋯ρ_{t−a_l} + h.c.)` with
/// `λ_Γ = Tr[UΓ]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolMonomial {
    #[serde(with = "linalg::serde_cmatrix")]
    pub unitary: CMatrix,
    pub gamma: GammaSource,
    /// Memory distances of the factor states, left to right.
    pub factors: Vec<f64>,
    /// Nonnegative weight; realised as a per-monomial step `scale·δ`.
    pub scale: f64,
}

impl ProtocolMonomial {
    /// A constant complex coupling κ: `|κ|·(e^{i arg κ} ρ⋯ + h.c.)`, with a
    /// qubit ancilla Γ = |0⟩⟨0| and U = e^{i arg κ}𝟙.
    pub fn constant(kappa: C64, factors: Vec<f64>) -> Self {
        let mut g = linalg::zeros(2);
        g[(0, 0)] = ONE;
        let phase = C64::from_polar(1.0, kappa.arg());
        Self { unitary: linalg::identity(2) * phase, gamma: GammaSource::Fixed { state: g }, factors, scale: kappa.norm() }
    }

    /// Coupling `scale·Tr[ρ_{t−a}ρ_t]` realised with U = SWAP on two history
    /// copies.
    pub fn fidelity_weighted(scale: f64, distance: f64, dim: usize, factors: Vec<f64>) -> Self {
        Self { unitary: swap(dim), gamma: GammaSource::History { distances: vec![distance, 0.0] }, factors, scale }
    }

    fn gamma_state(&self, supply: &dyn Fn(f64) -> Result<CMatrix>) -> Result<RegisterState> {
        match &self.gamma {
            GammaSource::Fixed { state } => RegisterState::new(vec![state.nrows()], state.clone()),
            GammaSource::History { distances } => {
                let mut m: Option<CMatrix> = None;
                for &a in distances {
                    let r = supply(a)?;
                    m = Some(match m {
                        None => r,
                        Some(acc) => linalg::kron(&acc, &r),
                    });
                }
                let m = m.ok_or_else(|| Error::Config("history Γ needs at least one distance".into()))?;
                RegisterState::new(vec![m.nrows()], m)
            }
        }
    }

    /// λ_Γ evaluated exactly.
    pub fn lambda(&self, supply: &dyn Fn(f64) -> Result<CMatrix>) -> Result<C64> {
        let g = self.gamma_state(supply)?;
        Ok(linalg::trace_product(&self.unitary, g.matrix()))
    }
}

/// A sum of protocol monomials plus an optional history-independent part
/// that is applied exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolSpec {
    pub dim: usize,
    #[serde(with = "linalg::serde_cmatrix")]
    pub sqt_part: CMatrix,
    pub monomials: Vec<ProtocolMonomial>,
    /// Trotter step δ.
    pub delta: f64,
    /// Number of Trotter steps m.
    pub steps: usize,
}

impl ProtocolSpec {
    pub fn new(dim: usize, monomials: Vec<ProtocolMonomial>, delta: f64, steps: usize) -> Self {
        Self { dim, sqt_part: linalg::zeros(dim), monomials, delta, steps }
    }

    pub fn with_sqt_part(mut self, h: CMatrix) -> Self {
        self.sqt_part = h;
        self
    }

    /// Translate a history-dependent spec with primitive monomials and
    /// constant (or linear-in-fidelity) couplings.  Anything else cannot be
    /// written as `Tr[UΓ]` and must go through [`general_protocol_step`].
    pub fn from_ec_spec(spec: &ECHamiltonianSpec, delta: f64, steps: usize) -> Result<Self> {
        let mut monomials = Vec::new();
        for term in &spec.terms {
            let m = &term.monomial;
            if !m.is_primitive() || m.factors.iter().any(|f| f.power != 1 || f.subsystem.is_some()) {
                return Err(Error::Config(
                    "only primitive monomials have an interferometric realisation; use the general path".into(),
                ));
            }
            let distances: Vec<f64> = m.factors.iter().map(|f| f.distance).collect();
            // Coefficient κ with κ M + κ* M† equal to the spec's basis operator.
            let unit = match m.parity {
                Parity::Plus if m.has_hermitian_content() => c(0.5, 0.0),
                Parity::Plus => ONE,
                Parity::Minus => I,
            };
            match &term.coupling {
                CouplingSchedule::Constant { value } => {
                    if *value != 0.0 {
                        monomials.push(ProtocolMonomial::constant(unit * *value, distances));
                    }
                }
                CouplingSchedule::Builtin(Builtin::FidelityPolynomial { distance, coefficients })
                    if coefficients.len() <= 2 && m.parity == Parity::Plus =>
                {
                    if let Some(&c0) = coefficients.first() {
                        if c0 != 0.0 {
                            monomials.push(ProtocolMonomial::constant(unit * c0, distances.clone()));
                        }
                    }
                    if let Some(&c1) = coefficients.get(1) {
                        if c1 != 0.0 {
                            let mut pm = ProtocolMonomial::fidelity_weighted(
                                (unit * c1).norm(),
                                *distance,
                                spec.dim,
                                distances.clone(),
                            );
                            if c1 < 0.0 {
                                pm.unitary = -pm.unitary;
                            }
                            monomials.push(pm);
                        }
                    }
                }
                _ => {
                    return Err(Error::Config(
                        "coupling is not of the form Tr[UΓ]; use the general (tomography) path".into(),
                    ))
                }
            }
        }
        Ok(Self { dim: spec.dim, sqt_part: spec.sqt_part.clone(), monomials, delta, steps })
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0) || !self.delta.is_finite() {
            return Err(Error::Config(format!("Trotter step must be positive, got {}", self.delta)));
        }
        if self.steps == 0 {
            return Err(Error::Config("at least one Trotter step is required".into()));
        }
        for m in &self.monomials {
            check_unitary(&m.unitary)?;
            if m.factors.is_empty() {
                return Err(Error::Config("a protocol monomial needs at least one factor".into()));
            }
            if !(m.scale >= 0.0) || !m.scale.is_finite() {
                return Err(Error::Config(format!("monomial scale must be finite and ≥ 0, got {}", m.scale)));
            }
            // |Tr[UΓ]| ≤ 1 for unitary U and a state Γ.
            if self.delta * m.scale > MAX_STEP_COUPLING {
                return Err(Error::Config(format!(
                    "δ·|λ| = {:.3} exceeds {MAX_STEP_COUPLING}; increase the number of steps",
                    self.delta * m.scale
                )));
            }
        }
        let r = linalg::hermiticity_residual(&self.sqt_part);
        if r > 1e-10 {
            return Err(Error::NonHermitian { residual: r });
        }
        Ok(())
    }

    /// Largest memory distance used anywhere.
    pub fn a_max(&self) -> f64 {
        self.monomials
            .iter()
            .flat_map(|m| {
                let g = match &m.gamma {
                    GammaSource::History { distances } => distances.clone(),
                    GammaSource::Fixed { .. } => Vec::new(),
                };
                m.factors.iter().copied().chain(g)
            })
            .fold(0.0, f64::max)
    }

    /// Total duration m·δ.
    pub fn duration(&self) -> f64 {
        self.delta * self.steps as f64
    }

    /// Λ = ‖H_sqt‖ + Σ scale, the coupling magnitude entering the bound.
    pub fn coupling_scale(&self) -> f64 {
        let h = linalg::eigvalsh(&self.sqt_part).into_iter().map(f64::abs).fold(0.0, f64::max);
        h + self.monomials.iter().map(|m| m.scale).sum::<f64>()
    }

    /// Number of terms M (the history-independent part counts as one).
    pub fn n_monomials(&self) -> usize {
        self.monomials.len() + usize::from(linalg::max_abs(&self.sqt_part) > 0.0)
    }

    /// Reported error bound `C·M·(Λt)²/m`.
    pub fn error_bound(&self) -> f64 {
        let t = self.duration();
        let l = self.coupling_scale().max(1.0);
        TROTTER_CONSTANT * self.n_monomials().max(1) as f64 * (l * t).powi(2) / self.steps as f64
    }
}

/// Output of a Trotterised protocol run.
#[derive(Debug, Clone)]
pub struct ProtocolRun {
    pub final_state: DensityOperator,
    /// Simulator state after each Trotter step (index 0 is the input).
    pub states: Vec<DensityOperator>,
    pub error_bound: f64,
    /// Product of all postselection probabilities.
    pub success_probability: f64,
}

/// One Trotter step: the history-independent part exactly, then each
/// monomial's postselected step with its own `scale·δ`.
fn protocol_step(
    p: &ProtocolSpec,
    sigma: &DensityOperator,
    supply: &dyn Fn(f64) -> Result<CMatrix>,
) -> Result<StepOutcome> {
    let mut state = if linalg::max_abs(&p.sqt_part) > 0.0 {
        let u = linalg::expm_hermitian(&p.sqt_part, p.delta);
        DensityOperator::new(linalg::hermitian_part(&linalg::conjugate(&u, sigma.matrix())))?
    } else {
        sigma.clone()
    };
    let mut prob = 1.0;
    for m in &p.monomials {
        if m.scale == 0.0 {
            continue;
        }
        let factors: Vec<CMatrix> = m
            .factors
            .iter()
            .map(|&a| if a == 0.0 { Ok(state_present(sigma)) } else { supply(a) })
            .collect::<Result<_>>()?;
        let gamma = m.gamma_state(&|a| if a == 0.0 { Ok(state_present(sigma)) } else { supply(a) })?;
        let out = monomial_step(&gamma, &m.unitary, &factors, &state, m.scale * p.delta)?;
        state = out.state;
        prob *= out.success_probability;
    }
    Ok(StepOutcome { state, success_probability: prob })
}

fn state_present(sigma: &DensityOperator) -> CMatrix {
    sigma.matrix().clone()
}

/// Run `p.steps` Trotter steps from `sigma0`.  `history_supplier(k, a)`
/// returns the factor state at memory distance `a > 0` for step `k`;
/// distance 0 always refers to the simulator's current state.
pub fn trotter_simulate(
    p: &ProtocolSpec,
    sigma0: &DensityOperator,
    history_supplier: &dyn Fn(usize, f64) -> Result<CMatrix>,
) -> Result<ProtocolRun> {
    p.validate()?;
    if sigma0.dim() != p.dim {
        return Err(Error::DimensionMismatch("initial state and protocol dimensions differ".into()));
    }
    let mut states = vec![sigma0.clone()];
    let mut prob = 1.0;
    for k in 0..p.steps {
        let out = protocol_step(p, states.last().unwrap(), &|a| history_supplier(k, a))?;
        prob *= out.success_probability;
        states.push(out.state);
    }
    Ok(ProtocolRun {
        final_state: states.last().unwrap().clone(),
        states,
        error_bound: p.error_bound(),
        success_probability: prob,
    })
}

/// Circuit-driven history-dependent evolution: the simulator's own output
/// becomes the history that later steps read.  `prehistory` must be on the
/// grid `p.delta` and reach back at least `a_max`; its last state is the
/// starting point.
pub fn evolve_ec_circuit(p: &ProtocolSpec, prehistory: &StateHistory) -> Result<(StateHistory, ProtocolRun)> {
    p.validate()?;
    if (prehistory.dt() - p.delta).abs() > 1e-12 * p.delta.max(1.0) {
        return Err(Error::Config("prehistory grid must equal the Trotter step".into()));
    }
    if prehistory.is_empty() {
        return Err(Error::InvalidState("empty prehistory".into()));
    }
    let mut history = StateHistory::from_states(
        prehistory.t0(),
        prehistory.dt(),
        prehistory.states().iter().cloned(),
    )?;
    let sigma0 = history.state(history.len() - 1).clone();
    let mut states = vec![sigma0];
    let mut prob = 1.0;
    for _ in 0..p.steps {
        let k = history.len() - 1;
        let supply = |a: f64| -> Result<CMatrix> {
            let s = history.steps_for_distance(a)?;
            if s > k {
                return Err(Error::MemoryUnderflow { requested: history.time(k) - a, t0: history.t0() });
            }
            Ok(history.state(k - s).matrix().clone())
        };
        let out = protocol_step(p, states.last().unwrap(), &supply)?;
        prob *= out.success_probability;
        history.push_state(out.state.clone())?;
        states.push(out.state);
    }
    let run = ProtocolRun {
        final_state: states.last().unwrap().clone(),
        states,
        error_bound: p.error_bound(),
        success_probability: prob,
    };
    Ok((history, run))
}

// ---------------------------------------------------------------------------
// General path: positive splitting and density-matrix exponentiation
// ---------------------------------------------------------------------------

/// `H = w⁺ϱ⁺ − w⁻ϱ⁻` with commuting unit-trace positive parts.  A side with
/// zero weight carries the maximally mixed state as a placeholder.
#[derive(Debug, Clone)]
pub struct SplitHamiltonian {
    pub rho_plus: DensityOperator,
    pub rho_minus: DensityOperator,
    pub trace_plus: f64,
    pub trace_minus: f64,
}

impl SplitHamiltonian {
    pub fn reconstruct(&self) -> CMatrix {
        self.rho_plus.matrix() * c(self.trace_plus, 0.0) - self.rho_minus.matrix() * c(self.trace_minus, 0.0)
    }
}

pub fn split_hamiltonian(h: &CMatrix) -> Result<SplitHamiltonian> {
    let r = linalg::hermiticity_residual(h);
    if r > 1e-10 {
        return Err(Error::NonHermitian { residual: r });
    }
    if linalg::max_abs(h) == 0.0 {
        return Err(Error::ZeroOperator);
    }
    let d = h.nrows();
    let (vals, vecs) = linalg::eigh(h);
    let part = |sign: f64| -> CMatrix {
        let mut m = linalg::zeros(d);
        for (k, &e) in vals.iter().enumerate() {
            let x = sign * e;
            if x > 0.0 {
                let v = vecs.column(k).into_owned();
                m += linalg::outer(&v, &v) * c(x, 0.0);
            }
        }
        m
    };
    let side = |m: CMatrix| -> Result<(DensityOperator, f64)> {
        let w = linalg::trace(&m).re;
        if w > 0.0 {
            Ok((DensityOperator::new(linalg::hermitian_part(&(m / c(w, 0.0))))?, 0.0_f64.max(w)))
        } else {
            Ok((DensityOperator::maximally_mixed(d), 0.0))
        }
    };
    let (rho_plus, trace_plus) = side(part(1.0))?;
    let (rho_minus, trace_minus) = side(part(-1.0))?;
    Ok(SplitHamiltonian { rho_plus, rho_minus, trace_plus, trace_minus })
}

/// Sign of the partial-SWAP generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// `e^{−iδS}`: approximates `e^{−itϱ} σ e^{itϱ}`.
    Forward,
    /// `e^{+iδS}`: approximates `e^{itϱ} σ e^{−itϱ}`.
    Backward,
}

/// `n` rounds of `σ ↦ Tr_1[e^{∓iδS}(ϱ ⊗ σ)e^{±iδS}]` with `δ = t/n`, each
/// consuming a fresh copy of ϱ.
pub fn dme_exponentiate(
    rho_gen: &DensityOperator,
    sigma: &DensityOperator,
    t: f64,
    n: usize,
    direction: Direction,
) -> Result<DensityOperator> {
    let d = sigma.dim();
    if rho_gen.dim() != d {
        return Err(Error::DimensionMismatch("generator and simulator dimensions differ".into()));
    }
    if n == 0 {
        return Err(Error::Config("density-matrix exponentiation needs n ≥ 1".into()));
    }
    if t == 0.0 {
        return Ok(sigma.clone());
    }
    let delta = t / n as f64;
    let sgn = match direction {
        Direction::Forward => -1.0,
        Direction::Backward => 1.0,
    };
    // S² = 𝟙, so e^{iθS} = cos θ 𝟙 + i sin θ S.
    let (s, co) = (sgn * delta).sin_cos();
    let u = linalg::identity(d * d) * c(co, 0.0) + swap(d) * c(0.0, s);
    let dims = [d, d];
    let mut m = sigma.matrix().clone();
    for _ in 0..n {
        let joint = linalg::kron(rho_gen.matrix(), &m);
        m = qstate::partial_trace_matrix(&linalg::conjugate(&u, &joint), &dims, 1)?;
    }
    DensityOperator::new(linalg::hermitian_part(&m))
}

/// One step `Δt` of a general Hermitian generator via two commuting
/// exponentiation passes; `n_plus`/`n_minus` copies are used for the
/// positive and negative parts (`Δt·w^± = n^± δ^±`).
pub fn general_protocol_step(
    h: &CMatrix,
    rho: &DensityOperator,
    dt: f64,
    n_plus: usize,
    n_minus: usize,
) -> Result<DensityOperator> {
    let split = split_hamiltonian(h)?;
    let mut s = rho.clone();
    if split.trace_plus > 0.0 {
        s = dme_exponentiate(&split.rho_plus, &s, dt * split.trace_plus, n_plus, Direction::Forward)?;
    }
    if split.trace_minus > 0.0 {
        s = dme_exponentiate(&split.rho_minus, &s, dt * split.trace_minus, n_minus, Direction::Backward)?;
    }
    Ok(s)
}

/// Same as [`general_protocol_step`] with the negative pass first.
pub fn general_protocol_step_reversed(
    h: &CMatrix,
    rho: &DensityOperator,
    dt: f64,
    n_plus: usize,
    n_minus: usize,
) -> Result<DensityOperator> {
    let split = split_hamiltonian(h)?;
    let mut s = rho.clone();
    if split.trace_minus > 0.0 {
        s = dme_exponentiate(&split.rho_minus, &s, dt * split.trace_minus, n_minus, Direction::Backward)?;
    }
    if split.trace_plus > 0.0 {
        s = dme_exponentiate(&split.rho_plus, &s, dt * split.trace_plus, n_plus, Direction::Forward)?;
    }
    Ok(s)
}

/// Finite-sample stand-in for a tomographic estimate of `h`: each real
/// matrix coordinate receives Gaussian noise of width `scale/√shots`.
pub fn shot_noise_estimate(h: &CMatrix, shots: u64, scale: f64, seed: u64) -> Result<CMatrix> {
    if shots == 0 {
        return Err(Error::Config("shot count must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sd = scale / (shots as f64).sqrt();
    let d = h.nrows();
    let mut noisy = h.clone();
    for i in 0..d {
        let x: f64 = StandardNormal.sample(&mut rng);
        noisy[(i, i)] += c(sd * x, 0.0);
        for j in (i + 1)..d {
            let a: f64 = StandardNormal.sample(&mut rng);
            let b: f64 = StandardNormal.sample(&mut rng);
            let z = c(sd * a, sd * b);
            noisy[(i, j)] += z;
            noisy[(j, i)] += z.conj();
        }
    }
    Ok(noisy)
}

// ---------------------------------------------------------------------------
// Resources
// ---------------------------------------------------------------------------

/// Scaling-law resource count at unit constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResourceEstimate {
    /// 2M(N+L+1) system copies per step.
    pub systems_per_step: u64,
    /// m = ⌈M t²/ε⌉.
    pub trotter_steps: u64,
    /// α = 2M(N+L), copies consumed to rebuild each element.
    pub copy_base: u64,
    /// k = α^m, `None` when it overflows 128 bits.
    pub total_copies: Option<u128>,
    /// log₁₀ k, always available.
    pub log10_total_copies: f64,
    /// The simulator needs dimension d^k; this is k.
    pub simulator_dimension_exponent: Option<u128>,
}

pub fn resource_estimate(m: u64, n: u64, l: u64, t: f64, epsilon: f64) -> Result<ResourceEstimate> {
    if m == 0 || n == 0 || l == 0 || !(t > 0.0) || !(epsilon > 0.0) {
        return Err(Error::Config("resource estimate needs positive M, N, L, t, ε".into()));
    }
    let steps = ((m as f64) * t * t / epsilon).ceil().max(1.0) as u64;
    let alpha = 2 * m * (n + l);
    let copies = u32::try_from(steps).ok().and_then(|s| (alpha as u128).checked_pow(s));
    Ok(ResourceEstimate {
        systems_per_step: 2 * m * (n + l + 1),
        trotter_steps: steps,
        copy_base: alpha,
        total_copies: copies,
        log10_total_copies: steps as f64 * (alpha as f64).log10(),
        simulator_dimension_exponent: copies,
    })
}
