//! Quantum states, uniformly gridded state histories and history overlaps.
//!
//! A [`StateHistory`] stores every state from its start time on a uniform
//! grid.  Pure histories additionally keep the state vectors, because the
//! overlap phase `arg⟨Ψ_{t1}|Ψ_{t2}⟩` is not recoverable from density
//! operators alone.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix, CVector, C64, ONE};

/// Hermiticity tolerance for density operators (max entrywise |ρ − ρ†|).
pub const TOL_HERM: f64 = 1e-10;
/// Trace tolerance for density operators.
pub const TOL_TRACE: f64 = 1e-10;
/// Allowed negative eigenvalue slack.
pub const TOL_PSD: f64 = 1e-10;
/// Norm tolerance for pure states given by the user.
pub const TOL_NORM: f64 = 1e-12;
/// Purity tolerance for states pushed into pure histories.
pub const TOL_PURITY: f64 = 1e-8;

/// A validated density operator: Hermitian, positive semidefinite, unit trace.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    mat: CMatrix,
}

impl DensityOperator {
    pub fn new(mat: CMatrix) -> Result<Self> {
        if !mat.is_square() || mat.nrows() == 0 {
            return Err(Error::InvalidState(format!(
                "density operator must be square and nonempty, got {}x{}",
                mat.nrows(),
                mat.ncols()
            )));
        }
        let herm = linalg::hermiticity_residual(&mat);
        if herm > TOL_HERM {
            return Err(Error::InvalidState(format!("not Hermitian (residual {herm:.3e})")));
        }
        let tr = mat.trace();
        if (tr - ONE).norm() > TOL_TRACE {
            return Err(Error::InvalidState(format!("trace {tr} differs from 1")));
        }
        let min_eig = linalg::eigvalsh(&mat)[0];
        if min_eig < -TOL_PSD {
            return Err(Error::InvalidState(format!("negative eigenvalue {min_eig:.3e}")));
        }
        Ok(Self { mat })
    }

    /// Wrap a matrix produced by an exact unitary map of a valid state.
    pub(crate) fn from_matrix_unchecked(mat: CMatrix) -> Self {
        Self { mat }
    }

    pub fn from_pure(psi: &PureState) -> Self {
        Self { mat: linalg::outer(&psi.amps, &psi.amps) }
    }

    pub fn maximally_mixed(d: usize) -> Self {
        Self { mat: linalg::identity(d) * c(1.0 / d as f64, 0.0) }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> CMatrix {
        self.mat
    }

    /// Tr[ρ²].
    pub fn purity(&self) -> f64 {
        linalg::trace_product(&self.mat, &self.mat).re
    }

    pub fn is_pure(&self, tol: f64) -> bool {
        (self.purity() - 1.0).abs() <= tol
    }

    /// Populations ρ_nn in the computational basis.
    pub fn populations(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.mat[(i, i)].re).collect()
    }

    /// Dominant eigenvector with the gauge fixed so that its largest
    /// component is real and positive.  Intended for (near-)pure states.
    pub fn dominant_vector(&self) -> PureState {
        let (vals, vecs) = linalg::eigh(&self.mat);
        let k = vals.len() - 1;
        let mut v: CVector = vecs.column(k).into_owned();
        let (imax, _) = v
            .iter()
            .enumerate()
            .fold((0, -1.0), |acc, (i, z)| if z.norm() > acc.1 { (i, z.norm()) } else { acc });
        let phase = v[imax] / v[imax].norm();
        v /= phase;
        PureState { amps: v.normalize() }
    }
}

/// A normalized state vector |Ψ⟩.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    amps: CVector,
}

impl PureState {
    /// Validate an already normalized vector.
    pub fn new(amps: CVector) -> Result<Self> {
        let n = amps.norm();
        if (n - 1.0).abs() > TOL_NORM {
            return Err(Error::InvalidState(format!("state norm {n} differs from 1")));
        }
        Ok(Self { amps })
    }

    /// Normalize an arbitrary nonzero vector.
    pub fn normalized(amps: CVector) -> Result<Self> {
        let n = amps.norm();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::InvalidState("cannot normalize a zero or non-finite vector".into()));
        }
        Ok(Self { amps: amps / c(n, 0.0) })
    }

    /// Normalized state from real amplitudes.
    pub fn from_amplitudes(amps: &[f64]) -> Result<Self> {
        let v: Vec<C64> = amps.iter().map(|&x| c(x, 0.0)).collect();
        Self::normalized(linalg::vector(&v))
    }

    /// Computational basis state |k⟩ (0-based index) in dimension d.
    pub fn basis(d: usize, k: usize) -> Self {
        let mut amps = CVector::zeros(d);
        amps[k] = ONE;
        Self { amps }
    }

    /// |+⟩ = (|0⟩ + |1⟩)/√2.
    pub fn plus() -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        Self { amps: linalg::vector(&[c(s, 0.0), c(s, 0.0)]) }
    }

    /// |−⟩ = (|0⟩ − |1⟩)/√2.
    pub fn minus() -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        Self { amps: linalg::vector(&[c(s, 0.0), c(-s, 0.0)]) }
    }

    pub(crate) fn from_vector_unchecked(amps: CVector) -> Self {
        Self { amps }
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amps
    }

    pub fn density(&self) -> DensityOperator {
        DensityOperator::from_pure(self)
    }

    pub fn populations(&self) -> Vec<f64> {
        self.amps.iter().map(|z| z.norm_sqr()).collect()
    }
}

/// Two-point function of a history: m = w·e^{iα}.
///
/// For mixed histories only the fidelity amplitude `w = sqrt(Tr ρ1ρ2)` is
/// defined; `m` and `alpha` are then `None`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoPoint {
    pub m: Option<C64>,
    pub w: f64,
    pub alpha: Option<f64>,
}

impl TwoPoint {
    fn from_complex(m: C64) -> Self {
        Self { m: Some(m), w: m.norm(), alpha: Some(m.arg()) }
    }

    /// Squared fidelity amplitude F = w².
    pub fn fidelity(&self) -> f64 {
        self.w * self.w
    }
}

/// States on a uniform time grid `t0 + k·dt`, retained from the start.
#[derive(Debug, Clone, PartialEq)]
pub struct StateHistory {
    t0: f64,
    dt: f64,
    states: Vec<DensityOperator>,
    vectors: Option<Vec<CVector>>,
}

impl StateHistory {
    /// Empty pure-state history.
    pub fn new_pure(t0: f64, dt: f64) -> Result<Self> {
        Self::check_grid(t0, dt)?;
        Ok(Self { t0, dt, states: Vec::new(), vectors: Some(Vec::new()) })
    }

    /// Empty (possibly) mixed-state history.
    pub fn new_mixed(t0: f64, dt: f64) -> Result<Self> {
        Self::check_grid(t0, dt)?;
        Ok(Self { t0, dt, states: Vec::new(), vectors: None })
    }

    /// Build a pure history from a sequence of state vectors.
    pub fn from_pure_states(t0: f64, dt: f64, states: impl IntoIterator<Item = PureState>) -> Result<Self> {
        let mut h = Self::new_pure(t0, dt)?;
        for s in states {
            h.push_pure(s)?;
        }
        Ok(h)
    }

    /// Build a mixed history from density operators.
    pub fn from_states(t0: f64, dt: f64, states: impl IntoIterator<Item = DensityOperator>) -> Result<Self> {
        let mut h = Self::new_mixed(t0, dt)?;
        for s in states {
            h.push_state(s)?;
        }
        Ok(h)
    }

    fn check_grid(t0: f64, dt: f64) -> Result<()> {
        if !(dt > 0.0) || !dt.is_finite() || !t0.is_finite() {
            return Err(Error::InvalidState(format!("invalid grid t0 = {t0}, dt = {dt}")));
        }
        Ok(())
    }

    fn check_dim(&self, d: usize) -> Result<()> {
        if let Some(first) = self.states.first() {
            if first.dim() != d {
                return Err(Error::DimensionMismatch(format!(
                    "history dimension {} but pushed state has dimension {d}",
                    first.dim()
                )));
            }
        }
        Ok(())
    }

    /// Append the next pure state.
    pub fn push_pure(&mut self, psi: PureState) -> Result<()> {
        self.check_dim(psi.dim())?;
        if (psi.amps.norm() - 1.0).abs() > TOL_PURITY {
            return Err(Error::InvalidState("pushed state is not normalized".into()));
        }
        match &mut self.vectors {
            Some(v) => {
                self.states.push(DensityOperator::from_pure(&psi));
                v.push(psi.amps);
                Ok(())
            }
            None => {
                self.states.push(DensityOperator::from_pure(&psi));
                Ok(())
            }
        }
    }

    /// Append the next density operator.  Pure histories reject this: their
    /// phases would be lost.
    pub fn push_state(&mut self, rho: DensityOperator) -> Result<()> {
        self.check_dim(rho.dim())?;
        if self.vectors.is_some() {
            return Err(Error::InvalidState("pure histories require state vectors".into()));
        }
        self.states.push(rho);
        Ok(())
    }

    /// Remove the most recent state (used by predictor–corrector stepping).
    pub(crate) fn pop(&mut self) {
        self.states.pop();
        if let Some(v) = &mut self.vectors {
            v.pop();
        }
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.states.first().map(|s| s.dim()).unwrap_or(0)
    }

    pub fn purity_flag(&self) -> bool {
        self.vectors.is_some()
    }

    /// Time of grid index k.
    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    /// Time of the latest state.
    pub fn last_time(&self) -> f64 {
        self.time(self.len().saturating_sub(1))
    }

    /// Grid index of time t (must be on grid and stored).
    pub fn index_of(&self, t: f64) -> Result<usize> {
        let x = (t - self.t0) / self.dt;
        let k = x.round();
        let tol = 1e-9 * x.abs().max(1.0);
        if (x - k).abs() > tol || k < 0.0 || (k as usize) >= self.len() {
            return Err(Error::OffGridTime { t, t0: self.t0, dt: self.dt });
        }
        Ok(k as usize)
    }

    /// Number of grid steps spanned by a memory distance a ≥ 0.
    pub fn steps_for_distance(&self, a: f64) -> Result<usize> {
        steps_for_distance(a, self.dt)
    }

    pub fn state(&self, k: usize) -> &DensityOperator {
        &self.states[k]
    }

    pub fn states(&self) -> &[DensityOperator] {
        &self.states
    }

    pub fn state_at(&self, t: f64) -> Result<&DensityOperator> {
        Ok(&self.states[self.index_of(t)?])
    }

    /// State vector at index k (pure histories only).
    pub fn vector(&self, k: usize) -> Option<&CVector> {
        self.vectors.as_ref().map(|v| &v[k])
    }

    pub fn vectors(&self) -> Option<&[CVector]> {
        self.vectors.as_deref()
    }

    pub fn last_vector(&self) -> Option<&CVector> {
        self.vectors.as_ref().and_then(|v| v.last())
    }

    /// Two-point function between grid indices.
    pub fn two_point_index(&self, i: usize, j: usize) -> TwoPoint {
        match &self.vectors {
            Some(v) => TwoPoint::from_complex(v[i].dotc(&v[j])),
            None => {
                let f = linalg::trace_product(self.states[i].matrix(), self.states[j].matrix()).re;
                TwoPoint { m: None, w: f.max(0.0).sqrt(), alpha: None }
            }
        }
    }

    // ---- serialization ------------------------------------------------------

    pub fn header(&self) -> HistoryHeader {
        HistoryHeader {
            dim: self.dim(),
            dt: self.dt,
            t0: self.t0,
            count: self.len(),
            purity_flag: self.purity_flag(),
        }
    }

    /// JSON form: header, row-major interleaved matrices and (pure) vectors.
    pub fn to_json(&self) -> serde_json::Value {
        let states: Vec<Vec<f64>> = self.states.iter().map(|s| interleave(s.matrix().transpose().iter())).collect();
        let vectors: Option<Vec<Vec<f64>>> =
            self.vectors.as_ref().map(|vs| vs.iter().map(|v| interleave(v.iter())).collect());
        serde_json::json!({ "header": self.header(), "states": states, "vectors": vectors })
    }

    pub fn from_json(value: &serde_json::Value) -> Result<Self> {
        let header: HistoryHeader = serde_json::from_value(value["header"].clone())?;
        let states: Vec<Vec<f64>> = serde_json::from_value(value["states"].clone())?;
        let vectors: Option<Vec<Vec<f64>>> = serde_json::from_value(value["vectors"].clone())?;
        Self::from_parts(header, states, vectors)
    }

    fn from_parts(header: HistoryHeader, states: Vec<Vec<f64>>, vectors: Option<Vec<Vec<f64>>>) -> Result<Self> {
        let d = header.dim;
        if states.len() != header.count {
            return Err(Error::Config("history count does not match header".into()));
        }
        match (header.purity_flag, vectors) {
            (true, Some(vs)) => {
                let mut h = Self::new_pure(header.t0, header.dt)?;
                for v in vs {
                    let amps = CVector::from_vec(deinterleave(&v, d)?);
                    h.push_pure(PureState::from_vector_unchecked(amps))?;
                }
                Ok(h)
            }
            (false, _) => {
                let mut h = Self::new_mixed(header.t0, header.dt)?;
                for s in states {
                    let m = CMatrix::from_row_slice(d, d, &deinterleave(&s, d * d)?);
                    h.push_state(DensityOperator::new(m)?)?;
                }
                Ok(h)
            }
            (true, None) => Err(Error::Config("pure history without state vectors".into())),
        }
    }

    /// Binary form: magic `ECQH`, little-endian header
    /// (dim u64, dt f64, t0 f64, count u64, purity u8), then `count`
    /// row-major matrices of interleaved (re, im) f64, then for pure
    /// histories `count` vectors of interleaved (re, im) f64.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        let h = self.header();
        w.write_all(b"ECQH")?;
        w.write_all(&(h.dim as u64).to_le_bytes())?;
        w.write_all(&h.dt.to_le_bytes())?;
        w.write_all(&h.t0.to_le_bytes())?;
        w.write_all(&(h.count as u64).to_le_bytes())?;
        w.write_all(&[h.purity_flag as u8])?;
        for s in &self.states {
            for x in interleave(s.matrix().transpose().iter()) {
                w.write_all(&x.to_le_bytes())?;
            }
        }
        if let Some(vs) = &self.vectors {
            for v in vs {
                for x in interleave(v.iter()) {
                    w.write_all(&x.to_le_bytes())?;
                }
            }
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != b"ECQH" {
            return Err(Error::Config("not a binary history (bad magic)".into()));
        }
        let dim = read_u64(&mut r)? as usize;
        let dt = read_f64(&mut r)?;
        let t0 = read_f64(&mut r)?;
        let count = read_u64(&mut r)? as usize;
        let mut flag = [0u8; 1];
        r.read_exact(&mut flag)?;
        let header = HistoryHeader { dim, dt, t0, count, purity_flag: flag[0] != 0 };
        let mut states = Vec::with_capacity(count);
        for _ in 0..count {
            states.push((0..2 * dim * dim).map(|_| read_f64(&mut r)).collect::<Result<Vec<_>>>()?);
        }
        let vectors = if header.purity_flag {
            let mut vs = Vec::with_capacity(count);
            for _ in 0..count {
                vs.push((0..2 * dim).map(|_| read_f64(&mut r)).collect::<Result<Vec<_>>>()?);
            }
            Some(vs)
        } else {
            None
        };
        Self::from_parts(header, states, vectors)
    }
}

/// Serialized history header.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistoryHeader {
    pub dim: usize,
    pub dt: f64,
    pub t0: f64,
    pub count: usize,
    pub purity_flag: bool,
}

fn interleave<'a>(it: impl Iterator<Item = &'a C64>) -> Vec<f64> {
    it.flat_map(|z| [z.re, z.im]).collect()
}

fn deinterleave(x: &[f64], n: usize) -> Result<Vec<C64>> {
    if x.len() != 2 * n {
        return Err(Error::Config(format!("expected {} doubles, found {}", 2 * n, x.len())));
    }
    Ok(x.chunks(2).map(|p| c(p[0], p[1])).collect())
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

/// Number of grid steps of width `dt` in the memory distance `a`;
/// rejects distances that are not integer multiples of `dt`.
pub fn steps_for_distance(a: f64, dt: f64) -> Result<usize> {
    if !(a >= 0.0) || !a.is_finite() {
        return Err(Error::OffGridDistance { a, dt });
    }
    let x = a / dt;
    let k = x.round();
    if (x - k).abs() > 1e-9 * x.max(1.0) {
        return Err(Error::OffGridDistance { a, dt });
    }
    Ok(k as usize)
}

/// Two-point function m_{t1,t2} = ⟨Ψ_{t1}|Ψ_{t2}⟩ (pure) or
/// w = sqrt(Tr[ρ_{t1}ρ_{t2}]) (mixed).
pub fn two_point(history: &StateHistory, t1: f64, t2: f64) -> Result<TwoPoint> {
    let i = history.index_of(t1)?;
    let j = history.index_of(t2)?;
    Ok(history.two_point_index(i, j))
}

/// Chained n-point function ∏ m_{t_r, t_{r+1}} (pure histories only).
pub fn n_point(history: &StateHistory, times: &[f64]) -> Result<TwoPoint> {
    if !history.purity_flag() {
        return Err(Error::PhaseUndefinedForMixed);
    }
    let idx = times.iter().map(|&t| history.index_of(t)).collect::<Result<Vec<_>>>()?;
    let mut m = ONE;
    for pair in idx.windows(2) {
        m *= history.two_point_index(pair[0], pair[1]).m.expect("pure history");
    }
    Ok(TwoPoint::from_complex(m))
}

fn check_dims(total: usize, dims: &[usize]) -> Result<()> {
    let prod: usize = dims.iter().product();
    if dims.is_empty() || prod != total {
        return Err(Error::DimensionMismatch(format!("subsystem dims {dims:?} do not multiply to {total}")));
    }
    Ok(())
}

/// Partial trace of an arbitrary (not necessarily normalized) operator,
/// keeping subsystem `keep` of a tensor product with subsystem sizes `dims`.
pub fn partial_trace_matrix(op: &CMatrix, dims: &[usize], keep: usize) -> Result<CMatrix> {
    check_dims(op.nrows(), dims)?;
    if keep >= dims.len() {
        return Err(Error::DimensionMismatch(format!("subsystem index {keep} out of range")));
    }
    let dk = dims[keep];
    let inner: usize = dims[keep + 1..].iter().product();
    let outer: usize = dims[..keep].iter().product();
    let mut out = CMatrix::zeros(dk, dk);
    for o in 0..outer {
        for n in 0..inner {
            for i in 0..dk {
                for j in 0..dk {
                    let r = (o * dk + i) * inner + n;
                    let s = (o * dk + j) * inner + n;
                    out[(i, j)] += op[(r, s)];
                }
            }
        }
    }
    Ok(out)
}

/// Reduced state of subsystem `keep`.
pub fn partial_trace(rho: &DensityOperator, dims: &[usize], keep: usize) -> Result<DensityOperator> {
    Ok(DensityOperator::from_matrix_unchecked(partial_trace_matrix(rho.matrix(), dims, keep)?))
}

/// Embed an operator on subsystem `index` into the full space as
/// 𝟙 ⊗ … ⊗ A ⊗ … ⊗ 𝟙.
pub fn embed(op: &CMatrix, dims: &[usize], index: usize) -> Result<CMatrix> {
    if index >= dims.len() || op.nrows() != dims[index] {
        return Err(Error::DimensionMismatch(format!(
            "cannot embed a {}-dim operator at slot {index} of {dims:?}",
            op.nrows()
        )));
    }
    let mut out = CMatrix::identity(1, 1);
    for (k, &d) in dims.iter().enumerate() {
        let factor = if k == index { op.clone() } else { linalg::identity(d) };
        out = linalg::kron(&out, &factor);
    }
    Ok(out)
}

/// Correlation operator χ = ρ − ρ^(1) ⊗ ρ^(2) of a bipartite state.
pub fn correlation_operator(rho: &DensityOperator, dims: &[usize]) -> Result<CMatrix> {
    if dims.len() != 2 {
        return Err(Error::DimensionMismatch("correlation operator needs exactly two subsystems".into()));
    }
    let r1 = partial_trace_matrix(rho.matrix(), dims, 0)?;
    let r2 = partial_trace_matrix(rho.matrix(), dims, 1)?;
    Ok(rho.matrix() - linalg::kron(&r1, &r2))
}
