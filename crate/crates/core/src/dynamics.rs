//! State propagation and observable extraction.
//!
//! Pure states evolve under `i d/dt psi = H(t) psi`; density matrices under
//! the master equation with cavity leakage and per-branch spontaneous
//! emission. Norm and trace are never silently repaired: drifts are
//! recorded, checked against hard limits, and surfaced as errors when the
//! integrator is out of its depth. Hermiticity of density samples is
//! restored by symmetrization with the deviation logged; positivity is
//! checked, not projected.

use std::sync::Arc;

use ndarray::{Array1, Array2};
use thiserror::Error;

use crate::hilbert::{build_hamiltonian, Basis, BasisState, CollapseOp, DecoherenceParams};
use crate::linalg::{dagger, hermiticity_deviation, min_eigenvalue, C64};
use crate::ode::{dp54_adaptive, rk4_fixed, OdeError};
use crate::pulses::PulseSet;

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error("state vector norm is {norm}, more than 1e-9 from 1")]
    NotNormalized { norm: f64 },
    #[error("state dimension {got} does not match basis dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("density matrix trace is {trace}, more than 1e-7 from 1")]
    BadTrace { trace: f64 },
    #[error("density matrix is not Hermitian (deviation {0:.3e})")]
    NotHermitian(f64),
    #[error("density matrix has eigenvalue {0:.3e} below the -1e-7 floor")]
    NotPositive(f64),
    #[error("propagation window is empty: t1 = {t1} must exceed t0 = {t0}")]
    EmptyWindow { t0: f64, t1: f64 },
    #[error("invalid propagator config: {0}")]
    BadConfig(String),
    #[error("norm drift {drift:.3e} exceeds 1e-6: reduce the step or tighten the tolerance")]
    NormDrift { drift: f64 },
    #[error("trace drift {drift:.3e} exceeds 1e-5: reduce the step")]
    TraceDrift { drift: f64 },
    #[error("positivity violation: eigenvalue {0:.3e} below -1e-5")]
    PositivityViolation(f64),
    #[error("integrator failure: {0}")]
    Integrator(#[from] OdeError),
    #[error(transparent)]
    Hilbert(#[from] crate::hilbert::HilbertError),
    #[error("amplitudes (x, y) must satisfy |x|^2 + |y|^2 = 1, got {0}")]
    BadSuperposition(f64),
}

/// Hard limits on conservation-law drift during propagation.
const NORM_DRIFT_ERROR: f64 = 1e-6;
const TRACE_DRIFT_ERROR: f64 = 1e-5;
const POSITIVITY_ERROR: f64 = -1e-5;

/// Normalized complex amplitude vector over a basis.
#[derive(Clone, Debug)]
pub struct StateVector {
    basis: Arc<Basis>,
    pub amplitudes: Array1<C64>,
}

impl StateVector {
    pub fn new(basis: Arc<Basis>, amplitudes: Array1<C64>) -> Result<Self, DynamicsError> {
        if amplitudes.len() != basis.dim() {
            return Err(DynamicsError::DimensionMismatch {
                expected: basis.dim(),
                got: amplitudes.len(),
            });
        }
        let norm = amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(DynamicsError::NotNormalized { norm });
        }
        Ok(Self { basis, amplitudes })
    }

    /// Unit vector on a single basis state.
    pub fn basis_state(basis: Arc<Basis>, s: &BasisState) -> Result<Self, DynamicsError> {
        let v = basis.unit_vector(s)?;
        Self::new(basis, v)
    }

    /// Normalized superposition from (amplitude, state) pairs; the input
    /// amplitudes must already be normalized.
    pub fn superposition(
        basis: Arc<Basis>,
        terms: &[(C64, BasisState)],
    ) -> Result<Self, DynamicsError> {
        let mut v = Array1::<C64>::zeros(basis.dim());
        for (amp, s) in terms {
            let i = basis
                .index_of(s)
                .ok_or_else(|| crate::hilbert::HilbertError::UnknownState(s.to_string()))?;
            v[i] += *amp;
        }
        Self::new(basis, v)
    }

    pub fn basis(&self) -> &Arc<Basis> {
        &self.basis
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes
            .iter()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }
}

/// Trace-one Hermitian positive density matrix over a basis.
#[derive(Clone, Debug)]
pub struct DensityMatrixState {
    basis: Arc<Basis>,
    pub matrix: Array2<C64>,
}

impl DensityMatrixState {
    pub fn new(basis: Arc<Basis>, matrix: Array2<C64>) -> Result<Self, DynamicsError> {
        if matrix.nrows() != basis.dim() || matrix.ncols() != basis.dim() {
            return Err(DynamicsError::DimensionMismatch {
                expected: basis.dim(),
                got: matrix.nrows(),
            });
        }
        let trace = (0..basis.dim()).map(|i| matrix[[i, i]].re).sum::<f64>();
        if (trace - 1.0).abs() > 1e-7 {
            return Err(DynamicsError::BadTrace { trace });
        }
        let herm = hermiticity_deviation(&matrix);
        if herm > 1e-9 {
            return Err(DynamicsError::NotHermitian(herm));
        }
        let min_eig = min_eigenvalue(&matrix);
        if min_eig < -1e-7 {
            return Err(DynamicsError::NotPositive(min_eig));
        }
        Ok(Self { basis, matrix })
    }

    /// Pure-state projector |psi><psi|.
    pub fn pure(psi: &StateVector) -> Self {
        let n = psi.amplitudes.len();
        let mut m = Array2::<C64>::zeros((n, n));
        for i in 0..n {
            for j in 0..n {
                m[[i, j]] = psi.amplitudes[i] * psi.amplitudes[j].conj();
            }
        }
        Self {
            basis: psi.basis.clone(),
            matrix: m,
        }
    }

    pub fn basis(&self) -> &Arc<Basis> {
        &self.basis
    }

    pub fn trace(&self) -> f64 {
        (0..self.matrix.nrows())
            .map(|i| self.matrix[[i, i]].re)
            .sum()
    }
}

/// Integration scheme.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Method {
    /// Classical RK4 with a fixed step (us). Propagation walks from sample
    /// to sample, so the effective step is additionally bounded by the
    /// sample spacing.
    FixedStep { step: f64 },
    /// Dormand-Prince 5(4) with a scalar error tolerance.
    Adaptive { tol: f64 },
}

/// Propagation settings: integration scheme plus the number of evenly
/// spaced trajectory samples (window endpoints included).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PropagatorConfig {
    pub method: Method,
    pub sample_count: usize,
}

impl PropagatorConfig {
    /// Default pure-state propagation: adaptive with tolerance 1e-10,
    /// 501 samples.
    pub fn adaptive() -> Self {
        Self {
            method: Method::Adaptive { tol: 1e-10 },
            sample_count: 501,
        }
    }

    /// Default density-matrix propagation over a window of length
    /// `window_us`: fixed step `window_us / 4000`, 501 samples.
    pub fn fixed_for_window(window_us: f64) -> Self {
        Self {
            method: Method::FixedStep {
                step: window_us / 4000.0,
            },
            sample_count: 501,
        }
    }

    pub fn with_samples(mut self, sample_count: usize) -> Self {
        self.sample_count = sample_count;
        self
    }

    fn validate(&self) -> Result<(), DynamicsError> {
        match self.method {
            Method::FixedStep { step } => {
                if !(step.is_finite() && step > 0.0) {
                    return Err(DynamicsError::BadConfig(format!(
                        "fixed step must be positive, got {step}"
                    )));
                }
            }
            Method::Adaptive { tol } => {
                if !(tol > 1e-14 && tol < 1e-4) {
                    return Err(DynamicsError::BadConfig(format!(
                        "adaptive tolerance must lie in (1e-14, 1e-4), got {tol}"
                    )));
                }
            }
        }
        if self.sample_count < 2 {
            return Err(DynamicsError::BadConfig(
                "sample_count must be at least 2".into(),
            ));
        }
        Ok(())
    }

    pub fn describe(&self) -> String {
        match self.method {
            Method::FixedStep { step } => format!("rk4_fixed(step={step:e})"),
            Method::Adaptive { tol } => format!("dp54_adaptive(tol={tol:e})"),
        }
    }
}

/// Method tag and conservation bookkeeping for a pure-state propagation.
#[derive(Clone, Debug, Default)]
pub struct PureMeta {
    pub method: String,
    pub steps: usize,
    pub max_norm_drift: f64,
}

/// Method tag and conservation bookkeeping for a density-matrix
/// propagation.
#[derive(Clone, Debug, Default)]
pub struct DensityMeta {
    pub method: String,
    pub steps: usize,
    pub max_trace_drift: f64,
    pub max_hermiticity_deviation: f64,
    pub min_eigenvalue: f64,
}

/// Sampled pure-state trajectory; times strictly increasing from the window
/// start to its end.
#[derive(Clone, Debug)]
pub struct PureTrajectory {
    pub basis: Arc<Basis>,
    pub times: Vec<f64>,
    pub states: Vec<Array1<C64>>,
    pub meta: PureMeta,
}

impl PureTrajectory {
    pub fn final_state(&self) -> &Array1<C64> {
        self.states.last().expect("trajectory has samples")
    }
}

/// Sampled density-matrix trajectory.
#[derive(Clone, Debug)]
pub struct DensityTrajectory {
    pub basis: Arc<Basis>,
    pub times: Vec<f64>,
    pub states: Vec<Array2<C64>>,
    pub meta: DensityMeta,
}

impl DensityTrajectory {
    pub fn final_state(&self) -> &Array2<C64> {
        self.states.last().expect("trajectory has samples")
    }
}

fn sample_times(t0: f64, t1: f64, count: usize) -> Vec<f64> {
    let n = count.max(2);
    (0..n)
        .map(|k| t0 + (t1 - t0) * k as f64 / (n - 1) as f64)
        .collect()
}

/// Solve `i d/dt psi = H(t) psi` from `t0` to `t1`.
///
/// The state is never renormalized; the worst norm drift over all samples is
/// recorded and a drift beyond 1e-6 aborts with an error suggesting a finer
/// step.
pub fn propagate_schrodinger(
    h_of_t: impl Fn(f64) -> Array2<C64>,
    psi0: &StateVector,
    t0: f64,
    t1: f64,
    cfg: &PropagatorConfig,
) -> Result<PureTrajectory, DynamicsError> {
    if t1 <= t0 {
        return Err(DynamicsError::EmptyWindow { t0, t1 });
    }
    cfg.validate()?;
    let norm0 = psi0.norm();
    if (norm0 - 1.0).abs() > 1e-9 {
        return Err(DynamicsError::NotNormalized { norm: norm0 });
    }

    let mut rhs = |t: f64, y: &Array1<C64>| -> Array1<C64> {
        h_of_t(t).dot(y).mapv(|z| C64::new(0.0, -1.0) * z)
    };

    let times = sample_times(t0, t1, cfg.sample_count);
    let mut states = Vec::with_capacity(times.len());
    states.push(psi0.amplitudes.clone());
    let mut meta = PureMeta {
        method: cfg.describe(),
        ..PureMeta::default()
    };
    let mut y = psi0.amplitudes.clone();
    let mut dt_next = match cfg.method {
        Method::FixedStep { step } => step,
        Method::Adaptive { .. } => (t1 - t0) / 64.0,
    };

    for seg in times.windows(2) {
        let (a, b) = (seg[0], seg[1]);
        match cfg.method {
            Method::FixedStep { step } => {
                let n = ((b - a) / step).ceil().max(1.0) as usize;
                y = rk4_fixed(&mut rhs, &y, a, b, n);
                meta.steps += n;
            }
            Method::Adaptive { tol } => {
                let (ynew, dt, stats) = dp54_adaptive(&mut rhs, &y, a, b, tol, dt_next)?;
                y = ynew;
                dt_next = dt;
                meta.steps += stats.accepted;
            }
        }
        let norm = y.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        meta.max_norm_drift = meta.max_norm_drift.max((norm - 1.0).abs());
        states.push(y.clone());
    }

    if meta.max_norm_drift > NORM_DRIFT_ERROR {
        return Err(DynamicsError::NormDrift {
            drift: meta.max_norm_drift,
        });
    }
    Ok(PureTrajectory {
        basis: psi0.basis.clone(),
        times,
        states,
        meta,
    })
}

/// Solve the master equation
/// `d/dt rho = -i[H, rho] + sum_k r_k (C_k rho C_k^+ - 1/2 {C_k^+ C_k, rho})`
/// from `t0` to `t1` with the given collapse operators.
///
/// Each sample is symmetrized (deviation logged), trace drift beyond 1e-5
/// and eigenvalues below -1e-5 abort with errors.
pub fn propagate_lindblad(
    h_of_t: impl Fn(f64) -> Array2<C64>,
    collapse: &[CollapseOp],
    rho0: &DensityMatrixState,
    t0: f64,
    t1: f64,
    cfg: &PropagatorConfig,
) -> Result<DensityTrajectory, DynamicsError> {
    if t1 <= t0 {
        return Err(DynamicsError::EmptyWindow { t0, t1 });
    }
    cfg.validate()?;
    let dim = rho0.matrix.nrows();

    // Fold the anticommutator part into a non-Hermitian effective
    // Hamiltonian A(t) = H(t) - (i/2) sum_k r_k C_k^+ C_k, leaving only the
    // jump terms explicit:
    //   d rho/dt = -i (A rho - rho A^+) + sum_k r_k C_k rho C_k^+.
    let mut damping = Array2::<C64>::zeros((dim, dim));
    let mut jumps: Vec<Array2<C64>> = Vec::new();
    for c in collapse {
        if c.rate < 0.0 {
            return Err(crate::hilbert::HilbertError::NegativeRate {
                name: "collapse",
                value: c.rate,
            }
            .into());
        }
        if c.rate > 0.0 {
            let cd = dagger(&c.op);
            damping = damping + cd.dot(&c.op).mapv(|z| z * C64::new(c.rate, 0.0));
            jumps.push(c.op.mapv(|z| z * C64::new(c.rate.sqrt(), 0.0)));
        }
    }
    let half_i_damping = damping.mapv(|z| z * C64::new(0.0, 0.5));
    let jump_daggers: Vec<Array2<C64>> = jumps.iter().map(dagger).collect();

    let mut rhs = |t: f64, rho: &Array2<C64>| -> Array2<C64> {
        let a_eff = h_of_t(t) - &half_i_damping;
        let mut out = a_eff.dot(rho) - rho.dot(&dagger(&a_eff));
        out.mapv_inplace(|z| C64::new(0.0, -1.0) * z);
        for (c, cd) in jumps.iter().zip(&jump_daggers) {
            out = out + c.dot(rho).dot(cd);
        }
        out
    };

    let times = sample_times(t0, t1, cfg.sample_count);
    let mut states = Vec::with_capacity(times.len());
    states.push(rho0.matrix.clone());
    let mut meta = DensityMeta {
        method: cfg.describe(),
        min_eigenvalue: min_eigenvalue(&rho0.matrix),
        ..DensityMeta::default()
    };
    let mut rho = rho0.matrix.clone();
    let mut dt_next = match cfg.method {
        Method::FixedStep { step } => step,
        Method::Adaptive { .. } => (t1 - t0) / 64.0,
    };

    for seg in times.windows(2) {
        let (a, b) = (seg[0], seg[1]);
        match cfg.method {
            Method::FixedStep { step } => {
                let n = ((b - a) / step).ceil().max(1.0) as usize;
                rho = rk4_fixed(&mut rhs, &rho, a, b, n);
                meta.steps += n;
            }
            Method::Adaptive { tol } => {
                let (rnew, dt, stats) = dp54_adaptive(&mut rhs, &rho, a, b, tol, dt_next)?;
                rho = rnew;
                dt_next = dt;
                meta.steps += stats.accepted;
            }
        }

        let herm = hermiticity_deviation(&rho);
        meta.max_hermiticity_deviation = meta.max_hermiticity_deviation.max(herm);
        // restore exact Hermiticity; the deviation stays on record
        let sym = (&rho + &dagger(&rho)).mapv(|z| z * C64::new(0.5, 0.0));
        rho = sym;

        let trace: f64 = (0..dim).map(|i| rho[[i, i]].re).sum();
        meta.max_trace_drift = meta.max_trace_drift.max((trace - 1.0).abs());
        if meta.max_trace_drift > TRACE_DRIFT_ERROR {
            return Err(DynamicsError::TraceDrift {
                drift: meta.max_trace_drift,
            });
        }
        let min_eig = min_eigenvalue(&rho);
        meta.min_eigenvalue = meta.min_eigenvalue.min(min_eig);
        if min_eig < POSITIVITY_ERROR {
            return Err(DynamicsError::PositivityViolation(min_eig));
        }
        states.push(rho.clone());
    }

    Ok(DensityTrajectory {
        basis: rho0.basis.clone(),
        times,
        states,
        meta,
    })
}

/// A pure or mixed state, borrowed for observable extraction.
#[derive(Clone, Copy)]
pub enum StateRef<'a> {
    Pure(&'a Array1<C64>),
    Density(&'a Array2<C64>),
}

impl StateRef<'_> {
    fn population(&self, i: usize) -> f64 {
        match self {
            StateRef::Pure(v) => v[i].norm_sqr(),
            StateRef::Density(m) => m[[i, i]].re,
        }
    }
}

/// Populations of the tracked chain states, fidelity against a target basis
/// state, the trap-state population, and the residual leakage
/// `1 - sum(tracked) - trap` (the trap term is skipped if the trap state is
/// itself tracked).
#[derive(Clone, Debug)]
pub struct ObservableReport {
    pub populations: Vec<f64>,
    pub fidelity: f64,
    pub trap_population: f64,
    pub leakage: f64,
}

pub fn observables(
    state: StateRef<'_>,
    basis: &Basis,
    tracked: &[BasisState],
    target: &BasisState,
) -> Result<ObservableReport, DynamicsError> {
    let target_idx = basis
        .index_of(target)
        .ok_or_else(|| crate::hilbert::HilbertError::UnknownState(target.to_string()))?;
    let mut populations = Vec::with_capacity(tracked.len());
    for s in tracked {
        let i = basis
            .index_of(s)
            .ok_or_else(|| crate::hilbert::HilbertError::UnknownState(s.to_string()))?;
        populations.push(state.population(i));
    }
    let trap = basis.trap_state();
    let trap_idx = basis.index_of(&trap).expect("trap state is in every basis");
    let trap_population = state.population(trap_idx);
    let tracked_sum: f64 = populations.iter().sum();
    let trap_term = if tracked.contains(&trap) {
        0.0
    } else {
        trap_population
    };
    Ok(ObservableReport {
        populations,
        fidelity: state.population(target_idx),
        trap_population,
        leakage: 1.0 - tracked_sum - trap_term,
    })
}

/// Hamiltonian closure over the product basis driven by a pulse set.
pub fn pulse_hamiltonian<'a>(
    basis: &'a Basis,
    pulses: &'a PulseSet,
) -> impl Fn(f64) -> Array2<C64> + 'a {
    move |t: f64| {
        build_hamiltonian(basis, &pulses.controls_at(t))
            .expect("validated pulse parameters produce finite amplitudes")
    }
}

/// Transfer fidelity for an encoded superposition: the input
/// `x |f>_1 + y |s>_1` (atom 2 in |s>, cavity empty) should arrive as
/// `x |f>_2 + y |s>_2` on atom 2 after the pulse window.
///
/// Closed systems propagate the pure state; open systems the density
/// matrix under the standard collapse set.
pub fn qst_superposition(
    x: C64,
    y: C64,
    pulses: &PulseSet,
    dec: &DecoherenceParams,
    cfg: &PropagatorConfig,
) -> Result<f64, DynamicsError> {
    let weight = x.norm_sqr() + y.norm_sqr();
    if (weight - 1.0).abs() > 1e-9 {
        return Err(DynamicsError::BadSuperposition(weight));
    }
    use crate::hilbert::AtomLevel::{F, S};
    let basis = Arc::new(Basis::build(2, 1)?);
    let initial = StateVector::superposition(
        basis.clone(),
        &[
            (x, BasisState::new(vec![F, S], 0)),
            (y, BasisState::new(vec![S, S], 0)),
        ],
    )?;
    let target = StateVector::superposition(
        basis.clone(),
        &[
            (x, BasisState::new(vec![S, F], 0)),
            (y, BasisState::new(vec![S, S], 0)),
        ],
    )?;
    let (t0, t1) = pulses.window();
    let h = pulse_hamiltonian(&basis, pulses);

    if dec.is_closed() {
        let traj = propagate_schrodinger(&h, &initial, t0, t1, cfg)?;
        let overlap = crate::linalg::inner(&target.amplitudes, traj.final_state());
        Ok(overlap.norm_sqr())
    } else {
        let collapse = crate::hilbert::collapse_operators(&basis, dec)?;
        let rho0 = DensityMatrixState::pure(&initial);
        let traj = propagate_lindblad(&h, &collapse, &rho0, t0, t1, cfg)?;
        let rho = traj.final_state();
        // <t| rho |t>
        let rt = rho.dot(&target.amplitudes);
        Ok(crate::linalg::inner(&target.amplitudes, &rt).re)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{collapse_operators, AtomDrive, AtomLevel};
    use crate::pulses::StaParams;
    use ndarray::array;
    use AtomLevel::{F, S};

    fn basis2() -> Arc<Basis> {
        Arc::new(Basis::build(2, 1).unwrap())
    }

    fn st(l1: AtomLevel, l2: AtomLevel, n: usize) -> BasisState {
        BasisState::new(vec![l1, l2], n)
    }

    // matrix exponential by scaling-and-squaring Taylor series; independent
    // of the integrators under test
    fn expm(m: &Array2<C64>) -> Array2<C64> {
        let n = m.nrows();
        let norm = m.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let scale = norm.log2().ceil().max(0.0) as usize + 2;
        let a = m.mapv(|z| z / C64::new(2.0_f64.powi(scale as i32), 0.0));
        let mut result = Array2::<C64>::eye(n);
        let mut term = Array2::<C64>::eye(n);
        for k in 1..30 {
            term = term.dot(&a).mapv(|z| z / C64::new(k as f64, 0.0));
            result += &term;
        }
        for _ in 0..scale {
            result = result.dot(&result);
        }
        result
    }

    #[test]
    fn free_evolution_is_identity() {
        let basis = basis2();
        let psi0 = StateVector::basis_state(basis.clone(), &st(F, S, 0)).unwrap();
        let dim = basis.dim();
        let h = move |_t: f64| Array2::<C64>::zeros((dim, dim));
        let traj =
            propagate_schrodinger(h, &psi0, 0.0, 1.0, &PropagatorConfig::adaptive()).unwrap();
        let diff = traj
            .final_state()
            .iter()
            .zip(psi0.amplitudes.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(diff <= 1e-12);
    }

    #[test]
    fn constant_hamiltonian_matches_matrix_exponential() {
        // single-atom block with Omega = g, evolved for 0.8 us
        let basis = Arc::new(Basis::build(1, 1).unwrap());
        let h0 = build_hamiltonian(&basis, &[AtomDrive::new(2.0, 2.0)]).unwrap();
        let psi0 = StateVector::basis_state(basis.clone(), &BasisState::new(vec![F], 0)).unwrap();
        let t1 = 0.8;
        let h = {
            let h0 = h0.clone();
            move |_t: f64| h0.clone()
        };
        let traj = propagate_schrodinger(h, &psi0, 0.0, t1, &PropagatorConfig::adaptive()).unwrap();

        let u = expm(&h0.mapv(|z| C64::new(0.0, -t1) * z));
        let expected = u.dot(&psi0.amplitudes);
        let err = traj
            .final_state()
            .iter()
            .zip(expected.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(err <= 1e-8, "amplitude error {err}");
    }

    #[test]
    fn shortcut_transfer_reaches_target() {
        let basis = basis2();
        let pulses = PulseSet::sta_sinusoidal(StaParams::default());
        let psi0 = StateVector::basis_state(basis.clone(), &st(F, S, 0)).unwrap();
        let h = pulse_hamiltonian(&basis, &pulses);
        let traj =
            propagate_schrodinger(&h, &psi0, 0.0, 0.5, &PropagatorConfig::adaptive()).unwrap();
        let report = observables(
            StateRef::Pure(traj.final_state()),
            &basis,
            &basis.transfer_chain(),
            &st(S, F, 0),
        )
        .unwrap();
        assert!(report.fidelity >= 0.995, "fidelity {}", report.fidelity);
        assert!(traj.meta.max_norm_drift <= 1e-7);
    }

    #[test]
    fn coarse_fixed_step_fails_loudly() {
        let basis = basis2();
        let pulses = PulseSet::sta_sinusoidal(StaParams::default());
        let psi0 = StateVector::basis_state(basis.clone(), &st(F, S, 0)).unwrap();
        let h = pulse_hamiltonian(&basis, &pulses);
        let cfg = PropagatorConfig {
            method: Method::FixedStep { step: 0.1 },
            sample_count: 2,
        };
        let err = propagate_schrodinger(&h, &psi0, 0.0, 0.5, &cfg).unwrap_err();
        assert!(matches!(err, DynamicsError::NormDrift { .. }), "{err}");
    }

    #[test]
    fn step_halving_leaves_fidelity_unchanged() {
        let basis = basis2();
        let pulses = PulseSet::sta_sinusoidal(StaParams::default());
        let psi0 = StateVector::basis_state(basis.clone(), &st(F, S, 0)).unwrap();
        let h = pulse_hamiltonian(&basis, &pulses);
        let mut fids = Vec::new();
        for step in [0.5 / 4000.0, 0.5 / 8000.0] {
            let cfg = PropagatorConfig {
                method: Method::FixedStep { step },
                sample_count: 2,
            };
            let traj = propagate_schrodinger(&h, &psi0, 0.0, 0.5, &cfg).unwrap();
            let i = basis.index_of(&st(S, F, 0)).unwrap();
            fids.push(traj.final_state()[i].norm_sqr());
        }
        assert!((fids[0] - fids[1]).abs() <= 1e-8);
    }

    #[test]
    fn closed_lindblad_matches_schrodinger() {
        let basis = basis2();
        let pulses = PulseSet::sta_sinusoidal(StaParams::default());
        let psi0 = StateVector::basis_state(basis.clone(), &st(F, S, 0)).unwrap();
        let h = pulse_hamiltonian(&basis, &pulses);

        let pure =
            propagate_schrodinger(&h, &psi0, 0.0, 0.5, &PropagatorConfig::adaptive()).unwrap();
        let collapse = collapse_operators(&basis, &DecoherenceParams::closed()).unwrap();
        let rho0 = DensityMatrixState::pure(&psi0);
        let mixed = propagate_lindblad(
            &h,
            &collapse,
            &rho0,
            0.0,
            0.5,
            &PropagatorConfig::fixed_for_window(0.5),
        )
        .unwrap();

        let chain = basis.transfer_chain();
        let p_pure = observables(
            StateRef::Pure(pure.final_state()),
            &basis,
            &chain,
            &st(S, F, 0),
        )
        .unwrap();
        let p_mixed = observables(
            StateRef::Density(mixed.final_state()),
            &basis,
            &chain,
            &st(S, F, 0),
        )
        .unwrap();
        for (a, b) in p_pure.populations.iter().zip(p_mixed.populations.iter()) {
            assert!((a - b).abs() <= 1e-6, "{a} vs {b}");
        }
        assert!(mixed.meta.max_trace_drift <= 1e-6);
        assert!(mixed.meta.min_eigenvalue >= -1e-7);
    }

    #[test]
    fn photon_decay_matches_exponential_law() {
        let basis = basis2();
        let kappa = 5.0;
        let dec = DecoherenceParams::new(kappa, 0.0).unwrap();
        let collapse = collapse_operators(&basis, &dec).unwrap();
        let psi0 = StateVector::basis_state(basis.clone(), &st(S, S, 1)).unwrap();
        let rho0 = DensityMatrixState::pure(&psi0);
        let dim = basis.dim();
        let h = move |_t: f64| Array2::<C64>::zeros((dim, dim));
        let t1 = 0.5;
        let traj = propagate_lindblad(
            h,
            &collapse,
            &rho0,
            0.0,
            t1,
            &PropagatorConfig::fixed_for_window(t1),
        )
        .unwrap();
        let i = basis.index_of(&st(S, S, 0)).unwrap();
        for (t, rho) in traj.times.iter().zip(traj.states.iter()) {
            let expected = 1.0 - (-kappa * t).exp();
            assert!(
                (rho[[i, i]].re - expected).abs() <= 1e-6,
                "t={t}: {} vs {expected}",
                rho[[i, i]].re
            );
        }
    }

    #[test]
    fn observable_reports() {
        let basis = basis2();
        let chain = basis.transfer_chain();
        let psi = StateVector::basis_state(basis.clone(), &st(F, S, 0)).unwrap();
        let r = observables(
            StateRef::Pure(&psi.amplitudes),
            &basis,
            &chain,
            &st(S, F, 0),
        )
        .unwrap();
        assert_eq!(r.populations[0], 1.0);
        assert!(r.populations[1..].iter().all(|p| *p == 0.0));
        assert_eq!(r.fidelity, 0.0);
        assert!(r.leakage.abs() <= 1e-12);

        let dim = basis.dim();
        let mixed = Array2::<C64>::eye(dim).mapv(|z| z / C64::new(dim as f64, 0.0));
        let r = observables(StateRef::Density(&mixed), &basis, &chain, &st(S, F, 0)).unwrap();
        for p in &r.populations {
            assert!((p - 1.0 / 18.0).abs() < 1e-15);
        }

        let unknown = BasisState::new(vec![F, S], 7);
        assert!(observables(StateRef::Pure(&psi.amplitudes), &basis, &chain, &unknown).is_err());
    }

    #[test]
    fn mid_transfer_photon_dominates_excited_states() {
        let basis = basis2();
        let pulses = PulseSet::sta_sinusoidal(StaParams::default());
        let psi0 = StateVector::basis_state(basis.clone(), &st(F, S, 0)).unwrap();
        let h = pulse_hamiltonian(&basis, &pulses);
        let traj =
            propagate_schrodinger(&h, &psi0, 0.0, 0.5, &PropagatorConfig::adaptive()).unwrap();
        let chain = basis.transfer_chain();
        let reports: Vec<ObservableReport> = traj
            .states
            .iter()
            .map(|s| observables(StateRef::Pure(s), &basis, &chain, &st(S, F, 0)).unwrap())
            .collect();
        let peak = reports
            .iter()
            .max_by(|a, b| a.populations[2].partial_cmp(&b.populations[2]).unwrap())
            .unwrap();
        let p3 = peak.populations[2];
        let p24 = peak.populations[1] + peak.populations[3];
        assert!(p3 > 5.0 * p24, "P3 = {p3}, P2+P4 = {p24}");
    }

    #[test]
    fn superposition_transfer() {
        let pulses = PulseSet::sta_sinusoidal(StaParams::default());
        let closed = DecoherenceParams::closed();
        let cfg = PropagatorConfig::adaptive().with_samples(2);

        let one = C64::new(1.0, 0.0);
        let zero = C64::new(0.0, 0.0);
        // the all-ground branch is stationary
        let f_trap = qst_superposition(zero, one, &pulses, &closed, &cfg).unwrap();
        assert!((f_trap - 1.0).abs() <= 1e-9, "F = {f_trap}");

        let f_transfer = qst_superposition(one, zero, &pulses, &closed, &cfg).unwrap();
        assert!(f_transfer >= 0.995);

        let r = C64::new(0.5_f64.sqrt(), 0.0);
        let f_super = qst_superposition(r, r, &pulses, &closed, &cfg).unwrap();
        assert!(f_super >= 0.99, "F = {f_super}");

        assert!(qst_superposition(one, one, &pulses, &closed, &cfg).is_err());
    }

    #[test]
    fn cutoff_two_agrees_with_cutoff_one() {
        // the conserved excitation keeps the dynamics in the chain sector,
        // so enlarging the photon space must not change anything
        let pulses = PulseSet::sta_sinusoidal(StaParams::default());
        let mut fids = Vec::new();
        for cutoff in [1, 2] {
            let basis = Arc::new(Basis::build(2, cutoff).unwrap());
            let psi0 = StateVector::basis_state(basis.clone(), &st(F, S, 0)).unwrap();
            let h = pulse_hamiltonian(&basis, &pulses);
            let traj =
                propagate_schrodinger(&h, &psi0, 0.0, 0.5, &PropagatorConfig::adaptive()).unwrap();
            let i = basis.index_of(&st(S, F, 0)).unwrap();
            fids.push(traj.final_state()[i].norm_sqr());
        }
        assert!((fids[0] - fids[1]).abs() <= 1e-8);
    }

    #[test]
    fn trajectory_times_are_strictly_increasing() {
        let basis = basis2();
        let psi0 = StateVector::basis_state(basis.clone(), &st(F, S, 0)).unwrap();
        let dim = basis.dim();
        let h = move |_t: f64| Array2::<C64>::zeros((dim, dim));
        let traj =
            propagate_schrodinger(h, &psi0, 0.0, 1.0, &PropagatorConfig::adaptive()).unwrap();
        assert_eq!(traj.times.first(), Some(&0.0));
        assert_eq!(traj.times.last(), Some(&1.0));
        assert!(traj.times.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(traj.times.len(), 501);
        assert_eq!(traj.states.len(), 501);
    }

    #[test]
    fn state_constructors_validate() {
        let basis = basis2();
        let v = Array1::<C64>::zeros(basis.dim());
        assert!(matches!(
            StateVector::new(basis.clone(), v).unwrap_err(),
            DynamicsError::NotNormalized { .. }
        ));

        let bad_dim = array![C64::new(1.0, 0.0)];
        assert!(matches!(
            StateVector::new(basis.clone(), bad_dim).unwrap_err(),
            DynamicsError::DimensionMismatch { .. }
        ));

        let mut m = Array2::<C64>::zeros((basis.dim(), basis.dim()));
        m[[0, 0]] = C64::new(0.5, 0.0);
        assert!(matches!(
            DensityMatrixState::new(basis.clone(), m).unwrap_err(),
            DynamicsError::BadTrace { .. }
        ));
    }
}
