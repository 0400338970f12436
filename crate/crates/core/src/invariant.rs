//! Dynamical invariant for the three-level block: construction, closed-form
//! eigenstructure, the inverse-engineering map from auxiliary angles to
//! control amplitudes, and phase accumulation by quadrature.
//!
//! The invariant condition `i dI/dt = [H, I]`, written element-wise for the
//! lambda-block Hamiltonian and the one-parameter-family invariant used
//! here, is equivalent to the auxiliary equations
//!
//! ```text
//! gamma_dot = Omega cos(beta) - g sin(beta)
//! beta_dot  = tan(gamma) (g cos(beta) + Omega sin(beta))
//! ```
//!
//! whose algebraic inverse is
//!
//! ```text
//! Omega = beta_dot cot(gamma) sin(beta) + gamma_dot cos(beta)
//! g     = beta_dot cot(gamma) cos(beta) - gamma_dot sin(beta)
//! ```
//!
//! [`inverse_engineer`] implements that inverse, so controls it produces
//! satisfy the auxiliary equations to rounding error by construction.

use ndarray::{array, Array1, Array2};
use thiserror::Error;

use crate::linalg::{commutator, inner, max_abs, C64};

#[derive(Debug, Error, PartialEq)]
pub enum InvariantError {
    #[error("gamma = {0} is singular here (cot diverges); keep gamma away from 0")]
    SingularGamma(f64),
    #[error("invalid invariant parameter {name} = {value}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("phase integrand has imaginary part {0:.3e} (exceeds 1e-6): inputs are inconsistent")]
    ComplexPhase(f64),
}

/// Instantaneous auxiliary angles and their time derivatives.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AuxAngles {
    /// Mixing angle gamma (rad).
    pub gamma: f64,
    /// Sweep angle beta (rad).
    pub beta: f64,
    /// d(gamma)/dt (rad/us).
    pub gamma_dot: f64,
    /// d(beta)/dt (rad/us).
    pub beta_dot: f64,
}

/// A time-dependent path through angle space.
pub trait AnglePath {
    fn at(&self, t: f64) -> AuxAngles;
}

/// The shortcut ansatz: constant `gamma = epsilon`, linear sweep
/// `beta = pi t / (2 t_f)`. Derivatives are analytic.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StaAngles {
    pub epsilon: f64,
    pub t_f: f64,
}

impl StaAngles {
    pub fn new(epsilon: f64, t_f: f64) -> Result<Self, InvariantError> {
        if !(epsilon.is_finite() && epsilon != 0.0) {
            return Err(InvariantError::InvalidParameter {
                name: "epsilon",
                value: epsilon,
            });
        }
        if !(t_f.is_finite() && t_f > 0.0) {
            return Err(InvariantError::InvalidParameter {
                name: "t_f",
                value: t_f,
            });
        }
        Ok(Self { epsilon, t_f })
    }
}

impl AnglePath for StaAngles {
    fn at(&self, t: f64) -> AuxAngles {
        AuxAngles {
            gamma: self.epsilon,
            beta: std::f64::consts::PI * t / (2.0 * self.t_f),
            gamma_dot: 0.0,
            beta_dot: std::f64::consts::PI / (2.0 * self.t_f),
        }
    }
}

/// A frozen angle pair with vanishing derivatives; the invariant it
/// generates is constant in time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConstAngles {
    pub gamma: f64,
    pub beta: f64,
}

impl AnglePath for ConstAngles {
    fn at(&self, _t: f64) -> AuxAngles {
        AuxAngles {
            gamma: self.gamma,
            beta: self.beta,
            gamma_dot: 0.0,
            beta_dot: 0.0,
        }
    }
}

/// Scale constant plus an angle path: everything needed to evaluate the
/// invariant as a function of time.
#[derive(Clone, Copy, Debug)]
pub struct InvariantSpec<P> {
    /// Overall frequency scale mu (rad/us); the spectrum is {-mu, 0, +mu}.
    pub mu: f64,
    pub angles: P,
}

impl<P: AnglePath> InvariantSpec<P> {
    pub fn new(mu: f64, angles: P) -> Result<Self, InvariantError> {
        if !(mu.is_finite() && mu > 0.0) {
            return Err(InvariantError::InvalidParameter {
                name: "mu",
                value: mu,
            });
        }
        Ok(Self { mu, angles })
    }

    pub fn matrix(&self, t: f64) -> Array2<C64> {
        invariant_matrix(self.mu, &self.angles.at(t))
    }
}

/// The 3x3 Hermitian invariant
///
/// ```text
///          [       0         cos g sin b   -i sin g    ]
/// I = mu * [ cos g sin b          0         cos g cos b ]
///          [   i sin g       cos g cos b        0       ]
/// ```
///
/// with spectrum exactly {+mu, 0, -mu}.
pub fn invariant_matrix(mu: f64, a: &AuxAngles) -> Array2<C64> {
    let cg = a.gamma.cos();
    let sg = a.gamma.sin();
    let cb = a.beta.cos();
    let sb = a.beta.sin();
    let re = |x: f64| C64::new(mu * x, 0.0);
    let im = |x: f64| C64::new(0.0, mu * x);
    array![
        [re(0.0), re(cg * sb), im(-sg)],
        [re(cg * sb), re(0.0), re(cg * cb)],
        [im(sg), re(cg * cb), re(0.0)],
    ]
}

/// Which invariant eigenvector a quantity refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Zero,
    Plus,
    Minus,
}

impl Mode {
    /// Eigenvalue of `I/mu` for this mode.
    pub fn eigenvalue(self) -> f64 {
        match self {
            Mode::Zero => 0.0,
            Mode::Plus => 1.0,
            Mode::Minus => -1.0,
        }
    }
}

/// Closed-form normalized eigenvectors (Phi_0, Phi_+, Phi_-) of the
/// invariant, in the fixed phase convention used throughout (no re-phasing
/// from a numerical eigensolver, so phase quadrature is gauge-stable).
pub fn invariant_eigenstates(a: &AuxAngles) -> [Array1<C64>; 3] {
    let cg = a.gamma.cos();
    let sg = a.gamma.sin();
    let cb = a.beta.cos();
    let sb = a.beta.sin();
    let phi0 = array![
        C64::new(cg * cb, 0.0),
        C64::new(0.0, -sg),
        C64::new(-cg * sb, 0.0),
    ];
    let r = 0.5_f64.sqrt();
    let phi_plus = array![
        C64::new(r * sg * cb, r * sb),
        C64::new(0.0, r * cg),
        C64::new(-r * sg * sb, r * cb),
    ];
    let phi_minus = array![
        C64::new(r * sg * cb, -r * sb),
        C64::new(0.0, r * cg),
        C64::new(-r * sg * sb, -r * cb),
    ];
    [phi0, phi_plus, phi_minus]
}

fn eigenstate(a: &AuxAngles, mode: Mode) -> Array1<C64> {
    let [z, p, m] = invariant_eigenstates(a);
    match mode {
        Mode::Zero => z,
        Mode::Plus => p,
        Mode::Minus => m,
    }
}

/// A three-level state resolved in the invariant eigenbasis at one instant:
/// `psi = C_0 Phi_0 + C_+ Phi_+ + C_- Phi_-`.
///
/// Along exact dynamics under matched controls the weights `|C_m|^2` are
/// constants of motion; only the phases evolve.
#[derive(Clone, Copy, Debug)]
pub struct LrDecomposition {
    /// Coefficients in mode order (zero, plus, minus).
    pub coefficients: [C64; 3],
}

impl LrDecomposition {
    /// Populations `|C_m|^2` in mode order.
    pub fn weights(&self) -> [f64; 3] {
        [
            self.coefficients[0].norm_sqr(),
            self.coefficients[1].norm_sqr(),
            self.coefficients[2].norm_sqr(),
        ]
    }

    /// Sum of the weights; 1 for a normalized input state.
    pub fn total_weight(&self) -> f64 {
        self.weights().iter().sum()
    }
}

/// Resolve a three-level state in the invariant eigenbasis at the given
/// angles.
pub fn decompose(state: &Array1<C64>, a: &AuxAngles) -> LrDecomposition {
    let [z, p, m] = invariant_eigenstates(a);
    LrDecomposition {
        coefficients: [inner(&z, state), inner(&p, state), inner(&m, state)],
    }
}

/// Controls `(Omega, g)` that make the invariant generated by `a` an exact
/// dynamical invariant at this instant: the algebraic inverse of the
/// auxiliary equations. Fails where `cot(gamma)` diverges.
pub fn inverse_engineer(a: &AuxAngles) -> Result<(f64, f64), InvariantError> {
    let sg = a.gamma.sin();
    if sg == 0.0 || !a.gamma.is_finite() {
        return Err(InvariantError::SingularGamma(a.gamma));
    }
    let cot = a.gamma.cos() / sg;
    let cb = a.beta.cos();
    let sb = a.beta.sin();
    let omega = a.beta_dot * cot * sb + a.gamma_dot * cb;
    let g = a.beta_dot * cot * cb - a.gamma_dot * sb;
    Ok((omega, g))
}

/// Residuals of the auxiliary equations for a given angle/control sample:
/// `r_gamma = gamma_dot - (Omega cos b - g sin b)` and
/// `r_beta = beta_dot - tan(gamma) (g cos b + Omega sin b)`.
/// Zero residuals certify a matched pair.
pub fn auxiliary_residual(a: &AuxAngles, omega: f64, g: f64) -> (f64, f64) {
    let cb = a.beta.cos();
    let sb = a.beta.sin();
    let r_gamma = a.gamma_dot - (omega * cb - g * sb);
    let r_beta = a.beta_dot - a.gamma.tan() * (g * cb + omega * sb);
    (r_gamma, r_beta)
}

/// Max-norm residual of the invariant condition
/// `i dI/dt - [H(t), I(t)]` at time `t`, with `dI/dt` estimated by a
/// central difference of step `h`. Small values certify that `I` is a
/// dynamical invariant of `H`.
pub fn invariance_residual<P: AnglePath>(
    h_of_t: impl Fn(f64) -> Array2<C64>,
    spec: &InvariantSpec<P>,
    t: f64,
    h: f64,
) -> f64 {
    let di = (spec.matrix(t + h) - spec.matrix(t - h)) / C64::new(2.0 * h, 0.0);
    let lhs = di.mapv(|z| C64::new(0.0, 1.0) * z);
    let comm = commutator(&h_of_t(t), &spec.matrix(t));
    max_abs(&(lhs - comm))
}

/// Phase accumulated by invariant eigenvector `mode` up to `t_prime`:
/// the integral of `<Phi_m| (i d/dt - H) |Phi_m>` from 0 to `t_prime`,
/// by composite Simpson quadrature with `quad_steps` panels (rounded up to
/// even); `d/dt Phi_m` uses a central difference.
///
/// The integrand is real up to rounding for consistent inputs; an imaginary
/// part above 1e-6 is reported as an error, smaller ones are discarded.
pub fn lr_phase(
    mode: Mode,
    h_of_t: impl Fn(f64) -> Array2<C64>,
    angles: &impl AnglePath,
    t_prime: f64,
    quad_steps: usize,
) -> Result<f64, InvariantError> {
    if !(t_prime.is_finite() && t_prime >= 0.0) {
        return Err(InvariantError::InvalidParameter {
            name: "t_prime",
            value: t_prime,
        });
    }
    if t_prime == 0.0 {
        return Ok(0.0);
    }
    let n = quad_steps.max(64).next_multiple_of(2);
    let dt = t_prime / n as f64;
    let fd = 1e-5_f64.min(dt / 4.0);

    let integrand = |t: f64| -> Result<f64, InvariantError> {
        let phi = eigenstate(&angles.at(t), mode);
        let phi_p = eigenstate(&angles.at(t + fd), mode);
        let phi_m = eigenstate(&angles.at(t - fd), mode);
        let dphi = (phi_p - phi_m) / C64::new(2.0 * fd, 0.0);
        let geometric = C64::new(0.0, 1.0) * inner(&phi, &dphi);
        let dynamic = inner(&phi, &h_of_t(t).dot(&phi));
        let value = geometric - dynamic;
        if value.im.abs() > 1e-6 {
            return Err(InvariantError::ComplexPhase(value.im));
        }
        Ok(value.re)
    };

    // composite Simpson
    let mut acc = integrand(0.0)? + integrand(t_prime)?;
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * integrand(k as f64 * dt)?;
    }
    Ok(acc * dt / 3.0)
}
