//! Time-dependent control shapes: the sinusoidal STA pair for one and two
//! atoms, the Gaussian-refit cavity couplings, the STIRAP baseline set, and
//! static fluctuation perturbations.
//!
//! Every shape is a pure function of (parameters, t). Outside its schedule
//! window a pulse set evaluates to exactly zero (hard-zeroed, no taper): the
//! flanking intervals are dynamically trivial because either the laser or
//! the photon is absent there.

use std::f64::consts::PI;

use thiserror::Error;

use crate::hilbert::AtomDrive;
use crate::units::mhz_2pi_to_rad_per_us;

#[derive(Debug, Error, PartialEq)]
pub enum PulseError {
    #[error("invalid pulse parameter {name} = {value}: {constraint}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        constraint: &'static str,
    },
    #[error("perturbation {name} = {value} outside the +/-0.5 sanity bound")]
    PerturbationOutOfRange { name: &'static str, value: f64 },
}

fn check(
    ok: bool,
    name: &'static str,
    value: f64,
    constraint: &'static str,
) -> Result<(), PulseError> {
    if ok && value.is_finite() {
        Ok(())
    } else {
        Err(PulseError::InvalidParameter {
            name,
            value,
            constraint,
        })
    }
}

/// Parameters of the sinusoidal shortcut pulses: constant mixing angle
/// `epsilon` (rad), transfer window `t_f` (us), and inter-atom delay
/// `delta_t` (us) for the two-atom pair.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StaParams {
    pub epsilon: f64,
    pub t_f: f64,
    pub delta_t: f64,
}

impl StaParams {
    pub fn new(epsilon: f64, t_f: f64, delta_t: f64) -> Result<Self, PulseError> {
        check(
            epsilon > 0.0 && epsilon < PI / 2.0,
            "epsilon",
            epsilon,
            "must lie strictly inside (0, pi/2)",
        )?;
        check(t_f > 0.0, "t_f", t_f, "must be positive")?;
        check(delta_t >= 0.0, "delta_t", delta_t, "must be non-negative")?;
        Ok(Self {
            epsilon,
            t_f,
            delta_t,
        })
    }

    /// Common pulse amplitude `A = (pi / 2 t_f) * cot(epsilon)` in rad/us.
    pub fn amplitude(&self) -> f64 {
        (PI / (2.0 * self.t_f)) / self.epsilon.tan()
    }
}

impl Default for StaParams {
    /// Reference parameters: epsilon = 0.1152, t_f = 0.5 us, delta_t = 0.5 us.
    fn default() -> Self {
        Self {
            epsilon: 0.1152,
            t_f: 0.5,
            delta_t: 0.5,
        }
    }
}

/// Parameters of the Gaussian-refit cavity couplings: peak amplitude
/// `eps_prime` (rad/us), width `sigma` (us), and delay `delta_t` (us).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaussianParams {
    pub eps_prime: f64,
    pub sigma: f64,
    pub delta_t: f64,
}

impl GaussianParams {
    pub fn new(eps_prime: f64, sigma: f64, delta_t: f64) -> Result<Self, PulseError> {
        check(eps_prime > 0.0, "eps_prime", eps_prime, "must be positive")?;
        check(sigma > 0.0, "sigma", sigma, "must be positive")?;
        check(delta_t >= 0.0, "delta_t", delta_t, "must be non-negative")?;
        Ok(Self {
            eps_prime,
            sigma,
            delta_t,
        })
    }
}

impl Default for GaussianParams {
    /// Reference parameters: eps' = 4.5 * 2pi rad/us, sigma = sqrt(0.14) us,
    /// delta_t = 0.5 us.
    fn default() -> Self {
        Self {
            eps_prime: mhz_2pi_to_rad_per_us(4.5),
            sigma: 0.14_f64.sqrt(),
            delta_t: 0.5,
        }
    }
}

/// Parameters of the STIRAP baseline set over the window [0, t_a].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StirapParams {
    /// Total window (us).
    pub t_a: f64,
    /// Cavity-pulse width (us).
    pub w_c: f64,
    /// Laser-pulse width (us).
    pub w_l: f64,
    /// Cavity coupling peak (rad/us).
    pub g_peak: f64,
    /// Laser peak (rad/us).
    pub omega_peak: f64,
    /// Laser pulse offset from the window center (us).
    pub d: f64,
}

impl StirapParams {
    pub fn new(
        t_a: f64,
        w_c: f64,
        w_l: f64,
        g_peak: f64,
        omega_peak: f64,
        d: f64,
    ) -> Result<Self, PulseError> {
        check(t_a > 0.0, "t_a", t_a, "must be positive")?;
        check(w_c > 0.0, "w_c", w_c, "must be positive")?;
        check(w_l > 0.0, "w_l", w_l, "must be positive")?;
        check(g_peak > 0.0, "g_peak", g_peak, "must be positive")?;
        check(
            omega_peak > 0.0,
            "omega_peak",
            omega_peak,
            "must be positive",
        )?;
        check(d > 0.0, "d", d, "must be positive")?;
        Ok(Self {
            t_a,
            w_c,
            w_l,
            g_peak,
            omega_peak,
            d,
        })
    }
}

impl Default for StirapParams {
    /// Reference parameters: t_a = 10 us, w_c = t_a/6, w_l = t_a/12,
    /// g' = 4.5 * 2pi rad/us, omega' = 0.3 g', d = t_a/40.
    fn default() -> Self {
        let t_a = 10.0;
        let g_peak = mhz_2pi_to_rad_per_us(4.5);
        Self {
            t_a,
            w_c: t_a / 6.0,
            w_l: t_a / 12.0,
            g_peak,
            omega_peak: 0.3 * g_peak,
            d: t_a / 40.0,
        }
    }
}

/// Single-atom shortcut pulses on the window [0, t_f]:
/// `Omega = A cos(pi t / 2 t_f)`, `g = A sin(pi t / 2 t_f)` with
/// `A = (pi / 2 t_f) cot(epsilon)`. Outside the window both are zero.
pub fn sta_single(p: &StaParams, t: f64) -> (f64, f64) {
    if t < 0.0 || t > p.t_f {
        return (0.0, 0.0);
    }
    let a = p.amplitude();
    let phase = PI * t / (2.0 * p.t_f);
    (a * phase.cos(), a * phase.sin())
}

/// Two-atom shortcut pulses on the window [0, t_f]:
/// `g_1 = A cos(pi t / 2 t_f)`, `Omega_1 = A sin(pi t / 2 t_f)`,
/// `g_2 = A cos(pi (t - delta_t) / 2 t_f)`,
/// `Omega_2 = A sin(pi (t + delta_t) / 2 t_f)`.
/// Outside the window all four are zero.
pub fn sta_pair(p: &StaParams, t: f64) -> [AtomDrive; 2] {
    if t < 0.0 || t > p.t_f {
        return [AtomDrive::new(0.0, 0.0); 2];
    }
    let a = p.amplitude();
    let half = PI / (2.0 * p.t_f);
    let g1 = a * (half * t).cos();
    let o1 = a * (half * t).sin();
    let g2 = a * (half * (t - p.delta_t)).cos();
    let o2 = a * (half * (t + p.delta_t)).sin();
    [AtomDrive::new(o1, g1), AtomDrive::new(o2, g2)]
}

/// Raw Gaussian coupling shapes `G_1 = eps' exp(-t^2/sigma^2)` and
/// `G_2 = eps' exp(-(t - delta_t)^2/sigma^2)`.
///
/// These are the bare shapes; the schedule window is applied by the owning
/// [`PulseSet`], whose transfer window the Gaussians inherit.
pub fn gaussian_pair(p: &GaussianParams, t: f64) -> (f64, f64) {
    let g1 = p.eps_prime * (-(t * t) / (p.sigma * p.sigma)).exp();
    let dt = t - p.delta_t;
    let g2 = p.eps_prime * (-(dt * dt) / (p.sigma * p.sigma)).exp();
    (g1, g2)
}

/// STIRAP baseline pulses on the window [0, t_a]:
/// `g'_12 = g' exp(-(t - t_a/2)^2 / w_c^2)` for both atoms,
/// `Omega'_1 = Omega' exp(-(t - t_a/2 - d)^2 / w_l^2)`,
/// `Omega'_2 = Omega' exp(-(t - t_a/2 + d)^2 / w_l^2)`.
/// Outside the window all are zero.
pub fn stirap_set(p: &StirapParams, t: f64) -> [AtomDrive; 2] {
    if t < 0.0 || t > p.t_a {
        return [AtomDrive::new(0.0, 0.0); 2];
    }
    let mid = p.t_a / 2.0;
    let g = p.g_peak * (-((t - mid) / p.w_c).powi(2)).exp();
    let o1 = p.omega_peak * (-((t - mid - p.d) / p.w_l).powi(2)).exp();
    let o2 = p.omega_peak * (-((t - mid + p.d) / p.w_l).powi(2)).exp();
    [AtomDrive::new(o1, g), AtomDrive::new(o2, g)]
}

/// Static relative fluctuations of the Gaussian parameters:
/// `eps' -> eps' (1 + rel_amp)`, `sigma -> sigma (1 + rel_width)`.
/// Both relative offsets must lie within +/-0.5.
pub fn perturb(
    p: &GaussianParams,
    rel_amp: f64,
    rel_width: f64,
) -> Result<GaussianParams, PulseError> {
    if !(rel_amp.is_finite() && rel_amp.abs() <= 0.5) {
        return Err(PulseError::PerturbationOutOfRange {
            name: "rel_amp",
            value: rel_amp,
        });
    }
    if !(rel_width.is_finite() && rel_width.abs() <= 0.5) {
        return Err(PulseError::PerturbationOutOfRange {
            name: "rel_width",
            value: rel_width,
        });
    }
    Ok(GaussianParams {
        eps_prime: p.eps_prime * (1.0 + rel_amp),
        sigma: p.sigma * (1.0 + rel_width),
        delta_t: p.delta_t,
    })
}

/// One of the three control families driving the two-atom transfer.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PulseFamily {
    /// Sinusoidal shortcut pair for both lasers and both couplings.
    StaSinusoidal(StaParams),
    /// Sinusoidal lasers with Gaussian-refit cavity couplings.
    StaGaussian {
        sta: StaParams,
        gauss: GaussianParams,
    },
    /// Counterintuitive Gaussian STIRAP baseline.
    Stirap(StirapParams),
}

/// A complete four-channel control schedule {Omega_1, g_1, Omega_2, g_2}
/// with its window; evaluation outside the window is exactly zero.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PulseSet {
    family: PulseFamily,
}

impl PulseSet {
    pub fn new(family: PulseFamily) -> Self {
        Self { family }
    }

    pub fn sta_sinusoidal(p: StaParams) -> Self {
        Self::new(PulseFamily::StaSinusoidal(p))
    }

    pub fn sta_gaussian(sta: StaParams, gauss: GaussianParams) -> Self {
        Self::new(PulseFamily::StaGaussian { sta, gauss })
    }

    pub fn stirap(p: StirapParams) -> Self {
        Self::new(PulseFamily::Stirap(p))
    }

    pub fn family(&self) -> &PulseFamily {
        &self.family
    }

    pub fn family_name(&self) -> &'static str {
        match self.family {
            PulseFamily::StaSinusoidal(_) => "sta_sinusoidal",
            PulseFamily::StaGaussian { .. } => "sta_gaussian",
            PulseFamily::Stirap(_) => "stirap",
        }
    }

    /// Schedule window [t_start, t_end] in us.
    pub fn window(&self) -> (f64, f64) {
        match self.family {
            PulseFamily::StaSinusoidal(p) => (0.0, p.t_f),
            PulseFamily::StaGaussian { sta, .. } => (0.0, sta.t_f),
            PulseFamily::Stirap(p) => (0.0, p.t_a),
        }
    }

    /// All four controls at time `t`, zero outside the window.
    pub fn controls_at(&self, t: f64) -> [AtomDrive; 2] {
        let (t0, t1) = self.window();
        if t < t0 || t > t1 {
            return [AtomDrive::new(0.0, 0.0); 2];
        }
        match self.family {
            PulseFamily::StaSinusoidal(p) => sta_pair(&p, t),
            PulseFamily::StaGaussian { sta, gauss } => {
                let [d1, d2] = sta_pair(&sta, t);
                let (g1, g2) = gaussian_pair(&gauss, t);
                [AtomDrive::new(d1.omega, g1), AtomDrive::new(d2.omega, g2)]
            }
            PulseFamily::Stirap(p) => stirap_set(&p, t),
        }
    }
}
