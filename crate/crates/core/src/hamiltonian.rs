//! Coefficients of the enlarged-space generator `−i[f(x) I + g(x) σx] ∂x`.
//!
//! Everything here is expressed in the dimensionless position `u = a·x ≥ 1`.
//! With `s = sqrt(u² − 1)` and `r = artanh(s/u)` the generator depends on the
//! denominator `D = u + s − u·r`, which vanishes at a single point `u*` where
//! the even/odd system cannot be written in Dirac-like form.

use crate::coords::{u_of_delta, Acceleration, Boost};
use crate::error::{Error, Result};

/// `|D|` at or below this is treated as singular.
pub const SINGULAR_EPSILON: f64 = 1e-9;

/// Coefficient magnitude above which window validation rejects a region.
pub const DEFAULT_COEFFICIENT_CAP: f64 = 10.0;

/// Bracket used to locate the singular point.
pub const SINGULARITY_BRACKET: (f64, f64) = (1.001, 20.0);

/// Galileo coefficients are accepted up to this speed, flagged beyond
/// [`GALILEO_CAUTION_SPEED`].
pub const GALILEO_MAX_SPEED: f64 = 0.2;
pub const GALILEO_CAUTION_SPEED: f64 = 0.1;

/// Default minimum distance of `ln(δ/2)` from `−4` in the ultra-relativistic limit.
pub const ULTRA_LOG_MARGIN: f64 = 0.5;

/// One sample of the generator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoefficientPoint {
    pub u: f64,
    pub f: f64,
    pub g: f64,
    pub denominator: f64,
}

impl CoefficientPoint {
    /// Transport speed of the `σx = +1` component (the inertial wavefunction).
    pub fn speed_plus(&self) -> f64 {
        self.f + self.g
    }

    /// Transport speed of the `σx = −1` component (the Rindler wavefunction).
    pub fn speed_minus(&self) -> f64 {
        self.f - self.g
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingularPoint {
    pub u_star: f64,
    pub x_star: f64,
    pub v_star: f64,
    pub rapidity_star: f64,
}

/// Coefficients of a limiting (approximate) generator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitCoefficients {
    pub f: f64,
    pub g: f64,
    /// Set when the parameter lies outside the comfortable validity range.
    pub caution: bool,
}

/// Ultra-relativistic expansion for `v = 1 − δ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UltraParams {
    pub delta: f64,
    /// `f(δ) = −δ / (2 (1 + 4/ln(δ/2)))`.
    pub f_delta: f64,
}

impl UltraParams {
    /// Leading-order estimate `f(δ) ≈ −δ/2`.
    pub fn f_delta_coarse(&self) -> f64 {
        -0.5 * self.delta
    }

    pub fn coefficients(&self) -> LimitCoefficients {
        LimitCoefficients {
            f: 1.0 + self.f_delta,
            g: -self.f_delta,
            caution: false,
        }
    }
}

fn check_u(u: f64) -> Result<()> {
    if u.is_finite() && u >= 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("u = a·x must be at least 1, got {u}")))
    }
}

/// `(s, r)` for a valid `u`.
fn hyperbolic_parts(u: f64) -> (f64, f64) {
    let s = ((u - 1.0) * (u + 1.0)).sqrt();
    let r = (s / u).atanh();
    (s, r)
}

pub fn denominator(u: f64) -> Result<f64> {
    check_u(u)?;
    let (s, r) = hyperbolic_parts(u);
    Ok(u + s - u * r)
}

pub fn coefficients(u: f64) -> Result<CoefficientPoint> {
    coefficients_with_epsilon(u, SINGULAR_EPSILON)
}

pub fn coefficients_with_epsilon(u: f64, epsilon: f64) -> Result<CoefficientPoint> {
    check_u(u)?;
    let (s, r) = hyperbolic_parts(u);
    let d = u + s - u * r;
    if d.abs() <= epsilon {
        return Err(Error::Singularity {
            u,
            denominator: d.abs(),
        });
    }
    Ok(CoefficientPoint {
        u,
        f: (u + s) * (1.0 - 0.5 * r) / d,
        g: r * (s - u) / (2.0 * d),
        denominator: d,
    })
}

/// A first-order operator `α ∂t + β ∂x`.
#[derive(Debug, Clone, Copy)]
struct FirstOrder {
    dt: f64,
    dx: f64,
}

impl std::ops::Add for FirstOrder {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self {
            dt: self.dt + o.dt,
            dx: self.dx + o.dx,
        }
    }
}

type Mat2 = [[f64; 2]; 2];

fn mat_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut out = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

/// Same coefficients, obtained by assembling the even/odd derivative
/// operators, collecting the `∂t` and `∂x` matrices of the 2×2 system and
/// inverting the `∂t` side.
pub fn coefficients_via_inversion(u: f64) -> Result<CoefficientPoint> {
    check_u(u)?;
    let (s, r) = hyperbolic_parts(u);
    // ∂τ = sinh(τ/χ) ∂x + cosh(τ/χ) ∂t at cosh(τ/χ) = u
    let d_tau = FirstOrder { dt: u, dx: s };
    // ∂χ = (cosh − (τ/χ) sinh) ∂x + (sinh − (τ/χ) cosh) ∂t
    let d_chi = FirstOrder {
        dt: s - r * u,
        dx: u - r * s,
    };
    let d_t = FirstOrder { dt: 1.0, dx: 0.0 };
    let d_x = FirstOrder { dt: 0.0, dx: 1.0 };
    let half = |p: FirstOrder, sign: f64, q: FirstOrder| FirstOrder {
        dt: 0.5 * (p.dt + sign * q.dt),
        dx: 0.5 * (p.dx + sign * q.dx),
    };
    let t_even = half(d_t, 1.0, d_tau);
    let t_odd = half(d_t, -1.0, d_tau);
    let x_even = half(d_x, 1.0, d_chi);
    let x_odd = half(d_x, -1.0, d_chi);

    // i [[∂tᵉ, ∂tᵒ], [∂tᵒ, ∂tᵉ]] Ψ = −i [[∂xᵉ, ∂xᵒ], [∂xᵒ, ∂xᵉ]] Ψ
    let entries = [[t_even + x_even, t_odd + x_odd], [t_odd + x_odd, t_even + x_even]];
    let mut a: Mat2 = [[0.0; 2]; 2];
    let mut b: Mat2 = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            a[i][j] = entries[i][j].dt;
            b[i][j] = entries[i][j].dx;
        }
    }
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    if det.abs() <= SINGULAR_EPSILON {
        return Err(Error::Singularity {
            u,
            denominator: det.abs(),
        });
    }
    let a_inv = [[a[1][1] / det, -a[0][1] / det], [-a[1][0] / det, a[0][0] / det]];
    let h = mat_mul(&a_inv, &b);
    let f = 0.5 * (h[0][0] + h[1][1]);
    let g = 0.5 * (h[0][1] + h[1][0]);
    Ok(CoefficientPoint {
        u,
        f,
        g,
        // det A = (A_e + A_o)(A_e − A_o) with A_e + A_o = 1
        denominator: det,
    })
}

/// Plain bisection; `lo` and `hi` must bracket a sign change of `func`.
pub fn bisect<F>(mut func: F, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    let mut f_lo = func(lo);
    let f_hi = func(hi);
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() {
        return Err(Error::Domain(format!("no sign change on [{lo}, {hi}]")));
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = func(mid);
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Dimensionless singular point `u*` (independent of `a`).
pub fn singular_u() -> f64 {
    let (lo, hi) = SINGULARITY_BRACKET;
    // the bracket is fixed and D changes sign on it
    bisect(|u| denominator(u).unwrap_or(f64::NAN), lo, hi, 1e-12).expect("D changes sign on the bracket")
}

pub fn find_singularity(a: Acceleration) -> SingularPoint {
    let u_star = singular_u();
    SingularPoint {
        u_star,
        x_star: u_star / a.value(),
        v_star: (1.0 - 1.0 / (u_star * u_star)).sqrt(),
        rapidity_star: u_star.acosh(),
    }
}

/// Galileo-boost limit `f = 1 + v/2`, `g = −v/2`.
pub fn galileo_coefficients(v: f64) -> Result<LimitCoefficients> {
    if !(v.abs() <= GALILEO_MAX_SPEED) {
        return Err(Error::Domain(format!(
            "Galileo limit requires |v| <= {GALILEO_MAX_SPEED}, got {v}"
        )));
    }
    Ok(LimitCoefficients {
        f: 1.0 + 0.5 * v,
        g: -0.5 * v,
        caution: v.abs() > GALILEO_CAUTION_SPEED,
    })
}

pub fn ultra_coefficients(delta: f64) -> Result<UltraParams> {
    ultra_coefficients_with_margin(delta, ULTRA_LOG_MARGIN)
}

pub fn ultra_coefficients_with_margin(delta: f64, log_margin: f64) -> Result<UltraParams> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Domain(format!("delta must lie in (0, 1), got {delta}")));
    }
    let log_half = (0.5 * delta).ln();
    if (log_half + 4.0).abs() <= log_margin {
        return Err(Error::Singularity {
            u: u_of_delta(delta)?,
            denominator: (log_half + 4.0).abs(),
        });
    }
    Ok(UltraParams {
        delta,
        f_delta: -delta / (2.0 * (1.0 + 4.0 / log_half)),
    })
}

/// Value of `δ` at which the ultra-relativistic expansion itself is singular.
pub fn ultra_singular_delta() -> f64 {
    2.0 * (-4.0f64).exp()
}

/// Exact coefficients for an observer moving with velocity `v`.
pub fn coefficients_at_velocity(v: f64) -> Result<CoefficientPoint> {
    coefficients(Boost::from_velocity(v)?.u)
}
