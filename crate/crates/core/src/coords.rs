//! Rindler and Minkowski coordinates of the right wedge `x > |t|`.
//!
//! Natural units (`c = ħ = 1`). The accelerated observer with proper
//! acceleration `a` sits on the hyperbola `χ = 1/a`.

use crate::error::{Error, Result};

/// Proper acceleration of the Rindler observer.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Acceleration(f64);

impl Acceleration {
    pub fn new(a: f64) -> Result<Self> {
        if a.is_finite() && a > 0.0 {
            Ok(Self(a))
        } else {
            Err(Error::Domain(format!("acceleration must be positive, got {a}")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// Rindler position of the observer's own trajectory, `χ = 1/a`.
    pub fn trajectory_chi(self) -> f64 {
        1.0 / self.0
    }
}

impl Default for Acceleration {
    fn default() -> Self {
        Self(1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinkowskiEvent {
    pub t: f64,
    pub x: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RindlerEvent {
    pub tau: f64,
    pub chi: f64,
}

impl MinkowskiEvent {
    pub fn new(t: f64, x: f64) -> Self {
        Self { t, x }
    }

    pub fn in_right_wedge(&self) -> bool {
        self.x > self.t.abs()
    }
}

impl RindlerEvent {
    pub fn new(tau: f64, chi: f64) -> Self {
        Self { tau, chi }
    }
}

/// Local boost of the Rindler frame relative to the inertial frame that
/// coincides with it at `t = τ = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Boost {
    pub rapidity: f64,
    pub velocity: f64,
    /// Dimensionless position `u = a·x = cosh(rapidity)`.
    pub u: f64,
}

impl Boost {
    pub fn from_rapidity(rapidity: f64) -> Self {
        Self {
            rapidity,
            velocity: rapidity.tanh(),
            u: rapidity.cosh(),
        }
    }

    pub fn from_velocity(v: f64) -> Result<Self> {
        if !(v.abs() < 1.0) {
            return Err(Error::Domain(format!("velocity must satisfy |v| < 1, got {v}")));
        }
        Ok(Self {
            rapidity: v.atanh(),
            velocity: v,
            u: 1.0 / ((1.0 - v) * (1.0 + v)).sqrt(),
        })
    }
}

pub fn rindler_to_minkowski(e: RindlerEvent) -> Result<MinkowskiEvent> {
    if !(e.chi > 0.0) || !e.tau.is_finite() || !e.chi.is_finite() {
        return Err(Error::Domain(format!(
            "Rindler position must be positive and finite, got chi = {}",
            e.chi
        )));
    }
    let eta = e.tau / e.chi;
    Ok(MinkowskiEvent {
        t: e.chi * eta.sinh(),
        x: e.chi * eta.cosh(),
    })
}

pub fn minkowski_to_rindler(e: MinkowskiEvent) -> Result<RindlerEvent> {
    if !e.in_right_wedge() || !e.x.is_finite() {
        return Err(Error::Horizon { t: e.t, x: e.x });
    }
    // factored form keeps precision close to the horizon
    let chi = ((e.x - e.t) * (e.x + e.t)).sqrt();
    Ok(RindlerEvent {
        tau: 0.5 * chi * ((e.x + e.t) / (e.x - e.t)).ln(),
        chi,
    })
}

/// Rapidity `φ = a·τ` reached after proper time `τ`.
pub fn boost_of(a: Acceleration, tau: f64) -> Boost {
    Boost::from_rapidity(a.value() * tau)
}

/// Dimensionless position for an ultra-relativistic observer with `v = 1 − δ`.
pub fn u_of_delta(delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Domain(format!("delta must lie in (0, 1), got {delta}")));
    }
    // cosh(artanh v) = 1/sqrt((1-v)(1+v)) with 1-v = δ exactly
    Ok(1.0 / (delta * (2.0 - delta)).sqrt())
}

/// Velocity `v = sqrt(1 − 1/u²)` of the local boost at dimensionless position `u ≥ 1`.
pub fn velocity_of_u(u: f64) -> Result<f64> {
    if !(u >= 1.0) {
        return Err(Error::Domain(format!("u must be at least 1, got {u}")));
    }
    Ok(((u - 1.0) * (u + 1.0)).sqrt() / u)
}
