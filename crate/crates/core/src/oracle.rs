//! Reference solutions for checking the solver.
//!
//! The inertial component obeys free massless transport, so its exact value
//! is the initial packet translated by `t`. The Rindler component is carried
//! along the characteristics of `c₋ = f − g`; tracing each grid point back to
//! `t = 0` and evaluating the analytic packet there gives its exact value up
//! to the ODE tolerance.

use num_complex::Complex64;

use crate::coords::Acceleration;
use crate::embedding::{Grid, ScalarField};
use crate::error::{Error, Result};
use crate::evolution::WavepacketSpec;
use crate::hamiltonian::{coefficients, singular_u};

pub fn exact_inertial(packet: &WavepacketSpec, t: f64, grid: Grid) -> ScalarField {
    ScalarField::from_fn(grid, |x| packet.eval(x - t))
}

/// Result of tracing one characteristic back to `t = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CharacteristicTrace {
    pub x_end: f64,
    pub x_origin: f64,
    pub steps: usize,
}

/// Region where the exact `c₋` may be evaluated for a window: `u > 1`, on the
/// window's side of `u*`, and at least `margin` away from it.
#[derive(Debug, Clone, Copy)]
pub struct CoverageDomain {
    a: f64,
    u_lo: f64,
    u_hi: f64,
}

impl CoverageDomain {
    pub fn for_window(grid: &Grid, a: Acceleration, margin: f64) -> Result<Self> {
        let a = a.value();
        let u_star = singular_u();
        let (lo, hi) = (a * grid.x_min(), a * grid.x_max());
        if lo > u_star + margin {
            Ok(Self {
                a,
                u_lo: u_star + margin,
                u_hi: f64::INFINITY,
            })
        } else if hi < u_star - margin && lo > 1.0 {
            Ok(Self {
                a,
                u_lo: 1.0,
                u_hi: u_star - margin,
            })
        } else {
            Err(Error::Config(
                "oracle window overlaps the singular band or u <= 1".into(),
            ))
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        let u = self.a * x;
        u > self.u_lo && u < self.u_hi
    }

    /// `c₋(x)` inside the domain.
    pub fn speed_minus(&self, x: f64) -> Option<f64> {
        if !self.contains(x) {
            return None;
        }
        let c = coefficients(self.a * x).ok()?;
        Some(c.f - c.g)
    }
}

/// Traces `dX/ds = −speed(X)` from `x` over `duration` with RK4 substeps no
/// longer than `max_substep`.
pub fn trace_back<F>(x: f64, duration: f64, max_substep: f64, speed: F) -> Result<CharacteristicTrace>
where
    F: Fn(f64) -> Option<f64>,
{
    if duration <= 0.0 {
        return Ok(CharacteristicTrace {
            x_end: x,
            x_origin: x,
            steps: 0,
        });
    }
    let steps = (duration / max_substep).ceil().max(1.0) as usize;
    let h = duration / steps as f64;
    let rate = |y: f64| speed(y).map(|c| -c).ok_or(Error::OracleCoverage { x });
    let mut y = x;
    for _ in 0..steps {
        let k1 = rate(y)?;
        let k2 = rate(y + 0.5 * h * k1)?;
        let k3 = rate(y + 0.5 * h * k2)?;
        let k4 = rate(y + h * k3)?;
        y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    // the endpoint itself must be inside the domain as well
    rate(y)?;
    Ok(CharacteristicTrace {
        x_end: x,
        x_origin: y,
        steps,
    })
}

/// Transported field `φ(x, t) = packet(X(x, t))` for an arbitrary speed profile.
pub fn characteristics_with_speed<F>(
    packet: &WavepacketSpec,
    t: f64,
    grid: Grid,
    max_substep: f64,
    speed: F,
) -> Result<ScalarField>
where
    F: Fn(f64) -> Option<f64>,
{
    let values = grid
        .points()
        .map(|x| trace_back(x, t, max_substep, &speed).map(|tr| packet.eval(tr.x_origin)))
        .collect::<Result<Vec<Complex64>>>()?;
    ScalarField::new(grid, values)
}

/// Backtraced origins for every grid point under the exact `c₋`.
pub fn rindler_traces(
    t: f64,
    grid: Grid,
    a: Acceleration,
    margin: f64,
    max_substep: f64,
) -> Result<Vec<CharacteristicTrace>> {
    let domain = CoverageDomain::for_window(&grid, a, margin)?;
    grid.points()
        .map(|x| trace_back(x, t, max_substep, |y| domain.speed_minus(y)))
        .collect()
}

/// Exact Rindler component at time `t` for an initially embedded packet.
pub fn characteristics_rindler(
    packet: &WavepacketSpec,
    t: f64,
    grid: Grid,
    a: Acceleration,
    margin: f64,
    max_substep: f64,
) -> Result<ScalarField> {
    let domain = CoverageDomain::for_window(&grid, a, margin)?;
    characteristics_with_speed(packet, t, grid, max_substep, |y| domain.speed_minus(y))
}

/// Forward trace of a single point, `dX/dt = c₋(X)`.
pub fn trace_forward(x0: f64, t: f64, a: Acceleration, margin: f64, max_substep: f64) -> Result<f64> {
    let grid = Grid::new(x0 - 1e-9, x0 + 1e-9, 8)?;
    let domain = CoverageDomain::for_window(&grid, a, margin)?;
    trace_back(x0, t, max_substep, |y| domain.speed_minus(y).map(|c| -c)).map(|tr| tr.x_origin)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorReport {
    pub l2_abs: f64,
    pub l2_rel: f64,
    pub linf_abs: f64,
    pub linf_rel: f64,
    /// Position of the largest pointwise error.
    pub argmax_x: f64,
}

/// Error of `field` against `reference`; relative values are normalised by the reference.
pub fn compare(field: &ScalarField, reference: &ScalarField) -> Result<ErrorReport> {
    if field.grid != reference.grid {
        return Err(Error::Validation("compared fields live on different grids".into()));
    }
    let grid = field.grid;
    let dx = grid.dx();
    let mut sum = 0.0;
    let mut linf: f64 = 0.0;
    let mut argmax = grid.x_min();
    for (i, (a, b)) in field.values.iter().zip(&reference.values).enumerate() {
        let e = (a - b).norm();
        sum += e * e;
        if e > linf {
            linf = e;
            argmax = grid.x(i);
        }
    }
    let l2_abs = (sum * dx).sqrt();
    let ref_l2 = reference.norm();
    let ref_linf = reference.max_abs();
    let ratio = |num: f64, den: f64| {
        if den > 0.0 {
            num / den
        } else if num == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    };
    Ok(ErrorReport {
        l2_abs,
        l2_rel: ratio(l2_abs, ref_l2),
        linf_abs: linf,
        linf_rel: ratio(linf, ref_linf),
        argmax_x: argmax,
    })
}
