//! Browser bindings for the rindler-embed simulator.
//!
//! Three operations are exported: a coefficient curve over `u`, the
//! singular-point report, and a steppable wavepacket evolution.

use wasm_bindgen::prelude::*;

use rindler_embed::coords::Acceleration;
use rindler_embed::evolution::{build_generator, Evolver, GridWindow, SolverConfig, WavepacketSpec};
use rindler_embed::hamiltonian::find_singularity;
use rindler_embed::runner::{coefficient_scan, Regime};
use rindler_embed::Result;

fn js_err(e: rindler_embed::Error) -> JsError {
    JsError::new(&e.to_string())
}

/// Flattened `[u, f, g]` triples; singular samples carry `NaN` for `f` and `g`.
pub fn curve(u_min: f64, u_max: f64, samples: usize) -> Result<Vec<f64>> {
    let rows = coefficient_scan(1.0, u_min, u_max, samples)?;
    Ok(rows
        .iter()
        .flat_map(|r| {
            let (f, g) = match r.regime {
                Regime::Singular => (f64::NAN, f64::NAN),
                _ => (r.f.unwrap_or(f64::NAN), r.g.unwrap_or(f64::NAN)),
            };
            [r.u, f, g]
        })
        .collect())
}

/// `[u*, x*, v*]` for acceleration `a`.
pub fn singular_point(a: f64) -> Result<Vec<f64>> {
    let s = find_singularity(Acceleration::new(a)?);
    Ok(vec![s.u_star, s.x_star, s.v_star])
}

#[wasm_bindgen(js_name = coefficientCurve)]
pub fn coefficient_curve(u_min: f64, u_max: f64, samples: usize) -> std::result::Result<Vec<f64>, JsError> {
    curve(u_min, u_max, samples).map_err(js_err)
}

#[wasm_bindgen]
pub fn singularity(a: f64) -> std::result::Result<Vec<f64>, JsError> {
    singular_point(a).map_err(js_err)
}

/// A packet evolving under the exact generator with `a = 1`.
#[wasm_bindgen]
pub struct WavepacketDemo {
    evolver: Evolver,
    x: Vec<f64>,
    dt: f64,
}

impl WavepacketDemo {
    pub fn create(x_min: f64, x_max: f64, n: usize, x0: f64, sigma: f64, k0: f64) -> Result<Self> {
        let window = GridWindow::new(x_min, x_max, n, Acceleration::default())?;
        let generator = build_generator(&window)?;
        let packet = WavepacketSpec {
            x0,
            sigma,
            k0,
            amplitude: 1.0,
        };
        packet.validate(&generator.grid)?;
        let evolver = Evolver::from_packet(generator, SolverConfig::default(), packet)?;
        let dt = evolver.max_dt();
        let x = evolver.generator().grid.points().collect();
        Ok(Self { evolver, x, dt })
    }

    pub fn advance(&mut self, steps: usize) -> Result<()> {
        for _ in 0..steps {
            self.evolver.step(self.dt)?;
        }
        Ok(())
    }
}

#[wasm_bindgen]
impl WavepacketDemo {
    #[wasm_bindgen(constructor)]
    pub fn new(
        x_min: f64,
        x_max: f64,
        n: usize,
        x0: f64,
        sigma: f64,
        k0: f64,
    ) -> std::result::Result<WavepacketDemo, JsError> {
        Self::create(x_min, x_max, n, x0, sigma, k0).map_err(js_err)
    }

    pub fn step(&mut self, steps: usize) -> std::result::Result<(), JsError> {
        self.advance(steps).map_err(js_err)
    }

    pub fn time(&self) -> f64 {
        self.evolver.time()
    }

    pub fn positions(&self) -> Vec<f64> {
        self.x.clone()
    }

    #[wasm_bindgen(js_name = inertialDensity)]
    pub fn inertial_density(&self) -> Vec<f64> {
        self.evolver.inertial().values.iter().map(|z| z.norm_sqr()).collect()
    }

    #[wasm_bindgen(js_name = rindlerDensity)]
    pub fn rindler_density(&self) -> Vec<f64> {
        self.evolver.rindler().values.iter().map(|z| z.norm_sqr()).collect()
    }
}
