//! Configuration, scenario orchestration and serialization for the CLI.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::coords::{u_of_delta, velocity_of_u, Acceleration, Boost};
use crate::error::{Error, Result};
use crate::evolution::{
    evolve, BoundaryKind, CoefficientModel, DerivativeScheme, Generator, GridWindow, ObservableRow, Snapshot,
    SolverConfig, WavepacketSpec, DEFAULT_SINGULAR_MARGIN,
};
use crate::hamiltonian::{
    coefficients, find_singularity, galileo_coefficients, ultra_coefficients, ultra_singular_delta,
    DEFAULT_COEFFICIENT_CAP, SINGULAR_EPSILON,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowConfig {
    pub x_min: f64,
    pub x_max: f64,
    #[serde(rename = "N")]
    pub n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    pub t_final: f64,
    pub cfl: f64,
    pub snapshot_stride: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeConfig {
    pub derivative: DerivativeScheme,
    pub boundary: BoundaryKind,
}

/// Which generator drives the evolution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum Mode {
    Exact,
    Galileo,
    Ultra { delta: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    pub a: f64,
    pub window: WindowConfig,
    pub packet: WavepacketSpec,
    pub time: TimeConfig,
    pub scheme: SchemeConfig,
    pub mode: Mode,
    pub output: PathBuf,
}

/// A configuration whose invariants have all been checked.
#[derive(Debug, Clone)]
pub struct PreparedRun {
    pub config: SimulationConfig,
    pub generator: Generator,
    pub solver: SolverConfig,
}

impl SimulationConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    /// The reference scenario: Gaussian at `x = 6` on `[4.5, 12]` with `a = 1`.
    pub fn standard() -> Self {
        Self {
            a: 1.0,
            window: WindowConfig {
                x_min: 4.5,
                x_max: 12.0,
                n: 2048,
            },
            packet: WavepacketSpec {
                x0: 6.0,
                sigma: 0.5,
                k0: 0.0,
                amplitude: 1.0,
            },
            time: TimeConfig {
                t_final: 1.0,
                cfl: 0.5,
                snapshot_stride: 100,
            },
            scheme: SchemeConfig {
                derivative: DerivativeScheme::Central4thOrder,
                boundary: BoundaryKind::Sponge,
            },
            mode: Mode::Exact,
            output: PathBuf::from("out"),
        }
    }

    pub fn solver(&self) -> SolverConfig {
        SolverConfig {
            scheme: self.scheme.derivative,
            boundary: self.scheme.boundary,
            cfl: self.time.cfl,
            t_final: self.time.t_final,
            snapshot_stride: self.time.snapshot_stride,
        }
    }

    /// Validates everything that can be checked before time stepping.
    pub fn prepare(&self) -> Result<PreparedRun> {
        let a = Acceleration::new(self.a).map_err(|e| Error::Config(e.to_string()))?;
        let window = GridWindow::new(self.window.x_min, self.window.x_max, self.window.n, a)?;
        let model = match self.mode {
            Mode::Exact => CoefficientModel::Exact { a },
            Mode::Galileo => CoefficientModel::Galileo { a },
            Mode::Ultra { delta } => CoefficientModel::Ultra {
                params: ultra_coefficients(delta).map_err(|e| Error::Config(e.to_string()))?,
            },
        };
        let generator = Generator::for_window(&window, model, DEFAULT_SINGULAR_MARGIN)?;
        let solver = self.solver();
        solver.validate()?;
        self.packet.validate(&window.grid)?;
        Ok(PreparedRun {
            config: self.clone(),
            generator,
            solver,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservableReport {
    pub rows: Vec<ObservableRow>,
}

/// Full output of an evolution run.
#[derive(Debug, Clone, Serialize)]
pub struct EvolveReport {
    pub config: SimulationConfig,
    pub steps: usize,
    pub dt: f64,
    pub report: ObservableReport,
}

pub struct EvolveOutcome {
    pub snapshots: Vec<Snapshot>,
    pub report: EvolveReport,
}

pub fn run_evolution(config: &SimulationConfig) -> Result<EvolveOutcome> {
    let prepared = config.prepare()?;
    let max_dt = crate::evolution::cfl_dt(&prepared.generator, prepared.solver.cfl);
    let steps = crate::evolution::step_count(prepared.solver.t_final, max_dt);
    let dt = if steps == 0 {
        0.0
    } else {
        prepared.solver.t_final / steps as f64
    };
    let snapshots = evolve(&config.packet, prepared.generator, prepared.solver)?;
    let rows = snapshots.iter().map(|s| s.row.clone()).collect();
    Ok(EvolveOutcome {
        report: EvolveReport {
            config: config.clone(),
            steps,
            dt,
            report: ObservableReport { rows },
        },
        snapshots,
    })
}

/// Writes snapshot CSVs and `report.json` into the configured output directory.
pub fn cmd_evolve(config: &SimulationConfig) -> Result<EvolveReport> {
    let outcome = run_evolution(config)?;
    fs::create_dir_all(&config.output)?;
    for snap in &outcome.snapshots {
        let path = config.output.join(format!("snapshot_{:06}.csv", snap.step));
        write_file(&path, &snapshot_csv(snap))?;
    }
    let json = serde_json::to_string_pretty(&outcome.report)?;
    write_file(&config.output.join("report.json"), &(json + "\n"))?;
    Ok(outcome.report)
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    let mut file = fs::File::create(path)?;
    file.write_all(contents.as_bytes())?;
    Ok(())
}

/// Full double precision in a locale-independent form.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub const SNAPSHOT_HEADER: &str = "x,Re(ψᵉ),Im(ψᵉ),Re(ψᵒ),Im(ψᵒ),Re(ψ),Im(ψ),Re(ψ'),Im(ψ')";

pub fn snapshot_csv(snap: &Snapshot) -> String {
    let s = &snap.state;
    let mut out = String::with_capacity(s.grid.len() * 9 * 24);
    out.push_str(SNAPSHOT_HEADER);
    out.push('\n');
    for i in 0..s.grid.len() {
        let (e, o) = (s.even[i], s.odd[i]);
        let (p, q) = (e + o, e - o);
        let cols = [s.grid.x(i), e.re, e.im, o.re, o.im, p.re, p.im, q.re, q.im];
        let line: Vec<String> = cols.iter().map(|v| fmt_f64(*v)).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

/// Classification of a coefficient sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Nonrelativistic,
    Relativistic,
    Ultrarelativistic,
    Singular,
}

impl Regime {
    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::Nonrelativistic => "nonrelativistic",
            Regime::Relativistic => "relativistic",
            Regime::Ultrarelativistic => "ultrarelativistic",
            Regime::Singular => "singular",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoefficientRow {
    pub u: f64,
    /// `None` inside the singular neighbourhood.
    pub f: Option<f64>,
    pub g: Option<f64>,
    pub denominator: f64,
    pub regime: Regime,
}

/// Samples `f`, `g`, `D` on `samples` evenly spaced points of `[u_min, u_max]`.
///
/// The scan is in `u = a·x`, so `a` only enters through validation.
pub fn coefficient_scan(a: f64, u_min: f64, u_max: f64, samples: usize) -> Result<Vec<CoefficientRow>> {
    Acceleration::new(a)?;
    if !(u_min >= 1.0 && u_max > u_min && u_max.is_finite()) {
        return Err(Error::Domain(format!(
            "need 1 <= u_min < u_max, got [{u_min}, {u_max}]"
        )));
    }
    if samples < 2 {
        return Err(Error::Domain("a scan needs at least two samples".into()));
    }
    let step = (u_max - u_min) / (samples - 1) as f64;
    (0..samples)
        .map(|i| {
            let u = if i + 1 == samples {
                u_max
            } else {
                u_min + i as f64 * step
            };
            let denominator = crate::hamiltonian::denominator(u)?;
            let parsed = coefficients(u).ok().filter(|c| {
                denominator.abs() > SINGULAR_EPSILON
                    && c.f.abs() <= DEFAULT_COEFFICIENT_CAP
                    && c.g.abs() <= DEFAULT_COEFFICIENT_CAP
            });
            let regime = match parsed {
                None => Regime::Singular,
                Some(_) => {
                    let v = velocity_of_u(u)?;
                    if v < 0.1 {
                        Regime::Nonrelativistic
                    } else if v > 0.99 {
                        Regime::Ultrarelativistic
                    } else {
                        Regime::Relativistic
                    }
                }
            };
            Ok(CoefficientRow {
                u,
                f: parsed.map(|c| c.f),
                g: parsed.map(|c| c.g),
                denominator,
                regime,
            })
        })
        .collect()
}

pub fn coefficients_csv(rows: &[CoefficientRow]) -> String {
    let mut out = String::from("u,f,g,D,regime_flag\n");
    let opt = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            fmt_f64(r.u),
            opt(r.f),
            opt(r.g),
            fmt_f64(r.denominator),
            r.regime.as_str()
        );
    }
    out
}

pub fn cmd_coeffs(a: f64, u_min: f64, u_max: f64, samples: usize, out: &Path) -> Result<Vec<CoefficientRow>> {
    let rows = coefficient_scan(a, u_min, u_max, samples)?;
    write_file(out, &coefficients_csv(&rows))?;
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SingularityReport {
    pub a: f64,
    pub u_star: f64,
    pub x_star: f64,
    pub v_star: f64,
    pub rapidity_star: f64,
    /// `δ*` where `ln(δ/2) = −4`, the singular point of the ultra-relativistic expansion.
    pub ultra_delta_star: f64,
    pub ultra_v_star: f64,
}

pub fn cmd_singularity(a: f64) -> Result<SingularityReport> {
    let acc = Acceleration::new(a)?;
    let s = find_singularity(acc);
    let delta = ultra_singular_delta();
    Ok(SingularityReport {
        a,
        u_star: s.u_star,
        x_star: s.x_star,
        v_star: s.v_star,
        rapidity_star: s.rapidity_star,
        ultra_delta_star: delta,
        ultra_v_star: 1.0 - delta,
    })
}

impl SingularityReport {
    pub fn to_text(&self) -> String {
        format!(
            "a          = {}\nu*         = {:.12}\nx* = u*/a  = {:.12}\nv*         = {:.12}\nrapidity*  = {:.12}\nultra delta* = 2 exp(-4) = {:.12}\nultra v*   = 1 - delta* = {:.12}\n",
            self.a, self.u_star, self.x_star, self.v_star, self.rapidity_star, self.ultra_delta_star, self.ultra_v_star
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LimitRegime {
    Galileo,
    Ultra,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GalileoRow {
    pub v: f64,
    pub f_exact: f64,
    pub f_limit: f64,
    pub g_exact: f64,
    pub g_limit: f64,
    pub abs_diff: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UltraRow {
    pub delta: f64,
    pub g_exact: f64,
    pub minus_f_delta: f64,
    pub relative_deviation: f64,
}

pub fn galileo_table(velocities: &[f64]) -> Result<Vec<GalileoRow>> {
    velocities
        .iter()
        .map(|&v| {
            let limit = galileo_coefficients(v)?;
            let exact = coefficients(Boost::from_velocity(v)?.u)?;
            Ok(GalileoRow {
                v,
                f_exact: exact.f,
                f_limit: limit.f,
                g_exact: exact.g,
                g_limit: limit.g,
                abs_diff: (exact.f - limit.f).abs(),
                bound: v * v,
            })
        })
        .collect()
}

pub fn ultra_table(deltas: &[f64]) -> Result<Vec<UltraRow>> {
    deltas
        .iter()
        .map(|&delta| {
            let p = ultra_coefficients(delta)?;
            let exact = coefficients(u_of_delta(delta)?)?;
            let minus_f = -p.f_delta;
            Ok(UltraRow {
                delta,
                g_exact: exact.g,
                minus_f_delta: minus_f,
                relative_deviation: (exact.g - minus_f).abs() / minus_f.abs(),
            })
        })
        .collect()
}

pub fn limits_csv(regime: LimitRegime, params: &[f64]) -> Result<String> {
    let mut out = String::new();
    match regime {
        LimitRegime::Galileo => {
            out.push_str("v,f_exact,f_limit,abs_diff,bound\n");
            for r in galileo_table(params)? {
                let cols = [r.v, r.f_exact, r.f_limit, r.abs_diff, r.bound].map(fmt_f64);
                let _ = writeln!(out, "{}", cols.join(","));
            }
        }
        LimitRegime::Ultra => {
            out.push_str("delta,g_exact,minus_f_delta,relative_deviation\n");
            for r in ultra_table(params)? {
                let cols = [r.delta, r.g_exact, r.minus_f_delta, r.relative_deviation].map(fmt_f64);
                let _ = writeln!(out, "{}", cols.join(","));
            }
        }
    }
    Ok(out)
}

pub fn cmd_limits(regime: LimitRegime, params: &[f64], out: Option<&Path>) -> Result<String> {
    let csv = limits_csv(regime, params)?;
    if let Some(path) = out {
        write_file(path, &csv)?;
    }
    Ok(csv)
}

#[cfg(test)]
mod tests {
    use super::*;

    const STANDARD_JSON: &str = r#"{
        "a": 1.0,
        "window": {"x_min": 4.5, "x_max": 12.0, "N": 2048},
        "packet": {"x0": 6.0, "sigma": 0.5, "k0": 0.0, "amplitude": 1.0},
        "time": {"t_final": 1.0, "cfl": 0.5, "snapshot_stride": 100},
        "scheme": {"derivative": "central-4th-order", "boundary": "sponge"},
        "mode": "exact",
        "output": "out"
    }"#;

    #[test]
    fn parses_standard_config() {
        let c = SimulationConfig::from_json(STANDARD_JSON).unwrap();
        assert_eq!(c, SimulationConfig::standard());
        let text = serde_json::to_string(&c).unwrap();
        assert_eq!(SimulationConfig::from_json(&text).unwrap(), c);
    }

    #[test]
    fn parses_modes_and_aliases() {
        let ultra = STANDARD_JSON.replace("\"exact\"", "{\"ultra\": {\"delta\": 0.01}}");
        assert_eq!(
            SimulationConfig::from_json(&ultra).unwrap().mode,
            Mode::Ultra { delta: 0.01 }
        );
        let short = STANDARD_JSON.replace("central-4th-order", "upwind1");
        assert_eq!(
            SimulationConfig::from_json(&short).unwrap().scheme.derivative,
            DerivativeScheme::Upwind1stOrder
        );
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let extra = STANDARD_JSON.replace("\"a\": 1.0,", "\"a\": 1.0, \"verbose\": true,");
        assert!(matches!(SimulationConfig::from_json(&extra), Err(Error::Config(_))));
        let nested = STANDARD_JSON.replace("\"N\": 2048", "\"N\": 2048, \"dx\": 0.1");
        assert!(SimulationConfig::from_json(&nested).is_err());
        let lower = STANDARD_JSON.replace("\"N\"", "\"n\"");
        assert!(SimulationConfig::from_json(&lower).is_err());
    }

    #[test]
    fn invalid_configs_fail_before_stepping() {
        let mut c = SimulationConfig::standard();
        c.window = WindowConfig {
            x_min: 3.0,
            x_max: 4.0,
            n: 256,
        };
        c.packet.x0 = 3.5;
        c.packet.sigma = 0.1;
        assert_eq!(c.prepare().unwrap_err().exit_code(), 2);
        c.window = WindowConfig {
            x_min: 0.5,
            x_max: 2.0,
            n: 256,
        };
        assert_eq!(c.prepare().unwrap_err().exit_code(), 2);
        let mut c = SimulationConfig::standard();
        c.a = -1.0;
        assert_eq!(c.prepare().unwrap_err().exit_code(), 2);
        let mut c = SimulationConfig::standard();
        c.mode = Mode::Galileo;
        assert!(c.prepare().is_err());
        let mut c = SimulationConfig::standard();
        c.mode = Mode::Ultra {
            delta: ultra_singular_delta(),
        };
        assert!(c.prepare().is_err());
    }

    #[test]
    fn galileo_mode_on_a_slow_window() {
        let mut c = SimulationConfig::standard();
        c.window = WindowConfig {
            x_min: 1.0001,
            x_max: 1.02,
            n: 256,
        };
        c.packet = WavepacketSpec {
            x0: 1.01,
            sigma: 0.002,
            k0: 0.0,
            amplitude: 1.0,
        };
        c.time.t_final = 0.002;
        c.mode = Mode::Galileo;
        let out = run_evolution(&c).unwrap();
        assert!(out.report.report.rows.len() >= 2);
    }

    #[test]
    fn ultra_mode_runs() {
        let mut c = SimulationConfig::standard();
        c.window.n = 512;
        c.time.t_final = 0.5;
        c.mode = Mode::Ultra { delta: 0.01 };
        let out = run_evolution(&c).unwrap();
        let last = out.report.report.rows.last().unwrap();
        assert!((last.x_inertial - 6.5).abs() < 1e-3);
        // ψ' moves at 1 + 2 f(δ)
        let speed = 1.0 + 2.0 * ultra_coefficients(0.01).unwrap().f_delta;
        assert!((last.x_rindler - (6.0 + 0.5 * speed)).abs() < 1e-3);
    }

    #[test]
    fn coefficient_scan_structure() {
        let rows = coefficient_scan(1.0, 1.0, 20.0, 2000).unwrap();
        assert_eq!((rows[0].f, rows[0].g), (Some(1.0), Some(0.0)));
        let last = rows.last().unwrap();
        assert!((last.f.unwrap() - 1.0).abs() < 0.15);
        let flagged: Vec<usize> = rows
            .iter()
            .enumerate()
            .filter(|(_, r)| r.regime == Regime::Singular)
            .map(|(i, _)| i)
            .collect();
        assert!(!flagged.is_empty());
        assert!(flagged.windows(2).all(|w| w[1] == w[0] + 1));
        assert!(flagged.iter().all(|&i| (rows[i].u - 3.624).abs() < 0.05));
        let csv = coefficients_csv(&rows);
        assert!(csv.starts_with("u,f,g,D,regime_flag\n"));
        assert!(csv.lines().any(|l| l.contains(",,") && l.ends_with("singular")));
        assert!(coefficient_scan(1.0, 0.5, 2.0, 10).is_err());
    }

    #[test]
    fn singularity_report() {
        let r = cmd_singularity(1.0).unwrap();
        assert!((r.u_star - 3.624).abs() < 1e-3 && (r.v_star - 0.961).abs() < 1e-3);
        assert!((r.ultra_v_star - 0.9634).abs() < 1e-4);
        let r10 = cmd_singularity(10.0).unwrap();
        assert!((r10.x_star - r.u_star / 10.0).abs() < 1e-15);
        assert!(r.to_text().contains("u*"));
        assert!(cmd_singularity(0.0).is_err());
    }

    #[test]
    fn limit_tables() {
        let g = galileo_table(&[0.0, 0.1]).unwrap();
        assert_eq!(g[0].abs_diff, 0.0);
        assert!((g[1].abs_diff - 0.004834).abs() < 1e-6 && g[1].abs_diff <= g[1].bound);
        let u = ultra_table(&[1e-2, 1e-3, 1e-4]).unwrap();
        assert!(u.windows(2).all(|w| w[1].relative_deviation < w[0].relative_deviation));
        assert_eq!(limits_csv(LimitRegime::Ultra, &[0.0366]).unwrap_err().exit_code(), 2);
        assert_eq!(limits_csv(LimitRegime::Galileo, &[0.5]).unwrap_err().exit_code(), 2);
        let csv = limits_csv(LimitRegime::Galileo, &[0.01]).unwrap();
        assert!(csv.starts_with("v,f_exact,f_limit,abs_diff,bound\n"));
    }

    #[test]
    fn csv_number_format() {
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_f64(-2.5), "-2.5000000000000000e0");
        assert_eq!(fmt_f64(0.1).parse::<f64>().unwrap(), 0.1);
    }
}
