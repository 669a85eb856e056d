//! Declarative parameter sweeps and their tabular output.
//!
//! A sweep varies one parameter over a grid, optionally recalibrating `T_C`,
//! runs the gate at every point and emits one [`SweepRow`] per point in grid
//! order. Configs are TOML:
//!
//! ```toml
//! axis = "m_max"             # m_max | mprime_max | tau_m | tau_m_off | delta | c_max | t_c
//! herald = "atoms_ground"    # atoms_ground | paths
//! calibration = "per_point"  # none | once | per_point
//! calibration_cache = "cal.json"   # optional
//!
//! [grid]                     # either `values = [...]` or a generated range
//! start = 0.01
//! stop = 0.5
//! count = 16
//! spacing = "log"            # linear | log
//!
//! [params]                   # any PhysicsParams field; omitted ones keep defaults
//! m_max = 0.25
//!
//! [integrator]               # any IntegratorConfig field
//! rtol = 1e-12
//!
//! [search]                   # any CalibrationSearch field
//! scan_points = 32
//!
//! [calibration_overrides]    # PhysicsParams fields applied only while calibrating
//! tau_m_off = 1000.0
//!
//! [output]                   # optional
//! path = "fig4.csv"
//! format = "csv"             # csv | json
//! ```

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calibrate::{fingerprint, tune_transfer, Calibration, CalibrationCache, CalibrationSearch};
use crate::error::{Error, Result};
use crate::evolve::IntegratorConfig;
use crate::gate::{simulate, GateMetrics, HeraldMode};
use crate::hamiltonian::PhysicsParams;

/// The parameter a sweep varies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    MMax,
    MprimeMax,
    /// Both `M` ramps.
    TauM,
    /// Only the `M` turn-off ramp.
    TauMOff,
    Delta,
    CMax,
    /// `T_C`, with `T_M` following at minimal containment.
    TC,
}

impl Axis {
    pub fn as_str(self) -> &'static str {
        match self {
            Axis::MMax => "m_max",
            Axis::MprimeMax => "mprime_max",
            Axis::TauM => "tau_m",
            Axis::TauMOff => "tau_m_off",
            Axis::Delta => "delta",
            Axis::CMax => "c_max",
            Axis::TC => "t_c",
        }
    }

    /// `params` with this axis set to `value`.
    pub fn apply(self, params: &PhysicsParams, value: f64) -> PhysicsParams {
        let mut p = params.clone();
        match self {
            Axis::MMax => p.m_max = value,
            Axis::MprimeMax => p.mprime_max = value,
            Axis::TauM => {
                p.tau_m = value;
                p.tau_m_off = None;
            }
            Axis::TauMOff => p.tau_m_off = Some(value),
            Axis::Delta => p.delta = value,
            Axis::CMax => p.c_max = value,
            Axis::TC => p = p.with_coupling_window(value, 0.0),
        }
        p
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    #[default]
    Linear,
    Log,
}

/// Grid points: an explicit list, or `count` points from `start` to `stop`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub start: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stop: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
    #[serde(default)]
    pub spacing: Spacing,
}

impl GridSpec {
    pub fn explicit(values: Vec<f64>) -> Self {
        GridSpec {
            values: Some(values),
            ..GridSpec::default()
        }
    }

    pub fn range(start: f64, stop: f64, count: usize, spacing: Spacing) -> Self {
        GridSpec {
            values: None,
            start: Some(start),
            stop: Some(stop),
            count: Some(count),
            spacing,
        }
    }

    pub fn points(&self) -> Result<Vec<f64>> {
        let err = |msg: String| Err(Error::Config(format!("grid: {msg}")));
        let range_given = self.start.is_some() || self.stop.is_some() || self.count.is_some();
        let points = match (&self.values, range_given) {
            (Some(_), true) => return err("give either `values` or `start`/`stop`/`count`, not both".into()),
            (Some(v), false) => v.clone(),
            (None, false) => return err("missing `values` or `start`/`stop`/`count`".into()),
            (None, true) => {
                let (Some(start), Some(stop), Some(count)) = (self.start, self.stop, self.count) else {
                    return err("`start`, `stop` and `count` must all be set".into());
                };
                if count == 0 {
                    return err("`count` must be >= 1".into());
                }
                if self.spacing == Spacing::Log && !(start > 0.0 && stop > 0.0) {
                    return err(format!("log spacing needs start, stop > 0 (got {start}, {stop})"));
                }
                if count == 1 {
                    vec![start]
                } else {
                    let last = (count - 1) as f64;
                    (0..count)
                        .map(|k| {
                            let s = k as f64 / last;
                            match self.spacing {
                                Spacing::Linear => start + (stop - start) * s,
                                Spacing::Log => start * (stop / start).powf(s),
                            }
                        })
                        .collect()
                }
            }
        };
        if points.is_empty() {
            return err("no grid points".into());
        }
        if let Some(x) = points.iter().find(|x| !x.is_finite()) {
            return err(format!("non-finite grid value {x}"));
        }
        Ok(points)
    }
}

/// When `T_C` is recalibrated.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CalibrationMode {
    /// Use `params.t_c` and `params.t_m` as given.
    #[default]
    None,
    /// Calibrate the base parameters once and reuse the result at every point.
    Once,
    /// Calibrate at every grid point.
    PerPoint,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl OutputFormat {
    pub fn extension(self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub path: PathBuf,
    #[serde(default)]
    pub format: OutputFormat,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub axis: Axis,
    pub grid: GridSpec,
    #[serde(default)]
    pub herald: HeraldMode,
    #[serde(default)]
    pub calibration: CalibrationMode,
    #[serde(default)]
    pub params: PhysicsParams,
    #[serde(default)]
    pub integrator: IntegratorConfig,
    #[serde(default)]
    pub search: CalibrationSearch,
    #[serde(default)]
    pub calibration_overrides: toml::Table,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub calibration_cache: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputSpec>,
}

impl SweepConfig {
    pub fn new(axis: Axis, grid: GridSpec, params: PhysicsParams) -> Self {
        SweepConfig {
            axis,
            grid,
            herald: HeraldMode::default(),
            calibration: CalibrationMode::default(),
            params,
            integrator: IntegratorConfig::default(),
            search: CalibrationSearch::default(),
            calibration_overrides: toml::Table::new(),
            calibration_cache: None,
            output: None,
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: SweepConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file; a relative `output.path` or `calibration_cache`
    /// is resolved against the file's directory.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml_str(&text)
            .map_err(|e| Error::Config(format!("{}: {}", path.display(), strip_config_prefix(e))))?;
        let dir = path.parent().unwrap_or(Path::new(""));
        if let Some(out) = &mut cfg.output {
            if out.path.is_relative() {
                out.path = dir.join(&out.path);
            }
        }
        if let Some(cache) = &mut cfg.calibration_cache {
            if cache.is_relative() {
                *cache = dir.join(&*cache);
            }
        }
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("sweep config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let ctx = |section: &str, e: Error| Error::Config(format!("[{section}] {}", strip_config_prefix(e)));
        self.grid.points()?;
        self.params.validate().map_err(|e| ctx("params", e))?;
        self.integrator.validate().map_err(|e| ctx("integrator", e))?;
        self.search.validate().map_err(|e| ctx("search", e))?;
        apply_overrides(&self.params, &self.calibration_overrides)
            .map_err(|e| ctx("calibration_overrides", e))?;
        if self.axis == Axis::TC && self.calibration == CalibrationMode::PerPoint {
            return Err(Error::Config(
                "axis `t_c` cannot be combined with calibration = \"per_point\"".into(),
            ));
        }
        Ok(())
    }

    /// Parameters at grid value `value`, before any calibration.
    pub fn point_params(&self, value: f64) -> PhysicsParams {
        self.axis.apply(&self.params, value)
    }
}

fn strip_config_prefix(e: Error) -> String {
    match e {
        Error::Config(msg) => msg,
        other => other.to_string(),
    }
}

/// `params` with the fields named in `overrides` replaced. Unknown keys and
/// mistyped values are config errors.
pub fn apply_overrides(params: &PhysicsParams, overrides: &toml::Table) -> Result<PhysicsParams> {
    if overrides.is_empty() {
        return Ok(params.clone());
    }
    let mut table = toml::Table::try_from(params).expect("params serialize");
    for (k, v) in overrides {
        table.insert(k.clone(), v.clone());
    }
    let p: PhysicsParams = table
        .try_into()
        .map_err(|e: toml::de::Error| Error::Config(e.message().trim().to_string()))?;
    p.validate()?;
    Ok(p)
}

/// One grid point of a sweep. Metric fields are `None` when the point failed.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub axis_value: f64,
    pub omega: f64,
    pub delta: f64,
    pub c_max: f64,
    pub m_max: f64,
    pub mprime_max: f64,
    pub omega_s: f64,
    pub tau_c: f64,
    pub tau_m: f64,
    pub tau_m_off: f64,
    pub shape: &'static str,
    pub frame: &'static str,
    pub t_c: f64,
    pub t_m: f64,
    pub phi_a: Option<f64>,
    pub phi_b: Option<f64>,
    pub phi_ab: Option<f64>,
    pub delta_phi_n: Option<f64>,
    pub f_basis_unher: Option<f64>,
    pub f_basis_her: Option<f64>,
    pub f_phase_unher: Option<f64>,
    pub f_phase_her: Option<f64>,
    pub p_00: Option<f64>,
    pub p_01: Option<f64>,
    pub p_10: Option<f64>,
    pub p_11: Option<f64>,
    pub p_mean: Option<f64>,
    pub norm_drift: Option<f64>,
    pub excitation_drift: Option<f64>,
    /// `ok`, or `<error kind>: <message>`.
    pub status: String,
}

/// CSV header, in [`SweepRow`] field order.
pub const CSV_HEADER: [&str; 30] = [
    "axis_value",
    "omega",
    "delta",
    "c_max",
    "m_max",
    "mprime_max",
    "omega_s",
    "tau_c",
    "tau_m",
    "tau_m_off",
    "shape",
    "frame",
    "t_c",
    "t_m",
    "phi_a",
    "phi_b",
    "phi_ab",
    "delta_phi_n",
    "f_basis_unher",
    "f_basis_her",
    "f_phase_unher",
    "f_phase_her",
    "p_00",
    "p_01",
    "p_10",
    "p_11",
    "p_mean",
    "norm_drift",
    "excitation_drift",
    "status",
];

impl SweepRow {
    pub fn new(axis_value: f64, params: &PhysicsParams, outcome: &Result<GateMetrics>) -> Self {
        let m = outcome.as_ref().ok();
        let f = |g: fn(&GateMetrics) -> f64| m.map(g);
        SweepRow {
            axis_value,
            omega: params.omega,
            delta: params.delta,
            c_max: params.c_max,
            m_max: params.m_max,
            mprime_max: params.mprime_max,
            omega_s: params.omega_s(),
            tau_c: params.tau_c,
            tau_m: params.tau_m,
            tau_m_off: params.tau_m_off(),
            shape: params.shape.as_str(),
            frame: params.frame.as_str(),
            t_c: params.t_c,
            t_m: params.t_m,
            phi_a: f(|g| g.phases.phi_a),
            phi_b: f(|g| g.phases.phi_b),
            phi_ab: f(|g| g.phases.phi_ab),
            delta_phi_n: f(|g| g.phases.delta_phi_n),
            f_basis_unher: f(|g| g.f_basis.unheralded),
            f_basis_her: m.and_then(|g| g.f_basis.heralded),
            f_phase_unher: f(|g| g.f_phase.unheralded),
            f_phase_her: m.and_then(|g| g.f_phase.heralded),
            p_00: f(|g| g.p[0]),
            p_01: f(|g| g.p[1]),
            p_10: f(|g| g.p[2]),
            p_11: f(|g| g.p[3]),
            p_mean: f(|g| g.p_mean),
            norm_drift: f(|g| g.norm_drift),
            excitation_drift: f(|g| g.excitation_drift),
            status: match outcome {
                Ok(_) => "ok".into(),
                Err(e) => format!("{}: {e}", e.kind()),
            },
        }
    }

    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }

    fn csv_record(&self) -> Vec<String> {
        let x = |v: f64| format!("{v:.11e}");
        let o = |v: Option<f64>| v.map(x).unwrap_or_default();
        vec![
            x(self.axis_value),
            x(self.omega),
            x(self.delta),
            x(self.c_max),
            x(self.m_max),
            x(self.mprime_max),
            x(self.omega_s),
            x(self.tau_c),
            x(self.tau_m),
            x(self.tau_m_off),
            self.shape.to_string(),
            self.frame.to_string(),
            x(self.t_c),
            x(self.t_m),
            o(self.phi_a),
            o(self.phi_b),
            o(self.phi_ab),
            o(self.delta_phi_n),
            o(self.f_basis_unher),
            o(self.f_basis_her),
            o(self.f_phase_unher),
            o(self.f_phase_her),
            o(self.p_00),
            o(self.p_01),
            o(self.p_10),
            o(self.p_11),
            o(self.p_mean),
            o(self.norm_drift),
            o(self.excitation_drift),
            self.status.clone(),
        ]
    }
}

/// Calibrates through `cache`, computing outside the lock on a miss.
fn calibrate_cached(
    cache: &Mutex<CalibrationCache>,
    params: &PhysicsParams,
    search: &CalibrationSearch,
    cfg: &IntegratorConfig,
) -> Result<Calibration> {
    let key = fingerprint(params, search, cfg);
    if let Some(c) = cache.lock().expect("cache lock").get(&key) {
        return Ok(c.clone());
    }
    let c = tune_transfer(params, search, cfg)?;
    cache.lock().expect("cache lock").insert(key, c.clone());
    Ok(c)
}

/// Runs every grid point of `cfg`, using and filling `cache`.
///
/// Config problems and a failed base calibration abort the sweep; failures at
/// individual points are reported in the row's `status`.
pub fn run_sweep_with_cache(cfg: &SweepConfig, cache: &Mutex<CalibrationCache>) -> Result<Vec<SweepRow>> {
    Ok(run_sweep_detailed(cfg, cache)?.into_iter().map(|(row, _)| row).collect())
}

/// [`run_sweep_with_cache`], also returning each point's full metrics.
pub fn run_sweep_detailed(
    cfg: &SweepConfig,
    cache: &Mutex<CalibrationCache>,
) -> Result<Vec<(SweepRow, Option<GateMetrics>)>> {
    cfg.validate()?;
    let points = cfg.grid.points()?;
    let overrides = &cfg.calibration_overrides;
    let base_calibration = match cfg.calibration {
        CalibrationMode::Once => {
            let p = apply_overrides(&cfg.params, overrides)?;
            Some(calibrate_cached(cache, &p, &cfg.search, &cfg.integrator)?)
        }
        _ => None,
    };
    let rows = points
        .par_iter()
        .map(|&v| {
            let mut params = cfg.point_params(v);
            let outcome = (|| {
                match (cfg.calibration, &base_calibration) {
                    (CalibrationMode::Once, Some(c)) => params = c.apply(&params),
                    (CalibrationMode::PerPoint, _) => {
                        let target = apply_overrides(&params, overrides)?;
                        let c = calibrate_cached(cache, &target, &cfg.search, &cfg.integrator)?;
                        params = c.apply(&params);
                    }
                    _ => {}
                }
                simulate(&params, &cfg.integrator, cfg.herald).map(|(_, m)| m)
            })();
            (SweepRow::new(v, &params, &outcome), outcome.ok())
        })
        .collect();
    Ok(rows)
}

/// Runs a sweep with the cache named in the config (or an in-memory one),
/// saving the cache afterwards.
pub fn run_sweep(cfg: &SweepConfig) -> Result<Vec<SweepRow>> {
    let cache = match &cfg.calibration_cache {
        Some(path) => CalibrationCache::open(path)?,
        None => CalibrationCache::in_memory(),
    };
    let cache = Mutex::new(cache);
    let rows = run_sweep_with_cache(cfg, &cache)?;
    cache.into_inner().expect("cache lock").save()?;
    Ok(rows)
}

pub fn render_csv(rows: &[SweepRow]) -> String {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(CSV_HEADER).expect("in-memory write");
    for r in rows {
        w.write_record(r.csv_record()).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory writer")).expect("utf-8 fields")
}

pub fn render_json(rows: &[SweepRow]) -> String {
    let mut s = serde_json::to_string_pretty(rows).expect("rows serialize");
    s.push('\n');
    s
}

pub fn render(rows: &[SweepRow], format: OutputFormat) -> String {
    match format {
        OutputFormat::Csv => render_csv(rows),
        OutputFormat::Json => render_json(rows),
    }
}

/// Writes `rows` to `path`, creating parent directories.
pub fn emit(rows: &[SweepRow], format: OutputFormat, path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, render(rows, format)).map_err(|e| Error::io(path, e))
}

/// Named reproductions of the published figures.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    Fig4,
    Fig5,
    Fig7,
    Fig8,
}

impl Preset {
    pub const ALL: [Preset; 4] = [Preset::Fig4, Preset::Fig5, Preset::Fig7, Preset::Fig8];

    pub fn as_str(self) -> &'static str {
        match self {
            Preset::Fig4 => "fig4",
            Preset::Fig5 => "fig5",
            Preset::Fig7 => "fig7",
            Preset::Fig8 => "fig8",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|p| p.as_str() == name)
            .ok_or_else(|| Error::Config(format!("unknown preset `{name}` (expected fig4, fig5, fig7 or fig8)")))
    }

    /// The sweep behind this preset. Grids are reconstructions covering the
    /// plotted ranges.
    pub fn config(self) -> SweepConfig {
        let fig4_grid = GridSpec::range(0.01, 0.5, 16, Spacing::Log);
        match self {
            // T_C recalibrated with M_max; no scattering.
            Preset::Fig4 => SweepConfig {
                calibration: CalibrationMode::PerPoint,
                ..SweepConfig::new(Axis::MMax, fig4_grid, PhysicsParams::default())
            },
            // Scattering sweep at fixed M_max = 0.25, calibrated once without scattering.
            Preset::Fig5 => SweepConfig {
                herald: HeraldMode::Paths,
                calibration: CalibrationMode::Once,
                ..SweepConfig::new(
                    Axis::MprimeMax,
                    GridSpec::range(0.0, 0.2, 16, Spacing::Linear),
                    PhysicsParams::default(),
                )
            },
            // The fig4 grid with a fast M turn-off; T_C comes from the adiabatic calibration.
            Preset::Fig7 => {
                let mut overrides = toml::Table::new();
                overrides.insert("tau_m_off".into(), toml::Value::Float(1000.0));
                SweepConfig {
                    calibration: CalibrationMode::PerPoint,
                    calibration_overrides: overrides,
                    ..SweepConfig::new(
                        Axis::MMax,
                        fig4_grid,
                        PhysicsParams {
                            tau_m_off: Some(1.0),
                            ..PhysicsParams::default()
                        },
                    )
                }
            }
            // Turn-off time sweep at M_max = 0.25.
            Preset::Fig8 => SweepConfig {
                calibration: CalibrationMode::Once,
                ..SweepConfig::new(
                    Axis::TauMOff,
                    GridSpec::range(1.0, 1000.0, 12, Spacing::Log),
                    PhysicsParams::default(),
                )
            },
        }
    }
}

/// Human-readable schema summary printed by the CLI.
pub fn schema_help() -> String {
    let mut s = String::new();
    let _ = writeln!(s, "sweep config (TOML)");
    let _ = writeln!(s, "  axis: m_max | mprime_max | tau_m | tau_m_off | delta | c_max | t_c");
    let _ = writeln!(s, "  herald: atoms_ground | paths");
    let _ = writeln!(s, "  calibration: none | once | per_point");
    let _ = writeln!(s, "  calibration_cache: path (optional)");
    let _ = writeln!(s, "  [grid] values = [..] | start, stop, count, spacing = linear | log");
    let _ = writeln!(s, "  [params] [integrator] [search] [calibration_overrides] [output]");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_points() {
        let g = GridSpec::range(0.01, 0.5, 16, Spacing::Log);
        let p = g.points().unwrap();
        assert_eq!(p.len(), 16);
        assert_eq!(p[0], 0.01);
        assert!((p[15] - 0.5).abs() < 1e-15);
        let ratio = p[1] / p[0];
        assert!(p.windows(2).all(|w| (w[1] / w[0] - ratio).abs() < 1e-12));
        let lin = GridSpec::range(0.0, 0.2, 16, Spacing::Linear).points().unwrap();
        assert!((lin[1] - 0.2 / 15.0).abs() < 1e-15);
        assert_eq!(GridSpec::range(3.0, 9.0, 1, Spacing::Linear).points().unwrap(), vec![3.0]);
    }

    #[test]
    fn grid_errors() {
        let msg = |g: GridSpec| g.points().unwrap_err().to_string();
        assert!(msg(GridSpec::explicit(vec![])).contains("no grid points"));
        assert!(msg(GridSpec::range(0.0, 1.0, 4, Spacing::Log)).contains("log spacing"));
        assert!(msg(GridSpec::range(0.0, 1.0, 0, Spacing::Linear)).contains("count"));
        assert!(msg(GridSpec::default()).contains("missing"));
        let both = GridSpec {
            start: Some(1.0),
            ..GridSpec::explicit(vec![1.0])
        };
        assert!(msg(both).contains("not both"));
    }

    #[test]
    fn config_parses_and_validates() {
        let cfg = SweepConfig::from_toml_str(
            r#"
            axis = "mprime_max"
            herald = "paths"
            calibration = "once"
            [grid]
            values = [0.0, 0.1]
            [params]
            m_max = 0.3
            [integrator]
            rtol = 1e-10
            [calibration_overrides]
            mprime_max = 0.0
            "#,
        )
        .unwrap();
        assert_eq!(cfg.axis, Axis::MprimeMax);
        assert_eq!(cfg.herald, HeraldMode::Paths);
        assert_eq!(cfg.params.m_max, 0.3);
        assert_eq!(cfg.params.delta, 0.25);
        assert_eq!(cfg.integrator.rtol, 1e-10);
        assert_eq!(cfg.integrator.atol, IntegratorConfig::default().atol);
    }

    #[test]
    fn config_errors_are_precise() {
        let err = |s: &str| SweepConfig::from_toml_str(s).unwrap_err().to_string();
        assert!(err("axis = \"m_max\"\n[grid]\nvalues=[1.0]\n[params]\nm_maxx = 1.0").contains("m_maxx"));
        assert!(err("axis = \"omega\"\n[grid]\nvalues=[1.0]").contains("omega"));
        assert!(err("axis = \"m_max\"").contains("grid"));
        assert!(err("axis = \"m_max\"\n[grid]\nvalues=[1.0]\n[params]\ntau_c = -1.0").contains("[params]"));
        assert!(err("axis = \"m_max\"\n[grid]\nvalues=[1.0]\n[integrator]\nrtol = 0.0").contains("rtol"));
        assert!(err("axis = \"t_c\"\ncalibration = \"per_point\"\n[grid]\nvalues=[1.0]").contains("per_point"));
        assert!(err("axis = \"m_max\"\n[grid]\nvalues=[1.0]\n[calibration_overrides]\nbogus = 1").contains("bogus"));
    }

    #[test]
    fn config_toml_round_trip() {
        for preset in Preset::ALL {
            let cfg = preset.config();
            let back = SweepConfig::from_toml_str(&cfg.to_toml_string()).unwrap();
            assert_eq!(back, cfg, "{}", preset.as_str());
        }
    }

    #[test]
    fn overrides_replace_fields() {
        let base = PhysicsParams::default();
        let mut t = toml::Table::new();
        t.insert("tau_m_off".into(), toml::Value::Float(1.0));
        t.insert("shape".into(), toml::Value::String("linear".into()));
        let p = apply_overrides(&base, &t).unwrap();
        assert_eq!(p.tau_m_off(), 1.0);
        assert_eq!(p.shape, crate::pulses::RampShape::Linear);
        assert_eq!(p.m_max, base.m_max);
        t.insert("tau_c".into(), toml::Value::Float(-3.0));
        assert!(apply_overrides(&base, &t).is_err());
    }

    #[test]
    fn axis_application() {
        let p = PhysicsParams::default();
        assert_eq!(Axis::TauM.apply(&p, 5.0).tau_m_off(), 5.0);
        let off = Axis::TauMOff.apply(&p, 5.0);
        assert_eq!((off.tau_m, off.tau_m_off()), (1000.0, 5.0));
        let tc = Axis::TC.apply(&p, 9000.0);
        assert_eq!(tc.t_m, 2.0 * tc.tau_c + 9000.0);
    }

    fn failed_row() -> SweepRow {
        let p = PhysicsParams::default();
        SweepRow::new(0.5, &p, &Err(Error::ScheduleInfeasible { deficit: 1.0 }))
    }

    #[test]
    fn csv_layout() {
        assert_eq!(render_csv(&[]), CSV_HEADER.join(",") + "\n");
        let text = render_csv(&[failed_row()]);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        let mut rdr = csv::Reader::from_reader(text.as_bytes());
        let rec = rdr.records().next().unwrap().unwrap();
        assert_eq!(rec.len(), CSV_HEADER.len());
        assert_eq!(&rec[0], "5.00000000000e-1");
        assert_eq!(&rec[2], "2.50000000000e-1");
        assert_eq!(&rec[17], "");
        assert!(rec[29].starts_with("schedule_infeasible: "));
    }

    #[test]
    fn json_mirrors_csv_fields() {
        let v: serde_json::Value = serde_json::from_str(&render_json(&[failed_row()])).unwrap();
        let obj = v[0].as_object().unwrap();
        let keys: Vec<&str> = obj.keys().map(String::as_str).collect();
        let mut header = CSV_HEADER.to_vec();
        header.sort_unstable();
        let mut sorted = keys.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, header);
        assert!(obj["delta_phi_n"].is_null());
    }

    #[test]
    fn sweep_records_point_errors_in_order() {
        let params = PhysicsParams {
            m_max: 0.0,
            ..PhysicsParams::default()
        };
        let c = params.c_max;
        let cfg = SweepConfig::new(Axis::CMax, GridSpec::explicit(vec![c, -c, 0.5 * c]), params);
        let rows = run_sweep(&cfg).unwrap();
        let values: Vec<f64> = rows.iter().map(|r| r.axis_value).collect();
        assert_eq!(values, vec![c, -c, 0.5 * c]);
        assert!(rows[0].is_ok(), "{}", rows[0].status);
        assert!((rows[0].p_01.unwrap() - 1.0).abs() < 1e-9);
        assert!(rows[1].status.starts_with("invalid_parameter"), "{}", rows[1].status);
        assert!(rows[1].f_basis_unher.is_none());
        // Half the pulse area is a balanced beam splitter: the coincidence
        // amplitude vanishes (Hong–Ou–Mandel), leaving Δφ_N undefined.
        assert!(rows[2].status.starts_with("degenerate_amplitude"), "{}", rows[2].status);
    }

    #[test]
    fn preset_names() {
        for p in Preset::ALL {
            assert_eq!(Preset::parse(p.as_str()).unwrap(), p);
        }
        assert!(Preset::parse("fig6").is_err());
    }
}
