//! Calibration of the coupling window `T_C` for complete single-photon
//! transfer between the waveguides.
//!
//! The objective is `p(T_C) = |⟨ideal transferred|ψ_final⟩|²` for the `|1,0⟩`
//! input, evaluated with the full model: atom dressing lowers the effective
//! waveguide coupling, so the optimum moves with `M_max`. A uniform coarse
//! scan picks the first dominant peak and golden-section search refines it.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::evolve::IntegratorConfig;
use crate::gate::{ideal_output, run_input};
use crate::hamiltonian::{HamiltonianModel, PhysicsParams};

/// A scan maximum counts as a competing peak when it reaches this fraction of
/// the best scanned value.
const COMPARABLE_PEAK: f64 = 0.9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CalibrationSearch {
    /// `T_C` interval; `None` means `[0.25, 2.0]·π/(2·C_max)`.
    pub range: Option<(f64, f64)>,
    pub scan_points: usize,
    /// Width of the final golden-section bracket in `T_C`.
    pub tolerance: f64,
    /// Minimum acceptable transfer probability at the optimum.
    pub floor: f64,
    /// Extra `T_M` beyond the minimal containment `2τ_C + T_C`.
    pub margin: f64,
}

impl Default for CalibrationSearch {
    fn default() -> Self {
        CalibrationSearch {
            range: None,
            scan_points: 32,
            tolerance: 0.5,
            floor: 0.999,
            margin: 0.0,
        }
    }
}

impl CalibrationSearch {
    /// The search interval for `params`.
    pub fn interval(&self, params: &PhysicsParams) -> Result<(f64, f64)> {
        let (lo, hi) = match self.range {
            Some(r) => r,
            None => {
                if !(params.c_max > 0.0) {
                    return Err(Error::InvalidParameter {
                        name: "c_max",
                        reason: "must be > 0 to derive a default calibration range".into(),
                    });
                }
                let estimate = std::f64::consts::FRAC_PI_2 / params.c_max;
                (0.25 * estimate, 2.0 * estimate)
            }
        };
        if !(lo.is_finite() && hi.is_finite() && lo >= 0.0 && lo < hi) {
            return Err(Error::InvalidParameter {
                name: "range",
                reason: format!("need 0 <= lo < hi, got [{lo}, {hi}]"),
            });
        }
        Ok((lo, hi))
    }

    pub fn validate(&self) -> Result<()> {
        if self.scan_points < 3 {
            return Err(Error::InvalidParameter {
                name: "scan_points",
                reason: "must be >= 3".into(),
            });
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidParameter {
                name: "tolerance",
                reason: "must be > 0".into(),
            });
        }
        if !(0.0..=1.0).contains(&self.floor) {
            return Err(Error::InvalidParameter {
                name: "floor",
                reason: "must lie in [0, 1]".into(),
            });
        }
        if !(self.margin >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "margin",
                reason: "must be >= 0".into(),
            });
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub t_c: f64,
    pub t_m: f64,
    /// Transfer probability at `t_c`.
    pub p: f64,
    /// Golden-section iterations.
    pub iterations: usize,
    /// Objective evaluations, scan included.
    pub evaluations: usize,
    pub warning: Option<String>,
}

impl Calibration {
    /// `params` with this calibration's `T_C` and `T_M`.
    pub fn apply(&self, params: &PhysicsParams) -> PhysicsParams {
        PhysicsParams {
            t_c: self.t_c,
            t_m: self.t_m,
            ..params.clone()
        }
    }
}

/// Single-photon transfer probability with the coupling window set to `t_c`.
pub fn transfer_probability(
    params: &PhysicsParams,
    t_c: f64,
    margin: f64,
    cfg: &IntegratorConfig,
) -> Result<f64> {
    let p = params.clone().with_coupling_window(t_c, margin);
    let model = HamiltonianModel::new(&p)?;
    let (state, _) = run_input(&model, (1, 0), cfg)?;
    let idx = model
        .basis()
        .index_of(&ideal_output((1, 0)))
        .expect("single-photon output lies in the basis");
    Ok(state.amplitudes[idx].norm_sqr())
}

/// Finds the `T_C` that maximizes single-photon transfer for `params`.
pub fn tune_transfer(
    params: &PhysicsParams,
    search: &CalibrationSearch,
    cfg: &IntegratorConfig,
) -> Result<Calibration> {
    search.validate()?;
    params.validate()?;
    cfg.validate()?;
    let (lo, hi) = search.interval(params)?;
    let objective = |t_c: f64| transfer_probability(params, t_c, search.margin, cfg);

    let n = search.scan_points;
    let grid: Vec<f64> = (0..n)
        .map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64)
        .collect();
    let values: Vec<f64> = grid.par_iter().map(|&t| objective(t)).collect::<Result<_>>()?;
    let mut evaluations = n;

    let best = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let peaks: Vec<usize> = (0..n)
        .filter(|&k| {
            let left = k == 0 || values[k] >= values[k - 1];
            let right = k == n - 1 || values[k] >= values[k + 1];
            left && right && values[k] >= COMPARABLE_PEAK * best
        })
        .collect();
    let k = peaks[0];
    let warning = (peaks.len() > 1).then(|| {
        format!(
            "coarse scan found {} comparable maxima (at T_C = {}); using the first",
            peaks.len(),
            peaks.iter().map(|&i| format!("{:.1}", grid[i])).collect::<Vec<_>>().join(", ")
        )
    });

    // Golden-section search on the bracket around the scan peak.
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (grid[k.saturating_sub(1)], grid[(k + 1).min(n - 1)]);
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let mut f1 = objective(x1)?;
    let mut f2 = objective(x2)?;
    evaluations += 2;
    let mut iterations = 0;
    while b - a > search.tolerance {
        iterations += 1;
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = objective(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = objective(x2)?;
        }
        evaluations += 1;
    }
    // The scan point itself may beat the interior probes when the peak sits
    // on the range boundary.
    let (t_c, p) = [(x1, f1), (x2, f2), (grid[k], values[k])]
        .into_iter()
        .fold((f64::NAN, f64::NEG_INFINITY), |acc, c| if c.1 > acc.1 { c } else { acc });

    if p < search.floor {
        return Err(Error::NoAcceptableMaximum {
            best_t_c: t_c,
            best_p: p,
            floor: search.floor,
        });
    }
    Ok(Calibration {
        t_c,
        t_m: 2.0 * params.tau_c + t_c + search.margin,
        p,
        iterations,
        evaluations,
        warning,
    })
}

/// Hex SHA-256 of everything that influences a calibration result.
pub fn fingerprint(params: &PhysicsParams, search: &CalibrationSearch, cfg: &IntegratorConfig) -> String {
    // T_C and T_M are outputs, so they are blanked before hashing.
    let key = serde_json::json!({
        "params": PhysicsParams { t_c: 0.0, t_m: 0.0, ..params.clone() },
        "search": search,
        "integrator": cfg,
    });
    let digest = Sha256::digest(key.to_string().as_bytes());
    hex::encode(digest)
}

/// On-disk table of calibrations keyed by [`fingerprint`].
#[derive(Debug, Default)]
pub struct CalibrationCache {
    path: Option<PathBuf>,
    entries: BTreeMap<String, Calibration>,
}

impl CalibrationCache {
    /// A cache that lives only in memory.
    pub fn in_memory() -> Self {
        Self::default()
    }

    /// Loads `path` if it exists; otherwise starts empty and writes there on [`save`](Self::save).
    pub fn open(path: impl Into<PathBuf>) -> Result<Self> {
        let path = path.into();
        let entries = if path.exists() {
            let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
            serde_json::from_str(&text)
                .map_err(|e| Error::Config(format!("{}: corrupt calibration cache: {e}", path.display())))?
        } else {
            BTreeMap::new()
        };
        Ok(CalibrationCache {
            path: Some(path),
            entries,
        })
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, key: &str) -> Option<&Calibration> {
        self.entries.get(key)
    }

    pub fn insert(&mut self, key: String, calibration: Calibration) {
        self.entries.insert(key, calibration);
    }

    pub fn save(&self) -> Result<()> {
        let Some(path) = &self.path else {
            return Ok(());
        };
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        let text = serde_json::to_string_pretty(&self.entries).expect("calibrations serialize");
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    /// Cached calibration for the inputs, computing and storing it on a miss.
    pub fn get_or_tune(
        &mut self,
        params: &PhysicsParams,
        search: &CalibrationSearch,
        cfg: &IntegratorConfig,
    ) -> Result<Calibration> {
        let key = fingerprint(params, search, cfg);
        if let Some(c) = self.entries.get(&key) {
            return Ok(c.clone());
        }
        let c = tune_transfer(params, search, cfg)?;
        self.entries.insert(key, c.clone());
        Ok(c)
    }
}
