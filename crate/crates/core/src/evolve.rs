//! Time evolution `i dψ/dt = H(t) ψ`.
//!
//! The production path is an adaptive Dormand–Prince 5(4) integrator with PI
//! step control, restarted at every pulse breakpoint so the envelope kinks do
//! not degrade its order. [`expm_oracle`] is an independent check: piecewise
//! constant `H` sampled at interval midpoints, propagated exactly by Hermitian
//! eigendecomposition.

use std::io::Write;
use std::path::Path;

use nalgebra::{DVector, SymmetricEigen};
use num_complex::{Complex, Complex64};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::{BlockSystem, HamiltonianModel};
use crate::hilbert::BasisSet;
use crate::num::Real;

/// A system `dψ/dt = f(t, ψ)` with `f = −iHψ` for a Hermitian `H(t)`.
pub trait SchrodingerSystem<T: Real> {
    fn dim(&self) -> usize;

    /// `out = −i H(t) ψ`.
    fn rhs(&self, t: T, psi: &[Complex<T>], out: &mut [Complex<T>]);

    /// Times inside `(t0, t1)` where `H(t)` is not smooth.
    fn breakpoints(&self, _t0: T, _t1: T) -> Vec<T> {
        Vec::new()
    }
}

impl SchrodingerSystem<f64> for HamiltonianModel {
    fn dim(&self) -> usize {
        HamiltonianModel::dim(self)
    }

    fn rhs(&self, t: f64, psi: &[Complex64], out: &mut [Complex64]) {
        self.apply_rhs(t, psi, out)
    }

    fn breakpoints(&self, t0: f64, t1: f64) -> Vec<f64> {
        HamiltonianModel::breakpoints(self, t0, t1)
    }
}

impl SchrodingerSystem<f64> for BlockSystem<'_> {
    fn dim(&self) -> usize {
        BlockSystem::dim(self)
    }

    fn rhs(&self, t: f64, psi: &[Complex64], out: &mut [Complex64]) {
        self.apply_rhs(t, psi, out)
    }

    fn breakpoints(&self, t0: f64, t1: f64) -> Vec<f64> {
        self.model().breakpoints(t0, t1)
    }
}

/// Complex amplitudes over a [`BasisSet`] at time `time`.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector<T: Real = f64> {
    pub amplitudes: Vec<Complex<T>>,
    pub time: T,
}

impl<T: Real> StateVector<T> {
    pub fn new(amplitudes: Vec<Complex<T>>, time: T) -> Self {
        StateVector { amplitudes, time }
    }

    /// Unit amplitude on basis index `index`.
    pub fn basis(dim: usize, index: usize, time: T) -> Self {
        let mut amplitudes = vec![Complex::new(T::zero(), T::zero()); dim];
        amplitudes[index] = Complex::new(T::one(), T::zero());
        StateVector { amplitudes, time }
    }

    pub fn norm(&self) -> T {
        norm(&self.amplitudes)
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| (a - b).norm())
            .fold(T::zero(), T::max)
    }
}

fn norm<T: Real>(v: &[Complex<T>]) -> T {
    v.iter().map(|z| z.norm_sqr()).fold(T::zero(), |a, b| a + b).sqrt()
}

/// `⟨ψ|N|ψ⟩ / ⟨ψ|ψ⟩` for a state on `basis`. Normalizing keeps norm drift,
/// which is tracked separately, out of the excitation bookkeeping.
pub fn mean_excitation(basis: &BasisSet, psi: &StateVector<f64>) -> f64 {
    let weighted: f64 = psi
        .amplitudes
        .iter()
        .zip(basis.states())
        .map(|(z, s)| z.norm_sqr() * f64::from(s.excitation()))
        .sum();
    weighted / psi.norm().powi(2)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    #[default]
    AdaptiveRk,
    ExpmOracle,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegratorConfig {
    pub rtol: f64,
    pub atol: f64,
    /// Upper bound on the step size; `None` leaves it to the controller.
    pub max_step: Option<f64>,
    pub method: Method,
    /// Largest tolerated `|‖ψ(t)‖ − ‖ψ(t₀)‖|` before integration aborts.
    pub norm_drift_bound: f64,
    pub max_steps: usize,
    /// Intervals per smooth schedule segment for [`Method::ExpmOracle`].
    pub oracle_steps: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            rtol: 1e-12,
            atol: 1e-14,
            max_step: None,
            method: Method::AdaptiveRk,
            norm_drift_bound: 1e-6,
            max_steps: 50_000_000,
            oracle_steps: 16_000,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |name: &'static str, reason: &str| {
            Err(Error::InvalidParameter {
                name,
                reason: reason.to_string(),
            })
        };
        if !(self.rtol > 0.0) {
            return bad("rtol", "must be > 0");
        }
        if !(self.atol > 0.0) {
            return bad("atol", "must be > 0");
        }
        if matches!(self.max_step, Some(h) if !(h > 0.0)) {
            return bad("max_step", "must be > 0");
        }
        if !(self.norm_drift_bound > 0.0) {
            return bad("norm_drift_bound", "must be > 0");
        }
        if self.oracle_steps == 0 {
            return bad("oracle_steps", "must be >= 1");
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct IntegrationStats {
    pub accepted: usize,
    pub rejected: usize,
    pub max_norm_drift: f64,
}

#[derive(Clone, Debug)]
pub struct Evolution<T: Real = f64> {
    pub state: StateVector<T>,
    pub stats: IntegrationStats,
}

// Dormand–Prince 5(4) tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
// Fifth-order weights minus embedded fourth-order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

struct Tableau<T> {
    c: [T; 4],
    a: [[T; 6]; 6],
    e: [T; 7],
}

impl<T: Real> Tableau<T> {
    fn new() -> Self {
        let l = T::lit;
        let z = T::zero();
        Tableau {
            c: [l(C2), l(C3), l(C4), l(C5)],
            a: [
                [l(A21), z, z, z, z, z],
                [l(A31), l(A32), z, z, z, z],
                [l(A41), l(A42), l(A43), z, z, z],
                [l(A51), l(A52), l(A53), l(A54), z, z],
                [l(A61), l(A62), l(A63), l(A64), l(A65), z],
                [l(A71), z, l(A73), l(A74), l(A75), l(A76)],
            ],
            e: [l(E1), z, l(E3), l(E4), l(E5), l(E6), l(E7)],
        }
    }
}

/// Adaptive Dormand–Prince integration of `sys` from `t0` to `t1`.
///
/// Fails on step-size underflow, on exhausting `cfg.max_steps`, or when the
/// norm drifts from its initial value by more than `cfg.norm_drift_bound`.
/// The state is never renormalized.
pub fn integrate<T, S>(
    sys: &S,
    psi0: &StateVector<T>,
    t0: T,
    t1: T,
    cfg: &IntegratorConfig,
) -> Result<Evolution<T>>
where
    T: Real,
    S: SchrodingerSystem<T> + ?Sized,
{
    cfg.validate()?;
    assert_eq!(psi0.dim(), sys.dim(), "state dimension mismatch");
    if !(t1 > t0) {
        return Err(Error::InvalidParameter {
            name: "t1",
            reason: format!("must exceed t0 = {t0}"),
        });
    }
    let mut stepper = Stepper::new(sys, psi0, cfg);
    let mut edges = vec![t0];
    edges.extend(sys.breakpoints(t0, t1));
    edges.push(t1);
    for w in edges.windows(2) {
        if w[1] > w[0] {
            stepper.run_segment(w[0], w[1])?;
        }
    }
    Ok(Evolution {
        state: StateVector::new(stepper.y, t1),
        stats: stepper.stats,
    })
}

struct Stepper<'a, T: Real, S: ?Sized> {
    sys: &'a S,
    tab: Tableau<T>,
    rtol: T,
    atol: T,
    max_step: Option<T>,
    drift_bound: T,
    max_steps: usize,
    norm0: T,
    y: Vec<Complex<T>>,
    k: [Vec<Complex<T>>; 7],
    y_stage: Vec<Complex<T>>,
    y_new: Vec<Complex<T>>,
    h: Option<T>,
    err_prev: T,
    stats: IntegrationStats,
}

impl<'a, T: Real, S: SchrodingerSystem<T> + ?Sized> Stepper<'a, T, S> {
    fn new(sys: &'a S, psi0: &StateVector<T>, cfg: &IntegratorConfig) -> Self {
        let n = psi0.dim();
        let zero = vec![Complex::new(T::zero(), T::zero()); n];
        Stepper {
            sys,
            tab: Tableau::new(),
            rtol: T::lit(cfg.rtol),
            atol: T::lit(cfg.atol),
            max_step: cfg.max_step.map(T::lit),
            drift_bound: T::lit(cfg.norm_drift_bound),
            max_steps: cfg.max_steps,
            norm0: psi0.norm(),
            y: psi0.amplitudes.clone(),
            k: std::array::from_fn(|_| zero.clone()),
            y_stage: zero.clone(),
            y_new: zero,
            h: None,
            err_prev: T::lit(1e-4),
            stats: IntegrationStats::default(),
        }
    }

    fn weighted_rms(&self, v: &[Complex<T>]) -> T {
        let n = T::lit(v.len() as f64);
        let s = v
            .iter()
            .zip(&self.y)
            .map(|(d, y)| {
                let sc = self.atol + self.rtol * y.norm();
                (d.norm() / sc).powi(2)
            })
            .fold(T::zero(), |a, b| a + b);
        (s / n).sqrt()
    }

    /// Hairer's starting step heuristic.
    fn initial_step(&mut self, t: T, span: T) -> T {
        let d0 = self.weighted_rms(&self.y);
        let d1 = self.weighted_rms(&self.k[0]);
        let small = T::lit(1e-5);
        let h0 = if d0 < small || d1 < small {
            T::lit(1e-6)
        } else {
            T::lit(0.01) * d0 / d1
        };
        let h0 = h0.min(span);
        for (ys, (y, k)) in self.y_stage.iter_mut().zip(self.y.iter().zip(&self.k[0])) {
            *ys = *y + *k * h0;
        }
        let mut f1 = vec![Complex::new(T::zero(), T::zero()); self.y.len()];
        self.sys.rhs(t + h0, &self.y_stage, &mut f1);
        let diff: Vec<Complex<T>> = f1.iter().zip(&self.k[0]).map(|(a, b)| a - b).collect();
        let d2 = self.weighted_rms(&diff) / h0;
        let dmax = d1.max(d2);
        let h1 = if dmax <= T::lit(1e-15) {
            (h0 * T::lit(1e-3)).max(T::lit(1e-6))
        } else {
            (T::lit(0.01) / dmax).powf(T::lit(0.2))
        };
        (T::lit(100.0) * h0).min(h1).min(span)
    }

    fn run_segment(&mut self, a: T, b: T) -> Result<()> {
        let mut t = a;
        let (k0, _) = self.k.split_at_mut(1);
        self.sys.rhs(t, &self.y, &mut k0[0]);
        let mut h = match self.h {
            Some(h) => h,
            None => self.initial_step(t, b - a),
        };
        let safety = T::lit(0.9);
        let beta = T::lit(0.04);
        let alpha = T::lit(0.2) - beta * T::lit(0.75);
        let fac_min = T::lit(0.2);
        let fac_max = T::lit(10.0);
        let eps = T::epsilon();

        while t < b {
            if let Some(hm) = self.max_step {
                h = h.min(hm);
            }
            let last = t + h >= b || (b - t - h) < T::lit(1e-9) * h;
            if last {
                h = b - t;
            }
            let t_scale = t.abs().max(b.abs()).max(T::one());
            if h < T::lit(16.0) * eps * t_scale {
                return Err(Error::StepUnderflow {
                    t: t.to_f64().unwrap_or(f64::NAN),
                    h: h.to_f64().unwrap_or(f64::NAN),
                });
            }
            if self.stats.accepted + self.stats.rejected >= self.max_steps {
                return Err(Error::TooManySteps {
                    t: t.to_f64().unwrap_or(f64::NAN),
                    max_steps: self.max_steps,
                });
            }

            self.stages(t, h);
            let err = self.error_estimate(h);
            if err <= T::one() {
                self.stats.accepted += 1;
                t = if last { b } else { t + h };
                std::mem::swap(&mut self.y, &mut self.y_new);
                // FSAL: the last stage is f(t + h, y_new).
                self.k.swap(0, 6);

                let drift = (norm(&self.y) - self.norm0).abs();
                let drift_f = drift.to_f64().unwrap_or(f64::INFINITY);
                if drift_f > self.stats.max_norm_drift {
                    self.stats.max_norm_drift = drift_f;
                }
                if drift > self.drift_bound {
                    return Err(Error::NormDrift {
                        t: t.to_f64().unwrap_or(f64::NAN),
                        drift: drift_f,
                        bound: self.drift_bound.to_f64().unwrap_or(f64::NAN),
                    });
                }

                let e = err.max(T::lit(1e-10));
                let fac = safety * e.powf(-alpha) * self.err_prev.powf(beta);
                self.err_prev = e;
                let fac = fac.max(fac_min).min(fac_max);
                if !last {
                    h = h * fac;
                } else {
                    // Keep the controller's proposal for the next segment.
                    self.h = Some(h * fac);
                }
            } else {
                self.stats.rejected += 1;
                let fac = (safety * err.powf(-T::lit(0.2))).max(fac_min);
                h = h * fac;
            }
        }
        if self.h.is_none() {
            self.h = Some(h);
        }
        Ok(())
    }

    fn stages(&mut self, t: T, h: T) {
        let n = self.y.len();
        for s in 1..7 {
            let row = &self.tab.a[s - 1];
            for i in 0..n {
                let mut acc = Complex::new(T::zero(), T::zero());
                for (j, &a) in row.iter().enumerate().take(s) {
                    if a != T::zero() {
                        acc = acc + self.k[j][i] * a;
                    }
                }
                self.y_stage[i] = self.y[i] + acc * h;
            }
            let ts = if s < 5 { t + self.tab.c[s - 1] * h } else { t + h };
            let (_, rest) = self.k.split_at_mut(s);
            self.sys.rhs(ts, &self.y_stage, &mut rest[0]);
            if s == 6 {
                // The last stage input is the fifth-order solution itself.
                std::mem::swap(&mut self.y_new, &mut self.y_stage);
            }
        }
    }

    fn error_estimate(&self, h: T) -> T {
        let n = self.y.len();
        let mut s = T::zero();
        for i in 0..n {
            let mut e = Complex::new(T::zero(), T::zero());
            for (j, &w) in self.tab.e.iter().enumerate() {
                if w != T::zero() {
                    e = e + self.k[j][i] * w;
                }
            }
            let e = e * h;
            let sc = self.atol + self.rtol * self.y[i].norm().max(self.y_new[i].norm());
            s = s + (e.norm() / sc).powi(2);
        }
        (s / T::lit(n as f64)).sqrt()
    }
}

/// Piecewise-constant propagation. `[t0, t1]` is cut at the schedule
/// breakpoints and each smooth segment into `n_steps` equal intervals.
///
/// `H` is sampled at each interval midpoint and applied exactly through its
/// eigendecomposition, one excitation block at a time.
pub fn expm_oracle(
    model: &HamiltonianModel,
    psi0: &StateVector<f64>,
    t0: f64,
    t1: f64,
    n_steps: usize,
) -> Result<StateVector<f64>> {
    if n_steps == 0 {
        return Err(Error::InvalidParameter {
            name: "n_steps",
            reason: "must be >= 1".into(),
        });
    }
    let basis = model.basis();
    let mut edges = vec![t0];
    edges.extend(model.breakpoints(t0, t1));
    edges.push(t1);
    let mut out = psi0.amplitudes.clone();
    for n in 0..=basis.n_max() {
        let idx = basis.block(n);
        if idx.iter().all(|&i| psi0.amplitudes[i].norm() == 0.0) {
            continue;
        }
        let mut y = DVector::from_iterator(idx.len(), idx.iter().map(|&i| psi0.amplitudes[i]));
        for w in edges.windows(2) {
            let dt = (w[1] - w[0]) / n_steps as f64;
            for k in 0..n_steps {
                let tm = w[0] + (k as f64 + 0.5) * dt;
                let h = model.assemble_block(tm, &idx);
                let eig = SymmetricEigen::new(h);
                let v = &eig.eigenvectors;
                let mut coeff = v.adjoint() * &y;
                for (c, &lambda) in coeff.iter_mut().zip(eig.eigenvalues.iter()) {
                    *c *= Complex64::from_polar(1.0, -lambda * dt);
                }
                y = v * coeff;
            }
        }
        for (j, &i) in idx.iter().enumerate() {
            out[i] = y[j];
        }
    }
    Ok(StateVector::new(out, t1))
}

/// Adaptive integration block by block: each occupied excitation block of
/// `psi0` is integrated on its own (6 or 21 states instead of 28).
pub fn integrate_blocks(
    model: &HamiltonianModel,
    psi0: &StateVector<f64>,
    t0: f64,
    t1: f64,
    cfg: &IntegratorConfig,
) -> Result<Evolution<f64>> {
    let mut out = psi0.amplitudes.clone();
    let mut stats = IntegrationStats::default();
    for n in 0..=model.basis().n_max() {
        let block = model.block_system(n);
        let local: Vec<Complex64> = block.indices().iter().map(|&i| psi0.amplitudes[i]).collect();
        if local.iter().all(|z| z.norm() == 0.0) {
            continue;
        }
        let evo = integrate(&block, &StateVector::new(local, t0), t0, t1, cfg)?;
        for (k, &i) in block.indices().iter().enumerate() {
            out[i] = evo.state.amplitudes[k];
        }
        stats.accepted += evo.stats.accepted;
        stats.rejected += evo.stats.rejected;
        stats.max_norm_drift = stats.max_norm_drift.max(evo.stats.max_norm_drift);
    }
    Ok(Evolution {
        state: StateVector::new(out, t1),
        stats,
    })
}

/// Evolves with whichever method `cfg` selects.
pub fn evolve(
    model: &HamiltonianModel,
    psi0: &StateVector<f64>,
    t0: f64,
    t1: f64,
    cfg: &IntegratorConfig,
) -> Result<Evolution<f64>> {
    match cfg.method {
        Method::AdaptiveRk => integrate_blocks(model, psi0, t0, t1, cfg),
        Method::ExpmOracle => {
            let state = expm_oracle(model, psi0, t0, t1, cfg.oracle_steps)?;
            let drift = (state.norm() - psi0.norm()).abs();
            Ok(Evolution {
                state,
                stats: IntegrationStats {
                    accepted: cfg.oracle_steps,
                    rejected: 0,
                    max_norm_drift: drift,
                },
            })
        }
    }
}

/// `(t, |amplitude|² for every basis state)` at `samples` evenly spaced times.
pub fn trajectory(
    model: &HamiltonianModel,
    psi0: &StateVector<f64>,
    t0: f64,
    t1: f64,
    samples: usize,
    cfg: &IntegratorConfig,
) -> Result<Vec<(f64, Vec<f64>)>> {
    let samples = samples.max(2);
    let populations = |s: &StateVector<f64>| s.amplitudes.iter().map(|z| z.norm_sqr()).collect();
    let mut rows = vec![(t0, populations(psi0))];
    let mut state = psi0.clone();
    for k in 1..samples {
        let ta = t0 + (t1 - t0) * (k - 1) as f64 / (samples - 1) as f64;
        let tb = t0 + (t1 - t0) * k as f64 / (samples - 1) as f64;
        state = evolve(model, &state, ta, tb, cfg)?.state;
        rows.push((tb, populations(&state)));
    }
    Ok(rows)
}

/// Writes [`trajectory`] rows as CSV with one `p<index>` column per basis state.
pub fn write_trajectory_csv(path: &Path, rows: &[(f64, Vec<f64>)]) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path).map_err(|e| Error::io(path, e))?);
    let dim = rows.first().map_or(0, |r| r.1.len());
    let mut header = String::from("t");
    for i in 0..dim {
        header.push_str(&format!(",p{i}"));
    }
    let mut write = || -> std::io::Result<()> {
        writeln!(f, "{header}")?;
        for (t, p) in rows {
            write!(f, "{t:.11e}")?;
            for x in p {
                write!(f, ",{x:.11e}")?;
            }
            writeln!(f)?;
        }
        f.flush()
    };
    write().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::PhysicsParams;
    use crate::hilbert::BasisState;

    /// Two-level system with constant coupling `g`: `H = g σx`.
    struct Rabi<T> {
        g: T,
    }

    impl<T: Real> SchrodingerSystem<T> for Rabi<T> {
        fn dim(&self) -> usize {
            2
        }
        fn rhs(&self, _t: T, psi: &[Complex<T>], out: &mut [Complex<T>]) {
            let mi = Complex::new(T::zero(), -self.g);
            out[0] = mi * psi[1];
            out[1] = mi * psi[0];
        }
    }

    #[test]
    fn rabi_closed_form_f64() {
        let g: f64 = 0.37;
        let t = 25.0;
        let psi0 = StateVector::basis(2, 0, 0.0);
        let out = integrate(&Rabi { g }, &psi0, 0.0, t, &IntegratorConfig::default()).unwrap();
        let expect = [Complex64::new((g * t).cos(), 0.0), Complex64::new(0.0, -(g * t).sin())];
        for (a, b) in out.state.amplitudes.iter().zip(expect) {
            assert!((a - b).norm() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn rabi_closed_form_f32() {
        let cfg = IntegratorConfig {
            rtol: 1e-5,
            atol: 1e-6,
            norm_drift_bound: 1e-3,
            ..IntegratorConfig::default()
        };
        let g = 0.5f32;
        let psi0 = StateVector::<f32>::basis(2, 0, 0.0);
        let out = integrate(&Rabi { g }, &psi0, 0.0, 3.0, &cfg).unwrap();
        assert!((out.state.amplitudes[0].re - (1.5f32).cos()).abs() < 1e-4);
        assert!((out.state.amplitudes[1].im + (1.5f32).sin()).abs() < 1e-4);
    }

    #[test]
    fn rejects_reversed_interval() {
        let psi0 = StateVector::basis(2, 0, 0.0);
        assert!(integrate(&Rabi { g: 1.0 }, &psi0, 1.0, 0.5, &IntegratorConfig::default()).is_err());
    }

    #[test]
    fn norm_drift_bound_triggers() {
        let cfg = IntegratorConfig {
            rtol: 1e-2,
            atol: 1e-2,
            norm_drift_bound: 1e-12,
            ..IntegratorConfig::default()
        };
        let psi0 = StateVector::basis(2, 0, 0.0);
        let err = integrate(&Rabi { g: 1.0 }, &psi0, 0.0, 100.0, &cfg).unwrap_err();
        assert!(matches!(err, Error::NormDrift { .. }));
    }

    #[test]
    fn step_budget_enforced() {
        let cfg = IntegratorConfig {
            max_steps: 5,
            ..IntegratorConfig::default()
        };
        let psi0 = StateVector::basis(2, 0, 0.0);
        let err = integrate(&Rabi { g: 1.0 }, &psi0, 0.0, 100.0, &cfg).unwrap_err();
        assert!(matches!(err, Error::TooManySteps { .. }));
    }

    #[test]
    fn free_evolution_is_identity_in_rotating_frame() {
        let p = PhysicsParams {
            c_max: 0.0,
            m_max: 0.0,
            ..PhysicsParams::default()
        };
        let model = HamiltonianModel::new(&p).unwrap();
        for s in [BasisState::photons(1, 0), BasisState::photons(1, 1), BasisState::photons(0, 2)] {
            let i = model.basis().index_of(&s).unwrap();
            let psi0 = StateVector::basis(model.dim(), i, 0.0);
            let out = integrate(&model, &psi0, 0.0, 5000.0, &IntegratorConfig::default()).unwrap();
            assert!(out.state.max_abs_diff(&psi0) < 1e-10);
        }
    }

    #[test]
    fn constant_coupling_matches_two_level_solution() {
        // C is on its plateau over [c.plateau_start, c.plateau_end]; evolve only there.
        let p = PhysicsParams {
            m_max: 0.0,
            ..PhysicsParams::default()
        };
        let model = HamiltonianModel::new(&p).unwrap();
        let (t0, t1) = (model.schedule().c.plateau_start(), model.schedule().c.plateau_start() + 4000.0);
        let ia = model.basis().index_of(&BasisState::photons(1, 0)).unwrap();
        let ib = model.basis().index_of(&BasisState::photons(0, 1)).unwrap();
        let psi0 = StateVector::basis(model.dim(), ia, t0);
        let out = integrate(&model, &psi0, t0, t1, &IntegratorConfig::default()).unwrap();
        let theta = p.c_max * (t1 - t0);
        assert!((out.state.amplitudes[ia] - Complex64::new(theta.cos(), 0.0)).norm() < 1e-9);
        assert!((out.state.amplitudes[ib] - Complex64::new(0.0, -theta.sin())).norm() < 1e-9);

        let oracle = expm_oracle(&model, &psi0, t0, t1, 1).unwrap();
        assert!(oracle.max_abs_diff(&out.state) < 1e-9);
        assert!((oracle.amplitudes[ia].re - theta.cos()).abs() < 1e-13);
    }

    #[test]
    fn oracle_preserves_norm() {
        let p = PhysicsParams {
            mprime_max: 0.05,
            ..PhysicsParams::default()
        };
        let model = HamiltonianModel::new(&p).unwrap();
        let i = model.basis().index_of(&BasisState::photons(1, 1)).unwrap();
        let psi0 = StateVector::basis(model.dim(), i, 0.0);
        for n in [1, 7, 300] {
            let out = expm_oracle(&model, &psi0, 0.0, model.schedule().total_time, n).unwrap();
            assert!((out.norm() - 1.0).abs() < 1e-12);
        }
    }
}
