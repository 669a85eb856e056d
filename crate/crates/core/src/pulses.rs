//! Coupling envelopes `C(t)`, `M(t)` and `M′(t)`.
//!
//! Each envelope ramps up from zero, holds its amplitude on a plateau and ramps
//! back down. The turn-on and turn-off ramps may have different durations,
//! which is how fast (nonadiabatic) switching of `M(t)` is modelled.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::PhysicsParams;
use crate::num::Real;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RampShape {
    /// `sin²` ramp; continuous with continuous first derivative.
    #[default]
    RaisedCosine,
    Linear,
    /// Instantaneous switch at the ramp midpoint.
    Step,
}

impl RampShape {
    pub fn as_str(self) -> &'static str {
        match self {
            RampShape::RaisedCosine => "raised_cosine",
            RampShape::Linear => "linear",
            RampShape::Step => "step",
        }
    }
}

/// Trapezoid-like envelope starting at `t_start`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PulseProfile<T: Real> {
    pub t_start: T,
    pub ramp_up: T,
    pub plateau: T,
    pub ramp_down: T,
    pub amplitude: T,
    pub shape: RampShape,
}

impl<T: Real> PulseProfile<T> {
    /// Symmetric profile with equal turn-on and turn-off ramps.
    pub fn symmetric(t_start: T, ramp: T, plateau: T, amplitude: T, shape: RampShape) -> Self {
        PulseProfile {
            t_start,
            ramp_up: ramp,
            plateau,
            ramp_down: ramp,
            amplitude,
            shape,
        }
    }

    pub fn plateau_start(&self) -> T {
        self.t_start + self.ramp_up
    }

    pub fn plateau_end(&self) -> T {
        self.plateau_start() + self.plateau
    }

    pub fn end(&self) -> T {
        self.plateau_end() + self.ramp_down
    }

    /// Fraction of the way through a ramp (0 at zero coupling, 1 at full).
    fn ramp_fraction(&self, x: T) -> T {
        match self.shape {
            RampShape::RaisedCosine => {
                let s = (T::FRAC_PI_2() * x).sin();
                s * s
            }
            RampShape::Linear => x,
            RampShape::Step => {
                if x >= T::half() {
                    T::one()
                } else {
                    T::zero()
                }
            }
        }
    }

    /// Envelope value at time `t`.
    pub fn value_at(&self, t: T) -> T {
        if t < self.t_start || t > self.end() {
            return T::zero();
        }
        let up_end = self.plateau_start();
        let down_start = self.plateau_end();
        if t < up_end {
            self.amplitude * self.ramp_fraction((t - self.t_start) / self.ramp_up)
        } else if t <= down_start {
            self.amplitude
        } else {
            self.amplitude * self.ramp_fraction((self.end() - t) / self.ramp_down)
        }
    }

    /// `∫ value_at dt` over the whole support, in closed form.
    ///
    /// Every supported ramp shape integrates to half the ramp duration, so the
    /// area is `amplitude · (plateau + (ramp_up + ramp_down) / 2)`.
    pub fn area(&self) -> T {
        self.amplitude * (self.plateau + T::half() * (self.ramp_up + self.ramp_down))
    }

    /// Times where the envelope is not smooth: support edges and plateau edges.
    pub fn breakpoints(&self) -> [T; 4] {
        [self.t_start, self.plateau_start(), self.plateau_end(), self.end()]
    }

    /// `(t, value)` samples on a uniform grid over `[t0, t1]`.
    pub fn sample(&self, t0: T, t1: T, n: usize) -> Vec<(T, T)> {
        let n = n.max(2);
        let dt = (t1 - t0) / T::lit((n - 1) as f64);
        (0..n)
            .map(|k| {
                let t = t0 + dt * T::lit(k as f64);
                (t, self.value_at(t))
            })
            .collect()
    }
}

/// Free function form of [`PulseProfile::value_at`].
pub fn value_at<T: Real>(profile: &PulseProfile<T>, t: T) -> T {
    profile.value_at(t)
}

/// Free function form of [`PulseProfile::area`].
pub fn pulse_area<T: Real>(profile: &PulseProfile<T>) -> T {
    profile.area()
}

/// Complete pulse timing for one gate run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Schedule<T: Real> {
    pub c: PulseProfile<T>,
    pub m: PulseProfile<T>,
    /// Scattering coupling; shares the timing of `m`.
    pub m_prime: PulseProfile<T>,
    pub total_time: T,
}

impl<T: Real> Schedule<T> {
    /// `(C(t), M(t), M′(t))`.
    pub fn couplings(&self, t: T) -> (T, T, T) {
        (self.c.value_at(t), self.m.value_at(t), self.m_prime.value_at(t))
    }

    /// Sorted, de-duplicated breakpoints of every envelope inside `[0, total_time]`.
    pub fn breakpoints(&self) -> Vec<T> {
        let mut pts: Vec<T> = self
            .c
            .breakpoints()
            .into_iter()
            .chain(self.m.breakpoints())
            .chain([T::zero(), self.total_time])
            .filter(|&t| t >= T::zero() && t <= self.total_time)
            .collect();
        pts.sort_by(|a, b| a.partial_cmp(b).expect("finite breakpoints"));
        pts.dedup();
        pts
    }
}

/// Lays out the envelopes for `params`.
///
/// `M` starts at `t = 0`; the `C` window is centred within `M`'s plateau, and
/// `M′` follows `M` scaled to `M′_max`.
pub fn make_schedule(params: &PhysicsParams) -> Result<Schedule<f64>> {
    let c_span = 2.0 * params.tau_c + params.t_c;
    if params.t_m < c_span {
        return Err(Error::ScheduleInfeasible {
            deficit: c_span - params.t_m,
        });
    }
    let m = PulseProfile {
        t_start: 0.0,
        ramp_up: params.tau_m,
        plateau: params.t_m,
        ramp_down: params.tau_m_off(),
        amplitude: params.m_max,
        shape: params.shape,
    };
    let m_prime = PulseProfile {
        amplitude: if params.m_max > 0.0 { params.mprime_max } else { 0.0 },
        ..m
    };
    let c = PulseProfile::symmetric(
        m.plateau_start() + 0.5 * (params.t_m - c_span),
        params.tau_c,
        params.t_c,
        params.c_max,
        params.shape,
    );
    Ok(Schedule {
        c,
        m,
        m_prime,
        total_time: m.end(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn profile(shape: RampShape) -> PulseProfile<f64> {
        PulseProfile::symmetric(10.0, 4.0, 6.0, 2.0, shape)
    }

    #[test]
    fn value_examples() {
        let p = profile(RampShape::RaisedCosine);
        assert_eq!(p.value_at(9.0), 0.0);
        assert_eq!(p.value_at(17.0), 2.0);
        assert!((p.value_at(12.0) - 1.0).abs() < 1e-15);
        assert!((p.value_at(22.0) - 1.0).abs() < 1e-15);
        assert_eq!(p.value_at(24.5), 0.0);
        assert_eq!(profile(RampShape::Linear).value_at(11.0), 0.5);
    }

    #[test]
    fn step_area_without_ramps() {
        let p = PulseProfile::symmetric(0.0, 0.0, 5.0, 3.0, RampShape::Step);
        assert_eq!(p.area(), 15.0);
        assert_eq!(p.value_at(2.0), 3.0);
    }

    /// Composite Gauss–Legendre quadrature, used as an independent area check.
    fn quadrature(p: &PulseProfile<f64>) -> f64 {
        const X: [f64; 5] = [
            -0.906_179_845_938_664,
            -0.538_469_310_105_683,
            0.0,
            0.538_469_310_105_683,
            0.906_179_845_938_664,
        ];
        const W: [f64; 5] = [
            0.236_926_885_056_189,
            0.478_628_670_499_366,
            0.568_888_888_888_889,
            0.478_628_670_499_366,
            0.236_926_885_056_189,
        ];
        let b = p.breakpoints();
        let mut total = 0.0;
        for w in b.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            if hi <= lo {
                continue;
            }
            let n = 200;
            let h = (hi - lo) / n as f64;
            for k in 0..n {
                let mid = lo + (k as f64 + 0.5) * h;
                for (x, wt) in X.iter().zip(W) {
                    total += wt * 0.5 * h * p.value_at(mid + 0.5 * h * x);
                }
            }
        }
        total
    }

    #[test]
    fn area_matches_quadrature() {
        for shape in [RampShape::RaisedCosine, RampShape::Linear] {
            let p = PulseProfile {
                t_start: 3.0,
                ramp_up: 1000.0,
                plateau: 12090.0,
                ramp_down: 7.0,
                amplitude: 1.2e-4,
                shape,
            };
            let q = quadrature(&p);
            assert!(((p.area() - q) / q).abs() < 1e-10, "{shape:?}: {} vs {q}", p.area());
        }
    }

    #[test]
    fn raised_cosine_is_continuous() {
        let p = PulseProfile::symmetric(0.0, 1000.0, 100.0, 0.25, RampShape::RaisedCosine);
        let samples: Vec<(f64, f64)> = p.sample(-10.0, p.end() + 10.0, 4_000_001);
        let max_jump = samples
            .windows(2)
            .map(|w| (w[1].1 - w[0].1).abs())
            .fold(0.0, f64::max);
        assert!(max_jump < p.amplitude * 1e-6, "max jump {max_jump:e}");
    }

    #[test]
    fn schedule_centres_coupling_window() {
        let mut params = PhysicsParams::default();
        params.tau_m = 1000.0;
        params.t_m = 2.0 * params.tau_c + params.t_c;
        let s = make_schedule(&params).unwrap();
        assert_eq!(s.c.t_start, s.m.plateau_start());
        assert_eq!(s.c.end(), s.m.plateau_end());
        assert_eq!(s.total_time, 2.0 * params.tau_m + params.t_m);

        params.t_m += 200.0;
        let s = make_schedule(&params).unwrap();
        assert_eq!(s.c.t_start, s.m.plateau_start() + 100.0);

        params.t_m = 2.0 * params.tau_c + params.t_c - 1.0;
        match make_schedule(&params) {
            Err(Error::ScheduleInfeasible { deficit }) => assert!((deficit - 1.0).abs() < 1e-9),
            other => panic!("expected infeasible schedule, got {other:?}"),
        }
    }

    #[test]
    fn scattering_envelope_follows_photon_atom_envelope() {
        let mut params = PhysicsParams::default();
        params.m_max = 0.25;
        params.mprime_max = 0.05;
        let s = make_schedule(&params).unwrap();
        for k in 0..100 {
            let t = s.total_time * k as f64 / 99.0;
            let (_, m, mp) = s.couplings(t);
            assert!((mp - 0.2 * m).abs() < 1e-15);
        }
        params.m_max = 0.0;
        let s = make_schedule(&params).unwrap();
        assert_eq!(s.m_prime.amplitude, 0.0);
    }

    #[test]
    fn fast_turn_off() {
        let mut params = PhysicsParams::default();
        params.tau_m_off = Some(1.0);
        let s = make_schedule(&params).unwrap();
        assert_eq!(s.m.ramp_down, 1.0);
        assert_eq!(s.total_time, params.tau_m + params.t_m + 1.0);
    }

    #[test]
    fn generic_f32_profile() {
        let p = PulseProfile::<f32>::symmetric(0.0, 2.0, 1.0, 1.0, RampShape::RaisedCosine);
        assert!((p.value_at(1.0) - 0.5).abs() < 1e-6);
        assert_eq!(p.area(), 3.0);
    }

    fn arb_profile() -> impl Strategy<Value = PulseProfile<f64>> {
        (
            -100.0..100.0f64,
            0.5..500.0f64,
            0.0..1000.0f64,
            0.5..500.0f64,
            1e-5..2.0f64,
            prop_oneof![Just(RampShape::RaisedCosine), Just(RampShape::Linear)],
        )
            .prop_map(|(t_start, ramp_up, plateau, ramp_down, amplitude, shape)| PulseProfile {
                t_start,
                ramp_up,
                plateau,
                ramp_down,
                amplitude,
                shape,
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(20))]

        #[test]
        fn closed_form_area_matches_quadrature(p in arb_profile()) {
            let q = quadrature(&p);
            prop_assert!(((p.area() - q) / q).abs() < 1e-10);
        }

        #[test]
        fn symmetric_profiles_are_time_reversal_invariant(
            p in arb_profile(), frac in 0.0..1.0f64
        ) {
            let p = PulseProfile { ramp_down: p.ramp_up, ..p };
            let mid = 0.5 * (p.t_start + p.end());
            let t = p.t_start - 5.0 + frac * (p.end() - p.t_start + 10.0);
            prop_assert!((p.value_at(t) - p.value_at(2.0 * mid - t)).abs() <= 1e-9 * p.amplitude);
        }

        #[test]
        fn envelope_bounded_and_monotone_on_ramps(p in arb_profile(), frac in 0.0..1.0f64) {
            let t = p.t_start + frac * p.ramp_up;
            let v = p.value_at(t);
            prop_assert!(v >= 0.0 && v <= p.amplitude);
            prop_assert!(p.value_at(t + 1e-3 * p.ramp_up) >= v);
            prop_assert_eq!(p.value_at(p.plateau_start() + frac * p.plateau), p.amplitude);
        }

        #[test]
        fn schedule_keeps_c_inside_m_plateau(
            tau_c in 1.0..2000.0f64, t_c in 0.0..20000.0f64,
            margin in 0.0..3000.0f64, tau_m in 1.0..2000.0f64, frac in 0.0..1.0f64
        ) {
            let params = PhysicsParams {
                tau_c, t_c, tau_m, t_m: 2.0 * tau_c + t_c + margin,
                ..PhysicsParams::default()
            };
            let s = make_schedule(&params).unwrap();
            let t = frac * s.total_time;
            if s.c.value_at(t) > 0.0 {
                prop_assert_eq!(s.m.value_at(t), s.m.amplitude);
            }
        }
    }
}
