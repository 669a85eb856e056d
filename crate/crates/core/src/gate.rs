//! Gate-level analysis: runs the four logical inputs, extracts the linear and
//! nonlinear phases and scores the result against the controlled-sign target
//! `diag(1, 1, 1, −1)`.
//!
//! Logical qubit 1 is a photon in waveguide A, qubit 2 a photon in waveguide B
//! (single-rail encoding). Ideally each lone photon crosses to the other
//! waveguide, so outputs are read with the waveguides swapped: logical qubit 1
//! is the photon count in `b`, qubit 2 the count in `a`. After that relabeling
//! the measured single-photon phases `ϕ_a`, `ϕ_b` are removed, leaving only
//! `Δφ_N = ϕ_ab − ϕ_a − ϕ_b` on `|1,1⟩`.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolve::{evolve, mean_excitation, IntegrationStats, IntegratorConfig, StateVector};
use crate::hamiltonian::{HamiltonianModel, PhysicsParams};
use crate::hilbert::{AtomLevel, BasisSet, BasisState};
use crate::num::wrap_phase;

/// Logical basis in the order `|0,0⟩, |0,1⟩, |1,0⟩, |1,1⟩` as `(qubit 1, qubit 2)`.
pub const LOGICAL_BASIS: [(u32, u32); 4] = [(0, 0), (0, 1), (1, 0), (1, 1)];

/// Success probabilities below this leave the heralded fidelity undefined.
pub const MIN_HERALD_PROBABILITY: f64 = 1e-12;

/// Physical input state for a logical input.
pub fn input_state((q1, q2): (u32, u32)) -> BasisState {
    BasisState::photons(q1, q2)
}

/// Physical configuration read as logical output `(q1, q2)` after relabeling.
pub fn ideal_output((q1, q2): (u32, u32)) -> BasisState {
    BasisState::photons(q2, q1)
}

/// Post-selection rule applied to the output.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeraldMode {
    /// Accept only when every photon leaves in its correct (relabeled) path.
    Paths,
    /// Accept when both atoms are in their ground state and nothing was scattered.
    #[default]
    AtomsGround,
}

impl HeraldMode {
    pub fn as_str(self) -> &'static str {
        match self {
            HeraldMode::Paths => "paths",
            HeraldMode::AtomsGround => "atoms_ground",
        }
    }

    /// Whether `s` passes the herald. With `input` given, `Paths` accepts only
    /// that input's ideal output configuration; without it, any configuration
    /// of at most one photon per waveguide with atoms ground and nothing
    /// scattered (used for superposition inputs).
    pub fn accepts(self, s: &BasisState, input: Option<(u32, u32)>) -> bool {
        match (self, input) {
            (HeraldMode::Paths, Some(q)) => *s == ideal_output(q),
            (HeraldMode::Paths, None) => {
                s.atoms_ground() && s.scattering_empty() && s.n_a <= 1 && s.n_b <= 1
            }
            (HeraldMode::AtomsGround, _) => s.atoms_ground() && s.scattering_empty(),
        }
    }
}

/// Final states of the four logical inputs.
#[derive(Clone, Debug)]
pub struct GateRun {
    pub params: PhysicsParams,
    pub basis: Arc<BasisSet>,
    /// Indexed like [`LOGICAL_BASIS`].
    pub finals: [StateVector<f64>; 4],
    pub total_time: f64,
    pub stats: [IntegrationStats; 4],
    /// Largest `|‖ψ_final‖ − 1|` over the inputs.
    pub norm_drift: f64,
    /// Largest `|⟨N⟩_final − N_input|` over the inputs, with `⟨N⟩` normalized.
    pub excitation_drift: f64,
}

impl GateRun {
    /// Amplitude of input `input` on physical basis state `s`.
    pub fn amplitude(&self, input: usize, s: &BasisState) -> Complex64 {
        self.basis
            .index_of(s)
            .map_or(Complex64::new(0.0, 0.0), |i| self.finals[input].amplitudes[i])
    }
}

/// Evolves one logical input through the full schedule of `model`.
pub fn run_input(
    model: &HamiltonianModel,
    logical: (u32, u32),
    cfg: &IntegratorConfig,
) -> Result<(StateVector<f64>, IntegrationStats)> {
    let basis = model.basis();
    let idx = basis
        .index_of(&input_state(logical))
        .expect("logical inputs lie inside the two-excitation basis");
    let psi0 = StateVector::basis(basis.dim(), idx, 0.0);
    let total = model.schedule().total_time;
    if logical == (0, 0) {
        // The vacuum is a 1×1 block with zero energy in either frame.
        return Ok((StateVector::new(psi0.amplitudes, total), IntegrationStats::default()));
    }
    let evo = evolve(model, &psi0, 0.0, total, cfg)?;
    Ok((evo.state, evo.stats))
}

/// Runs all four logical inputs (in parallel) for `params`.
pub fn run_gate(params: &PhysicsParams, cfg: &IntegratorConfig) -> Result<GateRun> {
    let model = HamiltonianModel::new(params)?;
    let results: Vec<(StateVector<f64>, IntegrationStats)> = LOGICAL_BASIS
        .par_iter()
        .map(|&q| run_input(&model, q, cfg))
        .collect::<Result<_>>()?;
    let basis = model.basis_arc();
    let mut norm_drift = 0.0f64;
    let mut excitation_drift = 0.0f64;
    for ((state, _), &(q1, q2)) in results.iter().zip(&LOGICAL_BASIS) {
        norm_drift = norm_drift.max((state.norm() - 1.0).abs());
        excitation_drift =
            excitation_drift.max((mean_excitation(&basis, state) - f64::from(q1 + q2)).abs());
    }
    let mut it = results.into_iter();
    let mut next = || it.next().expect("four inputs");
    let r = [next(), next(), next(), next()];
    Ok(GateRun {
        params: params.clone(),
        basis,
        total_time: model.schedule().total_time,
        stats: [r[0].1, r[1].1, r[2].1, r[3].1],
        finals: [r[0].0.clone(), r[1].0.clone(), r[2].0.clone(), r[3].0.clone()],
        norm_drift,
        excitation_drift,
    })
}

/// Linear and nonlinear phases, each reduced to (−π, π].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Phases {
    pub phi_a: f64,
    pub phi_b: f64,
    pub phi_ab: f64,
    pub delta_phi_n: f64,
}

fn phase_of(z: Complex64, what: &'static str) -> Result<f64> {
    let magnitude = z.norm();
    if magnitude < 1e-12 {
        return Err(Error::DegenerateAmplitude { what, magnitude });
    }
    Ok(wrap_phase(z.arg()))
}

/// Phases from the target amplitudes of the `|1,0⟩`, `|0,1⟩` and `|1,1⟩` inputs.
pub fn phases_from_amplitudes(amp_10: Complex64, amp_01: Complex64, amp_11: Complex64) -> Result<Phases> {
    let phi_a = phase_of(amp_10, "phi_a")?;
    let phi_b = phase_of(amp_01, "phi_b")?;
    let phi_ab = phase_of(amp_11, "phi_ab")?;
    Ok(Phases {
        phi_a,
        phi_b,
        phi_ab,
        delta_phi_n: wrap_phase(phi_ab - (phi_a + phi_b)),
    })
}

fn target_amplitudes(basis: &BasisSet, finals: &[StateVector<f64>; 4]) -> [Complex64; 3] {
    let amp = |input: usize| {
        let i = basis
            .index_of(&ideal_output(LOGICAL_BASIS[input]))
            .expect("ideal outputs lie inside the basis");
        finals[input].amplitudes[i]
    };
    [amp(2), amp(1), amp(3)]
}

/// `ϕ_a`, `ϕ_b`, `ϕ_ab` and `Δφ_N` of a run.
pub fn extract_phases(run: &GateRun) -> Result<Phases> {
    let [a10, a01, a11] = target_amplitudes(&run.basis, &run.finals);
    phases_from_amplitudes(a10, a01, a11)
}

/// Phase factor undoing the measured linear phases on a physical state:
/// `e^{−i(n_b ϕ_a + n_a ϕ_b)}` (relabeled counts).
fn correction(s: &BasisState, phases: &Phases) -> Complex64 {
    Complex64::from_polar(1.0, -(f64::from(s.n_b) * phases.phi_a + f64::from(s.n_a) * phases.phi_b))
}

/// 4×4 map `m[j][i]` from logical input `i` to logical output `j`, after
/// relabeling and linear-phase correction. Ideally `diag(1, 1, 1, e^{iΔφ_N})`.
pub fn transfer_matrix(run: &GateRun, phases: &Phases) -> [[Complex64; 4]; 4] {
    let mut m = [[Complex64::new(0.0, 0.0); 4]; 4];
    for (j, &out) in LOGICAL_BASIS.iter().enumerate() {
        let s = ideal_output(out);
        for (i, entry) in m[j].iter_mut().enumerate() {
            *entry = run.amplitude(i, &s) * correction(&s, phases);
        }
    }
    m
}

/// Target `Û|input⟩` components over logical outputs for the CZ-type gate
/// `diag(1, 1, 1, e^{iφ})`.
fn ideal_image(input: &[Complex64; 4], phase: f64) -> [Complex64; 4] {
    let mut out = *input;
    out[3] *= Complex64::from_polar(1.0, phase);
    out
}

/// `⟨Ψ|ρ_out|Ψ⟩` where `ρ_out` is the reduced density matrix of the corrected
/// waveguide modes, restricted to the computational span, and `target` gives
/// `|Ψ⟩` over logical outputs.
fn reduced_overlap(basis: &BasisSet, amps: &[Complex64], phases: &Phases, target: &[Complex64; 4]) -> f64 {
    // Environment = (n_c, n_d, atom A, atom B).
    let mut by_env: BTreeMap<(u32, u32, AtomLevel, AtomLevel), Complex64> = BTreeMap::new();
    for (s, &z) in basis.states().iter().zip(amps) {
        if s.n_a > 1 || s.n_b > 1 || z.norm_sqr() == 0.0 {
            continue;
        }
        let j = LOGICAL_BASIS
            .iter()
            .position(|&q| {
                let ideal = ideal_output(q);
                ideal.n_a == s.n_a && ideal.n_b == s.n_b
            })
            .expect("n_a, n_b <= 1 is a computational configuration");
        let env = (s.n_c, s.n_d, s.atom_a, s.atom_b);
        *by_env.entry(env).or_default() += target[j].conj() * z * correction(s, phases);
    }
    by_env.values().map(|z| z.norm_sqr()).sum()
}

/// Herald outcome for the four inputs.
#[derive(Clone, Debug)]
pub struct Heralded {
    pub mode: HeraldMode,
    /// Squared norm of each projected final state.
    pub probabilities: [f64; 4],
    pub p_mean: f64,
    /// Projected final states, not renormalized: projection only zeroes
    /// rejected components, so every kept amplitude is bit-identical to the raw one.
    pub projected: [StateVector<f64>; 4],
}

fn project(basis: &BasisSet, psi: &[Complex64], mode: HeraldMode, input: Option<(u32, u32)>) -> Vec<Complex64> {
    psi.iter()
        .zip(basis.states())
        .map(|(&z, s)| if mode.accepts(s, input) { z } else { Complex64::new(0.0, 0.0) })
        .collect()
}

pub fn herald(run: &GateRun, mode: HeraldMode) -> Heralded {
    let projected: [StateVector<f64>; 4] = std::array::from_fn(|i| {
        StateVector::new(
            project(&run.basis, &run.finals[i].amplitudes, mode, Some(LOGICAL_BASIS[i])),
            run.total_time,
        )
    });
    let probabilities: [f64; 4] = std::array::from_fn(|i| projected[i].norm().powi(2));
    Heralded {
        mode,
        p_mean: probabilities.iter().sum::<f64>() / 4.0,
        probabilities,
        projected,
    }
}

/// `Δφ_N` and friends computed from heralded amplitudes.
pub fn extract_phases_heralded(run: &GateRun, heralded: &Heralded) -> Result<Phases> {
    let [a10, a01, a11] = target_amplitudes(&run.basis, &heralded.projected);
    phases_from_amplitudes(a10, a01, a11)
}

/// Unheralded and heralded value of one fidelity metric.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FidelityPair {
    pub unheralded: f64,
    /// `None` when every contributing input had negligible success probability.
    pub heralded: Option<f64>,
    /// Inputs dropped from the heralded average for negligible success probability.
    pub excluded: usize,
}

/// Basis-state-averaged fidelity `F = mean_i ⟨Ψ_i|Û†ρ_out Û|Ψ_i⟩` with
/// `Û = diag(1, 1, 1, −1)`.
pub fn fidelity_basis_avg(run: &GateRun, phases: &Phases, mode: HeraldMode) -> FidelityPair {
    let heralded = herald(run, mode);
    let mut raw = 0.0;
    let mut her_sum = 0.0;
    let mut her_count = 0usize;
    for (i, state) in run.finals.iter().enumerate() {
        let mut input = [Complex64::new(0.0, 0.0); 4];
        input[i] = Complex64::new(1.0, 0.0);
        let target = ideal_image(&input, std::f64::consts::PI);
        raw += reduced_overlap(&run.basis, &state.amplitudes, phases, &target);
        let p = heralded.probabilities[i];
        if p >= MIN_HERALD_PROBABILITY {
            her_sum += reduced_overlap(&run.basis, &heralded.projected[i].amplitudes, phases, &target) / p;
            her_count += 1;
        }
    }
    FidelityPair {
        unheralded: raw / 4.0,
        heralded: (her_count > 0).then(|| her_sum / her_count as f64),
        excluded: 4 - her_count,
    }
}

/// Equal superposition of the four logical inputs, evolved by linearity.
fn superposed_final(run: &GateRun) -> Vec<Complex64> {
    let mut sup = vec![Complex64::new(0.0, 0.0); run.basis.dim()];
    for f in &run.finals {
        for (s, z) in sup.iter_mut().zip(&f.amplitudes) {
            *s += z * 0.5;
        }
    }
    sup
}

/// Fidelity of the output for input `(|00⟩+|01⟩+|10⟩+|11⟩)/2` against
/// `diag(1, 1, 1, e^{i·target_phase})`; unlike [`fidelity_basis_avg`] this
/// sees the phase of the `|1,1⟩` amplitude.
pub fn fidelity_phase_sensitive_with(
    run: &GateRun,
    phases: &Phases,
    mode: HeraldMode,
    target_phase: f64,
) -> FidelityPair {
    let target = ideal_image(&[Complex64::new(0.5, 0.0); 4], target_phase);
    let sup = superposed_final(run);
    let unheralded = reduced_overlap(&run.basis, &sup, phases, &target);
    let projected = project(&run.basis, &sup, mode, None);
    let p: f64 = projected.iter().map(|z| z.norm_sqr()).sum();
    let heralded = (p >= MIN_HERALD_PROBABILITY)
        .then(|| reduced_overlap(&run.basis, &projected, phases, &target) / p);
    FidelityPair {
        unheralded,
        excluded: usize::from(heralded.is_none()),
        heralded,
    }
}

/// [`fidelity_phase_sensitive_with`] against the controlled-sign target (`π`).
pub fn fidelity_phase_sensitive(run: &GateRun, phases: &Phases, mode: HeraldMode) -> FidelityPair {
    fidelity_phase_sensitive_with(run, phases, mode, std::f64::consts::PI)
}

/// Everything reported for one gate run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateMetrics {
    pub phases: Phases,
    /// Phases recomputed from the heralded amplitudes; `None` when a target
    /// amplitude does not survive the herald.
    pub phases_heralded: Option<Phases>,
    pub herald_mode: HeraldMode,
    pub f_basis: FidelityPair,
    pub f_phase: FidelityPair,
    /// Success probability per logical input (order of [`LOGICAL_BASIS`]).
    pub p: [f64; 4],
    pub p_mean: f64,
    pub norm_drift: f64,
    pub excitation_drift: f64,
}

pub fn compute_metrics(run: &GateRun, mode: HeraldMode) -> Result<GateMetrics> {
    let phases = extract_phases(run)?;
    let h = herald(run, mode);
    Ok(GateMetrics {
        f_basis: fidelity_basis_avg(run, &phases, mode),
        f_phase: fidelity_phase_sensitive(run, &phases, mode),
        phases_heralded: extract_phases_heralded(run, &h).ok(),
        phases,
        herald_mode: mode,
        p: h.probabilities,
        p_mean: h.p_mean,
        norm_drift: run.norm_drift,
        excitation_drift: run.excitation_drift,
    })
}

/// [`run_gate`] followed by [`compute_metrics`].
pub fn simulate(params: &PhysicsParams, cfg: &IntegratorConfig, mode: HeraldMode) -> Result<(GateRun, GateMetrics)> {
    let run = run_gate(params, cfg)?;
    let metrics = compute_metrics(&run, mode)?;
    Ok((run, metrics))
}
