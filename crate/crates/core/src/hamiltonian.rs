//! Total Hamiltonian `H(t) = H₀ + H′(t)` of the two-waveguide, two-atom model.
//!
//! ```text
//! H′(t) = C(t)  (a†b + b†a)
//!       + M(t)  (a†A₋ + aA₊ + b†B₋ + bB₊)
//!       + M′(t) (c†A₋ + cA₊ + d†B₋ + dB₊)
//! ```
//!
//! `H₀` is diagonal. In the lab frame a waveguide photon costs `ω`, a
//! scattered photon `ω_s`, and atomic levels sit at `0`, `ω + Δ`, `2ω`. The
//! rotating frame subtracts `ω·N` from every diagonal entry, which is exact
//! because every coupling term conserves the total excitation `N`.

use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{
    annihilation, atom_lowering, build_basis, Atom, AtomLevel, BasisSet, Mode, SparseOperator,
};
use crate::pulses::{make_schedule, RampShape, Schedule};

/// Energy reference used for integration.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Frame {
    Lab,
    #[default]
    Rotating,
}

impl Frame {
    pub fn as_str(self) -> &'static str {
        match self {
            Frame::Lab => "lab",
            Frame::Rotating => "rotating",
        }
    }
}

/// Every physical input of one gate run (`ħ = 1`, `ω = 1` by convention).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhysicsParams {
    pub omega: f64,
    /// Detuning of the intermediate atomic level from one-photon resonance.
    pub delta: f64,
    pub c_max: f64,
    pub m_max: f64,
    pub mprime_max: f64,
    /// Scattering-mode frequency; `None` means equal to `omega`.
    pub omega_s: Option<f64>,
    pub tau_c: f64,
    pub t_c: f64,
    /// Turn-on ramp of `M(t)`.
    pub tau_m: f64,
    /// Turn-off ramp of `M(t)`; `None` means equal to `tau_m`.
    pub tau_m_off: Option<f64>,
    pub t_m: f64,
    pub shape: RampShape,
    pub frame: Frame,
}

impl Default for PhysicsParams {
    /// Adiabatic baseline: `Δ = 0.25`, `C_max = 1.2e-4`, `τ_C = τ_M = 1000`,
    /// `M_max = 0.25`, no scattering, `T_C` at the bare pulse-area estimate.
    fn default() -> Self {
        let c_max = 1.2e-4;
        let tau_c = 1000.0;
        let t_c = std::f64::consts::FRAC_PI_2 / c_max - tau_c;
        PhysicsParams {
            omega: 1.0,
            delta: 0.25,
            c_max,
            m_max: 0.25,
            mprime_max: 0.0,
            omega_s: None,
            tau_c,
            t_c,
            tau_m: 1000.0,
            tau_m_off: None,
            t_m: 2.0 * tau_c + t_c,
            shape: RampShape::RaisedCosine,
            frame: Frame::Rotating,
        }
    }
}

impl PhysicsParams {
    pub fn omega_s(&self) -> f64 {
        self.omega_s.unwrap_or(self.omega)
    }

    pub fn tau_m_off(&self) -> f64 {
        self.tau_m_off.unwrap_or(self.tau_m)
    }

    /// Sets `T_C` and the smallest `T_M` that contains the `C` window, plus `margin`.
    pub fn with_coupling_window(mut self, t_c: f64, margin: f64) -> Self {
        self.t_c = t_c;
        self.t_m = 2.0 * self.tau_c + t_c + margin;
        self
    }

    pub fn validate(&self) -> Result<()> {
        fn check(name: &'static str, ok: bool, reason: &str) -> Result<()> {
            if ok {
                Ok(())
            } else {
                Err(Error::InvalidParameter {
                    name,
                    reason: reason.to_string(),
                })
            }
        }
        let finite = [
            self.omega,
            self.delta,
            self.c_max,
            self.m_max,
            self.mprime_max,
            self.omega_s(),
            self.tau_c,
            self.t_c,
            self.tau_m,
            self.tau_m_off(),
            self.t_m,
        ];
        check("params", finite.iter().all(|x| x.is_finite()), "all values must be finite")?;
        check("omega", self.omega > 0.0, "must be > 0")?;
        check("c_max", self.c_max >= 0.0, "must be >= 0")?;
        check("m_max", self.m_max >= 0.0, "must be >= 0")?;
        check("mprime_max", self.mprime_max >= 0.0, "must be >= 0")?;
        check("tau_c", self.tau_c >= 0.0, "must be >= 0")?;
        check("t_c", self.t_c >= 0.0, "must be >= 0")?;
        check("tau_m", self.tau_m >= 0.0, "must be >= 0")?;
        check("tau_m_off", self.tau_m_off() >= 0.0, "must be >= 0")?;
        check("t_m", self.t_m >= 0.0, "must be >= 0")?;
        Ok(())
    }
}

/// Phase `ω·N·T` separating lab-frame and rotating-frame amplitudes of an
/// `N`-excitation state after time `T` (lab phase = rotating phase − ωNT).
pub fn frame_shift_phase(params: &PhysicsParams, n: u32, total_time: f64) -> f64 {
    params.omega * n as f64 * total_time
}

/// Cached operator terms plus the pulse schedule; evaluates `H(t)`.
#[derive(Clone, Debug)]
pub struct HamiltonianModel {
    basis: Arc<BasisSet>,
    params: PhysicsParams,
    schedule: Schedule<f64>,
    diagonal: Vec<f64>,
    waveguide_coupling: SparseOperator<f64>,
    photon_atom: SparseOperator<f64>,
    scattering: SparseOperator<f64>,
    terms: DenseTerms,
}

/// Real-valued `(row, col, value)` copies of `H₀` and the three coupling
/// terms, laid out for the right-hand-side hot loop.
#[derive(Clone, Debug)]
struct DenseTerms {
    diagonal: Vec<f64>,
    coupling: [Vec<(u32, u32, f64)>; 3],
}

impl DenseTerms {
    /// `out = −i H ψ` with coupling strengths `coef`.
    #[inline]
    fn apply(&self, coef: [f64; 3], psi: &[Complex64], out: &mut [Complex64]) {
        // −i·h·ψ = (h·ψ.im, −h·ψ.re)
        for ((o, &h), p) in out.iter_mut().zip(&self.diagonal).zip(psi) {
            *o = Complex64::new(h * p.im, -h * p.re);
        }
        for (&k, terms) in coef.iter().zip(&self.coupling) {
            if k == 0.0 {
                continue;
            }
            for &(r, col, v) in terms {
                let p = psi[col as usize];
                let s = k * v;
                let o = &mut out[r as usize];
                o.re += s * p.im;
                o.im -= s * p.re;
            }
        }
    }
}

/// The model restricted to one total-excitation block. Since `H(t)` never
/// couples different blocks, evolving a block on its own is exact.
#[derive(Clone, Debug)]
pub struct BlockSystem<'a> {
    model: &'a HamiltonianModel,
    indices: Vec<usize>,
    terms: DenseTerms,
}

impl BlockSystem<'_> {
    /// Full-basis indices of the block states, in block order.
    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn dim(&self) -> usize {
        self.indices.len()
    }

    pub fn model(&self) -> &HamiltonianModel {
        self.model
    }

    #[inline]
    pub fn apply_rhs(&self, t: f64, psi: &[Complex64], out: &mut [Complex64]) {
        let (c, m, mp) = self.model.schedule.couplings(t);
        self.terms.apply([c, m, mp], psi, out);
    }
}

fn hermitian_pair(op: SparseOperator<f64>) -> SparseOperator<f64> {
    op.add(&op.adjoint())
}

fn real_triplets(op: &SparseOperator<f64>) -> Vec<(u32, u32, f64)> {
    op.entries()
        .iter()
        .map(|&(r, c, v)| {
            debug_assert_eq!(v.im, 0.0);
            (r as u32, c as u32, v.re)
        })
        .collect()
}

impl HamiltonianModel {
    /// Builds the model on the two-excitation basis.
    pub fn new(params: &PhysicsParams) -> Result<Self> {
        Self::with_basis(params, Arc::new(build_basis(2)))
    }

    pub fn with_basis(params: &PhysicsParams, basis: Arc<BasisSet>) -> Result<Self> {
        params.validate()?;
        let schedule = make_schedule(params)?;
        let a = annihilation::<f64>(Mode::A, &basis);
        let b = annihilation::<f64>(Mode::B, &basis);
        let c = annihilation::<f64>(Mode::C, &basis);
        let d = annihilation::<f64>(Mode::D, &basis);
        let lower_a = atom_lowering::<f64>(Atom::A, &basis);
        let lower_b = atom_lowering::<f64>(Atom::B, &basis);

        let waveguide_coupling = hermitian_pair(a.adjoint().mul(&b));
        let photon_atom =
            hermitian_pair(a.adjoint().mul(&lower_a)).add(&hermitian_pair(b.adjoint().mul(&lower_b)));
        let scattering =
            hermitian_pair(c.adjoint().mul(&lower_a)).add(&hermitian_pair(d.adjoint().mul(&lower_b)));

        let diagonal: Vec<f64> = basis
            .states()
            .iter()
            .map(|s| {
                let atom_energy = |l: AtomLevel| match l {
                    AtomLevel::Ground => 0.0,
                    AtomLevel::Intermediate => params.omega + params.delta,
                    AtomLevel::Upper => 2.0 * params.omega,
                };
                let lab = params.omega * f64::from(s.n_a + s.n_b)
                    + params.omega_s() * f64::from(s.n_c + s.n_d)
                    + atom_energy(s.atom_a)
                    + atom_energy(s.atom_b);
                match params.frame {
                    Frame::Lab => lab,
                    // Written out rather than subtracted to avoid cancellation error.
                    Frame::Rotating => {
                        let intermediate = [s.atom_a, s.atom_b]
                            .iter()
                            .filter(|&&l| l == AtomLevel::Intermediate)
                            .count();
                        params.delta * intermediate as f64
                            + (params.omega_s() - params.omega) * f64::from(s.n_c + s.n_d)
                    }
                }
            })
            .collect();

        Ok(HamiltonianModel {
            terms: DenseTerms {
                diagonal: diagonal.clone(),
                coupling: [
                    real_triplets(&waveguide_coupling),
                    real_triplets(&photon_atom),
                    real_triplets(&scattering),
                ],
            },
            basis,
            params: params.clone(),
            schedule,
            diagonal,
            waveguide_coupling,
            photon_atom,
            scattering,
        })
    }

    pub fn basis(&self) -> &BasisSet {
        &self.basis
    }

    pub fn basis_arc(&self) -> Arc<BasisSet> {
        Arc::clone(&self.basis)
    }

    pub fn params(&self) -> &PhysicsParams {
        &self.params
    }

    pub fn schedule(&self) -> &Schedule<f64> {
        &self.schedule
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diagonal
    }

    /// `(a†b + b†a, photon–atom term, scattering term)`, each Hermitian.
    pub fn coupling_terms(&self) -> [&SparseOperator<f64>; 3] {
        [&self.waveguide_coupling, &self.photon_atom, &self.scattering]
    }

    /// `out = −i H(t) ψ`.
    #[inline]
    pub fn apply_rhs(&self, t: f64, psi: &[Complex64], out: &mut [Complex64]) {
        let (c, m, mp) = self.schedule.couplings(t);
        self.terms.apply([c, m, mp], psi, out);
    }

    /// Schedule breakpoints strictly inside `(t0, t1)`.
    pub fn breakpoints(&self, t0: f64, t1: f64) -> Vec<f64> {
        self.schedule
            .breakpoints()
            .into_iter()
            .filter(|&t| t > t0 && t < t1)
            .collect()
    }

    /// View of the model on the block with total excitation `n`.
    pub fn block_system(&self, n: u32) -> BlockSystem<'_> {
        let indices = self.basis.block(n);
        let mut local = vec![u32::MAX; self.dim()];
        for (k, &i) in indices.iter().enumerate() {
            local[i] = k as u32;
        }
        let restrict = |terms: &[(u32, u32, f64)]| {
            terms
                .iter()
                .filter(|&&(r, c, _)| local[r as usize] != u32::MAX && local[c as usize] != u32::MAX)
                .map(|&(r, c, v)| (local[r as usize], local[c as usize], v))
                .collect::<Vec<_>>()
        };
        let terms = DenseTerms {
            diagonal: indices.iter().map(|&i| self.diagonal[i]).collect(),
            coupling: [
                restrict(&self.terms.coupling[0]),
                restrict(&self.terms.coupling[1]),
                restrict(&self.terms.coupling[2]),
            ],
        };
        BlockSystem {
            model: self,
            indices,
            terms,
        }
    }

    /// Dense `H(t)`.
    pub fn assemble(&self, t: f64) -> Result<DMatrix<Complex64>> {
        let h = self.assemble_unchecked(t);
        let deviation = (&h - h.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if deviation > 1e-12 {
            return Err(Error::NonHermitian { t, deviation });
        }
        Ok(h)
    }

    fn assemble_unchecked(&self, t: f64) -> DMatrix<Complex64> {
        let n = self.dim();
        let (c, m, mp) = self.schedule.couplings(t);
        let mut h = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            n,
            self.diagonal.iter().map(|&d| Complex64::new(d, 0.0)),
        ));
        for (coef, term) in [
            (c, &self.waveguide_coupling),
            (m, &self.photon_atom),
            (mp, &self.scattering),
        ] {
            for &(r, col, v) in term.entries() {
                h[(r, col)] += v * coef;
            }
        }
        h
    }

    /// `H(t)` restricted to the given basis indices (rows and columns).
    pub fn assemble_block(&self, t: f64, indices: &[usize]) -> DMatrix<Complex64> {
        let full = self.assemble_unchecked(t);
        DMatrix::from_fn(indices.len(), indices.len(), |i, j| full[(indices[i], indices[j])])
    }

    /// Text listing of the nonzero pattern of `H` at `t`, one excitation block at a time.
    pub fn pattern_dump(&self, t: f64) -> String {
        use std::fmt::Write as _;
        let h = self.assemble_unchecked(t);
        let mut out = String::new();
        for n in 0..=self.basis.n_max() {
            let idx = self.basis.block(n);
            let _ = writeln!(out, "# N = {n} (dim {}), t = {t}", idx.len());
            for &r in &idx {
                let row: String = idx
                    .iter()
                    .map(|&c| if h[(r, c)].norm() != 0.0 { '*' } else { '.' })
                    .collect();
                let _ = writeln!(out, "{r:>3} {row}");
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::BasisState;

    fn model(params: &PhysicsParams) -> HamiltonianModel {
        HamiltonianModel::new(params).unwrap()
    }

    #[test]
    fn outside_pulses_rotating_frame_is_diagonal_detuning() {
        let mut p = PhysicsParams::default();
        p.mprime_max = 0.1;
        p.omega_s = Some(1.3);
        let m = model(&p);
        let h = m.assemble(m.schedule().total_time + 1.0).unwrap();
        for (i, s) in m.basis().states().iter().enumerate() {
            let n_i = [s.atom_a, s.atom_b]
                .iter()
                .filter(|&&l| l == AtomLevel::Intermediate)
                .count() as f64;
            let expect = p.delta * n_i + 0.3 * f64::from(s.n_c + s.n_d);
            assert!((h[(i, i)].re - expect).abs() < 1e-15);
            for j in 0..m.dim() {
                if i != j {
                    assert_eq!(h[(i, j)].norm(), 0.0);
                }
            }
        }
    }

    #[test]
    fn vacuum_is_decoupled() {
        let m = model(&PhysicsParams::default());
        for k in 0..50 {
            let t = m.schedule().total_time * k as f64 / 49.0;
            let h = m.assemble(t).unwrap();
            for j in 1..m.dim() {
                assert_eq!(h[(0, j)].norm(), 0.0);
                assert_eq!(h[(j, 0)].norm(), 0.0);
            }
        }
    }

    #[test]
    fn single_photon_block_lab_frame() {
        let p = PhysicsParams {
            m_max: 0.0,
            frame: Frame::Lab,
            ..PhysicsParams::default()
        };
        let m = model(&p);
        let t = m.schedule().c.plateau_start() + 1.0;
        let h = m.assemble(t).unwrap();
        let ia = m.basis().index_of(&BasisState::photons(1, 0)).unwrap();
        let ib = m.basis().index_of(&BasisState::photons(0, 1)).unwrap();
        assert_eq!(h[(ia, ib)].re, p.c_max);
        assert_eq!(h[(ib, ia)].re, p.c_max);
        assert_eq!(h[(ia, ia)].re, 1.0);
        assert_eq!(h[(ib, ib)].re, 1.0);
    }

    #[test]
    fn hermitian_and_excitation_conserving() {
        let p = PhysicsParams {
            mprime_max: 0.07,
            ..PhysicsParams::default()
        };
        let m = model(&p);
        let total = m.schedule().total_time;
        for k in 0..100 {
            // deterministic pseudo-random sample points
            let t = total * ((k as f64 * 0.618_033_988_75) % 1.0);
            let h = m.assemble(t).unwrap();
            let dev = (&h - h.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
            assert!(dev < 1e-12);
            for (i, si) in m.basis().states().iter().enumerate() {
                for (j, sj) in m.basis().states().iter().enumerate() {
                    if si.excitation() != sj.excitation() {
                        assert_eq!(h[(i, j)].norm(), 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn mirror_symmetry() {
        let p = PhysicsParams {
            mprime_max: 0.05,
            ..PhysicsParams::default()
        };
        let m = model(&p);
        let perm = m.basis().mirror_permutation();
        let t = m.schedule().c.plateau_start() + 10.0;
        let h = m.assemble(t).unwrap();
        for i in 0..m.dim() {
            for j in 0..m.dim() {
                assert_eq!(h[(perm[i], perm[j])], h[(i, j)]);
            }
        }
    }

    #[test]
    fn two_photon_matrix_elements_carry_bosonic_factor() {
        let m = model(&PhysicsParams::default());
        let t = m.schedule().c.plateau_start() + 1.0;
        let h = m.assemble(t).unwrap();
        let b = m.basis();
        let two_a = b.index_of(&BasisState::photons(2, 0)).unwrap();
        let one_each = b.index_of(&BasisState::photons(1, 1)).unwrap();
        let dressed = b
            .index_of(&BasisState::photons(1, 0).with_level(Atom::A, AtomLevel::Intermediate))
            .unwrap();
        let c = m.params().c_max;
        assert!((h[(two_a, one_each)].re - c * 2f64.sqrt()).abs() < 1e-18);
        assert!((h[(dressed, two_a)].re - 0.25 * 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn rhs_matches_dense_product() {
        let p = PhysicsParams {
            mprime_max: 0.03,
            ..PhysicsParams::default()
        };
        let m = model(&p);
        let psi: Vec<Complex64> = (0..m.dim())
            .map(|k| Complex64::new((k as f64).sin(), (k as f64 * 0.3).cos()))
            .collect();
        let t = m.schedule().c.t_start + 500.0;
        let mut out = vec![Complex64::new(0.0, 0.0); m.dim()];
        m.apply_rhs(t, &psi, &mut out);
        let h = m.assemble(t).unwrap();
        let dense = h * nalgebra::DVector::from_vec(psi) * Complex64::new(0.0, -1.0);
        for (a, b) in out.iter().zip(dense.iter()) {
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn block_rhs_matches_full_rhs() {
        let p = PhysicsParams {
            mprime_max: 0.03,
            ..PhysicsParams::default()
        };
        let m = model(&p);
        let t = m.schedule().c.t_start + 700.0;
        for n in 0..=2 {
            let block = m.block_system(n);
            let local: Vec<Complex64> = (0..block.dim())
                .map(|k| Complex64::new(1.0 + k as f64, -0.5 * k as f64))
                .collect();
            let mut full = vec![Complex64::new(0.0, 0.0); m.dim()];
            for (k, &i) in block.indices().iter().enumerate() {
                full[i] = local[k];
            }
            let mut out_full = vec![Complex64::new(0.0, 0.0); m.dim()];
            m.apply_rhs(t, &full, &mut out_full);
            let mut out_block = vec![Complex64::new(0.0, 0.0); block.dim()];
            block.apply_rhs(t, &local, &mut out_block);
            for (k, &i) in block.indices().iter().enumerate() {
                assert_eq!(out_block[k], out_full[i]);
            }
        }
    }

    #[test]
    fn frame_shift_examples() {
        let p = PhysicsParams::default();
        assert_eq!(frame_shift_phase(&p, 0, 100.0), 0.0);
        assert_eq!(frame_shift_phase(&p, 1, 100.0), 100.0);
    }

    #[test]
    fn invalid_params_rejected() {
        let p = PhysicsParams {
            omega: 0.0,
            ..PhysicsParams::default()
        };
        assert!(matches!(
            HamiltonianModel::new(&p),
            Err(Error::InvalidParameter { name: "omega", .. })
        ));
    }

    #[test]
    fn pattern_dump_has_all_blocks() {
        let m = model(&PhysicsParams::default());
        let d = m.pattern_dump(5000.0);
        assert!(d.contains("# N = 0 (dim 1)"));
        assert!(d.contains("# N = 2 (dim 21)"));
    }
}
