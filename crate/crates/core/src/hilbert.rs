//! Excitation-number-conserving occupation basis for two waveguide modes,
//! two scattering modes and two three-level atoms, plus the sparse operators
//! acting on it.
//!
//! States are ordered by total excitation `N` first, then lexicographically
//! on `(n_a, n_b, n_c, n_d, level_A, level_B)`, so indices are stable across
//! runs and builds.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::num::Real;

/// Level of a three-level ladder atom.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AtomLevel {
    Ground,
    Intermediate,
    Upper,
}

impl AtomLevel {
    pub const ALL: [AtomLevel; 3] = [AtomLevel::Ground, AtomLevel::Intermediate, AtomLevel::Upper];

    /// Number of photons absorbed to reach this level.
    pub fn excitation(self) -> u32 {
        match self {
            AtomLevel::Ground => 0,
            AtomLevel::Intermediate => 1,
            AtomLevel::Upper => 2,
        }
    }

    pub fn lowered(self) -> Option<AtomLevel> {
        match self {
            AtomLevel::Ground => None,
            AtomLevel::Intermediate => Some(AtomLevel::Ground),
            AtomLevel::Upper => Some(AtomLevel::Intermediate),
        }
    }

    pub fn raised(self) -> Option<AtomLevel> {
        match self {
            AtomLevel::Ground => Some(AtomLevel::Intermediate),
            AtomLevel::Intermediate => Some(AtomLevel::Upper),
            AtomLevel::Upper => None,
        }
    }

    fn symbol(self) -> char {
        match self {
            AtomLevel::Ground => 'g',
            AtomLevel::Intermediate => 'i',
            AtomLevel::Upper => 'e',
        }
    }
}

/// Photon mode: waveguides `A`, `B` and their scattering modes `C`, `D`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mode {
    A,
    B,
    C,
    D,
}

impl Mode {
    pub const ALL: [Mode; 4] = [Mode::A, Mode::B, Mode::C, Mode::D];
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Atom {
    A,
    B,
}

/// Occupation-number description of one basis state.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BasisState {
    pub n_a: u32,
    pub n_b: u32,
    pub n_c: u32,
    pub n_d: u32,
    pub atom_a: AtomLevel,
    pub atom_b: AtomLevel,
}

impl BasisState {
    pub const VACUUM: BasisState = BasisState {
        n_a: 0,
        n_b: 0,
        n_c: 0,
        n_d: 0,
        atom_a: AtomLevel::Ground,
        atom_b: AtomLevel::Ground,
    };

    /// Photons in waveguides only, atoms ground, scattering modes empty.
    pub fn photons(n_a: u32, n_b: u32) -> Self {
        BasisState {
            n_a,
            n_b,
            ..Self::VACUUM
        }
    }

    pub fn excitation(&self) -> u32 {
        self.n_a + self.n_b + self.n_c + self.n_d + self.atom_a.excitation() + self.atom_b.excitation()
    }

    pub fn count(&self, mode: Mode) -> u32 {
        match mode {
            Mode::A => self.n_a,
            Mode::B => self.n_b,
            Mode::C => self.n_c,
            Mode::D => self.n_d,
        }
    }

    pub fn with_count(mut self, mode: Mode, n: u32) -> Self {
        match mode {
            Mode::A => self.n_a = n,
            Mode::B => self.n_b = n,
            Mode::C => self.n_c = n,
            Mode::D => self.n_d = n,
        }
        self
    }

    pub fn level(&self, atom: Atom) -> AtomLevel {
        match atom {
            Atom::A => self.atom_a,
            Atom::B => self.atom_b,
        }
    }

    pub fn with_level(mut self, atom: Atom, level: AtomLevel) -> Self {
        match atom {
            Atom::A => self.atom_a = level,
            Atom::B => self.atom_b = level,
        }
        self
    }

    pub fn atoms_ground(&self) -> bool {
        self.atom_a == AtomLevel::Ground && self.atom_b == AtomLevel::Ground
    }

    pub fn scattering_empty(&self) -> bool {
        self.n_c == 0 && self.n_d == 0
    }

    /// The A↔B mirror image: swaps a↔b, c↔d and atom A↔atom B.
    pub fn mirrored(&self) -> Self {
        BasisState {
            n_a: self.n_b,
            n_b: self.n_a,
            n_c: self.n_d,
            n_d: self.n_c,
            atom_a: self.atom_b,
            atom_b: self.atom_a,
        }
    }

    fn sort_key(&self) -> (u32, u32, u32, u32, u32, AtomLevel, AtomLevel) {
        (
            self.excitation(),
            self.n_a,
            self.n_b,
            self.n_c,
            self.n_d,
            self.atom_a,
            self.atom_b,
        )
    }
}

/// Every basis state with total excitation at most `n_max`, in canonical order.
#[derive(Clone, Debug)]
pub struct BasisSet {
    states: Vec<BasisState>,
    index: HashMap<BasisState, usize>,
    n_max: u32,
}

/// Enumerates the truncated basis. `build_basis(2)` has 28 states.
pub fn build_basis(n_max: u32) -> BasisSet {
    let mut states = Vec::new();
    for n_a in 0..=n_max {
        for n_b in 0..=n_max - n_a {
            for n_c in 0..=n_max - n_a - n_b {
                for n_d in 0..=n_max - n_a - n_b - n_c {
                    for atom_a in AtomLevel::ALL {
                        for atom_b in AtomLevel::ALL {
                            let s = BasisState {
                                n_a,
                                n_b,
                                n_c,
                                n_d,
                                atom_a,
                                atom_b,
                            };
                            if s.excitation() <= n_max {
                                states.push(s);
                            }
                        }
                    }
                }
            }
        }
    }
    states.sort_by_key(|s| s.sort_key());
    let index = states.iter().enumerate().map(|(i, s)| (*s, i)).collect();
    BasisSet {
        states,
        index,
        n_max,
    }
}

impl BasisSet {
    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn n_max(&self) -> u32 {
        self.n_max
    }

    pub fn states(&self) -> &[BasisState] {
        &self.states
    }

    pub fn state(&self, i: usize) -> &BasisState {
        &self.states[i]
    }

    pub fn index_of(&self, s: &BasisState) -> Option<usize> {
        self.index.get(s).copied()
    }

    /// Indices of all states with total excitation exactly `n`.
    pub fn block(&self, n: u32) -> Vec<usize> {
        (0..self.dim()).filter(|&i| self.states[i].excitation() == n).collect()
    }

    /// Index permutation induced by [`BasisState::mirrored`].
    pub fn mirror_permutation(&self) -> Vec<usize> {
        self.states
            .iter()
            .map(|s| self.index[&s.mirrored()])
            .collect()
    }

    /// Plain-text listing `index n_a n_b n_c n_d A B N`, one state per line.
    pub fn dump(&self) -> String {
        let mut out = String::from("# index n_a n_b n_c n_d atom_A atom_B N\n");
        for (i, s) in self.states.iter().enumerate() {
            let _ = writeln!(
                out,
                "{i} {} {} {} {} {} {} {}",
                s.n_a,
                s.n_b,
                s.n_c,
                s.n_d,
                s.atom_a.symbol(),
                s.atom_b.symbol(),
                s.excitation()
            );
        }
        out
    }
}

/// Sparse square matrix stored as sorted, de-duplicated `(row, col, value)`
/// triplets.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseOperator<T: Real> {
    dim: usize,
    entries: Vec<(usize, usize, Complex<T>)>,
}

impl<T: Real> SparseOperator<T> {
    pub fn zero(dim: usize) -> Self {
        SparseOperator {
            dim,
            entries: Vec::new(),
        }
    }

    /// Builds an operator from triplets, summing duplicates and dropping
    /// exact zeros.
    pub fn from_triplets<I>(dim: usize, triplets: I) -> Self
    where
        I: IntoIterator<Item = (usize, usize, Complex<T>)>,
    {
        let mut acc: BTreeMap<(usize, usize), Complex<T>> = BTreeMap::new();
        for (r, c, v) in triplets {
            assert!(r < dim && c < dim, "entry ({r}, {c}) outside dimension {dim}");
            let e = acc.entry((r, c)).or_insert_with(|| Complex::new(T::zero(), T::zero()));
            *e = *e + v;
        }
        let entries = acc
            .into_iter()
            .filter(|(_, v)| v.re != T::zero() || v.im != T::zero())
            .map(|((r, c), v)| (r, c, v))
            .collect();
        SparseOperator { dim, entries }
    }

    fn diagonal(dim: usize, values: impl IntoIterator<Item = T>) -> Self {
        Self::from_triplets(
            dim,
            values
                .into_iter()
                .enumerate()
                .map(|(i, v)| (i, i, Complex::new(v, T::zero()))),
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[(usize, usize, Complex<T>)] {
        &self.entries
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn get(&self, row: usize, col: usize) -> Complex<T> {
        self.entries
            .binary_search_by(|e| (e.0, e.1).cmp(&(row, col)))
            .map(|k| self.entries[k].2)
            .unwrap_or_else(|_| Complex::new(T::zero(), T::zero()))
    }

    /// Hermitian conjugate.
    pub fn adjoint(&self) -> Self {
        Self::from_triplets(self.dim, self.entries.iter().map(|&(r, c, v)| (c, r, v.conj())))
    }

    pub fn scaled(&self, s: Complex<T>) -> Self {
        Self::from_triplets(self.dim, self.entries.iter().map(|&(r, c, v)| (r, c, v * s)))
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        Self::from_triplets(self.dim, self.entries.iter().chain(&other.entries).copied())
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scaled(Complex::new(-T::one(), T::zero())))
    }

    /// Matrix product `self · other`.
    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        let mut by_row: Vec<Vec<(usize, Complex<T>)>> = vec![Vec::new(); self.dim];
        for &(r, c, v) in &other.entries {
            by_row[r].push((c, v));
        }
        let triplets = self.entries.iter().flat_map(|&(r, k, v)| {
            by_row[k].iter().map(move |&(c, w)| (r, c, v * w))
        });
        Self::from_triplets(self.dim, triplets.collect::<Vec<_>>())
    }

    pub fn commutator(&self, other: &Self) -> Self {
        self.mul(other).sub(&other.mul(self))
    }

    /// `out += scale · self · x`.
    #[inline]
    pub fn apply_add(&self, scale: Complex<T>, x: &[Complex<T>], out: &mut [Complex<T>]) {
        for &(r, c, v) in &self.entries {
            out[r] = out[r] + scale * v * x[c];
        }
    }

    pub fn apply(&self, x: &[Complex<T>]) -> Vec<Complex<T>> {
        let mut out = vec![Complex::new(T::zero(), T::zero()); self.dim];
        self.apply_add(Complex::new(T::one(), T::zero()), x, &mut out);
        out
    }

    /// Largest `|A_rc − conj(A_cr)|`.
    pub fn hermiticity_defect(&self) -> T {
        self.sub(&self.adjoint())
            .entries
            .iter()
            .map(|e| e.2.norm())
            .fold(T::zero(), T::max)
    }

    pub fn max_abs(&self) -> T {
        self.entries.iter().map(|e| e.2.norm()).fold(T::zero(), T::max)
    }
}

fn one<T: Real>() -> Complex<T> {
    Complex::new(T::one(), T::zero())
}

/// Bosonic annihilation operator for `mode`: `⟨n−1|op|n⟩ = √n`.
pub fn annihilation<T: Real>(mode: Mode, basis: &BasisSet) -> SparseOperator<T> {
    let triplets = basis.states().iter().enumerate().filter_map(|(col, s)| {
        let n = s.count(mode);
        if n == 0 {
            return None;
        }
        let row = basis.index_of(&s.with_count(mode, n - 1))?;
        Some((row, col, Complex::new(T::lit(n as f64).sqrt(), T::zero())))
    });
    SparseOperator::from_triplets(basis.dim(), triplets.collect::<Vec<_>>())
}

/// Bosonic creation operator for `mode`: `⟨n+1|op|n⟩ = √(n+1)`; images above
/// the truncation are dropped.
pub fn creation<T: Real>(mode: Mode, basis: &BasisSet) -> SparseOperator<T> {
    let triplets = basis.states().iter().enumerate().filter_map(|(col, s)| {
        let n = s.count(mode);
        let row = basis.index_of(&s.with_count(mode, n + 1))?;
        Some((row, col, Complex::new(T::lit((n + 1) as f64).sqrt(), T::zero())))
    });
    SparseOperator::from_triplets(basis.dim(), triplets.collect::<Vec<_>>())
}

/// Atomic lowering operator: upper→intermediate and intermediate→ground with
/// unit matrix elements.
pub fn atom_lowering<T: Real>(atom: Atom, basis: &BasisSet) -> SparseOperator<T> {
    let triplets = basis.states().iter().enumerate().filter_map(|(col, s)| {
        let lower = s.level(atom).lowered()?;
        let row = basis.index_of(&s.with_level(atom, lower))?;
        Some((row, col, one()))
    });
    SparseOperator::from_triplets(basis.dim(), triplets.collect::<Vec<_>>())
}

/// Atomic raising operator, built directly rather than as an adjoint.
pub fn atom_raising<T: Real>(atom: Atom, basis: &BasisSet) -> SparseOperator<T> {
    let triplets = basis.states().iter().enumerate().filter_map(|(col, s)| {
        let upper = s.level(atom).raised()?;
        let row = basis.index_of(&s.with_level(atom, upper))?;
        Some((row, col, one()))
    });
    SparseOperator::from_triplets(basis.dim(), triplets.collect::<Vec<_>>())
}

/// Quantity counted by [`number_operator`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Occupation {
    Photons(Mode),
    /// Atomic excitation (0, 1, 2) of one atom.
    AtomExcitation(Atom),
    /// Projector onto one atomic level.
    AtomLevel(Atom, AtomLevel),
    TotalExcitation,
}

pub fn number_operator<T: Real>(what: Occupation, basis: &BasisSet) -> SparseOperator<T> {
    let values = basis.states().iter().map(|s| {
        let n = match what {
            Occupation::Photons(m) => s.count(m),
            Occupation::AtomExcitation(a) => s.level(a).excitation(),
            Occupation::AtomLevel(a, l) => u32::from(s.level(a) == l),
            Occupation::TotalExcitation => s.excitation(),
        };
        T::lit(n as f64)
    });
    SparseOperator::diagonal(basis.dim(), values.collect::<Vec<_>>())
}

/// Diagonal projector onto the states satisfying `pred`.
pub fn projector<T: Real>(basis: &BasisSet, pred: impl Fn(&BasisState) -> bool) -> SparseOperator<T> {
    let values = basis
        .states()
        .iter()
        .map(|s| if pred(s) { T::one() } else { T::zero() });
    SparseOperator::diagonal(basis.dim(), values.collect::<Vec<_>>())
}
