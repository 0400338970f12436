//! Product Hilbert space for M lambda atoms and a Fock-truncated cavity
//! mode: basis enumeration, Hamiltonians, excitation bookkeeping, projectors
//! and collapse operators.
//!
//! Everything is simulated in the full product space (dimension 18 for two
//! atoms at photon cutoff 1) rather than a hand-reduced subspace, so that
//! confinement to the transfer chain is a testable statement instead of an
//! assumption.

use std::collections::HashMap;
use std::fmt;

use ndarray::{Array1, Array2};
use thiserror::Error;

use crate::linalg::C64;

#[derive(Debug, Error, PartialEq)]
pub enum HilbertError {
    #[error("unsupported atom count {0}: this model covers 1 or 2 atoms")]
    UnsupportedAtomCount(usize),
    #[error("photon cutoff must be at least 1, got {0}")]
    CutoffTooSmall(usize),
    #[error("expected one drive pair per atom ({expected}), got {got}")]
    DriveCountMismatch { expected: usize, got: usize },
    #[error("non-finite control amplitude for atom {atom}: omega={omega}, g={g}")]
    NonFiniteAmplitude { atom: usize, omega: f64, g: f64 },
    #[error("state {0} is not in the basis")]
    UnknownState(String),
    #[error("negative {name} rate: {value}")]
    NegativeRate { name: &'static str, value: f64 },
}

/// Internal level of a lambda atom. Ordering `F < S < E` fixes the
/// deterministic basis layout.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AtomLevel {
    /// Ground state driven by the classical laser.
    F,
    /// Ground state coupled to the cavity mode.
    S,
    /// Excited state.
    E,
}

impl AtomLevel {
    pub const ALL: [AtomLevel; 3] = [AtomLevel::F, AtomLevel::S, AtomLevel::E];

    fn symbol(self) -> char {
        match self {
            AtomLevel::F => 'f',
            AtomLevel::S => 's',
            AtomLevel::E => 'e',
        }
    }
}

/// One product basis element: an internal level per atom plus a photon
/// number.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BasisState {
    pub levels: Vec<AtomLevel>,
    pub photons: usize,
}

impl BasisState {
    pub fn new(levels: Vec<AtomLevel>, photons: usize) -> Self {
        Self { levels, photons }
    }
}

impl fmt::Display for BasisState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|")?;
        for l in &self.levels {
            write!(f, "{}", l.symbol())?;
        }
        write!(f, ",{}>", self.photons)
    }
}

/// Complete ordered product basis with a state -> index map.
///
/// Ordering is lexicographic in (atom 1 level, atom 2 level, photons) with
/// level order f < s < e, so layouts are deterministic across runs.
#[derive(Debug)]
pub struct Basis {
    states: Vec<BasisState>,
    index: HashMap<BasisState, usize>,
    num_atoms: usize,
    cutoff: usize,
}

impl Basis {
    /// Enumerate the product basis for `num_atoms` atoms (1 or 2) and photon
    /// numbers `0..=cutoff`.
    pub fn build(num_atoms: usize, cutoff: usize) -> Result<Self, HilbertError> {
        if !(1..=2).contains(&num_atoms) {
            return Err(HilbertError::UnsupportedAtomCount(num_atoms));
        }
        if cutoff < 1 {
            return Err(HilbertError::CutoffTooSmall(cutoff));
        }
        let mut states = Vec::with_capacity(3_usize.pow(num_atoms as u32) * (cutoff + 1));
        match num_atoms {
            1 => {
                for l in AtomLevel::ALL {
                    for n in 0..=cutoff {
                        states.push(BasisState::new(vec![l], n));
                    }
                }
            }
            _ => {
                for l1 in AtomLevel::ALL {
                    for l2 in AtomLevel::ALL {
                        for n in 0..=cutoff {
                            states.push(BasisState::new(vec![l1, l2], n));
                        }
                    }
                }
            }
        }
        let index = states
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), i))
            .collect();
        Ok(Self {
            states,
            index,
            num_atoms,
            cutoff,
        })
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn num_atoms(&self) -> usize {
        self.num_atoms
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
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

    fn require_index(&self, s: &BasisState) -> Result<usize, HilbertError> {
        self.index_of(s)
            .ok_or_else(|| HilbertError::UnknownState(s.to_string()))
    }

    /// Unit vector for one basis state.
    pub fn unit_vector(&self, s: &BasisState) -> Result<Array1<C64>, HilbertError> {
        let i = self.require_index(s)?;
        let mut v = Array1::<C64>::zeros(self.dim());
        v[i] = C64::new(1.0, 0.0);
        Ok(v)
    }

    /// The all-ground trap state |s..s,0>, which every Hamiltonian in this
    /// model annihilates.
    pub fn trap_state(&self) -> BasisState {
        BasisState::new(vec![AtomLevel::S; self.num_atoms], 0)
    }

    /// The ordered state chain traversed by the transfer: for two atoms
    /// |fs,0> - |es,0> - |ss,1> - |se,0> - |sf,0>, for one atom
    /// |f,0> - |e,0> - |s,1>.
    pub fn transfer_chain(&self) -> Vec<BasisState> {
        use AtomLevel::{E, F, S};
        match self.num_atoms {
            1 => vec![
                BasisState::new(vec![F], 0),
                BasisState::new(vec![E], 0),
                BasisState::new(vec![S], 1),
            ],
            _ => vec![
                BasisState::new(vec![F, S], 0),
                BasisState::new(vec![E, S], 0),
                BasisState::new(vec![S, S], 1),
                BasisState::new(vec![S, E], 0),
                BasisState::new(vec![S, F], 0),
            ],
        }
    }
}

/// Instantaneous control amplitudes for one atom, in rad/us.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AtomDrive {
    /// Laser Rabi frequency on the f-e transition.
    pub omega: f64,
    /// Cavity coupling on the e-s transition.
    pub g: f64,
}

impl AtomDrive {
    pub fn new(omega: f64, g: f64) -> Self {
        Self { omega, g }
    }
}

/// Interaction Hamiltonian at one instant,
/// `H = sum_l [Omega_l |f>_l<e| + g_l |e>_l<s| a + h.c.]`,
/// as a dense Hermitian matrix over the product basis.
pub fn build_hamiltonian(basis: &Basis, drives: &[AtomDrive]) -> Result<Array2<C64>, HilbertError> {
    if drives.len() != basis.num_atoms() {
        return Err(HilbertError::DriveCountMismatch {
            expected: basis.num_atoms(),
            got: drives.len(),
        });
    }
    for (atom, d) in drives.iter().enumerate() {
        if !d.omega.is_finite() || !d.g.is_finite() {
            return Err(HilbertError::NonFiniteAmplitude {
                atom,
                omega: d.omega,
                g: d.g,
            });
        }
    }
    let dim = basis.dim();
    let mut h = Array2::<C64>::zeros((dim, dim));
    for (i, st) in basis.states().iter().enumerate() {
        for (atom, d) in drives.iter().enumerate() {
            // Omega_l |f><e| + h.c.: photon number unchanged
            if st.levels[atom] == AtomLevel::E {
                let mut tgt = st.clone();
                tgt.levels[atom] = AtomLevel::F;
                let j = basis.index_of(&tgt).expect("level swap stays in basis");
                h[[j, i]] += C64::new(d.omega, 0.0);
                h[[i, j]] += C64::new(d.omega, 0.0);
            }
            // g_l |e><s| a + h.c.: |s, n> -> |e, n-1> with matrix element g*sqrt(n)
            if st.levels[atom] == AtomLevel::S && st.photons >= 1 {
                let mut tgt = st.clone();
                tgt.levels[atom] = AtomLevel::E;
                tgt.photons -= 1;
                let j = basis
                    .index_of(&tgt)
                    .expect("photon emission stays in basis");
                let amp = C64::new(d.g * (st.photons as f64).sqrt(), 0.0);
                h[[j, i]] += amp;
                h[[i, j]] += amp;
            }
        }
    }
    Ok(h)
}

/// Conserved excitation operator: diagonal count of (atoms in |e> or |f>)
/// plus photons. Commutes with every Hamiltonian this module builds, which
/// is what makes the transfer chain a closed sector.
pub fn excitation_operator(basis: &Basis) -> Array2<C64> {
    let dim = basis.dim();
    let mut n = Array2::<C64>::zeros((dim, dim));
    for (i, st) in basis.states().iter().enumerate() {
        let atoms = st
            .levels
            .iter()
            .filter(|l| matches!(l, AtomLevel::E | AtomLevel::F))
            .count();
        n[[i, i]] = C64::new((atoms + st.photons) as f64, 0.0);
    }
    n
}

/// Cavity annihilation operator `a` over the product basis.
pub fn annihilation_operator(basis: &Basis) -> Array2<C64> {
    let dim = basis.dim();
    let mut a = Array2::<C64>::zeros((dim, dim));
    for (i, st) in basis.states().iter().enumerate() {
        if st.photons >= 1 {
            let mut tgt = st.clone();
            tgt.photons -= 1;
            let j = basis.index_of(&tgt).expect("photon loss stays in basis");
            a[[j, i]] = C64::new((st.photons as f64).sqrt(), 0.0);
        }
    }
    a
}

/// Decoherence rates in rad/us: cavity photon leakage `kappa` and total
/// atomic spontaneous emission `gamma`, split evenly across the two decay
/// branches e->s and e->f.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecoherenceParams {
    pub kappa: f64,
    pub gamma: f64,
}

impl DecoherenceParams {
    pub fn new(kappa: f64, gamma: f64) -> Result<Self, HilbertError> {
        if kappa < 0.0 || !kappa.is_finite() {
            return Err(HilbertError::NegativeRate {
                name: "kappa",
                value: kappa,
            });
        }
        if gamma < 0.0 || !gamma.is_finite() {
            return Err(HilbertError::NegativeRate {
                name: "gamma",
                value: gamma,
            });
        }
        Ok(Self { kappa, gamma })
    }

    pub fn closed() -> Self {
        Self {
            kappa: 0.0,
            gamma: 0.0,
        }
    }

    /// Per-branch emission rate, gamma/2 for each of e->s and e->f.
    pub fn branch_rate(&self) -> f64 {
        self.gamma / 2.0
    }

    pub fn is_closed(&self) -> bool {
        self.kappa == 0.0 && self.gamma == 0.0
    }
}

/// One jump operator with its rate (rad/us).
#[derive(Clone, Debug)]
pub struct CollapseOp {
    pub label: String,
    pub op: Array2<C64>,
    pub rate: f64,
}

/// Collapse operators for the master equation: the cavity annihilation
/// operator at rate kappa and, for each atom, the two lowering operators
/// |s><e| and |f><e| at rate gamma/2 each.
pub fn collapse_operators(
    basis: &Basis,
    dec: &DecoherenceParams,
) -> Result<Vec<CollapseOp>, HilbertError> {
    // re-validate: DecoherenceParams may have been built literally
    let dec = DecoherenceParams::new(dec.kappa, dec.gamma)?;
    let dim = basis.dim();
    let mut ops = Vec::with_capacity(1 + 2 * basis.num_atoms());
    ops.push(CollapseOp {
        label: "a".to_owned(),
        op: annihilation_operator(basis),
        rate: dec.kappa,
    });
    for atom in 0..basis.num_atoms() {
        for target in [AtomLevel::S, AtomLevel::F] {
            let mut op = Array2::<C64>::zeros((dim, dim));
            for (i, st) in basis.states().iter().enumerate() {
                if st.levels[atom] == AtomLevel::E {
                    let mut tgt = st.clone();
                    tgt.levels[atom] = target;
                    let j = basis.index_of(&tgt).expect("level lowering stays in basis");
                    op[[j, i]] = C64::new(1.0, 0.0);
                }
            }
            ops.push(CollapseOp {
                label: format!("S{}_{}e", atom + 1, target.symbol()),
                op,
                rate: dec.branch_rate(),
            });
        }
    }
    Ok(ops)
}

/// Orthogonal projector onto the span of the listed basis states.
pub fn subspace_projector(
    basis: &Basis,
    states: &[BasisState],
) -> Result<Array2<C64>, HilbertError> {
    let dim = basis.dim();
    let mut p = Array2::<C64>::zeros((dim, dim));
    for s in states {
        let i = basis.require_index(s)?;
        p[[i, i]] = C64::new(1.0, 0.0);
    }
    Ok(p)
}
