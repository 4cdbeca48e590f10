//! Pure states, gates and projective measurement.
//!
//! Qubit 0 is the most significant bit of the basis index, so the basis state
//! `|q0 q1 ... q(n-1)⟩` lives at index `q0·2^(n-1) + ... + q(n-1)`.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;

use num_complex::Complex64;
use rand::Rng;
use serde::ser::{SerializeSeq, SerializeStruct};
use serde::{Serialize, Serializer};

use super::QsimError;

pub type C64 = Complex64;

/// Largest register a [`StateVector`] may hold.
pub const MAX_QUBITS: usize = 16;

const NORM_TOL: f64 = 1e-10;
/// Branches below this probability are treated as impossible.
pub const ZERO_BRANCH: f64 = 1e-14;

/// Single-qubit measurement basis.
///
/// Outcome bit 0 is the +1 eigenvalue, outcome bit 1 the −1 eigenvalue.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, serde::Deserialize)]
pub enum MeasurementBasis {
    X,
    Y,
    Z,
}

impl MeasurementBasis {
    /// Eigenvector `(e0, e1)` for the given outcome bit.
    fn eigenvector(self, outcome: u8) -> (C64, C64) {
        let h = C64::new(FRAC_1_SQRT_2, 0.0);
        let sign = if outcome == 0 { 1.0 } else { -1.0 };
        match self {
            MeasurementBasis::Z => {
                if outcome == 0 {
                    (C64::new(1.0, 0.0), C64::new(0.0, 0.0))
                } else {
                    (C64::new(0.0, 0.0), C64::new(1.0, 0.0))
                }
            }
            MeasurementBasis::X => (h, h * sign),
            MeasurementBasis::Y => (h, C64::new(0.0, FRAC_1_SQRT_2 * sign)),
        }
    }

    pub fn as_char(self) -> char {
        match self {
            MeasurementBasis::X => 'X',
            MeasurementBasis::Y => 'Y',
            MeasurementBasis::Z => 'Z',
        }
    }
}

impl fmt::Display for MeasurementBasis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_char())
    }
}

/// Normalized amplitude vector over `n_qubits` qubits.
///
/// A register with zero qubits (a single amplitude) is permitted only as the
/// leftover of measuring every qubit.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<C64>,
}

impl StateVector {
    /// Wraps amplitudes that must already be normalized.
    pub fn from_amplitudes(n_qubits: usize, amps: Vec<C64>) -> Result<Self, QsimError> {
        check_size(n_qubits)?;
        if amps.len() != 1usize << n_qubits {
            return Err(QsimError::Size(format!(
                "{} amplitudes for {} qubits (expected {})",
                amps.len(),
                n_qubits,
                1usize << n_qubits
            )));
        }
        let norm = norm_of(&amps);
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(QsimError::Normalization(norm));
        }
        Ok(StateVector { n_qubits, amps })
    }

    /// Normalizes the given amplitudes; fails on the zero vector.
    pub fn normalized(n_qubits: usize, mut amps: Vec<C64>) -> Result<Self, QsimError> {
        check_size(n_qubits)?;
        if amps.len() != 1usize << n_qubits {
            return Err(QsimError::Size(format!(
                "{} amplitudes for {} qubits",
                amps.len(),
                n_qubits
            )));
        }
        let norm = norm_of(&amps);
        if norm < ZERO_BRANCH {
            return Err(QsimError::Normalization(norm));
        }
        amps.iter_mut().for_each(|a| *a /= norm);
        Ok(StateVector { n_qubits, amps })
    }

    /// Computational basis state `|index⟩`.
    pub fn basis_state(n_qubits: usize, index: usize) -> Result<Self, QsimError> {
        check_size(n_qubits)?;
        let dim = 1usize << n_qubits;
        if index >= dim {
            return Err(QsimError::Index { qubit: index, n_qubits });
        }
        let mut amps = vec![C64::new(0.0, 0.0); dim];
        amps[index] = C64::new(1.0, 0.0);
        Ok(StateVector { n_qubits, amps })
    }

    /// `|0…0⟩`.
    pub fn zero(n_qubits: usize) -> Result<Self, QsimError> {
        Self::basis_state(n_qubits, 0)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        norm_of(&self.amps)
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> Result<C64, QsimError> {
        self.same_dim(other)?;
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// `|⟨self|other⟩|²`.
    pub fn fidelity(&self, other: &StateVector) -> Result<f64, QsimError> {
        Ok(self.inner(other)?.norm_sqr())
    }

    /// Equality up to a global phase: `|⟨a|b⟩| ≥ 1 − tol`.
    pub fn approx_eq_up_to_phase(&self, other: &StateVector, tol: f64) -> bool {
        self.n_qubits == other.n_qubits
            && self.inner(other).map(|c| c.norm() >= 1.0 - tol).unwrap_or(false)
    }

    /// Probability of each computational basis index.
    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    fn same_dim(&self, other: &StateVector) -> Result<(), QsimError> {
        if self.n_qubits != other.n_qubits {
            return Err(QsimError::DimensionMismatch {
                left: self.n_qubits,
                right: other.n_qubits,
            });
        }
        Ok(())
    }

    fn check_qubit(&self, qubit: usize) -> Result<(), QsimError> {
        if qubit >= self.n_qubits {
            return Err(QsimError::Index {
                qubit,
                n_qubits: self.n_qubits,
            });
        }
        Ok(())
    }

    /// Bit mask of `qubit` inside a basis index.
    fn mask(&self, qubit: usize) -> usize {
        1usize << (self.n_qubits - 1 - qubit)
    }

    fn map_amplitudes_where_one(&self, qubit: usize, f: impl Fn(C64) -> C64) -> Result<Self, QsimError> {
        self.check_qubit(qubit)?;
        let mask = self.mask(qubit);
        let amps = self
            .amps
            .iter()
            .enumerate()
            .map(|(i, &a)| if i & mask != 0 { f(a) } else { a })
            .collect();
        Ok(StateVector {
            n_qubits: self.n_qubits,
            amps,
        })
    }

    /// Reorders qubits: qubit `k` of the result is qubit `order[k]` of `self`.
    pub fn permute_qubits(&self, order: &[usize]) -> Result<Self, QsimError> {
        let n = self.n_qubits;
        let mut seen = vec![false; n];
        if order.len() != n {
            return Err(QsimError::Size(format!("permutation of length {} for {} qubits", order.len(), n)));
        }
        for &q in order {
            if q >= n || seen[q] {
                return Err(QsimError::Index { qubit: q, n_qubits: n });
            }
            seen[q] = true;
        }
        let mut amps = vec![C64::new(0.0, 0.0); self.dim()];
        for (old, &a) in self.amps.iter().enumerate() {
            let mut new = 0usize;
            for (k, &src) in order.iter().enumerate() {
                if old & self.mask(src) != 0 {
                    new |= 1 << (n - 1 - k);
                }
            }
            amps[new] = a;
        }
        Ok(StateVector { n_qubits: n, amps })
    }

    /// Serializes as a JSON array of `[re, im]` pairs.
    pub fn amplitudes_json(&self) -> String {
        serde_json::to_string(&AmplitudeList(&self.amps)).expect("amplitudes serialize")
    }
}

fn check_size(n_qubits: usize) -> Result<(), QsimError> {
    if n_qubits > MAX_QUBITS {
        return Err(QsimError::Size(format!(
            "{n_qubits} qubits exceeds the supported maximum of {MAX_QUBITS}"
        )));
    }
    Ok(())
}

fn norm_of(amps: &[C64]) -> f64 {
    amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
}

struct AmplitudeList<'a>(&'a [C64]);

impl Serialize for AmplitudeList<'_> {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut seq = serializer.serialize_seq(Some(self.0.len()))?;
        for a in self.0 {
            seq.serialize_element(&[a.re, a.im])?;
        }
        seq.end()
    }
}

impl Serialize for StateVector {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut st = serializer.serialize_struct("StateVector", 2)?;
        st.serialize_field("n_qubits", &self.n_qubits)?;
        st.serialize_field("amplitudes", &AmplitudeList(&self.amps))?;
        st.end()
    }
}

/// `(|0…0⟩ + |1…1⟩)/√2` on `n` qubits.
pub fn ghz_state(n: usize) -> Result<StateVector, QsimError> {
    if n == 0 || n > MAX_QUBITS {
        return Err(QsimError::Size(format!("GHZ state needs 1..={MAX_QUBITS} qubits, got {n}")));
    }
    let dim = 1usize << n;
    let mut amps = vec![C64::new(0.0, 0.0); dim];
    amps[0] = C64::new(FRAC_1_SQRT_2, 0.0);
    amps[dim - 1] = C64::new(FRAC_1_SQRT_2, 0.0);
    Ok(StateVector { n_qubits: n, amps })
}

/// `(|0…0⟩ + e^{iθ}|1…1⟩)/√2`; θ = π gives GHZ⁻.
pub fn rotated_ghz(n: usize, theta: f64) -> Result<StateVector, QsimError> {
    apply_rz(&ghz_state(n)?, 0, theta)
}

/// The photonic source state `(|HVVH⟩ − |VHHV⟩)/√2` with H ↦ 0, V ↦ 1.
pub fn ghz_prime_state() -> StateVector {
    let mut amps = vec![C64::new(0.0, 0.0); 16];
    amps[0b0110] = C64::new(FRAC_1_SQRT_2, 0.0);
    amps[0b1001] = C64::new(-FRAC_1_SQRT_2, 0.0);
    StateVector { n_qubits: 4, amps }
}

/// Local Pauli correction taking GHZ′ to GHZ₄: X on the two middle qubits
/// (parties 2 and 3), then Z on the first.
pub fn local_correct_ghz_prime(s: &StateVector) -> Result<StateVector, QsimError> {
    if s.n_qubits() != 4 {
        return Err(QsimError::Size(format!(
            "GHZ' correction acts on 4 qubits, got {}",
            s.n_qubits()
        )));
    }
    let s = apply_pauli_x(s, 1)?;
    let s = apply_pauli_x(&s, 2)?;
    apply_pauli_z(&s, 0)
}

pub fn apply_pauli_z(s: &StateVector, qubit: usize) -> Result<StateVector, QsimError> {
    s.map_amplitudes_where_one(qubit, |a| -a)
}

/// Diagonal phase `diag(1, e^{iθ})` on one qubit.
pub fn apply_rz(s: &StateVector, qubit: usize, theta: f64) -> Result<StateVector, QsimError> {
    let phase = C64::from_polar(1.0, theta);
    s.map_amplitudes_where_one(qubit, |a| a * phase)
}

pub fn apply_pauli_x(s: &StateVector, qubit: usize) -> Result<StateVector, QsimError> {
    s.check_qubit(qubit)?;
    let mask = s.mask(qubit);
    let amps = (0..s.dim()).map(|i| s.amps[i ^ mask]).collect();
    Ok(StateVector {
        n_qubits: s.n_qubits,
        amps,
    })
}

pub fn apply_hadamard(s: &StateVector, qubit: usize) -> Result<StateVector, QsimError> {
    s.check_qubit(qubit)?;
    let mask = s.mask(qubit);
    let mut amps = s.amps.clone();
    for i in 0..s.dim() {
        if i & mask == 0 {
            let (a0, a1) = (s.amps[i], s.amps[i | mask]);
            amps[i] = (a0 + a1) * FRAC_1_SQRT_2;
            amps[i | mask] = (a0 - a1) * FRAC_1_SQRT_2;
        }
    }
    Ok(StateVector {
        n_qubits: s.n_qubits,
        amps,
    })
}

/// One measurement branch: its Born probability and, when possible, the
/// renormalized post-measurement state with `qubit` removed.
#[derive(Clone, Debug)]
pub struct Branch {
    pub probability: f64,
    pub post_state: Option<StateVector>,
}

/// Projects `qubit` onto the eigenvector of `basis` with the given outcome.
pub fn branch(s: &StateVector, qubit: usize, basis: MeasurementBasis, outcome: u8) -> Result<Branch, QsimError> {
    s.check_qubit(qubit)?;
    if outcome > 1 {
        return Err(QsimError::Internal(format!("outcome bit {outcome}")));
    }
    let (e0, e1) = basis.eigenvector(outcome);
    let (c0, c1) = (e0.conj(), e1.conj());
    let n = s.n_qubits;
    let shift = n - 1 - qubit;
    let low = (1usize << shift) - 1;
    let reduced_dim = 1usize << (n - 1);
    let mut amps = Vec::with_capacity(reduced_dim);
    for r in 0..reduced_dim {
        // reinsert the measured bit at position `shift`
        let i0 = ((r & !low) << 1) | (r & low);
        let i1 = i0 | (1 << shift);
        amps.push(c0 * s.amps[i0] + c1 * s.amps[i1]);
    }
    let probability = amps.iter().map(|a| a.norm_sqr()).sum::<f64>();
    let post_state = if probability > ZERO_BRANCH {
        let norm = probability.sqrt();
        amps.iter_mut().for_each(|a| *a /= norm);
        Some(StateVector {
            n_qubits: n - 1,
            amps,
        })
    } else {
        None
    };
    Ok(Branch {
        probability,
        post_state,
    })
}

/// Samples a projective measurement of one qubit and removes it from the register.
pub fn measure<R: Rng + ?Sized>(
    s: &StateVector,
    qubit: usize,
    basis: MeasurementBasis,
    rng: &mut R,
) -> Result<(u8, StateVector), QsimError> {
    let zero = branch(s, qubit, basis, 0)?;
    let u: f64 = rng.gen();
    if u < zero.probability {
        if let Some(post) = zero.post_state {
            return Ok((0, post));
        }
    } else {
        let one = branch(s, qubit, basis, 1)?;
        if let Some(post) = one.post_state {
            return Ok((1, post));
        }
    }
    Err(QsimError::Internal(format!(
        "sampled a zero-probability branch (p0 = {}, u = {u})",
        zero.probability
    )))
}
