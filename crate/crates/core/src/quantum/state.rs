//! Pure states and finite mixtures over a qubit register.
//!
//! Amplitudes are kept in a sparse ordered map keyed by basis index: the
//! block-preparation states touch at most `S_X * S_Y` of the `2^n` basis states,
//! and the reset channel multiplies the number of states in flight.

use std::collections::BTreeMap;

use num_complex::Complex;

use crate::scalar::Real;

use super::circuit::{Gate, GateKind};
use super::SimError;

/// Largest register the simulator accepts.
pub const MAX_QUBITS: usize = 22;

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector<T> {
    num_qubits: usize,
    amps: BTreeMap<usize, Complex<T>>,
}

impl<T: Real> StateVector<T> {
    /// `|0...0>`.
    pub fn zero(num_qubits: usize) -> Result<Self, SimError> {
        Self::basis(num_qubits, 0)
    }

    pub fn basis(num_qubits: usize, index: usize) -> Result<Self, SimError> {
        check_budget(num_qubits)?;
        if index >> num_qubits != 0 {
            return Err(SimError::DimensionMismatch(format!(
                "basis index {index} outside {num_qubits} qubits"
            )));
        }
        let mut amps = BTreeMap::new();
        amps.insert(index, Complex::new(T::one(), T::zero()));
        Ok(Self { num_qubits, amps })
    }

    /// Builds a state from `(index, amplitude)` pairs; repeated indices add up.
    pub fn from_amplitudes(
        num_qubits: usize,
        amps: impl IntoIterator<Item = (usize, Complex<T>)>,
    ) -> Result<Self, SimError> {
        check_budget(num_qubits)?;
        let mut map = BTreeMap::new();
        for (i, a) in amps {
            if i >> num_qubits != 0 {
                return Err(SimError::DimensionMismatch(format!(
                    "basis index {i} outside {num_qubits} qubits"
                )));
            }
            *map.entry(i).or_insert_with(Complex::default) += a;
        }
        map.retain(|_, a: &mut Complex<T>| !is_exact_zero(a));
        Ok(Self {
            num_qubits,
            amps: map,
        })
    }

    #[inline]
    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    #[inline]
    pub fn dimension(&self) -> usize {
        1 << self.num_qubits
    }

    pub fn amplitude(&self, index: usize) -> Complex<T> {
        self.amps.get(&index).copied().unwrap_or_default()
    }

    /// Non-zero amplitudes in ascending basis order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, Complex<T>)> + '_ {
        self.amps.iter().map(|(&i, &a)| (i, a))
    }

    /// Number of stored (non-zero) amplitudes.
    pub fn support_len(&self) -> usize {
        self.amps.len()
    }

    /// Full `2^n` amplitude array.
    pub fn to_dense(&self) -> Vec<Complex<T>> {
        let mut out = vec![Complex::default(); self.dimension()];
        for (&i, &a) in &self.amps {
            out[i] = a;
        }
        out
    }

    pub fn norm_sqr(&self) -> T {
        self.amps.values().map(|a| a.norm_sqr()).sum()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &Self) -> Complex<T> {
        let (small, large, conj_small) = if self.amps.len() <= other.amps.len() {
            (self, other, true)
        } else {
            (other, self, false)
        };
        small
            .amps
            .iter()
            .filter_map(|(i, a)| large.amps.get(i).map(|b| if conj_small { a.conj() * b } else { b.conj() * a }))
            .fold(Complex::default(), |acc, x| acc + x)
    }

    pub(crate) fn apply(&mut self, gate: &Gate) {
        match gate.kind() {
            GateKind::Hadamard => self.hadamard(gate.target()),
            GateKind::PauliX | GateKind::ControlledX | GateKind::MultiControlledX => {
                let (mask, pattern) = gate.control_mask();
                self.flip_where(gate.target(), mask, pattern);
            }
            GateKind::Reset => unreachable!("reset is applied by the simulator"),
        }
    }

    fn flip_where(&mut self, target: usize, mask: usize, pattern: usize) {
        let bit = 1usize << target;
        let hits: Vec<(usize, Complex<T>)> = self
            .amps
            .iter()
            .filter(|(&i, _)| i & mask == pattern)
            .map(|(&i, &a)| (i, a))
            .collect();
        for (i, _) in &hits {
            self.amps.remove(i);
        }
        for (i, a) in hits {
            self.amps.insert(i ^ bit, a);
        }
    }

    fn hadamard(&mut self, target: usize) {
        let bit = 1usize << target;
        let h = T::FRAC_1_SQRT_2();
        let mut next: BTreeMap<usize, Complex<T>> = BTreeMap::new();
        for (&i, &a) in &self.amps {
            let scaled = a * h;
            *next.entry(i & !bit).or_default() += scaled;
            let one = next.entry(i | bit).or_default();
            if i & bit == 0 {
                *one += scaled;
            } else {
                *one -= scaled;
            }
        }
        next.retain(|_, a| !is_exact_zero(a));
        self.amps = next;
    }

    /// Projects `qubit` onto `|0>` and `|1>`. Each outcome is returned with its
    /// probability and the renormalized post-reset state (qubit forced to `|0>`).
    pub(crate) fn reset_split(&self, qubit: usize) -> [(T, Option<Self>); 2] {
        let bit = 1usize << qubit;
        let mut zero = BTreeMap::new();
        let mut one = BTreeMap::new();
        for (&i, &a) in &self.amps {
            if i & bit == 0 {
                zero.insert(i, a);
            } else {
                one.insert(i & !bit, a);
            }
        }
        let finish = |amps: BTreeMap<usize, Complex<T>>| {
            let p: T = amps.values().map(|a| a.norm_sqr()).sum();
            if p <= T::epsilon() * T::epsilon() {
                return (T::zero(), None);
            }
            let scale = T::one() / p.sqrt();
            let amps = amps.into_iter().map(|(i, a)| (i, a * scale)).collect();
            (
                p,
                Some(Self {
                    num_qubits: self.num_qubits,
                    amps,
                }),
            )
        };
        [finish(zero), finish(one)]
    }
}

#[inline]
fn is_exact_zero<T: Real>(a: &Complex<T>) -> bool {
    a.re == T::zero() && a.im == T::zero()
}

pub(crate) fn check_budget(num_qubits: usize) -> Result<(), SimError> {
    if num_qubits > MAX_QUBITS {
        Err(SimError::QubitBudget {
            needed: num_qubits,
            max: MAX_QUBITS,
        })
    } else {
        Ok(())
    }
}

/// One outcome of a mixture.
#[derive(Debug, Clone, PartialEq)]
pub struct Branch<T> {
    pub weight: T,
    pub state: StateVector<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum QuantumState<T> {
    Pure(StateVector<T>),
    /// Weighted ensemble of normalized pure states.
    Mixture(Vec<Branch<T>>),
}

impl<T: Real> QuantumState<T> {
    pub fn num_qubits(&self) -> usize {
        match self {
            QuantumState::Pure(s) => s.num_qubits(),
            QuantumState::Mixture(b) => b.first().map_or(0, |b| b.state.num_qubits()),
        }
    }

    pub fn is_pure(&self) -> bool {
        matches!(self, QuantumState::Pure(_))
    }

    pub fn as_pure(&self) -> Option<&StateVector<T>> {
        match self {
            QuantumState::Pure(s) => Some(s),
            QuantumState::Mixture(_) => None,
        }
    }

    /// `(weight, state)` pairs; a pure state is a single branch of weight 1.
    pub fn branches(&self) -> Vec<(T, &StateVector<T>)> {
        match self {
            QuantumState::Pure(s) => vec![(T::one(), s)],
            QuantumState::Mixture(b) => b.iter().map(|b| (b.weight, &b.state)).collect(),
        }
    }

    /// Checks unit norm of every branch and unit total weight within `tol`.
    pub fn is_normalized(&self, tol: T) -> bool {
        let branches = self.branches();
        let total: T = branches.iter().map(|(w, _)| *w).sum();
        (total - T::one()).abs() <= tol
            && branches
                .iter()
                .all(|(w, s)| *w > T::zero() && (s.norm_sqr() - T::one()).abs() <= tol)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hadamard_twice_is_identity() {
        let mut s = StateVector::<f64>::basis(3, 0b101).unwrap();
        s.apply(&Gate::h(1));
        assert_eq!(s.support_len(), 2);
        s.apply(&Gate::h(1));
        assert_eq!(s.support_len(), 1);
        assert!((s.amplitude(0b101).re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn inner_product_is_conjugate_linear_in_first_argument() {
        let a = StateVector::from_amplitudes(1, [(0, Complex::new(0.0, 1.0))]).unwrap();
        let b = StateVector::from_amplitudes(1, [(0, Complex::new(1.0, 0.0))]).unwrap();
        assert_eq!(a.inner(&b), Complex::new(0.0, -1.0));
        assert_eq!(b.inner(&a), Complex::new(0.0, 1.0));
    }

    #[test]
    fn budget_enforced() {
        assert!(StateVector::<f64>::zero(MAX_QUBITS).is_ok());
        assert!(matches!(
            StateVector::<f64>::zero(MAX_QUBITS + 1),
            Err(SimError::QubitBudget { needed: 23, max: 22 })
        ));
    }

    #[test]
    fn dense_view() {
        let s = StateVector::<f32>::basis(2, 3).unwrap();
        let d = s.to_dense();
        assert_eq!(d.len(), 4);
        assert_eq!(d[3], Complex::new(1.0, 0.0));
    }
}
