use num_complex::Complex64;

use crate::error::{Error, Result};

/// Maximum deviation of the Euclidean norm from 1 accepted by [`PureState::new`].
pub const NORM_TOL: f64 = 1e-12;

/// A unit vector of complex amplitudes in a space of dimension at least 2.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    amplitudes: Vec<Complex64>,
}

pub(crate) fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(Complex64::norm_sqr).sum::<f64>().sqrt()
}

impl PureState {
    /// Wraps amplitudes that are already normalized to within [`NORM_TOL`].
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() < 2 {
            return Err(Error::DimensionTooSmall(amplitudes.len()));
        }
        let n = norm(&amplitudes);
        if (n - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized(n));
        }
        Ok(Self { amplitudes })
    }

    /// Rescales arbitrary nonzero amplitudes to unit norm.
    pub fn normalized(mut amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() < 2 {
            return Err(Error::DimensionTooSmall(amplitudes.len()));
        }
        let n = norm(&amplitudes);
        if n == 0.0 || !n.is_finite() {
            return Err(Error::ZeroVector);
        }
        for a in &mut amplitudes {
            *a /= n;
        }
        Ok(Self { amplitudes })
    }

    pub fn from_real(amplitudes: &[f64]) -> Result<Self> {
        Self::new(amplitudes.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    /// Computational basis vector `|index⟩` of dimension `dim`.
    pub fn basis(dim: usize, index: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::DimensionTooSmall(dim));
        }
        if index >= dim {
            return Err(Error::IndexOutOfRange { index, len: dim });
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); dim];
        amplitudes[index] = Complex64::new(1.0, 0.0);
        Ok(Self { amplitudes })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    #[inline]
    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        norm(&self.amplitudes)
    }
}

/// A non-empty collection of pure states sharing one dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSet {
    states: Vec<PureState>,
}

impl StateSet {
    pub fn new(states: Vec<PureState>) -> Result<Self> {
        let first = states.first().ok_or(Error::Empty("state set"))?;
        let d = first.dim();
        if let Some(bad) = states.iter().find(|s| s.dim() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: bad.dim(),
            });
        }
        Ok(Self { states })
    }

    /// Number of states `k`.
    #[inline]
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Shared dimension `d`.
    #[inline]
    pub fn dim(&self) -> usize {
        self.states[0].dim()
    }

    pub fn states(&self) -> &[PureState] {
        &self.states
    }

    pub fn get(&self, i: usize) -> Option<&PureState> {
        self.states.get(i)
    }

    pub fn iter(&self) -> std::slice::Iter<'_, PureState> {
        self.states.iter()
    }
}

impl<'a> IntoIterator for &'a StateSet {
    type Item = &'a PureState;
    type IntoIter = std::slice::Iter<'a, PureState>;

    fn into_iter(self) -> Self::IntoIter {
        self.states.iter()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_states() {
        assert_eq!(
            PureState::from_real(&[1.0]),
            Err(Error::DimensionTooSmall(1))
        );
        assert!(matches!(
            PureState::from_real(&[0.5, 0.5]),
            Err(Error::NotNormalized(_))
        ));
        assert_eq!(
            PureState::normalized(vec![Complex64::new(0.0, 0.0); 3]),
            Err(Error::ZeroVector)
        );
    }

    #[test]
    fn normalizes() {
        let s = PureState::normalized(vec![Complex64::new(3.0, 0.0), Complex64::new(0.0, 4.0)])
            .unwrap();
        assert!((s.norm() - 1.0).abs() < 1e-15);
        assert!((s.amplitudes()[1].im - 0.8).abs() < 1e-15);
    }

    #[test]
    fn set_requires_equal_dimensions() {
        let a = PureState::basis(2, 0).unwrap();
        let b = PureState::basis(3, 0).unwrap();
        assert_eq!(
            StateSet::new(vec![a, b]),
            Err(Error::DimensionMismatch {
                expected: 2,
                found: 3
            })
        );
        assert_eq!(StateSet::new(vec![]), Err(Error::Empty("state set")));
    }
}
