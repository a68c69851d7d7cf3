use std::fmt;

use thiserror::Error;

/// Which representation produced a vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Backend {
    Handcrafted,
    Learned,
}

impl Backend {
    pub fn tag(self) -> u8 {
        match self {
            Backend::Handcrafted => 0,
            Backend::Learned => 1,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(Backend::Handcrafted),
            1 => Some(Backend::Learned),
            _ => None,
        }
    }
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Backend::Handcrafted => "metrics",
            Backend::Learned => "learned",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DistanceError {
    #[error("dimension mismatch: {0} vs {1}")]
    Dimension(usize, usize),
    #[error("backend mismatch: {0} vs {1}")]
    Backend(Backend, Backend),
}

/// A point in behavior space.
#[derive(Debug, Clone, PartialEq)]
pub struct BehaviorVector {
    pub backend: Backend,
    pub values: Vec<f64>,
}

impl BehaviorVector {
    pub fn new(backend: Backend, values: Vec<f64>) -> Self {
        Self { backend, values }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Copy with every component rounded to single precision.
    pub fn to_single_precision(&self) -> Self {
        Self::new(self.backend, self.values.iter().map(|&v| f64::from(v as f32)).collect())
    }
}

/// Euclidean distance over raw components, accumulated in index order.
pub fn l2(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = x - y;
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

pub fn behavior_distance(a: &BehaviorVector, b: &BehaviorVector) -> Result<f64, DistanceError> {
    if a.backend != b.backend {
        return Err(DistanceError::Backend(a.backend, b.backend));
    }
    if a.dim() != b.dim() {
        return Err(DistanceError::Dimension(a.dim(), b.dim()));
    }
    Ok(l2(&a.values, &b.values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn v(values: &[f64]) -> BehaviorVector {
        BehaviorVector::new(Backend::Handcrafted, values.to_vec())
    }

    #[test]
    fn three_four_five() {
        assert_eq!(behavior_distance(&v(&[0.0, 0.0]), &v(&[3.0, 4.0])).unwrap(), 5.0);
    }

    #[test]
    fn mismatches_are_errors() {
        assert_eq!(
            behavior_distance(&v(&[0.0]), &v(&[0.0, 1.0])),
            Err(DistanceError::Dimension(1, 2))
        );
        let learned = BehaviorVector::new(Backend::Learned, vec![0.0]);
        assert!(matches!(behavior_distance(&v(&[0.0]), &learned), Err(DistanceError::Backend(..))));
    }

    proptest! {
        #[test]
        fn metric_axioms(a in proptest::collection::vec(-10.0f64..10.0, 5), b in proptest::collection::vec(-10.0f64..10.0, 5)) {
            let (a, b) = (v(&a), v(&b));
            prop_assert_eq!(behavior_distance(&a, &a).unwrap(), 0.0);
            prop_assert_eq!(behavior_distance(&a, &b).unwrap(), behavior_distance(&b, &a).unwrap());
            if a != b {
                prop_assert!(behavior_distance(&a, &b).unwrap() > 0.0);
            }
        }
    }

    #[test]
    fn backend_tags_round_trip() {
        for b in [Backend::Handcrafted, Backend::Learned] {
            assert_eq!(Backend::from_tag(b.tag()), Some(b));
        }
        assert_eq!(Backend::from_tag(9), None);
    }
}
