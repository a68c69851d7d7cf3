use crate::behavior::{l2, BehaviorVector};

use super::DiscoveryError;

/// Mean of the `k` smallest values after a stable ascending sort, or of all
/// values when fewer than `k` are given.
pub fn mean_of_k_smallest(mut distances: Vec<f64>, k: usize) -> f64 {
    distances.sort_by(f64::total_cmp);
    let take = k.min(distances.len());
    distances[..take].iter().sum::<f64>() / take as f64
}

/// Mean distance from `b` to its `k` nearest neighbours among `points`.
pub fn novelty_among<'a, I>(b: &[f64], points: I, k: usize) -> Result<f64, DiscoveryError>
where
    I: IntoIterator<Item = &'a [f64]>,
{
    if k == 0 {
        return Err(DiscoveryError::Config("k must be at least 1".into()));
    }
    let mut distances = Vec::new();
    for p in points {
        if p.len() != b.len() {
            return Err(DiscoveryError::Dimension {
                expected: b.len(),
                found: p.len(),
            });
        }
        distances.push(l2(b, p));
    }
    if distances.is_empty() {
        return Err(DiscoveryError::EmptyArchive);
    }
    Ok(mean_of_k_smallest(distances, k))
}

pub fn novelty(b: &BehaviorVector, archive: &[BehaviorVector], k: usize) -> Result<f64, DiscoveryError> {
    if let Some(other) = archive.iter().find(|a| a.backend != b.backend) {
        return Err(DiscoveryError::Backend(other.backend, b.backend));
    }
    novelty_among(&b.values, archive.iter().map(|a| a.values.as_slice()), k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::behavior::Backend;

    fn v(x: f64, y: f64) -> BehaviorVector {
        BehaviorVector::new(Backend::Handcrafted, vec![x, y])
    }

    #[test]
    fn small_examples() {
        let origin = v(0.0, 0.0);
        assert_eq!(novelty(&origin, &[v(1.0, 0.0), v(0.0, 1.0), v(3.0, 4.0)], 2).unwrap(), 1.0);
        assert_eq!(novelty(&origin, &[v(0.0, 0.0)], 1).unwrap(), 0.0);
        assert_eq!(novelty(&origin, &[v(3.0, 4.0)], 15).unwrap(), 5.0);
    }

    #[test]
    fn empty_archive_is_an_error() {
        assert!(matches!(novelty(&v(0.0, 0.0), &[], 3), Err(DiscoveryError::EmptyArchive)));
    }

    #[test]
    fn mismatched_vectors_are_errors() {
        let three = BehaviorVector::new(Backend::Handcrafted, vec![0.0; 3]);
        assert!(matches!(novelty(&v(0.0, 0.0), &[three], 1), Err(DiscoveryError::Dimension { .. })));
        let learned = BehaviorVector::new(Backend::Learned, vec![0.0; 2]);
        assert!(matches!(novelty(&v(0.0, 0.0), &[learned], 1), Err(DiscoveryError::Backend(..))));
    }
}
