//! PAM k-medoids: greedy BUILD initialisation followed by best-improvement
//! SWAP, with the swap gains computed in one pass per candidate using each
//! point's nearest and second-nearest medoid.

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::behavior::l2;

use super::DiscoveryError;

/// Extra runs from random initial medoids; the cheapest result is kept.
pub const DEFAULT_RESTARTS: usize = 4;

/// Swaps that improve the cost by less than this are not taken.
const SWAP_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Clustering {
    /// Point indices of the medoids, in the order they were chosen.
    pub medoids: Vec<usize>,
    /// For every point, the position in `medoids` of its nearest medoid.
    pub assignments: Vec<usize>,
    /// Sum of point-to-medoid distances.
    pub cost: f64,
}

impl Clustering {
    pub fn medoid_of(&self, point: usize) -> usize {
        self.medoids[self.assignments[point]]
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.medoids.len()];
        for &a in &self.assignments {
            sizes[a] += 1;
        }
        sizes
    }
}

/// Upper-triangle pairwise distances.
pub struct DistanceMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DistanceMatrix {
    pub fn new(points: &[&[f64]]) -> Self {
        let n = points.len();
        let rows: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|i| (i + 1..n).map(|j| l2(points[i], points[j])).collect())
            .collect();
        Self {
            n,
            data: rows.concat(),
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return 0.0;
        }
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        // rows 0..a hold n-1, n-2, ... entries
        let row_start = a * (2 * self.n - a - 1) / 2;
        self.data[row_start + b - a - 1]
    }
}

struct Nearest {
    /// Position in the medoid list.
    first: usize,
    d_first: f64,
    d_second: f64,
}

fn nearest_two(d: &DistanceMatrix, medoids: &[usize], o: usize) -> Nearest {
    let mut n = Nearest {
        first: 0,
        d_first: f64::INFINITY,
        d_second: f64::INFINITY,
    };
    for (m, &p) in medoids.iter().enumerate() {
        let dist = d.get(o, p);
        if dist < n.d_first {
            n.d_second = n.d_first;
            n.d_first = dist;
            n.first = m;
        } else if dist < n.d_second {
            n.d_second = dist;
        }
    }
    n
}

fn build(d: &DistanceMatrix, k: usize) -> Vec<usize> {
    let n = d.len();
    let first = (0..n)
        .map(|c| (c, (0..n).map(|o| d.get(o, c)).sum::<f64>()))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(c, _)| c)
        .expect("at least one point");
    let mut medoids = vec![first];
    let mut nearest: Vec<f64> = (0..n).map(|o| d.get(o, first)).collect();
    while medoids.len() < k {
        let (best, _) = (0..n)
            .into_par_iter()
            .filter(|c| !medoids.contains(c))
            .map(|c| {
                let gain: f64 = (0..n).map(|o| (nearest[o] - d.get(o, c)).max(0.0)).sum();
                (c, gain)
            })
            .reduce(|| (usize::MAX, f64::NEG_INFINITY), |a, b| {
                if b.1 > a.1 || (b.1 == a.1 && b.0 < a.0) {
                    b
                } else {
                    a
                }
            });
        medoids.push(best);
        for (o, slot) in nearest.iter_mut().enumerate() {
            *slot = slot.min(d.get(o, best));
        }
    }
    medoids
}

fn swap_to_local_optimum(d: &DistanceMatrix, medoids: &mut [usize]) {
    let n = d.len();
    let k = medoids.len();
    loop {
        let near: Vec<Nearest> = (0..n).map(|o| nearest_two(d, medoids, o)).collect();
        let mut removal = vec![0.0; k];
        for nr in &near {
            removal[nr.first] += nr.d_second - nr.d_first;
        }
        let is_medoid = {
            let mut v = vec![false; n];
            for &m in medoids.iter() {
                v[m] = true;
            }
            v
        };
        // (change in cost, candidate, medoid position)
        let best = (0..n)
            .into_par_iter()
            .filter(|&c| !is_medoid[c])
            .map(|c| {
                let mut delta = removal.clone();
                let mut shared = 0.0;
                for (o, nr) in near.iter().enumerate() {
                    let doc = d.get(o, c);
                    if doc < nr.d_first {
                        shared += doc - nr.d_first;
                        delta[nr.first] += nr.d_first - nr.d_second;
                    } else if doc < nr.d_second {
                        delta[nr.first] += doc - nr.d_second;
                    }
                }
                let (m, dm) = delta
                    .iter()
                    .enumerate()
                    .min_by(|a, b| a.1.total_cmp(b.1))
                    .expect("k >= 1");
                (dm + shared, c, m)
            })
            .reduce(|| (f64::INFINITY, usize::MAX, usize::MAX), |a, b| {
                if b.0 < a.0 || (b.0 == a.0 && (b.1, b.2) < (a.1, a.2)) {
                    b
                } else {
                    a
                }
            });
        if best.0 < -SWAP_EPS {
            medoids[best.2] = best.1;
        } else {
            return;
        }
    }
}

/// Nearest medoid per point (ties to the earlier medoid) and the total cost.
pub fn assign(d: &DistanceMatrix, medoids: &[usize]) -> (Vec<usize>, f64) {
    let mut cost = 0.0;
    let assignments = (0..d.len())
        .map(|o| {
            let nr = nearest_two(d, medoids, o);
            cost += nr.d_first;
            nr.first
        })
        .collect();
    (assignments, cost)
}

pub fn k_medoids_with(points: &[&[f64]], k: usize, seed: u64, restarts: usize) -> Result<Clustering, DiscoveryError> {
    let n = points.len();
    if k < 1 || k > n {
        return Err(DiscoveryError::KOutOfRange { k, n });
    }
    if let Some(p) = points.iter().find(|p| p.len() != points[0].len()) {
        return Err(DiscoveryError::Dimension {
            expected: points[0].len(),
            found: p.len(),
        });
    }
    let d = DistanceMatrix::new(points);
    let mut medoids = build(&d, k);
    swap_to_local_optimum(&d, &mut medoids);
    let (assignments, cost) = assign(&d, &medoids);
    let mut best = Clustering {
        medoids,
        assignments,
        cost,
    };
    if k < n {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..restarts {
            let mut medoids = index::sample(&mut rng, n, k).into_vec();
            swap_to_local_optimum(&d, &mut medoids);
            let (assignments, cost) = assign(&d, &medoids);
            if cost < best.cost - SWAP_EPS {
                best = Clustering {
                    medoids,
                    assignments,
                    cost,
                };
            }
        }
    }
    log::debug!("k-medoids: n={n} k={k} cost={}", best.cost);
    Ok(best)
}

pub fn k_medoids(points: &[&[f64]], k: usize, seed: u64) -> Result<Clustering, DiscoveryError> {
    k_medoids_with(points, k, seed, DEFAULT_RESTARTS)
}
