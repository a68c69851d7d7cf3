use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::behavior::{l2, BehaviorVector};

use super::{EvalError, Label};

/// Cells with more valid triplets than this are estimated by sampling.
pub const ENUMERATION_LIMIT: u64 = 100_000;
/// Triplets drawn for a sampled cell.
pub const SAMPLED_TRIPLETS: u64 = 200_000;
const SAMPLE_SEED: u64 = 0x5eed_7219;

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledBehavior {
    pub label: Label,
    pub vector: BehaviorVector,
}

/// Fraction of triplets with `dist(a, p) < dist(a, n)`, rows indexed by the
/// anchor class and columns by the negative class. The diagonal cell of a
/// row draws negatives from every other class.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfusionMatrix {
    pub labels: Vec<Label>,
    /// `None` for rows whose class has fewer than two examples.
    pub cells: Vec<Vec<Option<f64>>>,
    /// Examples per label.
    pub counts: Vec<usize>,
}

impl ConfusionMatrix {
    pub fn get(&self, anchor: Label, negative: Label) -> Option<f64> {
        let r = self.labels.iter().position(|&l| l == anchor)?;
        let c = self.labels.iter().position(|&l| l == negative)?;
        self.cells[r][c]
    }

    /// Within-class success of `label` against all other classes.
    pub fn diagonal(&self, label: Label) -> Option<f64> {
        self.get(label, label)
    }

    pub fn to_table(&self) -> String {
        let width = self.labels.iter().map(|l| l.name().len()).max().unwrap_or(0).max(8);
        let mut out = String::from("# swarmdisc confusion v1\n");
        let _ = write!(out, "{:width$}", "anchor");
        for l in &self.labels {
            let _ = write!(out, "  {:>width$}", l.name());
        }
        out.push('\n');
        for (r, l) in self.labels.iter().enumerate() {
            let _ = write!(out, "{:width$}", l.name());
            for cell in &self.cells[r] {
                match cell {
                    Some(v) => {
                        let _ = write!(out, "  {:>width$.4}", v);
                    }
                    None => {
                        let _ = write!(out, "  {:>width$}", "missing");
                    }
                }
            }
            out.push('\n');
        }
        out
    }

    /// One `confusion.<anchor>.<negative>=<value>` line per cell.
    pub fn to_key_values(&self) -> String {
        let mut out = String::from("# swarmdisc confusion-kv v1\n");
        for (r, a) in self.labels.iter().enumerate() {
            let _ = writeln!(out, "count.{a}={}", self.counts[r]);
        }
        for (r, a) in self.labels.iter().enumerate() {
            for (c, n) in self.labels.iter().enumerate() {
                match self.cells[r][c] {
                    Some(v) => {
                        let _ = writeln!(out, "confusion.{a}.{n}={v}");
                    }
                    None => {
                        let _ = writeln!(out, "confusion.{a}.{n}=missing");
                    }
                }
            }
        }
        out
    }
}

fn canonical_order(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or_else(|| a.len().cmp(&b.len()))
}

fn cell(anchors: &[&[f64]], negatives: &[&[f64]], seed: u64) -> f64 {
    let na = anchors.len() as u64;
    let total = na * (na - 1) * negatives.len() as u64;
    if total <= ENUMERATION_LIMIT {
        let hits: u64 = (0..anchors.len())
            .into_par_iter()
            .map(|a| {
                let mut hits = 0u64;
                for p in (0..anchors.len()).filter(|&p| p != a) {
                    let dap = l2(anchors[a], anchors[p]);
                    hits += negatives.iter().filter(|n| dap < l2(anchors[a], n)).count() as u64;
                }
                hits
            })
            .sum();
        return hits as f64 / total as f64;
    }
    const CHUNKS: u64 = 64;
    let per_chunk = SAMPLED_TRIPLETS / CHUNKS;
    let hits: u64 = (0..CHUNKS)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(chunk);
            let mut hits = 0;
            for _ in 0..per_chunk {
                let a = rng.random_range(0..anchors.len());
                let mut p = rng.random_range(0..anchors.len() - 1);
                if p >= a {
                    p += 1;
                }
                let n = rng.random_range(0..negatives.len());
                if l2(anchors[a], anchors[p]) < l2(anchors[a], negatives[n]) {
                    hits += 1;
                }
            }
            hits
        })
        .sum();
    hits as f64 / (per_chunk * CHUNKS) as f64
}

/// Triplet confusion matrix over every label that occurs in `labeled`.
pub fn triplet_confusion(labeled: &[LabeledBehavior]) -> Result<ConfusionMatrix, EvalError> {
    let mut labels: Vec<Label> = labeled.iter().map(|b| b.label).collect();
    labels.sort();
    labels.dedup();
    if labels.len() < 2 {
        return Err(EvalError::TooFewLabels(labels.len()));
    }
    if let Some(first) = labeled.first() {
        if let Some(b) = labeled.iter().find(|b| b.vector.dim() != first.vector.dim() || b.vector.backend != first.vector.backend) {
            return Err(EvalError::Mixed(format!(
                "{} vector of dim {} next to {} vector of dim {}",
                first.vector.backend,
                first.vector.dim(),
                b.vector.backend,
                b.vector.dim()
            )));
        }
    }
    // examples of each class in a canonical order, so sampling does not depend on input order
    let groups: Vec<Vec<&[f64]>> = labels
        .iter()
        .map(|&l| {
            let mut g: Vec<&[f64]> =
                labeled.iter().filter(|b| b.label == l).map(|b| b.vector.values.as_slice()).collect();
            g.sort_by(|a, b| canonical_order(a, b));
            g
        })
        .collect();
    let cells = (0..labels.len())
        .map(|r| {
            (0..labels.len())
                .map(|c| {
                    if groups[r].len() < 2 {
                        return None;
                    }
                    let negatives: Vec<&[f64]> = if r == c {
                        groups.iter().enumerate().filter(|&(g, _)| g != r).flat_map(|(_, g)| g.iter().copied()).collect()
                    } else {
                        groups[c].clone()
                    };
                    let seed = SAMPLE_SEED ^ ((r as u64) << 8 | c as u64);
                    Some(cell(&groups[r], &negatives, seed))
                })
                .collect()
        })
        .collect();
    Ok(ConfusionMatrix {
        counts: groups.iter().map(Vec::len).collect(),
        labels,
        cells,
    })
}
