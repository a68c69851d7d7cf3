//! Text reports: medoid listings and the ablation class table.

use std::fmt::Write as _;

use rayon::prelude::*;

use swarmdisc::discovery::{k_medoids, Clustering, NoveltyArchive};
use swarmdisc::evaluation::{classify_behavior, Calibration, Label};
use swarmdisc::sim::{run_episode, SimProfile};

use crate::ablation::{FrictionCheck, SlideReport};
use crate::error::CliError;

pub const MEDOIDS_HEADER: &str = "# swarmdisc medoids v1";
pub const ABLATION_HEADER: &str = "# swarmdisc ablation v1";

#[derive(Debug, Clone, PartialEq)]
pub struct MedoidRow {
    pub rank: usize,
    pub index: usize,
    pub cluster_size: usize,
    pub label: Label,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MedoidReport {
    pub clustering: Clustering,
    pub rows: Vec<MedoidRow>,
}

impl MedoidReport {
    /// Clusters the archive and labels each medoid by re-simulating its
    /// genome from the recorded spawn seed.
    pub fn build(
        archive: &NoveltyArchive,
        k: usize,
        seed: u64,
        profile: &SimProfile,
        calibration: &Calibration,
    ) -> Result<Self, CliError> {
        let points: Vec<&[f64]> = archive.vectors().collect();
        let clustering = k_medoids(&points, k, seed)?;
        let sizes = clustering.cluster_sizes();
        let rows = clustering
            .medoids
            .par_iter()
            .enumerate()
            .map(|(rank, &index)| {
                let e = &archive.entries()[index];
                let traj = run_episode(&e.genome, profile, e.seed)?;
                Ok(MedoidRow {
                    rank,
                    index,
                    cluster_size: sizes[rank],
                    label: classify_behavior(&traj, profile, calibration),
                })
            })
            .collect::<Result<Vec<_>, CliError>>()?;
        Ok(Self { clustering, rows })
    }

    pub fn labels(&self) -> Vec<Label> {
        self.rows.iter().map(|r| r.label).collect()
    }

    /// Distinct labels other than `random`, in canonical order.
    pub fn distinct_non_random(&self) -> Vec<Label> {
        Label::ALL
            .into_iter()
            .filter(|&l| l != Label::Random && self.rows.iter().any(|r| r.label == l))
            .collect()
    }

    pub fn render(&self, archive: &NoveltyArchive, profile_name: &str) -> String {
        let mut out = format!("{MEDOIDS_HEADER}\n");
        let _ = writeln!(
            out,
            "# profile={profile_name} backend={} entries={} k={} cost={}",
            archive.backend(),
            archive.len(),
            self.rows.len(),
            self.clustering.cost
        );
        out.push_str("rank\tindex\tgeneration\tseed\tgenome\tcluster_size\tlabel\n");
        for r in &self.rows {
            let e = &archive.entries()[r.index];
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}",
                r.rank, r.index, e.generation, e.seed, e.genome, r.cluster_size, r.label
            );
        }
        out
    }
}

/// Reads the label column back out of a rendered medoid report.
pub fn parse_medoid_labels(text: &str) -> Result<Vec<Label>, String> {
    let mut lines = text.lines();
    if lines.next() != Some(MEDOIDS_HEADER) {
        return Err("not a medoid report".into());
    }
    lines
        .filter(|l| !l.starts_with('#') && !l.starts_with("rank\t") && !l.is_empty())
        .map(|l| l.rsplit('\t').next().unwrap_or("").parse::<Label>().map_err(|e| e.to_string()))
        .collect()
}

fn slide_row(out: &mut String, r: &SlideReport) {
    let _ = writeln!(
        out,
        "{}\t{}\t{}\t{}\t{}\t{}",
        r.profile,
        r.friction_mu,
        r.progress.len(),
        r.mean(),
        r.min(),
        r.max()
    );
}

/// Class presence per profile, then the friction mechanism measurements.
pub fn render_ablation(reports: &[(&str, &MedoidReport)], check: &FrictionCheck, header: &str) -> String {
    let mut out = format!("{ABLATION_HEADER}\n{header}\n");
    out.push_str("class");
    for (name, _) in reports {
        let _ = write!(out, "\t{name}");
    }
    out.push('\n');
    for label in Label::ALL {
        out.push_str(label.name());
        for (_, r) in reports {
            let count = r.rows.iter().filter(|row| row.label == label).count();
            let _ = write!(out, "\t{count}");
        }
        out.push('\n');
    }
    out.push_str("unique_non_random");
    for (_, r) in reports {
        let _ = write!(out, "\t{}", r.distinct_non_random().len());
    }
    out.push_str("\n\n# wall slide: lone robot driving into a wall at 45 degrees, progress along the wall per step (m)\n");
    out.push_str("profile\tfriction_mu\tsteps_in_contact\tmean\tmin\tmax\n");
    slide_row(&mut out, &check.frictionless);
    slide_row(&mut out, &check.full_friction);
    slide_row(&mut out, &check.calibrated);
    let _ = writeln!(out, "\nfrictionless_slides={}", check.frictionless.slides());
    let _ = writeln!(out, "full_friction_sticks={}", check.full_friction.sticks());
    let _ = writeln!(out, "mechanism={}", if check.holds() { "ok" } else { "violated" });
    out
}
