//! Blocked randomization of samples to plates and confounding
//! diagnostics for existing assignments.
//!
//! Randomization deals each (group x stratum) cell across plates with
//! largest-remainder apportionment, so per-plate group counts differ by
//! at most one within a cell. Diagnostics build the plate x group
//! contingency table and summarize association with Cramer's V.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{label_tag, stream};

/// Samples awaiting plate assignment, with group and optional stratum.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleRoster {
    sample_ids: Vec<String>,
    group: Vec<String>,
    stratum: Option<Vec<String>>,
}

impl SampleRoster {
    pub fn new(
        sample_ids: Vec<String>,
        group: Vec<String>,
        stratum: Option<Vec<String>>,
    ) -> Result<Self> {
        if sample_ids.is_empty() {
            return Err(Error::Design("empty roster".into()));
        }
        if group.len() != sample_ids.len() {
            return Err(Error::Design(format!(
                "{} group labels for {} samples",
                group.len(),
                sample_ids.len()
            )));
        }
        if let Some(s) = &stratum {
            if s.len() != sample_ids.len() {
                return Err(Error::Design(format!(
                    "{} stratum labels for {} samples",
                    s.len(),
                    sample_ids.len()
                )));
            }
        }
        let mut seen = BTreeSet::new();
        for id in &sample_ids {
            if !seen.insert(id) {
                return Err(Error::Design(format!("duplicate sample id '{id}'")));
            }
        }
        Ok(Self {
            sample_ids,
            group,
            stratum,
        })
    }

    pub fn len(&self) -> usize {
        self.sample_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sample_ids.is_empty()
    }

    pub fn sample_ids(&self) -> &[String] {
        &self.sample_ids
    }

    pub fn group(&self) -> &[String] {
        &self.group
    }

    pub fn stratum(&self) -> Option<&[String]> {
        self.stratum.as_deref()
    }
}

/// Mapping from sample id to plate index in `1..=n_plates`.
#[derive(Debug, Clone, PartialEq)]
pub struct PlateAssignment {
    plate_of: BTreeMap<String, usize>,
    n_plates: usize,
}

impl PlateAssignment {
    pub fn new(plate_of: BTreeMap<String, usize>, n_plates: usize) -> Result<Self> {
        if n_plates == 0 {
            return Err(Error::Design("n_plates must be at least 1".into()));
        }
        for (id, plate) in &plate_of {
            if *plate == 0 || *plate > n_plates {
                return Err(Error::Design(format!(
                    "sample '{id}' assigned to plate {plate}, outside 1..={n_plates}"
                )));
            }
        }
        Ok(Self { plate_of, n_plates })
    }

    pub fn n_plates(&self) -> usize {
        self.n_plates
    }

    pub fn plate_of(&self, sample_id: &str) -> Option<usize> {
        self.plate_of.get(sample_id).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, usize)> {
        self.plate_of.iter().map(|(id, p)| (id, *p))
    }

    pub fn len(&self) -> usize {
        self.plate_of.len()
    }

    pub fn is_empty(&self) -> bool {
        self.plate_of.is_empty()
    }
}

/// Randomize a roster onto `n_plates` plates.
///
/// Within each (group x stratum) cell, plate counts come from
/// largest-remainder apportionment (remainder plates drawn at random),
/// then the shuffled cell members are dealt out. Deterministic given
/// `seed`.
pub fn block_randomize(
    roster: &SampleRoster,
    n_plates: usize,
    seed: u64,
) -> Result<PlateAssignment> {
    if roster.is_empty() {
        return Err(Error::Design("empty roster".into()));
    }
    if n_plates == 0 {
        return Err(Error::Design("n_plates must be at least 1".into()));
    }
    if n_plates > roster.len() {
        return Err(Error::Design(format!(
            "{} plates for only {} samples",
            n_plates,
            roster.len()
        )));
    }

    let mut cells: BTreeMap<(String, String), Vec<usize>> = BTreeMap::new();
    for i in 0..roster.len() {
        let key = (
            roster.group()[i].clone(),
            roster
                .stratum()
                .map(|s| s[i].clone())
                .unwrap_or_default(),
        );
        cells.entry(key).or_default().push(i);
    }

    let mut rng = stream(seed, [label_tag("block_randomize"), 0, 0]);
    let mut plate_of = BTreeMap::new();
    for members in cells.values() {
        let mut members = members.clone();
        members.shuffle(&mut rng);
        let base = members.len() / n_plates;
        let remainder = members.len() % n_plates;
        let mut plates: Vec<usize> = (1..=n_plates).collect();
        plates.shuffle(&mut rng);
        let mut cursor = 0;
        for (rank, plate) in plates.iter().enumerate() {
            let take = base + usize::from(rank < remainder);
            for &m in &members[cursor..cursor + take] {
                plate_of.insert(roster.sample_ids()[m].clone(), *plate);
            }
            cursor += take;
        }
    }
    PlateAssignment::new(plate_of, n_plates)
}

/// Association verdict for a plate x group table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Ok,
    Warning,
    PerfectConfounding,
}

/// Contingency table plus confounding summary for an assignment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfoundingReport {
    pub group_labels: Vec<String>,
    /// `counts[plate - 1][g]` samples of group `g` on `plate`.
    pub counts: Vec<Vec<usize>>,
    pub single_group_batches: usize,
    pub cramers_v: f64,
    pub verdict: Verdict,
}

/// Cross-tabulate an assignment against its roster and grade the degree
/// of group/plate confounding.
///
/// Verdict: `perfect_confounding` when every plate holds a single group,
/// `warning` when any plate does (or Cramer's V exceeds 0.5), `ok`
/// otherwise.
pub fn diagnose(assignment: &PlateAssignment, roster: &SampleRoster) -> Result<ConfoundingReport> {
    if assignment.len() != roster.len() {
        return Err(Error::Design(format!(
            "assignment covers {} samples, roster has {}",
            assignment.len(),
            roster.len()
        )));
    }
    let group_labels: Vec<String> = roster
        .group()
        .iter()
        .cloned()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let group_index: BTreeMap<&str, usize> = group_labels
        .iter()
        .enumerate()
        .map(|(g, l)| (l.as_str(), g))
        .collect();

    let n_plates = assignment.n_plates();
    let mut counts = vec![vec![0usize; group_labels.len()]; n_plates];
    for (i, id) in roster.sample_ids().iter().enumerate() {
        let plate = assignment.plate_of(id).ok_or_else(|| {
            Error::Design(format!("sample '{id}' missing from assignment"))
        })?;
        let g = group_index[roster.group()[i].as_str()];
        counts[plate - 1][g] += 1;
    }

    let n = roster.len() as f64;
    let row_totals: Vec<usize> = counts.iter().map(|r| r.iter().sum()).collect();
    let col_totals: Vec<usize> = (0..group_labels.len())
        .map(|g| counts.iter().map(|r| r[g]).sum())
        .collect();

    let mut chi2 = 0.0;
    for (k, row) in counts.iter().enumerate() {
        for (g, &observed) in row.iter().enumerate() {
            let expected = row_totals[k] as f64 * col_totals[g] as f64 / n;
            if expected > 0.0 {
                let d = observed as f64 - expected;
                chi2 += d * d / expected;
            }
        }
    }
    let min_dim = n_plates.min(group_labels.len());
    let cramers_v = if min_dim > 1 {
        (chi2 / (n * (min_dim - 1) as f64)).sqrt().min(1.0)
    } else {
        0.0
    };

    let single_group_batches = counts
        .iter()
        .filter(|row| row.iter().filter(|c| **c > 0).count() == 1)
        .count();
    let verdict = if single_group_batches == n_plates {
        Verdict::PerfectConfounding
    } else if single_group_batches > 0 || cramers_v > 0.5 {
        Verdict::Warning
    } else {
        Verdict::Ok
    };

    Ok(ConfoundingReport {
        group_labels,
        counts,
        single_group_batches,
        cramers_v,
        verdict,
    })
}

/// Read a roster CSV with columns `id,group[,stratum]`.
pub fn read_roster_csv(path: impl AsRef<Path>) -> Result<SampleRoster> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::Parse {
        row: 0,
        message: "empty roster file".into(),
    })?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    if cols.first() != Some(&"id") || cols.get(1) != Some(&"group") {
        return Err(Error::Parse {
            row: 0,
            message: "roster header must be 'id,group[,stratum]'".into(),
        });
    }
    let has_stratum = cols.get(2) == Some(&"stratum");
    let mut ids = Vec::new();
    let mut group = Vec::new();
    let mut stratum = if has_stratum { Some(Vec::new()) } else { None };
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != cols.len() {
            return Err(Error::Parse {
                row: i + 1,
                message: format!("expected {} fields, found {}", cols.len(), fields.len()),
            });
        }
        ids.push(fields[0].to_string());
        group.push(fields[1].to_string());
        if let Some(s) = stratum.as_mut() {
            s.push(fields[2].to_string());
        }
    }
    SampleRoster::new(ids, group, stratum)
}

/// Read an assignment CSV with columns `id,plate`.
pub fn read_assignment_csv(path: impl AsRef<Path>) -> Result<PlateAssignment> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::Parse {
        row: 0,
        message: "empty assignment file".into(),
    })?;
    if header.split(',').map(str::trim).collect::<Vec<_>>() != ["id", "plate"] {
        return Err(Error::Parse {
            row: 0,
            message: "assignment header must be 'id,plate'".into(),
        });
    }
    let mut plate_of = BTreeMap::new();
    let mut max_plate = 0;
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 2 {
            return Err(Error::Parse {
                row: i + 1,
                message: format!("expected 2 fields, found {}", fields.len()),
            });
        }
        let plate: usize = fields[1].parse().map_err(|_| Error::Parse {
            row: i + 1,
            message: format!("non-numeric plate '{}' for id '{}'", fields[1], fields[0]),
        })?;
        if plate_of.insert(fields[0].to_string(), plate).is_some() {
            return Err(Error::Parse {
                row: i + 1,
                message: format!("duplicate sample id '{}'", fields[0]),
            });
        }
        max_plate = max_plate.max(plate);
    }
    PlateAssignment::new(plate_of, max_plate.max(1))
}

/// Write an assignment CSV (`id,plate`), sorted by sample id.
pub fn write_assignment_csv(
    assignment: &PlateAssignment,
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::from("id,plate\n");
    for (id, plate) in assignment.iter() {
        let _ = writeln!(out, "{id},{plate}");
    }
    fs::write(path, out).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}
