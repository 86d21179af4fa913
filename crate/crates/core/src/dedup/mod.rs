//! Blocked approximate matching of publication records.
//!
//! Two records can only match when they share a [`BlockKey`]: same year, same
//! author count and same first character of the normalized title. Inside a
//! block, a pair matches when the OSA distance of the normalized titles is
//! strictly below `threshold * max(len_a, len_b)`. Equal DOIs force a match;
//! two different DOIs forbid one. Matches are closed transitively.

mod distance;

use std::collections::BTreeMap;
use std::io::{Read, Write};

use crate::ingest::{normalize_title, PublicationRecord, ScientistRecord};
use crate::union_find::UnionFind;

pub use distance::{osa_distance, osa_distance_chars, osa_distance_within};

pub const DEFAULT_THRESHOLD: f64 = 0.10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BlockKey {
    pub year: i32,
    pub author_count: u32,
    /// First character of the normalized title; `None` for an empty title.
    pub first_letter: Option<char>,
}

pub fn block_key(p: &PublicationRecord) -> BlockKey {
    BlockKey {
        year: p.year,
        author_count: p.author_count,
        first_letter: normalize_title(&p.title).chars().next(),
    }
}

/// Largest distance `d` with `d / len < threshold`, or `None` if even an
/// exact match fails the rule.
pub fn max_allowed_distance(len: usize, threshold: f64) -> Option<usize> {
    if len == 0 || !threshold.is_finite() {
        return None;
    }
    let passes = |d: usize| (d as f64) / (len as f64) < threshold;
    let mut d = (threshold * len as f64).ceil().clamp(0.0, len as f64) as usize;
    while d > 0 && !passes(d) {
        d -= 1;
    }
    if !passes(d) {
        return None;
    }
    while d < len && passes(d + 1) {
        d += 1;
    }
    Some(d)
}

/// A publication prepared for repeated comparisons.
#[derive(Debug, Clone)]
pub struct PreparedTitle<'a> {
    pub key: BlockKey,
    pub chars: Vec<char>,
    pub doi: Option<&'a str>,
}

impl<'a> PreparedTitle<'a> {
    pub fn new(p: &'a PublicationRecord) -> Self {
        let chars: Vec<char> = normalize_title(&p.title).chars().collect();
        PreparedTitle {
            key: BlockKey {
                year: p.year,
                author_count: p.author_count,
                first_letter: chars.first().copied(),
            },
            chars,
            doi: p.doi.as_deref(),
        }
    }

    pub fn matches(&self, other: &PreparedTitle<'_>, threshold: f64) -> bool {
        if self.key != other.key {
            return false;
        }
        if let (Some(x), Some(y)) = (self.doi, other.doi) {
            return x.eq_ignore_ascii_case(y);
        }
        let len = self.chars.len().max(other.chars.len());
        if len == 0 {
            return true;
        }
        match max_allowed_distance(len, threshold) {
            Some(bound) => osa_distance_within(&self.chars, &other.chars, bound).is_some(),
            None => false,
        }
    }
}

/// Pairwise duplicate rule. Titles are normalized here, so raw titles are fine.
pub fn is_duplicate(a: &PublicationRecord, b: &PublicationRecord, threshold: f64) -> bool {
    PreparedTitle::new(a).matches(&PreparedTitle::new(b), threshold)
}

/// Groups publication indices into duplicate clusters.
///
/// Each group is sorted, and groups are ordered by their first member.
pub fn cluster_publications(pubs: &[PublicationRecord], threshold: f64) -> Vec<Vec<usize>> {
    let prepared: Vec<PreparedTitle<'_>> = pubs.iter().map(PreparedTitle::new).collect();
    let mut blocks: BTreeMap<BlockKey, Vec<usize>> = BTreeMap::new();
    for (i, p) in prepared.iter().enumerate() {
        blocks.entry(p.key).or_default().push(i);
    }
    let blocks: Vec<Vec<usize>> = blocks.into_values().collect();

    let cluster_block = |members: &Vec<usize>| -> Vec<Vec<usize>> {
        let mut uf = UnionFind::new(members.len());
        for a in 0..members.len() {
            for b in a + 1..members.len() {
                if uf.same(a, b) {
                    continue;
                }
                if prepared[members[a]].matches(&prepared[members[b]], threshold) {
                    uf.union(a, b);
                }
            }
        }
        uf.groups()
            .into_iter()
            .map(|g| g.into_iter().map(|local| members[local]).collect())
            .collect()
    };

    #[cfg(feature = "parallel")]
    let per_block: Vec<Vec<Vec<usize>>> = {
        use rayon::prelude::*;
        blocks.par_iter().map(cluster_block).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let per_block: Vec<Vec<Vec<usize>>> = blocks.iter().map(cluster_block).collect();

    let mut groups: Vec<Vec<usize>> = per_block.into_iter().flatten().collect();
    groups.sort_unstable_by_key(|g| g[0]);
    groups
}

/// One publication of one scientist.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RecordRef {
    pub scientist_id: String,
    pub publication: usize,
}

/// A deduplicated paper.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PaperCluster {
    pub cluster_id: usize,
    pub members: Vec<RecordRef>,
    pub year: i32,
    pub author_count: u32,
}

/// Flattens all publications of `records` (in order) and clusters them.
/// Cluster ids follow the position of each cluster's first member.
pub fn cluster_duplicates(records: &[ScientistRecord], threshold: f64) -> Vec<PaperCluster> {
    let mut refs = Vec::new();
    let mut pubs = Vec::new();
    for r in records {
        for (i, p) in r.publications.iter().enumerate() {
            refs.push(RecordRef {
                scientist_id: r.scientist_id.clone(),
                publication: i,
            });
            pubs.push(p.clone());
        }
    }
    cluster_publications(&pubs, threshold)
        .into_iter()
        .enumerate()
        .map(|(cluster_id, group)| PaperCluster {
            cluster_id,
            year: pubs[group[0]].year,
            author_count: pubs[group[0]].author_count,
            members: group.into_iter().map(|i| refs[i].clone()).collect(),
        })
        .collect()
}

fn member_label(m: &RecordRef) -> String {
    format!("{}#{}", m.scientist_id, m.publication)
}

/// Audit report: `cluster_id,members,title`, members as `id#pub` joined by `;`.
pub fn write_cluster_report<W: Write>(
    out: W,
    clusters: &[PaperCluster],
    records: &[ScientistRecord],
) -> csv::Result<()> {
    let by_id: std::collections::HashMap<&str, &ScientistRecord> =
        records.iter().map(|r| (r.scientist_id.as_str(), r)).collect();
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["cluster_id", "members", "title"])?;
    for c in clusters {
        let members = c.members.iter().map(member_label).collect::<Vec<_>>().join(";");
        let title = c
            .members
            .first()
            .and_then(|m| by_id.get(m.scientist_id.as_str())?.publications.get(m.publication))
            .map(|p| p.title.as_str())
            .unwrap_or("");
        w.write_record([c.cluster_id.to_string().as_str(), &members, title])?;
    }
    w.flush()?;
    Ok(())
}

/// Machine-readable assignment table: `scientist_id,publication,cluster_id`.
pub fn write_assignments<W: Write>(out: W, clusters: &[PaperCluster]) -> csv::Result<()> {
    let mut rows: Vec<(&RecordRef, usize)> = clusters
        .iter()
        .flat_map(|c| c.members.iter().map(move |m| (m, c.cluster_id)))
        .collect();
    rows.sort_by_key(|(_, id)| *id);
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["scientist_id", "publication", "cluster_id"])?;
    for (m, id) in rows {
        w.write_record([m.scientist_id.as_str(), &m.publication.to_string(), &id.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads an assignment table and rebuilds clusters, taking year and author
/// count from the referenced publications.
pub fn read_assignments<R: Read>(
    input: R,
    records: &[ScientistRecord],
) -> Result<Vec<PaperCluster>, String> {
    let by_id: std::collections::HashMap<&str, &ScientistRecord> =
        records.iter().map(|r| (r.scientist_id.as_str(), r)).collect();
    let mut grouped: BTreeMap<usize, Vec<RecordRef>> = BTreeMap::new();
    let mut reader = csv::Reader::from_reader(input);
    for row in reader.records() {
        let row = row.map_err(|e| e.to_string())?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        if row.len() != 3 {
            return Err(format!("line {line}: expected 3 columns"));
        }
        let publication: usize =
            row[1].parse().map_err(|_| format!("line {line}: bad publication index"))?;
        let cluster: usize = row[2].parse().map_err(|_| format!("line {line}: bad cluster id"))?;
        grouped.entry(cluster).or_default().push(RecordRef {
            scientist_id: row[0].to_string(),
            publication,
        });
    }
    grouped
        .into_iter()
        .map(|(cluster_id, members)| {
            let first = &members[0];
            let p = by_id
                .get(first.scientist_id.as_str())
                .and_then(|r| r.publications.get(first.publication))
                .ok_or_else(|| {
                    format!("cluster {cluster_id}: unknown record {}", member_label(first))
                })?;
            Ok(PaperCluster {
                cluster_id,
                year: p.year,
                author_count: p.author_count,
                members,
            })
        })
        .collect()
}
