//! Per-scientist collaboration ratios and the aggregate tables, curves and
//! histograms built from them.
//!
//! * g-ratio: share of a scientist's collaboration weight spent with women.
//!   Neighbours of unknown gender are left out of both sums.
//! * m-ratio: share spent with scientists whose primary field differs from
//!   the scientist's own. Neighbours of unknown field are left out of both
//!   sums; a scientist without a field has no m-ratio.
//!
//! Undefined values are `None`, never 0.

use std::io::Write;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::fit::Histogram;
use crate::format::{opt_sig6, sig6};
use crate::graph::CollaborationNetwork;
use crate::ingest::{Gender, MajorField};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Metric {
    GRatio,
    MRatio,
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::GRatio => "g_ratio",
            Metric::MRatio => "m_ratio",
        }
    }
}

/// Integer numerator and denominator of a ratio.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RatioParts {
    pub numerator: u64,
    pub denominator: u64,
}

impl RatioParts {
    pub fn ratio(self) -> Option<f64> {
        (self.denominator > 0).then(|| self.numerator as f64 / self.denominator as f64)
    }
}

/// Weight to women over weight to neighbours of known gender.
pub fn g_ratio_parts(tcn: &CollaborationNetwork, i: usize) -> RatioParts {
    let mut parts = RatioParts::default();
    for &(j, w) in tcn.neighbors(i) {
        match tcn.node(j).gender {
            Gender::Female => {
                parts.numerator += w;
                parts.denominator += w;
            }
            Gender::Male => parts.denominator += w,
            Gender::Unknown => {}
        }
    }
    parts
}

pub fn g_ratio(tcn: &CollaborationNetwork, i: usize) -> Option<f64> {
    g_ratio_parts(tcn, i).ratio()
}

/// Weight to other-field neighbours over weight to neighbours of known
/// field. `None` when `i` has no field.
pub fn m_ratio_parts(tcn: &CollaborationNetwork, i: usize) -> Option<RatioParts> {
    let own = tcn.node(i).field?;
    let mut parts = RatioParts::default();
    for &(j, w) in tcn.neighbors(i) {
        if let Some(f) = tcn.node(j).field {
            parts.denominator += w;
            if f != own {
                parts.numerator += w;
            }
        }
    }
    Some(parts)
}

pub fn m_ratio(tcn: &CollaborationNetwork, i: usize) -> Option<f64> {
    m_ratio_parts(tcn, i)?.ratio()
}

/// The metric for every node, in node order.
pub fn metric_values(tcn: &CollaborationNetwork, metric: Metric) -> Vec<Option<f64>> {
    let eval = |i: usize| match metric {
        Metric::GRatio => g_ratio(tcn, i),
        Metric::MRatio => m_ratio(tcn, i),
    };
    #[cfg(feature = "parallel")]
    {
        (0..tcn.len()).into_par_iter().map(eval).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..tcn.len()).map(eval).collect()
    }
}

/// Sample mean with its standard error (`sample std / sqrt(n)`, absent for
/// `n < 2`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanSe {
    pub mean: f64,
    pub se: Option<f64>,
    pub n: usize,
}

impl MeanSe {
    pub fn of(values: &[f64]) -> Option<MeanSe> {
        let n = values.len();
        if n == 0 {
            return None;
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let se = (n >= 2).then(|| {
            let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
            (ss / (n - 1) as f64).sqrt() / (n as f64).sqrt()
        });
        Some(MeanSe { mean, se, n })
    }
}

/// Averages over the scientists of one field and gender.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GroupStats {
    pub count: usize,
    pub collaborators: Option<f64>,
    pub papers: Option<f64>,
    pub m_ratio: Option<MeanSe>,
    pub g_ratio: Option<MeanSe>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldRow {
    pub field: MajorField,
    /// Scientists whose primary field this is, any gender.
    pub scientists: usize,
    /// `scientists` over all nodes of the network.
    pub tcn_fraction: f64,
    /// Women over scientists of known gender.
    pub female_proportion: Option<f64>,
    pub female: GroupStats,
    pub male: GroupStats,
}

impl FieldRow {
    pub fn is_empty(&self) -> bool {
        self.scientists == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldStats {
    /// One row per field, in [`MajorField::ALL`] order.
    pub rows: Vec<FieldRow>,
    pub total: usize,
    pub unknown_field: usize,
    pub unknown_gender: usize,
}

fn group_stats(tcn: &CollaborationNetwork, members: &[usize], g: &[Option<f64>], m: &[Option<f64>]) -> GroupStats {
    if members.is_empty() {
        return GroupStats::default();
    }
    let n = members.len() as f64;
    let collect = |vals: &[Option<f64>]| members.iter().filter_map(|&i| vals[i]).collect::<Vec<_>>();
    GroupStats {
        count: members.len(),
        collaborators: Some(members.iter().map(|&i| tcn.degree_of(i) as f64).sum::<f64>() / n),
        papers: Some(members.iter().map(|&i| tcn.node(i).papers as f64).sum::<f64>() / n),
        m_ratio: MeanSe::of(&collect(m)),
        g_ratio: MeanSe::of(&collect(g)),
    }
}

/// Table of per-field counts and per-(field, gender) means.
pub fn field_stats(tcn: &CollaborationNetwork) -> FieldStats {
    let g = metric_values(tcn, Metric::GRatio);
    let m = metric_values(tcn, Metric::MRatio);
    field_stats_with(tcn, &g, &m)
}

/// [`field_stats`] from precomputed metric vectors.
pub fn field_stats_with(tcn: &CollaborationNetwork, g: &[Option<f64>], m: &[Option<f64>]) -> FieldStats {
    let mut groups: Vec<[Vec<usize>; 3]> = vec![Default::default(); MajorField::ALL.len()];
    let mut unknown_field = 0;
    let mut unknown_gender = 0;
    for (i, node) in tcn.nodes().iter().enumerate() {
        if node.gender == Gender::Unknown {
            unknown_gender += 1;
        }
        match node.field {
            Some(f) => groups[f.index()][node.gender as usize].push(i),
            None => unknown_field += 1,
        }
    }
    let total = tcn.len();
    let rows = MajorField::ALL
        .iter()
        .map(|&field| {
            let [female, male, unknown] = &groups[field.index()];
            let scientists = female.len() + male.len() + unknown.len();
            let known = female.len() + male.len();
            FieldRow {
                field,
                scientists,
                tcn_fraction: if total > 0 { scientists as f64 / total as f64 } else { 0.0 },
                female_proportion: (known > 0).then(|| female.len() as f64 / known as f64),
                female: group_stats(tcn, female, g, m),
                male: group_stats(tcn, male, g, m),
            }
        })
        .collect();
    FieldStats {
        rows,
        total,
        unknown_field,
        unknown_gender,
    }
}

/// Geometric bins `[start * ratio^i, start * ratio^(i+1))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeometricBins {
    start: f64,
    ratio: f64,
}

impl Default for GeometricBins {
    fn default() -> Self {
        GeometricBins { start: 1.0, ratio: 2.0 }
    }
}

impl GeometricBins {
    pub fn new(start: f64, ratio: f64) -> Result<Self, String> {
        if !(start > 0.0) || !start.is_finite() {
            return Err(format!("bin start must be positive, got {start}"));
        }
        if !(ratio > 1.0) || !ratio.is_finite() {
            return Err(format!("bin ratio must exceed 1, got {ratio}"));
        }
        Ok(GeometricBins { start, ratio })
    }

    pub fn edge(&self, i: usize) -> f64 {
        self.start * self.ratio.powi(i as i32)
    }

    /// Index of the bin holding `k`, or `None` below the first edge.
    pub fn bin_of(&self, k: f64) -> Option<usize> {
        if !(k >= self.start) {
            return None;
        }
        let mut i = ((k / self.start).ln() / self.ratio.ln()).floor().max(0.0) as usize;
        while i > 0 && self.edge(i) > k {
            i -= 1;
        }
        while self.edge(i + 1) <= k {
            i += 1;
        }
        Some(i)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurveBin {
    pub lo: f64,
    pub hi: f64,
    pub mean: f64,
    pub se: Option<f64>,
    pub n: usize,
}

/// Mean metric per degree bin; empty bins are left out.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BinnedCurve {
    pub bins: Vec<CurveBin>,
}

/// Groups `(degree, value)` points into geometric bins.
pub fn bin_by_degree(points: impl IntoIterator<Item = (usize, f64)>, bins: &GeometricBins) -> BinnedCurve {
    let mut groups: Vec<Vec<f64>> = Vec::new();
    for (k, v) in points {
        if let Some(b) = bins.bin_of(k as f64) {
            if groups.len() <= b {
                groups.resize(b + 1, Vec::new());
            }
            groups[b].push(v);
        }
    }
    let bins = groups
        .iter()
        .enumerate()
        .filter_map(|(b, vals)| {
            MeanSe::of(vals).map(|s| CurveBin {
                lo: bins.edge(b),
                hi: bins.edge(b + 1),
                mean: s.mean,
                se: s.se,
                n: s.n,
            })
        })
        .collect();
    BinnedCurve { bins }
}

/// Metric against degree for scientists matching `field` and `gender`
/// (`None` matches all). Scientists with an undefined metric are skipped.
pub fn binned_curve(
    tcn: &CollaborationNetwork,
    metric: Metric,
    field: Option<MajorField>,
    gender: Option<Gender>,
    bins: &GeometricBins,
) -> BinnedCurve {
    binned_curve_with(tcn, &metric_values(tcn, metric), field, gender, bins)
}

/// [`binned_curve`] from a precomputed metric vector.
pub fn binned_curve_with(
    tcn: &CollaborationNetwork,
    values: &[Option<f64>],
    field: Option<MajorField>,
    gender: Option<Gender>,
    bins: &GeometricBins,
) -> BinnedCurve {
    let points = tcn.nodes().iter().enumerate().filter_map(|(i, node)| {
        let keep = field.is_none_or(|f| node.field == Some(f)) && gender.is_none_or(|g| node.gender == g);
        if keep {
            values[i].map(|v| (tcn.degree_of(i), v))
        } else {
            None
        }
    });
    bin_by_degree(points, bins)
}

/// Degrees of nodes with at least one collaborator, optionally one gender.
pub fn degree_distribution(tcn: &CollaborationNetwork, gender: Option<Gender>) -> Histogram {
    Histogram::from_values(
        (0..tcn.len())
            .filter(|&i| gender.is_none_or(|g| tcn.node(i).gender == g))
            .map(|i| tcn.degree_of(i) as u64)
            .filter(|&k| k > 0),
    )
}

/// Edge weights. With a gender, an edge counts when either endpoint has it,
/// so a mixed edge appears in both the female and the male histogram.
pub fn weight_distribution(tcn: &CollaborationNetwork, gender: Option<Gender>) -> Histogram {
    Histogram::from_values(
        tcn.edges()
            .filter(|&(i, j, _)| gender.is_none_or(|g| tcn.node(i).gender == g || tcn.node(j).gender == g))
            .map(|(_, _, w)| w),
    )
}

/// `value,probability`. Probabilities are written in shortest round-trip
/// form rather than six digits so the column still sums to 1.
pub fn write_histogram<W: Write>(out: W, hist: &Histogram) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["value", "probability"])?;
    for (v, p) in hist.probabilities() {
        w.write_record([v.to_string(), p.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_curve<W: Write>(out: W, curve: &BinnedCurve) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["bin_lo", "bin_hi", "mean", "se", "n"])?;
    for b in &curve.bins {
        w.write_record([sig6(b.lo), sig6(b.hi), sig6(b.mean), opt_sig6(b.se), b.n.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

fn opt_mean(m: Option<MeanSe>) -> [String; 2] {
    [opt_sig6(m.map(|s| s.mean)), opt_sig6(m.and_then(|s| s.se))]
}

/// Full per-field table, one row per field.
pub fn write_field_stats<W: Write>(out: W, stats: &FieldStats) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "field",
        "scientists",
        "tcn_fraction",
        "female_proportion",
        "n_female",
        "n_male",
        "collaborators_female",
        "collaborators_male",
        "papers_female",
        "papers_male",
        "m_ratio_female",
        "m_ratio_se_female",
        "m_ratio_male",
        "m_ratio_se_male",
        "g_ratio_female",
        "g_ratio_se_female",
        "g_ratio_male",
        "g_ratio_se_male",
        "empty",
    ])?;
    for r in &stats.rows {
        let mut rec = vec![
            r.field.code().to_string(),
            r.scientists.to_string(),
            sig6(r.tcn_fraction),
            opt_sig6(r.female_proportion),
            r.female.count.to_string(),
            r.male.count.to_string(),
            opt_sig6(r.female.collaborators),
            opt_sig6(r.male.collaborators),
            opt_sig6(r.female.papers),
            opt_sig6(r.male.papers),
        ];
        for m in [r.female.m_ratio, r.male.m_ratio, r.female.g_ratio, r.male.g_ratio] {
            rec.extend(opt_mean(m));
        }
        rec.push(r.is_empty().to_string());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Mean collaborators and papers by field and gender.
pub fn write_collaboration_table<W: Write>(out: W, stats: &FieldStats) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "field",
        "collaborators_female",
        "collaborators_male",
        "papers_female",
        "papers_male",
    ])?;
    for r in &stats.rows {
        w.write_record([
            r.field.code().to_string(),
            opt_sig6(r.female.collaborators),
            opt_sig6(r.male.collaborators),
            opt_sig6(r.female.papers),
            opt_sig6(r.male.papers),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn write_ratio_table<W: Write>(
    out: W,
    stats: &FieldStats,
    name: &str,
    pick: impl Fn(&GroupStats) -> Option<MeanSe>,
) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "field".to_string(),
        format!("{name}_female"),
        format!("{name}_se_female"),
        "n_female".to_string(),
        format!("{name}_male"),
        format!("{name}_se_male"),
        "n_male".to_string(),
    ])?;
    for r in &stats.rows {
        let mut rec = vec![r.field.code().to_string()];
        for g in [&r.female, &r.male] {
            let s = pick(g);
            rec.extend(opt_mean(s));
            rec.push(s.map_or(0, |s| s.n).to_string());
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Mean m-ratio with standard error by field and gender.
pub fn write_m_ratio_table<W: Write>(out: W, stats: &FieldStats) -> csv::Result<()> {
    write_ratio_table(out, stats, "m_ratio", |g| g.m_ratio)
}

/// Mean g-ratio with standard error by field and gender (bar chart data).
pub fn write_g_ratio_bars<W: Write>(out: W, stats: &FieldStats) -> csv::Result<()> {
    write_ratio_table(out, stats, "g_ratio", |g| g.g_ratio)
}

/// Scientist counts, network share and proportion of women by field.
pub fn write_population_table<W: Write>(out: W, stats: &FieldStats) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["field", "scientists", "tcn_fraction", "female_proportion"])?;
    for r in &stats.rows {
        w.write_record([
            r.field.code().to_string(),
            r.scientists.to_string(),
            sig6(r.tcn_fraction),
            opt_sig6(r.female_proportion),
        ])?;
    }
    w.flush()?;
    Ok(())
}
