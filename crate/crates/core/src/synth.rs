//! Synthetic corpora with known answers.
//!
//! Generation runs in four steps:
//!
//! 1. Scientists get a primary field and a gender by exact quotas (largest
//!    remainder), optionally a second field, and a target number of
//!    collaborators drawn from a truncated power law per gender.
//! 2. Collaborator stubs are paired configuration-model style. The initiating
//!    stub picks a target field (its own with probability `1 - m`, otherwise
//!    another one by population share) and a target gender (its own with
//!    probability `h`, otherwise by the target field's gender mix), then takes
//!    a random free stub of that class. Empty classes fall back to any gender
//!    in the field, then to any free stub. Self pairs and repeated pairs are
//!    dropped.
//! 3. Each pair gets a power-law number of two-author papers; every scientist
//!    also gets a few solo papers. External coauthors (outside the corpus)
//!    inflate `n_authors` but add no edges.
//! 4. Every author gets a copy of each paper. The first author's copy is
//!    clean, the other copy goes through [`inject_typos`].
//!
//! For a population with the same female share `f = 1/2` in every field and
//! the same degree model for both genders, the expected g-ratio of a woman
//! is `h + (1 - h) / 2`, of a man `(1 - h) / 2`, and the population mean is
//! `1/2` for every `h`. See [`expected_g_ratio`].

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::Write;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::fit::TruncatedPowerLaw;
use crate::ingest::{Gender, MajorField, PublicationRecord, ScientistRecord};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("infeasible configuration: {0}")]
    Infeasible(String),
}

/// Scientists per field in the reference population, in [`MajorField::ALL`] order.
pub const REFERENCE_FIELD_COUNTS: [u32; 8] = [31812, 39767, 67561, 33310, 26263, 20806, 18365, 5202];
/// Proportion of women per field, in [`MajorField::ALL`] order.
pub const REFERENCE_FEMALE_PROPORTIONS: [f64; 8] = [0.444, 0.601, 0.598, 0.347, 0.651, 0.473, 0.272, 0.716];
/// Size of the reference population, including scientists without a field.
pub const REFERENCE_POPULATION: u32 = 275_061;
/// Scientists in the reference population without a gender.
pub const REFERENCE_UNKNOWN_GENDER: u32 = 96;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub n_scientists: usize,
    /// Share of each field among scientists with a field; sums to 1.
    pub field_proportions: [f64; 8],
    pub female_proportions: [f64; 8],
    pub unknown_field_rate: f64,
    pub unknown_gender_rate: f64,
    /// Probability that a scientist lists a second field.
    pub secondary_field_rate: f64,
    /// Probability that a collaboration is steered to the initiator's gender.
    pub homophily: f64,
    /// Probability that a collaboration is steered away from the initiator's field.
    pub interdisciplinarity: f64,
    /// `(alpha, beta)` of the collaborator-count model for women.
    pub degree_female: (f64, f64),
    /// `(alpha, beta)` for men and scientists without a gender.
    pub degree_male: (f64, f64),
    /// Exponent of the papers-per-pair power law.
    pub weight_exponent: f64,
    pub max_weight: u64,
    pub solo_papers_mean: f64,
    pub external_authors_mean: f64,
    pub typo_rate: f64,
    /// Lets typos hit the first character, which breaks blocking.
    pub first_char_typos: bool,
    pub doi_rate: f64,
    pub years: (i32, i32),
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        let with_field: u32 = REFERENCE_FIELD_COUNTS.iter().sum();
        let field_proportions = REFERENCE_FIELD_COUNTS.map(|c| c as f64 / with_field as f64);
        SynthConfig {
            n_scientists: 10_000,
            field_proportions,
            female_proportions: REFERENCE_FEMALE_PROPORTIONS,
            unknown_field_rate: (REFERENCE_POPULATION - with_field) as f64 / REFERENCE_POPULATION as f64,
            unknown_gender_rate: REFERENCE_UNKNOWN_GENDER as f64 / REFERENCE_POPULATION as f64,
            secondary_field_rate: 0.3,
            homophily: 0.3,
            interdisciplinarity: 0.3,
            degree_female: (1.53, 49.5),
            degree_male: (1.53, 85.4),
            weight_exponent: 3.17,
            max_weight: 1000,
            solo_papers_mean: 2.0,
            external_authors_mean: 1.0,
            typo_rate: 0.04,
            first_char_typos: false,
            doi_rate: 0.0,
            years: (1960, 2012),
            seed: 1,
        }
    }
}

fn check_unit(name: &str, x: f64) -> Result<(), SynthError> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(SynthError::InvalidConfig(format!("{name} must lie in [0, 1], got {x}")))
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        for (f, (&p, &q)) in MajorField::ALL.iter().zip(self.field_proportions.iter().zip(&self.female_proportions)) {
            check_unit(&format!("field proportion of {f}"), p)?;
            check_unit(&format!("female proportion of {f}"), q)?;
        }
        let sum: f64 = self.field_proportions.iter().sum();
        if (sum - 1.0).abs() > 1e-6 {
            return Err(SynthError::InvalidConfig(format!("field proportions sum to {sum}, not 1")));
        }
        for (name, x) in [
            ("unknown_field_rate", self.unknown_field_rate),
            ("unknown_gender_rate", self.unknown_gender_rate),
            ("secondary_field_rate", self.secondary_field_rate),
            ("homophily", self.homophily),
            ("interdisciplinarity", self.interdisciplinarity),
            ("typo_rate", self.typo_rate),
            ("doi_rate", self.doi_rate),
        ] {
            check_unit(name, x)?;
        }
        for (name, (a, b)) in [("degree_female", self.degree_female), ("degree_male", self.degree_male)] {
            TruncatedPowerLaw::new(a, b, 1).map_err(|e| SynthError::InvalidConfig(format!("{name}: {e}")))?;
        }
        if !(self.weight_exponent > 1.0) {
            return Err(SynthError::InvalidConfig(format!(
                "weight_exponent must exceed 1, got {}",
                self.weight_exponent
            )));
        }
        if self.max_weight < 1 {
            return Err(SynthError::InvalidConfig("max_weight must be at least 1".into()));
        }
        for (name, x) in [("solo_papers_mean", self.solo_papers_mean), ("external_authors_mean", self.external_authors_mean)] {
            if !(x >= 0.0) || !x.is_finite() {
                return Err(SynthError::InvalidConfig(format!("{name} must be non-negative, got {x}")));
            }
        }
        if self.years.0 > self.years.1 {
            return Err(SynthError::InvalidConfig(format!("empty year range {:?}", self.years)));
        }
        if self.n_scientists < 2 {
            return Err(SynthError::Infeasible(format!(
                "{} scientists cannot hold a single collaboration",
                self.n_scientists
            )));
        }
        Ok(())
    }
}

/// Expected g-ratios of women, men and the whole population when every field
/// is half female and both genders share a degree model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GRatioExpectation {
    pub women: f64,
    pub men: f64,
    pub population: f64,
}

pub fn expected_g_ratio(homophily: f64) -> GRatioExpectation {
    let women = homophily + (1.0 - homophily) / 2.0;
    GRatioExpectation {
        women,
        men: 1.0 - women,
        population: 0.5,
    }
}

/// A generated corpus and what it was generated from.
#[derive(Debug, Clone)]
pub struct SynthCorpus {
    pub records: Vec<ScientistRecord>,
    /// True paper of `records[i].publications[j]`.
    pub paper_of: Vec<Vec<usize>>,
    pub papers: usize,
    /// Planted pair weights, `i < j` as record indices, sorted.
    pub edges: Vec<(usize, usize, u64)>,
    /// Total single-character edits applied.
    pub typo_edits: usize,
}

impl SynthCorpus {
    pub fn record_count(&self) -> usize {
        self.records.iter().map(|r| r.publications.len()).sum()
    }

    /// True paper ids in scientist-then-publication order.
    pub fn flat_truth(&self) -> Vec<usize> {
        self.paper_of.iter().flatten().copied().collect()
    }
}

/// Edits applied at distinct non-space positions, right to left. Deletions
/// never empty a word. A transposition also needs the next character to be a
/// non-space and the next edit at least three positions away so no substring
/// is edited twice.
/// Returns the corrupted title and the number of edits, an upper bound on
/// the OSA distance to the original.
pub fn inject_typos(title: &str, rate: f64, seed: u64) -> (String, usize) {
    inject_typos_with(title, rate, seed, false)
}

pub fn inject_typos_with(title: &str, rate: f64, seed: u64, first_char: bool) -> (String, usize) {
    let mut chars: Vec<char> = title.chars().collect();
    let wanted = (rate.clamp(0.0, 1.0) * chars.len() as f64 - 1e-9).ceil().max(0.0) as usize;
    if wanted == 0 {
        return (title.to_string(), 0);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let first = usize::from(!first_char);
    let eligible: Vec<usize> = (first..chars.len()).filter(|&p| !chars[p].is_whitespace()).collect();
    let mut positions: Vec<usize> = eligible.choose_multiple(&mut rng, wanted.min(eligible.len())).copied().collect();
    positions.sort_unstable();
    let letter = |rng: &mut ChaCha8Rng, avoid: char| loop {
        let c = char::from(b'a' + rng.random_range(0..26u8));
        if c != avoid {
            return c;
        }
    };
    let mut next_edit = usize::MAX;
    for &p in positions.iter().rev() {
        let can_swap = p + 1 < chars.len()
            && !chars[p + 1].is_whitespace()
            && chars[p + 1] != chars[p]
            && next_edit >= p + 3;
        // Emptying a word would merge two spaces, which normalization collapses.
        let can_delete = word_len(&chars, p) >= 2;
        let kinds: &[u8] = match (can_delete, can_swap) {
            (true, true) => &[0, 1, 2, 3],
            (true, false) => &[0, 1, 2],
            (false, true) => &[0, 1, 3],
            (false, false) => &[0, 1],
        };
        match kinds[rng.random_range(0..kinds.len())] {
            0 => {
                let c = letter(&mut rng, chars[p]);
                chars[p] = c;
            }
            1 => chars.insert(p, letter(&mut rng, '\0')),
            2 => {
                chars.remove(p);
            }
            _ => chars.swap(p, p + 1),
        }
        next_edit = p;
    }
    (chars.into_iter().collect(), positions.len())
}

/// Length of the whitespace-free run containing `p`.
fn word_len(chars: &[char], p: usize) -> usize {
    let start = chars[..p].iter().rposition(|c| c.is_whitespace()).map_or(0, |i| i + 1);
    let end = chars[p..].iter().position(|c| c.is_whitespace()).map_or(chars.len(), |i| p + i);
    end - start
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Integer quotas summing to `n`, proportional to `weights`.
fn quotas(n: usize, weights: &[f64]) -> Vec<usize> {
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        let mut q = vec![0; weights.len()];
        if let Some(first) = q.first_mut() {
            *first = n;
        }
        return q;
    }
    let exact: Vec<f64> = weights.iter().map(|w| n as f64 * w / total).collect();
    let mut q: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| (exact[b] - exact[b].floor()).total_cmp(&(exact[a] - exact[a].floor())).then(a.cmp(&b)));
    let short = n - q.iter().sum::<usize>();
    for &i in order.iter().take(short) {
        q[i] += 1;
    }
    q
}

/// Geometric count on `0, 1, ...` with the given mean.
fn geometric(rng: &mut ChaCha8Rng, mean: f64) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    let q = mean / (1.0 + mean);
    let u = 1.0 - rng.random::<f64>();
    (u.ln() / q.ln()).floor() as u64
}

fn pick_weighted(rng: &mut ChaCha8Rng, weights: &[f64]) -> Option<usize> {
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return None;
    }
    let mut x = rng.random::<f64>() * total;
    for (i, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            if x < w {
                return Some(i);
            }
            x -= w;
        }
    }
    weights.iter().rposition(|&w| w > 0.0)
}

// Field category 8 stands for "no field".
const CATEGORIES: usize = 9;
const NO_FIELD: usize = 8;

fn gender_slot(g: Gender) -> usize {
    match g {
        Gender::Female => 0,
        Gender::Male => 1,
        Gender::Unknown => 2,
    }
}

/// Free stubs, indexed by class `(gender, category)` and globally, with O(1)
/// random pick and removal.
struct StubPools {
    class_of: Vec<usize>,
    pools: Vec<Vec<u32>>,
    pool_pos: Vec<u32>,
    free: Vec<u32>,
    free_pos: Vec<u32>,
}

impl StubPools {
    fn new(class_of: Vec<usize>) -> Self {
        let mut pools = vec![Vec::new(); 3 * CATEGORIES];
        let mut pool_pos = vec![0; class_of.len()];
        for (s, &c) in class_of.iter().enumerate() {
            pool_pos[s] = pools[c].len() as u32;
            pools[c].push(s as u32);
        }
        let n = class_of.len() as u32;
        StubPools {
            class_of,
            pools,
            pool_pos,
            free: (0..n).collect(),
            free_pos: (0..n).collect(),
        }
    }

    fn is_free(&self, s: u32) -> bool {
        let p = self.free_pos[s as usize] as usize;
        p < self.free.len() && self.free[p] == s
    }

    fn remove(&mut self, s: u32) {
        let pool = &mut self.pools[self.class_of[s as usize]];
        let p = self.pool_pos[s as usize] as usize;
        let last = *pool.last().unwrap();
        pool.swap_remove(p);
        if last != s {
            self.pool_pos[last as usize] = p as u32;
        }
        let p = self.free_pos[s as usize] as usize;
        let last = *self.free.last().unwrap();
        self.free.swap_remove(p);
        if last != s {
            self.free_pos[last as usize] = p as u32;
        }
    }

    fn take_from(&mut self, rng: &mut ChaCha8Rng, class: usize) -> Option<u32> {
        let pool = &self.pools[class];
        if pool.is_empty() {
            return None;
        }
        let s = pool[rng.random_range(0..pool.len())];
        self.remove(s);
        Some(s)
    }

    fn take_in_category(&mut self, rng: &mut ChaCha8Rng, category: usize) -> Option<u32> {
        let sizes: Vec<f64> = (0..3).map(|g| self.pools[g * CATEGORIES + category].len() as f64).collect();
        let g = pick_weighted(rng, &sizes)?;
        self.take_from(rng, g * CATEGORIES + category)
    }

    fn take_in_gender(&mut self, rng: &mut ChaCha8Rng, gender: usize) -> Option<u32> {
        let sizes: Vec<f64> = (0..CATEGORIES).map(|c| self.pools[gender * CATEGORIES + c].len() as f64).collect();
        let c = pick_weighted(rng, &sizes)?;
        self.take_from(rng, gender * CATEGORIES + c)
    }

    fn take_any(&mut self, rng: &mut ChaCha8Rng) -> Option<u32> {
        if self.free.is_empty() {
            return None;
        }
        let s = self.free[rng.random_range(0..self.free.len())];
        self.remove(s);
        Some(s)
    }
}

const VOCABULARY: &[&str] = &[
    "analysis", "adaptive", "agricultural", "algebraic", "amazonian", "applied", "approach", "aquatic",
    "assessment", "asymptotic", "bacterial", "basin", "behavior", "bayesian", "biomass", "boundary",
    "brazilian", "cancer", "carbon", "cellular", "characterization", "chemical", "chronic", "climate",
    "clinical", "coastal", "cognitive", "collective", "community", "comparative", "complex", "composite",
    "computational", "concrete", "control", "coupled", "crop", "cultural", "data", "decay", "deep",
    "degradation", "density", "design", "detection", "development", "diagnosis", "diet", "diffusion",
    "digital", "discourse", "disease", "diversity", "drought", "dynamics", "early", "ecological",
    "economic", "education", "effects", "efficient", "elastic", "electronic", "emission", "energy",
    "environmental", "enzyme", "epidemiological", "estimation", "ethnic", "evaluation", "evolution",
    "experimental", "exposure", "family", "fast", "fertility", "field", "finite", "flow", "fluid",
    "forest", "formal", "fractional", "framework", "functional", "gene", "genetic", "genomic",
    "geometry", "global", "grain", "graph", "growth", "habitat", "health", "heat", "hepatic", "historical",
    "hospital", "human", "hybrid", "hydrological", "identity", "image", "immune", "impact", "index",
    "infection", "inference", "information", "inverse", "kinetic", "labor", "land", "language",
    "larval", "learning", "linear", "literary", "local", "magnetic", "maize", "mapping", "marine",
    "market", "material", "maternal", "matrix", "measurement", "mechanical", "memory", "metabolic",
    "method", "microbial", "migration", "mineral", "mobile", "model", "molecular", "monitoring",
    "morphology", "mortality", "multiple", "muscle", "narrative", "native", "neural", "nitrogen",
    "noise", "nonlinear", "novel", "numerical", "nutrition", "observations", "optical", "optimal",
    "oral", "organic", "oxidative", "parallel", "parasite", "patient", "pattern", "performance",
    "phase", "plant", "plasma", "policy", "political", "pollution", "population", "poverty", "power",
    "prediction", "pressure", "prevalence", "protein", "public", "quality", "quantum", "radiation",
    "random", "rapid", "reaction", "regional", "regulation", "renal", "resistance", "response",
    "rice", "risk", "river", "robust", "rural", "salinity", "sampling", "school", "sediment",
    "seed", "sensor", "signal", "social", "soil", "soybean", "spatial", "spectral", "stability",
    "statistical", "stochastic", "stress", "structural", "study", "surface", "survey", "synthesis",
    "system", "teaching", "temperature", "theory", "thermal", "tissue", "transport", "treatment",
    "tropical", "urban", "variability", "vascular", "vector", "water", "wave", "welfare", "yield",
    "youth", "zinc",
];

const LINKS: &[&str] = &["of", "in", "and", "for", "on", "under", "with", "from"];

fn make_title(rng: &mut ChaCha8Rng) -> String {
    let words = rng.random_range(5..=9);
    let mut out = String::new();
    for w in 0..words {
        if w > 0 {
            out.push(' ');
        }
        let word = if w > 0 && w + 1 < words && rng.random_bool(0.25) {
            LINKS[rng.random_range(0..LINKS.len())]
        } else {
            VOCABULARY[rng.random_range(0..VOCABULARY.len())]
        };
        if w == 0 {
            let mut cs = word.chars();
            let head = cs.next().unwrap().to_ascii_uppercase();
            out.push(head);
            out.push_str(cs.as_str());
        } else {
            out.push_str(word);
        }
    }
    out
}

struct Paper {
    title: String,
    year: i32,
    author_count: u32,
    doi: Option<String>,
    /// In-corpus authors, first author first.
    authors: Vec<usize>,
}

pub fn generate_corpus(config: &SynthConfig) -> Result<SynthCorpus, SynthError> {
    config.validate()?;
    let n = config.n_scientists;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    // Populations by exact quota, then shuffled onto ids.
    let mut category_weights: Vec<f64> =
        config.field_proportions.iter().map(|p| p * (1.0 - config.unknown_field_rate)).collect();
    category_weights.push(config.unknown_field_rate);
    let overall_female: f64 =
        config.field_proportions.iter().zip(&config.female_proportions).map(|(p, f)| p * f).sum();
    let mut people: Vec<(usize, Gender)> = Vec::with_capacity(n);
    for (cat, &count) in quotas(n, &category_weights).iter().enumerate() {
        let fp = if cat == NO_FIELD { overall_female } else { config.female_proportions[cat] };
        let women = (fp * count as f64).round() as usize;
        people.extend((0..count).map(|i| (cat, if i < women { Gender::Female } else { Gender::Male })));
    }
    people.shuffle(&mut rng);
    let unknown_gender = (config.unknown_gender_rate * n as f64).round() as usize;
    for i in rand::seq::index::sample(&mut rng, n, unknown_gender.min(n)).into_vec() {
        people[i].1 = Gender::Unknown;
    }

    let mut records: Vec<ScientistRecord> = people
        .iter()
        .enumerate()
        .map(|(i, &(cat, gender))| {
            let mut fields = Vec::new();
            if cat != NO_FIELD {
                fields.push(MajorField::ALL[cat]);
                if rng.random_bool(config.secondary_field_rate) {
                    let other = (cat + rng.random_range(1..8)) % 8;
                    fields.push(MajorField::ALL[other]);
                }
            }
            ScientistRecord {
                scientist_id: format!("s{i:06}"),
                gender,
                fields,
                publications: Vec::new(),
            }
        })
        .collect();

    // Collaborator targets.
    let female_model = TruncatedPowerLaw::new(config.degree_female.0, config.degree_female.1, 1)
        .map_err(|e| SynthError::InvalidConfig(e.to_string()))?;
    let male_model = TruncatedPowerLaw::new(config.degree_male.0, config.degree_male.1, 1)
        .map_err(|e| SynthError::InvalidConfig(e.to_string()))?;
    let mut owner: Vec<u32> = Vec::new();
    let mut class_of: Vec<usize> = Vec::new();
    for (i, &(cat, gender)) in people.iter().enumerate() {
        let model = if gender == Gender::Female { &female_model } else { &male_model };
        let k = loop {
            let k = model.sample(&mut rng);
            if k < n as u64 {
                break k;
            }
        };
        for _ in 0..k {
            owner.push(i as u32);
            class_of.push(gender_slot(gender) * CATEGORIES + cat);
        }
    }

    // Stub pairing.
    let mut pools = StubPools::new(class_of);
    let mut order: Vec<u32> = (0..owner.len() as u32).collect();
    order.shuffle(&mut rng);
    let mut pairs: HashSet<(u32, u32)> = HashSet::new();
    let mut pair_list: Vec<(usize, usize)> = Vec::new();
    let strict = config.homophily >= 1.0;
    for s in order {
        if !pools.is_free(s) {
            continue;
        }
        pools.remove(s);
        let i = owner[s as usize] as usize;
        let (cat, gender) = people[i];
        let target_cat = if rng.random_bool(1.0 - config.interdisciplinarity) {
            cat
        } else {
            let mut w = category_weights.clone();
            w[cat] = 0.0;
            pick_weighted(&mut rng, &w).unwrap_or(cat)
        };
        let female_share = if target_cat == NO_FIELD { overall_female } else { config.female_proportions[target_cat] };
        let target_gender = if gender.is_known() && rng.random_bool(config.homophily) {
            gender
        } else if rng.random_bool(female_share) {
            Gender::Female
        } else {
            Gender::Male
        };
        let partner = pools.take_from(&mut rng, gender_slot(target_gender) * CATEGORIES + target_cat);
        let t = if strict && gender.is_known() {
            // Perfect homophily never falls back across genders; the stub stays unpaired.
            match partner.or_else(|| pools.take_in_gender(&mut rng, gender_slot(gender))) {
                Some(t) => t,
                None => continue,
            }
        } else {
            match partner
                .or_else(|| pools.take_in_category(&mut rng, target_cat))
                .or_else(|| pools.take_any(&mut rng))
            {
                Some(t) => t,
                None => break,
            }
        };
        let j = owner[t as usize] as usize;
        if i == j {
            continue;
        }
        let key = (i.min(j) as u32, i.max(j) as u32);
        if pairs.insert(key) {
            pair_list.push((i, j));
        }
    }

    // Papers.
    let weight_model = TruncatedPowerLaw::power_law(config.weight_exponent, 1)
        .map_err(|e| SynthError::InvalidConfig(e.to_string()))?;
    let mut titles: HashSet<String> = HashSet::new();
    let mut fresh_title = |rng: &mut ChaCha8Rng| loop {
        let t = make_title(rng);
        if titles.insert(t.to_lowercase()) {
            return t;
        }
    };
    let mut papers: Vec<Paper> = Vec::new();
    let mut new_paper = |rng: &mut ChaCha8Rng, authors: Vec<usize>| {
        let id = papers.len();
        let external = geometric(rng, config.external_authors_mean);
        papers.push(Paper {
            title: fresh_title(rng),
            year: rng.random_range(config.years.0..=config.years.1),
            author_count: (authors.len() as u64 + external).min(u32::MAX as u64) as u32,
            doi: rng.random_bool(config.doi_rate).then(|| format!("10.5555/synth.{id}")),
            authors,
        });
    };
    let mut edges: BTreeMap<(usize, usize), u64> = BTreeMap::new();
    for &(i, j) in &pair_list {
        let w = loop {
            let w = weight_model.sample(&mut rng);
            if w <= config.max_weight {
                break w;
            }
        };
        edges.insert((i.min(j), i.max(j)), w);
        for _ in 0..w {
            let authors = if rng.random_bool(0.5) { vec![i, j] } else { vec![j, i] };
            new_paper(&mut rng, authors);
        }
    }
    for i in 0..n {
        for _ in 0..geometric(&mut rng, config.solo_papers_mean) {
            new_paper(&mut rng, vec![i]);
        }
    }

    // Copies per author.
    let mut held: Vec<Vec<(usize, PublicationRecord)>> = vec![Vec::new(); n];
    let mut typo_edits = 0;
    for (id, p) in papers.iter().enumerate() {
        for (slot, &a) in p.authors.iter().enumerate() {
            let title = if slot == 0 {
                p.title.clone()
            } else {
                let seed = splitmix(config.seed ^ splitmix((id as u64) << 8 | slot as u64));
                let (t, e) = inject_typos_with(&p.title, config.typo_rate, seed, config.first_char_typos);
                typo_edits += e;
                t
            };
            held[a].push((
                id,
                PublicationRecord {
                    title,
                    year: p.year,
                    author_count: p.author_count,
                    doi: p.doi.clone(),
                },
            ));
        }
    }
    let mut paper_of = Vec::with_capacity(n);
    for (record, mut pubs) in records.iter_mut().zip(held) {
        pubs.sort_by(|a, b| (a.1.year, &a.1.title, a.0).cmp(&(b.1.year, &b.1.title, b.0)));
        paper_of.push(pubs.iter().map(|p| p.0).collect());
        record.publications = pubs.into_iter().map(|p| p.1).collect();
    }

    Ok(SynthCorpus {
        records,
        paper_of,
        papers: papers.len(),
        edges: edges.into_iter().map(|((i, j), w)| (i, j, w)).collect(),
        typo_edits,
    })
}

/// Pairwise agreement between a predicted and a true partition of the same
/// items. Precision is the share of predicted same-cluster pairs that are
/// true pairs; recall the share of true pairs that are predicted. Either is
/// 1 when its denominator is empty.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairScores {
    pub precision: f64,
    pub recall: f64,
    pub predicted_pairs: u64,
    pub true_pairs: u64,
    pub agreeing_pairs: u64,
}

pub fn pair_scores(predicted: &[usize], truth: &[usize]) -> PairScores {
    assert_eq!(predicted.len(), truth.len(), "partitions of different sizes");
    let pairs = |c: u64| c * c.saturating_sub(1) / 2;
    let mut by_pred: HashMap<usize, u64> = HashMap::new();
    let mut by_true: HashMap<usize, u64> = HashMap::new();
    let mut joint: HashMap<(usize, usize), u64> = HashMap::new();
    for (&p, &t) in predicted.iter().zip(truth) {
        *by_pred.entry(p).or_default() += 1;
        *by_true.entry(t).or_default() += 1;
        *joint.entry((p, t)).or_default() += 1;
    }
    let predicted_pairs: u64 = by_pred.values().map(|&c| pairs(c)).sum();
    let true_pairs: u64 = by_true.values().map(|&c| pairs(c)).sum();
    let agreeing_pairs: u64 = joint.values().map(|&c| pairs(c)).sum();
    let ratio = |a: u64, b: u64| if b == 0 { 1.0 } else { a as f64 / b as f64 };
    PairScores {
        precision: ratio(agreeing_pairs, predicted_pairs),
        recall: ratio(agreeing_pairs, true_pairs),
        predicted_pairs,
        true_pairs,
        agreeing_pairs,
    }
}

/// CSV `scientist_id,publication,paper_id`.
pub fn write_truth_records<W: Write>(out: W, corpus: &SynthCorpus) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["scientist_id", "publication", "paper_id"])?;
    for (r, papers) in corpus.records.iter().zip(&corpus.paper_of) {
        for (j, p) in papers.iter().enumerate() {
            w.write_record([r.scientist_id.as_str(), &j.to_string(), &p.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// CSV `id_i,id_j,weight` with `id_i < id_j`, sorted.
pub fn write_truth_edges<W: Write>(out: W, corpus: &SynthCorpus) -> csv::Result<()> {
    let mut rows: Vec<(&str, &str, u64)> = corpus
        .edges
        .iter()
        .map(|&(i, j, w)| {
            let (a, b) = (corpus.records[i].scientist_id.as_str(), corpus.records[j].scientist_id.as_str());
            if a < b { (a, b, w) } else { (b, a, w) }
        })
        .collect();
    rows.sort_unstable();
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["id_i", "id_j", "weight"])?;
    for (a, b, x) in rows {
        w.write_record([a, b, &x.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dedup::osa_distance;
    use proptest::prelude::*;

    fn small(seed: u64) -> SynthConfig {
        SynthConfig {
            n_scientists: 300,
            seed,
            ..SynthConfig::default()
        }
    }

    #[test]
    fn zero_rate_leaves_title_alone() {
        assert_eq!(inject_typos("Soil carbon dynamics", 0.0, 5), ("Soil carbon dynamics".to_string(), 0));
    }

    #[test]
    fn sixty_chars_at_five_percent_get_three_edits() {
        let title = "Spatial dynamics of soil carbon under tropical forest covers";
        assert_eq!(title.chars().count(), 60);
        for seed in 0..50 {
            let (out, edits) = inject_typos(title, 0.05, seed);
            assert_eq!(edits, 3);
            assert!(osa_distance(title, &out) <= 3);
            assert_eq!(out.chars().next(), Some('S'));
        }
    }

    #[test]
    fn typos_are_deterministic() {
        let t = "Genetic diversity of maize landraces";
        assert_eq!(inject_typos(t, 0.2, 11), inject_typos(t, 0.2, 11));
    }

    proptest! {
        #[test]
        fn edit_count_bounds_distance(title in "[a-z]{1,8}( [a-z]{1,3}){0,6}", rate in 0.0f64..1.0, seed: u64, first: bool) {
            let (out, edits) = inject_typos_with(&title, rate, seed, first);
            let len = title.chars().count();
            prop_assert!(edits <= (rate * len as f64).ceil() as usize);
            prop_assert!(osa_distance(&title, &out) <= edits);
            if !first {
                prop_assert_eq!(out.chars().next(), title.chars().next());
            }
            prop_assert_eq!(out.matches(' ').count(), title.matches(' ').count());
            // the bound survives normalization
            let (a, b) = (crate::ingest::normalize_title(&title), crate::ingest::normalize_title(&out));
            prop_assert!(osa_distance(&a, &b) <= edits);
        }
    }

    #[test]
    fn quotas_sum_and_round() {
        assert_eq!(quotas(10, &[0.5, 0.25, 0.25]), vec![5, 3, 2]);
        assert_eq!(quotas(7, &[1.0, 1.0]).iter().sum::<usize>(), 7);
        assert_eq!(quotas(3, &[0.0, 0.0]), vec![3, 0]);
    }

    #[test]
    fn config_validation() {
        assert!(SynthConfig::default().validate().is_ok());
        let bad = |f: fn(&mut SynthConfig)| {
            let mut c = SynthConfig::default();
            f(&mut c);
            c.validate()
        };
        assert!(matches!(bad(|c| c.homophily = 1.5), Err(SynthError::InvalidConfig(_))));
        assert!(matches!(bad(|c| c.field_proportions[0] += 0.1), Err(SynthError::InvalidConfig(_))));
        assert!(matches!(bad(|c| c.weight_exponent = 1.0), Err(SynthError::InvalidConfig(_))));
        assert!(matches!(bad(|c| c.degree_male = (1.5, -2.0)), Err(SynthError::InvalidConfig(_))));
        assert!(matches!(bad(|c| c.n_scientists = 1), Err(SynthError::Infeasible(_))));
    }

    #[test]
    fn generation_is_deterministic() {
        let a = generate_corpus(&small(4)).unwrap();
        let b = generate_corpus(&small(4)).unwrap();
        let c = generate_corpus(&small(5)).unwrap();
        assert_eq!(a.records, b.records);
        assert_eq!(a.edges, b.edges);
        assert_ne!(a.records, c.records);
    }

    #[test]
    fn corpus_is_consistent() {
        let c = generate_corpus(&small(9)).unwrap();
        assert_eq!(c.records.len(), 300);
        let truth = c.flat_truth();
        assert_eq!(truth.len(), c.record_count());
        // every paper appears, once per in-corpus author
        let mut seen = vec![0usize; c.papers];
        for &p in &truth {
            seen[p] += 1;
        }
        assert!(seen.iter().all(|&k| k == 1 || k == 2));
        // planted weights equal the number of shared papers
        let mut shared: BTreeMap<(usize, usize), u64> = BTreeMap::new();
        let mut holders: Vec<Vec<usize>> = vec![Vec::new(); c.papers];
        for (i, ps) in c.paper_of.iter().enumerate() {
            for &p in ps {
                holders[p].push(i);
            }
        }
        for h in holders.iter().filter(|h| h.len() == 2) {
            *shared.entry((h[0].min(h[1]), h[0].max(h[1]))).or_default() += 1;
        }
        let planted: BTreeMap<(usize, usize), u64> = c.edges.iter().map(|&(i, j, w)| ((i, j), w)).collect();
        assert_eq!(shared, planted);
        for r in &c.records {
            assert!(r.fields.len() <= 2);
            for p in &r.publications {
                assert!(p.author_count >= 1 && (1960..=2012).contains(&p.year));
            }
        }
    }

    #[test]
    fn quotas_fix_female_share_per_field() {
        let c = generate_corpus(&SynthConfig {
            n_scientists: 2000,
            unknown_gender_rate: 0.0,
            ..SynthConfig::default()
        })
        .unwrap();
        let bio: Vec<_> = c.records.iter().filter(|r| r.primary_field() == Some(MajorField::Bio)).collect();
        let women = bio.iter().filter(|r| r.gender == Gender::Female).count();
        assert!((women as f64 / bio.len() as f64 - 0.601).abs() < 1.0 / bio.len() as f64);
    }

    #[test]
    fn perfect_homophily_never_mixes_genders() {
        let c = generate_corpus(&SynthConfig {
            n_scientists: 1000,
            homophily: 1.0,
            seed: 3,
            ..SynthConfig::default()
        })
        .unwrap();
        assert!(!c.edges.is_empty());
        for &(i, j, _) in &c.edges {
            let (a, b) = (c.records[i].gender, c.records[j].gender);
            assert!(!(a.is_known() && b.is_known()) || a == b, "{i}-{j}");
        }
    }

    #[test]
    fn pair_scores_examples() {
        let s = pair_scores(&[0, 0, 1, 2], &[5, 5, 6, 7]);
        assert_eq!((s.precision, s.recall), (1.0, 1.0));
        let s = pair_scores(&[0, 0, 0, 1], &[5, 5, 6, 6]);
        assert_eq!((s.predicted_pairs, s.true_pairs, s.agreeing_pairs), (3, 2, 1));
        assert_eq!((s.precision, s.recall), (1.0 / 3.0, 0.5));
        let s = pair_scores(&[0, 1], &[0, 1]);
        assert_eq!((s.precision, s.recall), (1.0, 1.0));
    }

    #[test]
    fn expectation_is_symmetric() {
        for h in [0.0, 0.3, 0.5, 1.0] {
            let e = expected_g_ratio(h);
            assert!((e.women + e.men - 1.0).abs() < 1e-15);
            assert_eq!(e.population, 0.5);
        }
        assert_eq!(expected_g_ratio(0.5).women, 0.75);
    }
}
