//! Browser demo bindings. Every export takes plain numbers or strings and
//! returns a JSON string; failures come back as `{"error": "..."}`.

use collabnet::dedup::{cluster_duplicates, is_duplicate, osa_distance, DEFAULT_THRESHOLD};
use collabnet::fit::{fit_truncated_power_law, log_bin, sample_truncated_power_law, FitOptions, Histogram};
use collabnet::graph::{build_bipartite, giant_component, project_tcn};
use collabnet::ingest::{normalize_title, Gender, PublicationRecord};
use collabnet::metrics::{binned_curve_with, metric_values, GeometricBins, MeanSe, Metric};
use collabnet::synth::{expected_g_ratio, generate_corpus, SynthConfig};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

/// Largest synthetic population the homophily demo will build.
pub const MAX_SCIENTISTS: usize = 20_000;
/// Largest sample the fit demo will draw.
pub const MAX_SAMPLE: usize = 1_000_000;

fn error(message: impl ToString) -> Value {
    json!({ "error": message.to_string() })
}

/// Two titles as the duplicate detector sees them, assuming equal year and
/// author count.
pub fn title_comparison(a: &str, b: &str, threshold: f64) -> Value {
    if !(threshold > 0.0 && threshold < 1.0) {
        return error(format!("threshold must lie in (0, 1), got {threshold}"));
    }
    let (na, nb) = (normalize_title(a), normalize_title(b));
    let distance = osa_distance(&na, &nb);
    let length = na.chars().count().max(nb.chars().count());
    let record = |title: &str| PublicationRecord {
        title: title.to_string(),
        year: 2000,
        author_count: 1,
        doi: None,
    };
    json!({
        "normalized_a": na,
        "normalized_b": nb,
        "distance": distance,
        "length": length,
        "ratio": if length == 0 { Value::Null } else { json!(distance as f64 / length as f64) },
        "duplicate": is_duplicate(&record(a), &record(b), threshold),
    })
}

/// Samples a truncated power law, log-bins the draws and fits them back.
pub fn sample_and_fit(alpha: f64, beta: f64, n: usize, seed: u64, bin_ratio: f64) -> Value {
    if n > MAX_SAMPLE {
        return error(format!("at most {MAX_SAMPLE} draws"));
    }
    let draws = match sample_truncated_power_law(alpha, beta, 1, n, seed) {
        Ok(d) => d,
        Err(e) => return error(e),
    };
    let hist = Histogram::from_values(draws);
    let bins = match log_bin(&hist, bin_ratio) {
        Ok(b) => b,
        Err(e) => return error(e),
    };
    let points: Vec<Value> = bins
        .iter()
        .map(|b| json!({ "lo": b.lo, "hi": b.hi, "x": b.x, "density": b.density, "count": b.count }))
        .collect();
    let opts = FitOptions {
        bin_ratio,
        ..FitOptions::default()
    };
    let fit = match fit_truncated_power_law(&hist, 1, &opts) {
        Ok(f) => f,
        Err(e) => return json!({ "points": points, "error": e.to_string() }),
    };
    let max = hist.max_value().unwrap_or(1) as f64;
    let curve: Vec<[f64; 2]> = (0..=60)
        .map(|i| {
            let x = max.powf(i as f64 / 60.0);
            [x, fit.density_at(x)]
        })
        .collect();
    json!({ "points": points, "fit": fit.to_json(), "curve": curve, "max": max })
}

fn summary(values: &[Option<f64>], genders: &[Gender], gender: Gender) -> Value {
    let picked: Vec<f64> = values
        .iter()
        .zip(genders)
        .filter(|(_, &g)| g == gender)
        .filter_map(|(v, _)| *v)
        .collect();
    match MeanSe::of(&picked) {
        Some(m) => json!({ "mean": m.mean, "se": m.se, "n": m.n }),
        None => json!({ "mean": null, "se": null, "n": 0 }),
    }
}

/// Plants gender homophily `h` in a synthetic corpus, runs dedup and
/// projection, and reports the measured g-ratios against expectation.
pub fn homophily_run(homophily: f64, n_scientists: usize, seed: u64) -> Value {
    if n_scientists > MAX_SCIENTISTS {
        return error(format!("at most {MAX_SCIENTISTS} scientists"));
    }
    let config = SynthConfig {
        n_scientists,
        homophily,
        female_proportions: [0.5; 8],
        unknown_gender_rate: 0.0,
        degree_female: (1.53, 85.4),
        seed,
        ..SynthConfig::default()
    };
    let corpus = match generate_corpus(&config) {
        Ok(c) => c,
        Err(e) => return error(e),
    };
    let clusters = cluster_duplicates(&corpus.records, DEFAULT_THRESHOLD);
    let tcn = match build_bipartite(&corpus.records, &clusters) {
        Ok(bn) => project_tcn(&bn),
        Err(e) => return error(e),
    };
    let g = metric_values(&tcn, Metric::GRatio);
    let genders: Vec<Gender> = tcn.nodes().iter().map(|n| n.gender).collect();
    let bins = GeometricBins::new(1.0, 2.0).expect("valid bins");
    let curve = |gender: Gender| -> Vec<Value> {
        binned_curve_with(&tcn, &g, None, Some(gender), &bins)
            .bins
            .iter()
            .map(|b| json!({ "lo": b.lo, "hi": b.hi, "mean": b.mean, "se": b.se, "n": b.n }))
            .collect()
    };
    let expected = expected_g_ratio(homophily);
    json!({
        "scientists": tcn.len(),
        "papers": clusters.len(),
        "edges": tcn.edge_count(),
        "giant_fraction": giant_component(&tcn).fraction,
        "women": summary(&g, &genders, Gender::Female),
        "men": summary(&g, &genders, Gender::Male),
        "expected": { "women": expected.women, "men": expected.men },
        "curves": { "women": curve(Gender::Female), "men": curve(Gender::Male) },
    })
}

#[wasm_bindgen]
pub fn compare_titles(a: &str, b: &str, threshold: f64) -> String {
    title_comparison(a, b, threshold).to_string()
}

#[wasm_bindgen]
pub fn fit_demo(alpha: f64, beta: f64, n: u32, seed: u32, bin_ratio: f64) -> String {
    sample_and_fit(alpha, beta, n as usize, seed as u64, bin_ratio).to_string()
}

#[wasm_bindgen]
pub fn homophily_demo(homophily: f64, n_scientists: u32, seed: u32) -> String {
    homophily_run(homophily, n_scientists as usize, seed as u64).to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn titles_with_one_typo_match() {
        let v = title_comparison("Soil carbon under tropical forests", "Soil carbn under tropical forests", 0.1);
        assert_eq!(v["distance"], 1);
        assert_eq!(v["duplicate"], true);
        let v = title_comparison("Soil carbon", "Soil water", 0.1);
        assert_eq!(v["duplicate"], false);
    }

    #[test]
    fn normalization_is_visible() {
        let v = title_comparison("  Soil  CARBON ", "soil carbon", 0.1);
        assert_eq!(v["normalized_a"], v["normalized_b"]);
        assert_eq!(v["distance"], 0);
    }

    #[test]
    fn bad_threshold_is_an_error() {
        assert!(title_comparison("a", "b", 0.0)["error"].is_string());
    }

    #[test]
    fn fit_demo_recovers_exponent() {
        let v = sample_and_fit(1.53, 85.4, 100_000, 3, 2.0);
        let alpha = v["fit"]["params"]["alpha"].as_f64().unwrap();
        assert!((alpha - 1.53).abs() < 0.1, "{alpha}");
        assert!(v["points"].as_array().unwrap().len() >= 4);
        assert_eq!(v["curve"].as_array().unwrap().len(), 61);
    }

    #[test]
    fn fit_demo_rejects_bad_input() {
        assert!(sample_and_fit(-1.0, 10.0, 100, 1, 2.0)["error"].is_string());
        assert!(sample_and_fit(1.5, 10.0, 100, 1, 1.0)["error"].is_string());
        assert!(sample_and_fit(1.5, 10.0, MAX_SAMPLE + 1, 1, 2.0)["error"].is_string());
    }

    #[test]
    fn homophily_demo_tracks_expectation() {
        let v = homophily_run(0.8, 3000, 2);
        let women = v["women"]["mean"].as_f64().unwrap();
        let men = v["men"]["mean"].as_f64().unwrap();
        assert!(women > 0.8 && men < 0.2, "{women} {men}");
        assert_eq!(v["expected"]["women"], 0.9);
        assert!(homophily_run(1.5, 100, 1)["error"].is_string());
    }
}
