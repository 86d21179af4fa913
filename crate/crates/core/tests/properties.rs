//! Randomised checks of the structural guarantees of ingest, dedup and graph.

use std::collections::{BTreeMap, BTreeSet};

use collabnet::dedup::{block_key, cluster_duplicates, cluster_publications, is_duplicate, PaperCluster, RecordRef};
use collabnet::graph::{build_bipartite, project_tcn};
use collabnet::ingest::{
    normalize_title, parse_records, primary_field, write_csv, write_jsonl, Gender, IngestOptions, InputFormat,
    MajorField, PublicationRecord, ScientistRecord,
};
use proptest::prelude::*;

fn arb_gender() -> impl Strategy<Value = Gender> {
    prop_oneof![Just(Gender::Female), Just(Gender::Male), Just(Gender::Unknown)]
}

fn arb_fields() -> impl Strategy<Value = Vec<MajorField>> {
    proptest::sample::subsequence(MajorField::ALL.to_vec(), 0..=3).prop_shuffle()
}

fn arb_publication() -> impl Strategy<Value = PublicationRecord> {
    (
        "[A-Za-zá ]{0,6}[a-z]{1,12}( [A-Za-z,.]{1,8}){0,4}",
        1990i32..2000,
        1u32..5,
        proptest::option::of("10\\.[0-9]{4}/[a-z]{3}"),
    )
        .prop_map(|(title, year, author_count, doi)| PublicationRecord {
            title,
            year,
            author_count,
            doi,
        })
}

fn arb_records() -> impl Strategy<Value = Vec<ScientistRecord>> {
    proptest::collection::vec(
        (arb_gender(), arb_fields(), proptest::collection::vec(arb_publication(), 0..4)),
        0..12,
    )
    .prop_map(|rows| {
        rows.into_iter()
            .enumerate()
            .map(|(i, (gender, fields, publications))| ScientistRecord {
                scientist_id: format!("id{i}"),
                gender,
                fields,
                publications,
            })
            .collect()
    })
}

proptest! {
    #[test]
    fn jsonl_yields_one_record_per_line(records in arb_records(), blank_lines in 0usize..3) {
        let mut buf = Vec::new();
        write_jsonl(&mut buf, &records).unwrap();
        for _ in 0..blank_lines {
            buf.extend_from_slice(b"\n");
        }
        let text = String::from_utf8(buf).unwrap();
        let non_empty = text.lines().filter(|l| !l.trim().is_empty()).count();
        let parsed = parse_records(text.as_bytes(), InputFormat::Jsonl, &IngestOptions::default()).unwrap();
        prop_assert_eq!(parsed.len(), non_empty);
        prop_assert_eq!(&parsed, &records);
        // parsing line by line gives the same records
        let one_by_one: Vec<ScientistRecord> = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .flat_map(|l| parse_records(l.as_bytes(), InputFormat::Jsonl, &IngestOptions::default()).unwrap())
            .collect();
        prop_assert_eq!(one_by_one, records);
    }

    #[test]
    fn csv_round_trips(records in arb_records()) {
        let mut buf = Vec::new();
        write_csv(&mut buf, &records).unwrap();
        let parsed = parse_records(&buf[..], InputFormat::Csv, &IngestOptions::default()).unwrap();
        prop_assert_eq!(parsed, records);
    }

    #[test]
    fn normalization_is_idempotent(s in "\\PC{0,40}") {
        let once = normalize_title(&s);
        prop_assert_eq!(normalize_title(&once), once.clone());
        prop_assert!(!once.starts_with(' ') && !once.ends_with(' ') && !once.contains("  "));
    }

    #[test]
    fn primary_field_reads_only_the_head(mut fields in arb_fields(), tail in proptest::sample::select(MajorField::ALL.to_vec())) {
        let head = fields.first().copied();
        let r = |fields: Vec<MajorField>| ScientistRecord {
            scientist_id: "x".into(),
            gender: Gender::Unknown,
            fields,
            publications: vec![],
        };
        prop_assert_eq!(primary_field(&r(fields.clone())), head);
        if fields.len() > 1 {
            let last = fields.len() - 1;
            fields[last] = tail;
            prop_assert_eq!(primary_field(&r(fields)), head);
        }
    }
}

/// Near-duplicate corpora: few blocks, titles built from a handful of
/// variants with one or two edits each.
fn arb_corpus(max: usize) -> impl Strategy<Value = Vec<PublicationRecord>> {
    let base = proptest::collection::vec("[ab][abc]{6,14}", 1..4);
    (base, proptest::collection::vec((0usize..4, 0usize..3, 0u8..3, any::<u64>(), 2000i32..2002, 1u32..3), 1..max))
        .prop_map(|(bases, picks)| {
            picks
                .into_iter()
                .map(|(b, edits, _, seed, year, n)| {
                    let mut chars: Vec<char> = bases[b % bases.len()].chars().collect();
                    let mut s = seed;
                    for _ in 0..edits {
                        s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                        let p = 1 + (s >> 33) as usize % (chars.len() - 1);
                        match (s >> 20) % 3 {
                            0 => chars[p] = ['a', 'b', 'c'][(s >> 40) as usize % 3],
                            1 => chars.insert(p, 'c'),
                            _ if chars.len() > 2 => {
                                chars.remove(p);
                            }
                            _ => {}
                        }
                    }
                    PublicationRecord {
                        title: chars.into_iter().collect(),
                        year,
                        author_count: n,
                        doi: None,
                    }
                })
                .collect()
        })
}

/// All-pairs matching closed by depth-first search.
fn brute_force_clusters(pubs: &[PublicationRecord], threshold: f64) -> Vec<Vec<usize>> {
    let n = pubs.len();
    let adj: Vec<Vec<usize>> = (0..n)
        .map(|i| (0..n).filter(|&j| j != i && is_duplicate(&pubs[i], &pubs[j], threshold)).collect())
        .collect();
    let mut seen = vec![false; n];
    let mut groups = Vec::new();
    for s in 0..n {
        if seen[s] {
            continue;
        }
        let mut stack = vec![s];
        let mut group = Vec::new();
        seen[s] = true;
        while let Some(v) = stack.pop() {
            group.push(v);
            for &u in &adj[v] {
                if !seen[u] {
                    seen[u] = true;
                    stack.push(u);
                }
            }
        }
        group.sort_unstable();
        groups.push(group);
    }
    groups
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn clustering_matches_all_pairs_oracle(pubs in arb_corpus(200), threshold in 0.02f64..0.4) {
        let fast = cluster_publications(&pubs, threshold);
        prop_assert_eq!(&fast, &brute_force_clusters(&pubs, threshold));
        // partition and block purity
        let mut all: Vec<usize> = fast.iter().flatten().copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..pubs.len()).collect::<Vec<_>>());
        for g in &fast {
            let k = block_key(&pubs[g[0]]);
            prop_assert!(g.iter().all(|&i| block_key(&pubs[i]) == k));
        }
    }

    #[test]
    fn raising_the_threshold_only_merges(pubs in arb_corpus(80), t1 in 0.02f64..0.3, dt in 0.0f64..0.3) {
        let fine = cluster_publications(&pubs, t1);
        let coarse = cluster_publications(&pubs, t1 + dt);
        let mut owner = vec![0; pubs.len()];
        for (c, g) in coarse.iter().enumerate() {
            for &i in g {
                owner[i] = c;
            }
        }
        for g in &fine {
            prop_assert!(g.iter().all(|&i| owner[i] == owner[g[0]]));
        }
    }
}

fn arb_bipartite() -> impl Strategy<Value = (usize, Vec<Vec<usize>>)> {
    (1usize..=15, 0usize..=15).prop_flat_map(|(n, m)| {
        (Just(n), proptest::collection::vec(proptest::collection::vec(0..n, 0..6), m))
    })
}

proptest! {
    #[test]
    fn projection_matches_pair_count((n, papers) in arb_bipartite()) {
        // scientist i owns one record per paper it appears on (duplicates allowed)
        let mut records: Vec<ScientistRecord> = (0..n)
            .map(|i| ScientistRecord {
                scientist_id: format!("s{i:02}"),
                gender: Gender::Unknown,
                fields: vec![],
                publications: vec![],
            })
            .collect();
        let mut clusters = Vec::new();
        for (c, members) in papers.iter().enumerate() {
            let mut refs = Vec::new();
            for &i in members {
                refs.push(RecordRef { scientist_id: records[i].scientist_id.clone(), publication: records[i].publications.len() });
                records[i].publications.push(PublicationRecord { title: format!("p{c}"), year: 2000, author_count: 1, doi: None });
            }
            if !refs.is_empty() {
                clusters.push(PaperCluster { cluster_id: c, members: refs, year: 2000, author_count: 1 });
            }
        }
        let tcn = project_tcn(&build_bipartite(&records, &clusters).unwrap());
        let sets: Vec<BTreeSet<usize>> = papers.iter().map(|m| m.iter().copied().collect()).collect();
        let mut expected = BTreeMap::new();
        for i in 0..n {
            for j in i + 1..n {
                let w = sets.iter().filter(|s| s.contains(&i) && s.contains(&j)).count() as u64;
                if w > 0 {
                    expected.insert((i, j), w);
                }
            }
        }
        let got: BTreeMap<(usize, usize), u64> = tcn.edges().map(|(i, j, w)| ((i, j), w)).collect();
        prop_assert_eq!(&got, &expected);
        let strength: u64 = (0..n).map(|i| tcn.strength_of(i)).sum();
        prop_assert_eq!(strength, 2 * tcn.total_weight());
        for i in 0..n {
            prop_assert_eq!(tcn.node(i).papers, sets.iter().filter(|s| s.contains(&i)).count());
        }
    }

    #[test]
    fn no_shared_papers_no_edges(n in 1usize..20) {
        let records: Vec<ScientistRecord> = (0..n)
            .map(|i| ScientistRecord {
                scientist_id: format!("s{i}"),
                gender: Gender::Female,
                fields: vec![],
                // distinct years put every record in its own block
                publications: vec![PublicationRecord { title: format!("Own work {i}"), year: 2000 + i as i32, author_count: 1, doi: None }],
            })
            .collect();
        let clusters = cluster_duplicates(&records, 0.1);
        prop_assert_eq!(clusters.len(), n);
        let tcn = project_tcn(&build_bipartite(&records, &clusters).unwrap());
        prop_assert_eq!(tcn.edge_count(), 0);
    }
}
