//! Scientist and publication records, and the line-oriented readers and
//! writers for them.
//!
//! Two input layouts are accepted:
//!
//! * JSONL, one scientist per line:
//!   `{"id":"s1","gender":"F","fields":["BIO"],"pubs":[{"title":"...","year":2001,"n_authors":3}]}`
//! * CSV, one publication per row with the scientist columns repeated:
//!   `id,gender,fields,title,year,n_authors,doi`. `fields` is a `;`-separated
//!   list. A row whose `title`, `year` and `n_authors` are all empty declares a
//!   scientist without publications. Rows of one scientist must be contiguous.

use std::collections::HashSet;
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Gender {
    Female,
    Male,
    Unknown,
}

impl Gender {
    pub const KNOWN: [Gender; 2] = [Gender::Female, Gender::Male];

    /// Short code used in files: `F`, `M`, or `U`.
    pub fn code(self) -> &'static str {
        match self {
            Gender::Female => "F",
            Gender::Male => "M",
            Gender::Unknown => "U",
        }
    }

    pub fn is_known(self) -> bool {
        self != Gender::Unknown
    }

    fn from_token(token: Option<&str>) -> Result<Self, IngestErrorKind> {
        match token.map(str::trim) {
            None | Some("") => Ok(Gender::Unknown),
            Some("F") | Some("f") => Ok(Gender::Female),
            Some("M") | Some("m") => Ok(Gender::Male),
            Some(other) => Err(IngestErrorKind::InvalidGender(other.to_string())),
        }
    }
}

impl fmt::Display for Gender {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

/// The eight top-level research areas a curriculum can declare.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MajorField {
    #[serde(rename = "AGR")]
    Agr,
    #[serde(rename = "SOC")]
    Soc,
    #[serde(rename = "BIO")]
    Bio,
    #[serde(rename = "EXA")]
    Exa,
    #[serde(rename = "HUM")]
    Hum,
    #[serde(rename = "HEA")]
    Hea,
    #[serde(rename = "ENG")]
    Eng,
    #[serde(rename = "LIN")]
    Lin,
}

impl MajorField {
    pub const ALL: [MajorField; 8] = [
        MajorField::Agr,
        MajorField::Bio,
        MajorField::Hea,
        MajorField::Exa,
        MajorField::Hum,
        MajorField::Soc,
        MajorField::Eng,
        MajorField::Lin,
    ];

    pub fn code(self) -> &'static str {
        match self {
            MajorField::Agr => "AGR",
            MajorField::Soc => "SOC",
            MajorField::Bio => "BIO",
            MajorField::Exa => "EXA",
            MajorField::Hum => "HUM",
            MajorField::Hea => "HEA",
            MajorField::Eng => "ENG",
            MajorField::Lin => "LIN",
        }
    }

    /// Position in [`MajorField::ALL`].
    pub fn index(self) -> usize {
        MajorField::ALL.iter().position(|&f| f == self).unwrap()
    }
}

impl fmt::Display for MajorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for MajorField {
    type Err = IngestErrorKind;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        MajorField::ALL
            .into_iter()
            .find(|f| f.code().eq_ignore_ascii_case(t))
            .ok_or_else(|| IngestErrorKind::InvalidField(t.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PublicationRecord {
    pub title: String,
    pub year: i32,
    pub author_count: u32,
    pub doi: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScientistRecord {
    pub scientist_id: String,
    pub gender: Gender,
    pub fields: Vec<MajorField>,
    pub publications: Vec<PublicationRecord>,
}

impl ScientistRecord {
    /// The first declared major field; `None` when the curriculum lists none.
    pub fn primary_field(&self) -> Option<MajorField> {
        primary_field(self)
    }
}

pub fn primary_field(record: &ScientistRecord) -> Option<MajorField> {
    record.fields.first().copied()
}

/// Lowercases and collapses whitespace. Diacritics and punctuation are kept.
pub fn normalize_title(title: &str) -> String {
    let mut out = String::with_capacity(title.len());
    for word in title.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.extend(word.chars().flat_map(char::to_lowercase));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputFormat {
    Jsonl,
    Csv,
}

impl FromStr for InputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "jsonl" | "json" => Ok(InputFormat::Jsonl),
            "csv" => Ok(InputFormat::Csv),
            other => Err(format!("unknown input format `{other}` (expected jsonl or csv)")),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct IngestOptions {
    /// Inclusive range of accepted publication years.
    pub year_range: (i32, i32),
}

impl Default for IngestOptions {
    fn default() -> Self {
        IngestOptions {
            year_range: (1900, 2100),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IngestErrorKind {
    #[error("malformed record: {0}")]
    Malformed(String),
    #[error("empty scientist id")]
    EmptyId,
    #[error("duplicate scientist id `{0}`")]
    DuplicateId(String),
    #[error("invalid gender `{0}`")]
    InvalidGender(String),
    #[error("invalid field `{0}`")]
    InvalidField(String),
    #[error("field `{0}` listed twice")]
    RepeatedField(MajorField),
    #[error("more than three fields listed")]
    TooManyFields,
    #[error("empty publication title")]
    EmptyTitle,
    #[error("author count {0} is below 1")]
    AuthorCount(i64),
    #[error("year {year} outside {lo}..={hi}")]
    YearOutOfRange { year: i64, lo: i32, hi: i32 },
    #[error("scientist `{0}` has conflicting gender or fields across rows")]
    InconsistentRows(String),
    #[error("i/o error: {0}")]
    Io(String),
}

/// An ingest failure tied to the 1-based input line that caused it.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {kind}")]
pub struct IngestError {
    pub line: usize,
    pub kind: IngestErrorKind,
}

#[derive(Debug, Serialize, Deserialize)]
struct JsonScientist {
    id: String,
    #[serde(default)]
    gender: Option<String>,
    #[serde(default)]
    fields: Vec<String>,
    #[serde(default)]
    pubs: Vec<JsonPublication>,
}

#[derive(Debug, Serialize, Deserialize)]
struct JsonPublication {
    title: String,
    year: i64,
    n_authors: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    doi: Option<String>,
}

fn parse_fields<'a>(
    tokens: impl IntoIterator<Item = &'a str>,
) -> Result<Vec<MajorField>, IngestErrorKind> {
    let mut fields = Vec::new();
    for token in tokens {
        if token.trim().is_empty() {
            continue;
        }
        let field: MajorField = token.parse()?;
        if fields.contains(&field) {
            return Err(IngestErrorKind::RepeatedField(field));
        }
        fields.push(field);
    }
    if fields.len() > 3 {
        return Err(IngestErrorKind::TooManyFields);
    }
    Ok(fields)
}

fn validate_publication(
    title: String,
    year: i64,
    n_authors: i64,
    doi: Option<String>,
    opts: &IngestOptions,
) -> Result<PublicationRecord, IngestErrorKind> {
    if title.trim().is_empty() {
        return Err(IngestErrorKind::EmptyTitle);
    }
    if n_authors < 1 || n_authors > u32::MAX as i64 {
        return Err(IngestErrorKind::AuthorCount(n_authors));
    }
    let (lo, hi) = opts.year_range;
    if year < lo as i64 || year > hi as i64 {
        return Err(IngestErrorKind::YearOutOfRange { year, lo, hi });
    }
    let doi = doi.map(|d| d.trim().to_string()).filter(|d| !d.is_empty());
    Ok(PublicationRecord {
        title,
        year: year as i32,
        author_count: n_authors as u32,
        doi,
    })
}

fn parse_json_line(line: &str, opts: &IngestOptions) -> Result<ScientistRecord, IngestErrorKind> {
    let raw: JsonScientist =
        serde_json::from_str(line).map_err(|e| IngestErrorKind::Malformed(e.to_string()))?;
    if raw.id.trim().is_empty() {
        return Err(IngestErrorKind::EmptyId);
    }
    let gender = Gender::from_token(raw.gender.as_deref())?;
    let fields = parse_fields(raw.fields.iter().map(String::as_str))?;
    let publications = raw
        .pubs
        .into_iter()
        .map(|p| validate_publication(p.title, p.year, p.n_authors, p.doi, opts))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ScientistRecord {
        scientist_id: raw.id,
        gender,
        fields,
        publications,
    })
}

/// Reads scientist records, preserving input order.
pub fn parse_records<R: BufRead>(
    input: R,
    format: InputFormat,
    opts: &IngestOptions,
) -> Result<Vec<ScientistRecord>, IngestError> {
    match format {
        InputFormat::Jsonl => parse_jsonl(input, opts),
        InputFormat::Csv => parse_csv(input, opts),
    }
}

fn parse_jsonl<R: BufRead>(input: R, opts: &IngestOptions) -> Result<Vec<ScientistRecord>, IngestError> {
    let mut lines = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line.map_err(|e| IngestError {
            line: i + 1,
            kind: IngestErrorKind::Io(e.to_string()),
        })?;
        if !line.trim().is_empty() {
            lines.push((i + 1, line));
        }
    }

    let parse = |(no, line): &(usize, String)| {
        parse_json_line(line, opts).map_err(|kind| IngestError { line: *no, kind })
    };
    #[cfg(feature = "parallel")]
    let parsed: Vec<Result<ScientistRecord, IngestError>> = {
        use rayon::prelude::*;
        lines.par_iter().map(parse).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let parsed: Vec<Result<ScientistRecord, IngestError>> = lines.iter().map(parse).collect();

    let mut seen = HashSet::new();
    let mut records = Vec::with_capacity(parsed.len());
    for ((no, _), rec) in lines.iter().zip(parsed) {
        let rec = rec?;
        if !seen.insert(rec.scientist_id.clone()) {
            return Err(IngestError {
                line: *no,
                kind: IngestErrorKind::DuplicateId(rec.scientist_id),
            });
        }
        records.push(rec);
    }
    Ok(records)
}

const CSV_HEADER: [&str; 7] = ["id", "gender", "fields", "title", "year", "n_authors", "doi"];

fn parse_csv<R: BufRead>(input: R, opts: &IngestOptions) -> Result<Vec<ScientistRecord>, IngestError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(input);
    let headers = reader
        .headers()
        .map_err(|e| IngestError {
            line: 1,
            kind: IngestErrorKind::Malformed(e.to_string()),
        })?
        .clone();
    if headers.is_empty() {
        return Ok(Vec::new());
    }
    let col = |name: &str| -> Result<usize, IngestError> {
        headers.iter().position(|h| h.trim() == name).ok_or_else(|| IngestError {
            line: 1,
            kind: IngestErrorKind::Malformed(format!("missing column `{name}`")),
        })
    };
    let mut idx = Vec::with_capacity(CSV_HEADER.len());
    for name in CSV_HEADER {
        // doi is the only optional column
        idx.push(if name == "doi" { col(name).ok() } else { Some(col(name)?) });
    }

    let mut records: Vec<ScientistRecord> = Vec::new();
    let mut seen = HashSet::new();
    for row in reader.records() {
        let row = row.map_err(|e| IngestError {
            line: e.position().map(|p| p.line() as usize).unwrap_or(0),
            kind: IngestErrorKind::Malformed(e.to_string()),
        })?;
        let line = row.position().map(|p| p.line() as usize).unwrap_or(0);
        let err = |kind| IngestError { line, kind };
        let get = |k: usize| idx[k].and_then(|i| row.get(i)).unwrap_or("");

        let id = get(0).to_string();
        if id.trim().is_empty() {
            return Err(err(IngestErrorKind::EmptyId));
        }
        let gender_token = get(1);
        let gender = Gender::from_token(Some(gender_token)).map_err(err)?;
        let fields = parse_fields(get(2).split(';')).map_err(err)?;

        let (title, year, n_authors) = (get(3), get(4).trim(), get(5).trim());
        let publication = if title.trim().is_empty() && year.is_empty() && n_authors.is_empty() {
            None
        } else {
            let year: i64 = year
                .parse()
                .map_err(|_| err(IngestErrorKind::Malformed(format!("bad year `{year}`"))))?;
            let n: i64 = n_authors.parse().map_err(|_| {
                err(IngestErrorKind::Malformed(format!("bad n_authors `{n_authors}`")))
            })?;
            let doi = Some(get(6).to_string());
            Some(validate_publication(title.to_string(), year, n, doi, opts).map_err(err)?)
        };

        match records.last_mut() {
            Some(last) if last.scientist_id == id => {
                if last.gender != gender || last.fields != fields {
                    return Err(err(IngestErrorKind::InconsistentRows(id)));
                }
                last.publications.extend(publication);
            }
            _ => {
                if !seen.insert(id.clone()) {
                    return Err(err(IngestErrorKind::DuplicateId(id)));
                }
                records.push(ScientistRecord {
                    scientist_id: id,
                    gender,
                    fields,
                    publications: publication.into_iter().collect(),
                });
            }
        }
    }
    Ok(records)
}

fn to_json_line(record: &ScientistRecord) -> serde_json::Result<String> {
    let raw = JsonScientist {
        id: record.scientist_id.clone(),
        gender: match record.gender {
            Gender::Unknown => None,
            g => Some(g.code().to_string()),
        },
        fields: record.fields.iter().map(|f| f.code().to_string()).collect(),
        pubs: record
            .publications
            .iter()
            .map(|p| JsonPublication {
                title: p.title.clone(),
                year: p.year as i64,
                n_authors: p.author_count as i64,
                doi: p.doi.clone(),
            })
            .collect(),
    };
    serde_json::to_string(&raw)
}

/// Writes records in the JSONL layout read by [`parse_records`].
pub fn write_jsonl<W: Write>(mut out: W, records: &[ScientistRecord]) -> std::io::Result<()> {
    for record in records {
        let line = to_json_line(record).map_err(std::io::Error::other)?;
        writeln!(out, "{line}")?;
    }
    Ok(())
}

/// Writes records in the CSV layout read by [`parse_records`].
pub fn write_csv<W: Write>(out: W, records: &[ScientistRecord]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in records {
        let fields = r.fields.iter().map(|f| f.code()).collect::<Vec<_>>().join(";");
        let gender = if r.gender.is_known() { r.gender.code() } else { "" };
        if r.publications.is_empty() {
            w.write_record([r.scientist_id.as_str(), gender, &fields, "", "", "", ""])?;
        }
        for p in &r.publications {
            w.write_record([
                r.scientist_id.as_str(),
                gender,
                &fields,
                &p.title,
                &p.year.to_string(),
                &p.author_count.to_string(),
                p.doi.as_deref().unwrap_or(""),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse_jsonl_str(s: &str) -> Result<Vec<ScientistRecord>, IngestError> {
        parse_records(s.as_bytes(), InputFormat::Jsonl, &IngestOptions::default())
    }

    #[test]
    fn jsonl_single_scientist() {
        let recs = parse_jsonl_str(
            r#"{"id":"s1","gender":"F","fields":["BIO"],"pubs":[{"title":"On cells","year":2001,"n_authors":2}]}"#,
        )
        .unwrap();
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].gender, Gender::Female);
        assert_eq!(recs[0].fields, vec![MajorField::Bio]);
        assert_eq!(recs[0].publications[0].author_count, 2);
    }

    #[test]
    fn empty_stream_is_empty() {
        assert!(parse_jsonl_str("").unwrap().is_empty());
        let csv = parse_records("".as_bytes(), InputFormat::Csv, &IngestOptions::default()).unwrap();
        assert!(csv.is_empty());
    }

    #[test]
    fn duplicate_id_is_named() {
        let input = "{\"id\":\"s1\"}\n{\"id\":\"s1\"}\n";
        let err = parse_jsonl_str(input).unwrap_err();
        assert_eq!(err.line, 2);
        assert_eq!(err.kind, IngestErrorKind::DuplicateId("s1".into()));
        assert!(err.to_string().contains("s1"));
    }

    #[test]
    fn null_gender_is_unknown() {
        let recs = parse_jsonl_str(r#"{"id":"x","gender":null,"fields":[],"pubs":[]}"#).unwrap();
        assert_eq!(recs[0].gender, Gender::Unknown);
    }

    #[test]
    fn bad_tokens_are_rejected_with_line_numbers() {
        let err = parse_jsonl_str("\n{\"id\":\"a\",\"gender\":\"Q\"}").unwrap_err();
        assert_eq!(err.line, 2);
        assert!(matches!(err.kind, IngestErrorKind::InvalidGender(_)));

        let err = parse_jsonl_str(r#"{"id":"a","fields":["XYZ"]}"#).unwrap_err();
        assert!(matches!(err.kind, IngestErrorKind::InvalidField(_)));

        let err = parse_jsonl_str(r#"{"id":"a","fields":["BIO","BIO"]}"#).unwrap_err();
        assert_eq!(err.kind, IngestErrorKind::RepeatedField(MajorField::Bio));

        let err = parse_jsonl_str(r#"{"id":"a","fields":["BIO","EXA","ENG","LIN"]}"#).unwrap_err();
        assert_eq!(err.kind, IngestErrorKind::TooManyFields);

        let err =
            parse_jsonl_str(r#"{"id":"a","pubs":[{"title":"t","year":2000,"n_authors":0}]}"#).unwrap_err();
        assert_eq!(err.kind, IngestErrorKind::AuthorCount(0));

        let err =
            parse_jsonl_str(r#"{"id":"a","pubs":[{"title":"t","year":1800,"n_authors":1}]}"#).unwrap_err();
        assert!(matches!(err.kind, IngestErrorKind::YearOutOfRange { .. }));

        let err = parse_jsonl_str("{not json").unwrap_err();
        assert!(matches!(err.kind, IngestErrorKind::Malformed(_)));
    }

    #[test]
    fn primary_field_is_first_listed() {
        let mut r = ScientistRecord {
            scientist_id: "a".into(),
            gender: Gender::Male,
            fields: vec![MajorField::Exa, MajorField::Bio],
            publications: vec![],
        };
        assert_eq!(primary_field(&r), Some(MajorField::Exa));
        r.fields = vec![MajorField::Lin];
        assert_eq!(primary_field(&r), Some(MajorField::Lin));
        r.fields.clear();
        assert_eq!(primary_field(&r), None);
    }

    #[test]
    fn normalize_examples() {
        assert_eq!(normalize_title("  The  TITLE "), "the title");
        assert_eq!(normalize_title(""), "");
        assert_eq!(normalize_title("Água"), "água");
        assert_eq!(normalize_title("A\tb\n c"), "a b c");
    }

    #[test]
    fn csv_groups_contiguous_rows() {
        let input = "id,gender,fields,title,year,n_authors,doi\n\
                     s1,F,BIO;EXA,First paper,2001,2,\n\
                     s1,F,BIO;EXA,Second paper,2003,3,10.1/x\n\
                     s2,,,,,,\n";
        let recs = parse_records(input.as_bytes(), InputFormat::Csv, &IngestOptions::default()).unwrap();
        assert_eq!(recs.len(), 2);
        assert_eq!(recs[0].publications.len(), 2);
        assert_eq!(recs[0].publications[1].doi.as_deref(), Some("10.1/x"));
        assert_eq!(recs[1].gender, Gender::Unknown);
        assert!(recs[1].publications.is_empty());
    }

    #[test]
    fn csv_reappearing_id_is_duplicate() {
        let input = "id,gender,fields,title,year,n_authors,doi\n\
                     s1,F,BIO,A,2001,2,\n\
                     s2,M,BIO,B,2001,2,\n\
                     s1,F,BIO,C,2001,2,\n";
        let err = parse_records(input.as_bytes(), InputFormat::Csv, &IngestOptions::default()).unwrap_err();
        assert_eq!(err.kind, IngestErrorKind::DuplicateId("s1".into()));
        assert_eq!(err.line, 4);
    }

    #[test]
    fn csv_conflicting_rows_rejected() {
        let input = "id,gender,fields,title,year,n_authors,doi\n\
                     s1,F,BIO,A,2001,2,\n\
                     s1,M,BIO,B,2001,2,\n";
        let err = parse_records(input.as_bytes(), InputFormat::Csv, &IngestOptions::default()).unwrap_err();
        assert!(matches!(err.kind, IngestErrorKind::InconsistentRows(_)));
    }

    #[test]
    fn writers_round_trip() {
        let recs = vec![
            ScientistRecord {
                scientist_id: "s1".into(),
                gender: Gender::Female,
                fields: vec![MajorField::Hea],
                publications: vec![PublicationRecord {
                    title: "Título, com vírgula".into(),
                    year: 1999,
                    author_count: 4,
                    doi: Some("10.5/abc".into()),
                }],
            },
            ScientistRecord {
                scientist_id: "s2".into(),
                gender: Gender::Unknown,
                fields: vec![],
                publications: vec![],
            },
        ];
        let mut buf = Vec::new();
        write_jsonl(&mut buf, &recs).unwrap();
        let back = parse_records(&buf[..], InputFormat::Jsonl, &IngestOptions::default()).unwrap();
        assert_eq!(back, recs);

        let mut buf = Vec::new();
        write_csv(&mut buf, &recs).unwrap();
        let back = parse_records(&buf[..], InputFormat::Csv, &IngestOptions::default()).unwrap();
        assert_eq!(back, recs);
    }
}
