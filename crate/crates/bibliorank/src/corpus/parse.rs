//! External-format ingestion: JSON-lines publications, CSV roster, CSV
//! SDS-to-UDA map. Strict mode rejects the whole input when any row is
//! invalid; lenient mode drops bad rows and counts them. Either way the
//! report lists every rejected row with its line number and reason.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::{BufRead, BufReader, Read};

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::Result;

use super::{AuthorSlot, Corpus, DocType, PublicationRecord, RosterRow};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ParseMode {
    /// All-or-nothing: any invalid row rejects the whole input.
    Strict,
    /// Invalid rows are dropped and counted.
    Lenient,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum InputKind {
    Publications,
    Roster,
    SdsMap,
}

impl fmt::Display for InputKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InputKind::Publications => "publications",
            InputKind::Roster => "roster",
            InputKind::SdsMap => "sds_map",
        })
    }
}

/// One rejected input row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RejectedRow {
    pub file: InputKind,
    /// 1-based line number in the source file (CSV headers count).
    pub line: usize,
    pub reason: String,
}

/// Row-level outcome of an ingestion pass.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub mode: ParseMode,
    pub publications_accepted: usize,
    pub roster_accepted: usize,
    pub sds_map_entries: usize,
    pub rejects: Vec<RejectedRow>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.rejects.is_empty()
    }

    pub fn rejected_count(&self) -> usize {
        self.rejects.len()
    }
}

/// Result of [`parse_corpus`]: a corpus (whose report counts any rows
/// dropped in lenient mode), or the reject report in strict mode.
#[derive(Debug)]
pub enum ParseOutcome {
    Accepted {
        corpus: Corpus,
        report: ValidationReport,
    },
    Rejected(ValidationReport),
}

/// Raw JSONL shape of a publication row.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPublication {
    pub_id: String,
    year: i32,
    doc_type: String,
    subject_categories: Vec<String>,
    citations: i64,
    authors: Vec<RawAuthor>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAuthor {
    researcher_id: Option<String>,
    university_id: Option<String>,
}

/// Parses and validates the three corpus inputs.
pub fn parse_corpus(
    publications: impl Read,
    roster: impl Read,
    sds_map: impl Read,
    config: RunConfig,
    mode: ParseMode,
) -> Result<ParseOutcome> {
    config.validate()?;
    let mut rejects: Vec<RejectedRow> = Vec::new();

    let sds_to_uda = read_sds_map(sds_map, &mut rejects)?;
    let roster_rows = read_roster(roster, &config, &sds_to_uda, &mut rejects)?;
    let publication_rows = read_publications(publications, &config, &roster_rows, &mut rejects)?;

    let report = ValidationReport {
        mode,
        publications_accepted: publication_rows.len(),
        roster_accepted: roster_rows.len(),
        sds_map_entries: sds_to_uda.len(),
        rejects,
    };

    if mode == ParseMode::Strict && !report.is_clean() {
        return Ok(ParseOutcome::Rejected(report));
    }
    let corpus = Corpus::build_unchecked(publication_rows, roster_rows, sds_to_uda, config);
    Ok(ParseOutcome::Accepted { corpus, report })
}

fn read_sds_map(
    reader: impl Read,
    rejects: &mut Vec<RejectedRow>,
) -> Result<BTreeMap<String, String>> {
    let mut map: BTreeMap<String, String> = BTreeMap::new();
    let mut first_line: HashMap<String, usize> = HashMap::new();
    for row in CsvRows::new(reader, &["sds_code", "uda_code"], InputKind::SdsMap, rejects)? {
        let (line, fields) = row;
        let sds = fields[0].clone();
        let uda = fields[1].clone();
        if sds.is_empty() || uda.is_empty() {
            rejects.push(RejectedRow {
                file: InputKind::SdsMap,
                line,
                reason: "empty sds_code or uda_code".into(),
            });
            continue;
        }
        if let Some(&prev) = first_line.get(&sds) {
            rejects.push(RejectedRow {
                file: InputKind::SdsMap,
                line,
                reason: format!("duplicate sds_code \"{sds}\" (first seen at line {prev})"),
            });
            continue;
        }
        first_line.insert(sds.clone(), line);
        map.insert(sds, uda);
    }
    Ok(map)
}

fn read_roster(
    reader: impl Read,
    config: &RunConfig,
    sds_to_uda: &BTreeMap<String, String>,
    rejects: &mut Vec<RejectedRow>,
) -> Result<Vec<RosterRow>> {
    let mut rows: Vec<RosterRow> = Vec::new();
    let mut first_line: HashMap<(String, i32), usize> = HashMap::new();
    for (line, fields) in CsvRows::new(
        reader,
        &["researcher_id", "year", "university_id", "sds_code"],
        InputKind::Roster,
        rejects,
    )? {
        let mut reject = |reason: String| {
            rejects.push(RejectedRow {
                file: InputKind::Roster,
                line,
                reason,
            });
        };
        let year: i32 = match fields[1].parse() {
            Ok(y) => y,
            Err(_) => {
                reject(format!("malformed row: invalid year \"{}\"", fields[1]));
                continue;
            }
        };
        let row = RosterRow {
            researcher_id: fields[0].clone(),
            year,
            university_id: fields[2].clone(),
            sds_code: fields[3].clone(),
        };
        if row.researcher_id.is_empty() || row.university_id.is_empty() || row.sds_code.is_empty()
        {
            reject("malformed row: empty field".into());
            continue;
        }
        if !config.contains_year(year) {
            reject(format!(
                "year {year} outside window [{}, {}]",
                config.window_start, config.window_end
            ));
            continue;
        }
        if !sds_to_uda.contains_key(&row.sds_code) {
            reject(format!("unknown sds_code \"{}\"", row.sds_code));
            continue;
        }
        let key = (row.researcher_id.clone(), year);
        if let Some(&prev) = first_line.get(&key) {
            reject(format!(
                "duplicate roster entry for (\"{}\", {year}) (first seen at line {prev})",
                row.researcher_id
            ));
            continue;
        }
        first_line.insert(key, line);
        rows.push(row);
    }
    Ok(rows)
}

fn read_publications(
    reader: impl Read,
    config: &RunConfig,
    roster_rows: &[RosterRow],
    rejects: &mut Vec<RejectedRow>,
) -> Result<Vec<PublicationRecord>> {
    let roster_by_key: HashMap<(&str, i32), &RosterRow> = roster_rows
        .iter()
        .map(|r| ((r.researcher_id.as_str(), r.year), r))
        .collect();

    let mut records: Vec<PublicationRecord> = Vec::new();
    let mut first_line: HashMap<String, usize> = HashMap::new();
    let reader = BufReader::new(reader);
    for (idx, line_result) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = match line_result {
            Ok(l) => l,
            Err(e) => {
                rejects.push(RejectedRow {
                    file: InputKind::Publications,
                    line: line_no,
                    reason: format!("unreadable line: {e}"),
                });
                continue;
            }
        };
        if line.trim().is_empty() {
            continue;
        }
        let mut reject = |reason: String| {
            rejects.push(RejectedRow {
                file: InputKind::Publications,
                line: line_no,
                reason,
            });
        };
        let raw: RawPublication = match serde_json::from_str(&line) {
            Ok(r) => r,
            Err(e) => {
                reject(format!("malformed row: {e}"));
                continue;
            }
        };
        if raw.pub_id.is_empty() {
            reject("empty pub_id".into());
            continue;
        }
        let Some(doc_type) = DocType::parse(&raw.doc_type) else {
            reject(format!("unknown doc_type \"{}\"", raw.doc_type));
            continue;
        };
        if raw.citations < 0 {
            reject("negative citations".into());
            continue;
        }
        if raw.subject_categories.is_empty() {
            reject("empty subject_categories".into());
            continue;
        }
        if raw.authors.is_empty() {
            reject("empty author byline".into());
            continue;
        }
        if !config.contains_year(raw.year) {
            reject(format!(
                "year {} outside window [{}, {}]",
                raw.year, config.window_start, config.window_end
            ));
            continue;
        }
        if let Some(&prev) = first_line.get(&raw.pub_id) {
            reject(format!(
                "duplicate pub_id \"{}\" (first seen at line {prev})",
                raw.pub_id
            ));
            continue;
        }
        // A byline slot claiming a university must agree with the roster
        // when its researcher is rostered that year.
        let mut mismatch = None;
        for (slot_idx, slot) in raw.authors.iter().enumerate() {
            let (Some(researcher), Some(claimed)) =
                (slot.researcher_id.as_deref(), slot.university_id.as_deref())
            else {
                continue;
            };
            if let Some(entry) = roster_by_key.get(&(researcher, raw.year)) {
                if entry.university_id != claimed {
                    mismatch = Some(format!(
                        "byline slot {} claims university \"{claimed}\" but roster has \"{}\" for researcher \"{researcher}\" in {}",
                        slot_idx + 1,
                        entry.university_id,
                        raw.year
                    ));
                    break;
                }
            }
        }
        if let Some(reason) = mismatch {
            reject(reason);
            continue;
        }

        first_line.insert(raw.pub_id.clone(), line_no);
        records.push(PublicationRecord {
            pub_id: raw.pub_id,
            year: raw.year,
            doc_type,
            subject_categories: raw.subject_categories,
            citations: raw.citations as u32,
            authors: raw
                .authors
                .into_iter()
                .map(|a| AuthorSlot {
                    researcher_id: a.researcher_id,
                    university_id: a.university_id,
                })
                .collect(),
        });
    }
    Ok(records)
}

/// Header-checked CSV row reader that flattens csv-level errors into the
/// reject list and yields (line, fields) for well-formed rows.
struct CsvRows {
    rows: std::vec::IntoIter<(usize, Vec<String>)>,
}

impl CsvRows {
    fn new(
        reader: impl Read,
        header: &[&str],
        kind: InputKind,
        rejects: &mut Vec<RejectedRow>,
    ) -> Result<Self> {
        let mut rows: Vec<(usize, Vec<String>)> = Vec::new();
        let mut lines = BufReader::new(reader).lines().enumerate();

        match lines.next() {
            Some((_, Ok(first))) if split_csv(&first) == header => {}
            Some((_, Ok(first))) => {
                rejects.push(RejectedRow {
                    file: kind,
                    line: 1,
                    reason: format!(
                        "bad header \"{first}\", expected \"{}\"",
                        header.join(",")
                    ),
                });
                return Ok(CsvRows { rows: Vec::new().into_iter() });
            }
            Some((_, Err(e))) => {
                rejects.push(RejectedRow {
                    file: kind,
                    line: 1,
                    reason: format!("unreadable line: {e}"),
                });
                return Ok(CsvRows { rows: Vec::new().into_iter() });
            }
            None => return Ok(CsvRows { rows: Vec::new().into_iter() }),
        }

        for (idx, line_result) in lines {
            let line_no = idx + 1;
            let line = match line_result {
                Ok(l) => l,
                Err(e) => {
                    rejects.push(RejectedRow {
                        file: kind,
                        line: line_no,
                        reason: format!("unreadable line: {e}"),
                    });
                    continue;
                }
            };
            if line.trim().is_empty() {
                continue;
            }
            let fields = split_csv(&line);
            if fields.len() != header.len() {
                rejects.push(RejectedRow {
                    file: kind,
                    line: line_no,
                    reason: format!(
                        "malformed row: expected {} fields, got {}",
                        header.len(),
                        fields.len()
                    ),
                });
                continue;
            }
            rows.push((line_no, fields));
        }
        Ok(CsvRows { rows: rows.into_iter() })
    }
}

impl Iterator for CsvRows {
    type Item = (usize, Vec<String>);

    fn next(&mut self) -> Option<Self::Item> {
        self.rows.next()
    }
}

/// Splits one CSV line. Identifiers in these files never contain commas or
/// quotes, but quoted fields are accepted for robustness.
fn split_csv(line: &str) -> Vec<String> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_reader(line.as_bytes());
    match reader.records().next() {
        Some(Ok(record)) => record.iter().map(str::to_string).collect(),
        _ => vec![line.to_string()],
    }
}

/// Re-checks every record-level invariant on already-typed records. Used by
/// [`Corpus::from_records`] so programmatic construction cannot bypass
/// validation.
pub(super) fn validate_records(
    publications: &[PublicationRecord],
    roster_rows: &[RosterRow],
    sds_to_uda: &BTreeMap<String, String>,
    config: &RunConfig,
) -> ValidationReport {
    let mut rejects: Vec<RejectedRow> = Vec::new();
    let mut roster_seen: HashMap<(&str, i32), usize> = HashMap::new();
    for (i, row) in roster_rows.iter().enumerate() {
        let line = i + 1;
        if !config.contains_year(row.year) {
            rejects.push(RejectedRow {
                file: InputKind::Roster,
                line,
                reason: format!("year {} outside window", row.year),
            });
        }
        if !sds_to_uda.contains_key(&row.sds_code) {
            rejects.push(RejectedRow {
                file: InputKind::Roster,
                line,
                reason: format!("unknown sds_code \"{}\"", row.sds_code),
            });
        }
        if let Some(&prev) = roster_seen.get(&(row.researcher_id.as_str(), row.year)) {
            rejects.push(RejectedRow {
                file: InputKind::Roster,
                line,
                reason: format!(
                    "duplicate roster entry for (\"{}\", {}) (first seen at record {prev})",
                    row.researcher_id, row.year
                ),
            });
        } else {
            roster_seen.insert((row.researcher_id.as_str(), row.year), line);
        }
    }

    let roster_by_key: HashMap<(&str, i32), &RosterRow> = roster_rows
        .iter()
        .map(|r| ((r.researcher_id.as_str(), r.year), r))
        .collect();
    let mut pub_seen: HashMap<&str, usize> = HashMap::new();
    for (i, publication) in publications.iter().enumerate() {
        let line = i + 1;
        let reject = |reason: String, rejects: &mut Vec<RejectedRow>| {
            rejects.push(RejectedRow {
                file: InputKind::Publications,
                line,
                reason,
            });
        };
        if publication.pub_id.is_empty() {
            reject("empty pub_id".into(), &mut rejects);
        }
        if publication.subject_categories.is_empty() {
            reject("empty subject_categories".into(), &mut rejects);
        }
        if publication.authors.is_empty() {
            reject("empty author byline".into(), &mut rejects);
        }
        if !config.contains_year(publication.year) {
            reject(
                format!("year {} outside window", publication.year),
                &mut rejects,
            );
        }
        if let Some(&prev) = pub_seen.get(publication.pub_id.as_str()) {
            reject(
                format!(
                    "duplicate pub_id \"{}\" (first seen at record {prev})",
                    publication.pub_id
                ),
                &mut rejects,
            );
        } else {
            pub_seen.insert(publication.pub_id.as_str(), line);
        }
        for slot in &publication.authors {
            let (Some(researcher), Some(claimed)) =
                (slot.researcher_id.as_deref(), slot.university_id.as_deref())
            else {
                continue;
            };
            if let Some(entry) = roster_by_key.get(&(researcher, publication.year)) {
                if entry.university_id != claimed {
                    reject(
                        format!(
                            "byline university \"{claimed}\" contradicts roster \"{}\" for \"{researcher}\"",
                            entry.university_id
                        ),
                        &mut rejects,
                    );
                }
            }
        }
    }

    ValidationReport {
        mode: ParseMode::Strict,
        publications_accepted: publications.len().saturating_sub(
            rejects
                .iter()
                .filter(|r| r.file == InputKind::Publications)
                .count(),
        ),
        roster_accepted: roster_rows.len().saturating_sub(
            rejects
                .iter()
                .filter(|r| r.file == InputKind::Roster)
                .count(),
        ),
        sds_map_entries: sds_to_uda.len(),
        rejects,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    const SDS_MAP: &str = "sds_code,uda_code\nFIS/01,FIS\nBIO/01,BIO\n";
    const ROSTER: &str = "researcher_id,year,university_id,sds_code\n\
R1,2001,U1,FIS/01\nR2,2003,U2,BIO/01\n";

    fn parse(
        pubs: &str,
        roster: &str,
        sds: &str,
        mode: ParseMode,
    ) -> ParseOutcome {
        parse_corpus(
            Cursor::new(pubs.to_string()),
            Cursor::new(roster.to_string()),
            Cursor::new(sds.to_string()),
            RunConfig::default(),
            mode,
        )
        .unwrap()
    }

    fn pub_line(id: &str, year: i32, citations: i64) -> String {
        format!(
            r#"{{"pub_id":"{id}","year":{year},"doc_type":"article","subject_categories":["C1"],"citations":{citations},"authors":[{{"researcher_id":"R1","university_id":"U1"}}]}}"#
        )
    }

    #[test]
    fn clean_input_is_accepted_with_counts() {
        let pubs = format!("{}\n{}\n", pub_line("P1", 2001, 3), pub_line("P2", 2001, 0));
        match parse(&pubs, ROSTER, SDS_MAP, ParseMode::Strict) {
            ParseOutcome::Accepted { corpus, report } => {
                assert!(report.is_clean());
                assert_eq!(report.publications_accepted, 2);
                assert_eq!(report.roster_accepted, 2);
                assert_eq!(corpus.publications().len(), 2);
                assert_eq!(corpus.roster().len(), 2);
            }
            ParseOutcome::Rejected(report) => panic!("rejected: {report:?}"),
        }
    }

    #[test]
    fn negative_citations_is_rejected_with_reason() {
        let pubs = pub_line("P1", 2001, -1);
        match parse(&pubs, ROSTER, SDS_MAP, ParseMode::Strict) {
            ParseOutcome::Rejected(report) => {
                assert_eq!(report.rejects.len(), 1);
                assert_eq!(report.rejects[0].reason, "negative citations");
                assert_eq!(report.rejects[0].line, 1);
            }
            ParseOutcome::Accepted { .. } => panic!("accepted bad row"),
        }
    }

    #[test]
    fn duplicate_pub_id_reports_both_lines() {
        let pubs = format!("{}\n{}\n", pub_line("P1", 2001, 3), pub_line("P1", 2002, 4));
        match parse(&pubs, ROSTER, SDS_MAP, ParseMode::Strict) {
            ParseOutcome::Rejected(report) => {
                assert_eq!(report.rejects.len(), 1);
                let reject = &report.rejects[0];
                assert_eq!(reject.line, 2);
                assert!(reject.reason.contains("first seen at line 1"), "{reject:?}");
            }
            ParseOutcome::Accepted { .. } => panic!("accepted duplicate"),
        }
    }

    #[test]
    fn lenient_mode_drops_and_counts() {
        let pubs = format!("{}\n{}\n", pub_line("P1", 2001, 3), pub_line("P2", 2001, -5));
        match parse(&pubs, ROSTER, SDS_MAP, ParseMode::Lenient) {
            ParseOutcome::Accepted { corpus, report } => {
                assert_eq!(report.rejected_count(), 1);
                assert_eq!(corpus.publications().len(), 1);
                assert_eq!(corpus.publications()[0].pub_id, "P1");
            }
            ParseOutcome::Rejected(_) => panic!("lenient mode never rejects wholesale"),
        }
    }

    #[test]
    fn year_outside_window_is_rejected() {
        let pubs = pub_line("P1", 1999, 3);
        match parse(&pubs, ROSTER, SDS_MAP, ParseMode::Strict) {
            ParseOutcome::Rejected(report) => {
                assert!(report.rejects[0].reason.contains("outside window"));
            }
            ParseOutcome::Accepted { .. } => panic!("accepted out-of-window year"),
        }
    }

    #[test]
    fn unknown_sds_and_duplicate_roster_rows_are_rejected() {
        let roster = "researcher_id,year,university_id,sds_code\n\
R1,2001,U1,XYZ/99\nR2,2002,U1,FIS/01\nR2,2002,U2,FIS/01\n";
        match parse("", roster, SDS_MAP, ParseMode::Strict) {
            ParseOutcome::Rejected(report) => {
                assert_eq!(report.rejects.len(), 2);
                assert!(report.rejects[0].reason.contains("unknown sds_code"));
                assert!(report.rejects[1].reason.contains("duplicate roster entry"));
                assert_eq!(report.rejects[1].line, 4);
            }
            ParseOutcome::Accepted { .. } => panic!("accepted bad roster"),
        }
    }

    #[test]
    fn malformed_json_row_is_reported() {
        let pubs = "{\"pub_id\": oops}\n";
        match parse(pubs, ROSTER, SDS_MAP, ParseMode::Strict) {
            ParseOutcome::Rejected(report) => {
                assert!(report.rejects[0].reason.starts_with("malformed row"));
            }
            ParseOutcome::Accepted { .. } => panic!("accepted malformed JSON"),
        }
    }

    #[test]
    fn unknown_doc_type_is_reported() {
        let pubs = r#"{"pub_id":"P1","year":2001,"doc_type":"monograph","subject_categories":["C1"],"citations":0,"authors":[{"researcher_id":null,"university_id":null}]}"#;
        match parse(pubs, ROSTER, SDS_MAP, ParseMode::Strict) {
            ParseOutcome::Rejected(report) => {
                assert!(report.rejects[0].reason.contains("unknown doc_type"));
            }
            ParseOutcome::Accepted { .. } => panic!("accepted unknown doc_type"),
        }
    }

    #[test]
    fn affiliation_mismatch_is_rejected() {
        // R1 is rostered at U1 in 2001 but the byline claims U2.
        let pubs = r#"{"pub_id":"P1","year":2001,"doc_type":"article","subject_categories":["C1"],"citations":0,"authors":[{"researcher_id":"R1","university_id":"U2"}]}"#;
        match parse(pubs, ROSTER, SDS_MAP, ParseMode::Strict) {
            ParseOutcome::Rejected(report) => {
                assert!(report.rejects[0].reason.contains("roster"), "{report:?}");
            }
            ParseOutcome::Accepted { .. } => panic!("accepted contradictory affiliation"),
        }
    }

    #[test]
    fn bad_csv_header_rejects_file() {
        let roster = "researcher,year\nR1,2001\n";
        match parse("", roster, SDS_MAP, ParseMode::Strict) {
            ParseOutcome::Rejected(report) => {
                assert_eq!(report.rejects[0].line, 1);
                assert!(report.rejects[0].reason.contains("bad header"));
            }
            ParseOutcome::Accepted { .. } => panic!("accepted bad header"),
        }
    }

    #[test]
    fn empty_inputs_build_an_empty_corpus() {
        match parse("", "", "", ParseMode::Strict) {
            ParseOutcome::Accepted { corpus, report } => {
                assert!(report.is_clean());
                assert!(corpus.publications().is_empty());
                assert!(corpus.roster().is_empty());
            }
            ParseOutcome::Rejected(report) => panic!("rejected empties: {report:?}"),
        }
    }
}
