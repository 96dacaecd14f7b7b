//! Publication and roster data model: parsing, validation, indexing, and
//! the corpus-level queries every indicator is built on (FTE staff,
//! deduplicated portfolios, the field-inclusion filter).

mod parse;

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{Error, Result};

pub use parse::{
    parse_corpus, InputKind, ParseMode, ParseOutcome, RejectedRow, ValidationReport,
};

/// Indexed document kinds; everything else is outside the corpus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DocType {
    Article,
    Review,
    Proceedings,
}

impl DocType {
    pub fn parse(s: &str) -> Option<DocType> {
        match s {
            "article" => Some(DocType::Article),
            "review" => Some(DocType::Review),
            "proceedings" => Some(DocType::Proceedings),
            _ => None,
        }
    }
}

impl fmt::Display for DocType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DocType::Article => "article",
            DocType::Review => "review",
            DocType::Proceedings => "proceedings",
        })
    }
}

/// One byline slot, in byline order. `researcher_id` is null for authors
/// outside the roster (e.g. foreign co-authors); `university_id` may still
/// be present in that case.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuthorSlot {
    pub researcher_id: Option<String>,
    pub university_id: Option<String>,
}

/// One indexed publication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PublicationRecord {
    pub pub_id: String,
    pub year: i32,
    pub doc_type: DocType,
    pub subject_categories: Vec<String>,
    pub citations: u32,
    /// Byline order is significant.
    pub authors: Vec<AuthorSlot>,
}

/// One researcher-year affiliation. `uda_code` is derived from the static
/// SDS-to-UDA map at build time.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RosterEntry {
    pub researcher_id: String,
    pub year: i32,
    pub university_id: String,
    pub sds_code: String,
    pub uda_code: String,
}

/// External-format roster row, before UDA derivation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RosterRow {
    pub researcher_id: String,
    pub year: i32,
    pub university_id: String,
    pub sds_code: String,
}

#[derive(Debug, Default)]
struct PairData {
    /// Roster person-years at this (university, SDS).
    person_years: u32,
    /// Publication indexes, ascending (hence ascending pub_id), each at
    /// most once no matter how many co-authors qualify.
    portfolio: Vec<usize>,
}

/// Immutable, fully indexed corpus. Construction validates every record;
/// all queries after that are infallible lookups. Safe to share across
/// threads.
#[derive(Debug)]
pub struct Corpus {
    publications: Vec<PublicationRecord>,
    roster: Vec<RosterEntry>,
    sds_to_uda: BTreeMap<String, String>,
    config: RunConfig,
    pub_by_id: HashMap<String, usize>,
    roster_by_researcher_year: HashMap<(String, i32), usize>,
    pairs: BTreeMap<(String, String), PairData>,
    /// Distinct researchers ever rostered per SDS over the window.
    researchers_by_sds: BTreeMap<String, BTreeSet<String>>,
    /// Researchers appearing in at least one byline.
    publishing_researchers: HashSet<String>,
}

impl PartialEq for Corpus {
    fn eq(&self, other: &Self) -> bool {
        self.publications == other.publications
            && self.roster == other.roster
            && self.sds_to_uda == other.sds_to_uda
            && self.config == other.config
    }
}

impl Corpus {
    /// Builds a corpus from pre-validated records. Callers that need row-level
    /// diagnostics should go through [`parse_corpus`] instead; this entry
    /// point re-checks the invariants and fails on the first violation.
    pub fn from_records(
        publications: Vec<PublicationRecord>,
        roster_rows: Vec<RosterRow>,
        sds_to_uda: BTreeMap<String, String>,
        config: RunConfig,
    ) -> Result<Corpus> {
        config.validate()?;
        let report = parse::validate_records(&publications, &roster_rows, &sds_to_uda, &config);
        if let Some(first) = report.rejects.first() {
            return Err(Error::BadInput {
                path: format!("{}", first.file).into(),
                reason: format!("record {}: {}", first.line, first.reason),
            });
        }
        Ok(Self::build_unchecked(
            publications,
            roster_rows,
            sds_to_uda,
            config,
        ))
    }

    /// Assembles indexes from records already known to satisfy every
    /// invariant. Indexes do not depend on input order: records are sorted
    /// by their natural keys first.
    pub(crate) fn build_unchecked(
        mut publications: Vec<PublicationRecord>,
        roster_rows: Vec<RosterRow>,
        sds_to_uda: BTreeMap<String, String>,
        config: RunConfig,
    ) -> Corpus {
        publications.sort_by(|a, b| a.pub_id.cmp(&b.pub_id));
        let mut roster: Vec<RosterEntry> = roster_rows
            .into_iter()
            .map(|r| {
                let uda_code = sds_to_uda
                    .get(&r.sds_code)
                    .expect("validated sds_code")
                    .clone();
                RosterEntry {
                    researcher_id: r.researcher_id,
                    year: r.year,
                    university_id: r.university_id,
                    sds_code: r.sds_code,
                    uda_code,
                }
            })
            .collect();
        roster.sort_by(|a, b| {
            (&a.researcher_id, a.year).cmp(&(&b.researcher_id, b.year))
        });

        let pub_by_id: HashMap<String, usize> = publications
            .iter()
            .enumerate()
            .map(|(i, p)| (p.pub_id.clone(), i))
            .collect();
        let roster_by_researcher_year: HashMap<(String, i32), usize> = roster
            .iter()
            .enumerate()
            .map(|(i, r)| ((r.researcher_id.clone(), r.year), i))
            .collect();

        let mut pairs: BTreeMap<(String, String), PairData> = BTreeMap::new();
        let mut researchers_by_sds: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        for entry in &roster {
            let key = (entry.university_id.clone(), entry.sds_code.clone());
            pairs.entry(key).or_default().person_years += 1;
            researchers_by_sds
                .entry(entry.sds_code.clone())
                .or_default()
                .insert(entry.researcher_id.clone());
        }

        let mut publishing_researchers: HashSet<String> = HashSet::new();
        let mut portfolio_sets: HashMap<(String, String), BTreeSet<usize>> = HashMap::new();
        for (idx, publication) in publications.iter().enumerate() {
            for slot in &publication.authors {
                let Some(researcher) = slot.researcher_id.as_deref() else {
                    continue;
                };
                publishing_researchers.insert(researcher.to_string());
                if let Some(&ri) =
                    roster_by_researcher_year.get(&(researcher.to_string(), publication.year))
                {
                    let entry = &roster[ri];
                    portfolio_sets
                        .entry((entry.university_id.clone(), entry.sds_code.clone()))
                        .or_default()
                        .insert(idx);
                }
            }
        }
        for (key, set) in portfolio_sets {
            pairs.entry(key).or_default().portfolio = set.into_iter().collect();
        }

        Corpus {
            publications,
            roster,
            sds_to_uda,
            config,
            pub_by_id,
            roster_by_researcher_year,
            pairs,
            researchers_by_sds,
            publishing_researchers,
        }
    }

    pub fn config(&self) -> &RunConfig {
        &self.config
    }

    pub fn publications(&self) -> &[PublicationRecord] {
        &self.publications
    }

    pub fn roster(&self) -> &[RosterEntry] {
        &self.roster
    }

    pub fn sds_to_uda(&self) -> &BTreeMap<String, String> {
        &self.sds_to_uda
    }

    pub fn publication(&self, pub_id: &str) -> Option<&PublicationRecord> {
        self.pub_by_id.get(pub_id).map(|&i| &self.publications[i])
    }

    pub fn publication_at(&self, index: usize) -> &PublicationRecord {
        &self.publications[index]
    }

    /// Roster entry for a researcher in a given year, if any.
    pub fn roster_entry(&self, researcher_id: &str, year: i32) -> Option<&RosterEntry> {
        self.roster_by_researcher_year
            .get(&(researcher_id.to_string(), year))
            .map(|&i| &self.roster[i])
    }

    /// Every (university, SDS) pair with at least one roster entry, in
    /// lexicographic order.
    pub fn institution_field_pairs(&self) -> impl Iterator<Item = (&str, &str)> {
        self.pairs.keys().map(|(u, s)| (u.as_str(), s.as_str()))
    }

    /// Full-time-equivalent research staff of a university in an SDS:
    /// roster person-years divided by the window length. Absent pairs
    /// yield 0.
    pub fn fte_staff(&self, university: &str, sds: &str) -> f64 {
        let key = (university.to_string(), sds.to_string());
        match self.pairs.get(&key) {
            Some(pair) => f64::from(pair.person_years) / f64::from(self.config.window_len()),
            None => 0.0,
        }
    }

    /// Deduplicated publication portfolio of a (university, SDS): indexes of
    /// publications with at least one author rostered there in the
    /// publication's year. A publication co-authored by several researchers
    /// of the same pair appears once.
    pub fn portfolio(&self, university: &str, sds: &str) -> &[usize] {
        let key = (university.to_string(), sds.to_string());
        self.pairs.get(&key).map_or(&[], |p| &p.portfolio)
    }

    /// SDS codes whose nation-wide share of rostered researchers with at
    /// least one publication meets `min_active_share`. Fields with no
    /// researchers are excluded.
    pub fn active_fields(&self) -> BTreeSet<String> {
        self.researchers_by_sds
            .iter()
            .filter(|(_, researchers)| {
                if researchers.is_empty() {
                    return false;
                }
                let publishing = researchers
                    .iter()
                    .filter(|r| self.publishing_researchers.contains(*r))
                    .count();
                publishing as f64 / researchers.len() as f64 >= self.config.min_active_share
            })
            .map(|(sds, _)| sds.clone())
            .collect()
    }

    /// True when any byline researcher is rostered, in the publication's
    /// year, in a field that follows life-science byline practice. Branch
    /// selection is a property of the publication so that credit fractions
    /// partition across institutions.
    pub fn uses_life_science_weighting(
        &self,
        publication: &PublicationRecord,
        life_science_sds: &BTreeSet<String>,
    ) -> bool {
        publication.authors.iter().any(|slot| {
            slot.researcher_id
                .as_deref()
                .and_then(|r| self.roster_entry(r, publication.year))
                .is_some_and(|e| life_science_sds.contains(&e.sds_code))
        })
    }

    /// Serializes the corpus back to its three external files
    /// (`publications.jsonl`, `roster.csv`, `sds_map.csv`) with stable
    /// ordering, so a re-parse reconstructs an identical corpus.
    pub fn write_files(&self, dir: &Path) -> Result<()> {
        let pubs_path = dir.join("publications.jsonl");
        let mut pubs = std::io::BufWriter::new(
            std::fs::File::create(&pubs_path).map_err(|e| Error::io(&pubs_path, e))?,
        );
        for publication in &self.publications {
            let line = serde_json::to_string(publication)
                .map_err(|e| Error::io(&pubs_path, e.into()))?;
            writeln!(pubs, "{line}").map_err(|e| Error::io(&pubs_path, e))?;
        }
        pubs.flush().map_err(|e| Error::io(&pubs_path, e))?;

        let roster_path = dir.join("roster.csv");
        let mut w = csv::Writer::from_path(&roster_path).map_err(|e| {
            Error::BadInput {
                path: roster_path.clone(),
                reason: e.to_string(),
            }
        })?;
        w.write_record(["researcher_id", "year", "university_id", "sds_code"])
            .and_then(|()| {
                self.roster.iter().try_for_each(|r| {
                    w.write_record([
                        r.researcher_id.as_str(),
                        &r.year.to_string(),
                        r.university_id.as_str(),
                        r.sds_code.as_str(),
                    ])
                })
            })
            .map_err(|e| Error::BadInput {
                path: roster_path.clone(),
                reason: e.to_string(),
            })?;
        w.flush().map_err(|e| Error::io(&roster_path, e))?;

        let map_path = dir.join("sds_map.csv");
        let mut w = csv::Writer::from_path(&map_path).map_err(|e| Error::BadInput {
            path: map_path.clone(),
            reason: e.to_string(),
        })?;
        w.write_record(["sds_code", "uda_code"])
            .and_then(|()| {
                self.sds_to_uda
                    .iter()
                    .try_for_each(|(s, u)| w.write_record([s.as_str(), u.as_str()]))
            })
            .map_err(|e| Error::BadInput {
                path: map_path.clone(),
                reason: e.to_string(),
            })?;
        w.flush().map_err(|e| Error::io(&map_path, e))?;
        Ok(())
    }
}

#[cfg(test)]
pub(crate) mod test_support {
    use super::*;

    pub type PubRow<'a> = (
        &'a str,
        i32,
        &'a str,
        &'a [&'a str],
        i64,
        &'a [(Option<&'a str>, Option<&'a str>)],
    );

    /// Builds a corpus from terse row tuples with the default config,
    /// panicking on any invalid row.
    pub fn corpus_from_rows(
        pubs: &[PubRow<'_>],
        roster: &[(&str, i32, &str, &str)],
        sds_map: &[(&str, &str)],
    ) -> Corpus {
        corpus_from_rows_with_config(pubs, roster, sds_map, RunConfig::default())
    }

    pub fn corpus_from_rows_with_config(
        pubs: &[PubRow<'_>],
        roster: &[(&str, i32, &str, &str)],
        sds_map: &[(&str, &str)],
        config: RunConfig,
    ) -> Corpus {
        let publications = pubs
            .iter()
            .map(|(id, year, doc, cats, citations, authors)| PublicationRecord {
                pub_id: (*id).to_string(),
                year: *year,
                doc_type: DocType::parse(doc).expect("doc type"),
                subject_categories: cats.iter().map(|c| (*c).to_string()).collect(),
                citations: u32::try_from(*citations).expect("non-negative citations"),
                authors: authors
                    .iter()
                    .map(|(r, u)| AuthorSlot {
                        researcher_id: r.map(String::from),
                        university_id: u.map(String::from),
                    })
                    .collect(),
            })
            .collect();
        let roster_rows = roster
            .iter()
            .map(|(r, y, u, s)| RosterRow {
                researcher_id: (*r).to_string(),
                year: *y,
                university_id: (*u).to_string(),
                sds_code: (*s).to_string(),
            })
            .collect();
        let map = sds_map
            .iter()
            .map(|(s, u)| ((*s).to_string(), (*u).to_string()))
            .collect();
        Corpus::from_records(publications, roster_rows, map, config).expect("valid fixture")
    }
}

#[cfg(test)]
mod tests {
    use super::test_support::corpus_from_rows;
    use super::*;

    fn five_year_fixture() -> Corpus {
        corpus_from_rows(
            &[
                (
                    "P1",
                    2001,
                    "article",
                    &["C1"],
                    4,
                    &[(Some("R1"), Some("U1")), (Some("R2"), Some("U1"))],
                ),
                ("P2", 2003, "review", &["C1", "C2"], 0, &[(Some("R2"), Some("U1"))]),
                ("P3", 2002, "proceedings", &["C2"], 7, &[(None, Some("UX"))]),
            ],
            &[
                ("R1", 2001, "U1", "FIS/01"),
                ("R1", 2002, "U1", "FIS/01"),
                ("R1", 2003, "U1", "FIS/01"),
                ("R1", 2004, "U1", "FIS/01"),
                ("R1", 2005, "U1", "FIS/01"),
                ("R2", 2001, "U1", "FIS/01"),
                ("R2", 2002, "U1", "FIS/01"),
                ("R2", 2003, "U1", "FIS/01"),
                ("R3", 2001, "U2", "FIS/01"),
            ],
            &[("FIS/01", "FIS")],
        )
    }

    #[test]
    fn fte_counts_person_years_over_window() {
        let corpus = five_year_fixture();
        // R1 all five years (1.0) plus R2 three of five (0.6).
        assert!((corpus.fte_staff("U1", "FIS/01") - 1.6).abs() < 1e-12);
        assert!((corpus.fte_staff("U2", "FIS/01") - 0.2).abs() < 1e-12);
        assert_eq!(corpus.fte_staff("U9", "FIS/01"), 0.0);
    }

    #[test]
    fn fte_partitions_roster_person_years() {
        let corpus = five_year_fixture();
        let total: f64 = corpus
            .institution_field_pairs()
            .map(|(u, s)| corpus.fte_staff(u, s))
            .sum();
        let expected = corpus.roster().len() as f64 / 5.0;
        assert!((total - expected).abs() < 1e-12);
    }

    #[test]
    fn portfolio_deduplicates_co_authored_publications() {
        let corpus = five_year_fixture();
        // P1 is co-signed by R1 and R2, both at (U1, FIS/01) in 2001: one entry.
        let portfolio = corpus.portfolio("U1", "FIS/01");
        let ids: Vec<&str> = portfolio
            .iter()
            .map(|&i| corpus.publication_at(i).pub_id.as_str())
            .collect();
        assert_eq!(ids, vec!["P1", "P2"]);
    }

    #[test]
    fn portfolio_absent_pair_is_empty() {
        let corpus = five_year_fixture();
        assert!(corpus.portfolio("U2", "FIS/01").is_empty());
        assert!(corpus.portfolio("U7", "MAT/01").is_empty());
    }

    #[test]
    fn portfolio_members_have_a_qualifying_author() {
        let corpus = five_year_fixture();
        for (u, s) in corpus.institution_field_pairs() {
            for &idx in corpus.portfolio(u, s) {
                let publication = corpus.publication_at(idx);
                let qualifies = publication.authors.iter().any(|slot| {
                    slot.researcher_id
                        .as_deref()
                        .and_then(|r| corpus.roster_entry(r, publication.year))
                        .is_some_and(|e| e.university_id == u && e.sds_code == s)
                });
                assert!(qualifies, "{} in ({u}, {s})", publication.pub_id);
            }
        }
    }

    #[test]
    fn active_fields_honors_share_threshold() {
        // FIS/01 has researchers R1, R2, R3; R1 and R2 publish -> 2/3 >= 0.5.
        let corpus = five_year_fixture();
        assert!(corpus.active_fields().contains("FIS/01"));

        // Flip the balance: 1 publisher out of 3.
        let corpus = corpus_from_rows(
            &[("P1", 2001, "article", &["C1"], 1, &[(Some("R1"), Some("U1"))])],
            &[
                ("R1", 2001, "U1", "FIS/01"),
                ("R2", 2001, "U1", "FIS/01"),
                ("R3", 2001, "U2", "FIS/01"),
            ],
            &[("FIS/01", "FIS")],
        );
        assert!(!corpus.active_fields().contains("FIS/01"));
    }

    #[test]
    fn field_with_no_researchers_is_excluded() {
        let corpus = corpus_from_rows(
            &[],
            &[("R1", 2001, "U1", "FIS/01")],
            &[("FIS/01", "FIS"), ("MAT/01", "MAT")],
        );
        // MAT/01 never appears on the roster: not even a candidate.
        assert!(!corpus.active_fields().contains("MAT/01"));
    }

    #[test]
    fn roster_entry_lookup() {
        let corpus = five_year_fixture();
        let entry = corpus.roster_entry("R2", 2002).unwrap();
        assert_eq!(entry.university_id, "U1");
        assert_eq!(entry.uda_code, "FIS");
        assert!(corpus.roster_entry("R2", 2004).is_none());
        assert!(corpus.roster_entry("R9", 2001).is_none());
    }

    #[test]
    fn build_is_order_independent() {
        let a = five_year_fixture();
        // Same records, reversed input order.
        let mut pubs: Vec<PublicationRecord> = a.publications().to_vec();
        pubs.reverse();
        let mut rows: Vec<RosterRow> = a
            .roster()
            .iter()
            .map(|r| RosterRow {
                researcher_id: r.researcher_id.clone(),
                year: r.year,
                university_id: r.university_id.clone(),
                sds_code: r.sds_code.clone(),
            })
            .collect();
        rows.reverse();
        let b = Corpus::from_records(
            pubs,
            rows,
            a.sds_to_uda().clone(),
            a.config().clone(),
        )
        .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn write_then_reparse_round_trips() {
        let corpus = five_year_fixture();
        let dir = tempfile::tempdir().unwrap();
        corpus.write_files(dir.path()).unwrap();
        let outcome = parse_corpus(
            std::fs::File::open(dir.path().join("publications.jsonl")).unwrap(),
            std::fs::File::open(dir.path().join("roster.csv")).unwrap(),
            std::fs::File::open(dir.path().join("sds_map.csv")).unwrap(),
            corpus.config().clone(),
            ParseMode::Strict,
        )
        .unwrap();
        match outcome {
            ParseOutcome::Accepted { corpus: reparsed, .. } => assert_eq!(corpus, reparsed),
            ParseOutcome::Rejected(report) => panic!("round-trip rejected: {report:?}"),
        }
    }
}
