//! Portfolio indicators: h index, g index, field-year citation medians,
//! normalized citations, and the three staff-scaled institution-field
//! scores.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::corpus::{Corpus, PublicationRecord};
use crate::credit::{institution_fraction, CreditConfig};
use crate::error::{Error, Result};

/// Largest h such that at least h of the counts are >= h. Zero for empty
/// input.
pub fn h_index(citation_counts: &[u32]) -> u32 {
    let mut sorted = citation_counts.to_vec();
    sorted.sort_unstable_by(|a, b| b.cmp(a));
    let mut h = 0u32;
    for (i, &c) in sorted.iter().enumerate() {
        let rank = (i + 1) as u32;
        if c >= rank {
            h = rank;
        } else {
            break;
        }
    }
    h
}

/// Largest g <= n such that the g most-cited counts together reach g².
/// Zero for empty input. g never exceeds the number of works: no
/// fictitious zero-citation extension.
pub fn g_index(citation_counts: &[u32]) -> u32 {
    let mut sorted = citation_counts.to_vec();
    sorted.sort_unstable_by(|a, b| b.cmp(a));
    let mut g = 0u32;
    let mut cumulative = 0u64;
    for (i, &c) in sorted.iter().enumerate() {
        let rank = (i + 1) as u64;
        cumulative += u64::from(c);
        if cumulative >= rank * rank {
            g = rank as u32;
        }
    }
    g
}

/// Citation medians of cited-only publications per (year, subject
/// category) stratum, with a per-year fallback for strata that have no
/// cited publication, and a terminal fallback of 1.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldMedianTable {
    by_year_category: BTreeMap<(i32, String), f64>,
    by_year: BTreeMap<i32, f64>,
}

fn median_of_sorted(counts: &[u32]) -> f64 {
    let n = counts.len();
    if n % 2 == 1 {
        f64::from(counts[n / 2])
    } else {
        (f64::from(counts[n / 2 - 1]) + f64::from(counts[n / 2])) / 2.0
    }
}

impl FieldMedianTable {
    /// Builds the table over the whole corpus. Only cited publications
    /// (citations >= 1) enter a stratum; a publication indexed in several
    /// categories enters each of them.
    pub fn build(corpus: &Corpus) -> FieldMedianTable {
        let mut strata: BTreeMap<(i32, String), Vec<u32>> = BTreeMap::new();
        let mut yearly: BTreeMap<i32, Vec<u32>> = BTreeMap::new();
        for publication in corpus.publications() {
            if publication.citations == 0 {
                continue;
            }
            yearly
                .entry(publication.year)
                .or_default()
                .push(publication.citations);
            for category in &publication.subject_categories {
                strata
                    .entry((publication.year, category.clone()))
                    .or_default()
                    .push(publication.citations);
            }
        }
        let by_year_category = strata
            .into_iter()
            .map(|(key, mut counts)| {
                counts.sort_unstable();
                (key, median_of_sorted(&counts))
            })
            .collect();
        let by_year = yearly
            .into_iter()
            .map(|(year, mut counts)| {
                counts.sort_unstable();
                (year, median_of_sorted(&counts))
            })
            .collect();
        FieldMedianTable {
            by_year_category,
            by_year,
        }
    }

    /// Median for one (year, category), resolved through the fallback
    /// chain: stratum median, year-level median, 1.
    pub fn median_for(&self, year: i32, category: &str) -> f64 {
        if let Some(&m) = self.by_year_category.get(&(year, category.to_string())) {
            return m;
        }
        self.by_year.get(&year).copied().unwrap_or(1.0)
    }

    pub fn stratum_count(&self) -> usize {
        self.by_year_category.len()
    }
}

/// Citations of one publication divided by its expected median. For a
/// publication indexed in several categories the divisor is the arithmetic
/// mean of the categories' medians. Uncited publications normalize to 0.
pub fn normalized_citation(publication: &PublicationRecord, table: &FieldMedianTable) -> f64 {
    if publication.citations == 0 {
        return 0.0;
    }
    let medians: Vec<f64> = publication
        .subject_categories
        .iter()
        .map(|c| table.median_for(publication.year, c))
        .collect();
    let me = medians.iter().sum::<f64>() / medians.len() as f64;
    f64::from(publication.citations) / me
}

/// The three staff-scaled scores of one (university, SDS).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InstitutionFieldScore {
    pub university_id: String,
    pub sds_code: String,
    /// Full-time-equivalent research staff over the window.
    pub rs: f64,
    /// Portfolio size.
    pub n_pubs: usize,
    pub h: u32,
    pub g: u32,
    pub p_h: f64,
    pub p_g: f64,
    pub p_fss: f64,
}

/// Kahan compensated sum; the running error term keeps the result stable
/// to well below 1e-12 relative regardless of magnitude spread.
fn compensated_sum(terms: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut compensation = 0.0;
    for term in terms {
        let y = term - compensation;
        let t = sum + y;
        compensation = (t - sum) - y;
        sum = t;
    }
    sum
}

/// Scores one (university, SDS): h and g over the deduplicated portfolio's
/// citation counts, and FSS as the staff-scaled sum of normalized citations
/// weighted by the institution's credit fraction. The portfolio is
/// traversed in pub_id order so the float accumulation is reproducible.
pub fn score_institution_field(
    corpus: &Corpus,
    university: &str,
    sds: &str,
    table: &FieldMedianTable,
    credit_config: &CreditConfig,
) -> Result<InstitutionFieldScore> {
    let rs = corpus.fte_staff(university, sds);
    if rs <= 0.0 {
        return Err(Error::ZeroFte {
            university: university.to_string(),
            sds: sds.to_string(),
        });
    }
    let portfolio = corpus.portfolio(university, sds);
    let counts: Vec<u32> = portfolio
        .iter()
        .map(|&i| corpus.publication_at(i).citations)
        .collect();
    let h = h_index(&counts);
    let g = g_index(&counts);

    let mut terms: Vec<f64> = Vec::with_capacity(portfolio.len());
    for &idx in portfolio {
        let publication = corpus.publication_at(idx);
        let fraction = institution_fraction(publication, university, sds, corpus, credit_config)?;
        terms.push(normalized_citation(publication, table) * fraction);
    }
    let p_fss = compensated_sum(terms.into_iter()) / rs;

    Ok(InstitutionFieldScore {
        university_id: university.to_string(),
        sds_code: sds.to_string(),
        rs,
        n_pubs: portfolio.len(),
        h,
        g,
        p_h: f64::from(h) / rs,
        p_g: f64::from(g) / rs,
        p_fss,
    })
}

/// Summary of `score_all`: scores sorted by (university, SDS) plus the
/// activity-filter tally.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoreSet {
    pub scores: Vec<InstitutionFieldScore>,
    /// SDS codes dropped by the activity filter.
    pub inactive_sds: Vec<String>,
    /// SDS codes that passed it.
    pub active_sds: Vec<String>,
}

/// Scores every (university, SDS) pair with positive staff in an active
/// field. Pairs are scored in parallel; the output order and every float
/// are independent of the worker count.
pub fn score_all(corpus: &Corpus, table: &FieldMedianTable) -> Result<ScoreSet> {
    let active = corpus.active_fields();
    let credit_config = &corpus.config().credit;
    let pairs: Vec<(String, String)> = corpus
        .institution_field_pairs()
        .filter(|(_, s)| active.contains(*s))
        .map(|(u, s)| (u.to_string(), s.to_string()))
        .collect();
    let scores: Vec<InstitutionFieldScore> = pairs
        .par_iter()
        .map(|(u, s)| score_institution_field(corpus, u, s, table, credit_config))
        .collect::<Result<Vec<_>>>()?;

    let all_sds: std::collections::BTreeSet<String> = corpus
        .roster()
        .iter()
        .map(|r| r.sds_code.clone())
        .collect();
    let inactive_sds: Vec<String> = all_sds.difference(&active).cloned().collect();
    Ok(ScoreSet {
        scores,
        inactive_sds,
        active_sds: active.into_iter().collect(),
    })
}
