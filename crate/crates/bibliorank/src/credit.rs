//! Per-author byline weights and institution-field fractional contributions.
//!
//! Outside the life sciences (and for bylines of one or two authors) every
//! co-author receives an equal share. In the life sciences with more than
//! two authors, credit follows byline position and depends on whether the
//! first and last authors share a university (intra-mural) or not
//! (extra-mural). The percentages are configurable to suit other national
//! practices.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::corpus::{AuthorSlot, Corpus, PublicationRecord};
use crate::error::{Error, Result};

const WEIGHT_SUM_TOLERANCE: f64 = 1e-9;

/// Byline credit weighting parameters.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CreditConfig {
    /// Fields whose bylines use position weighting.
    pub life_science_sds: BTreeSet<String>,
    /// First and last author share, intra-mural branch.
    pub w_first_last_intra: f64,
    /// Share split among all other authors, intra-mural branch.
    pub w_rest_intra: f64,
    /// First and last author share, extra-mural branch.
    pub w_first_last_extra: f64,
    /// Second and second-to-last author share, extra-mural branch.
    pub w_second_penult_extra: f64,
    /// Share split among the remaining authors, extra-mural branch.
    pub w_rest_extra: f64,
}

impl Default for CreditConfig {
    fn default() -> Self {
        CreditConfig {
            life_science_sds: BTreeSet::new(),
            w_first_last_intra: 0.40,
            w_rest_intra: 0.20,
            w_first_last_extra: 0.30,
            w_second_penult_extra: 0.15,
            w_rest_extra: 0.10,
        }
    }
}

impl CreditConfig {
    /// Checks that each branch's role weights partition the whole:
    /// 2·w_first_last_intra + w_rest_intra = 1 and
    /// 2·w_first_last_extra + 2·w_second_penult_extra + w_rest_extra = 1.
    pub fn validate(&self) -> Result<()> {
        let intra = 2.0 * self.w_first_last_intra + self.w_rest_intra;
        if (intra - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
            return Err(Error::Config(format!(
                "intra-mural weights sum to {intra}, expected 1"
            )));
        }
        let extra =
            2.0 * self.w_first_last_extra + 2.0 * self.w_second_penult_extra + self.w_rest_extra;
        if (extra - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
            return Err(Error::Config(format!(
                "extra-mural weights sum to {extra}, expected 1"
            )));
        }
        let all = [
            self.w_first_last_intra,
            self.w_rest_intra,
            self.w_first_last_extra,
            self.w_second_penult_extra,
            self.w_rest_extra,
        ];
        if all.iter().any(|w| *w < 0.0) {
            return Err(Error::Config("credit weights must be non-negative".into()));
        }
        Ok(())
    }

    pub fn is_life_science(&self, sds_code: &str) -> bool {
        self.life_science_sds.contains(sds_code)
    }
}

/// Per-slot credit shares for one byline; always sums to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    pub fn weights(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn sum(&self) -> f64 {
        self.0.iter().sum()
    }
}

/// Computes the credit share of every byline slot.
///
/// Uniform 1/n whenever the field is not a life science or the byline has
/// at most two authors. Otherwise the intra-mural branch applies when the
/// first and last slots carry the same non-null university, the extra-mural
/// branch when they do not (a null affiliation cannot certify sameness).
/// Short extra-mural bylines (n = 3 or 4) have overlapping role positions
/// and no "others"; each slot accumulates every role it occupies and the
/// vector is renormalized to sum to 1.
pub fn author_weights(
    byline: &[AuthorSlot],
    is_life_science: bool,
    config: &CreditConfig,
) -> Result<WeightVector> {
    let n = byline.len();
    if n == 0 {
        return Err(Error::EmptyByline);
    }
    if !is_life_science || n <= 2 {
        return Ok(WeightVector(vec![1.0 / n as f64; n]));
    }

    let first_uni = byline[0].university_id.as_deref();
    let last_uni = byline[n - 1].university_id.as_deref();
    let intra_mural = matches!((first_uni, last_uni), (Some(a), Some(b)) if a == b);

    let mut weights = vec![0.0; n];
    if intra_mural {
        weights[0] += config.w_first_last_intra;
        weights[n - 1] += config.w_first_last_intra;
        // n > 2, so the interior is never empty here.
        let share = config.w_rest_intra / (n - 2) as f64;
        for w in &mut weights[1..n - 1] {
            *w += share;
        }
    } else {
        weights[0] += config.w_first_last_extra;
        weights[n - 1] += config.w_first_last_extra;
        weights[1] += config.w_second_penult_extra;
        weights[n - 2] += config.w_second_penult_extra;
        if n > 4 {
            let share = config.w_rest_extra / (n - 4) as f64;
            for w in &mut weights[2..n - 2] {
                *w += share;
            }
        } else {
            // Overlapping roles, no "others": renormalize to restore sum 1.
            let total: f64 = weights.iter().sum();
            for w in &mut weights {
                *w /= total;
            }
        }
    }
    Ok(WeightVector(weights))
}

/// Fractional contribution of a (university, SDS) to one publication: the
/// sum of byline weights over slots whose researcher is rostered there in
/// the publication's year.
pub fn institution_fraction(
    publication: &PublicationRecord,
    university: &str,
    sds: &str,
    corpus: &Corpus,
    config: &CreditConfig,
) -> Result<f64> {
    let weights = author_weights(
        &publication.authors,
        config.is_life_science(sds),
        config,
    )?;
    let mut fraction = 0.0;
    for (slot, w) in publication.authors.iter().zip(weights.weights()) {
        let Some(researcher) = slot.researcher_id.as_deref() else {
            continue;
        };
        if let Some(entry) = corpus.roster_entry(researcher, publication.year) {
            if entry.university_id == university && entry.sds_code == sds {
                fraction += w;
            }
        }
    }
    Ok(fraction)
}
