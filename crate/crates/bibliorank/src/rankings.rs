//! Ranking-list comparison: Spearman correlation with significance,
//! quartile assignment and shift statistics, national-median crossovers,
//! top-quartile overlap, and the per-SDS / per-UDA comparison report.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::indicators::InstitutionFieldScore;

/// Indicator behind a ranking list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Indicator {
    Fss,
    H,
    G,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankEntry {
    pub university_id: String,
    pub score: f64,
    /// Positional rank 1..n, best first.
    pub rank: usize,
}

/// Score-descending ranking of one SDS's universities. Ties are broken by
/// ascending university id so tables are reproducible; correlation uses
/// average ranks of the raw scores instead (see [`spearman`]).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankingList {
    pub sds_code: String,
    pub indicator: Indicator,
    pub entries: Vec<RankEntry>,
}

impl RankingList {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn universities(&self) -> BTreeSet<&str> {
        self.entries
            .iter()
            .map(|e| e.university_id.as_str())
            .collect()
    }

    fn scores_by_university(&self) -> BTreeMap<&str, f64> {
        self.entries
            .iter()
            .map(|e| (e.university_id.as_str(), e.score))
            .collect()
    }
}

/// Ranks universities by descending score, ascending id on ties.
pub fn rank(
    scores: &BTreeMap<String, f64>,
    sds_code: &str,
    indicator: Indicator,
) -> Result<RankingList> {
    if scores.is_empty() {
        return Err(Error::EmptyScores);
    }
    let mut items: Vec<(&String, &f64)> = scores.iter().collect();
    items.sort_by(|a, b| {
        b.1.partial_cmp(a.1)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.0.cmp(b.0))
    });
    let entries = items
        .into_iter()
        .enumerate()
        .map(|(i, (u, s))| RankEntry {
            university_id: u.clone(),
            score: *s,
            rank: i + 1,
        })
        .collect();
    Ok(RankingList {
        sds_code: sds_code.to_string(),
        indicator,
        entries,
    })
}

/// Mid-rank (average rank) vector of `values`, 1-based; tied values share
/// the mean of the positional ranks they span.
fn average_ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap_or(std::cmp::Ordering::Equal));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        // positions i..=j (0-based) share the average of ranks i+1..=j+1
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = avg;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        let dx = a - mx;
        let dy = b - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Largest list size for which the permutation test is exact.
pub const EXACT_PERMUTATION_MAX_N: usize = 8;

/// Tie-corrected Spearman correlation between the scores behind two
/// ranking lists, with a two-sided p-value: an exact permutation test up
/// to n = 8, the t approximation t = rho·sqrt((n-2)/(1-rho²)) beyond.
///
/// Rho is the Pearson correlation of the average-rank vectors of the raw
/// scores, so arbitrary positional tie-breaks never bias it. Lists whose
/// scores are all tied carry no ranking information; the pair is reported
/// as rho = 0 with p = 1.
pub fn spearman(list_x: &RankingList, list_y: &RankingList) -> Result<(f64, f64)> {
    if list_x.universities() != list_y.universities() {
        return Err(Error::UniversitySetMismatch);
    }
    let n = list_x.len();
    if n < 3 {
        return Err(Error::TooFewUniversities { n, min: 3 });
    }
    let x_scores = list_x.scores_by_university();
    let y_scores = list_y.scores_by_university();
    let mut xs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    for (u, x) in &x_scores {
        xs.push(*x);
        ys.push(y_scores[u]);
    }
    let rx = average_ranks(&xs);
    let ry = average_ranks(&ys);
    let Some(rho) = pearson(&rx, &ry) else {
        return Ok((0.0, 1.0));
    };
    let p = if n <= EXACT_PERMUTATION_MAX_N {
        exact_permutation_p(&rx, &ry, rho)
    } else {
        t_approximation_p(rho, n)
    };
    Ok((rho, p))
}

/// Two-sided exact permutation p-value: the share of permutations of one
/// rank vector whose |rho| reaches the observed |rho|.
pub fn exact_permutation_p(rank_x: &[f64], rank_y: &[f64], observed_rho: f64) -> f64 {
    let n = rank_x.len();
    let threshold = observed_rho.abs() - 1e-12;
    let mut perm: Vec<f64> = rank_y.to_vec();
    let mut counter = vec![0usize; n];
    let mut hits = 0usize;
    let mut total = 0usize;

    let mut tally = |p: &[f64]| {
        total += 1;
        if let Some(r) = pearson(rank_x, p) {
            if r.abs() >= threshold {
                hits += 1;
            }
        } else {
            // Degenerate rank vector: every permutation is equally
            // uninformative, count it as reaching the observed value.
            hits += 1;
        }
    };

    // Heap's algorithm, iterative form.
    tally(&perm);
    let mut i = 0;
    while i < n {
        if counter[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(counter[i], i);
            }
            tally(&perm);
            counter[i] += 1;
            i = 0;
        } else {
            counter[i] = 0;
            i += 1;
        }
    }
    hits as f64 / total as f64
}

/// Two-sided p-value from the Student-t approximation with n-2 degrees of
/// freedom.
pub fn t_approximation_p(rho: f64, n: usize) -> f64 {
    let df = (n - 2) as f64;
    let denom = 1.0 - rho * rho;
    if denom <= 0.0 {
        return 0.0;
    }
    let t = rho * (df / denom).sqrt();
    let dist = StudentsT::new(0.0, 1.0, df).expect("df >= 1");
    (2.0 * (1.0 - dist.cdf(t.abs()))).clamp(0.0, 1.0)
}

/// Quartile per university from positional ranks: ceil(4·rank/n), quartile
/// 1 best. Requires n >= 4.
pub fn quartile_assign(list: &RankingList) -> Result<BTreeMap<String, u8>> {
    let n = list.len();
    if n < 4 {
        return Err(Error::TooFewUniversities { n, min: 4 });
    }
    Ok(list
        .entries
        .iter()
        .map(|e| {
            let q = (4 * e.rank).div_ceil(n) as u8;
            (e.university_id.clone(), q)
        })
        .collect())
}

/// Aggregate quartile-shift statistics between two quartile assignments
/// over the same universities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShiftStats {
    pub n: usize,
    /// Universities whose quartile differs.
    pub changed: usize,
    /// Sum of absolute quartile shifts.
    pub shift_sum: u32,
    pub max_shift: u32,
    /// Universities shifting two or more quartiles.
    pub ge2: usize,
    pub pct_changed: f64,
    pub mean_shift: f64,
    pub pct_shift_ge2: f64,
}

impl ShiftStats {
    pub fn from_tallies(n: usize, changed: usize, shift_sum: u32, max_shift: u32, ge2: usize) -> ShiftStats {
        ShiftStats {
            n,
            changed,
            shift_sum,
            max_shift,
            ge2,
            pct_changed: 100.0 * changed as f64 / n as f64,
            mean_shift: f64::from(shift_sum) / n as f64,
            pct_shift_ge2: 100.0 * ge2 as f64 / n as f64,
        }
    }

    /// Pools raw tallies across strata and recomputes the percentages, so
    /// larger fields weigh more.
    pub fn pool<'a>(parts: impl Iterator<Item = &'a ShiftStats>) -> ShiftStats {
        let mut n = 0;
        let mut changed = 0;
        let mut shift_sum = 0;
        let mut max_shift = 0;
        let mut ge2 = 0;
        for s in parts {
            n += s.n;
            changed += s.changed;
            shift_sum += s.shift_sum;
            max_shift = max_shift.max(s.max_shift);
            ge2 += s.ge2;
        }
        if n == 0 {
            return ShiftStats::from_tallies(1, 0, 0, 0, 0);
        }
        ShiftStats::from_tallies(n, changed, shift_sum, max_shift, ge2)
    }
}

/// Per-university |q_a - q_b| aggregates.
pub fn shift_stats(
    q_a: &BTreeMap<String, u8>,
    q_b: &BTreeMap<String, u8>,
) -> Result<ShiftStats> {
    if q_a.len() != q_b.len() || q_a.keys().ne(q_b.keys()) {
        return Err(Error::UniversitySetMismatch);
    }
    let n = q_a.len();
    let mut changed = 0;
    let mut shift_sum = 0u32;
    let mut max_shift = 0u32;
    let mut ge2 = 0;
    for (u, &qa) in q_a {
        let shift = u32::from(qa.abs_diff(q_b[u]));
        if shift > 0 {
            changed += 1;
        }
        if shift >= 2 {
            ge2 += 1;
        }
        shift_sum += shift;
        max_shift = max_shift.max(shift);
    }
    Ok(ShiftStats::from_tallies(n, changed, shift_sum, max_shift, ge2))
}

fn median(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

/// Universities strictly above the median under `scores_a` that are not
/// strictly above the median under `scores_b`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MedianCrossovers {
    pub count: usize,
    pub universities: Vec<String>,
    /// Population size the medians were taken over.
    pub n: usize,
}

pub fn median_crossovers(
    scores_a: &BTreeMap<String, f64>,
    scores_b: &BTreeMap<String, f64>,
) -> Result<MedianCrossovers> {
    if scores_a.len() != scores_b.len() || scores_a.keys().ne(scores_b.keys()) {
        return Err(Error::UniversitySetMismatch);
    }
    let n = scores_a.len();
    if n < 2 {
        return Err(Error::TooFewUniversities { n, min: 2 });
    }
    let med_a = median(&scores_a.values().copied().collect::<Vec<_>>());
    let med_b = median(&scores_b.values().copied().collect::<Vec<_>>());
    let universities: Vec<String> = scores_a
        .iter()
        .filter(|(u, &a)| a > med_a && scores_b[*u] <= med_b)
        .map(|(u, _)| u.clone())
        .collect();
    Ok(MedianCrossovers {
        count: universities.len(),
        universities,
        n,
    })
}

/// Top-quartile membership under `list_a` lost under `list_b`, as a
/// percentage of `list_a`'s first quartile.
pub fn top_quartile_loss(list_a: &RankingList, list_b: &RankingList) -> Result<f64> {
    let (lost, q1_size) = top_quartile_lost_count(list_a, list_b)?;
    Ok(100.0 * lost as f64 / q1_size as f64)
}

/// (universities in Q1(a) but not Q1(b), size of Q1(a)).
pub fn top_quartile_lost_count(
    list_a: &RankingList,
    list_b: &RankingList,
) -> Result<(usize, usize)> {
    if list_a.universities() != list_b.universities() {
        return Err(Error::UniversitySetMismatch);
    }
    let q_a = quartile_assign(list_a)?;
    let q_b = quartile_assign(list_b)?;
    let q1_a: BTreeSet<&String> = q_a.iter().filter(|(_, &q)| q == 1).map(|(u, _)| u).collect();
    let lost = q1_a.iter().filter(|u| q_b[u.as_str()] != 1).count();
    Ok((lost, q1_a.len()))
}

// ---------------------------------------------------------------------------
// Report assembly
// ---------------------------------------------------------------------------

/// All pairwise comparison statistics for one SDS.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SdsComparison {
    pub sds_code: String,
    pub uda_code: String,
    pub n_universities: usize,
    pub rho_fss_h: f64,
    pub p_fss_h: f64,
    pub rho_fss_g: f64,
    pub p_fss_g: f64,
    pub rho_h_g: f64,
    pub p_h_g: f64,
    pub shifts_fss_h: ShiftStats,
    pub shifts_fss_g: ShiftStats,
    pub crossovers_fss_h: MedianCrossovers,
    pub crossovers_fss_g: MedianCrossovers,
    /// Size of the FSS first quartile.
    pub q1_size: usize,
    pub top_lost_fss_h: usize,
    pub top_lost_fss_g: usize,
    pub top_loss_pct_fss_h: f64,
    pub top_loss_pct_fss_g: f64,
}

/// Average correlation over the SDSs where a pair's correlation is
/// meaningful (p below the configured threshold). Both averaging
/// conventions are reported: equal SDS weight and university-count weight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CorrelationAverage {
    /// SDSs passing the p-value filter for this pair.
    pub n_meaningful: usize,
    /// SDSs considered.
    pub n_total: usize,
    pub mean_rho: Option<f64>,
    pub weighted_mean_rho: Option<f64>,
}

impl CorrelationAverage {
    fn over(items: &[(f64, f64, usize)], threshold: f64) -> CorrelationAverage {
        // items: (rho, p, n_universities)
        let meaningful: Vec<&(f64, f64, usize)> =
            items.iter().filter(|(_, p, _)| *p < threshold).collect();
        let n_meaningful = meaningful.len();
        let mean_rho = if n_meaningful > 0 {
            Some(meaningful.iter().map(|(r, _, _)| r).sum::<f64>() / n_meaningful as f64)
        } else {
            None
        };
        let weight: usize = meaningful.iter().map(|(_, _, n)| n).sum();
        let weighted_mean_rho = if weight > 0 {
            Some(
                meaningful
                    .iter()
                    .map(|(r, _, n)| r * *n as f64)
                    .sum::<f64>()
                    / weight as f64,
            )
        } else {
            None
        };
        CorrelationAverage {
            n_meaningful,
            n_total: items.len(),
            mean_rho,
            weighted_mean_rho,
        }
    }
}

/// Pooled statistics for one UDA (or for the whole corpus).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UdaAggregate {
    pub uda_code: String,
    /// SDSs analyzed in this UDA.
    pub n_sds: usize,
    /// Pooled institution-SDS observations.
    pub n_observations: usize,
    pub corr_fss_h: CorrelationAverage,
    pub corr_fss_g: CorrelationAverage,
    pub corr_h_g: CorrelationAverage,
    pub shifts_fss_h: ShiftStats,
    pub shifts_fss_g: ShiftStats,
    pub crossovers_fss_h: usize,
    pub crossovers_fss_g: usize,
    pub q1_size: usize,
    pub top_lost_fss_h: usize,
    pub top_lost_fss_g: usize,
    pub top_loss_pct_fss_h: f64,
    pub top_loss_pct_fss_g: f64,
}

/// Filter bookkeeping: how many fields survived each cut.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportTallies {
    /// SDSs present in the score set.
    pub sds_with_scores: usize,
    /// SDSs with at least `min_universities` universities.
    pub sds_analyzed: usize,
    pub sds_excluded_small: Vec<String>,
    pub min_universities: usize,
    pub p_value_threshold: f64,
}

/// Full comparison report: per-SDS records, per-UDA aggregates, corpus-wide
/// totals, and filter tallies.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub per_sds: Vec<SdsComparison>,
    pub per_uda: Vec<UdaAggregate>,
    pub totals: UdaAggregate,
    pub tallies: ReportTallies,
}

fn compare_one_sds(
    sds_code: &str,
    uda_code: &str,
    scores: &[&InstitutionFieldScore],
) -> Result<SdsComparison> {
    let fss: BTreeMap<String, f64> = scores
        .iter()
        .map(|s| (s.university_id.clone(), s.p_fss))
        .collect();
    let h: BTreeMap<String, f64> = scores
        .iter()
        .map(|s| (s.university_id.clone(), s.p_h))
        .collect();
    let g: BTreeMap<String, f64> = scores
        .iter()
        .map(|s| (s.university_id.clone(), s.p_g))
        .collect();

    let list_fss = rank(&fss, sds_code, Indicator::Fss)?;
    let list_h = rank(&h, sds_code, Indicator::H)?;
    let list_g = rank(&g, sds_code, Indicator::G)?;

    let (rho_fss_h, p_fss_h) = spearman(&list_fss, &list_h)?;
    let (rho_fss_g, p_fss_g) = spearman(&list_fss, &list_g)?;
    let (rho_h_g, p_h_g) = spearman(&list_h, &list_g)?;

    let q_fss = quartile_assign(&list_fss)?;
    let q_h = quartile_assign(&list_h)?;
    let q_g = quartile_assign(&list_g)?;

    let shifts_fss_h = shift_stats(&q_fss, &q_h)?;
    let shifts_fss_g = shift_stats(&q_fss, &q_g)?;

    let crossovers_fss_h = median_crossovers(&fss, &h)?;
    let crossovers_fss_g = median_crossovers(&fss, &g)?;

    let (top_lost_fss_h, q1_size) = top_quartile_lost_count(&list_fss, &list_h)?;
    let (top_lost_fss_g, _) = top_quartile_lost_count(&list_fss, &list_g)?;

    Ok(SdsComparison {
        sds_code: sds_code.to_string(),
        uda_code: uda_code.to_string(),
        n_universities: scores.len(),
        rho_fss_h,
        p_fss_h,
        rho_fss_g,
        p_fss_g,
        rho_h_g,
        p_h_g,
        shifts_fss_h,
        shifts_fss_g,
        crossovers_fss_h,
        crossovers_fss_g,
        q1_size,
        top_lost_fss_h,
        top_lost_fss_g,
        top_loss_pct_fss_h: 100.0 * top_lost_fss_h as f64 / q1_size as f64,
        top_loss_pct_fss_g: 100.0 * top_lost_fss_g as f64 / q1_size as f64,
    })
}

fn aggregate(uda_code: &str, group: &[&SdsComparison], threshold: f64) -> UdaAggregate {
    let corr_items = |f: fn(&SdsComparison) -> (f64, f64)| -> Vec<(f64, f64, usize)> {
        group
            .iter()
            .map(|c| {
                let (rho, p) = f(c);
                (rho, p, c.n_universities)
            })
            .collect()
    };
    let fss_h = corr_items(|c| (c.rho_fss_h, c.p_fss_h));
    let fss_g = corr_items(|c| (c.rho_fss_g, c.p_fss_g));
    let h_g = corr_items(|c| (c.rho_h_g, c.p_h_g));

    let q1_size: usize = group.iter().map(|c| c.q1_size).sum();
    let top_lost_fss_h: usize = group.iter().map(|c| c.top_lost_fss_h).sum();
    let top_lost_fss_g: usize = group.iter().map(|c| c.top_lost_fss_g).sum();

    UdaAggregate {
        uda_code: uda_code.to_string(),
        n_sds: group.len(),
        n_observations: group.iter().map(|c| c.n_universities).sum(),
        corr_fss_h: CorrelationAverage::over(&fss_h, threshold),
        corr_fss_g: CorrelationAverage::over(&fss_g, threshold),
        corr_h_g: CorrelationAverage::over(&h_g, threshold),
        shifts_fss_h: ShiftStats::pool(group.iter().map(|c| &c.shifts_fss_h)),
        shifts_fss_g: ShiftStats::pool(group.iter().map(|c| &c.shifts_fss_g)),
        crossovers_fss_h: group.iter().map(|c| c.crossovers_fss_h.count).sum(),
        crossovers_fss_g: group.iter().map(|c| c.crossovers_fss_g.count).sum(),
        q1_size,
        top_lost_fss_h,
        top_lost_fss_g,
        top_loss_pct_fss_h: 100.0 * top_lost_fss_h as f64 / q1_size.max(1) as f64,
        top_loss_pct_fss_g: 100.0 * top_lost_fss_g as f64 / q1_size.max(1) as f64,
    }
}

/// Builds the full comparison report from a score set. SDSs with fewer
/// than `min_universities_per_sds` universities are excluded and tallied;
/// UDA aggregates pool institution-SDS observations and the correlation
/// averages honor the p-value threshold per indicator pair.
pub fn build_report(
    scores: &[InstitutionFieldScore],
    sds_to_uda: &BTreeMap<String, String>,
    config: &RunConfig,
) -> Result<ComparisonReport> {
    let mut by_sds: BTreeMap<&str, Vec<&InstitutionFieldScore>> = BTreeMap::new();
    for score in scores {
        by_sds.entry(&score.sds_code).or_default().push(score);
    }

    let mut per_sds: Vec<SdsComparison> = Vec::new();
    let mut excluded: Vec<String> = Vec::new();
    for (sds, group) in &by_sds {
        if group.len() < config.min_universities_per_sds {
            excluded.push((*sds).to_string());
            continue;
        }
        let uda = sds_to_uda
            .get(*sds)
            .cloned()
            .unwrap_or_else(|| "?".to_string());
        per_sds.push(compare_one_sds(sds, &uda, group)?);
    }

    let mut by_uda: BTreeMap<&str, Vec<&SdsComparison>> = BTreeMap::new();
    for comparison in &per_sds {
        by_uda
            .entry(&comparison.uda_code)
            .or_default()
            .push(comparison);
    }
    let per_uda: Vec<UdaAggregate> = by_uda
        .iter()
        .map(|(uda, group)| aggregate(uda, group, config.p_value_threshold))
        .collect();
    let all: Vec<&SdsComparison> = per_sds.iter().collect();
    let totals = aggregate("ALL", &all, config.p_value_threshold);

    Ok(ComparisonReport {
        tallies: ReportTallies {
            sds_with_scores: by_sds.len(),
            sds_analyzed: per_sds.len(),
            sds_excluded_small: excluded,
            min_universities: config.min_universities_per_sds,
            p_value_threshold: config.p_value_threshold,
        },
        per_sds,
        per_uda,
        totals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn score_map(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
        pairs.iter().map(|(u, s)| (u.to_string(), *s)).collect()
    }

    fn list_of(pairs: &[(&str, f64)]) -> RankingList {
        rank(&score_map(pairs), "SDS/01", Indicator::Fss).unwrap()
    }

    #[test]
    fn rank_orders_descending_with_id_tie_break() {
        let list = list_of(&[("B", 1.0), ("A", 2.0)]);
        assert_eq!(list.entries[0].university_id, "A");
        assert_eq!(list.entries[0].rank, 1);
        assert_eq!(list.entries[1].university_id, "B");

        let tied = list_of(&[("B", 1.0), ("A", 1.0)]);
        assert_eq!(tied.entries[0].university_id, "A");
        assert_eq!(tied.entries[1].university_id, "B");

        let single = list_of(&[("Z", 0.0)]);
        assert_eq!(single.entries[0].rank, 1);
    }

    #[test]
    fn rank_rejects_empty_input() {
        assert!(matches!(
            rank(&BTreeMap::new(), "S", Indicator::H),
            Err(Error::EmptyScores)
        ));
    }

    #[test]
    fn average_ranks_handle_ties() {
        assert_eq!(average_ranks(&[10.0, 20.0, 30.0]), vec![1.0, 2.0, 3.0]);
        assert_eq!(average_ranks(&[10.0, 10.0, 30.0]), vec![1.5, 1.5, 3.0]);
        assert_eq!(average_ranks(&[5.0, 5.0, 5.0, 5.0]), vec![2.5; 4]);
    }

    #[test]
    fn spearman_identity_and_reversal_are_exact() {
        let x = list_of(&[("A", 5.0), ("B", 4.0), ("C", 3.0), ("D", 2.0), ("E", 1.0)]);
        let (rho, _) = spearman(&x, &x).unwrap();
        assert_eq!(rho, 1.0);
        let rev = list_of(&[("A", 1.0), ("B", 2.0), ("C", 3.0), ("D", 4.0), ("E", 5.0)]);
        let (rho, _) = spearman(&x, &rev).unwrap();
        assert_eq!(rho, -1.0);
    }

    #[test]
    fn spearman_matches_no_ties_closed_form() {
        // ranks x = [1,2,3,4,5], y = [1,3,2,5,4]: rho = 1 - 6*4/(5*24) = 0.8
        let x = list_of(&[("A", 5.0), ("B", 4.0), ("C", 3.0), ("D", 2.0), ("E", 1.0)]);
        let y = list_of(&[("A", 5.0), ("B", 3.0), ("C", 4.0), ("D", 1.0), ("E", 2.0)]);
        let (rho, _) = spearman(&x, &y).unwrap();
        assert!((rho - 0.8).abs() < 1e-12);
    }

    #[test]
    fn spearman_rejects_mismatched_sets_and_tiny_lists() {
        let x = list_of(&[("A", 1.0), ("B", 2.0), ("C", 3.0)]);
        let y = list_of(&[("A", 1.0), ("B", 2.0), ("D", 3.0)]);
        assert!(matches!(
            spearman(&x, &y),
            Err(Error::UniversitySetMismatch)
        ));
        let small = list_of(&[("A", 1.0), ("B", 2.0)]);
        assert!(matches!(
            spearman(&small, &small),
            Err(Error::TooFewUniversities { .. })
        ));
    }

    #[test]
    fn spearman_all_tied_scores_reports_zero() {
        let x = list_of(&[("A", 1.0), ("B", 1.0), ("C", 1.0), ("D", 1.0)]);
        let y = list_of(&[("A", 4.0), ("B", 3.0), ("C", 2.0), ("D", 1.0)]);
        let (rho, p) = spearman(&x, &y).unwrap();
        assert_eq!(rho, 0.0);
        assert_eq!(p, 1.0);
    }

    #[test]
    fn exact_and_t_p_values_are_close_at_n8() {
        use rand::rngs::StdRng;
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let mut rng = StdRng::seed_from_u64(42);
        for _ in 0..20 {
            let mut ys: Vec<f64> = (1..=8).map(f64::from).collect();
            ys.shuffle(&mut rng);
            let xs: Vec<f64> = (1..=8).map(f64::from).collect();
            let rho = pearson(&average_ranks(&xs), &average_ranks(&ys)).unwrap();
            let exact = exact_permutation_p(&average_ranks(&xs), &average_ranks(&ys), rho);
            let approx = t_approximation_p(rho, 8);
            assert!(
                (exact - approx).abs() <= 0.05,
                "rho={rho}: exact {exact} vs t {approx}"
            );
        }
    }

    #[test]
    fn quartiles_follow_ceil_formula() {
        let entries: Vec<(String, f64)> = (1..=8)
            .map(|i| (format!("U{i}"), (9 - i) as f64))
            .collect();
        let map: BTreeMap<String, f64> = entries.into_iter().collect();
        let list = rank(&map, "S", Indicator::Fss).unwrap();
        let q = quartile_assign(&list).unwrap();
        assert_eq!(q["U1"], 1);
        assert_eq!(q["U2"], 1);
        assert_eq!(q["U3"], 2);
        assert_eq!(q["U4"], 2);
        assert_eq!(q["U5"], 3);
        assert_eq!(q["U6"], 3);
        assert_eq!(q["U7"], 4);
        assert_eq!(q["U8"], 4);
    }

    #[test]
    fn quartile_sizes_for_n35_are_8_9_9_9() {
        let map: BTreeMap<String, f64> = (1..=35)
            .map(|i| (format!("U{i:02}"), f64::from(100 - i)))
            .collect();
        let list = rank(&map, "S", Indicator::Fss).unwrap();
        let q = quartile_assign(&list).unwrap();
        let mut sizes = [0usize; 4];
        for &quartile in q.values() {
            sizes[quartile as usize - 1] += 1;
        }
        assert_eq!(sizes, [8, 9, 9, 9]);
    }

    #[test]
    fn quartile_sizes_differ_by_at_most_one() {
        for n in 4..=60 {
            let map: BTreeMap<String, f64> = (1..=n)
                .map(|i| (format!("U{i:03}"), f64::from(1000 - i)))
                .collect();
            let list = rank(&map, "S", Indicator::Fss).unwrap();
            let q = quartile_assign(&list).unwrap();
            let mut sizes = [0usize; 4];
            for &quartile in q.values() {
                sizes[quartile as usize - 1] += 1;
            }
            assert_eq!(sizes.iter().sum::<usize>(), n as usize);
            let max = sizes.iter().max().unwrap();
            let min = sizes.iter().min().unwrap();
            assert!(max - min <= 1, "n={n}: {sizes:?}");
        }
    }

    #[test]
    fn quartiles_require_four_universities() {
        let list = list_of(&[("A", 3.0), ("B", 2.0), ("C", 1.0)]);
        assert!(matches!(
            quartile_assign(&list),
            Err(Error::TooFewUniversities { .. })
        ));
    }

    fn quartile_map(pairs: &[(&str, u8)]) -> BTreeMap<String, u8> {
        pairs.iter().map(|(u, q)| (u.to_string(), *q)).collect()
    }

    #[test]
    fn shift_stats_hand_case() {
        let a = quartile_map(&[("w", 1), ("x", 2), ("y", 3), ("z", 4)]);
        let b = quartile_map(&[("w", 4), ("x", 3), ("y", 2), ("z", 1)]);
        let s = shift_stats(&a, &b).unwrap();
        assert_eq!(s.pct_changed, 100.0);
        assert_eq!(s.mean_shift, 2.0);
        assert_eq!(s.max_shift, 3);
        assert_eq!(s.pct_shift_ge2, 50.0);
    }

    #[test]
    fn shift_stats_identical_maps_are_all_zero() {
        let a = quartile_map(&[("w", 1), ("x", 2), ("y", 3), ("z", 4)]);
        let s = shift_stats(&a, &a).unwrap();
        assert_eq!(s.pct_changed, 0.0);
        assert_eq!(s.mean_shift, 0.0);
        assert_eq!(s.max_shift, 0);
        assert_eq!(s.pct_shift_ge2, 0.0);
    }

    #[test]
    fn shift_stats_single_step() {
        let a = quartile_map(&[("w", 1), ("x", 2), ("y", 3), ("z", 4)]);
        let b = quartile_map(&[("w", 2), ("x", 2), ("y", 3), ("z", 4)]);
        let s = shift_stats(&a, &b).unwrap();
        assert_eq!(s.pct_changed, 25.0);
        assert_eq!(s.mean_shift, 0.25);
        assert_eq!(s.max_shift, 1);
        assert_eq!(s.pct_shift_ge2, 0.0);
    }

    #[test]
    fn shift_stats_is_symmetric() {
        let a = quartile_map(&[("w", 1), ("x", 3), ("y", 2), ("z", 4)]);
        let b = quartile_map(&[("w", 2), ("x", 1), ("y", 4), ("z", 4)]);
        assert_eq!(shift_stats(&a, &b).unwrap(), shift_stats(&b, &a).unwrap());
    }

    #[test]
    fn shift_stats_rejects_key_mismatch() {
        let a = quartile_map(&[("w", 1)]);
        let b = quartile_map(&[("v", 1)]);
        assert!(matches!(
            shift_stats(&a, &b),
            Err(Error::UniversitySetMismatch)
        ));
    }

    #[test]
    fn median_crossovers_hand_case() {
        let a = score_map(&[("w", 4.0), ("x", 3.0), ("y", 2.0), ("z", 1.0)]);
        let b = score_map(&[("w", 1.0), ("x", 2.0), ("y", 3.0), ("z", 4.0)]);
        let c = median_crossovers(&a, &b).unwrap();
        assert_eq!(c.count, 2);
        assert_eq!(c.universities, vec!["w".to_string(), "x".to_string()]);
    }

    #[test]
    fn median_crossovers_identical_scores_is_zero() {
        let a = score_map(&[("w", 4.0), ("x", 3.0), ("y", 2.0), ("z", 1.0)]);
        assert_eq!(median_crossovers(&a, &a).unwrap().count, 0);
    }

    #[test]
    fn median_crossovers_all_equal_scores_is_zero() {
        // Nobody is strictly above an all-equal median.
        let a = score_map(&[("w", 2.0), ("x", 2.0), ("y", 2.0), ("z", 2.0)]);
        let b = score_map(&[("w", 1.0), ("x", 2.0), ("y", 3.0), ("z", 4.0)]);
        assert_eq!(median_crossovers(&a, &b).unwrap().count, 0);
    }

    #[test]
    fn top_quartile_loss_cases() {
        // 8 universities: Q1 = top 2.
        let a = list_of(&[
            ("x", 8.0),
            ("y", 7.0),
            ("c", 6.0),
            ("d", 5.0),
            ("e", 4.0),
            ("f", 3.0),
            ("g", 2.0),
            ("h", 1.0),
        ]);
        let b = list_of(&[
            ("x", 8.0),
            ("z", 7.0), // not a member of a -> different set
            ("c", 6.0),
            ("d", 5.0),
            ("e", 4.0),
            ("f", 3.0),
            ("g", 2.0),
            ("h", 1.0),
        ]);
        assert!(top_quartile_loss(&a, &b).is_err());

        // Same universities, y falls out of Q1 under b.
        let b = list_of(&[
            ("x", 8.0),
            ("c", 7.0),
            ("y", 6.0),
            ("d", 5.0),
            ("e", 4.0),
            ("f", 3.0),
            ("g", 2.0),
            ("h", 1.0),
        ]);
        let loss = top_quartile_loss(&a, &b).unwrap();
        assert_eq!(loss, 50.0);
        assert_eq!(top_quartile_loss(&a, &a).unwrap(), 0.0);

        // Fully disjoint top quartiles.
        let c = list_of(&[
            ("x", 1.0),
            ("y", 2.0),
            ("c", 3.0),
            ("d", 4.0),
            ("e", 5.0),
            ("f", 6.0),
            ("g", 7.0),
            ("h", 8.0),
        ]);
        assert_eq!(top_quartile_loss(&a, &c).unwrap(), 100.0);
    }

    fn score(u: &str, sds: &str, fss: f64, h: f64, g: f64) -> InstitutionFieldScore {
        InstitutionFieldScore {
            university_id: u.to_string(),
            sds_code: sds.to_string(),
            rs: 1.0,
            n_pubs: 1,
            h: 1,
            g: 1,
            p_h: h,
            p_g: g,
            p_fss: fss,
        }
    }

    fn small_config(min_universities: usize) -> RunConfig {
        RunConfig {
            min_universities_per_sds: min_universities,
            ..RunConfig::default()
        }
    }

    fn simple_map(codes: &[(&str, &str)]) -> BTreeMap<String, String> {
        codes
            .iter()
            .map(|(s, u)| (s.to_string(), u.to_string()))
            .collect()
    }

    #[test]
    fn report_excludes_small_sds_and_counts_them() {
        let mut scores = Vec::new();
        for i in 0..10 {
            scores.push(score(&format!("U{i}"), "FIS/01", f64::from(i), f64::from(i), f64::from(i)));
        }
        for i in 0..9 {
            scores.push(score(&format!("U{i}"), "FIS/02", f64::from(i), f64::from(i), f64::from(i)));
        }
        let report = build_report(
            &scores,
            &simple_map(&[("FIS/01", "FIS"), ("FIS/02", "FIS")]),
            &small_config(10),
        )
        .unwrap();
        assert_eq!(report.per_sds.len(), 1);
        assert_eq!(report.tallies.sds_with_scores, 2);
        assert_eq!(report.tallies.sds_analyzed, 1);
        assert_eq!(report.tallies.sds_excluded_small, vec!["FIS/02".to_string()]);
    }

    #[test]
    fn singleton_uda_aggregate_equals_its_sds() {
        let mut scores = Vec::new();
        for i in 0..12 {
            scores.push(score(
                &format!("U{i:02}"),
                "FIS/01",
                f64::from(i),
                f64::from((i * 7) % 12),
                f64::from((i * 5) % 12),
            ));
        }
        let report = build_report(
            &scores,
            &simple_map(&[("FIS/01", "FIS")]),
            &small_config(10),
        )
        .unwrap();
        let sds = &report.per_sds[0];
        let uda = &report.per_uda[0];
        assert_eq!(uda.n_sds, 1);
        assert_eq!(uda.shifts_fss_h, sds.shifts_fss_h);
        assert_eq!(uda.crossovers_fss_h, sds.crossovers_fss_h.count);
        assert_eq!(uda.top_loss_pct_fss_h, sds.top_loss_pct_fss_h);
    }

    #[test]
    fn uda_pooling_recomputes_percentages_from_counts() {
        // Two SDSs with 4 universities each; quartile shifts: 2 changed in
        // the first, none in the second -> pooled pct_changed = 2/8 = 25%.
        let mut scores = Vec::new();
        // SDS 1: FSS order U0..U3, h order swaps top two pairs' quartiles.
        scores.push(score("U0", "MAT/01", 4.0, 3.0, 4.0));
        scores.push(score("U1", "MAT/01", 3.0, 4.0, 3.0));
        scores.push(score("U2", "MAT/01", 2.0, 2.0, 2.0));
        scores.push(score("U3", "MAT/01", 1.0, 1.0, 1.0));
        // SDS 2: identical orders.
        for i in 0..4 {
            let v = f64::from(4 - i);
            scores.push(score(&format!("U{i}"), "MAT/02", v, v, v));
        }
        let report = build_report(
            &scores,
            &simple_map(&[("MAT/01", "MAT"), ("MAT/02", "MAT")]),
            &small_config(4),
        )
        .unwrap();
        let uda = &report.per_uda[0];
        assert_eq!(uda.n_sds, 2);
        assert_eq!(uda.shifts_fss_h.n, 8);
        assert_eq!(uda.shifts_fss_h.changed, 2);
        assert_eq!(uda.shifts_fss_h.pct_changed, 25.0);
        // Totals equal the single-UDA pool here.
        assert_eq!(report.totals.shifts_fss_h.pct_changed, 25.0);
    }

    #[test]
    fn rank_invariance_under_strictly_increasing_transform() {
        use rand::rngs::StdRng;
        use rand::{Rng, SeedableRng};
        let mut rng = StdRng::seed_from_u64(3);
        for _ in 0..25 {
            let n = rng.random_range(4..=40);
            let raw: BTreeMap<String, f64> = (0..n)
                .map(|i| (format!("U{i:02}"), rng.random_range(-5.0..50.0)))
                .collect();
            let other: BTreeMap<String, f64> = raw
                .keys()
                .map(|k| (k.clone(), rng.random_range(-5.0..50.0)))
                .collect();
            let transformed: BTreeMap<String, f64> = raw
                .iter()
                .map(|(k, v)| (k.clone(), v.powi(3) + 7.0))
                .collect();

            let list_raw = rank(&raw, "S", Indicator::Fss).unwrap();
            let list_tr = rank(&transformed, "S", Indicator::Fss).unwrap();
            let ranks_raw: Vec<(&String, usize)> = list_raw
                .entries
                .iter()
                .map(|e| (&e.university_id, e.rank))
                .collect();
            let ranks_tr: Vec<(&String, usize)> = list_tr
                .entries
                .iter()
                .map(|e| (&e.university_id, e.rank))
                .collect();
            assert_eq!(ranks_raw, ranks_tr);
            assert_eq!(
                quartile_assign(&list_raw).unwrap(),
                quartile_assign(&list_tr).unwrap()
            );

            let list_other = rank(&other, "S", Indicator::H).unwrap();
            let (rho_raw, _) = spearman(&list_raw, &list_other).unwrap();
            let (rho_tr, _) = spearman(&list_tr, &list_other).unwrap();
            assert!((rho_raw - rho_tr).abs() < 1e-12);
            assert_eq!(
                top_quartile_loss(&list_raw, &list_other).unwrap(),
                top_quartile_loss(&list_tr, &list_other).unwrap()
            );
        }
    }
}
