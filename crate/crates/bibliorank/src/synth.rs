//! Seeded synthetic corpus generation at configurable scale.
//!
//! The generator is a pure function of its parameters: every entity draws
//! from its own ChaCha8 stream whose seed is derived with a SplitMix64
//! finalizer over (seed, domain, indexes), so adding publications never
//! perturbs roster draws and output is identical across platforms and
//! thread counts.
//!
//! Default profiles follow the nine hard-science discipline rows of the
//! reference corpus (staff, publication counts, and mean citations per
//! discipline), scaled by a single factor. Mean byline lengths are
//! generator knobs with invented defaults: the reference data does not
//! describe co-authorship lengths.

use std::collections::BTreeMap;
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::corpus::{AuthorSlot, Corpus, DocType, PublicationRecord, RosterRow};
use crate::error::{Error, Result};

const DOMAIN_UNIVERSITY: u64 = 0x01;
const DOMAIN_RESEARCHER: u64 = 0x02;
const DOMAIN_PUBLICATION: u64 = 0x03;

/// One discipline profile: how much staff, output, and citation intensity
/// its fields carry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UdaProfile {
    pub uda_code: String,
    pub n_sds: usize,
    pub staff: usize,
    pub pubs: usize,
    pub mean_citations: f64,
    /// Mean byline length (invented default, not from the reference data).
    pub mean_byline: f64,
    /// Whether this discipline's fields use position-weighted byline credit.
    pub life_science: bool,
}

impl UdaProfile {
    fn scaled_staff(&self, scale: f64) -> usize {
        let n = (self.staff as f64 * scale).round() as usize;
        if self.staff > 0 {
            n.max(1)
        } else {
            n
        }
    }

    fn scaled_pubs(&self, scale: f64) -> usize {
        (self.pubs as f64 * scale).round() as usize
    }
}

/// Generator parameters. [`SynthParams::table1`] gives the nine-discipline
/// defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthParams {
    pub seed: u64,
    pub n_universities: usize,
    /// Staff and publication counts are multiplied by this factor.
    pub scale: f64,
    pub window_start: i32,
    pub window_end: i32,
    /// Lognormal sigma of the citation draw.
    pub citation_sigma: f64,
    /// Share of publications forced to zero citations.
    pub uncited_share: f64,
    /// Lognormal sigma of university size weights.
    pub university_size_sigma: f64,
    /// Lognormal sigma of researcher productivity weights.
    pub productivity_sigma: f64,
    pub profiles: Vec<UdaProfile>,
}

impl SynthParams {
    /// Nine-discipline defaults at the given scale. Scale 1.0 reproduces
    /// the reference corpus shape: 184 fields, ~37k researchers, ~142k
    /// publications.
    pub fn table1(seed: u64, scale: f64) -> SynthParams {
        let p = |uda: &str, n_sds, staff, pubs, mean_citations, mean_byline, life_science| {
            UdaProfile {
                uda_code: uda.to_string(),
                n_sds,
                staff,
                pubs,
                mean_citations,
                mean_byline,
                life_science,
            }
        };
        SynthParams {
            seed,
            n_universities: 68,
            scale,
            window_start: 2001,
            window_end: 2005,
            citation_sigma: 1.3,
            uncited_share: 0.25,
            university_size_sigma: 0.9,
            productivity_sigma: 1.0,
            profiles: vec![
                p("MAT", 9, 3230, 11504, 5.1, 2.6, false),
                p("FIS", 8, 2738, 21737, 12.5, 5.0, false),
                p("CHIM", 12, 3449, 22570, 13.5, 4.0, false),
                p("GEO", 12, 1407, 3815, 9.4, 3.5, false),
                p("BIO", 19, 5423, 24719, 16.6, 5.5, true),
                p("MED", 47, 11803, 42103, 16.6, 6.0, true),
                p("AGR", 28, 2915, 7615, 9.4, 4.5, false),
                p("ICAR", 7, 1338, 3261, 5.6, 3.0, false),
                p("ING", 42, 4899, 25181, 5.8, 3.5, false),
            ],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_universities == 0 {
            return Err(Error::InvalidParams("n_universities must be positive".into()));
        }
        if self.scale <= 0.0 {
            return Err(Error::InvalidParams("scale must be positive".into()));
        }
        if self.window_start > self.window_end {
            return Err(Error::InvalidParams("window_start after window_end".into()));
        }
        if !(0.0..1.0).contains(&self.uncited_share) {
            return Err(Error::InvalidParams("uncited_share outside [0, 1)".into()));
        }
        if self.citation_sigma <= 0.0
            || self.university_size_sigma < 0.0
            || self.productivity_sigma < 0.0
        {
            return Err(Error::InvalidParams("sigmas must be positive".into()));
        }
        if self.profiles.is_empty() {
            return Err(Error::InvalidParams("at least one profile required".into()));
        }
        for profile in &self.profiles {
            if profile.n_sds == 0 {
                return Err(Error::InvalidParams(format!(
                    "{}: n_sds must be positive",
                    profile.uda_code
                )));
            }
            if profile.mean_citations <= 0.0 {
                return Err(Error::InvalidParams(format!(
                    "{}: mean_citations must be positive",
                    profile.uda_code
                )));
            }
            if profile.mean_byline < 1.0 {
                return Err(Error::InvalidParams(format!(
                    "{}: mean_byline must be >= 1",
                    profile.uda_code
                )));
            }
            if profile.pubs > 0 && profile.staff == 0 {
                return Err(Error::InvalidParams(format!(
                    "{}: publications without staff",
                    profile.uda_code
                )));
            }
        }
        Ok(())
    }

    /// Run configuration matching this generator's output: same window,
    /// life-science fields taken from the life-science profiles.
    pub fn run_config(&self) -> RunConfig {
        let mut config = RunConfig {
            window_start: self.window_start,
            window_end: self.window_end,
            ..RunConfig::default()
        };
        for profile in &self.profiles {
            if profile.life_science {
                for i in 1..=profile.n_sds {
                    config
                        .credit
                        .life_science_sds
                        .insert(sds_code(&profile.uda_code, i));
                }
            }
        }
        config
    }

    fn window_years(&self) -> Vec<i32> {
        (self.window_start..=self.window_end).collect()
    }
}

fn sds_code(uda: &str, index: usize) -> String {
    format!("{uda}/{index:02}")
}

/// SplitMix64 finalizer.
fn mix(state: u64) -> u64 {
    let mut z = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Fixed per-entity stream: ChaCha8 seeded from the mixed key.
fn stream(seed: u64, domain: u64, a: u64, b: u64) -> ChaCha8Rng {
    let mut key = mix(seed);
    key = mix(key ^ domain);
    key = mix(key ^ a);
    key = mix(key ^ b);
    ChaCha8Rng::seed_from_u64(key)
}

/// Samples an index proportionally to `cumulative` weights (non-empty,
/// last entry is the total).
fn weighted_index(cumulative: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let total = *cumulative.last().expect("non-empty weights");
    let draw: f64 = rng.random_range(0.0..total);
    cumulative.partition_point(|&c| c <= draw).min(cumulative.len() - 1)
}

struct Researcher {
    id: String,
    university: usize,
    sds: String,
    /// Contiguous roster years within the window.
    years: (i32, i32),
    productivity: f64,
}

impl Researcher {
    fn rostered_in(&self, year: i32) -> bool {
        (self.years.0..=self.years.1).contains(&year)
    }
}

/// Generates a corpus deterministically from the parameters. The result
/// always passes corpus validation: it is rebuilt through the validating
/// constructor.
pub fn generate(params: &SynthParams) -> Result<Corpus> {
    params.validate()?;
    let config = params.run_config();
    let years = params.window_years();

    // University size weights, long-tailed so institutions differ in staff.
    let size_dist = Normal::new(0.0, params.university_size_sigma)
        .map_err(|e| Error::InvalidParams(e.to_string()))?;
    let mut university_cumulative = Vec::with_capacity(params.n_universities);
    let mut total = 0.0;
    for u in 0..params.n_universities {
        let mut rng = stream(params.seed, DOMAIN_UNIVERSITY, u as u64, 0);
        total += size_dist.sample(&mut rng).exp();
        university_cumulative.push(total);
    }
    let university_id = |u: usize| format!("U{:03}", u + 1);

    let mut sds_to_uda: BTreeMap<String, String> = BTreeMap::new();
    for profile in &params.profiles {
        for i in 1..=profile.n_sds {
            sds_to_uda.insert(sds_code(&profile.uda_code, i), profile.uda_code.clone());
        }
    }

    // Roster: researchers keep one (university, SDS) over a contiguous span.
    let productivity_dist = Normal::new(0.0, params.productivity_sigma)
        .map_err(|e| Error::InvalidParams(e.to_string()))?;
    let mut researchers_by_uda: Vec<Vec<Researcher>> = Vec::with_capacity(params.profiles.len());
    let mut roster_rows: Vec<RosterRow> = Vec::new();
    for (uda_idx, profile) in params.profiles.iter().enumerate() {
        let staff_n = profile.scaled_staff(params.scale);
        let mut members = Vec::with_capacity(staff_n);
        for j in 0..staff_n {
            let mut rng = stream(
                params.seed,
                DOMAIN_RESEARCHER,
                uda_idx as u64,
                j as u64,
            );
            let university = weighted_index(&university_cumulative, &mut rng);
            let sds_idx = rng.random_range(1..=profile.n_sds);
            let sds = sds_code(&profile.uda_code, sds_idx);
            let full_window: f64 = rng.random_range(0.0..1.0);
            let years_span = if full_window < 0.6 {
                (params.window_start, params.window_end)
            } else {
                let a = years[rng.random_range(0..years.len())];
                let b = years[rng.random_range(0..years.len())];
                (a.min(b), a.max(b))
            };
            let productivity = productivity_dist.sample(&mut rng).exp();
            let researcher = Researcher {
                id: format!("R{}-{j:05}", profile.uda_code),
                university,
                sds,
                years: years_span,
                productivity,
            };
            for year in researcher.years.0..=researcher.years.1 {
                roster_rows.push(RosterRow {
                    researcher_id: researcher.id.clone(),
                    year,
                    university_id: university_id(researcher.university),
                    sds_code: researcher.sds.clone(),
                });
            }
            members.push(researcher);
        }
        researchers_by_uda.push(members);
    }

    // Publications: anchored on a productivity-weighted researcher, with a
    // mix of internal co-authors and external byline slots.
    let mut publications: Vec<PublicationRecord> = Vec::new();
    for (uda_idx, profile) in params.profiles.iter().enumerate() {
        let members = &researchers_by_uda[uda_idx];
        if members.is_empty() {
            continue;
        }
        let mut cumulative = Vec::with_capacity(members.len());
        let mut total = 0.0;
        for member in members {
            total += member.productivity;
            cumulative.push(total);
        }
        let pubs_n = profile.scaled_pubs(params.scale);
        // Citation draw calibrated so zero-inflation keeps the target mean.
        let mean_draw = profile.mean_citations / (1.0 - params.uncited_share);
        let mu = mean_draw.ln() - params.citation_sigma * params.citation_sigma / 2.0;
        let citation_dist = Normal::new(mu, params.citation_sigma)
            .map_err(|e| Error::InvalidParams(e.to_string()))?;
        let byline_lambda = (profile.mean_byline - 1.0).max(1e-9);
        let byline_dist =
            Poisson::new(byline_lambda).map_err(|e| Error::InvalidParams(e.to_string()))?;

        for k in 0..pubs_n {
            let mut rng = stream(
                params.seed,
                DOMAIN_PUBLICATION,
                uda_idx as u64,
                k as u64,
            );
            let anchor = &members[weighted_index(&cumulative, &mut rng)];
            let year = rng.random_range(anchor.years.0..=anchor.years.1);

            let byline_len = 1 + byline_dist.sample(&mut rng) as usize;
            let mut slots: Vec<AuthorSlot> = Vec::with_capacity(byline_len);
            let mut used: Vec<&str> = vec![&anchor.id];
            for _ in 1..byline_len {
                let internal: f64 = rng.random_range(0.0..1.0);
                if internal < 0.55 {
                    // Internal co-author from the same discipline; retry a
                    // few times to avoid repeating a byline member.
                    let mut chosen = None;
                    for _ in 0..4 {
                        let candidate = &members[weighted_index(&cumulative, &mut rng)];
                        if !used.iter().any(|id| *id == candidate.id) {
                            chosen = Some(candidate);
                            break;
                        }
                    }
                    if let Some(co_author) = chosen {
                        used.push(&co_author.id);
                        let affiliation = co_author
                            .rostered_in(year)
                            .then(|| university_id(co_author.university));
                        slots.push(AuthorSlot {
                            researcher_id: Some(co_author.id.clone()),
                            university_id: affiliation,
                        });
                        continue;
                    }
                }
                // External co-author, occasionally with a foreign affiliation.
                let foreign: f64 = rng.random_range(0.0..1.0);
                let affiliation =
                    (foreign < 0.5).then(|| format!("EXT{:02}", rng.random_range(0..40)));
                slots.push(AuthorSlot {
                    researcher_id: None,
                    university_id: affiliation,
                });
            }
            let anchor_pos = rng.random_range(0..=slots.len());
            slots.insert(
                anchor_pos,
                AuthorSlot {
                    researcher_id: Some(anchor.id.clone()),
                    university_id: Some(university_id(anchor.university)),
                },
            );

            let uncited: f64 = rng.random_range(0.0..1.0);
            let citations = if uncited < params.uncited_share {
                0
            } else {
                citation_dist.sample(&mut rng).exp().round().max(0.0) as u32
            };

            let doc_draw: f64 = rng.random_range(0.0..1.0);
            let doc_type = if doc_draw < 0.82 {
                DocType::Article
            } else if doc_draw < 0.90 {
                DocType::Review
            } else {
                DocType::Proceedings
            };

            publications.push(PublicationRecord {
                pub_id: format!("P{}-{k:06}", profile.uda_code),
                year,
                doc_type,
                subject_categories: vec![format!("CAT-{}", anchor.sds)],
                citations,
                authors: slots,
            });
        }
    }

    Corpus::from_records(publications, roster_rows, sds_to_uda, config)
}

/// Generates and writes a corpus with its parameter echo and a matching
/// config file, returning the corpus.
pub fn generate_to_dir(params: &SynthParams, dir: &Path) -> Result<Corpus> {
    let corpus = generate(params)?;
    corpus.write_files(dir)?;
    let params_path = dir.join("params.json");
    let json = serde_json::to_string_pretty(params)
        .map_err(|e| Error::io(&params_path, e.into()))?;
    std::fs::write(&params_path, format!("{json}\n"))
        .map_err(|e| Error::io(&params_path, e))?;
    let config_path = dir.join("config.toml");
    std::fs::write(&config_path, params.run_config().to_toml_string())
        .map_err(|e| Error::io(&config_path, e))?;
    Ok(corpus)
}
