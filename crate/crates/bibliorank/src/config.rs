//! Run configuration: observation window, field filters, credit weights,
//! and comparison thresholds, loaded from a TOML key-value file.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::credit::CreditConfig;
use crate::error::{Error, Result};

/// Full run configuration shared by ingestion, scoring, and comparison.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    /// First year of the observation window (inclusive).
    pub window_start: i32,
    /// Last year of the observation window (inclusive).
    pub window_end: i32,
    /// Minimum share of a field's researchers with at least one publication
    /// for the field to enter the analysis.
    pub min_active_share: f64,
    /// Minimum number of universities with active staff for a field to be
    /// included in ranking comparisons.
    pub min_universities_per_sds: usize,
    /// Significance threshold applied when averaging correlations.
    pub p_value_threshold: f64,
    /// Byline credit weighting parameters.
    pub credit: CreditConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            window_start: 2001,
            window_end: 2005,
            min_active_share: 0.5,
            min_universities_per_sds: 10,
            p_value_threshold: 0.01,
            credit: CreditConfig::default(),
        }
    }
}

/// On-disk shape of the config file. Every key is optional; missing keys
/// take the documented defaults.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    window_start: Option<i32>,
    window_end: Option<i32>,
    min_active_share: Option<f64>,
    min_universities_per_sds: Option<usize>,
    p_value_threshold: Option<f64>,
    life_science_sds: Option<Vec<String>>,
    weights: Option<RawWeights>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawWeights {
    intra_first_last: Option<f64>,
    intra_rest: Option<f64>,
    extra_first_last: Option<f64>,
    extra_second_penult: Option<f64>,
    extra_rest: Option<f64>,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let raw: RawConfig =
            toml::from_str(text).map_err(|e| Error::Config(format!("bad config: {e}")))?;
        let mut cfg = RunConfig::default();
        if let Some(v) = raw.window_start {
            cfg.window_start = v;
        }
        if let Some(v) = raw.window_end {
            cfg.window_end = v;
        }
        if let Some(v) = raw.min_active_share {
            cfg.min_active_share = v;
        }
        if let Some(v) = raw.min_universities_per_sds {
            cfg.min_universities_per_sds = v;
        }
        if let Some(v) = raw.p_value_threshold {
            cfg.p_value_threshold = v;
        }
        if let Some(v) = raw.life_science_sds {
            cfg.credit.life_science_sds = v.into_iter().collect::<BTreeSet<_>>();
        }
        if let Some(w) = raw.weights {
            if let Some(v) = w.intra_first_last {
                cfg.credit.w_first_last_intra = v;
            }
            if let Some(v) = w.intra_rest {
                cfg.credit.w_rest_intra = v;
            }
            if let Some(v) = w.extra_first_last {
                cfg.credit.w_first_last_extra = v;
            }
            if let Some(v) = w.extra_second_penult {
                cfg.credit.w_second_penult_extra = v;
            }
            if let Some(v) = w.extra_rest {
                cfg.credit.w_rest_extra = v;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_toml_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.window_start > self.window_end {
            return Err(Error::Config(format!(
                "window_start {} after window_end {}",
                self.window_start, self.window_end
            )));
        }
        if !(0.0..=1.0).contains(&self.min_active_share) {
            return Err(Error::Config(format!(
                "min_active_share {} outside [0, 1]",
                self.min_active_share
            )));
        }
        if !(0.0..=1.0).contains(&self.p_value_threshold) {
            return Err(Error::Config(format!(
                "p_value_threshold {} outside [0, 1]",
                self.p_value_threshold
            )));
        }
        if self.min_universities_per_sds == 0 {
            return Err(Error::Config(
                "min_universities_per_sds must be at least 1".into(),
            ));
        }
        self.credit.validate()?;
        Ok(())
    }

    /// Number of years in the observation window.
    pub fn window_len(&self) -> u32 {
        (self.window_end - self.window_start + 1) as u32
    }

    pub fn contains_year(&self, year: i32) -> bool {
        (self.window_start..=self.window_end).contains(&year)
    }

    /// Config serialized back to the TOML file format, suitable for echoing
    /// next to generated corpora.
    pub fn to_toml_string(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("window_start = {}\n", self.window_start));
        out.push_str(&format!("window_end = {}\n", self.window_end));
        out.push_str(&format!("min_active_share = {}\n", self.min_active_share));
        out.push_str(&format!(
            "min_universities_per_sds = {}\n",
            self.min_universities_per_sds
        ));
        out.push_str(&format!(
            "p_value_threshold = {}\n",
            self.p_value_threshold
        ));
        let sds: Vec<String> = self
            .credit
            .life_science_sds
            .iter()
            .map(|s| format!("\"{s}\""))
            .collect();
        out.push_str(&format!("life_science_sds = [{}]\n", sds.join(", ")));
        out.push_str("\n[weights]\n");
        out.push_str(&format!(
            "intra_first_last = {}\n",
            self.credit.w_first_last_intra
        ));
        out.push_str(&format!("intra_rest = {}\n", self.credit.w_rest_intra));
        out.push_str(&format!(
            "extra_first_last = {}\n",
            self.credit.w_first_last_extra
        ));
        out.push_str(&format!(
            "extra_second_penult = {}\n",
            self.credit.w_second_penult_extra
        ));
        out.push_str(&format!("extra_rest = {}\n", self.credit.w_rest_extra));
        out
    }
}
