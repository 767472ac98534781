//! World configuration: a flat `key = value` text format plus built-ins.
//!
//! Every knob of a run lives here so that `(config, seed)` fully determines
//! all outputs. There is no implicit entropy anywhere: the seed is mandatory
//! and must come from the config file or the command line.

use serde::Serialize;

use epimpc_core::GroupParams;

use crate::error::{Result, SimError};

/// Which named group the cipher runs in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupChoice {
    /// q = 23; hand-checkable toy group.
    Test23,
    /// Fixed 64-bit safe prime; fast simulation default.
    Test64,
    /// Fixed 256-bit safe prime.
    Test256,
    /// RFC 3526 2048-bit MODP group; "real" sizing.
    Rfc3526_2048,
}

impl GroupChoice {
    pub fn params(self) -> GroupParams {
        match self {
            GroupChoice::Test23 => GroupParams::test_q23(),
            GroupChoice::Test64 => GroupParams::test_64(),
            GroupChoice::Test256 => GroupParams::test_256(),
            GroupChoice::Rfc3526_2048 => GroupParams::rfc3526_2048(),
        }
    }

    fn parse(s: &str) -> Result<Self> {
        match s {
            "test23" => Ok(Self::Test23),
            "test64" => Ok(Self::Test64),
            "test256" => Ok(Self::Test256),
            "rfc3526_2048" => Ok(Self::Rfc3526_2048),
            other => Err(SimError::Config(format!(
                "unknown group '{other}' (expected test23|test64|test256|rfc3526_2048)"
            ))),
        }
    }
}

/// Whether locations are attached to received or to sent tokens in the
/// infection analytics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AttachSide {
    Received,
    Sent,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WorldConfig {
    pub grid_rows: u32,
    pub grid_cols: u32,
    /// Side length of one square cell, meters.
    pub cell_size_m: f64,
    pub citizens: u32,
    pub contact_radius_m: f64,
    pub epoch_length_secs: u64,
    pub retention_epochs: u64,
    pub update_interval_epochs: u64,
    /// Total simulated epochs.
    pub epochs: u64,
    pub movement_speed_m_per_epoch: f64,
    pub initial_infected: u32,
    /// Per-contact transmission probability.
    pub transmission_prob: f64,
    /// Epochs from infection to the positive test / report.
    pub test_delay_epochs: u64,
    /// Suggestion-2 notification threshold `t` (server-private).
    pub threshold_t: u64,
    /// Suggestion-1 minimum receiver set size `s`.
    pub min_set_size_s: usize,
    /// Number of indices each citizen reveals per density round; 0 means
    /// the default of min(10, M).
    pub decoy_count: u32,
    /// The field modulus is the smallest prime above max(bound, citizens).
    pub population_bound: u64,
    pub group: GroupChoice,
    pub timeline_bucket_epochs: u64,
    pub tracing_suggestion: u8,
    pub analytics_suggestion: u8,
    pub attach: AttachSide,
    /// Fraction of citizens running the app.
    pub participation_rate: f64,
    pub psi_pre_shuffle: bool,
    /// Cells acting as small high-traffic places of interest; movement is
    /// biased toward them so that one cell can stand for a market or a
    /// school while the remaining cells cover residential ground.
    pub poi_cells: Vec<u32>,
    /// Probability that a new movement waypoint targets a place of interest.
    pub poi_bias: f64,
    /// May be overridden by `--seed` on the command line.
    pub seed: Option<u64>,
}

impl Default for WorldConfig {
    /// Canonical deployment sizing: one-minute epochs, a two-week retention
    /// time, daily comparisons, and a two-week run. A config file only
    /// overrides what it names.
    fn default() -> Self {
        Self {
            grid_rows: 10,
            grid_cols: 10,
            cell_size_m: 50.0,
            citizens: 200,
            contact_radius_m: 2.0,
            epoch_length_secs: 60,
            retention_epochs: 20_160,
            update_interval_epochs: 1_440,
            epochs: 20_160,
            movement_speed_m_per_epoch: 10.0,
            initial_infected: 5,
            transmission_prob: 0.012,
            test_delay_epochs: 2_880,
            threshold_t: 0,
            min_set_size_s: 0,
            decoy_count: 0,
            population_bound: 1000,
            group: GroupChoice::Test64,
            timeline_bucket_epochs: 1_440,
            tracing_suggestion: 2,
            analytics_suggestion: 1,
            attach: AttachSide::Received,
            participation_rate: 1.0,
            psi_pre_shuffle: true,
            poi_cells: Vec::new(),
            poi_bias: 0.0,
            seed: None,
        }
    }
}

impl WorldConfig {
    /// The built-in demo scenario: small, quick, with enough contacts and
    /// infections to exercise every pipeline.
    pub fn demo() -> Self {
        Self {
            grid_rows: 5,
            grid_cols: 5,
            cell_size_m: 40.0,
            citizens: 30,
            retention_epochs: 480,
            update_interval_epochs: 240,
            epochs: 960,
            initial_infected: 3,
            transmission_prob: 0.05,
            test_delay_epochs: 120,
            timeline_bucket_epochs: 240,
            ..Self::default()
        }
    }

    /// A partition scenario demonstrating the design guidance for infection
    /// analytics: small cells acting as labelled places of interest attract
    /// half of all movement, while the remaining cells cover residential
    /// ground where few distinct people meet.
    pub fn places() -> Self {
        Self {
            grid_rows: 8,
            grid_cols: 8,
            cell_size_m: 15.0,
            citizens: 40,
            transmission_prob: 0.08,
            poi_cells: vec![19, 28, 45],
            poi_bias: 0.5,
            ..Self::demo()
        }
    }

    pub fn builtin(name: &str) -> Option<Self> {
        match name {
            "demo" => Some(Self::demo()),
            "places" => Some(Self::places()),
            _ => None,
        }
    }

    /// Parses the flat `key = value` format on top of the canonical
    /// defaults; `#` starts a comment. Unknown keys are rejected so typos
    /// cannot silently fall back to defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (lineno, raw_line) in text.lines().enumerate() {
            let line = raw_line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                SimError::Config(format!("line {}: expected 'key = value'", lineno + 1))
            })?;
            let key = key.trim();
            let value = value.trim();
            let bad = |what: &str| {
                SimError::Config(format!("line {}: bad {what} value '{value}'", lineno + 1))
            };
            match key {
                "grid_rows" => cfg.grid_rows = value.parse().map_err(|_| bad(key))?,
                "grid_cols" => cfg.grid_cols = value.parse().map_err(|_| bad(key))?,
                "cell_size_m" => cfg.cell_size_m = value.parse().map_err(|_| bad(key))?,
                "citizens" => cfg.citizens = value.parse().map_err(|_| bad(key))?,
                "contact_radius_m" => cfg.contact_radius_m = value.parse().map_err(|_| bad(key))?,
                "epoch_length_secs" => cfg.epoch_length_secs = value.parse().map_err(|_| bad(key))?,
                "retention_epochs" => cfg.retention_epochs = value.parse().map_err(|_| bad(key))?,
                "update_interval_epochs" => {
                    cfg.update_interval_epochs = value.parse().map_err(|_| bad(key))?
                }
                "epochs" => cfg.epochs = value.parse().map_err(|_| bad(key))?,
                "movement_speed_m_per_epoch" => {
                    cfg.movement_speed_m_per_epoch = value.parse().map_err(|_| bad(key))?
                }
                "initial_infected" => cfg.initial_infected = value.parse().map_err(|_| bad(key))?,
                "transmission_prob" => {
                    cfg.transmission_prob = value.parse().map_err(|_| bad(key))?
                }
                "test_delay_epochs" => {
                    cfg.test_delay_epochs = value.parse().map_err(|_| bad(key))?
                }
                "threshold_t" => cfg.threshold_t = value.parse().map_err(|_| bad(key))?,
                "min_set_size_s" => cfg.min_set_size_s = value.parse().map_err(|_| bad(key))?,
                "decoy_count" => cfg.decoy_count = value.parse().map_err(|_| bad(key))?,
                "population_bound" => cfg.population_bound = value.parse().map_err(|_| bad(key))?,
                "group" => cfg.group = GroupChoice::parse(value)?,
                "timeline_bucket_epochs" => {
                    cfg.timeline_bucket_epochs = value.parse().map_err(|_| bad(key))?
                }
                "tracing_suggestion" => {
                    cfg.tracing_suggestion = value.parse().map_err(|_| bad(key))?
                }
                "analytics_suggestion" => {
                    cfg.analytics_suggestion = value.parse().map_err(|_| bad(key))?
                }
                "attach" => {
                    cfg.attach = match value {
                        "received" => AttachSide::Received,
                        "sent" => AttachSide::Sent,
                        _ => return Err(bad(key)),
                    }
                }
                "participation_rate" => {
                    cfg.participation_rate = value.parse().map_err(|_| bad(key))?
                }
                "psi_pre_shuffle" => cfg.psi_pre_shuffle = value.parse().map_err(|_| bad(key))?,
                "poi_cells" => {
                    cfg.poi_cells = value
                        .split(',')
                        .filter(|part| !part.trim().is_empty())
                        .map(|part| part.trim().parse().map_err(|_| bad(key)))
                        .collect::<Result<Vec<u32>>>()?
                }
                "poi_bias" => cfg.poi_bias = value.parse().map_err(|_| bad(key))?,
                "seed" => cfg.seed = Some(value.parse().map_err(|_| bad(key))?),
                other => {
                    return Err(SimError::Config(format!(
                        "line {}: unknown key '{other}'",
                        lineno + 1
                    )))
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: &str| Err(SimError::Config(msg.to_string()));
        if self.grid_rows == 0 || self.grid_cols == 0 {
            return fail("grid_rows and grid_cols must be positive");
        }
        if self.cell_size_m <= 0.0 {
            return fail("cell_size_m must be positive");
        }
        if self.citizens == 0 {
            return fail("citizens must be positive");
        }
        if self.contact_radius_m <= 0.0 {
            return fail("contact_radius_m must be positive");
        }
        if self.update_interval_epochs == 0 {
            return fail("update_interval_epochs must be at least 1");
        }
        if self.retention_epochs < self.update_interval_epochs {
            return fail("retention_epochs must be >= update_interval_epochs");
        }
        if self.epochs == 0 {
            return fail("epochs must be positive");
        }
        if !(0.0..=1.0).contains(&self.transmission_prob) {
            return fail("transmission_prob must be within [0, 1]");
        }
        if !(0.0..=1.0).contains(&self.participation_rate) {
            return fail("participation_rate must be within [0, 1]");
        }
        if self.decoy_count > self.cell_count() {
            return fail("decoy_count cannot exceed the number of cells");
        }
        if !(1..=2).contains(&self.tracing_suggestion) {
            return fail("tracing_suggestion must be 1 or 2");
        }
        if !(1..=2).contains(&self.analytics_suggestion) {
            return fail("analytics_suggestion must be 1 or 2");
        }
        if self.timeline_bucket_epochs == 0 {
            return fail("timeline_bucket_epochs must be positive");
        }
        if self.movement_speed_m_per_epoch < 0.0 {
            return fail("movement_speed_m_per_epoch must be non-negative");
        }
        if !(0.0..=1.0).contains(&self.poi_bias) {
            return fail("poi_bias must be within [0, 1]");
        }
        if self.poi_bias > 0.0 && self.poi_cells.is_empty() {
            return fail("poi_bias needs at least one poi_cells entry");
        }
        if self
            .poi_cells
            .iter()
            .any(|&cell| cell == 0 || cell > self.cell_count())
        {
            return fail("poi_cells entries must be within [1, M]");
        }
        Ok(())
    }

    pub fn cell_count(&self) -> u32 {
        self.grid_rows * self.grid_cols
    }

    /// Resolved number of revealed indices per density round.
    pub fn m_bar(&self) -> u32 {
        if self.decoy_count == 0 {
            self.cell_count().min(10)
        } else {
            self.decoy_count.min(self.cell_count())
        }
    }

    pub fn region_width_m(&self) -> f64 {
        f64::from(self.grid_cols) * self.cell_size_m
    }

    pub fn region_height_m(&self) -> f64 {
        f64::from(self.grid_rows) * self.cell_size_m
    }
}
