//! The run configuration shared by every subcommand.
//!
//! Every struct rejects unknown keys; missing keys take the defaults below.
//! `schema/run_config.schema.json` describes the same document and is kept in
//! step with these types by a test.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use peano_core::assembly::{CylinderOptions, TheoremSchedule};
use peano_core::lune::{presets, Lune};
use peano_core::smoothfn::{make_phi, NormSettings, DEFAULT_MAX_ORDER};
use peano_core::subdivision::{build_family, EpsilonSchedule, LuneFamily};

use crate::CliError;

/// The root lune.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case", deny_unknown_fields)]
pub enum LuneSpec {
    /// `f ≡ 0` under the unit hump.
    Hump {},
    /// The unit hump supported on `(a, b)`, rescaled to `(0, 1)`.
    HumpOn { a: f64, b: f64 },
    Tilted {},
    Random { seed: u64 },
    /// Floor `Σ floor[i] x^i`, gap `Σ gap[i] H^(i+1)` for the unit hump `H`.
    Custom { floor: Vec<f64>, gap: Vec<f64> },
}

impl LuneSpec {
    pub fn build(&self) -> Result<Lune, CliError> {
        let l = match self {
            LuneSpec::Hump {} => presets::hump(),
            LuneSpec::HumpOn { a, b } => {
                if !(0.0 <= *a && a < b && *b <= 1.0) {
                    return Err(CliError::Config(format!("hump_on needs 0 ≤ a < b ≤ 1, got ({a}, {b})")));
                }
                presets::hump_on(*a, *b).normalized()?
            }
            LuneSpec::Tilted {} => presets::tilted(),
            LuneSpec::Random { seed } => presets::random(*seed).normalized()?,
            LuneSpec::Custom { floor, gap } => {
                presets::custom(floor, gap).map_err(|e| CliError::Config(e.to_string()))?
            }
        };
        Ok(l)
    }
}

/// Sample counts for artifacts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Grids {
    /// Points per CSV sweep: curve parameters, ceiling abscissae, angles.
    pub samples: usize,
    /// Field arrows per row and per column.
    pub field: [usize; 2],
    /// Side of the square rasters used for footprint comparisons.
    pub raster: usize,
    /// Parameters used to find the legs of a traced curve image.
    pub image_params: usize,
    /// Angles on which ceilings of cylinders and embeddings are normed.
    pub theta: usize,
}

impl Default for Grids {
    fn default() -> Self {
        Grids { samples: 513, field: [24, 12], raster: 512, image_params: 4096, theta: 1024 }
    }
}

/// Which checks `verify` runs and how hard.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    /// Names of the checks to run, in order.
    pub checks: Vec<String>,
    /// Schedule the norm invariant is checked against; defaults to the one
    /// the family was built with.
    pub check_eps: Option<EpsilonSchedule>,
    pub monotone_pairs: usize,
    pub flat_gaps: usize,
    pub tangency_params: usize,
    pub tangency_grid: usize,
    pub cauchy_params: usize,
    /// Coarse depth compared with the finest; capped at `depth`.
    pub cauchy_low: usize,
    pub footprint_params: usize,
    /// Random words per depth on top of the extremal ones.
    pub extra_words: usize,
    pub stack_params: usize,
    pub proximity_per_band: usize,
    pub curvature_params: usize,
}

pub const ALL_CHECKS: &[&str] = &[
    "norm_invariant",
    "floor_increment",
    "ceiling_monotone",
    "gap_flatness",
    "tangency",
    "diameter",
    "cauchy",
    "containment",
    "coverage",
    "earlier_point",
    "junction",
    "footprint",
    "cylinder",
    "stack",
    "proximity",
    "curvature",
];

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            checks: ALL_CHECKS.iter().map(|s| s.to_string()).collect(),
            check_eps: None,
            monotone_pairs: 100,
            flat_gaps: 50,
            tangency_params: 20,
            tangency_grid: 512,
            cauchy_params: 10_000,
            cauchy_low: 2,
            footprint_params: 10,
            extra_words: 64,
            stack_params: 100,
            proximity_per_band: 200,
            curvature_params: 20,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CylinderConfig {
    pub depth: usize,
    pub t_range: (f64, f64),
    pub y_range: (f64, f64),
    pub k0: usize,
    pub delta0: f64,
    /// Parameter values for `C`.
    pub c_samples: usize,
    pub max_stack: u64,
}

impl Default for CylinderConfig {
    fn default() -> Self {
        CylinderConfig {
            depth: 3,
            t_range: (0.0, 1.0),
            y_range: (0.0, 1.0),
            k0: 2,
            delta0: 0.1,
            c_samples: 257,
            max_stack: 1_000_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TheoremConfig {
    pub schedule: TheoremSchedule,
    pub window: (f64, f64),
    pub depth: usize,
    /// Embeddings `β_t` written per band.
    pub curves_per_band: usize,
}

impl Default for TheoremConfig {
    fn default() -> Self {
        TheoremConfig {
            schedule: TheoremSchedule::uniform(0.5, 2.0, 3, 2, 0.2),
            window: (0.5, 2.0),
            depth: 3,
            curves_per_band: 3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub lune: LuneSpec,
    pub eps: EpsilonSchedule,
    pub depth: usize,
    pub norm: NormSettings,
    /// Order of the jets compared across the cylinder seam; at least every
    /// norm order requested elsewhere.
    pub max_jet_order: usize,
    /// Seed for every sampled check.
    pub seed: u64,
    /// Parameters `t` for the `ceiling` and `footprint` subcommands.
    pub params: Vec<f64>,
    /// `m` sequence for the `cantor` subcommand; the family's when absent.
    pub cantor_m: Option<Vec<u64>>,
    /// Largest number of intervals or nodes written out.
    pub export_cap: u64,
    pub grids: Grids,
    pub verify: VerifyConfig,
    pub cylinder: CylinderConfig,
    pub theorem: TheoremConfig,
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            lune: LuneSpec::Hump {},
            eps: EpsilonSchedule::default(),
            depth: 4,
            norm: NormSettings::default(),
            max_jet_order: 8,
            seed: 1,
            params: vec![0.25, 0.5, 0.75, 1.0],
            cantor_m: None,
            export_cap: 4096,
            grids: Grids::default(),
            verify: VerifyConfig::default(),
            cylinder: CylinderConfig::default(),
            theorem: TheoremConfig::default(),
            out_dir: PathBuf::from("out"),
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        self.eps.validate().map_err(|e| CliError::Config(e.to_string()))?;
        self.norm.validate().map_err(|e| CliError::Config(e.to_string()))?;
        if self.depth < 1 || self.depth > 12 {
            return bad(format!("depth must be in 1..=12, got {}", self.depth));
        }
        let needed = self.theorem.schedule.k.iter().copied().chain([self.cylinder.k0, 1]).max().unwrap_or(1);
        if self.max_jet_order < needed || self.max_jet_order > DEFAULT_MAX_ORDER {
            return bad(format!(
                "max_jet_order must be in {needed}..={DEFAULT_MAX_ORDER}, got {}",
                self.max_jet_order
            ));
        }
        if let Some(t) = self.params.iter().find(|t| !(0.0..=1.0).contains(*t)) {
            return bad(format!("parameter {t} is outside [0, 1]"));
        }
        if let Some(m) = &self.cantor_m {
            if m.first() != Some(&1) || m.contains(&0) {
                return bad("cantor_m must start with 1 and contain no zeros".into());
            }
        }
        let g = &self.grids;
        if g.samples < 2 || g.raster < 8 || g.image_params < 2 || g.theta < 8 || g.field.contains(&0) {
            return bad("grid sizes are too small".into());
        }
        let v = &self.verify;
        if let Some(name) = v.checks.iter().find(|c| !ALL_CHECKS.contains(&c.as_str())) {
            return bad(format!("unknown check '{name}'; known checks: {}", ALL_CHECKS.join(", ")));
        }
        if let Some(e) = &v.check_eps {
            e.validate().map_err(|e| CliError::Config(e.to_string()))?;
        }
        if v.cauchy_low < 1 {
            return bad("cauchy_low must be at least 1".into());
        }
        let c = &self.cylinder;
        if c.depth < 1 || !(c.delta0 > 0.0) || c.c_samples < 2 {
            return bad("cylinder needs depth ≥ 1, delta0 > 0 and at least two samples for C".into());
        }
        let t = &self.theorem;
        t.schedule.validate().map_err(|e| CliError::Config(e.to_string()))?;
        if t.depth < 1 || t.curves_per_band < 1 {
            return bad("theorem needs depth ≥ 1 and at least one curve per band".into());
        }
        Ok(())
    }

    pub fn family(&self) -> Result<LuneFamily, CliError> {
        Ok(build_family(&self.lune.build()?, &self.eps, self.depth, &make_phi(), &self.norm)?)
    }

    pub fn cylinder_options(&self) -> CylinderOptions {
        CylinderOptions {
            eps: self.eps,
            norm: self.norm,
            c_samples: self.cylinder.c_samples,
            theta_grid: self.grids.theta,
            max_stack: self.cylinder.max_stack,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let cfg = RunConfig::default();
        let text = serde_json::to_string(&cfg).unwrap();
        assert_eq!(RunConfig::from_json(&text).unwrap(), cfg);
        assert_eq!(RunConfig::from_json("{}").unwrap(), cfg);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::from_json(r#"{"depht": 3}"#).is_err());
        assert!(RunConfig::from_json(r#"{"grids": {"sample": 3}}"#).is_err());
        assert!(RunConfig::from_json(r#"{"lune": {"preset": "hump", "a": 1}}"#).is_err());
        assert!(RunConfig::from_json(r#"{"verify": {"checks": ["nope"]}}"#).is_err());
    }

    #[test]
    fn lune_presets_parse() {
        let cfg = RunConfig::from_json(r#"{"lune": {"preset": "custom", "floor": [0.0, 0.1], "gap": [1.0]}}"#).unwrap();
        assert!(cfg.lune.build().is_ok());
        let cfg = RunConfig::from_json(r#"{"lune": {"preset": "hump_on", "a": 0.2, "b": 0.9}}"#).unwrap();
        assert_eq!(cfg.lune.build().unwrap().declared_support(), Some((0.0, 1.0)));
    }
}
