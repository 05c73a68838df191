//! Experiment configuration files (JSON or TOML, chosen by extension).

use std::path::{Path, PathBuf};

use hartogs_core::extension::{InputFunction, PipelineOptions};
use hartogs_core::geometry::{AffineSubspace, CutoffProfile, DomainSpec, ExtensionConfig, ObstacleSet};
use hartogs_core::hardy::FamilyKind;
use hartogs_core::{DerivativeScheme, Error, GridSpec, Result};
use serde::{Deserialize, Serialize};

/// Geometry of the extension problem, without the grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometrySection {
    pub omega: DomainSpec,
    pub obstacle: ObstacleSet,
    pub subspace: AffineSubspace,
    pub r: f64,
    #[serde(rename = "R")]
    pub big_r: f64,
    #[serde(default)]
    pub chi: CutoffProfile,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilySpec {
    pub kind: FamilyKind,
    pub count: usize,
    /// Defaults to the run seed plus the family's position in the list.
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HardySection {
    pub subspace: AffineSubspace,
    #[serde(default)]
    pub families: Vec<FamilySpec>,
    /// Also evaluate a Gaussian centered on `H` against its closed form.
    #[serde(default = "yes")]
    pub closed_form: bool,
    #[serde(default = "default_witness_points")]
    pub witness_points: usize,
    #[serde(default = "default_witness_distance")]
    pub witness_min_distance: f64,
}

fn yes() -> bool {
    true
}

fn default_witness_points() -> usize {
    100
}

fn default_witness_distance() -> f64 {
    0.5
}

/// Synthetic right-hand sides for the `solve` subcommand.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum Datum {
    /// `v = dbar g` for a smooth bump `g`.
    DbarBump { center: Vec<f64>, radius: f64 },
    /// `v = dbar g` for a seeded random band-limited `g`.
    DbarBandLimited { max_wavenumber: usize },
    /// `v = bump dz-bar_j`, which is not closed in general.
    Bump {
        center: Vec<f64>,
        radius: f64,
        component: usize,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveSection {
    pub subspace: AffineSubspace,
    pub datum: Datum,
    #[serde(default)]
    pub scheme: DerivativeScheme,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunOptions {
    pub resolution: Option<usize>,
    pub out_dir: Option<PathBuf>,
    pub seed: u64,
    pub dump_fields: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub grid: GridSpec,
    #[serde(default)]
    pub geometry: Option<GeometrySection>,
    #[serde(default)]
    pub f: Option<InputFunction>,
    #[serde(default)]
    pub pipeline: PipelineOptions,
    #[serde(default)]
    pub hardy: Option<HardySection>,
    #[serde(default)]
    pub solve: Option<SolveSection>,
    #[serde(default)]
    pub run: RunOptions,
}

/// Command-line overrides of the run options.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub resolution: Option<usize>,
    pub out_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub dump_fields: bool,
}

impl ExperimentConfig {
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
        match ext {
            "toml" => toml::from_str(text).map_err(|e| Error::Config(format!("{}: {e}", path.display()))),
            "json" | "" => serde_json::from_str(text).map_err(|e| Error::Config(format!("{}: {e}", path.display()))),
            other => Err(Error::Config(format!("unsupported config extension .{other}"))),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text, path)
    }

    /// Applies command-line overrides; the resolution override replaces the
    /// grid's points per axis.
    pub fn apply(&mut self, o: &Overrides) -> Result<()> {
        if let Some(p) = o.resolution.or(self.run.resolution) {
            self.grid = self.grid.with_resolution(p)?;
            self.run.resolution = Some(p);
        }
        if o.out_dir.is_some() {
            self.run.out_dir = o.out_dir.clone();
        }
        if let Some(s) = o.seed {
            self.run.seed = s;
        }
        self.run.dump_fields |= o.dump_fields;
        Ok(())
    }

    pub fn extension_config(&self) -> Result<ExtensionConfig> {
        let g = self
            .geometry
            .as_ref()
            .ok_or_else(|| Error::Config("missing `geometry` section".into()))?;
        let cfg = ExtensionConfig {
            grid: self.grid,
            omega: g.omega.clone(),
            obstacle: g.obstacle.clone(),
            subspace: g.subspace.clone(),
            fattening_radius: g.r,
            tube_radius: g.big_r,
            chi: g.chi,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn input_function(&self) -> Result<&InputFunction> {
        self.f
            .as_ref()
            .ok_or_else(|| Error::Config("missing input function `f`".into()))
    }

    pub fn hardy_section(&self) -> Result<&HardySection> {
        self.hardy
            .as_ref()
            .ok_or_else(|| Error::Config("missing `hardy` section".into()))
    }

    pub fn solve_section(&self) -> Result<&SolveSection> {
        self.solve
            .as_ref()
            .ok_or_else(|| Error::Config("missing `solve` section".into()))
    }

    pub fn out_dir(&self) -> PathBuf {
        self.run.out_dir.clone().unwrap_or_else(|| PathBuf::from("out"))
    }
}
