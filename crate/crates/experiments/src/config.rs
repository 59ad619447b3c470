//! TOML experiment configurations with desk-scale defaults.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{ExperimentError, Result};

/// Axis-aligned rectangle `[x0, x1] × [y0, y1]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rect {
    pub const fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        Rect { x0, x1, y0, y1 }
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x0 && x <= self.x1 && y >= self.y0 && y <= self.y1
    }

    /// Closed rectangles share no point.
    pub fn disjoint(&self, o: &Rect) -> bool {
        self.x1 < o.x0 || o.x1 < self.x0 || self.y1 < o.y0 || o.y1 < self.y0
    }

    fn validate(&self, what: &str) -> Result<()> {
        if !(self.x0 < self.x1 && self.y0 < self.y1) {
            return Err(ExperimentError::Config(format!("{what}: rectangle {self:?} is empty")));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub end_time: f64,
    pub steps: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            end_time: 10.0,
            steps: 200,
        }
    }
}

/// `height·exp(−(t−center)²/width²)` on `|t − center| ≤ 2·width`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BumpConfig {
    pub center: f64,
    pub height: f64,
    pub width: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StoveSource {
    pub footprint: Rect,
    pub signal: BumpConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StoveConfig {
    /// Cells per side of the unit square.
    pub cells: usize,
    pub grid: GridConfig,
    pub sources: Vec<StoveSource>,
}

impl Default for StoveConfig {
    fn default() -> Self {
        let src = |footprint, center, height, width| StoveSource {
            footprint,
            signal: BumpConfig { center, height, width },
        };
        StoveConfig {
            cells: 64,
            grid: GridConfig::default(),
            sources: vec![
                src(Rect::new(0.125, 0.375, 0.125, 0.375), 2.25, 30.6, 1.0),
                src(Rect::new(0.625, 0.875, 0.25, 0.5), 5.0, 20.0, 1.5),
                src(Rect::new(0.25, 0.5, 0.625, 0.875), 7.5, 22.5, 1.0),
            ],
        }
    }
}

impl StoveConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sources.is_empty() {
            return Err(ExperimentError::Config("stove needs at least one source".into()));
        }
        let unit = Rect::new(0.0, 1.0, 0.0, 1.0);
        for (i, s) in self.sources.iter().enumerate() {
            s.footprint.validate("stove footprint")?;
            if !(unit.contains(s.footprint.x0, s.footprint.y0) && unit.contains(s.footprint.x1, s.footprint.y1)) {
                return Err(ExperimentError::Config(format!("footprint {i} leaves the unit square")));
            }
            if !(s.signal.height >= 0.0 && s.signal.width > 0.0) {
                return Err(ExperimentError::Config(format!("signal {i} needs height >= 0 and width > 0")));
            }
            for (j, o) in self.sources.iter().enumerate().skip(i + 1) {
                if !s.footprint.disjoint(&o.footprint) {
                    return Err(ExperimentError::Config(format!("footprints {i} and {j} overlap")));
                }
            }
        }
        Ok(())
    }
}

/// `value` on `[start, end)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Piece {
    pub start: f64,
    pub end: f64,
    pub value: f64,
}

impl Piece {
    pub const fn new(start: f64, end: f64, value: f64) -> Self {
        Piece { start, end, value }
    }
}

/// Source of the time-independent permeability `κ₀`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BackgroundConfig {
    /// Raster file with one value per cell; the synthetic generator is used when absent.
    pub raster: Option<PathBuf>,
    pub seed: u64,
    /// Smoothing radii of the synthetic field, in cells.
    pub radius_x: usize,
    pub radius_y: usize,
    /// Standard deviation of `log10 κ₀`.
    pub log10_std: f64,
    pub log10_min: f64,
    pub log10_max: f64,
}

impl Default for BackgroundConfig {
    fn default() -> Self {
        BackgroundConfig {
            raster: None,
            seed: 10,
            radius_x: 8,
            radius_y: 1,
            log10_std: 1.0,
            log10_min: -3.0,
            log10_max: 3.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Spe10Config {
    pub lx: f64,
    pub ly: f64,
    pub nx: usize,
    pub ny: usize,
    pub grid: GridConfig,
    pub background: BackgroundConfig,
    /// Strips switched on by the first channel signal.
    pub channels1: Vec<Rect>,
    /// Strips switched on by the second channel signal.
    pub channels2: Vec<Rect>,
    pub channel_value: f64,
    pub kappa_min: f64,
    pub kappa1_signal: Vec<Piece>,
    pub kappa2_signal: Vec<Piece>,
    pub inflow_signal: Vec<Piece>,
    /// Inflow segment `[x0, x1]` on the top edge.
    pub inflow_x0: f64,
    pub inflow_x1: f64,
}

impl Default for Spe10Config {
    fn default() -> Self {
        Spe10Config {
            lx: 2.2,
            ly: 0.6,
            nx: 110,
            ny: 30,
            grid: GridConfig::default(),
            background: BackgroundConfig::default(),
            channels1: vec![Rect::new(0.5, 0.6, 0.2, 0.6), Rect::new(1.0, 1.1, 0.2, 0.6)],
            channels2: vec![Rect::new(1.6, 1.7, 0.2, 0.6)],
            channel_value: 1e3,
            kappa_min: 1e-3,
            kappa1_signal: vec![Piece::new(3.0, 7.5, 1.0), Piece::new(8.0, 10.0, 1.0)],
            kappa2_signal: vec![Piece::new(8.0, 10.0, 1.0)],
            inflow_signal: vec![Piece::new(1.0, 5.5, 1.0), Piece::new(8.0, 9.0, 5.0)],
            inflow_x0: 0.4,
            inflow_x1: 1.8,
        }
    }
}

impl Spe10Config {
    pub fn validate(&self) -> Result<()> {
        if !(self.lx > 0.0 && self.ly > 0.0) || self.nx < 2 || self.ny < 2 {
            return Err(ExperimentError::Config("domain needs positive size and at least 2x2 cells".into()));
        }
        for r in self.channels1.iter().chain(&self.channels2) {
            r.validate("channel")?;
        }
        if !(self.channel_value >= 0.0 && self.kappa_min > 0.0) {
            return Err(ExperimentError::Config("need channel_value >= 0 and kappa_min > 0".into()));
        }
        if !(0.0 <= self.inflow_x0 && self.inflow_x0 < self.inflow_x1 && self.inflow_x1 <= self.lx) {
            return Err(ExperimentError::Config("inflow segment must lie on the top edge".into()));
        }
        let b = &self.background;
        if !(b.log10_min <= b.log10_max && b.log10_std >= 0.0) {
            return Err(ExperimentError::Config("background needs log10_min <= log10_max and log10_std >= 0".into()));
        }
        Ok(())
    }
}

pub fn from_toml_str<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T> {
    toml::from_str(text).map_err(|e| ExperimentError::Config(e.to_string()))
}

pub fn from_toml_file<T: for<'de> Deserialize<'de>>(path: impl AsRef<Path>) -> Result<T> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| chronobasis::Error::io(path, e))?;
    from_toml_str(&text)
}

pub fn to_toml_string<T: Serialize>(cfg: &T) -> Result<String> {
    toml::to_string(cfg).map_err(|e| ExperimentError::Config(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_toml() {
        let s = StoveConfig::default();
        assert_eq!(from_toml_str::<StoveConfig>(&to_toml_string(&s).unwrap()).unwrap(), s);
        let p = Spe10Config::default();
        assert_eq!(from_toml_str::<Spe10Config>(&to_toml_string(&p).unwrap()).unwrap(), p);
    }

    #[test]
    fn partial_file_keeps_defaults() {
        let c: StoveConfig = from_toml_str("cells = 16\n[grid]\nend_time = 10.0\nsteps = 50\n").unwrap();
        assert_eq!(c.cells, 16);
        assert_eq!(c.grid.steps, 50);
        assert_eq!(c.sources.len(), 3);
        assert!(from_toml_str::<StoveConfig>("cels = 16").is_err());
    }

    #[test]
    fn overlapping_footprints_rejected() {
        let mut c = StoveConfig::default();
        assert!(c.validate().is_ok());
        c.sources[1].footprint = Rect::new(0.3, 0.6, 0.3, 0.6);
        assert!(c.validate().is_err());
    }
}
