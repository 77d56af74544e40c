//! The per-site option grid: four algorithms at five usability levels.

use rayon::prelude::*;

use super::arbitrary::usability_from_seeds;
use super::linear::{optimize_linear_ctx, LinearContext};
use super::{energy, identity_energy, Algorithm, ArbitraryOptions, ColorMap, OptimizeError, Outcome, PerceptualConstraint, DEFAULT_TOLERANCE};
use crate::contribution::ContributionVector;
use crate::powermodel::PixelPowerModel;

/// λ for levels 1..=5.
pub const LEVELS: [f64; 5] = [0.9, 0.8, 0.7, 0.6, 0.5];

pub const GRID_MAGIC: &[u8; 4] = b"CHMG";
pub const GRID_VERSION: u16 = 1;

#[derive(Debug, Clone)]
pub struct GridOptions {
    pub tolerance: f64,
    pub arbitrary: ArbitraryOptions,
}

impl Default for GridOptions {
    fn default() -> Self {
        Self { tolerance: DEFAULT_TOLERANCE, arbitrary: ArbitraryOptions::default() }
    }
}

#[derive(Debug, Clone)]
pub struct GridCell {
    pub algorithm: Algorithm,
    pub level: u8,
    pub result: Result<Outcome, OptimizeError>,
}

impl GridCell {
    pub fn lambda(&self) -> f64 {
        LEVELS[usize::from(self.level) - 1]
    }

    pub fn outcome(&self) -> Option<&Outcome> {
        self.result.as_ref().ok()
    }
}

/// All 20 cells, ordered by algorithm then level.
#[derive(Debug, Clone)]
pub struct OptionGrid {
    pub cells: Vec<GridCell>,
}

impl OptionGrid {
    pub fn cell(&self, algorithm: Algorithm, level: u8) -> Option<&GridCell> {
        self.cells.iter().find(|c| c.algorithm == algorithm && c.level == level)
    }

    pub fn map(&self, algorithm: Algorithm, level: u8) -> Option<&ColorMap> {
        self.cell(algorithm, level).and_then(GridCell::outcome).map(|o| &o.map)
    }

    /// Successful cells as `(algorithm, level)`.
    pub fn available(&self) -> Vec<(Algorithm, u8)> {
        self.cells.iter().filter(|c| c.result.is_ok()).map(|c| (c.algorithm, c.level)).collect()
    }

    /// Serialize the successful maps. Energies are not stored; see
    /// [`OptionGrid::from_bytes`].
    pub fn to_bytes(&self) -> Vec<u8> {
        let maps: Vec<Vec<u8>> = self.cells.iter().filter_map(GridCell::outcome).map(|o| o.map.to_bytes()).collect();
        let mut out = Vec::new();
        out.extend_from_slice(GRID_MAGIC);
        out.extend_from_slice(&GRID_VERSION.to_le_bytes());
        out.push(maps.len() as u8);
        for m in maps {
            out.extend_from_slice(&(m.len() as u32).to_le_bytes());
            out.extend_from_slice(&m);
        }
        out
    }

    /// Read a grid file and recompute each cell's energy against `d`.
    /// Cells missing from the file come back as infeasible.
    pub fn from_bytes(bytes: &[u8], m: &PixelPowerModel, d: &ContributionVector) -> Result<Self, OptimizeError> {
        let maps = Self::read_maps(bytes)?;
        let base = identity_energy(m, d);
        let mut cells = empty_cells();
        for map in maps {
            let Some(cell) = cells.iter_mut().find(|c| c.algorithm == map.algorithm && c.level == map.level) else {
                return Err(OptimizeError::Format(format!("map for {} level {} is not a grid cell", map.algorithm, map.level)));
            };
            if cell.result.is_ok() {
                return Err(OptimizeError::Format(format!("duplicate cell {} level {}", map.algorithm, map.level)));
            }
            let e = energy(m, &map, d);
            let reduction = if base > 0.0 { 1.0 - e / base } else { 0.0 };
            cell.result = Ok(Outcome { map, energy: e, reduction, params: None });
        }
        Ok(Self { cells })
    }

    /// The maps in a grid file, in file order.
    pub fn read_maps(bytes: &[u8]) -> Result<Vec<ColorMap>, OptimizeError> {
        let err = |m: &str| OptimizeError::Format(m.to_string());
        if bytes.len() < 4 || &bytes[..4] != GRID_MAGIC {
            return Err(err("bad grid magic"));
        }
        if bytes.len() < 7 {
            return Err(err("truncated grid header"));
        }
        let version = u16::from_le_bytes([bytes[4], bytes[5]]);
        if version != GRID_VERSION {
            return Err(OptimizeError::Format(format!("unsupported grid version {version}")));
        }
        let count = usize::from(bytes[6]);
        let mut rest = &bytes[7..];
        let mut maps = Vec::with_capacity(count);
        for _ in 0..count {
            if rest.len() < 4 {
                return Err(err("truncated grid record"));
            }
            let len = u32::from_le_bytes(rest[..4].try_into().unwrap()) as usize;
            rest = &rest[4..];
            if rest.len() < len {
                return Err(err("truncated grid record"));
            }
            maps.push(ColorMap::from_bytes(&rest[..len])?);
            rest = &rest[len..];
        }
        if !rest.is_empty() {
            return Err(err("trailing bytes after grid"));
        }
        Ok(maps)
    }
}

fn empty_cells() -> Vec<GridCell> {
    let mut cells = Vec::with_capacity(20);
    for algorithm in Algorithm::ALL {
        for level in 1..=LEVELS.len() as u8 {
            cells.push(GridCell { algorithm, level, result: Err(OptimizeError::Infeasible("no map stored".into())) });
        }
    }
    cells
}

pub fn build_option_grid(m: &PixelPowerModel, d: &ContributionVector) -> Result<OptionGrid, OptimizeError> {
    build_option_grid_with(m, d, &GridOptions::default())
}

/// Linear cells run in parallel; arbitrary cells are seeded with the linear
/// outcomes of their level, so each is at least as good as the best of them.
pub fn build_option_grid_with(m: &PixelPowerModel, d: &ContributionVector, opts: &GridOptions) -> Result<OptionGrid, OptimizeError> {
    let ctx = LinearContext::new(d)?;
    let mut cells = empty_cells();
    cells.par_iter_mut().filter(|c| c.algorithm != Algorithm::Arbitrary).for_each(|cell| {
        let constraint = PerceptualConstraint::Usability { lambda: cell.lambda(), tolerance: opts.tolerance };
        cell.result = optimize_linear_ctx(&ctx, m, cell.algorithm, constraint).map(|mut o| {
            o.map.level = cell.level;
            o
        });
    });
    let arbitrary: Vec<(u8, Result<Outcome, OptimizeError>)> = (1..=LEVELS.len() as u8)
        .into_par_iter()
        .map(|level| {
            let seeds: Vec<Outcome> = cells
                .iter()
                .filter(|c| c.level == level && c.algorithm != Algorithm::Arbitrary)
                .filter_map(|c| c.outcome().cloned())
                .collect();
            let constraint = PerceptualConstraint::Usability { lambda: LEVELS[usize::from(level) - 1], tolerance: opts.tolerance };
            let r = usability_from_seeds(m, d, &ctx.palette, constraint, &seeds, &opts.arbitrary).map(|mut o| {
                o.map.level = level;
                o
            });
            (level, r)
        })
        .collect();
    for (level, r) in arbitrary {
        let cell = cells.iter_mut().find(|c| c.algorithm == Algorithm::Arbitrary && c.level == level).unwrap();
        cell.result = r;
    }
    if cells.iter().all(|c| c.result.is_err()) {
        return Err(OptimizeError::Infeasible("no grid cell could be computed".into()));
    }
    Ok(OptionGrid { cells })
}
