//! Power-minimizing color maps.
//!
//! The energy of a map over a contribution vector is `E = Σ wᵢ·P(x′ᵢ)`, with
//! `wᵢ` the pixel·seconds of color `xᵢ` and `P` the pixel power of its
//! displayed replacement. Maps are chosen to minimize `E` under either a
//! fidelity budget (total weighted CIELAB distortion) or a usability ratio
//! (pairwise distances preserved up to a factor λ).
//!
//! Usability distances are measured between sRGB code-value triples, using
//! each map's target before 8-bit rounding. Dark and inversion maps scale
//! every such distance by exactly λ, so their score is λ.

mod arbitrary;
mod grid;
mod linear;

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use arbitrary::{optimize_arbitrary, optimize_arbitrary_lattice, optimize_arbitrary_with, ArbitraryOptions, BudgetSplit};
pub use grid::{build_option_grid, build_option_grid_with, GridCell, GridOptions, OptionGrid, LEVELS};
pub use linear::optimize_linear;

use crate::colorspace::{quantize_code, Srgb};
use crate::contribution::{color_key, key_color, ContributionVector};
use crate::powermodel::PixelPowerModel;

/// Default relative slack on usability distance ratios.
pub const DEFAULT_TOLERANCE: f64 = 0.05;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OptimizeError {
    #[error("contribution vector is empty")]
    EmptyContribution,
    #[error("usability score needs at least two distinct colors")]
    TooFewColors,
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("invalid constraint: {0}")]
    InvalidConstraint(String),
    #[error("bad color map file: {0}")]
    Format(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Dark,
    Green,
    Inversion,
    Arbitrary,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [Algorithm::Dark, Algorithm::Green, Algorithm::Inversion, Algorithm::Arbitrary];
    pub const LINEAR: [Algorithm; 3] = [Algorithm::Dark, Algorithm::Green, Algorithm::Inversion];

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Self::ALL.get(usize::from(code)).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Dark => "dark",
            Algorithm::Green => "green",
            Algorithm::Inversion => "inversion",
            Algorithm::Arbitrary => "arbitrary",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "dark" => Ok(Algorithm::Dark),
            "green" => Ok(Algorithm::Green),
            "inversion" | "invert" => Ok(Algorithm::Inversion),
            "arbitrary" => Ok(Algorithm::Arbitrary),
            other => Err(format!("unknown algorithm `{other}` (dark, green, inversion, arbitrary)")),
        }
    }
}

/// What a color map must preserve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PerceptualConstraint {
    /// `Σ wᵢ·‖Lab(xᵢ) − Lab(x′ᵢ)‖ ≤ delta`.
    Fidelity { delta: f64 },
    /// Pairwise distance ratios at least `lambda` (linear maps) or within
    /// `lambda·(1 ± tolerance)` (arbitrary maps).
    Usability { lambda: f64, tolerance: f64 },
}

impl PerceptualConstraint {
    pub fn fidelity(delta: f64) -> Self {
        Self::Fidelity { delta }
    }

    pub fn usability(lambda: f64) -> Self {
        Self::Usability { lambda, tolerance: DEFAULT_TOLERANCE }
    }

    pub fn validate(&self) -> Result<(), OptimizeError> {
        match *self {
            Self::Fidelity { delta } if !(delta >= 0.0 && delta.is_finite()) => {
                Err(OptimizeError::InvalidConstraint(format!("delta {delta} must be finite and >= 0")))
            }
            Self::Usability { lambda, .. } if !(lambda > 0.0 && lambda <= 1.0) => {
                Err(OptimizeError::InvalidConstraint(format!("lambda {lambda} must be in (0, 1]")))
            }
            Self::Usability { tolerance, .. } if !(tolerance >= 0.0 && tolerance.is_finite()) => {
                Err(OptimizeError::InvalidConstraint(format!("tolerance {tolerance} must be >= 0")))
            }
            _ => Ok(()),
        }
    }
}

/// Replacement for one source color.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapEntry {
    /// Displayed color.
    pub target: Srgb,
    /// Target in code-value space before rounding; equals `target` for maps
    /// read from disk.
    pub exact: [f64; 3],
}

impl MapEntry {
    pub fn integer(target: Srgb) -> Self {
        let c = target.channels();
        Self { target, exact: [f64::from(c[0]), f64::from(c[1]), f64::from(c[2])] }
    }

    pub fn from_exact(exact: [f64; 3]) -> Self {
        Self { target: Srgb::new(quantize_code(exact[0]), quantize_code(exact[1]), quantize_code(exact[2])), exact }
    }
}

/// X′: per-color substitution plus the darkening factor for images.
#[derive(Debug, Clone, PartialEq)]
pub struct ColorMap {
    /// Keyed by the source color's key; colors not listed map to themselves.
    pub entries: BTreeMap<u32, MapEntry>,
    pub image_lambda: f64,
    pub algorithm: Algorithm,
    pub level: u8,
    pub logo_as_gui: bool,
}

pub const MAP_MAGIC: &[u8; 4] = b"CHMX";
pub const MAP_VERSION: u16 = 1;
const MAP_HEADER_LEN: usize = 24;

impl ColorMap {
    pub fn identity(algorithm: Algorithm) -> Self {
        Self { entries: BTreeMap::new(), image_lambda: 1.0, algorithm, level: 0, logo_as_gui: false }
    }

    pub fn get(&self, c: Srgb) -> Srgb {
        self.entries.get(&color_key(c)).map_or(c, |e| e.target)
    }

    pub fn exact(&self, c: Srgb) -> [f64; 3] {
        self.entries.get(&color_key(c)).map_or_else(|| MapEntry::integer(c).exact, |e| e.exact)
    }

    pub fn insert(&mut self, src: Srgb, entry: MapEntry) {
        self.entries.insert(color_key(src), entry);
    }

    pub fn lookup_table(&self) -> HashMap<Srgb, Srgb> {
        self.entries.iter().map(|(&k, e)| (key_color(k), e.target)).collect()
    }

    pub fn is_identity(&self) -> bool {
        self.image_lambda == 1.0 && self.entries.iter().all(|(&k, e)| key_color(k) == e.target)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(MAP_HEADER_LEN + 8 * self.entries.len());
        out.extend_from_slice(MAP_MAGIC);
        out.extend_from_slice(&MAP_VERSION.to_le_bytes());
        out.push(self.algorithm.code());
        out.push(self.level);
        out.extend_from_slice(&self.image_lambda.to_le_bytes());
        out.push(u8::from(self.logo_as_gui));
        out.extend_from_slice(&[0; 3]);
        out.extend_from_slice(&(self.entries.len() as u32).to_le_bytes());
        for (&k, e) in &self.entries {
            out.extend_from_slice(&k.to_le_bytes());
            out.extend_from_slice(&color_key(e.target).to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, OptimizeError> {
        let fmt_err = |m: &str| OptimizeError::Format(m.to_string());
        if bytes.len() < 4 || &bytes[..4] != MAP_MAGIC {
            return Err(fmt_err("bad magic"));
        }
        if bytes.len() < MAP_HEADER_LEN {
            return Err(fmt_err("truncated header"));
        }
        let version = u16::from_le_bytes([bytes[4], bytes[5]]);
        if version != MAP_VERSION {
            return Err(OptimizeError::Format(format!("unsupported version {version}")));
        }
        let algorithm = Algorithm::from_code(bytes[6]).ok_or_else(|| fmt_err("unknown algorithm"))?;
        let level = bytes[7];
        let image_lambda = f64::from_le_bytes(bytes[8..16].try_into().unwrap());
        if !(0.0..=1.0).contains(&image_lambda) {
            return Err(fmt_err("image_lambda out of range"));
        }
        let logo_as_gui = match bytes[16] {
            0 => false,
            1 => true,
            _ => return Err(fmt_err("bad logo flag")),
        };
        let count = u32::from_le_bytes(bytes[20..24].try_into().unwrap()) as usize;
        let body = &bytes[MAP_HEADER_LEN..];
        if body.len() != count.saturating_mul(8) {
            return Err(if body.len() < count.saturating_mul(8) { fmt_err("truncated entries") } else { fmt_err("trailing bytes") });
        }
        let mut entries = BTreeMap::new();
        let mut prev = None;
        for chunk in body.chunks_exact(8) {
            let src = u32::from_le_bytes(chunk[..4].try_into().unwrap());
            let dst = u32::from_le_bytes(chunk[4..].try_into().unwrap());
            if src > 0xFF_FFFF || dst > 0xFF_FFFF {
                return Err(fmt_err("key exceeds 24 bits"));
            }
            if prev.is_some_and(|p| p >= src) {
                return Err(fmt_err("source keys not strictly ascending"));
            }
            prev = Some(src);
            entries.insert(src, MapEntry::integer(key_color(dst)));
        }
        Ok(Self { entries, image_lambda, algorithm, level, logo_as_gui })
    }
}

/// Colors of a contribution vector with positive weight, in key order.
#[derive(Debug, Clone)]
pub struct Palette {
    pub colors: Vec<Srgb>,
    pub weights: Vec<f64>,
}

impl Palette {
    pub fn from_contribution(d: &ContributionVector) -> Result<Self, OptimizeError> {
        let (colors, weights): (Vec<_>, Vec<_>) = d.colors().unzip();
        if colors.is_empty() {
            return Err(OptimizeError::EmptyContribution);
        }
        Ok(Self { colors, weights })
    }

    pub fn len(&self) -> usize {
        self.colors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.colors.is_empty()
    }

    pub fn code(&self, i: usize) -> [f64; 3] {
        MapEntry::integer(self.colors[i]).exact
    }
}

/// `E = Σ wᵢ·P(map(xᵢ))` in pixel·seconds × watts per pixel.
pub fn energy(m: &PixelPowerModel, map: &ColorMap, d: &ContributionVector) -> f64 {
    d.colors().map(|(c, w)| w * m.power_srgb(map.get(c))).sum()
}

/// Energy with every color left unchanged.
pub fn identity_energy(m: &PixelPowerModel, d: &ContributionVector) -> f64 {
    d.colors().map(|(c, w)| w * m.power_srgb(c)).sum()
}

#[inline]
pub(crate) fn dist3(a: [f64; 3], b: [f64; 3]) -> f64 {
    let (x, y, z) = (a[0] - b[0], a[1] - b[1], a[2] - b[2]);
    (x * x + y * y + z * z).sqrt()
}

/// Smallest pairwise distance ratio between exact targets and originals.
pub(crate) fn min_ratio(colors: &[[f64; 3]], targets: &[[f64; 3]]) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..colors.len() {
        for j in i + 1..colors.len() {
            let d = dist3(colors[i], colors[j]);
            // Code-space distances between distinct colors are at least 1.
            if d < 1.0 {
                continue;
            }
            best = best.min(dist3(targets[i], targets[j]) / d);
        }
    }
    best
}

/// Minimum over color pairs of ‖x′ᵢ − x′ⱼ‖ / ‖xᵢ − xⱼ‖.
pub fn usability_score(map: &ColorMap, d: &ContributionVector) -> Result<f64, OptimizeError> {
    let colors: Vec<Srgb> = d.colors().map(|(c, _)| c).collect();
    if colors.len() < 2 {
        return Err(OptimizeError::TooFewColors);
    }
    let src: Vec<[f64; 3]> = colors.iter().map(|&c| MapEntry::integer(c).exact).collect();
    let dst: Vec<[f64; 3]> = colors.iter().map(|&c| map.exact(c)).collect();
    Ok(min_ratio(&src, &dst))
}

/// Weighted total CIELAB distortion of the displayed colors.
pub fn distortion(map: &ColorMap, d: &ContributionVector) -> f64 {
    d.colors().map(|(c, w)| w * c.to_lab().distance(map.get(c).to_lab())).sum()
}

pub fn check_fidelity(map: &ColorMap, d: &ContributionVector, delta: f64) -> bool {
    distortion(map, d) <= delta
}


pub fn transform_dark(c: Srgb, lambda: f64) -> Srgb {
    transform_green(c, lambda, lambda, lambda)
}

pub fn transform_green(c: Srgb, lr: f64, lg: f64, lb: f64) -> Srgb {
    MapEntry::from_exact(green_exact(c, [lr, lg, lb])).target
}

pub fn transform_invert(c: Srgb, lambda: f64) -> Srgb {
    MapEntry::from_exact(invert_exact(c, lambda)).target
}

pub(crate) fn green_exact(c: Srgb, f: [f64; 3]) -> [f64; 3] {
    let x = c.channels();
    [f[0] * f64::from(x[0]), f[1] * f64::from(x[1]), f[2] * f64::from(x[2])]
}

pub(crate) fn invert_exact(c: Srgb, lambda: f64) -> [f64; 3] {
    let x = c.channels();
    let inv = |v: u8| lambda * (255.0 - f64::from(v));
    [inv(x[0]), inv(x[1]), inv(x[2])]
}

/// Result of an optimizer call.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub map: ColorMap,
    pub energy: f64,
    /// `1 − E/E_identity`.
    pub reduction: f64,
    /// Algorithm parameters: three channel factors for linear maps.
    pub params: Option<[f64; 3]>,
}

pub(crate) fn finish_outcome(m: &PixelPowerModel, d: &ContributionVector, map: ColorMap, params: Option<[f64; 3]>) -> Outcome {
    let e = energy(m, &map, d);
    let base = identity_energy(m, d);
    let reduction = if base > 0.0 { 1.0 - e / base } else { 0.0 };
    Outcome { map, energy: e, reduction, params }
}
