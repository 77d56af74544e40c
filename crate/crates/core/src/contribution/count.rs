//! Block-wise pixel counting with a small per-block table.
//!
//! The dirty rectangle is walked in 10×10 blocks aligned to the frame grid.
//! Within a block, counts collect in a 64-bucket table indexed by the top two
//! bits of each channel; a collision or the end of the block moves entries
//! into the per-site map. This keeps the hot loop on a tiny array since nearby
//! pixels mostly share a handful of colors.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::key::{bucket_of, color_key};
use crate::colorspace::Srgb;
use crate::layout::{LayoutError, LayoutSidecar, Rect};
use crate::pipeline::{classify_pixels, Frame, RegionMask};

pub const BLOCK: u32 = 10;

/// Color key → pixel count.
pub type PixelCounts = HashMap<u32, u64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sampling {
    /// Count every eligible pixel.
    #[default]
    Full,
    /// Count the first eligible pixel of each block in raster order, weighted
    /// by the number of eligible pixels in the block.
    OnePerBlock,
    /// Like `OnePerBlock` but the representative pixel is drawn at random.
    RandomPerBlock { seed: u64 },
}

#[derive(Debug, Error, PartialEq)]
pub enum CountError {
    #[error("dirty rectangle {rect} exceeds {width}x{height} frame")]
    DirtyOutOfBounds { rect: Rect, width: u32, height: u32 },
    #[error("mask is {mask:?} but frame is {frame:?}")]
    MaskMismatch { mask: (u32, u32), frame: (u32, u32) },
    #[error(transparent)]
    Layout(#[from] LayoutError),
}

struct SmallTable {
    slots: [Option<(u32, u64)>; 64],
}

impl SmallTable {
    fn new() -> Self {
        Self { slots: [None; 64] }
    }

    #[inline]
    fn add(&mut self, c: Srgb, n: u64, out: &mut PixelCounts) {
        let key = color_key(c);
        let slot = &mut self.slots[bucket_of(c)];
        match slot {
            Some((k, count)) if *k == key => *count += n,
            Some((k, count)) => {
                *out.entry(*k).or_insert(0) += *count;
                *slot = Some((key, n));
            }
            None => *slot = Some((key, n)),
        }
    }

    fn flush(&mut self, out: &mut PixelCounts) {
        for slot in self.slots.iter_mut() {
            if let Some((k, n)) = slot.take() {
                *out.entry(k).or_insert(0) += n;
            }
        }
    }
}

pub fn count_pixels(
    f: &Frame,
    sidecar: &LayoutSidecar,
    dirty: Rect,
    logo_as_gui: bool,
    sampling: Sampling,
) -> Result<PixelCounts, CountError> {
    let mask = classify_pixels(f, sidecar, logo_as_gui)?;
    count_pixels_masked(f, &mask, dirty, logo_as_gui, sampling)
}

/// [`count_pixels`] with a precomputed region mask.
pub fn count_pixels_masked(
    f: &Frame,
    mask: &RegionMask,
    dirty: Rect,
    logo_as_gui: bool,
    sampling: Sampling,
) -> Result<PixelCounts, CountError> {
    let (width, height) = f.dimensions();
    if mask.dimensions() != f.dimensions() {
        return Err(CountError::MaskMismatch { mask: mask.dimensions(), frame: f.dimensions() });
    }
    if !dirty.fits_within(width, height) {
        return Err(CountError::DirtyOutOfBounds { rect: dirty, width, height });
    }
    let mut out = PixelCounts::new();
    if dirty.is_empty() {
        return Ok(out);
    }
    let eligible = |x: u32, y: u32| mask.get(x, y).is_color_mapped(logo_as_gui);
    let mut table = SmallTable::new();
    let mut rng = match sampling {
        Sampling::RandomPerBlock { seed } => Some(ChaCha8Rng::seed_from_u64(seed)),
        _ => None,
    };

    let (x0, y0) = (dirty.x, dirty.y);
    let (x1, y1) = (dirty.right() as u32, dirty.bottom() as u32);
    let mut by = y0 - y0 % BLOCK;
    while by < y1 {
        let (ys, ye) = (by.max(y0), (by + BLOCK).min(y1));
        let mut bx = x0 - x0 % BLOCK;
        while bx < x1 {
            let (xs, xe) = (bx.max(x0), (bx + BLOCK).min(x1));
            match sampling {
                Sampling::Full => {
                    for y in ys..ye {
                        for x in xs..xe {
                            if eligible(x, y) {
                                table.add(f.get(x, y), 1, &mut out);
                            }
                        }
                    }
                }
                Sampling::OnePerBlock | Sampling::RandomPerBlock { .. } => {
                    let mut first = None;
                    let mut n = 0u64;
                    for y in ys..ye {
                        for x in xs..xe {
                            if eligible(x, y) {
                                first.get_or_insert((x, y));
                                n += 1;
                            }
                        }
                    }
                    let pick = match (&mut rng, first) {
                        (_, None) => None,
                        (None, Some(p)) => Some(p),
                        (Some(rng), Some(_)) => {
                            let target = rng.random_range(0..n);
                            (ys..ye)
                                .flat_map(|y| (xs..xe).map(move |x| (x, y)))
                                .filter(|&(x, y)| eligible(x, y))
                                .nth(target as usize)
                        }
                    };
                    if let Some((x, y)) = pick {
                        table.add(f.get(x, y), n, &mut out);
                    }
                }
            }
            table.flush(&mut out);
            bx += BLOCK;
        }
        by += BLOCK;
    }
    Ok(out)
}
