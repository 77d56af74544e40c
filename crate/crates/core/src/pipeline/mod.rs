//! Frame classification, color-map execution and savings reports.

mod corpus;
mod frame;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use corpus::{generate_corpus, mean_colors_per_block, CorpusError, CorpusSpec, Page};
pub use frame::{decode_frame, encode_png, encode_ppm, load_frame, save_frame, Frame, FrameError};

use crate::colorspace::{quantize_code, Srgb};
use crate::layout::{LayoutError, LayoutSidecar, RegionKind};
use crate::optimizer::ColorMap;
use crate::powermodel::SystemPowerModel;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("mask is {mask:?} but frame is {frame:?}")]
    DimensionMismatch { mask: (u32, u32), frame: (u32, u32) },
}

/// Per-pixel region class, same shape as its frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegionMask {
    width: u32,
    height: u32,
    kinds: Vec<RegionKind>,
}

impl RegionMask {
    pub fn uniform(width: u32, height: u32, kind: RegionKind) -> Self {
        Self { width, height, kinds: vec![kind; width as usize * height as usize] }
    }

    pub fn dimensions(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    pub fn get(&self, x: u32, y: u32) -> RegionKind {
        self.kinds[y as usize * self.width as usize + x as usize]
    }

    pub fn kinds(&self) -> &[RegionKind] {
        &self.kinds
    }

    /// Pixel counts per kind, in [`RegionKind::ALL`] order.
    pub fn counts(&self) -> [u64; 4] {
        let mut out = [0u64; 4];
        for &k in &self.kinds {
            out[k as usize] += 1;
        }
        out
    }
}

/// Resolve the sidecar in painter's order: later rects cover earlier ones and
/// uncovered pixels are GUI.
pub fn classify_pixels(f: &Frame, sidecar: &LayoutSidecar, logo_as_gui: bool) -> Result<RegionMask, LayoutError> {
    let (w, h) = f.dimensions();
    sidecar.validate(w, h)?;
    let mut mask = RegionMask::uniform(w, h, RegionKind::Gui);
    for &(r, kind) in &sidecar.rects {
        let kind = if kind == RegionKind::Logo && logo_as_gui { RegionKind::Gui } else { kind };
        for y in r.y..r.y + r.h {
            let row = y as usize * w as usize;
            mask.kinds[row + r.x as usize..row + (r.x + r.w) as usize].fill(kind);
        }
    }
    Ok(mask)
}

/// Substitute color-mapped pixels through `map` and darken the rest by
/// `map.image_lambda` per channel.
pub fn apply_colormap(f: &Frame, mask: &RegionMask, map: &ColorMap) -> Result<Frame, PipelineError> {
    if mask.dimensions() != f.dimensions() {
        return Err(PipelineError::DimensionMismatch { mask: mask.dimensions(), frame: f.dimensions() });
    }
    let table = map.lookup_table();
    let dark: [u8; 256] = std::array::from_fn(|v| quantize_code(map.image_lambda * v as f64));
    let mut last: Option<(Srgb, Srgb)> = None;
    let mut out = f.clone();
    for (p, &kind) in out.pixels_mut().iter_mut().zip(&mask.kinds) {
        if kind.is_color_mapped(map.logo_as_gui) {
            // Runs of one color are common in GUI content.
            let t = match last {
                Some((s, t)) if s == *p => t,
                _ => {
                    let t = table.get(p).copied().unwrap_or(*p);
                    last = Some((*p, t));
                    t
                }
            };
            *p = t;
        } else {
            *p = Srgb::new(dark[usize::from(p.r)], dark[usize::from(p.g)], dark[usize::from(p.b)]);
        }
    }
    Ok(out)
}

/// Fraction of pixels in each region class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PixelShares {
    pub gui: f64,
    pub foreground_image: f64,
    pub background_image: f64,
    pub logo: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SavingsReport {
    pub original_watts: f64,
    pub transformed_watts: f64,
    /// Reduction of the color-dependent part, excluding black-screen power.
    pub display_reduction: f64,
    /// Reduction of total system power.
    pub system_reduction: f64,
    pub pixel_shares: PixelShares,
}

fn reduction(before: f64, after: f64) -> f64 {
    if before > 0.0 {
        1.0 - after / before
    } else {
        0.0
    }
}

pub fn estimate_savings(m: &SystemPowerModel, f: &Frame, mask: &RegionMask, map: &ColorMap) -> Result<SavingsReport, PipelineError> {
    let out = apply_colormap(f, mask, map)?;
    Ok(savings_between(m, f, &out, mask))
}

/// Report for an already transformed frame.
pub fn savings_between(m: &SystemPowerModel, original: &Frame, transformed: &Frame, mask: &RegionMask) -> SavingsReport {
    let before = m.frame_power(original);
    let after = m.frame_power(transformed);
    let n = mask.kinds.len().max(1) as f64;
    let c = mask.counts();
    SavingsReport {
        original_watts: before,
        transformed_watts: after,
        display_reduction: reduction(before - m.p_black, after - m.p_black),
        system_reduction: reduction(before, after),
        pixel_shares: PixelShares {
            gui: c[0] as f64 / n,
            foreground_image: c[1] as f64 / n,
            background_image: c[2] as f64 / n,
            logo: c[3] as f64 / n,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layout::Rect;
    use crate::optimizer::{invert_exact, Algorithm, MapEntry};
    use proptest::prelude::*;

    #[test]
    fn classify_cases() {
        let f = Frame::filled(6, 4, Srgb::WHITE).unwrap();
        let all_gui = classify_pixels(&f, &LayoutSidecar::default(), false).unwrap();
        assert_eq!(all_gui.counts(), [24, 0, 0, 0]);
        let full = LayoutSidecar::new(vec![(Rect::full(6, 4), RegionKind::ForegroundImage)]);
        assert_eq!(classify_pixels(&f, &full, false).unwrap().counts(), [0, 24, 0, 0]);
        let over = LayoutSidecar::new(vec![(Rect::new(0, 0, 4, 4), RegionKind::ForegroundImage), (Rect::new(2, 0, 4, 2), RegionKind::Gui)]);
        let m = classify_pixels(&f, &over, false).unwrap();
        assert_eq!(m.get(3, 1), RegionKind::Gui);
        assert_eq!(m.get(3, 2), RegionKind::ForegroundImage);
        let logo = LayoutSidecar::new(vec![(Rect::new(0, 0, 2, 2), RegionKind::Logo)]);
        assert_eq!(classify_pixels(&f, &logo, true).unwrap().get(0, 0), RegionKind::Gui);
        assert_eq!(classify_pixels(&f, &logo, false).unwrap().get(0, 0), RegionKind::Logo);
        let bad = LayoutSidecar::new(vec![(Rect::new(5, 0, 2, 1), RegionKind::Gui)]);
        assert!(matches!(classify_pixels(&f, &bad, false), Err(LayoutError::OutOfBounds { .. })));
    }

    #[test]
    fn white_gui_inverts_to_black() {
        let f = Frame::filled(8, 8, Srgb::WHITE).unwrap();
        let mask = classify_pixels(&f, &LayoutSidecar::default(), false).unwrap();
        let mut map = ColorMap::identity(Algorithm::Inversion);
        map.insert(Srgb::WHITE, MapEntry::from_exact(invert_exact(Srgb::WHITE, 1.0)));
        let out = apply_colormap(&f, &mask, &map).unwrap();
        assert!(out.pixels().iter().all(|&p| p == Srgb::BLACK));
        let id = apply_colormap(&f, &mask, &ColorMap::identity(Algorithm::Dark)).unwrap();
        assert_eq!(id, f);
        let r = estimate_savings(&SystemPowerModel::demo(), &f, &mask, &map).unwrap();
        assert!((r.display_reduction - 1.0).abs() < 1e-12);
        assert!(r.system_reduction > 0.0 && r.system_reduction < 1.0);
    }

    #[test]
    fn mismatched_mask_is_rejected() {
        let f = Frame::filled(4, 4, Srgb::WHITE).unwrap();
        let mask = RegionMask::uniform(4, 3, RegionKind::Gui);
        assert!(apply_colormap(&f, &mask, &ColorMap::identity(Algorithm::Dark)).is_err());
    }

    fn arb_kind() -> impl Strategy<Value = RegionKind> {
        prop::sample::select(RegionKind::ALL.to_vec())
    }

    proptest! {
        #[test]
        fn apply_matches_per_pixel_reference(
            w in 1u32..24, h in 1u32..24,
            seed_px in prop::collection::vec((0u8..4, 0u8..4, 0u8..4), 1..40),
            rects in prop::collection::vec((0u32..24, 0u32..24, 1u32..12, 1u32..12, arb_kind()), 0..6),
            logo_as_gui in any::<bool>(),
            lambda in 0.0f64..=1.0,
        ) {
            let palette: Vec<Srgb> = seed_px.iter().map(|&(r, g, b)| Srgb::new(r * 80, g * 80, b * 80)).collect();
            let f = Frame::from_fn(w, h, |x, y| palette[((x * 7 + y * 13) as usize) % palette.len()]).unwrap();
            let mut side = LayoutSidecar::default();
            for (x, y, rw, rh, k) in rects {
                let r = Rect::new(x % w, y % h, rw, rh);
                let r = r.intersect(&Rect::full(w, h)).unwrap_or(Rect::new(0, 0, 1, 1));
                side.push(r, k);
            }
            let mut map = ColorMap::identity(Algorithm::Arbitrary);
            for (i, &c) in palette.iter().enumerate().step_by(2) {
                map.insert(c, MapEntry::integer(Srgb::new(i as u8, 255 - c.g, c.b / 2)));
            }
            map.image_lambda = lambda;
            map.logo_as_gui = logo_as_gui;
            let mask = classify_pixels(&f, &side, logo_as_gui).unwrap();
            let out = apply_colormap(&f, &mask, &map).unwrap();
            for y in 0..h {
                for x in 0..w {
                    // Last covering rect decides the class.
                    let mut kind = RegionKind::Gui;
                    for &(r, k) in &side.rects {
                        if r.contains(x, y) { kind = k; }
                    }
                    let p = f.get(x, y);
                    let want = if kind.is_color_mapped(logo_as_gui) {
                        map.get(p)
                    } else {
                        let d = |v: u8| quantize_code(lambda * f64::from(v));
                        Srgb::new(d(p.r), d(p.g), d(p.b))
                    };
                    prop_assert_eq!(out.get(x, y), want);
                }
            }
        }
    }
}
