//! Synthetic browsing corpus: page frames, their layouts and paint traces.
//!
//! Pages are mostly white with a header bar, a logo, photo-like foreground
//! images and lines of anti-aliased text. Text lines are two blocks tall and
//! use one ink color each, so a text block holds white, the ink and its edge
//! shades.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::Frame;
use crate::colorspace::Srgb;
use crate::contribution::{PaintEvent, Trace};
use crate::layout::{LayoutSidecar, Rect, RegionKind};

#[derive(Debug, Error, PartialEq)]
pub enum CorpusError {
    #[error("white_fraction + image_fraction = {0} exceeds 1")]
    Contradictory(f64),
    #[error("{name} = {value} must be in [0, 1]")]
    Fraction { name: &'static str, value: f64 },
    #[error("page size {0}x{1} is too small (minimum 40x40)")]
    TooSmall(u32, u32),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// Generator knobs.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusSpec {
    pub pages: usize,
    pub sites: usize,
    pub width: u32,
    pub height: u32,
    pub white_fraction: f64,
    pub image_fraction: f64,
    /// Colors in a text block: white, the ink and `colors_per_block − 2` edge shades.
    pub colors_per_block: u32,
    pub seed: u64,
}

impl Default for CorpusSpec {
    fn default() -> Self {
        Self {
            pages: 20,
            sites: 4,
            width: 800,
            height: 480,
            white_fraction: 0.65,
            image_fraction: 0.15,
            colors_per_block: 5,
            seed: 1,
        }
    }
}

impl CorpusSpec {
    pub fn validate(&self) -> Result<(), CorpusError> {
        for (name, value) in [("white_fraction", self.white_fraction), ("image_fraction", self.image_fraction)] {
            if !(0.0..=1.0).contains(&value) {
                return Err(CorpusError::Fraction { name, value });
            }
        }
        let sum = self.white_fraction + self.image_fraction;
        if sum > 1.0 + 1e-12 {
            return Err(CorpusError::Contradictory(sum));
        }
        if self.width < 40 || self.height < 40 {
            return Err(CorpusError::TooSmall(self.width, self.height));
        }
        Ok(())
    }

    /// Parse `key = value` lines; unknown keys are errors.
    pub fn parse(text: &str) -> Result<Self, CorpusError> {
        let mut spec = Self::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let perr = |msg: String| CorpusError::Parse { line: idx + 1, msg };
            let (key, value) = line.split_once('=').ok_or_else(|| perr("expected `key = value`".into()))?;
            let (key, value) = (key.trim(), value.trim());
            fn num<T: FromStr>(v: &str) -> Result<T, String> {
                v.parse().map_err(|_| format!("invalid number `{v}`"))
            }
            let r: Result<(), String> = (|| {
                match key {
                    "pages" => spec.pages = num(value)?,
                    "sites" => spec.sites = num(value)?,
                    "width" => spec.width = num(value)?,
                    "height" => spec.height = num(value)?,
                    "white_fraction" => spec.white_fraction = num(value)?,
                    "image_fraction" => spec.image_fraction = num(value)?,
                    "colors_per_block" => spec.colors_per_block = num(value)?,
                    "seed" => spec.seed = num(value)?,
                    other => return Err(format!("unknown key `{other}`")),
                }
                Ok(())
            })();
            r.map_err(perr)?;
        }
        spec.validate()?;
        Ok(spec)
    }
}

impl fmt::Display for CorpusSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "pages = {}", self.pages)?;
        writeln!(f, "sites = {}", self.sites)?;
        writeln!(f, "width = {}", self.width)?;
        writeln!(f, "height = {}", self.height)?;
        writeln!(f, "white_fraction = {}", self.white_fraction)?;
        writeln!(f, "image_fraction = {}", self.image_fraction)?;
        writeln!(f, "colors_per_block = {}", self.colors_per_block)?;
        writeln!(f, "seed = {}", self.seed)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Page {
    pub site: String,
    pub frame: Frame,
    pub sidecar: LayoutSidecar,
    pub trace: Trace,
}

/// Colors shared by every page of one site: one brand accent for the header
/// and links, gray text and a neutral panel.
struct SiteStyle {
    accent: Srgb,
    header_gradient: bool,
    ink: Srgb,
    panel: Srgb,
    logo: [Srgb; 2],
}

fn random_color(rng: &mut ChaCha8Rng, lo: u8, hi: u8) -> Srgb {
    Srgb::new(rng.random_range(lo..=hi), rng.random_range(lo..=hi), rng.random_range(lo..=hi))
}

fn site_style(rng: &mut ChaCha8Rng) -> SiteStyle {
    let gray = rng.random_range(0..=60);
    let panel = rng.random_range(225..=245);
    SiteStyle {
        accent: random_color(rng, 20, 200),
        header_gradient: rng.random_bool(0.5),
        ink: Srgb::new(gray, gray, gray),
        panel: Srgb::new(panel, panel, panel),
        logo: [random_color(rng, 0, 255), random_color(rng, 0, 255)],
    }
}

fn blend(a: Srgb, b: Srgb, t: f64) -> Srgb {
    let mix = |x: u8, y: u8| (f64::from(x) + (f64::from(y) - f64::from(x)) * t).round() as u8;
    Srgb::new(mix(a.r, b.r), mix(a.g, b.g), mix(a.b, b.b))
}

struct Canvas {
    w: u32,
    px: Vec<Srgb>,
    nonwhite: u64,
}

impl Canvas {
    fn set(&mut self, x: u32, y: u32, c: Srgb) {
        let p = &mut self.px[(y * self.w + x) as usize];
        match (*p == Srgb::WHITE, c == Srgb::WHITE) {
            (true, false) => self.nonwhite += 1,
            (false, true) => self.nonwhite -= 1,
            _ => {}
        }
        *p = c;
    }
}

pub fn generate_corpus(spec: &CorpusSpec) -> Result<Vec<Page>, CorpusError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let sites = spec.sites.max(1);
    let styles: Vec<SiteStyle> = (0..sites).map(|_| site_style(&mut rng)).collect();
    Ok((0..spec.pages)
        .map(|i| {
            let site = i % sites;
            make_page(spec, &styles[site], format!("site{site}.example"), &mut rng)
        })
        .collect())
}

fn overlaps(r: &Rect, others: &[Rect]) -> bool {
    others.iter().any(|o| r.intersect(o).is_some())
}

fn make_page(spec: &CorpusSpec, style: &SiteStyle, site: String, rng: &mut ChaCha8Rng) -> Page {
    let (w, h) = (spec.width, spec.height);
    let area = u64::from(w) * u64::from(h);
    let budget = area - (spec.white_fraction * area as f64).round() as u64;
    let image_target = (spec.image_fraction * area as f64).round() as u64;
    let mut c = Canvas { w, px: vec![Srgb::WHITE; area as usize], nonwhite: 0 };
    let mut side = LayoutSidecar::default();
    let mut occupied: Vec<Rect> = Vec::new();

    // Header bar with logo.
    let header_h = (h / 12 / 10 * 10).max(10);
    let header = Rect::new(0, 0, w, header_h);
    if budget >= image_target + header.area() {
        let kind = if style.header_gradient { RegionKind::BackgroundImage } else { RegionKind::Gui };
        for y in 0..header_h {
            for x in 0..w {
                let col = if style.header_gradient {
                    // Eight bands darkening toward black.
                    blend(style.accent, Srgb::BLACK, 0.05 * f64::from(x * 8 / w))
                } else {
                    style.accent
                };
                c.set(x, y, col);
            }
        }
        side.push(header, kind);
        let logo = Rect::new(10, 0, (w / 8).clamp(10, 100) / 10 * 10, header_h);
        for y in logo.y..logo.bottom() as u32 {
            for x in logo.x..logo.right() as u32 {
                c.set(x, y, if (x / 10 + y / 10) % 2 == 0 { style.logo[0] } else { style.logo[1] });
            }
        }
        side.push(logo, RegionKind::Logo);
        occupied.push(header);
    }

    // Foreground images, non-overlapping and block-aligned.
    let mut placed_images = 0u64;
    if image_target > 0 {
        let k = rng.random_range(1..=3u64);
        let body_h = h - header_h;
        for i in 0..k {
            let want = if i + 1 == k { image_target - placed_images } else { image_target / k };
            if want == 0 {
                continue;
            }
            let ih = (rng.random_range(60..=200u32) / 10 * 10).min(body_h);
            let iw = ((want as f64 / f64::from(ih)).round() as u32).clamp(1, w);
            let ih = if u64::from(iw) * u64::from(ih) < want { (want.div_ceil(u64::from(iw)) as u32).min(body_h) } else { ih };
            let mut spot = None;
            for _ in 0..40 {
                let x = rng.random_range(0..=(w - iw) / 10) * 10;
                let y = header_h + rng.random_range(0..=(h - header_h - ih) / 10) * 10;
                let r = Rect::new(x.min(w - iw), y.min(h - ih), iw, ih);
                if !overlaps(&r, &occupied) {
                    spot = Some(r);
                    break;
                }
            }
            let Some(r) = spot else { continue };
            paint_image(&mut c, r, rng);
            side.push(r, RegionKind::ForegroundImage);
            occupied.push(r);
            placed_images += r.area();
        }
    }

    // Right-hand panel absorbs budget that text alone cannot reach.
    let free = area - occupied.iter().map(Rect::area).sum::<u64>();
    let text_capacity = free as f64 * 0.3;
    let excess = budget as f64 - c.nonwhite as f64 - text_capacity;
    if excess > 0.0 {
        let pw = ((excess / f64::from(h - header_h)).ceil() as u32).div_ceil(10) * 10;
        let pw = pw.min(w);
        let panel = Rect::new(w - pw, header_h, pw, h - header_h);
        for y in panel.y..panel.bottom() as u32 {
            for x in panel.x..panel.right() as u32 {
                if !occupied.iter().any(|o| o.contains(x, y)) {
                    c.set(x, y, style.panel);
                }
            }
        }
        side.push(panel, RegionKind::Gui);
        occupied.push(panel);
    }

    // Text until the non-white budget is spent.
    let shades = spec.colors_per_block.saturating_sub(2).min(4);
    let mut y = header_h + 10;
    'lines: while y + 20 <= h {
        let ink = if rng.random_bool(0.2) { style.accent } else { style.ink };
        let mut x = 10;
        while x + 8 < w {
            if c.nonwhite >= budget {
                break 'lines;
            }
            let word = rng.random_range(2..=8u32);
            let ww = word * 6;
            if x + ww + 10 > w {
                break;
            }
            let r = Rect::new(x, y, ww + 1, 20);
            if overlaps(&r, &occupied) {
                x += 10;
                continue;
            }
            for g in 0..word {
                paint_glyph(&mut c, x + g * 6, y + 4, ink, shades, rng);
            }
            x += ww + 6;
        }
        y += 20;
    }

    let frame = Frame::new(w, h, c.px).expect("canvas has frame dimensions");
    let trace = page_trace(&side, w, h, rng);
    Page { site, frame, sidecar: side, trace }
}

fn paint_image(c: &mut Canvas, r: Rect, rng: &mut ChaCha8Rng) {
    let a = random_color(rng, 0, 230);
    let b = random_color(rng, 0, 230);
    for y in r.y..r.bottom() as u32 {
        for x in r.x..r.right() as u32 {
            let t = (f64::from(x - r.x) / f64::from(r.w.max(1)) + f64::from(y - r.y) / f64::from(r.h.max(1))) / 2.0;
            let base = blend(a, b, t);
            let n = rng.random_range(-6i16..=6);
            // Coarse steps keep per-block color counts low.
            let q = |v: u8| ((i16::from(v) + n).clamp(0, 239) as u8) / 16 * 16;
            c.set(x, y, Srgb::new(q(base.r), q(base.g), q(base.b)));
        }
    }
}

/// A 5×12 glyph: stem plus random bars, with an edge shade right of each
/// ink run.
fn paint_glyph(c: &mut Canvas, x0: u32, y0: u32, ink: Srgb, shades: u32, rng: &mut ChaCha8Rng) {
    let bars: [bool; 4] = std::array::from_fn(|_| rng.random_bool(0.5));
    let shade = |k: u32| blend(ink, Srgb::WHITE, f64::from(k + 1) / f64::from(shades + 1));
    for dy in 0..12u32 {
        let row_bar = (bars[0] && dy == 0) || (bars[1] && dy == 5) || (bars[2] && dy == 11);
        let right = bars[3];
        for dx in 0..5u32 {
            let on = dx == 0 || row_bar || (right && dx == 3);
            if on {
                c.set(x0 + dx, y0 + dy, ink);
            } else if shades > 0 && (dx == 1 || (right && dx == 4)) {
                c.set(x0 + dx, y0 + dy, shade((dx + dy) % shades));
            }
        }
    }
}

/// Page load burst, a later repaint of one region, then the dwell end.
fn page_trace(side: &LayoutSidecar, w: u32, h: u32, rng: &mut ChaCha8Rng) -> Trace {
    let mut events = vec![PaintEvent { start: 0.0, finish: 0.05, rect: Rect::full(w, h), kind: RegionKind::Gui }];
    let mut t = 0.05;
    for &(rect, kind) in &side.rects {
        let d = rng.random_range(0.01..0.1);
        events.push(PaintEvent { start: t, finish: t + d, rect, kind });
        t += d;
    }
    let later = rng.random_range(2.0..6.0);
    let rect = side.rects.first().map_or(Rect::full(w, h), |r| r.0);
    events.push(PaintEvent { start: later, finish: later + 0.05, rect, kind: RegionKind::Gui });
    events.sort_by(|a, b| a.start.total_cmp(&b.start));
    Trace { events, end: Some(later + rng.random_range(4.0..20.0)) }
}

/// Mean number of distinct colors per 10×10 block.
pub fn mean_colors_per_block(f: &Frame) -> f64 {
    let (w, h) = f.dimensions();
    let mut total = 0usize;
    let mut blocks = 0usize;
    for by in (0..h).step_by(10) {
        for bx in (0..w).step_by(10) {
            let mut set = HashSet::new();
            for y in by..(by + 10).min(h) {
                for x in bx..(bx + 10).min(w) {
                    set.insert(f.get(x, y));
                }
            }
            total += set.len();
            blocks += 1;
        }
    }
    total as f64 / blocks as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::classify_pixels;

    fn small() -> CorpusSpec {
        CorpusSpec { pages: 6, width: 200, height: 120, ..Default::default() }
    }

    #[test]
    fn all_white_page() {
        let spec = CorpusSpec { white_fraction: 1.0, image_fraction: 0.0, ..small() };
        for p in generate_corpus(&spec).unwrap() {
            assert!(p.frame.pixels().iter().all(|&c| c == Srgb::WHITE));
            let mask = classify_pixels(&p.frame, &p.sidecar, false).unwrap();
            assert_eq!(mask.counts()[0], 200 * 120);
        }
    }

    #[test]
    fn contradictory_fractions() {
        let spec = CorpusSpec { white_fraction: 0.9, image_fraction: 0.2, ..small() };
        assert!(matches!(generate_corpus(&spec), Err(CorpusError::Contradictory(_))));
        assert!(CorpusSpec::parse("white_fraction = 1.5").is_err());
    }

    #[test]
    fn seed_stable() {
        assert_eq!(generate_corpus(&small()).unwrap(), generate_corpus(&small()).unwrap());
        let other = CorpusSpec { seed: 2, ..small() };
        assert_ne!(generate_corpus(&small()).unwrap(), generate_corpus(&other).unwrap());
    }

    #[test]
    fn measured_fractions_match_request() {
        let spec = CorpusSpec { pages: 100, ..Default::default() };
        let pages = generate_corpus(&spec).unwrap();
        let (mut white, mut image, mut total) = (0u64, 0u64, 0u64);
        let mut per_block = 0.0;
        for p in &pages {
            white += p.frame.pixels().iter().filter(|&&c| c == Srgb::WHITE).count() as u64;
            image += classify_pixels(&p.frame, &p.sidecar, false).unwrap().counts()[1];
            total += p.frame.len() as u64;
            per_block += mean_colors_per_block(&p.frame);
        }
        let (wf, imf) = (white as f64 / total as f64, image as f64 / total as f64);
        assert!((wf - 0.65).abs() <= 0.03, "white {wf}");
        assert!((imf - 0.15).abs() <= 0.03, "image {imf}");
        assert!(per_block / pages.len() as f64 <= 5.5, "colors per block {}", per_block / pages.len() as f64);
    }

    #[test]
    fn spec_text_round_trip() {
        let spec = CorpusSpec { pages: 3, seed: 9, white_fraction: 0.5, ..Default::default() };
        assert_eq!(CorpusSpec::parse(&spec.to_string()).unwrap(), spec);
        assert!(CorpusSpec::parse("colour = 3").is_err());
    }

    #[test]
    fn traces_are_valid() {
        for p in generate_corpus(&small()).unwrap() {
            let text = p.trace.to_text();
            assert_eq!(Trace::parse(&text).unwrap(), p.trace);
            p.sidecar.validate(200, 120).unwrap();
        }
    }
}
