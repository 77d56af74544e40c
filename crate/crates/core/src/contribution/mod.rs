//! Per-site color contribution: how many pixel·seconds each color has been
//! on screen.
//!
//! A session replays a page's paint trace. Events are grouped into series;
//! at the end of each series the dirty region is counted and the counts are
//! credited for as long as that screen stays up, i.e. until the next
//! snapshot or the end of the session.

mod count;
mod key;
mod series;

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use thiserror::Error;
use url::Url;

pub use count::{count_pixels, count_pixels_masked, CountError, PixelCounts, Sampling, BLOCK};
pub use key::{bucket_of, color_key, key_color};
pub use series::{group_paint_series, PaintEvent, PaintSeries, SeriesError, SeriesGrouper, Trace, DEFAULT_TIMEOUT};

use crate::colorspace::Srgb;
use crate::io::atomic_write;
use crate::layout::LayoutSidecar;
use crate::pipeline::{classify_pixels, Frame};

pub const MAGIC: &[u8; 4] = b"CHMD";
pub const VERSION: u16 = 1;
pub const HEADER_LEN: usize = 12;
const ENTRY_LEN: usize = 12;

#[derive(Debug, Error)]
pub enum ContributionError {
    #[error("duration must be finite and non-negative, got {0}")]
    NegativeDuration(f64),
    #[error("decay must be in (0, 1], got {0}")]
    BadDecay(f64),
    #[error("bad magic")]
    BadMagic,
    #[error("unsupported contribution file version {0}")]
    UnsupportedVersion(u16),
    #[error("truncated contribution file")]
    Truncated,
    #[error("negative weight {weight} for key {key:#08x}")]
    NegativeWeight { key: u32, weight: f64 },
    #[error("corrupt entry: {0}")]
    Corrupt(String),
    #[error("invalid site `{0}`")]
    InvalidSite(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// D: accumulated pixel·seconds per color key for one site.
#[derive(Debug, Clone, PartialEq)]
pub struct ContributionVector {
    pub site: String,
    pub entries: BTreeMap<u32, f64>,
    pub decay: f64,
}

impl ContributionVector {
    pub fn new(site: impl Into<String>) -> Self {
        Self { site: site.into(), entries: BTreeMap::new(), decay: 1.0 }
    }

    pub fn with_decay(site: impl Into<String>, decay: f64) -> Result<Self, ContributionError> {
        if !(decay > 0.0 && decay <= 1.0) {
            return Err(ContributionError::BadDecay(decay));
        }
        Ok(Self { decay, ..Self::new(site) })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.entries.values().sum()
    }

    pub fn weight(&self, c: Srgb) -> f64 {
        self.entries.get(&color_key(c)).copied().unwrap_or(0.0)
    }

    /// Colors with positive weight, in key order.
    pub fn colors(&self) -> impl Iterator<Item = (Srgb, f64)> + '_ {
        self.entries.iter().filter(|(_, &w)| w > 0.0).map(|(&k, &w)| (key_color(k), w))
    }

    pub fn insert(&mut self, c: Srgb, weight: f64) {
        self.entries.insert(color_key(c), weight);
    }

    /// Decay every existing weight, then credit `count × duration`.
    pub fn update(&mut self, counts: &PixelCounts, duration: f64) -> Result<(), ContributionError> {
        if !(duration >= 0.0 && duration.is_finite()) {
            return Err(ContributionError::NegativeDuration(duration));
        }
        if self.decay != 1.0 {
            for w in self.entries.values_mut() {
                *w *= self.decay;
            }
        }
        for (&k, &n) in counts {
            *self.entries.entry(k).or_insert(0.0) += n as f64 * duration;
        }
        Ok(())
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + ENTRY_LEN * self.entries.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&0u16.to_le_bytes());
        out.extend_from_slice(&(self.entries.len() as u32).to_le_bytes());
        for (&k, &w) in &self.entries {
            out.extend_from_slice(&k.to_le_bytes());
            out.extend_from_slice(&w.to_le_bytes());
        }
        out
    }

    /// Decode the binary format; the site name is not stored in the file.
    pub fn decode(bytes: &[u8], site: impl Into<String>) -> Result<Self, ContributionError> {
        if bytes.len() < 4 {
            return Err(if MAGIC.starts_with(bytes) { ContributionError::Truncated } else { ContributionError::BadMagic });
        }
        if &bytes[..4] != MAGIC {
            return Err(ContributionError::BadMagic);
        }
        if bytes.len() < HEADER_LEN {
            return Err(ContributionError::Truncated);
        }
        let version = u16::from_le_bytes([bytes[4], bytes[5]]);
        if version != VERSION {
            return Err(ContributionError::UnsupportedVersion(version));
        }
        let count = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
        let body = &bytes[HEADER_LEN..];
        if body.len() < count.saturating_mul(ENTRY_LEN) {
            return Err(ContributionError::Truncated);
        }
        if body.len() > count * ENTRY_LEN {
            return Err(ContributionError::Corrupt(format!("{} trailing bytes", body.len() - count * ENTRY_LEN)));
        }
        let mut entries = BTreeMap::new();
        let mut prev = None;
        for chunk in body.chunks_exact(ENTRY_LEN) {
            let key = u32::from_le_bytes(chunk[..4].try_into().unwrap());
            let weight = f64::from_le_bytes(chunk[4..].try_into().unwrap());
            if key > 0xFF_FFFF {
                return Err(ContributionError::Corrupt(format!("key {key:#x} exceeds 24 bits")));
            }
            if prev.is_some_and(|p| p >= key) {
                return Err(ContributionError::Corrupt("keys not strictly ascending".into()));
            }
            if weight.is_nan() || weight.is_infinite() {
                return Err(ContributionError::Corrupt(format!("non-finite weight for key {key:#08x}")));
            }
            if weight < 0.0 {
                return Err(ContributionError::NegativeWeight { key, weight });
            }
            prev = Some(key);
            entries.insert(key, weight);
        }
        Ok(Self { site: site.into(), entries, decay: 1.0 })
    }
}

pub fn save_contribution(d: &ContributionVector, path: impl AsRef<Path>) -> Result<(), ContributionError> {
    atomic_write(path.as_ref(), &d.encode())?;
    Ok(())
}

/// Load a contribution file; the site key is taken from the file stem.
pub fn load_contribution(path: impl AsRef<Path>) -> Result<ContributionVector, ContributionError> {
    let path = path.as_ref();
    let bytes = fs::read(path)?;
    let site = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    ContributionVector::decode(&bytes, site)
}

pub fn update_contribution(d: &mut ContributionVector, counts: &PixelCounts, duration: f64) -> Result<(), ContributionError> {
    d.update(counts, duration)
}

/// Second-level labels that sit under a country code, as in `example.co.uk`.
const SECOND_LEVEL: [&str; 7] = ["co", "com", "org", "net", "ac", "gov", "edu"];

/// Normalize a URL or host name to a site key: lowercase host without port,
/// `www.` or path, cut to the registrable domain.
pub fn normalize_site(input: &str) -> Result<String, ContributionError> {
    let trimmed = input.trim();
    let invalid = || ContributionError::InvalidSite(input.to_string());
    if trimmed.is_empty() {
        return Err(invalid());
    }
    let with_scheme = if trimmed.contains("://") { trimmed.to_string() } else { format!("http://{trimmed}") };
    let url = Url::parse(&with_scheme).map_err(|_| invalid())?;
    let host = url.host_str().ok_or_else(invalid)?.trim_end_matches('.').to_ascii_lowercase();
    if host.is_empty() {
        return Err(invalid());
    }
    if url.host().is_some_and(|h| !matches!(h, url::Host::Domain(_))) {
        return Ok(host);
    }
    let labels: Vec<&str> = host.split('.').filter(|l| !l.is_empty()).collect();
    let labels: &[&str] = if labels.first() == Some(&"www") && labels.len() > 1 { &labels[1..] } else { &labels };
    let keep = match labels {
        [.., sld, tld] if tld.len() == 2 && SECOND_LEVEL.contains(sld) && labels.len() >= 3 => 3,
        _ => 2,
    };
    Ok(labels[labels.len().saturating_sub(keep)..].join("."))
}

#[derive(Debug, Clone, Copy)]
pub struct CollectOptions {
    pub timeout: f64,
    pub sampling: Sampling,
    pub logo_as_gui: bool,
}

impl Default for CollectOptions {
    fn default() -> Self {
        Self { timeout: DEFAULT_TIMEOUT, sampling: Sampling::Full, logo_as_gui: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CollectStats {
    pub series: usize,
    pub counted_pixels: u64,
    pub added_weight: f64,
}

#[derive(Debug, Error)]
pub enum CollectError {
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error(transparent)]
    Count(#[from] CountError),
    #[error(transparent)]
    Layout(#[from] crate::layout::LayoutError),
    #[error(transparent)]
    Contribution(#[from] ContributionError),
}

/// Replay one page session into `d`.
///
/// Every series' snapshot counts the union of its dirty rectangles (clipped
/// to the frame) and owns the interval up to the next snapshot, or up to the
/// session end for the last one.
pub fn collect_session(
    d: &mut ContributionVector,
    frame: &Frame,
    sidecar: &LayoutSidecar,
    trace: &Trace,
    opts: CollectOptions,
) -> Result<CollectStats, CollectError> {
    let mut events = trace.events.clone();
    events.sort_by(|a, b| a.start.total_cmp(&b.start));
    let series = group_paint_series(&events, opts.timeout)?;
    let mask = classify_pixels(frame, sidecar, opts.logo_as_gui)?;
    let end = trace.session_end();
    let full = crate::layout::Rect::full(frame.width(), frame.height());
    let mut stats = CollectStats { series: series.len(), ..Default::default() };
    for (i, s) in series.iter().enumerate() {
        let until = series.get(i + 1).map_or(end, |next| next.snapshot_time);
        let duration = (until - s.snapshot_time).max(0.0);
        let dirty = s.dirty().intersect(&full).unwrap_or_default();
        let counts = count_pixels_masked(frame, &mask, dirty, opts.logo_as_gui, opts.sampling)?;
        let n: u64 = counts.values().sum();
        stats.counted_pixels += n;
        stats.added_weight += n as f64 * duration;
        d.update(&counts, duration)?;
    }
    Ok(stats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layout::{Rect, RegionKind};
    use proptest::prelude::*;

    #[test]
    fn update_arithmetic() {
        let mut d = ContributionVector::new("x");
        d.update(&PixelCounts::from([(7, 100)]), 2.0).unwrap();
        assert_eq!(d.entries[&7], 200.0);

        let before = d.clone();
        d.update(&PixelCounts::new(), 0.0).unwrap();
        assert_eq!(d, before);

        let mut h = ContributionVector::with_decay("x", 0.5).unwrap();
        h.update(&PixelCounts::from([(1, 10)]), 1.0).unwrap();
        h.update(&PixelCounts::from([(1, 10)]), 1.0).unwrap();
        assert_eq!(h.entries[&1], 15.0);

        assert!(d.update(&PixelCounts::new(), -1.0).is_err());
        assert!(ContributionVector::with_decay("x", 0.0).is_err());
    }

    #[test]
    fn file_round_trip() {
        let mut d = ContributionVector::new("example.com");
        d.insert(Srgb::WHITE, 1234.5);
        d.insert(Srgb::new(1, 2, 3), 0.25);
        let bytes = d.encode();
        assert_eq!(bytes.len(), HEADER_LEN + 2 * ENTRY_LEN);
        assert_eq!(ContributionVector::decode(&bytes, "example.com").unwrap(), d);

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("example.com.chmd");
        save_contribution(&d, &path).unwrap();
        assert_eq!(load_contribution(&path).unwrap(), d);
    }

    #[test]
    fn empty_file_is_header_only() {
        let bytes = ContributionVector::new("s").encode();
        assert_eq!(bytes.len(), HEADER_LEN);
        assert_eq!(&bytes[..4], b"CHMD");
    }

    #[test]
    fn distinct_load_errors() {
        let mut d = ContributionVector::new("s");
        d.insert(Srgb::new(4, 4, 4), 2.0);
        let good = d.encode();

        let mut bad = good.clone();
        bad[0] = b'X';
        assert!(matches!(ContributionVector::decode(&bad, "s"), Err(ContributionError::BadMagic)));

        let mut bad = good.clone();
        bad[4] = 9;
        assert!(matches!(ContributionVector::decode(&bad, "s"), Err(ContributionError::UnsupportedVersion(9))));

        assert!(matches!(ContributionVector::decode(&good[..good.len() - 1], "s"), Err(ContributionError::Truncated)));
        assert!(matches!(ContributionVector::decode(&good[..6], "s"), Err(ContributionError::Truncated)));

        let mut bad = good.clone();
        let n = bad.len();
        bad[n - 8..].copy_from_slice(&(-1.0f64).to_le_bytes());
        assert!(matches!(ContributionVector::decode(&bad, "s"), Err(ContributionError::NegativeWeight { .. })));
    }

    #[test]
    fn site_normalization() {
        let n = |s| normalize_site(s).unwrap();
        assert_eq!(n("https://www.Example.com:8080/a/b?q=1"), "example.com");
        assert_eq!(n("news.example.com"), "example.com");
        assert_eq!(n("www.bbc.co.uk"), "bbc.co.uk");
        assert_eq!(n("a.b.example.com.au"), "example.com.au");
        assert_eq!(n("localhost"), "localhost");
        assert_eq!(n("127.0.0.1:3000"), "127.0.0.1");
        assert!(normalize_site("  ").is_err());
    }

    #[test]
    fn white_page_ten_seconds() {
        let f = Frame::filled(40, 30, Srgb::WHITE).unwrap();
        let trace = Trace { events: vec![PaintEvent::new(0.0, 0.0, Rect::full(40, 30), RegionKind::Gui)], end: Some(10.0) };
        let mut d = ContributionVector::new("s");
        let stats = collect_session(&mut d, &f, &LayoutSidecar::default(), &trace, CollectOptions::default()).unwrap();
        assert_eq!(stats.series, 1);
        assert_eq!(d.len(), 1);
        assert_eq!(d.weight(Srgb::WHITE), 1200.0 * 10.0);
    }

    #[test]
    fn snapshots_own_interval_to_next() {
        let f = Frame::filled(10, 10, Srgb::WHITE).unwrap();
        let events = vec![
            PaintEvent::new(0.0, 1.0, Rect::full(10, 10), RegionKind::Gui),
            PaintEvent::new(5.0, 6.0, Rect::new(0, 0, 5, 5), RegionKind::Gui),
        ];
        let trace = Trace { events, end: Some(16.0) };
        let mut d = ContributionVector::new("s");
        collect_session(&mut d, &f, &LayoutSidecar::default(), &trace, CollectOptions::default()).unwrap();
        assert_eq!(d.weight(Srgb::WHITE), 100.0 * 5.0 + 25.0 * 10.0);
    }

    proptest! {
        #[test]
        fn mass_is_conserved(
            updates in prop::collection::vec((prop::collection::hash_map(0u32..5000, 1u64..1000, 0..20), 0.0f64..50.0), 1..10)
        ) {
            let mut d = ContributionVector::new("s");
            for (counts, dur) in updates {
                let before = d.total_weight();
                let added: u64 = counts.values().sum();
                d.update(&counts, dur).unwrap();
                let want = before + dur * added as f64;
                prop_assert!((d.total_weight() - want).abs() <= 1e-9 * want.max(1.0));
            }
        }

        #[test]
        fn encode_decode_lossless(entries in prop::collection::btree_map(0u32..0x100_0000, 0.0f64..1e12, 0..200)) {
            let d = ContributionVector { site: "s".into(), entries, decay: 1.0 };
            prop_assert_eq!(ContributionVector::decode(&d.encode(), "s").unwrap(), d);
        }
    }
}
