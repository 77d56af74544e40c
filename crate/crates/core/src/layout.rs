//! Screen geometry and region classification inputs.
//!
//! A layout sidecar stands in for the render tree: an ordered list of
//! rectangles tagged with the kind of content painted there. Later entries
//! occlude earlier ones; pixels not covered by any entry are GUI.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct Rect {
    pub x: u32,
    pub y: u32,
    pub w: u32,
    pub h: u32,
}

impl Rect {
    pub const fn new(x: u32, y: u32, w: u32, h: u32) -> Self {
        Self { x, y, w, h }
    }

    pub const fn full(width: u32, height: u32) -> Self {
        Self::new(0, 0, width, height)
    }

    pub fn is_empty(&self) -> bool {
        self.w == 0 || self.h == 0
    }

    pub fn right(&self) -> u64 {
        u64::from(self.x) + u64::from(self.w)
    }

    pub fn bottom(&self) -> u64 {
        u64::from(self.y) + u64::from(self.h)
    }

    pub fn area(&self) -> u64 {
        u64::from(self.w) * u64::from(self.h)
    }

    pub fn fits_within(&self, width: u32, height: u32) -> bool {
        self.right() <= u64::from(width) && self.bottom() <= u64::from(height)
    }

    pub fn contains(&self, px: u32, py: u32) -> bool {
        px >= self.x && py >= self.y && u64::from(px) < self.right() && u64::from(py) < self.bottom()
    }

    /// Smallest rectangle covering both; an empty operand is ignored.
    pub fn union(&self, other: &Rect) -> Rect {
        if self.is_empty() {
            return *other;
        }
        if other.is_empty() {
            return *self;
        }
        let x = self.x.min(other.x);
        let y = self.y.min(other.y);
        let r = self.right().max(other.right());
        let b = self.bottom().max(other.bottom());
        Rect::new(x, y, (r - u64::from(x)) as u32, (b - u64::from(y)) as u32)
    }

    pub fn intersect(&self, other: &Rect) -> Option<Rect> {
        let x = self.x.max(other.x);
        let y = self.y.max(other.y);
        let r = self.right().min(other.right());
        let b = self.bottom().min(other.bottom());
        (r > u64::from(x) && b > u64::from(y))
            .then(|| Rect::new(x, y, (r - u64::from(x)) as u32, (b - u64::from(y)) as u32))
    }
}

impl fmt::Display for Rect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}+{}+{}", self.w, self.h, self.x, self.y)
    }
}

/// Kind of content painted in a screen region.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionKind {
    #[default]
    Gui,
    ForegroundImage,
    BackgroundImage,
    Logo,
}

impl RegionKind {
    pub const ALL: [RegionKind; 4] = [
        RegionKind::Gui,
        RegionKind::ForegroundImage,
        RegionKind::BackgroundImage,
        RegionKind::Logo,
    ];

    /// Short token used in trace and sidecar files.
    pub fn token(self) -> &'static str {
        match self {
            RegionKind::Gui => "gui",
            RegionKind::ForegroundImage => "fgimg",
            RegionKind::BackgroundImage => "bgimg",
            RegionKind::Logo => "logo",
        }
    }

    /// Whether pixels of this kind follow the GUI color map.
    pub fn is_color_mapped(self, logo_as_gui: bool) -> bool {
        match self {
            RegionKind::Gui | RegionKind::BackgroundImage => true,
            RegionKind::Logo => logo_as_gui,
            RegionKind::ForegroundImage => false,
        }
    }
}

impl fmt::Display for RegionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for RegionKind {
    type Err = LayoutError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "gui" => Ok(RegionKind::Gui),
            "fgimg" | "foreground_image" => Ok(RegionKind::ForegroundImage),
            "bgimg" | "background_image" => Ok(RegionKind::BackgroundImage),
            "logo" => Ok(RegionKind::Logo),
            other => Err(LayoutError::UnknownKind(other.to_string())),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum LayoutError {
    #[error("unknown region kind `{0}`")]
    UnknownKind(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("rectangle {rect} exceeds {width}x{height} frame")]
    OutOfBounds { rect: Rect, width: u32, height: u32 },
}

/// Region layout of one frame in painter's order.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct LayoutSidecar {
    pub rects: Vec<(Rect, RegionKind)>,
}

impl LayoutSidecar {
    pub fn new(rects: Vec<(Rect, RegionKind)>) -> Self {
        Self { rects }
    }

    pub fn push(&mut self, rect: Rect, kind: RegionKind) {
        self.rects.push((rect, kind));
    }

    pub fn validate(&self, width: u32, height: u32) -> Result<(), LayoutError> {
        match self.rects.iter().find(|(r, _)| !r.fits_within(width, height)) {
            Some((rect, _)) => Err(LayoutError::OutOfBounds { rect: *rect, width, height }),
            None => Ok(()),
        }
    }

    /// Parse `x y w h kind` lines; blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self, LayoutError> {
        let mut rects = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 5 {
                return Err(LayoutError::Parse {
                    line: idx + 1,
                    msg: format!("expected `x y w h kind`, got {} fields", fields.len()),
                });
            }
            let rect = parse_rect(&fields[..4]).map_err(|msg| LayoutError::Parse { line: idx + 1, msg })?;
            let kind = fields[4].parse().map_err(|e: LayoutError| LayoutError::Parse {
                line: idx + 1,
                msg: e.to_string(),
            })?;
            rects.push((rect, kind));
        }
        Ok(Self { rects })
    }

    pub fn to_text(&self) -> String {
        self.rects
            .iter()
            .map(|(r, k)| format!("{} {} {} {} {}\n", r.x, r.y, r.w, r.h, k.token()))
            .collect()
    }
}

pub(crate) fn parse_rect(fields: &[&str]) -> Result<Rect, String> {
    let mut v = [0u32; 4];
    for (slot, f) in v.iter_mut().zip(fields) {
        *slot = f.parse().map_err(|_| format!("invalid integer `{f}`"))?;
    }
    Ok(Rect::new(v[0], v[1], v[2], v[3]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sidecar_parse_and_format() {
        let text = "# header\n0 0 10 10 gui\n\n2 3 4 5 fgimg\n1 1 1 1 bgimg\n0 0 2 2 logo\n";
        let s = LayoutSidecar::parse(text).unwrap();
        assert_eq!(s.rects.len(), 4);
        assert_eq!(s.rects[1], (Rect::new(2, 3, 4, 5), RegionKind::ForegroundImage));
        assert_eq!(LayoutSidecar::parse(&s.to_text()).unwrap(), s);
    }

    #[test]
    fn sidecar_rejects_bad_lines() {
        assert!(matches!(LayoutSidecar::parse("0 0 1 gui"), Err(LayoutError::Parse { line: 1, .. })));
        assert!(matches!(LayoutSidecar::parse("0 0 1 1 video"), Err(LayoutError::Parse { line: 1, .. })));
        assert!(matches!(LayoutSidecar::parse("0 -1 1 1 gui"), Err(LayoutError::Parse { .. })));
    }

    #[test]
    fn bounds_check() {
        let s = LayoutSidecar::new(vec![(Rect::new(5, 5, 6, 1), RegionKind::Gui)]);
        assert!(s.validate(11, 6).is_ok());
        assert!(matches!(s.validate(10, 6), Err(LayoutError::OutOfBounds { .. })));
    }

    #[test]
    fn rect_union_and_intersection() {
        let a = Rect::new(0, 0, 4, 4);
        let b = Rect::new(2, 3, 5, 5);
        assert_eq!(a.union(&b), Rect::new(0, 0, 7, 8));
        assert_eq!(a.intersect(&b), Some(Rect::new(2, 3, 2, 1)));
        assert_eq!(a.intersect(&Rect::new(4, 0, 1, 1)), None);
        assert_eq!(Rect::default().union(&b), b);
    }
}
