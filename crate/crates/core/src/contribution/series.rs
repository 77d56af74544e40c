//! Paint events, trace files, and timeout-based grouping into paint series.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::layout::{parse_rect, Rect, RegionKind};

/// Default quiet period that ends a paint series, in seconds.
pub const DEFAULT_TIMEOUT: f64 = 1.0;

#[derive(Debug, Error, PartialEq)]
pub enum SeriesError {
    #[error("event {index} starts at {start} before the previous start {previous}")]
    Unsorted { index: usize, start: f64, previous: f64 },
    #[error("event {index} finishes before it starts ({start} > {finish})")]
    Inverted { index: usize, start: f64, finish: f64 },
    #[error("event {index} has a non-finite timestamp")]
    NonFinite { index: usize },
    #[error("timeout must be positive and finite, got {0}")]
    BadTimeout(f64),
    #[error("trace line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PaintEvent {
    pub start: f64,
    pub finish: f64,
    pub rect: Rect,
    pub kind: RegionKind,
}

impl PaintEvent {
    pub fn new(start: f64, finish: f64, rect: Rect, kind: RegionKind) -> Self {
        Self { start, finish, rect, kind }
    }
}

/// A burst of paint events; one contribution snapshot is taken at its end.
#[derive(Debug, Clone, PartialEq)]
pub struct PaintSeries {
    /// Ordered by finish time.
    pub events: Vec<PaintEvent>,
    pub snapshot_time: f64,
}

impl PaintSeries {
    fn from_events(mut events: Vec<PaintEvent>) -> Self {
        events.sort_by(|a, b| a.finish.total_cmp(&b.finish));
        let snapshot_time = events.iter().map(|e| e.finish).fold(f64::NEG_INFINITY, f64::max);
        Self { events, snapshot_time }
    }

    /// Bounding rectangle of everything repainted in the series.
    pub fn dirty(&self) -> Rect {
        self.events.iter().fold(Rect::default(), |acc, e| acc.union(&e.rect))
    }
}

fn check_timeout(timeout: f64) -> Result<(), SeriesError> {
    if timeout > 0.0 && timeout.is_finite() {
        Ok(())
    } else {
        Err(SeriesError::BadTimeout(timeout))
    }
}

/// Incremental grouper; feeding events one at a time yields the same series
/// as [`group_paint_series`] on the whole list.
#[derive(Debug, Clone)]
pub struct SeriesGrouper {
    timeout: f64,
    current: Vec<PaintEvent>,
    last_finish: f64,
    last_start: f64,
    seen: usize,
}

impl SeriesGrouper {
    pub fn new(timeout: f64) -> Result<Self, SeriesError> {
        check_timeout(timeout)?;
        Ok(Self {
            timeout,
            current: Vec::new(),
            last_finish: f64::NEG_INFINITY,
            last_start: f64::NEG_INFINITY,
            seen: 0,
        })
    }

    /// Add an event; returns the series it closed, if any.
    pub fn push(&mut self, e: PaintEvent) -> Result<Option<PaintSeries>, SeriesError> {
        let index = self.seen;
        if !e.start.is_finite() || !e.finish.is_finite() {
            return Err(SeriesError::NonFinite { index });
        }
        if e.start > e.finish {
            return Err(SeriesError::Inverted { index, start: e.start, finish: e.finish });
        }
        if e.start < self.last_start {
            return Err(SeriesError::Unsorted { index, start: e.start, previous: self.last_start });
        }
        self.seen += 1;
        self.last_start = e.start;
        let closed = if !self.current.is_empty() && e.start - self.last_finish > self.timeout {
            self.last_finish = f64::NEG_INFINITY;
            Some(PaintSeries::from_events(std::mem::take(&mut self.current)))
        } else {
            None
        };
        self.last_finish = self.last_finish.max(e.finish);
        self.current.push(e);
        Ok(closed)
    }

    /// Close the open series if nothing can join it any more at time `now`.
    pub fn poll(&mut self, now: f64) -> Option<PaintSeries> {
        if !self.current.is_empty() && now - self.last_finish > self.timeout {
            self.last_finish = f64::NEG_INFINITY;
            Some(PaintSeries::from_events(std::mem::take(&mut self.current)))
        } else {
            None
        }
    }

    /// End of stream: close whatever is open.
    pub fn finish(mut self) -> Option<PaintSeries> {
        (!self.current.is_empty()).then(|| PaintSeries::from_events(std::mem::take(&mut self.current)))
    }
}

/// Split start-sorted events into series separated by gaps longer than
/// `timeout` after the latest finish seen so far in the series.
pub fn group_paint_series(events: &[PaintEvent], timeout: f64) -> Result<Vec<PaintSeries>, SeriesError> {
    let mut grouper = SeriesGrouper::new(timeout)?;
    let mut out = Vec::new();
    for &e in events {
        out.extend(grouper.push(e)?);
    }
    out.extend(grouper.finish());
    Ok(out)
}

/// A parsed paint-event trace.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trace {
    pub events: Vec<PaintEvent>,
    /// Session end; defaults to the last finish when absent.
    pub end: Option<f64>,
}

impl Trace {
    pub fn session_end(&self) -> f64 {
        let last = self.events.iter().map(|e| e.finish).fold(0.0, f64::max);
        self.end.map_or(last, |t| t.max(last))
    }

    /// Lines are `start finish x y w h kind`; a line `end T` records the end
    /// of the session. Blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self, SeriesError> {
        let mut trace = Trace::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |msg: String| SeriesError::Parse { line: idx + 1, msg };
            let fields: Vec<&str> = line.split_whitespace().collect();
            let time = |s: &str| -> Result<f64, SeriesError> {
                let v: f64 = s.parse().map_err(|_| err(format!("invalid time `{s}`")))?;
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(err(format!("invalid time `{s}`")))
                }
            };
            if fields[0] == "end" {
                if fields.len() != 2 {
                    return Err(err("expected `end T`".into()));
                }
                trace.end = Some(time(fields[1])?);
                continue;
            }
            if fields.len() != 7 {
                return Err(err(format!("expected 7 fields, got {}", fields.len())));
            }
            let start = time(fields[0])?;
            let finish = time(fields[1])?;
            let rect = parse_rect(&fields[2..6]).map_err(err)?;
            let kind = fields[6].parse().map_err(|e: crate::layout::LayoutError| err(e.to_string()))?;
            trace.events.push(PaintEvent { start, finish, rect, kind });
        }
        Ok(trace)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for e in &self.events {
            let r = e.rect;
            let _ = writeln!(s, "{} {} {} {} {} {} {}", e.start, e.finish, r.x, r.y, r.w, r.h, e.kind.token());
        }
        if let Some(t) = self.end {
            let _ = writeln!(s, "end {t}");
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ev(start: f64, finish: f64) -> PaintEvent {
        PaintEvent::new(start, finish, Rect::new(0, 0, 1, 1), RegionKind::Gui)
    }

    #[test]
    fn single_event() {
        let s = group_paint_series(&[ev(0.5, 0.7)], 1.0).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].snapshot_time, 0.7);
    }

    #[test]
    fn gap_splits_series() {
        let s = group_paint_series(&[ev(0.0, 1.0), ev(3.0, 3.5)], 1.0).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s[1].snapshot_time, 3.5);
        // Exactly at the timeout still joins.
        assert_eq!(group_paint_series(&[ev(0.0, 1.0), ev(2.0, 2.1)], 1.0).unwrap().len(), 1);
    }

    #[test]
    fn long_event_keeps_series_open() {
        // The second event starts long after the first event's finish but
        // within the timeout of the long-running one.
        let s = group_paint_series(&[ev(0.0, 5.0), ev(0.1, 0.2), ev(5.5, 6.0)], 1.0).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].snapshot_time, 6.0);
        assert_eq!(s[0].events[0].finish, 0.2);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(
            group_paint_series(&[ev(1.0, 1.0), ev(0.5, 2.0)], 1.0),
            Err(SeriesError::Unsorted { index: 1, .. })
        ));
        assert!(matches!(group_paint_series(&[ev(1.0, 0.0)], 1.0), Err(SeriesError::Inverted { .. })));
        assert!(matches!(group_paint_series(&[], 0.0), Err(SeriesError::BadTimeout(_))));
        assert!(group_paint_series(&[], 1.0).unwrap().is_empty());
    }

    #[test]
    fn dirty_is_union() {
        let a = PaintEvent::new(0.0, 0.1, Rect::new(0, 0, 2, 2), RegionKind::Gui);
        let b = PaintEvent::new(0.2, 0.3, Rect::new(5, 1, 1, 4), RegionKind::Logo);
        let s = group_paint_series(&[a, b], 1.0).unwrap();
        assert_eq!(s[0].dirty(), Rect::new(0, 0, 6, 5));
    }

    #[test]
    fn poll_closes_idle_series() {
        let mut g = SeriesGrouper::new(1.0).unwrap();
        assert!(g.push(ev(0.0, 0.5)).unwrap().is_none());
        assert!(g.poll(1.2).is_none());
        assert_eq!(g.poll(1.6).unwrap().snapshot_time, 0.5);
        assert!(g.finish().is_none());
    }

    #[test]
    fn trace_round_trip() {
        let text = "# a page load\n0 0.25 0 0 800 480 gui\n0.1 0.2 10 10 50 50 fgimg\n\nend 30\n";
        let t = Trace::parse(text).unwrap();
        assert_eq!(t.events.len(), 2);
        assert_eq!(t.end, Some(30.0));
        assert_eq!(t.session_end(), 30.0);
        assert_eq!(Trace::parse(&t.to_text()).unwrap(), t);
        assert!(matches!(Trace::parse("0 1 0 0 1 gui"), Err(SeriesError::Parse { line: 1, .. })));
        assert!(matches!(Trace::parse("0 1 0 0 1 1 video"), Err(SeriesError::Parse { .. })));
        assert!(matches!(Trace::parse("end"), Err(SeriesError::Parse { .. })));
    }

    /// O(n²) reference: event j opens a new series iff its start is more than
    /// `timeout` after every earlier finish.
    fn brute_force_boundaries(events: &[PaintEvent], timeout: f64) -> Vec<usize> {
        let mut starts = Vec::new();
        for j in 0..events.len() {
            let open = j == 0 || (0..j).all(|k| events[j].start - events[k].finish > timeout);
            if open {
                starts.push(j);
            }
        }
        starts
    }

    fn series_starts(series: &[PaintSeries], events: &[PaintEvent]) -> Vec<usize> {
        let mut out = Vec::new();
        let mut idx = 0;
        for s in series {
            out.push(idx);
            idx += s.events.len();
        }
        assert_eq!(idx, events.len());
        out
    }

    fn arb_events() -> impl Strategy<Value = Vec<PaintEvent>> {
        prop::collection::vec((0.0f64..3.0, 0.0f64..2.0), 0..60).prop_map(|v| {
            let mut t = 0.0;
            v.into_iter()
                .map(|(gap, dur)| {
                    t += gap;
                    ev(t, t + dur)
                })
                .collect()
        })
    }

    proptest! {
        #[test]
        fn matches_brute_force(events in arb_events(), timeout in 0.05f64..2.5) {
            let series = group_paint_series(&events, timeout).unwrap();
            prop_assert_eq!(series_starts(&series, &events), brute_force_boundaries(&events, timeout));
            for s in &series {
                prop_assert_eq!(s.snapshot_time, s.events.iter().map(|e| e.finish).fold(f64::MIN, f64::max));
            }
        }

        #[test]
        fn streaming_equals_batch(events in arb_events(), cut in 0usize..60) {
            let batch = group_paint_series(&events, 1.0).unwrap();
            let cut = cut.min(events.len());
            let mut g = SeriesGrouper::new(1.0).unwrap();
            let mut streamed = Vec::new();
            for &e in &events[..cut] {
                streamed.extend(g.push(e).unwrap());
            }
            for &e in &events[cut..] {
                streamed.extend(g.push(e).unwrap());
            }
            streamed.extend(g.finish());
            prop_assert_eq!(streamed, batch);
        }
    }
}
