//! Power-saving color transformation for OLED displays.
//!
//! A linear display power model is calibrated from readings, per-site color
//! statistics are gathered from paint traces, and power-minimizing color maps
//! are computed offline and applied to frames.

pub mod colorspace;
pub mod contribution;
pub mod io;
pub mod layout;
pub mod optimizer;
pub mod pipeline;
pub mod powermodel;
