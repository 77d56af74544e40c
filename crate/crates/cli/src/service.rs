//! Operations shared by the command line and the HTTP service, so both
//! produce the same bytes for the same inputs.

use oledcolor::layout::LayoutSidecar;
use oledcolor::optimizer::{Algorithm, ColorMap, GridCell, OptionGrid};
use oledcolor::pipeline::{apply_colormap, classify_pixels, decode_frame, encode_png, savings_between, SavingsReport};
use oledcolor::powermodel::SystemPowerModel;
use serde::Serialize;

use crate::profile::{ProfileStore, Selection, SiteProfile};
use crate::ServiceError;

pub struct TransformOutput {
    pub png: Vec<u8>,
    pub report: SavingsReport,
}

fn cell_list(cells: &[(Algorithm, u8)]) -> String {
    if cells.is_empty() {
        return "none".into();
    }
    cells.iter().map(|(a, l)| format!("{a}:{l}")).collect::<Vec<_>>().join(", ")
}

/// The map for `sel` among grid maps; level 0 is the identity.
pub fn select_map(maps: &[ColorMap], sel: Selection) -> Result<ColorMap, ServiceError> {
    let mut map = if sel.level == 0 {
        ColorMap::identity(sel.algorithm)
    } else {
        maps.iter().find(|m| m.algorithm == sel.algorithm && m.level == sel.level).cloned().ok_or_else(|| {
            let available: Vec<(Algorithm, u8)> = maps.iter().map(|m| (m.algorithm, m.level)).collect();
            ServiceError::UnknownCell { algorithm: sel.algorithm, level: sel.level, available: cell_list(&available) }
        })?
    };
    map.logo_as_gui = sel.logo_as_gui;
    Ok(map)
}

/// Decode a frame, apply the selected map and encode the result as PNG.
pub fn transform_frame(
    model: &SystemPowerModel,
    frame_bytes: &[u8],
    sidecar: &LayoutSidecar,
    maps: &[ColorMap],
    sel: Selection,
) -> Result<TransformOutput, ServiceError> {
    let frame = decode_frame(frame_bytes)?;
    let map = select_map(maps, sel)?;
    let mask = classify_pixels(&frame, sidecar, map.logo_as_gui)?;
    let out = apply_colormap(&frame, &mask, &map)?;
    let report = savings_between(model, &frame, &out, &mask);
    Ok(TransformOutput { png: encode_png(&out)?, report })
}

pub fn report_json(r: &SavingsReport) -> String {
    serde_json::to_string_pretty(r).expect("report serializes")
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellSummary {
    pub algorithm: Algorithm,
    pub level: u8,
    pub lambda: f64,
    pub available: bool,
    /// Display power reduction on the site's own contribution vector.
    pub predicted_reduction: Option<f64>,
    pub energy: Option<f64>,
    pub error: Option<String>,
}

impl From<&GridCell> for CellSummary {
    fn from(c: &GridCell) -> Self {
        let o = c.outcome();
        Self {
            algorithm: c.algorithm,
            level: c.level,
            lambda: c.lambda(),
            available: o.is_some(),
            predicted_reduction: o.map(|o| o.reduction),
            energy: o.map(|o| o.energy),
            error: c.result.as_ref().err().map(ToString::to_string),
        }
    }
}

pub fn grid_summary(grid: &OptionGrid) -> Vec<CellSummary> {
    grid.cells.iter().map(CellSummary::from).collect()
}

/// Fixed-width table, one row per cell.
pub fn grid_table(grid: &OptionGrid) -> String {
    let mut s = format!("{:<10} {:>5} {:>6} {:>10}\n", "algorithm", "level", "lambda", "reduction");
    for c in grid_summary(grid) {
        let r = c.predicted_reduction.map_or_else(|| "infeasible".to_string(), |r| format!("{:.2}%", 100.0 * r));
        s += &format!("{:<10} {:>5} {:>6.2} {:>10}\n", c.algorithm, c.level, c.lambda, r);
    }
    s
}

/// A site's grid with energies recomputed against its contribution vector.
pub fn load_grid(store: &ProfileStore, model: &SystemPowerModel, p: &SiteProfile) -> Result<OptionGrid, ServiceError> {
    let bytes = store.grid_bytes(p)?;
    let d = store.contribution(&p.site)?;
    Ok(OptionGrid::from_bytes(&bytes, &model.pixel, &d)?)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SiteSummary {
    pub site: String,
    pub option: Option<Selection>,
    pub has_grid: bool,
    pub colors: usize,
    pub total_weight: f64,
    /// Grid prediction for the chosen option.
    pub predicted_reduction: Option<f64>,
}

pub fn site_summary(store: &ProfileStore, model: &SystemPowerModel, p: &SiteProfile) -> Result<SiteSummary, ServiceError> {
    let d = store.contribution(&p.site)?;
    let grid = match store.grid_bytes(p) {
        Ok(bytes) => Some(OptionGrid::from_bytes(&bytes, &model.pixel, &d)?),
        Err(ServiceError::NoGrid(_)) => None,
        Err(e) => return Err(e),
    };
    let predicted_reduction = match (&grid, p.option) {
        (Some(g), Some(o)) => g.cell(o.algorithm, o.level).and_then(GridCell::outcome).map(|o| o.reduction),
        _ => None,
    };
    Ok(SiteSummary {
        site: p.site.clone(),
        option: p.option,
        has_grid: grid.is_some(),
        colors: d.len(),
        total_weight: d.total_weight(),
        predicted_reduction,
    })
}

/// Validate and persist a site's option. Never runs the optimizer.
pub fn set_option(store: &ProfileStore, model: &SystemPowerModel, site: &str, sel: Selection) -> Result<SiteSummary, ServiceError> {
    let mut p = store.require(site)?;
    sel.validate_level()?;
    let maps = OptionGrid::read_maps(&store.grid_bytes(&p)?)?;
    select_map(&maps, sel)?;
    p.option = Some(sel);
    store.save(&p)?;
    site_summary(store, model, &p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use oledcolor::colorspace::Srgb;
    use oledcolor::optimizer::MapEntry;
    use oledcolor::pipeline::Frame;

    fn white_png() -> Vec<u8> {
        encode_png(&Frame::filled(4, 4, Srgb::WHITE).unwrap()).unwrap()
    }

    #[test]
    fn identity_level_keeps_pixels() {
        let png = white_png();
        let sel = Selection { algorithm: Algorithm::Dark, level: 0, logo_as_gui: false };
        let out = transform_frame(&SystemPowerModel::demo(), &png, &LayoutSidecar::default(), &[], sel).unwrap();
        assert_eq!(out.png, png);
        assert_eq!(out.report.display_reduction, 0.0);
    }

    #[test]
    fn unknown_cell_lists_available() {
        let mut m = ColorMap::identity(Algorithm::Inversion);
        m.level = 2;
        m.insert(Srgb::WHITE, MapEntry::integer(Srgb::BLACK));
        let sel = Selection { algorithm: Algorithm::Green, level: 1, logo_as_gui: false };
        let err = select_map(&[m.clone()], sel).unwrap_err();
        assert!(err.to_string().contains("inversion:2"), "{err}");
        let sel = Selection { algorithm: Algorithm::Inversion, level: 2, logo_as_gui: true };
        let out = transform_frame(&SystemPowerModel::demo(), &white_png(), &LayoutSidecar::default(), &[m], sel).unwrap();
        assert!((out.report.display_reduction - 1.0).abs() < 1e-12);
    }
}
