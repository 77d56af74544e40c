//! End-to-end behavior on the generated corpus.

use std::collections::BTreeMap;

use oledcolor::contribution::{collect_session, CollectOptions, ContributionVector};
use oledcolor::optimizer::{build_option_grid, usability_score, Algorithm, OptionGrid, LEVELS};
use oledcolor::pipeline::{apply_colormap, classify_pixels, generate_corpus, CorpusSpec, Page};
use oledcolor::powermodel::SystemPowerModel;

fn sites(pages: &[Page]) -> BTreeMap<String, (ContributionVector, Vec<&Page>)> {
    let mut out: BTreeMap<String, (ContributionVector, Vec<&Page>)> = BTreeMap::new();
    for p in pages {
        let entry = out.entry(p.site.clone()).or_insert_with(|| (ContributionVector::new(p.site.clone()), Vec::new()));
        collect_session(&mut entry.0, &p.frame, &p.sidecar, &p.trace, CollectOptions::default()).unwrap();
        entry.1.push(p);
    }
    out
}

/// Color-dependent power before and after, summed over a site's pages.
fn display_power(model: &SystemPowerModel, grid: &OptionGrid, alg: Algorithm, level: u8, pages: &[&Page]) -> (f64, f64) {
    let map = grid.map(alg, level).unwrap();
    let (mut before, mut after) = (0.0, 0.0);
    for p in pages {
        let mask = classify_pixels(&p.frame, &p.sidecar, map.logo_as_gui).unwrap();
        let out = apply_colormap(&p.frame, &mask, map).unwrap();
        before += model.frame_power(&p.frame) - model.p_black;
        after += model.frame_power(&out) - model.p_black;
    }
    (before, after)
}

#[test]
fn grids_dominate_and_order_reductions() {
    let model = SystemPowerModel::demo();
    let pages = generate_corpus(&CorpusSpec { pages: 12, ..Default::default() }).unwrap();
    let mut totals = [(0.0, 0.0); 4];
    for (site, (d, site_pages)) in sites(&pages) {
        let grid = build_option_grid(&model.pixel, &d).unwrap();
        for level in 1..=5u8 {
            let lambda = LEVELS[usize::from(level) - 1];
            let e = |a| grid.cell(a, level).unwrap().outcome().unwrap().energy;
            let best_linear = e(Algorithm::Dark).min(e(Algorithm::Green)).min(e(Algorithm::Inversion));
            assert!(e(Algorithm::Arbitrary) <= best_linear, "{site} level {level}");
            for a in Algorithm::ALL {
                let map = grid.map(a, level).unwrap();
                assert!(usability_score(map, &d).unwrap() >= lambda * 0.95, "{site} {a} {level}");
            }
        }
        for (k, &a) in Algorithm::ALL.iter().enumerate() {
            let (b, t) = display_power(&model, &grid, a, 2, &site_pages);
            totals[k].0 += b;
            totals[k].1 += t;
        }
    }
    let r: Vec<f64> = totals.iter().map(|(b, t)| 1.0 - t / b).collect();
    assert!(r[0] < r[1] && r[1] < r[2] && r[2] <= r[3], "{r:?}");
    assert!(r[2] >= 0.40, "{r:?}");
}
