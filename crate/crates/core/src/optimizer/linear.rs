//! Parameter search for the three linear transformations.
//!
//! All three scale code values per channel (inversion after complementing),
//! so for a fixed map the energy splits into one term per channel, and each
//! term only needs the palette's per-channel weight histogram.
//!
//! For usability, write each color pair's difference as `Δ` and its
//! direction weights as `w = Δ²/‖Δ‖²` (a point on the unit simplex). A
//! channel-scaling map with factors `f` scales that pair's distance by
//! `sqrt(Σ f²·w)`, which is linear in `w`. The minimum over all pairs is
//! therefore attained at a vertex of the convex hull of the `w` points, and
//! a few hull vertices replace a million pairs.

use super::{finish_outcome, green_exact, invert_exact, Algorithm, ColorMap, MapEntry, OptimizeError, Outcome, Palette, PerceptualConstraint};
use crate::colorspace::{decode_code, quantize_code, Lab, Srgb};
use crate::contribution::ContributionVector;
use crate::powermodel::PixelPowerModel;

/// Resolution of the two-factor grid in the green search.
const GREEN_GRID: usize = 100;
/// Resolution of the coarse three-factor grid for green under fidelity.
const GREEN_FIDELITY_GRID: usize = 20;
const FEASIBILITY_SLACK: f64 = 1e-12;

/// Palette summaries shared by all linear searches on one contribution vector.
pub(crate) struct LinearContext<'a> {
    pub d: &'a ContributionVector,
    pub palette: Palette,
    /// `hist[k][v]`: total weight of colors whose channel `k` equals `v`.
    hist: [[f64; 256]; 3],
    /// Hull vertices of pair direction weights; empty for a single color.
    hull: Vec<[f64; 3]>,
    labs: Vec<Lab>,
}

impl<'a> LinearContext<'a> {
    pub fn new(d: &'a ContributionVector) -> Result<Self, OptimizeError> {
        let palette = Palette::from_contribution(d)?;
        let mut hist = [[0.0; 256]; 3];
        for (c, &w) in palette.colors.iter().zip(&palette.weights) {
            for (k, v) in c.channels().into_iter().enumerate() {
                hist[k][usize::from(v)] += w;
            }
        }
        let hull = direction_hull(&palette.colors);
        let labs = palette.colors.iter().map(|c| c.to_lab()).collect();
        Ok(Self { d, palette, hist, hull, labs })
    }

    fn channel_energy(&self, m: &PixelPowerModel, k: usize, f: f64, invert: bool) -> f64 {
        let coef = [m.a, m.b, m.c][k];
        let mut e = 0.0;
        for (v, &w) in self.hist[k].iter().enumerate() {
            if w > 0.0 {
                let src = if invert { 255.0 - v as f64 } else { v as f64 };
                e += w * decode_code(quantize_code(f * src));
            }
        }
        coef * e
    }

    fn energy(&self, m: &PixelPowerModel, f: [f64; 3], invert: bool) -> f64 {
        (0..3).map(|k| self.channel_energy(m, k, f[k], invert)).sum()
    }

    /// Usability score of channel factors `f` (identical for inversion).
    fn score(&self, f: [f64; 3]) -> f64 {
        if self.hull.is_empty() {
            return f64::INFINITY;
        }
        self.hull
            .iter()
            .map(|v| f[0] * f[0] * v[0] + f[1] * f[1] * v[1] + f[2] * f[2] * v[2])
            .fold(f64::INFINITY, f64::min)
            .sqrt()
    }

    fn distortion(&self, f: [f64; 3], invert: bool) -> f64 {
        self.palette
            .colors
            .iter()
            .zip(&self.palette.weights)
            .zip(&self.labs)
            .map(|((&c, &w), lab)| w * lab.distance(target(c, f, invert).to_lab()))
            .sum()
    }

    fn build_map(&self, algorithm: Algorithm, f: [f64; 3], invert: bool, image_lambda: f64) -> ColorMap {
        let mut map = ColorMap::identity(algorithm);
        map.image_lambda = image_lambda;
        for &c in &self.palette.colors {
            let exact = if invert { invert_exact(c, f[0]) } else { green_exact(c, f) };
            map.insert(c, MapEntry::from_exact(exact));
        }
        map
    }

    /// Smallest third factor `f[k]` keeping the score at least `lambda`, or
    /// `None` if no value in `[0, 1]` works.
    fn solve_factor(&self, f: [f64; 3], k: usize, lambda: f64) -> Option<f64> {
        let target = lambda * lambda * (1.0 + FEASIBILITY_SLACK);
        let mut need: f64 = 0.0;
        for v in &self.hull {
            let rest: f64 = (0..3).filter(|&j| j != k).map(|j| f[j] * f[j] * v[j]).sum();
            let gap = target - rest;
            if gap <= 0.0 {
                continue;
            }
            if v[k] <= 1e-15 {
                return None;
            }
            need = need.max(gap / v[k]);
        }
        let fk = need.sqrt();
        (fk <= 1.0).then_some(fk)
    }
}

fn target(c: Srgb, f: [f64; 3], invert: bool) -> Srgb {
    let exact = if invert { invert_exact(c, f[0]) } else { green_exact(c, f) };
    MapEntry::from_exact(exact).target
}

/// Convex hull (on the simplex) of `Δ²/‖Δ‖²` over all color pairs.
fn direction_hull(colors: &[Srgb]) -> Vec<[f64; 3]> {
    let mut pts: Vec<[i64; 3]> = Vec::with_capacity(colors.len() * colors.len().saturating_sub(1) / 2);
    for i in 0..colors.len() {
        let a = colors[i].channels();
        for b in &colors[i + 1..] {
            let b = b.channels();
            let sq = |k: usize| {
                let d = i64::from(a[k]) - i64::from(b[k]);
                d * d
            };
            pts.push([sq(0), sq(1), sq(2)]);
        }
    }
    // Normalize to the simplex and drop duplicates before the hull.
    let mut w: Vec<[f64; 3]> = pts
        .iter()
        .map(|p| {
            let s = (p[0] + p[1] + p[2]) as f64;
            [p[0] as f64 / s, p[1] as f64 / s, p[2] as f64 / s]
        })
        .collect();
    w.sort_unstable_by(|p, q| p[0].total_cmp(&q[0]).then(p[1].total_cmp(&q[1])));
    w.dedup_by(|p, q| p[0] == q[0] && p[1] == q[1]);
    convex_hull(w)
}

/// Andrew's monotone chain on the first two coordinates; input sorted.
fn convex_hull(pts: Vec<[f64; 3]>) -> Vec<[f64; 3]> {
    if pts.len() <= 2 {
        return pts;
    }
    let cross = |o: &[f64; 3], a: &[f64; 3], b: &[f64; 3]| (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
    let chain = |iter: &mut dyn Iterator<Item = &[f64; 3]>| {
        let mut out: Vec<[f64; 3]> = Vec::new();
        for p in iter {
            while out.len() >= 2 && cross(&out[out.len() - 2], &out[out.len() - 1], p) <= 0.0 {
                out.pop();
            }
            out.push(*p);
        }
        out.pop();
        out
    };
    let mut hull = chain(&mut pts.iter());
    hull.extend(chain(&mut pts.iter().rev()));
    hull
}

pub fn optimize_linear(
    m: &PixelPowerModel,
    d: &ContributionVector,
    algorithm: Algorithm,
    constraint: PerceptualConstraint,
) -> Result<Outcome, OptimizeError> {
    let ctx = LinearContext::new(d)?;
    optimize_linear_ctx(&ctx, m, algorithm, constraint)
}

pub(crate) fn optimize_linear_ctx(
    ctx: &LinearContext<'_>,
    m: &PixelPowerModel,
    algorithm: Algorithm,
    constraint: PerceptualConstraint,
) -> Result<Outcome, OptimizeError> {
    constraint.validate()?;
    let image_lambda = match constraint {
        PerceptualConstraint::Usability { lambda, .. } => lambda,
        PerceptualConstraint::Fidelity { .. } => 1.0,
    };
    let uniform = |invert: bool| match constraint {
        PerceptualConstraint::Usability { lambda, .. } => {
            min_feasible(|mu| ctx.score([mu; 3]) >= lambda * (1.0 - FEASIBILITY_SLACK))
        }
        PerceptualConstraint::Fidelity { delta } => min_feasible(|mu| ctx.distortion([mu; 3], invert) <= delta),
    };
    let (f, invert) = match algorithm {
        Algorithm::Dark | Algorithm::Inversion => {
            let invert = algorithm == Algorithm::Inversion;
            let mu = uniform(invert).ok_or_else(|| infeasible(algorithm, &constraint))?;
            ([mu; 3], invert)
        }
        Algorithm::Green => {
            let searched = match constraint {
                PerceptualConstraint::Usability { lambda, .. } => green_usability(ctx, m, lambda),
                PerceptualConstraint::Fidelity { delta } => green_fidelity(ctx, m, delta),
            };
            // Equal factors are a green map too, so dark bounds the search.
            let f = [searched, uniform(false).map(|mu| [mu; 3])]
                .into_iter()
                .flatten()
                .min_by(|a, b| ctx.energy(m, *a, false).total_cmp(&ctx.energy(m, *b, false)))
                .ok_or_else(|| infeasible(algorithm, &constraint))?;
            (f, false)
        }
        Algorithm::Arbitrary => {
            return Err(OptimizeError::InvalidConstraint("arbitrary is not a linear transformation".into()));
        }
    };
    let map = ctx.build_map(algorithm, f, invert, image_lambda);
    Ok(finish_outcome(m, ctx.d, map, Some(f)))
}

fn infeasible(algorithm: Algorithm, c: &PerceptualConstraint) -> OptimizeError {
    let what = match *c {
        PerceptualConstraint::Fidelity { delta } => format!("fidelity budget delta = {delta}"),
        PerceptualConstraint::Usability { lambda, .. } => format!("usability ratio lambda = {lambda}"),
    };
    OptimizeError::Infeasible(format!("no {algorithm} parameter satisfies the {what}"))
}

/// Smallest μ in [0, 1] passing `feasible`, assuming energy grows with μ.
///
/// Scans at 0.01 and bisects the first feasible interval.
fn min_feasible(feasible: impl Fn(f64) -> bool) -> Option<f64> {
    if !feasible(1.0) {
        return None;
    }
    let first = (0..=100).find(|&k| feasible(k as f64 / 100.0))?;
    if first == 0 {
        return Some(0.0);
    }
    let (mut lo, mut hi) = ((first - 1) as f64 / 100.0, first as f64 / 100.0);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if feasible(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(hi)
}

/// Green under a usability floor: grid over two factors with the third
/// solved exactly, then pattern search on the two free factors.
fn green_usability(ctx: &LinearContext<'_>, m: &PixelPowerModel, lambda: f64) -> Option<[f64; 3]> {
    if ctx.hull.is_empty() {
        return Some([0.0; 3]);
    }
    let grid = GREEN_GRID;
    let mut best: Option<([f64; 3], f64)> = None;
    let consider = |f: [f64; 3], e: f64, best: &mut Option<([f64; 3], f64)>| {
        if best.is_none_or(|(_, be)| e < be) {
            *best = Some((f, e));
        }
    };
    for solved in 0..3 {
        let free: Vec<usize> = (0..3).filter(|&k| k != solved).collect();
        let cache: Vec<Vec<f64>> = free
            .iter()
            .map(|&k| (0..=grid).map(|i| ctx.channel_energy(m, k, i as f64 / grid as f64, false)).collect())
            .collect();
        let mut local: Option<([f64; 3], f64)> = None;
        for i in 0..=grid {
            for j in 0..=grid {
                let mut f = [0.0; 3];
                f[free[0]] = i as f64 / grid as f64;
                f[free[1]] = j as f64 / grid as f64;
                let Some(fs) = ctx.solve_factor(f, solved, lambda) else { continue };
                f[solved] = fs;
                let e = cache[0][i] + cache[1][j] + ctx.channel_energy(m, solved, fs, false);
                consider(f, e, &mut local);
            }
        }
        let Some((mut f, mut e)) = local else { continue };
        let mut step = 0.5 / grid as f64;
        while step > 1e-4 {
            let mut improved = false;
            for &k in &free {
                for s in [-step, step] {
                    let mut g = f;
                    g[k] = (g[k] + s).clamp(0.0, 1.0);
                    let Some(fs) = ctx.solve_factor(g, solved, lambda) else { continue };
                    g[solved] = fs;
                    let ge = ctx.energy(m, g, false);
                    if ge < e {
                        (f, e, improved) = (g, ge, true);
                    }
                }
            }
            if !improved {
                step *= 0.5;
            }
        }
        consider(f, e, &mut best);
    }
    best.map(|(f, _)| f)
}

/// Green under a fidelity budget: coarse 3-D grid visited in energy order
/// until a feasible point, then pattern search.
fn green_fidelity(ctx: &LinearContext<'_>, m: &PixelPowerModel, delta: f64) -> Option<[f64; 3]> {
    let n = GREEN_FIDELITY_GRID;
    let levels: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
    let cache: Vec<Vec<f64>> = (0..3).map(|k| levels.iter().map(|&f| ctx.channel_energy(m, k, f, false)).collect()).collect();
    let mut pts = Vec::with_capacity(levels.len().pow(3));
    for (i, &fr) in levels.iter().enumerate() {
        for (j, &fg) in levels.iter().enumerate() {
            for (k, &fb) in levels.iter().enumerate() {
                pts.push(([fr, fg, fb], cache[0][i] + cache[1][j] + cache[2][k]));
            }
        }
    }
    pts.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (mut f, mut e) = pts.into_iter().find(|(f, _)| ctx.distortion(*f, false) <= delta)?;
    let mut step = 0.5 / n as f64;
    while step > 1e-4 {
        let mut improved = false;
        for k in 0..3 {
            for s in [-step, step] {
                let mut g = f;
                g[k] = (g[k] + s).clamp(0.0, 1.0);
                let ge = ctx.energy(m, g, false);
                if ge < e && ctx.distortion(g, false) <= delta {
                    (f, e, improved) = (g, ge, true);
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    Some(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optimizer::{check_fidelity, energy, usability_score};
    use crate::powermodel::SystemPowerModel;

    fn demo() -> PixelPowerModel {
        SystemPowerModel::demo().pixel
    }

    fn web_palette() -> ContributionVector {
        let mut d = ContributionVector::new("t");
        let colors = [
            (Srgb::WHITE, 6500.0),
            (Srgb::BLACK, 1500.0),
            (Srgb::new(0, 0, 238), 300.0),
            (Srgb::new(85, 26, 139), 100.0),
            (Srgb::new(240, 240, 240), 800.0),
            (Srgb::new(204, 0, 0), 200.0),
            (Srgb::new(119, 119, 119), 400.0),
            (Srgb::new(30, 120, 60), 200.0),
        ];
        for (c, w) in colors {
            d.insert(c, w);
        }
        d
    }

    #[test]
    fn dark_hits_the_boundary() {
        let d = web_palette();
        let out = optimize_linear(&demo(), &d, Algorithm::Dark, PerceptualConstraint::usability(0.8)).unwrap();
        let mu = out.params.unwrap()[0];
        assert!((mu - 0.8).abs() < 1e-9, "{mu}");
        assert!(usability_score(&out.map, &d).unwrap() >= 0.8 * (1.0 - 1e-9));
        assert_eq!(out.map.get(Srgb::WHITE), Srgb::new(204, 204, 204));
    }

    #[test]
    fn inversion_at_one_is_pure_inversion() {
        let d = web_palette();
        let out = optimize_linear(&demo(), &d, Algorithm::Inversion, PerceptualConstraint::usability(1.0)).unwrap();
        assert!((out.params.unwrap()[0] - 1.0).abs() < 1e-9);
        assert_eq!(out.map.get(Srgb::WHITE), Srgb::BLACK);
        assert_eq!(out.map.get(Srgb::new(0, 0, 238)), Srgb::new(255, 255, 17));
    }

    #[test]
    fn hull_score_matches_pairwise() {
        let d = web_palette();
        let ctx = LinearContext::new(&d).unwrap();
        for f in [[0.5, 0.9, 0.3], [1.0, 0.2, 0.7], [0.8; 3]] {
            let map = ctx.build_map(Algorithm::Green, f, false, 1.0);
            let pairwise = usability_score(&map, &d).unwrap();
            assert!((ctx.score(f) - pairwise).abs() < 1e-12, "{f:?}: {} vs {pairwise}", ctx.score(f));
        }
    }

    #[test]
    fn hull_of_collinear_and_tiny_sets() {
        let grays = [Srgb::new(0, 0, 0), Srgb::new(9, 9, 9), Srgb::new(80, 80, 80)];
        assert_eq!(direction_hull(&grays).len(), 1);
        let pair = [Srgb::new(0, 0, 0), Srgb::new(50, 0, 0), Srgb::new(0, 50, 0)];
        let h = direction_hull(&pair);
        assert!(h.len() >= 2 && h.len() <= 3);
    }

    #[test]
    fn green_matches_fine_grid_oracle() {
        let mut d = ContributionVector::new("t");
        d.insert(Srgb::new(250, 245, 240), 50.0);
        d.insert(Srgb::new(20, 40, 200), 10.0);
        d.insert(Srgb::new(180, 30, 60), 5.0);
        let m = demo();
        let lambda = 0.8;
        let out = optimize_linear(&m, &d, Algorithm::Green, PerceptualConstraint::usability(lambda)).unwrap();
        assert!(usability_score(&out.map, &d).unwrap() >= lambda * (1.0 - 1e-9));

        // Exhaustive 0.01 grid over all three factors, scored pairwise.
        let colors: Vec<Srgb> = d.colors().map(|(c, _)| c).collect();
        let mut best = f64::INFINITY;
        for i in 0..=100 {
            for j in 0..=100 {
                for k in 0..=100 {
                    let f = [i as f64 / 100.0, j as f64 / 100.0, k as f64 / 100.0];
                    let ok = (0..3).all(|a| {
                        (a + 1..3).all(|b| {
                            let (x, y) = (colors[a].channels(), colors[b].channels());
                            let num: f64 = (0..3).map(|c| (f[c] * (f64::from(x[c]) - f64::from(y[c]))).powi(2)).sum();
                            let den: f64 = (0..3).map(|c| (f64::from(x[c]) - f64::from(y[c])).powi(2)).sum();
                            (num / den).sqrt() >= lambda
                        })
                    });
                    if ok {
                        let e: f64 = d.colors().map(|(c, w)| w * m.power_srgb(transform_green_f(c, f))).sum();
                        best = best.min(e);
                    }
                }
            }
        }
        assert!(out.energy <= best * 1.01, "{} vs oracle {best}", out.energy);
    }

    fn transform_green_f(c: Srgb, f: [f64; 3]) -> Srgb {
        super::super::transform_green(c, f[0], f[1], f[2])
    }

    #[test]
    fn green_never_worse_than_dark() {
        let d = web_palette();
        let m = demo();
        for lambda in [0.9, 0.7, 0.5] {
            let c = PerceptualConstraint::usability(lambda);
            let dark = optimize_linear(&m, &d, Algorithm::Dark, c).unwrap();
            let green = optimize_linear(&m, &d, Algorithm::Green, c).unwrap();
            assert!(green.energy <= dark.energy * (1.0 + 1e-12));
        }
    }

    #[test]
    fn fidelity_modes_respect_budget() {
        let d = web_palette();
        let m = demo();
        let delta = 0.1 * d.total_weight() * 10.0;
        for alg in [Algorithm::Dark, Algorithm::Green] {
            let out = optimize_linear(&m, &d, alg, PerceptualConstraint::fidelity(delta)).unwrap();
            assert!(check_fidelity(&out.map, &d, delta), "{alg}");
            assert!(out.energy < energy(&m, &ColorMap::identity(alg), &d));
        }
        let err = optimize_linear(&m, &d, Algorithm::Inversion, PerceptualConstraint::fidelity(1.0)).unwrap_err();
        assert!(matches!(err, OptimizeError::Infeasible(ref s) if s.contains("fidelity")));
    }

    #[test]
    fn dark_reduction_monotone_in_level() {
        let d = web_palette();
        let m = demo();
        let red: Vec<f64> = [0.9, 0.8, 0.7, 0.6, 0.5]
            .iter()
            .map(|&l| optimize_linear(&m, &d, Algorithm::Dark, PerceptualConstraint::usability(l)).unwrap().reduction)
            .collect();
        assert!(red.windows(2).all(|w| w[0] <= w[1]), "{red:?}");
    }
}
