//! Per-color ("arbitrary") maps.
//!
//! Fidelity splits the distortion budget into per-color radii and solves each
//! color on its own: the cheapest displayable color inside a CIELAB ball.
//!
//! Usability runs a seeded local search. Starts are the best linear map and
//! the best code-space similarities `x′ = λ·Q·x + t` (Q a signed
//! permutation), which keep every pairwise ratio at exactly λ. A move
//! re-targets one color and is accepted when it lowers that color's power
//! and no pair ratio leaves `[λ(1−tol), λ(1+tol)]` or, if already outside,
//! moves further out. The result is never worse than the best linear map,
//! which is kept as a fallback.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::linear::{optimize_linear_ctx, LinearContext};
use super::{dist3, finish_outcome, Algorithm, ColorMap, MapEntry, OptimizeError, Outcome, Palette, PerceptualConstraint};
use crate::colorspace::{lab_to_linear, linear_to_srgb, Lab, Srgb};
use crate::contribution::{color_key, ContributionVector};
use crate::powermodel::PixelPowerModel;

/// How the fidelity budget is split into per-color radii.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BudgetSplit {
    /// Every color gets `δ / Σw`.
    #[default]
    Uniform,
    /// Radius proportional to weight: `δ·wᵢ / Σw²`.
    WeightProportional,
}

#[derive(Debug, Clone)]
pub struct ArbitraryOptions {
    pub seed: u64,
    pub max_sweeps: usize,
    /// Only the heaviest `movable` colors are re-targeted by local search.
    pub movable: Option<usize>,
    /// Number of similarity seeds to start local search from, besides the
    /// best linear map.
    pub similarity_starts: usize,
    pub budget_split: BudgetSplit,
}

impl Default for ArbitraryOptions {
    fn default() -> Self {
        Self { seed: 0, max_sweeps: 4, movable: Some(400), similarity_starts: 2, budget_split: BudgetSplit::Uniform }
    }
}

/// Step in CIELAB units for the ball search.
const LAB_STEP: f64 = 2.0;
/// Keeps rounding in sums from tipping a map over its budget.
const BUDGET_MARGIN: f64 = 1e-9;
const RATIO_EPS: f64 = 1e-12;

pub fn optimize_arbitrary(m: &PixelPowerModel, d: &ContributionVector, constraint: PerceptualConstraint) -> Result<Outcome, OptimizeError> {
    optimize_arbitrary_with(m, d, constraint, &ArbitraryOptions::default())
}

pub fn optimize_arbitrary_with(
    m: &PixelPowerModel,
    d: &ContributionVector,
    constraint: PerceptualConstraint,
    opts: &ArbitraryOptions,
) -> Result<Outcome, OptimizeError> {
    constraint.validate()?;
    match constraint {
        PerceptualConstraint::Fidelity { delta } => fidelity(m, d, delta, opts),
        PerceptualConstraint::Usability { .. } => {
            let ctx = LinearContext::new(d)?;
            let seeds: Vec<Outcome> =
                Algorithm::LINEAR.iter().filter_map(|&a| optimize_linear_ctx(&ctx, m, a, constraint).ok()).collect();
            usability_from_seeds(m, d, &ctx.palette, constraint, &seeds, opts)
        }
    }
}

fn fidelity(m: &PixelPowerModel, d: &ContributionVector, delta: f64, opts: &ArbitraryOptions) -> Result<Outcome, OptimizeError> {
    let palette = Palette::from_contribution(d)?;
    let total: f64 = palette.weights.iter().sum();
    let total_sq: f64 = palette.weights.iter().map(|w| w * w).sum();
    let budget = delta * (1.0 - BUDGET_MARGIN);
    let targets: Vec<Srgb> = palette
        .colors
        .par_iter()
        .zip(palette.weights.par_iter())
        .map(|(&c, &w)| {
            let radius = match opts.budget_split {
                BudgetSplit::Uniform => budget / total,
                BudgetSplit::WeightProportional => budget * w / total_sq,
            };
            cheapest_in_ball(m, c, radius)
        })
        .collect();
    let mut map = ColorMap::identity(Algorithm::Arbitrary);
    for (&c, &t) in palette.colors.iter().zip(&targets) {
        map.insert(c, MapEntry::integer(t));
    }
    Ok(finish_outcome(m, d, map, None))
}

/// Ranking of candidate replacements: power, then closeness to the original,
/// then color key.
fn better(m: &PixelPowerModel, origin: Lab, a: Srgb, b: Srgb) -> bool {
    let (pa, pb) = (m.power_srgb(a), m.power_srgb(b));
    if pa != pb {
        return pa < pb;
    }
    let (da, db) = (origin.distance(a.to_lab()), origin.distance(b.to_lab()));
    if da != db {
        return da < db;
    }
    color_key(a) < color_key(b)
}

/// Lowest-power color within CIELAB distance `radius` of `x`.
fn cheapest_in_ball(m: &PixelPowerModel, x: Srgb, radius: f64) -> Srgb {
    let origin = x.to_lab();
    let within = |c: Srgb| origin.distance(c.to_lab()) <= radius;
    let mut best = x;
    if radius <= 0.0 {
        return best;
    }
    let offer = |c: Srgb, best: &mut Srgb| {
        if within(c) && better(m, origin, c, *best) {
            *best = c;
        }
    };
    offer(Srgb::BLACK, &mut best);

    // Coarse-to-fine over a cubic Lab grid clipped to the ball.
    let mut step = (radius / 8.0).max(LAB_STEP);
    let mut center = origin;
    let mut reach = radius;
    loop {
        let k = (reach / step).floor() as i32;
        for i in -k..=k {
            for j in -k..=k {
                for l in -k..=k {
                    let p = Lab::new(center.l + f64::from(i) * step, center.a + f64::from(j) * step, center.b + f64::from(l) * step);
                    if origin.distance(p) > radius {
                        continue;
                    }
                    let g = lab_to_linear(p);
                    if g.clamped {
                        continue;
                    }
                    offer(linear_to_srgb(g.rgb), &mut best);
                }
            }
        }
        if step <= LAB_STEP {
            break;
        }
        center = best.to_lab();
        reach = 2.0 * step;
        step = (step / 2.0).max(LAB_STEP);
    }

    // Final polish on the 8-bit lattice.
    loop {
        let cur = best;
        let ch = cur.channels();
        for k in 0..3 {
            for s in [-1i16, 1] {
                let v = i16::from(ch[k]) + s;
                if !(0..=255).contains(&v) {
                    continue;
                }
                let mut n = ch;
                n[k] = v as u8;
                offer(Srgb::from_channels(n), &mut best);
            }
        }
        if best == cur {
            break;
        }
    }
    best
}

/// Code-space similarity seeds: 6 permutations × 8 sign patterns.
fn similarity_targets(palette: &Palette, lambda: f64) -> Vec<Vec<[f64; 3]>> {
    const PERMS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let src: Vec<[f64; 3]> = (0..palette.len()).map(|i| palette.code(i)).collect();
    let mut out = Vec::with_capacity(48);
    for perm in PERMS {
        for signs in 0..8u8 {
            let s: [f64; 3] = std::array::from_fn(|k| if signs >> k & 1 == 1 { -1.0 } else { 1.0 });
            // Shift each output channel so its smallest value is exactly 0.
            let offset: [f64; 3] = std::array::from_fn(|k| {
                -src.iter().map(|x| lambda * s[k] * x[perm[k]]).fold(f64::INFINITY, f64::min)
            });
            out.push(
                src.iter()
                    .map(|x| std::array::from_fn(|k| (lambda * s[k] * x[perm[k]] + offset[k]).max(0.0)))
                    .collect(),
            );
        }
    }
    out
}

struct Search<'a> {
    m: &'a PixelPowerModel,
    src: Vec<[f64; 3]>,
    weights: &'a [f64],
    lo: f64,
    hi: f64,
}

impl Search<'_> {
    fn energy(&self, targets: &[[f64; 3]]) -> f64 {
        targets
            .iter()
            .zip(self.weights)
            .map(|(t, w)| w * self.m.power_srgb(MapEntry::from_exact(*t).target))
            .sum()
    }

    /// Whether moving color `i` to `y` keeps every pair ratio acceptable.
    fn admissible(&self, targets: &[[f64; 3]], i: usize, y: [f64; 3]) -> bool {
        let xi = self.src[i];
        let ti = targets[i];
        for (j, (xj, tj)) in self.src.iter().zip(targets).enumerate() {
            if j == i {
                continue;
            }
            let d = dist3(xi, *xj);
            let old = dist3(ti, *tj) / d;
            let new = dist3(y, *tj) / d;
            if new < old.min(self.lo) - RATIO_EPS || new > old.max(self.hi) + RATIO_EPS {
                return false;
            }
        }
        true
    }

    fn run(&self, mut targets: Vec<[f64; 3]>, seeds: &[Vec<[f64; 3]>], movable: &[usize], sweeps: usize, rng: &mut ChaCha8Rng) -> Vec<[f64; 3]> {
        let mut order = movable.to_vec();
        for _ in 0..sweeps {
            order.shuffle(rng);
            let mut improved = false;
            for &i in &order {
                let current = MapEntry::from_exact(targets[i]).target;
                let p_now = self.m.power_srgb(current);
                let origin = Srgb::from_channels(self.src[i].map(|v| v as u8)).to_lab();
                let mut cands: Vec<(f64, f64, u32, [f64; 3])> = candidates(targets[i], i, seeds)
                    .into_iter()
                    .filter_map(|y| {
                        let q = MapEntry::from_exact(y).target;
                        let p = self.m.power_srgb(q);
                        (p < p_now).then(|| (p, origin.distance(q.to_lab()), color_key(q), y))
                    })
                    .collect();
                cands.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)).then(a.2.cmp(&b.2)));
                if let Some(&(_, _, _, y)) = cands.iter().find(|c| self.admissible(&targets, i, c.3)) {
                    targets[i] = y;
                    improved = true;
                }
            }
            if !improved {
                break;
            }
        }
        targets
    }
}

fn candidates(current: [f64; 3], i: usize, seeds: &[Vec<[f64; 3]>]) -> Vec<[f64; 3]> {
    let mut out: Vec<[f64; 3]> = seeds.iter().map(|s| s[i]).collect();
    out.push([0.0; 3]);
    let q = MapEntry::from_exact(current).target.channels().map(f64::from);
    for step in [1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0] {
        for sign in [-1.0, 1.0] {
            for k in 0..3 {
                let mut y = q;
                y[k] = (y[k] + sign * step).clamp(0.0, 255.0);
                out.push(y);
            }
            out.push(q.map(|v| (v + sign * step).clamp(0.0, 255.0)));
        }
    }
    out
}

pub(crate) fn usability_from_seeds(
    m: &PixelPowerModel,
    d: &ContributionVector,
    palette: &Palette,
    constraint: PerceptualConstraint,
    linear: &[Outcome],
    opts: &ArbitraryOptions,
) -> Result<Outcome, OptimizeError> {
    let PerceptualConstraint::Usability { lambda, tolerance } = constraint else {
        unreachable!("usability search called with a fidelity constraint");
    };
    let with_meta = |mut map: ColorMap| {
        map.algorithm = Algorithm::Arbitrary;
        map.image_lambda = lambda;
        map
    };
    if palette.len() == 1 {
        // No pairs to preserve.
        let mut map = ColorMap::identity(Algorithm::Arbitrary);
        map.insert(palette.colors[0], MapEntry::integer(Srgb::BLACK));
        return Ok(finish_outcome(m, d, with_meta(map), None));
    }

    let search = Search {
        m,
        src: (0..palette.len()).map(|i| palette.code(i)).collect(),
        weights: &palette.weights,
        lo: lambda * (1.0 - tolerance),
        hi: lambda * (1.0 + tolerance),
    };
    let seeds = similarity_targets(palette, lambda);
    let mut ranked: Vec<(f64, usize)> = seeds.iter().enumerate().map(|(k, s)| (search.energy(s), k)).collect();
    ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let best_linear = linear.iter().min_by(|a, b| a.energy.total_cmp(&b.energy));
    let mut starts: Vec<Vec<[f64; 3]>> = Vec::new();
    if let Some(lin) = best_linear {
        starts.push(palette.colors.iter().map(|&c| lin.map.exact(c)).collect());
    }
    starts.extend(ranked.iter().take(opts.similarity_starts.max(1)).map(|&(_, k)| seeds[k].clone()));

    let mut movable: Vec<usize> = (0..palette.len()).collect();
    movable.sort_by(|&a, &b| palette.weights[b].total_cmp(&palette.weights[a]).then(a.cmp(&b)));
    if let Some(k) = opts.movable {
        movable.truncate(k);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut best: Option<(f64, Vec<[f64; 3]>)> = None;
    for start in starts {
        let result = search.run(start, &seeds, &movable, opts.max_sweeps, &mut rng);
        let e = search.energy(&result);
        if best.as_ref().is_none_or(|(be, _)| e < *be) {
            best = Some((e, result));
        }
    }
    let (e_local, targets) = best.expect("at least one start");

    if let Some(lin) = best_linear.filter(|lin| lin.energy <= e_local) {
        return Ok(finish_outcome(m, d, with_meta(lin.map.clone()), lin.params));
    }
    let mut map = ColorMap::identity(Algorithm::Arbitrary);
    for (&c, &t) in palette.colors.iter().zip(&targets) {
        map.insert(c, MapEntry::from_exact(t));
    }
    Ok(finish_outcome(m, d, with_meta(map), None))
}

/// Usability-mode arbitrary map restricted to a `levels`-per-channel lattice,
/// with every pair ratio required inside the band.
///
/// Constructive starts (each color order, each lattice anchor for the first
/// color when the palette is tiny) are followed by single-color moves to the
/// cheapest admissible lattice point.
pub fn optimize_arbitrary_lattice(
    m: &PixelPowerModel,
    d: &ContributionVector,
    lambda: f64,
    tolerance: f64,
    levels: u32,
    opts: &ArbitraryOptions,
) -> Result<Outcome, OptimizeError> {
    PerceptualConstraint::Usability { lambda, tolerance }.validate()?;
    let palette = Palette::from_contribution(d)?;
    let n = palette.len();
    if levels < 2 {
        return Err(OptimizeError::InvalidConstraint("lattice needs at least two levels".into()));
    }
    let codes: Vec<f64> = (0..levels).map(|k| (255.0 * f64::from(k) / f64::from(levels - 1)).round()).collect();
    let mut lattice: Vec<(f64, [f64; 3])> = Vec::with_capacity(codes.len().pow(3));
    for &r in &codes {
        for &g in &codes {
            for &b in &codes {
                let y = [r, g, b];
                lattice.push((m.power_srgb(MapEntry::integer_from(y)), y));
            }
        }
    }
    lattice.sort_by(|a, b| a.0.total_cmp(&b.0).then(color_key(MapEntry::integer_from(a.1)).cmp(&color_key(MapEntry::integer_from(b.1)))));

    let src: Vec<[f64; 3]> = (0..n).map(|i| palette.code(i)).collect();
    let (lo, hi) = (lambda * (1.0 - tolerance), lambda * (1.0 + tolerance));
    let in_band = |i: usize, y: [f64; 3], j: usize, t: [f64; 3]| {
        let r = dist3(y, t) / dist3(src[i], src[j]);
        r >= lo - RATIO_EPS && r <= hi + RATIO_EPS
    };
    let energy = |t: &[[f64; 3]]| -> f64 {
        t.iter().zip(&palette.weights).map(|(y, w)| w * m.power_srgb(MapEntry::integer_from(*y))).sum()
    };

    let mut orders: Vec<Vec<usize>> = Vec::new();
    if n <= 4 {
        permutations((0..n).collect(), &mut orders);
    } else {
        let mut by_weight: Vec<usize> = (0..n).collect();
        by_weight.sort_by(|&a, &b| palette.weights[b].total_cmp(&palette.weights[a]));
        orders.push(by_weight);
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        for _ in 0..8 {
            let mut o: Vec<usize> = (0..n).collect();
            o.shuffle(&mut rng);
            orders.push(o);
        }
    }
    let anchors = if n <= 3 { lattice.len() } else { 64.min(lattice.len()) };

    let mut best: Option<(f64, Vec<[f64; 3]>)> = None;
    for order in &orders {
        for anchor in 0..anchors {
            // Anchors come in power order; later ones cannot lead to a better start.
            let bound = best.as_ref().map_or(f64::INFINITY, |b| b.0);
            let mut partial = palette.weights[order[0]] * lattice[anchor].0;
            if partial >= bound {
                break;
            }
            let mut t: Vec<Option<[f64; 3]>> = vec![None; n];
            t[order[0]] = Some(lattice[anchor].1);
            let mut ok = true;
            for &i in &order[1..] {
                if partial >= bound {
                    ok = false;
                    break;
                }
                let pick = lattice.iter().find(|(_, y)| {
                    (0..n).all(|j| match t[j] {
                        Some(tj) => in_band(i, *y, j, tj),
                        None => true,
                    })
                });
                match pick {
                    Some(&(p, y)) => {
                        t[i] = Some(y);
                        partial += palette.weights[i] * p;
                    }
                    None => {
                        ok = false;
                        break;
                    }
                }
            }
            if !ok {
                continue;
            }
            let mut t: Vec<[f64; 3]> = t.into_iter().map(Option::unwrap).collect();
            // Single-color moves until none helps.
            loop {
                let mut moved = false;
                for i in 0..n {
                    let p_now = m.power_srgb(MapEntry::integer_from(t[i]));
                    let pick = lattice
                        .iter()
                        .take_while(|(p, _)| *p < p_now)
                        .find(|(_, y)| (0..n).all(|j| j == i || in_band(i, *y, j, t[j])));
                    if let Some(&(_, y)) = pick {
                        t[i] = y;
                        moved = true;
                    }
                }
                if !moved {
                    break;
                }
            }
            let e = energy(&t);
            if best.as_ref().is_none_or(|(be, _)| e < *be) {
                best = Some((e, t));
            }
        }
    }
    let (_, t) = best.ok_or_else(|| OptimizeError::Infeasible(format!("no {levels}-level lattice assignment keeps every ratio within the band around lambda = {lambda}")))?;
    let mut map = ColorMap::identity(Algorithm::Arbitrary);
    map.image_lambda = lambda;
    for (&c, &y) in palette.colors.iter().zip(&t) {
        map.insert(c, MapEntry::from_exact(y));
    }
    Ok(finish_outcome(m, d, map, None))
}

fn permutations(items: Vec<usize>, out: &mut Vec<Vec<usize>>) {
    fn go(prefix: &mut Vec<usize>, rest: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if rest.is_empty() {
            out.push(prefix.clone());
            return;
        }
        for k in 0..rest.len() {
            let x = rest.remove(k);
            prefix.push(x);
            go(prefix, rest, out);
            prefix.pop();
            rest.insert(k, x);
        }
    }
    go(&mut Vec::new(), &mut items.clone(), out);
}

impl MapEntry {
    fn integer_from(y: [f64; 3]) -> Srgb {
        MapEntry::from_exact(y).target
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optimizer::{check_fidelity, optimize_linear, usability_score};
    use crate::powermodel::SystemPowerModel;

    fn demo() -> PixelPowerModel {
        SystemPowerModel::demo().pixel
    }

    fn single(c: Srgb, w: f64) -> ContributionVector {
        let mut d = ContributionVector::new("t");
        d.insert(c, w);
        d
    }

    #[test]
    fn zero_budget_is_identity() {
        let d = single(Srgb::new(120, 80, 200), 5.0);
        let out = optimize_arbitrary(&demo(), &d, PerceptualConstraint::fidelity(0.0)).unwrap();
        assert_eq!(out.map.get(Srgb::new(120, 80, 200)), Srgb::new(120, 80, 200));
    }

    #[test]
    fn large_budget_reaches_black() {
        let x = Srgb::new(120, 80, 200);
        let d = single(x, 1.0);
        let delta = x.to_lab().distance(Srgb::BLACK.to_lab()) + 1e-6;
        let out = optimize_arbitrary(&demo(), &d, PerceptualConstraint::fidelity(delta)).unwrap();
        assert_eq!(out.map.get(x), Srgb::BLACK);
        assert_eq!(out.energy, 0.0);
    }

    #[test]
    fn fidelity_maps_stay_in_budget() {
        let mut d = ContributionVector::new("t");
        for (i, c) in [Srgb::WHITE, Srgb::new(0, 0, 238), Srgb::new(200, 30, 30), Srgb::new(90, 90, 90)].into_iter().enumerate() {
            d.insert(c, 10.0 * (i + 1) as f64);
        }
        let m = demo();
        for split in [BudgetSplit::Uniform, BudgetSplit::WeightProportional] {
            let opts = ArbitraryOptions { budget_split: split, ..Default::default() };
            for delta in [10.0, 200.0, 1500.0, 20000.0] {
                let out = optimize_arbitrary_with(&m, &d, PerceptualConstraint::fidelity(delta), &opts).unwrap();
                assert!(check_fidelity(&out.map, &d, delta), "{split:?} {delta}");
            }
        }
        let small = optimize_arbitrary(&m, &d, PerceptualConstraint::fidelity(200.0)).unwrap();
        let large = optimize_arbitrary(&m, &d, PerceptualConstraint::fidelity(20000.0)).unwrap();
        assert!(large.energy <= small.energy);
    }

    #[test]
    fn ball_search_beats_sampled_points() {
        // Any random in-ball color is at least as expensive as the solver's pick.
        use rand::Rng;
        let m = demo();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let x = Srgb::new(rng.random(), rng.random(), rng.random());
            let r = rng.random_range(3.0..30.0);
            let best = cheapest_in_ball(&m, x, r);
            assert!(x.to_lab().distance(best.to_lab()) <= r);
            for _ in 0..300 {
                let y = Srgb::new(rng.random(), rng.random(), rng.random());
                if x.to_lab().distance(y.to_lab()) <= r {
                    assert!(m.power_srgb(best) <= m.power_srgb(y) * 1.0 + 1e-18);
                }
            }
        }
    }

    fn site() -> ContributionVector {
        let mut d = ContributionVector::new("t");
        let cs = [
            (Srgb::WHITE, 6000.0),
            (Srgb::BLACK, 1200.0),
            (Srgb::new(0, 0, 238), 200.0),
            (Srgb::new(230, 230, 230), 500.0),
            (Srgb::new(128, 128, 128), 250.0),
            (Srgb::new(51, 102, 153), 120.0),
            (Srgb::new(200, 200, 200), 90.0),
            (Srgb::new(180, 20, 20), 60.0),
        ];
        for (c, w) in cs {
            d.insert(c, w);
        }
        d
    }

    #[test]
    fn usability_dominates_linear_and_respects_floor() {
        let d = site();
        let m = demo();
        for lambda in [0.9, 0.7, 0.5] {
            let c = PerceptualConstraint::usability(lambda);
            let arb = optimize_arbitrary(&m, &d, c).unwrap();
            for alg in Algorithm::LINEAR {
                let lin = optimize_linear(&m, &d, alg, c).unwrap();
                assert!(arb.energy <= lin.energy, "{alg} at {lambda}");
            }
            assert!(usability_score(&arb.map, &d).unwrap() >= lambda * (1.0 - 0.05));
            assert_eq!(arb.map.algorithm, Algorithm::Arbitrary);
        }
    }

    #[test]
    fn similarity_seeds_preserve_ratio() {
        let d = site();
        let p = Palette::from_contribution(&d).unwrap();
        let src: Vec<[f64; 3]> = (0..p.len()).map(|i| p.code(i)).collect();
        for seed in similarity_targets(&p, 0.7) {
            assert!((super::super::min_ratio(&src, &seed) - 0.7).abs() < 1e-12);
            assert!(seed.iter().flatten().all(|&v| (0.0..=255.0).contains(&v)));
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let d = site();
        let m = demo();
        let c = PerceptualConstraint::usability(0.6);
        let a = optimize_arbitrary(&m, &d, c).unwrap();
        let b = optimize_arbitrary(&m, &d, c).unwrap();
        assert_eq!(a.map, b.map);
    }

    #[test]
    fn permutations_are_complete() {
        let mut out = Vec::new();
        permutations(vec![0, 1, 2], &mut out);
        assert_eq!(out.len(), 6);
    }
}
