//! Linear OLED power model, a simulated battery interface, and model
//! construction by least squares.
//!
//! Pixel power is linear in linear-light RGB: `P = a·R + b·G + c·B`. The
//! system adds a color-independent baseline measured with a black screen.

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::colorspace::{LinearRgb, Srgb};
use crate::pipeline::Frame;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("coefficient `{name}` must be positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("p_black must be non-negative, got {0}")]
    NegativeBlack(f64),
    #[error("pixel_count must be positive")]
    ZeroPixels,
    #[error("model file line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("model file is missing `{0}`")]
    Missing(&'static str),
}

#[derive(Debug, Error)]
pub enum ModelLoadError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Error)]
pub enum CalibrationError {
    #[error("underdetermined regression: {points} benchmark points of rank {rank}, need 4")]
    Underdetermined { points: usize, rank: usize },
    #[error("invalid simulator: {0}")]
    Simulator(String),
    #[error("fitted model is not physical: {0}")]
    Unphysical(#[from] ModelError),
}

/// Watts per pixel at full-intensity red, green and blue.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PixelPowerModel {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl PixelPowerModel {
    pub fn new(a: f64, b: f64, c: f64) -> Result<Self, ModelError> {
        for (name, value) in [("a", a), ("b", b), ("c", c)] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(ModelError::NonPositive { name, value });
            }
        }
        Ok(Self { a, b, c })
    }

    #[inline]
    pub fn power(&self, x: LinearRgb) -> f64 {
        self.a * x.r + self.b * x.g + self.c * x.b
    }

    #[inline]
    pub fn power_srgb(&self, c: Srgb) -> f64 {
        self.power(c.to_linear())
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self { a: self.a * k, b: self.b * k, c: self.c * k }
    }
}

pub fn pixel_power(m: &PixelPowerModel, x: LinearRgb) -> f64 {
    m.power(x)
}

/// Power of a region given per-color pixel counts (or pixel·second weights).
pub fn region_power<I>(m: &PixelPowerModel, counts: I) -> f64
where
    I: IntoIterator<Item = (Srgb, f64)>,
{
    counts.into_iter().map(|(c, n)| n * m.power_srgb(c)).sum()
}

/// Exact color histogram of a frame.
pub fn histogram(f: &Frame) -> HashMap<Srgb, u64> {
    let mut h = HashMap::new();
    for &p in f.pixels() {
        *h.entry(p).or_insert(0) += 1;
    }
    h
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemPowerModel {
    pub pixel: PixelPowerModel,
    pub p_black: f64,
    pub pixel_count: u64,
}

impl SystemPowerModel {
    pub fn new(pixel: PixelPowerModel, p_black: f64, pixel_count: u64) -> Result<Self, ModelError> {
        if !(p_black >= 0.0 && p_black.is_finite()) {
            return Err(ModelError::NegativeBlack(p_black));
        }
        if pixel_count == 0 {
            return Err(ModelError::ZeroPixels);
        }
        Ok(Self { pixel, p_black, pixel_count })
    }

    /// Synthetic WVGA model with green cheapest and blue most expensive.
    ///
    /// Full-screen red, green and blue draw 0.45 W, 0.35 W and 0.60 W above a
    /// 0.25 W black-screen baseline. These are made-up demo numbers, not a
    /// measurement of any device.
    pub fn demo() -> Self {
        let n = 800 * 480;
        let per = |w: f64| w / n as f64;
        Self {
            pixel: PixelPowerModel { a: per(0.45), b: per(0.35), c: per(0.60) },
            p_black: 0.25,
            pixel_count: n,
        }
    }

    /// System power with every pixel showing `c`.
    pub fn solid_power(&self, c: Srgb) -> f64 {
        self.p_black + self.pixel_count as f64 * self.pixel.power_srgb(c)
    }

    pub fn frame_power(&self, f: &Frame) -> f64 {
        frame_power(self, f)
    }

    pub fn to_text(&self) -> String {
        format!(
            "a = {}\nb = {}\nc = {}\np_black = {}\npixel_count = {}\n",
            self.pixel.a, self.pixel.b, self.pixel.c, self.p_black, self.pixel_count
        )
    }

    /// Parse `key = value` lines (`key value` also accepted, `#` comments).
    pub fn parse(text: &str) -> Result<Self, ModelError> {
        let mut vals: [Option<f64>; 4] = [None; 4];
        let mut count = None;
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| ModelError::Parse { line: idx + 1, msg };
            let (key, value) = line
                .split_once('=')
                .or_else(|| line.split_once(char::is_whitespace))
                .ok_or_else(|| err(format!("expected `key = value`, got `{line}`")))?;
            let (key, value) = (key.trim(), value.trim());
            let slot = match key {
                "a" => 0,
                "b" => 1,
                "c" => 2,
                "p_black" => 3,
                "pixel_count" => {
                    count = Some(value.parse::<u64>().map_err(|_| err(format!("bad pixel_count `{value}`")))?);
                    continue;
                }
                other => return Err(err(format!("unknown key `{other}`"))),
            };
            let v: f64 = value.parse().map_err(|_| err(format!("bad number `{value}`")))?;
            vals[slot] = Some(v);
        }
        let get = |i: usize, name| vals[i].ok_or(ModelError::Missing(name));
        let pixel = PixelPowerModel::new(get(0, "a")?, get(1, "b")?, get(2, "c")?)?;
        Self::new(pixel, get(3, "p_black")?, count.ok_or(ModelError::Missing("pixel_count"))?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ModelLoadError> {
        let text = fs::read_to_string(path)?;
        Ok(Self::parse(&text)?)
    }
}

impl fmt::Display for SystemPowerModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = self.pixel_count as f64;
        write!(
            f,
            "R {:.4} W, G {:.4} W, B {:.4} W full screen; black {:.4} W; {} pixels",
            self.pixel.a * n,
            self.pixel.b * n,
            self.pixel.c * n,
            self.p_black,
            self.pixel_count
        )
    }
}


/// System power of a frame: baseline plus the exact-histogram region power.
///
/// Colors are summed in a fixed order so equal frames give equal bits.
pub fn frame_power(m: &SystemPowerModel, f: &Frame) -> f64 {
    let mut h: Vec<(Srgb, u64)> = histogram(f).into_iter().collect();
    h.sort_unstable_by_key(|&(c, _)| c.channels());
    m.p_black + region_power(&m.pixel, h.into_iter().map(|(c, n)| (c, n as f64)))
}

/// Stand-in for a smart-battery interface driven by a hidden ground truth.
///
/// Each reading is the truth times `1 + σ·N(0,1)` and advances a simulated
/// clock by `reading_period`.
#[derive(Debug, Clone)]
pub struct DeviceSimulator {
    truth: SystemPowerModel,
    noise_sigma: f64,
    reading_period: f64,
    rng: ChaCha8Rng,
    clock: f64,
    readings: u64,
}

impl DeviceSimulator {
    /// Reading period of the reference hardware, in seconds.
    pub const DEFAULT_PERIOD: f64 = 56.0;

    pub fn new(truth: SystemPowerModel, noise_sigma: f64, reading_period: f64, seed: u64) -> Result<Self, CalibrationError> {
        if !(noise_sigma >= 0.0 && noise_sigma.is_finite()) {
            return Err(CalibrationError::Simulator(format!("noise_sigma {noise_sigma} must be >= 0")));
        }
        if !(reading_period > 0.0 && reading_period.is_finite()) {
            return Err(CalibrationError::Simulator(format!("reading_period {reading_period} must be > 0")));
        }
        Ok(Self {
            truth,
            noise_sigma,
            reading_period,
            rng: ChaCha8Rng::seed_from_u64(seed),
            clock: 0.0,
            readings: 0,
        })
    }

    pub fn truth(&self) -> &SystemPowerModel {
        &self.truth
    }

    /// Simulated seconds spent taking readings so far.
    pub fn elapsed(&self) -> f64 {
        self.clock
    }

    pub fn readings(&self) -> u64 {
        self.readings
    }

    pub fn read_solid(&mut self, solid: Srgb) -> f64 {
        let z: f64 = StandardNormal.sample(&mut self.rng);
        self.clock += self.reading_period;
        self.readings += 1;
        (self.truth.solid_power(solid) * (1.0 + self.noise_sigma * z)).max(0.0)
    }

    /// Noiseless system power for an arbitrary frame.
    pub fn true_frame_power(&self, f: &Frame) -> f64 {
        frame_power(&self.truth, f)
    }
}

pub fn simulate_reading(d: &mut DeviceSimulator, solid: Srgb) -> f64 {
    d.read_solid(solid)
}

/// Solid benchmark colors: `levels - 1` nonzero evenly spaced codes on each
/// primary alone, black, and optionally a gray ramp at the same codes.
pub fn benchmark_colors(levels_per_channel: u32, gray_ramp: bool) -> Vec<Srgb> {
    let mut out = vec![Srgb::BLACK];
    if levels_per_channel < 2 {
        return out;
    }
    let steps = levels_per_channel - 1;
    let codes: Vec<u8> = (1..=steps)
        .map(|k| (255.0 * f64::from(k) / f64::from(steps)).round() as u8)
        .collect();
    for ch in 0..3 {
        for &v in &codes {
            let mut c = [0u8; 3];
            c[ch] = v;
            out.push(Srgb::from_channels(c));
        }
    }
    if gray_ramp {
        out.extend(codes.iter().map(|&v| Srgb::new(v, v, v)));
    }
    out
}

#[derive(Debug, Clone)]
pub struct Calibration {
    pub model: SystemPowerModel,
    pub r_squared: f64,
    /// Benchmark colors and their readings, in display order.
    pub samples: Vec<(Srgb, f64)>,
}

#[derive(Debug, Clone, Copy)]
pub struct CalibrationOptions {
    pub levels_per_channel: u32,
    pub gray_ramp: bool,
}

impl Default for CalibrationOptions {
    fn default() -> Self {
        Self { levels_per_channel: 16, gray_ramp: false }
    }
}

pub fn calibrate(d: &mut DeviceSimulator, levels_per_channel: u32) -> Result<Calibration, CalibrationError> {
    calibrate_with(d, CalibrationOptions { levels_per_channel, ..Default::default() })
}

/// Show each benchmark color, read the battery, and fit
/// `P = p_black + n·(aR + bG + cB)` by ordinary least squares.
pub fn calibrate_with(d: &mut DeviceSimulator, opts: CalibrationOptions) -> Result<Calibration, CalibrationError> {
    let colors = benchmark_colors(opts.levels_per_channel, opts.gray_ramp);
    let samples: Vec<(Srgb, f64)> = colors.iter().map(|&c| (c, d.read_solid(c))).collect();
    let n = d.truth().pixel_count;
    let fit = fit_linear(&samples, n)?;
    Ok(Calibration { model: fit.0, r_squared: fit.1, samples })
}

/// OLS fit of system readings; returns the model and R².
pub fn fit_linear(samples: &[(Srgb, f64)], pixel_count: u64) -> Result<(SystemPowerModel, f64), CalibrationError> {
    let rows = samples.len();
    let n = pixel_count as f64;
    let x = DMatrix::from_fn(rows, 4, |i, j| {
        let lin = samples[i].0.to_linear();
        match j {
            0 => 1.0,
            1 => n * lin.r,
            2 => n * lin.g,
            _ => n * lin.b,
        }
    });
    let y = DVector::from_iterator(rows, samples.iter().map(|s| s.1));

    // Column scaling keeps the rank test meaningful when n·a is tiny or huge.
    let scale: Vec<f64> = (0..4)
        .map(|j| x.column(j).amax())
        .map(|s| if s > 0.0 { s } else { 1.0 })
        .collect();
    let xs = DMatrix::from_fn(rows, 4, |i, j| x[(i, j)] / scale[j]);
    let svd = xs.svd(true, true);
    let rank = svd.rank(1e-10 * svd.singular_values.max());
    if rank < 4 {
        return Err(CalibrationError::Underdetermined { points: rows, rank });
    }
    let beta = svd
        .solve(&y, 1e-14)
        .map_err(|e| CalibrationError::Simulator(e.to_string()))?;
    let coef: Vec<f64> = (0..4).map(|j| beta[j] / scale[j]).collect();

    let fitted = &x * DVector::from_column_slice(&coef);
    let mean = y.mean();
    let ss_res: f64 = (&y - &fitted).iter().map(|r| r * r).sum();
    let ss_tot: f64 = y.iter().map(|v| (v - mean) * (v - mean)).sum();
    let r_squared = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };

    let pixel = PixelPowerModel::new(coef[1], coef[2], coef[3])?;
    // Noise can push a tiny intercept just below zero.
    let p_black = if coef[0] < 0.0 && coef[0] > -1e-12 { 0.0 } else { coef[0] };
    let model = SystemPowerModel::new(pixel, p_black, pixel_count)?;
    Ok((model, r_squared))
}
