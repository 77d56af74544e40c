//! sRGB, linear RGB and CIELAB color representations.
//!
//! sRGB uses the IEC 61966-2-1 piecewise transfer curve; CIELAB is computed
//! against the D65 white of the sRGB primaries. The white point is derived
//! from the RGB→XYZ matrix itself so that linear white lands exactly on the
//! achromatic axis.

use std::sync::LazyLock;

use serde::{Deserialize, Serialize};

/// Gamma-compressed 8-bit sRGB color, as stored in web content and framebuffers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub struct Srgb {
    pub r: u8,
    pub g: u8,
    pub b: u8,
}

impl Srgb {
    pub const BLACK: Srgb = Srgb::new(0, 0, 0);
    pub const WHITE: Srgb = Srgb::new(255, 255, 255);

    pub const fn new(r: u8, g: u8, b: u8) -> Self {
        Self { r, g, b }
    }

    pub const fn channels(self) -> [u8; 3] {
        [self.r, self.g, self.b]
    }

    pub const fn from_channels(c: [u8; 3]) -> Self {
        Self::new(c[0], c[1], c[2])
    }

    pub fn to_linear(self) -> LinearRgb {
        srgb_to_linear(self)
    }

    pub fn to_lab(self) -> Lab {
        linear_to_lab(srgb_to_linear(self))
    }

    /// Euclidean distance between code-value triples.
    pub fn code_distance(self, other: Srgb) -> f64 {
        let d = |x: u8, y: u8| f64::from(x) - f64::from(y);
        let (dr, dg, db) = (d(self.r, other.r), d(self.g, other.g), d(self.b, other.b));
        (dr * dr + dg * dg + db * db).sqrt()
    }
}

/// Linear-light relative RGB intensities in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LinearRgb {
    pub r: f64,
    pub g: f64,
    pub b: f64,
}

impl LinearRgb {
    pub const fn new(r: f64, g: f64, b: f64) -> Self {
        Self { r, g, b }
    }

    pub fn to_srgb(self) -> Srgb {
        linear_to_srgb(self)
    }

    pub fn to_lab(self) -> Lab {
        linear_to_lab(self)
    }
}

/// CIELAB color (D65).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Lab {
    pub l: f64,
    pub a: f64,
    pub b: f64,
}

impl Lab {
    pub const fn new(l: f64, a: f64, b: f64) -> Self {
        Self { l, a, b }
    }

    pub fn distance(self, other: Lab) -> f64 {
        color_distance(self, other)
    }
}

/// Result of converting CIELAB back to linear RGB.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GamutMapped {
    pub rgb: LinearRgb,
    /// At least one channel fell outside `[0, 1]` and was clamped.
    pub clamped: bool,
}

// sRGB primaries, D65 (IEC 61966-2-1 / Lindbloom).
const RGB_TO_XYZ: [[f64; 3]; 3] = [
    [0.412_456_4, 0.357_576_1, 0.180_437_5],
    [0.212_672_9, 0.715_152_2, 0.072_175_0],
    [0.019_333_9, 0.119_192_0, 0.950_304_1],
];

const XYZ_TO_RGB: [[f64; 3]; 3] = invert3(RGB_TO_XYZ);

const WHITE: [f64; 3] = [
    RGB_TO_XYZ[0][0] + RGB_TO_XYZ[0][1] + RGB_TO_XYZ[0][2],
    RGB_TO_XYZ[1][0] + RGB_TO_XYZ[1][1] + RGB_TO_XYZ[1][2],
    RGB_TO_XYZ[2][0] + RGB_TO_XYZ[2][1] + RGB_TO_XYZ[2][2],
];

const LAB_EPSILON: f64 = 216.0 / 24389.0;
const LAB_KAPPA: f64 = 24389.0 / 27.0;

// Slack for floating-point noise before a channel counts as out of gamut.
const GAMUT_SLACK: f64 = 1e-9;

static DECODE_LUT: LazyLock<[f64; 256]> = LazyLock::new(|| {
    let mut lut = [0.0; 256];
    for (code, slot) in lut.iter_mut().enumerate() {
        *slot = decode_channel(code as f64 / 255.0);
    }
    lut
});

/// sRGB electro-optical transfer on a normalized channel value.
pub fn decode_channel(v: f64) -> f64 {
    if v <= 0.040_45 {
        v / 12.92
    } else {
        ((v + 0.055) / 1.055).powf(2.4)
    }
}

/// Inverse transfer: linear intensity to normalized sRGB value.
pub fn encode_channel(v: f64) -> f64 {
    if v <= 0.003_130_8 {
        v * 12.92
    } else {
        1.055 * v.powf(1.0 / 2.4) - 0.055
    }
}

/// Linear intensity of a single 8-bit code value.
#[inline]
pub fn decode_code(code: u8) -> f64 {
    DECODE_LUT[code as usize]
}

/// Round a real code value to 8 bits, ties away from zero, clamped.
#[inline]
pub fn quantize_code(v: f64) -> u8 {
    v.round().clamp(0.0, 255.0) as u8
}

pub fn srgb_to_linear(c: Srgb) -> LinearRgb {
    LinearRgb::new(decode_code(c.r), decode_code(c.g), decode_code(c.b))
}

pub fn linear_to_srgb(c: LinearRgb) -> Srgb {
    let q = |v: f64| quantize_code(encode_channel(v.clamp(0.0, 1.0)) * 255.0);
    Srgb::new(q(c.r), q(c.g), q(c.b))
}

fn lab_f(t: f64) -> f64 {
    if t > LAB_EPSILON {
        t.cbrt()
    } else {
        (LAB_KAPPA * t + 16.0) / 116.0
    }
}

fn lab_f_inv(f: f64) -> f64 {
    let t = f * f * f;
    if t > LAB_EPSILON {
        t
    } else {
        (116.0 * f - 16.0) / LAB_KAPPA
    }
}

pub fn linear_to_lab(c: LinearRgb) -> Lab {
    let rgb = [c.r, c.g, c.b];
    let xyz = mul3(&RGB_TO_XYZ, rgb);
    let fx = lab_f(xyz[0] / WHITE[0]);
    let fy = lab_f(xyz[1] / WHITE[1]);
    let fz = lab_f(xyz[2] / WHITE[2]);
    Lab::new(116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz))
}

/// Inverse of [`linear_to_lab`]; out-of-gamut channels are clamped and flagged.
pub fn lab_to_linear(c: Lab) -> GamutMapped {
    let fy = (c.l + 16.0) / 116.0;
    let fx = fy + c.a / 500.0;
    let fz = fy - c.b / 200.0;
    // L* uses the same piecewise split on lightness directly.
    let yr = if c.l > LAB_KAPPA * LAB_EPSILON {
        fy * fy * fy
    } else {
        c.l / LAB_KAPPA
    };
    let xyz = [lab_f_inv(fx) * WHITE[0], yr * WHITE[1], lab_f_inv(fz) * WHITE[2]];
    let rgb = mul3(&XYZ_TO_RGB, xyz);
    let clamped = rgb
        .iter()
        .any(|&v| !(-GAMUT_SLACK..=1.0 + GAMUT_SLACK).contains(&v) || v.is_nan());
    let fix = |v: f64| if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) };
    GamutMapped {
        rgb: LinearRgb::new(fix(rgb[0]), fix(rgb[1]), fix(rgb[2])),
        clamped,
    }
}

pub fn color_distance(x: Lab, y: Lab) -> f64 {
    let (dl, da, db) = (x.l - y.l, x.a - y.a, x.b - y.b);
    (dl * dl + da * da + db * db).sqrt()
}

fn mul3(m: &[[f64; 3]; 3], v: [f64; 3]) -> [f64; 3] {
    [
        m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
        m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
        m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
    ]
}

const fn invert3(m: [[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let c00 = m[1][1] * m[2][2] - m[1][2] * m[2][1];
    let c01 = m[1][2] * m[2][0] - m[1][0] * m[2][2];
    let c02 = m[1][0] * m[2][1] - m[1][1] * m[2][0];
    let det = m[0][0] * c00 + m[0][1] * c01 + m[0][2] * c02;
    let inv = 1.0 / det;
    [
        [
            c00 * inv,
            (m[0][2] * m[2][1] - m[0][1] * m[2][2]) * inv,
            (m[0][1] * m[1][2] - m[0][2] * m[1][1]) * inv,
        ],
        [
            c01 * inv,
            (m[0][0] * m[2][2] - m[0][2] * m[2][0]) * inv,
            (m[0][2] * m[1][0] - m[0][0] * m[1][2]) * inv,
        ],
        [
            c02 * inv,
            (m[0][1] * m[2][0] - m[0][0] * m[2][1]) * inv,
            (m[0][0] * m[1][1] - m[0][1] * m[1][0]) * inv,
        ],
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    // Direct evaluation of the power segment on 128/255.
    const MID_GRAY_LINEAR: f64 = 0.215_860_500_113_899_26;
    // 116 * 0.18^(1/3) - 16.
    const L_OF_018: f64 = 49.496_107_610_119_594;

    #[test]
    fn transfer_endpoints() {
        assert_eq!(srgb_to_linear(Srgb::BLACK), LinearRgb::new(0.0, 0.0, 0.0));
        assert_eq!(srgb_to_linear(Srgb::WHITE), LinearRgb::new(1.0, 1.0, 1.0));
        assert_eq!(linear_to_srgb(LinearRgb::new(1.0, 1.0, 1.0)), Srgb::WHITE);
        assert_eq!(linear_to_srgb(LinearRgb::new(0.0, 0.0, 0.0)), Srgb::BLACK);
    }

    #[test]
    fn mid_gray_fixture() {
        let v = srgb_to_linear(Srgb::new(128, 128, 128));
        assert!((v.r - MID_GRAY_LINEAR).abs() < 1e-15);
        assert_eq!(v.r, v.g);
        assert_eq!(v.g, v.b);
    }

    #[test]
    fn decode_is_strictly_monotone() {
        for code in 0..255u8 {
            assert!(decode_code(code) < decode_code(code + 1), "code {code}");
        }
    }

    #[test]
    fn eight_bit_round_trip_is_exhaustive() {
        for code in 0..=255u8 {
            let lin = decode_code(code);
            assert_eq!(quantize_code(encode_channel(lin) * 255.0), code);
        }
    }

    #[test]
    fn random_round_trip_1e5() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100_000 {
            let c = Srgb::new(rng.random(), rng.random(), rng.random());
            assert_eq!(linear_to_srgb(srgb_to_linear(c)), c);
        }
    }

    #[test]
    fn lab_fixtures() {
        let white = linear_to_lab(LinearRgb::new(1.0, 1.0, 1.0));
        assert!((white.l - 100.0).abs() < 1e-6);
        assert!(white.a.abs() < 1e-3 && white.b.abs() < 1e-3);
        assert_eq!(linear_to_lab(LinearRgb::default()), Lab::new(0.0, 0.0, 0.0));
        let gray = linear_to_lab(LinearRgb::new(0.18, 0.18, 0.18));
        assert!((gray.l - L_OF_018).abs() < 1e-9, "{gray:?}");
        assert!(gray.a.abs() < 1e-9 && gray.b.abs() < 1e-9);
    }

    #[test]
    fn lab_inverse_fixtures() {
        let w = lab_to_linear(Lab::new(100.0, 0.0, 0.0));
        assert!(!w.clamped);
        for v in [w.rgb.r, w.rgb.g, w.rgb.b] {
            assert!((v - 1.0).abs() < 1e-6);
        }
        let k = lab_to_linear(Lab::new(0.0, 0.0, 0.0));
        assert!(!k.clamped);
        assert_eq!(k.rgb, LinearRgb::new(0.0, 0.0, 0.0));
    }

    #[test]
    fn lab_round_trip_1e5() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100_000 {
            let c = LinearRgb::new(rng.random(), rng.random(), rng.random());
            let back = lab_to_linear(linear_to_lab(c));
            assert!(!back.clamped, "{c:?}");
            assert!((back.rgb.r - c.r).abs() < 1e-6);
            assert!((back.rgb.g - c.g).abs() < 1e-6);
            assert!((back.rgb.b - c.b).abs() < 1e-6);
        }
    }

    #[test]
    fn out_of_gamut_is_flagged() {
        // Saturated green beyond the sRGB gamut.
        let g = lab_to_linear(Lab::new(50.0, -120.0, 80.0));
        assert!(g.clamped);
        for v in [g.rgb.r, g.rgb.g, g.rgb.b] {
            assert!((0.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn distance_fixtures() {
        let x = Lab::new(50.0, 10.0, 0.0);
        assert_eq!(color_distance(x, x), 0.0);
        assert_eq!(color_distance(Lab::new(100.0, 0.0, 0.0), Lab::new(0.0, 0.0, 0.0)), 100.0);
        let d = color_distance(x, Lab::new(50.0, 0.0, 10.0));
        assert!((d - 200f64.sqrt()).abs() < 1e-12);
    }

    fn lab_strategy() -> impl Strategy<Value = Lab> {
        (0.0..100.0f64, -128.0..128.0f64, -128.0..128.0f64).prop_map(|(l, a, b)| Lab::new(l, a, b))
    }

    proptest! {
        #[test]
        fn distance_is_a_metric(x in lab_strategy(), y in lab_strategy(), z in lab_strategy()) {
            let dxy = color_distance(x, y);
            prop_assert!((dxy - color_distance(y, x)).abs() < 1e-12);
            prop_assert!(dxy >= 0.0);
            prop_assert!(color_distance(x, z) <= dxy + color_distance(y, z) + 1e-9);
        }

        #[test]
        fn lab_lightness_in_range(r in 0.0..=1.0f64, g in 0.0..=1.0f64, b in 0.0..=1.0f64) {
            let lab = linear_to_lab(LinearRgb::new(r, g, b));
            prop_assert!(lab.l >= -1e-9 && lab.l <= 100.0 + 1e-9);
        }
    }
}
