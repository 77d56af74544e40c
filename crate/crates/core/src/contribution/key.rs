//! 24-bit color keys.
//!
//! Each channel is bit-reversed, then the three are interleaved starting from
//! the most significant key bit in R, G, B order. Low-order channel bits end
//! up in the high key bits, so colors that differ only slightly still land far
//! apart in a hash table.

use crate::colorspace::Srgb;

#[inline]
fn spread(v: u8) -> u32 {
    // Place bit i of v at bit 3i.
    let mut x = u32::from(v);
    x = (x | (x << 8)) & 0x0000_F00F;
    x = (x | (x << 4)) & 0x000C_30C3;
    x = (x | (x << 2)) & 0x0024_9249;
    x
}

#[inline]
fn gather(x: u32) -> u8 {
    let mut x = x & 0x0024_9249;
    x = (x | (x >> 2)) & 0x000C_30C3;
    x = (x | (x >> 4)) & 0x0000_F00F;
    x = (x | (x >> 8)) & 0x0000_00FF;
    x as u8
}

/// Key bit `23 − 3i` holds reversed-R bit `7 − i`; G and B follow one and
/// two bits lower.
#[inline]
pub fn color_key(c: Srgb) -> u32 {
    let r = spread(c.r.reverse_bits());
    let g = spread(c.g.reverse_bits());
    let b = spread(c.b.reverse_bits());
    (r << 2) | (g << 1) | b
}

#[inline]
pub fn key_color(key: u32) -> Srgb {
    Srgb::new(
        gather(key >> 2).reverse_bits(),
        gather(key >> 1).reverse_bits(),
        gather(key).reverse_bits(),
    )
}

/// Small-table bucket: top two bits of each channel, R then G then B.
#[inline]
pub fn bucket_of(c: Srgb) -> usize {
    usize::from(c.r >> 6) << 4 | usize::from(c.g >> 6) << 2 | usize::from(c.b >> 6)
}
