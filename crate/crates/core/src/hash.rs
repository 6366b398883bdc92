//! FNV-1a (64-bit) and the fixed byte encodings hashed by the synthetic sources.
//!
//! Integers are encoded little-endian; strings as a `u64` byte length followed by
//! their UTF-8 bytes. Nothing here depends on the host platform.

const OFFSET_BASIS: u64 = 0xcbf2_9ce4_8422_2325;
const PRIME: u64 = 0x0000_0100_0000_01b3;

#[derive(Debug, Clone, Copy)]
pub struct Fnv1a(u64);

impl Default for Fnv1a {
    fn default() -> Self {
        Self(OFFSET_BASIS)
    }
}

impl Fnv1a {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn write(&mut self, bytes: &[u8]) -> &mut Self {
        for &b in bytes {
            self.0 ^= u64::from(b);
            self.0 = self.0.wrapping_mul(PRIME);
        }
        self
    }

    pub fn write_u32(&mut self, v: u32) -> &mut Self {
        self.write(&v.to_le_bytes())
    }

    pub fn write_u64(&mut self, v: u64) -> &mut Self {
        self.write(&v.to_le_bytes())
    }

    pub fn write_str(&mut self, s: &str) -> &mut Self {
        self.write_u64(s.len() as u64);
        self.write(s.as_bytes())
    }

    pub fn finish(&self) -> u64 {
        self.0
    }
}

/// Maps a hash to a uniform value in `[-1, 1]` using its top 53 bits.
pub fn unit_interval(h: u64) -> f64 {
    let u = (h >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
    2.0 * u - 1.0
}
