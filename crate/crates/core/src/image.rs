//! Packed binary images and their PBM/PGM serializations.
//!
//! Pixels are stored row-major in 64-bit words with no per-row padding, so the
//! bit index of pixel `(x, y)` is `y * width + x`. All bitwise helpers keep
//! the invariant that bits past `width * height` stay zero, which lets
//! population counts run straight over the words.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BinaryImage {
    width: u32,
    height: u32,
    words: Vec<u64>,
}

impl BinaryImage {
    pub fn new(width: u32, height: u32) -> Self {
        let bits = width as usize * height as usize;
        BinaryImage { width, height, words: vec![0; bits.div_ceil(64)] }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn len_bits(&self) -> usize {
        self.width as usize * self.height as usize
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn same_dims(&self, other: &Self) -> bool {
        self.width == other.width && self.height == other.height
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> bool {
        debug_assert!(x < self.width && y < self.height);
        let idx = y as usize * self.width as usize + x as usize;
        self.words[idx / 64] >> (idx % 64) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, value: bool) {
        debug_assert!(x < self.width && y < self.height);
        let idx = y as usize * self.width as usize + x as usize;
        if value {
            self.words[idx / 64] |= 1 << (idx % 64);
        } else {
            self.words[idx / 64] &= !(1 << (idx % 64));
        }
    }

    pub fn count_ones(&self) -> u64 {
        self.words.iter().map(|w| w.count_ones() as u64).sum()
    }

    /// Sets every bit in the flattened index range `[lo, hi)`.
    pub fn set_bit_range(&mut self, lo: usize, hi: usize) {
        debug_assert!(lo <= hi && hi <= self.len_bits());
        if lo >= hi {
            return;
        }
        let (first_word, first_bit) = (lo / 64, lo % 64);
        let (last_word, last_bit) = ((hi - 1) / 64, (hi - 1) % 64);
        if first_word == last_word {
            let mask = (u64::MAX << first_bit) & (u64::MAX >> (63 - last_bit));
            self.words[first_word] |= mask;
            return;
        }
        self.words[first_word] |= u64::MAX << first_bit;
        for w in &mut self.words[first_word + 1..last_word] {
            *w = u64::MAX;
        }
        self.words[last_word] |= u64::MAX >> (63 - last_bit);
    }

    /// Number of pixels set in exactly one of the two images.
    pub fn hamming(&self, other: &Self) -> Result<u64> {
        self.check_dims(other)?;
        Ok(self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a ^ b).count_ones() as u64)
            .sum())
    }

    /// Number of pixels set in both images.
    pub fn and_count(&self, other: &Self) -> Result<u64> {
        self.check_dims(other)?;
        Ok(self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones() as u64)
            .sum())
    }

    pub fn or_assign(&mut self, other: &Self) -> Result<()> {
        self.check_dims(other)?;
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= b;
        }
        Ok(())
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|w| *w == 0)
    }

    /// Flattened indices of set pixels, ascending.
    pub fn iter_set(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &word)| {
            let base = wi * 64;
            let mut w = word;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let b = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(base + b)
            })
        })
    }

    fn check_dims(&self, other: &Self) -> Result<()> {
        if !self.same_dims(other) {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} vs {}x{}",
                self.width, self.height, other.width, other.height
            )));
        }
        Ok(())
    }

    /// Pixels that are set and have at least one unset 4-neighbour (or lie on
    /// the canvas border). Used for drawing path overlays.
    pub fn outline(&self) -> BinaryImage {
        let mut out = BinaryImage::new(self.width, self.height);
        for y in 0..self.height {
            for x in 0..self.width {
                if !self.get(x, y) {
                    continue;
                }
                let boundary = x == 0
                    || y == 0
                    || x + 1 == self.width
                    || y + 1 == self.height
                    || !self.get(x - 1, y)
                    || !self.get(x + 1, y)
                    || !self.get(x, y - 1)
                    || !self.get(x, y + 1);
                if boundary {
                    out.set(x, y, true);
                }
            }
        }
        out
    }

    /// Serializes as binary PBM (`P4`): rows packed MSB-first, padded to whole
    /// bytes.
    pub fn to_pbm(&self) -> Vec<u8> {
        let mut out = format!("P4\n{} {}\n", self.width, self.height).into_bytes();
        let row_bytes = (self.width as usize).div_ceil(8);
        for y in 0..self.height {
            let mut row = vec![0u8; row_bytes];
            for x in 0..self.width {
                if self.get(x, y) {
                    row[x as usize / 8] |= 0x80 >> (x % 8);
                }
            }
            out.extend_from_slice(&row);
        }
        out
    }

    pub fn from_pbm(data: &[u8]) -> Result<Self> {
        let (magic, rest) = next_token(data)?;
        if magic != b"P4" {
            return Err(Error::Format("expected PBM magic P4".into()));
        }
        let (w_tok, rest) = next_token(rest)?;
        let (h_tok, rest) = next_token(rest)?;
        let width: u32 = parse_dim(w_tok)?;
        let height: u32 = parse_dim(h_tok)?;
        // A single whitespace byte separates the header from the raster.
        let raster = rest
            .split_first()
            .map(|(_, r)| r)
            .ok_or_else(|| Error::Format("truncated PBM raster".into()))?;
        let row_bytes = (width as usize).div_ceil(8);
        if raster.len() < row_bytes * height as usize {
            return Err(Error::Format("truncated PBM raster".into()));
        }
        let mut img = BinaryImage::new(width, height);
        for y in 0..height {
            let row = &raster[y as usize * row_bytes..][..row_bytes];
            for x in 0..width {
                if row[x as usize / 8] & (0x80 >> (x % 8)) != 0 {
                    img.set(x, y, true);
                }
            }
        }
        Ok(img)
    }
}

fn next_token(data: &[u8]) -> Result<(&[u8], &[u8])> {
    let mut i = 0;
    while i < data.len() && data[i].is_ascii_whitespace() {
        i += 1;
    }
    let start = i;
    while i < data.len() && !data[i].is_ascii_whitespace() {
        i += 1;
    }
    if start == i {
        return Err(Error::Format("unexpected end of PBM header".into()));
    }
    Ok((&data[start..i], &data[i..]))
}

fn parse_dim(tok: &[u8]) -> Result<u32> {
    std::str::from_utf8(tok)
        .ok()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::Format("bad PBM dimension".into()))
}

/// 8-bit grayscale canvas for composite renderings (robot over obstacles,
/// path overlays). Serializes as binary PGM (`P5`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: u32,
    height: u32,
    pixels: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: u32, height: u32) -> Self {
        GrayImage { width, height, pixels: vec![0; width as usize * height as usize] }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    /// Paints `level` wherever `mask` is set, keeping the brighter value on
    /// overlap.
    pub fn stamp_max(&mut self, mask: &BinaryImage, level: u8) -> Result<()> {
        if mask.width() != self.width || mask.height() != self.height {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} vs {}x{}",
                self.width,
                self.height,
                mask.width(),
                mask.height()
            )));
        }
        for y in 0..self.height {
            for x in 0..self.width {
                if mask.get(x, y) {
                    let p = &mut self.pixels[y as usize * self.width as usize + x as usize];
                    *p = (*p).max(level);
                }
            }
        }
        Ok(())
    }

    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.pixels);
        out
    }
}
