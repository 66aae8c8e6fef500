//! Interval run-length encoding of binary images.
//!
//! A mask over a `width x height` canvas is flattened row-major and stored as
//! the sorted list of half-open index intervals `[lb, ub)` covering its set
//! pixels. Overlap tests and overlap counts then run as a single
//! merge-style sweep over the two interval lists, so their cost depends on
//! the number of runs rather than on the canvas area.

use crate::error::{Error, Result};
use crate::image::BinaryImage;

/// Normal form: intervals are non-empty, strictly increasing, pairwise
/// disjoint, with adjacent runs merged (`next.lb > prev.ub`) and
/// `ub <= width * height`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntervalRle {
    width: u32,
    height: u32,
    intervals: Vec<(u32, u32)>,
}

impl IntervalRle {
    /// Builds from an interval list that must already be in normal form.
    pub fn from_intervals(width: u32, height: u32, intervals: Vec<(u32, u32)>) -> Result<Self> {
        let rle = IntervalRle { width, height, intervals };
        rle.validate()?;
        Ok(rle)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn intervals(&self) -> &[(u32, u32)] {
        &self.intervals
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    /// Total number of set pixels.
    pub fn popcount(&self) -> u64 {
        self.intervals.iter().map(|&(lb, ub)| (ub - lb) as u64).sum()
    }

    fn validate(&self) -> Result<()> {
        let total = self.width as u64 * self.height as u64;
        let mut prev_ub: Option<u32> = None;
        for &(lb, ub) in &self.intervals {
            if lb >= ub {
                return Err(Error::Format(format!("empty or reversed interval [{lb}, {ub})")));
            }
            if ub as u64 > total {
                return Err(Error::Format(format!(
                    "interval [{lb}, {ub}) exceeds canvas of {total} pixels"
                )));
            }
            if let Some(p) = prev_ub {
                if lb <= p {
                    return Err(Error::Format(format!(
                        "intervals not strictly separated at [{lb}, {ub}) after ub {p}"
                    )));
                }
            }
            prev_ub = Some(ub);
        }
        Ok(())
    }

    /// Encodes a binary image. The result is always in normal form.
    pub fn encode(img: &BinaryImage) -> Self {
        let total = img.len_bits();
        let mut intervals = Vec::new();
        let mut run_start: Option<usize> = None;
        for (wi, &word) in img.words().iter().enumerate() {
            let base = wi * 64;
            if word == 0 {
                if let Some(s) = run_start.take() {
                    intervals.push((s as u32, base as u32));
                }
                continue;
            }
            if word == u64::MAX {
                if run_start.is_none() {
                    run_start = Some(base);
                }
                continue;
            }
            for b in 0..64 {
                let idx = base + b;
                if idx >= total {
                    break;
                }
                let bit = word >> b & 1 == 1;
                match (bit, run_start) {
                    (true, None) => run_start = Some(idx),
                    (false, Some(s)) => {
                        intervals.push((s as u32, idx as u32));
                        run_start = None;
                    }
                    _ => {}
                }
            }
        }
        if let Some(s) = run_start {
            intervals.push((s as u32, total as u32));
        }
        IntervalRle { width: img.width(), height: img.height(), intervals }
    }

    /// Reconstructs the binary image. `decode(encode(x)) == x`.
    pub fn decode(&self) -> BinaryImage {
        let mut img = BinaryImage::new(self.width, self.height);
        for &(lb, ub) in &self.intervals {
            img.set_bit_range(lb as usize, ub as usize);
        }
        img
    }

    fn check_dims(&self, other: &Self) -> Result<()> {
        if self.width != other.width || self.height != other.height {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} vs {}x{}",
                self.width, self.height, other.width, other.height
            )));
        }
        Ok(())
    }

    /// True when some pixel is set in both encodings. Runs a two-pointer
    /// sweep that stops at the first overlapping pair.
    pub fn collide(&self, other: &Self) -> Result<bool> {
        Ok(self.collide_counted(other)?.0)
    }

    /// [`collide`](Self::collide) with an iteration counter. Each sweep step
    /// retires one interval (or returns), so the count never exceeds the sum
    /// of the two run counts.
    pub fn collide_counted(&self, other: &Self) -> Result<(bool, u64)> {
        self.check_dims(other)?;
        let (a, b) = (&self.intervals, &other.intervals);
        let (mut i, mut j) = (0usize, 0usize);
        let mut steps = 0u64;
        while i < a.len() && j < b.len() {
            steps += 1;
            let (al, au) = a[i];
            let (bl, bu) = b[j];
            if au.min(bu) > al.max(bl) {
                return Ok((true, steps));
            }
            if au <= bu {
                i += 1;
            } else {
                j += 1;
            }
        }
        Ok((false, steps))
    }

    /// Number of pixels set in both encodings; exactly the population count
    /// of the pixelwise AND. Zero if and only if the masks do not collide.
    pub fn penetration(&self, other: &Self) -> Result<u64> {
        self.check_dims(other)?;
        let (a, b) = (&self.intervals, &other.intervals);
        let (mut i, mut j) = (0usize, 0usize);
        let mut total = 0u64;
        while i < a.len() && j < b.len() {
            let (al, au) = a[i];
            let (bl, bu) = b[j];
            let lo = al.max(bl);
            let hi = au.min(bu);
            if hi > lo {
                total += (hi - lo) as u64;
            }
            if au <= bu {
                i += 1;
            } else {
                j += 1;
            }
        }
        Ok(total)
    }

    /// Text form `width height; lb0 ub0 lb1 ub1 ...`.
    pub fn to_text(&self) -> String {
        let mut s = format!("{} {};", self.width, self.height);
        for &(lb, ub) in &self.intervals {
            s.push_str(&format!(" {lb} {ub}"));
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let (head, tail) = text
            .split_once(';')
            .ok_or_else(|| Error::Format("missing ';' in RLE text".into()))?;
        let dims: Vec<u32> = head
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| Error::Format(format!("bad RLE dimension '{t}'"))))
            .collect::<Result<_>>()?;
        if dims.len() != 2 {
            return Err(Error::Format("RLE header must be 'width height'".into()));
        }
        let bounds: Vec<u32> = tail
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| Error::Format(format!("bad RLE bound '{t}'"))))
            .collect::<Result<_>>()?;
        if bounds.len() % 2 != 0 {
            return Err(Error::Format("odd number of RLE interval bounds".into()));
        }
        let intervals = bounds.chunks_exact(2).map(|c| (c[0], c[1])).collect();
        Self::from_intervals(dims[0], dims[1], intervals)
    }

    /// Compact binary form: little-endian u32 sequence
    /// `width, height, run_count, lb0, ub0, ...`.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(12 + self.intervals.len() * 8);
        out.extend_from_slice(&self.width.to_le_bytes());
        out.extend_from_slice(&self.height.to_le_bytes());
        out.extend_from_slice(&(self.intervals.len() as u32).to_le_bytes());
        for &(lb, ub) in &self.intervals {
            out.extend_from_slice(&lb.to_le_bytes());
            out.extend_from_slice(&ub.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(data: &[u8]) -> Result<Self> {
        if data.len() < 12 || data.len() % 4 != 0 {
            return Err(Error::Format("RLE binary payload truncated".into()));
        }
        let word = |i: usize| u32::from_le_bytes(data[i * 4..i * 4 + 4].try_into().unwrap());
        let (width, height, count) = (word(0), word(1), word(2) as usize);
        if data.len() != 12 + count * 8 {
            return Err(Error::Format("RLE binary length disagrees with run count".into()));
        }
        let intervals = (0..count).map(|k| (word(3 + 2 * k), word(4 + 2 * k))).collect();
        Self::from_intervals(width, height, intervals)
    }
}

/// Alternating run lengths of a bit sequence, zeros first. The leading count
/// is 0 when the sequence starts with a set bit; all later runs are positive.
pub fn run_lengths(bits: impl IntoIterator<Item = bool>) -> Vec<u64> {
    let mut runs = Vec::new();
    let mut current = false;
    let mut len = 0u64;
    for bit in bits {
        if bit == current {
            len += 1;
        } else {
            runs.push(len);
            current = bit;
            len = 1;
        }
    }
    if len > 0 {
        runs.push(len);
    }
    runs
}

/// Per-row alternating run lengths (zeros first within each row),
/// concatenated in row order.
pub fn row_run_lengths(img: &BinaryImage) -> Vec<u64> {
    let mut runs = Vec::new();
    for y in 0..img.height() {
        runs.extend(run_lengths((0..img.width()).map(|x| img.get(x, y))));
    }
    runs
}
