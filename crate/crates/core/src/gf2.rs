//! Bit-label arithmetic over GF(2)^k and explicit binary matrices.
//!
//! Bit `l = 1` is the most significant bit of a label. A label of width
//! `k` with value `v` therefore has `bit(1) = v >> (k - 1) & 1` and
//! `bit(k) = v & 1`.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{usage, Error, Result};

/// Widest label supported.
pub const MAX_WIDTH: u8 = 16;

/// A fixed-width vector over GF(2), stored as the integer it encodes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct BitLabel {
    value: u32,
    width: u8,
}

impl BitLabel {
    pub fn new(value: u32, width: u8) -> Result<Self> {
        if width == 0 || width > MAX_WIDTH {
            return Err(usage(format!("label width {width} outside 1..={MAX_WIDTH}")));
        }
        if value >> width != 0 {
            return Err(usage(format!("value {value} does not fit in {width} bits")));
        }
        Ok(Self { value, width })
    }

    pub fn zero(width: u8) -> Self {
        Self::new(0, width).expect("valid width")
    }

    /// Builds a label from bits listed most significant first.
    pub fn from_bits(bits: &[bool]) -> Result<Self> {
        let width = u8::try_from(bits.len()).map_err(|_| usage("too many bits"))?;
        let value = bits.iter().fold(0u32, |acc, &b| (acc << 1) | u32::from(b));
        Self::new(value, width)
    }

    pub fn value(self) -> u32 {
        self.value
    }

    pub fn width(self) -> u8 {
        self.width
    }

    /// Bit `l` (1-based, `l = 1` is the MSB).
    pub fn bit(self, l: usize) -> bool {
        assert!(l >= 1 && l <= self.width as usize, "bit index {l} out of range");
        (self.value >> (self.width as usize - l)) & 1 == 1
    }

    /// Bits, most significant first.
    pub fn bits(self) -> Vec<bool> {
        (1..=self.width as usize).map(|l| self.bit(l)).collect()
    }

    pub fn weight(self) -> u32 {
        self.value.count_ones()
    }
}

impl fmt::Display for BitLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:0width$b}", self.value, width = self.width as usize)
    }
}

impl FromStr for BitLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bits = s
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(usage(format!("invalid bit character {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_bits(&bits)
    }
}

/// Addition over GF(2)^k, i.e. bitwise exclusive-or.
pub fn xor_add(a: BitLabel, b: BitLabel) -> Result<BitLabel> {
    if a.width != b.width {
        return Err(usage(format!(
            "cannot add labels of widths {} and {}",
            a.width, b.width
        )));
    }
    Ok(BitLabel {
        value: a.value ^ b.value,
        width: a.width,
    })
}

/// A `rows x cols` matrix over GF(2).
///
/// Each row is kept as a bit mask laid out like a label of width `cols`,
/// so column 1 is the most significant bit of the mask.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BinaryMatrix {
    rows: Vec<u32>,
    cols: u8,
}

impl BinaryMatrix {
    pub fn zeros(rows: usize, cols: u8) -> Result<Self> {
        Self::from_row_masks(vec![0; rows], cols)
    }

    pub fn identity(n: u8) -> Result<Self> {
        let masks = (0..n as usize).map(|r| 1u32 << (n as usize - 1 - r)).collect();
        Self::from_row_masks(masks, n)
    }

    pub fn from_row_masks(rows: Vec<u32>, cols: u8) -> Result<Self> {
        if cols == 0 || cols > MAX_WIDTH {
            return Err(usage(format!("matrix column count {cols} outside 1..={MAX_WIDTH}")));
        }
        if rows.is_empty() || rows.len() > MAX_WIDTH as usize {
            return Err(usage(format!(
                "matrix row count {} outside 1..={MAX_WIDTH}",
                rows.len()
            )));
        }
        if let Some(bad) = rows.iter().find(|&&r| r >> cols != 0) {
            return Err(usage(format!("row mask {bad:#b} wider than {cols} columns")));
        }
        Ok(Self { rows, cols })
    }

    pub fn from_rows(rows: &[Vec<bool>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(usage("ragged matrix rows"));
        }
        let masks = rows
            .iter()
            .map(|r| r.iter().fold(0u32, |acc, &b| (acc << 1) | u32::from(b)))
            .collect();
        Self::from_row_masks(masks, u8::try_from(cols).map_err(|_| usage("too many columns"))?)
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.cols as usize
    }

    pub fn row_masks(&self) -> &[u32] {
        &self.rows
    }

    /// Entry at 1-based `(row, col)`.
    pub fn get(&self, row: usize, col: usize) -> bool {
        assert!(row >= 1 && row <= self.rows.len(), "row {row} out of range");
        assert!(col >= 1 && col <= self.n_cols(), "col {col} out of range");
        (self.rows[row - 1] >> (self.n_cols() - col)) & 1 == 1
    }

    /// Matrix-vector product on raw values; `t` must fit in `cols` bits.
    #[inline]
    pub fn apply_raw(&self, t: u32) -> u32 {
        let w = self.rows.len();
        self.rows.iter().enumerate().fold(0, |acc, (r, &mask)| {
            acc | (((mask & t).count_ones() & 1) << (w - 1 - r))
        })
    }

    /// Image of every input `t` in `0..2^cols`.
    pub fn image_table(&self) -> Vec<u16> {
        (0..1u32 << self.cols)
            .map(|t| self.apply_raw(t) as u16)
            .collect()
    }

    /// Row rank over GF(2).
    pub fn rank(&self) -> usize {
        let mut rows = self.rows.clone();
        let mut rank = 0;
        for bit in (0..self.cols).rev() {
            let pivot = 1u32 << bit;
            let Some(p) = (rank..rows.len()).find(|&i| rows[i] & pivot != 0) else {
                continue;
            };
            rows.swap(rank, p);
            let pr = rows[rank];
            for (i, r) in rows.iter_mut().enumerate() {
                if i != rank && *r & pivot != 0 {
                    *r ^= pr;
                }
            }
            rank += 1;
        }
        rank
    }

    /// Uniform draw from all `rows x cols` matrices of full row rank.
    pub fn random_full_row_rank<R: Rng + ?Sized>(rows: usize, cols: u8, rng: &mut R) -> Result<Self> {
        if rows > cols as usize {
            return Err(usage(format!(
                "a {rows}x{cols} matrix cannot have full row rank"
            )));
        }
        loop {
            let masks = (0..rows)
                .map(|_| rng.random_range(0..1u32 << cols))
                .collect();
            let m = Self::from_row_masks(masks, cols)?;
            if m.rank() == rows {
                return Ok(m);
            }
        }
    }
}

impl fmt::Display for BinaryMatrix {
    /// Rows as bit strings joined by `/`, e.g. `101/011`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, r) in self.rows.iter().enumerate() {
            if i > 0 {
                f.write_str("/")?;
            }
            write!(f, "{:0width$b}", r, width = self.cols as usize)?;
        }
        Ok(())
    }
}

impl FromStr for BinaryMatrix {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let rows = s
            .split('/')
            .map(|r| r.parse::<BitLabel>().map(BitLabel::bits))
            .collect::<Result<Vec<_>>>()?;
        Self::from_rows(&rows)
    }
}

/// Matrix-vector product over GF(2).
pub fn binmat_apply(h: &BinaryMatrix, t: BitLabel) -> Result<BitLabel> {
    if t.width() as usize != h.n_cols() {
        return Err(usage(format!(
            "label width {} does not match matrix with {} columns",
            t.width(),
            h.n_cols()
        )));
    }
    BitLabel::new(h.apply_raw(t.value()), h.n_rows() as u8)
}
