//! Finite-field arithmetic for packet coding.
//!
//! Everything here works over a binary extension field GF(2^m) with
//! m in {4, 8, 16}. Addition is XOR; multiplication goes through
//! exponential/logarithm tables built at construction time from a
//! primitive element. Packets are vectors in GF(2^m)^(k+l): the first
//! k symbols form the header (the coding vector over the k source
//! messages) and the remaining l symbols carry payload.

use std::fmt;

use thiserror::Error;

/// Field widths supported by the laboratory.
pub const SUPPORTED_WIDTHS: [u8; 3] = [4, 8, 16];

/// Errors produced by field construction and field operations.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GfError {
    /// Requested symbol width is not one of the supported values.
    #[error("unsupported field width {0}, expected one of 4, 8, 16")]
    UnsupportedWidth(u8),
    /// The modulus polynomial does not have the requested degree.
    #[error("modulus {modulus:#x} does not have degree {degree}")]
    WrongDegree { modulus: u32, degree: u8 },
    /// The modulus polynomial has a nontrivial divisor.
    #[error("modulus {modulus:#x} is reducible (divisible by {divisor:#x})")]
    Reducible { modulus: u32, divisor: u32 },
    /// Multiplicative inverse of zero was requested.
    #[error("zero has no multiplicative inverse")]
    ZeroInverse,
    /// Two operands that must agree in shape do not.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// A single field symbol. The value must stay below 2^m for the field
/// it is used with; operations on a [`Field`] enforce this.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct FieldElem(pub u16);

impl FieldElem {
    pub const ZERO: FieldElem = FieldElem(0);
    pub const ONE: FieldElem = FieldElem(1);

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }
}

impl fmt::Display for FieldElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:x}", self.0)
    }
}

/// GF(2^m) with multiplication tables.
///
/// Construction verifies that the modulus has the right degree and is
/// irreducible (by exhaustive trial division, which is cheap for
/// m <= 16), then locates the smallest primitive element and fills the
/// exp/log tables from it.
pub struct Field {
    m: u8,
    modulus: u32,
    q: u32,
    /// exp[i] = g^i for i in 0..2*(q-1); doubled so products skip a mod.
    exp: Vec<u16>,
    /// log[a] for a in 1..q; log[0] is unused.
    log: Vec<u16>,
}

impl fmt::Debug for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Field")
            .field("m", &self.m)
            .field("modulus", &format_args!("{:#x}", self.modulus))
            .finish()
    }
}

impl PartialEq for Field {
    fn eq(&self, other: &Self) -> bool {
        self.m == other.m && self.modulus == other.modulus
    }
}
impl Eq for Field {}

/// Default modulus polynomial for each supported width.
pub fn default_modulus(m: u8) -> Result<u32, GfError> {
    match m {
        4 => Ok(0x13),     // x^4 + x + 1
        8 => Ok(0x11B),    // x^8 + x^4 + x^3 + x + 1
        16 => Ok(0x1100B), // x^16 + x^12 + x^3 + x + 1
        other => Err(GfError::UnsupportedWidth(other)),
    }
}

/// Carry-less multiply of two polynomials over GF(2), reduced mod `modulus`.
fn clmul_mod(mut a: u32, mut b: u32, modulus: u32, m: u8) -> u32 {
    let mut acc = 0u32;
    while b != 0 {
        if b & 1 != 0 {
            acc ^= a;
        }
        b >>= 1;
        a <<= 1;
        if a >> m & 1 != 0 {
            a ^= modulus;
        }
    }
    acc
}

fn poly_degree(p: u32) -> i32 {
    31 - p.leading_zeros() as i32
}

/// Remainder of polynomial division over GF(2).
fn poly_rem(mut a: u32, b: u32) -> u32 {
    let db = poly_degree(b);
    while a != 0 && poly_degree(a) >= db {
        a ^= b << (poly_degree(a) - db);
    }
    a
}

impl Field {
    /// Field with the default modulus for width `m`.
    pub fn new(m: u8) -> Result<Field, GfError> {
        Field::with_modulus(m, default_modulus(m)?)
    }

    /// Field with an explicit modulus polynomial (bit i = coefficient of x^i).
    pub fn with_modulus(m: u8, modulus: u32) -> Result<Field, GfError> {
        if !SUPPORTED_WIDTHS.contains(&m) {
            return Err(GfError::UnsupportedWidth(m));
        }
        if poly_degree(modulus) != i32::from(m) {
            return Err(GfError::WrongDegree { modulus, degree: m });
        }
        // Exhaustive trial division: a reducible polynomial of degree m has a
        // divisor of degree at most m/2.
        for d in 1..=u32::from(m / 2) {
            for divisor in (1u32 << d)..(1u32 << (d + 1)) {
                if poly_rem(modulus, divisor) == 0 {
                    return Err(GfError::Reducible { modulus, divisor });
                }
            }
        }

        let q = 1u32 << m;
        // Find the smallest primitive element and build the tables from it.
        'candidate: for g in 2..q {
            let mut exp = vec![0u16; 2 * (q as usize - 1)];
            let mut log = vec![0u16; q as usize];
            let mut x = 1u32;
            let period = (q - 1) as usize;
            for (i, slot) in exp.iter_mut().enumerate().take(period) {
                *slot = x as u16;
                if x == 1 && i > 0 {
                    continue 'candidate; // order of g divides i < q-1
                }
                log[x as usize] = i as u16;
                x = clmul_mod(x, g, modulus, m);
            }
            if x != 1 {
                continue; // g^(q-1) != 1 cannot happen in a field, but be safe
            }
            exp.copy_within(..period, period);
            return Ok(Field { m, modulus, q, exp, log });
        }
        unreachable!("every finite field has a primitive element")
    }

    pub fn width(&self) -> u8 {
        self.m
    }

    pub fn modulus(&self) -> u32 {
        self.modulus
    }

    /// Number of field elements, q = 2^m.
    pub fn order(&self) -> u32 {
        self.q
    }

    /// Hex digits needed to print one symbol of this field.
    pub fn hex_width(&self) -> usize {
        usize::from(self.m) / 4
    }

    fn check(&self, a: FieldElem) -> u32 {
        let v = u32::from(a.0);
        assert!(v < self.q, "symbol {v:#x} out of range for GF(2^{})", self.m);
        v
    }

    pub fn add(&self, a: FieldElem, b: FieldElem) -> FieldElem {
        let (a, b) = (self.check(a), self.check(b));
        FieldElem((a ^ b) as u16)
    }

    /// Subtraction coincides with addition in characteristic 2.
    pub fn sub(&self, a: FieldElem, b: FieldElem) -> FieldElem {
        self.add(a, b)
    }

    pub fn mul(&self, a: FieldElem, b: FieldElem) -> FieldElem {
        let (a, b) = (self.check(a), self.check(b));
        if a == 0 || b == 0 {
            return FieldElem::ZERO;
        }
        let i = usize::from(self.log[a as usize]) + usize::from(self.log[b as usize]);
        FieldElem(self.exp[i])
    }

    pub fn inv(&self, a: FieldElem) -> Result<FieldElem, GfError> {
        let a = self.check(a);
        if a == 0 {
            return Err(GfError::ZeroInverse);
        }
        let i = (self.q - 1) as usize - usize::from(self.log[a as usize]);
        Ok(FieldElem(self.exp[i]))
    }

    pub fn div(&self, a: FieldElem, b: FieldElem) -> Result<FieldElem, GfError> {
        Ok(self.mul(a, self.inv(b)?))
    }
}

/// One coded packet: `header` is the coding vector over the k source
/// messages, `payload` the l data symbols.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PacketVector {
    pub header: Vec<FieldElem>,
    pub payload: Vec<FieldElem>,
}

impl PacketVector {
    pub fn zero(k: usize, l: usize) -> PacketVector {
        PacketVector { header: vec![FieldElem::ZERO; k], payload: vec![FieldElem::ZERO; l] }
    }

    /// The packet injected for source message `i`: unit header e_i plus the
    /// message payload.
    pub fn source(i: usize, k: usize, payload: Vec<FieldElem>) -> PacketVector {
        let mut header = vec![FieldElem::ZERO; k];
        header[i] = FieldElem::ONE;
        PacketVector { header, payload }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.header.len(), self.payload.len())
    }

    pub fn is_zero(&self) -> bool {
        self.header.iter().all(|s| s.is_zero()) && self.payload.iter().all(|s| s.is_zero())
    }

    /// In-place `self += c * other`.
    pub fn add_scaled(
        &mut self,
        field: &Field,
        c: FieldElem,
        other: &PacketVector,
    ) -> Result<(), GfError> {
        if other.header.len() != self.header.len() {
            return Err(GfError::DimensionMismatch {
                expected: self.header.len(),
                got: other.header.len(),
            });
        }
        if other.payload.len() != self.payload.len() {
            return Err(GfError::DimensionMismatch {
                expected: self.payload.len(),
                got: other.payload.len(),
            });
        }
        for (a, &b) in self.header.iter_mut().zip(&other.header) {
            *a = field.add(*a, field.mul(c, b));
        }
        for (a, &b) in self.payload.iter_mut().zip(&other.payload) {
            *a = field.add(*a, field.mul(c, b));
        }
        Ok(())
    }
}

/// Linear combination sum(coeff_i * packet_i) over the field.
///
/// An empty term list yields the zero packet of the requested shape.
pub fn linear_combination(
    field: &Field,
    terms: &[(FieldElem, &PacketVector)],
    k: usize,
    l: usize,
) -> Result<PacketVector, GfError> {
    let mut out = PacketVector::zero(k, l);
    for &(c, p) in terms {
        if p.header.len() != k {
            return Err(GfError::DimensionMismatch { expected: k, got: p.header.len() });
        }
        if p.payload.len() != l {
            return Err(GfError::DimensionMismatch { expected: l, got: p.payload.len() });
        }
        for (o, &s) in out.header.iter_mut().zip(&p.header) {
            *o = field.add(*o, field.mul(c, s));
        }
        for (o, &s) in out.payload.iter_mut().zip(&p.payload) {
            *o = field.add(*o, field.mul(c, s));
        }
    }
    Ok(out)
}

/// Dense matrix of field symbols, row major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Matrix {
    rows: Vec<Vec<FieldElem>>,
    cols: usize,
}

impl Matrix {
    pub fn from_rows(rows: Vec<Vec<FieldElem>>) -> Result<Matrix, GfError> {
        let cols = rows.first().map_or(0, Vec::len);
        for r in &rows {
            if r.len() != cols {
                return Err(GfError::DimensionMismatch { expected: cols, got: r.len() });
            }
        }
        Ok(Matrix { rows, cols })
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[FieldElem] {
        &self.rows[i]
    }

    /// Rank by Gaussian elimination. Pivot selection takes the first
    /// nonzero entry in the column, lowest row index first.
    pub fn rank(&self, field: &Field) -> usize {
        let mut work = self.rows.clone();
        gaussian_rank(field, &mut work, self.cols)
    }
}

/// In-place elimination over all `cols` columns; returns the rank.
fn gaussian_rank(field: &Field, rows: &mut [Vec<FieldElem>], cols: usize) -> usize {
    let mut pivot_row = 0;
    for col in 0..cols {
        if pivot_row == rows.len() {
            break;
        }
        let Some(src) = (pivot_row..rows.len()).find(|&r| !rows[r][col].is_zero()) else {
            continue;
        };
        rows.swap(pivot_row, src);
        let inv = field.inv(rows[pivot_row][col]).expect("pivot is nonzero by selection");
        for r in 0..rows.len() {
            if r == pivot_row || rows[r][col].is_zero() {
                continue;
            }
            let factor = field.mul(rows[r][col], inv);
            let pivot = rows[pivot_row].clone();
            for c in col..cols {
                let delta = field.mul(factor, pivot[c]);
                rows[r][c] = field.add(rows[r][c], delta);
            }
        }
        pivot_row += 1;
    }
    pivot_row
}

/// Rank of the header block of a packet set.
pub fn header_rank(field: &Field, packets: &[PacketVector]) -> usize {
    let mut rows: Vec<Vec<FieldElem>> = packets.iter().map(|p| p.header.clone()).collect();
    let cols = rows.first().map_or(0, Vec::len);
    gaussian_rank(field, &mut rows, cols)
}

/// Outcome of a decode attempt.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DecodeOutcome {
    /// All k messages recovered, listed by message id.
    Decoded(Vec<Vec<FieldElem>>),
    /// Header rank is still short of k.
    NotDecodable { rank: usize },
}

/// Try to recover the k source messages from a set of coded packets.
///
/// Runs Gauss-Jordan elimination on the [header | payload] matrix. When the
/// header block reaches rank k the reduced rows read off the messages in
/// message-id order.
pub fn decode(field: &Field, packets: &[PacketVector], k: usize) -> Result<DecodeOutcome, GfError> {
    let l = packets.first().map_or(0, |p| p.payload.len());
    let mut rows: Vec<Vec<FieldElem>> = Vec::with_capacity(packets.len());
    for p in packets {
        if p.header.len() != k {
            return Err(GfError::DimensionMismatch { expected: k, got: p.header.len() });
        }
        if p.payload.len() != l {
            return Err(GfError::DimensionMismatch { expected: l, got: p.payload.len() });
        }
        let mut row = p.header.clone();
        row.extend_from_slice(&p.payload);
        rows.push(row);
    }

    // Eliminate over header columns only; payload columns follow along.
    let mut pivot_cols = Vec::new();
    let mut pivot_row = 0;
    for col in 0..k {
        if pivot_row == rows.len() {
            break;
        }
        let Some(src) = (pivot_row..rows.len()).find(|&r| !rows[r][col].is_zero()) else {
            continue;
        };
        rows.swap(pivot_row, src);
        let inv = field.inv(rows[pivot_row][col]).expect("pivot is nonzero");
        for cell in rows[pivot_row][col..].iter_mut() {
            *cell = field.mul(*cell, inv);
        }
        let pivot = rows[pivot_row].clone();
        for (r, row) in rows.iter_mut().enumerate() {
            if r == pivot_row || row[col].is_zero() {
                continue;
            }
            let factor = row[col];
            for (cell, &p) in row[col..].iter_mut().zip(&pivot[col..]) {
                *cell = field.add(*cell, field.mul(factor, p));
            }
        }
        pivot_cols.push(col);
        pivot_row += 1;
    }

    if pivot_cols.len() < k {
        return Ok(DecodeOutcome::NotDecodable { rank: pivot_cols.len() });
    }
    // Full header rank: pivot columns are exactly 0..k and row i now reads
    // e_i | message_i.
    let messages = rows[..k].iter().map(|r| r[k..].to_vec()).collect();
    Ok(DecodeOutcome::Decoded(messages))
}
