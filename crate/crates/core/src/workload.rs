//! GEMM problem instances, exact-integer matrices, the reference product and
//! the outer-product (rank-b update) schedule every simulator consumes.
//!
//! Operands are signed 8-bit values stored as `i64`; all accumulation is
//! exact `i64` arithmetic.
//!
//! Operand generation uses ChaCha8 seeded through
//! [`SeedableRng::seed_from_u64`]. Each element is the top byte of one
//! `next_u32` draw reinterpreted as `i8`, which is uniform over
//! `[-128, 127]`. `A` is filled first in row-major order, then `B`. Changing
//! any of this changes every recorded trace.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::{Error, Result};

pub const OPERAND_MIN: i64 = i8::MIN as i64;
pub const OPERAND_MAX: i64 = i8::MAX as i64;

/// Dimensions of `C (m x n) = A (m x k) * B (k x n)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GemmShape {
    m: usize,
    n: usize,
    k: usize,
}

impl GemmShape {
    pub fn new(m: usize, n: usize, k: usize) -> Result<Self> {
        for (name, value) in [("m", m), ("n", n), ("k", k)] {
            if value == 0 {
                return Err(Error::InvalidParameter { name, value: 0, expected: ">= 1" });
            }
        }
        Ok(GemmShape { m, n, k })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Multiply-accumulates in the full product: `m * n * k`.
    pub fn macs(&self) -> u64 {
        (self.m * self.n * self.k) as u64
    }
}

impl fmt::Display for GemmShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}x{}", self.m, self.n, self.k)
    }
}

/// Dense row-major matrix of exact integers.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<i64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<i64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidParameter {
                name: if rows == 0 { "rows" } else { "cols" },
                value: 0,
                expected: ">= 1",
            });
        }
        if data.len() != rows * cols {
            return Err(Error::ElementCount { expected: rows * cols, actual: data.len() });
        }
        Ok(Matrix { rows, cols, data })
    }

    /// Builds a matrix from nested rows. Panics on ragged or empty input,
    /// so it is meant for literals in tests and examples.
    pub fn from_rows<R: AsRef<[i64]>>(rows: &[R]) -> Self {
        let cols = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for row in rows {
            assert_eq!(row.as_ref().len(), cols, "ragged rows");
            data.extend_from_slice(row.as_ref());
        }
        Matrix::new(rows.len(), cols, data).expect("non-empty rectangular literal")
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0);
        Matrix { rows, cols, data: vec![0; rows * cols] }
    }

    pub fn identity(size: usize) -> Self {
        let mut m = Matrix::zeros(size, size);
        for i in 0..size {
            m.set(i, i, 1);
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[i64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> i64 {
        self.data[row * self.cols + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: i64) {
        self.data[row * self.cols + col] = value;
    }

    #[inline]
    pub(crate) fn add_at(&mut self, row: usize, col: usize, value: i64) {
        self.data[row * self.cols + col] += value;
    }

    pub fn row(&self, row: usize) -> &[i64] {
        &self.data[row * self.cols..(row + 1) * self.cols]
    }

    pub fn column(&self, col: usize) -> Vec<i64> {
        (0..self.rows).map(|r| self.get(r, col)).collect()
    }

    /// Copy of the sub-block `[row0, row0 + rows) x [col0, col0 + cols)`.
    pub fn block(&self, row0: usize, col0: usize, rows: usize, cols: usize) -> Matrix {
        assert!(row0 + rows <= self.rows && col0 + cols <= self.cols);
        let mut data = Vec::with_capacity(rows * cols);
        for r in row0..row0 + rows {
            data.extend_from_slice(&self.data[r * self.cols + col0..r * self.cols + col0 + cols]);
        }
        Matrix { rows, cols, data }
    }

    /// Element-wise sum; both operands must have the same shape.
    pub fn try_add(&self, other: &Matrix) -> Result<Matrix> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch {
                op: "add",
                left: (self.rows, self.cols),
                right: (other.rows, other.cols),
            });
        }
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Ok(Matrix { rows: self.rows, cols: self.cols, data })
    }

    /// Rejects elements outside the signed 8-bit operand range.
    pub fn check_operand_range(&self) -> Result<()> {
        check_operands(&self.data)
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Matrix {}x{} ", self.rows, self.cols)?;
        f.debug_list().entries(self.data.chunks(self.cols)).finish()
    }
}

pub(crate) fn check_operands(values: &[i64]) -> Result<()> {
    match values.iter().position(|v| !(OPERAND_MIN..=OPERAND_MAX).contains(v)) {
        Some(index) => Err(Error::OperandRange { index, value: values[index] }),
        None => Ok(()),
    }
}

fn operand_stream(seed: u64) -> impl FnMut() -> i64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    move || i64::from((rng.next_u32() >> 24) as u8 as i8)
}

/// Pseudorandom `A (m x k)` and `B (k x n)`, a pure function of `(shape, seed)`.
pub fn make_gemm(shape: GemmShape, seed: u64) -> (Matrix, Matrix) {
    let mut next = operand_stream(seed);
    let a = (0..shape.m * shape.k).map(|_| next()).collect();
    let b = (0..shape.k * shape.n).map(|_| next()).collect();
    (
        Matrix { rows: shape.m, cols: shape.k, data: a },
        Matrix { rows: shape.k, cols: shape.n, data: b },
    )
}

/// Two pseudorandom length-`n` operand vectors for inner-product experiments.
pub fn make_vectors(n: usize, seed: u64) -> (Vec<i64>, Vec<i64>) {
    let mut next = operand_stream(seed);
    let a = (0..n).map(|_| next()).collect();
    let b = (0..n).map(|_| next()).collect();
    (a, b)
}

/// Direct dot product, the oracle for every inner-product simulator.
pub fn dot(a: &[i64], b: &[i64]) -> Result<i64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch { op: "dot", left: (1, a.len()), right: (b.len(), 1) });
    }
    Ok(a.iter().zip(b).map(|(x, y)| x * y).sum())
}

/// Triple-loop product; the ground truth all simulators are checked against.
pub fn reference_matmul(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if a.cols != b.rows {
        return Err(Error::DimensionMismatch {
            op: "matmul",
            left: (a.rows, a.cols),
            right: (b.rows, b.cols),
        });
    }
    let mut c = Matrix::zeros(a.rows, b.cols);
    for i in 0..a.rows {
        for t in 0..a.cols {
            let x = a.get(i, t);
            if x == 0 {
                continue;
            }
            for j in 0..b.cols {
                c.add_at(i, j, x * b.get(t, j));
            }
        }
    }
    Ok(c)
}

/// One rank-`width` update `C += col_block (m x width) * row_block (width x n)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OuterProductStep {
    pub index: usize,
    /// First inner-dimension index covered by this step.
    pub k_offset: usize,
    pub col_block: Matrix,
    pub row_block: Matrix,
}

impl OuterProductStep {
    pub fn width(&self) -> usize {
        self.col_block.cols
    }

    pub fn rank_update(&self) -> Matrix {
        reference_matmul(&self.col_block, &self.row_block).expect("blocks share width")
    }
}

/// Splits `A * B` into `ceil(k / width)` outer-product steps. The final step
/// is narrower when `width` does not divide `k`.
pub fn outer_product_schedule(a: &Matrix, b: &Matrix, width: usize) -> Result<Vec<OuterProductStep>> {
    if a.cols != b.rows {
        return Err(Error::DimensionMismatch {
            op: "outer_product_schedule",
            left: (a.rows, a.cols),
            right: (b.rows, b.cols),
        });
    }
    let k = a.cols;
    if width == 0 || width > k {
        return Err(Error::InvalidParameter {
            name: "block_width",
            value: width as u64,
            expected: "1 <= block_width <= k",
        });
    }
    Ok(step_widths(k, width)
        .enumerate()
        .map(|(index, (k_offset, w))| OuterProductStep {
            index,
            k_offset,
            col_block: a.block(0, k_offset, a.rows, w),
            row_block: b.block(k_offset, 0, w, b.cols),
        })
        .collect())
}

/// `(offset, width)` of each block when `len` is cut into pieces of `width`.
pub(crate) fn step_widths(len: usize, width: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..len.div_ceil(width)).map(move |s| {
        let off = s * width;
        (off, width.min(len - off))
    })
}
