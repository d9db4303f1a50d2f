//! Dense complex matrices and the handful of factorizations the compiler needs.
//!
//! Matrices are small (at most a few hundred rows), so everything is a plain
//! row-major `Vec<Complex64>`. The Householder QR and the unitary completion
//! are written out here because their conventions (nonnegative real diagonal,
//! fixed Gram-Schmidt candidate order) are part of the compiler's
//! determinism contract. Hermitian eigendecomposition and SVD are delegated
//! to `nalgebra`.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

/// Dense complex matrix, row-major.
#[derive(Clone, PartialEq)]
pub struct CMat {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl CMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMat { rows, cols, data: vec![ZERO; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::ShapeMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::ShapeMismatch("non-finite entry".into()));
        }
        Ok(CMat { rows, cols, data })
    }

    /// Builds a matrix from rows; panics on ragged input (test and literal use).
    pub fn from_rows(rows: &[Vec<C64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        CMat { rows: r, cols: c, data }
    }

    pub fn from_real(rows: usize, cols: usize, vals: &[f64]) -> Self {
        assert_eq!(vals.len(), rows * cols);
        CMat { rows, cols, data: vals.iter().map(|&v| C64::new(v, 0.0)).collect() }
    }

    pub fn diag(entries: &[C64]) -> Self {
        let mut m = Self::zeros(entries.len(), entries.len());
        for (i, &z) in entries.iter().enumerate() {
            m[(i, i)] = z;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn adjoint(&self) -> CMat {
        let mut out = CMat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    pub fn scale(&self, s: C64) -> CMat {
        CMat { rows: self.rows, cols: self.cols, data: self.data.iter().map(|z| z * s).collect() }
    }

    pub fn matmul(&self, rhs: &CMat) -> CMat {
        assert_eq!(self.cols, rhs.rows, "matmul shape mismatch");
        let mut out = CMat::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == ZERO {
                    continue;
                }
                let rhs_row = &rhs.data[k * rhs.cols..(k + 1) * rhs.cols];
                for (o, b) in out_row.iter_mut().zip(rhs_row) {
                    *o += a * b;
                }
            }
        }
        out
    }

    pub fn kron(&self, rhs: &CMat) -> CMat {
        let (r, c) = (self.rows * rhs.rows, self.cols * rhs.cols);
        let mut out = CMat::zeros(r, c);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let a = self[(i, j)];
                for k in 0..rhs.rows {
                    for l in 0..rhs.cols {
                        out[(i * rhs.rows + k, j * rhs.cols + l)] = a * rhs[(k, l)];
                    }
                }
            }
        }
        out
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn frob_norm_sqr(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn frob_norm(&self) -> f64 {
        self.frob_norm_sqr().sqrt()
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn set_column(&mut self, j: usize, v: &[C64]) {
        assert_eq!(v.len(), self.rows);
        for (i, &z) in v.iter().enumerate() {
            self[(i, j)] = z;
        }
    }

    /// First `n` columns.
    pub fn leading_columns(&self, n: usize) -> CMat {
        self.submatrix(0, self.rows, 0, n)
    }

    pub fn submatrix(&self, r0: usize, r1: usize, c0: usize, c1: usize) -> CMat {
        assert!(r0 <= r1 && r1 <= self.rows && c0 <= c1 && c1 <= self.cols);
        let mut out = CMat::zeros(r1 - r0, c1 - c0);
        for i in r0..r1 {
            for j in c0..c1 {
                out[(i - r0, j - c0)] = self[(i, j)];
            }
        }
        out
    }

    /// Stacks matrices with equal column count on top of each other.
    pub fn vstack(blocks: &[CMat]) -> Result<CMat> {
        let cols = blocks.first().map_or(0, |b| b.cols);
        if blocks.iter().any(|b| b.cols != cols) {
            return Err(Error::ShapeMismatch("vstack column counts differ".into()));
        }
        let rows = blocks.iter().map(|b| b.rows).sum();
        let mut data = Vec::with_capacity(rows * cols);
        for b in blocks {
            data.extend_from_slice(&b.data);
        }
        Ok(CMat { rows, cols, data })
    }

    /// `‖self†self − I‖_F`.
    pub fn isometry_residual(&self) -> f64 {
        let g = self.adjoint().matmul(self);
        (&g - &CMat::identity(self.cols)).frob_norm()
    }

    pub fn hermitian_residual(&self) -> f64 {
        (self - &self.adjoint()).frob_norm()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    fn to_nalgebra(&self) -> DMatrix<C64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }

    fn from_nalgebra(m: &DMatrix<C64>) -> CMat {
        let mut out = CMat::zeros(m.nrows(), m.ncols());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                out[(i, j)] = m[(i, j)];
            }
        }
        out
    }
}

impl Index<(usize, usize)> for CMat {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for CMat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl Add for &CMat {
    type Output = CMat;
    fn add(self, rhs: &CMat) -> CMat {
        assert_eq!(self.shape(), rhs.shape());
        CMat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &CMat {
    type Output = CMat;
    fn sub(self, rhs: &CMat) -> CMat {
        assert_eq!(self.shape(), rhs.shape());
        CMat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul for &CMat {
    type Output = CMat;
    fn mul(self, rhs: &CMat) -> CMat {
        self.matmul(rhs)
    }
}

impl fmt::Debug for CMat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMat {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, " ")?;
            for j in 0..self.cols {
                let z = self[(i, j)];
                write!(f, " {:+.6}{:+.6}i", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// Rectangular QR factors: `q` is a full square unitary, `r` is upper
/// triangular in its top square block with a real nonnegative diagonal and
/// zero below.
#[derive(Debug, Clone)]
pub struct QrResult {
    pub q: CMat,
    pub r: CMat,
}

/// Householder QR of a tall matrix.
///
/// Each reflector maps the active column onto `e^{i arg x_1}‖x‖ e_1`; the
/// leftover phases are moved from `r`'s rows into `q`'s columns at the end so
/// that `diag(r) ≥ 0`. A column that is already zero below (and on) the
/// pivot gets the identity reflection and a zero diagonal entry.
pub fn qr_rectangular(b: &CMat) -> Result<QrResult> {
    let (p, c) = b.shape();
    if p < c {
        return Err(Error::NonTall { rows: p, cols: c });
    }
    let mut r = b.clone();
    let mut q = CMat::identity(p);
    for k in 0..c {
        let x: Vec<C64> = (k..p).map(|i| r[(i, k)]).collect();
        let tail_sqr: f64 = x[1..].iter().map(|z| z.norm_sqr()).sum();
        let alpha = (x[0].norm_sqr() + tail_sqr).sqrt();
        if alpha == 0.0 || tail_sqr == 0.0 {
            continue;
        }
        let phase = if x[0] == ZERO { ONE } else { x[0] / x[0].norm() };
        // u = x − phase·alpha·e1, first entry written in cancellation-free form.
        let mut u = x;
        u[0] = -phase * (tail_sqr / (u[0].norm() + alpha));
        let u_norm_sqr: f64 = u.iter().map(|z| z.norm_sqr()).sum();
        if u_norm_sqr == 0.0 {
            continue;
        }
        let scale = 2.0 / u_norm_sqr;
        // r ← H r, acting on rows k.. and columns k..
        for j in k..c {
            let dot: C64 = (k..p).map(|i| u[i - k].conj() * r[(i, j)]).sum();
            let f = dot * scale;
            for i in k..p {
                r[(i, j)] -= u[i - k] * f;
            }
        }
        for i in k + 1..p {
            r[(i, k)] = ZERO;
        }
        // q ← q H, acting on columns k..
        for i in 0..p {
            let dot: C64 = (k..p).map(|l| q[(i, l)] * u[l - k]).sum();
            let f = dot * scale;
            for l in k..p {
                q[(i, l)] -= f * u[l - k].conj();
            }
        }
    }
    for k in 0..c {
        let d = r[(k, k)];
        let n = d.norm();
        if n == 0.0 {
            continue;
        }
        let ph = d / n;
        for j in 0..c {
            r[(k, j)] *= ph.conj();
        }
        r[(k, k)] = C64::new(n, 0.0);
        for i in 0..p {
            q[(i, k)] *= ph;
        }
    }
    Ok(QrResult { q, r })
}

/// Extends an isometry's columns to a full unitary by Gram-Schmidt against
/// the standard basis vectors in order. The input columns are copied
/// verbatim into the leading block.
pub fn complete_to_unitary(v: &CMat) -> Result<CMat> {
    let (p, c) = v.shape();
    if p < c {
        return Err(Error::NonTall { rows: p, cols: c });
    }
    let residual = v.isometry_residual();
    if residual > 1e-9 {
        return Err(Error::NotIsometry { residual });
    }
    let mut basis: Vec<Vec<C64>> = (0..c).map(|j| v.column(j)).collect();
    for e in 0..p {
        if basis.len() == p {
            break;
        }
        let mut cand = vec![ZERO; p];
        cand[e] = ONE;
        // two rounds of modified Gram-Schmidt
        for _ in 0..2 {
            for b in &basis {
                let dot: C64 = b.iter().zip(&cand).map(|(x, y)| x.conj() * y).sum();
                for (y, x) in cand.iter_mut().zip(b) {
                    *y -= dot * x;
                }
            }
        }
        let norm = cand.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-6 {
            continue;
        }
        for z in &mut cand {
            *z /= norm;
        }
        basis.push(cand);
    }
    if basis.len() != p {
        return Err(Error::NotIsometry { residual });
    }
    let mut out = CMat::zeros(p, p);
    for (j, col) in basis.iter().enumerate() {
        out.set_column(j, col);
    }
    for j in 0..c {
        for i in 0..p {
            out[(i, j)] = v[(i, j)];
        }
    }
    Ok(out)
}

/// Partial trace of a `2^p × 2^p` matrix, keeping the listed qubits (qubit 0
/// is the most significant). Kept qubits appear in ascending index order.
pub fn partial_trace(rho: &CMat, keep: &[usize]) -> Result<CMat> {
    if !rho.is_square() || !rho.rows().is_power_of_two() {
        return Err(Error::ShapeMismatch(format!("{}x{} is not a qubit register", rho.rows(), rho.cols())));
    }
    let p = rho.rows().trailing_zeros() as usize;
    let mut keep: Vec<usize> = keep.to_vec();
    keep.sort_unstable();
    keep.dedup();
    if let Some(&q) = keep.iter().find(|&&q| q >= p) {
        return Err(Error::IndexOutOfRange(format!("qubit {q} of {p}")));
    }
    let traced: Vec<usize> = (0..p).filter(|q| !keep.contains(q)).collect();
    let dk = 1usize << keep.len();
    let dt = 1usize << traced.len();
    let compose = |kbits: usize, tbits: usize| -> usize {
        let mut idx = 0usize;
        for (pos, &q) in keep.iter().enumerate() {
            if kbits >> (keep.len() - 1 - pos) & 1 == 1 {
                idx |= 1 << (p - 1 - q);
            }
        }
        for (pos, &q) in traced.iter().enumerate() {
            if tbits >> (traced.len() - 1 - pos) & 1 == 1 {
                idx |= 1 << (p - 1 - q);
            }
        }
        idx
    };
    let mut out = CMat::zeros(dk, dk);
    for a in 0..dk {
        for b in 0..dk {
            let mut s = ZERO;
            for t in 0..dt {
                s += rho[(compose(a, t), compose(b, t))];
            }
            out[(a, b)] = s;
        }
    }
    Ok(out)
}

/// `min_φ ‖a − e^{iφ} b‖_F`, attained at `φ = −arg tr(a†b)`.
pub fn frob_distance_up_to_phase(a: &CMat, b: &CMat) -> Result<f64> {
    if a.shape() != b.shape() {
        return Err(Error::ShapeMismatch(format!("{:?} vs {:?}", a.shape(), b.shape())));
    }
    let overlap: C64 = a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| x.conj() * y).sum();
    let phase = if overlap.norm() > 0.0 { overlap.conj() / overlap.norm() } else { ONE };
    let d: f64 = a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| (x - phase * y).norm_sqr()).sum();
    Ok(d.sqrt())
}

/// Eigenpairs of a Hermitian matrix, eigenvalues in descending order.
/// Column `k` of the returned matrix is the eigenvector for `values[k]`.
pub fn hermitian_eigen(h: &CMat) -> (Vec<f64>, CMat) {
    assert!(h.is_square());
    let n = h.rows();
    // symmetrize before handing over
    let sym = (h + &h.adjoint()).scale(C64::new(0.5, 0.0));
    let eig = sym.to_nalgebra().symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let vecs = CMat::from_nalgebra(&eig.eigenvectors);
    let mut sorted = CMat::zeros(n, n);
    let mut values = Vec::with_capacity(n);
    for (k, &src) in order.iter().enumerate() {
        values.push(eig.eigenvalues[src]);
        // fix the eigenvector phase so its largest entry is real positive
        let col = vecs.column(src);
        let pivot = col.iter().copied().max_by(|x, y| x.norm().total_cmp(&y.norm())).unwrap_or(ONE);
        let ph = if pivot == ZERO { ONE } else { pivot.conj() / pivot.norm() };
        let col: Vec<C64> = col.iter().map(|z| z * ph).collect();
        sorted.set_column(k, &col);
    }
    (values, sorted)
}

/// Singular values in descending order.
pub fn singular_values(a: &CMat) -> Vec<f64> {
    let svd = a.to_nalgebra().svd(false, false);
    let mut s: Vec<f64> = svd.singular_values.iter().copied().collect();
    s.sort_by(|x, y| y.total_cmp(x));
    s
}

#[cfg(test)]
pub(crate) mod test_util {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    pub fn random_matrix(rows: usize, cols: usize, seed: u64) -> CMat {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..rows * cols)
            .map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        CMat::from_vec(rows, cols, data).unwrap()
    }

    pub fn random_isometry(rows: usize, cols: usize, seed: u64) -> CMat {
        let g = random_matrix(rows, cols, seed);
        qr_rectangular(&g).unwrap().q.leading_columns(cols)
    }

    pub fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }
}
