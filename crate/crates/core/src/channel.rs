//! Channel representations: Kraus sets, Choi matrices and Stinespring
//! dilations.
//!
//! Choi convention: `J = Σ_{ij} |i⟩⟨j| ⊗ E(|i⟩⟨j|)`, unnormalized, input
//! factor first. Trace preservation then reads `tr_out J = I`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen, partial_trace, qr_rectangular, singular_values, CMat, C64, ZERO};

/// Tolerance on `‖Σ A_i†A_i − I‖_F` accepted when constructing a Kraus set.
pub const TP_TOLERANCE: f64 = 1e-9;
/// Default relative eigenvalue threshold for Kraus rank.
pub const RANK_TOLERANCE: f64 = 1e-9;

/// A channel from `m` to `n` qubits as a list of `2^n × 2^m` Kraus operators.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausSet {
    m: usize,
    n: usize,
    ops: Vec<CMat>,
}

impl KrausSet {
    pub fn new(m: usize, n: usize, ops: Vec<CMat>) -> Result<Self> {
        let ks = Self::new_unchecked(m, n, ops)?;
        let residual = ks.tp_residual();
        if residual >= TP_TOLERANCE {
            return Err(Error::InvalidKraus(format!("trace-preservation residual {residual:.3e}")));
        }
        Ok(ks)
    }

    /// Shape checks only; trace preservation is not enforced.
    pub fn new_unchecked(m: usize, n: usize, ops: Vec<CMat>) -> Result<Self> {
        if ops.is_empty() {
            return Err(Error::InvalidKraus("empty operator list".into()));
        }
        for (i, a) in ops.iter().enumerate() {
            if a.shape() != (1 << n, 1 << m) {
                return Err(Error::InvalidKraus(format!(
                    "operator {i} is {}x{}, expected {}x{}",
                    a.rows(),
                    a.cols(),
                    1 << n,
                    1 << m
                )));
            }
        }
        Ok(KrausSet { m, n, ops })
    }

    pub fn unitary(u: CMat) -> Result<Self> {
        if !u.is_square() || !u.rows().is_power_of_two() {
            return Err(Error::ShapeMismatch("unitary must be 2^m x 2^m".into()));
        }
        let m = u.rows().trailing_zeros() as usize;
        Self::new(m, m, vec![u])
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn ops(&self) -> &[CMat] {
        &self.ops
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn tp_residual(&self) -> f64 {
        let mut sum = CMat::zeros(1 << self.m, 1 << self.m);
        for a in &self.ops {
            sum = &sum + &a.adjoint().matmul(a);
        }
        (&sum - &CMat::identity(1 << self.m)).frob_norm()
    }

    /// Applies the channel to a `2^m × 2^m` operator.
    pub fn apply(&self, x: &CMat) -> CMat {
        let mut out = CMat::zeros(1 << self.n, 1 << self.n);
        for a in &self.ops {
            out = &out + &a.matmul(x).matmul(&a.adjoint());
        }
        out
    }
}

/// Choi matrix of an `m → n` channel.
#[derive(Debug, Clone, PartialEq)]
pub struct ChoiMatrix {
    m: usize,
    n: usize,
    j: CMat,
}

impl ChoiMatrix {
    pub fn new(m: usize, n: usize, j: CMat) -> Result<Self> {
        let dim = 1 << (m + n);
        if j.shape() != (dim, dim) {
            return Err(Error::InvalidChoi(format!("expected {dim}x{dim}, got {}x{}", j.rows(), j.cols())));
        }
        let herm = j.hermitian_residual();
        if herm > 1e-10 {
            return Err(Error::InvalidChoi(format!("not Hermitian (residual {herm:.3e})")));
        }
        let (vals, _) = hermitian_eigen(&j);
        if let Some(&min) = vals.last() {
            if min < -1e-9 {
                return Err(Error::InvalidChoi(format!("negative eigenvalue {min:.3e}")));
            }
        }
        let keep: Vec<usize> = (0..m).collect();
        let tp = (&partial_trace(&j, &keep)? - &CMat::identity(1 << m)).frob_norm();
        if tp > 1e-8 {
            return Err(Error::InvalidChoi(format!("output partial trace is not identity (residual {tp:.3e})")));
        }
        Ok(ChoiMatrix { m, n, j })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &CMat {
        &self.j
    }

    pub fn distance(&self, other: &ChoiMatrix) -> Result<f64> {
        if (self.m, self.n) != (other.m, other.n) {
            return Err(Error::ShapeMismatch(format!(
                "channels {}→{} vs {}→{}",
                self.m, self.n, other.m, other.n
            )));
        }
        Ok((&self.j - &other.j).frob_norm())
    }
}

/// Raw Choi matrix without validation; used on hot paths (template fitting).
pub(crate) fn choi_matrix_of(m: usize, n: usize, ops: &[CMat]) -> CMat {
    let (din, dout) = (1usize << m, 1usize << n);
    let dim = din * dout;
    let mut j = CMat::zeros(dim, dim);
    let mut v = vec![ZERO; dim];
    for a in ops {
        // vec with input index major: v[(i, x)] = A[x][i]
        for i in 0..din {
            for x in 0..dout {
                v[i * dout + x] = a[(x, i)];
            }
        }
        let data = j.as_mut_slice();
        for r in 0..dim {
            let vr = v[r];
            if vr == ZERO {
                continue;
            }
            let row = &mut data[r * dim..(r + 1) * dim];
            for (o, vc) in row.iter_mut().zip(&v) {
                *o += vr * vc.conj();
            }
        }
    }
    j
}

pub fn choi_from_kraus(ks: &KrausSet) -> ChoiMatrix {
    ChoiMatrix { m: ks.m, n: ks.n, j: choi_matrix_of(ks.m, ks.n, &ks.ops) }
}

/// Minimal Kraus representation from the Choi eigendecomposition; operators
/// are ordered by descending eigenvalue.
pub fn kraus_from_choi(c: &ChoiMatrix, tol: f64) -> Result<KrausSet> {
    let (din, dout) = (1usize << c.m, 1usize << c.n);
    let tr = c.j.trace().re;
    let (vals, vecs) = hermitian_eigen(&c.j);
    if let Some(&min) = vals.last() {
        if min < -1e-9 * tr.max(1.0) {
            return Err(Error::InvalidChoi(format!("negative eigenvalue {min:.3e}")));
        }
    }
    let mut ops = Vec::new();
    for (k, &lam) in vals.iter().enumerate() {
        if lam <= tol * tr {
            break;
        }
        let s = lam.sqrt();
        let mut a = CMat::zeros(dout, din);
        for i in 0..din {
            for x in 0..dout {
                a[(x, i)] = vecs[(i * dout + x, k)] * s;
            }
        }
        ops.push(a);
    }
    if ops.is_empty() {
        return Err(Error::InvalidChoi("no eigenvalue above threshold".into()));
    }
    KrausSet::new_unchecked(c.m, c.n, ops)
}

/// Number of Choi eigenvalues above `tol · tr J`.
pub fn kraus_rank(ks: &KrausSet, tol: f64) -> usize {
    let c = choi_from_kraus(ks);
    let tr = c.j.trace().re;
    let (vals, _) = hermitian_eigen(&c.j);
    vals.iter().filter(|&&v| v > tol * tr).count()
}

/// Extremality via linear independence of `{A_i†A_j}` on a minimal Kraus
/// representation.
pub fn is_extreme(ks: &KrausSet) -> Result<bool> {
    let minimal = kraus_from_choi(&choi_from_kraus(ks), RANK_TOLERANCE)?;
    let k = minimal.len();
    let din = 1usize << ks.m;
    if k * k > din * din {
        return Ok(false);
    }
    let mut stacked = CMat::zeros(din * din, k * k);
    for (i, ai) in minimal.ops.iter().enumerate() {
        let ai_dag = ai.adjoint();
        for (j, aj) in minimal.ops.iter().enumerate() {
            let prod = ai_dag.matmul(aj);
            for (r, z) in prod.as_slice().iter().enumerate() {
                stacked[(r, i * k + j)] = *z;
            }
        }
    }
    let sv = singular_values(&stacked);
    let smax = sv.first().copied().unwrap_or(0.0);
    let rank = sv.iter().filter(|&&s| s > 1e-8 * smax).count();
    Ok(rank == k * k)
}

pub fn choi_distance(a: &KrausSet, b: &KrausSet) -> Result<f64> {
    choi_from_kraus(a).distance(&choi_from_kraus(b))
}

pub fn kraus_equivalent(a: &KrausSet, b: &KrausSet, tol: f64) -> bool {
    matches!(choi_distance(a, b), Ok(d) if d < tol)
}

/// Stinespring isometry `V = [A_1; …; A_K; 0; …]` with `2^k` blocks.
#[derive(Debug, Clone)]
pub struct DilationIsometry {
    pub v: CMat,
    pub k: usize,
    pub m: usize,
    pub n: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct DilationOptions {
    /// Re-derive a minimal Kraus set from the Choi matrix first.
    pub minimal: bool,
    /// Force this many environment qubits (must fit the Kraus count).
    pub k: Option<usize>,
}

impl Default for DilationOptions {
    fn default() -> Self {
        DilationOptions { minimal: true, k: None }
    }
}

pub fn stinespring_isometry(ks: &KrausSet) -> Result<DilationIsometry> {
    stinespring_isometry_with(ks, DilationOptions::default())
}

pub fn stinespring_isometry_with(ks: &KrausSet, opts: DilationOptions) -> Result<DilationIsometry> {
    let ops = if opts.minimal {
        kraus_from_choi(&choi_from_kraus(ks), RANK_TOLERANCE)?.ops
    } else {
        ks.ops.clone()
    };
    let needed = ceil_log2(ops.len());
    let k = match opts.k {
        Some(k) if k < needed => {
            return Err(Error::Infeasible(format!("k={k} cannot hold {} Kraus operators", ops.len())));
        }
        Some(k) => k,
        None => needed,
    };
    let mut blocks = ops;
    blocks.resize(1 << k, CMat::zeros(1 << ks.n, 1 << ks.m));
    let v = CMat::vstack(&blocks)?;
    let residual = v.isometry_residual();
    if residual > 1e-9 {
        return Err(Error::NotIsometry { residual });
    }
    Ok(DilationIsometry { v, k, m: ks.m, n: ks.n })
}

pub fn ceil_log2(x: usize) -> usize {
    assert!(x > 0);
    x.next_power_of_two().trailing_zeros() as usize
}

/// Random channel of Kraus rank `kraus_rank`: a Gaussian `2^n·K × 2^m` matrix
/// orthonormalized by QR and cut into `K` blocks.
pub fn random_channel(m: usize, n: usize, kraus_rank: usize, seed: u64) -> Result<KrausSet> {
    if kraus_rank == 0 || kraus_rank > 1 << (m + n) {
        return Err(Error::Infeasible(format!("Kraus rank {kraus_rank} outside 1..=2^(m+n)")));
    }
    if kraus_rank << n < 1 << m {
        return Err(Error::Infeasible(format!(
            "{kraus_rank} Kraus operators of size 2^{n}x2^{m} cannot be trace preserving"
        )));
    }
    let (din, dout) = (1usize << m, 1usize << n);
    let rows = dout * kraus_rank;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data: Vec<C64> = (0..rows * din)
        .map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    let g = CMat::from_vec(rows, din, data)?;
    let v = qr_rectangular(&g)?.q.leading_columns(din);
    let ops = (0..kraus_rank).map(|b| v.submatrix(b * dout, (b + 1) * dout, 0, din)).collect();
    KrausSet::new(m, n, ops)
}

/// A few standard channels.
pub mod library {
    use super::*;
    use crate::linalg::ONE;

    pub fn pauli(which: char) -> CMat {
        let i = C64::new(0.0, 1.0);
        match which {
            'I' => CMat::identity(2),
            'X' => CMat::from_rows(&[vec![ZERO, ONE], vec![ONE, ZERO]]),
            'Y' => CMat::from_rows(&[vec![ZERO, -i], vec![i, ZERO]]),
            'Z' => CMat::from_rows(&[vec![ONE, ZERO], vec![ZERO, -ONE]]),
            _ => panic!("unknown Pauli {which}"),
        }
    }

    pub fn identity(m: usize) -> KrausSet {
        KrausSet::new(m, m, vec![CMat::identity(1 << m)]).expect("identity is a channel")
    }

    pub fn depolarizing_qubit() -> KrausSet {
        let ops = "IXYZ".chars().map(|p| pauli(p).scale(C64::new(0.5, 0.0))).collect();
        KrausSet::new(1, 1, ops).expect("depolarizing is a channel")
    }

    pub fn amplitude_damping(gamma: f64) -> KrausSet {
        let a1 = CMat::from_real(2, 2, &[1.0, 0.0, 0.0, (1.0 - gamma).sqrt()]);
        let a2 = CMat::from_real(2, 2, &[0.0, gamma.sqrt(), 0.0, 0.0]);
        KrausSet::new(1, 1, vec![a1, a2]).expect("amplitude damping is a channel")
    }

    /// `ρ ↦ (1−p)ρ + p ZρZ`.
    pub fn dephasing(p: f64) -> KrausSet {
        let ops = vec![
            CMat::identity(2).scale(C64::new((1.0 - p).sqrt(), 0.0)),
            pauli('Z').scale(C64::new(p.sqrt(), 0.0)),
        ];
        KrausSet::new(1, 1, ops).expect("dephasing is a channel")
    }
}
