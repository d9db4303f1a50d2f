//! Exact simulation by enumerating measurement outcomes.
//!
//! Every branch evolves a `2^p × 2^m` matrix whose columns are the images of
//! the input basis states. Qubits that are not outputs are summed out at the
//! end, which covers TRACE as well as measured-and-discarded qubits.

use crate::channel::{choi_from_kraus, choi_matrix_of, KrausSet};
use crate::circuit::{Circuit, Op};
use crate::error::{Error, Result};
use crate::linalg::{CMat, C64, ZERO};
use crate::par;

/// Kraus operators whose squared norm falls below this are dropped.
const NEGLIGIBLE: f64 = 1e-24;

/// The map applied under one full outcome string.
#[derive(Debug, Clone)]
pub struct BranchOperator {
    /// Outcomes in measurement order.
    pub outcome: Vec<bool>,
    /// `2^p × 2^m` map from the input subspace to the full register.
    pub op: CMat,
}

fn apply_1q(state: &mut CMat, p: usize, q: usize, m: [[C64; 2]; 2]) {
    let cols = state.cols();
    let mask = 1usize << (p - 1 - q);
    let data = state.as_mut_slice();
    for r0 in (0..1usize << p).filter(|r| r & mask == 0) {
        let r1 = r0 | mask;
        let (lo, hi) = data.split_at_mut(r1 * cols);
        let row0 = &mut lo[r0 * cols..(r0 + 1) * cols];
        let row1 = &mut hi[..cols];
        for (a, b) in row0.iter_mut().zip(row1.iter_mut()) {
            let (x, y) = (*a, *b);
            *a = m[0][0] * x + m[0][1] * y;
            *b = m[1][0] * x + m[1][1] * y;
        }
    }
}

fn swap_rows(state: &mut CMat, r0: usize, r1: usize) {
    let cols = state.cols();
    let data = state.as_mut_slice();
    let (lo, hi) = data.split_at_mut(r1 * cols);
    lo[r0 * cols..(r0 + 1) * cols].swap_with_slice(&mut hi[..cols]);
}

fn apply_x(state: &mut CMat, p: usize, q: usize) {
    let mask = 1usize << (p - 1 - q);
    for r0 in (0..1usize << p).filter(|r| r & mask == 0) {
        swap_rows(state, r0, r0 | mask);
    }
}

fn apply_cnot(state: &mut CMat, p: usize, control: usize, target: usize) {
    let cm = 1usize << (p - 1 - control);
    let tm = 1usize << (p - 1 - target);
    for r0 in (0..1usize << p).filter(|r| r & cm != 0 && r & tm == 0) {
        swap_rows(state, r0, r0 | tm);
    }
}

/// Projects qubit `q` onto `|b⟩`; returns the remaining squared norm.
fn project(state: &mut CMat, p: usize, q: usize, b: bool) -> f64 {
    let cols = state.cols();
    let mask = 1usize << (p - 1 - q);
    let data = state.as_mut_slice();
    let mut norm = 0.0;
    for r in 0..1usize << p {
        let row = &mut data[r * cols..(r + 1) * cols];
        if (r & mask != 0) == b {
            norm += row.iter().map(|z| z.norm_sqr()).sum::<f64>();
        } else {
            row.fill(ZERO);
        }
    }
    norm
}

fn initial_state(c: &Circuit) -> CMat {
    let p = c.num_qubits;
    let m = c.inputs.len();
    let mut state = CMat::zeros(1 << p, 1 << m);
    for i in 0..1usize << m {
        let mut row = 0;
        for (k, &q) in c.inputs.iter().enumerate() {
            if i >> (m - 1 - k) & 1 == 1 {
                row |= 1 << (p - 1 - q);
            }
        }
        state[(row, i)] = C64::new(1.0, 0.0);
    }
    state
}

fn apply_unitary(state: &mut CMat, p: usize, op: &Op) {
    match *op {
        Op::X { q } => apply_x(state, p, q),
        Op::Cnot { control, target } => apply_cnot(state, p, control, target),
        _ => {
            let (q, _) = op.qubits();
            apply_1q(state, p, q, op.matrix().expect("single-qubit unitary"));
        }
    }
}

/// Unitary circuits only: the `2^p × 2^m` image of the input basis.
pub fn simulate_unitary(c: &Circuit) -> Result<CMat> {
    c.validate()?;
    if !c.is_unitary() {
        return Err(Error::InvalidCircuit("simulate_unitary needs a circuit without measurement, trace or conditions".into()));
    }
    let mut state = initial_state(c);
    for g in &c.gates {
        apply_unitary(&mut state, c.num_qubits, &g.op);
    }
    Ok(state)
}

/// Runs one outcome string. Returns `None` once the branch has zero weight.
fn run_branch(c: &Circuit, outcome: &[bool]) -> Option<CMat> {
    let p = c.num_qubits;
    let mut state = initial_state(c);
    let mut regs: Vec<Option<bool>> = vec![None; c.num_cregs];
    let mut last_outcome = vec![false; p];
    let mut next = 0;
    for g in &c.gates {
        match g.op {
            Op::Measure { q, creg } => {
                let b = outcome[next];
                next += 1;
                if project(&mut state, p, q, b) < NEGLIGIBLE {
                    return None;
                }
                regs[creg] = Some(b);
                last_outcome[q] = b;
            }
            Op::Reset { q } => {
                if last_outcome[q] {
                    apply_x(&mut state, p, q);
                    last_outcome[q] = false;
                }
            }
            Op::Trace { .. } => {}
            ref op => {
                if g.fires(&regs) {
                    apply_unitary(&mut state, p, op);
                }
            }
        }
    }
    Some(state)
}

fn outcome_bits(index: usize, len: usize) -> Vec<bool> {
    (0..len).map(|i| index >> (len - 1 - i) & 1 == 1).collect()
}

/// One operator per outcome string, in lexicographic order with the first
/// measurement most significant. Zero-weight branches carry a zero matrix.
pub fn branch_operators(c: &Circuit) -> Result<Vec<BranchOperator>> {
    c.validate()?;
    let k = c.measurement_count();
    if k > 24 {
        return Err(Error::InvalidCircuit(format!("{k} measurements is beyond exhaustive enumeration")));
    }
    let shape = (1usize << c.num_qubits, 1usize << c.inputs.len());
    Ok(par::map_range(1 << k, |s| {
        let outcome = outcome_bits(s, k);
        let op = run_branch(c, &outcome).unwrap_or_else(|| CMat::zeros(shape.0, shape.1));
        BranchOperator { outcome, op }
    }))
}

/// Splits a full-register map into Kraus operators onto the output qubits,
/// one per basis state of the remaining qubits.
fn discard_non_outputs(c: &Circuit, full: &CMat, out: &mut Vec<CMat>) {
    let p = c.num_qubits;
    let n = c.outputs.len();
    let rest: Vec<usize> = (0..p).filter(|q| !c.outputs.contains(q)).collect();
    let cols = full.cols();
    for e in 0..1usize << rest.len() {
        let mut base = 0;
        for (k, &q) in rest.iter().enumerate() {
            if e >> (rest.len() - 1 - k) & 1 == 1 {
                base |= 1 << (p - 1 - q);
            }
        }
        let mut a = CMat::zeros(1 << n, cols);
        for y in 0..1usize << n {
            let mut row = base;
            for (k, &q) in c.outputs.iter().enumerate() {
                if y >> (n - 1 - k) & 1 == 1 {
                    row |= 1 << (p - 1 - q);
                }
            }
            for col in 0..cols {
                a[(y, col)] = full[(row, col)];
            }
        }
        if a.frob_norm_sqr() >= NEGLIGIBLE {
            out.push(a);
        }
    }
}

/// The channel implemented by a circuit, as a Kraus set ordered by outcome
/// string and then by the basis state of the discarded qubits.
pub fn circuit_to_kraus(c: &Circuit) -> Result<KrausSet> {
    let branches = branch_operators(c)?;
    let per_branch = par::map_slice(&branches, |b| {
        let mut ops = Vec::new();
        discard_non_outputs(c, &b.op, &mut ops);
        ops
    });
    let ops: Vec<CMat> = per_branch.into_iter().flatten().collect();
    if ops.is_empty() {
        return Err(Error::InvalidCircuit("circuit has no nonzero branch".into()));
    }
    KrausSet::new_unchecked(c.inputs.len(), c.outputs.len(), ops)
}

/// Unnormalized Choi matrix of an already validated circuit, computed
/// sequentially; the inner loop of template fitting.
pub(crate) fn choi_unchecked(c: &Circuit) -> CMat {
    let k = c.measurement_count();
    let mut ops = Vec::new();
    for s in 0..1usize << k {
        if let Some(full) = run_branch(c, &outcome_bits(s, k)) {
            discard_non_outputs(c, &full, &mut ops);
        }
    }
    choi_matrix_of(c.inputs.len(), c.outputs.len(), &ops)
}

/// Choi Frobenius distance between a circuit's channel and `target`.
pub fn circuit_distance(c: &Circuit, target: &KrausSet) -> Result<f64> {
    let implemented = circuit_to_kraus(c)?;
    choi_from_kraus(&implemented).distance(&choi_from_kraus(target))
}

/// Probability of each outcome string for pure input `psi`.
pub fn outcome_distribution(c: &Circuit, psi: &[C64]) -> Result<Vec<f64>> {
    if psi.len() != 1 << c.inputs.len() {
        return Err(Error::ShapeMismatch(format!("input state has length {}, expected {}", psi.len(), 1 << c.inputs.len())));
    }
    let v = CMat::from_vec(psi.len(), 1, psi.to_vec())?;
    Ok(branch_operators(c)?.iter().map(|b| b.op.matmul(&v).frob_norm_sqr()).collect())
}
