//! Isometry synthesis into CNOT + single-qubit gates.
//!
//! Columns are reduced one at a time onto basis vectors by ladders of
//! multiplexed rotations; the leftover diagonal is synthesized separately and
//! the whole reduction is inverted.

use crate::circuit::{ry, rz, zyz_decompose, Circuit, Gate, Op};
use crate::error::{Error, Result};
use crate::linalg::{complete_to_unitary, CMat, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Y,
    Z,
}

impl Axis {
    fn op(self, q: usize, theta: f64) -> Op {
        match self {
            Axis::Y => Op::Ry { q, theta },
            Axis::Z => Op::Rz { q, theta },
        }
    }

    fn matrix(self, theta: f64) -> [[C64; 2]; 2] {
        match self {
            Axis::Y => ry(theta),
            Axis::Z => rz(theta),
        }
    }
}

fn gray(i: usize) -> usize {
    i ^ (i >> 1)
}

/// Uniformly controlled rotation: applies `R_axis(angles[s])` to `target`
/// when the controls read `s` (with `controls[0]` most significant).
pub fn multiplexed_rotation(axis: Axis, controls: &[usize], target: usize, angles: &[f64]) -> Result<Vec<Op>> {
    let c = controls.len();
    if angles.len() != 1 << c {
        return Err(Error::ShapeMismatch(format!("{} angles for {c} controls", angles.len())));
    }
    if controls.contains(&target) {
        return Err(Error::IndexOutOfRange(format!("target q{target} is also a control")));
    }
    if c == 0 {
        return Ok(vec![axis.op(target, angles[0])]);
    }
    let size = 1usize << c;
    let mut ops = Vec::with_capacity(2 * size);
    for i in 0..size {
        let g = gray(i);
        let phi: f64 = angles
            .iter()
            .enumerate()
            .map(|(s, &theta)| if (s & g).count_ones().is_multiple_of(2) { theta } else { -theta })
            .sum::<f64>()
            / size as f64;
        ops.push(axis.op(target, phi));
        let changed = g ^ gray((i + 1) % size);
        let bit = changed.trailing_zeros() as usize;
        ops.push(Op::Cnot { control: controls[c - 1 - bit], target });
    }
    Ok(ops)
}

/// A multiplexed `Rz` followed by a multiplexed `Ry` on the same controls,
/// with the adjacent CNOT pair at the seam cancelled.
fn rz_then_ry(controls: &[usize], target: usize, z: &[f64], y: &[f64]) -> Vec<Op> {
    let mut ops = multiplexed_rotation(Axis::Z, controls, target, z).expect("valid mux");
    let mut tail = multiplexed_rotation(Axis::Y, controls, target, y).expect("valid mux");
    tail.reverse();
    if controls.is_empty() {
        ops.extend(tail);
    } else {
        ops.pop();
        ops.extend(tail.into_iter().skip(1));
    }
    ops
}

fn mux_cnots(c: usize) -> usize {
    if c == 0 {
        0
    } else {
        1 << c
    }
}

/// How one reduction step is controlled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Controls {
    Skip,
    /// Qubits above the target only.
    High,
    /// Every other qubit.
    All,
}

/// Control structure of the step clearing bit `b` of column `j` on `n`
/// qubits. Depends only on `(j, b, n)`, so counts are input independent.
fn step_kind(j: usize, b: usize, n: usize) -> Controls {
    let jb = j >> b & 1 == 1;
    let j_low = j & ((1 << b) - 1);
    let j_high = j >> (b + 1);
    let high_bits = n - 1 - b;
    if jb && j_high == (1 << high_bits) - 1 {
        Controls::Skip
    } else if jb || j_low == 0 {
        Controls::High
    } else {
        Controls::All
    }
}

fn step_cnots(kind: Controls, b: usize, n: usize) -> usize {
    let c = match kind {
        Controls::Skip => return 0,
        Controls::High => n - 1 - b,
        Controls::All => n - 1,
    };
    if c == 0 {
        0
    } else {
        2 * mux_cnots(c) - 2
    }
}

/// CNOTs emitted by [`decompose_isometry`] for an `m → n` qubit isometry.
pub fn isometry_cnots(m: usize, n: usize) -> usize {
    assert!(m <= n, "isometry must not shrink: {m} -> {n}");
    if n <= 1 {
        return 0;
    }
    let columns = if m == n { (1 << n) - 1 } else { 1 << m };
    let reduce: usize = (0..columns).map(|j| (0..n).map(|b| step_cnots(step_kind(j, b, n), b, n)).sum::<usize>()).sum();
    let diagonal = if m == 0 { 0 } else { (1 << m) - 2 };
    reduce + diagonal
}

/// Predicted CNOT count of an `m → n` qubit isometry.
pub trait IsoCostModel {
    fn n_iso(&self, m: usize, n: usize) -> usize;
}

/// Exact counts of this module's synthesizer.
#[derive(Debug, Clone, Copy, Default)]
pub struct BuiltinCost;

impl IsoCostModel for BuiltinCost {
    fn n_iso(&self, m: usize, n: usize) -> usize {
        isometry_cnots(m, n)
    }
}

const TINY: f64 = 1e-12;

/// Applies the block-diagonal rotation selected by `pattern(idx)` on `target`.
fn apply_mux(a: &mut CMat, n: usize, target: usize, axis: Axis, angle_of: impl Fn(usize) -> f64) {
    let cols = a.cols();
    let tmask = 1usize << (n - 1 - target);
    for r0 in (0..1usize << n).filter(|r| r & tmask == 0) {
        let theta = angle_of(r0);
        if theta == 0.0 {
            continue;
        }
        let m = axis.matrix(theta);
        let r1 = r0 | tmask;
        for col in 0..cols {
            let (x, y) = (a[(r0, col)], a[(r1, col)]);
            a[(r0, col)] = m[0][0] * x + m[0][1] * y;
            a[(r1, col)] = m[1][0] * x + m[1][1] * y;
        }
    }
}

/// Removes bit `b` (counted from the least significant end) from `idx`.
fn drop_bit(idx: usize, b: usize) -> usize {
    ((idx >> (b + 1)) << b) | (idx & ((1 << b) - 1))
}

/// Diagonal `diag(e^{iχ_j})` on `qubits` (most significant first).
fn diagonal_ops(phases: &[f64], qubits: &[usize], phase_qubit: usize) -> Vec<Op> {
    let mut ops = Vec::new();
    let mut chi = phases.to_vec();
    let mut qs = qubits.to_vec();
    while let Some(target) = qs.pop() {
        let half = chi.len() / 2;
        let theta: Vec<f64> = (0..half).map(|s| chi[2 * s + 1] - chi[2 * s]).collect();
        ops.extend(multiplexed_rotation(Axis::Z, &qs, target, &theta).expect("valid mux"));
        chi = (0..half).map(|s| (chi[2 * s] + chi[2 * s + 1]) / 2.0).collect();
    }
    ops.push(Op::U { q: phase_qubit, alpha: chi[0], beta: 0.0, gamma: 0.0, delta: 0.0 });
    ops
}

/// Circuit on `n` qubits whose last `m` qubits carry the input and whose
/// first `n − m` start in |0⟩, implementing `v` up to global phase.
pub fn decompose_isometry(v: &CMat) -> Result<Circuit> {
    let (rows, cols) = v.shape();
    if !rows.is_power_of_two() || !cols.is_power_of_two() {
        return Err(Error::ShapeMismatch(format!("{rows}x{cols} is not 2^n x 2^m")));
    }
    if rows < cols {
        return Err(Error::NonTall { rows, cols });
    }
    let residual = v.isometry_residual();
    if residual > 1e-9 {
        return Err(Error::NotIsometry { residual });
    }
    let n = rows.trailing_zeros() as usize;
    let m = cols.trailing_zeros() as usize;
    let mut circuit = Circuit::new(n.max(1), (n - m..n).collect(), (0..n).collect());
    if n == 0 {
        return Ok(circuit);
    }
    if n == 1 {
        let u = complete_to_unitary(v)?;
        let (alpha, beta, gamma, delta) = zyz_decompose(&u)?;
        circuit.push(Op::U { q: 0, alpha, beta, gamma, delta });
        return Ok(circuit);
    }

    let mut a = v.clone();
    let mut forward: Vec<Op> = Vec::new();
    let columns = if m == n { (1 << n) - 1 } else { 1 << m };
    for j in 0..columns {
        for b in 0..n {
            let kind = step_kind(j, b, n);
            if kind == Controls::Skip {
                continue;
            }
            let t = n - 1 - b;
            let j_low = j & ((1 << b) - 1);
            let j_high = j >> (b + 1);
            let jb = j >> b & 1 == 1;
            let bit = 1usize << b;
            let active = |r0: usize| {
                let h = r0 >> (b + 1);
                (r0 & (bit - 1)) == j_low && (h > j_high || (h == j_high && !jb))
            };
            let controls: Vec<usize> = match kind {
                Controls::High => (0..t).collect(),
                _ => (0..n).filter(|&q| q != t).collect(),
            };
            let pattern = |r0: usize| match kind {
                Controls::High => r0 >> (b + 1),
                _ => drop_bit(r0, b),
            };
            // representative row (bit b clear) for every control pattern
            let npat = 1usize << controls.len();
            let mut z = vec![0.0; npat];
            let mut y = vec![0.0; npat];
            for r0 in (0..1usize << n).filter(|r| r & bit == 0) {
                if !active(r0) {
                    continue;
                }
                let (a0, a1) = (a[(r0, j)], a[(r0 | bit, j)]);
                let (r0n, r1n) = (a0.norm(), a1.norm());
                let s = pattern(r0);
                if r0n >= TINY && r1n >= TINY {
                    z[s] = a0.arg() - a1.arg();
                }
                if r0n >= TINY || r1n >= TINY {
                    y[s] = if jb { 2.0 * r0n.atan2(r1n) } else { -2.0 * r1n.atan2(r0n) };
                }
            }
            apply_mux(&mut a, n, t, Axis::Z, |r0| z[pattern(r0)]);
            apply_mux(&mut a, n, t, Axis::Y, |r0| y[pattern(r0)]);
            forward.extend(rz_then_ry(&controls, t, &z, &y));
        }
    }

    let phases: Vec<f64> = (0..cols).map(|j| a[(j, j)].arg()).collect();
    let input_qubits: Vec<usize> = (n - m..n).collect();
    for op in diagonal_ops(&phases, &input_qubits, 0) {
        circuit.push(op);
    }
    for op in forward.iter().rev() {
        circuit.gates.push(Gate::new(op.inverse().expect("unitary op")));
    }
    Ok(circuit)
}
