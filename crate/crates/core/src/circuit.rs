//! Gate-level circuit representation with classical registers.
//!
//! Qubit 0 is the most significant bit of every basis index. Classical
//! registers are single bits, each written by at most one `MEASURE`.

use std::f64::consts::PI;
use std::fmt::{self, Write as _};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{CMat, C64, ZERO};

/// Conjunction of `(register, bit)` tests.
pub type Condition = Vec<(usize, bool)>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Op {
    Rx { q: usize, theta: f64 },
    Ry { q: usize, theta: f64 },
    Rz { q: usize, theta: f64 },
    /// `e^{iα} Rz(β) Ry(γ) Rz(δ)`.
    U { q: usize, alpha: f64, beta: f64, gamma: f64, delta: f64 },
    X { q: usize },
    Cnot { control: usize, target: usize },
    Measure { q: usize, creg: usize },
    /// Returns the qubit to |0⟩ after the measurement that precedes it.
    Reset { q: usize },
    Trace { q: usize },
}

impl Op {
    pub fn qubits(&self) -> (usize, Option<usize>) {
        match *self {
            Op::Cnot { control, target } => (control, Some(target)),
            Op::Rx { q, .. }
            | Op::Ry { q, .. }
            | Op::Rz { q, .. }
            | Op::U { q, .. }
            | Op::X { q }
            | Op::Measure { q, .. }
            | Op::Reset { q }
            | Op::Trace { q } => (q, None),
        }
    }

    pub fn touches(&self, qubit: usize) -> bool {
        let (a, b) = self.qubits();
        a == qubit || b == Some(qubit)
    }

    pub fn is_unitary(&self) -> bool {
        !matches!(self, Op::Measure { .. } | Op::Reset { .. } | Op::Trace { .. })
    }

    /// The 2×2 matrix of a single-qubit unitary op.
    pub fn matrix(&self) -> Option<[[C64; 2]; 2]> {
        match *self {
            Op::Rx { theta, .. } => Some(rx(theta)),
            Op::Ry { theta, .. } => Some(ry(theta)),
            Op::Rz { theta, .. } => Some(rz(theta)),
            Op::U { alpha, beta, gamma, delta, .. } => Some(zyz_matrix(alpha, beta, gamma, delta)),
            Op::X { .. } => Some([[ZERO, C64::new(1.0, 0.0)], [C64::new(1.0, 0.0), ZERO]]),
            _ => None,
        }
    }

    fn angles_finite(&self) -> bool {
        match *self {
            Op::Rx { theta, .. } | Op::Ry { theta, .. } | Op::Rz { theta, .. } => theta.is_finite(),
            Op::U { alpha, beta, gamma, delta, .. } => {
                alpha.is_finite() && beta.is_finite() && gamma.is_finite() && delta.is_finite()
            }
            _ => true,
        }
    }

    /// Same op with every qubit index passed through `f`.
    pub fn remap(&self, f: impl Fn(usize) -> usize) -> Op {
        let mut op = *self;
        match &mut op {
            Op::Cnot { control, target } => {
                *control = f(*control);
                *target = f(*target);
            }
            Op::Rx { q, .. }
            | Op::Ry { q, .. }
            | Op::Rz { q, .. }
            | Op::U { q, .. }
            | Op::X { q }
            | Op::Measure { q, .. }
            | Op::Reset { q }
            | Op::Trace { q } => *q = f(*q),
        }
        op
    }

    /// Inverse of a unitary op.
    pub fn inverse(&self) -> Option<Op> {
        Some(match *self {
            Op::Rx { q, theta } => Op::Rx { q, theta: -theta },
            Op::Ry { q, theta } => Op::Ry { q, theta: -theta },
            Op::Rz { q, theta } => Op::Rz { q, theta: -theta },
            Op::U { q, alpha, beta, gamma, delta } => {
                Op::U { q, alpha: -alpha, beta: -delta, gamma: -gamma, delta: -beta }
            }
            op @ (Op::X { .. } | Op::Cnot { .. }) => op,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gate {
    pub op: Op,
    pub condition: Condition,
}

impl Gate {
    pub fn new(op: Op) -> Self {
        Gate { op, condition: Vec::new() }
    }

    pub fn conditioned(op: Op, condition: Condition) -> Self {
        Gate { op, condition }
    }

    /// Whether the condition holds under a (possibly partial) register assignment.
    pub fn fires(&self, regs: &[Option<bool>]) -> bool {
        self.condition.iter().all(|&(r, b)| regs.get(r).copied().flatten() == Some(b))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    pub num_qubits: usize,
    pub num_cregs: usize,
    pub inputs: Vec<usize>,
    pub outputs: Vec<usize>,
    pub gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(num_qubits: usize, inputs: Vec<usize>, outputs: Vec<usize>) -> Self {
        Circuit { num_qubits, num_cregs: 0, inputs, outputs, gates: Vec::new() }
    }

    pub fn push(&mut self, op: Op) {
        self.gates.push(Gate::new(op));
    }

    pub fn push_if(&mut self, condition: &[(usize, bool)], op: Op) {
        self.gates.push(Gate::conditioned(op, condition.to_vec()));
    }

    /// Measures `q` into a freshly allocated register and returns its index.
    pub fn measure(&mut self, q: usize) -> usize {
        let creg = self.num_cregs;
        self.num_cregs += 1;
        self.push(Op::Measure { q, creg });
        creg
    }

    /// Appends `ops` with qubit `i` mapped to `map[i]`, all under `condition`.
    pub fn extend_mapped(&mut self, gates: &[Gate], map: &[usize], condition: &[(usize, bool)]) {
        for g in gates {
            let mut cond = condition.to_vec();
            cond.extend_from_slice(&g.condition);
            self.gates.push(Gate::conditioned(g.op.remap(|q| map[q]), cond));
        }
    }

    pub fn measurement_count(&self) -> usize {
        self.gates.iter().filter(|g| matches!(g.op, Op::Measure { .. })).count()
    }

    pub fn is_unitary(&self) -> bool {
        self.gates.iter().all(|g| g.op.is_unitary() && g.condition.is_empty())
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.num_qubits;
        let bad = |msg: String| Err(Error::InvalidCircuit(msg));
        for (name, list) in [("input", &self.inputs), ("output", &self.outputs)] {
            let mut seen = vec![false; p];
            for &q in list.iter() {
                if q >= p {
                    return bad(format!("{name} qubit q{q} out of range"));
                }
                if std::mem::replace(&mut seen[q], true) {
                    return bad(format!("duplicate {name} qubit q{q}"));
                }
            }
        }
        let mut written = vec![false; self.num_cregs];
        let mut traced = vec![false; p];
        // qubit -> index of the last gate touching it
        let mut last: Vec<Option<usize>> = vec![None; p];
        for (i, g) in self.gates.iter().enumerate() {
            let at = |msg: String| bad(format!("gate {i}: {msg}"));
            let (a, b) = g.op.qubits();
            for q in std::iter::once(a).chain(b) {
                if q >= p {
                    return at(format!("qubit q{q} out of range"));
                }
                if traced[q] {
                    return at(format!("q{q} used after TRACE"));
                }
            }
            if b == Some(a) {
                return at("CNOT control equals target".into());
            }
            if !g.op.angles_finite() {
                return at("non-finite angle".into());
            }
            for &(r, _) in &g.condition {
                if r >= self.num_cregs {
                    return at(format!("condition on unknown register c{r}"));
                }
                if !written[r] {
                    return at(format!("condition on unwritten register c{r}"));
                }
            }
            match g.op {
                Op::Measure { .. } | Op::Reset { .. } | Op::Trace { .. } if !g.condition.is_empty() => {
                    return at("MEASURE/RESET/TRACE cannot be conditioned".into());
                }
                Op::Measure { creg, .. } => {
                    if creg >= self.num_cregs {
                        return at(format!("register c{creg} out of range"));
                    }
                    if std::mem::replace(&mut written[creg], true) {
                        return at(format!("register c{creg} written twice"));
                    }
                }
                Op::Reset { q } => {
                    let prev = last[q].map(|j| self.gates[j].op);
                    if !matches!(prev, Some(Op::Measure { .. })) {
                        return at(format!("RESET q{q} not preceded by a MEASURE of q{q}"));
                    }
                }
                Op::Trace { q } => {
                    if self.outputs.contains(&q) {
                        return at(format!("output qubit q{q} traced"));
                    }
                    traced[q] = true;
                }
                _ => {}
            }
            last[a] = Some(i);
            if let Some(b) = b {
                last[b] = Some(i);
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CnotCount {
    pub worst_case: usize,
    pub per_branch_uniform: bool,
}

/// CNOTs executed, maximized over assignments of the registers that
/// conditions read.
pub fn cnot_count(c: &Circuit) -> CnotCount {
    let mut read: Vec<usize> = c.gates.iter().flat_map(|g| g.condition.iter().map(|&(r, _)| r)).collect();
    read.sort_unstable();
    read.dedup();
    let cnots: Vec<&Gate> = c.gates.iter().filter(|g| matches!(g.op, Op::Cnot { .. })).collect();
    if read.is_empty() {
        return CnotCount { worst_case: cnots.len(), per_branch_uniform: true };
    }
    let mut regs = vec![None; c.num_cregs];
    let mut worst = 0;
    let mut first = None;
    let mut uniform = true;
    for assignment in 0u64..(1 << read.len()) {
        for (i, &r) in read.iter().enumerate() {
            regs[r] = Some(assignment >> i & 1 == 1);
        }
        let count = cnots.iter().filter(|g| g.fires(&regs)).count();
        worst = worst.max(count);
        match first {
            None => first = Some(count),
            Some(f) if f != count => uniform = false,
            _ => {}
        }
    }
    CnotCount { worst_case: worst, per_branch_uniform: uniform }
}

pub fn rx(theta: f64) -> [[C64; 2]; 2] {
    let (s, c) = (theta / 2.0).sin_cos();
    [[C64::new(c, 0.0), C64::new(0.0, -s)], [C64::new(0.0, -s), C64::new(c, 0.0)]]
}

pub fn ry(theta: f64) -> [[C64; 2]; 2] {
    let (s, c) = (theta / 2.0).sin_cos();
    [[C64::new(c, 0.0), C64::new(-s, 0.0)], [C64::new(s, 0.0), C64::new(c, 0.0)]]
}

pub fn rz(theta: f64) -> [[C64; 2]; 2] {
    [[C64::from_polar(1.0, -theta / 2.0), ZERO], [ZERO, C64::from_polar(1.0, theta / 2.0)]]
}

/// `e^{iα} Rz(β) Ry(γ) Rz(δ)` in closed form.
pub fn zyz_matrix(alpha: f64, beta: f64, gamma: f64, delta: f64) -> [[C64; 2]; 2] {
    let (s, c) = (gamma / 2.0).sin_cos();
    let e = |phi: f64| C64::from_polar(1.0, phi);
    [
        [e(alpha - (beta + delta) / 2.0) * c, -e(alpha - (beta - delta) / 2.0) * s],
        [e(alpha + (beta - delta) / 2.0) * s, e(alpha + (beta + delta) / 2.0) * c],
    ]
}

pub fn zyz_reconstruct(angles: (f64, f64, f64, f64)) -> CMat {
    let m = zyz_matrix(angles.0, angles.1, angles.2, angles.3);
    CMat::from_rows(&[m[0].to_vec(), m[1].to_vec()])
}

/// Wraps into (−π, π] and reports how many 2π shifts were made.
fn wrap_counting(x: f64) -> (f64, u32) {
    let mut w = x;
    let mut shifts = 0;
    while w > PI {
        w -= 2.0 * PI;
        shifts += 1;
    }
    while w <= -PI {
        w += 2.0 * PI;
        shifts += 1;
    }
    (w, shifts)
}

pub fn wrap_angle(x: f64) -> f64 {
    wrap_counting(x).0
}

/// Angles `(α, β, γ, δ)` with `u = e^{iα} Rz(β) Ry(γ) Rz(δ)`, `γ ∈ [0, π]`,
/// the others in (−π, π]; for `γ ∈ {0, π}`, `δ = 0`.
pub fn zyz_decompose(u: &CMat) -> Result<(f64, f64, f64, f64)> {
    if u.shape() != (2, 2) {
        return Err(Error::ShapeMismatch(format!("expected 2x2, got {}x{}", u.rows(), u.cols())));
    }
    let residual = (&u.adjoint().matmul(u) - &CMat::identity(2)).frob_norm();
    if residual > 1e-10 {
        return Err(Error::NonUnitary { residual });
    }
    let det = u[(0, 0)] * u[(1, 1)] - u[(0, 1)] * u[(1, 0)];
    let mut alpha = det.arg() / 2.0;
    let phase = C64::from_polar(1.0, -alpha);
    let (v00, v10) = (u[(0, 0)] * phase, u[(1, 0)] * phase);
    let gamma = 2.0 * v10.norm().atan2(v00.norm());
    const EPS: f64 = 1e-12;
    let (beta, delta) = if v10.norm() < EPS {
        (-2.0 * v00.arg(), 0.0)
    } else if v00.norm() < EPS {
        (2.0 * v10.arg(), 0.0)
    } else {
        let sum = -2.0 * v00.arg();
        let diff = 2.0 * v10.arg();
        ((sum + diff) / 2.0, (sum - diff) / 2.0)
    };
    let (beta, sb) = wrap_counting(beta);
    let (delta, sd) = wrap_counting(delta);
    alpha += PI * f64::from(sb + sd);
    Ok((wrap_angle(alpha), beta, gamma, delta))
}

// ---------------------------------------------------------------------------
// Text format

impl fmt::Display for Circuit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&serialize(self))
    }
}

fn qubit_list(qs: &[usize]) -> String {
    qs.iter().map(|q| format!(" q{q}")).collect()
}

pub fn serialize(c: &Circuit) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "QUBITS {}", c.num_qubits);
    let _ = writeln!(s, "CREGS {}", c.num_cregs);
    let _ = writeln!(s, "INPUTS{}", qubit_list(&c.inputs));
    let _ = writeln!(s, "OUTPUTS{}", qubit_list(&c.outputs));
    for g in &c.gates {
        if !g.condition.is_empty() {
            let cond: Vec<String> = g.condition.iter().map(|&(r, b)| format!("c{r}={}", u8::from(b))).collect();
            let _ = write!(s, "IF {} ", cond.join(","));
        }
        let _ = match g.op {
            Op::Rx { q, theta } => writeln!(s, "RX q{q} {theta:.16e}"),
            Op::Ry { q, theta } => writeln!(s, "RY q{q} {theta:.16e}"),
            Op::Rz { q, theta } => writeln!(s, "RZ q{q} {theta:.16e}"),
            Op::U { q, alpha, beta, gamma, delta } => {
                writeln!(s, "U q{q} {alpha:.16e} {beta:.16e} {gamma:.16e} {delta:.16e}")
            }
            Op::X { q } => writeln!(s, "X q{q}"),
            Op::Cnot { control, target } => writeln!(s, "CNOT q{control} q{target}"),
            Op::Measure { q, creg } => writeln!(s, "MEASURE q{q} c{creg}"),
            Op::Reset { q } => writeln!(s, "RESET q{q}"),
            Op::Trace { q } => writeln!(s, "TRACE q{q}"),
        };
    }
    s
}

fn parse_index(tok: &str, prefix: char, line: usize) -> Result<usize> {
    tok.strip_prefix(prefix)
        .and_then(|d| d.parse().ok())
        .ok_or_else(|| Error::Parse { line, reason: format!("expected {prefix}<index>, got '{tok}'") })
}

fn parse_angle(tok: &str, line: usize) -> Result<f64> {
    match tok.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(Error::Parse { line, reason: format!("bad angle '{tok}'") }),
    }
}

fn parse_condition(spec: &str, line: usize) -> Result<Condition> {
    spec.split(',')
        .map(|term| {
            let (reg, bit) = term
                .split_once('=')
                .ok_or_else(|| Error::Parse { line, reason: format!("bad condition '{term}'") })?;
            let r = parse_index(reg, 'c', line)?;
            let b = match bit {
                "0" => false,
                "1" => true,
                _ => return Err(Error::Parse { line, reason: format!("condition bit must be 0 or 1, got '{bit}'") }),
            };
            Ok((r, b))
        })
        .collect()
}

fn parse_op(toks: &[&str], line: usize) -> Result<Op> {
    let arity = |n: usize| {
        if toks.len() == n + 1 {
            Ok(())
        } else {
            Err(Error::Parse { line, reason: format!("{} takes {n} operands", toks[0]) })
        }
    };
    let q = |i: usize| parse_index(toks[i], 'q', line);
    let a = |i: usize| parse_angle(toks[i], line);
    Ok(match toks[0] {
        "RX" => {
            arity(2)?;
            Op::Rx { q: q(1)?, theta: a(2)? }
        }
        "RY" => {
            arity(2)?;
            Op::Ry { q: q(1)?, theta: a(2)? }
        }
        "RZ" => {
            arity(2)?;
            Op::Rz { q: q(1)?, theta: a(2)? }
        }
        "U" => {
            arity(5)?;
            Op::U { q: q(1)?, alpha: a(2)?, beta: a(3)?, gamma: a(4)?, delta: a(5)? }
        }
        "X" => {
            arity(1)?;
            Op::X { q: q(1)? }
        }
        "CNOT" => {
            arity(2)?;
            Op::Cnot { control: q(1)?, target: q(2)? }
        }
        "MEASURE" => {
            arity(2)?;
            Op::Measure { q: q(1)?, creg: parse_index(toks[2], 'c', line)? }
        }
        "RESET" => {
            arity(1)?;
            Op::Reset { q: q(1)? }
        }
        "TRACE" => {
            arity(1)?;
            Op::Trace { q: q(1)? }
        }
        other => return Err(Error::Parse { line, reason: format!("unknown instruction '{other}'") }),
    })
}

fn set_header<T>(line: usize, name: &str, slot: &mut Option<T>, value: T) -> Result<()> {
    if slot.is_some() {
        return Err(Error::Parse { line, reason: format!("duplicate {name} header") });
    }
    *slot = Some(value);
    Ok(())
}

pub fn parse(text: &str) -> Result<Circuit> {
    let mut qubits = None;
    let mut cregs = None;
    let mut inputs = None;
    let mut outputs = None;
    let mut gates = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let toks: Vec<&str> = content.split_whitespace().collect();
        match toks[0] {
            "QUBITS" | "CREGS" => {
                if toks.len() != 2 {
                    return Err(Error::Parse { line, reason: format!("{} takes one integer", toks[0]) });
                }
                let v: usize = toks[1]
                    .parse()
                    .map_err(|_| Error::Parse { line, reason: format!("bad count '{}'", toks[1]) })?;
                if toks[0] == "QUBITS" {
                    set_header(line, toks[0], &mut qubits, v)?;
                } else {
                    set_header(line, toks[0], &mut cregs, v)?;
                }
            }
            "INPUTS" | "OUTPUTS" => {
                let list = toks[1..].iter().map(|t| parse_index(t, 'q', line)).collect::<Result<Vec<_>>>()?;
                if toks[0] == "INPUTS" {
                    set_header(line, toks[0], &mut inputs, list)?;
                } else {
                    set_header(line, toks[0], &mut outputs, list)?;
                }
            }
            _ => {
                if qubits.is_none() || cregs.is_none() || inputs.is_none() || outputs.is_none() {
                    return Err(Error::Parse { line, reason: "instruction before all headers".into() });
                }
                let (condition, rest) = if toks[0] == "IF" {
                    if toks.len() < 3 {
                        return Err(Error::Parse { line, reason: "IF without instruction".into() });
                    }
                    (parse_condition(toks[1], line)?, &toks[2..])
                } else {
                    (Vec::new(), &toks[..])
                };
                gates.push(Gate::conditioned(parse_op(rest, line)?, condition));
            }
        }
    }
    let missing = |what: &str| Error::Parse { line: text.lines().count(), reason: format!("missing {what} header") };
    let c = Circuit {
        num_qubits: qubits.ok_or_else(|| missing("QUBITS"))?,
        num_cregs: cregs.ok_or_else(|| missing("CREGS"))?,
        inputs: inputs.ok_or_else(|| missing("INPUTS"))?,
        outputs: outputs.ok_or_else(|| missing("OUTPUTS"))?,
        gates,
    };
    c.validate()?;
    Ok(c)
}

// ---------------------------------------------------------------------------
// Random circuits for fuzzing and benchmarks

/// A valid random circuit on `p` qubits with the first `m` as inputs and
/// `n` outputs; includes measurements, resets, conditions and traces when
/// `measured` is set.
pub fn random_circuit(p: usize, m: usize, n: usize, num_gates: usize, measured: bool, seed: u64) -> Circuit {
    assert!(m <= p && n <= p && p >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut c = Circuit::new(p, (0..m).collect(), Vec::new());
    let angle = |rng: &mut ChaCha8Rng| rng.random_range(-PI..PI);
    for _ in 0..num_gates {
        let q = rng.random_range(0..p);
        let kind = rng.random_range(0..if measured { 9 } else { 6 });
        let op = match kind {
            0 => Op::Rx { q, theta: angle(&mut rng) },
            1 => Op::Ry { q, theta: angle(&mut rng) },
            2 => Op::Rz { q, theta: angle(&mut rng) },
            3 => Op::U {
                q,
                alpha: angle(&mut rng),
                beta: angle(&mut rng),
                gamma: rng.random_range(0.0..PI),
                delta: angle(&mut rng),
            },
            4 => Op::X { q },
            5 | 6 if p >= 2 => {
                let mut t = rng.random_range(0..p - 1);
                if t >= q {
                    t += 1;
                }
                Op::Cnot { control: q, target: t }
            }
            7 | 8 => {
                c.measure(q);
                if rng.random_bool(0.5) {
                    c.push(Op::Reset { q });
                }
                continue;
            }
            _ => Op::X { q },
        };
        let condition = if c.num_cregs > 0 && rng.random_bool(0.3) {
            let r = rng.random_range(0..c.num_cregs);
            vec![(r, rng.random_bool(0.5))]
        } else {
            Vec::new()
        };
        c.gates.push(Gate::conditioned(op, condition));
    }
    let mut order: Vec<usize> = (0..p).collect();
    for i in (1..p).rev() {
        order.swap(i, rng.random_range(0..=i));
    }
    c.outputs = order[..n].to_vec();
    for &q in &order[n..] {
        if measured && rng.random_bool(0.5) {
            c.push(Op::Trace { q });
        }
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::test_util::{c, random_isometry};

    fn close(a: (f64, f64, f64, f64), b: (f64, f64, f64, f64)) -> bool {
        [(a.0, b.0), (a.1, b.1), (a.2, b.2), (a.3, b.3)].iter().all(|(x, y)| (x - y).abs() < 1e-12)
    }

    #[test]
    fn zyz_examples() {
        assert!(close(zyz_decompose(&CMat::identity(2)).unwrap(), (0.0, 0.0, 0.0, 0.0)));
        let theta = 1.1;
        let m = ry(theta);
        let u = CMat::from_rows(&[m[0].to_vec(), m[1].to_vec()]);
        assert!(close(zyz_decompose(&u).unwrap(), (0.0, 0.0, theta, 0.0)));
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let h = CMat::from_real(2, 2, &[s, s, s, -s]);
        assert!(close(zyz_decompose(&h).unwrap(), (PI / 2.0, 0.0, PI / 2.0, PI)));
        let minus = CMat::identity(2).scale(c(-1.0, 0.0));
        assert!(close(zyz_decompose(&minus).unwrap(), (PI, 0.0, 0.0, 0.0)));
    }

    #[test]
    fn zyz_reconstructs_random_unitaries() {
        for seed in 0..50 {
            let u = random_isometry(2, 2, seed);
            let angles = zyz_decompose(&u).unwrap();
            assert!((&zyz_reconstruct(angles) - &u).frob_norm() < 1e-10);
            assert!((0.0..=PI).contains(&angles.2));
            for a in [angles.0, angles.1, angles.3] {
                assert!(a > -PI && a <= PI);
            }
        }
    }

    #[test]
    fn zyz_rejects_non_unitary() {
        assert!(matches!(
            zyz_decompose(&CMat::from_real(2, 2, &[1.0, 1.0, 0.0, 1.0])),
            Err(Error::NonUnitary { .. })
        ));
    }

    #[test]
    fn cnot_count_examples() {
        let mut c = Circuit::new(2, vec![0, 1], vec![0, 1]);
        assert_eq!(cnot_count(&c), CnotCount { worst_case: 0, per_branch_uniform: true });
        c.push(Op::Cnot { control: 0, target: 1 });
        assert_eq!(cnot_count(&c), CnotCount { worst_case: 1, per_branch_uniform: true });

        let mut c = Circuit::new(3, vec![1, 2], vec![1, 2]);
        c.measure(0);
        c.push_if(&[(0, false)], Op::Cnot { control: 1, target: 2 });
        c.push_if(&[(0, true)], Op::Cnot { control: 2, target: 1 });
        assert_eq!(cnot_count(&c), CnotCount { worst_case: 1, per_branch_uniform: true });
        c.push_if(&[(0, true)], Op::Cnot { control: 2, target: 1 });
        assert_eq!(cnot_count(&c), CnotCount { worst_case: 2, per_branch_uniform: false });
    }

    #[test]
    fn every_gate_kind_round_trips() {
        let mut c = Circuit::new(3, vec![1, 2], vec![2]);
        c.push(Op::Rx { q: 0, theta: 0.1 });
        c.push(Op::Ry { q: 1, theta: -1.0 / 3.0 });
        c.push(Op::Rz { q: 2, theta: PI });
        c.push(Op::U { q: 0, alpha: 1e-300, beta: -0.0, gamma: 2.5, delta: 1.0 / 7.0 });
        c.push(Op::X { q: 1 });
        c.push(Op::Cnot { control: 2, target: 0 });
        c.measure(0);
        c.push(Op::Reset { q: 0 });
        c.measure(1);
        c.push_if(&[(0, true), (1, false)], Op::X { q: 2 });
        c.push(Op::Trace { q: 0 });
        let text = serialize(&c);
        assert_eq!(parse(&text).unwrap(), c);
        assert!(text.contains("IF c0=1,c1=0 X q2"));
    }

    #[test]
    fn empty_circuit_is_header_only() {
        let c = Circuit::new(1, vec![0], vec![0]);
        let text = serialize(&c);
        assert_eq!(text, "QUBITS 1\nCREGS 0\nINPUTS q0\nOUTPUTS q0\n");
        assert_eq!(parse(&text).unwrap(), c);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let cases = [
            ("QUBITS 2\nCREGS 0\nINPUTS q0\nOUTPUTS q0\nFOO q1\n", 5),
            ("QUBITS 2\nCREGS 0\nINPUTS q0\nOUTPUTS q0\n# comment\nRX q1\n", 6),
            ("QUBITS 2\nCNOT q0 q1\n", 2),
            ("QUBITS 2\nCREGS 0\nINPUTS q0\nOUTPUTS q0\nRY q1 abc\n", 5),
            ("QUBITS 2\nCREGS 1\nINPUTS q0\nOUTPUTS q0\nIF c0=2 X q1\n", 5),
            ("QUBITS x\n", 1),
        ];
        for (text, expect) in cases {
            match parse(text) {
                Err(Error::Parse { line, .. }) => assert_eq!(line, expect, "{text}"),
                other => panic!("expected parse error for {text:?}, got {other:?}"),
            }
        }
    }

    #[test]
    fn validation_rejects_bad_circuits() {
        let base = || Circuit::new(2, vec![0], vec![0]);
        let mut c = base();
        c.push(Op::Cnot { control: 1, target: 1 });
        assert!(c.validate().is_err());
        let mut c = base();
        c.push(Op::Reset { q: 1 });
        assert!(c.validate().is_err());
        let mut c = base();
        c.push(Op::Trace { q: 1 });
        c.push(Op::X { q: 1 });
        assert!(c.validate().is_err());
        let mut c = base();
        c.push(Op::Trace { q: 0 });
        assert!(c.validate().is_err());
        let mut c = base();
        c.measure(1);
        c.gates.push(Gate::new(Op::Measure { q: 1, creg: 0 }));
        assert!(c.validate().is_err());
        let mut c = base();
        c.num_cregs = 1;
        c.push_if(&[(0, true)], Op::X { q: 1 });
        assert!(c.validate().is_err());
        let mut c = base();
        c.push(Op::Rx { q: 0, theta: f64::NAN });
        assert!(c.validate().is_err());
        let mut c = base();
        c.measure(1);
        c.push_if(&[(0, true)], Op::Reset { q: 1 });
        assert!(c.validate().is_err());
    }

    #[test]
    fn random_circuits_are_valid_and_round_trip() {
        for seed in 0..40 {
            let c = random_circuit(4, 2, 2, 30, seed % 2 == 0, seed);
            c.validate().unwrap();
            assert_eq!(parse(&serialize(&c)).unwrap(), c);
        }
    }

    #[test]
    fn inverse_ops_invert() {
        let op = Op::U { q: 0, alpha: 0.3, beta: 1.2, gamma: 0.7, delta: -2.0 };
        let a = op.matrix().unwrap();
        let b = op.inverse().unwrap().matrix().unwrap();
        let prod = CMat::from_rows(&[b[0].to_vec(), b[1].to_vec()]).matmul(&CMat::from_rows(&[a[0].to_vec(), a[1].to_vec()]));
        assert!((&prod - &CMat::identity(2)).frob_norm() < 1e-14);
    }
}
