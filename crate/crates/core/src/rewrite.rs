//! Channel-preserving peephole passes.

use crate::circuit::{Circuit, Gate, Op};

/// Removes unitary gates acting only on qubits whose future is discarded.
///
/// A backward scan tracks which qubits can still influence an output or a
/// register that some condition reads. TRACE and RESET end a qubit's
/// relevance; MEASURE keeps it relevant only if the register is read.
/// Dropping a conditioned gate can leave a register unread, so the scan is
/// repeated until nothing changes.
pub fn drop_dead_unitaries(c: &Circuit) -> Circuit {
    let mut cur = c.clone();
    loop {
        let next = drop_dead_once(&cur);
        if next.gates.len() == cur.gates.len() {
            return next;
        }
        cur = next;
    }
}

fn drop_dead_once(c: &Circuit) -> Circuit {
    let mut read = vec![false; c.num_cregs];
    for g in &c.gates {
        for &(r, _) in &g.condition {
            read[r] = true;
        }
    }
    let mut live = vec![false; c.num_qubits];
    for &q in &c.outputs {
        live[q] = true;
    }
    let mut keep = vec![true; c.gates.len()];
    for (i, g) in c.gates.iter().enumerate().rev() {
        match g.op {
            Op::Trace { q } | Op::Reset { q } => live[q] = false,
            Op::Measure { q, creg } => live[q] = live[q] || read[creg],
            Op::Cnot { control, target } => {
                if live[control] || live[target] {
                    live[control] = true;
                    live[target] = true;
                } else {
                    keep[i] = false;
                }
            }
            op => {
                let (q, _) = op.qubits();
                keep[i] = live[q];
            }
        }
    }
    let mut out = c.clone();
    out.gates = c.gates.iter().zip(&keep).filter(|(_, &k)| k).map(|(g, _)| g.clone()).collect();
    out
}

/// Finds a CNOT whose control is next touched by a MEASURE; returns the
/// indices of both.
fn find_classicalizable(c: &Circuit) -> Option<(usize, usize)> {
    for (i, g) in c.gates.iter().enumerate() {
        let Op::Cnot { control, .. } = g.op else { continue };
        let next = c.gates[i + 1..].iter().position(|h| h.op.touches(control)).map(|j| i + 1 + j);
        if let Some(j) = next {
            if matches!(c.gates[j].op, Op::Measure { .. }) && c.gates[j].condition.is_empty() {
                return Some((i, j));
            }
        }
    }
    None
}

/// Replaces `CNOT(a→b) … MEASURE a → r` by `MEASURE a → r; IF r=1 X b`,
/// repeated until no such pattern remains.
pub fn classicalize_controls(c: &Circuit) -> Circuit {
    let mut out = c.clone();
    while let Some((i, j)) = find_classicalizable(&out) {
        let cnot = out.gates[i].clone();
        let Op::Cnot { target, .. } = cnot.op else { unreachable!() };
        let measure = out.gates.remove(j);
        let Op::Measure { creg, .. } = measure.op else { unreachable!() };
        let mut condition = cnot.condition;
        condition.push((creg, true));
        out.gates[i] = measure;
        out.gates.insert(i + 1, Gate::conditioned(Op::X { q: target }, condition));
    }
    out
}

/// Both passes alternated until neither changes the circuit.
pub fn optimize(c: &Circuit) -> Circuit {
    let mut cur = c.clone();
    loop {
        let next = drop_dead_unitaries(&classicalize_controls(&cur));
        if next == cur {
            return cur;
        }
        cur = next;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::choi_distance;
    use crate::circuit::{cnot_count, random_circuit};
    use crate::sim::circuit_to_kraus;

    fn same_channel(a: &Circuit, b: &Circuit) -> f64 {
        choi_distance(&circuit_to_kraus(a).unwrap(), &circuit_to_kraus(b).unwrap()).unwrap()
    }

    #[test]
    fn unitary_before_trace_is_removed() {
        let mut c = Circuit::new(2, vec![0, 1], vec![0]);
        c.push(Op::U { q: 1, alpha: 0.1, beta: 0.2, gamma: 0.3, delta: 0.4 });
        c.push(Op::Trace { q: 1 });
        let d = drop_dead_unitaries(&c);
        assert_eq!(d.gates.len(), 1);
        assert!(same_channel(&c, &d) < 1e-12);
    }

    #[test]
    fn cnot_before_tracing_both_is_removed() {
        let mut c = Circuit::new(3, vec![0, 1, 2], vec![2]);
        c.push(Op::Ry { q: 0, theta: 0.7 });
        c.push(Op::Cnot { control: 0, target: 1 });
        c.push(Op::Trace { q: 0 });
        c.push(Op::Trace { q: 1 });
        let d = drop_dead_unitaries(&c);
        assert_eq!(cnot_count(&d).worst_case, 0);
        assert!(same_channel(&c, &d) < 1e-12);
    }

    #[test]
    fn cnot_into_live_target_is_kept() {
        let mut c = Circuit::new(2, vec![0, 1], vec![1]);
        c.push(Op::Ry { q: 0, theta: 0.7 });
        c.push(Op::Cnot { control: 0, target: 1 });
        c.push(Op::Trace { q: 0 });
        let d = drop_dead_unitaries(&c);
        assert_eq!(d, c);
        let mut removed = c.clone();
        removed.gates.remove(1);
        assert!(same_channel(&c, &removed) > 0.1);
    }

    #[test]
    fn measured_register_keeps_qubit_live() {
        let mut c = Circuit::new(2, vec![1], vec![1]);
        c.push(Op::Ry { q: 0, theta: 1.0 });
        let r = c.measure(0);
        c.push_if(&[(r, true)], Op::X { q: 1 });
        assert_eq!(drop_dead_unitaries(&c), c);
    }

    #[test]
    fn control_before_measurement_becomes_classical() {
        let mut c = Circuit::new(2, vec![0, 1], vec![1]);
        c.push(Op::Ry { q: 0, theta: 0.9 });
        c.push(Op::Cnot { control: 0, target: 1 });
        c.push(Op::Rz { q: 1, theta: 0.3 });
        c.measure(0);
        let d = classicalize_controls(&c);
        assert_eq!(cnot_count(&d).worst_case, 0);
        assert_eq!(d.gates[1].op, Op::Measure { q: 0, creg: 0 });
        assert_eq!(d.gates[2], Gate::conditioned(Op::X { q: 1 }, vec![(0, true)]));
        assert!(same_channel(&c, &d) < 1e-12);
        assert_eq!(classicalize_controls(&d), d);
    }

    #[test]
    fn no_pattern_no_change() {
        let mut c = Circuit::new(2, vec![0, 1], vec![0, 1]);
        c.push(Op::Cnot { control: 0, target: 1 });
        c.push(Op::Rx { q: 0, theta: 0.2 });
        assert_eq!(classicalize_controls(&c), c);
        assert_eq!(drop_dead_unitaries(&c), c);
    }

    #[test]
    fn passes_preserve_random_channels() {
        for seed in 0..60 {
            let c = random_circuit(4, 2, 2, 30, true, seed);
            let before = cnot_count(&c).worst_case;
            for pass in [drop_dead_unitaries, classicalize_controls, optimize] {
                let d = pass(&c);
                d.validate().unwrap();
                assert!(same_channel(&c, &d) < 1e-10, "seed {seed}");
                assert!(cnot_count(&d).worst_case <= before);
                assert_eq!(pass(&d), d, "idempotent, seed {seed}");
            }
        }
    }
}
