//! Channel compilation pipelines.
//!
//! * [`compile_qcm`]: Stinespring isometry followed by tracing out the
//!   environment.
//! * [`compile_random_qcm`]: one such circuit per component of a convex
//!   mixture, to be run with the component's probability.
//! * [`compile_measured`]: the environment is peeled off one qubit at a time
//!   by recursive QR, measuring a single reused ancilla and steering later
//!   gates by the recorded outcomes.

use crate::channel::{
    choi_from_kraus, kraus_rank, stinespring_isometry_with, DilationIsometry, DilationOptions, KrausSet, RANK_TOLERANCE,
};
use crate::circuit::{Circuit, Op};
use crate::error::{Error, Result};
use crate::linalg::{qr_rectangular, CMat};
use crate::par;
use crate::sim::circuit_to_kraus;
use crate::synth::{decompose_isometry, IsoCostModel};

/// Outcome prefix `s` of length `len` as register conditions; the first
/// outcome is the most significant bit of `s`.
fn prefix_condition(s: usize, len: usize) -> Vec<(usize, bool)> {
    (0..len).map(|i| (i, s >> (len - 1 - i) & 1 == 1)).collect()
}

#[derive(Debug, Clone)]
pub struct CompilePlan {
    pub m: usize,
    pub n: usize,
    pub k: usize,
    pub l: usize,
    pub k_tilde: usize,
    /// `stages[i][s]` is the `2^{m+1} × 2^m` isometry applied in round `i + 1`
    /// after outcome prefix `s`.
    pub stages: Vec<Vec<CMat>>,
    /// `finals[s]`, indexed by the full `k_tilde`-bit prefix.
    pub finals: Vec<CMat>,
    pub final_measure_count: usize,
    pub dilation: DilationIsometry,
}

impl CompilePlan {
    /// `n + k = m`: the dilation is a unitary on the input qubits.
    pub fn is_square(&self) -> bool {
        self.k > 0 && self.n + self.k == self.m
    }

    /// Rebuilds the dilation from the stage and final factors.
    pub fn reconstruct(&self) -> CMat {
        let mut level = self.finals.clone();
        for stage in self.stages.iter().rev() {
            level = stage
                .iter()
                .enumerate()
                .map(|(s, g)| {
                    let half = g.rows() / 2;
                    let top = level[2 * s].matmul(&g.submatrix(0, half, 0, g.cols()));
                    let bottom = level[2 * s + 1].matmul(&g.submatrix(half, g.rows(), 0, g.cols()));
                    CMat::vstack(&[top, bottom]).expect("equal widths")
                })
                .collect();
        }
        level.pop().expect("single root")
    }
}

/// Halves `q` by rows and QR-factors each half: returns the stage isometry
/// `[T_0; T_1]` and the two children.
fn split(q: &CMat) -> Result<(CMat, CMat, CMat)> {
    let half = q.rows() / 2;
    let w = q.cols();
    let top = qr_rectangular(&q.submatrix(0, half, 0, w))?;
    let bottom = qr_rectangular(&q.submatrix(half, q.rows(), 0, w))?;
    let g = CMat::vstack(&[top.r.submatrix(0, w, 0, w), bottom.r.submatrix(0, w, 0, w)])?;
    Ok((g, top.q.leading_columns(w), bottom.q.leading_columns(w)))
}

fn check_isometry(v: &CMat, what: &str) -> Result<()> {
    let residual = v.isometry_residual();
    if residual >= 1e-9 {
        return Err(Error::Plan(format!("{what} has isometry residual {residual:.3e}")));
    }
    Ok(())
}

pub fn plan_measured(ks: &KrausSet) -> Result<CompilePlan> {
    plan_measured_with(ks, DilationOptions::default())
}

pub fn plan_measured_with(ks: &KrausSet, opts: DilationOptions) -> Result<CompilePlan> {
    let dilation = stinespring_isometry_with(ks, opts)?;
    let (m, n, k) = (ks.m(), ks.n(), dilation.k);
    if n + k < m {
        return Err(Error::Infeasible(format!("n + k = {} < m = {m}", n + k)));
    }
    let (l, k_tilde) = if m < n { (n - m, k) } else { (1, (n + k).saturating_sub(m + 1)) };
    let square = k > 0 && n + k == m;
    let rounds = if k == 0 || square { 0 } else { k_tilde };
    let mut stages = Vec::with_capacity(rounds);
    let mut level = vec![dilation.v.clone()];
    for round in 0..rounds {
        let splits = par::map_slice(&level, split).into_iter().collect::<Result<Vec<_>>>()?;
        let mut next = Vec::with_capacity(2 * level.len());
        let mut gs = Vec::with_capacity(level.len());
        for (s, (g, q0, q1)) in splits.into_iter().enumerate() {
            check_isometry(&g, &format!("stage {} block {s}", round + 1))?;
            gs.push(g);
            next.push(q0);
            next.push(q1);
        }
        stages.push(gs);
        level = next;
    }
    for (s, f) in level.iter().enumerate() {
        check_isometry(f, &format!("final block {s}"))?;
    }
    let plan = CompilePlan {
        m,
        n,
        k,
        l,
        k_tilde: rounds,
        stages,
        finals: level,
        final_measure_count: k - rounds,
        dilation,
    };
    let err = (&plan.reconstruct() - &plan.dilation.v).frob_norm();
    if err >= 1e-8 {
        return Err(Error::Plan(format!("reconstruction error {err:.3e}")));
    }
    Ok(plan)
}

/// Measured-model circuit on `m + l` qubits. Qubit 0 is the reused ancilla
/// and the last `m` qubits carry the input.
pub fn compile_measured(ks: &KrausSet) -> Result<Circuit> {
    compile_measured_with(ks, DilationOptions::default())
}

pub fn compile_measured_with(ks: &KrausSet, opts: DilationOptions) -> Result<Circuit> {
    let plan = plan_measured_with(ks, opts)?;
    circuit_from_plan(&plan)
}

pub fn circuit_from_plan(plan: &CompilePlan) -> Result<Circuit> {
    let (m, n, k, l) = (plan.m, plan.n, plan.k, plan.l);
    let p = m + l;
    let inputs: Vec<usize> = (l..p).collect();
    let mut c = Circuit::new(p, inputs.clone(), Vec::new());
    c.num_cregs = k;

    if k == 0 || plan.is_square() {
        // the whole dilation at once on the top `m + l` or bottom `m` qubits
        let v = &plan.finals[0];
        let block = decompose_isometry(v)?;
        let offset = p - block.num_qubits;
        let map: Vec<usize> = (0..block.num_qubits).map(|q| q + offset).collect();
        c.extend_mapped(&block.gates, &map, &[]);
        for q in 0..offset {
            c.push(Op::Trace { q });
        }
        for (i, q) in (offset..offset + k).enumerate() {
            c.push(Op::Measure { q, creg: i });
        }
        c.outputs = (p - n..p).collect();
        c.validate()?;
        return Ok(c);
    }

    let mut stage_map = vec![0];
    stage_map.extend(inputs.iter().copied());
    for (i, stage) in plan.stages.iter().enumerate() {
        let blocks = par::map_slice(stage, decompose_isometry).into_iter().collect::<Result<Vec<_>>>()?;
        for (s, block) in blocks.iter().enumerate() {
            c.extend_mapped(&block.gates, &stage_map, &prefix_condition(s, i));
        }
        c.push(Op::Measure { q: 0, creg: i });
        c.push(Op::Reset { q: 0 });
    }
    let finals = par::map_slice(&plan.finals, decompose_isometry).into_iter().collect::<Result<Vec<_>>>()?;
    let final_map: Vec<usize> = (0..p).collect();
    for (s, block) in finals.iter().enumerate() {
        c.extend_mapped(&block.gates, &final_map, &prefix_condition(s, plan.k_tilde));
    }
    for i in 0..plan.final_measure_count {
        c.push(Op::Measure { q: i, creg: plan.k_tilde + i });
    }
    c.outputs = (plan.final_measure_count..p).collect();
    c.validate()?;
    Ok(c)
}

/// Unitary-plus-trace circuit on `n + k` qubits.
pub fn compile_qcm(ks: &KrausSet) -> Result<Circuit> {
    compile_qcm_with(ks, DilationOptions::default())
}

pub fn compile_qcm_with(ks: &KrausSet, opts: DilationOptions) -> Result<Circuit> {
    let d = stinespring_isometry_with(ks, opts)?;
    let block = decompose_isometry(&d.v)?;
    let p = d.n + d.k;
    if p == 0 {
        return Err(Error::Infeasible("channel onto zero qubits".into()));
    }
    let mut c = Circuit::new(p, (p - d.m..p).collect(), (d.k..p).collect());
    c.gates = block.gates;
    for q in 0..d.k {
        c.push(Op::Trace { q });
    }
    c.validate()?;
    Ok(c)
}

/// `Σ_j p_j E_j`.
#[derive(Debug, Clone)]
pub struct ConvexMixture {
    components: Vec<(f64, KrausSet)>,
}

impl ConvexMixture {
    pub fn new(components: Vec<(f64, KrausSet)>) -> Result<Self> {
        let first = components.first().ok_or_else(|| Error::InvalidKraus("empty mixture".into()))?;
        let dims = (first.1.m(), first.1.n());
        let mut total = 0.0;
        for (i, (p, ks)) in components.iter().enumerate() {
            if !(p.is_finite() && *p > 0.0) {
                return Err(Error::InvalidKraus(format!("component {i} has probability {p}")));
            }
            if (ks.m(), ks.n()) != dims {
                return Err(Error::ShapeMismatch(format!("component {i} is {}→{}, expected {}→{}", ks.m(), ks.n(), dims.0, dims.1)));
            }
            total += p;
        }
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidKraus(format!("probabilities sum to {total}")));
        }
        Ok(ConvexMixture { components })
    }

    pub fn components(&self) -> &[(f64, KrausSet)] {
        &self.components
    }

    pub fn m(&self) -> usize {
        self.components[0].1.m()
    }

    pub fn n(&self) -> usize {
        self.components[0].1.n()
    }

    /// The mixed channel as a single Kraus set (`√p_j A` for every operator).
    pub fn to_kraus(&self) -> KrausSet {
        let ops = self
            .components
            .iter()
            .flat_map(|(p, ks)| ks.ops().iter().map(move |a| a.scale(p.sqrt().into())))
            .collect();
        KrausSet::new_unchecked(self.m(), self.n(), ops).expect("shapes checked")
    }
}

pub fn compile_random_qcm(mix: &ConvexMixture) -> Result<Vec<(f64, Circuit)>> {
    let m = mix.m();
    for (i, (_, ks)) in mix.components.iter().enumerate() {
        let r = kraus_rank(ks, RANK_TOLERANCE);
        if r > 1 << m {
            return Err(Error::NotImplementable(format!("component {i} has Kraus rank {r} > 2^{m}")));
        }
    }
    par::map_slice(&mix.components, |(p, ks)| compile_qcm(ks).map(|c| (*p, c))).into_iter().collect()
}

/// Choi distance between `Σ p_j · channel(circuit_j)` and the mixture.
pub fn random_qcm_distance(mix: &ConvexMixture, circuits: &[(f64, Circuit)]) -> Result<f64> {
    let mut ops = Vec::new();
    for (p, c) in circuits {
        let ks = circuit_to_kraus(c)?;
        ops.extend(ks.ops().iter().map(|a| a.scale(p.sqrt().into())));
    }
    let implemented = KrausSet::new_unchecked(mix.m(), mix.n(), ops)?;
    choi_from_kraus(&implemented).distance(&choi_from_kraus(&mix.to_kraus()))
}

/// Worst-case CNOT count of [`compile_measured`] for an `m → n` channel
/// with `k` environment qubits.
pub fn predict_upper_bound(m: usize, n: usize, k: usize, cost: &dyn IsoCostModel) -> usize {
    if k == 0 {
        cost.n_iso(m, n)
    } else if n + k == m {
        cost.n_iso(m, m)
    } else if m < n {
        k * cost.n_iso(m, m + 1) + cost.n_iso(m, n)
    } else {
        (k + n - m) * cost.n_iso(m, m + 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{library, random_channel};
    use crate::circuit::cnot_count;
    use crate::sim::circuit_distance;
    use crate::synth::BuiltinCost;

    #[test]
    fn plan_case_arithmetic() {
        let u = random_channel(2, 2, 1, 1).unwrap();
        let p = plan_measured(&u).unwrap();
        assert_eq!((p.k, p.k_tilde, p.stages.len(), p.finals.len(), p.final_measure_count), (0, 0, 0, 1, 0));

        let r2 = random_channel(1, 1, 2, 2).unwrap();
        let p = plan_measured(&r2).unwrap();
        assert_eq!((p.k, p.l, p.k_tilde, p.final_measure_count), (1, 1, 0, 1));
        assert_eq!(p.finals[0].shape(), (4, 2));

        let r12 = random_channel(1, 2, 2, 3).unwrap();
        let p = plan_measured(&r12).unwrap();
        assert_eq!((p.k, p.l, p.k_tilde, p.final_measure_count), (1, 1, 1, 0));
        assert_eq!(p.stages[0].len(), 1);
        assert_eq!(p.stages[0][0].shape(), (4, 2));
        assert_eq!(p.finals.len(), 2);

        let r = random_channel(2, 1, 8, 4).unwrap();
        let p = plan_measured(&r).unwrap();
        assert_eq!((p.k, p.l, p.k_tilde, p.final_measure_count), (3, 1, 1, 2));
        assert!((&p.reconstruct() - &p.dilation.v).frob_norm() < 1e-10);
    }

    #[test]
    fn measured_examples() {
        let deph = library::dephasing(0.3);
        let c = compile_measured(&deph).unwrap();
        assert_eq!(c.num_qubits, 2);
        assert_eq!(c.measurement_count(), 1);
        assert!(circuit_distance(&c, &deph).unwrap() < 1e-8);

        let r = random_channel(2, 1, 4, 11).unwrap();
        let c = compile_measured(&r).unwrap();
        assert_eq!(c.num_qubits, 3);
        assert_eq!(c.measurement_count(), 2);
        assert!(circuit_distance(&c, &r).unwrap() < 1e-8);

        let id = library::identity(1);
        let c = compile_measured(&id).unwrap();
        assert_eq!(c.measurement_count(), 0);
        assert!(circuit_distance(&c, &id).unwrap() < 1e-8);
    }

    #[test]
    fn measured_square_case() {
        let r = random_channel(2, 1, 2, 5).unwrap();
        let p = plan_measured(&r).unwrap();
        assert!(p.is_square());
        let r = random_channel(2, 1, 3, 5).unwrap();
        assert!(!plan_measured(&r).unwrap().is_square());
        let r = random_channel(3, 1, 4, 5).unwrap();
        let p = plan_measured(&r).unwrap();
        assert!(p.is_square());
        let c = compile_measured(&r).unwrap();
        assert_eq!(c.num_qubits, 4);
        assert_eq!(c.measurement_count(), 2);
        assert!(circuit_distance(&c, &r).unwrap() < 1e-8);
        assert_eq!(cnot_count(&c).worst_case, predict_upper_bound(3, 1, 2, &BuiltinCost));
    }

    #[test]
    fn qcm_examples() {
        let u = random_channel(1, 1, 1, 1).unwrap();
        let c = compile_qcm(&u).unwrap();
        assert!(c.is_unitary());
        let c = compile_qcm(&library::amplitude_damping(0.2)).unwrap();
        assert_eq!(c.num_qubits, 2);
        assert_eq!(c.gates.iter().filter(|g| matches!(g.op, Op::Trace { .. })).count(), 1);
        let dep = library::depolarizing_qubit();
        let c = compile_qcm(&dep).unwrap();
        assert_eq!(c.num_qubits, 3);
        assert_eq!(c.gates.iter().filter(|g| matches!(g.op, Op::Trace { .. })).count(), 2);
        assert!(circuit_distance(&c, &dep).unwrap() < 1e-8);
    }

    #[test]
    fn random_qcm_examples() {
        let u = random_channel(1, 1, 1, 3).unwrap();
        let mix = ConvexMixture::new(vec![(1.0, u)]).unwrap();
        let out = compile_random_qcm(&mix).unwrap();
        assert_eq!(out.len(), 1);
        assert!(out[0].1.is_unitary());

        let flip = KrausSet::unitary(library::pauli('X')).unwrap();
        let mix = ConvexMixture::new(vec![(0.5, library::identity(1)), (0.5, flip)]).unwrap();
        let out = compile_random_qcm(&mix).unwrap();
        assert!(out.iter().all(|(_, c)| cnot_count(c).worst_case == 0));
        assert!(random_qcm_distance(&mix, &out).unwrap() < 1e-8);

        let too_big = random_channel(1, 1, 3, 3).unwrap();
        let mix = ConvexMixture::new(vec![(1.0, too_big)]).unwrap();
        assert!(matches!(compile_random_qcm(&mix), Err(Error::NotImplementable(_))));

        assert!(ConvexMixture::new(vec![(0.5, library::identity(1))]).is_err());
        assert!(ConvexMixture::new(vec![(0.5, library::identity(1)), (0.5, random_channel(1, 2, 1, 0).unwrap())]).is_err());
    }

    #[test]
    fn prediction_cases() {
        struct Fixed;
        impl IsoCostModel for Fixed {
            fn n_iso(&self, m: usize, n: usize) -> usize {
                10 * m + n
            }
        }
        assert_eq!(predict_upper_bound(1, 2, 1, &Fixed), 12 + 12);
        assert_eq!(predict_upper_bound(2, 2, 0, &Fixed), 22);
        assert_eq!(predict_upper_bound(2, 1, 2, &Fixed), 23);
        assert_eq!(predict_upper_bound(3, 1, 2, &Fixed), 33);
    }

    #[test]
    fn counts_match_prediction_and_are_uniform() {
        for (m, n, kr) in [(1, 1, 2), (1, 2, 2), (1, 2, 3), (2, 1, 3), (2, 2, 4), (1, 3, 5), (2, 1, 8), (2, 2, 1)] {
            let ks = random_channel(m, n, kr, (m * 100 + n * 10 + kr) as u64).unwrap();
            let c = compile_measured(&ks).unwrap();
            let k = crate::channel::ceil_log2(kr);
            let count = cnot_count(&c);
            assert!(count.per_branch_uniform, "{m} {n} {kr}");
            assert_eq!(count.worst_case, predict_upper_bound(m, n, k, &BuiltinCost), "{m} {n} {kr}");
            assert!(circuit_distance(&c, &ks).unwrap() < 1e-8);
        }
    }

    #[test]
    fn forced_environment_size() {
        let ad = library::amplitude_damping(0.6);
        let opts = DilationOptions { minimal: true, k: Some(2) };
        let c = compile_measured_with(&ad, opts).unwrap();
        assert_eq!(c.measurement_count(), 2);
        assert!(circuit_distance(&c, &ad).unwrap() < 1e-8);
        let c = compile_qcm_with(&ad, opts).unwrap();
        assert_eq!(c.num_qubits, 3);
        assert!(circuit_distance(&c, &ad).unwrap() < 1e-8);
    }
}
