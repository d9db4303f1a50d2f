//! Fixed low-CNOT circuit topologies for channels on one or two qubits, and
//! numerical fitting of their angles to a target channel.
//!
//! Gate lists, with `a` the ancilla(s) prepared in |0⟩, `U` a general
//! single-qubit gate and `[c=b]` a classical condition:
//!
//! **1→1, 1 CNOT** (qubits a, s):
//! `U a; U s; CNOT a→s; Ry a; Ry s; MEASURE a→c0; [c0=1] X s; U s`.
//!
//! **1→2, 4 CNOTs** (qubits a, s; outputs both):
//! a 1→2 isometry `U a; U s; CNOT a→s; Ry a; Ry s; CNOT a→s; U a`, then
//! `MEASURE a→c0; RESET a`, then for each b a second 1→2 isometry
//! `[c0=b] (U a; U s; CNOT a→s; Ry a; Ry s; CNOT a→s; U a; U s)`.
//!
//! **2→1, 7 CNOTs** (qubits a, x, y; output y):
//! * `A: U x; U y; CNOT x→y; Ry x; Rz y; CNOT x→y; U x; U y`
//! * `Ry a; CNOT x→a; Ry a; CNOT y→a; Ry a; CNOT x→a; Ry a; MEASURE a→c0`
//! * per b: `[c0=b] (U x; U y; CNOT x→y; Ry x; Rz y; CNOT y→x; Ry x)`
//! * `MEASURE x→c1; [c1=1] X y`, then per b `[c0=b] U y`.
//!
//! **2→2, 13 CNOTs** (qubits a, b, x, y; outputs x, y):
//! * block A on (x, y), then the 3-CNOT Ry multiplexor on a, `MEASURE a→c0`
//! * per c0: block A on (x, y) and the 3-CNOT multiplexor on b, then
//!   `MEASURE b→c1`
//! * per (c0, c1): `U x; U y; CNOT x→y; Ry x; Rz y; CNOT y→x; Ry x;
//!   CNOT x→y; U x; U y`.
//!
//! Parameters are consumed in gate order: one per `Rx/Ry/Rz`, four
//! `(α, β, γ, δ)` per `U`. Global phases `α` never affect the channel and
//! are held at zero by [`fit`].

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::channel::{choi_from_kraus, kraus_rank, KrausSet, RANK_TOLERANCE};
use crate::circuit::{cnot_count, Circuit, Op};
use crate::error::{Error, Result};
use crate::linalg::CMat;
use crate::optimize::{minimize, SearchOptions};
use crate::par;
use crate::sim::choi_unchecked;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TemplateId {
    OneToOne,
    OneToTwo,
    TwoToOne,
    TwoToTwo,
}

impl TemplateId {
    pub const ALL: [TemplateId; 4] = [TemplateId::OneToOne, TemplateId::OneToTwo, TemplateId::TwoToOne, TemplateId::TwoToTwo];

    /// `(m, n)` of the channels the template implements.
    pub fn dims(self) -> (usize, usize) {
        match self {
            TemplateId::OneToOne => (1, 1),
            TemplateId::OneToTwo => (1, 2),
            TemplateId::TwoToOne => (2, 1),
            TemplateId::TwoToTwo => (2, 2),
        }
    }

    /// Largest Kraus rank the topology covers.
    pub fn max_rank(self) -> usize {
        match self {
            TemplateId::OneToOne | TemplateId::OneToTwo => 2,
            TemplateId::TwoToOne | TemplateId::TwoToTwo => 4,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            TemplateId::OneToOne => "1to1",
            TemplateId::OneToTwo => "1to2",
            TemplateId::TwoToOne => "2to1",
            TemplateId::TwoToTwo => "2to2",
        }
    }

    pub fn from_name(s: &str) -> Option<TemplateId> {
        TemplateId::ALL.into_iter().find(|t| t.name() == s)
    }
}

impl fmt::Display for TemplateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone)]
pub struct Template {
    pub id: TemplateId,
    pub param_count: usize,
    pub cnot_count: usize,
    skeleton: Circuit,
    /// Parameter indices that are global phases.
    phases: Vec<usize>,
}

struct Builder {
    c: Circuit,
    cond: Vec<(usize, bool)>,
}

impl Builder {
    fn op(&mut self, op: Op) {
        let cond = self.cond.clone();
        self.c.push_if(&cond, op);
    }

    fn u(&mut self, q: usize) {
        self.op(Op::U { q, alpha: 0.0, beta: 0.0, gamma: 0.0, delta: 0.0 });
    }

    fn ry(&mut self, q: usize) {
        self.op(Op::Ry { q, theta: 0.0 });
    }

    fn rz(&mut self, q: usize) {
        self.op(Op::Rz { q, theta: 0.0 });
    }

    fn cx(&mut self, control: usize, target: usize) {
        self.op(Op::Cnot { control, target });
    }

    /// Two-CNOT 1→2 isometry from `a` (in |0⟩) and `s`; the final gate on
    /// `s` is optional so it can be merged into what follows.
    fn iso12(&mut self, a: usize, s: usize, close_s: bool) {
        self.u(a);
        self.u(s);
        self.cx(a, s);
        self.ry(a);
        self.ry(s);
        self.cx(a, s);
        self.u(a);
        if close_s {
            self.u(s);
        }
    }

    /// Two-CNOT two-qubit block, exact up to a diagonal gate on the right.
    fn block_a(&mut self, x: usize, y: usize) {
        self.u(x);
        self.u(y);
        self.cx(x, y);
        self.ry(x);
        self.rz(y);
        self.cx(x, y);
        self.u(x);
        self.u(y);
    }

    /// Ry multiplexor on `t` controlled by `x, y`, with its last CNOT
    /// removed because `t` is measured next.
    fn mux(&mut self, t: usize, x: usize, y: usize) {
        self.ry(t);
        self.cx(x, t);
        self.ry(t);
        self.cx(y, t);
        self.ry(t);
        self.cx(x, t);
        self.ry(t);
    }

    /// First part of the 3-CNOT two-qubit block, up to the CNOT whose
    /// control `x` is measured next.
    fn block_b_head(&mut self, x: usize, y: usize) {
        self.u(x);
        self.u(y);
        self.cx(x, y);
        self.ry(x);
        self.rz(y);
        self.cx(y, x);
        self.ry(x);
    }

    fn with<F: FnOnce(&mut Self)>(&mut self, extra: &[(usize, bool)], f: F) {
        let saved = self.cond.clone();
        self.cond.extend_from_slice(extra);
        f(self);
        self.cond = saved;
    }
}

fn skeleton(id: TemplateId) -> Circuit {
    let (p, inputs, outputs) = match id {
        TemplateId::OneToOne => (2, vec![1], vec![1]),
        TemplateId::OneToTwo => (2, vec![1], vec![0, 1]),
        TemplateId::TwoToOne => (3, vec![1, 2], vec![2]),
        TemplateId::TwoToTwo => (4, vec![2, 3], vec![2, 3]),
    };
    let mut b = Builder { c: Circuit::new(p, inputs, outputs), cond: Vec::new() };
    match id {
        TemplateId::OneToOne => {
            b.u(0);
            b.u(1);
            b.cx(0, 1);
            b.ry(0);
            b.ry(1);
            let c0 = b.c.measure(0);
            b.c.push_if(&[(c0, true)], Op::X { q: 1 });
            b.u(1);
        }
        TemplateId::OneToTwo => {
            b.iso12(0, 1, false);
            let c0 = b.c.measure(0);
            b.c.push(Op::Reset { q: 0 });
            for bit in [false, true] {
                b.with(&[(c0, bit)], |b| b.iso12(0, 1, true));
            }
        }
        TemplateId::TwoToOne => {
            b.block_a(1, 2);
            b.mux(0, 1, 2);
            let c0 = b.c.measure(0);
            for bit in [false, true] {
                b.with(&[(c0, bit)], |b| b.block_b_head(1, 2));
            }
            let c1 = b.c.measure(1);
            b.c.push_if(&[(c1, true)], Op::X { q: 2 });
            for bit in [false, true] {
                b.with(&[(c0, bit)], |b| b.u(2));
            }
        }
        TemplateId::TwoToTwo => {
            b.block_a(2, 3);
            b.mux(0, 2, 3);
            let c0 = b.c.measure(0);
            for bit in [false, true] {
                b.with(&[(c0, bit)], |b| {
                    b.block_a(2, 3);
                    b.mux(1, 2, 3);
                });
            }
            let c1 = b.c.measure(1);
            for b0 in [false, true] {
                for b1 in [false, true] {
                    b.with(&[(c0, b0), (c1, b1)], |b| {
                        b.block_b_head(2, 3);
                        b.cx(2, 3);
                        b.u(2);
                        b.u(3);
                    });
                }
            }
        }
    }
    b.c
}

impl Template {
    pub fn new(id: TemplateId) -> Template {
        let skeleton = skeleton(id);
        let mut param_count = 0;
        let mut phases = Vec::new();
        for g in &skeleton.gates {
            match g.op {
                Op::U { .. } => {
                    phases.push(param_count);
                    param_count += 4;
                }
                Op::Rx { .. } | Op::Ry { .. } | Op::Rz { .. } => param_count += 1,
                _ => {}
            }
        }
        let cnot_count = cnot_count(&skeleton).worst_case;
        Template { id, param_count, cnot_count, skeleton, phases }
    }

    pub fn dims(&self) -> (usize, usize) {
        self.id.dims()
    }

    /// Indices of the parameters that affect the channel.
    pub fn free_params(&self) -> Vec<usize> {
        (0..self.param_count).filter(|i| !self.phases.contains(i)).collect()
    }

    pub fn instantiate(&self, params: &[f64]) -> Result<Circuit> {
        if params.len() != self.param_count {
            return Err(Error::Template(format!(
                "template {} takes {} parameters, got {}",
                self.id,
                self.param_count,
                params.len()
            )));
        }
        if let Some(x) = params.iter().find(|x| !x.is_finite()) {
            return Err(Error::Template(format!("non-finite parameter {x}")));
        }
        Ok(self.fill(params))
    }

    fn fill(&self, params: &[f64]) -> Circuit {
        let mut c = self.skeleton.clone();
        let mut it = params.iter().copied();
        let mut next = || it.next().expect("parameter count checked");
        for g in &mut c.gates {
            match &mut g.op {
                Op::Rx { theta, .. } | Op::Ry { theta, .. } | Op::Rz { theta, .. } => *theta = next(),
                Op::U { alpha, beta, gamma, delta, .. } => {
                    *alpha = next();
                    *beta = next();
                    *gamma = next();
                    *delta = next();
                }
                _ => {}
            }
        }
        c
    }
}

#[derive(Debug, Clone, Copy)]
pub struct FitOptions {
    pub starts: usize,
    pub max_iters: usize,
    /// Success threshold on the Choi Frobenius distance.
    pub tol: f64,
    pub seed: u64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions { starts: 20, max_iters: 200, tol: 1e-6, seed: 0 }
    }
}

#[derive(Debug, Clone)]
pub struct FitResult {
    pub params: Vec<f64>,
    /// Choi Frobenius distance of the best start.
    pub distance: f64,
    /// Index of the start that produced `params`.
    pub start: usize,
    /// Number of starts actually run.
    pub starts_used: usize,
}

impl FitResult {
    pub fn converged(&self, tol: f64) -> bool {
        self.distance < tol
    }
}

/// Residual vector of a Hermitian difference, scaled so that its squared
/// norm equals the squared Frobenius norm.
fn hermitian_residual(a: &CMat, b: &CMat) -> Vec<f64> {
    let d = a.rows();
    let mut r = Vec::with_capacity(d * d);
    for i in 0..d {
        r.push(a[(i, i)].re - b[(i, i)].re);
        for j in i + 1..d {
            let z = a[(i, j)] - b[(i, j)];
            r.push(std::f64::consts::SQRT_2 * z.re);
            r.push(std::f64::consts::SQRT_2 * z.im);
        }
    }
    r
}

/// Starts run in batches of this size; the search stops after the first
/// batch containing a start below tolerance, so results do not depend on the
/// thread count.
const BATCH: usize = 8;

/// Fits the template angles to `target` by multi-start local search.
pub fn fit(t: &Template, target: &KrausSet, opts: &FitOptions) -> Result<FitResult> {
    if (target.m(), target.n()) != t.dims() {
        return Err(Error::Template(format!(
            "template {} implements {}→{} channels, target is {}→{}",
            t.id,
            t.dims().0,
            t.dims().1,
            target.m(),
            target.n()
        )));
    }
    let rank = kraus_rank(target, RANK_TOLERANCE);
    if rank > t.id.max_rank() {
        return Err(Error::Template(format!("template {} covers Kraus rank ≤ {}, target has rank {rank}", t.id, t.id.max_rank())));
    }
    if opts.starts == 0 {
        return Err(Error::Template("at least one start is required".into()));
    }
    let goal = choi_from_kraus(target).matrix().clone();
    let free = t.free_params();
    let residual = |x: &[f64]| hermitian_residual(&choi_unchecked(&t.fill(x)), &goal);
    let search = SearchOptions { sweeps: 2, max_iters: opts.max_iters, target_cost: (0.01 * opts.tol).powi(2) };
    let run = |s: usize| {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        rng.set_stream(s as u64);
        let x0: Vec<f64> = (0..t.param_count)
            .map(|i| if t.phases.contains(&i) { 0.0 } else { rng.random_range(-std::f64::consts::PI..std::f64::consts::PI) })
            .collect();
        let (x, c) = minimize(&residual, x0, &free, &search);
        (x, c.max(0.0).sqrt())
    };
    let mut best: Option<FitResult> = None;
    let mut done = 0;
    while done < opts.starts {
        let n = BATCH.min(opts.starts - done);
        let batch = par::map_range_coarse(n, |i| run(done + i));
        for (i, (params, distance)) in batch.into_iter().enumerate() {
            if best.as_ref().is_none_or(|b| distance < b.distance) {
                best = Some(FitResult { params, distance, start: done + i, starts_used: 0 });
            }
        }
        done += n;
        if best.as_ref().is_some_and(|b| b.distance < opts.tol) {
            break;
        }
    }
    let mut best = best.expect("at least one start");
    best.starts_used = done;
    Ok(best)
}
