//! Closed-form CNOT bounds and parameter counts, in exact integer arithmetic.
//!
//! All arguments must satisfy `m + n ≤ MAX_ARG_SUM` so that every power of
//! two fits comfortably in an `i128`.

pub const MAX_ARG_SUM: u32 = 40;

fn pow2(e: u32) -> i128 {
    1i128 << e
}

/// `⌈num / den⌉` clamped at zero, for `den > 0`.
fn ceil_div_clamped(num: i128, den: i128) -> u128 {
    if num <= 0 {
        0
    } else {
        ((num + den - 1) / den) as u128
    }
}

fn check(m: u32, n: u32) {
    assert!(m + n <= MAX_ARG_SUM, "m + n = {} exceeds {MAX_ARG_SUM}", m + n);
}

/// Lower bound for generic extreme channels with classical randomness:
/// `⌈2^{2m−1}(2^n − 1) − 3n/4⌉`.
pub fn lb_random_qcm(m: u32, n: u32) -> u128 {
    check(m, n);
    let (m, n) = (m, i128::from(n));
    ceil_div_clamped(pow2(2 * m + 1) * (pow2(n as u32) - 1) - 3 * n, 4)
}

/// Lower bound with measurements and classical control.
pub fn lb_measured_qcm(m: u32, n: u32) -> u128 {
    check(m, n);
    let (mi, ni) = (i128::from(m), i128::from(n));
    if n >= m {
        ceil_div_clamped(pow2(n + m + 1) - pow2(2 * m) - (3 * mi).max(2) - 1, 6)
    } else {
        ceil_div_clamped(pow2(2 * n) - 3 * ni - 1, 6)
    }
}

/// Lower bound for isometries without measurement.
pub fn lb_qcm_isometry(m: u32, n: u32) -> u128 {
    check(m, n);
    let (mi, ni) = (i128::from(m), i128::from(n));
    ceil_div_clamped(pow2(n + m + 1) - pow2(2 * m) - 2 * ni - mi - 1, 4)
}

/// Real parameters describing a generic extreme channel.
pub fn param_count_extreme(m: u32, n: u32) -> u128 {
    check(m, n);
    (pow2(2 * m + n + 1) - pow2(2 * m + 1)) as u128
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundsReport {
    pub m: u32,
    pub n: u32,
    /// Leading-order lower bound without measurement, `4^{m+n}/4` (floored).
    pub lb_qcm: u128,
    pub lb_random: u128,
    pub lb_measured: u128,
    pub lb_qcm_isometry: u128,
    pub param_count_extreme: u128,
    pub ub_asymptotic_qcm: u128,
    pub ub_asymptotic_random: u128,
    pub ub_asymptotic_measured: u128,
    pub qubits_qcm: u32,
    pub qubits_random: u32,
    pub qubits_measured: u32,
}

pub fn resource_table(m: u32, n: u32) -> BoundsReport {
    check(m, n);
    let ub_measured = if m < n {
        u128::from(m) * pow2(2 * m + 1) as u128 + pow2(m + n) as u128
    } else {
        u128::from(n) * pow2(2 * m + 1) as u128
    };
    BoundsReport {
        m,
        n,
        lb_qcm: (pow2(2 * (m + n)) / 4) as u128,
        lb_random: lb_random_qcm(m, n),
        lb_measured: lb_measured_qcm(m, n),
        lb_qcm_isometry: lb_qcm_isometry(m, n),
        param_count_extreme: param_count_extreme(m, n),
        ub_asymptotic_qcm: pow2(2 * (m + n)) as u128,
        ub_asymptotic_random: pow2(2 * m + n) as u128,
        ub_asymptotic_measured: ub_measured,
        qubits_qcm: m + 2 * n,
        qubits_random: m + n,
        qubits_measured: if m < n { n } else { m + 1 },
    }
}

impl BoundsReport {
    pub const CSV_HEADER: &'static str = "m,n,lb_qcm,lb_random,lb_measured,lb_qcm_isometry,param_count_extreme,\
ub_asymptotic_qcm,ub_asymptotic_random,ub_asymptotic_measured,qubits_qcm,qubits_random,qubits_measured";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.m,
            self.n,
            self.lb_qcm,
            self.lb_random,
            self.lb_measured,
            self.lb_qcm_isometry,
            self.param_count_extreme,
            self.ub_asymptotic_qcm,
            self.ub_asymptotic_random,
            self.ub_asymptotic_measured,
            self.qubits_qcm,
            self.qubits_random,
            self.qubits_measured
        )
    }

    /// `key=value` pairs, one per line.
    pub fn to_text(&self) -> String {
        Self::CSV_HEADER
            .split(',')
            .zip(self.csv_row().split(','))
            .map(|(k, v)| format!("{k}={v}\n"))
            .collect()
    }
}
