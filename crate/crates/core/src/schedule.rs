//! Symbolic check of the asymptotic parameter schedules for the
//! multiplicity (LCC) and tensor (LTC) inner codes.
//!
//! For n = 2^L with l = log2 L the schedules are
//! - multiplicity: m = ceil(sqrt(L/l)), |F| = 2^ceil(sqrt(L l)), s = 2 m^2 L,
//!   delta = 1/(2 m L), d = s |F| (1 - delta); rate must be >= 1 - 1/L;
//! - tensor: RS base of rate r = (1 - 1/L)^(1/m), so the tensor power has
//!   rate 1 - 1/L and distance (1 - r)^m >= (1/(4 m L))^m.
//!
//! Exact quantities use big rationals; the transcendental ones use
//! double-double arithmetic with a 1e-12 slack.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;
use twofloat::TwoFloat;

/// Slack for comparisons involving transcendental values.
pub const SLACK: f64 = 1e-12;

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn binomial(n: &BigInt, k: u32) -> BigInt {
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * (n - BigInt::from(i)) / BigInt::from(i + 1);
    }
    acc
}

fn to_two(r: &BigRational) -> TwoFloat {
    // Scale so numerator and denominator fit comfortably in f64.
    let bits = r.denom().bits().max(r.numer().bits());
    let shift = bits.saturating_sub(100);
    let n = (r.numer() >> shift).to_f64().unwrap_or(f64::NAN);
    let d = (r.denom() >> shift).to_f64().unwrap_or(f64::NAN);
    TwoFloat::from(n) / TwoFloat::from(d)
}

fn pow_rat(r: &BigRational, e: u32) -> BigRational {
    (0..e).fold(BigRational::one(), |acc, _| acc * r)
}

/// One evaluation of the Fact (1 - x)^y <= 1 - x y / 4 for 0 <= x y <= 1.
#[derive(Clone, Debug, Serialize)]
pub struct FactCheck {
    pub step: String,
    pub x: f64,
    pub y: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub ok: bool,
}

pub fn check_fact(step: &str, x: &BigRational, y: &BigRational) -> FactCheck {
    let xy = x * y;
    let in_range = xy >= BigRational::zero() && xy <= BigRational::one();
    let (tx, ty) = (to_two(x), to_two(y));
    let lhs = (ty * (TwoFloat::from(1.0) - tx).ln()).exp();
    let rhs = BigRational::one() - xy / BigInt::from(4);
    let trhs = to_two(&rhs);
    let ok = in_range && lhs <= trhs + TwoFloat::from(SLACK);
    FactCheck { step: step.to_string(), x: tx.hi(), y: ty.hi(), lhs: lhs.hi(), rhs: trhs.hi(), ok }
}

/// One row of the schedule table.
#[derive(Clone, Debug, Serialize)]
pub struct ScheduleRow {
    pub log2_n: u32,
    pub m: u32,
    pub field_bits: u32,
    pub s: u64,
    pub delta: String,
    pub degree: String,
    /// C(d+m, m) / (C(s+m-1, m) |F|^m), exactly evaluated.
    pub rate: f64,
    /// (1 - m^2/s)(1 - delta)^m.
    pub lemma_bound: f64,
    /// (1 - 1/(2L))(1 - 1/(2 m L))^m.
    pub displayed_bound: f64,
    pub rate_target: f64,
    pub rate_ok: bool,
    /// log2 of s^m |F|, and its ratio to sqrt(L log2 L).
    pub query_log2: f64,
    pub query_exponent: f64,
    pub tensor_rate: f64,
    pub tensor_distance: f64,
    /// (1/(4 m L))^m.
    pub tensor_chain: f64,
    pub tensor_ok: bool,
    pub facts: Vec<FactCheck>,
    pub ok: bool,
}

/// Exact tensor distance chain (1/(4 m L))^m.
pub fn tensor_chain(log2_n: u32, m: u32) -> BigRational {
    pow_rat(&rat(1, 4 * i64::from(m) * i64::from(log2_n)), m)
}

/// Tensor schedule: (distance (1 - r)^m, chain bound, Fact check, ok).
pub fn tensor_step(log2_n: u32, m: u32) -> (TwoFloat, BigRational, FactCheck, bool) {
    let x = rat(1, i64::from(log2_n));
    let y = rat(1, i64::from(m));
    let one = TwoFloat::from(1.0);
    let r = ((one - to_two(&x)).ln() * to_two(&y)).exp();
    let dist = (one - r).powi(m as i32);
    let chain = tensor_chain(log2_n, m);
    let fact = check_fact("tensor base rate (1-1/L)^(1/m)", &x, &y);
    let tchain = to_two(&chain);
    let ok = fact.ok && dist >= tchain * (one - TwoFloat::from(SLACK));
    (dist, chain, fact, ok)
}

pub fn schedule_row(log2_n: u32) -> ScheduleRow {
    assert!(log2_n >= 4, "schedule needs log n >= 4");
    let l = f64::from(log2_n);
    let loglog = l.log2();
    let m = (l / loglog).sqrt().ceil() as u32;
    let field_bits = (l * loglog).sqrt().ceil() as u32;
    let big_l = i64::from(log2_n);
    let mi = i64::from(m);
    let s = 2 * mi * mi * big_l;
    let delta = rat(1, 2 * mi * big_l);
    let q = BigInt::one() << field_bits;
    // s q delta = m q, so d is an integer.
    let d = BigInt::from(s) * &q - BigInt::from(mi) * &q;
    let rate = BigRational::new(
        binomial(&(&d + BigInt::from(mi)), m),
        binomial(&BigInt::from(s + mi - 1), m) * num_traits::pow(q.clone(), m as usize),
    );
    let one = BigRational::one();
    let lemma = (&one - rat(mi * mi, s)) * pow_rat(&(&one - &delta), m);
    let displayed = (&one - rat(1, 2 * big_l)) * pow_rat(&(&one - rat(1, 2 * mi * big_l)), m);
    let target = &one - rat(1, big_l);
    let rate_ok = rate >= lemma && lemma >= displayed && displayed >= target;

    let query_log2 = f64::from(m) * (s as f64).log2() + f64::from(field_bits);
    let query_exponent = query_log2 / (l * loglog).sqrt();

    let (dist, chain, tensor_fact, tensor_ok) = tensor_step(log2_n, m);
    let mut facts = vec![tensor_fact];
    // Repetition of a tester with soundness rho: x = rho dist, y = 4/rho.
    let rho = rat(1, 4 * mi);
    for dd in [rat(1, 16), rat(1, 8), rat(1, 4)] {
        facts.push(check_fact("tester repetition (1-rho dist)^(4/rho)", &(&rho * dd), &(rat(4, 1) / &rho)));
    }
    let facts_ok = facts.iter().all(|f| f.ok);
    ScheduleRow {
        log2_n,
        m,
        field_bits,
        s: s as u64,
        delta: delta.to_string(),
        degree: d.to_string(),
        rate: to_two(&rate).hi(),
        lemma_bound: to_two(&lemma).hi(),
        displayed_bound: to_two(&displayed).hi(),
        rate_target: to_two(&target).hi(),
        rate_ok,
        query_log2,
        query_exponent,
        tensor_rate: to_two(&target).hi(),
        tensor_distance: dist.hi(),
        tensor_chain: to_two(&chain).hi(),
        tensor_ok,
        ok: rate_ok && tensor_ok && facts_ok,
        facts,
    }
}

/// Rows for every L = 4, ..., floor(log2 n_max).
pub fn schedule_check(n_max: u128) -> Vec<ScheduleRow> {
    let top = if n_max == 0 { 0 } else { 127 - n_max.leading_zeros() };
    (4..=top.min(64)).map(schedule_row).collect()
}

pub const CSV_HEADER: [&str; 18] = [
    "log2_n",
    "m",
    "field_bits",
    "s",
    "delta",
    "degree",
    "rate",
    "lemma_bound",
    "displayed_bound",
    "rate_target",
    "rate_ok",
    "query_log2",
    "query_exponent",
    "tensor_distance",
    "tensor_chain",
    "tensor_ok",
    "facts_ok",
    "ok",
];

impl ScheduleRow {
    pub fn csv_record(&self) -> Vec<String> {
        vec![
            self.log2_n.to_string(),
            self.m.to_string(),
            self.field_bits.to_string(),
            self.s.to_string(),
            self.delta.clone(),
            self.degree.clone(),
            format!("{:.15}", self.rate),
            format!("{:.15}", self.lemma_bound),
            format!("{:.15}", self.displayed_bound),
            format!("{:.15}", self.rate_target),
            self.rate_ok.to_string(),
            format!("{:.6}", self.query_log2),
            format!("{:.6}", self.query_exponent),
            format!("{:.6e}", self.tensor_distance),
            format!("{:.6e}", self.tensor_chain),
            self.tensor_ok.to_string(),
            self.facts.iter().all(|f| f.ok).to_string(),
            self.ok.to_string(),
        ]
    }
}

/// Number of Fact evaluations across a table.
pub fn count_facts(rows: &[ScheduleRow]) -> usize {
    rows.iter().map(|r| r.facts.len()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fact_at_half_one() {
        let f = check_fact("example", &rat(1, 2), &rat(1, 1));
        assert!(f.ok);
        assert!((f.lhs - 0.5).abs() < SLACK);
        assert!((f.rhs - 0.875).abs() < SLACK);
        assert!(!check_fact("out of range", &rat(1, 2), &rat(3, 1)).ok);
    }

    #[test]
    fn tensor_chain_at_two_to_sixteen() {
        assert_eq!(tensor_chain(16, 4), BigRational::new(BigInt::from(1), BigInt::from(256u64.pow(4))));
        let (dist, chain, fact, ok) = tensor_step(16, 4);
        assert!(ok && fact.ok);
        assert!(dist >= to_two(&chain));
    }

    #[test]
    fn sixteen_bit_row() {
        let row = schedule_row(16);
        assert_eq!((row.m, row.field_bits, row.s), (2, 8, 128));
        assert_eq!(row.delta, "1/64");
        assert_eq!(row.degree, (128 * 256 - 2 * 256).to_string());
        assert!(row.rate_ok && row.ok);
    }

    #[test]
    fn table_up_to_forty_bits() {
        let rows = schedule_check(1u128 << 40);
        assert_eq!(rows.len(), 37);
        assert!(rows.iter().all(|r| r.ok));
        assert_eq!(count_facts(&rows), 37 * 4);
    }
}
