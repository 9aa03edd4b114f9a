//! The shared interface for codes with locality, instrumented oracles,
//! corruption channels and the Monte-Carlo trial runners.

use std::cell::{Cell, RefCell};
use std::collections::BTreeMap;
use std::fmt::Debug;
use std::hash::Hash;

use num_rational::Ratio;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, CodeError, Result};
use crate::gf::{Field, FieldElement};

/// Random source handed to correctors and testers.
pub type TrialRng = ChaCha8Rng;

/// Exact rationals for rates and distances.
pub type Rational = Ratio<u128>;

/// Environment variable capping the worker threads used by trial runners.
pub const THREADS_ENV: &str = "LOCALITY_CODES_THREADS";

/// A code symbol: a fixed-length vector of field elements.
pub trait Symbol: Clone + PartialEq + Eq + Hash + Debug + Send + Sync + 'static {
    fn elems(&self) -> &[FieldElement];
    fn from_elems(elems: &[FieldElement]) -> Self;
}

impl Symbol for FieldElement {
    fn elems(&self) -> &[FieldElement] {
        std::slice::from_ref(self)
    }
    fn from_elems(elems: &[FieldElement]) -> Self {
        elems[0]
    }
}

impl Symbol for Vec<FieldElement> {
    fn elems(&self) -> &[FieldElement] {
        self
    }
    fn from_elems(elems: &[FieldElement]) -> Self {
        elems.to_vec()
    }
}

/// Alphabet descriptor: symbols are `len` elements of `field`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Alphabet {
    pub field: Field,
    pub len: usize,
}

impl Alphabet {
    pub fn new(field: &Field, len: usize) -> Alphabet {
        Alphabet { field: field.clone(), len }
    }

    /// log2 of the alphabet size.
    pub fn bits(&self) -> usize {
        self.field.k() as usize * self.len
    }

    pub fn zero<S: Symbol>(&self) -> S {
        S::from_elems(&vec![FieldElement::ZERO; self.len])
    }

    pub fn random<S: Symbol, R: Rng + ?Sized>(&self, rng: &mut R) -> S {
        let elems: Vec<FieldElement> = (0..self.len).map(|_| self.field.random(rng)).collect();
        S::from_elems(&elems)
    }

    /// A uniformly random symbol different from `s`.
    pub fn random_other<S: Symbol, R: Rng + ?Sized>(&self, s: &S, rng: &mut R) -> S {
        loop {
            let t: S = self.random(rng);
            if &t != s {
                return t;
            }
        }
    }

    /// Packs a symbol into bits, element 0 in the lowest `k` bits.
    pub fn to_u64<S: Symbol>(&self, s: &S) -> u64 {
        debug_assert!(self.bits() <= 64);
        let k = self.field.k();
        s.elems().iter().enumerate().fold(0u64, |acc, (i, e)| acc | (u64::from(e.bits()) << (i as u32 * k)))
    }

    pub fn from_u64<S: Symbol>(&self, mut v: u64) -> S {
        let k = self.field.k();
        let mask = (1u64 << k) - 1;
        let elems: Vec<FieldElement> = (0..self.len)
            .map(|_| {
                let e = FieldElement::from_bits((v & mask) as u32);
                v >>= k;
                e
            })
            .collect();
        S::from_elems(&elems)
    }
}

/// Read access to a (possibly corrupted) word.
pub trait Oracle<S> {
    fn len(&self) -> usize;
    fn query(&self, i: usize) -> S;
    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Read access to a word whose positions may be erased (`None`).
pub trait ErasableOracle<S> {
    fn len(&self) -> usize;
    fn query(&self, i: usize) -> Option<S>;
    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Counts (and optionally logs) every query against a backing word.
pub struct QueryCountingOracle<'a, S> {
    word: &'a [S],
    erased: Option<&'a [bool]>,
    count: Cell<u64>,
    log: Option<RefCell<Vec<usize>>>,
}

impl<'a, S: Clone> QueryCountingOracle<'a, S> {
    pub fn new(word: &'a [S]) -> Self {
        QueryCountingOracle { word, erased: None, count: Cell::new(0), log: None }
    }

    pub fn with_log(word: &'a [S]) -> Self {
        QueryCountingOracle { word, erased: None, count: Cell::new(0), log: Some(RefCell::new(Vec::new())) }
    }

    /// Positions with `erased[i]` answer `None` through [`ErasableOracle`].
    pub fn with_erasures(word: &'a [S], erased: &'a [bool]) -> Self {
        assert_eq!(word.len(), erased.len());
        QueryCountingOracle { word, erased: Some(erased), count: Cell::new(0), log: None }
    }

    pub fn count(&self) -> u64 {
        self.count.get()
    }

    pub fn log(&self) -> Option<Vec<usize>> {
        self.log.as_ref().map(|l| l.borrow().clone())
    }

    fn record(&self, i: usize) {
        self.count.set(self.count.get() + 1);
        if let Some(log) = &self.log {
            log.borrow_mut().push(i);
        }
    }
}

impl<S: Clone> Oracle<S> for QueryCountingOracle<'_, S> {
    fn len(&self) -> usize {
        self.word.len()
    }
    fn query(&self, i: usize) -> S {
        self.record(i);
        self.word[i].clone()
    }
}

impl<S: Clone> ErasableOracle<S> for QueryCountingOracle<'_, S> {
    fn len(&self) -> usize {
        self.word.len()
    }
    fn query(&self, i: usize) -> Option<S> {
        self.record(i);
        match self.erased {
            Some(e) if e[i] => None,
            _ => Some(self.word[i].clone()),
        }
    }
}

/// Result of one local-correction run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Corrected<S> {
    pub symbol: S,
    /// Queries the algorithm makes when every emulated query is counted in
    /// full; equals the oracle count unless answers are memoized.
    pub emulated_queries: u64,
}

/// Result of one local-test run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TestOutcome {
    pub accept: bool,
    pub emulated_queries: u64,
}

/// A code together with its (optional) local corrector and tester.
///
/// Messages are vectors of `message_len()` elements of `message_field()`.
pub trait LocalCode: Send + Sync {
    type Symbol: Symbol;

    fn code_id(&self) -> String;
    fn block_length(&self) -> usize;
    fn alphabet(&self) -> Alphabet;
    fn message_field(&self) -> Field;
    fn message_len(&self) -> usize;

    /// log|C| / (n log|Sigma|).
    fn rate(&self) -> Rational {
        Rational::new(
            (self.message_len() * self.message_field().k() as usize) as u128,
            (self.block_length() * self.alphabet().bits()) as u128,
        )
    }

    /// Lower bound on the relative distance.
    fn distance_bound(&self) -> Rational;

    fn encode(&self, message: &[FieldElement]) -> Result<Vec<Self::Symbol>>;

    fn random_message(&self, rng: &mut TrialRng) -> Vec<FieldElement> {
        let f = self.message_field();
        (0..self.message_len()).map(|_| f.random(rng)).collect()
    }

    fn is_codeword(&self, word: &[Self::Symbol]) -> bool;

    /// Fraction of errors the corrector tolerates.
    fn correction_radius(&self) -> Option<Rational> {
        None
    }

    /// Upper bound on the corrector's queries.
    fn correct_budget(&self) -> Option<u64> {
        None
    }

    fn local_correct(
        &self,
        _oracle: &dyn Oracle<Self::Symbol>,
        _i: usize,
        _rng: &mut TrialRng,
    ) -> Result<Corrected<Self::Symbol>> {
        Err(CodeError::Unsupported(format!("{} has no local corrector", self.code_id())))
    }

    /// Upper bound on the tester's queries.
    fn test_budget(&self) -> Option<u64> {
        None
    }

    /// Non-adaptive tester; an erased answer makes it reject.
    fn local_test(&self, _oracle: &dyn ErasableOracle<Self::Symbol>, _rng: &mut TrialRng) -> Result<TestOutcome> {
        Err(CodeError::Unsupported(format!("{} has no local tester", self.code_id())))
    }
}

/// A code with a systematic encoder: message element `i` appears verbatim as
/// element `info_slot(i).1` of codeword symbol `info_slot(i).0`.
pub trait SystematicCode: LocalCode {
    fn systematic_encode(&self, message: &[FieldElement]) -> Result<Vec<Self::Symbol>>;
    fn info_slot(&self, i: usize) -> (usize, usize);
}

/// Local decoder for message coordinates of a systematic LCC.
pub struct LocalDecoder<'a, C: SystematicCode> {
    code: &'a C,
}

/// Wraps a systematic LCC as an LDC.
pub fn as_ldc<C: SystematicCode>(code: &C) -> Result<LocalDecoder<'_, C>> {
    if code.correction_radius().is_none() {
        return Err(invalid(format!("{} has no local corrector", code.code_id())));
    }
    Ok(LocalDecoder { code })
}

impl<C: SystematicCode> LocalDecoder<'_, C> {
    /// Message element `i`, by correcting the coordinate that hosts it.
    pub fn decode(&self, oracle: &dyn Oracle<C::Symbol>, i: usize, rng: &mut TrialRng) -> Result<FieldElement> {
        if i >= self.code.message_len() {
            return Err(invalid(format!("message index {i} out of range")));
        }
        let (pos, slot) = self.code.info_slot(i);
        let c = self.code.local_correct(oracle, pos, rng)?;
        Ok(c.symbol.elems()[slot])
    }
}

/// How a channel chooses and corrupts positions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ChannelKind {
    /// Uniformly random positions, each replaced by a different random symbol.
    RandomSymbols,
    /// The positions most often read by `paths` sampled corrector runs on the
    /// clean word.
    AdversarialGreedy { paths: usize },
    /// One cyclic run of consecutive positions.
    BurstBlock,
    /// Uniformly random positions marked as erased.
    Erasures,
}

impl ChannelKind {
    pub fn name(&self) -> &'static str {
        match self {
            ChannelKind::RandomSymbols => "random_symbols",
            ChannelKind::AdversarialGreedy { .. } => "adversarial_greedy",
            ChannelKind::BurstBlock => "burst_block",
            ChannelKind::Erasures => "erasures",
        }
    }
}

/// Corrupts exactly floor(rate * n) distinct positions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorruptionChannel {
    pub kind: ChannelKind,
    pub rate: f64,
}

/// A corrupted word together with the ground truth.
#[derive(Clone, Debug)]
pub struct CorruptedWord<S> {
    pub word: Vec<S>,
    pub erased: Vec<bool>,
    pub positions: Vec<usize>,
}

impl CorruptionChannel {
    pub fn new(kind: ChannelKind, rate: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&rate) {
            return Err(invalid(format!("corruption rate {rate} outside [0, 1]")));
        }
        Ok(CorruptionChannel { kind, rate })
    }

    pub fn identity() -> Self {
        CorruptionChannel { kind: ChannelKind::RandomSymbols, rate: 0.0 }
    }

    pub fn corruptions(&self, n: usize) -> usize {
        // A tiny epsilon keeps e.g. 0.3 * 10 from rounding down to 2.
        ((self.rate * n as f64) + 1e-9).floor() as usize
    }

    /// Applies the channel. `target` is the coordinate the corrector will be
    /// asked for (used by the adversarial channel).
    pub fn apply<C: LocalCode>(
        &self,
        code: &C,
        codeword: &[C::Symbol],
        target: usize,
        rng: &mut TrialRng,
    ) -> Result<CorruptedWord<C::Symbol>> {
        let n = codeword.len();
        let count = self.corruptions(n);
        let positions: Vec<usize> = match &self.kind {
            ChannelKind::RandomSymbols | ChannelKind::Erasures => {
                let mut p = sample(rng, n, count).into_vec();
                p.sort_unstable();
                p
            }
            ChannelKind::BurstBlock => {
                let start = rng.random_range(0..n.max(1));
                let mut p: Vec<usize> = (0..count).map(|i| (start + i) % n).collect();
                p.sort_unstable();
                p
            }
            ChannelKind::AdversarialGreedy { paths } => {
                let mut freq = vec![0u64; n];
                for _ in 0..(*paths).max(1) {
                    let oracle = QueryCountingOracle::with_log(codeword);
                    // A failed run still leaves its queries in the log.
                    let _ = code.local_correct(&oracle, target, rng);
                    for i in oracle.log().unwrap_or_default() {
                        freq[i] += 1;
                    }
                }
                let mut order: Vec<usize> = (0..n).collect();
                order.sort_by(|&a, &b| freq[b].cmp(&freq[a]).then(a.cmp(&b)));
                let mut p = order[..count].to_vec();
                p.sort_unstable();
                p
            }
        };
        let alphabet = code.alphabet();
        let mut word = codeword.to_vec();
        let mut erased = vec![false; n];
        for &i in &positions {
            if self.kind == ChannelKind::Erasures {
                erased[i] = true;
            } else {
                word[i] = alphabet.random_other(&word[i], rng);
            }
        }
        Ok(CorruptedWord { word, erased, positions })
    }
}

/// Which coordinate each correction trial asks for.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "snake_case")]
pub enum CoordinatePolicy {
    Random,
    Fixed { index: usize },
    RoundRobin,
}

/// Aggregate outcome of a batch of trials.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialReport {
    pub code_id: String,
    pub channel: String,
    pub rate: f64,
    pub trials: usize,
    /// Correct outputs (correction), or correct verdicts (testing: accept on
    /// uncorrupted words, reject on corrupted ones).
    pub successes: usize,
    pub mean_queries: f64,
    pub max_queries: u64,
    pub budget: Option<u64>,
    pub max_emulated_queries: u64,
    /// Trials that returned an error instead of an answer.
    pub failures: usize,
    /// coordinate -> (successes, trials), correction only.
    pub per_coordinate: BTreeMap<usize, (usize, usize)>,
}

impl TrialReport {
    pub fn success_rate(&self) -> f64 {
        if self.trials == 0 {
            return 0.0;
        }
        self.successes as f64 / self.trials as f64
    }

    /// True iff every trial stayed within the declared budget.
    pub fn within_budget(&self) -> bool {
        self.budget.is_none_or(|b| self.max_queries <= b && self.max_emulated_queries <= b)
    }

    pub const CSV_HEADER: [&'static str; 8] =
        ["code_id", "channel", "rate", "trials", "successes", "mean_queries", "max_queries", "budget"];

    pub fn csv_record(&self) -> [String; 8] {
        [
            self.code_id.clone(),
            self.channel.clone(),
            format!("{}", self.rate),
            self.trials.to_string(),
            self.successes.to_string(),
            format!("{:.3}", self.mean_queries),
            self.max_queries.to_string(),
            self.budget.map(|b| b.to_string()).unwrap_or_default(),
        ]
    }
}

/// Writes reports as CSV with the fixed header.
pub fn write_csv<W: std::io::Write>(reports: &[TrialReport], w: W) -> std::io::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(TrialReport::CSV_HEADER)?;
    for r in reports {
        out.write_record(r.csv_record())?;
    }
    out.flush()
}

/// Lower edge of a 3-sigma binomial band around `p` for `trials` samples.
pub fn three_sigma_floor(p: f64, trials: usize) -> f64 {
    p - 3.0 * (p * (1.0 - p) / trials as f64).sqrt()
}

/// Per-trial RNG stream derived from the batch seed.
pub fn trial_rng(seed: u64, trial: usize) -> TrialRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64 + 1);
    rng
}

fn thread_pool() -> rayon::ThreadPool {
    let threads = std::env::var(THREADS_ENV).ok().and_then(|v| v.parse::<usize>().ok()).unwrap_or(0);
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().expect("thread pool")
}

struct Outcome {
    success: bool,
    failed: bool,
    queries: u64,
    emulated: u64,
    coordinate: usize,
}

fn summarize<C: LocalCode>(
    code: &C,
    channel: &CorruptionChannel,
    outcomes: &[Outcome],
    budget: Option<u64>,
    track_coordinates: bool,
) -> TrialReport {
    let trials = outcomes.len();
    let mut per_coordinate = BTreeMap::new();
    if track_coordinates {
        for o in outcomes {
            let e = per_coordinate.entry(o.coordinate).or_insert((0, 0));
            e.0 += usize::from(o.success);
            e.1 += 1;
        }
    }
    TrialReport {
        code_id: code.code_id(),
        channel: channel.kind.name().to_string(),
        rate: channel.rate,
        trials,
        successes: outcomes.iter().filter(|o| o.success).count(),
        mean_queries: if trials == 0 {
            0.0
        } else {
            outcomes.iter().map(|o| o.queries as f64).sum::<f64>() / trials as f64
        },
        max_queries: outcomes.iter().map(|o| o.queries).max().unwrap_or(0),
        budget,
        max_emulated_queries: outcomes.iter().map(|o| o.emulated).max().unwrap_or(0),
        failures: outcomes.iter().filter(|o| o.failed).count(),
        per_coordinate,
    }
}

/// Fresh random codeword per trial, corrupted by `channel`, then one local
/// correction at a coordinate chosen by `policy`.
pub fn run_correction_trials<C: LocalCode>(
    code: &C,
    channel: &CorruptionChannel,
    policy: CoordinatePolicy,
    trials: usize,
    seed: u64,
) -> Result<TrialReport> {
    let n = code.block_length();
    if let CoordinatePolicy::Fixed { index } = policy {
        if index >= n {
            return Err(invalid(format!("coordinate {index} out of range")));
        }
    }
    if code.correction_radius().is_none() {
        return Err(CodeError::Unsupported(format!("{} has no local corrector", code.code_id())));
    }
    let outcomes: Result<Vec<Outcome>> = thread_pool().install(|| {
        (0..trials)
            .into_par_iter()
            .map(|t| {
                let mut rng = trial_rng(seed, t);
                let msg = code.random_message(&mut rng);
                let cw = code.encode(&msg)?;
                let coordinate = match policy {
                    CoordinatePolicy::Random => rng.random_range(0..n),
                    CoordinatePolicy::Fixed { index } => index,
                    CoordinatePolicy::RoundRobin => t % n,
                };
                let corrupted = channel.apply(code, &cw, coordinate, &mut rng)?;
                let oracle = QueryCountingOracle::new(&corrupted.word);
                let res = code.local_correct(&oracle, coordinate, &mut rng);
                let (success, failed, emulated) = match res {
                    Ok(c) => (c.symbol == cw[coordinate], false, c.emulated_queries),
                    Err(CodeError::CorrectFailure(_)) => (false, true, oracle.count()),
                    Err(e) => return Err(e),
                };
                Ok(Outcome { success, failed, queries: oracle.count(), emulated, coordinate })
            })
            .collect()
    });
    Ok(summarize(code, channel, &outcomes?, code.correct_budget(), true))
}

/// Fresh random codeword per trial, corrupted by `channel`, then one run of
/// the local tester. A trial succeeds when the tester accepts an uncorrupted
/// word or rejects a corrupted one.
pub fn run_test_trials<C: LocalCode>(
    code: &C,
    channel: &CorruptionChannel,
    trials: usize,
    seed: u64,
) -> Result<TrialReport> {
    let outcomes: Result<Vec<Outcome>> = thread_pool().install(|| {
        (0..trials)
            .into_par_iter()
            .map(|t| {
                let mut rng = trial_rng(seed, t);
                let msg = code.random_message(&mut rng);
                let cw = code.encode(&msg)?;
                let corrupted = channel.apply(code, &cw, 0, &mut rng)?;
                let oracle = QueryCountingOracle::with_erasures(&corrupted.word, &corrupted.erased);
                let res = code.local_test(&oracle, &mut rng)?;
                let clean = corrupted.positions.is_empty();
                Ok(Outcome {
                    success: res.accept == clean,
                    failed: false,
                    queries: oracle.count(),
                    emulated: res.emulated_queries,
                    coordinate: 0,
                })
            })
            .collect()
    });
    Ok(summarize(code, channel, &outcomes?, code.test_budget(), false))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counting_oracle_logs_and_preserves_word() {
        let word = vec![FieldElement::from_bits(3), FieldElement::from_bits(5)];
        let before = word.clone();
        let o = QueryCountingOracle::with_log(&word);
        assert_eq!(Oracle::query(&o, 1), FieldElement::from_bits(5));
        assert_eq!(Oracle::query(&o, 0), FieldElement::from_bits(3));
        assert_eq!(o.count(), 2);
        assert_eq!(o.log().unwrap(), vec![1, 0]);
        assert_eq!(word, before);
        let erased = [false, true];
        let e = QueryCountingOracle::with_erasures(&word, &erased);
        assert_eq!(ErasableOracle::query(&e, 1), None);
        assert_eq!(ErasableOracle::query(&e, 0), Some(FieldElement::from_bits(3)));
    }

    #[test]
    fn alphabet_packing() {
        let f = Field::new(5).unwrap();
        let a = Alphabet::new(&f, 3);
        let s = vec![FieldElement::from_bits(1), FieldElement::from_bits(31), FieldElement::from_bits(4)];
        let v = a.to_u64(&s);
        assert_eq!(v, 1 | (31 << 5) | (4 << 10));
        assert_eq!(a.from_u64::<Vec<FieldElement>>(v), s);
        assert_eq!(a.bits(), 15);
    }

    #[test]
    fn corruption_counts() {
        let c = CorruptionChannel::new(ChannelKind::RandomSymbols, 0.3).unwrap();
        assert_eq!(c.corruptions(10), 3);
        assert_eq!(c.corruptions(7), 2);
        assert!(CorruptionChannel::new(ChannelKind::BurstBlock, 1.5).is_err());
        assert!((three_sigma_floor(0.5, 100) - 0.35).abs() < 1e-12);
    }
}
