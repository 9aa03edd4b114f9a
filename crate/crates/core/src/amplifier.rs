//! Distance amplification through a sampler graph.
//!
//! An inner codeword w of W is cut into blocks of b*t symbols; every t
//! consecutive inner symbols form one element of F = GF(2^(lambda t)), so a
//! block is a message of RS_{b,d} over F. Symbol j of block u's RS codeword
//! travels along edge (u, j) of the sampler; the d symbols arriving at right
//! vertex v form the v-th symbol of the amplified codeword, an element of
//! F^d.

use std::cell::{Cell, RefCell};
use std::collections::HashMap;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::code_api::{Alphabet, Corrected, ErasableOracle, LocalCode, Oracle, Rational, TestOutcome, TrialRng};
use crate::error::{infeasible, invalid, CodeError, Result};
use crate::gf::{Field, FieldElement};
use crate::reed_solomon::RsCode;
use crate::sampler::{CertReport, SamplerGraph, SamplerParams};

/// Which local algorithm the amplified code is built to support.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Contract {
    /// Correction from a tau fraction of errors.
    Lcc,
    /// Strong testing with distance delta.
    Ltc,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AmplifierMode {
    /// n_W is a multiple of b*t.
    Amplified,
    /// The inner codeword is padded with zeros to a multiple of b*t.
    Padded,
    /// The inner code is too short to amplify; C is a plain RS code.
    RsFallback,
}

/// Rational approximation of a parameter given as a float.
pub fn to_rational(x: f64) -> Result<Rational> {
    if !(x.is_finite() && x >= 0.0) {
        return Err(invalid(format!("parameter {x} must be a finite nonnegative number")));
    }
    let r = Ratio::<i64>::approximate_float(x).ok_or_else(|| invalid(format!("cannot represent {x}")))?;
    Ok(Rational::new(*r.numer() as u128, *r.denom() as u128))
}

fn floor_u(r: Rational) -> usize {
    (r.numer() / r.denom()) as usize
}

/// What the parameter derivation needs to know about W.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct InnerMeta {
    pub n_w: usize,
    /// log2 of the inner alphabet size.
    pub lambda_bits: usize,
    /// tau_W (LCC) or delta_W (LTC).
    pub contract_param: Rational,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AmplifierParams {
    pub contract: Contract,
    /// Error fraction of the corrector; delta/2 in LTC mode.
    pub tau: Rational,
    /// The inner code's error fraction; delta_W/2 in LTC mode.
    pub tau_w: Rational,
    pub eps: Rational,
    pub b: usize,
    pub t: usize,
    pub d: usize,
    pub lambda_bits: usize,
    pub n_w: usize,
    /// Number of blocks (sampler side size).
    pub n: usize,
    pub mode: AmplifierMode,
}

impl AmplifierParams {
    pub fn field_bits(&self) -> usize {
        self.lambda_bits * self.t
    }
    pub fn block_len(&self) -> usize {
        self.b * self.t
    }
    /// Inner length after padding.
    pub fn padded_len(&self) -> usize {
        self.n * self.block_len()
    }
    /// ceil(18 ln(3 b t d)) majority repetitions of the inner corrector.
    pub fn majority_reps(&self) -> usize {
        (18.0 * ((3 * self.b * self.t * self.d) as f64).ln()).ceil() as usize
    }
    /// Block decoding radius min(floor((d-b)/2), floor((tau + eps/2) d)).
    pub fn block_radius(&self) -> usize {
        let unique = (self.d - self.b) / 2;
        let wide = floor_u((self.tau + self.eps / Rational::from_integer(2)) * Rational::from_integer(self.d as u128));
        unique.min(wide)
    }
    /// rho = min{1/(2btd), delta_W/2}.
    pub fn tester_rho(&self) -> Rational {
        let a = Rational::new(1, (2 * self.b * self.t * self.d) as u128);
        a.min(self.tau_w)
    }
    /// ceil(4 / rho).
    pub fn tester_reps(&self) -> usize {
        (Rational::from_integer(4) / self.tester_rho()).ceil().to_integer() as usize
    }
    /// The sampler contract: (tau_W, eps/2).
    pub fn sampler_params(&self) -> Result<SamplerParams> {
        SamplerParams::new(ratio_f64(self.tau_w), ratio_f64(self.eps) / 2.0, self.n)
    }
}

pub fn ratio_f64(r: Rational) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// 1-based block index ceil(i / (b t)) of the 1-based inner coordinate i.
pub fn block_index_one_based(i: usize, block_len: usize) -> usize {
    i.div_ceil(block_len)
}

/// Derives b, t, |F| and the mode. `target` is tau (LCC) or delta (LTC);
/// `d` is the sampler degree.
pub fn derive_parameters(
    inner: &InnerMeta,
    contract: Contract,
    target: Rational,
    eps: Rational,
    d: usize,
) -> Result<AmplifierParams> {
    let zero = Rational::from_integer(0);
    let one = Rational::from_integer(1);
    let two = Rational::from_integer(2);
    let (tau, tau_w) = match contract {
        Contract::Lcc => {
            if !(target > zero && target < one / two) {
                return Err(infeasible(format!("tau = {target} must lie in (0, 1/2)")));
            }
            (target, inner.contract_param)
        }
        Contract::Ltc => {
            if !(target > zero && target < one) {
                return Err(infeasible(format!("delta = {target} must lie in (0, 1)")));
            }
            (target / two, inner.contract_param / two)
        }
    };
    if !(eps > zero && eps < one) {
        return Err(infeasible(format!("eps = {eps} must lie in (0, 1)")));
    }
    if two * tau + eps >= one {
        return Err(infeasible(format!("2*tau + eps = {} must be below 1", two * tau + eps)));
    }
    if tau_w <= zero || tau_w >= one {
        return Err(infeasible(format!("inner contract parameter {tau_w} must lie in (0, 1)")));
    }
    if d < 2 {
        return Err(infeasible("sampler degree must be at least 2"));
    }
    if inner.lambda_bits == 0 || inner.n_w == 0 {
        return Err(invalid("inner code must have a nonempty alphabet and block"));
    }
    let b = floor_u(Rational::from_integer(d as u128) * (one - two * tau - eps)) + 1;
    // Minimal t with 2^(lambda t) >= d.
    let mut t = 1;
    while (inner.lambda_bits * t) < 64 && (1u128 << (inner.lambda_bits * t)) < d as u128 {
        t += 1;
    }
    if inner.lambda_bits * t > 32 {
        return Err(infeasible(format!("block field GF(2^{}) exceeds 32 bits", inner.lambda_bits * t)));
    }
    let bt = b * t;
    let (mode, n) = if inner.n_w.is_multiple_of(bt) && inner.n_w / bt >= 2 {
        (AmplifierMode::Amplified, inner.n_w / bt)
    } else if Rational::from_integer(inner.n_w as u128) * eps > Rational::from_integer(bt as u128)
        && inner.n_w.div_ceil(bt) >= 2
    {
        (AmplifierMode::Padded, inner.n_w.div_ceil(bt))
    } else {
        (AmplifierMode::RsFallback, 0)
    };
    Ok(AmplifierParams { contract, tau, tau_w, eps, b, t, d, lambda_bits: inner.lambda_bits, n_w: inner.n_w, n, mode })
}

/// How to obtain the sampler graph.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SamplerChoice {
    SeededRandom {
        degree: usize,
        seed: u64,
    },
    /// Powered Gabber-Galil graph sized by (tau_W, eps/2).
    Explicit,
    /// Complete bipartite graph, degree = number of blocks.
    Complete,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AmplifierConfig {
    pub contract: Contract,
    /// tau for LCC, delta for LTC.
    pub target: f64,
    pub eps: f64,
    pub sampler: SamplerChoice,
    #[serde(default = "default_cert_trials")]
    pub cert_trials: usize,
    #[serde(default)]
    pub cert_seed: u64,
    /// Refuse to build when the sampler fails certification.
    #[serde(default = "default_true")]
    pub require_certificate: bool,
}

fn default_cert_trials() -> usize {
    10_000
}

fn default_true() -> bool {
    true
}

/// Plain RS code used when the inner code is too short to amplify.
#[derive(Clone, Debug)]
struct Fallback {
    rs: RsCode,
}

/// The amplified code C built from inner code W.
#[derive(Clone, Debug)]
pub struct AmplifiedCode<W: LocalCode> {
    inner: W,
    params: AmplifierParams,
    field: Field,
    rs: Option<RsCode>,
    graph: Option<SamplerGraph>,
    /// fwd[u d + j] = (v, j'), rev[v d + j'] = (u, j).
    fwd: Vec<(u32, u32)>,
    rev: Vec<(u32, u32)>,
    cert: Option<CertReport>,
    fallback: Option<Fallback>,
}

impl<W: LocalCode> AmplifiedCode<W> {
    pub fn build(inner: W, config: &AmplifierConfig) -> Result<AmplifiedCode<W>> {
        let contract_param = match config.contract {
            Contract::Lcc => inner
                .correction_radius()
                .ok_or_else(|| invalid(format!("{} has no local corrector to amplify", inner.code_id())))?,
            Contract::Ltc => {
                if inner.test_budget().is_none() {
                    return Err(invalid(format!("{} has no local tester to amplify", inner.code_id())));
                }
                inner.distance_bound()
            }
        };
        let meta = InnerMeta { n_w: inner.block_length(), lambda_bits: inner.alphabet().bits(), contract_param };
        if meta.lambda_bits > 64 {
            return Err(infeasible("inner alphabet wider than 64 bits"));
        }
        let target = to_rational(config.target)?;
        let eps = to_rational(config.eps)?;
        let derive = |d: usize| derive_parameters(&meta, config.contract, target, eps, d);
        let (params, graph) = match &config.sampler {
            SamplerChoice::SeededRandom { degree, seed } => {
                let params = derive(*degree)?;
                if params.mode == AmplifierMode::RsFallback {
                    (params, None)
                } else {
                    let g = SamplerGraph::build_seeded_random(params.n, *degree, *seed)?;
                    (params, Some(g))
                }
            }
            SamplerChoice::Explicit | SamplerChoice::Complete => {
                // The degree depends on the number of blocks, which depends
                // on the degree: iterate to a fixed point.
                let mut d = 2usize;
                let mut found = None;
                for _ in 0..32 {
                    let params = derive(d)?;
                    if params.mode == AmplifierMode::RsFallback {
                        found = Some((params, None));
                        break;
                    }
                    let g = match config.sampler {
                        SamplerChoice::Complete => SamplerGraph::complete(params.n),
                        _ => SamplerGraph::build_explicit(&params.sampler_params()?)?,
                    };
                    let gd = usize::try_from(g.degree()).map_err(|_| infeasible("sampler degree overflows"))?;
                    if gd == d {
                        found = Some((params, Some(g)));
                        break;
                    }
                    d = gd;
                }
                found.ok_or_else(|| infeasible("sampler degree and block count do not reach a fixed point"))?
            }
        };
        AmplifiedCode::assemble(inner, params, graph, config)
    }

    /// Builds from explicit parameters and graph (graph side = params.n,
    /// degree = params.d).
    pub fn from_parts(inner: W, params: AmplifierParams, graph: SamplerGraph) -> Result<AmplifiedCode<W>> {
        if params.mode == AmplifierMode::RsFallback {
            return Err(invalid("fallback mode has no sampler graph"));
        }
        let config = AmplifierConfig {
            contract: params.contract,
            target: 0.0,
            eps: 0.0,
            sampler: SamplerChoice::Complete,
            cert_trials: 0,
            cert_seed: 0,
            require_certificate: false,
        };
        AmplifiedCode::assemble(inner, params, Some(graph), &config)
    }

    fn assemble(
        inner: W,
        params: AmplifierParams,
        graph: Option<SamplerGraph>,
        config: &AmplifierConfig,
    ) -> Result<AmplifiedCode<W>> {
        if params.mode == AmplifierMode::RsFallback {
            let mf = inner.message_field();
            let k = inner.message_len();
            let rate = Rational::from_integer(1) - Rational::from_integer(2) * params.tau - params.eps;
            // Smallest n with (n - k + 1)/n >= 2 tau + eps.
            let n = k.max((Rational::from_integer(k as u128 - 1) / rate).ceil().to_integer() as usize);
            if (n as u64) > mf.order() {
                return Err(infeasible(format!(
                    "fallback RS code needs {n} points but GF(2^{}) has only {}",
                    mf.k(),
                    mf.order()
                )));
            }
            let rs = RsCode::new(&mf, n, k)?;
            return Ok(AmplifiedCode {
                inner,
                field: mf,
                params,
                rs: None,
                graph: None,
                fwd: Vec::new(),
                rev: Vec::new(),
                cert: None,
                fallback: Some(Fallback { rs }),
            });
        }
        let graph = graph.ok_or_else(|| invalid("missing sampler graph"))?;
        let d = params.d;
        if graph.n() != params.n || graph.degree() != d as u64 {
            return Err(invalid(format!(
                "graph has n={}, d={}; parameters need n={}, d={d}",
                graph.n(),
                graph.degree(),
                params.n
            )));
        }
        if params.n.checked_mul(d).is_none_or(|e| e > 1 << 26) {
            return Err(infeasible("sampler graph too large to tabulate"));
        }
        let cert = if config.cert_trials > 0 || config.require_certificate {
            let report = graph.certify(&params.sampler_params()?, config.cert_trials, config.cert_seed);
            if config.require_certificate && !report.pass {
                return Err(infeasible(format!(
                    "sampler fails ({}, {})-certification: lambda2 {:?} > {:.4}, max violation fraction {:.4}",
                    ratio_f64(params.tau_w),
                    ratio_f64(params.eps) / 2.0,
                    report.lambda2,
                    report.lambda_target,
                    report.max_violation_fraction
                )));
            }
            Some(report)
        } else {
            None
        };
        let field = Field::new(params.field_bits() as u32)?;
        let rs = RsCode::new(&field, d, params.b)?;
        let mut fwd = Vec::with_capacity(params.n * d);
        let mut rev = Vec::with_capacity(params.n * d);
        for u in 0..params.n {
            for j in 0..d as u64 {
                let (v, p) = graph.rotation_unchecked(u, j);
                fwd.push((v as u32, p as u32));
                let (w, q) = graph.reverse_rotation_unchecked(u, j);
                rev.push((w as u32, q as u32));
            }
        }
        Ok(AmplifiedCode { inner, params, field, rs: Some(rs), graph: Some(graph), fwd, rev, cert, fallback: None })
    }

    pub fn inner(&self) -> &W {
        &self.inner
    }
    pub fn params(&self) -> &AmplifierParams {
        &self.params
    }
    /// The block field F.
    pub fn field(&self) -> &Field {
        &self.field
    }
    pub fn graph(&self) -> Option<&SamplerGraph> {
        self.graph.as_ref()
    }
    pub fn certificate(&self) -> Option<&CertReport> {
        self.cert.as_ref()
    }
    pub fn block_code(&self) -> Option<&RsCode> {
        self.rs.as_ref()
    }
    pub fn mode(&self) -> AmplifierMode {
        self.params.mode
    }

    /// 0-based block holding 0-based inner coordinate `i`.
    pub fn block_of(&self, i: usize) -> usize {
        i / self.params.block_len()
    }

    /// Where symbol j of block u lands: (C coordinate, position).
    pub fn edge(&self, u: usize, j: usize) -> (usize, usize) {
        let (v, p) = self.fwd[u * self.params.d + j];
        (v as usize, p as usize)
    }

    /// Which (block, RS position) feeds position p of C coordinate v.
    pub fn back_edge(&self, v: usize, p: usize) -> (usize, usize) {
        let (u, j) = self.rev[v * self.params.d + p];
        (u as usize, j as usize)
    }

    fn inner_alphabet(&self) -> Alphabet {
        self.inner.alphabet()
    }

    /// The b block-field elements of block u of a padded inner word.
    fn pack_block(&self, w: &[W::Symbol], u: usize) -> Vec<FieldElement> {
        let (b, t, lam) = (self.params.b, self.params.t, self.params.lambda_bits);
        let alpha = self.inner_alphabet();
        (0..b)
            .map(|e| {
                let mut bits = 0u64;
                for s in 0..t {
                    let idx = u * b * t + e * t + s;
                    if idx < w.len() {
                        bits |= alpha.to_u64(&w[idx]) << (lam * s);
                    }
                }
                FieldElement::from_bits(bits as u32)
            })
            .collect()
    }

    /// Inner symbol at offset r of a block with field elements `msg`.
    fn unpack_symbol(&self, msg: &[FieldElement], r: usize) -> W::Symbol {
        let (t, lam) = (self.params.t, self.params.lambda_bits);
        let mask = if lam == 64 { u64::MAX } else { (1u64 << lam) - 1 };
        let bits = (u64::from(msg[r / t].bits()) >> (lam * (r % t))) & mask;
        self.inner_alphabet().from_u64(bits)
    }

    /// The W -> C bijection.
    pub fn amplify_encode(&self, w: &[W::Symbol]) -> Result<Vec<Vec<FieldElement>>> {
        if w.len() != self.params.n_w {
            return Err(invalid(format!("inner word has length {}, expected {}", w.len(), self.params.n_w)));
        }
        if self.fallback.is_some() {
            return Err(invalid("fallback mode encodes messages, not inner codewords"));
        }
        let rs = self.rs.as_ref().expect("amplified mode");
        let d = self.params.d;
        let mut c = vec![vec![FieldElement::ZERO; d]; self.params.n];
        for u in 0..self.params.n {
            let cw = rs.encode(&self.pack_block(w, u))?;
            for (j, &x) in cw.iter().enumerate() {
                let (v, p) = self.edge(u, j);
                c[v][p] = x;
            }
        }
        Ok(c)
    }

    /// The RS word of block u as received in `c`.
    pub fn block_word(&self, c: &[Vec<FieldElement>], u: usize) -> Vec<FieldElement> {
        (0..self.params.d)
            .map(|j| {
                let (v, p) = self.edge(u, j);
                c[v][p]
            })
            .collect()
    }

    /// The C -> W inverse; fails when some block is not an RS codeword.
    pub fn amplify_decode(&self, c: &[Vec<FieldElement>]) -> Result<Vec<W::Symbol>> {
        let rs = self.rs.as_ref().ok_or_else(|| invalid("fallback mode has no block structure"))?;
        if c.len() != self.params.n || c.iter().any(|s| s.len() != self.params.d) {
            return Err(invalid("amplified word has the wrong shape"));
        }
        let bt = self.params.block_len();
        let mut w = Vec::with_capacity(self.params.padded_len());
        for u in 0..self.params.n {
            let word = self.block_word(c, u);
            if !rs.is_codeword(&word) {
                return Err(CodeError::DecodeFailure);
            }
            let msg = rs.unencode(&word)?;
            w.extend((0..bt).map(|r| self.unpack_symbol(&msg, r)));
        }
        let zero: W::Symbol = self.inner_alphabet().zero();
        if w[self.params.n_w..].iter().any(|s| *s != zero) {
            return Err(CodeError::DecodeFailure);
        }
        w.truncate(self.params.n_w);
        Ok(w)
    }

    /// Decodes block u from the oracle within the block radius; `None` when
    /// nothing is close enough.
    fn decode_block(
        &self,
        oracle: &dyn Oracle<Vec<FieldElement>>,
        u: usize,
        reads: &Cell<u64>,
    ) -> Option<Vec<FieldElement>> {
        let rs = self.rs.as_ref().expect("amplified mode");
        let word: Vec<FieldElement> = (0..self.params.d)
            .map(|j| {
                let (v, p) = self.edge(u, j);
                oracle.query(v)[p]
            })
            .collect();
        reads.set(reads.get() + self.params.d as u64);
        rs.decode_within(&word, self.params.block_radius()).ok()
    }

    /// A0: the inner symbol at 0-based coordinate `i_w`, read from block
    /// i_w / (b t); the zero symbol when the block does not decode.
    pub fn a0_correct(&self, oracle: &dyn Oracle<Vec<FieldElement>>, i_w: usize) -> Result<W::Symbol> {
        if self.rs.is_none() {
            return Err(invalid("fallback mode has no blocks"));
        }
        if i_w >= self.params.n_w {
            return Err(invalid(format!("inner coordinate {i_w} out of range")));
        }
        let emu = BlockOracle::new(self, oracle);
        Ok(Oracle::query(&emu, i_w))
    }

    /// Runs the inner corrector up to R times on the emulated inner word and
    /// returns the majority answer, stopping once a strict majority exists.
    fn majority_inner(
        &self,
        emu: &BlockOracle<'_, W>,
        i_w: usize,
        rng: &mut TrialRng,
        emulated: &mut u64,
    ) -> Result<W::Symbol> {
        let reps = self.params.majority_reps();
        let alpha = self.inner_alphabet();
        let mut votes: HashMap<W::Symbol, usize> = HashMap::new();
        for _ in 0..reps {
            match self.inner.local_correct(emu, i_w, rng) {
                Ok(c) => {
                    *emulated += c.emulated_queries * self.params.d as u64;
                    let v = votes.entry(c.symbol).or_insert(0);
                    *v += 1;
                    if *v * 2 > reps {
                        break;
                    }
                }
                Err(CodeError::CorrectFailure(_)) => {
                    *emulated += self.inner.correct_budget().unwrap_or(0) * self.params.d as u64;
                }
                Err(e) => return Err(e),
            }
        }
        votes
            .into_iter()
            .max_by(|a, b| a.1.cmp(&b.1).then_with(|| alpha.to_u64(&b.0).cmp(&alpha.to_u64(&a.0))))
            .map(|(s, _)| s)
            .ok_or_else(|| CodeError::CorrectFailure(format!("inner corrector failed at coordinate {i_w}")))
    }

    fn fallback_correct(
        &self,
        fb: &Fallback,
        oracle: &dyn Oracle<Vec<FieldElement>>,
        i: usize,
    ) -> Result<Corrected<Vec<FieldElement>>> {
        let n = fb.rs.n();
        let word: Vec<FieldElement> = (0..n).map(|j| oracle.query(j)[0]).collect();
        let msg = fb
            .rs
            .decode_unique(&word)
            .map_err(|_| CodeError::CorrectFailure("fallback RS word is not decodable".into()))?;
        let cw = fb.rs.encode(&msg)?;
        Ok(Corrected { symbol: vec![cw[i]], emulated_queries: n as u64 })
    }

    /// Closed-form instance descriptor.
    pub fn descriptor(&self) -> serde_json::Value {
        let p = &self.params;
        serde_json::json!({
            "mode": p.mode,
            "contract": p.contract,
            "tau": p.tau.to_string(),
            "tau_w": p.tau_w.to_string(),
            "eps": p.eps.to_string(),
            "b": p.b,
            "t": p.t,
            "d": p.d,
            "n": p.n,
            "field": self.field.spec(),
            "sampler": self.graph.as_ref().map(|g| g.mode().clone()),
            "inner": self.inner.code_id(),
        })
    }
}

/// The inner word as seen through A0, with a per-invocation block memo.
struct BlockOracle<'a, W: LocalCode> {
    code: &'a AmplifiedCode<W>,
    outer: &'a dyn Oracle<Vec<FieldElement>>,
    memo: RefCell<HashMap<usize, Option<Vec<FieldElement>>>>,
    reads: Cell<u64>,
}

impl<'a, W: LocalCode> BlockOracle<'a, W> {
    fn new(code: &'a AmplifiedCode<W>, outer: &'a dyn Oracle<Vec<FieldElement>>) -> Self {
        BlockOracle { code, outer, memo: RefCell::new(HashMap::new()), reads: Cell::new(0) }
    }
}

impl<W: LocalCode> Oracle<W::Symbol> for BlockOracle<'_, W> {
    fn len(&self) -> usize {
        self.code.params.n_w
    }

    fn query(&self, i: usize) -> W::Symbol {
        let bt = self.code.params.block_len();
        let u = i / bt;
        let cached = self.memo.borrow().get(&u).cloned();
        let msg = match cached {
            Some(m) => m,
            None => {
                let m = self.code.decode_block(self.outer, u, &self.reads);
                self.memo.borrow_mut().insert(u, m.clone());
                m
            }
        };
        match msg {
            Some(m) => self.code.unpack_symbol(&m, i % bt),
            None => self.code.inner_alphabet().zero(),
        }
    }
}

/// The inner word as seen by the tester: a block that is not exactly an RS
/// codeword, or that contains an erased symbol, reads as erased.
struct TesterOracle<'a, W: LocalCode> {
    code: &'a AmplifiedCode<W>,
    outer: &'a dyn ErasableOracle<Vec<FieldElement>>,
    memo: RefCell<HashMap<usize, Option<Vec<FieldElement>>>>,
    emulated: Cell<u64>,
}

impl<W: LocalCode> ErasableOracle<W::Symbol> for TesterOracle<'_, W> {
    fn len(&self) -> usize {
        self.code.params.n_w
    }

    fn query(&self, i: usize) -> Option<W::Symbol> {
        let p = &self.code.params;
        let bt = p.block_len();
        let u = i / bt;
        self.emulated.set(self.emulated.get() + p.d as u64);
        let cached = self.memo.borrow().get(&u).cloned();
        let msg = match cached {
            Some(m) => m,
            None => {
                let rs = self.code.rs.as_ref().expect("amplified mode");
                let mut word = Vec::with_capacity(p.d);
                for j in 0..p.d {
                    let (v, pos) = self.code.edge(u, j);
                    match self.outer.query(v) {
                        Some(sym) => word.push(sym[pos]),
                        None => break,
                    }
                }
                let m = (word.len() == p.d && rs.is_codeword(&word)).then(|| rs.unencode(&word).ok()).flatten();
                self.memo.borrow_mut().insert(u, m.clone());
                m
            }
        };
        msg.map(|m| self.code.unpack_symbol(&m, i % bt))
    }
}

impl<W: LocalCode> LocalCode for AmplifiedCode<W> {
    type Symbol = Vec<FieldElement>;

    fn code_id(&self) -> String {
        let p = &self.params;
        format!(
            "amp[{}](b={},t={},d={},n={})<{}>",
            mode_name(p.mode),
            p.b,
            p.t,
            p.d,
            self.block_length(),
            self.inner.code_id()
        )
    }

    fn block_length(&self) -> usize {
        match &self.fallback {
            Some(fb) => fb.rs.n(),
            None => self.params.n,
        }
    }

    fn alphabet(&self) -> Alphabet {
        match &self.fallback {
            Some(_) => Alphabet::new(&self.field, 1),
            None => Alphabet::new(&self.field, self.params.d),
        }
    }

    fn message_field(&self) -> Field {
        self.inner.message_field()
    }

    fn message_len(&self) -> usize {
        self.inner.message_len()
    }

    /// 2 tau for LCC instances, delta for LTC instances.
    fn distance_bound(&self) -> Rational {
        Rational::from_integer(2) * self.params.tau
    }

    fn encode(&self, message: &[FieldElement]) -> Result<Vec<Vec<FieldElement>>> {
        match &self.fallback {
            Some(fb) => Ok(fb.rs.encode(message)?.into_iter().map(|x| vec![x]).collect()),
            None => self.amplify_encode(&self.inner.encode(message)?),
        }
    }

    fn is_codeword(&self, word: &[Vec<FieldElement>]) -> bool {
        match &self.fallback {
            Some(fb) => {
                word.iter().all(|s| s.len() == 1) && fb.rs.is_codeword(&word.iter().map(|s| s[0]).collect::<Vec<_>>())
            }
            None => self.amplify_decode(word).is_ok_and(|w| self.inner.is_codeword(&w)),
        }
    }

    fn correction_radius(&self) -> Option<Rational> {
        match self.params.contract {
            Contract::Lcc => Some(self.params.tau),
            Contract::Ltc => None,
        }
    }

    /// b t d R q_W d.
    fn correct_budget(&self) -> Option<u64> {
        if self.params.contract != Contract::Lcc {
            return None;
        }
        if let Some(fb) = &self.fallback {
            return Some(fb.rs.n() as u64);
        }
        let p = &self.params;
        let q_w = self.inner.correct_budget()?;
        Some((p.b * p.t * p.d * p.majority_reps()) as u64 * q_w * p.d as u64)
    }

    fn local_correct(
        &self,
        oracle: &dyn Oracle<Vec<FieldElement>>,
        i: usize,
        rng: &mut TrialRng,
    ) -> Result<Corrected<Vec<FieldElement>>> {
        if self.params.contract != Contract::Lcc {
            return Err(CodeError::Unsupported(format!("{} was built for testing", self.code_id())));
        }
        if i >= self.block_length() {
            return Err(invalid(format!("coordinate {i} out of range")));
        }
        if let Some(fb) = &self.fallback {
            return self.fallback_correct(fb, oracle, i);
        }
        let p = &self.params;
        let rs = self.rs.as_ref().expect("amplified mode");
        let bt = p.block_len();
        let emu = BlockOracle::new(self, oracle);
        let mut emulated = 0u64;
        let mut blocks: HashMap<usize, Vec<FieldElement>> = HashMap::new();
        let zero: W::Symbol = self.inner_alphabet().zero();
        let mut out = vec![FieldElement::ZERO; p.d];
        for (pos, slot) in out.iter_mut().enumerate() {
            let (u, j) = self.back_edge(i, pos);
            if let std::collections::hash_map::Entry::Vacant(e) = blocks.entry(u) {
                let mut w = Vec::with_capacity(bt);
                for r in 0..bt {
                    let iw = u * bt + r;
                    w.push(if iw >= p.n_w { zero.clone() } else { self.majority_inner(&emu, iw, rng, &mut emulated)? });
                }
                // pack_block indexes by absolute coordinate; shift to block 0.
                let msg = self.pack_block(&w, 0);
                e.insert(rs.encode(&msg)?);
            }
            *slot = blocks[&u][j];
        }
        Ok(Corrected { symbol: out, emulated_queries: emulated })
    }

    fn test_budget(&self) -> Option<u64> {
        if self.params.contract != Contract::Ltc {
            return None;
        }
        if let Some(fb) = &self.fallback {
            return Some(fb.rs.n() as u64);
        }
        let inner = self.inner.test_budget()?;
        Some(self.params.tester_reps() as u64 * inner * self.params.d as u64)
    }

    /// ceil(4/rho) runs of the inner tester on the emulated inner word;
    /// rejects as soon as one run rejects.
    fn local_test(&self, oracle: &dyn ErasableOracle<Vec<FieldElement>>, rng: &mut TrialRng) -> Result<TestOutcome> {
        if self.params.contract != Contract::Ltc {
            return Err(CodeError::Unsupported(format!("{} was built for correction", self.code_id())));
        }
        if let Some(fb) = &self.fallback {
            let n = fb.rs.n();
            let mut word = Vec::with_capacity(n);
            for j in 0..n {
                match oracle.query(j) {
                    Some(s) if s.len() == 1 => word.push(s[0]),
                    _ => return Ok(TestOutcome { accept: false, emulated_queries: n as u64 }),
                }
            }
            return Ok(TestOutcome { accept: fb.rs.is_codeword(&word), emulated_queries: n as u64 });
        }
        let emu =
            TesterOracle { code: self, outer: oracle, memo: RefCell::new(HashMap::new()), emulated: Cell::new(0) };
        for _ in 0..self.params.tester_reps() {
            if !self.inner.local_test(&emu, rng)?.accept {
                return Ok(TestOutcome { accept: false, emulated_queries: emu.emulated.get() });
            }
        }
        Ok(TestOutcome { accept: true, emulated_queries: emu.emulated.get() })
    }
}

fn mode_name(m: AmplifierMode) -> &'static str {
    match m {
        AmplifierMode::Amplified => "amplified",
        AmplifierMode::Padded => "padded",
        AmplifierMode::RsFallback => "rs_fallback",
    }
}
