//! Command-line front end: instance configs, `build`, `schedule-check` and
//! `experiment`.
//!
//! Exit codes: 0 success, 1 a suite or schedule assertion failed, 2 the
//! config or instance file is malformed (or the suite does not apply), 3 the
//! parameters are infeasible.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::amplifier::{ratio_f64, to_rational, AmplifiedCode, AmplifierConfig};
use crate::brute;
use crate::code_api::{
    run_correction_trials, run_test_trials, trial_rng, write_csv, ChannelKind, CoordinatePolicy, CorruptionChannel,
    LocalCode, QueryCountingOracle, Rational, Symbol, TrialReport, THREADS_ENV,
};
use crate::concat::{ConcatenatedCode, InnerBinaryCode};
use crate::error::CodeError;
use crate::gf::{Field, FieldSpec};
use crate::multiplicity::MultiplicityCode;
use crate::reed_solomon::RsCode;
use crate::schedule::{count_facts, schedule_check, CSV_HEADER};
use crate::tensor::TensorCode;

/// Tag written into every instance file.
pub const INSTANCE_FORMAT: &str = "locality-codes-instance/1";

/// Exhaustive distance proofs are attempted up to this many message bits.
const PROOF_MESSAGE_BITS: usize = 16;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RsConfig {
    pub field: FieldSpec,
    pub n: usize,
    pub k: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MultiplicityConfig {
    pub field: FieldSpec,
    pub m: usize,
    pub s: usize,
    pub d: usize,
    /// Precompute a systematic information set.
    #[serde(default)]
    pub systematic: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TensorConfig {
    pub field: FieldSpec,
    /// Base RS block length.
    pub ell: usize,
    /// Base RS dimension.
    pub k: usize,
    pub m: usize,
    /// Single-trial soundness constant; defaults to 1/(4m).
    #[serde(default)]
    pub rho_base: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AmplifiedConfig {
    pub inner: BaseConfig,
    pub amplifier: AmplifierConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InnerBinaryConfig {
    pub n: usize,
    pub k: usize,
    /// Minimum distance the greedy search must reach.
    pub min_dist: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConcatConfig {
    pub outer: OuterConfig,
    pub inner: InnerBinaryConfig,
}

/// Codes that can sit inside the amplifier.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum BaseConfig {
    Rs(RsConfig),
    Multiplicity(MultiplicityConfig),
    Tensor(TensorConfig),
}

/// Codes that can be concatenated with a binary inner code.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum OuterConfig {
    Rs(RsConfig),
    Multiplicity(MultiplicityConfig),
    Tensor(TensorConfig),
    Amplified(AmplifiedConfig),
}

/// A complete instance description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum InstanceConfig {
    Rs(RsConfig),
    Multiplicity(MultiplicityConfig),
    Tensor(TensorConfig),
    Amplified(AmplifiedConfig),
    Concat(ConcatConfig),
}

#[derive(Debug)]
pub enum CliError {
    /// Malformed config, instance file or request.
    Schema(String),
    Infeasible(String),
    Assertion(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Assertion(_) => 1,
            CliError::Schema(_) | CliError::Io(_) => 2,
            CliError::Infeasible(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Schema(m) => write!(f, "invalid input: {m}"),
            CliError::Infeasible(m) => write!(f, "infeasible parameters: {m}"),
            CliError::Assertion(m) => write!(f, "assertion failed: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

fn build_err(e: CodeError) -> CliError {
    match e {
        CodeError::Infeasible(m) => CliError::Infeasible(m),
        CodeError::InvalidArgument(m) => CliError::Infeasible(m),
        CodeError::Unsupported(m) => CliError::Schema(m),
        other => CliError::Infeasible(other.to_string()),
    }
}

/// The experiment suites.
#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    /// Uncorrupted words: the tester never rejects, the corrector never errs.
    Completeness,
    /// Correction at the declared radius must succeed at least 2/3 of the time.
    LccContract,
    /// Every trial stays within the declared query budget.
    QueryAudit,
}

/// A built instance with its type erased.
pub trait Instance: Send + Sync {
    fn summary(&self) -> Value;
    fn artifacts(&self) -> &Map<String, Value>;
    fn run_suite(&self, suite: Suite, trials: usize, seed: u64) -> Result<SuiteResult, CliError>;

    fn block_length(&self) -> usize;
    fn message_len(&self) -> usize;
    /// Bytes per serialized symbol: every element little-endian in
    /// ceil(k/8) bytes.
    fn symbol_bytes(&self) -> usize;
    /// Encodes a message given as raw element bits.
    fn encode_bytes(&self, message: &[u32]) -> crate::Result<Vec<u8>>;
    /// Locally corrects coordinate `i` of a serialized word; returns the
    /// symbol and the number of queries made.
    fn correct_bytes(&self, word: &[u8], i: usize, seed: u64) -> crate::Result<(Vec<u8>, u64)>;
    /// One run of the local tester on a serialized word.
    fn test_bytes(&self, word: &[u8], seed: u64) -> crate::Result<bool>;
}

/// Rows in output order, plus a description of every failing row.
#[derive(Clone, Debug)]
pub struct SuiteResult {
    pub rows: Vec<TrialReport>,
    pub failures: Vec<String>,
}

struct Wrapped<C: LocalCode> {
    code: C,
    artifacts: Map<String, Value>,
}

fn opt_rational(r: Option<Rational>) -> Value {
    r.map_or(Value::Null, |r| Value::String(r.to_string()))
}

fn distance_proof<C: LocalCode>(code: &C) -> Value {
    let bits = code.message_len() * code.message_field().k() as usize;
    let n = code.block_length();
    let bound = code.distance_bound();
    if bits <= PROOF_MESSAGE_BITS && (1usize << bits).saturating_mul(n) <= 1 << 22 {
        if let Ok(d) = brute::exact_min_distance(code) {
            let rel = Rational::new(d as u128, n as u128);
            return json!({
                "method": "exhaustive",
                "min_distance": d,
                "relative": rel.to_string(),
                "bound": bound.to_string(),
                "bound_holds": rel >= bound,
            });
        }
    }
    json!({ "method": "declared", "bound": bound.to_string() })
}

impl<C: LocalCode> Wrapped<C> {
    fn row_failure(i: usize, r: &TrialReport, what: &str) -> String {
        format!("row {} ({}, {}, rate {}): {what}", i + 1, r.code_id, r.channel, r.rate)
    }

    fn correction(&self, kind: ChannelKind, rate: f64, trials: usize, seed: u64) -> Result<TrialReport, CliError> {
        let ch = CorruptionChannel::new(kind, rate).map_err(|e| CliError::Schema(e.to_string()))?;
        run_correction_trials(&self.code, &ch, CoordinatePolicy::Random, trials, seed).map_err(build_err)
    }

    fn symbols(&self, word: &[u8]) -> crate::Result<Vec<C::Symbol>> {
        let a = self.code.alphabet();
        let w = a.len * a.field.byte_len();
        if word.len() != w * self.code.block_length() {
            return Err(CodeError::InvalidArgument(format!(
                "word of {} bytes, expected {}",
                word.len(),
                w * self.code.block_length()
            )));
        }
        word.chunks(w)
            .map(|c| {
                let elems: crate::Result<Vec<_>> =
                    c.chunks(a.field.byte_len()).map(|b| a.field.from_bytes(b)).collect();
                Ok(C::Symbol::from_elems(&elems?))
            })
            .collect()
    }

    fn symbol_to_bytes(&self, s: &C::Symbol, out: &mut Vec<u8>) {
        let f = self.code.alphabet().field;
        for &e in s.elems() {
            out.extend(f.to_bytes(e));
        }
    }

    fn testing(&self, kind: ChannelKind, rate: f64, trials: usize, seed: u64) -> Result<TrialReport, CliError> {
        let ch = CorruptionChannel::new(kind, rate).map_err(|e| CliError::Schema(e.to_string()))?;
        run_test_trials(&self.code, &ch, trials, seed).map_err(build_err)
    }
}

impl<C: LocalCode> Instance for Wrapped<C> {
    fn summary(&self) -> Value {
        let c = &self.code;
        json!({
            "code_id": c.code_id(),
            "block_length": c.block_length(),
            "alphabet_bits": c.alphabet().bits(),
            "message_field": c.message_field().spec(),
            "message_len": c.message_len(),
            "rate": c.rate().to_string(),
            "distance_bound": c.distance_bound().to_string(),
            "correction_radius": opt_rational(c.correction_radius()),
            "correct_budget": c.correct_budget(),
            "test_budget": c.test_budget(),
        })
    }

    fn artifacts(&self) -> &Map<String, Value> {
        &self.artifacts
    }

    fn block_length(&self) -> usize {
        self.code.block_length()
    }

    fn message_len(&self) -> usize {
        self.code.message_len()
    }

    fn symbol_bytes(&self) -> usize {
        let a = self.code.alphabet();
        a.len * a.field.byte_len()
    }

    fn encode_bytes(&self, message: &[u32]) -> crate::Result<Vec<u8>> {
        let f = self.code.message_field();
        let msg: crate::Result<Vec<_>> = message.iter().map(|&b| f.element(b)).collect();
        let cw = self.code.encode(&msg?)?;
        let mut out = Vec::with_capacity(cw.len() * self.symbol_bytes());
        for s in &cw {
            self.symbol_to_bytes(s, &mut out);
        }
        Ok(out)
    }

    fn correct_bytes(&self, word: &[u8], i: usize, seed: u64) -> crate::Result<(Vec<u8>, u64)> {
        let w = self.symbols(word)?;
        let oracle = QueryCountingOracle::new(&w);
        let c = self.code.local_correct(&oracle, i, &mut trial_rng(seed, 0))?;
        let mut out = Vec::new();
        self.symbol_to_bytes(&c.symbol, &mut out);
        Ok((out, oracle.count()))
    }

    fn test_bytes(&self, word: &[u8], seed: u64) -> crate::Result<bool> {
        let w = self.symbols(word)?;
        let oracle = QueryCountingOracle::new(&w);
        Ok(self.code.local_test(&oracle, &mut trial_rng(seed, 0))?.accept)
    }

    fn run_suite(&self, suite: Suite, trials: usize, seed: u64) -> Result<SuiteResult, CliError> {
        let radius = self.code.correction_radius();
        let testable = self.code.test_budget().is_some();
        if radius.is_none() && !testable {
            return Err(CliError::Schema(format!("{} has neither a corrector nor a tester", self.code.code_id())));
        }
        let mut rows = Vec::new();
        let mut failures = Vec::new();
        match suite {
            Suite::Completeness => {
                if testable {
                    rows.push(self.testing(ChannelKind::RandomSymbols, 0.0, trials, seed)?);
                }
                if radius.is_some() {
                    rows.push(self.correction(ChannelKind::RandomSymbols, 0.0, trials, seed)?);
                }
                for (i, r) in rows.iter().enumerate() {
                    if r.successes != r.trials {
                        failures.push(Self::row_failure(
                            i,
                            r,
                            &format!("{} of {} trials wrong", r.trials - r.successes, r.trials),
                        ));
                    }
                }
            }
            Suite::LccContract => {
                let r = radius
                    .ok_or_else(|| CliError::Schema(format!("{} has no local corrector", self.code.code_id())))?;
                let rate = ratio_f64(r);
                rows.push(self.correction(ChannelKind::RandomSymbols, rate, trials, seed)?);
                rows.push(self.correction(ChannelKind::AdversarialGreedy { paths: 2 }, rate, trials, seed ^ 1)?);
                for (i, r) in rows.iter().enumerate() {
                    if 3 * r.successes < 2 * r.trials {
                        failures.push(Self::row_failure(
                            i,
                            r,
                            &format!("success rate {:.4} below 2/3", r.success_rate()),
                        ));
                    }
                    if !r.within_budget() {
                        failures.push(Self::row_failure(i, r, "query budget exceeded"));
                    }
                }
            }
            Suite::QueryAudit => {
                if let Some(r) = radius {
                    let rate = ratio_f64(r);
                    for x in [0.0, rate / 2.0, rate] {
                        rows.push(self.correction(ChannelKind::RandomSymbols, x, trials, seed)?);
                    }
                }
                if testable {
                    rows.push(self.testing(ChannelKind::RandomSymbols, 0.0, trials, seed)?);
                    rows.push(self.testing(ChannelKind::RandomSymbols, 0.05, trials, seed)?);
                    rows.push(self.testing(ChannelKind::Erasures, 0.05, trials, seed)?);
                }
                for (i, r) in rows.iter().enumerate() {
                    if r.budget.is_none() || !r.within_budget() {
                        failures.push(Self::row_failure(
                            i,
                            r,
                            &format!(
                                "max_queries {} (emulated {}) exceeds budget {:?}",
                                r.max_queries, r.max_emulated_queries, r.budget
                            ),
                        ));
                    }
                }
            }
        }
        Ok(SuiteResult { rows, failures })
    }
}

/// Continuation taking a concrete code; lets nested families be built
/// without naming every combination.
trait Visit {
    fn visit<C: LocalCode + 'static>(
        self,
        code: C,
        artifacts: Map<String, Value>,
    ) -> Result<Box<dyn Instance>, CliError>;
}

struct Finish;

impl Visit for Finish {
    fn visit<C: LocalCode + 'static>(
        self,
        code: C,
        mut artifacts: Map<String, Value>,
    ) -> Result<Box<dyn Instance>, CliError> {
        artifacts.insert("distance_proof".into(), distance_proof(&code));
        Ok(Box::new(Wrapped { code, artifacts }))
    }
}

struct Amplify<'a, V> {
    config: &'a AmplifierConfig,
    next: V,
}

impl<V: Visit> Visit for Amplify<'_, V> {
    fn visit<C: LocalCode + 'static>(
        self,
        code: C,
        artifacts: Map<String, Value>,
    ) -> Result<Box<dyn Instance>, CliError> {
        let amp = AmplifiedCode::build(code, self.config).map_err(build_err)?;
        let mut out = Map::new();
        out.insert("inner".into(), Value::Object(artifacts));
        out.insert("amplifier".into(), amp.descriptor());
        out.insert("certificate".into(), serde_json::to_value(amp.certificate()).unwrap_or(Value::Null));
        self.next.visit(amp, out)
    }
}

struct Concat<V> {
    inner: InnerBinaryCode,
    next: V,
}

impl<V: Visit> Visit for Concat<V> {
    fn visit<C: LocalCode + 'static>(
        self,
        code: C,
        artifacts: Map<String, Value>,
    ) -> Result<Box<dyn Instance>, CliError> {
        let mut out = Map::new();
        out.insert("outer".into(), Value::Object(artifacts));
        out.insert(
            "inner_code".into(),
            json!({
                "n": self.inner.n(),
                "k": self.inner.k(),
                "generator_rows": self.inner.rows(),
                "min_distance": self.inner.min_dist(),
                "min_distance_method": "exhaustive",
            }),
        );
        let code = ConcatenatedCode::new(code, self.inner).map_err(build_err)?;
        self.next.visit(code, out)
    }
}

fn field(spec: &FieldSpec) -> Result<Field, CliError> {
    Field::from_spec(spec).map_err(build_err)
}

fn build_rs<V: Visit>(c: &RsConfig, v: V) -> Result<Box<dyn Instance>, CliError> {
    let f = field(&c.field)?;
    let code = RsCode::new(&f, c.n, c.k).map_err(build_err)?;
    let mut a = Map::new();
    a.insert("min_distance_formula".into(), json!(c.n.saturating_sub(c.k) + 1));
    v.visit(code, a)
}

fn build_multiplicity<V: Visit>(c: &MultiplicityConfig, v: V) -> Result<Box<dyn Instance>, CliError> {
    let f = field(&c.field)?;
    let mut code = MultiplicityCode::new(&f, c.m, c.s, c.d).map_err(build_err)?;
    if c.systematic {
        code = code.with_systematic().map_err(build_err)?;
    }
    let mut a = Map::new();
    a.insert("field_condition".into(), json!(code.field_condition()));
    a.insert("correctable".into(), json!(code.correction_radius().is_some()));
    a.insert("rate_formula".into(), json!(code.rate_formula().to_string()));
    a.insert("n_dirs".into(), json!(code.n_dirs()));
    a.insert("line_radius".into(), json!(code.line_radius()));
    v.visit(code, a)
}

fn build_tensor<V: Visit>(c: &TensorConfig, v: V) -> Result<Box<dyn Instance>, CliError> {
    let f = field(&c.field)?;
    let base = RsCode::new(&f, c.ell, c.k).map_err(build_err)?;
    let code = match c.rho_base {
        Some(rho) => TensorCode::with_rho(base, c.m, to_rational(rho).map_err(build_err)?),
        None => TensorCode::new(base, c.m),
    }
    .map_err(build_err)?;
    let mut a = Map::new();
    a.insert("rho_base".into(), json!(code.rho_base().to_string()));
    a.insert("repetitions".into(), json!(code.repetitions()));
    a.insert("plane_count".into(), json!(code.plane_count()));
    a.insert("min_distance_formula".into(), json!((c.ell.saturating_sub(c.k) + 1).pow(c.m as u32)));
    v.visit(code, a)
}

fn build_base<V: Visit>(c: &BaseConfig, v: V) -> Result<Box<dyn Instance>, CliError> {
    match c {
        BaseConfig::Rs(c) => build_rs(c, v),
        BaseConfig::Multiplicity(c) => build_multiplicity(c, v),
        BaseConfig::Tensor(c) => build_tensor(c, v),
    }
}

fn build_outer<V: Visit>(c: &OuterConfig, v: V) -> Result<Box<dyn Instance>, CliError> {
    match c {
        OuterConfig::Rs(c) => build_rs(c, v),
        OuterConfig::Multiplicity(c) => build_multiplicity(c, v),
        OuterConfig::Tensor(c) => build_tensor(c, v),
        OuterConfig::Amplified(a) => build_base(&a.inner, Amplify { config: &a.amplifier, next: v }),
    }
}

/// Constructs the code a config describes.
pub fn build_instance(config: &InstanceConfig) -> Result<Box<dyn Instance>, CliError> {
    match config {
        InstanceConfig::Rs(c) => build_rs(c, Finish),
        InstanceConfig::Multiplicity(c) => build_multiplicity(c, Finish),
        InstanceConfig::Tensor(c) => build_tensor(c, Finish),
        InstanceConfig::Amplified(a) => build_base(&a.inner, Amplify { config: &a.amplifier, next: Finish }),
        InstanceConfig::Concat(c) => {
            let inner = InnerBinaryCode::greedy(c.inner.n, c.inner.k, c.inner.min_dist).map_err(build_err)?;
            build_outer(&c.outer, Concat { inner, next: Finish })
        }
    }
}

pub fn parse_config(text: &str) -> Result<InstanceConfig, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::Schema(e.to_string()))
}

fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Schema(format!("{}: {e}", path.display())))
}

/// The instance file: the config plus everything derived from it.
pub fn instance_document(config: &InstanceConfig, instance: &dyn Instance) -> Value {
    json!({
        "format": INSTANCE_FORMAT,
        "config": config,
        "summary": instance.summary(),
        "artifacts": instance.artifacts(),
    })
}

pub fn cmd_build(config_path: &Path, out: &Path) -> Result<Value, CliError> {
    let config = parse_config(&read_text(config_path)?)?;
    let instance = build_instance(&config)?;
    let doc = instance_document(&config, instance.as_ref());
    let mut w = BufWriter::new(File::create(out)?);
    serde_json::to_writer_pretty(&mut w, &doc).map_err(|e| CliError::Io(e.to_string()))?;
    writeln!(w)?;
    w.flush()?;
    Ok(doc)
}

/// Rebuilds an instance from its file; the stored summary must match.
pub fn load_instance(path: &Path) -> Result<(InstanceConfig, Box<dyn Instance>), CliError> {
    let doc: Value = serde_json::from_str(&read_text(path)?).map_err(|e| CliError::Schema(e.to_string()))?;
    if doc.get("format").and_then(Value::as_str) != Some(INSTANCE_FORMAT) {
        return Err(CliError::Schema(format!("{} is not an instance file", path.display())));
    }
    let config: InstanceConfig =
        serde_json::from_value(doc["config"].clone()).map_err(|e| CliError::Schema(format!("instance config: {e}")))?;
    let instance = build_instance(&config)?;
    if doc.get("summary") != Some(&instance.summary()) {
        return Err(CliError::Schema("instance summary does not match its config".into()));
    }
    Ok((config, instance))
}

pub fn cmd_experiment(
    instance_path: &Path,
    suite: Suite,
    out: &Path,
    trials: usize,
    seed: u64,
) -> Result<SuiteResult, CliError> {
    let (_, instance) = load_instance(instance_path)?;
    let result = instance.run_suite(suite, trials, seed)?;
    let w = BufWriter::new(File::create(out)?);
    write_csv(&result.rows, w)?;
    if let Some(first) = result.failures.first() {
        return Err(CliError::Assertion(first.clone()));
    }
    Ok(result)
}

/// Accepts a decimal integer or `2^k`.
pub fn parse_n_max(s: &str) -> Result<u128, String> {
    let v = match s.split_once('^') {
        Some(("2", e)) => {
            let e: u32 = e.trim().parse().map_err(|_| format!("bad exponent in {s:?}"))?;
            if e > 64 {
                return Err(format!("{s} exceeds 2^64"));
            }
            1u128 << e
        }
        Some(_) => return Err(format!("only powers of two may be written as a^b, got {s:?}")),
        None => s.trim().parse::<u128>().map_err(|e| format!("{s:?}: {e}"))?,
    };
    if v > 1u128 << 64 {
        return Err(format!("{s} exceeds 2^64"));
    }
    Ok(v)
}

pub fn cmd_schedule_check(n_max: u128, out: &Path) -> Result<usize, CliError> {
    let rows = schedule_check(n_max);
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(out)?));
    let io = |e: csv::Error| CliError::Io(e.to_string());
    w.write_record(CSV_HEADER).map_err(io)?;
    for r in &rows {
        w.write_record(r.csv_record()).map_err(io)?;
    }
    w.flush()?;
    if let Some(bad) = rows.iter().find(|r| !r.ok) {
        return Err(CliError::Assertion(format!("schedule check fails at log2 n = {}", bad.log2_n)));
    }
    Ok(count_facts(&rows))
}

#[derive(Debug, Parser)]
#[command(name = "locality-codes", version, about = "Locally correctable and testable codes")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build an instance from a JSON config.
    Build {
        #[arg(short = 'c', long)]
        config: PathBuf,
        #[arg(short = 'o', long)]
        out: PathBuf,
    },
    /// Verify the asymptotic parameter schedules for n up to N.
    ScheduleCheck {
        #[arg(long, value_parser = parse_n_max)]
        n_max: u128,
        #[arg(short = 'o', long)]
        out: PathBuf,
    },
    /// Run an experiment suite against an instance file.
    Experiment {
        #[arg(short = 'i', long)]
        instance: PathBuf,
        #[arg(short = 's', long, value_enum)]
        suite: Suite,
        #[arg(short = 'o', long)]
        out: PathBuf,
        #[arg(long, default_value_t = 200)]
        trials: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

/// Caps the global rayon pool when the thread variable is set.
pub fn init_threads() {
    if let Some(n) = std::env::var(THREADS_ENV).ok().and_then(|v| v.parse::<usize>().ok()) {
        // Fails only if the pool already exists, in which case keep it.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

/// Runs one parsed command; returns the line to print on success.
pub fn run(cli: Cli) -> Result<String, CliError> {
    init_threads();
    match cli.command {
        Command::Build { config, out } => {
            let doc = cmd_build(&config, &out)?;
            Ok(format!("built {} -> {}", doc["summary"]["code_id"].as_str().unwrap_or("?"), out.display()))
        }
        Command::ScheduleCheck { n_max, out } => {
            let facts = cmd_schedule_check(n_max, &out)?;
            Ok(format!("schedule ok; {facts} Fact evaluations -> {}", out.display()))
        }
        Command::Experiment { instance, suite, out, trials, seed } => {
            let r = cmd_experiment(&instance, suite, &out, trials, seed)?;
            Ok(format!("{} rows, all assertions pass -> {}", r.rows.len(), out.display()))
        }
    }
}
