//! Evolved circuit distinguishers.
//!
//! A small genetic algorithm evolves byte circuits that try to tell cipher
//! test vectors from reference random vectors. The best circuit of a run is
//! checked on fresh vectors; the run rejects randomness when its accuracy
//! exceeds what a coin could plausibly reach.

pub mod genome;

use std::fmt;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use genome::{CircuitGenome, CompiledCircuit, Node, NodeFn};

use crate::aead::Registry;
use crate::error::{Error, Result};
use crate::rng::{derive_seed, streams, ReferenceRng};
use crate::stats::special::binomial_quantile;
use crate::stats::Verdict;
use crate::stream::{generate_stream, PmnMode, StreamConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolutionConfig {
    pub population: usize,
    pub generations: usize,
    pub mutation_rate: f64,
    pub crossover_rate: f64,
    /// Vectors drawn from each source per training batch and for validation.
    pub vectors_per_eval: usize,
    pub vector_len: usize,
    pub layers: usize,
    pub nodes_per_layer: usize,
    /// A new training batch is drawn every this many generations; 0 keeps
    /// the first batch for the whole run.
    pub refresh_interval: usize,
    pub alpha: f64,
    pub seed: u64,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        Self {
            population: 20,
            generations: 300,
            mutation_rate: 0.05,
            crossover_rate: 0.5,
            vectors_per_eval: 1000,
            vector_len: 32,
            layers: 5,
            nodes_per_layer: 8,
            refresh_interval: 5,
            alpha: 0.01,
            seed: 0,
        }
    }
}

impl EvolutionConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.population < 2 {
            return bad(format!("population {} below 2", self.population));
        }
        if !(self.mutation_rate > 0.0 && self.mutation_rate < 1.0) {
            return bad(format!("mutation rate {} not in (0,1)", self.mutation_rate));
        }
        if !(0.0..=1.0).contains(&self.crossover_rate) {
            return bad(format!(
                "crossover rate {} not in [0,1]",
                self.crossover_rate
            ));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad(format!("alpha {} not in (0,1)", self.alpha));
        }
        if self.generations == 0 || self.vectors_per_eval == 0 || self.layers == 0 {
            return bad("generations, vectors_per_eval and layers must be positive".into());
        }
        if self.vector_len == 0 || self.vector_len > genome::MAX_FAN_IN {
            return bad(format!("vector_len {} outside 1..=64", self.vector_len));
        }
        if self.nodes_per_layer == 0 || self.nodes_per_layer > genome::MAX_FAN_IN {
            return bad(format!(
                "nodes_per_layer {} outside 1..=64",
                self.nodes_per_layer
            ));
        }
        Ok(())
    }

    /// Training batches drawn over a run.
    pub fn training_batches(&self) -> usize {
        if self.refresh_interval == 0 {
            1
        } else {
            self.generations.div_ceil(self.refresh_interval)
        }
    }

    /// Bytes each source must supply for one run, validation included.
    pub fn bytes_per_source(&self) -> usize {
        (self.training_batches() + 1) * self.vectors_per_eval * self.vector_len
    }

    /// Correct classifications out of `2 * vectors_per_eval` above which a
    /// run rejects.
    pub fn reject_threshold(&self) -> u64 {
        binomial_quantile(2 * self.vectors_per_eval as u64, 0.5, 1.0 - self.alpha)
    }
}

/// A supplier of fixed-length test vectors, consumed front to back.
pub trait VectorSource {
    /// Next `count` vectors of `len` bytes, concatenated.
    fn take(&mut self, count: usize, len: usize) -> Result<Vec<u8>>;
}

/// Vectors cut from an in-memory byte stream. Offsets only move forward, so
/// no byte is ever handed out twice.
#[derive(Debug, Clone)]
pub struct ByteSource {
    data: Vec<u8>,
    offset: usize,
}

impl ByteSource {
    pub fn new(data: Vec<u8>) -> Self {
        Self { data, offset: 0 }
    }

    pub fn offset(&self) -> usize {
        self.offset
    }
}

impl VectorSource for ByteSource {
    fn take(&mut self, count: usize, len: usize) -> Result<Vec<u8>> {
        let needed = count * len;
        let available = self.data.len() - self.offset;
        if needed > available {
            return Err(Error::InsufficientData { needed, available });
        }
        let out = self.data[self.offset..self.offset + needed].to_vec();
        self.offset += needed;
        Ok(out)
    }
}

impl VectorSource for ReferenceRng {
    fn take(&mut self, count: usize, len: usize) -> Result<Vec<u8>> {
        Ok(self.bytes(count * len))
    }
}

fn accuracy_of(
    circuit: &CompiledCircuit,
    a: &[u8],
    b: &[u8],
    len: usize,
    scratch: &mut Vec<u8>,
) -> f64 {
    let hits_a = a
        .chunks_exact(len)
        .filter(|v| circuit.eval(v, scratch) >= 128)
        .count();
    let hits_b = b
        .chunks_exact(len)
        .filter(|v| circuit.eval(v, scratch) < 128)
        .count();
    (hits_a + hits_b) as f64 / (a.len() / len + b.len() / len) as f64
}

/// Fraction of vectors classified correctly, class A being output >= 128.
/// `vectors_a` and `vectors_b` are concatenations of `genome.input_len`-byte
/// vectors.
pub fn fitness(genome: &CircuitGenome, vectors_a: &[u8], vectors_b: &[u8]) -> Result<f64> {
    let len = genome.input_len;
    if vectors_a.is_empty() || vectors_b.is_empty() {
        return Err(Error::EmptySet);
    }
    if vectors_a.len() != vectors_b.len() {
        return Err(Error::LengthMismatch {
            field: "vector set",
            expected: vectors_a.len(),
            actual: vectors_b.len(),
        });
    }
    if !vectors_a.len().is_multiple_of(len) {
        return Err(Error::LengthMismatch {
            field: "vector set",
            expected: vectors_a.len() / len * len,
            actual: vectors_a.len(),
        });
    }
    let circuit = genome.compile()?;
    Ok(accuracy_of(
        &circuit,
        vectors_a,
        vectors_b,
        len,
        &mut Vec::new(),
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOutcome {
    pub reject: bool,
    /// Validation accuracy of the best genome.
    pub best_accuracy: f64,
    pub training_accuracy: f64,
    pub generations_used: usize,
    /// Best training fitness of each generation.
    pub fitness_history: Vec<f64>,
    pub best_genome: CircuitGenome,
}

fn tournament<'a, R: Rng + ?Sized>(
    rng: &mut R,
    pop: &'a [(CircuitGenome, f64)],
) -> &'a CircuitGenome {
    let a = &pop[rng.random_range(0..pop.len())];
    let b = &pop[rng.random_range(0..pop.len())];
    if a.1 >= b.1 {
        &a.0
    } else {
        &b.0
    }
}

fn score(
    population: Vec<CircuitGenome>,
    a: &[u8],
    b: &[u8],
    len: usize,
) -> Result<Vec<(CircuitGenome, f64)>> {
    population
        .into_par_iter()
        .map_init(Vec::new, |scratch, g| {
            let c = g.compile()?;
            let f = accuracy_of(&c, a, b, len, scratch);
            Ok((g, f))
        })
        .collect()
}

fn best(scored: &[(CircuitGenome, f64)]) -> &(CircuitGenome, f64) {
    // First maximum, so the carried-over elite wins ties.
    scored
        .iter()
        .fold(&scored[0], |acc, x| if x.1 > acc.1 { x } else { acc })
}

/// One evolutionary run. Training batches are drawn from the front of each
/// source and the validation batch after them.
pub fn evolve(
    config: &EvolutionConfig,
    cipher_source: &mut dyn VectorSource,
    reference_source: &mut dyn VectorSource,
) -> Result<RunOutcome> {
    config.validate()?;
    let len = config.vector_len;
    let n = config.vectors_per_eval;
    let mut rng = ReferenceRng::new(config.seed, streams::EVOLUTION);

    let mut population: Vec<CircuitGenome> = (0..config.population)
        .map(|_| CircuitGenome::random(&mut rng, len, config.layers, config.nodes_per_layer))
        .collect();
    let mut batch_a = Vec::new();
    let mut batch_b = Vec::new();
    let mut history = Vec::with_capacity(config.generations);
    let mut scored = Vec::new();

    for generation in 0..config.generations {
        let refresh = generation == 0
            || (config.refresh_interval > 0 && generation % config.refresh_interval == 0);
        if refresh {
            batch_a = cipher_source.take(n, len)?;
            batch_b = reference_source.take(n, len)?;
        }
        scored = score(population, &batch_a, &batch_b, len)?;
        let elite = best(&scored).clone();
        history.push(elite.1);

        if generation + 1 == config.generations {
            break;
        }
        let mut next = Vec::with_capacity(config.population);
        next.push(elite.0);
        while next.len() < config.population {
            let p1 = tournament(&mut rng, &scored);
            let child = if rng.random_bool(config.crossover_rate) {
                let p2 = tournament(&mut rng, &scored);
                p1.crossover(p2, &mut rng)
            } else {
                p1.clone()
            };
            next.push(child.mutate(&mut rng, config.mutation_rate));
        }
        population = next;
    }

    let (winner, training_accuracy) = best(&scored).clone();
    let valid_a = cipher_source.take(n, len)?;
    let valid_b = reference_source.take(n, len)?;
    let circuit = winner.compile()?;
    let accuracy = accuracy_of(&circuit, &valid_a, &valid_b, len, &mut Vec::new());
    let correct = (accuracy * (2 * n) as f64).round() as u64;
    Ok(RunOutcome {
        reject: correct > config.reject_threshold(),
        best_accuracy: accuracy,
        training_accuracy,
        generations_used: config.generations,
        fitness_history: history,
        best_genome: winner,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignResult {
    pub runs: usize,
    pub rejecting: usize,
    pub proportion: f64,
    pub alpha: f64,
    /// Rejecting runs tolerated before the campaign itself rejects.
    pub failure_threshold: u64,
    pub verdict: Verdict,
}

impl CampaignResult {
    pub fn from_outcomes(outcomes: &[RunOutcome], alpha: f64) -> Result<Self> {
        if outcomes.is_empty() {
            return Err(Error::EmptySet);
        }
        let runs = outcomes.len();
        let rejecting = outcomes.iter().filter(|o| o.reject).count();
        let failure_threshold = binomial_quantile(runs as u64, alpha, 1.0 - alpha);
        Ok(Self {
            runs,
            rejecting,
            proportion: rejecting as f64 / runs as f64,
            alpha,
            failure_threshold,
            verdict: if rejecting as u64 > failure_threshold {
                Verdict::Reject
            } else {
                Verdict::Pass
            },
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

impl fmt::Display for CampaignResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}/{} runs rejecting ({:.3}) {}",
            self.rejecting, self.runs, self.proportion, self.verdict
        )
    }
}

/// Seed of run `index` within a campaign.
pub fn run_seed(master_seed: u64, index: usize) -> u64 {
    derive_seed(master_seed, streams::RUN_SEEDS, index as u64)
}

/// Runs `n_runs` independent evolutions. `sources(run_seed)` supplies the
/// cipher and reference sources of each run.
pub fn campaign<F, A, B>(
    config: &EvolutionConfig,
    n_runs: usize,
    sources: F,
) -> Result<(CampaignResult, Vec<RunOutcome>)>
where
    F: Fn(u64) -> Result<(A, B)> + Sync,
    A: VectorSource,
    B: VectorSource,
{
    if n_runs == 0 {
        return Err(Error::InvalidConfig(
            "campaign needs at least one run".into(),
        ));
    }
    config.validate()?;
    let outcomes: Vec<RunOutcome> = (0..n_runs)
        .into_par_iter()
        .map(|r| {
            let seed = run_seed(config.seed, r);
            let (mut a, mut b) = sources(seed)?;
            let run_config = EvolutionConfig {
                seed,
                ..config.clone()
            };
            evolve(&run_config, &mut a, &mut b)
        })
        .collect::<Result<_>>()?;
    Ok((
        CampaignResult::from_outcomes(&outcomes, config.alpha)?,
        outcomes,
    ))
}

/// Cipher tags (one stream and key per run) against the reference generator.
pub fn cipher_campaign(
    registry: &Registry,
    cipher: &str,
    mode: PmnMode,
    config: &EvolutionConfig,
    n_runs: usize,
) -> Result<(CampaignResult, Vec<RunOutcome>)> {
    let spec = registry.get(cipher)?.spec().clone();
    let tags = config.bytes_per_source().div_ceil(spec.tag_len);
    campaign(config, n_runs, |seed| {
        let stream = generate_stream(registry, &StreamConfig::new(cipher, mode, tags, seed))?;
        Ok((
            ByteSource::new(stream.bytes),
            ReferenceRng::new(seed, streams::REFERENCE_DATA),
        ))
    })
}

/// Two independent reference streams; calibrates the false-positive rate.
pub fn reference_campaign(
    config: &EvolutionConfig,
    n_runs: usize,
) -> Result<(CampaignResult, Vec<RunOutcome>)> {
    campaign(config, n_runs, |seed| {
        let other = derive_seed(seed, streams::REFERENCE_DATA, 1);
        Ok((
            ReferenceRng::new(other, streams::REFERENCE_DATA),
            ReferenceRng::new(seed, streams::REFERENCE_DATA),
        ))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> EvolutionConfig {
        EvolutionConfig {
            generations: 10,
            vector_len: 16,
            refresh_interval: 2,
            vectors_per_eval: 200,
            ..EvolutionConfig::default()
        }
    }

    #[test]
    fn constant_genome_scores_half() {
        let mut g = CircuitGenome::pass_through(16, 5, 8);
        g.layers[4][0] = Node::new(NodeFn::Const, 0, 0xff);
        let a = ReferenceRng::new(1, 0).bytes(16 * 100);
        let b = ReferenceRng::new(2, 0).bytes(16 * 100);
        assert_eq!(fitness(&g, &a, &b).unwrap(), 0.5);
    }

    #[test]
    fn pass_through_separates_extremes() {
        let g = CircuitGenome::pass_through(16, 5, 8);
        assert_eq!(fitness(&g, &[0xff; 160], &[0x00; 160]).unwrap(), 1.0);
    }

    #[test]
    fn empty_and_unequal_sets() {
        let g = CircuitGenome::pass_through(16, 5, 8);
        assert!(matches!(fitness(&g, &[], &[]), Err(Error::EmptySet)));
        assert!(matches!(
            fitness(&g, &[0; 32], &[0; 16]),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn byte_source_never_repeats_and_runs_dry() {
        let mut s = ByteSource::new((0..=255).collect());
        let first = s.take(8, 16).unwrap();
        let second = s.take(8, 16).unwrap();
        assert_eq!(first[0], 0);
        assert_eq!(second[0], 128);
        assert!(matches!(s.take(1, 1), Err(Error::InsufficientData { .. })));
    }

    #[test]
    fn evolve_reports_insufficient_data() {
        let cfg = small();
        let mut a = ByteSource::new(vec![0; cfg.bytes_per_source() - 1]);
        let mut b = ReferenceRng::new(0, 0);
        assert!(matches!(
            evolve(&cfg, &mut a, &mut b),
            Err(Error::InsufficientData { .. })
        ));
        let mut a = ByteSource::new(vec![0; cfg.bytes_per_source()]);
        assert!(evolve(&cfg, &mut a, &mut b).is_ok());
        assert_eq!(a.offset(), cfg.bytes_per_source());
    }

    #[test]
    fn elitism_with_fixed_training_set() {
        let cfg = EvolutionConfig {
            generations: 30,
            refresh_interval: 0,
            ..small()
        };
        let mut a = ReferenceRng::new(1, 9);
        let mut b = ReferenceRng::new(2, 9);
        let out = evolve(&cfg, &mut a, &mut b).unwrap();
        assert_eq!(out.fitness_history.len(), 30);
        for w in out.fitness_history.windows(2) {
            assert!(w[1] >= w[0], "{:?}", out.fitness_history);
        }
    }

    #[test]
    fn obvious_bias_is_rejected() {
        let cfg = small();
        let mut a = ByteSource::new(vec![0xff; cfg.bytes_per_source()]);
        let mut b = ReferenceRng::new(2, 9);
        let out = evolve(&cfg, &mut a, &mut b).unwrap();
        assert!(out.reject);
        assert!(out.best_accuracy > 0.7, "{}", out.best_accuracy);
    }

    #[test]
    fn invalid_config() {
        assert!(EvolutionConfig {
            population: 1,
            ..small()
        }
        .validate()
        .is_err());
        assert!(EvolutionConfig {
            mutation_rate: 0.0,
            ..small()
        }
        .validate()
        .is_err());
        assert!(EvolutionConfig {
            mutation_rate: 1.0,
            ..small()
        }
        .validate()
        .is_err());
    }

    #[test]
    fn campaign_verdict_threshold() {
        let outcome = |reject| RunOutcome {
            reject,
            best_accuracy: 0.5,
            training_accuracy: 0.5,
            generations_used: 1,
            fitness_history: vec![],
            best_genome: CircuitGenome::pass_through(16, 1, 1),
        };
        let mut runs: Vec<RunOutcome> = (0..100).map(|_| outcome(false)).collect();
        for r in runs.iter_mut().take(4) {
            r.reject = true;
        }
        let c = CampaignResult::from_outcomes(&runs, 0.01).unwrap();
        assert_eq!(c.failure_threshold, 4);
        assert_eq!(c.verdict, Verdict::Pass);
        runs[4].reject = true;
        let c = CampaignResult::from_outcomes(&runs, 0.01).unwrap();
        assert_eq!(c.verdict, Verdict::Reject);
        assert!((c.proportion - 0.05).abs() < 1e-12);
    }
}
