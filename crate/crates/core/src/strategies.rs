//! Classical outer loop: random multistart, recursive layer growth and the
//! single-layer landscape scan.
//!
//! Every run or chain is an independent task with its own RNG stream derived
//! from `(master_seed, task)`, so results do not depend on thread count or
//! scheduling.

use std::f64::consts::TAU;
use std::io::Write;

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bits::Bitstring;
use crate::error::{Error, Result};
use crate::optimize::{minimize, OptimizerConfig};
use crate::oracle::ground_population;
use crate::qaoa::{sample_energy_in, QaoaParams, XBasisEvolver};
use crate::seed::task_rng;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Estimator {
    /// `<H>` from the statevector.
    #[default]
    Exact,
    /// Mean energy of `shots` X-basis samples.
    Sampled { shots: usize },
}

impl Estimator {
    fn validate(&self) -> Result<()> {
        match *self {
            Estimator::Sampled { shots: 0 } => Err(Error::ZeroShots),
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Multistart,
    Recursive,
    Single,
}

impl Strategy {
    pub fn name(self) -> &'static str {
        match self {
            Strategy::Multistart => "multistart",
            Strategy::Recursive => "recursive",
            Strategy::Single => "single",
        }
    }

    fn tag(self) -> u64 {
        match self {
            Strategy::Multistart => 0,
            Strategy::Recursive => 1,
            Strategy::Single => 2,
        }
    }
}

/// Where a recursive chain takes its frozen layers from.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrefixSource {
    /// The lowest-energy optimum found at the previous depth across all chains.
    #[default]
    BestOfPrevious,
    /// The chain's own previous optimum; chains never interact.
    OwnChain,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub runs: usize,
    pub max_layers: usize,
    pub seed: u64,
    pub estimator: Estimator,
    pub optimizer: OptimizerConfig,
    pub prefix: PrefixSource,
    /// How many of the most probable outcomes each record keeps.
    pub top_k: usize,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            runs: 500,
            max_layers: 5,
            seed: 0,
            estimator: Estimator::Exact,
            optimizer: OptimizerConfig::default(),
            prefix: PrefixSource::default(),
            top_k: 10,
        }
    }
}

impl StudyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.runs == 0 {
            return Err(Error::InvalidParams("need at least one run".into()));
        }
        if self.max_layers == 0 {
            return Err(Error::InvalidParams("need at least one layer".into()));
        }
        self.estimator.validate()?;
        self.optimizer.validate(2)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TopState {
    pub bitstring: Bitstring,
    pub probability: f64,
    pub energy: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub strategy: Strategy,
    pub layers: usize,
    pub run: usize,
    /// RNG stream the run drew from.
    pub task: u64,
    pub start: Vec<f64>,
    /// Optimized angles, interleaved `[gamma_1, beta_1, ...]`.
    pub angles: Vec<f64>,
    /// Exact `<H>` at `angles`.
    pub energy: f64,
    /// Final value of the optimized objective (differs from `energy` when sampling).
    pub objective: f64,
    pub evals: usize,
    pub ground_prob: f64,
    /// False when the optimizer never beat its starting point.
    pub improved: bool,
    pub top_states: Vec<TopState>,
}

/// What an optimization produced, before it is scored.
struct Outcome {
    start: Vec<f64>,
    angles: Vec<f64>,
    objective: f64,
    evals: usize,
    improved: bool,
}

/// Everything a run needs to evaluate circuits.
pub struct Evaluator<'a> {
    pub evolver: &'a XBasisEvolver,
    pub ground: &'a [u64],
}

impl<'a> Evaluator<'a> {
    pub fn new(evolver: &'a XBasisEvolver, ground: &'a [u64]) -> Self {
        Self { evolver, ground }
    }

    pub fn energy(&self, flat: &[f64]) -> f64 {
        self.evolver
            .expected_energy(&QaoaParams::from_flat(flat).expect("even length"))
    }

    fn objective(
        &self,
        estimator: Estimator,
        rng: &mut ChaCha8Rng,
        scratch: &mut Vec<Complex64>,
        flat: &[f64],
    ) -> f64 {
        let params = QaoaParams::from_flat(flat).expect("even length");
        match estimator {
            Estimator::Exact => self.evolver.expected_energy_with(&params, scratch),
            Estimator::Sampled { shots } => {
                self.evolver.evolve_into(&params, scratch);
                let dist: Vec<f64> = scratch.iter().map(|a| a.norm_sqr()).collect();
                sample_energy_in(&dist, self.evolver.spectrum(), shots, rng)
                    .expect("shots validated")
                    .estimate
            }
        }
    }

    fn record(
        &self,
        strategy: Strategy,
        run: usize,
        task: u64,
        o: Outcome,
        top_k: usize,
    ) -> RunRecord {
        let Outcome {
            start,
            angles,
            objective,
            evals,
            improved,
        } = o;
        let params = QaoaParams::from_flat(&angles).expect("even length");
        let dist = self.evolver.distribution(&params);
        let energy: f64 = dist
            .iter()
            .zip(self.evolver.spectrum())
            .map(|(p, e)| p * e)
            .sum();
        RunRecord {
            strategy,
            layers: params.layers(),
            run,
            task,
            start,
            angles,
            energy,
            objective,
            evals,
            ground_prob: ground_population(&dist, self.ground),
            improved,
            top_states: top_states(
                &dist,
                self.evolver.spectrum(),
                self.evolver.num_qubits(),
                top_k,
            ),
        }
    }
}

pub fn top_states(dist: &[f64], spectrum: &[f64], n: usize, k: usize) -> Vec<TopState> {
    let mut order: Vec<usize> = (0..dist.len()).collect();
    order.sort_by(|&a, &b| dist[b].total_cmp(&dist[a]).then(a.cmp(&b)));
    order
        .into_iter()
        .take(k)
        .map(|i| TopState {
            bitstring: Bitstring::from_index(i as u64, n),
            probability: dist[i],
            energy: spectrum[i],
        })
        .collect()
}

/// RNG stream for `(strategy, layers, run)`.
pub fn task_id(strategy: Strategy, layers: usize, run: usize) -> u64 {
    (strategy.tag() << 56) | ((layers as u64) << 40) | run as u64
}

fn random_angles(rng: &mut ChaCha8Rng, count: usize, lower: f64, upper: f64) -> Vec<f64> {
    (0..count).map(|_| rng.gen_range(lower..upper)).collect()
}

/// One optimization from a uniformly random start over all `2 * layers` angles.
pub fn optimize_run(
    eval: &Evaluator,
    layers: usize,
    run: usize,
    cfg: &StudyConfig,
    strategy: Strategy,
) -> Result<RunRecord> {
    let task = task_id(strategy, layers, run);
    let mut rng = task_rng(cfg.seed, task);
    let opt = &cfg.optimizer;
    let start = random_angles(&mut rng, 2 * layers, opt.lower, opt.upper);
    let mut scratch = Vec::new();
    let res = minimize(
        |x| eval.objective(cfg.estimator, &mut rng, &mut scratch, x),
        &start,
        opt,
    )?;
    let outcome = Outcome {
        start,
        angles: res.x,
        objective: res.f,
        evals: res.evals,
        improved: res.improved,
    };
    Ok(eval.record(strategy, run, task, outcome, cfg.top_k))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerSummary {
    pub layers: usize,
    pub runs: usize,
    pub mean_energy: f64,
    pub std_energy: f64,
    pub min_energy: f64,
    pub mean_ground_prob: f64,
    pub best_angles: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudyResult {
    pub strategy: Strategy,
    pub seed: u64,
    pub summaries: Vec<LayerSummary>,
    pub records: Vec<RunRecord>,
}

impl StudyResult {
    pub fn means(&self) -> Vec<f64> {
        self.summaries.iter().map(|s| s.mean_energy).collect()
    }

    pub fn records_at(&self, layers: usize) -> impl Iterator<Item = &RunRecord> {
        self.records.iter().filter(move |r| r.layers == layers)
    }

    /// `strategy,p,run,seed,energy,ground_prob,evals`.
    pub fn write_runs_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "strategy,p,run,seed,energy,ground_prob,evals")?;
        for r in &self.records {
            writeln!(
                out,
                "{},{},{},{},{:.12},{:.12},{}",
                r.strategy.name(),
                r.layers,
                r.run,
                self.seed,
                r.energy,
                r.ground_prob,
                r.evals
            )?;
        }
        Ok(())
    }

    /// `strategy,p,runs,mean_energy,std_energy,min_energy,mean_ground_prob`.
    pub fn write_summary_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(
            out,
            "strategy,p,runs,mean_energy,std_energy,min_energy,mean_ground_prob"
        )?;
        for s in &self.summaries {
            writeln!(
                out,
                "{},{},{},{:.12},{:.12},{:.12},{:.12}",
                self.strategy.name(),
                s.layers,
                s.runs,
                s.mean_energy,
                s.std_energy,
                s.min_energy,
                s.mean_ground_prob
            )?;
        }
        Ok(())
    }
}

fn summarize(layers: usize, records: &[RunRecord]) -> LayerSummary {
    let k = records.len() as f64;
    // Sequential sums over run order keep the result independent of threading.
    let mean = records.iter().map(|r| r.energy).sum::<f64>() / k;
    let var = if records.len() > 1 {
        records
            .iter()
            .map(|r| (r.energy - mean).powi(2))
            .sum::<f64>()
            / (k - 1.0)
    } else {
        0.0
    };
    let best = records
        .iter()
        .min_by(|a, b| a.energy.total_cmp(&b.energy).then(a.run.cmp(&b.run)))
        .expect("at least one run");
    LayerSummary {
        layers,
        runs: records.len(),
        mean_energy: mean,
        std_energy: var.sqrt(),
        min_energy: best.energy,
        mean_ground_prob: records.iter().map(|r| r.ground_prob).sum::<f64>() / k,
        best_angles: best.angles.clone(),
    }
}

/// Independent random starts at every depth `1..=max_layers`.
pub fn multistart_study(eval: &Evaluator, cfg: &StudyConfig) -> Result<StudyResult> {
    cfg.validate()?;
    let mut records = Vec::with_capacity(cfg.runs * cfg.max_layers);
    let mut summaries = Vec::with_capacity(cfg.max_layers);
    for layers in 1..=cfg.max_layers {
        let batch = (0..cfg.runs)
            .into_par_iter()
            .map(|run| optimize_run(eval, layers, run, cfg, Strategy::Multistart))
            .collect::<Result<Vec<_>>>()?;
        summaries.push(summarize(layers, &batch));
        records.extend(batch);
    }
    Ok(StudyResult {
        strategy: Strategy::Multistart,
        seed: cfg.seed,
        summaries,
        records,
    })
}

/// A single random start at depth `max_layers`.
pub fn single_study(eval: &Evaluator, cfg: &StudyConfig) -> Result<StudyResult> {
    cfg.validate()?;
    let record = optimize_run(eval, cfg.max_layers, 0, cfg, Strategy::Single)?;
    Ok(StudyResult {
        strategy: Strategy::Single,
        seed: cfg.seed,
        summaries: vec![summarize(cfg.max_layers, std::slice::from_ref(&record))],
        records: vec![record],
    })
}

/// Optimizes only the newest layer on top of a frozen prefix. If the result is
/// worse than the prefix alone, the new layer is left at the identity
/// `(0, 0)`, so a chain's energy never rises with depth.
fn grow_layer(
    eval: &Evaluator,
    prefix: &[f64],
    layers: usize,
    run: usize,
    cfg: &StudyConfig,
) -> Result<RunRecord> {
    let task = task_id(Strategy::Recursive, layers, run);
    let mut rng = task_rng(cfg.seed, task);
    let opt = &cfg.optimizer;
    let start = random_angles(&mut rng, 2, opt.lower, opt.upper);
    let mut scratch = Vec::new();
    let mut full = prefix.to_vec();
    full.extend([0.0, 0.0]);
    let res = minimize(
        |x| {
            full[2 * layers - 2] = x[0];
            full[2 * layers - 1] = x[1];
            eval.objective(cfg.estimator, &mut rng, &mut scratch, &full)
        },
        &start,
        opt,
    )?;
    let mut angles = prefix.to_vec();
    angles.extend(&res.x);
    let mut objective = res.f;
    let mut improved = res.improved;
    if eval.energy(&angles) > eval.energy(prefix) {
        angles.truncate(prefix.len());
        angles.extend([0.0, 0.0]);
        objective = eval.energy(&angles);
        improved = false;
    }
    let mut full_start = prefix.to_vec();
    full_start.extend(start);
    let outcome = Outcome {
        start: full_start,
        angles,
        objective,
        evals: res.evals,
        improved,
    };
    Ok(eval.record(Strategy::Recursive, run, task, outcome, cfg.top_k))
}

/// Layer-by-layer growth: depth 1 is a plain random start, every further depth
/// freezes the earlier layers (see [`PrefixSource`]) and optimizes one new pair.
pub fn recursive_study(eval: &Evaluator, cfg: &StudyConfig) -> Result<StudyResult> {
    cfg.validate()?;
    let mut records: Vec<RunRecord> = Vec::with_capacity(cfg.runs * cfg.max_layers);
    let mut summaries = Vec::with_capacity(cfg.max_layers);
    let mut previous: Vec<RunRecord> = Vec::new();
    for layers in 1..=cfg.max_layers {
        let batch = if layers == 1 {
            (0..cfg.runs)
                .into_par_iter()
                .map(|run| optimize_run(eval, 1, run, cfg, Strategy::Recursive))
                .collect::<Result<Vec<_>>>()?
        } else {
            let best = summaries
                .last()
                .map(|s: &LayerSummary| s.best_angles.clone())
                .expect("previous depth summarized");
            (0..cfg.runs)
                .into_par_iter()
                .map(|run| {
                    let prefix = match cfg.prefix {
                        PrefixSource::BestOfPrevious => &best,
                        PrefixSource::OwnChain => &previous[run].angles,
                    };
                    grow_layer(eval, prefix, layers, run, cfg)
                })
                .collect::<Result<Vec<_>>>()?
        };
        summaries.push(summarize(layers, &batch));
        records.extend(batch.iter().cloned());
        previous = batch;
    }
    Ok(StudyResult {
        strategy: Strategy::Recursive,
        seed: cfg.seed,
        summaries,
        records,
    })
}

/// `<H>` and ground population on a `p = 1` grid. Rows are `gamma`, columns `beta`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LandscapeGrid {
    pub gammas: Vec<f64>,
    pub betas: Vec<f64>,
    pub energies: Vec<f64>,
    pub ground_probs: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LandscapePoint {
    pub gamma: f64,
    pub beta: f64,
    pub energy: f64,
    pub ground_prob: f64,
}

impl LandscapeGrid {
    pub fn at(&self, i: usize, j: usize) -> LandscapePoint {
        let k = i * self.betas.len() + j;
        LandscapePoint {
            gamma: self.gammas[i],
            beta: self.betas[j],
            energy: self.energies[k],
            ground_prob: self.ground_probs[k],
        }
    }

    /// Lowest-energy grid point; ties go to the first in row-major order.
    pub fn argmin(&self) -> LandscapePoint {
        let k = (0..self.energies.len())
            .min_by(|&a, &b| {
                self.energies[a]
                    .total_cmp(&self.energies[b])
                    .then(a.cmp(&b))
            })
            .expect("non-empty grid");
        self.at(k / self.betas.len(), k % self.betas.len())
    }

    /// `gamma,beta,energy,ground_prob`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "gamma,beta,energy,ground_prob")?;
        for i in 0..self.gammas.len() {
            for j in 0..self.betas.len() {
                let p = self.at(i, j);
                writeln!(
                    out,
                    "{:.12},{:.12},{:.12},{:.12}",
                    p.gamma, p.beta, p.energy, p.ground_prob
                )?;
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LandscapeConfig {
    pub gamma_max: f64,
    pub beta_max: f64,
    pub gamma_points: usize,
    pub beta_points: usize,
}

impl Default for LandscapeConfig {
    fn default() -> Self {
        Self {
            gamma_max: TAU,
            beta_max: TAU,
            gamma_points: 201,
            beta_points: 201,
        }
    }
}

/// Evenly spaced half-open grid `[0, max)`.
fn axis(max: f64, points: usize) -> Vec<f64> {
    (0..points)
        .map(|i| max * i as f64 / points as f64)
        .collect()
}

pub fn landscape_scan(eval: &Evaluator, cfg: &LandscapeConfig) -> Result<LandscapeGrid> {
    if cfg.gamma_points == 0 || cfg.beta_points == 0 {
        return Err(Error::InvalidParams(
            "landscape needs at least one point per axis".into(),
        ));
    }
    if !(cfg.gamma_max > 0.0 && cfg.beta_max > 0.0) {
        return Err(Error::InvalidParams(
            "landscape ranges must be positive".into(),
        ));
    }
    let gammas = axis(cfg.gamma_max, cfg.gamma_points);
    let betas = axis(cfg.beta_max, cfg.beta_points);
    let cells: Vec<(f64, f64)> = (0..gammas.len() * betas.len())
        .into_par_iter()
        .map_init(Vec::new, |scratch, k| {
            let params = QaoaParams::single(gammas[k / betas.len()], betas[k % betas.len()]);
            eval.evolver.evolve_into(&params, scratch);
            let mut energy = 0.0;
            let mut ground = 0.0;
            for (a, &e) in scratch.iter().zip(eval.evolver.spectrum()) {
                energy += a.norm_sqr() * e;
            }
            for &g in eval.ground {
                ground += scratch[g as usize].norm_sqr();
            }
            (energy, ground)
        })
        .collect();
    let (energies, ground_probs) = cells.into_iter().unzip();
    Ok(LandscapeGrid {
        gammas,
        betas,
        energies,
        ground_probs,
    })
}
