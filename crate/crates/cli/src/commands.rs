use std::io::Write;
use std::path::Path;

use anyhow::Context;
use serde::{Deserialize, Serialize};
use shelfqaoa::oracle::{ground_population, Oracle, Spectrum};
use shelfqaoa::qaoa::{
    build_circuit, check_qubits, simulate_noisy, XBasisEvolver, DEFAULT_MAX_QUBITS,
};
use shelfqaoa::strategies::{
    landscape_scan, multistart_study, recursive_study, single_study, top_states, Evaluator,
    LandscapeConfig, LandscapePoint, RunRecord, Strategy, StudyResult, TopState,
};
use shelfqaoa::warehouse::{build_qubo_with, AllocationReport};
use shelfqaoa::{
    decode_assignment, estimate_resources, qubo_to_ising, IsingHamiltonian, QaoaParams,
};

use crate::config::RunConfig;
use crate::output::OutDir;

/// `println!` that reports a closed stdout as an error instead of panicking.
macro_rules! say {
    ($($arg:tt)*) => {
        writeln!(std::io::stdout().lock(), $($arg)*)?
    };
}

#[derive(Debug, Serialize, Deserialize)]
pub struct TopEntry {
    pub rank: usize,
    pub bitstring: String,
    pub energy: f64,
    pub feasible: bool,
    pub allocation: AllocationReport,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct TopReport {
    pub n_qubits: usize,
    pub n_states: u64,
    pub states: Vec<TopEntry>,
}

pub fn spectrum(cfg: &RunConfig) -> anyhow::Result<()> {
    let inst = cfg.load_instance()?;
    let oracle = Oracle::new(&inst, cfg.form())?;
    let report = oracle.report();
    let out = OutDir::create(&cfg.out)?;
    out.write_with("spectrum.csv", |w| Ok(oracle.write_csv(w)?))?;
    out.write_json("spectrum_summary.json", &report)?;
    let top = TopReport {
        n_qubits: oracle.n(),
        n_states: report.n_states,
        states: oracle
            .spectrum
            .top(cfg.top_k)
            .into_iter()
            .enumerate()
            .map(|(rank, (i, energy))| {
                let allocation = oracle.allocation(i);
                TopEntry {
                    rank: rank + 1,
                    bitstring: oracle.bitstring(i).to_string(),
                    energy,
                    feasible: allocation.feasible,
                    allocation,
                }
            })
            .collect(),
    };
    out.write_json("topk.json", &top)?;
    say!(
        "{} states, min energy {}, {} ground state(s): {}",
        report.n_states,
        report.min_energy,
        report.ground_bitstrings.len(),
        report
            .ground_bitstrings
            .iter()
            .map(|b| b.to_string())
            .collect::<Vec<_>>()
            .join(" ")
    );
    Ok(())
}

pub fn report(input: &Path) -> anyhow::Result<()> {
    let text = std::fs::read_to_string(input)
        .with_context(|| format!("report not found: {}", input.display()))?;
    let top: TopReport =
        serde_json::from_str(&text).with_context(|| format!("bad report {}", input.display()))?;
    say!("{} qubits, {} states", top.n_qubits, top.n_states);
    say!(
        "{:>4}  {:<width$}  {:>14}  feasible",
        "rank",
        "bitstring",
        "energy",
        width = top.n_qubits
    );
    for e in &top.states {
        say!(
            "{:>4}  {}  {:>14.6}  {}",
            e.rank,
            e.bitstring,
            e.energy,
            e.feasible
        );
    }
    Ok(())
}

struct Setup {
    h: IsingHamiltonian,
    evolver: XBasisEvolver,
    ground: Vec<u64>,
}

fn setup(cfg: &RunConfig) -> anyhow::Result<(shelfqaoa::ProblemInstance, Setup)> {
    let inst = cfg.load_instance()?;
    let qubo = build_qubo_with(&inst, cfg.form())?;
    check_qubits(qubo.n, DEFAULT_MAX_QUBITS)?;
    let h = qubo_to_ising(&qubo);
    let evolver = XBasisEvolver::new(&h);
    let ground = Spectrum::from_energies(h.n, evolver.spectrum().to_vec())?.ground_states();
    Ok((inst, Setup { h, evolver, ground }))
}

#[derive(Serialize)]
struct LandscapeSummary {
    gamma_max: f64,
    beta_max: f64,
    gamma_points: usize,
    beta_points: usize,
    spectrum_mean: f64,
    argmin: LandscapePoint,
}

pub fn landscape(cfg: &RunConfig, grid_cfg: &LandscapeConfig) -> anyhow::Result<()> {
    let (_, s) = setup(cfg)?;
    let grid = landscape_scan(&Evaluator::new(&s.evolver, &s.ground), grid_cfg)?;
    let argmin = grid.argmin();
    let spectrum = s.evolver.spectrum();
    let summary = LandscapeSummary {
        gamma_max: grid_cfg.gamma_max,
        beta_max: grid_cfg.beta_max,
        gamma_points: grid_cfg.gamma_points,
        beta_points: grid_cfg.beta_points,
        spectrum_mean: spectrum.iter().sum::<f64>() / spectrum.len() as f64,
        argmin,
    };
    let out = OutDir::create(&cfg.out)?;
    out.write_with("landscape.csv", |w| Ok(grid.write_csv(w)?))?;
    out.write_json("landscape_summary.json", &summary)?;
    say!(
        "argmin gamma {:.6} beta {:.6}: energy {:.6}, ground population {:.4}",
        argmin.gamma,
        argmin.beta,
        argmin.energy,
        argmin.ground_prob
    );
    Ok(())
}

#[derive(Serialize)]
struct NoisyEvaluation {
    p1: f64,
    p2: f64,
    trajectories: usize,
    noiseless_energy: f64,
    energy: f64,
    ground_prob: f64,
    top_states: Vec<TopState>,
}

#[derive(Serialize)]
struct Solution<'a> {
    strategy: Strategy,
    seed: u64,
    best: &'a RunRecord,
    /// Lowest-energy state among the most populated final states, decoded.
    allocation: AllocationReport,
    noise: Option<NoisyEvaluation>,
}

pub fn solve(cfg: &RunConfig) -> anyhow::Result<()> {
    let (inst, s) = setup(cfg)?;
    let study_cfg = cfg.study()?;
    let eval = Evaluator::new(&s.evolver, &s.ground);
    let result: StudyResult = match cfg.strategy {
        Strategy::Multistart => multistart_study(&eval, &study_cfg)?,
        Strategy::Recursive => recursive_study(&eval, &study_cfg)?,
        Strategy::Single => single_study(&eval, &study_cfg)?,
    };
    let best = result
        .records_at(cfg.p_max)
        .min_by(|a, b| a.energy.total_cmp(&b.energy).then(a.run.cmp(&b.run)))
        .expect("at least one run");

    let layout = build_qubo_with(&inst, cfg.form())?
        .layout
        .expect("built from an instance");
    let candidate = best
        .top_states
        .iter()
        .min_by(|a, b| a.energy.total_cmp(&b.energy))
        .expect("top_k is at least 1");
    let allocation = decode_assignment(&inst, &layout, &candidate.bitstring)?;

    let noise = if cfg.noise {
        let noise_cfg = cfg.noise_config();
        let circuit = build_circuit(&s.h, &QaoaParams::from_flat(&best.angles)?);
        let dist = simulate_noisy(&circuit, s.h.n, &noise_cfg)?;
        let spectrum = s.evolver.spectrum();
        Some(NoisyEvaluation {
            p1: noise_cfg.p1,
            p2: noise_cfg.p2,
            trajectories: noise_cfg.trajectories,
            noiseless_energy: best.energy,
            energy: dist.iter().zip(spectrum).map(|(p, e)| p * e).sum(),
            ground_prob: ground_population(&dist, &s.ground),
            top_states: top_states(&dist, spectrum, s.h.n, cfg.top_k),
        })
    } else {
        None
    };

    let out = OutDir::create(&cfg.out)?;
    out.write_json("config.json", cfg)?;
    out.write_json("runs.json", &result.records)?;
    out.write_with("runs.csv", |w| Ok(result.write_runs_csv(w)?))?;
    out.write_with("means.csv", |w| Ok(result.write_summary_csv(w)?))?;
    let solution = Solution {
        strategy: cfg.strategy,
        seed: cfg.seed,
        best,
        allocation,
        noise,
    };
    out.write_json("solution.json", &solution)?;

    for summary in &result.summaries {
        say!(
            "{} p={} runs={} mean energy {:.6} (min {:.6}), mean ground population {:.4}",
            result.strategy.name(),
            summary.layers,
            summary.runs,
            summary.mean_energy,
            summary.min_energy,
            summary.mean_ground_prob
        );
    }
    if let Some(n) = &solution.noise {
        say!(
            "noisy energy at best angles {:.6} (noiseless {:.6})",
            n.energy,
            n.noiseless_energy
        );
    }
    say!("{}", solution.allocation);
    Ok(())
}

pub fn estimate(
    shelves: usize,
    products: usize,
    capacity: u32,
    layers: usize,
    out: Option<&Path>,
) -> anyhow::Result<()> {
    let est = estimate_resources(shelves, products, capacity, layers)?;
    say!("{}", serde_json::to_string_pretty(&est)?);
    if let Some(dir) = out {
        OutDir::create(dir)?.write_json("estimate.json", &est)?;
    }
    Ok(())
}
