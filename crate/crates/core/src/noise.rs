//! Bit-flip noise and Monte Carlo estimates of CU survival.

use std::collections::HashMap;
use std::sync::Mutex;

use rand::{Rng, SeedableRng};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chain::{ChainState, QubitChain};
use crate::error::{Error, Result};
use crate::isa::{self, Instr, PulseProgram};
use crate::layout::{build_layout, Layout, LayoutConfig};
use crate::redundant::{self, OFFSETS};
use crate::unitary::Unitary1;
use crate::SimRng;

/// Cell roles exposed to noise.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scope {
    pub cu_sites: bool,
    pub stations: bool,
    pub buffers: bool,
    pub payload: bool,
}

impl Default for Scope {
    fn default() -> Self {
        Scope { cu_sites: true, stations: true, buffers: true, payload: false }
    }
}

impl Scope {
    pub fn cu_only() -> Self {
        Scope { cu_sites: true, stations: false, buffers: false, payload: false }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorModel {
    pub p_flip: f64,
    /// (px, py, pz) per in-scope quantum cell per step.
    #[serde(default)]
    pub quantum_pauli: Option<[f64; 3]>,
    #[serde(default)]
    pub scope: Scope,
    #[serde(default)]
    pub master_seed: u64,
}

impl ErrorModel {
    pub fn bit_flip(p: f64) -> Self {
        ErrorModel { p_flip: p, quantum_pauli: None, scope: Scope::default(), master_seed: 0 }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |p: f64| (0.0..=1.0).contains(&p);
        if !ok(self.p_flip) {
            return Err(Error::InvalidArgument(format!("p_flip {} not in [0, 1]", self.p_flip)));
        }
        if let Some(q) = self.quantum_pauli {
            if !q.iter().all(|&p| ok(p)) || q.iter().sum::<f64>() > 1.0 {
                return Err(Error::InvalidArgument("quantum_pauli must be probabilities summing to ≤ 1".into()));
            }
        }
        Ok(())
    }
}

/// Cells a model touches, ascending. `cus` are the CU sites in use (the
/// layout only knows its resting sites).
pub fn noisy_cells(layout: &Layout, scope: &Scope, cus: &[usize]) -> Vec<usize> {
    let ss: Vec<usize> = layout.ss.iter().flat_map(|s| s.cells.iter().copied()).collect();
    let mut v: Vec<usize> = (0..layout.n)
        .filter(|i| {
            let comp = layout.comp.contains(i);
            if i % 2 == 1 {
                scope.cu_sites && cus.contains(i)
            } else if comp {
                scope.payload
            } else if ss.contains(i) {
                scope.stations
            } else {
                scope.buffers
            }
        })
        .collect();
    v.sort_unstable();
    v
}

/// One noise step over `cells` (ascending): classical cells flip with
/// `p_flip`; non-classical cells get a Pauli from `quantum_pauli` if set.
/// One uniform draw per cell, always, so the RNG stream is scope-stable.
pub fn apply_noise_step<S: QubitChain>(s: &mut S, model: &ErrorModel, cells: &[usize], rng: &mut SimRng) -> Result<usize> {
    let mut flips = 0;
    for &c in cells {
        let r: f64 = rng.gen();
        if s.definite(c).is_some() {
            if r < model.p_flip {
                s.apply_unitary1(c, &Unitary1::x())?;
                flips += 1;
            }
        } else if let Some([px, py, pz]) = model.quantum_pauli {
            let u = if r < px {
                Unitary1::x()
            } else if r < px + py {
                Unitary1::y()
            } else if r < px + py + pz {
                Unitary1::z()
            } else {
                continue;
            };
            s.apply_unitary1(c, &u)?;
            flips += 1;
        }
    }
    Ok(flips)
}

/// Majority vote over three copies fails iff at least two flipped.
pub fn analytic_repetition_failure(p: f64) -> f64 {
    3.0 * p * p * (1.0 - p) + p * p * p
}

/// Wilson score interval for `k` successes out of `n` at normal quantile `z`.
pub fn wilson_interval(k: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let (k, n) = (k as f64, n as f64);
    let ph = k / n;
    let z2 = z * z;
    let den = 1.0 + z2 / n;
    let mid = (ph + z2 / (2.0 * n)) / den;
    let half = z * (ph * (1.0 - ph) / n + z2 / (4.0 * n * n)).sqrt() / den;
    ((mid - half).max(0.0), (mid + half).min(1.0))
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of trial `i`: `splitmix64(master ^ splitmix64(i))`.
pub fn trial_seed(master: u64, i: u64) -> u64 {
    splitmix64(master ^ splitmix64(i))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Corrected,
    Uncorrected,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Timing {
    /// Noise between correction cycles.
    #[default]
    Epoch,
    /// Noise after every primitive instruction of the cycle as well.
    PerStep,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub layout: LayoutConfig,
    pub model: ErrorModel,
    pub cycles: usize,
    pub mode: Mode,
    pub trials: u64,
    #[serde(default)]
    pub timing: Timing,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialStats {
    pub trials: u64,
    pub failures: u64,
    pub rate: f64,
    pub wilson_lo: f64,
    pub wilson_hi: f64,
    /// Failures by the cycle in which they occurred.
    pub per_cycle: Vec<u64>,
    /// `1 - (1 - rate)^(1/cycles)`.
    pub per_cycle_rate: f64,
}

impl TrialStats {
    fn from_outcomes(outcomes: &[Option<usize>], cycles: usize) -> Self {
        let trials = outcomes.len() as u64;
        let mut per_cycle = vec![0u64; cycles];
        for c in outcomes.iter().flatten() {
            per_cycle[*c] += 1;
        }
        let failures = per_cycle.iter().sum();
        let rate = failures as f64 / trials as f64;
        let (wilson_lo, wilson_hi) = wilson_interval(failures, trials, 1.96);
        let per_cycle_rate = 1.0 - (1.0 - rate).powf(1.0 / cycles as f64);
        TrialStats { trials, failures, rate, wilson_lo, wilson_hi, per_cycle, per_cycle_rate }
    }
}

fn bits_of(s: &ChainState) -> Option<Vec<u8>> {
    (0..s.n).map(|i| s.classical_bit(i).map(u8::from)).collect()
}

/// Exact memo of a measurement- and reset-free program on fully classical
/// inputs: such a program is a deterministic map on bit strings, so each
/// distinct input is simulated once.
struct ClassicalCache<'a> {
    program: &'a PulseProgram,
    map: Mutex<HashMap<Vec<u8>, Vec<u8>>>,
}

impl<'a> ClassicalCache<'a> {
    fn new(program: &'a PulseProgram) -> Self {
        let random = isa::flatten(program)
            .iter()
            .any(|i| matches!(i, Instr::MeasureA | Instr::MeasureB | Instr::ResetA | Instr::ResetB));
        assert!(!random, "cache needs a measurement- and reset-free program");
        ClassicalCache { program, map: Mutex::new(HashMap::new()) }
    }

    fn run(&self, s: &mut ChainState, rng: &mut SimRng) -> Result<()> {
        let Some(key) = bits_of(s) else {
            isa::run(s, self.program, rng)?;
            return Ok(());
        };
        if let Some(out) = self.map.lock().expect("cache lock").get(&key) {
            *s = ChainState::from_bits(out);
            return Ok(());
        }
        isa::run(s, self.program, rng)?;
        if let Some(out) = bits_of(s) {
            self.map.lock().expect("cache lock").insert(key, out);
        }
        Ok(())
    }
}

fn corrected_trial(
    lay: &Layout,
    cfg: &McConfig,
    cycle: &ClassicalCache,
    flat: &[Instr],
    cells: &[usize],
    seed: u64,
) -> Result<Option<usize>> {
    let cus: Vec<usize> = OFFSETS.iter().map(|o| lay.cu_home[*o]).collect();
    let anc = lay.comp[3];
    let mut rng = SimRng::seed_from_u64(seed);
    let mut s = ChainState::init(lay, "all-zero")?;
    redundant::deploy_three_cus(&mut s, lay, 0)?;
    for k in 0..cfg.cycles {
        apply_noise_step(&mut s, &cfg.model, cells, &mut rng)?;
        let off = cus.iter().filter(|&&c| s.classical_bit(c) != Some(true)).count();
        if off >= 2 {
            return Ok(Some(k));
        }
        match cfg.timing {
            Timing::Epoch => cycle.run(&mut s, &mut rng)?,
            Timing::PerStep => {
                // a flip mid-sequence can break a protocol precondition; that
                // is a failure of the trial, not of the run
                for i in flat {
                    if isa::execute(&mut s, i, &mut rng).is_err() {
                        return Ok(Some(k));
                    }
                    apply_noise_step(&mut s, &cfg.model, cells, &mut rng)?;
                }
            }
        }
        let healthy = cus.iter().all(|&c| s.classical_bit(c) == Some(true)) && s.classical_bit(anc) == Some(false);
        if !healthy {
            return Ok(Some(k));
        }
    }
    Ok(None)
}

fn uncorrected_trial(lay: &Layout, cfg: &McConfig, cells: &[usize], seed: u64) -> Result<Option<usize>> {
    let mut rng = SimRng::seed_from_u64(seed);
    let mut s = ChainState::init(lay, "single-CU")?;
    let cu = lay.cu_home[0];
    for k in 0..cfg.cycles {
        apply_noise_step(&mut s, &cfg.model, cells, &mut rng)?;
        if s.classical_bit(cu) != Some(true) {
            return Ok(Some(k));
        }
    }
    Ok(None)
}

fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = std::env::var("GLOBALCTL_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        b = b.num_threads(n);
    }
    b.build().map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))
}

/// Runs independent trials in parallel; outcomes are collected in trial
/// order, so the statistics do not depend on scheduling.
pub fn run_trials(cfg: &McConfig) -> Result<TrialStats> {
    if cfg.trials == 0 || cfg.cycles == 0 {
        return Err(Error::InvalidArgument("trials and cycles must be ≥ 1".into()));
    }
    cfg.model.validate()?;
    let lay = build_layout(&cfg.layout)?;
    let outcomes: Vec<Option<usize>> = match cfg.mode {
        Mode::Corrected => {
            let cus: Vec<usize> = OFFSETS.iter().map(|o| lay.cu_home[*o]).collect();
            let cells = noisy_cells(&lay, &cfg.model.scope, &cus);
            let prog = redundant::correction_cycle_program(&lay, 0)?;
            let flat = isa::flatten(&prog);
            let cache = ClassicalCache::new(&prog);
            thread_pool()?.install(|| {
                (0..cfg.trials)
                    .into_par_iter()
                    .map(|i| corrected_trial(&lay, cfg, &cache, &flat, &cells, trial_seed(cfg.model.master_seed, i)))
                    .collect::<Result<Vec<_>>>()
            })?
        }
        Mode::Uncorrected => {
            let cells = noisy_cells(&lay, &cfg.model.scope, &[lay.cu_home[0]]);
            thread_pool()?.install(|| {
                (0..cfg.trials)
                    .into_par_iter()
                    .map(|i| uncorrected_trial(&lay, cfg, &cells, trial_seed(cfg.model.master_seed, i)))
                    .collect::<Result<Vec<_>>>()
            })?
        }
    };
    Ok(TrialStats::from_outcomes(&outcomes, cfg.cycles))
}

/// One CSV row of an MC sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub p: f64,
    pub mode: Mode,
    pub trials: u64,
    pub failures: u64,
    pub rate: f64,
    pub wilson_lo: f64,
    pub wilson_hi: f64,
}

impl SweepRow {
    pub fn new(p: f64, mode: Mode, st: &TrialStats) -> Self {
        SweepRow {
            p,
            mode,
            trials: st.trials,
            failures: st.failures,
            rate: st.per_cycle_rate,
            wilson_lo: st.wilson_lo,
            wilson_hi: st.wilson_hi,
        }
    }
}
