mod common;

use common::load_payload;
use globalctl::layout::{build_layout, LayoutConfig};
use globalctl::noise::*;
use globalctl::{rng_from_seed, ChainState};

fn cfg(p: f64, mode: Mode, cycles: usize, trials: u64) -> McConfig {
    let mut model = ErrorModel::bit_flip(p);
    model.scope = Scope::cu_only();
    model.master_seed = 42;
    McConfig { layout: LayoutConfig::triple(7, 4), model, cycles, mode, trials, timing: Timing::Epoch }
}

#[test]
fn zero_noise_is_bit_exact() {
    let lay = build_layout(&LayoutConfig::stations(4, 2, 2, 2)).unwrap();
    let mut s = ChainState::init(&lay, "level-0").unwrap();
    load_payload(&mut s, &lay, 1);
    let before = s.clone();
    let mut m = ErrorModel::bit_flip(0.0);
    m.scope.payload = true;
    m.quantum_pauli = Some([0.0; 3]);
    let cells = noisy_cells(&lay, &m.scope, &lay.cu_sites());
    assert_eq!(apply_noise_step(&mut s, &m, &cells, &mut rng_from_seed(0)).unwrap(), 0);
    assert_eq!(s, before);
}

#[test]
fn certain_flip_hits_every_cu() {
    let lay = build_layout(&LayoutConfig::stations(4, 2, 2, 2)).unwrap();
    let mut s = ChainState::init(&lay, "level-0").unwrap();
    let before = s.clone();
    let m = ErrorModel { p_flip: 1.0, quantum_pauli: None, scope: Scope::cu_only(), master_seed: 0 };
    let cells = noisy_cells(&lay, &m.scope, &lay.cu_sites());
    assert_eq!(cells, lay.cu_sites());
    apply_noise_step(&mut s, &m, &cells, &mut rng_from_seed(0)).unwrap();
    for i in 0..s.n {
        let flip = lay.cu_sites().contains(&i);
        assert_eq!(s.classical_bit(i), before.classical_bit(i).map(|b| b ^ flip), "cell {i}");
    }
}

#[test]
fn same_seed_same_flips() {
    let lay = build_layout(&LayoutConfig::plain(6)).unwrap();
    let m = ErrorModel::bit_flip(0.3);
    let cells = noisy_cells(&lay, &m.scope, &lay.cu_sites());
    let run = |seed| {
        let mut s = ChainState::init(&lay, "single-CU").unwrap();
        apply_noise_step(&mut s, &m, &cells, &mut rng_from_seed(seed)).unwrap();
        s
    };
    assert_eq!(run(9), run(9));
    assert_ne!(run(9), run(10));
}

#[test]
fn no_noise_no_failures() {
    for mode in [Mode::Corrected, Mode::Uncorrected] {
        let st = run_trials(&cfg(0.0, mode, 3, 200)).unwrap();
        assert_eq!(st.failures, 0);
    }
}

#[test]
fn uncorrected_single_epoch_is_binomial() {
    let q = 0.05;
    let st = run_trials(&cfg(q, Mode::Uncorrected, 1, 20_000)).unwrap();
    let sigma = (q * (1.0 - q) / 20_000.0).sqrt();
    assert!((st.rate - q).abs() < 3.0 * sigma, "{st:?}");
}

#[test]
fn corrected_matches_repetition_code() {
    let q = 1e-2;
    let st = run_trials(&cfg(q, Mode::Corrected, 1, 20_000)).unwrap();
    let (lo, hi) = wilson_interval(st.failures, st.trials, 3.0);
    let want = analytic_repetition_failure(q);
    assert!(lo <= want && want <= hi, "{st:?} vs {want}");
}

#[test]
fn multi_cycle_breakdown_and_determinism() {
    let c = cfg(0.05, Mode::Corrected, 4, 2_000);
    let a = run_trials(&c).unwrap();
    assert_eq!(a, run_trials(&c).unwrap());
    assert_eq!(a.per_cycle.len(), 4);
    assert_eq!(a.per_cycle.iter().sum::<u64>(), a.failures);
    assert!(a.wilson_lo <= a.rate && a.rate <= a.wilson_hi);
}

#[test]
fn per_step_noise_runs() {
    let mut c = cfg(1e-3, Mode::Corrected, 1, 50);
    c.timing = Timing::PerStep;
    let st = run_trials(&c).unwrap();
    assert_eq!(st.trials, 50);
}

#[test]
fn rejects_bad_model() {
    assert!(run_trials(&cfg(1.5, Mode::Corrected, 1, 1)).is_err());
    assert!(run_trials(&cfg(0.1, Mode::Corrected, 1, 0)).is_err());
}
