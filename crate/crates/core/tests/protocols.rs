mod common;

use common::*;
use globalctl::dense::{compare, max_deviation, DenseState};
use globalctl::layout::{build_layout, LayoutConfig};
use globalctl::protocols::{self as pr, slot};
use globalctl::{isa, rng_from_seed, ChainState, Layout, PulseProgram, QubitChain, Unitary1};
use num_complex::Complex64 as C64;
use rand::SeedableRng;

fn plain(n: usize) -> Layout {
    build_layout(&LayoutConfig::plain(n)).unwrap()
}

#[test]
fn move_cu_round_trip_and_bounds() {
    let lay = plain(3);
    let mut s = ChainState::init(&lay, "single-CU").unwrap();
    let mut r = rng_from_seed(0);
    pr::move_cu(&mut s, &lay, 1, &mut r).unwrap();
    assert_eq!(pr::find_cus(&s), vec![7]);
    pr::move_cu(&mut s, &lay, 1, &mut r).unwrap();
    pr::move_cu(&mut s, &lay, -2, &mut r).unwrap();
    assert_eq!(s.cells, ChainState::init(&lay, "single-CU").unwrap().cells);
    assert_eq!(pr::move_cu(&mut s, &lay, 3, &mut r).unwrap_err().kind(), "OutOfMargins");
    assert_eq!(pr::move_cu(&mut s, &lay, -1, &mut r).unwrap_err().kind(), "OutOfMargins");
}

#[test]
fn single_qubit_gate_examples() {
    let lay = plain(2);
    let mut r = rng_from_seed(1);
    let mut s = ChainState::init(&lay, "single-CU").unwrap();
    pr::targeted_single_qubit_gate(&mut s, &lay, 1, &Unitary1::x(), &mut r).unwrap();
    let mut want = lay.pattern("single-CU").unwrap();
    want[6] = 1;
    assert_eq!(s.cells, ChainState::from_bits(&want).cells);

    let mut s = ChainState::init(&lay, "single-CU").unwrap();
    let before = s.to_dense().unwrap();
    for _ in 0..2 {
        pr::targeted_single_qubit_gate(&mut s, &lay, 0, &Unitary1::h(), &mut r).unwrap();
    }
    assert!(max_deviation(&s.to_dense().unwrap(), &before).unwrap() < 1e-10);

    let mut none = ChainState::init(&lay, "all-zero").unwrap();
    assert_eq!(pr::targeted_single_qubit_gate(&mut none, &lay, 0, &Unitary1::h(), &mut r).unwrap_err().kind(), "NoCuFound");
    let mut two = ChainState::init(&lay, "single-CU").unwrap();
    two.apply_unitary1(9, &Unitary1::x()).unwrap();
    assert_eq!(pr::targeted_single_qubit_gate(&mut two, &lay, 0, &Unitary1::h(), &mut r).unwrap_err().kind(), "MultipleCusActive");
}

#[test]
fn single_qubit_gate_matches_oracle() {
    let lay = plain(2);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
    for seed in 0..20 {
        let mut s = ChainState::init(&lay, "single-CU").unwrap();
        load_payload(&mut s, &lay, seed);
        let mut ideal = DenseState::from_chain(&s).unwrap();
        let q = (seed % 2) as usize;
        let u = rand_u(&mut rng);
        ideal.apply_unitary1(lay.comp[q], &u).unwrap();
        pr::targeted_single_qubit_gate(&mut s, &lay, q, &u, &mut rng_from_seed(seed)).unwrap();
        assert!(compare(&s, &ideal).unwrap() <= 1e-10);
    }
}

#[test]
fn two_qubit_gate_cz_example_and_control_off() {
    let lay = plain(2);
    let mut r = rng_from_seed(2);
    let mut s = ChainState::init(&lay, "single-CU").unwrap();
    s.apply_unitary1(0, &Unitary1::x()).unwrap();
    s.apply_unitary1(6, &Unitary1::h()).unwrap();
    pr::two_qubit_gate(&mut s, &lay, 0, 1, &Unitary1::z(), &mut r).unwrap();
    let minus = [C64::new(1.0, 0.0) / 2f64.sqrt(), C64::new(-1.0, 0.0) / 2f64.sqrt()];
    assert!(overlap2(&s.reduced_pure(&[6]).unwrap(), &minus) > 1.0 - 1e-12);
    assert_eq!(s.classical_bit(0), Some(true));

    let mut s = ChainState::init(&lay, "single-CU").unwrap();
    s.apply_unitary1(0, &Unitary1::h()).unwrap();
    s.apply_unitary1(0, &Unitary1::h()).unwrap();
    s.apply_unitary1(6, &Unitary1::axis_angle([0.2, 1.0, 0.0], 1.3).unwrap()).unwrap();
    let before = s.to_dense().unwrap();
    let u = Unitary1::axis_angle([1.0, -0.5, 0.3], 2.2).unwrap();
    pr::two_qubit_gate(&mut s, &lay, 0, 1, &u, &mut r).unwrap();
    assert!(max_deviation(&s.to_dense().unwrap(), &before).unwrap() <= 1e-9);
    assert_eq!(pr::two_qubit_gate(&mut s, &lay, 1, 1, &u, &mut r).unwrap_err().kind(), "SameIndex");
}

fn basis_states() -> Vec<Unitary1> {
    vec![Unitary1::identity(), Unitary1::x(), Unitary1::h(), Unitary1::h() * Unitary1::phase(std::f64::consts::FRAC_PI_2)]
}

#[test]
fn two_qubit_gate_process_matches_ideal() {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    for n_comp in [2usize, 3] {
        let lay = plain(n_comp);
        for (y, x) in [(0usize, 1usize), (1, 0), (0, n_comp - 1), (n_comp - 1, 0)] {
            if x == y {
                continue;
            }
            let u = rand_u(&mut rng);
            for a in basis_states() {
                for b in basis_states() {
                    let mut s = ChainState::init(&lay, "single-CU").unwrap();
                    s.apply_unitary1(lay.comp[y], &a).unwrap();
                    s.apply_unitary1(lay.comp[x], &b).unwrap();
                    let mut ideal = DenseState::from_chain(&s).unwrap();
                    ideal_cu(&mut ideal, lay.comp[y], lay.comp[x], &u);
                    pr::two_qubit_gate(&mut s, &lay, y, x, &u, &mut rng_from_seed(0)).unwrap();
                    worst = worst.max(compare(&s, &ideal).unwrap());
                }
            }
        }
    }
    assert!(worst <= 1e-9, "{worst:e}");
}

#[test]
fn two_qubit_gate_random_inputs_and_checkpoint() {
    let lay = plain(2);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
    for seed in 0..30u64 {
        let (y, x) = if seed % 2 == 0 { (0, 1) } else { (1, 0) };
        let u = rand_u(&mut rng);
        let mut s = ChainState::init(&lay, "single-CU").unwrap();
        let payload = load_payload(&mut s, &lay, seed);
        let mut ideal = DenseState::from_chain(&s).unwrap();
        ideal_cu(&mut ideal, lay.comp[y], lay.comp[x], &u);
        let (prog, enc, cp) = pr::two_qubit_gate_program(&lay, slot(1), y, x, &u).unwrap();
        isa::run(&mut s, &prog, &mut rng_from_seed(seed)).unwrap();
        assert!(compare(&s, &ideal).unwrap() <= 1e-9);

        // checkpoint with the target left classical
        let mut t = ChainState::init(&lay, "single-CU").unwrap();
        let a = rand_u(&mut rng);
        t.apply_unitary1(lay.comp[y], &a).unwrap();
        let head = PulseProgram { instrs: prog.instrs[..enc].to_vec(), ..prog.clone() };
        isa::run(&mut t, &head, &mut rng_from_seed(0)).unwrap();
        let f = cp.fidelity(&t, a.m[0][0], a.m[1][0]).expect("pair separable from the rest");
        assert!(f >= 1.0 - 1e-9, "checkpoint fidelity {f}");
        let _ = payload;
    }
}

#[test]
fn reset_a_plain_clears_any_single_flip() {
    let lay = plain(2);
    let clean = lay.pattern("single-CU").unwrap();
    for &b in &lay.a_buffers() {
        let mut bits = clean.clone();
        bits[b] = 1;
        let mut s = ChainState::init_bits(&lay, &bits).unwrap();
        let want_payload = load_payload(&mut s, &lay, b as u64);
        let mut ideal = ChainState::init(&lay, "single-CU").unwrap();
        load_payload(&mut ideal, &lay, b as u64);
        pr::reset_a_buffers(&mut s, &lay, &mut rng_from_seed(0)).unwrap();
        assert!(compare(&s, &DenseState::from_chain(&ideal).unwrap()).unwrap() <= 1e-9);
        assert!(payload_fidelity(&s, &lay, &want_payload) >= 1.0 - 1e-9);
    }
}

fn station_layout() -> Layout {
    build_layout(&LayoutConfig::stations(4, 2, 2, 2)).unwrap()
}

fn run_resets(s: &mut ChainState, lay: &Layout) {
    let mut r = rng_from_seed(0);
    pr::reset_b_buffers(s, lay, &mut r).unwrap();
    pr::reset_a_buffers(s, lay, &mut r).unwrap();
}

#[test]
fn buffer_resets_clear_any_single_flip_on_stations() {
    let lay = station_layout();
    let clean = lay.pattern("level-0").unwrap();
    let cu_sites = lay.cu_sites();
    let targets: Vec<usize> =
        (0..lay.n).filter(|i| (i % 2 == 1 && !cu_sites.contains(i)) || lay.a_buffers().contains(i)).collect();
    for (k, &b) in targets.iter().enumerate() {
        let mut bits = clean.clone();
        bits[b] = 1;
        let mut s = ChainState::init_bits(&lay, &bits).unwrap();
        let want = load_payload(&mut s, &lay, k as u64);
        run_resets(&mut s, &lay);
        assert_eq!(frame(&s, &lay), expect_frame(&clean, &lay), "flip at {b}");
        assert!(payload_fidelity(&s, &lay, &want) >= 1.0 - 1e-9, "payload after flip at {b}");
    }
}

#[test]
fn buffer_resets_are_idempotent() {
    let lay = station_layout();
    let mut bits = lay.pattern("level-0").unwrap();
    bits[lay.ss[1].cu_site + 4] = 1;
    let mut once = ChainState::init_bits(&lay, &bits).unwrap();
    load_payload(&mut once, &lay, 3);
    run_resets(&mut once, &lay);
    let mut twice = once.clone();
    run_resets(&mut twice, &lay);
    assert_eq!(frame(&once, &lay), frame(&twice, &lay));
    let mut r = rng_from_seed(0);
    let mut a = once.clone();
    pr::reset_a_buffers(&mut a, &lay, &mut r).unwrap();
    assert_eq!(frame(&a, &lay), frame(&once, &lay));
    let mut b = once.clone();
    pr::reset_b_buffers(&mut b, &lay, &mut r).unwrap();
    assert_eq!(frame(&b, &lay), frame(&once, &lay));
}

#[test]
fn reset_b_needs_stations() {
    let lay = plain(2);
    let mut s = ChainState::init(&lay, "single-CU").unwrap();
    assert!(pr::reset_b_buffers(&mut s, &lay, &mut rng_from_seed(0)).is_err());
}

fn hierarchy_case(lay: &Layout) {
    let d = lay.concat_depth;
    let start = lay.canonical_bits(1);
    let goal = lay.canonical_bits(d);
    let mut targets: Vec<usize> = Vec::new();
    for st in lay.ss.iter().filter(|st| st.label < d) {
        targets.extend(&st.cells);
        if st.label == 0 {
            targets.push(st.cu_site);
        }
    }
    let mut r = rng_from_seed(0);
    let mut clean = ChainState::init_bits(lay, &start).unwrap();
    pr::hierarchical_reset(&mut clean, lay, &mut r).unwrap();
    assert_eq!(frame(&clean, lay), expect_frame(&goal, lay));
    for (k, &t) in targets.iter().enumerate() {
        let mut bits = start.clone();
        bits[t] ^= 1;
        let mut s = ChainState::init_bits(lay, &bits).unwrap();
        let want = load_payload(&mut s, lay, k as u64);
        pr::hierarchical_reset(&mut s, lay, &mut r).unwrap();
        assert_eq!(frame(&s, lay), expect_frame(&goal, lay), "flip at {t}");
        assert!(payload_fidelity(&s, lay, &want) >= 1.0 - 1e-9);
    }
}

#[test]
fn hierarchical_reset_restores_every_single_station_flip() {
    hierarchy_case(&station_layout());
    hierarchy_case(&build_layout(&LayoutConfig::stations(6, 3, 1, 1)).unwrap());
    hierarchy_case(&build_layout(&LayoutConfig::stations(8, 2, 3, 2)).unwrap());
}
