use globalctl::dense::{self, compare, random_program, DenseState, RandomProgramConfig};
use globalctl::isa::{self, Instr, Macro};
use globalctl::layout::{build_layout, LayoutConfig};
use globalctl::{rng_from_seed, ChainState, QubitChain, Unitary1};
use num_complex::Complex64 as C64;
use proptest::prelude::*;

fn run_both(n_comp: usize, bits: &[u8], prog: &globalctl::PulseProgram, seed: u64) -> f64 {
    let lay = build_layout(&LayoutConfig::plain(n_comp)).unwrap();
    let mut h = ChainState::init_bits(&lay, bits).unwrap();
    let mut r = rng_from_seed(seed);
    let ho = isa::run(&mut h, prog, &mut r).unwrap();
    let (d, dout) = dense::run_program(&lay, Some(bits), prog, seed).unwrap();
    assert_eq!(ho, dout, "measurement records diverged");
    assert!((h.norm() - 1.0).abs() < 1e-12);
    compare(&h, &d).unwrap()
}

#[test]
fn random_programs_match_oracle() {
    let mut worst: f64 = 0.0;
    for seed in 0..200u64 {
        let n_comp = 1 + (seed % 2) as usize; // n = 6 or 12
        let cfg = RandomProgramConfig { length: 25, ..Default::default() };
        let prog = random_program(&cfg, seed);
        let mut bits = vec![0u8; 6 * n_comp];
        bits[1] = (seed % 3 == 0) as u8;
        worst = worst.max(run_both(n_comp, &bits, &prog, seed));
    }
    assert!(worst <= 1e-10, "max deviation {worst:e}");
}

#[test]
fn random_program_is_reproducible() {
    let cfg = RandomProgramConfig::default();
    assert_eq!(random_program(&cfg, 7), random_program(&cfg, 7));
    let empty = random_program(&RandomProgramConfig { length: 0, ..cfg.clone() }, 1);
    assert!(empty.is_empty());
    let unitary = random_program(&RandomProgramConfig { nonunitary_density: 0.0, length: 200, ..cfg }, 3);
    assert!(isa::flatten(&unitary).iter().all(|i| isa::adjoint(i).is_some() || matches!(i, Instr::Macro(_))));
}

fn ctrl_check(m: Macro, u: Unitary1, b: usize, partner: usize) {
    // n = 6, random product input on A, one B set.
    let mut bits = vec![0u8; 6];
    bits[b] = 1;
    let mut s = DenseState::from_bits(&bits).unwrap();
    let mut r = rng_from_seed(0);
    for (k, a) in [0usize, 2, 4].iter().enumerate() {
        s.apply_unitary1(*a, &Unitary1::axis_angle([1.0, k as f64, 0.5], 0.7 + k as f64).unwrap()).unwrap();
    }
    let mut want = s.clone();
    want.apply_unitary1(partner, &u).unwrap();
    let mut p = globalctl::PulseProgram::new("c", "");
    p.push(Instr::Macro(m));
    isa::run(&mut s, &p, &mut r).unwrap();
    assert!(dense::max_deviation(&s.amps, &want.amps).unwrap() < 1e-12);
}

#[test]
fn ctrl_u_hits_only_partner() {
    let u = Unitary1::axis_angle([0.3, -1.0, 0.2], 2.1).unwrap().scale(C64::from_polar(1.0, 0.4));
    ctrl_check(Macro::CtrlUBA(Unitary1::z()), Unitary1::z(), 1, 2);
    ctrl_check(Macro::CtrlUBA(u), u, 3, 4);
    ctrl_check(Macro::CtrlUAB(u), u, 3, 2);
    ctrl_check(Macro::CtrlUAB(Unitary1::x()), Unitary1::x(), 1, 0);
}

#[test]
fn swap_squared_is_identity() {
    for (m, seed) in [(Macro::SwapAB, 1u64), (Macro::SwapBA, 2)] {
        let mut s = DenseState::from_bits(&[0; 8]).unwrap();
        let mut r = rng_from_seed(seed);
        for i in 0..8 {
            s.apply_unitary1(i, &Unitary1::axis_angle([1.0, 0.2 * i as f64, 0.3], 0.4 + i as f64).unwrap()).unwrap();
        }
        s.apply_cphase(2, 3, 0.9).unwrap();
        let before = s.amps.clone();
        let mut p = globalctl::PulseProgram::new("s", "");
        p.push(Instr::Macro(m.clone()));
        p.push(Instr::Macro(m));
        isa::run(&mut s, &p, &mut r).unwrap();
        assert!(dense::max_deviation(&s.amps, &before).unwrap() < 1e-10);
    }
}

#[test]
fn measure_b_single_cu_consumes_no_draws() {
    let lay = build_layout(&LayoutConfig::plain(2)).unwrap();
    let mut s = ChainState::init(&lay, "single-CU").unwrap();
    let mut r = rng_from_seed(5);
    let out = isa::execute(&mut s, &Instr::MeasureB, &mut r).unwrap().unwrap();
    assert_eq!(out.iter().filter(|b| **b).count(), 1);
    assert!(out[0]);
    use rand::Rng;
    assert_eq!(r.gen::<u64>(), rng_from_seed(5).gen::<u64>());
}

#[test]
fn flip_sandwich_involution_and_boundary() {
    let mut s = ChainState::from_bits(&[1, 0, 1, 0, 0, 0]);
    let mut r = rng_from_seed(0);
    let m = Instr::Macro(Macro::FlipBSandwich);
    isa::execute(&mut s, &m, &mut r).unwrap();
    assert_eq!(s.classical_bit(1), Some(true));
    isa::execute(&mut s, &m, &mut r).unwrap();
    assert_eq!(s.classical_bit(1), Some(false));
    // last B has only one neighbour
    let mut t = ChainState::from_bits(&[0, 0, 0, 0, 1, 0]);
    isa::execute(&mut t, &m, &mut r).unwrap();
    assert_eq!(t.classical_bit(5), Some(false));
}

#[test]
fn shift_round_trip_and_creset_rejects_quantum_control() {
    let bits = [0, 1, 0, 0, 1, 0, 0, 1, 0, 0, 0, 0];
    let mut s = ChainState::from_bits(&bits);
    let mut r = rng_from_seed(0);
    isa::execute(&mut s, &Instr::Macro(Macro::ShiftB(1)), &mut r).unwrap();
    isa::execute(&mut s, &Instr::Macro(Macro::ShiftB(-1)), &mut r).unwrap();
    assert_eq!(s, ChainState { step_counter: 2, ..ChainState::from_bits(&bits) });
    s.apply_unitary1(3, &Unitary1::h()).unwrap();
    let e = isa::execute(&mut s, &Instr::Macro(Macro::CresetBA), &mut r).unwrap_err();
    assert_eq!(e.kind(), "QuantumControlledReset");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn unitary_programs_invert(seed in 0u64..10_000) {
        let cfg = RandomProgramConfig { length: 15, nonunitary_density: 0.0, ..Default::default() };
        let prog = random_program(&cfg, seed);
        let adj = prog.adjoint().unwrap();
        let mut s = ChainState::from_bits(&[0, 1, 1, 0, 0, 0, 1, 0]);
        let mut r = rng_from_seed(seed);
        isa::run(&mut s, &prog, &mut r).unwrap();
        isa::run(&mut s, &adj, &mut r).unwrap();
        let d = DenseState::from_bits(&[0, 1, 1, 0, 0, 0, 1, 0]).unwrap();
        prop_assert!(compare(&s, &d).unwrap() < 1e-12);
    }

    #[test]
    fn sandwich_commutes_with_diagonal_a(phi in -3.0f64..3.0, seed in 0u64..1000) {
        let mut bits = vec![0u8; 8];
        bits[3] = (seed % 2) as u8;
        let mut a = DenseState::from_bits(&bits).unwrap();
        let mut r = rng_from_seed(seed);
        for i in (0..8).step_by(2) {
            a.apply_unitary1(i, &Unitary1::axis_angle([1.0, 0.3, seed as f64 * 0.01], 1.0 + i as f64).unwrap()).unwrap();
        }
        let mut b = a.clone();
        let flip = Instr::Macro(Macro::FlipBSandwich);
        let diag = Instr::RotA(Unitary1::phase(phi));
        for i in [&flip, &diag] { isa::execute(&mut a, i, &mut r).unwrap(); }
        for i in [&diag, &flip] { isa::execute(&mut b, i, &mut r).unwrap(); }
        prop_assert!(dense::max_deviation(&a.amps, &b.amps).unwrap() < 1e-12);
    }
}
