#![allow(dead_code)]

use globalctl::dense::DenseState;
use globalctl::{ChainState, Layout, QubitChain, Unitary1};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};

pub fn rand_u(rng: &mut impl Rng) -> Unitary1 {
    let ax = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(0.1..1.0f64)];
    let ph = C64::from_polar(1.0, rng.gen_range(-3.0..3.0));
    Unitary1::axis_angle(ax, rng.gen_range(-3.1..3.1)).unwrap().scale(ph)
}

/// Random product payload on every computational cell; returns the
/// single-qubit states written.
pub fn load_payload(s: &mut ChainState, layout: &Layout, seed: u64) -> Vec<[C64; 2]> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    layout
        .comp
        .iter()
        .map(|&c| {
            let u = rand_u(&mut rng);
            s.apply_unitary1(c, &u).unwrap();
            let base = if s.classical_bit(c) == Some(true) { 1 } else { 0 };
            [u.m[0][base], u.m[1][base]]
        })
        .collect()
}

pub fn overlap2(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum::<C64>().norm_sqr()
}

/// Worst single-cell payload fidelity.
pub fn payload_fidelity(s: &ChainState, layout: &Layout, want: &[[C64; 2]]) -> f64 {
    layout
        .comp
        .iter()
        .zip(want)
        .map(|(&c, w)| s.cell_fidelity(c, w))
        .fold(1.0, f64::min)
}

/// Classical values of every non-computational cell (None where quantum).
pub fn frame(s: &ChainState, layout: &Layout) -> Vec<Option<bool>> {
    (0..s.n).map(|i| if layout.comp.contains(&i) { None } else { s.classical_bit(i) }).collect()
}

pub fn expect_frame(bits: &[u8], layout: &Layout) -> Vec<Option<bool>> {
    bits.iter().enumerate().map(|(i, &b)| if layout.comp.contains(&i) { None } else { Some(b == 1) }).collect()
}

/// Ideal controlled-U (control `c`, target `t`) on a dense vector.
pub fn ideal_cu(d: &mut DenseState, c: usize, t: usize, u: &Unitary1) {
    let (cb, tb) = (1usize << c, 1usize << t);
    for x in 0..d.amps.len() {
        if x & cb != 0 && x & tb == 0 {
            let v = u.apply([d.amps[x], d.amps[x | tb]]);
            d.amps[x] = v[0];
            d.amps[x | tb] = v[1];
        }
    }
}
