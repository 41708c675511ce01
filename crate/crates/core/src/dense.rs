//! Brute-force statevector over the whole chain, used as ground truth.

use num_complex::Complex64 as C64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::chain::{ChainState, QubitChain};
use crate::error::{Error, Result};
use crate::isa::{self, Instr, Macro, PulseProgram};
use crate::layout::Layout;
use crate::unitary::Unitary1;
use crate::{rng_from_seed, SimRng, DETERMINISTIC_TOL};

pub const MAX_DENSE_N: usize = 24;

#[derive(Clone, Debug)]
pub struct DenseState {
    pub n: usize,
    /// Bit `i` of the index is chain cell `i`.
    pub amps: Vec<C64>,
    pub step_counter: u64,
}

impl DenseState {
    pub fn from_bits(bits: &[u8]) -> Result<Self> {
        let n = bits.len();
        if n > MAX_DENSE_N {
            return Err(Error::TooLarge(n));
        }
        let mut amps = vec![C64::new(0.0, 0.0); 1 << n];
        let x = bits.iter().enumerate().fold(0usize, |x, (i, &b)| x | ((b as usize & 1) << i));
        amps[x] = C64::new(1.0, 0.0);
        Ok(DenseState { n, amps, step_counter: 0 })
    }

    /// Dense copy of a hybrid state.
    pub fn from_chain(s: &ChainState) -> Result<Self> {
        Ok(DenseState { n: s.n, amps: s.to_dense()?, step_counter: s.step_counter })
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    fn p1(&self, idx: usize) -> f64 {
        let bit = 1 << idx;
        self.amps.iter().enumerate().filter(|(x, _)| x & bit != 0).map(|(_, a)| a.norm_sqr()).sum()
    }
}

impl QubitChain for DenseState {
    fn n(&self) -> usize {
        self.n
    }

    fn apply_unitary1(&mut self, idx: usize, u: &Unitary1) -> Result<()> {
        if idx >= self.n {
            return Err(Error::IndexOutOfRange { idx, n: self.n });
        }
        if !u.is_unitary(1e-10) {
            return Err(Error::NonUnitary);
        }
        let bit = 1 << idx;
        for x in 0..self.amps.len() {
            if x & bit == 0 {
                let v = u.apply([self.amps[x], self.amps[x | bit]]);
                self.amps[x] = v[0];
                self.amps[x | bit] = v[1];
            }
        }
        Ok(())
    }

    fn apply_cphase(&mut self, i: usize, j: usize, theta: f64) -> Result<()> {
        if i >= self.n || j >= self.n {
            return Err(Error::IndexOutOfRange { idx: i.max(j), n: self.n });
        }
        if i == j {
            return Err(Error::SameIndex);
        }
        let mask = 1 << i | 1 << j;
        let ph = C64::from_polar(1.0, theta);
        for (x, a) in self.amps.iter_mut().enumerate() {
            if x & mask == mask {
                *a *= ph;
            }
        }
        Ok(())
    }

    fn measure_qubit(&mut self, idx: usize, rng: &mut SimRng) -> bool {
        let p1 = self.p1(idx);
        let outcome = if p1 < DETERMINISTIC_TOL {
            false
        } else if p1 > 1.0 - DETERMINISTIC_TOL {
            true
        } else {
            rng.gen::<f64>() < p1
        };
        let bit = 1 << idx;
        let keep = if outcome { bit } else { 0 };
        let mut norm = 0.0;
        for (x, a) in self.amps.iter_mut().enumerate() {
            if x & bit != keep {
                *a = C64::new(0.0, 0.0);
            } else {
                norm += a.norm_sqr();
            }
        }
        let norm = norm.sqrt();
        self.amps.iter_mut().for_each(|a| *a /= norm);
        outcome
    }

    fn toffoli(&mut self, c1: usize, c2: usize, t: usize) {
        let cm = 1 << c1 | 1 << c2;
        let tb = 1 << t;
        for x in 0..self.amps.len() {
            if x & cm == cm && x & tb == 0 {
                self.amps.swap(x, x | tb);
            }
        }
    }

    fn definite(&self, idx: usize) -> Option<bool> {
        let p1 = self.p1(idx);
        if p1 < DETERMINISTIC_TOL {
            Some(false)
        } else if p1 > 1.0 - DETERMINISTIC_TOL {
            Some(true)
        } else {
            None
        }
    }

    fn translate_b(&mut self, steps: isize) {
        let nb = (self.n / 2) as isize;
        if nb == 0 {
            return;
        }
        let dest: Vec<usize> = (0..self.n)
            .map(|i| if i % 2 == 0 { i } else { (2 * ((i / 2) as isize + steps).rem_euclid(nb) + 1) as usize })
            .collect();
        let mut out = vec![C64::new(0.0, 0.0); self.amps.len()];
        for (x, &a) in self.amps.iter().enumerate() {
            let mut y = 0;
            for (i, &d) in dest.iter().enumerate() {
                y |= (x >> i & 1) << d;
            }
            out[y] = a;
        }
        self.amps = out;
    }

    fn add_steps(&mut self, k: u64) {
        self.step_counter += k;
    }
}

/// Runs `program` from the layout's all-zero pattern, or from `init` bits.
pub fn run_program(
    layout: &Layout,
    init: Option<&[u8]>,
    program: &PulseProgram,
    seed: u64,
) -> Result<(DenseState, Vec<Vec<bool>>)> {
    if layout.n > MAX_DENSE_N {
        return Err(Error::TooLarge(layout.n));
    }
    let bits = match init {
        Some(b) => b.to_vec(),
        None => vec![0; layout.n],
    };
    if bits.len() != layout.n {
        return Err(Error::LengthMismatch { expected: layout.n, got: bits.len() });
    }
    let mut s = DenseState::from_bits(&bits)?;
    let mut rng = rng_from_seed(seed);
    let outcomes = isa::run(&mut s, program, &mut rng)?;
    Ok((s, outcomes))
}

/// `min_phi max_i |a_i - e^{i phi} b_i|` for two full amplitude vectors.
pub fn max_deviation(a: &[C64], b: &[C64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch { expected: a.len(), got: b.len() });
    }
    let ip: C64 = a.iter().zip(b).map(|(x, y)| y.conj() * x).sum();
    let phi0 = if ip.norm() > 0.0 { ip.arg() } else { 0.0 };
    let dev = |phi: f64| {
        let ph = C64::from_polar(1.0, phi);
        a.iter().zip(b).map(|(x, y)| (x - ph * y).norm()).fold(0.0, f64::max)
    };
    // the overlap phase is optimal in L2; refine the max-norm around it
    let (mut lo, mut hi) = (phi0 - 0.5, phi0 + 0.5);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..80 {
        let m1 = hi - g * (hi - lo);
        let m2 = lo + g * (hi - lo);
        if dev(m1) < dev(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    Ok(dev(phi0).min(dev((lo + hi) / 2.0)))
}

/// Hybrid-vs-dense deviation after global-phase quotient.
pub fn compare(hybrid: &ChainState, dense: &DenseState) -> Result<f64> {
    if hybrid.n != dense.n {
        return Err(Error::LengthMismatch { expected: dense.n, got: hybrid.n });
    }
    max_deviation(&hybrid.to_dense()?, &dense.amps)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RandomProgramConfig {
    pub length: usize,
    /// Probability that an instruction is a RESET/MEASURE.
    pub nonunitary_density: f64,
    pub include_macros: bool,
    pub max_angle: f64,
}

impl Default for RandomProgramConfig {
    fn default() -> Self {
        RandomProgramConfig { length: 20, nonunitary_density: 0.1, include_macros: true, max_angle: std::f64::consts::PI }
    }
}

/// Reproducible pseudo-random instruction mix.
pub fn random_program(cfg: &RandomProgramConfig, seed: u64) -> PulseProgram {
    let mut rng = rng_from_seed(seed ^ 0x5eed_0f_9a11);
    let mut prog = PulseProgram::new(format!("random-{seed}"), String::new());
    let rand_u = |rng: &mut SimRng| {
        let ax = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0f64)];
        let ax = if ax.iter().all(|v: &f64| v.abs() < 1e-3) { [0.0, 0.0, 1.0] } else { ax };
        Unitary1::axis_angle(ax, rng.gen_range(-cfg.max_angle..cfg.max_angle)).expect("valid axis")
    };
    for _ in 0..cfg.length {
        let instr = if rng.gen::<f64>() < cfg.nonunitary_density {
            match rng.gen_range(0..4) {
                0 => Instr::ResetA,
                1 => Instr::ResetB,
                2 => Instr::MeasureA,
                _ => Instr::MeasureB,
            }
        } else {
            let kinds = if cfg.include_macros { 9 } else { 4 };
            let theta = rng.gen_range(-cfg.max_angle..cfg.max_angle);
            match rng.gen_range(0..kinds) {
                0 => Instr::RotA(rand_u(&mut rng)),
                1 => Instr::RotB(rand_u(&mut rng)),
                2 => Instr::CpAB(theta),
                3 => Instr::CpBA(theta),
                4 => Instr::Macro(Macro::FlipBSandwich),
                5 => Instr::Macro(Macro::StepB(if rng.gen() { 1 } else { -1 })),
                6 => Instr::Macro(Macro::CtrlUBA(rand_u(&mut rng))),
                7 => Instr::Macro(Macro::CtrlUAB(rand_u(&mut rng))),
                _ => Instr::Macro(if rng.gen() { Macro::SwapAB } else { Macro::SwapBA }),
            }
        };
        prog.push(instr);
    }
    prog
}
