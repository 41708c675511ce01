//! Hybrid chain state: classical bits wherever possible, unentangled single-qubit
//! cells kept as local 2-vectors, and one shared register for the rest.
//!
//! Register axis order: members sorted by chain index, the lowest index is the
//! least significant bit.

use num_complex::Complex64 as C64;
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::layout::Layout;
use crate::unitary::Unitary1;
use crate::{SimRng, DETERMINISTIC_TOL};

/// Amplitude below which a basis component is dropped when demoting.
pub const DEMOTE_AMP: f64 = 1e-12;
const PERM_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum Cell {
    Classical(bool),
    /// Unentangled pure cell `(amp0, amp1)`.
    Product([C64; 2]),
    /// Axis of the shared register.
    Quantum(usize),
}

/// Common kernel interface of the hybrid state and the dense oracle.
pub trait QubitChain {
    fn n(&self) -> usize;
    fn apply_unitary1(&mut self, idx: usize, u: &Unitary1) -> Result<()>;
    fn apply_cphase(&mut self, i: usize, j: usize, theta: f64) -> Result<()>;
    fn measure_qubit(&mut self, idx: usize, rng: &mut SimRng) -> bool;
    fn reset_qubit(&mut self, idx: usize, rng: &mut SimRng) {
        if self.measure_qubit(idx, rng) {
            self.apply_unitary1(idx, &Unitary1::x()).expect("X is unitary");
        }
    }
    /// Coherent X on `t` controlled on both `c1` and `c2` being 1.
    fn toffoli(&mut self, c1: usize, c2: usize, t: usize);
    /// Basis value if the cell's outcome is deterministic (shared 1e-9 rule).
    fn definite(&self, idx: usize) -> Option<bool>;
    /// Cyclic translation of all B contents by `steps` A-spacings.
    fn translate_b(&mut self, steps: isize);
    fn add_steps(&mut self, k: u64);
    /// Post-instruction housekeeping (demotion in the hybrid state).
    fn settle(&mut self) {}
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChainState {
    pub n: usize,
    pub cells: Vec<Cell>,
    /// Chain indices of register members, ascending.
    pub members: Vec<usize>,
    pub register: Vec<C64>,
    pub global_phase: C64,
    pub step_counter: u64,
}

fn p1_of(v: &[C64; 2]) -> f64 {
    v[1].norm_sqr()
}

fn insert_bit(k: usize, r: usize, b: usize) -> usize {
    let low = k & ((1 << r) - 1);
    ((k >> r) << (r + 1)) | (b << r) | low
}

impl ChainState {
    pub fn from_bits(bits: &[u8]) -> Self {
        ChainState {
            n: bits.len(),
            cells: bits.iter().map(|&b| Cell::Classical(b != 0)).collect(),
            members: Vec::new(),
            register: vec![C64::new(1.0, 0.0)],
            global_phase: C64::new(1.0, 0.0),
            step_counter: 0,
        }
    }

    /// Named initial pattern on a layout (see [`Layout::pattern`]).
    pub fn init(layout: &Layout, pattern: &str) -> Result<Self> {
        let bits = layout.pattern(pattern)?;
        Ok(Self::from_bits(&bits))
    }

    /// Explicit bit pattern, validated against the layout's cell roles.
    pub fn init_bits(layout: &Layout, bits: &[u8]) -> Result<Self> {
        if bits.len() != layout.n {
            return Err(Error::LengthMismatch { expected: layout.n, got: bits.len() });
        }
        if let Some(i) = bits.iter().position(|&b| b > 1) {
            return Err(Error::ForbiddenBit(i));
        }
        Ok(Self::from_bits(bits))
    }

    pub fn classical_bit(&self, idx: usize) -> Option<bool> {
        match self.cells[idx] {
            Cell::Classical(b) => Some(b),
            _ => None,
        }
    }

    pub fn n_quantum(&self) -> usize {
        self.members.len()
    }

    pub fn norm(&self) -> f64 {
        self.register.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    fn check(&self, idx: usize) -> Result<()> {
        if idx >= self.n {
            return Err(Error::IndexOutOfRange { idx, n: self.n });
        }
        Ok(())
    }

    fn axis(&self, idx: usize) -> usize {
        match self.cells[idx] {
            Cell::Quantum(a) => a,
            _ => unreachable!("cell {idx} is not in the register"),
        }
    }

    fn reindex(&mut self) {
        for (a, &m) in self.members.iter().enumerate() {
            self.cells[m] = Cell::Quantum(a);
        }
    }

    /// Moves a classical or product cell into the register.
    fn promote(&mut self, idx: usize) {
        let amps = match self.cells[idx] {
            Cell::Quantum(_) => return,
            Cell::Classical(b) => {
                if b {
                    [C64::new(0.0, 0.0), C64::new(1.0, 0.0)]
                } else {
                    [C64::new(1.0, 0.0), C64::new(0.0, 0.0)]
                }
            }
            Cell::Product(v) => v,
        };
        let r = self.members.partition_point(|&m| m < idx);
        let mut out = vec![C64::new(0.0, 0.0); self.register.len() * 2];
        for (k, &a) in self.register.iter().enumerate() {
            out[insert_bit(k, r, 0)] = a * amps[0];
            out[insert_bit(k, r, 1)] = a * amps[1];
        }
        self.register = out;
        self.members.insert(r, idx);
        self.reindex();
    }

    /// Drops axis `r`, keeping the branch with value `b`, renormalised.
    fn remove_axis(&mut self, r: usize, b: usize) {
        let half = self.register.len() / 2;
        let mut out = Vec::with_capacity(half);
        for k in 0..half {
            out.push(self.register[insert_bit(k, r, b)]);
        }
        let norm = out.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm > 0.0 {
            for a in out.iter_mut() {
                *a /= norm;
            }
        }
        self.register = out;
        let idx = self.members.remove(r);
        self.cells[idx] = Cell::Classical(b == 1);
        self.reindex();
    }

    fn axis_p1(&self, r: usize) -> f64 {
        let bit = 1 << r;
        self.register.iter().enumerate().filter(|(k, _)| k & bit != 0).map(|(_, a)| a.norm_sqr()).sum()
    }

    fn reg_apply1(&mut self, r: usize, u: &Unitary1) {
        let bit = 1 << r;
        for k in 0..self.register.len() {
            if k & bit == 0 {
                let v = u.apply([self.register[k], self.register[k | bit]]);
                self.register[k] = v[0];
                self.register[k | bit] = v[1];
            }
        }
    }

    fn reg_phase_mask(&mut self, mask: usize, ph: C64) {
        for (k, a) in self.register.iter_mut().enumerate() {
            if k & mask == mask {
                *a *= ph;
            }
        }
    }

    /// Basis-definite cells become classical; a lone register member becomes
    /// a product cell.
    pub fn demote(&mut self) {
        for i in 0..self.n {
            if let Cell::Product(v) = self.cells[i] {
                let b = if v[1].norm() <= DEMOTE_AMP {
                    0
                } else if v[0].norm() <= DEMOTE_AMP {
                    1
                } else {
                    continue;
                };
                self.global_phase *= v[b] / v[b].norm();
                self.cells[i] = Cell::Classical(b == 1);
            }
        }
        let mut r = 0;
        while r < self.members.len() {
            let bit = 1 << r;
            let (mut w0, mut w1) = (0.0, 0.0);
            for (k, a) in self.register.iter().enumerate() {
                if k & bit == 0 {
                    w0 += a.norm_sqr();
                } else {
                    w1 += a.norm_sqr();
                }
            }
            let lim = DEMOTE_AMP * DEMOTE_AMP;
            if w1 <= lim {
                self.remove_axis(r, 0);
            } else if w0 <= lim {
                self.remove_axis(r, 1);
            } else {
                r += 1;
            }
        }
        if self.members.len() == 1 {
            let idx = self.members.pop().unwrap();
            self.cells[idx] = Cell::Product([self.register[0], self.register[1]]);
            self.register = vec![C64::new(1.0, 0.0)];
        }
    }

    fn p1(&self, idx: usize) -> f64 {
        match self.cells[idx] {
            Cell::Classical(b) => b as u8 as f64,
            Cell::Product(v) => p1_of(&v),
            Cell::Quantum(a) => self.axis_p1(a),
        }
    }

    /// Full 2^n amplitude vector including the global phase (n <= 24).
    pub fn to_dense(&self) -> Result<Vec<C64>> {
        if self.n > 24 {
            return Err(Error::TooLarge(self.n));
        }
        let mut base = 0usize;
        for (i, c) in self.cells.iter().enumerate() {
            if let Cell::Classical(true) = c {
                base |= 1 << i;
            }
        }
        let mut entries = vec![(base, self.global_phase)];
        for (i, c) in self.cells.iter().enumerate() {
            if let Cell::Product(v) = c {
                entries = entries
                    .into_iter()
                    .flat_map(|(x, a)| [(x, a * v[0]), (x | 1 << i, a * v[1])])
                    .collect();
            }
        }
        let mut out = vec![C64::new(0.0, 0.0); 1 << self.n];
        for (x, a) in entries {
            for (k, r) in self.register.iter().enumerate() {
                let mut y = x;
                for (ax, &m) in self.members.iter().enumerate() {
                    if k >> ax & 1 == 1 {
                        y |= 1 << m;
                    }
                }
                out[y] = a * r;
            }
        }
        Ok(out)
    }

    /// Reduced density matrix of one cell.
    pub fn cell_density(&self, idx: usize) -> [[C64; 2]; 2] {
        let z = C64::new(0.0, 0.0);
        match self.cells[idx] {
            Cell::Classical(b) => {
                let mut m = [[z; 2]; 2];
                m[b as usize][b as usize] = C64::new(1.0, 0.0);
                m
            }
            Cell::Product(v) => [[v[0] * v[0].conj(), v[0] * v[1].conj()], [v[1] * v[0].conj(), v[1] * v[1].conj()]],
            Cell::Quantum(r) => {
                let bit = 1 << r;
                let mut m = [[z; 2]; 2];
                for k in (0..self.register.len()).filter(|k| k & bit == 0) {
                    let (a0, a1) = (self.register[k], self.register[k | bit]);
                    m[0][0] += a0 * a0.conj();
                    m[0][1] += a0 * a1.conj();
                    m[1][0] += a1 * a0.conj();
                    m[1][1] += a1 * a1.conj();
                }
                m
            }
        }
    }

    /// `⟨ψ|ρ|ψ⟩` for one cell.
    pub fn cell_fidelity(&self, idx: usize, psi: &[C64; 2]) -> f64 {
        let m = self.cell_density(idx);
        let mut f = C64::new(0.0, 0.0);
        for i in 0..2 {
            for j in 0..2 {
                f += psi[i].conj() * m[i][j] * psi[j];
            }
        }
        f.re
    }

    /// Pure state of `cells` (in the given order, first = least significant),
    /// provided every other cell is classical.
    pub fn reduced_pure(&self, cells: &[usize]) -> Option<Vec<C64>> {
        let listed = |i: usize| cells.contains(&i);
        if (0..self.n).any(|i| !listed(i) && !matches!(self.cells[i], Cell::Classical(_))) {
            return None;
        }
        let pos = |i: usize| cells.iter().position(|&c| c == i).unwrap();
        let mut base = 0usize;
        for (p, &i) in cells.iter().enumerate() {
            if let Cell::Classical(true) = self.cells[i] {
                base |= 1 << p;
            }
        }
        let mut entries = vec![(base, self.global_phase)];
        for (p, &i) in cells.iter().enumerate() {
            if let Cell::Product(v) = self.cells[i] {
                entries = entries
                    .into_iter()
                    .flat_map(|(x, a)| [(x, a * v[0]), (x | 1 << p, a * v[1])])
                    .collect();
            }
        }
        let mut out = vec![C64::new(0.0, 0.0); 1 << cells.len()];
        for (x, a) in entries {
            for (k, r) in self.register.iter().enumerate() {
                let mut y = x;
                for (ax, &m) in self.members.iter().enumerate() {
                    if k >> ax & 1 == 1 {
                        y |= 1 << pos(m);
                    }
                }
                out[y] = a * r;
            }
        }
        Some(out)
    }
}

impl QubitChain for ChainState {
    fn n(&self) -> usize {
        self.n
    }

    fn apply_unitary1(&mut self, idx: usize, u: &Unitary1) -> Result<()> {
        self.check(idx)?;
        if !u.is_unitary(1e-10) {
            return Err(Error::NonUnitary);
        }
        match self.cells[idx] {
            Cell::Classical(b) => {
                if let Some((img, ph)) = u.as_permutation(PERM_TOL) {
                    let b = b as usize;
                    self.global_phase *= ph[b];
                    self.cells[idx] = Cell::Classical(img[b] == 1);
                } else {
                    let col = b as usize;
                    self.cells[idx] = Cell::Product([u.m[0][col], u.m[1][col]]);
                }
            }
            Cell::Product(v) => self.cells[idx] = Cell::Product(u.apply(v)),
            Cell::Quantum(a) => self.reg_apply1(a, u),
        }
        Ok(())
    }

    fn apply_cphase(&mut self, i: usize, j: usize, theta: f64) -> Result<()> {
        self.check(i)?;
        self.check(j)?;
        if i == j {
            return Err(Error::SameIndex);
        }
        let ph = C64::from_polar(1.0, theta);
        match (self.cells[i], self.cells[j]) {
            (Cell::Classical(false), _) | (_, Cell::Classical(false)) => {}
            (Cell::Classical(true), Cell::Classical(true)) => self.global_phase *= ph,
            (Cell::Classical(true), _) => self.apply_unitary1(j, &Unitary1::phase(theta))?,
            (_, Cell::Classical(true)) => self.apply_unitary1(i, &Unitary1::phase(theta))?,
            _ => {
                self.promote(i);
                self.promote(j);
                let mask = 1 << self.axis(i) | 1 << self.axis(j);
                self.reg_phase_mask(mask, ph);
            }
        }
        Ok(())
    }

    fn measure_qubit(&mut self, idx: usize, rng: &mut SimRng) -> bool {
        let p1 = match self.cells[idx] {
            Cell::Classical(b) => return b,
            _ => self.p1(idx),
        };
        let outcome = if p1 < DETERMINISTIC_TOL {
            false
        } else if p1 > 1.0 - DETERMINISTIC_TOL {
            true
        } else {
            rng.gen::<f64>() < p1
        };
        let b = outcome as usize;
        match self.cells[idx] {
            Cell::Product(v) => {
                self.global_phase *= v[b] / v[b].norm();
                self.cells[idx] = Cell::Classical(outcome);
            }
            Cell::Quantum(a) => {
                self.remove_axis(a, b);
                self.demote();
            }
            Cell::Classical(_) => unreachable!(),
        }
        outcome
    }

    fn toffoli(&mut self, c1: usize, c2: usize, t: usize) {
        let live: Vec<usize> = match (self.cells[c1], self.cells[c2]) {
            (Cell::Classical(false), _) | (_, Cell::Classical(false)) => return,
            (Cell::Classical(true), Cell::Classical(true)) => {
                self.apply_unitary1(t, &Unitary1::x()).expect("X");
                return;
            }
            (Cell::Classical(true), _) => vec![c2],
            (_, Cell::Classical(true)) => vec![c1],
            _ => vec![c1, c2],
        };
        for &c in &live {
            self.promote(c);
        }
        self.promote(t);
        let cmask = live.iter().fold(0usize, |m, &c| m | 1 << self.axis(c));
        let tbit = 1 << self.axis(t);
        for k in 0..self.register.len() {
            if k & cmask == cmask && k & tbit == 0 {
                self.register.swap(k, k | tbit);
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
        let map = |i: usize| -> usize {
            if i % 2 == 0 {
                i
            } else {
                let j = (i / 2) as isize;
                (2 * (j + steps).rem_euclid(nb) + 1) as usize
            }
        };
        let old = self.cells.clone();
        for (i, c) in old.into_iter().enumerate() {
            self.cells[map(i)] = c;
        }
        let moved: Vec<usize> = self.members.iter().map(|&m| map(m)).collect();
        let mut order: Vec<usize> = (0..moved.len()).collect();
        order.sort_by_key(|&a| moved[a]);
        // new_axis[old axis]
        let mut new_axis = vec![0; moved.len()];
        for (na, &oa) in order.iter().enumerate() {
            new_axis[oa] = na;
        }
        if new_axis.iter().enumerate().any(|(a, &na)| a != na) {
            let mut out = vec![C64::new(0.0, 0.0); self.register.len()];
            for (k, &a) in self.register.iter().enumerate() {
                let mut y = 0;
                for (oa, &na) in new_axis.iter().enumerate() {
                    y |= (k >> oa & 1) << na;
                }
                out[y] = a;
            }
            self.register = out;
        }
        self.members = order.iter().map(|&oa| moved[oa]).collect();
        self.reindex();
    }

    fn add_steps(&mut self, k: u64) {
        self.step_counter += k;
    }

    fn settle(&mut self) {
        self.demote();
    }
}
