//! Three redundant CUs: targeted rotations, syndrome extraction, feedback and
//! the single-error correction cycle.
//!
//! CU1, CU2, CU3 sit beside units `a`, `a+1`, `a+3` (anchor `a`). The
//! ancilla / rotation target is unit `t = a+3`. A half-sequence is, in time
//! order, `U4, CP(CU3@t), U3, CP(CU2@t), U2, CP(CU1@t), U1`, i.e. the matrix
//! `U1 Z U2 Z U3 Z U4`; it runs twice so every single-CP exposure (units
//! `t-3..t+3` except `t`) squares to identity.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::chain::{ChainState, QubitChain};
use crate::error::{Error, Result};
use crate::isa::{self, Instr, Macro, PulseProgram};
use crate::layout::Layout;
use crate::protocols::Emitter;
use crate::unitary::Unitary1;
use crate::SimRng;

pub const OFFSETS: [usize; 3] = [0, 1, 3];

/// `exp(-iσx π/8)`: the rotation whose σz-sandwiched square is σx.
pub fn u_x() -> Unitary1 {
    Unitary1::exp_pauli([1.0, 0.0, 0.0], PI / 8.0).expect("unit axis")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TripleCuParams {
    pub u1: Unitary1,
    pub u2: Unitary1,
    pub u3: Unitary1,
    /// Unit of CU1; CU2 and CU3 follow at `OFFSETS`.
    pub anchor: usize,
    /// Computational index of the target.
    pub target: usize,
}

impl TripleCuParams {
    pub fn new(u1: Unitary1, u2: Unitary1, u3: Unitary1, anchor: usize) -> Self {
        TripleCuParams { u1, u2, u3, anchor, target: anchor + 3 }
    }

    /// `U3† U2† U1†`, so that `U1 U2 U3 U4 = 1`.
    pub fn u4(&self) -> Unitary1 {
        self.u3.dagger() * self.u2.dagger() * self.u1.dagger()
    }

    /// How far `U1 U2 U3 U4` is from identity.
    pub fn spectator_residual(&self) -> f64 {
        (self.u1 * self.u2 * self.u3 * self.u4()).max_abs_diff(&Unitary1::identity())
    }
}

/// Target evolution with the CPs of the listed CUs (1-based) suppressed in
/// both halves. `missing = []` is the error-free closed form.
pub fn evolution_with_missing(p: &TripleCuParams, missing: &[usize]) -> Unitary1 {
    let z = |k: usize| if missing.contains(&k) { Unitary1::identity() } else { Unitary1::z() };
    let half = p.u1 * z(1) * p.u2 * z(2) * p.u3 * z(3) * p.u4();
    half * half
}

pub fn target_evolution(p: &TripleCuParams) -> Unitary1 {
    evolution_with_missing(p, &[])
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Fixed {
    U2,
    U3,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyndromeMode {
    /// Which of U2/U3 is the identity.
    pub fixed: Fixed,
    pub ux: Unitary1,
    pub u1: Unitary1,
}

impl SyndromeMode {
    pub fn new(fixed: Fixed) -> Self {
        SyndromeMode { fixed, ux: u_x(), u1: Unitary1::identity() }
    }

    pub fn params(&self, anchor: usize) -> TripleCuParams {
        let id = Unitary1::identity();
        let (u2, u3) = match self.fixed {
            Fixed::U2 => (id, self.ux),
            Fixed::U3 => (self.ux, id),
        };
        TripleCuParams::new(self.u1, u2, u3, anchor)
    }

    /// CUs (1-based) whose single flip this mode reports.
    pub fn flags(&self) -> [usize; 2] {
        match self.fixed {
            Fixed::U2 => [1, 2],
            Fixed::U3 => [2, 3],
        }
    }
}

/// B slot of CU `k` (1-based) at rest.
fn cu_slot(anchor: usize, k: usize) -> isize {
    3 * (anchor + OFFSETS[k - 1]) as isize
}

fn check_geometry(layout: &Layout, anchor: usize) -> Result<()> {
    if layout.has_stations() {
        return Err(Error::InvalidArgument("three-CU protocols run on plain chains".into()));
    }
    if anchor + 6 >= layout.n_comp {
        return Err(Error::InsufficientMargins(format!(
            "anchor {anchor} needs units up to {} but n_comp = {}",
            anchor + 6,
            layout.n_comp
        )));
    }
    Ok(())
}

/// Writes the three CUs at `anchor + OFFSETS` and clears every other B cell.
pub fn deploy_three_cus(s: &mut ChainState, layout: &Layout, anchor: usize) -> Result<()> {
    check_geometry(layout, anchor)?;
    let want: Vec<usize> = OFFSETS.iter().map(|o| layout.cu_home[anchor + o]).collect();
    for b in (1..s.n).step_by(2) {
        let on = want.contains(&b);
        match s.definite(b) {
            Some(v) if v != on => s.apply_unitary1(b, &Unitary1::x())?,
            Some(_) => {}
            None => return Err(Error::QuantumControlledReset(b)),
        }
    }
    s.settle();
    Ok(())
}

fn half_rotation(e: &mut Emitter, p: &TripleCuParams) {
    let t = 3 * p.target as isize;
    let steps = [(3, p.u3), (2, p.u2), (1, p.u1)];
    e.op(Instr::RotA(p.u4()));
    for (k, u) in steps {
        e.goto(t - cu_slot(p.anchor, k));
        e.tagged(Instr::CpAB(PI), &format!("CP CU{k}"));
        e.op(Instr::RotA(u));
    }
}

pub fn rotation_program(layout: &Layout, p: &TripleCuParams) -> Result<PulseProgram> {
    check_geometry(layout, p.anchor)?;
    if p.target < 3 || p.target + 3 >= layout.n_comp {
        return Err(Error::OutOfMargins(format!("target {} too close to the chain end", p.target)));
    }
    let mut e = Emitter::new("targeted_rotation_3cu", layout);
    half_rotation(&mut e, p);
    half_rotation(&mut e, p);
    Ok(e.finish())
}

/// Number of CPs each computational unit receives in one half-sequence.
pub fn exposure_census(layout: &Layout, p: &TripleCuParams) -> Vec<usize> {
    let mut count = vec![0; layout.n_comp];
    let t = p.target as isize;
    for k in [3, 2, 1] {
        let shift = t - (p.anchor + OFFSETS[k - 1]) as isize;
        for o in OFFSETS {
            let u = (p.anchor + o) as isize + shift;
            if (0..layout.n_comp as isize).contains(&u) {
                count[u as usize] += 1;
            }
        }
    }
    count
}

fn three_cus_present(s: &ChainState, layout: &Layout, anchor: usize) -> Result<()> {
    let on = (1..s.n).step_by(2).filter(|&b| s.definite(b) != Some(false)).count();
    let homes = OFFSETS.iter().filter(|o| s.definite(layout.cu_home[anchor + *o]) == Some(true)).count();
    if on == 0 || homes + 1 < OFFSETS.len() || on > homes {
        return Err(Error::InvalidArgument("three CUs are not deployed".into()));
    }
    Ok(())
}

pub fn targeted_rotation_3cu(s: &mut ChainState, layout: &Layout, p: &TripleCuParams, rng: &mut SimRng) -> Result<PulseProgram> {
    let prog = rotation_program(layout, p)?;
    three_cus_present(s, layout, p.anchor)?;
    isa::run(s, &prog, rng)?;
    Ok(prog)
}

/// Runs the mode's rotation on the ancilla and reads it back.
pub fn extract_syndrome(
    s: &mut ChainState,
    layout: &Layout,
    mode: &SyndromeMode,
    anchor: usize,
    rng: &mut SimRng,
) -> Result<bool> {
    let p = mode.params(anchor);
    let cell = layout.comp[p.target];
    if s.classical_bit(cell) != Some(false) {
        return Err(Error::AncillaNotZero);
    }
    targeted_rotation_3cu(s, layout, &p, rng)?;
    s.classical_bit(cell).ok_or_else(|| Error::InvalidArgument("ancilla left non-classical".into()))
}

/// Marker cell right of the ancilla ← marker ⊕ (CU_x ∧ CU_y).
fn marker_toggle(e: &mut Emitter, anchor: usize, ctrl: [usize; 2], q: Unitary1) {
    let h = 3 * (anchor + 3) as isize + 1;
    for _ in 0..2 {
        e.goto(h - cu_slot(anchor, ctrl[0]));
        e.op(Instr::CpAB(PI));
        e.op(Instr::RotA(q));
        e.goto(h - cu_slot(anchor, ctrl[1]));
        e.op(Instr::CpAB(PI));
        e.op(Instr::RotA(q.dagger()));
    }
}

/// CU `c` ^= ancilla ∧ (both other CUs), then the ancilla is reset.
pub fn feedback_program(layout: &Layout, anchor: usize, c: usize) -> Result<PulseProgram> {
    check_geometry(layout, anchor)?;
    if !(1..=3).contains(&c) {
        return Err(Error::InvalidArgument(format!("CU index {c} not in 1..=3")));
    }
    let ctrl: Vec<usize> = (1..=3).filter(|&k| k != c).collect();
    let ctrl = [ctrl[0], ctrl[1]];
    let t = 3 * (anchor + 3) as isize;
    let mut e = Emitter::new("feedback_correct", layout);
    marker_toggle(&mut e, anchor, ctrl, u_x());
    e.goto(t - cu_slot(anchor, c));
    e.tagged(Instr::Macro(Macro::FlipBSandwich), &format!("feed CU{c}"));
    marker_toggle(&mut e, anchor, ctrl, u_x().dagger());
    // clear the ancilla with CU1, then with CU3 in case CU1 is missing
    for k in [1, 3] {
        e.goto(t - 1 - cu_slot(anchor, k));
        e.tagged(Instr::Macro(Macro::CresetBA), "ancilla reset");
    }
    Ok(e.finish())
}

pub fn feedback_correct(s: &mut ChainState, layout: &Layout, anchor: usize, c: usize, rng: &mut SimRng) -> Result<PulseProgram> {
    let prog = feedback_program(layout, anchor, c)?;
    isa::run(s, &prog, rng)?;
    Ok(prog)
}

/// Units whose computational cell the cycle overwrites (ancilla and the
/// cells the non-aligned CUs reset); payload must live elsewhere.
pub fn reserved_units(anchor: usize) -> Vec<usize> {
    let t = anchor + 3;
    let mut v = vec![t - 3, t - 2, t, t + 1, t + 3];
    v.sort_unstable();
    v
}

/// Per-CU (mode, feedback target) schedule.
pub fn cycle_schedule() -> [(Fixed, usize); 3] {
    [(Fixed::U2, 1), (Fixed::U3, 2), (Fixed::U3, 3)]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrectionReport {
    pub syndromes: Vec<bool>,
    /// 1-based CU whose bit the feedback changed.
    pub corrected: Option<usize>,
    pub final_cus: [bool; 3],
    pub ancilla_final: bool,
}

pub fn correction_cycle_program(layout: &Layout, anchor: usize) -> Result<PulseProgram> {
    let mut p = PulseProgram::new("correction_cycle", layout.fingerprint.clone());
    for (fixed, c) in cycle_schedule() {
        p.append(&rotation_program(layout, &SyndromeMode::new(fixed).params(anchor))?);
        p.append(&feedback_program(layout, anchor, c)?);
    }
    Ok(p)
}

fn cu_bits(s: &ChainState, layout: &Layout, anchor: usize) -> [bool; 3] {
    let b = |k: usize| s.classical_bit(layout.cu_home[anchor + OFFSETS[k]]) == Some(true);
    [b(0), b(1), b(2)]
}

pub fn correction_cycle(s: &mut ChainState, layout: &Layout, anchor: usize, rng: &mut SimRng) -> Result<CorrectionReport> {
    check_geometry(layout, anchor)?;
    let anc = layout.comp[anchor + 3];
    let mut syndromes = Vec::new();
    let mut corrected = None;
    for (fixed, c) in cycle_schedule() {
        let p = SyndromeMode::new(fixed).params(anchor);
        isa::run(s, &rotation_program(layout, &p)?, rng)?;
        syndromes.push(s.classical_bit(anc) == Some(true));
        let before = cu_bits(s, layout, anchor);
        feedback_correct(s, layout, anchor, c, rng)?;
        if cu_bits(s, layout, anchor) != before && corrected.is_none() {
            corrected = Some(c);
        }
    }
    Ok(CorrectionReport {
        syndromes,
        corrected,
        final_cus: cu_bits(s, layout, anchor),
        ancilla_final: s.classical_bit(anc) != Some(false),
    })
}
