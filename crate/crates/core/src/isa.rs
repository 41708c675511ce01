//! Global pulse instructions, macro expansion and execution.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::chain::QubitChain;
use crate::error::{Error, Result};
use crate::unitary::Unitary1;
use crate::SimRng;

/// Cells a DEACTIVATE pulse reads and the CU site it may clear.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StationCells {
    pub label_cells: Vec<usize>,
    /// Even-parity cell over the label; a word failing the check counts as
    /// below every level.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parity_cell: Option<usize>,
    pub cu_site: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Macro {
    /// A(2k) controls X on B(2k+1).
    CnotAB,
    /// A(2k+2) controls X on B(2k+1).
    CnotBA,
    SwapAB,
    SwapBA,
    /// Translate the B sublattice by one computational unit (three A-spacings).
    ShiftB(i8),
    /// Translate the B sublattice by one A-spacing.
    StepB(i8),
    /// Every B controls U on its right A partner.
    CtrlUBA(Unitary1),
    /// Every B controls U on its left A partner.
    CtrlUAB(Unitary1),
    FlipBSandwich,
    /// Every classical-1 B resets its right A partner.
    CresetBA,
    /// Every B whose surrounding A cells read `0 [1] B 1 1 0` — the B sits
    /// after the first of an isolated run of exactly three ones — is reset.
    PatternResetB,
    /// Clears the CU site of every listed station whose label reads below `level`.
    Deactivate { level: usize, stations: Vec<StationCells> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Instr {
    RotA(Unitary1),
    RotB(Unitary1),
    CpAB(f64),
    CpBA(f64),
    ResetA,
    ResetB,
    MeasureA,
    MeasureB,
    Macro(Macro),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PulseInstruction {
    pub instr: Instr,
    pub tag: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct PulseProgram {
    pub name: String,
    pub fingerprint: String,
    pub instrs: Vec<PulseInstruction>,
}

impl PulseProgram {
    pub fn new(name: impl Into<String>, fingerprint: impl Into<String>) -> Self {
        PulseProgram { name: name.into(), fingerprint: fingerprint.into(), instrs: Vec::new() }
    }

    pub fn push(&mut self, instr: Instr) {
        self.instrs.push(PulseInstruction { instr, tag: None });
    }

    pub fn push_tagged(&mut self, instr: Instr, tag: &str) {
        self.instrs.push(PulseInstruction { instr, tag: Some(tag.to_string()) });
    }

    pub fn append(&mut self, other: &PulseProgram) {
        self.instrs.extend(other.instrs.iter().cloned());
    }

    pub fn len(&self) -> usize {
        self.instrs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instrs.is_empty()
    }

    /// The inverse program, if every instruction is unitary.
    pub fn adjoint(&self) -> Option<PulseProgram> {
        let mut p = PulseProgram::new(format!("{}-adjoint", self.name), self.fingerprint.clone());
        for pi in self.instrs.iter().rev() {
            p.instrs.push(PulseInstruction { instr: adjoint(&pi.instr)?, tag: pi.tag.clone() });
        }
        Some(p)
    }
}

impl Macro {
    pub fn name(&self) -> &'static str {
        match self {
            Macro::CnotAB => "CNOT_AB",
            Macro::CnotBA => "CNOT_BA",
            Macro::SwapAB => "SWAP_AB",
            Macro::SwapBA => "SWAP_BA",
            Macro::ShiftB(_) => "SHIFT_B",
            Macro::StepB(_) => "STEP_B",
            Macro::CtrlUBA(_) => "CTRL_U_BA",
            Macro::CtrlUAB(_) => "CTRL_U_AB",
            Macro::FlipBSandwich => "FLIP_B_SANDWICH",
            Macro::CresetBA => "CRESET_BA",
            Macro::PatternResetB => "PATTERN_RESET_B",
            Macro::Deactivate { .. } => "DEACTIVATE",
        }
    }
}

impl Instr {
    /// Short kind name used by reports and the file format.
    pub fn kind(&self) -> &'static str {
        match self {
            Instr::RotA(_) => "ROT_A",
            Instr::RotB(_) => "ROT_B",
            Instr::CpAB(_) => "CP_AB",
            Instr::CpBA(_) => "CP_BA",
            Instr::ResetA => "RESET_A",
            Instr::ResetB => "RESET_B",
            Instr::MeasureA => "MEASURE_A",
            Instr::MeasureB => "MEASURE_B",
            Instr::Macro(m) => m.name(),
        }
    }
}

pub fn adjoint(i: &Instr) -> Option<Instr> {
    Some(match i {
        Instr::RotA(u) => Instr::RotA(u.dagger()),
        Instr::RotB(u) => Instr::RotB(u.dagger()),
        Instr::CpAB(t) => Instr::CpAB(-t),
        Instr::CpBA(t) => Instr::CpBA(-t),
        Instr::Macro(m) => Instr::Macro(match m {
            Macro::ShiftB(d) => Macro::ShiftB(-d),
            Macro::StepB(d) => Macro::StepB(-d),
            Macro::CtrlUBA(u) => Macro::CtrlUBA(u.dagger()),
            Macro::CtrlUAB(u) => Macro::CtrlUAB(u.dagger()),
            Macro::CnotAB | Macro::CnotBA | Macro::FlipBSandwich => m.clone(),
            // the CNOT sequence reversed
            Macro::SwapAB | Macro::SwapBA => m.clone(),
            Macro::CresetBA | Macro::PatternResetB | Macro::Deactivate { .. } => return None,
        }),
        Instr::ResetA | Instr::ResetB | Instr::MeasureA | Instr::MeasureB => return None,
    })
}

/// ABC form of a controlled-U built from two CP(pi) pulses, in time order:
/// rotations `[H.C, H.B.H, A.H]` and the control phase `alpha`.
fn abc(u: &Unitary1) -> ([Unitary1; 3], f64) {
    let (alpha, beta, gamma, delta) = u.zyz();
    let a = Unitary1::rz(beta) * Unitary1::ry(gamma / 2.0);
    let b = Unitary1::ry(-gamma / 2.0) * Unitary1::rz(-(delta + beta) / 2.0);
    let c = Unitary1::rz((delta - beta) / 2.0);
    let h = Unitary1::h();
    ([h * c, h * b * h, a * h], alpha)
}

fn ctrl_u(u: &Unitary1, cp: fn(f64) -> Instr) -> Vec<Instr> {
    let ([r1, r2, r3], alpha) = abc(u);
    vec![
        Instr::RotA(r1),
        cp(PI),
        Instr::RotA(r2),
        cp(PI),
        Instr::RotA(r3),
        Instr::RotB(Unitary1::phase(alpha)),
    ]
}

/// Primitive expansion, or `None` for macros with native semantics.
pub fn expand_macro(m: &Macro) -> Option<Vec<Instr>> {
    let h = Unitary1::h();
    let cnot_ab = vec![Instr::RotB(h), Instr::CpAB(PI), Instr::RotB(h)];
    let cnot_ba = vec![Instr::RotB(h), Instr::CpBA(PI), Instr::RotB(h)];
    Some(match m {
        Macro::CnotAB => cnot_ab,
        Macro::CnotBA => cnot_ba,
        Macro::SwapAB => {
            let mut v = cnot_ab.clone();
            v.extend([Instr::RotA(h), Instr::CpAB(PI), Instr::RotA(h)]);
            v.extend(cnot_ab);
            v
        }
        Macro::SwapBA => {
            let mut v = cnot_ba.clone();
            v.extend([Instr::RotA(h), Instr::CpBA(PI), Instr::RotA(h)]);
            v.extend(cnot_ba);
            v
        }
        Macro::CtrlUBA(u) => ctrl_u(u, Instr::CpBA),
        Macro::CtrlUAB(u) => ctrl_u(u, Instr::CpAB),
        Macro::ShiftB(_)
        | Macro::StepB(_)
        | Macro::FlipBSandwich
        | Macro::CresetBA
        | Macro::PatternResetB
        | Macro::Deactivate { .. } => return None,
    })
}

fn exec_native<S: QubitChain>(s: &mut S, m: &Macro, rng: &mut SimRng) -> Result<()> {
    let n = s.n();
    match m {
        Macro::ShiftB(d) => s.translate_b(3 * *d as isize),
        Macro::StepB(d) => s.translate_b(*d as isize),
        Macro::FlipBSandwich => {
            for j in (1..n.saturating_sub(1)).step_by(2) {
                s.toffoli(j - 1, j + 1, j);
            }
        }
        Macro::CresetBA => {
            let mut fire = Vec::new();
            for j in (1..n).step_by(2) {
                match s.definite(j) {
                    Some(true) if j + 1 < n => fire.push(j + 1),
                    Some(_) => {}
                    None => return Err(Error::QuantumControlledReset(j)),
                }
            }
            for t in fire {
                s.reset_qubit(t, rng);
            }
        }
        Macro::PatternResetB => {
            const WANT: [bool; 5] = [false, true, true, true, false];
            let mut fire = Vec::new();
            for b in (1..n).step_by(2) {
                if s.definite(b) == Some(false) {
                    continue;
                }
                // A cells b-3, b-1, b+1, b+3, b+5; off-chain cells read 0
                let window = (0..5).map(|k| {
                    let a = b as isize - 3 + 2 * k as isize;
                    if a < 0 || a >= n as isize { Some(false) } else { s.definite(a as usize) }
                });
                let mut exact = true;
                let mut mismatch = false;
                for (w, want) in window.zip(WANT) {
                    match w {
                        Some(v) if v != want => mismatch = true,
                        Some(_) => {}
                        None => exact = false,
                    }
                }
                if mismatch {
                    continue;
                }
                if !exact || s.definite(b).is_none() {
                    return Err(Error::QuantumControlledReset(b));
                }
                fire.push(b);
            }
            for t in fire {
                s.reset_qubit(t, rng);
            }
        }
        Macro::Deactivate { level, stations } => {
            let mut fire = Vec::new();
            for st in stations {
                let mut label = 0usize;
                let mut ones = 0;
                for (k, &c) in st.label_cells.iter().chain(&st.parity_cell).enumerate() {
                    match s.definite(c) {
                        Some(b) => {
                            label |= (b as usize) << k;
                            ones += b as u32;
                        }
                        None => return Err(Error::QuantumControlledReset(c)),
                    }
                }
                label &= (1 << st.label_cells.len()) - 1;
                let valid = st.parity_cell.is_none() || ones % 2 == 0;
                if !valid || label < *level {
                    fire.push(st.cu_site);
                }
            }
            for t in fire {
                if t >= n {
                    return Err(Error::IndexOutOfRange { idx: t, n });
                }
                s.reset_qubit(t, rng);
            }
        }
        _ => unreachable!("macro has an expansion"),
    }
    s.add_steps(1);
    Ok(())
}

fn exec_inner<S: QubitChain>(s: &mut S, instr: &Instr, rng: &mut SimRng) -> Result<Option<Vec<bool>>> {
    let n = s.n();
    match instr {
        Instr::RotA(u) | Instr::RotB(u) => {
            let start = if matches!(instr, Instr::RotA(_)) { 0 } else { 1 };
            for i in (start..n).step_by(2) {
                s.apply_unitary1(i, u)?;
            }
        }
        Instr::CpAB(t) | Instr::CpBA(t) => {
            if !(*t > -2.0 * PI && *t <= 2.0 * PI) {
                return Err(Error::InvalidArgument(format!("theta {t} outside (-2pi, 2pi]")));
            }
            let start = if matches!(instr, Instr::CpAB(_)) { 0 } else { 1 };
            for i in (start..n.saturating_sub(1)).step_by(2) {
                s.apply_cphase(i, i + 1, *t)?;
            }
        }
        Instr::ResetA | Instr::ResetB => {
            let start = if matches!(instr, Instr::ResetA) { 0 } else { 1 };
            for i in (start..n).step_by(2) {
                s.reset_qubit(i, rng);
            }
        }
        Instr::MeasureA | Instr::MeasureB => {
            let start = if matches!(instr, Instr::MeasureA) { 0 } else { 1 };
            let out = (start..n).step_by(2).map(|i| s.measure_qubit(i, rng)).collect();
            s.add_steps(1);
            return Ok(Some(out));
        }
        Instr::Macro(m) => {
            match expand_macro(m) {
                Some(seq) => {
                    for i in &seq {
                        exec_inner(s, i, rng)?;
                    }
                }
                None => exec_native(s, m, rng)?,
            }
            return Ok(None);
        }
    }
    s.add_steps(1);
    Ok(None)
}

/// Executes one instruction; MEASURE returns the sublattice outcomes in
/// ascending index.
pub fn execute<S: QubitChain>(s: &mut S, instr: &Instr, rng: &mut SimRng) -> Result<Option<Vec<bool>>> {
    let out = exec_inner(s, instr, rng)?;
    s.settle();
    Ok(out)
}

/// Runs a whole program, collecting measurement records.
pub fn run<S: QubitChain>(s: &mut S, program: &PulseProgram, rng: &mut SimRng) -> Result<Vec<Vec<bool>>> {
    let mut outcomes = Vec::new();
    for pi in &program.instrs {
        if let Some(o) = execute(s, &pi.instr, rng)? {
            outcomes.push(o);
        }
    }
    Ok(outcomes)
}

/// Fully expanded primitive/native list (natives kept as macros).
pub fn flatten(program: &PulseProgram) -> Vec<Instr> {
    fn go(i: &Instr, out: &mut Vec<Instr>) {
        match i {
            Instr::Macro(m) => match expand_macro(m) {
                Some(seq) => seq.iter().for_each(|x| go(x, out)),
                None => out.push(i.clone()),
            },
            _ => out.push(i.clone()),
        }
    }
    let mut out = Vec::new();
    program.instrs.iter().for_each(|pi| go(&pi.instr, &mut out));
    out
}
