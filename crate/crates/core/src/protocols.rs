//! Single-CU protocols.
//!
//! Every protocol is a program builder (`*_program`, the record mode) plus an
//! executing wrapper that checks preconditions on the state, builds the
//! program and runs it. Builders track how far the B sublattice has been
//! translated and always return it to where it started.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;

use crate::chain::{ChainState, QubitChain};
use crate::error::{Error, Result};
use crate::isa::{self, Instr, Macro, PulseProgram};
use crate::layout::{canonical_label, Layout};
use crate::unitary::Unitary1;
use crate::SimRng;

/// Program builder that keeps track of the B-sublattice displacement (in
/// B slots, i.e. A spacings).
#[derive(Clone, Debug)]
pub struct Emitter {
    prog: PulseProgram,
    offset: isize,
}

impl Emitter {
    pub fn new(name: &str, layout: &Layout) -> Self {
        Emitter { prog: PulseProgram::new(name, layout.fingerprint.clone()), offset: 0 }
    }

    pub fn offset(&self) -> isize {
        self.offset
    }

    pub fn len(&self) -> usize {
        self.prog.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prog.is_empty()
    }

    /// Translate B so that content originally at slot `s` sits at `s + target`.
    /// Whole units go as SHIFT_B, the remainder as STEP_B.
    pub fn goto(&mut self, target: isize) {
        let mut d = target - self.offset;
        while d >= 3 {
            self.prog.push(Instr::Macro(Macro::ShiftB(1)));
            d -= 3;
        }
        while d <= -3 {
            self.prog.push(Instr::Macro(Macro::ShiftB(-1)));
            d += 3;
        }
        while d != 0 {
            let s = d.signum();
            self.prog.push(Instr::Macro(Macro::StepB(s as i8)));
            d -= s;
        }
        self.offset = target;
    }

    pub fn op(&mut self, i: Instr) {
        self.prog.push(i);
    }

    pub fn tagged(&mut self, i: Instr, tag: &str) {
        self.prog.push_tagged(i, tag);
    }

    pub fn mac(&mut self, m: Macro) {
        self.prog.push(Instr::Macro(m));
    }

    pub fn append(&mut self, p: &PulseProgram) {
        // programs from other builders are displacement-neutral
        self.prog.append(p);
    }

    /// Returns B home and yields the program.
    pub fn finish(mut self) -> PulseProgram {
        self.goto(0);
        self.prog
    }
}

/// B slot of a physical B index.
pub fn slot(phys: usize) -> isize {
    ((phys - 1) / 2) as isize
}

/// B cells that are not definitely 0.
pub fn find_cus<S: QubitChain>(s: &S) -> Vec<usize> {
    (1..s.n()).step_by(2).filter(|&i| s.definite(i) != Some(false)).collect()
}

/// The single active CU, or the matching error.
pub fn single_cu<S: QubitChain>(s: &S) -> Result<usize> {
    match find_cus(s).as_slice() {
        [] => Err(Error::NoCuFound),
        [c] => Ok(*c),
        many => Err(Error::MultipleCusActive(many.len())),
    }
}

fn check_comp(layout: &Layout, q: usize) -> Result<()> {
    if q >= layout.n_comp {
        return Err(Error::IndexOutOfRange { idx: q, n: layout.n_comp });
    }
    Ok(())
}

fn execute<S: QubitChain>(s: &mut S, prog: PulseProgram, rng: &mut SimRng) -> Result<PulseProgram> {
    isa::run(s, &prog, rng)?;
    Ok(prog)
}

pub fn move_cu_program(layout: &Layout, delta: isize) -> PulseProgram {
    let mut p = PulseProgram::new("move_cu", layout.fingerprint.clone());
    for _ in 0..delta.unsigned_abs() {
        p.push(Instr::Macro(Macro::ShiftB(delta.signum() as i8)));
    }
    p
}

/// Moves every CU by `delta` units; the move must not run off the chain.
pub fn move_cu<S: QubitChain>(s: &mut S, layout: &Layout, delta: isize, rng: &mut SimRng) -> Result<PulseProgram> {
    let cus = find_cus(s);
    if cus.is_empty() {
        return Err(Error::NoCuFound);
    }
    for &c in &cus {
        let to = c as isize + 6 * delta;
        if to < 0 || to >= layout.n as isize {
            return Err(Error::OutOfMargins(format!("CU at {c} moved by {delta} units leaves the chain")));
        }
    }
    execute(s, move_cu_program(layout, delta), rng)
}

/// CU at B slot `cu_slot` visits qubit `q`, applies U to it and returns.
pub fn targeted_single_qubit_program(layout: &Layout, cu_slot: isize, q: usize, u: &Unitary1) -> Result<PulseProgram> {
    check_comp(layout, q)?;
    let mut e = Emitter::new("targeted_single_qubit_gate", layout);
    e.goto(3 * layout.unit_of(q) as isize - cu_slot);
    e.tagged(Instr::Macro(Macro::CtrlUAB(*u)), "U");
    Ok(e.finish())
}

pub fn targeted_single_qubit_gate<S: QubitChain>(
    s: &mut S,
    layout: &Layout,
    q: usize,
    u: &Unitary1,
    rng: &mut SimRng,
) -> Result<PulseProgram> {
    let cu = single_cu(s)?;
    let prog = targeted_single_qubit_program(layout, slot(cu), q, u)?;
    execute(s, prog, rng)
}

/// Where the control's payload lives between encode and decode.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EncodeCheckpoint {
    /// Control's position cell and the CU beside it; the first is the low bit.
    pub cu_pair: [usize; 2],
}

impl EncodeCheckpoint {
    /// `α|10⟩ − β|01⟩` in the pair basis (index = e1 + 2·e2).
    pub fn expected(&self, alpha: C64, beta: C64) -> [C64; 4] {
        let z = C64::new(0.0, 0.0);
        [z, alpha, -beta, z]
    }

    /// Fidelity of the pair with the expected state; `None` if the pair is
    /// entangled with anything else in the hybrid state.
    pub fn fidelity(&self, s: &ChainState, alpha: C64, beta: C64) -> Option<f64> {
        let got = s.reduced_pure(&self.cu_pair)?;
        let want = self.expected(alpha, beta);
        let ov: C64 = want.iter().zip(&got).map(|(w, g)| w.conj() * g).sum();
        Some(ov.norm_sqr())
    }
}

/// Controlled-U from `y` onto `x`. Returns the program and the number of
/// leading instructions forming the encode stage.
pub fn two_qubit_gate_program(
    layout: &Layout,
    cu_slot: isize,
    y: usize,
    x: usize,
    u: &Unitary1,
) -> Result<(PulseProgram, usize, EncodeCheckpoint)> {
    check_comp(layout, y)?;
    check_comp(layout, x)?;
    if x == y {
        return Err(Error::SameIndex);
    }
    let (uy, ux) = (layout.unit_of(y) as isize, layout.unit_of(x) as isize);
    let encode = [
        Instr::Macro(Macro::CtrlUAB(Unitary1::x())),
        Instr::Macro(Macro::CtrlUBA(Unitary1::x())),
        Instr::Macro(Macro::FlipBSandwich),
        Instr::RotB(Unitary1::z()),
    ];
    let mut e = Emitter::new("two_qubit_gate", layout);
    e.goto(3 * uy - cu_slot);
    for i in &encode {
        e.tagged(i.clone(), "encode");
    }
    let encode_len = e.len();
    e.goto(3 * ux - cu_slot);
    e.tagged(Instr::Macro(Macro::CtrlUAB(*u)), "controlled-U");
    e.goto(3 * uy - cu_slot);
    for i in encode.iter().rev() {
        e.tagged(isa::adjoint(i).expect("encode is unitary"), "decode");
    }
    let cp = EncodeCheckpoint { cu_pair: [layout.comp[y], layout.comp[y] + 1] };
    Ok((e.finish(), encode_len, cp))
}

pub fn two_qubit_gate<S: QubitChain>(
    s: &mut S,
    layout: &Layout,
    y: usize,
    x: usize,
    u: &Unitary1,
    rng: &mut SimRng,
) -> Result<PulseProgram> {
    let cu = single_cu(s)?;
    let (prog, _, _) = two_qubit_gate_program(layout, slot(cu), y, x, u)?;
    execute(s, prog, rng)
}

fn station_cus_present<S: QubitChain>(s: &S, layout: &Layout) -> Result<()> {
    match layout.ss.iter().find(|st| s.definite(st.cu_site) != Some(true)) {
        Some(_) => Err(Error::NoCuFound),
        None => Ok(()),
    }
}

/// Unit range of a block relative to its CU unit.
fn block_span(layout: &Layout, cu_slot: isize) -> (isize, isize) {
    let cu_unit = cu_slot.div_euclid(3);
    if layout.has_stations() {
        let st = &layout.ss[0];
        let home = (st.cu_site / 6) as isize;
        let lo = st.start_unit as isize - home;
        (lo, lo + layout.units_per_block as isize)
    } else {
        (-cu_unit, layout.n_units() as isize - cu_unit)
    }
}

/// Each block's CU tours its block and resets both A buffers of every unit.
pub fn reset_a_program(layout: &Layout, cu_slot: isize) -> PulseProgram {
    let (lo, hi) = block_span(layout, cu_slot);
    let mut e = Emitter::new("reset_a_buffers", layout);
    for r in lo..hi {
        for k in 0..2 {
            e.goto(3 * r + k);
            e.tagged(Instr::Macro(Macro::CresetBA), "A reset");
        }
    }
    e.finish()
}

pub fn reset_a_buffers<S: QubitChain>(s: &mut S, layout: &Layout, rng: &mut SimRng) -> Result<PulseProgram> {
    let cu = if layout.has_stations() {
        station_cus_present(s, layout)?;
        layout.ss[0].cu_site
    } else {
        single_cu(s)?
    };
    execute(s, reset_a_program(layout, slot(cu)), rng)
}

/// Flips A slot `x` in every block, using the block's own CU and the next
/// block's CU. Each CP exposes the A cell left of every B one; doubling with
/// `Q = exp(-iσxπ/8)` in between makes single exposures cancel while a cell
/// exposed by both CUs picks up `iσx`. A lone stray B therefore writes nothing.
fn pair_write(e: &mut Emitter, x: isize, h: isize, period: isize) {
    let q = Unitary1::exp_pauli([1.0, 0.0, 0.0], PI / 8.0).expect("unit axis");
    for _ in 0..2 {
        e.goto(x - h);
        e.op(Instr::CpAB(PI));
        e.op(Instr::RotA(q));
        e.goto(x - h - period);
        e.op(Instr::CpAB(PI));
        e.op(Instr::RotA(q.dagger()));
    }
}

/// Writes three ones (both buffers of the first beacon unit and the second
/// beacon) in every block, sweeps every B slot of the block (ascending) onto
/// the first gap of that run with PATTERN_RESET_B, then erases the run. One
/// flipped buffer can neither fake the isolated run nor trip on payload.
pub fn reset_b_program(layout: &Layout) -> Result<PulseProgram> {
    if layout.ss.len() < 2 {
        return Err(Error::InvalidArgument("B-buffer reset needs switching stations and at least two blocks".into()));
    }
    let st = &layout.ss[0];
    let h = slot(st.cu_site);
    let period = 3 * layout.units_per_block as isize;
    let base = 3 * st.start_unit as isize;
    let x1 = base + 1;
    let mut e = Emitter::new("reset_b_buffers", layout);
    for x in x1..x1 + 3 {
        pair_write(&mut e, x, h, period);
    }
    for content in base..base + period {
        if content != h {
            e.goto(x1 - content);
            e.tagged(Instr::Macro(Macro::PatternResetB), "B reset");
        }
    }
    for x in x1..x1 + 3 {
        pair_write(&mut e, x, h, period);
    }
    Ok(e.finish())
}

pub fn reset_b_buffers<S: QubitChain>(s: &mut S, layout: &Layout, rng: &mut SimRng) -> Result<PulseProgram> {
    let prog = reset_b_program(layout)?;
    station_cus_present(s, layout)?;
    execute(s, prog, rng)
}

fn check_labels(layout: &Layout) -> Result<()> {
    for (k, st) in layout.ss.iter().enumerate() {
        let want = canonical_label(k, layout.block_len, layout.concat_depth);
        if st.label != want {
            return Err(Error::NonCanonicalLabels(format!("station {k} has label {} (expected {want})", st.label)));
        }
    }
    Ok(())
}

/// Level by level: deactivate CUs whose station label reads below the level
/// (or fails parity), then let the remaining CUs rewrite the L-1 stations
/// that follow each of them. Starts from any regime at or below level 1.
pub fn hierarchical_reset_program(layout: &Layout) -> Result<PulseProgram> {
    if !layout.has_stations() {
        return Err(Error::InvalidArgument("hierarchical reset needs switching stations".into()));
    }
    check_labels(layout)?;
    let stations = layout.station_cells();
    let h = slot(layout.ss[0].cu_site);
    let l = layout.block_len;
    let mut e = Emitter::new("hierarchical_reset", layout);
    for level in 1..=layout.concat_depth {
        e.goto(0);
        e.mac(Macro::Deactivate { level, stations: stations.clone() });
        let spacing = l.pow(level as u32 - 1);
        for m in 1..l {
            for (cell, v) in layout.station_values(m * spacing) {
                // CU one slot left of the cell: CRESET_BA / CTRL_U_BA act on it
                e.goto((cell / 2) as isize - 1 - h);
                e.tagged(Instr::Macro(Macro::CresetBA), "station fix");
                if v == 1 {
                    e.tagged(Instr::Macro(Macro::CtrlUBA(Unitary1::x())), "station fix");
                }
            }
        }
    }
    Ok(e.finish())
}

pub fn hierarchical_reset<S: QubitChain>(s: &mut S, layout: &Layout, rng: &mut SimRng) -> Result<PulseProgram> {
    let prog = hierarchical_reset_program(layout)?;
    execute(s, prog, rng)
}
