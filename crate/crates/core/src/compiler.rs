//! Gate-level circuits to global pulse programs, and numerical inversion of
//! the three-CU target evolution.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use argmin::core::{CostFunction, Executor, State};
use argmin::solver::neldermead::NelderMead;
use rand::{Rng, SeedableRng};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::isa::{Instr, Macro, PulseProgram};
use crate::layout::Layout;
use crate::protocols::{self, slot};
use crate::redundant::{self, TripleCuParams};
use crate::unitary::Unitary1;

pub const SOLVER_TOL: f64 = 1e-6;
/// Starts per batch and number of batches; batches stop at the first success.
const BATCH: usize = 8;
const BATCHES: usize = 8;
const MAX_ITERS: u64 = 4000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverResult {
    pub params: TripleCuParams,
    pub residual: f64,
    pub iterations: u64,
    /// Index of the start that produced `params`.
    pub start: usize,
}

fn params_from_angles(x: &[f64], anchor: usize) -> TripleCuParams {
    let u = |i: usize| Unitary1::euler(x[3 * i], x[3 * i + 1], x[3 * i + 2]);
    TripleCuParams::new(u(0), u(1), u(2), anchor)
}

struct Objective {
    target: Unitary1,
}

impl CostFunction for Objective {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, x: &Vec<f64>) -> std::result::Result<f64, argmin::core::Error> {
        Ok(redundant::target_evolution(&params_from_angles(x, 0)).phase_distance(&self.target))
    }
}

fn start_point(k: usize) -> Vec<f64> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x5eed_0000 + k as u64);
    (0..9).map(|_| rng.gen_range(-PI..PI)).collect()
}

fn local_search(target: Unitary1, k: usize) -> (Vec<f64>, f64, u64) {
    let x0 = start_point(k);
    let mut simplex = vec![x0.clone()];
    for i in 0..9 {
        let mut v = x0.clone();
        v[i] += 0.4;
        simplex.push(v);
    }
    let run = NelderMead::new(simplex)
        .with_sd_tolerance(1e-15)
        .and_then(|nm| Executor::new(Objective { target }, nm).configure(|s| s.max_iters(MAX_ITERS)).run());
    match run {
        Ok(res) => {
            let st = res.state();
            let x = st.get_best_param().cloned().unwrap_or(x0);
            (x, st.get_best_cost(), st.get_iter())
        }
        Err(_) => (x0, f64::INFINITY, 0),
    }
}

/// Multi-start Nelder–Mead over the nine Euler angles of (U1, U2, U3).
///
/// Starts come from a fixed seed schedule and run in parallel per batch; the
/// best start (ties by index) wins, so the result is deterministic.
pub fn solve_pulse_params(target: &Unitary1) -> Result<SolverResult> {
    if !target.is_unitary(1e-9) {
        return Err(Error::NonUnitary);
    }
    let id = Unitary1::identity();
    if target.phase_distance(&id) == 0.0 {
        return Ok(SolverResult { params: TripleCuParams::new(id, id, id, 0), residual: 0.0, iterations: 0, start: 0 });
    }
    let mut best: Option<(f64, usize, Vec<f64>, u64)> = None;
    for b in 0..BATCHES {
        let found: Vec<_> = (b * BATCH..(b + 1) * BATCH)
            .into_par_iter()
            .map(|k| {
                let (x, _, it) = local_search(*target, k);
                let r = redundant::target_evolution(&params_from_angles(&x, 0)).phase_distance(target);
                (r, k, x, it)
            })
            .collect();
        for f in found {
            if best.as_ref().map_or(true, |b| (f.0, f.1) < (b.0, b.1)) {
                best = Some(f);
            }
        }
        if best.as_ref().is_some_and(|b| b.0 <= SOLVER_TOL) {
            break;
        }
    }
    let (residual, start, x, iterations) = best.expect("at least one start");
    if residual > SOLVER_TOL {
        return Err(Error::ConvergenceFailure(residual));
    }
    Ok(SolverResult { params: params_from_angles(&x, 0), residual, iterations, start })
}

/// Principal square root of a unitary up to global phase.
pub fn sqrt_unitary(u: &Unitary1) -> Unitary1 {
    let det = u.det();
    let v = u.scale(det.sqrt().inv());
    // v = cos θ · 1 − i sin θ · n·σ with tr v = 2 cos θ
    let c = (v.trace().re / 2.0).clamp(-1.0, 1.0);
    let th = c.acos();
    if th.sin().abs() < 1e-12 {
        return if c > 0.0 { Unitary1::identity() } else { Unitary1::exp_pauli([0.0, 0.0, 1.0], PI / 2.0).unwrap() };
    }
    let s = th.sin();
    let nx = -(v.m[0][1] + v.m[1][0]).im / (2.0 * s);
    let ny = (v.m[1][0] - v.m[0][1]).re / (2.0 * s);
    let nz = -(v.m[0][0] - v.m[1][1]).im / (2.0 * s);
    Unitary1::exp_pauli([nx, ny, nz], th / 2.0).unwrap()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GateSpec {
    Name(String),
    Matrix(Unitary1),
}

impl GateSpec {
    pub fn unitary(&self) -> Result<Unitary1> {
        let u = match self {
            GateSpec::Matrix(u) => *u,
            GateSpec::Name(n) => match n.to_ascii_lowercase().as_str() {
                "i" | "id" => Unitary1::identity(),
                "x" => Unitary1::x(),
                "y" => Unitary1::y(),
                "z" => Unitary1::z(),
                "h" => Unitary1::h(),
                "s" => Unitary1::phase(PI / 2.0),
                "t" => Unitary1::phase(PI / 4.0),
                _ => return Err(Error::InvalidArgument(format!("unknown gate '{n}'"))),
            },
        };
        if !u.is_unitary(1e-9) {
            return Err(Error::NonUnitary);
        }
        Ok(u)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    #[default]
    #[serde(rename = "single-CU")]
    SingleCu,
    #[serde(rename = "triple-CU")]
    TripleCu,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum CircuitOp {
    PrepareCu,
    SingleQubit {
        q: usize,
        u: GateSpec,
        #[serde(default)]
        method: Method,
    },
    TwoQubit {
        y: usize,
        x: usize,
        u: GateSpec,
    },
    BufferReset,
    CorrectionCycle,
    Measure {
        q: usize,
    },
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CircuitIR {
    pub ops: Vec<CircuitOp>,
}

impl CircuitIR {
    fn needs_three(&self) -> bool {
        self.ops.iter().any(|o| {
            matches!(o, CircuitOp::CorrectionCycle | CircuitOp::SingleQubit { method: Method::TripleCu, .. })
        })
    }

    fn needs_one(&self) -> bool {
        self.ops.iter().any(|o| {
            matches!(o, CircuitOp::TwoQubit { .. } | CircuitOp::SingleQubit { method: Method::SingleCu, .. })
        })
    }

    /// Initial chain pattern the compiled program expects.
    pub fn initial_pattern(&self) -> Result<&'static str> {
        match (self.needs_one(), self.needs_three()) {
            (true, true) => Err(Error::InvalidArgument("circuit mixes single-CU and three-CU operations".into())),
            (_, true) => Ok("three-CU"),
            _ => Ok("single-CU"),
        }
    }
}

fn check_qubit(layout: &Layout, q: usize) -> Result<()> {
    if q >= layout.n_comp {
        return Err(Error::IndexOutOfRange { idx: q, n: layout.n_comp });
    }
    Ok(())
}

fn triple_rotation(layout: &Layout, q: usize, u: &Unitary1) -> Result<PulseProgram> {
    let with_target = |mut p: TripleCuParams| {
        p.target = q;
        p
    };
    match solve_pulse_params(u) {
        Ok(r) => redundant::rotation_program(layout, &with_target(r.params)),
        Err(Error::ConvergenceFailure(_)) => {
            let r = solve_pulse_params(&sqrt_unitary(u))?;
            let half = redundant::rotation_program(layout, &with_target(r.params))?;
            let mut p = half.clone();
            p.append(&half);
            Ok(p)
        }
        Err(e) => Err(e),
    }
}

/// Concatenates the protocol programs for each op. The CU configuration is
/// implied by the ops (see [`CircuitIR::initial_pattern`]); PrepareCu emits
/// no pulses and only asserts that configuration.
pub fn compile(circuit: &CircuitIR, layout: &Layout) -> Result<PulseProgram> {
    circuit.initial_pattern()?;
    let cu_slot = slot(layout.cu_home[0]);
    let mut out = PulseProgram::new("circuit", layout.fingerprint.clone());
    for (i, op) in circuit.ops.iter().enumerate() {
        let prog = match op {
            CircuitOp::PrepareCu => continue,
            CircuitOp::SingleQubit { q, u, method } => {
                check_qubit(layout, *q)?;
                let u = u.unitary()?;
                match method {
                    Method::SingleCu => protocols::targeted_single_qubit_program(layout, cu_slot, *q, &u)?,
                    Method::TripleCu => triple_rotation(layout, *q, &u)?,
                }
            }
            CircuitOp::TwoQubit { y, x, u } => {
                protocols::two_qubit_gate_program(layout, cu_slot, *y, *x, &u.unitary()?)?.0
            }
            CircuitOp::BufferReset => {
                let mut p = PulseProgram::new("buffer_reset", layout.fingerprint.clone());
                if layout.has_stations() {
                    p.append(&protocols::reset_b_program(layout)?);
                }
                p.append(&protocols::reset_a_program(layout, cu_slot));
                p
            }
            CircuitOp::CorrectionCycle => redundant::correction_cycle_program(layout, 0)?,
            CircuitOp::Measure { q } => {
                check_qubit(layout, *q)?;
                let mut p = PulseProgram::default();
                p.push_tagged(Instr::MeasureA, &format!("measure q{q}"));
                p
            }
        };
        for mut pi in prog.instrs {
            if pi.tag.is_none() {
                pi.tag = Some(format!("op{i}"));
            }
            out.instrs.push(pi);
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ScheduleReport {
    pub counts: BTreeMap<String, usize>,
    pub total: usize,
    pub cp_pulses: usize,
    /// B displacement summed over every move, in A-spacings.
    pub transport_slots: usize,
    /// Net B displacement at the end of the program.
    pub net_offset: isize,
}

pub fn schedule_report(program: &PulseProgram) -> ScheduleReport {
    let mut r = ScheduleReport::default();
    for pi in &program.instrs {
        *r.counts.entry(pi.instr.kind().to_string()).or_default() += 1;
        r.total += 1;
        match &pi.instr {
            Instr::CpAB(_) | Instr::CpBA(_) => r.cp_pulses += 1,
            Instr::Macro(Macro::StepB(d)) => {
                r.transport_slots += d.unsigned_abs() as usize;
                r.net_offset += *d as isize;
            }
            Instr::Macro(Macro::ShiftB(d)) => {
                r.transport_slots += 3 * d.unsigned_abs() as usize;
                r.net_offset += 3 * *d as isize;
            }
            _ => {}
        }
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sqrt_squares_back() {
        for u in [Unitary1::x(), Unitary1::h(), Unitary1::phase(0.3), Unitary1::identity()] {
            let r = sqrt_unitary(&u);
            assert!((r * r).phase_distance(&u) < 1e-12);
        }
    }

    #[test]
    fn solver_identity_is_trivial() {
        let r = solve_pulse_params(&Unitary1::identity()).unwrap();
        assert_eq!(r.residual, 0.0);
        assert_eq!(r.iterations, 0);
    }

    #[test]
    fn circuit_json_shape() {
        let c: CircuitIR = serde_json::from_str(
            r#"[{"op":"prepare_cu"},{"op":"single_qubit","q":0,"u":"x"},{"op":"two_qubit","y":0,"x":1,"u":"z"},{"op":"measure","q":1}]"#,
        )
        .unwrap();
        assert_eq!(c.ops.len(), 4);
        assert_eq!(c.initial_pattern().unwrap(), "single-CU");
    }
}
