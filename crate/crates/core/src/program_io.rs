//! JSON-lines pulse programs.
//!
//! The first line is a header `{"op":"PROGRAM","name":..,"fingerprint":..}`;
//! every further line is one instruction. Floats are written with 17
//! significant digits so that parsing restores them bit-exactly.
//! `SHIFT_B` with `dir=+1` moves B contents toward higher indices.

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::isa::{Instr, Macro, PulseInstruction, PulseProgram, StationCells};
use crate::layout::Layout;
use crate::unitary::Unitary1;
use num_complex::Complex64 as C64;

fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        "null".into()
    }
}

fn unitary_json(u: &Unitary1) -> String {
    let rows: Vec<String> =
        u.m.iter().flatten().map(|z| format!("[{},{}]", num(z.re), num(z.im))).collect();
    format!("{{\"rows\":[{}]}}", rows.join(","))
}

fn line(op: &str, fields: &[(&str, String)], tag: &Option<String>) -> String {
    let mut parts = vec![format!("\"op\":{}", json!(op))];
    for (k, v) in fields {
        parts.push(format!("\"{k}\":{v}"));
    }
    if let Some(t) = tag {
        parts.push(format!("\"tag\":{}", json!(t)));
    }
    format!("{{{}}}", parts.join(","))
}

fn macro_line(m: &Macro, tag: &Option<String>) -> String {
    let args = match m {
        Macro::ShiftB(d) | Macro::StepB(d) => format!("{{\"dir\":{d}}}"),
        Macro::CtrlUBA(u) | Macro::CtrlUAB(u) => format!("{{\"u\":{}}}", unitary_json(u)),
        Macro::Deactivate { level, stations } => {
            format!("{{\"level\":{level},\"stations\":{}}}", serde_json::to_string(stations).expect("plain data"))
        }
        _ => "{}".into(),
    };
    line("MACRO", &[("macro", json!(m.name()).to_string()), ("args", args)], tag)
}

pub fn serialize(p: &PulseProgram) -> String {
    let mut out = String::new();
    out.push_str(&json!({"op": "PROGRAM", "name": p.name, "fingerprint": p.fingerprint}).to_string());
    out.push('\n');
    for pi in &p.instrs {
        let t = &pi.tag;
        let s = match &pi.instr {
            Instr::RotA(u) => line("ROT_A", &[("u", unitary_json(u))], t),
            Instr::RotB(u) => line("ROT_B", &[("u", unitary_json(u))], t),
            Instr::CpAB(th) => line("CP_AB", &[("theta", num(*th))], t),
            Instr::CpBA(th) => line("CP_BA", &[("theta", num(*th))], t),
            Instr::Macro(m) => macro_line(m, t),
            other => line(other.kind(), &[], t),
        };
        out.push_str(&s);
        out.push('\n');
    }
    out
}

fn perr(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

fn get_f64(v: &Value, line: usize, what: &str) -> Result<f64> {
    v.as_f64().ok_or_else(|| perr(line, format!("{what} must be a number")))
}

fn parse_unitary(v: Option<&Value>, ln: usize) -> Result<Unitary1> {
    let v = v.ok_or_else(|| perr(ln, "missing `u`"))?;
    if let Some(rows) = v.get("rows") {
        let rows = rows.as_array().filter(|r| r.len() == 4).ok_or_else(|| perr(ln, "`rows` needs 4 [re,im] pairs"))?;
        let mut m = [[C64::new(0.0, 0.0); 2]; 2];
        for (k, z) in rows.iter().enumerate() {
            let pair = z.as_array().filter(|p| p.len() == 2).ok_or_else(|| perr(ln, "entry must be [re,im]"))?;
            m[k / 2][k % 2] = C64::new(get_f64(&pair[0], ln, "re")?, get_f64(&pair[1], ln, "im")?);
        }
        return Unitary1::from_rows(m).map_err(|e| perr(ln, e.to_string()));
    }
    let axis = v
        .get("axis")
        .and_then(Value::as_array)
        .filter(|a| a.len() == 3)
        .ok_or_else(|| perr(ln, "`u` needs `rows` or `axis`+`angle`"))?;
    let ax = [get_f64(&axis[0], ln, "axis")?, get_f64(&axis[1], ln, "axis")?, get_f64(&axis[2], ln, "axis")?];
    let angle = get_f64(v.get("angle").unwrap_or(&Value::Null), ln, "angle")?;
    Unitary1::axis_angle(ax, angle).map_err(|e| perr(ln, e.to_string()))
}

fn parse_dir(args: &Value, ln: usize) -> Result<i8> {
    match args.get("dir").and_then(Value::as_i64) {
        Some(1) => Ok(1),
        Some(-1) => Ok(-1),
        _ => Err(perr(ln, "`dir` must be +1 or -1")),
    }
}

fn parse_macro(v: &Value, ln: usize) -> Result<Macro> {
    let name = v.get("macro").and_then(Value::as_str).ok_or_else(|| perr(ln, "missing `macro`"))?;
    let empty = json!({});
    let args = v.get("args").unwrap_or(&empty);
    Ok(match name {
        "CNOT_AB" => Macro::CnotAB,
        "CNOT_BA" => Macro::CnotBA,
        "SWAP_AB" => Macro::SwapAB,
        "SWAP_BA" => Macro::SwapBA,
        "SHIFT_B" => Macro::ShiftB(parse_dir(args, ln)?),
        "STEP_B" => Macro::StepB(parse_dir(args, ln)?),
        "CTRL_U_BA" => Macro::CtrlUBA(parse_unitary(args.get("u"), ln)?),
        "CTRL_U_AB" => Macro::CtrlUAB(parse_unitary(args.get("u"), ln)?),
        "FLIP_B_SANDWICH" => Macro::FlipBSandwich,
        "CRESET_BA" => Macro::CresetBA,
        "PATTERN_RESET_B" => Macro::PatternResetB,
        "DEACTIVATE" => {
            let level = args.get("level").and_then(Value::as_u64).ok_or_else(|| perr(ln, "missing `level`"))?;
            let stations: Vec<StationCells> = serde_json::from_value(args.get("stations").cloned().unwrap_or(Value::Null))
                .map_err(|e| perr(ln, e.to_string()))?;
            Macro::Deactivate { level: level as usize, stations }
        }
        other => return Err(perr(ln, format!("unknown macro `{other}`"))),
    })
}

fn parse_line(v: &Value, ln: usize) -> Result<Instr> {
    let op = v.get("op").and_then(Value::as_str).ok_or_else(|| perr(ln, "missing `op`"))?;
    let theta = || -> Result<f64> { get_f64(v.get("theta").unwrap_or(&Value::Null), ln, "theta") };
    Ok(match op {
        "ROT_A" => Instr::RotA(parse_unitary(v.get("u"), ln)?),
        "ROT_B" => Instr::RotB(parse_unitary(v.get("u"), ln)?),
        "CP_AB" => Instr::CpAB(theta()?),
        "CP_BA" => Instr::CpBA(theta()?),
        "RESET_A" => Instr::ResetA,
        "RESET_B" => Instr::ResetB,
        "MEASURE_A" => Instr::MeasureA,
        "MEASURE_B" => Instr::MeasureB,
        "MACRO" => Instr::Macro(parse_macro(v, ln)?),
        other => return Err(perr(ln, format!("unknown op `{other}`"))),
    })
}

/// Parses JSON-lines text; errors carry 1-based line numbers.
pub fn parse(text: &str) -> Result<PulseProgram> {
    let mut prog = PulseProgram::default();
    for (i, raw) in text.lines().enumerate() {
        let ln = i + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let v: Value = serde_json::from_str(raw).map_err(|e| perr(ln, e.to_string()))?;
        if v.get("op").and_then(Value::as_str) == Some("PROGRAM") {
            prog.name = v.get("name").and_then(Value::as_str).unwrap_or("").to_string();
            prog.fingerprint = v.get("fingerprint").and_then(Value::as_str).unwrap_or("").to_string();
            continue;
        }
        let instr = parse_line(&v, ln)?;
        let tag = v.get("tag").and_then(Value::as_str).map(str::to_string);
        prog.instrs.push(PulseInstruction { instr, tag });
    }
    Ok(prog)
}

/// Fingerprint check; `Some(warning)` when the program was recorded for a
/// different layout.
pub fn check_fingerprint(p: &PulseProgram, layout: &Layout) -> Option<Error> {
    (p.fingerprint != layout.fingerprint).then(|| Error::FingerprintMismatch {
        program: p.fingerprint.clone(),
        layout: layout.fingerprint.clone(),
    })
}
