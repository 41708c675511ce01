use std::fs;
use std::path::{Path, PathBuf};

use globalctl::compiler::{self, CircuitIR, GateSpec};
use globalctl::dense::{self, RandomProgramConfig};
use globalctl::layout::build_layout;
use globalctl::noise::{self, ErrorModel, McConfig, Mode, SweepRow, Timing};
use globalctl::{isa, program_io, rng_from_seed, ChainState, DenseState, Layout, LayoutConfig, Unitary1};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::{demos, CliError, Cmd, Outcome};

pub type CliResult<T> = std::result::Result<T, CliError>;

pub fn name(c: &Cmd) -> &'static str {
    match c {
        Cmd::Simulate { .. } => "simulate",
        Cmd::Compile { .. } => "compile",
        Cmd::Demo { .. } => "demo",
        Cmd::Mc { .. } => "mc",
        Cmd::Verify { .. } => "verify",
        Cmd::Solve { .. } => "solve",
    }
}

pub fn run(c: Cmd) -> CliResult<Outcome> {
    match c {
        Cmd::Simulate { layout, program, seed, init, out } => simulate(&layout, &program, seed, &init, &out),
        Cmd::Compile { circuit, layout, out } => compile(&circuit, &layout, &out),
        Cmd::Demo { name, out, seed } => demos::run(&name, &out, seed),
        Cmd::Mc { config, trials, out } => mc(&config, trials, &out),
        Cmd::Verify { n, programs, seed, out } => verify(n, programs, seed, out.as_deref()),
        Cmd::Solve { target, out } => solve(&target, out.as_deref()),
    }
}

pub fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::new("Io", format!("{}: {e}", path.display())))
}

pub fn write(path: &Path, text: &str) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::new("Io", format!("{}: {e}", dir.display())))?;
    }
    fs::write(path, text).map_err(|e| CliError::new("Io", format!("{}: {e}", path.display())))
}

pub fn write_json<T: Serialize>(path: &Path, v: &T) -> CliResult<()> {
    write(path, &(serde_json::to_string_pretty(v).expect("serializable") + "\n"))
}

fn parse_json<T: for<'de> Deserialize<'de>>(text: &str, what: &str) -> CliResult<T> {
    serde_json::from_str(text).map_err(|e| CliError::new("Parse", format!("{what}: line {}: {e}", e.line())))
}

/// A full layout (with fingerprint) or a layout config to build.
fn load_layout(path: &Path) -> CliResult<Layout> {
    let text = read(path)?;
    let v: Value = parse_json(&text, "layout")?;
    if v.get("fingerprint").is_some() {
        Ok(Layout::from_json(&text)?)
    } else {
        Ok(build_layout(&parse_json::<LayoutConfig>(&text, "layout")?)?)
    }
}

fn simulate(layout: &Path, program: &Path, seed: u64, init: &str, out: &Path) -> CliResult<Outcome> {
    let lay = load_layout(layout)?;
    let prog = program_io::parse(&read(program)?)?;
    if let Some(e) = program_io::check_fingerprint(&prog, &lay) {
        return Err(e.into());
    }
    let mut s = ChainState::init(&lay, init)?;
    let outcomes = isa::run(&mut s, &prog, &mut rng_from_seed(seed))?;
    let bits: Vec<Option<u8>> = (0..s.n).map(|i| s.classical_bit(i).map(u8::from)).collect();
    let report = json!({
        "n": s.n,
        "classical": bits,
        "n_quantum": s.n_quantum(),
        "norm": s.norm(),
        "outcomes": outcomes,
        "instructions": prog.len(),
    });
    write_json(out, &report)?;
    Ok(Outcome {
        config: json!({ "layout": layout, "program": program, "init": init }),
        seeds: vec![seed],
        outputs: vec![out.to_path_buf()],
        summary: json!({ "n_quantum": s.n_quantum(), "measurements": outcomes.len() }),
    })
}

fn compile(circuit: &Path, layout: &Path, out: &Path) -> CliResult<Outcome> {
    let lay = load_layout(layout)?;
    let c: CircuitIR = parse_json(&read(circuit)?, "circuit")?;
    let prog = compiler::compile(&c, &lay)?;
    write(out, &program_io::serialize(&prog))?;
    let report = compiler::schedule_report(&prog);
    Ok(Outcome {
        config: json!({ "circuit": circuit, "layout": layout, "ops": c.ops.len() }),
        seeds: vec![],
        outputs: vec![out.to_path_buf()],
        summary: json!({ "initial_pattern": c.initial_pattern()?, "schedule": report }),
    })
}

#[derive(Debug, Serialize, Deserialize)]
struct SweepConfig {
    #[serde(default = "default_layout")]
    layout: LayoutConfig,
    model: ErrorModel,
    #[serde(default = "one")]
    cycles: usize,
    #[serde(default = "default_trials")]
    trials: u64,
    #[serde(default = "both_modes")]
    modes: Vec<Mode>,
    /// Flip probabilities to sweep; defaults to `model.p_flip`.
    #[serde(default)]
    p_values: Vec<f64>,
    #[serde(default)]
    timing: Timing,
}

fn default_layout() -> LayoutConfig {
    LayoutConfig::triple(7, 4)
}
fn one() -> usize {
    1
}
fn default_trials() -> u64 {
    10_000
}
fn both_modes() -> Vec<Mode> {
    vec![Mode::Corrected, Mode::Uncorrected]
}

fn mc(config: &Path, trials: Option<u64>, out: &Path) -> CliResult<Outcome> {
    let mut cfg: SweepConfig = parse_json(&read(config)?, "mc config")?;
    if let Some(t) = trials {
        cfg.trials = t;
    }
    if cfg.p_values.is_empty() {
        cfg.p_values = vec![cfg.model.p_flip];
    }
    let mut rows = Vec::new();
    let mut summary = Vec::new();
    for &p in &cfg.p_values {
        for &mode in &cfg.modes {
            let mc = McConfig {
                layout: cfg.layout.clone(),
                model: ErrorModel { p_flip: p, ..cfg.model.clone() },
                cycles: cfg.cycles,
                mode,
                trials: cfg.trials,
                timing: cfg.timing,
            };
            let st = noise::run_trials(&mc)?;
            rows.push(SweepRow::new(p, mode, &st));
            summary.push(json!({ "p": p, "mode": mode, "stats": st, "analytic_repetition": noise::analytic_repetition_failure(p) }));
        }
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in &rows {
        w.serialize(r).map_err(|e| CliError::new("Io", e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::new("Io", e.to_string()))?;
    write(out, &String::from_utf8(bytes).expect("csv is utf-8"))?;
    let json_out = out.with_extension("json");
    write_json(&json_out, &summary)?;
    Ok(Outcome {
        config: serde_json::to_value(&cfg).expect("serializable"),
        seeds: vec![cfg.model.master_seed],
        outputs: vec![out.to_path_buf(), json_out],
        summary: json!({ "rows": rows.len() }),
    })
}

pub const VERIFY_TOL: f64 = 1e-10;

fn verify(n: usize, programs: u64, seed: u64, out: Option<&Path>) -> CliResult<Outcome> {
    if n < 2 || n > dense::MAX_DENSE_N {
        return Err(CliError::new("InvalidArgument", format!("n must be in 2..={}", dense::MAX_DENSE_N)));
    }
    let cfg = RandomProgramConfig { length: 25, ..Default::default() };
    let mut worst = (0.0f64, seed);
    for k in 0..programs {
        let s_k = seed.wrapping_add(k);
        let prog = dense::random_program(&cfg, s_k);
        let mut bits = vec![0u8; n];
        bits[1] = (k % 3 == 0) as u8;
        let mut h = ChainState::from_bits(&bits);
        let mut d = DenseState::from_bits(&bits)?;
        let ho = isa::run(&mut h, &prog, &mut rng_from_seed(s_k))?;
        let dout = isa::run(&mut d, &prog, &mut rng_from_seed(s_k))?;
        if ho != dout {
            return Err(CliError::new("VerificationFailed", format!("measurement records differ for program seed {s_k}")));
        }
        let dev = dense::compare(&h, &d)?;
        if dev > worst.0 {
            worst = (dev, s_k);
        }
    }
    let report = json!({ "n": n, "programs": programs, "seed": seed, "max_deviation": worst.0, "worst_program_seed": worst.1, "tolerance": VERIFY_TOL, "pass": worst.0 <= VERIFY_TOL });
    let mut outputs = vec![];
    if let Some(p) = out {
        write_json(p, &report)?;
        outputs.push(p.to_path_buf());
    }
    if worst.0 > VERIFY_TOL {
        return Err(CliError::new("VerificationFailed", format!("max deviation {:e} (program seed {})", worst.0, worst.1)));
    }
    Ok(Outcome { config: json!({ "n": n, "programs": programs }), seeds: vec![seed], outputs, summary: report })
}

/// Gate name, `axis:X,Y,Z:ANGLE` (exp(-i·angle/2·n·σ)), or a JSON matrix.
pub fn parse_target(spec: &str) -> CliResult<Unitary1> {
    if let Some(rest) = spec.strip_prefix("axis:") {
        let bad = || CliError::new("InvalidArgument", format!("bad target '{spec}'"));
        let (ax, ang) = rest.split_once(':').ok_or_else(bad)?;
        let ax: Vec<f64> = ax.split(',').map(|v| v.trim().parse()).collect::<Result<_, _>>().map_err(|_| bad())?;
        let ang: f64 = ang.trim().parse().map_err(|_| bad())?;
        if ax.len() != 3 {
            return Err(bad());
        }
        return Ok(Unitary1::axis_angle([ax[0], ax[1], ax[2]], ang)?);
    }
    let g = if spec.trim_start().starts_with('{') || spec.trim_start().starts_with('[') {
        GateSpec::Matrix(parse_json(spec, "target")?)
    } else {
        GateSpec::Name(spec.to_string())
    };
    Ok(g.unitary()?)
}

fn solve(target: &str, out: Option<&Path>) -> CliResult<Outcome> {
    let u = parse_target(target)?;
    let r = compiler::solve_pulse_params(&u)?;
    let mut outputs: Vec<PathBuf> = vec![];
    if let Some(p) = out {
        write_json(p, &r)?;
        outputs.push(p.to_path_buf());
    }
    Ok(Outcome {
        config: json!({ "target": target }),
        seeds: vec![],
        outputs,
        summary: json!({ "residual": r.residual, "iterations": r.iterations, "start": r.start }),
    })
}
