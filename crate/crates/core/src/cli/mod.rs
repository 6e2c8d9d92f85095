//! Command-line front end. Every run writes data files into the output
//! directory; each file starts with the artifact version and config hash.

mod config;
mod state;
mod validate;

use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

pub use config::RunConfig;
pub use state::parse_state;
pub use validate::{run_checks, CheckLine};

use crate::error::{Error, Result};
use crate::evolve::{run_schedule_lindblad, DephasingRates};
use crate::fidelity::{
    average_gate_fidelity, calibrate_gate, fidelity_mixed, ideal_gate, FidelityReport, Gate,
};
use crate::format::fmt_num;
use crate::model::{Axis, MonomerParams};
use crate::pulses::{entangling_times, CalibrationResult};
use crate::spectrum::{extract_effective_model, level_diagram, EffectiveModel, LevelSource};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Environment variable holding the worker-thread count.
pub const WORKERS_ENV: &str = "CLOCKGATE_WORKERS";

#[derive(Debug, Parser)]
#[command(
    name = "clockgate",
    version,
    about = "Clock-transition two-qubit gate simulator"
)]
pub struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (overrides the config).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Energy levels against field.
    Levels {
        #[arg(value_enum, default_value = "dimer")]
        target: Target,
        #[arg(long, default_value = "z")]
        axis: Axis,
        /// Which monomer to use for `monomer` (1 or 2).
        #[arg(long, default_value_t = 1)]
        monomer: u8,
    },
    /// Calibrate one gate and score it.
    Gate(GateArgs),
    /// Calibrated gate fidelity over a grid.
    Sweep {
        #[arg(value_enum)]
        variable: SweepVariable,
        #[command(flatten)]
        gate: GateArgs,
    },
    /// Numerical and physical self-checks.
    Validate,
    /// Calibrate a gate and write its pulse schedule.
    Calibrate(GateArgs),
}

#[derive(Debug, Clone, Args)]
pub struct GateArgs {
    #[arg(long, default_value = "CNOT")]
    pub gate: String,
    /// Longitudinal exchange, MHz (overrides the config).
    #[arg(long)]
    pub jzz: Option<f64>,
    /// Coherence time, µs; `inf` for closed evolution.
    #[arg(long)]
    pub t2: Option<f64>,
    /// Input state such as `uu+i*dd`; dumps its output density matrix.
    #[arg(long)]
    pub input_state: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Target {
    Monomer,
    Dimer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepVariable {
    Jzz,
    T2,
}

/// Outcome of a command: `Ok(true)` on success, `Ok(false)` when a
/// validation check failed.
pub fn run(cli: Cli) -> Result<bool> {
    configure_workers()?;
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(out) = &cli.out {
        cfg.output.dir = out.clone();
    }
    match &cli.command {
        Command::Gate(a) | Command::Calibrate(a) | Command::Sweep { gate: a, .. } => {
            if let Some(j) = a.jzz {
                cfg.dimer.j_zz = j * 1e-3;
            }
        }
        _ => {}
    }
    cfg.validate()?;
    fs::create_dir_all(&cfg.output.dir).map_err(|e| Error::io(&cfg.output.dir, e))?;
    let ctx = Context::new(cfg);
    match cli.command {
        Command::Levels {
            target,
            axis,
            monomer,
        } => cmd_levels(&ctx, target, axis, monomer).map(|_| true),
        Command::Gate(a) => cmd_gate(&ctx, &a).map(|_| true),
        Command::Sweep { variable, gate } => cmd_sweep(&ctx, variable, &gate).map(|_| true),
        Command::Validate => cmd_validate(&ctx),
        Command::Calibrate(a) => cmd_calibrate(&ctx, &a).map(|_| true),
    }
}

fn configure_workers() -> Result<()> {
    if let Ok(v) = std::env::var(WORKERS_ENV) {
        let n: usize = v.trim().parse().map_err(|_| {
            Error::Usage(format!(
                "{WORKERS_ENV} must be a positive integer, got `{v}`"
            ))
        })?;
        if n == 0 {
            return Err(Error::Usage(format!("{WORKERS_ENV} must be positive")));
        }
        // a pool may already exist when called twice in one process
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    Ok(())
}

pub struct Context {
    pub cfg: RunConfig,
    pub hash: String,
}

impl Context {
    pub fn new(cfg: RunConfig) -> Self {
        let hash = cfg.hash();
        Context { cfg, hash }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.cfg.output.dir.join(name)
    }

    fn header(&self) -> String {
        format!("# clockgate {VERSION} config={}\n", self.hash)
    }

    fn write(&self, name: &str, body: &str) -> Result<PathBuf> {
        let path = self.path(name);
        fs::write(&path, format!("{}{body}", self.header())).map_err(|e| Error::io(&path, e))?;
        log::info!("wrote {}", path.display());
        Ok(path)
    }

    fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<PathBuf> {
        let mut v =
            serde_json::to_value(value).map_err(|e| Error::NumericalFailure(e.to_string()))?;
        let meta =
            serde_json::json!({ "artifact": "clockgate", "version": VERSION, "config": self.hash });
        match &mut v {
            serde_json::Value::Object(map) => {
                map.insert("meta".into(), meta);
            }
            other => {
                *other = serde_json::json!({ "meta": meta, "data": other.clone() });
            }
        }
        let path = self.path(name);
        let text = serde_json::to_string_pretty(&v).expect("json value serializes") + "\n";
        fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        log::info!("wrote {}", path.display());
        Ok(path)
    }

    fn model(&self) -> Result<EffectiveModel> {
        let params = self.cfg.dimer_params();
        if let Some(w) = params.validity_warning() {
            log::warn!("{w}");
        }
        extract_effective_model(&params)
    }

    fn model_at(&self, j_zz_ghz: f64) -> Result<EffectiveModel> {
        let mut p = self.cfg.dimer_params();
        p.j.j_zz = j_zz_ghz;
        extract_effective_model(&p)
    }

    fn calibrate(&self, em: &EffectiveModel, gate: Gate) -> Result<CalibrationResult> {
        calibrate_gate(em, gate, &self.cfg.compile_options(), &self.cfg.calibration)
    }
}

fn rates_for(t2: Option<f64>) -> Result<DephasingRates> {
    match t2 {
        None => Ok(DephasingRates::none()),
        Some(t) => DephasingRates::uniform_t2_us(t),
    }
}

fn t2_tag(t2: Option<f64>) -> String {
    match t2 {
        Some(t) if t.is_finite() => fmt_num(t),
        _ => "inf".into(),
    }
}

fn cmd_levels(ctx: &Context, target: Target, axis: Axis, monomer: u8) -> Result<PathBuf> {
    let lv = &ctx.cfg.levels;
    let (source, range, name) = match target {
        Target::Monomer => {
            let d = &ctx.cfg.dimer;
            let p = match monomer {
                1 => MonomerParams {
                    d: d.d1,
                    e: d.e1,
                    g: d.g1,
                },
                2 => MonomerParams {
                    d: d.d2,
                    e: d.e2,
                    g: d.g2,
                },
                _ => return Err(Error::Usage("--monomer must be 1 or 2".into())),
            };
            p.validate()?;
            (
                LevelSource::Monomer(p),
                lv.monomer_range_mt,
                format!("levels_monomer{monomer}_{}.csv", axis.name()),
            )
        }
        Target::Dimer => {
            let p = ctx.cfg.dimer_params();
            p.validate()?;
            (
                LevelSource::Dimer(p),
                lv.dimer_range_mt,
                format!("levels_dimer_{}.csv", axis.name()),
            )
        }
    };
    let mut diagram = level_diagram(&source, axis, (-range, range), lv.samples)?;
    if target == Target::Dimer {
        diagram = diagram.lowest(4);
    }
    ctx.write(&name, &diagram.to_csv())
}

#[derive(Serialize)]
struct StateOutput {
    input: String,
    fidelity: f64,
    density_csv: String,
}

#[derive(Serialize)]
struct GateOutput {
    report: FidelityReport,
    fidelity_before_calibration: f64,
    closed_fidelity_after_calibration: f64,
    adjustments_ns: Vec<f64>,
    schedule: crate::pulses::Schedule,
    #[serde(skip_serializing_if = "Option::is_none")]
    state: Option<StateOutput>,
}

fn cmd_gate(ctx: &Context, a: &GateArgs) -> Result<PathBuf> {
    let gate: Gate = a.gate.parse()?;
    let em = ctx.model()?;
    let rates = rates_for(a.t2)?;
    let cal = ctx.calibrate(&em, gate)?;
    let ideal = ideal_gate(gate);
    let report = average_gate_fidelity(&cal.schedule, &em, &ideal, &rates)?;
    let tag = format!(
        "{}_jzz{}_t2{}",
        gate.name(),
        fmt_num(em.params.j.j_zz * 1e3),
        t2_tag(a.t2)
    );

    let state = match &a.input_state {
        None => None,
        Some(spec) => {
            let psi = parse_state(spec)?;
            let rho = run_schedule_lindblad(&cal.schedule, &em, &rates, &psi.density())?;
            let target = &ideal * psi.vector();
            let name = format!("density_{tag}.csv");
            ctx.write(&name, &rho.to_csv())?;
            Some(StateOutput {
                input: spec.clone(),
                fidelity: fidelity_mixed(&target, rho.matrix()),
                density_csv: name,
            })
        }
    };
    println!(
        "{} average fidelity {}",
        gate.name(),
        fmt_num(report.average)
    );
    if let Some(s) = &state {
        println!("{} state fidelity {}", s.input, fmt_num(s.fidelity));
    }
    ctx.write_json(
        &format!("gate_{tag}.json"),
        &GateOutput {
            report,
            fidelity_before_calibration: cal.fidelity_before,
            closed_fidelity_after_calibration: cal.fidelity_after,
            adjustments_ns: cal.adjustments_ns,
            schedule: cal.schedule,
            state,
        },
    )
}

fn cmd_sweep(ctx: &Context, variable: SweepVariable, a: &GateArgs) -> Result<PathBuf> {
    let gate: Gate = a.gate.parse()?;
    let grid: Vec<(f64, Option<f64>)> = match variable {
        SweepVariable::Jzz => ctx.cfg.sweep.jzz_mhz.iter().map(|j| (*j, a.t2)).collect(),
        SweepVariable::T2 => ctx
            .cfg
            .sweep
            .t2_us
            .iter()
            .map(|t| (ctx.cfg.dimer.j_zz * 1e3, Some(*t)))
            .collect(),
    };
    if grid.is_empty() {
        return Err(Error::Usage("sweep grid is empty".into()));
    }
    let ideal = ideal_gate(gate);

    // one calibration per distinct Jzz, then score every grid point
    let rows: Vec<Result<String>> = match variable {
        SweepVariable::T2 => {
            let em = ctx.model()?;
            let cal = ctx.calibrate(&em, gate)?;
            grid.par_iter()
                .map(|(j, t2)| sweep_row(&cal, &em, &ideal, *j, *t2))
                .collect()
        }
        SweepVariable::Jzz => grid
            .par_iter()
            .map(|(j, t2)| {
                let em = ctx.model_at(j * 1e-3)?;
                let cal = ctx.calibrate(&em, gate)?;
                sweep_row(&cal, &em, &ideal, *j, *t2)
            })
            .collect(),
    };

    let name = match variable {
        SweepVariable::Jzz => format!("sweep_jzz_{}.csv", gate.name()),
        SweepVariable::T2 => format!("sweep_t2_{}.csv", gate.name()),
    };
    let path = ctx.path(&name);
    let mut file = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
    let io = |e| Error::io(&path, e);
    write!(file, "{}Jzz_MHz,T2_us,F_avg,F_min,F_max\n", ctx.header()).map_err(io)?;
    for row in rows {
        match row {
            Ok(line) => writeln!(file, "{line}").map_err(io)?,
            Err(e) => {
                file.flush().map_err(io)?;
                return Err(e);
            }
        }
    }
    file.flush().map_err(io)?;
    log::info!("wrote {}", path.display());
    Ok(path)
}

fn sweep_row(
    cal: &CalibrationResult,
    em: &EffectiveModel,
    ideal: &nalgebra::DMatrix<crate::operator::C64>,
    jzz_mhz: f64,
    t2: Option<f64>,
) -> Result<String> {
    let r = average_gate_fidelity(&cal.schedule, em, ideal, &rates_for(t2)?)?;
    Ok(format!(
        "{},{},{},{},{}",
        fmt_num(jzz_mhz),
        t2_tag(t2),
        fmt_num(r.average),
        fmt_num(r.min),
        fmt_num(r.max)
    ))
}

fn cmd_validate(ctx: &Context) -> Result<bool> {
    let lines = run_checks(&ctx.cfg.dimer_params());
    let mut body = String::new();
    for l in &lines {
        println!("{l}");
        body.push_str(&format!("{l}\n"));
    }
    ctx.write("validate.txt", &body)?;
    Ok(lines.iter().all(|l| l.pass))
}

#[derive(Serialize)]
struct CalibrationOutput {
    gate: String,
    fidelity_before: f64,
    fidelity_after: f64,
    adjustments_ns: Vec<f64>,
    sweeps: usize,
    entangling_times_ns: crate::pulses::EntanglingTimes,
    delta_ghz: f64,
    delta_closed_form_ghz: f64,
}

fn cmd_calibrate(ctx: &Context, a: &GateArgs) -> Result<PathBuf> {
    let gate: Gate = a.gate.parse()?;
    let em = ctx.model()?;
    let cal = ctx.calibrate(&em, gate)?;
    let tag = format!("{}_jzz{}", gate.name(), fmt_num(em.params.j.j_zz * 1e3));
    ctx.write_json(&format!("schedule_{tag}.json"), &cal.schedule)?;
    println!(
        "{} fidelity {} -> {}",
        gate.name(),
        fmt_num(cal.fidelity_before),
        fmt_num(cal.fidelity_after)
    );
    ctx.write_json(
        &format!("calibration_{tag}.json"),
        &CalibrationOutput {
            gate: gate.name(),
            fidelity_before: cal.fidelity_before,
            fidelity_after: cal.fidelity_after,
            adjustments_ns: cal.adjustments_ns.clone(),
            sweeps: cal.sweeps,
            entangling_times_ns: entangling_times(&em),
            delta_ghz: em.delta,
            delta_closed_form_ghz: em.delta_closed_form,
        },
    )
}
