//! Subcommand drivers: run the experiment named by a config and write its
//! JSON, CSV and text outputs.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use crate::channel::PauliTransferMatrix;
use crate::code::{memory_channel_circuit_with, memory_experiment_circuit};
use crate::config::{OutputFormat, RunConfig};
use crate::experiment::{
    moving_inaccuracy, plan_for_engine, run_memory_experiment, run_hash, sensitivity_sweep, write_syndrome_dump, ExperimentError,
    LogicalChannelReport, MovingReport, PlanSummary, SweepPoint,
};
use crate::noise::NoiseParameters;
use crate::oracle::{equivalence_suite, CheckError, EquivalenceReport};
use crate::tn::network_from_circuit;

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error(transparent)]
    Experiment(#[from] ExperimentError),
    #[error(transparent)]
    Check(#[from] CheckError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

struct Writer<'a> {
    config: &'a RunConfig,
    written: Vec<PathBuf>,
}

impl<'a> Writer<'a> {
    fn new(config: &'a RunConfig) -> Result<Self, ReportError> {
        std::fs::create_dir_all(&config.output.directory)?;
        Ok(Self { config, written: Vec::new() })
    }

    fn wants(&self, f: OutputFormat) -> bool {
        self.config.output.formats.contains(&f)
    }

    fn path(&mut self, name: &str) -> PathBuf {
        let p = self.config.output.directory.join(name);
        self.written.push(p.clone());
        p
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), ReportError> {
        if self.wants(OutputFormat::Json) {
            let p = self.path(name);
            std::fs::write(p, serde_json::to_string_pretty(value)? + "\n")?;
        }
        Ok(())
    }

    fn text(&mut self, name: &str, body: &str) -> Result<(), ReportError> {
        if self.wants(OutputFormat::Text) {
            let p = self.path(name);
            std::fs::write(p, body)?;
        }
        Ok(())
    }

    fn csv(&mut self, name: &str, header: &[&str], rows: Vec<Vec<String>>) -> Result<(), ReportError> {
        if self.wants(OutputFormat::Csv) {
            let p = self.path(name);
            let mut w = csv::Writer::from_path(p)?;
            w.write_record(header)?;
            for r in rows {
                w.write_record(r)?;
            }
            w.flush()?;
        }
        Ok(())
    }
}

fn num(x: f64) -> String {
    format!("{x:e}")
}

fn ptm_rows(hash: &str, which: &str, ptm: &PauliTransferMatrix<f64>) -> Vec<Vec<String>> {
    let labels = ["I", "X", "Y", "Z"];
    (0..16).map(|k| vec![hash.to_string(), which.to_string(), labels[k / 4].into(), labels[k % 4].into(), num(ptm.entries()[k])]).collect()
}

/// Plain-text rendering of a report.
pub fn render_report(r: &LogicalChannelReport) -> String {
    let m = &r.metadata;
    format!(
        "rounds {} + 1, kt_region {}, parameter hash {}\n\noptimally corrected logical PTM\n{}\nuncorrected logical PTM\n{}\n\
         p_bit {:.4e}  p_phase {:.4e}  p_y {:.4e}\nrotations {:.3e} {:.3e} {:.3e}\n\
         syndrome probability total {:.15}, {} skipped\nwidth {} (subtasks of width {}, {} split indices), runtime {:.1} s\n",
        m.rounds,
        m.kt_region,
        m.parameter_hash,
        r.aggregated_ptm.render(),
        r.trivial_ptm.render(),
        r.rates.p_bit,
        r.rates.p_phase,
        r.rates.p_y,
        r.rates.rotations[0],
        r.rates.rotations[1],
        r.rates.rotations[2],
        r.probability_total,
        r.skipped_syndromes,
        m.plan.width,
        m.plan.subtask_width,
        m.plan.split_edges,
        m.runtime_secs,
    )
}

pub fn cmd_simulate(config: &RunConfig) -> Result<(LogicalChannelReport, Vec<PathBuf>), ReportError> {
    let report = run_memory_experiment(config.rounds, &config.noise, &config.crosstalk, &config.engine)?;
    let mut w = Writer::new(config)?;
    w.json("report.json", &report)?;
    let hash = &report.metadata.parameter_hash;
    let mut rows = ptm_rows(hash, "optimal", &report.aggregated_ptm);
    rows.extend(ptm_rows(hash, "trivial", &report.trivial_ptm));
    w.csv("ptm.csv", &["parameter_hash", "channel", "row", "col", "value"], rows)?;
    w.text("ptm.txt", &render_report(&report))?;
    if config.output.syndrome_dump {
        if let Some(records) = &report.per_syndrome {
            let mem = memory_experiment_circuit(config.rounds, &config.noise, &config.crosstalk, &config.engine.schedule, config.engine.expose_final)
                .map_err(ExperimentError::from)?;
            let p = w.path("syndromes.bin");
            write_syndrome_dump(&p, &mem.open_bits, records)?;
        }
    }
    Ok((report, w.written))
}

#[derive(Clone, Debug, Serialize)]
pub struct PlanReport {
    pub rounds: usize,
    pub parameter_hash: String,
    pub tensors: usize,
    pub indices: usize,
    pub open_legs: usize,
    pub width_cap: usize,
    pub plan: PlanSummary,
}

pub fn plan_only(config: &RunConfig) -> Result<PlanReport, ReportError> {
    let mem = memory_experiment_circuit(config.rounds, &config.noise, &config.crosstalk, &config.engine.schedule, config.engine.expose_final)
        .map_err(ExperimentError::from)?;
    let circuit = memory_channel_circuit_with::<f64>(&mem, &config.noise, config.engine.final_round).map_err(ExperimentError::from)?;
    let net = network_from_circuit(&circuit).map_err(ExperimentError::from)?;
    let (_, _, plan) = plan_for_engine(&net, &config.engine)?;
    Ok(PlanReport {
        rounds: config.rounds,
        parameter_hash: run_hash(&config.noise, &config.crosstalk, config.rounds),
        tensors: net.tensors.len(),
        indices: net.num_indices,
        open_legs: net.open.len(),
        width_cap: config.engine.width_cap(),
        plan,
    })
}

pub fn cmd_plan(config: &RunConfig) -> Result<(PlanReport, Vec<PathBuf>), ReportError> {
    let report = plan_only(config)?;
    let mut w = Writer::new(config)?;
    w.json("plan.json", &report)?;
    let p = &report.plan;
    w.text(
        "plan.txt",
        &format!(
            "rounds {} + 1: {} tensors, {} indices, {} open legs\nwidth {}, subtask width {} under cap {}, {} split indices, estimated cost {:.3e}\nplanning {:.1} s{}\n",
            report.rounds,
            report.tensors,
            report.indices,
            report.open_legs,
            p.width,
            p.subtask_width,
            report.width_cap,
            p.split_edges,
            p.estimated_cost,
            p.seconds,
            if p.cached { " (cached)" } else { "" }
        ),
    )?;
    Ok((report, w.written))
}

fn sweep_rows(points: &[SweepPoint]) -> Vec<Vec<String>> {
    points
        .iter()
        .map(|p| {
            vec![
                num(p.kt_region),
                num(p.p_bit),
                num(p.p_phase),
                num(p.p_y),
                num(p.rotations[0]),
                num(p.rotations[1]),
                num(p.rotations[2]),
                p.parameter_hash.clone(),
            ]
        })
        .collect()
}

pub fn cmd_sweep(config: &RunConfig) -> Result<(Vec<SweepPoint>, Vec<PathBuf>), ReportError> {
    let points = sensitivity_sweep(&config.sweep.k_values, config.rounds, &config.noise, &config.engine)?;
    let mut w = Writer::new(config)?;
    w.json("sweep.json", &points)?;
    w.csv("sweep.csv", &["kt_region", "p_bit", "p_phase", "p_y", "rotation_x", "rotation_y", "rotation_z", "parameter_hash"], sweep_rows(&points))?;
    let mut text = String::new();
    for p in &points {
        text.push_str(&format!("kt_region {:.6}\n{}\n", p.kt_region, p.report.aggregated_ptm.render()));
    }
    w.text("sweep.txt", &text)?;
    Ok((points, w.written))
}

#[derive(Clone, Debug, Serialize)]
pub struct MovingRow {
    pub t1: f64,
    pub inaccuracy: f64,
    pub parameter_hash: String,
    pub report: MovingReport,
}

pub fn cmd_moving(config: &RunConfig) -> Result<(Vec<MovingRow>, Vec<PathBuf>), ReportError> {
    let grid = if config.moving.t1_grid.is_empty() { vec![config.noise.t1] } else { config.moving.t1_grid.clone() };
    let mut rows = Vec::new();
    for t1 in grid {
        let params = NoiseParameters { t1, ..config.noise.clone() };
        let report = moving_inaccuracy(&params, config.moving.pair, config.rounds, &config.engine)?;
        rows.push(MovingRow { t1, inaccuracy: report.comparison.norm1, parameter_hash: report.base.metadata.parameter_hash.clone(), report });
    }
    let mut w = Writer::new(config)?;
    w.json("moving.json", &rows)?;
    let ((ax, ay), (bx, by)) = config.moving.pair;
    let pair = format!("({ax},{ay})-({bx},{by})");
    let csv_rows = rows.iter().map(|r| vec![num(r.t1), pair.clone(), num(r.inaccuracy), r.parameter_hash.clone()]).collect();
    w.csv("moving.csv", &["t1_ns", "pair", "inaccuracy", "parameter_hash"], csv_rows)?;
    let mut text = String::new();
    for r in &rows {
        text.push_str(&format!("T1 {} ns, {pair}: 1-norm {:.3e}\ndifference\n{}\n", r.t1, r.inaccuracy, r.report.comparison.difference.render()));
    }
    w.text("moving.txt", &text)?;
    Ok((rows, w.written))
}

pub fn cmd_oracle_check(config: &RunConfig, count: usize, max_qubits: usize, seed: u64) -> Result<(EquivalenceReport, Vec<PathBuf>), ReportError> {
    let start = Instant::now();
    let mut report = equivalence_suite(count, max_qubits, seed, 1e-10)?;
    report.seconds = start.elapsed().as_secs_f64();
    let mut w = Writer::new(config)?;
    w.json("oracle.json", &report)?;
    let rows = report.cases.iter().map(|c| vec![c.seed.to_string(), c.num_qubits.to_string(), c.open_legs.to_string(), num(c.max_abs_diff)]).collect();
    w.csv("oracle.csv", &["seed", "qubits", "open_legs", "max_abs_diff"], rows)?;
    Ok((report, w.written))
}

/// Writes `config` as TOML next to the outputs so a run can be repeated.
pub fn write_config(config: &RunConfig, dir: &Path) -> Result<PathBuf, ReportError> {
    std::fs::create_dir_all(dir)?;
    let p = dir.join("config.toml");
    let text = config.to_toml().map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e.to_string()))?;
    std::fs::write(&p, text)?;
    Ok(p)
}
