use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use chainsim::config::{canonical_key, read_document};
use chainsim::{run, SimError, SimulationConfig, SimulationOutput};
use clap::Parser;
use rayon::prelude::*;
use serde_json::{Map, Value};

/// Discrete-event blockchain simulator.
#[derive(Debug, Parser)]
#[command(name = "chainsim", version)]
struct Cli {
    /// JSON configuration file.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Base parameter set.
    #[arg(long, value_parser = ["bitcoin", "ethereum"])]
    preset: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Directory for the report and traces.
    #[arg(long, value_name = "DIR")]
    output: Option<PathBuf>,
    /// Simulated seconds.
    #[arg(long, value_name = "SECONDS")]
    sim_time: Option<f64>,
    #[arg(long, value_name = "N")]
    nodes: Option<usize>,
    #[arg(long, value_parser = ["pow", "pos"])]
    consensus: Option<String>,
    #[arg(long, value_parser = ["longest", "ghost"])]
    finalization: Option<String>,
    #[arg(long, value_parser = ["cbr", "ethwire", "fixed"])]
    propagation: Option<String>,
    /// Mean per-receiver delay in fixed propagation mode.
    #[arg(long, value_name = "SECONDS")]
    fixed_delay_mean: Option<f64>,
    /// Run once per value of KEY from START to END (inclusive) by STEP.
    #[arg(long, value_name = "KEY=START:END:STEP")]
    sweep: Option<String>,
    /// Write the edge list `i j latency` to topology.txt.
    #[arg(long)]
    export_topology: bool,
    /// Write the block trace to blocks.csv.
    #[arg(long)]
    export_blocks: bool,
    /// Write the transaction list to txs.csv.
    #[arg(long)]
    export_txs: bool,
}

#[derive(Debug, Clone, PartialEq)]
struct Sweep {
    key: String,
    values: Vec<f64>,
}

fn parse_sweep(arg: &str) -> Result<Sweep, String> {
    let usage = || format!("sweep `{arg}` must look like KEY=START:END:STEP");
    let (key, range) = arg.split_once('=').ok_or_else(usage)?;
    let parts: Vec<f64> =
        range.split(':').map(|p| p.trim().parse::<f64>()).collect::<Result<_, _>>().map_err(|_| usage())?;
    let [start, end, step] = parts[..] else { return Err(usage()) };
    if !(step > 0.0 && start <= end && start.is_finite() && end.is_finite()) {
        return Err(format!("sweep `{arg}` needs START <= END and STEP > 0"));
    }
    let count = ((end - start) / step + 1e-9).floor() as usize + 1;
    let values = (0..count).map(|i| start + i as f64 * step).collect();
    Ok(Sweep { key: canonical_key(key.trim()).to_owned(), values })
}

fn number(v: f64) -> Value {
    if v.fract() == 0.0 && v.abs() < 9e15 {
        Value::from(v as i64)
    } else {
        Value::from(v)
    }
}

fn document(cli: &Cli) -> Result<Map<String, Value>, String> {
    let mut doc = match &cli.config {
        Some(path) => {
            let text = read_document(path).map_err(|e| e.to_string())?;
            match serde_json::from_str::<Value>(&text) {
                Ok(Value::Object(map)) => map,
                Ok(_) => return Err(format!("{}: config must be a JSON object", path.display())),
                Err(e) => return Err(format!("{}: {e}", path.display())),
            }
        }
        None => Map::new(),
    };
    let mut set = |k: &str, v: Value| {
        doc.insert(k.to_owned(), v);
    };
    if let Some(p) = &cli.preset {
        set("preset", Value::from(p.as_str()));
    }
    if let Some(s) = cli.seed {
        set("seed", Value::from(s));
    }
    if let Some(t) = cli.sim_time {
        set("sim_time", Value::from(t));
    }
    if let Some(n) = cli.nodes {
        set("nodes", Value::from(n));
    }
    for (key, value) in
        [("consensus", &cli.consensus), ("finalization", &cli.finalization), ("propagation", &cli.propagation)]
    {
        if let Some(v) = value {
            set(key, Value::from(v.as_str()));
        }
    }
    if let Some(m) = cli.fixed_delay_mean {
        set("fixed_delay_mean", Value::from(m));
    }
    Ok(doc)
}

fn write_outputs(cli: &Cli, dir: &Path, out: &SimulationOutput) -> std::io::Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("report.json"), out.report.to_json())?;
    fs::write(dir.join("summary.txt"), out.report.summary())?;
    fs::write(dir.join("config.json"), out.config.to_json_string())?;
    if cli.export_topology {
        if let Some(topology) = &out.topology {
            topology.write_edge_list(BufWriter::new(File::create(dir.join("topology.txt"))?))?;
        }
    }
    if cli.export_blocks {
        out.store.write_csv(out.canonical, BufWriter::new(File::create(dir.join("blocks.csv"))?))?;
    }
    if cli.export_txs {
        out.pool.write_csv(BufWriter::new(File::create(dir.join("txs.csv"))?))?;
    }
    Ok(())
}

fn format_value(v: f64) -> String {
    if v.fract() == 0.0 {
        format!("{v:.0}")
    } else {
        format!("{v}")
    }
}

fn execute(cli: &Cli) -> Result<(), String> {
    if (cli.export_topology || cli.export_blocks || cli.export_txs) && cli.output.is_none() {
        return Err("--export-* flags require --output DIR".to_owned());
    }
    let doc = document(cli)?;
    let Some(arg) = &cli.sweep else {
        let config = SimulationConfig::resolve(doc).map_err(|e| e.to_string())?;
        let out = run(config).map_err(|e| e.to_string())?;
        print!("{}", out.report.summary());
        if let Some(dir) = &cli.output {
            write_outputs(cli, dir, &out).map_err(|e| format!("{}: {e}", dir.display()))?;
        }
        return Ok(());
    };

    let sweep = parse_sweep(arg)?;
    let configs = sweep
        .values
        .iter()
        .map(|&v| {
            let mut point = doc.clone();
            point.insert(sweep.key.clone(), number(v));
            SimulationConfig::resolve(point).map_err(|e| format!("{}={}: {e}", sweep.key, format_value(v)))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let results: Vec<Result<SimulationOutput, SimError>> = configs.into_par_iter().map(run).collect();
    println!("{:>14} {:>10} {:>10} {:>12} {:>8}", sweep.key, "p50_s", "p90_s", "stale_rate", "blocks");
    for (&v, result) in sweep.values.iter().zip(results) {
        let out = result.map_err(|e| format!("{}={}: {e}", sweep.key, format_value(v)))?;
        let r = &out.report;
        let show = |x: Option<f64>| x.map_or_else(|| "n/a".to_owned(), |x| format!("{x:.4}"));
        println!(
            "{:>14} {:>10} {:>10} {:>12} {:>8}",
            format_value(v),
            show(r.bpd_p50_s),
            show(r.bpd_p90_s),
            show(r.stale_uncle_rate),
            r.total_blocks
        );
        if let Some(dir) = &cli.output {
            let sub = dir.join(format!("{}_{}", sweep.key, format_value(v)));
            write_outputs(cli, &sub, &out).map_err(|e| format!("{}: {e}", sub.display()))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::FAILURE
        }
    }
}
