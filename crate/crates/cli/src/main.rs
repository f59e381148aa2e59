use std::path::PathBuf;
use std::process::ExitCode;

use btlh_core::Error;
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

mod commands;
mod config;

use config::RunConfig;

#[derive(Parser)]
#[command(name = "btlh", version, about = "Besov/Triebel-Lizorkin-type and Hausdorff-type norms on sampled fields")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Compute norms of every corpus member.
    Norm,
    /// Variant values and pairwise ratio spreads over the corpus.
    Equivalence,
    /// Hausdorff capacity bracket of a grid set.
    Capacity,
    /// Translation-operator ratios on a group space.
    GroupCheck,
    /// Moments, decay and the admissibility verdict of a wavelet pair.
    WaveletAudit,
    /// Write the seeded corpus as field files.
    GenCorpus,
}

/// Each flag overrides the config key named in its help text.
#[derive(Args, Default)]
struct Overrides {
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// corpus.seed
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// out
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Write JSON (alone unless --csv is also given).
    #[arg(long, global = true)]
    json: bool,
    /// Write CSV (alone unless --json is also given).
    #[arg(long, global = true)]
    csv: bool,
    /// space
    #[arg(long, global = true)]
    space: Option<String>,
    /// variants (repeatable)
    #[arg(long = "variant", global = true)]
    variants: Vec<u8>,
    /// grid.n
    #[arg(long, global = true)]
    dim: Option<usize>,
    /// grid.resolution
    #[arg(long, global = true)]
    resolution: Option<u32>,
    /// corpus.count
    #[arg(long, global = true)]
    count: Option<usize>,
    /// corpus.files (repeatable)
    #[arg(long = "field", global = true)]
    fields: Vec<PathBuf>,
    /// wavelet
    #[arg(long, global = true)]
    wavelet: Option<String>,
    /// params.s
    #[arg(long, global = true, allow_negative_numbers = true)]
    s: Option<f64>,
    /// params.tau
    #[arg(long, global = true, allow_negative_numbers = true)]
    tau: Option<f64>,
    /// params.p
    #[arg(long, global = true, allow_negative_numbers = true)]
    p: Option<f64>,
    /// params.q
    #[arg(long, global = true, allow_negative_numbers = true)]
    q: Option<f64>,
    /// capacity.d
    #[arg(long, global = true, allow_negative_numbers = true)]
    d: Option<f64>,
    /// capacity.cells, comma separated
    #[arg(long, global = true, value_delimiter = ',')]
    cells: Option<Vec<usize>>,
    /// capacity.set_file
    #[arg(long, global = true)]
    set_file: Option<PathBuf>,
    /// group.r, comma separated
    #[arg(long = "r", global = true, value_delimiter = ',')]
    rs: Option<Vec<f64>>,
    /// group.z, comma separated
    #[arg(long = "z", global = true, value_delimiter = ',', allow_negative_numbers = true)]
    zs: Option<Vec<f64>>,
    /// group.side (left or right)
    #[arg(long, global = true)]
    side: Option<String>,
}

fn set(doc: &mut Value, path: &[&str], v: Value) {
    let mut cur = doc;
    for key in &path[..path.len() - 1] {
        if !cur.get(*key).is_some_and(Value::is_object) {
            cur[*key] = json!({});
        }
        cur = &mut cur[*key];
    }
    cur[path[path.len() - 1]] = v;
}

impl Overrides {
    fn apply(&self, doc: &mut Value) {
        let mut put = |path: &[&str], v: Option<Value>| {
            if let Some(v) = v {
                set(doc, path, v);
            }
        };
        put(&["corpus", "seed"], self.seed.map(|v| json!(v)));
        put(&["out"], self.out.as_ref().map(|v| json!(v)));
        if self.json || self.csv {
            put(&["formats"], Some(json!({"json": self.json, "csv": self.csv})));
        }
        put(&["space"], self.space.as_ref().map(|v| json!(v)));
        put(&["variants"], (!self.variants.is_empty()).then(|| json!(self.variants)));
        put(&["grid", "n"], self.dim.map(|v| json!(v)));
        put(&["grid", "resolution"], self.resolution.map(|v| json!(v)));
        put(&["corpus", "count"], self.count.map(|v| json!(v)));
        put(&["corpus", "files"], (!self.fields.is_empty()).then(|| json!(self.fields)));
        put(&["wavelet"], self.wavelet.as_ref().map(|v| json!(v)));
        put(&["params", "s"], self.s.map(|v| json!(v)));
        put(&["params", "tau"], self.tau.map(|v| json!(v)));
        put(&["params", "p"], self.p.map(|v| json!(v)));
        put(&["params", "q"], self.q.map(|v| json!(v)));
        put(&["capacity", "d"], self.d.map(|v| json!(v)));
        put(&["capacity", "cells"], self.cells.as_ref().map(|v| json!(v)));
        put(&["capacity", "set_file"], self.set_file.as_ref().map(|v| json!(v)));
        put(&["group", "r"], self.rs.as_ref().map(|v| json!(v)));
        put(&["group", "z"], self.zs.as_ref().map(|v| json!(v)));
        put(&["group", "side"], self.side.as_ref().map(|v| json!(v)));
    }
}

fn resolve(o: &Overrides) -> btlh_core::Result<RunConfig> {
    let mut doc = match &o.config {
        Some(p) => serde_json::from_str(&std::fs::read_to_string(p)?)?,
        None => json!({}),
    };
    if !doc.is_object() {
        return Err(Error::format("config must be a JSON object"));
    }
    // a partial nested object would otherwise drop its siblings' defaults
    let defaults = serde_json::to_value(RunConfig::default())?;
    o.apply(&mut doc);
    let mut merged = defaults;
    merge(&mut merged, doc);
    let cfg: RunConfig = serde_json::from_value(merged).map_err(|e| Error::invariant(format!("config: {e}")))?;
    let cfg = cfg.resolve();
    cfg.validate()?;
    Ok(cfg)
}

/// Deep merge of objects; `scales: null` and other scalars replace.
fn merge(base: &mut Value, over: Value) {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) if slot.is_object() && v.is_object() => merge(slot, v),
                    _ => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (b, o) => *b = o,
    }
}

fn run(cli: &Cli) -> btlh_core::Result<Vec<PathBuf>> {
    let cfg = resolve(&cli.overrides)?;
    match cli.command {
        Command::Norm => commands::norm(&cfg),
        Command::Equivalence => commands::equivalence(&cfg),
        Command::Capacity => commands::capacity_cmd(&cfg),
        Command::GroupCheck => commands::group_check(&cfg),
        Command::WaveletAudit => commands::wavelet_audit(&cfg),
        Command::GenCorpus => commands::gen_corpus(&cfg),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("btlh: {e}");
            ExitCode::from(match e {
                Error::Invariant(_) => 2,
                Error::NumericalRange(_) => 3,
                _ => 1,
            })
        }
    }
}
