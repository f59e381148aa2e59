//! One function per subcommand. Each writes `<out>/<command>.json` and/or
//! `<out>/<command>.csv`, both carrying the library version and the resolved
//! config.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use btlh_core::axb::{fit_loglog_slope, left_exponent, norm_g, operator_bound_check, GField, Side};
use btlh_core::corpus::{generate_recipes, FieldRecipe};
use btlh_core::cwt::{cwt, mexican_hat};
use btlh_core::grid::{SampledField, ScaleGrid};
use btlh_core::hausdorff::{capacity, CapacityBracket, GridSet};
use btlh_core::io::{load_field, read_field_csv, read_set, save_field};
use btlh_core::norms_bt::{norm_b_variant, norm_f_variant};
use btlh_core::norms_hausdorff::norm_hausdorff_variant;
use btlh_core::report::{csv_preamble, equivalence_report, kernel_at};
use btlh_core::seqnorm::seq_norm;
use btlh_core::wavelet::Side as FilterSide;
use btlh_core::wavelet::{
    admissibility_check, analyze, decay_check, load_filter_pair, Admissibility, DecayReport, RENDER_DEPTH,
};
use btlh_core::{Error, Result, VERSION};
use serde::Serialize;

use crate::config::{RunConfig, SpaceSel};

pub const PROXY_CAVEAT: &str =
    "measured-proxy: smoothness is the fitted Fourier-decay exponent of the rendered wavelets";

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    version: &'static str,
    command: &'a str,
    config: &'a RunConfig,
    result: T,
}

struct Sink<'a> {
    cfg: &'a RunConfig,
    command: &'a str,
    written: Vec<PathBuf>,
}

impl<'a> Sink<'a> {
    fn new(cfg: &'a RunConfig, command: &'a str) -> Result<Self> {
        fs::create_dir_all(&cfg.out)?;
        Ok(Self { cfg, command, written: Vec::new() })
    }

    fn path(&self, suffix: &str) -> PathBuf {
        self.cfg.out.join(format!("{}{suffix}", self.command))
    }

    fn json<T: Serialize>(&mut self, result: T) -> Result<()> {
        if !self.cfg.formats.json {
            return Ok(());
        }
        let path = self.path(".json");
        let mut w = BufWriter::new(File::create(&path)?);
        let env = Envelope { version: VERSION, command: self.command, config: self.cfg, result };
        serde_json::to_writer_pretty(&mut w, &env)?;
        writeln!(w)?;
        w.flush()?;
        self.written.push(path);
        Ok(())
    }

    /// CSV with the comment preamble; `body` writes the header and rows.
    fn csv(
        &mut self,
        suffix: &str,
        body: impl FnOnce(&mut csv::Writer<&mut BufWriter<File>>) -> Result<()>,
    ) -> Result<()> {
        if !self.cfg.formats.csv {
            return Ok(());
        }
        let path = self.path(suffix);
        let mut w = BufWriter::new(File::create(&path)?);
        csv_preamble(&mut w, &serde_json::to_value(self.cfg)?)?;
        {
            let mut wtr = csv::Writer::from_writer(&mut w);
            body(&mut wtr)?;
            wtr.flush()?;
        }
        w.flush()?;
        self.written.push(path);
        Ok(())
    }

    fn finish(self) -> Vec<PathBuf> {
        self.written
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::format(e.to_string())
}

fn num(v: f64) -> String {
    format!("{v:e}")
}

fn opt_num(v: Option<f64>) -> String {
    v.map_or(String::new(), num)
}

fn load_one(path: &Path) -> Result<SampledField> {
    if path.extension().is_some_and(|e| e == "csv") {
        read_field_csv(File::open(path)?)
    } else {
        load_field(path)
    }
}

/// Corpus members: the listed files, or the seeded generators sampled at `J`.
pub fn load_corpus(cfg: &RunConfig) -> Result<Vec<SampledField>> {
    if !cfg.corpus.files.is_empty() {
        let fields: Vec<SampledField> = cfg.corpus.files.iter().map(|p| load_one(p)).collect::<Result<_>>()?;
        for (p, f) in cfg.corpus.files.iter().zip(&fields) {
            if f.dim() != cfg.grid.n || f.resolution() != cfg.grid.resolution {
                return Err(Error::invariant(format!(
                    "{} has n = {}, J = {} but the grid is n = {}, J = {}",
                    p.display(),
                    f.dim(),
                    f.resolution(),
                    cfg.grid.n,
                    cfg.grid.resolution
                )));
            }
        }
        return Ok(fields);
    }
    let recipes = generate_recipes(&cfg.corpus_spec())?;
    recipes.iter().map(|r| r.sample(cfg.grid.resolution)).collect()
}

fn scale_grid(cfg: &RunConfig) -> Result<ScaleGrid> {
    let s = cfg.settings();
    ScaleGrid::new(s.j_min, s.j_max, s.m)
}

fn group_fields(cfg: &RunConfig, corpus: &[SampledField]) -> Result<Vec<GField>> {
    let g = mexican_hat(cfg.grid.n, cfg.grid.resolution, cfg.group.sigma)?;
    let scales = scale_grid(cfg)?;
    corpus.iter().map(|f| cwt(f, &g, &scales)).collect()
}

#[derive(Serialize)]
struct CorpusFile {
    index: usize,
    path: PathBuf,
    recipe: FieldRecipe,
}

pub fn gen_corpus(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let recipes = generate_recipes(&cfg.corpus_spec())?;
    let dir = cfg.out.join("corpus");
    fs::create_dir_all(&dir)?;
    let mut files = Vec::with_capacity(recipes.len());
    let mut sink = Sink::new(cfg, "gen-corpus")?;
    for (i, r) in recipes.into_iter().enumerate() {
        let path = dir.join(format!("field_{i:04}.bin"));
        save_field(&path, &r.sample(cfg.grid.resolution)?)?;
        sink.written.push(path.clone());
        files.push(CorpusFile { index: i, path, recipe: r });
    }
    sink.csv(".csv", |w| {
        w.write_record(["index", "kind", "terms", "path"]).map_err(csv_err)?;
        for f in &files {
            w.write_record([
                f.index.to_string(),
                serde_json::to_value(f.recipe.kind)?.as_str().unwrap_or_default().to_string(),
                f.recipe.coeffs.len().to_string(),
                f.path.display().to_string(),
            ])
            .map_err(csv_err)?;
        }
        Ok(())
    })?;
    sink.json(&files)?;
    Ok(sink.finish())
}

#[derive(Clone, Debug, Serialize)]
pub struct NormEntry {
    pub field: usize,
    /// Kernel name, wavelet name, or `mexican_hat` for group spaces.
    pub kernel: String,
    /// 0 for spaces with a single characterization.
    pub variant: u8,
    pub value: f64,
    /// Constraint margin of the optimized weight (Hausdorff spaces).
    pub margin: Option<f64>,
    /// Per-channel values (sequence spaces).
    pub channels: Option<Vec<f64>>,
}

pub fn compute_norms(cfg: &RunConfig, corpus: &[SampledField]) -> Result<Vec<NormEntry>> {
    let res = cfg.grid.resolution;
    let settings = cfg.settings();
    let mut rows = Vec::new();
    if let Some(space) = cfg.space.group() {
        let gp = cfg.group_params();
        for (i, g) in group_fields(cfg, corpus)?.iter().enumerate() {
            let v = norm_g(g, &gp, space, &cfg.optimizer)?;
            rows.push(NormEntry {
                field: i,
                kernel: "mexican_hat".into(),
                variant: 0,
                value: v.value,
                margin: v.optimizer.map(|o| o.margin),
                channels: None,
            });
        }
        return Ok(rows);
    }
    if let Some(space) = cfg.space.sequence() {
        let w = load_filter_pair(&cfg.wavelet)?.with_dim(cfg.grid.n)?;
        let (lo, hi) = (settings.j_min.max(0) as u32, settings.j_max.min(res as i32 - 1) as u32);
        for (i, f) in corpus.iter().enumerate() {
            let v = seq_norm(&analyze(f, &w, lo, hi)?, &cfg.seq_params(), space, &cfg.optimizer)?;
            rows.push(NormEntry {
                field: i,
                kernel: cfg.wavelet.clone(),
                variant: 0,
                value: v.value,
                margin: v.optimizer.iter().map(|o| o.margin).reduce(f64::min),
                channels: Some(v.per_channel),
            });
        }
        return Ok(rows);
    }
    for nk in cfg.named_kernels(res)? {
        let k = kernel_at(&nk.spec, res)?;
        for (i, f) in corpus.iter().enumerate() {
            for &v in &cfg.variants {
                let (value, margin) = match cfg.space {
                    SpaceSel::BtF => (norm_f_variant(f, &cfg.space_params(), &k, v, &settings)?, None),
                    SpaceSel::BtB => (norm_b_variant(f, &cfg.space_params(), &k, v, &settings)?, None),
                    _ => {
                        let family = cfg.space.hausdorff().expect("function space");
                        let h = norm_hausdorff_variant(
                            f,
                            family,
                            &cfg.hausdorff_params(),
                            &k,
                            v,
                            &settings,
                            &cfg.optimizer,
                        )?;
                        (h.value, Some(h.result.margin))
                    }
                };
                rows.push(NormEntry { field: i, kernel: nk.name.clone(), variant: v, value, margin, channels: None });
            }
        }
    }
    Ok(rows)
}

pub fn norm(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let corpus = load_corpus(cfg)?;
    let rows = compute_norms(cfg, &corpus)?;
    let mut sink = Sink::new(cfg, "norm")?;
    sink.csv(".csv", |w| {
        w.write_record(["field", "kernel", "variant", "value", "margin"]).map_err(csv_err)?;
        for r in &rows {
            w.write_record([
                r.field.to_string(),
                r.kernel.clone(),
                r.variant.to_string(),
                num(r.value),
                opt_num(r.margin),
            ])
            .map_err(csv_err)?;
        }
        Ok(())
    })?;
    sink.json(&rows)?;
    Ok(sink.finish())
}

pub fn equivalence(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let family = cfg
        .space
        .family()
        .ok_or_else(|| Error::invariant(format!("equivalence needs space bt-f or bt-b, got {:?}", cfg.space)))?;
    let corpus = load_corpus(cfg)?;
    let kernels = cfg.named_kernels(cfg.grid.resolution)?;
    let report = equivalence_report(
        &corpus,
        family,
        &cfg.space_params(),
        &kernels,
        &cfg.variants,
        &cfg.settings(),
        cfg.options,
        serde_json::to_value(cfg)?,
    )?;
    let mut sink = Sink::new(cfg, "equivalence")?;
    if cfg.formats.csv {
        let path = sink.path(".csv");
        let mut w = BufWriter::new(File::create(&path)?);
        report.write_csv(&mut w)?;
        w.flush()?;
        sink.written.push(path);
    }
    sink.csv("-ratios.csv", |w| {
        w.write_record(["kernel", "a", "b", "min", "max", "spread", "refine_delta", "oversample_delta"])
            .map_err(csv_err)?;
        for r in &report.ratios {
            w.write_record([
                r.kernel.clone(),
                r.a.to_string(),
                r.b.to_string(),
                num(r.min),
                num(r.max),
                num(r.spread),
                opt_num(r.refine_delta),
                opt_num(r.oversample_delta),
            ])
            .map_err(csv_err)?;
        }
        Ok(())
    })?;
    sink.json(&report)?;
    Ok(sink.finish())
}

#[derive(Serialize)]
struct CapacityResult {
    n: usize,
    resolution: u32,
    cells: usize,
    bracket: CapacityBracket,
}

pub fn load_set(cfg: &RunConfig) -> Result<GridSet> {
    match &cfg.capacity.set_file {
        Some(p) => read_set(&mut std::io::BufReader::new(File::open(p)?)),
        None => GridSet::from_cells(cfg.grid.n, cfg.grid.resolution, &cfg.capacity.cells),
    }
}

pub fn capacity_cmd(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let set = load_set(cfg)?;
    let bracket = capacity(&set, cfg.capacity.d)?;
    let result = CapacityResult { n: set.dim(), resolution: set.resolution(), cells: set.count(), bracket };
    let mut sink = Sink::new(cfg, "capacity")?;
    sink.csv(".csv", |w| {
        w.write_record(["d", "lower", "upper", "method", "cells"]).map_err(csv_err)?;
        w.write_record([
            num(bracket.d),
            num(bracket.lower),
            num(bracket.upper),
            serde_json::to_value(bracket.method)?.as_str().unwrap_or_default().to_string(),
            result.cells.to_string(),
        ])
        .map_err(csv_err)?;
        Ok(())
    })?;
    sink.json(&result)?;
    Ok(sink.finish())
}

#[derive(Clone, Debug, Serialize)]
pub struct Probe {
    pub side: Side,
    pub z: Vec<f64>,
    pub r: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ProbeRecord {
    pub probe: Probe,
    pub empirical_ratio: f64,
    pub bound_shape: f64,
    /// `empirical_ratio / bound_shape`.
    pub fitted_c: f64,
}

#[derive(Serialize)]
struct GroupResult {
    probes: Vec<ProbeRecord>,
    /// Largest `fitted_c` over the probes.
    fitted_c: f64,
    /// Log-log slope of the ratios over `r`, when at least two distinct `r` were probed.
    slope: Option<f64>,
    /// Slope the left-translation bound predicts.
    predicted_left_slope: f64,
}

pub fn group_check(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let space = cfg
        .space
        .group()
        .ok_or_else(|| Error::invariant(format!("group-check needs a g-* space, got {:?}", cfg.space)))?;
    let gp = cfg.group_params();
    gp.validate(space, cfg.grid.n)?;
    let fields = group_fields(cfg, &load_corpus(cfg)?)?;
    let mut probes = Vec::new();
    for &r in &cfg.group.r {
        let b = operator_bound_check(space, &gp, cfg.group.side, &cfg.group.z, r, &fields, &cfg.optimizer)?;
        probes.push(ProbeRecord {
            probe: Probe { side: b.side, z: b.z, r: b.r },
            empirical_ratio: b.empirical_ratio,
            bound_shape: b.bound_shape,
            fitted_c: b.empirical_ratio / b.bound_shape,
        });
    }
    let rs: Vec<f64> = probes.iter().map(|p| p.probe.r).collect();
    let distinct = rs.iter().any(|r| (r - rs[0]).abs() > 0.0);
    let slope = distinct.then(|| fit_loglog_slope(&rs, &probes.iter().map(|p| p.empirical_ratio).collect::<Vec<_>>()));
    let result = GroupResult {
        fitted_c: probes.iter().map(|p| p.fitted_c).fold(0.0, f64::max),
        slope,
        predicted_left_slope: left_exponent(space, &gp, cfg.grid.n),
        probes,
    };
    let mut sink = Sink::new(cfg, "group-check")?;
    sink.csv(".csv", |w| {
        w.write_record(["side", "z", "r", "empirical_ratio", "bound_shape", "fitted_c"]).map_err(csv_err)?;
        for p in &result.probes {
            let z: Vec<String> = p.probe.z.iter().map(|v| num(*v)).collect();
            w.write_record([
                serde_json::to_value(p.probe.side)?.as_str().unwrap_or_default().to_string(),
                z.join(" "),
                num(p.probe.r),
                num(p.empirical_ratio),
                num(p.bound_shape),
                num(p.fitted_c),
            ])
            .map_err(csv_err)?;
        }
        Ok(())
    })?;
    sink.json(&result)?;
    Ok(sink.finish())
}

#[derive(Serialize)]
pub struct AuditResult {
    pub wavelet: String,
    pub verdict: &'static str,
    pub caveat: &'static str,
    pub admissibility: Admissibility,
    pub moments_analysis: u32,
    pub moments_synthesis: u32,
    pub decay: Vec<DecayReport>,
}

pub fn audit(cfg: &RunConfig) -> Result<AuditResult> {
    let w = load_filter_pair(&cfg.wavelet)?.with_dim(cfg.grid.n)?;
    let p = &cfg.params;
    let adm = admissibility_check(&w, cfg.space.admissible(), p.s, p.tau, p.p, p.q);
    Ok(AuditResult {
        wavelet: cfg.wavelet.clone(),
        verdict: if adm.passes { "pass" } else { "fail" },
        caveat: PROXY_CAVEAT,
        admissibility: adm,
        moments_analysis: w.moments_analysis,
        moments_synthesis: w.moments_synthesis,
        decay: [FilterSide::Analysis, FilterSide::Synthesis]
            .iter()
            .map(|&s| decay_check(&w, s, RENDER_DEPTH))
            .collect(),
    })
}

pub fn wavelet_audit(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let a = audit(cfg)?;
    let mut sink = Sink::new(cfg, "wavelet-audit")?;
    sink.csv(".csv", |w| {
        w.write_record(["wavelet", "verdict", "required", "measured", "vanishing_moments", "smoothness", "caveat"])
            .map_err(csv_err)?;
        w.write_record([
            a.wavelet.clone(),
            a.verdict.to_string(),
            num(a.admissibility.required),
            num(a.admissibility.measured),
            a.admissibility.vanishing_moments.to_string(),
            num(a.admissibility.smoothness),
            a.caveat.to_string(),
        ])
        .map_err(csv_err)?;
        Ok(())
    })?;
    sink.json(&a)?;
    Ok(sink.finish())
}
