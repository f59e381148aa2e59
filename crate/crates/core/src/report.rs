//! Norm reports over a corpus: per-variant values, pairwise ratio spreads and
//! their sensitivity to grid refinement, scale oversampling and window
//! widening.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{dyadic_resample, Direction, SampledField};
use crate::kernels::{make_band_limited_kernel, KernelKind, KernelSpec};
use crate::norms_bt::{norm_b_variant, norm_f_variant, NormSettings, SpaceParams};
use crate::VERSION;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum NormFamily {
    F,
    B,
}

impl NormFamily {
    pub fn variants(self) -> Vec<u8> {
        match self {
            NormFamily::F => (1..=6).collect(),
            NormFamily::B => (1..=5).collect(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct NamedKernel {
    pub name: String,
    pub spec: KernelSpec,
}

/// Extra evaluations attached to every row.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ReportOptions {
    /// Recompute at `J + 1` after band-limited upsampling.
    pub refine: bool,
    /// Recompute with twice the scale nodes per octave.
    pub oversample: bool,
    /// Recompute with the level window widened by one octave each side.
    pub widen: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormRow {
    pub field: usize,
    pub kernel: String,
    pub family: NormFamily,
    pub variant: u8,
    pub value: f64,
    pub refined: Option<f64>,
    pub oversampled: Option<f64>,
    pub widened: Option<f64>,
}

/// Spread of `value_a / value_b` across the corpus for one kernel.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioStat {
    pub kernel: String,
    pub a: u8,
    pub b: u8,
    pub min: f64,
    pub max: f64,
    /// `max / min`.
    pub spread: f64,
    /// `max_i |r_i' / r_i - 1|` after refinement.
    pub refine_delta: Option<f64>,
    /// Same after oversampling.
    pub oversample_delta: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    pub version: String,
    pub config: serde_json::Value,
    pub family: NormFamily,
    pub rows: Vec<NormRow>,
    pub ratios: Vec<RatioStat>,
}

/// The kernel used on a grid of resolution `res`: the band-limited kernel
/// is rebuilt so its declared moment order follows the grid.
pub fn kernel_at(k: &KernelSpec, res: u32) -> Result<KernelSpec> {
    if k.kind == KernelKind::BandLimited {
        make_band_limited_kernel(k.n, res)
    } else {
        Ok(k.clone())
    }
}

fn eval(
    f: &SampledField,
    family: NormFamily,
    params: &SpaceParams,
    k: &KernelSpec,
    i: u8,
    s: &NormSettings,
) -> Result<f64> {
    let k = kernel_at(k, f.resolution())?;
    match family {
        NormFamily::F => norm_f_variant(f, params, &k, i, s),
        NormFamily::B => norm_b_variant(f, params, &k, i, s),
    }
}

/// Values of `variants` for every field and kernel, with the ratio spreads
/// of every variant pair.
#[allow(clippy::too_many_arguments)]
pub fn equivalence_report(
    corpus: &[SampledField],
    family: NormFamily,
    params: &SpaceParams,
    kernels: &[NamedKernel],
    variants: &[u8],
    settings: &NormSettings,
    options: ReportOptions,
    config: serde_json::Value,
) -> Result<NormReport> {
    if corpus.iter().any(|f| f.max_abs() == 0.0) {
        return Err(Error::invariant("corpus contains a zero field"));
    }
    let mut rows = Vec::new();
    let mut ratios = Vec::new();
    for nk in kernels {
        let per_field: Vec<Result<Vec<NormRow>>> = corpus
            .par_iter()
            .enumerate()
            .map(|(fi, f)| {
                let fine = if options.refine { Some(dyadic_resample(f, Direction::Up)?) } else { None };
                let dense = NormSettings { m: settings.m * 2, ..*settings };
                let wide = settings.widened();
                variants
                    .iter()
                    .map(|&i| {
                        let value = eval(f, family, params, &nk.spec, i, settings)?;
                        let refined =
                            fine.as_ref().map(|g| eval(g, family, params, &nk.spec, i, settings)).transpose()?;
                        let oversampled =
                            options.oversample.then(|| eval(f, family, params, &nk.spec, i, &dense)).transpose()?;
                        // a widened window may not resolve on this grid; report it as missing
                        let widened = if options.widen {
                            match eval(f, family, params, &nk.spec, i, &wide) {
                                Ok(v) => Some(v),
                                Err(Error::NumericalRange(msg)) => {
                                    log::warn!("widened window skipped: {msg}");
                                    None
                                }
                                Err(e) => return Err(e),
                            }
                        } else {
                            None
                        };
                        Ok(NormRow {
                            field: fi,
                            kernel: nk.name.clone(),
                            family,
                            variant: i,
                            value,
                            refined,
                            oversampled,
                            widened,
                        })
                    })
                    .collect()
            })
            .collect();
        let mut table: Vec<Vec<NormRow>> = Vec::with_capacity(corpus.len());
        for r in per_field {
            table.push(r?);
        }
        // no fields, no ratios
        for (ai, &a) in variants.iter().enumerate().filter(|_| !table.is_empty()) {
            for (bi, &b) in variants.iter().enumerate().skip(ai + 1) {
                let r: Vec<f64> = table.iter().map(|t| t[ai].value / t[bi].value).collect();
                let delta = |pick: fn(&NormRow) -> Option<f64>| -> Option<f64> {
                    let mut worst = 0.0f64;
                    for (t, &base) in table.iter().zip(&r) {
                        let ratio = pick(&t[ai])? / pick(&t[bi])?;
                        worst = worst.max((ratio / base - 1.0).abs());
                    }
                    Some(worst)
                };
                let min = r.iter().cloned().fold(f64::INFINITY, f64::min);
                let max = r.iter().cloned().fold(0.0, f64::max);
                ratios.push(RatioStat {
                    kernel: nk.name.clone(),
                    a,
                    b,
                    min,
                    max,
                    spread: max / min,
                    refine_delta: delta(|row| row.refined),
                    oversample_delta: delta(|row| row.oversampled),
                });
            }
        }
        rows.extend(table.into_iter().flatten());
    }
    Ok(NormReport { version: VERSION.to_string(), config, family, rows, ratios })
}

/// Comment lines `# btlh <version>` and `# config <json>` opening every CSV.
pub fn csv_preamble<W: Write>(w: &mut W, config: &serde_json::Value) -> Result<()> {
    writeln!(w, "# btlh {VERSION}")?;
    writeln!(w, "# config {}", serde_json::to_string(config)?)?;
    Ok(())
}

fn opt(v: Option<f64>) -> String {
    v.map_or(String::new(), |x| format!("{x:e}"))
}

impl NormReport {
    pub fn write_json<W: Write>(&self, w: W) -> Result<()> {
        serde_json::to_writer_pretty(w, self)?;
        Ok(())
    }

    /// One line per row, preceded by the preamble.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        csv_preamble(&mut w, &self.config)?;
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["field", "kernel", "family", "variant", "value", "refined", "oversampled", "widened"])?;
        for r in &self.rows {
            wtr.write_record([
                r.field.to_string(),
                r.kernel.clone(),
                format!("{:?}", r.family),
                r.variant.to_string(),
                format!("{:e}", r.value),
                opt(r.refined),
                opt(r.oversampled),
                opt(r.widened),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn ratio(&self, kernel: &str, a: u8, b: u8) -> Option<&RatioStat> {
        self.ratios.iter().find(|r| r.kernel == kernel && r.a == a && r.b == b)
    }
}
