//! Run configuration. A JSON document; every command-line flag overrides one
//! key of it.

use std::path::PathBuf;

use btlh_core::axb::{GSpace, GSpaceParams, Side};
use btlh_core::corpus::{CorpusKind, CorpusSpec};
use btlh_core::kernels::{gaussian_local_means, gaussian_radial_diff, make_band_limited_kernel, KernelSpec};
use btlh_core::norms_bt::{validate_b, validate_f, NormSettings, SpaceParams};
use btlh_core::norms_hausdorff::{HausdorffFamily, HausdorffSpaceParams, OptimizerSettings};
use btlh_core::report::{NamedKernel, NormFamily, ReportOptions};
use btlh_core::seqnorm::{SeqSpace, SeqSpaceParams};
use btlh_core::wavelet::{catalog_names, AdmissibleSpace};
use btlh_core::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpaceSel {
    #[serde(rename = "bt-f")]
    BtF,
    #[serde(rename = "bt-b")]
    BtB,
    #[serde(rename = "fh")]
    Fh,
    #[serde(rename = "bh")]
    Bh,
    #[serde(rename = "g-l")]
    GL,
    #[serde(rename = "g-p")]
    GP,
    #[serde(rename = "g-lh")]
    GLh,
    #[serde(rename = "g-ph")]
    GPh,
    #[serde(rename = "seq-f")]
    SeqF,
    #[serde(rename = "seq-b")]
    SeqB,
    #[serde(rename = "seq-fh")]
    SeqFh,
    #[serde(rename = "seq-bh")]
    SeqBh,
}

impl SpaceSel {
    pub fn family(self) -> Option<NormFamily> {
        match self {
            SpaceSel::BtF => Some(NormFamily::F),
            SpaceSel::BtB => Some(NormFamily::B),
            _ => None,
        }
    }

    pub fn hausdorff(self) -> Option<HausdorffFamily> {
        match self {
            SpaceSel::Fh => Some(HausdorffFamily::Fh),
            SpaceSel::Bh => Some(HausdorffFamily::Bh),
            _ => None,
        }
    }

    pub fn group(self) -> Option<GSpace> {
        match self {
            SpaceSel::GL => Some(GSpace::L),
            SpaceSel::GP => Some(GSpace::P),
            SpaceSel::GLh => Some(GSpace::Lh),
            SpaceSel::GPh => Some(GSpace::Ph),
            _ => None,
        }
    }

    pub fn sequence(self) -> Option<SeqSpace> {
        match self {
            SpaceSel::SeqF => Some(SeqSpace::F),
            SpaceSel::SeqB => Some(SeqSpace::B),
            SpaceSel::SeqFh => Some(SeqSpace::Fh),
            SpaceSel::SeqBh => Some(SeqSpace::Bh),
            _ => None,
        }
    }

    /// Function-space family whose wavelet threshold applies.
    pub fn admissible(self) -> AdmissibleSpace {
        match self {
            SpaceSel::BtF | SpaceSel::SeqF | SpaceSel::GP => AdmissibleSpace::F,
            SpaceSel::BtB | SpaceSel::SeqB | SpaceSel::GL => AdmissibleSpace::B,
            SpaceSel::Fh | SpaceSel::SeqFh | SpaceSel::GPh => AdmissibleSpace::Fh,
            SpaceSel::Bh | SpaceSel::SeqBh | SpaceSel::GLh => AdmissibleSpace::Bh,
        }
    }

    /// Variants available for this space; spaces with a single
    /// characterization report variant 0.
    pub fn all_variants(self) -> Vec<u8> {
        match self {
            SpaceSel::BtF | SpaceSel::Fh => (1..=6).collect(),
            SpaceSel::BtB | SpaceSel::Bh => (1..=5).collect(),
            _ => vec![0],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    pub s: f64,
    pub tau: f64,
    pub p: f64,
    pub q: f64,
    /// Peetre decay exponent.
    pub a: f64,
    /// Inner exponent of the r-integrated forms.
    pub r: f64,
}

impl Default for Params {
    fn default() -> Self {
        Self { s: 0.0, tau: 0.0, p: 2.0, q: 2.0, a: 3.0, r: 1.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum KernelSel {
    Band,
    GaussLocalMeans { order: u32, width: f64 },
    GaussRadialDiff { width: f64 },
}

impl KernelSel {
    pub fn name(&self) -> String {
        match self {
            KernelSel::Band => "band".into(),
            KernelSel::GaussLocalMeans { order, width } => format!("gauss_lm{order}_w{width}"),
            KernelSel::GaussRadialDiff { width } => format!("gauss_rd_w{width}"),
        }
    }

    pub fn build(&self, n: usize, res: u32) -> Result<KernelSpec> {
        match *self {
            KernelSel::Band => make_band_limited_kernel(n, res),
            KernelSel::GaussLocalMeans { order, width } => gaussian_local_means(n, order, width),
            KernelSel::GaussRadialDiff { width } => gaussian_radial_diff(n, width),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub n: usize,
    pub resolution: u32,
}

impl Default for Grid {
    fn default() -> Self {
        Self { n: 1, resolution: 8 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scales {
    pub j_min: i32,
    pub j_max: i32,
    pub m: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusCfg {
    pub count: usize,
    pub seed: u64,
    pub kinds: Vec<CorpusKind>,
    /// Defaults to `2^{J-3}`.
    pub max_freq: Option<f64>,
    /// Field files (`.bin` or 1-D `.csv`) used instead of generated members.
    pub files: Vec<PathBuf>,
}

impl Default for CorpusCfg {
    fn default() -> Self {
        Self {
            count: 4,
            seed: 0,
            kinds: vec![CorpusKind::BandLimited, CorpusKind::ModulatedGaussian, CorpusKind::Atom],
            max_freq: None,
            files: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CapacityCfg {
    /// Cell indices of the set, row-major on the configured grid.
    pub cells: Vec<usize>,
    /// Set file; takes precedence over `cells`.
    pub set_file: Option<PathBuf>,
    pub d: f64,
}

impl Default for CapacityCfg {
    fn default() -> Self {
        Self { cells: Vec::new(), set_file: None, d: 0.5 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GroupCfg {
    pub side: Side,
    pub z: Vec<f64>,
    pub r: Vec<f64>,
    /// Width of the Mexican-hat analyzing wavelet at scale 1. Wider hats are
    /// truncated by the unit cell and stop being resolvable at small scales.
    pub sigma: f64,
}

impl Default for GroupCfg {
    fn default() -> Self {
        Self { side: Side::Left, z: Vec::new(), r: vec![0.25, 0.5, 2.0, 4.0], sigma: 0.125 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Formats {
    pub json: bool,
    pub csv: bool,
}

impl Default for Formats {
    fn default() -> Self {
        Self { json: true, csv: true }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub space: SpaceSel,
    pub params: Params,
    pub kernels: Vec<KernelSel>,
    /// Empty selects every variant of the space.
    pub variants: Vec<u8>,
    pub wavelet: String,
    pub grid: Grid,
    /// Defaults to `[0, J-3]` with 4 nodes per octave, `[0, J-5]` for group
    /// spaces, whose Mexican hat is wider than the band-limited kernel.
    pub scales: Option<Scales>,
    pub corpus: CorpusCfg,
    pub options: ReportOptions,
    pub optimizer: OptimizerSettings,
    pub capacity: CapacityCfg,
    pub group: GroupCfg,
    pub formats: Formats,
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            space: SpaceSel::BtF,
            params: Params::default(),
            kernels: vec![KernelSel::Band],
            variants: Vec::new(),
            wavelet: "bior3.11".into(),
            grid: Grid::default(),
            scales: None,
            corpus: CorpusCfg::default(),
            options: ReportOptions::default(),
            optimizer: OptimizerSettings::default(),
            capacity: CapacityCfg::default(),
            group: GroupCfg::default(),
            formats: Formats::default(),
            out: PathBuf::from("out"),
        }
    }
}

impl RunConfig {
    /// Explicit scales, filling the default window.
    pub fn resolve(mut self) -> Self {
        if self.scales.is_none() {
            let d = NormSettings::for_resolution(self.grid.resolution);
            let j_max = if self.space.group().is_some() { d.j_max - 2 } else { d.j_max };
            self.scales = Some(Scales { j_min: d.j_min, j_max: j_max.max(0), m: d.m });
        }
        if self.variants.is_empty() {
            self.variants = self.space.all_variants();
        }
        if self.corpus.max_freq.is_none() {
            self.corpus.max_freq = Some(2f64.powi(self.grid.resolution as i32 - 3));
        }
        if self.group.z.is_empty() {
            self.group.z = vec![0.0; self.grid.n];
        }
        self
    }

    pub fn settings(&self) -> NormSettings {
        let s = self.scales.as_ref().expect("resolved config");
        NormSettings::new(s.j_min, s.j_max, s.m)
    }

    pub fn corpus_spec(&self) -> CorpusSpec {
        CorpusSpec {
            n: self.grid.n,
            count: self.corpus.count,
            seed: self.corpus.seed,
            kinds: self.corpus.kinds.clone(),
            max_freq: self.corpus.max_freq.unwrap_or(1.0),
        }
    }

    pub fn space_params(&self) -> SpaceParams {
        let p = &self.params;
        SpaceParams { s: p.s, tau: p.tau, p: p.p, q: p.q, a: p.a, r: p.r }
    }

    pub fn hausdorff_params(&self) -> HausdorffSpaceParams {
        let p = &self.params;
        HausdorffSpaceParams { s: p.s, tau: p.tau, p: p.p, q: p.q, a: p.a, r: p.r }
    }

    /// Group parameters are taken as given, not shifted.
    pub fn group_params(&self) -> GSpaceParams {
        let p = &self.params;
        GSpaceParams::new(p.s, p.tau, p.p, p.q, p.a)
    }

    pub fn seq_params(&self) -> SeqSpaceParams {
        let p = &self.params;
        SeqSpaceParams { s: p.s, tau: p.tau, p: p.p, q: p.q, a: p.a }
    }

    pub fn named_kernels(&self, res: u32) -> Result<Vec<NamedKernel>> {
        self.kernels.iter().map(|k| Ok(NamedKernel { name: k.name(), spec: k.build(self.grid.n, res)? })).collect()
    }

    /// Checks everything that does not need field data.
    pub fn validate(&self) -> Result<()> {
        let n = self.grid.n;
        if n != 1 && n != 2 {
            return Err(Error::invariant(format!("grid.n must be 1 or 2, got {n}")));
        }
        let res = self.grid.resolution;
        if !(3..=14).contains(&res) {
            return Err(Error::invariant(format!("grid.resolution must lie in [3, 14], got {res}")));
        }
        if !catalog_names().contains(&self.wavelet.as_str()) {
            return Err(Error::invariant(format!("unknown wavelet '{}'", self.wavelet)));
        }
        if self.kernels.is_empty() {
            return Err(Error::invariant("at least one kernel is required"));
        }
        let allowed = self.space.all_variants();
        if let Some(v) = self.variants.iter().find(|v| !allowed.contains(v)) {
            return Err(Error::invariant(format!("variant {v} not available for {:?}", self.space)));
        }
        let s = self.settings();
        if s.j_min < 0 || s.j_min > s.j_max || s.j_max > res as i32 || s.m == 0 {
            return Err(Error::invariant(format!(
                "scales [{}, {}] with m = {} invalid on J = {res}",
                s.j_min, s.j_max, s.m
            )));
        }
        if !(self.capacity.d >= 0.0 && self.capacity.d <= n as f64) {
            return Err(Error::invariant(format!("capacity.d = {} outside [0, {n}]", self.capacity.d)));
        }
        if self.group.z.len() != n {
            return Err(Error::invariant(format!("group.z needs {n} entries, got {}", self.group.z.len())));
        }
        if self.group.r.iter().any(|r| !(*r > 0.0)) {
            return Err(Error::invariant("group.r entries must be positive"));
        }
        let kernels = self.named_kernels(res)?;
        for &v in &self.variants {
            for k in &kernels {
                match self.space {
                    SpaceSel::BtF => validate_f(&self.space_params(), &k.spec, v)?,
                    SpaceSel::BtB => validate_b(&self.space_params(), &k.spec, v)?,
                    SpaceSel::Fh | SpaceSel::Bh => {
                        self.hausdorff_params().validate(self.space.hausdorff().unwrap(), &k.spec, v)?
                    }
                    _ => {}
                }
            }
        }
        if let Some(g) = self.space.group() {
            self.group_params().validate(g, n)?;
        }
        if let Some(sq) = self.space.sequence() {
            self.seq_params().validate(sq, n)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_round_trips() {
        let c = RunConfig::default().resolve();
        let text = serde_json::to_string(&c).unwrap();
        let back: RunConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, c);
        c.validate().unwrap();
    }

    #[test]
    fn partial_document_fills_defaults() {
        let c: RunConfig = serde_json::from_str(r#"{"space": "bt-b", "grid": {"n": 2, "resolution": 6}}"#).unwrap();
        let c = c.resolve();
        assert_eq!(c.variants, vec![1, 2, 3, 4, 5]);
        assert_eq!(c.scales.as_ref().unwrap().j_max, 3);
        assert_eq!(c.group.z, vec![0.0, 0.0]);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"spaec": "bt-b"}"#).is_err());
    }

    #[test]
    fn bad_variant_rejected() {
        let c = RunConfig { variants: vec![6], space: SpaceSel::BtB, ..Default::default() }.resolve();
        assert!(matches!(c.validate(), Err(Error::Invariant(_))));
    }
}
