//! Besov-Hausdorff (BH) and Triebel-Lizorkin-Hausdorff (FH) quasi-norms.
//!
//! Each norm is an infimum over admissible weights. It is evaluated by
//! [`optimize_weight`]: a fixed dictionary of normalized weights followed by
//! multiplicative coordinate descent, so every reported value is an upper
//! bound of the infimum, attained by a weight re-checked with
//! [`admissible_with`].

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{SampledField, ScaleGrid};
use crate::hausdorff::{
    admissible_with, check_hausdorff_params, choquet_upper_conservative, nontangential_node, normalize_weight_with,
    ConstraintSettings, WeightField,
};
use crate::kernels::{KernelKind, KernelSpec};
use crate::levels::{weighted_form, Entry, MixedOrder};
use crate::norms_bt::{functional_values, nodes, smooth_factor, tent_values, Functional, NormSettings, Sampling};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HausdorffFamily {
    Fh,
    Bh,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HausdorffSpaceParams {
    pub s: f64,
    pub tau: f64,
    pub p: f64,
    pub q: f64,
    pub a: f64,
    pub r: f64,
}

impl HausdorffSpaceParams {
    pub fn new(s: f64, tau: f64, p: f64, q: f64) -> Self {
        Self { s, tau, p, q, a: 3.0, r: 1.0 }
    }

    /// `(p v q)'`.
    pub fn conjugate(&self) -> f64 {
        crate::hausdorff::conjugate_exponent(self.p, self.q)
    }

    /// Exponent of the quasi-triangle inequality, `1 / (1 + (p v q)')`.
    pub fn aoki_v(&self) -> f64 {
        1.0 / (1.0 + self.conjugate())
    }

    pub fn validate(&self, family: HausdorffFamily, kernel: &KernelSpec, variant: u8) -> Result<()> {
        if family == HausdorffFamily::Fh && !(self.q > 1.0 && self.q.is_finite()) {
            return Err(Error::invariant(format!("FH needs q in (1, inf), got {}", self.q)));
        }
        if family == HausdorffFamily::Bh && self.q.is_infinite() {
            return Err(Error::invariant("BH needs q < inf"));
        }
        check_hausdorff_params(self.p, self.q, self.tau)?;
        let n = kernel.n as f64;
        let nt = n * self.tau;
        if !(self.s + nt < kernel.moment_order as f64 + 1.0) {
            return Err(Error::invariant(format!(
                "s + n tau = {} must be < R + 1 = {}",
                self.s + nt,
                kernel.moment_order + 1
            )));
        }
        let (base, rmax, max_variant, peetre, rform) = match family {
            HausdorffFamily::Fh => (n / self.p.min(self.q), self.p.min(self.q), 6, [2, 5], 6),
            HausdorffFamily::Bh => (n / self.p, self.p, 5, [2, 4], 5),
        };
        if variant == 0 || variant > max_variant {
            return Err(Error::invariant(format!("variant {variant} not in 1..={max_variant}")));
        }
        if peetre.contains(&variant) && !(self.a > base + nt) {
            return Err(Error::invariant(format!("variant {variant} needs a > {}, got a = {}", base + nt, self.a)));
        }
        if variant == rform {
            let bound = match family {
                HausdorffFamily::Fh => 2.0 * (base + nt),
                HausdorffFamily::Bh => 2.0 * base + nt,
            };
            if !(self.a > bound) {
                return Err(Error::invariant(format!("variant {variant} needs a > {bound}, got a = {}", self.a)));
            }
            if !(self.r > 0.0 && self.r < rmax) {
                return Err(Error::invariant(format!("variant {variant} needs r in (0, {rmax}), got r = {}", self.r)));
            }
            if !((self.a - nt) * self.r > 2.0 * n) {
                return Err(Error::invariant(format!(
                    "variant {variant} needs (a - n tau) r > 2n, got {}",
                    (self.a - nt) * self.r
                )));
            }
        }
        Ok(())
    }
}

/// `(functional, sampling)` behind each numbered FH variant.
pub fn fh_variant(i: u8) -> Result<(Functional, Sampling)> {
    use Functional::*;
    use Sampling::*;
    Ok(match i {
        1 => (LocalMeans, Continuous),
        2 => (Peetre, Continuous),
        3 => (Tent, Continuous),
        4 => (LocalMeans, Discrete),
        5 => (Peetre, Discrete),
        6 => (RForm, Discrete),
        _ => return Err(Error::invariant(format!("FH variant {i} not in 1..=6"))),
    })
}

/// `(functional, sampling)` behind each numbered BH variant.
pub fn bh_variant(i: u8) -> Result<(Functional, Sampling)> {
    use Functional::*;
    use Sampling::*;
    Ok(match i {
        1 => (LocalMeans, Continuous),
        2 => (Peetre, Continuous),
        3 => (LocalMeans, Discrete),
        4 => (Peetre, Discrete),
        5 => (RForm, Discrete),
        _ => return Err(Error::invariant(format!("BH variant {i} not in 1..=5"))),
    })
}

/// Inner functional of one variant for a fixed field, as a function of the
/// weight.
#[derive(Clone, Debug)]
pub struct HausdorffProblem {
    n: usize,
    resolution: u32,
    order: MixedOrder,
    weight_grid: ScaleGrid,
    entries: Vec<Entry>,
    /// weight row used by each entry
    rows: Vec<usize>,
    /// scale of each entry for the tent variant, whose values hold `|Phi_t f|`
    tent: Option<Vec<f64>>,
    p: f64,
    q: f64,
}

impl HausdorffProblem {
    pub fn new(
        f: &SampledField,
        kernel: &KernelSpec,
        family: HausdorffFamily,
        variant: u8,
        params: &HausdorffSpaceParams,
        settings: &NormSettings,
    ) -> Result<Self> {
        params.validate(family, kernel, variant)?;
        settings.check(f.resolution())?;
        let (functional, sampling) = match family {
            HausdorffFamily::Fh => fh_variant(variant)?,
            HausdorffFamily::Bh => bh_variant(variant)?,
        };
        let nds = nodes(settings, sampling);
        let tent = functional == Functional::Tent;
        let inner = if tent { Functional::LocalMeans } else { functional };
        let vals = functional_values(f, kernel, inner, &nds, settings, params.a, params.q, params.r)?;
        let m = settings.m.max(1) as usize;
        let rows: Vec<usize> = match sampling {
            Sampling::Continuous => (0..nds.len()).collect(),
            Sampling::Discrete => (0..nds.len()).map(|j| j * m).collect(),
        };
        let entries = nds
            .iter()
            .zip(vals)
            .map(|(nd, values)| Entry {
                level: nd.level,
                factor: smooth_factor(nd.level, params.s),
                measure: nd.measure,
                values,
            })
            .collect();
        Ok(Self {
            n: f.dim(),
            resolution: f.resolution(),
            order: match family {
                HausdorffFamily::Fh => MixedOrder::F,
                HausdorffFamily::Bh => MixedOrder::B,
            },
            weight_grid: ScaleGrid::new(settings.j_min, settings.j_max, settings.m.max(1))?,
            entries,
            rows,
            tent: tent.then(|| nds.iter().map(|nd| nd.t).collect()),
            p: params.p,
            q: params.q,
        })
    }

    /// Lattice on which weights for this problem live.
    pub fn weight_grid(&self) -> &ScaleGrid {
        &self.weight_grid
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn resolution(&self) -> u32 {
        self.resolution
    }

    /// Cells where some entry is nonzero, per weight row.
    pub fn support_mask(&self) -> Vec<bool> {
        let cells = 1usize << (self.resolution as usize * self.n);
        let mut mask = vec![false; cells * self.weight_grid.len()];
        for (e, &row) in self.entries.iter().zip(&self.rows) {
            for (x, &v) in e.values.iter().enumerate() {
                if v != 0.0 {
                    mask[row * cells + x] = true;
                }
            }
        }
        mask
    }

    /// Functional value for the weight `omega`.
    pub fn evaluate(&self, omega: &WeightField) -> Result<f64> {
        if omega.scales() != &self.weight_grid || omega.resolution() != self.resolution || omega.dim() != self.n {
            return Err(Error::invariant("weight lattice does not match the problem"));
        }
        match &self.tent {
            None => {
                let w: Vec<Vec<f64>> = self.rows.iter().map(|&r| omega.row(r).to_vec()).collect();
                weighted_form(&self.entries, Some(&w), self.n, self.resolution, self.p, self.q, self.order)
            }
            Some(ts) => {
                let side = 1usize << self.resolution;
                let entries: Vec<Entry> = self
                    .entries
                    .iter()
                    .zip(&self.rows)
                    .zip(ts)
                    .map(|((e, &r), &t)| {
                        let g: Vec<f64> = e
                            .values
                            .iter()
                            .zip(omega.row(r))
                            .map(|(&v, &w)| {
                                if v == 0.0 {
                                    0.0
                                } else if w == 0.0 {
                                    f64::INFINITY
                                } else {
                                    v / w
                                }
                            })
                            .collect();
                        Entry { values: tent_values(&g, self.n, side, t, self.q), ..e.clone() }
                    })
                    .collect();
                weighted_form(&entries, None, self.n, self.resolution, self.p, self.q, self.order)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerSettings {
    pub sweeps: usize,
    /// Multiplicative step of one coordinate move.
    pub step: f64,
    /// Finest level of the spatial boxes; `None` picks 4 for n=1, 1 for n=2.
    pub box_levels: Option<u32>,
    /// Off-box values of the cone profiles in the dictionary.
    pub floors: Vec<f64>,
    pub constraint: ConstraintSettings,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        Self {
            sweeps: 8,
            step: 2f64.powf(0.25),
            box_levels: None,
            floors: vec![0.25, 0.5],
            constraint: ConstraintSettings::default(),
        }
    }
}

impl OptimizerSettings {
    fn box_levels(&self, n: usize) -> u32 {
        self.box_levels.unwrap_or(if n == 1 { 4 } else { 1 })
    }
}

/// Normalized candidate weights; the first member is the constant weight.
#[derive(Clone, Debug)]
pub struct WeightDictionary {
    pub members: Vec<WeightField>,
    pub labels: Vec<String>,
}

impl WeightDictionary {
    /// Constant weight plus cone profiles: 1 on `{x in Q, t <= l(Q)}` and a
    /// floor elsewhere, for the search boxes `Q` down to the configured level.
    pub fn standard(
        n: usize,
        resolution: u32,
        scales: &ScaleGrid,
        p: f64,
        q: f64,
        tau: f64,
        settings: &OptimizerSettings,
    ) -> Result<Self> {
        let cells = 1usize << (resolution as usize * n);
        let mut raw = vec![(WeightField::constant(n, resolution, *scales, 1.0)?, "constant".to_string())];
        let nodes = scales.nodes();
        let levels = settings.box_levels(n).min(resolution);
        if levels >= 1 {
            for &floor in &settings.floors {
                for b in search_boxes(n, resolution, levels).into_iter().filter(|b| b.level >= 1) {
                    let mut vals = vec![floor; cells * nodes.len()];
                    for (ni, nd) in nodes.iter().enumerate() {
                        if nd.t <= b.side {
                            for &x in &b.cells {
                                vals[ni * cells + x] = 1.0;
                            }
                        }
                    }
                    raw.push((
                        WeightField::new(n, resolution, *scales, vals)?,
                        format!("cone {} floor={floor}", b.label),
                    ));
                }
            }
        }
        let normalized: Vec<Result<WeightField>> =
            raw.par_iter().map(|(w, _)| normalize_weight_with(w, p, q, tau, &settings.constraint)).collect();
        let mut members = Vec::with_capacity(raw.len());
        for r in normalized {
            members.push(r?);
        }
        Ok(Self { members, labels: raw.into_iter().map(|(_, l)| l).collect() })
    }
}

/// Cube of the weight search: dyadic side, corners on the half-side grid.
struct SearchBox {
    level: u32,
    side: f64,
    label: String,
    cells: Vec<usize>,
}

/// Whole torus, then for each level `1..=levels` the cubes of side `2^-l`
/// whose corners lie on the grid of step `2^-(l+1)` (dyadic cubes and their
/// half-shifted translates), cells taken periodically.
fn search_boxes(n: usize, resolution: u32, levels: u32) -> Vec<SearchBox> {
    let side = 1usize << resolution;
    let mut out =
        vec![SearchBox { level: 0, side: 1.0, label: "j=0".into(), cells: (0..side.pow(n as u32)).collect() }];
    for l in 1..=levels.min(resolution.saturating_sub(1)) {
        let len = side >> l;
        let step = len / 2;
        let starts: Vec<usize> = (0..side / step).map(|k| k * step).collect();
        let axis = |st: usize| -> Vec<usize> { (0..len).map(|i| (st + i) % side).collect() };
        if n == 1 {
            for &a in &starts {
                out.push(SearchBox {
                    level: l,
                    side: 0.5f64.powi(l as i32),
                    label: format!("j={l} at={a}"),
                    cells: axis(a),
                });
            }
        } else {
            for &a in &starts {
                for &b in &starts {
                    let mut cells = Vec::with_capacity(len * len);
                    for r in axis(a) {
                        for c in axis(b) {
                            cells.push(r * side + c);
                        }
                    }
                    out.push(SearchBox {
                        level: l,
                        side: 0.5f64.powi(l as i32),
                        label: format!("j={l} at=({a},{b})"),
                        cells,
                    });
                }
            }
        }
    }
    out
}

#[derive(Clone, Debug)]
pub struct Optimized {
    pub weight: WeightField,
    /// Objective at `weight`: an upper bound of the infimum.
    pub value: f64,
    /// Best value after the dictionary pass, then after each sweep.
    pub trace: Vec<f64>,
    pub dictionary_index: usize,
    pub moves_accepted: usize,
    /// `1 - constraint value` of the returned weight.
    pub margin: f64,
}

/// Accepted weight values with their per-node nontangential maxima.
struct DescentState {
    values: Vec<f64>,
    nt: Vec<Vec<f64>>,
}

/// Upper bound of `inf objective(omega)` over admissible weights.
pub fn optimize_weight<F>(
    objective: F,
    dictionary: &WeightDictionary,
    p: f64,
    q: f64,
    tau: f64,
    mask: Option<&[bool]>,
    settings: &OptimizerSettings,
) -> Result<Optimized>
where
    F: Fn(&WeightField) -> Result<f64> + Sync,
{
    let pq = check_hausdorff_params(p, q, tau)?;
    if dictionary.members.is_empty() {
        return Err(Error::invariant("empty weight dictionary"));
    }
    let masked: Vec<WeightField> = dictionary
        .members
        .iter()
        .map(|w| match mask {
            Some(m) => w.clone().with_mask(m.to_vec()),
            None => Ok(w.clone()),
        })
        .collect::<Result<_>>()?;
    let scores: Vec<Result<f64>> =
        masked.par_iter().map(|w| if w.violates_mask() { Ok(f64::INFINITY) } else { objective(w) }).collect();
    let mut best_idx = 0;
    let mut best_val = f64::INFINITY;
    for (i, s) in scores.into_iter().enumerate() {
        let s = s?;
        if s < best_val {
            best_val = s;
            best_idx = i;
        }
    }
    if !best_val.is_finite() && best_idx == 0 && masked[0].violates_mask() {
        return Err(Error::invariant("no dictionary weight satisfies the mask"));
    }
    let mut current = masked[best_idx].clone();
    let mut trace = vec![best_val];
    let mut moves = 0;

    let n = current.dim();
    let res = current.resolution();
    let side = 1usize << res;
    let cells = current.cells();
    let scales = *current.scales();
    let nodes = scales.nodes();
    let m = scales.m as usize;
    let d = (n as f64 * tau * pq).min(n as f64);
    let cs = &settings.constraint;

    let nt_row =
        |vals: &[f64], node: usize| nontangential_node(&vals[node * cells..(node + 1) * cells], n, side, nodes[node].t);
    let mut state = DescentState {
        values: current.values().to_vec(),
        nt: (0..nodes.len()).map(|i| nt_row(current.values(), i)).collect(),
    };
    let constraint_of = |nt: &[Vec<f64>], c: f64| -> Result<f64> {
        let mut comb = vec![0.0f64; cells];
        for row in nt {
            for (o, &v) in comb.iter_mut().zip(row) {
                *o = o.max(v);
            }
        }
        let integrand: Vec<f64> = comb.iter().map(|v| (c * v).powf(pq)).collect();
        choquet_upper_conservative(&integrand, n, res, d, cs)
    };

    let boxes: Vec<Vec<usize>> =
        search_boxes(n, res, settings.box_levels(n).min(res)).into_iter().map(|b| b.cells).collect();
    let octaves: Vec<usize> = (0..(scales.j_max - scales.j_min + 1) as usize).collect();

    if best_val.is_finite() && best_val > 0.0 {
        for _ in 0..settings.sweeps {
            let mut accepted_this_sweep = 0;
            for cells_in in &boxes {
                for &oct in &octaves {
                    for factor in [settings.step, 1.0 / settings.step] {
                        let mut vals = state.values.clone();
                        let mut nt = state.nt.clone();
                        for node in oct * m..(oct + 1) * m {
                            for &x in cells_in {
                                vals[node * cells + x] *= factor;
                            }
                            nt[node] = nt_row(&vals, node);
                        }
                        let upper = constraint_of(&nt, 1.0)?;
                        if !(upper > 0.0) {
                            continue;
                        }
                        let mut c = upper.powf(-1.0 / pq);
                        while constraint_of(&nt, c)? > 1.0 {
                            c *= 1.0 - f64::EPSILON;
                        }
                        let cand_vals: Vec<f64> = vals.iter().map(|v| v * c).collect();
                        let mut cand = WeightField::new(n, res, scales, cand_vals)?;
                        if let Some(mk) = mask {
                            cand = cand.with_mask(mk.to_vec())?;
                        }
                        let v = objective(&cand)?;
                        if v < best_val {
                            best_val = v;
                            state.values = cand.values().to_vec();
                            state.nt = nt.into_iter().map(|row| row.into_iter().map(|x| x * c).collect()).collect();
                            current = cand;
                            moves += 1;
                            accepted_this_sweep += 1;
                            break;
                        }
                    }
                }
            }
            trace.push(best_val);
            if accepted_this_sweep == 0 {
                break;
            }
        }
    }
    let (ok, margin) = admissible_with(&current, p, q, tau, cs)?;
    if !ok {
        return Err(Error::range(format!("optimizer returned an inadmissible weight (margin {margin})")));
    }
    Ok(Optimized { weight: current, value: best_val, trace, dictionary_index: best_idx, moves_accepted: moves, margin })
}

/// Hausdorff norm value with the optimizer record.
#[derive(Clone, Debug)]
pub struct HausdorffNorm {
    pub value: f64,
    pub result: Optimized,
}

/// FH or BH variant `i`.
pub fn norm_hausdorff_variant(
    f: &SampledField,
    family: HausdorffFamily,
    params: &HausdorffSpaceParams,
    kernel: &KernelSpec,
    variant: u8,
    settings: &NormSettings,
    opt: &OptimizerSettings,
) -> Result<HausdorffNorm> {
    let problem = HausdorffProblem::new(f, kernel, family, variant, params, settings)?;
    let dict = WeightDictionary::standard(
        f.dim(),
        f.resolution(),
        problem.weight_grid(),
        params.p,
        params.q,
        params.tau,
        opt,
    )?;
    let result = optimize_weight(|w| problem.evaluate(w), &dict, params.p, params.q, params.tau, None, opt)?;
    Ok(HausdorffNorm { value: result.value, result })
}

pub fn norm_fh_variant(
    f: &SampledField,
    params: &HausdorffSpaceParams,
    kernel: &KernelSpec,
    variant: u8,
    settings: &NormSettings,
    opt: &OptimizerSettings,
) -> Result<HausdorffNorm> {
    norm_hausdorff_variant(f, HausdorffFamily::Fh, params, kernel, variant, settings, opt)
}

pub fn norm_bh_variant(
    f: &SampledField,
    params: &HausdorffSpaceParams,
    kernel: &KernelSpec,
    variant: u8,
    settings: &NormSettings,
    opt: &OptimizerSettings,
) -> Result<HausdorffNorm> {
    norm_hausdorff_variant(f, HausdorffFamily::Bh, params, kernel, variant, settings, opt)
}

fn require_band_limited(phi: &KernelSpec) -> Result<()> {
    if phi.kind != KernelKind::BandLimited {
        return Err(Error::invariant("base norms need the band-limited kernel"));
    }
    Ok(())
}

/// Defining FH norm with the band-limited `phi`.
pub fn norm_fh_base(
    f: &SampledField,
    params: &HausdorffSpaceParams,
    phi: &KernelSpec,
    settings: &NormSettings,
    opt: &OptimizerSettings,
) -> Result<HausdorffNorm> {
    require_band_limited(phi)?;
    norm_fh_variant(f, params, phi, 4, settings, opt)
}

/// Defining BH norm with the band-limited `phi`.
pub fn norm_bh_base(
    f: &SampledField,
    params: &HausdorffSpaceParams,
    phi: &KernelSpec,
    settings: &NormSettings,
    opt: &OptimizerSettings,
) -> Result<HausdorffNorm> {
    require_band_limited(phi)?;
    norm_bh_variant(f, params, phi, 3, settings, opt)
}

/// `(sum values^v)^{1/v}`.
pub fn aoki_combine(values: &[f64], v: f64) -> Result<f64> {
    if !(v > 0.0 && v <= 1.0) {
        return Err(Error::invariant(format!("exponent v = {v} must lie in (0, 1]")));
    }
    if values.iter().any(|&x| !(x >= 0.0)) {
        return Err(Error::invariant("aoki_combine needs nonnegative values"));
    }
    if let [x] = values {
        return Ok(*x);
    }
    Ok(values.iter().map(|x| x.powf(v)).sum::<f64>().powf(1.0 / v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::make_band_limited_kernel;
    use crate::norms_bt::{norm_b_base, norm_f_base, SpaceParams};

    fn field(res: u32) -> SampledField {
        SampledField::from_fn(1, res, |x| {
            let t = 2.0 * std::f64::consts::PI * x[0];
            (3.0 * t).sin() + 0.5 * (7.0 * t + 0.3).cos() + 0.25 * (12.0 * t).sin()
        })
        .unwrap()
        .with_mean_zero()
        .unwrap()
    }

    #[test]
    fn zero_field_has_zero_norm() {
        let phi = make_band_limited_kernel(1, 6).unwrap();
        let f = SampledField::zeros(1, 6).unwrap();
        let st = NormSettings::for_resolution(6);
        let hp = HausdorffSpaceParams::new(0.5, 0.1, 2.0, 2.0);
        let opt = OptimizerSettings::default();
        for i in 1..=6 {
            assert_eq!(norm_fh_variant(&f, &hp, &phi, i, &st, &opt).unwrap().value, 0.0);
        }
        for i in 1..=5 {
            assert_eq!(norm_bh_variant(&f, &hp, &phi, i, &st, &opt).unwrap().value, 0.0);
        }
    }

    #[test]
    fn tau_zero_recovers_classical_norms() {
        let phi = make_band_limited_kernel(1, 7).unwrap();
        let f = field(7);
        let st = NormSettings::for_resolution(7);
        let opt = OptimizerSettings::default();
        let hp = HausdorffSpaceParams::new(0.5, 0.0, 2.0, 3.0);
        let sp = SpaceParams::new(0.5, 0.0, 2.0, 3.0);
        let fh = norm_fh_base(&f, &hp, &phi, &st, &opt).unwrap();
        let fc = norm_f_base(&f, &sp, &phi, &st).unwrap();
        assert!((fh.value - fc).abs() <= 1e-6 * fc, "{} vs {fc}", fh.value);
        let bh = norm_bh_base(&f, &hp, &phi, &st, &opt).unwrap();
        let bc = norm_b_base(&f, &sp, &phi, &st).unwrap();
        assert!((bh.value - bc).abs() <= 1e-6 * bc, "{} vs {bc}", bh.value);
    }

    #[test]
    fn homogeneity_and_monotone_trace() {
        let phi = make_band_limited_kernel(1, 7).unwrap();
        let f = field(7);
        let st = NormSettings::for_resolution(7);
        let opt = OptimizerSettings::default();
        let hp = HausdorffSpaceParams::new(0.0, 0.2, 2.0, 2.0);
        let a = norm_fh_variant(&f, &hp, &phi, 4, &st, &opt).unwrap();
        let b = norm_fh_variant(&f.scaled((-2.0).into()), &hp, &phi, 4, &st, &opt).unwrap();
        assert!((b.value - 2.0 * a.value).abs() <= 1e-12 * a.value);
        assert!(a.result.trace.windows(2).all(|w| w[1] <= w[0]));
        assert!(a.result.margin >= 0.0);
    }

    #[test]
    fn per_weight_domination_and_monotonicity() {
        let phi = make_band_limited_kernel(1, 7).unwrap();
        let f = field(7);
        let st = NormSettings::for_resolution(7);
        let hp = HausdorffSpaceParams::new(0.5, 0.2, 2.0, 2.0);
        let lm = HausdorffProblem::new(&f, &phi, HausdorffFamily::Fh, 1, &hp, &st).unwrap();
        let pe = HausdorffProblem::new(&f, &phi, HausdorffFamily::Fh, 2, &hp, &st).unwrap();
        let sg = *lm.weight_grid();
        let cells = 128;
        let vals: Vec<f64> = (0..cells * sg.len()).map(|i| 0.2 + ((i * 31) % 17) as f64 / 10.0).collect();
        let w = WeightField::new(1, 7, sg, vals).unwrap();
        assert!(lm.evaluate(&w).unwrap() <= pe.evaluate(&w).unwrap());
        let bigger = WeightField::new(
            1,
            7,
            *w.scales(),
            w.values().iter().enumerate().map(|(i, v)| if i % 3 == 0 { v * 1.5 } else { *v }).collect(),
        )
        .unwrap();
        for prob in [&lm, &pe] {
            assert!(prob.evaluate(&bigger).unwrap() <= prob.evaluate(&w).unwrap());
        }
    }

    #[test]
    fn constant_objective_keeps_first_member() {
        let sg = ScaleGrid::new(0, 3, 2).unwrap();
        let opt = OptimizerSettings::default();
        let dict = WeightDictionary::standard(1, 5, &sg, 2.0, 2.0, 0.25, &opt).unwrap();
        let r = optimize_weight(|_| Ok(3.5), &dict, 2.0, 2.0, 0.25, None, &opt).unwrap();
        assert_eq!(r.dictionary_index, 0);
        assert_eq!(r.value, 3.5);
        assert_eq!(r.moves_accepted, 0);
        assert_eq!(r.weight, dict.members[0]);
    }

    #[test]
    fn aoki_examples() {
        assert_eq!(aoki_combine(&[1.7], 0.4).unwrap(), 1.7);
        assert_eq!(aoki_combine(&[0.0, 0.0], 0.4).unwrap(), 0.0);
        let v = 1.0 / 3.0;
        assert!((aoki_combine(&[2.0, 2.0], v).unwrap() - 2f64.powf(1.0 / v) * 2.0).abs() < 1e-12);
        assert!(aoki_combine(&[-1.0], 0.5).is_err());
        assert_eq!(HausdorffSpaceParams::new(0.0, 0.0, 2.0, 2.0).aoki_v(), 1.0 / 3.0);
    }

    #[test]
    fn parameter_violations_name_the_bound() {
        let phi = make_band_limited_kernel(1, 6).unwrap();
        let mut hp = HausdorffSpaceParams::new(0.0, 0.3, 2.0, 2.0);
        hp.a = 0.5;
        let e = hp.validate(HausdorffFamily::Fh, &phi, 2).unwrap_err().to_string();
        assert!(e.contains("a >"), "{e}");
        let hp = HausdorffSpaceParams::new(0.0, 0.7, 2.0, 2.0);
        assert!(hp.validate(HausdorffFamily::Bh, &phi, 1).is_err());
        let hp = HausdorffSpaceParams::new(0.0, 0.1, 2.0, 1.0);
        assert!(hp.validate(HausdorffFamily::Fh, &phi, 1).is_err());
    }
}
