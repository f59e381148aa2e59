//! Besov-type and Triebel-Lizorkin-type quasi-norms through every local-means
//! characterization.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft;
use crate::grid::{SampledField, ScaleGrid};
use crate::kernels::{convolve_spectrum, KernelKind, KernelSpec};
use crate::levels::{cube_sup, CubeRange, Entry, MixedOrder};
use crate::maximal::{peetre_sup, sorted_offsets, PeetreVariant};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpaceParams {
    pub s: f64,
    pub tau: f64,
    pub p: f64,
    pub q: f64,
    /// Peetre decay exponent.
    pub a: f64,
    /// Inner exponent of the r-integrated forms.
    pub r: f64,
}

impl SpaceParams {
    pub fn new(s: f64, tau: f64, p: f64, q: f64) -> Self {
        Self { s, tau, p, q, a: 3.0, r: 1.0 }
    }
}

/// Level window `[j_min, j_max]` for frequency levels and, unless
/// overridden, for cube levels.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormSettings {
    pub j_min: i32,
    pub j_max: i32,
    /// Scale nodes per octave for the continuous characterizations.
    pub m: u32,
    pub peetre: PeetreVariant,
    /// Cube levels of the outer sup; defaults to the frequency window.
    pub cubes: Option<CubeRange>,
}

impl NormSettings {
    pub fn new(j_min: i32, j_max: i32, m: u32) -> Self {
        Self { j_min, j_max, m, peetre: PeetreVariant::Sharp, cubes: None }
    }

    /// Window `[0, J-3]`, `m = 4`.
    pub fn for_resolution(resolution: u32) -> Self {
        Self::new(0, resolution as i32 - 3, 4)
    }

    pub fn cube_range(&self) -> CubeRange {
        self.cubes.unwrap_or(CubeRange { lo: self.j_min, hi: self.j_max })
    }

    /// One more octave on each side, `j_min` kept at 0 or above.
    pub fn widened(&self) -> Self {
        Self { j_min: (self.j_min - 1).max(0), j_max: self.j_max + 1, cubes: None, ..*self }
    }

    pub(crate) fn check(&self, resolution: u32) -> Result<()> {
        if self.j_min > self.j_max {
            return Err(Error::invariant("degenerate level window"));
        }
        if self.j_min < 0 || self.j_max as i64 > resolution as i64 {
            return Err(Error::invariant(format!(
                "level window [{}, {}] outside [0, {resolution}]",
                self.j_min, self.j_max
            )));
        }
        if self.m == 0 {
            return Err(Error::invariant("scale oversampling m must be >= 1"));
        }
        Ok(())
    }
}

/// Per-scale functional applied to `Phi_t * f`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Functional {
    LocalMeans,
    Peetre,
    Tent,
    RForm,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sampling {
    Continuous,
    Discrete,
}

/// `(functional, sampling)` behind each numbered F-type variant.
pub fn f_variant(i: u8) -> Result<(Functional, Sampling)> {
    use Functional::*;
    use Sampling::*;
    Ok(match i {
        1 => (LocalMeans, Continuous),
        2 => (Peetre, Continuous),
        3 => (Tent, Continuous),
        4 => (Peetre, Discrete),
        5 => (LocalMeans, Discrete),
        6 => (RForm, Discrete),
        _ => return Err(Error::invariant(format!("F-type variant {i} not in 1..=6"))),
    })
}

/// `(functional, sampling)` behind each numbered B-type variant.
pub fn b_variant(i: u8) -> Result<(Functional, Sampling)> {
    use Functional::*;
    use Sampling::*;
    Ok(match i {
        1 => (LocalMeans, Continuous),
        2 => (Peetre, Continuous),
        3 => (Peetre, Discrete),
        4 => (LocalMeans, Discrete),
        5 => (RForm, Discrete),
        _ => return Err(Error::invariant(format!("B-type variant {i} not in 1..=5"))),
    })
}

/// One scale of the lattice: level, `t`, factor, measure.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct Node {
    pub level: f64,
    pub t: f64,
    pub measure: f64,
}

pub(crate) fn nodes(settings: &NormSettings, sampling: Sampling) -> Vec<Node> {
    match sampling {
        Sampling::Continuous => {
            let grid = ScaleGrid { j_min: settings.j_min, j_max: settings.j_max, m: settings.m };
            let w = grid.log_weight();
            grid.nodes().into_iter().map(|nd| Node { level: nd.level, t: nd.t, measure: w }).collect()
        }
        Sampling::Discrete => (settings.j_min..=settings.j_max)
            .map(|j| Node { level: j as f64, t: 2f64.powi(-j), measure: 1.0 })
            .collect(),
    }
}

/// `t^{-s}`, exact for dyadic `t`.
#[inline]
pub(crate) fn smooth_factor(level: f64, s: f64) -> f64 {
    2f64.powf(level * s)
}

/// `(h^n t^{-n} sum_{|z|<t} g(x+z)^q)^{1/q}` over grid offsets, or the ball
/// max for `q = inf`. `g >= 0`.
pub fn tent_values(g: &[f64], n: usize, side: usize, t: f64, q: f64) -> Vec<f64> {
    let offsets = sorted_offsets(n, side);
    let inside: Vec<usize> = offsets.iter().take_while(|o| o.1 < t).map(|o| o.0).collect();
    if q.is_infinite() {
        let add = |x: usize, off: usize| -> usize {
            if n == 1 {
                (x + off) % side
            } else {
                ((x / side + off / side) % side) * side + (x % side + off % side) % side
            }
        };
        return (0..g.len()).map(|x| inside.iter().map(|&o| g[add(x, o)]).fold(0.0, f64::max)).collect();
    }
    let h = 1.0 / side as f64;
    let mut ball = vec![0.0; g.len()];
    for &o in &inside {
        ball[o] = 1.0;
    }
    let gq: Vec<f64> = g.iter().map(|v| v.powf(q)).collect();
    // the ball is symmetric, so the correlation is a convolution
    let conv = fft::cyclic_convolve_real(&gq, &ball, n, side);
    let scale = (h / t).powi(n as i32);
    conv.into_iter().map(|v| (v.max(0.0) * scale).powf(1.0 / q)).collect()
}

/// `(int 2^{jn} g(x+y)^r (1+2^j|y|)^{-ar} dy)^{1/r}` on the torus grid.
pub fn rform_values(g: &[f64], n: usize, side: usize, j_level: f64, a: f64, r: f64) -> Vec<f64> {
    let h = 1.0 / side as f64;
    let scale = 2f64.powf(j_level);
    let kernel: Vec<f64> = sorted_offsets_unsorted(n, side)
        .into_iter()
        .map(|d| h.powi(n as i32) * scale.powi(n as i32) * (1.0 + scale * d).powf(-a * r))
        .collect();
    let gr: Vec<f64> = g.iter().map(|v| v.powf(r)).collect();
    fft::cyclic_convolve_real(&gr, &kernel, n, side).into_iter().map(|v| v.max(0.0).powf(1.0 / r)).collect()
}

/// Torus distance of every flat offset, in index order.
pub(crate) fn sorted_offsets_unsorted(n: usize, side: usize) -> Vec<f64> {
    let h = 1.0 / side as f64;
    let d = |i: usize| {
        if i < side / 2 {
            i as f64 * h
        } else {
            (side - i) as f64 * h
        }
    };
    match n {
        1 => (0..side).map(d).collect(),
        _ => (0..side * side)
            .map(|idx| {
                let (a, b) = (d(idx / side), d(idx % side));
                (a * a + b * b).sqrt()
            })
            .collect(),
    }
}

/// `|Phi_t * f|` at every node, in node order.
pub(crate) fn local_means(f: &SampledField, kernel: &KernelSpec, ts: &[f64]) -> Result<Vec<Vec<f64>>> {
    if kernel.n != f.dim() {
        return Err(Error::invariant("kernel and field dimensions differ"));
    }
    for &t in ts {
        kernel.check_scale(f.side(), t)?;
    }
    let spec = f.spectrum();
    Ok(ts
        .par_iter()
        .map(|&t| convolve_spectrum(&spec, f.dim(), f.side(), kernel, t).iter().map(|v| v.norm()).collect())
        .collect())
}

/// Per-node values of a functional; the tent functional is returned with
/// its inner exponent `q` already applied.
pub(crate) fn functional_values(
    f: &SampledField,
    kernel: &KernelSpec,
    functional: Functional,
    nodes: &[Node],
    settings: &NormSettings,
    a: f64,
    q: f64,
    r: f64,
) -> Result<Vec<Vec<f64>>> {
    let n = f.dim();
    let side = f.side();
    match functional {
        Functional::Peetre => {
            let offsets = sorted_offsets(n, side);
            let per_node: Vec<Vec<f64>> = match settings.peetre {
                PeetreVariant::Sharp => {
                    let ts: Vec<f64> = nodes.iter().map(|nd| nd.t).collect();
                    let g = local_means(f, kernel, &ts)?;
                    g.iter().zip(&ts).map(|(g, &t)| peetre_sup(g, n, side, t, a, &offsets)).collect()
                }
                PeetreVariant::Tilde => {
                    let m = settings.m.max(1);
                    let mut out = Vec::with_capacity(nodes.len());
                    for nd in nodes {
                        let ts: Vec<f64> = (0..=m).map(|i| nd.t * 2f64.powf(-(i as f64) / m as f64)).collect();
                        let g = local_means(f, kernel, &ts)?;
                        let mut best = vec![0.0f64; f.len()];
                        for (gi, &t) in g.iter().zip(&ts) {
                            for (b, v) in best.iter_mut().zip(peetre_sup(gi, n, side, t, a, &offsets)) {
                                *b = b.max(v);
                            }
                        }
                        out.push(best);
                    }
                    out
                }
            };
            Ok(per_node)
        }
        _ => {
            let ts: Vec<f64> = nodes.iter().map(|nd| nd.t).collect();
            let g = local_means(f, kernel, &ts)?;
            Ok(match functional {
                Functional::LocalMeans => g,
                Functional::Tent => g.par_iter().zip(&ts).map(|(g, &t)| tent_values(g, n, side, t, q)).collect(),
                Functional::RForm => {
                    g.par_iter().zip(nodes).map(|(g, nd)| rform_values(g, n, side, nd.level, a, r)).collect()
                }
                Functional::Peetre => unreachable!(),
            })
        }
    }
}

/// Entries of the shared engine for a characterization.
pub fn build_entries(
    f: &SampledField,
    kernel: &KernelSpec,
    functional: Functional,
    sampling: Sampling,
    params: &SpaceParams,
    settings: &NormSettings,
) -> Result<Vec<Entry>> {
    settings.check(f.resolution())?;
    let nds = nodes(settings, sampling);
    let vals = functional_values(f, kernel, functional, &nds, settings, params.a, params.q, params.r)?;
    Ok(nds
        .iter()
        .zip(vals)
        .map(|(nd, values)| Entry {
            level: nd.level,
            factor: smooth_factor(nd.level, params.s),
            measure: nd.measure,
            values,
        })
        .collect())
}

fn common_checks(params: &SpaceParams, kernel: &KernelSpec) -> Result<()> {
    if !(params.tau >= 0.0) {
        return Err(Error::invariant(format!("tau = {} must be >= 0", params.tau)));
    }
    if !(params.q > 0.0) {
        return Err(Error::invariant(format!("q = {} must be > 0", params.q)));
    }
    let n = kernel.n as f64;
    if !(params.s + n * params.tau < kernel.moment_order as f64 + 1.0) {
        return Err(Error::invariant(format!(
            "s + n tau = {} must be < R + 1 = {}",
            params.s + n * params.tau,
            kernel.moment_order + 1
        )));
    }
    Ok(())
}

/// Parameter bounds of the F-type characterizations.
pub fn validate_f(params: &SpaceParams, kernel: &KernelSpec, variant: u8) -> Result<()> {
    common_checks(params, kernel)?;
    let n = kernel.n as f64;
    if !(params.p > 0.0 && params.p.is_finite()) {
        return Err(Error::invariant(format!("F-type needs p in (0, inf), got {}", params.p)));
    }
    let pq = params.p.min(params.q);
    match variant {
        2 | 4 if !(params.a > n / pq) => {
            Err(Error::invariant(format!("variant {variant} needs a > n/(p^q) = {}, got a = {}", n / pq, params.a)))
        }
        6 if !(params.a > 2.0 * n / pq) => {
            Err(Error::invariant(format!("variant 6 needs a > 2n/(p^q) = {}, got a = {}", 2.0 * n / pq, params.a)))
        }
        6 if !(params.r > 0.0 && params.r < pq) => {
            Err(Error::invariant(format!("variant 6 needs r in (0, p^q) = (0, {pq}), got r = {}", params.r)))
        }
        6 if !(params.a * params.r > 2.0 * n) => {
            Err(Error::invariant(format!("variant 6 needs a r > 2n, got a r = {}", params.a * params.r)))
        }
        1..=6 => Ok(()),
        _ => Err(Error::invariant(format!("F-type variant {variant} not in 1..=6"))),
    }
}

/// Parameter bounds of the B-type characterizations.
pub fn validate_b(params: &SpaceParams, kernel: &KernelSpec, variant: u8) -> Result<()> {
    common_checks(params, kernel)?;
    let n = kernel.n as f64;
    let p = params.p;
    if !(p > 0.0) {
        return Err(Error::invariant(format!("p = {p} must be > 0")));
    }
    match variant {
        2 | 3 if !(params.a > n / p) => {
            Err(Error::invariant(format!("variant {variant} needs a > n/p = {}, got a = {}", n / p, params.a)))
        }
        5 if !(params.a > 2.0 * n / p) => {
            Err(Error::invariant(format!("variant 5 needs a > 2n/p = {}, got a = {}", 2.0 * n / p, params.a)))
        }
        5 if !(params.r > 0.0 && params.r < p) => {
            Err(Error::invariant(format!("variant 5 needs r in (0, p) = (0, {p}), got r = {}", params.r)))
        }
        5 if !(params.a * params.r > 2.0 * n) => {
            Err(Error::invariant(format!("variant 5 needs a r > 2n, got a r = {}", params.a * params.r)))
        }
        1..=5 => Ok(()),
        _ => Err(Error::invariant(format!("B-type variant {variant} not in 1..=5"))),
    }
}

/// F-type variant `i` in `1..=6`.
pub fn norm_f_variant(
    f: &SampledField,
    params: &SpaceParams,
    kernel: &KernelSpec,
    variant: u8,
    settings: &NormSettings,
) -> Result<f64> {
    validate_f(params, kernel, variant)?;
    let (functional, sampling) = f_variant(variant)?;
    let entries = build_entries(f, kernel, functional, sampling, params, settings)?;
    // the tent entries already carry the inner q-power through their own
    // ball average, so they enter the l^q sum like any other values
    cube_sup(&entries, f.dim(), f.resolution(), settings.cube_range(), params.p, params.q, params.tau, MixedOrder::F)
}

/// B-type variant `i` in `1..=5`.
pub fn norm_b_variant(
    f: &SampledField,
    params: &SpaceParams,
    kernel: &KernelSpec,
    variant: u8,
    settings: &NormSettings,
) -> Result<f64> {
    validate_b(params, kernel, variant)?;
    let (functional, sampling) = b_variant(variant)?;
    let entries = build_entries(f, kernel, functional, sampling, params, settings)?;
    cube_sup(&entries, f.dim(), f.resolution(), settings.cube_range(), params.p, params.q, params.tau, MixedOrder::B)
}

fn require_band_limited(phi: &KernelSpec) -> Result<()> {
    if phi.kind != KernelKind::BandLimited {
        return Err(Error::invariant("base norms need the band-limited kernel"));
    }
    Ok(())
}

/// Defining F-type norm with the band-limited `phi`.
pub fn norm_f_base(f: &SampledField, params: &SpaceParams, phi: &KernelSpec, settings: &NormSettings) -> Result<f64> {
    require_band_limited(phi)?;
    norm_f_variant(f, params, phi, 5, settings)
}

/// Defining B-type norm with the band-limited `phi`.
pub fn norm_b_base(f: &SampledField, params: &SpaceParams, phi: &KernelSpec, settings: &NormSettings) -> Result<f64> {
    require_band_limited(phi)?;
    norm_b_variant(f, params, phi, 4, settings)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{gaussian_local_means, make_band_limited_kernel};
    use std::f64::consts::PI;

    fn field() -> SampledField {
        SampledField::from_fn(1, 7, |x| (2.0 * PI * 5.0 * x[0]).sin() + 0.3 * (2.0 * PI * 13.0 * x[0]).cos()).unwrap()
    }

    #[test]
    fn zero_field_gives_zero() {
        let f = SampledField::zeros(1, 7).unwrap();
        let k = gaussian_local_means(1, 1, 1.0).unwrap();
        let p = SpaceParams::new(0.0, 0.1, 2.0, 2.0);
        let st = NormSettings::for_resolution(7);
        for i in 1..=6 {
            assert_eq!(norm_f_variant(&f, &p, &k, i, &st).unwrap(), 0.0);
        }
        for i in 1..=5 {
            assert_eq!(norm_b_variant(&f, &p, &k, i, &st).unwrap(), 0.0);
        }
    }

    #[test]
    fn parameter_violations_name_the_bound() {
        let k = gaussian_local_means(1, 1, 1.0).unwrap();
        let mut p = SpaceParams::new(0.0, 0.0, 2.0, 2.0);
        p.a = 0.4;
        let err = validate_f(&p, &k, 2).unwrap_err().to_string();
        assert!(err.contains("a > n/(p^q)"), "{err}");
        let p = SpaceParams::new(2.5, 0.0, 2.0, 2.0);
        assert!(validate_f(&p, &k, 1).unwrap_err().to_string().contains("R + 1"));
    }

    #[test]
    fn single_mode_only_touches_adjacent_levels() {
        // frequency 8 = 2^3: phi_hat(2^-j 8) vanishes unless j in {2, 3, 4}
        let f = SampledField::from_fn(1, 8, |x| (2.0 * PI * 8.0 * x[0]).cos()).unwrap();
        let phi = make_band_limited_kernel(1, 8).unwrap();
        let g = local_means(&f, &phi, &(0..=6).map(|j| 2f64.powi(-j)).collect::<Vec<_>>()).unwrap();
        for (j, row) in g.iter().enumerate() {
            let mx = row.iter().cloned().fold(0.0, f64::max);
            if (2..=4).contains(&j) {
                assert!(mx > 1e-3 || j != 3);
            } else {
                assert!(mx < 1e-12, "level {j}: {mx:e}");
            }
        }
    }

    #[test]
    fn dominations_are_exact() {
        let f = field();
        let k = gaussian_local_means(1, 1, 1.0).unwrap();
        let p = SpaceParams::new(0.5, 0.1, 1.5, 3.0);
        let st = NormSettings::for_resolution(7);
        let v: Vec<f64> = (1..=6).map(|i| norm_f_variant(&f, &p, &k, i, &st).unwrap()).collect();
        assert!(v[0] <= v[1]);
        assert!(v[4] <= v[3]);
        let b: Vec<f64> = (1..=5).map(|i| norm_b_variant(&f, &p, &k, i, &st).unwrap()).collect();
        assert!(b[0] <= b[1]);
        assert!(b[3] <= b[2]);
    }

    #[test]
    fn base_equals_variant_path() {
        let f = field();
        let phi = make_band_limited_kernel(1, 7).unwrap();
        let p = SpaceParams::new(0.0, 0.2, 2.0, 2.0);
        let st = NormSettings::for_resolution(7);
        assert_eq!(norm_f_base(&f, &p, &phi, &st).unwrap(), norm_f_variant(&f, &p, &phi, 5, &st).unwrap());
        assert_eq!(norm_b_base(&f, &p, &phi, &st).unwrap(), norm_b_variant(&f, &p, &phi, 4, &st).unwrap());
        let lm = gaussian_local_means(1, 1, 1.0).unwrap();
        assert!(norm_f_base(&f, &p, &lm, &st).is_err());
    }
}
