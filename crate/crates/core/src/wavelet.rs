//! Biorthogonal spline filter banks, periodic analysis/synthesis on the torus,
//! measured vanishing moments and smoothness, the admissibility threshold and
//! the coefficient counterexample.
//!
//! Conventions: with `c_J = h^{n/2} f`,
//!
//! ```text
//! c_j[k] = sum_i a_lo[i - 2k] c_{j+1}[i]      d_j[k] = sum_i a_hi[i - 2k] c_{j+1}[i]
//! c_{j+1}[i] = sum_k s_lo[i - 2k] c_j[k] + s_hi[i - 2k] d_j[k]
//! ```
//!
//! all indices taken modulo `2^{j+1}`. `d_j[k]` approximates
//! `<f, 2^{jn/2} psi(2^j . - k)>` for the analysis wavelet `psi`.

use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::SampledField;

/// Biorthogonality residual accepted on load.
pub const PR_TOL: f64 = 1e-10;

/// Relative tolerance for a discrete moment to count as vanishing.
pub const MOMENT_TOL: f64 = 1e-10;

/// Cascade depth used for the smoothness measurements.
pub const RENDER_DEPTH: u32 = 12;

const CATALOG: &[(&str, u32, u32)] = &[
    ("haar", 1, 1),
    ("bior2.2", 2, 2),
    ("bior2.4", 2, 4),
    ("bior3.3", 3, 3),
    ("bior3.5", 3, 5),
    ("bior3.7", 3, 7),
    ("bior3.9", 3, 9),
    ("bior4.4", 4, 4),
    ("bior3.11", 3, 11),
    ("bior3.13", 3, 13),
    ("bior4.8", 4, 8),
    ("bior4.10", 4, 10),
];

/// Finitely supported sequence `g[start], g[start+1], ...`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Filter {
    pub start: i64,
    pub taps: Vec<f64>,
}

impl Filter {
    pub fn new(start: i64, taps: Vec<f64>) -> Self {
        Filter { start, taps }
    }

    pub fn get(&self, k: i64) -> f64 {
        let i = k - self.start;
        if i < 0 || i >= self.taps.len() as i64 {
            0.0
        } else {
            self.taps[i as usize]
        }
    }

    pub fn end(&self) -> i64 {
        self.start + self.taps.len() as i64
    }

    pub fn l1(&self) -> f64 {
        self.taps.iter().map(|v| v.abs()).sum()
    }

    /// `(-1)^k g[1 - k]`.
    pub fn alternating_flip(&self) -> Filter {
        let start = 1 - (self.end() - 1);
        let taps = (start..start + self.taps.len() as i64)
            .map(|k| if k.rem_euclid(2) == 0 { 1.0 } else { -1.0 } * self.get(1 - k))
            .collect();
        Filter::new(start, taps)
    }

    fn shifted(&self, by: i64) -> Filter {
        Filter::new(self.start + by, self.taps.clone())
    }

    /// `sum_i self[i - 2k] other[i - 2l]` for `l - k = shift`.
    fn cross(&self, other: &Filter, shift: i64) -> f64 {
        (self.start..self.end()).map(|i| self.get(i) * other.get(i - 2 * shift)).sum()
    }
}

/// Which half of a biorthogonal pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Analysis,
    Synthesis,
}

/// Smoothness measurement of one rendered wavelet.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    /// Fitted Fourier decay exponent `alpha` in `|psi_hat| ~ |xi|^-alpha`.
    pub alpha: f64,
    /// Smoothness proxy `K = alpha - 1`.
    pub k: f64,
    /// Set when the resolvable band is too short for a tail fit.
    pub lower_bound: bool,
}

/// A biorthogonal filter bank with measured properties, tensorized to `n`
/// dimensions with the `2^n - 1` wavelet channels.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WaveletSystem {
    pub name: String,
    pub analysis_low: Filter,
    pub analysis_high: Filter,
    pub synthesis_low: Filter,
    pub synthesis_high: Filter,
    pub moments_analysis: u32,
    pub moments_synthesis: u32,
    pub decay_analysis: DecayFit,
    pub decay_synthesis: DecayFit,
    pub n: usize,
}

impl WaveletSystem {
    /// Builds a system from its four filters, checking the perfect
    /// reconstruction identities and measuring `L` and `K`.
    pub fn from_filters(
        name: &str,
        analysis_low: Filter,
        analysis_high: Filter,
        synthesis_low: Filter,
        synthesis_high: Filter,
    ) -> Result<Self> {
        let res = pr_residual(&analysis_low, &analysis_high, &synthesis_low, &synthesis_high);
        if !(res < PR_TOL) {
            return Err(Error::invariant(format!("{name}: perfect reconstruction residual {res:e}")));
        }
        let moments_analysis = discrete_moments(&analysis_high);
        let moments_synthesis = discrete_moments(&synthesis_high);
        let decay_analysis = fourier_decay(&render_wavelet(&analysis_low, &analysis_high, RENDER_DEPTH), RENDER_DEPTH);
        let decay_synthesis =
            fourier_decay(&render_wavelet(&synthesis_low, &synthesis_high, RENDER_DEPTH), RENDER_DEPTH);
        Ok(WaveletSystem {
            name: name.to_string(),
            analysis_low,
            analysis_high,
            synthesis_low,
            synthesis_high,
            moments_analysis,
            moments_synthesis,
            decay_analysis,
            decay_synthesis,
            n: 1,
        })
    }

    pub fn with_dim(mut self, n: usize) -> Result<Self> {
        if n != 1 && n != 2 {
            return Err(Error::invariant(format!("dimension must be 1 or 2, got {n}")));
        }
        self.n = n;
        Ok(self)
    }

    /// Number of wavelet channels `|E| = 2^n - 1`.
    pub fn channels(&self) -> usize {
        (1 << self.n) - 1
    }

    /// `L`: vanishing moments common to both wavelets.
    pub fn vanishing_moments(&self) -> u32 {
        self.moments_analysis.min(self.moments_synthesis)
    }

    /// `K`: the smaller of the two measured smoothness proxies.
    pub fn smoothness(&self) -> f64 {
        self.decay_analysis.k.min(self.decay_synthesis.k)
    }

    pub fn is_self_dual(&self) -> bool {
        self.analysis_low == self.synthesis_low && self.analysis_high == self.synthesis_high
    }

    fn filters(&self, side: Side) -> (&Filter, &Filter) {
        match side {
            Side::Analysis => (&self.analysis_low, &self.analysis_high),
            Side::Synthesis => (&self.synthesis_low, &self.synthesis_high),
        }
    }
}

/// Largest residual of the four biorthogonality identities
/// `<lo~_k, lo_l> = delta`, `<hi~_k, hi_l> = delta`, `<lo~_k, hi_l> = 0`,
/// `<hi~_k, lo_l> = 0` over all relative shifts.
pub fn pr_residual(a_lo: &Filter, a_hi: &Filter, s_lo: &Filter, s_hi: &Filter) -> f64 {
    let span = [a_lo, a_hi, s_lo, s_hi].iter().map(|f| f.taps.len() as i64 + f.start.abs()).max().unwrap_or(0);
    let mut worst = 0.0f64;
    for shift in -span..=span {
        let delta = if shift == 0 { 1.0 } else { 0.0 };
        worst = worst.max((a_lo.cross(s_lo, shift) - delta).abs());
        worst = worst.max((a_hi.cross(s_hi, shift) - delta).abs());
        worst = worst.max(a_lo.cross(s_hi, shift).abs());
        worst = worst.max(a_hi.cross(s_lo, shift).abs());
    }
    worst
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Spline biorthogonal pair: synthesis lowpass `sqrt2 ((1+z)/2)^order` and
/// analysis lowpass `sqrt2 ((1+z)/2)^dual * P(sin^2)`, with the relative
/// offset fixed by searching for the shift that satisfies biorthogonality.
fn spline_pair(order: u32, dual: u32) -> Result<(Filter, Filter)> {
    if !(order + dual).is_multiple_of(2) || order == 0 || dual == 0 {
        return Err(Error::invariant(format!("orders {order}, {dual} must be positive with an even sum")));
    }
    let r2 = std::f64::consts::SQRT_2;
    let s_taps: Vec<f64> = (0..=order).map(|k| r2 * binomial(order, k) / 2f64.powi(order as i32)).collect();
    let half = (order + dual) / 2;
    // sum_k C(half-1+k, k) x^k with x = sin^2 = (2 - z - 1/z)/4, as a Laurent
    // polynomial centred at index half-1.
    let sin2 = [-0.25, 0.5, -0.25];
    let mut p = vec![0.0; 2 * (half as usize - 1) + 1];
    let mut power = vec![1.0];
    for k in 0..half {
        let off = (half - 1 - k) as usize;
        let c = binomial(half - 1 + k, k);
        for (i, v) in power.iter().enumerate() {
            p[off + i] += c * v;
        }
        power = poly_mul(&power, &sin2);
    }
    let cos_part: Vec<f64> = (0..=dual).map(|k| binomial(dual, k) / 2f64.powi(dual as i32)).collect();
    let a_taps: Vec<f64> = poly_mul(&cos_part, &p).into_iter().map(|v| v * r2).collect();
    let s_lo = Filter::new(0, s_taps);
    let base = Filter::new(0, a_taps);
    let range = (s_lo.taps.len() + base.taps.len()) as i64;
    for off in -range..=range {
        let a_lo = base.shifted(off);
        let ok = (-range..=range).all(|sh| {
            let delta = if sh == 0 { 1.0 } else { 0.0 };
            (a_lo.cross(&s_lo, sh) - delta).abs() < PR_TOL
        });
        if ok {
            return Ok((a_lo, s_lo));
        }
    }
    Err(Error::invariant(format!("no biorthogonal offset for spline pair ({order}, {dual})")))
}

/// Names in the filter catalog.
pub fn catalog_names() -> Vec<&'static str> {
    CATALOG.iter().map(|c| c.0).collect()
}

/// Loads a catalog system (`n = 1`; see [`WaveletSystem::with_dim`]).
///
/// `bior{a}.{b}` is the spline family with synthesis order `a` and analysis
/// order `b`; `haar` is the `(1, 1)` member.
pub fn load_filter_pair(name: &str) -> Result<WaveletSystem> {
    let &(_, order, dual) = CATALOG
        .iter()
        .find(|c| c.0 == name)
        .ok_or_else(|| Error::invariant(format!("unknown wavelet '{name}', catalog: {:?}", catalog_names())))?;
    let (a_lo, s_lo) = spline_pair(order, dual)?;
    let a_hi = s_lo.alternating_flip();
    let s_hi = a_lo.alternating_flip();
    WaveletSystem::from_filters(name, a_lo, a_hi, s_lo, s_hi)
}

/// The four filters of a catalog entry as JSON.
pub fn catalog_json() -> Result<serde_json::Value> {
    let mut out = serde_json::Map::new();
    for &(name, order, dual) in CATALOG {
        let (a_lo, s_lo) = spline_pair(order, dual)?;
        out.insert(
            name.to_string(),
            serde_json::json!({
                "synthesis_order": order,
                "analysis_order": dual,
                "analysis_low": a_lo,
                "analysis_high": s_lo.alternating_flip(),
                "synthesis_low": s_lo,
                "synthesis_high": a_lo.alternating_flip(),
            }),
        );
    }
    Ok(serde_json::Value::Object(out))
}

fn discrete_moments(g: &Filter) -> u32 {
    let centre = (g.start + g.end() - 1) as f64 / 2.0;
    let mut l = 0;
    for m in 0..=g.taps.len() as i32 {
        let mut sum = 0.0;
        let mut scale = 0.0;
        for (i, &v) in g.taps.iter().enumerate() {
            let x = (g.start + i as i64) as f64 - centre;
            let w = x.powi(m);
            sum += v * w;
            scale += (v * w).abs();
        }
        if sum.abs() < MOMENT_TOL * scale.max(g.l1() * f64::EPSILON) {
            l += 1;
        } else {
            break;
        }
    }
    l
}

/// Largest `L` with vanishing discrete moments of orders `0..L` for the
/// highpass filter of `side`.
///
/// Moments are taken about the filter centre and judged relative to
/// `sum |g[k] (k - centre)^m|`, which equals `||g||_1` at `m = 0`.
pub fn moment_check(w: &WaveletSystem, side: Side) -> u32 {
    discrete_moments(w.filters(side).1)
}

/// Same check on an arbitrary filter; lowpass filters return 0.
pub fn filter_moments(g: &Filter) -> u32 {
    discrete_moments(g)
}

/// Cascade rendering of the wavelet built from `(low, high)`: samples at
/// `x = (start + i) 2^-depth`, returned with the offset of the first sample.
pub fn cascade(low: &Filter, high: &Filter, depth: u32) -> (i64, Vec<f64>) {
    let mut start = high.start;
    let mut vals = high.taps.clone();
    for _ in 1..depth {
        let new_start = 2 * start + low.start;
        let len = 2 * vals.len() + low.taps.len() - 1;
        let mut next = vec![0.0; len];
        for (k, &v) in vals.iter().enumerate() {
            for (i, &g) in low.taps.iter().enumerate() {
                next[2 * k + i] += v * g;
            }
        }
        start = new_start;
        vals = next;
    }
    let amp = 2f64.powf(depth as f64 / 2.0);
    (start, vals.into_iter().map(|v| v * amp).collect())
}

fn render_wavelet(low: &Filter, high: &Filter, depth: u32) -> (i64, Vec<f64>) {
    cascade(low, high, depth)
}

/// Fits `|psi_hat(xi)| ~ |xi|^-alpha` from the spectral energy in octaves
/// `[2^o, 2^{o+1})` cycles per unit, `o = 3..depth-4`: the octave energy
/// scales like `2^{o(1 - 2 alpha)}`.
fn fourier_decay(rendered: &(i64, Vec<f64>), depth: u32) -> DecayFit {
    let (_, vals) = rendered;
    let rate = 1usize << depth;
    let len = (vals.len() * 4).next_power_of_two().max(rate * 4);
    let mut buf: Vec<Complex64> = vals.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    buf.resize(len, Complex64::new(0.0, 0.0));
    let mut planner = rustfft::FftPlanner::new();
    planner.plan_fft_forward(len).process(&mut buf);
    // bin b sits at xi = b * rate / len cycles.
    let per_cycle = len as f64 / rate as f64;
    let dx = 1.0 / rate as f64;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for oct in 3..(depth as i32 - 3) {
        let lo = (2f64.powi(oct) * per_cycle) as usize;
        let hi = (2f64.powi(oct + 1) * per_cycle) as usize;
        let e: f64 = buf[lo..hi].iter().map(|v| (v * dx).norm_sqr()).sum::<f64>() / per_cycle;
        if e > 0.0 {
            xs.push(oct as f64);
            ys.push(e.log2());
        }
    }
    if xs.len() < 3 {
        return DecayFit { alpha: 0.0, k: -1.0, lower_bound: true };
    }
    let alpha = (1.0 - slope(&xs, &ys)) / 2.0;
    DecayFit { alpha, k: alpha - 1.0, lower_bound: false }
}

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let num: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    num / den
}

/// Result of [`decay_check`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    pub side: Side,
    pub fourier: DecayFit,
    /// Fitted exponent of `|W_psi f0(0, t)|` against `t` for small `t`.
    pub cwt_slope: f64,
    /// Slope predicted for a smooth probe: vanishing moments `+ n/2`.
    pub cwt_expected: f64,
}

/// Measures the Fourier-tail smoothness of the wavelet of `side` from a
/// cascade rendering at `depth`, and the small-scale decay of its 1-D
/// continuous wavelet transform against the smooth probe
/// `f0(x) = exp(-2 (x - 0.3)^2)`.
///
/// The probe is infinitely smooth, so the expected slope is `L + 1/2` with
/// `L` the vanishing moments of the rendered wavelet.
pub fn decay_check(w: &WaveletSystem, side: Side, depth: u32) -> DecayReport {
    let (lo, hi) = w.filters(side);
    let rendered = render_wavelet(lo, hi, depth);
    let fourier = fourier_decay(&rendered, depth);
    let (start, vals) = &rendered;
    let dx = 2f64.powi(-(depth as i32));
    let f0 = |x: f64| (-2.0 * (x - 0.3) * (x - 0.3)).exp();
    let levels: Vec<f64> = (4..=8).map(|j| j as f64).collect();
    let ys: Vec<f64> = levels
        .iter()
        .map(|&j| {
            let t = 2f64.powf(-j);
            // W(0, t) = t^{1/2} int psi(u) f0(t u) du
            let s: f64 = vals.iter().enumerate().map(|(i, &v)| v * f0(t * (*start + i as i64) as f64 * dx)).sum();
            (t.sqrt() * s * dx).abs().log2()
        })
        .collect();
    let xs: Vec<f64> = levels.iter().map(|j| -j).collect();
    DecayReport { side, fourier, cwt_slope: slope(&xs, &ys), cwt_expected: discrete_moments(hi) as f64 + 0.5 }
}

/// Wavelet coefficients `lambda^c_{j,k}` for channels `c = 1..2^n - 1` and
/// levels `j_min..=j_max` on a grid of resolution `J`.
///
/// Channel `c` has bit `n-1-a` set when axis `a` uses the highpass filter:
/// for `n = 2`, `1 -> (lo, hi)`, `2 -> (hi, lo)`, `3 -> (hi, hi)`.
#[derive(Clone, Debug, PartialEq)]
pub struct CoeffSequence {
    n: usize,
    resolution: u32,
    j_min: u32,
    j_max: u32,
    blocks: Vec<Vec<Vec<Complex64>>>,
}

impl CoeffSequence {
    pub fn zeros(n: usize, resolution: u32, j_min: u32, j_max: u32) -> Result<Self> {
        if n != 1 && n != 2 {
            return Err(Error::invariant(format!("dimension must be 1 or 2, got {n}")));
        }
        if j_min > j_max || j_max >= resolution {
            return Err(Error::invariant(format!(
                "level range [{j_min}, {j_max}] must lie in [0, {}]",
                resolution as i64 - 1
            )));
        }
        let blocks = (0..(1 << n) - 1)
            .map(|_| (j_min..=j_max).map(|j| vec![Complex64::new(0.0, 0.0); 1usize << (j as usize * n)]).collect())
            .collect();
        Ok(CoeffSequence { n, resolution, j_min, j_max, blocks })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn resolution(&self) -> u32 {
        self.resolution
    }

    pub fn levels(&self) -> (u32, u32) {
        (self.j_min, self.j_max)
    }

    pub fn channels(&self) -> usize {
        self.blocks.len()
    }

    /// Coefficients of channel `c` (1-based) at level `j`, `k` row-major.
    pub fn level(&self, c: usize, j: u32) -> &[Complex64] {
        &self.blocks[c - 1][(j - self.j_min) as usize]
    }

    pub fn level_mut(&mut self, c: usize, j: u32) -> &mut [Complex64] {
        &mut self.blocks[c - 1][(j - self.j_min) as usize]
    }

    fn check_index(&self, c: usize, j: u32, k: &[usize]) -> Result<usize> {
        if c == 0 || c > self.channels() || j < self.j_min || j > self.j_max || k.len() != self.n {
            return Err(Error::invariant(format!("coefficient index (c={c}, j={j}, k={k:?}) out of range")));
        }
        let side = 1usize << j;
        if k.iter().any(|&v| v >= side) {
            return Err(Error::invariant(format!("position {k:?} exceeds 2^{j}")));
        }
        Ok(k.iter().fold(0, |acc, &v| acc * side + v))
    }

    pub fn get(&self, c: usize, j: u32, k: &[usize]) -> Result<Complex64> {
        let i = self.check_index(c, j, k)?;
        Ok(self.level(c, j)[i])
    }

    pub fn set(&mut self, c: usize, j: u32, k: &[usize], v: Complex64) -> Result<()> {
        let i = self.check_index(c, j, k)?;
        self.level_mut(c, j)[i] = v;
        Ok(())
    }

    pub fn scaled(&self, a: Complex64) -> Self {
        let mut out = self.clone();
        for ch in &mut out.blocks {
            for lv in ch {
                for v in lv.iter_mut() {
                    *v *= a;
                }
            }
        }
        out
    }

    pub fn add(&self, other: &CoeffSequence) -> Result<Self> {
        if self.n != other.n || self.resolution != other.resolution || self.levels() != other.levels() {
            return Err(Error::invariant("coefficient sequences have different layouts"));
        }
        let mut out = self.clone();
        for (a, b) in out.blocks.iter_mut().zip(&other.blocks) {
            for (la, lb) in a.iter_mut().zip(b) {
                for (x, y) in la.iter_mut().zip(lb) {
                    *x += y;
                }
            }
        }
        Ok(out)
    }

    /// Sum of `|lambda|^2` over all entries.
    pub fn energy(&self) -> f64 {
        self.blocks.iter().flatten().flatten().map(|v| v.norm_sqr()).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.blocks.iter().flatten().flatten().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Rows `(c, j, k..., re, im)` in channel, level, position order.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        let mut header = vec!["c".to_string(), "j".to_string()];
        for a in 0..self.n {
            header.push(format!("k{a}"));
        }
        header.push("re".into());
        header.push("im".into());
        wtr.write_record(&header)?;
        for c in 1..=self.channels() {
            for j in self.j_min..=self.j_max {
                let side = 1usize << j;
                for (i, v) in self.level(c, j).iter().enumerate() {
                    let mut rec = vec![c.to_string(), j.to_string()];
                    if self.n == 1 {
                        rec.push(i.to_string());
                    } else {
                        rec.push((i / side).to_string());
                        rec.push((i % side).to_string());
                    }
                    rec.push(format!("{:e}", v.re));
                    rec.push(format!("{:e}", v.im));
                    wtr.write_record(&rec)?;
                }
            }
        }
        wtr.flush()?;
        Ok(())
    }
}

fn analyze_1d(x: &[Complex64], lo: &Filter, hi: &Filter) -> (Vec<Complex64>, Vec<Complex64>) {
    let len = x.len() as i64;
    let half = x.len() / 2;
    let mut c = vec![Complex64::new(0.0, 0.0); half];
    let mut d = vec![Complex64::new(0.0, 0.0); half];
    for k in 0..half as i64 {
        let mut sc = Complex64::new(0.0, 0.0);
        for (m, &g) in lo.taps.iter().enumerate() {
            sc += x[(lo.start + m as i64 + 2 * k).rem_euclid(len) as usize] * g;
        }
        let mut sd = Complex64::new(0.0, 0.0);
        for (m, &g) in hi.taps.iter().enumerate() {
            sd += x[(hi.start + m as i64 + 2 * k).rem_euclid(len) as usize] * g;
        }
        c[k as usize] = sc;
        d[k as usize] = sd;
    }
    (c, d)
}

fn synthesize_1d(c: &[Complex64], d: &[Complex64], lo: &Filter, hi: &Filter) -> Vec<Complex64> {
    let len = 2 * c.len() as i64;
    let mut x = vec![Complex64::new(0.0, 0.0); len as usize];
    for k in 0..c.len() {
        let base = 2 * k as i64;
        if c[k] != Complex64::new(0.0, 0.0) {
            for (m, &g) in lo.taps.iter().enumerate() {
                x[(lo.start + m as i64 + base).rem_euclid(len) as usize] += c[k] * g;
            }
        }
        if d[k] != Complex64::new(0.0, 0.0) {
            for (m, &g) in hi.taps.iter().enumerate() {
                x[(hi.start + m as i64 + base).rem_euclid(len) as usize] += d[k] * g;
            }
        }
    }
    x
}

/// One 2-D analysis step on a `side x side` array: returns the four
/// quadrants indexed by `(row filter, column filter)` bits `0..4`.
fn analyze_2d(x: &[Complex64], side: usize, lo: &Filter, hi: &Filter) -> Vec<Vec<Complex64>> {
    let half = side / 2;
    // along axis 1
    let rows: Vec<(Vec<Complex64>, Vec<Complex64>)> = x.par_chunks(side).map(|r| analyze_1d(r, lo, hi)).collect();
    let mut out = vec![vec![Complex64::new(0.0, 0.0); half * half]; 4];
    for (bit1, pick) in [(0usize, false), (1usize, true)] {
        let cols: Vec<(Vec<Complex64>, Vec<Complex64>)> = (0..half)
            .into_par_iter()
            .map(|b| {
                let col: Vec<Complex64> = rows.iter().map(|r| if pick { r.1[b] } else { r.0[b] }).collect();
                analyze_1d(&col, lo, hi)
            })
            .collect();
        for (b, (cl, ch)) in cols.iter().enumerate() {
            for a in 0..half {
                out[bit1][a * half + b] = cl[a];
                out[2 | bit1][a * half + b] = ch[a];
            }
        }
    }
    out
}

fn synthesize_2d(q: &[Vec<Complex64>], half: usize, lo: &Filter, hi: &Filter) -> Vec<Complex64> {
    let side = 2 * half;
    // undo axis 0 for each column, per axis-1 band
    let mut bands = [vec![Complex64::new(0.0, 0.0); side * half], vec![Complex64::new(0.0, 0.0); side * half]];
    for (bit1, band) in bands.iter_mut().enumerate() {
        let cols: Vec<Vec<Complex64>> = (0..half)
            .into_par_iter()
            .map(|b| {
                let cl: Vec<Complex64> = (0..half).map(|a| q[bit1][a * half + b]).collect();
                let ch: Vec<Complex64> = (0..half).map(|a| q[2 | bit1][a * half + b]).collect();
                synthesize_1d(&cl, &ch, lo, hi)
            })
            .collect();
        for (b, col) in cols.iter().enumerate() {
            for a in 0..side {
                band[a * half + b] = col[a];
            }
        }
    }
    let rows: Vec<Vec<Complex64>> = (0..side)
        .into_par_iter()
        .map(|a| synthesize_1d(&bands[0][a * half..(a + 1) * half], &bands[1][a * half..(a + 1) * half], lo, hi))
        .collect();
    rows.concat()
}

/// Periodic filter-bank analysis of `f` on levels `j_min..=j_max`
/// (`j_max <= J - 1`). The scaling block is dropped.
pub fn analyze(f: &SampledField, w: &WaveletSystem, j_min: u32, j_max: u32) -> Result<CoeffSequence> {
    if f.dim() != w.n {
        return Err(Error::invariant(format!("field dimension {} but wavelet dimension {}", f.dim(), w.n)));
    }
    let big_j = f.resolution();
    let mut out = CoeffSequence::zeros(f.dim(), big_j, j_min, j_max)?;
    let n = f.dim();
    let amp = f.step().powf(n as f64 / 2.0);
    let mut c: Vec<Complex64> = f.values().iter().map(|v| v * amp).collect();
    let (lo, hi) = (&w.analysis_low, &w.analysis_high);
    for j in (j_min..big_j).rev() {
        if n == 1 {
            let (cl, d) = analyze_1d(&c, lo, hi);
            if j <= j_max {
                out.level_mut(1, j).copy_from_slice(&d);
            }
            c = cl;
        } else {
            let mut quads = analyze_2d(&c, 1usize << (j + 1), lo, hi);
            if j <= j_max {
                for ch in 1..4 {
                    out.level_mut(ch, j).copy_from_slice(&quads[ch]);
                }
            }
            c = std::mem::take(&mut quads[0]);
        }
    }
    Ok(out)
}

/// Inverse filter bank onto the grid of resolution `resolution`, with a zero
/// scaling block at the coarsest level.
pub fn synthesize(lambda: &CoeffSequence, w: &WaveletSystem, resolution: u32) -> Result<SampledField> {
    if lambda.n != w.n {
        return Err(Error::invariant("coefficient and wavelet dimensions differ"));
    }
    if lambda.resolution != resolution || lambda.j_max >= resolution {
        return Err(Error::invariant(format!(
            "coefficients for resolution {} cannot be synthesized at {resolution}",
            lambda.resolution
        )));
    }
    let n = lambda.n;
    let (lo, hi) = (&w.synthesis_low, &w.synthesis_high);
    let zero = Complex64::new(0.0, 0.0);
    let mut c = vec![zero; 1usize << (lambda.j_min as usize * n)];
    for j in lambda.j_min..resolution {
        let len = 1usize << (j as usize * n);
        let empty = vec![zero; len];
        let has = j <= lambda.j_max;
        if n == 1 {
            let d = if has { lambda.level(1, j) } else { &empty[..] };
            c = synthesize_1d(&c, d, lo, hi);
        } else {
            let mut quads = vec![c];
            for ch in 1..4 {
                quads.push(if has { lambda.level(ch, j).to_vec() } else { empty.clone() });
            }
            c = synthesize_2d(&quads, 1usize << j, lo, hi);
        }
    }
    let amp = 2f64.powf(resolution as f64 * n as f64 / 2.0);
    SampledField::new(n, resolution, c.into_iter().map(|v| v * amp).collect())
}

/// The discrete analysis atom of `(c, j, k)`: the field `a` with
/// `lambda^c_{j,k} = h^n sum_i f_i conj(a_i)` for real filters.
pub fn analysis_atom(w: &WaveletSystem, c: usize, j: u32, k: &[usize], resolution: u32) -> Result<SampledField> {
    let dual =
        WaveletSystem { synthesis_low: w.analysis_low.clone(), synthesis_high: w.analysis_high.clone(), ..w.clone() };
    let mut lam = CoeffSequence::zeros(w.n, resolution, j, j)?;
    lam.set(c, j, k, Complex64::new(1.0, 0.0))?;
    synthesize(&lam, &dual, resolution)
}

/// The admissibility threshold
/// `max[ s + n(tau + 1/p* - 1/(p v 1)) + a , -s + n(tau + 1/p* + 1/p - 1) + 2a ]`.
pub fn m_quantity(n: usize, s: f64, tau: f64, p: f64, p_star: f64, a: f64) -> f64 {
    let (first, second) = m_branches(n, s, tau, p, p_star, a);
    first.max(second)
}

/// The two bracketed expressions of [`m_quantity`].
pub fn m_branches(n: usize, s: f64, tau: f64, p: f64, p_star: f64, a: f64) -> (f64, f64) {
    let n = n as f64;
    let first = s + n * (tau + 1.0 / p_star - 1.0 / p.max(1.0)) + a;
    let second = -s + n * (tau + 1.0 / p_star + 1.0 / p - 1.0) + 2.0 * a;
    (first, second)
}

/// Function-space family for [`admissibility_check`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum AdmissibleSpace {
    F,
    B,
    Fh,
    Bh,
}

/// Verdict of [`admissibility_check`]. `measured = min(L, K)` uses the
/// Fourier-tail proxy for `K`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Admissibility {
    pub passes: bool,
    pub required: f64,
    pub measured: f64,
    pub vanishing_moments: u32,
    pub smoothness: f64,
    pub p_star: f64,
    pub a: f64,
    pub gap: f64,
}

/// The `(p*, a)` pair used by the admissibility threshold for each family.
pub fn threshold_parameters(space: AdmissibleSpace, n: usize, tau: f64, p: f64, q: f64) -> (f64, f64) {
    let n = n as f64;
    let pq_conj = crate::hausdorff::conjugate_exponent(p, q);
    let hausdorff_star = 1.0 / (pq_conj + 1.0);
    match space {
        AdmissibleSpace::F => (1f64.min(p).min(q), n / p.min(q)),
        AdmissibleSpace::B => (1f64.min(p).min(q), n / p),
        AdmissibleSpace::Bh => (hausdorff_star, n * (1.0 / p + tau)),
        AdmissibleSpace::Fh => (hausdorff_star, n * (1.0 / p.min(q) + tau)),
    }
}

/// Passes iff `min(L, K) > M(s, tau, p, q, p*, a)`.
pub fn admissibility_check(
    w: &WaveletSystem,
    space: AdmissibleSpace,
    s: f64,
    tau: f64,
    p: f64,
    q: f64,
) -> Admissibility {
    let (p_star, a) = threshold_parameters(space, w.n, tau, p, q);
    let required = m_quantity(w.n, s, tau, p, p_star, a);
    let l = w.vanishing_moments();
    let k = w.smoothness();
    let measured = (l as f64).min(k);
    Admissibility {
        passes: measured > required,
        required,
        measured,
        vanishing_moments: l,
        smoothness: k,
        p_star,
        a,
        gap: measured - required,
    }
}

/// Sequence with `lambda^1_{j,(2,...,2)} = 2^{-j(n tau + s - n/p)} 2^{-jn/2}`
/// for `j = 1..=levels` (positions wrapped modulo `2^j`), on a grid of
/// resolution `levels + 1`.
pub fn counterexample_sequence(n: usize, s: f64, tau: f64, p: f64, levels: u32) -> Result<CoeffSequence> {
    if !(tau > 0.0) {
        return Err(Error::invariant(format!("counterexample needs tau > 0, got {tau}")));
    }
    geometric_profile(n, s, tau, p, levels)
}

/// The profile of [`counterexample_sequence`] without the `tau > 0` guard,
/// used for the `tau = 0` contrast.
pub fn geometric_profile(n: usize, s: f64, tau: f64, p: f64, levels: u32) -> Result<CoeffSequence> {
    if levels == 0 {
        return Err(Error::invariant("need at least one level"));
    }
    let mut out = CoeffSequence::zeros(n, levels + 1, 1, levels)?;
    let nf = n as f64;
    for j in 1..=levels {
        let jf = j as f64;
        let v = 2f64.powf(-jf * (nf * tau + s - nf / p)) * 2f64.powf(-jf * nf / 2.0);
        let k = vec![2 % (1usize << j); n];
        out.set(1, j, &k, Complex64::new(v, 0.0))?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_field(n: usize, res: u32, seed: u64) -> SampledField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let len = 1usize << (res as usize * n);
        let vals: Vec<f64> = (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect();
        SampledField::from_real(n, res, vals).unwrap().remove_mean()
    }

    fn rel_err(a: &SampledField, b: &SampledField) -> f64 {
        let num: f64 = a.values().iter().zip(b.values()).map(|(x, y)| (x - y).norm_sqr()).sum();
        let den: f64 = b.values().iter().map(|x| x.norm_sqr()).sum();
        (num / den).sqrt()
    }

    #[test]
    fn haar_filters() {
        let w = load_filter_pair("haar").unwrap();
        let r = 1.0 / 2f64.sqrt();
        let mut lo = w.analysis_low.taps.clone();
        lo.sort_by(f64::total_cmp);
        assert!((lo[0] - r).abs() < 1e-15 && (lo[1] - r).abs() < 1e-15);
        let mut hi = w.analysis_high.taps.clone();
        hi.sort_by(f64::total_cmp);
        assert!((hi[0] + r).abs() < 1e-15 && (hi[1] - r).abs() < 1e-15);
        assert!(w.is_self_dual());
        assert_eq!(w.vanishing_moments(), 1);
    }

    #[test]
    fn catalog_moments_match_labels() {
        for &(name, order, dual) in CATALOG {
            let w = load_filter_pair(name).unwrap();
            assert_eq!(w.moments_analysis, order, "{name}");
            assert_eq!(w.moments_synthesis, dual, "{name}");
            assert_eq!(filter_moments(&w.analysis_low), 0);
        }
    }

    #[test]
    fn spline_side_decay_matches_order() {
        // the spline wavelet of order N decays like |xi|^-N
        for name in ["bior2.2", "bior3.3", "bior4.4"] {
            let w = load_filter_pair(name).unwrap();
            let order = w.moments_analysis as f64;
            assert!((w.decay_synthesis.alpha - order).abs() < 0.15, "{name}: {:?}", w.decay_synthesis);
        }
        let haar = load_filter_pair("haar").unwrap();
        assert!((haar.decay_synthesis.alpha - 1.0).abs() < 0.15);
    }

    #[test]
    fn smoother_family_not_rougher() {
        let k: Vec<f64> = ["bior3.3", "bior3.5", "bior3.7", "bior3.9", "bior3.11"]
            .iter()
            .map(|n| load_filter_pair(n).unwrap().smoothness())
            .collect();
        for w in k.windows(2) {
            assert!(w[1] >= w[0] - 0.05, "{k:?}");
        }
    }

    #[test]
    fn cwt_slope_matches_moments() {
        let w = load_filter_pair("bior2.2").unwrap();
        for side in [Side::Analysis, Side::Synthesis] {
            let r = decay_check(&w, side, 10);
            assert!((r.cwt_slope - r.cwt_expected).abs() < 0.3, "{r:?}");
        }
    }

    #[test]
    fn round_trip_all_catalog() {
        for name in catalog_names() {
            let w1 = load_filter_pair(name).unwrap();
            let w2 = w1.clone().with_dim(2).unwrap();
            let f = random_field(1, 8, 1);
            let back = synthesize(&analyze(&f, &w1, 0, 7).unwrap(), &w1, 8).unwrap();
            assert!(rel_err(&back, &f) < 1e-9, "{name}");
            let g = random_field(2, 5, 2);
            let back = synthesize(&analyze(&g, &w2, 0, 4).unwrap(), &w2, 5).unwrap();
            assert!(rel_err(&back, &g) < 1e-9, "{name} 2-D");
        }
    }

    #[test]
    fn atom_round_trip_is_delta() {
        let w = load_filter_pair("bior3.5").unwrap().with_dim(2).unwrap();
        let mut lam = CoeffSequence::zeros(2, 5, 0, 4).unwrap();
        lam.set(3, 2, &[1, 3], Complex64::new(1.0, 0.0)).unwrap();
        let f = synthesize(&lam, &w, 5).unwrap();
        let back = analyze(&f, &w, 0, 4).unwrap();
        let diff = back.add(&lam.scaled(Complex64::new(-1.0, 0.0))).unwrap();
        assert!(diff.max_abs() < 1e-8);
        assert_eq!(back.channels(), 3);
    }

    #[test]
    fn analysis_matches_inner_products() {
        let w = load_filter_pair("bior2.4").unwrap();
        let f = random_field(1, 6, 3);
        let lam = analyze(&f, &w, 0, 5).unwrap();
        let h = f.step();
        for (j, k) in [(1u32, 1usize), (3, 5), (5, 30)] {
            let a = analysis_atom(&w, 1, j, &[k], 6).unwrap();
            let direct: Complex64 = f.values().iter().zip(a.values()).map(|(x, y)| x * y.conj()).sum::<Complex64>() * h;
            assert!((direct - lam.get(1, j, &[k]).unwrap()).norm() < 1e-12);
        }
    }

    #[test]
    fn single_coefficient_matches_cascade() {
        // Cascade values at depth D sit at x = (i + mu) 2^-D, mu the centre of
        // mass of the lowpass; compare at matching points by interpolation.
        let w = load_filter_pair("bior3.9").unwrap();
        let (res, j, k) = (10u32, 3u32, 2usize);
        let mut lam = CoeffSequence::zeros(1, res, 0, res - 1).unwrap();
        lam.set(1, j, &[k], Complex64::new(1.0, 0.0)).unwrap();
        let f = synthesize(&lam, &w, res).unwrap();
        let lo = &w.synthesis_low;
        let mu = lo.taps.iter().enumerate().map(|(i, v)| (lo.start + i as i64) as f64 * v).sum::<f64>()
            / lo.taps.iter().sum::<f64>();
        let coarse = res - j;
        let extra = 4u32;
        let (start, vals) = cascade(lo, &w.synthesis_high, coarse + extra);
        let (cstart, cvals) = cascade(lo, &w.synthesis_high, coarse);
        let side = 1usize << res;
        let mut expect = vec![0.0; side];
        let scale = (1u64 << extra) as f64;
        for i in 0..cvals.len() {
            let m = cstart + i as i64;
            let pos = m as f64 * scale + mu * (scale - 1.0) - start as f64;
            let i0 = pos.floor() as usize;
            let frac = pos - i0 as f64;
            let v = vals[i0] * (1.0 - frac) + vals.get(i0 + 1).copied().unwrap_or(0.0) * frac;
            let cell = m + ((k as i64) << coarse);
            expect[cell.rem_euclid(side as i64) as usize] += v * 2f64.powf(j as f64 / 2.0);
        }
        let peak = expect.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let err = f.values().iter().zip(&expect).map(|(a, b)| (a.re - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-2 * peak, "{err} vs {peak}");
    }

    #[test]
    fn parseval_for_haar() {
        let w = load_filter_pair("haar").unwrap().with_dim(2).unwrap();
        let f = random_field(2, 5, 4);
        let lam = analyze(&f, &w, 0, 4).unwrap();
        let l2 = f.l2_norm();
        assert!((lam.energy() - l2 * l2).abs() < 1e-9 * l2 * l2);
    }

    #[test]
    fn m_quantity_example() {
        // s = 0, tau = 0, p = q = 2, p* = 1, a = n: branches 3n/2 and 5n/2
        for n in [1usize, 2] {
            let nf = n as f64;
            let (a, b) = m_branches(n, 0.0, 0.0, 2.0, 1.0, nf);
            assert!((a - 1.5 * nf).abs() < 1e-15 && (b - 2.5 * nf).abs() < 1e-15);
            assert_eq!(m_quantity(n, 0.0, 0.0, 2.0, 1.0, nf), 2.5 * nf);
        }
    }

    #[test]
    fn admissibility_verdicts() {
        let haar = load_filter_pair("haar").unwrap();
        let v = admissibility_check(&haar, AdmissibleSpace::F, 1.0, 0.0, 2.0, 2.0);
        assert!(!v.passes && v.gap < 0.0);
        let hi = load_filter_pair("bior3.11").unwrap();
        let v = admissibility_check(&hi, AdmissibleSpace::F, 0.0, 0.0, 2.0, 2.0);
        assert!(v.passes, "{v:?}");
    }

    #[test]
    fn counterexample_needs_tau() {
        assert!(counterexample_sequence(1, 0.0, 0.0, 2.0, 8).is_err());
        let lam = counterexample_sequence(1, 0.0, 0.125, 2.0, 8).unwrap();
        assert_eq!(lam.resolution(), 9);
        let v = lam.get(1, 3, &[2]).unwrap().re;
        let expect = 2f64.powf(-3.0 * (0.125 - 0.5)) * 2f64.powf(-1.5);
        assert!((v - expect).abs() < 1e-15);
        assert_eq!(lam.get(1, 1, &[0]).unwrap().re, 2f64.powf(-(0.125 - 0.5)) * 2f64.powf(-0.5));
    }

    #[test]
    fn coefficient_csv_sorted() {
        let mut lam = CoeffSequence::zeros(1, 3, 0, 1).unwrap();
        lam.set(1, 1, &[1], Complex64::new(0.5, 0.0)).unwrap();
        let mut buf = Vec::new();
        lam.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "c,j,k0,re,im");
        assert_eq!(lines.len(), 4);
        assert!(lines[3].starts_with("1,1,1,5e-1"));
    }
}
