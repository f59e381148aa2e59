//! Local-means kernels described by their Fourier symbols, and scale
//! convolutions `Phi_t * f = F^{-1}[Phi_hat(t xi) f_hat(xi)]`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::fft;
use crate::grid::SampledField;

/// `|Phi_hat| >= TAUBERIAN_THRESHOLD * max|Phi_hat|` defines the annulus.
pub const TAUBERIAN_THRESHOLD: f64 = 1e-3;
/// Relative tolerance for vanishing moments.
pub const MOMENT_TOL: f64 = 1e-6;
/// Highest moment order actually checked.
const MAX_CHECKED_MOMENT: i32 = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    BandLimited,
    LocalMeans,
    RadialDiff,
}

/// Base profile a kernel is derived from.
#[derive(Clone, Debug, PartialEq)]
pub enum Profile {
    /// `exp(-pi w^2 |xi|^2)` in frequency, `w^-n exp(-pi |x|^2 / w^2)` in space.
    Gaussian { width: f64 },
    /// Spatial samples on `[-extent/2, extent/2)^n`, wrapped DFT layout.
    Spatial { n: usize, side: usize, extent: f64, values: Vec<Complex64> },
    /// Radial frequency profile: value at `|xi| = k * spacing`, `k >= 0`.
    Radial { spacing: f64, values: Vec<f64> },
}

impl Profile {
    fn params(&self) -> serde_json::Value {
        match self {
            Profile::Gaussian { width } => json!({"profile": "gaussian", "width": width}),
            Profile::Spatial { side, extent, .. } => {
                json!({"profile": "sampled_spatial", "side": side, "extent": extent})
            }
            Profile::Radial { spacing, values } => {
                json!({"profile": "sampled_radial", "spacing": spacing, "samples": values.len()})
            }
        }
    }

    /// Fourier transform of the profile on the product lattice `axis^n`.
    fn hat_on_lattice(&self, n: usize, axis: &[f64]) -> Vec<Complex64> {
        let len = axis.len().pow(n as u32);
        match self {
            Profile::Gaussian { width } => (0..len)
                .map(|idx| Complex64::new((-PI * width * width * lattice_r2(idx, n, axis)).exp(), 0.0))
                .collect(),
            Profile::Radial { .. } => {
                (0..len).map(|idx| Complex64::new(self.radial_eval(lattice_r2(idx, n, axis).sqrt()), 0.0)).collect()
            }
            Profile::Spatial { side, extent, values, .. } => {
                let dx = extent / *side as f64;
                let xs: Vec<f64> = (0..*side).map(|i| fft::freq(i, *side) as f64 * dx).collect();
                // e[i][a] = exp(-2 pi i x_i xi_a) dx
                let phase: Vec<Vec<Complex64>> = xs
                    .iter()
                    .map(|&x| axis.iter().map(|&xi| Complex64::from_polar(dx, -2.0 * PI * x * xi)).collect())
                    .collect();
                if n == 1 {
                    (0..axis.len()).map(|a| (0..*side).map(|i| values[i] * phase[i][a]).sum()).collect()
                } else {
                    let m = axis.len();
                    // partial[i0][a1] = sum_i1 k[i0,i1] e[i1][a1]
                    let mut partial = vec![Complex64::new(0.0, 0.0); side * m];
                    for i0 in 0..*side {
                        for a1 in 0..m {
                            let mut acc = Complex64::new(0.0, 0.0);
                            for i1 in 0..*side {
                                acc += values[i0 * side + i1] * phase[i1][a1];
                            }
                            partial[i0 * m + a1] = acc;
                        }
                    }
                    let mut out = vec![Complex64::new(0.0, 0.0); m * m];
                    for a0 in 0..m {
                        for a1 in 0..m {
                            let mut acc = Complex64::new(0.0, 0.0);
                            for i0 in 0..*side {
                                acc += partial[i0 * m + a1] * phase[i0][a0];
                            }
                            out[a0 * m + a1] = acc;
                        }
                    }
                    out
                }
            }
        }
    }

    fn hat_at(&self, xi: [f64; 2], n: usize) -> Complex64 {
        match self {
            Profile::Gaussian { width } => {
                Complex64::new((-PI * width * width * (xi[0] * xi[0] + xi[1] * xi[1])).exp(), 0.0)
            }
            Profile::Radial { .. } => Complex64::new(self.radial_eval((xi[0] * xi[0] + xi[1] * xi[1]).sqrt()), 0.0),
            Profile::Spatial { side, extent, values, .. } => {
                let dx = extent / *side as f64;
                let mut acc = Complex64::new(0.0, 0.0);
                for (idx, v) in values.iter().enumerate() {
                    let k = fft::freq_vec(idx, n, *side);
                    let phase = -2.0 * PI * dx * (k[0] * xi[0] + k[1] * xi[1]);
                    acc += v * Complex64::from_polar(dx.powi(n as i32), phase);
                }
                acc
            }
        }
    }

    /// Catmull-Rom interpolation of a radial profile, zero past the last sample.
    fn radial_eval(&self, r: f64) -> f64 {
        let Profile::Radial { spacing, values } = self else { unreachable!() };
        let u = r / spacing;
        let i = u.floor() as i64;
        let last = values.len() as i64 - 1;
        if i >= last {
            return if u == last as f64 { values[last as usize] } else { 0.0 };
        }
        let at = |k: i64| -> f64 {
            if k < 0 {
                values[(-k) as usize]
            } else if k > last {
                0.0
            } else {
                values[k as usize]
            }
        };
        let f = u - i as f64;
        let (p0, p1, p2, p3) = (at(i - 1), at(i), at(i + 1), at(i + 2));
        p1 + 0.5 * f * (p2 - p0 + f * (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3 + f * (3.0 * (p1 - p2) + p3 - p0)))
    }
}

fn lattice_r2(idx: usize, n: usize, axis: &[f64]) -> f64 {
    if n == 1 {
        axis[idx] * axis[idx]
    } else {
        let m = axis.len();
        let (a, b) = (axis[idx / m], axis[idx % m]);
        a * a + b * b
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Symbol {
    BandLimited,
    LocalMeans { order: u32, base: Profile },
    RadialDiff { base: Profile },
}

/// An admissible kernel: symbol, declared moment order and Tauberian data.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelSpec {
    pub kind: KernelKind,
    pub n: usize,
    symbol: Symbol,
    /// Vanishing moments up to this order (`-1`: none).
    pub moment_order: i32,
    pub eps: f64,
    /// `(lo, hi)` radii bounding the Tauberian annulus.
    pub annulus: (f64, f64),
    /// Radius past which the symbol is negligible; sets the aliasing limit.
    pub support_hi: f64,
    real_even: bool,
}

/// Compactly supported smooth bump: 1 on `[3/5, 5/3]`, 0 off `(1/2, 2)`.
pub fn band_limited_profile(r: f64) -> f64 {
    fn e(x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else {
            (-1.0 / x).exp()
        }
    }
    fn step(x: f64) -> f64 {
        let a = e(x);
        let b = e(1.0 - x);
        if a + b == 0.0 {
            0.0
        } else {
            a / (a + b)
        }
    }
    if r <= 0.5 || r >= 2.0 {
        return 0.0;
    }
    step((r - 0.5) / 0.1) * step((2.0 - r) / (1.0 / 3.0))
}

pub fn make_band_limited_kernel(n: usize, resolution: u32) -> Result<KernelSpec> {
    check_n(n)?;
    if resolution < 3 {
        return Err(Error::invariant(format!("grid too coarse to resolve the annulus: J = {resolution} < 3")));
    }
    Ok(KernelSpec {
        kind: KernelKind::BandLimited,
        n,
        symbol: Symbol::BandLimited,
        moment_order: resolution as i32,
        eps: 1.0,
        annulus: (0.6, 5.0 / 3.0),
        support_hi: 2.0,
        real_even: true,
    })
}

/// `Psi_hat(xi) = (-|2 pi xi|^2)^order k_hat(xi)` for a Gaussian base of the
/// given width.
pub fn gaussian_local_means(n: usize, order: u32, width: f64) -> Result<KernelSpec> {
    check_n(n)?;
    if width <= 0.0 {
        return Err(Error::invariant("gaussian width must be positive"));
    }
    finish(n, Symbol::LocalMeans { order, base: Profile::Gaussian { width } }, 2 * order as i32 - 1, true)
}

/// Local means from spatial samples of the base kernel. `k_base` holds the
/// kernel on `[-extent/2, extent/2)^n` in wrapped order (index 0 is the
/// origin).
pub fn make_local_means_kernel(k_base: &SampledField, order: u32, extent: f64) -> Result<KernelSpec> {
    let n = k_base.dim();
    let side = k_base.side();
    let profile = Profile::Spatial { n, side, extent, values: k_base.values().to_vec() };
    let k0 = profile.hat_at([0.0, 0.0], n);
    if k0.norm() < 1e-12 * k_base.max_abs().max(f64::MIN_POSITIVE) * extent.powi(n as i32) {
        return Err(Error::invariant("not a valid local-means generator: k_hat(0) = 0"));
    }
    let real_even = is_real_even(k_base);
    finish(n, Symbol::LocalMeans { order, base: profile }, 2 * order as i32 - 1, real_even)
}

/// Kernel whose symbol is the Riemann-sum transform of arbitrary spatial
/// samples, with no moment or mean requirement. Used for analyzing wavelets.
pub(crate) fn spatial_symbol_kernel(g: &SampledField, extent: f64) -> Result<KernelSpec> {
    let n = g.dim();
    let profile = Profile::Spatial { n, side: g.side(), extent, values: g.values().to_vec() };
    let real_even = is_real_even(g);
    finish(n, Symbol::LocalMeans { order: 0, base: profile }, -1, real_even)
}

/// `Psi_hat = phi0(xi) - phi0(2 xi)` for a Gaussian `phi0 = exp(-pi w^2 |xi|^2)`.
pub fn gaussian_radial_diff(n: usize, width: f64) -> Result<KernelSpec> {
    check_n(n)?;
    if width <= 0.0 {
        return Err(Error::invariant("gaussian width must be positive"));
    }
    finish(n, Symbol::RadialDiff { base: Profile::Gaussian { width } }, 1, true)
}

/// Radial-difference kernel from frequency samples of `phi0` on
/// `[-extent/2, extent/2)^n` (wrapped order). `r_order` is the caller's
/// claimed flatness of `phi0` at the origin; it is checked through the
/// moments of the resulting kernel.
pub fn make_radial_diff_kernel(phi0: &SampledField, r_order: i32, extent: f64) -> Result<KernelSpec> {
    let n = phi0.dim();
    let side = phi0.side();
    let spacing = extent / side as f64;
    let vals = phi0.values();
    let max = phi0.max_abs();
    if vals.iter().any(|v| v.im.abs() > 1e-12 * max) {
        return Err(Error::invariant("non-radial input: phi0 has imaginary part"));
    }
    if vals[0].re.abs() <= 1e-12 * max || max == 0.0 {
        return Err(Error::invariant("phi0(0) must be nonzero"));
    }
    let radial: Vec<f64> = (0..=side / 2 - 1).map(|k| if n == 1 { vals[k].re } else { vals[k * side].re }).collect();
    let profile = Profile::Radial { spacing, values: radial };
    // exact symmetries of a radial function on the square lattice, then the
    // interpolated radial fit
    for idx in 0..phi0.len() {
        let k = fft::freq_vec(idx, n, side);
        let mirror = |a: f64| (a as i64).rem_euclid(side as i64) as usize;
        let partners: Vec<usize> = if n == 1 {
            vec![mirror(-k[0])]
        } else {
            vec![
                mirror(-k[0]) * side + mirror(k[1]),
                mirror(k[0]) * side + mirror(-k[1]),
                mirror(k[1]) * side + mirror(k[0]),
            ]
        };
        let edge = k.iter().any(|&c| c == -(side as f64) / 2.0);
        if edge {
            continue;
        }
        for p in partners {
            if (vals[p].re - vals[idx].re).abs() > 1e-9 * max {
                return Err(Error::invariant("non-radial input: phi0 is not symmetric"));
            }
        }
        let r = (k[0] * k[0] + k[1] * k[1]).sqrt() * spacing;
        if r < spacing * (side as f64 / 2.0 - 2.0) && (profile.radial_eval(r) - vals[idx].re).abs() > 0.05 * max {
            return Err(Error::invariant("non-radial input: samples do not depend on |xi| only"));
        }
    }
    finish(n, Symbol::RadialDiff { base: profile }, r_order, true)
}

fn is_real_even(f: &SampledField) -> bool {
    let side = f.side();
    let n = f.dim();
    let max = f.max_abs();
    let vals = f.values();
    (0..f.len()).all(|idx| {
        let k = fft::freq_vec(idx, n, side);
        let m = |a: f64| (-(a as i64)).rem_euclid(side as i64) as usize;
        let partner = if n == 1 { m(k[0]) } else { m(k[0]) * side + m(k[1]) };
        vals[idx].im.abs() <= 1e-14 * max && (vals[idx].re - vals[partner].re).abs() <= 1e-14 * max
    })
}

fn check_n(n: usize) -> Result<()> {
    if n != 1 && n != 2 {
        return Err(Error::invariant(format!("dimension n = {n} not in {{1, 2}}")));
    }
    Ok(())
}

fn finish(n: usize, symbol: Symbol, moment_order: i32, real_even: bool) -> Result<KernelSpec> {
    let mut k = KernelSpec {
        kind: match symbol {
            Symbol::BandLimited => KernelKind::BandLimited,
            Symbol::LocalMeans { .. } => KernelKind::LocalMeans,
            Symbol::RadialDiff { .. } => KernelKind::RadialDiff,
        },
        n,
        symbol,
        moment_order,
        eps: 0.0,
        annulus: (0.0, 0.0),
        support_hi: 0.0,
        real_even,
    };
    let (lo, hi, support) = k.locate_annulus()?;
    k.annulus = (lo, hi);
    k.support_hi = support;
    k.eps = if lo > 0.0 { (lo * hi).sqrt() } else { hi / 2.0 };
    Ok(k)
}

impl KernelSpec {
    pub fn is_real_even(&self) -> bool {
        self.real_even
    }

    /// `Phi_hat(xi)`; `xi[1]` is ignored for `n = 1`.
    pub fn symbol_at(&self, xi: [f64; 2]) -> Complex64 {
        let xi = if self.n == 1 { [xi[0], 0.0] } else { xi };
        let r2 = xi[0] * xi[0] + xi[1] * xi[1];
        match &self.symbol {
            Symbol::BandLimited => Complex64::new(band_limited_profile(r2.sqrt()), 0.0),
            Symbol::LocalMeans { order, base } => base.hat_at(xi, self.n) * (-4.0 * PI * PI * r2).powi(*order as i32),
            Symbol::RadialDiff { base } => base.hat_at(xi, self.n) - base.hat_at([2.0 * xi[0], 2.0 * xi[1]], self.n),
        }
    }

    /// Symbol on the product lattice `axis^n` (row-major).
    pub fn symbol_on_lattice(&self, axis: &[f64]) -> Vec<Complex64> {
        let n = self.n;
        let len = axis.len().pow(n as u32);
        match &self.symbol {
            Symbol::BandLimited => {
                (0..len).map(|idx| Complex64::new(band_limited_profile(lattice_r2(idx, n, axis).sqrt()), 0.0)).collect()
            }
            Symbol::LocalMeans { order, base } => {
                let mut out = base.hat_on_lattice(n, axis);
                for (idx, v) in out.iter_mut().enumerate() {
                    *v *= (-4.0 * PI * PI * lattice_r2(idx, n, axis)).powi(*order as i32);
                }
                out
            }
            Symbol::RadialDiff { base } => {
                let a = base.hat_on_lattice(n, axis);
                let doubled: Vec<f64> = axis.iter().map(|x| 2.0 * x).collect();
                let b = base.hat_on_lattice(n, &doubled);
                a.iter().zip(&b).map(|(x, y)| x - y).collect()
            }
        }
    }

    /// Multiplier `Phi_hat(t k)` on the DFT grid of side `side`.
    pub fn multiplier(&self, side: usize, t: f64) -> Vec<Complex64> {
        let axis: Vec<f64> = (0..side).map(|i| t * fft::freq(i, side) as f64).collect();
        self.symbol_on_lattice(&axis)
    }

    /// Smallest scale whose dilated symbol still fits below Nyquist.
    pub fn min_scale(&self, side: usize) -> f64 {
        2.0 * self.support_hi / side as f64
    }

    pub fn check_scale(&self, side: usize, t: f64) -> Result<()> {
        let tmin = self.min_scale(side);
        if !(t > 0.0) || t < tmin * (1.0 - 1e-12) {
            return Err(Error::range(format!(
                "scale t = {t:e} aliases on a grid of {side} points; smallest admissible t is {tmin:e}"
            )));
        }
        Ok(())
    }

    fn directions(&self) -> Vec<[f64; 2]> {
        if self.n == 1 {
            vec![[1.0, 0.0], [-1.0, 0.0]]
        } else {
            (0..16)
                .map(|i| {
                    let a = PI * i as f64 / 16.0;
                    [a.cos(), a.sin()]
                })
                .collect()
        }
    }

    /// `(lo, hi, support)`: component around the peak where the smallest
    /// directional `|Phi_hat|` stays above threshold, and the outermost radius
    /// where any direction exceeds it.
    fn locate_annulus(&self) -> Result<(f64, f64, f64)> {
        if let Symbol::BandLimited = self.symbol {
            return Ok((0.6, 5.0 / 3.0, 2.0));
        }
        let r_max = match &self.symbol {
            Symbol::LocalMeans { base: Profile::Spatial { side, extent, .. }, .. } => *side as f64 / (2.0 * extent),
            _ => 64.0,
        };
        let steps = 4096usize;
        let dr = r_max / steps as f64;
        let dirs = self.directions();
        let mut lower = Vec::with_capacity(steps + 1);
        let mut upper = Vec::with_capacity(steps + 1);
        for s in 0..=steps {
            let r = s as f64 * dr;
            let vals: Vec<f64> = dirs.iter().map(|d| self.symbol_at([r * d[0], r * d[1]]).norm()).collect();
            lower.push(vals.iter().cloned().fold(f64::INFINITY, f64::min));
            upper.push(vals.iter().cloned().fold(0.0, f64::max));
        }
        let peak = upper.iter().cloned().fold(0.0, f64::max);
        if peak == 0.0 {
            return Err(Error::invariant("kernel symbol vanishes identically"));
        }
        let thr = TAUBERIAN_THRESHOLD * peak;
        let arg = (0..=steps).max_by(|&a, &b| lower[a].partial_cmp(&lower[b]).unwrap().then(b.cmp(&a))).unwrap();
        if lower[arg] < thr {
            return Err(Error::invariant("Tauberian condition fails: no annulus where |Phi_hat| >= 1e-3 max"));
        }
        let mut lo = arg;
        while lo > 0 && lower[lo - 1] >= thr {
            lo -= 1;
        }
        let mut hi = arg;
        while hi < steps && lower[hi + 1] >= thr {
            hi += 1;
        }
        let support = (0..=steps).rev().find(|&s| upper[s] >= thr).unwrap_or(hi);
        Ok((lo as f64 * dr, hi as f64 * dr, support as f64 * dr))
    }

    /// `min |Phi_hat|` on the annulus relative to the global peak.
    pub fn tauberian_margin(&self) -> f64 {
        let (lo, hi) = self.annulus;
        let dirs = self.directions();
        let mut min = f64::INFINITY;
        let mut peak = 0.0f64;
        let steps = 2048;
        let r_top = (self.support_hi * 1.5).max(hi);
        for s in 0..=steps {
            let r = r_top * s as f64 / steps as f64;
            for d in &dirs {
                let v = self.symbol_at([r * d[0], r * d[1]]).norm();
                peak = peak.max(v);
                if r >= lo && r <= hi {
                    min = min.min(v);
                }
            }
        }
        min / peak
    }

    /// Spatial samples of the kernel on a periodic window with `points`
    /// samples of spacing `dx` per axis, wrapped order.
    pub fn render_spatial(&self, points: usize, dx: f64) -> Vec<Complex64> {
        let period = points as f64 * dx;
        let axis: Vec<f64> = (0..points).map(|i| fft::freq(i, points) as f64 / period).collect();
        let mut buf = self.symbol_on_lattice(&axis);
        fft::inverse(&mut buf, self.n, points);
        let scale = dx.powi(-(self.n as i32));
        for v in buf.iter_mut() {
            *v *= scale;
        }
        buf
    }

    /// Largest relative moment residual per order `0..=min(R, 4)`.
    ///
    /// Compactly supported symbols have slowly decaying spatial tails; their
    /// moments are taken against a wide Gaussian window, which changes the
    /// moments only by `exp(-pi W^2 / 4)` because the symbol vanishes near 0.
    pub fn moment_residuals(&self) -> Vec<(i32, f64)> {
        let top = self.moment_order.min(MAX_CHECKED_MOMENT);
        if top < 0 {
            return Vec::new();
        }
        let compact = matches!(self.symbol, Symbol::BandLimited);
        let (points, dx, window) = match (compact, self.n) {
            (true, 1) => (1024, 0.25, Some(8.0)),
            (true, _) => (256, 0.25, Some(8.0)),
            (false, _) => (256, 0.125, None),
        };
        let phi = self.render_spatial(points, dx);
        let n = self.n;
        let cell = dx.powi(n as i32);
        let l1: f64 = phi.iter().map(|v| v.norm()).sum::<f64>() * cell;
        let coords = |idx: usize| -> [f64; 2] {
            if n == 1 {
                [fft::freq(idx, points) as f64 * dx, 0.0]
            } else {
                [fft::freq(idx / points, points) as f64 * dx, fft::freq(idx % points, points) as f64 * dx]
            }
        };
        let mut out = Vec::new();
        for order in 0..=top {
            let mut worst = 0.0f64;
            let splits: Vec<(i32, i32)> =
                if n == 1 { vec![(order, 0)] } else { (0..=order).map(|a| (a, order - a)).collect() };
            for (a0, a1) in splits {
                let mut acc = Complex64::new(0.0, 0.0);
                for (idx, v) in phi.iter().enumerate() {
                    let x = coords(idx);
                    let w = match window {
                        Some(wd) => (-PI * (x[0] * x[0] + x[1] * x[1]) / (wd * wd)).exp(),
                        None => 1.0,
                    };
                    acc += v * (x[0].powi(a0) * x[1].powi(a1) * w);
                }
                worst = worst.max(acc.norm() * cell / l1);
            }
            out.push((order, worst));
        }
        out
    }

    /// Checks the declared moments and the Tauberian annulus.
    pub fn validate(&self) -> Result<()> {
        for (order, res) in self.moment_residuals() {
            if res > MOMENT_TOL {
                return Err(Error::invariant(format!(
                    "moment of order {order} is {res:e} relative to ||Phi||_1, declared R = {}",
                    self.moment_order
                )));
            }
        }
        let m = self.tauberian_margin();
        if m < TAUBERIAN_THRESHOLD * (1.0 - 1e-9) {
            return Err(Error::invariant(format!("Tauberian margin {m:e} below 1e-3")));
        }
        Ok(())
    }

    /// Catalog entry `{kind, R, eps, ...profile parameters}`.
    pub fn to_json(&self) -> serde_json::Value {
        let mut v = json!({
            "kind": self.kind,
            "n": self.n,
            "R": self.moment_order,
            "eps": self.eps,
            "annulus": [self.annulus.0, self.annulus.1],
            "support_hi": self.support_hi,
        });
        let extra = match &self.symbol {
            Symbol::BandLimited => {
                json!({"profile": "smooth_bump", "plateau": [0.6, 5.0 / 3.0], "support": [0.5, 2.0]})
            }
            Symbol::LocalMeans { order, base } => {
                let mut p = base.params();
                p["order"] = json!(order);
                p
            }
            Symbol::RadialDiff { base } => base.params(),
        };
        if let (Some(obj), Some(e)) = (v.as_object_mut(), extra.as_object()) {
            for (k, val) in e {
                obj.insert(k.clone(), val.clone());
            }
        }
        v
    }
}

/// Spectrum-domain convolution shared by every scale loop: `spec` is the
/// unnormalized DFT of `f`.
pub fn convolve_spectrum(spec: &[Complex64], n: usize, side: usize, kernel: &KernelSpec, t: f64) -> Vec<Complex64> {
    let mult = kernel.multiplier(side, t);
    let mut buf: Vec<Complex64> = spec.iter().zip(&mult).map(|(a, b)| a * b).collect();
    fft::inverse(&mut buf, n, side);
    buf
}

/// `Phi_t * f`.
pub fn convolve_scale(f: &SampledField, kernel: &KernelSpec, t: f64) -> Result<SampledField> {
    if kernel.n != f.dim() {
        return Err(Error::invariant("kernel and field dimensions differ"));
    }
    kernel.check_scale(f.side(), t)?;
    let mut out = convolve_spectrum(&f.spectrum(), f.dim(), f.side(), kernel, t);
    if !f.is_complex() && kernel.real_even {
        for v in out.iter_mut() {
            v.im = 0.0;
        }
    }
    SampledField::new(f.dim(), f.resolution(), out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn band_limited_profile_values() {
        assert_eq!(band_limited_profile(0.25), 0.0);
        assert_eq!(band_limited_profile(1.0), 1.0);
        assert_eq!(band_limited_profile(0.6), 1.0);
        assert_eq!(band_limited_profile(5.0 / 3.0), 1.0);
        assert_eq!(band_limited_profile(2.0), 0.0);
        assert!(band_limited_profile(0.55) > 0.0 && band_limited_profile(0.55) < 1.0);
    }

    #[test]
    fn band_limited_needs_three_levels() {
        assert!(make_band_limited_kernel(1, 2).is_err());
        assert!(make_band_limited_kernel(1, 3).is_ok());
    }

    #[test]
    fn band_limited_moments_vanish() {
        for n in [1, 2] {
            let k = make_band_limited_kernel(n, 8).unwrap();
            for (order, res) in k.moment_residuals() {
                assert!(res < 1e-8, "n={n} order {order}: {res:e}");
            }
        }
    }

    #[test]
    fn local_means_symbol_shape() {
        let k = gaussian_local_means(1, 1, 1.0).unwrap();
        assert_eq!(k.moment_order, 1);
        assert_eq!(k.symbol_at([0.0, 0.0]).norm(), 0.0);
        let xi: f64 = 0.7;
        let expect = -(2.0 * PI * xi).powi(2) * (-PI * xi * xi).exp();
        assert!((k.symbol_at([xi, 0.0]).re - expect).abs() < 1e-14);
        k.validate().unwrap();
        assert!(k.annulus.0 > 0.0 && k.annulus.1 > k.annulus.0);
    }

    #[test]
    fn radial_diff_is_positive_off_origin() {
        let k = gaussian_radial_diff(2, 1.0).unwrap();
        assert_eq!(k.symbol_at([0.0, 0.0]).norm(), 0.0);
        for i in 1..400 {
            let r = i as f64 * 0.01;
            assert!(k.symbol_at([r, 0.0]).re > 0.0);
            assert!(k.symbol_at([r / 2f64.sqrt(), r / 2f64.sqrt()]).re > 0.0);
        }
        k.validate().unwrap();
    }

    #[test]
    fn local_means_rejects_zero_mean_base() {
        let mut vals = vec![0.0; 16];
        vals[1] = 1.0;
        vals[15] = -1.0;
        let f = SampledField::from_real(1, 4, vals).unwrap();
        assert!(make_local_means_kernel(&f, 1, 4.0).is_err());
    }

    #[test]
    fn sampled_gaussian_matches_analytic() {
        let side = 64;
        let extent = 8.0;
        let dx = extent / side as f64;
        let vals: Vec<f64> = (0..side)
            .map(|i| {
                let x = fft::freq(i, side) as f64 * dx;
                (-PI * x * x).exp()
            })
            .collect();
        let f = SampledField::from_real(1, 6, vals).unwrap();
        let sampled = make_local_means_kernel(&f, 1, extent).unwrap();
        let exact = gaussian_local_means(1, 1, 1.0).unwrap();
        for i in 0..50 {
            let xi = i as f64 * 0.05;
            assert!((sampled.symbol_at([xi, 0.0]) - exact.symbol_at([xi, 0.0])).norm() < 1e-10);
        }
        let axis: Vec<f64> = (0..16).map(|i| 0.1 * fft::freq(i, 16) as f64).collect();
        let lat = sampled.symbol_on_lattice(&axis);
        for (i, &xi) in axis.iter().enumerate() {
            assert!((lat[i] - exact.symbol_at([xi, 0.0])).norm() < 1e-10);
        }
    }

    #[test]
    fn sampled_radial_profile_round_trip() {
        let side = 64;
        let extent = 8.0;
        let sp = extent / side as f64;
        let g = |r2: f64| (-PI * r2).exp();
        let phi0 = SampledField::from_real(
            2,
            6,
            (0..side * side)
                .map(|idx| {
                    let k = fft::freq_vec(idx, 2, side);
                    g((k[0] * k[0] + k[1] * k[1]) * sp * sp)
                })
                .collect(),
        )
        .unwrap();
        let k = make_radial_diff_kernel(&phi0, 1, extent).unwrap();
        let exact = gaussian_radial_diff(2, 1.0).unwrap();
        for i in 0..30 {
            let r = i as f64 * 0.07;
            assert!((k.symbol_at([r, 0.0]) - exact.symbol_at([r, 0.0])).norm() < 2e-3);
        }
        let mut skew = phi0.clone().into_values();
        skew[1].re += 0.5;
        let bad = SampledField::new(2, 6, skew).unwrap();
        assert!(make_radial_diff_kernel(&bad, 1, extent).is_err());
    }

    #[test]
    fn aliasing_is_reported() {
        let k = make_band_limited_kernel(1, 6).unwrap();
        let f = SampledField::from_fn(1, 6, |x| (2.0 * PI * x[0]).sin()).unwrap();
        assert!(convolve_scale(&f, &k, 4.0 / 64.0).is_ok());
        assert!(matches!(convolve_scale(&f, &k, 2.0 / 64.0), Err(Error::NumericalRange(_))));
    }
}
