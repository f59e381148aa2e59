//! The ax+b group `R^n x R_+`, fields on it, and Peetre-type quasi-norms of
//! such fields.
//!
//! Group law `(x,t)(y,s) = (x+ty, st)`, identity `(0,1)`, left Haar measure
//! `dx dt / t^{n+1}`, module `t^{-n}`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::ScaleGrid;
use crate::hausdorff::check_hausdorff_params;
use crate::levels::{cube_sup, weighted_form, CubeRange, Entry, MixedOrder};
use crate::maximal::{peetre_sup, sorted_offsets};
use crate::norms_hausdorff::{optimize_weight, Optimized, OptimizerSettings, WeightDictionary};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupPoint {
    pub x: Vec<f64>,
    pub t: f64,
}

impl GroupPoint {
    pub fn new(x: Vec<f64>, t: f64) -> Result<Self> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::invariant(format!("group scale t = {t} must be positive")));
        }
        Ok(Self { x, t })
    }

    pub fn identity(n: usize) -> Self {
        Self { x: vec![0.0; n], t: 1.0 }
    }
}

pub fn group_mul(a: &GroupPoint, b: &GroupPoint) -> GroupPoint {
    GroupPoint { x: a.x.iter().zip(&b.x).map(|(x, y)| x + a.t * y).collect(), t: a.t * b.t }
}

pub fn group_inv(a: &GroupPoint) -> GroupPoint {
    GroupPoint { x: a.x.iter().map(|x| -x / a.t).collect(), t: 1.0 / a.t }
}

/// Samples over (grid x scale grid), stored `[node][cell]`.
#[derive(Clone, Debug, PartialEq)]
pub struct GField {
    n: usize,
    resolution: u32,
    scales: ScaleGrid,
    values: Vec<Complex64>,
}

impl GField {
    pub fn new(n: usize, resolution: u32, scales: ScaleGrid, values: Vec<Complex64>) -> Result<Self> {
        let cells = 1usize << (resolution as usize * n);
        if values.len() != cells * scales.len() {
            return Err(Error::invariant(format!(
                "GField has {} samples, expected {} cells x {} scales",
                values.len(),
                cells,
                scales.len()
            )));
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::range("non-finite GField sample"));
        }
        Ok(Self { n, resolution, scales, values })
    }

    /// Samples `F(x, t)` at grid points `x` and lattice scales `t`.
    pub fn from_fn(n: usize, resolution: u32, scales: ScaleGrid, f: impl Fn(&[f64], f64) -> f64) -> Result<Self> {
        let side = 1usize << resolution;
        let h = 1.0 / side as f64;
        let cells = side.pow(n as u32);
        let mut values = Vec::with_capacity(cells * scales.len());
        for nd in scales.nodes() {
            for idx in 0..cells {
                let x: Vec<f64> =
                    if n == 1 { vec![idx as f64 * h] } else { vec![(idx / side) as f64 * h, (idx % side) as f64 * h] };
                values.push(Complex64::new(f(&x, nd.t), 0.0));
            }
        }
        Self::new(n, resolution, scales, values)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn resolution(&self) -> u32 {
        self.resolution
    }

    pub fn side(&self) -> usize {
        1usize << self.resolution
    }

    pub fn cells(&self) -> usize {
        self.side().pow(self.n as u32)
    }

    pub fn scales(&self) -> &ScaleGrid {
        &self.scales
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn at(&self, node: usize, cell: usize) -> Complex64 {
        self.values[node * self.cells() + cell]
    }

    pub fn row(&self, node: usize) -> &[Complex64] {
        let c = self.cells();
        &self.values[node * c..(node + 1) * c]
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        Self { values: self.values.iter().map(|v| v * c).collect(), ..self.clone() }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Bilinear (n=1) or trilinear (n=2) interpolation at cell coordinates
    /// `u` (units of `h`, periodic) and fractional node index `pos`;
    /// `None` outside the scale range.
    fn sample(&self, u: &[f64], pos: f64) -> Option<Complex64> {
        let last = self.scales.len() as f64 - 1.0;
        let eps = 1e-9;
        if pos < -eps || pos > last + eps {
            return None;
        }
        let pos = pos.clamp(0.0, last);
        let k0 = (pos.floor() as usize).min(self.scales.len() - 1);
        let fk = pos - k0 as f64;
        let side = self.side() as i64;
        let axis = |v: f64| -> [(usize, f64); 2] {
            let fl = v.floor();
            let fr = v - fl;
            let i0 = (fl as i64).rem_euclid(side) as usize;
            let i1 = (fl as i64 + 1).rem_euclid(side) as usize;
            [(i0, 1.0 - fr), (i1, fr)]
        };
        let mut acc = Complex64::new(0.0, 0.0);
        let rows: Vec<(usize, f64)> =
            if fk > 0.0 && k0 + 1 < self.scales.len() { vec![(k0, 1.0 - fk), (k0 + 1, fk)] } else { vec![(k0, 1.0)] };
        for (k, wk) in rows {
            if self.n == 1 {
                for (i, w) in axis(u[0]) {
                    if w != 0.0 {
                        acc += self.at(k, i) * (wk * w);
                    }
                }
            } else {
                for (i, wi) in axis(u[0]) {
                    for (j, wj) in axis(u[1]) {
                        if wi * wj != 0.0 {
                            acc += self.at(k, i * self.side() + j) * (wk * wi * wj);
                        }
                    }
                }
            }
        }
        Some(acc)
    }

    fn coords(&self, idx: usize) -> Vec<f64> {
        let side = self.side();
        if self.n == 1 {
            vec![idx as f64]
        } else {
            vec![(idx / side) as f64, (idx % side) as f64]
        }
    }
}

/// `sum F h^n (ln 2 / m) t^{-n}` over the lattice.
pub fn haar_integral(f: &GField) -> Complex64 {
    let h = 1.0 / f.side() as f64;
    let w = f.scales.log_weight() * h.powi(f.n as i32);
    let mut acc = Complex64::new(0.0, 0.0);
    for (node, nd) in f.scales.nodes().iter().enumerate() {
        let s: Complex64 = f.row(node).iter().sum();
        acc += s * (w * nd.t.powi(-(f.n as i32)));
    }
    acc
}

/// Result of a translation: the field and the number of lattice points whose
/// source fell outside the representable window (set to 0).
#[derive(Clone, Debug)]
pub struct Translated {
    pub field: GField,
    pub clipped: usize,
}

fn finish_translation(f: &GField, values: Vec<Complex64>, clipped: usize, what: &str) -> Result<Translated> {
    if clipped == values.len() {
        return Err(Error::range(format!("{what}: every lattice point maps outside the window")));
    }
    let out = GField::new(f.n, f.resolution, f.scales, values)?;
    if clipped > 0 {
        // warn only when the window edge carries non-negligible mass
        let edge = edge_mass(f);
        if edge > 1e-6 * f.max_abs() {
            log::warn!("{what}: {clipped} lattice points clipped, window edge carries |F| up to {edge:.3e}");
        }
    }
    Ok(Translated { field: out, clipped })
}

fn edge_mass(f: &GField) -> f64 {
    let side = f.side();
    let mut m = 0.0f64;
    for node in [0, f.scales.len() - 1] {
        m = m.max(f.row(node).iter().map(|v| v.norm()).fold(0.0, f64::max));
    }
    for node in 0..f.scales.len() {
        for idx in 0..f.cells() {
            let c = f.coords(idx);
            if c.iter().any(|&v| v == 0.0 || v as usize == side - 1) {
                m = m.max(f.at(node, idx).norm());
            }
        }
    }
    m
}

/// `L_{(y,r)} F(x,t) = F((x-y)/r, t/r)`, with `x` measured from the window
/// centre; sources outside `[0,1)^n` or the scale range are clipped.
pub fn left_translate(f: &GField, g: &GroupPoint) -> Result<Translated> {
    check_point(f, g)?;
    let side = f.side() as f64;
    let c = 0.5 * side;
    let shift = -g.t.log2() * f.scales.m as f64;
    let mut values = Vec::with_capacity(f.values.len());
    let mut clipped = 0;
    for node in 0..f.scales.len() {
        let pos = node as f64 - shift;
        for idx in 0..f.cells() {
            let u: Vec<f64> = f.coords(idx).iter().zip(&g.x).map(|(&x, &y)| c + (x - c - y * side) / g.t).collect();
            let inside = u.iter().all(|&v| v > -1e-9 && v < side - 1e-9);
            match (inside, f.sample(&u, pos)) {
                (true, Some(v)) => values.push(v),
                _ => {
                    values.push(Complex64::new(0.0, 0.0));
                    clipped += 1;
                }
            }
        }
    }
    finish_translation(f, values, clipped, "left translation")
}

/// `R_{(y,r)} F(x,t) = F(x + t y, r t)`; the spatial shift is periodic,
/// scales outside the lattice are clipped.
pub fn right_translate(f: &GField, g: &GroupPoint) -> Result<Translated> {
    check_point(f, g)?;
    let side = f.side() as f64;
    let shift = -g.t.log2() * f.scales.m as f64;
    let nodes = f.scales.nodes();
    let mut values = Vec::with_capacity(f.values.len());
    let mut clipped = 0;
    for (node, nd) in nodes.iter().enumerate() {
        let pos = node as f64 + shift;
        for idx in 0..f.cells() {
            let u: Vec<f64> = f.coords(idx).iter().zip(&g.x).map(|(&x, &y)| x + nd.t * y * side).collect();
            match f.sample(&u, pos) {
                Some(v) => values.push(v),
                None => {
                    values.push(Complex64::new(0.0, 0.0));
                    clipped += 1;
                }
            }
        }
    }
    finish_translation(f, values, clipped, "right translation")
}

fn check_point(f: &GField, g: &GroupPoint) -> Result<()> {
    if g.x.len() != f.n {
        return Err(Error::invariant("group point dimension differs from the field"));
    }
    if !(g.t > 0.0) {
        return Err(Error::invariant("group scale must be positive"));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GSpace {
    L,
    P,
    Lh,
    Ph,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GSpaceParams {
    pub s: f64,
    pub tau: f64,
    pub p: f64,
    pub q: f64,
    pub a: f64,
}

impl GSpaceParams {
    pub fn new(s: f64, tau: f64, p: f64, q: f64, a: f64) -> Self {
        Self { s, tau, p, q, a }
    }

    /// Group-side smoothness matching function-space smoothness `s`.
    pub fn from_function_space(s: f64, tau: f64, p: f64, q: f64, a: f64, n: usize) -> Self {
        let nq = if q.is_infinite() { 0.0 } else { n as f64 / q };
        Self { s: s + n as f64 / 2.0 - nq, tau, p, q, a }
    }

    pub fn validate(&self, space: GSpace, n: usize) -> Result<()> {
        let n = n as f64;
        let (p, q, tau, a) = (self.p, self.q, self.tau, self.a);
        if !(p > 0.0) || !(q > 0.0) {
            return Err(Error::invariant(format!("exponents must be positive, got p = {p}, q = {q}")));
        }
        if !(tau >= 0.0) {
            return Err(Error::invariant(format!("tau = {tau} must be >= 0")));
        }
        let bound = match space {
            GSpace::L => n / p,
            GSpace::P => {
                if p.is_infinite() {
                    return Err(Error::invariant("P-space needs p < inf"));
                }
                n / p.min(q)
            }
            GSpace::Lh | GSpace::Ph => {
                if space == GSpace::Ph && !(q > 1.0 && q.is_finite()) {
                    return Err(Error::invariant(format!("PH needs q in (1, inf), got {q}")));
                }
                if space == GSpace::Lh && !(q >= 1.0 && q.is_finite()) {
                    return Err(Error::invariant(format!("LH needs q in [1, inf), got {q}")));
                }
                check_hausdorff_params(p, q, tau)?;
                let base = if space == GSpace::Lh { n / p } else { n / p.min(q) };
                base + n * tau
            }
        };
        let bound = if p.is_infinite() && space == GSpace::L { 0.0 } else { bound };
        if !(a > bound) {
            return Err(Error::invariant(format!("{space:?}-space needs a > {bound}, got a = {a}")));
        }
        Ok(())
    }
}

/// `sup_{y, t/2 <= r <= t} |F(x+y, r)| / (1 + |y|/r)^a` per node.
pub fn g_peetre(f: &GField, a: f64) -> Vec<Vec<f64>> {
    use rayon::prelude::*;
    let offsets = sorted_offsets(f.n, f.side());
    let nodes = f.scales.nodes();
    let per: Vec<Vec<f64>> = (0..nodes.len())
        .into_par_iter()
        .map(|k| {
            let abs: Vec<f64> = f.row(k).iter().map(|v| v.norm()).collect();
            peetre_sup(&abs, f.n, f.side(), nodes[k].t, a, &offsets)
        })
        .collect();
    let m = f.scales.m as usize;
    (0..nodes.len())
        .map(|k| {
            let mut best = per[k].clone();
            for other in per.iter().take((k + m + 1).min(nodes.len())).skip(k + 1) {
                for (b, &v) in best.iter_mut().zip(other) {
                    *b = b.max(v);
                }
            }
            best
        })
        .collect()
}

fn g_entries(f: &GField, gp: &GSpaceParams) -> Vec<Entry> {
    let nq = if gp.q.is_infinite() { 0.0 } else { f.n as f64 / gp.q };
    let w = f.scales.log_weight();
    f.scales
        .nodes()
        .iter()
        .zip(g_peetre(f, gp.a))
        .map(|(nd, values)| Entry { level: nd.level, factor: 2f64.powf(nd.level * (gp.s + nq)), measure: w, values })
        .collect()
}

/// Value of a group-space norm; Hausdorff spaces carry the optimizer record.
#[derive(Clone, Debug)]
pub struct GNorm {
    pub value: f64,
    pub optimizer: Option<Optimized>,
}

pub fn norm_g(f: &GField, gp: &GSpaceParams, space: GSpace, opt: &OptimizerSettings) -> Result<GNorm> {
    gp.validate(space, f.n)?;
    let entries = g_entries(f, gp);
    match space {
        GSpace::L | GSpace::P => {
            let order = if space == GSpace::L { MixedOrder::B } else { MixedOrder::F };
            if f.scales.j_min < 0 {
                return Err(Error::invariant("group norms need scales t <= 1"));
            }
            let hi = (f.scales.j_max.max(f.scales.j_min)).min(f.resolution as i32);
            let cubes = CubeRange { lo: f.scales.j_min, hi };
            let value = cube_sup(&entries, f.n, f.resolution, cubes, gp.p, gp.q, gp.tau, order)?;
            Ok(GNorm { value, optimizer: None })
        }
        GSpace::Lh | GSpace::Ph => {
            let order = if space == GSpace::Lh { MixedOrder::B } else { MixedOrder::F };
            let dict = WeightDictionary::standard(f.n, f.resolution, &f.scales, gp.p, gp.q, gp.tau, opt)?;
            let objective = |w: &crate::hausdorff::WeightField| {
                let rows: Vec<Vec<f64>> = (0..entries.len()).map(|k| w.row(k).to_vec()).collect();
                weighted_form(&entries, Some(&rows), f.n, f.resolution, gp.p, gp.q, order)
            };
            let res = optimize_weight(objective, &dict, gp.p, gp.q, gp.tau, None, opt)?;
            Ok(GNorm { value: res.value, optimizer: Some(res) })
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Left,
    Right,
}

/// Shape of the operator-norm bound of a translation by `(z, r)`.
pub fn bound_shape(space: GSpace, gp: &GSpaceParams, n: usize, side: Side, z: &[f64], r: f64) -> f64 {
    let n = n as f64;
    let nq = if gp.q.is_infinite() { 0.0 } else { n / gp.q };
    let np = if gp.p.is_infinite() { 0.0 } else { n / gp.p };
    let sign = match space {
        GSpace::L | GSpace::P => 1.0,
        GSpace::Lh | GSpace::Ph => -1.0,
    };
    match side {
        Side::Left => r.powf(np - nq - gp.s - sign * n * gp.tau),
        Side::Right => {
            let zn = z.iter().map(|v| v * v).sum::<f64>().sqrt();
            r.powf(gp.s + nq) * 1f64.max(r.powf(-gp.a)) * 1f64.max(r.powf(sign * n * gp.tau)) * (1.0 + zn).powf(gp.a)
        }
    }
}

/// Log-log slope the left-translation bound predicts.
pub fn left_exponent(space: GSpace, gp: &GSpaceParams, n: usize) -> f64 {
    bound_shape(space, gp, n, Side::Left, &vec![0.0; n], 2.0).log2()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundRecord {
    pub side: Side,
    pub z: Vec<f64>,
    pub r: f64,
    pub empirical_ratio: f64,
    pub bound_shape: f64,
}

/// `max over the corpus of norm(T F) / norm(F)` for one translation `T`.
pub fn operator_bound_check(
    space: GSpace,
    gp: &GSpaceParams,
    side: Side,
    z: &[f64],
    r: f64,
    corpus: &[GField],
    opt: &OptimizerSettings,
) -> Result<BoundRecord> {
    if corpus.is_empty() {
        return Err(Error::invariant("empty corpus"));
    }
    let n = corpus[0].n;
    let g = GroupPoint::new(z.to_vec(), r)?;
    let mut ratio = 0.0f64;
    for f in corpus {
        let base = norm_g(f, gp, space, opt)?.value;
        if base == 0.0 {
            return Err(Error::invariant("corpus contains a field of zero norm"));
        }
        let moved = match side {
            Side::Left => left_translate(f, &g)?,
            Side::Right => right_translate(f, &g)?,
        };
        ratio = ratio.max(norm_g(&moved.field, gp, space, opt)?.value / base);
    }
    Ok(BoundRecord {
        side,
        z: z.to_vec(),
        r,
        empirical_ratio: ratio,
        bound_shape: bound_shape(space, gp, n, side, z, r),
    })
}

/// Least-squares slope of `log ratio` against `log r`.
pub fn fit_loglog_slope(rs: &[f64], ratios: &[f64]) -> f64 {
    let xs: Vec<f64> = rs.iter().map(|r| r.ln()).collect();
    let ys: Vec<f64> = ratios.iter().map(|v| v.ln()).collect();
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// `sup |F|` over `(x,t) Q` with `Q = [-1,1]^n x [1/2, 2]`: spatial box of
/// half-width `t`, scales `t/2 ..= 2t` present on the lattice.
pub fn wiener_control(f: &GField) -> Result<GField> {
    let side = f.side();
    let h = 1.0 / side as f64;
    let m = f.scales.m as usize;
    let nodes = f.scales.nodes();
    let abs: Vec<Vec<f64>> = (0..nodes.len()).map(|k| f.row(k).iter().map(|v| v.norm()).collect()).collect();
    let mut values = Vec::with_capacity(f.values.len());
    for (k, nd) in nodes.iter().enumerate() {
        let lo = k.saturating_sub(m);
        let hi = (k + m).min(nodes.len() - 1);
        let mut rowmax = vec![0.0f64; f.cells()];
        for row in &abs[lo..=hi] {
            for (o, &v) in rowmax.iter_mut().zip(row) {
                *o = o.max(v);
            }
        }
        let mut w = 0usize;
        while ((w + 1) as f64) * h <= nd.t * (1.0 + 1e-12) && w < side / 2 {
            w += 1;
        }
        values.extend(box_max(&rowmax, f.n, side, w).into_iter().map(|v| Complex64::new(v, 0.0)));
    }
    GField::new(f.n, f.resolution, f.scales, values)
}

/// Periodic max over offsets `[-w, w]^n`.
fn box_max(v: &[f64], n: usize, side: usize, w: usize) -> Vec<f64> {
    let line = |xs: &[f64]| -> Vec<f64> {
        (0..side).map(|i| (0..=2 * w).map(|d| xs[(i + side + d - w) % side]).fold(0.0, f64::max)).collect()
    };
    if n == 1 {
        return line(v);
    }
    let mut rows = vec![0.0; side * side];
    for r in 0..side {
        rows[r * side..(r + 1) * side].copy_from_slice(&line(&v[r * side..(r + 1) * side]));
    }
    let mut out = vec![0.0; side * side];
    for c in 0..side {
        let col: Vec<f64> = (0..side).map(|r| rows[r * side + c]).collect();
        for (r, val) in line(&col).into_iter().enumerate() {
            out[r * side + c] = val;
        }
    }
    out
}

/// `(v, r1, r2)` with `w_Y(x,t) <= (1+|x|)^v (t^{r2} + t^{-r1})`.
pub fn weight_wy_exponents(gp: &GSpaceParams, n: usize) -> (f64, f64, f64) {
    let n = n as f64;
    let (s, t, p, a) = (gp.s, gp.tau, gp.p, gp.a);
    let ip = if p.is_infinite() { 0.0 } else { 1.0 / p };
    let r1 = [s + n * t + n * (0.5 - ip), -s + n * t + n * (ip - 0.5), s + a - n / 2.0, -s - n / 2.0 + a]
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max);
    let r2 = [-s + n * t + n * (ip - 0.5), s - n * (ip - 0.5) + n * t, s + n / 2.0, -s + n / 2.0 + a]
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max);
    (a, r1, r2)
}
