//! Hausdorff capacity brackets, Choquet integrals, nontangential maximal
//! functions and the admissible-weight constraint.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{SampledField, ScaleGrid};
use crate::levels::block_reduce;

/// Union of grid cells of the torus.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GridSet {
    n: usize,
    resolution: u32,
    mask: Vec<bool>,
}

impl GridSet {
    pub fn new(n: usize, resolution: u32, mask: Vec<bool>) -> Result<Self> {
        if n != 1 && n != 2 {
            return Err(Error::invariant(format!("dimension n = {n} not in {{1, 2}}")));
        }
        if mask.len() != 1usize << (resolution as usize * n) {
            return Err(Error::invariant("mask length does not match 2^(J n)"));
        }
        Ok(Self { n, resolution, mask })
    }

    pub fn empty(n: usize, resolution: u32) -> Result<Self> {
        Self::new(n, resolution, vec![false; 1usize << (resolution as usize * n)])
    }

    pub fn from_cells(n: usize, resolution: u32, cells: &[usize]) -> Result<Self> {
        let mut s = Self::empty(n, resolution)?;
        for &c in cells {
            if c >= s.mask.len() {
                return Err(Error::invariant(format!("cell {c} out of range")));
            }
            s.mask[c] = true;
        }
        Ok(s)
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

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn is_empty(&self) -> bool {
        !self.mask.iter().any(|&b| b)
    }

    pub fn count(&self) -> usize {
        self.mask.iter().filter(|&&b| b).count()
    }

    pub fn contains(&self, other: &GridSet) -> bool {
        self.mask.iter().zip(&other.mask).all(|(&a, &b)| a || !b)
    }

    pub fn union(&self, other: &GridSet) -> Result<GridSet> {
        if self.n != other.n || self.resolution != other.resolution {
            return Err(Error::invariant("grid mismatch in set union"));
        }
        Ok(GridSet { mask: self.mask.iter().zip(&other.mask).map(|(&a, &b)| a || b).collect(), ..self.clone() })
    }

    /// `E + shift h` on the torus.
    pub fn translate(&self, shift: &[i64]) -> GridSet {
        let side = self.side() as i64;
        let mut mask = vec![false; self.mask.len()];
        for (idx, &b) in self.mask.iter().enumerate() {
            if !b {
                continue;
            }
            let dst = if self.n == 1 {
                (idx as i64 + shift[0]).rem_euclid(side) as usize
            } else {
                let a = (idx as i64 / side + shift[0]).rem_euclid(side);
                let c = (idx as i64 % side + shift[1]).rem_euclid(side);
                (a * side + c) as usize
            };
            mask[dst] = true;
        }
        GridSet { mask, ..self.clone() }
    }

    /// `2E` at the same resolution: cell `i` becomes cells `2i, 2i+1` per
    /// axis. The set must lie in `[0, 1/2)^n`.
    pub fn dilate2(&self) -> Result<GridSet> {
        let side = self.side();
        let mut mask = vec![false; self.mask.len()];
        for (idx, &b) in self.mask.iter().enumerate() {
            if !b {
                continue;
            }
            let coords: Vec<usize> = if self.n == 1 { vec![idx] } else { vec![idx / side, idx % side] };
            if coords.iter().any(|&c| 2 * c + 1 >= side) {
                return Err(Error::invariant("dilation by 2 leaves the torus: set must lie in [0, 1/2)^n"));
            }
            if self.n == 1 {
                mask[2 * idx] = true;
                mask[2 * idx + 1] = true;
            } else {
                for a in 0..2 {
                    for c in 0..2 {
                        mask[(2 * coords[0] + a) * side + 2 * coords[1] + c] = true;
                    }
                }
            }
        }
        Ok(GridSet { mask, ..self.clone() })
    }

    /// Lexicographically smallest translate (`false < true`); capacities are
    /// evaluated on it so grid translations give bit-identical brackets.
    pub fn canonical(&self) -> GridSet {
        let side = self.side();
        let shifts: Vec<Vec<i64>> = if self.n == 1 {
            (0..side as i64).map(|s| vec![s]).collect()
        } else {
            (0..side as i64).flat_map(|a| (0..side as i64).map(move |b| vec![a, b])).collect()
        };
        let mut best = self.clone();
        for s in shifts.iter().skip(1) {
            let cand = self.translate(s);
            if cand.mask < best.mask {
                best = cand;
            }
        }
        best
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CapacityMethod {
    Empty,
    ZeroDimensional,
    ExactDp,
    GreedyDyadic,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CapacityBracket {
    pub d: f64,
    pub lower: f64,
    pub upper: f64,
    pub method: CapacityMethod,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CapacitySettings {
    /// Largest `N` for which the 1-D interval DP is used.
    pub exact_max_side: usize,
}

impl Default for CapacitySettings {
    fn default() -> Self {
        Self { exact_max_side: 32 }
    }
}

fn check_d(n: usize, d: f64) -> Result<()> {
    if !(d >= 0.0 && d <= n as f64) {
        return Err(Error::invariant(format!("capacity dimension d = {d} outside [0, {n}]")));
    }
    Ok(())
}

pub fn capacity(set: &GridSet, d: f64) -> Result<CapacityBracket> {
    capacity_with(set, d, &CapacitySettings::default())
}

pub fn capacity_with(set: &GridSet, d: f64, settings: &CapacitySettings) -> Result<CapacityBracket> {
    check_d(set.n, d)?;
    if set.is_empty() {
        return Ok(CapacityBracket { d, lower: 0.0, upper: 0.0, method: CapacityMethod::Empty });
    }
    if d == 0.0 {
        return Ok(CapacityBracket { d, lower: 1.0, upper: 1.0, method: CapacityMethod::ZeroDimensional });
    }
    let canon = set.canonical();
    if set.n == 1 && set.side() <= settings.exact_max_side {
        let v = exact_dp_1d(&canon, d);
        return Ok(CapacityBracket { d, lower: v, upper: v, method: CapacityMethod::ExactDp });
    }
    Ok(CapacityBracket {
        d,
        lower: dyadic_lower_bound(&canon, d),
        upper: greedy_upper(&canon, d),
        method: CapacityMethod::GreedyDyadic,
    })
}

/// Upper end only; skips the lower-bound search.
pub(crate) fn capacity_upper(set: &GridSet, d: f64, settings: &CapacitySettings) -> f64 {
    if set.is_empty() {
        return 0.0;
    }
    if d == 0.0 {
        return 1.0;
    }
    // the DP only sees component lengths and gaps, so it needs no canonical translate
    if set.n == 1 && set.side() <= settings.exact_max_side {
        exact_dp_1d(set, d)
    } else {
        greedy_upper(&set.canonical(), d)
    }
}

/// Exact content of a 1-D cell union under arc covers: optimal covers are
/// hulls of circularly consecutive groups of components, an arc of length
/// `L` costing `(L/2)^d`.
pub fn exact_dp_1d(set: &GridSet, d: f64) -> f64 {
    let side = set.side();
    let h = 1.0 / side as f64;
    let m = &set.mask;
    if !m.iter().any(|&b| b) {
        return 0.0;
    }
    if m.iter().all(|&b| b) {
        return (0.5f64).powf(d);
    }
    let s0 = (0..side).find(|&i| m[i] && !m[(i + side - 1) % side]).unwrap();
    let mut comps: Vec<(usize, usize)> = Vec::new();
    let mut i = 0;
    while i < side {
        if m[(s0 + i) % side] {
            let start = i;
            while i < side && m[(s0 + i) % side] {
                i += 1;
            }
            comps.push((start, i));
        } else {
            i += 1;
        }
    }
    let k = comps.len();
    let cost = |len: usize| (len as f64 * h / 2.0).powf(d);
    let mut best_total = f64::INFINITY;
    for rot in 0..k {
        let seq: Vec<(usize, usize)> = (0..k)
            .map(|i| {
                let (a, b) = comps[(rot + i) % k];
                if rot + i >= k {
                    (a + side, b + side)
                } else {
                    (a, b)
                }
            })
            .collect();
        let mut best = vec![f64::INFINITY; k + 1];
        best[0] = 0.0;
        for end in 1..=k {
            for start in 0..end {
                let c = best[start] + cost(seq[end - 1].1 - seq[start].0);
                if c < best[end] {
                    best[end] = c;
                }
            }
        }
        if best[k] < best_total {
            best_total = best[k];
        }
    }
    best_total
}

/// Per-axis sup of the torus distance from center `c` (half-grid units) to
/// the points of cell `a`.
fn axis_far(c2: usize, a: usize, side: usize) -> f64 {
    let h = 1.0 / side as f64;
    let center = c2 as f64 * h / 2.0;
    let lo = a as f64 * h;
    let hi = lo + h;
    let anti = (center + 0.5).rem_euclid(1.0);
    let torus = |x: f64| {
        let d = (x - center).rem_euclid(1.0);
        d.min(1.0 - d)
    };
    let contains_anti = (anti >= lo && anti <= hi) || (anti + 1.0 >= lo && anti + 1.0 <= hi);
    if contains_anti {
        0.5
    } else {
        torus(lo).max(torus(hi))
    }
}

#[derive(PartialEq)]
struct Cand {
    ratio: f64,
    radius_idx: usize,
    center: usize,
    count: usize,
}

impl Eq for Cand {}

impl Ord for Cand {
    fn cmp(&self, other: &Self) -> Ordering {
        // BinaryHeap is a max-heap: invert so the smallest key pops first;
        // larger radius index means smaller radius
        other
            .ratio
            .partial_cmp(&self.ratio)
            .unwrap()
            .then(self.radius_idx.cmp(&other.radius_idx))
            .then(other.center.cmp(&self.center))
    }
}

impl PartialOrd for Cand {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Greedy cover by closed torus balls centred on the half grid with radii
/// `2^-i`, `i = 0..=J`, picking the smallest cost per newly covered cell.
pub fn greedy_upper(set: &GridSet, d: f64) -> f64 {
    let n = set.n;
    let side = set.side();
    let cells: Vec<usize> = (0..set.mask.len()).filter(|&i| set.mask[i]).collect();
    if cells.is_empty() {
        return 0.0;
    }
    let radii: Vec<f64> = (0..=set.resolution).map(|i| 2f64.powi(-(i as i32))).collect();
    let far: Vec<Vec<f64>> = (0..2 * side).map(|c| (0..side).map(|a| axis_far(c, a, side)).collect()).collect();
    let centers = (2 * side).pow(n as u32);
    let covers = |center: usize, r: f64, cell: usize| -> bool {
        if n == 1 {
            far[center][cell] <= r
        } else {
            let (c0, c1) = (center / (2 * side), center % (2 * side));
            let (a0, a1) = (cell / side, cell % side);
            let (e0, e1) = (far[c0][a0], far[c1][a1]);
            e0 * e0 + e1 * e1 <= r * r
        }
    };
    let mut covered = vec![false; set.mask.len()];
    let mut heap = BinaryHeap::new();
    for (ri, &r) in radii.iter().enumerate() {
        for c in 0..centers {
            let count = cells.iter().filter(|&&x| covers(c, r, x)).count();
            if count > 0 {
                heap.push(Cand { ratio: r.powf(d) / count as f64, radius_idx: ri, center: c, count });
            }
        }
    }
    let mut remaining = cells.len();
    let mut total = 0.0;
    while remaining > 0 {
        let Some(top) = heap.pop() else { break };
        let r = radii[top.radius_idx];
        let fresh = cells.iter().filter(|&&x| !covered[x] && covers(top.center, r, x)).count();
        if fresh == 0 {
            continue;
        }
        if fresh != top.count {
            heap.push(Cand { ratio: r.powf(d) / fresh as f64, count: fresh, ..top });
            continue;
        }
        for &x in &cells {
            if !covered[x] && covers(top.center, r, x) {
                covered[x] = true;
                remaining -= 1;
            }
        }
        total += r.powf(d);
    }
    total
}

/// Dyadic content of a mask: leaves cost `h^d`, a cube costs
/// `min(side^d, sum of children)` when it meets the set.
fn dyadic_content(mask: &[bool], n: usize, resolution: u32, d: f64) -> f64 {
    let mut level: Vec<f64> = mask.iter().map(|&b| if b { 0.5f64.powf(resolution as f64 * d) } else { 0.0 }).collect();
    for l in (0..resolution).rev() {
        let sums = block_reduce_children(&level, n, l + 1);
        let cap = 0.5f64.powf(l as f64 * d);
        level = sums.into_iter().map(|s| if s > 0.0 { s.min(cap) } else { 0.0 }).collect();
    }
    level[0]
}

/// Sums children at level `l` into parents at level `l-1`.
fn block_reduce_children(values: &[f64], n: usize, l: u32) -> Vec<f64> {
    block_reduce(values, n, l, l - 1, false)
}

/// Rigorous lower bound: every ball of radius `r` lies in at most `2^n`
/// dyadic cubes of side below `4r`, in any translate of the dyadic grid.
pub fn dyadic_lower_bound(set: &GridSet, d: f64) -> f64 {
    let side = set.side() as i64;
    let shifts: Vec<Vec<i64>> = if set.n == 1 {
        (0..side).map(|s| vec![s]).collect()
    } else {
        (0..side).flat_map(|a| (0..side).map(move |b| vec![a, b])).collect()
    };
    let best =
        shifts.iter().map(|s| dyadic_content(&set.translate(s).mask, set.n, set.resolution, d)).fold(0.0, f64::max);
    best / (2f64.powi(set.n as i32) * 4f64.powf(d))
}

fn level_sets(values: &[f64]) -> Result<Vec<f64>> {
    if values.iter().any(|&v| v < 0.0 || !v.is_finite()) {
        return Err(Error::invariant("Choquet integrand must be finite and nonnegative"));
    }
    let mut levels: Vec<f64> = values.iter().cloned().filter(|&v| v > 0.0).collect();
    levels.sort_by(|a, b| a.partial_cmp(b).unwrap());
    levels.dedup();
    Ok(levels)
}

/// Layer-cake sum `sum_i (v_i - v_{i-1}) H^d({f >= v_i})` over the distinct
/// positive levels, as a `(lower, upper)` interval.
pub fn choquet_values(
    values: &[f64],
    n: usize,
    resolution: u32,
    d: f64,
    settings: &CapacitySettings,
) -> Result<(f64, f64)> {
    let levels = level_sets(values)?;
    let mut lo = 0.0;
    let mut hi = 0.0;
    let mut prev = 0.0;
    for &v in &levels {
        let set = GridSet::new(n, resolution, values.iter().map(|&x| x >= v).collect())?;
        let b = capacity_with(&set, d, settings)?;
        lo += (v - prev) * b.lower;
        hi += (v - prev) * b.upper;
        prev = v;
    }
    Ok((lo, hi))
}

pub fn choquet_integral(f: &SampledField, d: f64) -> Result<(f64, f64)> {
    check_d(f.dim(), d)?;
    if f.is_complex() {
        return Err(Error::invariant("Choquet integrand must be real"));
    }
    choquet_values(&f.real_parts(), f.dim(), f.resolution(), d, &CapacitySettings::default())
}

/// Settings of the conservative Choquet evaluation used by the constraint.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstraintSettings {
    pub coarse_res_1d: u32,
    pub coarse_res_2d: u32,
    /// Above this many distinct levels, values are rounded up to a geometric ladder.
    pub max_levels: usize,
    pub capacity: CapacitySettings,
}

impl Default for ConstraintSettings {
    fn default() -> Self {
        Self { coarse_res_1d: 5, coarse_res_2d: 3, max_levels: 64, capacity: CapacitySettings::default() }
    }
}

/// Upper end of the Choquet integral, never below the true upper end:
/// values are max-pooled onto a coarse grid and, if needed, rounded up to a
/// geometric ladder anchored at the maximum.
pub fn choquet_upper_conservative(
    values: &[f64],
    n: usize,
    resolution: u32,
    d: f64,
    cs: &ConstraintSettings,
) -> Result<f64> {
    let coarse = if n == 1 { cs.coarse_res_1d } else { cs.coarse_res_2d }.min(resolution);
    let pooled = if coarse < resolution { block_reduce(values, n, resolution, coarse, true) } else { values.to_vec() };
    let mut levels = level_sets(&pooled)?;
    let rounded: Vec<f64> = if levels.len() > cs.max_levels {
        let vmax = *levels.last().unwrap();
        let vmin = levels[0];
        let steps = (cs.max_levels - 1) as f64;
        let rho = (vmax / vmin).powf(1.0 / steps).max(1.0 + 1e-9);
        let ladder: Vec<f64> = (0..cs.max_levels).rev().map(|k| vmax * rho.powf(-(k as f64))).collect();
        let lift = |v: f64| -> f64 {
            if v == 0.0 {
                return 0.0;
            }
            if v >= vmax {
                return v;
            }
            match ladder.iter().find(|&&l| l >= v) {
                Some(&l) => l,
                None => vmax,
            }
        };
        let r: Vec<f64> = pooled.iter().map(|&v| lift(v)).collect();
        levels = level_sets(&r)?;
        r
    } else {
        pooled
    };
    let mut hi = 0.0;
    let mut prev = 0.0;
    for &v in &levels {
        let set = GridSet::new(n, coarse, rounded.iter().map(|&x| x >= v).collect())?;
        hi += (v - prev) * capacity_upper(&set, d, &cs.capacity);
        prev = v;
    }
    Ok(hi)
}

/// Nonnegative weight on (grid x scale grid), rows `[node][cell]`, with an
/// optional mask of cells where it must stay positive.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightField {
    n: usize,
    resolution: u32,
    scales: ScaleGrid,
    values: Vec<f64>,
    mask: Option<Vec<bool>>,
}

impl WeightField {
    pub fn new(n: usize, resolution: u32, scales: ScaleGrid, values: Vec<f64>) -> Result<Self> {
        let cells = 1usize << (resolution as usize * n);
        if values.len() != cells * scales.len() {
            return Err(Error::invariant("weight samples do not match grid x scales"));
        }
        if values.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
            return Err(Error::invariant("weights must be finite and nonnegative"));
        }
        Ok(Self { n, resolution, scales, values, mask: None })
    }

    pub fn constant(n: usize, resolution: u32, scales: ScaleGrid, c: f64) -> Result<Self> {
        let cells = 1usize << (resolution as usize * n);
        Self::new(n, resolution, scales, vec![c; cells * scales.len()])
    }

    pub fn with_mask(mut self, mask: Vec<bool>) -> Result<Self> {
        if mask.len() != self.values.len() {
            return Err(Error::invariant("mask does not match grid x scales"));
        }
        self.mask = Some(mask);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn resolution(&self) -> u32 {
        self.resolution
    }

    pub fn scales(&self) -> &ScaleGrid {
        &self.scales
    }

    pub fn cells(&self) -> usize {
        1usize << (self.resolution as usize * self.n)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn mask(&self) -> Option<&[bool]> {
        self.mask.as_deref()
    }

    pub fn row(&self, node: usize) -> &[f64] {
        let c = self.cells();
        &self.values[node * c..(node + 1) * c]
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { values: self.values.iter().map(|v| v * c).collect(), ..self.clone() }
    }

    /// `omega(cell, t)`, linear in `log t` between nodes, clamped at the ends.
    pub fn value_at(&self, cell: usize, t: f64) -> f64 {
        let pos = self.scales.position(t);
        let last = self.scales.len() - 1;
        if pos <= 0.0 {
            return self.row(0)[cell];
        }
        if pos >= last as f64 {
            return self.row(last)[cell];
        }
        let i = pos.floor() as usize;
        let f = pos - i as f64;
        (1.0 - f) * self.row(i)[cell] + f * self.row(i + 1)[cell]
    }

    /// True when the weight vanishes somewhere the mask requires it positive.
    pub fn violates_mask(&self) -> bool {
        match &self.mask {
            Some(m) => m.iter().zip(&self.values).any(|(&req, &v)| req && v == 0.0),
            None => false,
        }
    }
}

/// `N_beta omega(x) = max{omega(y,t) : |y - x| < beta t}` over the lattice.
pub fn nontangential_max(omega: &WeightField, beta: f64) -> Result<SampledField> {
    SampledField::from_real(omega.n, omega.resolution, nontangential_values(omega, beta)?)
}

pub(crate) fn nontangential_values(omega: &WeightField, beta: f64) -> Result<Vec<f64>> {
    if !(beta >= 1.0) {
        return Err(Error::invariant(format!("aperture beta = {beta} must be >= 1")));
    }
    let side = 1usize << omega.resolution;
    let mut out = vec![0.0f64; omega.cells()];
    for (node, nd) in omega.scales.nodes().iter().enumerate() {
        let row = nontangential_node(omega.row(node), omega.n, side, beta * nd.t);
        for (o, v) in out.iter_mut().zip(row) {
            *o = o.max(v);
        }
    }
    Ok(out)
}

/// Circular max over offsets `-w..=w`, van Herk / Gil-Werman blocks.
fn sliding_max_circ(row: &[f64], w: usize) -> Vec<f64> {
    let len = row.len();
    let k = 2 * w + 1;
    if k >= len {
        let m = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        return vec![m; len];
    }
    let ext: Vec<f64> = (0..len + 2 * w).map(|i| row[(i + len - w) % len]).collect();
    let mut pre = ext.clone();
    let mut suf = ext.clone();
    for i in 1..ext.len() {
        if i % k != 0 {
            pre[i] = pre[i].max(pre[i - 1]);
        }
    }
    for i in (0..ext.len() - 1).rev() {
        if (i + 1) % k != 0 {
            suf[i] = suf[i].max(suf[i + 1]);
        }
    }
    (0..len).map(|x| suf[x].max(pre[x + k - 1])).collect()
}

/// Max of `row` over the open torus ball of the given radius around each cell.
pub(crate) fn nontangential_node(row: &[f64], n: usize, side: usize, radius: f64) -> Vec<f64> {
    let h = 1.0 / side as f64;
    let dist = |i: usize| {
        if i < side / 2 {
            i as f64 * h
        } else {
            (side - i) as f64 * h
        }
    };
    // half-width of the allowed window along the last axis at first-axis distance `a`
    let half = |a: f64| -> Option<usize> {
        let mut w = None;
        for k in 0..=side / 2 {
            let b = k as f64 * h;
            if (a * a + b * b).sqrt() < radius {
                w = Some(k);
            } else {
                break;
            }
        }
        w
    };
    if n == 1 {
        return match half(0.0) {
            Some(w) => sliding_max_circ(row, w),
            None => vec![0.0; side],
        };
    }
    let widths: Vec<Option<usize>> = (0..side).map(|i| half(dist(i))).collect();
    let mut slid: std::collections::BTreeMap<usize, Vec<Vec<f64>>> = std::collections::BTreeMap::new();
    for w in widths.iter().flatten() {
        slid.entry(*w)
            .or_insert_with(|| (0..side).map(|r| sliding_max_circ(&row[r * side..(r + 1) * side], *w)).collect());
    }
    let mut out = vec![0.0f64; side * side];
    for (i, w) in widths.iter().enumerate() {
        let Some(w) = w else { continue };
        let rows = &slid[w];
        for r in 0..side {
            let src = &rows[(r + i) % side];
            for (o, &v) in out[r * side..(r + 1) * side].iter_mut().zip(src) {
                if v > *o {
                    *o = v;
                }
            }
        }
    }
    out
}

/// `(p v q)'`.
pub fn conjugate_exponent(p: f64, q: f64) -> f64 {
    let m = p.max(q);
    if m.is_infinite() {
        1.0
    } else {
        m / (m - 1.0)
    }
}

pub(crate) fn check_hausdorff_params(p: f64, q: f64, tau: f64) -> Result<f64> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::invariant(format!("p = {p} must lie in (1, inf)")));
    }
    if !(q >= 1.0) {
        return Err(Error::invariant(format!("q = {q} must be >= 1")));
    }
    let pq = conjugate_exponent(p, q);
    if !(tau >= 0.0 && tau <= 1.0 / pq + 1e-15) {
        return Err(Error::invariant(format!("tau = {tau} must lie in [0, 1/(p v q)'] = [0, {}]", 1.0 / pq)));
    }
    Ok(pq)
}

/// Upper end of `int (N omega)^{(p v q)'} dH^{n tau (p v q)'}`.
pub fn constraint_value(omega: &WeightField, p: f64, q: f64, tau: f64, cs: &ConstraintSettings) -> Result<f64> {
    let pq = check_hausdorff_params(p, q, tau)?;
    let d = (omega.n as f64 * tau * pq).min(omega.n as f64);
    let nw = nontangential_values(omega, 1.0)?;
    let integrand: Vec<f64> = nw.iter().map(|v| v.powf(pq)).collect();
    choquet_upper_conservative(&integrand, omega.n, omega.resolution, d, cs)
}

/// `(admissible, margin)` with `margin = 1 - upper end`.
pub fn admissible(omega: &WeightField, p: f64, q: f64, tau: f64) -> Result<(bool, f64)> {
    admissible_with(omega, p, q, tau, &ConstraintSettings::default())
}

pub fn admissible_with(omega: &WeightField, p: f64, q: f64, tau: f64, cs: &ConstraintSettings) -> Result<(bool, f64)> {
    let upper = constraint_value(omega, p, q, tau, cs)?;
    let margin = 1.0 - upper;
    Ok((!omega.violates_mask() && margin >= 0.0, margin))
}

/// Rescales `omega` so the constraint's upper end is at most 1, equal to it
/// up to rounding.
pub fn normalize_weight(omega: &WeightField, p: f64, q: f64, tau: f64) -> Result<WeightField> {
    normalize_weight_with(omega, p, q, tau, &ConstraintSettings::default())
}

pub fn normalize_weight_with(
    omega: &WeightField,
    p: f64,
    q: f64,
    tau: f64,
    cs: &ConstraintSettings,
) -> Result<WeightField> {
    let pq = check_hausdorff_params(p, q, tau)?;
    let upper = constraint_value(omega, p, q, tau, cs)?;
    if upper == 0.0 {
        return Err(Error::invariant("cannot normalize the zero weight"));
    }
    let mut c = upper.powf(-1.0 / pq);
    if c == 1.0 {
        return Ok(omega.clone());
    }
    loop {
        let w = omega.scaled(c);
        if constraint_value(&w, p, q, tau, cs)? <= 1.0 {
            return Ok(w);
        }
        c *= 1.0 - f64::EPSILON;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set1(bits: &[u8]) -> GridSet {
        let res = (bits.len() as f64).log2() as u32;
        GridSet::new(1, res, bits.iter().map(|&b| b == 1).collect()).unwrap()
    }

    #[test]
    fn empty_and_zero_dimensional() {
        let e = GridSet::empty(1, 4).unwrap();
        let b = capacity(&e, 0.5).unwrap();
        assert_eq!((b.lower, b.upper), (0.0, 0.0));
        let s = set1(&[0, 1, 0, 0, 0, 0, 1, 0]);
        let b = capacity(&s, 0.0).unwrap();
        assert_eq!((b.lower, b.upper), (1.0, 1.0));
        assert!(capacity(&s, 1.5).is_err());
    }

    #[test]
    fn dp_hand_values() {
        // two single cells at distance 4 cells of 8: either two arcs of
        // length 1/8 or one hull of length 5/8 (or 3/8 around the other side)
        let s = set1(&[1, 0, 0, 0, 1, 0, 0, 0]);
        let d = 0.5;
        let two = 2.0 * (1.0f64 / 16.0).powf(d);
        let hull = (5.0f64 / 16.0).powf(d);
        assert!((exact_dp_1d(&s, d) - two.min(hull)).abs() < 1e-15);
        let s = set1(&[1, 1, 1, 1, 1, 1, 1, 1]);
        assert!((exact_dp_1d(&s, 1.0) - 0.5).abs() < 1e-15);
        // a single arc of length 1/4 costs (1/8)^d; in d = 1 merging never helps
        let s = set1(&[1, 1, 0, 0, 0, 1, 0, 0]);
        assert!((exact_dp_1d(&s, 1.0) - (2.0 / 16.0 + 1.0 / 16.0)).abs() < 1e-15);
    }

    #[test]
    fn bracket_contains_dp_on_small_sets() {
        let s = set1(&[1, 0, 1, 1, 0, 0, 0, 1, 0, 0, 1, 0, 0, 0, 0, 0]);
        for d in [0.3, 0.5, 1.0] {
            let exact = exact_dp_1d(&s.canonical(), d);
            let lo = dyadic_lower_bound(&s, d);
            let hi = greedy_upper(&s.canonical(), d);
            assert!(lo <= exact && exact <= hi, "d={d}: {lo} {exact} {hi}");
        }
    }

    #[test]
    fn choquet_two_level_step() {
        let vals = [0.0, 1.0, 3.0, 3.0, 1.0, 0.0, 0.0, 0.0];
        let d = 0.5;
        let e1 = set1(&[0, 1, 1, 1, 1, 0, 0, 0]);
        let e2 = set1(&[0, 0, 1, 1, 0, 0, 0, 0]);
        let expect = 1.0 * exact_dp_1d(&e1, d) + 2.0 * exact_dp_1d(&e2, d);
        let (lo, hi) = choquet_values(&vals, 1, 3, d, &CapacitySettings::default()).unwrap();
        assert!((lo - expect).abs() < 1e-14 && (hi - expect).abs() < 1e-14);
    }

    #[test]
    fn tau_zero_constraint_is_the_max() {
        let sg = ScaleGrid::new(0, 2, 1).unwrap();
        let mut vals = vec![0.0; 16 * 3];
        vals[5] = 0.8;
        vals[16 + 2] = 0.3;
        let w = WeightField::new(1, 4, sg, vals).unwrap();
        let p = 2.0;
        let v = constraint_value(&w, p, 2.0, 0.0, &ConstraintSettings::default()).unwrap();
        assert!((v - 0.8f64.powf(2.0)).abs() < 1e-15);
        assert!(admissible(&w, p, 2.0, 0.0).unwrap().0);
    }

    #[test]
    fn mask_violation_is_inadmissible() {
        let sg = ScaleGrid::new(0, 1, 1).unwrap();
        let w = WeightField::constant(1, 3, sg, 0.0).unwrap().with_mask(vec![true; 16]).unwrap();
        let w = WeightField {
            values: {
                let mut v = w.values.clone();
                v[0] = 0.1;
                v
            },
            ..w
        };
        assert!(!admissible(&w, 2.0, 2.0, 0.1).unwrap().0);
    }

    #[test]
    fn normalize_is_scale_invariant() {
        let sg = ScaleGrid::new(0, 3, 2).unwrap();
        let vals: Vec<f64> = (0..32 * 8).map(|i| 0.1 + ((i * 37) % 11) as f64 / 7.0).collect();
        let w = WeightField::new(1, 5, sg, vals).unwrap();
        let a = normalize_weight(&w, 2.0, 3.0, 0.2).unwrap();
        let b = normalize_weight(&w.scaled(7.0), 2.0, 3.0, 0.2).unwrap();
        for (x, y) in a.values().iter().zip(b.values()) {
            assert!((x - y).abs() <= 1e-13 * x.abs());
        }
        assert!(admissible(&a, 2.0, 3.0, 0.2).unwrap().0);
    }

    fn naive_nt(omega: &WeightField, beta: f64) -> Vec<f64> {
        let n = omega.dim();
        let side = 1usize << omega.resolution();
        let offsets = crate::maximal::sorted_offsets(n, side);
        let mut out = vec![0.0f64; omega.cells()];
        for (node, nd) in omega.scales().nodes().iter().enumerate() {
            let row = omega.row(node);
            for (x, o) in out.iter_mut().enumerate() {
                for &(off, dist) in &offsets {
                    if dist >= beta * nd.t {
                        break;
                    }
                    let y = if n == 1 {
                        (x + off) % side
                    } else {
                        ((x / side + off / side) % side) * side + (x % side + off % side) % side
                    };
                    *o = o.max(row[y]);
                }
            }
        }
        out
    }

    #[test]
    fn nontangential_matches_direct_scan() {
        for (n, res, j_min) in [(1usize, 6u32, 0i32), (2, 4, 0), (2, 5, 1)] {
            let sg = ScaleGrid::new(j_min, res as i32 - 2, 2).unwrap();
            let cells = 1usize << (res as usize * n);
            let vals: Vec<f64> = (0..cells * sg.len()).map(|i| ((i * 7919) % 101) as f64 / 100.0).collect();
            let w = WeightField::new(n, res, sg, vals).unwrap();
            for beta in [1.0, 1.7] {
                assert_eq!(nontangential_values(&w, beta).unwrap(), naive_nt(&w, beta));
            }
        }
    }
}
