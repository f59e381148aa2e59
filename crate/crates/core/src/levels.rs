//! Shared evaluation engine: a list of scale entries `(level, factor,
//! measure, values)` reduced either by the Morrey-type sup over dyadic cubes
//! or by the weighted Hausdorff-type forms.
//!
//! An entry `e` contributes `measure_e * (factor_e * v_e(x))^q` to the inner
//! `l^q` sum. Continuous characterizations use nodes `t = 2^{-level}` with
//! `measure = ln2/m` and `factor = t^{-s}`; discrete ones use integer levels,
//! `measure = 1` and `factor = 2^{js}`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Entry {
    pub level: f64,
    pub factor: f64,
    pub measure: f64,
    pub values: Vec<f64>,
}

/// Order of the mixed norm.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum MixedOrder {
    /// `L^p(l^q)`: Triebel-Lizorkin type.
    F,
    /// `l^q(L^p)`: Besov type.
    B,
}

/// Closed range of cube levels `j_P` for the outer sup.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CubeRange {
    pub lo: i32,
    pub hi: i32,
}

/// Sums (or maxima) of `values` over every cube of the given level, cubes in
/// lexicographic `k` order.
pub fn block_reduce(values: &[f64], n: usize, resolution: u32, level: u32, max: bool) -> Vec<f64> {
    let side = 1usize << resolution;
    let count = 1usize << level;
    let per = side / count;
    let mut out = vec![0.0; count.pow(n as u32)];
    match n {
        1 => {
            for (c, o) in out.iter_mut().enumerate() {
                let chunk = &values[c * per..(c + 1) * per];
                *o = if max { chunk.iter().cloned().fold(0.0, f64::max) } else { chunk.iter().sum() };
            }
        }
        _ => {
            for a in 0..side {
                let ca = a / per;
                for b in 0..side {
                    let v = values[a * side + b];
                    let o = &mut out[ca * count + b / per];
                    if max {
                        *o = o.max(v);
                    } else {
                        *o += v;
                    }
                }
            }
        }
    }
    out
}

fn check_common(entries: &[Entry], cells: usize, p: f64, q: f64) -> Result<()> {
    if !(p > 0.0) || !(q > 0.0) {
        return Err(Error::invariant(format!("exponents must be positive, got p = {p}, q = {q}")));
    }
    for e in entries {
        if e.values.len() != cells {
            return Err(Error::invariant("entry length does not match the grid"));
        }
    }
    Ok(())
}

/// `sup_P 2^{j_P n tau} ||{factor_e v_e}||` over cubes with `j_P` in `cubes`,
/// keeping entries with `level >= j_P`.
pub fn cube_sup(
    entries: &[Entry],
    n: usize,
    resolution: u32,
    cubes: CubeRange,
    p: f64,
    q: f64,
    tau: f64,
    order: MixedOrder,
) -> Result<f64> {
    let cells = 1usize << (resolution as usize * n);
    check_common(entries, cells, p, q)?;
    if cubes.lo > cubes.hi || cubes.lo < 0 || cubes.hi as u32 > resolution {
        return Err(Error::invariant(format!("cube levels [{}, {}] outside [0, {resolution}]", cubes.lo, cubes.hi)));
    }
    let hn = 0.5f64.powi((resolution as usize * n) as i32);
    match order {
        MixedOrder::F => {
            if p.is_infinite() {
                return Err(Error::invariant("F-type norms need p < infinity"));
            }
            let mut sorted: Vec<&Entry> = entries.iter().collect();
            sorted.sort_by(|a, b| b.level.partial_cmp(&a.level).unwrap());
            let mut acc = vec![0.0f64; cells];
            let mut next = 0;
            let mut best = 0.0f64;
            for jp in (cubes.lo..=cubes.hi).rev() {
                while next < sorted.len() && sorted[next].level >= jp as f64 {
                    let e = sorted[next];
                    for (a, &v) in acc.iter_mut().zip(&e.values) {
                        if q.is_infinite() {
                            *a = a.max(e.factor * v);
                        } else {
                            *a += e.measure * (e.factor * v).powf(q);
                        }
                    }
                    next += 1;
                }
                let expo = if q.is_infinite() { p } else { p / q };
                let powered: Vec<f64> = acc.iter().map(|&a| a.powf(expo)).collect();
                let sums = block_reduce(&powered, n, resolution, jp as u32, false);
                let scale = 2f64.powf(jp as f64 * n as f64 * tau);
                for s in sums {
                    best = best.max(scale * (hn * s).powf(1.0 / p));
                }
            }
            Ok(best)
        }
        MixedOrder::B => {
            let levels = (cubes.hi - cubes.lo + 1) as usize;
            let mut acc: Vec<Vec<f64>> = (cubes.lo..=cubes.hi).map(|j| vec![0.0; 1usize << (j as usize * n)]).collect();
            for e in entries {
                let powered: Vec<f64> =
                    if p.is_infinite() { e.values.clone() } else { e.values.iter().map(|&v| v.powf(p)).collect() };
                for li in 0..levels {
                    let jp = cubes.lo + li as i32;
                    if e.level < jp as f64 {
                        break;
                    }
                    let red = block_reduce(&powered, n, resolution, jp as u32, p.is_infinite());
                    for (a, r) in acc[li].iter_mut().zip(red) {
                        let local = if p.is_infinite() { r } else { (hn * r).powf(1.0 / p) };
                        if q.is_infinite() {
                            *a = a.max(e.factor * local);
                        } else {
                            *a += e.measure * (e.factor * local).powf(q);
                        }
                    }
                }
            }
            let mut best = 0.0f64;
            for (li, row) in acc.iter().enumerate() {
                let jp = cubes.lo + li as i32;
                let scale = 2f64.powf(jp as f64 * n as f64 * tau);
                for &a in row {
                    let v = if q.is_infinite() { a } else { a.powf(1.0 / q) };
                    best = best.max(scale * v);
                }
            }
            Ok(best)
        }
    }
}

#[inline]
fn ratio(v: f64, w: f64) -> f64 {
    if v == 0.0 {
        0.0
    } else if w == 0.0 {
        f64::INFINITY
    } else {
        v / w
    }
}

/// Weighted forms without the cube sup:
/// F: `||(sum_e mu_e (c_e v_e / w_e)^q)^{1/q}||_p`,
/// B: `(sum_e mu_e (c_e ||v_e / w_e||_p)^q)^{1/q}`.
/// `weights[e]` pairs with `entries[e]`; `None` means `w = 1`. `v = 0`
/// counts as 0 whatever `w` is.
pub fn weighted_form(
    entries: &[Entry],
    weights: Option<&[Vec<f64>]>,
    n: usize,
    resolution: u32,
    p: f64,
    q: f64,
    order: MixedOrder,
) -> Result<f64> {
    let cells = 1usize << (resolution as usize * n);
    check_common(entries, cells, p, q)?;
    if let Some(w) = weights {
        if w.len() != entries.len() || w.iter().any(|r| r.len() != cells) {
            return Err(Error::invariant("weight rows do not match the entries"));
        }
    }
    let hn = 0.5f64.powi((resolution as usize * n) as i32);
    let w_at = |e: usize, x: usize| weights.map_or(1.0, |w| w[e][x]);
    match order {
        MixedOrder::F => {
            let mut acc = vec![0.0f64; cells];
            for (ei, e) in entries.iter().enumerate() {
                for (x, a) in acc.iter_mut().enumerate() {
                    let v = e.factor * ratio(e.values[x], w_at(ei, x));
                    if q.is_infinite() {
                        *a = a.max(v);
                    } else {
                        *a += e.measure * v.powf(q);
                    }
                }
            }
            let expo = if q.is_infinite() { 1.0 } else { 1.0 / q };
            if p.is_infinite() {
                return Ok(acc.iter().map(|a| a.powf(expo)).fold(0.0, f64::max));
            }
            let s: f64 = acc.iter().map(|a| a.powf(expo * p)).sum();
            Ok((hn * s).powf(1.0 / p))
        }
        MixedOrder::B => {
            let mut total = 0.0f64;
            for (ei, e) in entries.iter().enumerate() {
                let local = if p.is_infinite() {
                    (0..cells).map(|x| ratio(e.values[x], w_at(ei, x))).fold(0.0, f64::max)
                } else {
                    let s: f64 = (0..cells).map(|x| ratio(e.values[x], w_at(ei, x)).powf(p)).sum();
                    (hn * s).powf(1.0 / p)
                };
                if q.is_infinite() {
                    total = total.max(e.factor * local);
                } else {
                    total += e.measure * (e.factor * local).powf(q);
                }
            }
            Ok(if q.is_infinite() { total } else { total.powf(1.0 / q) })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry(level: f64, values: Vec<f64>) -> Entry {
        Entry { level, factor: 1.0, measure: 1.0, values }
    }

    #[test]
    fn block_reduce_sums_cubes() {
        let v: Vec<f64> = (0..16).map(|i| i as f64).collect();
        assert_eq!(block_reduce(&v, 1, 4, 2, false), vec![6.0, 22.0, 38.0, 54.0]);
        assert_eq!(block_reduce(&v, 2, 2, 1, true), vec![5.0, 7.0, 13.0, 15.0]);
    }

    #[test]
    fn single_entry_f_matches_hand_value() {
        // one level-2 entry, value 1 on the first cell of 8; tau = 1/2, p = q = 2
        let mut v = vec![0.0; 8];
        v[0] = 1.0;
        let e = vec![entry(2.0, v)];
        let got = cube_sup(&e, 1, 3, CubeRange { lo: 0, hi: 2 }, 2.0, 2.0, 0.5, MixedOrder::F).unwrap();
        // best cube is level 2: 2^{2 * 0.5} (1/8)^{1/2}
        assert!((got - 2.0 * (0.125f64).sqrt()).abs() < 1e-15);
        let b = cube_sup(&e, 1, 3, CubeRange { lo: 0, hi: 2 }, 2.0, 2.0, 0.5, MixedOrder::B).unwrap();
        assert!((b - got).abs() < 1e-15);
    }

    #[test]
    fn weighted_form_infinite_where_weight_vanishes() {
        let e = vec![entry(0.0, vec![1.0, 0.0])];
        let w = vec![vec![0.0, 0.0]];
        let f = weighted_form(&e, Some(&w), 1, 1, 2.0, 2.0, MixedOrder::F).unwrap();
        assert!(f.is_infinite());
        let w = vec![vec![1.0, 0.0]];
        let f = weighted_form(&e, Some(&w), 1, 1, 2.0, 2.0, MixedOrder::F).unwrap();
        assert!((f - 0.5f64.sqrt()).abs() < 1e-15);
    }
}
