//! Hardy-Littlewood and Peetre maximal functions on the periodic grid, and
//! the Fefferman-Stein ratio harness.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::SampledField;
use crate::kernels::{convolve_spectrum, KernelSpec};

/// Centered maximal function: for each sample the largest average of `|f|`
/// over grid cubes of odd side `2r+1 < N` centered there.
pub fn hl_maximal(f: &SampledField) -> SampledField {
    let side = f.side();
    let n = f.dim();
    let abs = f.abs_values();
    let out = hl_maximal_values(&abs, n, side);
    SampledField::from_real(n, f.resolution(), out).expect("grid shape preserved")
}

pub(crate) fn hl_maximal_values(abs: &[f64], n: usize, side: usize) -> Vec<f64> {
    let rmax = (side - 1) / 2;
    match n {
        1 => {
            // prefix over three periods so every window is contiguous
            let mut pre = vec![0.0; 3 * side + 1];
            for i in 0..3 * side {
                pre[i + 1] = pre[i] + abs[i % side];
            }
            (0..side)
                .into_par_iter()
                .map(|x| {
                    let c = x + side;
                    (0..=rmax).map(|r| (pre[c + r + 1] - pre[c - r]) / (2 * r + 1) as f64).fold(0.0, f64::max)
                })
                .collect()
        }
        _ => {
            let w = 3 * side;
            let mut pre = vec![0.0; (w + 1) * (w + 1)];
            for a in 0..w {
                for b in 0..w {
                    pre[(a + 1) * (w + 1) + b + 1] =
                        abs[(a % side) * side + b % side] + pre[a * (w + 1) + b + 1] + pre[(a + 1) * (w + 1) + b]
                            - pre[a * (w + 1) + b];
                }
            }
            let rect = |a0: usize, a1: usize, b0: usize, b1: usize| {
                pre[a1 * (w + 1) + b1] - pre[a0 * (w + 1) + b1] - pre[a1 * (w + 1) + b0] + pre[a0 * (w + 1) + b0]
            };
            (0..side * side)
                .into_par_iter()
                .map(|idx| {
                    let (ca, cb) = (idx / side + side, idx % side + side);
                    (0..=rmax)
                        .map(|r| {
                            let l = (2 * r + 1) as f64;
                            rect(ca - r, ca + r + 1, cb - r, cb + r + 1) / (l * l)
                        })
                        .fold(0.0, f64::max)
                })
                .collect()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PeetreVariant {
    Sharp,
    Tilde,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeetreParams {
    pub a: f64,
    pub t: f64,
    pub variant: PeetreVariant,
    /// Scale nodes per octave for the tilde variant.
    pub m: u32,
}

/// Grid offsets sorted by torus distance (ties by flat index), with distances.
pub(crate) fn sorted_offsets(n: usize, side: usize) -> Vec<(usize, f64)> {
    let h = 1.0 / side as f64;
    let d = |i: usize| {
        let k = if i < side / 2 { i as f64 } else { (side - i) as f64 };
        k * h
    };
    let mut offs: Vec<(usize, f64)> = match n {
        1 => (0..side).map(|i| (i, d(i))).collect(),
        _ => (0..side * side)
            .map(|idx| {
                let (a, b) = (d(idx / side), d(idx % side));
                (idx, (a * a + b * b).sqrt())
            })
            .collect(),
    };
    offs.sort_by(|x, y| x.1.partial_cmp(&y.1).unwrap().then(x.0.cmp(&y.0)));
    offs
}

/// `sup_y g(x+y) / (1 + |y|/t)^a` over all grid offsets, `g >= 0`.
pub fn peetre_sup(g: &[f64], n: usize, side: usize, t: f64, a: f64, offsets: &[(usize, f64)]) -> Vec<f64> {
    let gmax = g.iter().cloned().fold(0.0, f64::max);
    let weights: Vec<f64> = offsets.iter().map(|&(_, d)| (1.0 + d / t).powf(-a)).collect();
    let add = |x: usize, off: usize| -> usize {
        if n == 1 {
            (x + off) % side
        } else {
            let (x0, x1) = (x / side, x % side);
            let (o0, o1) = (off / side, off % side);
            ((x0 + o0) % side) * side + (x1 + o1) % side
        }
    };
    (0..g.len())
        .into_par_iter()
        .map(|x| {
            let mut best = g[x];
            for (k, &(off, _)) in offsets.iter().enumerate().skip(1) {
                let w = weights[k];
                if gmax * w <= best {
                    break;
                }
                let v = g[add(x, off)] * w;
                if v > best {
                    best = v;
                }
            }
            best
        })
        .collect()
}

/// `(Phi*_t f)_a`, or its tilde variant maximizing also over scales in `[t/2, t]`.
pub fn peetre_maximal(f: &SampledField, kernel: &KernelSpec, params: &PeetreParams) -> Result<SampledField> {
    if !(params.a > 0.0) {
        return Err(Error::invariant(format!("Peetre exponent a = {} must be positive", params.a)));
    }
    let side = f.side();
    let n = f.dim();
    let scales: Vec<f64> = match params.variant {
        PeetreVariant::Sharp => vec![params.t],
        PeetreVariant::Tilde => {
            let m = params.m.max(1);
            (0..=m).map(|i| params.t * 2f64.powf(-(i as f64) / m as f64)).collect()
        }
    };
    for &s in &scales {
        kernel.check_scale(side, s)?;
    }
    let spec = f.spectrum();
    let offsets = sorted_offsets(n, side);
    let mut out = vec![0.0f64; f.len()];
    for &s in &scales {
        let g: Vec<f64> = convolve_spectrum(&spec, n, side, kernel, s).iter().map(|v| v.norm()).collect();
        let sup = peetre_sup(&g, n, side, s, params.a, &offsets);
        for (o, v) in out.iter_mut().zip(sup) {
            *o = o.max(v);
        }
    }
    SampledField::from_real(n, f.resolution(), out)
}

/// `||(sum_k (M f_k)^q)^{1/q}||_p / ||(sum_k |f_k|^q)^{1/q}||_p`.
pub fn fefferman_stein_ratio(family: &[SampledField], p: f64, q: f64) -> Result<f64> {
    if family.is_empty() {
        return Err(Error::invariant("empty family"));
    }
    if !(p > 1.0 && p.is_finite()) || !(q > 1.0) {
        return Err(Error::invariant(format!("need p in (1, inf) and q in (1, inf], got p = {p}, q = {q}")));
    }
    for f in &family[1..] {
        family[0].same_grid(f)?;
    }
    let maxed: Vec<Vec<f64>> = family.par_iter().map(|f| hl_maximal(f).real_parts()).collect();
    let plain: Vec<Vec<f64>> = family.iter().map(|f| f.abs_values()).collect();
    let hn = family[0].step().powi(family[0].dim() as i32);
    let mixed = |fs: &[Vec<f64>]| -> f64 {
        let len = fs[0].len();
        let mut acc = 0.0;
        for x in 0..len {
            let inner = if q.is_infinite() {
                fs.iter().map(|v| v[x]).fold(0.0, f64::max)
            } else {
                fs.iter().map(|v| v[x].powf(q)).sum::<f64>().powf(1.0 / q)
            };
            acc += inner.powf(p);
        }
        (acc * hn).powf(1.0 / p)
    };
    let den = mixed(&plain);
    if den == 0.0 {
        return Err(Error::invariant("family is identically zero"));
    }
    Ok(mixed(&maxed) / den)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hl_of_constant() {
        let f = SampledField::from_real(2, 4, vec![-3.0; 256]).unwrap();
        assert!(hl_maximal(&f).real_parts().iter().all(|v| (v - 3.0).abs() < 1e-12));
    }

    #[test]
    fn hl_matches_brute_force() {
        let side = 32;
        let vals: Vec<f64> = (0..side).map(|i| if i < side / 2 { 1.0 } else { 0.0 }).collect();
        let f = SampledField::from_real(1, 5, vals.clone()).unwrap();
        let m = hl_maximal(&f).real_parts();
        for x in 0..side {
            let mut best = 0.0f64;
            for r in 0..=(side - 1) / 2 {
                let mut s = 0.0;
                for d in -(r as i64)..=(r as i64) {
                    s += vals[(x as i64 + d).rem_euclid(side as i64) as usize];
                }
                best = best.max(s / (2 * r + 1) as f64);
            }
            assert!((m[x] - best).abs() < 1e-12);
        }
        // x = 3/4 sits in the zero half; the best window reaches back into [0, 1/2)
        assert!(m[24] > 0.0 && m[24] < 0.5 + 1e-12);
    }

    #[test]
    fn fs_ratio_of_constant_is_one() {
        let f = SampledField::from_real(1, 5, vec![2.0; 32]).unwrap();
        assert!((fefferman_stein_ratio(&[f], 2.0, 2.0).unwrap() - 1.0).abs() < 1e-12);
        assert!(fefferman_stein_ratio(&[], 2.0, 2.0).is_err());
    }

    #[test]
    fn peetre_sup_dominates_and_decreases_in_a() {
        let side = 64;
        let g: Vec<f64> = (0..side).map(|i| ((i * 7 % 13) as f64).sin().abs()).collect();
        let offs = sorted_offsets(1, side);
        let lo = peetre_sup(&g, 1, side, 0.05, 1.0, &offs);
        let hi = peetre_sup(&g, 1, side, 0.05, 3.0, &offs);
        for i in 0..side {
            assert!(lo[i] >= g[i] && hi[i] >= g[i] && lo[i] >= hi[i]);
        }
    }
}
