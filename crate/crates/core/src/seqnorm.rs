//! Quasi-norms of wavelet coefficient sequences: the Morrey-type `f`/`b`
//! norms, the Hausdorff-type `fh`/`bh` norms, the generic norm induced by a
//! space on the group, and the same-level Peetre-type lift.
//!
//! Parameters carry function-space smoothness `s`; the coefficient weight is
//! `2^{l(s + n/2)}`, i.e. the printed `2^{l(s' + n/q)}` with
//! `s' = s + n/2 - n/q`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::axb::{GField, GSpaceParams};
use crate::error::{Error, Result};
use crate::grid::ScaleGrid;
use crate::hausdorff::{check_hausdorff_params, WeightField};
use crate::levels::{cube_sup, weighted_form, CubeRange, Entry, MixedOrder};
use crate::norms_hausdorff::{optimize_weight, Optimized, OptimizerSettings, WeightDictionary};
use crate::wavelet::CoeffSequence;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SeqSpace {
    F,
    B,
    Fh,
    Bh,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeqSpaceParams {
    pub s: f64,
    pub tau: f64,
    pub p: f64,
    pub q: f64,
    pub a: f64,
}

impl SeqSpaceParams {
    /// `a = 3`.
    pub fn new(s: f64, tau: f64, p: f64, q: f64) -> Self {
        Self { s, tau, p, q, a: 3.0 }
    }

    /// Inverse of [`GSpaceParams::from_function_space`].
    pub fn from_g_params(gp: &GSpaceParams, n: usize) -> Self {
        let nq = if gp.q.is_infinite() { 0.0 } else { n as f64 / gp.q };
        Self { s: gp.s - n as f64 / 2.0 + nq, tau: gp.tau, p: gp.p, q: gp.q, a: gp.a }
    }

    /// Exponent of the level weight `2^{l(s + n/2)}`.
    pub fn level_exponent(&self, n: usize) -> f64 {
        self.s + n as f64 / 2.0
    }

    pub fn validate(&self, space: SeqSpace, n: usize) -> Result<()> {
        let nf = n as f64;
        let (p, q, tau, a) = (self.p, self.q, self.tau, self.a);
        if !(p > 0.0) || !(q > 0.0) {
            return Err(Error::invariant(format!("exponents must be positive, got p = {p}, q = {q}")));
        }
        if !(tau >= 0.0) {
            return Err(Error::invariant(format!("tau = {tau} must be >= 0")));
        }
        let bound = match space {
            SeqSpace::B => nf / p,
            SeqSpace::F => {
                if p.is_infinite() {
                    return Err(Error::invariant("f-space needs p < inf"));
                }
                nf / p.min(q)
            }
            SeqSpace::Fh | SeqSpace::Bh => {
                check_hausdorff_params(p, q, tau)?;
                if !q.is_finite() {
                    return Err(Error::invariant("Hausdorff sequence norms need q < inf"));
                }
                nf * (1.0 / p.min(q) + tau)
            }
        };
        if !(a > bound) {
            return Err(Error::invariant(format!("{space:?} sequence norm needs a > {bound}, got a = {a}")));
        }
        Ok(())
    }
}

/// Headline value (maximum over channels) with the per-channel values.
#[derive(Clone, Debug)]
pub struct SeqNorm {
    pub value: f64,
    pub per_channel: Vec<f64>,
    /// Optimizer records of the Hausdorff norms, one per channel.
    pub optimizer: Vec<Optimized>,
}

fn grid_resolution(lambda: &CoeffSequence) -> u32 {
    lambda.levels().1.max(1)
}

/// `|lambda^c_{l,.}|` broadcast onto the cells of resolution `res`.
fn broadcast(lambda: &CoeffSequence, c: usize, l: u32, res: u32) -> Vec<f64> {
    let n = lambda.dim();
    let side = 1usize << res;
    let shift = res - l;
    let lside = 1usize << l;
    let src = lambda.level(c, l);
    (0..side.pow(n as u32))
        .map(|x| {
            let k = if n == 1 { x >> shift } else { ((x / side) >> shift) * lside + ((x % side) >> shift) };
            src[k].norm()
        })
        .collect()
}

fn channel_entries(lambda: &CoeffSequence, c: usize, sp: &SeqSpaceParams, res: u32) -> Vec<Entry> {
    let (lo, hi) = lambda.levels();
    let e = sp.level_exponent(lambda.dim());
    (lo..=hi)
        .map(|l| Entry {
            level: l as f64,
            factor: 2f64.powf(l as f64 * e),
            measure: 1.0,
            values: broadcast(lambda, c, l, res),
        })
        .collect()
}

/// Sequence norm of `lambda` in `space`, channels combined by maximum.
///
/// `f`/`b` take the sup over every dyadic cube of level `0..=j_max`; `fh`/`bh`
/// minimize over admissible weights `omega(x, 2^-l)` with the shared
/// optimizer (`opt`, ignored otherwise).
pub fn seq_norm(
    lambda: &CoeffSequence,
    sp: &SeqSpaceParams,
    space: SeqSpace,
    opt: &OptimizerSettings,
) -> Result<SeqNorm> {
    let n = lambda.dim();
    sp.validate(space, n)?;
    let res = grid_resolution(lambda);
    let (lo, hi) = lambda.levels();
    let mut per_channel = Vec::new();
    let mut optimizer = Vec::new();
    for c in 1..=lambda.channels() {
        let entries = channel_entries(lambda, c, sp, res);
        match space {
            SeqSpace::F | SeqSpace::B => {
                let order = if space == SeqSpace::F { MixedOrder::F } else { MixedOrder::B };
                let v = cube_sup(&entries, n, res, CubeRange { lo: 0, hi: hi as i32 }, sp.p, sp.q, sp.tau, order)?;
                per_channel.push(v);
            }
            SeqSpace::Fh | SeqSpace::Bh => {
                let order = if space == SeqSpace::Fh { MixedOrder::F } else { MixedOrder::B };
                let scales = ScaleGrid::new(lo as i32, hi as i32, 1)?;
                let dict = WeightDictionary::standard(n, res, &scales, sp.p, sp.q, sp.tau, opt)?;
                let objective = |w: &WeightField| {
                    let rows: Vec<Vec<f64>> = (0..entries.len()).map(|k| w.row(k).to_vec()).collect();
                    weighted_form(&entries, Some(&rows), n, res, sp.p, sp.q, order)
                };
                let r = optimize_weight(objective, &dict, sp.p, sp.q, sp.tau, None, opt)?;
                per_channel.push(r.value);
                optimizer.push(r);
            }
        }
    }
    let value = per_channel.iter().cloned().fold(0.0, f64::max);
    Ok(SeqNorm { value, per_channel, optimizer })
}

/// The group field `sum |lambda_{j,k}| chi_{j,k}(x) chi_{[2^-(j+1), 2^-j)}(t)`
/// of channel `c` on the spatial grid of the sequence, sampled at
/// `m` scale nodes per octave.
pub fn y_sharp_field(lambda: &CoeffSequence, c: usize, m: u32) -> Result<GField> {
    let n = lambda.dim();
    let res = lambda.resolution();
    let (lo, hi) = lambda.levels();
    let scales = ScaleGrid::new(lo as i32, hi as i32, m)?;
    let rows: Vec<Complex64> = scales
        .nodes()
        .iter()
        .flat_map(|nd| broadcast(lambda, c, nd.j as u32, res).into_iter().map(|v| Complex64::new(v, 0.0)))
        .collect();
    GField::new(n, res, scales, rows)
}

/// Applies `y_norm` to [`y_sharp_field`] of every channel; returns the
/// maximum.
pub fn y_sharp_norm<F>(lambda: &CoeffSequence, m: u32, y_norm: F) -> Result<f64>
where
    F: Fn(&GField) -> Result<f64>,
{
    let mut best = 0.0f64;
    for c in 1..=lambda.channels() {
        best = best.max(y_norm(&y_sharp_field(lambda, c, m)?)?);
    }
    Ok(best)
}

/// `t*_Q = [sum_{l(R) = l(Q)} |t_R|^r (1 + 2^l |x_R - x_Q|)^-decay]^{1/r}`
/// with torus distances, per channel and level.
pub fn star_lift(lambda: &CoeffSequence, r: f64, decay: f64) -> Result<CoeffSequence> {
    let n = lambda.dim();
    if !(decay > n as f64) {
        return Err(Error::invariant(format!("decay exponent must exceed n = {n}, got {decay}")));
    }
    if !(r > 0.0) {
        return Err(Error::invariant(format!("r = {r} must be positive")));
    }
    let mut out = lambda.clone();
    let (lo, hi) = lambda.levels();
    for c in 1..=lambda.channels() {
        for l in lo..=hi {
            let side = 1usize << l;
            let cells = side.pow(n as u32);
            // kernel by wrapped offset; |x_R - x_Q| measured in units of 2^-l
            let wrap = |d: usize| d.min(side - d) as f64;
            let kernel: Vec<f64> = (0..cells)
                .map(|o| {
                    let dist = if n == 1 { wrap(o) } else { wrap(o / side).hypot(wrap(o % side)) };
                    (1.0 + dist).powf(-decay)
                })
                .collect();
            let abs: Vec<f64> = lambda.level(c, l).iter().map(|v| v.norm()).collect();
            let lifted: Vec<f64> = (0..cells)
                .into_par_iter()
                .map(|qi| {
                    let offset = |ri: usize| {
                        if n == 1 {
                            (ri + side - qi) % side
                        } else {
                            ((ri / side + side - qi / side) % side) * side + (ri % side + side - qi % side) % side
                        }
                    };
                    let own = abs[qi];
                    if own > 0.0 {
                        // factored so the self term is reproduced exactly
                        let rest: f64 = (0..cells)
                            .filter(|&ri| ri != qi && abs[ri] > 0.0)
                            .map(|ri| (abs[ri] / own).powf(r) * kernel[offset(ri)])
                            .sum();
                        own * (1.0 + rest).powf(1.0 / r)
                    } else {
                        let s: f64 =
                            (0..cells).filter(|&ri| abs[ri] > 0.0).map(|ri| abs[ri].powf(r) * kernel[offset(ri)]).sum();
                        s.powf(1.0 / r)
                    }
                })
                .collect();
            for (dst, v) in out.level_mut(c, l).iter_mut().zip(lifted) {
                *dst = Complex64::new(v, 0.0);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::axb::{norm_g, GSpace};

    fn opt() -> OptimizerSettings {
        OptimizerSettings::default()
    }

    fn one(n: usize, res: u32, j: u32, k: &[usize]) -> CoeffSequence {
        let mut lam = CoeffSequence::zeros(n, res, 0, res - 1).unwrap();
        lam.set(1, j, k, Complex64::new(1.0, 0.0)).unwrap();
        lam
    }

    #[test]
    fn zero_sequence() {
        let lam = CoeffSequence::zeros(1, 6, 0, 5).unwrap();
        for space in [SeqSpace::F, SeqSpace::B, SeqSpace::Fh, SeqSpace::Bh] {
            let sp = SeqSpaceParams::new(0.5, 0.1, 2.0, 2.0);
            assert_eq!(seq_norm(&lam, &sp, space, &opt()).unwrap().value, 0.0);
        }
    }

    #[test]
    fn single_coefficient_formula() {
        // tau = 0: 2^{j(s + n/2)} |Q|^{1/p}, |Q| = 2^{-jn}
        for (n, res, j, k) in [(1usize, 6u32, 3u32, vec![5usize]), (2, 4, 2, vec![1, 3])] {
            let lam = one(n, res, j, &k);
            let (s, p, q) = (0.7, 1.5, 3.0);
            let sp = SeqSpaceParams::new(s, 0.0, p, q);
            let expect = 2f64.powf(j as f64 * (s + n as f64 / 2.0)) * 2f64.powf(-(j as f64) * n as f64 / p);
            for space in [SeqSpace::F, SeqSpace::B] {
                let got = seq_norm(&lam, &sp, space, &opt()).unwrap().value;
                assert!((got - expect).abs() < 1e-12 * expect, "{space:?} {got} {expect}");
            }
        }
    }

    #[test]
    fn single_coefficient_with_tau_takes_own_cube() {
        let lam = one(1, 6, 3, &[5]);
        let sp = SeqSpaceParams::new(0.0, 0.25, 2.0, 2.0);
        // best cube is the coefficient's own: 2^{3 tau} 2^{3/2} 2^{-3/2}
        let got = seq_norm(&lam, &sp, SeqSpace::F, &opt()).unwrap().value;
        assert!((got - 2f64.powf(0.75)).abs() < 1e-12);
    }

    #[test]
    fn homogeneity_and_translation() {
        let mut lam = CoeffSequence::zeros(1, 6, 0, 5).unwrap();
        for (j, k, v) in [(2u32, 1usize, 0.5), (4, 3, -1.0), (5, 20, 2.0)] {
            lam.set(1, j, &[k], Complex64::new(v, 0.3)).unwrap();
        }
        let sp = SeqSpaceParams::new(0.2, 0.1, 2.0, 3.0);
        let base = seq_norm(&lam, &sp, SeqSpace::F, &opt()).unwrap().value;
        let scaled = seq_norm(&lam.scaled(Complex64::new(-3.0, 0.0)), &sp, SeqSpace::F, &opt()).unwrap().value;
        assert!((scaled - 3.0 * base).abs() < 1e-12 * scaled);
        // half-torus shift of k on every level j >= 1
        let mut shifted = CoeffSequence::zeros(1, 6, 0, 5).unwrap();
        for j in 0..=5u32 {
            let side = 1usize << j;
            for k in 0..side {
                let v = lam.level(1, j)[k];
                let kk = if j == 0 { k } else { (k + side / 2) % side };
                shifted.set(1, j, &[kk], v).unwrap();
            }
        }
        let moved = seq_norm(&shifted, &sp, SeqSpace::F, &opt()).unwrap().value;
        assert!((moved - base).abs() < 1e-12 * base);
    }

    #[test]
    fn hausdorff_at_tau_zero_matches_classical() {
        let mut lam = CoeffSequence::zeros(1, 6, 0, 5).unwrap();
        lam.set(1, 3, &[2], Complex64::new(1.0, 0.0)).unwrap();
        lam.set(1, 5, &[9], Complex64::new(0.5, 0.0)).unwrap();
        let sp = SeqSpaceParams::new(0.3, 0.0, 2.0, 2.0);
        let f = seq_norm(&lam, &sp, SeqSpace::F, &opt()).unwrap().value;
        let fh = seq_norm(&lam, &sp, SeqSpace::Fh, &opt()).unwrap();
        assert!((fh.value - f).abs() < 1e-6 * f, "{} {f}", fh.value);
        for r in &fh.optimizer {
            assert!(r.trace.windows(2).all(|w| w[1] <= w[0]));
        }
    }

    #[test]
    fn star_lift_properties() {
        let lam = one(2, 4, 2, &[1, 2]);
        let lift = star_lift(&lam, 2.0, 4.0).unwrap();
        let lv = lift.level(1, 2);
        let peak = lv.iter().map(|v| v.re).fold(0.0, f64::max);
        assert_eq!(lv[4 + 2].re, peak);
        assert!(peak >= 1.0);
        // monotone and dominating
        let mut big = lam.clone();
        big.set(1, 3, &[0, 5], Complex64::new(0.5, 0.0)).unwrap();
        let lb = star_lift(&big, 2.0, 4.0).unwrap();
        for j in 0..4 {
            for (a, b) in lift.level(1, j).iter().zip(lb.level(1, j)) {
                assert!(a.re <= b.re);
            }
            for (a, b) in big.level(1, j).iter().zip(lb.level(1, j)) {
                assert!(a.norm() <= b.re);
            }
        }
        assert!(star_lift(&lam, 2.0, 2.0).is_err());
    }

    #[test]
    fn y_sharp_zero_and_homogeneous() {
        let gp = GSpaceParams::from_function_space(0.3, 0.0, 2.0, 2.0, 3.0, 1);
        let y = |g: &GField| norm_g(g, &gp, GSpace::P, &opt()).map(|r| r.value);
        let zero = CoeffSequence::zeros(1, 6, 0, 5).unwrap();
        assert_eq!(y_sharp_norm(&zero, 2, y).unwrap(), 0.0);
        let lam = one(1, 6, 3, &[4]);
        let a = y_sharp_norm(&lam, 2, y).unwrap();
        let b = y_sharp_norm(&lam.scaled(Complex64::new(2.5, 0.0)), 2, y).unwrap();
        assert!((b - 2.5 * a).abs() < 1e-12 * b);
        let sp = SeqSpaceParams::from_g_params(&gp, 1);
        assert!((sp.s - 0.3).abs() < 1e-15);
    }
}
