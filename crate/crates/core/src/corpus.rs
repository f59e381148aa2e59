//! Seeded test corpora. Members are stored as sparse Fourier coefficients so
//! the same function can be sampled at several resolutions.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft;
use crate::grid::SampledField;
use crate::hausdorff::GridSet;
use crate::kernels::band_limited_profile;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorpusKind {
    /// Periodized Gaussian envelope times a cosine carrier.
    ModulatedGaussian,
    /// Random coefficients on `1 <= |k| <= max_freq`.
    BandLimited,
    /// One translated band-limited bump supported in a single annulus.
    Atom,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorpusSpec {
    pub n: usize,
    pub count: usize,
    pub seed: u64,
    /// Generators used in turn.
    pub kinds: Vec<CorpusKind>,
    /// Largest frequency radius of the random content.
    pub max_freq: f64,
}

impl CorpusSpec {
    /// Mixed corpus with spectrum below `2^{J-3}`.
    pub fn mixed(n: usize, resolution: u32, count: usize, seed: u64) -> Self {
        Self {
            n,
            count,
            seed,
            kinds: vec![CorpusKind::BandLimited, CorpusKind::ModulatedGaussian, CorpusKind::Atom],
            max_freq: 2f64.powi(resolution as i32 - 3),
        }
    }
}

/// Real, mean-zero trigonometric polynomial with unit `L^2` norm.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldRecipe {
    pub n: usize,
    pub kind: CorpusKind,
    /// `(k, c_k)` for one of each `+-k` pair; the conjugate is implied.
    pub coeffs: Vec<([i64; 2], Complex64)>,
}

impl FieldRecipe {
    fn normalized(n: usize, kind: CorpusKind, coeffs: Vec<([i64; 2], Complex64)>) -> Result<Self> {
        // each stored pair contributes 2|c|^2 to the squared L^2 norm
        let e: f64 = coeffs.iter().map(|(_, c)| 2.0 * c.norm_sqr()).sum();
        if !(e > 0.0) {
            return Err(Error::invariant("generated an empty field"));
        }
        let s = 1.0 / e.sqrt();
        Ok(Self { n, kind, coeffs: coeffs.into_iter().map(|(k, c)| (k, c * s)).collect() })
    }

    /// Samples on the grid of resolution `res`; frequencies at or beyond the
    /// Nyquist limit are dropped.
    pub fn sample(&self, res: u32) -> Result<SampledField> {
        let side = 1usize << res;
        let half = side as i64 / 2;
        let mut spec = vec![Complex64::new(0.0, 0.0); side.pow(self.n as u32)];
        let idx = |k: &[i64; 2]| -> Option<usize> {
            let ok = (0..self.n).all(|a| k[a] > -half && k[a] < half);
            if !ok {
                return None;
            }
            let w = |v: i64| v.rem_euclid(side as i64) as usize;
            Some(if self.n == 1 { w(k[0]) } else { w(k[0]) * side + w(k[1]) })
        };
        let total = spec.len() as f64;
        for (k, c) in &self.coeffs {
            let neg = [-k[0], -k[1]];
            if let (Some(a), Some(b)) = (idx(k), idx(&neg)) {
                spec[a] += c * total;
                spec[b] += c.conj() * total;
            }
        }
        fft::inverse(&mut spec, self.n, side);
        let vals: Vec<f64> = spec.iter().map(|v| v.re).collect();
        Ok(SampledField::from_real(self.n, res, vals)?.remove_mean())
    }
}

/// Half-space representative test: keep `k` with first nonzero entry positive.
fn positive(k: &[i64; 2], n: usize) -> bool {
    if k[0] != 0 {
        k[0] > 0
    } else {
        n == 2 && k[1] > 0
    }
}

fn lattice(n: usize, radius: f64) -> Vec<[i64; 2]> {
    let r = radius.floor() as i64;
    let mut out = Vec::new();
    for a in -r..=r {
        let bs: Vec<i64> = if n == 1 { vec![0] } else { (-r..=r).collect() };
        for b in bs {
            let k = [a, b];
            let rad = ((a * a + b * b) as f64).sqrt();
            if positive(&k, n) && rad <= radius {
                out.push(k);
            }
        }
    }
    out
}

fn gauss(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn random_point(rng: &mut ChaCha8Rng, n: usize) -> [f64; 2] {
    [rng.gen::<f64>(), if n == 2 { rng.gen::<f64>() } else { 0.0 }]
}

fn phase(k: &[i64; 2], c: &[f64; 2]) -> Complex64 {
    let arg = -2.0 * std::f64::consts::PI * (k[0] as f64 * c[0] + k[1] as f64 * c[1]);
    Complex64::from_polar(1.0, arg)
}

fn make(kind: CorpusKind, n: usize, max_freq: f64, rng: &mut ChaCha8Rng) -> Result<FieldRecipe> {
    let coeffs = match kind {
        CorpusKind::BandLimited => lattice(n, max_freq)
            .into_iter()
            .map(|k| {
                let rad = ((k[0] * k[0] + k[1] * k[1]) as f64).sqrt();
                (k, Complex64::new(gauss(rng), gauss(rng)) / (1.0 + rad))
            })
            .collect(),
        CorpusKind::ModulatedGaussian => {
            let centre = random_point(rng, n);
            let sigma = rng.gen_range(1.0 / 32.0..1.0 / 8.0);
            let carrier_len = rng.gen_range(2.0..(max_freq / 2.0).max(2.5));
            let dir = if n == 1 {
                [1.0, 0.0]
            } else {
                let a = rng.gen_range(0.0..std::f64::consts::TAU);
                [a.cos(), a.sin()]
            };
            let xi = [carrier_len * dir[0], carrier_len * dir[1]];
            // Fourier coefficients of the periodized envelope times cos
            let width = 1.0 / (2.0 * std::f64::consts::PI * sigma);
            lattice(n, max_freq + 8.0 * width)
                .into_iter()
                .map(|k| {
                    let env = |shift: f64| -> f64 {
                        let d2: f64 = (0..n).map(|a| (k[a] as f64 - shift * xi[a]).powi(2)).sum();
                        (-2.0 * std::f64::consts::PI.powi(2) * sigma * sigma * d2).exp()
                    };
                    (k, phase(&k, &centre) * (0.5 * (env(1.0) + env(-1.0))))
                })
                .filter(|(_, c)| c.norm() > 1e-18)
                .collect()
        }
        CorpusKind::Atom => {
            let centre = random_point(rng, n);
            let top = max_freq.log2().floor().max(1.0) as i32;
            let level = rng.gen_range(0..top) as f64;
            lattice(n, 2f64.powf(level + 1.0))
                .into_iter()
                .map(|k| {
                    let rad = ((k[0] * k[0] + k[1] * k[1]) as f64).sqrt();
                    (k, phase(&k, &centre) * band_limited_profile(rad / 2f64.powf(level)))
                })
                .filter(|(_, c)| c.norm() > 0.0)
                .collect()
        }
    };
    FieldRecipe::normalized(n, kind, coeffs)
}

/// Recipes of the corpus; member `i` draws from stream `i` of the seed.
pub fn generate_recipes(spec: &CorpusSpec) -> Result<Vec<FieldRecipe>> {
    if spec.n != 1 && spec.n != 2 {
        return Err(Error::invariant(format!("dimension must be 1 or 2, got {}", spec.n)));
    }
    if spec.kinds.is_empty() && spec.count > 0 {
        return Err(Error::invariant("corpus needs at least one generator kind"));
    }
    if !(spec.max_freq >= 1.0) {
        return Err(Error::invariant(format!("max_freq = {} must be >= 1", spec.max_freq)));
    }
    (0..spec.count)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            rng.set_stream(i as u64);
            make(spec.kinds[i % spec.kinds.len()], spec.n, spec.max_freq, &mut rng)
        })
        .collect()
}

/// Corpus sampled at resolution `res`.
pub fn generate(spec: &CorpusSpec, res: u32) -> Result<Vec<SampledField>> {
    generate_recipes(spec)?.par_iter().map(|r| r.sample(res)).collect()
}

/// Random subsets of the grid, each cell kept with probability `density`;
/// empty draws are replaced by a single random cell.
pub fn random_sets(n: usize, res: u32, count: usize, density: f64, seed: u64) -> Result<Vec<GridSet>> {
    let cells = 1usize << (res as usize * n);
    (0..count)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let mut mask: Vec<bool> = (0..cells).map(|_| rng.gen::<f64>() < density).collect();
            if !mask.iter().any(|&b| b) {
                mask[rng.gen_range(0..cells)] = true;
            }
            GridSet::new(n, res, mask)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{dyadic_resample, Direction};

    #[test]
    fn deterministic_and_normalized() {
        let spec = CorpusSpec::mixed(1, 8, 6, 42);
        let a = generate(&spec, 8).unwrap();
        let b = generate(&spec, 8).unwrap();
        assert_eq!(a, b);
        for f in &a {
            assert!((f.l2_norm() - 1.0).abs() < 1e-10, "{}", f.l2_norm());
            assert!(f.mean().norm() < 1e-12);
            assert!(!f.is_complex());
        }
        let other = generate(&CorpusSpec::mixed(1, 8, 6, 43), 8).unwrap();
        assert_ne!(a[0], other[0]);
    }

    #[test]
    fn refinement_matches_resampling() {
        let spec = CorpusSpec::mixed(2, 6, 3, 7);
        for r in generate_recipes(&spec).unwrap() {
            let coarse = r.sample(6).unwrap();
            let fine = r.sample(7).unwrap();
            let up = dyadic_resample(&coarse, Direction::Up).unwrap();
            let err = fine.values().iter().zip(up.values()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            assert!(err < 1e-10, "{:?}: {err}", r.kind);
        }
    }

    #[test]
    fn random_sets_nonempty() {
        let sets = random_sets(1, 5, 20, 0.05, 3).unwrap();
        assert!(sets.iter().all(|s| !s.is_empty()));
    }
}
