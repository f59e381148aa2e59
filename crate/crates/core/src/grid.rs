//! Fields on the periodic grid, dyadic cubes, scale grids and resampling.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft;

/// Tolerance used for the mean-zero flag, relative to the largest sample.
pub const MEAN_ZERO_TOL: f64 = 1e-12;

/// Samples of a function on the uniform grid `h Z^n / Z^n`, `h = 2^-J`.
///
/// Row-major for `n = 2`: flat index `i0 * N + i1` holds the sample at
/// `(i0 h, i1 h)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledField {
    n: usize,
    resolution: u32,
    values: Vec<Complex64>,
    complex: bool,
    mean_zero: bool,
}

impl SampledField {
    pub fn new(n: usize, resolution: u32, values: Vec<Complex64>) -> Result<Self> {
        check_dims(n, resolution)?;
        let len = 1usize << (resolution as usize * n);
        if values.len() != len {
            return Err(Error::invariant(format!(
                "value array has {} samples, expected 2^(J n) = {}",
                values.len(),
                len
            )));
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::range("non-finite sample"));
        }
        let complex = values.iter().any(|v| v.im != 0.0);
        Ok(Self { n, resolution, values, complex, mean_zero: false })
    }

    pub fn from_real(n: usize, resolution: u32, values: Vec<f64>) -> Result<Self> {
        Self::new(n, resolution, values.into_iter().map(|v| Complex64::new(v, 0.0)).collect())
    }

    pub fn zeros(n: usize, resolution: u32) -> Result<Self> {
        check_dims(n, resolution)?;
        let len = 1usize << (resolution as usize * n);
        Ok(Self { n, resolution, values: vec![Complex64::new(0.0, 0.0); len], complex: false, mean_zero: true })
    }

    /// Samples a real function given the grid point coordinates.
    pub fn from_fn(n: usize, resolution: u32, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        check_dims(n, resolution)?;
        let side = 1usize << resolution;
        let h = 1.0 / side as f64;
        let len = side.pow(n as u32);
        let values = (0..len)
            .map(|idx| {
                let x = point(idx, n, side, h);
                f(&x[..n])
            })
            .collect();
        Self::from_real(n, resolution, values)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn resolution(&self) -> u32 {
        self.resolution
    }

    /// Samples per axis, `N = 2^J`.
    pub fn side(&self) -> usize {
        1usize << self.resolution
    }

    /// Grid step `h = 2^-J`.
    pub fn step(&self) -> f64 {
        1.0 / self.side() as f64
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn is_complex(&self) -> bool {
        self.complex
    }

    pub fn is_mean_zero(&self) -> bool {
        self.mean_zero
    }

    pub fn real_parts(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.re).collect()
    }

    pub fn abs_values(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm()).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.norm()))
    }

    pub fn mean(&self) -> Complex64 {
        self.values.iter().sum::<Complex64>() / self.values.len() as f64
    }

    /// Sets the mean-zero flag after checking the invariant.
    pub fn with_mean_zero(mut self) -> Result<Self> {
        let m = self.mean().norm();
        if m > MEAN_ZERO_TOL * self.max_abs() && m > 0.0 {
            return Err(Error::invariant(format!("mean_zero set but |mean| = {m:e} exceeds 1e-12 * max|value|")));
        }
        self.mean_zero = true;
        Ok(self)
    }

    /// Subtracts the mean and sets the flag.
    pub fn remove_mean(mut self) -> Self {
        let m = self.mean();
        for v in self.values.iter_mut() {
            *v -= m;
        }
        // the subtraction can leave rounding residue above the flag tolerance
        let r = self.mean();
        for v in self.values.iter_mut() {
            *v -= r;
        }
        self.mean_zero = true;
        self
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        let values: Vec<Complex64> = self.values.iter().map(|v| v * c).collect();
        let complex = values.iter().any(|v| v.im != 0.0);
        Self { values, complex, ..self.clone() }
    }

    pub fn add(&self, other: &SampledField) -> Result<Self> {
        self.same_grid(other)?;
        let values: Vec<Complex64> = self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect();
        let complex = values.iter().any(|v| v.im != 0.0);
        Ok(Self { values, complex, mean_zero: self.mean_zero && other.mean_zero, ..self.clone() })
    }

    pub fn conj(&self) -> Self {
        let values = self.values.iter().map(|v| v.conj()).collect();
        Self { values, ..self.clone() }
    }

    /// `g(x) = f(x - shift h)` for an integer grid shift.
    pub fn translate(&self, shift: &[i64]) -> Self {
        let side = self.side() as i64;
        let mut out = vec![Complex64::new(0.0, 0.0); self.len()];
        match self.n {
            1 => {
                for (i, o) in out.iter_mut().enumerate() {
                    let src = (i as i64 - shift[0]).rem_euclid(side) as usize;
                    *o = self.values[src];
                }
            }
            _ => {
                for (idx, o) in out.iter_mut().enumerate() {
                    let i0 = (idx as i64 / side - shift[0]).rem_euclid(side);
                    let i1 = (idx as i64 % side - shift[1]).rem_euclid(side);
                    *o = self.values[(i0 * side + i1) as usize];
                }
            }
        }
        Self { values: out, ..self.clone() }
    }

    /// Discrete `L^2` norm `(h^n sum |f|^2)^(1/2)`.
    pub fn l2_norm(&self) -> f64 {
        let hn = self.step().powi(self.n as i32);
        (hn * self.values.iter().map(|v| v.norm_sqr()).sum::<f64>()).sqrt()
    }

    /// Coordinates of the sample at a flat index.
    pub fn point(&self, idx: usize) -> [f64; 2] {
        point(idx, self.n, self.side(), self.step())
    }

    pub fn same_grid(&self, other: &SampledField) -> Result<()> {
        if self.n != other.n || self.resolution != other.resolution {
            return Err(Error::invariant(format!(
                "grid mismatch: (n={}, J={}) vs (n={}, J={})",
                self.n, self.resolution, other.n, other.resolution
            )));
        }
        Ok(())
    }

    /// Unnormalized DFT of the samples.
    pub fn spectrum(&self) -> Vec<Complex64> {
        let mut buf = self.values.clone();
        fft::forward(&mut buf, self.n, self.side());
        buf
    }

    /// Rebuilds a field from a spectrum on the same grid, keeping only the
    /// real part when the source was real.
    pub fn from_spectrum_like(&self, mut spec: Vec<Complex64>, keep_complex: bool) -> Self {
        fft::inverse(&mut spec, self.n, self.side());
        if !keep_complex {
            for v in spec.iter_mut() {
                v.im = 0.0;
            }
        }
        let complex = spec.iter().any(|v| v.im != 0.0);
        Self { values: spec, complex, ..self.clone() }
    }

    pub(crate) fn raw(n: usize, resolution: u32, values: Vec<Complex64>, mean_zero: bool) -> Self {
        let complex = values.iter().any(|v| v.im != 0.0);
        Self { n, resolution, values, complex, mean_zero }
    }
}

fn check_dims(n: usize, resolution: u32) -> Result<()> {
    if n != 1 && n != 2 {
        return Err(Error::invariant(format!("dimension n = {n} not in {{1, 2}}")));
    }
    if resolution == 0 || resolution as usize * n > 28 {
        return Err(Error::invariant(format!("resolution J = {resolution} out of range for n = {n}")));
    }
    Ok(())
}

#[inline]
pub(crate) fn point(idx: usize, n: usize, side: usize, h: f64) -> [f64; 2] {
    if n == 1 {
        [idx as f64 * h, 0.0]
    } else {
        [(idx / side) as f64 * h, (idx % side) as f64 * h]
    }
}

/// The dyadic cube `2^-j([0,1)^n + k)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DyadicCube {
    pub j: i32,
    pub k: Vec<i64>,
}

impl DyadicCube {
    pub fn new(j: i32, k: Vec<i64>) -> Self {
        Self { j, k }
    }

    pub fn dim(&self) -> usize {
        self.k.len()
    }

    pub fn side(&self) -> f64 {
        2f64.powi(-self.j)
    }

    pub fn corner(&self) -> Vec<f64> {
        self.k.iter().map(|&k| k as f64 * self.side()).collect()
    }

    pub fn center(&self) -> Vec<f64> {
        let s = self.side();
        self.k.iter().map(|&k| k as f64 * s + 0.5 * s).collect()
    }

    pub fn parent(&self) -> DyadicCube {
        DyadicCube { j: self.j - 1, k: self.k.iter().map(|&k| k.div_euclid(2)).collect() }
    }

    pub fn contains(&self, other: &DyadicCube) -> bool {
        if other.j < self.j || other.dim() != self.dim() {
            return false;
        }
        let shift = other.j - self.j;
        self.k.iter().zip(&other.k).all(|(&a, &b)| b >> shift == a)
    }

    /// Flat grid indices of the cells inside the cube (k taken modulo the torus).
    pub fn cells(&self, resolution: u32) -> Result<Vec<usize>> {
        if self.j < 0 || self.j as u32 > resolution {
            return Err(Error::invariant(format!(
                "cube at level {} is not a union of cells at resolution {}",
                self.j, resolution
            )));
        }
        let side = 1usize << resolution;
        let per = 1usize << (resolution - self.j as u32);
        let count = 1i64 << self.j;
        let start: Vec<usize> = self.k.iter().map(|&k| k.rem_euclid(count) as usize * per).collect();
        Ok(match self.dim() {
            1 => (start[0]..start[0] + per).collect(),
            _ => {
                let mut out = Vec::with_capacity(per * per);
                for a in start[0]..start[0] + per {
                    for b in start[1]..start[1] + per {
                        out.push(a * side + b);
                    }
                }
                out
            }
        })
    }
}

/// `(side, lower-left corner, center)`.
pub fn cube_geometry(q: &DyadicCube) -> (f64, Vec<f64>, Vec<f64>) {
    (q.side(), q.corner(), q.center())
}

/// Every cube of the torus with level in `[j_min, j_max]`, levels ascending,
/// `k` lexicographic.
pub fn enumerate_cubes(n: usize, j_min: i32, j_max: i32, resolution: u32) -> Result<Vec<DyadicCube>> {
    if j_min > j_max {
        return Err(Error::invariant("degenerate level window"));
    }
    if j_min < 0 || j_max as i64 > resolution as i64 {
        return Err(Error::invariant(format!("level window [{j_min}, {j_max}] outside [0, {resolution}]")));
    }
    let mut out = Vec::new();
    for j in j_min..=j_max {
        let count = 1i64 << j;
        match n {
            1 => out.extend((0..count).map(|k| DyadicCube::new(j, vec![k]))),
            2 => {
                for a in 0..count {
                    for b in 0..count {
                        out.push(DyadicCube::new(j, vec![a, b]));
                    }
                }
            }
            _ => return Err(Error::invariant(format!("dimension n = {n} not in {{1, 2}}"))),
        }
    }
    Ok(out)
}

/// Indicator of a cube sampled at resolution `J`.
pub fn indicator(q: &DyadicCube, resolution: u32) -> Result<SampledField> {
    let n = q.dim();
    let mut f = SampledField::zeros(n, resolution)?;
    let cells = q.cells(resolution)?;
    for c in cells {
        f.values[c] = Complex64::new(1.0, 0.0);
    }
    f.mean_zero = false;
    Ok(f)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Up,
    Down,
}

/// Band-limited resampling: zero-padding (`Up`, `J+1`) or truncation
/// (`Down`, `J-1`) of the spectrum. Nyquist bins are split or folded
/// symmetrically so real fields stay real.
pub fn dyadic_resample(f: &SampledField, dir: Direction) -> Result<SampledField> {
    let n = f.n;
    let side = f.side();
    let spec = f.spectrum();
    let (new_res, new_side) = match dir {
        Direction::Up => (f.resolution + 1, side * 2),
        Direction::Down => {
            if f.resolution < 2 {
                return Err(Error::invariant("cannot halve a grid with J < 2"));
            }
            (f.resolution - 1, side / 2)
        }
    };
    check_dims(n, new_res)?;
    let ratio = (new_side as f64 / side as f64).powi(n as i32);
    let mut out = vec![Complex64::new(0.0, 0.0); new_side.pow(n as u32)];
    let new_index = |k: i64| k.rem_euclid(new_side as i64) as usize;
    // per-axis weights and target frequencies of one source frequency
    let targets = |k: i64| -> Vec<(i64, f64)> {
        match dir {
            Direction::Up => {
                if k == -(side as i64) / 2 {
                    vec![(k, 0.5), (-k, 0.5)]
                } else {
                    vec![(k, 1.0)]
                }
            }
            Direction::Down => {
                let half = new_side as i64 / 2;
                if k > -half && k < half {
                    vec![(k, 1.0)]
                } else if k == half || k == -half {
                    vec![(-half, 1.0)]
                } else {
                    vec![]
                }
            }
        }
    };
    for (idx, c) in spec.iter().enumerate() {
        if c.norm_sqr() == 0.0 {
            continue;
        }
        match n {
            1 => {
                for (k, w) in targets(fft::freq(idx, side)) {
                    out[new_index(k)] += c * (w * ratio);
                }
            }
            _ => {
                let k0 = fft::freq(idx / side, side);
                let k1 = fft::freq(idx % side, side);
                for (a, wa) in targets(k0) {
                    for (b, wb) in targets(k1) {
                        out[new_index(a) * new_side + new_index(b)] += c * (wa * wb * ratio);
                    }
                }
            }
        }
    }
    fft::inverse(&mut out, n, new_side);
    if !f.complex {
        for v in out.iter_mut() {
            v.im = 0.0;
        }
    }
    Ok(SampledField::raw(n, new_res, out, f.mean_zero))
}

/// Log-uniform scale nodes `t = 2^{-(j + i/m)}`, `j` in `[j_min, j_max]`,
/// `i` in `[0, m)`, strictly decreasing.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScaleGrid {
    pub j_min: i32,
    pub j_max: i32,
    pub m: u32,
}

/// One quadrature node of a [`ScaleGrid`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScaleNode {
    pub j: i32,
    pub i: u32,
    /// `j + i/m`
    pub level: f64,
    pub t: f64,
}

impl ScaleGrid {
    pub fn new(j_min: i32, j_max: i32, m: u32) -> Result<Self> {
        if j_min > j_max {
            return Err(Error::invariant("degenerate level window"));
        }
        if m == 0 {
            return Err(Error::invariant("scale oversampling m must be >= 1"));
        }
        Ok(Self { j_min, j_max, m })
    }

    pub fn len(&self) -> usize {
        ((self.j_max - self.j_min + 1) as usize) * self.m as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn nodes(&self) -> Vec<ScaleNode> {
        let mut out = Vec::with_capacity(self.len());
        for j in self.j_min..=self.j_max {
            for i in 0..self.m {
                let level = j as f64 + i as f64 / self.m as f64;
                out.push(ScaleNode { j, i, level, t: 2f64.powf(-level) });
            }
        }
        out
    }

    pub fn scales(&self) -> Vec<f64> {
        self.nodes().iter().map(|n| n.t).collect()
    }

    /// Quadrature weight of `dt/t` per node.
    pub fn log_weight(&self) -> f64 {
        std::f64::consts::LN_2 / self.m as f64
    }

    /// Fractional node index of a scale `t` (may lie outside `[0, len)`).
    pub fn position(&self, t: f64) -> f64 {
        (-t.log2() - self.j_min as f64) * self.m as f64
    }
}
