//! Type-I discrete sine transforms and Toeplitz (stationary kernel)
//! convolutions on uniform grids, both backed by complex FFTs.

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Unnormalized DST-I of length `n`:
/// `X_k = sum_{m=1..n} x_m sin(pi k m / (n + 1))`, `k = 1..n`.
///
/// Applying it twice multiplies by `(n + 1) / 2`.
#[derive(Clone)]
pub struct Dst1 {
    n: usize,
    fft: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Dst1 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Dst1").field("n", &self.n).finish()
    }
}

impl Dst1 {
    pub fn new(n: usize) -> Self {
        let fft = FftPlanner::new().plan_fft_forward(2 * (n + 1));
        Dst1 { n, fft }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    fn odd_extension(&self, buf: &mut [Complex64], a: &[f64], b: Option<&[f64]>) {
        let n = self.n;
        buf.fill(Complex64::new(0.0, 0.0));
        for m in 0..n {
            let z = Complex64::new(a[m], b.map_or(0.0, |b| b[m]));
            buf[m + 1] = z;
            buf[2 * (n + 1) - 1 - m] = -z;
        }
    }

    pub fn apply(&self, input: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        self.apply_into(input, &mut out);
        out
    }

    pub fn apply_into(&self, input: &[f64], out: &mut [f64]) {
        assert_eq!(input.len(), self.n);
        let mut buf = vec![Complex64::new(0.0, 0.0); 2 * (self.n + 1)];
        self.odd_extension(&mut buf, input, None);
        self.fft.process(&mut buf);
        for k in 0..self.n {
            out[k] = -0.5 * buf[k + 1].im;
        }
    }

    /// Transforms two real sequences with a single complex FFT.
    pub fn apply_pair(&self, a: &[f64], b: &[f64], out_a: &mut [f64], out_b: &mut [f64]) {
        assert_eq!(a.len(), self.n);
        assert_eq!(b.len(), self.n);
        let mut buf = vec![Complex64::new(0.0, 0.0); 2 * (self.n + 1)];
        self.odd_extension(&mut buf, a, Some(b));
        self.fft.process(&mut buf);
        // FFT(odd(a) + i odd(b)) = -2i A + 2 B
        for k in 0..self.n {
            out_a[k] = -0.5 * buf[k + 1].im;
            out_b[k] = 0.5 * buf[k + 1].re;
        }
    }
}

/// DST-I applied along both axes of an `n x n` row-major array.
#[derive(Clone, Debug)]
pub struct Dst2 {
    line: Dst1,
}

impl Dst2 {
    pub fn new(n: usize) -> Self {
        Dst2 { line: Dst1::new(n) }
    }

    pub fn side(&self) -> usize {
        self.line.len()
    }

    pub fn apply(&self, input: &[f64]) -> Vec<f64> {
        let n = self.line.len();
        assert_eq!(input.len(), n * n);
        let mut rows = vec![0.0; n * n];
        transform_rows(&self.line, input, &mut rows, n);
        let mut t = transpose(&rows, n);
        let mut cols = vec![0.0; n * n];
        transform_rows(&self.line, &t, &mut cols, n);
        t.copy_from_slice(&cols);
        transpose(&t, n)
    }
}

fn transform_rows(dst: &Dst1, input: &[f64], out: &mut [f64], n: usize) {
    let mut r = 0;
    while r + 1 < n {
        let (oa, ob) = out[r * n..(r + 2) * n].split_at_mut(n);
        dst.apply_pair(&input[r * n..(r + 1) * n], &input[(r + 1) * n..(r + 2) * n], oa, ob);
        r += 2;
    }
    if r < n {
        dst.apply_into(&input[r * n..(r + 1) * n], &mut out[r * n..(r + 1) * n]);
    }
}

fn transpose(a: &[f64], n: usize) -> Vec<f64> {
    let mut t = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            t[j * n + i] = a[i * n + j];
        }
    }
    t
}

/// Multiplication by the matrix `[k(x_a - x_b)]` over all points of a
/// uniform grid, for a stationary kernel `k`, via circulant embedding.
#[derive(Clone)]
pub struct ToeplitzConv {
    dim: usize,
    points: usize,
    period: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    symbol: Vec<Complex64>,
}

impl std::fmt::Debug for ToeplitzConv {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ToeplitzConv")
            .field("dim", &self.dim)
            .field("points", &self.points)
            .field("period", &self.period)
            .finish()
    }
}

impl ToeplitzConv {
    /// `points` per dimension, `spacing` between them; `kernel` maps an
    /// offset `(dx, dy)` to a value and must be even in each argument.
    pub fn new(dim: usize, points: usize, spacing: f64, kernel: impl Fn(f64, f64) -> f64) -> Self {
        let period = (2 * points - 1).next_power_of_two().max(2);
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(period);
        let inv = planner.plan_fft_inverse(period);
        let offset = |k: usize| -> f64 {
            if k < points {
                k as f64 * spacing
            } else if k + points > period {
                -((period - k) as f64) * spacing
            } else {
                f64::NAN
            }
        };
        let len = period.pow(dim as u32);
        let mut symbol = vec![Complex64::new(0.0, 0.0); len];
        match dim {
            1 => {
                for (k, s) in symbol.iter_mut().enumerate() {
                    let d = offset(k);
                    if d.is_finite() {
                        *s = Complex64::new(kernel(d, 0.0), 0.0);
                    }
                }
            }
            _ => {
                for i in 0..period {
                    let dx = offset(i);
                    if !dx.is_finite() {
                        continue;
                    }
                    for j in 0..period {
                        let dy = offset(j);
                        if dy.is_finite() {
                            symbol[i * period + j] = Complex64::new(kernel(dx, dy), 0.0);
                        }
                    }
                }
            }
        }
        let mut conv = ToeplitzConv {
            dim,
            points,
            period,
            fwd,
            inv,
            symbol: Vec::new(),
        };
        conv.forward(&mut symbol);
        let scale = 1.0 / len as f64;
        for s in symbol.iter_mut() {
            *s *= scale;
        }
        conv.symbol = symbol;
        conv
    }

    pub fn points_per_dim(&self) -> usize {
        self.points
    }

    fn forward(&self, buf: &mut [Complex64]) {
        self.transform(buf, &*self.fwd);
    }

    fn transform(&self, buf: &mut [Complex64], fft: &dyn Fft<f64>) {
        let p = self.period;
        match self.dim {
            1 => fft.process(buf),
            _ => {
                fft.process(buf);
                let mut t = vec![Complex64::new(0.0, 0.0); p * p];
                for i in 0..p {
                    for j in 0..p {
                        t[j * p + i] = buf[i * p + j];
                    }
                }
                fft.process(&mut t);
                for i in 0..p {
                    for j in 0..p {
                        buf[j * p + i] = t[i * p + j];
                    }
                }
            }
        }
    }

    fn pack(&self, buf: &mut [Complex64], a: &[f64], b: Option<&[f64]>) {
        buf.fill(Complex64::new(0.0, 0.0));
        let (n, p) = (self.points, self.period);
        match self.dim {
            1 => {
                for k in 0..n {
                    buf[k] = Complex64::new(a[k], b.map_or(0.0, |b| b[k]));
                }
            }
            _ => {
                for i in 0..n {
                    for j in 0..n {
                        let k = i * n + j;
                        buf[i * p + j] = Complex64::new(a[k], b.map_or(0.0, |b| b[k]));
                    }
                }
            }
        }
    }

    fn convolve(&self, buf: &mut [Complex64]) {
        self.forward(buf);
        for (z, s) in buf.iter_mut().zip(&self.symbol) {
            *z *= s;
        }
        self.transform(buf, &*self.inv);
    }

    fn unpack(&self, buf: &[Complex64], out_a: &mut [f64], out_b: Option<&mut [f64]>) {
        let (n, p) = (self.points, self.period);
        let at = |k: usize| match self.dim {
            1 => buf[k],
            _ => buf[(k / n) * p + k % n],
        };
        match out_b {
            Some(ob) => {
                for k in 0..out_a.len() {
                    let z = at(k);
                    out_a[k] = z.re;
                    ob[k] = z.im;
                }
            }
            None => {
                for (k, o) in out_a.iter_mut().enumerate() {
                    *o = at(k).re;
                }
            }
        }
    }

    fn buffer(&self) -> Vec<Complex64> {
        vec![Complex64::new(0.0, 0.0); self.period.pow(self.dim as u32)]
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let mut buf = self.buffer();
        self.pack(&mut buf, v, None);
        self.convolve(&mut buf);
        let mut out = vec![0.0; v.len()];
        self.unpack(&buf, &mut out, None);
        out
    }

    /// Two products for the price of one complex transform pair.
    pub fn apply_pair(&self, a: &[f64], b: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut buf = self.buffer();
        self.pack(&mut buf, a, Some(b));
        self.convolve(&mut buf);
        let mut oa = vec![0.0; a.len()];
        let mut ob = vec![0.0; b.len()];
        self.unpack(&buf, &mut oa, Some(&mut ob));
        (oa, ob)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_dst(x: &[f64]) -> Vec<f64> {
        let n = x.len();
        (1..=n)
            .map(|k| {
                (1..=n)
                    .map(|m| x[m - 1] * (std::f64::consts::PI * (k * m) as f64 / (n + 1) as f64).sin())
                    .sum()
            })
            .collect()
    }

    #[test]
    fn dst_matches_direct_sum() {
        let x: Vec<f64> = (0..13).map(|i| ((i * 7 % 5) as f64) - 1.3).collect();
        let fast = Dst1::new(13).apply(&x);
        for (a, b) in fast.iter().zip(naive_dst(&x)) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn dst_pair_matches_single() {
        let d = Dst1::new(10);
        let a: Vec<f64> = (0..10).map(|i| (i as f64).sin()).collect();
        let b: Vec<f64> = (0..10).map(|i| (i as f64 * 0.3).cos()).collect();
        let (mut oa, mut ob) = (vec![0.0; 10], vec![0.0; 10]);
        d.apply_pair(&a, &b, &mut oa, &mut ob);
        for (x, y) in oa.iter().zip(d.apply(&a)) {
            assert!((x - y).abs() < 1e-12);
        }
        for (x, y) in ob.iter().zip(d.apply(&b)) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn dst_is_involution_up_to_scale() {
        let d = Dst1::new(9);
        let x: Vec<f64> = (0..9).map(|i| i as f64 * 0.5 - 2.0).collect();
        let back = d.apply(&d.apply(&x));
        for (a, b) in back.iter().zip(&x) {
            assert!((a * 2.0 / 10.0 - b).abs() < 1e-12);
        }
    }

    #[test]
    fn toeplitz_matches_dense_1d_and_2d() {
        let k = |dx: f64, dy: f64| (-(dx * dx + dy * dy).sqrt() * 3.0).exp();
        let n = 7;
        let h = 0.1;
        let v: Vec<f64> = (0..n).map(|i| (i as f64 * 1.7).cos()).collect();
        let out = ToeplitzConv::new(1, n, h, k).apply(&v);
        for a in 0..n {
            let dense: f64 = (0..n).map(|b| k((a as f64 - b as f64) * h, 0.0) * v[b]).sum();
            assert!((out[a] - dense).abs() < 1e-12);
        }
        let n2 = 5;
        let v2: Vec<f64> = (0..n2 * n2).map(|i| (i as f64 * 0.37).sin()).collect();
        let conv = ToeplitzConv::new(2, n2, h, k);
        let (out2, twice) = conv.apply_pair(&v2, &v2.iter().map(|x| 2.0 * x).collect::<Vec<_>>());
        for a in 0..n2 * n2 {
            let (ai, aj) = ((a / n2) as f64, (a % n2) as f64);
            let dense: f64 = (0..n2 * n2)
                .map(|b| {
                    let (bi, bj) = ((b / n2) as f64, (b % n2) as f64);
                    k((ai - bi) * h, (aj - bj) * h) * v2[b]
                })
                .sum();
            assert!((out2[a] - dense).abs() < 1e-12);
            assert!((twice[a] - 2.0 * dense).abs() < 1e-12);
        }
    }
}
