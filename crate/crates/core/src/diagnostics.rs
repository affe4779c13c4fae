//! Autocorrelation and effective sample size.
//!
//! ACFs use the biased normalisation `Σ_{t<n−k} (x_t − x̄)(x_{t+k} − x̄) / Σ (x_t − x̄)²`.
//! ESS uses Geyer's initial positive sequence: pairs
//! `Γ_m = ρ_{2m} + ρ_{2m+1}` are summed while positive and
//! `τ = −1 + 2 Σ Γ_m`, `ESS = n / τ`, capped at `n`.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MIN_ESS_LENGTH: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AcfValue {
    pub value: f64,
    /// The column was constant; `value` is then defined as 0.
    pub zero_variance: bool,
}

fn centred(col: &[f64]) -> (Vec<f64>, f64) {
    let n = col.len() as f64;
    let mean = col.iter().sum::<f64>() / n;
    let c: Vec<f64> = col.iter().map(|x| x - mean).collect();
    let ss = c.iter().map(|x| x * x).sum();
    (c, ss)
}

fn is_constant(col: &[f64]) -> bool {
    col.iter().all(|&x| x == col[0])
}

pub fn autocorrelation(col: &[f64], lag: usize) -> Result<AcfValue> {
    if lag >= col.len() {
        return Err(Error::InvalidParameter(format!("lag {lag} not below length {}", col.len())));
    }
    if is_constant(col) {
        return Ok(AcfValue { value: 0.0, zero_variance: true });
    }
    let (c, ss) = centred(col);
    if lag == 0 {
        return Ok(AcfValue { value: 1.0, zero_variance: false });
    }
    let num: f64 = c.iter().zip(&c[lag..]).map(|(a, b)| a * b).sum();
    Ok(AcfValue { value: num / ss, zero_variance: false })
}

/// ACF at lags `0..=max_lag` via zero-padded FFT. Constant columns give
/// all zeros and `true`.
pub fn autocorrelations(col: &[f64], max_lag: usize) -> Result<(Vec<f64>, bool)> {
    let n = col.len();
    if n == 0 || max_lag >= n {
        return Err(Error::InvalidParameter(format!("max lag {max_lag} not below length {n}")));
    }
    if is_constant(col) {
        return Ok((vec![0.0; max_lag + 1], true));
    }
    let (c, _) = centred(col);
    let m = (2 * n).next_power_of_two();
    let mut buf: Vec<Complex<f64>> = c.iter().map(|&x| Complex::new(x, 0.0)).collect();
    buf.resize(m, Complex::new(0.0, 0.0));
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(m).process(&mut buf);
    for v in &mut buf {
        *v = Complex::new(v.norm_sqr(), 0.0);
    }
    planner.plan_fft_inverse(m).process(&mut buf);
    let c0 = buf[0].re;
    let mut acf: Vec<f64> = buf[..=max_lag].iter().map(|v| v.re / c0).collect();
    acf[0] = 1.0;
    Ok((acf, false))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EssEstimate {
    pub ess: f64,
    pub zero_variance: bool,
    /// The raw estimate exceeded `n` (antithetic chain) and was capped.
    pub capped: bool,
}

pub fn ess(col: &[f64]) -> Result<EssEstimate> {
    let n = col.len();
    if n < MIN_ESS_LENGTH {
        return Err(Error::InvalidParameter(format!("ESS needs at least {MIN_ESS_LENGTH} samples, got {n}")));
    }
    let (rho, zero_variance) = autocorrelations(col, n - 1)?;
    if zero_variance {
        return Ok(EssEstimate { ess: n as f64, zero_variance: true, capped: false });
    }
    let mut sum = 0.0;
    let mut m = 0;
    while 2 * m + 1 < n {
        let gamma = rho[2 * m] + rho[2 * m + 1];
        if gamma <= 0.0 {
            break;
        }
        sum += gamma;
        m += 1;
    }
    let tau = -1.0 + 2.0 * sum;
    let nf = n as f64;
    if tau <= 0.0 || nf / tau > nf {
        Ok(EssEstimate { ess: nf, zero_variance: false, capped: true })
    } else {
        Ok(EssEstimate { ess: nf / tau, zero_variance: false, capped: false })
    }
}

/// `sd / √ESS` of the column mean.
pub fn mc_standard_error(col: &[f64]) -> Result<f64> {
    let e = ess(col)?;
    let (_, ss) = centred(col);
    let var = ss / (col.len() as f64 - 1.0);
    Ok((var / e.ess).sqrt())
}

/// Samples in columns (one per coordinate).
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    columns: Vec<Vec<f64>>,
    burn_in: usize,
}

impl Trace {
    pub fn from_columns(columns: Vec<Vec<f64>>, burn_in: usize) -> Result<Self> {
        let Some(first) = columns.first() else {
            return Err(Error::InvalidParameter("trace has no coordinates".into()));
        };
        let len = first.len();
        if columns.iter().any(|c| c.len() != len) {
            return Err(Error::InvalidParameter("trace columns differ in length".into()));
        }
        if len <= burn_in {
            return Err(Error::InvalidParameter(format!("{len} iterations do not exceed burn-in {burn_in}")));
        }
        if columns.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("trace"));
        }
        Ok(Self { columns, burn_in })
    }

    pub fn from_rows(rows: &[Vec<f64>], burn_in: usize) -> Result<Self> {
        let d = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::InvalidParameter("trace rows differ in length".into()));
        }
        let columns = (0..d).map(|k| rows.iter().map(|r| r[k]).collect()).collect();
        Self::from_columns(columns, burn_in)
    }

    pub fn n_coords(&self) -> usize {
        self.columns.len()
    }

    pub fn iterations(&self) -> usize {
        self.columns[0].len()
    }

    pub fn burn_in(&self) -> usize {
        self.burn_in
    }

    /// Post-burn-in samples of coordinate `k`.
    pub fn column(&self, k: usize) -> &[f64] {
        &self.columns[k][self.burn_in..]
    }

    pub fn ess_per_coordinate(&self) -> Result<Vec<EssEstimate>> {
        (0..self.n_coords()).map(|k| ess(self.column(k))).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EssSummary {
    pub min_ess: f64,
    pub median_ess: f64,
    pub min_per_sec: f64,
    pub median_per_sec: f64,
    pub min_per_iter: f64,
    pub median_per_iter: f64,
}

impl EssSummary {
    pub fn from_ess(values: &[f64], wall_seconds: f64, iterations: u64) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidParameter("no ESS values".into()));
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let k = v.len();
        let median = if k % 2 == 1 { v[k / 2] } else { 0.5 * (v[k / 2 - 1] + v[k / 2]) };
        let it = iterations as f64;
        Ok(Self {
            min_ess: v[0],
            median_ess: median,
            min_per_sec: v[0] / wall_seconds,
            median_per_sec: median / wall_seconds,
            min_per_iter: v[0] / it,
            median_per_iter: median / it,
        })
    }
}

pub fn ess_summary(trace: &Trace, wall_seconds: f64, iterations: u64) -> Result<EssSummary> {
    let values: Vec<f64> = trace.ess_per_coordinate()?.iter().map(|e| e.ess).collect();
    EssSummary::from_ess(&values, wall_seconds, iterations)
}

/// Streaming ACF at fixed lags for many coordinates, holding only the last
/// `max_lag` samples. Matches [`autocorrelation`] on the same data.
#[derive(Debug, Clone)]
pub struct LagAccumulator {
    lags: Vec<usize>,
    n_coords: usize,
    n: usize,
    ring: Vec<Vec<f64>>,
    sum: Vec<f64>,
    sum_sq: Vec<f64>,
    /// Sum of the first `max_lag` samples, per coordinate and prefix length.
    head: Vec<Vec<f64>>,
    cross: Vec<Vec<f64>>,
}

impl LagAccumulator {
    pub fn new(n_coords: usize, lags: &[usize]) -> Result<Self> {
        if lags.is_empty() || lags.contains(&0) {
            return Err(Error::InvalidParameter("lags must be positive and nonempty".into()));
        }
        let max_lag = *lags.iter().max().expect("nonempty");
        Ok(Self {
            lags: lags.to_vec(),
            n_coords,
            n: 0,
            ring: vec![vec![0.0; n_coords]; max_lag],
            sum: vec![0.0; n_coords],
            sum_sq: vec![0.0; n_coords],
            head: vec![vec![0.0; n_coords]; max_lag + 1],
            cross: vec![vec![0.0; n_coords]; lags.len()],
        })
    }

    pub fn lags(&self) -> &[usize] {
        &self.lags
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn push(&mut self, x: &[f64]) {
        debug_assert_eq!(x.len(), self.n_coords);
        let cap = self.ring.len();
        for (li, &lag) in self.lags.iter().enumerate() {
            if self.n >= lag {
                let past = &self.ring[(self.n - lag) % cap];
                for ((c, p), v) in self.cross[li].iter_mut().zip(past).zip(x) {
                    *c += p * v;
                }
            }
        }
        for k in 0..self.n_coords {
            self.sum[k] += x[k];
            self.sum_sq[k] += x[k] * x[k];
        }
        if self.n < cap {
            let (prev, rest) = self.head.split_at_mut(self.n + 1);
            for ((h, p), v) in rest[0].iter_mut().zip(&prev[self.n]).zip(x) {
                *h = p + v;
            }
        }
        self.ring[self.n % cap].copy_from_slice(x);
        self.n += 1;
    }

    /// Per-coordinate ACF at each lag (outer index follows `lags`); constant
    /// coordinates give 0. Lags not below the sample count give `None`.
    pub fn acf(&self) -> Vec<Option<Vec<f64>>> {
        let n = self.n;
        let cap = self.ring.len();
        self.lags
            .iter()
            .enumerate()
            .map(|(li, &lag)| {
                if lag >= n {
                    return None;
                }
                let nf = n as f64;
                Some(
                    (0..self.n_coords)
                        .map(|k| {
                            let mean = self.sum[k] / nf;
                            let ss = self.sum_sq[k] - nf * mean * mean;
                            if ss <= 1e-300 * nf {
                                return 0.0;
                            }
                            let tail: f64 = (0..lag).map(|i| self.ring[(n - 1 - i) % cap][k]).sum();
                            let first = self.sum[k] - tail;
                            let last = self.sum[k] - self.head[lag][k];
                            let num = self.cross[li][k] - mean * (first + last) + (n - lag) as f64 * mean * mean;
                            num / ss
                        })
                        .collect(),
                )
            })
            .collect()
    }

    /// Mean over coordinates of [`Self::acf`].
    pub fn mean_acf(&self) -> Vec<Option<f64>> {
        self.acf().into_iter().map(|v| v.map(|v| v.iter().sum::<f64>() / v.len().max(1) as f64)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_column_is_flagged() {
        let c = vec![2.5; 200];
        assert_eq!(autocorrelation(&c, 3).unwrap(), AcfValue { value: 0.0, zero_variance: true });
        let e = ess(&c).unwrap();
        assert!(e.zero_variance);
        assert_eq!(e.ess, 200.0);
    }

    #[test]
    fn fft_matches_direct_sum() {
        let col: Vec<f64> = (0..500).map(|i| ((i * 37 % 101) as f64).sin() + 0.01 * i as f64).collect();
        let (acf, _) = autocorrelations(&col, 20).unwrap();
        for (lag, a) in acf.iter().enumerate() {
            assert!((a - autocorrelation(&col, lag).unwrap().value).abs() < 1e-12);
        }
    }

    #[test]
    fn alternating_sequence_is_capped() {
        let col: Vec<f64> = (0..1000).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let e = ess(&col).unwrap();
        assert!(e.capped);
        assert_eq!(e.ess, 1000.0);
    }

    #[test]
    fn summary_arithmetic() {
        let s = EssSummary::from_ess(&[100.0, 300.0], 10.0, 1000).unwrap();
        assert_eq!(s.min_per_sec, 10.0);
        assert_eq!(s.median_per_sec, 20.0);
        assert_eq!(s.min_per_iter, 0.1);
        let one = EssSummary::from_ess(&[42.0], 1.0, 100).unwrap();
        assert_eq!(one.min_ess, one.median_ess);
    }

    #[test]
    fn streaming_acf_matches_batch() {
        let a: Vec<f64> = (0..700).map(|i| ((i * 31 % 97) as f64).cos() + 0.002 * i as f64).collect();
        let b: Vec<f64> = (0..700).map(|i| ((i * 7 % 13) as f64) * 0.5).collect();
        let mut acc = LagAccumulator::new(2, &[1, 5, 50]).unwrap();
        for i in 0..700 {
            acc.push(&[a[i], b[i]]);
        }
        let got = acc.acf();
        for (li, lag) in [1, 5, 50].into_iter().enumerate() {
            let row = got[li].as_ref().unwrap();
            assert!((row[0] - autocorrelation(&a, lag).unwrap().value).abs() < 1e-9);
            assert!((row[1] - autocorrelation(&b, lag).unwrap().value).abs() < 1e-9);
        }
        let mut short = LagAccumulator::new(1, &[10]).unwrap();
        short.push(&[1.0]);
        assert_eq!(short.acf(), vec![None]);
    }

    #[test]
    fn short_or_bad_input() {
        assert!(ess(&[1.0; 10]).is_err());
        assert!(autocorrelation(&[1.0, 2.0], 2).is_err());
        assert!(Trace::from_columns(vec![vec![1.0; 5]], 5).is_err());
        assert!(Trace::from_columns(vec![vec![1.0, f64::NAN, 2.0]], 0).is_err());
    }
}
