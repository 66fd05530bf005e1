//! Value-level simulation of bit-sliced, bit-streamed crossbar MVM with
//! programmed-once conductance variation and ADC quantization, next to an
//! exact integer oracle.
//!
//! Signed operands use two's-complement slice semantics: the bit pattern is
//! cut into unsigned cell groups and the top group carries the sign
//! correction, so the shift-and-add recombination reproduces the signed
//! value exactly. Conductance variation is multiplicative Gaussian per cell
//! per slice, drawn once per matrix (write-time variation); the ADC
//! contributes quantization and clipping only.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Signed fixed-point matrix with a shared symmetric scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantMatrix {
    pub values: Vec<i32>,
    pub rows: usize,
    pub cols: usize,
    pub weight_bits: u32,
    pub scale: f64,
}

impl QuantMatrix {
    pub fn validate(&self) -> Result<()> {
        if self.values.len() != self.rows * self.cols {
            return Err(Error::Dimension(format!(
                "{}x{} matrix needs {} values, got {}",
                self.rows,
                self.cols,
                self.rows * self.cols,
                self.values.len()
            )));
        }
        let lo = -(1i64 << (self.weight_bits - 1));
        let hi = (1i64 << (self.weight_bits - 1)) - 1;
        for &v in &self.values {
            if (v as i64) < lo || (v as i64) > hi {
                return Err(Error::Dimension(format!(
                    "value {v} outside {}-bit signed range [{lo}, {hi}]",
                    self.weight_bits
                )));
            }
        }
        if !(self.scale > 0.0) {
            return Err(Error::Dimension("scale must be positive".into()));
        }
        Ok(())
    }

    pub fn at(&self, r: usize, c: usize) -> i32 {
        self.values[r * self.cols + c]
    }
}

/// Analog non-ideality description. Deterministic given the seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    /// Relative std-dev of the multiplicative per-cell variation.
    pub conductance_variation_sigma: f64,
    /// Optional additive offset per cell level (indexed by cell value).
    pub write_nonlinearity: Option<Vec<f64>>,
    pub adc_bits: u32,
    /// Symmetric ADC clip magnitude; `None` auto-sizes to the worst-case
    /// ideal column sum (no clipping).
    pub adc_clip: Option<f64>,
    pub seed: u64,
}

impl NoiseModel {
    pub fn noiseless(adc_bits: u32) -> NoiseModel {
        NoiseModel {
            conductance_variation_sigma: 0.0,
            write_nonlinearity: None,
            adc_bits,
            adc_clip: None,
            seed: 0,
        }
    }

    /// Per-trial seed derivation: a fixed odd multiplier keeps trial streams
    /// disjoint while staying reproducible from (seed, trial) alone.
    pub fn trial(&self, trial: u64) -> NoiseModel {
        NoiseModel {
            seed: self
                .seed
                .wrapping_mul(0x9E37_79B9_7F4A_7C15)
                .wrapping_add(trial),
            ..self.clone()
        }
    }
}

/// Symmetric quantization: scale = max|x| / (2^(bits-1) - 1), rounding half
/// to even. An all-zero input fixes the scale to 1.
pub fn quantize(values: &[f64], rows: usize, cols: usize, bits: u32) -> Result<QuantMatrix> {
    if ![2, 4, 8].contains(&bits) {
        return Err(Error::Dimension(format!("unsupported bit width {bits}")));
    }
    if values.len() != rows * cols {
        return Err(Error::Dimension("value count mismatch".into()));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Dimension("non-finite input".into()));
    }
    let max_abs = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let qmax = ((1i32 << (bits - 1)) - 1) as f64;
    let scale = if max_abs == 0.0 { 1.0 } else { max_abs / qmax };
    let quantized = values
        .iter()
        .map(|&v| {
            let q = (v / scale).round_ties_even();
            q.clamp(-qmax, qmax) as i32
        })
        .collect();
    Ok(QuantMatrix {
        values: quantized,
        rows,
        cols,
        weight_bits: bits,
        scale,
    })
}

pub fn dequantize(m: &QuantMatrix) -> Vec<f64> {
    m.values.iter().map(|&v| v as f64 * m.scale).collect()
}

/// Exact integer matrix-vector product (row-major matrix times column
/// vector), the oracle for the analog path.
pub fn ideal_mvm(m: &QuantMatrix, v: &[i32]) -> Result<Vec<i64>> {
    m.validate()?;
    if v.len() != m.cols {
        return Err(Error::Dimension(format!(
            "vector length {} != matrix cols {}",
            v.len(),
            m.cols
        )));
    }
    let mut out = vec![0i64; m.rows];
    for r in 0..m.rows {
        let mut acc = 0i64;
        for c in 0..m.cols {
            acc += m.at(r, c) as i64 * v[c] as i64;
        }
        out[r] = acc;
    }
    Ok(out)
}

/// Two's-complement digit decomposition: unsigned `digit_bits` groups with a
/// sign-corrected top group, so sum(d_s << (s*digit_bits)) == value.
fn signed_digits(value: i32, total_bits: u32, digit_bits: u32) -> Vec<i32> {
    let groups = total_bits.div_ceil(digit_bits);
    let mask = (1i64 << digit_bits) - 1;
    let pattern = (value as i64) & ((1i64 << total_bits) - 1);
    let mut out = Vec::with_capacity(groups as usize);
    for s in 0..groups {
        let mut d = (pattern >> (s * digit_bits)) & mask;
        if s == groups - 1 && value < 0 {
            d -= 1i64 << digit_bits;
        }
        out.push(d as i32);
    }
    out
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ErrorStats {
    pub rmse: f64,
    pub max_abs: f64,
    pub rel_l2: f64,
}

/// Standard error statistics between the oracle and a noisy output.
pub fn error_stats(ideal: &[i64], noisy: &[f64]) -> Result<ErrorStats> {
    if ideal.len() != noisy.len() {
        return Err(Error::Dimension(format!(
            "length mismatch {} vs {}",
            ideal.len(),
            noisy.len()
        )));
    }
    if ideal.is_empty() {
        return Ok(ErrorStats::default());
    }
    let mut sq = 0.0;
    let mut max_abs: f64 = 0.0;
    let mut ref_sq = 0.0;
    for (&a, &b) in ideal.iter().zip(noisy) {
        let d = b - a as f64;
        sq += d * d;
        max_abs = max_abs.max(d.abs());
        ref_sq += (a as f64) * (a as f64);
    }
    let rmse = (sq / ideal.len() as f64).sqrt();
    let rel_l2 = if ref_sq > 0.0 {
        (sq / ref_sq).sqrt()
    } else if sq > 0.0 {
        f64::INFINITY
    } else {
        0.0
    };
    Ok(ErrorStats {
        rmse,
        max_abs,
        rel_l2,
    })
}

/// Crossbar execution parameters for the functional path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct XbarParams {
    pub cell_bits: u32,
    pub dac_bits: u32,
}

impl Default for XbarParams {
    fn default() -> Self {
        Self {
            cell_bits: 2,
            dac_bits: 1,
        }
    }
}

/// Bit-sliced, bit-streamed crossbar MVM with per-cell conductance
/// variation and ADC quantization. With sigma = 0, no write nonlinearity,
/// and an ADC wide enough to avoid clipping, the result equals
/// [`ideal_mvm`] exactly.
pub fn crossbar_mvm(
    m: &QuantMatrix,
    v: &[i32],
    params: XbarParams,
    noise: &NoiseModel,
) -> Result<(Vec<f64>, ErrorStats)> {
    m.validate()?;
    if v.len() != m.cols {
        return Err(Error::Dimension(format!(
            "vector length {} != matrix cols {}",
            v.len(),
            m.cols
        )));
    }
    if m.weight_bits % params.cell_bits != 0 {
        return Err(Error::Dimension(format!(
            "weight_bits {} not divisible by cell_bits {}",
            m.weight_bits, params.cell_bits
        )));
    }
    let act_bits = m.weight_bits; // activations share the fixed-point width
    if act_bits % params.dac_bits != 0 {
        return Err(Error::Dimension(format!(
            "act bits {act_bits} not divisible by dac_bits {}",
            params.dac_bits
        )));
    }
    if !(noise.conductance_variation_sigma >= 0.0) {
        return Err(Error::Dimension("sigma must be >= 0".into()));
    }

    let n_slices = (m.weight_bits / params.cell_bits) as usize;
    let n_streams = (act_bits / params.dac_bits) as usize;

    // Programmed-once conductances: one perturbed cell array per slice.
    let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mut cells: Vec<Vec<f64>> = Vec::with_capacity(n_slices);
    let mut cell_digits: Vec<Vec<i32>> = vec![vec![0; m.rows * m.cols]; n_slices];
    for (idx, &w) in m.values.iter().enumerate() {
        for (s, d) in signed_digits(w, m.weight_bits, params.cell_bits).iter().enumerate() {
            cell_digits[s][idx] = *d;
        }
    }
    for digits in &cell_digits {
        let mut plane = Vec::with_capacity(digits.len());
        for &d in digits {
            let mut g = d as f64;
            if let Some(nl) = &noise.write_nonlinearity {
                let level = d.unsigned_abs() as usize;
                if let Some(off) = nl.get(level) {
                    g += off * d.signum() as f64;
                }
            }
            if noise.conductance_variation_sigma > 0.0 {
                g *= 1.0 + noise.conductance_variation_sigma * normal.sample(&mut rng);
            }
            plane.push(g);
        }
        cells.push(plane);
    }

    // Worst-case magnitude of one column sum, for the auto clip range.
    let cell_max = ((1i64 << params.cell_bits) as f64).max(2.0);
    let dac_max = ((1i64 << params.dac_bits) as f64).max(2.0);
    let auto_clip = m.cols as f64 * cell_max * dac_max;
    let clip = noise.adc_clip.unwrap_or(auto_clip);
    let levels = 1u64 << noise.adc_bits;
    let raw_step = 2.0 * clip / levels as f64;
    // Resolution finer than the integer grid digitizes ideal sums exactly.
    let step = if raw_step <= 1.0 { 1.0 } else { raw_step };

    let digit_streams: Vec<Vec<i32>> = {
        let mut streams = vec![vec![0i32; m.cols]; n_streams];
        for (c, &x) in v.iter().enumerate() {
            for (s, d) in signed_digits(x, act_bits, params.dac_bits).iter().enumerate() {
                streams[s][c] = *d;
            }
        }
        streams
    };

    let mut out = vec![0.0f64; m.rows];
    for (s, plane) in cells.iter().enumerate() {
        for (t, stream) in digit_streams.iter().enumerate() {
            let shift = (s as u32 * params.cell_bits) + (t as u32 * params.dac_bits);
            let weight = (1i64 << shift) as f64;
            for r in 0..m.rows {
                let mut sum = 0.0;
                for c in 0..m.cols {
                    sum += plane[r * m.cols + c] * stream[c] as f64;
                }
                let clipped = sum.clamp(-clip, clip);
                let q = (clipped / step).round_ties_even() * step;
                out[r] += q * weight;
            }
        }
    }

    let ideal = ideal_mvm(m, v)?;
    let stats = error_stats(&ideal, &out)?;
    Ok((out, stats))
}

/// One row of the error-sweep output.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepRecord {
    pub sigma: f64,
    pub trial: u64,
    pub rmse: f64,
    pub max_abs: f64,
}

/// Monte-Carlo error sweep over variation levels: `trials` random matrices
/// and vectors per sigma, seeded per trial by the documented split rule.
pub fn error_sweep(
    rows: usize,
    cols: usize,
    bits: u32,
    sigmas: &[f64],
    trials: u64,
    params: XbarParams,
    base_seed: u64,
) -> Result<Vec<SweepRecord>> {
    let mut out = Vec::with_capacity(sigmas.len() * trials as usize);
    for &sigma in sigmas {
        for trial in 0..trials {
            let model = NoiseModel {
                conductance_variation_sigma: sigma,
                write_nonlinearity: None,
                adc_bits: 16,
                adc_clip: None,
                seed: 0,
            }
            .trial(base_seed.wrapping_add(trial));
            let mut rng = ChaCha8Rng::seed_from_u64(model.seed ^ 0xA5A5_5A5A_DEAD_BEEF);
            let (m, v) = random_instance(&mut rng, rows, cols, bits);
            let (_, stats) = crossbar_mvm(&m, &v, params, &model)?;
            out.push(SweepRecord {
                sigma,
                trial,
                rmse: stats.rmse,
                max_abs: stats.max_abs,
            });
        }
    }
    Ok(out)
}

fn random_instance(rng: &mut ChaCha8Rng, rows: usize, cols: usize, bits: u32) -> (QuantMatrix, Vec<i32>) {
    use rand::Rng;
    let lo = -(1i32 << (bits - 1));
    let hi = (1i32 << (bits - 1)) - 1;
    let values = (0..rows * cols).map(|_| rng.gen_range(lo..=hi)).collect();
    let v = (0..cols).map(|_| rng.gen_range(lo..=hi)).collect();
    (
        QuantMatrix {
            values,
            rows,
            cols,
            weight_bits: bits,
            scale: 1.0,
        },
        v,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn quantize_zero_matrix() {
        let q = quantize(&[0.0; 4], 2, 2, 8).unwrap();
        assert!(q.values.iter().all(|&v| v == 0));
        assert_eq!(q.scale, 1.0);
    }

    #[test]
    fn quantize_endpoints() {
        let q = quantize(&[-1.0, 1.0], 1, 2, 8).unwrap();
        assert_eq!(q.values, vec![-127, 127]);
        assert!((q.scale - 1.0 / 127.0).abs() < 1e-15);
    }

    #[test]
    fn quantize_round_trip_error_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let vals: Vec<f64> = (0..256).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let q = quantize(&vals, 16, 16, 8).unwrap();
        for (x, y) in vals.iter().zip(dequantize(&q)) {
            assert!((x - y).abs() <= q.scale / 2.0 + 1e-12);
        }
    }

    #[test]
    fn ideal_mvm_hand_case() {
        let m = QuantMatrix {
            values: vec![1, 2, 3, 4],
            rows: 2,
            cols: 2,
            weight_bits: 8,
            scale: 1.0,
        };
        assert_eq!(ideal_mvm(&m, &[1, 1]).unwrap(), vec![3, 7]);
    }

    #[test]
    fn ideal_mvm_identity() {
        let n = 5;
        let mut values = vec![0; n * n];
        for i in 0..n {
            values[i * n + i] = 1;
        }
        let m = QuantMatrix {
            values,
            rows: n,
            cols: n,
            weight_bits: 8,
            scale: 1.0,
        };
        let v = vec![3, -4, 5, -6, 7];
        let out = ideal_mvm(&m, &v).unwrap();
        assert_eq!(out, v.iter().map(|&x| x as i64).collect::<Vec<_>>());
        assert!(ideal_mvm(&m, &[1, 2]).is_err());
    }

    #[test]
    fn ideal_mvm_matches_schoolbook() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let (m, v) = random_instance(&mut rng, 32, 32, 8);
        let out = ideal_mvm(&m, &v).unwrap();
        for r in 0..32 {
            let mut acc = 0i64;
            for c in 0..32 {
                acc += m.at(r, c) as i64 * v[c] as i64;
            }
            assert_eq!(out[r], acc);
        }
    }

    #[test]
    fn digit_recombination_identity() {
        for bits in [2u32, 4, 8] {
            let lo = -(1i32 << (bits - 1));
            let hi = (1i32 << (bits - 1)) - 1;
            for cell in [1u32, 2] {
                if bits % cell != 0 {
                    continue;
                }
                for v in lo..=hi {
                    let digits = signed_digits(v, bits, cell);
                    let sum: i64 = digits
                        .iter()
                        .enumerate()
                        .map(|(s, &d)| (d as i64) << (s as u32 * cell))
                        .sum();
                    assert_eq!(sum, v as i64, "bits={bits} cell={cell} v={v}");
                }
            }
        }
    }

    #[test]
    fn zero_noise_equals_ideal_randomized() {
        let mut rng = ChaCha8Rng::seed_from_u64(1234);
        let noise = NoiseModel::noiseless(16);
        for _ in 0..100 {
            let (m, v) = random_instance(&mut rng, 16, 16, 8);
            let (out, stats) = crossbar_mvm(&m, &v, XbarParams::default(), &noise).unwrap();
            let ideal = ideal_mvm(&m, &v).unwrap();
            for (o, i) in out.iter().zip(&ideal) {
                assert_eq!(*o, *i as f64);
            }
            assert_eq!(stats.rmse, 0.0);
        }
    }

    #[test]
    fn zero_noise_exhaustive_2bit_2x2() {
        let noise = NoiseModel::noiseless(12);
        let vals: Vec<i32> = (-2..=1).collect();
        for a in &vals {
            for b in &vals {
                for c in &vals {
                    for d in &vals {
                        for x in &vals {
                            for y in &vals {
                                let m = QuantMatrix {
                                    values: vec![*a, *b, *c, *d],
                                    rows: 2,
                                    cols: 2,
                                    weight_bits: 2,
                                    scale: 1.0,
                                };
                                let v = vec![*x, *y];
                                let (out, _) = crossbar_mvm(
                                    &m,
                                    &v,
                                    XbarParams {
                                        cell_bits: 2,
                                        dac_bits: 1,
                                    },
                                    &noise,
                                )
                                .unwrap();
                                let ideal = ideal_mvm(&m, &v).unwrap();
                                assert_eq!(out[0], ideal[0] as f64);
                                assert_eq!(out[1], ideal[1] as f64);
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn zero_vector_gives_zero_output() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (m, _) = random_instance(&mut rng, 8, 8, 8);
        let noise = NoiseModel {
            conductance_variation_sigma: 0.3,
            ..NoiseModel::noiseless(16)
        };
        let (out, _) = crossbar_mvm(&m, &vec![0; 8], XbarParams::default(), &noise).unwrap();
        assert!(out.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn linearity_at_zero_noise() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let noise = NoiseModel::noiseless(16);
        let (m, _) = random_instance(&mut rng, 8, 8, 4);
        // alpha*v1 + beta*v2 with alpha=2, beta=1, inputs kept in range
        let v1: Vec<i32> = (0..8).map(|_| rng.gen_range(-2..=1)).collect();
        let v2: Vec<i32> = (0..8).map(|_| rng.gen_range(-2..=1)).collect();
        let combo: Vec<i32> = v1.iter().zip(&v2).map(|(a, b)| 2 * a + b).collect();
        let (o1, _) = crossbar_mvm(&m, &v1, XbarParams::default(), &noise).unwrap();
        let (o2, _) = crossbar_mvm(&m, &v2, XbarParams::default(), &noise).unwrap();
        let (oc, _) = crossbar_mvm(&m, &combo, XbarParams::default(), &noise).unwrap();
        for i in 0..8 {
            assert_eq!(oc[i], 2.0 * o1[i] + o2[i]);
        }
    }

    #[test]
    fn error_stats_cases() {
        let zero = error_stats(&[1, 2, 3], &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!((zero.rmse, zero.max_abs, zero.rel_l2), (0.0, 0.0, 0.0));
        let s = error_stats(&[0, 3], &[0.0, 4.0]).unwrap();
        assert_eq!(s.max_abs, 1.0);
        assert!((s.rmse - 1.0 / 2.0f64.sqrt()).abs() < 1e-15);
        assert!(error_stats(&[1], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn seeded_run_is_reproducible() {
        let noise = NoiseModel {
            conductance_variation_sigma: 0.1,
            write_nonlinearity: None,
            adc_bits: 16,
            adc_clip: None,
            seed: 99,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (m, v) = random_instance(&mut rng, 16, 16, 8);
        let (a, sa) = crossbar_mvm(&m, &v, XbarParams::default(), &noise).unwrap();
        let (b, sb) = crossbar_mvm(&m, &v, XbarParams::default(), &noise).unwrap();
        assert_eq!(a, b);
        assert_eq!(sa, sb);
    }

    #[test]
    fn rmse_grows_with_sigma_small() {
        let recs = error_sweep(16, 16, 8, &[0.05, 0.1, 0.2], 60, XbarParams::default(), 11).unwrap();
        let mean = |sigma: f64| {
            let xs: Vec<f64> = recs
                .iter()
                .filter(|r| r.sigma == sigma)
                .map(|r| r.rmse)
                .collect();
            xs.iter().sum::<f64>() / xs.len() as f64
        };
        let (a, b, c) = (mean(0.05), mean(0.1), mean(0.2));
        assert!(a < b && b < c, "rmse means not increasing: {a} {b} {c}");
    }
}
