//! Dense vector arithmetic, lane-keyed random streams and order statistics.
//!
//! Every vector that leaves a public operation is checked for finiteness, so
//! a diverging run surfaces as an error at the round where it happened rather
//! than as a NaN-filled metrics file.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense real vector of fixed dimension: parameters, gradients, momenta.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ParamVector(Vec<f64>);

impl ParamVector {
    /// Builds a vector, rejecting NaN and infinite entries.
    pub fn new(data: Vec<f64>) -> Result<Self> {
        check_finite(&data)?;
        Ok(Self(data))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(vec![0.0; dim])
    }

    pub fn filled(dim: usize, value: f64) -> Result<Self> {
        Self::new(vec![value; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn get(&self, i: usize) -> f64 {
        self.0[i]
    }

    fn check_dim(&self, other: &ParamVector) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: other.dim(),
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &ParamVector) -> Result<ParamVector> {
        self.check_dim(other)?;
        Self::new(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &ParamVector) -> Result<ParamVector> {
        self.check_dim(other)?;
        Self::new(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    pub fn scale(&self, factor: f64) -> Result<ParamVector> {
        Self::new(self.0.iter().map(|a| a * factor).collect())
    }

    /// `self + alpha * other`.
    pub fn axpy(&self, alpha: f64, other: &ParamVector) -> Result<ParamVector> {
        self.check_dim(other)?;
        Self::new(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| a + alpha * b)
                .collect(),
        )
    }

    /// `a * self + b * other`, the shape of the momentum recursion.
    pub fn lerp_weights(&self, a: f64, other: &ParamVector, b: f64) -> Result<ParamVector> {
        self.check_dim(other)?;
        Self::new(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(x, y)| a * x + b * y)
                .collect(),
        )
    }

    pub fn dot(&self, other: &ParamVector) -> Result<f64> {
        self.check_dim(other)?;
        Ok(self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum())
    }

    pub fn norm_sq(&self) -> f64 {
        self.0.iter().map(|a| a * a).sum()
    }

    pub fn dist_sq(&self, other: &ParamVector) -> Result<f64> {
        self.check_dim(other)?;
        Ok(self
            .0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum())
    }
}

impl From<ParamVector> for Vec<f64> {
    fn from(v: ParamVector) -> Self {
        v.0
    }
}

fn check_finite(data: &[f64]) -> Result<()> {
    match data.iter().position(|x| !x.is_finite()) {
        Some(index) => Err(Error::NonFinite { index }),
        None => Ok(()),
    }
}

/// Euclidean norm.
pub fn l2_norm(v: &ParamVector) -> f64 {
    v.norm_sq().sqrt()
}

/// Unit vector parallel to `v`; zero input is an explicit error.
pub fn normalize(v: &ParamVector) -> Result<ParamVector> {
    let n = l2_norm(v);
    if n == 0.0 {
        return Err(Error::ZeroNorm);
    }
    v.scale(1.0 / n)
}

fn check_same_dims(vs: &[ParamVector]) -> Result<usize> {
    let first = vs.first().ok_or(Error::Empty("vector list"))?;
    for v in &vs[1..] {
        first.check_dim(v)?;
    }
    Ok(first.dim())
}

/// Arithmetic mean of equal-dimension vectors.
pub fn mean(vs: &[ParamVector]) -> Result<ParamVector> {
    let d = check_same_dims(vs)?;
    let mut acc = vec![0.0; d];
    for v in vs {
        for (a, x) in acc.iter_mut().zip(&v.0) {
            *a += x;
        }
    }
    let k = vs.len() as f64;
    ParamVector::new(acc.into_iter().map(|a| a / k).collect())
}

/// Median of a scalar sample; even counts take the midpoint of the two
/// central order statistics.
pub fn scalar_median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Per-coordinate median of a nonempty list of equal-dimension vectors.
pub fn coordinate_median(vs: &[ParamVector]) -> Result<ParamVector> {
    let d = check_same_dims(vs)?;
    let mut column = vec![0.0; vs.len()];
    let out = (0..d)
        .map(|j| {
            for (c, v) in column.iter_mut().zip(vs) {
                *c = v.0[j];
            }
            scalar_median(&mut column)
        })
        .collect();
    ParamVector::new(out)
}

/// Deterministic random stream keyed by `(seed, worker, iteration, tag)`.
///
/// The key selects a ChaCha8 instance; the draw index is the position within
/// it. Two streams with the same key produce the same values no matter when
/// or on which thread they are consumed.
#[derive(Debug)]
pub struct RngStream {
    seed: u64,
    worker: u64,
    iteration: u64,
    tag: u64,
    draws: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, worker: u64, iteration: u64) -> Self {
        Self::with_tag(seed, worker, iteration, 0)
    }

    pub fn with_tag(seed: u64, worker: u64, iteration: u64, tag: u64) -> Self {
        let mut key = [0u8; 32];
        key[0..8].copy_from_slice(&seed.to_le_bytes());
        key[8..16].copy_from_slice(&worker.to_le_bytes());
        key[16..24].copy_from_slice(&iteration.to_le_bytes());
        key[24..32].copy_from_slice(&tag.to_le_bytes());
        Self {
            seed,
            worker,
            iteration,
            tag,
            draws: 0,
            rng: ChaCha8Rng::from_seed(key),
        }
    }

    /// A new, independent lane derived from this one.
    pub fn fork(&self, tag: u64) -> Self {
        Self::with_tag(
            self.seed,
            self.worker,
            self.iteration,
            self.tag.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(tag + 1),
        )
    }

    pub fn lane(&self) -> (u64, u64, u64, u64) {
        (self.seed, self.worker, self.iteration, self.tag)
    }

    /// Number of scalar draws consumed so far.
    pub fn draws(&self) -> u64 {
        self.draws
    }

    pub fn next_u64(&mut self) -> u64 {
        self.draws += 1;
        self.rng.next_u64()
    }

    /// Uniform on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.draws += 1;
        self.rng.random::<f64>()
    }

    /// Uniform index in `0..n`; `n` must be positive.
    pub fn index(&mut self, n: usize) -> usize {
        self.draws += 1;
        self.rng.random_range(0..n)
    }

    pub fn standard_normal(&mut self) -> f64 {
        self.draws += 1;
        self.rng.sample(StandardNormal)
    }

    pub fn normal_vec(&mut self, d: usize) -> Vec<f64> {
        (0..d).map(|_| self.standard_normal()).collect()
    }
}

/// `d` i.i.d. standard normal draws from `stream`.
pub fn gaussian_draw(stream: &mut RngStream, d: usize) -> ParamVector {
    ParamVector(stream.normal_vec(d))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pv(x: &[f64]) -> ParamVector {
        ParamVector::new(x.to_vec()).unwrap()
    }

    #[test]
    fn norm_examples() {
        assert_eq!(l2_norm(&pv(&[0.0, 0.0, 0.0])), 0.0);
        assert_eq!(l2_norm(&pv(&[3.0, 4.0])), 5.0);
        assert_eq!(l2_norm(&pv(&[1.0, 1.0, 1.0, 1.0])), 2.0);
    }

    #[test]
    fn normalize_examples() {
        let u = normalize(&pv(&[3.0, 4.0])).unwrap();
        assert!((u.get(0) - 0.6).abs() < 1e-15 && (u.get(1) - 0.8).abs() < 1e-15);
        assert_eq!(normalize(&pv(&[0.0, -2.0])).unwrap(), pv(&[0.0, -1.0]));
        assert_eq!(normalize(&pv(&[0.0, 0.0])), Err(Error::ZeroNorm));
    }

    #[test]
    fn median_examples() {
        let m = coordinate_median(&[pv(&[1.0, 5.0]), pv(&[2.0, 4.0]), pv(&[9.0, 0.0])]).unwrap();
        assert_eq!(m, pv(&[2.0, 4.0]));
        assert_eq!(coordinate_median(&[pv(&[0.0]), pv(&[10.0])]).unwrap(), pv(&[5.0]));
        let same = vec![pv(&[1.0, 1.0]); 3];
        assert_eq!(coordinate_median(&same).unwrap(), pv(&[1.0, 1.0]));
        assert_eq!(coordinate_median(&[]), Err(Error::Empty("vector list")));
    }

    #[test]
    fn rejects_non_finite_and_mismatch() {
        assert_eq!(ParamVector::new(vec![1.0, f64::NAN]), Err(Error::NonFinite { index: 1 }));
        assert!(pv(&[1.0]).add(&pv(&[1.0, 2.0])).is_err());
        let big = pv(&[f64::MAX]);
        assert!(big.add(&big).is_err());
    }

    #[test]
    fn gaussian_is_deterministic_per_lane() {
        let a = gaussian_draw(&mut RngStream::new(7, 1, 0), 3);
        let b = gaussian_draw(&mut RngStream::new(7, 1, 0), 3);
        let c = gaussian_draw(&mut RngStream::new(7, 2, 0), 3);
        assert_eq!(a, b);
        assert_ne!(a, c);
        let forked = gaussian_draw(&mut RngStream::new(7, 1, 0).fork(0), 3);
        assert_ne!(a, forked);
    }

    #[test]
    fn gaussian_mean_within_clt_bound() {
        let n = 100_000;
        let mut s = RngStream::new(7, 0, 0);
        let mut acc = [0.0; 3];
        for _ in 0..n {
            let g = gaussian_draw(&mut s, 3);
            for (a, x) in acc.iter_mut().zip(g.as_slice()) {
                *a += x;
            }
        }
        let bound = 4.0 / (n as f64).sqrt();
        for a in acc {
            assert!((a / n as f64).abs() < bound);
        }
    }

    fn vecs(d: usize, k: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
        prop::collection::vec(prop::collection::vec(-100.0f64..100.0, d), k)
    }

    proptest! {
        #[test]
        fn normalize_scale_and_sign(v in prop::collection::vec(-10.0f64..10.0, 1..6), c in 0.01f64..100.0) {
            let v = pv(&v);
            prop_assume!(l2_norm(&v) > 1e-6);
            let a = normalize(&v.scale(c).unwrap()).unwrap();
            let b = normalize(&v).unwrap();
            let n = normalize(&v.scale(-1.0).unwrap()).unwrap();
            for i in 0..v.dim() {
                prop_assert!((a.get(i) - b.get(i)).abs() < 1e-12);
                prop_assert!((n.get(i) + b.get(i)).abs() < 1e-12);
            }
        }

        #[test]
        fn median_permutation_and_translation(xs in vecs(3, 5), t in -50.0f64..50.0, rot in 0usize..5) {
            let vs: Vec<_> = xs.iter().map(|x| pv(x)).collect();
            let base = coordinate_median(&vs).unwrap();
            let mut perm = vs.clone();
            perm.rotate_left(rot);
            prop_assert_eq!(coordinate_median(&perm).unwrap(), base.clone());
            let shifted: Vec<_> = vs.iter().map(|v| pv(&v.as_slice().iter().map(|x| x + t).collect::<Vec<_>>())).collect();
            let ms = coordinate_median(&shifted).unwrap();
            for i in 0..3 {
                prop_assert!((ms.get(i) - base.get(i) - t).abs() < 1e-9);
            }
        }
    }
}
