//! Seeded sampling with labeled, splittable streams.
//!
//! A stream is identified by a derivation path rooted at a master seed. Every
//! derivation step hashes the parent key together with a label and an index
//! using SHA-256, and the resulting 32-byte key seeds a ChaCha8 generator.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::model::Parameters;

#[derive(Debug, Clone)]
pub struct RngStream {
    key: [u8; 32],
    /// ChaCha stream id; `0` for derived streams, see [`RngStream::lane`].
    lane: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    /// Root stream for `(master_seed, label, index)`.
    pub fn derive(master_seed: u64, label: &str, index: u64) -> Self {
        let mut h = Sha256::new();
        h.update(b"hsara/root");
        h.update(master_seed.to_le_bytes());
        Self::finish(h, label, &[index])
    }

    /// Child stream; the parent's draw position does not matter.
    pub fn child(&self, label: &str, index: u64) -> Self {
        self.child_path(label, &[index])
    }

    pub fn child_path(&self, label: &str, path: &[u64]) -> Self {
        let mut h = Sha256::new();
        h.update(b"hsara/child");
        h.update(self.key);
        h.update(self.lane.to_le_bytes());
        Self::finish(h, label, path)
    }

    /// Cheap sibling stream sharing this key on ChaCha stream `lane + 1`.
    pub fn lane(&self, lane: u64) -> Self {
        let lane = lane + 1;
        let mut rng = ChaCha8Rng::from_seed(self.key);
        rng.set_stream(lane);
        RngStream {
            key: self.key,
            lane,
            rng,
        }
    }

    fn finish(mut h: Sha256, label: &str, path: &[u64]) -> Self {
        h.update((label.len() as u64).to_le_bytes());
        h.update(label.as_bytes());
        h.update((path.len() as u64).to_le_bytes());
        for v in path {
            h.update(v.to_le_bytes());
        }
        let key: [u8; 32] = h.finalize().into();
        RngStream {
            key,
            lane: 0,
            rng: ChaCha8Rng::from_seed(key),
        }
    }

    /// Uniform on `[0, 1)`.
    #[inline]
    pub fn unit(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    #[inline]
    pub fn standard_normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.rng)
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

/// 64-bit seed for a named sub-computation of `master_seed`.
pub fn derive_seed(master_seed: u64, label: &str, index: u64) -> u64 {
    RngStream::derive(master_seed, label, index).next_u64()
}

/// Leg travel time `(d / mu_V) * xi / exp(sigma^2 / 2)` with `xi ~ LogNormal(0, sigma)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TravelTimeLaw {
    pub mu_v: f64,
    pub sigma: f64,
}

impl TravelTimeLaw {
    #[inline]
    pub fn sample(&self, distance: f64, rng: &mut RngStream) -> f64 {
        self.scale(distance, rng.standard_normal())
    }

    /// Travel time for the standard normal draw `n`.
    #[inline]
    pub fn scale(&self, distance: f64, n: f64) -> f64 {
        let mean = distance / self.mu_v;
        // xi / exp(sigma^2/2) folded into one exponential.
        mean * (self.sigma * n - 0.5 * self.sigma * self.sigma).exp()
    }
}

/// Uniform service time with the given mean and standard deviation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ServiceTimeLaw {
    mean: f64,
    half_width: f64,
}

impl ServiceTimeLaw {
    pub fn new(mean: f64, sd: f64) -> Result<Self> {
        if !(mean > 0.0) {
            return Err(Error::param("mu_S", "must be positive"));
        }
        if !(sd >= 0.0) {
            return Err(Error::param("sigma_S", "must be non-negative"));
        }
        let half_width = sd * 3f64.sqrt();
        if mean - half_width < 0.0 {
            return Err(Error::param(
                "sigma_S",
                format!("support [{}, {}] is partly negative", mean - half_width, mean + half_width),
            ));
        }
        Ok(ServiceTimeLaw { mean, half_width })
    }

    pub fn support(&self) -> (f64, f64) {
        (self.mean - self.half_width, self.mean + self.half_width)
    }

    #[inline]
    pub fn sample(&self, rng: &mut RngStream) -> f64 {
        let u = rng.unit();
        if self.half_width == 0.0 {
            self.mean
        } else {
            self.mean - self.half_width + 2.0 * self.half_width * u
        }
    }
}

/// Per-customer cancellation: the flag `Y ~ Bernoulli(1 - p_C)` and a notification
/// time uniform on `[0, a_i]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CancellationLaw {
    pub p_c: f64,
}

impl CancellationLaw {
    #[inline]
    pub fn sample_cancelled(&self, rng: &mut RngStream) -> bool {
        rng.unit() < self.p_c
    }

    #[inline]
    pub fn sample_time(&self, appointment: f64, rng: &mut RngStream) -> f64 {
        appointment * rng.unit()
    }
}

/// All random laws of an instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistributionSpec {
    pub service: ServiceTimeLaw,
    pub travel: TravelTimeLaw,
    pub cancel: CancellationLaw,
}

impl DistributionSpec {
    pub fn from_params(p: &Parameters) -> Result<Self> {
        Ok(DistributionSpec {
            service: ServiceTimeLaw::new(p.mu_s, p.sigma_s)?,
            travel: TravelTimeLaw {
                mu_v: p.mu_v,
                sigma: p.travel_sigma,
            },
            cancel: CancellationLaw { p_c: p.p_c },
        })
    }
}

pub fn sample_travel_time(distance: f64, mu_v: f64, sigma: f64, rng: &mut RngStream) -> f64 {
    TravelTimeLaw { mu_v, sigma }.sample(distance, rng)
}

pub fn sample_service_time(mu_s: f64, sigma_s: f64, rng: &mut RngStream) -> Result<f64> {
    Ok(ServiceTimeLaw::new(mu_s, sigma_s)?.sample(rng))
}

/// `true` when the customer cancels.
pub fn sample_cancel_flag(p_c: f64, rng: &mut RngStream) -> bool {
    CancellationLaw { p_c }.sample_cancelled(rng)
}

pub fn sample_cancel_time(appointment: f64, rng: &mut RngStream) -> f64 {
    CancellationLaw { p_c: 0.0 }.sample_time(appointment, rng)
}

#[cfg(test)]
mod tests {
    use super::*;

    const DRAWS: usize = 1_000_000;

    fn mean_sd(v: &[f64]) -> (f64, f64) {
        let n = v.len() as f64;
        let m = v.iter().sum::<f64>() / n;
        let var = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
        (m, var.sqrt())
    }

    #[test]
    fn same_tuple_same_sequence() {
        let mut a = RngStream::derive(7, "sim", 3);
        let mut b = RngStream::derive(7, "sim", 3);
        let mut c = RngStream::derive(7, "sim", 4);
        let mut d = RngStream::derive(7, "sched", 3);
        let xs: Vec<u64> = (0..8).map(|_| a.next_u64()).collect();
        let ys: Vec<u64> = (0..8).map(|_| b.next_u64()).collect();
        assert_eq!(xs, ys);
        assert_ne!(xs[0], c.next_u64());
        assert_ne!(xs[0], d.next_u64());
    }

    #[test]
    fn child_ignores_parent_position() {
        let a = RngStream::derive(1, "x", 0);
        let mut b = a.clone();
        b.next_u64();
        assert_eq!(a.child("team", 2).next_u64(), b.child("team", 2).next_u64());
        assert_ne!(a.child("team", 2).next_u64(), a.child("team", 3).next_u64());
    }

    #[test]
    fn lanes_are_distinct_streams() {
        let a = RngStream::derive(5, "x", 0);
        let first: Vec<u64> = (0..3).map(|l| a.lane(l).next_u64()).collect();
        assert_ne!(first[0], first[1]);
        assert_ne!(first[1], first[2]);
        assert_ne!(a.clone().next_u64(), first[0]);
        assert_eq!(a.lane(1).next_u64(), first[1]);
        assert_ne!(a.child("c", 0).next_u64(), a.lane(0).child("c", 0).next_u64());
    }

    #[test]
    fn labeled_streams_are_uncorrelated() {
        let mut a = RngStream::derive(11, "a", 0);
        let mut b = RngStream::derive(11, "b", 0);
        let n = 200_000;
        let (mut sxy, mut sx, mut sy, mut sxx, mut syy) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for _ in 0..n {
            let x = a.unit();
            let y = b.unit();
            sx += x;
            sy += y;
            sxy += x * y;
            sxx += x * x;
            syy += y * y;
        }
        let n = n as f64;
        let cov = sxy / n - sx * sy / (n * n);
        let corr = cov / ((sxx / n - (sx / n).powi(2)) * (syy / n - (sy / n).powi(2))).sqrt();
        assert!(corr.abs() < 0.01, "correlation {corr}");
    }

    #[test]
    fn travel_time_examples() {
        let mut rng = RngStream::derive(1, "travel", 0);
        assert_eq!(sample_travel_time(0.0, 1.0, 0.5, &mut rng), 0.0);
        for _ in 0..100 {
            assert_eq!(sample_travel_time(7.5, 1.5, 0.0, &mut rng), 5.0);
        }
        let v: Vec<f64> = (0..DRAWS)
            .map(|_| sample_travel_time(10.0, 1.0, 0.5, &mut rng))
            .collect();
        assert!(v.iter().all(|t| *t > 0.0));
        let (m, _) = mean_sd(&v);
        assert!((m - 10.0).abs() < 0.05, "mean {m}");
    }

    #[test]
    fn service_time_examples() {
        let law = ServiceTimeLaw::new(60.0, 30.0).unwrap();
        let (lo, hi) = law.support();
        assert!((lo - 8.038).abs() < 1e-3 && (hi - 111.962).abs() < 1e-3);

        let mut rng = RngStream::derive(2, "service", 0);
        assert_eq!(sample_service_time(45.0, 0.0, &mut rng).unwrap(), 45.0);

        let v: Vec<f64> = (0..DRAWS).map(|_| law.sample(&mut rng)).collect();
        assert!(v.iter().all(|z| *z >= lo && *z <= hi));
        let (m, sd) = mean_sd(&v);
        assert!((m - 60.0).abs() < 0.1, "mean {m}");
        assert!((sd - 30.0).abs() < 0.2, "sd {sd}");

        assert!(ServiceTimeLaw::new(10.0, 6.0).is_err());
        assert!(ServiceTimeLaw::new(0.0, 0.0).is_err());
    }

    #[test]
    fn cancel_flag_examples() {
        let mut rng = RngStream::derive(3, "cancel", 0);
        assert!((0..10_000).all(|_| !sample_cancel_flag(0.0, &mut rng)));
        assert!((0..10_000).all(|_| sample_cancel_flag(1.0, &mut rng)));
        let hits = (0..DRAWS).filter(|_| sample_cancel_flag(0.1, &mut rng)).count();
        let rate = hits as f64 / DRAWS as f64;
        assert!((rate - 0.1).abs() < 0.002, "rate {rate}");
    }

    #[test]
    fn cancel_time_examples() {
        let mut rng = RngStream::derive(4, "cancel-time", 0);
        assert_eq!(sample_cancel_time(0.0, &mut rng), 0.0);
        let v: Vec<f64> = (0..DRAWS).map(|_| sample_cancel_time(100.0, &mut rng)).collect();
        assert!(v.iter().all(|t| (0.0..=100.0).contains(t)));
        let (m, _) = mean_sd(&v);
        assert!((m - 50.0).abs() < 0.3, "mean {m}");
    }
}
