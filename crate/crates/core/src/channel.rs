//! Frequency non-selective Rayleigh channel with erasures and AWGN.
//!
//! Slot `q` receives `x_q = g * h_q * rho_q * s_q + n_q`, where `rho_q` is an
//! erasure indicator, `n_q` has variance `sigma^2 = N0/2` per real dimension
//! and `g = 1/sqrt(1 - P_erasure)` restores the mean received signal energy
//! lost to erasures. The receiver knows `h_q * rho_q` and `g` exactly.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Bernoulli, Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::interleaving::{q_undelay, q_undelay_gains};

/// Fading profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FadingModel {
    /// Independent Rayleigh coefficient per slot.
    FastRayleigh,
    /// One Rayleigh coefficient held for `block_len` consecutive slots.
    BlockRayleigh { block_len: usize },
    /// No fading (`h = 1`).
    Awgn,
}

impl std::str::FromStr for FadingModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fast_rayleigh" => Ok(FadingModel::FastRayleigh),
            "awgn" => Ok(FadingModel::Awgn),
            _ => match s.strip_prefix("block_rayleigh") {
                Some("") => Ok(FadingModel::BlockRayleigh { block_len: 32 }),
                Some(rest) => rest
                    .trim_start_matches(':')
                    .parse::<usize>()
                    .ok()
                    .filter(|&b| b > 0)
                    .map(|block_len| FadingModel::BlockRayleigh { block_len })
                    .ok_or_else(|| Error::Config(format!("bad block length in channel '{s}'"))),
                None => Err(Error::Config(format!(
                    "unknown channel '{s}', expected fast_rayleigh, block_rayleigh[:len] or awgn"
                ))),
            },
        }
    }
}

/// Static channel parameters for one operating point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelConfig {
    pub fading: FadingModel,
    pub ebn0_db: f64,
    /// Information bits per transmitted complex symbol, `R_c * M`.
    pub bits_per_symbol: f64,
    pub erasure_prob: f64,
}

impl ChannelConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.ebn0_db.is_finite() {
            return Err(Error::Config(format!("Eb/N0 {} dB is not finite", self.ebn0_db)));
        }
        if !(0.0..1.0).contains(&self.erasure_prob) {
            return Err(Error::Config(format!(
                "erasure probability {} outside [0, 1)",
                self.erasure_prob
            )));
        }
        if self.bits_per_symbol.is_nan() || self.bits_per_symbol <= 0.0 {
            return Err(Error::Config(format!(
                "bits per symbol {} must be positive",
                self.bits_per_symbol
            )));
        }
        Ok(())
    }

    /// `Es/N0 = Eb/N0 * R_c * M` for unit-energy symbols.
    pub fn esn0_linear(&self) -> f64 {
        10f64.powf(self.ebn0_db / 10.0) * self.bits_per_symbol
    }

    /// Noise variance per real dimension, `N0 / 2` with `Es = 1`.
    pub fn sigma2(&self) -> f64 {
        0.5 / self.esn0_linear()
    }

    /// Factor `sqrt(1 - P_erasure)` by which erasures reduce the mean
    /// received amplitude; the transmitter divides by it.
    pub fn erasure_compensation(&self) -> f64 {
        (1.0 - self.erasure_prob).sqrt()
    }
}

/// Received frame with the receiver's channel knowledge.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelObservation {
    /// Received samples per transmitted slot.
    pub x: Vec<Complex64>,
    /// Effective attenuation `h_q * rho_q` per slot, 0 on erased slots.
    pub h_eff: Vec<f64>,
    pub sigma2: f64,
    pub erasure_prob: f64,
}

/// Received symbol after component realignment, as the demapper sees it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DemapSymbol {
    /// Per-component equalized sample (zero where the component was erased).
    pub y: Complex64,
    /// Reliability `(g h)^2 / N0 = (g h)^2 / (2 sigma^2)` of the in-phase
    /// component, so that `w (y - s)^2` is a negative log-likelihood.
    pub w_i: f64,
    /// Same for the quadrature component.
    pub w_q: f64,
}

fn rayleigh<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let a: f64 = rng.sample(StandardNormal);
    let b: f64 = rng.sample(StandardNormal);
    ((a * a + b * b) / 2.0).sqrt()
}

/// Sends `symbols` over the channel.
pub fn transmit<R: Rng + ?Sized>(symbols: &[Complex64], cfg: &ChannelConfig, rng: &mut R) -> Result<ChannelObservation> {
    cfg.validate()?;
    let n = symbols.len();
    let erased = Bernoulli::new(cfg.erasure_prob).map_err(|e| Error::Config(e.to_string()))?;
    let mut h_eff = Vec::with_capacity(n);
    let mut held = 0.0;
    for q in 0..n {
        let h = match cfg.fading {
            FadingModel::FastRayleigh => rayleigh(rng),
            FadingModel::Awgn => 1.0,
            FadingModel::BlockRayleigh { block_len } => {
                if q % block_len == 0 {
                    held = rayleigh(rng);
                }
                held
            }
        };
        let rho = if erased.sample(rng) { 0.0 } else { 1.0 };
        h_eff.push(h * rho);
    }
    let gain = 1.0 / cfg.erasure_compensation();
    let sigma = cfg.sigma2().sqrt();
    let x = symbols
        .iter()
        .zip(&h_eff)
        .map(|(&s, &h)| {
            let nr: f64 = rng.sample(StandardNormal);
            let ni: f64 = rng.sample(StandardNormal);
            s * (gain * h) + Complex64::new(sigma * nr, sigma * ni)
        })
        .collect();
    Ok(ChannelObservation {
        x,
        h_eff,
        sigma2: cfg.sigma2(),
        erasure_prob: cfg.erasure_prob,
    })
}

impl ChannelObservation {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Undoes the quadrature delay and equalizes each component.
    pub fn demap_symbols(&self) -> Vec<DemapSymbol> {
        let gain = 1.0 / (1.0 - self.erasure_prob).sqrt();
        let x = q_undelay(&self.x);
        let h = q_undelay_gains(&self.h_eff);
        x.iter()
            .zip(h)
            .map(|(x, (hi, hq))| {
                let (ai, aq) = (gain * hi, gain * hq);
                let eq = |v: f64, a: f64| if a > 0.0 { v / a } else { 0.0 };
                DemapSymbol {
                    y: Complex64::new(eq(x.re, ai), eq(x.im, aq)),
                    w_i: ai * ai / (2.0 * self.sigma2),
                    w_q: aq * aq / (2.0 * self.sigma2),
                }
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cfg(fading: FadingModel, ebn0_db: f64, p: f64) -> ChannelConfig {
        ChannelConfig {
            fading,
            ebn0_db,
            bits_per_symbol: 2.0 * 0.5,
            erasure_prob: p,
        }
    }

    fn unit_symbols(n: usize) -> Vec<Complex64> {
        (0..n)
            .map(|i| Complex64::from_polar(1.0, 0.3 + i as f64 * 1.7))
            .collect()
    }

    #[test]
    fn noiseless_limit_recovers_symbols() {
        let s = unit_symbols(100);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let obs = transmit(&s, &cfg(FadingModel::FastRayleigh, 300.0, 0.0), &mut rng).unwrap();
        for ((x, h), s) in obs.x.iter().zip(&obs.h_eff).zip(&s) {
            assert!((x / h - s).norm() < 1e-9);
        }
    }

    #[test]
    fn erasure_compensation_factor() {
        let c = cfg(FadingModel::FastRayleigh, 5.0, 0.15);
        assert!((c.erasure_compensation() - 0.85f64.sqrt()).abs() < 1e-15);
        assert!((c.erasure_compensation() - 0.922).abs() < 1e-3);
    }

    #[test]
    fn sigma2_bookkeeping() {
        let c = ChannelConfig {
            fading: FadingModel::Awgn,
            ebn0_db: 10.0,
            bits_per_symbol: 6.0 * 2.0 / 3.0,
            erasure_prob: 0.0,
        };
        assert!((c.esn0_linear() - 40.0).abs() < 1e-12);
        assert!((c.sigma2() - 1.0 / 80.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_parameters() {
        let s = unit_symbols(4);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(transmit(&s, &cfg(FadingModel::Awgn, 1.0, 1.0), &mut rng).is_err());
        assert!(transmit(&s, &cfg(FadingModel::Awgn, f64::NAN, 0.0), &mut rng).is_err());
        assert!("ricean".parse::<FadingModel>().is_err());
        assert_eq!(
            "block_rayleigh:8".parse::<FadingModel>().unwrap(),
            FadingModel::BlockRayleigh { block_len: 8 }
        );
    }

    #[test]
    fn same_seed_same_stream() {
        let s = unit_symbols(500);
        let c = cfg(FadingModel::FastRayleigh, 3.0, 0.1);
        let a = transmit(&s, &c, &mut ChaCha8Rng::seed_from_u64(77)).unwrap();
        let b = transmit(&s, &c, &mut ChaCha8Rng::seed_from_u64(77)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn block_fading_holds_coefficient() {
        let s = unit_symbols(64);
        let c = cfg(FadingModel::BlockRayleigh { block_len: 16 }, 10.0, 0.0);
        let obs = transmit(&s, &c, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        for blk in obs.h_eff.chunks(16) {
            assert!(blk.iter().all(|&h| h == blk[0]));
        }
    }

    #[test]
    fn erased_components_carry_no_weight() {
        let obs = ChannelObservation {
            x: vec![Complex64::new(0.5, 0.5); 3],
            h_eff: vec![1.0, 0.0, 2.0],
            sigma2: 0.5,
            erasure_prob: 0.0,
        };
        let d = obs.demap_symbols();
        // symbol 0 takes Q from slot 1 (erased)
        assert_eq!(d[0].w_q, 0.0);
        assert_eq!(d[0].y.im, 0.0);
        assert_eq!(d[0].w_i, 1.0);
        assert_eq!(d[1].w_i, 0.0);
        assert_eq!(d[1].w_q, 4.0);
        assert!((d[1].y.im - 0.25).abs() < 1e-15);
    }
}
