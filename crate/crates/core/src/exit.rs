//! EXIT chart engine for the turbo decoder with the demapper in the loop.
//!
//! A transfer curve maps the a priori mutual information of a constituent
//! decoder to the mutual information of its extrinsic output, at a given
//! number of demapper refreshes.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::constellation::Modulation;
use crate::demapper::FrameDemapper;
use crate::error::{Error, Result};
use crate::interleaving::CodeRate;
use crate::receiver::Link;
use crate::turbo::{couple_to_bits, siso_decode, Boundary, ChannelLlrs, SisoInput};
use crate::{substream_seed, Llr};

/// Mutual information between a bit and a consistent Gaussian LLR of
/// standard deviation `sigma` (mean `sigma^2 / 2`).
///
/// Three-segment polynomial fit, accurate to about 1e-3. The two lower
/// segments are cross-faded over `JOIN +- JOIN_BAND` so the function is
/// continuous and strictly increasing, which makes [`j_inverse`] exact.
pub fn j_function(sigma: f64) -> f64 {
    const JOIN: f64 = 1.6363;
    const JOIN_BAND: f64 = 0.05;
    let low = |s: f64| -0.0421061 * s.powi(3) + 0.209252 * s * s - 0.00640081 * s;
    let mid = |s: f64| 1.0 - (0.00181491 * s.powi(3) - 0.142675 * s * s - 0.0822054 * s + 0.0549608).exp();
    let s = sigma.max(0.0);
    let v = if s <= JOIN - JOIN_BAND {
        low(s)
    } else if s < JOIN + JOIN_BAND {
        let t = (s - (JOIN - JOIN_BAND)) / (2.0 * JOIN_BAND);
        (1.0 - t) * low(s) + t * mid(s)
    } else if s < 10.0 {
        mid(s)
    } else {
        1.0
    };
    v.clamp(0.0, 1.0)
}

/// Inverse of [`j_function`] by bisection.
///
/// The fit is clamped at 0 below `sigma ~ 0.031`, so `j_inverse(0) = 0`
/// and tiny `sigma` do not round-trip.
pub fn j_inverse(mi: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&mi) {
        return Err(Error::Domain(format!("mutual information {mi} outside [0, 1)")));
    }
    if mi == 0.0 {
        return Ok(0.0);
    }
    let (mut lo, mut hi) = (0.0f64, 10.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if j_function(mid) < mi {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-13 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Consistent Gaussian LLRs for `bits` carrying mutual information `ia`.
pub fn gen_apriori<R: Rng + ?Sized>(bits: &[u8], ia: f64, rng: &mut R) -> Result<Vec<Llr>> {
    let sigma = j_inverse(ia)?;
    let mean = sigma * sigma / 2.0;
    Ok(bits
        .iter()
        .map(|&b| {
            let n: f64 = rng.sample(StandardNormal);
            mean * (2.0 * b as f64 - 1.0) + sigma * n
        })
        .collect())
}

/// `ln(1 + e^x)` without overflow.
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Time-average mutual information estimate, clamped to `[0, 1]`.
pub fn measure_mi(llrs: &[Llr], bits: &[u8]) -> Result<f64> {
    measure_mi_with_error(llrs, bits).map(|(mi, _)| mi)
}

/// [`measure_mi`] together with the standard error of the estimate.
pub fn measure_mi_with_error(llrs: &[Llr], bits: &[u8]) -> Result<(f64, f64)> {
    if llrs.len() != bits.len() {
        return Err(Error::FrameFormat(format!("{} LLRs for {} bits", llrs.len(), bits.len())));
    }
    if llrs.is_empty() {
        return Ok((0.0, 0.0));
    }
    let n = llrs.len() as f64;
    let (mut sum, mut sq) = (0.0, 0.0);
    for (&l, &b) in llrs.iter().zip(bits) {
        let t = softplus(-l * (2.0 * b as f64 - 1.0)) / std::f64::consts::LN_2;
        sum += t;
        sq += t * t;
    }
    let mean = sum / n;
    let var = (sq / n - mean * mean).max(0.0);
    Ok(((1.0 - mean).clamp(0.0, 1.0), (var / n).sqrt()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExitMeta {
    pub ebn0_db: f64,
    pub modulation: Modulation,
    pub rate: CodeRate,
    pub erasure_p: f64,
    pub demap_depth: usize,
    pub rotated: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExitCurve {
    pub ia: Vec<f64>,
    pub ie: Vec<f64>,
    /// Standard error of each IE estimate (zeros when unknown).
    pub ie_stderr: Vec<f64>,
    pub meta: ExitMeta,
}

impl ExitCurve {
    pub const CSV_HEADER: &'static str = "ia,ie,ebn0_db,demap_depth,rotated,erasure_p";

    pub fn new(ia: Vec<f64>, ie: Vec<f64>, meta: ExitMeta) -> Result<Self> {
        if ia.len() != ie.len() || ia.is_empty() {
            return Err(Error::FrameFormat(format!("{} IA points for {} IE values", ia.len(), ie.len())));
        }
        if ia.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("IA grid must be strictly increasing".into()));
        }
        if ie.iter().chain(&ia).any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::Numeric("mutual information outside [0, 1]".into()));
        }
        let ie_stderr = vec![0.0; ie.len()];
        Ok(Self { ia, ie, ie_stderr, meta })
    }

    /// Largest `|ie - other.ie|` over the common grid, and the matching
    /// combined standard error.
    pub fn max_gap(&self, other: &ExitCurve) -> (f64, f64) {
        self.ie
            .iter()
            .zip(&other.ie)
            .zip(self.ie_stderr.iter().zip(&other.ie_stderr))
            .map(|((a, b), (sa, sb))| ((a - b).abs(), (sa * sa + sb * sb).sqrt()))
            .fold((0.0, 0.0), |acc, x| if x.0 > acc.0 { x } else { acc })
    }

    /// Linear interpolation of the transfer function, clamped to the grid.
    pub fn eval(&self, ia: f64) -> f64 {
        interp(&self.ia, &self.ie, ia)
    }

    /// IA at which the curve reaches `ie`, on the running maximum of the
    /// curve. `None` outside the curve's range.
    pub fn inverse(&self, ie: f64) -> Option<f64> {
        let mut run = Vec::with_capacity(self.ie.len());
        let mut top = f64::NEG_INFINITY;
        for &v in &self.ie {
            top = top.max(v);
            run.push(top);
        }
        if ie < run[0] || ie > top {
            return None;
        }
        let k = run.iter().position(|&v| v >= ie)?;
        if k == 0 || run[k] == run[k - 1] {
            return Some(self.ia[k]);
        }
        let t = (ie - run[k - 1]) / (run[k] - run[k - 1]);
        Some(self.ia[k - 1] + t * (self.ia[k] - self.ia[k - 1]))
    }

    pub fn csv_rows(&self) -> String {
        let mut s = String::new();
        for (a, e) in self.ia.iter().zip(&self.ie) {
            let _ = writeln!(
                s,
                "{a},{e:.6},{},{},{},{}",
                self.meta.ebn0_db,
                self.meta.demap_depth,
                u8::from(self.meta.rotated),
                self.meta.erasure_p
            );
        }
        s
    }
}

fn interp(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    if x <= xs[0] {
        return ys[0];
    }
    let n = xs.len();
    if x >= xs[n - 1] {
        return ys[n - 1];
    }
    let k = xs.partition_point(|&v| v <= x);
    let t = (x - xs[k - 1]) / (xs[k] - xs[k - 1]);
    ys[k - 1] + t * (ys[k] - ys[k - 1])
}

/// Default IA grid: steps of 0.1 up to 0.9, then 0.95, 0.99 and 0.999.
pub fn default_ia_grid() -> Vec<f64> {
    let mut g: Vec<f64> = (0..10).map(|i| i as f64 / 10.0).collect();
    g.extend([0.95, 0.99, 0.999]);
    g
}

/// Evenly spaced IA grid `0, 1/(n-1), ..., top`.
pub fn ia_grid(points: usize, top: f64) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..points).map(|i| top * i as f64 / (points - 1) as f64).collect(),
    }
}

fn couple_apriori(llrs: &[Llr]) -> Vec<[f64; 4]> {
    llrs.chunks_exact(2).map(|c| [0.0, c[1], c[0], c[0] + c[1]]).collect()
}

/// One frame for transfer measurements: info bits and the demapper input.
pub struct ExitFrame {
    info: Vec<u8>,
    par2_info: Vec<u8>,
    symbols: Vec<crate::channel::DemapSymbol>,
}

impl ExitFrame {
    pub fn new(link: &Link, ebn0_db: f64, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (info, obs) = link.simulate_frame(ebn0_db, &mut rng)?;
        let pairs: Vec<[u8; 2]> = info.chunks_exact(2).map(|c| [c[0], c[1]]).collect();
        let par2_info = link.code().interleaver().interleave_pairs(&pairs).concat();
        Ok(Self {
            info,
            par2_info,
            symbols: obs.demap_symbols(),
        })
    }
}

/// Extrinsic MI of the first constituent decoder at a priori MI `ia`,
/// after `demap_depth` demapper refreshes.
///
/// Both constituents receive synthetic a priori at `ia`. Each refresh runs
/// both constituents, feeds their bit extrinsics back to the demapper and
/// demaps again. The measured output is the scaled couple extrinsic of the
/// first constituent, marginalized to bits.
pub fn transfer_point(link: &Link, frame: &ExitFrame, demap_depth: usize, ia: f64, seed: u64) -> Result<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let apr1 = couple_apriori(&gen_apriori(&frame.info, ia, &mut rng)?);
    let apr2 = couple_apriori(&gen_apriori(&frame.par2_info, ia, &mut rng)?);
    let code = link.code();
    let il = code.interleaver();
    let sf = link.config().scaling;
    let mut demapper = FrameDemapper::new(link.table(), link.config().demap_case);
    let mut apriori = vec![0.0; link.coded_bits()];
    let mut llrs: ChannelLlrs;
    let mut pass = 0;
    loop {
        let ext = demapper.demap(&frame.symbols, &apriori)?;
        let punct = link.bit_interleaver().deinterleave(&ext)?;
        llrs = ChannelLlrs::from_mother(&link.pattern().depuncture(&punct, code.couples())?)?;
        if pass == demap_depth {
            break;
        }
        let out1 = siso_decode(
            code.trellis(),
            &SisoInput { sys: &llrs.sys, par: &llrs.par1, apriori: &apr1 },
            sf,
            true,
            Boundary::Circular,
        )?;
        let sys2 = il.interleave_pairs(&llrs.sys);
        let out2 = siso_decode(
            code.trellis(),
            &SisoInput { sys: &sys2, par: &llrs.par2, apriori: &apr2 },
            sf,
            true,
            Boundary::Circular,
        )?;
        let (b1, b2) = (out1.bit_ext.expect("requested"), out2.bit_ext.expect("requested"));
        let mother: Vec<Llr> = b1
            .iter()
            .zip(&b2)
            .flat_map(|(e1, e2)| [e1[0], e1[1], e1[2], e1[3], e2[2], e2[3]])
            .collect();
        apriori = link.bit_interleaver().interleave(&link.pattern().puncture(&mother)?)?;
        pass += 1;
    }
    let out = siso_decode(
        code.trellis(),
        &SisoInput { sys: &llrs.sys, par: &llrs.par1, apriori: &apr1 },
        sf,
        false,
        Boundary::Circular,
    )?;
    let bit_llrs: Vec<Llr> = out.z_ext.iter().flat_map(couple_to_bits).collect();
    measure_mi_with_error(&bit_llrs, &frame.info)
}

/// Transfer curve over `grid`, one frame shared by all grid points.
///
/// Grid points run in parallel on the current rayon pool.
pub fn decoder_transfer(link: &Link, demap_depth: usize, ebn0_db: f64, grid: &[f64], seed: u64) -> Result<ExitCurve> {
    let frame = ExitFrame::new(link, ebn0_db, seed)?;
    decoder_transfer_on(link, &frame, demap_depth, ebn0_db, grid, seed)
}

/// As [`decoder_transfer`] on a prepared frame.
pub fn decoder_transfer_on(
    link: &Link,
    frame: &ExitFrame,
    demap_depth: usize,
    ebn0_db: f64,
    grid: &[f64],
    seed: u64,
) -> Result<ExitCurve> {
    let measured = grid
        .par_iter()
        .enumerate()
        .map(|(i, &ia)| transfer_point(link, frame, demap_depth, ia, substream_seed(seed ^ 0xA5A5, i as u64)))
        .collect::<Result<Vec<(f64, f64)>>>()?;
    let (ie, stderr): (Vec<f64>, Vec<f64>) = measured.into_iter().unzip();
    let cfg = link.config();
    let mut curve = ExitCurve::new(
        grid.to_vec(),
        ie,
        ExitMeta {
            ebn0_db,
            modulation: cfg.modulation,
            rate: cfg.rate,
            erasure_p: cfg.erasure_prob,
            demap_depth,
            rotated: cfg.rotation_deg != 0.0,
        },
    )?;
    curve.ie_stderr = stderr;
    Ok(curve)
}

/// Smallest vertical gap between `first` (IA on the abscissa) and
/// `second` (plotted mirrored), over abscissae up to `ceiling` where both
/// are defined. Negative when the curves cross.
pub fn tunnel_opening(first: &ExitCurve, second: &ExitCurve, ceiling: f64) -> Option<f64> {
    first
        .ia
        .iter()
        .filter(|&&u| u <= ceiling)
        .filter_map(|&u| second.inverse(u).map(|v| first.eval(u) - v))
        .reduce(f64::min)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// Staircase corners `(IA1 = IE2, IE1 = IA2)`, starting at `(0, 0)`.
    pub points: Vec<(f64, f64)>,
    /// Decoder iterations (both constituents) taken.
    pub iterations: usize,
    pub converged: bool,
}

/// Staircase between the curves. Iteration `i` uses pair
/// `min(i, len - 1)`, so a sequence of demapping depths models the
/// demapper being refreshed once per turbo iteration.
pub fn trajectory(pairs: &[(&ExitCurve, &ExitCurve)], target: f64, max_iterations: usize) -> Result<Trajectory> {
    if pairs.is_empty() {
        return Err(Error::Config("trajectory needs at least one curve pair".into()));
    }
    let mut points = vec![(0.0, 0.0)];
    let (mut x, mut y) = (0.0f64, 0.0f64);
    let mut converged = false;
    let mut iterations = 0;
    while iterations < max_iterations {
        let (c1, c2) = pairs[iterations.min(pairs.len() - 1)];
        let ny = c1.eval(x).max(y);
        points.push((x, ny));
        let nx = c2.eval(ny).max(x);
        points.push((nx, ny));
        iterations += 1;
        let stalled = (nx - x).abs() < 1e-9 && (ny - y).abs() < 1e-9;
        x = nx;
        y = ny;
        if x >= target && y >= target {
            converged = true;
            break;
        }
        if stalled && iterations >= pairs.len() {
            break;
        }
    }
    Ok(Trajectory {
        points,
        iterations,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn meta() -> ExitMeta {
        ExitMeta {
            ebn0_db: 0.0,
            modulation: Modulation::Qpsk,
            rate: CodeRate::new(1, 2).unwrap(),
            erasure_p: 0.0,
            demap_depth: 0,
            rotated: true,
        }
    }

    #[test]
    fn j_function_limits() {
        assert_eq!(j_function(0.0), 0.0);
        assert_eq!(j_function(50.0), 1.0);
        assert!(j_function(9.99) > 0.9999);
        let mut prev = 0.0;
        for i in 1..2000 {
            let v = j_function(i as f64 * 0.005);
            assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn j_inverse_round_trip() {
        for i in 0..=999 {
            let mi = i as f64 / 1000.0;
            let s = j_inverse(mi).unwrap();
            assert!((j_function(s) - mi).abs() < 1e-4, "mi={mi}");
        }
        for i in 1..=900 {
            let s = 0.05 + i as f64 * 0.01;
            assert!((j_inverse(j_function(s)).unwrap() - s).abs() < 1e-4, "s={s}");
        }
        assert!(matches!(j_inverse(1.0), Err(Error::Domain(_))));
        assert!(j_inverse(-0.1).is_err());
    }

    #[test]
    fn mi_estimator_limits() {
        let bits: Vec<u8> = (0..20000).map(|i| (i % 2) as u8).collect();
        assert_eq!(measure_mi(&vec![0.0; 20000], &bits).unwrap(), 0.0);
        let sat: Vec<f64> = bits.iter().map(|&b| 40.0 * (2.0 * b as f64 - 1.0)).collect();
        assert!(measure_mi(&sat, &bits).unwrap() >= 0.999);
        assert!(measure_mi(&sat[1..], &bits).is_err());
    }

    #[test]
    fn curve_eval_and_inverse() {
        let c = ExitCurve::new(vec![0.0, 0.5, 1.0], vec![0.2, 0.6, 1.0], meta()).unwrap();
        assert!((c.eval(0.25) - 0.4).abs() < 1e-12);
        assert!((c.inverse(0.4).unwrap() - 0.25).abs() < 1e-12);
        assert!(c.inverse(0.1).is_none());
        assert!(ExitCurve::new(vec![0.0, 0.0], vec![0.1, 0.2], meta()).is_err());
        assert!(ExitCurve::new(vec![0.0, 0.5], vec![0.1, 1.2], meta()).is_err());
        assert_eq!(c.csv_rows().lines().count(), 3);
    }

    #[test]
    fn trajectory_stalls_on_diagonal() {
        let grid = ia_grid(11, 1.0);
        let c = ExitCurve::new(grid.clone(), grid.clone(), meta()).unwrap();
        let t = trajectory(&[(&c, &c)], 0.999, 100).unwrap();
        assert!(!t.converged);
        assert_eq!(t.points.last().copied(), Some((0.0, 0.0)));
    }

    #[test]
    fn trajectory_converges_with_open_tunnel() {
        let grid = ia_grid(11, 1.0);
        let ie: Vec<f64> = grid.iter().map(|&x| (0.5 + 0.5 * x).min(1.0)).collect();
        let c = ExitCurve::new(grid, ie, meta()).unwrap();
        let t = trajectory(&[(&c, &c)], 0.999, 100).unwrap();
        assert!(t.converged);
        assert!(t.iterations < 20);
        assert!(tunnel_opening(&c, &c, 0.95).unwrap() > 0.0);
    }
}
