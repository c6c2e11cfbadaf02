//! Iterative receiver: demapper and turbo decoder under an iteration
//! schedule, plus Monte-Carlo BER/FER campaigns.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::channel::{transmit, ChannelConfig, ChannelObservation, FadingModel};
use crate::constellation::{ConstellationTable, Modulation};
use crate::demapper::{DemapCase, FrameDemapper};
use crate::error::{Error, Result};
use crate::interleaving::{q_delay, CodeRate, Permutation, PuncturePattern};
use crate::turbo::{ChannelLlrs, TurboCode, TurboDecoder, DEFAULT_SCALING};
use crate::{substream_seed, Llr};

/// Iteration plan of the receiver.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Schedule {
    pub n_demap: usize,
    pub dec_per_demap: usize,
    pub extra_dec: usize,
    pub feedback: bool,
}

const SCHEDULE_GRAMMAR: &str = "<k>IDem, <k>IDem_<m>EIDec or TBICM-SSD:<n>";

impl Schedule {
    pub fn new(n_demap: usize, dec_per_demap: usize, extra_dec: usize, feedback: bool) -> Result<Self> {
        let s = Self {
            n_demap,
            dec_per_demap,
            extra_dec,
            feedback,
        };
        if n_demap == 0 {
            return Err(Error::Config("a schedule needs at least one demapping pass".into()));
        }
        if s.total_dec() == 0 {
            return Err(Error::Config("a schedule needs at least one turbo iteration".into()));
        }
        if !feedback && n_demap != 1 {
            return Err(Error::Config("without feedback the demapper runs exactly once".into()));
        }
        Ok(s)
    }

    /// Non-iterative demapping followed by `n` turbo iterations.
    pub fn baseline(n: usize) -> Result<Self> {
        Self::new(1, n, 0, false)
    }

    pub fn total_dec(&self) -> usize {
        self.n_demap * self.dec_per_demap + self.extra_dec
    }
}

impl FromStr for Schedule {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let t = text.trim();
        let bad = || Error::Parse(format!("schedule '{text}' does not match {SCHEDULE_GRAMMAR}"));
        let count = |s: &str| s.parse::<usize>().map_err(|_| bad());
        if let Some(n) = t.strip_prefix("TBICM-SSD:") {
            return Self::baseline(count(n)?);
        }
        let (dem, extra) = match t.split_once('_') {
            Some((d, e)) => (d, Some(e)),
            None => (t, None),
        };
        let k = count(dem.strip_suffix("IDem").ok_or_else(bad)?)?;
        let m = match extra {
            Some(e) => count(e.strip_suffix("EIDec").ok_or_else(bad)?)?,
            None => 0,
        };
        Self::new(k, 1, m, true)
    }
}

impl fmt::Display for Schedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.feedback {
            write!(f, "TBICM-SSD:{}", self.total_dec())
        } else if self.dec_per_demap != 1 {
            write!(f, "{}IDem_x{}_{}EIDec", self.n_demap, self.dec_per_demap, self.extra_dec)
        } else if self.extra_dec == 0 {
            write!(f, "{}IDem", self.n_demap)
        } else {
            write!(f, "{}IDem_{}EIDec", self.n_demap, self.extra_dec)
        }
    }
}

/// Static description of the transmit chain and receiver options.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkConfig {
    pub modulation: Modulation,
    pub rate: CodeRate,
    /// Constellation rotation in degrees, 0 for none.
    pub rotation_deg: f64,
    pub fading: FadingModel,
    pub erasure_prob: f64,
    pub info_bits: usize,
    pub scaling: f64,
    pub demap_case: DemapCase,
    /// Keep the decoder's exchanged extrinsics across demapping passes.
    pub warm_start: bool,
    pub interleaver_seed: u64,
}

impl LinkConfig {
    pub fn new(modulation: Modulation, rate: CodeRate, info_bits: usize) -> Self {
        Self {
            modulation,
            rate,
            rotation_deg: modulation.default_rotation_deg(),
            fading: FadingModel::FastRayleigh,
            erasure_prob: 0.0,
            info_bits,
            scaling: DEFAULT_SCALING,
            demap_case: DemapCase::Recompute,
            warm_start: true,
            interleaver_seed: 1,
        }
    }

    pub fn channel(&self, ebn0_db: f64) -> ChannelConfig {
        ChannelConfig {
            fading: self.fading,
            ebn0_db,
            bits_per_symbol: self.rate.value() * self.modulation.bits() as f64,
            erasure_prob: self.erasure_prob,
        }
    }
}

/// Counters of one receiver run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ReceiverStats {
    pub demaps: usize,
    pub dec_iterations: usize,
}

/// Built components of a link: code, puncturer, bit interleaver, mapper.
#[derive(Debug, Clone)]
pub struct Link {
    cfg: LinkConfig,
    code: TurboCode,
    pattern: PuncturePattern,
    bit_il: Permutation,
    table: ConstellationTable,
}

impl Link {
    pub fn new(cfg: LinkConfig) -> Result<Self> {
        if cfg.info_bits == 0 || !cfg.info_bits.is_multiple_of(2) {
            return Err(Error::Config(format!(
                "info_bits must be a positive even number, got {}",
                cfg.info_bits
            )));
        }
        if !(0.0..1.0).contains(&cfg.erasure_prob) {
            return Err(Error::Config(format!("erasure_p {} outside [0, 1)", cfg.erasure_prob)));
        }
        let couples = cfg.info_bits / 2;
        let code = TurboCode::with_defaults(couples)?;
        let pattern = PuncturePattern::for_rate(cfg.rate)?;
        let coded = pattern.punctured_len(couples)?;
        let m = cfg.modulation.bits();
        if coded % m != 0 {
            return Err(Error::Config(format!(
                "{coded} coded bits do not fill whole {}-bit symbols",
                m
            )));
        }
        let bit_il = Permutation::s_random_relaxed(coded, cfg.interleaver_seed, 50)?;
        let table = ConstellationTable::for_modulation(cfg.modulation, cfg.rotation_deg)?;
        Ok(Self {
            cfg,
            code,
            pattern,
            bit_il,
            table,
        })
    }

    pub fn config(&self) -> &LinkConfig {
        &self.cfg
    }

    pub fn code(&self) -> &TurboCode {
        &self.code
    }

    pub fn table(&self) -> &ConstellationTable {
        &self.table
    }

    pub fn pattern(&self) -> &PuncturePattern {
        &self.pattern
    }

    pub fn bit_interleaver(&self) -> &Permutation {
        &self.bit_il
    }

    pub fn coded_bits(&self) -> usize {
        self.bit_il.len()
    }

    pub fn symbols(&self) -> usize {
        self.coded_bits() / self.table.order_bits()
    }

    /// Encoded, punctured and bit-interleaved frame.
    pub fn encode_bits(&self, info: &[u8]) -> Result<Vec<u8>> {
        let cw = self.code.encode(info)?;
        let tx = self.pattern.puncture(&cw.mother())?;
        self.bit_il.interleave(&tx)
    }

    /// Channel symbols for `info`, quadrature component already delayed.
    pub fn modulate(&self, info: &[u8]) -> Result<Vec<num_complex::Complex64>> {
        let bits = self.encode_bits(info)?;
        Ok(q_delay(&self.table.map_stream(&bits)?))
    }

    /// Random info frame sent through the channel.
    pub fn simulate_frame<R: Rng + ?Sized>(&self, ebn0_db: f64, rng: &mut R) -> Result<(Vec<u8>, ChannelObservation)> {
        let info: Vec<u8> = (0..self.cfg.info_bits).map(|_| rng.random_range(0..2u8)).collect();
        let tx = self.modulate(&info)?;
        let obs = transmit(&tx, &self.cfg.channel(ebn0_db), rng)?;
        Ok((info, obs))
    }

    fn to_decoder(&self, demapped: &[Llr]) -> Result<ChannelLlrs> {
        let punct = self.bit_il.deinterleave(demapped)?;
        ChannelLlrs::from_mother(&self.pattern.depuncture(&punct, self.code.couples())?)
    }

    fn to_demapper(&self, mother_ext: &[Llr]) -> Result<Vec<Llr>> {
        self.bit_il.interleave(&self.pattern.puncture(mother_ext)?)
    }

    /// Runs the iterative receiver on one frame and returns the decided
    /// information bits.
    pub fn receive(&self, obs: &ChannelObservation, schedule: &Schedule) -> Result<(Vec<u8>, ReceiverStats)> {
        if obs.len() != self.symbols() {
            return Err(Error::FrameFormat(format!(
                "received {} symbols, the link sends {}",
                obs.len(),
                self.symbols()
            )));
        }
        let syms = obs.demap_symbols();
        let mut demapper = FrameDemapper::new(&self.table, self.cfg.demap_case);
        let mut dec = TurboDecoder::new(&self.code, self.cfg.scaling);
        let mut apriori = vec![0.0; self.coded_bits()];
        let mut llrs = None;
        for pass in 0..schedule.n_demap {
            let ext = demapper.demap(&syms, &apriori)?;
            let ch = self.to_decoder(&ext)?;
            if !self.cfg.warm_start {
                dec.reset();
            }
            let feeds_back = schedule.feedback && pass + 1 < schedule.n_demap;
            for i in 0..schedule.dec_per_demap {
                let emit = feeds_back && i + 1 == schedule.dec_per_demap;
                if let Some(bit_ext) = dec.iterate(&ch, emit)? {
                    apriori = self.to_demapper(&bit_ext)?;
                }
            }
            llrs = Some(ch);
        }
        let ch = llrs.expect("at least one demapping pass");
        for _ in 0..schedule.extra_dec {
            dec.iterate(&ch, false)?;
        }
        let stats = ReceiverStats {
            demaps: demapper.invocations(),
            dec_iterations: dec.iterations(),
        };
        Ok((dec.decisions()?, stats))
    }
}

/// Campaign stop rule, applied per schedule and Eb/N0 point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StopRule {
    pub max_frames: u64,
    pub target_frame_errors: u64,
}

impl Default for StopRule {
    fn default() -> Self {
        Self {
            max_frames: 100_000,
            target_frame_errors: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CampaignConfig {
    pub link: LinkConfig,
    pub schedules: Vec<Schedule>,
    pub ebn0_db: Vec<f64>,
    pub seed: u64,
    pub workers: usize,
    pub stop: StopRule,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BerPoint {
    pub scheme: String,
    pub modulation: Modulation,
    pub rate: CodeRate,
    pub erasure_p: f64,
    pub ebn0_db: f64,
    pub frames: u64,
    pub bit_errors: u64,
    pub frame_errors: u64,
    pub ber: f64,
    pub fer: f64,
    pub seed: u64,
    pub info_bits: usize,
}

impl BerPoint {
    pub const CSV_HEADER: &'static str = "scheme,modulation,rate,erasure_p,ebn0_db,frames,bit_errors,frame_errors,ber,fer,seed";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{:e},{:e},{}",
            self.scheme,
            self.modulation,
            self.rate,
            self.erasure_p,
            self.ebn0_db,
            self.frames,
            self.bit_errors,
            self.frame_errors,
            self.ber,
            self.fer,
            self.seed
        )
    }

    /// Bits observed.
    pub fn bits(&self) -> u64 {
        self.frames * self.info_bits as u64
    }

    /// Normal-approximation half width of the BER confidence interval at
    /// `z` standard deviations.
    pub fn ber_halfwidth(&self, z: f64) -> f64 {
        let n = self.bits() as f64;
        if n == 0.0 {
            return f64::INFINITY;
        }
        z * (self.ber * (1.0 - self.ber) / n).sqrt()
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Tally {
    frames: u64,
    bit_errors: u64,
    frame_errors: u64,
    done: bool,
}

/// Seed of frame `frame` at grid point `point`. Shared by all schedules so
/// they see the same frames.
pub fn frame_seed(seed: u64, point: usize, frame: u64) -> u64 {
    substream_seed(substream_seed(seed, point as u64), frame)
}

/// Bit errors per schedule (`None` for schedules not evaluated).
fn run_frame(link: &Link, schedules: &[Schedule], active: &[bool], ebn0_db: f64, seed: u64) -> Result<Vec<Option<u64>>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (info, obs) = link.simulate_frame(ebn0_db, &mut rng)?;
    schedules
        .iter()
        .zip(active)
        .map(|(s, &on)| {
            if !on {
                return Ok(None);
            }
            let (dec, _) = link.receive(&obs, s)?;
            Ok(Some(dec.iter().zip(&info).filter(|(a, b)| a != b).count() as u64))
        })
        .collect()
}

/// Runs every schedule at every Eb/N0 point.
///
/// Frames are simulated in batches on `workers` threads; tallies are
/// accumulated in frame order, so the result depends only on the seed.
pub fn run_ber_campaign(cfg: &CampaignConfig) -> Result<Vec<BerPoint>> {
    if cfg.schedules.is_empty() {
        return Err(Error::Config("no schedules to simulate".into()));
    }
    if cfg.stop.max_frames == 0 {
        return Ok(Vec::new());
    }
    let link = Link::new(cfg.link.clone())?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers.max(1))
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    let batch = (4 * cfg.workers.max(1)) as u64;
    let mut out = Vec::new();
    for (pi, &ebn0) in cfg.ebn0_db.iter().enumerate() {
        let mut tallies = vec![Tally::default(); cfg.schedules.len()];
        let mut next = 0u64;
        while tallies.iter().any(|t| !t.done) {
            let active: Vec<bool> = tallies.iter().map(|t| !t.done).collect();
            let end = (next + batch).min(cfg.stop.max_frames);
            let results: Vec<Result<Vec<Option<u64>>>> = pool.install(|| {
                (next..end)
                    .into_par_iter()
                    .map(|f| run_frame(&link, &cfg.schedules, &active, ebn0, frame_seed(cfg.seed, pi, f)))
                    .collect()
            });
            for r in results {
                let errs = r?;
                for (t, e) in tallies.iter_mut().zip(errs) {
                    if t.done {
                        continue;
                    }
                    let e = e.expect("active schedules are evaluated");
                    t.frames += 1;
                    t.bit_errors += e;
                    t.frame_errors += u64::from(e > 0);
                    t.done = t.frame_errors >= cfg.stop.target_frame_errors || t.frames >= cfg.stop.max_frames;
                }
            }
            next = end;
            if next >= cfg.stop.max_frames {
                tallies.iter_mut().for_each(|t| t.done = true);
            }
        }
        for (s, t) in cfg.schedules.iter().zip(&tallies) {
            let bits = (t.frames * cfg.link.info_bits as u64) as f64;
            log::info!("{s} @ {ebn0} dB: {} frames, {} bit errors", t.frames, t.bit_errors);
            out.push(BerPoint {
                scheme: s.to_string(),
                modulation: cfg.link.modulation,
                rate: cfg.link.rate,
                erasure_p: cfg.link.erasure_prob,
                ebn0_db: ebn0,
                frames: t.frames,
                bit_errors: t.bit_errors,
                frame_errors: t.frame_errors,
                ber: if t.frames > 0 { t.bit_errors as f64 / bits } else { 0.0 },
                fer: if t.frames > 0 { t.frame_errors as f64 / t.frames as f64 } else { 0.0 },
                seed: cfg.seed,
                info_bits: cfg.link.info_bits,
            });
        }
    }
    Ok(out)
}

/// Eb/N0 at which a BER curve crosses `target`, by linear interpolation
/// of `log10(BER)` between the two bracketing points. `points` must be
/// sorted by Eb/N0; zero-BER points count as below any target.
pub fn crossing_ebn0(points: &[(f64, f64)], target: f64) -> Option<f64> {
    for w in points.windows(2) {
        let ((x0, y0), (x1, y1)) = (w[0], w[1]);
        if y0 >= target && y1 < target {
            if y1 <= 0.0 {
                return Some(x1);
            }
            let (l0, l1, lt) = (y0.log10(), y1.log10(), target.log10());
            return Some(x0 + (lt - l0) / (l1 - l0) * (x1 - x0));
        }
    }
    None
}
