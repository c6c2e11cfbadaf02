//! Independent reference implementations used by the oracle and acceptance
//! tests. Nothing here calls into the optimized code paths it checks.

#![allow(dead_code)]

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use tbicm::channel::DemapSymbol;
use tbicm::constellation::ConstellationTable;
use tbicm::demapper::{demap_frame, DemapCase};
use tbicm::turbo::{siso_decode, Boundary, SisoInput, TrellisDef};

// ============================================================================
// Constituent encoder as an explicit bit register
// ============================================================================

/// Register cells `[S1, S2, S3]`; state index `4*S1 + 2*S2 + S3`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Register([u8; 3]);

impl Register {
    pub fn from_index(s: usize) -> Self {
        Register([((s >> 2) & 1) as u8, ((s >> 1) & 1) as u8, (s & 1) as u8])
    }

    pub fn index(self) -> usize {
        (self.0[0] as usize) << 2 | (self.0[1] as usize) << 1 | self.0[2] as usize
    }

    /// Clocks in couple `(a, b)`; returns the parity pair `(y, w)`.
    ///
    /// Feedback taps D and D^3, parity Y taps 1, D^2, D^3, parity W taps 1, D^3.
    /// `b` also enters the second and third cells.
    pub fn clock(&mut self, a: u8, b: u8) -> (u8, u8) {
        let [s1, s2, s3] = self.0;
        let node = a ^ b ^ s1 ^ s3;
        let y = node ^ s2 ^ s3;
        let w = node ^ s3;
        self.0 = [node, s1 ^ b, s2 ^ b];
        (y, w)
    }
}

/// Parity bits `[Y0, W0, Y1, W1, ...]` of a tail-biting run, with the start
/// state found by trying all eight.
pub fn register_encode(couples: &[u8]) -> Vec<u8> {
    let run = |start: usize| {
        let mut r = Register::from_index(start);
        let par: Vec<u8> = couples
            .iter()
            .flat_map(|&d| {
                let (y, w) = r.clock(d >> 1, d & 1);
                [y, w]
            })
            .collect();
        (r.index(), par)
    };
    let hits: Vec<_> = (0..8).map(run).enumerate().filter(|(s, (end, _))| end == s).collect();
    assert_eq!(hits.len(), 1, "tail-biting start state must be unique");
    hits.into_iter().next().unwrap().1 .1
}

// ============================================================================
// Exhaustive max-over-paths SISO
// ============================================================================

pub struct ToyFrame {
    pub sys: Vec<[f64; 2]>,
    pub par: Vec<[f64; 2]>,
    pub apriori: Vec<[f64; 4]>,
    pub alpha0: [f64; 8],
    pub beta_end: [f64; 8],
}

pub fn random_toy_frame<R: Rng>(rng: &mut R, k: usize) -> ToyFrame {
    let mut g = |s: f64| s * rng.sample::<f64, _>(StandardNormal);
    let sys = (0..k).map(|_| [g(2.0), g(2.0)]).collect();
    let par = (0..k).map(|_| [g(2.0), g(2.0)]).collect();
    let apriori = (0..k).map(|_| [0.0, g(1.5), g(1.5), g(1.5)]).collect();
    let alpha0 = std::array::from_fn(|_| g(1.0));
    let beta_end = std::array::from_fn(|_| g(1.0));
    ToyFrame {
        sys,
        par,
        apriori,
        alpha0,
        beta_end,
    }
}

/// Per couple, `max` of the full path metric over every (start state,
/// input sequence) whose couple at that position equals `d`.
pub fn brute_force_soft(f: &ToyFrame) -> Vec<[f64; 4]> {
    let k = f.sys.len();
    let mut best = vec![[f64::NEG_INFINITY; 4]; k];
    let mut seq = vec![0u8; k];
    for start in 0..8 {
        for code in 0..4usize.pow(k as u32) {
            for (i, d) in seq.iter_mut().enumerate() {
                *d = ((code >> (2 * i)) & 3) as u8;
            }
            let mut reg = Register::from_index(start);
            let mut metric = f.alpha0[start];
            for (i, &d) in seq.iter().enumerate() {
                let (a, b) = (d >> 1, d & 1);
                let (y, w) = reg.clock(a, b);
                metric += a as f64 * f.sys[i][0]
                    + b as f64 * f.sys[i][1]
                    + y as f64 * f.par[i][0]
                    + w as f64 * f.par[i][1]
                    + f.apriori[i][d as usize];
            }
            metric += f.beta_end[reg.index()];
            for (i, &d) in seq.iter().enumerate() {
                let slot = &mut best[i][d as usize];
                if metric > *slot {
                    *slot = metric;
                }
            }
        }
    }
    best
}

/// Checks one toy frame; returns the largest deviation seen.
pub fn siso_deviation(t: &TrellisDef, f: &ToyFrame, sf: f64) -> f64 {
    let out = siso_decode(
        t,
        &SisoInput {
            sys: &f.sys,
            par: &f.par,
            apriori: &f.apriori,
        },
        sf,
        false,
        Boundary::Fixed {
            alpha0: f.alpha0,
            beta_end: f.beta_end,
        },
    )
    .unwrap();
    let oracle = brute_force_soft(f);
    let mut worst: f64 = 0.0;
    for k in 0..f.sys.len() {
        let (s, o) = (&out.soft[k], &oracle[k]);
        let intrinsic = |d: usize| ((d >> 1) as f64) * f.sys[k][0] + ((d & 1) as f64) * f.sys[k][1] + f.apriori[k][d];
        for d in 0..4 {
            worst = worst.max(((s[d] - s[0]) - (o[d] - o[0])).abs());
            let ext = sf * ((o[d] - intrinsic(d)) - (o[0] - intrinsic(0)));
            worst = worst.max((out.z_ext[k][d] - ext).abs());
        }
        assert_eq!(out.z_ext[k][0], 0.0);
    }
    worst
}

// ============================================================================
// Demapper reference
// ============================================================================

fn label_bit(index: usize, p: usize, m: usize) -> u8 {
    ((index >> (m - 1 - p)) & 1) as u8
}

/// Point metric with bit `p` excluded from the a priori term.
fn point_metric(y: Complex64, w: (f64, f64), s: Complex64, apr: &[f64], j: usize, p: usize) -> f64 {
    let m = apr.len();
    let dist = w.0 * (y.re - s.re).powi(2) + w.1 * (y.im - s.im).powi(2);
    let prior: f64 = (0..m)
        .filter(|&i| i != p)
        .map(|i| label_bit(j, i, m) as f64 * apr[i])
        .sum();
    dist - prior
}

/// Max-log extrinsic LLRs, `ln P(1)/P(0)`, by direct evaluation.
pub fn naive_demap(y: Complex64, w: (f64, f64), points: &[Complex64], apr: &[f64]) -> Vec<f64> {
    let m = apr.len();
    (0..m)
        .map(|p| {
            let mut min = [f64::INFINITY; 2];
            for (j, &s) in points.iter().enumerate() {
                let v = point_metric(y, w, s, apr, j, p);
                let slot = &mut min[label_bit(j, p, m) as usize];
                *slot = slot.min(v);
            }
            min[0] - min[1]
        })
        .collect()
}

/// Exact (log-sum-exp) extrinsic LLRs.
pub fn exact_demap(y: Complex64, w: (f64, f64), points: &[Complex64], apr: &[f64]) -> Vec<f64> {
    let m = apr.len();
    (0..m)
        .map(|p| {
            let mut terms: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
            for (j, &s) in points.iter().enumerate() {
                terms[label_bit(j, p, m) as usize].push(-point_metric(y, w, s, apr, j, p));
            }
            let lse = |v: &[f64]| {
                let top = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                top + v.iter().map(|x| (x - top).exp()).sum::<f64>().ln()
            };
            lse(&terms[1]) - lse(&terms[0])
        })
        .collect()
}

pub fn random_symbols(rng: &mut ChaCha8Rng, table: &ConstellationTable, n: usize) -> (Vec<DemapSymbol>, Vec<f64>) {
    let m = table.order_bits();
    let syms = (0..n)
        .map(|_| {
            let s = table.point(rng.random_range(0..table.size()));
            let noise = Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)) * 0.3;
            // occasionally erase one component
            let erase: u8 = rng.random_range(0..8);
            let wi = if erase == 0 { 0.0 } else { rng.random_range(0.1..20.0) };
            let wq = if erase == 1 { 0.0 } else { rng.random_range(0.1..20.0) };
            let y = s + noise;
            DemapSymbol {
                y: Complex64::new(if wi == 0.0 { 0.0 } else { y.re }, if wq == 0.0 { 0.0 } else { y.im }),
                w_i: wi,
                w_q: wq,
            }
        })
        .collect();
    let apr = (0..n * m).map(|_| 3.0 * rng.sample::<f64, _>(StandardNormal)).collect();
    (syms, apr)
}

/// Largest deviation between the frame demapper and direct evaluation.
pub fn demapper_deviation(m: usize, rotation: f64, n: usize, seed: u64) -> f64 {
    let table = ConstellationTable::new(m, rotation).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (syms, apr) = random_symbols(&mut rng, &table, n);
    let (out, _) = demap_frame(&syms, &table, &apr, DemapCase::Recompute, 1, None).unwrap();
    let mut worst: f64 = 0.0;
    for (q, s) in syms.iter().enumerate() {
        let want = naive_demap(s.y, (s.w_i, s.w_q), table.points(), &apr[q * m..(q + 1) * m]);
        for (a, b) in out[q * m..(q + 1) * m].iter().zip(&want) {
            worst = worst.max((a - b).abs());
        }
    }
    worst
}

// ============================================================================
// Mutual information of a consistent Gaussian LLR, by quadrature
// ============================================================================

/// `1 - E[log2(1 + exp(-L))]`, `L ~ N(s^2/2, s^2)`, composite Simpson.
pub fn j_quadrature(sigma: f64) -> f64 {
    if sigma == 0.0 {
        return 0.0;
    }
    let mu = sigma * sigma / 2.0;
    let (lo, hi) = (mu - 12.0 * sigma, mu + 12.0 * sigma);
    let n = 20_000;
    let h = (hi - lo) / n as f64;
    let f = |l: f64| {
        let pdf = (-(l - mu).powi(2) / (2.0 * sigma * sigma)).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt());
        // log2(1 + e^-l) without overflow
        let sp = if l > 0.0 { (-l).exp().ln_1p() } else { -l + l.exp().ln_1p() };
        pdf * sp / std::f64::consts::LN_2
    };
    let mut acc = f(lo) + f(hi);
    for i in 1..n {
        acc += f(lo + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    1.0 - acc * h / 3.0
}

// ============================================================================
// Structural checks
// ============================================================================

pub type Check = std::result::Result<(), String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Check {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

/// Spread property checked pair by pair.
pub fn spread_holds(fwd: &[usize], s: usize) -> bool {
    let n = fwd.len();
    (0..n).all(|i| (0..n).filter(|&j| j != i && i.abs_diff(j) <= s).all(|j| fwd[i].abs_diff(fwd[j]) >= s))
}

pub fn check_s_random() -> Check {
    use tbicm::interleaving::Permutation;
    for (n, seed) in [(64, 1), (300, 2), (1536, 3), (3072, 4)] {
        let p = Permutation::s_random(n, seed, 200).map_err(|e| format!("n={n}: {e}"))?;
        let s = ((n as f64 / 4.0).sqrt()).floor() as usize;
        ensure(p.spread() == s, || format!("n={n}: built with S={} not {s}", p.spread()))?;
        ensure(spread_holds(p.forward(), s), || format!("n={n}: spread {s} violated"))?;
        let again = Permutation::s_random(n, seed, 200).unwrap();
        ensure(again == p, || format!("n={n}: not deterministic"))?;
    }
    Ok(())
}

pub fn check_round_trips() -> Check {
    use tbicm::interleaving::{q_delay, q_undelay, Permutation, PuncturePattern};
    use tbicm::turbo::SymbolInterleaver;
    let mut rng = ChaCha8Rng::seed_from_u64(77);

    let p = Permutation::s_random(1000, 5, 200).map_err(|e| e.to_string())?;
    let x: Vec<f64> = (0..1000).map(|_| rng.sample(StandardNormal)).collect();
    let y = p.interleave(&x).unwrap();
    ensure(p.deinterleave(&y).unwrap() == x, || "bit interleaver round trip".into())?;
    ensure(y != x, || "bit interleaver is the identity".into())?;

    for k in [48, 384, 768] {
        let il = SymbolInterleaver::default_for(k).map_err(|e| e.to_string())?;
        let m: Vec<[f64; 4]> = (0..k).map(|_| std::array::from_fn(|_| rng.sample(StandardNormal))).collect();
        ensure(il.deinterleave_metrics(&il.interleave_metrics(&m)) == m, || format!("ARP metrics round trip, K={k}"))?;
        let pairs: Vec<[f64; 2]> = m.iter().map(|v| [v[0], v[1]]).collect();
        ensure(il.deinterleave_pairs(&il.interleave_pairs(&pairs)) == pairs, || format!("ARP pair round trip, K={k}"))?;
    }

    for pat in PuncturePattern::builtin() {
        let n_sym = 12 * pat.period();
        let mother: Vec<f64> = (0..6 * n_sym).map(|i| 1.0 + i as f64).collect();
        let kept = pat.puncture(&mother).unwrap();
        let expect = 2.0 * n_sym as f64 * pat.rate().den() as f64 / pat.rate().num() as f64;
        ensure(kept.len() as f64 == expect, || format!("rate {}: {} kept bits", pat.rate(), kept.len()))?;
        let back = pat.depuncture(&kept, n_sym).unwrap();
        for (i, (&b, &m)) in back.iter().zip(&mother).enumerate() {
            let ok = if pat.keeps(i % 6, i / 6) { b == m } else { b == 0.0 };
            ensure(ok, || format!("rate {}: depuncture mismatch at {i}", pat.rate()))?;
            if i % 6 < 2 {
                ensure(pat.keeps(i % 6, i / 6), || format!("rate {}: systematic bit punctured", pat.rate()))?;
            }
        }
    }

    let s: Vec<Complex64> = (0..257).map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))).collect();
    let d = q_delay(&s);
    ensure(q_undelay(&d) == s, || "component delay round trip".into())?;
    ensure(d[1].im == s[0].im && d[0].im == s[256].im, || "component delay direction".into())?;
    Ok(())
}

pub fn check_constellations() -> Check {
    for m in [2usize, 4, 6, 8] {
        let flat = ConstellationTable::new(m, 0.0).unwrap();
        let energy = flat.points().iter().map(|p| p.norm_sqr()).sum::<f64>() / flat.size() as f64;
        ensure((energy - 1.0).abs() < 1e-12, || format!("M={m}: mean energy {energy}"))?;
        let k = 2.0 * ((1usize << m) as f64 - 1.0) / 3.0;
        let step = 2.0 / k.sqrt();
        // axis neighbours: same on one axis, one grid step apart on the other
        let pts = flat.points();
        let mut pairs = 0;
        for i in 0..pts.len() {
            for j in i + 1..pts.len() {
                let (di, dq) = ((pts[i].re - pts[j].re).abs(), (pts[i].im - pts[j].im).abs());
                let adjacent = (di < 1e-9 && (dq - step).abs() < 1e-9) || (dq < 1e-9 && (di - step).abs() < 1e-9);
                if adjacent {
                    pairs += 1;
                    let diff = (i ^ j).count_ones();
                    ensure(diff == 1, || format!("M={m}: neighbours {i},{j} differ in {diff} bits"))?;
                }
            }
        }
        let side = 1usize << (m / 2);
        ensure(pairs == 2 * side * (side - 1), || format!("M={m}: {pairs} neighbour pairs"))?;
        let rot = ConstellationTable::new(m, 20.0).unwrap();
        let turn = Complex64::from_polar(1.0, 20f64.to_radians());
        for (a, b) in rot.points().iter().zip(flat.points()) {
            ensure((a - b * turn).norm() < 1e-12, || format!("M={m}: rotation"))?;
        }
        for p in 0..m {
            ensure(rot.subset(p, 0).len() == rot.size() / 2, || format!("M={m}: subset size"))?;
        }
    }
    Ok(())
}

pub fn link(m: tbicm::constellation::Modulation, rate: &str, bits: usize) -> tbicm::receiver::Link {
    let cfg = tbicm::receiver::LinkConfig::new(m, rate.parse().unwrap(), bits);
    tbicm::receiver::Link::new(cfg).unwrap()
}

pub fn check_iteration_counters() -> Check {
    use tbicm::constellation::Modulation;
    use tbicm::receiver::Schedule;
    let l = link(Modulation::Qam16, "1/2", 768);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (_, obs) = l.simulate_frame(6.0, &mut rng).unwrap();
    for (name, demaps, decs) in [
        ("6IDem", 6, 6),
        ("4IDem_2EIDec", 4, 6),
        ("5IDem_1EIDec", 5, 6),
        ("TBICM-SSD:6", 1, 6),
        ("1IDem_5EIDec", 1, 6),
        ("3IDem_5EIDec", 3, 8),
    ] {
        let s: Schedule = name.parse().unwrap();
        ensure(s.total_dec() == decs, || format!("{name}: planned {} iterations", s.total_dec()))?;
        let (_, stats) = l.receive(&obs, &s).map_err(|e| e.to_string())?;
        ensure(stats.demaps == demaps && stats.dec_iterations == decs, || {
            format!("{name}: ran {} demaps, {} iterations", stats.demaps, stats.dec_iterations)
        })?;
    }
    Ok(())
}

pub fn check_case_equivalence() -> Check {
    use tbicm::constellation::Modulation;
    use tbicm::demapper::FrameDemapper;
    use tbicm::receiver::{Link, LinkConfig, Schedule};
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for m in [2usize, 4, 6, 8] {
        let table = ConstellationTable::new(m, 7.0).unwrap();
        let (syms, _) = random_symbols(&mut rng, &table, 200);
        let mut a = FrameDemapper::new(&table, DemapCase::Recompute);
        let mut b = FrameDemapper::new(&table, DemapCase::StoreReuse);
        for _ in 0..4 {
            let apr: Vec<f64> = (0..200 * m).map(|_| 2.0 * rng.sample::<f64, _>(StandardNormal)).collect();
            let (x, y) = (a.demap(&syms, &apr).unwrap(), b.demap(&syms, &apr).unwrap());
            ensure(x == y, || format!("M={m}: CASE1 and CASE2 LLRs differ"))?;
        }
    }
    let mut cfg = LinkConfig::new(Modulation::Qam64, "2/3".parse().unwrap(), 1536);
    let l1 = Link::new(cfg.clone()).unwrap();
    cfg.demap_case = DemapCase::StoreReuse;
    let l2 = Link::new(cfg).unwrap();
    let s: Schedule = "6IDem".parse().unwrap();
    for _ in 0..3 {
        let (_, obs) = l1.simulate_frame(10.0, &mut rng).unwrap();
        ensure(l1.receive(&obs, &s).unwrap().0 == l2.receive(&obs, &s).unwrap().0, || {
            "receiver decisions differ between CASE1 and CASE2".into()
        })?;
    }
    Ok(())
}

/// Named structural checks.
pub fn structural_suite() -> Vec<(&'static str, Check)> {
    vec![
        ("S-random property", check_s_random()),
        ("round trips", check_round_trips()),
        ("constellations", check_constellations()),
        ("iteration counters", check_iteration_counters()),
        ("CASE1 = CASE2", check_case_equivalence()),
    ]
}
