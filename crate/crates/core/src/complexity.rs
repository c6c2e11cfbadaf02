//! Operation and memory-access cost model for the SISO demapper and the
//! duo-binary SISO decoder.
//!
//! Every functional unit is described by an inventory of fixed-point
//! operations with operand widths. Arithmetic is normalized to 2-input
//! 1-bit full adders (`Add(1,1)`), memory traffic to bits. The gain of
//! dropping two demapping iterations out of `n_it` then follows from the
//! per-symbol demapper and decoder costs.

use std::fmt;
use std::ops::{Add, AddAssign, Sub};

use crate::demapper::DemapCase;
use crate::error::{Error, Result};
use crate::interleaving::CodeRate;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OpKind {
    Add,
    Sub,
    Mul,
    Load,
    Store,
}

/// `count` operations of one kind. Memory operations use `n1` as word width.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OpCount {
    pub kind: OpKind,
    pub n1: u32,
    pub n2: u32,
    pub count: u64,
}

impl OpCount {
    pub fn add(count: u64, n1: u32, n2: u32) -> Self {
        Self { kind: OpKind::Add, n1, n2, count }
    }

    pub fn sub(count: u64, n1: u32, n2: u32) -> Self {
        Self { kind: OpKind::Sub, n1, n2, count }
    }

    pub fn mul(count: u64, n1: u32, n2: u32) -> Self {
        Self { kind: OpKind::Mul, n1, n2, count }
    }

    pub fn load(count: u64, bits: u32) -> Self {
        Self { kind: OpKind::Load, n1: bits, n2: 0, count }
    }

    pub fn store(count: u64, bits: u32) -> Self {
        Self { kind: OpKind::Store, n1: bits, n2: 0, count }
    }
}

/// Normalized cost: arithmetic in `Add(1,1)` units, memory traffic in bits.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CostTriple {
    pub arith: f64,
    pub load_bits: u64,
    pub store_bits: u64,
}

impl CostTriple {
    pub fn metric(&self, metric: Metric) -> f64 {
        match metric {
            Metric::Arith => self.arith,
            Metric::Load => self.load_bits as f64,
            Metric::Store => self.store_bits as f64,
        }
    }

    pub fn scaled(&self, k: u64) -> Self {
        Self {
            arith: self.arith * k as f64,
            load_bits: self.load_bits * k,
            store_bits: self.store_bits * k,
        }
    }
}

impl Add for CostTriple {
    type Output = Self;

    fn add(self, o: Self) -> Self {
        Self {
            arith: self.arith + o.arith,
            load_bits: self.load_bits + o.load_bits,
            store_bits: self.store_bits + o.store_bits,
        }
    }
}

impl AddAssign for CostTriple {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

/// Saturating on the memory fields; callers only remove what was added.
impl Sub for CostTriple {
    type Output = Self;

    fn sub(self, o: Self) -> Self {
        Self {
            arith: self.arith - o.arith,
            load_bits: self.load_bits.saturating_sub(o.load_bits),
            store_bits: self.store_bits.saturating_sub(o.store_bits),
        }
    }
}

impl std::iter::Sum for CostTriple {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::default(), Add::add)
    }
}

/// Cost of one inventory line. Operand widths are reordered so `n2 >= n1`.
pub fn normalize(op: &OpCount) -> CostTriple {
    let (n1, n2) = (op.n1.min(op.n2) as f64, op.n1.max(op.n2) as f64);
    let per_op = match op.kind {
        OpKind::Add => 0.5 * (n1 + n2 - 1.0),
        OpKind::Sub => 0.5 * (n1 + n2),
        OpKind::Mul => (n1 - 1.0) * (n2 - 1.0) + 1.0 - 0.5 * n1,
        OpKind::Load => {
            return CostTriple {
                load_bits: op.n1 as u64 * op.count,
                ..Default::default()
            }
        }
        OpKind::Store => {
            return CostTriple {
                store_bits: op.n1 as u64 * op.count,
                ..Default::default()
            }
        }
    };
    CostTriple {
        arith: per_op * op.count as f64,
        ..Default::default()
    }
}

pub fn normalize_all(ops: &[OpCount]) -> CostTriple {
    ops.iter().map(normalize).sum()
}

/// Rounds a nonnegative value to the nearest integer, halves up.
pub fn round_half_up(x: f64) -> u64 {
    (x + 0.5).floor() as u64
}

/// Fixed-point word widths the inventories are written in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BitWidths {
    /// Received I/Q sample.
    pub received: u32,
    /// Fading coefficient over noise variance.
    pub fading: u32,
    /// Constellation coordinate as loaded by the distance unit.
    pub constellation: u32,
    /// Squared distance term.
    pub distance_term: u32,
    /// Stored Euclidean distance.
    pub distance: u32,
    /// Demapper a priori / extrinsic LLR.
    pub demap_llr: u32,
    /// Full a priori label sum.
    pub apriori_sum: u32,
    /// Decoder channel LLR.
    pub channel_llr: u32,
    /// Branch, state and extrinsic metrics.
    pub metric: u32,
    /// Operand width of a max (compare) on metrics.
    pub compare: u32,
    /// Scaling factor.
    pub scaling: u32,
}

impl Default for BitWidths {
    fn default() -> Self {
        Self {
            received: 10,
            fading: 8,
            constellation: 8,
            distance_term: 18,
            distance: 19,
            demap_llr: 8,
            apriori_sum: 11,
            channel_llr: 5,
            metric: 10,
            compare: 9,
            scaling: 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DemapperUnit {
    Euclid,
    Apriori,
    MinFind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DecoderUnit {
    Branch,
    State,
    Extrinsic,
}

impl DemapperUnit {
    pub const ALL: [DemapperUnit; 3] = [DemapperUnit::Euclid, DemapperUnit::Apriori, DemapperUnit::MinFind];

    pub fn name(self) -> &'static str {
        match self {
            DemapperUnit::Euclid => "euclid",
            DemapperUnit::Apriori => "apriori",
            DemapperUnit::MinFind => "minfind",
        }
    }
}

impl DecoderUnit {
    pub const ALL: [DecoderUnit; 3] = [DecoderUnit::Branch, DecoderUnit::State, DecoderUnit::Extrinsic];

    pub fn name(self) -> &'static str {
        match self {
            DecoderUnit::Branch => "branch",
            DecoderUnit::State => "state",
            DecoderUnit::Extrinsic => "extrinsic",
        }
    }
}

fn check_order(m: u32) -> Result<()> {
    if matches!(m, 2 | 4 | 6 | 8) {
        Ok(())
    } else {
        Err(Error::Config(format!("modulation order must be 2, 4, 6 or 8 bits, got {m}")))
    }
}

/// Inventory per modulated symbol per demapping iteration.
pub fn demapper_unit_ops(m: u32, unit: DemapperUnit, w: &BitWidths) -> Result<Vec<OpCount>> {
    check_order(m)?;
    let points = 1u64 << m;
    let mm = m as u64;
    let ops = match unit {
        DemapperUnit::Euclid => vec![
            OpCount::add(points, w.distance_term, w.distance_term),
            OpCount::sub(2 * points, w.constellation, w.received),
            OpCount::mul(2 * points, w.fading, w.fading),
            OpCount::mul(2 * points, w.fading, w.received),
            OpCount::load(2, w.received),
            OpCount::load(1 + points, w.fading),
        ],
        DemapperUnit::Apriori if m == 2 => vec![
            OpCount::sub(mm * (points - 2), w.apriori_sum, w.distance),
            OpCount::load(mm, w.demap_llr),
            OpCount::load(points, m),
        ],
        DemapperUnit::Apriori => {
            let inner = points - 2;
            let half = round_half_up((m - 1) as f64 / 2.0);
            let quarter = round_half_up((m - 1) as f64 / 4.0);
            let eighth = round_half_up((m - 1) as f64 / 8.0);
            let l = w.demap_llr;
            vec![
                OpCount::add(inner * half, l, l),
                OpCount::add(inner * quarter, l + 1, l + 1),
                OpCount::add(inner * eighth, l + 2, l + 2),
                OpCount::sub(inner * mm, l, w.apriori_sum),
                OpCount::sub(inner * mm, w.apriori_sum, w.distance),
                OpCount::load(mm, l),
                OpCount::load(points, m),
            ]
        }
        DemapperUnit::MinFind => vec![
            OpCount::sub(mm, w.demap_llr, w.demap_llr),
            OpCount::sub(mm * points, w.demap_llr, w.distance),
            OpCount::store(mm, w.demap_llr),
        ],
    };
    Ok(ops)
}

/// Inventory per coded symbol per SISO per turbo iteration.
pub fn decoder_unit_ops(unit: DecoderUnit, w: &BitWidths) -> Vec<OpCount> {
    let (c, k, s) = (w.channel_llr, w.metric, w.compare);
    match unit {
        DecoderUnit::Branch => vec![
            OpCount::add(4, c, c),
            OpCount::add(38, c, k),
            OpCount::sub(4, c, c),
            OpCount::load(8, c),
            OpCount::load(6, k),
        ],
        DecoderUnit::State => vec![
            OpCount::add(64, k, k),
            OpCount::sub(48, s, s),
            OpCount::store(8, k),
        ],
        DecoderUnit::Extrinsic => vec![
            OpCount::add(32, k, k),
            OpCount::sub(32, s, s),
            OpCount::sub(9, k, k),
            OpCount::mul(3, w.scaling, k),
            OpCount::load(8, k),
            OpCount::store(5, k),
        ],
    }
}

/// Demapper cost per modulated symbol with every unit active.
pub fn demapper_full(m: u32, w: &BitWidths) -> Result<CostTriple> {
    let mut total = CostTriple::default();
    for unit in DemapperUnit::ALL {
        total += normalize_all(&demapper_unit_ops(m, unit, w)?);
    }
    Ok(total)
}

/// Cost per coded symbol of one turbo iteration, both SISO decoders.
pub fn decoder_iteration(w: &BitWidths) -> CostTriple {
    DecoderUnit::ALL
        .iter()
        .map(|&u| normalize_all(&decoder_unit_ops(u, w)))
        .sum::<CostTriple>()
        .scaled(2)
}

/// Demapper cost per modulated symbol at demapping iteration `iteration`
/// (counted from 1).
pub fn demapper_cost(m: u32, case: DemapCase, iteration: usize, w: &BitWidths) -> Result<CostTriple> {
    if iteration == 0 {
        return Err(Error::Config("demapping iterations are counted from 1".into()));
    }
    let full = demapper_full(m, w)?;
    let table = (1u64 << m) * w.distance as u64;
    Ok(match (case, iteration) {
        (DemapCase::Recompute, _) => full,
        (DemapCase::StoreReuse, 1) => CostTriple {
            store_bits: full.store_bits + table,
            ..full
        },
        (DemapCase::StoreReuse, _) => {
            let euclid = normalize_all(&demapper_unit_ops(m, DemapperUnit::Euclid, w)?);
            let reused = CostTriple {
                arith: euclid.arith,
                load_bits: euclid.load_bits,
                store_bits: 0,
            };
            CostTriple {
                load_bits: (full - reused).load_bits + table,
                ..full - reused
            }
        }
    })
}

/// Duo-binary coded symbols per modulated symbol, `M * R_c / 2`.
pub fn coded_per_modulated(m: u32, rate: CodeRate) -> Result<f64> {
    check_order(m)?;
    let r = rate.value();
    if !(r > 0.0 && r <= 1.0) {
        return Err(Error::Config(format!("code rate {rate} outside (0, 1]")));
    }
    Ok(m as f64 * r / 2.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Metric {
    Arith,
    Load,
    Store,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::Arith, Metric::Load, Metric::Store];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Arith => "arith",
            Metric::Load => "load",
            Metric::Store => "store",
        }
    }
}

pub fn case_name(case: DemapCase) -> &'static str {
    match case {
        DemapCase::Recompute => "CASE1",
        DemapCase::StoreReuse => "CASE2",
    }
}

pub fn parse_case(s: &str) -> Result<DemapCase> {
    match s.to_ascii_uppercase().as_str() {
        "CASE1" | "1" => Ok(DemapCase::Recompute),
        "CASE2" | "2" => Ok(DemapCase::StoreReuse),
        _ => Err(Error::Config(format!("unknown case '{s}', expected CASE1 or CASE2"))),
    }
}

/// Fractional reduction per metric from dropping two demapping iterations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainResult {
    pub m: u32,
    pub rate: CodeRate,
    pub n_it: usize,
    pub case: DemapCase,
    pub arith: f64,
    pub load: f64,
    pub store: f64,
}

impl GainResult {
    pub fn metric(&self, metric: Metric) -> f64 {
        match metric {
            Metric::Arith => self.arith,
            Metric::Load => self.load,
            Metric::Store => self.store,
        }
    }
}

/// Gain from explicit per-symbol costs: `first` and `later` demapper
/// iterations, `decoder` per turbo iteration, `ratio` coded per modulated
/// symbol. The two dropped iterations are later-type.
pub fn gain_from_costs(first: f64, later: f64, decoder: f64, n_it: usize, ratio: f64) -> f64 {
    let n = n_it as f64;
    let demap = first + (n - 1.0) * later;
    2.0 * later / (demap + n * decoder * ratio)
}

pub fn gain(m: u32, rate: CodeRate, n_it: usize, case: DemapCase, w: &BitWidths) -> Result<GainResult> {
    if n_it < 3 {
        return Err(Error::Config(format!(
            "need at least 3 iterations to remove two demapping iterations, got {n_it}"
        )));
    }
    let ratio = coded_per_modulated(m, rate)?;
    let first = demapper_cost(m, case, 1, w)?;
    let later = demapper_cost(m, case, 2, w)?;
    let dec = decoder_iteration(w);
    let g = |metric| gain_from_costs(first.metric(metric), later.metric(metric), dec.metric(metric), n_it, ratio);
    Ok(GainResult {
        m,
        rate,
        n_it,
        case,
        arith: g(Metric::Arith),
        load: g(Metric::Load),
        store: g(Metric::Store),
    })
}

/// One row of the normalized per-unit table (`m` is 0 for decoder units).
#[derive(Debug, Clone, PartialEq)]
pub struct UnitRow {
    pub unit: &'static str,
    pub m: u32,
    pub cost: CostTriple,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComplexityReport {
    pub gains: Vec<GainResult>,
    pub units: Vec<UnitRow>,
}

pub const ORDERS: [u32; 4] = [2, 4, 6, 8];

/// Gain table over every modulation order, the given rates and cases, plus
/// the normalized unit table.
pub fn emit_tables(n_it: usize, rates: &[CodeRate], cases: &[DemapCase], w: &BitWidths) -> Result<ComplexityReport> {
    let mut gains = Vec::new();
    for &case in cases {
        for &rate in rates {
            for m in ORDERS {
                gains.push(gain(m, rate, n_it, case, w)?);
            }
        }
    }
    let mut units = Vec::new();
    for m in ORDERS {
        for u in DemapperUnit::ALL {
            units.push(UnitRow {
                unit: u.name(),
                m,
                cost: normalize_all(&demapper_unit_ops(m, u, w)?),
            });
        }
    }
    for u in DecoderUnit::ALL {
        units.push(UnitRow {
            unit: u.name(),
            m: 0,
            cost: normalize_all(&decoder_unit_ops(u, w)),
        });
    }
    Ok(ComplexityReport { gains, units })
}

impl ComplexityReport {
    /// `M,rate,case,metric,gain_fraction`
    pub fn gains_csv(&self) -> String {
        let mut s = String::from("M,rate,case,metric,gain_fraction\n");
        for g in &self.gains {
            for metric in Metric::ALL {
                s.push_str(&format!(
                    "{},{},{},{},{:.6}\n",
                    g.m,
                    g.rate,
                    case_name(g.case),
                    metric.name(),
                    g.metric(metric)
                ));
            }
        }
        s
    }

    /// `unit,M,arith,load_bits,store_bits`
    pub fn units_csv(&self) -> String {
        let mut s = String::from("unit,M,arith,load_bits,store_bits\n");
        for r in &self.units {
            s.push_str(&format!(
                "{},{},{},{},{}\n",
                r.unit, r.m, r.cost.arith, r.cost.load_bits, r.cost.store_bits
            ));
        }
        s
    }
}

impl fmt::Display for ComplexityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<6} {:>5} {:>6} {:>8} {:>8} {:>8}", "case", "rate", "M", "arith%", "load%", "store%")?;
        for g in &self.gains {
            writeln!(
                f,
                "{:<6} {:>5} {:>6} {:>8.1} {:>8.1} {:>8.1}",
                case_name(g.case),
                g.rate.to_string(),
                g.m,
                100.0 * g.arith,
                100.0 * g.load,
                100.0 * g.store
            )?;
        }
        Ok(())
    }
}
