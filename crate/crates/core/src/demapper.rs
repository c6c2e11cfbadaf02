//! Max-Log-MAP soft demapper with a priori input for rotated constellations.
//!
//! Three stages per received symbol:
//!
//! * Euclidean distances `A_j = w_I (y_I - s_I,j)^2 + w_Q (y_Q - s_Q,j)^2`,
//! * a priori sums `B_p,j`, the LLRs of the label bits of point `j` that are
//!   set, bit `p` itself excluded,
//! * minimum finder `L_ext(p) = min_{j in X^p_0}(A_j - B_p,j) - min_{j in X^p_1}(A_j - B_p,j)`.
//!
//! LLRs are `ln P(1)/P(0)` throughout.

use crate::channel::DemapSymbol;
use crate::constellation::ConstellationTable;
use crate::error::{Error, Result};
use crate::Llr;

/// How Euclidean distances are obtained across demapping iterations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DemapCase {
    /// Recomputed at every demapping iteration.
    Recompute,
    /// Computed and stored at the first iteration, reloaded afterwards.
    StoreReuse,
}

/// Per-frame table of Euclidean distances, `2^M` per symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceCache {
    points: usize,
    values: Vec<f64>,
}

impl DistanceCache {
    pub fn points_per_symbol(&self) -> usize {
        self.points
    }

    pub fn symbols(&self) -> usize {
        self.values.len() / self.points
    }

    pub fn symbol(&self, q: usize) -> &[f64] {
        &self.values[q * self.points..(q + 1) * self.points]
    }
}

/// Fills `out[j]` with the weighted distance to every constellation point.
pub fn euclidean_distances(sym: &DemapSymbol, table: &ConstellationTable, out: &mut [f64]) {
    for (a, s) in out.iter_mut().zip(table.points()) {
        let di = sym.y.re - s.re;
        let dq = sym.y.im - s.im;
        *a = sym.w_i * di * di + sym.w_q * dq * dq;
    }
}

/// Fills `out[p * 2^M + j]` with `B_p,j`.
///
/// Label sums are shared: the sum for point `j` extends the sum of `j` with
/// its lowest set bit cleared by one addition. Bit `p` is then removed from
/// the points that have it set.
pub fn apriori_sums(apriori: &[Llr], table: &ConstellationTable, out: &mut [f64]) {
    let m = table.order_bits();
    let size = table.size();
    debug_assert_eq!(apriori.len(), m);
    let mut label_sum = vec![0.0; size];
    for j in 1..size {
        let t = j.trailing_zeros() as usize;
        label_sum[j] = label_sum[j & (j - 1)] + apriori[m - 1 - t];
    }
    for p in 0..m {
        let row = &mut out[p * size..(p + 1) * size];
        for (j, b) in row.iter_mut().enumerate() {
            *b = if table.label_bit(j, p) == 1 {
                label_sum[j] - apriori[p]
            } else {
                label_sum[j]
            };
        }
    }
}

/// QPSK special case: with two label bits, `B_p,j` is just the other bit's
/// LLR when that bit is set, so no sums are formed.
pub fn apriori_sums_qpsk(apriori: &[Llr], table: &ConstellationTable, out: &mut [f64]) {
    debug_assert_eq!(table.order_bits(), 2);
    for p in 0..2 {
        let other = 1 - p;
        for j in 0..4 {
            out[p * 4 + j] = if table.label_bit(j, other) == 1 { apriori[other] } else { 0.0 };
        }
    }
}

/// Minimum finder: extrinsic LLRs of the `M` label bits of one symbol.
pub fn demap_symbol(distances: &[f64], b: &[f64], table: &ConstellationTable, out: &mut [Llr]) {
    let m = table.order_bits();
    let size = table.size();
    for (p, l) in out.iter_mut().enumerate().take(m) {
        let row = &b[p * size..(p + 1) * size];
        let min_over = |value: u8| {
            table
                .subset(p, value)
                .iter()
                .map(|&j| distances[j] - row[j])
                .fold(f64::INFINITY, f64::min)
        };
        *l = min_over(0) - min_over(1);
    }
}

/// Demaps a frame.
///
/// `apriori` holds `M` LLRs per symbol (all zero on the first iteration).
/// With [`DemapCase::StoreReuse`], `iteration == 1` computes and returns the
/// distance cache and later iterations must pass it back in. Both cases give
/// identical LLRs.
pub fn demap_frame(
    symbols: &[DemapSymbol],
    table: &ConstellationTable,
    apriori: &[Llr],
    case: DemapCase,
    iteration: usize,
    cache: Option<&DistanceCache>,
) -> Result<(Vec<Llr>, Option<DistanceCache>)> {
    let m = table.order_bits();
    let size = table.size();
    if apriori.len() != m * symbols.len() {
        return Err(Error::FrameFormat(format!(
            "{} a priori LLRs for {} symbols of {m} bits",
            apriori.len(),
            symbols.len()
        )));
    }
    if iteration == 0 {
        return Err(Error::Contract("demapping iterations are counted from 1".into()));
    }
    let reuse = case == DemapCase::StoreReuse && iteration >= 2;
    if reuse {
        let c = cache.ok_or_else(|| {
            Error::Contract(format!("distance cache required at demapping iteration {iteration}"))
        })?;
        if c.points != size || c.symbols() != symbols.len() {
            return Err(Error::FrameFormat(format!(
                "distance cache holds {} x {} values, frame needs {} x {size}",
                c.symbols(),
                c.points,
                symbols.len()
            )));
        }
    }
    let store = case == DemapCase::StoreReuse && iteration == 1;

    let mut out = vec![0.0; m * symbols.len()];
    let mut stored = store.then(|| Vec::with_capacity(size * symbols.len()));
    let mut dist = vec![0.0; size];
    let mut b = vec![0.0; m * size];
    let qpsk = m == 2;
    for (q, sym) in symbols.iter().enumerate() {
        let a: &[f64] = if reuse {
            cache.expect("checked above").symbol(q)
        } else {
            euclidean_distances(sym, table, &mut dist);
            if let Some(s) = stored.as_mut() {
                s.extend_from_slice(&dist);
            }
            &dist
        };
        let apr = &apriori[q * m..(q + 1) * m];
        if qpsk {
            apriori_sums_qpsk(apr, table, &mut b);
        } else {
            apriori_sums(apr, table, &mut b);
        }
        demap_symbol(a, &b, table, &mut out[q * m..(q + 1) * m]);
    }
    Ok((
        out,
        stored.map(|values| DistanceCache { points: size, values }),
    ))
}

/// Frame demapper that owns its distance cache and counts invocations.
#[derive(Debug, Clone)]
pub struct FrameDemapper<'a> {
    table: &'a ConstellationTable,
    case: DemapCase,
    cache: Option<DistanceCache>,
    invocations: usize,
}

impl<'a> FrameDemapper<'a> {
    pub fn new(table: &'a ConstellationTable, case: DemapCase) -> Self {
        Self {
            table,
            case,
            cache: None,
            invocations: 0,
        }
    }

    pub fn demap(&mut self, symbols: &[DemapSymbol], apriori: &[Llr]) -> Result<Vec<Llr>> {
        let (llrs, cache) = demap_frame(
            symbols,
            self.table,
            apriori,
            self.case,
            self.invocations + 1,
            self.cache.as_ref(),
        )?;
        if cache.is_some() {
            self.cache = cache;
        }
        self.invocations += 1;
        Ok(llrs)
    }

    pub fn invocations(&self) -> usize {
        self.invocations
    }
}
