//! Almost-regular-permutation interleaver over duo-binary couples.
//!
//! Two steps, as in the DVB-RCS / WiMax CTC interleaver: couples at odd
//! addresses have their two bits swapped, then position `j` of the
//! interleaved frame reads address
//!
//! ```text
//! j mod 4 = 0 : P0*j + 1
//! j mod 4 = 1 : P0*j + 1 + N/2 + P1
//! j mod 4 = 2 : P0*j + 1 + P2
//! j mod 4 = 3 : P0*j + 1 + N/2 + P3        (all mod N)
//! ```

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

const PARAM_TABLE: &str = include_str!("../../data/arp_params.txt");

/// Couples compared by the spread metric on each side.
const SPREAD_WINDOW: usize = 16;
const SEARCH_CANDIDATES: usize = 96;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ArpParams {
    pub p0: usize,
    pub p1: usize,
    pub p2: usize,
    pub p3: usize,
}

/// Symbol interleaver with per-position bit swap.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymbolInterleaver {
    params: ArpParams,
    /// Interleaved position `j` reads natural couple `addr[j]`.
    addr: Vec<usize>,
    swap: Vec<bool>,
}

/// Swaps the two bits of a couple-indexed quantity (`01 <-> 10`).
#[inline]
pub fn swap_couple<T: Copy>(v: [T; 4]) -> [T; 4] {
    [v[0], v[2], v[1], v[3]]
}

impl SymbolInterleaver {
    pub fn new(n: usize, params: ArpParams) -> Result<Self> {
        if n < 4 || !n.is_multiple_of(4) {
            return Err(Error::Config(format!(
                "ARP interleaver needs a couple count that is a positive multiple of 4, got {n}"
            )));
        }
        let addr: Vec<usize> = (0..n)
            .map(|j| {
                let off = match j % 4 {
                    0 => 0,
                    1 => n / 2 + params.p1,
                    2 => params.p2,
                    _ => n / 2 + params.p3,
                };
                (params.p0 * j + 1 + off) % n
            })
            .collect();
        let mut seen = vec![false; n];
        for &a in &addr {
            if std::mem::replace(&mut seen[a], true) {
                return Err(Error::Config(format!(
                    "ARP parameters {params:?} do not give a permutation of {n} couples"
                )));
            }
        }
        let swap = addr.iter().map(|&a| a % 2 == 1).collect();
        Ok(Self { params, addr, swap })
    }

    /// Parameters from the shipped table, or found by [`SymbolInterleaver::search`].
    pub fn default_for(n: usize) -> Result<Self> {
        match lookup_table(n)? {
            Some(p) => Self::new(n, p),
            None => Self::search(n),
        }
    }

    /// Deterministic random search maximizing the short-range spread.
    pub fn search(n: usize) -> Result<Self> {
        if n < 4 || !n.is_multiple_of(4) {
            return Err(Error::Config(format!(
                "ARP interleaver needs a couple count that is a positive multiple of 4, got {n}"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(n as u64);
        let root = (n as f64).sqrt();
        let lo = ((root / 2.0) as usize).max(1);
        let hi = ((2.0 * root) as usize + 8).min(n.max(2) - 1).max(lo + 1);
        let mut best: Option<(usize, Self)> = None;
        let mut valid = 0;
        for _ in 0..SEARCH_CANDIDATES * 20 {
            if valid == SEARCH_CANDIDATES {
                break;
            }
            let p0 = rng.random_range(lo..=hi) | 1;
            if gcd(p0, n) != 1 {
                continue;
            }
            let mut offset = || 4 * rng.random_range(0..n / 4);
            let params = ArpParams {
                p0,
                p1: offset(),
                p2: offset(),
                p3: offset(),
            };
            let Ok(il) = Self::new(n, params) else { continue };
            valid += 1;
            let spread = il.spread(SPREAD_WINDOW);
            if best.as_ref().is_none_or(|(s, _)| spread > *s) {
                best = Some((spread, il));
            }
        }
        best.map(|(_, il)| il)
            .ok_or_else(|| Error::Config(format!("no ARP parameters found for {n} couples")))
    }

    pub fn len(&self) -> usize {
        self.addr.len()
    }

    pub fn is_empty(&self) -> bool {
        self.addr.is_empty()
    }

    pub fn params(&self) -> ArpParams {
        self.params
    }

    pub fn address(&self, j: usize) -> usize {
        self.addr[j]
    }

    pub fn swaps(&self, j: usize) -> bool {
        self.swap[j]
    }

    /// Minimum of `|i - j| + |P(i) - P(j)|` (cyclic) over pairs closer than `window`.
    pub fn spread(&self, window: usize) -> usize {
        let n = self.addr.len();
        let cyc = |a: usize, b: usize| {
            let d = a.abs_diff(b);
            d.min(n - d)
        };
        let mut best = usize::MAX;
        for i in 0..n {
            for t in 1..=window.min(n / 2) {
                let j = (i + t) % n;
                best = best.min(t + cyc(self.addr[i], self.addr[j]));
            }
        }
        best
    }

    /// Interleaves couples given as `d = 2A + B` values.
    pub fn interleave_couples(&self, natural: &[u8]) -> Vec<u8> {
        self.addr
            .iter()
            .zip(&self.swap)
            .map(|(&a, &s)| {
                let d = natural[a];
                if s {
                    ((d & 1) << 1) | (d >> 1)
                } else {
                    d
                }
            })
            .collect()
    }

    /// Interleaves per-couple metrics indexed by couple value.
    pub fn interleave_metrics<T: Copy>(&self, natural: &[[T; 4]]) -> Vec<[T; 4]> {
        self.addr
            .iter()
            .zip(&self.swap)
            .map(|(&a, &s)| if s { swap_couple(natural[a]) } else { natural[a] })
            .collect()
    }

    pub fn deinterleave_metrics<T: Copy + Default>(&self, interleaved: &[[T; 4]]) -> Vec<[T; 4]> {
        let mut out = vec![[T::default(); 4]; interleaved.len()];
        for ((&a, &s), &v) in self.addr.iter().zip(&self.swap).zip(interleaved) {
            out[a] = if s { swap_couple(v) } else { v };
        }
        out
    }

    /// Interleaves per-couple bit pairs `[A, B]`.
    pub fn interleave_pairs<T: Copy>(&self, natural: &[[T; 2]]) -> Vec<[T; 2]> {
        self.addr
            .iter()
            .zip(&self.swap)
            .map(|(&a, &s)| {
                let [x, y] = natural[a];
                if s {
                    [y, x]
                } else {
                    [x, y]
                }
            })
            .collect()
    }

    pub fn deinterleave_pairs<T: Copy + Default>(&self, interleaved: &[[T; 2]]) -> Vec<[T; 2]> {
        let mut out = vec![[T::default(); 2]; interleaved.len()];
        for ((&a, &s), &[x, y]) in self.addr.iter().zip(&self.swap).zip(interleaved) {
            out[a] = if s { [y, x] } else { [x, y] };
        }
        out
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn lookup_table(n: usize) -> Result<Option<ArpParams>> {
    for line in PARAM_TABLE.lines().map(str::trim) {
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let v: Vec<usize> = line
            .split_whitespace()
            .map(|t| t.parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Parse(format!("ARP table row '{line}': {e}")))?;
        if v.len() != 5 {
            return Err(Error::Parse(format!("ARP table row '{line}' needs 5 columns")));
        }
        if v[0] == n {
            return Ok(Some(ArpParams {
                p0: v[1],
                p1: v[2],
                p2: v[3],
                p3: v[4],
            }));
        }
    }
    Ok(None)
}
