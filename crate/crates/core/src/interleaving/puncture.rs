use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Mother-code bits per duo-binary symbol: A, B, Y1, W1, Y2, W2.
pub const MOTHER_BITS_PER_SYMBOL: usize = 6;

const STREAM_NAMES: [&str; MOTHER_BITS_PER_SYMBOL] = ["A", "B", "Y1", "W1", "Y2", "W2"];

const BUILTIN_PATTERNS: &str = include_str!("../../data/puncture_patterns.txt");

/// Code rate as a reduced fraction of information bits over coded bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CodeRate {
    num: u32,
    den: u32,
}

fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

impl CodeRate {
    pub fn new(num: u32, den: u32) -> Result<Self> {
        if num == 0 || den == 0 || num > den {
            return Err(Error::Config(format!("invalid code rate {num}/{den}")));
        }
        let g = gcd(num, den);
        Ok(Self {
            num: num / g,
            den: den / g,
        })
    }

    pub fn num(self) -> u32 {
        self.num
    }

    pub fn den(self) -> u32 {
        self.den
    }

    pub fn value(self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

impl fmt::Display for CodeRate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

impl FromStr for CodeRate {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (n, d) = s
            .trim()
            .split_once('/')
            .ok_or_else(|| Error::Parse(format!("code rate '{s}' is not of the form n/d")))?;
        let parse = |t: &str| {
            t.trim()
                .parse::<u32>()
                .map_err(|e| Error::Parse(format!("code rate '{s}': {e}")))
        };
        CodeRate::new(parse(n)?, parse(d)?)
    }
}

/// Periodic puncturing of the six mother-code bit streams.
///
/// Codewords are laid out symbol-major: `[A B Y1 W1 Y2 W2]` for symbol 0,
/// then symbol 1, and so on. Puncturing keeps the masked bits in that order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PuncturePattern {
    rate: CodeRate,
    period: usize,
    keep: [Vec<bool>; MOTHER_BITS_PER_SYMBOL],
    /// Offsets of kept bits inside one period of `period * 6` mother bits.
    kept_offsets: Vec<usize>,
}

impl PuncturePattern {
    pub fn new(rate: CodeRate, keep: [Vec<bool>; MOTHER_BITS_PER_SYMBOL]) -> Result<Self> {
        let period = keep[0].len();
        if period == 0 || keep.iter().any(|m| m.len() != period) {
            return Err(Error::Config(format!("rate {rate}: masks must share a nonzero period")));
        }
        if !keep[0].iter().chain(&keep[1]).all(|&k| k) {
            return Err(Error::Config(format!("rate {rate}: systematic bits may not be punctured")));
        }
        let kept_offsets: Vec<usize> = (0..period)
            .flat_map(|t| (0..MOTHER_BITS_PER_SYMBOL).map(move |s| (t, s)))
            .filter(|&(t, s)| keep[s][t])
            .map(|(t, s)| t * MOTHER_BITS_PER_SYMBOL + s)
            .collect();
        // 2 info bits per symbol; kept bits per period must equal 2 * period / rate
        if kept_offsets.len() as u64 * rate.num() as u64 != 2 * period as u64 * rate.den() as u64 {
            return Err(Error::Config(format!(
                "rate {rate}: pattern keeps {} of {} mother bits per period, inconsistent with the rate",
                kept_offsets.len(),
                period * MOTHER_BITS_PER_SYMBOL
            )));
        }
        Ok(Self {
            rate,
            period,
            keep,
            kept_offsets,
        })
    }

    /// Pattern from the built-in table.
    pub fn for_rate(rate: CodeRate) -> Result<Self> {
        Self::table_from_text(BUILTIN_PATTERNS)?
            .into_iter()
            .find(|p| p.rate == rate)
            .ok_or_else(|| Error::Config(format!("unsupported code rate {rate}")))
    }

    /// All patterns of the built-in table.
    pub fn builtin() -> Vec<Self> {
        Self::table_from_text(BUILTIN_PATTERNS).expect("built-in puncture table is valid")
    }

    /// Parses a whitespace-separated table: `rate period mA mB mY1 mW1 mY2 mW2`.
    pub fn table_from_text(text: &str) -> Result<Vec<Self>> {
        text.lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(|line| {
                let cols: Vec<&str> = line.split_whitespace().collect();
                if cols.len() != 2 + MOTHER_BITS_PER_SYMBOL {
                    return Err(Error::Parse(format!("puncture table row '{line}' needs 8 columns")));
                }
                let rate: CodeRate = cols[0].parse()?;
                let period: usize = cols[1]
                    .parse()
                    .map_err(|e| Error::Parse(format!("puncture period '{}': {e}", cols[1])))?;
                let mut keep: [Vec<bool>; MOTHER_BITS_PER_SYMBOL] = Default::default();
                for (mask, col) in keep.iter_mut().zip(&cols[2..]) {
                    *mask = parse_mask(col)?;
                    if mask.len() != period {
                        return Err(Error::Parse(format!(
                            "mask '{col}' does not match period {period} in row '{line}'"
                        )));
                    }
                }
                Self::new(rate, keep)
            })
            .collect()
    }

    /// One mask per line, `STREAM mask`, after a `rate period` header line.
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.rate, self.period);
        for (name, mask) in STREAM_NAMES.iter().zip(&self.keep) {
            let bits: String = mask.iter().map(|&k| if k { '1' } else { '0' }).collect();
            out.push_str(&format!("{name} {bits}\n"));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'));
        let header = lines.next().ok_or_else(|| Error::Parse("empty puncture pattern".into()))?;
        let (rate, _) = header
            .split_once(char::is_whitespace)
            .ok_or_else(|| Error::Parse(format!("bad pattern header '{header}'")))?;
        let rate: CodeRate = rate.parse()?;
        let mut keep: [Vec<bool>; MOTHER_BITS_PER_SYMBOL] = Default::default();
        for (i, name) in STREAM_NAMES.iter().enumerate() {
            let line = lines
                .next()
                .ok_or_else(|| Error::Parse(format!("missing mask for stream {name}")))?;
            let (tag, mask) = line
                .split_once(char::is_whitespace)
                .ok_or_else(|| Error::Parse(format!("bad mask line '{line}'")))?;
            if tag != *name {
                return Err(Error::Parse(format!("expected stream {name}, found {tag}")));
            }
            keep[i] = parse_mask(mask.trim())?;
        }
        Self::new(rate, keep)
    }

    pub fn rate(&self) -> CodeRate {
        self.rate
    }

    /// Period in coded symbols.
    pub fn period(&self) -> usize {
        self.period
    }

    pub fn keeps(&self, stream: usize, symbol: usize) -> bool {
        self.keep[stream][symbol % self.period]
    }

    /// Transmitted bits for a frame of `n_symbols` duo-binary symbols.
    pub fn punctured_len(&self, n_symbols: usize) -> Result<usize> {
        if !n_symbols.is_multiple_of(self.period) {
            return Err(Error::FrameFormat(format!(
                "{n_symbols} coded symbols is not a multiple of the puncturing period {} (rate {})",
                self.period, self.rate
            )));
        }
        Ok(n_symbols / self.period * self.kept_offsets.len())
    }

    pub fn puncture<T: Copy>(&self, codeword: &[T]) -> Result<Vec<T>> {
        let block = self.period * MOTHER_BITS_PER_SYMBOL;
        if !codeword.len().is_multiple_of(block) {
            return Err(Error::FrameFormat(format!(
                "codeword of {} bits is not a multiple of {block} (period {} x {MOTHER_BITS_PER_SYMBOL})",
                codeword.len(),
                self.period
            )));
        }
        Ok(codeword
            .chunks_exact(block)
            .flat_map(|chunk| self.kept_offsets.iter().map(move |&o| chunk[o]))
            .collect())
    }

    /// Re-expands received values to the mother length, `T::default()` at punctured positions.
    pub fn depuncture<T: Copy + Default>(&self, kept: &[T], n_symbols: usize) -> Result<Vec<T>> {
        let expected = self.punctured_len(n_symbols)?;
        if kept.len() != expected {
            return Err(Error::FrameFormat(format!(
                "{} received values, expected {expected} for {n_symbols} symbols at rate {}",
                kept.len(),
                self.rate
            )));
        }
        let block = self.period * MOTHER_BITS_PER_SYMBOL;
        let mut out = vec![T::default(); n_symbols * MOTHER_BITS_PER_SYMBOL];
        for (chunk, vals) in out
            .chunks_exact_mut(block)
            .zip(kept.chunks_exact(self.kept_offsets.len()))
        {
            for (&o, &v) in self.kept_offsets.iter().zip(vals) {
                chunk[o] = v;
            }
        }
        Ok(out)
    }
}

fn parse_mask(s: &str) -> Result<Vec<bool>> {
    s.chars()
        .map(|c| match c {
            '1' => Ok(true),
            '0' => Ok(false),
            _ => Err(Error::Parse(format!("mask '{s}' must contain only 0 and 1"))),
        })
        .collect()
}
