use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Index permutation used as an interleaver.
///
/// Interleaving sends input position `i` to output position `fwd[i]`;
/// deinterleaving undoes it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Permutation {
    fwd: Vec<usize>,
    inv: Vec<usize>,
    spread: usize,
}

/// Tries to append at position `fwd.len()` by exchanging a remaining
/// candidate with an earlier entry. Returns the pool index consumed.
fn repair(fwd: &mut Vec<usize>, pool: &[usize], s: usize) -> Option<usize> {
    let i = fwd.len();
    let tail_ok = |v: usize, fwd: &[usize]| fwd[i.saturating_sub(s)..i].iter().all(|&w| v.abs_diff(w) >= s);
    for (pi, &c) in pool.iter().enumerate() {
        for k in 0..i.saturating_sub(s) {
            let old = fwd[k];
            if !tail_ok(old, fwd) {
                continue;
            }
            let lo = k.saturating_sub(s);
            let hi = (k + s + 1).min(i);
            if (lo..hi).all(|t| t == k || c.abs_diff(fwd[t]) >= s) {
                fwd[k] = c;
                fwd.push(old);
                return Some(pi);
            }
        }
    }
    None
}

impl Permutation {
    /// Wraps an explicit forward map after checking it is a bijection.
    pub fn from_forward(fwd: Vec<usize>) -> Result<Self> {
        let mut perm = Self::checked(fwd, 0)?;
        perm.spread = perm.measured_spread();
        Ok(perm)
    }

    fn checked(fwd: Vec<usize>, spread: usize) -> Result<Self> {
        let n = fwd.len();
        let mut inv = vec![usize::MAX; n];
        for (i, &f) in fwd.iter().enumerate() {
            if f >= n || inv[f] != usize::MAX {
                return Err(Error::Config(format!(
                    "index map is not a permutation of [0, {n}) (entry {i} -> {f})"
                )));
            }
            inv[f] = i;
        }
        Ok(Self { fwd, inv, spread })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            fwd: (0..n).collect(),
            inv: (0..n).collect(),
            spread: n.min(1),
        }
    }

    /// S-random interleaver with the nominal spread `S = floor(sqrt(n/4))`.
    ///
    /// Deterministic in `seed`. Fails with [`Error::RetryExhausted`] if no
    /// permutation is found within `max_restarts` restarts.
    pub fn s_random(n: usize, seed: u64, max_restarts: usize) -> Result<Self> {
        if n < 4 {
            return Err(Error::Config(format!("S-random interleaver needs n >= 4, got {n}")));
        }
        Self::s_random_with_spread(n, Self::nominal_spread(n), seed, max_restarts)
    }

    /// Nominal spread for a length-`n` S-random interleaver.
    pub fn nominal_spread(n: usize) -> usize {
        ((n as f64 / 4.0).sqrt().floor() as usize).max(1)
    }

    /// Like [`Permutation::s_random`] but lowers `S` by one each time the
    /// restart budget runs out.
    pub fn s_random_relaxed(n: usize, seed: u64, max_restarts: usize) -> Result<Self> {
        let mut s = Self::nominal_spread(n);
        loop {
            match Self::s_random_with_spread(n, s, seed, max_restarts) {
                Ok(p) => return Ok(p),
                Err(Error::RetryExhausted(_)) if s > 1 => {
                    log::warn!("S-random construction failed for n={n}, S={s}; retrying with S={}", s - 1);
                    s -= 1;
                }
                Err(e) => return Err(e),
            }
        }
    }

    /// Rejection construction: positions are filled in order, each with the
    /// first remaining candidate that keeps distance `>= s` to the previous
    /// `s` outputs. When none fits, an already placed value is moved to the
    /// end and replaced by a remaining candidate; if that fails too the
    /// construction restarts.
    pub fn s_random_with_spread(n: usize, s: usize, seed: u64, max_restarts: usize) -> Result<Self> {
        if n == 0 || s == 0 {
            return Err(Error::Config(format!("invalid S-random parameters n={n}, S={s}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..=max_restarts {
            let mut pool: Vec<usize> = (0..n).collect();
            pool.shuffle(&mut rng);
            let mut fwd: Vec<usize> = Vec::with_capacity(n);
            let mut dead_end = false;
            for i in 0..n {
                let window = &fwd[i.saturating_sub(s)..i];
                let pick = pool
                    .iter()
                    .position(|&c| window.iter().all(|&w| c.abs_diff(w) >= s));
                match pick {
                    Some(k) => fwd.push(pool.swap_remove(k)),
                    None => match repair(&mut fwd, &pool, s) {
                        Some(k) => {
                            pool.swap_remove(k);
                        }
                        None => {
                            dead_end = true;
                            break;
                        }
                    },
                }
            }
            if !dead_end {
                let perm = Self::checked(fwd, s)?;
                debug_assert!(perm.satisfies_spread(s));
                return Ok(perm);
            }
        }
        Err(Error::RetryExhausted(format!(
            "no S-random permutation with n={n}, S={s} after {max_restarts} restarts"
        )))
    }

    pub fn len(&self) -> usize {
        self.fwd.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fwd.is_empty()
    }

    /// Spread parameter the permutation was built (or verified) with.
    pub fn spread(&self) -> usize {
        self.spread
    }

    pub fn forward(&self) -> &[usize] {
        &self.fwd
    }

    pub fn inverse(&self) -> &[usize] {
        &self.inv
    }

    /// `|fwd(i) - fwd(j)| >= s` for all `i != j` with `|i - j| <= s`.
    pub fn satisfies_spread(&self, s: usize) -> bool {
        let n = self.fwd.len();
        (0..n).all(|i| {
            (i + 1..(i + s + 1).min(n)).all(|j| self.fwd[i].abs_diff(self.fwd[j]) >= s)
        })
    }

    /// Largest `s` for which [`Permutation::satisfies_spread`] holds.
    pub fn measured_spread(&self) -> usize {
        let mut s = 0;
        while s < self.fwd.len() && self.satisfies_spread(s + 1) {
            s += 1;
        }
        s
    }

    pub fn interleave<T: Copy + Default>(&self, x: &[T]) -> Result<Vec<T>> {
        self.check_len(x.len())?;
        let mut y = vec![T::default(); x.len()];
        for (i, &v) in x.iter().enumerate() {
            y[self.fwd[i]] = v;
        }
        Ok(y)
    }

    pub fn deinterleave<T: Copy>(&self, y: &[T]) -> Result<Vec<T>> {
        self.check_len(y.len())?;
        Ok(self.fwd.iter().map(|&f| y[f]).collect())
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.fwd.len() {
            return Err(Error::FrameFormat(format!(
                "sequence of length {len} for a permutation of length {}",
                self.fwd.len()
            )));
        }
        Ok(())
    }

    /// One forward index per line, preceded by a `# n=.. s=..` comment.
    pub fn to_text(&self) -> String {
        let mut out = format!("# n={} s={}\n", self.fwd.len(), self.spread);
        for f in &self.fwd {
            out.push_str(&f.to_string());
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let fwd = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(|l| {
                l.parse::<usize>()
                    .map_err(|e| Error::Parse(format!("bad permutation entry '{l}': {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_forward(fwd)
    }
}
