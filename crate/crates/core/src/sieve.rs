//! Segmented sieve of Eratosthenes over odd numbers.
//!
//! Each segment `[lo, hi)` is sieved into a bitset holding one bit per odd
//! integer, so a default segment of 2^22 integers occupies 256 KiB. Base
//! primes up to `sqrt(limit)` are computed once by [`Sieve::new`] and shared
//! read-only by every segment, which makes a `Sieve` safe to use from many
//! threads at once.

use rayon::prelude::*;
use thiserror::Error;

/// Default number of integers covered by one segment.
pub const DEFAULT_SEGMENT_SIZE: u64 = 1 << 22;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SieveError {
    #[error("invalid range [{lo}, {hi}): need 2 <= lo < hi")]
    InvalidRange { lo: u64, hi: u64 },
    #[error("segment [{lo}, {hi}) is wider than the configured segment size {segment_size}")]
    SegmentTooWide { lo: u64, hi: u64, segment_size: u64 },
    #[error("segment [{lo}, {hi}) exceeds the sieve limit {limit}")]
    BeyondLimit { lo: u64, hi: u64, limit: u64 },
    #[error("segment size must be even and at least 64, got {0}")]
    BadSegmentSize(u64),
}

/// The primes in a half-open interval `[lo, hi)`, ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segment {
    pub lo: u64,
    pub hi: u64,
    pub primes: Vec<u64>,
}

/// Shared, immutable sieving state for all primes up to `limit`.
#[derive(Debug, Clone)]
pub struct Sieve {
    limit: u64,
    segment_size: u64,
    base_primes: Vec<u64>,
}

impl Sieve {
    /// Prepare to sieve every integer up to and including `limit`.
    pub fn new(limit: u64) -> Self {
        Self::with_segment_size(limit, DEFAULT_SEGMENT_SIZE).expect("default segment size is valid")
    }

    pub fn with_segment_size(limit: u64, segment_size: u64) -> Result<Self, SieveError> {
        if segment_size < 64 || !segment_size.is_multiple_of(2) {
            return Err(SieveError::BadSegmentSize(segment_size));
        }
        let base_primes = small_primes(isqrt(limit));
        Ok(Self { limit, segment_size, base_primes })
    }

    pub fn limit(&self) -> u64 {
        self.limit
    }

    pub fn segment_size(&self) -> u64 {
        self.segment_size
    }

    /// Sieve `[lo, hi)`; `hi - 1` must not exceed the limit this sieve was built for.
    pub fn segment(&self, lo: u64, hi: u64) -> Result<Segment, SieveError> {
        if lo < 2 || lo >= hi {
            return Err(SieveError::InvalidRange { lo, hi });
        }
        if hi - lo > self.segment_size {
            return Err(SieveError::SegmentTooWide { lo, hi, segment_size: self.segment_size });
        }
        if hi - 1 > self.limit {
            return Err(SieveError::BeyondLimit { lo, hi, limit: self.limit });
        }
        Ok(Segment { lo, hi, primes: self.sieve_odd(lo, hi) })
    }

    fn sieve_odd(&self, lo: u64, hi: u64) -> Vec<u64> {
        let mut primes = Vec::new();
        if lo <= 2 && 2 < hi {
            primes.push(2);
        }
        let first = lo | 1;
        if first >= hi {
            return primes;
        }
        // bit i stands for first + 2i
        let count = (hi - first).div_ceil(2);
        let mut bits = vec![0u64; count.div_ceil(64) as usize];

        for &p in self.base_primes.iter().skip(1) {
            let sq = p * p;
            if sq >= hi {
                break;
            }
            let mut start = if sq >= first { sq } else { first.div_ceil(p) * p };
            if start % 2 == 0 {
                start += p;
            }
            let mut i = (start - first) / 2;
            while i < count {
                bits[(i >> 6) as usize] |= 1u64 << (i & 63);
                i += p;
            }
        }

        primes.reserve((count as f64 / (hi as f64).ln().max(1.0) * 1.2) as usize);
        for (w, &word) in bits.iter().enumerate() {
            let mut free = !word;
            while free != 0 {
                let bit = free.trailing_zeros() as u64;
                let i = (w as u64) * 64 + bit;
                if i >= count {
                    break;
                }
                primes.push(first + 2 * i);
                free &= free - 1;
            }
        }
        primes
    }

    /// Segment boundaries covering `[2, limit]`.
    pub fn segment_bounds(&self) -> Vec<(u64, u64)> {
        let mut out = Vec::new();
        if self.limit < 2 {
            return out;
        }
        let end = self.limit + 1;
        let mut lo = 2;
        while lo < end {
            let hi = end.min(lo.saturating_add(self.segment_size));
            out.push((lo, hi));
            lo = hi;
        }
        out
    }

    /// Iterate all primes up to the limit in ascending order.
    pub fn primes(&self) -> PrimeStream<'_> {
        PrimeStream { sieve: self, bounds: self.segment_bounds().into_iter(), current: Vec::new().into_iter() }
    }

    /// Map every segment with `map` on up to `workers` threads and hand the
    /// results to `fold` in ascending segment order.
    ///
    /// `fold` always runs on the calling thread, so the reduction is identical
    /// regardless of the worker count.
    pub fn map_segments_ordered<T, M, F>(&self, workers: usize, map: M, mut fold: F)
    where
        T: Send,
        M: Fn(Segment) -> T + Sync,
        F: FnMut(T),
    {
        let bounds = self.segment_bounds();
        let workers = workers.max(1);
        let sieve_one = |&(lo, hi): &(u64, u64)| map(Segment { lo, hi, primes: self.sieve_odd(lo, hi) });
        if workers == 1 {
            bounds.iter().map(sieve_one).for_each(fold);
            return;
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .expect("failed to build sieve thread pool");
        for batch in bounds.chunks(workers * 2) {
            let results: Vec<T> = pool.install(|| batch.par_iter().map(sieve_one).collect());
            results.into_iter().for_each(&mut fold);
        }
    }
}

/// Ascending stream of primes produced segment by segment.
pub struct PrimeStream<'a> {
    sieve: &'a Sieve,
    bounds: std::vec::IntoIter<(u64, u64)>,
    current: std::vec::IntoIter<u64>,
}

impl Iterator for PrimeStream<'_> {
    type Item = u64;

    fn next(&mut self) -> Option<u64> {
        loop {
            if let Some(p) = self.current.next() {
                return Some(p);
            }
            let (lo, hi) = self.bounds.next()?;
            self.current = self.sieve.sieve_odd(lo, hi).into_iter();
        }
    }
}

/// Sieve a single segment `[lo, hi)` with the default segment size.
pub fn sieve_segment(lo: u64, hi: u64) -> Result<Segment, SieveError> {
    if lo < 2 || lo >= hi {
        return Err(SieveError::InvalidRange { lo, hi });
    }
    Sieve::new(hi - 1).segment(lo, hi)
}

/// All primes `<= limit`, ascending. Empty when `limit < 2`.
pub fn prime_stream(limit: u64) -> impl Iterator<Item = u64> {
    let sieve = Sieve::new(limit);
    let bounds = sieve.segment_bounds();
    bounds.into_iter().flat_map(move |(lo, hi)| sieve.sieve_odd(lo, hi))
}

/// Number of primes `<= limit`.
pub fn prime_count(limit: u64) -> u64 {
    let sieve = Sieve::new(limit);
    let mut total = 0u64;
    sieve.map_segments_ordered(1, |seg| seg.primes.len() as u64, |n| total += n);
    total
}

/// Plain byte-per-number sieve for the base primes.
fn small_primes(limit: u64) -> Vec<u64> {
    if limit < 2 {
        return Vec::new();
    }
    let n = limit as usize;
    let mut composite = vec![false; n + 1];
    let mut out = Vec::new();
    for i in 2..=n {
        if composite[i] {
            continue;
        }
        out.push(i as u64);
        let mut j = i * i;
        while j <= n {
            composite[j] = true;
            j += i;
        }
    }
    out
}

pub(crate) fn isqrt(n: u64) -> u64 {
    let mut r = (n as f64).sqrt() as u64;
    while r.checked_mul(r).is_none_or(|sq| sq > n) {
        r -= 1;
    }
    while (r + 1).checked_mul(r + 1).is_some_and(|sq| sq <= n) {
        r += 1;
    }
    r
}
