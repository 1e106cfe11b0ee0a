//! Binomials, subset enumeration and small integer helpers.

use num::{BigUint, One, Zero};

/// Exact binomial coefficient; zero when `k > n`.
pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}

/// Binomial coefficient as `u128`, `None` on overflow.
pub fn binomial_u128(n: u64, k: u64) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k as u128 {
        acc = acc.checked_mul(n as u128 - i)? / (i + 1);
    }
    Some(acc)
}

/// Binomial coefficient in floating point via log-gamma free products.
pub fn binomial_f64(n: u64, k: u64) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0f64;
    for i in 0..k {
        acc *= (n - i) as f64 / (i + 1) as f64;
    }
    acc
}

/// Iterator over all `k`-subsets of `{0..n}` as bitmasks, in increasing
/// numeric order (Gosper's hack). Requires `n <= 64`.
pub struct Combinations {
    next: Option<u64>,
    limit_bit: u32,
}

impl Combinations {
    pub fn new(n: usize, k: usize) -> Self {
        assert!(n <= 64, "at most 64 elements");
        let next = if k > n {
            None
        } else if k == 0 {
            Some(0)
        } else if k == 64 {
            Some(u64::MAX)
        } else {
            Some((1u64 << k) - 1)
        };
        Combinations {
            next,
            limit_bit: n as u32,
        }
    }
}

impl Iterator for Combinations {
    type Item = u64;

    fn next(&mut self) -> Option<u64> {
        let cur = self.next?;
        self.next = if cur == 0 {
            None
        } else {
            let c = cur & cur.wrapping_neg();
            let r = cur.wrapping_add(c);
            if r == 0 {
                None
            } else {
                let nxt = (((r ^ cur) >> 2) / c) | r;
                if self.limit_bit < 64 && nxt >> self.limit_bit != 0 {
                    None
                } else {
                    Some(nxt)
                }
            }
        };
        Some(cur)
    }
}

/// Uniformly random `k`-subset of the listed elements (partial Fisher-Yates).
pub fn sample_subset<R: rand::Rng + ?Sized>(rng: &mut R, elements: &[usize], k: usize) -> Vec<usize> {
    let mut pool = elements.to_vec();
    let k = k.min(pool.len());
    for i in 0..k {
        let j = rng.random_range(i..pool.len());
        pool.swap(i, j);
    }
    pool.truncate(k);
    pool
}
