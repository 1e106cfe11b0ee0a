//! Counting subsets of the tuple blocks by specification and type.

use num::{BigInt, BigRational, BigUint, One, Zero};

use super::Promise;
use crate::combinatorics::binomial;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::symmetry::{Specification, TypeMatrix};

/// Subsets of `A_{>=1}` whose type is exactly `ty`: per block, choose which
/// tuples host the `t`-subtuples and which `t` of each tuple's `s` indices.
pub fn count_by_type(promise: &Promise, ty: &TypeMatrix) -> Result<BigUint> {
    let k = promise.k;
    if ty.k() != k {
        return Err(Error::input("type and promise disagree on k"));
    }
    if (1..k).any(|t| ty.get(t, k) != 0) {
        return Ok(BigUint::zero());
    }
    let mut total = BigUint::one();
    for s in 1..k {
        let mut free = promise.get(s) as u64;
        for t in 1..k {
            let b = ty.get(t, s) as u64;
            if b == 0 {
                continue;
            }
            if t > s || b > free {
                return Ok(BigUint::zero());
            }
            total *= binomial(free, b) * binomial(s as u64, t as u64).pow(b as u32);
            free -= b;
        }
    }
    Ok(total)
}

/// Every type on `A_{>=1}` with the given row sums, in lexicographic order.
pub fn types_for_spec(promise: &Promise, spec: &Specification) -> Result<Vec<TypeMatrix>> {
    let k = promise.k;
    if spec.k() != k {
        return Err(Error::input("specification and promise disagree on k"));
    }
    let mut out = Vec::new();
    let mut used = vec![0usize; k];
    let mut cur = TypeMatrix::zero(k);
    fill_row(promise, spec, 1, &mut used, &mut cur, &mut out);
    Ok(out)
}

fn fill_row(
    promise: &Promise,
    spec: &Specification,
    t: usize,
    used: &mut [usize],
    cur: &mut TypeMatrix,
    out: &mut Vec<TypeMatrix>,
) {
    if t == promise.k {
        out.push(cur.clone());
        return;
    }
    distribute(promise, spec, t, t, spec.get(t), used, cur, out);
}

// Split the remaining `left` t-subtuples over columns s, s+1, ..., k-1.
#[allow(clippy::too_many_arguments)]
fn distribute(
    promise: &Promise,
    spec: &Specification,
    t: usize,
    s: usize,
    left: usize,
    used: &mut [usize],
    cur: &mut TypeMatrix,
    out: &mut Vec<TypeMatrix>,
) {
    let k = promise.k;
    if s == k {
        if left == 0 {
            fill_row(promise, spec, t + 1, used, cur, out);
        }
        return;
    }
    let room = promise.get(s) - used[s];
    for b in 0..=left.min(room) {
        cur.set(t, s, b);
        used[s] += b;
        distribute(promise, spec, t, s + 1, left - b, used, cur, out);
        used[s] -= b;
    }
    cur.set(t, s, 0);
}

/// Number of subsets of `A_{>=1}` satisfying `spec`, summed over types.
pub fn count_by_specification(promise: &Promise, spec: &Specification) -> Result<BigUint> {
    let mut total = BigUint::zero();
    for ty in types_for_spec(promise, spec)? {
        total += count_by_type(promise, &ty)?;
    }
    Ok(total)
}

/// All specifications of the given size for `k`, lexicographically.
pub fn specs_of_size(k: usize, size: usize) -> Vec<Specification> {
    fn rec(t: usize, k: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Specification>) {
        if t == k {
            if left == 0 {
                out.push(Specification(cur.clone()));
            }
            return;
        }
        for b in 0..=left / t {
            cur[t - 1] = b;
            rec(t + 1, k, left - b * t, cur, out);
        }
        cur[t - 1] = 0;
    }
    let mut out = Vec::new();
    if k >= 2 {
        rec(1, k, size, &mut vec![0; k - 1], &mut out);
    }
    out
}

/// Expected number of `t`-subtuples in a uniform `r`-subset of `A_{>=1}`:
/// `sum_s l_s C(s,t) C(n'-s, r-t) / C(n', r)`.
pub fn expected_subtuples(promise: &Promise, r: usize, t: usize) -> Result<BigRational> {
    let np = promise.n_prime();
    if t == 0 || t >= promise.k {
        return Err(Error::input(format!("t = {t} outside 1..{}", promise.k - 1)));
    }
    if r > np {
        return Err(Error::input(format!("r = {r} exceeds n' = {np}")));
    }
    if r < t {
        return Ok(BigRational::zero());
    }
    let mut num = BigUint::zero();
    for s in (t..promise.k).filter(|&s| promise.get(s) > 0) {
        num += BigUint::from(promise.get(s))
            * binomial(s as u64, t as u64)
            * binomial((np - s) as u64, (r - t) as u64);
    }
    Ok(BigRational::new(
        BigInt::from(num),
        BigInt::from(binomial(np as u64, r as u64)),
    ))
}

/// `count(l', spec) / count(l, spec)`.
pub fn tuple_count_ratio(base: &Promise, other: &Promise, spec: &Specification) -> Result<BigRational> {
    let den = count_by_specification(base, spec)?;
    if den.is_zero() {
        return Err(Error::Degenerate(format!("no subset of the base promise satisfies {spec}")));
    }
    let num = count_by_specification(other, spec)?;
    Ok(BigRational::new(BigInt::from(num), BigInt::from(den)))
}

/// Number of fresh `i`-subtuples a vertex can be extended with:
/// `sum_{s >= i} (l_s - z_s) C(s, i)` where `z_s` tuples of `A_s` are touched.
pub fn d_function(promise: &Promise, i: usize, z: &[usize]) -> Result<u64> {
    if i == 0 || i >= promise.k {
        return Err(Error::input(format!("subtuple size {i} outside 1..{}", promise.k - 1)));
    }
    if z.len() != promise.k - 1 {
        return Err(Error::input("usage vector has the wrong length"));
    }
    let mut total = 0u64;
    for s in i..promise.k {
        let (l, used) = (promise.get(s), z[s - 1]);
        if used > l {
            return Err(Error::input(format!("{used} tuples of A_{s} used but only {l} exist")));
        }
        total += (l - used) as u64 * binomial_small(s, i);
    }
    Ok(total)
}

fn binomial_small(n: usize, k: usize) -> u64 {
    crate::combinatorics::binomial_u128(n as u64, k as u64).unwrap() as u64
}

/// Flow on an arc of round `i` loading the `l`-th element of a fresh
/// subtuple taken from an `s`-tuple: `C(s,i) / C(s,l) * key / (l N)`, zero
/// when `s < i` or `l > i`.
pub fn flow_on_arc<T: Scalar>(key_flow: &T, s: usize, i: usize, l: usize, n_succ: u64) -> Result<T> {
    if l == 0 {
        return Err(Error::input("subtuple levels start at 1"));
    }
    if s < i || l > i {
        return Ok(T::zero());
    }
    if n_succ == 0 {
        return Err(Error::Construction(
            "key vertex carries flow but has no succeeding key vertex".into(),
        ));
    }
    let num = T::from_u64(binomial_small(s, i)).unwrap();
    let den = T::from_u64(binomial_small(s, l) * l as u64 * n_succ).unwrap();
    Ok(key_flow.clone() * num / den)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rational;

    fn promise(ell: &[usize]) -> Promise {
        Promise::new(ell.len() + 1, ell.to_vec()).unwrap()
    }

    #[test]
    fn counts() {
        let p = promise(&[2, 2]);
        assert_eq!(count_by_specification(&p, &Specification(vec![1, 1])).unwrap(), BigUint::from(8u32));
        assert_eq!(count_by_specification(&p, &Specification(vec![0, 0])).unwrap(), BigUint::one());
        let q = promise(&[3, 0]);
        assert_eq!(count_by_specification(&q, &Specification(vec![2, 0])).unwrap(), BigUint::from(3u32));
        // every subset is counted once across all specifications
        let total: BigUint = (0..=6)
            .flat_map(|size| specs_of_size(3, size))
            .map(|s| count_by_specification(&p, &s).unwrap())
            .sum();
        assert_eq!(total, BigUint::from(64u32));
    }

    #[test]
    fn spec_listing() {
        assert_eq!(
            specs_of_size(3, 3),
            vec![Specification(vec![1, 1]), Specification(vec![3, 0])]
        );
        assert_eq!(specs_of_size(2, 4), vec![Specification(vec![4])]);
    }

    #[test]
    fn subtuple_expectations() {
        let p = promise(&[2, 2]);
        assert_eq!(expected_subtuples(&p, 3, 2).unwrap(), rational(2, 5));
        assert_eq!(expected_subtuples(&p, 3, 1).unwrap(), rational(11, 5));
        assert_eq!(expected_subtuples(&p, 1, 2).unwrap(), rational(0, 1));
        assert_eq!(expected_subtuples(&promise(&[0, 1]), 2, 2).unwrap(), rational(1, 1));
    }

    #[test]
    fn d_values() {
        let p = promise(&[5, 5]);
        assert_eq!(d_function(&p, 2, &[0, 1]).unwrap(), 4);
        assert_eq!(d_function(&p, 1, &[0, 1]).unwrap(), 13);
        assert_eq!(d_function(&p, 1, &[5, 5]).unwrap(), 0);
        assert!(d_function(&p, 1, &[6, 0]).is_err());
    }

    #[test]
    fn arc_flows() {
        assert!((flow_on_arc(&0.1f64, 2, 2, 2, 4).unwrap() - 0.0125).abs() < 1e-15);
        assert!((flow_on_arc(&0.1f64, 2, 2, 1, 4).unwrap() - 0.0125).abs() < 1e-15);
        assert_eq!(flow_on_arc(&0.1, 1, 2, 1, 4).unwrap(), 0.0);
        assert!(matches!(flow_on_arc(&0.1, 2, 2, 1, 0), Err(Error::Construction(_))));
        assert_eq!(flow_on_arc(&rational(1, 10), 2, 2, 2, 4).unwrap(), rational(1, 80));
    }

    #[test]
    fn ratio_identity() {
        let p = promise(&[10, 10]);
        let s = Specification(vec![1, 1]);
        assert_eq!(tuple_count_ratio(&p, &p, &s).unwrap(), rational(1, 1));
        let r = tuple_count_ratio(&p, &promise(&[11, 10]), &s).unwrap();
        // (11 + 2*9) * 10 / ((10 + 2*9) * 10)
        assert_eq!(r, rational(29, 28));
    }
}
