//! Exponent-vector enumeration shared by the tensor and moment modules.
//!
//! All listings are graded: total degree ascending, and within one degree the
//! exponent vectors are ordered lexicographically with the first variable
//! dominant (x1^d first, xn^d last). The printed moment vectors of the
//! worked examples pin this order, so it must not change.

/// Binomial coefficient, exact in u128 for the small arguments used here.
pub(crate) fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc as usize
}

/// Number of monomials of degree exactly `s` in `n` variables.
pub(crate) fn zeta(n: usize, s: usize) -> usize {
    binomial(n + s - 1, n - 1)
}

/// Length of the tensor index listing `I^{<=s}`: 1 + n + ... + n^s.
pub(crate) fn nu(n: usize, s: usize) -> usize {
    let mut acc = 1usize;
    let mut pow = 1usize;
    for _ in 0..s {
        pow *= n;
        acc += pow;
    }
    acc
}

/// Exponent vectors of `N^n_{=d}` in lexicographic order, first variable dominant.
pub(crate) fn exps_exact(n: usize, d: usize) -> Vec<Vec<u8>> {
    let mut out = Vec::with_capacity(zeta(n, d));
    let mut cur = vec![0u8; n];
    fill_exact(&mut out, &mut cur, 0, d);
    out
}

fn fill_exact(out: &mut Vec<Vec<u8>>, cur: &mut Vec<u8>, pos: usize, rem: usize) {
    if pos + 1 == cur.len() {
        cur[pos] = rem as u8;
        out.push(cur.clone());
        return;
    }
    for a in (0..=rem).rev() {
        cur[pos] = a as u8;
        fill_exact(out, cur, pos + 1, rem - a);
    }
    cur[pos] = 0;
}

/// Exponent vectors of `N^n_{<=s}`, degree ascending then lexicographic.
pub(crate) fn exps_upto(n: usize, s: usize) -> Vec<Vec<u8>> {
    let mut out = Vec::new();
    for d in 0..=s {
        out.extend(exps_exact(n, d));
    }
    out
}

/// Multinomial multiplicity 3!/(a1! a2! ... an!) of a degree-3 exponent.
pub(crate) fn multiplicity3(alpha: &[u8]) -> f64 {
    let mut denom = 1u32;
    for &a in alpha {
        denom *= match a {
            0 => 1,
            1 => 1,
            2 => 2,
            3 => 6,
            _ => unreachable!("degree-3 exponent"),
        };
    }
    6.0 / denom as f64
}
