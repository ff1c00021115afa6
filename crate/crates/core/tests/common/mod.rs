//! Brute-force oracles shared by the integration tests. None of these go
//! through the library's matrix or search code.

#![allow(dead_code)]

use rand::Rng;
use sigforge::{Signature, SignatureSet};

pub fn random_signature<R: Rng>(rng: &mut R, len: usize) -> Signature {
    Signature::new((0..len).map(|_| if rng.gen::<bool>() { 1 } else { -1 }).collect()).unwrap()
}

pub fn random_set<R: Rng>(rng: &mut R, k: usize, len: usize) -> SignatureSet {
    SignatureSet::new((0..k).map(|_| random_signature(rng, len)).collect()).unwrap()
}

fn dot(a: &[i8], b: &[i8]) -> i64 {
    a.iter().zip(b).map(|(&x, &y)| i64::from(x) * i64::from(y)).sum()
}

/// TSC by the double loop over all ordered pairs.
pub fn tsc_double_loop(set: &SignatureSet) -> i64 {
    let mut total = 0;
    for a in set.signatures() {
        for b in set.signatures() {
            let c = dot(a.chips(), b.chips());
            total += c * c;
        }
    }
    total
}

/// `R_mn = Σᵢ sᵢ(m) sᵢ(n)`, summed entry by entry.
pub fn correlation_direct(set: &SignatureSet) -> Vec<Vec<i64>> {
    let l = set.signature_len();
    let mut r = vec![vec![0i64; l]; l];
    for (m, row) in r.iter_mut().enumerate() {
        for (n, e) in row.iter_mut().enumerate() {
            *e = set.signatures().iter().map(|s| i64::from(s.get(m)) * i64::from(s.get(n))).sum();
        }
    }
    r
}

/// `sᵀRs` as `Σᵢ (sᵢᵀs)²`, without forming `R`.
pub fn metric_by_inner_products(set: &SignatureSet, s: &[i8]) -> i64 {
    set.signatures().iter().map(|si| dot(si.chips(), s).pow(2)).sum()
}

/// Signature with chips given by the bits of `bits` (bit set → -1).
pub fn signature_from_bits(bits: u64, len: usize) -> Vec<i8> {
    (0..len).map(|i| if bits >> i & 1 == 1 { -1 } else { 1 }).collect()
}

/// Minimum of `Σᵢ (sᵢᵀs)²` over the whole cube `{±1}^L`.
pub fn brute_force_min(set: &SignatureSet) -> i64 {
    let l = set.signature_len();
    (0..1u64 << l).map(|b| metric_by_inner_products(set, &signature_from_bits(b, l))).min().unwrap()
}

/// All `s` with last chip `+1` and metric at most `c`, in ascending bit order.
pub fn brute_force_ball(set: &SignatureSet, c: i64) -> Vec<Vec<i8>> {
    let l = set.signature_len();
    (0..1u64 << (l - 1))
        .map(|b| signature_from_bits(b, l))
        .filter(|s| metric_by_inner_products(set, s) <= c)
        .collect()
}

/// Smallest TSC over every set of `k` signatures of length `len`. Each member
/// is taken up to sign (TSC is invariant under sᵢ → −sᵢ) and the set as a
/// multiset (TSC does not depend on order).
pub fn exhaustive_min_tsc(k: usize, len: usize) -> i64 {
    let reps: Vec<Vec<i8>> = (0..1u64 << (len - 1)).map(|b| signature_from_bits(b, len)).collect();
    let gram: Vec<Vec<i64>> = reps.iter().map(|a| reps.iter().map(|b| dot(a, b).pow(2)).collect()).collect();
    let mut best = i64::MAX;
    let mut chosen = Vec::with_capacity(k);
    fn walk(start: usize, k: usize, gram: &[Vec<i64>], chosen: &mut Vec<usize>, partial: i64, best: &mut i64) {
        if chosen.len() == k {
            *best = (*best).min(partial);
            return;
        }
        for i in start..gram.len() {
            let add: i64 = gram[i][i] + 2 * chosen.iter().map(|&j| gram[i][j]).sum::<i64>();
            chosen.push(i);
            walk(i, k, gram, chosen, partial + add, best);
            chosen.pop();
        }
    }
    walk(0, k, &gram, &mut chosen, 0, &mut best);
    best
}
