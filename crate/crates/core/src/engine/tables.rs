//! The subset-lattice dynamic programs: upward Möbius transform for
//! `A_i`, root inclusion-exclusion for `RR`, sink inclusion-exclusion
//! for `H`, and the per-sink tables `K_v` and `Γ_v`.
//!
//! Full-space tables (`RR`, `H`) are dense over all `2^n` masks. The
//! per-node tables (`A_i`, `K_v`, `Γ_v`) are dense over the `2^(n-1)`
//! subsets of `V \ {i}`, indexed by deleting bit `i` from the mask.
//!
//! Every alternating-sign accumulation runs compensated and in a fixed
//! order (ascending compressed submask index), so all table values are
//! bit-identical regardless of thread count.

use crate::nodeset::{drop_bit, insert_bit, NodeSet};
use crate::sum::KahanSum;
use rayon::prelude::*;

/// `A_i(S) = sum_{Pa_i ⊆ S} B_i(Pa_i)` for every `S ⊆ V \ {node}`,
/// via the standard per-bit zeta transform over the compressed space.
/// `B_i` is zero beyond the indegree bound, so the plain transform
/// already computes the truncated sum.
pub fn upward_mobius(n: usize, node: usize, families: &[(NodeSet, f64)]) -> Vec<f64> {
    let bits = n - 1;
    let mut a = vec![0.0; 1usize << bits];
    for &(parents, value) in families {
        a[drop_bit(parents.mask(), node)] = value;
    }
    for b in 0..bits {
        let bit = 1usize << b;
        for mask in 0..a.len() {
            if mask & bit != 0 {
                a[mask] += a[mask ^ bit];
            }
        }
    }
    a
}

/// Reusable per-thread buffers for the submask recursions.
struct Scratch {
    /// product buffer (`AA` of the root recursion, `η` of the sink one)
    prod: Vec<f64>,
    /// full-space mask of the submask at each compressed index
    tmask: Vec<u32>,
    /// set bit positions of the current outer mask
    bits: Vec<usize>,
    /// per-bit factor `A_j(...)` for the current outer mask
    coef: Vec<f64>,
}

impl Scratch {
    fn new() -> Self {
        Scratch {
            prod: Vec::new(),
            tmask: Vec::new(),
            bits: Vec::new(),
            coef: Vec::new(),
        }
    }

    fn prepare(&mut self, outer: u32) -> usize {
        self.bits.clear();
        let mut m = outer;
        while m != 0 {
            self.bits.push(m.trailing_zeros() as usize);
            m &= m - 1;
        }
        let need = 1usize << self.bits.len();
        if self.prod.len() < need {
            self.prod.resize(need, 0.0);
            self.tmask.resize(need, 0);
        }
        self.coef.resize(self.bits.len(), 0.0);
        need
    }
}

fn masks_of_cardinality(n: usize, card: usize, out: &mut Vec<u32>) {
    out.clear();
    let mut m: u32 = (1 << card) - 1;
    while (m as u64) < (1u64 << n) {
        out.push(m);
        let lo = m & m.wrapping_neg();
        let carry = m + lo;
        m = carry | (((m ^ carry) >> 2) / lo);
    }
}

/// Root inclusion-exclusion:
/// `RR(S) = sum_{∅≠T⊆S} (-1)^(|T|+1) RR(S-T) prod_{j∈T} A_j(V-S)`,
/// base `RR(∅) = 1`, filled layer by layer in ascending cardinality.
/// The product over `T` reuses the one-factor-shorter product at
/// `T \ {lowest bit}`, so each term costs O(1).
pub fn compute_rr(n: usize, a: &[Vec<f64>]) -> Vec<f64> {
    let full = NodeSet::full(n).mask();
    let mut rr = vec![0.0; 1usize << n];
    rr[0] = 1.0;
    let mut layer = Vec::new();
    for card in 1..=n {
        masks_of_cardinality(n, card, &mut layer);
        let values: Vec<f64> = layer
            .par_iter()
            .with_min_len(64)
            .map_init(Scratch::new, |scr, &s| {
                let size = scr.prepare(s);
                let comp = full ^ s;
                for (b, &j) in scr.bits.iter().enumerate() {
                    scr.coef[b] = a[j][drop_bit(comp, j)];
                }
                scr.prod[0] = 1.0;
                scr.tmask[0] = 0;
                let mut sum = KahanSum::new();
                for t in 1..size as u32 {
                    let lb = t & t.wrapping_neg();
                    let bpos = lb.trailing_zeros() as usize;
                    let prev = (t ^ lb) as usize;
                    let prod = scr.coef[bpos] * scr.prod[prev];
                    scr.prod[t as usize] = prod;
                    let tm = scr.tmask[prev] | (1 << scr.bits[bpos]);
                    scr.tmask[t as usize] = tm;
                    let term = rr[(s ^ tm) as usize] * prod;
                    if t.count_ones() & 1 == 1 {
                        sum.add(term);
                    } else {
                        sum.sub(term);
                    }
                }
                sum.value()
            })
            .collect();
        for (&s, v) in layer.iter().zip(values) {
            rr[s as usize] = v;
        }
    }
    rr
}

/// Sink inclusion-exclusion:
/// `H(S) = sum_{∅≠T⊆S} (-1)^(|T|+1) H(S-T) prod_{j∈T} A_j(S-T)`,
/// base `H(∅) = 1`. The product argument depends on `T`, so it is
/// recomputed per term; total cost `n 3^(n-1)`.
pub fn compute_h(n: usize, a: &[Vec<f64>]) -> Vec<f64> {
    let mut h = vec![0.0; 1usize << n];
    h[0] = 1.0;
    let mut layer = Vec::new();
    for card in 1..=n {
        masks_of_cardinality(n, card, &mut layer);
        let values: Vec<f64> = layer
            .par_iter()
            .with_min_len(64)
            .map_init(Scratch::new, |scr, &s| {
                let size = scr.prepare(s);
                scr.tmask[0] = 0;
                let mut sum = KahanSum::new();
                for t in 1..size as u32 {
                    let lb = t & t.wrapping_neg();
                    let bpos = lb.trailing_zeros() as usize;
                    let prev = (t ^ lb) as usize;
                    let tm = scr.tmask[prev] | (1 << scr.bits[bpos]);
                    scr.tmask[t as usize] = tm;
                    let rem = s ^ tm;
                    let mut prod = 1.0;
                    let mut mt = t;
                    while mt != 0 {
                        let j = scr.bits[mt.trailing_zeros() as usize];
                        prod *= a[j][drop_bit(rem, j)];
                        mt &= mt - 1;
                    }
                    let term = h[rem as usize] * prod;
                    if t.count_ones() & 1 == 1 {
                        sum.add(term);
                    } else {
                        sum.sub(term);
                    }
                }
                sum.value()
            })
            .collect();
        for (&s, v) in layer.iter().zip(values) {
            h[s as usize] = v;
        }
    }
    h
}

/// `K_v(U) = sum_{T ⊆ V-{v}-U} (-1)^|T| RR(V-{v}-U-T) prod_{j∈T} A_j(U)`
/// for every `U ⊆ V \ {v}`, indexed by the compressed mask of `U`.
/// The product over `T` is the `η` buffer, filled by the same
/// lowest-set-bit recurrence as the `RR` stage.
pub fn compute_k(n: usize, v: usize, rr: &[f64], a: &[Vec<f64>]) -> Vec<f64> {
    let full = NodeSet::full(n).mask();
    let mut kv = vec![0.0; 1usize << (n - 1)];
    let mut scr = Scratch::new();
    for (uc, out) in kv.iter_mut().enumerate() {
        let u_mask = insert_bit(uc, v);
        let w = full ^ u_mask ^ (1 << v);
        let size = scr.prepare(w);
        for (b, &j) in scr.bits.iter().enumerate() {
            scr.coef[b] = a[j][drop_bit(u_mask, j)];
        }
        scr.prod[0] = 1.0;
        scr.tmask[0] = 0;
        let mut sum = KahanSum::new();
        sum.add(rr[w as usize]); // T = ∅
        for t in 1..size as u32 {
            let lb = t & t.wrapping_neg();
            let bpos = lb.trailing_zeros() as usize;
            let prev = (t ^ lb) as usize;
            let prod = scr.coef[bpos] * scr.prod[prev];
            scr.prod[t as usize] = prod;
            let tm = scr.tmask[prev] | (1 << scr.bits[bpos]);
            scr.tmask[t as usize] = tm;
            let term = rr[(w ^ tm) as usize] * prod;
            if t.count_ones() & 1 == 0 {
                sum.add(term);
            } else {
                sum.sub(term);
            }
        }
        *out = sum.value();
    }
    kv
}

/// `Γ_v(P) = sum_{P ⊆ U ⊆ V-{v}} H(U) K_v(U)`, computed as a full
/// downward (superset-sum) transform over the compressed space and
/// read off at the parent sets within the bound.
pub fn compute_gamma(n: usize, v: usize, h: &[f64], kv: &[f64]) -> Vec<f64> {
    let bits = n - 1;
    let mut g: Vec<f64> = (0..1usize << bits)
        .map(|uc| h[insert_bit(uc, v) as usize] * kv[uc])
        .collect();
    for b in 0..bits {
        let bit = 1usize << b;
        for mask in 0..g.len() {
            if mask & bit == 0 {
                g[mask] += g[mask | bit];
            }
        }
    }
    g
}
