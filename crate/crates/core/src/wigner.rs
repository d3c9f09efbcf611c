//! Wigner 3j symbols, Clebsch-Gordan coefficients and the generalized
//! Clebsch-Gordan convolutions `C(ℓ_1, …, ℓ_q, ℓ)`.
//!
//! Factorials enter through `ln Γ`, signs are tracked separately, and the
//! alternating Racah sum is accumulated with compensated summation.

use std::collections::HashMap;
use std::sync::RwLock;

use crate::error::{Error, Result};
use crate::real::{CompensatedSum, Real};

/// Highest order accepted by [`cg_convolution`].
pub const MAX_CONVOLUTION_ORDER: usize = 4;

#[inline]
fn ln_fact<T: Real>(n: i64) -> T {
    debug_assert!(n >= 0);
    (T::from_i64(n).unwrap() + T::one()).ln_gamma()
}

#[inline]
fn sign<T: Real>(k: i64) -> T {
    if k.rem_euclid(2) == 0 {
        T::one()
    } else {
        -T::one()
    }
}

#[inline]
fn triangle(l1: usize, l2: usize, l3: usize) -> bool {
    l3 <= l1 + l2 && l1 <= l2 + l3 && l2 <= l1 + l3
}

/// `(ℓ_1 ℓ_2 ℓ_3; 0 0 0)` in closed form.
pub fn wigner3j_zero<T: Real>(l1: usize, l2: usize, l3: usize) -> T {
    let big_j = l1 + l2 + l3;
    if big_j % 2 == 1 || !triangle(l1, l2, l3) {
        return T::zero();
    }
    let (j, g) = (big_j as i64, (big_j / 2) as i64);
    let (a, b, c) = (l1 as i64, l2 as i64, l3 as i64);
    let half = T::lit(0.5);
    let ln = half
        * (ln_fact::<T>(j - 2 * a) + ln_fact::<T>(j - 2 * b) + ln_fact::<T>(j - 2 * c)
            - ln_fact::<T>(j + 1))
        + ln_fact::<T>(g)
        - ln_fact::<T>(g - a)
        - ln_fact::<T>(g - b)
        - ln_fact::<T>(g - c);
    sign::<T>(g) * ln.exp()
}

/// Index of a general 3j symbol `(ℓ_1 ℓ_2 ℓ_3; m_1 m_2 m_3)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TripleIndex {
    pub ells: [usize; 3],
    pub ms: [i64; 3],
}

impl TripleIndex {
    pub fn new(ells: [usize; 3], ms: [i64; 3]) -> Self {
        TripleIndex { ells, ms }
    }

    fn selection_rules_hold(&self) -> bool {
        let [l1, l2, l3] = self.ells;
        self.ms.iter().sum::<i64>() == 0
            && triangle(l1, l2, l3)
            && self
                .ells
                .iter()
                .zip(self.ms)
                .all(|(&l, m)| m.unsigned_abs() as usize <= l)
    }
}

/// General 3j symbol through the Racah sum. Returns 0 whenever a selection
/// rule fails (including `|m_i| > ℓ_i`).
pub fn wigner3j<T: Real>(idx: TripleIndex) -> T {
    if !idx.selection_rules_hold() {
        return T::zero();
    }
    let [l1, l2, l3] = idx.ells.map(|l| l as i64);
    let [m1, m2, m3] = idx.ms;
    let half = T::lit(0.5);
    let ln_delta =
        ln_fact::<T>(l1 + l2 - l3) + ln_fact::<T>(l1 - l2 + l3) + ln_fact::<T>(-l1 + l2 + l3)
            - ln_fact::<T>(l1 + l2 + l3 + 1);
    let ln_pref = half
        * (ln_delta
            + ln_fact::<T>(l1 + m1)
            + ln_fact::<T>(l1 - m1)
            + ln_fact::<T>(l2 + m2)
            + ln_fact::<T>(l2 - m2)
            + ln_fact::<T>(l3 + m3)
            + ln_fact::<T>(l3 - m3));

    let z_min = 0.max(l2 - l3 - m1).max(l1 - l3 + m2);
    let z_max = (l1 + l2 - l3).min(l1 - m1).min(l2 + m2);
    let mut acc = CompensatedSum::new();
    for z in z_min..=z_max {
        let ln_den = ln_fact::<T>(z)
            + ln_fact::<T>(l1 + l2 - l3 - z)
            + ln_fact::<T>(l1 - m1 - z)
            + ln_fact::<T>(l2 + m2 - z)
            + ln_fact::<T>(l3 - l2 + m1 + z)
            + ln_fact::<T>(l3 - l1 - m2 + z);
        acc.add(sign::<T>(z) * (ln_pref - ln_den).exp());
    }
    sign::<T>(l1 - l2 - m3) * acc.value()
}

/// Clebsch-Gordan coefficient `C^{ℓ_3 m_3}_{ℓ_1 m_1 ℓ_2 m_2}
/// = (-1)^{ℓ_3-m_3} √(2ℓ_3+1) (ℓ_1 ℓ_2 ℓ_3; m_1 m_2 -m_3)`.
///
/// The phase differs from Condon-Shortley by `(-1)^{ℓ_1+ℓ_2+ℓ_3}`; squares
/// and the unitarity relations are unaffected.
pub fn clebsch_gordan<T: Real>(l1: usize, m1: i64, l2: usize, m2: i64, l3: usize, m3: i64) -> T {
    if m1 + m2 != m3 {
        return T::zero();
    }
    let threej: T = wigner3j(TripleIndex::new([l1, l2, l3], [m1, m2, -m3]));
    sign::<T>(l3 as i64 - m3) * T::from_usize_lossy(2 * l3 + 1).sqrt() * threej
}

/// Thread-safe memo of `(ℓ_1 ℓ_2 ℓ_3; 0 0 0)^2`, keyed by the sorted triple.
#[derive(Debug, Default)]
pub struct ZeroCache<T> {
    table: RwLock<HashMap<[usize; 3], T>>,
}

impl<T: Real> ZeroCache<T> {
    pub fn new() -> Self {
        ZeroCache {
            table: RwLock::new(HashMap::new()),
        }
    }

    /// Squared 3j₀₀₀ symbol.
    pub fn squared(&self, l1: usize, l2: usize, l3: usize) -> T {
        if (l1 + l2 + l3) % 2 == 1 || !triangle(l1, l2, l3) {
            return T::zero();
        }
        let mut key = [l1, l2, l3];
        key.sort_unstable();
        if let Some(&v) = self.table.read().expect("cache poisoned").get(&key) {
            return v;
        }
        let w: T = wigner3j_zero(key[0], key[1], key[2]);
        let v = w * w;
        self.table.write().expect("cache poisoned").insert(key, v);
        v
    }

    /// `C(ℓ_1, ℓ_2, ℓ) = (2ℓ+1) (ℓ_1 ℓ_2 ℓ; 0 0 0)^2`, the squared
    /// Clebsch-Gordan coefficient with all `m = 0`.
    pub fn coupling(&self, l1: usize, l2: usize, ell: usize) -> T {
        T::from_usize_lossy(2 * ell + 1) * self.squared(l1, l2, ell)
    }

    pub fn len(&self) -> usize {
        self.table.read().expect("cache poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Distribution `ℓ ↦ C(ℓ_1, …, ℓ_q, ℓ)` for `ℓ = 0..=Σℓ_i`, built by chaining
/// pairwise couplings through the intermediate multipoles.
pub fn cg_convolution_all<T: Real>(ells: &[usize], cache: &ZeroCache<T>) -> Result<Vec<T>> {
    let q = ells.len();
    if !(2..=MAX_CONVOLUTION_ORDER).contains(&q) {
        return Err(Error::UnsupportedOrder {
            q,
            min: 2,
            max: MAX_CONVOLUTION_ORDER,
        });
    }
    // one-hot distribution at ℓ_1, then couple each further ℓ_k
    let mut dist = vec![T::zero(); ells[0] + 1];
    dist[ells[0]] = T::one();
    for &lk in &ells[1..] {
        let top = dist.len() - 1 + lk;
        let next = (0..=top)
            .map(|lam| {
                let mut acc = CompensatedSum::new();
                for (lp, &d) in dist.iter().enumerate() {
                    if d != T::zero() {
                        acc.add(d * cache.coupling(lp, lk, lam));
                    }
                }
                acc.value()
            })
            .collect();
        dist = next;
    }
    Ok(dist)
}

/// Generalized Clebsch-Gordan convolution `C(ℓ_1, …, ℓ_q, ℓ)`, `2 ≤ q ≤ 4`.
pub fn cg_convolution<T: Real>(ells: &[usize], ell: usize, cache: &ZeroCache<T>) -> Result<T> {
    let dist = cg_convolution_all(ells, cache)?;
    Ok(dist.get(ell).copied().unwrap_or_else(T::zero))
}
