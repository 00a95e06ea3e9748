//! The transfer coefficients r(n,j)^k_l.
//!
//! Base case r(n,j)^j_{n+1} = 1, recursion
//! r(n,j)^k_l = ((l-k) r^k_{l-1} + k r^{k-1}_{l-1}) / (l-1) for l > n+1,
//! zero outside the support. The table is computed once up to a level bound
//! and shared read-only.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_traits::Zero;

use crate::error::{HmError, Result};
use crate::rational::{format_rat, rat_int, Rat};

#[derive(Debug)]
pub struct RTable {
    lmax: u32,
    /// (n, j, k, l) -> value, nonzero entries only.
    entries: BTreeMap<(u32, u32, u32, u32), Rat>,
}

impl RTable {
    /// All entries with l <= lmax. Requires lmax >= 2.
    pub fn with_lmax(lmax: u32) -> Result<RTable> {
        if lmax < 2 {
            return Err(HmError::Validation(format!(
                "r-table requires lmax >= 2, got {lmax}"
            )));
        }
        let mut entries = BTreeMap::new();
        for n in 2..lmax {
            for j in 1..n {
                entries.insert((n, j, j, n + 1), rat_int(1));
                for l in (n + 2)..=lmax {
                    for k in j..=(j + (l - n - 1)) {
                        let prev = |kk: u32| -> Rat {
                            entries
                                .get(&(n, j, kk, l - 1))
                                .cloned()
                                .unwrap_or_else(Rat::zero)
                        };
                        let v = (prev(k) * rat_int((l - k) as i64)
                            + prev(k.wrapping_sub(1)) * rat_int(k as i64))
                            / rat_int((l - 1) as i64);
                        if !v.is_zero() {
                            entries.insert((n, j, k, l), v);
                        }
                    }
                }
            }
        }
        Ok(RTable { lmax, entries })
    }

    pub fn lmax(&self) -> u32 {
        self.lmax
    }

    /// r(n,j)^k_l, zero outside the support.
    pub fn get(&self, n: u32, j: u32, k: u32, l: u32) -> Rat {
        self.entries
            .get(&(n, j, k, l))
            .cloned()
            .unwrap_or_else(Rat::zero)
    }

    /// Nonzero coefficients (k, r(n,j)^k_{n+m}) of the transfer of a weight-m
    /// block through chi^n_j.
    pub fn transfer_row(&self, n: u32, j: u32, m: u32) -> Result<Vec<(u32, Rat)>> {
        let l = n + m;
        if l > self.lmax {
            return Err(HmError::RTableTooSmall {
                required: l,
                available: self.lmax,
            });
        }
        let mut out = Vec::new();
        for ((en, ej, k, el), v) in self
            .entries
            .range((n, j, 0, 0)..=(n, j, u32::MAX, u32::MAX))
        {
            if *en == n && *ej == j && *el == l {
                out.push((*k, v.clone()));
            }
        }
        Ok(out)
    }

    /// Text dump, one line per entry, lexicographic in (n, j, l, k).
    pub fn dump(&self) -> String {
        let mut keys: Vec<&(u32, u32, u32, u32)> = self.entries.keys().collect();
        keys.sort_by_key(|(n, j, k, l)| (*n, *j, *l, *k));
        let mut out = String::new();
        for (n, j, k, l) in keys {
            let v = &self.entries[&(*n, *j, *k, *l)];
            let _ = writeln!(out, "r {n} {j} {k} {l} = {}", format_rat(v));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    #[test]
    fn base_cases() {
        let t = RTable::with_lmax(8).unwrap();
        for n in 2..=6u32 {
            for j in 1..n {
                assert_eq!(
                    t.get(n, j, j, n + 1),
                    rat_int(1),
                    "r({n},{j})^{j}_{}",
                    n + 1
                );
            }
        }
    }

    #[test]
    fn hand_recursion_step() {
        // r(2,1)^1_4 = (1/3)(3 r^1_3) = 1, r(2,1)^2_4 = (1/3)(2 r^2_3 + 2 r^1_3) = 2/3.
        let t = RTable::with_lmax(4).unwrap();
        assert_eq!(t.get(2, 1, 1, 4), rat_int(1));
        assert_eq!(t.get(2, 1, 2, 4), rat(2, 3));
    }

    #[test]
    fn zero_outside_support() {
        let t = RTable::with_lmax(6).unwrap();
        assert_eq!(t.get(3, 2, 1, 4), rat_int(0));
        assert_eq!(t.get(2, 1, 3, 4), rat_int(0));
        assert_eq!(t.get(2, 1, 1, 3), rat_int(1));
        assert_eq!(t.get(2, 1, 0, 3), rat_int(0));
    }

    #[test]
    fn transfer_row_errors_when_small() {
        let t = RTable::with_lmax(3).unwrap();
        let err = t.transfer_row(2, 1, 2).unwrap_err();
        assert!(matches!(
            err,
            crate::error::HmError::RTableTooSmall {
                required: 4,
                available: 3
            }
        ));
    }
}
