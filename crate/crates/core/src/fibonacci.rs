//! Exact Fibonacci and Lucas arithmetic, the Lucas dimension sequence
//! `d_k = L_{2k} + 1`, and exhaustive checks of the identities the symmetry
//! analysis relies on.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};

/// `F_n` with `F_0 = 0`, `F_1 = 1`.
pub fn fibonacci(n: u64) -> BigInt {
    fibonacci_pair(n).0
}

/// `L_n` with `L_0 = 2`, `L_1 = 1`.
pub fn lucas(n: u64) -> BigInt {
    let (mut prev, mut cur) = (BigInt::from(2), BigInt::one());
    if n == 0 {
        return prev;
    }
    for _ in 1..n {
        let next = &prev + &cur;
        prev = std::mem::replace(&mut cur, next);
    }
    cur
}

// (F_n, F_{n+1})
fn fibonacci_pair(n: u64) -> (BigInt, BigInt) {
    let (mut a, mut b) = (BigInt::zero(), BigInt::one());
    for _ in 0..n {
        let next = &a + &b;
        a = std::mem::replace(&mut b, next);
    }
    (a, b)
}

/// All of `F_0..=F_n`.
pub fn fibonacci_table(n: u64) -> Vec<BigInt> {
    let mut out = Vec::with_capacity(n as usize + 1);
    out.push(BigInt::zero());
    if n >= 1 {
        out.push(BigInt::one());
    }
    for i in 2..=n as usize {
        let next = &out[i - 1] + &out[i - 2];
        out.push(next);
    }
    out
}

/// All of `L_0..=L_n`.
pub fn lucas_table(n: u64) -> Vec<BigInt> {
    let mut out = Vec::with_capacity(n as usize + 1);
    out.push(BigInt::from(2));
    if n >= 1 {
        out.push(BigInt::one());
    }
    for i in 2..=n as usize {
        let next = &out[i - 1] + &out[i - 2];
        out.push(next);
    }
    out
}

/// One member of the dimension sequence.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DimensionEntry {
    pub k: u64,
    /// `L_{2k} + 1`
    pub d: BigInt,
    pub d_mod3: u8,
    /// `F_{2k}`; `(d+1)(d-3) = 5 F_{2k}^2`.
    pub squarefree_witness: BigInt,
}

impl DimensionEntry {
    /// The dimension as a machine word, when it fits.
    pub fn d_u64(&self) -> Option<u64> {
        self.d.to_u64()
    }
}

/// The `k`-th dimension of the sequence 4, 8, 19, 48, 124, ...
///
/// # Panics
/// If `k == 0`.
pub fn dimension(k: u64) -> DimensionEntry {
    assert!(k >= 1, "dimension index starts at 1");
    let d: BigInt = lucas(2 * k) + 1;
    let d_mod3 = d.mod_floor(&BigInt::from(3)).to_u8().unwrap();
    DimensionEntry {
        k,
        d,
        d_mod3,
        squarefree_witness: fibonacci(2 * k),
    }
}

/// `d_k` as a machine word; only valid while it fits (`k <= 45`).
pub fn dimension_u64(k: u64) -> u64 {
    dimension(k)
        .d_u64()
        .expect("dimension does not fit in 64 bits")
}

/// Golden-ratio closed forms evaluated in `f64` and rounded.
pub fn fibonacci_closed_form(n: u32) -> f64 {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    ((phi.powi(n as i32) - (-phi).powi(-(n as i32))) / 5f64.sqrt()).round()
}

pub fn lucas_closed_form(n: u32) -> f64 {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    (phi.powi(n as i32) + (-phi).powi(-(n as i32))).round()
}

/// `phi^{2k} + phi^{-2k} + 1` in `f64`, rounded.
pub fn dimension_closed_form(k: u32) -> f64 {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    (phi.powi(2 * k as i32) + phi.powi(-2 * (k as i32)) + 1.0).round()
}

/// A single evaluated instance of some identity.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Check {
    pub name: &'static str,
    pub n: u64,
    pub k: Option<u64>,
    pub passed: bool,
}

/// Every instance checked, in evaluation order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PropertyReport {
    pub checks: Vec<Check>,
}

impl PropertyReport {
    fn record(&mut self, name: &'static str, n: u64, k: Option<u64>, passed: bool) {
        self.checks.push(Check { name, n, k, passed });
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    /// (name, instances checked, instances failed), in first-seen order.
    pub fn summary(&self) -> Vec<(&'static str, usize, usize)> {
        let mut out: Vec<(&'static str, usize, usize)> = Vec::new();
        for c in &self.checks {
            match out.iter_mut().find(|(n, _, _)| *n == c.name) {
                Some(entry) => {
                    entry.1 += 1;
                    entry.2 += usize::from(!c.passed);
                }
                None => out.push((c.name, 1, usize::from(!c.passed))),
            }
        }
        out
    }
}

impl fmt::Display for PropertyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (name, total, failed) in self.summary() {
            let verdict = if failed == 0 { "ok" } else { "FAILED" };
            writeln!(f, "{name:<28} {total:>5} instances  {verdict}")?;
        }
        for c in self.failures() {
            match c.k {
                Some(k) => writeln!(f, "  violated: {} at n={} k={}", c.name, c.n, k)?,
                None => writeln!(f, "  violated: {} at n={}", c.name, c.n)?,
            }
        }
        Ok(())
    }
}

/// Recurrence, mod-3 period, mod-9 value at multiples of four, and the
/// square-free factorisation of `(d_k+1)(d_k-3)` for `1 <= k <= k_max`.
pub fn check_dimension_properties(k_max: u64) -> PropertyReport {
    let lucas = lucas_table(2 * (k_max + 3));
    let fib = fibonacci_table(2 * k_max);
    let d = |k: u64| -> BigInt { &lucas[2 * k as usize] + 1 };
    let three = BigInt::from(3);
    let nine = BigInt::from(9);
    let five = BigInt::from(5);
    let mut report = PropertyReport::default();

    for k in 1..=k_max {
        let dk = d(k);
        let rhs = 4 * d(k + 2) - 4 * d(k + 1) + &dk;
        report.record("d recurrence", k, None, d(k + 3) == rhs);

        let expected_mod3 = [1u8, 2, 1, 0][((k - 1) % 4) as usize];
        let got = dk.mod_floor(&three).to_u8().unwrap();
        report.record("d mod 3 period", k, None, got == expected_mod3);

        if k % 4 == 0 {
            report.record("d_4l mod 9", k, None, dk.mod_floor(&nine) == three);
        }

        let f2k = &fib[2 * k as usize];
        let lhs = (&dk + 1) * (&dk - 3);
        report.record("squarefree part 5", k, None, lhs == &five * f2k * f2k);

        if k >= 2 {
            report.record("d increasing", k, None, dk > d(k - 1));
        }
    }
    report
}

/// The six Fibonacci-Lucas identities for `1 <= n <= n_max`; divisibility is
/// checked for multipliers `1..=6`.
pub fn check_identities(n_max: u64) -> PropertyReport {
    let fib = fibonacci_table(6 * n_max + 1);
    let luc = lucas_table(4 * n_max + 1);
    let f = |i: u64| &fib[i as usize];
    let l = |i: u64| &luc[i as usize];
    let mut report = PropertyReport::default();

    for n in 1..=n_max {
        for k in 1..=6 {
            let divides = if f(n).is_zero() {
                f(k * n).is_zero()
            } else {
                f(k * n).mod_floor(f(n)).is_zero()
            };
            report.record("F_n | F_kn", n, Some(k), divides);
        }
        report.record("L_n = F_n-1 + F_n+1", n, None, *l(n) == f(n - 1) + f(n + 1));
        report.record(
            "L_2n^2 = 5 F_2n^2 + 4",
            n,
            None,
            l(2 * n) * l(2 * n) == 5 * f(2 * n) * f(2 * n) + 4,
        );
        report.record(
            "F_6n = F_2n (L_4n + 1)",
            n,
            None,
            *f(6 * n) == f(2 * n) * (l(4 * n) + 1),
        );
        report.record(
            "L_4n + 1 = L_2n^2 - 1",
            n,
            None,
            l(4 * n) + 1 == l(2 * n) * l(2 * n) - 1,
        );
        report.record(
            "F_6n-1 + L_2n = F_2n-1 (L_4n + 1)",
            n,
            None,
            f(6 * n - 1) + l(2 * n) == f(2 * n - 1) * (l(4 * n) + 1),
        );
    }
    report
}

/// `F_{6l-1} mod (L_{4l}+1)` represented in `(-m/2, m/2]`; used to show the
/// scalar `F_f^{3k}` is not the identity.
pub fn signed_residue(value: &BigInt, modulus: &BigInt) -> BigInt {
    let r = value.mod_floor(modulus);
    if &r * 2 > *modulus {
        r - modulus
    } else {
        r
    }
}
