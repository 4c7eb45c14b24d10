//! Exact-arithmetic oracle for eliminator weights.

#![allow(dead_code)]

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub fn rational(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// Solves the Vandermonde system `Σ bᵢ·aᵢᵏ = δₖ₀`, `k = 0..n−1`, by exact
/// Gaussian elimination.
pub fn exact_weights(nodes: &[BigRational]) -> Vec<BigRational> {
    let n = nodes.len();
    // row k: aᵢᵏ for every i, augmented with δₖ₀
    let mut m: Vec<Vec<BigRational>> = (0..n)
        .map(|k| {
            let mut row: Vec<BigRational> = nodes.iter().map(|a| pow(a, k)).collect();
            row.push(if k == 0 {
                BigRational::one()
            } else {
                BigRational::zero()
            });
            row
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n)
            .find(|&r| !m[r][col].is_zero())
            .expect("distinct nodes");
        m.swap(col, pivot);
        let p = m[col][col].clone();
        for v in m[col].iter_mut() {
            *v = &*v / &p;
        }
        for r in 0..n {
            if r != col && !m[r][col].is_zero() {
                let f = m[r][col].clone();
                let pivot_row = m[col].clone();
                for (target, p) in m[r].iter_mut().zip(&pivot_row).skip(col) {
                    *target = &*target - &f * p;
                }
            }
        }
    }
    m.into_iter().map(|row| row[n].clone()).collect()
}

fn pow(a: &BigRational, k: usize) -> BigRational {
    (0..k).fold(BigRational::one(), |acc, _| acc * a)
}

pub fn to_f64(x: &BigRational) -> f64 {
    x.numer().to_f64().unwrap() / x.denom().to_f64().unwrap()
}

pub fn sum_of_squares(b: &[BigRational]) -> BigRational {
    b.iter().fold(BigRational::zero(), |acc, x| acc + x * x)
}

pub fn abs_max(b: &[BigRational]) -> f64 {
    b.iter().map(|x| to_f64(&x.abs())).fold(0.0, f64::max)
}
