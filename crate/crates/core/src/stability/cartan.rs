use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rational::{serde_rat_mat, Rational};

/// Type-A Cartan matrix and its exact inverse.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CartanData {
    pub n: usize,
    pub a: Vec<Vec<i64>>,
    #[serde(with = "serde_rat_mat")]
    pub a_inv: Vec<Vec<Rational>>,
}

impl CartanData {
    /// `A·x` for a rational vector.
    pub fn apply(&self, x: &[Rational]) -> Vec<Rational> {
        self.a
            .iter()
            .map(|row| {
                row.iter()
                    .zip(x)
                    .filter(|(a, _)| **a != 0)
                    .map(|(a, xv)| xv * BigRational::from_integer(BigInt::from(*a)))
                    .fold(Rational::zero(), |acc, t| acc + t)
            })
            .collect()
    }

    /// `A⁻¹·x` for a rational vector.
    pub fn apply_inverse(&self, x: &[Rational]) -> Vec<Rational> {
        self.a_inv
            .iter()
            .map(|row| {
                row.iter()
                    .zip(x)
                    .fold(Rational::zero(), |acc, (a, xv)| acc + a * xv)
            })
            .collect()
    }

    pub fn a_f64(&self) -> Vec<Vec<f64>> {
        self.a
            .iter()
            .map(|row| row.iter().map(|&v| v as f64).collect())
            .collect()
    }

    pub fn a_inv_f64(&self) -> Vec<Vec<f64>> {
        self.a_inv
            .iter()
            .map(|row| row.iter().map(crate::rational::to_f64).collect())
            .collect()
    }
}

fn cartan_matrix(n: usize) -> Vec<Vec<i64>> {
    (0..n)
        .map(|j| {
            (0..n)
                .map(|k| match j.abs_diff(k) {
                    0 => 2,
                    1 => -1,
                    _ => 0,
                })
                .collect()
        })
        .collect()
}

/// `(A⁻¹)_{jk} = min(j,k)(n+1−max(j,k))/(n+1)` with 1-based indices.
pub fn closed_form_inverse(n: usize) -> Vec<Vec<Rational>> {
    let np1 = BigInt::from(n + 1);
    (1..=n)
        .map(|j| {
            (1..=n)
                .map(|k| {
                    let num = BigInt::from(j.min(k) * (n + 1 - j.max(k)));
                    BigRational::new(num, np1.clone())
                })
                .collect()
        })
        .collect()
}

/// Gauss–Jordan elimination over the rationals.
fn invert_exact(a: &[Vec<i64>]) -> Result<Vec<Vec<Rational>>> {
    let n = a.len();
    let mut m: Vec<Vec<Rational>> = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r: Vec<Rational> = row
                .iter()
                .map(|&v| BigRational::from_integer(BigInt::from(v)))
                .collect();
            r.extend((0..n).map(|k| {
                if k == i {
                    Rational::one()
                } else {
                    Rational::zero()
                }
            }));
            r
        })
        .collect();

    for col in 0..n {
        let pivot = (col..n)
            .find(|&r| !m[r][col].is_zero())
            .ok_or_else(|| Error::Internal("singular Cartan matrix".into()))?;
        m.swap(col, pivot);
        let inv = m[col][col].recip();
        for v in m[col].iter_mut() {
            *v *= &inv;
        }
        let pivot_row = m[col].clone();
        for (r, row) in m.iter_mut().enumerate() {
            if r == col || row[col].is_zero() {
                continue;
            }
            let factor = row[col].clone();
            for (v, p) in row.iter_mut().zip(&pivot_row) {
                *v -= &factor * p;
            }
        }
    }
    Ok(m.into_iter().map(|row| row[n..].to_vec()).collect())
}

pub fn cartan(n: usize) -> Result<CartanData> {
    if n == 0 {
        return Err(Error::invalid("Cartan matrix needs n >= 1"));
    }
    let a = cartan_matrix(n);
    let a_inv = invert_exact(&a)?;
    if a_inv != closed_form_inverse(n) {
        return Err(Error::Internal(format!(
            "elimination and closed-form Cartan inverses differ for n = {n}"
        )));
    }
    Ok(CartanData { n, a, a_inv })
}
