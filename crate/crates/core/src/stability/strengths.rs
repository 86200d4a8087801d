use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{serde_rat_pair_opt, serde_rat_vec, to_f64, Rational};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Puncture {
    pub label: String,
    #[serde(default, with = "serde_rat_pair_opt")]
    pub position: Option<(Rational, Rational)>,
    #[serde(with = "serde_rat_vec")]
    pub mu: Vec<Rational>,
}

impl Puncture {
    pub fn new(label: impl Into<String>, mu: Vec<Rational>) -> Self {
        Puncture {
            label: label.into(),
            position: None,
            mu,
        }
    }

    pub fn at(mut self, x: Rational, y: Rational) -> Self {
        self.position = Some((x, y));
        self
    }

    pub fn position_f64(&self) -> Option<(f64, f64)> {
        self.position.as_ref().map(|(x, y)| (to_f64(x), to_f64(y)))
    }
}

/// Singular strengths `μ_k(p)` on a compact surface of given genus.
///
/// Invariant: every puncture carries `n` strengths, not all zero. The smooth
/// case (no punctures) goes through [`super::criterion_smooth`] instead.
#[derive(Clone, Debug, PartialEq)]
pub struct SingularStrengths {
    n: usize,
    genus: u32,
    punctures: Vec<Puncture>,
}

impl SingularStrengths {
    pub fn new(n: usize, genus: u32, punctures: Vec<Puncture>) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("system size n must be at least 1"));
        }
        if punctures.is_empty() {
            return Err(Error::invalid(
                "no punctures given; use the smooth-case criterion",
            ));
        }
        for p in &punctures {
            if p.mu.len() != n {
                return Err(Error::invalid(format!(
                    "puncture `{}` has {} strengths, expected {n}",
                    p.label,
                    p.mu.len()
                )));
            }
            if p.mu.iter().all(Zero::is_zero) {
                return Err(Error::invalid(format!(
                    "puncture `{}` has all strengths zero",
                    p.label
                )));
            }
        }
        Ok(SingularStrengths {
            n,
            genus,
            punctures,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn genus(&self) -> u32 {
        self.genus
    }

    pub fn punctures(&self) -> &[Puncture] {
        &self.punctures
    }

    /// `s_j = Σ_p μ_j(p)`.
    pub fn column_sums(&self) -> Vec<Rational> {
        let mut s = vec![Rational::zero(); self.n];
        for p in &self.punctures {
            for (acc, m) in s.iter_mut().zip(&p.mu) {
                *acc += m;
            }
        }
        s
    }

    /// Extra checks for data that feeds the torus solver: genus one, every
    /// puncture placed, and every strength strictly above -1 so that
    /// `e^{u_k}` is integrable.
    pub fn validate_for_solver(&self) -> Result<()> {
        if self.genus != 1 {
            return Err(Error::invalid(format!(
                "the torus solver needs genus 1, got {}",
                self.genus
            )));
        }
        let minus_one = -Rational::one();
        for p in &self.punctures {
            if p.position.is_none() {
                return Err(Error::invalid(format!(
                    "puncture `{}` has no position",
                    p.label
                )));
            }
            if let Some(bad) = p.mu.iter().find(|m| **m <= minus_one) {
                return Err(Error::invalid(format!(
                    "puncture `{}` has strength {bad} <= -1",
                    p.label
                )));
            }
        }
        Ok(())
    }

    /// Strengths of component `k` (0-based) at every puncture, as floats.
    pub fn component_f64(&self, k: usize) -> Vec<f64> {
        self.punctures.iter().map(|p| to_f64(&p.mu[k])).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, rat};

    #[test]
    fn rejects_all_zero_puncture() {
        let err = SingularStrengths::new(2, 1, vec![Puncture::new("p", vec![int(0), int(0)])]);
        assert!(matches!(err, Err(Error::InvalidInput(_))));
    }

    #[test]
    fn rejects_wrong_length() {
        let err = SingularStrengths::new(2, 1, vec![Puncture::new("p", vec![int(1)])]);
        assert!(err.is_err());
    }

    #[test]
    fn rejects_empty_and_zero_n() {
        assert!(SingularStrengths::new(2, 1, vec![]).is_err());
        assert!(SingularStrengths::new(0, 1, vec![Puncture::new("p", vec![])]).is_err());
    }

    #[test]
    fn column_sums_add_over_punctures() {
        let s = SingularStrengths::new(
            2,
            1,
            vec![
                Puncture::new("a", vec![rat(1, 2), int(0)]),
                Puncture::new("b", vec![rat(1, 2), int(-2)]),
            ],
        )
        .unwrap();
        assert_eq!(s.column_sums(), vec![int(1), int(-2)]);
    }

    #[test]
    fn solver_validation() {
        let ok = SingularStrengths::new(
            1,
            1,
            vec![Puncture::new("p", vec![rat(-1, 2)]).at(rat(1, 2), rat(1, 2))],
        )
        .unwrap();
        assert!(ok.validate_for_solver().is_ok());

        let unplaced =
            SingularStrengths::new(1, 1, vec![Puncture::new("p", vec![rat(-1, 2)])]).unwrap();
        assert!(unplaced.validate_for_solver().is_err());

        let too_strong = SingularStrengths::new(
            1,
            1,
            vec![Puncture::new("p", vec![int(-1)]).at(int(0), int(0))],
        )
        .unwrap();
        assert!(too_strong.validate_for_solver().is_err());

        let genus2 = SingularStrengths::new(
            1,
            2,
            vec![Puncture::new("p", vec![rat(-1, 2)]).at(int(0), int(0))],
        )
        .unwrap();
        assert!(genus2.validate_for_solver().is_err());
    }
}
