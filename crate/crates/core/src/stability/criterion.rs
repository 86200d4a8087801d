use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use super::cartan::cartan;
use super::strengths::SingularStrengths;
use crate::error::Result;
use crate::rational::{int, serde_rat_vec, Rational};

/// Which weight enters the exponents `d_k`.
///
/// `Paper` uses `(n − j)` as printed in the statement of the existence
/// theorem; `Derived` uses `(n + 1 − j)`, which is what the holomorphic frame
/// `δ_k` and the integral identities produce. The two coincide for `n = 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Paper,
    Derived,
}

impl Variant {
    fn weight(self, n: usize, j: usize) -> i64 {
        match self {
            Variant::Paper => (n - j) as i64,
            Variant::Derived => (n + 1 - j) as i64,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    /// Indexed by `l = 1..=n`.
    pub per_l: Vec<bool>,
    pub exists: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Degrees {
    /// `deg(E_j, K_j)` for `j = 0..=n`.
    #[serde(with = "serde_rat_vec")]
    pub deg_e: Vec<Rational>,
    /// `deg(F^l, K)` for `l = 1..=n`.
    #[serde(with = "serde_rat_vec")]
    pub deg_f: Vec<Rational>,
    #[serde(with = "serde_rat_vec")]
    pub slopes_f: Vec<Rational>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub n: usize,
    pub genus: u32,
    pub variant: Variant,
    #[serde(with = "serde_rat_vec")]
    pub s: Vec<Rational>,
    #[serde(with = "serde_rat_vec")]
    pub d_paper: Vec<Rational>,
    #[serde(with = "serde_rat_vec")]
    pub d_derived: Vec<Rational>,
    /// Degrees for the selected variant.
    #[serde(with = "serde_rat_vec")]
    pub deg_e: Vec<Rational>,
    #[serde(with = "serde_rat_vec")]
    pub deg_f: Vec<Rational>,
    #[serde(with = "serde_rat_vec")]
    pub slopes_f: Vec<Rational>,
    /// `∫ e^{u_l} dA = masses[l]·π`.
    #[serde(with = "serde_rat_vec")]
    pub masses: Vec<Rational>,
    pub verdict_paper: Verdict,
    pub verdict_derived: Verdict,
    pub variants_agree: bool,
}

impl StabilityReport {
    pub fn verdict(&self, variant: Variant) -> &Verdict {
        match variant {
            Variant::Paper => &self.verdict_paper,
            Variant::Derived => &self.verdict_derived,
        }
    }

    pub fn masses_positive(&self) -> bool {
        self.masses.iter().all(Signed::is_positive)
    }
}

/// `d_k = −(1/(n+1))·Σ_j w_j s_j + Σ_{j≤k} s_j`, `k = 0..=n`.
///
/// Entry 0 is the empty-partial-sum value; it is the exponent of the
/// determinant-balancing factor on `E_0`.
fn exponents_with_zero(s: &[Rational], variant: Variant) -> Vec<Rational> {
    let n = s.len();
    let weighted = s
        .iter()
        .enumerate()
        .fold(Rational::zero(), |acc, (idx, sj)| {
            acc + sj * int(variant.weight(n, idx + 1))
        });
    let base = -weighted / int((n + 1) as i64);
    let mut out = Vec::with_capacity(n + 1);
    let mut partial = Rational::zero();
    out.push(base.clone());
    for sj in s {
        partial += sj;
        out.push(&base + &partial);
    }
    out
}

pub fn exponents_from_sums(s: &[Rational], variant: Variant) -> Vec<Rational> {
    exponents_with_zero(s, variant)[1..].to_vec()
}

pub fn exponents(strengths: &SingularStrengths, variant: Variant) -> Vec<Rational> {
    exponents_from_sums(&strengths.column_sums(), variant)
}

fn degrees_from_sums(s: &[Rational], genus: u32, variant: Variant) -> Degrees {
    let n = s.len();
    let g1 = int(genus as i64 - 1);
    let d = exponents_with_zero(s, variant);
    let deg_e: Vec<Rational> = (0..=n)
        .map(|j| &g1 * int(n as i64 - 2 * j as i64) + &d[j])
        .collect();
    let mut deg_f = Vec::with_capacity(n);
    let mut slopes_f = Vec::with_capacity(n);
    let mut acc = Rational::zero();
    for l in 1..=n {
        acc += &deg_e[n - l + 1];
        slopes_f.push(&acc / int(l as i64));
        deg_f.push(acc.clone());
    }
    Degrees {
        deg_e,
        deg_f,
        slopes_f,
    }
}

pub fn degrees(strengths: &SingularStrengths, variant: Variant) -> Degrees {
    degrees_from_sums(&strengths.column_sums(), strengths.genus(), variant)
}

/// Coefficients `m` with `∫ e^{u_l} dA = m_l·π`, from `A·m = 2(g−1)·𝟙 − s`.
pub fn masses_from_sums(s: &[Rational], genus: u32) -> Result<Vec<Rational>> {
    let c = cartan(s.len())?;
    let rhs: Vec<Rational> = s
        .iter()
        .map(|sk| int(2 * (genus as i64 - 1)) - sk)
        .collect();
    Ok(c.apply_inverse(&rhs))
}

pub fn masses(strengths: &SingularStrengths) -> Result<Vec<Rational>> {
    masses_from_sums(&strengths.column_sums(), strengths.genus())
}

fn verdict(d: &[Rational], genus: u32) -> Verdict {
    let n = d.len();
    let mut per_l = Vec::with_capacity(n);
    let mut lhs = Rational::zero();
    for l in 1..=n {
        lhs += &d[n - l];
        let bound = BigRational::from_integer(BigInt::from(
            (l * (n - l + 1)) as i64 * (genus as i64 - 1),
        ));
        per_l.push(lhs < bound);
    }
    let exists = per_l.iter().all(|&b| b);
    Verdict { per_l, exists }
}

/// Full report from column sums alone.
pub fn report_from_sums(
    s: &[Rational],
    genus: u32,
    variant: Variant,
) -> Result<StabilityReport> {
    let n = s.len();
    let d_paper = exponents_from_sums(s, Variant::Paper);
    let d_derived = exponents_from_sums(s, Variant::Derived);
    let Degrees {
        deg_e,
        deg_f,
        slopes_f,
    } = degrees_from_sums(s, genus, variant);
    let masses = masses_from_sums(s, genus)?;
    let verdict_paper = verdict(&d_paper, genus);
    let verdict_derived = verdict(&d_derived, genus);
    let variants_agree = verdict_paper.exists == verdict_derived.exists;
    Ok(StabilityReport {
        n,
        genus,
        variant,
        s: s.to_vec(),
        d_paper,
        d_derived,
        deg_e,
        deg_f,
        slopes_f,
        masses,
        verdict_paper,
        verdict_derived,
        variants_agree,
    })
}

pub fn criterion(strengths: &SingularStrengths, variant: Variant) -> Result<StabilityReport> {
    report_from_sums(&strengths.column_sums(), strengths.genus(), variant)
}

/// The unpunctured case: a solution exists iff `genus >= 2`.
pub fn criterion_smooth(n: usize, genus: u32, variant: Variant) -> Result<StabilityReport> {
    report_from_sums(&vec![Rational::zero(); n], genus, variant)
}
