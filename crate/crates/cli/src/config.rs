use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use toda_core::solver::SolverOptions;
use toda_core::stability::{Puncture, ScanParams, SingularStrengths, Variant};
use toda_core::torus::{FourierMode, TorusDomain};

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum VariantSelector {
    Paper,
    Derived,
    Both,
}

impl VariantSelector {
    /// Variant used for degrees and slopes; `both` reports the derived ones.
    pub fn primary(self) -> Variant {
        match self {
            VariantSelector::Paper => Variant::Paper,
            VariantSelector::Derived | VariantSelector::Both => Variant::Derived,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TorusConfig {
    pub lx: f64,
    pub ly: f64,
    /// Nodes per side.
    pub grid: usize,
    #[serde(default)]
    pub conformal: Vec<FourierMode>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
    /// Sup-norm of band-limited noise added to the starting point.
    pub perturbation: f64,
    /// Extra randomized starts for the uniqueness probe; 0 skips it.
    pub uniqueness_starts: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let o = SolverOptions::default();
        SolverConfig {
            tol: o.tol,
            max_iter: o.max_iter,
            seed: 0,
            perturbation: 0.0,
            uniqueness_starts: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifyThresholds {
    /// Max-norm of the Toda residual.
    pub residual: f64,
    pub mass_relative: f64,
    /// Relative tolerance on fitted slopes; absolute where the target is 0.
    pub slope_relative: f64,
    pub oscillation: f64,
    /// Max-norm of the diagonal curvature residual away from punctures.
    pub curvature: f64,
    pub curvature_off: f64,
}

impl Default for VerifyThresholds {
    fn default() -> Self {
        VerifyThresholds {
            residual: 1e-8,
            mass_relative: 1e-2,
            slope_relative: 0.02,
            oscillation: 0.05,
            curvature: 1e-6,
            curvature_off: 1e-10,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub n: usize,
    pub genus: u32,
    #[serde(default = "default_variant")]
    pub variant: VariantSelector,
    #[serde(default)]
    pub torus: Option<TorusConfig>,
    #[serde(default)]
    pub punctures: Vec<Puncture>,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub verify: VerifyThresholds,
    #[serde(default)]
    pub output: Option<String>,
}

fn default_variant() -> VariantSelector {
    VariantSelector::Derived
}

/// Command-line values that take precedence over the file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub variant: Option<VariantSelector>,
    pub grid: Option<usize>,
    pub tol: Option<f64>,
    pub seed: Option<u64>,
    pub out: Option<String>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::invalid(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::invalid(format!("bad config: {e}")))
    }

    pub fn apply(mut self, o: &Overrides) -> Result<Self, CliError> {
        if let Some(v) = o.variant {
            self.variant = v;
        }
        if let Some(g) = o.grid {
            match self.torus.as_mut() {
                Some(t) => t.grid = g,
                None => return Err(CliError::invalid("--grid given but the config has no torus block")),
            }
        }
        if let Some(t) = o.tol {
            self.solver.tol = t;
        }
        if let Some(s) = o.seed {
            self.solver.seed = s;
        }
        if let Some(out) = &o.out {
            self.output = Some(out.clone());
        }
        Ok(self)
    }

    /// `None` for the unpunctured case.
    pub fn strengths(&self) -> Result<Option<SingularStrengths>, CliError> {
        if self.punctures.is_empty() {
            if self.n == 0 {
                return Err(CliError::invalid("system size n must be at least 1"));
            }
            return Ok(None);
        }
        Ok(Some(SingularStrengths::new(self.n, self.genus, self.punctures.clone())?))
    }

    pub fn domain(&self) -> Result<TorusDomain, CliError> {
        let t = self
            .torus
            .as_ref()
            .ok_or_else(|| CliError::invalid("config has no torus block"))?;
        let d = TorusDomain::new(t.lx, t.ly, t.grid, t.grid)?;
        if t.conformal.is_empty() {
            Ok(d)
        } else {
            Ok(d.with_conformal(t.conformal.clone())?)
        }
    }

    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions {
            tol: self.solver.tol,
            max_iter: self.solver.max_iter,
            ..SolverOptions::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScanConfig {
    pub n_max: usize,
    pub genus_max: u32,
    pub count: usize,
    pub seed: u64,
}

impl Default for ScanConfig {
    fn default() -> Self {
        ScanConfig {
            n_max: 5,
            genus_max: 3,
            count: 10_000,
            seed: 1,
        }
    }
}

impl ScanConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::invalid(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::invalid(format!("bad scan config: {e}")))
    }

    pub fn params(&self) -> ScanParams {
        ScanParams {
            n_max: self.n_max,
            genus_max: self.genus_max,
            count: self.count,
            seed: self.seed,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> RunConfig {
        serde_json::from_str(
            r#"{"n": 1, "genus": 1, "torus": {"lx": 1, "ly": 2, "grid": 32},
                "punctures": [{"label": "p", "mu": [{"num": -1, "den": 2}]}]}"#,
        )
        .unwrap()
    }

    #[test]
    fn defaults_and_overrides() {
        let c = base();
        assert_eq!(c.variant, VariantSelector::Derived);
        assert_eq!(c.solver.tol, SolverOptions::default().tol);
        let c = c
            .apply(&Overrides {
                variant: Some(VariantSelector::Both),
                grid: Some(64),
                tol: Some(1e-10),
                seed: Some(4),
                out: Some("x".into()),
            })
            .unwrap();
        assert_eq!(c.torus.as_ref().unwrap().grid, 64);
        assert_eq!((c.solver.tol, c.solver.seed), (1e-10, 4));
        assert_eq!(c.output.as_deref(), Some("x"));
        assert_eq!(c.domain().unwrap().ly(), 2.0);
    }

    #[test]
    fn rejects_unknown_fields_and_stray_grid() {
        let bad = r#"{"n": 1, "genus": 1, "colour": "red"}"#;
        assert!(serde_json::from_str::<RunConfig>(bad).is_err());
        let smooth: RunConfig = serde_json::from_str(r#"{"n": 2, "genus": 3}"#).unwrap();
        assert!(smooth.strengths().unwrap().is_none());
        let err = smooth
            .apply(&Overrides { grid: Some(8), ..Default::default() })
            .unwrap_err();
        assert_eq!(err.code, crate::EXIT_INVALID);
    }
}
