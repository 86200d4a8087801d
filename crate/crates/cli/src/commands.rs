use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use toda_core::higgs::{curvature_from_residual, higgs_data};
use toda_core::rational::{serde_rat_vec, Rational};
use toda_core::solver::{
    asymptotic_fit, band_limited_noise, newton_solve, uniqueness_probe, verify_identities,
    AsymptoticFit, IdentityReport, IterationLog, SolveStatus, TodaProblem, TodaState,
    UniquenessReport,
};
use toda_core::stability::{consistency_scan, criterion, criterion_smooth, StabilityReport};
use toda_core::torus::{read_field, write_field, Field, SidecarPuncture};

use crate::config::{RunConfig, ScanConfig, VariantSelector, VerifyThresholds};
use crate::{
    CliError, EXIT_DISAGREE, EXIT_DIVERGED, EXIT_ERROR, EXIT_NOT_EXISTS, EXIT_OK,
    EXIT_VERIFY_FAILED,
};

/// Exit code and the JSON report of one command.
#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub code: i32,
    pub report: String,
}

fn to_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| CliError {
        code: EXIT_ERROR,
        message: format!("cannot serialize report: {e}"),
    })?;
    s.push('\n');
    Ok(s)
}

fn io_error(path: &Path, e: std::io::Error) -> CliError {
    CliError {
        code: EXIT_ERROR,
        message: format!("{}: {e}", path.display()),
    }
}

fn write_report(dir: Option<&str>, name: &str, text: &str) -> Result<(), CliError> {
    if let Some(dir) = dir {
        let dir = Path::new(dir);
        fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
        let path = dir.join(name);
        fs::write(&path, text).map_err(|e| io_error(&path, e))?;
    }
    Ok(())
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckReport {
    pub variant: VariantSelector,
    pub exists_paper: bool,
    pub exists_derived: bool,
    pub variants_agree: bool,
    pub exit_code: i32,
    pub stability: StabilityReport,
}

/// Existence verdict: 0 exists, 3 does not, 4 if `both` was asked for and
/// the two exponent conventions disagree.
pub fn check(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let variant = cfg.variant.primary();
    let stability = match cfg.strengths()? {
        Some(s) => criterion(&s, variant)?,
        None => criterion_smooth(cfg.n, cfg.genus, variant)?,
    };
    let exists_paper = stability.verdict_paper.exists;
    let exists_derived = stability.verdict_derived.exists;
    let verdict_code = |exists: bool| if exists { EXIT_OK } else { EXIT_NOT_EXISTS };
    let code = match cfg.variant {
        VariantSelector::Paper => verdict_code(exists_paper),
        VariantSelector::Derived => verdict_code(exists_derived),
        VariantSelector::Both if !stability.variants_agree => EXIT_DISAGREE,
        VariantSelector::Both => verdict_code(exists_derived),
    };
    let report = to_json(&CheckReport {
        variant: cfg.variant,
        exists_paper,
        exists_derived,
        variants_agree: stability.variants_agree,
        exit_code: code,
        stability,
    })?;
    write_report(cfg.output.as_deref(), "check.json", &report)?;
    Ok(Outcome { code, report })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldEntry {
    pub name: String,
    /// `v`, `u` (masked near punctures) or `exp_u`.
    pub kind: String,
    /// 1-based.
    pub component: usize,
    pub sidecar: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct FitEntry {
    pub puncture: String,
    /// 1-based.
    pub component: usize,
    pub fit: Option<AsymptoticFit>,
    pub rejected: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Manifest {
    pub config: RunConfig,
    pub probe_mode: bool,
    pub criterion_holds: bool,
    /// Exact masses in units of π.
    #[serde(with = "serde_rat_vec")]
    pub masses_exact: Vec<Rational>,
    pub status: SolveStatus,
    pub newton_iterations: usize,
    pub residual_norm: f64,
    pub diagnostic: Option<String>,
    pub history: Vec<IterationLog>,
    pub identities: Option<IdentityReport>,
    pub fits: Vec<FitEntry>,
    pub uniqueness: Option<UniquenessReport>,
    pub fields: Vec<FieldEntry>,
}

/// The parts of a manifest `verify` needs.
#[derive(Deserialize)]
struct ManifestHead {
    config: RunConfig,
    fields: Vec<FieldEntry>,
}

fn sidecar_punctures(problem: &TodaProblem) -> Vec<SidecarPuncture> {
    let g = problem.green();
    (0..g.puncture_count())
        .map(|p| {
            let (x, y) = g.puncture_position(p);
            SidecarPuncture {
                label: g.puncture_label(p).to_string(),
                x,
                y,
                mu: g.puncture_mu(p).to_vec(),
            }
        })
        .collect()
}

fn build_problem(cfg: &RunConfig) -> Result<TodaProblem, CliError> {
    let strengths = cfg
        .strengths()?
        .ok_or_else(|| CliError::invalid("solving needs at least one puncture"))?;
    Ok(TodaProblem::new(strengths, cfg.domain()?, cfg.solver_options())?)
}

fn all_fits(problem: &TodaProblem, state: &TodaState) -> Result<Vec<FitEntry>, CliError> {
    let g = problem.green();
    let mut out = Vec::new();
    for p in 0..g.puncture_count() {
        for k in 0..problem.n() {
            let (fit, rejected) = match asymptotic_fit(problem, state, p, k) {
                Ok(f) => (Some(f), None),
                Err(e @ toda_core::Error::AnnulusOccupied { .. }) => (None, Some(e.to_string())),
                Err(e) => return Err(e.into()),
            };
            out.push(FitEntry {
                puncture: g.puncture_label(p).to_string(),
                component: k + 1,
                fit,
                rejected,
            });
        }
    }
    Ok(out)
}

/// Solve and write a solution directory: 0 converged, 5 otherwise.
pub fn solve(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let out = cfg
        .output
        .as_deref()
        .ok_or_else(|| CliError::invalid("solve needs an output directory (--out)"))?;
    let problem = build_problem(cfg)?;
    let (mut v0, probe_mode) = match problem.initial_guess() {
        Ok(v) => (v, false),
        Err(toda_core::Error::GuessUnavailable { .. }) => (problem.probe_start(), true),
        Err(e) => return Err(e.into()),
    };
    if cfg.solver.perturbation > 0.0 {
        let n = problem.n() as u64;
        for (k, v) in v0.iter_mut().enumerate() {
            let noise = band_limited_noise(
                problem.domain(),
                cfg.solver.perturbation,
                cfg.solver.seed,
                cfg.solver.seed.wrapping_mul(n).wrapping_add(k as u64),
            );
            v.add_scaled(1.0, &noise);
        }
    }
    let state = newton_solve(&problem, v0)?;
    let converged = state.status == SolveStatus::Converged;

    let dir = PathBuf::from(out);
    fs::create_dir_all(&dir).map_err(|e| io_error(&dir, e))?;
    let d = problem.domain();
    let punctures = sidecar_punctures(&problem);
    let near = problem.near_puncture_mask(2.0);
    let mut fields = Vec::new();
    for k in 0..problem.n() {
        let masked = Field::from_vec(
            d.nx(),
            d.ny(),
            state.u[k]
                .data()
                .iter()
                .zip(&near)
                .map(|(&u, &m)| if m { f64::NAN } else { u })
                .collect(),
        )?;
        let exp_u = state.u[k].map(f64::exp);
        for (kind, field) in [("v", &state.v[k]), ("u", &masked), ("exp_u", &exp_u)] {
            let name = format!("{kind}_{}", k + 1);
            let sidecar = write_field(&dir, &name, d, field, &punctures)?;
            fields.push(FieldEntry {
                name,
                kind: kind.to_string(),
                component: k + 1,
                sidecar,
            });
        }
    }

    let (identities, fits, uniqueness) = if converged {
        let uniq = if cfg.solver.uniqueness_starts > 0 {
            Some(uniqueness_probe(&problem, cfg.solver.uniqueness_starts, cfg.solver.seed)?)
        } else {
            None
        };
        (
            Some(verify_identities(&problem, &state)?),
            all_fits(&problem, &state)?,
            uniq,
        )
    } else {
        (None, Vec::new(), None)
    };
    // the output location is not part of the run; leaving it out keeps
    // manifests free of paths and comparable across directories
    let mut recorded = cfg.clone();
    recorded.output = None;
    let manifest = Manifest {
        config: recorded,
        probe_mode,
        criterion_holds: problem.criterion_holds(),
        masses_exact: problem.masses().to_vec(),
        status: state.status,
        newton_iterations: state.newton_iterations,
        residual_norm: state.residual_norm,
        diagnostic: state.diagnostic.clone(),
        history: state.history.clone(),
        identities,
        fits,
        uniqueness,
        fields,
    };
    let report = to_json(&manifest)?;
    let path = dir.join("manifest.json");
    fs::write(&path, &report).map_err(|e| io_error(&path, e))?;
    let code = if converged { EXIT_OK } else { EXIT_DIVERGED };
    Ok(Outcome { code, report })
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckLine {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub pass: bool,
    pub checks: Vec<CheckLine>,
    pub thresholds: VerifyThresholds,
    pub residual_norm: f64,
    pub identities: Option<IdentityReport>,
    pub fits: Vec<FitEntry>,
    /// Max-norm of the diagonal curvature residual off 2-cell neighbourhoods.
    pub curvature_max: Vec<f64>,
    pub curvature_off_max: Vec<f64>,
    /// `max|curv_diag − F(R)|/max(1, max|F(R)|)` with `F(R)` the curvature
    /// predicted from the pointwise Toda residual; an identity, so it is
    /// reported for solutions and non-solutions alike.
    pub curvature_residual_agreement: f64,
}

fn corrupt(msg: impl Into<String>) -> CliError {
    CliError::invalid(msg)
}

fn line(name: impl Into<String>, value: f64, threshold: f64) -> CheckLine {
    CheckLine {
        name: name.into(),
        value,
        threshold,
        pass: value <= threshold,
    }
}

/// Recompute everything from the stored regular parts: 0 if every check
/// passes, 6 if one fails, 2 if the directory is unreadable or corrupt.
pub fn verify(dir: &Path, thresholds: Option<VerifyThresholds>) -> Result<Outcome, CliError> {
    let manifest_path = dir.join("manifest.json");
    let text = fs::read_to_string(&manifest_path)
        .map_err(|e| corrupt(format!("cannot read {}: {e}", manifest_path.display())))?;
    let head: ManifestHead =
        serde_json::from_str(&text).map_err(|e| corrupt(format!("bad manifest: {e}")))?;
    let th = thresholds.unwrap_or_else(|| head.config.verify.clone());
    let problem = build_problem(&head.config)?;
    let d = problem.domain();

    let mut v = Vec::with_capacity(problem.n());
    for k in 1..=problem.n() {
        let entry = head
            .fields
            .iter()
            .find(|f| f.kind == "v" && f.component == k)
            .ok_or_else(|| corrupt(format!("manifest lists no v field for component {k}")))?;
        let (side, field) = read_field(&dir.join(&entry.sidecar))
            .map_err(|e| corrupt(format!("field `{}`: {e}", entry.name)))?;
        if side.nx != d.nx() || side.ny != d.ny() || side.lx != d.lx() || side.ly != d.ly() {
            return Err(corrupt(format!("field `{}` does not match the configured grid", entry.name)));
        }
        if !field.all_finite() {
            return Err(corrupt(format!("field `{}` has non-finite values", entry.name)));
        }
        v.push(field);
    }

    let mut checks = Vec::new();
    let state = match TodaState::evaluate(&problem, v) {
        Ok(s) => s,
        Err(e @ toda_core::Error::Overflow { .. }) => {
            checks.push(line(format!("residual ({e})"), f64::INFINITY, th.residual));
            let report = VerifyReport {
                pass: false,
                checks,
                thresholds: th,
                residual_norm: f64::INFINITY,
                identities: None,
                fits: Vec::new(),
                curvature_max: Vec::new(),
                curvature_off_max: Vec::new(),
                curvature_residual_agreement: f64::NAN,
            };
            let text = to_json(&report)?;
            write_report(dir.to_str(), "verify.json", &text)?;
            return Ok(Outcome {
                code: EXIT_VERIFY_FAILED,
                report: text,
            });
        }
        Err(e) => return Err(e.into()),
    };
    checks.push(line("residual", state.residual_norm, th.residual));

    let masses_positive = problem.masses().iter().all(|m| toda_core::rational::to_f64(m) > 0.0);
    let identities = if masses_positive {
        let id = verify_identities(&problem, &state)?;
        checks.push(line("mass_relative_error", id.max_relative_error, th.mass_relative));
        Some(id)
    } else {
        checks.push(line("masses_positive", f64::INFINITY, th.mass_relative));
        None
    };

    let fits = all_fits(&problem, &state)?;
    for f in &fits {
        if let Some(fit) = &f.fit {
            let tag = format!("{}_{}", f.puncture, f.component);
            let slope_err = if fit.target == 0.0 {
                fit.slope.abs()
            } else {
                (fit.slope - fit.target).abs() / fit.target.abs()
            };
            checks.push(line(format!("slope_{tag}"), slope_err, th.slope_relative));
            checks.push(line(format!("oscillation_{tag}"), fit.oscillation, th.oscillation));
        }
    }

    let hd = higgs_data(&problem, &state)?;
    let near = problem.near_puncture_mask(2.0);
    let curvature_max: Vec<f64> = hd
        .curv_diag
        .iter()
        .map(|f| {
            f.data()
                .iter()
                .zip(&near)
                .filter(|(_, &m)| !m)
                .fold(0.0f64, |acc, (x, _)| acc.max(x.abs()))
        })
        .collect();
    let curvature_off_max: Vec<f64> = hd.curv_off.iter().map(|c| c.max_abs()).collect();
    checks.push(line(
        "curvature",
        curvature_max.iter().cloned().fold(0.0, f64::max),
        th.curvature,
    ));
    checks.push(line(
        "curvature_off",
        curvature_off_max.iter().cloned().fold(0.0, f64::max),
        th.curvature_off,
    ));
    let predicted = curvature_from_residual(&problem.pointwise_residual(&state.v)?);
    let scale = predicted.iter().map(Field::max_abs).fold(1.0, f64::max);
    let agreement = hd
        .curv_diag
        .iter()
        .zip(&predicted)
        .map(|(a, b)| a.zip_map(b, |x, y| x - y).max_abs())
        .fold(0.0, f64::max)
        / scale;
    checks.push(line("curvature_residual_agreement", agreement, 1e-8));

    let pass = checks.iter().all(|c| c.pass);
    let report = VerifyReport {
        pass,
        checks,
        thresholds: th,
        residual_norm: state.residual_norm,
        identities,
        fits,
        curvature_max,
        curvature_off_max,
        curvature_residual_agreement: agreement,
    };
    let text = to_json(&report)?;
    write_report(dir.to_str(), "verify.json", &text)?;
    let code = if pass { EXIT_OK } else { EXIT_VERIFY_FAILED };
    Ok(Outcome { code, report: text })
}

/// Seeded scan of the two exponent conventions. Exit 0, or 6 if the derived
/// verdict ever departs from mass positivity.
pub fn scan(cfg: &ScanConfig, out: Option<&str>) -> Result<Outcome, CliError> {
    let report = consistency_scan(cfg.params())?;
    let code = if report.mass_equivalence_holds {
        EXIT_OK
    } else {
        EXIT_VERIFY_FAILED
    };
    let text = to_json(&report)?;
    write_report(out, "scan.json", &text)?;
    Ok(Outcome { code, report: text })
}
