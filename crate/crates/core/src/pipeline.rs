//! The validate → check → dilate → verify pipeline behind the CLI, and the
//! machine-readable run report.

use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::dilation::{compare_minimal_dilations, hat_checks, MinimalDilation};
use crate::error::{DilationError, Result};
use crate::hat::TruncatedFock;
use crate::instance::{Instance, InstanceFile, Tolerances};
use crate::kernel::{kolmogorov, FactorBackend, KernelWindow};
use crate::lattice::LatticePoint;
use crate::prodsys::ProductSystem;
use crate::report::{lenient_f64, Check, Report};
use crate::representation::CCRepresentation;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_IO: i32 = 2;
pub const EXIT_NOT_DILATABLE: i32 = 3;
pub const EXIT_CHECK_FAILED: i32 = 4;
pub const EXIT_MISMATCH: i32 = 5;

pub const DEFAULT_BOX: usize = 3;
pub const DEFAULT_GUARD: usize = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Validate,
    Check,
    Dilate,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Validate => "validate",
            Command::Check => "check",
            Command::Dilate => "dilate",
        }
    }
}

/// Values given on the command line; they win over the instance file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub l: Option<LatticePoint>,
    pub m: Option<LatticePoint>,
    pub guard: Option<usize>,
    /// Replaces the validation tolerance.
    pub tol: Option<f64>,
    pub probes: Option<LatticePoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Parameters {
    #[serde(rename = "L")]
    pub l: LatticePoint,
    #[serde(rename = "M")]
    pub m: LatticePoint,
    pub guard: usize,
    pub tolerances: Tolerances,
    /// Box over which Brehmer and doubly commuting are checked.
    pub probes: LatticePoint,
}

impl Parameters {
    pub fn resolve(file: &InstanceFile, o: &Overrides) -> Result<Parameters> {
        let k = file.k;
        let from_file = file.parameters.clone().unwrap_or_default();
        let mut tolerances = from_file.tolerances.unwrap_or_default();
        if let Some(t) = o.tol {
            tolerances.validation = t;
        }
        let l = o.l.clone().or(from_file.l).unwrap_or_else(|| LatticePoint::uniform(k, DEFAULT_BOX));
        let m = o.m.clone().or(from_file.m).unwrap_or_else(|| LatticePoint::uniform(k, DEFAULT_BOX));
        let probes = o.probes.clone().or(from_file.probes).unwrap_or_else(|| l.clone());
        for (name, p) in [("L", &l), ("M", &m), ("probes", &probes)] {
            if p.k() != k {
                return Err(DilationError::invalid(format!("{name} = {p} must have {k} coordinates")));
            }
        }
        Ok(Parameters {
            l,
            m,
            guard: o.guard.or(from_file.guard).unwrap_or(DEFAULT_GUARD),
            tolerances,
            probes,
        })
    }

    fn overrides(&self) -> Overrides {
        Overrides {
            l: Some(self.l.clone()),
            m: Some(self.m.clone()),
            guard: Some(self.guard),
            tol: Some(self.tolerances.validation),
            probes: Some(self.probes.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowSummary {
    #[serde(rename = "M")]
    pub m: LatticePoint,
    /// Numerical rank of the window Gram.
    pub rank: usize,
    #[serde(with = "lenient_f64")]
    pub psd_margin: f64,
    /// Dimension of the block space `𝓗_L`.
    pub block_space_dim: usize,
    /// Dimension of the minimal dilation space spanned by the generating
    /// vectors, when a dilation was built.
    pub dilation_dim: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NsWitness {
    /// 1-based generator indices.
    pub v: Vec<usize>,
    pub s: LatticePoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hypotheses {
    #[serde(with = "lenient_f64")]
    pub doubly_commuting_residual: f64,
    /// Minimum eigenvalue of the Brehmer operators over the probe box.
    #[serde(with = "lenient_f64")]
    pub ns_min_eigenvalue: f64,
    pub ns_witness: Option<NsWitness>,
}

#[allow(non_snake_case)]
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Verdicts {
    pub valid: bool,
    pub doubly_commuting: Option<bool>,
    pub satisfies_NS: Option<bool>,
    pub dilatable: Option<bool>,
    pub dilation_verified: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub command: Command,
    pub instance_digest: String,
    pub parameters: Parameters,
    pub validation: Vec<Check>,
    pub hypotheses: Option<Hypotheses>,
    pub window: Option<WindowSummary>,
    pub checks: Vec<Check>,
    pub verdicts: Verdicts,
    pub diagnostics: Vec<String>,
    /// Wall-clock time; ignored when reports are compared.
    pub timing: Option<Timing>,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| DilationError::Instance(format!("malformed report: {e}")))
    }

    /// The report with the timing field cleared.
    pub fn without_timing(&self) -> RunReport {
        RunReport {
            timing: None,
            ..self.clone()
        }
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Everything built from a valid instance.
pub struct Validated {
    pub representation: Arc<CCRepresentation>,
}

/// Runs every validity check; returns the representation when all pass.
pub fn validate_instance(inst: &Instance, tol: f64) -> (Report, Option<Validated>) {
    let mut report = Report::default();
    for (i, e) in inst.generators.iter().enumerate() {
        for c in e.validate(tol).checks {
            report.push(format!("generator{}_{}", i + 1, c.name), c.residual, c.tolerance);
        }
    }
    for c in inst.sigma.validate(tol).checks {
        report.checks.push(c);
    }
    if !report.passed() {
        return (report, None);
    }
    let system = match ProductSystem::new(inst.algebra.clone(), inst.generators.clone(), inst.flips.clone(), tol) {
        Ok(s) => s,
        Err(e) => {
            let residual = match &e {
                DilationError::IncoherentFlips { residual, .. } => *residual,
                _ => f64::INFINITY,
            };
            report.push("flips", residual, tol);
            report.warn(e.to_string());
            return (report, None);
        }
    };
    for c in &system.report().checks {
        if !c.name.starts_with("generator") {
            report.checks.push(c.clone());
        }
    }
    for w in &system.report().warnings {
        report.warn(w.clone());
    }
    let rep = match CCRepresentation::new(Arc::new(system), inst.sigma.clone(), inst.maps.clone(), tol) {
        Ok(r) => r,
        Err(e) => {
            report.push("representation", f64::INFINITY, tol);
            report.warn(e.to_string());
            return (report, None);
        }
    };
    report.extend(rep.validate(tol));
    if !report.passed() {
        return (report, None);
    }
    (
        report,
        Some(Validated {
            representation: Arc::new(rep),
        }),
    )
}

/// The doubly-commuting and Brehmer hypotheses over the probe box.
pub fn hypotheses(rep: &CCRepresentation, probes: &LatticePoint) -> Result<Hypotheses> {
    let dc = rep.doubly_commuting_max(probes)?;
    let ns = rep.brehmer_min_over_box(probes)?;
    Ok(Hypotheses {
        doubly_commuting_residual: dc,
        ns_min_eigenvalue: ns.as_ref().map_or(f64::INFINITY, |w| w.min_eigenvalue),
        ns_witness: ns.map(|w| NsWitness {
            v: w.v.iter().map(|i| i + 1).collect(),
            s: w.s,
        }),
    })
}

/// Runs `command` on an instance file; returns the report and exit code.
pub fn run(command: Command, file: &InstanceFile, overrides: &Overrides) -> (RunReport, i32) {
    let start = Instant::now();
    let (mut report, code) = run_inner(command, file, overrides);
    report.timing = Some(Timing {
        seconds: start.elapsed().as_secs_f64(),
    });
    (report, code)
}

fn run_inner(command: Command, file: &InstanceFile, overrides: &Overrides) -> (RunReport, i32) {
    let digest = file.digest();
    let params = match Parameters::resolve(file, overrides) {
        Ok(p) => p,
        Err(e) => {
            let p = Parameters::resolve(file, &Overrides::default()).unwrap_or_else(|_| Parameters {
                l: LatticePoint::uniform(file.k, DEFAULT_BOX),
                m: LatticePoint::uniform(file.k, DEFAULT_BOX),
                guard: DEFAULT_GUARD,
                tolerances: Tolerances::default(),
                probes: LatticePoint::uniform(file.k, DEFAULT_BOX),
            });
            let mut r = empty_report(command, digest, p);
            r.diagnostics.push(e.to_string());
            return (r, EXIT_IO);
        }
    };
    let mut out = empty_report(command, digest, params.clone());
    let inst = match file.decode() {
        Ok(i) => i,
        Err(e) => {
            out.diagnostics.push(e.to_string());
            return (out, EXIT_IO);
        }
    };
    let tol = &params.tolerances;
    let (vrep, validated) = validate_instance(&inst, tol.validation);
    out.validation = vrep.checks;
    out.diagnostics.extend(vrep.warnings);
    out.verdicts.valid = validated.is_some();
    let Some(v) = validated else {
        for c in out.validation.iter().filter(|c| !c.pass) {
            out.diagnostics.push(format!("failed invariant {}: residual {:.3e}", c.name, c.residual));
        }
        return (out, EXIT_INVALID);
    };
    if command == Command::Validate {
        return (out, EXIT_OK);
    }
    let rep = v.representation;

    let hyp = match hypotheses(&rep, &params.probes) {
        Ok(h) => h,
        Err(e) => {
            out.diagnostics.push(e.to_string());
            return (out, EXIT_INVALID);
        }
    };
    let dc = hyp.doubly_commuting_residual <= tol.validation;
    out.verdicts.doubly_commuting = Some(dc);
    out.verdicts.satisfies_NS = Some(hyp.ns_min_eigenvalue >= -tol.validation);
    if let Some(w) = &hyp.ns_witness {
        out.diagnostics.push(format!(
            "Brehmer minimum {:.6e} at v={:?}, s={}",
            hyp.ns_min_eigenvalue, w.v, w.s
        ));
    }
    out.hypotheses = Some(hyp);
    if command == Command::Check {
        return (out, EXIT_OK);
    }

    match dilate(&rep, &params, dc, &mut out) {
        Ok(code) => (out, code),
        Err(e) => {
            out.diagnostics.push(e.to_string());
            if out.verdicts.dilatable == Some(true) {
                out.verdicts.dilation_verified = Some(false);
                (out, EXIT_CHECK_FAILED)
            } else {
                (out, EXIT_INVALID)
            }
        }
    }
}

fn empty_report(command: Command, digest: String, parameters: Parameters) -> RunReport {
    RunReport {
        command,
        instance_digest: digest,
        parameters,
        validation: Vec::new(),
        hypotheses: None,
        window: None,
        checks: Vec::new(),
        verdicts: Verdicts::default(),
        diagnostics: Vec::new(),
        timing: None,
    }
}

fn dilate(rep: &Arc<CCRepresentation>, params: &Parameters, dc: bool, out: &mut RunReport) -> Result<i32> {
    let tol = params.tolerances.dilation();
    let space = Arc::new(TruncatedFock::new(rep.clone(), params.l.clone())?);
    let hat = hat_checks(&space, &tol, dc)?;
    let window = Arc::new(KernelWindow::new(space.clone(), params.m.clone())?);
    let margin = window.psd_margin();
    out.window = Some(WindowSummary {
        m: params.m.clone(),
        rank: window.numerical_rank(),
        psd_margin: margin,
        block_space_dim: space.dim(),
        dilation_dim: None,
    });
    let dilatable = margin >= -tol.psd;
    out.verdicts.dilatable = Some(dilatable);
    out.checks.extend(hat.checks);
    if !dilatable {
        out.verdicts.dilation_verified = Some(false);
        out.diagnostics.push(format!("window Gram is not positive semidefinite: margin {margin:.6e}"));
        return Ok(EXIT_NOT_DILATABLE);
    }

    let dil = MinimalDilation::new(window.clone(), FactorBackend::Eigen, params.guard, tol)?;
    if let Some(w) = out.window.as_mut() {
        w.dilation_dim = Some(dil.k_dim());
    }
    out.checks.extend(dil.verify_regular_dilation()?.checks);
    if dc {
        match dil.verify_doubly_commuting_v()? {
            Some(r) => out.checks.push(Check::new("doubly_commuting_V", r, tol.adjoint)),
            None => out
                .diagnostics
                .push("doubly_commuting_V skipped: no probe fits inside the guarded window".into()),
        }
    }
    let other = kolmogorov(&window, tol.psd, FactorBackend::PivotedCholesky)?;
    out.checks.push(Check::new(
        "uniqueness",
        compare_minimal_dilations(dil.factor(), &other),
        tol.uniqueness,
    ));
    let verified = out.checks.iter().all(|c| c.pass);
    out.verdicts.dilation_verified = Some(verified);
    for c in out.checks.iter().filter(|c| !c.pass) {
        out.diagnostics.push(format!(
            "check {} failed: residual {:.3e} > {:.1e}",
            c.name, c.residual, c.tolerance
        ));
    }
    Ok(if verified { EXIT_OK } else { EXIT_CHECK_FAILED })
}

/// Result of comparing a fresh run against a reference report.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Comparison {
    pub warnings: Vec<String>,
    pub mismatches: Vec<String>,
}

impl Comparison {
    pub fn matches(&self) -> bool {
        self.mismatches.is_empty()
    }
}

fn banded(name: &str, reference: f64, fresh: f64, tol: f64, cmp: &mut Comparison) {
    if reference == fresh || (reference.is_nan() && fresh.is_nan()) {
        return;
    }
    let drift = (reference - fresh).abs();
    if drift <= tol {
        return;
    }
    let msg = format!("{name}: reference {reference:.6e}, fresh {fresh:.6e} (drift {drift:.3e}, tolerance {tol:.1e})");
    if drift <= 10.0 * tol {
        cmp.warnings.push(msg);
    } else {
        cmp.mismatches.push(msg);
    }
}

fn compare_checks(section: &str, reference: &[Check], fresh: &[Check], cmp: &mut Comparison) {
    for r in reference {
        match fresh.iter().find(|f| f.name == r.name) {
            None => cmp.mismatches.push(format!("{section} {}: missing from fresh run", r.name)),
            Some(f) => {
                if f.pass != r.pass {
                    cmp.mismatches.push(format!("{section} {}: pass {} vs {}", r.name, r.pass, f.pass));
                }
                banded(&format!("{section} {}", r.name), r.residual, f.residual, r.tolerance, cmp);
            }
        }
    }
    for f in fresh {
        if !reference.iter().any(|r| r.name == f.name) {
            cmp.mismatches.push(format!("{section} {}: not in reference", f.name));
        }
    }
}

/// Compares verdicts exactly and residuals within their tolerance; drift
/// up to ten times the tolerance only warns.
pub fn compare_reports(reference: &RunReport, fresh: &RunReport) -> Comparison {
    let mut cmp = Comparison::default();
    if reference.instance_digest != fresh.instance_digest {
        cmp.mismatches.push("instance digest differs".into());
    }
    if reference.command != fresh.command {
        cmp.mismatches.push("command differs".into());
    }
    let (rv, fv) = (&reference.verdicts, &fresh.verdicts);
    let pairs = [
        ("valid", Some(rv.valid), Some(fv.valid)),
        ("doubly_commuting", rv.doubly_commuting, fv.doubly_commuting),
        ("satisfies_NS", rv.satisfies_NS, fv.satisfies_NS),
        ("dilatable", rv.dilatable, fv.dilatable),
        ("dilation_verified", rv.dilation_verified, fv.dilation_verified),
    ];
    for (name, a, b) in pairs {
        if a != b {
            cmp.mismatches.push(format!("verdict {name}: reference {a:?}, fresh {b:?}"));
        }
    }
    compare_checks("validation", &reference.validation, &fresh.validation, &mut cmp);
    compare_checks("check", &reference.checks, &fresh.checks, &mut cmp);
    let tol = &reference.parameters.tolerances;
    match (&reference.hypotheses, &fresh.hypotheses) {
        (Some(a), Some(b)) => {
            banded("doubly_commuting_residual", a.doubly_commuting_residual, b.doubly_commuting_residual, tol.validation, &mut cmp);
            banded("ns_min_eigenvalue", a.ns_min_eigenvalue, b.ns_min_eigenvalue, tol.validation, &mut cmp);
        }
        (None, None) => {}
        _ => cmp.mismatches.push("hypotheses present in only one report".into()),
    }
    match (&reference.window, &fresh.window) {
        (Some(a), Some(b)) => {
            if a.rank != b.rank || a.dilation_dim != b.dilation_dim || a.m != b.m {
                cmp.mismatches.push(format!(
                    "window: rank {} / {:?} vs {} / {:?}",
                    a.rank, a.dilation_dim, b.rank, b.dilation_dim
                ));
            }
            banded("psd_margin", a.psd_margin, b.psd_margin, tol.psd, &mut cmp);
        }
        (None, None) => {}
        _ => cmp.mismatches.push("window present in only one report".into()),
    }
    cmp
}

/// Reruns the reference's command with its echoed parameters and compares.
pub fn verify(file: &InstanceFile, reference: &RunReport) -> (RunReport, Comparison) {
    let (fresh, _) = run(reference.command, file, &reference.parameters.overrides());
    let cmp = compare_reports(reference, &fresh);
    (fresh, cmp)
}
