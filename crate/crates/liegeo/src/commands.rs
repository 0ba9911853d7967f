//! Subcommand bodies. Each writes its artifacts plus a manifest and returns
//! the JSON summary that is also printed on stdout.

use std::path::Path;

use liegeo_core::criteria::{self, CriterionReport, CriterionStatus, NonsteadyVerdict, SteadyStatus};
use liegeo_core::curvature;
use liegeo_core::dynamics::{self, GeodesicTrajectory};
use liegeo_core::jacobi::{self, ScanSettings};
use liegeo_core::locus::{self, LocusSlice};
use liegeo_core::metric::{MetricOperator, MetricVariant};
use liegeo_core::AlgebraElement;
use rayon::prelude::*;
use serde_json::{json, Map, Value};

use crate::config::{CriterionKind, GroupSpec, RunConfig, Setup};
use crate::output::{conjugate_json, locus_svg, Artifacts};
use crate::CliError;

pub struct Outcome {
    pub summary: Value,
    /// The command asked for a verdict that does not apply.
    pub inapplicable: Option<String>,
}

fn scan_settings(cfg: &RunConfig) -> ScanSettings {
    ScanSettings {
        time_tol: cfg.tolerances.time,
        sigma_rel: cfg.tolerances.sigma_rel,
        ..ScanSettings::default()
    }
}

fn integrate(cfg: &RunConfig, m: &MetricOperator, u0: &AlgebraElement, horizon: f64) -> Result<GeodesicTrajectory, CliError> {
    Ok(dynamics::integrate_euler_arnold(m, u0, horizon, cfg.step().min(horizon))?)
}

fn finish(art: &mut Artifacts, command: &str, cfg: &RunConfig, summary: Value) -> Result<Value, CliError> {
    art.json("", summary.clone())?;
    art.manifest(command, cfg, json!({}))?;
    let mut out = Map::new();
    out.insert("config_hash".into(), Value::String(art.hash().to_string()));
    if let Value::Object(m) = summary {
        out.extend(m);
    }
    out.insert(
        "files".into(),
        Value::Array(art.files().iter().map(|p| Value::String(p.display().to_string())).collect()),
    );
    Ok(Value::Object(out))
}

pub fn cmd_curvature(cfg: &RunConfig, base: &Path) -> Result<Outcome, CliError> {
    let s = cfg.setup(base)?;
    let m = &s.metric;
    let mut art = Artifacts::new(&cfg.out, "curvature", cfg.hash())?;
    let ric = curvature::ricci_matrix(m);
    let labels = s.basis.labels().to_vec();
    let mut header = vec!["row".to_string()];
    header.extend(labels.iter().cloned());
    let rows = (0..m.dim()).map(|i| {
        let mut r = vec![i as f64];
        r.extend(ric.matrix.row(i).iter());
        r
    });
    art.csv("-ricci", &header, rows)?;

    let mut summary = json!({
        "group": cfg.group.to_string(),
        "labels": labels,
        "ricci_diagonal": ric.diagonal(),
        "symmetry_residual": ric.symmetry_residual(),
        "diagonality_residual": ric.diagonality_residual,
    });
    let closed = match (m.variant(), cfg.group) {
        (MetricVariant::RigidBody(mu), GroupSpec::So(_)) => Some(curvature::ricci_rigid_body_closed_form(mu)?),
        (MetricVariant::DiagonalQuadratic(_), GroupSpec::So(n)) => curvature::diagonal_lambda(m)
            .map(|l| curvature::ricci_rigid_closed_form(n, &l))
            .transpose()?,
        _ => None,
    };
    if let Some(c) = closed {
        let err = c
            .iter()
            .zip(ric.diagonal())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        summary["closed_form"] = json!({ "diagonal": c, "max_error": err });
    }
    if let Some(delta) = m.cheeger_delta() {
        if curvature::cartan_condition_check(&s.basis) {
            let fit = curvature::block_einstein_fit(m);
            let beta = curvature::beta_constants(&s.basis)?;
            let (c1, c2) = curvature::block_einstein_constants(beta.beta_g, beta.beta_h, delta);
            let mut block = json!({
                "C1": fit.c1,
                "C2": fit.c2,
                "residual": fit.residual,
                "measured_beta": { "beta_g": beta.beta_g, "beta_h": beta.beta_h, "residual": beta.residual },
                "closed_form": { "C1": c1, "C2": c2, "residual": curvature::block_einstein_residual(m, &ric, c1, c2) },
            });
            if let GroupSpec::SuWithSo(n) = cfg.group {
                let (bg, bh) = curvature::beta_constants_su_so(n);
                let (t1, t2) = curvature::block_einstein_constants(bg, bh, delta);
                block["tabulated"] = json!({
                    "beta_g": bg, "beta_h": bh, "C1": t1, "C2": t2,
                    "residual": curvature::block_einstein_residual(m, &ric, t1, t2),
                });
            }
            summary["block_einstein"] = block;
        }
    }
    Ok(Outcome {
        summary: finish(&mut art, "curvature", cfg, summary)?,
        inapplicable: None,
    })
}

pub fn cmd_geodesic(cfg: &RunConfig, base: &Path) -> Result<Outcome, CliError> {
    let s = cfg.setup(base)?;
    let u0 = s.u0()?;
    let tr = integrate(cfg, &s.metric, u0, cfg.horizon)?;
    let mut art = Artifacts::new(&cfg.out, "geodesic", cfg.hash())?;
    let labels = s.basis.labels();
    let k = tr.frames[0].matrix.nrows();
    let mut header = vec!["t".to_string()];
    header.extend(labels.iter().map(|l| format!("u_{l}")));
    for i in 0..k {
        for j in 0..k {
            header.push(format!("g_{}_{}", i + 1, j + 1));
        }
    }
    header.push("k".into());
    header.push("l".into());
    let rows = (0..tr.len()).map(|i| {
        let mut r = vec![tr.times[i]];
        r.extend(tr.velocities[i].iter());
        let g = &tr.frames[i].matrix;
        for a in 0..k {
            for b in 0..k {
                r.push(g[(a, b)]);
            }
        }
        r.push(tr.conserved[i].0);
        r.push(tr.conserved[i].1);
        r
    });
    art.csv("", &header, rows)?;
    let (dk, dl) = tr.conservation_drift();
    let mut summary = json!({
        "steps": tr.len() - 1,
        "dt": tr.dt,
        "horizon": tr.end_time(),
        "final_velocity": tr.velocities[tr.len() - 1].as_slice(),
        "drift_k": dk,
        "drift_l": dl,
        "frame_defect": tr.max_frame_defect(),
        "momentum_residual": tr.momentum_residual(),
    });
    if s.metric.cheeger_delta().is_some() {
        let (g, v) = dynamics::cheeger_geodesic_exact(&s.metric, u0, tr.end_time())?;
        let last = tr.len() - 1;
        summary["exact"] = json!({
            "frame_error": tr.frames[last].distance(&g),
            "velocity_error": (&tr.velocities[last] - v).amax(),
        });
    }
    Ok(Outcome {
        summary: finish(&mut art, "geodesic", cfg, summary)?,
        inapplicable: None,
    })
}

/// A criterion report plus textual notes (reasons, verdict labels).
pub struct Verdict {
    pub report: CriterionReport,
    pub notes: Vec<(&'static str, String)>,
}

impl Verdict {
    fn plain(report: CriterionReport) -> Self {
        Verdict {
            report,
            notes: Vec::new(),
        }
    }

    fn with(report: CriterionReport, key: &'static str, note: String) -> Self {
        Verdict {
            report,
            notes: vec![(key, note)],
        }
    }

    pub fn reason(&self) -> Option<&str> {
        self.notes.iter().find(|(k, _)| *k == "reason").map(|(_, v)| v.as_str())
    }
}

fn inapplicable_report(criterion: &'static str, reason: String) -> Verdict {
    let report = CriterionReport {
        criterion,
        status: CriterionStatus::Inapplicable,
        conjugate: None,
        diagnostics: Vec::new(),
    };
    Verdict::with(report, "reason", reason)
}

/// Core errors that only say "does not apply" become an inapplicable report.
fn soften(criterion: &'static str, r: Result<Verdict, CliError>) -> Result<Verdict, CliError> {
    match r {
        Err(CliError::Inapplicable(reason)) => Ok(inapplicable_report(criterion, reason)),
        other => other,
    }
}

pub fn run_criterion(kind: CriterionKind, cfg: &RunConfig, s: &Setup) -> Result<Verdict, CliError> {
    let name = kind.as_str();
    soften(name, criterion_inner(kind, name, cfg, s))
}

fn criterion_inner(kind: CriterionKind, name: &'static str, cfg: &RunConfig, s: &Setup) -> Result<Verdict, CliError> {
    let m = &s.metric;
    let u0 = s.u0()?;
    let found = |r: &jacobi::ConjugateReport| {
        if r.conjugate_times.is_empty() {
            CriterionStatus::NotDetected
        } else {
            CriterionStatus::Detected
        }
    };
    match kind {
        CriterionKind::Closed => {
            let tau = match cfg.tau {
                Some(t) => t,
                None => match dynamics::closed_biinvariant_time(m, u0, cfg.horizon)? {
                    Some(t) => t,
                    None => return Ok(inapplicable_report(name, "exp(t Λu0) does not close within the horizon".into())),
                },
            };
            let steps = (tau / cfg.step()).ceil().max(1.0);
            let tr = dynamics::integrate_euler_arnold(m, u0, tau, tau / steps)?;
            let v = jacobi::closed_geodesic_conjugacy(&tr, tau)?;
            let status = if !v.isometric {
                CriterionStatus::Inapplicable
            } else if v.conjugate {
                CriterionStatus::Detected
            } else {
                CriterionStatus::NotDetected
            };
            Ok(Verdict::plain(CriterionReport {
                criterion: name,
                status,
                conjugate: Some(v.report()),
                diagnostics: vec![
                    ("tau".into(), tau),
                    ("isometry_residual".into(), v.isometry_residual),
                    ("field_norm_at_tau".into(), v.field_norm_at_tau),
                ],
            }))
        }
        CriterionKind::SteadyDet => {
            let c = criteria::steady_operators(m, u0)?;
            let mut diagnostics = vec![
                ("sylvester_sigma_ratio".into(), c.sylvester_sigma_ratio),
                ("kernel_dim".into(), c.kernel_dim as f64),
                ("complement_residual".into(), c.complement_residual),
            ];
            if c.status != SteadyStatus::Applicable {
                let report = CriterionReport {
                    criterion: name,
                    status: CriterionStatus::Inapplicable,
                    conjugate: None,
                    diagnostics,
                };
                return Ok(Verdict::with(report, "reason", c.status.as_str().into()));
            }
            diagnostics.push(("sylvester_residual".into(), c.sylvester_residual.unwrap_or(f64::NAN)));
            let rep = criteria::steady_determinant_scan(&c, cfg.horizon, cfg.samples)?;
            Ok(Verdict::plain(CriterionReport {
                criterion: name,
                status: found(&rep),
                conjugate: Some(rep),
                diagnostics,
            }))
        }
        CriterionKind::SteadyBlocks => {
            let (data, rep) = criteria::commuting_block_scan(m, u0)?;
            let mut diagnostics = vec![
                ("lambda".into(), data.lambda),
                ("kernel_dim".into(), data.kernel_dim as f64),
                ("eigen_residual".into(), data.eigen_residual),
                ("commutator_residual".into(), data.commutator_residual),
                ("pairing_residual".into(), data.pairing_residual),
                ("stable".into(), if data.stable { 1.0 } else { 0.0 }),
            ];
            for (j, b) in data.blocks.iter().enumerate() {
                diagnostics.push((format!("block{j}_epsilon"), b.epsilon));
                diagnostics.push((format!("block{j}_alpha"), b.alpha));
                diagnostics.push((format!("block{j}_beta"), b.beta));
                diagnostics.push((format!("block{j}_d"), b.d));
            }
            Ok(Verdict::plain(CriterionReport {
                criterion: name,
                status: found(&rep),
                conjugate: Some(rep),
                diagnostics,
            }))
        }
        CriterionKind::Misiolek => {
            let scan = curvature::misiolek_scan(m, u0, cfg.random_directions, cfg.seed)?;
            Ok(Verdict::plain(CriterionReport {
                criterion: name,
                status: if scan.detected {
                    CriterionStatus::Detected
                } else {
                    CriterionStatus::NotDetected
                },
                conjugate: None,
                diagnostics: vec![("minimum".into(), scan.minimum), ("samples".into(), scan.samples as f64)],
            }))
        }
        CriterionKind::NonsteadyPhi => {
            let tr = integrate(cfg, m, u0, cfg.horizon)?;
            let rep = criteria::nonsteady_quadratic_criterion(&tr, cfg.horizon)?;
            let mut diagnostics = vec![
                ("psi_min".into(), rep.psi_min),
                ("psi_max".into(), rep.psi_max),
                ("phi_min".into(), rep.phi_min),
                ("phi_max".into(), rep.phi_max),
                ("orthogonality".into(), rep.orthogonality),
            ];
            if rep.verdict == NonsteadyVerdict::Degenerate {
                let report = CriterionReport {
                    criterion: name,
                    status: CriterionStatus::Inapplicable,
                    conjugate: None,
                    diagnostics,
                };
                return Ok(Verdict::with(report, "reason", "the moving frame degenerates".into()));
            }
            let tau = cfg.tau.unwrap_or(cfg.horizon).min(tr.end_time());
            let tau = tr.times[tr.index_of_time(tau).unwrap_or(tr.len() - 1)];
            let field = criteria::nonsteady_test_field(&tr, tau)?;
            diagnostics.push(("tau".into(), tau));
            diagnostics.push(("reduced_value".into(), field.reduced_value));
            diagnostics.push(("direct_value".into(), field.direct_value));
            let report = CriterionReport {
                criterion: name,
                status: if field.direct_value < 0.0 {
                    CriterionStatus::Detected
                } else {
                    CriterionStatus::NotDetected
                },
                conjugate: None,
                diagnostics,
            };
            Ok(Verdict::with(report, "frame_verdict", rep.verdict.as_str().into()))
        }
        CriterionKind::Cheeger => {
            let d = criteria::cheeger_index_data(m, u0)?;
            let mut diagnostics = vec![
                ("delta".into(), d.delta),
                ("beta".into(), d.beta),
                ("p_sq".into(), d.p_sq),
                ("q_sq".into(), d.q_sq),
                ("r_sq".into(), d.r_sq),
                ("qr_sq".into(), d.qr_sq),
            ];
            if let Some(t) = d.tau_index() {
                diagnostics.push(("tau_index".into(), t));
            }
            Ok(Verdict::plain(CriterionReport {
                criterion: name,
                status: if d.condition {
                    CriterionStatus::Detected
                } else {
                    CriterionStatus::NotDetected
                },
                conjugate: None,
                diagnostics,
            }))
        }
    }
}

pub fn criterion_json(v: &Verdict) -> Value {
    let r = &v.report;
    let mut diag = Map::new();
    for (k, x) in &r.diagnostics {
        let value = if x.is_finite() { json!(x) } else { Value::Null };
        diag.insert(k.clone(), value);
    }
    for (k, note) in &v.notes {
        diag.insert((*k).to_string(), Value::String(note.clone()));
    }
    json!({
        "criterion": r.criterion,
        "status": r.status.as_str(),
        "conjugate_times": r.conjugate.as_ref().map(conjugate_json),
        "diagnostics": diag,
    })
}

pub fn cmd_conjugate(cfg: &RunConfig, base: &Path) -> Result<Outcome, CliError> {
    let s = cfg.setup(base)?;
    let u0 = s.u0()?;
    let mut art = Artifacts::new(&cfg.out, "conjugate", cfg.hash())?;
    let (summary, inapplicable) = match cfg.criterion {
        None => {
            let tr = integrate(cfg, &s.metric, u0, cfg.horizon)?;
            let rep = jacobi::find_conjugate_times_with(&tr, cfg.horizon, scan_settings(cfg))?;
            (conjugate_json(&rep), None)
        }
        Some(kind) => {
            let v = run_criterion(kind, cfg, &s)?;
            let why = (v.report.status == CriterionStatus::Inapplicable)
                .then(|| v.reason().unwrap_or(kind.as_str()).to_string());
            (criterion_json(&v), why)
        }
    };
    Ok(Outcome {
        summary: finish(&mut art, "conjugate", cfg, summary)?,
        inapplicable,
    })
}

pub fn cmd_steady(cfg: &RunConfig, base: &Path) -> Result<Outcome, CliError> {
    let s = cfg.setup(base)?;
    let u0 = s.u0()?;
    let mut art = Artifacts::new(&cfg.out, "steady", cfg.hash())?;
    let c = match criteria::steady_operators(&s.metric, u0) {
        Ok(c) => c,
        Err(e) => {
            let e = CliError::from(e);
            return match e {
                CliError::Inapplicable(reason) => {
                    let summary = json!({ "status": "inapplicable", "reason": reason });
                    Ok(Outcome {
                        summary: finish(&mut art, "steady", cfg, summary)?,
                        inapplicable: Some(reason),
                    })
                }
                other => Err(other),
            };
        }
    };
    if c.r.is_some() {
        let n = cfg.samples;
        let step = 0.5 * cfg.horizon / n as f64;
        let rows: Vec<Vec<f64>> = (1..=n)
            .into_par_iter()
            .map(|i| {
                let tau = i as f64 * step;
                let d = criteria::steady_determinant(&c, tau).expect("R exists");
                let sv = liegeo_core::linalg::singular_values(&d);
                vec![tau, 2.0 * tau, d.clone().lu().determinant(), sv[sv.len() - 1], sv[0]]
            })
            .collect();
        let header: Vec<String> = ["tau", "t", "det", "sigma_min", "sigma_max"].iter().map(|s| s.to_string()).collect();
        art.csv("-det", &header, rows)?;
    }
    let reports: Vec<Value> = [CriterionKind::SteadyDet, CriterionKind::SteadyBlocks, CriterionKind::Misiolek]
        .iter()
        .map(|&k| run_criterion(k, cfg, &s).map(|r| criterion_json(&r)))
        .collect::<Result<_, _>>()?;
    let inapplicable = (c.status != SteadyStatus::Applicable).then(|| c.status.as_str().to_string());
    let summary = json!({
        "status": c.status.as_str(),
        "kernel_dim": c.kernel_dim,
        "subspace_dim": c.subspace.ncols(),
        "sylvester_sigma_ratio": c.sylvester_sigma_ratio,
        "sylvester_residual": c.sylvester_residual,
        "complement_residual": c.complement_residual,
        "criteria": reports,
    });
    Ok(Outcome {
        summary: finish(&mut art, "steady", cfg, summary)?,
        inapplicable,
    })
}

/// Slices for every configured δ, computed in parallel and kept in order.
pub fn locus_slices(cfg: &RunConfig) -> Result<Vec<LocusSlice>, CliError> {
    let conv = cfg.convention();
    cfg.locus
        .deltas
        .par_iter()
        .map(|&d| locus::generate_locus_slice(d, cfg.locus.angles, conv).map_err(CliError::from))
        .collect()
}

pub fn cmd_locus(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let slices = locus_slices(cfg)?;
    let mut art = Artifacts::new(&cfg.out, "locus", cfg.hash())?;
    let header: Vec<String> = ["theta", "t_star", "x", "y", "delta"].iter().map(|s| s.to_string()).collect();
    let rows = slices
        .iter()
        .flat_map(|s| s.samples.iter().map(move |p| vec![p.theta, p.t_star, p.x, p.y, s.delta]));
    art.csv("", &header, rows)?;
    art.text(".svg", &locus_svg(&slices, art.hash()))?;
    let violations = locus::nesting_violations(&slices);
    let summary = json!({
        "convention": cfg.convention().as_str(),
        "deltas": cfg.locus.deltas,
        "angles": cfg.locus.angles,
        "nested": violations.is_empty(),
        "nesting_violations": violations.len(),
        "extents": slices.iter().map(|s| { let (x, y) = s.extents(); json!({"delta": s.delta, "x": x, "y": y}) }).collect::<Vec<_>>(),
    });
    Ok(Outcome {
        summary: finish(&mut art, "locus", cfg, summary)?,
        inapplicable: None,
    })
}
