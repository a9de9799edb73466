//! Verification suites over the catalog.

use confgeom::classify::{classify, sample_conformal, sample_points, ClassificationResult, Tolerances};
use confgeom::frameode::{roundtrip_with_invariants, verify_case, CaseSpec, DEFAULT_STEP};
use confgeom::immersion::catalog::{catalog_entries, CatalogEntry, Params};
use confgeom::immersion::ImmersionSpec;
use confgeom::invariants::{identity_residuals, integrability_residuals, DEFAULT_STEP as FD_STEP};
use confgeom::pseudolinalg::random_isometry;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::report::{Bound, ResidualRow};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Suite {
    Identities,
    Integrability,
    FrameOde,
    Invariance,
    All,
}

pub const IDENTITY_SAMPLES: usize = 25;
pub const INTEGRABILITY_POINTS: usize = 9;
pub const FRAME_GRID: usize = 11;
pub const ISOMETRY_DRAWS: usize = 10;

fn default_spec(e: &CatalogEntry) -> confgeom::Result<ImmersionSpec> {
    e.spec(&Params::new())
}

pub fn identities(samples: usize, tol: Option<f64>) -> Vec<ResidualRow> {
    const SUITE: &str = "identities";
    catalog_entries()
        .par_iter()
        .map(|e| {
            let data = default_spec(e).and_then(|spec| sample_conformal(&spec, &sample_points(&spec, samples)));
            match data {
                Ok(data) => {
                    let mut worst = [0.0_f64; 3];
                    for cd in &data {
                        for (w, (_, x)) in worst.iter_mut().zip(identity_residuals(cd).named()) {
                            *w = w.max(x);
                        }
                    }
                    let bounds = [1e-8, 1e-8, 1e-7];
                    ["trace_b", "norm_b", "trace_a"]
                        .iter()
                        .zip(worst.iter().zip(bounds))
                        .map(|(name, (x, b))| ResidualRow::new(SUITE, e.name, name, *x, tol.unwrap_or(b), Bound::Below))
                        .collect()
                }
                Err(err) => vec![ResidualRow::error(SUITE, e.name, &err.to_string())],
            }
        })
        .collect::<Vec<Vec<_>>>()
        .concat()
}

pub fn integrability(points: usize, tol: Option<f64>) -> Vec<ResidualRow> {
    const SUITE: &str = "integrability";
    let tol = tol.unwrap_or(1e-5);
    catalog_entries()
        .par_iter()
        .map(|e| {
            let res = default_spec(e).and_then(|spec| {
                sample_points(&spec, points)
                    .iter()
                    .map(|p| integrability_residuals(&spec, p, FD_STEP))
                    .collect::<confgeom::Result<Vec<_>>>()
            });
            match res {
                Ok(all) => {
                    let mut worst = all[0].named().map(|(n, _)| (n, 0.0_f64));
                    for r in &all {
                        for (w, (_, x)) in worst.iter_mut().zip(r.named()) {
                            w.1 = w.1.max(x);
                        }
                    }
                    worst.iter().map(|(n, x)| ResidualRow::new(SUITE, e.name, n, *x, tol, Bound::Below)).collect()
                }
                Err(err) => vec![ResidualRow::error(SUITE, e.name, &err.to_string())],
            }
        })
        .collect::<Vec<Vec<_>>>()
        .concat()
}

pub fn frame_ode(cases: &[CaseSpec], tol: Option<f64>) -> Vec<ResidualRow> {
    const SUITE: &str = "frame-ode";
    let tol = tol.unwrap_or(1e-7);
    cases
        .par_iter()
        .map(|case| {
            let subject = format!("case {} ({}, r = {})", case.case_id, case.case_id.catalog_name(), case.r);
            let mut rows = Vec::new();
            match verify_case(case, FRAME_GRID, DEFAULT_STEP) {
                Ok(rep) => {
                    for (n, x) in rep.named() {
                        rows.push(ResidualRow::new(SUITE, &subject, n, x, tol, Bound::Below));
                    }
                    rows.push(ResidualRow::new(SUITE, &subject, "convergence_ratio", rep.convergence_ratio, 14.0, Bound::AtLeast));
                }
                Err(err) => rows.push(ResidualRow::error(SUITE, &subject, &err.to_string())),
            }
            match roundtrip_with_invariants(case, IDENTITY_SAMPLES) {
                Ok(rt) => {
                    for (n, x) in rt.named() {
                        rows.push(ResidualRow::new(SUITE, &subject, &format!("roundtrip_{n}"), x, tol, Bound::Below));
                    }
                }
                Err(err) => rows.push(ResidualRow::error(SUITE, &subject, &err.to_string())),
            }
            rows
        })
        .collect::<Vec<Vec<_>>>()
        .concat()
}

/// Quantities compared before and after an ambient isometry.
fn invariants_of(r: &ClassificationResult) -> Vec<(&'static str, f64)> {
    let fit = r.fit.as_ref();
    vec![
        ("max_conformal_form", r.max_conformal_form.unwrap_or(f64::NAN)),
        ("lambda", fit.map_or(f64::NAN, |f| f.lambda)),
        ("mu", fit.map_or(f64::NAN, |f| f.mu)),
        ("fit_residual", fit.map_or(f64::NAN, |f| f.max_residual)),
        ("abs_c_norm", r.c_norm().map_or(f64::NAN, f64::abs)),
        ("c_norm_residual", r.c.as_ref().map_or(f64::NAN, |c| c.norm_residual)),
    ]
}

pub fn invariance(seed: u64, draws: usize, samples: usize, tol: Option<f64>) -> Vec<ResidualRow> {
    const SUITE: &str = "invariance";
    let tol = tol.unwrap_or(1e-7);
    let tols = Tolerances::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // draw all matrices up front so the result does not depend on scheduling
    let plans: Vec<(&CatalogEntry, Vec<_>)> = catalog_entries()
        .iter()
        .map(|e| {
            let sig = default_spec(e).map(|s| s.ambient.signature);
            let mats = match sig {
                Ok(sig) => (0..draws).map(|_| random_isometry(sig, 0.5, &mut rng)).collect(),
                Err(_) => Vec::new(),
            };
            (e, mats)
        })
        .collect();
    plans
        .par_iter()
        .map(|(e, mats)| {
            let run = || -> confgeom::Result<Vec<(&'static str, f64)>> {
                let spec = default_spec(e)?;
                let base = invariants_of(&classify(&spec, samples, &tols)?);
                let mut worst: Vec<(&'static str, f64)> = base.iter().map(|(n, _)| (*n, 0.0)).collect();
                for t in mats {
                    let moved = invariants_of(&classify(&spec.transformed(t)?, samples, &tols)?);
                    for ((w, (_, a)), (_, b)) in worst.iter_mut().zip(&base).zip(&moved) {
                        // both undefined counts as unchanged
                        let d = if a.is_nan() && b.is_nan() { 0.0 } else { (a - b).abs() };
                        w.1 = if d.is_nan() || w.1.is_nan() { f64::NAN } else { w.1.max(d) };
                    }
                }
                Ok(worst)
            };
            match run() {
                Ok(worst) => worst.iter().map(|(n, x)| ResidualRow::new(SUITE, e.name, n, *x, tol, Bound::Below)).collect(),
                Err(err) => vec![ResidualRow::error(SUITE, e.name, &err.to_string())],
            }
        })
        .collect::<Vec<Vec<_>>>()
        .concat()
}
