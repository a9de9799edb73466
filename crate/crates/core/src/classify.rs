//! Conformal and Blaschke para-umbilical classification from sampled invariants.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::immersion::ImmersionSpec;
use crate::invariants::{conformal_tensors, frame_lift, ConformalData};
use crate::pseudolinalg::Vector;

pub const DEFAULT_SAMPLES: usize = 25;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Upper bound on `max |C_i|`.
    pub conformal: f64,
    /// Upper bound on the fit residual and the spread of `lambda`, `mu`.
    pub para_umbilical: f64,
    /// Upper bound on the spread of `c` across samples.
    pub constancy: f64,
    /// Threshold on `|<c,c>|` separating the flat case.
    pub space_form: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { conformal: 1e-7, para_umbilical: 1e-6, constancy: 1e-5, space_form: 1e-6 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpaceFormCase {
    Flat,
    Spherical,
    Hyperbolic,
    Indeterminate,
}

impl SpaceFormCase {
    pub fn name(self) -> &'static str {
        match self {
            SpaceFormCase::Flat => "Flat",
            SpaceFormCase::Spherical => "Spherical",
            SpaceFormCase::Hyperbolic => "Hyperbolic",
            SpaceFormCase::Indeterminate => "Indeterminate",
        }
    }
}

/// `n` points strictly inside the domain, 10% away from its boundary.
///
/// A uniform grid when `n` is a perfect `m`-th power, a Halton sequence otherwise.
pub fn sample_points(spec: &ImmersionSpec, n: usize) -> Vec<Vec<f64>> {
    let m = spec.dim();
    let inner: Vec<(f64, f64)> = spec
        .domain
        .iter()
        .map(|(a, b)| {
            let margin = 0.1 * (b - a);
            (a + margin, b - margin)
        })
        .collect();
    let k = (n as f64).powf(1.0 / m as f64).round() as usize;
    if k > 0 && k.pow(m as u32) == n {
        let axis = |d: usize, i: usize| -> f64 {
            let (lo, hi) = inner[d];
            if k == 1 {
                0.5 * (lo + hi)
            } else {
                lo + (hi - lo) * i as f64 / (k - 1) as f64
            }
        };
        (0..n)
            .map(|idx| {
                let mut rest = idx;
                (0..m)
                    .map(|d| {
                        let i = rest % k;
                        rest /= k;
                        axis(d, i)
                    })
                    .collect()
            })
            .collect()
    } else {
        const PRIMES: [usize; 4] = [2, 3, 5, 7];
        (1..=n)
            .map(|i| {
                (0..m)
                    .map(|d| {
                        let (lo, hi) = inner[d];
                        lo + (hi - lo) * halton(i, PRIMES[d])
                    })
                    .collect()
            })
            .collect()
    }
}

fn halton(mut i: usize, base: usize) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

/// Conformal data at each point, in input order.
pub fn sample_conformal(spec: &ImmersionSpec, points: &[Vec<f64>]) -> Result<Vec<ConformalData>> {
    points.par_iter().map(|p| conformal_tensors(spec, p)).collect::<Vec<_>>().into_iter().collect()
}

pub fn max_conformal_form(samples: &[ConformalData]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    Ok(samples.iter().map(ConformalData::max_conformal_form).fold(0.0, f64::max))
}

/// `true` iff `max |C_i| < tol` over all samples.
pub fn is_conformal(samples: &[ConformalData], tol: f64) -> Result<bool> {
    Ok(max_conformal_form(samples)? < tol)
}

/// Frobenius projection of the raised `A` onto `{Id, B}`: `(lambda, mu, residual)`.
pub fn fit_sample(cd: &ConformalData) -> (f64, f64, f64) {
    let m = cd.dim() as f64;
    let a = cd.raise(&cd.blaschke);
    let b = cd.raise(&cd.second_form);
    let lambda = a.trace() / m;
    let bb = b.dot(&b);
    let mu = if bb > 0.0 { a.dot(&b) / bb } else { 0.0 };
    let id = nalgebra::DMatrix::<f64>::identity(a.nrows(), a.ncols());
    let residual = (&a - id * lambda - &b * mu).norm();
    (lambda, mu, residual)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParaUmbilicalFit {
    pub lambda: f64,
    pub mu: f64,
    /// Mean of the per-sample residuals `||A - lambda Id - mu B||_F`.
    pub residual: f64,
    pub max_residual: f64,
    pub lambda_stddev: f64,
    pub mu_stddev: f64,
    pub per_sample: Vec<(f64, f64)>,
}

fn mean_std(xs: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = xs.clone().count() as f64;
    let mean = xs.clone().sum::<f64>() / n;
    let var = xs.map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Fits `A = lambda Id + mu B` at every sample; requires `max |C| < tol`.
pub fn fit_para_umbilical(samples: &[ConformalData], tol: f64) -> Result<ParaUmbilicalFit> {
    let c = max_conformal_form(samples)?;
    if c >= tol {
        return Err(Error::NotConformal(c));
    }
    if samples[0].dim() < 2 {
        return Err(Error::InvalidParam("para-umbilical fit needs m >= 2".into()));
    }
    let fits: Vec<(f64, f64, f64)> = samples.iter().map(fit_sample).collect();
    let (lambda, lambda_stddev) = mean_std(fits.iter().map(|f| f.0));
    let (mu, mu_stddev) = mean_std(fits.iter().map(|f| f.1));
    let (residual, _) = mean_std(fits.iter().map(|f| f.2));
    Ok(ParaUmbilicalFit {
        lambda,
        mu,
        residual,
        max_residual: fits.iter().map(|f| f.2).fold(0.0, f64::max),
        lambda_stddev,
        mu_stddev,
        per_sample: fits.iter().map(|f| (f.0, f.1)).collect(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CVector {
    /// Coefficient `mu_c = -eps_nu mu` of `xi` in `N = lambda Y + mu_c xi + c`.
    ///
    /// Since `<d xi, Y_j> = -eps_nu B_j`, this is the choice that makes `c` constant.
    pub xi_coefficient: f64,
    /// Mean of `c = N - lambda Y - mu_c xi` over the samples.
    pub c_vec: Vector,
    /// `<c, c>` of the mean.
    pub c_norm: f64,
    /// Largest pairwise max-norm distance between per-sample `c`.
    pub constancy_residual: f64,
    /// `max |<c, Y> - 1|`
    pub y_residual: f64,
    /// `max |<c, xi> + eps_nu mu_c^2|`
    pub xi_residual_squared: f64,
    /// `max |<c, xi> + eps_nu mu_c|`
    pub xi_residual: f64,
    /// `max |<c, c> - (-2 lambda + eps_nu mu_c^2)|`
    pub norm_residual: f64,
    pub per_sample: Vec<Vector>,
}

/// Builds `c = N - lambda Y - mu_c xi` at each sample from the canonical lift.
pub fn build_c_vector(spec: &ImmersionSpec, samples: &[ConformalData], fit: &ParaUmbilicalFit) -> Result<CVector> {
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    let lambda = fit.lambda;
    let mu = -samples[0].epsilon_normal * fit.mu;
    let lifts = samples
        .par_iter()
        .map(|cd| frame_lift(spec, &cd.point))
        .collect::<Vec<_>>()
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let sig = lifts[0].signature;
    let dot = |a: &Vector, b: &Vector| crate::pseudolinalg::inner(a.as_slice(), b.as_slice(), sig).expect("same length");
    let mut per_sample = Vec::with_capacity(lifts.len());
    let (mut y_res, mut xi_sq, mut xi_res, mut nn) = (0.0_f64, 0.0_f64, 0.0_f64, 0.0_f64);
    for fl in &lifts {
        let eps = fl.epsilon_normal;
        let c = &fl.null_normal - &fl.position * lambda - &fl.normal * mu;
        y_res = y_res.max((dot(&c, &fl.position) - 1.0).abs());
        let cx = dot(&c, &fl.normal);
        xi_sq = xi_sq.max((cx + eps * mu * mu).abs());
        xi_res = xi_res.max((cx + eps * mu).abs());
        nn = nn.max((dot(&c, &c) - (-2.0 * lambda + eps * mu * mu)).abs());
        per_sample.push(c);
    }
    let mut constancy = 0.0_f64;
    for (i, a) in per_sample.iter().enumerate() {
        for b in &per_sample[i + 1..] {
            constancy = constancy.max((a - b).amax());
        }
    }
    let n = per_sample.len() as f64;
    let c_vec = per_sample.iter().fold(Vector::zeros(sig.dim()), |acc, c| acc + c) / n;
    Ok(CVector {
        xi_coefficient: mu,
        c_norm: dot(&c_vec, &c_vec),
        c_vec,
        constancy_residual: constancy,
        y_residual: y_res,
        xi_residual_squared: xi_sq,
        xi_residual: xi_res,
        norm_residual: nn,
        per_sample,
    })
}

/// Sign of `<c, c>` decides the model space; near zero, `-2 lambda + eps_nu mu^2` must agree.
pub fn locate_space_form(c_norm: f64, lambda: f64, mu: f64, epsilon_normal: f64, tol: f64) -> Result<SpaceFormCase> {
    let predicted = -2.0 * lambda + epsilon_normal * mu * mu;
    if c_norm.abs() < tol {
        if predicted.abs() < tol {
            Ok(SpaceFormCase::Flat)
        } else {
            Err(Error::Indeterminate { cc: c_norm, predicted })
        }
    } else if c_norm < 0.0 {
        Ok(SpaceFormCase::Spherical)
    } else {
        Ok(SpaceFormCase::Hyperbolic)
    }
}

/// Numerical record of the relations between `lambda`, `mu` and the isometric data.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureRelations {
    pub mean_curvature: f64,
    pub mean_curvature_stddev: f64,
    /// `max |lambda - (rho/(2(m-1)) + sign/(2m))/m|`
    pub lambda_trace_residual: f64,
    /// `max |lambda - e^{-2 tau}(kappa + eps_nu H^2)/2|`
    pub lambda_residual: f64,
    /// `max |lambda - e^{-2 tau}(kappa - eps_nu H^2)/2|`
    pub lambda_minus_residual: f64,
    /// `max |mu - eps_nu e^{-tau} H|`
    pub mu_residual: f64,
    /// `max |mu - eps_nu e^{tau} H|`
    pub mu_unscaled_residual: f64,
    /// `max |H + mu^2|`
    pub h_mu_squared_residual: f64,
}

pub fn curvature_relations(samples: &[ConformalData], fit: &ParaUmbilicalFit) -> CurvatureRelations {
    let (h, h_std) = mean_std(samples.iter().map(|cd| cd.mean_curvature));
    let mut r = CurvatureRelations {
        mean_curvature: h,
        mean_curvature_stddev: h_std,
        lambda_trace_residual: 0.0,
        lambda_residual: 0.0,
        lambda_minus_residual: 0.0,
        mu_residual: 0.0,
        mu_unscaled_residual: 0.0,
        h_mu_squared_residual: 0.0,
    };
    for (cd, (lambda, mu)) in samples.iter().zip(&fit.per_sample) {
        let m = cd.dim() as f64;
        let (eps, k, hh) = (cd.epsilon_normal, cd.ambient_curvature, cd.mean_curvature);
        let e = (-2.0 * cd.tau).exp();
        let by_trace = (cd.rho / (2.0 * (m - 1.0)) + cd.sign_choice / (2.0 * m)) / m;
        r.lambda_trace_residual = r.lambda_trace_residual.max((lambda - by_trace).abs());
        r.lambda_residual = r.lambda_residual.max((lambda - 0.5 * e * (k + eps * hh * hh)).abs());
        r.lambda_minus_residual = r.lambda_minus_residual.max((lambda - 0.5 * e * (k - eps * hh * hh)).abs());
        r.mu_residual = r.mu_residual.max((mu - eps * (-cd.tau).exp() * hh).abs());
        r.mu_unscaled_residual = r.mu_unscaled_residual.max((mu - eps * cd.tau.exp() * hh).abs());
        r.h_mu_squared_residual = r.h_mu_squared_residual.max((hh + mu * mu).abs());
    }
    r
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassificationResult {
    pub samples: usize,
    pub regular: bool,
    /// Error message for the first non-regular sample, if any.
    pub degeneracy: Option<String>,
    pub conformal: bool,
    pub para_umbilical: bool,
    pub max_conformal_form: Option<f64>,
    pub fit: Option<ParaUmbilicalFit>,
    pub c: Option<CVector>,
    pub space_form_case: Option<SpaceFormCase>,
    pub relations: Option<CurvatureRelations>,
}

impl ClassificationResult {
    pub fn lambda(&self) -> Option<f64> {
        self.fit.as_ref().map(|f| f.lambda)
    }

    pub fn mu(&self) -> Option<f64> {
        self.fit.as_ref().map(|f| f.mu)
    }

    pub fn c_norm(&self) -> Option<f64> {
        self.c.as_ref().map(|c| c.c_norm)
    }

    pub fn verdict(&self) -> &'static str {
        if !self.regular {
            "not regular"
        } else if !self.conformal {
            "not conformal"
        } else if self.para_umbilical {
            "para-umbilical"
        } else {
            "conformal"
        }
    }
}

/// Full classification over an explicit list of points.
pub fn classify_points(spec: &ImmersionSpec, points: &[Vec<f64>], tol: &Tolerances) -> Result<ClassificationResult> {
    let mut result = ClassificationResult {
        samples: points.len(),
        regular: false,
        degeneracy: None,
        conformal: false,
        para_umbilical: false,
        max_conformal_form: None,
        fit: None,
        c: None,
        space_form_case: None,
        relations: None,
    };
    let samples = match sample_conformal(spec, points) {
        Ok(s) => s,
        Err(e) if e.is_degeneracy() => {
            result.degeneracy = Some(e.to_string());
            return Ok(result);
        }
        Err(e) => return Err(e),
    };
    result.regular = true;
    let c = max_conformal_form(&samples)?;
    result.max_conformal_form = Some(c);
    result.conformal = c < tol.conformal;
    if !result.conformal || spec.dim() < 2 {
        return Ok(result);
    }
    let fit = fit_para_umbilical(&samples, tol.conformal)?;
    result.para_umbilical = fit.max_residual < tol.para_umbilical
        && fit.lambda_stddev < tol.para_umbilical
        && fit.mu_stddev < tol.para_umbilical;
    result.relations = Some(curvature_relations(&samples, &fit));
    if result.para_umbilical {
        let cv = build_c_vector(spec, &samples, &fit)?;
        let eps = samples[0].epsilon_normal;
        result.space_form_case = Some(
            match locate_space_form(cv.c_norm, fit.lambda, fit.mu, eps, tol.space_form) {
                Ok(case) => case,
                Err(Error::Indeterminate { .. }) => SpaceFormCase::Indeterminate,
                Err(e) => return Err(e),
            },
        );
        result.c = Some(cv);
    }
    result.fit = Some(fit);
    Ok(result)
}

/// Classification on the default sample plan with `n` points.
pub fn classify(spec: &ImmersionSpec, n: usize, tol: &Tolerances) -> Result<ClassificationResult> {
    classify_points(spec, &sample_points(spec, n), tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::immersion::catalog::{catalog, params};
    use crate::immersion::parse;

    fn close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b}");
    }

    #[test]
    fn sample_plans() {
        let spec = catalog("cmc-cylinder", &params(&[])).unwrap();
        let grid = sample_points(&spec, 25);
        assert_eq!(grid.len(), 25);
        assert_eq!(grid[0], vec![-0.8, -0.8]);
        assert_eq!(grid[24], vec![0.8, 0.8]);
        let halton = sample_points(&spec, 7);
        assert_eq!(halton.len(), 7);
        assert!(halton.iter().flatten().all(|x| x.abs() <= 0.8));
    }

    #[test]
    fn cylinder_fit() {
        let spec = catalog("cmc-cylinder", &params(&[])).unwrap();
        let samples = sample_conformal(&spec, &sample_points(&spec, 25)).unwrap();
        let fit = fit_para_umbilical(&samples, 1e-7).unwrap();
        close(fit.lambda, 0.125, 1e-12);
        close(fit.mu, 0.5, 1e-12);
        assert!(fit.residual < 1e-12);
        let cv = build_c_vector(&spec, &samples, &fit).unwrap();
        close(cv.xi_coefficient, -0.5, 1e-12);
        assert!(cv.constancy_residual < 1e-10);
        assert!(cv.y_residual < 1e-10);
        close(cv.xi_residual_squared, 0.75, 1e-10);
        assert!(cv.xi_residual < 1e-10);
        assert!(cv.norm_residual < 1e-10);
        assert_eq!(locate_space_form(cv.c_norm, fit.lambda, fit.mu, 1.0, 1e-6).unwrap(), SpaceFormCase::Flat);
    }

    #[test]
    fn sl_h1_h1_fit() {
        let spec = catalog("sl-H1xH1", &params(&[("r", 0.6)])).unwrap();
        let samples = sample_conformal(&spec, &sample_points(&spec, 9)).unwrap();
        let fit = fit_para_umbilical(&samples, 1e-7).unwrap();
        close(fit.lambda, -0.125, 1e-10);
        close(fit.mu, 0.5 - 0.36, 1e-10);
        assert!(fit.residual < 1e-10);
    }

    #[test]
    fn corrupted_blaschke_is_detected() {
        let spec = catalog("cmc-cylinder", &params(&[])).unwrap();
        let mut cd = conformal_tensors(&spec, &[0.0, 0.0]).unwrap();
        // g = identity here, so raising does not change the perturbation
        cd.blaschke[(0, 1)] += 0.2;
        assert!(fit_sample(&cd).2 >= 0.19);
    }

    #[test]
    fn graph_is_not_conformal() {
        let spec = parse("map(u, v) -> (u, v, u^2 + 3*v^3) ambient R 3 0").unwrap();
        let samples = sample_conformal(&spec, &sample_points(&spec, 25)).unwrap();
        assert!(!is_conformal(&samples, 1e-7).unwrap());
        assert!(matches!(fit_para_umbilical(&samples, 1e-7), Err(Error::NotConformal(_))));
        assert!(matches!(is_conformal(&[], 1e-7), Err(Error::EmptySamples)));
    }

    #[test]
    fn space_form_cases() {
        let tol = Tolerances::default();
        let s = classify(&catalog("cmc-sphere-product", &params(&[])).unwrap(), 25, &tol).unwrap();
        assert_eq!(s.space_form_case, Some(SpaceFormCase::Spherical));
        let h = classify(&catalog("cmc-h-product", &params(&[])).unwrap(), 25, &tol).unwrap();
        assert_eq!(h.space_form_case, Some(SpaceFormCase::Hyperbolic));
        assert!(matches!(locate_space_form(1e-9, 0.3, 0.0, 1.0, 1e-6), Err(Error::Indeterminate { .. })));
    }

    #[test]
    fn umbilic_sphere_is_not_regular() {
        let spec = parse("map(u, v) -> (cos(u)*cos(v), cos(u)*sin(v), sin(u)) ambient R 3 0").unwrap();
        let r = classify(&spec, 9, &Tolerances::default()).unwrap();
        assert!(!r.regular);
        assert_eq!(r.verdict(), "not regular");
    }
}
