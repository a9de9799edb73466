//! Conformal invariants `g`, `A`, `B`, `C` of a regular hypersurface.

use super::forms::{sig_dot, Geometry, REGULARITY_THRESHOLD};
use super::jetalg::{self, JetMat};
use crate::error::{Error, Result};
use crate::immersion::ImmersionSpec;
use crate::jets::Jet;
use crate::pseudolinalg::{Matrix, Vector};

/// Conformal data at one point, all tensors in the coordinate basis.
#[derive(Debug, Clone, PartialEq)]
pub struct ConformalData {
    pub point: Vec<f64>,
    pub tau: f64,
    /// Conformal metric `g = e^{2 tau} I`.
    pub metric: Matrix,
    pub metric_inv: Matrix,
    /// Blaschke tensor `A_ij`.
    pub blaschke: Matrix,
    /// Conformal second fundamental form `B_ij`.
    pub second_form: Matrix,
    /// Conformal form `C_i`.
    pub conformal_form: Vector,
    /// Scalar curvature of `g`.
    pub rho: f64,
    /// Scalar curvature of `I` by the extrinsic formula.
    pub rho_isometric: f64,
    /// Scalar curvature of `I` from its Christoffel symbols.
    pub rho_intrinsic: f64,
    /// Sign making `e^{2 tau}` positive.
    pub sign_choice: f64,
    pub epsilon_normal: f64,
    pub epsilon_ambient: i32,
    /// Sectional curvature `eps / r^2` of the ambient space form.
    pub ambient_curvature: f64,
    /// Scalar mean curvature with respect to the oriented normal.
    pub mean_curvature: f64,
}

impl ConformalData {
    pub fn dim(&self) -> usize {
        self.metric.nrows()
    }

    /// `g^{-1} T`, the (1,1) version of a bilinear form.
    pub fn raise(&self, t: &Matrix) -> Matrix {
        &self.metric_inv * t
    }

    /// Eigenvalues of the raised `B`, sorted ascending.
    pub fn second_form_eigenvalues(&self) -> Vec<f64> {
        sorted_eigenvalues(&self.raise(&self.second_form))
    }

    pub fn blaschke_eigenvalues(&self) -> Vec<f64> {
        sorted_eigenvalues(&self.raise(&self.blaschke))
    }

    pub fn max_conformal_form(&self) -> f64 {
        self.conformal_form.amax()
    }
}

pub(crate) fn sorted_eigenvalues(a: &Matrix) -> Vec<f64> {
    let mut ev = super::forms::eigenvalues(a);
    ev.sort_by(f64::total_cmp);
    ev
}

/// Jets of the isometric data together with the conformal factor.
pub(crate) struct ConformalJets {
    pub geo: Geometry,
    /// Order-2 jet of `tau`.
    pub tau: Jet,
    pub sign: f64,
}

impl ConformalJets {
    pub fn new(spec: &ImmersionSpec, point: &[f64]) -> Result<Self> {
        if spec.dim() < 2 {
            return Err(Error::InvalidParam("conformal invariants need m >= 2".into()));
        }
        let geo = Geometry::new(spec, point)?;
        let m = geo.m as f64;
        let q = &geo.norm_second - &geo.norm_mean.scale(m);
        if q.value().abs() < REGULARITY_THRESHOLD {
            return Err(Error::NotRegular(q.value()));
        }
        let sign = q.value().signum();
        let tau = q.scale(sign * m / (m - 1.0)).ln()?.scale(0.5);
        Ok(Self { geo, tau, sign })
    }

    /// `g = e^{2 tau} I` as jets.
    pub fn metric(&self) -> JetMat {
        let e2 = self.tau.scale(2.0).exp();
        self.geo
            .metric
            .iter()
            .map(|row| row.iter().map(|x| x * &e2).collect())
            .collect()
    }

    pub fn data(&self) -> Result<ConformalData> {
        let geo = &self.geo;
        let m = geo.m;
        let mf = m as f64;
        let sig = geo.signature();
        let pf = geo.frame();
        let kappa = geo.ambient.curvature();
        let eps_nu = geo.epsilon_normal;
        let tau = self.tau.value();
        let grad = Vector::from_fn(m, |i, _| self.tau.partial(i));
        let first = &pf.first_form;
        let first_inv = &pf.first_form_inv;

        // tau_{i,j} = d_ij tau - Gamma^k_ij tau_k
        let hess = Matrix::from_fn(m, m, |i, j| {
            self.tau.second_partial(i, j)
                - (0..m).map(|k| pf.christoffels[k][(i, j)] * grad[k]).sum::<f64>()
        });
        let grad_sq = (grad.transpose() * first_inv * &grad)[(0, 0)];
        let hvec = &pf.mean_curvature_vector;
        let h_dot = Matrix::from_fn(m, m, |i, j| {
            sig_dot(&jetalg::values(&geo.normal_parts[i][j]), hvec, sig)
        });
        let shift = 0.5 * (grad_sq + pf.norm_mean_curvature - kappa);
        let blaschke = Matrix::from_fn(m, m, |i, j| {
            grad[i] * grad[j] + h_dot[(i, j)] - hess[(i, j)] - shift * first[(i, j)]
        });

        let h = pf.mean_curvature;
        let et = tau.exp();
        let second_form = (&pf.second_form - first * h) * et;

        let grad_up = first_inv * &grad;
        let dh = Vector::from_fn(m, |i, _| {
            eps_nu * sig_dot(&jetalg::partials(&geo.mean_vector, i), &pf.normal, sig)
        });
        let conformal_form = (&grad * h - &pf.second_form * &grad_up - dh) / et;

        let metric_jets = self.metric();
        let metric_inv_jets = jetalg::inverse(&metric_jets)?;
        let gamma = jetalg::levi_civita(&metric_jets, &metric_inv_jets);
        let metric = jetalg::mat_values(&metric_jets);
        let metric_inv = jetalg::mat_values(&metric_inv_jets);
        let rho = jetalg::riemann(&gamma, &metric).scalar(&metric_inv);

        Ok(ConformalData {
            point: geo.point.clone(),
            tau,
            metric,
            metric_inv,
            blaschke,
            second_form,
            conformal_form,
            rho,
            rho_isometric: mf * (mf - 1.0) * kappa + mf * mf * pf.norm_mean_curvature
                - pf.norm_second_form,
            rho_intrinsic: geo.intrinsic_scalar_curvature(),
            sign_choice: self.sign,
            epsilon_normal: eps_nu,
            epsilon_ambient: geo.ambient.epsilon(),
            ambient_curvature: kappa,
            mean_curvature: h,
        })
    }
}

/// Conformal invariants at `point`.
pub fn conformal_tensors(spec: &ImmersionSpec, point: &[f64]) -> Result<ConformalData> {
    ConformalJets::new(spec, point)?.data()
}

/// Algebraic identities satisfied by `A`, `B` and `g` at every regular point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentityResiduals {
    /// `|tr_g B|`
    pub trace_b: f64,
    /// `|tr(B^2) - sign eps_nu (m-1)/m|`
    pub norm_b: f64,
    /// `|tr_g A - (m rho/(m-1) + sign)/(2m)|`
    pub trace_a: f64,
    /// `rho` recovered from `tr_g A`.
    pub rho_from_trace: f64,
}

impl IdentityResiduals {
    pub fn named(&self) -> [(&'static str, f64); 3] {
        [("trace_b", self.trace_b), ("norm_b", self.norm_b), ("trace_a", self.trace_a)]
    }

    pub fn max(&self) -> f64 {
        self.trace_b.max(self.norm_b).max(self.trace_a)
    }
}

pub fn identity_residuals(cd: &ConformalData) -> IdentityResiduals {
    let m = cd.dim() as f64;
    let b = cd.raise(&cd.second_form);
    let a = cd.raise(&cd.blaschke);
    let norm_target = cd.sign_choice * cd.epsilon_normal * (m - 1.0) / m;
    let trace_a = a.trace();
    IdentityResiduals {
        trace_b: b.trace().abs(),
        norm_b: ((&b * &b).trace() - norm_target).abs(),
        trace_a: (trace_a - (m * cd.rho / (m - 1.0) + cd.sign_choice) / (2.0 * m)).abs(),
        rho_from_trace: (m - 1.0) / m * (2.0 * m * trace_a - cd.sign_choice),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::immersion::catalog::{catalog, params};

    fn close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b}");
    }

    #[test]
    fn cylinder_fixture() {
        let spec = catalog("cmc-cylinder", &params(&[])).unwrap();
        let cd = conformal_tensors(&spec, &[0.3, -0.2]).unwrap();
        close(cd.tau, 0.0, 1e-14);
        let b = cd.second_form_eigenvalues();
        close(b[0], -0.5, 1e-14);
        close(b[1], 0.5, 1e-14);
        assert!(cd.max_conformal_form() < 1e-14);
        let a = cd.blaschke_eigenvalues();
        close(a[0], -0.125, 1e-14);
        close(a[1], 0.375, 1e-14);
        let r = identity_residuals(&cd);
        assert!(r.max() < 1e-12, "{r:?}");
    }

    #[test]
    fn sl_h1_h1_fixture() {
        for r in [0.3, 0.6, 0.9] {
            let spec = catalog("sl-H1xH1", &params(&[("r", r)])).unwrap();
            let cd = conformal_tensors(&spec, &[0.1, 0.2]).unwrap();
            let b = cd.second_form_eigenvalues();
            close(b[0], -0.5, 1e-12);
            close(b[1], 0.5, 1e-12);
            assert!(cd.max_conformal_form() < 1e-12);
            let a = cd.blaschke_eigenvalues();
            let mut expect = [0.125 - r * r / 2.0, r * r / 2.0 - 0.375];
            expect.sort_by(f64::total_cmp);
            close(a[0], expect[0], 1e-11);
            close(a[1], expect[1], 1e-11);
            let res = identity_residuals(&cd);
            assert!(res.max() < 1e-10, "{res:?}");
            close(cd.rho_intrinsic, cd.rho_isometric, 1e-10);
        }
    }

    #[test]
    fn corrupted_b_is_detected() {
        let spec = catalog("cmc-cylinder", &params(&[])).unwrap();
        let mut cd = conformal_tensors(&spec, &[0.0, 0.0]).unwrap();
        cd.second_form += &cd.metric * 0.1;
        let r = identity_residuals(&cd);
        assert!(r.trace_b >= 0.09 && r.max() >= 0.09, "{r:?}");
    }
}
