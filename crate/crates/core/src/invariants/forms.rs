//! First and second fundamental forms of a hypersurface in a space form.

use super::jetalg::{self, JetMat, JetVec};
use crate::error::{Error, Result};
use crate::immersion::{AmbientSpec, ImmersionSpec};
use crate::jets::Jet;
use crate::pseudolinalg::{check_nonsingular, orthogonal_complement, Matrix, Signature, Vector};

/// Threshold on `||II|^2 - m|H|^2|` below which a point is not regular.
pub const REGULARITY_THRESHOLD: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct PointFrame {
    pub point: Vec<f64>,
    pub first_form: Matrix,
    pub first_form_inv: Matrix,
    /// `h_ij = eps_nu <u_ij, nu>` with respect to [`Self::normal`].
    pub second_form: Matrix,
    /// Unit normal, tangent to the space form.
    pub normal: Vector,
    /// `<nu, nu> = +-1`.
    pub epsilon_normal: f64,
    pub mean_curvature_vector: Vector,
    /// Scalar mean curvature `eps_nu <H, nu>`.
    pub mean_curvature: f64,
    /// `christoffels[k][(i, j)]` of the first form.
    pub christoffels: Vec<Matrix>,
    pub norm_second_form: f64,
    pub norm_mean_curvature: f64,
}

impl PointFrame {
    pub fn dim(&self) -> usize {
        self.first_form.nrows()
    }

    /// Eigenvalues of the shape operator `I^-1 h`.
    pub fn principal_curvatures(&self) -> Vec<f64> {
        let mut ev = eigenvalues(&(&self.first_form_inv * &self.second_form));
        ev.sort_by(f64::total_cmp);
        ev
    }
}

/// Jets of the immersion and its isometric invariants at one point.
pub(crate) struct Geometry {
    pub m: usize,
    pub ambient: AmbientSpec,
    pub point: Vec<f64>,
    pub position: JetVec,
    /// `normal_parts[i][j]`: normal component of `u_ij`.
    pub normal_parts: Vec<Vec<JetVec>>,
    pub metric: JetMat,
    pub metric_inv: JetMat,
    pub mean_vector: JetVec,
    pub norm_second: Jet,
    pub norm_mean: Jet,
    pub normal: Vector,
    pub epsilon_normal: f64,
}

impl Geometry {
    pub fn new(spec: &ImmersionSpec, point: &[f64]) -> Result<Self> {
        let mut geo = Self::unoriented(spec, point)?;
        let center = spec.domain_center();
        let sign = if center == point {
            geo.orientation()
        } else {
            Self::unoriented(spec, &center).map_or_else(|_| geo.orientation(), |c| c.orientation())
        };
        geo.normal *= sign;
        Ok(geo)
    }

    /// `+1` if the raw normal points along the mean curvature vector; for
    /// (near) minimal points, `+1` if its first nonzero component is positive.
    fn orientation(&self) -> f64 {
        let sig = self.signature();
        let h = jetalg::values(&self.mean_vector);
        let along = sig_dot(&h, &self.normal, sig);
        if along.abs() > 1e-10 * h.norm().max(1.0) {
            return along.signum();
        }
        let tol = 1e-12 * self.normal.amax();
        self.normal.iter().find(|x| x.abs() > tol).map_or(1.0, |x| x.signum())
    }

    fn unoriented(spec: &ImmersionSpec, point: &[f64]) -> Result<Self> {
        let codim = spec.codimension();
        if codim != 1 {
            return Err(Error::UnsupportedCodimension(codim));
        }
        let m = spec.dim();
        let sig = spec.ambient.signature;
        let position = spec.evaluate(point)?;
        let tangents: Vec<JetVec> =
            (0..m).map(|i| position.iter().map(|c| c.derivative(i)).collect()).collect();

        let metric: JetMat = (0..m)
            .map(|i| (0..m).map(|j| jetalg::dot(&tangents[i], &tangents[j], sig)).collect())
            .collect();
        match check_nonsingular(&jetalg::mat_values(&metric)) {
            Ok(_) => {}
            Err(Error::NearSingular { .. }) => return Err(Error::DegenerateMetric),
            Err(e) => return Err(e),
        }
        let metric_inv = jetalg::inverse(&metric)?;

        let radial = if spec.ambient.epsilon() != 0 {
            Some(jetalg::dot(&position, &position, sig))
        } else {
            None
        };
        let mut normal_parts = Vec::with_capacity(m);
        for i in 0..m {
            let mut row = Vec::with_capacity(m);
            for j in 0..m {
                let uij: JetVec = tangents[i].iter().map(|c| c.derivative(j)).collect();
                // I^{kl} <u_ij, u_k> u_l
                let along: JetVec = (0..m).map(|k| jetalg::dot(&uij, &tangents[k], sig)).collect();
                let coeffs: JetVec = (0..m)
                    .map(|l| {
                        (0..m).fold(jetalg::zero(m), |acc, k| acc + &metric_inv[k][l] * &along[k])
                    })
                    .collect();
                let mut n = jetalg::sub(&uij, &jetalg::combine(&coeffs, &tangents));
                if let Some(q) = &radial {
                    let c = jetalg::dot(&uij, &position, sig).try_div(q)?;
                    n = jetalg::sub(&n, &jetalg::scale(&position, &c));
                }
                row.push(n);
            }
            normal_parts.push(row);
        }

        let mut mean_vector: JetVec = vec![jetalg::zero(m); sig.dim()];
        for i in 0..m {
            for j in 0..m {
                let w = metric_inv[i][j].scale(1.0 / m as f64);
                for (acc, x) in mean_vector.iter_mut().zip(&normal_parts[i][j]) {
                    *acc = &*acc + &(&w * x);
                }
            }
        }
        let norm_mean = jetalg::dot(&mean_vector, &mean_vector, sig);
        let mut norm_second = jetalg::zero(m);
        for i in 0..m {
            for j in 0..m {
                for k in 0..m {
                    for l in 0..m {
                        let w = &metric_inv[i][k] * &metric_inv[j][l];
                        let p = jetalg::dot(&normal_parts[i][j], &normal_parts[k][l], sig);
                        norm_second = norm_second + w * p;
                    }
                }
            }
        }

        let (normal, epsilon_normal) = unit_normal(spec, &position, &tangents)?;

        Ok(Self {
            m,
            ambient: spec.ambient,
            point: point.to_vec(),
            position,
            normal_parts,
            metric,
            metric_inv,
            mean_vector,
            norm_second,
            norm_mean,
            normal,
            epsilon_normal,
        })
    }

    pub fn signature(&self) -> Signature {
        self.ambient.signature
    }

    pub fn frame(&self) -> PointFrame {
        let m = self.m;
        let sig = self.signature();
        let eps = self.epsilon_normal;
        let nu = &self.normal;
        let second_form = Matrix::from_fn(m, m, |i, j| {
            eps * sig_dot(&jetalg::values(&self.normal_parts[i][j]), nu, sig)
        });
        let hvec = jetalg::values(&self.mean_vector);
        let gamma = jetalg::levi_civita(&self.metric, &self.metric_inv);
        PointFrame {
            point: self.point.clone(),
            first_form: jetalg::mat_values(&self.metric),
            first_form_inv: jetalg::mat_values(&self.metric_inv),
            second_form,
            normal: nu.clone(),
            epsilon_normal: eps,
            mean_curvature: eps * sig_dot(&hvec, nu, sig),
            mean_curvature_vector: hvec,
            christoffels: jetalg::gamma_values(&gamma),
            norm_second_form: self.norm_second.value(),
            norm_mean_curvature: self.norm_mean.value(),
        }
    }

    /// Scalar curvature of the first form from its own Christoffel symbols.
    pub fn intrinsic_scalar_curvature(&self) -> f64 {
        let gamma = jetalg::levi_civita(&self.metric, &self.metric_inv);
        jetalg::riemann(&gamma, &jetalg::mat_values(&self.metric))
            .scalar(&jetalg::mat_values(&self.metric_inv))
    }
}

pub(crate) fn sig_dot(a: &Vector, b: &Vector, sig: Signature) -> f64 {
    a.iter().zip(b.iter()).enumerate().map(|(k, (x, y))| sig.sign(k) * x * y).sum()
}

/// Unnormalized cofactor normal: orthogonal to `u` (for curved ambients) and all `u_i`.
fn raw_normal(spec: &ImmersionSpec, position: &[Jet], tangents: &[JetVec]) -> Result<Vector> {
    let mut rows = Vec::new();
    if spec.ambient.epsilon() != 0 {
        rows.push(jetalg::values(position));
    }
    rows.extend(tangents.iter().map(|t| jetalg::values(t)));
    orthogonal_complement(&rows, spec.ambient.signature)
}

fn unit_normal(spec: &ImmersionSpec, position: &[Jet], tangents: &[JetVec]) -> Result<(Vector, f64)> {
    let n = raw_normal(spec, position, tangents)?;
    let q = sig_dot(&n, &n, spec.ambient.signature);
    if q.abs() <= 1e-10 * n.norm_squared() || n.norm_squared() == 0.0 {
        return Err(Error::NullNormal);
    }
    Ok((n / q.abs().sqrt(), q.signum()))
}

pub(crate) fn eigenvalues(a: &Matrix) -> Vec<f64> {
    a.complex_eigenvalues().iter().map(|z| z.re).collect()
}

/// Number of negative eigenvalues of a symmetric matrix.
pub fn metric_index(a: &Matrix) -> usize {
    a.clone().symmetric_eigenvalues().iter().filter(|x| **x < 0.0).count()
}

/// First and second fundamental forms at `point`.
pub fn fundamental_forms(spec: &ImmersionSpec, point: &[f64]) -> Result<PointFrame> {
    Ok(Geometry::new(spec, point)?.frame())
}

/// Scalar curvature of the first form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarCurvature {
    /// `m(m-1) kappa + m^2 |H|^2 - |II|^2`.
    pub extrinsic: f64,
    /// From the Christoffel symbols of the first form.
    pub intrinsic: f64,
}

impl ScalarCurvature {
    pub fn discrepancy(&self) -> f64 {
        (self.extrinsic - self.intrinsic).abs()
    }
}

/// Extrinsic formula only; see [`scalar_curvature_at`] for the intrinsic comparison.
pub fn scalar_curvature(pf: &PointFrame, ambient: &AmbientSpec) -> f64 {
    let m = pf.dim() as f64;
    m * (m - 1.0) * ambient.curvature() + m * m * pf.norm_mean_curvature - pf.norm_second_form
}

pub fn scalar_curvature_at(spec: &ImmersionSpec, point: &[f64]) -> Result<ScalarCurvature> {
    let geo = Geometry::new(spec, point)?;
    Ok(ScalarCurvature {
        extrinsic: scalar_curvature(&geo.frame(), &spec.ambient),
        intrinsic: geo.intrinsic_scalar_curvature(),
    })
}

/// `e^{2 tau} = sign (m/(m-1)) (|II|^2 - m|H|^2)` with `sign` making it positive.
///
/// Returns `(tau, sign)`.
pub fn conformal_factor(pf: &PointFrame, m: usize) -> Result<(f64, f64)> {
    let mf = m as f64;
    let q = pf.norm_second_form - mf * pf.norm_mean_curvature;
    if q.abs() < REGULARITY_THRESHOLD {
        return Err(Error::NotRegular(q));
    }
    let sign = q.signum();
    Ok((0.5 * (sign * mf / (mf - 1.0) * q).ln(), sign))
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
    fn cylinder_forms() {
        let spec = catalog("cmc-cylinder", &params(&[])).unwrap();
        for p in [[0.0, 0.0], [0.4, -0.3]] {
            let pf = fundamental_forms(&spec, &p).unwrap();
            assert!((&pf.first_form - Matrix::identity(2, 2)).norm() < 1e-14);
            let k = pf.principal_curvatures();
            close(k[0].abs() + k[1].abs(), 1.0, 1e-14);
            close(k[0] * k[1], 0.0, 1e-14);
            close(pf.mean_curvature.abs(), 0.5, 1e-14);
            close(pf.norm_second_form, 1.0, 1e-14);
            close(pf.norm_mean_curvature, 0.25, 1e-14);
        }
    }

    #[test]
    fn unit_sphere_is_umbilic() {
        let spec = parse("map(u, v) -> (cos(u)*cos(v), cos(u)*sin(v), sin(u)) ambient R 3 0").unwrap();
        let pf = fundamental_forms(&spec, &[0.2, 0.3]).unwrap();
        let outward = Vector::from_vec(spec.position(&[0.2, 0.3]).unwrap());
        let orient = pf.normal.dot(&outward).signum();
        // h = -I for the outward normal
        assert!((&pf.second_form * orient + &pf.first_form).norm() < 1e-13);
        close(pf.norm_second_form, 2.0, 1e-13);
        close(pf.norm_mean_curvature, 1.0, 1e-13);
        close(scalar_curvature(&pf, &spec.ambient), 2.0, 1e-12);
        assert!(matches!(conformal_factor(&pf, 2), Err(Error::NotRegular(_))));
    }

    #[test]
    fn cylinder_conformal_factor() {
        let spec = catalog("cmc-cylinder", &params(&[])).unwrap();
        let pf = fundamental_forms(&spec, &[0.1, 0.2]).unwrap();
        let (tau, sign) = conformal_factor(&pf, 2).unwrap();
        close(tau, 0.0, 1e-14);
        assert_eq!(sign, 1.0);
        close(scalar_curvature(&pf, &spec.ambient), 0.0, 1e-14);

        let spec = catalog("cmc-cylinder", &params(&[("r", 2.0)])).unwrap();
        let pf = fundamental_forms(&spec, &[0.1, 0.2]).unwrap();
        // 2 (1/4 - 2/16)
        let oracle = 2.0 * (pf.norm_second_form - 2.0 * pf.norm_mean_curvature);
        close(oracle, 0.25, 1e-14);
        close(conformal_factor(&pf, 2).unwrap().0, -(2f64.ln()), 1e-14);
    }

    #[test]
    fn sl_h1_h1_is_spacelike_and_flat() {
        let spec = catalog("sl-H1xH1", &params(&[("r", 0.6)])).unwrap();
        let pf = fundamental_forms(&spec, &[0.0, 0.0]).unwrap();
        assert_eq!(metric_index(&pf.first_form), 0);
        let x = spec.position(&[0.0, 0.0]).unwrap();
        close(crate::pseudolinalg::inner(&x, &x, spec.ambient.signature).unwrap(), -1.0, 1e-14);
        // finite-difference oracle for I
        let h = 1e-6;
        let du: Vec<f64> = spec
            .position(&[h, 0.0])
            .unwrap()
            .iter()
            .zip(spec.position(&[-h, 0.0]).unwrap())
            .map(|(a, b)| (a - b) / (2.0 * h))
            .collect();
        close(crate::pseudolinalg::inner(&du, &du, spec.ambient.signature).unwrap(), pf.first_form[(0, 0)], 1e-8);
        let rho = scalar_curvature_at(&spec, &[0.1, 0.2]).unwrap();
        close(rho.intrinsic, 0.0, 1e-12);
        close(rho.extrinsic, 0.0, 1e-12);
    }

    #[test]
    fn normal_follows_mean_curvature_vector() {
        let spec = catalog("cmc-cylinder", &params(&[])).unwrap();
        let a = fundamental_forms(&spec, &[0.0, 0.0]).unwrap();
        assert!(a.normal[0] < 0.0);
        close(a.mean_curvature, 0.5, 1e-14);
        let b = fundamental_forms(&spec, &[1.0, 0.0]).unwrap();
        close(b.mean_curvature, 0.5, 1e-14);
    }

    #[test]
    fn minimal_points_fall_back_to_first_component() {
        // helicoid: H = 0 everywhere
        let spec = parse("map(u, v) -> (u*cos(v), u*sin(v), v) ambient R 3 0").unwrap();
        let a = fundamental_forms(&spec, &[0.0, 0.0]).unwrap();
        let first = a.normal.iter().find(|x| x.abs() > 1e-12).unwrap();
        assert!(*first > 0.0);
        let b = fundamental_forms(&spec, &[0.5, 0.9]).unwrap();
        assert!(a.normal.dot(&b.normal) > 0.0);
    }

    #[test]
    fn rejects_higher_codimension() {
        let spec = parse("map(u) -> (cos(u), sin(u), u) ambient R 3 0").unwrap();
        assert!(matches!(fundamental_forms(&spec, &[0.0]), Err(Error::UnsupportedCodimension(2))));
    }
}
