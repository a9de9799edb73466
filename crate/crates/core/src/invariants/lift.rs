//! Canonical light-cone lift `Y` and the frame `(Y, N, Y_i, xi)`.

use super::conformal::ConformalJets;
use super::forms::sig_dot;
use super::jetalg::{self, JetVec};
use crate::error::Result;
use crate::immersion::{ImmersionSpec, SpaceForm};
use crate::pseudolinalg::{inverse, Matrix, Signature, Vector};

#[derive(Debug, Clone, PartialEq)]
pub struct FrameLift {
    pub point: Vec<f64>,
    pub signature: Signature,
    /// Canonical lift `Y`.
    pub position: Vector,
    /// `Y_i`
    pub tangents: Vec<Vector>,
    /// `Y_ij`
    pub hessian: Vec<Vec<Vector>>,
    /// The null vector `N` with `<N, Y> = 1`.
    pub null_normal: Vector,
    /// Conformal normal `xi`.
    pub normal: Vector,
    pub epsilon_normal: f64,
}

impl FrameLift {
    pub fn dim(&self) -> usize {
        self.tangents.len()
    }

    pub fn inner(&self, a: &Vector, b: &Vector) -> f64 {
        sig_dot(a, b, self.signature)
    }

    /// `<dY, dY>`, which should equal the conformal metric.
    pub fn metric(&self) -> Matrix {
        let m = self.dim();
        Matrix::from_fn(m, m, |i, j| self.inner(&self.tangents[i], &self.tangents[j]))
    }

    /// Frame `(Y, N, Y_1..Y_m, xi)`.
    pub fn frame(&self) -> Vec<Vector> {
        let mut f = vec![self.position.clone(), self.null_normal.clone()];
        f.extend(self.tangents.iter().cloned());
        f.push(self.normal.clone());
        f
    }

    /// Largest violation of the null-frame relations
    /// `<Y,Y> = <N,N> = <N,Y_k> = <xi,Y> = <xi,N> = <xi,Y_k> = 0`, `<N,Y> = 1`, `<xi,xi> = eps_nu`.
    pub fn invariant_residual(&self) -> f64 {
        let (y, n, xi) = (&self.position, &self.null_normal, &self.normal);
        let mut worst = [
            self.inner(y, y).abs(),
            self.inner(n, n).abs(),
            (self.inner(n, y) - 1.0).abs(),
            self.inner(xi, y).abs(),
            self.inner(xi, n).abs(),
            (self.inner(xi, xi) - self.epsilon_normal).abs(),
        ]
        .into_iter()
        .fold(0.0, f64::max);
        for t in &self.tangents {
            worst = worst.max(self.inner(n, t).abs()).max(self.inner(xi, t).abs()).max(self.inner(y, t).abs());
        }
        worst
    }

    /// `A_ij = -<Y_ij, N>`.
    pub fn blaschke(&self) -> Matrix {
        let m = self.dim();
        Matrix::from_fn(m, m, |i, j| -self.inner(&self.hessian[i][j], &self.null_normal))
    }

    /// `B_ij = eps_nu <Y_ij, xi>`.
    pub fn second_form(&self) -> Matrix {
        let m = self.dim();
        Matrix::from_fn(m, m, |i, j| self.epsilon_normal * self.inner(&self.hessian[i][j], &self.normal))
    }
}

/// Null lift of the space-form point, before conformal rescaling.
fn null_lift(form: SpaceForm, radius: f64, u: &[crate::jets::Jet], sig: Signature) -> JetVec {
    let nv = u[0].nvars();
    match form {
        SpaceForm::Flat => {
            let q = jetalg::dot(u, u, sig);
            let mut y = vec![q.add_scalar(1.0).scale(0.5)];
            y.extend(u.iter().cloned());
            y.push(q.add_scalar(-1.0).scale(0.5));
            y
        }
        SpaceForm::Spherical => {
            let mut y = vec![crate::jets::Jet::constant(radius, nv)];
            y.extend(u.iter().cloned());
            y
        }
        SpaceForm::Hyperbolic => {
            let mut y: JetVec = u.to_vec();
            y.push(crate::jets::Jet::constant(radius, nv));
            y
        }
    }
}

/// Image of an ambient tangent vector under the differential of [`null_lift`].
fn lift_direction(form: SpaceForm, u: &Vector, v: &Vector, sig: Signature) -> Vector {
    let n = v.len();
    match form {
        SpaceForm::Flat => {
            let c = sig_dot(u, v, sig);
            Vector::from_fn(n + 2, |k, _| if k == 0 || k == n + 1 { c } else { v[k - 1] })
        }
        SpaceForm::Spherical => Vector::from_fn(n + 1, |k, _| if k == 0 { 0.0 } else { v[k - 1] }),
        SpaceForm::Hyperbolic => Vector::from_fn(n + 1, |k, _| if k == n { 0.0 } else { v[k] }),
    }
}

pub(crate) fn lift_from(cj: &ConformalJets) -> Result<FrameLift> {
    let geo = &cj.geo;
    let m = geo.m;
    let sig = geo.signature();
    let lift_sig = geo.ambient.lift_signature();
    let y0 = null_lift(geo.ambient.form, geo.ambient.radius, &geo.position, sig);
    let et = cj.tau.exp();
    let y: JetVec = y0.iter().map(|c| c * &et).collect();

    let position = jetalg::values(&y);
    let tangents: Vec<Vector> = (0..m).map(|i| jetalg::partials(&y, i)).collect();
    let hessian: Vec<Vec<Vector>> = (0..m)
        .map(|i| {
            (0..m)
                .map(|j| Vector::from_iterator(y.len(), y.iter().map(|c| c.second_partial(i, j))))
                .collect()
        })
        .collect();

    let metric = Matrix::from_fn(m, m, |i, j| sig_dot(&tangents[i], &tangents[j], lift_sig));
    let metric_inv = inverse(&metric)?;
    // Laplacian: g^{ij} (Y_ij - g^{kl} <Y_ij, Y_l> Y_k)
    let mut laplacian = Vector::zeros(y.len());
    for i in 0..m {
        for j in 0..m {
            let along = Vector::from_fn(m, |l, _| sig_dot(&hessian[i][j], &tangents[l], lift_sig));
            let coeffs = &metric_inv * along;
            let mut t = hessian[i][j].clone();
            for k in 0..m {
                t.axpy(-coeffs[k], &tangents[k], 1.0);
            }
            laplacian.axpy(metric_inv[(i, j)], &t, 1.0);
        }
    }
    let mf = m as f64;
    let lap_sq = sig_dot(&laplacian, &laplacian, lift_sig);
    let null_normal = &laplacian * (-1.0 / mf) - &position * (lap_sq / (2.0 * mf * mf));

    let u = jetalg::values(&geo.position);
    let lifted = lift_direction(geo.ambient.form, &u, &geo.normal, sig);
    let normal = &lifted - &position * sig_dot(&lifted, &null_normal, lift_sig);

    Ok(FrameLift {
        point: geo.point.clone(),
        signature: lift_sig,
        position,
        tangents,
        hessian,
        null_normal,
        normal,
        epsilon_normal: geo.epsilon_normal,
    })
}

/// Canonical lift and moving frame at `point`.
pub fn frame_lift(spec: &ImmersionSpec, point: &[f64]) -> Result<FrameLift> {
    lift_from(&ConformalJets::new(spec, point)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::immersion::catalog::{catalog, catalog_entries, params};
    use crate::invariants::conformal::conformal_tensors;

    #[test]
    fn cylinder_lift() {
        let spec = catalog("cmc-cylinder", &params(&[])).unwrap();
        let fl = frame_lift(&spec, &[0.2, 0.1]).unwrap();
        assert!(fl.inner(&fl.position, &fl.position).abs() < 1e-12);
        assert!((fl.inner(&fl.null_normal, &fl.position) - 1.0).abs() < 1e-12);
        assert!(fl.invariant_residual() < 1e-12);
    }

    #[test]
    fn lift_reproduces_conformal_tensors_on_catalog() {
        for e in catalog_entries() {
            let spec = e.spec(&params(&[])).unwrap();
            let p = [0.15, -0.1];
            let cd = conformal_tensors(&spec, &p).unwrap();
            let fl = frame_lift(&spec, &p).unwrap();
            assert!(fl.invariant_residual() < 1e-9, "{}: {}", e.name, fl.invariant_residual());
            assert!((fl.metric() - &cd.metric).amax() < 1e-9, "{}", e.name);
            assert!((fl.blaschke() - &cd.blaschke).amax() < 1e-9, "{}: {} vs {}", e.name, fl.blaschke(), cd.blaschke);
            assert!((fl.second_form() - &cd.second_form).amax() < 1e-9, "{}", e.name);
        }
    }
}
