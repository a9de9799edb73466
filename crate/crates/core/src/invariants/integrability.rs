//! Codazzi, Ricci and Gauss-type equations between `g`, `A`, `B`, `C`.

use std::ops::{Add, Mul, Sub};

use super::conformal::{ConformalData, ConformalJets};
use super::jetalg::{self, Riemann};
use crate::error::{Error, Result};
use crate::immersion::ImmersionSpec;
use crate::pseudolinalg::{Matrix, Vector};

pub const DEFAULT_STEP: f64 = 1e-3;

/// Conformal data at a point with first derivatives of `A`, `B`, `C` and the curvature of `g`.
#[derive(Debug, Clone)]
pub struct LocalTensors {
    pub center: ConformalData,
    /// `d_blaschke[k] = d_k A`
    pub d_blaschke: Vec<Matrix>,
    pub d_second_form: Vec<Matrix>,
    pub d_conformal_form: Vec<Vector>,
    /// Christoffel symbols of `g`, `christoffels[k][(i, j)]`.
    pub christoffels: Vec<Matrix>,
    pub curvature: Riemann,
}

/// Per-equation maximum absolute residuals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrabilityResiduals {
    /// `B_ij,k - B_ik,j = g_ij C_k - g_ik C_j`
    pub codazzi_b: f64,
    /// `A_ij,k - A_ik,j = -eps_nu (B_ij C_k - B_ik C_j)`
    pub codazzi_a: f64,
    /// `C_i,j - C_j,i = g^{kl} (B_ik A_lj - B_jk A_li)`
    pub ricci_c: f64,
    /// Conformal Gauss equation for `R_ijkl` of `g`.
    pub gauss: f64,
    /// `(1-m) C_i = g^{jk} B_ij,k`
    pub trace_codazzi: f64,
}

impl IntegrabilityResiduals {
    pub fn named(&self) -> [(&'static str, f64); 5] {
        [
            ("codazzi_b", self.codazzi_b),
            ("codazzi_a", self.codazzi_a),
            ("ricci_c", self.ricci_c),
            ("gauss", self.gauss),
            ("trace_codazzi", self.trace_codazzi),
        ]
    }

    pub fn max(&self) -> f64 {
        self.named().iter().fold(0.0, |a, (_, x)| a.max(*x))
    }
}

/// Richardson-extrapolated central difference from samples at `-2h, -h, h, 2h`.
fn richardson<T>(f: [&T; 4], h: f64) -> T
where
    for<'a> &'a T: Sub<&'a T, Output = T>,
    T: Mul<f64, Output = T> + Add<Output = T>,
{
    let d1 = (f[2] - f[1]) * (1.0 / (2.0 * h));
    let d2 = (f[3] - f[0]) * (1.0 / (4.0 * h));
    d1 * (4.0 / 3.0) + d2 * (-1.0 / 3.0)
}

impl LocalTensors {
    pub fn new(spec: &ImmersionSpec, point: &[f64], step: f64) -> Result<Self> {
        let m = spec.dim();
        for k in 0..m {
            let (lo, hi) = spec.domain[k];
            if point[k] - 2.0 * step < lo || point[k] + 2.0 * step > hi {
                return Err(Error::StencilLeftDomain);
            }
        }
        let cj = ConformalJets::new(spec, point)?;
        let center = cj.data()?;
        let metric_jets = cj.metric();
        let metric_inv_jets = jetalg::inverse(&metric_jets)?;
        let gamma = jetalg::levi_civita(&metric_jets, &metric_inv_jets);
        let curvature = jetalg::riemann(&gamma, &center.metric);
        let christoffels = jetalg::gamma_values(&gamma);

        let mut d_blaschke = Vec::with_capacity(m);
        let mut d_second_form = Vec::with_capacity(m);
        let mut d_conformal_form = Vec::with_capacity(m);
        for k in 0..m {
            let samples = [-2.0, -1.0, 1.0, 2.0]
                .iter()
                .map(|s| {
                    let mut p = point.to_vec();
                    p[k] += s * step;
                    super::conformal::conformal_tensors(spec, &p)
                })
                .collect::<Result<Vec<_>>>()?;
            let pick = |f: fn(&ConformalData) -> &Matrix| -> Matrix {
                let s: Vec<&Matrix> = samples.iter().map(f).collect();
                richardson([s[0], s[1], s[2], s[3]], step)
            };
            d_blaschke.push(pick(|c| &c.blaschke));
            d_second_form.push(pick(|c| &c.second_form));
            let s: Vec<&Vector> = samples.iter().map(|c| &c.conformal_form).collect();
            d_conformal_form.push(richardson([s[0], s[1], s[2], s[3]], step));
        }
        Ok(Self { center, d_blaschke, d_second_form, d_conformal_form, christoffels, curvature })
    }

    /// `T_ij,k` for a symmetric 2-tensor with partials `dt`.
    fn covariant2(&self, t: &Matrix, dt: &[Matrix], i: usize, j: usize, k: usize) -> f64 {
        let m = t.nrows();
        let g = &self.christoffels;
        let mut v = dt[k][(i, j)];
        for l in 0..m {
            v -= g[l][(k, i)] * t[(l, j)] + g[l][(k, j)] * t[(i, l)];
        }
        v
    }

    /// `C_i,j`
    fn covariant1(&self, i: usize, j: usize) -> f64 {
        let c = &self.center.conformal_form;
        let m = c.len();
        self.d_conformal_form[j][i] - (0..m).map(|l| self.christoffels[l][(j, i)] * c[l]).sum::<f64>()
    }

    pub fn residuals(&self) -> IntegrabilityResiduals {
        let cd = &self.center;
        let m = cd.dim();
        let (a, b, c, g, gi) = (&cd.blaschke, &cd.second_form, &cd.conformal_form, &cd.metric, &cd.metric_inv);
        let eps = cd.epsilon_normal;
        let mut r = IntegrabilityResiduals {
            codazzi_b: 0.0,
            codazzi_a: 0.0,
            ricci_c: 0.0,
            gauss: 0.0,
            trace_codazzi: 0.0,
        };
        for i in 0..m {
            for j in 0..m {
                for k in 0..m {
                    let lhs = self.covariant2(b, &self.d_second_form, i, j, k)
                        - self.covariant2(b, &self.d_second_form, i, k, j);
                    let rhs = g[(i, j)] * c[k] - g[(i, k)] * c[j];
                    r.codazzi_b = r.codazzi_b.max((lhs - rhs).abs());

                    let lhs = self.covariant2(a, &self.d_blaschke, i, j, k)
                        - self.covariant2(a, &self.d_blaschke, i, k, j);
                    let rhs = -eps * (b[(i, j)] * c[k] - b[(i, k)] * c[j]);
                    r.codazzi_a = r.codazzi_a.max((lhs - rhs).abs());

                    for l in 0..m {
                        let rhs = eps * (b[(i, k)] * b[(j, l)] - b[(i, l)] * b[(j, k)])
                            + g[(i, k)] * a[(j, l)]
                            - g[(i, l)] * a[(j, k)]
                            + a[(i, k)] * g[(j, l)]
                            - a[(i, l)] * g[(j, k)];
                        r.gauss = r.gauss.max((self.curvature.get(i, j, k, l) - rhs).abs());
                    }
                }
                let lhs = self.covariant1(i, j) - self.covariant1(j, i);
                let mut rhs = 0.0;
                for k in 0..m {
                    for l in 0..m {
                        rhs += gi[(k, l)] * (b[(i, k)] * a[(l, j)] - b[(j, k)] * a[(l, i)]);
                    }
                }
                r.ricci_c = r.ricci_c.max((lhs - rhs).abs());
            }
            let mut div = 0.0;
            for j in 0..m {
                for k in 0..m {
                    div += gi[(j, k)] * self.covariant2(b, &self.d_second_form, i, j, k);
                }
            }
            r.trace_codazzi = r.trace_codazzi.max(((1.0 - m as f64) * c[i] - div).abs());
        }
        r
    }
}

pub fn integrability_residuals(spec: &ImmersionSpec, point: &[f64], step: f64) -> Result<IntegrabilityResiduals> {
    Ok(LocalTensors::new(spec, point, step)?.residuals())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::immersion::catalog::{catalog, params};
    use crate::immersion::parse;

    #[test]
    fn graph_surface_satisfies_all_equations() {
        // C != 0 here, so every term of every equation is exercised
        let spec = parse("map(u, v) -> (u, v, u^2 + 3*v^3) ambient R 3 0").unwrap();
        let lt = LocalTensors::new(&spec, &[0.3, 0.4], DEFAULT_STEP).unwrap();
        assert!(lt.center.max_conformal_form() > 0.1);
        let r = lt.residuals();
        assert!(r.max() < 1e-5, "{r:?}");
    }

    #[test]
    fn non_flat_conformal_metric() {
        let spec = catalog("cmc-cylinder", &params(&[("m", 3.0), ("k", 2.0)])).unwrap();
        let lt = LocalTensors::new(&spec, &[0.2, 0.1, -0.3], DEFAULT_STEP).unwrap();
        assert!(lt.curvature.max_abs() > 1e-2);
        let r = lt.residuals();
        assert!(r.max() < 1e-6, "{r:?}");
    }

    #[test]
    fn forcing_c_to_zero_breaks_codazzi() {
        let spec = parse("map(u, v) -> (u, v, u^2 + 3*v^3) ambient R 3 0").unwrap();
        let mut lt = LocalTensors::new(&spec, &[0.3, 0.4], DEFAULT_STEP).unwrap();
        lt.center.conformal_form.fill(0.0);
        assert!(lt.residuals().codazzi_b > 1e-2);
    }

    #[test]
    fn stencil_must_stay_inside() {
        let spec = catalog("cmc-cylinder", &params(&[])).unwrap();
        assert!(matches!(
            integrability_residuals(&spec, &[0.9995, 0.0], DEFAULT_STEP),
            Err(Error::StencilLeftDomain)
        ));
    }
}
