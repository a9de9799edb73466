//! Vectors and matrices of jets, and curvature from metric jets.

use crate::error::{Error, Result};
use crate::jets::Jet;
use crate::pseudolinalg::{Matrix, Signature, Vector};

pub(crate) type JetVec = Vec<Jet>;
pub(crate) type JetMat = Vec<Vec<Jet>>;

pub(crate) fn zero(nvars: usize) -> Jet {
    Jet::constant(0.0, nvars)
}

pub(crate) fn dot(a: &[Jet], b: &[Jet], sig: Signature) -> Jet {
    let mut acc = zero(a[0].nvars());
    for (k, (x, y)) in a.iter().zip(b).enumerate() {
        let p = x * y;
        acc = if sig.sign(k) < 0.0 { acc - p } else { acc + p };
    }
    acc
}

/// `sum_k c_k v_k` for jet coefficients and jet vectors.
pub(crate) fn combine(coeffs: &[Jet], vectors: &[JetVec]) -> JetVec {
    let n = vectors[0].len();
    (0..n)
        .map(|c| {
            let mut acc = zero(coeffs[0].nvars());
            for (a, v) in coeffs.iter().zip(vectors) {
                acc = acc + a * &v[c];
            }
            acc
        })
        .collect()
}

pub(crate) fn sub(a: &[Jet], b: &[Jet]) -> JetVec {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub(crate) fn scale(a: &[Jet], s: &Jet) -> JetVec {
    a.iter().map(|x| x * s).collect()
}

pub(crate) fn values(a: &[Jet]) -> Vector {
    Vector::from_iterator(a.len(), a.iter().map(Jet::value))
}

pub(crate) fn partials(a: &[Jet], var: usize) -> Vector {
    Vector::from_iterator(a.len(), a.iter().map(|x| x.partial(var)))
}

pub(crate) fn mat_values(a: &JetMat) -> Matrix {
    Matrix::from_fn(a.len(), a.len(), |i, j| a[i][j].value())
}

/// Inverse of a square jet matrix by Gauss-Jordan elimination, pivoting on constant terms.
pub(crate) fn inverse(a: &JetMat) -> Result<JetMat> {
    let n = a.len();
    let nv = a[0][0].nvars();
    let scale = a.iter().flatten().fold(0.0_f64, |s, x| s.max(x.value().abs()));
    let mut m = a.clone();
    let mut inv: JetMat = (0..n)
        .map(|i| (0..n).map(|j| Jet::constant(if i == j { 1.0 } else { 0.0 }, nv)).collect())
        .collect();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&x, &y| m[x][col].value().abs().total_cmp(&m[y][col].value().abs()))
            .expect("nonempty range");
        if m[pivot][col].value().abs() <= 1e-12 * scale {
            return Err(Error::DegenerateMetric);
        }
        m.swap(col, pivot);
        inv.swap(col, pivot);
        let p = m[col][col].recip()?;
        m[col] = m[col].iter().map(|x| x * &p).collect();
        inv[col] = inv[col].iter().map(|x| x * &p).collect();
        for r in 0..n {
            if r == col {
                continue;
            }
            let f = m[r][col].clone();
            let (pr_m, pr_inv) = (m[col].clone(), inv[col].clone());
            for c in 0..n {
                m[r][c] = &m[r][c] - &(&f * &pr_m[c]);
                inv[r][c] = &inv[r][c] - &(&f * &pr_inv[c]);
            }
        }
    }
    Ok(inv)
}

/// Christoffel symbols `gamma[k][i][j]` of a metric given as jets.
pub(crate) fn levi_civita(metric: &JetMat, metric_inv: &JetMat) -> Vec<JetMat> {
    let m = metric.len();
    let d: Vec<JetMat> = (0..m)
        .map(|l| (0..m).map(|i| (0..m).map(|j| metric[i][j].derivative(l)).collect()).collect())
        .collect();
    // first kind: lower[l][i][j] = (d_i g_jl + d_j g_il - d_l g_ij) / 2
    let lower: Vec<JetMat> = (0..m)
        .map(|l| {
            (0..m)
                .map(|i| (0..m).map(|j| (&d[i][j][l] + &d[j][i][l] - &d[l][i][j]).scale(0.5)).collect())
                .collect()
        })
        .collect();
    (0..m)
        .map(|k| {
            (0..m)
                .map(|i| {
                    (0..m)
                        .map(|j| {
                            let coeffs: JetVec = (0..m).map(|l| metric_inv[k][l].clone()).collect();
                            let terms: JetVec = (0..m).map(|l| lower[l][i][j].clone()).collect();
                            coeffs.iter().zip(&terms).fold(zero(metric[0][0].nvars()), |acc, (a, b)| acc + a * b)
                        })
                        .collect()
                })
                .collect()
        })
        .collect()
}

pub(crate) fn gamma_values(gamma: &[JetMat]) -> Vec<Matrix> {
    gamma.iter().map(mat_values).collect()
}

/// Fully covariant curvature tensor `R_ijkl` with `R_1212 > 0` on round spheres.
#[derive(Debug, Clone, PartialEq)]
pub struct Riemann {
    m: usize,
    data: Vec<f64>,
}

impl Riemann {
    pub fn dim(&self) -> usize {
        self.m
    }

    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        let m = self.m;
        self.data[((i * m + j) * m + k) * m + l]
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |a, x| a.max(x.abs()))
    }

    /// Scalar curvature `g^{ik} g^{jl} R_ijkl`.
    pub fn scalar(&self, metric_inv: &Matrix) -> f64 {
        let m = self.m;
        let mut s = 0.0;
        for i in 0..m {
            for j in 0..m {
                for k in 0..m {
                    for l in 0..m {
                        s += metric_inv[(i, k)] * metric_inv[(j, l)] * self.get(i, j, k, l);
                    }
                }
            }
        }
        s
    }
}

/// `R^i_jkl = d_k G^i_lj - d_l G^i_kj + G^i_kp G^p_lj - G^i_lp G^p_kj`, lowered with `metric`.
pub(crate) fn riemann(gamma: &[JetMat], metric: &Matrix) -> Riemann {
    let m = gamma.len();
    let g = gamma_values(gamma);
    let mut upper = vec![0.0; m * m * m * m];
    for i in 0..m {
        for j in 0..m {
            for k in 0..m {
                for l in 0..m {
                    let mut r = gamma[i][l][j].partial(k) - gamma[i][k][j].partial(l);
                    for p in 0..m {
                        r += g[i][(k, p)] * g[p][(l, j)] - g[i][(l, p)] * g[p][(k, j)];
                    }
                    upper[((i * m + j) * m + k) * m + l] = r;
                }
            }
        }
    }
    let mut data = vec![0.0; m * m * m * m];
    for i in 0..m {
        for j in 0..m {
            for k in 0..m {
                for l in 0..m {
                    data[((i * m + j) * m + k) * m + l] =
                        (0..m).map(|p| metric[(i, p)] * upper[((p * m + j) * m + k) * m + l]).sum();
                }
            }
        }
    }
    Riemann { m, data }
}
