//! Linear algebra on pseudo-Euclidean spaces `R^N_s`.
//!
//! The first `s` coordinates carry a negative sign in the inner product,
//! the remaining `N - s` a positive one.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{Error, Result};

pub type Vector = DVector<f64>;
pub type Matrix = DMatrix<f64>;

/// Relative determinant threshold used by [`solve`] and [`inverse`].
pub const SINGULAR_THRESHOLD: f64 = 1e-12;
/// Relative threshold below which `|<v,v>|` counts as a null direction.
pub const NULL_THRESHOLD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Signature {
    dim: usize,
    index: usize,
}

impl Signature {
    pub fn new(dim: usize, index: usize) -> Result<Self> {
        if dim == 0 || index > dim {
            return Err(Error::InvalidParam(format!(
                "signature ({dim}, {index}) needs 0 <= index <= dim, dim > 0"
            )));
        }
        Ok(Self { dim, index })
    }

    pub fn euclidean(dim: usize) -> Self {
        Self { dim, index: 0 }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn index(&self) -> usize {
        self.index
    }

    /// Sign of the `k`-th axis: -1 for the first `index` axes, +1 after.
    #[inline]
    pub fn sign(&self, k: usize) -> f64 {
        if k < self.index {
            -1.0
        } else {
            1.0
        }
    }

    pub fn metric(&self) -> Matrix {
        Matrix::from_fn(self.dim, self.dim, |i, j| if i == j { self.sign(i) } else { 0.0 })
    }

    /// Applies the metric to a vector (lowers the index).
    pub fn flat(&self, v: &Vector) -> Vector {
        Vector::from_fn(v.len(), |k, _| self.sign(k) * v[k])
    }

    fn check(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: v.len() });
        }
        Ok(())
    }
}

/// Signed inner product `-sum_{i<s} x_i y_i + sum_{i>=s} x_i y_i`.
pub fn inner(x: &[f64], y: &[f64], sig: Signature) -> Result<f64> {
    sig.check(x)?;
    sig.check(y)?;
    Ok(inner_unchecked(x, y, sig))
}

#[inline]
pub(crate) fn inner_unchecked(x: &[f64], y: &[f64], sig: Signature) -> f64 {
    x.iter().zip(y).enumerate().map(|(k, (a, b))| sig.sign(k) * a * b).sum()
}

/// Gram matrix of pairwise signed inner products.
pub fn gram(vectors: &[Vector], sig: Signature) -> Result<Matrix> {
    for v in vectors {
        sig.check(v.as_slice())?;
    }
    let n = vectors.len();
    let mut g = Matrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let value = inner_unchecked(vectors[i].as_slice(), vectors[j].as_slice(), sig);
            g[(i, j)] = value;
            g[(j, i)] = value;
        }
    }
    Ok(g)
}

fn entry_scale(m: &Matrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

/// Fails with `NearSingular` when `|det m| < 1e-12 * scale^dim`.
pub fn check_nonsingular(m: &Matrix) -> Result<f64> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch { expected: m.nrows(), got: m.ncols() });
    }
    let det = m.determinant();
    let scale = entry_scale(m);
    let threshold = SINGULAR_THRESHOLD * scale.powi(m.nrows() as i32);
    if !det.is_finite() || det.abs() < threshold || scale == 0.0 {
        return Err(Error::NearSingular { det });
    }
    Ok(det)
}

/// Solves `m x = rhs` for a square `m`; `rhs` may have several columns.
pub fn solve(m: &Matrix, rhs: &Matrix) -> Result<Matrix> {
    if rhs.nrows() != m.nrows() {
        return Err(Error::DimensionMismatch { expected: m.nrows(), got: rhs.nrows() });
    }
    check_nonsingular(m)?;
    let lu = m.clone().full_piv_lu();
    lu.solve(rhs).ok_or(Error::NearSingular { det: 0.0 })
}

pub fn solve_vector(m: &Matrix, rhs: &Vector) -> Result<Vector> {
    let rhs = Matrix::from_column_slice(rhs.len(), 1, rhs.as_slice());
    let x = solve(m, &rhs)?;
    Ok(x.column(0).into_owned())
}

pub fn inverse(m: &Matrix) -> Result<Matrix> {
    solve(m, &Matrix::identity(m.nrows(), m.ncols()))
}

/// Signed Gram-Schmidt in the given order, without pivoting.
///
/// Returns the frame and the signs `<e_k, e_k> = +-1`.
pub fn orthonormalize(vectors: &[Vector], sig: Signature) -> Result<(Vec<Vector>, Vec<f64>)> {
    let mut frame: Vec<Vector> = Vec::with_capacity(vectors.len());
    let mut signs = Vec::with_capacity(vectors.len());
    for (index, v) in vectors.iter().enumerate() {
        sig.check(v.as_slice())?;
        let mut w = v.clone();
        for (e, s) in frame.iter().zip(&signs) {
            let c: f64 = inner_unchecked(w.as_slice(), e.as_slice(), sig) * s;
            w.axpy(-c, e, 1.0);
        }
        let norm = inner_unchecked(w.as_slice(), w.as_slice(), sig);
        let euclid = w.norm_squared().max(v.norm_squared());
        if norm.abs() <= NULL_THRESHOLD * euclid || euclid == 0.0 {
            return Err(Error::NullDirection { index, norm });
        }
        let sign = norm.signum();
        w /= norm.abs().sqrt();
        frame.push(w);
        signs.push(sign);
    }
    Ok((frame, signs))
}

/// Vector orthogonal (w.r.t. `sig`) to `N-1` linearly independent vectors in `R^N`.
///
/// Built from cofactors, so it depends smoothly on the inputs and
/// `det[rows; sig.flat(n)] > 0`.
pub fn orthogonal_complement(rows: &[Vector], sig: Signature) -> Result<Vector> {
    let n = sig.dim();
    if rows.len() + 1 != n {
        return Err(Error::DimensionMismatch { expected: n - 1, got: rows.len() });
    }
    for r in rows {
        sig.check(r.as_slice())?;
    }
    let mut euclid = Vector::zeros(n);
    for k in 0..n {
        let minor = Matrix::from_fn(n - 1, n - 1, |i, j| {
            let col = if j < k { j } else { j + 1 };
            rows[i][col]
        });
        let parity = if (n - 1 + k) % 2 == 0 { 1.0 } else { -1.0 };
        euclid[k] = parity * minor.determinant();
    }
    // raise the index so that <n, w> = euclid . w = 0
    Ok(sig.flat(&euclid))
}

/// Random element of `O(sig)` near the identity: a product of rotations in
/// planes of equal sign and boosts in mixed planes, each with parameter in
/// `[-spread, spread]`.
pub fn random_isometry<R: Rng + ?Sized>(sig: Signature, spread: f64, rng: &mut R) -> Matrix {
    let n = sig.dim();
    let mut t = Matrix::identity(n, n);
    for a in 0..n {
        for b in a + 1..n {
            let x: f64 = rng.gen_range(-spread..=spread);
            let mut plane = Matrix::identity(n, n);
            if sig.sign(a) == sig.sign(b) {
                let (s, c) = x.sin_cos();
                plane[(a, a)] = c;
                plane[(a, b)] = -s;
                plane[(b, a)] = s;
                plane[(b, b)] = c;
            } else {
                let (s, c) = (x.sinh(), x.cosh());
                plane[(a, a)] = c;
                plane[(a, b)] = s;
                plane[(b, a)] = s;
                plane[(b, b)] = c;
            }
            t = plane * t;
        }
    }
    if rng.gen_bool(0.5) {
        // include an orientation-reversing reflection in the last axis
        let last = n - 1;
        t.row_mut(last).neg_mut();
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_column_slice(xs)
    }

    #[test]
    fn inner_examples() {
        let s21 = Signature::new(2, 1).unwrap();
        assert_eq!(inner(&[1.0, 0.0], &[1.0, 0.0], s21).unwrap(), -1.0);
        assert_eq!(inner(&[1.0, 1.0], &[1.0, 1.0], s21).unwrap(), 0.0);
        let s30 = Signature::new(3, 0).unwrap();
        assert_eq!(inner(&[3.0, 4.0, 0.0], &[3.0, 4.0, 0.0], s30).unwrap(), 25.0);
        assert!(matches!(
            inner(&[1.0], &[1.0, 2.0], s21),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn gram_examples() {
        let s21 = Signature::new(2, 1).unwrap();
        let g = gram(&[v(&[1.0, 0.0]), v(&[0.0, 1.0])], s21).unwrap();
        assert_eq!(g, Matrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, 1.0]));
        let g = gram(&[v(&[1.0, 1.0])], s21).unwrap();
        assert_eq!(g[(0, 0)], 0.0);
        let g = gram(&[v(&[1.0, 1.0]), v(&[1.0, -1.0])], s21).unwrap();
        assert_eq!(g, Matrix::from_row_slice(2, 2, &[0.0, -2.0, -2.0, 0.0]));
    }

    #[test]
    fn solve_examples() {
        let m = Matrix::from_diagonal(&v(&[2.0, -2.0]));
        let x = solve_vector(&m, &v(&[2.0, 2.0])).unwrap();
        assert!((x - v(&[1.0, -1.0])).norm() < 1e-15);
        let x = solve_vector(&Matrix::identity(3, 3), &v(&[1.0, 2.0, 3.0])).unwrap();
        assert_eq!(x, v(&[1.0, 2.0, 3.0]));
        let m = Matrix::from_diagonal(&v(&[1e-16, 1.0]));
        assert!(matches!(solve_vector(&m, &v(&[1.0, 1.0])), Err(Error::NearSingular { .. })));
    }

    #[test]
    fn orthonormalize_examples() {
        let s21 = Signature::new(2, 1).unwrap();
        let (f, s) = orthonormalize(&[v(&[2.0, 0.0])], s21).unwrap();
        assert_eq!((f[0].clone(), s[0]), (v(&[1.0, 0.0]), -1.0));
        let (f, s) = orthonormalize(&[v(&[0.0, 3.0])], s21).unwrap();
        assert_eq!((f[0].clone(), s[0]), (v(&[0.0, 1.0]), 1.0));
        assert!(matches!(
            orthonormalize(&[v(&[1.0, 1.0])], s21),
            Err(Error::NullDirection { index: 0, .. })
        ));
    }

    #[test]
    fn random_isometry_preserves_metric() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
        for (n, s) in [(3, 0), (4, 1), (5, 2)] {
            let sig = Signature::new(n, s).unwrap();
            for _ in 0..5 {
                let t = random_isometry(sig, 0.7, &mut rng);
                let eta = sig.metric();
                assert!((t.transpose() * &eta * &t - eta).amax() < 1e-12);
            }
        }
    }

    #[test]
    fn complement_is_orthogonal_and_oriented() {
        let sig = Signature::new(4, 2).unwrap();
        let rows = vec![v(&[1.0, 0.2, 0.3, 0.0]), v(&[0.0, 1.0, 0.5, 0.1]), v(&[0.3, 0.0, 0.2, 1.0])];
        let n = orthogonal_complement(&rows, sig).unwrap();
        for r in &rows {
            assert!(inner(r.as_slice(), n.as_slice(), sig).unwrap().abs() < 1e-14);
        }
        let mut m = Matrix::zeros(4, 4);
        for (i, r) in rows.iter().enumerate() {
            m.set_row(i, &r.transpose());
        }
        m.set_row(3, &sig.flat(&n).transpose());
        assert!(m.determinant() > 0.0);
    }
}
