//! Truncated multivariate Taylor expansions ("jets") up to total order 4.
//!
//! A [`Jet`] stores `d^a f / a!` for every multi-index `a` with `|a| <= 4`
//! in a dense table. Each jet also carries the order up to which its
//! coefficients are valid: differentiation lowers it by one and binary
//! operations take the minimum of their operands.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::OnceLock;

use crate::error::{Error, Result};

pub const MAX_ORDER: usize = 4;
pub const MAX_VARS: usize = 4;

type MultiIndex = [u8; MAX_VARS];

#[derive(Debug)]
struct Layout {
    nvars: usize,
    monomials: Vec<MultiIndex>,
    degree: Vec<usize>,
    /// `(i, j, k)` with `monomials[i] + monomials[j] = monomials[k]`.
    products: Vec<(u16, u16, u16)>,
    /// `shift[var][i]` is the index of `monomials[i] + e_var`, if within order.
    shift: Vec<Vec<Option<usize>>>,
}

impl Layout {
    fn build(nvars: usize) -> Self {
        let mut monomials = Vec::new();
        for total in 0..=MAX_ORDER {
            let mut alpha = [0u8; MAX_VARS];
            push_with_total(&mut monomials, &mut alpha, 0, nvars, total);
        }
        let degree: Vec<usize> =
            monomials.iter().map(|a| a.iter().map(|&x| x as usize).sum()).collect();
        let lookup = |alpha: &MultiIndex| monomials.iter().position(|m| m == alpha);
        let mut products = Vec::new();
        for i in 0..monomials.len() {
            for j in 0..monomials.len() {
                if degree[i] + degree[j] > MAX_ORDER {
                    continue;
                }
                let mut sum = [0u8; MAX_VARS];
                for v in 0..MAX_VARS {
                    sum[v] = monomials[i][v] + monomials[j][v];
                }
                let k = lookup(&sum).expect("sum of monomials within order");
                products.push((i as u16, j as u16, k as u16));
            }
        }
        let shift = (0..nvars)
            .map(|var| {
                monomials
                    .iter()
                    .map(|alpha| {
                        let mut beta = *alpha;
                        beta[var] += 1;
                        lookup(&beta)
                    })
                    .collect()
            })
            .collect();
        Self { nvars, monomials, degree, products, shift }
    }

    fn index_of(&self, alpha: &[usize]) -> Option<usize> {
        if alpha.len() != self.nvars {
            return None;
        }
        self.monomials
            .iter()
            .position(|m| m.iter().zip(alpha).all(|(&a, &b)| a as usize == b))
    }

    fn get(nvars: usize) -> &'static Layout {
        static LAYOUTS: [OnceLock<Layout>; MAX_VARS + 1] =
            [OnceLock::new(), OnceLock::new(), OnceLock::new(), OnceLock::new(), OnceLock::new()];
        LAYOUTS[nvars].get_or_init(|| Layout::build(nvars))
    }
}

fn push_with_total(
    out: &mut Vec<MultiIndex>,
    alpha: &mut MultiIndex,
    var: usize,
    nvars: usize,
    remaining: usize,
) {
    if nvars == 0 {
        if remaining == 0 {
            out.push(*alpha);
        }
        return;
    }
    if var == nvars - 1 {
        alpha[var] = remaining as u8;
        out.push(*alpha);
        alpha[var] = 0;
        return;
    }
    for k in (0..=remaining).rev() {
        alpha[var] = k as u8;
        push_with_total(out, alpha, var + 1, nvars, remaining - k);
    }
    alpha[var] = 0;
}

#[derive(Clone)]
pub struct Jet {
    layout: &'static Layout,
    order: usize,
    coeffs: Vec<f64>,
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Jet")
            .field("nvars", &self.layout.nvars)
            .field("order", &self.order)
            .field("coeffs", &self.coeffs)
            .finish()
    }
}

impl PartialEq for Jet {
    fn eq(&self, other: &Self) -> bool {
        self.layout.nvars == other.layout.nvars
            && self.order == other.order
            && self.coeffs == other.coeffs
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

impl Jet {
    fn check_nvars(nvars: usize) -> Result<()> {
        if nvars > MAX_VARS {
            return Err(Error::IndexOutOfRange { index: nvars, nvars: MAX_VARS });
        }
        Ok(())
    }

    /// Jet of the constant function `value`.
    pub fn constant(value: f64, nvars: usize) -> Self {
        let layout = Layout::get(nvars.min(MAX_VARS));
        let mut coeffs = vec![0.0; layout.monomials.len()];
        coeffs[0] = value;
        Self { layout, order: MAX_ORDER, coeffs }
    }

    /// Jet of the coordinate function `x_index` expanded at `value`.
    pub fn variable(index: usize, value: f64, nvars: usize) -> Result<Self> {
        Self::check_nvars(nvars)?;
        if index >= nvars {
            return Err(Error::IndexOutOfRange { index, nvars });
        }
        let mut jet = Self::constant(value, nvars);
        let mut alpha = vec![0; nvars];
        alpha[index] = 1;
        let k = jet.layout.index_of(&alpha).expect("first-order monomial");
        jet.coeffs[k] = 1.0;
        Ok(jet)
    }

    /// All coordinate jets at `point`.
    pub fn variables(point: &[f64]) -> Result<Vec<Self>> {
        (0..point.len()).map(|i| Self::variable(i, point[i], point.len())).collect()
    }

    pub fn nvars(&self) -> usize {
        self.layout.nvars
    }

    /// Order up to which the coefficients are valid.
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    /// Taylor coefficient `d^alpha f / alpha!`.
    pub fn coeff(&self, alpha: &[usize]) -> Result<f64> {
        let total: usize = alpha.iter().sum();
        if total > self.order {
            return Err(Error::OrderOverflow { requested: total, available: self.order });
        }
        let k = self
            .layout
            .index_of(alpha)
            .ok_or(Error::DimensionMismatch { expected: self.nvars(), got: alpha.len() })?;
        Ok(self.coeffs[k])
    }

    /// Partial derivative `d^alpha f` at the expansion point.
    pub fn extract(&self, alpha: &[usize]) -> Result<f64> {
        let c = self.coeff(alpha)?;
        Ok(c * alpha.iter().map(|&a| factorial(a)).product::<f64>())
    }

    /// First partial derivative `df/dx_var` at the expansion point.
    pub fn partial(&self, var: usize) -> f64 {
        self.layout.shift[var][0].map_or(0.0, |k| self.coeffs[k])
    }

    /// Second partial derivative `d^2 f / dx_a dx_b` at the expansion point.
    pub fn second_partial(&self, a: usize, b: usize) -> f64 {
        let Some(ia) = self.layout.shift[a][0] else { return 0.0 };
        let Some(iab) = self.layout.shift[b][ia] else { return 0.0 };
        let factor = if a == b { 2.0 } else { 1.0 };
        factor * self.coeffs[iab]
    }

    /// The jet of `df/dx_var`, valid to one order less.
    pub fn derivative(&self, var: usize) -> Self {
        assert!(var < self.nvars(), "derivative variable out of range");
        let mut coeffs = vec![0.0; self.coeffs.len()];
        let new_order = self.order.saturating_sub(1);
        for (i, alpha) in self.layout.monomials.iter().enumerate() {
            if self.layout.degree[i] > new_order {
                continue;
            }
            if let Some(k) = self.layout.shift[var][i] {
                coeffs[i] = (alpha[var] as f64 + 1.0) * self.coeffs[k];
            }
        }
        Self { layout: self.layout, order: new_order, coeffs }
    }

    /// Drops coefficients above `order`.
    pub fn truncate(&self, order: usize) -> Self {
        let order = order.min(self.order);
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, &c)| if self.layout.degree[i] <= order { c } else { 0.0 })
            .collect();
        Self { layout: self.layout, order, coeffs }
    }

    fn same_shape(&self, other: &Self) {
        assert_eq!(
            self.layout.nvars, other.layout.nvars,
            "jets with different variable counts"
        );
    }

    fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        self.same_shape(other);
        let order = self.order.min(other.order);
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .enumerate()
            .map(|(i, (&a, &b))| if self.layout.degree[i] <= order { f(a, b) } else { 0.0 })
            .collect();
        Self { layout: self.layout, order, coeffs }
    }

    fn product(&self, other: &Self) -> Self {
        self.same_shape(other);
        let order = self.order.min(other.order);
        let deg = &self.layout.degree;
        let mut coeffs = vec![0.0; self.coeffs.len()];
        for &(i, j, k) in &self.layout.products {
            let (i, j, k) = (i as usize, j as usize, k as usize);
            if deg[k] <= order {
                coeffs[k] += self.coeffs[i] * other.coeffs[j];
            }
        }
        Self { layout: self.layout, order, coeffs }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            layout: self.layout,
            order: self.order,
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    pub fn add_scalar(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.coeffs[0] += s;
        out
    }

    /// `f(self)` given `derivs[k] = f^(k)(self.value())`.
    fn compose(&self, derivs: [f64; MAX_ORDER + 1]) -> Self {
        let mut delta = self.clone();
        delta.coeffs[0] = 0.0;
        let mut result = Self::constant(derivs[0], self.nvars()).truncate(self.order);
        let mut power = delta.clone();
        for (k, d) in derivs.iter().enumerate().skip(1) {
            if k > self.order {
                break;
            }
            result = &result + &power.scale(d / factorial(k));
            if k < MAX_ORDER {
                power = power.product(&delta);
            }
        }
        result
    }

    pub fn try_div(&self, other: &Self) -> Result<Self> {
        if other.nvars() != self.nvars() {
            return Err(Error::JetShape(self.nvars(), other.nvars()));
        }
        Ok(self.product(&other.recip()?))
    }

    pub fn recip(&self) -> Result<Self> {
        let x = self.value();
        if x == 0.0 || !x.is_finite() {
            return Err(Error::DivisionByZeroJet);
        }
        let r = 1.0 / x;
        Ok(self.compose([r, -r * r, 2.0 * r.powi(3), -6.0 * r.powi(4), 24.0 * r.powi(5)]))
    }

    pub fn sin(&self) -> Self {
        let (s, c) = self.value().sin_cos();
        self.compose([s, c, -s, -c, s])
    }

    pub fn cos(&self) -> Self {
        let (s, c) = self.value().sin_cos();
        self.compose([c, -s, -c, s, c])
    }

    pub fn sinh(&self) -> Self {
        let (s, c) = (self.value().sinh(), self.value().cosh());
        self.compose([s, c, s, c, s])
    }

    pub fn cosh(&self) -> Self {
        let (s, c) = (self.value().sinh(), self.value().cosh());
        self.compose([c, s, c, s, c])
    }

    pub fn exp(&self) -> Self {
        let e = self.value().exp();
        self.compose([e; MAX_ORDER + 1])
    }

    pub fn ln(&self) -> Result<Self> {
        let x = self.value();
        if !(x > 0.0) {
            return Err(Error::Domain(format!("log of non-positive value {x}")));
        }
        let r = 1.0 / x;
        Ok(self.compose([x.ln(), r, -r * r, 2.0 * r.powi(3), -6.0 * r.powi(4)]))
    }

    pub fn sqrt(&self) -> Result<Self> {
        let x = self.value();
        if !(x > 0.0) {
            if x == 0.0 && self.coeffs.iter().all(|&c| c == 0.0) {
                return Ok(self.clone());
            }
            return Err(Error::Domain(format!("sqrt of non-positive value {x}")));
        }
        self.powf(0.5)
    }

    /// `self^p` for a constant exponent.
    pub fn powf(&self, p: f64) -> Result<Self> {
        if p.fract() == 0.0 && p.abs() <= 64.0 {
            return self.powi(p as i32);
        }
        let x = self.value();
        if !(x > 0.0) {
            return Err(Error::Domain(format!("non-integer power of non-positive value {x}")));
        }
        let mut derivs = [0.0; MAX_ORDER + 1];
        let mut falling = 1.0;
        for (k, d) in derivs.iter_mut().enumerate() {
            *d = falling * x.powf(p - k as f64);
            falling *= p - k as f64;
        }
        Ok(self.compose(derivs))
    }

    pub fn powi(&self, n: i32) -> Result<Self> {
        let base = if n < 0 { self.recip()? } else { self.clone() };
        let mut result = Self::constant(1.0, self.nvars()).truncate(self.order);
        for _ in 0..n.unsigned_abs() {
            result = result.product(&base);
        }
        Ok(result)
    }
}

macro_rules! binop {
    ($trait:ident, $method:ident, $body:expr) => {
        impl $trait<&Jet> for &Jet {
            type Output = Jet;
            fn $method(self, rhs: &Jet) -> Jet {
                let f: fn(&Jet, &Jet) -> Jet = $body;
                f(self, rhs)
            }
        }
        impl $trait<Jet> for Jet {
            type Output = Jet;
            fn $method(self, rhs: Jet) -> Jet {
                (&self).$method(&rhs)
            }
        }
        impl $trait<&Jet> for Jet {
            type Output = Jet;
            fn $method(self, rhs: &Jet) -> Jet {
                (&self).$method(rhs)
            }
        }
        impl $trait<Jet> for &Jet {
            type Output = Jet;
            fn $method(self, rhs: Jet) -> Jet {
                self.$method(&rhs)
            }
        }
    };
}

binop!(Add, add, |a, b| a.zip_with(b, |x, y| x + y));
binop!(Sub, sub, |a, b| a.zip_with(b, |x, y| x - y));
binop!(Mul, mul, |a, b| a.product(b));

impl Mul<f64> for &Jet {
    type Output = Jet;
    fn mul(self, rhs: f64) -> Jet {
        self.scale(rhs)
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(self, rhs: f64) -> Jet {
        self.scale(rhs)
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}
