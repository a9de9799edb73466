//! Immersions `u: R^m -> R^N_s` into flat space, spheres and hyperbolic spaces.

pub mod catalog;
pub mod expr;

use std::fmt;

use crate::error::{Error, Result};
use crate::jets::{Jet, MAX_VARS};
use crate::pseudolinalg::{Matrix, Signature};

pub use catalog::{catalog, catalog_entries, CatalogEntry};
pub use expr::{parse_expr, BinOp, Expr, Func};

use expr::{tokenize, Parser, Tok};

/// Tolerance for `<u,u> = eps r^2` at evaluation points.
pub const CONSTRAINT_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SpaceForm {
    Flat,
    Spherical,
    Hyperbolic,
}

impl SpaceForm {
    pub fn epsilon(self) -> i32 {
        match self {
            SpaceForm::Flat => 0,
            SpaceForm::Spherical => 1,
            SpaceForm::Hyperbolic => -1,
        }
    }

    pub fn letter(self) -> &'static str {
        match self {
            SpaceForm::Flat => "R",
            SpaceForm::Spherical => "S",
            SpaceForm::Hyperbolic => "H",
        }
    }
}

/// Ambient space form and the flat space `R^N_s` that contains it.
///
/// `signature` is always the container: `S^n_s` sits in `R^{n+1}_s`,
/// `H^n_s` in `R^{n+1}_{s+1}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmbientSpec {
    pub form: SpaceForm,
    pub signature: Signature,
    pub radius: f64,
}

impl AmbientSpec {
    pub fn new(form: SpaceForm, dim: usize, index: usize, radius: f64) -> Result<Self> {
        let signature = Signature::new(dim, index)?;
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::InvalidParam(format!("radius must be positive, got {radius}")));
        }
        if form == SpaceForm::Hyperbolic && index == 0 {
            return Err(Error::InvalidParam("hyperbolic space needs a container index >= 1".into()));
        }
        Ok(Self { form, signature, radius })
    }

    pub fn epsilon(&self) -> i32 {
        self.form.epsilon()
    }

    /// Sectional curvature `eps / r^2` of the space form.
    pub fn curvature(&self) -> f64 {
        self.epsilon() as f64 / (self.radius * self.radius)
    }

    /// Dimension of the space form itself.
    pub fn form_dim(&self) -> usize {
        match self.form {
            SpaceForm::Flat => self.signature.dim(),
            _ => self.signature.dim() - 1,
        }
    }

    /// Signature of `R^{n+2}_{s+1}` hosting the light-cone lift.
    pub fn lift_signature(&self) -> Signature {
        let form_index = match self.form {
            SpaceForm::Hyperbolic => self.signature.index() - 1,
            _ => self.signature.index(),
        };
        Signature::new(self.form_dim() + 2, form_index + 1).expect("valid lift signature")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImmersionSpec {
    pub params: Vec<String>,
    pub components: Vec<Expr>,
    pub ambient: AmbientSpec,
    pub domain: Vec<(f64, f64)>,
    /// Index of the induced metric, when known.
    pub expected_index: Option<usize>,
}

impl ImmersionSpec {
    pub fn new(
        params: Vec<String>,
        components: Vec<Expr>,
        ambient: AmbientSpec,
        domain: Option<Vec<(f64, f64)>>,
    ) -> Result<Self> {
        let m = params.len();
        if m == 0 || m > MAX_VARS {
            return Err(Error::Arity(format!("between 1 and {MAX_VARS} parameters required, got {m}")));
        }
        if components.len() != ambient.signature.dim() {
            return Err(Error::Arity(format!(
                "{} components for an ambient of dimension {}",
                components.len(),
                ambient.signature.dim()
            )));
        }
        let domain = domain.unwrap_or_else(|| vec![(-1.0, 1.0); m]);
        if domain.len() != m {
            return Err(Error::Arity(format!("{} domain intervals for {m} parameters", domain.len())));
        }
        if domain.iter().any(|(a, b)| !(a < b)) {
            return Err(Error::InvalidParam("empty domain interval".into()));
        }
        Ok(Self { params, components, ambient, domain, expected_index: None })
    }

    pub fn with_expected_index(mut self, t: usize) -> Self {
        self.expected_index = Some(t);
        self
    }

    /// Intrinsic dimension `m`.
    pub fn dim(&self) -> usize {
        self.params.len()
    }

    pub fn codimension(&self) -> usize {
        self.ambient.form_dim() - self.dim()
    }

    pub fn contains(&self, point: &[f64]) -> bool {
        point.len() == self.dim()
            && point.iter().zip(&self.domain).all(|(x, (a, b))| *a <= *x && *x <= *b)
    }

    pub fn domain_center(&self) -> Vec<f64> {
        self.domain.iter().map(|(a, b)| 0.5 * (a + b)).collect()
    }

    /// Order-4 jets of every ambient coordinate at `point`.
    pub fn evaluate(&self, point: &[f64]) -> Result<Vec<Jet>> {
        if point.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: point.len() });
        }
        if !self.contains(point) {
            return Err(Error::Domain(format!("point {point:?} outside the parameter domain")));
        }
        let vars = Jet::variables(point)?;
        let jets = self
            .components
            .iter()
            .map(|c| c.eval_jet(&vars))
            .collect::<Result<Vec<_>>>()?;
        if self.ambient.epsilon() != 0 {
            let sig = self.ambient.signature;
            let norm: f64 = jets.iter().enumerate().map(|(k, j)| sig.sign(k) * j.value() * j.value()).sum();
            let r = self.ambient.radius;
            let defect = norm - self.ambient.epsilon() as f64 * r * r;
            if defect.abs() > CONSTRAINT_TOL {
                return Err(Error::ConstraintViolation(defect));
            }
        }
        Ok(jets)
    }

    /// Point values of the immersion.
    pub fn position(&self, point: &[f64]) -> Result<Vec<f64>> {
        self.components.iter().map(|c| c.eval_f64(point)).collect()
    }

    /// Composes with a constant linear map of the container, `u -> T u`.
    pub fn transformed(&self, t: &Matrix) -> Result<Self> {
        let n = self.ambient.signature.dim();
        if t.nrows() != n || t.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, got: t.nrows() });
        }
        let components = (0..n)
            .map(|i| {
                let row: Vec<f64> = (0..n).map(|j| t[(i, j)]).collect();
                Expr::linear_combination(&row, &self.components)
            })
            .collect();
        Ok(Self { components, ..self.clone() })
    }

    /// Applies a Moebius transformation of a flat ambient: `t` acts on the
    /// null lift `((q+1)/2, u, (q-1)/2)` in `R^{N+2}_{s+1}` and the result is
    /// projected back to the affine chart.
    pub fn conformally_transformed(&self, t: &Matrix) -> Result<Self> {
        if self.ambient.form != SpaceForm::Flat {
            return Err(Error::InvalidParam("conformal transforms need a flat ambient".into()));
        }
        let sig = self.ambient.signature;
        let n = sig.dim();
        if t.nrows() != n + 2 || t.ncols() != n + 2 {
            return Err(Error::DimensionMismatch { expected: n + 2, got: t.nrows() });
        }
        let squares: Vec<Expr> = self.components.iter().map(|c| Expr::Pow(Box::new(c.clone()), 2.0)).collect();
        let signs: Vec<f64> = (0..n).map(|k| sig.sign(k)).collect();
        let q = Expr::linear_combination(&signs, &squares);
        let mut lift = vec![Expr::linear_combination(&[0.5, 0.5], &[q.clone(), Expr::Num(1.0)])];
        lift.extend(self.components.iter().cloned());
        lift.push(Expr::linear_combination(&[0.5, -0.5], &[q, Expr::Num(1.0)]));
        let row = |i: usize| -> Vec<f64> { (0..n + 2).map(|j| t[(i, j)]).collect() };
        let first = row(0);
        let last = row(n + 1);
        let diff: Vec<f64> = first.iter().zip(&last).map(|(a, b)| a - b).collect();
        let denom = Expr::linear_combination(&diff, &lift);
        let components = (1..=n)
            .map(|i| Expr::bin(BinOp::Div, Expr::linear_combination(&row(i), &lift), denom.clone()))
            .collect();
        Ok(Self { components, ..self.clone() })
    }

    /// Reparametrizes by `x = a y + b` (componentwise affine).
    pub fn reparametrized(&self, scale: &[f64], shift: &[f64]) -> Result<Self> {
        let m = self.dim();
        if scale.len() != m || shift.len() != m || scale.iter().any(|s| *s == 0.0) {
            return Err(Error::InvalidParam("bad affine reparametrization".into()));
        }
        let replacements: Vec<Expr> = (0..m)
            .map(|i| {
                Expr::bin(
                    BinOp::Add,
                    Expr::bin(BinOp::Mul, Expr::Num(scale[i]), Expr::Param(i)),
                    Expr::Num(shift[i]),
                )
            })
            .collect();
        let components = self.components.iter().map(|c| c.substitute(&replacements)).collect();
        let domain = self
            .domain
            .iter()
            .enumerate()
            .map(|(i, (a, b))| {
                let (lo, hi) = ((a - shift[i]) / scale[i], (b - shift[i]) / scale[i]);
                (lo.min(hi), lo.max(hi))
            })
            .collect();
        Ok(Self { components, domain, ..self.clone() })
    }

    pub fn to_dsl(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for ImmersionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "map({}) -> (", self.params.join(", "))?;
        for (i, c) in self.components.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{}", c.display(&self.params))?;
        }
        let a = &self.ambient;
        write!(
            f,
            ") ambient {} {} {}",
            a.form.letter(),
            a.signature.dim(),
            a.signature.index()
        )?;
        if a.radius != 1.0 {
            write!(f, " radius {:?}", a.radius)?;
        }
        f.write_str(" domain ")?;
        for (i, (lo, hi)) in self.domain.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "[{lo:?}, {hi:?}]")?;
        }
        Ok(())
    }
}

/// Parses a full immersion description.
pub fn parse(text: &str) -> Result<ImmersionSpec> {
    let empty: Vec<String> = Vec::new();
    let mut p = Parser::new(tokenize(text)?, &empty);
    p.expect_keyword("map")?;
    p.expect(Tok::LParen)?;
    let mut params = vec![p.ident()?];
    while *p.peek() == Tok::Comma {
        p.next();
        params.push(p.ident()?);
    }
    for name in &params {
        if Func::from_name(name).is_some() || ["map", "ambient", "radius", "domain"].contains(&name.as_str()) {
            return Err(Error::InvalidParam(format!("`{name}` is reserved")));
        }
    }
    for (i, a) in params.iter().enumerate() {
        if params[..i].contains(a) {
            return Err(Error::InvalidParam(format!("duplicate parameter `{a}`")));
        }
    }
    p.expect(Tok::RParen)?;
    p.expect(Tok::Arrow)?;
    p.expect(Tok::LParen)?;
    p.set_params(&params);
    let mut components = vec![p.expr()?];
    while *p.peek() == Tok::Comma {
        p.next();
        components.push(p.expr()?);
    }
    p.expect(Tok::RParen)?;
    p.expect_keyword("ambient")?;
    let form = match p.ident()?.as_str() {
        "R" => SpaceForm::Flat,
        "S" => SpaceForm::Spherical,
        "H" => SpaceForm::Hyperbolic,
        other => return Err(Error::InvalidParam(format!("unknown space `{other}` (expected R, S or H)"))),
    };
    let dim = integer(&mut p)?;
    let index = integer(&mut p)?;
    let mut radius = 1.0;
    let mut domain = None;
    if matches!(p.peek(), Tok::Ident(s) if s == "radius") {
        p.next();
        radius = p.signed_number()?;
    }
    if matches!(p.peek(), Tok::Ident(s) if s == "domain") {
        p.next();
        let mut intervals = vec![interval(&mut p)?];
        while *p.peek() == Tok::Comma {
            p.next();
            intervals.push(interval(&mut p)?);
        }
        domain = Some(intervals);
    }
    if *p.peek() != Tok::Eof {
        return Err(p.error_here(format!("unexpected {}", p.peek())));
    }
    let ambient = AmbientSpec::new(form, dim, index, radius)?;
    ImmersionSpec::new(params, components, ambient, domain)
}

fn integer(p: &mut Parser<'_>) -> Result<usize> {
    let x = p.signed_number()?;
    if x < 0.0 || x.fract() != 0.0 {
        return Err(p.error_here(format!("expected a non-negative integer, found {x}")));
    }
    Ok(x as usize)
}

fn interval(p: &mut Parser<'_>) -> Result<(f64, f64)> {
    p.expect(Tok::LBracket)?;
    let lo = p.signed_number()?;
    p.expect(Tok::Comma)?;
    let hi = p.signed_number()?;
    p.expect(Tok::RBracket)?;
    Ok((lo, hi))
}
