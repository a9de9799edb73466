//! Frame equations of conformally flat para-umbilical surfaces in the light cone of `R^5_2`.
//!
//! In flat conformal coordinates `(u, v)` with `g = diag(s_u, s_v)` and `B = diag(1/2, -1/2)`
//! the frame `(Y, N, Y_u, Y_v, xi)` obeys a linear constant-coefficient system, and each
//! coordinate of `Y` splits as `F(u) + G(v)` with `F''' + k_u F' = 0`, `G''' + k_v G' = 0`.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::classify::{sample_conformal, sample_points};
use crate::error::{Error, Result};
use crate::immersion::catalog::{entry, Params};
use crate::immersion::ImmersionSpec;
use crate::pseudolinalg::{gram, Matrix, Signature, Vector};

pub const DEFAULT_STEP: f64 = 1e-3;
/// Allowed Gram-matrix drift per unit of parameter length.
pub const DEFAULT_DRIFT_TOL: f64 = 1e-7;
/// Relative drift of `f''^2 + k f'^2` that flags a step as too large.
pub const SCALAR_DRIFT_TOL: f64 = 1e-6;

/// One RK4 step of the linear system `x' = K x`: `I + hK + (hK)^2/2 + (hK)^3/6 + (hK)^4/24`.
fn rk4_propagator(k: &Matrix, h: f64) -> Matrix {
    let n = k.nrows();
    let hk = k * h;
    let mut term = Matrix::identity(n, n);
    let mut sum = term.clone();
    for j in 1..=4 {
        term = &term * &hk / j as f64;
        sum += &term;
    }
    sum
}

/// Closed-form `(f, f', f'')` of `f''' + k f' = 0` at time `t` after the initial data.
pub fn analytic_scalar(k: f64, init: [f64; 3], t: f64) -> [f64; 3] {
    let [f0, d0, s0] = init;
    // f = f0 + d0 S1(t) + s0 S2(t) with S1' = C, S2' = S1
    let (s1, c, s2) = if k > 0.0 {
        let w = k.sqrt();
        ((w * t).sin() / w, (w * t).cos(), (1.0 - (w * t).cos()) / k)
    } else if k < 0.0 {
        let w = (-k).sqrt();
        ((w * t).sinh() / w, (w * t).cosh(), ((w * t).cosh() - 1.0) / -k)
    } else {
        (t, 1.0, 0.5 * t * t)
    };
    // S1'' = -k S1, S2'' = C
    [f0 + d0 * s1 + s0 * s2, d0 * c + s0 * s1, -k * d0 * s1 + s0 * c]
}

/// RK4 solution of `f''' + k f' = 0` at every point of `tgrid`.
pub fn solve_scalar_ode(k: f64, init: [f64; 3], tgrid: &[f64]) -> Result<Vec<[f64; 3]>> {
    if !k.is_finite() || init.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidParam("non-finite coefficient or initial data".into()));
    }
    let increasing = tgrid.windows(2).all(|w| w[1] > w[0]);
    let decreasing = tgrid.windows(2).all(|w| w[1] < w[0]);
    if tgrid.is_empty() || !(increasing || decreasing) {
        return Err(Error::InvalidParam("time grid must be non-empty and strictly monotone".into()));
    }
    let system = Matrix::from_row_slice(3, 3, &[0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0, -k, 0.0]);
    let invariant = |x: &[f64; 3]| x[2] * x[2] + k * x[1] * x[1];
    let q0 = invariant(&init);
    let scale = init[2] * init[2] + k.abs() * init[1] * init[1];
    let mut out = vec![init];
    let mut x = Vector::from_column_slice(&init);
    for w in tgrid.windows(2) {
        x = rk4_propagator(&system, w[1] - w[0]) * x;
        let state = [x[0], x[1], x[2]];
        let drift = (invariant(&state) - q0).abs();
        if drift > SCALAR_DRIFT_TOL * scale.max(f64::MIN_POSITIVE) && drift > 0.0 {
            return Err(Error::StepTooLarge(drift / scale.max(f64::MIN_POSITIVE)));
        }
        out.push(state);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CaseId {
    I,
    II,
    III,
    T1,
    T2,
    T3,
    T4,
    T5,
}

impl CaseId {
    pub const ALL: [CaseId; 8] = [
        CaseId::I,
        CaseId::II,
        CaseId::III,
        CaseId::T1,
        CaseId::T2,
        CaseId::T3,
        CaseId::T4,
        CaseId::T5,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CaseId::I => "I",
            CaseId::II => "II",
            CaseId::III => "III",
            CaseId::T1 => "T1",
            CaseId::T2 => "T2",
            CaseId::T3 => "T3",
            CaseId::T4 => "T4",
            CaseId::T5 => "T5",
        }
    }

    pub fn is_timelike(self) -> bool {
        !matches!(self, CaseId::I | CaseId::II | CaseId::III)
    }

    /// Catalog surface realizing the case.
    pub fn catalog_name(self) -> &'static str {
        match self {
            CaseId::I => "sl-H1xH1",
            CaseId::II => "sl-H1xS1",
            CaseId::III => "sl-H1xR1",
            CaseId::T1 => "tl-H11xS1",
            CaseId::T2 => "tl-S11xH1",
            CaseId::T3 => "tl-S11xS1",
            CaseId::T4 => "tl-R11xS1",
            CaseId::T5 => "tl-S11xR1",
        }
    }

    pub fn uses_r(self) -> bool {
        !matches!(self, CaseId::III | CaseId::T4 | CaseId::T5)
    }

    pub fn default_r(self) -> f64 {
        match self {
            CaseId::II => 1.0,
            CaseId::T1 => 1.5,
            _ => 0.6,
        }
    }

    pub fn constraint(self) -> &'static str {
        match self {
            CaseId::I | CaseId::T3 => "0 < r < 1",
            CaseId::II | CaseId::T2 => "r > 0",
            CaseId::T1 => "r > 1",
            _ => "none",
        }
    }
}

impl fmt::Display for CaseId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CaseId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CaseId::ALL
            .into_iter()
            .find(|c| c.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidParam(format!("unknown case `{s}`")))
    }
}

/// Sum `a + b` forced by `tr_g A` on a flat para-umbilical surface.
pub fn blaschke_budget(timelike: bool) -> f64 {
    if timelike {
        0.25
    } else {
        -0.25
    }
}

/// Frame signs `(<Y_u,Y_u>, <Y_v,Y_v>, <xi,xi>)`.
pub fn frame_signs(timelike: bool) -> (f64, f64, f64) {
    if timelike {
        (-1.0, 1.0, 1.0)
    } else {
        (1.0, 1.0, -1.0)
    }
}

/// One coordinate summand as a function of a single parameter.
#[derive(Debug, Clone, Copy)]
enum Term {
    Zero,
    Const(f64),
    Cosh(f64, f64),
    Sinh(f64, f64),
    Cos(f64, f64),
    Sin(f64, f64),
    /// `c0 + c1 t + c2 t^2`
    Poly(f64, f64, f64),
}

impl Term {
    /// `(f, f', f'')`
    fn eval(self, t: f64) -> [f64; 3] {
        match self {
            Term::Zero => [0.0; 3],
            Term::Const(c) => [c, 0.0, 0.0],
            Term::Cosh(w, c) => [c * (w * t).cosh(), c * w * (w * t).sinh(), c * w * w * (w * t).cosh()],
            Term::Sinh(w, c) => [c * (w * t).sinh(), c * w * (w * t).cosh(), c * w * w * (w * t).sinh()],
            Term::Cos(w, c) => [c * (w * t).cos(), -c * w * (w * t).sin(), -c * w * w * (w * t).cos()],
            Term::Sin(w, c) => [c * (w * t).sin(), c * w * (w * t).cos(), -c * w * w * (w * t).sin()],
            Term::Poly(c0, c1, c2) => [c0 + c1 * t + c2 * t * t, c1 + 2.0 * c2 * t, 2.0 * c2],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameState {
    pub u: f64,
    pub v: f64,
    pub y: Vector,
    pub n: Vector,
    pub y_u: Vector,
    pub y_v: Vector,
    pub xi: Vector,
}

impl FrameState {
    pub fn vectors(&self) -> [&Vector; 5] {
        [&self.y, &self.n, &self.y_u, &self.y_v, &self.xi]
    }

    /// Frame vectors as the rows of a 5x5 matrix.
    fn rows(&self) -> Matrix {
        Matrix::from_fn(5, 5, |i, j| self.vectors()[i][j])
    }

    fn from_rows(u: f64, v: f64, x: &Matrix) -> Self {
        let row = |i: usize| Vector::from_fn(5, |j, _| x[(i, j)]);
        Self { u, v, y: row(0), n: row(1), y_u: row(2), y_v: row(3), xi: row(4) }
    }

    pub fn gram(&self) -> Matrix {
        let vs: Vec<Vector> = self.vectors().into_iter().cloned().collect();
        gram(&vs, frame_signature()).expect("five vectors of length five")
    }

    /// Largest entry of `gram - canonical`.
    pub fn gram_residual(&self, timelike: bool) -> f64 {
        (self.gram() - canonical_gram(timelike)).amax()
    }

    /// Max-norm distance over all five vectors.
    pub fn distance(&self, other: &FrameState) -> f64 {
        self.vectors().iter().zip(other.vectors()).map(|(a, b)| (*a - b).amax()).fold(0.0, f64::max)
    }
}

pub fn frame_signature() -> Signature {
    Signature::new(5, 2).expect("valid signature")
}

/// Gram matrix of `(Y, N, Y_u, Y_v, xi)` for the given causal type.
pub fn canonical_gram(timelike: bool) -> Matrix {
    let (su, sv, sx) = frame_signs(timelike);
    let mut g = Matrix::zeros(5, 5);
    g[(0, 1)] = 1.0;
    g[(1, 0)] = 1.0;
    g[(2, 2)] = su;
    g[(3, 3)] = sv;
    g[(4, 4)] = sx;
    g
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CaseSpec {
    pub case_id: CaseId,
    pub r: f64,
    /// Blaschke eigenvalue along `u`, where `B = 1/2`.
    pub a: f64,
    /// Blaschke eigenvalue along `v`, where `B = -1/2`.
    pub b: f64,
}

impl CaseSpec {
    pub fn new(case_id: CaseId, r: f64) -> Result<Self> {
        let ok = match case_id {
            CaseId::I | CaseId::T3 => r > 0.0 && r < 1.0,
            CaseId::II | CaseId::T2 => r > 0.0,
            CaseId::T1 => r > 1.0,
            CaseId::III | CaseId::T4 | CaseId::T5 => true,
        };
        if !r.is_finite() || !ok {
            return Err(Error::InvalidParam(format!("case {case_id} needs {}, got r = {r}", case_id.constraint())));
        }
        let k_u = match case_id {
            CaseId::I => -r * r,
            CaseId::II | CaseId::T2 => -(r * r + 1.0),
            CaseId::III | CaseId::T5 => -1.0,
            CaseId::T1 | CaseId::T3 => r * r - 1.0,
            CaseId::T4 => 0.0,
        };
        let timelike = case_id.is_timelike();
        let (su, _, sx) = frame_signs(timelike);
        // k_u = s_u (2a + eps_xi / 4)
        let a = (su * k_u - sx / 4.0) / 2.0;
        let b = blaschke_budget(timelike) - a;
        Ok(Self { case_id, r, a, b })
    }

    pub fn timelike(&self) -> bool {
        self.case_id.is_timelike()
    }

    /// `(k_u, k_v)` in `F''' + k_u F' = 0`, `G''' + k_v G' = 0`.
    pub fn ode_coefficients(&self) -> (f64, f64) {
        let (su, sv, sx) = frame_signs(self.timelike());
        (su * (2.0 * self.a + sx / 4.0), sv * (2.0 * self.b + sx / 4.0))
    }

    /// Deviation of `s_u k_u + s_v k_v` from its fixed value `eps_xi`.
    pub fn budget_residual(&self) -> f64 {
        let (su, sv, sx) = frame_signs(self.timelike());
        let (ku, kv) = self.ode_coefficients();
        (su * ku + sv * kv - sx).abs()
    }

    pub fn catalog_params(&self) -> Params {
        let mut p = Params::new();
        if self.case_id.uses_r() {
            p.insert("r".into(), self.r);
        }
        p
    }

    fn terms(&self) -> [(Term, Term); 5] {
        use Term::*;
        let r = self.r;
        match self.case_id {
            CaseId::I => {
                let s = (1.0 - r * r).sqrt();
                [
                    (Cosh(r, 1.0 / r), Zero),
                    (Zero, Cosh(s, 1.0 / s)),
                    (Sinh(r, 1.0 / r), Zero),
                    (Zero, Sinh(s, 1.0 / s)),
                    (Const(1.0 / (r * s)), Zero),
                ]
            }
            CaseId::II => {
                let k = (r * r + 1.0).sqrt();
                [
                    (Const(1.0 / (r * k)), Zero),
                    (Cosh(k, 1.0 / k), Zero),
                    (Sinh(k, 1.0 / k), Zero),
                    (Zero, Cos(r, 1.0 / r)),
                    (Zero, Sin(r, 1.0 / r)),
                ]
            }
            CaseId::III => [
                (Zero, Poly(0.0, 0.0, 0.5)),
                (Cosh(1.0, 1.0), Zero),
                (Sinh(1.0, 1.0), Zero),
                (Zero, Poly(0.0, 1.0, 0.0)),
                (Zero, Poly(-1.0, 0.0, 0.5)),
            ],
            CaseId::T1 => {
                let k = (r * r - 1.0).sqrt();
                [
                    (Sin(k, 1.0 / k), Zero),
                    (Cos(k, 1.0 / k), Zero),
                    (Zero, Cos(r, 1.0 / r)),
                    (Zero, Sin(r, 1.0 / r)),
                    (Const(1.0 / (r * k)), Zero),
                ]
            }
            CaseId::T2 => {
                let k = (r * r + 1.0).sqrt();
                [
                    (Sinh(k, 1.0 / k), Zero),
                    (Zero, Cosh(r, 1.0 / r)),
                    (Cosh(k, 1.0 / k), Zero),
                    (Zero, Sinh(r, 1.0 / r)),
                    (Const(1.0 / (r * k)), Zero),
                ]
            }
            CaseId::T3 => {
                let k = (1.0 - r * r).sqrt();
                [
                    (Sinh(k, 1.0 / k), Zero),
                    (Const(1.0 / (r * k)), Zero),
                    (Cosh(k, 1.0 / k), Zero),
                    (Zero, Cos(r, 1.0 / r)),
                    (Zero, Sin(r, 1.0 / r)),
                ]
            }
            CaseId::T4 => [
                (Poly(1.0, 0.0, -0.5), Zero),
                (Poly(0.0, 1.0, 0.0), Zero),
                (Zero, Cos(1.0, 1.0)),
                (Zero, Sin(1.0, 1.0)),
                (Poly(0.0, 0.0, -0.5), Zero),
            ],
            CaseId::T5 => [
                (Zero, Poly(1.0, 0.0, 0.5)),
                (Sinh(1.0, 1.0), Zero),
                (Cosh(1.0, 1.0), Zero),
                (Zero, Poly(0.0, 1.0, 0.0)),
                (Zero, Poly(0.0, 0.0, 0.5)),
            ],
        }
    }

    /// `Y = F(u) + G(v)` in closed form, with `N` and `xi` recovered from `Y_uu`, `Y_vv`.
    pub fn closed_form(&self, u: f64, v: f64) -> FrameState {
        let terms = self.terms();
        let fu: Vec<[f64; 3]> = terms.iter().map(|(f, _)| f.eval(u)).collect();
        let gv: Vec<[f64; 3]> = terms.iter().map(|(_, g)| g.eval(v)).collect();
        let y = Vector::from_fn(5, |i, _| fu[i][0] + gv[i][0]);
        let y_u = Vector::from_fn(5, |i, _| fu[i][1]);
        let y_v = Vector::from_fn(5, |i, _| gv[i][1]);
        let y_uu = Vector::from_fn(5, |i, _| fu[i][2]);
        let y_vv = Vector::from_fn(5, |i, _| gv[i][2]);
        let (su, sv, _) = frame_signs(self.timelike());
        let (a, b) = (self.a, self.b);
        let n = (&y_uu * su + &y_vv * sv + &y * (a + b)) * -0.5;
        let xi = &y_uu * su - &y_vv * sv + &y * (a - b);
        FrameState { u, v, y, n, y_u, y_v, xi }
    }

    /// Coefficient matrix of `d/du` (axis 0) or `d/dv` (axis 1) acting on the frame rows.
    fn system(&self, axis: usize) -> Matrix {
        let (su, sv, sx) = frame_signs(self.timelike());
        let (s, ev, beta, tangent) = if axis == 0 { (su, self.a, 0.5, 2) } else { (sv, self.b, -0.5, 3) };
        let mut k = Matrix::zeros(5, 5);
        // Y' = Y_t
        k[(0, tangent)] = 1.0;
        // N' = ev Y_t
        k[(1, tangent)] = ev;
        // Y_tt = s (-ev Y - N + beta xi); the other tangent is constant
        k[(tangent, 0)] = -s * ev;
        k[(tangent, 1)] = -s;
        k[(tangent, 4)] = s * beta;
        // xi' = -eps_xi beta Y_t
        k[(4, tangent)] = -sx * beta;
        k
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameIntegrator {
    pub step: f64,
    /// Gram drift allowed per unit of parameter length.
    pub drift_tol: f64,
}

impl Default for FrameIntegrator {
    fn default() -> Self {
        Self { step: DEFAULT_STEP, drift_tol: DEFAULT_DRIFT_TOL }
    }
}

impl FrameIntegrator {
    fn advance(&self, case: &CaseSpec, x: Matrix, axis: usize, from: f64, to: f64) -> Matrix {
        let len = to - from;
        if len == 0.0 {
            return x;
        }
        let steps = (len.abs() / self.step).ceil().max(1.0) as usize;
        let p = rk4_propagator(&case.system(axis), len / steps as f64);
        let mut x = x;
        for _ in 0..steps {
            x = &p * x;
        }
        x
    }

    /// Integrates through each waypoint of `path`, first in `u` at fixed `v`, then in `v`.
    pub fn integrate(&self, case: &CaseSpec, path: &[(f64, f64)], init: &FrameState) -> Result<Vec<FrameState>> {
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::InvalidParam(format!("step must be positive, got {}", self.step)));
        }
        let timelike = case.timelike();
        let r0 = init.gram_residual(timelike);
        if r0 > 1e-10 {
            return Err(Error::InvalidParam(format!("initial frame violates the Gram relations by {r0:e}")));
        }
        let mut out = vec![init.clone()];
        let (mut u, mut v) = (init.u, init.v);
        let mut x = init.rows();
        let mut length = 0.0;
        for &(tu, tv) in path {
            x = self.advance(case, x, 0, u, tu);
            x = self.advance(case, x, 1, v, tv);
            length += (tu - u).abs() + (tv - v).abs();
            (u, v) = (tu, tv);
            let state = FrameState::from_rows(u, v, &x);
            let drift = state.gram_residual(timelike);
            if drift > self.drift_tol * length.max(1.0) {
                return Err(Error::GramDrift(drift));
            }
            out.push(state);
        }
        Ok(out)
    }

    /// Frames on the product grid `us x vs`, reached from `init` at `(us[0], vs[0])`.
    pub fn integrate_grid(&self, case: &CaseSpec, us: &[f64], vs: &[f64], init: &FrameState) -> Result<Vec<Vec<FrameState>>> {
        let u_path: Vec<(f64, f64)> = us.iter().skip(1).map(|&u| (u, init.v)).collect();
        let column = self.integrate(case, &u_path, init)?;
        column
            .par_iter()
            .map(|start| {
                let v_path: Vec<(f64, f64)> = vs.iter().skip(1).map(|&v| (start.u, v)).collect();
                self.integrate(case, &v_path, start)
            })
            .collect()
    }
}

/// `integrate` with the default integrator.
pub fn integrate_frame(case: &CaseSpec, path: &[(f64, f64)], init: &FrameState) -> Result<Vec<FrameState>> {
    FrameIntegrator::default().integrate(case, path, init)
}

/// `max |Y(u,v) + Y(u0,v0) - Y(u,v0) - Y(u0,v)|` over a product grid `ys[i][j] = Y(u_i, v_j)`.
pub fn splitting_check(ys: &[Vec<Vector>]) -> f64 {
    let mut worst = 0.0_f64;
    let Some(first) = ys.first() else { return 0.0 };
    for row in ys {
        for (j, y) in row.iter().enumerate() {
            let r = y + &first[0] - &row[0] - &first[j];
            worst = worst.max(r.amax());
        }
    }
    worst
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n < 2 {
        return vec![a];
    }
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameReport {
    pub case: CaseSpec,
    pub step: f64,
    /// Largest deviation of any integrated frame vector from the closed form.
    pub max_error: f64,
    /// Largest Gram-matrix deviation, divided by the parameter length travelled.
    pub gram_drift: f64,
    pub closed_form_gram: f64,
    pub splitting_residual: f64,
    /// Distance between the `u`-then-`v` and `v`-then-`u` frames at `(1, 1)`.
    pub commutation_residual: f64,
    /// Closed-form error at step `0.1` over the error at `0.05`.
    pub convergence_ratio: f64,
}

impl FrameReport {
    pub fn named(&self) -> [(&'static str, f64); 5] {
        [
            ("max_error", self.max_error),
            ("gram_drift", self.gram_drift),
            ("closed_form_gram", self.closed_form_gram),
            ("splitting", self.splitting_residual),
            ("commutation", self.commutation_residual),
        ]
    }

    pub fn passed(&self, tol: f64) -> bool {
        self.named().iter().all(|(_, x)| *x < tol) && self.convergence_ratio >= 14.0
    }
}

fn endpoint_error(case: &CaseSpec, step: f64) -> Result<f64> {
    let integrator = FrameIntegrator { step, drift_tol: f64::INFINITY };
    let states = integrator.integrate(case, &[(1.0, 1.0)], &case.closed_form(0.0, 0.0))?;
    Ok(states[1].distance(&case.closed_form(1.0, 1.0)))
}

/// Integrates the frame over `[0,1]^2` on a `grid x grid` lattice and compares with the closed form.
pub fn verify_case(case: &CaseSpec, grid: usize, step: f64) -> Result<FrameReport> {
    let integrator = FrameIntegrator { step, ..Default::default() };
    let axis = linspace(0.0, 1.0, grid.max(2));
    let init = case.closed_form(0.0, 0.0);
    let frames = integrator.integrate_grid(case, &axis, &axis, &init)?;
    let timelike = case.timelike();
    let (mut max_error, mut gram_drift, mut closed_form_gram) = (0.0_f64, 0.0_f64, 0.0_f64);
    for row in &frames {
        for s in row {
            let exact = case.closed_form(s.u, s.v);
            max_error = max_error.max(s.distance(&exact));
            gram_drift = gram_drift.max(s.gram_residual(timelike) / (s.u.abs() + s.v.abs()).max(1.0));
            closed_form_gram = closed_form_gram.max(exact.gram_residual(timelike));
        }
    }
    let ys: Vec<Vec<Vector>> = frames.iter().map(|row| row.iter().map(|s| s.y.clone()).collect()).collect();
    let u_first = integrator.integrate(case, &[(1.0, 1.0)], &init)?;
    let v_first = integrator.integrate(case, &[(0.0, 1.0), (1.0, 1.0)], &init)?;
    let commutation_residual = u_first[1].distance(&v_first[2]);
    let convergence_ratio = endpoint_error(case, 0.1)? / endpoint_error(case, 0.05)?;
    Ok(FrameReport {
        case: *case,
        step,
        max_error,
        gram_drift,
        closed_form_gram,
        splitting_residual: splitting_check(&ys),
        commutation_residual,
        convergence_ratio,
    })
}

/// Blaschke data of a catalog surface compared against the flat para-umbilical model.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundTrip {
    pub surface: String,
    pub timelike: bool,
    pub samples: usize,
    /// Mean `A` eigenvalue on the time-like eigendirection of `B`, or on `B = 1/2` for space-like surfaces.
    pub a: f64,
    /// Mean `A` eigenvalue on the other eigendirection.
    pub b: f64,
    pub a_stddev: f64,
    pub b_stddev: f64,
    /// `max |eig(B) - (1/2, -1/2)|`
    pub second_form_residual: f64,
    /// Largest `|A(e, f)|` between the two `B` eigendirections.
    pub off_diagonal: f64,
    pub conformal_form: f64,
    /// Largest `|scalar curvature of g|`; for surfaces this is the full curvature.
    pub curvature: f64,
    /// `|a + b - budget|`
    pub budget_residual: f64,
    /// `max(|a - a_case|, |b - b_case|)` when a case is attached.
    ///
    /// Reversing the normal swaps `a` and `b` on a space-like surface, so there both pairings are tried.
    pub case_residual: Option<f64>,
}

impl RoundTrip {
    pub fn named(&self) -> Vec<(&'static str, f64)> {
        let mut v = vec![
            ("second_form", self.second_form_residual),
            ("off_diagonal", self.off_diagonal),
            ("conformal_form", self.conformal_form),
            ("curvature", self.curvature),
            ("a_stddev", self.a_stddev),
            ("b_stddev", self.b_stddev),
            ("budget", self.budget_residual),
        ];
        if let Some(c) = self.case_residual {
            v.push(("case", c));
        }
        v
    }

    pub fn passed(&self, tol: f64) -> bool {
        self.named().iter().all(|(_, x)| *x < tol)
    }
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Runs the invariants pipeline on a surface and measures it against the model with the given causal type.
pub fn roundtrip_surface(name: &str, spec: &ImmersionSpec, timelike: bool, samples: usize) -> Result<RoundTrip> {
    if spec.dim() != 2 {
        return Err(Error::InvalidParam(format!("frame model needs a surface, got m = {}", spec.dim())));
    }
    let data = sample_conformal(spec, &sample_points(spec, samples))?;
    let (mut a_vals, mut b_vals) = (Vec::new(), Vec::new());
    let (mut sf, mut off, mut cf, mut curv) = (0.0_f64, 0.0_f64, 0.0_f64, 0.0_f64);
    for cd in &data {
        let raised = cd.raise(&cd.second_form);
        let half_tr = 0.5 * raised.trace();
        let disc = (half_tr * half_tr - raised.determinant()).max(0.0).sqrt();
        let (hi, lo) = (half_tr + disc, half_tr - disc);
        sf = sf.max((hi - 0.5).abs()).max((lo + 0.5).abs());
        let eigvec = |ev: f64| -> Vector {
            let c1 = Vector::from_column_slice(&[raised[(0, 1)], ev - raised[(0, 0)]]);
            let c2 = Vector::from_column_slice(&[ev - raised[(1, 1)], raised[(1, 0)]]);
            if c1.norm() >= c2.norm() {
                c1
            } else {
                c2
            }
        };
        let form = |m: &Matrix, x: &Vector, y: &Vector| (x.transpose() * m * y)[(0, 0)];
        let (mut e, mut f) = (eigvec(hi), eigvec(lo));
        if timelike && form(&cd.metric, &f, &f) < 0.0 {
            std::mem::swap(&mut e, &mut f);
        }
        a_vals.push(form(&cd.blaschke, &e, &e) / form(&cd.metric, &e, &e));
        b_vals.push(form(&cd.blaschke, &f, &f) / form(&cd.metric, &f, &f));
        let scale = (form(&cd.metric, &e, &e) * form(&cd.metric, &f, &f)).abs().sqrt();
        off = off.max(form(&cd.blaschke, &e, &f).abs() / scale);
        cf = cf.max(cd.max_conformal_form());
        curv = curv.max(cd.rho.abs());
    }
    let (a, a_stddev) = mean_std(&a_vals);
    let (b, b_stddev) = mean_std(&b_vals);
    Ok(RoundTrip {
        surface: name.to_string(),
        timelike,
        samples: data.len(),
        a,
        b,
        a_stddev,
        b_stddev,
        second_form_residual: sf,
        off_diagonal: off,
        conformal_form: cf,
        curvature: curv,
        budget_residual: (a + b - blaschke_budget(timelike)).abs(),
        case_residual: None,
    })
}

/// [`roundtrip_surface`] on the catalog surface of `case`, also checking the case relations.
pub fn roundtrip_with_invariants(case: &CaseSpec, samples: usize) -> Result<RoundTrip> {
    let name = case.case_id.catalog_name();
    let spec = entry(name)?.spec(&case.catalog_params())?;
    let mut rt = roundtrip_surface(name, &spec, case.timelike(), samples)?;
    let direct = (rt.a - case.a).abs().max((rt.b - case.b).abs());
    let swapped = (rt.b - case.a).abs().max((rt.a - case.b).abs());
    rt.case_residual = Some(if case.timelike() { direct } else { direct.min(swapped) });
    Ok(rt)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b}");
    }

    #[test]
    fn scalar_branches() {
        let grid: Vec<f64> = (0..=1000).map(|i| i as f64 * 1e-3).collect();
        let cosh = solve_scalar_ode(-1.0, [1.0, 0.0, 1.0], &grid).unwrap();
        let err = grid.iter().zip(&cosh).map(|(t, x)| (x[0] - t.cosh()).abs()).fold(0.0, f64::max);
        assert!(err < 1e-8, "{err}");
        let sin = solve_scalar_ode(1.0, [0.0, 1.0, 0.0], &grid).unwrap();
        close(sin[1000][0], 1f64.sin(), 1e-10);
        let quad = solve_scalar_ode(0.0, [0.0, 0.0, 1.0], &grid).unwrap();
        close(quad[1000][0], 0.5, 1e-14);
        for k in [-2.0, 0.0, 3.0] {
            let t = 0.7;
            let x = analytic_scalar(k, [0.3, -0.2, 0.5], t);
            let h = 1e-4;
            let xp = analytic_scalar(k, [0.3, -0.2, 0.5], t + h);
            let xm = analytic_scalar(k, [0.3, -0.2, 0.5], t - h);
            close((xp[0] - xm[0]) / (2.0 * h), x[1], 1e-7);
            close((xp[1] - xm[1]) / (2.0 * h), x[2], 1e-7);
            close((xp[2] - xm[2]) / (2.0 * h), -k * x[1], 1e-7);
        }
    }

    #[test]
    fn scalar_rejects_bad_input() {
        assert!(matches!(solve_scalar_ode(1.0, [0.0, 1.0, 0.0], &[0.0, 0.5, 0.4]), Err(Error::InvalidParam(_))));
        assert!(matches!(solve_scalar_ode(f64::NAN, [0.0; 3], &[0.0, 1.0]), Err(Error::InvalidParam(_))));
        assert!(matches!(solve_scalar_ode(400.0, [0.0, 1.0, 0.0], &[0.0, 1.0]), Err(Error::StepTooLarge(_))));
    }

    #[test]
    fn case_budgets() {
        for id in CaseId::ALL {
            let c = CaseSpec::new(id, id.default_r()).unwrap();
            assert_eq!(c.budget_residual(), 0.0, "{id}");
            close(c.a + c.b, blaschke_budget(id.is_timelike()), 1e-15);
            assert_eq!(id.name().parse::<CaseId>().unwrap(), id);
        }
        let c = CaseSpec::new(CaseId::I, 0.6).unwrap();
        close(c.a, -0.055, 1e-15);
        close(c.b, -0.195, 1e-15);
        let c = CaseSpec::new(CaseId::III, 0.0).unwrap();
        assert_eq!((c.a, c.b), (-0.375, 0.125));
        assert!(CaseSpec::new(CaseId::I, 1.5).is_err());
        assert!(CaseSpec::new(CaseId::T1, 0.5).is_err());
    }

    #[test]
    fn closed_forms_satisfy_frame_relations() {
        for id in CaseId::ALL {
            let c = CaseSpec::new(id, id.default_r()).unwrap();
            for (u, v) in [(0.0, 0.0), (0.7, -0.4), (-1.2, 0.9)] {
                let s = c.closed_form(u, v);
                assert!(s.gram_residual(c.timelike()) < 1e-12, "{id} {}", s.gram());
            }
        }
    }

    #[test]
    fn system_matches_closed_form_derivatives() {
        for id in CaseId::ALL {
            let c = CaseSpec::new(id, id.default_r()).unwrap();
            let h = 1e-5;
            for axis in 0..2 {
                let at = |t: f64| if axis == 0 { c.closed_form(0.3 + t, -0.2) } else { c.closed_form(0.3, -0.2 + t) };
                let fd = (at(h).rows() - at(-h).rows()) / (2.0 * h);
                let exact = c.system(axis) * at(0.0).rows();
                assert!((fd - exact).amax() < 1e-7, "{id} axis {axis}");
            }
        }
    }

    #[test]
    fn case_one_trajectory() {
        let c = CaseSpec::new(CaseId::I, 0.6).unwrap();
        let r = verify_case(&c, 11, DEFAULT_STEP).unwrap();
        assert!(r.passed(1e-7), "{r:?}");
    }

    #[test]
    fn splitting_detector() {
        let grid = [0.0, 0.5, 1.0];
        let ys: Vec<Vec<Vector>> = grid
            .iter()
            .map(|&u| grid.iter().map(|&v| Vector::from_column_slice(&[u * v, 0.0, 0.0, 0.0, 0.0])).collect())
            .collect();
        close(splitting_check(&ys), 1.0, 1e-15);
        let c = CaseSpec::new(CaseId::I, 0.6).unwrap();
        let ys: Vec<Vec<Vector>> =
            grid.iter().map(|&u| grid.iter().map(|&v| c.closed_form(u, v).y).collect()).collect();
        assert!(splitting_check(&ys) < 1e-12);
    }

    #[test]
    fn drifting_start_is_rejected() {
        let c = CaseSpec::new(CaseId::II, 1.0).unwrap();
        let mut s = c.closed_form(0.0, 0.0);
        s.n[0] += 1e-3;
        assert!(matches!(integrate_frame(&c, &[(1.0, 0.0)], &s), Err(Error::InvalidParam(_))));
        let coarse = FrameIntegrator { step: 0.5, drift_tol: 1e-12 };
        assert!(matches!(coarse.integrate(&c, &[(1.0, 1.0)], &c.closed_form(0.0, 0.0)), Err(Error::GramDrift(_))));
    }

    #[test]
    fn catalog_roundtrips() {
        for id in CaseId::ALL {
            let c = CaseSpec::new(id, id.default_r()).unwrap();
            let rt = roundtrip_with_invariants(&c, 9).unwrap();
            assert!(rt.passed(1e-7), "{id}: {rt:?}");
        }
    }
}
