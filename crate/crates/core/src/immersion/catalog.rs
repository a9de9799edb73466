//! Built-in surfaces, stored as DSL text.

use std::collections::BTreeMap;

use super::{parse, ImmersionSpec};
use crate::error::{Error, Result};

pub type Params = BTreeMap<String, f64>;

/// Convenience constructor for parameter maps.
pub fn params(pairs: &[(&str, f64)]) -> Params {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    /// Space-like surfaces with flat conformal metric in a 3-dimensional space form of index 1.
    SpaceLike,
    /// Time-like surfaces with flat conformal metric.
    TimeLike,
    /// Isoparametric hypersurfaces with constant scalar and mean curvature.
    ConstantCurvature,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::SpaceLike => "space-like",
            Family::TimeLike => "time-like",
            Family::ConstantCurvature => "constant-curvature",
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct CatalogEntry {
    pub name: &'static str,
    pub family: Family,
    /// Human-readable description of the surface and its ambient.
    pub surface: &'static str,
    pub constraint: &'static str,
    /// Parameter names with defaults.
    pub defaults: &'static [(&'static str, f64)],
    build: fn(&Params) -> Result<String>,
}

impl CatalogEntry {
    /// Resolves `given` against the defaults, rejecting unknown keys.
    pub fn resolve(&self, given: &Params) -> Result<Params> {
        let mut out: Params = self.defaults.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        for (k, v) in given {
            if !out.contains_key(k) {
                return Err(Error::InvalidParam(format!("`{}` takes no parameter `{k}`", self.name)));
            }
            if !v.is_finite() {
                return Err(Error::InvalidParam(format!("{k} = {v} is not finite")));
            }
            out.insert(k.clone(), *v);
        }
        Ok(out)
    }

    pub fn dsl(&self, given: &Params) -> Result<String> {
        (self.build)(&self.resolve(given)?)
    }

    pub fn spec(&self, given: &Params) -> Result<ImmersionSpec> {
        let resolved = self.resolve(given)?;
        let text = (self.build)(&resolved)?;
        let m = parse(&text)?;
        let t = match self.family {
            Family::TimeLike => 1,
            _ => 0,
        };
        Ok(m.with_expected_index(t))
    }

    /// Eigenvalues `(a, b)` of the Blaschke tensor paired with the `B`
    /// eigenvalues `+1/2` and `-1/2`, for the flat-metric surfaces.
    pub fn blaschke_eigenvalues(&self, given: &Params) -> Result<Option<(f64, f64)>> {
        let p = self.resolve(given)?;
        (self.build)(&p)?;
        let r2 = p.get("r").map(|r| r * r).unwrap_or(0.0);
        Ok(match self.name {
            "sl-H1xH1" => Some((0.125 - r2 / 2.0, r2 / 2.0 - 0.375)),
            "sl-H1xS1" => Some((-0.375 - r2 / 2.0, r2 / 2.0 + 0.125)),
            "sl-H1xR1" => Some((-0.375, 0.125)),
            "tl-H11xS1" | "tl-S11xS1" => Some((0.375 - r2 / 2.0, r2 / 2.0 - 0.125)),
            "tl-S11xH1" => Some((0.375 + r2 / 2.0, -0.125 - r2 / 2.0)),
            "tl-R11xS1" => Some((-0.125, 0.375)),
            "tl-S11xR1" => Some((0.375, -0.125)),
            _ => None,
        })
    }
}

static ENTRIES: &[CatalogEntry] = &[
    CatalogEntry {
        name: "sl-H1xH1",
        family: Family::SpaceLike,
        surface: "H^1(r) x H^1(sqrt(1-r^2)) in H^3_1",
        constraint: "0 < r < 1",
        defaults: &[("r", 0.6)],
        build: sl_h1_h1,
    },
    CatalogEntry {
        name: "sl-H1xS1",
        family: Family::SpaceLike,
        surface: "H^1(r) x S^1(sqrt(r^2+1)) in S^3_1",
        constraint: "r > 0",
        defaults: &[("r", 1.0)],
        build: sl_h1_s1,
    },
    CatalogEntry {
        name: "sl-H1xR1",
        family: Family::SpaceLike,
        surface: "H^1(r) x R^1 in R^3_1",
        constraint: "r > 0",
        defaults: &[("r", 1.0)],
        build: sl_h1_r1,
    },
    CatalogEntry {
        name: "tl-H11xH1",
        family: Family::TimeLike,
        surface: "H^1_1(r) x H^1(sqrt(1-r^2)), which lies in H^3_2",
        constraint: "0 < r < 1",
        defaults: &[("r", 0.6)],
        build: tl_h11_h1,
    },
    CatalogEntry {
        name: "tl-H11xS1",
        family: Family::TimeLike,
        surface: "H^1_1(r) x S^1(sqrt(r^2-1)) in H^3_1",
        constraint: "r > 1",
        defaults: &[("r", 1.5)],
        build: tl_h11_s1,
    },
    CatalogEntry {
        name: "tl-S11xH1",
        family: Family::TimeLike,
        surface: "S^1_1(r) x H^1(sqrt(1+r^2)) in H^3_1",
        constraint: "r > 0",
        defaults: &[("r", 0.6)],
        build: tl_s11_h1,
    },
    CatalogEntry {
        name: "tl-S11xS1",
        family: Family::TimeLike,
        surface: "S^1_1(r) x S^1(sqrt(1-r^2)) in S^3_1",
        constraint: "0 < r < 1",
        defaults: &[("r", 0.6)],
        build: tl_s11_s1,
    },
    CatalogEntry {
        name: "tl-R11xS1",
        family: Family::TimeLike,
        surface: "R^1_1 x S^1(r) in R^3_1",
        constraint: "r > 0",
        defaults: &[("r", 1.0)],
        build: tl_r11_s1,
    },
    CatalogEntry {
        name: "tl-S11xR1",
        family: Family::TimeLike,
        surface: "S^1_1(r) x R^1 in R^3_1",
        constraint: "r > 0",
        defaults: &[("r", 1.0)],
        build: tl_s11_r1,
    },
    CatalogEntry {
        name: "cmc-cylinder",
        family: Family::ConstantCurvature,
        surface: "S^k(r) x R^(m-k) in R^(m+1)",
        constraint: "r > 0, 2 <= m <= 4, 1 <= k < m",
        defaults: &[("r", 1.0), ("m", 2.0), ("k", 1.0)],
        build: cmc_cylinder,
    },
    CatalogEntry {
        name: "cmc-sphere-product",
        family: Family::ConstantCurvature,
        surface: "S^k(r) x S^(m-k)(sqrt(1-r^2)) in S^(m+1)",
        constraint: "0 < r < 1, 2 <= m <= 4, 1 <= k < m",
        defaults: &[("r", 0.6), ("m", 2.0), ("k", 1.0)],
        build: cmc_sphere_product,
    },
    CatalogEntry {
        name: "cmc-h-product",
        family: Family::ConstantCurvature,
        surface: "H^k(r) x S^(m-k)(sqrt(r^2-1)) in H^(m+1)",
        constraint: "r > 1, 2 <= m <= 4, 1 <= k < m",
        defaults: &[("r", 1.5), ("m", 2.0), ("k", 1.0)],
        build: cmc_h_product,
    },
];

pub fn catalog_entries() -> &'static [CatalogEntry] {
    ENTRIES
}

pub fn entry(name: &str) -> Result<&'static CatalogEntry> {
    ENTRIES
        .iter()
        .find(|e| e.name == name)
        .ok_or_else(|| Error::UnknownSurface(name.to_string()))
}

/// Looks up `name` and builds its immersion with the given parameters.
pub fn catalog(name: &str, given: &Params) -> Result<ImmersionSpec> {
    entry(name)?.spec(given)
}

fn radius(p: &Params, lo: f64, hi: f64) -> Result<f64> {
    let r = p["r"];
    if !(r > lo && r < hi) {
        return Err(Error::InvalidParam(format!("r = {r} outside ({lo}, {hi})")));
    }
    Ok(r)
}

fn dims(p: &Params) -> Result<(usize, usize)> {
    let (m, k) = (p["m"], p["k"]);
    if m.fract() != 0.0 || k.fract() != 0.0 || !(2.0..=4.0).contains(&m) || k < 1.0 || k >= m {
        return Err(Error::InvalidParam(format!("need integers 2 <= m <= 4 and 1 <= k < m, got m = {m}, k = {k}")));
    }
    Ok((m as usize, k as usize))
}

const NAMES: [&str; 4] = ["u", "v", "w", "x"];

fn header(m: usize) -> String {
    format!("map({})", NAMES[..m].join(", "))
}

fn sl_h1_h1(p: &Params) -> Result<String> {
    let r = radius(p, 0.0, 1.0)?;
    let s = (1.0 - r * r).sqrt();
    Ok(format!(
        "map(u, v) -> ({r:?}*cosh({r:?}*u), {s:?}*cosh({s:?}*v), {r:?}*sinh({r:?}*u), {s:?}*sinh({s:?}*v)) ambient H 4 2"
    ))
}

fn sl_h1_s1(p: &Params) -> Result<String> {
    let r = radius(p, 0.0, f64::INFINITY)?;
    let k = (r * r + 1.0).sqrt();
    Ok(format!(
        "map(u, v) -> ({r:?}*cosh(u), {r:?}*sinh(u), {k:?}*cos(v), {k:?}*sin(v)) ambient S 4 1"
    ))
}

fn sl_h1_r1(p: &Params) -> Result<String> {
    let r = radius(p, 0.0, f64::INFINITY)?;
    Ok(format!("map(u, v) -> ({r:?}*cosh(u), {r:?}*sinh(u), v) ambient R 3 1"))
}

fn tl_h11_h1(p: &Params) -> Result<String> {
    let r = radius(p, 0.0, 1.0)?;
    let s = (1.0 - r * r).sqrt();
    Ok(format!(
        "map(u, v) -> ({r:?}*cos(u), {r:?}*sin(u), {s:?}*cosh(v), {s:?}*sinh(v)) ambient H 4 3"
    ))
}

fn tl_h11_s1(p: &Params) -> Result<String> {
    let r = radius(p, 1.0, f64::INFINITY)?;
    let k = (r * r - 1.0).sqrt();
    Ok(format!(
        "map(u, v) -> ({r:?}*cos(u), {r:?}*sin(u), {k:?}*cos(v), {k:?}*sin(v)) ambient H 4 2"
    ))
}

fn tl_s11_h1(p: &Params) -> Result<String> {
    let r = radius(p, 0.0, f64::INFINITY)?;
    let k = (r * r + 1.0).sqrt();
    Ok(format!(
        "map(u, v) -> ({r:?}*sinh(u), {k:?}*cosh(v), {r:?}*cosh(u), {k:?}*sinh(v)) ambient H 4 2"
    ))
}

fn tl_s11_s1(p: &Params) -> Result<String> {
    let r = radius(p, 0.0, 1.0)?;
    let k = (1.0 - r * r).sqrt();
    Ok(format!(
        "map(u, v) -> ({r:?}*sinh(u), {r:?}*cosh(u), {k:?}*cos(v), {k:?}*sin(v)) ambient S 4 1"
    ))
}

fn tl_r11_s1(p: &Params) -> Result<String> {
    let r = radius(p, 0.0, f64::INFINITY)?;
    Ok(format!("map(u, v) -> (u, {r:?}*cos(v), {r:?}*sin(v)) ambient R 3 1"))
}

fn tl_s11_r1(p: &Params) -> Result<String> {
    let r = radius(p, 0.0, f64::INFINITY)?;
    Ok(format!("map(u, v) -> ({r:?}*sinh(u), {r:?}*cosh(u), v) ambient R 3 1"))
}

/// Coordinates of `S^k(r)` in the angles `names`, built as
/// `S^k = (cos t_k S^(k-1), r sin t_k)`.
fn sphere(r: f64, names: &[&str]) -> Vec<String> {
    let mut coords = vec![format!("{r:?}")];
    for t in names {
        coords = coords.into_iter().map(|c| format!("cos({t})*{c}")).collect();
        coords.push(format!("{r:?}*sin({t})"));
    }
    coords
}

/// Coordinates of `H^k(r)` in `R^(k+1)_1`, timelike axis first.
fn hyperboloid(r: f64, names: &[&str]) -> Vec<String> {
    let mut coords = vec![format!("{r:?}")];
    for t in names {
        coords = coords.into_iter().map(|c| format!("cosh({t})*{c}")).collect();
        coords.push(format!("{r:?}*sinh({t})"));
    }
    coords
}

fn assemble(m: usize, coords: Vec<String>, ambient: &str) -> String {
    format!("{} -> ({}) {ambient}", header(m), coords.join(", "))
}

fn cmc_cylinder(p: &Params) -> Result<String> {
    let r = radius(p, 0.0, f64::INFINITY)?;
    let (m, k) = dims(p)?;
    let mut coords = sphere(r, &NAMES[..k]);
    coords.extend(NAMES[k..m].iter().map(|s| s.to_string()));
    Ok(assemble(m, coords, &format!("ambient R {} 0", m + 1)))
}

fn cmc_sphere_product(p: &Params) -> Result<String> {
    let r = radius(p, 0.0, 1.0)?;
    let (m, k) = dims(p)?;
    let mut coords = sphere(r, &NAMES[..k]);
    coords.extend(sphere((1.0 - r * r).sqrt(), &NAMES[k..m]));
    Ok(assemble(m, coords, &format!("ambient S {} 0", m + 2)))
}

fn cmc_h_product(p: &Params) -> Result<String> {
    let r = radius(p, 1.0, f64::INFINITY)?;
    let (m, k) = dims(p)?;
    let mut coords = hyperboloid(r, &NAMES[..k]);
    coords.extend(sphere((r * r - 1.0).sqrt(), &NAMES[k..m]));
    Ok(assemble(m, coords, &format!("ambient H {} 1", m + 2)))
}
