use confgeom::classify::{classify, Tolerances};
use confgeom::frameode::{frame_signs, CaseId, CaseSpec, FrameIntegrator};
use confgeom::immersion::catalog::{catalog_entries, params, CatalogEntry, Params};
use confgeom::immersion::{parse, ImmersionSpec, SpaceForm};
use confgeom::invariants::{
    conformal_tensors, frame_lift, fundamental_forms, identity_residuals, metric_index, scalar_curvature_at,
};
use confgeom::jets::Jet;
use confgeom::pseudolinalg::{gram, inner, orthonormalize, random_isometry, solve, Matrix, Signature, Vector};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn default_spec(e: &CatalogEntry) -> ImmersionSpec {
    e.spec(&Params::new()).unwrap()
}

fn entry_index() -> impl Strategy<Value = usize> {
    0..catalog_entries().len()
}

/// A point of `[-0.8, 0.8]^m` from four unit-interval draws.
fn inner_point(spec: &ImmersionSpec, raw: &[f64; 4]) -> Vec<f64> {
    (0..spec.dim()).map(|i| -0.8 + 1.6 * raw[i]).collect()
}

fn unit4() -> impl Strategy<Value = [f64; 4]> {
    [0.0..1.0f64, 0.0..1.0f64, 0.0..1.0f64, 0.0..1.0f64]
}

fn signature() -> impl Strategy<Value = Signature> {
    (1usize..6).prop_flat_map(|n| (0..=n).prop_map(move |s| Signature::new(n, s).unwrap()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn inner_is_bilinear_and_symmetric(
        sig in signature(),
        raw in proptest::collection::vec(-3.0..3.0f64, 15),
        a in -2.0..2.0f64,
        b in -2.0..2.0f64,
    ) {
        let n = sig.dim();
        let (x, y, z) = (&raw[0..n], &raw[5..5 + n], &raw[10..10 + n]);
        let ip = |p: &[f64], q: &[f64]| inner(p, q, sig).unwrap();
        prop_assert!((ip(x, y) - ip(y, x)).abs() < 1e-12);
        let combo: Vec<f64> = x.iter().zip(y).map(|(p, q)| a * p + b * q).collect();
        let lhs = ip(&combo, z);
        let rhs = a * ip(x, z) + b * ip(y, z);
        prop_assert!((lhs - rhs).abs() < 1e-12 * (1.0 + lhs.abs()));
    }

    #[test]
    fn orthonormalized_gram_is_diagonal_signs(
        sig in signature(),
        raw in proptest::collection::vec(-2.0..2.0f64, 25),
    ) {
        let n = sig.dim();
        let vs: Vec<Vector> = (0..n).map(|i| Vector::from_column_slice(&raw[5 * i..5 * i + n])).collect();
        if let Ok((frame, signs)) = orthonormalize(&vs, sig) {
            let g = gram(&frame, sig).unwrap();
            for i in 0..n {
                for j in 0..n {
                    let expect = if i == j { signs[i] } else { 0.0 };
                    prop_assert!((g[(i, j)] - expect).abs() < 1e-10, "{g}");
                }
                prop_assert!(signs[i] == 1.0 || signs[i] == -1.0);
            }
        }
    }

    #[test]
    fn solve_round_trips(n in 1usize..6, raw in proptest::collection::vec(-1.0..1.0f64, 36)) {
        // diagonally dominant, hence well conditioned
        let m = Matrix::from_fn(n, n, |i, j| raw[i * n + j] + if i == j { 2.0 * n as f64 } else { 0.0 });
        let rhs = Matrix::from_fn(n, 1, |i, _| raw[30 + i % 6]);
        let x = solve(&m, &rhs).unwrap();
        prop_assert!((&m * x - rhs).amax() < 1e-10);
    }

    #[test]
    fn polynomial_jets_are_exact(
        coeffs in proptest::collection::vec(-2.0..2.0f64, 15),
        x in -1.5..1.5f64,
        y in -1.5..1.5f64,
    ) {
        // sum over a + b <= 4 of c_ab x^a y^b
        let monomials: Vec<(usize, usize)> = (0..=4).flat_map(|d| (0..=d).map(move |a| (a, d - a))).collect();
        let vars = Jet::variables(&[x, y]).unwrap();
        let mut f = Jet::constant(0.0, 2);
        for (c, (a, b)) in coeffs.iter().zip(&monomials) {
            f = f + vars[0].powi(*a as i32).unwrap() * vars[1].powi(*b as i32).unwrap() * *c;
        }
        let falling = |n: usize, k: usize, t: f64| -> f64 {
            if k > n { 0.0 } else { (n - k + 1..=n).map(|j| j as f64).product::<f64>() * t.powi((n - k) as i32) }
        };
        for (i, j) in &monomials {
            let exact: f64 = coeffs
                .iter()
                .zip(&monomials)
                .map(|(c, (a, b))| c * falling(*a, *i, x) * falling(*b, *j, y))
                .sum();
            let got = f.extract(&[*i, *j]).unwrap();
            prop_assert!((got - exact).abs() < 1e-12 * (1.0 + exact.abs()), "{i},{j}: {got} vs {exact}");
        }
    }

    #[test]
    fn products_commute(x in -1.0..1.0f64, y in -1.0..1.0f64) {
        let v = Jet::variables(&[x, y]).unwrap();
        let a = v[0].sin() * &v[1].cosh();
        let b = (&v[0] * &v[1]).exp();
        let (ab, ba) = (&a * &b, &b * &a);
        for alpha in [[0, 0], [1, 0], [1, 2], [2, 2], [0, 4]] {
            let (p, q) = (ab.extract(&alpha).unwrap(), ba.extract(&alpha).unwrap());
            prop_assert!((p - q).abs() <= 1e-14 * p.abs().max(1.0), "{alpha:?}: {p} vs {q}");
        }
    }

    #[test]
    fn elementary_jets_match_finite_differences(x in -1.0..1.0f64, y in -1.0..1.0f64) {
        let f = |p: &[f64]| -> Jet {
            let v = Jet::variables(p).unwrap();
            v[0].sin() * &v[1].cosh() + (&v[0] * &v[1]).exp()
        };
        let center = f(&[x, y]);
        let h = 1e-3;
        // each order-k derivative against a Richardson difference of order k-1
        let alphas: Vec<[usize; 2]> = (0..4).flat_map(|d| (0..=d).map(move |a| [a, d - a])).collect();
        for alpha in alphas {
            for var in 0..2 {
                let at = |s: f64| {
                    let mut p = [x, y];
                    p[var] += s * h;
                    f(&p).extract(&alpha).unwrap()
                };
                let d1 = (at(1.0) - at(-1.0)) / (2.0 * h);
                let d2 = (at(2.0) - at(-2.0)) / (4.0 * h);
                let fd = (4.0 * d1 - d2) / 3.0;
                let mut up = alpha;
                up[var] += 1;
                let exact = center.extract(&up).unwrap();
                prop_assert!((fd - exact).abs() <= 1e-6 * exact.abs().max(1.0), "{up:?}: {fd} vs {exact}");
            }
        }
    }

    #[test]
    fn parse_print_parse_is_idempotent(e1 in expr(), e2 in expr(), e3 in expr()) {
        let text = format!("map(u, v) -> ({e1}, {e2}, {e3}) ambient R 3 1 domain [-0.5, 0.5], [0, 2]");
        let first = parse(&text).unwrap();
        let second = parse(&first.to_dsl()).unwrap();
        prop_assert_eq!(&first, &second);
        prop_assert_eq!(second.to_dsl(), first.to_dsl());
    }
}

fn expr() -> impl Strategy<Value = String> {
    let leaf = prop_oneof![
        Just("u".to_string()),
        Just("v".to_string()),
        (-5.0..5.0f64).prop_map(|x| format!("{:.3}", x.abs())),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} + {b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("{a} * {b}")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} - {b})")),
            inner.clone().prop_map(|a| format!("sin({a})")),
            inner.clone().prop_map(|a| format!("-({a})")),
            inner.prop_map(|a| format!("({a})^2")),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn catalog_points_satisfy_the_constraint(idx in entry_index(), seed in any::<u64>()) {
        let spec = default_spec(&catalog_entries()[idx]);
        let a = &spec.ambient;
        prop_assume!(a.form != SpaceForm::Flat);
        let eps = a.epsilon() as f64;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..100 {
            let p: Vec<f64> = spec.domain.iter().map(|(lo, hi)| rand::Rng::gen_range(&mut rng, *lo..*hi)).collect();
            let u = spec.position(&p).unwrap();
            let q = inner(&u, &u, a.signature).unwrap() - eps * a.radius * a.radius;
            prop_assert!(q.abs() < 1e-10, "{}: {q}", spec);
        }
    }

    #[test]
    fn induced_metric_has_the_expected_index(idx in entry_index(), raw in unit4()) {
        let spec = default_spec(&catalog_entries()[idx]);
        let pf = fundamental_forms(&spec, &inner_point(&spec, &raw)).unwrap();
        prop_assert_eq!(Some(metric_index(&pf.first_form)), spec.expected_index);
    }

    #[test]
    fn lift_metric_is_the_conformal_metric(idx in entry_index(), raw in unit4()) {
        let spec = default_spec(&catalog_entries()[idx]);
        let p = inner_point(&spec, &raw);
        let cd = conformal_tensors(&spec, &p).unwrap();
        let fl = frame_lift(&spec, &p).unwrap();
        let pf = fundamental_forms(&spec, &p).unwrap();
        let scaled = &pf.first_form * (2.0 * cd.tau).exp();
        prop_assert!((fl.metric() - &scaled).amax() < 1e-7);
        prop_assert!((&cd.metric - &scaled).amax() < 1e-7);
    }

    #[test]
    fn identities_hold_everywhere(idx in entry_index(), raw in unit4()) {
        let spec = default_spec(&catalog_entries()[idx]);
        let cd = conformal_tensors(&spec, &inner_point(&spec, &raw)).unwrap();
        let r = identity_residuals(&cd);
        prop_assert!(r.trace_b < 1e-8 && r.norm_b < 1e-8 && r.trace_a < 1e-7, "{r:?}");
    }

    #[test]
    fn scalar_curvature_routes_agree(idx in entry_index(), raw in unit4()) {
        let spec = default_spec(&catalog_entries()[idx]);
        let s = scalar_curvature_at(&spec, &inner_point(&spec, &raw)).unwrap();
        prop_assert!(s.discrepancy() < 1e-5, "{s:?}");
    }

    #[test]
    fn conformal_tensors_are_isometry_invariant(idx in entry_index(), raw in unit4(), seed in any::<u64>()) {
        let spec = default_spec(&catalog_entries()[idx]);
        let p = inner_point(&spec, &raw);
        let t = random_isometry(spec.ambient.signature, 0.7, &mut ChaCha8Rng::seed_from_u64(seed));
        let a = conformal_tensors(&spec, &p).unwrap();
        let b = conformal_tensors(&spec.transformed(&t).unwrap(), &p).unwrap();
        prop_assert!((&a.blaschke - &b.blaschke).amax() < 1e-8);
        let db = (&a.second_form - &b.second_form).amax().min((&a.second_form + &b.second_form).amax());
        prop_assert!(db < 1e-8);
        let dc = (&a.conformal_form - &b.conformal_form).amax().min((&a.conformal_form + &b.conformal_form).amax());
        prop_assert!(dc < 1e-8);
        prop_assert!((a.tau - b.tau).abs() < 1e-8);
    }

    #[test]
    fn raised_b_is_reparametrization_covariant(
        idx in entry_index(),
        raw in unit4(),
        scale in proptest::collection::vec(0.5..2.0f64, 4),
        flip in proptest::collection::vec(any::<bool>(), 4),
        shift in proptest::collection::vec(-0.3..0.3f64, 4),
    ) {
        let spec = default_spec(&catalog_entries()[idx]);
        let m = spec.dim();
        let x = inner_point(&spec, &raw);
        let a: Vec<f64> = (0..m).map(|i| if flip[i] { -scale[i] } else { scale[i] }).collect();
        let b = &shift[..m];
        let moved = spec.reparametrized(&a, b).unwrap();
        let y: Vec<f64> = (0..m).map(|i| (x[i] - b[i]) / a[i]).collect();
        let e1 = conformal_tensors(&spec, &x).unwrap().second_form_eigenvalues();
        let e2 = conformal_tensors(&moved, &y).unwrap().second_form_eigenvalues();
        for (p, q) in e1.iter().zip(&e2) {
            prop_assert!((p - q).abs() < 1e-8, "{e1:?} vs {e2:?}");
        }
    }

    #[test]
    fn frame_gram_is_conserved(case in 0usize..8, r in 0.05..0.95f64, path in proptest::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 1..4)) {
        let id = CaseId::ALL[case];
        let r = match id {
            CaseId::T1 => 1.0 + 2.0 * r,
            CaseId::II | CaseId::T2 => 3.0 * r,
            _ => r,
        };
        let c = CaseSpec::new(id, r).unwrap();
        let states = FrameIntegrator::default().integrate(&c, &path, &c.closed_form(0.0, 0.0)).unwrap();
        let mut length = 0.0;
        let mut prev = (0.0, 0.0);
        for (s, target) in states[1..].iter().zip(&path) {
            length += (target.0 - prev.0).abs() + (target.1 - prev.1).abs();
            prev = *target;
            prop_assert!(s.gram_residual(id.is_timelike()) < 1e-7 * length.max(1.0));
        }
        // (2a + eps/4) s_u + (2b + eps/4) s_v budget, in the space-like case (2a-1/4)+(2b-1/4) = -1
        let (ku, kv) = c.ode_coefficients();
        let (su, sv, sx) = frame_signs(id.is_timelike());
        prop_assert!((su * ku + sv * kv - sx).abs() < 1e-15);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn moebius_maps_keep_para_umbilical_data(seed in any::<u64>()) {
        let spec = confgeom::immersion::catalog::catalog("cmc-cylinder", &params(&[])).unwrap();
        let lift_sig = spec.ambient.lift_signature();
        let t = random_isometry(lift_sig, 0.15, &mut ChaCha8Rng::seed_from_u64(seed));
        let moved = spec.conformally_transformed(&t).unwrap();
        let tol = Tolerances::default();
        let a = classify(&spec, 9, &tol).unwrap();
        let b = classify(&moved, 9, &tol).unwrap();
        prop_assert!(b.para_umbilical);
        prop_assert!((a.lambda().unwrap() - b.lambda().unwrap()).abs() < 1e-7);
        prop_assert!((a.mu().unwrap().abs() - b.mu().unwrap().abs()).abs() < 1e-7);
        prop_assert!((a.c_norm().unwrap().abs() - b.c_norm().unwrap().abs()).abs() < 1e-7);
    }
}
