mod common;

use common::{c, p, CORPUS};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{rngs::StdRng, Rng, SeedableRng};
use semidyn::expr::{parse, Bindings, ExprError, MapExpr};
use semidyn::numerics::{deriv_eval, eval};

fn leaf() -> impl Strategy<Value = MapExpr> {
    prop_oneof![
        Just(MapExpr::var()),
        (-4.0f64..4.0).prop_map(MapExpr::real),
        (-4.0f64..4.0, -4.0f64..4.0).prop_map(|(a, b)| MapExpr::constant(Complex64::new(a, b))),
    ]
}

fn expr() -> impl Strategy<Value = MapExpr> {
    leaf().prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| MapExpr::sum(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| MapExpr::product(a, b)),
            inner.clone().prop_map(MapExpr::negate),
            inner.clone().prop_map(MapExpr::exp),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| MapExpr::compose(a, b)),
            (inner, 1u32..3).prop_map(|(a, n)| MapExpr::iterate(a, n)),
        ]
    })
}

fn small_map() -> impl Strategy<Value = MapExpr> {
    (0..CORPUS.len()).prop_map(|k| p(CORPUS[k]))
}

proptest! {
    #[test]
    fn format_parse_round_trip(e in expr()) {
        let n = e.normalize().unwrap();
        let back = parse(&n.format(), &Bindings::new()).unwrap();
        prop_assert_eq!(back, n);
    }

    #[test]
    fn compose_is_associative(f in small_map(), g in small_map(), h in small_map()) {
        let left = MapExpr::compose(MapExpr::compose(f.clone(), g.clone()), h.clone()).normalize();
        let right = MapExpr::compose(f, MapExpr::compose(g, h)).normalize();
        match (left, right) {
            (Ok(a), Ok(b)) => prop_assert_eq!(a, b),
            (Err(ExprError::TooLarge { .. }), Err(ExprError::TooLarge { .. })) => {}
            (a, b) => prop_assert!(false, "mismatch: {:?} vs {:?}", a, b),
        }
    }

    #[test]
    fn iterate_counts_add(f in small_map(), a in 1u32..4, b in 1u32..4) {
        let split = MapExpr::compose(MapExpr::iterate(f.clone(), a), MapExpr::iterate(f.clone(), b)).normalize();
        let whole = MapExpr::iterate(f, a + b).normalize();
        match (split, whole) {
            (Ok(x), Ok(y)) => prop_assert_eq!(x, y),
            (Err(ExprError::TooLarge { .. }), Err(ExprError::TooLarge { .. })) => {}
            (x, y) => prop_assert!(false, "mismatch: {:?} vs {:?}", x, y),
        }
    }
}

/// Central difference along the real direction; `f` is holomorphic so this
/// approximates the complex derivative.
fn central_difference(f: &MapExpr, z: Complex64, h: f64) -> Option<Complex64> {
    let hi = eval(f, z + h).ok()?;
    let lo = eval(f, z - h).ok()?;
    Some((hi - lo) / (2.0 * h))
}

#[test]
fn derivative_matches_finite_difference_on_corpus() {
    let mut rng = StdRng::seed_from_u64(0x5eed);
    for text in CORPUS {
        let f = p(text);
        let mut worst = 0.0f64;
        for _ in 0..100 {
            let z = c(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            let d = deriv_eval(&f, z).unwrap();
            let fd = central_difference(&f, z, 1e-5).unwrap();
            worst = worst.max((d - fd).norm() / d.norm());
        }
        assert!(worst < 1e-5, "{text}: worst relative error {worst:e}");
    }
}
