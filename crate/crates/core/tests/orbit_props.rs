mod common;

use common::{c, p, CORPUS};
use proptest::prelude::*;
use semidyn::numerics::{escape_status, orbit, OrbitParams, OrbitStatus};
use semidyn::semigroup::{word_expr, Semigroup, Word};

fn pair() -> Semigroup {
    Semigroup::parse(
        &["exp(z/4)", "exp(-z - 1) + 1", "exp(z) - 2"],
        Default::default(),
        "three",
    )
    .unwrap()
}

proptest! {
    #[test]
    fn escape_is_monotone_in_budget(k in 0..CORPUS.len(), re in -6.0f64..6.0, im in -6.0f64..6.0, n in 5usize..60) {
        let f = p(CORPUS[k]);
        let short = OrbitParams { max_iter: n, ..OrbitParams::default() };
        let long = OrbitParams { max_iter: 2 * n, ..OrbitParams::default() };
        if let OrbitStatus::Escaped { at, .. } = escape_status(&f, c(re, im), &short) {
            let longer = escape_status(&f, c(re, im), &long);
            let same_step = matches!(longer, OrbitStatus::Escaped { at: later, .. } if later == at);
            prop_assert!(same_step, "escaped at {} with budget {}, then {:?} with {}", at, n, longer, 2 * n);
        }
    }

    #[test]
    fn fast_status_agrees_with_recorded_orbit(k in 0..CORPUS.len(), re in -6.0f64..6.0, im in -6.0f64..6.0) {
        let f = p(CORPUS[k]);
        let params = OrbitParams::default();
        prop_assert_eq!(escape_status(&f, c(re, im), &params), orbit(&f, c(re, im), params).unwrap().status);
    }

    #[test]
    fn word_concat_is_composition(a in prop::collection::vec(1usize..4, 1..3), b in prop::collection::vec(1usize..4, 1..3), re in -1.0f64..1.0, im in -1.0f64..1.0) {
        let s = pair();
        let (wa, wb) = (Word::new(a).unwrap(), Word::new(b).unwrap());
        let joined = word_expr(&s, &wa.concat(&wb)).unwrap();
        let z = c(re, im);
        let inner = word_expr(&s, &wb).unwrap().eval(z);
        let direct = inner.and_then(|w| word_expr(&s, &wa).unwrap().eval(w));
        match (joined.eval(z), direct) {
            (Ok(x), Ok(y)) => prop_assert!((x - y).norm() <= 1e-12 * x.norm().max(1.0)),
            (Err(_), Err(_)) => {}
            (x, y) => prop_assert!(false, "{:?} vs {:?}", x, y),
        }
    }
}
