mod common;

use common::{p, quarter_fixed_point, TOWERS};
use semidyn::escape::GridSpec;
use semidyn::expr::MapExpr;
use semidyn::numerics::OrbitParams;
use semidyn::semigroup::Semigroup;
use semidyn::singular::{
    hyperbolicity_check, post_singular_cloud, sample_asymptotic_values, singular_values, Boundedness,
    HyperbolicityParams, Verdict, RAY_DIRECTIONS,
};

const TOL: f64 = 1e-6;

#[test]
fn composite_singular_values_obey_the_lemma_on_the_corpus() {
    for f_text in TOWERS {
        for g_text in TOWERS {
            let (f, g) = (p(f_text), p(g_text));
            let h = MapExpr::compose(f.clone(), g.clone()).normalize().unwrap();
            let sv_h = singular_values(&h).unwrap();
            let mut bound = singular_values(&f).unwrap().values();
            bound.extend(
                singular_values(&g)
                    .unwrap()
                    .values()
                    .iter()
                    .filter_map(|&v| f.eval(v).ok()),
            );
            for w in sv_h.values() {
                let d = bound.iter().map(|u| (u - w).norm()).fold(f64::INFINITY, f64::min);
                assert!(d <= TOL, "{f_text} o {g_text}: {w} is {d:e} from SV(f) u f(SV(g))");
            }
            for ray in sample_asymptotic_values(&h, RAY_DIRECTIONS) {
                if let Some(l) = ray.limit {
                    assert!(
                        sv_h.distance_to(l) <= TOL,
                        "{f_text} o {g_text}: ray limit {l} not singular"
                    );
                }
            }
        }
    }
}

fn cloud(e: &MapExpr, max_len: usize, depth: usize) -> semidyn::singular::PostSingularCloud {
    let s = Semigroup::cyclic(e.clone(), "c").unwrap();
    post_singular_cloud(&s, max_len, depth, &OrbitParams::default()).unwrap()
}

#[test]
fn composite_cloud_inside_generator_clouds() {
    let f = p("exp(z/4)");
    let g = p("iterate(exp(z/4), 2)");
    let fg = MapExpr::compose(f.clone(), g.clone()).normalize().unwrap();
    let (cf, cg, cfg) = (cloud(&f, 1, 50), cloud(&g, 1, 50), cloud(&fg, 1, 50));
    for &pt in &cfg.points {
        assert!(cf.distance_to(pt).min(cg.distance_to(pt)) <= TOL, "{pt}");
    }
    let q = quarter_fixed_point();
    for c in [&cf, &cg] {
        assert!(matches!(c.boundedness, Boundedness::Bounded { .. }));
        for o in &c.orbits {
            assert!((o.limit.unwrap().re - q).abs() <= TOL);
        }
    }
}

#[test]
fn clouds_grow_with_depth_and_word_length() {
    let s = Semigroup::parse(&["exp(z/4)", "exp(z/5)"], Default::default(), "two").unwrap();
    let orbit = OrbitParams::default();
    let shallow = post_singular_cloud(&s, 1, 10, &orbit).unwrap();
    let deep = post_singular_cloud(&s, 1, 40, &orbit).unwrap();
    let long = post_singular_cloud(&s, 2, 10, &orbit).unwrap();
    for &pt in &shallow.points {
        assert!(deep.distance_to(pt) <= 1e-12);
        assert!(long.distance_to(pt) <= 1e-12);
    }
    assert!(deep.points.len() >= shallow.points.len());
    assert!(long.points.len() >= shallow.points.len());
}

#[test]
fn verdicts_stable_when_resolution_doubles() {
    let params = HyperbolicityParams::default();
    let grid = GridSpec::square(4.0, 64);
    for (text, expected) in [
        ("exp(z/4)", Verdict::HyperbolicEvidence),
        ("exp(2*z)", Verdict::NotHyperbolicEvidence),
    ] {
        let s = Semigroup::cyclic(p(text), text).unwrap();
        let a = hyperbolicity_check(&s, &grid, &params).unwrap().aggregate.verdict;
        let b = hyperbolicity_check(&s, &grid.refined(2), &params)
            .unwrap()
            .aggregate
            .verdict;
        assert_eq!((a, b), (expected, expected), "{text}");
    }
}
