//! Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any failure.

mod common;

use std::path::PathBuf;
use std::process::Command;
use std::time::Instant;

use common::{c, p, quarter_fixed_point, CORPUS};
use num_complex::Complex64;
use rand::{rngs::StdRng, Rng, SeedableRng};
use semidyn::escape::{
    classify_grid, classify_single, containment_check, interior_escaping_pixels, ClassifyParams, GridSpec,
};
use semidyn::expr::MapExpr;
use semidyn::numerics::{deriv_eval, OrbitParams};
use semidyn::semigroup::{enumerate_words, word_expr, Semigroup};
use semidyn::singular::{
    hyperbolicity_check, post_singular_cloud, sample_asymptotic_values, singular_values, Boundedness,
    HyperbolicityParams, PostSingularCloud, Verdict, RAY_DIRECTIONS,
};
use semidyn::topology::{persistence_check, Connectivity};

const WINDOW: f64 = 4.0;
const THEOREM_1C_RES: usize = 256;
const THEOREM_1C_SECONDS: f64 = 120.0;
const THEOREM_E_RES: usize = 256;
const WORD_LENGTH: usize = 3;
const BUDGET: usize = 200;
const SV_TOL: f64 = 1e-6;
const CLOUD_DEPTH: usize = 50;
const CLOUD_TOL: f64 = 1e-6;
const HYPERBOLIC: [f64; 3] = [0.10, 0.25, 0.35];
const NOT_HYPERBOLIC: [f64; 2] = [1.0, 2.0];
const FAMILY_RES: usize = 256;
const EREMENKO_RES: usize = 512;
const INTERIOR_FRACTION: f64 = 0.005;
const FD_POINTS: usize = 100;
const FD_REL: f64 = 1e-5;

type Outcome = Result<String, String>;

fn params(l: usize) -> ClassifyParams {
    ClassifyParams {
        max_word_length: l,
        orbit: OrbitParams {
            max_iter: BUDGET,
            ..OrbitParams::default()
        },
        ..ClassifyParams::default()
    }
}

fn quarter_pair() -> Semigroup {
    Semigroup::parse(&["exp(z/4)", "iterate(exp(z/4), 2)"], Default::default(), "<f, f^2>").unwrap()
}

fn verdict(ok: bool, msg: String) -> Outcome {
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let s = quarter_pair();
    let grid = GridSpec::square(WINDOW, THEOREM_1C_RES);
    let prm = params(WORD_LENGTH);
    let whole = classify_grid(&s, &grid, &prm).map_err(|e| e.to_string())?;
    let words = enumerate_words(2, WORD_LENGTH, prm.word_cap).map_err(|e| e.to_string())?;
    let mut violations = 0;
    for w in &words {
        let single = classify_single(&word_expr(&s, w).unwrap(), &grid, &prm).map_err(|e| e.to_string())?;
        violations += containment_check(&whole, &single)
            .map_err(|e| e.to_string())?
            .violations
            .len();
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        violations == 0 && secs < THEOREM_1C_SECONDS,
        format!(
            "{violations} violating pixels over {} words, {} escaping pixels for S, {secs:.1}s",
            words.len(),
            whole.summary().escaping
        ),
    )
}

fn criterion_2() -> Outcome {
    let s = Semigroup::parse(&["exp(-z - 1) + 1", "exp(z - 1) - 1"], Default::default(), "theorem-e").unwrap();
    let (gamma, cc, mu, d) = (-1.0f64, 1.0f64, -1.0f64, -1.0f64);
    if !(gamma < 0.0 && cc >= 1.0 && mu < 0.0 && d <= -1.0) {
        return Err("parameters violate the constraints".into());
    }
    let mut counts = Vec::new();
    for half in [WINDOW, 2.0 * WINDOW] {
        let sum = classify_grid(&s, &GridSpec::square(half, THEOREM_E_RES), &params(WORD_LENGTH))
            .map_err(|e| e.to_string())?
            .summary();
        counts.push(sum.escaping);
    }
    verdict(
        counts.iter().all(|&n| n == 0),
        format!("escaping pixels: {} on [-4,4]^2, {} on [-8,8]^2", counts[0], counts[1]),
    )
}

const COMPOSITES: [(&str, &str); 10] = [
    ("exp(z)", "exp(z)"),
    ("exp(z/4)", "exp(z/4)"),
    ("exp(-z - 1) + 1", "exp(z - 1) - 1"),
    ("exp(z - 1) - 1", "exp(-z - 1) + 1"),
    ("2*exp(z) + 1", "exp(-z)"),
    ("exp(z) - 3", "0.5*exp(2*z) + 1"),
    ("exp(i*z)", "exp(z) + 2i"),
    ("exp(z/4)", "iterate(exp(z/4), 2)"),
    ("exp(-2*z) + 1i", "3*exp(z) - 1"),
    ("(1+1i)*exp(z) + 2", "exp(-z/2) - 1"),
];

fn criterion_3() -> Outcome {
    let mut worst = 0.0f64;
    let mut limits = 0;
    for (outer, inner) in COMPOSITES {
        let h = MapExpr::compose(p(outer), p(inner)).normalize().unwrap();
        let sv = singular_values(&h).map_err(|e| e.to_string())?;
        let found: Vec<Complex64> = sample_asymptotic_values(&h, RAY_DIRECTIONS)
            .iter()
            .filter_map(|r| r.limit)
            .collect();
        if found.is_empty() {
            return Err(format!("no ray limit found for {outer} o {inner}"));
        }
        limits += found.len();
        worst = found.iter().map(|&w| sv.distance_to(w)).fold(worst, f64::max);
    }
    verdict(
        worst <= SV_TOL,
        format!("{limits} ray limits over 10 composites, worst distance {worst:e} (tol {SV_TOL:e})"),
    )
}

fn cyclic_cloud(e: &MapExpr) -> PostSingularCloud {
    let s = Semigroup::cyclic(e.clone(), "c").unwrap();
    post_singular_cloud(&s, 1, CLOUD_DEPTH, &OrbitParams::default()).unwrap()
}

fn criterion_4() -> Outcome {
    let f = p("exp(z/4)");
    let g = p("iterate(exp(z/4), 2)");
    let fg = MapExpr::compose(f.clone(), g.clone()).normalize().unwrap();
    let (cf, cg, cfg) = (cyclic_cloud(&f), cyclic_cloud(&g), cyclic_cloud(&fg));
    let worst = cfg
        .points
        .iter()
        .map(|&pt| cf.distance_to(pt).min(cg.distance_to(pt)))
        .fold(0.0, f64::max);
    let q = quarter_fixed_point();
    let bounded = [&cf, &cg]
        .iter()
        .all(|c| matches!(c.boundedness, Boundedness::Bounded { .. }));
    let limit_err = [&cf, &cg]
        .iter()
        .flat_map(|c| c.orbits.iter())
        .map(|o| o.limit.map_or(f64::INFINITY, |l| (l - c(q, 0.0)).norm()))
        .fold(0.0, f64::max);
    verdict(
        worst <= CLOUD_TOL && bounded && limit_err <= CLOUD_TOL,
        format!("containment gap {worst:e}, both bounded: {bounded}, limit error vs q={q:.10} {limit_err:e}"),
    )
}

fn criterion_5() -> Outcome {
    let prm = HyperbolicityParams::default();
    let grid = GridSpec::square(WINDOW, FAMILY_RES);
    let mut lines = Vec::new();
    let mut ok = true;
    let cases = HYPERBOLIC
        .iter()
        .map(|&l| (l, Verdict::HyperbolicEvidence))
        .chain(NOT_HYPERBOLIC.iter().map(|&l| (l, Verdict::NotHyperbolicEvidence)));
    for (lam, expected) in cases {
        let s = Semigroup::cyclic(MapExpr::exp(MapExpr::product(MapExpr::real(lam), MapExpr::var())), "f").unwrap();
        let a = hyperbolicity_check(&s, &grid, &prm)
            .map_err(|e| e.to_string())?
            .aggregate
            .verdict;
        let b = hyperbolicity_check(&s, &grid.refined(2), &prm)
            .map_err(|e| e.to_string())?
            .aggregate
            .verdict;
        ok &= a == expected && b == expected;
        lines.push(format!("{lam}: {a:?}/{b:?}"));
    }
    verdict(ok, format!("verdicts at 256/512: {}", lines.join(", ")))
}

fn criteria_6_7() -> (Outcome, Outcome) {
    let f = Semigroup::parse(&["exp(z/4)"], Default::default(), "<f>").unwrap();
    let grid = GridSpec::square(WINDOW, EREMENKO_RES);
    let mut interior = Vec::new();
    let mut escaping = 0;
    let mut surrounded = 0;
    let mut pixel_list = Vec::new();
    for s in [f, quarter_pair()] {
        let cl = match classify_grid(&s, &grid, &params(WORD_LENGTH)) {
            Ok(c) => c,
            Err(e) => return (Err(e.to_string()), Err(e.to_string())),
        };
        let pr = persistence_check(&s, &cl, Connectivity::Four, 2.0).unwrap();
        interior.push((pr.base.interior, pr.enlarged.interior));
        let proxy = interior_escaping_pixels(&s, &cl).unwrap();
        escaping += proxy.escaping;
        surrounded += proxy.interior.len();
        pixel_list.extend(proxy.interior.iter().map(|&(i, j)| format!("{}:({i},{j})", s.label())));
    }
    let six = verdict(
        interior.iter().all(|&(a, b)| a == 0 && b == 0),
        format!("interior components (base, enlarged): {interior:?}; escaping pixels at 512^2: {escaping}"),
    );
    let fraction = if escaping == 0 {
        0.0
    } else {
        surrounded as f64 / escaping as f64
    };
    let seven = verdict(
        fraction < INTERIOR_FRACTION,
        format!("{surrounded} of {escaping} escaping pixels surrounded after refinement (fraction {fraction:e}); pixels: {pixel_list:?}"),
    );
    (six, seven)
}

fn configs_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run_cli(threads: &str) -> Result<Vec<u8>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_semidyn"))
        .args(["verify", "theorem-e", "--config"])
        .arg(configs_dir().join("theorem_e.cfg"))
        .env("SEMIDYN_THREADS", threads)
        .output()
        .map_err(|e| e.to_string())?;
    if out.status.code() != Some(0) {
        return Err(format!("semidyn exited with {:?}", out.status.code()));
    }
    Ok(out.stdout)
}

fn criterion_8() -> Outcome {
    let mut rng = StdRng::seed_from_u64(8);
    let mut worst = 0.0f64;
    for text in CORPUS {
        let f = p(text);
        for _ in 0..FD_POINTS {
            let z = c(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            let d = deriv_eval(&f, z).map_err(|_| format!("{text} overflowed at {z}"))?;
            let h = 1e-5;
            let fd = (f.eval(z + h).unwrap() - f.eval(z - h).unwrap()) / (2.0 * h);
            worst = worst.max((d - fd).norm() / d.norm());
        }
    }

    let s = quarter_pair();
    let grid = GridSpec::new(6.0, 14.0, -4.0, 4.0, 96, 96).unwrap();
    let classify_in = |n: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .unwrap()
            .install(|| classify_grid(&s, &grid, &params(2)).unwrap())
    };
    let same_orbits = classify_in(1) == classify_in(4);

    let one = run_cli("1")?;
    let four = run_cli("4")?;
    let again = run_cli("4")?;
    let identical = one == four && four == again;
    verdict(
        worst < FD_REL && same_orbits && identical,
        format!(
            "worst derivative rel error {worst:e} over {} points; threads 1 vs 4 classification equal: {same_orbits}; reports byte-identical: {identical}",
            CORPUS.len() * FD_POINTS
        ),
    )
}

fn main() {
    let mut results: Vec<(&str, Outcome)> = vec![
        ("1 theorem-1c containment", criterion_1()),
        ("2 theorem-e empty escaping set", criterion_2()),
        ("3 lemma-sv ray limits", criterion_3()),
        ("4 lemma-p cloud containment", criterion_4()),
        ("5 hyperbolic family", criterion_5()),
    ];
    let (six, seven) = criteria_6_7();
    results.push(("6 eremenko components", six));
    results.push(("7 bounded-type interior proxy", seven));
    results.push(("8 numerics and reproducibility", criterion_8()));
    let mut failed = 0;
    for (name, r) in &results {
        match r {
            Ok(m) => println!("PASS criterion {name}: {m}"),
            Err(m) => {
                failed += 1;
                println!("FAIL criterion {name}: {m}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
