//! Named verification experiments. Each appends checks and report sections;
//! none of them reads the clock or the environment.

use num_complex::Complex64;
use serde::Serialize;
use serde_json::{json, Value};

use super::config::RunConfig;
use super::report::{to_value, Check, Report};
use super::CliError;
use crate::escape::{classify_grid, classify_single, containment_check, interior_escaping_pixels, GridSpec};
use crate::expr::{parse, MapExpr};
use crate::semigroup::{
    enumerate_words, permutability_check, word_expr, SampleSpec, Semigroup, DEFAULT_PERMUTABILITY_TOL,
};
use crate::singular::{
    hyperbolicity_check, post_singular_cloud, sample_asymptotic_values, singular_values, Boundedness,
    PostSingularCloud, Verdict, RAY_DIRECTIONS,
};
use crate::topology::{connected_components, persistence_check, unboundedness_report};

pub const EXPERIMENTS: &[&str] = &[
    "theorem-1c",
    "theorem-e",
    "lemma-sv",
    "lemma-p-containment",
    "hyperbolic-family",
    "eremenko-components",
];

pub fn run_experiment(name: &str, cfg: &RunConfig, report: &mut Report) -> Result<(), CliError> {
    match name {
        "theorem-1c" => theorem_1c(cfg, report),
        "theorem-e" => theorem_e(cfg, report),
        "lemma-sv" => lemma_sv(cfg, report),
        "lemma-p-containment" => lemma_p(cfg, report),
        "hyperbolic-family" => hyperbolic_family(cfg, report),
        "eremenko-components" => eremenko(cfg, report),
        other => Err(CliError::Usage(format!(
            "unknown experiment `{other}` (expected one of: {})",
            EXPERIMENTS.join(", ")
        ))),
    }
}

fn require_semigroups(cfg: &RunConfig) -> Result<Vec<Semigroup>, CliError> {
    let all = cfg.semigroups()?;
    if all.is_empty() {
        return Err(CliError::Usage(
            "the experiment needs at least one [semigroup] section".into(),
        ));
    }
    Ok(all)
}

fn theorem_1c(cfg: &RunConfig, report: &mut Report) -> Result<(), CliError> {
    let params = cfg.classify_params();
    let mut summaries = Vec::new();
    for s in require_semigroups(cfg)? {
        let whole = classify_grid(&s, &cfg.grid, &params)?;
        summaries.push(whole.summary());
        for w in enumerate_words(s.generator_count(), params.max_word_length, params.word_cap)? {
            let single = classify_single(&word_expr(&s, &w)?, &cfg.grid, &params)?;
            let r = containment_check(&whole, &single)?;
            let n = r.violations.len();
            let check = Check::new(
                format!("{}: I(S) within I(word {w})", s.label()),
                n == 0,
                n,
                "0 violating pixels",
            );
            report.checks.push(if n == 0 {
                check.with_details(json!({"word_escaping": r.outer_escaping}))
            } else {
                check.with_details(&r)
            });
        }
    }
    report.classification_summary = to_value(summaries);
    Ok(())
}

fn theorem_e(cfg: &RunConfig, report: &mut Report) -> Result<(), CliError> {
    let b = cfg.bindings();
    let get = |name: &str| {
        b.get(name)
            .ok_or_else(|| CliError::Usage(format!("theorem-e needs a `{name}` binding")))
    };
    let (gamma, c, mu, d) = (get("gamma")?, get("c")?, get("mu")?, get("d")?);
    let constraints = [
        ("Re gamma < 0", gamma.re < 0.0, gamma.re),
        ("Re c >= 1", c.re >= 1.0, c.re),
        ("Re mu < 0", mu.re < 0.0, mu.re),
        ("Re d <= -1", d.re <= -1.0, d.re),
    ];
    for (what, ok, v) in constraints {
        report.checks.push(Check::new(format!("parameter {what}"), ok, v, what));
    }
    let params = cfg.classify_params();
    let mut summaries = Vec::new();
    for s in require_semigroups(cfg)? {
        for grid in [cfg.grid, cfg.grid.enlarged(cfg.topology.enlarge)] {
            let c = classify_grid(&s, &grid, &params)?;
            let sum = c.summary();
            report.checks.push(
                Check::new(
                    format!("{}: escaping pixels on {}", s.label(), window(&grid)),
                    sum.escaping == 0,
                    sum.escaping,
                    "0 escaping pixels",
                )
                .with_details(json!({"indeterminate": sum.indeterminate})),
            );
            summaries.push(sum);
        }
    }
    report.classification_summary = to_value(summaries);
    Ok(())
}

fn window(g: &GridSpec) -> String {
    format!(
        "[{}, {}]x[{}, {}] at {}x{}",
        g.re_min, g.re_max, g.im_min, g.im_max, g.nx, g.ny
    )
}

#[derive(Serialize)]
struct LemmaSvDetail {
    outer: String,
    inner: String,
    composite: String,
    singular_values: Vec<Complex64>,
    ray_limits: usize,
    worst_ray_distance: f64,
    worst_lemma_distance: f64,
}

fn lemma_sv(cfg: &RunConfig, report: &mut Report) -> Result<(), CliError> {
    if cfg.lemma_sv.is_empty() {
        return Err(CliError::Usage("lemma-sv needs `pair` entries in [lemma_sv]".into()));
    }
    let b = cfg.bindings();
    let tol = cfg.verify.tolerance;
    let mut details = Vec::new();
    for (outer, inner) in &cfg.lemma_sv {
        let f = parse(outer, &b)?.normalize()?;
        let g = parse(inner, &b)?.normalize()?;
        let h = MapExpr::compose(f.clone(), g.clone()).normalize()?;
        let sv_h = singular_values(&h)?;
        let limits: Vec<Complex64> = sample_asymptotic_values(&h, RAY_DIRECTIONS)
            .into_iter()
            .filter_map(|r| r.limit)
            .collect();
        let worst_ray = limits.iter().map(|&w| sv_h.distance_to(w)).fold(0.0, f64::max);

        // SV(f∘g) against SV(f) ∪ f(SV(g))
        let mut bound = singular_values(&f)?.values();
        for v in singular_values(&g)?.values() {
            if let Ok(w) = f.eval(v) {
                bound.push(w);
            }
        }
        let worst_lemma = sv_h
            .values()
            .iter()
            .map(|&w| bound.iter().map(|&u| (u - w).norm()).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max);

        let name = format!("{} o {}", f.format(), g.format());
        report.checks.push(Check::new(
            format!("ray limits of {name} within SV"),
            !limits.is_empty() && worst_ray <= tol,
            json!({"worst_distance": worst_ray, "ray_limits": limits.len()}),
            format!("at least one ray limit, all within {tol:e}"),
        ));
        report.checks.push(Check::new(
            format!("SV({name}) within SV(f) u f(SV(g))"),
            worst_lemma <= tol,
            worst_lemma,
            format!("<= {tol:e}"),
        ));
        details.push(LemmaSvDetail {
            outer: f.format(),
            inner: g.format(),
            composite: h.format(),
            singular_values: sv_h.values(),
            ray_limits: limits.len(),
            worst_ray_distance: worst_ray,
            worst_lemma_distance: worst_lemma,
        });
    }
    report
        .checks
        .push(Check::new("pairs examined", true, details.len(), "informational").with_details(details));
    Ok(())
}

fn converged_limits(c: &PostSingularCloud) -> Vec<Complex64> {
    c.orbits.iter().filter_map(|o| o.limit).collect()
}

fn lemma_p(cfg: &RunConfig, report: &mut Report) -> Result<(), CliError> {
    let s = cfg.first_semigroup()?;
    if s.generator_count() < 2 {
        return Err(CliError::Usage(
            "lemma-p-containment needs a semigroup with two generators".into(),
        ));
    }
    let f = s.generators()[0].clone();
    let g = s.generators()[1].clone();
    let tol = cfg.verify.tolerance;
    let depth = cfg.verify.depth;

    let perm = permutability_check(&f, &g, &SampleSpec::default(), DEFAULT_PERMUTABILITY_TOL)?;
    report.checks.push(
        Check::new(
            "generators permute",
            perm.permutable,
            perm.max_deviation,
            format!("<= {DEFAULT_PERMUTABILITY_TOL:e}"),
        )
        .with_details(perm),
    );

    let cloud = |e: &MapExpr, label: &str| -> Result<PostSingularCloud, CliError> {
        let cyc = Semigroup::cyclic(e.clone(), label)?;
        Ok(post_singular_cloud(&cyc, 1, depth, &cfg.orbit)?)
    };
    let cf = cloud(&f, "f")?;
    let cg = cloud(&g, "g")?;
    let fg = MapExpr::compose(f.clone(), g.clone()).normalize()?;
    let cfg_cloud = cloud(&fg, "f o g")?;

    let worst = cfg_cloud
        .points
        .iter()
        .map(|&p| cf.distance_to(p).min(cg.distance_to(p)))
        .fold(0.0, f64::max);
    report.checks.push(Check::new(
        "P(f o g) within P(f) u P(g)",
        worst <= tol,
        worst,
        format!("<= {tol:e}"),
    ));
    for (name, c) in [("f", &cf), ("g", &cg)] {
        report.checks.push(Check::new(
            format!("P({name}) bounded"),
            matches!(c.boundedness, Boundedness::Bounded { .. }),
            c.boundedness,
            "bounded",
        ));
    }
    let limits: Vec<Complex64> = converged_limits(&cf).into_iter().chain(converged_limits(&cg)).collect();
    let spread = match limits.first() {
        Some(&l0) => limits.iter().map(|&l| (l - l0).norm()).fold(0.0, f64::max),
        None => f64::INFINITY,
    };
    report.checks.push(Check::new(
        "singular orbit limits agree",
        spread <= tol,
        json!({"spread": spread, "limit": limits.first()}),
        format!("spread <= {tol:e}"),
    ));
    report.hyperbolicity = json!({
        "clouds": [
            {"label": "f", "points": cf.points.len(), "boundedness": cf.boundedness},
            {"label": "g", "points": cg.points.len(), "boundedness": cg.boundedness},
            {"label": "f o g", "points": cfg_cloud.points.len(), "boundedness": cfg_cloud.boundedness},
        ],
        "depth": depth,
    });
    Ok(())
}

fn hyperbolic_family(cfg: &RunConfig, report: &mut Report) -> Result<(), CliError> {
    let fam = cfg
        .family
        .as_ref()
        .ok_or_else(|| CliError::Usage("hyperbolic-family needs a [family] section".into()))?;
    let params = cfg.hyperbolicity_params();
    let fine = cfg.grid.refined(2);
    let mut out = Vec::new();
    let cases = fam
        .hyperbolic
        .iter()
        .map(|&v| (v, Verdict::HyperbolicEvidence))
        .chain(fam.not_hyperbolic.iter().map(|&v| (v, Verdict::NotHyperbolicEvidence)));
    for (value, expected) in cases {
        let b = cfg.bindings().with(&fam.parameter, Complex64::new(value, 0.0))?;
        let f = parse(&fam.expr, &b)?;
        let label = format!("{} = {value}", fam.parameter);
        let s = Semigroup::cyclic(f, &label)?;
        let base = hyperbolicity_check(&s, &cfg.grid, &params)?;
        let doubled = hyperbolicity_check(&s, &fine, &params)?;
        let (v0, v1) = (base.aggregate.verdict, doubled.aggregate.verdict);
        report.checks.push(
            Check::new(
                format!("{label}: verdict"),
                v0 == expected,
                v0,
                to_value(expected).as_str().unwrap_or_default().to_string(),
            )
            .with_details(json!({"reason": base.aggregate.reason, "separation": base.aggregate.separation})),
        );
        report.checks.push(Check::new(
            format!("{label}: verdict stable at {}x{}", fine.nx, fine.ny),
            v1 == v0,
            v1,
            "same verdict as the base grid",
        ));
        out.push(json!({"parameter": value, "base": base, "doubled": doubled}));
    }
    report.hyperbolicity = Value::Array(out);
    Ok(())
}

fn eremenko(cfg: &RunConfig, report: &mut Report) -> Result<(), CliError> {
    let params = cfg.classify_params();
    let mut summaries = Vec::new();
    let mut comps = Vec::new();
    for s in require_semigroups(cfg)? {
        let c = classify_grid(&s, &cfg.grid, &params)?;
        summaries.push(c.summary());
        let pr = persistence_check(&s, &c, cfg.topology.connectivity, cfg.topology.enlarge)?;
        for (which, u) in [("base", &pr.base), ("enlarged", &pr.enlarged)] {
            report.checks.push(Check::new(
                format!("{}: interior components ({which} window)", s.label()),
                u.interior == 0,
                u.interior,
                "0 interior components",
            ));
        }
        let proxy = interior_escaping_pixels(&s, &c)?;
        let limit = cfg.verify.interior_fraction;
        report.checks.push(
            Check::new(
                format!("{}: fully surrounded escaping pixels after refinement", s.label()),
                proxy.interior_fraction < limit,
                json!({"fraction": proxy.interior_fraction, "escaping": proxy.escaping}),
                format!("fraction < {limit}"),
            )
            .with_details(json!({"candidates": proxy.candidates, "pixels": proxy.interior})),
        );
        comps.push(json!({"label": s.label(), "persistence": pr}));
    }
    report.classification_summary = to_value(summaries);
    report.components = Value::Array(comps);
    Ok(())
}

/// Component listing for one classification, shared by `render` and `components`.
pub fn component_section(c: &crate::escape::Classification, cfg: &RunConfig, full: bool) -> Value {
    let comps = connected_components(&c.escaping_mask(), cfg.topology.connectivity);
    let summary = unboundedness_report(&comps, &c.grid);
    if full {
        json!({"label": c.label, "summary": summary, "components": comps})
    } else {
        json!({"label": c.label, "summary": summary})
    }
}
