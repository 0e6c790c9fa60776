#![allow(dead_code)]

use num_complex::Complex64;
use semidyn::expr::{parse, Bindings, MapExpr};

/// Expressions shared across the integration suites.
pub const CORPUS: &[&str] = &[
    "exp(z)",
    "exp(z/4)",
    "exp(-z - 1) + 1",
    "exp(z - 1) - 1",
    "2*exp(z) + 1",
    "exp(i*z)",
    "(1+1i)*exp(-z/2) - 1",
    "exp(exp(z))",
    "iterate(exp(z/4), 2)",
    "compose(exp(z) - 3, 0.5*exp(2*z) + 1)",
    "z*exp(z)",
    "exp(z) + z*z - 2",
];

/// Corpus members that are exp-affine towers.
pub const TOWERS: &[&str] = &[
    "exp(z)",
    "exp(z/4)",
    "exp(-z - 1) + 1",
    "exp(z - 1) - 1",
    "2*exp(z) + 1",
    "exp(i*z)",
    "(1+1i)*exp(-z/2) - 1",
    "0.5*exp(2*z) + 1",
    "exp(-2*z) + 1i",
    "3*exp(z) - 1",
];

pub fn p(text: &str) -> MapExpr {
    parse(text, &Bindings::new()).unwrap().normalize().unwrap()
}

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Root of `x = e^{x/4}` in `[1, 2]` by bisection.
pub fn quarter_fixed_point() -> f64 {
    let g = |x: f64| (x / 4.0).exp() - x;
    let (mut lo, mut hi) = (1.0f64, 2.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
