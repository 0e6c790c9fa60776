//! Evaluation, differentiation and truncated orbits.

mod dual;

use num_complex::Complex64;
use serde::Serialize;

pub use dual::Dual;

use crate::expr::{MapExpr, Overflow};

pub const DEFAULT_MAX_ITER: usize = 200;
pub const DEFAULT_ESCAPE_RADIUS: f64 = 1e12;
pub const DEFAULT_CONFIRM: usize = 3;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OrbitParamError {
    #[error("max_iter must be at least 1")]
    ZeroBudget,
    #[error("escape radius must be finite and greater than 1 (got {0})")]
    BadRadius(f64),
}

/// Truncation parameters of an escape test: budget `N`, radius `R`, confirmation count `k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OrbitParams {
    pub max_iter: usize,
    pub escape_radius: f64,
    pub confirm: usize,
}

impl Default for OrbitParams {
    fn default() -> Self {
        OrbitParams {
            max_iter: DEFAULT_MAX_ITER,
            escape_radius: DEFAULT_ESCAPE_RADIUS,
            confirm: DEFAULT_CONFIRM,
        }
    }
}

impl OrbitParams {
    pub fn new(max_iter: usize, escape_radius: f64, confirm: usize) -> Result<Self, OrbitParamError> {
        let p = OrbitParams {
            max_iter,
            escape_radius,
            confirm,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), OrbitParamError> {
        if self.max_iter == 0 {
            return Err(OrbitParamError::ZeroBudget);
        }
        if !(self.escape_radius.is_finite() && self.escape_radius > 1.0) {
            return Err(OrbitParamError::BadRadius(self.escape_radius));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OrbitStatus {
    /// Crossed the escape radius at iterate `at` and stayed out (or overflowed).
    Escaped {
        at: usize,
        overflow: bool,
    },
    BoundedWithinBudget,
    /// Crossed the radius without confirmation before the budget ran out,
    /// or came back inside after crossing.
    Indeterminate,
}

impl OrbitStatus {
    pub fn is_escaped(&self) -> bool {
        matches!(self, OrbitStatus::Escaped { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrbitRecord {
    pub seed: Complex64,
    /// `f(seed), f²(seed), …` up to the point the status was decided.
    pub iterates: Vec<Complex64>,
    pub status: OrbitStatus,
    pub params: OrbitParams,
}

pub fn eval(expr: &MapExpr, z: Complex64) -> Result<Complex64, Overflow> {
    expr.eval(z)
}

/// Evaluates `expr` on a dual input; `Var` maps to `input`.
pub fn eval_dual(expr: &MapExpr, input: Dual) -> Result<Dual, Overflow> {
    let v = match expr {
        MapExpr::Var => input,
        MapExpr::Const(c) => Dual::constant(*c),
        MapExpr::Param { value, .. } => Dual::constant(*value),
        MapExpr::Sum(a, b) => eval_dual(a, input)? + eval_dual(b, input)?,
        MapExpr::Product(a, b) => eval_dual(a, input)? * eval_dual(b, input)?,
        MapExpr::Negate(a) => -eval_dual(a, input)?,
        MapExpr::Exp(a) => eval_dual(a, input)?.exp(),
        MapExpr::Compose(o, i) => eval_dual(o, eval_dual(i, input)?)?,
        MapExpr::Iterate(c, n) => {
            let mut w = input;
            for _ in 0..*n {
                w = eval_dual(c, w)?;
            }
            w
        }
    };
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Overflow)
    }
}

/// Complex derivative `f'(z)` by forward-mode differentiation through the tree.
pub fn deriv_eval(expr: &MapExpr, z: Complex64) -> Result<Complex64, Overflow> {
    Ok(eval_dual(expr, Dual::variable(z))?.deriv)
}

// Shared escape bookkeeping so the recorded and the fast orbit agree exactly.
struct EscapeTracker {
    params: OrbitParams,
    candidate: Option<usize>,
    run: usize,
    prev_modulus: f64,
    exceeded: bool,
}

impl EscapeTracker {
    fn new(params: OrbitParams) -> Self {
        EscapeTracker {
            params,
            candidate: None,
            run: 0,
            prev_modulus: 0.0,
            exceeded: false,
        }
    }

    fn overflowed(&self, step: usize) -> OrbitStatus {
        OrbitStatus::Escaped {
            at: self.candidate.unwrap_or(step),
            overflow: true,
        }
    }

    fn observe(&mut self, step: usize, modulus: f64) -> Option<OrbitStatus> {
        if modulus > self.params.escape_radius {
            self.exceeded = true;
            match self.candidate {
                Some(at) if modulus >= self.prev_modulus => {
                    self.run += 1;
                    if self.run >= self.params.confirm {
                        return Some(OrbitStatus::Escaped { at, overflow: false });
                    }
                }
                _ => {
                    self.candidate = Some(step);
                    self.run = 0;
                    if self.params.confirm == 0 {
                        return Some(OrbitStatus::Escaped {
                            at: step,
                            overflow: false,
                        });
                    }
                }
            }
            self.prev_modulus = modulus;
        } else {
            self.candidate = None;
        }
        None
    }

    fn settled_inside(&self) -> bool {
        self.candidate.is_none()
    }

    fn finish(&self) -> OrbitStatus {
        if self.candidate.is_some() || self.exceeded {
            OrbitStatus::Indeterminate
        } else {
            OrbitStatus::BoundedWithinBudget
        }
    }
}

/// Iterates `expr` from `seed`, recording every iterate until the status is decided.
pub fn orbit(expr: &MapExpr, seed: Complex64, params: OrbitParams) -> Result<OrbitRecord, OrbitParamError> {
    params.validate()?;
    let mut tracker = EscapeTracker::new(params);
    let mut iterates = Vec::new();
    let mut z = seed;
    let mut status = None;
    for step in 1..=params.max_iter {
        match expr.eval(z) {
            Err(Overflow) => {
                status = Some(tracker.overflowed(step));
                break;
            }
            Ok(next) => {
                z = next;
                iterates.push(z);
                if let Some(s) = tracker.observe(step, z.norm()) {
                    status = Some(s);
                    break;
                }
            }
        }
    }
    Ok(OrbitRecord {
        seed,
        iterates,
        status: status.unwrap_or_else(|| tracker.finish()),
        params,
    })
}

fn same_bits(a: Complex64, b: Complex64) -> bool {
    a.re.to_bits() == b.re.to_bits() && a.im.to_bits() == b.im.to_bits()
}

/// Status of the orbit of `seed` without recording iterates.
///
/// Gives the same status as [`orbit`]. Once the floating-point orbit enters
/// an exact cycle lying inside the escape radius (detected with Brent's
/// method) the remaining iterates are known and the loop stops early.
pub fn escape_status(expr: &MapExpr, seed: Complex64, params: &OrbitParams) -> OrbitStatus {
    let mut tracker = EscapeTracker::new(*params);
    let mut z = seed;
    let mut saved = seed;
    let mut power = 1usize;
    let mut lam = 0usize;
    let mut cycle_max = 0.0f64;
    for step in 1..=params.max_iter {
        z = match expr.eval(z) {
            Ok(v) => v,
            Err(Overflow) => return tracker.overflowed(step),
        };
        let modulus = z.norm();
        if let Some(s) = tracker.observe(step, modulus) {
            return s;
        }
        cycle_max = cycle_max.max(modulus);
        if same_bits(z, saved) && tracker.settled_inside() && cycle_max <= params.escape_radius {
            return tracker.finish();
        }
        lam += 1;
        if lam == power {
            saved = z;
            power *= 2;
            lam = 0;
            cycle_max = 0.0;
        }
    }
    tracker.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse, Bindings};

    fn p(text: &str) -> MapExpr {
        parse(text, &Bindings::new()).unwrap()
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    // Real fixed point of x = e^{x/4} below the repelling one, by bisection.
    fn quarter_fixed_point() -> f64 {
        let g = |x: f64| (x / 4.0).exp() - x;
        let (mut lo, mut hi) = (0.0f64, 2.0f64);
        assert!(g(lo) > 0.0 && g(hi) < 0.0);
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

    #[test]
    fn eval_examples() {
        assert_eq!(eval(&p("exp(0.25*z)"), c(0.0, 0.0)).unwrap(), c(1.0, 0.0));
        assert_eq!(eval(&p("exp(-z-1)+1"), c(-1.0, 0.0)).unwrap(), c(2.0, 0.0));
        let v = eval(&p("exp(z)"), c(0.0, std::f64::consts::PI)).unwrap();
        assert!((v - c(-1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn deriv_examples() {
        assert_eq!(deriv_eval(&p("exp(z)"), c(0.0, 0.0)).unwrap(), c(1.0, 0.0));
        for z in [c(0.0, 0.0), c(3.0, -7.0), c(-1e3, 2.0)] {
            assert_eq!(deriv_eval(&p("0.25*z + 1"), z).unwrap(), c(0.25, 0.0));
        }
        let d = deriv_eval(&p("exp(exp(z))"), c(0.0, 0.0)).unwrap();
        assert!((d - c(std::f64::consts::E, 0.0)).norm() < 1e-15);
        assert_eq!(deriv_eval(&p("exp(exp(z))"), c(800.0, 0.0)), Err(Overflow));
    }

    #[test]
    fn exp_tower_from_one_escapes() {
        let r = orbit(&p("exp(z)"), c(1.0, 0.0), OrbitParams::new(50, 1e12, 3).unwrap()).unwrap();
        assert!(r.status.is_escaped());
        for w in r.iterates.windows(2) {
            assert!(w[1].re > w[0].re);
        }
    }

    #[test]
    fn quarter_map_converges_to_attracting_fixed_point() {
        let q = quarter_fixed_point();
        assert!((q - 1.4296).abs() < 1e-4);
        let r = orbit(&p("exp(z/4)"), c(0.0, 0.0), OrbitParams::new(200, 1e12, 3).unwrap()).unwrap();
        assert_eq!(r.status, OrbitStatus::BoundedWithinBudget);
        assert_eq!(r.iterates.len(), 200);
        assert!((r.iterates.last().unwrap() - c(q, 0.0)).norm() < 1e-9);
    }

    #[test]
    fn very_negative_seed_escapes_via_overflow() {
        let r = orbit(&p("exp(z)"), c(-100.0, 0.0), OrbitParams::default()).unwrap();
        assert!(matches!(r.status, OrbitStatus::Escaped { overflow: true, .. }));
        assert!(r.iterates[0].norm() < 1e-40);
    }

    #[test]
    fn crossing_then_returning_is_not_bounded() {
        // e^{-z-1}+1 at z=-30 jumps to ~4e12 and then falls back near 1
        let r = orbit(&p("exp(-z-1)+1"), c(-30.0, 0.0), OrbitParams::default()).unwrap();
        assert_eq!(r.status, OrbitStatus::Indeterminate);
        assert!(r.iterates[0].norm() > 1e12);
        assert!(r.iterates[1].norm() < 2.0);
    }

    #[test]
    fn confirmation_cut_by_budget_is_indeterminate() {
        // the crossing happens on the last step, no room to confirm
        let f = p("z*1e7");
        let r = orbit(&f, c(1.0, 0.0), OrbitParams::new(2, 1e12, 3).unwrap()).unwrap();
        assert_eq!(r.status, OrbitStatus::Indeterminate);
        let r = orbit(&f, c(1.0, 0.0), OrbitParams::new(5, 1e12, 3).unwrap()).unwrap();
        assert_eq!(r.status, OrbitStatus::Escaped { at: 2, overflow: false });
        let r = orbit(&f, c(1.0, 0.0), OrbitParams::new(2, 1e12, 0).unwrap()).unwrap();
        assert_eq!(r.status, OrbitStatus::Escaped { at: 2, overflow: false });
    }

    #[test]
    fn parameter_validation() {
        assert_eq!(OrbitParams::new(0, 10.0, 1), Err(OrbitParamError::ZeroBudget));
        assert!(matches!(
            OrbitParams::new(1, 1.0, 1),
            Err(OrbitParamError::BadRadius(_))
        ));
        assert!(matches!(
            OrbitParams::new(1, f64::NAN, 1),
            Err(OrbitParamError::BadRadius(_))
        ));
    }

    #[test]
    fn fast_status_matches_recorded_orbit() {
        let params = OrbitParams::default();
        for text in [
            "exp(z/4)",
            "exp(z)",
            "exp(-z-1)+1",
            "exp(z-1)-1",
            "exp(0.35*z)",
            "exp(2i*z)",
        ] {
            let f = p(text);
            for k in 0..40 {
                let seed = c(-6.0 + 0.3 * k as f64, 4.0 - 0.2 * k as f64);
                let full = orbit(&f, seed, params).unwrap().status;
                assert_eq!(escape_status(&f, seed, &params), full, "{text} at {seed}");
            }
        }
    }
}
