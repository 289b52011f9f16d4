//! Bracketing root finders shared by the calibration and secular solvers.

/// A sign-change bracket `[lo, hi]` with the function values at its ends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bracket {
    pub lo: f64,
    pub hi: f64,
    pub f_lo: f64,
    pub f_hi: f64,
}

/// Samples `f` at `n + 1` equispaced points of `[a, b]` and returns every
/// subinterval where the sign flips. A sample that is exactly zero opens a
/// bracket with its right neighbour so the root is not counted twice.
pub fn sign_changes<F>(f: F, a: f64, b: f64, n: usize) -> Vec<Bracket>
where
    F: Fn(f64) -> f64,
{
    let h = (b - a) / n as f64;
    let mut out = Vec::new();
    let mut x0 = a;
    let mut f0 = f(a);
    for i in 1..=n {
        let x1 = if i == n { b } else { a + h * i as f64 };
        let f1 = f(x1);
        if f0 == 0.0 || ((f0 < 0.0) != (f1 < 0.0) && f1 != 0.0) {
            out.push(Bracket {
                lo: x0,
                hi: x1,
                f_lo: f0,
                f_hi: f1,
            });
        }
        x0 = x1;
        f0 = f1;
    }
    out
}

/// Bisection on a sign-change bracket. Stops when the bracket width falls
/// below `rel_tol * max(1, |x|)` or cannot shrink further in floating point.
pub fn bisect<F>(f: F, bracket: Bracket, rel_tol: f64) -> Bracket
where
    F: Fn(f64) -> f64,
{
    let Bracket {
        mut lo,
        mut hi,
        mut f_lo,
        mut f_hi,
    } = bracket;
    if f_lo == 0.0 {
        return Bracket {
            lo,
            hi: lo,
            f_lo,
            f_hi: f_lo,
        };
    }
    if f_hi == 0.0 {
        return Bracket {
            lo: hi,
            hi,
            f_lo: f_hi,
            f_hi,
        };
    }
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo <= rel_tol * mid.abs().max(1.0) {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Bracket {
                lo: mid,
                hi: mid,
                f_lo: fm,
                f_hi: fm,
            };
        }
        if (fm < 0.0) == (f_lo < 0.0) {
            lo = mid;
            f_lo = fm;
        } else {
            hi = mid;
            f_hi = fm;
        }
    }
    Bracket { lo, hi, f_lo, f_hi }
}

/// Newton polish inside a bracket: at most `steps` iterations, abandoning any
/// step that would leave `[lo, hi]`. Returns the point with the smallest |f|.
pub fn newton_polish<F, D>(f: F, df: D, bracket: Bracket, steps: usize) -> f64
where
    F: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    let (lo, hi) = (bracket.lo, bracket.hi);
    let mut best = if bracket.f_lo.abs() <= bracket.f_hi.abs() {
        (lo, bracket.f_lo.abs())
    } else {
        (hi, bracket.f_hi.abs())
    };
    let mut x = 0.5 * (lo + hi);
    for _ in 0..steps {
        let fx = f(x);
        if fx.abs() < best.1 {
            best = (x, fx.abs());
        }
        if fx == 0.0 {
            break;
        }
        let d = df(x);
        if d == 0.0 || !d.is_finite() {
            break;
        }
        let next = x - fx / d;
        if !(next >= lo && next <= hi) || next == x {
            break;
        }
        x = next;
    }
    let fx = f(x).abs();
    if fx < best.1 {
        best = (x, fx);
    }
    best.0
}
