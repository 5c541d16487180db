//! Adaptive Gauss–Kronrod (7/15) quadrature on finite intervals, plus a
//! helper for integrals over the whole real line.

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

const MAX_DEPTH: u32 = 40;
/// Bisection stops once an integral has used this many evaluations.
pub const MAX_EVALUATIONS: usize = 2_000_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    /// Sum of the Gauss/Kronrod disagreement over accepted panels.
    pub error: f64,
    pub evaluations: usize,
    /// False if the evaluation budget ran out before the tolerance was met.
    pub converged: bool,
}

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for k in 0..7 {
        let dx = h * XGK[k];
        let s = f(c - dx) + f(c + dx);
        kron += WGK[k] * s;
        if k % 2 == 1 {
            gauss += WG[k / 2] * s;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

/// Integrates `f` over `[a, b]` to absolute tolerance `tol` by recursive
/// bisection.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64) -> QuadResult {
    if a == b {
        return QuadResult {
            value: 0.0,
            error: 0.0,
            evaluations: 0,
            converged: true,
        };
    }
    let (whole, err) = gk15(&mut f, a, b);
    let mut out = QuadResult {
        value: 0.0,
        error: 0.0,
        evaluations: 15,
        converged: true,
    };
    refine(&mut f, a, b, whole, err, tol, 0, &mut out);
    out
}

#[allow(clippy::too_many_arguments)]
fn refine<F: FnMut(f64) -> f64>(
    f: &mut F,
    a: f64,
    b: f64,
    whole: f64,
    err: f64,
    tol: f64,
    depth: u32,
    out: &mut QuadResult,
) {
    let exhausted = out.evaluations >= MAX_EVALUATIONS;
    if err <= tol || exhausted || depth >= MAX_DEPTH || (b - a).abs() < 1e-14 * (a.abs() + b.abs()) {
        if err > tol && exhausted {
            out.converged = false;
        }
        out.value += whole;
        out.error += err;
        return;
    }
    let m = 0.5 * (a + b);
    let (left, el) = gk15(f, a, m);
    let (right, er) = gk15(f, m, b);
    out.evaluations += 30;
    refine(f, a, m, left, el, 0.5 * tol, depth + 1, out);
    refine(f, m, b, right, er, 0.5 * tol, depth + 1, out);
}

/// Integrates over `(-inf, inf)` via `x = center + scale * u / (1 - u^2)`.
pub fn integrate_real_line<F: FnMut(f64) -> f64>(mut f: F, center: f64, scale: f64, tol: f64) -> QuadResult {
    integrate(
        |u| {
            let d = 1.0 - u * u;
            if d <= 0.0 {
                return 0.0;
            }
            let x = center + scale * u / d;
            let jac = scale * (1.0 + u * u) / (d * d);
            let v = f(x) * jac;
            if v.is_finite() {
                v
            } else {
                0.0
            }
        },
        -1.0,
        1.0,
        tol,
    )
}
