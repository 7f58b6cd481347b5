//! Gauss–Legendre rules used by the path integrals, the ellipse arc-length
//! tables and the Galerkin kernel assembly.

/// Positive abscissae of the 8-point Gauss–Legendre rule on `[-1, 1]`.
const GL8_NODES: [f64; 4] = [
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];

const GL8_WEIGHTS: [f64; 4] = [
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

/// The eight (node, weight) pairs on `[-1, 1]`.
pub fn gauss_legendre_8() -> [(f64, f64); 8] {
    let mut out = [(0.0, 0.0); 8];
    for i in 0..4 {
        out[2 * i] = (-GL8_NODES[i], GL8_WEIGHTS[i]);
        out[2 * i + 1] = (GL8_NODES[i], GL8_WEIGHTS[i]);
    }
    out
}

/// 8-point Gauss–Legendre approximation of `∫_a^b f`. Exact for polynomials
/// of degree ≤ 15.
pub fn gauss_legendre<F: FnMut(f64) -> f64>(a: f64, b: f64, mut f: F) -> f64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut sum = 0.0;
    for i in 0..4 {
        let dx = half * GL8_NODES[i];
        sum += GL8_WEIGHTS[i] * (f(mid - dx) + f(mid + dx));
    }
    sum * half
}

/// Adaptive bisection on the 8-point rule until the two-halves estimate
/// agrees with the whole-interval one to `tol` (absolute, per interval).
pub fn adaptive_gauss<F: FnMut(f64) -> f64>(a: f64, b: f64, tol: f64, mut f: F) -> f64 {
    fn rec<F: FnMut(f64) -> f64>(a: f64, b: f64, whole: f64, tol: f64, depth: u32, f: &mut F) -> f64 {
        let m = 0.5 * (a + b);
        let left = gauss_legendre(a, m, &mut *f);
        let right = gauss_legendre(m, b, &mut *f);
        let halves = left + right;
        if depth == 0 || (halves - whole).abs() <= tol {
            return halves;
        }
        rec(a, m, left, 0.5 * tol, depth - 1, f) + rec(m, b, right, 0.5 * tol, depth - 1, f)
    }
    let whole = gauss_legendre(a, b, &mut f);
    rec(a, b, whole, tol, 40, &mut f)
}
