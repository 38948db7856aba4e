//! Numerical integration used by the oracles and the diffusion regularity
//! computations: Gauss–Laguerre rules, fixed Gauss–Legendre rules and an
//! adaptive Gauss–Kronrod (7/15) integrator with infinite-range maps.

use crate::{Error, Result};

/// Nodes and weights of the `n`-point Gauss–Laguerre rule for
/// `∫₀^∞ g(t) e^{-t} dt ≈ Σ w_i g(t_i)`.
pub fn gauss_laguerre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let nf = n as f64;
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut z = 0.0f64;
    for i in 0..n {
        z = match i {
            0 => 3.0 / (1.0 + 2.4 * nf),
            1 => z + 15.0 / (1.0 + 2.5 * nf),
            _ => {
                let ai = (i - 1) as f64;
                z + ((1.0 + 2.55 * ai) / (1.9 * ai)) * (z - x[i - 2])
            }
        };
        for _ in 0..200 {
            let mut p1 = 1.0;
            let mut p2 = 0.0;
            for j in 1..=n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = ((2.0 * jf - 1.0 - z) * p2 - (jf - 1.0) * p3) / jf;
            }
            let pp = (nf * p1 - nf * p2) / z;
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= 1e-15 * z.abs().max(1.0) {
                break;
            }
        }
        // recompute at the converged node for the weight
        let mut p1 = 1.0;
        let mut p2 = 0.0;
        for j in 1..=n {
            let p3 = p2;
            p2 = p1;
            let jf = j as f64;
            p1 = ((2.0 * jf - 1.0 - z) * p2 - (jf - 1.0) * p3) / jf;
        }
        let pp = (nf * p1 - nf * p2) / z;
        x[i] = z;
        w[i] = -1.0 / (pp * nf * p2);
    }
    (x, w)
}

/// 3-point Gauss–Legendre nodes on [-1, 1]; exact for polynomials of degree ≤ 5.
pub const GL3_NODES: [f64; 3] = [-0.774_596_669_241_483_4, 0.0, 0.774_596_669_241_483_4];
pub const GL3_WEIGHTS: [f64; 3] = [5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0];

/// `∫_a^b g` with the 3-point Gauss–Legendre rule.
pub fn gauss_legendre3<F: FnMut(f64) -> f64>(mut g: F, a: f64, b: f64) -> f64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut acc = 0.0;
    for (node, weight) in GL3_NODES.iter().zip(GL3_WEIGHTS.iter()) {
        acc += weight * g(mid + half * node);
    }
    acc * half
}

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
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: FnMut(f64) -> f64>(g: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = g(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let f1 = g(c - dx);
        let f2 = g(c + dx);
        kron += WGK[j] * (f1 + f2);
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

/// Tolerances for [`integrate`].
#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub rel: f64,
    pub abs: f64,
    pub max_intervals: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self { rel: 1e-10, abs: 1e-13, max_intervals: 4000 }
    }
}

impl Tolerance {
    pub fn relative(rel: f64) -> Self {
        Self { rel, ..Self::default() }
    }
}

/// Globally adaptive Gauss–Kronrod integration of `g` over the finite interval `[a, b]`.
pub fn integrate<F: FnMut(f64) -> f64>(mut g: F, a: f64, b: f64, tol: Tolerance) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::QuadratureFailure(format!("non-finite limits [{a}, {b}]")));
    }
    let (v, e) = gk15(&mut g, a, b);
    let mut pieces = vec![(a, b, v, e)];
    let mut total = v;
    let mut err = e;
    while err > tol.abs.max(tol.rel * total.abs()) {
        if !total.is_finite() || !err.is_finite() {
            return Err(Error::QuadratureFailure(format!("non-finite integrand on [{a}, {b}]")));
        }
        if pieces.len() >= tol.max_intervals {
            return Err(Error::QuadratureFailure(format!(
                "error estimate {err:e} above tolerance after {} subintervals",
                pieces.len()
            )));
        }
        let (idx, _) = pieces
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .expect("non-empty");
        let (lo, hi, pv, pe) = pieces.swap_remove(idx);
        let mid = 0.5 * (lo + hi);
        let (v1, e1) = gk15(&mut g, lo, mid);
        let (v2, e2) = gk15(&mut g, mid, hi);
        total += v1 + v2 - pv;
        err += e1 + e2 - pe;
        pieces.push((lo, mid, v1, e1));
        pieces.push((mid, hi, v2, e2));
    }
    // re-sum to shed accumulated rounding from the running updates
    let total: f64 = pieces.iter().map(|p| p.2).sum();
    if !total.is_finite() {
        return Err(Error::QuadratureFailure("non-finite result".into()));
    }
    Ok(total)
}

/// `∫_a^∞ g` via the map `x = a + t/(1-t)`.
pub fn integrate_to_infinity<F: FnMut(f64) -> f64>(mut g: F, a: f64, tol: Tolerance) -> Result<f64> {
    integrate(
        |t| {
            if t >= 1.0 {
                return 0.0;
            }
            let s = 1.0 - t;
            let v = g(a + t / s) / (s * s);
            if v.is_finite() { v } else { f64::NAN }
        },
        0.0,
        1.0,
        tol,
    )
}

/// `∫_{-∞}^∞ g` via the map `x = t/(1-t²)`.
pub fn integrate_real_line<F: FnMut(f64) -> f64>(mut g: F, tol: Tolerance) -> Result<f64> {
    integrate(
        |t| {
            let s = 1.0 - t * t;
            if s <= 0.0 {
                return 0.0;
            }
            let v = g(t / s) * (1.0 + t * t) / (s * s);
            if v.is_finite() { v } else { f64::NAN }
        },
        -1.0,
        1.0,
        tol,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn laguerre_integrates_exponentials() {
        let (x, w) = gauss_laguerre(64);
        for c in [0.0, 0.5, 1.0, 3.0, 8.0] {
            let q: f64 = x.iter().zip(&w).map(|(t, wi)| wi * (-c * t).exp()).sum();
            assert!((q - 1.0 / (1.0 + c)).abs() < 1e-12, "c = {c}: {q}");
        }
        let q: f64 = x.iter().zip(&w).map(|(t, wi)| wi * t.powi(5)).sum();
        assert!((q - 120.0).abs() < 1e-8);
    }

    #[test]
    fn gl3_exact_on_quintics() {
        let q = gauss_legendre3(|x| x.powi(5) - 2.0 * x.powi(4) + x, 0.5, 2.0);
        let exact = |x: f64| x.powi(6) / 6.0 - 2.0 * x.powi(5) / 5.0 + x * x / 2.0;
        assert!((q - (exact(2.0) - exact(0.5))).abs() < 1e-12);
    }

    #[test]
    fn adaptive_handles_peaks_and_tails() {
        let q = integrate(|x| 1.0 / (1e-4 + x * x), -1.0, 1.0, Tolerance::default()).unwrap();
        let exact = 2.0 * (1.0f64 / 1e-2).atan() / 1e-2;
        assert!((q - exact).abs() / exact < 1e-9);
        let q = integrate_real_line(|x| (-0.5 * x * x).exp(), Tolerance::default()).unwrap();
        assert!((q - (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-10);
        let q = integrate_to_infinity(|x| (-x).exp(), 1.0, Tolerance::default()).unwrap();
        assert!((q - (-1.0f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn non_finite_integrand_fails() {
        assert!(matches!(
            integrate(|x| 1.0 / x, -1.0, 1.0, Tolerance::default()),
            Err(Error::QuadratureFailure(_))
        ));
    }
}
