//! Adaptive Gauss-Kronrod (7/15) quadrature for the Lévy integrals.

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

fn kronrod(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for j in 0..7 {
        let fx = f(c - h * XGK[j]) + f(c + h * XGK[j]);
        k += WGK[j] * fx;
        if j % 2 == 1 {
            g += WG[j / 2] * fx;
        }
    }
    (k * h, ((k - g) * h).abs())
}

fn adapt(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let (k, err) = kronrod(f, a, b);
    if err <= tol || depth == 0 {
        return k;
    }
    let m = 0.5 * (a + b);
    adapt(f, a, m, 0.5 * tol, depth - 1) + adapt(f, m, b, 0.5 * tol, depth - 1)
}

/// `∫_a^b f` to roughly `tol` absolute error.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    adapt(&f, a, b, tol, 40)
}

/// `∫_0^∞ f(w) dw` through `w = s u / (1 - u)`.
pub fn integrate_half_line(f: impl Fn(f64) -> f64, scale: f64, tol: f64) -> f64 {
    let g = |u: f64| {
        if u >= 1.0 {
            return 0.0;
        }
        let w = scale * u / (1.0 - u);
        let v = f(w) * scale / ((1.0 - u) * (1.0 - u));
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    // Crude pass to set a relative tolerance.
    let rough = integrate(g, 0.0, 1.0, f64::INFINITY).abs();
    integrate(g, 0.0, 1.0, (tol * rough).max(1e-300))
}

/// `∫ α w⁻¹ e^{-τw} (1 - e^{-zw}) dw`.
pub fn psi_quadrature(alpha: f64, tau: f64, z: f64) -> f64 {
    let f = |w: f64| {
        if w == 0.0 {
            alpha * z
        } else {
            -alpha * (-z * w).exp_m1() / w * (-tau * w).exp()
        }
    };
    integrate_half_line(f, 1.0 / tau, 1e-12)
}

/// `∫ α w^{n-1} e^{-(z+τ)w} dw`.
pub fn kappa_quadrature(alpha: f64, tau: f64, n: u32, z: f64) -> f64 {
    let f = |w: f64| alpha * w.powi(n as i32 - 1) * (-(z + tau) * w).exp();
    integrate_half_line(f, 1.0 / (z + tau), 1e-12)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let v = integrate(|x| x.powi(5) - 3.0 * x, 0.0, 2.0, 1e-14);
        assert!((v - (64.0 / 6.0 - 6.0)).abs() < 1e-12);
    }

    #[test]
    fn half_line_exponential() {
        let v = integrate_half_line(|w| (-3.0 * w).exp(), 1.0 / 3.0, 1e-12);
        assert!((v - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn frullani_integral() {
        // ∫ (e^{-w} - e^{-3w}) / w dw = ln 3
        let v = psi_quadrature(1.0, 1.0, 2.0);
        assert!((v - 3f64.ln()).abs() < 1e-10);
    }
}
