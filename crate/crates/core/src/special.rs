//! Special functions and lattice constants used by the nonlocal quadratures.

use std::f64::consts::PI;

use statrs::function::gamma::gamma;

/// Normalizing constant `c_{N,s}` for which `(-Δ)^s` has Fourier symbol `|ξ|^{2s}`.
pub fn frac_laplacian_constant(dim: usize, s: f64) -> f64 {
    let n = dim as f64;
    4f64.powf(s) * gamma(n / 2.0 + s) / (PI.powf(n / 2.0) * gamma(-s).abs())
}

/// Reciprocal gamma function, zero at the poles.
pub fn rgamma(x: f64) -> f64 {
    if x <= 0.0 && x == x.round() {
        0.0
    } else {
        1.0 / gamma(x)
    }
}

/// Upper incomplete gamma `Γ(a, x)` for `x > 0` and any real `a`, by the
/// Legendre continued fraction (modified Lentz). Accurate for `x ≳ a + 1`.
pub fn upper_incomplete_gamma(a: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..500 {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < 1e-16 {
            break;
        }
    }
    (-x + a * x.ln()).exp() * h
}

/// Epstein zeta function of the cubic lattice, `Z_N(σ) = Σ_{k ∈ ℤ^N \ 0} |k|^{-σ}`,
/// analytically continued to all `σ ≠ N` through the theta-function splitting.
pub fn epstein_zeta(dim: usize, sigma: f64) -> f64 {
    let n = dim as f64;
    let reach: i64 = 6;
    let mut sum = 0.0;
    let mut visit = |k2: i64| {
        if k2 == 0 || k2 > reach * reach {
            return;
        }
        let x = PI * k2 as f64;
        sum += upper_incomplete_gamma(sigma / 2.0, x) * x.powf(-sigma / 2.0)
            + upper_incomplete_gamma((n - sigma) / 2.0, x) * x.powf(-(n - sigma) / 2.0);
    };
    match dim {
        1 => (-reach..=reach).for_each(|i| visit(i * i)),
        2 => {
            for i in -reach..=reach {
                for j in -reach..=reach {
                    visit(i * i + j * j);
                }
            }
        }
        _ => {
            for i in -reach..=reach {
                for j in -reach..=reach {
                    for k in -reach..=reach {
                        visit(i * i + j * j + k * k);
                    }
                }
            }
        }
    }
    PI.powf(sigma / 2.0) * (-rgamma(sigma / 2.0 + 1.0) + rgamma(sigma / 2.0) * (sum - 2.0 / (n - sigma)))
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp;
        loop {
            let (mut p1, mut p2) = (1.0, 0.0);
            for j in 1..=n {
                let p3 = p2;
                p2 = p1;
                p1 = ((2.0 * j as f64 - 1.0) * z * p2 - (j as f64 - 1.0) * p3) / j as f64;
            }
            dp = n as f64 * (z * p1 - p2) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// `∫_{|w|_∞ > R} |w|^{-N-2s} dw` over the exterior of the cube of half-width `R`.
pub fn cube_exterior_integral(dim: usize, s: f64, radius: f64) -> f64 {
    let p = dim as f64 + 2.0 * s;
    let face = match dim {
        1 => 1.0,
        2 => {
            let (x, w) = gauss_legendre(48);
            x.iter()
                .zip(&w)
                .map(|(xi, wi)| wi * (1.0 + xi * xi).powf(-p / 2.0))
                .sum()
        }
        _ => {
            let (x, w) = gauss_legendre(48);
            let mut acc = 0.0;
            for (xi, wi) in x.iter().zip(&w) {
                for (xj, wj) in x.iter().zip(&w) {
                    acc += wi * wj * (1.0 + xi * xi + xj * xj).powf(-p / 2.0);
                }
            }
            acc
        }
    };
    radius.powf(-2.0 * s) / (2.0 * s) * 2.0 * dim as f64 * face
}

/// Volume of the unit ball in `ℝ^N`.
pub fn unit_ball_volume(dim: usize) -> f64 {
    let n = dim as f64;
    PI.powf(n / 2.0) / gamma(n / 2.0 + 1.0)
}

/// Sharp Hardy–Littlewood–Sobolev constant for the diagonal case
/// `r = t = 2N / (2N - μ)`.
pub fn hls_sharp_constant(dim: usize, mu: f64) -> f64 {
    let n = dim as f64;
    PI.powf(mu / 2.0) * gamma(n / 2.0 - mu / 2.0) / gamma(n - mu / 2.0)
        * (gamma(n / 2.0) / gamma(n)).powf(-1.0 + mu / n)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_matches_known_values() {
        // N = 1, s = 1/2: c = 1/π.
        assert!((frac_laplacian_constant(1, 0.5) - 1.0 / PI).abs() < 1e-14);
        // N = 3, s = 1/2: c = 1/π².
        assert!((frac_laplacian_constant(3, 0.5) - 1.0 / (PI * PI)).abs() < 1e-14);
    }

    #[test]
    fn incomplete_gamma_special_cases() {
        // Γ(1, x) = e^{-x}; Γ(1/2, x) = √π erfc(√x); Γ(0, x) = E1(x).
        for &x in &[PI, 4.0, 10.0] {
            assert!((upper_incomplete_gamma(1.0, x) - (-x).exp()).abs() < 1e-15);
        }
        let e1_pi = 0.010_906_300_899_274_0; // E1(π)
        assert!((upper_incomplete_gamma(0.0, PI) / e1_pi - 1.0).abs() < 1e-9);
        // Γ(a+1, x) = a Γ(a, x) + x^a e^{-x} at negative a.
        let (a, x) = (-0.3, 3.5);
        let lhs = upper_incomplete_gamma(a + 1.0, x);
        let rhs = a * upper_incomplete_gamma(a, x) + x.powf(a) * (-x).exp();
        assert!((lhs - rhs).abs() < 1e-14);
    }

    #[test]
    fn epstein_reduces_to_riemann_zeta_in_one_dimension() {
        assert!((epstein_zeta(1, 2.0) - PI * PI / 3.0).abs() < 1e-12);
        assert!((epstein_zeta(1, 0.0) + 1.0).abs() < 1e-12);
        assert!((epstein_zeta(1, -1.0) + 1.0 / 6.0).abs() < 1e-12);
        // 2 ζ(4) = π⁴ / 45
        assert!((epstein_zeta(1, 4.0) - PI.powi(4) / 45.0).abs() < 1e-12);
    }

    #[test]
    fn epstein_two_dimensional_factorization() {
        // Z_2(σ) = 4 ζ(σ/2) β(σ/2); at σ = 3: 4 ζ(1.5) β(1.5).
        let expected = 4.0 * 2.612_375_348_685_488 * 0.864_502_653_461_202;
        assert!((epstein_zeta(2, 3.0) / expected - 1.0).abs() < 1e-10);
        assert!((epstein_zeta(2, 0.0) + 1.0).abs() < 1e-12);
    }

    #[test]
    fn epstein_three_dimensional_brute_force() {
        let sigma = 10.0;
        let mut direct = 0.0;
        for i in -40i64..=40 {
            for j in -40i64..=40 {
                for k in -40i64..=40 {
                    let r2 = (i * i + j * j + k * k) as f64;
                    if r2 > 0.0 {
                        direct += r2.powf(-sigma / 2.0);
                    }
                }
            }
        }
        assert!((epstein_zeta(3, sigma) / direct - 1.0).abs() < 1e-9);
        assert!((epstein_zeta(3, 0.0) + 1.0).abs() < 1e-12);
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(10);
        let integral: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(18)).sum();
        assert!((integral - 2.0 / 19.0).abs() < 1e-14);
    }

    #[test]
    fn cube_exterior_matches_one_dimensional_closed_form() {
        let s = 0.3;
        let v = cube_exterior_integral(1, s, 2.0);
        assert!((v - 2.0 * 2f64.powf(-2.0 * s) / (2.0 * s)).abs() < 1e-14);
        // N = 2: compare with polar integration over the exterior of a large disc
        // plus the corner region, via crude Monte Carlo-free brute force.
        let s = 0.5;
        let r = 1.0;
        let h = 0.01;
        let mut direct = 0.0;
        let n = (30.0 / h) as i64;
        for i in -n..n {
            for j in -n..n {
                let (x, y) = ((i as f64 + 0.5) * h, (j as f64 + 0.5) * h);
                if x.abs().max(y.abs()) > r {
                    direct += (x * x + y * y).powf(-(2.0 + 2.0 * s) / 2.0) * h * h;
                }
            }
        }
        // tail beyond |w|_∞ = 30: add the exact cube formula scaled
        let tail = cube_exterior_integral(2, s, 30.0);
        let v = cube_exterior_integral(2, s, r);
        assert!(((direct + tail) / v - 1.0).abs() < 1e-3);
    }

    #[test]
    fn hls_constant_one_dimensional() {
        let mu = 0.5;
        let expected = PI.powf(0.25) * gamma(0.25) / gamma(0.75) * PI.sqrt().powf(-0.5);
        assert!((hls_sharp_constant(1, mu) - expected).abs() < 1e-12);
    }
}
