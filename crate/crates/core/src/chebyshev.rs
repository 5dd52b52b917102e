//! Chebyshev expansion of `exp(-i h A) ψ` for Hermitian `A` with known
//! spectral bounds.
//!
//! With `A = c + r Ã` and the spectrum of `Ã` in `[-1, 1]`,
//! `exp(-i h A) = e^{-i h c} Σ_k (2 - δ_k0) (-i)^k J_k(h r) T_k(Ã)`.
//! The series is cut once `|J_k|` drops below [`TRUNCATION`]; past `k > h r`
//! the Bessel coefficients decay faster than exponentially, so the truncated
//! propagator is unitary to that level. Only element-wise vector recurrences
//! are used, which keeps the result independent of component order.

use crate::spin::C64;

pub const TRUNCATION: f64 = 1e-16;

/// Bessel functions `J_0(x) .. J_kmax(x)` for `x ≥ 0` by Miller's backward
/// recurrence, normalized with `J_0 + 2 Σ J_{2k} = 1`.
pub fn bessel_j_sequence(x: f64, kmax: usize) -> Vec<f64> {
    assert!(x >= 0.0 && x.is_finite(), "bessel argument must be finite and non-negative");
    let mut out = vec![0.0; kmax + 1];
    if x == 0.0 {
        out[0] = 1.0;
        return out;
    }
    let start = {
        let base = kmax.max(x.ceil() as usize);
        let n = base + 20 + (10.0 * x.cbrt()) as usize + (x.sqrt() as usize);
        n + (n % 2)
    };
    let mut next = 0.0f64;
    let mut cur = 1e-300f64;
    let mut norm = 0.0f64;
    for k in (1..=start).rev() {
        if k <= kmax {
            out[k] = cur;
        }
        if k % 2 == 0 {
            norm += 2.0 * cur;
        }
        let prev = (2.0 * k as f64 / x) * cur - next;
        next = cur;
        cur = prev;
        if cur.abs() > 1e250 {
            // rescale everything accumulated so far
            let s = 1e-250;
            cur *= s;
            next *= s;
            norm *= s;
            out.iter_mut().for_each(|v| *v *= s);
        }
    }
    out[0] = cur;
    norm += cur;
    out.iter_mut().for_each(|v| *v /= norm);
    out
}

/// Number of Chebyshev terms and their Bessel weights for argument `x ≥ 0`.
pub fn coefficients(x: f64) -> Vec<f64> {
    let kmax = (x + 12.0 * x.cbrt() + 30.0).ceil() as usize;
    let mut j = bessel_j_sequence(x, kmax);
    let cut = (0..=kmax)
        .rev()
        .find(|&k| j[k].abs() >= TRUNCATION || (k as f64) <= x)
        .unwrap_or(0);
    j.truncate(cut + 2);
    j
}

/// Scratch vectors for [`expmv`].
pub struct ChebyshevWorkspace {
    prev: Vec<C64>,
    cur: Vec<C64>,
    next: Vec<C64>,
}

impl ChebyshevWorkspace {
    pub fn new(dim: usize) -> Self {
        let zero = vec![C64::new(0.0, 0.0); dim];
        Self {
            prev: zero.clone(),
            cur: zero.clone(),
            next: zero,
        }
    }
}

/// Writes `exp(-i h A) psi` into `out`, where `apply(v, w)` writes `A v`
/// into `w` and the spectrum of `A` lies in `bounds`. Returns the number of
/// operator applications.
pub fn expmv(
    apply: impl Fn(&[C64], &mut [C64]),
    bounds: (f64, f64),
    h: f64,
    psi: &[C64],
    out: &mut [C64],
    ws: &mut ChebyshevWorkspace,
) -> usize {
    let (lo, hi) = bounds;
    let center = 0.5 * (lo + hi);
    let radius = 0.5 * (hi - lo);
    let phase = C64::from_polar(1.0, -h * center);
    let x = h * radius;
    if radius <= 0.0 || x == 0.0 {
        for (o, p) in out.iter_mut().zip(psi) {
            *o = phase * p;
        }
        return 0;
    }
    let j = coefficients(x.abs());
    // J_k(-x) = (-1)^k J_k(x); fold the sign into the (-i)^k factor
    let step_factor = if x >= 0.0 { C64::new(0.0, -1.0) } else { C64::new(0.0, 1.0) };
    let inv_radius = radius.recip();

    let ChebyshevWorkspace { prev, cur, next } = ws;
    prev.copy_from_slice(psi);
    for (o, p) in out.iter_mut().zip(psi.iter()) {
        *o = j[0] * p;
    }
    if j.len() == 1 {
        out.iter_mut().for_each(|o| *o *= phase);
        return 0;
    }
    // T_1(Ã) ψ
    apply(psi, cur);
    for (c, p) in cur.iter_mut().zip(psi) {
        *c = (*c - center * p) * inv_radius;
    }
    let mut weight = step_factor;
    for (o, c) in out.iter_mut().zip(cur.iter()) {
        *o += (2.0 * j[1]) * weight * c;
    }
    let mut applications = 1;
    for jk in &j[2..] {
        apply(cur, next);
        for ((n, c), p) in next.iter_mut().zip(cur.iter()).zip(prev.iter()) {
            *n = 2.0 * inv_radius * (*n - center * c) - p;
        }
        weight *= step_factor;
        let w = (2.0 * jk) * weight;
        for (o, n) in out.iter_mut().zip(next.iter()) {
            *o += w * n;
        }
        std::mem::swap(prev, cur);
        std::mem::swap(cur, next);
        applications += 1;
    }
    out.iter_mut().for_each(|o| *o *= phase);
    applications
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bessel_reference_values() {
        // reference values from standard tables
        let j = bessel_j_sequence(1.0, 5);
        assert!((j[0] - 0.765_197_686_557_966_6).abs() < 1e-15);
        assert!((j[1] - 0.440_050_585_744_933_5).abs() < 1e-15);
        let j = bessel_j_sequence(10.0, 5);
        assert!((j[0] + 0.245_935_764_451_348_3).abs() < 1e-14);
        assert!((j[5] + 0.234_061_528_186_793_6).abs() < 1e-14);
        let j = bessel_j_sequence(1e-8, 2);
        assert!((j[1] - 5e-9).abs() < 1e-20);
    }

    #[test]
    fn bessel_large_argument_identity() {
        // Σ J_k² over all integers is 1: J_0² + 2 Σ_{k≥1} J_k² = 1
        for x in [3.7, 42.0, 150.0] {
            let j = bessel_j_sequence(x, (x as usize) + 80);
            let s: f64 = j[0] * j[0] + 2.0 * j[1..].iter().map(|v| v * v).sum::<f64>();
            assert!((s - 1.0).abs() < 1e-12, "x = {x}: {s}");
        }
    }

    #[test]
    fn expmv_matches_two_level_rotation() {
        // A = a σ_x + b σ_z, exp(-i h A) = cos(h n) - i sin(h n) A / n
        let (a, b, h): (f64, f64, f64) = (1.3, -0.4, 2.7);
        let n = (a * a + b * b).sqrt();
        let apply = |v: &[C64], w: &mut [C64]| {
            w[0] = b * v[0] + a * v[1];
            w[1] = a * v[0] - b * v[1];
        };
        let psi = [C64::new(0.6, 0.0), C64::new(0.0, 0.8)];
        let mut out = [C64::new(0.0, 0.0); 2];
        let mut ws = ChebyshevWorkspace::new(2);
        for sign in [1.0, -1.0] {
            expmv(apply, (-n, n), sign * h, &psi, &mut out, &mut ws);
            let mut a_psi = [C64::new(0.0, 0.0); 2];
            apply(&psi, &mut a_psi);
            for k in 0..2 {
                let expect = (h * n).cos() * psi[k]
                    - C64::new(0.0, sign) * (h * n).sin() / n * a_psi[k];
                assert!((out[k] - expect).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn expmv_handles_loose_bounds_and_shift() {
        // diagonal operator, bounds wider than the spectrum and off-centre
        let diag = [3.0, 5.5, 4.2];
        let apply = |v: &[C64], w: &mut [C64]| {
            for k in 0..3 {
                w[k] = diag[k] * v[k];
            }
        };
        let psi = [C64::new(1.0, 0.0), C64::new(0.0, 1.0), C64::new(-0.5, 0.5)];
        let mut out = [C64::new(0.0, 0.0); 3];
        let mut ws = ChebyshevWorkspace::new(3);
        let h = 4.0;
        expmv(apply, (2.0, 9.0), h, &psi, &mut out, &mut ws);
        for k in 0..3 {
            let expect = C64::from_polar(1.0, -h * diag[k]) * psi[k];
            assert!((out[k] - expect).norm() < 1e-13);
        }
    }
}
