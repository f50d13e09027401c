//! Complex Lambert W on arbitrary branches, and the characteristic roots of
//! the scalar delay equation x'(t) = a x(t) + b x(t - 1).
//!
//! W_k(z) solves w e^w = z. Evaluation is Halley's iteration seeded from the
//! branch logarithm w0 = L_k - ln L_k with L_k = Ln z + 2 pi i k, switched
//! to series seeds near z = 0 (branch 0) and near the branch point z = -1/e.

use num_complex::Complex64;

use crate::error::{Error, Result};

const MAX_ITER: usize = 64;
const TOL: f64 = 1e-13;

/// W on branch `k`: the root of w e^w = z picked by the branch cut
/// convention of the complex logarithm.
pub fn lambert_w(z: Complex64, branch: i32) -> Result<Complex64> {
    if z.norm() == 0.0 {
        return if branch == 0 {
            Ok(Complex64::new(0.0, 0.0))
        } else {
            // All other branches diverge to -infinity at z = 0.
            Err(Error::LambertNoConvergence(format!(
                "branch {branch} has no finite value at z = 0"
            )))
        };
    }
    let mut w = seed(z, branch);
    for _ in 0..MAX_ITER {
        let ew = w.exp();
        let f = w * ew - z;
        // Halley step: f' = e^w (w + 1), f'' = e^w (w + 2).
        let denom = ew * (w + 1.0) - (w + 2.0) * f / (2.0 * (w + 1.0));
        let step = f / denom;
        let next = w - step;
        if !next.re.is_finite() || !next.im.is_finite() {
            return Err(Error::LambertNoConvergence(format!("z = {z}, branch {branch}")));
        }
        if step.norm() <= TOL * (1.0 + next.norm()) {
            let residual = (next * next.exp() - z).norm();
            if residual <= 1e-10 * (1.0 + z.norm()) {
                return Ok(next);
            }
        }
        w = next;
    }
    Err(Error::LambertNoConvergence(format!(
        "z = {z}, branch {branch}"
    )))
}

fn seed(z: Complex64, branch: i32) -> Complex64 {
    let e_inv = (-1.0f64).exp();
    if branch == 0 && z.norm() < 0.3 {
        // Series about the origin on the principal branch.
        return z * (1.0 - z);
    }
    if (branch == 0 || branch == -1) && (z + e_inv).norm() < 0.2 {
        // Puiseux expansion about the branch point z = -1/e.
        let p = (2.0 * (std::f64::consts::E * z + 1.0)).sqrt();
        let p = if branch == 0 { p } else { -p };
        return -1.0 + p - p * p / 3.0;
    }
    let l = z.ln() + Complex64::new(0.0, 2.0 * std::f64::consts::PI * branch as f64);
    if l.norm() < 1e-6 {
        l
    } else {
        l - l.ln()
    }
}

/// Characteristic roots of x' = a x(t) + b x(t - 1): s = a + W_k(b e^{-a}),
/// ordered by branch 0, 1, -1, 2, -2, ...
///
/// When b e^{-a} = -1/e the root on the boundary branches is a double root
/// and the formula breaks down; that input is rejected.
pub fn lambert_characteristic_roots(a: f64, b: f64, n_branches: usize) -> Result<Vec<Complex64>> {
    if b == 0.0 {
        return Ok(vec![Complex64::new(a, 0.0)]);
    }
    let arg = Complex64::new(b * (-a).exp(), 0.0);
    if (arg.re + (-1.0f64).exp()).abs() < 1e-12 {
        return Err(Error::LambertBranchPoint);
    }
    let mut roots = Vec::with_capacity(n_branches);
    let mut branches = vec![0i32];
    for k in 1..=(n_branches as i32) {
        branches.push(k);
        branches.push(-k);
    }
    for &k in branches.iter().take(n_branches) {
        let s = a + lambert_w(arg, k)?;
        let residual = (s - a - b * (-s).exp()).norm();
        if residual >= 1e-10 {
            return Err(Error::LambertNoConvergence(format!(
                "root residual {residual:e} on branch {k}"
            )));
        }
        roots.push(s);
    }
    Ok(roots)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn omega_constant() {
        let w = lambert_w(Complex64::new(1.0, 0.0), 0).unwrap();
        assert!((w.re - 0.567_143_290_409_783_8).abs() < 1e-12);
        assert!(w.im.abs() < 1e-12);
    }

    #[test]
    fn defining_equation_on_many_branches() {
        for &z in &[
            Complex64::new(2.5, 0.0),
            Complex64::new(-0.2, 0.3),
            Complex64::new(0.01, -0.04),
            Complex64::new(-10.0, 1.0),
        ] {
            for k in [-3, -1, 0, 1, 3] {
                let w = lambert_w(z, k).unwrap();
                assert!((w * w.exp() - z).norm() < 1e-10, "z={z} k={k}");
            }
        }
    }

    #[test]
    fn real_negative_branch() {
        // W_{-1}(-0.1) is the smaller real root of w e^w = -0.1.
        let w = lambert_w(Complex64::new(-0.1, 0.0), -1).unwrap();
        assert!(w.re < -1.0 && w.im.abs() < 1e-10);
        assert!((w.re * w.re.exp() + 0.1).abs() < 1e-10);
    }

    #[test]
    fn zero_b_gives_the_plain_exponential_rate() {
        let roots = lambert_characteristic_roots(-0.25, 0.0, 5).unwrap();
        assert_eq!(roots, vec![Complex64::new(-0.25, 0.0)]);
    }

    #[test]
    fn characteristic_roots_satisfy_the_equation() {
        let roots = lambert_characteristic_roots(-0.02, 0.01, 7).unwrap();
        assert_eq!(roots.len(), 7);
        for s in &roots {
            assert!((s - (-0.02) - 0.01 * (-s).exp()).norm() < 1e-10);
        }
        // Branch 0 is the rightmost root.
        for s in roots.iter().skip(1) {
            assert!(s.re <= roots[0].re + 1e-12);
        }
    }

    #[test]
    fn branch_point_rejected() {
        // Pick b e^{-a} = -1/e with a = 0.
        let b = -(-1.0f64).exp();
        assert!(matches!(
            lambert_characteristic_roots(0.0, b, 3),
            Err(Error::LambertBranchPoint)
        ));
    }
}
