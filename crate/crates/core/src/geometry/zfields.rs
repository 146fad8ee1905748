//! Rotation fields tangent to spheres and their identities.
//!
//! `Z₁ = x₁∂₂ - x₂∂₁`, `Z₂ = x₂∂₃ - x₃∂₂`, `Z₃ = x₃∂₁ - x₁∂₃`. Each checker
//! differentiates closed-form test functions exactly and returns the absolute
//! residual of one identity at one point.

use super::autodiff::{radius, value_and_gradient, Scalar, SupportBox, TestFunction};
use crate::error::{Error, Result};

/// Field index in `{0, 1, 2}` for `Z₁, Z₂, Z₃`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ZIndex(usize);

impl ZIndex {
    pub const ALL: [ZIndex; 3] = [ZIndex(0), ZIndex(1), ZIndex(2)];

    pub fn new(k: usize) -> Result<Self> {
        if k < 3 {
            Ok(Self(k))
        } else {
            Err(Error::Domain(format!("Z-field index {k} outside 0..3")))
        }
    }

    pub fn get(self) -> usize {
        self.0
    }
}

/// `Z_k` applied to a function with gradient `g` at `x`.
pub fn apply_z<S: Scalar>(k: ZIndex, x: [S; 3], g: [S; 3]) -> S {
    match k.0 {
        0 => x[0] * g[1] - x[1] * g[0],
        1 => x[1] * g[2] - x[2] * g[1],
        _ => x[2] * g[0] - x[0] * g[2],
    }
}

/// `Z_k f` as a test function in its own right.
#[derive(Debug, Clone, Copy)]
pub struct ZField<F> {
    pub inner: F,
    pub k: ZIndex,
}

impl<F: TestFunction> TestFunction for ZField<F> {
    fn eval<S: Scalar>(&self, x: [S; 3]) -> S {
        let (_, g) = value_and_gradient(&self.inner, x);
        apply_z(self.k, x, g)
    }
    fn axisymmetric(&self) -> bool {
        // Z₁ annihilates axisymmetric functions; Z₂, Z₃ introduce θ dependence.
        self.k.0 == 0 && self.inner.axisymmetric()
    }
    fn support(&self) -> Option<SupportBox> {
        self.inner.support()
    }
}

/// `∂_r f = (x/r)·∇f`.
#[derive(Debug, Clone, Copy)]
pub struct RadialDerivative<F>(pub F);

impl<F: TestFunction> TestFunction for RadialDerivative<F> {
    fn eval<S: Scalar>(&self, x: [S; 3]) -> S {
        let (_, g) = value_and_gradient(&self.0, x);
        (x[0] * g[0] + x[1] * g[1] + x[2] * g[2]) / radius(x)
    }
    fn axisymmetric(&self) -> bool {
        self.0.axisymmetric()
    }
    fn support(&self) -> Option<SupportBox> {
        self.0.support()
    }
}

/// `f / r`.
#[derive(Debug, Clone, Copy)]
pub struct OverRadius<F>(pub F);

impl<F: TestFunction> TestFunction for OverRadius<F> {
    fn eval<S: Scalar>(&self, x: [S; 3]) -> S {
        self.0.eval(x) / radius(x)
    }
    fn axisymmetric(&self) -> bool {
        self.0.axisymmetric()
    }
    fn support(&self) -> Option<SupportBox> {
        self.0.support()
    }
}

/// Radial coordinate as a test function.
#[derive(Debug, Clone, Copy)]
pub struct RadiusFn;

impl TestFunction for RadiusFn {
    fn eval<S: Scalar>(&self, x: [S; 3]) -> S {
        radius(x)
    }
}

fn check_point(x: [f64; 3]) -> Result<f64> {
    let r = radius(x);
    if r > 0.0 && r.is_finite() {
        Ok(r)
    } else {
        Err(Error::Domain("Z-field identities are undefined at the origin".into()))
    }
}

/// `|∇f·∇g - (∂_r f ∂_r g + r⁻² Σ Z_i f Z_i g)|`.
pub fn z_field_identity_check<F: TestFunction, G: TestFunction>(
    f: &F,
    g: &G,
    x: [f64; 3],
) -> Result<f64> {
    let r = check_point(x)?;
    let (_, gf) = value_and_gradient(f, x);
    let (_, gg) = value_and_gradient(g, x);
    let lhs: f64 = (0..3).map(|i| gf[i] * gg[i]).sum();
    let drf = (0..3).map(|i| x[i] * gf[i]).sum::<f64>() / r;
    let drg = (0..3).map(|i| x[i] * gg[i]).sum::<f64>() / r;
    let tangential: f64 = ZIndex::ALL
        .iter()
        .map(|&k| apply_z(k, x, gf) * apply_z(k, x, gg))
        .sum();
    Ok((lhs - (drf * drg + tangential / (r * r))).abs())
}

/// Levi-Civita symbol on field indices.
fn levi_civita(i: usize, j: usize, k: usize) -> f64 {
    match (i, j, k) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
        _ => 0.0,
    }
}

/// `|[Z_i, Z_j] f + ε_ijk Z_k f|` with `k` the remaining index.
///
/// With the fields above and `[A, B] = AB - BA`, the cyclic brackets are
/// `[Z₁, Z₂] = -Z₃` and so on; the residual vanishes exactly when the fields
/// close into the rotation algebra.
pub fn commutator_check<F: TestFunction>(i: ZIndex, j: ZIndex, f: &F, x: [f64; 3]) -> Result<f64> {
    check_point(x)?;
    let zj = ZField { inner: f, k: j };
    let zi = ZField { inner: f, k: i };
    let (_, g_zj) = value_and_gradient(&zj, x);
    let (_, g_zi) = value_and_gradient(&zi, x);
    let bracket = apply_z(i, x, g_zj) - apply_z(j, x, g_zi);
    if i == j {
        return Ok(bracket.abs());
    }
    let k = 3 - i.0 - j.0;
    let (_, gf) = value_and_gradient(f, x);
    let zk = apply_z(ZIndex(k), x, gf);
    Ok((bracket + levi_civita(i.0, j.0, k) * zk).abs())
}

/// `|Z_k r|`, which vanishes since the fields are tangent to spheres.
pub fn z_annihilates_radius(k: ZIndex, x: [f64; 3]) -> Result<f64> {
    check_point(x)?;
    Ok(ZField { inner: RadiusFn, k }.eval(x).abs())
}

/// `|Z_k ∂_r f - ∂_r Z_k f|`.
pub fn radial_commutator_check<F: TestFunction>(k: ZIndex, f: &F, x: [f64; 3]) -> Result<f64> {
    check_point(x)?;
    let a = ZField {
        inner: RadialDerivative(f),
        k,
    }
    .eval(x);
    let b = RadialDerivative(ZField { inner: f, k }).eval(x);
    Ok((a - b).abs())
}

/// `r|∇v| - |Zv|` with `|Zv|² = Σ (Z_i v)²`; nonnegative up to rounding.
pub fn z_bound_margin<F: TestFunction>(v: &F, x: [f64; 3]) -> Result<f64> {
    let r = check_point(x)?;
    let (_, g) = value_and_gradient(v, x);
    let grad = g.iter().map(|a| a * a).sum::<f64>().sqrt();
    let z = ZIndex::ALL
        .iter()
        .map(|&k| apply_z(k, x, g).powi(2))
        .sum::<f64>()
        .sqrt();
    Ok(r * grad - z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::autodiff::Polynomial;

    fn z(k: usize) -> ZIndex {
        ZIndex::new(k).unwrap()
    }

    #[test]
    fn radial_functions_have_no_tangential_part() {
        let x = [0.3, 0.4, 1.2];
        assert!(z_field_identity_check(&RadiusFn, &RadiusFn, x).unwrap() < 1e-15);
        for k in 0..3 {
            assert!(z_annihilates_radius(z(k), x).unwrap() < 1e-15);
        }
    }

    #[test]
    fn coordinate_pair_identity() {
        let x1 = Polynomial::new(vec![(1.0, [1, 0, 0])]);
        let x2 = Polynomial::new(vec![(1.0, [0, 1, 0])]);
        for p in [[0.1, 0.2, 0.9], [-1.0, 2.0, 3.0], [5.0, -0.5, 0.01]] {
            assert!(z_field_identity_check(&x1, &x2, p).unwrap() < 1e-12);
        }
    }

    #[test]
    fn bracket_of_monomial() {
        let f = Polynomial::new(vec![(1.0, [1, 1, 1])]);
        let x = [0.7, -1.3, 2.1];
        for (i, j) in [(0, 1), (1, 2), (2, 0), (1, 0)] {
            assert!(commutator_check(z(i), z(j), &f, x).unwrap() < 1e-12);
        }
        assert_eq!(commutator_check(z(1), z(1), &f, x).unwrap(), 0.0);
    }

    #[test]
    fn printed_sign_convention_differs() {
        // [Z₁, Z₂]x₁ = -x₃ while Z₃x₁ = x₃.
        let f = Polynomial::new(vec![(1.0, [1, 0, 0])]);
        let x = [0.2, 0.5, 1.5];
        let zj = ZField { inner: &f, k: z(1) };
        let zi = ZField { inner: &f, k: z(0) };
        let (_, a) = value_and_gradient(&zj, x);
        let (_, b) = value_and_gradient(&zi, x);
        let bracket = apply_z(z(0), x, a) - apply_z(z(1), x, b);
        assert!((bracket + 1.5).abs() < 1e-15);
    }

    #[test]
    fn constant_functions_commute() {
        let c = Polynomial::new(vec![(3.0, [0, 0, 0])]);
        assert_eq!(commutator_check(z(0), z(2), &c, [1.0, 1.0, 1.0]).unwrap(), 0.0);
    }

    #[test]
    fn origin_is_rejected() {
        let c = Polynomial::new(vec![(1.0, [1, 0, 0])]);
        assert!(matches!(
            z_field_identity_check(&c, &c, [0.0; 3]),
            Err(Error::Domain(_))
        ));
        assert!(commutator_check(z(0), z(1), &c, [0.0; 3]).is_err());
    }
}
