//! Nested forward-mode dual numbers in three variables.
//!
//! `Dual3<f64>` carries a value and gradient, `Dual3<Dual3<f64>>` adds the
//! Hessian, and so on. Test functions are written once, generically over
//! [`Scalar`], and every derivative the checkers need is exact to rounding.

use std::ops::{Add, Div, Mul, Neg, Sub};

pub trait Scalar:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn cst(v: f64) -> Self;
    fn primal(&self) -> f64;
    fn exp(self) -> Self;
    fn sqrt(self) -> Self;
    fn powf(self, p: f64) -> Self;

    fn scale(self, k: f64) -> Self {
        self * Self::cst(k)
    }
}

impl Scalar for f64 {
    fn cst(v: f64) -> Self {
        v
    }
    fn primal(&self) -> f64 {
        *self
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn powf(self, p: f64) -> Self {
        f64::powf(self, p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dual3<T> {
    pub v: T,
    pub d: [T; 3],
}

impl<T: Scalar> Dual3<T> {
    pub fn constant(v: T) -> Self {
        Self {
            v,
            d: [T::cst(0.0); 3],
        }
    }

    /// The `k`-th coordinate variable with value `v`.
    pub fn variable(v: T, k: usize) -> Self {
        let mut d = [T::cst(0.0); 3];
        d[k] = T::cst(1.0);
        Self { v, d }
    }

    fn chain(self, f: T, df: T) -> Self {
        Self {
            v: f,
            d: [self.d[0] * df, self.d[1] * df, self.d[2] * df],
        }
    }
}

impl<T: Scalar> Add for Dual3<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self {
            v: self.v + o.v,
            d: [self.d[0] + o.d[0], self.d[1] + o.d[1], self.d[2] + o.d[2]],
        }
    }
}

impl<T: Scalar> Sub for Dual3<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self {
            v: self.v - o.v,
            d: [self.d[0] - o.d[0], self.d[1] - o.d[1], self.d[2] - o.d[2]],
        }
    }
}

impl<T: Scalar> Mul for Dual3<T> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Self {
            v: self.v * o.v,
            d: [
                self.d[0] * o.v + self.v * o.d[0],
                self.d[1] * o.v + self.v * o.d[1],
                self.d[2] * o.v + self.v * o.d[2],
            ],
        }
    }
}

impl<T: Scalar> Div for Dual3<T> {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        let inv = T::cst(1.0) / o.v;
        let q = self.v * inv;
        Self {
            v: q,
            d: [
                (self.d[0] - q * o.d[0]) * inv,
                (self.d[1] - q * o.d[1]) * inv,
                (self.d[2] - q * o.d[2]) * inv,
            ],
        }
    }
}

impl<T: Scalar> Neg for Dual3<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Self {
            v: -self.v,
            d: [-self.d[0], -self.d[1], -self.d[2]],
        }
    }
}

impl<T: Scalar> Scalar for Dual3<T> {
    fn cst(v: f64) -> Self {
        Self::constant(T::cst(v))
    }
    fn primal(&self) -> f64 {
        self.v.primal()
    }
    fn exp(self) -> Self {
        let e = self.v.exp();
        self.chain(e, e)
    }
    fn sqrt(self) -> Self {
        let s = self.v.sqrt();
        self.chain(s, T::cst(0.5) / s)
    }
    fn powf(self, p: f64) -> Self {
        let f = self.v.powf(p);
        let df = self.v.powf(p - 1.0).scale(p);
        self.chain(f, df)
    }
}

/// Scalar functions of a point in `ℝ³`, evaluable on any [`Scalar`].
pub trait TestFunction: Sync {
    fn eval<S: Scalar>(&self, x: [S; 3]) -> S;

    /// Whether the function is invariant under rotation about the `x₃` axis.
    fn axisymmetric(&self) -> bool {
        true
    }

    /// Highest Fourier mode in the azimuth `θ`, when known.
    fn azimuthal_order(&self) -> Option<u32> {
        self.axisymmetric().then_some(0)
    }

    /// A box in `(r, φ)` outside of which the function vanishes, if known.
    fn support(&self) -> Option<SupportBox> {
        None
    }
}

/// `[r_lo, r_hi] × [phi_lo, phi_hi]` in spherical coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupportBox {
    pub r_lo: f64,
    pub r_hi: f64,
    pub phi_lo: f64,
    pub phi_hi: f64,
}

impl<F: TestFunction> TestFunction for &F {
    fn eval<S: Scalar>(&self, x: [S; 3]) -> S {
        (**self).eval(x)
    }
    fn axisymmetric(&self) -> bool {
        (**self).axisymmetric()
    }
    fn azimuthal_order(&self) -> Option<u32> {
        (**self).azimuthal_order()
    }
    fn support(&self) -> Option<SupportBox> {
        (**self).support()
    }
}

/// Value and gradient of `f` at a point whose coordinates are themselves scalars.
pub fn value_and_gradient<S: Scalar, F: TestFunction>(f: &F, x: [S; 3]) -> (S, [S; 3]) {
    let seeded = [
        Dual3::variable(x[0], 0),
        Dual3::variable(x[1], 1),
        Dual3::variable(x[2], 2),
    ];
    let out = f.eval(seeded);
    (out.v, out.d)
}

/// Exact value, gradient and Hessian at a real point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet2 {
    pub value: f64,
    pub gradient: [f64; 3],
    pub hessian: [[f64; 3]; 3],
}

impl Jet2 {
    pub fn gradient_norm(&self) -> f64 {
        self.gradient.iter().map(|g| g * g).sum::<f64>().sqrt()
    }

    pub fn hessian_norm(&self) -> f64 {
        self.hessian
            .iter()
            .flat_map(|row| row.iter())
            .map(|h| h * h)
            .sum::<f64>()
            .sqrt()
    }
}

pub fn second_order<F: TestFunction>(f: &F, x: [f64; 3]) -> Jet2 {
    let inner = [
        Dual3::variable(x[0], 0),
        Dual3::variable(x[1], 1),
        Dual3::variable(x[2], 2),
    ];
    let (v, g) = value_and_gradient(f, inner);
    let mut hessian = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            hessian[i][j] = g[i].d[j];
        }
    }
    Jet2 {
        value: v.v,
        gradient: [g[0].v, g[1].v, g[2].v],
        hessian,
    }
}

pub fn radius<S: Scalar>(x: [S; 3]) -> S {
    (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt()
}

/// Trivariate polynomial `Σ c·x₁^a x₂^b x₃^c`.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    pub terms: Vec<(f64, [u32; 3])>,
}

impl Polynomial {
    pub fn new(terms: Vec<(f64, [u32; 3])>) -> Self {
        Self { terms }
    }

    /// All monomials of total degree at most `degree`, with coefficients drawn from `coeff`.
    pub fn dense(degree: u32, mut coeff: impl FnMut() -> f64) -> Self {
        let mut terms = Vec::new();
        for a in 0..=degree {
            for b in 0..=(degree - a) {
                for c in 0..=(degree - a - b) {
                    terms.push((coeff(), [a, b, c]));
                }
            }
        }
        Self { terms }
    }
}

fn powi<S: Scalar>(x: S, n: u32) -> S {
    let mut acc = S::cst(1.0);
    for _ in 0..n {
        acc = acc * x;
    }
    acc
}

impl TestFunction for Polynomial {
    fn eval<S: Scalar>(&self, x: [S; 3]) -> S {
        let mut acc = S::cst(0.0);
        for &(c, [a, b, e]) in &self.terms {
            acc = acc + (powi(x[0], a) * powi(x[1], b) * powi(x[2], e)).scale(c);
        }
        acc
    }

    fn axisymmetric(&self) -> bool {
        false
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Sample;
    impl TestFunction for Sample {
        fn eval<S: Scalar>(&self, x: [S; 3]) -> S {
            (x[0] * x[1]).exp() + x[2].powf(2.5) / (S::cst(1.0) + x[0] * x[0]).sqrt()
        }
    }

    #[test]
    fn gradient_and_hessian_match_differences() {
        let x = [0.3, -0.7, 1.1];
        let jet = second_order(&Sample, x);
        let f = |p: [f64; 3]| Sample.eval(p);
        let h = 1e-5;
        for i in 0..3 {
            let mut xp = x;
            let mut xm = x;
            xp[i] += h;
            xm[i] -= h;
            let fd = (f(xp) - f(xm)) / (2.0 * h);
            assert!((fd - jet.gradient[i]).abs() < 1e-8);
            let gp = second_order(&Sample, xp).gradient;
            let gm = second_order(&Sample, xm).gradient;
            for j in 0..3 {
                let fd2 = (gp[j] - gm[j]) / (2.0 * h);
                assert!((fd2 - jet.hessian[j][i]).abs() < 1e-7);
            }
        }
        for i in 0..3 {
            for j in 0..3 {
                assert!((jet.hessian[i][j] - jet.hessian[j][i]).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn polynomial_derivatives_are_exact() {
        // p = 2 x₁² x₃ - x₂³
        let p = Polynomial::new(vec![(2.0, [2, 0, 1]), (-1.0, [0, 3, 0])]);
        let x = [1.5, -2.0, 0.5];
        let jet = second_order(&p, x);
        assert_eq!(jet.value, 2.0 * 2.25 * 0.5 + 8.0);
        assert_eq!(jet.gradient, [4.0 * 1.5 * 0.5, -3.0 * 4.0, 2.0 * 2.25]);
        assert_eq!(jet.hessian[0][2], 4.0 * 1.5);
        assert_eq!(jet.hessian[1][1], -6.0 * -2.0);
    }
}
