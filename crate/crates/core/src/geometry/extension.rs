//! Higher-order reflection across the sphere `r = T` followed by a smooth cutoff.
//!
//! For `T < r` the extension is `η(r/T) Σ λ_j u(T + j(T - r))`, with weights
//! chosen so that the sum reproduces cubic polynomials in `r - T` and hence
//! matches three derivatives across `r = T`.

use super::autodiff::{Dual3, Scalar};
use crate::error::{Error, Result};

/// Ratio `r/T` beyond which the extension vanishes.
pub const CUTOFF_END: f64 = 9.0 / 8.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtensionCoefficients {
    pub lambda: [f64; 4],
}

impl ExtensionCoefficients {
    /// `Σ_j (-j)^k λ_j - 1` for `k = 0..3`.
    pub fn moment_residuals(&self) -> [f64; 4] {
        let mut out = [0.0; 4];
        for (k, res) in out.iter_mut().enumerate() {
            let s: f64 = self
                .lambda
                .iter()
                .enumerate()
                .map(|(j, l)| l * (-(j as f64 + 1.0)).powi(k as i32))
                .sum();
            *res = s - 1.0;
        }
        out
    }

    pub fn abs_sum(&self) -> f64 {
        self.lambda.iter().map(|l| l.abs()).sum()
    }
}

fn solve4(mut a: [[f64; 4]; 4], mut b: [f64; 4]) -> [f64; 4] {
    for col in 0..4 {
        let pivot = (col..4)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap_or(col);
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..4 {
            let f = a[row][col] / a[col][col];
            for k in col..4 {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 4];
    for row in (0..4).rev() {
        let s: f64 = (row + 1..4).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x
}

pub fn extension_coefficients() -> ExtensionCoefficients {
    let mut a = [[0.0; 4]; 4];
    for (k, row) in a.iter_mut().enumerate() {
        for (j, entry) in row.iter_mut().enumerate() {
            *entry = (-(j as f64 + 1.0)).powi(k as i32);
        }
    }
    ExtensionCoefficients {
        lambda: solve4(a, [1.0; 4]),
    }
}

fn psi<S: Scalar>(t: S) -> S {
    if t.primal() > 0.0 {
        (-(S::cst(1.0) / t)).exp()
    } else {
        S::cst(0.0)
    }
}

/// Smooth step: one for `s ≤ 1`, zero for `s ≥ 9/8`, infinitely differentiable.
pub fn cutoff<S: Scalar>(s: S) -> S {
    let p = s.primal();
    if p <= 1.0 {
        return S::cst(1.0);
    }
    if p >= CUTOFF_END {
        return S::cst(0.0);
    }
    let a = psi(S::cst(CUTOFF_END) - s);
    let b = psi(s - S::cst(1.0));
    a / (a + b)
}

/// Extension of a closed-form radial profile, evaluable on any scalar type.
pub fn extend_closed_form<S: Scalar, U: Fn(S) -> S>(
    coeffs: &ExtensionCoefficients,
    u: U,
    t: f64,
    r: S,
) -> S {
    let rp = r.primal();
    if rp <= t {
        return u(r);
    }
    if rp >= CUTOFF_END * t {
        return S::cst(0.0);
    }
    let tt = S::cst(t);
    let mut acc = S::cst(0.0);
    for (j, l) in coeffs.lambda.iter().enumerate() {
        let jf = j as f64 + 1.0;
        acc = acc + u(tt + (tt - r).scale(jf)).scale(*l);
    }
    cutoff(r / tt) * acc
}

pub type D3 = Dual3<Dual3<Dual3<f64>>>;

/// Value and first three derivatives of a univariate function at `x`.
pub fn taylor3(f: impl Fn(D3) -> D3, x: f64) -> [f64; 4] {
    let d1 = Dual3::variable(x, 0);
    let d2 = Dual3::variable(d1, 0);
    let d3 = Dual3::variable(d2, 0);
    let out = f(d3);
    [out.v.v.v, out.d[0].v.v, out.d[0].d[0].v, out.d[0].d[0].d[0]]
}

/// Largest jump among the first three derivatives of the extension across `r = T`.
///
/// The left side differentiates `u` at `T`; the right side differentiates the
/// reflected sum times the cutoff at `T`, where every derivative of the cutoff
/// vanishes, so this is the one-sided limit from outside.
pub fn derivative_jump<U>(coeffs: &ExtensionCoefficients, u: U, t: f64) -> f64
where
    U: Fn(D3) -> D3,
{
    let left = taylor3(&u, t);
    let right = taylor3(
        |r| {
            let tt = D3::cst(t);
            let mut acc = D3::cst(0.0);
            for (j, l) in coeffs.lambda.iter().enumerate() {
                acc = acc + u(tt + (tt - r).scale(j as f64 + 1.0)).scale(*l);
            }
            cutoff(r / tt) * acc
        },
        t,
    );
    (1..4)
        .map(|k| (left[k] - right[k]).abs())
        .fold(0.0, f64::max)
}

/// Radial samples of a function on `[r₀, T]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialSamples {
    nodes: Vec<f64>,
    values: Vec<f64>,
}

impl RadialSamples {
    pub fn new(nodes: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if nodes.len() != values.len() {
            return Err(Error::InvalidParams("nodes and values differ in length".into()));
        }
        if nodes.len() < 4 {
            return Err(Error::Resolution("at least four samples are needed".into()));
        }
        if nodes.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParams("sample nodes must increase".into()));
        }
        Ok(Self { nodes, values })
    }

    pub fn from_fn(r0: f64, t: f64, n: usize, u: impl Fn(f64) -> f64) -> Result<Self> {
        let nodes: Vec<f64> = (0..n)
            .map(|i| {
                if i + 1 == n {
                    t
                } else {
                    r0 + (t - r0) * i as f64 / (n - 1) as f64
                }
            })
            .collect();
        let values = nodes.iter().map(|&r| u(r)).collect();
        Self::new(nodes, values)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Local cubic Lagrange interpolation; exact at nodes and for cubics.
    pub fn interpolate(&self, r: f64) -> Result<f64> {
        let n = self.nodes.len();
        let (lo, hi) = (self.nodes[0], self.nodes[n - 1]);
        let slack = 1e-12 * hi.abs().max(1.0);
        if r < lo - slack || r > hi + slack {
            return Err(Error::Resolution(format!(
                "point {r} outside sampled range [{lo}, {hi}]"
            )));
        }
        let idx = self.nodes.partition_point(|&x| x < r);
        if idx < n && self.nodes[idx] == r {
            return Ok(self.values[idx]);
        }
        let start = idx.saturating_sub(2).min(n - 4);
        let xs = &self.nodes[start..start + 4];
        let ys = &self.values[start..start + 4];
        let mut acc = 0.0;
        for i in 0..4 {
            let mut l = 1.0;
            for k in 0..4 {
                if k != i {
                    l *= (r - xs[k]) / (xs[i] - xs[k]);
                }
            }
            acc += ys[i] * l;
        }
        Ok(acc)
    }
}

/// Extension of sampled data evaluated at arbitrary radii.
pub fn extend_at(
    coeffs: &ExtensionCoefficients,
    u: &RadialSamples,
    t: f64,
    targets: &[f64],
) -> Result<Vec<f64>> {
    let last = *u.nodes.last().expect("samples are nonempty");
    if (last - t).abs() > 1e-12 * t.max(1.0) {
        return Err(Error::Resolution(format!(
            "samples end at {last} rather than at T = {t}"
        )));
    }
    let first = u.nodes[0];
    let reach = t - (coeffs.lambda.len() as f64) * (CUTOFF_END - 1.0) * t;
    if reach < first - 1e-12 {
        return Err(Error::Resolution(format!(
            "reflected points reach {reach}, below the first sample {first}"
        )));
    }
    targets
        .iter()
        .map(|&r| {
            if r <= t {
                u.interpolate(r)
            } else if r >= CUTOFF_END * t {
                Ok(0.0)
            } else {
                let mut acc = 0.0;
                for (j, l) in coeffs.lambda.iter().enumerate() {
                    acc += l * u.interpolate(t + (j as f64 + 1.0) * (t - r))?;
                }
                Ok(cutoff(r / t) * acc)
            }
        })
        .collect()
}

/// Extended samples on `[r₀, 9T/8]`: the input nodes followed by `extra` uniform
/// nodes ending exactly at `9T/8`.
pub fn extend(
    coeffs: &ExtensionCoefficients,
    u: &RadialSamples,
    t: f64,
    extra: usize,
) -> Result<RadialSamples> {
    let end = CUTOFF_END * t;
    let mut nodes = u.nodes.clone();
    nodes.extend((1..=extra).map(|i| t + (end - t) * i as f64 / extra as f64));
    let values = extend_at(coeffs, u, t, &nodes)?;
    RadialSamples::new(nodes, values)
}

/// `sup r^β |Eu| / sup r^β |u|` with both suprema over dense samples.
pub fn weighted_sup_ratio(
    coeffs: &ExtensionCoefficients,
    u: &RadialSamples,
    t: f64,
    beta: f64,
    dense: usize,
) -> Result<f64> {
    let r0 = u.nodes[0];
    let grid: Vec<f64> = (0..=dense)
        .map(|i| r0 + (CUTOFF_END * t - r0) * i as f64 / dense as f64)
        .collect();
    let eu = extend_at(coeffs, u, t, &grid)?;
    let mut num: f64 = 0.0;
    let mut den: f64 = 0.0;
    for (r, v) in grid.iter().zip(&eu) {
        num = num.max(r.powf(beta) * v.abs());
        if *r <= t {
            den = den.max(r.powf(beta) * v.abs());
        }
    }
    for (r, v) in u.nodes.iter().zip(&u.values) {
        den = den.max(r.powf(beta) * v.abs());
    }
    if den == 0.0 {
        return Err(Error::DegenerateInput("weighted sup of u vanishes".into()));
    }
    Ok(num / den)
}
