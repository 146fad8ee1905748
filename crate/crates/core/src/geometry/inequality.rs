//! Weighted interpolation inequalities on the cone and a numerical harness for them.
//!
//! Each inequality bounds `|r^τ ∇u|_{L⁴}` by `|r^α ∇²u|_{L²}^{1/2} |r^β u|_{L^∞}^{1/2}`.
//! The harness evaluates the ratio of the two sides for closed-form test
//! functions; a family-wise maximum that stays put under grid refinement is the
//! numerical stand-in for a constant independent of the support radius.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::autodiff::{radius, second_order, Scalar, SupportBox, TestFunction};
use crate::error::{Error, Result};
use crate::quadrature::GaussLegendre;

/// Parameters of the general weighted interpolation inequality in `ℝⁿ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CnkParams {
    pub s: f64,
    pub tau: f64,
    pub p: f64,
    pub alpha: f64,
    pub beta: f64,
    /// `f64::INFINITY` stands for the sup norm.
    pub q: f64,
    pub a: f64,
    pub j: u32,
    pub m: u32,
    pub n: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CnkCondition {
    Exponents,
    InterpolationRange,
    Integrability,
    SobolevInteger,
    Scaling,
    WeightOrdering,
    BalanceCase,
    EndpointCase,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CnkVerdict {
    pub violations: Vec<CnkCondition>,
}

impl CnkVerdict {
    pub fn admissible(&self) -> bool {
        self.violations.is_empty()
    }
}

const CNK_TOL: f64 = 1e-12;

fn recip(x: f64) -> f64 {
    if x.is_infinite() {
        0.0
    } else {
        1.0 / x
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= CNK_TOL * a.abs().max(b.abs()).max(1.0)
}

/// Checks every hypothesis under which the weighted inequality holds.
pub fn cnk_conditions_check(c: &CnkParams) -> CnkVerdict {
    let mut v = Vec::new();
    let (j, m, n) = (c.j as f64, c.m as f64, c.n as f64);
    if !(c.p >= 1.0 && c.q >= 1.0 && c.s > 0.0) || c.m == 0 {
        v.push(CnkCondition::Exponents);
    }
    if !(j / m <= c.a + CNK_TOL && c.a <= 1.0 + CNK_TOL) {
        v.push(CnkCondition::InterpolationRange);
    }
    if !(1.0 / c.s + c.tau / n > 0.0
        && recip(c.p) + c.alpha / n > 0.0
        && recip(c.q) + c.beta / n > 0.0)
    {
        v.push(CnkCondition::Integrability);
    }
    let sob = m - j - n * recip(c.p);
    if sob > -CNK_TOL && (sob - sob.round()).abs() <= CNK_TOL {
        v.push(CnkCondition::SobolevInteger);
    }
    let lhs = 1.0 / c.s + (c.tau - j) / n;
    let rhs = c.a * (recip(c.p) + (c.alpha - m) / n) + (1.0 - c.a) * (recip(c.q) + c.beta / n);
    if !close(lhs, rhs) {
        v.push(CnkCondition::Scaling);
    }
    let mix = c.a * c.alpha + (1.0 - c.a) * c.beta;
    if c.tau > mix + CNK_TOL * mix.abs().max(1.0) {
        v.push(CnkCondition::WeightOrdering);
    }
    if close(recip(c.q) + c.beta / n, recip(c.p) + (c.alpha - m) / n) {
        let bound = c.a * (c.alpha - m) + (1.0 - c.a) * c.beta + j;
        if bound > c.tau + CNK_TOL * bound.abs().max(1.0) {
            v.push(CnkCondition::BalanceCase);
        }
    }
    if close(c.a, j / m) && !close(c.tau, mix) {
        v.push(CnkCondition::EndpointCase);
    }
    CnkVerdict { violations: v }
}

/// The four weighted inequalities used in the energy estimates, named by the
/// weight on the sup-norm factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InequalityId {
    /// `β = σ`.
    SigmaWeight,
    /// `β = γ`.
    GammaWeight,
    /// `β = 2(γ - 1)`.
    TwiceGammaMinusTwo,
    /// `β = 2γ - 1`.
    TwiceGammaMinusOne,
}

impl InequalityId {
    pub const ALL: [InequalityId; 4] = [
        InequalityId::SigmaWeight,
        InequalityId::GammaWeight,
        InequalityId::TwiceGammaMinusTwo,
        InequalityId::TwiceGammaMinusOne,
    ];

    pub fn label(self) -> &'static str {
        match self {
            InequalityId::SigmaWeight => "beta_sigma",
            InequalityId::GammaWeight => "beta_gamma",
            InequalityId::TwiceGammaMinusTwo => "beta_2gamma_minus_2",
            InequalityId::TwiceGammaMinusOne => "beta_2gamma_minus_1",
        }
    }

    pub fn from_label(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|i| i.label() == s)
    }

    /// `(τ, α, β)` for the given exponents.
    pub fn weights(self, w: &WeightParams) -> (f64, f64, f64) {
        let (g, s, d) = (w.gamma, w.sigma, w.delta);
        match self {
            InequalityId::SigmaWeight => ((2.0 * g + 2.0 * s - 1.0) / 4.0, (2.0 * g - 1.0) / 2.0, s),
            InequalityId::GammaWeight => ((4.0 * g + 1.0) / 4.0, (2.0 * g + 1.0) / 2.0, g),
            InequalityId::TwiceGammaMinusTwo => (
                (8.0 * g - 7.0 - d) / 4.0,
                (4.0 * g - 3.0 - d) / 2.0,
                2.0 * (g - 1.0),
            ),
            InequalityId::TwiceGammaMinusOne => (
                (8.0 * g - 3.0 - d) / 4.0,
                (4.0 * g - 1.0 - d) / 2.0,
                2.0 * g - 1.0,
            ),
        }
    }

    /// Full parameter set with `s = 4, p = 2, q = ∞, a = 1/2, j = 1, m = 2, n = 3`.
    pub fn cnk_params(self, w: &WeightParams) -> CnkParams {
        let (tau, alpha, beta) = self.weights(w);
        CnkParams {
            s: 4.0,
            tau,
            p: 2.0,
            alpha,
            beta,
            q: f64::INFINITY,
            a: 0.5,
            j: 1,
            m: 2,
            n: 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightParams {
    pub gamma: f64,
    pub sigma: f64,
    pub delta: f64,
}

impl WeightParams {
    pub fn from_gas(g: &crate::background::GasParams) -> Self {
        Self {
            gamma: g.gamma(),
            sigma: g.sigma(),
            delta: g.delta(),
        }
    }
}

/// Discretization level of the ratio harness; larger is finer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridLevel(pub u32);

impl GridLevel {
    fn initial_panels(self) -> usize {
        2usize << self.0
    }
    /// Points per dimension of the sup-norm grid: ten times the Gauss nodes
    /// of the starting panel layout.
    fn sup_samples(self) -> usize {
        10 * GL_ORDER * self.initial_panels()
    }
}

const GL_ORDER: usize = 8;
const REL_TOL: f64 = 1e-8;
const MAX_PANELS: usize = 256;
const THETA_NODES: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioReport {
    pub gradient_l4: f64,
    pub hessian_l2: f64,
    pub weighted_sup: f64,
    pub ratio: f64,
    pub panels: usize,
}

/// Periodic trapezoid in `θ`. A function of azimuthal order `m` has `|∇u|⁴`
/// of order at most `4m`, which `4m + 1` equispaced nodes integrate exactly.
fn theta_nodes(order: Option<u32>) -> Vec<(f64, f64)> {
    let n = order.map_or(THETA_NODES, |m| 4 * m as usize + 1);
    let h = 2.0 * PI / n as f64;
    (0..n).map(|k| (k as f64 * h, h)).collect()
}

fn cartesian(r: f64, phi: f64, theta: f64) -> [f64; 3] {
    let (sp, cp) = phi.sin_cos();
    let (st, ct) = theta.sin_cos();
    [r * sp * ct, r * sp * st, r * cp]
}

fn clipped_box<F: TestFunction>(u: &F, phi0: f64) -> Result<SupportBox> {
    let b = u
        .support()
        .ok_or_else(|| Error::DegenerateInput("test function has no bounded support".into()))?;
    let clipped = SupportBox {
        r_lo: b.r_lo.max(1.0),
        r_hi: b.r_hi,
        phi_lo: b.phi_lo.max(0.0),
        phi_hi: b.phi_hi.min(phi0),
    };
    if !(clipped.r_hi > clipped.r_lo && clipped.phi_hi > clipped.phi_lo) {
        return Err(Error::DegenerateInput("support misses the cone".into()));
    }
    Ok(clipped)
}

type Exponents = [(f64, f64, f64); 4];

/// `∫ r^{4τ}|∇u|⁴` and `∫ r^{2α}|∇²u|²` for all four weight sets from one
/// pass of jet evaluations.
fn weighted_integrals<F: TestFunction>(
    u: &F,
    b: &SupportBox,
    panels: usize,
    exps: &Exponents,
    gl: &GaussLegendre,
) -> [(f64, f64); 4] {
    let thetas = theta_nodes(u.azimuthal_order());
    let hr = (b.r_hi - b.r_lo) / panels as f64;
    let hp = (b.phi_hi - b.phi_lo) / panels as f64;
    let mut acc = [(0.0, 0.0); 4];
    for pr in 0..panels {
        let r_a = b.r_lo + pr as f64 * hr;
        for (r, wr) in gl.mapped(r_a, r_a + hr) {
            let mut g4 = 0.0;
            let mut h2 = 0.0;
            for pp in 0..panels {
                let p_a = b.phi_lo + pp as f64 * hp;
                for (phi, wp) in gl.mapped(p_a, p_a + hp) {
                    let jac = wr * wp * r * r * phi.sin();
                    for &(theta, wt) in &thetas {
                        let jet = second_order(u, cartesian(r, phi, theta));
                        g4 += jac * wt * jet.gradient_norm().powi(4);
                        h2 += jac * wt * jet.hessian_norm().powi(2);
                    }
                }
            }
            for (a, &(tau, alpha, _)) in acc.iter_mut().zip(exps) {
                a.0 += r.powf(4.0 * tau) * g4;
                a.1 += r.powf(2.0 * alpha) * h2;
            }
        }
    }
    acc
}

fn weighted_sups<F: TestFunction>(u: &F, b: &SupportBox, samples: usize, exps: &Exponents) -> [f64; 4] {
    let thetas = theta_nodes(u.azimuthal_order());
    let mut best = [0.0f64; 4];
    for ir in 0..=samples {
        let r = b.r_lo + (b.r_hi - b.r_lo) * ir as f64 / samples as f64;
        let mut m: f64 = 0.0;
        for ip in 0..=samples {
            let phi = b.phi_lo + (b.phi_hi - b.phi_lo) * ip as f64 / samples as f64;
            for &(theta, _) in &thetas {
                m = m.max(u.eval(cartesian(r, phi, theta)).abs());
            }
        }
        for (s, &(_, _, beta)) in best.iter_mut().zip(exps) {
            *s = s.max(r.powf(beta) * m);
        }
    }
    best
}

/// Ratios of the two sides of all four inequalities for `u` on the cone
/// `φ ≤ φ₀`, in the order of [`InequalityId::ALL`].
pub fn inequality_ratios<F: TestFunction>(
    u: &F,
    weights: &WeightParams,
    phi0: f64,
    level: GridLevel,
) -> Result<[RatioReport; 4]> {
    let exps = InequalityId::ALL.map(|id| id.weights(weights));
    let b = clipped_box(u, phi0)?;
    let gl = GaussLegendre::new(GL_ORDER);
    let mut panels = level.initial_panels();
    let mut ints = weighted_integrals(u, &b, panels, &exps, &gl);
    loop {
        if panels * 2 > MAX_PANELS {
            return Err(Error::Resolution(format!(
                "weighted integrals not converged at {panels} panels"
            )));
        }
        panels *= 2;
        let next = weighted_integrals(u, &b, panels, &exps, &gl);
        let settled = |old: f64, new: f64| (new - old).abs() <= REL_TOL * new.abs();
        let done = ints
            .iter()
            .zip(&next)
            .all(|(o, n)| settled(o.0, n.0) && settled(o.1, n.1));
        ints = next;
        if done {
            break;
        }
    }
    let sups = weighted_sups(u, &b, level.sup_samples(), &exps);
    let mut out = [RatioReport {
        gradient_l4: 0.0,
        hessian_l2: 0.0,
        weighted_sup: 0.0,
        ratio: 0.0,
        panels,
    }; 4];
    for ((rep, &(i4, i2)), &sup) in out.iter_mut().zip(&ints).zip(&sups) {
        let gradient_l4 = i4.powf(0.25);
        let hessian_l2 = i2.sqrt();
        let denom = hessian_l2.sqrt() * sup.sqrt();
        if !(denom > 0.0) || !(gradient_l4 > 0.0) {
            return Err(Error::DegenerateInput(
                "a norm in the inequality vanishes".into(),
            ));
        }
        *rep = RatioReport {
            gradient_l4,
            hessian_l2,
            weighted_sup: sup,
            ratio: gradient_l4 / denom,
            panels,
        };
    }
    Ok(out)
}

/// Ratio of the two sides of the chosen inequality for `u` on the cone `φ ≤ φ₀`.
pub fn inequality_ratio<F: TestFunction>(
    which: InequalityId,
    u: &F,
    weights: &WeightParams,
    phi0: f64,
    level: GridLevel,
) -> Result<RatioReport> {
    let all = inequality_ratios(u, weights, phi0, level)?;
    let k = InequalityId::ALL.iter().position(|&i| i == which).unwrap_or(0);
    Ok(all[k])
}

/// `(1 - t²)^k·q(t)` on `|t| < 1`, zero outside.
///
/// Kept in factored form: expanding into monomials cancels catastrophically
/// as `|t| → 1`, exactly where the bump and its derivatives are small.
#[derive(Debug, Clone, PartialEq)]
pub struct BumpFactor {
    pub s_power: u32,
    /// Coefficients of `q` in increasing powers of `t`.
    pub q: Vec<f64>,
}

impl BumpFactor {
    /// `b(t) = (1 - t²)⁶`.
    pub fn bump() -> Self {
        Self { s_power: 6, q: vec![1.0] }
    }

    /// `d/dt [sᵏq] = s^(k-1)·(-2kt·q + s·q')` with `s = 1 - t²`.
    pub fn derivative(&self) -> Self {
        let k = self.s_power;
        assert!(k >= 1, "derivative would leave the C¹ profile class");
        let mut q = vec![0.0; self.q.len() + 2];
        for (i, &c) in self.q.iter().enumerate() {
            q[i + 1] -= 2.0 * k as f64 * c;
            if i >= 1 {
                q[i - 1] += i as f64 * c;
                q[i + 1] -= i as f64 * c;
            }
        }
        while q.len() > 1 && q.last() == Some(&0.0) {
            q.pop();
        }
        Self { s_power: k - 1, q }
    }

    fn eval<S: Scalar>(&self, t: S) -> S {
        if t.primal().abs() >= 1.0 {
            return S::cst(0.0);
        }
        let s = S::cst(1.0) - t * t;
        let q = self.q.iter().rev().fold(S::cst(0.0), |acc, &a| acc * t + S::cst(a));
        (0..self.s_power).fold(q, |acc, _| acc * s)
    }
}

fn poly_bump<S: Scalar>(t: S) -> S {
    let p = t.primal();
    if p.abs() >= 1.0 {
        return S::cst(0.0);
    }
    let s = S::cst(1.0) - t * t;
    let s2 = s * s;
    s2 * s2 * s2
}

/// `A·b((r - r_c)/w_r)·b((cosφ - c_c)/w_c)` with `b(t) = (1 - t²)⁶` on `|t| < 1`.
///
/// The profile is `C⁵`, enough for the second derivatives of second radial
/// derivatives that the composite checks need.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConeBump {
    pub amplitude: f64,
    pub r_center: f64,
    pub r_half_width: f64,
    pub cos_center: f64,
    pub cos_half_width: f64,
}

impl ConeBump {
    fn support_box(&self) -> SupportBox {
        let c_hi = (self.cos_center + self.cos_half_width).min(1.0);
        let c_lo = (self.cos_center - self.cos_half_width).max(-1.0);
        SupportBox {
            r_lo: self.r_center - self.r_half_width,
            r_hi: self.r_center + self.r_half_width,
            phi_lo: c_hi.acos(),
            phi_hi: c_lo.acos(),
        }
    }

    /// Closed form of the composite map applied to this bump.
    ///
    /// With `η = x₃/r` one has `Z₃r = 0` and `Z₃η = -x₁/r`, and both `η` and
    /// `x₁/r` are constant along rays, so every composite is again a product of
    /// a radial profile, an angular profile and a power of `x₁/r`.
    pub fn composite(&self, c: Composite) -> ConeProduct {
        let b = BumpFactor::bump();
        let db = b.derivative();
        let (a, wr, wc) = (self.amplitude, self.r_half_width, self.cos_half_width);
        let (amplitude, radial, angular, x1_power, inverse_r_power) = match c {
            Composite::Plain => (a, b.clone(), b, 0, 0),
            Composite::TangentialOverRadius => (-a / wc, b, db, 1, 1),
            Composite::RadialTangential => (-a / (wc * wr), db.clone(), db, 1, 0),
            Composite::SecondRadial => (a / (wr * wr), db.derivative(), b, 0, 0),
        };
        ConeProduct {
            amplitude,
            bump: *self,
            radial,
            angular,
            x1_power,
            inverse_r_power,
        }
    }
}

impl TestFunction for ConeBump {
    fn eval<S: Scalar>(&self, x: [S; 3]) -> S {
        let r = radius(x);
        let c = x[2] / r;
        let br = poly_bump((r - S::cst(self.r_center)).scale(1.0 / self.r_half_width));
        let bc = poly_bump((c - S::cst(self.cos_center)).scale(1.0 / self.cos_half_width));
        (br * bc).scale(self.amplitude)
    }

    fn support(&self) -> Option<SupportBox> {
        Some(self.support_box())
    }
}

/// `A·P(ρ)·Q(η)·(x₁/r)^m·r^{-n}` with `ρ`, `η` the scaled radial and polar
/// coordinates of a [`ConeBump`] and `P`, `Q` derivatives of its profile.
#[derive(Debug, Clone, PartialEq)]
pub struct ConeProduct {
    pub amplitude: f64,
    pub bump: ConeBump,
    pub radial: BumpFactor,
    pub angular: BumpFactor,
    pub x1_power: u32,
    pub inverse_r_power: u32,
}

impl TestFunction for ConeProduct {
    fn eval<S: Scalar>(&self, x: [S; 3]) -> S {
        let r = radius(x);
        let rho = (r - S::cst(self.bump.r_center)).scale(1.0 / self.bump.r_half_width);
        let eta = (x[2] / r - S::cst(self.bump.cos_center)).scale(1.0 / self.bump.cos_half_width);
        let mut v = self.radial.eval(rho) * self.angular.eval(eta);
        for _ in 0..self.x1_power {
            v = v * x[0] / r;
        }
        for _ in 0..self.inverse_r_power {
            v = v / r;
        }
        v.scale(self.amplitude)
    }

    fn axisymmetric(&self) -> bool {
        self.x1_power == 0
    }

    fn azimuthal_order(&self) -> Option<u32> {
        Some(self.x1_power)
    }

    fn support(&self) -> Option<SupportBox> {
        Some(self.bump.support_box())
    }
}

/// Support radii swept by the random family.
pub const FAMILY_RADII: [f64; 4] = [2.0, 4.0, 8.0, 16.0];

/// Seeded family of bumps supported in `1 ≤ r ≤ T`, `φ ≤ φ₀`, with `T` drawn from [`FAMILY_RADII`].
pub fn bump_family(seed: u64, count: usize, phi0: f64) -> Vec<ConeBump> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c0 = phi0.cos();
    (0..count)
        .map(|_| {
            let t = FAMILY_RADII[rng.gen_range(0..FAMILY_RADII.len())];
            let span = t - 1.0;
            let r_half_width = span * rng.gen_range(0.1..0.5);
            let r_center = rng.gen_range(1.0 + r_half_width..t - r_half_width);
            let cos_half_width = (1.0 - c0) * rng.gen_range(0.2..0.5);
            let cos_center = rng.gen_range(c0 + cos_half_width..1.0);
            ConeBump {
                amplitude: rng.gen_range(0.5..2.0),
                r_center,
                r_half_width,
                cos_center,
                cos_half_width,
            }
        })
        .collect()
}

/// What the harness is applied to: the bump itself or one of the derived
/// functions that the higher-order weighted estimates reduce to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Composite {
    Plain,
    /// `Z₃u / r`.
    TangentialOverRadius,
    /// `∂_r Z₃u`.
    RadialTangential,
    /// `∂_r² u`.
    SecondRadial,
}

impl Composite {
    pub const ALL: [Composite; 4] = [
        Composite::Plain,
        Composite::TangentialOverRadius,
        Composite::RadialTangential,
        Composite::SecondRadial,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Composite::Plain => "u",
            Composite::TangentialOverRadius => "Zu_over_r",
            Composite::RadialTangential => "dr_Zu",
            Composite::SecondRadial => "dr2_u",
        }
    }
}

/// Ratios of the four inequalities for one member after the composite map.
pub fn composite_ratios(
    composite: Composite,
    u: &ConeBump,
    weights: &WeightParams,
    phi0: f64,
    level: GridLevel,
) -> Result<[f64; 4]> {
    let reps = inequality_ratios(&u.composite(composite), weights, phi0, level)?;
    Ok(reps.map(|r| r.ratio))
}

/// Ratios of every family member at one grid level, in member order.
pub fn family_ratios(
    composite: Composite,
    family: &[ConeBump],
    weights: &WeightParams,
    phi0: f64,
    level: GridLevel,
) -> Result<Vec<[f64; 4]>> {
    family
        .par_iter()
        .map(|u| composite_ratios(composite, u, weights, phi0, level))
        .collect()
}

/// Family-wise maxima at successive levels, per inequality.
#[derive(Debug, Clone, PartialEq)]
pub struct RefinementStudy {
    pub composite: Composite,
    /// `caps[level][inequality]`.
    pub caps: Vec<[f64; 4]>,
    /// `ratios[level][member][inequality]`.
    pub ratios: Vec<Vec<[f64; 4]>>,
}

impl RefinementStudy {
    /// Largest relative change of the cap of `which` between neighbouring levels.
    pub fn drift(&self, which: InequalityId) -> f64 {
        let k = InequalityId::ALL.iter().position(|&i| i == which).unwrap_or(0);
        self.caps
            .windows(2)
            .map(|w| (w[1][k] - w[0][k]).abs() / w[0][k])
            .fold(0.0, f64::max)
    }

    pub fn max_drift(&self) -> f64 {
        InequalityId::ALL
            .iter()
            .map(|&i| self.drift(i))
            .fold(0.0, f64::max)
    }
}

pub fn refinement_study(
    composite: Composite,
    family: &[ConeBump],
    weights: &WeightParams,
    phi0: f64,
    levels: u32,
) -> Result<RefinementStudy> {
    let mut caps = Vec::new();
    let mut ratios = Vec::new();
    for l in 0..levels {
        let r = family_ratios(composite, family, weights, phi0, GridLevel(l))?;
        let mut cap = [0.0f64; 4];
        for m in &r {
            for (c, v) in cap.iter_mut().zip(m) {
                *c = c.max(*v);
            }
        }
        caps.push(cap);
        ratios.push(r);
    }
    Ok(RefinementStudy {
        composite,
        caps,
        ratios,
    })
}
