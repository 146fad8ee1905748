//! Compactly supported angular profiles for the initial perturbation.

/// `A·exp(-1/(1-t²))` with `t = (φ-φc)/w` on `|t| < 1`, zero elsewhere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BumpProfile {
    pub amplitude: f64,
    pub center: f64,
    pub width: f64,
}

impl BumpProfile {
    pub fn new(amplitude: f64, center: f64, width: f64) -> Self {
        assert!(width > 0.0, "bump width must be positive");
        Self {
            amplitude,
            center,
            width,
        }
    }

    pub fn zero() -> Self {
        Self {
            amplitude: 0.0,
            center: 0.0,
            width: 1.0,
        }
    }

    pub fn support(&self) -> (f64, f64) {
        (self.center - self.width, self.center + self.width)
    }

    fn local(&self, phi: f64) -> Option<(f64, f64)> {
        let t = (phi - self.center) / self.width;
        if t.abs() >= 1.0 || self.amplitude == 0.0 {
            None
        } else {
            let s = 1.0 - t * t;
            Some((t, s))
        }
    }

    pub fn value(&self, phi: f64) -> f64 {
        match self.local(phi) {
            Some((_, s)) => self.amplitude * (-1.0 / s).exp(),
            None => 0.0,
        }
    }

    pub fn derivative(&self, phi: f64) -> f64 {
        match self.local(phi) {
            Some((t, s)) => self.amplitude * (-1.0 / s).exp() * (-2.0 * t / (s * s)) / self.width,
            None => 0.0,
        }
    }

    /// True when the support lies strictly inside `(0, phi0)`, so neither the axis
    /// nor the wall sees the initial perturbation.
    pub fn is_interior(&self, phi0: f64) -> bool {
        let (lo, hi) = self.support();
        self.amplitude == 0.0 || (lo > 0.0 && hi < phi0)
    }
}

/// The pair `(Φ₀, Φ₁)`: potential and radial-velocity perturbations at `r = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitialData {
    pub potential: BumpProfile,
    pub radial_velocity: BumpProfile,
}

impl InitialData {
    pub fn new(potential: BumpProfile, radial_velocity: BumpProfile) -> Self {
        Self {
            potential,
            radial_velocity,
        }
    }

    /// Default pair centred mid-channel, both supported on the middle half of `[0, φ₀]`.
    pub fn default_for(phi0: f64) -> Self {
        let center = 0.5 * phi0;
        let width = 0.25 * phi0;
        Self {
            potential: BumpProfile::new(0.1, center, width),
            radial_velocity: BumpProfile::new(1.0, center, width),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bump_vanishes_outside_support() {
        let b = BumpProfile::new(2.0, 0.3, 0.1);
        assert_eq!(b.value(0.2), 0.0);
        assert_eq!(b.value(0.45), 0.0);
        assert!((b.value(0.3) - 2.0 * (-1f64).exp()).abs() < 1e-15);
        assert_eq!(b.derivative(0.3), 0.0);
    }

    #[test]
    fn derivative_matches_difference_quotient() {
        let b = BumpProfile::new(1.5, 0.3, 0.1);
        for &phi in &[0.23, 0.27, 0.31, 0.37] {
            let h = 1e-6;
            let fd = (b.value(phi + h) - b.value(phi - h)) / (2.0 * h);
            assert!((fd - b.derivative(phi)).abs() < 1e-6, "phi = {phi}");
        }
    }

    #[test]
    fn default_pair_is_interior() {
        let d = InitialData::default_for(std::f64::consts::FRAC_PI_6);
        assert!(d.potential.is_interior(std::f64::consts::FRAC_PI_6));
        assert!(d.radial_velocity.is_interior(std::f64::consts::FRAC_PI_6));
    }
}
