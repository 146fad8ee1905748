use crate::error::{Error, Result};

/// Uniform angular grid on `[0, φ₀]`, both endpoints included.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngularGrid {
    len: usize,
    phi0: f64,
}

impl AngularGrid {
    pub const MIN_INTERIOR: usize = 16;

    pub fn new(len: usize, phi0: f64) -> Result<Self> {
        if len < Self::MIN_INTERIOR + 2 {
            return Err(Error::Resolution(format!(
                "angular grid needs at least {} nodes, got {len}",
                Self::MIN_INTERIOR + 2
            )));
        }
        if !(phi0 > 0.0 && phi0 < std::f64::consts::FRAC_PI_2) {
            return Err(Error::InvalidParams(format!("phi0 = {phi0} outside (0, pi/2)")));
        }
        Ok(Self { len, phi0 })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn phi0(&self) -> f64 {
        self.phi0
    }

    pub fn spacing(&self) -> f64 {
        self.phi0 / (self.len - 1) as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        if i + 1 == self.len {
            self.phi0
        } else {
            i as f64 * self.spacing()
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.len).map(|i| self.node(i)).collect()
    }

    /// Halves the spacing.
    pub fn refined(&self) -> Self {
        Self {
            len: 2 * (self.len - 1) + 1,
            phi0: self.phi0,
        }
    }

    /// Index of the node mirrored evenly about either end, for ghost values.
    #[inline]
    pub(crate) fn reflect(&self, i: isize) -> usize {
        let last = self.len as isize - 1;
        let j = if i < 0 {
            -i
        } else if i > last {
            2 * last - i
        } else {
            i
        };
        j as usize
    }
}

/// Radii starting at 1, strictly increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    nodes: Vec<f64>,
}

impl RadialGrid {
    pub fn from_nodes(nodes: Vec<f64>) -> Result<Self> {
        if nodes.first() != Some(&1.0) {
            return Err(Error::Domain("radial grid must start at r = 1".into()));
        }
        if nodes.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Domain("radial grid must be strictly increasing".into()));
        }
        Ok(Self { nodes })
    }

    /// `n` nodes uniform in `ln r` on `[1, r_max]`.
    pub fn log_uniform(r_max: f64, n: usize) -> Result<Self> {
        if !(r_max > 1.0) || n < 2 {
            return Err(Error::Domain(format!(
                "log grid needs r_max > 1 and n >= 2 (got {r_max}, {n})"
            )));
        }
        Self::from_nodes(crate::background::log_spaced(1.0, r_max, n))
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn endpoints_and_spacing() {
        let g = AngularGrid::new(129, 0.5).unwrap();
        assert_eq!(g.node(0), 0.0);
        assert_eq!(g.node(128), 0.5);
        assert!((g.spacing() - 0.5 / 128.0).abs() < 1e-17);
        assert_eq!(g.refined().len(), 257);
        assert!(AngularGrid::new(17, 0.5).is_err());
    }

    #[test]
    fn reflection_is_even_about_both_ends() {
        let g = AngularGrid::new(20, 0.5).unwrap();
        assert_eq!(g.reflect(-1), 1);
        assert_eq!(g.reflect(-2), 2);
        assert_eq!(g.reflect(20), 18);
        assert_eq!(g.reflect(21), 17);
        assert_eq!(g.reflect(5), 5);
    }

    #[test]
    fn radial_grid_validation() {
        assert!(RadialGrid::from_nodes(vec![1.0, 2.0, 2.0]).is_err());
        assert!(RadialGrid::from_nodes(vec![1.5, 2.0]).is_err());
        let g = RadialGrid::log_uniform(100.0, 5).unwrap();
        assert_eq!(g.nodes()[0], 1.0);
        assert_eq!(g.nodes()[4], 100.0);
    }
}
