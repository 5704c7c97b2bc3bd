use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which tensor factor of a site an operator acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Factor {
    Spin,
    Boson,
}

/// Layout of the chain Hilbert space.
///
/// `boson_levels == 0` means no phonon factor at all; any other value gives
/// each site a Fock space truncated to `boson_levels` states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpaceSpec {
    pub n_sites: usize,
    /// `2S + 1`.
    pub spin_levels: usize,
    pub boson_levels: usize,
}

impl SpaceSpec {
    pub fn new(n_sites: usize, spin_levels: usize, boson_levels: usize) -> Result<Self> {
        let spec = SpaceSpec {
            n_sites,
            spin_levels,
            boson_levels,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_sites == 0 {
            return Err(Error::invalid("n_sites must be positive"));
        }
        if self.spin_levels == 0 {
            return Err(Error::invalid("spin_levels must be positive"));
        }
        let dim = (self.spin_levels as u128)
            .checked_pow(self.n_sites as u32)
            .and_then(|s| {
                (self.boson_levels.max(1) as u128)
                    .checked_pow(self.n_sites as u32)
                    .and_then(|b| s.checked_mul(b))
            });
        match dim {
            Some(d) if d <= u32::MAX as u128 => Ok(()),
            _ => Err(Error::invalid("Hilbert space dimension overflows")),
        }
    }

    /// Same chain without the phonon factor.
    pub fn spin_only(&self) -> SpaceSpec {
        SpaceSpec {
            boson_levels: 0,
            ..*self
        }
    }

    pub fn has_phonons(&self) -> bool {
        self.boson_levels >= 1
    }

    pub fn spin_dim(&self) -> usize {
        self.spin_levels.pow(self.n_sites as u32)
    }

    pub fn boson_dim(&self) -> usize {
        self.boson_levels.max(1).pow(self.n_sites as u32)
    }

    pub fn dim(&self) -> usize {
        self.spin_dim() * self.boson_dim()
    }

    pub(crate) fn check_site(&self, site: usize) -> Result<()> {
        if site == 0 || site > self.n_sites {
            Err(Error::SiteOutOfRange {
                site,
                n_sites: self.n_sites,
            })
        } else {
            Ok(())
        }
    }

    pub(crate) fn check_interior(&self, site: usize) -> Result<()> {
        self.check_site(site)?;
        if site < 2 || site + 1 > self.n_sites {
            Err(Error::EdgeSite {
                site,
                n_sites: self.n_sites,
            })
        } else {
            Ok(())
        }
    }

    /// Sizes of the blocks to the left and right of a site factor in the
    /// flattened index.
    pub(crate) fn strides(&self, site: usize, factor: Factor) -> (usize, usize) {
        let n = self.n_sites as u32;
        let s = site as u32;
        let nb = self.boson_levels.max(1);
        match factor {
            Factor::Spin => (
                self.spin_levels.pow(s - 1),
                self.spin_levels.pow(n - s) * self.boson_dim(),
            ),
            Factor::Boson => (self.spin_dim() * nb.pow(s - 1), nb.pow(n - s)),
        }
    }

    /// Flattened index of a product state. Local indices are 0-based, site 1
    /// first.
    pub fn compose(&self, spins: &[usize], bosons: &[usize]) -> Result<usize> {
        if spins.len() != self.n_sites {
            return Err(Error::DimensionMismatch {
                expected: self.n_sites,
                found: spins.len(),
            });
        }
        let nb = self.boson_levels.max(1);
        let boson_count = if self.has_phonons() { self.n_sites } else { 0 };
        if bosons.len() != boson_count {
            return Err(Error::DimensionMismatch {
                expected: boson_count,
                found: bosons.len(),
            });
        }
        let mut idx = 0usize;
        for &s in spins {
            if s >= self.spin_levels {
                return Err(Error::invalid(format!("spin index {s} out of range")));
            }
            idx = idx * self.spin_levels + s;
        }
        for &b in bosons {
            if b >= nb {
                return Err(Error::invalid(format!("boson index {b} out of range")));
            }
            idx = idx * nb + b;
        }
        Ok(idx)
    }

    /// Inverse of [`SpaceSpec::compose`].
    pub fn decompose(&self, mut idx: usize) -> Result<(Vec<usize>, Vec<usize>)> {
        if idx >= self.dim() {
            return Err(Error::invalid(format!("index {idx} out of range")));
        }
        let nb = self.boson_levels.max(1);
        let mut bosons = Vec::new();
        if self.has_phonons() {
            bosons = vec![0; self.n_sites];
            for b in bosons.iter_mut().rev() {
                *b = idx % nb;
                idx /= nb;
            }
        }
        let mut spins = vec![0; self.n_sites];
        for s in spins.iter_mut().rev() {
            *s = idx % self.spin_levels;
            idx /= self.spin_levels;
        }
        Ok((spins, bosons))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn dimensions() {
        assert_eq!(SpaceSpec::new(7, 2, 3).unwrap().dim(), 279_936);
        assert_eq!(SpaceSpec::new(7, 2, 2).unwrap().dim(), 16_384);
        assert_eq!(SpaceSpec::new(5, 2, 3).unwrap().dim(), 7_776);
        assert_eq!(SpaceSpec::new(3, 4, 0).unwrap().dim(), 64);
        assert_eq!(SpaceSpec::new(3, 2, 1).unwrap().dim(), 8);
    }

    #[test]
    fn rejects_degenerate_specs() {
        assert!(SpaceSpec::new(0, 2, 0).is_err());
        assert!(SpaceSpec::new(3, 0, 0).is_err());
        assert!(SpaceSpec::new(40, 2, 4).is_err());
    }

    #[test]
    fn spin_block_is_most_significant() {
        let spec = SpaceSpec::new(2, 2, 3).unwrap();
        assert_eq!(spec.compose(&[0, 1], &[0, 0]).unwrap(), 9);
        assert_eq!(spec.compose(&[0, 0], &[0, 1]).unwrap(), 1);
        assert_eq!(spec.compose(&[0, 0], &[1, 0]).unwrap(), 3);
    }

    proptest! {
        #[test]
        fn compose_decompose_bijection(
            n in 1usize..=4,
            levels in 2usize..=4,
            nb in 0usize..=3,
            seed in any::<u64>(),
        ) {
            let spec = SpaceSpec::new(n, levels, nb).unwrap();
            let idx = (seed as usize) % spec.dim();
            let (s, b) = spec.decompose(idx).unwrap();
            prop_assert_eq!(spec.compose(&s, &b).unwrap(), idx);
        }
    }
}
