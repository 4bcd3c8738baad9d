use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Largest global dimension handled by dense routines (`2^16`).
pub const MAX_DENSE_DIM: usize = 1 << 16;

/// Site bookkeeping for `copies` copies of a `parties`-partite state of
/// `local_dim`-level systems.
///
/// Sites are numbered copy-major: copy `m` (0-based) of party `n` (0-based)
/// is site `m * parties + n`, and site 0 is the most significant tensor
/// factor. With this ordering `ρ^{⊗M}` is a plain Kronecker power.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionLayout {
    parties: usize,
    copies: usize,
    local_dim: usize,
}

impl PartitionLayout {
    pub fn new(parties: usize, copies: usize, local_dim: usize) -> Result<Self> {
        if parties == 0 {
            return Err(invalid("parties", "must be positive"));
        }
        if copies == 0 {
            return Err(invalid("copies", "must be positive"));
        }
        if local_dim < 2 {
            return Err(invalid("local_dim", "must be at least 2"));
        }
        let layout = Self {
            parties,
            copies,
            local_dim,
        };
        layout.checked_global_dim()?;
        Ok(layout)
    }

    /// Single-copy qubit layout.
    pub fn qubits(parties: usize) -> Result<Self> {
        Self::new(parties, 1, 2)
    }

    pub fn parties(&self) -> usize {
        self.parties
    }

    pub fn copies(&self) -> usize {
        self.copies
    }

    pub fn local_dim(&self) -> usize {
        self.local_dim
    }

    pub fn sites(&self) -> usize {
        self.parties * self.copies
    }

    fn checked_global_dim(&self) -> Result<usize> {
        checked_pow(self.local_dim, self.sites()).ok_or_else(|| {
            invalid(
                "layout",
                format!(
                    "{}^{} overflows the index range",
                    self.local_dim,
                    self.sites()
                ),
            )
        })
    }

    /// `d^(N·M)`.
    pub fn global_dim(&self) -> usize {
        self.local_dim.pow(self.sites() as u32)
    }

    /// `d^N`, the dimension of one copy.
    pub fn copy_dim(&self) -> usize {
        self.local_dim.pow(self.parties as u32)
    }

    /// `d^M`, the dimension of one party's collection of copies.
    pub fn party_dim(&self) -> usize {
        self.local_dim.pow(self.copies as u32)
    }

    /// Site index of copy `copy` of party `party`, both 0-based.
    pub fn site(&self, party: usize, copy: usize) -> usize {
        copy * self.parties + party
    }

    /// Sites of party `party` in copy order.
    pub fn party_sites(&self, party: usize) -> Vec<usize> {
        (0..self.copies).map(|m| self.site(party, m)).collect()
    }

    /// Sites belonging to copy `copy`, in party order.
    pub fn copy_sites(&self, copy: usize) -> Vec<usize> {
        (0..self.parties).map(|n| self.site(n, copy)).collect()
    }

    pub fn with_copies(&self, copies: usize) -> Result<Self> {
        Self::new(self.parties, copies, self.local_dim)
    }

    pub fn with_local_dim(&self, local_dim: usize) -> Result<Self> {
        Self::new(self.parties, self.copies, local_dim)
    }

    pub fn single_copy(&self) -> Self {
        Self { copies: 1, ..*self }
    }

    pub fn ensure_within_cap(&self) -> Result<()> {
        let dim = self.checked_global_dim()?;
        if dim > MAX_DENSE_DIM {
            return Err(Error::DimensionCap {
                dim,
                cap: MAX_DENSE_DIM,
            });
        }
        Ok(())
    }

    /// Stride of `site` in the global index.
    pub(crate) fn stride(&self, site: usize) -> usize {
        self.local_dim.pow((self.sites() - 1 - site) as u32)
    }
}

pub(crate) fn checked_pow(base: usize, exp: usize) -> Option<usize> {
    let mut acc: usize = 1;
    for _ in 0..exp {
        acc = acc.checked_mul(base)?;
    }
    Some(acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn copy_major_sites() {
        let l = PartitionLayout::new(3, 2, 2).unwrap();
        assert_eq!(l.global_dim(), 64);
        assert_eq!(l.site(0, 0), 0);
        assert_eq!(l.site(2, 1), 5);
        assert_eq!(l.party_sites(1), vec![1, 4]);
        assert_eq!(l.copy_sites(1), vec![3, 4, 5]);
        assert_eq!(l.stride(0), 32);
        assert_eq!(l.stride(5), 1);
    }

    #[test]
    fn rejects_degenerate_layouts() {
        assert!(PartitionLayout::new(0, 1, 2).is_err());
        assert!(PartitionLayout::new(2, 0, 2).is_err());
        assert!(PartitionLayout::new(2, 1, 1).is_err());
        assert!(PartitionLayout::new(2, 200, 2).is_err());
    }

    #[test]
    fn cap() {
        assert!(PartitionLayout::new(2, 8, 2)
            .unwrap()
            .ensure_within_cap()
            .is_ok());
        assert!(matches!(
            PartitionLayout::new(2, 9, 2).unwrap().ensure_within_cap(),
            Err(Error::DimensionCap { .. })
        ));
    }
}
