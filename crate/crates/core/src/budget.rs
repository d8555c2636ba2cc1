//! Ceilings on the exponential enumerations.

use num_bigint::BigUint;

use crate::error::{Error, Result};

pub const BUDGET_ENV: &str = "MCAL_AUDIT_BUDGET";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Budget {
    /// Largest set whose partitions may be enumerated.
    pub partition_ceiling: usize,
    /// Nodes the multicalibrated join may visit before refusing.
    pub join_nodes: u64,
    /// Largest collection whose intersection closure may be formed.
    pub closure_groups: usize,
    /// Largest domain for the low-degree grid oracle.
    pub grid_points: usize,
    /// Grid candidates the low-degree oracle may visit.
    pub grid_candidates: u64,
}

impl Default for Budget {
    fn default() -> Self {
        Self {
            partition_ceiling: 12,
            join_nodes: 10_000_000,
            closure_groups: 20,
            grid_points: 4,
            grid_candidates: 200_000_000,
        }
    }
}

impl Budget {
    pub fn unlimited() -> Self {
        Self {
            partition_ceiling: usize::MAX,
            join_nodes: u64::MAX,
            closure_groups: usize::MAX,
            grid_points: usize::MAX,
            grid_candidates: u64::MAX,
        }
    }

    /// Reads `MCAL_AUDIT_BUDGET`: an integer replaces the join node limit,
    /// `unlimited` lifts every ceiling, unset keeps the defaults.
    pub fn from_env() -> Result<Self> {
        match std::env::var(BUDGET_ENV) {
            Ok(v) => Self::parse(&v),
            Err(_) => Ok(Self::default()),
        }
    }

    pub fn parse(v: &str) -> Result<Self> {
        let v = v.trim();
        if v.eq_ignore_ascii_case("unlimited") {
            return Ok(Self::unlimited());
        }
        let nodes: u64 = v
            .parse()
            .map_err(|_| Error::precondition(format!("{BUDGET_ENV}={v:?} is neither an integer nor 'unlimited'")))?;
        Ok(Self { join_nodes: nodes, ..Self::default() })
    }

    pub(crate) fn check_partition(&self, what: &'static str, k: usize) -> Result<()> {
        if k > self.partition_ceiling {
            return Err(Error::Budget {
                what,
                bound: format!("Bell({k}) = {}", crate::enumerate::bell(k)),
                limit: format!("sets of size {}", self.partition_ceiling),
            });
        }
        Ok(())
    }
}

pub(crate) fn refuse(what: &'static str, bound: impl ToString, limit: impl ToString) -> Error {
    Error::Budget { what, bound: bound.to_string(), limit: limit.to_string() }
}

pub(crate) fn product_bound(sizes: impl IntoIterator<Item = usize>) -> BigUint {
    sizes.into_iter().map(crate::enumerate::bell).product()
}
