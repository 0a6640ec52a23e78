use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::DataError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Subset {
    Training,
    Selection,
    Testing,
    Unused,
}

impl Subset {
    pub const USED: [Subset; 3] = [Subset::Training, Subset::Selection, Subset::Testing];

    pub fn name(self) -> &'static str {
        match self {
            Subset::Training => "training",
            Subset::Selection => "selection",
            Subset::Testing => "testing",
            Subset::Unused => "unused",
        }
    }
}

impl fmt::Display for Subset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Subset {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "training" | "train" => Ok(Subset::Training),
            "selection" => Ok(Subset::Selection),
            "testing" | "test" => Ok(Subset::Testing),
            other => Err(format!(
                "unknown subset `{other}` (expected training, selection or testing)"
            )),
        }
    }
}

/// Subset sizes for `n` instances: selection and testing get `floor(0.2 n)`
/// each and training keeps the remainder.
pub fn split_sizes(n: usize) -> (usize, usize, usize) {
    let held_out = n / 5;
    (n - 2 * held_out, held_out, held_out)
}

/// Seeded random partition: shuffle the indices, then hand out contiguous
/// blocks for training, selection and testing.
pub fn split(n: usize, seed: u64) -> Result<Vec<Subset>, DataError> {
    if n < 3 {
        return Err(DataError::TooFewInstances(n));
    }
    let (n_train, n_sel, _) = split_sizes(n);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));

    let mut assignment = vec![Subset::Testing; n];
    for (rank, &row) in order.iter().enumerate() {
        assignment[row] = if rank < n_train {
            Subset::Training
        } else if rank < n_train + n_sel {
            Subset::Selection
        } else {
            Subset::Testing
        };
    }
    Ok(assignment)
}
