use std::fmt;
use std::hash::Hasher;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use siphasher::sip::SipHasher13;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Dev,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Dev, Split::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Dev => "dev",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitRatios {
    pub train: f64,
    pub dev: f64,
    pub test: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        SplitRatios {
            train: 0.8,
            dev: 0.1,
            test: 0.1,
        }
    }
}

impl SplitRatios {
    pub fn new(train: f64, dev: f64, test: f64) -> Result<SplitRatios, String> {
        let r = SplitRatios { train, dev, test };
        if [train, dev, test].iter().any(|x| !(0.0..=1.0).contains(x)) {
            return Err(format!("split ratios must lie in [0, 1], got {r}"));
        }
        if (train + dev + test - 1.0).abs() > 1e-6 {
            return Err(format!("split ratios must sum to 1, got {r}"));
        }
        Ok(r)
    }

    pub fn get(&self, s: Split) -> f64 {
        match s {
            Split::Train => self.train,
            Split::Dev => self.dev,
            Split::Test => self.test,
        }
    }

    /// Exact per-split sizes for `n` items; the test split absorbs rounding.
    pub fn quotas(&self, n: usize) -> [usize; 3] {
        let train = (self.train * n as f64).round() as usize;
        let dev = ((self.dev * n as f64).round() as usize).min(n - train);
        [train, dev, n - train - dev]
    }
}

impl fmt::Display for SplitRatios {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}/{}", self.train * 100.0, self.dev * 100.0, self.test * 100.0)
    }
}

/// Accepts `80/10/10` (percentages) or `0.8/0.1/0.1`.
impl FromStr for SplitRatios {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts = s
            .split(['/', ','])
            .map(|p| {
                p.trim()
                    .parse::<f64>()
                    .map_err(|_| format!("bad split ratio `{p}` in `{s}`"))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let [a, b, c] = parts[..] else {
            return Err(format!("expected three split ratios, got `{s}`"));
        };
        let total = a + b + c;
        if (total - 100.0).abs() < 1e-6 {
            SplitRatios::new(a / 100.0, b / 100.0, c / 100.0)
        } else {
            SplitRatios::new(a, b, c)
        }
    }
}

/// Keyed hash of a problem id under the run seed.
pub fn split_key(seed: u64, id: &str) -> u64 {
    let mut h = SipHasher13::new_with_keys(seed, 0x756e_6967_7261_6d00);
    h.write(id.as_bytes());
    h.finish()
}

/// Ranks ids by keyed hash and hands out exact quotas in that order.
pub fn assign_splits(ids: &[&str], seed: u64, ratios: &SplitRatios) -> Vec<Split> {
    let mut order: Vec<usize> = (0..ids.len()).collect();
    order.sort_by_key(|&i| (split_key(seed, ids[i]), ids[i]));
    let [train, dev, _] = ratios.quotas(ids.len());
    let mut out = vec![Split::Test; ids.len()];
    for (rank, &i) in order.iter().enumerate() {
        out[i] = if rank < train {
            Split::Train
        } else if rank < train + dev {
            Split::Dev
        } else {
            Split::Test
        };
    }
    out
}
