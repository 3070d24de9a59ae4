//! Finite equal-atom probability model.
//!
//! A payoff on an [`AtomSpace`] with `n` atoms is a vector of `n` finite reals,
//! each atom carrying probability `1/n`. Law invariance on this space is
//! permutation invariance of the value vector, and conditional expectations
//! with respect to finitely generated σ-fields are block averages over a
//! [`Partition`].

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `n` atoms, each with probability `1/n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AtomSpace {
    n: usize,
}

impl AtomSpace {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyPayoff);
        }
        Ok(Self { n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn atom_probability(&self) -> f64 {
        1.0 / self.n as f64
    }

    pub fn zero(&self) -> Payoff {
        Payoff::constant(*self, 0.0)
    }

    pub fn ensure_same(&self, other: &AtomSpace) -> Result<()> {
        if self.n != other.n {
            return Err(Error::SpaceMismatch {
                left: self.n,
                right: other.n,
            });
        }
        Ok(())
    }
}

/// State-contingent payoff in numeraire units.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Payoff {
    values: Vec<f64>,
}

impl<'de> Deserialize<'de> for Payoff {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let values = Vec::<f64>::deserialize(d)?;
        Payoff::new(values).map_err(serde::de::Error::custom)
    }
}

impl Payoff {
    /// Builds a payoff, rejecting empty vectors and non-finite entries.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyPayoff);
        }
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite { index, value });
        }
        Ok(Self { values })
    }

    pub fn constant(space: AtomSpace, c: f64) -> Self {
        Self {
            values: vec![c; space.n],
        }
    }

    // Arithmetic below stays inside the space; inputs are already validated.
    pub(crate) fn from_vec(values: Vec<f64>) -> Self {
        debug_assert!(!values.is_empty());
        Self { values }
    }

    pub fn space(&self) -> AtomSpace {
        AtomSpace {
            n: self.values.len(),
        }
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn ensure_same_space(&self, other: &Payoff) -> Result<()> {
        self.space().ensure_same(&other.space())
    }

    pub fn neg(&self) -> Payoff {
        Self::from_vec(self.values.iter().map(|v| -v).collect())
    }

    pub fn scale(&self, m: f64) -> Payoff {
        Self::from_vec(self.values.iter().map(|v| m * v).collect())
    }

    pub fn shift(&self, c: f64) -> Payoff {
        Self::from_vec(self.values.iter().map(|v| v + c).collect())
    }

    pub fn add(&self, other: &Payoff) -> Result<Payoff> {
        self.ensure_same_space(other)?;
        Ok(self.zip_with(other, |a, b| a + b))
    }

    /// `self + m * other`.
    pub fn add_scaled(&self, other: &Payoff, m: f64) -> Result<Payoff> {
        self.ensure_same_space(other)?;
        Ok(self.zip_with(other, |a, b| a + m * b))
    }

    /// `lambda * self + (1 - lambda) * other`.
    pub fn mix(&self, other: &Payoff, lambda: f64) -> Result<Payoff> {
        self.ensure_same_space(other)?;
        Ok(self.zip_with(other, |a, b| lambda * a + (1.0 - lambda) * b))
    }

    pub(crate) fn zip_with(&self, other: &Payoff, f: impl Fn(f64, f64) -> f64) -> Payoff {
        Self::from_vec(
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        )
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    pub fn is_constant(&self) -> bool {
        self.values.iter().all(|&v| v == self.values[0])
    }

    /// Values sorted ascending.
    pub fn sorted(&self) -> Vec<f64> {
        let mut v = self.values.clone();
        v.sort_by(f64::total_cmp);
        v
    }

    pub fn permuted(&self, perm: &[usize]) -> Payoff {
        Self::from_vec(perm.iter().map(|&i| self.values[i]).collect())
    }

    /// Atom-wise `self >= other`.
    pub fn dominates(&self, other: &Payoff) -> Result<bool> {
        self.ensure_same_space(other)?;
        Ok(self.values.iter().zip(&other.values).all(|(a, b)| a >= b))
    }

    /// Parses a single-column CSV (optional header line).
    pub fn from_csv<R: std::io::Read>(reader: R) -> Result<Payoff> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut values = Vec::new();
        for (row, record) in rdr.records().enumerate() {
            let record = record.map_err(|e| Error::Parse(e.to_string()))?;
            let field = record.get(0).unwrap_or("");
            match field.parse::<f64>() {
                Ok(v) => values.push(v),
                Err(_) if row == 0 => continue,
                Err(_) => return Err(Error::Parse(format!("row {row}: not a number: {field:?}"))),
            }
        }
        Payoff::new(values)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for v in &self.values {
            out.push_str(&format!("{v}\n"));
        }
        out
    }
}

impl fmt::Display for Payoff {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.values)
    }
}

/// Disjoint nonempty blocks covering `{0..n}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    n: usize,
    blocks: Vec<Vec<usize>>,
}

impl Partition {
    pub fn new(n: usize, blocks: Vec<Vec<usize>>) -> Result<Self> {
        let mut seen = vec![false; n];
        for block in &blocks {
            if block.is_empty() {
                return Err(Error::InvalidPartition("empty block".into()));
            }
            for &i in block {
                if i >= n {
                    return Err(Error::InvalidPartition(format!(
                        "atom {i} out of range for {n} atoms"
                    )));
                }
                if seen[i] {
                    return Err(Error::InvalidPartition(format!("atom {i} in two blocks")));
                }
                seen[i] = true;
            }
        }
        if let Some(i) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidPartition(format!("atom {i} not covered")));
        }
        Ok(Self { n, blocks })
    }

    pub fn singletons(n: usize) -> Self {
        Self {
            n,
            blocks: (0..n).map(|i| vec![i]).collect(),
        }
    }

    pub fn whole(n: usize) -> Self {
        Self {
            n,
            blocks: vec![(0..n).collect()],
        }
    }

    /// Uniformly random number of blocks, atoms shuffled then cut.
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let mut atoms: Vec<usize> = (0..n).collect();
        atoms.shuffle(rng);
        let k = rng.random_range(1..=n);
        let mut cuts: Vec<usize> = (1..n).collect();
        cuts.shuffle(rng);
        let mut cuts: Vec<usize> = cuts.into_iter().take(k - 1).collect();
        cuts.sort_unstable();
        let mut blocks = Vec::with_capacity(k);
        let mut start = 0;
        for c in cuts.into_iter().chain(std::iter::once(n)) {
            blocks.push(atoms[start..c].to_vec());
            start = c;
        }
        Self { n, blocks }
    }

    /// Splits every block of `self` further; the result refines `self`.
    pub fn random_refinement<R: Rng + ?Sized>(&self, rng: &mut R) -> Self {
        let mut blocks = Vec::new();
        for block in &self.blocks {
            let sub = Partition::random(block.len(), rng);
            for b in sub.blocks {
                blocks.push(b.into_iter().map(|j| block[j]).collect());
            }
        }
        Self { n: self.n, blocks }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }
}

pub fn expectation(x: &Payoff) -> f64 {
    x.values.iter().sum::<f64>() / x.n() as f64
}

/// Exact equality of sorted value vectors.
pub fn same_law(x: &Payoff, y: &Payoff) -> Result<bool> {
    x.ensure_same_space(y)?;
    Ok(x.sorted() == y.sorted())
}

/// No atom pair moves the two payoffs in opposite directions.
pub fn is_comonotone(x: &Payoff, y: &Payoff) -> Result<bool> {
    x.ensure_same_space(y)?;
    let (a, b) = (x.values(), y.values());
    for i in 0..a.len() {
        for j in (i + 1)..a.len() {
            if (a[i] - a[j]) * (b[i] - b[j]) < 0.0 {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Conditional expectation given the σ-field generated by `g`.
pub fn condition(x: &Payoff, g: &Partition) -> Result<Payoff> {
    if g.n != x.n() {
        return Err(Error::InvalidPartition(format!(
            "partition over {} atoms applied to payoff with {}",
            g.n,
            x.n()
        )));
    }
    let mut out = vec![0.0; x.n()];
    for block in &g.blocks {
        let avg = block.iter().map(|&i| x.values[i]).sum::<f64>() / block.len() as f64;
        for &i in block {
            out[i] = avg;
        }
    }
    Ok(Payoff::from_vec(out))
}

/// Sampling specification for [`random_payoff`].
///
/// Textual forms: `uniform(a,b)`, `normal(mu,sigma)`, `two-point(a,b)`,
/// `constant(c)`, `integers(lo,hi)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum DistributionSpec {
    Uniform { low: f64, high: f64 },
    Normal { mean: f64, sd: f64 },
    TwoPoint { low: f64, high: f64 },
    Constant { value: f64 },
    Integers { low: i64, high: i64 },
}

impl DistributionSpec {
    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::UnknownDistribution(msg));
        match *self {
            Self::Uniform { low, high } if !(low < high) || !low.is_finite() || !high.is_finite() => {
                bad(format!("uniform needs finite low < high, got ({low}, {high})"))
            }
            Self::Normal { mean, sd } if !mean.is_finite() || !(sd >= 0.0) || !sd.is_finite() => {
                bad(format!("normal needs finite mean and sd >= 0, got ({mean}, {sd})"))
            }
            Self::TwoPoint { low, high } if !low.is_finite() || !high.is_finite() => {
                bad(format!("two-point needs finite values, got ({low}, {high})"))
            }
            Self::Constant { value } if !value.is_finite() => {
                bad(format!("constant needs a finite value, got {value}"))
            }
            Self::Integers { low, high } if low > high => {
                bad(format!("integers needs low <= high, got ({low}, {high})"))
            }
            _ => Ok(()),
        }
    }

    pub(crate) fn sample_values<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<f64> {
        match *self {
            Self::Uniform { low, high } => (0..n).map(|_| rng.random_range(low..high)).collect(),
            Self::Normal { mean, sd } => {
                let d = Normal::new(mean, sd).expect("validated normal parameters");
                (0..n).map(|_| d.sample(rng)).collect()
            }
            Self::TwoPoint { low, high } => (0..n)
                .map(|_| if rng.random_bool(0.5) { high } else { low })
                .collect(),
            Self::Constant { value } => vec![value; n],
            Self::Integers { low, high } => {
                (0..n).map(|_| rng.random_range(low..=high) as f64).collect()
            }
        }
    }
}

impl FromStr for DistributionSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let unknown = || Error::UnknownDistribution(s.to_string());
        let open = s.find('(').ok_or_else(unknown)?;
        if !s.ends_with(')') {
            return Err(unknown());
        }
        let name = s[..open].trim().to_ascii_lowercase();
        let args: Vec<f64> = s[open + 1..s.len() - 1]
            .split(',')
            .map(|a| a.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| unknown())?;
        let spec = match (name.as_str(), args.as_slice()) {
            ("uniform", &[low, high]) => Self::Uniform { low, high },
            ("normal", &[mean, sd]) => Self::Normal { mean, sd },
            ("two-point" | "two_point" | "twopoint", &[low, high]) => Self::TwoPoint { low, high },
            ("constant", &[value]) => Self::Constant { value },
            ("integers", &[low, high]) if low.fract() == 0.0 && high.fract() == 0.0 => {
                Self::Integers {
                    low: low as i64,
                    high: high as i64,
                }
            }
            _ => return Err(unknown()),
        };
        spec.validate()?;
        Ok(spec)
    }
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent per-trial seed derived from a master seed (splitmix64 step).
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic given `(space, seed, spec)`.
pub fn random_payoff(space: AtomSpace, seed: u64, spec: &DistributionSpec) -> Result<Payoff> {
    spec.validate()?;
    let mut rng = rng_from_seed(seed);
    Payoff::new(spec.sample_values(space.n, &mut rng))
}

pub(crate) fn sample_payoff<R: Rng + ?Sized>(
    space: AtomSpace,
    spec: &DistributionSpec,
    rng: &mut R,
) -> Payoff {
    Payoff::from_vec(spec.sample_values(space.n, rng))
}

pub fn random_permutation<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<usize> {
    let mut p: Vec<usize> = (0..n).collect();
    p.shuffle(rng);
    p
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(v: &[f64]) -> Payoff {
        Payoff::new(v.to_vec()).unwrap()
    }

    #[test]
    fn expectation_examples() {
        assert_eq!(expectation(&p(&[0.0, 0.0, 0.0])), 0.0);
        assert_eq!(expectation(&p(&[2.5, 2.5])), 2.5);
        assert_eq!(expectation(&p(&[1.0, 2.0, 3.0, 6.0])), 3.0);
    }

    #[test]
    fn same_law_examples() {
        assert!(same_law(&p(&[1.0, 2.0]), &p(&[2.0, 1.0])).unwrap());
        assert!(!same_law(&p(&[0.0, 0.0]), &p(&[0.0, 1.0])).unwrap());
        assert!(!same_law(&p(&[1.0, 1.0, 2.0]), &p(&[1.0, 2.0, 2.0])).unwrap());
        assert!(matches!(
            same_law(&p(&[1.0]), &p(&[1.0, 2.0])),
            Err(Error::SpaceMismatch { .. })
        ));
    }

    #[test]
    fn comonotone_examples() {
        assert!(is_comonotone(&p(&[1.0, 2.0, 3.0]), &p(&[0.0, 0.0, 5.0])).unwrap());
        assert!(!is_comonotone(&p(&[1.0, 2.0]), &p(&[2.0, 1.0])).unwrap());
        assert!(is_comonotone(&p(&[4.0, 4.0, 4.0]), &p(&[3.0, -1.0, 7.0])).unwrap());
        assert!(is_comonotone(&p(&[1.0]), &p(&[1.0, 2.0])).is_err());
    }

    #[test]
    fn condition_examples() {
        let x = p(&[0.0, 4.0, 2.0, 2.0]);
        assert_eq!(condition(&x, &Partition::singletons(4)).unwrap(), x);
        assert_eq!(
            condition(&x, &Partition::whole(4)).unwrap(),
            Payoff::constant(x.space(), 2.0)
        );
        let g = Partition::new(4, vec![vec![0, 1], vec![2, 3]]).unwrap();
        assert_eq!(condition(&x, &g).unwrap().values(), &[2.0, 2.0, 2.0, 2.0]);
        assert!(condition(&x, &Partition::whole(3)).is_err());
    }

    #[test]
    fn partition_validation() {
        assert!(Partition::new(3, vec![vec![0, 1], vec![1, 2]]).is_err());
        assert!(Partition::new(3, vec![vec![0, 1]]).is_err());
        assert!(Partition::new(3, vec![vec![0, 1, 2], vec![]]).is_err());
        assert!(Partition::new(3, vec![vec![0, 3], vec![1, 2]]).is_err());
        let mut rng = rng_from_seed(3);
        for n in 1..10 {
            let g = Partition::random(n, &mut rng);
            Partition::new(n, g.blocks().to_vec()).unwrap();
            let h = g.random_refinement(&mut rng);
            Partition::new(n, h.blocks().to_vec()).unwrap();
        }
    }

    #[test]
    fn payoff_rejects_non_finite() {
        assert!(matches!(
            Payoff::new(vec![1.0, f64::INFINITY]),
            Err(Error::NonFinite { index: 1, .. })
        ));
        assert!(Payoff::new(vec![f64::NAN]).is_err());
        assert!(Payoff::new(vec![]).is_err());
        assert!(serde_json::from_str::<Payoff>("[1.0, 2.0]").is_ok());
        assert!(serde_json::from_str::<Payoff>("[]").is_err());
    }

    #[test]
    fn random_payoff_is_deterministic() {
        let space = AtomSpace::new(4).unwrap();
        let spec: DistributionSpec = "normal(0, 1)".parse().unwrap();
        assert_eq!(
            random_payoff(space, 17, &spec).unwrap(),
            random_payoff(space, 17, &spec).unwrap()
        );
        let c: DistributionSpec = "constant(2.5)".parse().unwrap();
        assert_eq!(random_payoff(space, 1, &c).unwrap().values(), &[2.5; 4]);
        let tp: DistributionSpec = "two-point(-1, 1)".parse().unwrap();
        let m = expectation(&random_payoff(space, 9, &tp).unwrap());
        assert!((-1.0..=1.0).contains(&m));
        assert!("cauchy(0,1)".parse::<DistributionSpec>().is_err());
        assert!("uniform(1,0)".parse::<DistributionSpec>().is_err());
        assert!("uniform 0 1".parse::<DistributionSpec>().is_err());
    }

    #[test]
    fn csv_round_trip() {
        let x = p(&[1.5, -2.0, 3.25]);
        assert_eq!(Payoff::from_csv(x.to_csv().as_bytes()).unwrap(), x);
        let with_header = "value\n1\n2\n";
        assert_eq!(
            Payoff::from_csv(with_header.as_bytes()).unwrap().values(),
            &[1.0, 2.0]
        );
        assert!(Payoff::from_csv("1\nabc\n".as_bytes()).is_err());
    }
}
