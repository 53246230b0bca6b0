use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::round_robin::RoundRobinState;
use crate::activation::ActivationVector;
use crate::error::{Error, Result};

/// Normalization slack accepted for probability weights.
pub(crate) const WEIGHT_TOL: f64 = 1e-9;

/// Distribution `{α_φ}` over activation vectors used by `RandRR`.
#[derive(Debug, Clone, PartialEq)]
pub struct RandRrSpec {
    entries: Vec<(ActivationVector, f64)>,
    cumulative: Vec<f64>,
}

impl RandRrSpec {
    /// Validates and renormalizes `weights`. Zero-weight entries are dropped.
    pub fn new(weights: impl IntoIterator<Item = (ActivationVector, f64)>) -> Result<Self> {
        let mut merged: BTreeMap<ActivationVector, f64> = BTreeMap::new();
        let mut len = None;
        for (phi, w) in weights {
            if !w.is_finite() || w < 0.0 {
                return Err(Error::InvalidWeights(format!("weight {w} for {phi} is negative or not finite")));
            }
            match len {
                None => len = Some(phi.len()),
                Some(l) if l != phi.len() => {
                    return Err(Error::DimensionMismatch { expected: l, got: phi.len() })
                }
                _ => {}
            }
            *merged.entry(phi).or_insert(0.0) += w;
        }
        let total: f64 = merged.values().sum();
        if (total - 1.0).abs() > WEIGHT_TOL {
            return Err(Error::InvalidWeights(format!("weights sum to {total}, not 1")));
        }
        let entries: Vec<_> = merged.into_iter().filter(|&(_, w)| w > 0.0).map(|(a, w)| (a, w / total)).collect();
        if entries.is_empty() {
            return Err(Error::InvalidWeights("no positive weight".into()));
        }
        let mut acc = 0.0;
        let cumulative = entries
            .iter()
            .map(|&(_, w)| {
                acc += w;
                acc
            })
            .collect();
        Ok(RandRrSpec { entries, cumulative })
    }

    /// All mass on a single subset.
    pub fn point(phi: ActivationVector) -> Self {
        RandRrSpec { entries: vec![(phi, 1.0)], cumulative: vec![1.0] }
    }

    /// Uniform over all `2^n - 1` subsets.
    pub fn uniform(n: usize) -> Result<Self> {
        let k = ((1u64 << n) - 1) as f64;
        Self::new(ActivationVector::enumerate(n).map(|a| (a, 1.0 / k)))
    }

    pub fn entries(&self) -> &[(ActivationVector, f64)] {
        &self.entries
    }

    pub fn n_channels(&self) -> usize {
        self.entries[0].0.len()
    }

    pub fn weight(&self, phi: &ActivationVector) -> f64 {
        self.entries.iter().find(|(a, _)| a == phi).map_or(0.0, |&(_, w)| w)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> ActivationVector {
        let u: f64 = rng.gen();
        let idx = self.cumulative.partition_point(|&c| c <= u);
        self.entries[idx.min(self.entries.len() - 1)].0
    }

    /// Parses a JSON object `{"bitstring": weight, ...}`.
    pub fn from_json(text: &str) -> Result<Self> {
        let map: BTreeMap<String, f64> = serde_json::from_str(text)?;
        let mut weights = Vec::with_capacity(map.len());
        for (k, w) in map {
            weights.push((k.parse::<ActivationVector>()?, w));
        }
        Self::new(weights)
    }

    pub fn to_map(&self) -> BTreeMap<String, f64> {
        self.entries.iter().map(|(a, w)| (a.to_bitstring(), *w)).collect()
    }
}

impl Serialize for RandRrSpec {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_map().serialize(s)
    }
}

impl<'de> Deserialize<'de> for RandRrSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let map = BTreeMap::<String, f64>::deserialize(d)?;
        let mut weights = Vec::with_capacity(map.len());
        for (k, w) in map {
            weights.push((k.parse::<ActivationVector>().map_err(serde::de::Error::custom)?, w));
        }
        RandRrSpec::new(weights).map_err(serde::de::Error::custom)
    }
}

/// Samples the next round's subset and orders it least recently used first.
pub fn randrr_pick<R: Rng + ?Sized>(
    spec: &RandRrSpec,
    last_use_age: &[Option<u64>],
    rng: &mut R,
) -> Result<RoundRobinState> {
    let phi = spec.sample(rng);
    RoundRobinState::new(phi, last_use_age.to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn point_mass_uses_lru() {
        let spec = RandRrSpec::point("11".parse().unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let st = randrr_pick(&spec, &[Some(5), Some(9)], &mut rng).unwrap();
        assert_eq!(st.serve_order(), &[1, 0]);
        let st = randrr_pick(&spec, &[None, None], &mut rng).unwrap();
        assert_eq!(st.serve_order(), &[0, 1]);
    }

    #[test]
    fn uniform_sampling_frequencies() {
        let spec = RandRrSpec::uniform(3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let draws = 100_000;
        let mut counts = BTreeMap::new();
        for _ in 0..draws {
            *counts.entry(spec.sample(&mut rng)).or_insert(0u32) += 1;
        }
        assert_eq!(counts.len(), 7);
        for (_, c) in counts {
            let f = c as f64 / draws as f64;
            assert!((f - 1.0 / 7.0).abs() < 0.01, "{f}");
        }
    }

    #[test]
    fn renormalizes_near_one_and_rejects_far() {
        let a: ActivationVector = "10".parse().unwrap();
        let b: ActivationVector = "01".parse().unwrap();
        let s = RandRrSpec::new([(a, 0.5 + 4e-10), (b, 0.5)]).unwrap();
        let total: f64 = s.entries().iter().map(|e| e.1).sum();
        assert!((total - 1.0).abs() < 1e-15);
        assert!(RandRrSpec::new([(a, 0.6), (b, 0.5)]).is_err());
        assert!(RandRrSpec::new([(a, -0.1), (b, 1.1)]).is_err());
    }

    #[test]
    fn json_map() {
        let s = RandRrSpec::from_json(r#"{"10": 0.25, "11": 0.75}"#).unwrap();
        assert_eq!(s.weight(&"11".parse().unwrap()), 0.75);
        let back = serde_json::to_string(&s).unwrap();
        assert_eq!(RandRrSpec::from_json(&back).unwrap(), s);
    }
}
