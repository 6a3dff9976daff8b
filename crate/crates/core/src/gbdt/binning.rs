//! Quantization of raw feature values into histogram bins.
//!
//! Numeric features get at most `max_bin` bins bounded by midpoints between
//! distinct values; categorical features get one bin per category. The bin
//! after the last regular bin is reserved for missing values.

use super::data::{FeatureKind, FeatureMatrix};

#[derive(Debug, Clone, PartialEq)]
pub enum BinMapper {
    /// `upper_bounds[b]` is the inclusive upper edge of bin `b`; the last
    /// edge is `+inf`.
    Numeric {
        upper_bounds: Vec<f64>,
    },
    Categorical {
        n_categories: u32,
    },
}

impl BinMapper {
    pub fn fit(values: &[f64], kind: FeatureKind, max_bin: usize) -> BinMapper {
        match kind {
            FeatureKind::Numeric => BinMapper::Numeric {
                upper_bounds: numeric_bounds(values, max_bin),
            },
            FeatureKind::Categorical { n_categories } => BinMapper::Categorical {
                n_categories: n_categories.max(1),
            },
        }
    }

    /// Number of regular (non-missing) bins.
    pub fn n_bins(&self) -> usize {
        match self {
            BinMapper::Numeric { upper_bounds } => upper_bounds.len(),
            BinMapper::Categorical { n_categories } => *n_categories as usize,
        }
    }

    pub fn missing_bin(&self) -> u16 {
        self.n_bins() as u16
    }

    pub fn is_categorical(&self) -> bool {
        matches!(self, BinMapper::Categorical { .. })
    }

    pub fn bin(&self, v: f64) -> u16 {
        if v.is_nan() {
            return self.missing_bin();
        }
        match self {
            BinMapper::Numeric { upper_bounds } => upper_bounds.partition_point(|&u| u < v) as u16,
            BinMapper::Categorical { n_categories } => {
                if v >= 0.0 && v.fract() == 0.0 && v < *n_categories as f64 {
                    v as u16
                } else {
                    self.missing_bin()
                }
            }
        }
    }

    /// Raw-value threshold equivalent to "bin <= b", finite so it serializes.
    pub fn threshold(&self, b: u16) -> f64 {
        match self {
            BinMapper::Numeric { upper_bounds } => {
                let u = upper_bounds[b as usize];
                if u.is_finite() {
                    u
                } else {
                    f64::MAX
                }
            }
            BinMapper::Categorical { .. } => b as f64,
        }
    }
}

fn midpoint(a: f64, b: f64) -> f64 {
    let m = a + (b - a) / 2.0;
    if m >= b {
        a
    } else {
        m
    }
}

fn numeric_bounds(values: &[f64], max_bin: usize) -> Vec<f64> {
    let mut sorted: Vec<f64> = values.iter().copied().filter(|v| !v.is_nan()).collect();
    sorted.sort_by(f64::total_cmp);
    let mut distinct: Vec<(f64, usize)> = Vec::new();
    for v in sorted.iter().copied() {
        match distinct.last_mut() {
            Some((d, c)) if *d == v => *c += 1,
            _ => distinct.push((v, 1)),
        }
    }
    let mut bounds = Vec::new();
    if distinct.len() <= max_bin {
        for pair in distinct.windows(2) {
            bounds.push(midpoint(pair[0].0, pair[1].0));
        }
    } else {
        let total = sorted.len() as f64;
        let mut cumulative = 0usize;
        for (i, &(v, c)) in distinct.iter().enumerate().take(distinct.len() - 1) {
            cumulative += c;
            let target = (bounds.len() + 1) as f64 * total / max_bin as f64;
            if cumulative as f64 >= target {
                bounds.push(midpoint(v, distinct[i + 1].0));
                if bounds.len() == max_bin - 1 {
                    break;
                }
            }
        }
    }
    bounds.push(f64::INFINITY);
    bounds
}

/// Bin ids for every feature of a matrix, stored feature-major.
#[derive(Debug, Clone)]
pub struct BinnedMatrix {
    pub mappers: Vec<BinMapper>,
    pub bins: Vec<Vec<u16>>,
    /// Offset of each feature's first bin in a flattened histogram.
    pub offsets: Vec<usize>,
    pub total_bins: usize,
}

impl BinnedMatrix {
    pub fn fit(x: &FeatureMatrix, max_bin: usize) -> BinnedMatrix {
        let mappers: Vec<BinMapper> = (0..x.n_features())
            .map(|j| BinMapper::fit(x.column(j), x.kinds()[j], max_bin))
            .collect();
        let bins = mappers
            .iter()
            .enumerate()
            .map(|(j, m)| x.column(j).iter().map(|&v| m.bin(v)).collect())
            .collect();
        let mut offsets = Vec::with_capacity(mappers.len());
        let mut total_bins = 0;
        for m in &mappers {
            offsets.push(total_bins);
            total_bins += m.n_bins() + 1;
        }
        BinnedMatrix {
            mappers,
            bins,
            offsets,
            total_bins,
        }
    }

    pub fn n_features(&self) -> usize {
        self.mappers.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn few_distinct_values() {
        let m = BinMapper::fit(&[1.0, 2.0, 3.0, 2.0, 1.0], FeatureKind::Numeric, 255);
        assert_eq!(m.n_bins(), 3);
        assert_eq!(m.bin(1.0), 0);
        assert_eq!(m.bin(2.0), 1);
        assert_eq!(m.bin(3.0), 2);
        assert_eq!(m.bin(f64::NAN), 3);
    }

    #[test]
    fn constant_feature() {
        let m = BinMapper::fit(&[4.2; 50], FeatureKind::Numeric, 255);
        assert_eq!(m.n_bins(), 1);
        let all_missing = BinMapper::fit(&[f64::NAN; 5], FeatureKind::Numeric, 255);
        assert_eq!(all_missing.n_bins(), 1);
    }

    #[test]
    fn quartile_boundaries() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let values: Vec<f64> = (0..10_000).map(|_| rng.random::<f64>()).collect();
        let BinMapper::Numeric { upper_bounds } = BinMapper::fit(&values, FeatureKind::Numeric, 4) else {
            unreachable!()
        };
        assert_eq!(upper_bounds.len(), 4);
        // empirical quartiles as the reference
        let mut sorted = values.clone();
        sorted.sort_by(f64::total_cmp);
        for (k, b) in upper_bounds[..3].iter().enumerate() {
            let q = sorted[(k + 1) * 2500];
            assert!((b - q).abs() < 0.05, "bound {b} vs quartile {q}");
            assert!((b - 0.25 * (k + 1) as f64).abs() < 0.05);
        }
    }

    #[test]
    fn categorical_bins() {
        let m = BinMapper::fit(&[0.0, 2.0], FeatureKind::Categorical { n_categories: 3 }, 255);
        assert_eq!(m.n_bins(), 3);
        assert_eq!(m.bin(2.0), 2);
        assert_eq!(m.bin(7.0), 3);
        assert_eq!(m.bin(f64::NAN), 3);
    }

    #[test]
    fn adjacent_floats_stay_separated() {
        let a = 1.0f64;
        let b = f64::from_bits(a.to_bits() + 1);
        let m = BinMapper::fit(&[a, b], FeatureKind::Numeric, 255);
        assert_ne!(m.bin(a), m.bin(b));
    }
}
