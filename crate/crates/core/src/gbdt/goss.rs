//! Gradient-based one-side sampling.

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct GossSample {
    /// Selected row indices, ascending.
    pub rows: Vec<u32>,
    /// Weight of each selected row, aligned with `rows`.
    pub weights: Vec<f64>,
}

fn count(rate: f64, n: usize) -> usize {
    ((rate * n as f64 - 1e-9).ceil().max(0.0) as usize).min(n)
}

/// Keeps the `ceil(a n)` rows with the largest |gradient| (ties by lower
/// index) at weight 1 and a uniform sample of `ceil(b n)` of the others at
/// weight `(1 - a) / b`.
pub fn goss_sample(gradients: &[f64], a: f64, b: f64, seed: u64) -> Result<GossSample> {
    let unit = |v: f64| (0.0..=1.0).contains(&v);
    if !unit(a) || !unit(b) || a + b > 1.0 + 1e-12 {
        return Err(Error::InvalidParam(format!("GOSS rates a={a} b={b}")));
    }
    let n = gradients.len();
    let n_top = count(a, n);
    let mut order: Vec<u32> = (0..n as u32).collect();
    order.sort_by(|&i, &j| {
        gradients[j as usize]
            .abs()
            .total_cmp(&gradients[i as usize].abs())
            .then(i.cmp(&j))
    });
    let rest = &order[n_top..];
    let n_other = if b > 0.0 { count(b, n).min(rest.len()) } else { 0 };
    let mut picked: Vec<(u32, f64)> = order[..n_top].iter().map(|&r| (r, 1.0)).collect();
    if n_other > 0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let amplify = (1.0 - a) / b;
        picked.extend(
            index::sample(&mut rng, rest.len(), n_other)
                .into_iter()
                .map(|k| (rest[k], amplify)),
        );
    }
    picked.sort_unstable_by_key(|p| p.0);
    Ok(GossSample {
        rows: picked.iter().map(|p| p.0).collect(),
        weights: picked.iter().map(|p| p.1).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn keep_all() {
        let g = [0.3, -1.0, 0.2, 5.0];
        let s = goss_sample(&g, 1.0, 0.0, 1).unwrap();
        assert_eq!(s.rows, vec![0, 1, 2, 3]);
        assert!(s.weights.iter().all(|&w| w == 1.0));
    }

    #[test]
    fn ten_rows() {
        let g: Vec<f64> = (0..10).map(|i| i as f64 - 4.5).collect();
        let s = goss_sample(&g, 0.2, 0.1, 3).unwrap();
        assert_eq!(s.rows.len(), 3);
        // largest |g| are rows 0 (-4.5) and 9 (4.5)
        assert!(s.rows.contains(&0) && s.rows.contains(&9));
        let heavy: Vec<f64> = s.weights.iter().copied().filter(|&w| w != 1.0).collect();
        assert_eq!(heavy.len(), 1);
        assert!((heavy[0] - 8.0).abs() < 1e-12);
    }

    #[test]
    fn top_only_without_tail() {
        let g = [1.0, 2.0, 3.0, 4.0];
        let s = goss_sample(&g, 0.5, 0.0, 0).unwrap();
        assert_eq!(s.rows, vec![2, 3]);
    }

    #[test]
    fn weighted_sum_tracks_full_sum() {
        for seed in 0..10 {
            let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
            let g: Vec<f64> = (0..10_000).map(|_| rng.random::<f64>() + 0.5).collect();
            let full: f64 = g.iter().sum();
            let s = goss_sample(&g, 0.2, 0.1, seed).unwrap();
            let est: f64 = s.rows.iter().zip(&s.weights).map(|(&r, w)| g[r as usize] * w).sum();
            assert!((est - full).abs() / full < 0.2, "seed {seed}: {est} vs {full}");
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let g: Vec<f64> = (0..500).map(|i| ((i * 37) % 101) as f64).collect();
        assert_eq!(
            goss_sample(&g, 0.1, 0.2, 5).unwrap(),
            goss_sample(&g, 0.1, 0.2, 5).unwrap()
        );
    }
}
