use crate::RngStream;

/// Binary indexed tree over nonnegative weights with proportional sampling.
///
/// Used where propensity tables are large and only a few entries change per
/// event (nested Moran levels, individual-based populations).
#[derive(Clone, Debug)]
pub struct Fenwick {
    tree: Vec<f64>,
    values: Vec<f64>,
}

impl Fenwick {
    pub fn new(n: usize) -> Self {
        Self { tree: vec![0.0; n + 1], values: vec![0.0; n] }
    }

    pub fn from_values(values: &[f64]) -> Self {
        let mut f = Self::new(values.len());
        for (i, &v) in values.iter().enumerate() {
            f.set(i, v);
        }
        f
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, i: usize) -> f64 {
        self.values[i]
    }

    pub fn set(&mut self, i: usize, value: f64) {
        debug_assert!(value >= 0.0);
        let delta = value - self.values[i];
        self.values[i] = value;
        let mut k = i + 1;
        while k < self.tree.len() {
            self.tree[k] += delta;
            k += k & k.wrapping_neg();
        }
    }

    pub fn total(&self) -> f64 {
        let mut k = self.values.len();
        let mut s = 0.0;
        while k > 0 {
            s += self.tree[k];
            k &= k - 1;
        }
        s
    }

    /// Index `i` such that the prefix sum before `i` is `<= target` and the
    /// prefix sum through `i` exceeds it. Zero-weight entries are skipped.
    pub fn find(&self, mut target: f64) -> usize {
        let n = self.values.len();
        let mut pos = 0;
        let mut step = n.next_power_of_two();
        while step > 0 {
            let next = pos + step;
            if next <= n && self.tree[next] <= target {
                target -= self.tree[next];
                pos = next;
            }
            step >>= 1;
        }
        // `pos` is the count of entries fully below target; guard rounding
        let mut i = pos.min(n - 1);
        while self.values[i] <= 0.0 && i > 0 {
            i -= 1;
        }
        i
    }

    pub fn sample(&self, rng: &mut RngStream) -> usize {
        self.find(rng.uniform() * self.total())
    }

    /// Rebuild prefix sums from scratch to shed accumulated rounding.
    pub fn refresh(&mut self) {
        let values = std::mem::take(&mut self.values);
        *self = Self::from_values(&values);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sampling_matches_weights() {
        let mut f = Fenwick::from_values(&[1.0, 0.0, 3.0, 0.0, 4.0]);
        f.set(1, 2.0);
        assert!((f.total() - 10.0).abs() < 1e-12);
        let mut rng = RngStream::new(1, 1);
        let mut counts = [0usize; 5];
        let n = 200_000;
        for _ in 0..n {
            counts[f.sample(&mut rng)] += 1;
        }
        for (i, w) in [0.1, 0.2, 0.3, 0.0, 0.4].iter().enumerate() {
            let p = counts[i] as f64 / n as f64;
            assert!((p - w).abs() < 0.005, "{i}: {p} vs {w}");
        }
    }

    #[test]
    fn find_skips_zero_entries() {
        let f = Fenwick::from_values(&[0.0, 0.0, 1.0, 0.0]);
        assert_eq!(f.find(0.0), 2);
        assert_eq!(f.find(0.999), 2);
    }
}
