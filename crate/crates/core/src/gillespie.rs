use crate::{KernelError, Result, RngStream};

/// Propensities of the events enabled in the current state.
#[derive(Clone, Debug, PartialEq)]
pub struct EventRateTable {
    rates: Vec<f64>,
    total: f64,
}

impl EventRateTable {
    pub fn new(rates: Vec<f64>) -> Result<Self> {
        if let Some((i, r)) = rates.iter().enumerate().find(|(_, r)| !r.is_finite() || **r < 0.0) {
            return Err(KernelError::InvalidRates(format!("rate {i} is {r}; rates must be finite and nonnegative")));
        }
        let total = rates.iter().sum();
        Ok(Self { rates, total })
    }

    /// Replaces the propensities, reusing the buffer.
    pub fn refill(&mut self, rates: impl IntoIterator<Item = f64>) -> Result<()> {
        self.rates.clear();
        self.rates.extend(rates);
        self.total = 0.0;
        for (i, &r) in self.rates.iter().enumerate() {
            if !r.is_finite() || r < 0.0 {
                return Err(KernelError::InvalidRates(format!(
                    "rate {i} is {r}; rates must be finite and nonnegative"
                )));
            }
            self.total += r;
        }
        Ok(())
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn len(&self) -> usize {
        self.rates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rates.is_empty()
    }
}

/// One step of the direct method: exponential holding time at the total
/// rate, event chosen proportionally to its propensity.
pub fn gillespie_step(table: &EventRateTable, rng: &mut RngStream) -> Result<(usize, f64)> {
    if table.total <= 0.0 {
        return Err(KernelError::FrozenState);
    }
    let waiting = rng.exponential(table.total);
    let target = rng.uniform() * table.total;
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, &r) in table.rates.iter().enumerate() {
        if r > 0.0 {
            last_positive = i;
            acc += r;
            if target < acc {
                return Ok((i, waiting));
            }
        }
    }
    // rounding left `target` at the very top of the cumulative sum
    Ok((last_positive, waiting))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{ks_critical_value, ks_statistic};

    #[test]
    fn refill_matches_a_fresh_table() {
        let mut table = EventRateTable::new(vec![1.0, 2.0]).unwrap();
        table.refill([0.5, 0.0, 4.0]).unwrap();
        assert_eq!(table, EventRateTable::new(vec![0.5, 0.0, 4.0]).unwrap());
        assert!(table.refill([1.0, -1.0]).is_err());
    }

    #[test]
    fn single_positive_propensity() {
        let t = EventRateTable::new(vec![0.0, 5.0, 0.0]).unwrap();
        let mut rng = RngStream::new(1, 0);
        for _ in 0..1000 {
            assert_eq!(gillespie_step(&t, &mut rng).unwrap().0, 1);
        }
    }

    #[test]
    fn symmetric_rates_split_evenly() {
        let t = EventRateTable::new(vec![1.0, 1.0]).unwrap();
        let mut rng = RngStream::new(2, 0);
        let n = 100_000;
        let zeros = (0..n).filter(|_| gillespie_step(&t, &mut rng).unwrap().0 == 0).count();
        let freq = zeros as f64 / n as f64;
        assert!((freq - 0.5).abs() < 0.01, "freq = {freq}");
    }

    #[test]
    fn mean_waiting_time_is_inverse_total() {
        let t = EventRateTable::new(vec![2.0, 3.0]).unwrap();
        let mut rng = RngStream::new(3, 0);
        let n = 100_000;
        let mean: f64 = (0..n).map(|_| gillespie_step(&t, &mut rng).unwrap().1).sum::<f64>() / n as f64;
        assert!((mean - 0.2).abs() < 0.005, "mean = {mean}");
    }

    #[test]
    fn waiting_times_pass_ks() {
        let t = EventRateTable::new(vec![0.5, 1.5, 2.0]).unwrap();
        let mut rng = RngStream::new(4, 9);
        let n = 20_000;
        let xs: Vec<f64> = (0..n).map(|_| gillespie_step(&t, &mut rng).unwrap().1).collect();
        let d = ks_statistic(&xs, |x| 1.0 - (-4.0 * x).exp());
        assert!(d < ks_critical_value(n, 0.01), "D = {d}");
    }

    #[test]
    fn zero_total_is_frozen() {
        let t = EventRateTable::new(vec![0.0, 0.0]).unwrap();
        let mut rng = RngStream::new(5, 0);
        assert_eq!(gillespie_step(&t, &mut rng), Err(KernelError::FrozenState));
    }

    #[test]
    fn negative_rate_rejected() {
        assert!(EventRateTable::new(vec![1.0, -1e-3]).is_err());
        assert!(EventRateTable::new(vec![f64::NAN]).is_err());
    }

    #[test]
    fn total_matches_sum() {
        let rates = vec![0.1, 0.2, 0.3, 1e-9, 7.0];
        let t = EventRateTable::new(rates.clone()).unwrap();
        let s: f64 = rates.iter().sum();
        assert!((t.total() - s).abs() <= 1e-12 * s);
    }
}
