use crate::error::{Error, Result};

/// Running total of the privacy budget one client spends.
#[derive(Debug, Clone, PartialEq)]
pub struct BudgetLedger {
    limit: f64,
    spent: f64,
    charges: usize,
}

impl BudgetLedger {
    pub fn new(limit: f64) -> Self {
        BudgetLedger {
            limit,
            spent: 0.0,
            charges: 0,
        }
    }

    /// Records one report's budget; fails if the total would pass the limit
    /// by more than float slack.
    pub fn charge(&mut self, epsilon: f64) -> Result<()> {
        if !(epsilon >= 0.0) {
            return Err(Error::Argument(format!("negative budget charge {epsilon}")));
        }
        let next = self.spent + epsilon;
        if next > self.limit * (1.0 + 1e-9) {
            return Err(Error::Config(format!(
                "privacy budget exceeded: {next} > {}",
                self.limit
            )));
        }
        self.spent = next;
        self.charges += 1;
        Ok(())
    }

    pub fn spent(&self) -> f64 {
        self.spent
    }

    pub fn limit(&self) -> f64 {
        self.limit
    }

    pub fn charges(&self) -> usize {
        self.charges
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tenths_fit_exactly() {
        let mut l = BudgetLedger::new(1.0);
        for _ in 0..10 {
            l.charge(0.1).unwrap();
        }
        assert_eq!(l.charges(), 10);
        assert!(l.charge(0.01).is_err());
    }
}
