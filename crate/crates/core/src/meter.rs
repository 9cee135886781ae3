//! Step metering. Every metered routine charges its work through a
//! [`Meter`]; the budget is enforced here, not by the routine.

/// The budget ran out before the routine finished.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OutOfFuel;

#[derive(Debug, Clone)]
pub struct Meter {
    used: u64,
    fuel: u64,
}

impl Meter {
    pub fn new(fuel: u64) -> Self {
        Self { used: 0, fuel }
    }

    /// A meter that only counts.
    pub fn unbounded() -> Self {
        Self::new(u64::MAX)
    }

    pub fn tick(&mut self) -> Result<(), OutOfFuel> {
        self.tick_n(1)
    }

    /// Charge `k` steps. On exhaustion `used` saturates at `fuel`.
    pub fn tick_n(&mut self, k: u64) -> Result<(), OutOfFuel> {
        match self.used.checked_add(k) {
            Some(next) if next <= self.fuel => {
                self.used = next;
                Ok(())
            }
            _ => {
                self.used = self.fuel;
                Err(OutOfFuel)
            }
        }
    }

    pub fn used(&self) -> u64 {
        self.used
    }

    pub fn fuel(&self) -> u64 {
        self.fuel
    }

    pub fn remaining(&self) -> u64 {
        self.fuel - self.used
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exhaustion_saturates() {
        let mut m = Meter::new(5);
        assert!(m.tick_n(3).is_ok());
        assert_eq!(m.remaining(), 2);
        assert_eq!(m.tick_n(3), Err(OutOfFuel));
        assert_eq!(m.used(), 5);
        assert_eq!(m.tick(), Err(OutOfFuel));
    }

    #[test]
    fn exact_budget_is_allowed() {
        let mut m = Meter::new(4);
        for _ in 0..4 {
            m.tick().unwrap();
        }
        assert_eq!(m.used(), 4);
        assert!(m.tick().is_err());
    }

    #[test]
    fn unbounded_does_not_overflow() {
        let mut m = Meter::unbounded();
        m.tick_n(u64::MAX - 1).unwrap();
        m.tick().unwrap();
        assert!(m.tick().is_err());
    }
}
