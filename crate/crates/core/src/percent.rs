use std::fmt;

use serde::{Serialize, Serializer};

/// An exact ratio `part / whole` shown as a percentage.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Percent {
    part: u64,
    whole: u64,
}

impl Percent {
    /// `None` when `whole` is zero.
    pub fn of(part: usize, whole: usize) -> Option<Self> {
        (whole > 0).then_some(Percent {
            part: part as u64,
            whole: whole as u64,
        })
    }

    pub fn part(&self) -> u64 {
        self.part
    }

    pub fn whole(&self) -> u64 {
        self.whole
    }

    pub fn value(&self) -> f64 {
        self.part as f64 * 100.0 / self.whole as f64
    }

    /// Hundredths of a percent, rounded half to even.
    pub fn hundredths(&self) -> u64 {
        let scaled = u128::from(self.part) * 10_000;
        let whole = u128::from(self.whole);
        let (q, r) = (scaled / whole, scaled % whole);
        let round_up = match (2 * r).cmp(&whole) {
            std::cmp::Ordering::Greater => true,
            std::cmp::Ordering::Equal => q % 2 == 1,
            std::cmp::Ordering::Less => false,
        };
        (q + u128::from(round_up)) as u64
    }

    /// Two decimals without the percent sign, e.g. `32.00`.
    pub fn to_fixed(&self) -> String {
        let h = self.hundredths();
        format!("{}.{:02}", h / 100, h % 100)
    }
}

impl fmt::Display for Percent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}%", self.to_fixed())
    }
}

impl Serialize for Percent {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_f64(self.value())
    }
}
