use std::fmt;
use std::str::FromStr;

/// Inclusive, evenly spaced time grid written `start:stop:count`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl TimeGrid {
    pub fn points(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.start];
        }
        let step = (self.stop - self.start) / (self.count - 1) as f64;
        (0..self.count)
            .map(|i| {
                if i + 1 == self.count {
                    self.stop
                } else {
                    self.start + step * i as f64
                }
            })
            .collect()
    }
}

impl fmt::Display for TimeGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.start, self.stop, self.count)
    }
}

impl FromStr for TimeGrid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        let [start, stop, count] = parts.as_slice() else {
            return Err(format!("expected start:stop:count, got '{s}'"));
        };
        let start: f64 = start
            .trim()
            .parse()
            .map_err(|e| format!("bad start '{start}': {e}"))?;
        let stop: f64 = stop
            .trim()
            .parse()
            .map_err(|e| format!("bad stop '{stop}': {e}"))?;
        let count: usize = count
            .trim()
            .parse()
            .map_err(|e| format!("bad count '{count}': {e}"))?;
        if !start.is_finite() || !stop.is_finite() || start < 0.0 {
            return Err(format!(
                "grid endpoints must be finite and start >= 0, got '{s}'"
            ));
        }
        if count == 0 {
            return Err("grid count must be at least 1".into());
        }
        if count > 1 && stop <= start {
            return Err(format!("grid must be strictly increasing, got '{s}'"));
        }
        Ok(Self { start, stop, count })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inclusive_endpoints() {
        let g: TimeGrid = "0:5:101".parse().unwrap();
        let p = g.points();
        assert_eq!(p.len(), 101);
        assert_eq!(p[0], 0.0);
        assert_eq!(p[100], 5.0);
        assert!((p[1] - 0.05).abs() < 1e-15);
        assert!(p.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn single_point() {
        let g: TimeGrid = "2:2:1".parse().unwrap();
        assert_eq!(g.points(), vec![2.0]);
    }

    #[test]
    fn rejects_malformed() {
        for bad in ["0:5", "a:1:3", "0:5:0", "3:1:4", "-1:2:3", "0:inf:3"] {
            assert!(bad.parse::<TimeGrid>().is_err(), "{bad}");
        }
    }
}
