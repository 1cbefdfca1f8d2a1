//! Small numerical helpers shared across modules.

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = CompensatedSum::new();
        for x in iter {
            s.add(x);
        }
        s
    }
}

pub fn compensated_sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    iter.into_iter().collect::<CompensatedSum>().value()
}

/// Sample quantile of already-sorted data, linear interpolation between order
/// statistics (Hyndman-Fan type 7, the R / NumPy default).
///
/// Panics if `sorted` is empty.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty sample");
    let q = q.clamp(0.0, 1.0);
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Root of a strictly decreasing function on `(lo, hi)`.
///
/// `df` returns `(value, derivative)`. The bracket must satisfy
/// `f(lo) > 0 > f(hi)`. Bisection keeps the bracket; a Newton step is taken
/// whenever it lands strictly inside the current bracket. Stops when
/// `|f| < tol` or the bracket can no longer be split in f64.
pub(crate) fn decreasing_root<F>(mut lo: f64, mut hi: f64, tol: f64, df: F) -> f64
where
    F: Fn(f64) -> (f64, f64),
{
    let mut x = 0.5 * (lo + hi);
    for _ in 0..400 {
        let (v, d) = df(x);
        if v.abs() < tol {
            return x;
        }
        if v > 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let newton = if d < 0.0 && d.is_finite() { x - v / d } else { f64::NAN };
        let next = if newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if next == x || next <= lo || next >= hi {
            // bracket exhausted at f64 resolution
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                return x;
            }
            x = mid;
        } else {
            x = next;
        }
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn type7_matches_numpy_convention() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile_sorted(&xs, 0.0), 1.0);
        assert_eq!(quantile_sorted(&xs, 1.0), 4.0);
        assert!((quantile_sorted(&xs, 0.5) - 2.5).abs() < 1e-15);
        // numpy.quantile([1,2,3,4], 0.1) == 1.3
        assert!((quantile_sorted(&xs, 0.1) - 1.3).abs() < 1e-12);
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut xs = vec![1e16, 1.0, -1e16];
        xs.extend(std::iter::repeat(1.0).take(10));
        assert_eq!(compensated_sum(xs), 11.0);
    }

    #[test]
    fn decreasing_root_finds_cube_root() {
        // f(x) = 2 - x^3, root at 2^(1/3)
        let r = decreasing_root(0.0, 2.0, 1e-14, |x| (2.0 - x * x * x, -3.0 * x * x));
        assert!((r - 2f64.cbrt()).abs() < 1e-13);
    }
}
