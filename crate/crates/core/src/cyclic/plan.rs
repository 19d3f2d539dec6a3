use serde::Serialize;

use super::{CyclicError, Result};

/// Relative tolerance of the product identity.
pub const PRODUCT_TOL: f64 = 1e-9;
/// Slack allowed above `s_max` for accumulated rounding.
const FACTOR_SLACK: f64 = 1e-12;
/// Greedy remainders below this are folded into the previous factor when possible.
const MERGE_BELOW: f64 = 1.2;

/// Ordered per-cycle factors whose product is the total scale.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScalePlan {
    pub total: f64,
    pub factors: Vec<f64>,
    pub s_max: f64,
}

impl ScalePlan {
    pub fn product(&self) -> f64 {
        self.factors.iter().product()
    }

    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    /// Cumulative output dims after each cycle, with the last one fixed at
    /// `round(h * total) x round(w * total)`.
    pub fn cycle_dims(&self, h: usize, w: usize) -> Vec<(usize, usize)> {
        let mut cum = 1.0;
        let mut dims: Vec<(usize, usize)> = self
            .factors
            .iter()
            .map(|f| {
                cum *= f;
                (round_pos(h as f64 * cum), round_pos(w as f64 * cum))
            })
            .collect();
        if let Some(last) = dims.last_mut() {
            *last = (round_pos(h as f64 * self.total), round_pos(w as f64 * self.total));
        }
        dims
    }
}

fn round_pos(v: f64) -> usize {
    crate::imagecore::round_dim(v).max(1)
}

fn check_factor(f: f64, s_max: f64) -> Result<()> {
    if !(f.is_finite() && f > 1.0 && f <= s_max + FACTOR_SLACK) {
        return Err(CyclicError::FactorOutOfRange { factor: f, s_max });
    }
    Ok(())
}

/// Builds a plan for total scale `s`. Explicit factors are validated and kept
/// as given; otherwise `s_max` is repeated while the remainder exceeds it.
pub fn plan_scales(s: f64, s_max: f64, explicit: Option<&[f64]>) -> Result<ScalePlan> {
    if !(s.is_finite() && s > 1.0) {
        return Err(CyclicError::ScaleTooSmall(s));
    }
    if !(s_max.is_finite() && s_max > 1.0) {
        return Err(CyclicError::FactorOutOfRange { factor: s_max, s_max });
    }
    let factors = match explicit {
        Some(list) => {
            if list.is_empty() {
                return Err(CyclicError::EmptyPlan);
            }
            for &f in list {
                check_factor(f, s_max)?;
            }
            let product: f64 = list.iter().product();
            if ((product - s) / s).abs() > PRODUCT_TOL {
                return Err(CyclicError::ProductMismatch { product, scale: s });
            }
            list.to_vec()
        }
        None => greedy(s, s_max),
    };
    Ok(ScalePlan { total: s, factors, s_max })
}

fn greedy(s: f64, s_max: f64) -> Vec<f64> {
    let mut factors = Vec::new();
    let mut remaining = s;
    while remaining > s_max * (1.0 + FACTOR_SLACK) {
        factors.push(s_max);
        remaining /= s_max;
    }
    if remaining > 1.0 + FACTOR_SLACK || factors.is_empty() {
        factors.push(remaining);
    }
    let n = factors.len();
    if n >= 2 && factors[n - 1] < MERGE_BELOW && factors[n - 2] * factors[n - 1] <= s_max {
        let last = factors.pop().expect("n >= 2");
        *factors.last_mut().expect("n >= 2") *= last;
    }
    // The last factor absorbs floating-point drift so the product is s.
    let n = factors.len();
    let head: f64 = factors[..n - 1].iter().product();
    factors[n - 1] = s / head;
    factors
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn reference_sequences_are_accepted() {
        let p = plan_scales(18.0, 4.0, Some(&[4.0, 3.0, 1.5])).unwrap();
        assert_eq!(p.factors, vec![4.0, 3.0, 1.5]);
        let p = plan_scales(30.0, 4.0, Some(&[4.0, 3.0, 2.5])).unwrap();
        assert_eq!(p.factors, vec![4.0, 3.0, 2.5]);
    }

    #[test]
    fn greedy_examples() {
        assert_eq!(plan_scales(2.0, 4.0, None).unwrap().factors, vec![2.0]);
        assert_eq!(plan_scales(18.0, 4.0, None).unwrap().factors, vec![4.0, 4.0, 1.125]);
        assert_eq!(plan_scales(16.0, 4.0, None).unwrap().factors, vec![4.0, 4.0]);
        assert_eq!(plan_scales(4.0, 4.0, None).unwrap().factors, vec![4.0]);
        // Greedy heads are all s_max, so a small remainder can never be merged.
        let p = plan_scales(3.3, 3.0, None).unwrap();
        assert_eq!(p.factors.len(), 2);
        assert!((p.factors[1] - 1.1).abs() < 1e-12);
    }

    #[test]
    fn explicit_errors() {
        assert!(matches!(plan_scales(1.0, 4.0, None), Err(CyclicError::ScaleTooSmall(_))));
        assert!(matches!(plan_scales(0.5, 4.0, Some(&[2.0])), Err(CyclicError::ScaleTooSmall(_))));
        assert!(matches!(
            plan_scales(18.0, 4.0, Some(&[4.0, 3.0, 1.4])),
            Err(CyclicError::ProductMismatch { .. })
        ));
        assert!(matches!(
            plan_scales(20.0, 4.0, Some(&[5.0, 4.0])),
            Err(CyclicError::FactorOutOfRange { .. })
        ));
        assert!(matches!(
            plan_scales(2.0, 4.0, Some(&[2.0, 1.0])),
            Err(CyclicError::FactorOutOfRange { .. })
        ));
        assert!(matches!(plan_scales(2.0, 4.0, Some(&[])), Err(CyclicError::EmptyPlan)));
    }

    #[test]
    fn cycle_dims_examples() {
        let p = plan_scales(18.0, 4.0, Some(&[4.0, 3.0, 1.5])).unwrap();
        assert_eq!(p.cycle_dims(16, 16), vec![(64, 64), (192, 192), (288, 288)]);
        let p = plan_scales(4.7, 4.0, None).unwrap();
        assert_eq!(p.cycle_dims(17, 17).last(), Some(&(80, 80)));
    }

    proptest! {
        #[test]
        fn greedy_plans_are_valid(s in 1.0001f64..=100.0, s_max in prop::sample::select(vec![2.0, 3.0, 4.0])) {
            let p = plan_scales(s, s_max, None).unwrap();
            prop_assert!(((p.product() - s) / s).abs() <= PRODUCT_TOL);
            for &f in &p.factors {
                prop_assert!(f > 1.0 && f <= s_max + 1e-12, "{:?}", p.factors);
            }
        }

        #[test]
        fn final_dims_are_exact(h in 1usize..200, w in 1usize..200, s in 1.01f64..40.0) {
            let p = plan_scales(s, 4.0, None).unwrap();
            let dims = p.cycle_dims(h, w);
            prop_assert_eq!(dims.len(), p.len());
            let want = (
                crate::imagecore::round_dim(h as f64 * s).max(1),
                crate::imagecore::round_dim(w as f64 * s).max(1),
            );
            prop_assert_eq!(*dims.last().unwrap(), want);
        }
    }
}
