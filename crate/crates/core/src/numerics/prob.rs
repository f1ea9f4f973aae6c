use super::Scalar;
use crate::error::{Error, Result};

/// Floor applied to probabilities before taking logs.
pub const PROB_FLOOR: f64 = 1e-12;

/// Numerically stable softmax (max-subtracted).
pub fn softmax<T: Scalar>(logits: &[T]) -> Result<Vec<T>> {
    if logits.is_empty() {
        return Err(Error::invalid("softmax of an empty vector"));
    }
    if logits.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("softmax input".into()));
    }
    let mut out = logits.to_vec();
    softmax_in_place(&mut out);
    Ok(out)
}

/// In-place softmax for a slice already known to be finite and non-empty.
pub fn softmax_in_place<T: Scalar>(xs: &mut [T]) {
    let max = xs.iter().copied().fold(T::neg_infinity(), T::max);
    let mut sum = T::zero();
    for x in xs.iter_mut() {
        *x = (*x - max).exp();
        sum = sum + *x;
    }
    let inv = T::one() / sum;
    xs.iter_mut().for_each(|x| *x = *x * inv);
}

/// Softmax applied independently to each `width`-sized row.
pub fn softmax_rows<T: Scalar>(data: &mut [T], width: usize) {
    for row in data.chunks_exact_mut(width) {
        softmax_in_place(row);
    }
}

/// Negative log-probability of `target` in nats, with the probability floored at [`PROB_FLOOR`].
pub fn cross_entropy<T: Scalar>(probs: &[T], target: usize) -> Result<f64> {
    let p = probs
        .get(target)
        .ok_or_else(|| Error::invalid(format!("target {target} out of range for {} classes", probs.len())))?;
    Ok(-p.as_f64().max(PROB_FLOOR).ln())
}

pub fn argmax<T: Scalar>(xs: &[T]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate() {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn uniform_from_equal_logits() {
        let p = softmax(&[0.0f64, 0.0, 0.0]).unwrap();
        for x in p {
            assert!((x - 1.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn large_logits_stay_finite() {
        let p = softmax(&[1000.0f64, 1000.0 - 2f64.ln()]).unwrap();
        assert!((p[0] - 2.0 / 3.0).abs() < 1e-12);
        assert!((p[1] - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn log_counts_normalize_to_proportions() {
        // exp(ln k) / (1+2+3+4) = k / 10
        let logits: Vec<f64> = [1.0f64, 2.0, 3.0, 4.0].iter().map(|x| x.ln()).collect();
        let p = softmax(&logits).unwrap();
        for (got, want) in p.iter().zip([0.1, 0.2, 0.3, 0.4]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn empty_and_nonfinite_rejected() {
        assert!(matches!(softmax::<f32>(&[]), Err(Error::InvalidArgument(_))));
        assert!(softmax(&[f64::NAN, 1.0]).is_err());
    }

    #[test]
    fn cross_entropy_cases() {
        let u = [0.25f64; 4];
        assert!((cross_entropy(&u, 2).unwrap() - 4f64.ln()).abs() < 1e-12);
        assert_eq!(cross_entropy(&[0.0f64, 1.0], 1).unwrap(), 0.0);
        let clamped = cross_entropy(&[0.0f64, 1.0], 0).unwrap();
        assert!((clamped - 27.631021115928547).abs() < 1e-9);
        assert!(cross_entropy(&u, 4).is_err());
    }

    proptest! {
        #[test]
        fn sums_to_one_and_shift_invariant(
            v in prop::collection::vec(-50.0f64..50.0, 1..40),
            shift in -100.0f64..100.0,
        ) {
            let p = softmax(&v).unwrap();
            let total: f64 = p.iter().sum();
            prop_assert!((total - 1.0).abs() < 1e-6);
            let shifted: Vec<f64> = v.iter().map(|x| x + shift).collect();
            let q = softmax(&shifted).unwrap();
            for (a, b) in p.iter().zip(&q) {
                prop_assert!((a - b).abs() < 1e-6);
            }
        }

        #[test]
        fn order_preserving(v in prop::collection::vec(-50.0f32..50.0, 2..20)) {
            let p = softmax(&v).unwrap();
            for i in 0..v.len() {
                for j in 0..v.len() {
                    if v[i] > v[j] {
                        prop_assert!(p[i] >= p[j]);
                    }
                }
            }
        }
    }
}
