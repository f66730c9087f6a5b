use super::error::AutodiffError;
use super::tape::Tape;
use super::vector::{GradVector, ParamVector};

/// Gradient by central finite differences over every coordinate.
///
/// Uses only the forward pass — `(L(theta + h e_i) - L(theta - h e_i)) / 2h`
/// — so it is an oracle for [`Tape::backward`] that shares no reverse-mode
/// code. The tape is left holding the values of the last probe; re-run
/// `forward` before calling `backward` on it.
pub fn finite_difference_gradient(
    tape: &mut Tape,
    params: &ParamVector,
    h: f64,
) -> Result<GradVector, AutodiffError> {
    let mut grad = GradVector::zeros(params.map());
    let mut probe = params.clone();
    for i in 0..params.len() {
        let original = params.as_slice()[i];
        probe.as_mut_slice()[i] = original + h;
        let plus = tape.forward(&probe)?;
        probe.as_mut_slice()[i] = original - h;
        let minus = tape.forward(&probe)?;
        probe.as_mut_slice()[i] = original;
        grad.as_mut_slice()[i] = (plus - minus) / (2.0 * h);
    }
    Ok(grad)
}

/// Largest guarded relative error between two gradients:
/// `max_i |a_i - b_i| / max(1, |a_i|, |b_i|)`.
pub fn max_relative_error(a: &GradVector, b: &GradVector) -> Result<f64, AutodiffError> {
    // dot is only used for the map check; the value is discarded.
    a.dot(b)?;
    let mut worst = 0.0_f64;
    for (&x, &y) in a.as_slice().iter().zip(b.as_slice()) {
        let err = (x - y).abs() / x.abs().max(y.abs()).max(1.0);
        worst = worst.max(err);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::tensor::Tensor;
    use crate::autodiff::vector::SegmentMap;

    #[test]
    fn finite_differences_recover_quadratic_gradient() {
        // L = mean((theta - c)^2), dL/dtheta_i = 2 (theta_i - c_i) / n.
        let map = SegmentMap::new(&[("theta", 1, 3)]).unwrap();
        let params = ParamVector::from_data(&map, vec![0.4, -1.1, 2.0]).unwrap();
        let c = Tensor::new(1, 3, vec![1.0, 0.0, -1.0]).unwrap();
        let mut tape = Tape::new();
        let t = tape.param("theta", 1, 3).unwrap();
        let loss = tape.squared_error_mean(t, c).unwrap();
        tape.set_loss(loss).unwrap();

        let fd = finite_difference_gradient(&mut tape, &params, 1e-5).unwrap();
        let expected = [2.0 * (0.4 - 1.0) / 3.0, 2.0 * (-1.1) / 3.0, 2.0 * 3.0 / 3.0];
        for (g, e) in fd.as_slice().iter().zip(&expected) {
            assert!((g - e).abs() < 1e-9, "fd {} vs analytic {}", g, e);
        }

        tape.forward(&params).unwrap();
        let ad = tape.backward().unwrap();
        assert!(max_relative_error(&ad, &fd).unwrap() < 1e-9);
    }
}
