//! How far apart do two perturbations land on the loss surface?
//!
//! Given two candidate perturbations of the same parameters (for example an
//! approximate one and an exact one), we compare the measured loss difference
//! between the two perturbed points against its first-order prediction from a
//! single gradient. For perturbations on a common sphere we also compare the
//! straight-line distance between them with the arc length implied by their
//! angle, which upper-bounds how far apart they can drift at a given radius.

use crate::autodiff::{GradVector, ParamVector, Tape};

use super::similarity::cosine_similarity;
use super::DiagnosticsError;

/// Measured and predicted loss gap between two perturbed points.
///
/// Returns `(measured, predicted)` where
/// `measured = L(params + eps_a) - L(params + eps_b)` comes from two true
/// loss evaluations, and `predicted = <eps_a - eps_b, grad L(params)>` from
/// one gradient and one dot product. On a surface with bounded curvature the
/// two differ by at most `C/2 * (||eps_a|| + ||eps_b||)^2`.
pub fn taylor_gap(
    tape: &Tape,
    params: &ParamVector,
    eps_a: &GradVector,
    eps_b: &GradVector,
) -> Result<(f64, f64), DiagnosticsError> {
    let mut probe = tape.clone();
    let loss_a = probe.forward(&params.axpy(1.0, eps_a)?)?;
    let loss_b = probe.forward(&params.axpy(1.0, eps_b)?)?;
    probe.forward(params)?;
    let grad = probe.backward()?;
    let diff = eps_a.axpy(-1.0, eps_b)?;
    Ok((loss_a - loss_b, diff.dot(&grad)?))
}

/// Straight-line and along-the-sphere distances between two perturbations of
/// radius `rho`: returns `(chord, arc)` with `chord = ||eps_a - eps_b||` and
/// `arc = rho * angle(eps_a, eps_b)`. For points on a common sphere the chord
/// never exceeds the arc, so the arc is a convenient analytic bound.
pub fn chord_and_arc(
    eps_a: &GradVector,
    eps_b: &GradVector,
    rho: f64,
) -> Result<(f64, f64), DiagnosticsError> {
    if !(rho.is_finite() && rho > 0.0) {
        return Err(DiagnosticsError::Input(format!(
            "sphere radius must be finite and positive, got {rho}"
        )));
    }
    let chord = eps_a.axpy(-1.0, eps_b)?.norm2();
    let angle = cosine_similarity(eps_a, eps_b)?.acos();
    Ok((chord, rho * angle))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::SegmentMap;
    use crate::models::QuadraticBowl;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn random_vector(map: &std::sync::Arc<SegmentMap>, rng: &mut StdRng, scale: f64) -> GradVector {
        let data = (0..map.total_len())
            .map(|_| rng.random_range(-1.0..1.0) * scale)
            .collect();
        GradVector::from_data(map, data).unwrap()
    }

    #[test]
    fn identical_perturbations_give_exactly_zero_gaps() {
        let bowl = QuadraticBowl::standard(3).unwrap();
        let tape = bowl.build_tape().unwrap();
        let params = ParamVector::from_data(bowl.map(), vec![0.5, -0.5, 1.0]).unwrap();
        let eps = GradVector::from_data(bowl.map(), vec![0.01, 0.02, -0.01]).unwrap();
        let (measured, predicted) = taylor_gap(&tape, &params, &eps, &eps).unwrap();
        assert_eq!(measured, 0.0);
        assert_eq!(predicted, 0.0);
    }

    #[test]
    fn quadratic_gap_error_matches_the_curvature_term() {
        // On L = mean((theta - c)^2) the second-order expansion is exact:
        //   measured - predicted = (||eps_a||^2 - ||eps_b||^2) / n,
        // which also keeps it inside the generic curvature bound
        //   C/2 * (||eps_a|| + ||eps_b||)^2 with C = 2/n.
        let bowl = QuadraticBowl::standard(4).unwrap();
        let tape = bowl.build_tape().unwrap();
        let mut rng = StdRng::seed_from_u64(31);
        for _ in 0..50 {
            let params = random_vector(bowl.map(), &mut rng, 1.5);
            let eps_a = random_vector(bowl.map(), &mut rng, 0.05);
            let eps_b = random_vector(bowl.map(), &mut rng, 0.05);
            let (measured, predicted) = taylor_gap(&tape, &params, &eps_a, &eps_b).unwrap();

            let n = params.len() as f64;
            let exact_remainder =
                (eps_a.dot(&eps_a).unwrap() - eps_b.dot(&eps_b).unwrap()) / n;
            assert!((measured - predicted - exact_remainder).abs() < 1e-14);

            let radius_sum = eps_a.norm2() + eps_b.norm2();
            let bound = 0.5 * bowl.curvature() * radius_sum * radius_sum;
            assert!((measured - predicted).abs() <= bound + 1e-15);
        }
    }

    #[test]
    fn chord_and_arc_match_hand_geometry() {
        let map = SegmentMap::new(&[("v", 1, 2)]).unwrap();
        let rho = 0.05;
        let a = GradVector::from_data(&map, vec![rho, 0.0]).unwrap();
        let b = GradVector::from_data(&map, vec![0.0, rho]).unwrap();
        let (chord, arc) = chord_and_arc(&a, &b, rho).unwrap();
        // Perpendicular radii: chord rho*sqrt(2), quarter-circle arc rho*pi/2.
        assert!((chord - rho * 2.0_f64.sqrt()).abs() < 1e-15);
        assert!((arc - rho * std::f64::consts::FRAC_PI_2).abs() < 1e-12);

        let c = GradVector::from_data(&map, vec![-rho, 0.0]).unwrap();
        let (chord, arc) = chord_and_arc(&a, &c, rho).unwrap();
        assert!((chord - 2.0 * rho).abs() < 1e-15);
        assert!((arc - rho * std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn chord_never_exceeds_arc_on_the_sphere() {
        let map = SegmentMap::new(&[("v", 1, 5)]).unwrap();
        let mut rng = StdRng::seed_from_u64(57);
        let rho = 0.05;
        for _ in 0..200 {
            let mut a = random_vector(&map, &mut rng, 1.0);
            let mut b = random_vector(&map, &mut rng, 1.0);
            if a.norm2() == 0.0 || b.norm2() == 0.0 {
                continue;
            }
            a = a.scale(rho / a.norm2());
            b = b.scale(rho / b.norm2());
            let (chord, arc) = chord_and_arc(&a, &b, rho).unwrap();
            assert!(chord <= arc + 1e-12, "chord {chord} > arc {arc}");
        }
    }

    #[test]
    fn chord_and_arc_reject_degenerate_inputs() {
        let map = SegmentMap::new(&[("v", 1, 2)]).unwrap();
        let a = GradVector::from_data(&map, vec![1.0, 0.0]).unwrap();
        let zero = GradVector::zeros(&map);
        assert!(chord_and_arc(&a, &zero, 0.05).is_err());
        assert!(chord_and_arc(&a, &a, 0.0).is_err());
        assert!(chord_and_arc(&a, &a, f64::NAN).is_err());
    }
}
