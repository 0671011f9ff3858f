use crate::scalar::Scalar;

/// Anything whose trainable parameters can be visited as flat slices, in a
/// stable slot order matching its gradient layout.
pub trait Parameterized<T> {
    fn param_slots(&mut self) -> Vec<&mut [T]>;
}

impl<T: Scalar> Parameterized<T> for crate::nn::Mlp<T> {
    fn param_slots(&mut self) -> Vec<&mut [T]> {
        self.param_slots_mut()
    }
}

/// Result of a finite-difference sweep.
#[derive(Debug, Clone, Copy)]
pub struct GradCheckReport<T> {
    pub max_rel_error: T,
    pub worst_slot: usize,
    pub worst_index: usize,
    pub checked: usize,
}

/// Compares analytic gradients against central finite differences of the
/// loss closure, perturbing a sampled subset of parameters (at most
/// `max_checks_per_slot` per slot, evenly strided). The closure must be
/// deterministic; disable dropout before calling.
///
/// The relative error of a pair (analytic `a`, numeric `n`) is
/// `|a - n| / max(|a|, |n|, 1e-6)`; the floor keeps comparisons of
/// near-zero gradients from amplifying finite-difference noise.
pub fn grad_check<T, M, F>(
    subject: &mut M,
    mut loss: F,
    analytic: &[Vec<T>],
    step: T,
    max_checks_per_slot: usize,
) -> GradCheckReport<T>
where
    T: Scalar,
    M: Parameterized<T>,
    F: FnMut(&mut M) -> T,
{
    let slot_lens: Vec<usize> = subject.param_slots().iter().map(|s| s.len()).collect();
    assert_eq!(
        slot_lens.len(),
        analytic.len(),
        "analytic gradient slot count must match the subject"
    );
    let floor = T::from_config(1e-6);
    let two = T::from_config(2.0);
    let mut report = GradCheckReport {
        max_rel_error: T::zero(),
        worst_slot: 0,
        worst_index: 0,
        checked: 0,
    };
    for (slot, &len) in slot_lens.iter().enumerate() {
        assert_eq!(analytic[slot].len(), len, "slot {slot} length mismatch");
        if len == 0 {
            continue;
        }
        let stride = len.div_ceil(max_checks_per_slot.max(1)).max(1);
        let mut index = 0;
        while index < len {
            let original = subject.param_slots()[slot][index];
            subject.param_slots()[slot][index] = original + step;
            let plus = loss(subject);
            subject.param_slots()[slot][index] = original - step;
            let minus = loss(subject);
            subject.param_slots()[slot][index] = original;
            let numeric = (plus - minus) / (two * step);
            let a = analytic[slot][index];
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(floor);
            if rel > report.max_rel_error {
                report.max_rel_error = rel;
                report.worst_slot = slot;
                report.worst_index = index;
            }
            report.checked += 1;
            index += stride;
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Params(Vec<f64>);

    impl Parameterized<f64> for Params {
        fn param_slots(&mut self) -> Vec<&mut [f64]> {
            vec![&mut self.0]
        }
    }

    #[test]
    fn linear_function_checks_to_machine_precision() {
        // f(p) = 2 p0 - 0.5 p1 + 3 p2
        let mut subject = Params(vec![0.7, -1.1, 0.2]);
        let analytic = vec![vec![2.0, -0.5, 3.0]];
        let report = grad_check(
            &mut subject,
            |p| 2.0 * p.0[0] - 0.5 * p.0[1] + 3.0 * p.0[2],
            &analytic,
            1e-5,
            usize::MAX,
        );
        assert!(report.max_rel_error <= 1e-10, "{:?}", report);
        assert_eq!(report.checked, 3);
    }

    #[test]
    fn corrupted_gradient_is_flagged() {
        let mut subject = Params(vec![0.7, -1.1, 0.2]);
        let analytic = vec![vec![2.0, -0.5 * 2.0, 3.0]];
        let report = grad_check(
            &mut subject,
            |p| 2.0 * p.0[0] - 0.5 * p.0[1] + 3.0 * p.0[2],
            &analytic,
            1e-5,
            usize::MAX,
        );
        assert!(report.max_rel_error > 1e-2, "{:?}", report);
        assert_eq!(report.worst_index, 1);
    }

    #[test]
    fn sampling_respects_the_per_slot_budget() {
        let mut subject = Params(vec![1.0; 100]);
        let analytic = vec![vec![1.0; 100]];
        let report = grad_check(
            &mut subject,
            |p| p.0.iter().sum::<f64>(),
            &analytic,
            1e-5,
            10,
        );
        assert!(report.checked <= 10);
        assert!(report.max_rel_error <= 1e-9);
    }
}
