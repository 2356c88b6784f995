use localdirac_core::elimination::{
    g_s_relative, recover_two_component, TwoMixCumulants, TwoMixTuple,
};
use localdirac_core::moments::{
    local_dirac_moments, LocalDirac, LocalDiracMixture, MomentSequence,
};
use localdirac_core::recovery::{recover, RecoveryConfig};
use localdirac_core::Complex64 as C;
use proptest::prelude::*;

#[derive(Debug, Clone)]
struct Truth {
    xi: [f64; 2],
    lambda: f64,
    l1: f64,
    l2: f64,
}

impl Truth {
    fn moments(&self) -> MomentSequence<f64> {
        let mix = LocalDiracMixture::new(vec![
            LocalDirac::new(self.xi[0], vec![self.lambda, self.l1]),
            LocalDirac::new(self.xi[1], vec![1.0 - self.lambda, self.l2]),
        ])
        .unwrap();
        local_dirac_moments(&mix, 6)
    }

    fn matches(&self, t: &TwoMixTuple, tol: f64) -> bool {
        let near = |a: C, b: f64| (a - b).norm() <= tol * b.abs().max(1.0);
        let direct = near(t.xi1, self.xi[0])
            && near(t.xi2, self.xi[1])
            && near(t.lambda, self.lambda)
            && near(t.lambda1, self.l1)
            && near(t.lambda2, self.l2);
        let swapped = near(t.xi1, self.xi[1])
            && near(t.xi2, self.xi[0])
            && near(t.lambda, 1.0 - self.lambda)
            && near(t.lambda1, self.l2)
            && near(t.lambda2, self.l1);
        direct || swapped
    }
}

fn truth() -> impl Strategy<Value = Truth> {
    (
        -1.0..1.0f64,
        -1.0..1.0f64,
        0.2..0.8f64,
        -1.0..1.0f64,
        -1.0..1.0f64,
    )
        .prop_filter("points too close", |(a, b, ..)| (a - b).abs() >= 0.5)
        .prop_map(|(a, b, lambda, l1, l2)| Truth {
            xi: [a.min(b), a.max(b)],
            lambda,
            l1,
            l2,
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn agrees_with_general_recovery(t in truth()) {
        let m = t.moments();
        let rec = recover_two_component(&m, false).unwrap();
        let best = &rec.candidates[0];
        let general = recover(&m, 2, 1, &RecoveryConfig::default()).unwrap().mixture;
        let [a, b] = [&general.components()[0], &general.components()[1]];
        let from_general = TwoMixTuple {
            xi1: a.xi,
            xi2: b.xi,
            lambda: a.lambdas[0],
            lambda1: a.lambdas[1],
            lambda2: b.lambdas[1],
            alpha1: None,
            alpha2: None,
            m6_residual: 0.0,
        };
        let as_truth = Truth {
            xi: [best.xi1.re, best.xi2.re],
            lambda: best.lambda.re,
            l1: best.lambda1.re,
            l2: best.lambda2.re,
        };
        prop_assert!(as_truth.matches(&from_general, 1e-6), "{best:?} vs {from_general:?}");
    }

    #[test]
    fn g_s_vanishes_at_truth(t in truth()) {
        let k = TwoMixCumulants::from_moments(&t.moments()).unwrap();
        prop_assert!(g_s_relative(&k, C::new(t.xi[0] + t.xi[1], 0.0)) <= 1e-8);
    }

    #[test]
    fn candidates_contain_truth(t in truth()) {
        let rec = recover_two_component(&t.moments(), false).unwrap();
        prop_assert!(rec.candidates.len() <= 4);
        prop_assert!(rec.candidates.iter().any(|c| t.matches(c, 1e-6)), "{t:?} not among {:?}", rec.candidates);
    }
}
