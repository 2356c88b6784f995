use localdirac_core::hankel::{kernel_polynomial, moment_matrix, numeric_rank, DEFAULT_RANK_TOL};
use localdirac_core::moments::{
    local_dirac_moments, LocalDirac, LocalDiracMixture, MomentSequence,
};
use proptest::prelude::*;

fn separated(r: usize, gap: f64) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0..1.0f64, r)
        .prop_map(|mut v| {
            v.sort_by(f64::total_cmp);
            v
        })
        .prop_filter("points too close", move |v| {
            v.windows(2).all(|w| w[1] - w[0] >= gap)
        })
}

/// `(r, l, mixture)` with unit-scale weights and `(l+1)r ≤ 4`. Larger
/// confluent systems at gap 0.1 have singular value ratios below 1e-10.
fn instance() -> impl Strategy<Value = (usize, usize, LocalDiracMixture<f64>)> {
    (1usize..=3, 0usize..=3)
        .prop_filter("width above 4", |(r, l)| (l + 1) * r <= 4)
        .prop_flat_map(|(r, l)| {
            (
                separated(r, 0.1),
                prop::collection::vec(prop::collection::vec(0.5..1.5f64, l + 1), r),
            )
                .prop_map(move |(xs, ws)| {
                    let comps = xs
                        .into_iter()
                        .zip(ws)
                        .map(|(x, w)| LocalDirac::new(x, w))
                        .collect();
                    (r, l, LocalDiracMixture::new(comps).unwrap())
                })
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn hankel_structure(v in prop::collection::vec(-5.0..5.0f64, 1..14), a in 0usize..6) {
        let m = MomentSequence::new(v).unwrap();
        let b = m.degree().saturating_sub(a);
        prop_assume!(a + b <= m.degree());
        let h = moment_matrix(&m, a, b).unwrap();
        for i in 0..a {
            for j in 1..=b {
                prop_assert_eq!(h.get(i, j), h.get(i + 1, j - 1));
            }
        }
    }

    #[test]
    fn rank_stabilizes((r, l, mix) in instance()) {
        let width = (l + 1) * r;
        let m = local_dirac_moments(&mix, 2 * (width + 2));
        for s in width..=width + 2 {
            let h = moment_matrix(&m, s, s).unwrap();
            prop_assert_eq!(numeric_rank(&h, DEFAULT_RANK_TOL), width, "s = {}", s);
        }
    }

    #[test]
    fn kernel_annihilates((r, l, mix) in instance()) {
        let width = (l + 1) * r;
        let m = local_dirac_moments(&mix, 2 * width + 1);
        let s = width + 1;
        let q = kernel_polynomial(&m, s, DEFAULT_RANK_TOL).unwrap();
        prop_assert_eq!(q.len(), width + 1);
        let deg = q.len() - 1;
        for a in 0..=(m.degree() - deg) {
            let h = moment_matrix(&m, a, deg).unwrap();
            for v in h.apply(&q).unwrap() {
                prop_assert!(v.abs() <= 1e-8 * m.scale());
            }
        }
    }
}
