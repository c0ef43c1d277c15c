//! Euclidean projection onto the probability simplex.

use nalgebra::DVector;

/// `argmin_x ||x - v||^2` over `{x >= 0, e'x = 1}` by the sort-based threshold rule.
pub fn project_simplex(v: &DVector<f64>) -> DVector<f64> {
    let n = v.len();
    if n == 0 {
        return DVector::zeros(0);
    }
    let mut sorted: Vec<f64> = v.iter().copied().collect();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (i, &u) in sorted.iter().enumerate() {
        cumsum += u;
        let candidate = (cumsum - 1.0) / (i as f64 + 1.0);
        if u - candidate > 0.0 {
            theta = candidate;
        }
    }
    v.map(|vi| (vi - theta).max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dvector;
    use proptest::prelude::*;

    #[test]
    fn known_projections() {
        assert_eq!(project_simplex(&dvector![0.5, 0.5]), dvector![0.5, 0.5]);
        assert_eq!(project_simplex(&dvector![2.0, 0.0]), dvector![1.0, 0.0]);
        let p = project_simplex(&dvector![0.0, 0.0, 0.0]);
        assert!((p - DVector::from_element(3, 1.0 / 3.0)).amax() < 1e-15);
    }

    proptest! {
        #[test]
        fn lands_on_simplex_and_is_optimal(v in prop::collection::vec(-3.0f64..3.0, 1..12)) {
            let v = DVector::from_vec(v);
            let p = project_simplex(&v);
            prop_assert!((p.sum() - 1.0).abs() < 1e-12);
            prop_assert!(p.iter().all(|&x| x >= 0.0));
            // variational inequality: (v - p)'(z - p) <= 0 at every vertex z
            let r = &v - &p;
            for i in 0..v.len() {
                let gap = r[i] - r.dot(&p);
                prop_assert!(gap <= 1e-10);
            }
        }
    }
}
