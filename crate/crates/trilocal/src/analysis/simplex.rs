//! Euclidean projection onto the probability simplex.

/// Projects `x` in place onto `{ p : p_i >= 0, sum p_i = 1 }` using the
/// sorted-threshold construction.
pub fn project_to_simplex(x: &mut [f64]) {
    let n = x.len();
    debug_assert!(n > 0);
    let mut sorted = x.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    let mut rho = 0;
    for (k, &v) in sorted.iter().enumerate() {
        cumsum += v;
        let candidate = (cumsum - 1.0) / (k + 1) as f64;
        if v - candidate > 0.0 {
            theta = candidate;
            rho = k + 1;
        }
    }
    debug_assert!(rho > 0);
    for v in x.iter_mut() {
        *v = (*v - theta).max(0.0);
    }
}
