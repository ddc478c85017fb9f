use rand::seq::SliceRandom;
use rand::Rng;

use super::SearchBox;

/// `m` points with exactly one point per equal-width stratum on every axis,
/// strictly inside the box.
pub fn latin_hypercube<R: Rng + ?Sized>(b: &SearchBox, m: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let d = b.dim();
    let mut points = vec![vec![0.0; d]; m];
    let mut strata: Vec<usize> = (0..m).collect();
    for axis in 0..d {
        strata.shuffle(rng);
        let (lo, hi) = (b.lower()[axis], b.upper()[axis]);
        let width = (hi - lo) / m as f64;
        for (p, &s) in points.iter_mut().zip(&strata) {
            let v = loop {
                let u: f64 = rng.gen();
                let v = lo + width * (s as f64 + u);
                if u > 0.0 && v > lo && v < hi {
                    break v;
                }
            };
            p[axis] = v;
        }
    }
    points
}
