use rayon::prelude::*;

use super::grid::GridFunction;
use crate::error::Result;

/// Smallest `k` with `k^2 >= s`.
fn ceil_sqrt(s: u64) -> usize {
    let mut k = (s as f64).sqrt() as u64;
    while k * k < s {
        k += 1;
    }
    while k > 0 && (k - 1) * (k - 1) >= s {
        k -= 1;
    }
    k as usize
}

/// Discrete Hardy–Littlewood maximal function.
///
/// `Mu(x)` is the largest average of `|u|` over the node sets
/// `{y : |y - x| <= k h}`, `k = 0, 1, ..., ceil(diam / h)`, clipped to the
/// active nodes. Ball membership is decided on integer index offsets, so it
/// is exact. The `k = 0` ball is the node itself.
pub fn maximal_function(u: &GridFunction) -> Result<GridFunction> {
    let grid = u.grid();
    let n = grid.dim();
    let active: Vec<(Vec<i64>, f64)> = grid
        .active_nodes()
        .map(|i| {
            let idx = grid.multi_index(i).into_iter().map(|k| k as i64).collect();
            (idx, u.values()[i].abs())
        })
        .collect();
    let diam_sq: u64 = grid.shape().iter().map(|&s| ((s - 1) * (s - 1)) as u64).sum();
    let buckets = ceil_sqrt(diam_sq) + 1;

    let maxima: Vec<f64> = active
        .par_iter()
        .map(|(xi, _)| {
            let mut sums = vec![0.0; buckets];
            let mut counts = vec![0usize; buckets];
            for (yi, v) in &active {
                let mut s = 0u64;
                for j in 0..n {
                    let d = xi[j] - yi[j];
                    s += (d * d) as u64;
                }
                let k = ceil_sqrt(s);
                sums[k] += v;
                counts[k] += 1;
            }
            let mut best = 0.0_f64;
            let mut sum = 0.0;
            let mut count = 0usize;
            for k in 0..buckets {
                sum += sums[k];
                count += counts[k];
                if count > 0 {
                    best = best.max(sum / count as f64);
                }
            }
            best
        })
        .collect();

    let mut values = vec![0.0; grid.len()];
    for (i, m) in grid.active_nodes().zip(maxima) {
        values[i] = m;
    }
    GridFunction::new(grid.clone(), values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sobolev::Grid;

    #[test]
    fn ceil_sqrt_is_exact() {
        assert_eq!(ceil_sqrt(0), 0);
        assert_eq!(ceil_sqrt(1), 1);
        assert_eq!(ceil_sqrt(2), 2);
        assert_eq!(ceil_sqrt(4), 2);
        assert_eq!(ceil_sqrt(5), 3);
        assert_eq!(ceil_sqrt(1 << 40), 1 << 20);
    }

    #[test]
    fn constant_is_fixed() {
        let g = Grid::new(vec![0.0, 0.0], 0.1, vec![7, 5]).unwrap();
        let u = GridFunction::constant(&g, -2.5).unwrap();
        let m = maximal_function(&u).unwrap();
        assert!(m.values().iter().all(|v| *v == 2.5));
    }

    #[test]
    fn left_half_indicator_by_enumeration() {
        // 8 nodes on [0,1], indicator of the left half; brute-force over radii
        let cells = 8;
        let g = Grid::new(vec![0.0625], 0.125, vec![cells]).unwrap();
        let u = GridFunction::from_fn(&g, |x| if x[0] < 0.5 { 1.0 } else { 0.0 }).unwrap();
        let m = maximal_function(&u).unwrap();
        for i in 0..cells {
            let mut best = 0.0_f64;
            for r in 0..=cells {
                let (mut s, mut c) = (0.0, 0.0);
                for j in 0..cells {
                    if (i as i64 - j as i64).unsigned_abs() as usize <= r {
                        s += u.values()[j];
                        c += 1.0;
                    }
                }
                best = best.max(s / c);
            }
            assert_eq!(m.values()[i], best, "node {i}");
        }
        // rightmost node: best ball is the whole interval, overlap 1/2
        assert_eq!(m.values()[cells - 1], 0.5);
    }

    #[test]
    fn dominates_absolute_value() {
        let g = Grid::unit_ball(2, 12).unwrap();
        let u = GridFunction::from_fn(&g, |x| (5.0 * x[0]).sin() * x[1]).unwrap();
        let m = maximal_function(&u).unwrap();
        for i in g.active_nodes() {
            assert!(m.values()[i] >= u.values()[i].abs());
        }
    }
}
