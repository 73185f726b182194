//! Deterministic direction sets on the unit sphere.

use std::f64::consts::PI;

/// Van der Corput radical inverse in base 2.
pub fn van_der_corput(mut i: usize) -> f64 {
    let mut inv = 0.5;
    let mut acc = 0.0;
    while i > 0 {
        if i & 1 == 1 {
            acc += inv;
        }
        inv *= 0.5;
        i >>= 1;
    }
    acc
}

/// Default fan: two endpoints in 1D, 64 equispaced directions in 2D,
/// 128 spherical Fibonacci points in 3D.
pub fn standard_fan(n: usize) -> Vec<Vec<f64>> {
    match n {
        1 => vec![vec![1.0], vec![-1.0]],
        2 => circle_fan(64),
        3 => fibonacci_sphere(128),
        _ => {
            let mut fan = Vec::with_capacity(2 * n);
            for j in 0..n {
                for s in [1.0, -1.0] {
                    let mut v = vec![0.0; n];
                    v[j] = s;
                    fan.push(v);
                }
            }
            fan
        }
    }
}

/// `count` equispaced unit vectors at angles `2 pi i / count`.
pub fn circle_fan(count: usize) -> Vec<Vec<f64>> {
    (0..count)
        .map(|i| {
            let theta = 2.0 * PI * i as f64 / count as f64;
            vec![theta.cos(), theta.sin()]
        })
        .collect()
}

pub fn fibonacci_sphere(count: usize) -> Vec<Vec<f64>> {
    let golden = PI * (3.0 - 5.0_f64.sqrt());
    (0..count)
        .map(|i| {
            let z = 1.0 - (2.0 * i as f64 + 1.0) / count as f64;
            let r = (1.0 - z * z).sqrt();
            let theta = golden * i as f64;
            vec![r * theta.cos(), r * theta.sin(), z]
        })
        .collect()
}

/// Nested sequence of line directions: every prefix of length `2^j` in 2D
/// is an equispaced set of `2^j` lines through the origin.
pub fn line_sequence(n: usize, count: usize) -> Vec<Vec<f64>> {
    match n {
        1 => (0..count)
            .map(|i| vec![if i % 2 == 0 { 1.0 } else { -1.0 }])
            .collect(),
        2 => (0..count)
            .map(|i| {
                let theta = PI * van_der_corput(i);
                vec![theta.cos(), theta.sin()]
            })
            .collect(),
        _ => {
            let mut dirs = fibonacci_sphere(2 * count.max(1));
            dirs.retain(|v| v[n.min(3) - 1] >= 0.0);
            let mut out: Vec<Vec<f64>> = dirs
                .into_iter()
                .map(|mut v| {
                    v.resize(n, 0.0);
                    v
                })
                .collect();
            out.truncate(count);
            out
        }
    }
}

pub(crate) fn euclid_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn van_der_corput_prefix() {
        let v: Vec<f64> = (0..4).map(van_der_corput).collect();
        assert_eq!(v, vec![0.0, 0.5, 0.25, 0.75]);
    }

    #[test]
    fn fans_are_unit() {
        for n in 1..=4 {
            for v in standard_fan(n) {
                assert!((euclid_norm(&v) - 1.0).abs() < 1e-12);
            }
        }
        assert_eq!(standard_fan(2).len(), 64);
        assert_eq!(standard_fan(3).len(), 128);
    }

    #[test]
    fn line_sequence_prefix_of_32_matches_half_fan() {
        let lines = line_sequence(2, 32);
        let fan = circle_fan(64);
        for line in &lines {
            assert!(fan[..32]
                .iter()
                .any(|f| (f[0] - line[0]).abs() < 1e-12 && (f[1] - line[1]).abs() < 1e-12));
        }
    }
}
