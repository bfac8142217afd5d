//! Exact squared Euclidean distance transform (Felzenszwalb & Huttenlocher
//! lower-envelope method), separable over rows and columns.

/// Squared distance sentinel for "no seed anywhere".
const FAR: f64 = 1e30;

/// 1D squared distance transform of `f` in place.
fn edt_1d(f: &[f64], out: &mut [f64], v: &mut [usize], z: &mut [f64]) {
    let n = f.len();
    let mut k = 0usize;
    v[0] = 0;
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    for q in 1..n {
        let fq = f[q] + (q * q) as f64;
        let mut s;
        loop {
            let p = v[k];
            s = (fq - (f[p] + (p * p) as f64)) / (2.0 * (q as f64 - p as f64));
            if s <= z[k] && k > 0 {
                k -= 1;
            } else {
                break;
            }
        }
        if s <= z[k] {
            // k == 0 and the new parabola dominates everywhere.
            v[0] = q;
            z[0] = f64::NEG_INFINITY;
            z[1] = f64::INFINITY;
            continue;
        }
        k += 1;
        v[k] = q;
        z[k] = s;
        z[k + 1] = f64::INFINITY;
    }
    k = 0;
    for (q, o) in out.iter_mut().enumerate() {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let p = v[k];
        let d = q as f64 - p as f64;
        *o = d * d + f[p];
    }
}

/// Squared distance from every pixel center to the nearest seed pixel
/// center. Without seeds every entry is `f64::INFINITY`.
pub fn squared_distance_transform(seeds: &[bool], width: usize, height: usize) -> Vec<f64> {
    assert_eq!(seeds.len(), width * height);
    if !seeds.iter().any(|&s| s) {
        return vec![f64::INFINITY; width * height];
    }
    let mut grid: Vec<f64> = seeds.iter().map(|&s| if s { 0.0 } else { FAR }).collect();
    let n = width.max(height);
    let mut f = vec![0.0; n];
    let mut out = vec![0.0; n];
    let mut v = vec![0usize; n];
    let mut z = vec![0.0; n + 1];
    for x in 0..width {
        for y in 0..height {
            f[y] = grid[y * width + x];
        }
        edt_1d(&f[..height], &mut out[..height], &mut v, &mut z);
        for y in 0..height {
            grid[y * width + x] = out[y];
        }
    }
    for y in 0..height {
        f[..width].copy_from_slice(&grid[y * width..(y + 1) * width]);
        edt_1d(&f[..width], &mut out[..width], &mut v, &mut z);
        grid[y * width..(y + 1) * width].copy_from_slice(&out[..width]);
    }
    // Column pass leaves FAR-derived values in columns without seeds; the
    // row pass always finds a finite column since some seed exists.
    grid
}

pub fn distance_transform(seeds: &[bool], width: usize, height: usize) -> Vec<f64> {
    squared_distance_transform(seeds, width, height)
        .into_iter()
        .map(f64::sqrt)
        .collect()
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub fn brute_force(seeds: &[bool], w: usize, h: usize) -> Vec<f64> {
        let pts: Vec<(usize, usize)> = (0..w * h).filter(|&p| seeds[p]).map(|p| (p % w, p / w)).collect();
        (0..w * h)
            .map(|p| {
                let (x, y) = (p % w, p / w);
                pts.iter()
                    .map(|&(sx, sy)| {
                        let dx = x as f64 - sx as f64;
                        let dy = y as f64 - sy as f64;
                        dx * dx + dy * dy
                    })
                    .fold(f64::INFINITY, f64::min)
            })
            .collect()
    }

    #[test]
    fn matches_brute_force_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for trial in 0..30 {
            let (w, h) = (rng.random_range(1..40), rng.random_range(1..40));
            let density = if trial % 3 == 0 { 0.002 } else { 0.05 };
            let mut seeds: Vec<bool> = (0..w * h).map(|_| rng.random::<f64>() < density).collect();
            seeds[rng.random_range(0..w * h)] = true;
            assert_eq!(squared_distance_transform(&seeds, w, h), brute_force(&seeds, w, h));
        }
    }

    #[test]
    fn no_seeds_is_infinite() {
        assert!(squared_distance_transform(&[false; 12], 4, 3).iter().all(|v| v.is_infinite()));
    }

    #[test]
    fn single_seed_is_radial() {
        let mut seeds = vec![false; 25];
        seeds[12] = true;
        let d = distance_transform(&seeds, 5, 5);
        assert_eq!(d[12], 0.0);
        assert_eq!(d[0], 8f64.sqrt());
        assert_eq!(d[2], 2.0);
    }
}
