//! Exact squared Euclidean distance transform (Felzenszwalb & Huttenlocher),
//! separable over columns then rows.

use crate::io::BinaryMask;

/// Lower envelope of parabolas `f[p] + (q - p)^2` over the finite entries of `f`.
fn transform_1d(f: &[f64], out: &mut [f64]) {
    let n = f.len();
    let mut v: Vec<usize> = Vec::with_capacity(n);
    let mut z: Vec<f64> = Vec::with_capacity(n + 1);
    for q in 0..n {
        if !f[q].is_finite() {
            continue;
        }
        let fq = f[q] + (q * q) as f64;
        loop {
            match v.last() {
                None => {
                    v.push(q);
                    z.clear();
                    z.push(f64::NEG_INFINITY);
                    break;
                }
                Some(&p) => {
                    let s = (fq - (f[p] + (p * p) as f64)) / (2.0 * (q as f64 - p as f64));
                    if s <= *z.last().unwrap() {
                        v.pop();
                        z.pop();
                        continue;
                    }
                    v.push(q);
                    z.push(s);
                    break;
                }
            }
        }
    }
    if v.is_empty() {
        out.iter_mut().for_each(|o| *o = f64::INFINITY);
        return;
    }
    let mut k = 0;
    for (q, o) in out.iter_mut().enumerate() {
        while k + 1 < v.len() && z[k + 1] < q as f64 {
            k += 1;
        }
        let d = q as f64 - v[k] as f64;
        *o = d * d + f[v[k]];
    }
}

/// Squared distance from every pixel to the nearest foreground pixel of
/// `mask`; `+inf` everywhere when the mask is blank.
pub fn squared_distance_transform(mask: &BinaryMask) -> Vec<f64> {
    let (h, w) = mask.dims();
    let mut grid: Vec<f64> = mask
        .data()
        .iter()
        .map(|&v| if v { 0.0 } else { f64::INFINITY })
        .collect();

    let mut col = vec![0f64; h];
    let mut col_out = vec![0f64; h];
    for x in 0..w {
        for y in 0..h {
            col[y] = grid[y * w + x];
        }
        transform_1d(&col, &mut col_out);
        for y in 0..h {
            grid[y * w + x] = col_out[y];
        }
    }
    let mut row_out = vec![0f64; w];
    for y in 0..h {
        transform_1d(&grid[y * w..(y + 1) * w], &mut row_out);
        grid[y * w..(y + 1) * w].copy_from_slice(&row_out);
    }
    grid
}

/// Euclidean distance from each foreground pixel of `from` to the nearest
/// foreground pixel of `to`, in row-major order of `from`.
pub fn directed_distances(from: &BinaryMask, to: &BinaryMask) -> Vec<f64> {
    let dt = squared_distance_transform(to);
    from.indices().map(|i| dt[i].sqrt()).collect()
}
