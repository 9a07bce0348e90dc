//! Slow, obviously-correct reference implementations used by the tests.
#![allow(dead_code)]

use bisym_core::image::{Mask, Quantizer};
use bisym_core::rng::Xoshiro256;
use bisym_core::symmetry::AxisModel;

/// Gaussian elimination with partial pivoting.
pub fn solve_elimination(a: [[f64; 3]; 3], b: [f64; 3]) -> Option<[f64; 3]> {
    let mut m = [[0.0; 4]; 3];
    for i in 0..3 {
        m[i][..3].copy_from_slice(&a[i]);
        m[i][3] = b[i];
    }
    for col in 0..3 {
        let pivot = (col..3).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
        if m[pivot][col].abs() < 1e-300 {
            return None;
        }
        m.swap(col, pivot);
        for row in col + 1..3 {
            let f = m[row][col] / m[col][col];
            let pivot_row = m[col];
            for (v, p) in m[row][col..].iter_mut().zip(&pivot_row[col..]) {
                *v -= f * p;
            }
        }
    }
    let mut x = [0.0; 3];
    for i in (0..3).rev() {
        let s: f64 = (i + 1..3).map(|k| m[i][k] * x[k]).sum();
        x[i] = (m[i][3] - s) / m[i][i];
    }
    Some(x)
}

pub fn matmul(a: [[f64; 3]; 3], b: [[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let mut c = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            c[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    c
}

pub fn random_matrix(rng: &mut Xoshiro256) -> [[f64; 3]; 3] {
    let mut m = [[0.0; 3]; 3];
    for v in m.iter_mut().flatten() {
        *v = rng.uniform(-1.0, 1.0);
    }
    m
}

/// Recursive split-at-middle homogenization.
pub fn homogenize_recursive(row: &mut [u8], mt: u8, q: &Quantizer) {
    if row.is_empty() {
        return;
    }
    let mid = (row.len() - 1) / 2;
    let reference = row[mid];
    if row.len() > 1 && row.iter().any(|&p| p.abs_diff(reference) > mt) {
        let (left, right) = row.split_at_mut(mid + 1);
        homogenize_recursive(left, mt, q);
        homogenize_recursive(right, mt, q);
    } else {
        row.fill(q.apply(reference));
    }
}

/// Same recursion but splitting at the upper middle, i.e. the mirror image
/// of [`homogenize_recursive`].
pub fn homogenize_recursive_upper(row: &mut [u8], mt: u8, q: &Quantizer) {
    if row.is_empty() {
        return;
    }
    let mid = row.len() / 2;
    let reference = row[mid];
    if row.len() > 1 && row.iter().any(|&p| p.abs_diff(reference) > mt) {
        let (left, right) = row.split_at_mut(mid);
        homogenize_recursive_upper(left, mt, q);
        homogenize_recursive_upper(right, mt, q);
    } else {
        row.fill(q.apply(reference));
    }
}

/// Union-find 8-connected labelling. Returns components as sorted pixel
/// lists, sorted by first pixel.
pub fn components_union_find(mask: &Mask) -> Vec<Vec<(usize, usize)>> {
    let (w, h) = (mask.width(), mask.height());
    let mut parent: Vec<usize> = (0..w * h).collect();
    fn find(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    for y in 0..h {
        for x in 0..w {
            if !mask.get(x, y) {
                continue;
            }
            for (dx, dy) in [(-1i64, -1i64), (0, -1), (1, -1), (-1, 0)] {
                let (nx, ny) = (x as i64 + dx, y as i64 + dy);
                if mask.get_signed(nx, ny) {
                    let a = find(&mut parent, y * w + x);
                    let b = find(&mut parent, ny as usize * w + nx as usize);
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut groups = std::collections::BTreeMap::<usize, Vec<(usize, usize)>>::new();
    for (x, y) in mask.iter_set() {
        let root = find(&mut parent, y * w + x);
        groups.entry(root).or_default().push((x, y));
    }
    let mut out: Vec<_> = groups
        .into_values()
        .map(|mut v| {
            v.sort_by_key(|&(x, y)| (y, x));
            v
        })
        .collect();
    out.sort();
    out
}

/// Per-pixel scan for a partner edge around the reflected position.
pub fn brute_force_enhanced(edges: &Mask, axis: &AxisModel, tol: usize) -> Vec<(usize, usize)> {
    let (w, h) = (edges.width() as i64, edges.height() as i64);
    let t = tol as i64;
    edges
        .iter_set()
        .filter(|&(x, y)| {
            let rx = (2.0 * axis.evaluate(y as f64)).round() as i64 - x as i64;
            if rx < 0 || rx >= w {
                return true;
            }
            let found = (-t..=t).any(|dy| {
                (-t..=t).any(|dx| {
                    let (qx, qy) = (rx + dx, y as i64 + dy);
                    qx >= 0 && qy >= 0 && qx < w && qy < h && edges.get(qx as usize, qy as usize)
                })
            });
            !found
        })
        .collect()
}

/// Exhaustive geometric circle fit: centers on a quarter-pixel grid over
/// the bounding box, radius rounded to the quarter-pixel grid.
pub fn grid_search_circle(points: &[(f64, f64)]) -> (f64, f64, f64) {
    let min_x = points.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let max_x = points.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    let min_y = points.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let max_y = points.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let mut best = (f64::INFINITY, 0.0, 0.0, 0.0);
    let nx = ((max_x - min_x) * 4.0).ceil() as usize;
    let ny = ((max_y - min_y) * 4.0).ceil() as usize;
    for j in 0..=ny {
        let cy = min_y + j as f64 * 0.25;
        for i in 0..=nx {
            let cx = min_x + i as f64 * 0.25;
            let d: Vec<f64> = points.iter().map(|p| (p.0 - cx).hypot(p.1 - cy)).collect();
            let mean = d.iter().sum::<f64>() / d.len() as f64;
            // cost is quadratic in r, so the nearest grid radius to the mean is optimal
            let r = (mean * 4.0).round() / 4.0;
            let cost: f64 = d.iter().map(|v| (v - r).powi(2)).sum();
            if cost < best.0 {
                best = (cost, cx, cy, r);
            }
        }
    }
    (best.1, best.2, best.3)
}

/// Boundary pixels of a filled, rasterized disk.
pub fn disk_boundary(cx: f64, cy: f64, r: f64, size: usize) -> Vec<(f64, f64)> {
    let inside = |x: i64, y: i64| {
        x >= 0 && y >= 0 && (x as f64 - cx).powi(2) + (y as f64 - cy).powi(2) <= r * r
    };
    let mut pts = Vec::new();
    for y in 0..size as i64 {
        for x in 0..size as i64 {
            if inside(x, y)
                && [(1, 0), (-1, 0), (0, 1), (0, -1)]
                    .iter()
                    .any(|&(dx, dy)| !inside(x + dx, y + dy))
            {
                pts.push((x as f64, y as f64));
            }
        }
    }
    pts
}

/// Points on a circle with gaussian radial jitter.
pub fn noisy_circle(
    rng: &mut Xoshiro256,
    cx: f64,
    cy: f64,
    r: f64,
    sigma: f64,
    n: usize,
) -> Vec<(f64, f64)> {
    (0..n)
        .map(|i| {
            let t = std::f64::consts::TAU * i as f64 / n as f64;
            let rr = r + sigma * rng.next_gaussian();
            (cx + rr * t.cos(), cy + rr * t.sin())
        })
        .collect()
}
