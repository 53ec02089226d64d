//! Grid peak detection and golden-section refinement.

use alloc::vec::Vec;
use core::cmp::Ordering;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{invalid, Result};

/// Strictly increasing sample axis with at least two points.
#[derive(Debug, Clone, PartialEq)]
pub struct Axis(Vec<f64>);

impl Axis {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.len() < 2 {
            return Err(invalid("axis", "needs at least two points"));
        }
        if !points.iter().all(|v| v.is_finite()) || !points.windows(2).all(|w| w[0] < w[1]) {
            return Err(invalid("axis", "must be finite and strictly increasing"));
        }
        Ok(Axis(points))
    }

    /// `start, start + step, ...` up to and including `stop` (within
    /// rounding).
    pub fn uniform(start: f64, stop: f64, step: f64) -> Result<Self> {
        if !(step > 0.0) || !(stop > start) {
            return Err(invalid("axis", "need start < stop and a positive step"));
        }
        let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
        Axis::new((0..count).map(|i| start + i as f64 * step).collect())
    }

    pub fn points(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn first(&self) -> f64 {
        self.0[0]
    }

    pub fn last(&self) -> f64 {
        self.0[self.0.len() - 1]
    }

    /// Bracket `[x_{i-1}, x_{i+1}]` clipped to the axis.
    pub fn neighborhood(&self, i: usize) -> (f64, f64) {
        let lo = self.0[i.saturating_sub(1)];
        let hi = self.0[(i + 1).min(self.0.len() - 1)];
        (lo, hi)
    }

    /// Smallest spacing between consecutive points.
    pub fn min_step(&self) -> f64 {
        self.0.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)
    }
}

impl core::ops::Index<usize> for Axis {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

fn descending(values: &[f64]) -> impl Fn(&usize, &usize) -> Ordering + '_ {
    move |&a, &b| values[b].partial_cmp(&values[a]).unwrap_or(Ordering::Equal)
}

/// Strict local maxima of a 1D profile, highest first; equal heights keep
/// index order.
pub fn local_maxima_1d(values: &[f64]) -> Vec<usize> {
    let n = values.len();
    let mut peaks: Vec<usize> = (0..n)
        .filter(|&i| {
            let v = values[i];
            (i == 0 || v > values[i - 1]) && (i + 1 == n || v > values[i + 1])
        })
        .collect();
    if n == 1 {
        peaks.clear();
        peaks.push(0);
    }
    peaks.sort_by(descending(values));
    peaks
}

/// Strict 8-neighbourhood local maxima of a row-major `rows x cols` surface,
/// highest first; equal heights keep row-major scan order.
pub fn local_maxima_2d(values: &[f64], rows: usize, cols: usize) -> Vec<(usize, usize)> {
    debug_assert_eq!(values.len(), rows * cols);
    let mut flat: Vec<usize> = Vec::new();
    for i in 0..rows {
        for j in 0..cols {
            let v = values[i * cols + j];
            let mut is_max = true;
            'nb: for di in -1i64..=1 {
                for dj in -1i64..=1 {
                    if di == 0 && dj == 0 {
                        continue;
                    }
                    let (ni, nj) = (i as i64 + di, j as i64 + dj);
                    if ni < 0 || nj < 0 || ni >= rows as i64 || nj >= cols as i64 {
                        continue;
                    }
                    if values[ni as usize * cols + nj as usize] >= v {
                        is_max = false;
                        break 'nb;
                    }
                }
            }
            if is_max {
                flat.push(i * cols + j);
            }
        }
    }
    flat.sort_by(descending(values));
    flat.into_iter().map(|k| (k / cols, k % cols)).collect()
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section maximization of `f` over `[lo, hi]` with `iters` bracket
/// reductions. Returns the best point evaluated and its value.
pub fn golden_max(mut f: impl FnMut(f64) -> f64, lo: f64, hi: f64, iters: usize) -> (f64, f64) {
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    let (mut best_x, mut best_f) = if fc >= fd { (c, fc) } else { (d, fd) };
    for _ in 0..iters {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
            if fc > best_f {
                best_x = c;
                best_f = fc;
            }
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
            if fd > best_f {
                best_x = d;
                best_f = fd;
            }
        }
    }
    (best_x, best_f)
}

/// Coordinate-wise golden-section refinement of a 2D grid peak at
/// `(x0, y0)` with value `v0`, inside the box `[xlo, xhi] x [ylo, yhi]`.
/// Two alternating passes, `iters` reductions per line search. Never
/// returns a point worse than the start.
pub fn refine_2d(
    mut f: impl FnMut(f64, f64) -> f64,
    start: (f64, f64, f64),
    x_box: (f64, f64),
    y_box: (f64, f64),
    iters: usize,
) -> (f64, f64, f64) {
    let (mut x, mut y, mut v) = start;
    if iters == 0 {
        return (x, y, v);
    }
    for _ in 0..2 {
        let (nx, nv) = golden_max(|t| f(t, y), x_box.0, x_box.1, iters);
        if nv > v {
            x = nx;
            v = nv;
        }
        let (ny, nv) = golden_max(|t| f(x, t), y_box.0, y_box.1, iters);
        if nv > v {
            y = ny;
            v = nv;
        }
    }
    (x, y, v)
}

/// 1D counterpart of [`refine_2d`].
pub fn refine_1d(f: impl FnMut(f64) -> f64, start: (f64, f64), bracket: (f64, f64), iters: usize) -> (f64, f64) {
    if iters == 0 {
        return start;
    }
    let (x, v) = golden_max(f, bracket.0, bracket.1, iters);
    if v > start.1 {
        (x, v)
    } else {
        start
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_axis_includes_stop() {
        let a = Axis::uniform(3.0, 80.0, 0.25).unwrap();
        assert_eq!(a.len(), 309);
        assert!((a.last() - 80.0).abs() < 1e-12);
        assert!(Axis::new(alloc::vec![1.0]).is_err());
        assert!(Axis::new(alloc::vec![1.0, 1.0]).is_err());
    }

    #[test]
    fn maxima_1d_and_ties() {
        let v = [1.0, 3.0, 2.0, 5.0, 4.0, 5.0];
        assert_eq!(local_maxima_1d(&v), [3, 5, 1]);
        let flat = [1.0, 1.0, 1.0];
        assert!(local_maxima_1d(&flat).is_empty());
    }

    #[test]
    fn maxima_2d_gaussian_bump_and_ties() {
        let (rows, cols) = (9, 11);
        let v: Vec<f64> = (0..rows * cols)
            .map(|k| {
                let (i, j) = ((k / cols) as f64, (k % cols) as f64);
                (-((i - 6.0).powi(2) + (j - 3.0).powi(2)) / 4.0).exp()
            })
            .collect();
        assert_eq!(local_maxima_2d(&v, rows, cols), [(6, 3)]);

        let mut twin = alloc::vec![0.0; 25];
        twin[5 + 3] = 2.0;
        twin[3 * 5 + 1] = 2.0;
        assert_eq!(local_maxima_2d(&twin, 5, 5), [(1, 3), (3, 1)]);
    }

    #[test]
    fn golden_finds_parabola_vertex() {
        let (x, v) = golden_max(|x| -(x - 0.3).powi(2), 0.0, 1.0, 40);
        assert!((x - 0.3).abs() < 1e-7);
        assert!(v <= 0.0);
        let (x, y, _) = refine_2d(
            |x, y| -(x - 1.2).powi(2) - 2.0 * (y + 0.4).powi(2),
            (1.0, -0.5, -0.06),
            (0.5, 1.5),
            (-1.0, 0.0),
            40,
        );
        assert!((x - 1.2).abs() < 1e-6 && (y + 0.4).abs() < 1e-6);
    }
}
