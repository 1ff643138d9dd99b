use serde::{Deserialize, Serialize};

use super::GridSpec;

/// Dyadic cube `Q_{v,m} = 2^{-v}(m + [0,1)^n)`.
///
/// In one dimension the second index component is always zero.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DyadicCube {
    pub dimension: u8,
    pub level: u32,
    pub index: [i64; 2],
}

impl DyadicCube {
    pub fn new(dimension: usize, level: u32, index: [i64; 2]) -> Self {
        let index = if dimension == 1 { [index[0], 0] } else { index };
        Self {
            dimension: dimension as u8,
            level,
            index,
        }
    }

    pub fn line(level: u32, m: i64) -> Self {
        Self::new(1, level, [m, 0])
    }

    /// Side length `2^{-v}`.
    pub fn side(&self) -> f64 {
        (-(self.level as f64)).exp2()
    }

    pub fn measure(&self) -> f64 {
        self.side().powi(self.dimension as i32)
    }

    /// Lower corner `2^{-v} m`.
    pub fn corner(&self) -> [f64; 2] {
        let s = self.side();
        [self.index[0] as f64 * s, self.index[1] as f64 * s]
    }

    pub fn center(&self) -> [f64; 2] {
        let s = self.side();
        let c = self.corner();
        if self.dimension == 1 {
            [c[0] + 0.5 * s, 0.0]
        } else {
            [c[0] + 0.5 * s, c[1] + 0.5 * s]
        }
    }

    /// Cube containing the point `x` at level `v`.
    pub fn containing(dimension: usize, level: u32, x: [f64; 2]) -> Self {
        let scale = (level as f64).exp2();
        Self::new(
            dimension,
            level,
            [(x[0] * scale).floor() as i64, (x[1] * scale).floor() as i64],
        )
    }

    /// Per-axis index ranges `[lo, hi)` of the box cubes at one level.
    fn axis_range(spec: &GridSpec, level: u32) -> (i64, i64) {
        let scale = (level as f64).exp2();
        let half = 0.5 * spec.box_length();
        let lo = (-half * scale + 1e-9).floor() as i64;
        let hi = (half * scale - 1e-9).ceil() as i64;
        (lo, hi)
    }

    /// Every cube at `level` that meets the grid box, in lexicographic order.
    pub fn cubes_in_box(spec: &GridSpec, level: u32) -> Vec<DyadicCube> {
        let (lo, hi) = Self::axis_range(spec, level);
        let dim = spec.dimension();
        let mut out = Vec::new();
        for a in lo..hi {
            if dim == 1 {
                out.push(Self::line(level, a));
            } else {
                for b in lo..hi {
                    out.push(Self::new(2, level, [a, b]));
                }
            }
        }
        out
    }

    /// Grid nodes per axis inside `[corner, corner + side)`, with periodic wrap.
    fn axis_nodes(&self, spec: &GridSpec, axis: usize) -> Vec<usize> {
        let h = spec.spacing();
        let n = spec.points_per_axis() as i64;
        let half = 0.5 * spec.box_length();
        let lo = self.index[axis] as f64 * self.side();
        let first = ((lo + half) / h - 1e-9).ceil() as i64;
        let last = ((lo + self.side() + half) / h - 1e-9).ceil() as i64;
        (first..last).map(|i| i.rem_euclid(n) as usize).collect()
    }

    /// Flat indices of grid samples lying in the cube.
    pub fn grid_indices(&self, spec: &GridSpec) -> Vec<usize> {
        let xs = self.axis_nodes(spec, 0);
        if spec.dimension() == 1 {
            return xs;
        }
        let ys = self.axis_nodes(spec, 1);
        let n = spec.points_per_axis();
        xs.iter()
            .flat_map(|&i| ys.iter().map(move |&j| i * n + j))
            .collect()
    }

    /// Indicator function of the cube on the grid.
    pub fn indicator(&self, spec: &GridSpec) -> Vec<f64> {
        let mut out = vec![0.0; spec.len()];
        for i in self.grid_indices(spec) {
            out[i] = 1.0;
        }
        out
    }

    /// Whether a point lies in the dilated cube `γQ` (same center, side `γ·2^{-v}`).
    pub fn dilate_contains(&self, gamma: f64, x: [f64; 2], spec: &GridSpec) -> bool {
        let c = self.center();
        let r = 0.5 * gamma * self.side();
        let l = spec.box_length();
        let wrap = |d: f64| d - l * (d / l).round();
        let inside = wrap(x[0] - c[0]).abs() <= r;
        if self.dimension == 1 {
            inside
        } else {
            inside && wrap(x[1] - c[1]).abs() <= r
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;

    #[test]
    fn cubes_tile_the_box() {
        let g = make_grid(1, 16.0, 4096).unwrap();
        for v in 0..=8 {
            let cubes = DyadicCube::cubes_in_box(&g, v);
            assert_eq!(cubes.len(), 16 << v);
            let mut seen = vec![0u8; g.len()];
            for q in &cubes {
                let idx = q.grid_indices(&g);
                assert_eq!(idx.len(), 256 >> v);
                for i in idx {
                    seen[i] += 1;
                }
            }
            assert!(seen.iter().all(|&c| c == 1));
        }
    }

    #[test]
    fn side_and_corner() {
        let q = DyadicCube::line(3, 5);
        assert_eq!(q.side(), 0.125);
        assert_eq!(q.corner()[0], 0.625);
        assert_eq!(DyadicCube::containing(1, 3, [0.7, 0.0]), q);
    }

    #[test]
    fn two_dimensional_cubes() {
        let g = make_grid(2, 4.0, 64).unwrap();
        let cubes = DyadicCube::cubes_in_box(&g, 1);
        assert_eq!(cubes.len(), 64);
        assert_eq!(cubes[0].grid_indices(&g).len(), 64);
    }
}
