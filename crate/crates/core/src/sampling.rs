//! Seeded random sampling of jet points.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const DEFAULT_SEED: u64 = 42;

pub type SampleRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SampleRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform(rng: &mut SampleRng, (lo, hi): (f64, f64)) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.gen_range(lo..hi)
    }
}

/// Ranges for the free coordinates `x, y, ym, dy, dym`, plus the search
/// bracket for `x - xm` used when the delay relation is implicit in `xm`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SampleBox {
    pub x: (f64, f64),
    pub y: (f64, f64),
    pub ym: (f64, f64),
    pub dy: (f64, f64),
    pub dym: (f64, f64),
    pub delta: (f64, f64),
}

impl Default for SampleBox {
    fn default() -> Self {
        Self::uniform(0.5, 2.5)
    }
}

impl SampleBox {
    pub fn uniform(lo: f64, hi: f64) -> Self {
        SampleBox {
            x: (lo, hi),
            y: (lo, hi),
            ym: (lo, hi),
            dy: (lo, hi),
            dym: (lo, hi),
            delta: (1e-3, 3.0),
        }
    }

    /// Sets one range by coordinate name (`x, y, ym, dy, dym, delta`).
    pub fn set(&mut self, coord: &str, range: (f64, f64)) -> bool {
        let slot = match coord {
            "x" => &mut self.x,
            "y" => &mut self.y,
            "ym" => &mut self.ym,
            "dy" => &mut self.dy,
            "dym" => &mut self.dym,
            "delta" => &mut self.delta,
            _ => return false,
        };
        *slot = range;
        true
    }

    pub fn with(mut self, coord: &str, range: (f64, f64)) -> Self {
        let known = self.set(coord, range);
        debug_assert!(known, "unknown sampling coordinate {coord}");
        self
    }

    pub fn ranges(&self) -> [(&'static str, (f64, f64)); 6] {
        [
            ("x", self.x),
            ("y", self.y),
            ("ym", self.ym),
            ("dy", self.dy),
            ("dym", self.dym),
            ("delta", self.delta),
        ]
    }

    /// Draws `(x, y, ym, dy, dym)`.
    pub fn draw(&self, rng: &mut SampleRng) -> [f64; 5] {
        [
            uniform(rng, self.x),
            uniform(rng, self.y),
            uniform(rng, self.ym),
            uniform(rng, self.dy),
            uniform(rng, self.dym),
        ]
    }
}

/// A generic point for the prolongation matrix: seven coordinates uniform
/// in `[lo, hi]`, with `x` and `xm` swapped if needed so that `xm < x`.
pub fn generic_jet(rng: &mut SampleRng, lo: f64, hi: f64) -> [f64; 7] {
    let mut p = [0.0; 7];
    for v in p.iter_mut() {
        *v = uniform(rng, (lo, hi));
    }
    if p[2] > p[0] {
        p.swap(0, 2);
    }
    p
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeded_streams_repeat() {
        let a: Vec<f64> = (0..5).map({
            let mut r = rng(7);
            move |_| uniform(&mut r, (0.0, 1.0))
        }).collect();
        let b: Vec<f64> = (0..5).map({
            let mut r = rng(7);
            move |_| uniform(&mut r, (0.0, 1.0))
        }).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn generic_points_are_ordered() {
        let mut r = rng(1);
        for _ in 0..100 {
            let p = generic_jet(&mut r, 0.5, 2.5);
            assert!(p[2] <= p[0]);
            assert!(p.iter().all(|v| (0.5..2.5).contains(v)));
        }
    }
}
