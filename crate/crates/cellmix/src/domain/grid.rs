use super::DomainError;

/// Uniform cell-centered grid on `Q` with `n` cells per side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct Grid {
    n: usize,
}

impl Grid {
    pub fn new(n: usize) -> Result<Self, DomainError> {
        if n == 0 || n > 1 << 14 {
            return Err(DomainError::InvalidGrid(format!(
                "cells per side must be in 1..=16384, got {n}"
            )));
        }
        Ok(Grid { n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn cells(&self) -> usize {
        self.n * self.n
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.n as f64
    }

    /// Coordinate of the center of cell `i` along one axis.
    #[inline]
    pub fn center(&self, i: usize) -> f64 {
        -0.5 + (i as f64 + 0.5) / self.n as f64
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.n + i
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> (usize, usize) {
        (idx % self.n, idx / self.n)
    }

    /// Cell containing the point, or `None` outside the closed square.
    pub fn locate(&self, x: [f64; 2]) -> Option<(usize, usize)> {
        let f = |v: f64| {
            let s = (v + 0.5) * self.n as f64;
            if !(s >= 0.0 && s <= self.n as f64) {
                return None;
            }
            Some((s.floor() as usize).min(self.n - 1))
        };
        Some((f(x[0])?, f(x[1])?))
    }

    /// Cell containing the point after clamping it into the closed square.
    pub fn locate_clamped(&self, x: [f64; 2]) -> (usize, usize) {
        let f = |v: f64| {
            let s = ((v + 0.5) * self.n as f64).floor();
            (s.max(0.0) as usize).min(self.n - 1)
        };
        (f(x[0]), f(x[1]))
    }
}
