//! Sites of `Z^d`, the box `Λ_n = (-n/2, n/2]^d` and dense hypercube regions.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_DIM: usize = 3;

/// A site of `Z^d` for `1 <= d <= 3`. Coordinates past `dim` are always zero,
/// so equality, hashing and ordering are the usual ones on `Z^d`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LatticePoint {
    coords: [i32; MAX_DIM],
    dim: u8,
}

impl LatticePoint {
    pub fn origin(dim: usize) -> Self {
        assert!((1..=MAX_DIM).contains(&dim), "dimension {dim} unsupported");
        LatticePoint {
            coords: [0; MAX_DIM],
            dim: dim as u8,
        }
    }

    pub fn new(coords: &[i32]) -> Result<Self> {
        if coords.is_empty() || coords.len() > MAX_DIM {
            return Err(Error::param(format!(
                "dimension must be in 1..={MAX_DIM}, got {}",
                coords.len()
            )));
        }
        let mut c = [0; MAX_DIM];
        c[..coords.len()].copy_from_slice(coords);
        Ok(LatticePoint {
            coords: c,
            dim: coords.len() as u8,
        })
    }

    /// Panicking constructor for literals in tests and examples.
    pub fn at(coords: &[i32]) -> Self {
        Self::new(coords).expect("valid lattice point")
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    #[inline]
    pub fn coords(&self) -> &[i32] {
        &self.coords[..self.dim as usize]
    }

    #[inline]
    pub fn coord(&self, axis: usize) -> i32 {
        self.coords[axis]
    }

    #[inline]
    pub fn with_coord(mut self, axis: usize, value: i32) -> Self {
        self.coords[axis] = value;
        self
    }

    #[inline]
    pub fn shifted(mut self, axis: usize, delta: i32) -> Self {
        self.coords[axis] += delta;
        self
    }

    /// `‖x‖∞`, the norm used throughout.
    #[inline]
    pub fn norm_inf(&self) -> u32 {
        self.coords()
            .iter()
            .map(|c| c.unsigned_abs())
            .max()
            .unwrap_or(0)
    }

    pub fn norm2_sq(&self) -> u64 {
        self.coords()
            .iter()
            .map(|&c| (c as i64 * c as i64) as u64)
            .sum()
    }

    /// The `2d` lattice neighbors, ordered `+e_1, -e_1, +e_2, -e_2, ...`.
    #[inline]
    pub fn neighbors(&self) -> Neighbors {
        Neighbors {
            center: *self,
            next: 0,
        }
    }

    pub fn is_neighbor(&self, other: &LatticePoint) -> bool {
        self.dim == other.dim
            && self
                .coords()
                .iter()
                .zip(other.coords())
                .map(|(a, b)| (a - b).unsigned_abs())
                .sum::<u32>()
                == 1
    }
}

impl fmt::Debug for LatticePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for LatticePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.coords().iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

pub struct Neighbors {
    center: LatticePoint,
    next: usize,
}

impl Iterator for Neighbors {
    type Item = LatticePoint;

    #[inline]
    fn next(&mut self) -> Option<LatticePoint> {
        if self.next >= 2 * self.center.dim() {
            return None;
        }
        let axis = self.next / 2;
        let delta = if self.next % 2 == 0 { 1 } else { -1 };
        self.next += 1;
        Some(self.center.shifted(axis, delta))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = 2 * self.center.dim() - self.next;
        (left, Some(left))
    }
}

impl ExactSizeIterator for Neighbors {}

/// An axis-aligned hypercube `[lo, lo + side)^d` with a dense row-major index
/// (last coordinate fastest).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Region {
    pub dim: usize,
    pub lo: i32,
    pub side: usize,
}

impl Region {
    pub fn volume(&self) -> usize {
        self.side.pow(self.dim as u32)
    }

    /// Volume without overflow, for capacity checks.
    pub fn checked_volume(&self) -> Option<usize> {
        self.side.checked_pow(self.dim as u32)
    }

    #[inline]
    pub fn hi(&self) -> i32 {
        self.lo + self.side as i32 - 1
    }

    #[inline]
    pub fn contains(&self, x: &LatticePoint) -> bool {
        x.coords().iter().all(|&c| c >= self.lo && c <= self.hi())
    }

    #[inline]
    pub fn index(&self, x: &LatticePoint) -> Option<usize> {
        let mut idx = 0usize;
        for &c in x.coords() {
            let off = c - self.lo;
            if off < 0 || off as usize >= self.side {
                return None;
            }
            idx = idx * self.side + off as usize;
        }
        Some(idx)
    }

    pub fn point(&self, mut idx: usize) -> LatticePoint {
        let mut c = [0i32; MAX_DIM];
        for axis in (0..self.dim).rev() {
            c[axis] = self.lo + (idx % self.side) as i32;
            idx /= self.side;
        }
        LatticePoint::at(&c[..self.dim])
    }

    pub fn points(&self) -> impl Iterator<Item = LatticePoint> + '_ {
        (0..self.volume()).map(move |i| self.point(i))
    }

    /// Sites of the outermost layer.
    pub fn on_shell(&self, x: &LatticePoint) -> bool {
        x.coords().iter().any(|&c| c == self.lo || c == self.hi())
    }

    pub fn grown(&self, by: usize) -> Region {
        Region {
            dim: self.dim,
            lo: self.lo - by as i32,
            side: self.side + 2 * by,
        }
    }

    /// Smallest cube containing every point, padded by `pad` layers.
    pub fn bounding<'a>(
        dim: usize,
        points: impl IntoIterator<Item = &'a LatticePoint>,
        pad: usize,
    ) -> Option<Region> {
        let mut lo = i32::MAX;
        let mut hi = i32::MIN;
        for p in points {
            for &c in p.coords() {
                lo = lo.min(c);
                hi = hi.max(c);
            }
        }
        if lo > hi {
            return None;
        }
        Some(
            Region {
                dim,
                lo,
                side: (hi - lo + 1) as usize,
            }
            .grown(pad),
        )
    }
}

/// The box `Λ_n = (-n/2, n/2]^d`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoxSpec {
    pub n: usize,
    pub d: usize,
}

impl BoxSpec {
    pub fn new(n: usize, d: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::param("box side n must be positive"));
        }
        if !(1..=MAX_DIM).contains(&d) {
            return Err(Error::param(format!(
                "dimension must be in 1..={MAX_DIM}, got {d}"
            )));
        }
        if n > i32::MAX as usize / 4 {
            return Err(Error::param(format!("box side {n} too large")));
        }
        Ok(BoxSpec { n, d })
    }

    /// Smallest coordinate `c` with `2c > -n`.
    #[inline]
    pub fn lo(&self) -> i32 {
        1 - self.n.div_ceil(2) as i32
    }

    /// Largest coordinate `c` with `2c <= n`.
    #[inline]
    pub fn hi(&self) -> i32 {
        (self.n / 2) as i32
    }

    /// `x ∈ Λ_n` iff `-n < 2 x_i <= n` for every axis; exact integer test.
    #[inline]
    pub fn contains(&self, x: &LatticePoint) -> bool {
        let n = self.n as i64;
        x.dim() == self.d
            && x.coords().iter().all(|&c| {
                let twice = 2 * c as i64;
                twice > -n && twice <= n
            })
    }

    pub fn volume(&self) -> usize {
        self.n.pow(self.d as u32)
    }

    pub fn region(&self) -> Region {
        Region {
            dim: self.d,
            lo: self.lo(),
            side: self.n,
        }
    }

    pub fn sites(&self) -> impl Iterator<Item = LatticePoint> {
        let r = self.region();
        (0..r.volume()).map(move |i| r.point(i))
    }

    /// `4 ‖x‖ >= n`, the far region `‖x‖∞ >= n/4` in integer arithmetic.
    #[inline]
    pub fn is_far(&self, x: &LatticePoint) -> bool {
        4 * x.norm_inf() as usize >= self.n
    }
}
