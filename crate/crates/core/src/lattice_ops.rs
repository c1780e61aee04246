//! Square-lattice geometry and the lattice sums λ₀, λ₁, λ.

use crate::error::{domain, Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Boundary {
    #[default]
    Open,
    Periodic,
}

/// D-dimensional hypercubic lattice. Site indices are row-major with the last axis fastest.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lattice {
    extents: Vec<usize>,
    boundary: Boundary,
    sites: usize,
}

impl Lattice {
    pub fn new(extents: Vec<usize>, boundary: Boundary) -> Result<Self> {
        if extents.is_empty() {
            return Err(domain("lattice needs at least one dimension"));
        }
        if extents.contains(&0) {
            return Err(domain("lattice extents must be positive"));
        }
        let sites =
            extents.iter().try_fold(1usize, |acc, &e| acc.checked_mul(e)).ok_or_else(|| domain("lattice too large"))?;
        Ok(Self { extents, boundary, sites })
    }

    /// Open chain of `n` sites.
    pub fn chain(n: usize) -> Self {
        Self::new(vec![n.max(1)], Boundary::Open).expect("positive extent")
    }

    pub fn dimension(&self) -> usize {
        self.extents.len()
    }

    pub fn extents(&self) -> &[usize] {
        &self.extents
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn num_sites(&self) -> usize {
        self.sites
    }

    pub fn check_site(&self, i: usize) -> Result<()> {
        if i < self.sites {
            Ok(())
        } else {
            Err(Error::Index { site: i, sites: self.sites })
        }
    }

    pub fn coordinates(&self, i: usize) -> Result<Vec<i64>> {
        self.check_site(i)?;
        let mut rem = i;
        let mut out = vec![0i64; self.extents.len()];
        for (axis, &e) in self.extents.iter().enumerate().rev() {
            out[axis] = (rem % e) as i64;
            rem /= e;
        }
        Ok(out)
    }

    pub fn site_index(&self, coords: &[i64]) -> Result<usize> {
        if coords.len() != self.extents.len() {
            return Err(domain("coordinate tuple has wrong dimension"));
        }
        let mut idx = 0usize;
        for (&c, &e) in coords.iter().zip(&self.extents) {
            let c = match self.boundary {
                Boundary::Periodic => c.rem_euclid(e as i64),
                Boundary::Open if c < 0 || c >= e as i64 => {
                    return Err(domain(format!("coordinate {c} outside extent {e}")))
                }
                Boundary::Open => c,
            };
            idx = idx * e + c as usize;
        }
        Ok(idx)
    }

    fn axis_offset(&self, a: i64, b: i64, extent: usize) -> i64 {
        let d = (a - b).abs();
        match self.boundary {
            Boundary::Open => d,
            Boundary::Periodic => d.min(extent as i64 - d),
        }
    }

    /// Squared Euclidean distance as an exact integer.
    pub fn distance_squared(&self, i: usize, j: usize) -> Result<u64> {
        let a = self.coordinates(i)?;
        let b = self.coordinates(j)?;
        Ok(a.iter()
            .zip(&b)
            .zip(&self.extents)
            .map(|((&x, &y), &e)| {
                let d = self.axis_offset(x, y, e);
                (d * d) as u64
            })
            .sum())
    }

    pub fn distance<T: Real>(&self, i: usize, j: usize) -> Result<T> {
        Ok(T::lit(self.distance_squared(i, j)? as f64).sqrt())
    }

    /// Minimum pairwise distance between two site sets.
    pub fn set_distance<T: Real>(&self, x: &SiteSet, y: &SiteSet) -> Result<T> {
        let mut best: Option<u64> = None;
        for &i in x.iter() {
            for &j in y.iter() {
                let d = self.distance_squared(i, j)?;
                best = Some(best.map_or(d, |b| b.min(d)));
            }
        }
        best.map(|d| T::lit(d as f64).sqrt()).ok_or_else(|| domain("distance between empty sets"))
    }

    /// Sites at unit distance.
    pub fn neighbors(&self, i: usize) -> Result<Vec<usize>> {
        let c = self.coordinates(i)?;
        let mut out = Vec::with_capacity(2 * c.len());
        for axis in 0..c.len() {
            for step in [-1i64, 1] {
                let mut n = c.clone();
                n[axis] += step;
                if let Ok(j) = self.site_index(&n) {
                    if j != i && !out.contains(&j) {
                        out.push(j);
                    }
                }
            }
        }
        out.sort_unstable();
        Ok(out)
    }

    /// φ(X): members of `x` with at least one nearest neighbour outside `x`.
    pub fn boundary_area(&self, x: &SiteSet) -> Result<usize> {
        if x.is_empty() {
            return Err(domain("boundary area of the empty set"));
        }
        for &i in x.iter() {
            self.check_site(i)?;
        }
        if x.len() == self.sites {
            return Err(domain("boundary area of the full lattice"));
        }
        let mut count = 0;
        for &i in x.iter() {
            if self.neighbors(i)?.iter().any(|j| !x.contains(*j)) {
                count += 1;
            }
        }
        Ok(count)
    }

    /// Radius of the ball centred on the bounding-box midpoint of `x`.
    ///
    /// Exact for D = 1 and for boxes; an upper bound on the minimal enclosing radius otherwise.
    /// Uses unwrapped coordinates on periodic lattices.
    pub fn enclosing_radius<T: Real>(&self, x: &SiteSet) -> Result<T> {
        if x.is_empty() {
            return Err(domain("enclosing radius of the empty set"));
        }
        let coords: Vec<Vec<i64>> = x.iter().map(|&i| self.coordinates(i)).collect::<Result<_>>()?;
        let d = self.dimension();
        let centre: Vec<f64> = (0..d)
            .map(|a| {
                let lo = coords.iter().map(|c| c[a]).min().unwrap();
                let hi = coords.iter().map(|c| c[a]).max().unwrap();
                0.5 * (lo + hi) as f64
            })
            .collect();
        let r2 = coords
            .iter()
            .map(|c| c.iter().zip(&centre).map(|(&v, &m)| (v as f64 - m).powi(2)).sum::<f64>())
            .fold(0.0, f64::max);
        Ok(T::lit(r2.sqrt()))
    }

    /// λ₀, λ₁ and λ = 2(6λ₀ + 2λ₁ + 1) evaluated on this finite lattice.
    pub fn constants<T: Real>(&self, alpha: T) -> Result<LatticeConstants<T>> {
        if alpha <= T::from_usize_lossy(self.dimension()) {
            return Err(domain(format!("alpha = {alpha} must exceed the dimension {}", self.dimension())));
        }
        let n = self.sites;
        let mut inv = vec![T::zero(); n * n];
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    let d: T = self.distance(i, j)?;
                    inv[i * n + j] = d.powf(-alpha);
                }
            }
        }
        let mut lambda0 = T::zero();
        for i in 0..n {
            let s = (0..n).fold(T::one(), |acc, j| acc + inv[i * n + j]);
            lambda0 = lambda0.max(s);
        }
        let mut lambda1 = T::zero();
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let mut s = T::zero();
                for l in 0..n {
                    if l != i && l != j {
                        s += inv[i * n + l] * inv[l * n + j];
                    }
                }
                lambda1 = lambda1.max(s / inv[i * n + j]);
            }
        }
        Ok(LatticeConstants::from_parts(lambda0, lambda1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeConstants<T> {
    pub lambda0: T,
    pub lambda1: T,
    pub lambda: T,
}

impl<T: Real> LatticeConstants<T> {
    pub fn from_parts(lambda0: T, lambda1: T) -> Self {
        let lambda = T::lit(2.0) * (T::lit(6.0) * lambda0 + T::lit(2.0) * lambda1 + T::one());
        Self { lambda0, lambda1, lambda }
    }
}

/// Sorted, duplicate-free set of site indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct SiteSet(Vec<usize>);

impl SiteSet {
    pub fn new(sites: impl IntoIterator<Item = usize>) -> Self {
        let mut v: Vec<usize> = sites.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        Self(v)
    }

    pub fn single(i: usize) -> Self {
        Self(vec![i])
    }

    pub fn from_mask(mask: u64) -> Self {
        Self((0..64).filter(|b| mask >> b & 1 == 1).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0.binary_search(&i).is_ok()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, usize> {
        self.0.iter()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn is_disjoint(&self, other: &SiteSet) -> bool {
        self.0.iter().all(|i| !other.contains(*i))
    }
}

impl FromIterator<usize> for SiteSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        Self::new(iter)
    }
}
