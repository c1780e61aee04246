use crate::error::{Error, Result};
use std::fmt;

/// Maximum site index + 1 representable in a [`PauliString`].
pub const MAX_SITES: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pauli {
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn from_char(c: char) -> Option<Self> {
        match c.to_ascii_uppercase() {
            'X' => Some(Self::X),
            'Y' => Some(Self::Y),
            'Z' => Some(Self::Z),
            _ => None,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Self::X => 'X',
            Self::Y => 'Y',
            Self::Z => 'Z',
        }
    }
}

/// Tensor product of single-site Paulis stored as X/Z bitmasks.
///
/// Bit `s` of `x` (`z`) marks an X (Z) factor on site `s`; both bits set means Y.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct PauliString {
    x: u64,
    z: u64,
}

impl PauliString {
    pub const IDENTITY: Self = Self { x: 0, z: 0 };

    pub fn from_masks(x: u64, z: u64) -> Self {
        Self { x, z }
    }

    pub fn single(site: usize, p: Pauli) -> Result<Self> {
        Self::from_letters([(site, p)])
    }

    pub fn from_letters(letters: impl IntoIterator<Item = (usize, Pauli)>) -> Result<Self> {
        let mut s = Self::IDENTITY;
        for (site, p) in letters {
            if site >= MAX_SITES {
                return Err(Error::Index { site, sites: MAX_SITES });
            }
            let bit = 1u64 << site;
            if (s.x | s.z) & bit != 0 {
                return Err(crate::error::domain(format!("site {site} given twice")));
            }
            match p {
                Pauli::X => s.x |= bit,
                Pauli::Z => s.z |= bit,
                Pauli::Y => {
                    s.x |= bit;
                    s.z |= bit;
                }
            }
        }
        Ok(s)
    }

    /// Parses strings like `"X0 Y3 Z10"`; an empty string or `"I"` is the identity.
    pub fn parse(text: &str) -> Result<Self> {
        let mut letters = Vec::new();
        for tok in text.split_whitespace() {
            if tok == "I" {
                continue;
            }
            let mut chars = tok.chars();
            let p = chars
                .next()
                .and_then(Pauli::from_char)
                .ok_or_else(|| crate::error::domain(format!("bad Pauli token {tok:?}")))?;
            let site: usize =
                chars.as_str().parse().map_err(|_| crate::error::domain(format!("bad site in token {tok:?}")))?;
            letters.push((site, p));
        }
        Self::from_letters(letters)
    }

    pub fn x_mask(&self) -> u64 {
        self.x
    }

    pub fn z_mask(&self) -> u64 {
        self.z
    }

    pub fn support_mask(&self) -> u64 {
        self.x | self.z
    }

    pub fn weight(&self) -> usize {
        self.support_mask().count_ones() as usize
    }

    pub fn is_identity(&self) -> bool {
        self.support_mask() == 0
    }

    /// Highest occupied site + 1 (0 for the identity).
    pub fn span(&self) -> usize {
        64 - self.support_mask().leading_zeros() as usize
    }

    pub fn letter(&self, site: usize) -> Option<Pauli> {
        if site >= MAX_SITES {
            return None;
        }
        match (self.x >> site & 1, self.z >> site & 1) {
            (1, 0) => Some(Pauli::X),
            (0, 1) => Some(Pauli::Z),
            (1, 1) => Some(Pauli::Y),
            _ => None,
        }
    }

    pub fn letters(&self) -> impl Iterator<Item = (usize, Pauli)> + '_ {
        (0..self.span()).filter_map(move |s| self.letter(s).map(|p| (s, p)))
    }

    pub fn commutes_with(&self, other: &Self) -> bool {
        ((self.x & other.z).count_ones() + (self.z & other.x).count_ones()).is_multiple_of(2)
    }

    /// `self · other = i^k · result`; returns `(k mod 4, result)`.
    pub fn mul(&self, other: &Self) -> (u8, Self) {
        let x = self.x ^ other.x;
        let z = self.z ^ other.z;
        let k = (self.x & self.z).count_ones()
            + (other.x & other.z).count_ones()
            + 2 * (self.z & other.x).count_ones()
            + 4 * 64
            - (x & z).count_ones();
        ((k % 4) as u8, Self { x, z })
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_identity() {
            return write!(f, "I");
        }
        let mut first = true;
        for (s, p) in self.letters() {
            if !first {
                write!(f, " ")?;
            }
            write!(f, "{}{}", p.as_char(), s)?;
            first = false;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> PauliString {
        PauliString::parse(s).unwrap()
    }

    #[test]
    fn single_site_products() {
        // XZ = -iY, ZX = iY, XY = iZ, YX = -iZ.
        assert_eq!(p("X0").mul(&p("Z0")), (3, p("Y0")));
        assert_eq!(p("Z0").mul(&p("X0")), (1, p("Y0")));
        assert_eq!(p("X0").mul(&p("Y0")), (1, p("Z0")));
        assert_eq!(p("Y0").mul(&p("X0")), (3, p("Z0")));
        assert_eq!(p("Y0").mul(&p("Y0")), (0, PauliString::IDENTITY));
    }

    #[test]
    fn commutation() {
        assert!(!p("X0").commutes_with(&p("Z0")));
        assert!(p("X0 X1").commutes_with(&p("Z0 Z1")));
        assert!(p("X0 X1").commutes_with(&p("Z3")));
    }

    #[test]
    fn parse_display_roundtrip() {
        let s = p("Z10 X0 Y3");
        assert_eq!(s.to_string(), "X0 Y3 Z10");
        assert_eq!(s.weight(), 3);
        assert_eq!(s.span(), 11);
        assert_eq!(p("I"), PauliString::IDENTITY);
        assert!(PauliString::parse("Q1").is_err());
        assert!(PauliString::parse("X64").is_err());
        assert!(PauliString::parse("X1 Z1").is_err());
    }
}
