//! The 15 cardinal directions of the structured-lattice stencil.
//!
//! Node neighbours inside a refined macro tetrahedron are named by a plane
//! letter (`b`ottom, `m`iddle, `t`op, i.e. `k-1`, `k`, `k+1`) followed by a
//! compass orientation within the plane. `mc` is the node itself.

/// One of the 15 stencil couplings of an interior lattice node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum CardinalDirection {
    BottomEast,
    BottomCenter,
    BottomNorthWest,
    BottomNorth,
    MiddleSouth,
    MiddleSouthEast,
    MiddleWest,
    Center,
    MiddleEast,
    MiddleNorthWest,
    MiddleNorth,
    TopSouth,
    TopSouthEast,
    TopWest,
    TopCenter,
}

pub use CardinalDirection as Dir;

impl CardinalDirection {
    /// All 15 directions in storage order.
    pub const ALL: [Dir; 15] = [
        Dir::BottomEast,
        Dir::BottomCenter,
        Dir::BottomNorthWest,
        Dir::BottomNorth,
        Dir::MiddleSouth,
        Dir::MiddleSouthEast,
        Dir::MiddleWest,
        Dir::Center,
        Dir::MiddleEast,
        Dir::MiddleNorthWest,
        Dir::MiddleNorth,
        Dir::TopSouth,
        Dir::TopSouthEast,
        Dir::TopWest,
        Dir::TopCenter,
    ];

    /// Lattice index offset `(di, dj, dk)` encoded by this direction.
    #[inline]
    pub const fn offset(self) -> (i32, i32, i32) {
        match self {
            Dir::BottomEast => (1, 0, -1),
            Dir::BottomCenter => (0, 0, -1),
            Dir::BottomNorthWest => (-1, 1, -1),
            Dir::BottomNorth => (0, 1, -1),
            Dir::MiddleSouth => (0, -1, 0),
            Dir::MiddleSouthEast => (1, -1, 0),
            Dir::MiddleWest => (-1, 0, 0),
            Dir::Center => (0, 0, 0),
            Dir::MiddleEast => (1, 0, 0),
            Dir::MiddleNorthWest => (-1, 1, 0),
            Dir::MiddleNorth => (0, 1, 0),
            Dir::TopSouth => (0, -1, 1),
            Dir::TopSouthEast => (1, -1, 1),
            Dir::TopWest => (-1, 0, 1),
            Dir::TopCenter => (0, 0, 1),
        }
    }

    /// The direction with the negated offset.
    #[inline]
    pub const fn opposite(self) -> Dir {
        match self {
            Dir::BottomEast => Dir::TopWest,
            Dir::BottomCenter => Dir::TopCenter,
            Dir::BottomNorthWest => Dir::TopSouthEast,
            Dir::BottomNorth => Dir::TopSouth,
            Dir::MiddleSouth => Dir::MiddleNorth,
            Dir::MiddleSouthEast => Dir::MiddleNorthWest,
            Dir::MiddleWest => Dir::MiddleEast,
            Dir::Center => Dir::Center,
            Dir::MiddleEast => Dir::MiddleWest,
            Dir::MiddleNorthWest => Dir::MiddleSouthEast,
            Dir::MiddleNorth => Dir::MiddleSouth,
            Dir::TopSouth => Dir::BottomNorth,
            Dir::TopSouthEast => Dir::BottomNorthWest,
            Dir::TopWest => Dir::BottomEast,
            Dir::TopCenter => Dir::BottomCenter,
        }
    }

    /// Index into a 15-element weight array.
    #[inline]
    pub const fn index(self) -> usize {
        self as usize
    }

    /// Short name as used in stencil layouts (`be`, `mc`, `tse`, ...).
    pub const fn short_name(self) -> &'static str {
        match self {
            Dir::BottomEast => "be",
            Dir::BottomCenter => "bc",
            Dir::BottomNorthWest => "bnw",
            Dir::BottomNorth => "bn",
            Dir::MiddleSouth => "ms",
            Dir::MiddleSouthEast => "mse",
            Dir::MiddleWest => "mw",
            Dir::Center => "mc",
            Dir::MiddleEast => "me",
            Dir::MiddleNorthWest => "mnw",
            Dir::MiddleNorth => "mn",
            Dir::TopSouth => "ts",
            Dir::TopSouthEast => "tse",
            Dir::TopWest => "tw",
            Dir::TopCenter => "tc",
        }
    }

    /// First register set of the split smoother; these are exactly the
    /// neighbours not yet updated in a lexicographic sweep, minus `tc`.
    pub const SET_ONE: [Dir; 6] = [
        Dir::MiddleEast,
        Dir::MiddleNorthWest,
        Dir::MiddleNorth,
        Dir::TopSouth,
        Dir::TopSouthEast,
        Dir::TopWest,
    ];

    /// Second register set of the split smoother (`mw` is handled separately
    /// as the recursive coupling).
    pub const SET_TWO: [Dir; 7] = [
        Dir::TopCenter,
        Dir::BottomCenter,
        Dir::BottomEast,
        Dir::BottomNorthWest,
        Dir::BottomNorth,
        Dir::MiddleSouth,
        Dir::MiddleSouthEast,
    ];
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fifteen_directions_center_is_zero() {
        assert_eq!(Dir::ALL.len(), 15);
        assert_eq!(Dir::Center.offset(), (0, 0, 0));
    }

    #[test]
    fn opposites_negate_offsets() {
        for d in Dir::ALL {
            let (di, dj, dk) = d.offset();
            let (oi, oj, ok) = d.opposite().offset();
            assert_eq!((di + oi, dj + oj, dk + ok), (0, 0, 0), "{d:?}");
            assert_eq!(d.opposite().opposite(), d);
        }
    }

    #[test]
    fn offsets_are_distinct() {
        let mut seen = std::collections::HashSet::new();
        for d in Dir::ALL {
            assert!(seen.insert(d.offset()));
        }
    }

    #[test]
    fn split_sets_partition_the_non_center_non_west_directions() {
        let mut all: Vec<Dir> = Dir::SET_ONE.into_iter().chain(Dir::SET_TWO).collect();
        all.push(Dir::MiddleWest);
        all.push(Dir::Center);
        all.sort_by_key(|d| d.index());
        let mut expect: Vec<Dir> = Dir::ALL.to_vec();
        expect.sort_by_key(|d| d.index());
        assert_eq!(all, expect);
    }
}
