//! Structured index lattice of a refined macro tetrahedron.
//!
//! At refinement level `l` the lattice holds the barycentric grid points
//! `(i, j, k)` with `i + j + k <= n` where `n = 2^(l+2)`. The implicit fourth
//! barycentric weight is `n - i - j - k`. Volume-interior nodes satisfy
//! `i, j, k >= 1` and `i + j + k <= n - 1`.

use super::direction::CardinalDirection;

/// Lattice node identified by its integer barycentric indices and level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct NodeIndex {
    pub i: u32,
    pub j: u32,
    pub k: u32,
    pub level: u8,
}

impl NodeIndex {
    pub fn new(i: u32, j: u32, k: u32, level: u8) -> Self {
        Self { i, j, k, level }
    }
}

/// Classification of a lattice node by its position in the macro element.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeClass {
    MacroVertex,
    MacroEdge,
    MacroFace,
    VolumeInterior,
}

/// Lattice size `n = 2^(l+2)` for refinement level `l`.
#[inline]
pub fn lattice_size(level: u8) -> u32 {
    1u32 << (level as u32 + 2)
}

/// Number of volume-interior nodes `(n-3)(n-2)(n-1)/6` with `n = 2^(l+2)`.
pub fn interior_node_count(level: u8) -> u64 {
    let n = lattice_size(level) as u64;
    (n - 3) * (n - 2) * (n - 1) / 6
}

/// Total number of lattice nodes `(n+1)(n+2)(n+3)/6`.
pub fn total_node_count(level: u8) -> u64 {
    let n = lattice_size(level) as u64;
    (n + 1) * (n + 2) * (n + 3) / 6
}

/// Linear indexing of the lattice `{(i,j,k) : i+j+k <= n}`.
///
/// Nodes are numbered in `(k, j, i)` lexicographic order with `i` fastest,
/// matching the smoother traversal.
#[derive(Debug, Clone)]
pub struct Lattice {
    pub level: u8,
    pub n: u32,
    /// `plane_start[k]` is the linear index of node `(0, 0, k)`.
    plane_start: Vec<u32>,
}

impl Lattice {
    pub fn new(level: u8) -> Self {
        let n = lattice_size(level);
        let mut plane_start = Vec::with_capacity(n as usize + 1);
        let mut acc = 0u32;
        for k in 0..=n {
            plane_start.push(acc);
            let m = n - k; // i + j <= m in this plane
            acc += (m + 1) * (m + 2) / 2;
        }
        Self {
            level,
            n,
            plane_start,
        }
    }

    /// Number of nodes in the lattice.
    #[inline]
    pub fn len(&self) -> usize {
        total_node_count(self.level) as usize
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Whether `(i, j, k)` lies in the lattice.
    #[inline]
    pub fn contains(&self, i: i64, j: i64, k: i64) -> bool {
        i >= 0 && j >= 0 && k >= 0 && i + j + k <= self.n as i64
    }

    /// Whether `(i, j, k)` is a volume-interior node.
    #[inline]
    pub fn is_interior(&self, i: u32, j: u32, k: u32) -> bool {
        i >= 1 && j >= 1 && k >= 1 && i + j + k <= self.n - 1
    }

    /// Linear index of `(i, j, k)`.
    #[inline]
    pub fn linear(&self, i: u32, j: u32, k: u32) -> usize {
        debug_assert!(self.contains(i as i64, j as i64, k as i64));
        let m = (self.n - k) as u64;
        let j = j as u64;
        let row = j * (m + 1) - j * j.saturating_sub(1) / 2;
        self.plane_start[k as usize] as usize + row as usize + i as usize
    }

    /// Inverse of [`Lattice::linear`].
    pub fn coords(&self, idx: usize) -> (u32, u32, u32) {
        let idx = idx as u32;
        let k = match self.plane_start.binary_search(&idx) {
            Ok(k) => k as u32,
            Err(next) => next as u32 - 1,
        };
        let mut rem = idx - self.plane_start[k as usize];
        let m = self.n - k;
        let mut j = 0;
        let mut row_len = m + 1;
        while rem >= row_len {
            rem -= row_len;
            row_len -= 1;
            j += 1;
        }
        (rem, j, k)
    }

    /// Neighbour of `idx` in direction `w`, or `None` when the offset leaves
    /// the lattice.
    pub fn neighbor(&self, idx: NodeIndex, w: CardinalDirection) -> Option<NodeIndex> {
        let (di, dj, dk) = w.offset();
        let (i, j, k) = (
            idx.i as i64 + di as i64,
            idx.j as i64 + dj as i64,
            idx.k as i64 + dk as i64,
        );
        self.contains(i, j, k)
            .then(|| NodeIndex::new(i as u32, j as u32, k as u32, idx.level))
    }

    /// Linear-index offsets of the 15 stencil neighbours along an interior
    /// line `(.., j, k)`. The offsets do not depend on `i`, so a smoother or
    /// operator kernel computes them once per line.
    pub fn neighbor_offsets_for_line(&self, j: u32, k: u32) -> [isize; 15] {
        let base = self.linear(1, j, k) as isize;
        CardinalDirection::ALL.map(|w| {
            let (di, dj, dk) = w.offset();
            let (i2, j2, k2) = (1 + di as i64, j as i64 + dj as i64, k as i64 + dk as i64);
            debug_assert!(self.contains(i2, j2, k2));
            self.linear(i2 as u32, j2 as u32, k2 as u32) as isize - base
        })
    }

    /// Classify a node by how many of its barycentric weights vanish.
    pub fn node_class(&self, i: u32, j: u32, k: u32) -> NodeClass {
        let w0 = self.n - i - j - k;
        let zeros = (i == 0) as u8 + (j == 0) as u8 + (k == 0) as u8 + (w0 == 0) as u8;
        match zeros {
            0 => NodeClass::VolumeInterior,
            1 => NodeClass::MacroFace,
            2 => NodeClass::MacroEdge,
            3 => NodeClass::MacroVertex,
            _ => unreachable!("lattice point inside a face cannot have 4 zero weights"),
        }
    }

    /// Iterate the volume-interior nodes in `(k, j, i)` lexicographic order
    /// with `i` fastest.
    pub fn interior_nodes(&self) -> impl Iterator<Item = (u32, u32, u32)> + '_ {
        let n = self.n;
        (1..=n - 3).flat_map(move |k| {
            (1..=n - 2 - k).flat_map(move |j| (1..=n - 1 - k - j).map(move |i| (i, j, k)))
        })
    }

    /// Iterate every lattice node in linear-index order.
    pub fn all_nodes(&self) -> impl Iterator<Item = (u32, u32, u32)> + '_ {
        let n = self.n;
        (0..=n).flat_map(move |k| {
            (0..=n - k).flat_map(move |j| (0..=n - k - j).map(move |i| (i, j, k)))
        })
    }
}

/// Interior index triples of level `l` in smoother traversal order.
pub fn index_set(level: u8) -> Vec<NodeIndex> {
    let lat = Lattice::new(level);
    lat.interior_nodes()
        .map(|(i, j, k)| NodeIndex::new(i, j, k, level))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interior_counts_match_closed_form() {
        assert_eq!(interior_node_count(0), 1);
        assert_eq!(interior_node_count(1), 35);
        assert_eq!(interior_node_count(2), 455);
        assert_eq!(interior_node_count(5), 333_375);
        assert_eq!(interior_node_count(6), 2_731_135);
    }

    #[test]
    fn index_set_counts_and_order() {
        for level in 0..=3 {
            let set = index_set(level);
            assert_eq!(set.len() as u64, interior_node_count(level));
        }
        let set0 = index_set(0);
        assert_eq!(set0, vec![NodeIndex::new(1, 1, 1, 0)]);
        let set1 = index_set(1);
        assert_eq!(set1[0], NodeIndex::new(1, 1, 1, 1));
        // strictly increasing in (k, j, i) order
        for pair in set1.windows(2) {
            let a = (pair[0].k, pair[0].j, pair[0].i);
            let b = (pair[1].k, pair[1].j, pair[1].i);
            assert!(a < b);
        }
    }

    #[test]
    fn linear_coords_roundtrip() {
        let lat = Lattice::new(2);
        let mut count = 0;
        for (i, j, k) in lat.all_nodes() {
            let idx = lat.linear(i, j, k);
            assert_eq!(idx, count, "linear order must follow all_nodes order");
            assert_eq!(lat.coords(idx), (i, j, k));
            count += 1;
        }
        assert_eq!(count, lat.len());
    }

    #[test]
    fn neighbor_roundtrip_and_center() {
        let lat = Lattice::new(2);
        let idx = NodeIndex::new(5, 5, 5, 2);
        assert_eq!(lat.neighbor(idx, CardinalDirection::Center), Some(idx));
        for w in CardinalDirection::ALL {
            if w == CardinalDirection::Center {
                continue;
            }
            let there = lat.neighbor(idx, w).expect("interior node");
            let back = lat.neighbor(there, w.opposite()).expect("back");
            assert_eq!(back, idx);
        }
        // walking out of the lattice is signalled, not wrapped
        let corner = NodeIndex::new(0, 0, 0, 2);
        assert_eq!(lat.neighbor(corner, CardinalDirection::MiddleWest), None);
    }

    #[test]
    fn node_classes() {
        let lat = Lattice::new(1);
        assert_eq!(lat.node_class(0, 0, 0), NodeClass::MacroVertex);
        assert_eq!(lat.node_class(3, 0, 0), NodeClass::MacroEdge);
        assert_eq!(lat.node_class(2, 3, 0), NodeClass::MacroFace);
        assert_eq!(lat.node_class(1, 1, 1), NodeClass::VolumeInterior);
        assert_eq!(lat.node_class(2, 3, 3), NodeClass::MacroFace); // i+j+k = n
        let interior = lat.interior_nodes().count() as u64;
        assert_eq!(interior, interior_node_count(1));
    }
}
