/// Tree pseudo-LRU metadata for one set.
///
/// Nodes use heap order: node 0 is the root, node `i` has children `2i+1`
/// and `2i+2`. Leaves, left to right, are ways `0..ways`. A bit of 0 points
/// left, 1 points right.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PlruTree {
    ways: u32,
    bits: u64,
}

impl PlruTree {
    /// All arrows pointing left. Panics unless `ways` is a power of two in
    /// `1..=64`.
    pub fn new(ways: usize) -> Self {
        Self::from_bits(ways, 0)
    }

    pub fn from_bits(ways: usize, bits: u64) -> Self {
        assert!(
            ways.is_power_of_two() && ways <= 64,
            "tree-PLRU needs a power-of-two associativity up to 64, got {ways}"
        );
        let mask = if ways <= 1 { 0 } else { (1u64 << (ways - 1)) - 1 };
        PlruTree {
            ways: ways as u32,
            bits: bits & mask,
        }
    }

    pub fn ways(&self) -> usize {
        self.ways as usize
    }

    pub fn bit_count(&self) -> usize {
        self.ways() - 1
    }

    pub fn bits(&self) -> u64 {
        self.bits
    }

    pub fn bit(&self, node: usize) -> bool {
        self.bits >> node & 1 == 1
    }

    fn set_bit(&mut self, node: usize, v: bool) {
        if v {
            self.bits |= 1 << node;
        } else {
            self.bits &= !(1 << node);
        }
    }

    /// Internal nodes from the root down to (excluding) the leaf of `way`.
    pub fn path_nodes(&self, way: usize) -> Vec<usize> {
        let mut nodes = Vec::new();
        let mut n = way + self.ways() - 1;
        while n > 0 {
            n = (n - 1) / 2;
            nodes.push(n);
        }
        nodes.reverse();
        nodes
    }

    pub fn evict_candidate(&self) -> usize {
        let inner = self.ways() - 1;
        let mut n = 0;
        while n < inner {
            n = 2 * n + 1 + self.bit(n) as usize;
        }
        n - inner
    }

    /// Points every node on the root-to-`way` path away from `way`.
    pub fn update(&mut self, way: usize) {
        assert!(way < self.ways(), "way {way} out of range");
        let mut n = way + self.ways() - 1;
        while n > 0 {
            let parent = (n - 1) / 2;
            let came_from_left = n == 2 * parent + 1;
            self.set_bit(parent, came_from_left);
            n = parent;
        }
    }

    pub fn updated(mut self, way: usize) -> Self {
        self.update(way);
        self
    }
}

pub fn plru_evict_candidate(t: &PlruTree) -> usize {
    t.evict_candidate()
}

pub fn plru_update(t: &PlruTree, way: usize) -> PlruTree {
    t.updated(way)
}

#[cfg(test)]
mod tests {
    use super::*;

    // bits: root is bit 0, left child bit 1, right child bit 2
    fn four(root: bool, left: bool, right: bool) -> PlruTree {
        PlruTree::from_bits(4, root as u64 | (left as u64) << 1 | (right as u64) << 2)
    }

    #[test]
    fn candidate_follows_arrows() {
        assert_eq!(four(false, false, false).evict_candidate(), 0);
        assert_eq!(four(true, false, false).evict_candidate(), 2);
        assert_eq!(four(true, false, true).evict_candidate(), 3);
        assert_eq!(PlruTree::from_bits(8, u64::MAX).evict_candidate(), 7);
    }

    #[test]
    fn update_points_away() {
        assert_eq!(PlruTree::new(4).updated(0), four(true, true, false));
        let t = PlruTree::from_bits(4, 0b111).updated(3);
        assert!(!t.bit(0) && !t.bit(2));
        let once = PlruTree::new(8).updated(5);
        assert_eq!(once.updated(5), once);
    }

    #[test]
    fn consecutive_misses_visit_every_way() {
        let mut t = PlruTree::new(8);
        let mut seen = [false; 8];
        for _ in 0..8 {
            let w = t.evict_candidate();
            seen[w] = true;
            t.update(w);
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn direct_mapped_tree_is_trivial() {
        let t = PlruTree::new(1);
        assert_eq!(t.bit_count(), 0);
        assert_eq!(t.updated(0).evict_candidate(), 0);
    }
}
