//! List orders supporting rank queries and move-to-front.
//!
//! Items are `0..n`; positions are `1..=n` with position 1 the top.

/// A permutation of items over positions.
pub trait ListOrder {
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Position of `item` (1-based).
    fn position(&self, item: usize) -> usize;

    /// Item at `pos` (1-based).
    fn item_at(&self, pos: usize) -> usize;

    /// Moves `item` to position 1 and returns its previous position. Items
    /// previously above it shift down by one.
    fn move_to_front(&mut self, item: usize) -> usize;

    /// Items listed from position 1 downwards.
    fn items(&self) -> Vec<usize> {
        (1..=self.len()).map(|p| self.item_at(p)).collect()
    }
}

/// Checks that `order` lists each of `0..order.len()` exactly once.
pub fn is_permutation(order: &[usize]) -> bool {
    let mut seen = vec![false; order.len()];
    for &i in order {
        if i >= order.len() || seen[i] {
            return false;
        }
        seen[i] = true;
    }
    true
}

/// Plain array order; `O(n)` per move. Used as a reference implementation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArrayOrder {
    items: Vec<usize>,
    pos: Vec<usize>,
}

impl ArrayOrder {
    /// `order[k]` is the item at position `k + 1`; must be a permutation.
    pub fn new(order: &[usize]) -> Self {
        debug_assert!(is_permutation(order));
        let mut pos = vec![0; order.len()];
        for (k, &i) in order.iter().enumerate() {
            pos[i] = k;
        }
        Self {
            items: order.to_vec(),
            pos,
        }
    }
}

impl ListOrder for ArrayOrder {
    fn len(&self) -> usize {
        self.items.len()
    }

    fn position(&self, item: usize) -> usize {
        self.pos[item] + 1
    }

    fn item_at(&self, pos: usize) -> usize {
        self.items[pos - 1]
    }

    fn move_to_front(&mut self, item: usize) -> usize {
        let k = self.pos[item];
        self.items[..=k].rotate_right(1);
        for (j, &i) in self.items[..=k].iter().enumerate() {
            self.pos[i] = j;
        }
        k + 1
    }

    fn items(&self) -> Vec<usize> {
        self.items.clone()
    }
}

/// Items sit in time-stamped slots; a Fenwick tree over occupied slots
/// gives positions as prefix counts. Moving to the front takes the next
/// free slot below the current top, and the slots are repacked once the
/// spare room runs out, so each move costs `O(log n)` amortized.
#[derive(Debug, Clone)]
pub struct FenwickOrder {
    n: usize,
    /// Spare slots kept in front of the packed block.
    spare: usize,
    tree: Vec<u32>,
    slot_of: Vec<usize>,
    /// `usize::MAX` marks an empty slot.
    item_in: Vec<usize>,
    next_front: usize,
}

const EMPTY: usize = usize::MAX;

impl FenwickOrder {
    /// `order[k]` is the item at position `k + 1`; must be a permutation.
    pub fn new(order: &[usize]) -> Self {
        debug_assert!(is_permutation(order));
        let n = order.len();
        let spare = n.max(64);
        let size = n + spare;
        let mut me = Self {
            n,
            spare,
            tree: vec![0; size + 1],
            slot_of: vec![0; n],
            item_in: vec![EMPTY; size],
            next_front: spare,
        };
        me.pack(order);
        me
    }

    fn pack(&mut self, order: &[usize]) {
        self.item_in.iter_mut().for_each(|s| *s = EMPTY);
        for (k, &i) in order.iter().enumerate() {
            let slot = self.spare + k;
            self.slot_of[i] = slot;
            self.item_in[slot] = i;
        }
        // linear-time Fenwick build
        let size = self.item_in.len();
        for (s, t) in self.tree.iter_mut().enumerate().skip(1) {
            *t = u32::from(self.item_in[s - 1] != EMPTY);
        }
        for s in 1..=size {
            let parent = s + (s & s.wrapping_neg());
            if parent <= size {
                self.tree[parent] += self.tree[s];
            }
        }
        self.next_front = self.spare;
    }

    fn add(&mut self, slot: usize, delta: i32) {
        let mut s = slot + 1;
        while s < self.tree.len() {
            self.tree[s] = self.tree[s].wrapping_add_signed(delta);
            s += s & s.wrapping_neg();
        }
    }

    fn prefix(&self, slot: usize) -> usize {
        let mut s = slot + 1;
        let mut total = 0usize;
        while s > 0 {
            total += self.tree[s] as usize;
            s &= s - 1;
        }
        total
    }
}

impl ListOrder for FenwickOrder {
    fn len(&self) -> usize {
        self.n
    }

    fn position(&self, item: usize) -> usize {
        self.prefix(self.slot_of[item])
    }

    fn item_at(&self, pos: usize) -> usize {
        assert!(
            pos >= 1 && pos <= self.n,
            "position {pos} out of 1..={}",
            self.n
        );
        // descend to the smallest slot whose prefix count reaches pos
        let mut idx = 0usize;
        let mut rem = pos;
        let mut step = (self.tree.len() - 1).next_power_of_two();
        while step > 0 {
            let next = idx + step;
            if next < self.tree.len() && (self.tree[next] as usize) < rem {
                idx = next;
                rem -= self.tree[next] as usize;
            }
            step >>= 1;
        }
        self.item_in[idx]
    }

    fn move_to_front(&mut self, item: usize) -> usize {
        let old = self.position(item);
        if old == 1 {
            return 1;
        }
        if self.next_front == 0 {
            let order = self.items();
            self.pack(&order);
        }
        let from = self.slot_of[item];
        self.add(from, -1);
        self.item_in[from] = EMPTY;
        self.next_front -= 1;
        let to = self.next_front;
        self.item_in[to] = item;
        self.slot_of[item] = to;
        self.add(to, 1);
        old
    }

    fn items(&self) -> Vec<usize> {
        self.item_in
            .iter()
            .copied()
            .filter(|&i| i != EMPTY)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn permutation_check() {
        assert!(is_permutation(&[2, 0, 1]));
        assert!(!is_permutation(&[0, 0, 1]));
        assert!(!is_permutation(&[0, 3, 1]));
    }

    #[test]
    fn first_move_shifts_items_above() {
        for mut o in [
            Box::new(FenwickOrder::new(&[0, 1, 2, 3, 4])) as Box<dyn ListOrder>,
            Box::new(ArrayOrder::new(&[0, 1, 2, 3, 4])),
        ] {
            assert_eq!(o.move_to_front(3), 4);
            assert_eq!(o.items(), vec![3, 0, 1, 2, 4]);
            assert_eq!(o.position(0), 2);
            assert_eq!(o.position(4), 5);
            assert_eq!(o.item_at(1), 3);
            assert_eq!(o.move_to_front(3), 1);
        }
    }

    #[test]
    fn fenwick_matches_array_through_repacks() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in [1usize, 2, 7, 64, 300] {
            let start: Vec<usize> = (0..n).rev().collect();
            let mut f = FenwickOrder::new(&start);
            let mut a = ArrayOrder::new(&start);
            for _ in 0..5_000 {
                let i = rng.random_range(0..n);
                assert_eq!(f.move_to_front(i), a.move_to_front(i));
                let p = rng.random_range(1..=n);
                assert_eq!(f.item_at(p), a.item_at(p));
            }
            assert_eq!(f.items(), a.items());
            for i in 0..n {
                assert_eq!(f.position(i), a.position(i));
            }
        }
    }
}
