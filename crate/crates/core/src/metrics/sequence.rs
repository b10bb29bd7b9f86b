//! Longest-contiguous-matching-block line matcher (Ratcliff/Obershelp),
//! equivalent to `difflib.SequenceMatcher` with no junk heuristic.

use std::collections::HashMap;
use std::hash::Hash;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub(crate) struct Block {
    pub a: usize,
    pub b: usize,
    pub size: usize,
}

pub(crate) struct SequenceMatcher<'s, T: Eq + Hash> {
    a: &'s [T],
    b: &'s [T],
    b2j: HashMap<&'s T, Vec<usize>>,
}

impl<'s, T: Eq + Hash> SequenceMatcher<'s, T> {
    pub fn new(a: &'s [T], b: &'s [T]) -> Self {
        let mut b2j: HashMap<&T, Vec<usize>> = HashMap::new();
        for (j, x) in b.iter().enumerate() {
            b2j.entry(x).or_default().push(j);
        }
        SequenceMatcher { a, b, b2j }
    }

    /// Longest block in `a[alo..ahi]` / `b[blo..bhi]`; among equals, the one
    /// starting earliest in `a`, then earliest in `b`.
    fn longest_match(&self, alo: usize, ahi: usize, blo: usize, bhi: usize) -> Block {
        let mut best = Block { a: alo, b: blo, size: 0 };
        let mut j2len: HashMap<usize, usize> = HashMap::new();
        for i in alo..ahi {
            let mut next: HashMap<usize, usize> = HashMap::new();
            if let Some(js) = self.b2j.get(&self.a[i]) {
                for &j in js {
                    if j < blo {
                        continue;
                    }
                    if j >= bhi {
                        break;
                    }
                    let k = j.checked_sub(1).and_then(|p| j2len.get(&p)).copied().unwrap_or(0) + 1;
                    next.insert(j, k);
                    if k > best.size {
                        best = Block { a: i + 1 - k, b: j + 1 - k, size: k };
                    }
                }
            }
            j2len = next;
        }
        best
    }

    /// Matching blocks in increasing order, adjacent blocks collapsed.
    pub fn matching_blocks(&self) -> Vec<Block> {
        let mut queue = vec![(0, self.a.len(), 0, self.b.len())];
        let mut blocks = Vec::new();
        while let Some((alo, ahi, blo, bhi)) = queue.pop() {
            let m = self.longest_match(alo, ahi, blo, bhi);
            if m.size == 0 {
                continue;
            }
            if alo < m.a && blo < m.b {
                queue.push((alo, m.a, blo, m.b));
            }
            if m.a + m.size < ahi && m.b + m.size < bhi {
                queue.push((m.a + m.size, ahi, m.b + m.size, bhi));
            }
            blocks.push(m);
        }
        blocks.sort_unstable();
        let mut collapsed: Vec<Block> = Vec::with_capacity(blocks.len());
        for blk in blocks {
            match collapsed.last_mut() {
                Some(last) if last.a + last.size == blk.a && last.b + last.size == blk.b => last.size += blk.size,
                _ => collapsed.push(blk),
            }
        }
        collapsed
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_difflib_reference_example() {
        // difflib docs: SequenceMatcher(None, "abxcd", "abcd").get_matching_blocks()
        let a: Vec<char> = "abxcd".chars().collect();
        let b: Vec<char> = "abcd".chars().collect();
        let blocks = SequenceMatcher::new(&a, &b).matching_blocks();
        assert_eq!(blocks, vec![Block { a: 0, b: 0, size: 2 }, Block { a: 3, b: 2, size: 2 }]);
    }

    #[test]
    fn prefers_earliest_longest() {
        // difflib docs: find_longest_match on " abcd" / "abcd abcd" is (0, 4, 5)
        let a: Vec<char> = " abcd".chars().collect();
        let b: Vec<char> = "abcd abcd".chars().collect();
        let m = SequenceMatcher::new(&a, &b);
        assert_eq!(m.longest_match(0, 5, 0, 9), Block { a: 0, b: 4, size: 5 });
        // restricted to "abcd" prefixes, the earliest b wins
        let a2: Vec<char> = "abcd".chars().collect();
        let m2 = SequenceMatcher::new(&a2, &b);
        assert_eq!(m2.longest_match(0, 4, 0, 9), Block { a: 0, b: 0, size: 4 });
    }
}
