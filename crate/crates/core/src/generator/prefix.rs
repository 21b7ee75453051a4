use std::collections::HashMap;

use crate::trajectory::{Cell, TargetPatternSet};

/// All proper prefixes of the target patterns, including the empty one.
///
/// Stored longest-first (ties lexicographic), which is the order pruning
/// walks categories in. Each entry also knows its ancestors: the longer
/// prefixes that end with it.
#[derive(Debug, Clone)]
pub struct PrefixSet {
    prefixes: Vec<Vec<Cell>>,
    lookup: HashMap<Vec<Cell>, usize>,
    ancestors: Vec<Vec<usize>>,
    max_len: usize,
}

impl PrefixSet {
    pub fn build(tp: &TargetPatternSet) -> Self {
        let mut all: Vec<Vec<Cell>> = vec![Vec::new()];
        for t in tp.patterns() {
            let cells = t.pattern.cells();
            for k in 1..cells.len() {
                all.push(cells[..k].to_vec());
            }
        }
        Self::from_prefixes(all)
    }

    fn from_prefixes(mut all: Vec<Vec<Cell>>) -> Self {
        all.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.cmp(b)));
        all.dedup();
        let lookup: HashMap<Vec<Cell>, usize> = all
            .iter()
            .enumerate()
            .map(|(i, p)| (p.clone(), i))
            .collect();
        let ancestors = all
            .iter()
            .map(|u| {
                all.iter()
                    .enumerate()
                    .filter(|(_, v)| v.len() > u.len() && v.ends_with(u))
                    .map(|(j, _)| j)
                    .collect()
            })
            .collect();
        let max_len = all.first().map_or(0, |p| p.len());
        PrefixSet {
            prefixes: all,
            lookup,
            ancestors,
            max_len,
        }
    }

    pub fn len(&self) -> usize {
        self.prefixes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prefixes.is_empty()
    }

    pub fn get(&self, idx: usize) -> &[Cell] {
        &self.prefixes[idx]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[Cell]> {
        self.prefixes.iter().map(|p| p.as_slice())
    }

    pub fn contains(&self, prefix: &[Cell]) -> bool {
        self.lookup.contains_key(prefix)
    }

    /// Indices of the categories that have `idx` as a proper suffix.
    pub fn ancestors(&self, idx: usize) -> &[usize] {
        &self.ancestors[idx]
    }

    /// Index of the longest prefix that is a suffix of `traj`. The empty
    /// prefix always matches.
    pub fn category_of(&self, traj: &[Cell]) -> usize {
        let top = self.max_len.min(traj.len());
        for k in (0..=top).rev() {
            if let Some(&i) = self.lookup.get(&traj[traj.len() - k..]) {
                return i;
            }
        }
        unreachable!("empty prefix is always present")
    }

    /// The category itself, as cells.
    pub fn prefix_category(&self, traj: &[Cell]) -> &[Cell] {
        self.get(self.category_of(traj))
    }
}
