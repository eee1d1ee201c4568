use std::collections::{BTreeMap, BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

use super::{Day, Group, PanelError};

/// Raw per-(coin, day) vectors for one feature group, possibly with gaps.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupBlock {
    pub group: Group,
    pub width: usize,
    coins: Vec<String>,
    cells: BTreeMap<String, BTreeMap<Day, Vec<f64>>>,
}

impl GroupBlock {
    pub fn new(group: Group, width: usize) -> Self {
        Self {
            group,
            width,
            coins: Vec::new(),
            cells: BTreeMap::new(),
        }
    }

    /// Adds or replaces a cell. Coins keep their first-insertion order.
    pub fn insert(&mut self, coin: &str, day: Day, values: Vec<f64>) {
        if !self.cells.contains_key(coin) {
            self.coins.push(coin.to_string());
        }
        self.cells.entry(coin.to_string()).or_default().insert(day, values);
    }

    pub fn coins(&self) -> &[String] {
        &self.coins
    }

    pub fn get(&self, coin: &str, day: Day) -> Option<&[f64]> {
        self.cells.get(coin)?.get(&day).map(Vec::as_slice)
    }

    fn days(&self) -> impl Iterator<Item = Day> + '_ {
        self.cells.values().flat_map(|m| m.keys().copied())
    }
}

/// How cells absent from a group's source are filled during assembly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FillPolicy {
    /// Carry the last observed vector forward; zeros before the first observation.
    #[default]
    ForwardThenZero,
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupLayout {
    pub group: Group,
    pub width: usize,
    pub offset: usize,
}

/// Dense, gap-free features indexed by (coin, day); rows concatenate groups in layout order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeaturePanel {
    coins: Vec<String>,
    days: Vec<Day>,
    groups: Vec<GroupLayout>,
    width: usize,
    fill_policy: FillPolicy,
    values: Vec<f64>,
}

impl FeaturePanel {
    /// Builds a panel from a dense `[coin][day][feature]` buffer.
    pub fn from_dense(
        coins: Vec<String>,
        days: Vec<Day>,
        group_widths: &[(Group, usize)],
        fill_policy: FillPolicy,
        values: Vec<f64>,
    ) -> Result<Self, PanelError> {
        let groups = layout(group_widths)?;
        let width = group_widths.iter().map(|g| g.1).sum::<usize>();
        if days.windows(2).any(|w| w[0] >= w[1]) {
            return Err(PanelError::Manifest("panel days must be strictly increasing".into()));
        }
        let expected = coins.len() * days.len() * width;
        if values.len() != expected {
            return Err(PanelError::Manifest(format!(
                "dense buffer holds {} values, expected {expected}",
                values.len()
            )));
        }
        Ok(Self {
            coins,
            days,
            groups,
            width,
            fill_policy,
            values,
        })
    }

    pub fn coins(&self) -> &[String] {
        &self.coins
    }

    pub fn days(&self) -> &[Day] {
        &self.days
    }

    pub fn groups(&self) -> &[GroupLayout] {
        &self.groups
    }

    pub fn fill_policy(&self) -> FillPolicy {
        self.fill_policy
    }

    /// Per-day feature width across all groups.
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn num_coins(&self) -> usize {
        self.coins.len()
    }

    pub fn num_days(&self) -> usize {
        self.days.len()
    }

    pub fn day_index(&self, day: Day) -> Option<usize> {
        self.days.binary_search(&day).ok()
    }

    pub fn coin_index(&self, coin: &str) -> Option<usize> {
        self.coins.iter().position(|c| c == coin)
    }

    pub fn row(&self, coin: usize, day: usize) -> &[f64] {
        let start = (coin * self.days.len() + day) * self.width;
        &self.values[start..start + self.width]
    }

    pub fn row_mut(&mut self, coin: usize, day: usize) -> &mut [f64] {
        let start = (coin * self.days.len() + day) * self.width;
        &mut self.values[start..start + self.width]
    }

    pub fn group_row(&self, coin: usize, day: usize, group: Group) -> Option<&[f64]> {
        let g = self.groups.iter().find(|g| g.group == group)?;
        Some(&self.row(coin, day)[g.offset..g.offset + g.width])
    }

    /// Keeps only the listed groups, preserving layout order.
    pub fn select_groups(&self, keep: &[Group]) -> Result<FeaturePanel, PanelError> {
        let kept: Vec<GroupLayout> = self.groups.iter().copied().filter(|g| keep.contains(&g.group)).collect();
        if let Some(missing) = keep.iter().find(|k| !kept.iter().any(|g| g.group == **k)) {
            return Err(PanelError::UnknownGroup(missing.to_string()));
        }
        let widths: Vec<(Group, usize)> = kept.iter().map(|g| (g.group, g.width)).collect();
        let width: usize = widths.iter().map(|g| g.1).sum();
        let mut values = Vec::with_capacity(self.coins.len() * self.days.len() * width);
        for c in 0..self.coins.len() {
            for d in 0..self.days.len() {
                let row = self.row(c, d);
                for g in &kept {
                    values.extend_from_slice(&row[g.offset..g.offset + g.width]);
                }
            }
        }
        FeaturePanel::from_dense(self.coins.clone(), self.days.clone(), &widths, self.fill_policy, values)
    }

    /// Restricts and reorders coins. Every listed coin must be present.
    pub fn with_coin_order(&self, order: &[String]) -> Result<FeaturePanel, PanelError> {
        let mut values = Vec::with_capacity(order.len() * self.days.len() * self.width);
        for coin in order {
            let c = self
                .coin_index(coin)
                .ok_or_else(|| PanelError::Manifest(format!("coin `{coin}` not in panel")))?;
            let start = c * self.days.len() * self.width;
            values.extend_from_slice(&self.values[start..start + self.days.len() * self.width]);
        }
        let widths: Vec<(Group, usize)> = self.groups.iter().map(|g| (g.group, g.width)).collect();
        FeaturePanel::from_dense(order.to_vec(), self.days.clone(), &widths, self.fill_policy, values)
    }
}

fn layout(group_widths: &[(Group, usize)]) -> Result<Vec<GroupLayout>, PanelError> {
    let mut seen = HashSet::new();
    let mut offset = 0;
    let mut out = Vec::with_capacity(group_widths.len());
    for &(group, width) in group_widths {
        if !seen.insert(group) {
            return Err(PanelError::DuplicateGroup(group));
        }
        out.push(GroupLayout { group, width, offset });
        offset += width;
    }
    Ok(out)
}

/// Aligns group blocks into one dense panel.
///
/// Coins are the intersection across groups (ordered as in the first block by group order);
/// days are the union of all observed days. Groups are laid out in P, E, R order.
pub fn assemble_panel(blocks: &[GroupBlock], policy: FillPolicy) -> Result<FeaturePanel, PanelError> {
    if blocks.is_empty() {
        return Err(PanelError::EmptyIntersection);
    }
    let mut ordered: Vec<&GroupBlock> = blocks.iter().collect();
    ordered.sort_by_key(|b| b.group);
    let widths: Vec<(Group, usize)> = ordered.iter().map(|b| (b.group, b.width)).collect();
    layout(&widths)?;

    for b in &ordered {
        for per_day in b.cells.values() {
            if let Some(bad) = per_day.values().find(|v| v.len() != b.width) {
                return Err(PanelError::WidthMismatch {
                    group: b.group,
                    expected: b.width,
                    found: bad.len(),
                });
            }
        }
    }

    let coins: Vec<String> = ordered[0]
        .coins
        .iter()
        .filter(|c| ordered.iter().all(|b| b.cells.contains_key(*c)))
        .cloned()
        .collect();
    if coins.is_empty() {
        return Err(PanelError::EmptyIntersection);
    }
    let days: Vec<Day> = ordered
        .iter()
        .flat_map(|b| b.days())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if days.is_empty() {
        return Err(PanelError::EmptyRange);
    }

    let width: usize = widths.iter().map(|w| w.1).sum();
    let mut values = Vec::with_capacity(coins.len() * days.len() * width);
    for coin in &coins {
        let mut last: Vec<Option<&[f64]>> = vec![None; ordered.len()];
        for &day in &days {
            for (gi, b) in ordered.iter().enumerate() {
                match b.get(coin, day) {
                    Some(v) => {
                        last[gi] = Some(v);
                        values.extend_from_slice(v);
                    }
                    None => match (policy, last[gi]) {
                        (FillPolicy::ForwardThenZero, Some(prev)) => values.extend_from_slice(prev),
                        _ => values.extend(std::iter::repeat_n(0.0, b.width)),
                    },
                }
            }
        }
    }
    FeaturePanel::from_dense(coins, days, &widths, policy, values)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn day(i: u64) -> Day {
        Day::from_ymd_opt(2018, 1, 1).unwrap() + chrono::Days::new(i)
    }

    #[test]
    fn union_of_days_with_fill() {
        let mut e = GroupBlock::new(Group::E, 1);
        let mut r = GroupBlock::new(Group::R, 1);
        for i in 1..=10 {
            e.insert("A", day(i), vec![i as f64]);
        }
        for i in 3..=12 {
            r.insert("A", day(i), vec![100.0 + i as f64]);
        }
        let p = assemble_panel(&[r, e], FillPolicy::ForwardThenZero).unwrap();
        assert_eq!(p.days().first(), Some(&day(1)));
        assert_eq!(p.days().last(), Some(&day(12)));
        assert_eq!(p.num_days(), 12);
        // E first in layout, R second.
        assert_eq!(p.row(0, 0), &[1.0, 0.0]);
        assert_eq!(p.row(0, 11), &[10.0, 112.0]);
    }

    #[test]
    fn forward_fill_missing_cell_for_one_coin() {
        let mut e = GroupBlock::new(Group::E, 2);
        for i in 1..=7 {
            e.insert("B", day(i), vec![0.0, 0.0]);
            if i != 6 {
                e.insert("A", day(i), vec![i as f64, -(i as f64)]);
            }
        }
        let p = assemble_panel(&[e], FillPolicy::ForwardThenZero).unwrap();
        let a = p.coin_index("A").unwrap();
        let d6 = p.day_index(day(6)).unwrap();
        assert_eq!(p.row(a, d6), &[5.0, -5.0]);
        let z = assemble_panel(&[{
            let mut e = GroupBlock::new(Group::E, 1);
            e.insert("B", day(1), vec![1.0]);
            e.insert("B", day(2), vec![1.0]);
            e.insert("A", day(2), vec![3.0]);
            e
        }], FillPolicy::ForwardThenZero)
        .unwrap();
        let a = z.coin_index("A").unwrap();
        assert_eq!(z.row(a, 0), &[0.0]);
    }

    #[test]
    fn full_group_widths_sum_to_455() {
        let mut blocks = Vec::new();
        for (g, w) in [(Group::E, 88), (Group::R, 366), (Group::P, 1)] {
            let mut b = GroupBlock::new(g, w);
            b.insert("BTC", day(0), vec![0.0; w]);
            blocks.push(b);
        }
        let p = assemble_panel(&blocks, FillPolicy::ForwardThenZero).unwrap();
        assert_eq!(p.width(), 455);
        assert_eq!(p.groups()[0].group, Group::P);
    }

    #[test]
    fn width_mismatch() {
        let mut b = GroupBlock::new(Group::E, 3);
        b.insert("A", day(0), vec![1.0, 2.0]);
        assert!(matches!(
            assemble_panel(&[b], FillPolicy::Zero),
            Err(PanelError::WidthMismatch { expected: 3, found: 2, .. })
        ));
    }

    #[test]
    fn empty_intersection() {
        let mut e = GroupBlock::new(Group::E, 1);
        e.insert("A", day(0), vec![1.0]);
        let mut r = GroupBlock::new(Group::R, 1);
        r.insert("B", day(0), vec![1.0]);
        assert!(matches!(
            assemble_panel(&[e, r], FillPolicy::Zero),
            Err(PanelError::EmptyIntersection)
        ));
    }

    #[test]
    fn coin_intersection_and_reorder() {
        let mut e = GroupBlock::new(Group::E, 1);
        let mut r = GroupBlock::new(Group::R, 1);
        for (i, c) in ["A", "B", "C"].iter().enumerate() {
            e.insert(c, day(0), vec![i as f64]);
        }
        r.insert("C", day(0), vec![9.0]);
        r.insert("A", day(0), vec![7.0]);
        let p = assemble_panel(&[e, r], FillPolicy::Zero).unwrap();
        assert_eq!(p.coins(), &["A".to_string(), "C".to_string()]);
        let q = p.with_coin_order(&["C".into(), "A".into()]).unwrap();
        assert_eq!(q.row(0, 0), &[2.0, 9.0]);
        let only_r = q.select_groups(&[Group::R]).unwrap();
        assert_eq!(only_r.row(1, 0), &[7.0]);
        assert_eq!(only_r.width(), 1);
    }
}
