use crate::ratings::{RatingClass, TransitionMatrix};

use super::EstimationError;

/// N×T panel of observed classes (`None` = unrated that year) plus sectors.
#[derive(Debug, Clone, PartialEq)]
pub struct RatingPanel {
    m: usize,
    n_sectors: usize,
    ratings: Vec<Vec<Option<RatingClass>>>,
    sectors: Vec<usize>,
    firm_ids: Vec<String>,
}

impl RatingPanel {
    /// Validates entries in `1..=M+1`, sectors in `1..=S`, equal row lengths
    /// and that default is never left once entered.
    pub fn new(
        m: usize,
        n_sectors: usize,
        ratings: Vec<Vec<Option<RatingClass>>>,
        sectors: Vec<usize>,
    ) -> Result<Self, EstimationError> {
        let firm_ids = (0..ratings.len()).map(|n| format!("firm{n}")).collect();
        Self::with_ids(m, n_sectors, ratings, sectors, firm_ids)
    }

    pub fn with_ids(
        m: usize,
        n_sectors: usize,
        ratings: Vec<Vec<Option<RatingClass>>>,
        sectors: Vec<usize>,
        firm_ids: Vec<String>,
    ) -> Result<Self, EstimationError> {
        if ratings.len() != sectors.len() || ratings.len() != firm_ids.len() {
            return Err(EstimationError::Panel(format!(
                "{} rating rows, {} sectors, {} ids",
                ratings.len(),
                sectors.len(),
                firm_ids.len()
            )));
        }
        let t = ratings.first().map_or(0, Vec::len);
        let default = (m + 1) as RatingClass;
        for (n, row) in ratings.iter().enumerate() {
            if row.len() != t {
                return Err(EstimationError::Panel(format!(
                    "firm {} has {} periods, expected {t}",
                    firm_ids[n],
                    row.len()
                )));
            }
            if sectors[n] == 0 || sectors[n] > n_sectors {
                return Err(EstimationError::Panel(format!(
                    "firm {} sector {} outside 1..={n_sectors}",
                    firm_ids[n], sectors[n]
                )));
            }
            let mut defaulted = false;
            for (k, cell) in row.iter().enumerate() {
                if let Some(c) = *cell {
                    if c == 0 || c > default {
                        return Err(EstimationError::Panel(format!(
                            "firm {} period {}: class {c} outside 1..={default}",
                            firm_ids[n],
                            k + 1
                        )));
                    }
                    if defaulted && c != default {
                        return Err(EstimationError::Panel(format!(
                            "firm {} leaves default at period {}",
                            firm_ids[n],
                            k + 1
                        )));
                    }
                    defaulted |= c == default;
                }
            }
        }
        Ok(Self {
            m,
            n_sectors,
            ratings,
            sectors,
            firm_ids,
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n_sectors(&self) -> usize {
        self.n_sectors
    }

    pub fn n_firms(&self) -> usize {
        self.ratings.len()
    }

    /// Number of observation periods T.
    pub fn horizon(&self) -> usize {
        self.ratings.first().map_or(0, Vec::len)
    }

    pub fn ratings(&self) -> &[Vec<Option<RatingClass>>] {
        &self.ratings
    }

    pub fn sectors(&self) -> &[usize] {
        &self.sectors
    }

    pub fn firm_ids(&self) -> &[String] {
        &self.firm_ids
    }

    /// Class of firm `n` (0-based) at period `t` (1-based).
    pub fn get(&self, n: usize, t: usize) -> Option<RatingClass> {
        self.ratings[n][t - 1]
    }

    pub fn masked_cells(&self) -> usize {
        self.ratings.iter().flatten().filter(|c| c.is_none()).count()
    }
}

/// I^t(s, m1, m2): firms in sector s moving from non-default class m1 to class m2
/// between periods t−1 and t.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionCounts {
    m: usize,
    n_sectors: usize,
    horizon: usize,
    counts: Vec<u64>,
}

impl TransitionCounts {
    pub fn zeros(m: usize, n_sectors: usize, horizon: usize) -> Self {
        let periods = horizon.saturating_sub(1);
        Self {
            m,
            n_sectors,
            horizon,
            counts: vec![0; periods * n_sectors * m * (m + 1)],
        }
    }

    #[inline]
    fn index(&self, t: usize, s: usize, m1: usize, m2: usize) -> usize {
        debug_assert!(t >= 2 && t <= self.horizon);
        (((t - 2) * self.n_sectors + (s - 1)) * self.m + (m1 - 1)) * (self.m + 1) + (m2 - 1)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n_sectors(&self) -> usize {
        self.n_sectors
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// Periods `t` that carry transitions: `2..=T`.
    pub fn periods(&self) -> std::ops::RangeInclusive<usize> {
        2..=self.horizon
    }

    /// I^t(s, m1, m2); all indices 1-based, `t` in `2..=T`.
    pub fn get(&self, t: usize, s: usize, m1: usize, m2: usize) -> u64 {
        self.counts[self.index(t, s, m1, m2)]
    }

    pub fn add(&mut self, t: usize, s: usize, m1: usize, m2: usize) {
        let k = self.index(t, s, m1, m2);
        self.counts[k] += 1;
    }

    /// Moves m1 → m2 summed over periods and sectors.
    pub fn aggregate(&self, m1: usize, m2: usize) -> u64 {
        let mut total = 0;
        for t in self.periods() {
            for s in 1..=self.n_sectors {
                total += self.get(t, s, m1, m2);
            }
        }
        total
    }

    /// All transitions out of class `m` in sector `s`, over every period.
    pub fn cell_total(&self, m: usize, s: usize) -> u64 {
        let mut total = 0;
        for t in self.periods() {
            for m2 in 1..=self.m + 1 {
                total += self.get(t, s, m, m2);
            }
        }
        total
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// Tallies every observed transition. Masked endpoints and already-defaulted
/// firms contribute nothing.
pub fn count_transitions(panel: &RatingPanel) -> TransitionCounts {
    let m = panel.m();
    let mut counts = TransitionCounts::zeros(m, panel.n_sectors(), panel.horizon());
    let default = (m + 1) as RatingClass;
    for (n, row) in panel.ratings().iter().enumerate() {
        let s = panel.sectors()[n];
        for t in 2..=row.len() {
            if let (Some(a), Some(b)) = (row[t - 2], row[t - 1]) {
                if a != default {
                    counts.add(t, s, a as usize, b as usize);
                }
            }
        }
    }
    counts
}

/// Row-wise relative frequencies of the aggregate counts.
pub fn estimate_transition_matrix(counts: &TransitionCounts) -> Result<TransitionMatrix, EstimationError> {
    let m = counts.m();
    let mut rows = Vec::with_capacity(m);
    for i in 1..=m {
        let row: Vec<u64> = (1..=m + 1).map(|j| counts.aggregate(i, j)).collect();
        let total: u64 = row.iter().sum();
        if total == 0 {
            return Err(EstimationError::EmptyRow(i));
        }
        rows.push(row.iter().map(|&c| c as f64 / total as f64).collect());
    }
    Ok(TransitionMatrix::from_rows_unchecked(rows)?)
}
