//! Finitely supported real sequences on ℤ.

use std::fmt;

use crate::sum::NeumaierSum;

/// A real sequence on ℤ stored over the window `offset..offset+len`.
/// Indices outside the window read as zero.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LatticeSequence {
    offset: i64,
    values: Vec<f64>,
    name: Option<String>,
}

impl LatticeSequence {
    pub fn new(offset: i64, values: Vec<f64>) -> Self {
        Self {
            offset,
            values,
            name: None,
        }
    }

    /// All-zero sequence on the inclusive window `lo..=hi`.
    pub fn zeros(lo: i64, hi: i64) -> Self {
        let len = if hi >= lo { (hi - lo + 1) as usize } else { 0 };
        Self::new(lo, vec![0.0; len])
    }

    /// Unit mass at `at`.
    pub fn delta(at: i64) -> Self {
        Self::new(at, vec![1.0])
    }

    /// Builds a sequence from `(index, value)` pairs; repeated indices add.
    pub fn from_pairs<I: IntoIterator<Item = (i64, f64)>>(pairs: I) -> Self {
        let pairs: Vec<_> = pairs.into_iter().collect();
        let Some(lo) = pairs.iter().map(|p| p.0).min() else {
            return Self::default();
        };
        let hi = pairs.iter().map(|p| p.0).max().unwrap_or(lo);
        let mut out = Self::zeros(lo, hi);
        for (n, v) in pairs {
            out.values[(n - lo) as usize] += v;
        }
        out
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    /// Lowest carried index.
    pub fn offset(&self) -> i64 {
        self.offset
    }

    /// Highest carried index; `offset - 1` for an empty window.
    pub fn last_index(&self) -> i64 {
        self.offset + self.values.len() as i64 - 1
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, n: i64) -> f64 {
        let i = n - self.offset;
        if i < 0 {
            return 0.0;
        }
        self.values.get(i as usize).copied().unwrap_or(0.0)
    }

    /// `(index, value)` pairs over the carried window.
    pub fn iter(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.values
            .iter()
            .enumerate()
            .map(move |(i, &v)| (self.offset + i as i64, v))
    }

    /// Compensated `Σ_n s(n)`.
    pub fn sum(&self) -> f64 {
        self.values.iter().copied().sum::<NeumaierSum>().value()
    }

    /// Compensated `Σ_n n^k s(n)`.
    pub fn moment(&self, k: u32) -> f64 {
        self.iter()
            .map(|(n, v)| (n as f64).powi(k as i32) * v)
            .sum::<NeumaierSum>()
            .value()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            offset: self.offset,
            values: self.values.iter().map(|v| v * factor).collect(),
            name: self.name.clone(),
        }
    }

    /// `a·self + b·other` over the union of both windows.
    pub fn combine(&self, a: f64, other: &Self, b: f64) -> Self {
        if self.is_empty() {
            return other.scaled(b);
        }
        if other.is_empty() {
            return self.scaled(a);
        }
        let lo = self.offset.min(other.offset);
        let hi = self.last_index().max(other.last_index());
        let values = (lo..=hi)
            .map(|n| a * self.get(n) + b * other.get(n))
            .collect();
        Self::new(lo, values)
    }

    pub fn add(&self, other: &Self) -> Self {
        self.combine(1.0, other, 1.0)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.combine(1.0, other, -1.0)
    }

    /// Values over the inclusive window `lo..=hi`, zero-padded as needed.
    pub fn window(&self, lo: i64, hi: i64) -> Vec<f64> {
        (lo..=hi).map(|n| self.get(n)).collect()
    }

    /// Same sequence re-windowed to `lo..=hi`. Values outside are dropped.
    pub fn rewindowed(&self, lo: i64, hi: i64) -> Self {
        Self {
            offset: lo,
            values: self.window(lo, hi),
            name: self.name.clone(),
        }
    }
}

impl fmt::Display for LatticeSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, (n, v)) in self.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{n}: {v}")?;
        }
        write!(f, "]")
    }
}
