//! Word-restricted attention masks.
//!
//! Encoder self-attention lets a token see tokens of its own and earlier
//! words. Decoder cross-attention lets a PnP token see tokens of words up to
//! `word(p) + L`. Decoder self-attention is plain causal.

use crate::{Error, Limit, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AttentionMask {
    rows: usize,
    cols: usize,
    allow: Vec<bool>,
    /// Word (or position, for causal masks) of each query row.
    pub row_word: Vec<usize>,
    /// Word (or position) of each key column.
    pub col_word: Vec<usize>,
    pub lookahead: Limit,
}

impl AttentionMask {
    fn from_predicate(
        row_word: &[usize],
        col_word: &[usize],
        lookahead: Limit,
        allowed: impl Fn(usize, usize) -> bool,
    ) -> Self {
        let rows = row_word.len();
        let cols = col_word.len();
        let mut allow = Vec::with_capacity(rows * cols);
        for &rw in row_word {
            allow.extend(col_word.iter().map(|&cw| allowed(rw, cw)));
        }
        Self {
            rows,
            cols,
            allow,
            row_word: row_word.to_vec(),
            col_word: col_word.to_vec(),
            lookahead,
        }
    }

    /// Arbitrary allow-matrix; row/column words are set to positions.
    pub fn from_rows(rows: &[Vec<bool>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Shape("ragged mask rows".into()));
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            allow: rows.iter().flatten().copied().collect(),
            row_word: (0..rows.len()).collect(),
            col_word: (0..cols).collect(),
            lookahead: Limit::Infinite,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn allows(&self, row: usize, col: usize) -> bool {
        self.allow[row * self.cols + col]
    }

    pub fn row(&self, row: usize) -> &[bool] {
        &self.allow[row * self.cols..(row + 1) * self.cols]
    }

    pub fn allowed_count(&self, row: usize) -> usize {
        self.row(row).iter().filter(|&&a| a).count()
    }

    /// Elementwise `self ⊆ other`.
    pub fn is_subset_of(&self, other: &AttentionMask) -> bool {
        self.rows == other.rows
            && self.cols == other.cols
            && self.allow.iter().zip(&other.allow).all(|(&a, &b)| !a || b)
    }

    /// Top-left `rows x cols` block.
    pub fn top_left(&self, rows: usize, cols: usize) -> Vec<Vec<bool>> {
        (0..rows).map(|i| self.row(i)[..cols].to_vec()).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<bool>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    /// First row that permits no column, if any.
    pub fn first_empty_row(&self) -> Option<usize> {
        (0..self.rows).find(|&i| !self.row(i).iter().any(|&a| a))
    }
}

fn check_non_decreasing(words: &[usize], what: &str) -> Result<()> {
    if words.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Invalid(format!("{what} word indices must be non-decreasing")));
    }
    Ok(())
}

/// Encoder self-attention: `allow[i][j] = word(t_j) <= word(t_i)`.
pub fn build_encoder_mask(word_of_token: &[usize]) -> Result<AttentionMask> {
    if word_of_token.is_empty() {
        return Err(Error::Empty("encoder mask needs at least one token"));
    }
    check_non_decreasing(word_of_token, "token")?;
    Ok(AttentionMask::from_predicate(
        word_of_token,
        word_of_token,
        Limit::Finite(0),
        |rw, cw| cw <= rw,
    ))
}

/// Encoder-decoder attention: `allow[i][j] = word(t_j) <= word(p_i) + L`.
pub fn build_cross_mask(
    word_of_pnp: &[usize],
    word_of_token: &[usize],
    lookahead: Limit,
) -> Result<AttentionMask> {
    check_non_decreasing(word_of_pnp, "PnP")?;
    check_non_decreasing(word_of_token, "token")?;
    let mask = AttentionMask::from_predicate(word_of_pnp, word_of_token, lookahead, |rw, cw| {
        lookahead.admits(cw, rw)
    });
    if let Some(row) = mask.first_empty_row() {
        return Err(Error::EmptyMaskRow { row });
    }
    Ok(mask)
}

/// Decoder self-attention: `allow[i][j] = j <= i`.
pub fn build_causal_mask(n: usize) -> AttentionMask {
    let pos: Vec<usize> = (0..n).collect();
    AttentionMask::from_predicate(&pos, &pos, Limit::Finite(0), |i, j| j <= i)
}

/// Causal rows for query positions `positions` over keys `0..n_keys`.
pub fn causal_rows(positions: &[usize], n_keys: usize) -> AttentionMask {
    let cols: Vec<usize> = (0..n_keys).collect();
    AttentionMask::from_predicate(positions, &cols, Limit::Finite(0), |i, j| j <= i)
}
