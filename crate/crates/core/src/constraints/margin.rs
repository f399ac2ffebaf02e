use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::SolutionFamily;
use crate::geometry::XY;
use crate::linalg::{det_rows, extreme_singular_values, numerical_rank};
use crate::{Error, Point, Result};

/// Relative singular-value cut-off for numerical rank.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// `det[ζ(u_{i₁}); …; ζ(u_{iₙ})]` at sample `p`.
pub fn tuple_det(family: &SolutionFamily, indices: &[usize], p: usize) -> f64 {
    assert_eq!(indices.len(), family.n(), "tuple length must equal n");
    let rows: Vec<&[f64]> = indices.iter().map(|&i| family.zeta_row(i, p)).collect();
    det_rows(&rows)
}

/// Numerical rank of the stacked `k × n` matrix at sample `p`.
pub fn family_rank(family: &SolutionFamily, p: usize, tol: f64) -> usize {
    numerical_rank(family.zeta_matrix(p), family.len(), family.n(), tol)
}

/// Calls `f` on every strictly increasing `n`-tuple of `0..k`, in
/// lexicographic order.
fn for_each_combination(k: usize, n: usize, mut f: impl FnMut(&[usize])) {
    if n > k {
        return;
    }
    let mut idx: Vec<usize> = (0..n).collect();
    loop {
        f(&idx);
        // advance the rightmost index that still has room
        let mut i = n;
        while i > 0 && idx[i - 1] == k - n + i - 1 {
            i -= 1;
        }
        if i == 0 {
            return;
        }
        idx[i - 1] += 1;
        for j in i..n {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|v| v as f64).product()
}

/// Σ over ordered tuples and the best strictly increasing tuple at `p`.
fn point_sum(family: &SolutionFamily, p: usize) -> (f64, f64, Vec<usize>) {
    let (k, n) = (family.len(), family.n());
    let mut rows: Vec<&[f64]> = vec![&[]; n];
    let mut sum = 0.0;
    let mut best = -1.0;
    let mut best_tuple = Vec::new();
    for_each_combination(k, n, |idx| {
        for (r, &i) in rows.iter_mut().zip(idx) {
            *r = family.zeta_row(i, p);
        }
        let d = det_rows(&rows).abs();
        sum += d;
        if d > best {
            best = d;
            best_tuple = idx.to_vec();
        }
    });
    // Tuples with a repeated index have two equal rows and vanish; the n!
    // orderings of a distinct tuple share one absolute determinant.
    (sum * factorial(n), best, best_tuple)
}

/// Pointwise admissibility sums over `K` and their minimum.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityReport {
    pub margin: f64,
    pub argmin: XY,
    #[serde(skip)]
    pub argmin_index: usize,
    /// Member indices of the largest `|det|` at the argmin.
    pub best_tuple: Vec<usize>,
    pub n: usize,
    pub member_count: usize,
    pub sample_count: usize,
    /// Typical distance between neighbouring samples.
    pub spacing: f64,
    #[serde(skip)]
    pub per_point_margins: Vec<f64>,
    #[serde(default)]
    pub per_point_margins_file: Option<String>,
}

impl AdmissibilityReport {
    pub fn is_admissible(&self) -> bool {
        self.margin > 0.0
    }

    /// CSV `x,y,margin`, one row per sample.
    pub fn margin_csv(&self, points: &[Point]) -> String {
        let mut out = String::from("x,y,margin\n");
        for (p, m) in points.iter().zip(&self.per_point_margins) {
            out.push_str(&format!("{:.16e},{:.16e},{:.16e}\n", p[0], p[1], m));
        }
        out
    }
}

/// `min_x Σ_{i₁…iₙ} |det[ζ(u_{i₁}); …; ζ(u_{iₙ})](x)|`, the sum running over
/// all ordered tuples with repetition.
pub fn admissibility_margin(family: &SolutionFamily) -> Result<AdmissibilityReport> {
    let n = family.n();
    if family.len() < n {
        return Err(Error::TooFewMembers {
            members: family.len(),
            n,
        });
    }
    let sums: Vec<(f64, f64, Vec<usize>)> = (0..family.sample_count())
        .into_par_iter()
        .map(|p| point_sum(family, p))
        .collect();
    let mut argmin_index = 0;
    for (p, s) in sums.iter().enumerate() {
        if s.0 < sums[argmin_index].0 {
            argmin_index = p;
        }
    }
    let region = family.region();
    Ok(AdmissibilityReport {
        margin: sums.get(argmin_index).map_or(f64::INFINITY, |s| s.0),
        argmin: region.points().get(argmin_index).copied().unwrap_or([f64::NAN; 2]).into(),
        argmin_index,
        best_tuple: sums.get(argmin_index).map(|s| s.2.clone()).unwrap_or_default(),
        n,
        member_count: family.len(),
        sample_count: family.sample_count(),
        spacing: region.spacing(),
        per_point_margins: sums.into_iter().map(|s| s.0).collect(),
        per_point_margins_file: None,
    })
}

/// `max` over ordered tuples of `|det|` at sample `p`; positive iff `p`
/// witnesses the candidate set.
pub fn candidate_margin(family: &SolutionFamily, p: usize) -> Result<f64> {
    let n = family.n();
    if family.len() < n {
        return Err(Error::TooFewMembers {
            members: family.len(),
            n,
        });
    }
    Ok(point_sum(family, p).1)
}

/// Smallest `n`-th singular value of `F_x` over the samples.
#[derive(Clone, Debug, PartialEq)]
pub struct SingularMargin {
    pub min: f64,
    pub argmin_index: usize,
    pub argmin: Point,
    pub per_point: Vec<f64>,
    /// Whether `F_x` has numerical rank `n` at every sample.
    pub full_rank: bool,
}

pub fn singular_margin(family: &SolutionFamily) -> SingularMargin {
    let (k, n) = (family.len(), family.n());
    let extremes: Vec<(f64, f64)> = (0..family.sample_count())
        .into_par_iter()
        .map(|p| extreme_singular_values(family.zeta_matrix(p), k, n))
        .collect();
    let mut argmin_index = 0;
    let mut full_rank = true;
    for (p, &(lo, hi)) in extremes.iter().enumerate() {
        if lo < extremes[argmin_index].0 {
            argmin_index = p;
        }
        if !(lo > RANK_TOLERANCE * hi) {
            full_rank = false;
        }
    }
    SingularMargin {
        min: extremes.get(argmin_index).map_or(0.0, |e| e.0),
        argmin_index,
        argmin: family
            .region()
            .points()
            .get(argmin_index)
            .copied()
            .unwrap_or([f64::NAN; 2]),
        per_point: extremes.iter().map(|e| e.0).collect(),
        full_rank: full_rank && !extremes.is_empty(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn combinations_in_lexicographic_order() {
        let mut seen = Vec::new();
        for_each_combination(4, 2, |c| seen.push(c.to_vec()));
        assert_eq!(seen, vec![vec![0, 1], vec![0, 2], vec![0, 3], vec![1, 2], vec![1, 3], vec![2, 3]]);
        let mut count = 0;
        for_each_combination(7, 3, |_| count += 1);
        assert_eq!(count, 35);
        for_each_combination(2, 3, |_| panic!("no tuples when n > k"));
        let mut single = Vec::new();
        for_each_combination(3, 3, |c| single.push(c.to_vec()));
        assert_eq!(single, vec![vec![0, 1, 2]]);
    }
}
