//! Symmetric-function kernels over the squared frequencies.
//!
//! Every structure in this crate is a polynomial in the elementary symmetric
//! polynomials `sigma_j` of the squared frequencies, their one-variable-omitted
//! reductions `sigma_j(i-hat)`, or the power sums `tau_k = 2 * sum_i w_i^k`.
//! This module evaluates all three numerically: by direct subset iteration for
//! small sets (exact for integer-valued inputs) and by the one-variable-at-a-time
//! recurrence for larger ones.

use crate::error::Error;
use crate::{Result, DEGENERACY_TOL_REL};

/// Frequencies above this count are evaluated by recurrence instead of
/// subset enumeration.
const SUBSET_ITERATION_LIMIT: usize = 6;

/// An ordered set of positive angular frequencies `w_1..w_n`.
///
/// Ordering is preserved exactly as given: mode labels, omitted-variable
/// reductions and integral indices all refer to the user's ordering.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencySet {
    omegas: Vec<f64>,
}

/// A group of coinciding frequencies, as detected under the shared
/// degeneracy tolerance.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyCluster {
    /// Representative frequency (mean of the members).
    pub omega: f64,
    /// Indices into the original ordering, ascending.
    pub members: Vec<usize>,
}

impl FrequencyCluster {
    pub fn multiplicity(&self) -> usize {
        self.members.len()
    }
}

impl FrequencySet {
    /// Validates that the list is non-empty and strictly positive.
    pub fn new(omegas: Vec<f64>) -> Result<Self> {
        if omegas.is_empty() {
            return Err(Error::EmptyFrequencySet);
        }
        for (index, &value) in omegas.iter().enumerate() {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::NonPositiveFrequency { index, value });
            }
        }
        Ok(Self { omegas })
    }

    /// Number of frequencies `n`; the phase space has dimension `2n`.
    pub fn len(&self) -> usize {
        self.omegas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omegas.is_empty()
    }

    /// Phase-space dimension `2n`.
    pub fn phase_dim(&self) -> usize {
        2 * self.omegas.len()
    }

    pub fn omegas(&self) -> &[f64] {
        &self.omegas
    }

    pub fn omega(&self, index: usize) -> f64 {
        self.omegas[index]
    }

    /// Relative gap `|w_i - w_j| / max(w_i, w_j)` of the closest pair.
    pub fn min_relative_gap(&self) -> f64 {
        let n = self.omegas.len();
        let mut min_gap = f64::INFINITY;
        for i in 0..n {
            for j in (i + 1)..n {
                let gap = relative_gap(self.omegas[i], self.omegas[j]);
                if gap < min_gap {
                    min_gap = gap;
                }
            }
        }
        min_gap
    }

    /// True when all frequencies are pairwise distinct under the shared
    /// degeneracy tolerance.
    pub fn is_simple(&self) -> bool {
        self.len() == 1 || self.min_relative_gap() >= DEGENERACY_TOL_REL
    }

    /// Errors with the offending pair unless the spectrum is simple.
    pub fn require_simple(&self) -> Result<()> {
        let n = self.omegas.len();
        for i in 0..n {
            for j in (i + 1)..n {
                let gap = relative_gap(self.omegas[i], self.omegas[j]);
                if gap < DEGENERACY_TOL_REL {
                    return Err(Error::DegenerateFrequencies { i, j, gap });
                }
            }
        }
        Ok(())
    }

    /// Groups coinciding frequencies. Clusters are ordered by first
    /// appearance, so a simple spectrum yields one singleton per mode in the
    /// original order.
    pub fn clusters(&self) -> Vec<FrequencyCluster> {
        let mut sorted: Vec<usize> = (0..self.omegas.len()).collect();
        sorted.sort_by(|&a, &b| self.omegas[a].total_cmp(&self.omegas[b]));

        let mut groups: Vec<Vec<usize>> = Vec::new();
        for &idx in &sorted {
            match groups.last_mut() {
                Some(group)
                    if relative_gap(self.omegas[*group.last().unwrap()], self.omegas[idx])
                        < DEGENERACY_TOL_REL =>
                {
                    group.push(idx)
                }
                _ => groups.push(vec![idx]),
            }
        }

        let mut clusters: Vec<FrequencyCluster> = groups
            .into_iter()
            .map(|mut members| {
                members.sort_unstable();
                let omega =
                    members.iter().map(|&i| self.omegas[i]).sum::<f64>() / members.len() as f64;
                FrequencyCluster { omega, members }
            })
            .collect();
        clusters.sort_by_key(|c| c.members[0]);
        clusters
    }
}

fn relative_gap(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.max(b)
}

/// Elementary symmetric polynomial `sigma_j` of the squared frequencies:
/// the sum over all `j`-subsets of products of `w_i^2`, with `sigma_0 = 1`.
pub fn elementary_symmetric(freqs: &FrequencySet, degree: usize) -> Result<f64> {
    let squared: Vec<f64> = freqs.omegas().iter().map(|w| w * w).collect();
    elementary_symmetric_of(&squared, degree)
}

/// Same as [`elementary_symmetric`] with the variable `w_i^2` at `omit_index`
/// removed, i.e. `sigma_j` over the remaining `n - 1` squared frequencies.
/// `omit_index` is zero-based.
pub fn reduced_elementary_symmetric(
    freqs: &FrequencySet,
    omit_index: usize,
    degree: usize,
) -> Result<f64> {
    let n = freqs.len();
    if omit_index >= n {
        return Err(Error::IndexOutOfRange {
            index: omit_index,
            count: n,
        });
    }
    if degree >= n {
        return Err(Error::DegreeOutOfRange {
            degree,
            count: n - 1,
        });
    }
    let squared: Vec<f64> = freqs
        .omegas()
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != omit_index)
        .map(|(_, w)| w * w)
        .collect();
    elementary_symmetric_of(&squared, degree)
}

/// Power sum `tau_k = 2 * sum_i w_i^k` (note the factor two). The structure
/// tensors only consume odd `k`, but any `k >= 1` is accepted.
pub fn power_sum_tau(freqs: &FrequencySet, k: u32) -> f64 {
    2.0 * freqs.omegas().iter().map(|w| w.powi(k as i32)).sum::<f64>()
}

fn elementary_symmetric_of(values: &[f64], degree: usize) -> Result<f64> {
    let n = values.len();
    if degree > n {
        return Err(Error::DegreeOutOfRange { degree, count: n });
    }
    if degree == 0 {
        return Ok(1.0);
    }
    if n <= SUBSET_ITERATION_LIMIT {
        Ok(sigma_by_subsets(values, degree))
    } else {
        Ok(sigma_by_recurrence(values, degree))
    }
}

/// Direct sum over all `degree`-subsets via bitmask enumeration.
fn sigma_by_subsets(values: &[f64], degree: usize) -> f64 {
    let n = values.len();
    let mut total = 0.0;
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize != degree {
            continue;
        }
        let mut product = 1.0;
        for (i, value) in values.iter().enumerate() {
            if mask & (1 << i) != 0 {
                product *= value;
            }
        }
        total += product;
    }
    total
}

/// One-variable-at-a-time recurrence `e_j <- e_j + y * e_{j-1}`, O(n^2).
fn sigma_by_recurrence(values: &[f64], degree: usize) -> f64 {
    let mut e = vec![0.0; degree + 1];
    e[0] = 1.0;
    for (count, &y) in values.iter().enumerate() {
        let top = degree.min(count + 1);
        for j in (1..=top).rev() {
            e[j] += y * e[j - 1];
        }
    }
    e[degree]
}
