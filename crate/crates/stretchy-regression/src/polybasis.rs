//! Full multivariate monomial enumeration and design-matrix expansion.
//!
//! A basis of input dimension `d` and order `r` contains every monomial
//! `x_1^{n_1} ... x_d^{n_d}` with `n_1 + ... + n_d <= r`, in graded
//! lexicographic order: total degree ascending, ties broken by comparing the
//! exponent tuple `(n_1, ..., n_d)` lexicographically ascending. The first
//! entry is always the all-zeros intercept monomial.

use std::collections::HashMap;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Ordered list of exponent vectors defining the polynomial feature map.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MonomialBasis {
    d: usize,
    r: usize,
    exponents: Vec<Vec<u32>>,
}

impl MonomialBasis {
    /// Enumerates the full basis for input dimension `d` and order `r`.
    pub fn new(d: usize, r: usize) -> Result<Self> {
        enumerate_basis(d, r)
    }

    pub fn input_dim(&self) -> usize {
        self.d
    }

    pub fn order(&self) -> usize {
        self.r
    }

    /// Number of terms, `D`.
    pub fn len(&self) -> usize {
        self.exponents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exponents.is_empty()
    }

    pub fn exponents(&self) -> &[Vec<u32>] {
        &self.exponents
    }

    /// Total degree of term `j`.
    pub fn degree(&self, j: usize) -> u32 {
        self.exponents[j].iter().sum()
    }

    /// For each non-intercept term, the index of the term obtained by
    /// decrementing its first positive exponent, plus that variable index.
    /// Graded-lex ordering guarantees the parent precedes the child, so
    /// expansion can reuse already-computed monomial values.
    fn reuse_table(&self) -> Vec<(usize, usize)> {
        let mut index: HashMap<&[u32], usize> = HashMap::with_capacity(self.exponents.len());
        for (j, e) in self.exponents.iter().enumerate() {
            index.insert(e.as_slice(), j);
        }
        let mut table = vec![(0usize, 0usize); self.exponents.len()];
        for (j, e) in self.exponents.iter().enumerate().skip(1) {
            let var = e
                .iter()
                .position(|&n| n > 0)
                .expect("non-intercept monomial has a positive exponent");
            let mut parent = e.clone();
            parent[var] -= 1;
            let parent_idx = *index
                .get(parent.as_slice())
                .expect("parent monomial is present in a complete graded-lex basis");
            table[j] = (parent_idx, var);
        }
        table
    }
}

/// Expanded feature matrix: rows are samples, columns are monomial terms.
/// Column 0 is the intercept and is identically 1.
#[derive(Debug, Clone)]
pub struct DesignMatrix {
    values: DMatrix<f64>,
    d: usize,
    r: usize,
}

impl DesignMatrix {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.values
    }

    /// Sample count `M`.
    pub fn rows(&self) -> usize {
        self.values.nrows()
    }

    /// Term count `D`.
    pub fn terms(&self) -> usize {
        self.values.ncols()
    }

    /// `(d, r)` of the generating basis.
    pub fn basis_dims(&self) -> (usize, usize) {
        (self.d, self.r)
    }
}

/// Number of monomials of `d` variables with total degree at most `r`,
/// which is the binomial coefficient `C(d + r, r)`.
///
/// Computed with overflow-checked integer arithmetic; counts that do not fit
/// in `usize` are an error.
pub fn count_terms(d: usize, r: usize) -> Result<usize> {
    if d == 0 {
        return Err(Error::InvalidArgument {
            detail: "input dimension d must be at least 1".into(),
        });
    }
    let n = d.checked_add(r).ok_or(Error::ArithmeticOverflow { d, r })?;
    let count = checked_binomial(n as u128, r as u128).ok_or(Error::ArithmeticOverflow { d, r })?;
    usize::try_from(count).map_err(|_| Error::ArithmeticOverflow { d, r })
}

/// `C(n, k)` with checked arithmetic; each intermediate division is exact.
fn checked_binomial(n: u128, k: u128) -> Option<u128> {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 1..=k {
        acc = acc.checked_mul(n - k + i)?;
        acc /= i;
    }
    Some(acc)
}

/// Enumerates all exponent vectors with total degree at most `r` in graded
/// lexicographic order.
pub fn enumerate_basis(d: usize, r: usize) -> Result<MonomialBasis> {
    let expected = count_terms(d, r)?;
    let mut exponents = Vec::with_capacity(expected);
    let mut current = vec![0u32; d];
    for degree in 0..=r {
        push_compositions(&mut exponents, &mut current, 0, degree as u32);
    }
    debug_assert_eq!(exponents.len(), expected);
    Ok(MonomialBasis { d, r, exponents })
}

/// Appends every vector with the given remaining total degree, filling
/// positions `pos..` in lexicographic (ascending) order.
fn push_compositions(out: &mut Vec<Vec<u32>>, current: &mut [u32], pos: usize, remaining: u32) {
    if pos + 1 == current.len() {
        current[pos] = remaining;
        out.push(current.to_vec());
        current[pos] = 0;
        return;
    }
    for value in 0..=remaining {
        current[pos] = value;
        push_compositions(out, current, pos + 1, remaining - value);
    }
    current[pos] = 0;
}

/// Evaluates every basis monomial at every row of `x`.
///
/// Entry `(i, j)` is the product of `x[i, k]` raised to the j-th exponent
/// vector, with `0^0 = 1`. Each monomial is computed from its parent monomial
/// times one variable, so the evaluation is deterministic and cheap even for
/// large bases.
pub fn expand(x: &DMatrix<f64>, basis: &MonomialBasis) -> Result<DesignMatrix> {
    if x.ncols() != basis.d {
        return Err(Error::DimensionMismatch {
            context: "expand: input columns vs basis input dimension",
            expected: basis.d,
            actual: x.ncols(),
        });
    }
    for i in 0..x.nrows() {
        for j in 0..x.ncols() {
            if !x[(i, j)].is_finite() {
                return Err(Error::NumericOverflow {
                    context: "expand input",
                    row: i,
                    col: j,
                });
            }
        }
    }

    let reuse = basis.reuse_table();
    let m = x.nrows();
    let terms = basis.len();
    let mut values = DMatrix::zeros(m, terms);
    for i in 0..m {
        values[(i, 0)] = 1.0;
        for j in 1..terms {
            let (parent, var) = reuse[j];
            let v = values[(i, parent)] * x[(i, var)];
            if !v.is_finite() {
                return Err(Error::NumericOverflow {
                    context: "design matrix entry",
                    row: i,
                    col: j,
                });
            }
            values[(i, j)] = v;
        }
    }
    Ok(DesignMatrix {
        values,
        d: basis.d,
        r: basis.r,
    })
}
