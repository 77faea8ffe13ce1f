use nalgebra::DMatrix;
use thiserror::Error;

const SYMMETRY_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SdpError {
    #[error("matrix is not symmetric: {0}")]
    NotSymmetric(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid problem: {0}")]
    Invalid(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

/// Sparse symmetric coefficient matrix over a block-diagonal variable.
///
/// Entries are kept as `(block, i, j, value)` with `i <= j`; an off-diagonal
/// entry stands for both `(i, j)` and `(j, i)`. Repeated entries add up.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SymCoeffs {
    entries: Vec<(usize, usize, usize, f64)>,
}

impl SymCoeffs {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds `value` at positions `(i, j)` and `(j, i)` of `block`.
    pub fn add(&mut self, block: usize, i: usize, j: usize, value: f64) -> &mut Self {
        if value != 0.0 {
            let (i, j) = if i <= j { (i, j) } else { (j, i) };
            self.entries.push((block, i, j, value));
        }
        self
    }

    /// Adds a dense symmetric matrix to `block`.
    pub fn add_dense(&mut self, block: usize, m: &DMatrix<f64>) -> Result<&mut Self, SdpError> {
        check_symmetric(m)?;
        for j in 0..m.ncols() {
            for i in 0..=j {
                self.add(block, i, j, m[(i, j)]);
            }
        }
        Ok(self)
    }

    pub fn from_dense(block: usize, m: &DMatrix<f64>) -> Result<Self, SdpError> {
        let mut c = Self::new();
        c.add_dense(block, m)?;
        Ok(c)
    }

    pub fn entries(&self) -> &[(usize, usize, usize, f64)] {
        &self.entries
    }

    /// `<A, X>` for block matrices `x`.
    pub fn inner(&self, x: &[DMatrix<f64>]) -> f64 {
        self.entries
            .iter()
            .map(|&(b, i, j, v)| if i == j { v * x[b][(i, i)] } else { 2.0 * v * x[b][(i, j)] })
            .sum()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Constraint {
    pub coeffs: SymCoeffs,
    pub rhs: f64,
}

/// `min/max sum_k <C_k, X_k>` subject to `<A_i, X> = b_i`, `<A_j, X> <= b_j`
/// and every diagonal block `X_k` positive semidefinite.
#[derive(Clone, Debug, PartialEq)]
pub struct SdpProblem {
    pub blocks: Vec<usize>,
    pub cost: Vec<DMatrix<f64>>,
    pub eq_constraints: Vec<Constraint>,
    pub ineq_constraints: Vec<Constraint>,
    pub sense: Sense,
}

impl SdpProblem {
    /// Single-block problem with a dense cost.
    pub fn new(cost: DMatrix<f64>, sense: Sense) -> Self {
        Self {
            blocks: vec![cost.nrows()],
            cost: vec![cost],
            eq_constraints: Vec::new(),
            ineq_constraints: Vec::new(),
            sense,
        }
    }

    /// Block-diagonal problem with zero cost.
    pub fn with_blocks(blocks: &[usize], sense: Sense) -> Self {
        Self {
            blocks: blocks.to_vec(),
            cost: blocks.iter().map(|&b| DMatrix::zeros(b, b)).collect(),
            eq_constraints: Vec::new(),
            ineq_constraints: Vec::new(),
            sense,
        }
    }

    /// Total dimension of the block-diagonal variable.
    pub fn n(&self) -> usize {
        self.blocks.iter().sum()
    }

    pub fn add_eq(&mut self, coeffs: SymCoeffs, rhs: f64) {
        self.eq_constraints.push(Constraint { coeffs, rhs });
    }

    pub fn add_ineq(&mut self, coeffs: SymCoeffs, rhs: f64) {
        self.ineq_constraints.push(Constraint { coeffs, rhs });
    }

    /// Equality on block 0 with a dense coefficient.
    pub fn add_eq_dense(&mut self, a: &DMatrix<f64>, rhs: f64) -> Result<(), SdpError> {
        self.add_eq(SymCoeffs::from_dense(0, a)?, rhs);
        Ok(())
    }

    /// Inequality on block 0 with a dense coefficient.
    pub fn add_ineq_dense(&mut self, a: &DMatrix<f64>, rhs: f64) -> Result<(), SdpError> {
        self.add_ineq(SymCoeffs::from_dense(0, a)?, rhs);
        Ok(())
    }

    pub fn validate(&self) -> Result<(), SdpError> {
        if self.blocks.is_empty() || self.blocks.iter().any(|&b| b == 0) {
            return Err(SdpError::Invalid("every block needs dimension >= 1".into()));
        }
        if self.cost.len() != self.blocks.len() {
            return Err(SdpError::Dimension("one cost matrix per block".into()));
        }
        for (c, &b) in self.cost.iter().zip(&self.blocks) {
            if c.nrows() != b || c.ncols() != b {
                return Err(SdpError::Dimension(format!("cost block is {}x{}, want {b}x{b}", c.nrows(), c.ncols())));
            }
            check_symmetric(c)?;
        }
        for con in self.eq_constraints.iter().chain(&self.ineq_constraints) {
            if !con.rhs.is_finite() {
                return Err(SdpError::Invalid("non-finite right-hand side".into()));
            }
            for &(b, i, j, v) in con.coeffs.entries() {
                if b >= self.blocks.len() || j >= self.blocks[b] || i > j {
                    return Err(SdpError::Dimension(format!("entry ({b},{i},{j}) out of range")));
                }
                if !v.is_finite() {
                    return Err(SdpError::Invalid("non-finite coefficient".into()));
                }
            }
        }
        Ok(())
    }
}

fn check_symmetric(m: &DMatrix<f64>) -> Result<(), SdpError> {
    if m.nrows() != m.ncols() {
        return Err(SdpError::Dimension(format!("{}x{} is not square", m.nrows(), m.ncols())));
    }
    let scale = m.amax().max(1.0);
    for j in 0..m.ncols() {
        for i in 0..j {
            if (m[(i, j)] - m[(j, i)]).abs() > SYMMETRY_TOL * scale {
                return Err(SdpError::NotSymmetric(format!("entry ({i},{j})")));
            }
        }
    }
    Ok(())
}
