//! Alternating direction augmented Lagrangian method on the dual problem.
//!
//! With `A` the constraint operator, one sweep is
//!
//! ```text
//! y = -(A A*)^{-1} (mu (A(X) - b) + A(S - C))
//! V = C - A* y - mu X
//! S = V_+,   X <- (1 - rho) X + rho (S - V) / mu
//! ```
//!
//! Inequalities get a nonnegative slack each. Rows are normalized and the cost
//! and right-hand side rescaled before iterating; `mu` follows the ratio of
//! primal to dual infeasibility.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::problem::{SdpError, SdpProblem, Sense};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SdpStatus {
    Optimal,
    MaxIterations,
    Infeasible,
}

#[derive(Clone, Debug)]
pub struct SdpSettings {
    pub tol: f64,
    pub max_iter: usize,
    /// Over-relaxation factor on the primal update, in (0, 2).
    pub relaxation: f64,
    pub mu0: f64,
    /// Window for the residual-divergence guard.
    pub infeasibility_window: usize,
}

impl Default for SdpSettings {
    fn default() -> Self {
        Self { tol: 1e-7, max_iter: 20_000, relaxation: 1.6, mu0: 1.0, infeasibility_window: 500 }
    }
}

/// Starting point for a related solve, in the units of the original problem.
#[derive(Clone, Debug)]
pub struct WarmStart {
    pub x: Vec<DMatrix<f64>>,
    pub dual: DVector<f64>,
    pub mu: f64,
}

#[derive(Clone, Debug)]
pub struct SdpSolution {
    /// Diagonal blocks of the primal variable.
    pub x: Vec<DMatrix<f64>>,
    pub objective: f64,
    pub status: SdpStatus,
    /// Largest absolute violation over equalities and inequalities.
    pub primal_residual: f64,
    /// Relative norm of `C - A* y - S` in scaled units.
    pub dual_residual: f64,
    pub min_eigenvalue: f64,
    pub iterations: usize,
    /// Multipliers, equalities first. For a minimization `C - sum y_i A_i` is
    /// (nearly) PSD and `b'y` bounds the optimum from below; for a maximization
    /// `sum y_i A_i - C` is (nearly) PSD and `b'y` bounds it from above.
    pub dual: DVector<f64>,
    mu: f64,
}

impl SdpSolution {
    pub fn warm_start(&self) -> WarmStart {
        WarmStart { x: self.x.clone(), dual: self.dual.clone(), mu: self.mu }
    }

    /// Dense block-diagonal assembly of `x`.
    pub fn x_full(&self) -> DMatrix<f64> {
        let n: usize = self.x.iter().map(|b| b.nrows()).sum();
        let mut out = DMatrix::zeros(n, n);
        let mut off = 0;
        for b in &self.x {
            let k = b.nrows();
            out.view_mut((off, off), (k, k)).copy_from(b);
            off += k;
        }
        out
    }
}

/// Solves `p` with default settings apart from `tol` and `max_iter`.
pub fn solve_sdp(p: &SdpProblem, tol: f64, max_iter: usize) -> Result<SdpSolution, SdpError> {
    SdpSettings { tol, max_iter, ..SdpSettings::default() }.solve(p, None)
}

/// Frobenius-nearest PSD matrix: eigenvalues below zero are clipped.
pub fn project_psd(s: &DMatrix<f64>) -> DMatrix<f64> {
    let sym = 0.5 * (s + s.transpose());
    let eig = SymmetricEigen::new(sym);
    let q = &eig.eigenvectors;
    let d = eig.eigenvalues.map(|l| l.max(0.0));
    let mut qd = q.clone();
    for (j, mut col) in qd.column_iter_mut().enumerate() {
        col *= d[j];
    }
    let out = &qd * q.transpose();
    0.5 * (&out + out.transpose())
}

/// One row of the constraint operator after merging duplicates.
#[derive(Clone, Debug)]
struct Row {
    entries: Vec<(usize, usize, usize, f64)>,
    slack: Option<(usize, f64)>,
}

impl Row {
    fn norm2(&self) -> f64 {
        let e: f64 = self.entries.iter().map(|&(_, i, j, v)| if i == j { v * v } else { 2.0 * v * v }).sum();
        e + self.slack.map_or(0.0, |(_, v)| v * v)
    }

    fn scale(&mut self, s: f64) {
        for e in &mut self.entries {
            e.3 *= s;
        }
        if let Some(sl) = &mut self.slack {
            sl.1 *= s;
        }
    }
}

/// Point in the product of the PSD blocks and the slack orthant.
#[derive(Clone, Debug)]
struct Point {
    psd: Vec<DMatrix<f64>>,
    lin: DVector<f64>,
}

impl Point {
    fn zeros(blocks: &[usize], m_lin: usize) -> Self {
        Self { psd: blocks.iter().map(|&b| DMatrix::zeros(b, b)).collect(), lin: DVector::zeros(m_lin) }
    }

    fn dot(&self, o: &Point) -> f64 {
        self.psd.iter().zip(&o.psd).map(|(a, b)| a.dot(b)).sum::<f64>() + self.lin.dot(&o.lin)
    }

    fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    fn axpy(&mut self, a: f64, o: &Point) {
        for (s, b) in self.psd.iter_mut().zip(&o.psd) {
            s.zip_apply(b, |x, y| *x += a * y);
        }
        self.lin.axpy(a, &o.lin, 1.0);
    }

    fn scaled(&self, a: f64) -> Point {
        Point { psd: self.psd.iter().map(|b| b * a).collect(), lin: &self.lin * a }
    }
}

struct Operator {
    rows: Vec<Row>,
    blocks: Vec<usize>,
    m_lin: usize,
}

impl Operator {
    fn apply(&self, x: &Point) -> DVector<f64> {
        DVector::from_iterator(
            self.rows.len(),
            self.rows.iter().map(|r| {
                let mut s = 0.0;
                for &(b, i, j, v) in &r.entries {
                    s += if i == j { v * x.psd[b][(i, i)] } else { 2.0 * v * x.psd[b][(i, j)] };
                }
                if let Some((l, v)) = r.slack {
                    s += v * x.lin[l];
                }
                s
            }),
        )
    }

    fn adjoint(&self, y: &DVector<f64>) -> Point {
        let mut out = Point::zeros(&self.blocks, self.m_lin);
        for (r, &yi) in self.rows.iter().zip(y.iter()) {
            if yi == 0.0 {
                continue;
            }
            for &(b, i, j, v) in &r.entries {
                out.psd[b][(i, j)] += yi * v;
                if i != j {
                    out.psd[b][(j, i)] += yi * v;
                }
            }
            if let Some((l, v)) = r.slack {
                out.lin[l] += yi * v;
            }
        }
        out
    }

    fn gram(&self) -> DMatrix<f64> {
        let m = self.rows.len();
        let mut by_pos: BTreeMap<(usize, usize, usize), Vec<(usize, f64)>> = BTreeMap::new();
        for (k, r) in self.rows.iter().enumerate() {
            for &(b, i, j, v) in &r.entries {
                let w: f64 = if i == j { 1.0 } else { 2.0 };
                by_pos.entry((b, i, j)).or_default().push((k, v * w.sqrt()));
            }
        }
        let mut g = DMatrix::zeros(m, m);
        for list in by_pos.values() {
            for &(a, va) in list {
                for &(c, vc) in list {
                    g[(a, c)] += va * vc;
                }
            }
        }
        for (k, r) in self.rows.iter().enumerate() {
            if let Some((_, v)) = r.slack {
                g[(k, k)] += v * v;
            }
        }
        g
    }
}

fn merge_entries(raw: &[(usize, usize, usize, f64)]) -> Vec<(usize, usize, usize, f64)> {
    let mut v = raw.to_vec();
    v.sort_by(|a, b| (a.0, a.1, a.2).cmp(&(b.0, b.1, b.2)));
    let mut out: Vec<(usize, usize, usize, f64)> = Vec::with_capacity(v.len());
    for e in v {
        match out.last_mut() {
            Some(last) if (last.0, last.1, last.2) == (e.0, e.1, e.2) => last.3 += e.3,
            _ => out.push(e),
        }
    }
    out.retain(|e| e.3 != 0.0);
    out
}

/// Splits `v` into `(v_+, (-v)_+)` for one symmetric block.
fn split_block(v: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = v.nrows();
    if n == 1 {
        let a = v[(0, 0)];
        return (DMatrix::from_element(1, 1, a.max(0.0)), DMatrix::from_element(1, 1, (-a).max(0.0)));
    }
    let sym = 0.5 * (v + v.transpose());
    let eig = SymmetricEigen::new(sym.clone());
    let q = &eig.eigenvectors;
    let positives = eig.eigenvalues.iter().filter(|&&l| l > 0.0).count();
    let partial = |keep_positive: bool| {
        let idx: Vec<usize> = (0..n)
            .filter(|&k| if keep_positive { eig.eigenvalues[k] > 0.0 } else { eig.eigenvalues[k] < 0.0 })
            .collect();
        let mut out = DMatrix::zeros(n, n);
        for &k in &idx {
            let l = eig.eigenvalues[k].abs();
            let col = q.column(k);
            out.ger(l, &col, &col, 1.0);
        }
        out
    };
    if positives <= n / 2 {
        let pos = partial(true);
        let neg = &pos - &sym;
        (pos, neg)
    } else {
        let neg = partial(false);
        let pos = &sym + &neg;
        (pos, neg)
    }
}

fn min_eigenvalue(blocks: &[DMatrix<f64>]) -> f64 {
    blocks
        .iter()
        .map(|b| {
            if b.nrows() == 1 {
                b[(0, 0)]
            } else {
                let sym = 0.5 * (b + b.transpose());
                sym.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
            }
        })
        .fold(f64::INFINITY, f64::min)
}

impl SdpSettings {
    pub fn solve(&self, p: &SdpProblem, warm: Option<&WarmStart>) -> Result<SdpSolution, SdpError> {
        p.validate()?;
        if !(self.tol > 0.0) || self.max_iter == 0 {
            return Err(SdpError::Invalid("tol must be positive and max_iter at least 1".into()));
        }
        let n_eq = p.eq_constraints.len();
        let m_lin = p.ineq_constraints.len();
        let sign = match p.sense {
            Sense::Minimize => 1.0,
            Sense::Maximize => -1.0,
        };

        // Rows with their original norms; zero rows are either trivially met or infeasible.
        let mut rows = Vec::new();
        let mut rhs = Vec::new();
        let mut row_norm = Vec::new();
        let mut row_of = Vec::new();
        for (k, con) in p.eq_constraints.iter().chain(&p.ineq_constraints).enumerate() {
            let slack = if k >= n_eq { Some((k - n_eq, 1.0)) } else { None };
            let mut row = Row { entries: merge_entries(con.coeffs.entries()), slack };
            let nr = row.norm2().sqrt();
            if row.entries.is_empty() && slack.is_none() {
                if con.rhs.abs() > self.tol {
                    return Ok(self.infeasible(p, n_eq + m_lin));
                }
                row_of.push(None);
                continue;
            }
            row.scale(1.0 / nr);
            row_of.push(Some(rows.len()));
            rows.push(row);
            rhs.push(con.rhs / nr);
            row_norm.push(nr);
        }
        let op = Operator { rows, blocks: p.blocks.clone(), m_lin };
        let m = op.rows.len();

        let c_norm = p.cost.iter().map(|c| c.norm_squared()).sum::<f64>().sqrt();
        let sigma_c = if c_norm > 0.0 { c_norm } else { 1.0 };
        let b = DVector::from_vec(rhs);
        let sigma_b = b.norm().max(1.0);
        let b_s = &b / sigma_b;
        let c_s = Point {
            psd: p.cost.iter().map(|c| c * (sign / sigma_c)).collect(),
            lin: DVector::zeros(m_lin),
        };

        let gram = op.gram();
        let chol = {
            let mut g = gram.clone();
            let mut reg = 0.0;
            loop {
                if let Some(ch) = g.clone().cholesky() {
                    break ch;
                }
                reg = if reg == 0.0 { 1e-12 * (1.0 + gram.diagonal().max()) } else { reg * 100.0 };
                g = &gram + DMatrix::identity(m, m) * reg;
            }
        };

        // State in scaled units.
        let mut x = Point::zeros(&p.blocks, m_lin);
        let mut y = DVector::zeros(m);
        let mut mu = self.mu0;
        if let Some(w) = warm {
            if w.x.len() == p.blocks.len() && w.x.iter().zip(&p.blocks).all(|(a, &k)| a.nrows() == k) {
                x.psd = w.x.iter().map(|a| a / sigma_b).collect();
                let orig = Point { psd: w.x.clone(), lin: DVector::zeros(m_lin) };
                let ax = op.apply(&orig);
                for l in 0..m_lin {
                    if let Some(r) = row_of[n_eq + l] {
                        x.lin[l] = ((b[r] - ax[r]) * row_norm[r]).max(0.0) / (row_norm[r] * sigma_b);
                    }
                }
            }
            if w.dual.len() == n_eq + m_lin {
                for (k, r) in row_of.iter().enumerate() {
                    if let Some(r) = *r {
                        y[r] = sign * w.dual[k] * row_norm[r] / sigma_c;
                    }
                }
            }
            if w.mu > 0.0 && w.mu.is_finite() {
                mu = w.mu;
            }
        }
        let mut s = {
            let aty = op.adjoint(&y);
            let mut v = c_s.clone();
            v.axpy(-1.0, &aty);
            let mut out = v.clone();
            for (o, vb) in out.psd.iter_mut().zip(&v.psd) {
                *o = split_block(vb).0;
            }
            out.lin = v.lin.map(|a| a.max(0.0));
            out
        };

        let rho = self.relaxation;
        let b_norm = b_s.norm();
        let c_s_norm = c_s.norm();
        let mut x_hat = x.clone();
        let mut status = SdpStatus::MaxIterations;
        let mut iterations = self.max_iter;
                let mut dinf = f64::INFINITY;
        let mut window_start = f64::INFINITY;
        let (mut p_dom, mut d_dom) = (0usize, 0usize);

        for it in 1..=self.max_iter {
            // y-step
            let mut smc = s.clone();
            smc.axpy(-1.0, &c_s);
            let r = (op.apply(&x) - &b_s) * mu + op.apply(&smc);
            y = -chol.solve(&r);
            // V = C - A*y - mu X
            let aty = op.adjoint(&y);
            let mut v = c_s.clone();
            v.axpy(-1.0, &aty);
            v.axpy(-mu, &x);
            for (k, vb) in v.psd.iter().enumerate() {
                let (pos, neg) = split_block(vb);
                s.psd[k] = pos;
                x_hat.psd[k] = neg / mu;
            }
            for l in 0..m_lin {
                s.lin[l] = v.lin[l].max(0.0);
                x_hat.lin[l] = (-v.lin[l]).max(0.0) / mu;
            }
            x = x.scaled(1.0 - rho);
            x.axpy(rho, &x_hat);

            let resid = op.apply(&x_hat) - &b_s;
            let pinf = resid.norm() / (1.0 + b_norm);
            let mut dres = c_s.clone();
            dres.axpy(-1.0, &aty);
            dres.axpy(-1.0, &s);
            dinf = dres.norm() / (1.0 + c_s_norm);
            let pobj = c_s.dot(&x_hat);
            let dobj = b_s.dot(&y);
            let gap = (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs());

            if pinf <= self.tol && dinf <= self.tol && gap <= self.tol {
                let worst = resid.iter().zip(&row_norm).map(|(r, nr)| (r * nr * sigma_b).abs()).fold(0.0, f64::max);
                if worst <= self.tol {
                    status = SdpStatus::Optimal;
                    iterations = it;
                    break;
                }
            }

            if it % self.infeasibility_window == 0 {
                if it >= 2 * self.infeasibility_window && pinf > 1e-3 && pinf > 0.95 * window_start {
                    status = SdpStatus::Infeasible;
                    iterations = it;
                    break;
                }
                window_start = pinf;
            }

            if pinf > 5.0 * dinf {
                p_dom += 1;
            } else if dinf > 5.0 * pinf {
                d_dom += 1;
            }
            if it % 10 == 0 {
                if p_dom >= 8 {
                    mu = (mu * 1.6).min(1e6);
                } else if d_dom >= 8 {
                    mu = (mu / 1.6).max(1e-6);
                }
                p_dom = 0;
                d_dom = 0;
            }
        }

        let x_out: Vec<DMatrix<f64>> = x_hat.psd.iter().map(|b| b * sigma_b).collect();
        let mut dual = DVector::zeros(n_eq + m_lin);
        for (k, r) in row_of.iter().enumerate() {
            if let Some(r) = *r {
                dual[k] = sign * y[r] * sigma_c / row_norm[r];
            }
        }
        let objective: f64 = p.cost.iter().zip(&x_out).map(|(c, x)| c.dot(x)).sum();
        let mut primal_residual: f64 = 0.0;
        for con in &p.eq_constraints {
            primal_residual = primal_residual.max((con.coeffs.inner(&x_out) - con.rhs).abs());
        }
        for con in &p.ineq_constraints {
            primal_residual = primal_residual.max(con.coeffs.inner(&x_out) - con.rhs);
        }
        Ok(SdpSolution {
            min_eigenvalue: min_eigenvalue(&x_out),
            x: x_out,
            objective,
            status,
            primal_residual,
            dual_residual: dinf,
            iterations,
            dual,
            mu,
        })
    }

    fn infeasible(&self, p: &SdpProblem, m: usize) -> SdpSolution {
        SdpSolution {
            x: p.blocks.iter().map(|&k| DMatrix::zeros(k, k)).collect(),
            objective: f64::NAN,
            status: SdpStatus::Infeasible,
            primal_residual: f64::INFINITY,
            dual_residual: f64::INFINITY,
            min_eigenvalue: 0.0,
            iterations: 0,
            dual: DVector::zeros(m),
            mu: self.mu0,
        }
    }
}
