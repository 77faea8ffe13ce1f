//! Cyclic coordinate ascent over unit-modulus phases.
//!
//! The objective is any function of a fixed set of sesquilinear forms
//! `y_i^H y_j` with `y_i = H_i v`. Changing one coefficient `v_n -> z` moves
//! every form along `c0 + c1 z + c2 conj(z)`, so a coordinate update only
//! needs those three numbers per form and a one-dimensional search on the
//! circle.

use std::f64::consts::PI;

use crate::{CMatrix, CVector, C64};

const GRID: usize = 24;
const GOLDEN_ITERS: usize = 36;
const ACCEPT_MARGIN: f64 = 1e-14;

/// Linear maps and the form pairs the objective reads.
pub(crate) struct FormSet {
    pub maps: Vec<CMatrix>,
    pub pairs: Vec<(usize, usize)>,
}

impl FormSet {
    /// `y_i^H y_j` for every pair.
    pub fn evaluate(&self, v: &CVector) -> Vec<C64> {
        let ys: Vec<CVector> = self.maps.iter().map(|h| h * v).collect();
        self.pairs.iter().map(|&(i, j)| ys[i].dotc(&ys[j])).collect()
    }
}

pub(crate) struct AscentOutcome {
    pub v: CVector,
    /// Objective after each sweep, starting with the initial value.
    pub trace: Vec<f64>,
    pub converged: bool,
}

#[derive(Clone, Copy)]
struct Coeffs {
    c0: C64,
    c1: C64,
    c2: C64,
}

impl Coeffs {
    fn at(&self, z: C64) -> C64 {
        self.c0 + self.c1 * z + self.c2 * z.conj()
    }
}

fn eval_at<F: Fn(&[C64]) -> f64>(f: &F, coeffs: &[Coeffs], phi: f64, buf: &mut [C64]) -> f64 {
    let z = C64::from_polar(1.0, phi);
    for (b, c) in buf.iter_mut().zip(coeffs) {
        *b = c.at(z);
    }
    let val = f(buf);
    if val.is_nan() {
        f64::NEG_INFINITY
    } else {
        val
    }
}

/// Best phase for one coordinate: grid scan then golden-section refinement
/// inside the bracket around the best grid point.
fn search<F: Fn(&[C64]) -> f64>(f: &F, coeffs: &[Coeffs], phi0: f64, buf: &mut [C64]) -> (f64, f64) {
    let step = 2.0 * PI / GRID as f64;
    let mut best = (phi0, eval_at(f, coeffs, phi0, buf));
    for k in 1..GRID {
        let phi = phi0 + k as f64 * step;
        let val = eval_at(f, coeffs, phi, buf);
        if val > best.1 {
            best = (phi, val);
        }
    }
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (best.0 - step, best.0 + step);
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = eval_at(f, coeffs, x1, buf);
    let mut f2 = eval_at(f, coeffs, x2, buf);
    for _ in 0..GOLDEN_ITERS {
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = eval_at(f, coeffs, x1, buf);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = eval_at(f, coeffs, x2, buf);
        }
    }
    for (phi, val) in [(x1, f1), (x2, f2)] {
        if val > best.1 {
            best = (phi, val);
        }
    }
    best
}

/// Maximizes `f(forms(v))` over unit-modulus `v`, starting from `v0`.
///
/// A coordinate change is kept only when it strictly improves the objective,
/// so the trace never decreases. Stops when a full sweep improves by less
/// than `rel_tol` relative, or after `max_sweeps`.
pub(crate) fn maximize<F: Fn(&[C64]) -> f64>(
    set: &FormSet,
    f: F,
    v0: &CVector,
    rel_tol: f64,
    max_sweeps: usize,
) -> AscentOutcome {
    let n = v0.len();
    let mut v = v0.clone();
    let mut ys: Vec<CVector> = set.maps.iter().map(|h| h * &v).collect();
    let forms = |ys: &[CVector]| -> Vec<C64> { set.pairs.iter().map(|&(i, j)| ys[i].dotc(&ys[j])).collect() };
    let mut current = f(&forms(&ys));
    if current.is_nan() {
        current = f64::NEG_INFINITY;
    }
    let mut trace = vec![current];
    let mut coeffs = vec![Coeffs { c0: C64::default(), c1: C64::default(), c2: C64::default() }; set.pairs.len()];
    let mut buf = vec![C64::default(); set.pairs.len()];
    let mut converged = false;
    for _ in 0..max_sweeps {
        let start = current;
        for idx in 0..n {
            let vn = v[idx];
            // Residuals w_i = y_i - h_i v_n and columns h_i.
            let cols: Vec<_> = set.maps.iter().map(|h| h.column(idx)).collect();
            let ws: Vec<CVector> = ys.iter().zip(&cols).map(|(y, h)| y - h * vn).collect();
            for (c, &(i, j)) in coeffs.iter_mut().zip(&set.pairs) {
                let hh = cols[i].dotc(&cols[j]);
                *c = Coeffs { c0: ws[i].dotc(&ws[j]) + hh, c1: ws[i].dotc(&cols[j]), c2: cols[i].dotc(&ws[j]) };
            }
            let (phi, val) = search(&f, &coeffs, vn.arg(), &mut buf);
            if val > current + ACCEPT_MARGIN * current.abs() {
                let z = C64::from_polar(1.0, phi);
                for ((y, w), h) in ys.iter_mut().zip(&ws).zip(&cols) {
                    *y = w + h * z;
                }
                v[idx] = z;
                current = val;
            }
        }
        // Refresh from scratch so rank-one updates do not accumulate drift.
        ys = set.maps.iter().map(|h| h * &v).collect();
        let fresh = f(&forms(&ys));
        current = if fresh.is_nan() { f64::NEG_INFINITY } else { fresh.max(*trace.last().unwrap()) };
        trace.push(current);
        if current - start <= rel_tol * current.abs() {
            converged = true;
            break;
        }
    }
    AscentOutcome { v, trace, converged }
}
