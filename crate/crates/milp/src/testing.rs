//! Brute-force reference solvers for tiny models, plus random model generators.
//!
//! Nothing here shares code with the simplex or branch-and-bound engines; it is
//! ground truth for tests.

use rand::Rng;

use crate::model::{Comparator, Model, VarKind};

/// Optimum of a small bounded LP by enumerating every vertex of the feasible polytope.
///
/// Every variable must have finite bounds. Returns `None` when the polytope is empty.
pub fn vertex_enumeration(model: &Model) -> Option<(f64, Vec<f64>)> {
    let n = model.num_vars();
    // Each hyperplane is (coefficients, rhs).
    let mut planes: Vec<(Vec<f64>, f64)> = Vec::new();
    for row in model.constraints() {
        let mut a = vec![0.0; n];
        for &(v, c) in &row.terms {
            a[v.0] += c;
        }
        planes.push((a, row.rhs));
    }
    for (j, v) in model.vars().iter().enumerate() {
        assert!(v.lower.is_finite() && v.upper.is_finite(), "vertex enumeration needs a box");
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        planes.push((e.clone(), v.lower));
        planes.push((e, v.upper));
    }
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut combo: Vec<usize> = (0..n).collect();
    loop {
        let a: Vec<Vec<f64>> = combo.iter().map(|&k| planes[k].0.clone()).collect();
        let b: Vec<f64> = combo.iter().map(|&k| planes[k].1).collect();
        if let Some(x) = solve_square(a, b) {
            if is_feasible(model, &x, 1e-9) {
                let obj = model.objective_value(&x);
                if best.as_ref().is_none_or(|(o, _)| obj < *o) {
                    best = Some((obj, x));
                }
            }
        }
        if !next_combination(&mut combo, planes.len()) {
            break;
        }
    }
    best
}

/// Optimum of a pure-integer model by trying every point of its bounding box.
pub fn integer_enumeration(model: &Model) -> Option<(f64, Vec<f64>)> {
    let lo: Vec<i64> = model.vars().iter().map(|v| v.lower.ceil() as i64).collect();
    let hi: Vec<i64> = model.vars().iter().map(|v| v.upper.floor() as i64).collect();
    assert!(model.vars().iter().all(|v| v.kind != VarKind::Continuous));
    if lo.iter().zip(&hi).any(|(l, h)| l > h) {
        return None;
    }
    let mut x: Vec<i64> = lo.clone();
    let mut best: Option<(f64, Vec<f64>)> = None;
    loop {
        let xf: Vec<f64> = x.iter().map(|&v| v as f64).collect();
        if is_feasible(model, &xf, 1e-9) {
            let obj = model.objective_value(&xf);
            if best.as_ref().is_none_or(|(o, _)| obj < *o) {
                best = Some((obj, xf));
            }
        }
        let mut k = 0;
        loop {
            if k == x.len() {
                return best;
            }
            if x[k] < hi[k] {
                x[k] += 1;
                break;
            }
            x[k] = lo[k];
            k += 1;
        }
    }
}

fn is_feasible(model: &Model, x: &[f64], tol: f64) -> bool {
    model
        .vars()
        .iter()
        .zip(x)
        .all(|(v, &xi)| xi >= v.lower - tol && xi <= v.upper + tol)
        && model.constraints().iter().all(|r| {
            let lhs: f64 = r.terms.iter().map(|&(v, c)| c * x[v.0]).sum();
            let scale = 1.0 + r.rhs.abs();
            match r.cmp {
                Comparator::Le => lhs <= r.rhs + tol * scale,
                Comparator::Ge => lhs >= r.rhs - tol * scale,
                Comparator::Eq => (lhs - r.rhs).abs() <= tol * scale,
            }
        })
}

fn solve_square(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-10 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in 0..n {
            if r != col {
                let f = a[r][col] / a[col][col];
                if f != 0.0 {
                    let pivot_row = a[col].clone();
                    for (x, p) in a[r][col..].iter_mut().zip(&pivot_row[col..]) {
                        *x -= f * p;
                    }
                    b[r] -= f * b[col];
                }
            }
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

fn next_combination(combo: &mut [usize], n: usize) -> bool {
    let k = combo.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if combo[i] < n - k + i {
            combo[i] += 1;
            for j in i + 1..k {
                combo[j] = combo[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Random LP over a box with `vars` variables and a few integer-coefficient rows.
pub fn random_lp(rng: &mut impl Rng, vars: usize) -> Model {
    let mut m = Model::new("random-lp");
    let ids: Vec<_> = (0..vars)
        .map(|j| {
            let lo = rng.gen_range(-3..=1) as f64;
            let hi = lo + rng.gen_range(1..=6) as f64;
            m.add_continuous(format!("x{j}"), lo, hi)
        })
        .collect();
    let rows = rng.gen_range(1..=4);
    for i in 0..rows {
        let terms: Vec<_> = ids.iter().map(|&v| (v, rng.gen_range(-4..=4) as f64)).collect();
        let cmp = match rng.gen_range(0..5) {
            0 => Comparator::Eq,
            1 | 2 => Comparator::Ge,
            _ => Comparator::Le,
        };
        m.add_constraint(format!("r{i}"), terms, cmp, rng.gen_range(-6..=8) as f64);
    }
    m.set_objective(ids.iter().map(|&v| (v, rng.gen_range(-5..=5) as f64)));
    m
}

/// Random pure-integer model with up to `max_vars` variables and small domains.
pub fn random_ip(rng: &mut impl Rng, max_vars: usize) -> Model {
    let vars = rng.gen_range(1..=max_vars);
    let mut m = Model::new("random-ip");
    let mut box_size = 1usize;
    let ids: Vec<_> = (0..vars)
        .map(|j| {
            let width = if box_size > 20_000 { 1 } else { rng.gen_range(1..=3) };
            box_size *= width + 1;
            if width == 1 && rng.gen_bool(0.5) {
                m.add_binary(format!("b{j}"))
            } else {
                m.add_integer(format!("n{j}"), 0.0, width as f64)
            }
        })
        .collect();
    let rows = rng.gen_range(1..=5);
    for i in 0..rows {
        let mut terms = Vec::new();
        for &v in &ids {
            if rng.gen_bool(0.7) {
                terms.push((v, rng.gen_range(-5..=7) as f64));
            }
        }
        let cmp = match rng.gen_range(0..6) {
            0 => Comparator::Eq,
            1 | 2 => Comparator::Ge,
            _ => Comparator::Le,
        };
        m.add_constraint(format!("r{i}"), terms, cmp, rng.gen_range(-3..=12) as f64);
    }
    m.set_objective(ids.iter().map(|&v| (v, rng.gen_range(-6..=6) as f64)));
    m
}
