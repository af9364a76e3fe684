//! Dense two-phase tableau simplex.
//!
//! Variables carry `(lower, upper)` bounds. Finite upper bounds are handled
//! implicitly by complementing variables (`y -> u - y`) instead of adding a
//! row per bound, which keeps the tableau at one row per general constraint
//! even when there are hundreds of boxed variables. Equality rows are split
//! into a `<=`/`>=` pair during conversion.
//!
//! Entering variables are picked by Dantzig's rule for the first
//! `2 * (m + n)` iterations of a phase and by Bland's rule afterwards.

use crate::error::{Error, Result};

pub const PIVOT_TOL: f64 = 1e-9;
const FEAS_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpConstraint {
    pub coeffs: Vec<f64>,
    pub relation: Relation,
    pub rhs: f64,
}

/// `maximize objective · x` subject to the constraints and variable bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    objective: Vec<f64>,
    constraints: Vec<LpConstraint>,
    bounds: Vec<(f64, f64)>,
}

impl LinearProgram {
    /// A program over `objective.len()` free variables.
    pub fn maximize(objective: Vec<f64>) -> Result<Self> {
        if objective.iter().any(|c| !c.is_finite()) {
            return Err(Error::Lp("objective must be finite".into()));
        }
        let n = objective.len();
        Ok(LinearProgram {
            objective,
            constraints: Vec::new(),
            bounds: vec![(f64::NEG_INFINITY, f64::INFINITY); n],
        })
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn constraints(&self) -> &[LpConstraint] {
        &self.constraints
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn constrain(&mut self, coeffs: Vec<f64>, relation: Relation, rhs: f64) -> Result<()> {
        if coeffs.len() != self.num_vars() {
            return Err(Error::dim("LP constraint", self.num_vars(), coeffs.len()));
        }
        if !rhs.is_finite() || coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::Lp(
                "constraint coefficients and rhs must be finite".into(),
            ));
        }
        self.constraints.push(LpConstraint {
            coeffs,
            relation,
            rhs,
        });
        Ok(())
    }

    pub fn with_constraint(
        mut self,
        coeffs: Vec<f64>,
        relation: Relation,
        rhs: f64,
    ) -> Result<Self> {
        self.constrain(coeffs, relation, rhs)?;
        Ok(self)
    }

    pub fn set_bounds(&mut self, var: usize, lower: f64, upper: f64) -> Result<()> {
        if var >= self.num_vars() {
            return Err(Error::OutOfRange {
                what: "LP variable",
                index: var,
                valid: format!("0..{}", self.num_vars()),
            });
        }
        if lower.is_nan() || upper.is_nan() || lower == f64::INFINITY || upper == f64::NEG_INFINITY
        {
            return Err(Error::Lp(format!(
                "invalid bounds [{lower}, {upper}] for x{var}"
            )));
        }
        self.bounds[var] = (lower, upper);
        Ok(())
    }

    pub fn with_bounds(mut self, var: usize, lower: f64, upper: f64) -> Result<Self> {
        self.set_bounds(var, lower, upper)?;
        Ok(self)
    }

    /// Largest violation of any constraint or bound at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for c in &self.constraints {
            let lhs: f64 = c.coeffs.iter().zip(x).map(|(a, b)| a * b).sum();
            let v = match c.relation {
                Relation::Le => lhs - c.rhs,
                Relation::Ge => c.rhs - lhs,
                Relation::Eq => (lhs - c.rhs).abs(),
            };
            worst = worst.max(v);
        }
        for (&(lo, up), &xi) in self.bounds.iter().zip(x) {
            worst = worst.max(lo - xi).max(xi - up);
        }
        worst
    }

    pub fn solve(&self) -> Result<LpOutcome> {
        solve(self)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { optimum: f64, solution: Vec<f64> },
    Infeasible,
    Unbounded,
}

impl LpOutcome {
    pub fn optimum(&self) -> Option<f64> {
        match self {
            LpOutcome::Optimal { optimum, .. } => Some(*optimum),
            _ => None,
        }
    }
}

/// How an original variable is expressed through tableau columns:
/// `x = shift + sum(sign * y_col)`.
struct VarMap {
    shift: f64,
    cols: Vec<(usize, f64)>,
}

struct Tableau {
    m: usize,
    ncols: usize,
    a: Vec<f64>,
    beta: Vec<f64>,
    basis: Vec<usize>,
    upper: Vec<f64>,
    flipped: Vec<bool>,
    d: Vec<f64>,
    value: f64,
    excluded: Vec<bool>,
}

enum Phase {
    Optimal,
    Unbounded,
}

impl Tableau {
    fn at(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.ncols + j]
    }

    fn is_basic(&self) -> Vec<bool> {
        let mut b = vec![false; self.ncols];
        for &j in &self.basis {
            b[j] = true;
        }
        b
    }

    fn pivot(&mut self, r: usize, j: usize) {
        let n = self.ncols;
        let p = self.a[r * n + j];
        for v in &mut self.a[r * n..(r + 1) * n] {
            *v /= p;
        }
        self.beta[r] /= p;
        let pivot_row: Vec<f64> = self.a[r * n..(r + 1) * n].to_vec();
        let pivot_beta = self.beta[r];
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.a[i * n + j];
            if f != 0.0 {
                for (v, pr) in self.a[i * n..(i + 1) * n].iter_mut().zip(&pivot_row) {
                    *v -= f * pr;
                }
                self.a[i * n + j] = 0.0;
                self.beta[i] -= f * pivot_beta;
            }
        }
        let f = self.d[j];
        if f != 0.0 {
            for (v, pr) in self.d.iter_mut().zip(&pivot_row) {
                *v -= f * pr;
            }
            self.d[j] = 0.0;
            self.value += f * pivot_beta;
        }
        self.basis[r] = j;
    }

    /// Substitutes `y_j = u_j - y_j'` for a non-basic column.
    fn flip_nonbasic(&mut self, j: usize) {
        let u = self.upper[j];
        for i in 0..self.m {
            let idx = i * self.ncols + j;
            self.beta[i] -= self.a[idx] * u;
            self.a[idx] = -self.a[idx];
        }
        self.value += self.d[j] * u;
        self.d[j] = -self.d[j];
        self.flipped[j] = !self.flipped[j];
    }

    /// Substitutes `y_B = u_B - y_B'` for the basic variable of row `r`.
    fn flip_basic(&mut self, r: usize) {
        let b = self.basis[r];
        let n = self.ncols;
        for (j, v) in self.a[r * n..(r + 1) * n].iter_mut().enumerate() {
            if j != b {
                *v = -*v;
            }
        }
        self.beta[r] = self.upper[b] - self.beta[r];
        self.flipped[b] = !self.flipped[b];
    }

    fn run(&mut self, max_iter: usize) -> Result<Phase> {
        let bland_after = 2 * (self.m + self.ncols);
        for iter in 0..max_iter {
            let bland = iter >= bland_after;
            let basic = self.is_basic();
            let mut entering = None;
            let mut best = PIVOT_TOL;
            for j in 0..self.ncols {
                if basic[j] || self.excluded[j] || self.d[j] <= PIVOT_TOL {
                    continue;
                }
                if bland {
                    entering = Some(j);
                    break;
                }
                if self.d[j] > best {
                    best = self.d[j];
                    entering = Some(j);
                }
            }
            let Some(j) = entering else {
                return Ok(Phase::Optimal);
            };

            // Ratio test: (step, row, leaves_at_upper); row None = bound flip.
            let mut step = self.upper[j];
            let mut leave: Option<(usize, bool)> = None;
            for i in 0..self.m {
                let aij = self.at(i, j);
                let (ratio, at_upper) = if aij > PIVOT_TOL {
                    (self.beta[i].max(0.0) / aij, false)
                } else if aij < -PIVOT_TOL && self.upper[self.basis[i]].is_finite() {
                    let u = self.upper[self.basis[i]];
                    ((u - self.beta[i]).max(0.0) / -aij, true)
                } else {
                    continue;
                };
                let better = match leave {
                    _ if ratio < step - 1e-12 => true,
                    Some((r, _)) if ratio <= step + 1e-12 => {
                        if bland {
                            self.basis[i] < self.basis[r]
                        } else {
                            aij.abs() > self.at(r, j).abs()
                        }
                    }
                    _ => false,
                };
                if better {
                    step = ratio;
                    leave = Some((i, at_upper));
                }
            }

            match leave {
                None if step.is_infinite() => return Ok(Phase::Unbounded),
                None => self.flip_nonbasic(j),
                Some((r, at_upper)) => {
                    if at_upper {
                        self.flip_basic(r);
                    }
                    self.pivot(r, j);
                }
            }
        }
        Err(Error::Lp(format!("iteration limit {max_iter} reached")))
    }
}

/// Solves `lp` by the two-phase bounded-variable simplex method.
pub fn solve(lp: &LinearProgram) -> Result<LpOutcome> {
    let n = lp.num_vars();

    // Variable substitution onto non-negative columns.
    let mut maps = Vec::with_capacity(n);
    let mut col_upper: Vec<f64> = Vec::new();
    for &(lo, up) in &lp.bounds {
        if lo > up {
            return Ok(LpOutcome::Infeasible);
        }
        let map = if lo.is_finite() {
            col_upper.push(up - lo);
            VarMap {
                shift: lo,
                cols: vec![(col_upper.len() - 1, 1.0)],
            }
        } else if up.is_finite() {
            col_upper.push(f64::INFINITY);
            VarMap {
                shift: up,
                cols: vec![(col_upper.len() - 1, -1.0)],
            }
        } else {
            col_upper.push(f64::INFINITY);
            col_upper.push(f64::INFINITY);
            let k = col_upper.len();
            VarMap {
                shift: 0.0,
                cols: vec![(k - 2, 1.0), (k - 1, -1.0)],
            }
        };
        maps.push(map);
    }
    let ny = col_upper.len();

    // Rows over the y columns, rhs made non-negative.
    let mut rows: Vec<(Vec<f64>, Relation, f64)> = Vec::new();
    for c in &lp.constraints {
        let mut coeffs = vec![0.0; ny];
        let mut rhs = c.rhs;
        for (x, map) in c.coeffs.iter().zip(&maps) {
            rhs -= x * map.shift;
            for &(col, sign) in &map.cols {
                coeffs[col] += x * sign;
            }
        }
        let split: &[Relation] = match c.relation {
            Relation::Eq => &[Relation::Le, Relation::Ge],
            Relation::Le => &[Relation::Le],
            Relation::Ge => &[Relation::Ge],
        };
        for &rel in split {
            let (mut coeffs, mut rel, mut rhs) = (coeffs.clone(), rel, rhs);
            if rhs < 0.0 {
                coeffs.iter_mut().for_each(|v| *v = -*v);
                rhs = -rhs;
                rel = if rel == Relation::Le {
                    Relation::Ge
                } else {
                    Relation::Le
                };
            }
            rows.push((coeffs, rel, rhs));
        }
    }

    let m = rows.len();
    let n_slack = m;
    let n_art = rows.iter().filter(|r| r.1 == Relation::Ge).count();
    let ncols = ny + n_slack + n_art;
    let mut t = Tableau {
        m,
        ncols,
        a: vec![0.0; m * ncols],
        beta: vec![0.0; m],
        basis: vec![0; m],
        upper: col_upper,
        flipped: vec![false; ncols],
        d: vec![0.0; ncols],
        value: 0.0,
        excluded: vec![false; ncols],
    };
    t.upper.resize(ncols, f64::INFINITY);
    let mut art = ny + n_slack;
    let mut art_cols = Vec::new();
    for (i, (coeffs, rel, rhs)) in rows.into_iter().enumerate() {
        t.a[i * ncols..i * ncols + ny].copy_from_slice(&coeffs);
        t.beta[i] = rhs;
        let slack = ny + i;
        if rel == Relation::Le {
            t.a[i * ncols + slack] = 1.0;
            t.basis[i] = slack;
        } else {
            t.a[i * ncols + slack] = -1.0;
            t.a[i * ncols + art] = 1.0;
            t.basis[i] = art;
            art_cols.push(art);
            art += 1;
        }
    }
    let max_iter = 50 * (m + ncols) + 1000;

    // Phase 1: maximise -sum(artificials).
    if !art_cols.is_empty() {
        for i in 0..m {
            if t.basis[i] >= ny + n_slack {
                for j in 0..ny + n_slack {
                    t.d[j] += t.at(i, j);
                }
                t.value -= t.beta[i];
            }
        }
        t.run(max_iter)?;
        let scale = 1.0 + t.beta.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        if t.value < -FEAS_TOL * scale {
            return Ok(LpOutcome::Infeasible);
        }
        // Drive remaining artificials out of the basis or drop their rows.
        let mut r = 0;
        while r < t.m {
            if t.basis[r] >= ny + n_slack {
                let basic = t.is_basic();
                let col = (0..ny + n_slack)
                    .filter(|&j| !basic[j])
                    .max_by(|&a, &b| t.at(r, a).abs().total_cmp(&t.at(r, b).abs()))
                    .filter(|&j| t.at(r, j).abs() > PIVOT_TOL);
                match col {
                    Some(j) => t.pivot(r, j),
                    None => {
                        remove_row(&mut t, r);
                        continue;
                    }
                }
            }
            r += 1;
        }
        for &j in &art_cols {
            t.excluded[j] = true;
        }
    }

    // Phase 2: reduced costs of the real objective under the current flips.
    let mut cost = vec![0.0; ncols];
    let mut constant = 0.0;
    for (c, map) in lp.objective.iter().zip(&maps) {
        constant += c * map.shift;
        for &(col, sign) in &map.cols {
            cost[col] += c * sign;
        }
    }
    for j in 0..ncols {
        if t.flipped[j] {
            constant += cost[j] * t.upper[j];
            cost[j] = -cost[j];
        }
    }
    t.d = cost.clone();
    t.value = constant;
    for i in 0..t.m {
        let cb = cost[t.basis[i]];
        if cb != 0.0 {
            for j in 0..ncols {
                t.d[j] -= cb * t.at(i, j);
            }
            t.value += cb * t.beta[i];
        }
    }
    for &b in &t.basis {
        t.d[b] = 0.0;
    }
    if let Phase::Unbounded = t.run(max_iter)? {
        return Ok(LpOutcome::Unbounded);
    }

    let mut y = vec![0.0; ncols];
    for (i, &b) in t.basis.iter().enumerate() {
        y[b] = t.beta[i];
    }
    for j in 0..ncols {
        if t.flipped[j] {
            y[j] = t.upper[j] - y[j];
        }
    }
    let solution: Vec<f64> = maps
        .iter()
        .map(|map| map.shift + map.cols.iter().map(|&(c, s)| s * y[c]).sum::<f64>())
        .collect();
    let optimum = lp.objective.iter().zip(&solution).map(|(c, x)| c * x).sum();
    Ok(LpOutcome::Optimal { optimum, solution })
}

fn remove_row(t: &mut Tableau, r: usize) {
    let n = t.ncols;
    t.a.drain(r * n..(r + 1) * n);
    t.beta.remove(r);
    t.basis.remove(r);
    t.m -= 1;
}

#[cfg(test)]
mod tests {
    use super::*;

    fn optimum(lp: &LinearProgram) -> f64 {
        match lp.solve().unwrap() {
            LpOutcome::Optimal { optimum, solution } => {
                assert!(lp.max_violation(&solution) < 1e-8);
                optimum
            }
            other => panic!("expected optimum, got {other:?}"),
        }
    }

    #[test]
    fn single_variable_upper_bound() {
        let lp = LinearProgram::maximize(vec![1.0])
            .unwrap()
            .with_constraint(vec![1.0], Relation::Le, 2.0)
            .unwrap()
            .with_constraint(vec![1.0], Relation::Ge, 0.0)
            .unwrap();
        assert!((optimum(&lp) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn two_variable_vertex_enumeration_example() {
        // vertices of {x1+x2<=3, x1<=2, x>=0}: (0,0),(2,0),(2,1),(0,3); max x1+x2 = 3
        let lp = LinearProgram::maximize(vec![1.0, 1.0])
            .unwrap()
            .with_constraint(vec![1.0, 1.0], Relation::Le, 3.0)
            .unwrap()
            .with_constraint(vec![1.0, 0.0], Relation::Le, 2.0)
            .unwrap()
            .with_constraint(vec![1.0, 0.0], Relation::Ge, 0.0)
            .unwrap()
            .with_constraint(vec![0.0, 1.0], Relation::Ge, 0.0)
            .unwrap();
        assert!((optimum(&lp) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn unbounded_ray() {
        let lp = LinearProgram::maximize(vec![1.0])
            .unwrap()
            .with_constraint(vec![1.0], Relation::Ge, 0.0)
            .unwrap();
        assert_eq!(lp.solve().unwrap(), LpOutcome::Unbounded);
    }

    #[test]
    fn infeasible_system() {
        let lp = LinearProgram::maximize(vec![1.0, 0.0])
            .unwrap()
            .with_constraint(vec![1.0, 1.0], Relation::Le, 1.0)
            .unwrap()
            .with_constraint(vec![1.0, 1.0], Relation::Ge, 2.0)
            .unwrap();
        assert_eq!(lp.solve().unwrap(), LpOutcome::Infeasible);
        let crossed = LinearProgram::maximize(vec![1.0])
            .unwrap()
            .with_bounds(0, 1.0, 0.0)
            .unwrap();
        assert_eq!(crossed.solve().unwrap(), LpOutcome::Infeasible);
    }

    #[test]
    fn equality_constraints() {
        // max x + 2y s.t. x + y = 1, x - y = 0 -> (0.5, 0.5), 1.5
        let lp = LinearProgram::maximize(vec![1.0, 2.0])
            .unwrap()
            .with_constraint(vec![1.0, 1.0], Relation::Eq, 1.0)
            .unwrap()
            .with_constraint(vec![1.0, -1.0], Relation::Eq, 0.0)
            .unwrap();
        assert!((optimum(&lp) - 1.5).abs() < 1e-12);
    }

    #[test]
    fn boxed_variables_without_rows() {
        let mut lp = LinearProgram::maximize(vec![1.0, -2.0, 0.5]).unwrap();
        lp.set_bounds(0, -1.0, 3.0).unwrap();
        lp.set_bounds(1, -4.0, 2.0).unwrap();
        lp.set_bounds(2, f64::NEG_INFINITY, 1.5).unwrap();
        // 3 + 8 + 0.75
        assert!((optimum(&lp) - 11.75).abs() < 1e-12);
    }

    #[test]
    fn boxed_variables_with_coupling_row() {
        // max x + y, x + y <= 1.5, x,y in [0,1] -> 1.5
        let lp = LinearProgram::maximize(vec![1.0, 1.0])
            .unwrap()
            .with_bounds(0, 0.0, 1.0)
            .unwrap()
            .with_bounds(1, 0.0, 1.0)
            .unwrap()
            .with_constraint(vec![1.0, 1.0], Relation::Le, 1.5)
            .unwrap();
        assert!((optimum(&lp) - 1.5).abs() < 1e-12);
        // max x - y with x - y >= -5 binding nothing: box decides -> 1
        let lp = LinearProgram::maximize(vec![1.0, -1.0])
            .unwrap()
            .with_bounds(0, 0.0, 1.0)
            .unwrap()
            .with_bounds(1, 0.0, 1.0)
            .unwrap()
            .with_constraint(vec![1.0, -1.0], Relation::Ge, -5.0)
            .unwrap();
        assert!((optimum(&lp) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn basic_variable_leaving_at_upper_bound() {
        // x2 enters, pushing the basic x1 = 1 - x2... up to its own bound.
        // max 2y - x, x - y >= -1 (x >= y - 1), x in [0, 0.5], y in [0, 10]
        // optimum: y = x + 1 with x = 0.5 -> 2 * 1.5 - 0.5 = 2.5
        let lp = LinearProgram::maximize(vec![-1.0, 2.0])
            .unwrap()
            .with_bounds(0, 0.0, 0.5)
            .unwrap()
            .with_bounds(1, 0.0, 10.0)
            .unwrap()
            .with_constraint(vec![1.0, -1.0], Relation::Ge, -1.0)
            .unwrap();
        assert!((optimum(&lp) - 2.5).abs() < 1e-12);
    }

    #[test]
    fn degenerate_klee_minty_like_cube() {
        // Klee-Minty 3-D: max 4x1 + 2x2 + x3 s.t. x1<=5, 4x1+x2<=25, 8x1+4x2+x3<=125
        let lp = LinearProgram::maximize(vec![4.0, 2.0, 1.0])
            .unwrap()
            .with_constraint(vec![1.0, 0.0, 0.0], Relation::Le, 5.0)
            .unwrap()
            .with_constraint(vec![4.0, 1.0, 0.0], Relation::Le, 25.0)
            .unwrap()
            .with_constraint(vec![8.0, 4.0, 1.0], Relation::Le, 125.0)
            .unwrap()
            .with_bounds(0, 0.0, f64::INFINITY)
            .unwrap()
            .with_bounds(1, 0.0, f64::INFINITY)
            .unwrap()
            .with_bounds(2, 0.0, f64::INFINITY)
            .unwrap();
        assert!((optimum(&lp) - 125.0).abs() < 1e-9);
    }

    #[test]
    fn redundant_equalities_are_dropped() {
        let lp = LinearProgram::maximize(vec![1.0, 1.0])
            .unwrap()
            .with_constraint(vec![1.0, 1.0], Relation::Eq, 2.0)
            .unwrap()
            .with_constraint(vec![2.0, 2.0], Relation::Eq, 4.0)
            .unwrap()
            .with_bounds(0, 0.0, 5.0)
            .unwrap()
            .with_bounds(1, 0.0, 5.0)
            .unwrap();
        assert!((optimum(&lp) - 2.0).abs() < 1e-9);
    }

    #[test]
    fn construction_errors() {
        let lp = LinearProgram::maximize(vec![1.0, 1.0]).unwrap();
        assert!(matches!(
            lp.clone().with_constraint(vec![1.0], Relation::Le, 1.0),
            Err(Error::Dimension { .. })
        ));
        assert!(lp.clone().with_bounds(2, 0.0, 1.0).is_err());
        assert!(lp
            .clone()
            .with_constraint(vec![1.0, f64::NAN], Relation::Le, 1.0)
            .is_err());
        assert!(LinearProgram::maximize(vec![f64::INFINITY]).is_err());
    }

    #[test]
    fn wide_boxed_program_stays_small() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let d = 784;
        let obj: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut lp = LinearProgram::maximize(obj).unwrap();
        for v in 0..d {
            lp.set_bounds(v, -0.1, 1.1).unwrap();
        }
        for _ in 0..12 {
            let a: Vec<f64> = (0..d).map(|_| rng.gen_range(-0.05..0.05)).collect();
            lp.constrain(a, Relation::Le, rng.gen_range(0.0..1.0))
                .unwrap();
        }
        let out = lp.solve().unwrap();
        let LpOutcome::Optimal { solution, .. } = out else {
            panic!("expected optimum")
        };
        assert!(lp.max_violation(&solution) < 1e-8);
    }

    mod props {
        use super::super::*;
        use proptest::prelude::*;

        fn program() -> impl Strategy<Value = (Vec<f64>, Vec<Vec<f64>>, Vec<f64>)> {
            (1usize..=5, 1usize..=8).prop_flat_map(|(n, m)| {
                (
                    prop::collection::vec(-5.0f64..5.0, n),
                    prop::collection::vec(prop::collection::vec(-5.0f64..5.0, n), m),
                    prop::collection::vec(0.0f64..10.0, m),
                )
            })
        }

        fn nonneg(mut lp: LinearProgram) -> LinearProgram {
            for v in 0..lp.num_vars() {
                lp.set_bounds(v, 0.0, f64::INFINITY).unwrap();
            }
            lp
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(256))]

            // max c.x, Ax <= b, x >= 0   vs   min b.y, A^T y >= c, y >= 0
            #[test]
            fn strong_duality((c, a, b) in program()) {
                let mut primal = nonneg(LinearProgram::maximize(c.clone()).unwrap());
                for (row, rhs) in a.iter().zip(&b) {
                    primal.constrain(row.clone(), Relation::Le, *rhs).unwrap();
                }
                let mut dual = nonneg(LinearProgram::maximize(b.iter().map(|v| -v).collect()).unwrap());
                for j in 0..c.len() {
                    dual.constrain(a.iter().map(|r| r[j]).collect(), Relation::Ge, c[j]).unwrap();
                }
                match (primal.solve().unwrap(), dual.solve().unwrap()) {
                    (LpOutcome::Optimal { optimum: p, .. }, LpOutcome::Optimal { optimum: d, .. }) => {
                        prop_assert!((p + d).abs() <= 1e-6 * (1.0 + p.abs()), "{p} vs {}", -d);
                    }
                    (LpOutcome::Unbounded, LpOutcome::Infeasible) => {}
                    other => prop_assert!(false, "inconsistent pair {:?}", other),
                }
            }

            #[test]
            fn optimal_solutions_are_feasible_and_consistent(
                (c, a, b) in program(),
                rels in prop::collection::vec(0u8..3, 8),
                shift in prop::collection::vec(-3.0f64..3.0, 8),
                boxed in any::<bool>(),
            ) {
                let mut lp = LinearProgram::maximize(c.clone()).unwrap();
                for (i, (row, rhs)) in a.iter().zip(&b).enumerate() {
                    let rel = [Relation::Le, Relation::Ge, Relation::Eq][rels[i] as usize];
                    lp.constrain(row.clone(), rel, rhs - 5.0 + shift[i]).unwrap();
                }
                if boxed {
                    for v in 0..c.len() {
                        lp.set_bounds(v, -4.0 + shift[v], 4.0 + shift[v]).unwrap();
                    }
                }
                if let LpOutcome::Optimal { optimum, solution } = lp.solve().unwrap() {
                    prop_assert!(lp.max_violation(&solution) <= 1e-8);
                    let value: f64 = c.iter().zip(&solution).map(|(x, y)| x * y).sum();
                    prop_assert!((value - optimum).abs() <= 1e-8);
                } else if boxed {
                    prop_assert!(lp.solve().unwrap() != LpOutcome::Unbounded);
                }
            }
        }
    }
}
