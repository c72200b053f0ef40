//! Dense two-phase primal simplex with dual and Farkas certificates.
//!
//! Problems are `maximize c.x` subject to rows `a_i.x (<=|=|>=) b_i` and
//! `x >= 0`. An optimal answer comes with row duals `y` so that anybody can
//! check optimality without re-solving; an infeasible answer comes with a
//! Farkas ray. Sizes are desk scale (a few thousand columns at most).

use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Constraint {
    pub coeffs: Vec<(usize, f64)>,
    pub rel: Relation,
    pub rhs: f64,
}

impl Constraint {
    pub fn lhs(&self, x: &[f64]) -> f64 {
        self.coeffs.iter().map(|&(j, a)| a * x[j]).sum()
    }

    /// How far `x` is from satisfying this row (zero when satisfied).
    pub fn violation(&self, x: &[f64]) -> f64 {
        let d = self.lhs(x) - self.rhs;
        match self.rel {
            Relation::Le => d.max(0.0),
            Relation::Ge => (-d).max(0.0),
            Relation::Eq => d.abs(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct LinearProgram {
    pub n_vars: usize,
    /// Maximized.
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    /// One dual per constraint, in the sign convention of [`check_lp_certificate`].
    pub duals: Vec<f64>,
}

/// `y` with `A^T y >= 0`, `b.y < 0` and `y_i >= 0` on `<=` rows, `y_i <= 0`
/// on `>=` rows. Its existence proves the constraints have no solution.
#[derive(Clone, Debug, PartialEq)]
pub struct FarkasCertificate {
    pub y: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum LpOutcome {
    Optimal(LpSolution),
    Infeasible(FarkasCertificate),
    Unbounded,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("variable index {0} out of range")]
    BadIndex(usize),
    #[error("non-finite coefficient")]
    NonFinite,
    #[error("simplex did not converge within {0} pivots")]
    IterationLimit(usize),
}

const PIVOT_EPS: f64 = 1e-9;
const COST_EPS: f64 = 1e-9;
const MAX_PIVOTS: usize = 200_000;
const DEGENERATE_STREAK: usize = 25;

impl LinearProgram {
    pub fn new(n_vars: usize) -> Self {
        Self {
            n_vars,
            objective: vec![0.0; n_vars],
            constraints: Vec::new(),
        }
    }

    pub fn add(&mut self, coeffs: Vec<(usize, f64)>, rel: Relation, rhs: f64) -> usize {
        self.constraints.push(Constraint { coeffs, rel, rhs });
        self.constraints.len() - 1
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, x)| c * x).sum()
    }

    fn validate(&self) -> Result<(), LpError> {
        if self.objective.len() != self.n_vars {
            return Err(LpError::BadIndex(self.objective.len()));
        }
        if self.objective.iter().any(|c| !c.is_finite()) {
            return Err(LpError::NonFinite);
        }
        for c in &self.constraints {
            if !c.rhs.is_finite() {
                return Err(LpError::NonFinite);
            }
            for &(j, a) in &c.coeffs {
                if j >= self.n_vars {
                    return Err(LpError::BadIndex(j));
                }
                if !a.is_finite() {
                    return Err(LpError::NonFinite);
                }
            }
        }
        Ok(())
    }

    pub fn solve(&self) -> Result<LpOutcome, LpError> {
        self.validate()?;
        Tableau::build(self).run(self)
    }
}

struct Tableau {
    rows: usize,
    width: usize,
    /// `rows + 1` rows of `width + 1` entries; row 0 is the reduced-cost row
    /// and the last column holds the right-hand side.
    t: Vec<f64>,
    basis: Vec<usize>,
    n: usize,
    art0: usize,
    /// `-1` where the row was negated to make its right-hand side nonnegative.
    sign: Vec<f64>,
}

impl Tableau {
    fn build(lp: &LinearProgram) -> Self {
        let m = lp.constraints.len();
        let n = lp.n_vars;
        let n_slack = lp
            .constraints
            .iter()
            .filter(|c| c.rel != Relation::Eq)
            .count();
        let art0 = n + n_slack;
        let width = art0 + m;
        let stride = width + 1;
        let mut t = vec![0.0; (m + 1) * stride];
        let mut sign = vec![1.0; m];
        let mut slack = n;
        for (i, c) in lp.constraints.iter().enumerate() {
            let s = if c.rhs < 0.0 { -1.0 } else { 1.0 };
            sign[i] = s;
            let row = &mut t[(i + 1) * stride..(i + 2) * stride];
            for &(j, a) in &c.coeffs {
                row[j] += s * a;
            }
            match c.rel {
                Relation::Le => {
                    row[slack] = s;
                    slack += 1;
                }
                Relation::Ge => {
                    row[slack] = -s;
                    slack += 1;
                }
                Relation::Eq => {}
            }
            row[art0 + i] = 1.0;
            row[width] = s * c.rhs;
        }
        // phase 1 objective: maximize -sum(artificials)
        for i in 0..m {
            for j in 0..stride {
                if j < art0 || j == width {
                    t[j] -= t[(i + 1) * stride + j];
                }
            }
        }
        Self {
            rows: m,
            width,
            t,
            basis: (art0..art0 + m).collect(),
            n,
            art0,
            sign,
        }
    }

    fn stride(&self) -> usize {
        self.width + 1
    }

    fn at(&self, r: usize, c: usize) -> f64 {
        self.t[r * self.stride() + c]
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let stride = self.stride();
        let p = self.at(r, c);
        let (before, rest) = self.t.split_at_mut(r * stride);
        let (prow, after) = rest.split_at_mut(stride);
        for v in prow.iter_mut() {
            *v /= p;
        }
        prow[c] = 1.0;
        for row in before.chunks_mut(stride).chain(after.chunks_mut(stride)) {
            let f = row[c];
            if f != 0.0 {
                for (v, pv) in row.iter_mut().zip(prow.iter()) {
                    *v -= f * pv;
                }
                row[c] = 0.0;
            }
        }
        self.basis[r - 1] = c;
    }

    /// Primal simplex on the current row 0. Artificial columns never enter.
    fn iterate(&mut self) -> Result<bool, LpError> {
        let mut streak = 0;
        for _ in 0..MAX_PIVOTS {
            let bland = streak >= DEGENERATE_STREAK;
            let mut enter = None;
            let mut best = -COST_EPS;
            for j in 0..self.art0 {
                let rc = self.at(0, j);
                if rc < best {
                    enter = Some(j);
                    if bland {
                        break;
                    }
                    best = rc;
                }
            }
            let Some(c) = enter else {
                return Ok(true);
            };
            let mut leave: Option<(usize, f64)> = None;
            for r in 1..=self.rows {
                let a = self.at(r, c);
                if a > PIVOT_EPS {
                    let ratio = self.at(r, self.width) / a;
                    let better = match leave {
                        None => true,
                        Some((lr, lratio)) => {
                            ratio < lratio - 1e-12
                                || (ratio <= lratio + 1e-12
                                    && self.leave_priority(r) < self.leave_priority(lr))
                        }
                    };
                    if better {
                        leave = Some((r, ratio));
                    }
                }
            }
            let Some((r, ratio)) = leave else {
                return Ok(false);
            };
            if ratio <= 1e-12 {
                streak += 1;
            } else {
                streak = 0;
            }
            self.pivot(r, c);
        }
        Err(LpError::IterationLimit(MAX_PIVOTS))
    }

    // Prefer removing artificials, then the lowest variable index.
    fn leave_priority(&self, r: usize) -> (bool, usize) {
        let b = self.basis[r - 1];
        (b < self.art0, b)
    }

    fn run(mut self, lp: &LinearProgram) -> Result<LpOutcome, LpError> {
        self.iterate()?;
        let scale = 1.0
            + lp.constraints
                .iter()
                .map(|c| c.rhs.abs())
                .fold(0.0, f64::max);
        if self.at(0, self.width) < -1e-7 * scale {
            let y = (0..self.rows)
                .map(|i| self.sign[i] * (self.at(0, self.art0 + i) - 1.0))
                .collect();
            return Ok(LpOutcome::Infeasible(FarkasCertificate { y }));
        }
        // Pivot zero-level artificials out of the basis where possible.
        for r in 1..=self.rows {
            if self.basis[r - 1] >= self.art0 {
                if let Some(c) = (0..self.art0).find(|&c| self.at(r, c).abs() > PIVOT_EPS) {
                    self.pivot(r, c);
                }
            }
        }
        // Phase 2 reduced costs.
        let stride = self.stride();
        let mut cost = vec![0.0; self.width];
        cost[..self.n].copy_from_slice(&lp.objective);
        for j in 0..stride {
            let mut z = if j < self.width { -cost[j] } else { 0.0 };
            for r in 1..=self.rows {
                let cb = cost[self.basis[r - 1]];
                if cb != 0.0 {
                    z += cb * self.at(r, j);
                }
            }
            self.t[j] = z;
        }
        if !self.iterate()? {
            return Ok(LpOutcome::Unbounded);
        }
        let mut x = vec![0.0; self.n];
        for r in 1..=self.rows {
            let b = self.basis[r - 1];
            if b < self.n {
                x[b] = self.at(r, self.width).max(0.0);
            }
        }
        let duals = (0..self.rows)
            .map(|i| self.sign[i] * self.at(0, self.art0 + i))
            .collect();
        Ok(LpOutcome::Optimal(LpSolution {
            objective: lp.value(&x),
            x,
            duals,
        }))
    }
}

/// Residuals of an optimality certificate `(x, y)`.
#[derive(Clone, Debug, PartialEq)]
pub struct LpResiduals {
    /// Largest row violation or negative entry of `x`.
    pub primal: f64,
    /// Largest violation of `A^T y >= c` or of the dual sign rules.
    pub dual: f64,
    /// `|c.x - b.y|`
    pub gap: f64,
}

impl LpResiduals {
    pub fn max(&self) -> f64 {
        self.primal.max(self.dual).max(self.gap)
    }

    pub fn within(&self, tol: f64) -> bool {
        self.max() <= tol
    }
}

/// Checks primal feasibility, dual feasibility and a zero duality gap.
/// Passing all three proves `x` optimal without re-solving.
pub fn check_lp_certificate(lp: &LinearProgram, x: &[f64], y: &[f64]) -> LpResiduals {
    if x.len() != lp.n_vars || y.len() != lp.constraints.len() {
        return LpResiduals {
            primal: f64::INFINITY,
            dual: f64::INFINITY,
            gap: f64::INFINITY,
        };
    }
    let mut primal = x.iter().map(|v| (-v).max(0.0)).fold(0.0, f64::max);
    for c in &lp.constraints {
        primal = primal.max(c.violation(x));
    }
    let mut aty = vec![0.0; lp.n_vars];
    let mut dual: f64 = 0.0;
    let mut by = 0.0;
    for (c, &yi) in lp.constraints.iter().zip(y) {
        for &(j, a) in &c.coeffs {
            aty[j] += a * yi;
        }
        by += c.rhs * yi;
        dual = dual.max(match c.rel {
            Relation::Le => (-yi).max(0.0),
            Relation::Ge => yi.max(0.0),
            Relation::Eq => 0.0,
        });
    }
    for (a, c) in aty.iter().zip(&lp.objective) {
        dual = dual.max(c - a);
    }
    LpResiduals {
        primal,
        dual,
        gap: (lp.value(x) - by).abs(),
    }
}

/// True when `cert` proves the constraints of `lp` infeasible.
pub fn check_farkas(lp: &LinearProgram, cert: &FarkasCertificate, tol: f64) -> bool {
    let y = &cert.y;
    if y.len() != lp.constraints.len() {
        return false;
    }
    let norm = y.iter().map(|v| v.abs()).fold(0.0, f64::max);
    if norm == 0.0 || !norm.is_finite() {
        return false;
    }
    let mut aty = vec![0.0; lp.n_vars];
    let mut by = 0.0;
    for (c, &yi) in lp.constraints.iter().zip(y) {
        let yi = yi / norm;
        let sign_ok = match c.rel {
            Relation::Le => yi >= -tol,
            Relation::Ge => yi <= tol,
            Relation::Eq => true,
        };
        if !sign_ok {
            return false;
        }
        for &(j, a) in &c.coeffs {
            aty[j] += a * yi;
        }
        by += c.rhs * yi;
    }
    aty.iter().all(|&a| a >= -tol) && by < -tol
}

#[cfg(test)]
mod tests {
    use super::*;

    fn optimal(lp: &LinearProgram) -> LpSolution {
        match lp.solve().unwrap() {
            LpOutcome::Optimal(s) => s,
            other => panic!("expected optimum, got {other:?}"),
        }
    }

    #[test]
    fn textbook_maximization() {
        // max 3x + 5y, x <= 4, 2y <= 12, 3x + 2y <= 18  ->  (2, 6), 36
        let mut lp = LinearProgram::new(2);
        lp.objective = vec![3.0, 5.0];
        lp.add(vec![(0, 1.0)], Relation::Le, 4.0);
        lp.add(vec![(1, 2.0)], Relation::Le, 12.0);
        lp.add(vec![(0, 3.0), (1, 2.0)], Relation::Le, 18.0);
        let s = optimal(&lp);
        assert!((s.objective - 36.0).abs() < 1e-9);
        assert!((s.x[0] - 2.0).abs() < 1e-9 && (s.x[1] - 6.0).abs() < 1e-9);
        assert_eq!(s.duals.len(), 3);
        assert!((s.duals[1] - 1.5).abs() < 1e-9 && (s.duals[2] - 1.0).abs() < 1e-9);
        assert!(check_lp_certificate(&lp, &s.x, &s.duals).within(1e-9));
    }

    #[test]
    fn equality_and_ge_rows_with_negative_rhs() {
        // max -x - y, x + y = 2, x - y >= -1, x <= 5
        let mut lp = LinearProgram::new(2);
        lp.objective = vec![-1.0, -2.0];
        lp.add(vec![(0, 1.0), (1, 1.0)], Relation::Eq, 2.0);
        lp.add(vec![(0, 1.0), (1, -1.0)], Relation::Ge, -1.0);
        lp.add(vec![(0, -1.0)], Relation::Ge, -5.0);
        let s = optimal(&lp);
        assert!((s.objective + 2.0).abs() < 1e-9, "{s:?}");
        assert!(check_lp_certificate(&lp, &s.x, &s.duals).within(1e-9));
    }

    #[test]
    fn infeasible_system_yields_farkas_ray() {
        let mut lp = LinearProgram::new(2);
        lp.add(vec![(0, 1.0), (1, 1.0)], Relation::Le, 1.0);
        lp.add(vec![(0, 1.0), (1, 1.0)], Relation::Ge, 3.0);
        match lp.solve().unwrap() {
            LpOutcome::Infeasible(cert) => assert!(check_farkas(&lp, &cert, 1e-9)),
            other => panic!("{other:?}"),
        }
        let bogus = FarkasCertificate { y: vec![1.0, 1.0] };
        assert!(!check_farkas(&lp, &bogus, 1e-9));
    }

    #[test]
    fn unbounded_is_reported() {
        let mut lp = LinearProgram::new(2);
        lp.objective = vec![1.0, 0.0];
        lp.add(vec![(0, 1.0), (1, -1.0)], Relation::Le, 1.0);
        assert_eq!(lp.solve().unwrap(), LpOutcome::Unbounded);
    }

    #[test]
    fn redundant_equalities_keep_valid_duals() {
        let mut lp = LinearProgram::new(2);
        lp.objective = vec![1.0, 1.0];
        lp.add(vec![(0, 1.0), (1, 1.0)], Relation::Eq, 1.0);
        lp.add(vec![(0, 2.0), (1, 2.0)], Relation::Eq, 2.0);
        let s = optimal(&lp);
        assert!((s.objective - 1.0).abs() < 1e-9);
        assert!(check_lp_certificate(&lp, &s.x, &s.duals).within(1e-9));
    }

    #[test]
    fn tampered_certificate_fails() {
        let mut lp = LinearProgram::new(2);
        lp.objective = vec![1.0, 2.0];
        lp.add(vec![(0, 1.0), (1, 1.0)], Relation::Le, 1.0);
        let s = optimal(&lp);
        assert!(!check_lp_certificate(&lp, &[1.0, 0.0], &s.duals).within(1e-9));
        assert!(!check_lp_certificate(&lp, &s.x, &[0.5]).within(1e-9));
    }

    #[test]
    fn bad_input_is_an_error() {
        let mut lp = LinearProgram::new(1);
        lp.add(vec![(3, 1.0)], Relation::Le, 1.0);
        assert_eq!(lp.solve(), Err(LpError::BadIndex(3)));
    }
}
