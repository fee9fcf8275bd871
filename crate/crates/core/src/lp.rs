//! Thin dense front-end over the `minilp` simplex solver.
//!
//! Problems here are small (tens of variables, at most a few hundred rows), so
//! the constraint matrix is handed over row by row as dense slices.

use minilp::{ComparisonOp, OptimizationDirection, Problem};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Eq,
    #[allow(dead_code)]
    Ge,
}

/// Linear program `min/max obj·x` over bounded variables with dense rows.
#[derive(Debug, Clone)]
pub struct LinearProgram {
    maximize: bool,
    obj: Vec<f64>,
    bounds: Vec<(f64, f64)>,
    rows: Vec<(Vec<f64>, Sense, f64)>,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub x: Vec<f64>,
    #[allow(dead_code)]
    pub objective: f64,
}

impl LinearProgram {
    pub fn minimize(obj: Vec<f64>) -> Self {
        let n = obj.len();
        Self {
            maximize: false,
            obj,
            bounds: vec![(0.0, f64::INFINITY); n],
            rows: Vec::new(),
        }
    }

    pub fn maximize(obj: Vec<f64>) -> Self {
        Self {
            maximize: true,
            ..Self::minimize(obj)
        }
    }

    pub fn set_bounds(&mut self, var: usize, lo: f64, hi: f64) -> &mut Self {
        self.bounds[var] = (lo, hi);
        self
    }

    pub fn set_free(&mut self, var: usize) -> &mut Self {
        self.set_bounds(var, f64::NEG_INFINITY, f64::INFINITY)
    }

    pub fn add_row(&mut self, coeffs: Vec<f64>, sense: Sense, rhs: f64) -> &mut Self {
        debug_assert_eq!(coeffs.len(), self.obj.len());
        self.rows.push((coeffs, sense, rhs));
        self
    }

    pub fn solve(&self) -> Result<LpSolution, LpStatus> {
        let dir = if self.maximize {
            OptimizationDirection::Maximize
        } else {
            OptimizationDirection::Minimize
        };
        let mut problem = Problem::new(dir);
        let vars: Vec<_> = self
            .obj
            .iter()
            .zip(&self.bounds)
            .map(|(&c, &b)| problem.add_var(c, b))
            .collect();
        for (coeffs, sense, rhs) in &self.rows {
            let expr: Vec<_> = coeffs
                .iter()
                .enumerate()
                .filter(|(_, c)| **c != 0.0)
                .map(|(j, &c)| (vars[j], c))
                .collect();
            let op = match sense {
                Sense::Le => ComparisonOp::Le,
                Sense::Eq => ComparisonOp::Eq,
                Sense::Ge => ComparisonOp::Ge,
            };
            if expr.is_empty() {
                // 0 (op) rhs: decide directly, minilp rejects empty rows
                let ok = match sense {
                    Sense::Le => 0.0 <= rhs + 1e-12,
                    Sense::Eq => rhs.abs() <= 1e-12,
                    Sense::Ge => 0.0 >= rhs - 1e-12,
                };
                if !ok {
                    return Err(LpStatus::Infeasible);
                }
                continue;
            }
            problem.add_constraint(expr.as_slice(), op, *rhs);
        }
        match problem.solve() {
            Ok(sol) if !sol.objective().is_finite() => Err(LpStatus::Unbounded),
            Ok(sol) => Ok(LpSolution {
                x: vars.iter().map(|&v| sol[v]).collect(),
                objective: sol.objective(),
            }),
            Err(minilp::Error::Infeasible) => Err(LpStatus::Infeasible),
            Err(minilp::Error::Unbounded) => Err(LpStatus::Unbounded),
        }
    }
}
