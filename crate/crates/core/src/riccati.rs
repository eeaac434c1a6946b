//! Backward value kernels of both players.
//!
//! Each player's quadratic value kernel solves a linear backward matrix ODE
//!
//! ```text
//! dP/dt = -P a - a' P - c' P c - l,      P(T) = g,
//! ```
//!
//! integrated with classical RK4 from the terminal node and symmetrized
//! after every step.  The structural conditions under which the open-loop
//! strategies admit state-feedback form make the usual quadratic Riccati
//! term vanish, which is why the equation is linear.
//!
//! On top of the two kernels this module assembles the control-weight
//! denominators `xi = r + d' P d` and checks the structural assumption
//! residuals node by node.  Assumption violations are reported, never
//! enforced: the advertising scenario, for instance, deliberately violates
//! one line while the rest of the pipeline still runs.

use nalgebra::DMatrix;

use crate::coeffs::GameCoefficients;
use crate::error::{Error, Result};
use crate::grid::{MatrixFunction, Span, TimeGrid};
use crate::linalg::{inv_guarded, min_eig_sym, symmetrize, CONDITION_CAP};

/// Default absolute tolerance on assumption residuals.
pub const ASSUMPTION_TOL: f64 = 1e-8;

/// Solves `dP/dt = -P a - a' P - c' P c - l` backward from `P(T) = g`.
///
/// The returned function lives on the doubled span: the node at `T` stores
/// `g` bitwise and every node past `T` stores an exact zero, matching the
/// zero-extension convention of the coefficients.
pub fn solve_backward_matrix_ode(
    a: &MatrixFunction,
    c: &MatrixFunction,
    l: &MatrixFunction,
    g: &DMatrix<f64>,
    grid: TimeGrid,
) -> Result<MatrixFunction> {
    let n = a.rows();
    for (name, f) in [("a", a), ("c", c), ("l", l)] {
        if f.rows() != n || f.cols() != n {
            return Err(Error::Shape {
                what: format!("backward ODE coefficient {name}"),
                expected: format!("{n}x{n}"),
                got: format!("{}x{}", f.rows(), f.cols()),
            });
        }
    }
    if g.nrows() != n || g.ncols() != n {
        return Err(Error::Shape {
            what: "terminal weight".into(),
            expected: format!("{n}x{n}"),
            got: format!("{}x{}", g.nrows(), g.ncols()),
        });
    }

    let dt = grid.dt();
    let steps = grid.steps();
    let rhs = |t: f64, p: &DMatrix<f64>| -> Result<DMatrix<f64>> {
        let at = a.eval(t)?;
        let ct = c.eval(t)?;
        let lt = l.eval(t)?;
        Ok(-p * &at - at.transpose() * p - ct.transpose() * p * &ct - lt)
    };

    let mut values = vec![DMatrix::zeros(n, n); grid.full_len()];
    values[steps] = g.clone();
    let mut p = g.clone();
    for k in (1..=steps).rev() {
        let t = grid.node(k);
        let tm = t - 0.5 * dt;
        let t0 = grid.node(k - 1);
        let k1 = rhs(t, &p)?;
        let k2 = rhs(tm, &(&p - &k1 * (0.5 * dt)))?;
        let k3 = rhs(tm, &(&p - &k2 * (0.5 * dt)))?;
        let k4 = rhs(t0, &(&p - &k3 * dt))?;
        p -= (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
        symmetrize(&mut p);
        values[k - 1] = p.clone();
    }
    MatrixFunction::from_samples(grid, Span::Full, values)
}

/// Control-weight denominator `xi(t) = r(t) + d(t)' P(t) d(t)` on the
/// doubled span (identically zero past `T`).
pub fn assemble_xi(
    r: &MatrixFunction,
    d: &MatrixFunction,
    pi: &MatrixFunction,
) -> MatrixFunction {
    let grid = r.grid();
    let values = (0..grid.full_len())
        .map(|k| {
            let dk = d.value(k);
            r.value(k) + dk.transpose() * pi.value(k) * dk
        })
        .collect();
    MatrixFunction::from_samples(grid, Span::Full, values)
        .expect("xi sampled on the coefficient grid")
}

/// Smallest eigenvalue of the symmetric part, per `[0, T]` node.
pub fn min_eig_profile(xi: &MatrixFunction) -> Vec<f64> {
    (0..xi.grid().half_len())
        .map(|k| min_eig_sym(xi.value(k)))
        .collect()
}

/// Both value kernels plus derived weights.
#[derive(Debug, Clone)]
pub struct RiccatiSolution {
    /// Follower kernel.
    pub pi1: MatrixFunction,
    /// Leader kernel (same drift/diffusion pair, leader weights).
    pub pi2: MatrixFunction,
    /// Follower control weight `r1 + d1' pi1 d1`.
    pub xi1: MatrixFunction,
    /// Leader control weight `r2 + dbar' pi2 dbar`.
    pub xi2: MatrixFunction,
    /// Reduced leader weight: `r2` alone.
    pub xi3: MatrixFunction,
    /// Scalar shift `pi1 + r1 / d1^2`, defined only for scalar games with
    /// `d1 != 0`; the quantity the first reduction-assumption line compares
    /// against.
    pub pi_bar: Option<MatrixFunction>,
    /// Nodes where `xi1` could not be inverted; `xi2` was assembled with the
    /// regularized inverse there so the assumption report can still be
    /// produced.  Must be empty before any gain synthesis.
    pub xi1_singular_nodes: Vec<usize>,
}

/// Solves both kernels and assembles the weights.
///
/// The leader kernel uses the same drift and diffusion as the follower's
/// because the reduced dynamics keep `a1` and `c1` unchanged.  The leader
/// weight needs the follower-absorbed control channel
/// `dbar = (I - d1 xi1^-1 d1' pi1) d2`, which is computed here from the
/// follower solve.
pub fn solve_riccati_pair(coeffs: &GameCoefficients) -> Result<RiccatiSolution> {
    let grid = coeffs.grid();
    let pi1 = solve_backward_matrix_ode(&coeffs.a1, &coeffs.c1, &coeffs.l1, &coeffs.g1, grid)?;
    let xi1 = assemble_xi(&coeffs.r1, &coeffs.d1, &pi1);
    let pi2 = solve_backward_matrix_ode(&coeffs.a1, &coeffs.c1, &coeffs.l2, &coeffs.g2, grid)?;

    let n = coeffs.n();
    let mut xi1_singular_nodes = Vec::new();
    let mut dbar_values = Vec::with_capacity(grid.half_len());
    for k in 0..grid.half_len() {
        let t = grid.node(k);
        let d1 = coeffs.d1.value(k);
        let xi1_inv = match inv_guarded(xi1.value(k), "xi1", t, CONDITION_CAP) {
            Ok(inv) => inv,
            Err(_) => {
                xi1_singular_nodes.push(k);
                crate::linalg::inv_regularized(xi1.value(k))
            }
        };
        let absorb = DMatrix::identity(n, n) - d1 * xi1_inv * d1.transpose() * pi1.value(k);
        dbar_values.push(&absorb * coeffs.d2.value(k));
    }
    let dbar = MatrixFunction::from_samples(grid, Span::Half, dbar_values)?.zero_extend();
    let xi2 = assemble_xi(&coeffs.r2, &dbar, &pi2);
    let xi3 = coeffs.r2.clone();

    let pi_bar = if coeffs.n() == 1 && coeffs.k1() == 1 {
        let d1_ok = (0..grid.half_len()).all(|k| coeffs.d1.value(k)[(0, 0)] != 0.0);
        if d1_ok {
            let values = (0..grid.full_len())
                .map(|k| {
                    if k <= grid.steps() {
                        let d = coeffs.d1.value(k)[(0, 0)];
                        pi1.value(k) + coeffs.r1.value(k) / (d * d)
                    } else {
                        DMatrix::zeros(1, 1)
                    }
                })
                .collect();
            Some(MatrixFunction::from_samples(grid, Span::Full, values)?)
        } else {
            None
        }
    } else {
        None
    };

    Ok(RiccatiSolution {
        pi1,
        pi2,
        xi1,
        xi2,
        xi3,
        pi_bar,
        xi1_singular_nodes,
    })
}

/// One assumption line: residuals per `[0, T]` node in the max-entry norm.
#[derive(Debug, Clone)]
pub struct AssumptionCheck {
    pub name: &'static str,
    pub max_residual: f64,
    pub node_residuals: Vec<f64>,
    pub pass: bool,
}

/// Residual report for the three structural assumption groups plus the
/// positivity of both control weights.
#[derive(Debug, Clone)]
pub struct AssumptionReport {
    pub tol: f64,
    pub checks: Vec<AssumptionCheck>,
    pub xi1_min_eig: Vec<f64>,
    pub xi2_min_eig: Vec<f64>,
    pub all_pass: bool,
}

impl AssumptionReport {
    pub fn check(&self, name: &str) -> Option<&AssumptionCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Evaluates every assumption line node by node.
///
/// A singular `xi1` at some node shows up as an infinite residual on the
/// lines that need its inverse; it is a reported failure, not an error.
pub fn check_assumptions(
    coeffs: &GameCoefficients,
    sol: &RiccatiSolution,
    tol: f64,
) -> AssumptionReport {
    let grid = coeffs.grid();
    let half = grid.half_len();
    let n = coeffs.n();

    let mut lines: Vec<(&'static str, Vec<f64>)> = vec![
        ("A1.1: c1'P1d1 + P1b1", Vec::with_capacity(half)),
        ("A1.2: c1'P1c2 + P1a2", Vec::with_capacity(half)),
        ("A1.3: c2'P1c2 + lbar1 - c2'P1d1 Xi1^-1 d1'P1c2", Vec::with_capacity(half)),
        ("A2.1: c1'P2d1 + P2b1", Vec::with_capacity(half)),
        ("A2.2: c1'P2c2 + P2a2", Vec::with_capacity(half)),
        ("A2.3: c1'P2d2 + P2b2", Vec::with_capacity(half)),
        ("A2.4: cb2'P2cb2 + lbar2 - cb2'P2db Xi2^-1 db'P2cb2", Vec::with_capacity(half)),
        ("A3.1: I - d1 Xi1^-1 d1'P1", Vec::with_capacity(half)),
        ("A3.2: a2 - b1 Xi1^-1 d1'P1c2", Vec::with_capacity(half)),
    ];

    for k in 0..half {
        let t = grid.node(k);
        let p1 = sol.pi1.value(k);
        let p2 = sol.pi2.value(k);
        let a2 = coeffs.a2.value(k);
        let b1 = coeffs.b1.value(k);
        let b2 = coeffs.b2.value(k);
        let c1 = coeffs.c1.value(k);
        let c2 = coeffs.c2.value(k);
        let d1 = coeffs.d1.value(k);
        let d2 = coeffs.d2.value(k);

        let xi1_inv = inv_guarded(sol.xi1.value(k), "xi1", t, CONDITION_CAP).ok();
        let xi2_inv = inv_guarded(sol.xi2.value(k), "xi2", t, CONDITION_CAP).ok();

        lines[0].1.push((c1.transpose() * p1 * d1 + p1 * b1).amax());
        lines[1].1.push((c1.transpose() * p1 * c2 + p1 * a2).amax());
        lines[2].1.push(match &xi1_inv {
            Some(inv) => {
                let cross = c2.transpose() * p1 * d1;
                (c2.transpose() * p1 * c2 + coeffs.lbar1.value(k)
                    - &cross * inv * cross.transpose())
                .amax()
            }
            None => f64::INFINITY,
        });
        lines[3].1.push((c1.transpose() * p2 * d1 + p2 * b1).amax());
        lines[4].1.push((c1.transpose() * p2 * c2 + p2 * a2).amax());
        lines[5].1.push((c1.transpose() * p2 * d2 + p2 * b2).amax());
        match &xi1_inv {
            Some(inv) => {
                let absorb = DMatrix::identity(n, n) - d1 * inv * d1.transpose() * p1;
                let cb2 = &absorb * c2;
                let db = &absorb * d2;
                lines[7].1.push(absorb.amax());
                lines[8].1.push((a2 - b1 * inv * d1.transpose() * p1 * c2).amax());
                lines[6].1.push(match &xi2_inv {
                    Some(inv2) => {
                        let cross = cb2.transpose() * p2 * &db;
                        (cb2.transpose() * p2 * &cb2 + coeffs.lbar2.value(k)
                            - &cross * inv2 * cross.transpose())
                        .amax()
                    }
                    None => f64::INFINITY,
                });
            }
            None => {
                lines[6].1.push(f64::INFINITY);
                lines[7].1.push(f64::INFINITY);
                lines[8].1.push(f64::INFINITY);
            }
        }
    }

    let checks: Vec<AssumptionCheck> = lines
        .into_iter()
        .map(|(name, node_residuals)| {
            let max_residual = node_residuals.iter().fold(0.0f64, |a, &b| a.max(b));
            AssumptionCheck {
                name,
                max_residual,
                pass: max_residual <= tol,
                node_residuals,
            }
        })
        .collect();

    let xi1_min_eig = min_eig_profile(&sol.xi1);
    let xi2_min_eig = min_eig_profile(&sol.xi2);
    let xi_positive = xi1_min_eig.iter().all(|&e| e > 0.0) && xi2_min_eig.iter().all(|&e| e > 0.0);
    let all_pass = checks.iter().all(|c| c.pass) && xi_positive;

    AssumptionReport {
        tol,
        checks,
        xi1_min_eig,
        xi2_min_eig,
        all_pass,
    }
}

/// Closed form for the scalar constant-coefficient kernel
/// `p' = -(2a + c^2) p - l`, `p(T) = g`, by integrating factor.
pub fn scalar_closed_form(a: f64, c: f64, l: f64, g: f64, t_horizon: f64, t: f64) -> f64 {
    let k = 2.0 * a + c * c;
    if k.abs() < 1e-300 {
        return g + l * (t_horizon - t);
    }
    (g + l / k) * (k * (t_horizon - t)).exp() - l / k
}
