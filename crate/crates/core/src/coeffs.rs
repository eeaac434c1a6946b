//! Coefficient set of the leader-follower game.
//!
//! The controlled state is `n`-dimensional, the follower control is
//! `k1`-dimensional and the leader control is `k2`-dimensional:
//!
//! ```text
//! dx = [a1 x + a2 m + b1 u1 + b2 u2] dt + [c1 x + c2 m + d1 u1 + d2 u2] dW
//! ```
//!
//! where `m` is the running path integral of the state.  Player `i` pays
//! `<l_i x, x> + <lbar_i m, m> + <r_i u_i, u_i>` along the way and
//! `<g_i x(T), x(T)>` at the horizon.
//!
//! All coefficient functions are stored zero-extended on `[0, 2T]` so that
//! the anticipated (forward-window) operators can read them without bounds
//! checks.  Symmetry of the quadratic weights is validated up front; it is a
//! structural requirement, not something the solvers re-check.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::grid::{MatrixFunction, Span, TimeGrid};

const SYMMETRY_TOL: f64 = 1e-12;

/// Half-span (`[0, T]`) coefficient samples handed to the validator.
#[derive(Debug, Clone)]
pub struct CoefficientFunctions {
    pub a1: MatrixFunction,
    pub a2: MatrixFunction,
    pub c1: MatrixFunction,
    pub c2: MatrixFunction,
    pub b1: MatrixFunction,
    pub d1: MatrixFunction,
    pub b2: MatrixFunction,
    pub d2: MatrixFunction,
    pub l1: MatrixFunction,
    pub lbar1: MatrixFunction,
    pub r1: MatrixFunction,
    pub l2: MatrixFunction,
    pub lbar2: MatrixFunction,
    pub r2: MatrixFunction,
    pub g1: DMatrix<f64>,
    pub g2: DMatrix<f64>,
    pub x0: DVector<f64>,
}

/// Constant-in-time coefficient values; the common case in configs and
/// tests.
#[derive(Debug, Clone)]
pub struct ConstantCoefficients {
    pub a1: DMatrix<f64>,
    pub a2: DMatrix<f64>,
    pub c1: DMatrix<f64>,
    pub c2: DMatrix<f64>,
    pub b1: DMatrix<f64>,
    pub d1: DMatrix<f64>,
    pub b2: DMatrix<f64>,
    pub d2: DMatrix<f64>,
    pub l1: DMatrix<f64>,
    pub lbar1: DMatrix<f64>,
    pub r1: DMatrix<f64>,
    pub l2: DMatrix<f64>,
    pub lbar2: DMatrix<f64>,
    pub r2: DMatrix<f64>,
    pub g1: DMatrix<f64>,
    pub g2: DMatrix<f64>,
    pub x0: DVector<f64>,
}

/// Validated, zero-extended coefficient set shared by every solver stage.
#[derive(Debug, Clone)]
pub struct GameCoefficients {
    grid: TimeGrid,
    n: usize,
    k1: usize,
    k2: usize,
    pub a1: MatrixFunction,
    pub a2: MatrixFunction,
    pub c1: MatrixFunction,
    pub c2: MatrixFunction,
    pub b1: MatrixFunction,
    pub d1: MatrixFunction,
    pub b2: MatrixFunction,
    pub d2: MatrixFunction,
    pub l1: MatrixFunction,
    pub lbar1: MatrixFunction,
    pub r1: MatrixFunction,
    pub l2: MatrixFunction,
    pub lbar2: MatrixFunction,
    pub r2: MatrixFunction,
    pub g1: DMatrix<f64>,
    pub g2: DMatrix<f64>,
    pub x0: DVector<f64>,
}

fn check_shape(name: &str, f: &MatrixFunction, rows: usize, cols: usize) -> Result<()> {
    if f.rows() != rows || f.cols() != cols {
        return Err(Error::Shape {
            what: name.into(),
            expected: format!("{rows}x{cols}"),
            got: format!("{}x{}", f.rows(), f.cols()),
        });
    }
    Ok(())
}

fn check_finite(name: &str, f: &MatrixFunction) -> Result<()> {
    for (k, m) in f.values().iter().enumerate() {
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::config(format!(
                "coefficient {name} is not finite at node {k}"
            )));
        }
    }
    Ok(())
}

fn check_symmetric_fn(name: &str, f: &MatrixFunction) -> Result<()> {
    for (k, m) in f.values().iter().enumerate() {
        if !matrix_is_symmetric(m) {
            return Err(Error::config(format!(
                "weight {name} is not symmetric at node {k}"
            )));
        }
    }
    Ok(())
}

/// Symmetry up to `1e-12` relative to the largest entry.
pub fn matrix_is_symmetric(m: &DMatrix<f64>) -> bool {
    if m.nrows() != m.ncols() {
        return false;
    }
    let scale = m.amax().max(1.0);
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst <= SYMMETRY_TOL * scale
}

impl GameCoefficients {
    /// Validates shapes, finiteness and weight symmetry, then zero-extends
    /// every function to the doubled span.
    pub fn new(fns: CoefficientFunctions) -> Result<Self> {
        let grid = fns.a1.grid();
        let n = fns.a1.rows();
        let k1 = fns.b1.cols();
        let k2 = fns.b2.cols();
        if n == 0 || k1 == 0 || k2 == 0 {
            return Err(Error::config("state and control dimensions must be positive"));
        }

        check_shape("a1", &fns.a1, n, n)?;
        check_shape("a2", &fns.a2, n, n)?;
        check_shape("c1", &fns.c1, n, n)?;
        check_shape("c2", &fns.c2, n, n)?;
        check_shape("b1", &fns.b1, n, k1)?;
        check_shape("d1", &fns.d1, n, k1)?;
        check_shape("b2", &fns.b2, n, k2)?;
        check_shape("d2", &fns.d2, n, k2)?;
        check_shape("l1", &fns.l1, n, n)?;
        check_shape("lbar1", &fns.lbar1, n, n)?;
        check_shape("r1", &fns.r1, k1, k1)?;
        check_shape("l2", &fns.l2, n, n)?;
        check_shape("lbar2", &fns.lbar2, n, n)?;
        check_shape("r2", &fns.r2, k2, k2)?;

        let all = [
            ("a1", &fns.a1),
            ("a2", &fns.a2),
            ("c1", &fns.c1),
            ("c2", &fns.c2),
            ("b1", &fns.b1),
            ("d1", &fns.d1),
            ("b2", &fns.b2),
            ("d2", &fns.d2),
            ("l1", &fns.l1),
            ("lbar1", &fns.lbar1),
            ("r1", &fns.r1),
            ("l2", &fns.l2),
            ("lbar2", &fns.lbar2),
            ("r2", &fns.r2),
        ];
        for (name, f) in all {
            if f.grid() != grid {
                return Err(Error::config(format!(
                    "coefficient {name} sampled on a different grid"
                )));
            }
            if f.span() != Span::Half {
                return Err(Error::config(format!(
                    "coefficient {name} must be supplied on [0, T]; extension is applied here"
                )));
            }
            check_finite(name, f)?;
        }
        for (name, f) in [
            ("l1", &fns.l1),
            ("lbar1", &fns.lbar1),
            ("r1", &fns.r1),
            ("l2", &fns.l2),
            ("lbar2", &fns.lbar2),
            ("r2", &fns.r2),
        ] {
            check_symmetric_fn(name, f)?;
        }
        for (name, g) in [("g1", &fns.g1), ("g2", &fns.g2)] {
            if g.nrows() != n || g.ncols() != n {
                return Err(Error::Shape {
                    what: name.into(),
                    expected: format!("{n}x{n}"),
                    got: format!("{}x{}", g.nrows(), g.ncols()),
                });
            }
            if !matrix_is_symmetric(g) {
                return Err(Error::config(format!("terminal weight {name} is not symmetric")));
            }
            if g.iter().any(|v| !v.is_finite()) {
                return Err(Error::config(format!("terminal weight {name} is not finite")));
            }
        }
        if fns.x0.len() != n {
            return Err(Error::Shape {
                what: "x0".into(),
                expected: format!("{n}"),
                got: format!("{}", fns.x0.len()),
            });
        }

        Ok(GameCoefficients {
            grid,
            n,
            k1,
            k2,
            a1: fns.a1.zero_extend(),
            a2: fns.a2.zero_extend(),
            c1: fns.c1.zero_extend(),
            c2: fns.c2.zero_extend(),
            b1: fns.b1.zero_extend(),
            d1: fns.d1.zero_extend(),
            b2: fns.b2.zero_extend(),
            d2: fns.d2.zero_extend(),
            l1: fns.l1.zero_extend(),
            lbar1: fns.lbar1.zero_extend(),
            r1: fns.r1.zero_extend(),
            l2: fns.l2.zero_extend(),
            lbar2: fns.lbar2.zero_extend(),
            r2: fns.r2.zero_extend(),
            g1: fns.g1,
            g2: fns.g2,
            x0: fns.x0,
        })
    }

    /// Builds a constant-coefficient game.
    pub fn from_constants(grid: TimeGrid, c: ConstantCoefficients) -> Result<Self> {
        let half = |m: DMatrix<f64>| MatrixFunction::constant(grid, Span::Half, m);
        GameCoefficients::new(CoefficientFunctions {
            a1: half(c.a1),
            a2: half(c.a2),
            c1: half(c.c1),
            c2: half(c.c2),
            b1: half(c.b1),
            d1: half(c.d1),
            b2: half(c.b2),
            d2: half(c.d2),
            l1: half(c.l1),
            lbar1: half(c.lbar1),
            r1: half(c.r1),
            l2: half(c.l2),
            lbar2: half(c.lbar2),
            r2: half(c.r2),
            g1: c.g1,
            g2: c.g2,
            x0: c.x0,
        })
    }

    /// Scalar game (`n = k1 = k2 = 1`) from plain numbers; the workhorse of
    /// the test suite.
    #[allow(clippy::too_many_arguments)]
    pub fn scalar(
        grid: TimeGrid,
        a1: f64,
        a2: f64,
        c1: f64,
        c2: f64,
        b1: f64,
        d1: f64,
        b2: f64,
        d2: f64,
        l1: f64,
        lbar1: f64,
        r1: f64,
        l2: f64,
        lbar2: f64,
        r2: f64,
        g1: f64,
        g2: f64,
        x0: f64,
    ) -> Result<Self> {
        let m = |v: f64| DMatrix::from_element(1, 1, v);
        GameCoefficients::from_constants(
            grid,
            ConstantCoefficients {
                a1: m(a1),
                a2: m(a2),
                c1: m(c1),
                c2: m(c2),
                b1: m(b1),
                d1: m(d1),
                b2: m(b2),
                d2: m(d2),
                l1: m(l1),
                lbar1: m(lbar1),
                r1: m(r1),
                l2: m(l2),
                lbar2: m(lbar2),
                r2: m(r2),
                g1: m(g1),
                g2: m(g2),
                x0: DVector::from_element(1, x0),
            },
        )
    }

    pub fn grid(&self) -> TimeGrid {
        self.grid
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k1(&self) -> usize {
        self.k1
    }

    pub fn k2(&self) -> usize {
        self.k2
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_game(grid: TimeGrid) -> GameCoefficients {
        GameCoefficients::scalar(
            grid, -0.4, 0.0, 1.0, 0.0, -0.9, 0.9, 0.9, 0.0, -0.1, 0.0, 0.37, -0.002, 0.0, 0.45,
            1000.0, 2000.0, 1.0,
        )
        .unwrap()
    }

    #[test]
    fn coefficients_are_zero_extended() {
        let grid = TimeGrid::new(1.0, 0.25).unwrap();
        let g = scalar_game(grid);
        for f in [&g.a1, &g.r1, &g.l2] {
            assert_eq!(f.len(), grid.full_len());
            for k in grid.steps() + 1..grid.full_len() {
                assert_eq!(f.value(k)[(0, 0)].to_bits(), 0.0f64.to_bits());
            }
        }
        // Node at T keeps the supplied value.
        assert_eq!(g.r1.value(grid.steps())[(0, 0)], 0.37);
    }

    #[test]
    fn asymmetric_weight_is_rejected() {
        let grid = TimeGrid::new(1.0, 0.25).unwrap();
        let m = |v: f64| DMatrix::from_element(2, 2, v);
        let mut l1 = DMatrix::from_element(2, 2, 1.0);
        l1[(0, 1)] = 2.0; // symmetry broken well past tolerance
        let bad = ConstantCoefficients {
            a1: m(0.1),
            a2: m(0.0),
            c1: m(0.0),
            c2: m(0.0),
            b1: DMatrix::zeros(2, 1),
            d1: DMatrix::zeros(2, 1),
            b2: DMatrix::zeros(2, 1),
            d2: DMatrix::zeros(2, 1),
            l1,
            lbar1: DMatrix::zeros(2, 2),
            r1: DMatrix::from_element(1, 1, 1.0),
            l2: DMatrix::zeros(2, 2),
            lbar2: DMatrix::zeros(2, 2),
            r2: DMatrix::from_element(1, 1, 1.0),
            g1: DMatrix::zeros(2, 2),
            g2: DMatrix::zeros(2, 2),
            x0: DVector::zeros(2),
        };
        let err = GameCoefficients::from_constants(grid, bad).unwrap_err();
        assert!(err.to_string().contains("l1"));
    }

    #[test]
    fn shape_mismatch_names_the_field() {
        let grid = TimeGrid::new(1.0, 0.25).unwrap();
        let mut c = ConstantCoefficients {
            a1: DMatrix::from_element(1, 1, 0.0),
            a2: DMatrix::from_element(1, 1, 0.0),
            c1: DMatrix::from_element(1, 1, 0.0),
            c2: DMatrix::from_element(1, 1, 0.0),
            b1: DMatrix::from_element(1, 1, 0.0),
            d1: DMatrix::from_element(1, 1, 0.0),
            b2: DMatrix::from_element(1, 1, 0.0),
            d2: DMatrix::from_element(1, 1, 0.0),
            l1: DMatrix::from_element(1, 1, 0.0),
            lbar1: DMatrix::from_element(1, 1, 0.0),
            r1: DMatrix::from_element(1, 1, 1.0),
            l2: DMatrix::from_element(1, 1, 0.0),
            lbar2: DMatrix::from_element(1, 1, 0.0),
            r2: DMatrix::from_element(1, 1, 1.0),
            g1: DMatrix::from_element(1, 1, 0.0),
            g2: DMatrix::from_element(1, 1, 0.0),
            x0: DVector::from_element(1, 1.0),
        };
        c.d2 = DMatrix::zeros(2, 1);
        let err = GameCoefficients::from_constants(grid, c).unwrap_err();
        assert!(err.to_string().contains("d2"));
    }
}
