//! Uniform time grid on the doubled horizon `[0, 2T]` and grid-sampled
//! matrix-valued functions of time.
//!
//! Every object in the solver pipeline lives on the same grid.  The model is
//! posed on `[0, T]`; the doubled span exists because the anticipated terms
//! look up to one horizon length into the future, so coefficient functions
//! are extended by zero on `(T, 2T]`.  The node at exactly `T` belongs to the
//! `[0, T]` piece: extension keeps `f(T)` there and stores exact zeros
//! strictly beyond it.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Relative slack used when deciding whether a query time sits on a node.
const NODE_SNAP: f64 = 1e-9;

/// Uniform grid: nodes `k * dt` for `k = 0..=2*steps`, where `steps = T/dt`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    t_horizon: f64,
    dt: f64,
    steps: usize,
}

impl TimeGrid {
    /// Builds the grid for horizon `t_horizon` and step `dt`.
    ///
    /// `t_horizon / dt` must be an integer up to floating-point slack; the
    /// grid would otherwise miss the node at `T` on which terminal
    /// conditions are imposed.
    pub fn new(t_horizon: f64, dt: f64) -> Result<Self> {
        if !(t_horizon.is_finite() && t_horizon > 0.0) {
            return Err(Error::config(format!(
                "grid horizon must be positive and finite, got {t_horizon}"
            )));
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::config(format!(
                "grid step must be positive and finite, got {dt}"
            )));
        }
        let ratio = t_horizon / dt;
        let steps = ratio.round();
        if steps < 1.0 || (ratio - steps).abs() > 1e-6 * ratio.max(1.0) {
            return Err(Error::config(format!(
                "horizon {t_horizon} is not an integer multiple of dt {dt}"
            )));
        }
        Ok(TimeGrid {
            t_horizon,
            dt,
            steps: steps as usize,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Horizon `T` of the model.
    pub fn horizon(&self) -> f64 {
        self.t_horizon
    }

    /// Number of steps in `[0, T]`.
    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Node count of the `[0, T]` span.
    pub fn half_len(&self) -> usize {
        self.steps + 1
    }

    /// Node count of the `[0, 2T]` span.
    pub fn full_len(&self) -> usize {
        2 * self.steps + 1
    }

    pub fn node(&self, k: usize) -> f64 {
        k as f64 * self.dt
    }

    /// Nodes of the `[0, T]` span.
    pub fn half_nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.half_len()).map(|k| self.node(k))
    }

    /// Index of the node nearest to `t`, if `t` sits on the grid.
    pub fn node_index(&self, t: f64) -> Option<usize> {
        let k = (t / self.dt).round();
        if k < 0.0 || k as usize >= self.full_len() {
            return None;
        }
        let snapped = k * self.dt;
        if (t - snapped).abs() <= NODE_SNAP * self.dt {
            Some(k as usize)
        } else {
            None
        }
    }

    /// Trapezoid weights over the node range `[lo, hi]` (inclusive indices).
    /// Empty or single-node ranges integrate to zero.
    pub fn trapezoid_weight(&self, lo: usize, hi: usize, k: usize) -> f64 {
        debug_assert!(lo <= k && k <= hi);
        if lo == hi {
            0.0
        } else if k == lo || k == hi {
            0.5 * self.dt
        } else {
            self.dt
        }
    }
}

/// Which span of the grid a sampled function covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Span {
    /// `[0, T]`, `steps + 1` nodes.
    Half,
    /// `[0, 2T]`, `2 * steps + 1` nodes.
    Full,
}

/// Matrix-valued function of time stored by its samples on the grid.
///
/// Evaluation between nodes is linear interpolation; evaluation at a node
/// returns the stored sample bitwise.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixFunction {
    grid: TimeGrid,
    span: Span,
    rows: usize,
    cols: usize,
    values: Vec<DMatrix<f64>>,
}

impl MatrixFunction {
    /// Samples `f` at every node of the requested span.
    pub fn from_fn<F>(grid: TimeGrid, span: Span, rows: usize, cols: usize, mut f: F) -> Self
    where
        F: FnMut(f64) -> DMatrix<f64>,
    {
        let len = match span {
            Span::Half => grid.half_len(),
            Span::Full => grid.full_len(),
        };
        let values = (0..len)
            .map(|k| {
                let m = f(grid.node(k));
                assert_eq!(
                    (m.nrows(), m.ncols()),
                    (rows, cols),
                    "sampled matrix has wrong shape at node {k}"
                );
                m
            })
            .collect();
        MatrixFunction {
            grid,
            span,
            rows,
            cols,
            values,
        }
    }

    /// Constant function over the span.
    pub fn constant(grid: TimeGrid, span: Span, value: DMatrix<f64>) -> Self {
        let (rows, cols) = (value.nrows(), value.ncols());
        let len = match span {
            Span::Half => grid.half_len(),
            Span::Full => grid.full_len(),
        };
        MatrixFunction {
            grid,
            span,
            rows,
            cols,
            values: vec![value; len],
        }
    }

    pub fn zeros(grid: TimeGrid, span: Span, rows: usize, cols: usize) -> Self {
        Self::constant(grid, span, DMatrix::zeros(rows, cols))
    }

    /// Wraps pre-computed node samples.
    pub fn from_samples(grid: TimeGrid, span: Span, values: Vec<DMatrix<f64>>) -> Result<Self> {
        let expect = match span {
            Span::Half => grid.half_len(),
            Span::Full => grid.full_len(),
        };
        if values.is_empty() || values.len() != expect {
            return Err(Error::Shape {
                what: "sample vector".into(),
                expected: format!("{expect} nodes"),
                got: format!("{} nodes", values.len()),
            });
        }
        let (rows, cols) = (values[0].nrows(), values[0].ncols());
        if values
            .iter()
            .any(|m| m.nrows() != rows || m.ncols() != cols)
        {
            return Err(Error::Shape {
                what: "sample vector".into(),
                expected: format!("uniform {rows}x{cols}"),
                got: "mixed shapes".into(),
            });
        }
        Ok(MatrixFunction {
            grid,
            span,
            rows,
            cols,
            values,
        })
    }

    pub fn grid(&self) -> TimeGrid {
        self.grid
    }

    pub fn span(&self) -> Span {
        self.span
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Largest time covered by the span.
    pub fn t_max(&self) -> f64 {
        self.grid.node(self.values.len() - 1)
    }

    pub fn value(&self, k: usize) -> &DMatrix<f64> {
        &self.values[k]
    }

    pub fn value_mut(&mut self, k: usize) -> &mut DMatrix<f64> {
        &mut self.values[k]
    }

    pub fn values(&self) -> &[DMatrix<f64>] {
        &self.values
    }

    /// Evaluates at `t`: stored sample on nodes, linear interpolation
    /// strictly between them.
    pub fn eval(&self, t: f64) -> Result<DMatrix<f64>> {
        let dt = self.grid.dt();
        let t_max = self.t_max();
        if !(t.is_finite() && (-NODE_SNAP * dt..=t_max + NODE_SNAP * dt).contains(&t)) {
            return Err(Error::OutOfRange { t, t_max });
        }
        let k_round = (t / dt).round();
        if (t - k_round * dt).abs() <= NODE_SNAP * dt {
            let k = (k_round as usize).min(self.values.len() - 1);
            return Ok(self.values[k].clone());
        }
        let k = ((t / dt).floor() as usize).min(self.values.len() - 2);
        let w = (t - self.grid.node(k)) / dt;
        Ok(&self.values[k] * (1.0 - w) + &self.values[k + 1] * w)
    }

    /// Extends a `[0, T]` function to `[0, 2T]` by zero.  The node at `T`
    /// keeps its sample; every node strictly past `T` stores an exact zero.
    pub fn zero_extend(&self) -> MatrixFunction {
        match self.span {
            Span::Full => self.clone(),
            Span::Half => {
                let mut values = self.values.clone();
                values.resize(self.grid.full_len(), DMatrix::zeros(self.rows, self.cols));
                MatrixFunction {
                    grid: self.grid,
                    span: Span::Full,
                    rows: self.rows,
                    cols: self.cols,
                    values,
                }
            }
        }
    }

    /// Restricts a full-span function to its `[0, T]` samples.
    pub fn restrict_half(&self) -> MatrixFunction {
        MatrixFunction {
            grid: self.grid,
            span: Span::Half,
            rows: self.rows,
            cols: self.cols,
            values: self.values[..self.grid.half_len()].to_vec(),
        }
    }

    /// Maximum over nodes of the elementwise maximum absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.values
            .iter()
            .map(|m| m.amax())
            .fold(0.0f64, f64::max)
    }
}

/// Extends half-span samples by zero; convenience wrapper matching the
/// builder chain used by the coefficient set.
pub fn zero_extend(f: &MatrixFunction) -> MatrixFunction {
    f.zero_extend()
}
