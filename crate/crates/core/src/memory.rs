//! Path-memory and anticipation operators.
//!
//! The memory of a path is its running integral `m(t) = int_0^t x(s) ds`,
//! accumulated with the trapezoid rule.  The dual objects are the two
//! forward-window transforms of a coefficient function `phi`:
//!
//! * `window`:  `int_t^{min(2t, T)} phi(s) ds` - a window of length `t`
//!   looking forward, truncated where the zero extension begins;
//! * `adjoint`: `int_t^T phi(s) ds` - the exact adjoint of the memory
//!   pairing under Fubini.
//!
//! The two coincide on `[T/2, T]` and the solvers accept either; `adjoint`
//! is the default.  The window transform clips its upper limit at `T`
//! instead of integrating the interpolant across the jump onto the zero
//! extension, so both transforms see exactly the mass that the continuous
//! operator sees.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::grid::{MatrixFunction, Span, TimeGrid};

/// Which forward transform the anticipated terms use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StarVariant {
    Window,
    #[default]
    Adjoint,
}

impl StarVariant {
    /// Inclusive upper node of the integration window starting at node `i`.
    pub fn upper_node(self, i: usize, steps: usize) -> usize {
        match self {
            StarVariant::Window => (2 * i).min(steps),
            StarVariant::Adjoint => steps,
        }
    }
}

/// How the raw memory integral enters the dynamics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MemoryKind {
    /// Plain running integral.
    #[default]
    Integral,
    /// Running integral divided by `max(t, dt)`.
    RunningAverage,
}

/// Vector path sampled on the `[0, T]` nodes of a grid.
#[derive(Debug, Clone)]
pub struct PathSample {
    grid: TimeGrid,
    dim: usize,
    values: Vec<DVector<f64>>,
}

impl PathSample {
    pub fn from_fn<F>(grid: TimeGrid, dim: usize, mut f: F) -> Self
    where
        F: FnMut(f64) -> DVector<f64>,
    {
        let values = (0..grid.half_len())
            .map(|k| {
                let v = f(grid.node(k));
                assert_eq!(v.len(), dim, "path sample has wrong dimension at node {k}");
                v
            })
            .collect();
        PathSample { grid, dim, values }
    }

    pub fn from_values(grid: TimeGrid, values: Vec<DVector<f64>>) -> Result<Self> {
        if values.len() != grid.half_len() {
            return Err(Error::Shape {
                what: "path sample".into(),
                expected: format!("{} nodes", grid.half_len()),
                got: format!("{} nodes", values.len()),
            });
        }
        let dim = values[0].len();
        if values.iter().any(|v| v.len() != dim) {
            return Err(Error::config("path sample has mixed dimensions"));
        }
        Ok(PathSample { grid, dim, values })
    }

    pub fn grid(&self) -> TimeGrid {
        self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn value(&self, k: usize) -> &DVector<f64> {
        &self.values[k]
    }

    pub fn values(&self) -> &[DVector<f64>] {
        &self.values
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.amax()).fold(0.0f64, f64::max)
    }
}

/// Cumulative trapezoid profile of the path: `out[k] = int_0^{t_k} x ds`,
/// with `out[0]` exactly zero.  The update is incremental, which is also the
/// form the simulator uses step by step.
pub fn memory_profile(path: &PathSample) -> Vec<DVector<f64>> {
    let dt = path.grid().dt();
    let mut out = Vec::with_capacity(path.len());
    let mut acc = DVector::zeros(path.dim());
    out.push(acc.clone());
    for k in 1..path.len() {
        acc += (path.value(k - 1) + path.value(k)) * (0.5 * dt);
        out.push(acc.clone());
    }
    out
}

/// Memory integral at time `t`; linear interpolation of the node profile
/// between nodes.
pub fn memory_integral(path: &PathSample, t: f64) -> Result<DVector<f64>> {
    let grid = path.grid();
    let t_max = grid.node(path.len() - 1);
    if !(t.is_finite() && (0.0..=t_max * (1.0 + 1e-12)).contains(&t)) {
        return Err(Error::OutOfRange { t, t_max });
    }
    let profile = memory_profile(path);
    if let Some(k) = grid.node_index(t) {
        return Ok(profile[k.min(profile.len() - 1)].clone());
    }
    let k = ((t / grid.dt()).floor() as usize).min(profile.len() - 2);
    let w = (t - grid.node(k)) / grid.dt();
    Ok(&profile[k] * (1.0 - w) + &profile[k + 1] * w)
}

/// Applies the configured memory aggregation to a raw integral value.
pub fn aggregate_memory(m: &DVector<f64>, t: f64, dt: f64, kind: MemoryKind) -> DVector<f64> {
    match kind {
        MemoryKind::Integral => m.clone(),
        MemoryKind::RunningAverage => m / t.max(dt),
    }
}

/// Trapezoid sum of stored matrices over the inclusive node range
/// `[lo, hi]`.  An empty range (`lo == hi`) integrates to zero.
pub fn trapezoid_nodes(values: &[DMatrix<f64>], lo: usize, hi: usize, dt: f64) -> DMatrix<f64> {
    debug_assert!(lo <= hi && hi < values.len());
    let (rows, cols) = (values[lo].nrows(), values[lo].ncols());
    let mut acc = DMatrix::zeros(rows, cols);
    if lo == hi {
        return acc;
    }
    acc += &values[lo] * 0.5;
    for v in &values[lo + 1..hi] {
        acc += v;
    }
    acc += &values[hi] * 0.5;
    acc * dt
}

/// Window transform at grid node `i`.
pub fn star_window_node(phi: &MatrixFunction, i: usize) -> DMatrix<f64> {
    let steps = phi.grid().steps();
    debug_assert!(i <= steps, "star transforms are defined on [0, T]");
    let hi = (2 * i).min(steps);
    trapezoid_nodes(phi.values(), i, hi, phi.grid().dt())
}

/// Adjoint transform at grid node `i`.
pub fn star_adjoint_node(phi: &MatrixFunction, i: usize) -> DMatrix<f64> {
    let steps = phi.grid().steps();
    debug_assert!(i <= steps, "star transforms are defined on [0, T]");
    trapezoid_nodes(phi.values(), i, steps, phi.grid().dt())
}

/// Selected transform at grid node `i`.
pub fn star_node(phi: &MatrixFunction, i: usize, variant: StarVariant) -> DMatrix<f64> {
    match variant {
        StarVariant::Window => star_window_node(phi, i),
        StarVariant::Adjoint => star_adjoint_node(phi, i),
    }
}

/// Exact integral of the piecewise-linear interpolant of `phi` over
/// `[t1, t2]`, `t1 <= t2`, both within `[0, T]`.
fn integrate_interpolant(phi: &MatrixFunction, t1: f64, t2: f64) -> Result<DMatrix<f64>> {
    let grid = phi.grid();
    let dt = grid.dt();
    let mut acc = DMatrix::zeros(phi.rows(), phi.cols());
    if t2 - t1 <= 0.0 {
        return Ok(acc);
    }
    // March interval by interval; partial pieces use the trapezoid of the
    // interpolated endpoint values, which is exact for linear data.
    let mut a = t1;
    while a < t2 - 1e-14 * dt {
        let k = ((a / dt).floor() as usize).min(grid.full_len() - 2);
        let b = (grid.node(k + 1)).min(t2);
        let fa = phi.eval(a)?;
        let fb = phi.eval(b)?;
        acc += (fa + fb) * (0.5 * (b - a));
        a = b;
    }
    Ok(acc)
}

/// Window transform at arbitrary `t in [0, T]`:
/// `int_t^{min(2t, T)} phi(s) ds`.
pub fn star_window(phi: &MatrixFunction, t: f64) -> Result<DMatrix<f64>> {
    let grid = phi.grid();
    if let Some(i) = grid.node_index(t) {
        if i <= grid.steps() {
            return Ok(star_window_node(phi, i));
        }
    }
    let horizon = grid.horizon().min(grid.node(grid.steps()));
    if !(0.0..=horizon * (1.0 + 1e-12)).contains(&t) {
        return Err(Error::OutOfRange { t, t_max: horizon });
    }
    integrate_interpolant(phi, t, (2.0 * t).min(grid.node(grid.steps())))
}

/// Adjoint transform at arbitrary `t in [0, T]`: `int_t^T phi(s) ds`.
pub fn star_adjoint(phi: &MatrixFunction, t: f64) -> Result<DMatrix<f64>> {
    let grid = phi.grid();
    if let Some(i) = grid.node_index(t) {
        if i <= grid.steps() {
            return Ok(star_adjoint_node(phi, i));
        }
    }
    let horizon = grid.node(grid.steps());
    if !(0.0..=horizon * (1.0 + 1e-12)).contains(&t) {
        return Err(Error::OutOfRange { t, t_max: horizon });
    }
    integrate_interpolant(phi, t, horizon)
}

/// Transform profile over all `[0, T]` nodes as a half-span function.
pub fn star_profile(phi: &MatrixFunction, variant: StarVariant) -> MatrixFunction {
    let grid = phi.grid();
    let values = (0..grid.half_len())
        .map(|i| star_node(phi, i, variant))
        .collect();
    MatrixFunction::from_samples(grid, Span::Half, values)
        .expect("profile sampled on half span by construction")
}

/// Defect of the memory/adjoint duality
/// `int_0^T <phi, m_x> dt = int_0^T <int_t^T phi ds, x(t)> dt`
/// under the discrete quadratures.  Pure quadrature error: second order in
/// `dt` for bounded paths.
pub fn duality_residual(phi: &PathSample, x: &PathSample) -> Result<f64> {
    if phi.grid() != x.grid() {
        return Err(Error::config("duality pairing needs a common grid"));
    }
    if phi.dim() != x.dim() {
        return Err(Error::Shape {
            what: "duality pairing".into(),
            expected: format!("dimension {}", phi.dim()),
            got: format!("dimension {}", x.dim()),
        });
    }
    let grid = phi.grid();
    let steps = grid.steps();
    let dt = grid.dt();
    let m = memory_profile(x);

    // Adjoint profile of phi accumulated backward.
    let mut adj = vec![DVector::zeros(phi.dim()); steps + 1];
    for k in (0..steps).rev() {
        adj[k] = &adj[k + 1] + (phi.value(k) + phi.value(k + 1)) * (0.5 * dt);
    }

    let mut lhs = 0.0;
    let mut rhs = 0.0;
    for k in 0..=steps {
        let w = grid.trapezoid_weight(0, steps, k);
        lhs += w * phi.value(k).dot(&m[k]);
        rhs += w * adj[k].dot(x.value(k));
    }
    Ok((lhs - rhs).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn const_fn(grid: TimeGrid, v: f64) -> MatrixFunction {
        MatrixFunction::constant(grid, Span::Half, DMatrix::from_element(1, 1, v)).zero_extend()
    }

    /// Composite Simpson over `[0, t_hi]`; falls back to one trapezoid panel
    /// on a leftover odd interval.  Exact for piecewise-linear data either
    /// way, which is all this oracle is used for.
    fn simpson_cumulative(path: &PathSample, hi: usize) -> DVector<f64> {
        let dt = path.grid().dt();
        let mut acc = DVector::zeros(path.dim());
        let mut k = 0;
        while k + 2 <= hi {
            acc += (path.value(k) + path.value(k + 1) * 4.0 + path.value(k + 2)) * (dt / 3.0);
            k += 2;
        }
        if k + 1 <= hi {
            acc += (path.value(k) + path.value(k + 1)) * (0.5 * dt);
        }
        acc
    }

    #[test]
    fn memory_of_constant_path_is_linear() {
        let grid = TimeGrid::new(10.0, 0.5).unwrap();
        let c = DVector::from_vec(vec![2.0, -1.0]);
        let path = PathSample::from_fn(grid, 2, |_| c.clone());
        let profile = memory_profile(&path);
        for (k, m) in profile.iter().enumerate() {
            let t = grid.node(k);
            assert_relative_eq!(m[0], 2.0 * t, max_relative = 1e-13);
            assert_relative_eq!(m[1], -t, max_relative = 1e-13);
        }
        assert_eq!(profile[0][0].to_bits(), 0.0f64.to_bits());
    }

    #[test]
    fn memory_matches_simpson_on_piecewise_linear_path() {
        let grid = TimeGrid::new(1.0, 0.01).unwrap();
        let mut rng = StdRng::seed_from_u64(7);
        let path = PathSample::from_fn(grid, 3, |_| {
            DVector::from_fn(3, |_, _| rng.gen_range(-1.0..1.0))
        });
        let profile = memory_profile(&path);
        for k in [10, 55, 100] {
            let simpson = simpson_cumulative(&path, k);
            for i in 0..3 {
                assert_relative_eq!(profile[k][i], simpson[i], max_relative = 1e-10);
            }
        }
    }

    #[test]
    fn star_window_clips_at_horizon() {
        let grid = TimeGrid::new(10.0, 0.1).unwrap();
        let phi = const_fn(grid, 1.0);
        // Window [8, 16] truncated to [8, 10]: mass 2.
        let at8 = star_window(&phi, 8.0).unwrap();
        assert_relative_eq!(at8[(0, 0)], 2.0, max_relative = 1e-12);
        // Window [3, 6] fully inside [0, 10]: mass 3.
        let at3 = star_window(&phi, 3.0).unwrap();
        assert_relative_eq!(at3[(0, 0)], 3.0, max_relative = 1e-12);
        // t = 0: empty window.
        assert_eq!(star_window(&phi, 0.0).unwrap()[(0, 0)], 0.0);
    }

    #[test]
    fn star_adjoint_integrates_to_horizon() {
        let grid = TimeGrid::new(10.0, 0.1).unwrap();
        let phi = const_fn(grid, 1.0);
        assert_relative_eq!(
            star_adjoint(&phi, 8.0).unwrap()[(0, 0)],
            2.0,
            max_relative = 1e-12
        );
        assert_eq!(star_adjoint(&phi, 10.0).unwrap()[(0, 0)], 0.0);
    }

    #[test]
    fn star_variants_coincide_on_late_half() {
        let grid = TimeGrid::new(4.0, 0.05).unwrap();
        let phi = MatrixFunction::from_fn(grid, Span::Half, 1, 1, |t| {
            DMatrix::from_element(1, 1, (1.3 * t).cos() + 0.4 * t)
        })
        .zero_extend();
        for i in grid.steps() / 2..=grid.steps() {
            let w = star_window_node(&phi, i);
            let a = star_adjoint_node(&phi, i);
            assert_eq!(w[(0, 0)].to_bits(), a[(0, 0)].to_bits(), "node {i}");
        }
    }

    #[test]
    fn duality_residual_vanishes_for_constants() {
        let grid = TimeGrid::new(10.0, 0.1).unwrap();
        let one = PathSample::from_fn(grid, 1, |_| DVector::from_element(1, 1.0));
        let r = duality_residual(&one, &one).unwrap();
        assert!(r <= 1e-9 * 10.0, "residual {r}");
    }

    #[test]
    fn duality_residual_is_second_order() {
        let paths = |dt: f64| {
            let grid = TimeGrid::new(2.0, dt).unwrap();
            let phi = PathSample::from_fn(grid, 1, |t| {
                DVector::from_element(1, (3.0 * t).sin() + 0.5)
            });
            let x = PathSample::from_fn(grid, 1, |t| DVector::from_element(1, (2.0 * t).cos()));
            duality_residual(&phi, &x).unwrap()
        };
        let coarse = paths(0.02);
        let fine = paths(0.01);
        let ratio = coarse / fine;
        assert!(
            (2.5..6.0).contains(&ratio),
            "expected ~4x reduction, got {ratio} ({coarse} -> {fine})"
        );
    }

    #[test]
    fn running_average_divides_by_elapsed_time() {
        let m = DVector::from_element(1, 6.0);
        let avg = aggregate_memory(&m, 3.0, 0.1, MemoryKind::RunningAverage);
        assert_relative_eq!(avg[0], 2.0, max_relative = 1e-14);
        // Near t = 0 the divisor saturates at dt.
        let avg0 = aggregate_memory(&m, 0.0, 0.1, MemoryKind::RunningAverage);
        assert_relative_eq!(avg0[0], 60.0, max_relative = 1e-14);
    }

    #[test]
    fn star_operators_are_linear() {
        let grid = TimeGrid::new(2.0, 0.1).unwrap();
        let f = MatrixFunction::from_fn(grid, Span::Half, 1, 1, |t| {
            DMatrix::from_element(1, 1, t * t - 0.3)
        })
        .zero_extend();
        let g = MatrixFunction::from_fn(grid, Span::Half, 1, 1, |t| {
            DMatrix::from_element(1, 1, (t - 1.0).abs())
        })
        .zero_extend();
        let combo = MatrixFunction::from_fn(grid, Span::Half, 1, 1, |t| {
            DMatrix::from_element(1, 1, 2.0 * (t * t - 0.3) - 0.5 * (t - 1.0).abs())
        })
        .zero_extend();
        for variant in [StarVariant::Window, StarVariant::Adjoint] {
            for i in 0..=grid.steps() {
                let lhs = star_node(&combo, i, variant)[(0, 0)];
                let rhs =
                    2.0 * star_node(&f, i, variant)[(0, 0)] - 0.5 * star_node(&g, i, variant)[(0, 0)];
                assert_relative_eq!(lhs, rhs, max_relative = 1e-12, epsilon = 1e-13);
            }
        }
    }
}
