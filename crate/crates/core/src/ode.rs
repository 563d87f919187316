//! Fixed-step classical Runge–Kutta.

use crate::linalg::Mat;

/// A state that lives in a vector space.
pub trait OdeState: Clone {
    /// `self + a · dir`
    fn axpy(&self, a: f64, dir: &Self) -> Self;
}

impl OdeState for f64 {
    fn axpy(&self, a: f64, dir: &Self) -> Self {
        self + a * dir
    }
}

impl<const N: usize> OdeState for [f64; N] {
    fn axpy(&self, a: f64, dir: &Self) -> Self {
        std::array::from_fn(|i| self[i] + a * dir[i])
    }
}

impl OdeState for Vec<f64> {
    fn axpy(&self, a: f64, dir: &Self) -> Self {
        self.iter().zip(dir).map(|(y, v)| y + a * v).collect()
    }
}

impl OdeState for Mat {
    fn axpy(&self, a: f64, dir: &Self) -> Self {
        self + dir * a
    }
}

/// One RK4 step of `y' = rhs(t, y)`.
pub fn rk4_step<S, E, F>(y: &S, t: f64, dt: f64, mut rhs: F) -> Result<S, E>
where
    S: OdeState,
    F: FnMut(f64, &S) -> Result<S, E>,
{
    let half = 0.5 * dt;
    let k1 = rhs(t, y)?;
    let k2 = rhs(t + half, &y.axpy(half, &k1))?;
    let k3 = rhs(t + half, &y.axpy(half, &k2))?;
    let k4 = rhs(t + dt, &y.axpy(dt, &k3))?;
    Ok(y.axpy(dt / 6.0, &k1)
        .axpy(dt / 3.0, &k2)
        .axpy(dt / 3.0, &k3)
        .axpy(dt / 6.0, &k4))
}

/// Number of steps of size close to `dt` that land exactly on `t_end`.
pub fn step_count(t_end: f64, dt: f64) -> usize {
    if t_end <= 0.0 {
        return 0;
    }
    (t_end / dt - 1e-9).ceil().max(1.0) as usize
}
