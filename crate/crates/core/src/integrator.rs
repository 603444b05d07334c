//! Classical fixed-step fourth-order Runge-Kutta over flat state slices.

use std::ops::{Add, Mul};

/// Scratch buffers for [`Rk4::step`], sized once per evolution.
pub struct Rk4<T> {
    k1: Vec<T>,
    k2: Vec<T>,
    k3: Vec<T>,
    k4: Vec<T>,
    tmp: Vec<T>,
}

impl<T> Rk4<T>
where
    T: Copy + Default + Add<Output = T> + Mul<f64, Output = T>,
{
    pub fn new(len: usize) -> Self {
        Self {
            k1: vec![T::default(); len],
            k2: vec![T::default(); len],
            k3: vec![T::default(); len],
            k4: vec![T::default(); len],
            tmp: vec![T::default(); len],
        }
    }

    /// Advances `y` from `t` to `t + dt`. `f(t, y, dy)` writes the derivative.
    pub fn step<F>(&mut self, t: f64, dt: f64, y: &mut [T], mut f: F)
    where
        F: FnMut(f64, &[T], &mut [T]),
    {
        let half = 0.5 * dt;
        f(t, y, &mut self.k1);
        axpy(&mut self.tmp, y, &self.k1, half);
        f(t + half, &self.tmp, &mut self.k2);
        axpy(&mut self.tmp, y, &self.k2, half);
        f(t + half, &self.tmp, &mut self.k3);
        axpy(&mut self.tmp, y, &self.k3, dt);
        f(t + dt, &self.tmp, &mut self.k4);
        let w = dt / 6.0;
        for i in 0..y.len() {
            y[i] = y[i] + (self.k1[i] + (self.k2[i] + self.k3[i]) * 2.0 + self.k4[i]) * w;
        }
    }
}

#[inline]
fn axpy<T>(out: &mut [T], y: &[T], k: &[T], a: f64)
where
    T: Copy + Add<Output = T> + Mul<f64, Output = T>,
{
    for ((o, &yi), &ki) in out.iter_mut().zip(y).zip(k) {
        *o = yi + ki * a;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay_is_fourth_order() {
        let err = |n: usize| {
            let dt = 1.0 / n as f64;
            let mut y = [1.0f64];
            let mut rk = Rk4::new(1);
            for k in 0..n {
                rk.step(k as f64 * dt, dt, &mut y, |_, y, dy| dy[0] = -y[0]);
            }
            (y[0] - (-1.0f64).exp()).abs()
        };
        let ratio = err(10) / err(20);
        assert!((ratio - 16.0).abs() < 1.0, "ratio {ratio}");
    }

    #[test]
    fn time_dependent_rhs_uses_substage_times() {
        // y' = 3t², exact for RK4 (Simpson on the quadrature)
        let mut y = [0.0f64];
        let mut rk = Rk4::new(1);
        let dt = 0.25;
        for k in 0..8 {
            rk.step(k as f64 * dt, dt, &mut y, |t, _, dy| dy[0] = 3.0 * t * t);
        }
        assert!((y[0] - 8.0).abs() < 1e-12);
    }
}
