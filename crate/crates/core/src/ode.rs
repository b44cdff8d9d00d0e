//! Adaptive Dormand–Prince 5(4) integrator for complex vector ODEs.

use num_complex::Complex64;

use crate::error::{GateError, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dopri5Options {
    pub rtol: f64,
    pub atol: f64,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Dopri5Options {
    /// Absolute tolerance tied to the relative one; amplitudes are O(1).
    pub fn with_tolerance(rtol: f64) -> Self {
        Dopri5Options { rtol, atol: rtol * 1e-2, h_max: f64::INFINITY, max_steps: 50_000_000 }
    }
}

impl Default for Dopri5Options {
    fn default() -> Self {
        Self::with_tolerance(1e-9)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize)]
pub struct IntegratorStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// fifth minus fourth order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Integrator state carried between calls to [`Dopri5::advance`].
pub struct Dopri5 {
    opts: Dopri5Options,
    t: f64,
    y: Vec<Complex64>,
    h: f64,
    k: [Vec<Complex64>; 7],
    fsal_valid: bool,
    stats: IntegratorStats,
    tmp: Vec<Complex64>,
    y_new: Vec<Complex64>,
}

impl Dopri5 {
    pub fn new(t0: f64, y0: Vec<Complex64>, opts: Dopri5Options) -> Result<Self> {
        if !(opts.rtol > 0.0 && opts.atol >= 0.0) {
            return Err(GateError::invalid("tolerance", "must be > 0"));
        }
        let n = y0.len();
        let z = || vec![Complex64::new(0.0, 0.0); n];
        Ok(Dopri5 {
            opts,
            t: t0,
            y: y0,
            h: 0.0,
            k: [z(), z(), z(), z(), z(), z(), z()],
            fsal_valid: false,
            stats: IntegratorStats::default(),
            tmp: z(),
            y_new: z(),
        })
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn y(&self) -> &[Complex64] {
        &self.y
    }

    pub fn stats(&self) -> IntegratorStats {
        self.stats
    }

    /// Drop the cached derivative, e.g. when the right-hand side has a kink at the current time.
    pub fn reset_derivative(&mut self) {
        self.fsal_valid = false;
    }

    fn stage<F>(&mut self, f: &mut F, c: f64, h: f64, coeffs: &[(usize, f64)], out: usize) -> Result<()>
    where
        F: FnMut(f64, &[Complex64], &mut [Complex64]) -> Result<()>,
    {
        for i in 0..self.y.len() {
            let mut acc = self.y[i];
            for &(j, a) in coeffs {
                acc += self.k[j][i] * (h * a);
            }
            self.tmp[i] = acc;
        }
        let (t, tmp) = (self.t + c * h, std::mem::take(&mut self.tmp));
        let r = f(t, &tmp, &mut self.k[out]);
        self.tmp = tmp;
        self.stats.evaluations += 1;
        r
    }

    fn initial_step<F>(&mut self, f: &mut F, span: f64) -> Result<f64>
    where
        F: FnMut(f64, &[Complex64], &mut [Complex64]) -> Result<()>,
    {
        let scale = |y: &Complex64, o: &Dopri5Options| o.atol + o.rtol * y.norm();
        let d0 = self.y.iter().map(|y| y.norm() / scale(y, &self.opts)).fold(0.0, f64::max);
        let d1 = self.y.iter().zip(&self.k[0]).map(|(y, k)| k.norm() / scale(y, &self.opts)).fold(0.0, f64::max);
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        let _ = f;
        Ok(h0.min(span).min(self.opts.h_max))
    }

    /// Integrates from the current time to exactly `t_end`.
    pub fn advance<F>(&mut self, f: &mut F, t_end: f64) -> Result<()>
    where
        F: FnMut(f64, &[Complex64], &mut [Complex64]) -> Result<()>,
    {
        if t_end < self.t {
            return Err(GateError::invalid("t_end", "integration runs forward only"));
        }
        if !self.fsal_valid {
            let y = std::mem::take(&mut self.y);
            let r = f(self.t, &y, &mut self.k[0]);
            self.y = y;
            r?;
            self.stats.evaluations += 1;
            self.fsal_valid = true;
        }
        if self.h <= 0.0 {
            self.h = self.initial_step(f, t_end - self.t)?;
        }
        let n = self.y.len();
        while self.t < t_end {
            let remaining = t_end - self.t;
            let mut h = self.h.min(self.opts.h_max);
            let last = h >= remaining * (1.0 - 1e-12);
            if last {
                h = remaining;
            }
            if h <= 1e-14 * self.t.abs().max(1.0) && !last {
                return Err(GateError::StepUnderflow { t: self.t, h });
            }
            if self.stats.accepted + self.stats.rejected >= self.opts.max_steps {
                return Err(GateError::StepUnderflow { t: self.t, h });
            }
            self.stage(f, C2, h, &[(0, A21)], 1)?;
            self.stage(f, C3, h, &[(0, A31), (1, A32)], 2)?;
            self.stage(f, C4, h, &[(0, A41), (1, A42), (2, A43)], 3)?;
            self.stage(f, C5, h, &[(0, A51), (1, A52), (2, A53), (3, A54)], 4)?;
            self.stage(f, 1.0, h, &[(0, A61), (1, A62), (2, A63), (3, A64), (4, A65)], 5)?;
            for i in 0..n {
                self.y_new[i] = self.y[i]
                    + (self.k[0][i] * B1 + self.k[2][i] * B3 + self.k[3][i] * B4 + self.k[4][i] * B5 + self.k[5][i] * B6) * h;
            }
            let t_new = if last { t_end } else { self.t + h };
            {
                let y_new = std::mem::take(&mut self.y_new);
                let r = f(t_new, &y_new, &mut self.k[6]);
                self.y_new = y_new;
                r?;
                self.stats.evaluations += 1;
            }
            let mut err: f64 = 0.0;
            for i in 0..n {
                let e = (self.k[0][i] * E1 + self.k[2][i] * E3 + self.k[3][i] * E4 + self.k[4][i] * E5 + self.k[5][i] * E6 + self.k[6][i] * E7) * h;
                let sc = self.opts.atol + self.opts.rtol * self.y[i].norm().max(self.y_new[i].norm());
                err = err.max(e.norm() / sc);
            }
            if err <= 1.0 {
                self.t = t_new;
                std::mem::swap(&mut self.y, &mut self.y_new);
                self.k.swap(0, 6);
                self.stats.accepted += 1;
                let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                // keep the unclipped step proposal when the last step was shortened to hit t_end
                let base = if last { self.h.max(h) } else { h };
                self.h = (base * factor).min(self.opts.h_max);
            } else {
                self.stats.rejected += 1;
                self.h = h * (0.9 * err.powf(-0.2)).clamp(0.1, 1.0);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_phase_rotation() {
        let mut f = |_t: f64, y: &[Complex64], dy: &mut [Complex64]| {
            for (d, (k, v)) in dy.iter_mut().zip(y.iter().enumerate()) {
                *d = Complex64::new(0.0, -(k as f64 + 1.0)) * v;
            }
            Ok(())
        };
        let y0 = vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0)];
        let mut ode = Dopri5::new(0.0, y0, Dopri5Options::with_tolerance(1e-10)).unwrap();
        ode.advance(&mut f, 10.0).unwrap();
        let exact = [Complex64::from_polar(1.0, -10.0), Complex64::new(0.0, 1.0) * Complex64::from_polar(1.0, -20.0)];
        for (y, e) in ode.y().iter().zip(exact) {
            assert!((y - e).norm() < 1e-8);
        }
        assert_eq!(ode.t(), 10.0);
    }

    #[test]
    fn tighter_tolerance_is_more_accurate() {
        let run = |tol: f64| {
            let mut f = |t: f64, y: &[Complex64], dy: &mut [Complex64]| {
                dy[0] = Complex64::new(0.0, -t.cos()) * y[0];
                Ok(())
            };
            let mut ode = Dopri5::new(0.0, vec![Complex64::new(1.0, 0.0)], Dopri5Options::with_tolerance(tol)).unwrap();
            ode.advance(&mut f, 7.0).unwrap();
            (ode.y()[0] - Complex64::from_polar(1.0, -(7f64).sin())).norm()
        };
        assert!(run(1e-10) < run(1e-6));
        assert!(run(1e-10) < 1e-8);
    }

    #[test]
    fn rejects_backwards_and_propagates_errors() {
        let mut ok = |_: f64, _: &[Complex64], _: &mut [Complex64]| Ok(());
        let mut ode = Dopri5::new(1.0, vec![Complex64::new(1.0, 0.0)], Dopri5Options::default()).unwrap();
        assert!(ode.advance(&mut ok, 0.5).is_err());
        let mut bad = |t: f64, _: &[Complex64], _: &mut [Complex64]| {
            if t > 1.5 {
                Err(GateError::TableCoverage { a: t, lo: 0.0, hi: 1.5 })
            } else {
                Ok(())
            }
        };
        assert!(matches!(ode.advance(&mut bad, 3.0), Err(GateError::TableCoverage { .. })));
    }
}
