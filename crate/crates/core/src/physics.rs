//! Isentropic equation of state and the stiff/non-stiff flux split.

use crate::error::{Error, Result};
use crate::mesh::Dir;
use crate::num::{lit, Real};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EulerParams<T> {
    /// Reference Mach number.
    pub epsilon: T,
    /// Exponent of `p = rho^gamma`.
    pub gamma: T,
    /// CFL number.
    pub cfl: T,
    /// Upper bound on the time step.
    pub dt_max: T,
}

impl<T: Real> EulerParams<T> {
    pub fn new(epsilon: T, gamma: T, cfl: T, dt_max: T) -> Result<Self> {
        let p = EulerParams {
            epsilon,
            gamma,
            cfl,
            dt_max,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > T::zero()) {
            return Err(Error::InvalidParameter(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        if !(self.gamma >= T::one()) {
            return Err(Error::InvalidParameter(format!(
                "gamma must be at least 1, got {}",
                self.gamma
            )));
        }
        if !(self.cfl > T::zero() && self.cfl < T::one()) {
            return Err(Error::InvalidParameter(format!(
                "cfl must lie in (0, 1), got {}",
                self.cfl
            )));
        }
        if !(self.dt_max > T::zero()) {
            return Err(Error::InvalidParameter(format!(
                "dt_max must be positive, got {}",
                self.dt_max
            )));
        }
        Ok(())
    }

    pub fn eps2(&self) -> T {
        self.epsilon * self.epsilon
    }
}

/// Conserved variables `(rho, q1, q2)` of one cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConservedCell<T> {
    pub rho: T,
    pub q1: T,
    pub q2: T,
}

impl<T: Real> ConservedCell<T> {
    pub fn new(rho: T, q1: T, q2: T) -> Self {
        ConservedCell { rho, q1, q2 }
    }

    pub fn as_array(&self) -> [T; 3] {
        [self.rho, self.q1, self.q2]
    }

    pub fn from_array(a: [T; 3]) -> Self {
        ConservedCell::new(a[0], a[1], a[2])
    }

    pub fn momentum(&self, dir: Dir) -> T {
        match dir {
            Dir::X1 => self.q1,
            Dir::X2 => self.q2,
        }
    }

    fn check(&self) -> Result<()> {
        if self.rho > T::zero() {
            Ok(())
        } else {
            Err(Error::Positivity {
                quantity: "density",
                value: self.rho.to_f64_lossy(),
                location: "cell state".into(),
            })
        }
    }
}

/// `p = rho^gamma`.
pub fn pressure<T: Real>(rho: T, gamma: T) -> Result<T> {
    if !(rho > T::zero()) {
        return Err(Error::Positivity {
            quantity: "density",
            value: rho.to_f64_lossy(),
            location: "pressure evaluation".into(),
        });
    }
    Ok(if gamma == T::one() { rho } else { rho.powf(gamma) })
}

/// `rho = p^(1/gamma)`.
pub fn density_from_pressure<T: Real>(p: T, gamma: T) -> Result<T> {
    if !(p > T::zero()) {
        return Err(Error::Positivity {
            quantity: "pressure",
            value: p.to_f64_lossy(),
            location: "density evaluation".into(),
        });
    }
    Ok(if gamma == T::one() { p } else { p.powf(gamma.recip()) })
}

/// Advective flux `F_dir = (0, q_dir q1 / rho, q_dir q2 / rho)`.
pub fn flux_nonstiff<T: Real>(w: ConservedCell<T>, dir: Dir) -> Result<[T; 3]> {
    w.check()?;
    let qd = w.momentum(dir);
    Ok([T::zero(), qd * w.q1 / w.rho, qd * w.q2 / w.rho])
}

/// Acoustic flux `G_dir = (q_dir, delta_{dir,1} p / eps^2, delta_{dir,2} p / eps^2)`.
pub fn flux_stiff<T: Real>(w: ConservedCell<T>, dir: Dir, params: &EulerParams<T>) -> Result<[T; 3]> {
    let p = pressure(w.rho, params.gamma)? / params.eps2();
    Ok(match dir {
        Dir::X1 => [w.q1, p, T::zero()],
        Dir::X2 => [w.q2, T::zero(), p],
    })
}

/// Largest advective eigenvalue `|2 q_dir / rho|`.
pub fn max_wave_speed<T: Real>(w: ConservedCell<T>, dir: Dir) -> T {
    (lit::<T>(2.0) * w.momentum(dir) / w.rho).abs()
}

/// Local Mach number `eps |u| / sqrt(gamma rho^(gamma - 1))`.
pub fn mach_number<T: Real>(w: ConservedCell<T>, params: &EulerParams<T>) -> Result<T> {
    w.check()?;
    let speed = (w.q1 * w.q1 + w.q2 * w.q2).sqrt() / w.rho;
    let c = (params.gamma * w.rho.powf(params.gamma - T::one())).sqrt();
    Ok(params.epsilon * speed / c)
}
