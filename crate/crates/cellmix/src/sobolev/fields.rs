use std::f64::consts::PI;

use crate::Vec2;

/// A time-dependent planar velocity field.
pub trait VelocityField: Sync + Send {
    fn velocity(&self, t: f64, x: Vec2) -> Vec2;

    /// Time interval the field is defined on.
    fn interval(&self) -> (f64, f64) {
        (0.0, 1.0)
    }

    /// Times at which the field may jump; time steppers should not straddle them.
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }
}

impl<F: VelocityField + ?Sized> VelocityField for &F {
    fn velocity(&self, t: f64, x: Vec2) -> Vec2 {
        (**self).velocity(t, x)
    }

    fn interval(&self) -> (f64, f64) {
        (**self).interval()
    }

    fn breakpoints(&self) -> Vec<f64> {
        (**self).breakpoints()
    }
}

impl<F: VelocityField + ?Sized> VelocityField for Box<F> {
    fn velocity(&self, t: f64, x: Vec2) -> Vec2 {
        (**self).velocity(t, x)
    }

    fn interval(&self) -> (f64, f64) {
        (**self).interval()
    }

    fn breakpoints(&self) -> Vec<f64> {
        (**self).breakpoints()
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroVelocity;

impl VelocityField for ZeroVelocity {
    fn velocity(&self, _t: f64, _x: Vec2) -> Vec2 {
        [0.0, 0.0]
    }
}

/// `u = (sin(2 pi y), 0)`, defined on all of the plane.
#[derive(Debug, Clone, Copy, Default)]
pub struct ShearSine;

impl VelocityField for ShearSine {
    fn velocity(&self, _t: f64, x: Vec2) -> Vec2 {
        [(2.0 * PI * (x[1] + 0.5)).sin(), 0.0]
    }
}

/// Rigid rotation `rate * (x - c)^perp` restricted to the disc of radius `radius`.
#[derive(Debug, Clone, Copy)]
pub struct RigidRotation {
    pub center: Vec2,
    pub rate: f64,
    pub radius: f64,
}

impl VelocityField for RigidRotation {
    fn velocity(&self, _t: f64, x: Vec2) -> Vec2 {
        let d = [x[0] - self.center[0], x[1] - self.center[1]];
        if d[0] * d[0] + d[1] * d[1] >= self.radius * self.radius {
            return [0.0, 0.0];
        }
        [-self.rate * d[1], self.rate * d[0]]
    }
}

/// Perpendicular gradient of the stream function
/// `psi = amplitude (1 + modulation sin(2 pi t)) (cos(pi x) cos(pi y))^power` on `Q`,
/// zero outside. Divergence free, vanishing with `power - 1` derivatives on the boundary.
#[derive(Debug, Clone, Copy)]
pub struct StreamBump {
    pub amplitude: f64,
    pub power: i32,
    pub modulation: f64,
}

impl Default for StreamBump {
    fn default() -> Self {
        StreamBump {
            amplitude: 1.0,
            power: 4,
            modulation: 0.0,
        }
    }
}

impl VelocityField for StreamBump {
    fn velocity(&self, t: f64, x: Vec2) -> Vec2 {
        if x[0].abs() >= 0.5 || x[1].abs() >= 0.5 {
            return [0.0, 0.0];
        }
        let a = self.amplitude * (1.0 + self.modulation * (2.0 * PI * t).sin());
        let m = self.power as f64;
        let (cx, sx) = ((PI * x[0]).cos(), (PI * x[0]).sin());
        let (cy, sy) = ((PI * x[1]).cos(), (PI * x[1]).sin());
        let pxm = cx.powi(self.power);
        let pym = cy.powi(self.power);
        let dpsi_dx = -a * m * PI * cx.powi(self.power - 1) * sx * pym;
        let dpsi_dy = -a * m * PI * pxm * cy.powi(self.power - 1) * sy;
        [-dpsi_dy, dpsi_dx]
    }
}

/// A field on `Q x [0, 1]` moved into a square of side `scale` centered at
/// `center` and onto the time window `[t0, t0 + dilation]`:
/// `u(t, x) = (scale / dilation) inner((t - t0) / dilation, (x - center) / scale)`.
#[derive(Debug, Clone, Copy)]
pub struct Patched<F> {
    pub inner: F,
    pub scale: f64,
    pub dilation: f64,
    pub t0: f64,
    pub center: Vec2,
}

impl<F: VelocityField> VelocityField for Patched<F> {
    fn velocity(&self, t: f64, x: Vec2) -> Vec2 {
        let y = [
            (x[0] - self.center[0]) / self.scale,
            (x[1] - self.center[1]) / self.scale,
        ];
        if y[0].abs() >= 0.5 || y[1].abs() >= 0.5 {
            return [0.0, 0.0];
        }
        let v = self.inner.velocity((t - self.t0) / self.dilation, y);
        let amp = self.scale / self.dilation;
        [amp * v[0], amp * v[1]]
    }

    fn interval(&self) -> (f64, f64) {
        (self.t0, self.t0 + self.dilation)
    }

    fn breakpoints(&self) -> Vec<f64> {
        self.inner
            .breakpoints()
            .into_iter()
            .map(|b| self.t0 + b * self.dilation)
            .collect()
    }
}
