use nalgebra::Vector3;

/// Desired position and its first two derivatives at one instant.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RefPoint {
    pub p: Vector3<f64>,
    pub v: Vector3<f64>,
    pub a: Vector3<f64>,
}

impl RefPoint {
    pub fn hold(p: Vector3<f64>) -> Self {
        Self {
            p,
            v: Vector3::zeros(),
            a: Vector3::zeros(),
        }
    }
}

/// A desired trajectory for one vehicle.
pub trait ReferenceTrajectory {
    fn sample(&self, t: f64) -> RefPoint;
}

/// Hover at a fixed point.
#[derive(Clone, Copy, Debug)]
pub struct Hover(pub Vector3<f64>);

impl ReferenceTrajectory for Hover {
    fn sample(&self, _t: f64) -> RefPoint {
        RefPoint::hold(self.0)
    }
}

/// Reference stored on a uniform time grid; held constant outside it and
/// linearly interpolated inside.
#[derive(Clone, Debug)]
pub struct SampledTrajectory {
    pub t0: f64,
    pub dt: f64,
    pub points: Vec<RefPoint>,
}

impl ReferenceTrajectory for SampledTrajectory {
    fn sample(&self, t: f64) -> RefPoint {
        let n = self.points.len();
        if n == 0 {
            return RefPoint::hold(Vector3::zeros());
        }
        let x = ((t - self.t0) / self.dt).max(0.0);
        let i = x.floor() as usize;
        if i + 1 >= n {
            return self.points[n - 1];
        }
        let f = x - i as f64;
        let (a, b) = (&self.points[i], &self.points[i + 1]);
        RefPoint {
            p: a.p.lerp(&b.p, f),
            v: a.v.lerp(&b.v, f),
            a: a.a.lerp(&b.a, f),
        }
    }
}

/// Vertical sinusoid `z = z0 + amp sin(ω t)` above a fixed x-y point.
#[derive(Clone, Copy, Debug)]
pub struct VerticalSine {
    pub center: Vector3<f64>,
    pub amplitude: f64,
    pub omega: f64,
}

impl ReferenceTrajectory for VerticalSine {
    fn sample(&self, t: f64) -> RefPoint {
        let (s, c) = (self.omega * t).sin_cos();
        let w = self.omega;
        RefPoint {
            p: self.center + Vector3::new(0.0, 0.0, self.amplitude * s),
            v: Vector3::new(0.0, 0.0, self.amplitude * w * c),
            a: Vector3::new(0.0, 0.0, -self.amplitude * w * w * s),
        }
    }
}
