//! Vehicle state, constant-(jerk, curvature-rate) propagation, and the
//! Gauss-Legendre quadrature used for positional increments.
//!
//! Over one interval of length `dt` with constant linear jerk `j` and
//! curvature change rate `kappa_dot`, acceleration, velocity, curvature
//! and heading evolve as polynomials in time:
//!
//! ```text
//! a(t)     = a0 + j t
//! v(t)     = v0 + a0 t + j t^2 / 2
//! kappa(t) = k0 + kd t
//! theta(t) = th0 + k0 v0 t + (k0 a0 + v0 kd) t^2 / 2
//!          + (k0 j / 2 + a0 kd) t^3 / 3 + kd j t^4 / 8
//! ```
//!
//! The positional increments integrate cos/sin of that quartic heading
//! against v(t); those integrals have no closed form and are evaluated
//! with an N-point Gauss-Legendre rule mapped onto [0, dt]. The Jacobian
//! differentiates the same quadrature sum term by term, so analytic
//! derivatives agree with finite differences of the propagation itself to
//! machine precision.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Full kinematic state at one trajectory knot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VehicleState {
    /// Reference-point x, meters (map frame).
    pub x: f64,
    /// Reference-point y, meters (map frame).
    pub y: f64,
    /// Heading, radians.
    pub theta: f64,
    /// Curvature, 1/m.
    pub kappa: f64,
    /// Linear velocity, m/s.
    pub v: f64,
    /// Linear acceleration, m/s^2.
    pub a: f64,
}

impl VehicleState {
    pub fn new(x: f64, y: f64, theta: f64, kappa: f64, v: f64, a: f64) -> Self {
        Self {
            x,
            y,
            theta,
            kappa,
            v,
            a,
        }
    }

    pub fn to_array(&self) -> [f64; 6] {
        [self.x, self.y, self.theta, self.kappa, self.v, self.a]
    }

    pub fn from_array(s: [f64; 6]) -> Self {
        Self::new(s[0], s[1], s[2], s[3], s[4], s[5])
    }
}

/// Controls held constant across one transition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlPair {
    /// Linear jerk, m/s^3.
    pub jerk: f64,
    /// Curvature change rate, 1/(m s).
    pub kappa_dot: f64,
}

impl ControlPair {
    pub fn new(jerk: f64, kappa_dot: f64) -> Self {
        Self { jerk, kappa_dot }
    }

    pub const ZERO: ControlPair = ControlPair {
        jerk: 0.0,
        kappa_dot: 0.0,
    };
}

/// Gauss-Legendre rule on [-1, 1].
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

/// Default quadrature order for propagation.
pub const DEFAULT_QUADRATURE_ORDER: usize = 10;

/// Nodes and weights of the N-point Gauss-Legendre rule, exact for
/// polynomials of degree <= 2N-1. Computed by Newton iteration on the
/// Legendre recurrence; nodes are symmetrized about zero.
pub fn legendre_rule(order: usize) -> Result<QuadratureRule> {
    if order == 0 || order > 32 {
        return Err(Error::InvalidOrder(order));
    }
    let n = order;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n / 2 {
        // Tricomi initial guess for the i-th positive-side root.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_value_and_derivative(n, x);
            dp = d;
            let delta = p / d;
            x -= delta;
            if delta.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        let (_, d) = legendre_value_and_derivative(n, 0.0);
        nodes[n / 2] = 0.0;
        weights[n / 2] = 2.0 / (d * d);
    }
    Ok(QuadratureRule { nodes, weights })
}

fn legendre_value_and_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p_prev = 1.0;
    let mut p = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p_next = ((2.0 * kf - 1.0) * x * p - (kf - 1.0) * p_prev) / kf;
        p_prev = p;
        p = p_next;
    }
    let d = n as f64 * (x * p - p_prev) / (x * x - 1.0);
    (p, d)
}

impl QuadratureRule {
    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Integrates `f` over [0, len].
    pub fn integrate<F: FnMut(f64) -> f64>(&self, len: f64, mut f: F) -> f64 {
        let half = 0.5 * len;
        let mut acc = 0.0;
        for (&xi, &w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(half * xi + half);
        }
        half * acc
    }
}

impl Default for QuadratureRule {
    fn default() -> Self {
        legendre_rule(DEFAULT_QUADRATURE_ORDER).unwrap()
    }
}

/// Heading polynomial value at time t within the interval.
#[inline]
fn theta_at(s0: &VehicleState, u: &ControlPair, t: f64) -> f64 {
    let (k0, v0, a0) = (s0.kappa, s0.v, s0.a);
    let (j, kd) = (u.jerk, u.kappa_dot);
    s0.theta
        + k0 * v0 * t
        + 0.5 * (k0 * a0 + v0 * kd) * t * t
        + (0.5 * k0 * j + a0 * kd) * t * t * t / 3.0
        + 0.125 * kd * j * t * t * t * t
}

/// Speed polynomial value at time t within the interval.
#[inline]
fn speed_at(s0: &VehicleState, u: &ControlPair, t: f64) -> f64 {
    s0.v + s0.a * t + 0.5 * u.jerk * t * t
}

/// Propagates a state over `dt` under constant controls. Positional
/// increments use the given quadrature rule; the remaining components are
/// exact polynomial updates. Velocity is not clamped at zero here —
/// feasibility of v is owned by the optimization bounds.
pub fn propagate(s0: &VehicleState, u: &ControlPair, dt: f64, rule: &QuadratureRule) -> VehicleState {
    debug_assert!(dt > 0.0);
    let half = 0.5 * dt;
    let mut dx = 0.0;
    let mut dy = 0.0;
    for (&xi, &w) in rule.nodes.iter().zip(&rule.weights) {
        let t = half * xi + half;
        let theta = theta_at(s0, u, t);
        let v = speed_at(s0, u, t);
        let (sin_t, cos_t) = theta.sin_cos();
        dx += w * cos_t * v;
        dy += w * sin_t * v;
    }
    VehicleState {
        x: s0.x + half * dx,
        y: s0.y + half * dy,
        theta: theta_at(s0, u, dt),
        kappa: s0.kappa + u.kappa_dot * dt,
        v: s0.v + s0.a * dt + 0.5 * u.jerk * dt * dt,
        a: s0.a + u.jerk * dt,
    }
}

/// Rows: (x1, y1, theta1, kappa1, v1, a1).
/// Columns: (x0, y0, theta0, kappa0, v0, a0, jerk, kappa_dot).
pub type PropagationJacobian = [[f64; 8]; 6];

/// Analytic Jacobian of [`propagate`] with the quadrature differentiated
/// under the integral sign, so it is the exact derivative of the
/// quadrature-based propagation.
pub fn propagate_jacobian(
    s0: &VehicleState,
    u: &ControlPair,
    dt: f64,
    rule: &QuadratureRule,
) -> PropagationJacobian {
    debug_assert!(dt > 0.0);
    let (k0, v0, a0) = (s0.kappa, s0.v, s0.a);
    let (j, kd) = (u.jerk, u.kappa_dot);
    let half = 0.5 * dt;
    let mut jac = [[0.0; 8]; 6];

    // x and y rows: accumulate quadrature of the differentiated integrand.
    // d/dp [cos(theta(t)) v(t)] = -sin(theta) dtheta/dp v + cos(theta) dv/dp
    for (&xi, &w) in rule.nodes.iter().zip(&rule.weights) {
        let t = half * xi + half;
        let t2 = t * t;
        let t3 = t2 * t;
        let t4 = t3 * t;
        let theta = theta_at(s0, u, t);
        let v = speed_at(s0, u, t);
        let (sin_t, cos_t) = theta.sin_cos();

        // dtheta/d(theta0, kappa0, v0, a0, j, kd)
        let dth = [
            1.0,
            v0 * t + 0.5 * a0 * t2 + j * t3 / 6.0,
            k0 * t + 0.5 * kd * t2,
            0.5 * k0 * t2 + kd * t3 / 3.0,
            k0 * t3 / 6.0 + 0.125 * kd * t4,
            0.5 * v0 * t2 + a0 * t3 / 3.0 + 0.125 * j * t4,
        ];
        // dv/d(v0, a0, j)
        let dv = [1.0, t, 0.5 * t2];

        // Column order for dth: theta0, kappa0, v0, a0, j, kd maps to
        // decision columns 2, 3, 4, 5, 6, 7.
        let wc = w * half;
        for (slot, &dth_p) in dth.iter().enumerate() {
            let col = slot + 2;
            jac[0][col] += wc * (-sin_t * dth_p * v);
            jac[1][col] += wc * (cos_t * dth_p * v);
        }
        // v contributions land on columns v0=4, a0=5, j=6.
        for (slot, &dv_p) in dv.iter().enumerate() {
            let col = slot + 4;
            jac[0][col] += wc * (cos_t * dv_p);
            jac[1][col] += wc * (sin_t * dv_p);
        }
    }
    jac[0][0] = 1.0;
    jac[1][1] = 1.0;

    let dt2 = dt * dt;
    let dt3 = dt2 * dt;
    let dt4 = dt3 * dt;
    // theta1 row.
    jac[2][2] = 1.0;
    jac[2][3] = v0 * dt + 0.5 * a0 * dt2 + j * dt3 / 6.0;
    jac[2][4] = k0 * dt + 0.5 * kd * dt2;
    jac[2][5] = 0.5 * k0 * dt2 + kd * dt3 / 3.0;
    jac[2][6] = k0 * dt3 / 6.0 + 0.125 * kd * dt4;
    jac[2][7] = 0.5 * v0 * dt2 + a0 * dt3 / 3.0 + 0.125 * j * dt4;
    // kappa1 row.
    jac[3][3] = 1.0;
    jac[3][7] = dt;
    // v1 row.
    jac[4][4] = 1.0;
    jac[4][5] = dt;
    jac[4][6] = 0.5 * dt2;
    // a1 row.
    jac[5][5] = 1.0;
    jac[5][6] = dt;
    jac
}

/// Curvature of the turning circle for a steering angle on a bicycle
/// model with the given axis length: kappa = tan(alpha) / l_axis.
pub fn steering_to_curvature(alpha: f64, l_axis: f64) -> Result<f64> {
    debug_assert!(l_axis > 0.0);
    if !alpha.is_finite() || alpha.abs() >= std::f64::consts::FRAC_PI_2 {
        return Err(Error::InvalidSteering(alpha));
    }
    Ok(alpha.tan() / l_axis)
}

/// Vehicle footprint parameters for two-circle collision modeling.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct VehicleGeometry {
    /// Body length, m.
    pub length: f64,
    /// Body width, m.
    pub width: f64,
    /// Distance between front and rear axles, m.
    pub axis_length: f64,
    /// Collision circle radius, m.
    pub circle_radius: f64,
    /// Longitudinal offsets of the circle origins (front and rear axle
    /// midpoints) from the state reference point, m.
    pub circle_centers: [f64; 2],
}

impl VehicleGeometry {
    /// Geometry with the state reference at the rear axle midpoint and
    /// the default radius hypot(w/2, l/4) that covers each half-body
    /// rectangle corner-to-corner.
    pub fn new(length: f64, width: f64, axis_length: f64) -> Result<Self> {
        Self::with_radius(
            length,
            width,
            axis_length,
            (width / 2.0).hypot(length / 4.0),
        )
    }

    pub fn with_radius(length: f64, width: f64, axis_length: f64, radius: f64) -> Result<Self> {
        if !(length > 0.0) || !(width > 0.0) {
            return Err(Error::Scenario(format!(
                "vehicle length/width must be positive, got {length} x {width}"
            )));
        }
        if !(axis_length > 0.0 && axis_length < length) {
            return Err(Error::Scenario(format!(
                "axis_length must be in (0, length), got {axis_length}"
            )));
        }
        if !(radius >= width / 2.0) {
            return Err(Error::Scenario(format!(
                "circle_radius must be at least width/2, got {radius}"
            )));
        }
        Ok(Self {
            length,
            width,
            axis_length,
            circle_radius: radius,
            circle_centers: [0.0, axis_length],
        })
    }
}

/// Kinematic limits of the vehicle. Curvature limits derive from the
/// steering limits through the bicycle model; kappa_dot_max uses
/// alpha_rate_max / l_axis (sec^2(alpha) taken as 1 at small angles).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct KinematicBounds {
    pub a_min: f64,
    pub a_max: f64,
    pub j_min: f64,
    pub j_max: f64,
    pub kappa_max: f64,
    pub kappa_dot_max: f64,
    pub a_centri_max: f64,
    pub j_centri_max: f64,
    pub theta_diff_max: f64,
    pub alpha_max: f64,
    pub alpha_rate_max: f64,
}

impl KinematicBounds {
    pub fn from_steering_limits(
        a_min: f64,
        a_max: f64,
        j_min: f64,
        j_max: f64,
        alpha_max: f64,
        alpha_rate_max: f64,
        a_centri_max: f64,
        j_centri_max: f64,
        theta_diff_max: f64,
        l_axis: f64,
    ) -> Result<Self> {
        if !(a_min < a_max) || !(j_min < j_max) {
            return Err(Error::Scenario(format!(
                "bounds must satisfy a_min < a_max and j_min < j_max, got a in [{a_min}, {a_max}], j in [{j_min}, {j_max}]"
            )));
        }
        for (name, v) in [
            ("alpha_max", alpha_max),
            ("alpha_rate_max", alpha_rate_max),
            ("a_centri_max", a_centri_max),
            ("j_centri_max", j_centri_max),
            ("theta_diff_max", theta_diff_max),
        ] {
            if !(v > 0.0) {
                return Err(Error::Scenario(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(Self {
            a_min,
            a_max,
            j_min,
            j_max,
            kappa_max: steering_to_curvature(alpha_max, l_axis)?,
            kappa_dot_max: alpha_rate_max / l_axis,
            a_centri_max,
            j_centri_max,
            theta_diff_max,
            alpha_max,
            alpha_rate_max,
        })
    }
}
