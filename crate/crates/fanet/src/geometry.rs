//! Pure 3-D geometry: distances, relative azimuth/elevation between UAVs,
//! and canonical angle handling.
//!
//! Azimuth is measured in the horizontal plane from the +x axis, elevation
//! from the horizontal plane towards +z. Canonical ranges are azimuth in
//! `[-pi, pi)` and elevation in `[-pi/2, pi/2]`; every operation returns
//! angles already reduced to those ranges.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    /// Bearing between two coincident points is undefined.
    #[error("relative angles undefined: positions coincide")]
    CoincidentPositions,
}

/// A point or displacement in 3-D space, in meters.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3 { x: 0.0, y: 0.0, z: 0.0 };

    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn dot(&self, other: &Vec3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, rhs: Vec3) -> Vec3 {
        Vec3::new(self.x + rhs.x, self.y + rhs.y, self.z + rhs.z)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, rhs: Vec3) -> Vec3 {
        Vec3::new(self.x - rhs.x, self.y - rhs.y, self.z - rhs.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

/// UAV orientation: yaw (rotation about +z from +x) and pitch (nose-up
/// angle from the horizontal plane). Roll is not modeled.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Attitude {
    pub yaw: f64,
    pub pitch: f64,
}

impl Attitude {
    /// Builds an attitude, reducing yaw to `[-pi, pi)` and pitch to
    /// `[-pi/2, pi/2]`.
    pub fn new(yaw: f64, pitch: f64) -> Self {
        Attitude {
            yaw: canonical_azimuth(yaw),
            pitch: canonical_elevation(pitch),
        }
    }

    /// Level flight along +x.
    pub fn level() -> Self {
        Attitude { yaw: 0.0, pitch: 0.0 }
    }

    /// Attitude of a body moving with the given velocity, or `None` for
    /// (numerically) zero velocity where the heading is undefined.
    pub fn from_velocity(v: Vec3) -> Option<Self> {
        if v.norm() < 1e-12 {
            return None;
        }
        let yaw = v.y.atan2(v.x);
        let pitch = v.z.atan2((v.x * v.x + v.y * v.y).sqrt());
        Some(Attitude::new(yaw, pitch))
    }
}

/// True kinematic state of one UAV.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UavState {
    pub id: usize,
    pub position: Vec3,
    /// Velocity in m/s.
    pub velocity: Vec3,
    pub attitude: Attitude,
}

/// An (azimuth, elevation) pair in canonical ranges.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Angles {
    pub azimuth: f64,
    pub elevation: f64,
}

impl Angles {
    /// Builds an angle pair, reducing both components to canonical ranges.
    /// Elevation beyond `[-pi/2, pi/2]` is mirrored over the pole without
    /// touching the azimuth.
    pub fn new(azimuth: f64, elevation: f64) -> Self {
        Angles {
            azimuth: canonical_azimuth(azimuth),
            elevation: canonical_elevation(elevation),
        }
    }

    pub const BORESIGHT: Angles = Angles { azimuth: 0.0, elevation: 0.0 };
}

/// Reduces an angle to `[-pi, pi)`.
pub fn canonical_azimuth(angle: f64) -> f64 {
    let wrapped = (angle + PI).rem_euclid(2.0 * PI) - PI;
    // rem_euclid can return exactly 2*pi when angle + PI rounds up.
    if wrapped >= PI {
        wrapped - 2.0 * PI
    } else {
        wrapped
    }
}

/// Reduces an elevation to `[-pi/2, pi/2]` by wrapping to `[-pi, pi)` and
/// mirroring over the nearest pole.
pub fn canonical_elevation(angle: f64) -> f64 {
    let wrapped = canonical_azimuth(angle);
    if wrapped > PI / 2.0 {
        PI - wrapped
    } else if wrapped < -PI / 2.0 {
        -PI - wrapped
    } else {
        wrapped
    }
}

/// Euclidean distance between two points, in meters.
pub fn distance(a: Vec3, b: Vec3) -> f64 {
    (a - b).norm()
}

/// Azimuth and elevation of `rx_position` as seen from a transmitter at
/// `tx_position` with orientation `tx_attitude`.
///
/// The bearing is computed with a four-quadrant arctangent and the
/// transmitter yaw/pitch are subtracted, so the result is the direction of
/// the receiver in the transmitter's body frame. Errors when the two
/// positions coincide (the bearing is undefined there).
pub fn relative_angles(
    tx_position: Vec3,
    tx_attitude: Attitude,
    rx_position: Vec3,
) -> Result<Angles, GeometryError> {
    let d = rx_position - tx_position;
    if d.x == 0.0 && d.y == 0.0 && d.z == 0.0 {
        return Err(GeometryError::CoincidentPositions);
    }
    let bearing_azimuth = d.y.atan2(d.x);
    let horizontal = (d.x * d.x + d.y * d.y).sqrt();
    let bearing_elevation = d.z.atan2(horizontal);
    Ok(Angles::new(
        bearing_azimuth - tx_attitude.yaw,
        bearing_elevation - tx_attitude.pitch,
    ))
}

/// Receiver-side angles for a link whose transmitter-side angles are given:
/// the supplementary pair `(pi + azimuth, pi + elevation)`, reduced to
/// canonical ranges.
///
/// With the mirror reduction of [`canonical_elevation`] this is exactly the
/// reversed bearing: the unit direction of the result is the negation of
/// the input's unit direction.
pub fn reciprocal_angles(angles: Angles) -> Angles {
    Angles::new(angles.azimuth + PI, angles.elevation + PI)
}

/// Unit direction vector for an angle pair: x towards azimuth 0 in the
/// horizontal plane, z up.
pub fn unit_direction(angles: Angles) -> Vec3 {
    let (sa, ca) = angles.azimuth.sin_cos();
    let (se, ce) = angles.elevation.sin_cos();
    Vec3::new(ce * ca, ce * sa, se)
}
