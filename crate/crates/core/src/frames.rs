//! Two-axis vectors in the rotor (dq) and stator (αβ) frames.
//!
//! The physical quantity carried by a vector is a type parameter, so a flux
//! vector cannot be added to a current vector by accident. All quantities are
//! SI: flux in Wb, current in A, voltage in V.

use std::fmt;
use std::marker::PhantomData;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};

/// Marker for flux linkage [Wb].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Flux;
/// Marker for current [A].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Current;
/// Marker for voltage [V].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Voltage;

/// Vector in the rotor (dq) frame.
#[derive(Serialize, Deserialize)]
pub struct Dq<U> {
    pub d: f64,
    pub q: f64,
    #[serde(skip)]
    _unit: PhantomData<U>,
}

/// Vector in the stator (αβ) frame.
#[derive(Serialize, Deserialize)]
pub struct Ab<U> {
    pub a: f64,
    pub b: f64,
    #[serde(skip)]
    _unit: PhantomData<U>,
}

pub type FluxDq = Dq<Flux>;
pub type CurrentDq = Dq<Current>;
pub type VoltageDq = Dq<Voltage>;
pub type CurrentAb = Ab<Current>;
pub type VoltageAb = Ab<Voltage>;

macro_rules! two_vector {
    ($name:ident, $x:ident, $y:ident) => {
        impl<U> $name<U> {
            pub const ZERO: Self = Self {
                $x: 0.0,
                $y: 0.0,
                _unit: PhantomData,
            };

            pub const fn new($x: f64, $y: f64) -> Self {
                Self {
                    $x,
                    $y,
                    _unit: PhantomData,
                }
            }

            pub fn dot(self, other: Self) -> f64 {
                self.$x * other.$x + self.$y * other.$y
            }

            pub fn norm(self) -> f64 {
                self.$x.hypot(self.$y)
            }

            pub fn is_finite(self) -> bool {
                self.$x.is_finite() && self.$y.is_finite()
            }

            pub fn to_array(self) -> [f64; 2] {
                [self.$x, self.$y]
            }

            pub fn from_array(v: [f64; 2]) -> Self {
                Self::new(v[0], v[1])
            }

            /// Reinterprets the components as a different quantity.
            pub fn cast<V>(self) -> $name<V> {
                $name::new(self.$x, self.$y)
            }
        }

        impl<U> Clone for $name<U> {
            fn clone(&self) -> Self {
                *self
            }
        }
        impl<U> Copy for $name<U> {}

        impl<U> Default for $name<U> {
            fn default() -> Self {
                Self::ZERO
            }
        }

        impl<U> PartialEq for $name<U> {
            fn eq(&self, other: &Self) -> bool {
                self.$x == other.$x && self.$y == other.$y
            }
        }

        impl<U> fmt::Debug for $name<U> {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "({}, {})", self.$x, self.$y)
            }
        }

        impl<U> Add for $name<U> {
            type Output = Self;
            fn add(self, rhs: Self) -> Self {
                Self::new(self.$x + rhs.$x, self.$y + rhs.$y)
            }
        }

        impl<U> AddAssign for $name<U> {
            fn add_assign(&mut self, rhs: Self) {
                self.$x += rhs.$x;
                self.$y += rhs.$y;
            }
        }

        impl<U> Sub for $name<U> {
            type Output = Self;
            fn sub(self, rhs: Self) -> Self {
                Self::new(self.$x - rhs.$x, self.$y - rhs.$y)
            }
        }

        impl<U> SubAssign for $name<U> {
            fn sub_assign(&mut self, rhs: Self) {
                self.$x -= rhs.$x;
                self.$y -= rhs.$y;
            }
        }

        impl<U> Neg for $name<U> {
            type Output = Self;
            fn neg(self) -> Self {
                Self::new(-self.$x, -self.$y)
            }
        }

        impl<U> Mul<f64> for $name<U> {
            type Output = Self;
            fn mul(self, k: f64) -> Self {
                Self::new(self.$x * k, self.$y * k)
            }
        }
    };
}

two_vector!(Dq, d, q);
two_vector!(Ab, a, b);

/// Electrical angle of the rotor [rad].
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RotationAngle(pub f64);

impl RotationAngle {
    pub fn radians(self) -> f64 {
        self.0
    }

    /// `R(θ)·x`: rotor frame to stator frame.
    pub fn to_ab<U>(self, x: Dq<U>) -> Ab<U> {
        let (s, c) = self.0.sin_cos();
        Ab::new(c * x.d - s * x.q, s * x.d + c * x.q)
    }

    /// `R(θ)ᵀ·x`: stator frame to rotor frame.
    pub fn to_dq<U>(self, x: Ab<U>) -> Dq<U> {
        let (s, c) = self.0.sin_cos();
        Dq::new(c * x.a + s * x.b, -s * x.a + c * x.b)
    }
}

/// Quarter-turn rotation `J = [[0, -1], [1, 0]]` applied to a dq vector.
pub fn quarter_turn<U>(x: Dq<U>) -> Dq<U> {
    Dq::new(-x.q, x.d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rotation_round_trip() {
        let th = RotationAngle(0.7);
        let x = CurrentDq::new(1.5, -0.25);
        let back = th.to_dq(th.to_ab(x));
        assert!((back - x).norm() < 1e-15);
        assert!((th.to_ab(x).norm() - x.norm()).abs() < 1e-15);
    }

    #[test]
    fn zero_angle_is_identity() {
        let x = VoltageDq::new(3.0, 4.0);
        let ab = RotationAngle(0.0).to_ab(x);
        assert_eq!((ab.a, ab.b), (3.0, 4.0));
    }

    #[test]
    fn quarter_turn_squares_to_minus_identity() {
        let x = FluxDq::new(0.3, 0.1);
        assert_eq!(quarter_turn(quarter_turn(x)), -x);
    }

    #[test]
    fn serde_skips_marker() {
        let x = CurrentDq::new(1.0, 2.0);
        let s = serde_json::to_string(&x).unwrap();
        assert_eq!(s, r#"{"d":1.0,"q":2.0}"#);
        let y: CurrentDq = serde_json::from_str(&s).unwrap();
        assert_eq!(x, y);
    }
}
