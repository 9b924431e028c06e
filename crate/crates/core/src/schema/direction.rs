use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Eight 45° compass sectors, each centred on its named direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Compass {
    North,
    NorthEast,
    East,
    SouthEast,
    South,
    SouthWest,
    West,
    NorthWest,
}

impl Compass {
    pub const ALL: [Compass; 8] = [
        Compass::North,
        Compass::NorthEast,
        Compass::East,
        Compass::SouthEast,
        Compass::South,
        Compass::SouthWest,
        Compass::West,
        Compass::NorthWest,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn center_degrees(self) -> f64 {
        45.0 * self.index() as f64
    }

    pub fn name(self) -> &'static str {
        match self {
            Compass::North => "North",
            Compass::NorthEast => "North-East",
            Compass::East => "East",
            Compass::SouthEast => "South-East",
            Compass::South => "South",
            Compass::SouthWest => "South-West",
            Compass::West => "West",
            Compass::NorthWest => "North-West",
        }
    }
}

impl fmt::Display for Compass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Reduces an angle in degrees to `[0, 360)`.
pub fn wrap_degrees<T: Scalar>(angle: T) -> T {
    let full = T::of(360.0);
    let r = angle % full;
    let r = if r < T::zero() { r + full } else { r };
    // `-1e-20 % 360 + 360` rounds to exactly 360
    if r >= full {
        T::zero()
    } else {
        r
    }
}

/// Signed shortest rotation from `from` to `to`, in `(-180, 180]` degrees.
pub fn shorter_arc_delta<T: Scalar>(from: T, to: T) -> T {
    let d = wrap_degrees(to - from);
    if d > T::of(180.0) {
        d - T::of(360.0)
    } else {
        d
    }
}

/// Sector containing `angle`; sector `k` covers `[45k - 22.5, 45k + 22.5)`.
pub fn bin_direction<T: Scalar>(angle: T) -> Result<Compass> {
    if !angle.is_finite() {
        return Err(Error::Input(format!("direction {angle} is not finite")));
    }
    let a = wrap_degrees(angle).f64();
    let k = ((a + 22.5) / 45.0).floor() as usize % 8;
    Ok(Compass::ALL[k])
}

/// Twelve month indicators with a single 1 at position `month - 1`.
pub fn expand_month<T: Scalar>(month: u32) -> Result<[T; 12]> {
    if !(1..=12).contains(&month) {
        return Err(Error::Input(format!("month {month} is outside 1..=12")));
    }
    let mut v = [T::zero(); 12];
    v[month as usize - 1] = T::one();
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn named_directions() {
        assert_eq!(bin_direction(135.0).unwrap(), Compass::SouthEast);
        assert_eq!(bin_direction(360.0).unwrap(), Compass::North);
        assert_eq!(bin_direction(0.0).unwrap(), Compass::North);
        assert_eq!(bin_direction(10.0).unwrap(), Compass::North);
        assert_eq!(bin_direction(22.5).unwrap(), Compass::NorthEast);
        assert_eq!(bin_direction(337.5f32).unwrap(), Compass::North);
        assert_eq!(bin_direction(-90.0).unwrap(), Compass::West);
    }

    #[test]
    fn sector_rule_matches_brute_force_loop() {
        for deg in 0..360 {
            let a = deg as f64;
            let owners: Vec<usize> = (0..8)
                .filter(|&k| (a - 45.0 * k as f64 + 22.5).rem_euclid(360.0) < 45.0)
                .collect();
            assert_eq!(
                owners.len(),
                1,
                "angle {deg} must fall in exactly one sector"
            );
            assert_eq!(bin_direction(a).unwrap().index(), owners[0], "angle {deg}");
        }
    }

    #[test]
    fn non_finite_rejected() {
        assert!(bin_direction(f64::NAN).is_err());
        assert!(bin_direction(f64::INFINITY).is_err());
    }

    #[test]
    fn month_indicators() {
        let feb: [f64; 12] = expand_month(2).unwrap();
        assert_eq!(feb[1], 1.0);
        assert_eq!(feb.iter().sum::<f64>(), 1.0);
        let dec: [f32; 12] = expand_month(12).unwrap();
        assert_eq!(dec[11], 1.0);
        assert!(expand_month::<f64>(0).is_err());
        assert!(expand_month::<f64>(13).is_err());
    }

    #[test]
    fn arc_delta_takes_short_way() {
        assert_eq!(shorter_arc_delta(350.0, 10.0), 20.0);
        assert_eq!(shorter_arc_delta(10.0, 350.0), -20.0);
        assert_eq!(shorter_arc_delta(0.0, 180.0), 180.0);
    }

    proptest::proptest! {
        #[test]
        fn direction_is_periodic(x in -1.0e4f64..1.0e4, k in -20i32..20) {
            let shifted = x + 360.0 * k as f64;
            // skip shifts that round across a sector boundary
            let a = wrap_degrees(x);
            let near_edge = ((a + 22.5) % 45.0).min(45.0 - (a + 22.5) % 45.0) < 1e-6;
            proptest::prop_assume!(!near_edge);
            proptest::prop_assert_eq!(bin_direction(x).unwrap(), bin_direction(shifted).unwrap());
        }
    }
}
