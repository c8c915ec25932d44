//! GPS fixes and transmitter-receiver range.
//!
//! Range is taken in a local East-North-Up frame anchored at the receiver:
//! the horizontal component is the great-circle (haversine) distance on a
//! sphere of the WGS-84 mean radius, combined with the altitude difference.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Mean radius of the WGS-84 ellipsoid, meters.
pub const EARTH_MEAN_RADIUS_M: f64 = 6_371_008.8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoFix {
    /// Degrees, [-90, 90].
    #[serde(alias = "latitude")]
    pub lat: f64,
    /// Degrees, [-180, 180].
    #[serde(alias = "longitude")]
    pub lon: f64,
    /// Meters above the ellipsoid.
    #[serde(alias = "altitude")]
    pub alt: f64,
}

impl GeoFix {
    pub fn new(lat: f64, lon: f64, alt: f64) -> Result<Self> {
        let fix = GeoFix { lat, lon, alt };
        fix.validate()?;
        Ok(fix)
    }

    pub fn validate(&self) -> Result<()> {
        if !(-90.0..=90.0).contains(&self.lat) {
            return Err(Error::Domain(format!(
                "latitude {} outside [-90, 90]",
                self.lat
            )));
        }
        if !(-180.0..=180.0).contains(&self.lon) {
            return Err(Error::Domain(format!(
                "longitude {} outside [-180, 180]",
                self.lon
            )));
        }
        if !self.alt.is_finite() {
            return Err(Error::Domain(format!(
                "altitude {} is not finite",
                self.alt
            )));
        }
        Ok(())
    }

    /// Fix reached by moving `distance_m` along the ground on initial bearing
    /// `bearing_deg` (clockwise from north), at altitude `alt`.
    pub fn destination(&self, bearing_deg: f64, distance_m: f64, alt: f64) -> GeoFix {
        let lat1 = self.lat.to_radians();
        let lon1 = self.lon.to_radians();
        let brg = bearing_deg.to_radians();
        let ang = distance_m / EARTH_MEAN_RADIUS_M;

        let lat2 = (lat1.sin() * ang.cos() + lat1.cos() * ang.sin() * brg.cos()).asin();
        let lon2 =
            lon1 + (brg.sin() * ang.sin() * lat1.cos()).atan2(ang.cos() - lat1.sin() * lat2.sin());
        let lon2 = (lon2.to_degrees() + 540.0).rem_euclid(360.0) - 180.0;
        GeoFix {
            lat: lat2.to_degrees(),
            lon: lon2,
            alt,
        }
    }
}

/// Great-circle ground distance between two fixes, meters.
pub fn haversine_m(a: &GeoFix, b: &GeoFix) -> f64 {
    let dlat = (b.lat - a.lat).to_radians();
    let dlon = (b.lon - a.lon).to_radians();
    let h = (dlat / 2.0).sin().powi(2)
        + a.lat.to_radians().cos() * b.lat.to_radians().cos() * (dlon / 2.0).sin().powi(2);
    2.0 * EARTH_MEAN_RADIUS_M * h.sqrt().min(1.0).asin()
}

/// 3-D range between transmitter and receiver, meters.
pub fn compute_distance(tx: &GeoFix, rx: &GeoFix) -> f64 {
    let horizontal = haversine_m(rx, tx);
    let vertical = tx.alt - rx.alt;
    horizontal.hypot(vertical)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_fixes_are_zero_apart() {
        let p = GeoFix::new(46.52, 6.566, 420.0).unwrap();
        assert_eq!(compute_distance(&p, &p), 0.0);
    }

    #[test]
    fn vertical_offset_only() {
        let rx = GeoFix::new(46.52, 6.566, 400.0).unwrap();
        let tx = GeoFix::new(46.52, 6.566, 500.0).unwrap();
        assert!((compute_distance(&tx, &rx) - 100.0).abs() < 1e-9);
    }

    #[test]
    fn one_degree_of_latitude_at_equator() {
        // R = 6371 km oracle: 2*pi*6371000/360
        let oracle = 2.0 * std::f64::consts::PI * 6_371_000.0 / 360.0;
        assert!((oracle - 111_195.0).abs() < 1.0);
        let rx = GeoFix::new(0.0, 10.0, 0.0).unwrap();
        let tx = GeoFix::new(1.0, 10.0, 0.0).unwrap();
        assert!((compute_distance(&tx, &rx) - oracle).abs() < 50.0);
    }

    #[test]
    fn rejects_out_of_range_coordinates() {
        assert!(GeoFix::new(91.0, 0.0, 0.0).is_err());
        assert!(GeoFix::new(0.0, -180.5, 0.0).is_err());
        assert!(GeoFix::new(0.0, 0.0, f64::NAN).is_err());
    }

    #[test]
    fn destination_inverts_distance() {
        let rx = GeoFix::new(46.5191, 6.5668, 410.0).unwrap();
        for (bearing, d) in [(0.0, 250.0), (73.0, 1234.5), (200.0, 4000.0)] {
            let tx = rx.destination(bearing, d, rx.alt);
            assert!(
                (haversine_m(&rx, &tx) - d).abs() < 1e-6,
                "bearing {bearing}"
            );
        }
    }
}
