//! Reference parameter sets from a campus measurement campaign at
//! 862.5 MHz with four rooftop gateways (reference distance 10 m, distance
//! step 10 m). Values are rounded to two or three decimals, so the
//! innovation-variance closure holds only to that precision.

use crate::fading::FadingModel;
use crate::pathloss::PathlossModel;
use crate::trace::ScenarioModel;
use crate::types::Scenario;

pub const D0: f64 = 10.0;
pub const DELTA_D: f64 = 10.0;

/// `(rho0, gamma, sigma_z)`
pub fn pathloss_row(scenario: Scenario) -> (f64, f64, f64) {
    match scenario {
        Scenario::UavLos => (64.20, 2.79, 5.36),
        Scenario::UavNlos => (65.67, 3.62, 5.71),
        Scenario::PedestrianNlos => (61.60, 3.25, 8.90),
    }
}

/// `(sigma_x, sigma_y, phi, sigma_eps)`
pub fn fading_row(scenario: Scenario) -> (f64, f64, f64, f64) {
    match scenario {
        Scenario::UavLos => (2.89, 4.51, 0.974, 1.02),
        Scenario::UavNlos => (4.01, 4.07, 0.898, 1.79),
        Scenario::PedestrianNlos => (7.60, 4.63, 0.750, 3.06),
    }
}

pub fn pathloss(scenario: Scenario) -> PathlossModel {
    let (rho0, gamma, sigma_z) = pathloss_row(scenario);
    PathlossModel {
        scenario,
        rho0,
        gamma,
        d0: D0,
        sigma_z,
        n_samples: 0,
    }
}

/// The rounded row as listed, including its `sigma_eps`.
pub fn fading(scenario: Scenario) -> FadingModel {
    let (sigma_x, sigma_y, phi, sigma_eps) = fading_row(scenario);
    FadingModel {
        scenario,
        sigma_x,
        sigma_y,
        phi,
        sigma_eps,
        delta_d: DELTA_D,
    }
}

pub fn scenario_model(scenario: Scenario) -> ScenarioModel {
    ScenarioModel {
        scenario,
        pathloss: pathloss(scenario),
        fading: fading(scenario),
    }
}
