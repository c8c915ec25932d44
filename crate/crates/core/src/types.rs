use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Measurement scenario a model or series belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Scenario {
    #[serde(rename = "uav-los")]
    UavLos,
    #[serde(rename = "uav-nlos")]
    UavNlos,
    #[serde(rename = "ped-nlos")]
    PedestrianNlos,
}

impl Scenario {
    pub const ALL: [Scenario; 3] = [
        Scenario::UavLos,
        Scenario::UavNlos,
        Scenario::PedestrianNlos,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Scenario::UavLos => "uav-los",
            Scenario::UavNlos => "uav-nlos",
            Scenario::PedestrianNlos => "ped-nlos",
        }
    }

    pub fn is_nlos(self) -> bool {
        !matches!(self, Scenario::UavLos)
    }

    pub fn label(self) -> &'static str {
        match self {
            Scenario::UavLos => "UAV LoS",
            Scenario::UavNlos => "UAV NLoS",
            Scenario::PedestrianNlos => "Pedestrian NLoS",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "uav-los" => Ok(Scenario::UavLos),
            "uav-nlos" => Ok(Scenario::UavNlos),
            "ped-nlos" => Ok(Scenario::PedestrianNlos),
            other => Err(Error::InvalidConfig(format!(
                "unknown scenario `{other}` (expected uav-los, uav-nlos or ped-nlos)"
            ))),
        }
    }
}

/// Identifier of a fixed receiving gateway.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ReceiverId(pub String);

impl ReceiverId {
    pub fn new(id: impl Into<String>) -> Self {
        ReceiverId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ReceiverId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for ReceiverId {
    fn from(s: &str) -> Self {
        ReceiverId(s.to_owned())
    }
}
