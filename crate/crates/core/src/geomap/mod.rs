//! Boundaries, spatial assignment and the GEOID hierarchy.

mod boundaries;
mod index;
mod polygon;
mod truth;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use boundaries::{load_boundaries, parse_boundaries, write_boundaries};
pub use index::{assign_geoid, SpatialIndex};
pub use polygon::{point_in_polygon, Point, Polygon, PolygonSet, Ring};
pub use truth::{canonical_categories, DemographicTable, POPULATION};

/// Census resolutions, finest first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Resolution {
    Block,
    #[serde(alias = "block-group")]
    BlockGroup,
    Tract,
    County,
}

impl Resolution {
    pub const ALL: [Resolution; 4] = [
        Resolution::Block,
        Resolution::BlockGroup,
        Resolution::Tract,
        Resolution::County,
    ];

    pub fn geoid_len(self) -> usize {
        match self {
            Resolution::County => 5,
            Resolution::Tract => 11,
            Resolution::BlockGroup => 12,
            Resolution::Block => 15,
        }
    }

    pub fn from_geoid_len(len: usize) -> Option<Resolution> {
        Resolution::ALL.into_iter().find(|r| r.geoid_len() == len)
    }

    pub fn name(self) -> &'static str {
        match self {
            Resolution::Block => "block",
            Resolution::BlockGroup => "blockgroup",
            Resolution::Tract => "tract",
            Resolution::County => "county",
        }
    }
}

impl fmt::Display for Resolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Resolution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "block" => Ok(Resolution::Block),
            "blockgroup" | "block-group" | "block_group" => Ok(Resolution::BlockGroup),
            "tract" => Ok(Resolution::Tract),
            "county" => Ok(Resolution::County),
            _ => Err(Error::Config(format!("unknown resolution {s:?}"))),
        }
    }
}

/// Resolution implied by a geoid's length, after checking it is all digits.
pub fn geoid_resolution(geoid: &str) -> Result<Resolution> {
    if geoid.is_empty() || !geoid.bytes().all(|b| b.is_ascii_digit()) {
        return Err(Error::Geoid {
            geoid: geoid.to_string(),
            reason: "not a digit string".into(),
        });
    }
    Resolution::from_geoid_len(geoid.len()).ok_or_else(|| Error::Geoid {
        geoid: geoid.to_string(),
        reason: format!("length {} matches no resolution", geoid.len()),
    })
}

/// Truncate `geoid` to the prefix identifying its enclosing unit at `target`.
/// Coarse geoids cannot be refined.
pub fn rollup_geoid(geoid: &str, target: Resolution) -> Result<String> {
    let own = geoid_resolution(geoid)?;
    if target.geoid_len() > own.geoid_len() {
        return Err(Error::Geoid {
            geoid: geoid.to_string(),
            reason: format!("cannot refine a {own} geoid to {target}"),
        });
    }
    Ok(geoid[..target.geoid_len()].to_string())
}

/// A geographic unit with its boundary and ground truth.
///
/// Units produced by rolling truth up to a coarser resolution carry an empty
/// boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct GeoUnit {
    pub geoid: String,
    pub resolution: Resolution,
    pub boundary: PolygonSet,
    /// Variable name to category counts, in the variable's category order.
    pub demographics: BTreeMap<String, Vec<u64>>,
    pub population: Option<u64>,
}

impl GeoUnit {
    pub fn new(geoid: impl Into<String>, boundary: PolygonSet) -> Result<Self> {
        let geoid = geoid.into();
        let resolution = geoid_resolution(&geoid)?;
        Ok(GeoUnit {
            geoid,
            resolution,
            boundary,
            demographics: BTreeMap::new(),
            population: None,
        })
    }
}
