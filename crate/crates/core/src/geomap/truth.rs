//! Ground-truth demographics CSV.
//!
//! ```text
//! geoid,variable,category,count
//! 150010001000001,gender,male,40
//! 150010001000001,population,,83
//! ```

use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

use super::{geoid_resolution, rollup_geoid, GeoUnit, PolygonSet, Resolution};
use crate::error::{Error, Result};

pub const POPULATION: &str = "population";

/// Fixed category order for the variables with a known coding.
pub fn canonical_categories(variable: &str) -> Option<&'static [&'static str]> {
    match variable {
        "gender" => Some(&["male", "female"]),
        "race" => Some(&["white", "black", "asian", "hispanic", "other"]),
        _ => None,
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
struct UnitRow {
    population: Option<u64>,
    counts: BTreeMap<String, BTreeMap<String, u64>>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DemographicTable {
    categories: BTreeMap<String, Vec<String>>,
    units: BTreeMap<String, UnitRow>,
}

impl DemographicTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(
        &mut self,
        geoid: &str,
        variable: &str,
        category: &str,
        count: u64,
    ) -> Result<()> {
        geoid_resolution(geoid)?;
        let row = self.units.entry(geoid.to_string()).or_default();
        if variable == POPULATION {
            row.population = Some(count);
            return Ok(());
        }
        let cats = self.categories.entry(variable.to_string()).or_default();
        if let Some(canon) = canonical_categories(variable) {
            if !canon.contains(&category) {
                return Err(Error::InvalidTruth {
                    geoid: geoid.to_string(),
                    reason: format!("unknown {variable} category {category:?}"),
                });
            }
            if cats.is_empty() {
                cats.extend(canon.iter().map(|c| c.to_string()));
            }
        } else if !cats.iter().any(|c| c == category) {
            cats.push(category.to_string());
        }
        row.counts
            .entry(variable.to_string())
            .or_default()
            .insert(category.to_string(), count);
        Ok(())
    }

    pub fn parse<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .flexible(false)
            .from_reader(reader);
        let mut table = DemographicTable::new();
        for rec in rdr.records() {
            let rec = rec?;
            let line = rec.position().map_or(0, |p| p.line() as usize);
            if rec.len() != 4 {
                return Err(Error::parse(line, "expected geoid,variable,category,count"));
            }
            let count: u64 = rec[3]
                .trim()
                .parse()
                .map_err(|_| Error::parse(line, format!("bad count {:?}", &rec[3])))?;
            table.insert(rec[0].trim(), rec[1].trim(), rec[2].trim(), count)?;
        }
        table.validate()?;
        Ok(table)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::parse(std::io::BufReader::new(f))
    }

    /// Per variable, category counts may not exceed the population.
    pub fn validate(&self) -> Result<()> {
        for (geoid, row) in &self.units {
            let Some(pop) = row.population else { continue };
            for (var, counts) in &row.counts {
                let total: u64 = counts.values().sum();
                if total > pop {
                    return Err(Error::InvalidTruth {
                        geoid: geoid.clone(),
                        reason: format!("{var} categories sum to {total} > population {pop}"),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("geoid,variable,category,count\n");
        for (geoid, row) in &self.units {
            for (var, counts) in &row.counts {
                for cat in &self.categories[var] {
                    if let Some(c) = counts.get(cat) {
                        out.push_str(&format!("{geoid},{var},{cat},{c}\n"));
                    }
                }
            }
            if let Some(p) = row.population {
                out.push_str(&format!("{geoid},{POPULATION},,{p}\n"));
            }
        }
        out
    }

    pub fn geoids(&self) -> impl Iterator<Item = &str> {
        self.units.keys().map(String::as_str)
    }

    pub fn variables(&self) -> impl Iterator<Item = &str> {
        self.categories.keys().map(String::as_str)
    }

    pub fn categories(&self, variable: &str) -> Result<&[String]> {
        self.categories
            .get(variable)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::UnknownVariable(variable.to_string()))
    }

    pub fn population(&self, geoid: &str) -> Option<u64> {
        self.units.get(geoid).and_then(|r| r.population)
    }

    /// Counts in category order. Categories absent for a unit that reports
    /// the variable count as zero.
    pub fn counts(&self, geoid: &str, variable: &str) -> Result<Vec<u64>> {
        let cats = self.categories(variable)?;
        let counts = self
            .units
            .get(geoid)
            .and_then(|r| r.counts.get(variable))
            .ok_or_else(|| Error::MissingTruth {
                geoid: geoid.to_string(),
                what: variable.to_string(),
            })?;
        Ok(cats
            .iter()
            .map(|c| counts.get(c).copied().unwrap_or(0))
            .collect())
    }

    /// Sum every unit into its enclosing unit at `target`.
    pub fn rollup(&self, target: Resolution) -> Result<Self> {
        let mut out = DemographicTable {
            categories: self.categories.clone(),
            units: BTreeMap::new(),
        };
        for (geoid, row) in &self.units {
            let parent = rollup_geoid(geoid, target)?;
            let dst = out.units.entry(parent).or_default();
            if let Some(p) = row.population {
                *dst.population.get_or_insert(0) += p;
            }
            for (var, counts) in &row.counts {
                let d = dst.counts.entry(var.clone()).or_default();
                for (cat, c) in counts {
                    *d.entry(cat.clone()).or_insert(0) += c;
                }
            }
        }
        Ok(out)
    }

    /// A boundary-less unit carrying every variable recorded for `geoid`.
    pub fn geo_unit(&self, geoid: &str) -> Result<GeoUnit> {
        let mut unit = GeoUnit::new(geoid, PolygonSet::default())?;
        let row = self.units.get(geoid).ok_or_else(|| Error::MissingTruth {
            geoid: geoid.to_string(),
            what: "demographics".into(),
        })?;
        unit.population = row.population;
        for var in row.counts.keys() {
            unit.demographics
                .insert(var.clone(), self.counts(geoid, var)?);
        }
        Ok(unit)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const CSV: &str = "geoid,variable,category,count\n\
        150010001001001,gender,female,60\n\
        150010001001001,gender,male,40\n\
        150010001001001,population,,100\n\
        150010001001002,gender,male,5\n\
        150010001001002,population,,12\n";

    #[test]
    fn canonical_order_regardless_of_row_order() {
        let t = DemographicTable::parse(CSV.as_bytes()).unwrap();
        assert_eq!(t.categories("gender").unwrap(), ["male", "female"]);
        assert_eq!(t.counts("150010001001001", "gender").unwrap(), vec![40, 60]);
        assert_eq!(t.counts("150010001001002", "gender").unwrap(), vec![5, 0]);
        assert_eq!(t.population("150010001001001"), Some(100));
    }

    #[test]
    fn rollup_sums() {
        let t = DemographicTable::parse(CSV.as_bytes()).unwrap();
        let bg = t.rollup(Resolution::BlockGroup).unwrap();
        assert_eq!(bg.geoids().collect::<Vec<_>>(), vec!["150010001001"]);
        assert_eq!(bg.counts("150010001001", "gender").unwrap(), vec![45, 60]);
        assert_eq!(bg.population("150010001001"), Some(112));
    }

    #[test]
    fn over_population_rejected() {
        let bad = "geoid,variable,category,count\n15001,gender,male,10\n15001,population,,5\n";
        assert!(matches!(
            DemographicTable::parse(bad.as_bytes()),
            Err(Error::InvalidTruth { .. })
        ));
    }

    #[test]
    fn csv_round_trip() {
        let t = DemographicTable::parse(CSV.as_bytes()).unwrap();
        assert_eq!(DemographicTable::parse(t.to_csv().as_bytes()).unwrap(), t);
    }

    #[test]
    fn geo_unit_carries_truth() {
        let t = DemographicTable::parse(CSV.as_bytes()).unwrap();
        let u = t.geo_unit("150010001001001").unwrap();
        assert_eq!(u.demographics["gender"], vec![40, 60]);
        assert_eq!(u.population, Some(100));
    }
}
