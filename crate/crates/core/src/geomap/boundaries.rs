//! GeoJSON-style feature collections: one feature per unit with a `geoid`
//! property and a `Polygon` or `MultiPolygon` geometry.

use std::collections::BTreeSet;
use std::path::Path;

use serde_json::{json, Value};

use super::polygon::{Point, Polygon, PolygonSet, Ring};
use super::GeoUnit;
use crate::error::{Error, Result};

fn geometry_error(geoid: Option<&str>, reason: impl Into<String>) -> Error {
    Error::Geometry {
        geoid: geoid.map(str::to_string),
        reason: reason.into(),
    }
}

fn parse_ring(v: &Value, geoid: &str) -> Result<Ring> {
    let coords = v
        .as_array()
        .ok_or_else(|| geometry_error(Some(geoid), "ring is not an array"))?;
    let mut pts = Vec::with_capacity(coords.len());
    for c in coords {
        let pair = c.as_array().filter(|a| a.len() >= 2);
        let (lon, lat) = match pair.map(|a| (a[0].as_f64(), a[1].as_f64())) {
            Some((Some(lon), Some(lat))) => (lon, lat),
            _ => {
                return Err(geometry_error(
                    Some(geoid),
                    "vertex is not a [lon, lat] pair",
                ))
            }
        };
        pts.push(Point::new(lon, lat));
    }
    Ring::new(pts).map_err(|e| match e {
        Error::Geometry { reason, .. } => geometry_error(Some(geoid), reason),
        other => other,
    })
}

fn parse_polygon(v: &Value, geoid: &str) -> Result<Polygon> {
    let rings = v
        .as_array()
        .filter(|r| !r.is_empty())
        .ok_or_else(|| geometry_error(Some(geoid), "polygon has no rings"))?;
    let outer = parse_ring(&rings[0], geoid)?;
    let holes = rings[1..]
        .iter()
        .map(|r| parse_ring(r, geoid))
        .collect::<Result<_>>()?;
    Ok(Polygon { outer, holes })
}

fn parse_geometry(v: &Value, geoid: &str) -> Result<PolygonSet> {
    let coords = &v["coordinates"];
    match v["type"].as_str() {
        Some("Polygon") => Ok(PolygonSet(vec![parse_polygon(coords, geoid)?])),
        Some("MultiPolygon") => coords
            .as_array()
            .ok_or_else(|| geometry_error(Some(geoid), "multipolygon coordinates"))?
            .iter()
            .map(|p| parse_polygon(p, geoid))
            .collect::<Result<Vec<_>>>()
            .map(PolygonSet),
        other => Err(geometry_error(
            Some(geoid),
            format!("unsupported geometry type {other:?}"),
        )),
    }
}

pub fn parse_boundaries(text: &str) -> Result<Vec<GeoUnit>> {
    let doc: Value = serde_json::from_str(text)?;
    let features = doc["features"]
        .as_array()
        .ok_or_else(|| geometry_error(None, "missing features array"))?;
    let mut seen = BTreeSet::new();
    let mut units = Vec::with_capacity(features.len());
    for (i, f) in features.iter().enumerate() {
        let geoid = match &f["properties"]["geoid"] {
            Value::String(s) => s.clone(),
            _ => {
                return Err(geometry_error(
                    None,
                    format!("feature {i} has no string geoid"),
                ))
            }
        };
        if !seen.insert(geoid.clone()) {
            return Err(Error::DuplicateGeoid(geoid));
        }
        let boundary = parse_geometry(&f["geometry"], &geoid)?;
        units.push(GeoUnit::new(geoid, boundary)?);
    }
    Ok(units)
}

pub fn load_boundaries(path: &Path) -> Result<Vec<GeoUnit>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_boundaries(&text)
}

fn ring_json(r: &Ring) -> Value {
    Value::Array(r.vertices().iter().map(|p| json!([p.lon, p.lat])).collect())
}

/// Serialize units as a feature collection readable by [`parse_boundaries`].
pub fn write_boundaries(units: &[GeoUnit]) -> String {
    let features: Vec<Value> = units
        .iter()
        .map(|u| {
            let polys: Vec<Value> = u
                .boundary
                .polygons()
                .iter()
                .map(|p| {
                    let mut rings = vec![ring_json(&p.outer)];
                    rings.extend(p.holes.iter().map(ring_json));
                    Value::Array(rings)
                })
                .collect();
            let geometry = if polys.len() == 1 {
                json!({"type": "Polygon", "coordinates": polys[0]})
            } else {
                json!({"type": "MultiPolygon", "coordinates": polys})
            };
            json!({"type": "Feature", "properties": {"geoid": u.geoid}, "geometry": geometry})
        })
        .collect();
    serde_json::to_string(&json!({"type": "FeatureCollection", "features": features}))
        .expect("boundary serialization cannot fail")
}

#[cfg(test)]
mod tests {
    use super::*;

    const SQUARE: &str = r#"{"type":"FeatureCollection","features":[
        {"type":"Feature","properties":{"geoid":"150000000000000"},
         "geometry":{"type":"Polygon","coordinates":[[[0,0],[1,0],[1,1],[0,1],[0,0]]]}}]}"#;

    #[test]
    fn single_square() {
        let units = parse_boundaries(SQUARE).unwrap();
        assert_eq!(units.len(), 1);
        assert_eq!(units[0].geoid, "150000000000000");
        assert_eq!(units[0].resolution, super::super::Resolution::Block);
    }

    #[test]
    fn duplicate_geoid_rejected() {
        let dup = r#"{"features":[
            {"properties":{"geoid":"15000"},"geometry":{"type":"Polygon","coordinates":[[[0,0],[1,0],[1,1],[0,0]]]}},
            {"properties":{"geoid":"15000"},"geometry":{"type":"Polygon","coordinates":[[[0,0],[1,0],[1,1],[0,0]]]}}]}"#;
        assert!(matches!(parse_boundaries(dup), Err(Error::DuplicateGeoid(g)) if g == "15000"));
    }

    #[test]
    fn hole_preserved_in_order() {
        let text = r#"{"features":[{"properties":{"geoid":"15000"},"geometry":{"type":"Polygon","coordinates":[
            [[0,0],[1,0],[1,1],[0,1],[0,0]],
            [[0.25,0.25],[0.25,0.75],[0.75,0.75],[0.75,0.25],[0.25,0.25]]]}}]}"#;
        let units = parse_boundaries(text).unwrap();
        let poly = &units[0].boundary.polygons()[0];
        assert_eq!(poly.holes.len(), 1);
        assert_eq!(poly.holes[0].vertices()[1], Point::new(0.25, 0.75));
        assert_eq!(poly.outer.vertices()[2], Point::new(1.0, 1.0));
    }

    #[test]
    fn unclosed_ring_and_missing_geoid() {
        let open = r#"{"features":[{"properties":{"geoid":"15000"},"geometry":{"type":"Polygon","coordinates":[[[0,0],[1,0],[1,1],[0,1]]]}}]}"#;
        assert!(matches!(
            parse_boundaries(open),
            Err(Error::Geometry { .. })
        ));
        let nogeoid = r#"{"features":[{"properties":{},"geometry":{"type":"Polygon","coordinates":[[[0,0],[1,0],[1,1],[0,0]]]}}]}"#;
        assert!(matches!(
            parse_boundaries(nogeoid),
            Err(Error::Geometry { .. })
        ));
    }

    #[test]
    fn write_then_parse() {
        let units = parse_boundaries(SQUARE).unwrap();
        assert_eq!(parse_boundaries(&write_boundaries(&units)).unwrap(), units);
    }
}
