use crate::error::{Error, Result};

/// Planar lon/lat coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub lon: f64,
    pub lat: f64,
}

impl Point {
    pub fn new(lon: f64, lat: f64) -> Self {
        Point { lon, lat }
    }
}

/// A closed ring: first vertex equals last, at least four vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct Ring(Vec<Point>);

impl Ring {
    pub fn new(vertices: Vec<Point>) -> Result<Self> {
        if vertices.len() < 4 {
            return Err(Error::Geometry {
                geoid: None,
                reason: format!("ring has {} vertices, need at least 4", vertices.len()),
            });
        }
        if vertices
            .iter()
            .any(|p| !p.lon.is_finite() || !p.lat.is_finite())
        {
            return Err(Error::Geometry {
                geoid: None,
                reason: "non-finite vertex".into(),
            });
        }
        if vertices.first() != vertices.last() {
            return Err(Error::Geometry {
                geoid: None,
                reason: "ring is not closed".into(),
            });
        }
        Ok(Ring(vertices))
    }

    pub fn vertices(&self) -> &[Point] {
        &self.0
    }

    fn edges(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        self.0.windows(2).map(|w| (w[0], w[1]))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Polygon {
    pub outer: Ring,
    pub holes: Vec<Ring>,
}

impl Polygon {
    fn rings(&self) -> impl Iterator<Item = &Ring> {
        std::iter::once(&self.outer).chain(self.holes.iter())
    }

    fn contains(&self, pt: Point) -> bool {
        let mut inside = false;
        for ring in self.rings() {
            for (a, b) in ring.edges() {
                if on_segment(pt, a, b) {
                    return true;
                }
                if (a.lat > pt.lat) != (b.lat > pt.lat) {
                    let x = a.lon + (pt.lat - a.lat) * (b.lon - a.lon) / (b.lat - a.lat);
                    if pt.lon < x {
                        inside = !inside;
                    }
                }
            }
        }
        inside
    }
}

/// One or more polygons making up a unit's boundary.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PolygonSet(pub Vec<Polygon>);

impl PolygonSet {
    pub fn polygons(&self) -> &[Polygon] {
        &self.0
    }

    /// `[min_lon, min_lat, max_lon, max_lat]`, or `None` for an empty set.
    pub fn envelope(&self) -> Option<[f64; 4]> {
        let mut pts = self.0.iter().flat_map(|p| p.outer.vertices().iter());
        let first = pts.next()?;
        let mut env = [first.lon, first.lat, first.lon, first.lat];
        for p in pts {
            env[0] = env[0].min(p.lon);
            env[1] = env[1].min(p.lat);
            env[2] = env[2].max(p.lon);
            env[3] = env[3].max(p.lat);
        }
        Some(env)
    }

    /// Axis-aligned rectangle as a single-polygon set.
    pub fn rectangle(min_lon: f64, min_lat: f64, max_lon: f64, max_lat: f64) -> Self {
        let ring = Ring::new(vec![
            Point::new(min_lon, min_lat),
            Point::new(max_lon, min_lat),
            Point::new(max_lon, max_lat),
            Point::new(min_lon, max_lat),
            Point::new(min_lon, min_lat),
        ])
        .expect("rectangle ring is closed");
        PolygonSet(vec![Polygon {
            outer: ring,
            holes: vec![],
        }])
    }
}

fn on_segment(p: Point, a: Point, b: Point) -> bool {
    let cross = (b.lon - a.lon) * (p.lat - a.lat) - (b.lat - a.lat) * (p.lon - a.lon);
    cross == 0.0
        && p.lon >= a.lon.min(b.lon)
        && p.lon <= a.lon.max(b.lon)
        && p.lat >= a.lat.min(b.lat)
        && p.lat <= a.lat.max(b.lat)
}

/// Even-odd containment. Points on any edge, hole edges included, are inside.
pub fn point_in_polygon(pt: Point, poly: &PolygonSet) -> bool {
    poly.0.iter().any(|p| p.contains(pt))
}
