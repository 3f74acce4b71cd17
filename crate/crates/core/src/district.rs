//! District sources: a synthetic block-grid generator and GeoJSON
//! ingestion/export.
//!
//! The GeoJSON schema is a `FeatureCollection` in planar meters:
//! streets are `LineString` features with `properties.layer = "street"`,
//! buildings are `Polygon` features with `layer = "building"` plus integer
//! `storeys` and `apartments`, green spaces are `Polygon` features with
//! `layer = "green"`. Streets must be pre-noded: two streets may only touch
//! at shared endpoints (within the snap tolerance).

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::geometry::{distance, segment_point_distance, segments_touch};
use crate::{Point, Polygon, Polyline, StreamRng};

/// Default endpoint snap tolerance, meters. Covers GIS digitization noise
/// at district scale.
pub const SNAP_TOLERANCE: f64 = 0.5;

#[derive(Debug, Error)]
pub enum DistrictError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("document is not a FeatureCollection")]
    NotAFeatureCollection,
    #[error("feature {feature}: {message}")]
    BadFeature { feature: String, message: String },
    #[error("feature {feature}: missing property {key}")]
    MissingProperty { feature: String, key: String },
    #[error("streets {a} and {b} cross without a shared intersection node")]
    NotNoded { a: String, b: String },
    #[error("invalid district parameters: {0}")]
    BadParams(String),
}

/// A building as described by the source data, before any damage.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DistrictBuilding {
    pub footprint: Polygon,
    pub storeys: u32,
    pub apartments: u32,
}

/// Raw district: street centerlines, buildings, green spaces.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct District {
    pub streets: Vec<Polyline>,
    pub buildings: Vec<DistrictBuilding>,
    pub green_spaces: Vec<Polygon>,
}

/// Where a district comes from; echoed into run metadata.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistrictSpec {
    GeoJson { path: PathBuf },
    Synthetic(SyntheticParams),
}

impl DistrictSpec {
    pub fn load(&self) -> Result<District, DistrictError> {
        match self {
            DistrictSpec::GeoJson { path } => load_geojson(path),
            DistrictSpec::Synthetic(params) => generate_synthetic(params),
        }
    }
}

/// Parameters for the synthetic block-grid district.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticParams {
    /// Blocks per side; the street grid has (blocks+1)^2 intersections.
    pub blocks: u32,
    pub street_spacing: f64,
    pub buildings_per_block: u32,
    pub storey_range: (u32, u32),
    pub apartment_range: (u32, u32),
    /// Fraction of blocks that become green spaces instead of housing.
    pub green_fraction: f64,
    pub seed: u64,
}

impl Default for SyntheticParams {
    fn default() -> Self {
        SyntheticParams {
            blocks: 10,
            street_spacing: 100.0,
            buildings_per_block: 4,
            storey_range: (1, 5),
            apartment_range: (1, 3),
            green_fraction: 0.1,
            seed: 1,
        }
    }
}

impl SyntheticParams {
    fn validate(&self) -> Result<(), DistrictError> {
        if self.blocks < 2 {
            return Err(DistrictError::BadParams("blocks must be >= 2".into()));
        }
        if !(self.street_spacing > 0.0) {
            return Err(DistrictError::BadParams(
                "street_spacing must be positive".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.green_fraction) {
            return Err(DistrictError::BadParams(
                "green_fraction must be in [0, 1]".into(),
            ));
        }
        if self.storey_range.0 < 1 || self.storey_range.0 > self.storey_range.1 {
            return Err(DistrictError::BadParams("bad storey range".into()));
        }
        if self.apartment_range.0 > self.apartment_range.1 {
            return Err(DistrictError::BadParams("bad apartment range".into()));
        }
        Ok(())
    }
}

/// Deterministic B×B block grid: (B+1)^2 intersections, 2·B·(B+1) streets,
/// buildings inside non-green blocks.
pub fn generate_synthetic(params: &SyntheticParams) -> Result<District, DistrictError> {
    params.validate()?;
    let b = params.blocks as usize;
    let s = params.street_spacing;
    let mut rng = StreamRng::seed_from_u64(params.seed);

    let at = |i: usize, j: usize| Point::new(i as f64 * s, j as f64 * s);
    let mut streets = Vec::with_capacity(2 * b * (b + 1));
    for j in 0..=b {
        for i in 0..b {
            streets.push(Polyline::new(vec![at(i, j), at(i + 1, j)]).unwrap());
        }
    }
    for i in 0..=b {
        for j in 0..b {
            streets.push(Polyline::new(vec![at(i, j), at(i, j + 1)]).unwrap());
        }
    }

    let n_blocks = b * b;
    let mut order: Vec<usize> = (0..n_blocks).collect();
    rand::seq::SliceRandom::shuffle(&mut order[..], &mut rng);
    let n_green = (params.green_fraction * n_blocks as f64).floor() as usize;
    let mut is_green = vec![false; n_blocks];
    for &i in order.iter().take(n_green) {
        is_green[i] = true;
    }

    let mut buildings = Vec::new();
    let mut green_spaces = Vec::new();
    for by in 0..b {
        for bx in 0..b {
            let ox = bx as f64 * s;
            let oy = by as f64 * s;
            if is_green[by * b + bx] {
                let m = 0.15 * s;
                green_spaces.push(
                    Polygon::new(vec![
                        Point::new(ox + m, oy + m),
                        Point::new(ox + s - m, oy + m),
                        Point::new(ox + s - m, oy + s - m),
                        Point::new(ox + m, oy + s - m),
                    ])
                    .unwrap(),
                );
                continue;
            }
            let n = params.buildings_per_block as usize;
            if n == 0 {
                continue;
            }
            let g = (n as f64).sqrt().ceil() as usize;
            let margin = 0.1 * s;
            let cell = (s - 2.0 * margin) / g as f64;
            for slot in 0..n {
                let sx = slot % g;
                let sy = slot / g;
                let jitter_x = rng.gen_range(-0.15..0.15) * cell;
                let jitter_y = rng.gen_range(-0.15..0.15) * cell;
                let cx = ox + margin + (sx as f64 + 0.5) * cell + jitter_x;
                let cy = oy + margin + (sy as f64 + 0.5) * cell + jitter_y;
                let half = 0.25 * cell;
                let footprint = Polygon::new(vec![
                    Point::new(cx - half, cy - half),
                    Point::new(cx + half, cy - half),
                    Point::new(cx + half, cy + half),
                    Point::new(cx - half, cy + half),
                ])
                .unwrap();
                buildings.push(DistrictBuilding {
                    footprint,
                    storeys: rng.gen_range(params.storey_range.0..=params.storey_range.1),
                    apartments: rng.gen_range(params.apartment_range.0..=params.apartment_range.1),
                });
            }
        }
    }

    Ok(District {
        streets,
        buildings,
        green_spaces,
    })
}

fn ring_coords(poly: &Polygon) -> Value {
    let mut ring: Vec<Value> = poly.ring().iter().map(|p| json!([p.x, p.y])).collect();
    ring.push(json!([poly.ring()[0].x, poly.ring()[0].y]));
    json!([ring])
}

/// Serializes a district to the GeoJSON schema documented above.
pub fn export_geojson(district: &District) -> String {
    let mut features = Vec::new();
    for (i, street) in district.streets.iter().enumerate() {
        let coords: Vec<Value> = street.points().iter().map(|p| json!([p.x, p.y])).collect();
        features.push(json!({
            "type": "Feature",
            "id": i,
            "properties": { "layer": "street" },
            "geometry": { "type": "LineString", "coordinates": coords },
        }));
    }
    let base = district.streets.len();
    for (i, b) in district.buildings.iter().enumerate() {
        features.push(json!({
            "type": "Feature",
            "id": base + i,
            "properties": {
                "layer": "building",
                "storeys": b.storeys,
                "apartments": b.apartments,
            },
            "geometry": { "type": "Polygon", "coordinates": ring_coords(&b.footprint) },
        }));
    }
    let base = base + district.buildings.len();
    for (i, g) in district.green_spaces.iter().enumerate() {
        features.push(json!({
            "type": "Feature",
            "id": base + i,
            "properties": { "layer": "green" },
            "geometry": { "type": "Polygon", "coordinates": ring_coords(g) },
        }));
    }
    serde_json::to_string_pretty(&json!({
        "type": "FeatureCollection",
        "features": features,
    }))
    .unwrap()
}

pub fn load_geojson(path: impl AsRef<Path>) -> Result<District, DistrictError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| DistrictError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_geojson(&text)
}

fn feature_label(feature: &Value, index: usize) -> String {
    match feature.get("id") {
        Some(Value::Number(n)) => n.to_string(),
        Some(Value::String(s)) => s.clone(),
        _ => format!("#{index}"),
    }
}

fn coord_pair(v: &Value, label: &str) -> Result<Point, DistrictError> {
    let arr = v.as_array().filter(|a| a.len() >= 2);
    let (x, y) = match arr {
        Some(a) => (a[0].as_f64(), a[1].as_f64()),
        None => (None, None),
    };
    match (x, y) {
        (Some(x), Some(y)) if x.is_finite() && y.is_finite() => Ok(Point::new(x, y)),
        _ => Err(DistrictError::BadFeature {
            feature: label.to_string(),
            message: "coordinate is not a finite [x, y] pair".into(),
        }),
    }
}

fn parse_ring(geometry: &Value, label: &str) -> Result<Polygon, DistrictError> {
    let rings = geometry
        .get("coordinates")
        .and_then(Value::as_array)
        .ok_or_else(|| DistrictError::BadFeature {
            feature: label.to_string(),
            message: "polygon has no coordinates".into(),
        })?;
    if rings.len() != 1 {
        return Err(DistrictError::BadFeature {
            feature: label.to_string(),
            message: "polygons must have exactly one ring (no holes)".into(),
        });
    }
    let raw = rings[0].as_array().ok_or_else(|| DistrictError::BadFeature {
        feature: label.to_string(),
        message: "ring is not an array".into(),
    })?;
    let mut points = Vec::with_capacity(raw.len());
    for v in raw {
        points.push(coord_pair(v, label)?);
    }
    // GeoJSON rings repeat the first point.
    if points.len() >= 2 && points.first() == points.last() {
        points.pop();
    }
    Polygon::new(points).map_err(|e| DistrictError::BadFeature {
        feature: label.to_string(),
        message: e.to_string(),
    })
}

fn required_u32(
    props: &Value,
    key: &str,
    label: &str,
    min: u32,
) -> Result<u32, DistrictError> {
    let v = props
        .get(key)
        .and_then(Value::as_u64)
        .ok_or_else(|| DistrictError::MissingProperty {
            feature: label.to_string(),
            key: key.to_string(),
        })?;
    let v = u32::try_from(v).map_err(|_| DistrictError::BadFeature {
        feature: label.to_string(),
        message: format!("{key} out of range"),
    })?;
    if v < min {
        return Err(DistrictError::BadFeature {
            feature: label.to_string(),
            message: format!("{key} must be >= {min}"),
        });
    }
    Ok(v)
}

pub fn parse_geojson(text: &str) -> Result<District, DistrictError> {
    let doc: Value = serde_json::from_str(text)?;
    if doc.get("type").and_then(Value::as_str) != Some("FeatureCollection") {
        return Err(DistrictError::NotAFeatureCollection);
    }
    let features = doc
        .get("features")
        .and_then(Value::as_array)
        .ok_or(DistrictError::NotAFeatureCollection)?;

    let mut streets = Vec::new();
    let mut street_labels = Vec::new();
    let mut buildings = Vec::new();
    let mut green_spaces = Vec::new();

    for (index, feature) in features.iter().enumerate() {
        let label = feature_label(feature, index);
        let props = feature.get("properties").cloned().unwrap_or(Value::Null);
        let layer = props
            .get("layer")
            .and_then(Value::as_str)
            .ok_or_else(|| DistrictError::MissingProperty {
                feature: label.clone(),
                key: "layer".into(),
            })?
            .to_string();
        let geometry = feature.get("geometry").ok_or_else(|| DistrictError::BadFeature {
            feature: label.clone(),
            message: "feature has no geometry".into(),
        })?;
        let geom_type = geometry.get("type").and_then(Value::as_str).unwrap_or("");
        match layer.as_str() {
            "street" => {
                if geom_type != "LineString" {
                    return Err(DistrictError::BadFeature {
                        feature: label,
                        message: format!("streets must be LineString, got {geom_type}"),
                    });
                }
                let raw = geometry
                    .get("coordinates")
                    .and_then(Value::as_array)
                    .ok_or_else(|| DistrictError::BadFeature {
                        feature: label.clone(),
                        message: "street has no coordinates".into(),
                    })?;
                let mut points = Vec::with_capacity(raw.len());
                for v in raw {
                    points.push(coord_pair(v, &label)?);
                }
                let line = Polyline::new(points).map_err(|e| DistrictError::BadFeature {
                    feature: label.clone(),
                    message: e.to_string(),
                })?;
                streets.push(line);
                street_labels.push(label);
            }
            "building" => {
                if geom_type != "Polygon" {
                    return Err(DistrictError::BadFeature {
                        feature: label,
                        message: format!("buildings must be Polygon, got {geom_type}"),
                    });
                }
                let footprint = parse_ring(geometry, &label)?;
                let storeys = required_u32(&props, "storeys", &label, 1)?;
                let apartments = required_u32(&props, "apartments", &label, 0)?;
                buildings.push(DistrictBuilding {
                    footprint,
                    storeys,
                    apartments,
                });
            }
            "green" => {
                if geom_type != "Polygon" {
                    return Err(DistrictError::BadFeature {
                        feature: label,
                        message: format!("green spaces must be Polygon, got {geom_type}"),
                    });
                }
                green_spaces.push(parse_ring(geometry, &label)?);
            }
            other => {
                return Err(DistrictError::BadFeature {
                    feature: label,
                    message: format!("unknown layer {other:?}"),
                });
            }
        }
    }

    if let Err((a, b)) = validate_noded(&streets, SNAP_TOLERANCE) {
        return Err(DistrictError::NotNoded {
            a: street_labels[a].clone(),
            b: street_labels[b].clone(),
        });
    }

    Ok(District {
        streets,
        buildings,
        green_spaces,
    })
}

/// Checks that streets only touch at shared endpoints (within `tol`).
/// Returns the offending street pair on failure.
pub fn validate_noded(streets: &[Polyline], tol: f64) -> Result<(), (usize, usize)> {
    struct Seg {
        street: usize,
        a: Point,
        b: Point,
        a_is_end: bool,
        b_is_end: bool,
    }
    let mut segs = Vec::new();
    let mut max_len: f64 = tol;
    for (si, street) in streets.iter().enumerate() {
        let pts = street.points();
        for k in 0..pts.len() - 1 {
            max_len = max_len.max(distance(pts[k], pts[k + 1]));
            segs.push(Seg {
                street: si,
                a: pts[k],
                b: pts[k + 1],
                a_is_end: k == 0,
                b_is_end: k + 1 == pts.len() - 1,
            });
        }
    }
    // Bucket segments by bounding box on a grid coarse enough that any
    // touching pair shares a cell.
    let cell = max_len + tol;
    let mut grid: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    let key = |x: f64, y: f64| ((x / cell).floor() as i64, (y / cell).floor() as i64);
    for (i, s) in segs.iter().enumerate() {
        let (x0, y0) = key(s.a.x.min(s.b.x) - tol, s.a.y.min(s.b.y) - tol);
        let (x1, y1) = key(s.a.x.max(s.b.x) + tol, s.a.y.max(s.b.y) + tol);
        for gx in x0..=x1 {
            for gy in y0..=y1 {
                grid.entry((gx, gy)).or_default().push(i);
            }
        }
    }

    let endpoint_contact = |s: &Seg, t: &Seg| -> bool {
        // Contact is fine only if it happens endpoint-to-endpoint.
        for (p, is_end) in [(s.a, s.a_is_end), (s.b, s.b_is_end)] {
            if !is_end {
                continue;
            }
            for (q, q_end) in [(t.a, t.a_is_end), (t.b, t.b_is_end)] {
                if q_end && distance(p, q) <= tol {
                    return true;
                }
            }
        }
        false
    };

    let mut checked: HashMap<(usize, usize), ()> = HashMap::new();
    for ids in grid.values() {
        for (ii, &i) in ids.iter().enumerate() {
            for &j in &ids[ii + 1..] {
                let (i, j) = (i.min(j), i.max(j));
                let (s, t) = (&segs[i], &segs[j]);
                if s.street == t.street {
                    continue;
                }
                if checked.insert((i, j), ()).is_some() {
                    continue;
                }
                let close = segments_touch(s.a, s.b, t.a, t.b)
                    || segment_point_distance(s.a, s.b, t.a) <= tol
                    || segment_point_distance(s.a, s.b, t.b) <= tol
                    || segment_point_distance(t.a, t.b, s.a) <= tol
                    || segment_point_distance(t.a, t.b, s.b) <= tol;
                if close && !endpoint_contact(s, t) {
                    return Err((s.street, t.street));
                }
            }
        }
    }
    Ok(())
}
