//! File formats: JSON floorplan/prediction/polygon documents, binary PGM
//! density maps with a text sidecar, ASCII `x y z` point clouds and SVG.
//!
//! Edge records are `[x1, y1, x2, y2, v]` where `v` is the validity flag for
//! floorplans and the confidence for predictions. Trailing padding tokens
//! `(0,0)-(0,0)` and trailing mock rooms are omitted on save and restored on
//! load, so canonical plans round-trip exactly.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use base64::Engine as _;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::floorplan::{DirectedEdge, EdgeToken, Floorplan, ModelCapacity, Point2, RoomEdgeSequence};
use crate::matching::{PredictedRoom, PredictedToken, PredictionSet};
use crate::polygonize::PolygonVertices;
use crate::projection::{Bounds, DensityMap, PointCloud};

pub const SCHEMA_VERSION: u32 = 1;
const SCENE_KEY: &str = "scene_id";

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("cannot access {path}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("schema violation at {location}: {reason}")]
    Schema { location: String, reason: String },
    #[error("{what} count {count} exceeds capacity {capacity}")]
    CapacityExceeded { what: &'static str, count: usize, capacity: usize },
    #[error("not a binary PGM (P5) file")]
    BadMagic,
    #[error(transparent)]
    Core(#[from] crate::error::Error),
}

impl FormatError {
    /// Short machine-readable tag.
    pub fn kind(&self) -> &'static str {
        match self {
            FormatError::Io { .. } => "IoError",
            FormatError::Parse { .. } => "ParseError",
            FormatError::Schema { .. } => "SchemaViolation",
            FormatError::CapacityExceeded { .. } => "CapacityExceeded",
            FormatError::BadMagic => "BadMagic",
            FormatError::Core(_) => "InvalidInput",
        }
    }

    fn schema(location: impl Into<String>, reason: impl Into<String>) -> Self {
        FormatError::Schema { location: location.into(), reason: reason.into() }
    }
}

pub type FormatResult<T> = std::result::Result<T, FormatError>;

fn read_to_string(path: &Path) -> FormatResult<String> {
    fs::read_to_string(path).map_err(|source| FormatError::Io { path: path.to_owned(), source })
}

fn write_bytes(path: &Path, bytes: &[u8]) -> FormatResult<()> {
    fs::write(path, bytes).map_err(|source| FormatError::Io { path: path.to_owned(), source })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DocumentKind {
    Floorplan,
    Prediction,
    Polygons,
}

/// On-disk edge document shared by floorplans and predictions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeDocument {
    pub schema_version: u32,
    pub kind: DocumentKind,
    pub capacity: [usize; 2],
    pub rooms: Vec<Vec<[f64; 5]>>,
    #[serde(default)]
    pub metadata: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolygonDocument {
    pub schema_version: u32,
    pub kind: DocumentKind,
    pub polygons: Vec<Vec<[f64; 2]>>,
    #[serde(default)]
    pub metadata: BTreeMap<String, String>,
}

/// Peeks at the `kind` field of a JSON document.
pub fn document_kind(text: &str) -> FormatResult<DocumentKind> {
    #[derive(Deserialize)]
    struct Probe {
        kind: DocumentKind,
    }
    serde_json::from_str::<Probe>(text).map(|p| p.kind).map_err(parse_error)
}

fn parse_error(e: serde_json::Error) -> FormatError {
    FormatError::Parse { line: e.line(), column: e.column(), message: e.to_string() }
}

fn to_json<T: Serialize>(doc: &T) -> String {
    let mut s = serde_json::to_string_pretty(doc).expect("documents serialize");
    s.push('\n');
    s
}

fn check_version(v: u32) -> FormatResult<()> {
    if v != SCHEMA_VERSION {
        return Err(FormatError::schema("schema_version", format!("unsupported version {v}")));
    }
    Ok(())
}

fn check_coord(v: f64, location: impl FnOnce() -> String) -> FormatResult<()> {
    if !(0.0..=1.0).contains(&v) {
        return Err(FormatError::schema(location(), format!("OutOfRange: coordinate {v} not in [0,1]")));
    }
    Ok(())
}

impl EdgeDocument {
    pub fn parse(text: &str) -> FormatResult<Self> {
        let doc: EdgeDocument = serde_json::from_str(text).map_err(parse_error)?;
        doc.check()?;
        Ok(doc)
    }

    fn capacity(&self) -> FormatResult<ModelCapacity> {
        Ok(ModelCapacity::new(self.capacity[0], self.capacity[1])?)
    }

    fn check(&self) -> FormatResult<()> {
        check_version(self.schema_version)?;
        if self.kind == DocumentKind::Polygons {
            return Err(FormatError::schema("kind", "expected an edge document"));
        }
        let cap = self.capacity()?;
        if self.rooms.len() > cap.rooms {
            return Err(FormatError::CapacityExceeded { what: "room", count: self.rooms.len(), capacity: cap.rooms });
        }
        for (r, room) in self.rooms.iter().enumerate() {
            if room.len() > cap.edges {
                return Err(FormatError::CapacityExceeded { what: "edge", count: room.len(), capacity: cap.edges });
            }
            for (e, rec) in room.iter().enumerate() {
                for (f, &v) in rec[..4].iter().enumerate() {
                    check_coord(v, || format!("rooms[{r}][{e}][{f}]"))?;
                }
                let flag = rec[4];
                let ok = match self.kind {
                    DocumentKind::Floorplan => flag == 0.0 || flag == 1.0,
                    _ => (0.0..=1.0).contains(&flag),
                };
                if !ok {
                    return Err(FormatError::schema(format!("rooms[{r}][{e}][4]"), format!("invalid flag {flag}")));
                }
            }
        }
        Ok(())
    }

    fn record_rooms<I, J>(rooms: I) -> Vec<Vec<[f64; 5]>>
    where
        I: IntoIterator<Item = J>,
        J: IntoIterator<Item = [f64; 5]>,
    {
        let mut out: Vec<Vec<[f64; 5]>> = rooms
            .into_iter()
            .map(|room| {
                let mut recs: Vec<[f64; 5]> = room.into_iter().collect();
                while recs.last() == Some(&[0.0; 5]) {
                    recs.pop();
                }
                recs
            })
            .collect();
        while out.last().is_some_and(Vec::is_empty) {
            out.pop();
        }
        out
    }

    pub fn from_floorplan(fp: &Floorplan<f64>) -> Self {
        let rooms = Self::record_rooms(fp.rooms().iter().map(|r| {
            r.tokens().iter().map(|t| [t.edge.p1.x, t.edge.p1.y, t.edge.p2.x, t.edge.p2.y, t.label()]).collect::<Vec<_>>()
        }));
        let mut metadata = BTreeMap::new();
        if let Some(id) = &fp.scene_id {
            metadata.insert(SCENE_KEY.to_string(), id.clone());
        }
        let cap = fp.capacity();
        EdgeDocument { schema_version: SCHEMA_VERSION, kind: DocumentKind::Floorplan, capacity: [cap.rooms, cap.edges], rooms, metadata }
    }

    pub fn from_predictions(set: &PredictionSet<f64>) -> Self {
        let rooms = Self::record_rooms(set.rooms().iter().map(|r| {
            r.tokens.iter().map(|t| [t.edge.p1.x, t.edge.p1.y, t.edge.p2.x, t.edge.p2.y, t.confidence]).collect::<Vec<_>>()
        }));
        let cap = set.capacity();
        EdgeDocument {
            schema_version: SCHEMA_VERSION,
            kind: DocumentKind::Prediction,
            capacity: [cap.rooms, cap.edges],
            rooms,
            metadata: BTreeMap::new(),
        }
    }

    fn edge(rec: &[f64; 5]) -> DirectedEdge<f64> {
        DirectedEdge::new(Point2::new(rec[0], rec[1]), Point2::new(rec[2], rec[3]))
    }

    pub fn to_floorplan(&self) -> FormatResult<Floorplan<f64>> {
        self.check()?;
        let cap = self.capacity()?;
        let mut rooms = Vec::with_capacity(self.rooms.len());
        for (r, room) in self.rooms.iter().enumerate() {
            let mut tokens = Vec::with_capacity(cap.edges);
            for (e, rec) in room.iter().enumerate() {
                if rec[4] != 0.0 && rec[4] != 1.0 {
                    return Err(FormatError::schema(format!("rooms[{r}][{e}][4]"), "floorplan validity must be 0 or 1"));
                }
                tokens.push(EdgeToken { edge: Self::edge(rec), valid: rec[4] == 1.0 });
            }
            tokens.resize(cap.edges, EdgeToken::padding());
            rooms.push(RoomEdgeSequence::from_tokens(tokens, cap)?);
        }
        let mut fp = Floorplan::new(rooms, cap)?;
        fp.scene_id = self.metadata.get(SCENE_KEY).cloned();
        Ok(fp)
    }

    pub fn to_predictions(&self) -> FormatResult<PredictionSet<f64>> {
        self.check()?;
        let cap = self.capacity()?;
        let mut rooms: Vec<PredictedRoom<f64>> = self
            .rooms
            .iter()
            .map(|room| {
                let mut tokens: Vec<_> =
                    room.iter().map(|rec| PredictedToken { confidence: rec[4], edge: Self::edge(rec) }).collect();
                tokens.resize(cap.edges, PredictedToken::default());
                PredictedRoom { tokens }
            })
            .collect();
        rooms.resize_with(cap.rooms, || PredictedRoom { tokens: vec![PredictedToken::default(); cap.edges] });
        Ok(PredictionSet::new(rooms, cap)?)
    }
}

impl PolygonDocument {
    pub fn parse(text: &str) -> FormatResult<Self> {
        let doc: PolygonDocument = serde_json::from_str(text).map_err(parse_error)?;
        check_version(doc.schema_version)?;
        if doc.kind != DocumentKind::Polygons {
            return Err(FormatError::schema("kind", "expected a polygons document"));
        }
        Ok(doc)
    }

    pub fn from_polygons(polys: &[PolygonVertices<f64>]) -> Self {
        PolygonDocument {
            schema_version: SCHEMA_VERSION,
            kind: DocumentKind::Polygons,
            polygons: polys.iter().map(|p| p.vertices().iter().map(|v| [v.x, v.y]).collect()).collect(),
            metadata: BTreeMap::new(),
        }
    }

    pub fn to_polygons(&self) -> FormatResult<Vec<PolygonVertices<f64>>> {
        self.polygons
            .iter()
            .enumerate()
            .map(|(i, poly)| {
                for (j, v) in poly.iter().enumerate() {
                    check_coord(v[0], || format!("polygons[{i}][{j}][0]"))?;
                    check_coord(v[1], || format!("polygons[{i}][{j}][1]"))?;
                }
                PolygonVertices::new(poly.iter().map(|v| Point2::new(v[0], v[1])).collect())
                    .map_err(|e| FormatError::schema(format!("polygons[{i}]"), e.to_string()))
            })
            .collect()
    }
}

pub fn load_floorplan(path: &Path) -> FormatResult<Floorplan<f64>> {
    EdgeDocument::parse(&read_to_string(path)?)?.to_floorplan()
}

pub fn save_floorplan(fp: &Floorplan<f64>, path: &Path) -> FormatResult<()> {
    write_bytes(path, to_json(&EdgeDocument::from_floorplan(fp)).as_bytes())
}

/// Loads predictions; floorplan documents are accepted with 0/1 confidences.
pub fn load_predictions(path: &Path) -> FormatResult<PredictionSet<f64>> {
    EdgeDocument::parse(&read_to_string(path)?)?.to_predictions()
}

pub fn save_predictions(set: &PredictionSet<f64>, metadata: BTreeMap<String, String>, path: &Path) -> FormatResult<()> {
    let mut doc = EdgeDocument::from_predictions(set);
    doc.metadata = metadata;
    write_bytes(path, to_json(&doc).as_bytes())
}

pub fn load_polygons(path: &Path) -> FormatResult<Vec<PolygonVertices<f64>>> {
    PolygonDocument::parse(&read_to_string(path)?)?.to_polygons()
}

pub fn save_polygons(polys: &[PolygonVertices<f64>], metadata: BTreeMap<String, String>, path: &Path) -> FormatResult<()> {
    let mut doc = PolygonDocument::from_polygons(polys);
    doc.metadata = metadata;
    write_bytes(path, to_json(&doc).as_bytes())
}

/// Parses whitespace-separated `x y z` lines; `#` starts a comment line.
pub fn parse_xyz(text: &str) -> FormatResult<PointCloud<f64>> {
    let mut points = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(FormatError::Parse {
                line: i + 1,
                column: 1,
                message: format!("expected 3 fields, found {}", fields.len()),
            });
        }
        let mut xyz = [0.0; 3];
        for (k, f) in fields.iter().enumerate() {
            xyz[k] = f.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| FormatError::Parse {
                line: i + 1,
                column: k + 1,
                message: format!("invalid number {f:?}"),
            })?;
        }
        points.push(xyz);
    }
    Ok(PointCloud::new(points))
}

pub fn load_xyz(path: &Path) -> FormatResult<PointCloud<f64>> {
    parse_xyz(&read_to_string(path)?)
}

fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta");
    PathBuf::from(s)
}

fn quantize(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// Binary PGM bytes; row 0 of the map is written first.
pub fn encode_pgm(map: &DensityMap<f64>) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", map.width, map.height).into_bytes();
    out.extend(map.values.iter().map(|&v| quantize(v)));
    out
}

fn encode_sidecar(map: &DensityMap<f64>) -> String {
    let b = &map.bounds;
    format!("bounds {} {} {} {}\nmax_count {}\n", b.min_x, b.min_y, b.max_x, b.max_y, map.max_count)
}

/// Writes `path` (P5, maxval 255) and `path.meta` with bounds and max count.
pub fn write_density_pgm(map: &DensityMap<f64>, path: &Path) -> FormatResult<()> {
    write_bytes(path, &encode_pgm(map))?;
    write_bytes(&sidecar_path(path), encode_sidecar(map).as_bytes())
}

/// Decodes P5 bytes into values `byte / maxval` with unit bounds.
pub fn decode_pgm(bytes: &[u8]) -> FormatResult<DensityMap<f64>> {
    if bytes.len() < 2 || &bytes[..2] != b"P5" {
        return Err(FormatError::BadMagic);
    }
    let mut pos = 2;
    let mut header = [0usize; 3];
    for slot in header.iter_mut() {
        loop {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
            } else {
                break;
            }
        }
        let start = pos;
        while pos < bytes.len() && bytes[pos].is_ascii_digit() {
            pos += 1;
        }
        *slot = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or(FormatError::Parse { line: 1, column: start + 1, message: "bad PGM header".into() })?;
    }
    // Exactly one whitespace byte separates the header from the raster.
    pos += 1;
    let [width, height, maxval] = header;
    if maxval == 0 || maxval > 255 {
        return Err(FormatError::Parse { line: 1, column: pos, message: format!("unsupported maxval {maxval}") });
    }
    let data = bytes.get(pos..pos + width * height).ok_or(FormatError::Parse {
        line: 1,
        column: pos,
        message: "truncated PGM raster".into(),
    })?;
    let values = data.iter().map(|&b| b as f64 / maxval as f64).collect();
    Ok(DensityMap { width, height, values, bounds: Bounds::unit(), max_count: 0 })
}

pub fn read_density_pgm(path: &Path) -> FormatResult<DensityMap<f64>> {
    let bytes = fs::read(path).map_err(|source| FormatError::Io { path: path.to_owned(), source })?;
    let mut map = decode_pgm(&bytes)?;
    let meta = sidecar_path(path);
    if meta.exists() {
        let text = read_to_string(&meta)?;
        for (i, line) in text.lines().enumerate() {
            let fields: Vec<&str> = line.split_whitespace().collect();
            let bad = || FormatError::Parse { line: i + 1, column: 1, message: format!("bad sidecar line {line:?}") };
            match fields.as_slice() {
                ["bounds", rest @ ..] if rest.len() == 4 => {
                    let v: Vec<f64> = rest.iter().map(|s| s.parse()).collect::<Result<_, _>>().map_err(|_| bad())?;
                    map.bounds = Bounds::new(v[0], v[1], v[2], v[3])?;
                }
                ["max_count", n] => map.max_count = n.parse().map_err(|_| bad())?,
                [] => {}
                _ => return Err(bad()),
            }
        }
    }
    Ok(map)
}

const PALETTE: [&str; 10] =
    ["#e6194b", "#3cb44b", "#4363d8", "#f58231", "#911eb4", "#42d4f4", "#f032e6", "#9a6324", "#469990", "#800000"];

fn density_png(map: &DensityMap<f64>) -> Vec<u8> {
    let mut buf = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut buf, map.width as u32, map.height as u32);
        enc.set_color(png::ColorType::Grayscale);
        enc.set_depth(png::BitDepth::Eight);
        let mut writer = enc.write_header().expect("in-memory PNG header");
        let data: Vec<u8> = map.values.iter().map(|&v| quantize(v)).collect();
        writer.write_image_data(&data).expect("in-memory PNG data");
    }
    buf
}

/// Renders polygons (normalized coordinates) over an optional density map.
/// The canvas is the map size, or `default_size` square without one.
pub fn render_svg(polys: &[PolygonVertices<f64>], background: Option<&DensityMap<f64>>, default_size: usize) -> String {
    let (w, h) = background.map_or((default_size, default_size), |m| (m.width, m.height));
    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" xmlns:xlink="http://www.w3.org/1999/xlink" version="1.1" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    );
    match background {
        Some(map) => {
            let b64 = base64::engine::general_purpose::STANDARD.encode(density_png(map));
            let _ = writeln!(
                s,
                r#"<image x="0" y="0" width="{w}" height="{h}" image-rendering="pixelated" xlink:href="data:image/png;base64,{b64}"/>"#
            );
        }
        None => {
            let _ = writeln!(s, r#"<rect x="0" y="0" width="{w}" height="{h}" fill="white"/>"#);
        }
    }
    for (i, poly) in polys.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let mut d = String::new();
        for (j, v) in poly.vertices().iter().enumerate() {
            let _ = write!(d, "{}{:.3} {:.3} ", if j == 0 { "M" } else { "L" }, v.x * w as f64, v.y * h as f64);
        }
        d.push('Z');
        let _ = writeln!(
            s,
            r#"<path d="{d}" fill="{color}" fill-opacity="0.25" stroke="{color}" stroke-width="1.5" stroke-linejoin="round"/>"#
        );
    }
    s.push_str("</svg>\n");
    s
}

pub fn write_svg(polys: &[PolygonVertices<f64>], background: Option<&DensityMap<f64>>, default_size: usize, path: &Path) -> FormatResult<()> {
    write_bytes(path, render_svg(polys, background, default_size).as_bytes())
}
