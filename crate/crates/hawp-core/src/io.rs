//! File formats: wireframe/homography/proposal/MLP JSON, the little-endian
//! binary plane containers (`HATF` fields, `JUNC` junction maps, `EDGE`
//! maps), PGM images, and dataset manifests.
//!
//! All writers are deterministic: fixed field order, no timestamps, and
//! platform-independent little-endian binaries.

use crate::binding::Proposal;
use crate::geometry::{Homography, Junction, LineSegment, Point2, Wireframe};
use crate::hatfield::HatField;
use crate::junctions::JunctionMaps;
use crate::loi::MlpWeights;
use crate::ssl::EdgeMap;
use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use serde::{Deserialize, Serialize};
use std::fs;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {msg}", path.display())]
    Format { path: PathBuf, msg: String },
}

fn io_err(path: &Path, source: std::io::Error) -> IoError {
    IoError::Io { path: path.to_path_buf(), source }
}

fn fmt_err(path: &Path, msg: impl Into<String>) -> IoError {
    IoError::Format { path: path.to_path_buf(), msg: msg.into() }
}

pub fn create_dir_all(path: &Path) -> Result<(), IoError> {
    fs::create_dir_all(path).map_err(|e| io_err(path, e))
}

/// Serializes any value as pretty-printed JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), IoError> {
    let mut out = serde_json::to_vec_pretty(value)
        .map_err(|e| fmt_err(path, e.to_string()))?;
    out.push(b'\n');
    fs::write(path, out).map_err(|e| io_err(path, e))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, IoError> {
    let data = fs::read(path).map_err(|e| io_err(path, e))?;
    serde_json::from_slice(&data).map_err(|e| fmt_err(path, e.to_string()))
}

// ---------------------------------------------------------------------------
// Wireframe JSON

#[derive(Serialize, Deserialize)]
struct WireframeJson {
    width: u32,
    height: u32,
    #[serde(default)]
    segments: Vec<Vec<f64>>,
    #[serde(default)]
    junctions: Vec<Vec<f64>>,
}

pub fn write_wireframe(path: &Path, wf: &Wireframe) -> Result<(), IoError> {
    let json = WireframeJson {
        width: wf.width,
        height: wf.height,
        segments: wf
            .segments
            .iter()
            .map(|s| vec![s.x1.x, s.x1.y, s.x2.x, s.x2.y, s.score])
            .collect(),
        junctions: wf
            .junctions
            .iter()
            .map(|j| vec![j.p.x, j.p.y, j.score])
            .collect(),
    };
    write_json(path, &json)
}

pub fn read_wireframe(path: &Path) -> Result<Wireframe, IoError> {
    let json: WireframeJson = read_json(path)?;
    let mut wf = Wireframe::new(json.width, json.height);
    for (i, s) in json.segments.iter().enumerate() {
        // The trailing score is optional and defaults to 1.
        let score = match s.len() {
            4 => 1.0,
            5 => s[4],
            n => {
                return Err(fmt_err(
                    path,
                    format!("segment {i} has {n} values, expected 4 or 5"),
                ))
            }
        };
        wf.segments.push(LineSegment::with_score(
            Point2::new(s[0], s[1]),
            Point2::new(s[2], s[3]),
            score,
        ));
    }
    for (i, j) in json.junctions.iter().enumerate() {
        let score = match j.len() {
            2 => 1.0,
            3 => j[2],
            n => {
                return Err(fmt_err(
                    path,
                    format!("junction {i} has {n} values, expected 2 or 3"),
                ))
            }
        };
        wf.junctions.push(Junction::new(Point2::new(j[0], j[1]), score));
    }
    Ok(wf)
}

/// Reads every `*.json` wireframe under `dir`, sorted by file name; the
/// returned names are the file stems used for pairing predictions with
/// ground truth.
pub fn read_wireframe_dir(dir: &Path) -> Result<Vec<(String, Wireframe)>, IoError> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| io_err(dir, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|ext| ext == "json"))
        .collect();
    paths.sort();
    let mut out = Vec::with_capacity(paths.len());
    for p in paths {
        let name = p
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        out.push((name, read_wireframe(&p)?));
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Homography JSON

#[derive(Serialize, Deserialize)]
struct HomographyJson {
    matrix: [[f64; 3]; 3],
}

pub fn write_homography(path: &Path, h: &Homography) -> Result<(), IoError> {
    write_json(path, &HomographyJson { matrix: h.m })
}

pub fn read_homography(path: &Path) -> Result<Homography, IoError> {
    let json: HomographyJson = read_json(path)?;
    Homography::from_matrix(json.matrix).map_err(|e| fmt_err(path, e.to_string()))
}

// ---------------------------------------------------------------------------
// Proposal JSON

#[derive(Serialize, Deserialize)]
struct ProposalsJson {
    proposals: Vec<Vec<f64>>,
    units: f64,
}

pub fn write_proposals(path: &Path, proposals: &[Proposal], units: f64) -> Result<(), IoError> {
    let json = ProposalsJson {
        proposals: proposals
            .iter()
            .map(|p| {
                vec![
                    p.y1.x, p.y1.y, p.y2.x, p.y2.y, p.x1.x, p.x1.y, p.x2.x, p.x2.y, p.delta,
                    p.score,
                ]
            })
            .collect(),
        units,
    };
    write_json(path, &json)
}

pub fn read_proposals(path: &Path) -> Result<(Vec<Proposal>, f64), IoError> {
    let json: ProposalsJson = read_json(path)?;
    let mut proposals = Vec::with_capacity(json.proposals.len());
    for (i, v) in json.proposals.iter().enumerate() {
        if v.len() != 10 {
            return Err(fmt_err(
                path,
                format!("proposal {i} has {} values, expected 10", v.len()),
            ));
        }
        proposals.push(Proposal {
            y1: Point2::new(v[0], v[1]),
            y2: Point2::new(v[2], v[3]),
            x1: Point2::new(v[4], v[5]),
            x2: Point2::new(v[6], v[7]),
            delta: v[8],
            score: v[9],
        });
    }
    Ok((proposals, json.units))
}

// ---------------------------------------------------------------------------
// MLP weights JSON

pub fn write_mlp_weights(path: &Path, weights: &MlpWeights) -> Result<(), IoError> {
    write_json(path, weights)
}

pub fn read_mlp_weights(path: &Path) -> Result<MlpWeights, IoError> {
    read_json(path)
}

// ---------------------------------------------------------------------------
// Dataset manifest JSON

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct ManifestEntry {
    pub image: String,
    pub wireframe: String,
    pub primitive: String,
    pub seed: u64,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq, Eq)]
pub struct Manifest {
    pub samples: Vec<ManifestEntry>,
}

pub fn write_manifest(path: &Path, manifest: &Manifest) -> Result<(), IoError> {
    write_json(path, manifest)
}

pub fn read_manifest(path: &Path) -> Result<Manifest, IoError> {
    read_json(path)
}

// ---------------------------------------------------------------------------
// Binary plane containers

const PLANE_FORMAT_VERSION: u32 = 1;
/// Upper bound on plane cells, rejecting implausible headers before any
/// allocation.
const MAX_PLANE_CELLS: u64 = 1 << 28;

fn write_planes(
    path: &Path,
    magic: &[u8; 4],
    width: u32,
    height: u32,
    stride: u32,
    tau_d: f32,
    planes: &[&[f32]],
) -> Result<(), IoError> {
    let file = fs::File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = BufWriter::new(file);
    (|| -> std::io::Result<()> {
        w.write_all(magic)?;
        w.write_u32::<LittleEndian>(PLANE_FORMAT_VERSION)?;
        w.write_u32::<LittleEndian>(width)?;
        w.write_u32::<LittleEndian>(height)?;
        w.write_u32::<LittleEndian>(stride)?;
        w.write_f32::<LittleEndian>(tau_d)?;
        for plane in planes {
            debug_assert_eq!(plane.len(), (width as usize) * (height as usize));
            for &v in *plane {
                w.write_f32::<LittleEndian>(v)?;
            }
        }
        w.flush()
    })()
    .map_err(|e| io_err(path, e))
}

struct PlaneHeader {
    width: u32,
    height: u32,
    stride: u32,
    tau_d: f32,
}

fn read_planes(
    path: &Path,
    expect_magic: &[u8; 4],
    n_planes: usize,
) -> Result<(PlaneHeader, Vec<Vec<f32>>), IoError> {
    let file = fs::File::open(path).map_err(|e| io_err(path, e))?;
    let mut r = BufReader::new(file);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(|e| io_err(path, e))?;
    if &magic != expect_magic {
        return Err(fmt_err(
            path,
            format!(
                "bad magic {:?}, expected {:?}",
                String::from_utf8_lossy(&magic),
                String::from_utf8_lossy(expect_magic)
            ),
        ));
    }
    let mut read = || -> std::io::Result<PlaneHeader> {
        let version = r.read_u32::<LittleEndian>()?;
        if version != PLANE_FORMAT_VERSION {
            return Err(std::io::Error::new(
                std::io::ErrorKind::InvalidData,
                format!("unsupported version {version}"),
            ));
        }
        Ok(PlaneHeader {
            width: r.read_u32::<LittleEndian>()?,
            height: r.read_u32::<LittleEndian>()?,
            stride: r.read_u32::<LittleEndian>()?,
            tau_d: r.read_f32::<LittleEndian>()?,
        })
    };
    let header = read().map_err(|e| io_err(path, e))?;
    let cells = header.width as u64 * header.height as u64;
    if cells == 0 || cells > MAX_PLANE_CELLS {
        return Err(fmt_err(
            path,
            format!("implausible dimensions {}x{}", header.width, header.height),
        ));
    }
    let mut planes = Vec::with_capacity(n_planes);
    for _ in 0..n_planes {
        let mut plane = vec![0.0f32; cells as usize];
        r.read_f32_into::<LittleEndian>(&mut plane)
            .map_err(|e| io_err(path, e))?;
        planes.push(plane);
    }
    // Trailing bytes mean the file does not match the expected layout.
    let mut probe = [0u8; 1];
    match r.read(&mut probe) {
        Ok(0) => {}
        Ok(_) => return Err(fmt_err(path, "trailing bytes after final plane")),
        Err(e) => return Err(io_err(path, e)),
    }
    Ok((header, planes))
}

pub fn write_hat_field(path: &Path, field: &HatField) -> Result<(), IoError> {
    write_planes(
        path,
        b"HATF",
        field.width_s as u32,
        field.height_s as u32,
        field.stride,
        field.tau_d as f32,
        &[
            &field.d,
            &field.delta_d,
            &field.theta,
            &field.theta1,
            &field.theta2,
            &field.mask,
        ],
    )
}

pub fn read_hat_field(path: &Path) -> Result<HatField, IoError> {
    let (header, mut planes) = read_planes(path, b"HATF", 6)?;
    let mask = planes.pop().unwrap();
    let theta2 = planes.pop().unwrap();
    let theta1 = planes.pop().unwrap();
    let theta = planes.pop().unwrap();
    let delta_d = planes.pop().unwrap();
    let d = planes.pop().unwrap();
    Ok(HatField {
        width_s: header.width as usize,
        height_s: header.height as usize,
        stride: header.stride,
        tau_d: header.tau_d as f64,
        d,
        delta_d,
        theta,
        theta1,
        theta2,
        mask,
    })
}

pub fn write_junction_maps(path: &Path, maps: &JunctionMaps) -> Result<(), IoError> {
    write_planes(
        path,
        b"JUNC",
        maps.width as u32,
        maps.height as u32,
        maps.stride,
        0.0,
        &[&maps.heatmap, &maps.offset_x, &maps.offset_y],
    )
}

pub fn read_junction_maps(path: &Path) -> Result<JunctionMaps, IoError> {
    let (header, mut planes) = read_planes(path, b"JUNC", 3)?;
    let offset_y = planes.pop().unwrap();
    let offset_x = planes.pop().unwrap();
    let heatmap = planes.pop().unwrap();
    Ok(JunctionMaps {
        width: header.width as usize,
        height: header.height as usize,
        stride: header.stride,
        heatmap,
        offset_x,
        offset_y,
    })
}

pub fn write_edge_map(path: &Path, map: &EdgeMap) -> Result<(), IoError> {
    write_planes(path, b"EDGE", map.width, map.height, 1, 0.0, &[&map.grid])
}

fn read_edge_map_binary(path: &Path) -> Result<EdgeMap, IoError> {
    let (header, mut planes) = read_planes(path, b"EDGE", 1)?;
    Ok(EdgeMap::new(header.width, header.height, planes.pop().unwrap()))
}

// ---------------------------------------------------------------------------
// PGM (P5) images

pub fn write_pgm(path: &Path, width: u32, height: u32, pixels: &[u8]) -> Result<(), IoError> {
    debug_assert_eq!(pixels.len(), (width as usize) * (height as usize));
    let mut out = Vec::with_capacity(pixels.len() + 32);
    out.extend_from_slice(format!("P5\n{width} {height}\n255\n").as_bytes());
    out.extend_from_slice(pixels);
    fs::write(path, out).map_err(|e| io_err(path, e))
}

fn parse_pgm(path: &Path, data: &[u8]) -> Result<(u32, u32, u16, Vec<u8>), IoError> {
    let mut pos = 0usize;
    let mut token = |data: &[u8]| -> Result<String, IoError> {
        // Skip whitespace and '#' comment lines between header tokens.
        loop {
            while pos < data.len() && data[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < data.len() && data[pos] == b'#' {
                while pos < data.len() && data[pos] != b'\n' {
                    pos += 1;
                }
                continue;
            }
            break;
        }
        let start = pos;
        while pos < data.len() && !data[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(fmt_err(path, "truncated header"));
        }
        Ok(String::from_utf8_lossy(&data[start..pos]).into_owned())
    };
    if token(data)? != "P5" {
        return Err(fmt_err(path, "not a binary PGM (P5) file"));
    }
    let width: u32 = token(data)?
        .parse()
        .map_err(|_| fmt_err(path, "bad width"))?;
    let height: u32 = token(data)?
        .parse()
        .map_err(|_| fmt_err(path, "bad height"))?;
    let maxval: u16 = token(data)?
        .parse()
        .map_err(|_| fmt_err(path, "bad maxval"))?;
    if maxval == 0 || maxval > 255 {
        return Err(fmt_err(path, format!("unsupported maxval {maxval}")));
    }
    // Exactly one whitespace byte separates the header from the raster.
    pos += 1;
    let n = width as usize * height as usize;
    if data.len() < pos || data.len() - pos != n {
        return Err(fmt_err(
            path,
            format!("raster has {} bytes, expected {n}", data.len().saturating_sub(pos)),
        ));
    }
    Ok((width, height, maxval, data[pos..].to_vec()))
}

pub fn read_pgm(path: &Path) -> Result<(u32, u32, Vec<u8>), IoError> {
    let data = fs::read(path).map_err(|e| io_err(path, e))?;
    let (w, h, _maxval, pixels) = parse_pgm(path, &data)?;
    Ok((w, h, pixels))
}

/// Reads an edge map from either format: the binary `EDGE` container or a
/// PGM whose gray values scale to `[0, 1]` by maxval.
pub fn read_edge_map(path: &Path) -> Result<EdgeMap, IoError> {
    let data = fs::read(path).map_err(|e| io_err(path, e))?;
    if data.starts_with(b"EDGE") {
        return read_edge_map_binary(path);
    }
    if data.starts_with(b"P5") {
        let (w, h, maxval, pixels) = parse_pgm(path, &data)?;
        let grid = pixels
            .into_iter()
            .map(|v| v as f32 / maxval as f32)
            .collect();
        return Ok(EdgeMap::new(w, h, grid));
    }
    Err(fmt_err(path, "unrecognized edge-map format (need EDGE or P5)"))
}
