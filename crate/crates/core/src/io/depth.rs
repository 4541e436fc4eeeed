//! Camera rigs (JSON) and 16-bit depth images: binary PGM, or raw
//! little-endian samples with a JSON sidecar.

use std::path::{Path, PathBuf};

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use super::ply::write_file;
use crate::error::{Error, Result};
use crate::fusion::DepthMap;
use crate::geometry::{CameraModel, RigidTransform, Vector3};

/// Length unit of extrinsic translations in a camera file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum LengthUnit {
    #[default]
    #[serde(rename = "mm")]
    Millimeters,
    #[serde(rename = "m")]
    Meters,
}

impl LengthUnit {
    fn to_mm(self) -> f64 {
        match self {
            LengthUnit::Millimeters => 1.0,
            LengthUnit::Meters => 1000.0,
        }
    }
}

/// Serialized camera: intrinsics plus world-from-camera rotation (row-major)
/// and translation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraSpec {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: usize,
    pub height: usize,
    pub rotation: [[f64; 3]; 3],
    pub translation: [f64; 3],
}

impl CameraSpec {
    pub fn from_camera(camera: &CameraModel, unit: LengthUnit) -> Self {
        let r = camera.extrinsic.rotation();
        let t = camera.extrinsic.translation() / unit.to_mm();
        CameraSpec {
            fx: camera.fx,
            fy: camera.fy,
            cx: camera.cx,
            cy: camera.cy,
            width: camera.width,
            height: camera.height,
            rotation: [0, 1, 2].map(|i| [r[(i, 0)], r[(i, 1)], r[(i, 2)]]),
            translation: [t.x, t.y, t.z],
        }
    }

    pub fn to_camera(&self, unit: LengthUnit) -> Result<CameraModel> {
        let rotation = Matrix3::from_fn(|i, j| self.rotation[i][j]);
        let extrinsic = RigidTransform::new(rotation, Vector3::from(self.translation) * unit.to_mm())?;
        CameraModel::new(self.fx, self.fy, self.cx, self.cy, self.width, self.height, extrinsic)
    }
}

/// A camera rig file: `{"units": "mm" | "m", "cameras": [...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RigFile {
    #[serde(default)]
    pub units: LengthUnit,
    pub cameras: Vec<CameraSpec>,
}

impl RigFile {
    pub fn from_cameras(cameras: &[CameraModel]) -> Self {
        RigFile {
            units: LengthUnit::Millimeters,
            cameras: cameras.iter().map(|c| CameraSpec::from_camera(c, LengthUnit::Millimeters)).collect(),
        }
    }

    pub fn cameras(&self) -> Result<Vec<CameraModel>> {
        self.cameras.iter().map(|c| c.to_camera(self.units)).collect()
    }
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text)
        .map_err(|e| Error::parse(path, format!("line {} column {}", e.line(), e.column()), e.to_string()))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_file(path, |w| {
        serde_json::to_writer_pretty(&mut *w, value).map_err(std::io::Error::other)?;
        std::io::Write::write_all(w, b"\n")
    })
}

pub fn read_rig(path: &Path) -> Result<Vec<CameraModel>> {
    read_json::<RigFile>(path)?.cameras()
}

/// Sidecar of a raw depth file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawDepthSidecar {
    pub width: usize,
    pub height: usize,
    #[serde(default)]
    pub units: LengthUnit,
    pub camera: CameraSpec,
}

/// Depth in whole millimeters; errors if a value does not fit 16 bits.
fn to_u16(map: &DepthMap) -> Result<Vec<u16>> {
    map.depth()
        .iter()
        .map(|&d| {
            let r = d.round();
            if (0.0..=u16::MAX as f64).contains(&r) {
                Ok(r as u16)
            } else {
                Err(Error::InvalidArgument(format!("depth {d} does not fit a 16-bit sample")))
            }
        })
        .collect()
}

fn from_u16(samples: &[u16], width: usize, height: usize, camera: CameraModel) -> Result<DepthMap> {
    DepthMap::new(width, height, samples.iter().map(|&s| s as f64).collect(), camera)
}

/// Binary 16-bit PGM (big-endian samples, maxval 65535).
pub fn write_pgm(path: &Path, map: &DepthMap) -> Result<()> {
    let samples = to_u16(map)?;
    write_file(path, |w| {
        use std::io::Write;
        write!(w, "P5\n{} {}\n65535\n", map.width(), map.height())?;
        for s in samples {
            w.write_all(&s.to_be_bytes())?;
        }
        Ok(())
    })
}

/// Reads a binary (P5) or ASCII (P2) PGM; samples are millimeters.
pub fn read_pgm(path: &Path, camera: CameraModel) -> Result<DepthMap> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let (samples, width, height) = parse_pgm(&bytes).map_err(|(loc, msg)| Error::parse(path, loc, msg))?;
    from_u16(&samples, width, height, camera)
}

type PgmError = (String, String);

fn parse_pgm(bytes: &[u8]) -> std::result::Result<(Vec<u16>, usize, usize), PgmError> {
    let mut pos = 0;
    let token = |pos: &mut usize| -> std::result::Result<String, PgmError> {
        loop {
            while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
                *pos += 1;
            }
            if *pos < bytes.len() && bytes[*pos] == b'#' {
                while *pos < bytes.len() && bytes[*pos] != b'\n' {
                    *pos += 1;
                }
                continue;
            }
            break;
        }
        let start = *pos;
        while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if start == *pos {
            return Err((format!("byte {start}"), "unexpected end of header".into()));
        }
        Ok(String::from_utf8_lossy(&bytes[start..*pos]).into_owned())
    };
    let magic = token(&mut pos)?;
    let number = |s: String, what: &str| s.parse::<usize>().map_err(|_| ("header".to_string(), format!("invalid {what} '{s}'")));
    let width = number(token(&mut pos)?, "width")?;
    let height = number(token(&mut pos)?, "height")?;
    let maxval = number(token(&mut pos)?, "maxval")?;
    if maxval == 0 || maxval > 65535 {
        return Err(("header".into(), format!("maxval {maxval} outside 1..=65535")));
    }
    let n = width * height;
    match magic.as_str() {
        "P5" => {
            pos += 1; // single whitespace byte after maxval
            let wide = maxval > 255;
            let need = n * if wide { 2 } else { 1 };
            let data = bytes.get(pos..pos + need).ok_or_else(|| {
                (format!("byte {pos}"), format!("expected {need} bytes of pixel data"))
            })?;
            Ok((
                if wide {
                    data.chunks_exact(2).map(|c| u16::from_be_bytes([c[0], c[1]])).collect()
                } else {
                    data.iter().map(|&b| b as u16).collect()
                },
                width,
                height,
            ))
        }
        "P2" => {
            let mut samples = Vec::with_capacity(n);
            for i in 0..n {
                let t = token(&mut pos).map_err(|_| (format!("sample {i}"), "missing sample".to_string()))?;
                let v = t.parse::<u16>().map_err(|_| (format!("sample {i}"), format!("invalid sample '{t}'")))?;
                samples.push(v);
            }
            Ok((samples, width, height))
        }
        _ => Err(("byte 0".into(), format!("unsupported magic '{magic}' (expected P5 or P2)"))),
    }
}

/// Sidecar path of a raw depth file: same stem, `.json` extension.
pub fn sidecar_path(raw: &Path) -> PathBuf {
    raw.with_extension("json")
}

pub fn write_raw_depth(path: &Path, map: &DepthMap) -> Result<()> {
    let samples = to_u16(map)?;
    write_file(path, |w| {
        for s in samples {
            std::io::Write::write_all(w, &s.to_le_bytes())?;
        }
        Ok(())
    })?;
    write_json(
        &sidecar_path(path),
        &RawDepthSidecar {
            width: map.width(),
            height: map.height(),
            units: LengthUnit::Millimeters,
            camera: CameraSpec::from_camera(map.camera(), LengthUnit::Millimeters),
        },
    )
}

/// Reads raw little-endian samples; the camera comes from the sidecar.
pub fn read_raw_depth(path: &Path) -> Result<DepthMap> {
    let sidecar: RawDepthSidecar = read_json(&sidecar_path(path))?;
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let expected = 2 * sidecar.width * sidecar.height;
    if bytes.len() != expected {
        return Err(Error::parse(path, "file size", format!("expected {expected} bytes, found {}", bytes.len())));
    }
    let samples: Vec<u16> = bytes.chunks_exact(2).map(|c| u16::from_le_bytes([c[0], c[1]])).collect();
    from_u16(&samples, sidecar.width, sidecar.height, sidecar.camera.to_camera(sidecar.units)?)
}
