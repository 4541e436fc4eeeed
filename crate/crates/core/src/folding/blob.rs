//! Portable binary format for trained folding decoders.
//!
//! All integers and floats are little-endian:
//!
//! | field          | type            |
//! |----------------|-----------------|
//! | magic          | 8 bytes `HCFOLD\0\0` |
//! | version        | u32 (= 1)       |
//! | template kind  | u32 (0 grid, 1 hand, 2 local) |
//! | hidden width   | u32             |
//! | point count n  | u32             |
//! | param count m  | u64             |
//! | points         | n × 3 × f64     |
//! | labels         | n × u8 (0 palm … 5 pinky) |
//! | parameters     | m × f64         |

use std::path::Path;

use super::decoder::FoldingDecoder;
use crate::error::{Error, Result};
use crate::geometry::{ComponentId, Point3, PointCloud};
use crate::io::write_file;
use crate::templates::{ComponentBudget, Template, TemplateKind};

pub const WEIGHTS_MAGIC: &[u8; 8] = b"HCFOLD\0\0";
pub const WEIGHTS_VERSION: u32 = 1;

pub fn encode_weights(decoder: &FoldingDecoder) -> Vec<u8> {
    let template = decoder.template();
    let kind: u32 = match template.kind() {
        TemplateKind::Grid2D => 0,
        TemplateKind::Hand3D => 1,
        TemplateKind::LocalHand3D => 2,
    };
    let mut out = Vec::with_capacity(32 + template.len() * 25 + decoder.num_params() * 8);
    out.extend_from_slice(WEIGHTS_MAGIC);
    out.extend_from_slice(&WEIGHTS_VERSION.to_le_bytes());
    out.extend_from_slice(&kind.to_le_bytes());
    out.extend_from_slice(&(decoder.hidden() as u32).to_le_bytes());
    out.extend_from_slice(&(template.len() as u32).to_le_bytes());
    out.extend_from_slice(&(decoder.num_params() as u64).to_le_bytes());
    for p in template.points().points() {
        for c in [p.x, p.y, p.z] {
            out.extend_from_slice(&c.to_le_bytes());
        }
    }
    out.extend(template.labels().iter().map(|c| c.index() as u8));
    for w in decoder.params() {
        out.extend_from_slice(&w.to_le_bytes());
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len()).ok_or_else(|| {
            Error::parse(self.path, format!("offset {}", self.pos), format!("truncated {what}"))
        })?;
        let slice = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(slice)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().expect("4 bytes")))
    }

    fn f64(&mut self, what: &str) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8, what)?.try_into().expect("8 bytes")))
    }

    fn fail(&self, message: impl Into<String>) -> Error {
        Error::parse(self.path, format!("offset {}", self.pos), message)
    }
}

/// Decodes a weights blob; `path` is used for error messages only.
pub fn decode_weights(bytes: &[u8], path: &Path) -> Result<FoldingDecoder> {
    let mut r = Reader { bytes, pos: 0, path };
    if r.take(8, "magic")? != WEIGHTS_MAGIC {
        return Err(Error::parse(path, "offset 0", "not a handcloud weights file"));
    }
    let version = r.u32("version")?;
    if version != WEIGHTS_VERSION {
        return Err(r.fail(format!("unsupported weights version {version}")));
    }
    let kind = match r.u32("template kind")? {
        0 => TemplateKind::Grid2D,
        1 => TemplateKind::Hand3D,
        2 => TemplateKind::LocalHand3D,
        k => return Err(r.fail(format!("unknown template kind {k}"))),
    };
    let hidden = r.u32("hidden width")? as usize;
    let n = r.u32("point count")? as usize;
    let m = u64::from_le_bytes(r.take(8, "parameter count")?.try_into().expect("8 bytes")) as usize;
    let mut points = Vec::with_capacity(n);
    for _ in 0..n {
        points.push(Point3::new(r.f64("points")?, r.f64("points")?, r.f64("points")?));
    }
    let labels = r
        .take(n, "labels")?
        .iter()
        .map(|&b| ComponentId::from_index(b as usize))
        .collect::<Option<Vec<_>>>()
        .ok_or_else(|| r.fail("label outside 0..=5"))?;
    let cloud = PointCloud::with_labels(points, labels)?;
    let budget = match kind {
        TemplateKind::LocalHand3D => Some(ComponentBudget::new(
            ComponentId::ALL
                .into_iter()
                .map(|c| (c, cloud.component_counts()[c.index()]))
                .filter(|&(_, k)| k > 0),
        )?),
        _ => None,
    };
    let template = Template::new(cloud, kind, budget)?;
    let mut decoder = FoldingDecoder::zeroed(template, hidden)?;
    if decoder.num_params() != m {
        return Err(r.fail(format!("parameter count {m} does not match the layout ({})", decoder.num_params())));
    }
    for p in decoder.params_mut() {
        *p = r.f64("parameters")?;
    }
    if r.pos != bytes.len() {
        return Err(r.fail("trailing bytes after parameters"));
    }
    Ok(decoder)
}

pub fn write_weights(path: &Path, decoder: &FoldingDecoder) -> Result<()> {
    let bytes = encode_weights(decoder);
    write_file(path, |w| std::io::Write::write_all(w, &bytes))
}

pub fn read_weights(path: &Path) -> Result<FoldingDecoder> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_weights(&bytes, path)
}
