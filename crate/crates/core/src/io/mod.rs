//! File formats: PLY clouds and meshes, camera rigs, 16-bit depth images.

mod depth;
mod ply;

pub use depth::{
    read_json, read_pgm, read_raw_depth, read_rig, sidecar_path, write_json, write_pgm, write_raw_depth, CameraSpec,
    LengthUnit, RawDepthSidecar, RigFile,
};
pub use ply::{parse_ply, read_cloud, read_mesh, read_ply, write_mesh, write_ply, write_ply_to, PlyData, PlyFormat};
pub(crate) use ply::write_file;
