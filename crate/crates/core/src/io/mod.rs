//! Cloud file formats.

mod json;
mod ply;

use std::path::Path;

pub use json::{parse_cloud_json, write_cloud_json};
pub use ply::{parse_ply, parse_ply_with_encoding, write_ply, PlyEncoding};

use crate::cloud::PointCloud;
use crate::error::{Error, Location, ParseErrorKind, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CloudFormat {
    PlyAscii,
    PlyBinaryLe,
    Json,
}

impl CloudFormat {
    /// `.json` selects the internal format; anything else is PLY, with the
    /// encoding taken from `binary` when writing.
    pub fn for_path(path: &Path, binary: bool) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("json") => CloudFormat::Json,
            _ if binary => CloudFormat::PlyBinaryLe,
            _ => CloudFormat::PlyAscii,
        }
    }
}

/// Decode a cloud held in memory under the declared format.
pub fn decode_cloud(bytes: &[u8], format: CloudFormat) -> Result<PointCloud> {
    match format {
        CloudFormat::Json => parse_cloud_json(bytes),
        CloudFormat::PlyAscii | CloudFormat::PlyBinaryLe => {
            let (cloud, enc) = parse_ply_with_encoding(bytes)?;
            let wanted = if format == CloudFormat::PlyAscii {
                PlyEncoding::Ascii
            } else {
                PlyEncoding::BinaryLittleEndian
            };
            if enc != wanted {
                return Err(Error::parse(
                    ParseErrorKind::MalformedHeader,
                    Location::Line(2),
                    format!("expected {wanted:?} data, header declares {enc:?}"),
                ));
            }
            Ok(cloud)
        }
    }
}

pub fn encode_cloud(cloud: &PointCloud, format: CloudFormat) -> Vec<u8> {
    match format {
        CloudFormat::Json => write_cloud_json(cloud),
        CloudFormat::PlyAscii => write_ply(cloud, PlyEncoding::Ascii),
        CloudFormat::PlyBinaryLe => write_ply(cloud, PlyEncoding::BinaryLittleEndian),
    }
}

pub fn load_cloud(path: impl AsRef<Path>, format: CloudFormat) -> Result<PointCloud> {
    decode_cloud(&std::fs::read(path)?, format)
}

/// Load a cloud choosing the format from the extension and, for PLY, from
/// the header's declared encoding.
pub fn load_cloud_auto(path: impl AsRef<Path>) -> Result<PointCloud> {
    let path = path.as_ref();
    let bytes = std::fs::read(path)?;
    match CloudFormat::for_path(path, false) {
        CloudFormat::Json => parse_cloud_json(&bytes),
        _ => parse_ply(&bytes),
    }
}

pub fn save_cloud(cloud: &PointCloud, path: impl AsRef<Path>, format: CloudFormat) -> Result<()> {
    std::fs::write(path, encode_cloud(cloud, format))?;
    Ok(())
}
