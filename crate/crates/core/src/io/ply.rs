//! PLY reader and writer for vertex clouds.
//!
//! Reads ASCII and both binary encodings with any scalar property types;
//! non-vertex elements are parsed and skipped. Writes ASCII or binary
//! little-endian with float32 coordinates.

use std::io::Write;

use crate::cloud::PointCloud;
use crate::error::{Error, Location, ParseErrorKind, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlyEncoding {
    Ascii,
    BinaryLittleEndian,
    BinaryBigEndian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Scalar {
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
    F32,
    F64,
}

impl Scalar {
    fn parse(name: &str) -> Option<Self> {
        Some(match name {
            "char" | "int8" => Scalar::I8,
            "uchar" | "uint8" => Scalar::U8,
            "short" | "int16" => Scalar::I16,
            "ushort" | "uint16" => Scalar::U16,
            "int" | "int32" => Scalar::I32,
            "uint" | "uint32" => Scalar::U32,
            "float" | "float32" => Scalar::F32,
            "double" | "float64" => Scalar::F64,
            _ => return None,
        })
    }

    fn size(self) -> usize {
        match self {
            Scalar::I8 | Scalar::U8 => 1,
            Scalar::I16 | Scalar::U16 => 2,
            Scalar::I32 | Scalar::U32 | Scalar::F32 => 4,
            Scalar::F64 => 8,
        }
    }

    fn is_float(self) -> bool {
        matches!(self, Scalar::F32 | Scalar::F64)
    }

    fn read(self, b: &[u8], little: bool) -> f64 {
        macro_rules! num {
            ($t:ty, $n:expr) => {{
                let mut a = [0u8; $n];
                a.copy_from_slice(&b[..$n]);
                if little {
                    <$t>::from_le_bytes(a) as f64
                } else {
                    <$t>::from_be_bytes(a) as f64
                }
            }};
        }
        match self {
            Scalar::I8 => b[0] as i8 as f64,
            Scalar::U8 => b[0] as f64,
            Scalar::I16 => num!(i16, 2),
            Scalar::U16 => num!(u16, 2),
            Scalar::I32 => num!(i32, 4),
            Scalar::U32 => num!(u32, 4),
            Scalar::F32 => num!(f32, 4),
            Scalar::F64 => num!(f64, 8),
        }
    }

    fn parse_token(self, tok: &str) -> Option<f64> {
        match self {
            Scalar::F32 => tok.parse::<f32>().ok().map(f64::from),
            Scalar::F64 => tok.parse::<f64>().ok(),
            _ => {
                let v: i64 = tok.parse().ok()?;
                let (lo, hi) = match self {
                    Scalar::I8 => (i8::MIN as i64, i8::MAX as i64),
                    Scalar::U8 => (0, u8::MAX as i64),
                    Scalar::I16 => (i16::MIN as i64, i16::MAX as i64),
                    Scalar::U16 => (0, u16::MAX as i64),
                    Scalar::I32 => (i32::MIN as i64, i32::MAX as i64),
                    _ => (0, u32::MAX as i64),
                };
                (lo..=hi).contains(&v).then_some(v as f64)
            }
        }
    }
}

#[derive(Debug, Clone)]
enum PropKind {
    Scalar(Scalar),
    List { count: Scalar, item: Scalar },
}

#[derive(Debug, Clone)]
struct Property {
    name: String,
    kind: PropKind,
}

#[derive(Debug, Clone)]
struct Element {
    name: String,
    count: usize,
    props: Vec<Property>,
}

#[derive(Debug)]
struct Header {
    encoding: PlyEncoding,
    elements: Vec<Element>,
    /// byte offset of the first data byte
    data_start: usize,
    /// line number of the first data line
    data_line: usize,
}

fn header_err(line: usize, msg: impl Into<String>) -> Error {
    Error::parse(ParseErrorKind::MalformedHeader, Location::Line(line), msg)
}

fn parse_header(bytes: &[u8]) -> Result<Header> {
    let mut pos = 0;
    let mut line_no = 0;
    let mut encoding = None;
    let mut elements: Vec<Element> = Vec::new();
    loop {
        line_no += 1;
        let Some(nl) = bytes[pos..].iter().position(|&b| b == b'\n') else {
            return Err(header_err(line_no, "header is not terminated by end_header"));
        };
        let raw = &bytes[pos..pos + nl];
        pos += nl + 1;
        let line = std::str::from_utf8(raw)
            .map_err(|_| header_err(line_no, "header line is not valid UTF-8"))?
            .trim_end_matches('\r');
        let words: Vec<&str> = line.split_whitespace().collect();
        if line_no == 1 {
            if words != ["ply"] {
                return Err(header_err(1, "missing 'ply' magic"));
            }
            continue;
        }
        match words.first().copied() {
            None | Some("comment") | Some("obj_info") => {}
            Some("format") => {
                if words.len() != 3 {
                    return Err(header_err(line_no, "format line needs an encoding and a version"));
                }
                encoding = Some(match words[1] {
                    "ascii" => PlyEncoding::Ascii,
                    "binary_little_endian" => PlyEncoding::BinaryLittleEndian,
                    "binary_big_endian" => PlyEncoding::BinaryBigEndian,
                    other => return Err(header_err(line_no, format!("unknown encoding '{other}'"))),
                });
                if words[2] != "1.0" {
                    return Err(header_err(line_no, format!("unsupported version '{}'", words[2])));
                }
            }
            Some("element") => {
                if words.len() != 3 {
                    return Err(header_err(line_no, "element line needs a name and a count"));
                }
                let count = words[2]
                    .parse()
                    .map_err(|_| header_err(line_no, format!("bad element count '{}'", words[2])))?;
                elements.push(Element {
                    name: words[1].to_string(),
                    count,
                    props: Vec::new(),
                });
            }
            Some("property") => {
                let element = elements
                    .last_mut()
                    .ok_or_else(|| header_err(line_no, "property before any element"))?;
                let scalar =
                    |w: &str| Scalar::parse(w).ok_or_else(|| header_err(line_no, format!("unknown type '{w}'")));
                let prop = match words.as_slice() {
                    ["property", "list", c, i, name] => Property {
                        name: name.to_string(),
                        kind: PropKind::List {
                            count: scalar(c)?,
                            item: scalar(i)?,
                        },
                    },
                    ["property", t, name] => Property {
                        name: name.to_string(),
                        kind: PropKind::Scalar(scalar(t)?),
                    },
                    _ => return Err(header_err(line_no, "malformed property line")),
                };
                if element.props.iter().any(|p| p.name == prop.name) {
                    return Err(header_err(line_no, format!("duplicate property '{}'", prop.name)));
                }
                element.props.push(prop);
            }
            Some("end_header") => break,
            Some(other) => return Err(header_err(line_no, format!("unexpected keyword '{other}'"))),
        }
    }
    let encoding = encoding.ok_or_else(|| header_err(line_no, "missing format line"))?;
    Ok(Header {
        encoding,
        elements,
        data_start: pos,
        data_line: line_no + 1,
    })
}

/// Columns of interest within the vertex element.
struct VertexLayout {
    xyz: [usize; 3],
    rgb: Option<[usize; 3]>,
    normal: Option<[usize; 3]>,
    gt_instance: Option<usize>,
    gt_semantic: Option<usize>,
    rgb_is_float: bool,
}

fn vertex_layout(el: &Element, line: usize) -> Result<VertexLayout> {
    let find = |name: &str| -> Result<Option<usize>> {
        match el.props.iter().position(|p| p.name == name) {
            None => Ok(None),
            Some(i) => match el.props[i].kind {
                PropKind::Scalar(_) => Ok(Some(i)),
                PropKind::List { .. } => Err(header_err(line, format!("vertex property '{name}' must be a scalar"))),
            },
        }
    };
    let triple = |names: [&str; 3]| -> Result<Option<[usize; 3]>> {
        let found = [find(names[0])?, find(names[1])?, find(names[2])?];
        match found {
            [Some(a), Some(b), Some(c)] => Ok(Some([a, b, c])),
            [None, None, None] => Ok(None),
            _ => Err(header_err(
                line,
                format!("vertex needs all or none of {}", names.join("/")),
            )),
        }
    };
    let xyz = triple(["x", "y", "z"])?.ok_or_else(|| header_err(line, "vertex element lacks x/y/z"))?;
    let rgb = triple(["red", "green", "blue"])?;
    let rgb_is_float = rgb
        .map(|c| matches!(el.props[c[0]].kind, PropKind::Scalar(s) if s.is_float()))
        .unwrap_or(false);
    Ok(VertexLayout {
        xyz,
        rgb,
        normal: triple(["nx", "ny", "nz"])?,
        gt_instance: find("gt_instance")?,
        gt_semantic: find("gt_semantic")?,
        rgb_is_float,
    })
}

#[derive(Default)]
struct Columns {
    positions: Vec<[f64; 3]>,
    colors: Vec<[f64; 3]>,
    normals: Vec<[f64; 3]>,
    gt_instance: Vec<i32>,
    gt_semantic: Vec<i32>,
}

impl Columns {
    fn push(&mut self, layout: &VertexLayout, row: &[f64], at: Location) -> Result<()> {
        let pick = |c: [usize; 3]| [row[c[0]], row[c[1]], row[c[2]]];
        let p = pick(layout.xyz);
        if p.iter().any(|v| !v.is_finite()) {
            return Err(Error::parse(
                ParseErrorKind::NonFinite,
                at,
                "vertex coordinate is not finite",
            ));
        }
        self.positions.push(p);
        if let Some(c) = layout.rgb {
            let scale = if layout.rgb_is_float { 1.0 } else { 255.0 };
            let c = pick(c).map(|v| v / scale);
            if c.iter().any(|v| !(0.0..=1.0).contains(v)) {
                return Err(Error::parse(ParseErrorKind::Invalid, at, "color outside [0, 1]"));
            }
            self.colors.push(c);
        }
        if let Some(c) = layout.normal {
            let n = pick(c);
            if n.iter().any(|v| !v.is_finite()) {
                return Err(Error::parse(ParseErrorKind::NonFinite, at, "normal is not finite"));
            }
            self.normals.push(n);
        }
        let label = |v: f64| -> Result<i32> {
            if v.fract() == 0.0 && v >= i32::MIN as f64 && v <= i32::MAX as f64 {
                Ok(v as i32)
            } else {
                Err(Error::parse(
                    ParseErrorKind::Invalid,
                    at,
                    format!("label {v} is not an integer"),
                ))
            }
        };
        if let Some(c) = layout.gt_instance {
            self.gt_instance.push(label(row[c])?);
        }
        if let Some(c) = layout.gt_semantic {
            self.gt_semantic.push(label(row[c])?);
        }
        Ok(())
    }

    fn into_cloud(self, layout: &VertexLayout, at: Location) -> Result<PointCloud> {
        let wrap = |e: Error| match e {
            Error::Parse { .. } => e,
            other => Error::parse(ParseErrorKind::Invalid, at, other.to_string()),
        };
        let mut cloud = PointCloud::new(self.positions).map_err(wrap)?;
        if layout.rgb.is_some() {
            cloud = cloud.with_colors(self.colors).map_err(wrap)?;
        }
        if layout.normal.is_some() {
            cloud = cloud.with_normals(self.normals).map_err(wrap)?;
        }
        if layout.gt_instance.is_some() {
            cloud = cloud.with_gt_instance(self.gt_instance).map_err(wrap)?;
        }
        if layout.gt_semantic.is_some() {
            cloud = cloud.with_gt_semantic(self.gt_semantic).map_err(wrap)?;
        }
        Ok(cloud)
    }
}

/// Parse a PLY file held in memory.
pub fn parse_ply(bytes: &[u8]) -> Result<PointCloud> {
    Ok(parse_ply_with_encoding(bytes)?.0)
}

/// Parse a PLY file and report which encoding its header declared.
pub fn parse_ply_with_encoding(bytes: &[u8]) -> Result<(PointCloud, PlyEncoding)> {
    let header = parse_header(bytes)?;
    let vertex_pos = header
        .elements
        .iter()
        .position(|e| e.name == "vertex")
        .ok_or_else(|| header_err(header.data_line - 1, "no vertex element"))?;
    let layout = vertex_layout(&header.elements[vertex_pos], header.data_line - 1)?;
    let cloud = match header.encoding {
        PlyEncoding::Ascii => read_ascii(bytes, &header, vertex_pos, &layout)?,
        PlyEncoding::BinaryLittleEndian => read_binary(bytes, &header, vertex_pos, &layout, true)?,
        PlyEncoding::BinaryBigEndian => read_binary(bytes, &header, vertex_pos, &layout, false)?,
    };
    Ok((cloud, header.encoding))
}

fn read_ascii(bytes: &[u8], header: &Header, vertex_pos: usize, layout: &VertexLayout) -> Result<PointCloud> {
    let body = std::str::from_utf8(&bytes[header.data_start..]).map_err(|e| {
        Error::parse(
            ParseErrorKind::Syntax,
            Location::Byte(header.data_start + e.valid_up_to()),
            "ASCII body is not valid UTF-8",
        )
    })?;
    let mut lines = body.lines().enumerate().map(|(k, l)| (header.data_line + k, l));
    let mut cols = Columns::default();
    let mut last_line = header.data_line;
    for (ei, el) in header.elements.iter().enumerate().take(vertex_pos + 1) {
        let mut row = Vec::with_capacity(el.props.len());
        for _ in 0..el.count {
            let (line_no, line) = lines.next().ok_or_else(|| {
                Error::parse(
                    ParseErrorKind::UnexpectedEof,
                    Location::Line(last_line),
                    format!(
                        "element '{}' declares {} rows but the file ends early",
                        el.name, el.count
                    ),
                )
            })?;
            last_line = line_no;
            let at = Location::Line(line_no);
            let mut toks = line.split_whitespace();
            let mut next = |ty: Scalar| -> Result<f64> {
                let tok = toks.next().ok_or_else(|| {
                    Error::parse(
                        ParseErrorKind::LengthMismatch,
                        at,
                        "row has fewer values than declared properties",
                    )
                })?;
                ty.parse_token(tok)
                    .ok_or_else(|| Error::parse(ParseErrorKind::Syntax, at, format!("cannot parse '{tok}'")))
            };
            row.clear();
            for prop in &el.props {
                match prop.kind {
                    PropKind::Scalar(ty) => row.push(next(ty)?),
                    PropKind::List { count, item } => {
                        let n = next(count)?;
                        if n < 0.0 {
                            return Err(Error::parse(ParseErrorKind::Invalid, at, "negative list length"));
                        }
                        for _ in 0..n as usize {
                            next(item)?;
                        }
                        row.push(f64::NAN);
                    }
                }
            }
            if toks.next().is_some() {
                return Err(Error::parse(
                    ParseErrorKind::LengthMismatch,
                    at,
                    "row has more values than declared properties",
                ));
            }
            if ei == vertex_pos {
                cols.push(layout, &row, at)?;
            }
        }
    }
    cols.into_cloud(layout, Location::Line(last_line))
}

fn read_binary(
    bytes: &[u8],
    header: &Header,
    vertex_pos: usize,
    layout: &VertexLayout,
    little: bool,
) -> Result<PointCloud> {
    let mut pos = header.data_start;
    let mut cols = Columns::default();
    let take = |pos: &mut usize, n: usize| -> Result<&[u8]> {
        let end = pos.checked_add(n).filter(|&e| e <= bytes.len()).ok_or_else(|| {
            Error::parse(
                ParseErrorKind::UnexpectedEof,
                Location::Byte(*pos),
                format!("need {n} more bytes, {} available", bytes.len() - *pos),
            )
        })?;
        let s = &bytes[*pos..end];
        *pos = end;
        Ok(s)
    };
    for (ei, el) in header.elements.iter().enumerate().take(vertex_pos + 1) {
        let fixed: Option<usize> = el
            .props
            .iter()
            .map(|p| match p.kind {
                PropKind::Scalar(s) => Some(s.size()),
                PropKind::List { .. } => None,
            })
            .sum();
        if let Some(row_size) = fixed {
            let need = row_size.checked_mul(el.count);
            if need.is_none_or(|n| n > bytes.len() - pos) {
                return Err(Error::parse(
                    ParseErrorKind::UnexpectedEof,
                    Location::Byte(bytes.len()),
                    format!(
                        "element '{}' declares {} rows but the data is shorter",
                        el.name, el.count
                    ),
                ));
            }
        }
        if el.props.is_empty() {
            continue;
        }
        let mut row = Vec::with_capacity(el.props.len());
        for _ in 0..el.count {
            let at = Location::Byte(pos);
            row.clear();
            for prop in &el.props {
                match prop.kind {
                    PropKind::Scalar(ty) => row.push(ty.read(take(&mut pos, ty.size())?, little)),
                    PropKind::List { count, item } => {
                        let n = count.read(take(&mut pos, count.size())?, little);
                        if n.is_nan() || n < 0.0 {
                            return Err(Error::parse(ParseErrorKind::Invalid, at, "negative list length"));
                        }
                        let len = (n as usize)
                            .checked_mul(item.size())
                            .ok_or_else(|| Error::parse(ParseErrorKind::Invalid, at, "list length overflows"))?;
                        take(&mut pos, len)?;
                        row.push(f64::NAN);
                    }
                }
            }
            if ei == vertex_pos {
                cols.push(layout, &row, at)?;
            }
        }
    }
    cols.into_cloud(layout, Location::Byte(pos))
}

/// Serialize a cloud as PLY. Coordinates and normals are written as
/// float32 (float64 if some value overflows float32), colors as uchar and
/// labels as int32.
pub fn write_ply(cloud: &PointCloud, encoding: PlyEncoding) -> Vec<u8> {
    let overflows = |v: &f64| v.abs() > f32::MAX as f64;
    let wide = cloud.positions().iter().flatten().any(overflows)
        || cloud.normals().is_some_and(|n| n.iter().flatten().any(overflows));
    let mut out = Vec::new();
    let enc = match encoding {
        PlyEncoding::Ascii => "ascii",
        PlyEncoding::BinaryLittleEndian => "binary_little_endian",
        PlyEncoding::BinaryBigEndian => "binary_big_endian",
    };
    let _ = write!(out, "ply\nformat {enc} 1.0\nelement vertex {}\n", cloud.len());
    let real = if wide { "double" } else { "float" };
    let mut props: Vec<String> = ["x", "y", "z"].iter().map(|a| format!("{real} {a}")).collect();
    if cloud.colors().is_some() {
        props.extend(["uchar red", "uchar green", "uchar blue"].map(String::from));
    }
    if cloud.normals().is_some() {
        props.extend(["nx", "ny", "nz"].iter().map(|a| format!("{real} {a}")));
    }
    if cloud.gt_instance().is_some() {
        props.push("int gt_instance".into());
    }
    if cloud.gt_semantic().is_some() {
        props.push("int gt_semantic".into());
    }
    for p in props {
        let _ = writeln!(out, "property {p}");
    }
    out.extend_from_slice(b"end_header\n");

    let color_byte = |v: f64| (v * 255.0).round().clamp(0.0, 255.0) as u8;
    for i in 0..cloud.len() {
        let p = cloud.position(i);
        let c = cloud.colors().map(|c| c[i].map(color_byte));
        let n = cloud.normals().map(|n| n[i]);
        let gi = cloud.gt_instance().map(|l| l[i]);
        let gs = cloud.gt_semantic().map(|l| l[i]);
        match encoding {
            PlyEncoding::Ascii => {
                let text = |v: f64| if wide { v.to_string() } else { (v as f32).to_string() };
                let mut fields: Vec<String> = p.iter().map(|&v| text(v)).collect();
                if let Some(c) = c {
                    fields.extend(c.iter().map(|v| v.to_string()));
                }
                if let Some(n) = n {
                    fields.extend(n.iter().map(|&v| text(v)));
                }
                fields.extend(gi.iter().chain(gs.iter()).map(|v| v.to_string()));
                out.extend_from_slice(fields.join(" ").as_bytes());
                out.push(b'\n');
            }
            PlyEncoding::BinaryLittleEndian | PlyEncoding::BinaryBigEndian => {
                let le = encoding == PlyEncoding::BinaryLittleEndian;
                let real = |out: &mut Vec<u8>, v: f64| match (wide, le) {
                    (true, true) => out.extend_from_slice(&v.to_le_bytes()),
                    (true, false) => out.extend_from_slice(&v.to_be_bytes()),
                    (false, true) => out.extend_from_slice(&(v as f32).to_le_bytes()),
                    (false, false) => out.extend_from_slice(&(v as f32).to_be_bytes()),
                };
                let i32b = |v: i32| if le { v.to_le_bytes() } else { v.to_be_bytes() };
                for v in p {
                    real(&mut out, v);
                }
                if let Some(c) = c {
                    out.extend_from_slice(&c);
                }
                if let Some(n) = n {
                    for v in n {
                        real(&mut out, v);
                    }
                }
                for v in gi.iter().chain(gs.iter()) {
                    out.extend_from_slice(&i32b(*v));
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn widens_coordinates_beyond_float32() {
        let cloud = PointCloud::new(vec![[1e300, 0.5, -2.0]]).unwrap();
        for enc in [
            PlyEncoding::Ascii,
            PlyEncoding::BinaryLittleEndian,
            PlyEncoding::BinaryBigEndian,
        ] {
            let bytes = write_ply(&cloud, enc);
            assert!(bytes.windows(15).any(|w| w == b"property double"));
            assert_eq!(parse_ply(&bytes).unwrap().positions(), cloud.positions());
        }
    }

    #[test]
    fn minimal_ascii() {
        let text = "ply\nformat ascii 1.0\nelement vertex 3\nproperty float x\nproperty float y\nproperty float z\nend_header\n0 0 0\n1 0 0\n0 1 0.5\n";
        let cloud = parse_ply(text.as_bytes()).unwrap();
        assert_eq!(cloud.len(), 3);
        assert!(cloud.colors().is_none());
        assert_eq!(cloud.position(2), [0.0, 1.0, 0.5]);
    }

    #[test]
    fn missing_color_values_are_a_length_mismatch() {
        let text = "ply\nformat ascii 1.0\nelement vertex 5\nproperty float x\nproperty float y\nproperty float z\n\
                    property uchar red\nproperty uchar green\nproperty uchar blue\nend_header\n\
                    0 0 0 1 2 3\n1 0 0 1 2 3\n2 0 0 1 2 3\n3 0 0 1 2 3\n4 0 0\n";
        match parse_ply(text.as_bytes()).unwrap_err() {
            Error::Parse { kind, location, .. } => {
                assert_eq!(kind, ParseErrorKind::LengthMismatch);
                assert_eq!(location, Location::Line(15));
            }
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn non_finite_coordinate_names_offset() {
        let text = "ply\nformat ascii 1.0\nelement vertex 2\nproperty float x\nproperty float y\nproperty float z\nend_header\n0 0 0\nnan 0 0\n";
        match parse_ply(text.as_bytes()).unwrap_err() {
            Error::Parse { kind, location, .. } => {
                assert_eq!(kind, ParseErrorKind::NonFinite);
                assert_eq!(location, Location::Line(9));
            }
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn truncated_binary_reports_bytes() {
        let cloud = PointCloud::new(vec![[1.0, 2.0, 3.0]; 4]).unwrap();
        let bytes = write_ply(&cloud, PlyEncoding::BinaryLittleEndian);
        let err = parse_ply(&bytes[..bytes.len() - 3]).unwrap_err();
        assert!(matches!(
            err,
            Error::Parse {
                kind: ParseErrorKind::UnexpectedEof,
                location: Location::Byte(_),
                ..
            }
        ));
    }

    #[test]
    fn malformed_headers() {
        for text in [
            "plx\n",
            "ply\nformat ascii 1.0\nelement vertex 1\nproperty float x\nend_header\n0\n",
            "ply\nformat ascii 2.0\nend_header\n",
            "ply\nformat ascii 1.0\nproperty float x\nend_header\n",
            "ply\nformat ascii 1.0\nelement vertex 1\nproperty float x\nproperty float y\nproperty float z\n",
            "ply\nelement vertex 0\nproperty float x\nproperty float y\nproperty float z\nend_header\n",
        ] {
            let err = parse_ply(text.as_bytes()).unwrap_err();
            assert!(
                matches!(
                    err,
                    Error::Parse {
                        kind: ParseErrorKind::MalformedHeader,
                        ..
                    }
                ),
                "{text:?} -> {err}"
            );
        }
    }

    #[test]
    fn skips_face_elements_and_reads_big_endian() {
        let mut bytes = b"ply\nformat binary_big_endian 1.0\nelement face 1\nproperty list uchar int vertex_indices\n\
                          element vertex 1\nproperty double x\nproperty double y\nproperty double z\nproperty short gt_instance\nend_header\n"
            .to_vec();
        bytes.push(3);
        for i in [0i32, 1, 2] {
            bytes.extend_from_slice(&i.to_be_bytes());
        }
        for v in [0.25f64, -1.0, 3.5] {
            bytes.extend_from_slice(&v.to_be_bytes());
        }
        bytes.extend_from_slice(&7i16.to_be_bytes());
        let (cloud, enc) = parse_ply_with_encoding(&bytes).unwrap();
        assert_eq!(enc, PlyEncoding::BinaryBigEndian);
        assert_eq!(cloud.position(0), [0.25, -1.0, 3.5]);
        assert_eq!(cloud.gt_instance().unwrap(), &[7]);
    }

    #[test]
    fn huge_declared_count_does_not_allocate() {
        let text = "ply\nformat binary_little_endian 1.0\nelement vertex 18446744073709551615\nproperty float x\nproperty float y\nproperty float z\nend_header\n";
        assert!(parse_ply(text.as_bytes()).is_err());
    }

    #[test]
    fn ascii_round_trip_with_all_attributes() {
        let cloud = PointCloud::new(vec![[0.125, -3.5, 1e-3f32 as f64], [2.0, 0.0, 0.0]])
            .unwrap()
            .with_colors(vec![[0.0, 1.0, 51.0 / 255.0], [1.0, 1.0, 1.0]])
            .unwrap()
            .with_normals(vec![[0.0, 0.0, 1.0], [1.0, 0.0, 0.0]])
            .unwrap()
            .with_gt_instance(vec![-1, 4])
            .unwrap()
            .with_gt_semantic(vec![1, 2])
            .unwrap();
        let back = parse_ply(&write_ply(&cloud, PlyEncoding::Ascii)).unwrap();
        assert_eq!(back, cloud);
    }
}
