//! Minimal PLY reader for colored point clouds.
//!
//! Supports `ascii` and `binary_little_endian` bodies. Only the `vertex`
//! element is decoded; other elements (including list properties such as
//! faces) are parsed and skipped. Required vertex properties are `x`, `y`,
//! `z` (float or double) and `red`, `green`, `blue` (uchar).

use glam::Vec3;

use super::{PointCloudError, PointCloudFrame};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ScalarType {
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
    F32,
    F64,
}

impl ScalarType {
    fn parse(name: &str) -> Option<Self> {
        Some(match name {
            "char" | "int8" => Self::I8,
            "uchar" | "uint8" => Self::U8,
            "short" | "int16" => Self::I16,
            "ushort" | "uint16" => Self::U16,
            "int" | "int32" => Self::I32,
            "uint" | "uint32" => Self::U32,
            "float" | "float32" => Self::F32,
            "double" | "float64" => Self::F64,
            _ => return None,
        })
    }
}

#[derive(Debug)]
enum Property {
    Scalar { name: String, ty: ScalarType },
    List { count_ty: ScalarType, item_ty: ScalarType },
}

#[derive(Debug)]
struct Element {
    name: String,
    count: usize,
    properties: Vec<Property>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Encoding {
    Ascii,
    BinaryLittleEndian,
}

struct Header {
    encoding: Encoding,
    elements: Vec<Element>,
    body_offset: usize,
}

fn malformed(msg: impl Into<String>) -> PointCloudError {
    PointCloudError::MalformedPly(msg.into())
}

fn parse_header(bytes: &[u8]) -> Result<Header, PointCloudError> {
    const END: &[u8] = b"end_header";
    let end = bytes.windows(END.len()).position(|w| w == END).ok_or_else(|| malformed("missing end_header"))?;
    let mut body_offset = end + END.len();
    if bytes.get(body_offset) == Some(&b'\r') {
        body_offset += 1;
    }
    if bytes.get(body_offset) == Some(&b'\n') {
        body_offset += 1;
    }
    let text = std::str::from_utf8(&bytes[..end]).map_err(|_| malformed("header is not valid UTF-8"))?;
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
    if lines.next() != Some("ply") {
        return Err(malformed("missing `ply` signature"));
    }

    let mut encoding = None;
    let mut elements: Vec<Element> = Vec::new();
    for line in lines {
        let mut words = line.split_whitespace();
        match words.next() {
            Some("format") => {
                encoding = Some(match words.next() {
                    Some("ascii") => Encoding::Ascii,
                    Some("binary_little_endian") => Encoding::BinaryLittleEndian,
                    Some(other) => return Err(PointCloudError::UnsupportedEncoding(other.to_string())),
                    None => return Err(malformed("format line without encoding")),
                });
            }
            Some("element") => {
                let name = words.next().ok_or_else(|| malformed("element without name"))?;
                let count = words
                    .next()
                    .and_then(|c| c.parse().ok())
                    .ok_or_else(|| malformed(format!("element `{name}` without a valid count")))?;
                elements.push(Element { name: name.to_string(), count, properties: Vec::new() });
            }
            Some("property") => {
                let element = elements.last_mut().ok_or_else(|| malformed("property before any element"))?;
                let first = words.next().ok_or_else(|| malformed("empty property line"))?;
                let property = if first == "list" {
                    let count_ty = words.next().and_then(ScalarType::parse);
                    let item_ty = words.next().and_then(ScalarType::parse);
                    match (count_ty, item_ty, words.next()) {
                        (Some(count_ty), Some(item_ty), Some(_)) => Property::List { count_ty, item_ty },
                        _ => return Err(malformed(format!("bad list property: {line}"))),
                    }
                } else {
                    let ty = ScalarType::parse(first).ok_or_else(|| malformed(format!("unknown property type `{first}`")))?;
                    let name = words.next().ok_or_else(|| malformed("property without name"))?;
                    Property::Scalar { name: name.to_string(), ty }
                };
                element.properties.push(property);
            }
            Some("comment") | Some("obj_info") => {}
            Some(other) => return Err(malformed(format!("unexpected header keyword `{other}`"))),
            None => {}
        }
    }
    let encoding = encoding.ok_or_else(|| malformed("missing format line"))?;
    Ok(Header { encoding, elements, body_offset })
}

/// Sequential reader over the body, yielding numbers as f64.
trait BodyReader {
    fn read(&mut self, ty: ScalarType) -> Result<f64, PointCloudError>;
}

struct AsciiReader<'a> {
    tokens: std::str::SplitAsciiWhitespace<'a>,
}

impl BodyReader for AsciiReader<'_> {
    fn read(&mut self, ty: ScalarType) -> Result<f64, PointCloudError> {
        let token = self.tokens.next().ok_or_else(|| malformed("unexpected end of ASCII body"))?;
        let value: f64 = token.parse().map_err(|_| malformed(format!("bad number `{token}`")))?;
        if !matches!(ty, ScalarType::F32 | ScalarType::F64) && value.fract() != 0.0 {
            return Err(malformed(format!("expected integer, found `{token}`")));
        }
        Ok(value)
    }
}

struct BinaryReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl BinaryReader<'_> {
    fn take<const N: usize>(&mut self) -> Result<[u8; N], PointCloudError> {
        let chunk = self.bytes.get(self.pos..self.pos + N).ok_or_else(|| malformed("unexpected end of binary body"))?;
        self.pos += N;
        Ok(chunk.try_into().unwrap())
    }
}

impl BodyReader for BinaryReader<'_> {
    fn read(&mut self, ty: ScalarType) -> Result<f64, PointCloudError> {
        Ok(match ty {
            ScalarType::I8 => i8::from_le_bytes(self.take()?) as f64,
            ScalarType::U8 => u8::from_le_bytes(self.take()?) as f64,
            ScalarType::I16 => i16::from_le_bytes(self.take()?) as f64,
            ScalarType::U16 => u16::from_le_bytes(self.take()?) as f64,
            ScalarType::I32 => i32::from_le_bytes(self.take()?) as f64,
            ScalarType::U32 => u32::from_le_bytes(self.take()?) as f64,
            ScalarType::F32 => f32::from_le_bytes(self.take()?) as f64,
            ScalarType::F64 => f64::from_le_bytes(self.take()?),
        })
    }
}

struct VertexLayout {
    position: [usize; 3],
    color: [usize; 3],
}

fn vertex_layout(element: &Element) -> Result<VertexLayout, PointCloudError> {
    let find = |wanted: &'static str, accept: &[ScalarType]| {
        element
            .properties
            .iter()
            .position(|p| matches!(p, Property::Scalar { name, ty } if name == wanted && accept.contains(ty)))
            .ok_or(PointCloudError::MissingProperty(wanted))
    };
    let float = [ScalarType::F32, ScalarType::F64];
    let byte = [ScalarType::U8];
    Ok(VertexLayout {
        position: [find("x", &float)?, find("y", &float)?, find("z", &float)?],
        color: [find("red", &byte)?, find("green", &byte)?, find("blue", &byte)?],
    })
}

fn skip_element(reader: &mut dyn BodyReader, element: &Element) -> Result<(), PointCloudError> {
    for _ in 0..element.count {
        for property in &element.properties {
            match *property {
                Property::Scalar { ty, .. } => {
                    reader.read(ty)?;
                }
                Property::List { count_ty, item_ty } => {
                    let n = reader.read(count_ty)?;
                    for _ in 0..n as usize {
                        reader.read(item_ty)?;
                    }
                }
            }
        }
    }
    Ok(())
}

/// Parses a PLY point cloud. The frame's bbox is the tight bounds of the
/// imported points (degenerate at the origin for an empty cloud).
pub fn import_ply(bytes: &[u8]) -> Result<PointCloudFrame, PointCloudError> {
    let header = parse_header(bytes)?;
    let body = &bytes[header.body_offset..];

    let vertex_at = header.elements.iter().position(|e| e.name == "vertex").ok_or_else(|| malformed("no `vertex` element"))?;
    let vertex = &header.elements[vertex_at];
    let layout = vertex_layout(vertex)?;

    let mut ascii;
    let mut binary;
    let reader: &mut dyn BodyReader = match header.encoding {
        Encoding::Ascii => {
            let text = std::str::from_utf8(body).map_err(|_| malformed("ASCII body is not valid UTF-8"))?;
            ascii = AsciiReader { tokens: text.split_ascii_whitespace() };
            &mut ascii
        }
        Encoding::BinaryLittleEndian => {
            binary = BinaryReader { bytes: body, pos: 0 };
            &mut binary
        }
    };

    for element in &header.elements[..vertex_at] {
        skip_element(reader, element)?;
    }

    let mut positions = Vec::with_capacity(vertex.count);
    let mut colors = Vec::with_capacity(vertex.count);
    let mut values = vec![0.0f64; vertex.properties.len()];
    for _ in 0..vertex.count {
        for (slot, property) in values.iter_mut().zip(&vertex.properties) {
            *slot = match *property {
                Property::Scalar { ty, .. } => reader.read(ty)?,
                Property::List { count_ty, item_ty } => {
                    let n = reader.read(count_ty)?;
                    for _ in 0..n as usize {
                        reader.read(item_ty)?;
                    }
                    0.0
                }
            };
        }
        let [x, y, z] = layout.position.map(|i| values[i] as f32);
        positions.push(Vec3::new(x, y, z));
        colors.push(layout.color.map(|i| values[i] as u8));
    }
    if let Some(bad) = positions.iter().find(|p| !p.is_finite()) {
        return Err(malformed(format!("non-finite vertex position {bad:?}")));
    }
    PointCloudFrame::from_points(positions, colors)
}
