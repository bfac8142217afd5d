//! Minimal PLY support: a single `vertex` element with scalar properties,
//! binary little-endian or ASCII, format version 1.0.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScalarType {
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
    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "char" | "int8" => ScalarType::I8,
            "uchar" | "uint8" => ScalarType::U8,
            "short" | "int16" => ScalarType::I16,
            "ushort" | "uint16" => ScalarType::U16,
            "int" | "int32" => ScalarType::I32,
            "uint" | "uint32" => ScalarType::U32,
            "float" | "float32" => ScalarType::F32,
            "double" | "float64" => ScalarType::F64,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            ScalarType::I8 => "char",
            ScalarType::U8 => "uchar",
            ScalarType::I16 => "short",
            ScalarType::U16 => "ushort",
            ScalarType::I32 => "int",
            ScalarType::U32 => "uint",
            ScalarType::F32 => "float",
            ScalarType::F64 => "double",
        }
    }

    fn size(self) -> usize {
        match self {
            ScalarType::I8 | ScalarType::U8 => 1,
            ScalarType::I16 | ScalarType::U16 => 2,
            ScalarType::I32 | ScalarType::U32 | ScalarType::F32 => 4,
            ScalarType::F64 => 8,
        }
    }

    fn decode(self, b: &[u8]) -> f64 {
        match self {
            ScalarType::I8 => b[0] as i8 as f64,
            ScalarType::U8 => b[0] as f64,
            ScalarType::I16 => i16::from_le_bytes([b[0], b[1]]) as f64,
            ScalarType::U16 => u16::from_le_bytes([b[0], b[1]]) as f64,
            ScalarType::I32 => i32::from_le_bytes(b[..4].try_into().unwrap()) as f64,
            ScalarType::U32 => u32::from_le_bytes(b[..4].try_into().unwrap()) as f64,
            ScalarType::F32 => f32::from_le_bytes(b[..4].try_into().unwrap()) as f64,
            ScalarType::F64 => f64::from_le_bytes(b[..8].try_into().unwrap()),
        }
    }

    fn encode(self, v: f64, out: &mut Vec<u8>) {
        match self {
            ScalarType::I8 => out.push(v as i8 as u8),
            ScalarType::U8 => out.push(v as u8),
            ScalarType::I16 => out.extend((v as i16).to_le_bytes()),
            ScalarType::U16 => out.extend((v as u16).to_le_bytes()),
            ScalarType::I32 => out.extend((v as i32).to_le_bytes()),
            ScalarType::U32 => out.extend((v as u32).to_le_bytes()),
            ScalarType::F32 => out.extend((v as f32).to_le_bytes()),
            ScalarType::F64 => out.extend(v.to_le_bytes()),
        }
    }
}

/// Vertex table: named columns, row-major values.
#[derive(Clone, Debug, PartialEq)]
pub struct VertexTable {
    pub properties: Vec<(String, ScalarType)>,
    pub rows: usize,
    pub data: Vec<f64>,
}

impl VertexTable {
    pub fn column(&self, name: &str) -> Option<usize> {
        self.properties.iter().position(|(n, _)| n == name)
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.properties.len() + col]
    }

    /// Index of a column that must exist.
    pub fn require(&self, name: &str) -> Result<usize> {
        self.column(name)
            .ok_or_else(|| Error::MalformedPly(format!("missing vertex property `{name}`")))
    }
}

pub fn write_binary<W: Write>(mut w: W, table: &VertexTable) -> Result<()> {
    let mut header = String::from("ply\nformat binary_little_endian 1.0\n");
    header.push_str(&format!("element vertex {}\n", table.rows));
    for (name, ty) in &table.properties {
        header.push_str(&format!("property {} {name}\n", ty.name()));
    }
    header.push_str("end_header\n");
    w.write_all(header.as_bytes())?;
    let ncol = table.properties.len();
    let mut buf = Vec::with_capacity(table.rows * ncol * 8);
    for row in table.data.chunks(ncol.max(1)) {
        for (v, (_, ty)) in row.iter().zip(&table.properties) {
            ty.encode(*v, &mut buf);
        }
    }
    w.write_all(&buf)?;
    Ok(())
}

enum Format {
    BinaryLe,
    Ascii,
}

pub fn read<R: BufRead>(mut r: R) -> Result<VertexTable> {
    let mut line = String::new();
    let next_line = |r: &mut R, line: &mut String| -> Result<()> {
        line.clear();
        if r.read_line(line)? == 0 {
            return Err(Error::MalformedPly("unexpected end of header".into()));
        }
        Ok(())
    };
    next_line(&mut r, &mut line)?;
    if line.trim_end() != "ply" {
        return Err(Error::MalformedPly("missing `ply` magic".into()));
    }
    let mut format = None;
    let mut rows = None;
    let mut in_vertex = false;
    let mut properties = Vec::new();
    loop {
        next_line(&mut r, &mut line)?;
        let parts: Vec<&str> = line.split_whitespace().collect();
        match parts.as_slice() {
            ["end_header"] => break,
            ["comment", ..] | ["obj_info", ..] | [] => {}
            ["format", f, v] => {
                if *v != "1.0" {
                    return Err(Error::UnsupportedVersion(format!("PLY format version {v}")));
                }
                format = Some(match *f {
                    "binary_little_endian" => Format::BinaryLe,
                    "ascii" => Format::Ascii,
                    other => return Err(Error::UnsupportedVersion(format!("PLY encoding {other}"))),
                });
            }
            ["element", name, n] => {
                if *name != "vertex" {
                    return Err(Error::MalformedPly(format!("unsupported element `{name}`")));
                }
                rows = Some(
                    n.parse::<usize>()
                        .map_err(|_| Error::MalformedPly(format!("bad vertex count `{n}`")))?,
                );
                in_vertex = true;
            }
            ["property", "list", ..] => {
                return Err(Error::MalformedPly("list properties are not supported".into()));
            }
            ["property", ty, name] if in_vertex => {
                let t = ScalarType::parse(ty)
                    .ok_or_else(|| Error::MalformedPly(format!("unknown property type `{ty}`")))?;
                properties.push((name.to_string(), t));
            }
            _ => return Err(Error::MalformedPly(format!("unexpected header line `{}`", line.trim_end()))),
        }
    }
    let format = format.ok_or_else(|| Error::MalformedPly("missing format line".into()))?;
    let rows = rows.ok_or_else(|| Error::MalformedPly("missing vertex element".into()))?;
    let ncol = properties.len();
    let mut data = Vec::with_capacity(rows * ncol);
    match format {
        Format::BinaryLe => {
            let stride: usize = properties.iter().map(|(_, t)| t.size()).sum();
            let mut bytes = vec![0u8; stride * rows];
            r.read_exact(&mut bytes).map_err(|_| {
                Error::MalformedPly(format!("truncated body: expected {rows} vertices of {stride} bytes"))
            })?;
            for row in bytes.chunks_exact(stride.max(1)).take(rows) {
                let mut off = 0;
                for (_, t) in &properties {
                    data.push(t.decode(&row[off..]));
                    off += t.size();
                }
            }
        }
        Format::Ascii => {
            let mut body = String::new();
            r.read_to_string(&mut body)?;
            let mut tokens = body.split_whitespace();
            for _ in 0..rows * ncol {
                let tok = tokens
                    .next()
                    .ok_or_else(|| Error::MalformedPly(format!("truncated body: expected {rows} vertices")))?;
                data.push(
                    tok.parse::<f64>()
                        .map_err(|_| Error::MalformedPly(format!("bad value `{tok}`")))?,
                );
            }
        }
    }
    Ok(VertexTable { properties, rows, data })
}
