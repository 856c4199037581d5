//! Plain-text vectors and matrices, binary PGM images.
//!
//! Text files take whitespace- or comma-separated numbers; lines starting with
//! `#` are comments except for the `# rows cols` matrix header. Floats are
//! written in the shortest form that reads back to the same value.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::field::fmt_exact;
use crate::linalg::Matrix;

fn io_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Io(format!("{}: {e}", path.display()))
}

fn parse_line(line: &str, lineno: usize) -> Result<Vec<f64>> {
    line.split(|c: char| c.is_whitespace() || c == ',')
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<f64>().map_err(|_| Error::Io(format!("line {lineno}: '{t}' is not a number"))))
        .collect()
}

/// All numbers in the text, in order.
pub fn parse_vector(text: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        out.extend(parse_line(line, i + 1)?);
    }
    Ok(out)
}

pub fn read_vector(path: &Path) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    parse_vector(&text).map_err(|e| io_err(path, e))
}

pub fn format_vector(v: &[f64]) -> String {
    v.iter().map(|&x| fmt_exact(x) + "\n").collect()
}

pub fn write_vector(path: &Path, v: &[f64]) -> Result<()> {
    fs::write(path, format_vector(v)).map_err(|e| io_err(path, e))
}

fn header(line: &str) -> Option<(usize, usize)> {
    let mut it = line.trim_start_matches('#').split_whitespace();
    let r = it.next()?.parse().ok()?;
    let c = it.next()?.parse().ok()?;
    it.next().is_none().then_some((r, c))
}

/// One row per line. A `# rows cols` header, when present, is checked
/// against the data.
pub fn parse_matrix(text: &str) -> Result<Matrix> {
    let mut declared = None;
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('#') {
            if declared.is_none() && rows.is_empty() {
                declared = header(line);
            }
            continue;
        }
        rows.push(parse_line(line, i + 1)?);
    }
    let m = Matrix::from_rows(&rows)?;
    if let Some((r, c)) = declared {
        if m.shape() != (r, c) {
            return Err(Error::Shape(format!("header says {r}x{c}, data is {}x{}", m.nrows(), m.ncols())));
        }
    }
    Ok(m)
}

pub fn format_matrix(m: &Matrix) -> String {
    let mut s = format!("# {} {}\n", m.nrows(), m.ncols());
    for i in 0..m.nrows() {
        let row: Vec<String> = m.row(i).iter().map(|&x| fmt_exact(x)).collect();
        s.push_str(&row.join(" "));
        s.push('\n');
    }
    s
}

pub fn read_matrix(path: &Path) -> Result<Matrix> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    parse_matrix(&text).map_err(|e| io_err(path, e))
}

pub fn write_matrix(path: &Path, m: &Matrix) -> Result<()> {
    fs::write(path, format_matrix(m)).map_err(|e| io_err(path, e))
}

/// Decode a binary PGM (P5). Pixel values are returned unscaled.
pub fn decode_pgm(bytes: &[u8]) -> Result<Matrix> {
    // header: magic, width, height, maxval separated by whitespace and comments
    let mut pos = 0;
    let mut fields = Vec::new();
    while fields.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if pos < bytes.len() && bytes[pos] == b'#' {
            while pos < bytes.len() && bytes[pos] != b'\n' {
                pos += 1;
            }
            continue;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::Io("truncated PGM header".into()));
        }
        fields.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
    }
    if fields[0] != "P5" {
        return Err(Error::Io(format!("not a binary PGM (magic '{}')", fields[0])));
    }
    let num = |s: &str, what: &str| -> Result<usize> {
        s.parse().map_err(|_| Error::Io(format!("bad PGM {what} '{s}'")))
    };
    let (w, h, maxval) = (num(&fields[1], "width")?, num(&fields[2], "height")?, num(&fields[3], "maxval")?);
    if maxval == 0 || maxval > 65535 {
        return Err(Error::Io(format!("PGM maxval {maxval} outside 1..=65535")));
    }
    // exactly one whitespace byte before the raster
    pos += 1;
    let bpp = if maxval < 256 { 1 } else { 2 };
    let raster = bytes.get(pos..).unwrap_or(&[]);
    if raster.len() < w * h * bpp {
        return Err(Error::Io(format!("PGM raster has {} bytes, need {}", raster.len(), w * h * bpp)));
    }
    let data = (0..w * h)
        .map(|k| match bpp {
            1 => raster[k] as f64,
            _ => u16::from_be_bytes([raster[2 * k], raster[2 * k + 1]]) as f64,
        })
        .collect();
    Matrix::from_vec(h, w, data)
}

/// Encode as P5, scaling linearly so the largest pixel maps to `maxval`.
/// Negative pixels are an error.
pub fn encode_pgm(m: &Matrix, maxval: u16) -> Result<Vec<u8>> {
    if maxval == 0 {
        return Err(Error::param("maxval", "need 1..=65535"));
    }
    if let Some(i) = m.as_slice().iter().position(|v| !(*v >= 0.0 && v.is_finite())) {
        return Err(Error::domain(i, format!("pixel {i} = {}, need >= 0", m.as_slice()[i])));
    }
    let top = m.as_slice().iter().cloned().fold(0.0, f64::max);
    let scale = if top > 0.0 { maxval as f64 / top } else { 0.0 };
    let mut out = format!("P5\n{} {}\n{}\n", m.ncols(), m.nrows(), maxval).into_bytes();
    for &v in m.as_slice() {
        let p = (v * scale).round().min(maxval as f64) as u16;
        if maxval < 256 {
            out.push(p as u8);
        } else {
            out.extend_from_slice(&p.to_be_bytes());
        }
    }
    Ok(out)
}

pub fn read_pgm(path: &Path) -> Result<Matrix> {
    let bytes = fs::read(path).map_err(|e| io_err(path, e))?;
    decode_pgm(&bytes).map_err(|e| io_err(path, e))
}

pub fn write_pgm(path: &Path, m: &Matrix, maxval: u16) -> Result<()> {
    fs::write(path, encode_pgm(m, maxval)?).map_err(|e| io_err(path, e))
}

/// A PGM image or a text grid, by content.
pub fn read_image(path: &Path) -> Result<Matrix> {
    let bytes = fs::read(path).map_err(|e| io_err(path, e))?;
    if bytes.starts_with(b"P5") {
        decode_pgm(&bytes).map_err(|e| io_err(path, e))
    } else {
        let text = String::from_utf8(bytes).map_err(|e| io_err(path, e))?;
        parse_matrix(&text).map_err(|e| io_err(path, e))
    }
}

/// PGM for `.pgm` paths, a text grid otherwise.
pub fn write_image(path: &Path, m: &Matrix) -> Result<()> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("pgm") => write_pgm(path, m, 65535),
        _ => write_matrix(path, m),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vector_text() {
        assert_eq!(parse_vector("# p\n2 1\n\n3,4\n").unwrap(), vec![2.0, 1.0, 3.0, 4.0]);
        assert!(parse_vector("1 x").is_err());
    }

    #[test]
    fn matrix_round_trip() {
        let m = Matrix::from_rows(&[vec![0.1, 1.0 / 3.0, 2e-300], vec![-5.0, 1e20, 7.0]]).unwrap();
        let s = format_matrix(&m);
        assert!(s.starts_with("# 2 3\n"));
        assert_eq!(parse_matrix(&s).unwrap(), m);
        assert!(matches!(parse_matrix("# 3 3\n1 2 3\n"), Err(Error::Shape(_))));
        assert!(parse_matrix("1 2\n3\n").is_err());
    }

    #[test]
    fn pgm_round_trip() {
        let m = Matrix::from_fn(3, 4, |i, j| (i * 4 + j) as f64 * 10.0);
        for maxval in [110u16, 65535] {
            let back = decode_pgm(&encode_pgm(&m, maxval).unwrap()).unwrap();
            assert_eq!(back.shape(), (3, 4));
            let scale = maxval as f64 / 110.0;
            for (a, b) in back.as_slice().iter().zip(m.as_slice()) {
                assert_eq!(*a, (b * scale).round());
            }
        }
        assert!(decode_pgm(b"P2\n1 1\n255\n0").is_err());
        assert!(decode_pgm(b"P5\n# c\n2 2\n255\n\x01").is_err());
    }
}
