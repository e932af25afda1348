//! File ingestion: whitespace-separated edge lists, feature/label CSVs,
//! and PGM images (P2 ASCII and P5 binary, maxval 255).

use super::{build_graph, Graph, GraphError, SelfLoopPolicy};
use crate::Mat;
use std::fs;
use std::path::Path;

/// 8-bit grayscale image, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GrayImage {
    pub height: usize,
    pub width: usize,
    pub pixels: Vec<u8>,
}

impl GrayImage {
    pub fn new(height: usize, width: usize, pixels: Vec<u8>) -> Self {
        assert_eq!(pixels.len(), height * width);
        GrayImage { height, width, pixels }
    }
}

fn io_err(path: &Path, source: std::io::Error) -> GraphError {
    GraphError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> GraphError {
    GraphError::Parse {
        path: path.display().to_string(),
        line,
        msg: msg.into(),
    }
}

/// Loads a graph from an edge list plus optional feature and label CSVs.
///
/// Edge list: one `u v` pair per line (0-based, whitespace-separated);
/// blank lines are skipped. Features: one CSV row of reals per node.
/// Labels: one class index per node. `n` is the feature/label row count
/// when either file is given, otherwise max endpoint + 1.
pub fn load_dataset(
    edge_path: &Path,
    feature_path: Option<&Path>,
    label_path: Option<&Path>,
    has_header: bool,
) -> Result<Graph, GraphError> {
    let edge_text = fs::read_to_string(edge_path).map_err(|e| io_err(edge_path, e))?;
    let mut edges = Vec::new();
    let mut max_endpoint = 0usize;
    for (idx, line) in edge_text.lines().enumerate() {
        let line_no = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let mut it = trimmed.split_whitespace();
        let u = parse_index(it.next(), edge_path, line_no, "missing source endpoint")?;
        let v = parse_index(it.next(), edge_path, line_no, "missing target endpoint")?;
        if let Some(extra) = it.next() {
            return Err(parse_err(
                edge_path,
                line_no,
                format!("unexpected trailing token {extra:?}"),
            ));
        }
        max_endpoint = max_endpoint.max(u).max(v);
        edges.push((u, v));
    }

    let features = feature_path
        .map(|p| read_float_csv(p, has_header))
        .transpose()?;
    let labels = label_path.map(|p| read_label_csv(p, has_header)).transpose()?;

    let mut n = if edges.is_empty() { 0 } else { max_endpoint + 1 };
    if let Some(f) = &features {
        if f.rows() < n {
            return Err(GraphError::CountMismatch {
                path: feature_path.unwrap().display().to_string(),
                got: f.rows(),
                expected: n,
            });
        }
        n = f.rows();
    }
    if let Some(l) = &labels {
        if l.len() < n {
            return Err(GraphError::CountMismatch {
                path: label_path.unwrap().display().to_string(),
                got: l.len(),
                expected: n,
            });
        }
        n = l.len();
    }
    if let (Some(f), Some(l)) = (&features, &labels) {
        if f.rows() != l.len() {
            return Err(GraphError::CountMismatch {
                path: label_path.unwrap().display().to_string(),
                got: l.len(),
                expected: f.rows(),
            });
        }
    }

    let mut graph = build_graph(&edges, n, SelfLoopPolicy::Reject)?;
    if let Some(f) = features {
        graph = graph.with_features(f)?;
    }
    if let Some(l) = labels {
        graph = graph.with_labels(l)?;
    }
    Ok(graph)
}

fn parse_index(
    tok: Option<&str>,
    path: &Path,
    line: usize,
    missing: &str,
) -> Result<usize, GraphError> {
    let tok = tok.ok_or_else(|| parse_err(path, line, missing))?;
    tok.parse::<usize>()
        .map_err(|_| parse_err(path, line, format!("invalid node index {tok:?}")))
}

fn read_float_csv(path: &Path, has_header: bool) -> Result<Mat, GraphError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        if has_header && idx == 0 {
            continue;
        }
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let mut row = Vec::new();
        for field in trimmed.split(',') {
            let field = field.trim();
            row.push(field.parse::<f64>().map_err(|_| {
                parse_err(path, line_no, format!("invalid real value {field:?}"))
            })?);
        }
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(parse_err(
                    path,
                    line_no,
                    format!("expected {} columns, got {}", first.len(), row.len()),
                ));
            }
        }
        rows.push(row);
    }
    Ok(Mat::from_rows(&rows))
}

fn read_label_csv(path: &Path, has_header: bool) -> Result<Vec<usize>, GraphError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let mut labels = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        if has_header && idx == 0 {
            continue;
        }
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        labels.push(trimmed.parse::<usize>().map_err(|_| {
            parse_err(path, line_no, format!("invalid class index {trimmed:?}"))
        })?);
    }
    Ok(labels)
}

/// Reads a PGM image. Both the ASCII (P2) and binary (P5) variants are
/// accepted; maxval must be 255.
pub fn read_pgm(path: &Path) -> Result<GrayImage, GraphError> {
    let bytes = fs::read(path).map_err(|e| io_err(path, e))?;
    let mut cursor = 0usize;
    let magic = next_token(&bytes, &mut cursor)
        .ok_or_else(|| parse_err(path, 1, "missing PGM magic number"))?;
    let binary = match magic.as_str() {
        "P2" => false,
        "P5" => true,
        other => {
            return Err(parse_err(
                path,
                1,
                format!("unsupported magic {other:?}, expected P2 or P5"),
            ))
        }
    };
    let width = parse_header_int(&bytes, &mut cursor, path, "width")?;
    let height = parse_header_int(&bytes, &mut cursor, path, "height")?;
    let maxval = parse_header_int(&bytes, &mut cursor, path, "maxval")?;
    if maxval != 255 {
        return Err(parse_err(path, 1, format!("maxval must be 255, got {maxval}")));
    }
    if width == 0 || height == 0 {
        return Err(GraphError::ImageTooSmall { height, width });
    }
    let count = width * height;
    let pixels = if binary {
        // Single whitespace byte separates the header from raster data.
        let data = &bytes[cursor + 1..];
        if data.len() < count {
            return Err(parse_err(
                path,
                1,
                format!("raster truncated: {} of {count} bytes", data.len()),
            ));
        }
        data[..count].to_vec()
    } else {
        let mut pixels = Vec::with_capacity(count);
        while pixels.len() < count {
            let tok = next_token(&bytes, &mut cursor).ok_or_else(|| {
                parse_err(path, 1, format!("raster truncated: {} of {count} samples", pixels.len()))
            })?;
            let v: usize = tok
                .parse()
                .map_err(|_| parse_err(path, 1, format!("invalid sample {tok:?}")))?;
            if v > 255 {
                return Err(parse_err(path, 1, format!("sample {v} exceeds maxval 255")));
            }
            pixels.push(v as u8);
        }
        pixels
    };
    Ok(GrayImage { height, width, pixels })
}

/// Writes an ASCII (P2) PGM file.
pub fn write_pgm(path: &Path, img: &GrayImage) -> Result<(), GraphError> {
    let mut out = format!("P2\n{} {}\n255\n", img.width, img.height);
    for row in 0..img.height {
        let line: Vec<String> = img.pixels[row * img.width..(row + 1) * img.width]
            .iter()
            .map(|p| p.to_string())
            .collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| io_err(path, e))
}

/// Next whitespace-delimited token, skipping `#` comments to end of line.
fn next_token(bytes: &[u8], cursor: &mut usize) -> Option<String> {
    let mut i = *cursor;
    loop {
        while i < bytes.len() && bytes[i].is_ascii_whitespace() {
            i += 1;
        }
        if i < bytes.len() && bytes[i] == b'#' {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        break;
    }
    if i >= bytes.len() {
        return None;
    }
    let start = i;
    while i < bytes.len() && !bytes[i].is_ascii_whitespace() {
        i += 1;
    }
    *cursor = i;
    Some(String::from_utf8_lossy(&bytes[start..i]).into_owned())
}

fn parse_header_int(
    bytes: &[u8],
    cursor: &mut usize,
    path: &Path,
    what: &str,
) -> Result<usize, GraphError> {
    let tok = next_token(bytes, cursor)
        .ok_or_else(|| parse_err(path, 1, format!("missing {what} in PGM header")))?;
    tok.parse::<usize>()
        .map_err(|_| parse_err(path, 1, format!("invalid {what} {tok:?}")))
}
