//! Input formats.
//!
//! Delimited files: comma separated by default, dot decimal, optional header
//! row (detected when the first row has a cell that is neither numeric nor a
//! missing-value token). Missing values are empty cells and `NA`, `NaN`,
//! `null`, `N/A` (any case). Every row must have the same number of fields.
//! Errors carry 1-based line numbers.

use std::fs;
use std::path::{Path, PathBuf};

use concord_core::image::Image;
use concord_core::temporal::LongitudinalSample;
use concord_core::PairedSample;
use nalgebra::{DMatrix, DVector};

use crate::error::{CliError, CliResult};

const NA_TOKENS: [&str; 4] = ["na", "nan", "null", "n/a"];

fn is_na(cell: &str) -> bool {
    let t = cell.trim();
    t.is_empty() || NA_TOKENS.iter().any(|na| t.eq_ignore_ascii_case(na))
}

fn parse_number(cell: &str) -> Option<f64> {
    cell.trim().parse::<f64>().ok().filter(|v| v.is_finite())
}

fn read_err(path: &Path, source: std::io::Error) -> CliError {
    CliError::Read { path: path.to_path_buf(), source }
}

fn parse_err(path: &Path, line: u64, message: impl Into<String>) -> CliError {
    CliError::Parse { path: path.to_path_buf(), line, message: message.into() }
}

/// Column reference: a header name, or a 0-based position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Column {
    Index(usize),
    Name(String),
}

impl std::str::FromStr for Column {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s.trim().parse::<usize>() {
            Ok(i) => Self::Index(i),
            Err(_) => Self::Name(s.trim().to_string()),
        })
    }
}

impl std::fmt::Display for Column {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Index(i) => write!(f, "#{i}"),
            Self::Name(n) => f.write_str(n),
        }
    }
}

/// Raw delimited table: optional header plus string cells with line numbers.
#[derive(Debug, Clone)]
pub struct Table {
    pub path: PathBuf,
    pub header: Option<Vec<String>>,
    pub rows: Vec<(u64, Vec<String>)>,
}

impl Table {
    pub fn read(path: &Path, delimiter: u8) -> CliResult<Self> {
        let file = fs::File::open(path).map_err(|e| read_err(path, e))?;
        let mut reader =
            csv::ReaderBuilder::new().has_headers(false).flexible(true).delimiter(delimiter).comment(Some(b'#')).from_reader(file);
        let mut records = Vec::new();
        let mut width = None;
        for rec in reader.records() {
            let rec = rec.map_err(|e| {
                let line = e.position().map_or(0, |p| p.line());
                parse_err(path, line, e.to_string())
            })?;
            let line = rec.position().map_or(0, |p| p.line());
            if rec.len() == 1 && rec[0].trim().is_empty() {
                continue;
            }
            let cells: Vec<String> = rec.iter().map(|c| c.trim().to_string()).collect();
            match width {
                None => width = Some(cells.len()),
                Some(w) if w != cells.len() => {
                    return Err(parse_err(path, line, format!("expected {w} fields, found {}", cells.len())));
                }
                _ => {}
            }
            records.push((line, cells));
        }
        let header = match records.first() {
            Some((_, first)) if first.iter().any(|c| !is_na(c) && parse_number(c).is_none()) => Some(records.remove(0).1),
            _ => None,
        };
        Ok(Self { path: path.to_path_buf(), header, rows: records })
    }

    pub fn width(&self) -> usize {
        self.header.as_ref().map(Vec::len).or_else(|| self.rows.first().map(|r| r.1.len())).unwrap_or(0)
    }

    pub fn resolve(&self, col: &Column) -> CliResult<usize> {
        match col {
            Column::Index(i) if *i < self.width() => Ok(*i),
            Column::Index(i) => {
                Err(CliError::Config(format!("{}: column #{i} does not exist ({} columns)", self.path.display(), self.width())))
            }
            Column::Name(name) => match &self.header {
                Some(h) => h
                    .iter()
                    .position(|c| c == name)
                    .ok_or_else(|| CliError::Config(format!("{}: no column named {name:?}", self.path.display()))),
                None => Err(CliError::Config(format!("{}: column {name:?} requested but the file has no header", self.path.display()))),
            },
        }
    }

    /// Numeric value of one cell; `None` for a missing-value token.
    pub fn cell(&self, row: usize, col: usize) -> CliResult<Option<f64>> {
        let (line, cells) = &self.rows[row];
        let raw = &cells[col];
        if is_na(raw) {
            return Ok(None);
        }
        parse_number(raw)
            .map(Some)
            .ok_or_else(|| parse_err(&self.path, *line, format!("non-numeric value {raw:?} in column {:?}", self.column_label(col))))
    }

    fn column_label(&self, col: usize) -> String {
        match &self.header {
            Some(h) => h[col].clone(),
            None => format!("#{col}"),
        }
    }

    /// Complete-case rows over the given columns, in file order, and the
    /// number of rows dropped for a missing value.
    pub fn complete_cases(&self, cols: &[usize]) -> CliResult<(Vec<Vec<f64>>, usize)> {
        let mut out = Vec::with_capacity(self.rows.len());
        let mut dropped = 0;
        for r in 0..self.rows.len() {
            let mut vals = Vec::with_capacity(cols.len());
            for &c in cols {
                vals.push(self.cell(r, c)?);
            }
            if vals.iter().all(Option::is_some) {
                out.push(vals.into_iter().flatten().collect());
            } else {
                dropped += 1;
            }
        }
        Ok((out, dropped))
    }
}

/// Complete-case paired sample read from two columns.
#[derive(Debug, Clone)]
pub struct IngestedPairs {
    pub sample: PairedSample,
    pub dropped: usize,
    pub x_name: String,
    pub y_name: String,
}

pub fn ingest_pairs(path: &Path, x: &Column, y: &Column, delimiter: u8) -> CliResult<IngestedPairs> {
    let table = Table::read(path, delimiter)?;
    if table.rows.len() < 2 {
        return Err(CliError::Input {
            path: path.to_path_buf(),
            source: concord_core::Error::InsufficientData { needed: 2, got: table.rows.len() },
        });
    }
    let (ix, iy) = (table.resolve(x)?, table.resolve(y)?);
    let (rows, dropped) = table.complete_cases(&[ix, iy])?;
    let (xs, ys): (Vec<f64>, Vec<f64>) = rows.into_iter().map(|r| (r[0], r[1])).unzip();
    if xs.len() < 2 {
        return Err(CliError::Input {
            path: path.to_path_buf(),
            source: concord_core::Error::InsufficientData { needed: 2, got: xs.len() },
        });
    }
    let sample = PairedSample::new(xs, ys).map_err(|source| CliError::Input { path: path.to_path_buf(), source })?;
    Ok(IngestedPairs { sample, dropped, x_name: table.column_label(ix), y_name: table.column_label(iy) })
}

/// Complete-case `n × p` blocks for two column groups of equal size.
pub fn ingest_vector_pairs(path: &Path, x: &[Column], y: &[Column], delimiter: u8) -> CliResult<(DMatrix<f64>, DMatrix<f64>, usize)> {
    if x.is_empty() || x.len() != y.len() {
        return Err(CliError::Config(format!("need equally many x and y columns, got {} and {}", x.len(), y.len())));
    }
    let table = Table::read(path, delimiter)?;
    let cols: Vec<usize> = x.iter().chain(y).map(|c| table.resolve(c)).collect::<CliResult<_>>()?;
    let (rows, dropped) = table.complete_cases(&cols)?;
    let p = x.len();
    let xm = DMatrix::from_fn(rows.len(), p, |i, j| rows[i][j]);
    let ym = DMatrix::from_fn(rows.len(), p, |i, j| rows[i][p + j]);
    Ok((xm, ym, dropped))
}

/// Field values on a regular grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridData {
    /// `ny × nx`, row `i` holding the sites with the i-th y coordinate.
    pub values: DMatrix<f64>,
    pub spacing: f64,
}

/// Grid file: either a CSV whose first line is `nx,ny,spacing` (optionally
/// preceded by that literal header) followed by `ny` rows of `nx` values,
/// or a plain whitespace-separated matrix whose spacing is `default_spacing`.
pub fn read_grid(path: &Path, default_spacing: f64) -> CliResult<GridData> {
    let text = fs::read_to_string(path).map_err(|e| read_err(path, e))?;
    let lines: Vec<(u64, &str)> =
        text.lines().enumerate().map(|(i, l)| (i as u64 + 1, l.trim())).filter(|(_, l)| !l.is_empty() && !l.starts_with('#')).collect();
    let Some(&(_, first)) = lines.first() else {
        return Err(parse_err(path, 1, "empty grid file"));
    };
    if first.contains(',') {
        let mut it = lines.into_iter().peekable();
        if let Some((_, l)) = it.peek() {
            if l.replace(' ', "").eq_ignore_ascii_case("nx,ny,spacing") {
                it.next();
            }
        }
        let (line, dims) = it.next().ok_or_else(|| parse_err(path, 1, "missing nx,ny,spacing line"))?;
        let f: Vec<&str> = dims.split(',').map(str::trim).collect();
        let bad = || parse_err(path, line, format!("expected `nx,ny,spacing`, found {dims:?}"));
        if f.len() != 3 {
            return Err(bad());
        }
        let nx: usize = f[0].parse().map_err(|_| bad())?;
        let ny: usize = f[1].parse().map_err(|_| bad())?;
        let spacing = parse_number(f[2]).ok_or_else(bad)?;
        let rows: Vec<(u64, &str)> = it.collect();
        if rows.len() != ny {
            return Err(parse_err(path, line, format!("header declares {ny} rows, found {}", rows.len())));
        }
        let mut values = DMatrix::zeros(ny, nx);
        for (i, (line, row)) in rows.iter().enumerate() {
            let cells: Vec<&str> = row.split(',').collect();
            if cells.len() != nx {
                return Err(parse_err(path, *line, format!("expected {nx} values, found {}", cells.len())));
            }
            for (j, c) in cells.iter().enumerate() {
                values[(i, j)] = parse_number(c).ok_or_else(|| parse_err(path, *line, format!("non-numeric value {c:?}")))?;
            }
        }
        Ok(GridData { values, spacing })
    } else {
        Ok(GridData { values: parse_matrix(path, &lines)?, spacing: default_spacing })
    }
}

fn parse_matrix(path: &Path, lines: &[(u64, &str)]) -> CliResult<DMatrix<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(lines.len());
    for (line, l) in lines {
        let row = l
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|s| !s.is_empty())
            .map(|c| parse_number(c).ok_or_else(|| parse_err(path, *line, format!("non-numeric value {c:?}"))))
            .collect::<CliResult<Vec<f64>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(parse_err(path, *line, format!("expected {} values, found {}", first.len(), row.len())));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() || rows[0].is_empty() {
        return Err(parse_err(path, 1, "empty matrix"));
    }
    Ok(DMatrix::from_fn(rows.len(), rows[0].len(), |i, j| rows[i][j]))
}

/// Symmetric 0/1 adjacency from an edge-list CSV of 0-based node pairs.
/// `nodes` defaults to one more than the largest id.
pub fn read_edge_list(path: &Path, nodes: Option<usize>) -> CliResult<DMatrix<f64>> {
    let table = Table::read(path, b',')?;
    if table.width() != 2 {
        return Err(CliError::Config(format!("{}: edge list needs exactly two columns", path.display())));
    }
    let mut edges = Vec::with_capacity(table.rows.len());
    for (line, cells) in &table.rows {
        let id = |c: &str| c.parse::<usize>().map_err(|_| parse_err(path, *line, format!("invalid node id {c:?}")));
        let (a, b) = (id(&cells[0])?, id(&cells[1])?);
        if a == b {
            return Err(parse_err(path, *line, format!("self-loop at node {a}")));
        }
        edges.push((a, b));
    }
    let max_id = edges.iter().map(|&(a, b)| a.max(b)).max();
    let n = match (nodes, max_id) {
        (Some(n), Some(m)) if m >= n => {
            return Err(CliError::Config(format!("node id {m} is out of range for {n} nodes")));
        }
        (Some(n), _) => n,
        (None, Some(m)) => m + 1,
        (None, None) => return Err(CliError::Config(format!("{}: no edges and no node count", path.display()))),
    };
    let mut w = DMatrix::zeros(n, n);
    for (a, b) in edges {
        w[(a, b)] = 1.0;
        w[(b, a)] = 1.0;
    }
    Ok(w)
}

/// Two mean vectors from a two-column file (μ₁, μ₂), one row per node.
pub fn read_means(path: &Path, nodes: usize) -> CliResult<(DVector<f64>, DVector<f64>)> {
    let table = Table::read(path, b',')?;
    if table.width() != 2 {
        return Err(CliError::Config(format!("{}: means file needs two columns", path.display())));
    }
    let (rows, dropped) = table.complete_cases(&[0, 1])?;
    if dropped > 0 || rows.len() != nodes {
        return Err(CliError::Config(format!(
            "{}: expected {nodes} complete rows, found {} ({dropped} incomplete)",
            path.display(),
            rows.len()
        )));
    }
    Ok((DVector::from_iterator(nodes, rows.iter().map(|r| r[0])), DVector::from_iterator(nodes, rows.iter().map(|r| r[1]))))
}

fn pgm_tokens(bytes: &[u8], count: usize) -> Option<(Vec<u64>, usize)> {
    // Header tokens separated by whitespace, with `#` comments to end of line.
    let mut out = Vec::with_capacity(count);
    let mut i = 0;
    while out.len() < count {
        while i < bytes.len() && (bytes[i].is_ascii_whitespace() || bytes[i] == b'#') {
            if bytes[i] == b'#' {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
            } else {
                i += 1;
            }
        }
        let start = i;
        while i < bytes.len() && bytes[i].is_ascii_digit() {
            i += 1;
        }
        if start == i {
            return None;
        }
        out.push(std::str::from_utf8(&bytes[start..i]).ok()?.parse().ok()?);
    }
    Some((out, i))
}

/// Binary (P5) or ASCII (P2) PGM, normalized to `[0, 1]` by its maxval.
pub fn read_pgm(path: &Path) -> CliResult<Image> {
    let bytes = fs::read(path).map_err(|e| read_err(path, e))?;
    let bad = |m: &str| parse_err(path, 1, m.to_string());
    if bytes.len() < 2 || bytes[0] != b'P' || !(bytes[1] == b'2' || bytes[1] == b'5') {
        return Err(bad("not a P2/P5 PGM file"));
    }
    let (hdr, end) = pgm_tokens(&bytes[2..], 3).ok_or_else(|| bad("malformed PGM header"))?;
    let (w, h, maxval) = (hdr[0] as usize, hdr[1] as usize, hdr[2]);
    if w == 0 || h == 0 || maxval == 0 || maxval > 65535 {
        return Err(bad("invalid PGM dimensions or maxval"));
    }
    let body = &bytes[2 + end..];
    let mut pixels = DMatrix::zeros(h, w);
    if bytes[1] == b'5' {
        let data = body.get(1..).ok_or_else(|| bad("truncated PGM raster"))?;
        let bpp = if maxval < 256 { 1 } else { 2 };
        if data.len() < w * h * bpp {
            return Err(bad("truncated PGM raster"));
        }
        for i in 0..h {
            for j in 0..w {
                let k = (i * w + j) * bpp;
                pixels[(i, j)] = if bpp == 1 { data[k] as f64 } else { u16::from_be_bytes([data[k], data[k + 1]]) as f64 };
            }
        }
    } else {
        let (vals, _) = pgm_tokens(body, w * h).ok_or_else(|| bad("truncated or malformed PGM raster"))?;
        for (k, v) in vals.into_iter().enumerate() {
            pixels[(k / w, k % w)] = v as f64;
        }
    }
    let img = Image::new(pixels, (0.0, maxval as f64)).map_err(|source| CliError::Input { path: path.to_path_buf(), source })?;
    Ok(img.normalized())
}

/// PGM by extension; anything else is read as a numeric matrix (whitespace
/// or comma separated) and normalized by its observed range.
pub fn read_image(path: &Path) -> CliResult<Image> {
    let ext = path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
    if ext.as_deref() == Some("pgm") {
        return read_pgm(path);
    }
    let text = fs::read_to_string(path).map_err(|e| read_err(path, e))?;
    let lines: Vec<(u64, &str)> =
        text.lines().enumerate().map(|(i, l)| (i as u64 + 1, l.trim())).filter(|(_, l)| !l.is_empty() && !l.starts_with('#')).collect();
    let m = parse_matrix(path, &lines)?;
    let img = Image::from_pixels(m).map_err(|source| CliError::Input { path: path.to_path_buf(), source })?;
    Ok(img.normalized())
}

/// Write an 8-bit binary PGM of a `[0, 1]` image (values clipped).
pub fn write_pgm(path: &Path, img: &Image) -> CliResult<()> {
    let (h, w) = img.dims();
    let mut out = format!("P5\n{w} {h}\n255\n").into_bytes();
    let (lo, hi) = img.range();
    for i in 0..h {
        for j in 0..w {
            let v = ((img.pixels()[(i, j)] - lo) / (hi - lo)).clamp(0.0, 1.0);
            out.push((v * 255.0).round() as u8);
        }
    }
    fs::write(path, out).map_err(|source| CliError::Write { path: path.to_path_buf(), source })
}

/// Long-format longitudinal file with columns `subject, time, x, y` (by
/// name when a header is present, else by position). The design must be
/// balanced: every subject observed exactly once at every time.
pub fn read_longitudinal(path: &Path, delimiter: u8) -> CliResult<LongitudinalSample> {
    let table = Table::read(path, delimiter)?;
    let cols: Vec<usize> = if table.header.is_some() {
        ["subject", "time", "x", "y"].iter().map(|n| table.resolve(&Column::Name((*n).into()))).collect::<CliResult<_>>()?
    } else {
        if table.width() < 4 {
            return Err(CliError::Config(format!("{}: expected columns subject,time,x,y", path.display())));
        }
        vec![0, 1, 2, 3]
    };
    let mut subjects: Vec<String> = Vec::new();
    let mut times: Vec<f64> = Vec::new();
    let mut obs: Vec<(usize, f64, f64, f64, u64)> = Vec::new();
    for (r, (line, cells)) in table.rows.iter().enumerate() {
        let s = cells[cols[0]].clone();
        let si = match subjects.iter().position(|x| *x == s) {
            Some(i) => i,
            None => {
                subjects.push(s);
                subjects.len() - 1
            }
        };
        let val =
            |c: usize| -> CliResult<f64> { table.cell(r, c)?.ok_or_else(|| parse_err(path, *line, "missing value in longitudinal data")) };
        let (t, x, y) = (val(cols[1])?, val(cols[2])?, val(cols[3])?);
        if !times.contains(&t) {
            times.push(t);
        }
        obs.push((si, t, x, y, *line));
    }
    times.sort_by(f64::total_cmp);
    let (n, nt) = (subjects.len(), times.len());
    let mut xm = DMatrix::from_element(n, nt, f64::NAN);
    let mut ym = DMatrix::from_element(n, nt, f64::NAN);
    for (si, t, x, y, line) in obs {
        let j = times.iter().position(|&v| v == t).expect("time collected above");
        if !xm[(si, j)].is_nan() {
            return Err(parse_err(path, line, format!("subject {:?} has two rows at time {t}", subjects[si])));
        }
        xm[(si, j)] = x;
        ym[(si, j)] = y;
    }
    if let Some(k) = xm.iter().position(|v| v.is_nan()) {
        let (i, j) = (k % n, k / n);
        return Err(CliError::Config(format!(
            "{}: unbalanced design, subject {:?} has no row at time {}",
            path.display(),
            subjects[i],
            times[j]
        )));
    }
    LongitudinalSample::new(times, xm, ym).map_err(|source| CliError::Input { path: path.to_path_buf(), source })
}
