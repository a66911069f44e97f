//! File formats: CSV datasets, screening tables, model files and SVG
//! component plots.
//!
//! Numbers are written with Rust's shortest round-trip representation, so
//! every format here reads back bit-for-bit.
//!
//! # Model file (version 1)
//!
//! ```text
//! nis-additive-model 1
//! intercept <f64>
//! lambda <f64>
//! components <k>
//! component <covariate index, 0-based>
//! name <covariate name>          (optional)
//! degree <l>
//! knots <f64> ...                (full knot vector, boundary knots repeated)
//! means <f64> ...                (training column means of the basis)
//! coefficients <f64> ...
//! end
//! ```
//!
//! The `component … end` group repeats `k` times in ascending index order.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::marginal::Dataset;
use crate::screening::ScreenResult;
use crate::selector::{AdditiveModel, Component};
use crate::spline::SplineBasis;

pub const MODEL_FORMAT_VERSION: u32 = 1;
const MODEL_MAGIC: &str = "nis-additive-model";

pub(crate) fn num(v: f64) -> String {
    format!("{v:?}")
}

fn parse_num(s: &str) -> Option<f64> {
    s.trim().parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Reads a comma-separated file with a header row. The column named
/// `response` becomes the response; all other columns are covariates.
/// Parse errors name the 1-based data row and the column.
pub fn read_csv(path: impl AsRef<Path>, response: &str) -> Result<Dataset> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_csv(&text, response)
}

pub fn parse_csv(text: &str, response: &str) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| Error::Parse(format!("header: {e}")))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let resp_col = header
        .iter()
        .position(|h| h == response)
        .ok_or_else(|| Error::Parse(format!("response column \"{response}\" not found in header")))?;
    let names: Vec<String> = header.iter().enumerate().filter(|&(i, _)| i != resp_col).map(|(_, h)| h.clone()).collect();
    let p = names.len();
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); p];
    let mut y = Vec::new();
    for (r, record) in reader.records().enumerate() {
        let row = r + 1;
        let record = record.map_err(|e| Error::Parse(format!("row {row}: {e}")))?;
        if record.len() != header.len() {
            return Err(Error::Parse(format!("row {row}: expected {} fields, found {}", header.len(), record.len())));
        }
        let mut k = 0;
        for (i, cell) in record.iter().enumerate() {
            let v = parse_num(cell).ok_or_else(|| {
                Error::Parse(format!("row {row}, column \"{}\": cannot parse \"{cell}\" as a finite number", header[i]))
            })?;
            if i == resp_col {
                y.push(v);
            } else {
                columns[k].push(v);
                k += 1;
            }
        }
    }
    let n = y.len();
    let cov = DMatrix::from_fn(n, p, |i, j| columns[j][i]);
    Dataset::new(cov, y, names)
}

/// Writes covariates followed by a response column named `response`.
pub fn write_csv(data: &Dataset, path: impl AsRef<Path>, response: &str) -> Result<()> {
    fs::write(path, format_csv(data, response))?;
    Ok(())
}

pub fn format_csv(data: &Dataset, response: &str) -> String {
    let mut out = String::new();
    let mut header: Vec<&str> = data.names().iter().map(String::as_str).collect();
    header.push(response);
    out.push_str(&header.join(","));
    out.push('\n');
    let cov = data.covariates();
    for i in 0..data.n() {
        for j in 0..data.p() {
            out.push_str(&num(cov[(i, j)]));
            out.push(',');
        }
        out.push_str(&num(data.response()[i]));
        out.push('\n');
    }
    out
}

/// Ranked screening table: `rank,index,name,score,selected`.
pub fn format_screen(result: &ScreenResult, names: &[String]) -> String {
    let mut out = String::from("rank,index,name,score,selected\n");
    for (r, &j) in result.ranking.iter().enumerate() {
        let sel = result.selected.contains(&j);
        let _ = writeln!(out, "{},{},{},{},{}", r + 1, j, names[j], num(result.scores[j]), u8::from(sel));
    }
    out
}

pub fn format_model(model: &AdditiveModel, names: Option<&[String]>) -> String {
    let join = |v: &[f64]| v.iter().map(|x| num(*x)).collect::<Vec<_>>().join(" ");
    let mut out = String::new();
    let _ = writeln!(out, "{MODEL_MAGIC} {MODEL_FORMAT_VERSION}");
    let _ = writeln!(out, "intercept {}", num(model.intercept));
    let _ = writeln!(out, "lambda {}", num(model.lambda));
    let _ = writeln!(out, "components {}", model.components.len());
    for (j, c) in &model.components {
        let _ = writeln!(out, "component {j}");
        if let Some(name) = names.and_then(|n| n.get(*j)) {
            let _ = writeln!(out, "name {name}");
        }
        let _ = writeln!(out, "degree {}", c.basis.degree());
        let _ = writeln!(out, "knots {}", join(c.basis.knots()));
        let _ = writeln!(out, "means {}", join(&c.column_means));
        let _ = writeln!(out, "coefficients {}", join(&c.coefficients));
        out.push_str("end\n");
    }
    out
}

pub fn write_model(model: &AdditiveModel, names: Option<&[String]>, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, format_model(model, names))?;
    Ok(())
}

pub fn read_model(path: impl AsRef<Path>) -> Result<AdditiveModel> {
    parse_model(&fs::read_to_string(path)?)
}

pub fn parse_model(text: &str) -> Result<AdditiveModel> {
    let mut lines = ModelLines {
        inner: text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()).peekable(),
    };
    let (ln, version) = lines.expect(MODEL_MAGIC)?;
    if version != MODEL_FORMAT_VERSION.to_string() {
        return Err(Error::Parse(format!("line {ln}: unsupported model format version {version}")));
    }
    let intercept = scalar(lines.expect("intercept")?)?;
    let lambda = scalar(lines.expect("lambda")?)?;
    let k = integer(lines.expect("components")?)?;
    let mut components = BTreeMap::new();
    for _ in 0..k {
        let index = integer(lines.expect("component")?)?;
        if lines.peek_key() == Some("name") {
            lines.expect("name")?;
        }
        let degree = integer(lines.expect("degree")?)?;
        let knots = vector(lines.expect("knots")?)?;
        let column_means = vector(lines.expect("means")?)?;
        let coefficients = vector(lines.expect("coefficients")?)?;
        lines.expect("end")?;
        let basis = SplineBasis::from_knots(degree, knots)?;
        if column_means.len() != basis.dim() || coefficients.len() != basis.dim() {
            return Err(Error::Parse(format!(
                "component {index}: vector lengths do not match basis dimension {}",
                basis.dim()
            )));
        }
        components.insert(index, Component { basis, column_means, coefficients });
    }
    Ok(AdditiveModel { intercept, components, lambda })
}

struct ModelLines<'a, I: Iterator<Item = (usize, &'a str)>> {
    inner: std::iter::Peekable<I>,
}

impl<'a, I: Iterator<Item = (usize, &'a str)>> ModelLines<'a, I> {
    fn peek_key(&mut self) -> Option<&'a str> {
        self.inner.peek().map(|&(_, l)| l.split_once(' ').map_or(l, |(k, _)| k))
    }

    fn expect(&mut self, want: &str) -> Result<(usize, String)> {
        let (i, line) = self
            .inner
            .next()
            .ok_or_else(|| Error::Parse(format!("model file ended, expected \"{want}\"")))?;
        let (key, rest) = line.split_once(' ').unwrap_or((line, ""));
        if key != want {
            return Err(Error::Parse(format!("line {}: expected \"{want}\", found \"{key}\"", i + 1)));
        }
        Ok((i + 1, rest.trim().to_string()))
    }
}

fn scalar((ln, s): (usize, String)) -> Result<f64> {
    parse_num(&s).ok_or_else(|| Error::Parse(format!("line {ln}: bad number \"{s}\"")))
}

fn integer((ln, s): (usize, String)) -> Result<usize> {
    s.parse::<usize>().map_err(|_| Error::Parse(format!("line {ln}: bad integer \"{s}\"")))
}

fn vector((ln, s): (usize, String)) -> Result<Vec<f64>> {
    s.split_whitespace()
        .map(|t| parse_num(t).ok_or_else(|| Error::Parse(format!("line {ln}: bad number \"{t}\""))))
        .collect()
}

/// One SVG line chart per model component, evaluated on a 200-point grid
/// over the basis support. Returns the written file paths.
pub fn write_component_plots(model: &AdditiveModel, names: &[String], dir: impl AsRef<Path>) -> Result<Vec<std::path::PathBuf>> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for (&j, comp) in &model.components {
        let (lo, hi) = comp.basis.support();
        let grid: Vec<f64> = (0..200).map(|k| lo + (hi - lo) * k as f64 / 199.0).collect();
        let vals = comp.evaluate(&grid);
        let name = names.get(j).cloned().unwrap_or_else(|| format!("X{}", j + 1));
        let path = dir.join(format!("component_{j}.svg"));
        fs::write(&path, svg_line_chart(&name, &grid, &vals))?;
        written.push(path);
    }
    Ok(written)
}

fn svg_line_chart(title: &str, xs: &[f64], ys: &[f64]) -> String {
    let (w, h, m) = (480.0, 320.0, 40.0);
    let (x0, x1) = (xs[0], xs[xs.len() - 1]);
    let y0 = ys.iter().copied().fold(f64::INFINITY, f64::min);
    let y1 = ys.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let yspan = if y1 > y0 { y1 - y0 } else { 1.0 };
    let xspan = if x1 > x0 { x1 - x0 } else { 1.0 };
    let px = |x: f64| m + (x - x0) / xspan * (w - 2.0 * m);
    let py = |y: f64| h - m - (y - y0) / yspan * (h - 2.0 * m);
    let points: Vec<String> = xs.iter().zip(ys).map(|(&x, &y)| format!("{:.2},{:.2}", px(x), py(y))).collect();
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n\
         <rect x=\"{m}\" y=\"{m}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#888\"/>\n\
         <text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">{}</text>\n\
         <text x=\"{m}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"10\">{:.3}</text>\n\
         <text x=\"{}\" y=\"{}\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">{:.3}</text>\n\
         <polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.5\" points=\"{}\"/>\n</svg>\n",
        w - 2.0 * m,
        h - 2.0 * m,
        w / 2.0,
        xml_escape(title),
        h - m + 14.0,
        x0,
        w - m,
        h - m + 14.0,
        x1,
        points.join(" ")
    )
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
