//! Artifact writers. Every file carries the config hash; CSV numbers use
//! 17 significant digits, JSON numbers the shortest exact representation.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use liegeo_core::jacobi::ConjugateReport;
use liegeo_core::locus::LocusSlice;
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::CliError;

pub fn fmt17(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

pub struct Artifacts {
    dir: PathBuf,
    stem: String,
    hash: String,
    files: Vec<PathBuf>,
}

impl Artifacts {
    /// `out` is a directory, or a file path whose extension names the main
    /// artifact (its stem then prefixes every file).
    pub fn new(out: &Path, default_stem: &str, hash: String) -> Result<Self, CliError> {
        let (dir, stem) = match out.extension() {
            Some(_) => (
                out.parent().map(Path::to_path_buf).unwrap_or_default(),
                out.file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| default_stem.to_string()),
            ),
            None => (out.to_path_buf(), default_stem.to_string()),
        };
        let dir = if dir.as_os_str().is_empty() { PathBuf::from(".") } else { dir };
        std::fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
        Ok(Artifacts {
            dir,
            stem,
            hash,
            files: Vec::new(),
        })
    }

    pub fn hash(&self) -> &str {
        &self.hash
    }

    pub fn files(&self) -> &[PathBuf] {
        &self.files
    }

    fn path(&self, suffix: &str) -> PathBuf {
        self.dir.join(format!("{}{suffix}", self.stem))
    }

    fn write(&mut self, path: PathBuf, bytes: &[u8]) -> Result<PathBuf, CliError> {
        std::fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
        self.files.push(path.clone());
        Ok(path)
    }

    /// A `# config_hash=…` line, then a header and numeric rows.
    pub fn csv<I>(&mut self, suffix: &str, header: &[String], rows: I) -> Result<PathBuf, CliError>
    where
        I: IntoIterator<Item = Vec<f64>>,
    {
        let mut buf = format!("# config_hash={}\n", self.hash).into_bytes();
        {
            let mut w = csv::Writer::from_writer(&mut buf);
            let fail = |e: csv::Error| CliError::Numeric(format!("csv: {e}"));
            w.write_record(header).map_err(fail)?;
            for row in rows {
                w.write_record(row.iter().map(|&x| fmt17(x))).map_err(fail)?;
            }
            w.flush().map_err(|e| CliError::Numeric(format!("csv: {e}")))?;
        }
        let path = self.path(&format!("{suffix}.csv"));
        self.write(path, &buf)
    }

    pub fn json(&mut self, suffix: &str, body: Value) -> Result<PathBuf, CliError> {
        let mut obj = Map::new();
        obj.insert("config_hash".into(), Value::String(self.hash.clone()));
        match body {
            Value::Object(m) => obj.extend(m),
            other => {
                obj.insert("data".into(), other);
            }
        }
        let mut text = serde_json::to_string_pretty(&Value::Object(obj)).expect("json value serializes");
        text.push('\n');
        let path = self.path(&format!("{suffix}.json"));
        self.write(path, text.as_bytes())
    }

    pub fn text(&mut self, suffix: &str, text: &str) -> Result<PathBuf, CliError> {
        let path = self.path(suffix);
        self.write(path, text.as_bytes())
    }

    /// Config echo, tool version, tolerances and a digest of every file
    /// written so far.
    pub fn manifest(&mut self, command: &str, cfg: &RunConfig, extra: Value) -> Result<PathBuf, CliError> {
        let mut files = Vec::new();
        for f in &self.files {
            let bytes = std::fs::read(f).map_err(|e| CliError::io(f, e))?;
            files.push(json!({
                "path": f.file_name().map(|s| s.to_string_lossy().into_owned()),
                "sha256": hex::encode(Sha256::digest(&bytes)),
            }));
        }
        let body = json!({
            "tool": "liegeo",
            "version": env!("CARGO_PKG_VERSION"),
            "command": command,
            "config": cfg,
            "seed": cfg.seed,
            "tolerances": cfg.tolerances,
            "files": files,
            "details": extra,
        });
        self.json(".manifest", body)
    }
}

pub fn conjugate_json(r: &ConjugateReport) -> Value {
    let ev = &r.conjugate_times;
    json!({
        "times": ev.iter().map(|e| e.t).collect::<Vec<_>>(),
        "multiplicities": ev.iter().map(|e| e.multiplicity).collect::<Vec<_>>(),
        "method": ev.iter().map(|e| e.detection.as_str()).collect::<Vec<_>>(),
        "values": ev.iter().map(|e| e.value).collect::<Vec<_>>(),
        "parameters": ev.iter().map(|e| e.parameter).collect::<Vec<_>>(),
        "tolerances": {
            "time": r.tolerances.time,
            "sigma_rel": r.tolerances.sigma_rel,
            "step": r.tolerances.step,
        },
        "horizon": r.horizon,
    })
}

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf",
];

/// Static overlay of locus slices, one path per slice, scaled to the largest.
pub fn locus_svg(slices: &[LocusSlice], hash: &str) -> String {
    let extent = slices
        .iter()
        .map(|s| {
            let (x, y) = s.extents();
            x.max(y)
        })
        .fold(0.0, f64::max)
        .max(1e-9);
    let r = 1.15 * extent;
    let size = 800.0;
    let scale = size / (2.0 * r);
    let px = |x: f64| (x + r) * scale;
    let py = |y: f64| (r - y) * scale;
    let mut s = String::new();
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {size} {size}\" width=\"{size}\" height=\"{size}\">"
    );
    let _ = writeln!(s, "<!-- config_hash={hash} -->");
    if let Some(first) = slices.first() {
        let _ = writeln!(s, "<!-- convention={} -->", first.convention.as_str());
    }
    let _ = writeln!(s, "<rect width=\"{size}\" height=\"{size}\" fill=\"white\"/>");
    let _ = writeln!(
        s,
        "<line x1=\"0\" y1=\"{c:.3}\" x2=\"{size}\" y2=\"{c:.3}\" stroke=\"#999\" stroke-width=\"1\"/>",
        c = py(0.0)
    );
    let _ = writeln!(
        s,
        "<line x1=\"{c:.3}\" y1=\"0\" x2=\"{c:.3}\" y2=\"{size}\" stroke=\"#999\" stroke-width=\"1\"/>",
        c = px(0.0)
    );
    for (k, slice) in slices.iter().enumerate() {
        let colour = PALETTE[k % PALETTE.len()];
        let mut d = String::new();
        for (i, p) in slice.samples.iter().enumerate() {
            let _ = write!(d, "{}{:.3},{:.3} ", if i == 0 { 'M' } else { 'L' }, px(p.x), py(p.y));
        }
        d.push('Z');
        let _ = writeln!(
            s,
            "<path d=\"{d}\" fill=\"none\" stroke=\"{colour}\" stroke-width=\"1.5\" data-delta=\"{}\"><title>delta = {}</title></path>",
            slice.delta, slice.delta
        );
        let _ = writeln!(
            s,
            "<text x=\"12\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"14\" fill=\"{colour}\">delta = {}</text>",
            24.0 + 18.0 * k as f64,
            slice.delta
        );
    }
    s.push_str("</svg>\n");
    s
}
