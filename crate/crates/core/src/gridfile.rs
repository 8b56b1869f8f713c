//! Text grid files: `# key=value` header lines, then one CSV row per cell.
//!
//! Header values are written in shortest round-trip form so a reloaded spec is
//! bit-identical and can seed a resumed bisection. Row coordinates and periods
//! use 9 significant digits. A JSON sidecar (`<path>.json`) carries the same
//! header.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::classifier::{AttractorLabel, Center, CycleInfo, Thresholds};
use crate::error::{Error, Result};
use crate::sweep::{Axis, GridSpec, Integration, Provenance, StabilityGrid, SweepMode};

pub const COLUMNS: &str = "ix,iy,x,y,code,n,t,w,period,center";

/// Header contents, also the JSON sidecar schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridHeader {
    pub spec: GridSpec,
    pub bisection_level: u32,
    pub provenance: Provenance,
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

/// `v` with 9 significant digits.
pub fn sig9(v: f64) -> String {
    format!("{v:.8e}")
}

fn header_lines(h: &GridHeader) -> Vec<(String, String)> {
    let s = &h.spec;
    let (xn, yn) = s.mode.axis_names();
    let f = |v: f64| format!("{v:?}");
    vec![
        ("format".into(), "jjdyn-grid/1".into()),
        ("mode".into(), s.mode.as_str().into()),
        ("x_name".into(), xn.into()),
        ("x_min".into(), f(s.x.min)),
        ("x_max".into(), f(s.x.max)),
        ("x_count".into(), s.x.count.to_string()),
        ("y_name".into(), yn.into()),
        ("y_min".into(), f(s.y.min)),
        ("y_max".into(), f(s.y.max)),
        ("y_count".into(), s.y.count.to_string()),
        ("kappa".into(), f(s.kappa)),
        ("v0".into(), f(s.v0)),
        ("eps".into(), f(s.eps)),
        ("phi_th".into(), f(s.thresholds.phi_th)),
        ("v_th".into(), f(s.thresholds.v_th)),
        ("escape".into(), f(s.thresholds.escape)),
        ("dtau".into(), f(s.integration.dtau)),
        ("tau_transient".into(), f(s.integration.tau_transient)),
        ("tau_measure".into(), f(s.integration.tau_measure)),
        ("retry".into(), s.integration.retry.to_string()),
        ("bisection_level".into(), h.bisection_level.to_string()),
        ("tool_version".into(), h.provenance.tool_version.clone()),
        ("timestamp".into(), h.provenance.timestamp.to_string()),
        ("settings_digest".into(), h.provenance.settings_digest.clone()),
        ("failures".into(), h.provenance.failures.to_string()),
        ("retried".into(), h.provenance.retried.to_string()),
        ("evaluated".into(), h.provenance.evaluated.to_string()),
    ]
}

fn header_of(grid: &StabilityGrid) -> GridHeader {
    GridHeader { spec: grid.spec.clone(), bisection_level: grid.bisection_level, provenance: grid.provenance.clone() }
}

fn row(ix: usize, iy: usize, x: f64, y: f64, l: &AttractorLabel) -> String {
    let mut s = format!("{ix},{iy},{},{},{}", sig9(x), sig9(y), l.code());
    match l.cycle() {
        Some(c) => {
            let center = match c.center {
                Center::Zero => 0,
                Center::Pi => 1,
            };
            let _ = write!(s, ",{},{},{},{},{center}", c.n, c.turning, c.winding, sig9(c.period));
        }
        None => s.push_str(",0,0,0,,"),
    }
    s
}

/// Serialize a grid to the text format.
pub fn to_string(grid: &StabilityGrid) -> String {
    let mut out = String::new();
    for (k, v) in header_lines(&header_of(grid)) {
        let _ = writeln!(out, "# {k}={v}");
    }
    out.push_str(COLUMNS);
    out.push('\n');
    for (ix, iy, x, y, l) in grid.cells() {
        out.push_str(&row(ix, iy, x, y, l));
        out.push('\n');
    }
    out
}

/// Write `path` and its JSON sidecar.
pub fn write_grid(path: &Path, grid: &StabilityGrid) -> Result<()> {
    let tmp = path.with_extension("partial");
    {
        let mut w = BufWriter::new(fs::File::create(&tmp)?);
        w.write_all(to_string(grid).as_bytes())?;
        w.flush()?;
    }
    fs::rename(&tmp, path)?;
    let json = serde_json::to_string_pretty(&header_of(grid))?;
    fs::write(sidecar_path(path), json + "\n")?;
    Ok(())
}

fn parse_header(map: &HashMap<String, String>) -> Result<GridHeader> {
    let get = |k: &str| map.get(k).ok_or_else(|| Error::Format(format!("missing header key {k:?}")));
    fn num<T: std::str::FromStr>(k: &str, v: &str) -> Result<T> {
        v.parse().map_err(|_| Error::Format(format!("bad value for {k}: {v:?}")))
    }
    let f = |k: &str| -> Result<f64> { num(k, get(k)?) };
    let u = |k: &str| -> Result<usize> { num(k, get(k)?) };
    let spec = GridSpec {
        mode: get("mode")?.parse::<SweepMode>()?,
        x: Axis::new(f("x_min")?, f("x_max")?, u("x_count")?),
        y: Axis::new(f("y_min")?, f("y_max")?, u("y_count")?),
        kappa: f("kappa")?,
        v0: f("v0")?,
        eps: f("eps")?,
        thresholds: Thresholds { phi_th: f("phi_th")?, v_th: f("v_th")?, escape: f("escape")? },
        integration: Integration {
            dtau: f("dtau")?,
            tau_transient: f("tau_transient")?,
            tau_measure: f("tau_measure")?,
            retry: num("retry", get("retry")?)?,
        },
    };
    let provenance = Provenance {
        tool_version: get("tool_version")?.clone(),
        timestamp: num("timestamp", get("timestamp")?)?,
        settings_digest: get("settings_digest")?.clone(),
        failures: u("failures")?,
        retried: u("retried")?,
        evaluated: u("evaluated")?,
    };
    Ok(GridHeader { spec, bisection_level: num("bisection_level", get("bisection_level")?)?, provenance })
}

fn parse_label(fields: &[&str], line: usize) -> Result<AttractorLabel> {
    let bad = || Error::Format(format!("line {line}: malformed row"));
    let code: u8 = fields[4].parse().map_err(|_| bad())?;
    Ok(match code {
        0 => AttractorLabel::Unstable,
        1 => AttractorLabel::ZeroStable,
        2 => AttractorLabel::PiStable,
        255 => AttractorLabel::Unclassified,
        c if c > 100 => {
            let n: u32 = fields[5].parse().map_err(|_| bad())?;
            if n != u32::from(c - 100) {
                return Err(bad());
            }
            AttractorLabel::NCycle(CycleInfo {
                n,
                turning: fields[6].parse().map_err(|_| bad())?,
                winding: fields[7].parse().map_err(|_| bad())?,
                period: fields[8].parse().map_err(|_| bad())?,
                center: match fields[9] {
                    "0" => Center::Zero,
                    "1" => Center::Pi,
                    _ => return Err(bad()),
                },
            })
        }
        _ => return Err(bad()),
    })
}

/// Parse the text format.
pub fn parse(reader: impl BufRead) -> Result<StabilityGrid> {
    let mut map = HashMap::new();
    let mut rows: Vec<(usize, usize, AttractorLabel)> = Vec::new();
    let mut seen_columns = false;
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim_end();
        if let Some(kv) = line.strip_prefix("# ") {
            let (k, v) = kv.split_once('=').ok_or_else(|| Error::Format(format!("line {}: bad header", i + 1)))?;
            map.insert(k.to_string(), v.to_string());
        } else if !seen_columns {
            if line != COLUMNS {
                return Err(Error::Format(format!("line {}: expected column header", i + 1)));
            }
            seen_columns = true;
        } else if !line.is_empty() {
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 10 {
                return Err(Error::Format(format!("line {}: expected 10 fields", i + 1)));
            }
            let ix = fields[0].parse().map_err(|_| Error::Format(format!("line {}: bad ix", i + 1)))?;
            let iy = fields[1].parse().map_err(|_| Error::Format(format!("line {}: bad iy", i + 1)))?;
            rows.push((ix, iy, parse_label(&fields, i + 1)?));
        }
    }
    let header = parse_header(&map)?;
    let (w, h) = (header.spec.width(), header.spec.height());
    let mut labels = vec![None; w * h];
    for (ix, iy, l) in rows {
        if ix >= w || iy >= h {
            return Err(Error::Shape { width: w, height: h });
        }
        labels[iy * w + ix] = Some(l);
    }
    let labels = labels.into_iter().collect::<Option<Vec<_>>>().ok_or(Error::Shape { width: w, height: h })?;
    Ok(StabilityGrid { spec: header.spec, labels, bisection_level: header.bisection_level, provenance: header.provenance })
}

pub fn read_grid(path: &Path) -> Result<StabilityGrid> {
    parse(BufReader::new(fs::File::open(path)?))
}

pub fn read_sidecar(path: &Path) -> Result<GridHeader> {
    Ok(serde_json::from_str(&fs::read_to_string(sidecar_path(path))?)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn sample() -> StabilityGrid {
        let spec = GridSpec::desk_stability(3, 2);
        let c = CycleInfo { n: 3, turning: 3, winding: 1, center: Center::Pi, period: 8.0 * PI };
        StabilityGrid {
            labels: vec![
                AttractorLabel::Unstable,
                AttractorLabel::ZeroStable,
                AttractorLabel::PiStable,
                AttractorLabel::NCycle(c),
                AttractorLabel::Unclassified,
                AttractorLabel::NCycle(CycleInfo { center: Center::Zero, n: 1, turning: 1, ..c }),
            ],
            provenance: Provenance { settings_digest: spec.digest(), tool_version: "t".into(), ..Default::default() },
            spec,
            bisection_level: 0,
        }
    }

    #[test]
    fn nine_significant_digits() {
        assert_eq!(sig9(PI), "3.14159265e0");
        assert_eq!(sig9(0.509253), "5.09253000e-1");
    }

    #[test]
    fn text_round_trip() {
        let g = sample();
        let text = to_string(&g);
        assert!(text.contains("# mode=epsphi\n"));
        assert!(text.contains("\n0,1,1.57079633e0,5.60000000e-1,103,3,3,1,2.51327412e1,1\n"));
        let back = parse(text.as_bytes()).unwrap();
        assert_eq!(back.spec, g.spec);
        assert_eq!(back.spec.digest(), g.spec.digest());
        assert_eq!(back.codes(), g.codes());
        for (a, b) in back.labels.iter().zip(&g.labels) {
            assert!(a.same_class(b));
        }
        assert_eq!(to_string(&back), text);
    }

    #[test]
    fn file_and_sidecar() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.csv");
        let g = sample();
        write_grid(&path, &g).unwrap();
        let back = read_grid(&path).unwrap();
        assert_eq!(back.codes(), g.codes());
        let side = read_sidecar(&path).unwrap();
        assert_eq!(side.spec, g.spec);
        assert_eq!(side.provenance, g.provenance);
    }

    #[test]
    fn malformed_inputs() {
        let text = to_string(&sample());
        let missing_row: String = text.lines().take(text.lines().count() - 1).map(|l| format!("{l}\n")).collect();
        assert!(matches!(parse(missing_row.as_bytes()), Err(Error::Shape { .. })));
        let bad_code = text.replace(",255,", ",99,");
        assert!(parse(bad_code.as_bytes()).is_err());
        assert!(parse("nonsense\n".as_bytes()).is_err());
    }
}
