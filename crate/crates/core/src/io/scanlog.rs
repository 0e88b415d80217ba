//! Plain-text scan log.
//!
//! One record per line, whitespace separated, `#` starts a comment:
//!
//! ```text
//! P <t> <x> <y> <heading> <vx> <vy>
//! D <t> <sensor_id> <r> <phi> <rr> <sigma_r> <sigma_phi> <sigma_rr>
//! ```
//!
//! A `P` line opens a scan; the `D` lines up to the next `P` belong to it.
//! Numbers are written in shortest round-trip form, so parsing a written log
//! reproduces the records exactly.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::sim::ScanRecord;
use crate::types::{Detection, EgoPose};

pub const HEADER: &str = "# radgrid scan log v1";

pub fn format_scan_log(records: &[ScanRecord]) -> String {
    let mut out = String::new();
    out.push_str(HEADER);
    out.push('\n');
    for rec in records {
        let p = &rec.pose;
        let _ = writeln!(
            out,
            "P {} {} {} {} {} {}",
            p.timestamp, p.position.x, p.position.y, p.heading, p.velocity.x, p.velocity.y
        );
        for d in &rec.detections {
            let _ = writeln!(
                out,
                "D {} {} {} {} {} {} {} {}",
                d.timestamp,
                d.sensor_id,
                d.range,
                d.azimuth,
                d.range_rate,
                d.sigma_range,
                d.sigma_azimuth,
                d.sigma_range_rate
            );
        }
    }
    out
}

pub fn write_scan_log(path: &Path, records: &[ScanRecord]) -> Result<()> {
    std::fs::write(path, format_scan_log(records)).map_err(|e| Error::io(path, e))
}

fn fields<const N: usize>(tokens: &[&str], origin: &str, line: usize) -> Result<[f64; N]> {
    if tokens.len() != N {
        return Err(Error::Parse {
            path: origin.to_string(),
            line,
            message: format!("expected {N} fields, found {}", tokens.len()),
        });
    }
    let mut out = [0.0; N];
    for (slot, tok) in out.iter_mut().zip(tokens) {
        *slot = tok.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| Error::Parse {
            path: origin.to_string(),
            line,
            message: format!("`{tok}` is not a finite number"),
        })?;
    }
    Ok(out)
}

pub fn parse_scan_log(text: &str, origin: &str) -> Result<Vec<ScanRecord>> {
    let mut records: Vec<ScanRecord> = Vec::new();
    let mut last_t = f64::NEG_INFINITY;
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let tokens: Vec<&str> = content.split_whitespace().collect();
        let err = |message: String| Error::Parse {
            path: origin.to_string(),
            line,
            message,
        };
        let t = match tokens[0] {
            "P" => {
                let [t, x, y, h, vx, vy] = fields::<6>(&tokens[1..], origin, line)?;
                records.push(ScanRecord {
                    pose: EgoPose::new(Vec2::new(x, y), h, Vec2::new(vx, vy), t),
                    detections: Vec::new(),
                });
                t
            }
            "D" => {
                let v = fields::<8>(&tokens[1..], origin, line)?;
                let Some(rec) = records.last_mut() else {
                    return Err(err("detection before the first pose line".into()));
                };
                if v[1] < 0.0 || v[1].fract() != 0.0 || v[1] > u32::MAX as f64 {
                    return Err(err(format!("sensor id `{}` is not a non-negative integer", tokens[2])));
                }
                let d = Detection {
                    sensor_id: v[1] as u32,
                    timestamp: v[0],
                    range: v[2],
                    azimuth: v[3],
                    range_rate: v[4],
                    sigma_range: v[5],
                    sigma_azimuth: v[6],
                    sigma_range_rate: v[7],
                };
                d.validate().map_err(|e| err(e.to_string()))?;
                rec.detections.push(d);
                v[0]
            }
            other => return Err(err(format!("unknown record type `{other}` (expected P or D)"))),
        };
        if t < last_t {
            return Err(err(format!("timestamp {t} precedes {last_t}")));
        }
        last_t = t;
    }
    Ok(records)
}

pub fn read_scan_log(path: &Path) -> Result<Vec<ScanRecord>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_scan_log(&text, &path.display().to_string())
}
