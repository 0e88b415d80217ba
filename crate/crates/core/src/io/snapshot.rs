//! Binary snapshot files (little endian).
//!
//! Layout: magic `RGSN`, version `u32`, cycle `u64`, timestamp, the two grid
//! specs, the representation byte, then length-prefixed arrays of
//! probabilities, DS masses, velocity statistics and particles.

use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::grid::GridSpec;
use crate::manager::Snapshot;
use crate::occupancy::Representation;
use crate::velocity::{CellVelocityStats, Particle};

const MAGIC: &[u8; 4] = b"RGSN";
const VERSION: u32 = 1;

struct Writer(Vec<u8>);

impl Writer {
    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }
    fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn vec2(&mut self, v: Vec2) {
        self.f64(v.x);
        self.f64(v.y);
    }
    fn spec(&mut self, s: &GridSpec) {
        self.f64(s.cell_size);
        self.f64(s.extent_forward);
        self.f64(s.extent_backward);
        self.f64(s.extent_lateral);
        self.vec2(s.origin);
    }
}

struct Reader<'a> {
    data: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> std::result::Result<&[u8], String> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.data.len());
        let end = end.ok_or_else(|| format!("truncated at byte {}", self.pos))?;
        let out = &self.data[self.pos..end];
        self.pos = end;
        Ok(out)
    }
    fn u8(&mut self) -> std::result::Result<u8, String> {
        Ok(self.take(1)?[0])
    }
    fn u32(&mut self) -> std::result::Result<u32, String> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> std::result::Result<u64, String> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn f64(&mut self) -> std::result::Result<f64, String> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn vec2(&mut self) -> std::result::Result<Vec2, String> {
        Ok(Vec2::new(self.f64()?, self.f64()?))
    }
    fn len(&mut self) -> std::result::Result<usize, String> {
        let n = self.u64()? as usize;
        if n > self.data.len() {
            return Err(format!("implausible array length {n}"));
        }
        Ok(n)
    }
    fn spec(&mut self) -> std::result::Result<GridSpec, String> {
        Ok(GridSpec {
            cell_size: self.f64()?,
            extent_forward: self.f64()?,
            extent_backward: self.f64()?,
            extent_lateral: self.f64()?,
            origin: self.vec2()?,
        })
    }
}

pub fn encode_snapshot(s: &Snapshot) -> Vec<u8> {
    let mut w = Writer(Vec::new());
    w.0.extend_from_slice(MAGIC);
    w.u32(VERSION);
    w.u64(s.cycle);
    w.f64(s.timestamp);
    w.spec(&s.occupancy_spec);
    w.spec(&s.velocity_spec);
    w.u8(match s.representation {
        Representation::Bb => 0,
        Representation::Ds => 1,
    });
    w.u64(s.probabilities.len() as u64);
    for &p in &s.probabilities {
        w.f64(p);
    }
    match &s.masses {
        Some(m) => {
            w.u8(1);
            w.u64(m.len() as u64);
            for &(o, f) in m {
                w.f64(o);
                w.f64(f);
            }
        }
        None => w.u8(0),
    }
    w.u64(s.velocity.len() as u64);
    for st in &s.velocity {
        w.vec2(st.mean);
        for c in st.cov {
            w.f64(c);
        }
        w.u64(st.particle_count as u64);
        w.f64(st.weight_sum);
        w.u8(st.valid as u8 | (st.supported as u8) << 1);
    }
    w.u64(s.particle_count as u64);
    w.u64(s.particles.len() as u64);
    for p in &s.particles {
        w.vec2(p.position);
        w.vec2(p.velocity);
        w.f64(p.weight);
    }
    w.0
}

pub fn decode_snapshot(data: &[u8]) -> std::result::Result<Snapshot, String> {
    let mut r = Reader { data, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err("not a snapshot file (bad magic)".into());
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(format!("unsupported snapshot version {version}"));
    }
    let cycle = r.u64()?;
    let timestamp = r.f64()?;
    let occupancy_spec = r.spec()?;
    let velocity_spec = r.spec()?;
    let representation = match r.u8()? {
        0 => Representation::Bb,
        1 => Representation::Ds,
        b => return Err(format!("unknown representation byte {b}")),
    };
    let n = r.len()?;
    let probabilities = (0..n).map(|_| r.f64()).collect::<std::result::Result<_, _>>()?;
    let masses = if r.u8()? == 1 {
        let n = r.len()?;
        Some((0..n).map(|_| Ok((r.f64()?, r.f64()?))).collect::<std::result::Result<_, String>>()?)
    } else {
        None
    };
    let n = r.len()?;
    let mut velocity = Vec::with_capacity(n);
    for _ in 0..n {
        let mean = r.vec2()?;
        let cov = [r.f64()?, r.f64()?, r.f64()?];
        let particle_count = r.u64()? as usize;
        let weight_sum = r.f64()?;
        let flags = r.u8()?;
        velocity.push(CellVelocityStats {
            mean,
            cov,
            particle_count,
            weight_sum,
            valid: flags & 1 != 0,
            supported: flags & 2 != 0,
        });
    }
    let particle_count = r.u64()? as usize;
    let n = r.len()?;
    let mut particles = Vec::with_capacity(n);
    for _ in 0..n {
        particles.push(Particle::new(r.vec2()?, r.vec2()?, r.f64()?));
    }
    if r.pos != data.len() {
        return Err(format!("{} trailing bytes", data.len() - r.pos));
    }
    Ok(Snapshot {
        cycle,
        timestamp,
        occupancy_spec,
        representation,
        probabilities,
        masses,
        velocity_spec,
        velocity,
        particle_count,
        particles,
    })
}

pub fn write_snapshot(path: &Path, s: &Snapshot) -> Result<()> {
    std::fs::write(path, encode_snapshot(s)).map_err(|e| Error::io(path, e))
}

pub fn read_snapshot(path: &Path) -> Result<Snapshot> {
    let data = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_snapshot(&data).map_err(|message| Error::Parse {
        path: path.display().to_string(),
        line: 0,
        message,
    })
}
