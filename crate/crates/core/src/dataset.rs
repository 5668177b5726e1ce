//! Dataset persistence.
//!
//! Binary little-endian file with a versioned header:
//! magic `TDF1`, u32 record count, u32 node count K, then per record the
//! serialized [`DescentProblem`], the time-scale σ, and the 17×K plan values
//! in row-major order.

use crate::plan::{DescentProblem, TrajectoryPlan, PLAN_ROWS};
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

const MAGIC: &[u8; 4] = b"TDF1";

/// One stored trajectory with the scenario that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetRecord {
    pub problem: DescentProblem,
    pub sigma: f64,
    pub plan: TrajectoryPlan,
}

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("io error: {0}")]
    Io(#[from] io::Error),
    #[error("version mismatch: expected TDF1 header, found {found:?}")]
    VersionMismatch { found: [u8; 4] },
    #[error("truncated file: {0}")]
    Truncated(&'static str),
    #[error("shape mismatch: record has K={found}, header says K={expected}")]
    ShapeMismatch { expected: usize, found: usize },
}

fn write_f64<W: Write>(w: &mut W, v: f64) -> io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

fn write_u32<W: Write>(w: &mut W, v: u32) -> io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64, DatasetError> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)
        .map_err(|_| DatasetError::Truncated("f64 field"))?;
    Ok(f64::from_le_bytes(buf))
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32, DatasetError> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)
        .map_err(|_| DatasetError::Truncated("u32 field"))?;
    Ok(u32::from_le_bytes(buf))
}

fn write_problem<W: Write>(w: &mut W, p: &DescentProblem) -> io::Result<()> {
    for v in p.gravity {
        write_f64(w, v)?;
    }
    write_f64(w, p.fuel_rate)?;
    for v in p.thrust_offset {
        write_f64(w, v)?;
    }
    for v in p.inertia_diag {
        write_f64(w, v)?;
    }
    write_f64(w, p.tf_guess)?;
    write_u32(w, p.nodes as u32)?;
    write_f64(w, p.m_wet)?;
    write_f64(w, p.m_dry)?;
    write_f64(w, p.t_min)?;
    write_f64(w, p.t_max)?;
    write_f64(w, p.gimbal_max_deg)?;
    for arr in [p.r0, p.v0, p.w0, p.vf] {
        for v in arr {
            write_f64(w, v)?;
        }
    }
    for v in p.q0 {
        write_f64(w, v)?;
    }
    for v in p.qf {
        write_f64(w, v)?;
    }
    for v in p.final_position {
        write_f64(w, v)?;
    }
    for v in p.final_pos_constrained {
        w.write_all(&[v as u8])?;
    }
    Ok(())
}

fn read_problem<R: Read>(r: &mut R) -> Result<DescentProblem, DatasetError> {
    let vec3 = |r: &mut R| -> Result<[f64; 3], DatasetError> {
        Ok([read_f64(r)?, read_f64(r)?, read_f64(r)?])
    };
    let gravity = vec3(r)?;
    let fuel_rate = read_f64(r)?;
    let thrust_offset = vec3(r)?;
    let inertia_diag = vec3(r)?;
    let tf_guess = read_f64(r)?;
    let nodes = read_u32(r)? as usize;
    let m_wet = read_f64(r)?;
    let m_dry = read_f64(r)?;
    let t_min = read_f64(r)?;
    let t_max = read_f64(r)?;
    let gimbal_max_deg = read_f64(r)?;
    let r0 = vec3(r)?;
    let v0 = vec3(r)?;
    let w0 = vec3(r)?;
    let vf = vec3(r)?;
    let mut q0 = [0.0; 4];
    let mut qf = [0.0; 4];
    for v in &mut q0 {
        *v = read_f64(r)?;
    }
    for v in &mut qf {
        *v = read_f64(r)?;
    }
    let final_position = vec3(r)?;
    let mut flags = [0u8; 3];
    r.read_exact(&mut flags)
        .map_err(|_| DatasetError::Truncated("constraint flags"))?;
    Ok(DescentProblem {
        gravity,
        fuel_rate,
        thrust_offset,
        inertia_diag,
        tf_guess,
        nodes,
        m_wet,
        m_dry,
        t_min,
        t_max,
        gimbal_max_deg,
        r0,
        v0,
        q0,
        w0,
        vf,
        qf,
        final_position,
        final_pos_constrained: [flags[0] != 0, flags[1] != 0, flags[2] != 0],
    })
}

pub fn save_dataset(path: &Path, records: &[DatasetRecord], nodes: usize) -> Result<(), DatasetError> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    write_u32(&mut w, records.len() as u32)?;
    write_u32(&mut w, nodes as u32)?;
    for rec in records {
        if rec.plan.nodes() != nodes {
            return Err(DatasetError::ShapeMismatch {
                expected: nodes,
                found: rec.plan.nodes(),
            });
        }
        write_problem(&mut w, &rec.problem)?;
        write_f64(&mut w, rec.sigma)?;
        for row in 0..PLAN_ROWS {
            for k in 0..nodes {
                write_f64(&mut w, rec.plan.get(row, k))?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn load_dataset(path: &Path) -> Result<(Vec<DatasetRecord>, usize), DatasetError> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)
        .map_err(|_| DatasetError::Truncated("header"))?;
    if &magic != MAGIC {
        return Err(DatasetError::VersionMismatch { found: magic });
    }
    let count = read_u32(&mut r)? as usize;
    let nodes = read_u32(&mut r)? as usize;
    let mut records = Vec::with_capacity(count);
    for _ in 0..count {
        let problem = read_problem(&mut r)?;
        if problem.nodes != nodes {
            return Err(DatasetError::ShapeMismatch {
                expected: nodes,
                found: problem.nodes,
            });
        }
        let sigma = read_f64(&mut r)?;
        let mut plan = TrajectoryPlan::zeros(nodes);
        for row in 0..PLAN_ROWS {
            for k in 0..nodes {
                plan.set(row, k, read_f64(&mut r)?);
            }
        }
        records.push(DatasetRecord {
            problem,
            sigma,
            plan,
        });
    }
    Ok((records, nodes))
}

/// Plain-text export of the plans, one `node row value` triple per line.
pub fn export_plain_text(path: &Path, records: &[DatasetRecord]) -> Result<(), DatasetError> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "# records {} rows {}", records.len(), PLAN_ROWS)?;
    for (i, rec) in records.iter().enumerate() {
        writeln!(w, "# record {i} sigma {}", rec.sigma)?;
        for row in 0..PLAN_ROWS {
            for k in 0..rec.plan.nodes() {
                writeln!(w, "{k} {row} {:.17e}", rec.plan.get(row, k))?;
            }
        }
    }
    w.flush()?;
    Ok(())
}
