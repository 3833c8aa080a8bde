//! Persistence: binary field snapshots and CSV logs.
//!
//! Snapshot layout (little-endian): magic `DIRB`, version `u32`, `N` `u32`,
//! `L` `f64`, component count `u32` (= 4), then for each component the
//! `N^3` values as interleaved `f32` real/imaginary pairs, `z` fastest.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::field::SpinorField3D;
use crate::grid::GridSpec;
use crate::partialwave::{RadialNormRecord, RadialSpinorState};
use crate::propagator::NormRecord;
use crate::C64;

pub const SNAPSHOT_MAGIC: &[u8; 4] = b"DIRB";
pub const SNAPSHOT_VERSION: u32 = 1;

pub fn write_snapshot(path: &Path, u: &SpinorField3D) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    let g = u.grid();
    w.write_all(SNAPSHOT_MAGIC)?;
    w.write_all(&SNAPSHOT_VERSION.to_le_bytes())?;
    w.write_all(&(g.n as u32).to_le_bytes())?;
    w.write_all(&g.half_width.to_le_bytes())?;
    w.write_all(&4u32.to_le_bytes())?;
    for c in 0..4 {
        for z in u.component(c) {
            w.write_all(&(z.re as f32).to_le_bytes())?;
            w.write_all(&(z.im as f32).to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_snapshot(path: &Path) -> Result<SpinorField3D> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != SNAPSHOT_MAGIC {
        return Err(Error::Format(format!("{}: not a DIRB snapshot", path.display())));
    }
    let mut b4 = [0u8; 4];
    let mut b8 = [0u8; 8];
    r.read_exact(&mut b4)?;
    let version = u32::from_le_bytes(b4);
    if version != SNAPSHOT_VERSION {
        return Err(Error::Format(format!("unsupported snapshot version {version}")));
    }
    r.read_exact(&mut b4)?;
    let n = u32::from_le_bytes(b4) as usize;
    r.read_exact(&mut b8)?;
    let l = f64::from_le_bytes(b8);
    r.read_exact(&mut b4)?;
    if u32::from_le_bytes(b4) != 4 {
        return Err(Error::Format("snapshot must have 4 components".into()));
    }
    let grid = GridSpec::new(n, l).map_err(|e| Error::Format(format!("snapshot header: {e}")))?;
    let mut comps: [Vec<C64>; 4] = Default::default();
    let mut buf = vec![0u8; grid.len() * 8];
    for c in comps.iter_mut() {
        r.read_exact(&mut buf)?;
        *c = buf
            .chunks_exact(8)
            .map(|ch| {
                let re = f32::from_le_bytes(ch[..4].try_into().expect("4 bytes"));
                let im = f32::from_le_bytes(ch[4..].try_into().expect("4 bytes"));
                C64::new(re as f64, im as f64)
            })
            .collect();
    }
    SpinorField3D::new(grid, comps)
}

/// Plain-text snapshot index: a fingerprint comment, then one `t filename`
/// line per snapshot.
pub fn write_snapshot_index(path: &Path, fingerprint: &str, entries: &[(f64, String)]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "# fingerprint: {fingerprint}")?;
    for (t, name) in entries {
        writeln!(w, "{t} {name}")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_snapshot_index(path: &Path) -> Result<Vec<(f64, String)>> {
    let r = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for line in r.lines() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (t, name) = line
            .split_once(' ')
            .ok_or_else(|| Error::Format(format!("bad index line {line:?}")))?;
        let t: f64 = t.parse().map_err(|_| Error::Format(format!("bad time {t:?}")))?;
        out.push((t, name.to_string()));
    }
    Ok(out)
}

/// Opens `path` for CSV writing with a `# fingerprint: ...` header line.
pub fn csv_writer(path: &Path, fingerprint: &str) -> Result<csv::Writer<BufWriter<File>>> {
    let mut f = BufWriter::new(File::create(path)?);
    writeln!(f, "# fingerprint: {fingerprint}")?;
    Ok(csv::Writer::from_writer(f))
}

/// Opens a CSV file, skipping `#` comment lines.
pub fn csv_reader(path: &Path) -> Result<csv::Reader<File>> {
    Ok(csv::ReaderBuilder::new().comment(Some(b'#')).from_path(path)?)
}

/// Reads the fingerprint header comment, if present.
pub fn read_fingerprint(path: &Path) -> Result<Option<String>> {
    let mut line = String::new();
    BufReader::new(File::open(path)?).read_line(&mut line)?;
    Ok(line
        .trim()
        .strip_prefix("# fingerprint:")
        .map(|s| s.trim().to_string()))
}

pub fn write_norm_csv(path: &Path, fingerprint: &str, records: &[NormRecord]) -> Result<()> {
    let mut w = csv_writer(path, fingerprint)?;
    w.write_record(["t", "L2", "H1", "Linf"])?;
    for r in records {
        w.write_record(&[fmt(r.t), fmt(r.l2), fmt(r.h1), fmt(r.linf)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_radial_norm_csv(path: &Path, fingerprint: &str, records: &[RadialNormRecord]) -> Result<()> {
    let recs: Vec<NormRecord> = records
        .iter()
        .map(|r| NormRecord {
            t: r.t,
            l2: r.l2,
            h1: r.h1,
            linf: r.linf,
        })
        .collect();
    write_norm_csv(path, fingerprint, &recs)
}

pub fn read_norm_csv(path: &Path) -> Result<Vec<NormRecord>> {
    let mut rdr = csv_reader(path)?;
    let mut out = Vec::new();
    for rec in rdr.deserialize() {
        out.push(rec?);
    }
    Ok(out)
}

/// Radial trajectory: one row per `(t, i)` with the real and imaginary parts
/// of `u+(r_i)` and `u-(r_i)`.
pub fn write_radial_csv(path: &Path, fingerprint: &str, snapshots: &[(f64, RadialSpinorState)]) -> Result<()> {
    let mut w = csv_writer(path, fingerprint)?;
    w.write_record(["t", "i", "r", "re_u_plus", "im_u_plus", "re_u_minus", "im_u_minus"])?;
    for (t, s) in snapshots {
        for i in 0..s.r.len() {
            w.write_record(&[
                fmt(*t),
                i.to_string(),
                fmt(s.r[i]),
                fmt(s.u_plus[i].re),
                fmt(s.u_plus[i].im),
                fmt(s.u_minus[i].re),
                fmt(s.u_minus[i].im),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Shortest round-trip representation, so CSVs are bit-faithful.
pub fn fmt(x: f64) -> String {
    format!("{x:e}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snapshot_round_trip_to_single_precision() {
        let dir = tempfile::tempdir().unwrap();
        let g = GridSpec::new(8, 2.0).unwrap();
        let u = SpinorField3D::from_fn(g, |x| {
            [C64::new(x[0], 0.5), C64::new(-x[1], x[2]), C64::new(1.0 / 3.0, 0.0), C64::new(0.0, x[0] * x[1])]
        });
        let p = dir.path().join("s.dirb");
        write_snapshot(&p, &u).unwrap();
        let bytes = std::fs::read(&p).unwrap();
        assert_eq!(&bytes[..4], b"DIRB");
        assert_eq!(bytes.len(), 4 + 4 + 4 + 8 + 4 + 4 * g.len() * 8);
        let v = read_snapshot(&p).unwrap();
        assert!(v.relative_l2_distance(&u).unwrap() < 1e-7);
    }

    #[test]
    fn norm_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("n.csv");
        let recs = vec![
            NormRecord { t: 0.0, l2: 1.0, h1: 2.0, linf: 0.1 },
            NormRecord { t: 0.5, l2: 1.0 / 3.0, h1: 2.5, linf: 0.2 },
        ];
        write_norm_csv(&p, "abc", &recs).unwrap();
        assert_eq!(read_fingerprint(&p).unwrap().as_deref(), Some("abc"));
        assert_eq!(read_norm_csv(&p).unwrap(), recs);
    }

    #[test]
    fn index_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("index.txt");
        let e = vec![(0.0, "a.dirb".to_string()), (0.25, "b.dirb".to_string())];
        write_snapshot_index(&p, "abc", &e).unwrap();
        assert_eq!(read_fingerprint(&p).unwrap().as_deref(), Some("abc"));
        assert_eq!(read_snapshot_index(&p).unwrap(), e);
    }
}
