//! CSV schemas and readers/writers.
//!
//! Three input schemas, all headed and keyed by the VO epoch index `k`:
//!
//! - `vo.csv`:    `k,t,qw,qx,qy,qz,tx,ty,tz`: relative transform from frame
//!   `k` to `k+1`, quaternion scalar-first, translation in VO units expressed
//!   in frame `k`. Epochs must be contiguous.
//! - `gps.csv`:   `k,t,vn,ve,vd`: NED velocity in m/s. Epochs may be sparse
//!   (a slower GPS simply skips indices).
//! - `truth.csv`: `k,t,qw,qx,qy,qz,pn,pe,pd`: camera-to-NED attitude and NED
//!   position in meters.
//!
//! Quaternions are normalized on read and rejected when their norm is off by
//! more than 1e-6. All numeric output is printed with 17 significant digits
//! so write/read round-trips are lossless.

use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::{Matrix3, Quaternion, Rotation3, UnitQuaternion, Vector3};
use vgo_core::measurement::{RelativeTransform, VelocitySample};
use vgo_core::so3::Rotation;

use crate::error::CliError;

/// Accepted deviation of an input quaternion's norm from one.
pub const QUAT_NORM_TOL: f64 = 1e-6;

/// Formats with 17 significant digits; parsing the result recovers the exact
/// f64.
pub fn format_g17(x: f64) -> String {
    format!("{:.16e}", x)
}

/// Scalar-first quaternion of a rotation matrix.
pub fn rotation_to_quat(r: &Rotation) -> [f64; 4] {
    let q = UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(
        *r.matrix(),
    ));
    [q.w, q.i, q.j, q.k]
}

/// Rotation matrix from a scalar-first quaternion, normalizing first.
/// `context` names the row in error messages.
pub fn quat_to_rotation(wxyz: [f64; 4], context: &str) -> Result<Rotation, CliError> {
    let q = Quaternion::new(wxyz[0], wxyz[1], wxyz[2], wxyz[3]);
    let norm = q.norm();
    if !norm.is_finite() || (norm - 1.0).abs() > QUAT_NORM_TOL {
        return Err(CliError::schema(format!(
            "{context}: quaternion norm {norm} deviates from 1 by more than {QUAT_NORM_TOL}"
        )));
    }
    let m: Matrix3<f64> = UnitQuaternion::from_quaternion(q)
        .to_rotation_matrix()
        .into_inner();
    Ok(Rotation::from_matrix_unchecked(m))
}

/// One `vo.csv` row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VoRecord {
    pub k: u64,
    pub t: f64,
    pub rel: RelativeTransform,
}

/// One `gps.csv` row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GpsRecord {
    pub k: u64,
    pub sample: VelocitySample,
}

/// One `truth.csv` row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruthRecord {
    pub k: u64,
    pub t: f64,
    pub r: Rotation,
    pub p: Vector3<f64>,
}

struct RowReader {
    records: Vec<csv::StringRecord>,
    path: String,
}

impl RowReader {
    fn open(path: &Path, expected_header: &[&str]) -> Result<Self, CliError> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| CliError::schema(format!("{}: {e}", path.display())))?;
        let header = reader
            .headers()
            .map_err(|e| CliError::schema(format!("{}: {e}", path.display())))?
            .clone();
        let got: Vec<&str> = header.iter().collect();
        if got != expected_header {
            return Err(CliError::schema(format!(
                "{}: expected header {}, got {}",
                path.display(),
                expected_header.join(","),
                got.join(",")
            )));
        }
        let records = reader
            .into_records()
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| CliError::schema(format!("{}: {e}", path.display())))?;
        Ok(RowReader {
            records,
            path: path.display().to_string(),
        })
    }

    fn context(&self, row: usize) -> String {
        // +2: one for the header, one for 1-based numbering
        format!("{} row {}", self.path, row + 2)
    }

    fn field(&self, row: usize, col: usize) -> Result<f64, CliError> {
        let raw = &self.records[row][col];
        let value: f64 = raw
            .parse()
            .map_err(|_| CliError::schema(format!("{}: bad number `{raw}`", self.context(row))))?;
        if !value.is_finite() {
            return Err(CliError::schema(format!(
                "{}: non-finite value `{raw}`",
                self.context(row)
            )));
        }
        Ok(value)
    }

    fn index(&self, row: usize) -> Result<u64, CliError> {
        let raw = &self.records[row][0];
        raw.parse()
            .map_err(|_| CliError::schema(format!("{}: bad epoch index `{raw}`", self.context(row))))
    }
}

/// Reads and validates `vo.csv`: contiguous epochs, strictly increasing
/// timestamps, near-unit quaternions (normalized on read).
pub fn read_vo_csv(path: &Path) -> Result<Vec<VoRecord>, CliError> {
    let reader = RowReader::open(path, &["k", "t", "qw", "qx", "qy", "qz", "tx", "ty", "tz"])?;
    let mut out = Vec::with_capacity(reader.records.len());
    let mut prev: Option<(u64, f64)> = None;
    for row in 0..reader.records.len() {
        let k = reader.index(row)?;
        let t = reader.field(row, 1)?;
        if let Some((pk, pt)) = prev {
            if k != pk + 1 {
                return Err(CliError::schema(format!(
                    "{}: epoch index {k} does not follow {pk} (epochs must be contiguous)",
                    reader.context(row)
                )));
            }
            if t <= pt {
                return Err(CliError::schema(format!(
                    "{}: timestamp {t} does not increase past {pt}",
                    reader.context(row)
                )));
            }
        }
        prev = Some((k, t));
        let rot = quat_to_rotation(
            [
                reader.field(row, 2)?,
                reader.field(row, 3)?,
                reader.field(row, 4)?,
                reader.field(row, 5)?,
            ],
            &reader.context(row),
        )?;
        let trans = Vector3::new(
            reader.field(row, 6)?,
            reader.field(row, 7)?,
            reader.field(row, 8)?,
        );
        out.push(VoRecord {
            k,
            t,
            rel: RelativeTransform { rot, trans },
        });
    }
    if out.is_empty() {
        return Err(CliError::schema(format!("{}: no data rows", path.display())));
    }
    Ok(out)
}

/// Reads and validates `gps.csv`: strictly increasing epochs (gaps allowed)
/// and timestamps.
pub fn read_gps_csv(path: &Path) -> Result<Vec<GpsRecord>, CliError> {
    let reader = RowReader::open(path, &["k", "t", "vn", "ve", "vd"])?;
    let mut out = Vec::with_capacity(reader.records.len());
    let mut prev: Option<(u64, f64)> = None;
    for row in 0..reader.records.len() {
        let k = reader.index(row)?;
        let t = reader.field(row, 1)?;
        if let Some((pk, pt)) = prev {
            if k <= pk {
                return Err(CliError::schema(format!(
                    "{}: epoch index {k} does not increase past {pk}",
                    reader.context(row)
                )));
            }
            if t <= pt {
                return Err(CliError::schema(format!(
                    "{}: timestamp {t} does not increase past {pt} (duplicate or reordered sample)",
                    reader.context(row)
                )));
            }
        }
        prev = Some((k, t));
        let v = Vector3::new(
            reader.field(row, 2)?,
            reader.field(row, 3)?,
            reader.field(row, 4)?,
        );
        out.push(GpsRecord {
            k,
            sample: VelocitySample { t, v },
        });
    }
    if out.is_empty() {
        return Err(CliError::schema(format!("{}: no data rows", path.display())));
    }
    Ok(out)
}

/// Reads and validates `truth.csv`; epochs must strictly increase.
pub fn read_truth_csv(path: &Path) -> Result<BTreeMap<u64, TruthRecord>, CliError> {
    let reader = RowReader::open(path, &["k", "t", "qw", "qx", "qy", "qz", "pn", "pe", "pd"])?;
    let mut out = BTreeMap::new();
    let mut prev: Option<u64> = None;
    for row in 0..reader.records.len() {
        let k = reader.index(row)?;
        if let Some(pk) = prev {
            if k <= pk {
                return Err(CliError::schema(format!(
                    "{}: epoch index {k} does not increase past {pk}",
                    reader.context(row)
                )));
            }
        }
        prev = Some(k);
        let t = reader.field(row, 1)?;
        let r = quat_to_rotation(
            [
                reader.field(row, 2)?,
                reader.field(row, 3)?,
                reader.field(row, 4)?,
                reader.field(row, 5)?,
            ],
            &reader.context(row),
        )?;
        let p = Vector3::new(
            reader.field(row, 6)?,
            reader.field(row, 7)?,
            reader.field(row, 8)?,
        );
        out.insert(k, TruthRecord { k, t, r, p });
    }
    if out.is_empty() {
        return Err(CliError::schema(format!("{}: no data rows", path.display())));
    }
    Ok(out)
}

fn open_writer(path: &Path) -> Result<csv::Writer<std::fs::File>, CliError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    csv::Writer::from_path(path).map_err(|e| CliError::schema(format!("{}: {e}", path.display())))
}

fn finish(mut w: csv::Writer<std::fs::File>, path: &Path) -> Result<(), CliError> {
    w.flush().map_err(|e| CliError::schema(format!("{}: {e}", path.display())))
}

pub fn write_vo_csv(path: &Path, rows: &[VoRecord]) -> Result<(), CliError> {
    let mut w = open_writer(path)?;
    w.write_record(["k", "t", "qw", "qx", "qy", "qz", "tx", "ty", "tz"])
        .map_err(|e| CliError::schema(e.to_string()))?;
    for row in rows {
        let q = rotation_to_quat(&row.rel.rot);
        let mut rec = vec![row.k.to_string(), format_g17(row.t)];
        rec.extend(q.iter().map(|x| format_g17(*x)));
        rec.extend(row.rel.trans.iter().map(|x| format_g17(*x)));
        w.write_record(&rec).map_err(|e| CliError::schema(e.to_string()))?;
    }
    finish(w, path)
}

pub fn write_gps_csv(path: &Path, rows: &[GpsRecord]) -> Result<(), CliError> {
    let mut w = open_writer(path)?;
    w.write_record(["k", "t", "vn", "ve", "vd"])
        .map_err(|e| CliError::schema(e.to_string()))?;
    for row in rows {
        let mut rec = vec![row.k.to_string(), format_g17(row.sample.t)];
        rec.extend(row.sample.v.iter().map(|x| format_g17(*x)));
        w.write_record(&rec).map_err(|e| CliError::schema(e.to_string()))?;
    }
    finish(w, path)
}

pub fn write_truth_csv(path: &Path, rows: &[TruthRecord]) -> Result<(), CliError> {
    let mut w = open_writer(path)?;
    w.write_record(["k", "t", "qw", "qx", "qy", "qz", "pn", "pe", "pd"])
        .map_err(|e| CliError::schema(e.to_string()))?;
    for row in rows {
        let q = rotation_to_quat(&row.r);
        let mut rec = vec![row.k.to_string(), format_g17(row.t)];
        rec.extend(q.iter().map(|x| format_g17(*x)));
        rec.extend(row.p.iter().map(|x| format_g17(*x)));
        w.write_record(&rec).map_err(|e| CliError::schema(e.to_string()))?;
    }
    finish(w, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use vgo_core::so3::random_rotation;

    #[test]
    fn g17_round_trips_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let x = f64::from_bits(rand::Rng::gen::<u64>(&mut rng));
            if !x.is_finite() {
                continue;
            }
            let back: f64 = format_g17(x).parse().unwrap();
            assert_eq!(back.to_bits(), x.to_bits());
        }
    }

    #[test]
    fn quaternion_round_trips_to_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let r = random_rotation(&mut rng, std::f64::consts::PI);
            let q = rotation_to_quat(&r);
            let back = quat_to_rotation(q, "test").unwrap();
            assert!((back.matrix() - r.matrix()).norm() < 1e-14);
        }
    }

    #[test]
    fn quaternion_norm_is_validated() {
        assert!(quat_to_rotation([0.9, 0.0, 0.0, 0.0], "test").is_err());
        assert!(quat_to_rotation([1.0 + 2e-6, 0.0, 0.0, 0.0], "test").is_err());
        assert!(quat_to_rotation([1.0 - 1e-7, 0.0, 0.0, 0.0], "test").is_ok());
    }
}
