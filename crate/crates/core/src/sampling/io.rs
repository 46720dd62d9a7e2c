//! Files of a dataset item: joints text, raster stack and binary samples.

use std::fs;
use std::path::Path;

use super::{Heatmaps, JointSet, OccupancySample, Strategy, JOINT_COUNT};
use crate::error::{Error, Result};
use crate::meshcore::Vec3;

pub fn write_joints(path: impl AsRef<Path>, joints: &JointSet) -> Result<()> {
    Ok(fs::write(path, joints.to_text())?)
}

pub fn read_joints(path: impl AsRef<Path>) -> Result<JointSet> {
    JointSet::parse(&fs::read_to_string(path)?)
}

const PGM_MAX: f64 = 65535.0;

/// Silhouette and the heatmap channels stacked vertically in one 16-bit
/// binary PGM: `width` columns, `height * (1 + 17)` rows, silhouette first.
/// Values in `[0, 1]` are quantized to 16 bits.
pub fn encode_raster_stack(silhouette: &[f64], heatmaps: &Heatmaps) -> Result<Vec<u8>> {
    let (h, w) = (heatmaps.height, heatmaps.width);
    if silhouette.len() != h * w || heatmaps.data.len() != JOINT_COUNT * h * w {
        return Err(Error::DimensionMismatch("silhouette and heatmaps must share dimensions".into()));
    }
    let mut out = format!("P5\n{w} {}\n65535\n", h * (1 + JOINT_COUNT)).into_bytes();
    for &v in silhouette.iter().chain(&heatmaps.data) {
        let q = (v.clamp(0.0, 1.0) * PGM_MAX).round() as u16;
        out.extend_from_slice(&q.to_be_bytes());
    }
    Ok(out)
}

pub fn decode_raster_stack(bytes: &[u8]) -> Result<(Vec<f64>, Heatmaps)> {
    // Header: magic, width, height, maxval separated by single whitespace.
    let mut fields = Vec::new();
    let mut pos = 0;
    while fields.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::Format("truncated PGM header".into()));
        }
        fields.push(std::str::from_utf8(&bytes[start..pos]).map_err(|_| Error::Format("PGM header".into()))?);
    }
    pos += 1;
    if fields[0] != "P5" || fields[3] != "65535" {
        return Err(Error::Format("expected a 16-bit binary PGM".into()));
    }
    let parse = |s: &str| s.parse::<usize>().map_err(|e| Error::Format(format!("PGM size: {e}")));
    let (w, rows) = (parse(fields[1])?, parse(fields[2])?);
    if rows % (1 + JOINT_COUNT) != 0 {
        return Err(Error::Format(format!("{rows} rows is not a stack of {} rasters", 1 + JOINT_COUNT)));
    }
    let h = rows / (1 + JOINT_COUNT);
    let body = &bytes[pos.min(bytes.len())..];
    if body.len() != 2 * w * rows {
        return Err(Error::Format(format!("PGM body has {} bytes, expected {}", body.len(), 2 * w * rows)));
    }
    let values: Vec<f64> = body.chunks_exact(2).map(|c| u16::from_be_bytes([c[0], c[1]]) as f64 / PGM_MAX).collect();
    let silhouette = values[..h * w].to_vec();
    Ok((silhouette, Heatmaps { height: h, width: w, data: values[h * w..].to_vec() }))
}

pub fn write_raster_stack(path: impl AsRef<Path>, silhouette: &[f64], heatmaps: &Heatmaps) -> Result<()> {
    Ok(fs::write(path, encode_raster_stack(silhouette, heatmaps)?)?)
}

pub fn read_raster_stack(path: impl AsRef<Path>) -> Result<(Vec<f64>, Heatmaps)> {
    decode_raster_stack(&fs::read(path)?)
}

/// Little-endian `u32` count, then per sample three `f32` coordinates, a
/// `u8` label and a `u8` strategy tag.
pub fn encode_samples(samples: &[OccupancySample]) -> Vec<u8> {
    let mut out = Vec::with_capacity(4 + samples.len() * 14);
    out.extend_from_slice(&(samples.len() as u32).to_le_bytes());
    for s in samples {
        for k in 0..3 {
            out.extend_from_slice(&(s.point[k] as f32).to_le_bytes());
        }
        out.push(s.inside as u8);
        out.push(s.strategy as u8);
    }
    out
}

pub fn decode_samples(bytes: &[u8]) -> Result<Vec<OccupancySample>> {
    if bytes.len() < 4 {
        return Err(Error::Format("samples file shorter than its header".into()));
    }
    let n = u32::from_le_bytes(bytes[..4].try_into().unwrap()) as usize;
    let body = &bytes[4..];
    if body.len() != n * 14 {
        return Err(Error::Format(format!("samples file holds {} bytes for {n} records", body.len())));
    }
    body.chunks_exact(14)
        .map(|r| {
            let f = |i: usize| f32::from_le_bytes(r[4 * i..4 * i + 4].try_into().unwrap()) as f64;
            let inside = match r[12] {
                0 => false,
                1 => true,
                v => return Err(Error::Format(format!("bad label byte {v}"))),
            };
            Ok(OccupancySample { point: Vec3::new(f(0), f(1), f(2)), inside, strategy: Strategy::from_u8(r[13])? })
        })
        .collect()
}

pub fn write_samples(path: impl AsRef<Path>, samples: &[OccupancySample]) -> Result<()> {
    Ok(fs::write(path, encode_samples(samples))?)
}

pub fn read_samples(path: impl AsRef<Path>) -> Result<Vec<OccupancySample>> {
    decode_samples(&fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn samples_round_trip() {
        let s = vec![
            OccupancySample { point: Vec3::new(0.5, -1.25, 3.0), inside: true, strategy: Strategy::JointSphere },
            OccupancySample { point: Vec3::new(0.0, 2.0, -0.125), inside: false, strategy: Strategy::Uniform },
        ];
        assert_eq!(decode_samples(&encode_samples(&s)).unwrap(), s);
        assert!(decode_samples(&encode_samples(&s)[..10]).is_err());
    }

    #[test]
    fn raster_round_trip_within_quantization() {
        let mut hm = Heatmaps::zeros(4, 5);
        for (i, v) in hm.data.iter_mut().enumerate() {
            *v = (i % 7) as f64 / 6.0;
        }
        let sil: Vec<f64> = (0..20).map(|i| (i % 2) as f64).collect();
        let (s2, h2) = decode_raster_stack(&encode_raster_stack(&sil, &hm).unwrap()).unwrap();
        assert_eq!(s2, sil);
        assert_eq!((h2.height, h2.width), (4, 5));
        for (a, b) in h2.data.iter().zip(&hm.data) {
            assert!((a - b).abs() <= 0.5 / PGM_MAX + 1e-15);
        }
    }
}
