use crate::error::{Error, Result};
use crate::geom::Vec3;
use std::io::Write;
use std::path::Path;

pub const TRACE_MAGIC: &[u8; 4] = b"PATR";
pub const TRACE_VERSION: u32 = 1;

/// Time series recorded on the inner and outer spheres of a sensor shell.
///
/// Values are stored row-major as `[time][sensor]`; level 0 is t = 0.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryTrace {
    pub dt: f64,
    pub inner: Vec<Vec3>,
    pub outer: Vec<Vec3>,
    pub u_inner: Vec<f64>,
    pub u_outer: Vec<f64>,
}

impl BoundaryTrace {
    pub fn new(dt: f64, inner: Vec<Vec3>, outer: Vec<Vec3>, u_inner: Vec<f64>, u_outer: Vec<f64>) -> Result<Self> {
        let s = inner.len();
        if outer.len() != s {
            return Err(Error::LayoutMismatch(format!("{} inner vs {} outer sensors", s, outer.len())));
        }
        if s == 0 || u_inner.len() % s != 0 || u_outer.len() != u_inner.len() {
            return Err(Error::LayoutMismatch("series lengths are inconsistent with the sensor count".into()));
        }
        if !(dt > 0.0) {
            return Err(Error::Precondition(format!("trace dt = {dt} must be positive")));
        }
        Ok(BoundaryTrace { dt, inner, outer, u_inner, u_outer })
    }

    pub fn sensors(&self) -> usize {
        self.inner.len()
    }

    /// Number of stored time levels (steps + 1).
    pub fn times(&self) -> usize {
        self.u_inner.len() / self.sensors()
    }

    pub fn duration(&self) -> f64 {
        (self.times() - 1) as f64 * self.dt
    }

    pub fn r_inner(&self) -> f64 {
        self.inner.iter().map(|p| p.norm()).sum::<f64>() / self.sensors() as f64
    }

    pub fn r_outer(&self) -> f64 {
        self.outer.iter().map(|p| p.norm()).sum::<f64>() / self.sensors() as f64
    }

    pub fn delta_r(&self) -> f64 {
        self.r_outer() - self.r_inner()
    }

    #[inline]
    pub fn inner_at(&self, t: usize, s: usize) -> f64 {
        self.u_inner[t * self.sensors() + s]
    }

    #[inline]
    pub fn outer_at(&self, t: usize, s: usize) -> f64 {
        self.u_outer[t * self.sensors() + s]
    }

    /// Radial derivative estimate `(u_outer − u_inner)/δr`.
    pub fn dnu(&self, t: usize, s: usize) -> f64 {
        (self.outer_at(t, s) - self.inner_at(t, s)) / self.delta_r()
    }

    /// Series of sensor `s`; indices `0..S` address the inner sphere, `S..2S` the outer.
    pub fn series(&self, s: usize) -> Vec<f64> {
        let n = self.sensors();
        let (data, col) = if s < n { (&self.u_inner, s) } else { (&self.u_outer, s - n) };
        (0..self.times()).map(|t| data[t * n + col]).collect()
    }

    /// All sensor points, inner then outer.
    pub fn points(&self) -> Vec<Vec3> {
        self.inner.iter().chain(&self.outer).copied().collect()
    }

    /// Keeps only the first `levels` time levels.
    pub fn truncated(&self, levels: usize) -> BoundaryTrace {
        let n = self.sensors();
        let levels = levels.min(self.times());
        BoundaryTrace {
            dt: self.dt,
            inner: self.inner.clone(),
            outer: self.outer.clone(),
            u_inner: self.u_inner[..levels * n].to_vec(),
            u_outer: self.u_outer[..levels * n].to_vec(),
        }
    }

    pub fn scaled(&self, alpha: f64) -> BoundaryTrace {
        let mut out = self.clone();
        out.u_inner.iter_mut().chain(out.u_outer.iter_mut()).for_each(|v| *v *= alpha);
        out
    }

    pub fn rms(&self) -> f64 {
        let sum: f64 = crate::quad::pairwise_sum(
            &self.u_inner.iter().chain(&self.u_outer).map(|v| v * v).collect::<Vec<_>>(),
        );
        (sum / (2 * self.u_inner.len()) as f64).sqrt()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let n = self.sensors();
        let mut out = Vec::with_capacity(24 + 48 * n + 16 * self.u_inner.len());
        out.extend_from_slice(TRACE_MAGIC);
        out.extend_from_slice(&TRACE_VERSION.to_le_bytes());
        out.extend_from_slice(&(n as u32).to_le_bytes());
        out.extend_from_slice(&(self.times() as u32).to_le_bytes());
        out.extend_from_slice(&self.dt.to_le_bytes());
        for p in self.inner.iter().chain(&self.outer) {
            for c in [p.x, p.y, p.z] {
                out.extend_from_slice(&c.to_le_bytes());
            }
        }
        for v in self.u_inner.iter().chain(&self.u_outer) {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        let magic = r.take(4, "magic")?;
        if magic != TRACE_MAGIC {
            return Err(Error::Format { offset: 0, message: format!("bad magic {magic:?}, expected \"PATR\"") });
        }
        let version = r.u32("version")?;
        if version != TRACE_VERSION {
            return Err(Error::Format { offset: 4, message: format!("unsupported version {version}") });
        }
        let n = r.u32("sensor count")? as usize;
        let times = r.u32("time-step count")? as usize;
        let dt = r.f64("dt")?;
        if n == 0 || times == 0 || !(dt > 0.0) {
            return Err(Error::Format { offset: 12, message: format!("invalid header (sensors {n}, times {times}, dt {dt})") });
        }
        let mut pts = Vec::with_capacity(2 * n);
        for _ in 0..2 * n {
            pts.push(Vec3::new(r.f64("sensor coordinate")?, r.f64("sensor coordinate")?, r.f64("sensor coordinate")?));
        }
        let total = n * times;
        let mut u_inner = Vec::with_capacity(total);
        for _ in 0..total {
            u_inner.push(r.f64("inner values")?);
        }
        let mut u_outer = Vec::with_capacity(total);
        for _ in 0..total {
            u_outer.push(r.f64("outer values")?);
        }
        if r.pos != bytes.len() {
            return Err(Error::Format {
                offset: r.pos as u64,
                message: format!("{} trailing bytes after the outer block", bytes.len() - r.pos),
            });
        }
        let outer = pts.split_off(n);
        BoundaryTrace::new(dt, pts, outer, u_inner, u_outer)
    }

    /// Writes the binary file atomically (temporary sibling, then rename).
    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, &self.to_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }

    /// CSV with one row per time level: `t, inner_0.. , outer_0..`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let n = self.sensors();
        let mut header = String::from("t");
        for s in 0..n {
            header.push_str(&format!(",inner_{s}"));
        }
        for s in 0..n {
            header.push_str(&format!(",outer_{s}"));
        }
        writeln!(w, "{header}")?;
        for t in 0..self.times() {
            let mut line = format!("{:e}", t as f64 * self.dt);
            for s in 0..n {
                line.push_str(&format!(",{:e}", self.inner_at(t, s)));
            }
            for s in 0..n {
                line.push_str(&format!(",{:e}", self.outer_at(t, s)));
            }
            writeln!(w, "{line}")?;
        }
        Ok(())
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, len: usize, what: &str) -> Result<&'a [u8]> {
        if self.pos + len > self.bytes.len() {
            return Err(Error::Format {
                offset: self.pos as u64,
                message: format!("file truncated while reading {what} ({} bytes available, {len} needed)", self.bytes.len() - self.pos),
            });
        }
        let s = &self.bytes[self.pos..self.pos + len];
        self.pos += len;
        Ok(s)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn f64(&mut self, what: &str) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }
}

/// Writes `bytes` to a temporary file next to `path` and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().and_then(|s| s.to_str()).unwrap_or("out");
    let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> BoundaryTrace {
        let inner = vec![Vec3::new(0.5, 0.0, 0.0), Vec3::new(0.0, 0.5, 0.0)];
        let outer = inner.iter().map(|p| p * 1.1).collect();
        let u: Vec<f64> = (0..6).map(|i| (i as f64 * 0.37).sin() * 1e-3).collect();
        let v: Vec<f64> = u.iter().map(|x| x * 0.9 + 1e-300).collect();
        BoundaryTrace::new(0.01, inner, outer, u, v).unwrap()
    }

    #[test]
    fn binary_round_trip_is_bit_exact() {
        let t = sample();
        let bytes = t.to_bytes();
        assert_eq!(&bytes[..4], b"PATR");
        let back = BoundaryTrace::from_bytes(&bytes).unwrap();
        assert_eq!(back.to_bytes(), bytes);
        assert_eq!(back, t);
    }

    #[test]
    fn truncation_reports_offset() {
        let bytes = sample().to_bytes();
        let cut = &bytes[..bytes.len() - 5];
        match BoundaryTrace::from_bytes(cut) {
            Err(Error::Format { offset, .. }) => assert_eq!(offset as usize, bytes.len() - 8),
            other => panic!("expected format error, got {other:?}"),
        }
        assert!(matches!(BoundaryTrace::from_bytes(b"PATX"), Err(Error::Format { offset: 0, .. })));
    }

    #[test]
    fn csv_has_one_row_per_level() {
        let t = sample();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1 + t.times());
        assert!(text.starts_with("t,inner_0,inner_1,outer_0,outer_1"));
    }

    #[test]
    fn derivative_uses_shell_spacing() {
        let t = sample();
        let d = t.dnu(1, 0);
        assert!((d - (t.outer_at(1, 0) - t.inner_at(1, 0)) / 0.05).abs() < 1e-12);
    }
}
