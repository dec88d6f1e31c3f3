use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::quad::pairwise_sum;
use std::fmt::Write as _;

/// Per-sensor Taylor coefficients `u^(k)`, `k = 0..=K`, of the Laplace transform at p = 0.
///
/// Sensor columns are the inner sphere followed by the outer sphere.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesCoefficients {
    pub inner: Vec<Vec3>,
    pub outer: Vec<Vec3>,
    /// `values[k][sensor]`.
    pub values: Vec<Vec<f64>>,
    /// Estimated relative truncation error per order.
    pub truncation: Vec<f64>,
}

impl SeriesCoefficients {
    pub fn new(inner: Vec<Vec3>, outer: Vec<Vec3>, values: Vec<Vec<f64>>, truncation: Vec<f64>) -> Result<Self> {
        let s = inner.len() + outer.len();
        if inner.len() != outer.len() || values.iter().any(|v| v.len() != s) || truncation.len() != values.len() {
            return Err(Error::LayoutMismatch("coefficient columns do not match the sensor layout".into()));
        }
        Ok(SeriesCoefficients { inner, outer, values, truncation })
    }

    pub fn k_max(&self) -> usize {
        self.values.len() - 1
    }

    /// Sensors per sphere.
    pub fn sensors(&self) -> usize {
        self.inner.len()
    }

    pub fn inner_values(&self, k: usize) -> &[f64] {
        &self.values[k][..self.sensors()]
    }

    pub fn outer_values(&self, k: usize) -> &[f64] {
        &self.values[k][self.sensors()..]
    }

    pub fn same_layout(&self, other: &SeriesCoefficients) -> bool {
        self.inner == other.inner && self.outer == other.outer
    }

    /// Keeps orders `0..=k`.
    pub fn truncated(&self, k: usize) -> SeriesCoefficients {
        let k = k.min(self.k_max());
        SeriesCoefficients {
            inner: self.inner.clone(),
            outer: self.outer.clone(),
            values: self.values[..=k].to_vec(),
            truncation: self.truncation[..=k].to_vec(),
        }
    }

    pub fn scaled(&self, alpha: f64) -> SeriesCoefficients {
        let mut out = self.clone();
        out.values.iter_mut().flatten().for_each(|v| *v *= alpha);
        out
    }

    /// `(mean, std/|mean|)` of `u^(k)` over the inner sphere.
    pub fn constancy(&self, k: usize) -> (f64, f64) {
        let v = self.inner_values(k);
        let n = v.len() as f64;
        let mean = pairwise_sum(v) / n;
        let var = pairwise_sum(&v.iter().map(|x| (x - mean).powi(2)).collect::<Vec<_>>()) / n;
        (mean, var.sqrt() / mean.abs())
    }

    pub fn max_abs(&self, k: usize) -> f64 {
        self.values[k].iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Plain-text form with 17 significant digits; [`Self::from_text`] inverts it bit-exactly.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        writeln!(s, "# paspeed series coefficients v1").unwrap();
        writeln!(s, "sensors {}", self.sensors()).unwrap();
        writeln!(s, "kmax {}", self.k_max()).unwrap();
        let trunc: Vec<String> = self.truncation.iter().map(|v| format!("{v:.16e}")).collect();
        writeln!(s, "truncation {}", trunc.join(" ")).unwrap();
        writeln!(s, "# sphere x y z u0..uK").unwrap();
        for (i, p) in self.inner.iter().chain(&self.outer).enumerate() {
            let tag = if i < self.sensors() { "inner" } else { "outer" };
            write!(s, "{tag} {:.16e} {:.16e} {:.16e}", p.x, p.y, p.z).unwrap();
            for k in 0..=self.k_max() {
                write!(s, " {:.16e}", self.values[k][i]).unwrap();
            }
            s.push('\n');
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim_start().starts_with('#') && !l.trim().is_empty());
        let bad = |line: usize, msg: &str| Error::Format { offset: line as u64, message: format!("line {}: {msg}", line + 1) };
        let mut header = |key: &str| -> Result<(usize, Vec<String>)> {
            let (i, l) = lines.next().ok_or_else(|| bad(0, &format!("missing `{key}` line")))?;
            let mut it = l.split_whitespace();
            if it.next() != Some(key) {
                return Err(bad(i, &format!("expected `{key}`")));
            }
            Ok((i, it.map(str::to_owned).collect()))
        };
        let (i, v) = header("sensors")?;
        let s: usize = v.first().and_then(|x| x.parse().ok()).ok_or_else(|| bad(i, "bad sensor count"))?;
        let (i, v) = header("kmax")?;
        let k: usize = v.first().and_then(|x| x.parse().ok()).ok_or_else(|| bad(i, "bad kmax"))?;
        let (i, v) = header("truncation")?;
        let truncation: Vec<f64> =
            v.iter().map(|x| x.parse::<f64>()).collect::<std::result::Result<_, _>>().map_err(|_| bad(i, "bad number"))?;
        if truncation.len() != k + 1 {
            return Err(bad(i, "truncation needs kmax + 1 entries"));
        }
        let mut pts = Vec::with_capacity(2 * s);
        let mut values = vec![Vec::with_capacity(2 * s); k + 1];
        for row in 0..2 * s {
            let (i, l) = lines.next().ok_or_else(|| bad(usize::MAX - 1, "missing sensor rows"))?;
            let mut it = l.split_whitespace();
            let expect = if row < s { "inner" } else { "outer" };
            if it.next() != Some(expect) {
                return Err(bad(i, &format!("expected `{expect}` row")));
            }
            let nums: Vec<f64> =
                it.map(|x| x.parse::<f64>()).collect::<std::result::Result<_, _>>().map_err(|_| bad(i, "bad number"))?;
            if nums.len() != 4 + k {
                return Err(bad(i, &format!("expected {} numbers, found {}", 4 + k, nums.len())));
            }
            pts.push(Vec3::new(nums[0], nums[1], nums[2]));
            for (kk, col) in values.iter_mut().enumerate() {
                col.push(nums[3 + kk]);
            }
        }
        let outer = pts.split_off(s);
        SeriesCoefficients::new(pts, outer, values, truncation)
    }
}

/// Per-order relative RMS discrepancy between two coefficient sets.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CrossValidation {
    /// `‖a_k − b_k‖ / ‖b_k‖` over both spheres.
    pub relative_rms: Vec<f64>,
    pub tolerance: f64,
    pub pass: bool,
}

/// Compares `a` against the reference `b`; orders 1..=min(K, 4) gate the verdict.
pub fn cross_validate(a: &SeriesCoefficients, b: &SeriesCoefficients, tolerance: f64) -> Result<CrossValidation> {
    if !a.same_layout(b) {
        return Err(Error::LayoutMismatch("coefficient sets use different sensor layouts".into()));
    }
    let k = a.k_max().min(b.k_max());
    let relative_rms: Vec<f64> = (0..=k)
        .map(|kk| {
            let num: Vec<f64> = a.values[kk].iter().zip(&b.values[kk]).map(|(x, y)| (x - y).powi(2)).collect();
            let den: Vec<f64> = b.values[kk].iter().map(|y| y * y).collect();
            let (num, den) = (pairwise_sum(&num), pairwise_sum(&den));
            if den == 0.0 {
                if num == 0.0 { 0.0 } else { f64::INFINITY }
            } else {
                (num / den).sqrt()
            }
        })
        .collect();
    let pass = relative_rms.iter().enumerate().filter(|(kk, _)| (1..=4).contains(kk)).all(|(_, r)| *r <= tolerance);
    Ok(CrossValidation { relative_rms, tolerance, pass })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> SeriesCoefficients {
        let inner = vec![Vec3::new(0.5, 0.0, 0.0), Vec3::new(0.0, 0.0, -0.5)];
        let outer = inner.iter().map(|p| p * 1.2).collect();
        let values = (0..5).map(|k| (0..4).map(|s| ((k * 7 + s) as f64).sin() / 3.0).collect()).collect();
        SeriesCoefficients::new(inner, outer, values, vec![0.0, 1e-3, 2e-3, 1.0 / 3.0, 0.1]).unwrap()
    }

    #[test]
    fn text_round_trip_is_bit_exact() {
        let c = sample();
        let text = c.to_text();
        let back = SeriesCoefficients::from_text(&text).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.to_text(), text);
    }

    #[test]
    fn malformed_text_is_rejected() {
        let text = sample().to_text().replace("outer", "outre");
        assert!(matches!(SeriesCoefficients::from_text(&text), Err(Error::Format { .. })));
    }

    #[test]
    fn discrepancy_definitions() {
        let c = sample();
        let same = cross_validate(&c, &c, 0.05).unwrap();
        assert!(same.relative_rms.iter().all(|v| *v == 0.0) && same.pass);
        let double = cross_validate(&c.scaled(2.0), &c, 0.05).unwrap();
        assert!(double.relative_rms.iter().all(|v| (v - 1.0).abs() < 1e-14));
        assert!(!double.pass);
        let mut other = c.clone();
        other.inner[0].x = 0.4;
        assert!(matches!(cross_validate(&other, &c, 0.05), Err(Error::LayoutMismatch(_))));
    }
}
