//! Residual records and reports shared by every check.
//!
//! A residual carries its magnitude and a scale, the sum of magnitudes of
//! the additive terms that produced it. Two normalizations are used: plain
//! relative (`|r| / scale`, or `|r|` when the scale vanishes) and the form
//! normalization `|r| / (1 + scale)`.

use serde::{Deserialize, Serialize};

use crate::kernel::{Scalar, Vec3, C64};

/// Magnitude of a coefficient, the Hermitian norm for vectors.
pub trait Magnitude {
    fn magnitude(&self) -> f64;
}

impl Magnitude for C64 {
    fn magnitude(&self) -> f64 {
        self.norm()
    }
}

impl Magnitude for crate::jets::Jet {
    fn magnitude(&self) -> f64 {
        self.value().norm()
    }
}

impl<S: Scalar> Magnitude for Vec3<S> {
    fn magnitude(&self) -> f64 {
        self.value().herm_norm()
    }
}

/// A residual with its normalization.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Residual {
    pub abs: f64,
    pub scale: f64,
    pub rel: f64,
}

impl Residual {
    /// `|r| / scale`, falling back to `|r|` for a vanishing scale.
    pub fn relative(abs: f64, scale: f64) -> Residual {
        let rel = if scale > 0.0 { abs / scale } else { abs };
        Residual { abs, scale, rel }
    }

    /// `|r| / (1 + scale)`, used for forms.
    pub fn form(abs: f64, scale: f64) -> Residual {
        Residual { abs, scale, rel: abs / (1.0 + scale) }
    }

    /// The worse of two residuals.
    pub fn max(self, o: Residual) -> Residual {
        if o.rel > self.rel || self.rel.is_nan() {
            o
        } else {
            self
        }
    }

    pub fn zero() -> Residual {
        Residual { abs: 0.0, scale: 0.0, rel: 0.0 }
    }
}

/// Accumulates a sum of terms while tracking the sum of their magnitudes.
#[derive(Clone, Debug)]
pub struct Terms<T> {
    sum: Option<T>,
    scale: f64,
}

impl<T> Default for Terms<T> {
    fn default() -> Self {
        Terms { sum: None, scale: 0.0 }
    }
}

impl<T: Clone + Magnitude + crate::forms::Coef> Terms<T> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(mut self, t: T) -> Self {
        self.scale += t.magnitude();
        self.sum = Some(match self.sum.take() {
            None => t,
            Some(s) => s.add_c(&t),
        });
        self
    }

    pub fn sub(self, t: T) -> Self {
        let n = t.neg_c();
        self.add(n)
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// The accumulated sum; panics if no term was added.
    pub fn sum(&self) -> T {
        self.sum.clone().expect("empty term sum")
    }

    pub fn residual(&self) -> Residual {
        Residual::relative(self.sum().magnitude(), self.scale)
    }
}

/// One evaluated check at one point.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ResidualRecord {
    pub check_id: String,
    pub point: [f64; 3],
    /// Non-finite values (checks that could not be evaluated) serialize as `null`.
    #[serde(deserialize_with = "null_as_inf")]
    pub residual: f64,
    #[serde(deserialize_with = "null_as_inf")]
    pub scale: f64,
    #[serde(deserialize_with = "null_as_inf")]
    pub rel_residual: f64,
    pub pass: bool,
    pub tolerance: f64,
    /// Why the check could not be evaluated.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

fn null_as_inf<'de, D: serde::Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
}

impl ResidualRecord {
    pub fn new(check_id: impl Into<String>, point: [f64; 3], r: Residual, tolerance: f64) -> Self {
        ResidualRecord {
            check_id: check_id.into(),
            point,
            residual: r.abs,
            scale: r.scale,
            rel_residual: r.rel,
            pass: r.rel < tolerance,
            tolerance,
            error: None,
        }
    }

    /// A failing record for a check that raised `err`.
    pub fn failed(check_id: impl Into<String>, point: [f64; 3], err: &crate::error::Error, tolerance: f64) -> Self {
        ResidualRecord {
            check_id: check_id.into(),
            point,
            residual: f64::INFINITY,
            scale: f64::INFINITY,
            rel_residual: f64::INFINITY,
            pass: false,
            tolerance,
            error: Some(err.to_string()),
        }
    }
}

/// Summary statistics of a report.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Summary {
    pub total: usize,
    pub passed: usize,
    #[serde(deserialize_with = "null_as_inf")]
    pub max_rel_residual: f64,
}

/// A collection of residual records.
#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
pub struct ResidualReport {
    pub records: Vec<ResidualRecord>,
}

impl ResidualReport {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, check_id: impl Into<String>, point: [f64; 3], r: Residual, tolerance: f64) {
        self.records.push(ResidualRecord::new(check_id, point, r, tolerance));
    }

    pub fn push_failed(&mut self, check_id: impl Into<String>, point: [f64; 3], err: &crate::error::Error, tolerance: f64) {
        self.records.push(ResidualRecord::failed(check_id, point, err, tolerance));
    }

    /// Replace every tolerance by `tol` and recompute the pass flags.
    pub fn retolerate(&mut self, tol: f64) {
        for r in &mut self.records {
            r.tolerance = tol;
            r.pass = r.error.is_none() && r.rel_residual < tol;
        }
    }

    pub fn extend(&mut self, other: ResidualReport) {
        self.records.extend(other.records);
    }

    /// Sort by (check_id, point) so that output is independent of evaluation order.
    pub fn sort(&mut self) {
        self.records.sort_by(|a, b| {
            a.check_id.cmp(&b.check_id).then_with(|| {
                a.point.iter().zip(&b.point).fold(std::cmp::Ordering::Equal, |o, (x, y)| {
                    o.then(x.total_cmp(y))
                })
            })
        });
    }

    pub fn all_pass(&self) -> bool {
        self.records.iter().all(|r| r.pass)
    }

    pub fn max_rel(&self) -> f64 {
        self.records.iter().map(|r| r.rel_residual).fold(0.0, |a, b| if b > a || b.is_nan() { b } else { a })
    }

    /// Records whose check id starts with `prefix`.
    pub fn with_prefix(&self, prefix: &str) -> Vec<&ResidualRecord> {
        self.records.iter().filter(|r| r.check_id.starts_with(prefix)).collect()
    }

    /// Record with exactly this id (the first one, if repeated).
    pub fn get(&self, id: &str) -> Option<&ResidualRecord> {
        self.records.iter().find(|r| r.check_id == id)
    }

    /// Largest relative residual among records with this prefix.
    pub fn max_rel_of(&self, prefix: &str) -> f64 {
        self.with_prefix(prefix).iter().map(|r| r.rel_residual).fold(0.0, f64::max)
    }

    pub fn summary(&self) -> Summary {
        Summary {
            total: self.records.len(),
            passed: self.records.iter().filter(|r| r.pass).count(),
            max_rel_residual: self.max_rel(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::re;

    #[test]
    fn normalizations() {
        assert_eq!(Residual::relative(1.0, 4.0).rel, 0.25);
        assert_eq!(Residual::relative(1.0, 0.0).rel, 1.0);
        assert_eq!(Residual::form(1.0, 1.0).rel, 0.5);
    }

    #[test]
    fn terms_track_scale() {
        let t = Terms::new().add(re(3.0)).sub(re(2.0)).add(re(-1.0));
        assert_eq!(t.sum(), re(0.0));
        assert_eq!(t.scale(), 6.0);
        assert_eq!(t.residual().rel, 0.0);
    }

    #[test]
    fn pass_flag_and_sorting() {
        let mut r = ResidualReport::new();
        r.push("b", [0.0; 3], Residual::relative(1.0, 1.0), 0.5);
        r.push("a", [1.0, 0.0, 0.0], Residual::relative(0.0, 1.0), 0.5);
        r.push("a", [0.5, 0.0, 0.0], Residual::relative(0.1, 1.0), 0.5);
        r.sort();
        let ids: Vec<_> = r.records.iter().map(|x| (x.check_id.as_str(), x.point[0])).collect();
        assert_eq!(ids, vec![("a", 0.5), ("a", 1.0), ("b", 0.0)]);
        let s = r.summary();
        assert_eq!((s.total, s.passed), (3, 2));
        assert_eq!(s.max_rel_residual, 1.0);
        r.retolerate(2.0);
        assert!(r.all_pass());
    }

    #[test]
    fn failed_records_round_trip_as_null() {
        let mut r = ResidualReport::new();
        r.push_failed("R3", [0.0; 3], &crate::error::Error::Interpolation, 1e-5);
        let j = serde_json::to_string(&r).unwrap();
        assert!(j.contains("\"rel_residual\":null"));
        let back: ResidualReport = serde_json::from_str(&j).unwrap();
        assert!(back.records[0].rel_residual.is_infinite() && !back.records[0].pass);
        r.retolerate(f64::INFINITY);
        assert!(!r.all_pass());
    }
}
