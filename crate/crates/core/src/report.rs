//! Error tables comparing reconstructed fields with ground truth.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field_io::FieldSet;

/// Short tag naming where each component comes from in the pipeline.
pub fn anchor(component: &str) -> &'static str {
    match component {
        "c1313" => "shear and gradient pairs: c1313",
        "c1122" => "shear and gradient pairs: c1111 - c1122",
        "c1133" => "affine or gradient-theta pairs: c1133 - c1111",
        "c3333" => "gradient sweep: c1111 - 2 c1133 + c3333",
        "c1111" => "doubly affine or short gradient pairs: c1111",
        "rho11" => "shear pairs at two frequencies: rho11",
        "rho33" => "theta pairs: rho33",
        _ => "unclassified",
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentError {
    pub component: String,
    pub anchor: String,
    /// `‖f̂ − f‖₂ / ‖f‖₂` (absolute when the truth vanishes).
    pub rel_l2: f64,
    /// `max|f̂ − f| / max|f|` (absolute when the truth vanishes).
    pub rel_linf: f64,
    pub truth_linf: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ErrorReport {
    pub rows: Vec<ComponentError>,
}

pub fn relative_l2(truth: &[f64], approx: &[f64]) -> f64 {
    let num: f64 = truth.iter().zip(approx).map(|(a, b)| (a - b) * (a - b)).sum();
    let den: f64 = truth.iter().map(|a| a * a).sum();
    if den > 0.0 {
        (num / den).sqrt()
    } else {
        num.sqrt()
    }
}

pub fn relative_linf(truth: &[f64], approx: &[f64]) -> f64 {
    let num = truth.iter().zip(approx).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let den = truth.iter().map(|a| a.abs()).fold(0.0, f64::max);
    if den > 0.0 {
        num / den
    } else {
        num
    }
}

impl ErrorReport {
    /// Rows for every component present in both sets, in truth order.
    pub fn compare(truth: &FieldSet, approx: &FieldSet) -> Result<Self> {
        if truth.grid != approx.grid {
            return Err(Error::Mismatch("truth and reconstruction grids differ".into()));
        }
        let mut rows = Vec::new();
        for (name, t) in truth.names.iter().zip(&truth.data) {
            let Some(a) = approx.get(name) else { continue };
            rows.push(ComponentError {
                component: name.clone(),
                anchor: anchor(name).to_string(),
                rel_l2: relative_l2(t, a),
                rel_linf: relative_linf(t, a),
                truth_linf: t.iter().map(|v| v.abs()).fold(0.0, f64::max),
            });
        }
        if rows.is_empty() {
            return Err(Error::Mismatch("no common components".into()));
        }
        Ok(Self { rows })
    }

    pub fn row(&self, component: &str) -> Option<&ComponentError> {
        self.rows.iter().find(|r| r.component == component)
    }

    pub fn max_rel_l2(&self) -> f64 {
        self.rows.iter().map(|r| r.rel_l2).fold(0.0, f64::max)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("component,anchor,rel_l2,rel_linf,truth_linf\n");
        for r in &self.rows {
            s.push_str(&format!(
                "{},\"{}\",{:.6e},{:.6e},{:.6e}\n",
                r.component, r.anchor, r.rel_l2, r.rel_linf, r.truth_linf
            ));
        }
        s
    }
}
