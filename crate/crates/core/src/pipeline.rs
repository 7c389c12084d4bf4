//! Forward synthesis, reconstruction and reporting for one configuration.

use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::dn_form::{synthesize_sampled, FormValue, SampledField};
use crate::error::Result;
use crate::field_io::FieldSet;
use crate::recon::{reconstruct, FrequencyPlan, ReconDiagnostics, Reconstruction};
use crate::report::ErrorReport;

/// Ground-truth fields of the configured phantom on the spatial grid; density
/// only for runs at positive frequencies.
pub fn truth_fields(cfg: &ExperimentConfig) -> Result<FieldSet> {
    let g = cfg.grid();
    let density = (!cfg.static_run()).then(|| cfg.phantom.density_field(&g));
    FieldSet::from_fields(&cfg.phantom.stiffness_field(&g), density.as_ref())
}

/// Synthesizes the data bundle of the configured plan from the phantom.
pub fn forward(cfg: &ExperimentConfig) -> Result<Vec<FormValue>> {
    cfg.validate()?;
    let plan = FrequencyPlan::from_config(cfg)?;
    let field = SampledField::on_grid(&cfg.phantom, &cfg.grid(), &cfg.quadrature)?;
    let bg = cfg.background.background(0.0)?;
    Ok(synthesize_sampled(&field, &bg, &plan.configs))
}

pub fn reconstruct_bundle(cfg: &ExperimentConfig, data: &[FormValue]) -> Result<Reconstruction> {
    cfg.validate()?;
    let plan = FrequencyPlan::from_config(cfg)?;
    reconstruct(data, &plan, &cfg.background, &cfg.grid())
}

pub fn reconstruction_fields(rec: &Reconstruction) -> Result<FieldSet> {
    FieldSet::from_fields(&rec.stiffness, rec.density.as_ref())
}

/// Error table plus the per-stage residuals of the run, when known.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub errors: ErrorReport,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<ReconDiagnostics>,
}

pub fn report(truth: &FieldSet, fields: &FieldSet, diagnostics: Option<ReconDiagnostics>) -> Result<RunReport> {
    Ok(RunReport {
        errors: ErrorReport::compare(truth, fields)?,
        diagnostics,
    })
}

impl RunReport {
    /// Error rows followed by one row per stage residual.
    pub fn to_csv(&self) -> String {
        let mut s = self.errors.to_csv();
        if let Some(d) = &self.diagnostics {
            s.push_str("stage,max_residual,mean_residual\n");
            for st in &d.stages {
                s.push_str(&format!(
                    "\"{}\",{:.6e},{:.6e}\n",
                    st.stage, st.max_residual, st.mean_residual
                ));
            }
        }
        s
    }
}
