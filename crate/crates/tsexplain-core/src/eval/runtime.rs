//! Wall-clock comparison across methods, anchored on FIT.

use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct MethodRuntime {
    pub method: String,
    pub seconds: f64,
    /// How many times faster than FIT; 1.0 for FIT itself, absent when FIT
    /// was not timed in this run.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub speedup_vs_fit: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RuntimeReport {
    pub per_method: Vec<MethodRuntime>,
}

/// `timings` pairs a method label with its total seconds, typically summed
/// from per-sample results. Order is preserved.
pub fn runtime_report(timings: &[(String, f64)]) -> RuntimeReport {
    let fit = timings.iter().find(|(m, _)| m == "fit").map(|&(_, s)| s);
    let per_method = timings
        .iter()
        .map(|(method, seconds)| MethodRuntime {
            method: method.clone(),
            seconds: *seconds,
            speedup_vs_fit: fit.map(|f| f / seconds),
        })
        .collect();
    RuntimeReport { per_method }
}
