//! Per-stage wall-clock instrumentation.

use std::time::Instant;

use serde::Serialize;

use crate::error::CliError;

#[derive(Debug, Clone, Serialize)]
pub struct StageTiming {
    pub name: String,
    pub seconds: f64,
    pub ok: bool,
}

/// Timing and provenance of one CLI invocation.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub schema: u32,
    pub command: String,
    pub stages: Vec<StageTiming>,
    pub total_seconds: f64,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub failed_stage: Option<String>,
    #[serde(skip)]
    started: Option<Instant>,
}

impl RunReport {
    pub fn new(command: &str) -> Self {
        RunReport {
            schema: jdq_core::report::SCHEMA_VERSION,
            command: command.to_string(),
            stages: Vec::new(),
            total_seconds: 0.0,
            inputs: Vec::new(),
            outputs: Vec::new(),
            failed_stage: None,
            started: Some(Instant::now()),
        }
    }

    /// Runs `f` as a named stage, recording its duration whether or not it
    /// succeeds.
    pub fn stage<T>(&mut self, name: &str, f: impl FnOnce(&mut Self) -> Result<T, CliError>) -> Result<T, CliError> {
        let start = Instant::now();
        let result = f(self);
        let ok = result.is_ok();
        self.stages.push(StageTiming {
            name: name.to_string(),
            seconds: start.elapsed().as_secs_f64(),
            ok,
        });
        if !ok && self.failed_stage.is_none() {
            self.failed_stage = Some(name.to_string());
        }
        result
    }

    pub fn input(&mut self, path: impl std::fmt::Display) {
        self.inputs.push(path.to_string());
    }

    pub fn output(&mut self, path: impl std::fmt::Display) {
        self.outputs.push(path.to_string());
    }

    pub fn finish(&mut self) {
        if let Some(t) = self.started {
            self.total_seconds = t.elapsed().as_secs_f64();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn failing_stage_is_marked() {
        let mut r = RunReport::new("quantify");
        r.stage("load", |_| Ok(())).unwrap();
        let _ = r.stage::<()>("detect", |_| Err(CliError::Invalid("boom".into())));
        r.finish();
        assert_eq!(r.failed_stage.as_deref(), Some("detect"));
        assert_eq!(r.stages.len(), 2);
        assert!(r.stages[0].ok && !r.stages[1].ok);
        assert!(r.stages.iter().all(|s| s.seconds >= 0.0));
    }
}
