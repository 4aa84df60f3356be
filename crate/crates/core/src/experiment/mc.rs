//! Monte Carlo evaluation: repeated random splits, every method trained and
//! tested on the same split within a replicate, and summaries across
//! replicates.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::protocol::{evaluate, split_train_test, Evaluation};
use super::synthetic::{gen_synthetic, SyntheticDesign};
use crate::error::{Error, Result};
use crate::interval::LabeledDataset;
use crate::methods::{fit_method, Method, MethodConfig};
use crate::numeric::RngStream;
use crate::par::try_map_indexed;

pub const REPORT_FORMAT_VERSION: u32 = 1;

/// Where replicate data come from. Synthetic designs are regenerated for
/// every replicate; a fixed dataset is re-split.
#[derive(Debug, Clone)]
pub enum DataSource {
    Synthetic(SyntheticDesign),
    Fixed(LabeledDataset),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SourceInfo {
    Synthetic { design: SyntheticDesign },
    Dataset { n: usize, n_classes: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub seed: u64,
    pub reps: usize,
    pub train_frac: f64,
    pub methods: Vec<Method>,
    pub method_config: MethodConfig,
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig {
            seed: 1,
            reps: 50,
            train_frac: 0.8,
            methods: Method::ALL.to_vec(),
            method_config: MethodConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodCell {
    pub method: Method,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub evaluation: Option<Evaluation>,
    /// Fit or prediction failure, recorded instead of aborting the run.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateRecord {
    pub replicate: usize,
    pub split_fingerprint: u64,
    pub n_train: usize,
    pub n_test: usize,
    pub cells: Vec<MethodCell>,
}

/// Mean and sample sd of the values that exist, and how many were missing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: Option<f64>,
    pub sd: Option<f64>,
    pub n: usize,
    pub n_excluded: usize,
}

impl Summary {
    pub fn of(values: &[Option<f64>]) -> Self {
        let present: Vec<f64> = values.iter().flatten().copied().collect();
        let n = present.len();
        let mean = (n > 0).then(|| present.iter().sum::<f64>() / n as f64);
        let sd = mean.filter(|_| n > 1).map(|m| {
            (present.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        });
        Summary {
            mean,
            sd,
            n,
            n_excluded: values.len() - n,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassSummary {
    pub class: usize,
    pub precision: Summary,
    pub recall: Summary,
    pub f1: Summary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: Method,
    pub label: String,
    /// Over replicates where the method succeeded; `n_excluded` counts
    /// failed replicates.
    pub accuracy: Summary,
    pub per_class: Vec<ClassSummary>,
    pub failures: Vec<String>,
}

/// Accuracy of `first` minus accuracy of `second`, over the replicates where
/// both succeeded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedDifference {
    pub first: Method,
    pub second: Method,
    pub difference: Summary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub format_version: u32,
    pub source: SourceInfo,
    pub config: McConfig,
    pub replicates: Vec<ReplicateRecord>,
    pub summaries: Vec<MethodSummary>,
    pub paired_differences: Vec<PairedDifference>,
}

fn replicate_stream(seed: u64, r: usize) -> RngStream {
    RngStream::new(seed).derive_named("replicate").derive(r as u64)
}

fn run_replicate(source: &DataSource, config: &McConfig, r: usize) -> Result<ReplicateRecord> {
    let rng = replicate_stream(config.seed, r);
    let generated;
    let data = match source {
        DataSource::Synthetic(design) => {
            generated = gen_synthetic(design, rng.derive_named("data"))?;
            &generated
        }
        DataSource::Fixed(d) => d,
    };
    let split = split_train_test(data, config.train_frac, rng.derive_named("split"))?;
    let train = data.subset(&split.train);
    let test = data.subset(&split.test);
    let method_rng = rng.derive_named("methods");
    let cells = config
        .methods
        .iter()
        .map(|&method| {
            let outcome = fit_method(method, &train, &config.method_config, method_rng.derive_named(method.name()))
                .and_then(|model| {
                    let predictions = test
                        .observations()
                        .iter()
                        .map(|o| model.predict(o))
                        .collect::<Result<Vec<_>>>()?;
                    evaluate(&predictions, test.labels(), data.n_classes())
                });
            match outcome {
                Ok(evaluation) => Ok(MethodCell {
                    method,
                    evaluation: Some(evaluation),
                    error: None,
                }),
                Err(e) if e.is_numerical() => Ok(MethodCell {
                    method,
                    evaluation: None,
                    error: Some(e.to_string()),
                }),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ReplicateRecord {
        replicate: r,
        split_fingerprint: split.fingerprint(),
        n_train: split.train.len(),
        n_test: split.test.len(),
        cells,
    })
}

/// Runs `config.reps` replicates, in parallel where available. The report
/// does not depend on the number of worker threads.
pub fn run_mc(source: &DataSource, config: &McConfig) -> Result<ExperimentReport> {
    if config.methods.is_empty() {
        return Err(Error::InvalidParameter("no methods to evaluate".into()));
    }
    if config.reps == 0 {
        return Err(Error::InvalidParameter("need at least one replicate".into()));
    }
    if let DataSource::Fixed(d) = source {
        if d.is_curve() {
            if let Some(m) = config.methods.iter().find(|m| !m.supports_curves()) {
                return Err(Error::InvalidParameter(format!("{m} does not apply to interval curves")));
            }
        }
    }
    let replicates = try_map_indexed(config.reps, |r| run_replicate(source, config, r))?;
    let n_classes = match source {
        DataSource::Synthetic(d) => d.n_classes(),
        DataSource::Fixed(d) => d.n_classes(),
    };
    let summaries = summarize(&replicates, &config.methods, n_classes);
    let paired_differences = paired(&replicates, config.methods.len());
    let source = match source {
        DataSource::Synthetic(design) => SourceInfo::Synthetic { design: design.clone() },
        DataSource::Fixed(d) => SourceInfo::Dataset {
            n: d.len(),
            n_classes: d.n_classes(),
        },
    };
    Ok(ExperimentReport {
        format_version: REPORT_FORMAT_VERSION,
        source,
        config: config.clone(),
        replicates,
        summaries,
        paired_differences,
    })
}

fn summarize(replicates: &[ReplicateRecord], methods: &[Method], n_classes: usize) -> Vec<MethodSummary> {
    methods
        .iter()
        .enumerate()
        .map(|(m, &method)| {
            let evals: Vec<Option<&Evaluation>> = replicates.iter().map(|r| r.cells[m].evaluation.as_ref()).collect();
            let accuracy = Summary::of(&evals.iter().map(|e| e.map(|e| e.accuracy)).collect::<Vec<_>>());
            let per_class = (0..n_classes)
                .map(|q| {
                    let pick = |f: fn(&Evaluation) -> &Vec<Option<f64>>| {
                        let v: Vec<Option<f64>> = evals.iter().map(|e| e.and_then(|e| f(e)[q])).collect();
                        Summary::of(&v)
                    };
                    ClassSummary {
                        class: q + 1,
                        precision: pick(|e| &e.precision),
                        recall: pick(|e| &e.recall),
                        f1: pick(|e| &e.f1),
                    }
                })
                .collect();
            let failures = replicates
                .iter()
                .filter_map(|r| r.cells[m].error.as_ref().map(|e| format!("replicate {}: {e}", r.replicate)))
                .collect();
            MethodSummary {
                method,
                label: method.label().to_string(),
                accuracy,
                per_class,
                failures,
            }
        })
        .collect()
}

fn paired(replicates: &[ReplicateRecord], n_methods: usize) -> Vec<PairedDifference> {
    let mut out = Vec::new();
    for a in 0..n_methods {
        for b in (a + 1)..n_methods {
            let diffs: Vec<Option<f64>> = replicates
                .iter()
                .map(|r| match (&r.cells[a].evaluation, &r.cells[b].evaluation) {
                    (Some(x), Some(y)) => Some(x.accuracy - y.accuracy),
                    _ => None,
                })
                .collect();
            out.push(PairedDifference {
                first: replicates[0].cells[a].method,
                second: replicates[0].cells[b].method,
                difference: Summary::of(&diffs),
            });
        }
    }
    out
}

fn pct(v: Option<f64>) -> String {
    v.map_or_else(String::new, |v| format!("{:.1}", 100.0 * v))
}

impl ExperimentReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn summary(&self, method: Method) -> Option<&MethodSummary> {
        self.summaries.iter().find(|s| s.method == method)
    }

    /// Aggregate accuracy table, in percentage points.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["method", "label", "mean", "sd", "n_ok", "n_failed", "summary"])?;
        for s in &self.summaries {
            let summary = match (s.accuracy.mean, s.accuracy.sd) {
                (Some(_), Some(_)) => format!("{} ({})", pct(s.accuracy.mean), pct(s.accuracy.sd)),
                (Some(_), None) => pct(s.accuracy.mean),
                _ => "failed".to_string(),
            };
            w.write_record([
                s.method.name().to_string(),
                s.label.clone(),
                pct(s.accuracy.mean),
                pct(s.accuracy.sd),
                s.accuracy.n.to_string(),
                s.accuracy.n_excluded.to_string(),
                summary,
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Plain-text `method  mean (sd)` table.
    pub fn table(&self) -> String {
        let width = self.summaries.iter().map(|s| s.label.len()).max().unwrap_or(6).max(6);
        let mut out = format!("{:<width$}  accuracy % mean (sd)  failed\n", "method");
        for s in &self.summaries {
            let cell = match s.accuracy.mean {
                Some(_) => format!("{} ({})", pct(s.accuracy.mean), pct(s.accuracy.sd)),
                None => "-".to_string(),
            };
            out.push_str(&format!("{:<width$}  {:<20}  {}\n", s.label, cell, s.accuracy.n_excluded));
        }
        out
    }
}
