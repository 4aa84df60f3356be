//! Registry of the ordinal classifiers and a single fit / predict surface
//! over all of them.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::ensemble::{
    of_fit, KiofModel, KpcaParams, KpcaPolr, OfModel, OfParams, WeightKernel, WknnConfig, WknnModel,
};
use crate::error::{Error, Result};
use crate::interval::{LabeledDataset, Observation};
use crate::linear::{argmax_low, fh_fit, FhModel, LdaIdFitter, LdaIdModel, PolrClassifier, PolrI2, PolrOptions};
use crate::metrics::DEFAULT_GAMMA;
use crate::numeric::RngStream;
use crate::transform::{midpoint_view, vectorize, FeatureRecipe};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Polr,
    Of,
    LdaId,
    FhLdaId,
    DiWknn,
    KpcaPolr,
    Kiof,
    PolrI,
    PolrI2,
}

impl Method {
    /// The nine interval-vector methods, in report order.
    pub const ALL: [Method; 9] = [
        Method::Polr,
        Method::Of,
        Method::LdaId,
        Method::FhLdaId,
        Method::DiWknn,
        Method::KpcaPolr,
        Method::Kiof,
        Method::PolrI,
        Method::PolrI2,
    ];

    /// Methods applicable to interval curves. OF, LDA-ID and FH+LDA-ID see a
    /// subsampled, flattened curve; the others work on the curves directly.
    pub const CURVE: [Method; 6] = [
        Method::Of,
        Method::LdaId,
        Method::FhLdaId,
        Method::DiWknn,
        Method::KpcaPolr,
        Method::Kiof,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Method::Polr => "polr",
            Method::Of => "of",
            Method::LdaId => "lda_id",
            Method::FhLdaId => "fh_lda_id",
            Method::DiWknn => "di_wknn",
            Method::KpcaPolr => "kpca_polr",
            Method::Kiof => "kiof",
            Method::PolrI => "polr_i",
            Method::PolrI2 => "polr_i2",
        }
    }

    /// Display label used in report tables.
    pub fn label(&self) -> &'static str {
        match self {
            Method::Polr => "POLR",
            Method::Of => "OF",
            Method::LdaId => "LDA-ID",
            Method::FhLdaId => "FH+LDA-ID",
            Method::DiWknn => "DI+wkNN",
            Method::KpcaPolr => "KPCA+POLR",
            Method::Kiof => "KIOF",
            Method::PolrI => "POLR-I",
            Method::PolrI2 => "POLR-I2",
        }
    }

    pub fn supports_curves(&self) -> bool {
        Self::CURVE.contains(self)
    }

    /// Whether the method produces class probabilities, not just labels.
    pub fn is_probabilistic(&self) -> bool {
        !matches!(self, Method::Of | Method::DiWknn | Method::Kiof)
    }

    /// Comma-separated names, or `all` for the nine vector methods. `curve`
    /// selects the curve-capable set.
    pub fn parse_list(s: &str) -> Result<Vec<Method>> {
        match s.trim() {
            "all" => Ok(Self::ALL.to_vec()),
            "curve" => Ok(Self::CURVE.to_vec()),
            list => {
                let mut out: Vec<Method> = Vec::new();
                for part in list.split(',').map(str::trim).filter(|p| !p.is_empty()) {
                    out.push(part.parse()?);
                }
                if out.is_empty() {
                    return Err(Error::InvalidParameter("empty method list".into()));
                }
                Ok(out)
            }
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = Method::ALL.iter().map(Method::name).collect();
                Error::InvalidParameter(format!("unknown method {s:?}; expected one of {}", names.join(", ")))
            })
    }
}

/// Hyperparameters shared by all methods.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MethodConfig {
    /// RBF kernel spread for KPCA and KIOF.
    pub gamma: f64,
    pub k: usize,
    pub weight: WeightKernel,
    pub of: OfParams,
    pub kpca_variance: f64,
    pub kpca_max_dim: usize,
    pub polr: PolrOptions,
    /// Grid step used when a vector-only method sees curves.
    pub subsample_step: Option<usize>,
}

impl Default for MethodConfig {
    fn default() -> Self {
        MethodConfig {
            gamma: DEFAULT_GAMMA,
            k: 7,
            weight: WeightKernel::Triangular,
            of: OfParams::default(),
            kpca_variance: 0.95,
            kpca_max_dim: 10,
            polr: PolrOptions::default(),
            subsample_step: None,
        }
    }
}

impl MethodConfig {
    fn kpca(&self) -> KpcaParams {
        KpcaParams {
            gamma: self.gamma,
            variance_target: self.kpca_variance,
            max_dim: self.kpca_max_dim,
        }
    }
}

/// Ordinal forest on interval midpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OfClassifier {
    pub subsample_step: Option<usize>,
    pub model: OfModel,
}

impl OfClassifier {
    pub fn fit(data: &LabeledDataset, subsample_step: Option<usize>, params: OfParams, rng: RngStream) -> Result<Self> {
        data.require_all_classes()?;
        let x = midpoint_view(data, subsample_step)?;
        let model = of_fit(&x, data.labels(), data.n_classes(), params, rng)?;
        Ok(OfClassifier { subsample_step, model })
    }

    pub fn predict(&self, obs: &Observation) -> Result<usize> {
        let v = vectorize(obs, self.subsample_step)?;
        self.model.predict(&FeatureRecipe::Midpoints.extract(&v))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", content = "params", rename_all = "snake_case")]
pub enum FittedModel {
    Polr(PolrClassifier),
    Of(OfClassifier),
    LdaId(LdaIdModel),
    FhLdaId(FhModel<LdaIdModel>),
    DiWknn(WknnModel),
    KpcaPolr(KpcaPolr),
    Kiof(KiofModel),
    PolrI(PolrClassifier),
    PolrI2(PolrI2),
}

/// Fits `method` on `data`. `rng` is only consumed by the forest methods.
pub fn fit_method(method: Method, data: &LabeledDataset, config: &MethodConfig, rng: RngStream) -> Result<FittedModel> {
    data.require_all_classes()?;
    let step = config.subsample_step;
    Ok(match method {
        Method::Polr => FittedModel::Polr(PolrClassifier::fit(data, FeatureRecipe::Midpoints, step, config.polr)?),
        Method::PolrI => FittedModel::PolrI(PolrClassifier::fit(data, FeatureRecipe::Bounds, step, config.polr)?),
        Method::PolrI2 => FittedModel::PolrI2(PolrI2::fit(data, step, config.polr)?),
        Method::Of => FittedModel::Of(OfClassifier::fit(data, step, config.of, rng)?),
        Method::LdaId => FittedModel::LdaId(LdaIdModel::fit(data, step)?),
        Method::FhLdaId => FittedModel::FhLdaId(fh_fit(data, &LdaIdFitter { subsample_step: step })?),
        Method::DiWknn => FittedModel::DiWknn(WknnModel::fit(
            data,
            WknnConfig {
                k: config.k,
                weight: config.weight,
                distance: None,
            },
        )?),
        Method::KpcaPolr => FittedModel::KpcaPolr(KpcaPolr::fit(data, config.kpca(), config.polr)?),
        Method::Kiof => FittedModel::Kiof(KiofModel::fit(data, config.gamma, config.of, rng)?),
    })
}

impl FittedModel {
    pub fn method(&self) -> Method {
        match self {
            FittedModel::Polr(_) => Method::Polr,
            FittedModel::Of(_) => Method::Of,
            FittedModel::LdaId(_) => Method::LdaId,
            FittedModel::FhLdaId(_) => Method::FhLdaId,
            FittedModel::DiWknn(_) => Method::DiWknn,
            FittedModel::KpcaPolr(_) => Method::KpcaPolr,
            FittedModel::Kiof(_) => Method::Kiof,
            FittedModel::PolrI(_) => Method::PolrI,
            FittedModel::PolrI2(_) => Method::PolrI2,
        }
    }

    /// Class probabilities, for the methods that produce them.
    pub fn predict_proba(&self, obs: &Observation) -> Result<Option<Vec<f64>>> {
        Ok(Some(match self {
            FittedModel::Polr(m) | FittedModel::PolrI(m) => m.predict_proba(obs)?,
            FittedModel::PolrI2(m) => m.predict_proba(obs)?,
            FittedModel::LdaId(m) => m.predict_proba(obs)?,
            FittedModel::FhLdaId(m) => m.predict_proba(obs)?,
            FittedModel::KpcaPolr(m) => m.predict_proba(obs)?,
            FittedModel::Of(_) | FittedModel::DiWknn(_) | FittedModel::Kiof(_) => return Ok(None),
        }))
    }

    pub fn predict(&self, obs: &Observation) -> Result<usize> {
        match self {
            FittedModel::Of(m) => m.predict(obs),
            FittedModel::DiWknn(m) => m.predict(obs),
            FittedModel::Kiof(m) => m.predict(obs),
            _ => Ok(argmax_low(&self.predict_proba(obs)?.expect("probabilistic method"))),
        }
    }
}

/// Version of the serialized model layout.
pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Shape of the observations a model was trained on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InputShape {
    Vector { k: usize },
    Curve { n_channels: usize, grid: Vec<f64> },
}

impl InputShape {
    pub fn of(obs: &Observation) -> Self {
        match obs {
            Observation::Vector(v) => InputShape::Vector { k: v.len() },
            Observation::Curve(c) => InputShape::Curve {
                n_channels: c.n_channels(),
                grid: c.grid().to_vec(),
            },
        }
    }

    pub fn check(&self, obs: &Observation) -> Result<()> {
        let got = InputShape::of(obs);
        if &got == self {
            return Ok(());
        }
        let describe = |s: &InputShape| match s {
            InputShape::Vector { k } => format!("{k} interval features"),
            InputShape::Curve { n_channels, grid } => format!("{n_channels} channels on {} grid points", grid.len()),
        };
        Err(Error::ShapeMismatch(format!(
            "model expects {}, input has {}",
            describe(self),
            describe(&got)
        )))
    }
}

/// A fitted model with what is needed to reload and validate it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelRecord {
    pub format_version: u32,
    pub method: Method,
    pub n_classes: usize,
    pub input: InputShape,
    pub config: MethodConfig,
    pub model: FittedModel,
}

impl ModelRecord {
    pub fn fit(method: Method, data: &LabeledDataset, config: &MethodConfig, rng: RngStream) -> Result<Self> {
        let model = fit_method(method, data, config, rng)?;
        Ok(ModelRecord {
            format_version: MODEL_FORMAT_VERSION,
            method,
            n_classes: data.n_classes(),
            input: InputShape::of(&data.observations()[0]),
            config: *config,
            model,
        })
    }

    pub fn predict(&self, obs: &Observation) -> Result<usize> {
        self.input.check(obs)?;
        self.model.predict(obs)
    }

    pub fn predict_proba(&self, obs: &Observation) -> Result<Option<Vec<f64>>> {
        self.input.check(obs)?;
        self.model.predict_proba(obs)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let record: ModelRecord = serde_json::from_str(s)?;
        if record.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::InvalidParameter(format!(
                "model format version {} is not supported (expected {MODEL_FORMAT_VERSION})",
                record.format_version
            )));
        }
        Ok(record)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
            let json = serde_json::to_string(&m).unwrap();
            assert_eq!(json, format!("\"{}\"", m.name()));
        }
        assert!("lda".parse::<Method>().is_err());
        assert_eq!(Method::parse_list("all").unwrap().len(), 9);
        assert_eq!(Method::parse_list("kiof, di_wknn").unwrap(), vec![Method::Kiof, Method::DiWknn]);
        assert!(Method::parse_list(" , ").is_err());
    }

    #[test]
    fn registry_sets() {
        let curve: Vec<&str> = Method::CURVE.iter().map(Method::name).collect();
        assert_eq!(curve, ["of", "lda_id", "fh_lda_id", "di_wknn", "kpca_polr", "kiof"]);
        assert!(Method::CURVE.iter().all(|m| Method::ALL.contains(m)));
        assert!(!Method::Polr.supports_curves());
    }
}
