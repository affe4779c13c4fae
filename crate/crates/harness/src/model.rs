//! Turns a model spec into a target, loading or synthesising its data.

use infdim_core::gaussian::SpectralCovariance;
use infdim_core::models::{
    simulate_binomial, simulate_classifier, simulate_lgcp, BinomialLatticeModel, BinomialSynthesis,
    ClassifierSynthesis, GaussianObservationModel, LgcpModel, LogisticClassifierModel, PriorOnlyModel, TargetModel,
};

use crate::config::{DataSource, ModelSpec};
use crate::dataset::{load_dataset, Dataset, DatasetKind};
use crate::error::{HarnessError, Result};

pub enum BuiltModel {
    Logistic(LogisticClassifierModel),
    Binomial(BinomialLatticeModel),
    Lgcp(LgcpModel),
    Prior(PriorOnlyModel),
    Gaussian(GaussianObservationModel),
}

impl BuiltModel {
    pub fn target(&self) -> &dyn TargetModel {
        match self {
            BuiltModel::Logistic(m) => m,
            BuiltModel::Binomial(m) => m,
            BuiltModel::Lgcp(m) => m,
            BuiltModel::Prior(m) => m,
            BuiltModel::Gaussian(m) => m,
        }
    }
}

/// Dataset plus the nodal field it was drawn from, for specs that
/// synthesise their data; `None` for file-backed and data-free models.
pub fn synthesize(spec: &ModelSpec) -> Result<Option<(Dataset, Vec<f64>)>> {
    let out = match spec {
        ModelSpec::Logistic { prior, data: DataSource::Synthesis(s) } => {
            let synth = ClassifierSynthesis { n_points: s.n_points.unwrap_or(0), input_dim: s.input_dim.unwrap_or(0) };
            let (d, f) = simulate_classifier(&synth, prior, s.true_field_seed, s.obs_seed)?;
            Some((Dataset::Classifier(d), f))
        }
        ModelSpec::BinomialLattice { prior, data: DataSource::Synthesis(s) } => {
            let mut synth = BinomialSynthesis::new(s.obs_fraction.unwrap_or(0.0));
            if let Some(t) = s.trials_mean {
                synth.trials_mean = t;
            }
            let (d, f) = simulate_binomial(prior, &synth, s.true_field_seed, s.obs_seed)?;
            Some((Dataset::Lattice(d), f))
        }
        ModelSpec::Lgcp { params, data: DataSource::Synthesis(s) } => {
            let (d, f) = simulate_lgcp(params, s.true_field_seed, s.obs_seed)?;
            Some((Dataset::Lattice(d), f))
        }
        _ => None,
    };
    Ok(out)
}

fn dataset(spec: &ModelSpec, source: &DataSource) -> Result<Dataset> {
    match source {
        DataSource::Path(p) => {
            let kind = DatasetKind::for_model(spec.kind_name()).expect("data-backed model");
            load_dataset(p, kind)
        }
        DataSource::Synthesis(_) => Ok(synthesize(spec)?.expect("synthesis spec").0),
    }
}

fn wrong_data() -> HarnessError {
    HarnessError::invalid("dataset does not match the model kind")
}

pub fn build_model(spec: &ModelSpec) -> Result<BuiltModel> {
    let model = match spec {
        ModelSpec::Logistic { prior, data } => match dataset(spec, data)? {
            Dataset::Classifier(d) => BuiltModel::Logistic(LogisticClassifierModel::new(d, prior)?),
            Dataset::Lattice(_) => return Err(wrong_data()),
        },
        ModelSpec::BinomialLattice { prior, data } => match dataset(spec, data)? {
            Dataset::Lattice(d) => BuiltModel::Binomial(BinomialLatticeModel::new(prior, &d)?),
            Dataset::Classifier(_) => return Err(wrong_data()),
        },
        ModelSpec::Lgcp { params, data } => match dataset(spec, data)? {
            Dataset::Lattice(d) => BuiltModel::Lgcp(LgcpModel::new(params, &d)?),
            Dataset::Classifier(_) => return Err(wrong_data()),
        },
        ModelSpec::Prior { dim, decay } => {
            let eig = (0..*dim).map(|k| (1.0 + k as f64).powf(-decay)).collect();
            BuiltModel::Prior(PriorOnlyModel::new(SpectralCovariance::diagonal(eig)?))
        }
        ModelSpec::GaussianObservation { prior_variances, y, noise_var } => {
            let prior = SpectralCovariance::diagonal(prior_variances.clone())?;
            BuiltModel::Gaussian(GaussianObservationModel::new(prior, y.clone(), *noise_var)?)
        }
    };
    Ok(model)
}
