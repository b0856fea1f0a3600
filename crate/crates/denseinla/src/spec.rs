//! JSON model specifications and CSV data.
//!
//! ```json
//! {
//!   "response": "y",
//!   "likelihood": { "family": "poisson", "offset": "E" },
//!   "hyper_priors": [ { "type": "pc_precision", "u": 1.0, "alpha": 0.01 } ],
//!   "components": [
//!     { "name": "intercept", "kind": "intercept" },
//!     { "name": "time", "kind": "rw2", "n": 5, "index": ["time"], "hyper": 0 }
//!   ]
//! }
//! ```
//!
//! Structured components take their precision from either `hyper` (an index
//! into `hyper_priors`) or a fixed `log_precision`. Index columns hold
//! 0-based integers; a `kron` component takes one column per factor. Graph
//! paths are relative to the spec file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use denseinla_core::linalg::Matrix;
use denseinla_core::model::{
    ComponentKind, Graph, HyperPriorSpec, LatentComponent, LatentModel, Likelihood, ModelError, Precision,
    DEFAULT_FIXED_EFFECT_PRECISION,
};
use serde::{Deserialize, Serialize};

use crate::graph_io::{read_graph, GraphFileError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub response: String,
    pub likelihood: LikelihoodSpec,
    pub components: Vec<ComponentSpec>,
    #[serde(default)]
    pub hyper_priors: Vec<PriorSpec>,
    /// Free-form provenance written by `simulate`; ignored by `fit`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulation: Option<serde_json::Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum LikelihoodSpec {
    Gaussian {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        hyper: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        log_precision: Option<f64>,
    },
    Poisson {
        /// Column of exposures; all ones when absent.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        offset: Option<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum PriorSpec {
    PcPrecision { u: f64, alpha: f64 },
    Gaussian { mean: f64, prec: f64 },
}

impl From<&PriorSpec> for HyperPriorSpec {
    fn from(p: &PriorSpec) -> Self {
        match *p {
            PriorSpec::PcPrecision { u, alpha } => HyperPriorSpec::PcPrecision { u, alpha },
            PriorSpec::Gaussian { mean, prec } => HyperPriorSpec::Gaussian { mean, prec },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentSpec {
    pub name: String,
    #[serde(flatten)]
    pub kind: KindSpec,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub index: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hyper: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub log_precision: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KindSpec {
    Intercept,
    Fixed { covariate: String },
    Iid { n: usize },
    Rw1 { n: usize },
    Rw2 { n: usize },
    Besag { graph: GraphSpec },
    Kron { factors: Vec<KindSpec> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GraphSpec {
    File(String),
    Inline(Vec<Vec<usize>>),
}

/// Problems with the specification itself (exit code 2).
#[derive(Debug, thiserror::Error)]
pub enum SpecError {
    #[error("cannot read spec {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("invalid spec JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("component {component}: {message}")]
    Component { component: String, message: String },
    #[error("likelihood: {0}")]
    Likelihood(String),
    #[error(transparent)]
    Graph(#[from] GraphFileError),
    #[error(transparent)]
    Model(ModelError),
}

/// Problems with the data or its fit to the spec (exit code 3).
#[derive(Debug, thiserror::Error)]
pub enum DataError {
    #[error("cannot read data {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("data has no column {0:?}")]
    MissingColumn(String),
    #[error("row {row}, column {column:?}: {message}")]
    Value { row: usize, column: String, message: String },
    #[error("data has no rows")]
    Empty,
    #[error(transparent)]
    Model(ModelError),
}

/// Numeric CSV table with a header row.
#[derive(Debug, Clone, PartialEq)]
pub struct DataTable {
    pub columns: BTreeMap<String, Vec<f64>>,
    pub rows: usize,
}

impl DataTable {
    pub fn from_reader(r: impl std::io::Read) -> Result<Self, DataError> {
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
        let header: Vec<String> = reader.headers()?.iter().map(str::to_owned).collect();
        let mut cols: Vec<Vec<f64>> = vec![Vec::new(); header.len()];
        for (row, rec) in reader.records().enumerate() {
            let rec = rec?;
            for (j, field) in rec.iter().enumerate() {
                let v: f64 = field.parse().map_err(|_| DataError::Value {
                    row: row + 1,
                    column: header[j].clone(),
                    message: format!("not a number: {field:?}"),
                })?;
                cols[j].push(v);
            }
        }
        let rows = cols.first().map_or(0, Vec::len);
        Ok(Self { columns: header.into_iter().zip(cols).collect(), rows })
    }

    pub fn from_path(path: &Path) -> Result<Self, DataError> {
        let f = std::fs::File::open(path).map_err(|source| DataError::Io { path: path.display().to_string(), source })?;
        Self::from_reader(std::io::BufReader::new(f))
    }

    pub fn column(&self, name: &str) -> Result<&[f64], DataError> {
        self.columns.get(name).map(Vec::as_slice).ok_or_else(|| DataError::MissingColumn(name.to_owned()))
    }
}

/// A spec with graphs loaded and component kinds built; needs only data.
#[derive(Debug, Clone)]
pub struct ResolvedSpec {
    pub spec: ModelSpec,
    components: Vec<(ComponentSpec, LatentComponent, Vec<usize>)>,
}

/// A model ready to fit, with a label for every latent coordinate.
#[derive(Debug, Clone)]
pub struct Problem {
    pub model: LatentModel,
    pub y: Vec<f64>,
    pub labels: Vec<String>,
}

impl ModelSpec {
    pub fn from_json(text: &str) -> Result<Self, SpecError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn from_path(path: &Path) -> Result<Self, SpecError> {
        let text =
            std::fs::read_to_string(path).map_err(|source| SpecError::Io { path: path.display().to_string(), source })?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("spec serializes");
        s.push('\n');
        s
    }

    /// Loads graphs (relative to `base`) and validates component kinds.
    pub fn resolve(&self, base: &Path) -> Result<ResolvedSpec, SpecError> {
        let priors = self.hyper_priors.len();
        let mut components = Vec::with_capacity(self.components.len());
        for c in &self.components {
            let err = |message: String| SpecError::Component { component: c.name.clone(), message };
            let (kind, sizes) = build_kind(&c.kind, base).map_err(|e| match e {
                KindError::Graph(g) => SpecError::Graph(g),
                KindError::Message(m) => err(m),
            })?;
            let precision = match (kind.is_fixed_effect(), c.hyper, c.log_precision) {
                (true, None, None) => Precision::Fixed(DEFAULT_FIXED_EFFECT_PRECISION.ln()),
                (_, None, Some(lp)) => Precision::Fixed(lp),
                (false, Some(h), None) if h < priors => Precision::Hyper(h),
                (false, Some(h), None) => return Err(err(format!("hyper {h} has no prior ({priors} given)"))),
                (true, Some(_), _) => return Err(err("fixed effects take no hyperparameter".into())),
                (_, Some(_), Some(_)) => return Err(err("give either hyper or log_precision, not both".into())),
                (false, None, None) => return Err(err("needs hyper or log_precision".into())),
            };
            let expected_index = match &c.kind {
                KindSpec::Intercept | KindSpec::Fixed { .. } => 0,
                KindSpec::Kron { factors } if c.index.len() != 1 => factors.len(),
                _ => 1,
            };
            if c.index.len() != expected_index {
                return Err(err(format!("expected {expected_index} index column(s), found {}", c.index.len())));
            }
            let lc = LatentComponent::new(c.name.as_str(), kind, precision).map_err(SpecError::Model)?;
            components.push((c.clone(), lc, sizes));
        }
        if let LikelihoodSpec::Gaussian { hyper, log_precision } = &self.likelihood {
            match (hyper, log_precision) {
                (Some(h), None) if *h >= priors => {
                    return Err(SpecError::Likelihood(format!("hyper {h} has no prior ({priors} given)")))
                }
                (Some(_), None) | (None, Some(_)) => {}
                _ => return Err(SpecError::Likelihood("give exactly one of hyper or log_precision".into())),
            }
        }
        // hyperparameter bookkeeping and priors, checked against an empty design
        let s: usize = components.iter().map(|(_, c, _)| c.size).sum();
        let stub = match &self.likelihood {
            LikelihoodSpec::Gaussian { hyper: Some(h), .. } => Likelihood::Gaussian { precision: Precision::Hyper(*h) },
            LikelihoodSpec::Gaussian { .. } => Likelihood::Gaussian { precision: Precision::Fixed(0.0) },
            LikelihoodSpec::Poisson { .. } => Likelihood::Poisson { offsets: Vec::new() },
        };
        LatentModel::new(
            components.iter().map(|(_, c, _)| c.clone()).collect(),
            Matrix::zeros(0, s),
            stub,
            self.hyper_priors.iter().map(HyperPriorSpec::from).collect(),
        )
        .map_err(SpecError::Model)?;
        Ok(ResolvedSpec { spec: self.clone(), components })
    }
}

enum KindError {
    Graph(GraphFileError),
    Message(String),
}

/// Component kind plus the size of every factor (one entry unless Kron).
fn build_kind(k: &KindSpec, base: &Path) -> Result<(ComponentKind, Vec<usize>), KindError> {
    let positive = |n: usize| if n == 0 { Err(KindError::Message("size must be positive".into())) } else { Ok(n) };
    let kind = match k {
        KindSpec::Intercept => ComponentKind::Intercept,
        KindSpec::Fixed { .. } => ComponentKind::FixedSlope,
        KindSpec::Iid { n } => ComponentKind::Iid(positive(*n)?),
        KindSpec::Rw1 { n } => ComponentKind::Rw1(positive(*n)?),
        KindSpec::Rw2 { n } => ComponentKind::Rw2(positive(*n)?),
        KindSpec::Besag { graph } => ComponentKind::Besag(load_graph(graph, base)?),
        KindSpec::Kron { factors } => {
            let built = factors.iter().map(|f| build_kind(f, base)).collect::<Result<Vec<_>, _>>()?;
            if built.iter().any(|(k, _)| k.is_fixed_effect() || matches!(k, ComponentKind::Kron2(..) | ComponentKind::Kron3(..))) {
                return Err(KindError::Message("kron factors must be iid, rw1, rw2 or besag".into()));
            }
            let sizes = built.iter().map(|(k, _)| k.size()).collect();
            let mut kinds = built.into_iter().map(|(k, _)| k);
            let kind = match factors.len() {
                2 => ComponentKind::kron2(kinds.next().expect("2"), kinds.next().expect("2")),
                3 => ComponentKind::kron3(kinds.next().expect("3"), kinds.next().expect("3"), kinds.next().expect("3")),
                n => return Err(KindError::Message(format!("kron takes 2 or 3 factors, found {n}"))),
            };
            return Ok((kind, sizes));
        }
    };
    let size = kind.size();
    Ok((kind, vec![size]))
}

fn load_graph(g: &GraphSpec, base: &Path) -> Result<Graph, KindError> {
    match g {
        GraphSpec::File(p) => {
            let path = PathBuf::from(p);
            let path = if path.is_absolute() { path } else { base.join(path) };
            read_graph(&path).map_err(KindError::Graph)
        }
        GraphSpec::Inline(lists) => Graph::from_neighbors(lists.clone()).map_err(|e| KindError::Graph(e.into())),
    }
}

fn as_index(v: f64, limit: usize, row: usize, column: &str) -> Result<usize, DataError> {
    if v >= 0.0 && v.fract() == 0.0 && (v as usize) < limit {
        Ok(v as usize)
    } else {
        Err(DataError::Value { row: row + 1, column: column.to_owned(), message: format!("index {v} outside 0..{limit}") })
    }
}

impl ResolvedSpec {
    pub fn n_hyper(&self) -> usize {
        self.spec.hyper_priors.len()
    }

    /// Builds the design matrix and the model from `data`.
    pub fn build(&self, data: &DataTable) -> Result<Problem, DataError> {
        let spec = &self.spec;
        let y = data.column(&spec.response)?.to_vec();
        let n = data.rows;
        if n == 0 {
            return Err(DataError::Empty);
        }
        let s: usize = self.components.iter().map(|(_, c, _)| c.size).sum();
        let mut design = Matrix::zeros(n, s);
        let mut labels = Vec::with_capacity(s);
        let mut offset = 0;
        for (cs, lc, sizes) in &self.components {
            match &cs.kind {
                KindSpec::Intercept => (0..n).for_each(|i| design[(i, offset)] = 1.0),
                KindSpec::Fixed { covariate } => {
                    let col = data.column(covariate)?;
                    (0..n).for_each(|i| design[(i, offset)] = col[i]);
                }
                _ => {
                    let cols = cs.index.iter().map(|c| data.column(c)).collect::<Result<Vec<_>, _>>()?;
                    // one column per factor, or a single pre-flattened index
                    let limits: Vec<usize> = if cols.len() == sizes.len() { sizes.clone() } else { vec![lc.size] };
                    for i in 0..n {
                        let mut flat = 0;
                        for ((col, name), limit) in cols.iter().zip(&cs.index).zip(&limits) {
                            flat = flat * limit + as_index(col[i], *limit, i, name)?;
                        }
                        design[(i, offset + flat)] = 1.0;
                    }
                }
            }
            labels.extend((0..lc.size).map(|_| cs.name.clone()));
            offset += lc.size;
        }
        let likelihood = match &spec.likelihood {
            LikelihoodSpec::Gaussian { hyper: Some(h), .. } => Likelihood::Gaussian { precision: Precision::Hyper(*h) },
            LikelihoodSpec::Gaussian { log_precision, .. } => {
                Likelihood::Gaussian { precision: Precision::Fixed(log_precision.unwrap_or(0.0)) }
            }
            LikelihoodSpec::Poisson { offset: Some(c) } => Likelihood::Poisson { offsets: data.column(c)?.to_vec() },
            LikelihoodSpec::Poisson { offset: None } => Likelihood::Poisson { offsets: vec![1.0; n] },
        };
        let priors = spec.hyper_priors.iter().map(HyperPriorSpec::from).collect();
        let comps = self.components.iter().map(|(_, c, _)| c.clone()).collect();
        let model = LatentModel::new(comps, design, likelihood, priors).map_err(DataError::Model)?;
        model.check_data(&y).map_err(DataError::Model)?;
        Ok(Problem { model, y, labels })
    }
}
