//! Self-describing parameter files.
//!
//! Every trained artifact is stored as a tab-separated text file whose
//! first line names the format and whose remaining lines are `key value…`
//! pairs. Floats are written with seventeen significant digits, which is
//! enough to reproduce any `f64` bit-for-bit on reload, so a fitted model
//! round-trips exactly.
//!
//! Three formats exist: fitted fusion models (`#driqa-params/1`), the
//! no-reference-to-full-reference score mapping (`#driqa-nr-map/1`), and
//! the natural-scene-statistics model for the no-reference scorer
//! (`#driqa-niqe/1`).

use std::fs;
use std::path::Path;

use driqa_core::arch::ArchCode;
use driqa_core::distort::ComboType;
use driqa_core::fusion::{BackendPair, Model1Params, Model2Params, ScoreBackend};
use driqa_core::linalg::Matrix;
use driqa_core::logistic::LogisticParams;
use driqa_core::nr::{NiqeModel, NrBackend};
use driqa_core::svr::{FeatureScaling, SvrModel};

use crate::error::{Result, ToolError};

/// Formats a float with enough digits to reload it exactly.
pub fn f17(v: f64) -> String {
    format!("{v:.16e}")
}

/// Which of the three fusion models a parameter file carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ModelKind {
    Model1,
    Model2,
    Model3,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Model1 => "model1",
            ModelKind::Model2 => "model2",
            ModelKind::Model3 => "model3",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "model1" | "1" => Ok(ModelKind::Model1),
            "model2" | "2" => Ok(ModelKind::Model2),
            "model3" | "3" => Ok(ModelKind::Model3),
            other => Err(ToolError::Validation(format!("unknown model '{other}'"))),
        }
    }
}

/// A fitted fusion model of any kind.
#[derive(Debug, Clone, PartialEq)]
pub enum FittedModel {
    M1(Model1Params),
    M2(Model2Params),
    M3 {
        combo: ComboType,
        backends: BackendPair,
        svr: SvrModel,
    },
}

/// Fit provenance recorded alongside the coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct FitMeta {
    /// Architecture the fit serves: reference access at both stages, or
    /// no-reference midpoint access.
    pub arch: ArchCode,
    /// The no-reference backend and its score mapping, present exactly
    /// when the first score backend is the mapped no-reference estimate.
    pub nr: Option<(NrBackend, LogisticParams)>,
    pub train_samples: usize,
    pub val_plcc: f64,
    pub val_srcc: f64,
}

/// One parameter file: a fitted model plus its fit provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamFile {
    pub model: FittedModel,
    pub meta: FitMeta,
}

impl ParamFile {
    pub fn kind(&self) -> ModelKind {
        match self.model {
            FittedModel::M1(_) => ModelKind::Model1,
            FittedModel::M2(_) => ModelKind::Model2,
            FittedModel::M3 { .. } => ModelKind::Model3,
        }
    }

    /// The grouping the model was fitted on.
    pub fn combo(&self) -> ComboType {
        match &self.model {
            FittedModel::M1(p) => p.combo,
            FittedModel::M2(p) => p.combo,
            FittedModel::M3 { combo, .. } => *combo,
        }
    }

    /// The score backends behind (first, second) stage inputs.
    pub fn backends(&self) -> BackendPair {
        match &self.model {
            FittedModel::M1(p) => p.backends,
            FittedModel::M2(p) => p.backends,
            FittedModel::M3 { backends, .. } => *backends,
        }
    }

    /// Predicts the final-versus-original score from the two inputs.
    pub fn predict(&self, as_dr: f64, rs_fd: f64) -> Result<f64> {
        match &self.model {
            FittedModel::M1(p) => Ok(p.predict(as_dr, rs_fd)?),
            FittedModel::M2(p) => Ok(p.predict(as_dr, rs_fd)?),
            FittedModel::M3 { svr, .. } => Ok(svr.predict(as_dr, rs_fd)),
        }
    }

    /// Canonical file name for this fit cell.
    pub fn file_name(&self) -> String {
        let (as_b, rs_b) = self.backends();
        format!(
            "params-{}-{}-{}-{}.tsv",
            self.kind().name(),
            self.combo().name(),
            as_b.name(),
            rs_b.name()
        )
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("#driqa-params/1\t{}\n", self.kind().name());
        let (as_b, rs_b) = self.backends();
        out.push_str(&format!("combo\t{}\n", self.combo().name()));
        out.push_str(&format!("as_backend\t{}\n", as_b.name()));
        out.push_str(&format!("rs_backend\t{}\n", rs_b.name()));
        out.push_str(&format!("arch\t{}\n", self.meta.arch));
        out.push_str(&format!("train_samples\t{}\n", self.meta.train_samples));
        out.push_str(&format!("val_plcc\t{}\n", f17(self.meta.val_plcc)));
        out.push_str(&format!("val_srcc\t{}\n", f17(self.meta.val_srcc)));
        if let Some((nr, map)) = &self.meta.nr {
            out.push_str(&format!("nr\t{}\n", nr.name()));
            let b: Vec<String> = map.beta.iter().map(|&v| f17(v)).collect();
            out.push_str(&format!("nr_map\t{}\n", b.join("\t")));
        }
        match &self.model {
            FittedModel::M1(p) => {
                out.push_str(&format!("p1\t{}\n", f17(p.p1)));
                out.push_str(&format!("p2\t{}\n", f17(p.p2)));
            }
            FittedModel::M2(p) => {
                for (k, v) in [
                    ("a", p.a),
                    ("b", p.b),
                    ("c", p.c),
                    ("d", p.d),
                    ("e", p.e),
                    ("f", p.f),
                ] {
                    out.push_str(&format!("{k}\t{}\n", f17(v)));
                }
            }
            FittedModel::M3 { svr, .. } => {
                for (k, v) in [
                    ("epsilon", svr.epsilon),
                    ("gamma", svr.gamma),
                    ("nu", svr.nu),
                    ("c", svr.c),
                    ("dual_bound", svr.dual_bound),
                    ("bias", svr.bias),
                ] {
                    out.push_str(&format!("{k}\t{}\n", f17(v)));
                }
                out.push_str(&format!(
                    "scale_min\t{}\t{}\n",
                    f17(svr.scaling.min[0]),
                    f17(svr.scaling.min[1])
                ));
                out.push_str(&format!(
                    "scale_span\t{}\t{}\n",
                    f17(svr.scaling.span[0]),
                    f17(svr.scaling.span[1])
                ));
                for (sv, coef) in svr.support_vectors.iter().zip(&svr.dual_coefs) {
                    out.push_str(&format!(
                        "sv\t{}\t{}\t{}\n",
                        f17(sv[0]),
                        f17(sv[1]),
                        f17(*coef)
                    ));
                }
            }
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| ToolError::Format("empty parameter file".into()))?;
        let kind = match header.strip_prefix("#driqa-params/1\t") {
            Some(k) => ModelKind::parse(k)
                .map_err(|_| ToolError::Format(format!("unknown model kind in '{header}'")))?,
            None => {
                return Err(ToolError::Format(format!(
                    "unrecognized parameter header '{header}'"
                )))
            }
        };
        let table = KeyTable::parse(lines)?;
        let combo = ComboType::parse(table.one("combo")?)?;
        let as_b = ScoreBackend::parse(table.one("as_backend")?)?;
        let rs_b = ScoreBackend::parse(table.one("rs_backend")?)?;
        let backends: BackendPair = (as_b, rs_b);
        let arch = ArchCode::parse(table.one("arch")?)?;
        let nr = if table.all("nr").is_empty() {
            None
        } else {
            let beta = table.floats("nr_map", 5)?;
            Some((
                NrBackend::parse(table.one("nr")?)?,
                LogisticParams {
                    beta: [beta[0], beta[1], beta[2], beta[3], beta[4]],
                },
            ))
        };
        let meta = FitMeta {
            arch,
            nr,
            train_samples: table
                .one("train_samples")?
                .parse()
                .map_err(|_| ToolError::Format("bad train_samples".into()))?,
            val_plcc: table.float("val_plcc")?,
            val_srcc: table.float("val_srcc")?,
        };
        let model = match kind {
            ModelKind::Model1 => FittedModel::M1(Model1Params {
                p1: table.float("p1")?,
                p2: table.float("p2")?,
                combo,
                backends,
            }),
            ModelKind::Model2 => FittedModel::M2(Model2Params {
                a: table.float("a")?,
                b: table.float("b")?,
                c: table.float("c")?,
                d: table.float("d")?,
                e: table.float("e")?,
                f: table.float("f")?,
                combo,
                backends,
            }),
            ModelKind::Model3 => {
                let scale_min = table.floats("scale_min", 2)?;
                let scale_span = table.floats("scale_span", 2)?;
                let mut support_vectors = Vec::new();
                let mut dual_coefs = Vec::new();
                for row in table.all("sv") {
                    if row.len() != 3 {
                        return Err(ToolError::Format(
                            "sv rows need exactly three columns".into(),
                        ));
                    }
                    support_vectors.push([parse_f64(&row[0])?, parse_f64(&row[1])?]);
                    dual_coefs.push(parse_f64(&row[2])?);
                }
                FittedModel::M3 {
                    combo,
                    backends,
                    svr: SvrModel {
                        support_vectors,
                        dual_coefs,
                        bias: table.float("bias")?,
                        epsilon: table.float("epsilon")?,
                        gamma: table.float("gamma")?,
                        nu: table.float("nu")?,
                        c: table.float("c")?,
                        dual_bound: table.float("dual_bound")?,
                        scaling: FeatureScaling {
                            min: [scale_min[0], scale_min[1]],
                            span: [scale_span[0], scale_span[1]],
                        },
                    },
                }
            }
        };
        Ok(ParamFile { model, meta })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_text()).map_err(|e| ToolError::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| ToolError::io(path, e))?;
        Self::parse(&text)
    }
}

/// Ordered `key → rows of values` view of a parameter file body.
struct KeyTable {
    rows: Vec<(String, Vec<String>)>,
}

impl KeyTable {
    fn parse<'a>(lines: impl Iterator<Item = &'a str>) -> Result<Self> {
        let mut rows = Vec::new();
        for line in lines {
            if line.is_empty() {
                continue;
            }
            let mut cols = line.split('\t');
            let key = cols
                .next()
                .ok_or_else(|| ToolError::Format("blank parameter line".into()))?;
            rows.push((key.to_string(), cols.map(str::to_string).collect()));
        }
        Ok(KeyTable { rows })
    }

    /// Every row carrying this key, in file order; empty if absent.
    fn all(&self, key: &str) -> Vec<&Vec<String>> {
        self.rows
            .iter()
            .filter(|(k, _)| k == key)
            .map(|(_, v)| v)
            .collect()
    }

    fn one(&self, key: &str) -> Result<&str> {
        let row = self
            .rows
            .iter()
            .find(|(k, _)| k == key)
            .ok_or_else(|| ToolError::Format(format!("missing '{key}' line")))?;
        row.1
            .first()
            .map(String::as_str)
            .ok_or_else(|| ToolError::Format(format!("'{key}' line has no value")))
    }

    fn float(&self, key: &str) -> Result<f64> {
        parse_f64(self.one(key)?)
    }

    fn floats(&self, key: &str, n: usize) -> Result<Vec<f64>> {
        let row = self
            .rows
            .iter()
            .find(|(k, _)| k == key)
            .ok_or_else(|| ToolError::Format(format!("missing '{key}' line")))?;
        if row.1.len() != n {
            return Err(ToolError::Format(format!(
                "'{key}' needs {n} values, found {}",
                row.1.len()
            )));
        }
        row.1.iter().map(|v| parse_f64(v)).collect()
    }
}

fn parse_f64(s: &str) -> Result<f64> {
    s.parse::<f64>()
        .map_err(|_| ToolError::Format(format!("bad float '{s}'")))
}

/// Saves the no-reference score mapping as its own artifact.
pub fn save_nr_map(
    path: &Path,
    nr: NrBackend,
    fr_name: &str,
    map: &LogisticParams,
    train_samples: usize,
) -> Result<()> {
    let b: Vec<String> = map.beta.iter().map(|&v| f17(v)).collect();
    let text = format!(
        "#driqa-nr-map/1\nnr\t{}\nfr\t{}\ntrain_samples\t{}\nbeta\t{}\n",
        nr.name(),
        fr_name,
        train_samples,
        b.join("\t")
    );
    fs::write(path, text).map_err(|e| ToolError::io(path, e))
}

/// Loads a no-reference score mapping: (backend, full-reference scale
/// name, mapping).
pub fn load_nr_map(path: &Path) -> Result<(NrBackend, String, LogisticParams)> {
    let text = fs::read_to_string(path).map_err(|e| ToolError::io(path, e))?;
    let mut lines = text.lines();
    if lines.next() != Some("#driqa-nr-map/1") {
        return Err(ToolError::Format(format!(
            "{}: not a score-mapping file",
            path.display()
        )));
    }
    let table = KeyTable::parse(lines)?;
    let nr = NrBackend::parse(table.one("nr")?)?;
    let fr = table.one("fr")?.to_string();
    let beta = table.floats("beta", 5)?;
    Ok((
        nr,
        fr,
        LogisticParams {
            beta: [beta[0], beta[1], beta[2], beta[3], beta[4]],
        },
    ))
}

/// Saves the natural-scene-statistics model of the no-reference scorer.
pub fn save_niqe_model(path: &Path, model: &NiqeModel) -> Result<()> {
    let dim = model.mean.len();
    let mut text = format!("#driqa-niqe/1\ndim\t{dim}\n");
    let mean: Vec<String> = model.mean.iter().map(|&v| f17(v)).collect();
    text.push_str(&format!("mean\t{}\n", mean.join("\t")));
    for i in 0..dim {
        let row: Vec<String> = (0..dim).map(|j| f17(model.covariance[(i, j)])).collect();
        text.push_str(&format!("cov\t{}\n", row.join("\t")));
    }
    fs::write(path, text).map_err(|e| ToolError::io(path, e))
}

/// Loads a natural-scene-statistics model and checks its shape.
pub fn load_niqe_model(path: &Path) -> Result<NiqeModel> {
    let text = fs::read_to_string(path).map_err(|e| ToolError::io(path, e))?;
    let mut lines = text.lines();
    if lines.next() != Some("#driqa-niqe/1") {
        return Err(ToolError::Format(format!(
            "{}: not a no-reference model file",
            path.display()
        )));
    }
    let mut dim = None;
    let mut mean = None;
    let mut cov_rows: Vec<Vec<f64>> = Vec::new();
    for line in lines {
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        match cols[0] {
            "dim" => {
                dim = Some(
                    cols.get(1)
                        .and_then(|v| v.parse::<usize>().ok())
                        .ok_or_else(|| ToolError::Format("bad dim line".into()))?,
                )
            }
            "mean" => {
                mean = Some(
                    cols[1..]
                        .iter()
                        .map(|v| parse_f64(v))
                        .collect::<Result<Vec<f64>>>()?,
                )
            }
            "cov" => cov_rows.push(
                cols[1..]
                    .iter()
                    .map(|v| parse_f64(v))
                    .collect::<Result<Vec<f64>>>()?,
            ),
            other => {
                return Err(ToolError::Format(format!(
                    "unknown line '{other}' in no-reference model file"
                )))
            }
        }
    }
    let dim = dim.ok_or_else(|| ToolError::Format("missing dim line".into()))?;
    let mean = mean.ok_or_else(|| ToolError::Format("missing mean line".into()))?;
    if mean.len() != dim || cov_rows.len() != dim || cov_rows.iter().any(|r| r.len() != dim) {
        return Err(ToolError::Format(
            "model dimensions are internally inconsistent".into(),
        ));
    }
    let covariance = Matrix::from_rows(&cov_rows);
    let model = NiqeModel { mean, covariance };
    model.validate()?;
    Ok(model)
}
