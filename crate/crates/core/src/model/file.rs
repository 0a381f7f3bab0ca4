//! TOML model files.
//!
//! ```toml
//! schema_version = 1
//! name = "two-level demo"
//!
//! [system]
//! eigenvalues = [0.0, 1.0]
//! labels = [0, 1]                      # optional, defaults to 0..d
//! coupling = [[0.0, 0.0], [0.5, 0.0],  # row-major [re, im] pairs, d*d of them
//!             [0.5, 0.0], [0.0, 0.0]]
//!
//! [gas]
//! fugacity = 0.05
//! beta = 1.0                           # Gibbs weights e^{-βE_j} unless a bin sets gas_weight
//!
//! [[bin]]
//! energy = 0.125
//! width = 0.25
//! g0 = [[0.3, 0.0], [0.06, 0.0]]       # one [re, im] pair per multiplicity slot
//! g1 = [[0.0, 0.1], [0.2, 0.0]]
//! gas_weight = [[0.9, 0.0], [0.0, 0.0], [0.0, 0.0], [0.9, 0.0]]  # optional, d_j*d_j row-major
//! ```
//!
//! Dimension errors are reported with the line of the offending entry.

use std::fmt::Write as _;
use std::path::Path;

use serde::Deserialize;
use toml::Spanned;

use super::{Bin, EnergyGrid, FormFactorSet, GasState, Model, SystemModel};
use crate::error::{Error, Result};
use crate::linalg::{CMat, CVec, C64};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    schema_version: Spanned<u32>,
    name: Option<String>,
    system: Spanned<RawSystem>,
    gas: Spanned<RawGas>,
    #[serde(default)]
    bin: Vec<Spanned<RawBin>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSystem {
    eigenvalues: Spanned<Vec<f64>>,
    labels: Option<Spanned<Vec<usize>>>,
    coupling: Spanned<Vec<[f64; 2]>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGas {
    fugacity: Spanned<f64>,
    beta: Option<Spanned<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBin {
    energy: Spanned<f64>,
    width: Spanned<f64>,
    multiplicity: Option<Spanned<usize>>,
    g0: Spanned<Vec<[f64; 2]>>,
    g1: Spanned<Vec<[f64; 2]>>,
    gas_weight: Option<Spanned<Vec<[f64; 2]>>>,
}

/// A parsed model together with its source text.
#[derive(Debug, Clone)]
pub struct ModelFile {
    pub model: Model,
    pub source: String,
}

struct Lines<'a>(&'a str);

impl Lines<'_> {
    fn at(&self, offset: usize) -> usize {
        self.0[..offset.min(self.0.len())].bytes().filter(|&b| b == b'\n').count() + 1
    }

    fn err<T>(&self, span: std::ops::Range<usize>, message: impl Into<String>) -> Result<T> {
        Err(Error::Parse { line: self.at(span.start), message: message.into() })
    }
}

fn complex(pairs: &[[f64; 2]]) -> Vec<C64> {
    pairs.iter().map(|p| C64::new(p[0], p[1])).collect()
}

pub fn parse_model(text: &str) -> Result<Model> {
    let lines = Lines(text);
    let raw: RawModel = toml::from_str(text).map_err(|e| Error::Parse {
        line: e.span().map(|s| lines.at(s.start)).unwrap_or(1),
        message: e.message().to_string(),
    })?;

    if *raw.schema_version.get_ref() != SCHEMA_VERSION {
        return lines.err(
            raw.schema_version.span(),
            format!("unsupported schema_version {}, expected {SCHEMA_VERSION}", raw.schema_version.get_ref()),
        );
    }

    let sys = raw.system.get_ref();
    let eigenvalues = sys.eigenvalues.get_ref().clone();
    let labels = match &sys.labels {
        Some(l) => l.get_ref().clone(),
        None => (0..eigenvalues.len()).collect(),
    };
    let d = labels.len();
    if let Some(l) = &sys.labels {
        if let Some(bad) = l.get_ref().iter().find(|&&x| x >= eigenvalues.len()) {
            return lines.err(l.span(), format!("label {bad} has no eigenvalue ({} given)", eigenvalues.len()));
        }
    }
    let coupling = sys.coupling.get_ref();
    if coupling.len() != d * d {
        return lines.err(
            sys.coupling.span(),
            format!("coupling has {} entries, expected {} for dimension {d}", coupling.len(), d * d),
        );
    }
    let coupling = CMat::from_row_slice(d, d, &complex(coupling));
    let system = SystemModel::new(eigenvalues, labels, coupling)
        .map_err(|e| Error::Parse { line: lines.at(raw.system.span().start), message: e.to_string() })?;

    if raw.bin.is_empty() {
        return lines.err(0..0, "model has no [[bin]] entries");
    }
    let mut bins = Vec::with_capacity(raw.bin.len());
    let mut amplitudes = Vec::with_capacity(raw.bin.len());
    for (j, sb) in raw.bin.iter().enumerate() {
        let b = sb.get_ref();
        let g0 = b.g0.get_ref();
        let g1 = b.g1.get_ref();
        let mult = match &b.multiplicity {
            Some(m) => *m.get_ref(),
            None => g0.len(),
        };
        if mult == 0 {
            return lines.err(sb.span(), format!("bin {j}: multiplicity must be >= 1"));
        }
        if g0.len() != mult {
            return lines.err(b.g0.span(), format!("bin {j}: g0 has {} entries, multiplicity is {mult}", g0.len()));
        }
        if g1.len() != mult {
            return lines.err(b.g1.span(), format!("bin {j}: g1 has {} entries, multiplicity is {mult}", g1.len()));
        }
        if !(*b.width.get_ref() > 0.0) {
            return lines.err(b.width.span(), format!("bin {j}: width must be > 0"));
        }
        bins.push(Bin { center: *b.energy.get_ref(), width: *b.width.get_ref(), multiplicity: mult });
        amplitudes.push([CVec::from_vec(complex(g0)), CVec::from_vec(complex(g1))]);
    }
    let grid = EnergyGrid::new(bins)
        .map_err(|e| Error::Parse { line: lines.at(raw.bin[0].span().start), message: e.to_string() })?;
    let form_factors = FormFactorSet::new(&grid, amplitudes)?;

    let gas_raw = raw.gas.get_ref();
    let mut weights = Vec::with_capacity(grid.len());
    for (j, sb) in raw.bin.iter().enumerate() {
        let b = sb.get_ref();
        let mult = grid.bins()[j].multiplicity;
        let w = match (&b.gas_weight, &gas_raw.beta) {
            (Some(w), _) => {
                if w.get_ref().len() != mult * mult {
                    return lines.err(
                        w.span(),
                        format!("bin {j}: gas_weight has {} entries, expected {}", w.get_ref().len(), mult * mult),
                    );
                }
                CMat::from_row_slice(mult, mult, &complex(w.get_ref()))
            }
            (None, Some(beta)) => {
                CMat::identity(mult, mult) * C64::new((-beta.get_ref() * b.energy.get_ref()).exp(), 0.0)
            }
            (None, None) => {
                return lines.err(sb.span(), format!("bin {j}: no gas_weight and no [gas] beta"));
            }
        };
        weights.push(w);
    }
    let gas = GasState::new(&grid, *gas_raw.fugacity.get_ref(), weights)
        .map_err(|e| Error::Parse { line: lines.at(raw.gas.span().start), message: e.to_string() })?;

    Ok(Model {
        name: raw.name.unwrap_or_else(|| "unnamed".to_string()),
        system,
        grid,
        form_factors,
        gas,
    })
}

pub fn parse_model_file(path: &Path) -> Result<ModelFile> {
    let source = std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidInput(format!("cannot read model file {}: {e}", path.display())))?;
    let model = parse_model(&source)?;
    Ok(ModelFile { model, source })
}

fn pairs(values: impl IntoIterator<Item = C64>) -> String {
    let items: Vec<String> = values.into_iter().map(|z| format!("[{:?}, {:?}]", z.re, z.im)).collect();
    format!("[{}]", items.join(", "))
}

fn floats(values: &[f64]) -> String {
    let items: Vec<String> = values.iter().map(|x| format!("{x:?}")).collect();
    format!("[{}]", items.join(", "))
}

fn row_major(m: &CMat) -> Vec<C64> {
    (0..m.nrows()).flat_map(|i| (0..m.ncols()).map(move |j| m[(i, j)])).collect()
}

/// Serialises a model losslessly; gas weights are written per bin.
pub fn write_model(model: &Model) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "schema_version = {SCHEMA_VERSION}");
    let _ = writeln!(out, "name = {:?}", model.name);
    let _ = writeln!(out, "\n[system]");
    let _ = writeln!(out, "eigenvalues = {}", floats(model.system.eigenvalues()));
    let labels: Vec<String> = model.system.labels().iter().map(|l| l.to_string()).collect();
    let _ = writeln!(out, "labels = [{}]", labels.join(", "));
    let _ = writeln!(out, "coupling = {}", pairs(row_major(model.system.coupling())));
    let _ = writeln!(out, "\n[gas]");
    let _ = writeln!(out, "fugacity = {:?}", model.gas.fugacity());
    for (j, b) in model.grid.bins().iter().enumerate() {
        let _ = writeln!(out, "\n[[bin]]");
        let _ = writeln!(out, "energy = {:?}", b.center);
        let _ = writeln!(out, "width = {:?}", b.width);
        let _ = writeln!(out, "multiplicity = {}", b.multiplicity);
        let _ = writeln!(out, "g0 = {}", pairs(model.form_factors.amplitude(j, 0).iter().copied()));
        let _ = writeln!(out, "g1 = {}", pairs(model.form_factors.amplitude(j, 1).iter().copied()));
        let _ = writeln!(out, "gas_weight = {}", pairs(row_major(model.gas.weight(j))));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{demo_model, DemoModel};

    const SMALL: &str = r#"schema_version = 1
name = "small"

[system]
eigenvalues = [0.0, 1.0]
coupling = [[0.0, 0.0], [0.5, 0.0], [0.5, 0.0], [0.0, 0.0]]

[gas]
fugacity = 0.1
beta = 1.0

[[bin]]
energy = 0.5
width = 1.0
g0 = [[0.3, 0.0]]
g1 = [[0.0, 0.2]]

[[bin]]
energy = 1.5
width = 1.0
g0 = [[0.1, 0.0]]
g1 = [[0.2, 0.0]]
"#;

    #[test]
    fn parses_small_model() {
        let m = parse_model(SMALL).unwrap();
        assert_eq!(m.system.dim(), 2);
        assert_eq!(m.grid.len(), 2);
        assert_eq!(m.form_factors.amplitude(0, 1)[0], C64::new(0.0, 0.2));
        assert!((m.gas.weight(1)[(0, 0)].re - (-1.5f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn coupling_dimension_error_points_at_its_line() {
        let text = SMALL.replace("[[0.0, 0.0], [0.5, 0.0], [0.5, 0.0], [0.0, 0.0]]", "[[0.0, 0.0], [0.5, 0.0]]");
        match parse_model(&text) {
            Err(Error::Parse { line, message }) => {
                assert_eq!(line, 6, "{message}");
                assert!(message.contains("coupling"));
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn amplitude_length_error_points_at_its_line() {
        let text = SMALL.replace("g1 = [[0.2, 0.0]]", "g1 = [[0.2, 0.0], [0.1, 0.0]]");
        match parse_model(&text) {
            Err(Error::Parse { line, message }) => {
                assert_eq!(line, 22, "{message}");
                assert!(message.contains("g1"));
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn syntax_errors_carry_a_line() {
        let text = SMALL.replace("width = 1.0\ng0 = [[0.1", "width = = 1.0\ng0 = [[0.1");
        assert!(matches!(parse_model(&text), Err(Error::Parse { line: 20, .. })));
    }

    #[test]
    fn missing_gas_weight_without_beta_is_rejected() {
        let text = SMALL.replace("beta = 1.0\n", "");
        assert!(matches!(parse_model(&text), Err(Error::Parse { .. })));
    }

    #[test]
    fn written_demo_model_parses_back_identically() {
        for which in [DemoModel::TwoLevel, DemoModel::Null, DemoModel::RankDeficient] {
            let m = demo_model(which);
            let back = parse_model(&write_model(&m)).unwrap();
            assert_eq!(back, m);
        }
    }
}
