//! On-disk document format for states, channels, tripartite states, and
//! generator blueprints.
//!
//! Documents are JSON with a top-level `kind` tag. Complex matrices are
//! arrays of rows, each entry a two-element `[re, im]` array; channels carry
//! their Kraus coefficients under `kraus`. Finite floats survive a
//! write/read cycle bit-exactly (serialization uses the shortest
//! representation that parses back to the same `f64`).
//!
//! Reading validates shape — tag, dimension bookkeeping, rectangular
//! matrices — before anything numerical touches the data; the conversions
//! into domain types ([`Document::into_state`] and friends) then apply the
//! domain validations (hermiticity, trace, positivity, trace preservation).

use std::fs;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channels::KrausChannel;
use crate::entropy::{MarkovSpec, TripartiteState};
use crate::linalg::{ComplexMatrix, DensityMatrix, SubsystemDims};
use crate::sufficiency::SyntheticSpec;
use crate::{Error, Result};

/// Rows of `[re, im]` pairs.
pub type MatrixData = Vec<Vec<[f64; 2]>>;

pub fn matrix_to_data(m: &ComplexMatrix) -> MatrixData {
    (0..m.rows())
        .map(|r| (0..m.cols()).map(|c| [m[(r, c)].re, m[(r, c)].im]).collect())
        .collect()
}

pub fn data_to_matrix(data: &MatrixData) -> Result<ComplexMatrix> {
    if data.is_empty() {
        return Err(Error::InvalidDocument("matrix has no rows".into()));
    }
    let cols = data[0].len();
    if cols == 0 || data.iter().any(|row| row.len() != cols) {
        return Err(Error::InvalidDocument(
            "matrix rows are empty or of unequal length".into(),
        ));
    }
    Ok(ComplexMatrix::from_fn(data.len(), cols, |r, c| {
        Complex64::new(data[r][c][0], data[r][c][1])
    }))
}

/// Generator blueprint payload of an `instance_spec` document.
///
/// `family` selects the generator: `"sufficient"` uses `blocks` as `(d, m)`
/// pairs with one row of `state_weights` per state; `"markov"` uses `dims`
/// as the outer leg pair `[d_A, d_C]`, `blocks` as `(L, R)` middle splits,
/// and one entry of `weights` per block.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpecData {
    pub family: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dims: Option<Vec<usize>>,
    pub blocks: Vec<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state_weights: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub env_dim: Option<usize>,
    pub seed: u64,
}

/// A parsed generator blueprint, ready to hand to the corresponding
/// builder.
#[derive(Clone, Debug)]
pub enum GeneratorSpec {
    Sufficient(SyntheticSpec),
    Markov(MarkovSpec),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Document {
    State {
        dims: Vec<usize>,
        matrix: MatrixData,
    },
    /// `dims` is `[in_dim, out_dim]`; every Kraus coefficient is
    /// `out_dim × in_dim`.
    Channel {
        dims: Vec<usize>,
        kraus: Vec<MatrixData>,
    },
    TripartiteState {
        dims: Vec<usize>,
        matrix: MatrixData,
    },
    InstanceSpec(SpecData),
}

fn check_square(matrix: &MatrixData, side: usize, what: &str) -> Result<()> {
    if matrix.len() != side || matrix.iter().any(|row| row.len() != side) {
        return Err(Error::InvalidDocument(format!(
            "{what} must be a {side}×{side} matrix to match dims"
        )));
    }
    Ok(())
}

impl Document {
    pub fn kind(&self) -> &'static str {
        match self {
            Document::State { .. } => "state",
            Document::Channel { .. } => "channel",
            Document::TripartiteState { .. } => "tripartite_state",
            Document::InstanceSpec(_) => "instance_spec",
        }
    }

    /// Shape-level consistency: dims bookkeeping against the carried
    /// matrices, before any numerical validation.
    pub fn validate(&self) -> Result<()> {
        match self {
            Document::State { dims, matrix } => {
                if dims.is_empty() || dims.iter().any(|&d| d == 0) {
                    return Err(Error::InvalidDocument(
                        "state dims must be a nonempty list of positive integers".into(),
                    ));
                }
                check_square(matrix, dims.iter().product(), "state matrix")
            }
            Document::Channel { dims, kraus } => {
                let [in_dim, out_dim] = match dims.as_slice() {
                    &[i, o] if i > 0 && o > 0 => [i, o],
                    _ => {
                        return Err(Error::InvalidDocument(
                            "channel dims must be [in_dim, out_dim] with positive entries".into(),
                        ))
                    }
                };
                if kraus.is_empty() {
                    return Err(Error::InvalidDocument(
                        "channel needs at least one Kraus coefficient".into(),
                    ));
                }
                for (i, k) in kraus.iter().enumerate() {
                    if k.len() != out_dim || k.iter().any(|row| row.len() != in_dim) {
                        return Err(Error::InvalidDocument(format!(
                            "Kraus coefficient {i} must be {out_dim}×{in_dim} to match dims"
                        )));
                    }
                }
                Ok(())
            }
            Document::TripartiteState { dims, matrix } => {
                if dims.len() != 3 || dims.iter().any(|&d| d == 0) {
                    return Err(Error::InvalidDocument(
                        "tripartite dims must be three positive integers".into(),
                    ));
                }
                check_square(matrix, dims.iter().product(), "tripartite state matrix")
            }
            Document::InstanceSpec(spec) => {
                if spec.blocks.is_empty() || spec.blocks.iter().any(|b| b.len() != 2) {
                    return Err(Error::InvalidDocument(
                        "spec blocks must be a nonempty list of pairs".into(),
                    ));
                }
                match spec.family.as_str() {
                    "sufficient" => {
                        let weights = spec.state_weights.as_ref().ok_or_else(|| {
                            Error::InvalidDocument(
                                "a sufficient-instance spec needs state_weights".into(),
                            )
                        })?;
                        if weights.iter().any(|row| row.len() != spec.blocks.len()) {
                            return Err(Error::InvalidDocument(
                                "each state_weights row must have one entry per block".into(),
                            ));
                        }
                        Ok(())
                    }
                    "markov" => {
                        match spec.dims.as_deref() {
                            Some([a, c]) if *a > 0 && *c > 0 => {}
                            _ => {
                                return Err(Error::InvalidDocument(
                                    "a markov spec needs dims = [dim_a, dim_c]".into(),
                                ))
                            }
                        }
                        let weights = spec.weights.as_ref().ok_or_else(|| {
                            Error::InvalidDocument("a markov spec needs weights".into())
                        })?;
                        if weights.len() != spec.blocks.len() {
                            return Err(Error::InvalidDocument(
                                "markov weights must have one entry per block".into(),
                            ));
                        }
                        Ok(())
                    }
                    other => Err(Error::InvalidDocument(format!(
                        "unknown spec family {other:?}"
                    ))),
                }
            }
        }
    }

    pub fn state(d: &DensityMatrix) -> Document {
        Document::State {
            dims: vec![d.dim()],
            matrix: matrix_to_data(d.matrix()),
        }
    }

    /// A state document with an explicit leg split, e.g. a factor living on
    /// a tensor product.
    pub fn state_with_dims(m: &ComplexMatrix, dims: Vec<usize>) -> Document {
        Document::State {
            dims,
            matrix: matrix_to_data(m),
        }
    }

    pub fn channel(c: &KrausChannel) -> Document {
        Document::Channel {
            dims: vec![c.in_dim(), c.out_dim()],
            kraus: c.coefficients().iter().map(matrix_to_data).collect(),
        }
    }

    pub fn tripartite(s: &TripartiteState) -> Document {
        Document::TripartiteState {
            dims: s.dims().dims().to_vec(),
            matrix: matrix_to_data(s.density().matrix()),
        }
    }

    pub fn spec(spec: &GeneratorSpec) -> Document {
        match spec {
            GeneratorSpec::Sufficient(s) => Document::InstanceSpec(SpecData {
                family: "sufficient".into(),
                dims: None,
                blocks: s.blocks.iter().map(|&(d, m)| vec![d, m]).collect(),
                state_weights: Some(s.weights.clone()),
                weights: None,
                env_dim: Some(s.env_dim),
                seed: s.seed,
            }),
            GeneratorSpec::Markov(m) => Document::InstanceSpec(SpecData {
                family: "markov".into(),
                dims: Some(vec![m.dim_a, m.dim_c]),
                blocks: m.blocks.iter().map(|&(l, r, _)| vec![l, r]).collect(),
                state_weights: None,
                weights: Some(m.blocks.iter().map(|&(_, _, w)| w).collect()),
                env_dim: None,
                seed: m.seed,
            }),
        }
    }

    pub fn into_state(self) -> Result<DensityMatrix> {
        match self {
            Document::State { matrix, .. } => DensityMatrix::new(data_to_matrix(&matrix)?),
            other => Err(Error::InvalidDocument(format!(
                "expected a state document, got kind {:?}",
                other.kind()
            ))),
        }
    }

    pub fn into_channel(self) -> Result<KrausChannel> {
        match self {
            Document::Channel { dims, kraus } => {
                let coefficients = kraus
                    .iter()
                    .map(data_to_matrix)
                    .collect::<Result<Vec<_>>>()?;
                KrausChannel::new(dims[0], dims[1], coefficients)
            }
            other => Err(Error::InvalidDocument(format!(
                "expected a channel document, got kind {:?}",
                other.kind()
            ))),
        }
    }

    pub fn into_tripartite(self) -> Result<TripartiteState> {
        match self {
            Document::TripartiteState { dims, matrix } => TripartiteState::new(
                DensityMatrix::new(data_to_matrix(&matrix)?)?,
                SubsystemDims::new(dims)?,
            ),
            other => Err(Error::InvalidDocument(format!(
                "expected a tripartite_state document, got kind {:?}",
                other.kind()
            ))),
        }
    }

    pub fn into_spec(self) -> Result<GeneratorSpec> {
        let spec = match self {
            Document::InstanceSpec(spec) => spec,
            other => {
                return Err(Error::InvalidDocument(format!(
                    "expected an instance_spec document, got kind {:?}",
                    other.kind()
                )))
            }
        };
        match spec.family.as_str() {
            "sufficient" => Ok(GeneratorSpec::Sufficient(SyntheticSpec {
                blocks: spec.blocks.iter().map(|b| (b[0], b[1])).collect(),
                weights: spec.state_weights.unwrap_or_default(),
                env_dim: spec.env_dim.unwrap_or(2),
                seed: spec.seed,
                mismatched_r: false,
            })),
            "markov" => {
                let dims = spec.dims.unwrap_or_default();
                let weights = spec.weights.unwrap_or_default();
                Ok(GeneratorSpec::Markov(MarkovSpec {
                    dim_a: dims[0],
                    dim_c: dims[1],
                    blocks: spec
                        .blocks
                        .iter()
                        .zip(&weights)
                        .map(|(b, &w)| (b[0], b[1], w))
                        .collect(),
                    seed: spec.seed,
                }))
            }
            other => Err(Error::InvalidDocument(format!(
                "unknown spec family {other:?}"
            ))),
        }
    }
}

pub fn parse_document(text: &str) -> Result<Document> {
    let document: Document = serde_json::from_str(text)?;
    document.validate()?;
    Ok(document)
}

pub fn render_document(document: &Document) -> Result<String> {
    let mut text = serde_json::to_string_pretty(document)?;
    text.push('\n');
    Ok(text)
}

fn with_path(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}

pub fn read_document(path: &Path) -> Result<Document> {
    parse_document(&fs::read_to_string(path).map_err(with_path(path))?)
}

pub fn write_document(path: &Path, document: &Document) -> Result<()> {
    document.validate()?;
    fs::write(path, render_document(document)?).map_err(with_path(path))?;
    Ok(())
}

fn parse_usize(text: &str, what: &str) -> Result<usize> {
    text.trim()
        .parse()
        .map_err(|_| Error::InvalidSpec(format!("{what}: expected an integer, got {text:?}")))
}

fn parse_f64(text: &str, what: &str) -> Result<f64> {
    text.trim()
        .parse()
        .map_err(|_| Error::InvalidSpec(format!("{what}: expected a number, got {text:?}")))
}

/// `2x1:0.5,1x2:0.5` — comma-separated middle splits with weights.
pub fn parse_markov_blocks(text: &str) -> Result<Vec<(usize, usize, f64)>> {
    text.split(',')
        .map(|part| {
            let (split, weight) = part.split_once(':').ok_or_else(|| {
                Error::InvalidSpec(format!("block {part:?} is not of the form LxR:weight"))
            })?;
            let (l, r) = split.split_once('x').ok_or_else(|| {
                Error::InvalidSpec(format!("split {split:?} is not of the form LxR"))
            })?;
            Ok((
                parse_usize(l, "left split")?,
                parse_usize(r, "right split")?,
                parse_f64(weight, "block weight")?,
            ))
        })
        .collect()
}

/// `2,2:1,3` — colon-separated (d, m) block shapes.
pub fn parse_shape_blocks(text: &str) -> Result<Vec<(usize, usize)>> {
    text.split(':')
        .map(|part| {
            let (d, m) = part.split_once(',').ok_or_else(|| {
                Error::InvalidSpec(format!("block {part:?} is not of the form d,m"))
            })?;
            Ok((parse_usize(d, "block dimension")?, parse_usize(m, "block multiplicity")?))
        })
        .collect()
}

/// `0.3,0.7` — a plain comma-separated list.
pub fn parse_weight_list(text: &str, what: &str) -> Result<Vec<f64>> {
    text.split(',').map(|w| parse_f64(w, what)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::random_channel;
    use crate::random::Seeded;

    #[test]
    fn state_document_round_trip_is_bit_exact() {
        let mut gen = Seeded::new(140);
        let d = gen.density(5);
        let document = Document::state(&d);
        let text = render_document(&document).unwrap();
        let parsed = parse_document(&text).unwrap();
        assert_eq!(parsed, document);
        assert_eq!(render_document(&parsed).unwrap(), text);
        let recovered = parsed.into_state().unwrap();
        // Bit-exact, not merely close:
        for r in 0..5 {
            for c in 0..5 {
                let original = d.matrix()[(r, c)];
                let read = recovered.matrix()[(r, c)];
                assert_eq!(original.re.to_bits(), read.re.to_bits());
                assert_eq!(original.im.to_bits(), read.im.to_bits());
            }
        }
    }

    #[test]
    fn channel_document_round_trip_preserves_coefficients() {
        let mut gen = Seeded::new(141);
        let channel = random_channel(&mut gen, 3, 4, 2);
        let document = Document::channel(&channel);
        let text = render_document(&document).unwrap();
        let recovered = parse_document(&text).unwrap().into_channel().unwrap();
        assert_eq!(recovered.in_dim(), 3);
        assert_eq!(recovered.out_dim(), 4);
        for (a, b) in channel.coefficients().iter().zip(recovered.coefficients()) {
            assert!(a.hs_distance(b) == 0.0);
        }
    }

    #[test]
    fn spec_documents_round_trip_for_both_families() {
        let sufficient = GeneratorSpec::Sufficient(SyntheticSpec::two_state(
            vec![(2, 2), (1, 3)],
            vec![0.3, 0.7],
            vec![0.6, 0.4],
            7,
        ));
        let markov = GeneratorSpec::Markov(MarkovSpec {
            dim_a: 2,
            dim_c: 2,
            blocks: vec![(2, 1, 0.5), (1, 2, 0.5)],
            seed: 7,
        });
        for spec in [sufficient, markov] {
            let document = Document::spec(&spec);
            let text = render_document(&document).unwrap();
            let reparsed = parse_document(&text).unwrap();
            assert_eq!(reparsed, document);
            match (spec, reparsed.into_spec().unwrap()) {
                (GeneratorSpec::Sufficient(a), GeneratorSpec::Sufficient(b)) => {
                    assert_eq!(a.blocks, b.blocks);
                    assert_eq!(a.weights, b.weights);
                    assert_eq!(a.env_dim, b.env_dim);
                    assert_eq!(a.seed, b.seed);
                }
                (GeneratorSpec::Markov(a), GeneratorSpec::Markov(b)) => {
                    assert_eq!(a.dim_a, b.dim_a);
                    assert_eq!(a.dim_c, b.dim_c);
                    assert_eq!(a.blocks, b.blocks);
                    assert_eq!(a.seed, b.seed);
                }
                _ => panic!("spec family changed across the round trip"),
            }
        }
    }

    #[test]
    fn validation_rejects_inconsistent_documents_before_any_numerics() {
        // dims say 3 but the matrix is 2×2.
        let text = r#"{"kind": "state", "dims": [3], "matrix": [[[1.0,0.0],[0.0,0.0]],[[0.0,0.0],[0.0,0.0]]]}"#;
        assert!(matches!(parse_document(text), Err(Error::InvalidDocument(_))));
        // Ragged Kraus coefficient.
        let text = r#"{"kind": "channel", "dims": [2, 1], "kraus": [[[[1.0,0.0],[0.0,0.0]]],[[[1.0,0.0]]]]}"#;
        assert!(matches!(parse_document(text), Err(Error::InvalidDocument(_))));
        // Unknown kind tag.
        assert!(matches!(
            parse_document(r#"{"kind": "witness", "dims": [2]}"#),
            Err(Error::Json(_))
        ));
        // Tripartite needs exactly three legs.
        let tri = r#"{"kind": "tripartite_state", "dims": [2, 2], "matrix": [[[1.0,0.0],[0.0,0.0]],[[0.0,0.0],[0.0,0.0]]]}"#;
        assert!(matches!(parse_document(tri), Err(Error::InvalidDocument(_))));
        // Spec family must be known.
        let spec = r#"{"kind": "instance_spec", "family": "psychic", "blocks": [[1,1]], "seed": 3}"#;
        assert!(matches!(parse_document(spec), Err(Error::InvalidDocument(_))));
    }

    #[test]
    fn domain_validation_still_applies_after_shape_checks() {
        // Shape-valid but not a density: trace 2.
        let text = r#"{"kind": "state", "dims": [2], "matrix": [[[1.0,0.0],[0.0,0.0]],[[0.0,0.0],[1.0,0.0]]]}"#;
        let document = parse_document(text).unwrap();
        assert!(document.into_state().is_err());
    }
}
