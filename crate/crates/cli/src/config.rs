//! Run configuration: a JSON document declaring a scenario together with
//! the group, algebra, maps, and numeric parameters it needs. Complex
//! matrices are nested arrays of [re, im] pairs; group elements are
//! indices for finite groups and integer vectors for Z^k.

use igroup_core::algebra::{AlgebraMap, FdAlgebra};
use igroup_core::group::{Elem, Group};
use igroup_core::linalg::{c, CMat};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::sync::Arc;

#[derive(Debug, thiserror::Error)]
#[error("config error in `{field}`: {message}")]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

fn bad(field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError {
        field: field.into(),
        message: message.into(),
    }
}

/// A complex matrix as rows of [re, im] entries.
pub type MatrixSpec = Vec<Vec<[f64; 2]>>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    VerifyInteraction,
    WordIdentities,
    RegularRep,
    GnsCrossedProduct,
    RedundancyScan,
    Extend,
    FockCounterexample,
}

impl Scenario {
    pub fn name(&self) -> &'static str {
        match self {
            Scenario::VerifyInteraction => "verify-interaction",
            Scenario::WordIdentities => "word-identities",
            Scenario::RegularRep => "regular-rep",
            Scenario::GnsCrossedProduct => "gns-crossed-product",
            Scenario::RedundancyScan => "redundancy-scan",
            Scenario::Extend => "extend",
            Scenario::FockCounterexample => "fock-counterexample",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum GroupSpec {
    Cyclic { n: usize },
    Symmetric { degree: usize },
    FreeAbelian { rank: usize },
    Table { table: Vec<Vec<usize>> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgebraSpec {
    /// Sizes of the full matrix blocks of the algebra.
    pub blocks: Vec<usize>,
}

/// A group element in configs: a bare index for finite groups, an integer
/// vector for Z^k.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ElemSpec {
    Finite(usize),
    Vector(Vec<i64>),
}

pub const CONFIG_SCHEMA_ID: &str = "igroup-config/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct RunConfig {
    /// Optional schema id; must be `igroup-config/1` when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema: Option<String>,
    pub scenario: Scenario,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group: Option<GroupSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub algebra: Option<AlgebraSpec>,
    /// One map per group element, keyed by element ("3" or "1,-1"),
    /// acting on the vectorized algebra. Finite groups must cover every
    /// element.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub maps: BTreeMap<String, MatrixSpec>,
    /// Generator endomorphisms of a semigroup system (one per Z^k
    /// coordinate), acting on the vectorized algebra.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub endomorphisms: Vec<MatrixSpec>,
    /// Transfer operators matching `endomorphisms`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub transfers: Vec<MatrixSpec>,
    /// Density matrix of the reference state; defaults to the normalized
    /// trace.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state: Option<MatrixSpec>,
    /// Alphabet for word surveys; defaults to the non-identity window
    /// elements (finite) or the unit vectors and their inverses (Z^k).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generators: Option<Vec<ElemSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_word_len: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Blaschke parameter as [re, im] for the Fock scenario.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blaschke: Option<[f64; 2]>,
    /// Truncation sizes for the Fock scenario.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sizes: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_threshold: Option<f64>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<RunConfig, ConfigError> {
        let config: RunConfig =
            serde_json::from_str(text).map_err(|e| bad("<document>", e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// Structural validation beyond what serde enforces: matrix shapes and
    /// internal consistency. Scenario-specific requirements are checked at
    /// build time.
    fn validate(&self) -> Result<(), ConfigError> {
        if let Some(schema) = &self.schema {
            if schema != CONFIG_SCHEMA_ID {
                return Err(bad(
                    "schema",
                    format!("unsupported schema `{schema}`, expected `{CONFIG_SCHEMA_ID}`"),
                ));
            }
        }
        if let Some(AlgebraSpec { blocks }) = &self.algebra {
            if blocks.is_empty() || blocks.iter().any(|&b| b == 0) {
                return Err(bad("algebra.blocks", "blocks must be positive sizes"));
            }
        }
        for (key, m) in &self.maps {
            check_matrix(&format!("maps.{key}"), m, true)?;
        }
        for (i, m) in self.endomorphisms.iter().enumerate() {
            check_matrix(&format!("endomorphisms[{i}]"), m, true)?;
        }
        for (i, m) in self.transfers.iter().enumerate() {
            check_matrix(&format!("transfers[{i}]"), m, true)?;
        }
        if let Some(m) = &self.state {
            check_matrix("state", m, true)?;
        }
        if let Some(w) = self.window {
            if w < 0 {
                return Err(bad("window", "window radius must be nonnegative"));
            }
        }
        if let Some(t) = self.tol {
            if !(t > 0.0) {
                return Err(bad("tol", "tolerance must be positive"));
            }
        }
        if let Some(sizes) = &self.sizes {
            if sizes.is_empty() || sizes.iter().any(|&n| n < 4) {
                return Err(bad("sizes", "need truncation sizes of at least 4"));
            }
        }
        if let Some([re, im]) = self.blaschke {
            if (re * re + im * im).sqrt() >= 1.0 {
                return Err(bad("blaschke", "parameter must have modulus < 1"));
            }
        }
        Ok(())
    }

    pub fn build_group(&self) -> Result<Group, ConfigError> {
        match self
            .group
            .as_ref()
            .ok_or_else(|| bad("group", "scenario requires a group"))?
        {
            GroupSpec::Cyclic { n } => {
                if *n == 0 {
                    return Err(bad("group.n", "cyclic order must be positive"));
                }
                Ok(Group::cyclic(*n))
            }
            GroupSpec::Symmetric { degree } => {
                if *degree == 0 || *degree > 5 {
                    return Err(bad("group.degree", "supported degrees are 1..=5"));
                }
                Ok(Group::symmetric(*degree))
            }
            GroupSpec::FreeAbelian { rank } => {
                if *rank == 0 {
                    return Err(bad("group.rank", "rank must be positive"));
                }
                Ok(Group::free_abelian(*rank))
            }
            GroupSpec::Table { table } => {
                Group::from_table(table.clone()).map_err(|e| bad("group.table", e.to_string()))
            }
        }
    }

    pub fn build_algebra(&self) -> Result<Arc<FdAlgebra>, ConfigError> {
        let spec = self
            .algebra
            .as_ref()
            .ok_or_else(|| bad("algebra", "scenario requires an algebra"))?;
        Ok(FdAlgebra::new(spec.blocks.clone()))
    }

    /// The explicit map table, parsed and dimension-checked against the
    /// algebra.
    pub fn build_maps(
        &self,
        group: &Group,
        algebra: &Arc<FdAlgebra>,
    ) -> Result<BTreeMap<Elem, AlgebraMap>, ConfigError> {
        if self.maps.is_empty() {
            return Err(bad("maps", "scenario requires one map per group element"));
        }
        let mut out = BTreeMap::new();
        for (key, spec) in &self.maps {
            let field = format!("maps.{key}");
            let elem = parse_elem_key(key, group).map_err(|m| bad(&field, m))?;
            group
                .check(&elem)
                .map_err(|e| bad(&field, e.to_string()))?;
            let mat = to_cmat(spec);
            if mat.nrows() != algebra.dim() {
                return Err(bad(
                    &field,
                    format!(
                        "map must be {d} x {d} on the vectorized algebra, got {r} x {c}",
                        d = algebra.dim(),
                        r = mat.nrows(),
                        c = mat.ncols()
                    ),
                ));
            }
            let map = AlgebraMap::from_matrix(algebra, mat)
                .map_err(|e| bad(&field, e.to_string()))?;
            out.insert(elem, map);
        }
        Ok(out)
    }

    /// The generator maps of a semigroup system.
    pub fn build_system_maps(
        &self,
        algebra: &Arc<FdAlgebra>,
    ) -> Result<(Vec<AlgebraMap>, Vec<AlgebraMap>), ConfigError> {
        let convert = |field: &str, specs: &[MatrixSpec]| -> Result<Vec<AlgebraMap>, ConfigError> {
            specs
                .iter()
                .enumerate()
                .map(|(i, spec)| {
                    let field = format!("{field}[{i}]");
                    let mat = to_cmat(spec);
                    if mat.nrows() != algebra.dim() {
                        return Err(bad(
                            &field,
                            format!(
                                "map must be {d} x {d} on the vectorized algebra",
                                d = algebra.dim()
                            ),
                        ));
                    }
                    AlgebraMap::from_matrix(algebra, mat).map_err(|e| bad(&field, e.to_string()))
                })
                .collect()
        };
        let alphas = convert("endomorphisms", &self.endomorphisms)?;
        let ells = convert("transfers", &self.transfers)?;
        if alphas.is_empty() {
            return Err(bad("endomorphisms", "scenario requires at least one"));
        }
        Ok((alphas, ells))
    }

    pub fn build_alphabet(&self, group: &Group) -> Result<Vec<Elem>, ConfigError> {
        if let Some(specs) = &self.generators {
            let elems: Vec<Elem> = specs
                .iter()
                .enumerate()
                .map(|(i, s)| {
                    let e = match s {
                        ElemSpec::Finite(k) => Elem::Finite(*k),
                        ElemSpec::Vector(v) => Elem::vector(v),
                    };
                    group
                        .check(&e)
                        .map(|_| e)
                        .map_err(|err| bad(&format!("generators[{i}]"), err.to_string()))
                })
                .collect::<Result<_, _>>()?;
            if elems.is_empty() {
                return Err(bad("generators", "alphabet must be nonempty"));
            }
            return Ok(elems);
        }
        let identity = group.identity();
        match group.elements() {
            Some(all) => Ok(all.into_iter().filter(|e| *e != identity).collect()),
            None => {
                let Elem::Vector(zero) = identity else {
                    unreachable!("infinite groups here are free abelian")
                };
                let rank = zero.len();
                let mut gens = Vec::with_capacity(2 * rank);
                for i in 0..rank {
                    for sign in [1i64, -1] {
                        let mut v = vec![0i64; rank];
                        v[i] = sign;
                        gens.push(Elem::vector(&v));
                    }
                }
                Ok(gens)
            }
        }
    }

    pub fn build_state(
        &self,
        algebra: &Arc<FdAlgebra>,
        tol: f64,
    ) -> Result<igroup_core::algebra::State, ConfigError> {
        match &self.state {
            None => Ok(igroup_core::algebra::State::normalized_trace(algebra)),
            Some(spec) => {
                let mat = to_cmat(spec);
                if mat.nrows() != algebra.matrix_dim() {
                    return Err(bad(
                        "state",
                        format!(
                            "density matrix must be {d} x {d}",
                            d = algebra.matrix_dim()
                        ),
                    ));
                }
                igroup_core::algebra::State::new(algebra, mat, tol)
                    .map_err(|e| bad("state", e.to_string()))
            }
        }
    }

    pub fn effective_window(&self) -> i64 {
        self.window.unwrap_or(2)
    }

    pub fn effective_tol(&self) -> f64 {
        self.tol.unwrap_or(1e-9)
    }

    pub fn effective_seed(&self) -> u64 {
        self.seed.unwrap_or(7)
    }

    pub fn effective_max_word_len(&self) -> usize {
        self.max_word_len.unwrap_or(match self.scenario {
            Scenario::WordIdentities => 4,
            _ => 3,
        })
    }
}

fn check_matrix(field: &str, m: &MatrixSpec, square: bool) -> Result<(), ConfigError> {
    if m.is_empty() {
        return Err(bad(field, "matrix is empty"));
    }
    let cols = m[0].len();
    for (i, row) in m.iter().enumerate() {
        if row.len() != cols {
            return Err(bad(
                field,
                format!("row {i} has {} entries, expected {cols}", row.len()),
            ));
        }
    }
    if square && m.len() != cols {
        return Err(bad(
            field,
            format!("matrix must be square, got {} x {}", m.len(), cols),
        ));
    }
    Ok(())
}

pub fn to_cmat(spec: &MatrixSpec) -> CMat {
    CMat::from_fn(spec.len(), spec[0].len(), |i, j| {
        c(spec[i][j][0], spec[i][j][1])
    })
}

/// Parse a map key: a decimal index for finite groups, comma-separated
/// integers for Z^k.
fn parse_elem_key(key: &str, group: &Group) -> Result<Elem, String> {
    if group.is_finite() {
        key.trim()
            .parse::<usize>()
            .map(Elem::Finite)
            .map_err(|_| format!("expected an element index, got `{key}`"))
    } else {
        let coords: Result<Vec<i64>, _> =
            key.split(',').map(|p| p.trim().parse::<i64>()).collect();
        coords
            .map(|v| Elem::vector(&v))
            .map_err(|_| format!("expected comma-separated integers, got `{key}`"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_word_config_parses() {
        let text = r#"{"scenario": "word-identities", "group": {"kind": "cyclic", "n": 4}}"#;
        let config = RunConfig::parse(text).unwrap();
        assert_eq!(config.scenario, Scenario::WordIdentities);
        let group = config.build_group().unwrap();
        assert_eq!(group.order(), Some(4));
        assert_eq!(config.build_alphabet(&group).unwrap().len(), 3);
    }

    #[test]
    fn non_square_matrix_is_rejected_with_field_name() {
        let text = r#"{
            "scenario": "verify-interaction",
            "group": {"kind": "cyclic", "n": 2},
            "algebra": {"blocks": [2]},
            "maps": {"0": [[[1,0],[0,0]]]}
        }"#;
        let err = RunConfig::parse(text).unwrap_err();
        assert!(err.field.contains("maps.0"), "field was {}", err.field);
        assert!(err.message.contains("square"));
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let text = r#"{"scenario": "word-identities", "grop": {"kind": "cyclic", "n": 4}}"#;
        let err = RunConfig::parse(text).unwrap_err();
        assert!(err.message.contains("grop"), "{}", err.message);
    }

    #[test]
    fn vector_map_keys_parse() {
        let group = Group::free_abelian(2);
        let e = parse_elem_key("1,-1", &group).unwrap();
        assert_eq!(e, Elem::vector(&[1, -1]));
        assert!(parse_elem_key("1.5,0", &group).is_err());
    }

    #[test]
    fn config_round_trips_through_json() {
        let text = r#"{
            "scenario": "fock-counterexample",
            "blaschke": [0.5, 0.0],
            "sizes": [32, 64],
            "seed": 11
        }"#;
        let config = RunConfig::parse(text).unwrap();
        let emitted = serde_json::to_string(&config).unwrap();
        let back = RunConfig::parse(&emitted).unwrap();
        assert_eq!(config, back);
    }
}
