//! Two-layer noisy-OR network representation and the domain types shared by
//! every inference engine.
//!
//! A network has `n_diseases` binary nodes in the first layer and
//! `n_findings` binary nodes in the second. Each finding `i` carries a leak
//! probability and one noisy-OR coefficient `c[i][j]` per disease `j`; a
//! coefficient of exactly 0 encodes "no edge". All parameters live in
//! `[0, 1]` and the coefficient matrix is stored dense, indexed
//! `[finding][disease]`.

use crate::error::{Bn2oError, Result};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

fn check_probability(what: &'static str, value: f64) -> Result<()> {
    if !value.is_finite() || !(0.0..=1.0).contains(&value) {
        return Err(Bn2oError::InvalidProbability { what, value });
    }
    Ok(())
}

/// A full BN2O model: disease priors, finding leaks and the dense
/// coefficient matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bn2oNetwork {
    pub n_diseases: usize,
    pub n_findings: usize,
    /// `p(d_j)` for each disease.
    pub priors: Vec<f64>,
    /// Probability of each finding with every disease absent.
    pub leaks: Vec<f64>,
    /// `coeffs[finding][disease]`: ability of the disease to cause the finding.
    pub coeffs: Vec<Vec<f64>>,
    /// Generator settings carried along by `generate_network` so any file can
    /// be reproduced from its own metadata. Absent for hand-written networks.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<crate::generate::GeneratorConfig>,
}

impl Bn2oNetwork {
    /// Builds and validates a network from its raw parameters.
    pub fn new(priors: Vec<f64>, leaks: Vec<f64>, coeffs: Vec<Vec<f64>>) -> Result<Self> {
        let net = Bn2oNetwork {
            n_diseases: priors.len(),
            n_findings: leaks.len(),
            priors,
            leaks,
            coeffs,
            provenance: None,
        };
        net.validate()?;
        Ok(net)
    }

    /// Checks every invariant: at least one node per layer, matching
    /// dimensions, all parameters in `[0, 1]`.
    pub fn validate(&self) -> Result<()> {
        if self.n_diseases == 0 {
            return Err(Bn2oError::InvalidModel("n_diseases must be >= 1".into()));
        }
        if self.n_findings == 0 {
            return Err(Bn2oError::InvalidModel("n_findings must be >= 1".into()));
        }
        if self.priors.len() != self.n_diseases {
            return Err(Bn2oError::DimensionMismatch {
                what: "priors",
                expected: self.n_diseases,
                got: self.priors.len(),
            });
        }
        if self.leaks.len() != self.n_findings {
            return Err(Bn2oError::DimensionMismatch {
                what: "leaks",
                expected: self.n_findings,
                got: self.leaks.len(),
            });
        }
        if self.coeffs.len() != self.n_findings {
            return Err(Bn2oError::DimensionMismatch {
                what: "coeffs rows",
                expected: self.n_findings,
                got: self.coeffs.len(),
            });
        }
        for p in &self.priors {
            check_probability("prior", *p)?;
        }
        for leak in &self.leaks {
            check_probability("leak", *leak)?;
        }
        for row in &self.coeffs {
            if row.len() != self.n_diseases {
                return Err(Bn2oError::DimensionMismatch {
                    what: "coeffs columns",
                    expected: self.n_diseases,
                    got: row.len(),
                });
            }
            for c in row {
                check_probability("coefficient", *c)?;
            }
        }
        Ok(())
    }

    /// Loads a network from a JSON file and validates it.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Bn2oError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let net: Bn2oNetwork = serde_json::from_str(&text).map_err(|source| Bn2oError::Json {
            path: path.to_path_buf(),
            source,
        })?;
        net.validate()?;
        Ok(net)
    }

    /// Writes the network as pretty JSON, atomically (temp file + rename).
    pub fn save(&self, path: &Path) -> Result<()> {
        write_json_atomic(path, self)
    }

    pub(crate) fn check_finding(&self, finding: usize) -> Result<()> {
        if finding >= self.n_findings {
            return Err(Bn2oError::IndexOutOfRange {
                kind: "finding",
                index: finding,
                len: self.n_findings,
            });
        }
        Ok(())
    }
}

/// One joint configuration of all first-layer (disease) nodes.
///
/// `bits[j]` is `true` when disease `j` is present; the display form writes
/// disease 0 leftmost, e.g. `001011`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DiseaseState {
    pub bits: Vec<bool>,
}

impl DiseaseState {
    pub fn new(bits: Vec<bool>) -> Self {
        DiseaseState { bits }
    }

    /// All-absent configuration for `n` diseases.
    pub fn all_false(n: usize) -> Self {
        DiseaseState { bits: vec![false; n] }
    }

    /// Decodes an integer encoding (bit `j` of `mask` is disease `j`).
    pub fn from_mask(mask: u64, n: usize) -> Self {
        DiseaseState {
            bits: (0..n).map(|j| mask >> j & 1 == 1).collect(),
        }
    }

    /// Integer encoding: disease `j` maps to bit `j`. Requires at most
    /// 64 diseases.
    pub fn to_mask(&self) -> Result<u64> {
        if self.bits.len() > 64 {
            return Err(Bn2oError::CapExceeded {
                what: "disease-state integer encoding",
                size: self.bits.len() as u128,
                cap: 64,
            });
        }
        Ok(self
            .bits
            .iter()
            .enumerate()
            .fold(0u64, |m, (j, &b)| if b { m | 1 << j } else { m }))
    }

    /// Number of diseases present.
    pub fn count_present(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub(crate) fn check_dims(&self, net: &Bn2oNetwork) -> Result<()> {
        if self.bits.len() != net.n_diseases {
            return Err(Bn2oError::DimensionMismatch {
                what: "disease state",
                expected: net.n_diseases,
                got: self.bits.len(),
            });
        }
        Ok(())
    }
}

impl fmt::Display for DiseaseState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for DiseaseState {
    type Err = Bn2oError;

    /// Parses a bitstring like `001011`, disease 0 leftmost.
    fn from_str(s: &str) -> Result<Self> {
        let mut bits = Vec::with_capacity(s.len());
        for ch in s.chars() {
            match ch {
                '0' => bits.push(false),
                '1' => bits.push(true),
                _ => {
                    return Err(Bn2oError::InvalidModel(format!(
                        "invalid disease-state bitstring {s:?}: expected only 0/1"
                    )))
                }
            }
        }
        if bits.is_empty() {
            return Err(Bn2oError::InvalidModel(
                "empty disease-state bitstring".into(),
            ));
        }
        Ok(DiseaseState { bits })
    }
}

impl Serialize for DiseaseState {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for DiseaseState {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(D::Error::custom)
    }
}

/// Observed findings: disjoint sets of positively and negatively
/// instantiated finding indices. Unlisted findings are unobserved.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Evidence {
    #[serde(default)]
    pub positive: Vec<usize>,
    #[serde(default)]
    pub negative: Vec<usize>,
}

impl Evidence {
    /// Builds evidence and rejects overlapping or duplicated indices.
    pub fn new(positive: Vec<usize>, negative: Vec<usize>) -> Result<Self> {
        let ev = Evidence { positive, negative };
        ev.check_disjoint()?;
        Ok(ev)
    }

    /// Evidence with no observed findings.
    pub fn empty() -> Self {
        Evidence::default()
    }

    pub fn is_unobserved(&self) -> bool {
        self.positive.is_empty() && self.negative.is_empty()
    }

    fn check_disjoint(&self) -> Result<()> {
        let mut seen = std::collections::BTreeSet::new();
        for &i in self.positive.iter().chain(self.negative.iter()) {
            if !seen.insert(i) {
                return Err(Bn2oError::InvalidModel(format!(
                    "finding {i} appears more than once in the evidence"
                )));
            }
        }
        Ok(())
    }

    /// Validates disjointness and index bounds against a network.
    pub fn validate_for(&self, net: &Bn2oNetwork) -> Result<()> {
        self.check_disjoint()?;
        for &i in self.positive.iter().chain(self.negative.iter()) {
            net.check_finding(i)?;
        }
        Ok(())
    }

    /// Loads an evidence file (`{"positive": [...], "negative": [...]}`).
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Bn2oError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let ev: Evidence = serde_json::from_str(&text).map_err(|source| Bn2oError::Json {
            path: path.to_path_buf(),
            source,
        })?;
        ev.check_disjoint()?;
        Ok(ev)
    }
}

/// Posterior disease probabilities together with the probability of the
/// evidence that produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Posteriors {
    /// `p(d_k | E)` for each disease.
    pub per_disease: Vec<f64>,
    /// `P(E)` under the model the posteriors were computed from.
    pub evidence_probability: f64,
}

/// Writes any serializable value as pretty JSON via a temp file in the same
/// directory followed by a rename, so readers never observe partial output.
pub(crate) fn write_json_atomic<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|source| Bn2oError::Json {
        path: path.to_path_buf(),
        source,
    })?;
    text.push('\n');
    write_bytes_atomic(path, text.as_bytes())
}

pub(crate) fn write_bytes_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let io_err = |source| Bn2oError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = std::path::PathBuf::from(tmp);
    std::fs::write(&tmp, bytes).map_err(io_err)?;
    std::fs::rename(&tmp, path).map_err(|source| {
        let _ = std::fs::remove_file(&tmp);
        io_err(source)
    })
}
