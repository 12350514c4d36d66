//! Versioned output documents. Every file carries its schema, the tool
//! version, the seed and a hash of the effective configuration.

use serde::Serialize;
use sha2::{Digest, Sha256};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub schema: String,
    pub version: &'static str,
    pub seed: u64,
    pub config_sha256: String,
}

impl Provenance {
    /// `inputs` are hashed in order; they must fully determine the run.
    pub fn new(schema: &str, seed: u64, inputs: &[&[u8]]) -> Self {
        let mut hasher = Sha256::new();
        for part in inputs {
            hasher.update((part.len() as u64).to_le_bytes());
            hasher.update(part);
        }
        Self {
            schema: schema.to_string(),
            version: VERSION,
            seed,
            config_sha256: format!("{:x}", hasher.finalize()),
        }
    }

    /// Comment line that precedes the CSV header.
    pub fn csv_comment(&self) -> String {
        format!(
            "# schema={} version={} seed={} config_sha256={}\n",
            self.schema, self.version, self.seed, self.config_sha256
        )
    }
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    #[serde(flatten)]
    provenance: &'a Provenance,
    result: &'a T,
}

pub fn json_document<T: Serialize>(provenance: &Provenance, result: &T) -> Result<String, serde_json::Error> {
    let mut text = serde_json::to_string_pretty(&Envelope { provenance, result })?;
    text.push('\n');
    Ok(text)
}

/// Bounds can be negative for large δN; displays clamp at 0, data files
/// keep the raw value.
pub fn display_bound(value: f64) -> String {
    format!("{:.9}", value.max(0.0))
}
