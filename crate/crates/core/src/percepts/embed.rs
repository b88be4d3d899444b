//! Embedding providers: a deterministic text hasher and a file-backed store.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use super::{Embedding, PerceptError};

pub trait EmbeddingProvider {
    fn embed_text(&self, text: &str) -> Result<Embedding, PerceptError>;

    fn embed_audio_clip(&self, _samples: &[f32], _rate: u32) -> Result<Embedding, PerceptError> {
        Err(PerceptError::Unsupported)
    }
}

const ORDINALS: [(&str, &str); 8] = [
    ("first", "1"),
    ("second", "2"),
    ("third", "3"),
    ("fourth", "4"),
    ("fifth", "5"),
    ("sixth", "6"),
    ("seventh", "7"),
    ("eighth", "8"),
];

const PHRASES: [(&str, &str); 8] = [
    ("turn on", "toggle on"),
    ("turn off", "toggle off"),
    ("switch on", "toggle on"),
    ("switch off", "toggle off"),
    ("pickup", "pick up"),
    ("put into", "put in"),
    ("put onto", "put on"),
    ("place", "put"),
];

/// Lowercases, strips punctuation and maps ordinals and verb synonyms onto
/// one spelling, so "turn on the second stove burner" and
/// "toggle_on (stoveburner-2)" share most of their features.
pub fn normalize_text(text: &str) -> String {
    let cleaned: String = text
        .to_lowercase()
        .chars()
        .map(|c| if c.is_alphanumeric() { c } else { ' ' })
        .collect();
    let words: Vec<&str> = cleaned
        .split_whitespace()
        .filter(|w| !matches!(*w, "the" | "a" | "an"))
        .map(|w| {
            ORDINALS
                .iter()
                .find(|(name, _)| *name == w)
                .map(|(_, n)| *n)
                .unwrap_or(w)
        })
        .collect();
    let mut joined = format!(" {} ", words.join(" "));
    for (from, to) in PHRASES {
        joined = joined.replace(&format!(" {from} "), &format!(" {to} "));
    }
    joined.trim().to_string()
}

/// Signed feature hashing over word unigrams and character trigrams of the
/// normalized text. Stands in for a sentence encoder.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HashingProvider {
    pub dim: usize,
}

impl Default for HashingProvider {
    fn default() -> Self {
        HashingProvider { dim: 512 }
    }
}

impl HashingProvider {
    fn bump(&self, v: &mut [f64], feature: &str, weight: f64) {
        let digest = Sha256::digest(feature.as_bytes());
        let h = u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"));
        let sign = if h >> 63 == 0 { 1.0 } else { -1.0 };
        v[(h % self.dim as u64) as usize] += sign * weight;
    }
}

impl EmbeddingProvider for HashingProvider {
    fn embed_text(&self, text: &str) -> Result<Embedding, PerceptError> {
        let norm = normalize_text(text);
        let mut v = vec![0.0; self.dim];
        for word in norm.split_whitespace() {
            self.bump(&mut v, &format!("w:{word}"), 1.0);
        }
        let chars: Vec<char> = format!(" {} ", norm.replace(' ', "")).chars().collect();
        for tri in chars.windows(3) {
            self.bump(&mut v, &tri.iter().collect::<String>(), 0.5);
        }
        Embedding::new(v)
    }
}

/// Store key for a text: first 16 hex digits of its SHA-256.
pub fn store_key(text: &str) -> String {
    hex::encode(&Sha256::digest(text.as_bytes())[..8])
}

/// Precomputed vectors under `<root>/embeddings/`: `index.json` maps key to
/// `vec/<key>.bin`, a little-endian f32 array.
#[derive(Debug, Clone)]
pub struct FileProvider {
    vectors: BTreeMap<String, Embedding>,
}

impl FileProvider {
    pub fn open(root: &Path) -> Result<FileProvider, PerceptError> {
        let base = root.join("embeddings");
        let index_path = base.join("index.json");
        let text = fs::read_to_string(&index_path).map_err(|e| io(&index_path, e))?;
        let index: BTreeMap<String, String> = serde_json::from_str(&text).map_err(|e| PerceptError::Io {
            path: index_path.display().to_string(),
            reason: e.to_string(),
        })?;
        let mut vectors = BTreeMap::new();
        for (key, rel) in index {
            let path = base.join(&rel);
            let values = super::read_raw_f32(&path)?;
            vectors.insert(key, Embedding::new(values.into_iter().map(f64::from).collect())?);
        }
        Ok(FileProvider { vectors })
    }

    /// Embeds `texts` with `source` and writes them as a store under `root`.
    pub fn write_store<S: AsRef<str>>(
        root: &Path,
        source: &dyn EmbeddingProvider,
        texts: &[S],
    ) -> Result<PathBuf, PerceptError> {
        let base = root.join("embeddings");
        let vec_dir = base.join("vec");
        fs::create_dir_all(&vec_dir).map_err(|e| io(&vec_dir, e))?;
        let mut index = BTreeMap::new();
        for text in texts {
            let key = store_key(text.as_ref());
            let rel = format!("vec/{key}.bin");
            let bytes: Vec<u8> = source
                .embed_text(text.as_ref())?
                .values()
                .iter()
                .flat_map(|v| (*v as f32).to_le_bytes())
                .collect();
            let path = base.join(&rel);
            fs::write(&path, bytes).map_err(|e| io(&path, e))?;
            index.insert(key, rel);
        }
        let index_path = base.join("index.json");
        let json = serde_json::to_string_pretty(&index).expect("string map serializes");
        fs::write(&index_path, json).map_err(|e| io(&index_path, e))?;
        Ok(base)
    }
}

fn io(path: &Path, e: std::io::Error) -> PerceptError {
    PerceptError::Io {
        path: path.display().to_string(),
        reason: e.to_string(),
    }
}

impl EmbeddingProvider for FileProvider {
    fn embed_text(&self, text: &str) -> Result<Embedding, PerceptError> {
        self.vectors
            .get(&store_key(text))
            .cloned()
            .ok_or_else(|| PerceptError::Missing(text.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math;

    #[test]
    fn normalization_unifies_spellings() {
        assert_eq!(normalize_text("Turn on the second stove burner."), "toggle on 2 stove burner");
        assert_eq!(normalize_text("toggle_on (stoveburner-2)"), "toggle on stoveburner 2");
        assert_eq!(normalize_text("Put the pot onto the counter"), "put pot onto counter");
    }

    #[test]
    fn hashing_is_deterministic_and_discriminative() {
        let p = HashingProvider::default();
        let a = p.embed_text("turn on the second stove burner").unwrap();
        let b = p.embed_text("toggle_on (stoveburner-2)").unwrap();
        let c = p.embed_text("put potato in fridge").unwrap();
        assert_eq!(a, p.embed_text("turn on the second stove burner").unwrap());
        let ab = math::cosine(a.values(), b.values());
        let ac = math::cosine(a.values(), c.values());
        assert!(ab > 0.5, "{ab}");
        assert!(ab > ac + 0.3, "{ab} vs {ac}");
        assert!(p.embed_text("").is_err());
    }

    #[test]
    fn file_store_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = HashingProvider { dim: 32 };
        let texts = ["water runs in sink", "something drops"];
        FileProvider::write_store(dir.path(), &p, &texts).unwrap();
        let store = FileProvider::open(dir.path()).unwrap();
        for t in texts {
            let got = store.embed_text(t).unwrap();
            let want = p.embed_text(t).unwrap();
            assert!(math::cosine(got.values(), want.values()) > 1.0 - 1e-6);
        }
        assert!(matches!(store.embed_text("unknown"), Err(PerceptError::Missing(_))));
        assert!(matches!(p.embed_audio_clip(&[0.0], 1), Err(PerceptError::Unsupported)));
    }
}
