//! Audio segmentation and embedding-based labeling of sounds and object states.

mod embed;

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use embed::{normalize_text, EmbeddingProvider, FileProvider, HashingProvider};

use crate::config::AudioConfig;
use crate::log_model::{AudioEvent, AudioPayload, Timestamp};
use crate::math;

#[derive(Debug, Error)]
pub enum PerceptError {
    #[error("audio signal is empty")]
    EmptySignal,
    #[error("embedding has {found} dimensions, expected {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("label set is empty")]
    EmptyLabelSet,
    #[error("embedding must have non-zero norm")]
    ZeroEmbedding,
    #[error("no embedding stored for {0:?}")]
    Missing(String),
    #[error("provider cannot embed audio clips")]
    Unsupported,
    #[error("i/o error on {path}: {reason}")]
    Io { path: String, reason: String },
}

/// Unit-norm feature vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Embedding(Vec<f64>);

impl Embedding {
    pub fn new(values: Vec<f64>) -> Result<Embedding, PerceptError> {
        let norm = math::norm_n(&values);
        if norm == 0.0 || !norm.is_finite() {
            return Err(PerceptError::ZeroEmbedding);
        }
        Ok(Embedding(values.into_iter().map(|v| v / norm).collect()))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

impl TryFrom<Vec<f64>> for Embedding {
    type Error = PerceptError;
    fn try_from(v: Vec<f64>) -> Result<Self, Self::Error> {
        Embedding::new(v)
    }
}

impl From<Embedding> for Vec<f64> {
    fn from(e: Embedding) -> Self {
        e.0
    }
}

/// Candidate labels with their text embeddings.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelSet {
    labels: Vec<(String, Embedding)>,
}

impl LabelSet {
    pub fn new(labels: Vec<(String, Embedding)>) -> Result<LabelSet, PerceptError> {
        let Some(dim) = labels.first().map(|(_, e)| e.dim()) else {
            return Err(PerceptError::EmptyLabelSet);
        };
        if let Some((_, e)) = labels.iter().find(|(_, e)| e.dim() != dim) {
            return Err(PerceptError::DimensionMismatch {
                expected: dim,
                found: e.dim(),
            });
        }
        Ok(LabelSet { labels })
    }

    pub fn from_texts<S: AsRef<str>>(
        texts: &[S],
        provider: &dyn EmbeddingProvider,
    ) -> Result<LabelSet, PerceptError> {
        let labels = texts
            .iter()
            .map(|t| Ok((t.as_ref().to_string(), provider.embed_text(t.as_ref())?)))
            .collect::<Result<Vec<_>, PerceptError>>()?;
        LabelSet::new(labels)
    }

    pub fn dim(&self) -> usize {
        self.labels[0].1.dim()
    }

    pub fn labels(&self) -> &[(String, Embedding)] {
        &self.labels
    }
}

/// Highest-cosine label; ties go to the earlier label.
pub fn classify(e: &[f64], labels: &LabelSet) -> Result<(String, f64), PerceptError> {
    if e.len() != labels.dim() {
        return Err(PerceptError::DimensionMismatch {
            expected: labels.dim(),
            found: e.len(),
        });
    }
    let mut best: Option<(&str, f64)> = None;
    for (text, emb) in &labels.labels {
        let score = math::cosine(e, emb.values());
        if best.is_none_or(|(_, s)| score > s) {
            best = Some((text, score));
        }
    }
    let (text, score) = best.expect("label set is non-empty");
    Ok((text.to_string(), score))
}

pub fn classify_object_state(feature: &[f64], states: &LabelSet) -> Result<String, PerceptError> {
    classify(feature, states).map(|(label, _)| label)
}

/// Segments (start, end) in seconds where windowed RMS reaches `epsilon`.
///
/// Each run of loud windows spans its first to last window center, extended
/// to the signal edge when the run touches it. Runs shorter than `min_len`
/// are dropped.
pub fn segment_audio(samples: &[f32], rate: u32, cfg: &AudioConfig) -> Result<Vec<(f64, f64)>, PerceptError> {
    if samples.is_empty() || rate == 0 {
        return Err(PerceptError::EmptySignal);
    }
    let rate_f = rate as f64;
    let duration = samples.len() as f64 / rate_f;
    let win = ((cfg.window_secs * rate_f).round() as usize).clamp(1, samples.len());
    let hop = ((cfg.hop_secs * rate_f).round() as usize).max(1);
    let starts: Vec<usize> = (0..)
        .map(|i| i * hop)
        .take_while(|s| s + win <= samples.len())
        .collect();
    let loud: Vec<bool> = starts
        .iter()
        .map(|&s| {
            let w = &samples[s..s + win];
            let mean_sq = w.iter().map(|x| (*x as f64).powi(2)).sum::<f64>() / win as f64;
            mean_sq.sqrt() >= cfg.epsilon
        })
        .collect();
    let center = |i: usize| (starts[i] as f64 + win as f64 / 2.0) / rate_f;
    let mut out = Vec::new();
    let mut i = 0;
    while i < loud.len() {
        if !loud[i] {
            i += 1;
            continue;
        }
        let first = i;
        while i + 1 < loud.len() && loud[i + 1] {
            i += 1;
        }
        let start = if first == 0 { 0.0 } else { center(first) };
        let end = if i == loud.len() - 1 { duration } else { center(i) };
        if end - start >= cfg.min_len_secs {
            out.push((start, end));
        }
        i += 1;
    }
    Ok(out)
}

/// An audio event with its resolved label.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AudioLabel {
    pub start: Timestamp,
    pub end: Timestamp,
    pub label: String,
}

/// Labeled events pass through; embedded events are classified. Sorted by time.
pub fn summarize_audio<'a>(
    events: impl IntoIterator<Item = &'a AudioEvent>,
    labels: Option<&LabelSet>,
) -> Result<Vec<AudioLabel>, PerceptError> {
    let mut out = Vec::new();
    for event in events {
        let label = match &event.payload {
            AudioPayload::Label { label } => label.clone(),
            AudioPayload::Embedding { embedding } => {
                classify(embedding, labels.ok_or(PerceptError::EmptyLabelSet)?)?.0
            }
        };
        out.push(AudioLabel {
            start: event.start,
            end: event.end,
            label,
        });
    }
    out.sort();
    Ok(out)
}

/// Mono samples and rate from a WAV file (integer PCM is scaled to [-1, 1];
/// multi-channel audio is averaged).
pub fn read_wav(path: &Path) -> Result<(Vec<f32>, u32), PerceptError> {
    let io = |e: hound::Error| PerceptError::Io {
        path: path.display().to_string(),
        reason: e.to_string(),
    };
    let mut reader = hound::WavReader::open(path).map_err(io)?;
    let spec = reader.spec();
    let interleaved: Vec<f32> = match spec.sample_format {
        hound::SampleFormat::Float => reader.samples::<f32>().collect::<Result<_, _>>().map_err(io)?,
        hound::SampleFormat::Int => {
            let scale = (1i64 << (spec.bits_per_sample - 1)) as f32;
            reader
                .samples::<i32>()
                .map(|s| s.map(|v| v as f32 / scale))
                .collect::<Result<_, _>>()
                .map_err(io)?
        }
    };
    let channels = spec.channels.max(1) as usize;
    let mono = interleaved
        .chunks(channels)
        .map(|c| c.iter().sum::<f32>() / c.len() as f32)
        .collect();
    Ok((mono, spec.sample_rate))
}

/// Raw little-endian f32 samples.
pub fn read_raw_f32(path: &Path) -> Result<Vec<f32>, PerceptError> {
    let bytes = std::fs::read(path).map_err(|e| PerceptError::Io {
        path: path.display().to_string(),
        reason: e.to_string(),
    })?;
    Ok(bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect())
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    fn unit(v: &[f64]) -> Embedding {
        Embedding::new(v.to_vec()).unwrap()
    }

    fn set(items: &[(&str, &[f64])]) -> LabelSet {
        LabelSet::new(items.iter().map(|(t, v)| (t.to_string(), unit(v))).collect()).unwrap()
    }

    #[test]
    fn silence_has_no_segments() {
        let s = vec![0.0f32; 16_000];
        assert!(segment_audio(&s, 16_000, &AudioConfig::default()).unwrap().is_empty());
        assert!(matches!(
            segment_audio(&[], 16_000, &AudioConfig::default()),
            Err(PerceptError::EmptySignal)
        ));
    }

    #[test]
    fn constant_signal_is_one_full_segment() {
        let s = vec![1.0f32; 8_000];
        let cfg = AudioConfig {
            epsilon: 0.5,
            ..AudioConfig::default()
        };
        assert_eq!(segment_audio(&s, 8_000, &cfg).unwrap(), vec![(0.0, 1.0)]);
    }

    #[test]
    fn tone_between_silences() {
        let rate = 16_000u32;
        let mut s = vec![0.0f32; rate as usize];
        s.extend((0..rate).map(|i| 0.5 * (i as f32 * 0.3).sin()));
        s.extend(vec![0.0f32; rate as usize]);
        let segs = segment_audio(&s, rate, &AudioConfig::default()).unwrap();
        assert_eq!(segs.len(), 1);
        let (a, b) = segs[0];
        assert!((a - 1.0).abs() <= 0.025 + 1e-9, "{a}");
        assert!((b - 2.0).abs() <= 0.025 + 1e-9, "{b}");
    }

    #[test]
    fn short_blips_are_dropped() {
        let rate = 1_000u32;
        let mut s = vec![0.0f32; 2_000];
        for x in &mut s[500..560] {
            *x = 1.0;
        }
        assert!(segment_audio(&s, rate, &AudioConfig::default()).unwrap().is_empty());
    }

    #[test]
    fn self_similarity_and_negation() {
        let labels = set(&[("water runs in sink", &[1.0, 0.0, 0.0]), ("something drops", &[0.0, 1.0, 0.0])]);
        assert_eq!(classify(&[1.0, 0.0, 0.0], &labels).unwrap(), ("water runs in sink".into(), 1.0));
        let two = set(&[("a", &[1.0, 0.0]), ("b", &[0.0, 1.0])]);
        assert_eq!(classify(&[-1.0, 0.0], &two).unwrap().0, "b");
        assert!(matches!(classify(&[1.0], &two), Err(PerceptError::DimensionMismatch { .. })));
    }

    #[test]
    fn ties_go_to_first_label() {
        let labels = set(&[("x", &[1.0, 1.0]), ("y", &[1.0, 1.0])]);
        assert_eq!(classify(&[1.0, 1.0], &labels).unwrap().0, "x");
    }

    #[test]
    fn object_state_labels() {
        let states = set(&[("door open", &[0.9, 0.1]), ("door closed", &[0.1, 0.9])]);
        assert_eq!(classify_object_state(&[0.7, 0.3], &states).unwrap(), "door open");
    }

    #[test]
    fn labeled_and_embedded_events_merge_sorted() {
        let labels = set(&[("water runs in sink", &[1.0, 0.0]), ("something drops", &[0.0, 1.0])]);
        let t = Timestamp::from_secs;
        let events = vec![
            AudioEvent::labeled(t(36), t(36), "something drops"),
            AudioEvent {
                start: t(28),
                end: t(30),
                payload: AudioPayload::Embedding {
                    embedding: vec![1.0, 0.0],
                },
            },
        ];
        let out = summarize_audio(&events, Some(&labels)).unwrap();
        assert_eq!(
            out,
            vec![
                AudioLabel {
                    start: t(28),
                    end: t(30),
                    label: "water runs in sink".into()
                },
                AudioLabel {
                    start: t(36),
                    end: t(36),
                    label: "something drops".into()
                },
            ]
        );
        assert!(summarize_audio(&[], None).unwrap().is_empty());
    }

    #[test]
    fn wav_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.wav");
        let spec = hound::WavSpec {
            channels: 1,
            sample_rate: 8_000,
            bits_per_sample: 16,
            sample_format: hound::SampleFormat::Int,
        };
        let mut w = hound::WavWriter::create(&path, spec).unwrap();
        for _ in 0..100 {
            w.write_sample(16_384i16).unwrap();
        }
        w.finalize().unwrap();
        let (s, rate) = read_wav(&path).unwrap();
        assert_eq!(rate, 8_000);
        assert_eq!(s.len(), 100);
        assert!((s[0] - 0.5).abs() < 1e-6);
    }

    fn brute_argmax(e: &[f64], labels: &[Vec<f64>]) -> usize {
        let mut best = 0;
        let mut best_score = f64::NEG_INFINITY;
        for (i, l) in labels.iter().enumerate() {
            let dot: f64 = e.iter().zip(l).map(|(a, b)| a * b).sum();
            let n = e.iter().map(|v| v * v).sum::<f64>().sqrt() * l.iter().map(|v| v * v).sum::<f64>().sqrt();
            if dot / n > best_score {
                best_score = dot / n;
                best = i;
            }
        }
        best
    }

    proptest! {
        #[test]
        fn matches_exhaustive_scan(
            labels in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 8), 20),
            e in prop::collection::vec(-1.0f64..1.0, 8),
            scale in 0.01f64..100.0,
        ) {
            prop_assume!(labels.iter().all(|l| l.iter().any(|v| v.abs() > 1e-3)));
            prop_assume!(e.iter().any(|v| v.abs() > 1e-3));
            let set = LabelSet::new(labels.iter().enumerate()
                .map(|(i, l)| (format!("label {i}"), Embedding::new(l.clone()).unwrap()))
                .collect()).unwrap();
            let (label, score) = classify(&e, &set).unwrap();
            prop_assert_eq!(&label, &format!("label {}", brute_argmax(&e, &labels)));
            prop_assert!((-1.0..=1.0).contains(&score));
            let scaled: Vec<f64> = e.iter().map(|v| v * scale).collect();
            prop_assert_eq!(classify(&scaled, &set).unwrap().0, label);
        }

        #[test]
        fn segments_are_disjoint_and_ordered(
            amps in prop::collection::vec(prop::sample::select(vec![0.0f32, 0.01, 0.3]), 1..40),
        ) {
            // Each amplitude holds for 100 ms at 1 kHz.
            let s: Vec<f32> = amps.iter().flat_map(|a| std::iter::repeat_n(*a, 100)).collect();
            let segs = segment_audio(&s, 1_000, &AudioConfig::default()).unwrap();
            let dur = s.len() as f64 / 1_000.0;
            for (a, b) in &segs {
                prop_assert!(0.0 <= *a && a < b && *b <= dur);
            }
            for w in segs.windows(2) {
                prop_assert!(w[0].1 < w[1].0);
            }
        }
    }
}
