//! Emotion vocabularies.
//!
//! Two distinct label sets exist per frame: the stimulus a subject was shown
//! ([`Stimulus`], ten film-clip categories) and the emotion the annotation
//! software detected on the face ([`Emotion`], six categories). Only the
//! detected emotion is used as ground truth.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Evoked (detected) emotion. Declaration order is the canonical class order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Emotion {
    Anger,
    Disgust,
    Sadness,
    Neutral,
    Surprise,
    Happiness,
}

impl Emotion {
    pub const ALL: [Emotion; 6] = [
        Emotion::Anger,
        Emotion::Disgust,
        Emotion::Sadness,
        Emotion::Neutral,
        Emotion::Surprise,
        Emotion::Happiness,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Emotion::Anger => "anger",
            Emotion::Disgust => "disgust",
            Emotion::Sadness => "sadness",
            Emotion::Neutral => "neutral",
            Emotion::Surprise => "surprise",
            Emotion::Happiness => "happiness",
        }
    }

    /// Stimulus clip that most directly targets this emotion. Used by the
    /// synthetic generator to name clips.
    pub fn typical_stimulus(self) -> Stimulus {
        match self {
            Emotion::Anger => Stimulus::Anger,
            Emotion::Disgust => Stimulus::Disgust,
            Emotion::Sadness => Stimulus::Sadness,
            Emotion::Neutral => Stimulus::Neutral,
            Emotion::Surprise => Stimulus::Surprise,
            Emotion::Happiness => Stimulus::Amusement,
        }
    }
}

impl fmt::Display for Emotion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown label `{0}`")]
pub struct UnknownLabel(pub String);

impl FromStr for Emotion {
    type Err = UnknownLabel;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim().to_ascii_lowercase();
        Emotion::ALL
            .into_iter()
            .find(|e| e.as_str() == t)
            .ok_or_else(|| UnknownLabel(s.to_string()))
    }
}

/// Stimulus (prompt) emotion of the film clip being watched.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stimulus {
    Amusement,
    Anger,
    Awe,
    Disgust,
    Enthusiasm,
    Fear,
    Liking,
    Neutral,
    Sadness,
    Surprise,
}

impl Stimulus {
    pub const ALL: [Stimulus; 10] = [
        Stimulus::Amusement,
        Stimulus::Anger,
        Stimulus::Awe,
        Stimulus::Disgust,
        Stimulus::Enthusiasm,
        Stimulus::Fear,
        Stimulus::Liking,
        Stimulus::Neutral,
        Stimulus::Sadness,
        Stimulus::Surprise,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Stimulus::Amusement => "amusement",
            Stimulus::Anger => "anger",
            Stimulus::Awe => "awe",
            Stimulus::Disgust => "disgust",
            Stimulus::Enthusiasm => "enthusiasm",
            Stimulus::Fear => "fear",
            Stimulus::Liking => "liking",
            Stimulus::Neutral => "neutral",
            Stimulus::Sadness => "sadness",
            Stimulus::Surprise => "surprise",
        }
    }
}

impl fmt::Display for Stimulus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Stimulus {
    type Err = UnknownLabel;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim().to_ascii_lowercase();
        Stimulus::ALL
            .into_iter()
            .find(|e| e.as_str() == t)
            .ok_or_else(|| UnknownLabel(s.to_string()))
    }
}
