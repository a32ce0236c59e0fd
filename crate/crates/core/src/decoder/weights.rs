use std::fmt;
use std::fs;
use std::path::Path;

use crate::corpus::read_lines;
use crate::error::{Error, Result};
use crate::num::Scalar;

pub const NUM_FEATURES: usize = 7;

pub const FEATURE_NAMES: [&str; NUM_FEATURES] = [
    "phi_fwd",
    "phi_bwd",
    "lex_fwd",
    "lex_bwd",
    "lm",
    "word_penalty",
    "distortion",
];

pub const F_LM: usize = 4;
pub const F_WORD_PENALTY: usize = 5;
pub const F_DISTORTION: usize = 6;

pub type FeatureVector<S> = [S; NUM_FEATURES];

pub fn dot<S: Scalar>(a: &FeatureVector<S>, b: &FeatureVector<S>) -> S {
    a.iter().zip(b).fold(S::zero(), |acc, (&x, &y)| acc + x * y)
}

/// Log-linear weights, one per feature in [`FEATURE_NAMES`] order.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelWeights<S = f64>(pub FeatureVector<S>);

impl<S: Scalar> Default for ModelWeights<S> {
    fn default() -> Self {
        Self::uniform()
    }
}

impl<S: Scalar> ModelWeights<S> {
    /// Every weight equal to one.
    pub fn uniform() -> Self {
        ModelWeights([S::one(); NUM_FEATURES])
    }

    pub fn from_f64(w: [f64; NUM_FEATURES]) -> Self {
        ModelWeights(w.map(S::lit))
    }

    pub fn score(&self, features: &FeatureVector<S>) -> S {
        dot(&self.0, features)
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|w| w.is_finite())
    }

    pub fn get(&self, name: &str) -> Option<S> {
        FEATURE_NAMES.iter().position(|n| *n == name).map(|k| self.0[k])
    }

    /// Parses `name value` lines; every feature must appear exactly once.
    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let mut w: [Option<S>; NUM_FEATURES] = [None; NUM_FEATURES];
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (name, value) = line
                .split_once(char::is_whitespace)
                .ok_or_else(|| Error::parse(origin, n + 1, "expected 'name value'"))?;
            let k = FEATURE_NAMES
                .iter()
                .position(|f| *f == name)
                .ok_or_else(|| Error::parse(origin, n + 1, format!("unknown feature '{name}'")))?;
            let v: f64 = value
                .trim()
                .parse()
                .map_err(|_| Error::parse(origin, n + 1, "bad weight value"))?;
            if !v.is_finite() {
                return Err(Error::parse(origin, n + 1, "weight must be finite"));
            }
            if w[k].replace(S::lit(v)).is_some() {
                return Err(Error::parse(origin, n + 1, format!("duplicate feature '{name}'")));
            }
        }
        let mut out = [S::zero(); NUM_FEATURES];
        for (k, v) in w.iter().enumerate() {
            out[k] = v.ok_or_else(|| {
                Error::parse(origin, 0, format!("missing feature '{}'", FEATURE_NAMES[k]))
            })?;
        }
        Ok(ModelWeights(out))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&read_lines(path)?.join("\n"), path)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_string()).map_err(|e| Error::file(path, e))
    }
}

impl<S: Scalar> fmt::Display for ModelWeights<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (name, w) in FEATURE_NAMES.iter().zip(&self.0) {
            writeln!(f, "{name} {}", w.as_f64())?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_file_round_trip() {
        let w = ModelWeights::<f64>::from_f64([0.1, -0.25, 1e-9, 3.0, 0.7, -1.5, 0.0]);
        let back = ModelWeights::parse(&w.to_string(), Path::new("w")).unwrap();
        assert_eq!(back, w);
        assert_eq!(w.get("lm"), Some(0.7));
    }

    #[test]
    fn weights_file_errors() {
        let p = Path::new("w");
        assert!(ModelWeights::<f64>::parse("lm 1\n", p).is_err());
        let mut text = ModelWeights::<f64>::uniform().to_string();
        text.push_str("lm 2\n");
        assert!(ModelWeights::<f64>::parse(&text, p).is_err());
        assert!(ModelWeights::<f64>::parse("bogus 1\n", p).is_err());
    }
}
