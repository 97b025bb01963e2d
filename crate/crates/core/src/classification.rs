//! One-class outlier classification over a sliding window of normal values,
//! plus confidence-weighted majority voting.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::model::{Message, Opinion, Vote, EVENT_TYPE};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifierParams {
    pub window_size: usize,
    pub boundary_quantile: f64,
    pub confidence_slope: f64,
    pub min_training_points: usize,
}

impl Default for ClassifierParams {
    fn default() -> Self {
        ClassifierParams {
            window_size: 100,
            boundary_quantile: 0.95,
            confidence_slope: 2.0,
            min_training_points: 10,
        }
    }
}

impl ClassifierParams {
    pub fn validate(&self) -> Result<()> {
        if self.min_training_points == 0 || self.window_size < self.min_training_points {
            return Err(Error::config(format!(
                "need 0 < min_training_points ({}) <= window_size ({})",
                self.min_training_points, self.window_size
            )));
        }
        if !(self.boundary_quantile > 0.5 && self.boundary_quantile < 1.0) {
            return Err(Error::config(format!(
                "boundary_quantile must be in (0.5,1), got {}",
                self.boundary_quantile
            )));
        }
        if !(self.confidence_slope > 0.0 && self.confidence_slope.is_finite()) {
            return Err(Error::config("confidence_slope must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    Event,
    Normal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifierVerdict {
    pub label: Label,
    pub confidence: f64,
}

impl ClassifierVerdict {
    pub fn new(label: Label, confidence: f64) -> Self {
        ClassifierVerdict { label, confidence }
    }

    pub fn is_event(&self) -> bool {
        self.label == Label::Event
    }
}

/// Train/classify contract an agent relies on. Implementations only ever
/// learn from values labeled normal.
pub trait OneClassClassifier: Send {
    fn train(&mut self, value: f64, label: Label);
    fn classify(&self, value: f64) -> ClassifierVerdict;
    /// True once the classifier produces informative verdicts.
    fn is_trained(&self) -> bool;
}

/// Distance-to-center classifier with an empirical quantile boundary.
///
/// Values are scored by their absolute z-score against the window. The
/// boundary radius is the `2q - 1` empirical quantile of the window's own
/// scores, which for symmetric data equals the one-sided normal quantile
/// `z_q` (1.645 at q = 0.95); windows too short for a stable tail estimate
/// use `z_q` directly.
#[derive(Debug, Clone, PartialEq)]
pub struct OneClassState {
    params: ClassifierParams,
    window: VecDeque<f64>,
    mean: f64,
    stddev: f64,
    radius: f64,
}

impl OneClassState {
    pub fn new(params: ClassifierParams) -> Self {
        OneClassState {
            params,
            window: VecDeque::with_capacity(params.window_size),
            mean: 0.0,
            stddev: 0.0,
            radius: 0.0,
        }
    }

    pub fn params(&self) -> &ClassifierParams {
        &self.params
    }

    pub fn window(&self) -> &VecDeque<f64> {
        &self.window
    }

    pub fn len(&self) -> usize {
        self.window.len()
    }

    pub fn is_empty(&self) -> bool {
        self.window.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn stddev(&self) -> f64 {
        self.stddev
    }

    /// Boundary radius in z-score units.
    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Standardized distance from the window center.
    pub fn score(&self, value: f64) -> f64 {
        let d = (value - self.mean).abs();
        if self.stddev > 0.0 {
            d / self.stddev
        } else if d == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    }

    fn refresh(&mut self) {
        let n = self.window.len();
        if n == 0 {
            self.mean = 0.0;
            self.stddev = 0.0;
            self.radius = 0.0;
            return;
        }
        self.mean = self.window.iter().sum::<f64>() / n as f64;
        self.stddev = if n > 1 {
            let ss: f64 = self.window.iter().map(|v| (v - self.mean).powi(2)).sum();
            (ss / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        if self.stddev == 0.0 {
            self.radius = 0.0;
            return;
        }
        let level = 2.0 * self.params.boundary_quantile - 1.0;
        self.radius = if (n as f64) * (1.0 - level) >= 2.0 {
            let mut scores: Vec<f64> = self.window.iter().map(|&v| self.score(v)).collect();
            scores.sort_by(f64::total_cmp);
            empirical_quantile(&scores, level)
        } else {
            gaussian_quantile(self.params.boundary_quantile)
        };
    }
}

impl OneClassClassifier for OneClassState {
    fn train(&mut self, value: f64, label: Label) {
        if label == Label::Event {
            return;
        }
        if self.window.len() == self.params.window_size {
            self.window.pop_front();
        }
        self.window.push_back(value);
        self.refresh();
    }

    fn classify(&self, value: f64) -> ClassifierVerdict {
        if !self.is_trained() {
            return ClassifierVerdict::new(Label::Normal, 0.0);
        }
        let score = self.score(value);
        let label = if score > self.radius { Label::Event } else { Label::Normal };
        let confidence = if score.is_infinite() {
            1.0
        } else {
            1.0 - (-self.params.confidence_slope * (score - self.radius).abs()).exp()
        };
        ClassifierVerdict::new(label, confidence)
    }

    fn is_trained(&self) -> bool {
        self.window.len() >= self.params.min_training_points
    }
}

/// Linear-interpolation quantile of sorted data.
fn empirical_quantile(sorted: &[f64], level: f64) -> f64 {
    let pos = level * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

pub(crate) fn gaussian_quantile(p: f64) -> f64 {
    Normal::standard().inverse_cdf(p)
}

/// Confidence-weighted majority vote between the agent's own verdict and
/// its neighbors' opinions. Without any weighted opinion the own verdict
/// stands unchanged; ties keep the own label.
pub fn aggregate_votes(own: ClassifierVerdict, opinions: &[Opinion]) -> ClassifierVerdict {
    let own_event = if own.is_event() { own.confidence } else { 0.0 };
    let own_normal = if own.is_event() { 0.0 } else { own.confidence };
    let (event, normal) = opinions.iter().fold((own_event, own_normal), |(e, n), o| match o.verdict {
        Vote::True => (e + o.confidence, n),
        Vote::False => (e, n + o.confidence),
        Vote::Unknown => (e, n),
    });
    let total = event + normal;
    if total <= 0.0 || opinions.iter().all(|o| o.weight() <= 0.0) {
        return own;
    }
    let label = if event > normal {
        Label::Event
    } else if normal > event {
        Label::Normal
    } else {
        own.label
    };
    let winning = if label == Label::Event { event } else { normal };
    ClassifierVerdict::new(label, winning / total)
}

/// A neighbor's answer to an opinion request. Requests without a value or
/// without a matching event type cannot be classified and get `Unknown`.
pub fn form_opinion<C: OneClassClassifier + ?Sized>(classifier: &C, request: &Message, unknown_threshold: f64) -> Opinion {
    let unknown = |confidence| Opinion { verdict: Vote::Unknown, confidence };
    let Some(x) = request.value() else {
        return unknown(0.0);
    };
    if request.event_type() != Some(EVENT_TYPE) {
        return unknown(0.0);
    }
    let v = classifier.classify(x);
    if v.confidence < unknown_threshold {
        return unknown(v.confidence);
    }
    let verdict = if v.is_event() { Vote::True } else { Vote::False };
    Opinion { verdict, confidence: v.confidence }
}
