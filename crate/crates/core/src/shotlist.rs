//! Shot-list planning: prompt construction, enumerated-list parsing, the
//! composition-term rejection filter, and the resample loop.
//!
//! The prompt template is fixed here and nowhere else. It always names the
//! exact list length, uses the wording "photos of the event", and asks the
//! model to describe content rather than composition. An optional priming
//! example is rendered in the same enumerated format as the expected answer.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{LmParams, ModelError, PhotoIdea, Provenance, ShotList};
use crate::providers::{LanguageModel, ProviderError};

/// Default number of ideas per shot list.
pub const DEFAULT_LIST_LEN: usize = 9;

/// Composition terms that reject a whole phrase set.
pub const DEFAULT_REJECTED_TERMS: [&str; 4] = ["close-up", "closeup", "close up", "wide shot"];

pub const DEFAULT_MAX_RETRIES: u32 = 5;

const EVENT_LINE_PREFIX: &str = "Event: ";
const CONTENT_INSTRUCTION: &str = "Describe what each photo shows (the people, objects, and activities), \
focusing on content rather than composition or camera framing.";

#[derive(Debug, Error)]
pub enum ShotListError {
    #[error("invalid prompt spec: {0}")]
    InvalidSpec(String),
    #[error("invalid rejection policy: {0}")]
    InvalidPolicy(String),
    #[error("parsed {got} ideas, expected {expected}")]
    CountMismatch { expected: usize, got: usize },
    #[error("malformed line {line_no}: {line:?}")]
    MalformedLine { line_no: usize, line: String },
    #[error("item ordinals must run 1..n in order; item {position} is numbered {found}")]
    OrdinalOutOfOrder { position: usize, found: usize },
    #[error("gave up after {attempts} attempts; last failure: {last_reason}")]
    RetriesExhausted { attempts: u32, last_reason: String },
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Priming example shown to the model before the real request.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Priming {
    pub example_event_name: String,
    pub example_ideas: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptSpec {
    pub event_name: String,
    pub n: usize,
    pub priming: Option<Priming>,
}

impl PromptSpec {
    pub fn new(event_name: impl Into<String>, n: usize) -> Result<Self, ShotListError> {
        let spec = Self {
            event_name: event_name.into(),
            n,
            priming: None,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_priming(mut self, priming: Priming) -> Result<Self, ShotListError> {
        self.priming = Some(priming);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), ShotListError> {
        if self.n == 0 {
            return Err(ShotListError::InvalidSpec("n must be at least 1".into()));
        }
        if self.event_name.trim().is_empty() {
            return Err(ShotListError::InvalidSpec("event name is empty".into()));
        }
        if self.event_name.contains('\n') {
            return Err(ShotListError::InvalidSpec("event name spans lines".into()));
        }
        if let Some(p) = &self.priming {
            if p.example_ideas.is_empty() {
                return Err(ShotListError::InvalidSpec("priming example has no ideas".into()));
            }
            if p.example_event_name.trim().is_empty() {
                return Err(ShotListError::InvalidSpec("priming event name is empty".into()));
            }
            if p.example_ideas.iter().any(|i| i.trim().is_empty() || i.contains('\n')) {
                return Err(ShotListError::InvalidSpec(
                    "priming ideas must be non-empty single lines".into(),
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RejectionPolicy {
    pub terms: Vec<String>,
    pub max_retries: u32,
}

impl Default for RejectionPolicy {
    fn default() -> Self {
        Self {
            terms: DEFAULT_REJECTED_TERMS.iter().map(|t| t.to_string()).collect(),
            max_retries: DEFAULT_MAX_RETRIES,
        }
    }
}

impl RejectionPolicy {
    pub fn new(terms: Vec<String>, max_retries: u32) -> Result<Self, ShotListError> {
        let policy = Self {
            terms: terms.into_iter().map(|t| t.to_lowercase()).collect(),
            max_retries,
        };
        policy.validate()?;
        Ok(policy)
    }

    pub fn validate(&self) -> Result<(), ShotListError> {
        if self.terms.is_empty() || self.terms.iter().any(|t| t.is_empty()) {
            return Err(ShotListError::InvalidPolicy("terms must be non-empty".into()));
        }
        if self.max_retries == 0 {
            return Err(ShotListError::InvalidPolicy("max_retries must be positive".into()));
        }
        Ok(())
    }
}

fn request_block(event_name: &str, n: usize) -> String {
    format!(
        "{EVENT_LINE_PREFIX}{event_name}\n\
         List {n} photos of the event that a photographer should capture. \
         {CONTENT_INSTRUCTION} \
         Answer with an enumerated list of exactly {n} items, one per line.\n"
    )
}

/// Renders ideas as "1. ...\n2. ...\n".
pub fn render_enumerated<S: AsRef<str>>(ideas: &[S]) -> String {
    ideas
        .iter()
        .enumerate()
        .map(|(i, idea)| format!("{}. {}\n", i + 1, idea.as_ref()))
        .collect()
}

/// Builds the completion prompt. Pure: equal specs give identical bytes.
pub fn build_prompt(spec: &PromptSpec) -> Result<String, ShotListError> {
    spec.validate()?;
    let mut prompt = String::new();
    if let Some(p) = &spec.priming {
        prompt.push_str(&request_block(&p.example_event_name, p.example_ideas.len()));
        prompt.push_str(&render_enumerated(&p.example_ideas));
        prompt.push('\n');
    }
    prompt.push_str(&request_block(&spec.event_name, spec.n));
    Ok(prompt)
}

/// Recovers `(event_name, n)` of the final request block of a prompt built
/// by [`build_prompt`]. Used by the planning mock.
pub fn parse_request(prompt: &str) -> Option<(String, usize)> {
    let lines: Vec<&str> = prompt.lines().collect();
    lines.windows(2).rev().find_map(|w| {
        let event = w[0].strip_prefix(EVENT_LINE_PREFIX)?;
        let rest = w[1].strip_prefix("List ")?;
        let (count, tail) = rest.split_once(' ')?;
        if !tail.starts_with("photos of the event") {
            return None;
        }
        Some((event.to_string(), count.parse().ok()?))
    })
}

fn split_enumerated(line: &str) -> Option<(usize, &str)> {
    let digits = line.bytes().take_while(u8::is_ascii_digit).count();
    if digits == 0 {
        return None;
    }
    let rest = &line[digits..];
    let rest = rest.strip_prefix('.').or_else(|| rest.strip_prefix(')'))?;
    if !rest.starts_with(char::is_whitespace) {
        return None;
    }
    let text = rest.trim();
    if text.is_empty() {
        return None;
    }
    Some((line[..digits].parse().ok()?, text))
}

/// Parses an enumerated completion into exactly `n` ideas.
///
/// Accepts `<k>. <phrase>` and `<k>) <phrase>`. Blank lines are skipped and a
/// single non-enumerated line before the first item is dropped.
pub fn parse_shotlist(completion: &str, n: usize) -> Result<Vec<PhotoIdea>, ShotListError> {
    let mut ideas = Vec::new();
    let mut preamble_seen = false;
    for (line_no, raw) in completion.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        match split_enumerated(line) {
            Some((ordinal, text)) => {
                let position = ideas.len() + 1;
                if ordinal != position {
                    return Err(ShotListError::OrdinalOutOfOrder {
                        position,
                        found: ordinal,
                    });
                }
                ideas.push(PhotoIdea::new(ordinal, text)?);
            }
            None if ideas.is_empty() && !preamble_seen => preamble_seen = true,
            None => {
                return Err(ShotListError::MalformedLine {
                    line_no: line_no + 1,
                    line: line.to_string(),
                })
            }
        }
    }
    if ideas.len() != n {
        return Err(ShotListError::CountMismatch {
            expected: n,
            got: ideas.len(),
        });
    }
    Ok(ideas)
}

/// Every `(idea ordinal, term)` hit. Any hit rejects the whole set.
pub fn find_rejected_terms(ideas: &[PhotoIdea], policy: &RejectionPolicy) -> Vec<(usize, String)> {
    let mut hits = Vec::new();
    for idea in ideas {
        let lower = idea.text.to_lowercase();
        for term in &policy.terms {
            if lower.contains(&term.to_lowercase()) {
                hits.push((idea.index, term.clone()));
            }
        }
    }
    hits
}

/// Samples shot lists until one parses and passes the rejection filter.
///
/// Parse failures and rejected sets consume an attempt; provider errors abort
/// immediately.
pub fn generate_shotlist(
    spec: &PromptSpec,
    policy: &RejectionPolicy,
    params: &LmParams,
    lm: &dyn LanguageModel,
) -> Result<ShotList, ShotListError> {
    policy.validate()?;
    params.validate()?;
    let prompt = build_prompt(spec)?;
    let mut last_reason = String::new();
    for attempt in 1..=policy.max_retries {
        let completion = lm.complete(&prompt, params)?;
        let ideas = match parse_shotlist(&completion, spec.n) {
            Ok(ideas) => ideas,
            Err(err) => {
                log::debug!("attempt {attempt}: unparseable completion: {err}");
                last_reason = err.to_string();
                continue;
            }
        };
        let hits = find_rejected_terms(&ideas, policy);
        if let Some((idea, term)) = hits.first() {
            log::debug!("attempt {attempt}: rejected, idea {idea} contains {term:?}");
            last_reason = format!("idea {idea} contains rejected term {term:?}");
            continue;
        }
        let provenance = Provenance {
            prompt_text: prompt,
            lm_params: params.clone(),
            attempt_count: attempt,
        };
        return Ok(ShotList::new(spec.event_name.clone(), ideas, spec.n, provenance)?);
    }
    Err(ShotListError::RetriesExhausted {
        attempts: policy.max_retries,
        last_reason,
    })
}
