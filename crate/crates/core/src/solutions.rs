//! Working solutions attached to patterns, and their aggregation along a
//! solution path.
//!
//! Solutions advertise capability tags they `provide` and `require`. When
//! solutions are aggregated in order, each requirement binds to the most
//! recent earlier part that provides it. Binding never looks forward.
//! Aggregation is associative under grouping: see [`PartialAggregate`].

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ids::{self, PatternRef};
use crate::model::{Atlas, Concretization, Issue, IssueCode, Keyed};
use crate::navigation::SolutionPath;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConcreteSolution {
    pub id: String,
    pub pattern: PatternRef,
    pub name: String,
    #[serde(default)]
    pub provides: BTreeSet<String>,
    #[serde(default)]
    pub requires: BTreeSet<String>,
    pub payload_ref: String,
    #[serde(default)]
    pub annotations: BTreeMap<String, String>,
}

impl Keyed for ConcreteSolution {
    fn key(&self) -> &str {
        &self.id
    }
}

impl ConcreteSolution {
    pub fn new(id: &str, pattern: PatternRef, name: &str, payload_ref: &str) -> Self {
        ConcreteSolution {
            id: id.to_string(),
            pattern,
            name: name.to_string(),
            provides: BTreeSet::new(),
            requires: BTreeSet::new(),
            payload_ref: payload_ref.to_string(),
            annotations: BTreeMap::new(),
        }
    }

    pub fn providing<'a>(mut self, tags: impl IntoIterator<Item = &'a str>) -> Self {
        self.provides.extend(tags.into_iter().map(str::to_string));
        self
    }

    pub fn requiring<'a>(mut self, tags: impl IntoIterator<Item = &'a str>) -> Self {
        self.requires.extend(tags.into_iter().map(str::to_string));
        self
    }

    pub fn annotate(mut self, key: &str, value: &str) -> Self {
        self.annotations.insert(key.to_string(), value.to_string());
        self
    }

    /// Shape checks that do not need the atlas.
    pub fn check(&self) -> Result<(), String> {
        if !ids::is_valid(&self.id) {
            return Err(format!(
                "solution id {:?} is not a valid identifier",
                self.id
            ));
        }
        if self.payload_ref.trim().is_empty() {
            return Err(format!("solution {} has an empty payload_ref", self.id));
        }
        if let Some(tag) = self.provides.intersection(&self.requires).next() {
            return Err(format!(
                "solution {} both provides and requires {tag:?}",
                self.id
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SolutionError {
    #[error("unknown pattern {0}")]
    UnknownPattern(PatternRef),
    #[error("solution {0} already exists")]
    DuplicateSolutionId(String),
    #[error("invalid solution: {0}")]
    InvalidSolution(String),
    #[error("unknown solution {0}")]
    UnknownSolution(String),
    #[error("nothing to aggregate")]
    EmptyAggregation,
    #[error("solution {0} appears more than once")]
    DuplicatePart(String),
    #[error("solution {consumer} requires {capability} but no earlier part provides it")]
    UnmetRequirement {
        consumer: String,
        capability: String,
    },
    #[error("no solution selected for step {0}")]
    MissingSelection(PatternRef),
    #[error("solution {0} does not belong to the step it was selected for")]
    WrongPattern(String),
    #[error("selection names {0}, which is not on the path")]
    UnexpectedSelection(PatternRef),
}

impl SolutionError {
    pub fn code(&self) -> &'static str {
        match self {
            SolutionError::UnknownPattern(_) => "UNKNOWN_PATTERN",
            SolutionError::DuplicateSolutionId(_) => "DUPLICATE_SOLUTION_ID",
            SolutionError::InvalidSolution(_) => "INVALID_SOLUTION",
            SolutionError::UnknownSolution(_) => "UNKNOWN_SOLUTION",
            SolutionError::EmptyAggregation => "EMPTY_AGGREGATION",
            SolutionError::DuplicatePart(_) => "DUPLICATE_PART",
            SolutionError::UnmetRequirement { .. } => "UNMET_REQUIREMENT",
            SolutionError::MissingSelection(_) => "MISSING_SELECTION",
            SolutionError::WrongPattern(_) => "WRONG_PATTERN",
            SolutionError::UnexpectedSelection(_) => "UNEXPECTED_SELECTION",
        }
    }
}

pub(crate) fn check_solutions(atlas: &Atlas) -> Vec<Issue> {
    let mut issues = Vec::new();
    for (key, cs) in &atlas.solutions {
        if key != &cs.id {
            issues.push(Issue::new(
                IssueCode::KeyMismatch,
                key,
                format!("solution stored under {key:?} has id {:?}", cs.id),
            ));
        }
        if let Err(detail) = cs.check() {
            issues.push(Issue::new(IssueCode::SolutionInvalid, &cs.id, detail));
        }
        match atlas.pattern(&cs.pattern) {
            None => issues.push(Issue::new(
                IssueCode::SolutionDangling,
                &cs.id,
                format!(
                    "solution {} belongs to unknown pattern {}",
                    cs.id, cs.pattern
                ),
            )),
            Some(p)
                if !p
                    .concretizations
                    .contains(&Concretization::Solution(cs.id.clone())) =>
            {
                issues.push(Issue::new(
                    IssueCode::SolutionUnlisted,
                    &cs.id,
                    format!("pattern {} does not list solution {}", cs.pattern, cs.id),
                ))
            }
            Some(_) => {}
        }
    }
    for lang in atlas.languages.values() {
        for pattern in lang.patterns.values() {
            for c in &pattern.concretizations {
                let ok = match c {
                    Concretization::Pattern(at) => atlas.contains_pattern(at),
                    Concretization::Solution(id) => atlas.solutions.get(id).is_some_and(|cs| {
                        cs.pattern.language() == lang.id && cs.pattern.pattern() == pattern.id
                    }),
                };
                if !ok {
                    issues.push(Issue::new(
                        IssueCode::ConcretizationDangling,
                        &format!("{}/{}", lang.id, pattern.id),
                        format!(
                            "concretization {c} of {}/{} does not resolve to it",
                            lang.id, pattern.id
                        ),
                    ));
                }
            }
        }
    }
    issues
}

/// Stores a solution and records it among its pattern's concretizations.
pub fn attach_solution(atlas: &Atlas, cs: ConcreteSolution) -> Result<Atlas, SolutionError> {
    cs.check().map_err(SolutionError::InvalidSolution)?;
    if atlas.solutions.contains_key(&cs.id) {
        return Err(SolutionError::DuplicateSolutionId(cs.id));
    }
    let mut next = atlas.clone();
    let pattern = next
        .languages
        .get_mut(cs.pattern.language())
        .and_then(|l| l.patterns.get_mut(cs.pattern.pattern()))
        .ok_or_else(|| SolutionError::UnknownPattern(cs.pattern.clone()))?;
    pattern
        .concretizations
        .insert(Concretization::Solution(cs.id.clone()));
    next.solutions.insert(cs.id.clone(), cs);
    Ok(next)
}

/// Removes a solution and its concretization entry.
pub fn detach_solution(atlas: &Atlas, id: &str) -> Result<Atlas, SolutionError> {
    let mut next = atlas.clone();
    let cs = next
        .solutions
        .remove(id)
        .ok_or_else(|| SolutionError::UnknownSolution(id.to_string()))?;
    if let Some(p) = next
        .languages
        .get_mut(cs.pattern.language())
        .and_then(|l| l.patterns.get_mut(cs.pattern.pattern()))
    {
        p.concretizations.remove(&Concretization::Solution(cs.id));
    }
    Ok(next)
}

pub fn solutions_for<'a>(
    atlas: &'a Atlas,
    at: &PatternRef,
) -> Result<Vec<&'a ConcreteSolution>, SolutionError> {
    if !atlas.contains_pattern(at) {
        return Err(SolutionError::UnknownPattern(at.clone()));
    }
    Ok(atlas
        .solutions
        .values()
        .filter(|cs| &cs.pattern == at)
        .collect())
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Binding {
    pub consumer: String,
    pub capability: String,
    pub producer: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AggregatedSolution {
    pub parts: Vec<String>,
    pub bindings: Vec<Binding>,
    pub provides: BTreeSet<String>,
    pub unmet: BTreeSet<String>,
}

/// An aggregation that may still have requirements waiting for a provider
/// from an earlier group. Composing partial aggregates is associative, and
/// composing the singletons of a list equals aggregating the list at once.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartialAggregate {
    parts: Vec<String>,
    bindings: Vec<Binding>,
    provides: BTreeSet<String>,
    /// Latest provider of each capability within this group.
    latest: BTreeMap<String, String>,
    /// (consumer, capability) pairs not yet bound, in part order.
    open: Vec<(String, String)>,
}

impl PartialAggregate {
    pub fn of(part: &ConcreteSolution) -> Self {
        PartialAggregate {
            parts: vec![part.id.clone()],
            bindings: Vec::new(),
            provides: part.provides.clone(),
            latest: part
                .provides
                .iter()
                .map(|t| (t.clone(), part.id.clone()))
                .collect(),
            open: part
                .requires
                .iter()
                .map(|t| (part.id.clone(), t.clone()))
                .collect(),
        }
    }

    pub fn parts(&self) -> &[String] {
        &self.parts
    }

    pub fn bindings(&self) -> &[Binding] {
        &self.bindings
    }

    pub fn open(&self) -> &[(String, String)] {
        &self.open
    }

    /// Appends `later` after `self`. Open requirements of `later` bind to the
    /// latest provider in `self`.
    pub fn compose(&self, later: &PartialAggregate) -> Result<PartialAggregate, SolutionError> {
        let mut position: HashMap<&str, usize> = HashMap::new();
        for (i, id) in self.parts.iter().chain(&later.parts).enumerate() {
            if position.insert(id, i).is_some() {
                return Err(SolutionError::DuplicatePart(id.clone()));
            }
        }
        let mut bindings: Vec<Binding> = self
            .bindings
            .iter()
            .chain(&later.bindings)
            .cloned()
            .collect();
        let mut open = self.open.clone();
        for (consumer, capability) in &later.open {
            match self.latest.get(capability) {
                Some(producer) => bindings.push(Binding {
                    consumer: consumer.clone(),
                    capability: capability.clone(),
                    producer: producer.clone(),
                }),
                None => open.push((consumer.clone(), capability.clone())),
            }
        }
        bindings.sort_by(|a, b| {
            position[a.consumer.as_str()]
                .cmp(&position[b.consumer.as_str()])
                .then_with(|| a.capability.cmp(&b.capability))
        });
        open.sort_by(|a, b| {
            position[a.0.as_str()]
                .cmp(&position[b.0.as_str()])
                .then_with(|| a.1.cmp(&b.1))
        });
        let mut latest = self.latest.clone();
        latest.extend(later.latest.iter().map(|(k, v)| (k.clone(), v.clone())));
        Ok(PartialAggregate {
            parts: self.parts.iter().chain(&later.parts).cloned().collect(),
            bindings,
            provides: self.provides.union(&later.provides).cloned().collect(),
            latest,
            open,
        })
    }

    /// Closes the aggregation; any requirement still open is an error.
    pub fn finish(self) -> Result<AggregatedSolution, SolutionError> {
        if let Some((consumer, capability)) = self.open.into_iter().next() {
            return Err(SolutionError::UnmetRequirement {
                consumer,
                capability,
            });
        }
        Ok(AggregatedSolution {
            parts: self.parts,
            bindings: self.bindings,
            provides: self.provides,
            unmet: BTreeSet::new(),
        })
    }
}

/// Aggregates parts left to right without failing on unmet requirements.
pub fn aggregate_partial(parts: &[ConcreteSolution]) -> Result<PartialAggregate, SolutionError> {
    let (first, rest) = parts.split_first().ok_or(SolutionError::EmptyAggregation)?;
    rest.iter()
        .try_fold(PartialAggregate::of(first), |acc, part| {
            acc.compose(&PartialAggregate::of(part))
        })
}

pub fn aggregate(parts: &[ConcreteSolution]) -> Result<AggregatedSolution, SolutionError> {
    aggregate_partial(parts)?.finish()
}

/// Aggregates the solutions selected for each step of a path, in path order.
pub fn realize_path(
    atlas: &Atlas,
    path: &SolutionPath,
    selection: &BTreeMap<PatternRef, String>,
) -> Result<AggregatedSolution, SolutionError> {
    if let Some(extra) = selection.keys().find(|k| !path.steps.contains(k)) {
        return Err(SolutionError::UnexpectedSelection(extra.clone()));
    }
    let mut parts = Vec::with_capacity(path.steps.len());
    for step in &path.steps {
        let id = selection
            .get(step)
            .ok_or_else(|| SolutionError::MissingSelection(step.clone()))?;
        let cs = atlas
            .solutions
            .get(id)
            .ok_or_else(|| SolutionError::UnknownSolution(id.clone()))?;
        if &cs.pattern != step {
            return Err(SolutionError::WrongPattern(id.clone()));
        }
        parts.push(cs.clone());
    }
    aggregate(&parts)
}
