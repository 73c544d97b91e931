//! Entry points into a pattern language.
//!
//! A [`Context`] describes the situation as facts: negative facts are open
//! problems, positive facts are solved ones. Each pattern declares which
//! facts it resolves. The entry point is the first pattern of the solution
//! path that resolves the most open problems. Applying that path flips its
//! facts to positive, and the search repeats on what is left.
//!
//! Tag and full-text [`search`] is offered as a fallback for atlases whose
//! patterns carry no fact annotations.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ids::{FactId, PatternRef};
use crate::model::{Atlas, Pattern};
use crate::navigation::{NavError, NavOptions, Scope, ScopeGraph, SolutionPath};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Polarity {
    Negative,
    Positive,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Context {
    #[serde(default)]
    pub facts: BTreeMap<FactId, Polarity>,
}

impl Context {
    pub fn new() -> Self {
        Context::default()
    }

    /// Panics on malformed fact ids; intended for fixtures and tests.
    pub fn with_negatives<'a>(facts: impl IntoIterator<Item = &'a str>) -> Self {
        Context {
            facts: facts
                .into_iter()
                .map(|f| (FactId::new(f).expect("valid fact id"), Polarity::Negative))
                .collect(),
        }
    }

    pub fn negatives(&self) -> BTreeSet<FactId> {
        self.facts
            .iter()
            .filter(|(_, p)| **p == Polarity::Negative)
            .map(|(f, _)| f.clone())
            .collect()
    }

    pub fn is_negative(&self, fact: &FactId) -> bool {
        self.facts.get(fact) == Some(&Polarity::Negative)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntryResult {
    pub entry: PatternRef,
    pub path: SolutionPath,
    pub score: usize,
    pub resolved: BTreeSet<FactId>,
}

/// A path together with the open problems it would solve.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoredPath {
    pub path: SolutionPath,
    pub score: usize,
    pub resolved: BTreeSet<FactId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Plan {
    pub rounds: Vec<EntryResult>,
    #[serde(rename = "final")]
    pub final_context: Context,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EntryError {
    #[error(transparent)]
    Navigation(#[from] NavError),
    #[error("fact {0} is not negative in the context")]
    NotNegative(FactId),
}

impl EntryError {
    pub fn code(&self) -> &'static str {
        match self {
            EntryError::Navigation(e) => e.code(),
            EntryError::NotNegative(_) => "NOT_NEGATIVE",
        }
    }
}

/// Negative facts of `ctx` resolved by any of the given patterns.
pub fn resolved_by<'a>(
    patterns: impl IntoIterator<Item = &'a Pattern>,
    ctx: &Context,
) -> BTreeSet<FactId> {
    patterns
        .into_iter()
        .flat_map(|p| p.resolves.iter())
        .filter(|f| ctx.is_negative(f))
        .cloned()
        .collect()
}

/// Score of a path: how many negative facts its patterns resolve together.
pub fn score_path(atlas: &Atlas, path: &SolutionPath, ctx: &Context) -> (usize, BTreeSet<FactId>) {
    let resolved = resolved_by(path.steps.iter().filter_map(|s| atlas.pattern(s)), ctx);
    (resolved.len(), resolved)
}

fn score_in(graph: &ScopeGraph<'_>, path: SolutionPath, ctx: &Context) -> ScoredPath {
    let resolved = resolved_by(path.steps.iter().filter_map(|s| graph.pattern(s)), ctx);
    ScoredPath {
        score: resolved.len(),
        resolved,
        path,
    }
}

/// Every path in scope with its score, best first. Equal scores keep path
/// order (shorter, then lexicographic).
pub fn rank_paths(
    atlas: &Atlas,
    scope: &Scope,
    ctx: &Context,
    options: NavOptions,
) -> Result<Vec<ScoredPath>, EntryError> {
    let graph = ScopeGraph::resolve(atlas, scope, options)?;
    let mut scored: Vec<_> = graph
        .enumerate(None)?
        .into_iter()
        .map(|p| score_in(&graph, p, ctx))
        .collect();
    // Stable sort: enumeration order already encodes the tie-break.
    scored.sort_by_key(|s| std::cmp::Reverse(s.score));
    Ok(scored)
}

/// The best path in scope, or `None` when no path resolves anything.
pub fn find_entry(
    atlas: &Atlas,
    scope: &Scope,
    ctx: &Context,
    options: NavOptions,
) -> Result<Option<EntryResult>, EntryError> {
    let graph = ScopeGraph::resolve(atlas, scope, options)?;
    Ok(best_in(&graph, ctx)?)
}

fn best_in(graph: &ScopeGraph<'_>, ctx: &Context) -> Result<Option<EntryResult>, NavError> {
    if ctx.negatives().is_empty() {
        return Ok(None);
    }
    let mut best: Option<ScoredPath> = None;
    for path in graph.enumerate(None)? {
        let scored = score_in(graph, path, ctx);
        // Paths arrive in tie-break order, so only a strictly higher score wins.
        if scored.score > best.as_ref().map_or(0, |b| b.score) {
            best = Some(scored);
        }
    }
    Ok(best.map(|b| EntryResult {
        entry: b.path.steps[0].clone(),
        path: b.path,
        score: b.score,
        resolved: b.resolved,
    }))
}

/// Marks the given negative facts as solved.
pub fn apply_path(ctx: &Context, resolved: &BTreeSet<FactId>) -> Result<Context, EntryError> {
    let mut next = ctx.clone();
    for fact in resolved {
        match next.facts.get_mut(fact) {
            Some(p @ Polarity::Negative) => *p = Polarity::Positive,
            _ => return Err(EntryError::NotNegative(fact.clone())),
        }
    }
    Ok(next)
}

/// Repeats entry selection until no path in scope resolves an open problem.
/// Each round solves at least one fact, so there are at most as many rounds
/// as initial negative facts.
pub fn plan_iterative(
    atlas: &Atlas,
    scope: &Scope,
    ctx: &Context,
    options: NavOptions,
) -> Result<Plan, EntryError> {
    let graph = ScopeGraph::resolve(atlas, scope, options)?;
    let mut current = ctx.clone();
    let mut rounds = Vec::new();
    while let Some(result) = best_in(&graph, &current)? {
        current = apply_path(&current, &result.resolved)?;
        rounds.push(result);
    }
    Ok(Plan {
        rounds,
        final_context: current,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchHit {
    pub pattern: PatternRef,
    pub score: u32,
}

pub const TAG_WEIGHT: u32 = 3;
pub const NAME_WEIGHT: u32 = 2;
pub const TEXT_WEIGHT: u32 = 1;

/// Case-insensitive tag and text search. A pattern scores 3 for a tag equal
/// to the query, 2 if its name contains the query and 1 if its problem or
/// solution text does.
pub fn search(atlas: &Atlas, scope: &Scope, query: &str) -> Result<Vec<SearchHit>, NavError> {
    let graph = ScopeGraph::resolve(atlas, scope, NavOptions::default())?;
    let needle = query.trim().to_lowercase();
    if needle.is_empty() {
        return Ok(Vec::new());
    }
    let mut hits: Vec<SearchHit> = graph
        .patterns()
        .filter_map(|(at, p)| {
            let score = search_score(p, &needle);
            (score > 0).then(|| SearchHit {
                pattern: at.clone(),
                score,
            })
        })
        .collect();
    hits.sort_by(|a, b| {
        b.score
            .cmp(&a.score)
            .then_with(|| a.pattern.cmp(&b.pattern))
    });
    Ok(hits)
}

fn search_score(p: &Pattern, needle: &str) -> u32 {
    let mut score = 0;
    if p.tags.iter().any(|t| t.trim().to_lowercase() == needle) {
        score += TAG_WEIGHT;
    }
    if p.name.to_lowercase().contains(needle) {
        score += NAME_WEIGHT;
    }
    if p.problem.to_lowercase().contains(needle) || p.solution.to_lowercase().contains(needle) {
        score += TEXT_WEIGHT;
    }
    score
}
