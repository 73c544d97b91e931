//! Interactive navigation sessions.
//!
//! A session walks a path through one scope, one link at a time. Arriving at
//! a pattern marks the negative facts it resolves as solved.

use std::collections::BTreeSet;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use pattern_atlas::entry::resolved_by;
use pattern_atlas::{
    apply_path, Atlas, Context, FactId, Link, NavError, NavOptions, Pattern, PatternRef, Scope,
    ScopeGraph, SolutionPath,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Session {
    pub id: String,
    pub scope: Scope,
    pub include_concretizes: bool,
    pub initial_context: Context,
    pub context: Context,
    pub path: SolutionPath,
    /// Facts solved by each step, aligned with `path.steps`.
    pub solved: Vec<BTreeSet<FactId>>,
    pub resolved_so_far: BTreeSet<FactId>,
    pub created_at: DateTime<Utc>,
    pub updated_at: DateTime<Utc>,
}

/// A link the session could follow next and what it would solve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Candidate {
    pub link: Link,
    pub target: PatternRef,
    pub target_name: String,
    pub would_resolve: BTreeSet<FactId>,
    pub delta: usize,
    /// Error code the step would fail with, if any.
    pub blocked_by: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SessionState {
    pub session: Session,
    pub current: PatternRef,
    pub current_pattern: Pattern,
    pub open_negatives: BTreeSet<FactId>,
    pub candidates: Vec<Candidate>,
}

impl Session {
    pub fn start(
        atlas: &Atlas,
        id: String,
        scope: Scope,
        context: Context,
        entry: PatternRef,
        include_concretizes: bool,
        now: DateTime<Utc>,
    ) -> Result<Session, NavError> {
        let graph = graph(atlas, &scope, include_concretizes)?;
        let pattern = graph
            .pattern(&entry)
            .ok_or_else(|| NavError::UnknownPattern(entry.clone()))?;
        let solved = resolved_by([pattern], &context);
        let current = apply_path(&context, &solved).expect("resolved facts are negative");
        Ok(Session {
            id,
            scope,
            include_concretizes,
            initial_context: context,
            context: current,
            path: SolutionPath::single(entry),
            resolved_so_far: solved.clone(),
            solved: vec![solved],
            created_at: now,
            updated_at: now,
        })
    }

    /// Follows `link_id` from the current pattern. The session is left
    /// unchanged on error.
    pub fn step(
        &mut self,
        atlas: &Atlas,
        link_id: &str,
        now: DateTime<Utc>,
    ) -> Result<(), NavError> {
        let graph = graph(atlas, &self.scope, self.include_concretizes)?;
        let check = graph.check(&self.path);
        if !check.valid {
            return Err(NavError::InvalidPath(check.violations));
        }
        let next = graph.extend(&self.path, link_id)?;
        let arrived = graph
            .pattern(next.last().expect("extended path is non-empty"))
            .expect("extended path stays in scope");
        let solved = resolved_by([arrived], &self.context);
        self.context = apply_path(&self.context, &solved).expect("resolved facts are negative");
        self.path = next;
        self.resolved_so_far.extend(solved.iter().cloned());
        self.solved.push(solved);
        self.updated_at = now;
        Ok(())
    }

    pub fn state(&self, atlas: &Atlas) -> Result<SessionState, NavError> {
        let graph = graph(atlas, &self.scope, self.include_concretizes)?;
        let current = self
            .path
            .last()
            .expect("sessions start with one step")
            .clone();
        let current_pattern = graph
            .pattern(&current)
            .ok_or_else(|| NavError::UnknownPattern(current.clone()))?
            .clone();
        let candidates = graph
            .outgoing(&current)
            .iter()
            .map(|link| {
                let target = graph
                    .pattern(&link.target)
                    .expect("outgoing targets are in scope");
                let would_resolve = resolved_by([target], &self.context);
                Candidate {
                    link: (*link).clone(),
                    target: link.target.clone(),
                    target_name: target.name.clone(),
                    delta: would_resolve.len(),
                    would_resolve,
                    blocked_by: graph
                        .extend(&self.path, &link.id)
                        .err()
                        .map(|e| e.code().to_string()),
                }
            })
            .collect();
        Ok(SessionState {
            session: self.clone(),
            current,
            current_pattern,
            open_negatives: self.context.negatives(),
            candidates,
        })
    }
}

fn graph<'a>(
    atlas: &'a Atlas,
    scope: &Scope,
    include_concretizes: bool,
) -> Result<ScopeGraph<'a>, NavError> {
    let options = NavOptions {
        include_concretizes,
        ..NavOptions::default()
    };
    ScopeGraph::resolve(atlas, scope, options)
}
