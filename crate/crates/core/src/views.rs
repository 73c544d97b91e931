//! Views: curated subsets of patterns and links, possibly spanning several
//! languages, that can be used wherever a single language is expected.
//!
//! A view holds ids only. Edits to the underlying languages flow through,
//! and a view whose members disappear becomes stale rather than silently
//! shrinking.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ids::{self, PatternRef};
use crate::model::{Atlas, Issue, IssueCode, Link, PatternLanguage};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct View {
    pub id: String,
    pub name: String,
    #[serde(default)]
    pub pattern_refs: BTreeSet<PatternRef>,
    #[serde(default)]
    pub link_ids: BTreeSet<String>,
}

impl crate::model::Keyed for View {
    fn key(&self) -> &str {
        &self.id
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ViewError {
    #[error("unknown pattern {0}")]
    UnknownPattern(PatternRef),
    #[error("unknown link {0}")]
    UnknownLink(String),
    #[error("link {0} has an endpoint outside the view")]
    ClosureViolation(String),
    #[error("view {view} is stale: {detail}")]
    StaleView { view: String, detail: String },
    #[error("view id {0:?} is not a valid identifier")]
    InvalidId(String),
    #[error("view {0} already exists")]
    DuplicateViewId(String),
    #[error("patterns {0} and {1} qualify to the same id")]
    QualifiedIdCollision(PatternRef, PatternRef),
}

impl ViewError {
    pub fn code(&self) -> &'static str {
        match self {
            ViewError::UnknownPattern(_) => "UNKNOWN_PATTERN",
            ViewError::UnknownLink(_) => "UNKNOWN_LINK",
            ViewError::ClosureViolation(_) => "CLOSURE_VIOLATION",
            ViewError::StaleView { .. } => "STALE_VIEW",
            ViewError::InvalidId(_) => "INVALID_ID",
            ViewError::DuplicateViewId(_) => "DUPLICATE_VIEW_ID",
            ViewError::QualifiedIdCollision(_, _) => "QUALIFIED_ID_COLLISION",
        }
    }
}

/// Id a pattern gets inside a materialized view.
pub fn qualified_id(at: &PatternRef) -> String {
    format!("{}--{}", at.language(), at.pattern())
}

pub(crate) fn check_view(atlas: &Atlas, view: &View) -> Vec<Issue> {
    let mut issues = Vec::new();
    if !ids::is_valid(&view.id) {
        issues.push(Issue::new(
            IssueCode::InvalidId,
            &view.id,
            format!("view id {:?} is not a valid identifier", view.id),
        ));
    }
    for at in &view.pattern_refs {
        if !atlas.contains_pattern(at) {
            issues.push(Issue::new(
                IssueCode::ViewStale,
                &view.id,
                format!("view {} includes unknown pattern {at}", view.id),
            ));
        }
    }
    for id in &view.link_ids {
        match atlas.link(id) {
            None => issues.push(Issue::new(
                IssueCode::ViewStale,
                &view.id,
                format!("view {} includes unknown link {id}", view.id),
            )),
            Some(link) if !closed_over(view, link) => issues.push(Issue::new(
                IssueCode::ViewClosure,
                &view.id,
                format!(
                    "view {} includes link {id} without both of its endpoints",
                    view.id
                ),
            )),
            Some(_) => {}
        }
    }
    issues
}

fn closed_over(view: &View, link: &Link) -> bool {
    view.pattern_refs.contains(&link.source) && view.pattern_refs.contains(&link.target)
}

/// Checks a view against the atlas: every member resolves and every link
/// has both endpoints inside the view.
pub fn check_members(atlas: &Atlas, view: &View) -> Result<(), ViewError> {
    if let Some(at) = view
        .pattern_refs
        .iter()
        .find(|r| !atlas.contains_pattern(r))
    {
        return Err(ViewError::UnknownPattern(at.clone()));
    }
    for id in &view.link_ids {
        let link = atlas
            .link(id)
            .ok_or_else(|| ViewError::UnknownLink(id.clone()))?;
        if !closed_over(view, link) {
            return Err(ViewError::ClosureViolation(id.clone()));
        }
    }
    Ok(())
}

/// Registers a view under its own id after checking it.
pub fn register_view(atlas: &Atlas, view: View) -> Result<Atlas, ViewError> {
    if !ids::is_valid(&view.id) {
        return Err(ViewError::InvalidId(view.id));
    }
    if atlas.views.contains_key(&view.id) {
        return Err(ViewError::DuplicateViewId(view.id));
    }
    check_members(atlas, &view)?;
    let mut next = atlas.clone();
    next.views.insert(view.id.clone(), view);
    Ok(next)
}

fn fresh_view_id(atlas: &Atlas, name: &str) -> String {
    let base = ids::slugify(name).unwrap_or_else(|| "view".to_string());
    if !atlas.views.contains_key(&base) {
        return base;
    }
    (2..)
        .map(|n| format!("{base}-{n}"))
        .find(|id| !atlas.views.contains_key(id))
        .expect("unbounded suffix search")
}

/// Creates a view from an explicit selection of patterns and links and
/// registers it under an id derived from its name.
pub fn create_view(
    atlas: &Atlas,
    name: &str,
    pattern_refs: BTreeSet<PatternRef>,
    link_ids: BTreeSet<String>,
) -> Result<(Atlas, View), ViewError> {
    let view = View {
        id: fresh_view_id(atlas, name),
        name: name.to_string(),
        pattern_refs,
        link_ids,
    };
    check_members(atlas, &view)?;
    let next = register_view(atlas, view.clone())?;
    Ok((next, view))
}

/// Builds (without registering) the view containing the given patterns and
/// every link among them.
pub fn induced_view(atlas: &Atlas, pattern_refs: BTreeSet<PatternRef>) -> Result<View, ViewError> {
    if let Some(at) = pattern_refs.iter().find(|r| !atlas.contains_pattern(r)) {
        return Err(ViewError::UnknownPattern(at.clone()));
    }
    let link_ids = atlas
        .all_links()
        .into_iter()
        .filter(|l| pattern_refs.contains(&l.source) && pattern_refs.contains(&l.target))
        .map(|l| l.id.clone())
        .collect();
    Ok(View {
        id: "induced".to_string(),
        name: "Induced view".to_string(),
        pattern_refs,
        link_ids,
    })
}

/// Turns a view into a stand-alone language. Pattern ids are qualified with
/// their source language (`lang--pattern`) and cross links become ordinary
/// intra links of the result.
pub fn materialize(atlas: &Atlas, view: &View) -> Result<PatternLanguage, ViewError> {
    let stale = |detail: String| ViewError::StaleView {
        view: view.id.clone(),
        detail,
    };
    let mut lang = PatternLanguage::new(&view.id, &view.name, "view");
    let mut origin: BTreeMap<String, &PatternRef> = BTreeMap::new();
    for at in &view.pattern_refs {
        let pattern = atlas
            .pattern(at)
            .ok_or_else(|| stale(format!("pattern {at} no longer exists")))?;
        let qid = qualified_id(at);
        if let Some(prev) = origin.insert(qid.clone(), at) {
            return Err(ViewError::QualifiedIdCollision(prev.clone(), at.clone()));
        }
        let mut copy = pattern.clone();
        copy.id = qid.clone();
        lang.patterns.insert(qid, copy);
    }
    let requalify = |at: &PatternRef| {
        PatternRef::new(&view.id, &qualified_id(at)).map_err(|e| stale(e.to_string()))
    };
    for id in &view.link_ids {
        let link = atlas
            .link(id)
            .ok_or_else(|| stale(format!("link {id} no longer exists")))?;
        if !closed_over(view, link) {
            return Err(ViewError::ClosureViolation(id.clone()));
        }
        let mut copy = link.clone();
        copy.source = requalify(&link.source)?;
        copy.target = requalify(&link.target)?;
        lang.intra_links.insert(copy.id.clone(), copy);
    }
    Ok(lang)
}
