//! Solution paths: simple, conflict-free sequences of patterns connected by
//! directed links, over a language, a view, or the whole atlas.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::ids::{self, PatternRef};
use crate::model::{Atlas, Link, LinkKind, Pattern, PatternLanguage};

pub const DEFAULT_MAX_LEN: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ScopeKind {
    Language,
    View,
    Atlas,
}

/// The graph a query runs over. Written `atlas`, `language:<id>` or
/// `view:<id>`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Scope {
    pub kind: ScopeKind,
    pub id: String,
}

impl Scope {
    pub fn atlas() -> Self {
        Scope {
            kind: ScopeKind::Atlas,
            id: String::new(),
        }
    }

    pub fn language(id: &str) -> Self {
        Scope {
            kind: ScopeKind::Language,
            id: id.to_string(),
        }
    }

    pub fn view(id: &str) -> Self {
        Scope {
            kind: ScopeKind::View,
            id: id.to_string(),
        }
    }
}

impl Default for Scope {
    fn default() -> Self {
        Scope::atlas()
    }
}

impl fmt::Display for Scope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            ScopeKind::Atlas => f.write_str("atlas"),
            ScopeKind::Language => write!(f, "language:{}", self.id),
            ScopeKind::View => write!(f, "view:{}", self.id),
        }
    }
}

impl FromStr for Scope {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("atlas") {
            return Ok(Scope::atlas());
        }
        let (kind, id) = s.split_once(':').ok_or_else(|| {
            format!("scope {s:?} must be `atlas`, `language:<id>` or `view:<id>`")
        })?;
        let id = ids::parse_id(id).map_err(|e| e.to_string())?;
        match kind.to_ascii_lowercase().as_str() {
            "language" | "lang" => Ok(Scope::language(&id)),
            "view" => Ok(Scope::view(&id)),
            _ => Err(format!("unknown scope kind {kind:?}")),
        }
    }
}

impl Serialize for Scope {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Scope {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Text(String),
            Fields {
                kind: ScopeKind,
                #[serde(default)]
                id: String,
            },
        }
        match Repr::deserialize(deserializer)? {
            Repr::Text(text) => text.parse().map_err(serde::de::Error::custom),
            Repr::Fields { kind, id } => Ok(Scope { kind, id }),
        }
    }
}

/// A navigation result: the patterns visited and the links followed.
/// `via[i]` leads from `steps[i]` to `steps[i + 1]`.
///
/// Paths order by length first, then by step refs, then by link ids.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SolutionPath {
    pub steps: Vec<PatternRef>,
    #[serde(default)]
    pub via: Vec<String>,
}

impl SolutionPath {
    pub fn single(at: PatternRef) -> Self {
        SolutionPath {
            steps: vec![at],
            via: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn first(&self) -> Option<&PatternRef> {
        self.steps.first()
    }

    pub fn last(&self) -> Option<&PatternRef> {
        self.steps.last()
    }
}

impl Ord for SolutionPath {
    fn cmp(&self, other: &Self) -> Ordering {
        self.steps
            .len()
            .cmp(&other.steps.len())
            .then_with(|| self.steps.cmp(&other.steps))
            .then_with(|| self.via.cmp(&other.via))
    }
}

impl PartialOrd for SolutionPath {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for SolutionPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, step) in self.steps.iter().enumerate() {
            if i > 0 {
                f.write_str(" -> ")?;
            }
            write!(f, "{step}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NavOptions {
    pub max_len: usize,
    /// Allow CONCRETIZES links as path steps.
    #[serde(default)]
    pub include_concretizes: bool,
}

impl Default for NavOptions {
    fn default() -> Self {
        NavOptions {
            max_len: DEFAULT_MAX_LEN,
            include_concretizes: false,
        }
    }
}

impl NavOptions {
    pub fn with_max_len(max_len: usize) -> Self {
        NavOptions {
            max_len,
            ..NavOptions::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NavError {
    #[error("unknown scope {0}")]
    UnknownScope(Scope),
    #[error("scope {scope} is stale: {detail}")]
    StaleScope { scope: Scope, detail: String },
    #[error("unknown pattern {0} in scope")]
    UnknownPattern(PatternRef),
    #[error("unknown link {0} in scope")]
    UnknownLink(String),
    #[error("link {0} does not leave the last step of the path")]
    NotAdjacent(String),
    #[error("link {0} cannot be followed as a path step")]
    NotTraversable(String),
    #[error("pattern {0} is already on the path")]
    RepeatedPattern(PatternRef),
    #[error("pattern {0} is excluded by {1} on the path")]
    ExcludesConflict(PatternRef, PatternRef),
    #[error("max_len must be at least 1")]
    InvalidMaxLen,
    #[error("path is invalid: {0:?}")]
    InvalidPath(Vec<Violation>),
}

impl NavError {
    pub fn code(&self) -> &'static str {
        match self {
            NavError::UnknownScope(_) => "UNKNOWN_SCOPE",
            NavError::StaleScope { .. } => "STALE_SCOPE",
            NavError::UnknownPattern(_) => "UNKNOWN_PATTERN",
            NavError::UnknownLink(_) => "UNKNOWN_LINK",
            NavError::NotAdjacent(_) => "NOT_ADJACENT",
            NavError::NotTraversable(_) => "NOT_TRAVERSABLE",
            NavError::RepeatedPattern(_) => "REPEATED_PATTERN",
            NavError::ExcludesConflict(_, _) => "EXCLUDES_CONFLICT",
            NavError::InvalidMaxLen => "INVALID_MAX_LEN",
            NavError::InvalidPath(_) => "INVALID_PATH",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Violation {
    UnknownScope,
    EmptyPath,
    LengthMismatch,
    UnknownPattern,
    BrokenLink,
    NotAdjacent,
    NotTraversable,
    RepeatedPattern,
    ExcludesConflict,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathCheck {
    pub valid: bool,
    pub violations: Vec<Violation>,
}

/// The patterns and links visible in one scope, indexed for navigation.
#[derive(Debug, Clone)]
pub struct ScopeGraph<'a> {
    scope: Scope,
    options: NavOptions,
    patterns: BTreeMap<PatternRef, &'a Pattern>,
    links: BTreeMap<&'a str, &'a Link>,
    /// Traversable links per source, ordered by (target, link id).
    outgoing: BTreeMap<PatternRef, Vec<&'a Link>>,
    /// Symmetric EXCLUDES relation.
    exclusions: BTreeMap<PatternRef, BTreeSet<PatternRef>>,
}

impl<'a> ScopeGraph<'a> {
    pub fn resolve(atlas: &'a Atlas, scope: &Scope, options: NavOptions) -> Result<Self, NavError> {
        let unknown = || NavError::UnknownScope(scope.clone());
        let mut patterns = BTreeMap::new();
        let mut links: Vec<&'a Link> = Vec::new();
        match scope.kind {
            ScopeKind::Atlas => {
                for lang in atlas.languages().values() {
                    collect_patterns(lang, &mut patterns);
                }
                links.extend(atlas.all_links());
            }
            ScopeKind::Language => {
                let lang = atlas.language(&scope.id).ok_or_else(unknown)?;
                collect_patterns(lang, &mut patterns);
                links.extend(lang.intra_links.values());
            }
            ScopeKind::View => {
                let view = atlas.view(&scope.id).ok_or_else(unknown)?;
                let stale = |detail: String| NavError::StaleScope {
                    scope: scope.clone(),
                    detail,
                };
                for at in &view.pattern_refs {
                    let p = atlas
                        .pattern(at)
                        .ok_or_else(|| stale(format!("pattern {at} no longer exists")))?;
                    patterns.insert(at.clone(), p);
                }
                for id in &view.link_ids {
                    links.push(
                        atlas
                            .link(id)
                            .ok_or_else(|| stale(format!("link {id} no longer exists")))?,
                    );
                }
            }
        }
        Ok(Self::build(scope.clone(), options, patterns, links))
    }

    fn build(
        scope: Scope,
        options: NavOptions,
        patterns: BTreeMap<PatternRef, &'a Pattern>,
        links: Vec<&'a Link>,
    ) -> Self {
        let mut graph = ScopeGraph {
            scope,
            options,
            patterns,
            links: BTreeMap::new(),
            outgoing: BTreeMap::new(),
            exclusions: BTreeMap::new(),
        };
        for link in links {
            if !graph.patterns.contains_key(&link.source)
                || !graph.patterns.contains_key(&link.target)
            {
                continue;
            }
            graph.links.insert(&link.id, link);
            if link.semantics.kind == LinkKind::Excludes {
                graph
                    .exclusions
                    .entry(link.source.clone())
                    .or_default()
                    .insert(link.target.clone());
                graph
                    .exclusions
                    .entry(link.target.clone())
                    .or_default()
                    .insert(link.source.clone());
            }
            if graph.traversable(link) {
                graph
                    .outgoing
                    .entry(link.source.clone())
                    .or_default()
                    .push(link);
            }
        }
        for out in graph.outgoing.values_mut() {
            out.sort_by(|a, b| a.target.cmp(&b.target).then_with(|| a.id.cmp(&b.id)));
        }
        graph
    }

    pub fn scope(&self) -> &Scope {
        &self.scope
    }

    pub fn options(&self) -> NavOptions {
        self.options
    }

    pub fn patterns(&self) -> impl Iterator<Item = (&PatternRef, &'a Pattern)> + '_ {
        self.patterns.iter().map(|(r, p)| (r, *p))
    }

    pub fn pattern(&self, at: &PatternRef) -> Option<&'a Pattern> {
        self.patterns.get(at).copied()
    }

    pub fn link(&self, id: &str) -> Option<&'a Link> {
        self.links.get(id).copied()
    }

    pub fn links(&self) -> impl Iterator<Item = &'a Link> + '_ {
        self.links.values().copied()
    }

    /// Links a path may follow out of `at`.
    pub fn outgoing(&self, at: &PatternRef) -> &[&'a Link] {
        self.outgoing.get(at).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn traversable(&self, link: &Link) -> bool {
        match link.semantics.kind {
            LinkKind::Excludes => false,
            LinkKind::Concretizes => self.options.include_concretizes,
            LinkKind::CoOccurs | LinkKind::Other => true,
        }
    }

    pub fn excludes(&self, a: &PatternRef, b: &PatternRef) -> bool {
        self.exclusions.get(a).is_some_and(|set| set.contains(b))
    }

    /// A pattern on `steps` that `candidate` conflicts with, if any.
    fn conflict_on<'p>(
        &self,
        steps: &'p [PatternRef],
        candidate: &PatternRef,
    ) -> Option<&'p PatternRef> {
        let excluded = self.exclusions.get(candidate)?;
        steps.iter().find(|s| excluded.contains(*s))
    }

    /// Every valid path of at most `max_len` steps, starting at `start` when
    /// given, in path order.
    pub fn enumerate(&self, start: Option<&PatternRef>) -> Result<Vec<SolutionPath>, NavError> {
        if self.options.max_len == 0 {
            return Err(NavError::InvalidMaxLen);
        }
        let starts: Vec<&PatternRef> = match start {
            Some(at) if self.patterns.contains_key(at) => vec![at],
            Some(at) => return Err(NavError::UnknownPattern(at.clone())),
            None => self.patterns.keys().collect(),
        };
        let mut found = Vec::new();
        let mut steps = Vec::new();
        let mut via = Vec::new();
        for at in starts {
            steps.push(at.clone());
            self.walk(&mut steps, &mut via, &mut found);
            steps.pop();
        }
        found.sort();
        Ok(found)
    }

    fn walk(
        &self,
        steps: &mut Vec<PatternRef>,
        via: &mut Vec<String>,
        found: &mut Vec<SolutionPath>,
    ) {
        found.push(SolutionPath {
            steps: steps.clone(),
            via: via.clone(),
        });
        if steps.len() >= self.options.max_len {
            return;
        }
        let last = steps.last().expect("walk starts from a step").clone();
        for link in self.outgoing(&last) {
            if steps.contains(&link.target) || self.conflict_on(steps, &link.target).is_some() {
                continue;
            }
            steps.push(link.target.clone());
            via.push(link.id.clone());
            self.walk(steps, via, found);
            steps.pop();
            via.pop();
        }
    }

    pub fn extend(&self, path: &SolutionPath, link_id: &str) -> Result<SolutionPath, NavError> {
        let link = self
            .link(link_id)
            .ok_or_else(|| NavError::UnknownLink(link_id.to_string()))?;
        if path.last() != Some(&link.source) {
            return Err(NavError::NotAdjacent(link_id.to_string()));
        }
        if path.steps.contains(&link.target) {
            return Err(NavError::RepeatedPattern(link.target.clone()));
        }
        if let Some(other) = self.conflict_on(&path.steps, &link.target) {
            return Err(NavError::ExcludesConflict(
                link.target.clone(),
                other.clone(),
            ));
        }
        if !self.traversable(link) {
            return Err(NavError::NotTraversable(link_id.to_string()));
        }
        let mut next = path.clone();
        next.steps.push(link.target.clone());
        next.via.push(link.id.clone());
        let check = self.check(&next);
        if !check.valid {
            return Err(NavError::InvalidPath(check.violations));
        }
        Ok(next)
    }

    pub fn check(&self, path: &SolutionPath) -> PathCheck {
        let mut violations = BTreeSet::new();
        if path.steps.is_empty() {
            violations.insert(Violation::EmptyPath);
        } else if path.via.len() + 1 != path.steps.len() {
            violations.insert(Violation::LengthMismatch);
        }
        for step in &path.steps {
            if !self.patterns.contains_key(step) {
                violations.insert(Violation::UnknownPattern);
            }
        }
        for (i, id) in path.via.iter().enumerate() {
            let Some(link) = self.link(id) else {
                violations.insert(Violation::BrokenLink);
                continue;
            };
            match (path.steps.get(i), path.steps.get(i + 1)) {
                (Some(from), Some(to)) if &link.source == from && &link.target == to => {}
                _ => {
                    violations.insert(Violation::NotAdjacent);
                }
            }
            if !self.traversable(link) {
                violations.insert(Violation::NotTraversable);
            }
        }
        let distinct: BTreeSet<_> = path.steps.iter().collect();
        if distinct.len() != path.steps.len() {
            violations.insert(Violation::RepeatedPattern);
        }
        for (i, a) in path.steps.iter().enumerate() {
            if path.steps[i + 1..].iter().any(|b| self.excludes(a, b)) {
                violations.insert(Violation::ExcludesConflict);
                break;
            }
        }
        let violations: Vec<_> = violations.into_iter().collect();
        PathCheck {
            valid: violations.is_empty(),
            violations,
        }
    }
}

fn collect_patterns<'a>(lang: &'a PatternLanguage, into: &mut BTreeMap<PatternRef, &'a Pattern>) {
    for (id, pattern) in &lang.patterns {
        if let Ok(at) = PatternRef::new(&lang.id, id) {
            into.insert(at, pattern);
        }
    }
}

pub fn enumerate_paths(
    atlas: &Atlas,
    scope: &Scope,
    start: Option<&PatternRef>,
    options: NavOptions,
) -> Result<Vec<SolutionPath>, NavError> {
    ScopeGraph::resolve(atlas, scope, options)?.enumerate(start)
}

pub fn extend_path(
    atlas: &Atlas,
    scope: &Scope,
    path: &SolutionPath,
    link_id: &str,
    options: NavOptions,
) -> Result<SolutionPath, NavError> {
    ScopeGraph::resolve(atlas, scope, options)?.extend(path, link_id)
}

/// Re-validates a path against the current state of the atlas. A scope that
/// no longer resolves is reported as a violation.
pub fn path_valid(
    atlas: &Atlas,
    scope: &Scope,
    path: &SolutionPath,
    options: NavOptions,
) -> PathCheck {
    match ScopeGraph::resolve(atlas, scope, options) {
        Ok(graph) => graph.check(path),
        Err(_) => PathCheck {
            valid: false,
            violations: vec![Violation::UnknownScope],
        },
    }
}
