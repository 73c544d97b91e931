//! The domain model: patterns, pattern languages, semantic links, the
//! separately stored cross-language link registry, and the atlas that ties
//! them together.
//!
//! An [`Atlas`] is an immutable value. Every mutating operation borrows the
//! current atlas and returns a new one, leaving the original untouched.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::ids::{self, FactId, PatternRef};
use crate::solutions::ConcreteSolution;
use crate::views::View;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum LinkKind {
    /// The target's problem tends to show up together with the source's.
    CoOccurs,
    /// The two solutions cannot both be applied.
    Excludes,
    /// The target refines the source's solution, possibly in another language.
    Concretizes,
    Other,
}

impl LinkKind {
    pub fn as_str(self) -> &'static str {
        match self {
            LinkKind::CoOccurs => "CO_OCCURS",
            LinkKind::Excludes => "EXCLUDES",
            LinkKind::Concretizes => "CONCRETIZES",
            LinkKind::Other => "OTHER",
        }
    }
}

impl fmt::Display for LinkKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LinkKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().replace('-', "_").as_str() {
            "CO_OCCURS" => Ok(LinkKind::CoOccurs),
            "EXCLUDES" => Ok(LinkKind::Excludes),
            "CONCRETIZES" => Ok(LinkKind::Concretizes),
            "OTHER" => Ok(LinkKind::Other),
            _ => Err(format!("unknown link kind {s:?}")),
        }
    }
}

/// What a link means. The label is only used (and then required) for
/// [`LinkKind::Other`].
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LinkSemantics {
    pub kind: LinkKind,
    #[serde(default)]
    pub label: String,
}

impl LinkSemantics {
    pub fn co_occurs() -> Self {
        Self::of(LinkKind::CoOccurs)
    }

    pub fn excludes() -> Self {
        Self::of(LinkKind::Excludes)
    }

    pub fn concretizes() -> Self {
        Self::of(LinkKind::Concretizes)
    }

    pub fn other(label: &str) -> Self {
        LinkSemantics {
            kind: LinkKind::Other,
            label: label.to_string(),
        }
    }

    fn of(kind: LinkKind) -> Self {
        LinkSemantics {
            kind,
            label: String::new(),
        }
    }

    pub fn check(&self) -> Result<(), String> {
        match self.kind {
            LinkKind::Other if self.label.is_empty() => {
                Err("OTHER semantics require a label".to_string())
            }
            LinkKind::Other if self.label != self.label.to_lowercase() => {
                Err(format!("OTHER label {:?} must be lowercase", self.label))
            }
            LinkKind::Other => Ok(()),
            _ if !self.label.is_empty() => {
                Err(format!("{} semantics must not carry a label", self.kind))
            }
            _ => Ok(()),
        }
    }

    /// Text used for edge labels: the kind, or the label for OTHER.
    pub fn display_label(&self) -> &str {
        match self.kind {
            LinkKind::Other => &self.label,
            kind => kind.as_str(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Link {
    pub id: String,
    pub source: PatternRef,
    pub target: PatternRef,
    pub semantics: LinkSemantics,
    #[serde(default)]
    pub description: String,
}

impl Link {
    pub fn new(id: &str, source: PatternRef, target: PatternRef, semantics: LinkSemantics) -> Self {
        Link {
            id: id.to_string(),
            source,
            target,
            semantics,
            description: String::new(),
        }
    }

    pub fn with_description(mut self, description: &str) -> Self {
        self.description = description.to_string();
        self
    }

    pub fn is_cross_language(&self) -> bool {
        self.source.language() != self.target.language()
    }

    pub fn touches(&self, at: &PatternRef) -> bool {
        &self.source == at || &self.target == at
    }

    /// Key under which at most one link may exist.
    pub(crate) fn quad(&self) -> (&PatternRef, &PatternRef, LinkKind, &str) {
        (
            &self.source,
            &self.target,
            self.semantics.kind,
            &self.semantics.label,
        )
    }
}

/// Something a pattern is made concrete by: a refining pattern or an
/// attached working solution. Serialized as a plain string; pattern refs
/// contain a `/`, solution ids never do.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Concretization {
    Pattern(PatternRef),
    Solution(String),
}

impl fmt::Display for Concretization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Concretization::Pattern(r) => r.fmt(f),
            Concretization::Solution(id) => f.write_str(id),
        }
    }
}

impl Serialize for Concretization {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Concretization {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(deserializer)?;
        if raw.contains('/') {
            raw.parse()
                .map(Concretization::Pattern)
                .map_err(serde::de::Error::custom)
        } else {
            ids::parse_id(&raw)
                .map(Concretization::Solution)
                .map_err(serde::de::Error::custom)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pattern {
    pub id: String,
    pub name: String,
    #[serde(default)]
    pub problem: String,
    #[serde(default)]
    pub context_text: String,
    #[serde(default)]
    pub solution: String,
    #[serde(default)]
    pub tags: BTreeSet<String>,
    #[serde(default)]
    pub resolves: BTreeSet<FactId>,
    #[serde(default)]
    pub concretizations: BTreeSet<Concretization>,
}

impl Pattern {
    pub fn new(id: &str, name: &str) -> Self {
        Pattern {
            id: id.to_string(),
            name: name.to_string(),
            problem: String::new(),
            context_text: String::new(),
            solution: String::new(),
            tags: BTreeSet::new(),
            resolves: BTreeSet::new(),
            concretizations: BTreeSet::new(),
        }
    }

    pub fn with_problem(mut self, text: &str) -> Self {
        self.problem = text.to_string();
        self
    }

    pub fn with_solution(mut self, text: &str) -> Self {
        self.solution = text.to_string();
        self
    }

    pub fn with_tags<'a>(mut self, tags: impl IntoIterator<Item = &'a str>) -> Self {
        self.tags.extend(tags.into_iter().map(str::to_string));
        self
    }

    /// Panics on malformed fact ids; intended for fixtures and tests.
    pub fn with_resolves<'a>(mut self, facts: impl IntoIterator<Item = &'a str>) -> Self {
        self.resolves.extend(
            facts
                .into_iter()
                .map(|f| FactId::new(f).expect("valid fact id")),
        );
        self
    }
}

/// Types stored as id-keyed maps but serialized as id-sorted arrays.
pub trait Keyed {
    fn key(&self) -> &str;
}

impl Keyed for Pattern {
    fn key(&self) -> &str {
        &self.id
    }
}

impl Keyed for PatternLanguage {
    fn key(&self) -> &str {
        &self.id
    }
}

impl Keyed for Link {
    fn key(&self) -> &str {
        &self.id
    }
}

pub(crate) mod keyed_array {
    use super::Keyed;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};
    use std::collections::BTreeMap;

    pub fn serialize<T, S>(map: &BTreeMap<String, T>, serializer: S) -> Result<S::Ok, S::Error>
    where
        T: Serialize,
        S: Serializer,
    {
        serializer.collect_seq(map.values())
    }

    pub fn deserialize<'de, T, D>(deserializer: D) -> Result<BTreeMap<String, T>, D::Error>
    where
        T: Deserialize<'de> + Keyed,
        D: Deserializer<'de>,
    {
        let items = Vec::<T>::deserialize(deserializer)?;
        let mut map = BTreeMap::new();
        for item in items {
            let key = item.key().to_string();
            if map.insert(key.clone(), item).is_some() {
                return Err(serde::de::Error::custom(format!("duplicate id {key:?}")));
            }
        }
        Ok(map)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatternLanguage {
    pub id: String,
    pub name: String,
    #[serde(default)]
    pub domain_label: String,
    #[serde(with = "keyed_array", default)]
    pub patterns: BTreeMap<String, Pattern>,
    #[serde(with = "keyed_array", default)]
    pub intra_links: BTreeMap<String, Link>,
}

impl PatternLanguage {
    pub fn new(id: &str, name: &str, domain_label: &str) -> Self {
        PatternLanguage {
            id: id.to_string(),
            name: name.to_string(),
            domain_label: domain_label.to_string(),
            patterns: BTreeMap::new(),
            intra_links: BTreeMap::new(),
        }
    }

    pub fn with_pattern(mut self, pattern: Pattern) -> Self {
        self.patterns.insert(pattern.id.clone(), pattern);
        self
    }

    /// Adds an intra-language link between two patterns of this language.
    /// Panics if the ids are malformed; intended for fixtures and tests.
    pub fn with_link(
        mut self,
        id: &str,
        source: &str,
        target: &str,
        semantics: LinkSemantics,
    ) -> Self {
        let link = Link::new(
            id,
            PatternRef::new(&self.id, source).expect("valid source id"),
            PatternRef::new(&self.id, target).expect("valid target id"),
            semantics,
        );
        self.intra_links.insert(link.id.clone(), link);
        self
    }

    pub fn pattern_ref(&self, pattern_id: &str) -> Option<PatternRef> {
        self.patterns
            .contains_key(pattern_id)
            .then(|| PatternRef::new(&self.id, pattern_id).ok())
            .flatten()
    }

    pub fn pattern_refs(&self) -> impl Iterator<Item = PatternRef> + '_ {
        self.patterns
            .keys()
            .filter_map(|p| PatternRef::new(&self.id, p).ok())
    }

    /// Lists every violated language invariant. Empty means the language is
    /// self-consistent.
    pub fn check(&self) -> Vec<Issue> {
        let mut issues = Vec::new();
        if !ids::is_valid(&self.id) {
            issues.push(Issue::new(
                IssueCode::InvalidId,
                &self.id,
                format!("language id {:?} is not a valid identifier", self.id),
            ));
        }
        for (key, pattern) in &self.patterns {
            if key != &pattern.id {
                issues.push(Issue::new(
                    IssueCode::KeyMismatch,
                    key,
                    format!("pattern stored under {key:?} has id {:?}", pattern.id),
                ));
            }
            if !ids::is_valid(&pattern.id) {
                issues.push(Issue::new(
                    IssueCode::InvalidId,
                    &pattern.id,
                    format!(
                        "pattern id {:?} in language {} is not a valid identifier",
                        pattern.id, self.id
                    ),
                ));
            }
        }
        let mut seen = HashMap::new();
        for (key, link) in &self.intra_links {
            if key != &link.id {
                issues.push(Issue::new(
                    IssueCode::KeyMismatch,
                    key,
                    format!("link stored under {key:?} has id {:?}", link.id),
                ));
            }
            issues.extend(check_link_shape(link));
            if link.source.language() != self.id || link.target.language() != self.id {
                issues.push(Issue::new(
                    IssueCode::LanguageMismatch,
                    &link.id,
                    format!(
                        "intra link {} of language {} points outside it ({} -> {})",
                        link.id, self.id, link.source, link.target
                    ),
                ));
            } else {
                let dangling: Vec<_> = [&link.source, &link.target]
                    .into_iter()
                    .filter(|r| !self.patterns.contains_key(r.pattern()))
                    .map(ToString::to_string)
                    .collect();
                if !dangling.is_empty() {
                    issues.push(Issue::new(
                        IssueCode::DanglingEndpoint,
                        &link.id,
                        format!(
                            "link {} has unresolved endpoint(s) {}",
                            link.id,
                            dangling.join(", ")
                        ),
                    ));
                }
            }
            if let Some(first) = seen.insert(link.quad(), &link.id) {
                issues.push(duplicate_link_issue(link, first));
            }
        }
        issues
    }
}

fn check_link_shape(link: &Link) -> Vec<Issue> {
    let mut issues = Vec::new();
    if !ids::is_valid(&link.id) {
        issues.push(Issue::new(
            IssueCode::InvalidId,
            &link.id,
            format!("link id {:?} is not a valid identifier", link.id),
        ));
    }
    if link.source == link.target {
        issues.push(Issue::new(
            IssueCode::SelfLoop,
            &link.id,
            format!("link {} loops on {}", link.id, link.source),
        ));
    }
    if let Err(detail) = link.semantics.check() {
        issues.push(Issue::new(IssueCode::InvalidSemantics, &link.id, detail));
    }
    issues
}

fn duplicate_link_issue(link: &Link, first: &str) -> Issue {
    Issue::new(
        IssueCode::DuplicateLink,
        &link.id,
        format!(
            "link {} repeats {} ({} -> {}, {})",
            link.id,
            first,
            link.source,
            link.target,
            link.semantics.display_label()
        ),
    )
}

/// Cross-language links, kept apart from every language document.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrossLinkRegistry {
    #[serde(with = "keyed_array", default)]
    pub links: BTreeMap<String, Link>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum IssueCode {
    InvalidId,
    KeyMismatch,
    DanglingEndpoint,
    DuplicateLink,
    DuplicateLinkId,
    SelfLoop,
    InvalidSemantics,
    LanguageMismatch,
    SameLanguageCrossLink,
    ViewStale,
    ViewClosure,
    SolutionInvalid,
    SolutionDangling,
    SolutionUnlisted,
    ConcretizationDangling,
}

impl IssueCode {
    pub fn as_str(self) -> &'static str {
        match self {
            IssueCode::InvalidId => "INVALID_ID",
            IssueCode::KeyMismatch => "KEY_MISMATCH",
            IssueCode::DanglingEndpoint => "DANGLING_ENDPOINT",
            IssueCode::DuplicateLink => "DUPLICATE_LINK",
            IssueCode::DuplicateLinkId => "DUPLICATE_LINK_ID",
            IssueCode::SelfLoop => "SELF_LOOP",
            IssueCode::InvalidSemantics => "INVALID_SEMANTICS",
            IssueCode::LanguageMismatch => "LANGUAGE_MISMATCH",
            IssueCode::SameLanguageCrossLink => "SAME_LANGUAGE_CROSS_LINK",
            IssueCode::ViewStale => "VIEW_STALE",
            IssueCode::ViewClosure => "VIEW_CLOSURE",
            IssueCode::SolutionInvalid => "SOLUTION_INVALID",
            IssueCode::SolutionDangling => "SOLUTION_DANGLING",
            IssueCode::SolutionUnlisted => "SOLUTION_UNLISTED",
            IssueCode::ConcretizationDangling => "CONCRETIZATION_DANGLING",
        }
    }
}

impl fmt::Display for IssueCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One violated invariant, naming the offending entity.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Issue {
    pub code: IssueCode,
    pub subject: String,
    pub message: String,
}

impl Issue {
    pub fn new(code: IssueCode, subject: &str, message: String) -> Self {
        Issue {
            code,
            subject: subject.to_string(),
            message,
        }
    }
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}: {}", self.code, self.subject, self.message)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub issues: Vec<Issue>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.issues.is_empty()
    }

    pub fn with_code(&self, code: IssueCode) -> impl Iterator<Item = &Issue> {
        self.issues.iter().filter(move |i| i.code == code)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.issues.is_empty() {
            return f.write_str("OK");
        }
        for (i, issue) in self.issues.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{issue}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AtlasError {
    #[error("language {0} already exists")]
    DuplicateLanguageId(String),
    #[error("invalid language: {}", join_issues(.0))]
    InvalidLanguage(Vec<Issue>),
    #[error("unknown language {0}")]
    UnknownLanguage(String),
    #[error("unknown pattern {0}")]
    UnknownPattern(PatternRef),
    #[error("unknown link endpoint {0}")]
    UnknownEndpoint(PatternRef),
    #[error("cross link {0} connects two patterns of the same language")]
    SameLanguageEndpoints(String),
    #[error("link {0} duplicates an existing link")]
    DuplicateLink(String),
    #[error("invalid link {id}: {detail}")]
    InvalidLink { id: String, detail: String },
}

fn join_issues(issues: &[Issue]) -> String {
    issues
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Direction {
    Out,
    In,
    Both,
}

impl FromStr for Direction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "out" => Ok(Direction::Out),
            "in" => Ok(Direction::In),
            "both" => Ok(Direction::Both),
            _ => Err(format!("unknown direction {s:?}")),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Atlas {
    pub(crate) languages: BTreeMap<String, PatternLanguage>,
    pub(crate) cross_links: CrossLinkRegistry,
    pub(crate) views: BTreeMap<String, View>,
    pub(crate) solutions: BTreeMap<String, ConcreteSolution>,
}

impl Atlas {
    pub fn new() -> Self {
        Atlas::default()
    }

    /// Assembles an atlas without checking it. Callers are expected to run
    /// [`Atlas::validate`] before trusting the result.
    pub fn from_parts(
        languages: impl IntoIterator<Item = PatternLanguage>,
        cross_links: CrossLinkRegistry,
        views: impl IntoIterator<Item = View>,
        solutions: impl IntoIterator<Item = ConcreteSolution>,
    ) -> Self {
        Atlas {
            languages: languages.into_iter().map(|l| (l.id.clone(), l)).collect(),
            cross_links,
            views: views.into_iter().map(|v| (v.id.clone(), v)).collect(),
            solutions: solutions.into_iter().map(|s| (s.id.clone(), s)).collect(),
        }
    }

    pub fn languages(&self) -> &BTreeMap<String, PatternLanguage> {
        &self.languages
    }

    pub fn language(&self, id: &str) -> Option<&PatternLanguage> {
        self.languages.get(id)
    }

    pub fn cross_links(&self) -> &CrossLinkRegistry {
        &self.cross_links
    }

    pub fn views(&self) -> &BTreeMap<String, View> {
        &self.views
    }

    pub fn view(&self, id: &str) -> Option<&View> {
        self.views.get(id)
    }

    pub fn solutions(&self) -> &BTreeMap<String, ConcreteSolution> {
        &self.solutions
    }

    pub fn pattern(&self, at: &PatternRef) -> Option<&Pattern> {
        self.languages
            .get(at.language())?
            .patterns
            .get(at.pattern())
    }

    pub fn contains_pattern(&self, at: &PatternRef) -> bool {
        self.pattern(at).is_some()
    }

    /// All pattern refs in canonical order.
    pub fn pattern_refs(&self) -> Vec<PatternRef> {
        let mut refs: Vec<_> = self
            .languages
            .values()
            .flat_map(|l| l.pattern_refs())
            .collect();
        refs.sort();
        refs
    }

    /// Finds a link by id among intra-language and cross-language links.
    pub fn link(&self, id: &str) -> Option<&Link> {
        self.cross_links
            .links
            .get(id)
            .or_else(|| self.languages.values().find_map(|l| l.intra_links.get(id)))
    }

    /// Every link in the atlas, intra and cross, ordered by id.
    pub fn all_links(&self) -> Vec<&Link> {
        let mut links: Vec<&Link> = self
            .languages
            .values()
            .flat_map(|l| l.intra_links.values())
            .chain(self.cross_links.links.values())
            .collect();
        links.sort_by(|a, b| a.id.cmp(&b.id));
        links
    }

    fn link_id_taken(&self, id: &str) -> bool {
        self.link(id).is_some()
    }

    pub fn add_language(&self, lang: PatternLanguage) -> Result<Atlas, AtlasError> {
        if self.languages.contains_key(&lang.id) {
            return Err(AtlasError::DuplicateLanguageId(lang.id));
        }
        let mut issues = lang.check();
        for id in lang.intra_links.keys() {
            if self.link_id_taken(id) {
                issues.push(Issue::new(
                    IssueCode::DuplicateLinkId,
                    id,
                    format!("link id {id} is already used in the atlas"),
                ));
            }
        }
        if !issues.is_empty() {
            return Err(AtlasError::InvalidLanguage(issues));
        }
        let mut next = self.clone();
        next.languages.insert(lang.id.clone(), lang);
        Ok(next)
    }

    /// Drops a language document. Cross links, views and solutions that
    /// reference it are left as they are; [`Atlas::validate`] reports them.
    pub fn remove_language(&self, id: &str) -> Result<Atlas, AtlasError> {
        let mut next = self.clone();
        next.languages
            .remove(id)
            .ok_or_else(|| AtlasError::UnknownLanguage(id.to_string()))?;
        Ok(next)
    }

    pub fn add_cross_link(&self, link: Link) -> Result<Atlas, AtlasError> {
        if let Some(issue) = check_link_shape(&link).into_iter().next() {
            return Err(AtlasError::InvalidLink {
                id: link.id,
                detail: issue.message,
            });
        }
        for end in [&link.source, &link.target] {
            if !self.contains_pattern(end) {
                return Err(AtlasError::UnknownEndpoint(end.clone()));
            }
        }
        if !link.is_cross_language() {
            return Err(AtlasError::SameLanguageEndpoints(link.id));
        }
        if self.link_id_taken(&link.id)
            || self
                .cross_links
                .links
                .values()
                .any(|l| l.quad() == link.quad())
        {
            return Err(AtlasError::DuplicateLink(link.id));
        }
        let mut next = self.clone();
        next.cross_links.links.insert(link.id.clone(), link);
        Ok(next)
    }

    /// Links incident to `at`, ordered by link id, each paired with the
    /// pattern at its other end. A link appears at most once even for
    /// [`Direction::Both`].
    pub fn neighbors(
        &self,
        at: &PatternRef,
        direction: Direction,
        filter: Option<&BTreeSet<LinkKind>>,
    ) -> Result<Vec<(&Link, &Pattern)>, AtlasError> {
        let lang = self
            .languages
            .get(at.language())
            .filter(|l| l.patterns.contains_key(at.pattern()))
            .ok_or_else(|| AtlasError::UnknownPattern(at.clone()))?;
        let candidates = lang
            .intra_links
            .values()
            .chain(self.cross_links.links.values());
        let mut out = Vec::new();
        for link in candidates {
            if filter.is_some_and(|kinds| !kinds.contains(&link.semantics.kind)) {
                continue;
            }
            let other = match direction {
                Direction::Out if &link.source == at => &link.target,
                Direction::In if &link.target == at => &link.source,
                Direction::Both if &link.source == at => &link.target,
                Direction::Both if &link.target == at => &link.source,
                _ => continue,
            };
            // Dangling ends are validation failures, not neighbors.
            if let Some(pattern) = self.pattern(other) {
                out.push((link, pattern));
            }
        }
        out.sort_by(|a, b| a.0.id.cmp(&b.0.id));
        Ok(out)
    }

    /// Checks every invariant of the atlas and reports each violation with
    /// the id of the offending entity. Never fails.
    pub fn validate(&self) -> ValidationReport {
        let mut issues = Vec::new();

        for (key, lang) in &self.languages {
            if key != &lang.id {
                issues.push(Issue::new(
                    IssueCode::KeyMismatch,
                    key,
                    format!("language stored under {key:?} has id {:?}", lang.id),
                ));
            }
            issues.extend(lang.check());
        }

        let mut link_owner: HashMap<&str, &str> = HashMap::new();
        for lang in self.languages.values() {
            for id in lang.intra_links.keys() {
                if let Some(prev) = link_owner.insert(id, &lang.id) {
                    issues.push(Issue::new(
                        IssueCode::DuplicateLinkId,
                        id,
                        format!("link id {id} is used by languages {prev} and {}", lang.id),
                    ));
                }
            }
        }

        let mut seen = HashMap::new();
        for (key, link) in &self.cross_links.links {
            if key != &link.id {
                issues.push(Issue::new(
                    IssueCode::KeyMismatch,
                    key,
                    format!("cross link stored under {key:?} has id {:?}", link.id),
                ));
            }
            if let Some(lang) = link_owner.get(link.id.as_str()) {
                issues.push(Issue::new(
                    IssueCode::DuplicateLinkId,
                    &link.id,
                    format!("cross link id {} is also used in language {lang}", link.id),
                ));
            }
            issues.extend(check_link_shape(link));
            if !link.is_cross_language() {
                issues.push(Issue::new(
                    IssueCode::SameLanguageCrossLink,
                    &link.id,
                    format!(
                        "cross link {} stays inside language {}",
                        link.id,
                        link.source.language()
                    ),
                ));
            }
            let dangling: Vec<_> = [&link.source, &link.target]
                .into_iter()
                .filter(|r| !self.contains_pattern(r))
                .map(ToString::to_string)
                .collect();
            if !dangling.is_empty() {
                issues.push(Issue::new(
                    IssueCode::DanglingEndpoint,
                    &link.id,
                    format!(
                        "cross link {} has unresolved endpoint(s) {}",
                        link.id,
                        dangling.join(", ")
                    ),
                ));
            }
            if let Some(first) = seen.insert(link.quad(), &link.id) {
                issues.push(duplicate_link_issue(link, first));
            }
        }

        for view in self.views.values() {
            issues.extend(crate::views::check_view(self, view));
        }

        issues.extend(crate::solutions::check_solutions(self));
        ValidationReport { issues }
    }
}
