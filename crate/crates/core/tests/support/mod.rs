//! Random atlas construction and brute-force oracles shared by the property
//! tests and the acceptance suite. Nothing here calls the navigation or
//! entry-solver code it is used to check.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use pattern_atlas::{
    Atlas, Context, CrossLinkRegistry, FactId, Link, LinkKind, LinkSemantics, Pattern,
    PatternLanguage, Polarity,
};

pub fn fixtures_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

/// Plain-data description of a random atlas.
#[derive(Debug, Clone)]
pub struct AtlasSpec {
    /// Per pattern: owning language index and resolved fact indices.
    pub patterns: Vec<(usize, BTreeSet<usize>)>,
    /// (source pattern, target pattern, kind selector)
    pub links: Vec<(usize, usize, u8)>,
    /// Polarity per fact index; `true` means negative.
    pub facts: Vec<bool>,
}

pub fn kind_for(selector: u8) -> LinkSemantics {
    match selector % 8 {
        0..=3 => LinkSemantics::co_occurs(),
        4 => LinkSemantics::excludes(),
        5 => LinkSemantics::concretizes(),
        6 => LinkSemantics::other("refines"),
        _ => LinkSemantics::other("uses"),
    }
}

pub fn pattern_ref_text(spec: &AtlasSpec, i: usize) -> String {
    format!("l{}/p{i}", spec.patterns[i].0)
}

/// Builds the atlas, dropping self-loops and duplicate link quadruples.
pub fn build_atlas(spec: &AtlasSpec) -> Atlas {
    let mut langs: BTreeMap<usize, PatternLanguage> = BTreeMap::new();
    for (i, (lang, facts)) in spec.patterns.iter().enumerate() {
        let entry = langs.entry(*lang).or_insert_with(|| {
            PatternLanguage::new(&format!("l{lang}"), &format!("Language {lang}"), "random")
        });
        let mut p = Pattern::new(&format!("p{i}"), &format!("Pattern {i}"));
        p.resolves = facts
            .iter()
            .map(|f| FactId::new(&format!("f{f}")).unwrap())
            .collect();
        entry.patterns.insert(p.id.clone(), p);
    }
    let mut registry = CrossLinkRegistry::default();
    let mut seen = BTreeSet::new();
    for (n, &(s, t, k)) in spec.links.iter().enumerate() {
        if s == t {
            continue;
        }
        let sem = kind_for(k);
        if !seen.insert((s, t, sem.clone())) {
            continue;
        }
        let link = Link::new(
            &format!("k{n:02}"),
            pattern_ref_text(spec, s).parse().unwrap(),
            pattern_ref_text(spec, t).parse().unwrap(),
            sem,
        );
        if link.is_cross_language() {
            registry.links.insert(link.id.clone(), link);
        } else {
            let lang = langs.get_mut(&spec.patterns[s].0).unwrap();
            lang.intra_links.insert(link.id.clone(), link);
        }
    }
    let atlas = Atlas::from_parts(langs.into_values(), registry, [], []);
    assert!(atlas.validate().is_clean(), "{}", atlas.validate());
    atlas
}

pub fn context_of(spec: &AtlasSpec) -> Context {
    let mut ctx = Context::new();
    for (i, negative) in spec.facts.iter().enumerate() {
        let polarity = if *negative {
            Polarity::Negative
        } else {
            Polarity::Positive
        };
        ctx.facts
            .insert(FactId::new(&format!("f{i}")).unwrap(), polarity);
    }
    ctx
}

/// A path in oracle form: canonical step strings and link ids.
pub type RawPath = (Vec<String>, Vec<String>);

/// All simple, conflict-free paths of at most `max_len` steps over every
/// pattern and link of the atlas, found by trying every sequence of
/// distinct patterns rather than by following adjacency.
pub fn brute_force_paths(
    atlas: &Atlas,
    max_len: usize,
    include_concretizes: bool,
) -> BTreeSet<RawPath> {
    let nodes: Vec<String> = atlas
        .languages()
        .values()
        .flat_map(|l| l.patterns.keys().map(move |p| format!("{}/{p}", l.id)))
        .collect();
    let links: Vec<(String, String, LinkKind, String)> = atlas
        .all_links()
        .into_iter()
        .map(|l| {
            (
                l.source.to_string(),
                l.target.to_string(),
                l.semantics.kind,
                l.id.clone(),
            )
        })
        .collect();
    let excluded = |a: &str, b: &str| {
        links.iter().any(|(s, t, k, _)| {
            *k == LinkKind::Excludes && ((s == a && t == b) || (s == b && t == a))
        })
    };
    let steps_between = |a: &str, b: &str| -> Vec<String> {
        links
            .iter()
            .filter(|(s, t, k, _)| {
                s == a
                    && t == b
                    && match k {
                        LinkKind::Excludes => false,
                        LinkKind::Concretizes => include_concretizes,
                        _ => true,
                    }
            })
            .map(|(_, _, _, id)| id.clone())
            .collect()
    };

    let mut sequences: Vec<Vec<String>> = Vec::new();
    let mut stack: Vec<Vec<String>> = nodes.iter().map(|n| vec![n.clone()]).collect();
    while let Some(seq) = stack.pop() {
        if seq.len() < max_len {
            for n in &nodes {
                if !seq.contains(n) {
                    let mut next = seq.clone();
                    next.push(n.clone());
                    stack.push(next);
                }
            }
        }
        sequences.push(seq);
    }

    let mut out = BTreeSet::new();
    for seq in sequences {
        let conflict =
            (0..seq.len()).any(|i| (i + 1..seq.len()).any(|j| excluded(&seq[i], &seq[j])));
        if conflict {
            continue;
        }
        let mut vias: Vec<Vec<String>> = vec![Vec::new()];
        for w in seq.windows(2) {
            let options = steps_between(&w[0], &w[1]);
            vias = vias
                .into_iter()
                .flat_map(|prefix| {
                    options.iter().map(move |id| {
                        let mut v = prefix.clone();
                        v.push(id.clone());
                        v
                    })
                })
                .collect();
        }
        for via in vias {
            out.insert((seq.clone(), via));
        }
    }
    out
}

/// Exhaustive entry search: the highest-scoring path, ties broken by fewer
/// steps, then step refs, then link ids. `None` when nothing scores.
pub fn brute_force_entry(
    atlas: &Atlas,
    ctx: &Context,
    max_len: usize,
) -> Option<(usize, RawPath, BTreeSet<String>)> {
    let negatives: BTreeSet<String> = ctx
        .facts
        .iter()
        .filter(|(_, p)| **p == Polarity::Negative)
        .map(|(f, _)| f.to_string())
        .collect();
    let resolves = |step: &str| -> BTreeSet<String> {
        let at = step.parse().unwrap();
        atlas
            .pattern(&at)
            .unwrap()
            .resolves
            .iter()
            .map(|f| f.to_string())
            .collect()
    };
    let mut best: Option<(usize, RawPath, BTreeSet<String>)> = None;
    for path in brute_force_paths(atlas, max_len, false) {
        let mut covered = BTreeSet::new();
        for step in &path.0 {
            covered.extend(resolves(step));
        }
        let hit: BTreeSet<String> = covered.intersection(&negatives).cloned().collect();
        let score = hit.len();
        let better = match &best {
            None => score > 0,
            Some((s, p, _)) => {
                score > *s
                    || (score == *s && (path.0.len(), &path.0, &path.1) < (p.0.len(), &p.0, &p.1))
            }
        };
        if better {
            best = Some((score, path, hit));
        }
    }
    best
}
