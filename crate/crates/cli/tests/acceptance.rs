//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion
//! and exits non-zero if any criterion fails.

#[path = "../../core/tests/support/mod.rs"]
mod support;

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use rand::rngs::StdRng;
use rand::{RngExt, SeedableRng};
use serde_json::{json, Value};
use tower::ServiceExt;

use pattern_atlas::solutions::aggregate_partial;
use pattern_atlas::store::{read_context, to_canonical_json};
use pattern_atlas::{
    aggregate, create_view, enumerate_paths, find_entry, induced_view, load_atlas, materialize,
    plan_iterative, rank_paths, save_atlas, Atlas, ConcreteSolution, LinkKind, NavOptions,
    PartialAggregate, PatternRef, Scope, SolutionError, ViewError,
};
use pattern_atlas_service::{router, AppState};
use support::{
    brute_force_entry, brute_force_paths, build_atlas, context_of, fixtures_dir, AtlasSpec, RawPath,
};

const SEED: u64 = 0x5eed_a71a5;
const INSTANCES: usize = 200;
const MAX_PATTERNS: usize = 8;
const MAX_LINKS: usize = 10;
const MAX_FACTS: usize = 6;
const ENTRY_MAX_LEN: usize = 5;
const REQUIRED_AGREEMENT: f64 = 1.0;
const ENTRY_BUDGET: Duration = Duration::from_secs(30);
const AGGREGATION_LISTS: usize = 500;
const MAX_PARTS: usize = 4;
const MAX_TAGS: usize = 5;
const CLOSURE_TRIALS: usize = 300;
const FIXTURES: [&str; 2] = ["chain", "cloud-microservices"];
const SESSION_WALK: [&str; 3] = ["ab", "bc", "cd"];

type Outcome = Result<String, String>;
type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);
type BindingTriple = (String, String, String);

fn main() {
    let instances = random_instances();
    let criteria: Vec<Criterion> = vec![
        (
            "entry-solver oracle equivalence",
            Box::new(|| entry_equivalence(&instances)),
        ),
        (
            "entry optimality",
            Box::new(|| entry_optimality(&instances)),
        ),
        (
            "iterative planning",
            Box::new(|| iterative_planning(&instances)),
        ),
        (
            "navigation soundness and completeness",
            Box::new(|| navigation_equivalence(&instances)),
        ),
        ("view identity and closure", Box::new(view_identity)),
        ("aggregation algebra", Box::new(aggregation_algebra)),
        ("persistence round-trip", Box::new(persistence_round_trip)),
        ("service contract", Box::new(service_contract)),
    ];
    let mut failed = 0;
    for (name, check) in &criteria {
        match check() {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name}: {detail}");
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}

fn random_spec(rng: &mut StdRng) -> AtlasSpec {
    let n = rng.random_range(1..=MAX_PATTERNS);
    let facts = rng.random_range(0..=MAX_FACTS);
    let languages = rng.random_range(1..=3);
    let patterns = (0..n)
        .map(|_| {
            let lang = rng.random_range(0..languages);
            let resolved = if facts == 0 {
                BTreeSet::new()
            } else {
                (0..rng.random_range(0..=2))
                    .map(|_| rng.random_range(0..facts))
                    .collect()
            };
            (lang, resolved)
        })
        .collect();
    let links = (0..rng.random_range(0..=MAX_LINKS))
        .map(|_| {
            (
                rng.random_range(0..n),
                rng.random_range(0..n),
                rng.random_range(0..8u8),
            )
        })
        .collect();
    let facts = (0..facts).map(|_| rng.random_bool(0.7)).collect();
    AtlasSpec {
        patterns,
        links,
        facts,
    }
}

fn random_instances() -> Vec<AtlasSpec> {
    let mut rng = StdRng::seed_from_u64(SEED);
    (0..INSTANCES).map(|_| random_spec(&mut rng)).collect()
}

fn raw(steps: &[PatternRef], via: &[String]) -> RawPath {
    (steps.iter().map(|s| s.to_string()).collect(), via.to_vec())
}

fn entry_equivalence(instances: &[AtlasSpec]) -> Outcome {
    let started = Instant::now();
    let opts = NavOptions::with_max_len(ENTRY_MAX_LEN);
    let mut agree = 0;
    let mut nontrivial = 0;
    let mut first_miss = None;
    for (i, spec) in instances.iter().enumerate() {
        let atlas = build_atlas(spec);
        let ctx = context_of(spec);
        let got = find_entry(&atlas, &Scope::atlas(), &ctx, opts).map_err(|e| e.to_string())?;
        let got = got.map(|r| {
            let facts = r
                .resolved
                .iter()
                .map(|f| f.to_string())
                .collect::<BTreeSet<_>>();
            (r.score, raw(&r.path.steps, &r.path.via), facts)
        });
        let want = brute_force_entry(&atlas, &ctx, ENTRY_MAX_LEN);
        nontrivial += usize::from(want.is_some());
        if got == want {
            agree += 1;
        } else if first_miss.is_none() {
            first_miss = Some(format!("instance {i}: got {got:?}, want {want:?}"));
        }
    }
    let elapsed = started.elapsed();
    let rate = agree as f64 / instances.len() as f64;
    let detail = format!(
        "{agree}/{} agree ({nontrivial} with a scoring path), {:.2}s",
        instances.len(),
        elapsed.as_secs_f64()
    );
    if rate < REQUIRED_AGREEMENT {
        return Err(format!("{detail}; {}", first_miss.unwrap_or_default()));
    }
    if elapsed >= ENTRY_BUDGET {
        return Err(format!(
            "{detail}; budget {}s exceeded",
            ENTRY_BUDGET.as_secs()
        ));
    }
    Ok(detail)
}

fn entry_optimality(instances: &[AtlasSpec]) -> Outcome {
    let opts = NavOptions::with_max_len(ENTRY_MAX_LEN);
    let mut checked = 0usize;
    for (i, spec) in instances.iter().enumerate() {
        let atlas = build_atlas(spec);
        let ctx = context_of(spec);
        let selected = find_entry(&atlas, &Scope::atlas(), &ctx, opts)
            .map_err(|e| e.to_string())?
            .map_or(0, |r| r.score);
        let ranked = rank_paths(&atlas, &Scope::atlas(), &ctx, opts).map_err(|e| e.to_string())?;
        // Score recomputed here from pattern data, not taken from the ranking.
        let negatives = ctx.negatives();
        for sp in &ranked {
            let covered: BTreeSet<_> = sp
                .path
                .steps
                .iter()
                .flat_map(|s| atlas.pattern(s).unwrap().resolves.iter().cloned())
                .filter(|f| negatives.contains(f))
                .collect();
            if covered.len() > selected {
                return Err(format!(
                    "instance {i}: path {} scores {} > selected {selected}",
                    sp.path,
                    covered.len()
                ));
            }
            checked += 1;
        }
    }
    Ok(format!(
        "{checked} enumerated paths never beat the selection"
    ))
}

fn iterative_planning(instances: &[AtlasSpec]) -> Outcome {
    let opts = NavOptions::with_max_len(ENTRY_MAX_LEN);
    let mut rounds = 0;
    for (i, spec) in instances.iter().enumerate() {
        let atlas = build_atlas(spec);
        let ctx = context_of(spec);
        let plan =
            plan_iterative(&atlas, &Scope::atlas(), &ctx, opts).map_err(|e| e.to_string())?;
        let limit = ctx.negatives().len();
        if plan.rounds.len() > limit {
            return Err(format!(
                "instance {i}: {} rounds for {limit} negatives",
                plan.rounds.len()
            ));
        }
        // Any single pattern is a valid path, so nothing any pattern resolves may stay negative.
        let still_resolvable: Vec<_> = plan
            .final_context
            .negatives()
            .into_iter()
            .filter(|f| {
                atlas
                    .pattern_refs()
                    .iter()
                    .any(|at| atlas.pattern(at).unwrap().resolves.contains(f))
            })
            .collect();
        if !still_resolvable.is_empty() {
            return Err(format!(
                "instance {i}: {still_resolvable:?} still negative but resolvable"
            ));
        }
        rounds += plan.rounds.len();
    }
    Ok(format!(
        "{} instances, {rounds} rounds in total",
        instances.len()
    ))
}

fn navigation_equivalence(instances: &[AtlasSpec]) -> Outcome {
    let mut paths = 0;
    let mut with_excludes = 0;
    for (i, spec) in instances.iter().enumerate() {
        let atlas = build_atlas(spec);
        if atlas
            .all_links()
            .iter()
            .any(|l| l.semantics.kind == LinkKind::Excludes)
        {
            with_excludes += 1;
        }
        for include_concretizes in [false, true] {
            let opts = NavOptions {
                max_len: ENTRY_MAX_LEN,
                include_concretizes,
            };
            let got: BTreeSet<RawPath> = enumerate_paths(&atlas, &Scope::atlas(), None, opts)
                .map_err(|e| e.to_string())?
                .iter()
                .map(|p| raw(&p.steps, &p.via))
                .collect();
            let want = brute_force_paths(&atlas, ENTRY_MAX_LEN, include_concretizes);
            if got != want {
                let extra: Vec<_> = got.difference(&want).take(3).collect();
                let missing: Vec<_> = want.difference(&got).take(3).collect();
                return Err(format!(
                    "instance {i}: extra {extra:?}, missing {missing:?}"
                ));
            }
            paths += got.len();
        }
    }
    Ok(format!(
        "{} instances x 2 link policies, {paths} paths, {with_excludes} instances with EXCLUDES links",
        instances.len()
    ))
}

fn load_fixture(name: &str) -> Result<Atlas, String> {
    load_atlas(&fixtures_dir().join(name)).map_err(|e| format!("{name}: {e}"))
}

fn view_identity() -> Outcome {
    let mut languages = 0;
    for fixture in FIXTURES {
        let atlas = load_fixture(fixture)?;
        for (lid, lang) in atlas.languages() {
            let refs: BTreeSet<PatternRef> = lang.pattern_refs().collect();
            let view = induced_view(&atlas, refs).map_err(|e| e.to_string())?;
            let mat = materialize(&atlas, &view).map_err(|e| e.to_string())?;
            // Candidate isomorphism: each pattern maps to its qualified copy.
            let image = |pid: &str| format!("{lid}--{pid}");
            if mat.patterns.len() != lang.patterns.len() {
                return Err(format!(
                    "{lid}: {} patterns became {}",
                    lang.patterns.len(),
                    mat.patterns.len()
                ));
            }
            for (pid, p) in &lang.patterns {
                let Some(q) = mat.patterns.get(&image(pid)) else {
                    return Err(format!("{lid}/{pid} has no image"));
                };
                let mut q = q.clone();
                q.id = p.id.clone();
                if &q != p {
                    return Err(format!("{lid}/{pid} changed in the materialized view"));
                }
            }
            let edges = |ls: Vec<(&str, &str, String)>| {
                let mut v: Vec<_> = ls
                    .into_iter()
                    .map(|(s, t, k)| (s.to_string(), t.to_string(), k))
                    .collect();
                v.sort();
                v
            };
            let original = edges(
                lang.intra_links
                    .values()
                    .map(|l| {
                        (
                            l.source.pattern(),
                            l.target.pattern(),
                            format!("{:?}", l.semantics),
                        )
                    })
                    .collect(),
            );
            let mapped: Vec<_> = original
                .iter()
                .map(|(s, t, k)| (image(s), image(t), k.clone()))
                .collect();
            let materialized = edges(
                mat.intra_links
                    .values()
                    .map(|l| {
                        (
                            l.source.pattern(),
                            l.target.pattern(),
                            format!("{:?}", l.semantics),
                        )
                    })
                    .collect(),
            );
            if mapped != materialized {
                return Err(format!("{lid}: link structure differs"));
            }
            languages += 1;
        }
    }

    let mut rng = StdRng::seed_from_u64(SEED ^ 0xc105);
    let (mut rejected, mut accepted) = (0, 0);
    for fixture in FIXTURES {
        let atlas = load_fixture(fixture)?;
        let refs = atlas.pattern_refs();
        let links = atlas.all_links();
        for trial in 0..CLOSURE_TRIALS {
            let chosen: BTreeSet<PatternRef> = refs
                .iter()
                .filter(|_| rng.random_bool(0.6))
                .cloned()
                .collect();
            let chosen_links: Vec<_> = links.iter().filter(|_| rng.random_bool(0.3)).collect();
            let closed = chosen_links
                .iter()
                .all(|l| chosen.contains(&l.source) && chosen.contains(&l.target));
            let ids = chosen_links.iter().map(|l| l.id.clone()).collect();
            match (
                closed,
                create_view(&atlas, &format!("trial {trial}"), chosen, ids),
            ) {
                (true, Ok(_)) => accepted += 1,
                (false, Err(ViewError::ClosureViolation(_))) => rejected += 1,
                (true, Err(e)) => {
                    return Err(format!(
                        "{fixture} trial {trial}: closed view rejected: {e}"
                    ))
                }
                (false, Ok(_)) => {
                    return Err(format!("{fixture} trial {trial}: open view accepted"))
                }
                (false, Err(e)) => return Err(format!("{fixture} trial {trial}: wrong error {e}")),
            }
        }
    }
    Ok(format!(
        "{languages} fixture languages isomorphic; {rejected} closure violations rejected, {accepted} closed views accepted"
    ))
}

fn random_parts(rng: &mut StdRng) -> Vec<ConcreteSolution> {
    let tags: Vec<String> = (0..rng.random_range(1..=MAX_TAGS))
        .map(|t| format!("t{t}"))
        .collect();
    let at: PatternRef = "l/p".parse().unwrap();
    (0..rng.random_range(1..=MAX_PARTS))
        .map(|i| {
            let mut cs = ConcreteSolution::new(&format!("s{i}"), at.clone(), "part", "payload");
            for t in &tags {
                if rng.random_bool(0.35) {
                    cs.provides.insert(t.clone());
                }
                if rng.random_bool(0.35) {
                    cs.requires.insert(t.clone());
                }
            }
            cs
        })
        .collect()
}

/// Bindings and open requirements by direct scan: each requirement binds to
/// the latest earlier part that provides it.
fn oracle_bindings(parts: &[ConcreteSolution]) -> (BTreeSet<BindingTriple>, Vec<(String, String)>) {
    let mut bindings = BTreeSet::new();
    let mut open = Vec::new();
    for (i, part) in parts.iter().enumerate() {
        for cap in &part.requires {
            match parts[..i].iter().rev().find(|p| p.provides.contains(cap)) {
                Some(p) => {
                    bindings.insert((part.id.clone(), cap.clone(), p.id.clone()));
                }
                None => open.push((part.id.clone(), cap.clone())),
            }
        }
    }
    (bindings, open)
}

fn binding_set(agg: &PartialAggregate) -> BTreeSet<BindingTriple> {
    agg.bindings()
        .iter()
        .map(|b| (b.consumer.clone(), b.capability.clone(), b.producer.clone()))
        .collect()
}

fn aggregation_algebra() -> Outcome {
    let mut rng = StdRng::seed_from_u64(SEED ^ 0xa99);
    let mut groupings = 0;
    let mut total_bindings = 0;
    for n in 0..AGGREGATION_LISTS {
        let parts = random_parts(&mut rng);
        let whole = aggregate_partial(&parts).map_err(|e| e.to_string())?;
        let (want, want_open) = oracle_bindings(&parts);
        if binding_set(&whole) != want || whole.open() != want_open.as_slice() {
            return Err(format!("list {n}: bindings differ from the scan"));
        }
        let position = |id: &str| parts.iter().position(|p| p.id == id).unwrap();
        if whole
            .bindings()
            .iter()
            .any(|b| position(&b.producer) >= position(&b.consumer))
        {
            return Err(format!("list {n}: a binding points forward"));
        }
        match aggregate(&parts) {
            Ok(done) if want_open.is_empty() && done.bindings.as_slice() == whole.bindings() => {}
            Err(SolutionError::UnmetRequirement {
                consumer,
                capability,
            }) if want_open.first() == Some(&(consumer.clone(), capability.clone())) => {}
            other => return Err(format!("list {n}: aggregate returned {other:?}")),
        }
        // Every split into three consecutive non-empty groups.
        for i in 1..parts.len() {
            for j in i + 1..parts.len() {
                let a = aggregate_partial(&parts[..i]).unwrap();
                let b = aggregate_partial(&parts[i..j]).unwrap();
                let c = aggregate_partial(&parts[j..]).unwrap();
                let left = a
                    .compose(&b)
                    .and_then(|ab| ab.compose(&c))
                    .map_err(|e| e.to_string())?;
                let right = b
                    .compose(&c)
                    .and_then(|bc| a.compose(&bc))
                    .map_err(|e| e.to_string())?;
                if left != right || left != whole {
                    return Err(format!("list {n}: grouping at {i},{j} changes the result"));
                }
                groupings += 1;
            }
        }
        total_bindings += want.len();
    }
    Ok(format!(
        "{AGGREGATION_LISTS} lists, {total_bindings} bindings match the scan, {groupings} regroupings agree"
    ))
}

fn files_under(root: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path
                    .strip_prefix(root)
                    .unwrap()
                    .to_string_lossy()
                    .into_owned();
                out.insert(rel, std::fs::read(&path).unwrap());
            }
        }
    }
    out
}

fn persistence_round_trip() -> Outcome {
    let mut files = 0;
    for fixture in FIXTURES {
        let atlas = load_fixture(fixture)?;
        let first = tempfile::tempdir().map_err(|e| e.to_string())?;
        let second = tempfile::tempdir().map_err(|e| e.to_string())?;
        save_atlas(&atlas, first.path()).map_err(|e| e.to_string())?;
        let reloaded = load_atlas(first.path()).map_err(|e| e.to_string())?;
        if reloaded != atlas {
            return Err(format!("{fixture}: reloaded atlas differs"));
        }
        save_atlas(&reloaded, second.path()).map_err(|e| e.to_string())?;
        let (a, b) = (files_under(first.path()), files_under(second.path()));
        if a != b {
            return Err(format!("{fixture}: second save is not byte-identical"));
        }
        // Saved entity files also match the committed fixture byte for byte.
        let original = files_under(&fixtures_dir().join(fixture));
        for (rel, bytes) in &a {
            if original.get(rel) != Some(bytes) {
                return Err(format!("{fixture}: {rel} differs from the fixture"));
            }
        }
        files += a.len();
    }
    let cloud = load_fixture("cloud-microservices")?;
    let elb = cloud
        .link("elb-on-aws")
        .ok_or("cloud-microservices lacks the elb-on-aws link")?;
    if elb.semantics.kind != LinkKind::Concretizes || !elb.is_cross_language() {
        return Err("elb-on-aws is not a CONCRETIZES cross link".into());
    }
    let view = cloud
        .view("secure-microservices-in-the-cloud")
        .ok_or("secure microservices view missing")?;
    Ok(format!(
        "{} fixtures, {files} files byte-identical; CONCRETIZES cross link and view {:?} preserved",
        FIXTURES.len(),
        view.name
    ))
}

async fn call(
    app: &Router,
    method: &str,
    uri: &str,
    body: Option<Value>,
) -> Result<(StatusCode, Value), String> {
    let builder = Request::builder().method(method).uri(uri);
    let req = match body {
        Some(b) => builder
            .header("content-type", "application/json")
            .body(Body::from(b.to_string())),
        None => builder.body(Body::empty()),
    }
    .map_err(|e| e.to_string())?;
    let resp = app.clone().oneshot(req).await.map_err(|e| e.to_string())?;
    let status = resp.status();
    let bytes = resp
        .into_body()
        .collect()
        .await
        .map_err(|e| e.to_string())?
        .to_bytes();
    let value = serde_json::from_slice(&bytes).map_err(|e| format!("{uri}: {e}"))?;
    Ok((status, value))
}

fn service_contract() -> Outcome {
    let runtime = tokio::runtime::Runtime::new().map_err(|e| e.to_string())?;
    runtime.block_on(async {
        let root = fixtures_dir().join("cloud-microservices");
        let context_file = root.join("contexts/secure-cloud-services.json");
        let scope = Scope::view("secure-microservices-in-the-cloud");
        let atlas = load_atlas(&root).map_err(|e| e.to_string())?;
        let ctx = read_context(&context_file).map_err(|e| e.to_string())?;

        let library = find_entry(&atlas, &scope, &ctx, NavOptions::default()).map_err(|e| e.to_string())?;
        let library = serde_json::to_value(&library).unwrap();

        let app = router(AppState::new(atlas.clone(), None));
        let (status, served) = call(
            &app,
            "POST",
            "/api/entry-queries",
            Some(json!({ "scope": scope, "context": ctx })),
        )
        .await?;
        if status != StatusCode::OK {
            return Err(format!("entry query returned {status}: {served}"));
        }

        let output = Command::new(env!("CARGO_BIN_EXE_atlas"))
            .arg("--root")
            .arg(&root)
            .args(["--json", "entry", "find", "--scope", &scope.to_string(), "--context"])
            .arg(&context_file)
            .output()
            .map_err(|e| e.to_string())?;
        if !output.status.success() {
            return Err(format!("cli failed: {}", String::from_utf8_lossy(&output.stderr)));
        }
        let cli: Value = serde_json::from_slice(&output.stdout).map_err(|e| e.to_string())?;
        if cli != served {
            return Err("CLI and service entry results differ".into());
        }
        if served["best"] != library {
            return Err("service and library entry results differ".into());
        }
        if library.is_null() {
            return Err("fixture query selected no entry".into());
        }

        let chain = load_fixture("chain")?;
        let chain_ctx = read_context(&fixtures_dir().join("chain/contexts/three-negatives.json")).map_err(|e| e.to_string())?;
        let mut transcripts = Vec::new();
        for _ in 0..2 {
            let app = router(AppState::new(chain.clone(), None));
            let mut transcript = Vec::new();
            let (status, mut state) = call(
                &app,
                "POST",
                "/api/sessions",
                Some(json!({ "scope": "language:chain", "context": chain_ctx, "entry": "chain/a" })),
            )
            .await?;
            if status != StatusCode::CREATED {
                return Err(format!("session start returned {status}: {state}"));
            }
            let id = state["session"]["id"].as_str().unwrap_or_default().to_string();
            transcript.push(strip_volatile(state.clone()));
            for link in SESSION_WALK {
                let (status, next) = call(
                    &app,
                    "POST",
                    &format!("/api/sessions/{id}/steps"),
                    Some(json!({ "link_id": link })),
                )
                .await?;
                if status != StatusCode::OK {
                    return Err(format!("step {link} returned {status}: {next}"));
                }
                state = next;
                transcript.push(strip_volatile(state.clone()));
            }
            let (_, fetched) = call(&app, "GET", &format!("/api/sessions/{id}"), None).await?;
            if strip_volatile(fetched) != strip_volatile(state.clone()) {
                return Err("fetched session differs from last step".into());
            }
            transcripts.push(transcript);
        }
        if transcripts[0] != transcripts[1] {
            return Err("session replays differ".into());
        }
        let last = transcripts[0].last().unwrap();
        if last["current"] != "chain/d" || last["open_negatives"] != json!([]) {
            return Err(format!("walk ended at {} with open {}", last["current"], last["open_negatives"]));
        }
        Ok(format!(
            "CLI, service and library agree on entry {}; {}-step session replay identical; no web UI involved",
            library["entry"],
            SESSION_WALK.len()
        ))
    })
}

fn strip_volatile(mut state: Value) -> Value {
    if let Some(session) = state.get_mut("session").and_then(Value::as_object_mut) {
        for key in ["id", "created_at", "updated_at"] {
            session.remove(key);
        }
    }
    // Canonical text makes key order irrelevant to comparison.
    serde_json::from_str(&to_canonical_json(&state)).unwrap()
}
