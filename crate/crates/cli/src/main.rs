use std::collections::{BTreeMap, BTreeSet};
use std::io::Read;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use pattern_atlas::store::{read_document, save_view, to_canonical_json};
use pattern_atlas::{
    create_view, export_graph, induced_view, load_atlas, materialize, realize_path, search, Atlas,
    Context, PatternRef, Scope, SolutionPath, StoreError,
};
use pattern_atlas_service::{
    language_summaries, pattern_detail, run_entry_query, run_plan, scope_links, AppState,
    EntryQuery,
};

#[derive(Parser)]
#[command(name = "atlas", version, about = "Manage and navigate a pattern atlas")]
struct Cli {
    /// Atlas directory.
    #[arg(long, global = true, env = "ATLAS_ROOT", default_value = ".")]
    root: PathBuf,
    /// Print machine-readable JSON.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the atlas for structural problems.
    Validate,
    /// Browse languages and their patterns.
    Language {
        #[command(subcommand)]
        command: LanguageCommand,
    },
    /// List the links of a scope.
    Links {
        #[arg(long, default_value = "atlas")]
        scope: Scope,
    },
    /// Export the graph of a scope.
    Graph {
        #[command(subcommand)]
        command: GraphCommand,
    },
    /// Create and inspect views.
    View {
        #[command(subcommand)]
        command: ViewCommand,
    },
    /// Entry-point queries.
    Entry {
        #[command(subcommand)]
        command: EntryCommand,
    },
    /// Repeat entry selection until no open problem can be solved.
    Plan(QueryArgs),
    /// Find patterns by tag or text.
    Search {
        query: String,
        #[arg(long, default_value = "atlas")]
        scope: Scope,
    },
    /// Aggregate the solutions selected along a path.
    Realize {
        /// Solution path document.
        #[arg(long)]
        path: PathBuf,
        /// Map from pattern ref to solution id.
        #[arg(long)]
        select: PathBuf,
    },
    /// Run the HTTP service.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        bind: SocketAddr,
    },
}

#[derive(Subcommand)]
enum LanguageCommand {
    List,
    Show {
        id: String,
        /// Show one pattern with its links and solutions.
        #[arg(long)]
        pattern: Option<String>,
    },
}

#[derive(Subcommand)]
enum GraphCommand {
    /// Write the scope as a Graphviz digraph.
    Export {
        #[arg(long, default_value = "atlas")]
        scope: Scope,
        /// Output file; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum ViewCommand {
    Create {
        #[arg(long)]
        name: String,
        /// Member pattern, as `language/pattern`. Repeatable.
        #[arg(long = "pattern", required = true)]
        patterns: Vec<PatternRef>,
        /// Member link id. Repeatable.
        #[arg(long = "link")]
        links: Vec<String>,
        /// Include every link among the member patterns.
        #[arg(long, conflicts_with = "links")]
        induced: bool,
    },
    List,
    Show {
        id: String,
        /// Print the view as a standalone language.
        #[arg(long)]
        materialized: bool,
    },
}

#[derive(Subcommand)]
enum EntryCommand {
    /// Find the entry pattern solving the most open problems.
    Find(QueryArgs),
}

#[derive(Args)]
struct QueryArgs {
    /// Context document, or `-` for standard input.
    #[arg(long)]
    context: String,
    #[arg(long, default_value = "atlas")]
    scope: Scope,
    #[arg(long)]
    max_len: Option<usize>,
    /// Allow CONCRETIZES links as path steps.
    #[arg(long)]
    include_concretizes: bool,
}

enum Failure {
    Domain(String),
    Usage(String),
}

impl From<StoreError> for Failure {
    fn from(e: StoreError) -> Self {
        Failure::Domain(format!("{}: {e}", e.code()))
    }
}

macro_rules! domain {
    ($e:expr) => {
        $e.map_err(|e| Failure::Domain(format!("{}: {e}", e.code())))
    };
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Domain(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn emit<T: Serialize>(json: bool, value: &T, human: impl FnOnce() -> String) {
    if json {
        print!("{}", to_canonical_json(value));
    } else {
        println!("{}", human());
    }
}

fn read_context(source: &str) -> Result<Context, Failure> {
    if source == "-" {
        let mut text = String::new();
        std::io::stdin()
            .read_to_string(&mut text)
            .map_err(|e| Failure::Usage(format!("cannot read standard input: {e}")))?;
        return Ok(pattern_atlas::store::parse_document(
            Path::new("<stdin>"),
            &text,
        )?);
    }
    let path = Path::new(source);
    if !path.is_file() {
        return Err(Failure::Usage(format!(
            "context file {source} does not exist"
        )));
    }
    Ok(read_document(path)?)
}

fn query(args: &QueryArgs) -> Result<EntryQuery, Failure> {
    Ok(EntryQuery {
        scope: args.scope.clone(),
        context: read_context(&args.context)?,
        max_len: args.max_len,
        include_concretizes: args.include_concretizes,
    })
}

fn run(cli: &Cli) -> Result<(), Failure> {
    if let Command::Validate = cli.command {
        return validate(cli);
    }
    let atlas = load_atlas(&cli.root)?;
    match &cli.command {
        Command::Validate => unreachable!(),
        Command::Graph {
            command: GraphCommand::Export { scope, out },
        } => {
            let dot = domain!(export_graph(&atlas, scope))?;
            match out {
                Some(file) => std::fs::write(file, dot)
                    .map_err(|e| Failure::Domain(format!("{}: {e}", file.display())))?,
                None => print!("{dot}"),
            }
        }
        Command::View { command } => view(cli, &atlas, command)?,
        Command::Language { command } => language(cli, &atlas, command)?,
        Command::Links { scope } => {
            let links = domain!(scope_links(&atlas, scope))?;
            emit(cli.json, &links, || {
                links
                    .iter()
                    .map(|l| {
                        format!(
                            "{}\t{} -> {}\t{}",
                            l.id,
                            l.source,
                            l.target,
                            l.semantics.display_label()
                        )
                    })
                    .collect::<Vec<_>>()
                    .join("\n")
            });
        }
        Command::Entry {
            command: EntryCommand::Find(args),
        } => {
            let result = domain!(run_entry_query(&atlas, &query(args)?))?;
            emit(cli.json, &result, || match &result.best {
                None => "no entry point solves an open problem".to_string(),
                Some(best) => {
                    let facts: Vec<_> = best.resolved.iter().map(|f| f.as_str()).collect();
                    format!(
                        "entry: {}\nscore: {}\npath: {}\nresolves: {}",
                        best.entry,
                        best.score,
                        best.path,
                        facts.join(", ")
                    )
                }
            });
        }
        Command::Plan(args) => {
            let plan = domain!(run_plan(&atlas, &query(args)?))?;
            emit(cli.json, &plan, || {
                let mut lines: Vec<String> = plan
                    .rounds
                    .iter()
                    .enumerate()
                    .map(|(i, r)| format!("{}. {} (score {})", i + 1, r.path, r.score))
                    .collect();
                let open: Vec<_> = plan
                    .final_context
                    .negatives()
                    .into_iter()
                    .map(|f| f.to_string())
                    .collect();
                lines.push(if open.is_empty() {
                    "all problems solved".to_string()
                } else {
                    format!("still open: {}", open.join(", "))
                });
                lines.join("\n")
            });
        }
        Command::Search { query, scope } => {
            let hits = domain!(search(&atlas, scope, query))?;
            emit(cli.json, &hits, || {
                hits.iter()
                    .map(|h| format!("{}\t{}", h.score, h.pattern))
                    .collect::<Vec<_>>()
                    .join("\n")
            });
        }
        Command::Realize { path, select } => {
            let path: SolutionPath = read_document(path)?;
            let selection: BTreeMap<PatternRef, String> = read_document(select)?;
            let aggregated = domain!(realize_path(&atlas, &path, &selection))?;
            emit(cli.json, &aggregated, || {
                let mut lines = vec![format!("parts: {}", aggregated.parts.join(", "))];
                lines.extend(
                    aggregated
                        .bindings
                        .iter()
                        .map(|b| format!("{} <- {} ({})", b.consumer, b.producer, b.capability)),
                );
                let provides: Vec<_> = aggregated.provides.iter().cloned().collect();
                lines.push(format!("provides: {}", provides.join(", ")));
                lines.join("\n")
            });
        }
        Command::Serve { bind } => {
            let state = AppState::new(atlas, Some(cli.root.clone()));
            let runtime = tokio::runtime::Runtime::new()
                .map_err(|e| Failure::Domain(format!("cannot start runtime: {e}")))?;
            eprintln!("listening on http://{bind}");
            runtime
                .block_on(pattern_atlas_service::serve(state, *bind))
                .map_err(|e| Failure::Domain(format!("server failed: {e}")))?;
        }
    }
    Ok(())
}

fn validate(cli: &Cli) -> Result<(), Failure> {
    match load_atlas(&cli.root) {
        Ok(atlas) => {
            let report = atlas.validate();
            emit(cli.json, &report, || report.to_string());
            Ok(())
        }
        Err(StoreError::ValidationFailed(report)) => {
            emit(cli.json, &report, || report.to_string());
            Err(Failure::Domain(format!(
                "{} issue(s) found",
                report.issues.len()
            )))
        }
        Err(e) => Err(e.into()),
    }
}

fn view(cli: &Cli, atlas: &Atlas, command: &ViewCommand) -> Result<(), Failure> {
    match command {
        ViewCommand::Create {
            name,
            patterns,
            links,
            induced,
        } => {
            let refs: BTreeSet<PatternRef> = patterns.iter().cloned().collect();
            let link_ids: BTreeSet<String> = if *induced {
                domain!(induced_view(atlas, refs.clone()))?.link_ids
            } else {
                links.iter().cloned().collect()
            };
            let (_, view) = domain!(create_view(atlas, name, refs, link_ids))?;
            save_view(&cli.root, &view)?;
            emit(cli.json, &view, || format!("created view {}", view.id));
        }
        ViewCommand::List => {
            let views: Vec<_> = atlas.views().values().collect();
            emit(cli.json, &views, || {
                views
                    .iter()
                    .map(|v| format!("{}\t{}", v.id, v.name))
                    .collect::<Vec<_>>()
                    .join("\n")
            });
        }
        ViewCommand::Show { id, materialized } => {
            let view = atlas
                .view(id)
                .ok_or_else(|| Failure::Domain(format!("UNKNOWN_VIEW: unknown view {id}")))?;
            if *materialized {
                let lang = domain!(materialize(atlas, view))?;
                print!("{}", to_canonical_json(&lang));
            } else {
                emit(cli.json, view, || {
                    let mut lines = vec![format!("{} ({})", view.name, view.id)];
                    lines.extend(view.pattern_refs.iter().map(|r| format!("  pattern {r}")));
                    lines.extend(view.link_ids.iter().map(|l| format!("  link {l}")));
                    lines.join("\n")
                });
            }
        }
    }
    Ok(())
}

fn language(cli: &Cli, atlas: &Atlas, command: &LanguageCommand) -> Result<(), Failure> {
    match command {
        LanguageCommand::List => {
            let langs = language_summaries(atlas);
            emit(cli.json, &langs, || {
                langs
                    .iter()
                    .map(|l| {
                        format!(
                            "{}\t{}\t{} patterns, {} links",
                            l.id, l.name, l.pattern_count, l.link_count
                        )
                    })
                    .collect::<Vec<_>>()
                    .join("\n")
            });
        }
        LanguageCommand::Show {
            id,
            pattern: Some(pid),
        } => {
            let detail = pattern_detail(atlas, id, pid)
                .map_err(|e| Failure::Domain(format!("{}: {}", e.code, e.message)))?;
            emit(cli.json, &detail, || {
                let p = &detail.pattern;
                let mut lines = vec![format!("{} ({})", p.name, detail.at)];
                for (label, text) in [
                    ("problem", &p.problem),
                    ("context", &p.context_text),
                    ("solution", &p.solution),
                ] {
                    if !text.is_empty() {
                        lines.push(format!("{label}: {text}"));
                    }
                }
                lines.extend(
                    detail
                        .links
                        .iter()
                        .map(|l| format!("  link {} {} -> {}", l.id, l.source, l.target)),
                );
                lines.extend(
                    detail
                        .solutions
                        .iter()
                        .map(|s| format!("  solution {} {}", s.id, s.name)),
                );
                lines.join("\n")
            });
        }
        LanguageCommand::Show { id, pattern: None } => {
            let lang = atlas.language(id).ok_or_else(|| {
                Failure::Domain(format!("UNKNOWN_LANGUAGE: unknown language {id}"))
            })?;
            emit(cli.json, lang, || {
                let mut lines = vec![format!(
                    "{} ({}, {})",
                    lang.name, lang.id, lang.domain_label
                )];
                lines.extend(
                    lang.patterns
                        .values()
                        .map(|p| format!("  pattern {}\t{}", p.id, p.name)),
                );
                lines.extend(lang.intra_links.values().map(|l| {
                    format!(
                        "  link {}\t{} -> {}\t{}",
                        l.id,
                        l.source,
                        l.target,
                        l.semantics.display_label()
                    )
                }));
                lines.join("\n")
            });
        }
    }
    Ok(())
}
