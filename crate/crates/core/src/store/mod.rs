//! On-disk atlas layout and canonical JSON documents.
//!
//! ```text
//! <root>/
//!   crosslinks.json        cross-language link registry (required)
//!   languages/<id>.json    one pattern language per file
//!   views/<id>.json        one view per file
//!   solutions/<id>.json    one working solution per file
//!   contexts/<id>.json     optional fact contexts, not part of the atlas
//! ```
//!
//! Every document is UTF-8 JSON with sorted keys, id-sorted entity arrays,
//! two-space indentation and a single trailing newline, so saving a loaded
//! atlas reproduces its files byte for byte.

mod dot;

pub use dot::export_graph;

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;
use thiserror::Error;

use crate::entry::Context;
use crate::model::{Atlas, CrossLinkRegistry, Keyed, PatternLanguage, ValidationReport};
use crate::solutions::ConcreteSolution;
use crate::views::View;

pub const ROOT_ENV: &str = "ATLAS_ROOT";
pub const REGISTRY_FILE: &str = "crosslinks.json";
pub const LANGUAGES_DIR: &str = "languages";
pub const VIEWS_DIR: &str = "views";
pub const SOLUTIONS_DIR: &str = "solutions";
pub const CONTEXTS_DIR: &str = "contexts";

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("{}:{line}:{column}: {detail}", file.display())]
    ParseError {
        file: PathBuf,
        line: usize,
        column: usize,
        detail: String,
    },
    #[error("{}: file name does not match contained id {id:?}", file.display())]
    StemMismatch { file: PathBuf, id: String },
    #[error("atlas failed validation:\n{0}")]
    ValidationFailed(ValidationReport),
    #[error("missing {} in {}", REGISTRY_FILE, .0.display())]
    MissingRegistry(PathBuf),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

impl StoreError {
    pub fn code(&self) -> &'static str {
        match self {
            StoreError::ParseError { .. } => "PARSE_ERROR",
            StoreError::StemMismatch { .. } => "STEM_MISMATCH",
            StoreError::ValidationFailed(_) => "VALIDATION_FAILED",
            StoreError::MissingRegistry(_) => "MISSING_REGISTRY",
            StoreError::Io { .. } => "IO_ERROR",
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> StoreError + '_ {
    move |source| StoreError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Serializes a value in the canonical document form.
pub fn to_canonical_json<T: Serialize + ?Sized>(value: &T) -> String {
    // Going through `Value` sorts object keys.
    let value = serde_json::to_value(value).expect("documents serialize to JSON");
    let mut text = serde_json::to_string_pretty(&value).expect("JSON values always print");
    text.push('\n');
    text
}

pub fn parse_document<T: DeserializeOwned>(file: &Path, text: &str) -> Result<T, StoreError> {
    serde_json::from_str(text).map_err(|e| StoreError::ParseError {
        file: file.to_path_buf(),
        line: e.line(),
        column: e.column(),
        detail: e.to_string(),
    })
}

pub fn read_document<T: DeserializeOwned>(file: &Path) -> Result<T, StoreError> {
    let text = fs::read_to_string(file).map_err(io_err(file))?;
    parse_document(file, &text)
}

pub fn write_document<T: Serialize + ?Sized>(file: &Path, value: &T) -> Result<(), StoreError> {
    if let Some(dir) = file.parent() {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    fs::write(file, to_canonical_json(value)).map_err(io_err(file))
}

pub fn read_context(file: &Path) -> Result<Context, StoreError> {
    read_document(file)
}

pub fn write_context(file: &Path, ctx: &Context) -> Result<(), StoreError> {
    write_document(file, ctx)
}

fn json_files(dir: &Path) -> Result<Vec<PathBuf>, StoreError> {
    if !dir.is_dir() {
        return Ok(Vec::new());
    }
    let mut files = Vec::new();
    for entry in fs::read_dir(dir).map_err(io_err(dir))? {
        let path = entry.map_err(io_err(dir))?.path();
        if path.is_file() && path.extension().is_some_and(|e| e == "json") {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

fn load_entities<T: DeserializeOwned + Keyed>(dir: &Path) -> Result<Vec<T>, StoreError> {
    let mut out = Vec::new();
    for file in json_files(dir)? {
        let entity: T = read_document(&file)?;
        let stem = file
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or_default();
        if stem != entity.key() {
            return Err(StoreError::StemMismatch {
                file,
                id: entity.key().to_string(),
            });
        }
        out.push(entity);
    }
    Ok(out)
}

/// Loads and validates the atlas stored under `root`. Nothing is returned
/// unless every file parses and the assembled atlas validates clean.
pub fn load_atlas(root: &Path) -> Result<Atlas, StoreError> {
    if !root.is_dir() {
        return Err(StoreError::Io {
            path: root.to_path_buf(),
            source: io::Error::new(io::ErrorKind::NotFound, "atlas root is not a directory"),
        });
    }
    let registry_file = root.join(REGISTRY_FILE);
    if !registry_file.is_file() {
        return Err(StoreError::MissingRegistry(root.to_path_buf()));
    }
    let registry: CrossLinkRegistry = read_document(&registry_file)?;
    let languages: Vec<PatternLanguage> = load_entities(&root.join(LANGUAGES_DIR))?;
    let views: Vec<View> = load_entities(&root.join(VIEWS_DIR))?;
    let solutions: Vec<ConcreteSolution> = load_entities(&root.join(SOLUTIONS_DIR))?;
    let atlas = Atlas::from_parts(languages, registry, views, solutions);
    let report = atlas.validate();
    if !report.is_clean() {
        return Err(StoreError::ValidationFailed(report));
    }
    Ok(atlas)
}

fn sync_entities<'a, T: Serialize + Keyed + 'a>(
    dir: &Path,
    entities: impl IntoIterator<Item = &'a T>,
) -> Result<(), StoreError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut keep = Vec::new();
    for entity in entities {
        let file = dir.join(format!("{}.json", entity.key()));
        write_document(&file, entity)?;
        keep.push(file);
    }
    for stale in json_files(dir)? {
        if !keep.contains(&stale) {
            fs::remove_file(&stale).map_err(io_err(&stale))?;
        }
    }
    Ok(())
}

/// Writes the atlas under `root` in canonical form. Entity files that no
/// longer belong to the atlas are removed; `contexts/` is left alone.
pub fn save_atlas(atlas: &Atlas, root: &Path) -> Result<(), StoreError> {
    fs::create_dir_all(root).map_err(io_err(root))?;
    write_document(&root.join(REGISTRY_FILE), atlas.cross_links())?;
    sync_entities(&root.join(LANGUAGES_DIR), atlas.languages().values())?;
    sync_entities(&root.join(VIEWS_DIR), atlas.views().values())?;
    sync_entities(&root.join(SOLUTIONS_DIR), atlas.solutions().values())?;
    Ok(())
}

pub fn save_view(root: &Path, view: &View) -> Result<(), StoreError> {
    write_document(
        &root.join(VIEWS_DIR).join(format!("{}.json", view.id)),
        view,
    )
}

pub fn save_solution(root: &Path, cs: &ConcreteSolution) -> Result<(), StoreError> {
    write_document(
        &root.join(SOLUTIONS_DIR).join(format!("{}.json", cs.id)),
        cs,
    )
}

pub fn save_language(root: &Path, lang: &PatternLanguage) -> Result<(), StoreError> {
    write_document(
        &root.join(LANGUAGES_DIR).join(format!("{}.json", lang.id)),
        lang,
    )
}
