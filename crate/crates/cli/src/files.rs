//! Input discovery and artifact writing.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

use scriptsort::CodedText;

pub const IMAGE_EXTS: &[&str] = &["pgm", "pnm", "pbm", "ppm", "png"];
pub const CODED_EXTS: &[&str] = &["json"];

pub fn has_ext(path: &Path, exts: &[&str]) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| exts.iter().any(|x| x.eq_ignore_ascii_case(e)))
}

/// Expands directories (one level, sorted) to files with one of `exts`;
/// explicit file arguments are kept as given.
pub fn collect_inputs(inputs: &[PathBuf], exts: &[&str]) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for input in inputs {
        if input.is_dir() {
            let mut found: Vec<PathBuf> = fs::read_dir(input)
                .with_context(|| format!("listing {}", input.display()))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.is_file() && has_ext(p, exts))
                .collect();
            found.sort();
            out.extend(found);
        } else if input.is_file() {
            out.push(input.clone());
        } else {
            bail!("input {} does not exist", input.display());
        }
    }
    Ok(out)
}

pub fn read_coded(path: &Path) -> Result<CodedText> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let raw: CodedText =
        serde_json::from_str(&text).with_context(|| format!("{} is not coded-text JSON", path.display()))?;
    CodedText::new(raw.doc_id, raw.codes).with_context(|| format!("invalid codes in {}", path.display()))
}

pub fn ensure_unique_ids<'a>(ids: impl IntoIterator<Item = &'a str>) -> Result<()> {
    let mut seen = BTreeSet::new();
    for id in ids {
        if !seen.insert(id) {
            bail!("document id `{id}` occurs more than once");
        }
    }
    Ok(())
}

pub fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

/// `<dir>/<doc_id>.json` and `<dir>/<doc_id>.txt` per document.
pub fn write_coded(dir: &Path, docs: &[CodedText]) -> Result<()> {
    for doc in docs {
        let json = serde_json::to_string(doc)?;
        write_file(&dir.join(format!("{}.json", doc.doc_id)), json + "\n")?;
        write_file(&dir.join(format!("{}.txt", doc.doc_id)), doc.to_digits() + "\n")?;
    }
    Ok(())
}

/// Writes to `path`, or stdout when absent.
pub fn emit(path: Option<&Path>, contents: &str) -> Result<()> {
    match path {
        Some(p) => write_file(p, contents),
        None => {
            use std::io::Write;
            let mut out = std::io::stdout().lock();
            out.write_all(contents.as_bytes())?;
            out.flush()?;
            Ok(())
        }
    }
}
