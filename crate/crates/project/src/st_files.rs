use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use stgen_core::syntax::ast::{Comment, Pou, SourceUnit};
use stgen_core::syntax::printer::print_pou;

use crate::gate::{quality_gate, Rejection};

/// An accepted POU plus the generation context recorded in its file header.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub pou: Pou,
    pub task_kind: String,
    pub transcript_id: String,
}

#[derive(Debug, Error)]
pub enum WriteError {
    #[error("duplicate POU name '{0}'")]
    Collision(String),
    #[error("{} POU(s) have errors: {}", .0.len(), .0.iter().map(|r| r.pou.as_str()).collect::<Vec<_>>().join(", "))]
    Rejected(Vec<Rejection>),
    #[error("cannot write '{path}': {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn comment_safe(s: &str) -> String {
    s.replace("*)", "* )").replace("(*", "( *")
}

pub fn header_comment(task_kind: &str, transcript_id: &str) -> Comment {
    Comment::block(format!(
        " generated by stgen; task: {}; transcript: {} ",
        comment_safe(task_kind),
        comment_safe(transcript_id)
    ))
}

/// Canonical text of one artifact, header first.
pub fn render_artifact(a: &Artifact) -> String {
    let mut pou = a.pou.clone();
    pou.comments.insert(0, header_comment(&a.task_kind, &a.transcript_id));
    print_pou(&pou)
}

pub fn file_name(pou: &Pou) -> String {
    format!("{}.st", pou.name.name)
}

/// Write one `<POU>.st` file per artifact. Nothing is written unless every
/// name is unique and the artifacts check clean together.
pub fn write_st_files(artifacts: &[Artifact], dir: &Path) -> Result<Vec<PathBuf>, WriteError> {
    let mut seen = BTreeSet::new();
    for a in artifacts {
        if !seen.insert(a.pou.name.key()) {
            return Err(WriteError::Collision(a.pou.name.name.clone()));
        }
    }
    let unit = SourceUnit {
        pous: artifacts.iter().map(|a| a.pou.clone()).collect(),
        trailing_comments: Vec::new(),
    };
    quality_gate(&unit).map_err(WriteError::Rejected)?;

    fs::create_dir_all(dir).map_err(|source| WriteError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut staged: Vec<(PathBuf, PathBuf)> = Vec::with_capacity(artifacts.len());
    let cleanup = |staged: &[(PathBuf, PathBuf)]| {
        for (tmp, _) in staged {
            let _ = fs::remove_file(tmp);
        }
    };
    for a in artifacts {
        let name = file_name(&a.pou);
        let tmp = dir.join(format!(".{name}.tmp"));
        if let Err(source) = fs::write(&tmp, render_artifact(a)) {
            cleanup(&staged);
            return Err(WriteError::Io { path: tmp, source });
        }
        staged.push((tmp, dir.join(name)));
    }
    let mut written = Vec::with_capacity(staged.len());
    for (i, (tmp, dest)) in staged.iter().enumerate() {
        if let Err(source) = fs::rename(tmp, dest) {
            cleanup(&staged[i..]);
            for done in &written {
                let _ = fs::remove_file(done);
            }
            return Err(WriteError::Io {
                path: dest.clone(),
                source,
            });
        }
        written.push(dest.clone());
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use stgen_core::syntax::parse_source;

    fn artifact(src: &str) -> Artifact {
        let (unit, d) = parse_source(src);
        assert!(d.is_empty());
        Artifact {
            pou: unit.pous.into_iter().next().unwrap(),
            task_kind: "interlock".into(),
            transcript_id: "run*)1".into(),
        }
    }

    #[test]
    fn header_cannot_close_early() {
        let text = render_artifact(&artifact("PROGRAM P END_PROGRAM"));
        assert!(text.starts_with("(* generated by stgen; task: interlock; transcript: run* )1 *)\n"));
        let (back, d) = parse_source(&text);
        assert!(d.is_empty());
        assert_eq!(back.pous.len(), 1);
    }
}
