//! The guide's Rust snippets must stay verbatim copies of doc-comment
//! examples, so that every snippet a reader sees in the book is compiled
//! and executed by rustdoc.

use std::fs;
use std::path::{Path, PathBuf};

/// Doc-comment text of one source file: every `//!` and `///` line with the
/// marker and one leading space stripped, trailing whitespace trimmed.
fn doc_comment_lines(source: &str) -> Vec<String> {
    let mut out = Vec::new();
    for line in source.lines() {
        let trimmed = line.trim_start();
        let rest = trimmed
            .strip_prefix("//!")
            .or_else(|| trimmed.strip_prefix("///"));
        if let Some(rest) = rest {
            let rest = rest.strip_prefix(' ').unwrap_or(rest);
            out.push(rest.trim_end().to_string());
        }
    }
    out
}

/// Fenced blocks marked as Rust in one markdown file, as line lists with
/// trailing whitespace trimmed. Only ```rust fences count: plain and
/// other-language fences are not claimed to be runnable Rust.
fn rust_blocks(markdown: &str) -> Vec<Vec<String>> {
    let mut blocks = Vec::new();
    let mut current: Option<Vec<String>> = None;
    for line in markdown.lines() {
        let trimmed = line.trim_start();
        if let Some(block) = current.as_mut() {
            if trimmed.starts_with("```") {
                blocks.push(current.take().expect("block is open"));
            } else {
                block.push(line.trim_end().to_string());
            }
        } else if trimmed == "```rust" {
            current = Some(Vec::new());
        }
    }
    assert!(current.is_none(), "unterminated code fence");
    blocks
}

fn contains_contiguous(haystack: &[String], needle: &[String]) -> bool {
    if needle.is_empty() {
        return true;
    }
    haystack
        .windows(needle.len())
        .any(|w| w.iter().zip(needle).all(|(a, b)| a == b))
}

fn workspace_file(relative: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").join(relative)
}

#[test]
fn every_book_snippet_is_a_doc_test() {
    let src_dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("src");
    let mut doc_lines_by_file = Vec::new();
    for entry in fs::read_dir(&src_dir).expect("read src dir") {
        let path = entry.expect("dir entry").path();
        if path.extension().is_some_and(|e| e == "rs") {
            let text = fs::read_to_string(&path).expect("read source file");
            doc_lines_by_file.push((path, doc_comment_lines(&text)));
        }
    }
    assert!(!doc_lines_by_file.is_empty(), "no sources found");

    let book_src = workspace_file("book/src");
    let mut chapters = 0usize;
    let mut snippets = 0usize;
    for entry in fs::read_dir(&book_src).expect("read book src dir") {
        let path = entry.expect("dir entry").path();
        if !path.extension().is_some_and(|e| e == "md") {
            continue;
        }
        chapters += 1;
        let text = fs::read_to_string(&path).expect("read chapter");
        for block in rust_blocks(&text) {
            snippets += 1;
            let found = doc_lines_by_file
                .iter()
                .any(|(_, lines)| contains_contiguous(lines, &block));
            assert!(
                found,
                "snippet in {} starting with {:?} does not appear in any \
                 doc comment under crates/core/src; update the doc example \
                 or the chapter so they match verbatim",
                path.display(),
                block.first().map(String::as_str).unwrap_or("")
            );
        }
    }
    assert!(chapters >= 9, "expected at least nine chapters, found {chapters}");
    assert!(snippets >= 9, "expected at least nine Rust snippets, found {snippets}");
}

#[test]
fn book_structure_is_complete() {
    let summary =
        fs::read_to_string(workspace_file("book/src/SUMMARY.md")).expect("read SUMMARY.md");
    for chapter in [
        "introduction.md",
        "gauges.md",
        "dual-gauges.md",
        "cones-and-wulff-shapes.md",
        "solution-family.md",
        "discrete-operator.md",
        "integral-identities.md",
        "radial-poincare.md",
        "cli.md",
    ] {
        assert!(summary.contains(chapter), "SUMMARY.md does not list {chapter}");
        assert!(
            workspace_file("book/src").join(chapter).exists(),
            "chapter file {chapter} is missing"
        );
    }
    assert!(workspace_file("book/book.toml").exists(), "book.toml is missing");
}
