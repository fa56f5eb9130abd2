//! Hand-derived golden outputs for the bundled HTML fixtures.

use std::path::{Path, PathBuf};

use tagpag_core::extraction::{extract_html, extract_raw_text, parse_document, BlockReason};

fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/extraction")
}

fn fixture_names() -> Vec<String> {
    let mut names: Vec<String> = std::fs::read_dir(fixture_dir())
        .unwrap()
        .filter_map(|e| {
            let name = e.unwrap().file_name().into_string().unwrap();
            name.strip_suffix(".html").map(str::to_string)
        })
        .collect();
    names.sort();
    names
}

fn read(name: &str, ext: &str) -> String {
    std::fs::read_to_string(fixture_dir().join(format!("{name}.{ext}"))).unwrap()
}

#[test]
fn corpus_has_at_least_ten_fixtures() {
    assert!(fixture_names().len() >= 10);
}

#[test]
fn clean_text_matches_goldens() {
    for name in fixture_names() {
        let html = std::fs::read(fixture_dir().join(format!("{name}.html"))).unwrap();
        let result = extract_html(&html, None);
        let golden = read(&name, "clean.txt");
        assert_eq!(
            result.clean_text,
            golden.trim_end_matches('\n'),
            "fixture {name}"
        );
        for token in read(&name, "forbidden.txt")
            .lines()
            .filter(|l| !l.is_empty())
        {
            assert!(
                !result.clean_text.contains(token),
                "fixture {name}: boilerplate token {token:?} leaked"
            );
        }
    }
}

#[test]
fn article_raw_text_matches_golden() {
    let html = std::fs::read(fixture_dir().join("article_with_nav.html")).unwrap();
    let raw = extract_raw_text(&parse_document(&html, None));
    assert_eq!(
        raw,
        read("article_with_nav", "raw.txt").trim_end_matches('\n')
    );
}

#[test]
fn article_block_decisions() {
    let html = std::fs::read(fixture_dir().join("article_with_nav.html")).unwrap();
    let result = extract_html(&html, None);
    let decisions: Vec<_> = result
        .blocks
        .iter()
        .map(|b| (b.tag.as_str(), b.reason))
        .collect();
    assert_eq!(
        decisions,
        [("p", BlockReason::Kept), ("p", BlockReason::Penalized)]
    );
    assert!(result.blocks[0].char_count >= 180);
}

#[test]
fn hidden_content_never_reaches_raw_text() {
    let html = std::fs::read(fixture_dir().join("scripts_styles.html")).unwrap();
    let result = extract_html(&html, None);
    assert!(!result.raw_text.contains("XQZ"), "{}", result.raw_text);
}

#[test]
fn latin1_fixture_is_decoded_via_meta() {
    let html = std::fs::read(fixture_dir().join("latin1_meta.html")).unwrap();
    assert_eq!(parse_document(&html, None).source_charset(), "windows-1252");
    assert!(!extract_html(&html, None).raw_text.contains('\u{FFFD}'));
}
