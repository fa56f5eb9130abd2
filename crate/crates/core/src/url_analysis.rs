//! URL decomposition, tokenization and keyword highlighting.
//!
//! All offsets are byte offsets into the URL string exactly as configured,
//! so a client can mark spans on the string it displays without re-encoding.

use std::ops::Range;

use percent_encoding::percent_decode_str;
use serde::Serialize;
use thiserror::Error;

use crate::config::LabelDef;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum UrlError {
    #[error("URL has no scheme")]
    MissingScheme,
    #[error("URL has no host")]
    MissingHost,
    #[error("invalid port {0:?}")]
    InvalidPort(String),
}

/// Generic-URI decomposition of a URL.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct UrlParts {
    pub scheme: String,
    /// Lowercased host.
    pub host: String,
    pub port: Option<u16>,
    /// Nonempty path segments, percent-decoded.
    pub path_segments: Vec<String>,
    /// Percent-decoded query pairs; a bare key has an empty value.
    pub query_pairs: Vec<(String, String)>,
    pub fragment: Option<String>,
    pub original: String,
    #[serde(skip)]
    ranges: ComponentRanges,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
struct ComponentRanges {
    host: Range<usize>,
    path: Range<usize>,
    query: Option<Range<usize>>,
    fragment: Option<Range<usize>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum UrlComponent {
    Host,
    Path,
    Query,
    Fragment,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct UrlToken {
    pub token: String,
    pub component: UrlComponent,
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HighlightSpan {
    pub start: usize,
    pub end: usize,
    pub keyword: String,
    pub label_key: String,
}

fn decode(s: &str) -> String {
    percent_decode_str(s).decode_utf8_lossy().into_owned()
}

fn valid_scheme(s: &str) -> bool {
    let mut chars = s.chars();
    chars.next().is_some_and(|c| c.is_ascii_alphabetic())
        && chars.all(|c| c.is_ascii_alphanumeric() || matches!(c, '+' | '-' | '.'))
}

/// Splits a URL into scheme, host, port, path, query and fragment.
pub fn parse_url(s: &str) -> Result<UrlParts, UrlError> {
    let colon = s.find(':').ok_or(UrlError::MissingScheme)?;
    let scheme = &s[..colon];
    if !valid_scheme(scheme) {
        return Err(UrlError::MissingScheme);
    }
    let after_scheme = colon + 1;
    if !s[after_scheme..].starts_with("//") {
        return Err(UrlError::MissingHost);
    }
    let auth_start = after_scheme + 2;
    let auth_end = s[auth_start..]
        .find(['/', '?', '#'])
        .map_or(s.len(), |i| auth_start + i);
    let authority = &s[auth_start..auth_end];
    let host_start = auth_start + authority.rfind('@').map_or(0, |i| i + 1);
    let host_port = &s[host_start..auth_end];

    let (host_len, port_str) = if host_port.starts_with('[') {
        match host_port.find(']') {
            Some(close) => {
                let rest = &host_port[close + 1..];
                match rest.strip_prefix(':') {
                    Some(p) => (close + 1, Some(p)),
                    None if rest.is_empty() => (close + 1, None),
                    None => return Err(UrlError::InvalidPort(rest.to_string())),
                }
            }
            None => return Err(UrlError::MissingHost),
        }
    } else {
        match host_port.find(':') {
            Some(i) => (i, Some(&host_port[i + 1..])),
            None => (host_port.len(), None),
        }
    };
    if host_len == 0 {
        return Err(UrlError::MissingHost);
    }
    let port = match port_str {
        None | Some("") => None,
        Some(p) if p.bytes().all(|b| b.is_ascii_digit()) => Some(
            p.parse()
                .map_err(|_| UrlError::InvalidPort(p.to_string()))?,
        ),
        Some(p) => return Err(UrlError::InvalidPort(p.to_string())),
    };
    let host_range = host_start..host_start + host_len;

    let path_end = s[auth_end..]
        .find(['?', '#'])
        .map_or(s.len(), |i| auth_end + i);
    let path_range = auth_end..path_end;
    let (query_range, frag_start) = if s[path_end..].starts_with('?') {
        let q_end = s[path_end..].find('#').map_or(s.len(), |i| path_end + i);
        (Some(path_end + 1..q_end), q_end)
    } else {
        (None, path_end)
    };
    let fragment_range = s[frag_start..]
        .starts_with('#')
        .then(|| frag_start + 1..s.len());

    let path_segments = s[path_range.clone()]
        .split('/')
        .filter(|seg| !seg.is_empty())
        .map(decode)
        .collect();
    let query_pairs = query_range
        .as_ref()
        .map(|r| {
            s[r.clone()]
                .split('&')
                .filter(|p| !p.is_empty())
                .map(|pair| match pair.split_once('=') {
                    Some((k, v)) => (decode(k), decode(v)),
                    None => (decode(pair), String::new()),
                })
                .collect()
        })
        .unwrap_or_default();

    Ok(UrlParts {
        scheme: scheme.to_string(),
        host: s[host_range.clone()].to_lowercase(),
        port,
        path_segments,
        query_pairs,
        fragment: fragment_range.as_ref().map(|r| decode(&s[r.clone()])),
        original: s.to_string(),
        ranges: ComponentRanges {
            host: host_range,
            path: path_range,
            query: query_range,
            fragment: fragment_range,
        },
    })
}

impl UrlParts {
    /// Byte offset just past `scheme://`.
    pub fn authority_start(&self) -> usize {
        self.scheme.len() + 3
    }
}

/// Maximal alphanumeric runs of the host, path, query and fragment, in
/// string order. Percent escapes (`%HH`) separate tokens.
pub fn tokenize_url(parts: &UrlParts) -> Vec<UrlToken> {
    let r = &parts.ranges;
    let components = [
        (UrlComponent::Host, Some(r.host.clone())),
        (UrlComponent::Path, Some(r.path.clone())),
        (UrlComponent::Query, r.query.clone()),
        (UrlComponent::Fragment, r.fragment.clone()),
    ];
    let mut tokens = Vec::new();
    for (component, range) in components {
        let Some(range) = range else { continue };
        tokenize_range(&parts.original, range, component, &mut tokens);
    }
    tokens
}

fn tokenize_range(s: &str, range: Range<usize>, component: UrlComponent, out: &mut Vec<UrlToken>) {
    let bytes = s.as_bytes();
    let mut run: Option<usize> = None;
    let flush = |start: Option<usize>, end: usize, out: &mut Vec<UrlToken>| {
        if let Some(start) = start {
            out.push(UrlToken {
                token: s[start..end].to_lowercase(),
                component,
                start,
                end,
            });
        }
    };
    let mut i = range.start;
    while i < range.end {
        if bytes[i] == b'%'
            && i + 2 < range.end
            && bytes[i + 1].is_ascii_hexdigit()
            && bytes[i + 2].is_ascii_hexdigit()
        {
            flush(run.take(), i, out);
            i += 3;
            continue;
        }
        let c = s[i..].chars().next().expect("char boundary");
        if c.is_alphanumeric() {
            run.get_or_insert(i);
        } else {
            flush(run.take(), i, out);
        }
        i += c.len_utf8();
    }
    flush(run.take(), range.end, out);
}

/// Keyword highlights on a decomposed URL; the scheme is never matched.
pub fn highlight_url(parts: &UrlParts, labels: &[LabelDef]) -> Vec<HighlightSpan> {
    highlight_from(&parts.original, parts.authority_start(), labels)
}

/// Keyword highlights on a string that may not parse as a URL. Matching
/// starts after `://` when present.
pub fn highlight_raw(s: &str, labels: &[LabelDef]) -> Vec<HighlightSpan> {
    let from = s.find("://").map_or(0, |i| i + 3);
    highlight_from(s, from, labels)
}

/// Finds every case-insensitive keyword occurrence at or after `from`, then
/// keeps a non-overlapping subset preferring longer matches, then earlier
/// starts, then earlier labels.
pub fn highlight_from(s: &str, from: usize, labels: &[LabelDef]) -> Vec<HighlightSpan> {
    let hay = s.as_bytes();
    // (start, end, label index, keyword)
    let mut candidates: Vec<(usize, usize, usize, &str)> = Vec::new();
    for (li, label) in labels.iter().enumerate() {
        for kw in &label.keywords {
            let needle = kw.as_bytes();
            if needle.is_empty() || needle.len() > hay.len() {
                continue;
            }
            for start in from..=hay.len() - needle.len() {
                if hay[start..start + needle.len()].eq_ignore_ascii_case(needle) {
                    candidates.push((start, start + needle.len(), li, kw));
                }
            }
        }
    }
    candidates.sort_by(|a, b| {
        (b.1 - b.0)
            .cmp(&(a.1 - a.0))
            .then(a.0.cmp(&b.0))
            .then(a.2.cmp(&b.2))
    });
    let mut kept: Vec<(usize, usize, usize, &str)> = Vec::new();
    for c in candidates {
        if kept.iter().all(|k| c.1 <= k.0 || k.1 <= c.0) {
            kept.push(c);
        }
    }
    kept.sort_by_key(|k| k.0);
    kept.into_iter()
        .map(|(start, end, li, kw)| HighlightSpan {
            start,
            end,
            keyword: kw.to_string(),
            label_key: labels[li].key.clone(),
        })
        .collect()
}

/// Everything the annotation view shows about a task's URL.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct UrlAnalysis {
    /// Absent when the URL could not be decomposed.
    pub parts: Option<UrlParts>,
    /// True when the URL is treated as an opaque string.
    pub opaque: bool,
    pub tokens: Vec<UrlToken>,
    pub highlights: Vec<HighlightSpan>,
}

pub fn analyze_url(url: &str, labels: &[LabelDef]) -> UrlAnalysis {
    match parse_url(url) {
        Ok(parts) => UrlAnalysis {
            tokens: tokenize_url(&parts),
            highlights: highlight_url(&parts, labels),
            parts: Some(parts),
            opaque: false,
        },
        Err(_) => UrlAnalysis {
            parts: None,
            opaque: true,
            tokens: Vec::new(),
            highlights: highlight_raw(url, labels),
        },
    }
}
