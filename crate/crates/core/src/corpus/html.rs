//! Plain-text fallback for raw HTML pages.
//!
//! Tags are stripped, `script`/`style`/`noscript` content is dropped and the
//! page is split into blocks at container elements (`div`, `section`, `nav`,
//! ...). Paragraph-level elements become line breaks inside a block. The
//! block with the most non-whitespace characters is returned.

#[cfg(feature = "fetch")]
use std::path::Path;

#[cfg(feature = "fetch")]
use chrono::Utc;

#[cfg(feature = "fetch")]
use super::Article;
#[cfg(feature = "fetch")]
use crate::error::{Error, Result};

const CONTAINER_TAGS: &[&str] = &[
    "html", "body", "div", "section", "article", "nav", "header", "footer", "aside", "main", "table", "ul", "ol",
    "form", "figure",
];
const BREAK_TAGS: &[&str] = &[
    "p",
    "br",
    "h1",
    "h2",
    "h3",
    "h4",
    "h5",
    "h6",
    "li",
    "blockquote",
    "tr",
    "pre",
];
const SKIP_TAGS: &[&str] = &["script", "style", "noscript", "template", "svg"];

pub fn html_to_text(html: &str) -> String {
    let mut blocks: Vec<String> = vec![String::new()];
    let mut rest = html;
    let mut skipping: Option<String> = None;

    while !rest.is_empty() {
        let Some(lt) = rest.find('<') else {
            if skipping.is_none() {
                push_text(blocks.last_mut().unwrap(), rest);
            }
            break;
        };
        if skipping.is_none() {
            push_text(blocks.last_mut().unwrap(), &rest[..lt]);
        }
        rest = &rest[lt..];
        if rest.starts_with("<!--") {
            rest = rest.find("-->").map_or("", |end| &rest[end + 3..]);
            continue;
        }
        let Some(gt) = rest.find('>') else { break };
        let (closing, name) = tag_name(&rest[1..gt]);
        rest = &rest[gt + 1..];

        if let Some(skip) = &skipping {
            if closing && *skip == name {
                skipping = None;
            }
            continue;
        }
        if !closing && SKIP_TAGS.contains(&name.as_str()) {
            skipping = Some(name);
        } else if CONTAINER_TAGS.contains(&name.as_str()) {
            if !blocks.last().unwrap().trim().is_empty() {
                blocks.push(String::new());
            }
        } else if BREAK_TAGS.contains(&name.as_str()) {
            let block = blocks.last_mut().unwrap();
            if !block.is_empty() && !block.ends_with('\n') {
                block.push('\n');
            }
        }
    }

    blocks
        .into_iter()
        .map(|b| normalize_block(&b))
        .max_by_key(|b| b.chars().filter(|c| !c.is_whitespace()).count())
        .unwrap_or_default()
}

fn tag_name(inner: &str) -> (bool, String) {
    let inner = inner.trim_start();
    let (closing, inner) = match inner.strip_prefix('/') {
        Some(rest) => (true, rest),
        None => (false, inner),
    };
    let name = inner
        .split(|c: char| c.is_whitespace() || c == '/' || c == '>')
        .next()
        .unwrap_or("")
        .to_ascii_lowercase();
    (closing, name)
}

fn push_text(block: &mut String, raw: &str) {
    block.push_str(&decode_entities(raw));
}

fn decode_entities(s: &str) -> String {
    if !s.contains('&') {
        return s.to_string();
    }
    let mut out = String::with_capacity(s.len());
    let mut rest = s;
    while let Some(amp) = rest.find('&') {
        out.push_str(&rest[..amp]);
        rest = &rest[amp..];
        let decoded = rest.find(';').filter(|&semi| semi <= 10).and_then(|semi| {
            let entity = &rest[1..semi];
            let ch = match entity {
                "amp" => Some('&'),
                "lt" => Some('<'),
                "gt" => Some('>'),
                "quot" => Some('"'),
                "apos" | "#39" => Some('\''),
                "nbsp" => Some(' '),
                e if e.starts_with("#x") || e.starts_with("#X") => {
                    u32::from_str_radix(&e[2..], 16).ok().and_then(char::from_u32)
                }
                e if e.starts_with('#') => e[1..].parse().ok().and_then(char::from_u32),
                _ => None,
            };
            ch.map(|c| (c, semi))
        });
        match decoded {
            Some((c, semi)) => {
                out.push(c);
                rest = &rest[semi + 1..];
            }
            None => {
                out.push('&');
                rest = &rest[1..];
            }
        }
    }
    out.push_str(rest);
    out
}

fn normalize_block(block: &str) -> String {
    block
        .lines()
        .map(|line| line.split_whitespace().collect::<Vec<_>>().join(" "))
        .filter(|line| !line.is_empty())
        .collect::<Vec<_>>()
        .join("\n")
}

/// Downloads `url`, stores the raw HTML under `raw_dir/<id>.html` and
/// returns an article built from the extracted text. The publication time
/// comes from an `article:published_time` meta tag when present, otherwise
/// the fetch time.
#[cfg(feature = "fetch")]
pub fn fetch_article(url: &str, source_id: &str, raw_dir: &Path) -> Result<Article> {
    let fetch_err = |reason: String| Error::Fetch {
        url: url.to_string(),
        reason,
    };
    let html = ureq::get(url)
        .call()
        .map_err(|e| fetch_err(e.to_string()))?
        .body_mut()
        .read_to_string()
        .map_err(|e| fetch_err(e.to_string()))?;

    let fetched_at = Utc::now();
    let published_at = meta_content(&html, "article:published_time")
        .and_then(|v| super::parse_timestamp(&v).ok())
        .unwrap_or(fetched_at);
    let title = between(&html, "<title>", "</title>")
        .map(|t| decode_entities(t.trim()))
        .unwrap_or_default();
    let text = html_to_text(&html);
    if text.trim().is_empty() {
        return Err(fetch_err("no text block found".into()));
    }

    let mut article = Article::new(url, source_id, title, text, published_at);
    article.fetched_at = Some(fetched_at);
    std::fs::create_dir_all(raw_dir).map_err(|e| Error::io(raw_dir, e))?;
    let raw_path = raw_dir.join(format!("{}.html", article.id));
    std::fs::write(&raw_path, &html).map_err(|e| Error::io(&raw_path, e))?;
    Ok(article)
}

#[cfg(feature = "fetch")]
fn between<'a>(s: &'a str, open: &str, close: &str) -> Option<&'a str> {
    let start = s.find(open)? + open.len();
    let end = s[start..].find(close)? + start;
    Some(&s[start..end])
}

#[cfg(feature = "fetch")]
fn meta_content(html: &str, property: &str) -> Option<String> {
    let needle = format!("property=\"{property}\"");
    let pos = html.find(&needle)?;
    let tag_start = html[..pos].rfind('<')?;
    let tag_end = pos + html[pos..].find('>')?;
    let tag = &html[tag_start..tag_end];
    let content = tag.find("content=\"")? + "content=\"".len();
    let len = tag[content..].find('"')?;
    Some(tag[content..content + len].to_string())
}
