//! Parsing of tagged model responses.
//!
//! A well-formed response wraps its reasoning in `<think>...</think>`
//! and its answer in `<answer>...</answer>`, in that order, with exactly
//! one pair of each tag. An optional `<map>...</map>` segment (inside or
//! after the think block) carries a cognitive map in the normative map
//! grammar: a JSON object from category to a list of `[x, y]` integer
//! cells, e.g. `{"chair": [[2, 3]], "table": [[0, 1], [4, 4]]}`.
//!
//! Parsing never fails: malformed input simply yields
//! `well_formed = false`.

use std::collections::BTreeMap;
use std::sync::LazyLock;

use regex::Regex;
use thiserror::Error;

use crate::scene::{GridMap, DEFAULT_MAP_SIZE};

#[derive(Debug, Error, PartialEq)]
pub enum ExtractError {
    #[error("map grammar error: {0}")]
    MapGrammar(String),
    #[error("cell [{x}, {y}] of category {category:?} outside {m}x{m} grid")]
    CellOutOfRange {
        category: String,
        x: i64,
        y: i64,
        m: usize,
    },
    #[error("unparseable choice: {0}")]
    UnparseableChoice(String),
    #[error("no numeral found in answer text")]
    NoNumber,
}

/// A model response split into its tagged segments.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedResponse {
    pub raw: String,
    pub think_text: Option<String>,
    pub map_text: Option<String>,
    pub answer_text: Option<String>,
    pub parsed_map: Option<GridMap>,
    /// True iff exactly one think pair and one answer pair exist, with
    /// the think block closing before the answer block opens.
    pub well_formed: bool,
    /// Whitespace-token count of the think segment; 0 when absent.
    pub think_length: usize,
}

struct TagScan {
    opens: Vec<usize>,
    closes: Vec<usize>,
}

fn scan_tag(raw: &str, name: &str) -> TagScan {
    let open = format!("<{name}>");
    let close = format!("</{name}>");
    let find_all = |needle: &str| -> Vec<usize> {
        let mut out = Vec::new();
        let mut from = 0;
        while let Some(i) = raw[from..].find(needle) {
            out.push(from + i);
            from += i + needle.len();
        }
        out
    };
    TagScan {
        opens: find_all(&open),
        closes: find_all(&close),
    }
}

/// Content of the first `<name>...</name>` pair, if any.
fn first_segment<'a>(raw: &'a str, name: &str, scan: &TagScan) -> Option<(&'a str, usize, usize)> {
    let open = *scan.opens.first()?;
    let start = open + name.len() + 2;
    let close = scan.closes.iter().copied().find(|&c| c >= start)?;
    Some((&raw[start..close], open, close + name.len() + 3))
}

/// Splits a raw response into think / map / answer segments.
///
/// The map segment, when present, is parsed against a grid of
/// [`DEFAULT_MAP_SIZE`]; use [`parse_response_sized`] for other map
/// sizes. Total: every input yields a `ParsedResponse`.
pub fn parse_response(raw: &str) -> ParsedResponse {
    parse_response_sized(raw, DEFAULT_MAP_SIZE)
}

pub fn parse_response_sized(raw: &str, map_size: usize) -> ParsedResponse {
    let think_scan = scan_tag(raw, "think");
    let answer_scan = scan_tag(raw, "answer");
    let map_scan = scan_tag(raw, "map");

    let think = first_segment(raw, "think", &think_scan);
    let answer = first_segment(raw, "answer", &answer_scan);
    let map = first_segment(raw, "map", &map_scan);

    let well_formed = think_scan.opens.len() == 1
        && think_scan.closes.len() == 1
        && answer_scan.opens.len() == 1
        && answer_scan.closes.len() == 1
        && match (&think, &answer) {
            // think block must close before the answer block opens
            (Some((_, _, think_end)), Some((_, answer_start, _))) => think_end <= answer_start,
            _ => false,
        };

    let think_text = think.map(|(s, _, _)| s.to_string());
    let answer_text = answer.map(|(s, _, _)| s.trim().to_string());
    let map_text = map.map(|(s, _, _)| s.to_string());
    let parsed_map = map_text
        .as_deref()
        .and_then(|t| parse_map_text(t, map_size).ok());
    let think_length = think_text
        .as_deref()
        .map_or(0, |t| t.split_whitespace().count());

    ParsedResponse {
        raw: raw.to_string(),
        think_text,
        map_text,
        answer_text,
        parsed_map,
        well_formed,
        think_length,
    }
}

/// Renders segments back into tagged text. Inverse of [`parse_response`]
/// for segment contents that contain no tag markers themselves.
pub fn render_tagged(think: &str, map: Option<&str>, answer: &str) -> String {
    match map {
        Some(m) => format!("<think>{think}</think><map>{m}</map><answer>{answer}</answer>"),
        None => format!("<think>{think}</think><answer>{answer}</answer>"),
    }
}

/// Parses the normative map grammar against an `m`-sized grid.
pub fn parse_map_text(map_text: &str, m: usize) -> Result<GridMap, ExtractError> {
    let raw: BTreeMap<String, Vec<(i64, i64)>> = serde_json::from_str(map_text.trim())
        .map_err(|e| ExtractError::MapGrammar(e.to_string()))?;
    if raw.is_empty() {
        return Err(ExtractError::MapGrammar("empty map".into()));
    }
    let mut cells = BTreeMap::new();
    for (category, list) in raw {
        if category.is_empty() {
            return Err(ExtractError::MapGrammar("empty category key".into()));
        }
        if list.is_empty() {
            return Err(ExtractError::MapGrammar(format!(
                "category {category:?} has no cells"
            )));
        }
        let mut checked = Vec::with_capacity(list.len());
        for (x, y) in list {
            if x < 0 || y < 0 || x as usize >= m || y as usize >= m {
                return Err(ExtractError::CellOutOfRange { category, x, y, m });
            }
            checked.push((x as u32, y as u32));
        }
        cells.insert(category, checked);
    }
    GridMap::new(m, cells).map_err(ExtractError::MapGrammar)
}

static LETTER_TOKEN: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"\b([A-E])\b").expect("static regex"));
static LONE_LETTER: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)^\s*([A-E])[.):,]?\s*$").expect("static regex"));

/// Extracts a multi-choice answer as an option index.
///
/// A unique standalone uppercase option letter (with optional
/// punctuation) decides, as does an answer that is nothing but a single
/// letter in either case; otherwise a unique case-insensitive
/// containment of a full option text decides. Lowercase letters inside
/// longer text are ignored so the article "a" never reads as option A.
/// Multiple conflicting signals are an error, as is no signal at all.
pub fn extract_choice(answer_text: &str, options: &[String]) -> Result<usize, ExtractError> {
    assert!(!options.is_empty(), "options must be non-empty");
    let k = options.len().min(5);
    if let Some(c) = LONE_LETTER.captures(answer_text) {
        let idx = (c[1].chars().next().unwrap().to_ascii_uppercase() as u8 - b'A') as usize;
        if idx < k {
            return Ok(idx);
        }
    }
    let mut letters: Vec<usize> = LETTER_TOKEN
        .captures_iter(answer_text)
        .filter_map(|c| {
            let ch = c[1].chars().next().unwrap();
            let idx = (ch as u8 - b'A') as usize;
            (idx < k).then_some(idx)
        })
        .collect();
    letters.sort_unstable();
    letters.dedup();
    match letters.len() {
        1 => return Ok(letters[0]),
        0 => {}
        _ => {
            return Err(ExtractError::UnparseableChoice(format!(
                "multiple option letters in {answer_text:?}"
            )))
        }
    }

    let haystack = answer_text.to_lowercase();
    let contained: Vec<usize> = options
        .iter()
        .enumerate()
        .filter(|(_, opt)| !opt.is_empty() && haystack.contains(&opt.to_lowercase()))
        .map(|(i, _)| i)
        .collect();
    match contained.len() {
        1 => Ok(contained[0]),
        0 => Err(ExtractError::UnparseableChoice(format!(
            "no option letter or text in {answer_text:?}"
        ))),
        _ => Err(ExtractError::UnparseableChoice(format!(
            "multiple option texts in {answer_text:?}"
        ))),
    }
}

static NUMBER: LazyLock<Regex> = LazyLock::new(|| {
    // thousands-separated first so "1,200" is not read as "1"
    Regex::new(r"[-+]?(?:\d{1,3}(?:,\d{3})+(?:\.\d+)?|\d+(?:\.\d+)?|\.\d+)").expect("static regex")
});

/// Extracts the first decimal numeral, tolerating thousands separators
/// and trailing unit tokens.
pub fn extract_number(answer_text: &str) -> Result<f64, ExtractError> {
    let m = NUMBER.find(answer_text).ok_or(ExtractError::NoNumber)?;
    let cleaned: String = m.as_str().chars().filter(|&c| c != ',').collect();
    cleaned.parse::<f64>().map_err(|_| ExtractError::NoNumber)
}
