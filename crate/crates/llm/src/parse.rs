//! Pure text parsers for model replies: the ambiguity verdict, verbalized
//! confidence percentages, and the yes/no log-probability softmax.

use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::templates::FIXED_LOCATIONS;
use crate::LlmError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParseMode {
    /// `ITEMS:` / `LOCATIONS:` answer-footer lines were found.
    Structured,
    /// Fallback: known option names counted in the free-text reply.
    Heuristic,
}

/// Binary ambiguity verdict plus the choices that produced it.
/// `a_amb = 0` iff exactly one item and exactly one location were chosen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmbiguityVerdict {
    pub a_amb: u8,
    pub items_chosen: Vec<String>,
    pub locations_chosen: Vec<String>,
    pub parse_mode: ParseMode,
}

fn verdict(items: Vec<String>, locations: Vec<String>, parse_mode: ParseMode) -> AmbiguityVerdict {
    let a_amb = u8::from(!(items.len() == 1 && locations.len() == 1));
    AmbiguityVerdict {
        a_amb,
        items_chosen: items,
        locations_chosen: locations,
        parse_mode,
    }
}

/// Normalizes for option-name matching: lowercase, backticks to
/// apostrophes, whitespace runs collapsed.
fn normalize(s: &str) -> String {
    let lowered = s.to_lowercase().replace('`', "'");
    lowered.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn split_list(line: &str) -> Vec<String> {
    line.split(',')
        .map(|s| s.trim().trim_matches(|c| c == '"' || c == '.').trim())
        .filter(|s| !s.is_empty() && !s.eq_ignore_ascii_case("none"))
        .map(str::to_string)
        .collect()
}

fn items_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?im)^\s*items\s*:\s*(.*)$").unwrap())
}

fn locations_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?im)^\s*locations\s*:\s*(.*)$").unwrap())
}

/// The last `TAG:`-line match in the reply, if any.
fn tagged_line<'a>(reply: &'a str, re: &Regex) -> Option<&'a str> {
    re.captures_iter(reply)
        .last()
        .map(|caps| caps.get(1).unwrap().as_str().trim())
}

/// Parses a reply to the ambiguity prompt (plus answer footer) into a
/// verdict.
///
/// Structured mode reads the `ITEMS:` / `LOCATIONS:` footer lines. When no
/// non-empty `ITEMS:` line exists the parser falls back to scanning the
/// reply for known option names: scene objects count as items, and the
/// prompt's four fixed locations count as locations (a scene object already
/// attributed to the item role is not double-counted as a location).
/// If neither mode finds any item the reply is unparseable.
pub fn parse_ambiguity_reply(reply: &str, scene: &[String]) -> Result<AmbiguityVerdict, LlmError> {
    if let Some(items_raw) = tagged_line(reply, items_re()) {
        let items = split_list(items_raw);
        if !items.is_empty() {
            let locations = tagged_line(reply, locations_re())
                .map(split_list)
                .unwrap_or_default();
            return Ok(verdict(items, locations, ParseMode::Structured));
        }
    }

    let haystack = normalize(reply);
    let mut items = Vec::new();
    for name in scene {
        if haystack.contains(&normalize(name)) {
            items.push(name.clone());
        }
    }
    let mut locations = Vec::new();
    for name in FIXED_LOCATIONS {
        if haystack.contains(&normalize(name)) {
            locations.push(name.to_string());
        }
    }
    if items.is_empty() {
        return Err(LlmError::Unparseable(
            "no ITEMS line and no known option name in reply".into(),
        ));
    }
    Ok(verdict(items, locations, ParseMode::Heuristic))
}

fn confidence_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"(?i)confidence\s*[:\]]?[^0-9%]*?(\d+(?:\.\d+)?)\s*%?").unwrap()
    })
}

fn overall_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r#"(?i)overall\s+confidence[^:]*:.*?(\d+(?:\.\d+)?)\s*%?\s*"?\s*$"#).unwrap()
    })
}

fn bare_percent_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^\s*(\d+(?:\.\d+)?)\s*%?\s*$").unwrap())
}

/// Extracts a verbalized confidence from a reply and maps it to [0, 1].
///
/// Lookup order:
/// 1. a multi-step `Overall Confidence` line (the value after the final
///    answer);
/// 2. the first `Confidence: <number>%` pattern, case-insensitive and
///    whitespace-tolerant;
/// 3. a reply that is nothing but a number with optional percent sign (the
///    self-probing prompt asks for exactly that).
pub fn parse_verbalized_confidence(text: &str) -> Result<f64, LlmError> {
    let raw = if let Some(caps) = text
        .lines()
        .rev()
        .find_map(|line| overall_re().captures(line))
    {
        caps[1].to_string()
    } else if let Some(caps) = confidence_re().captures(text) {
        caps[1].to_string()
    } else if let Some(caps) = bare_percent_re().captures(text) {
        caps[1].to_string()
    } else {
        return Err(LlmError::Unparseable(
            "no confidence pattern found".into(),
        ));
    };
    let value: f64 = raw
        .parse()
        .map_err(|_| LlmError::Unparseable(format!("bad confidence number {raw:?}")))?;
    if !(0.0..=100.0).contains(&value) {
        return Err(LlmError::ConfidenceOutOfRange(value));
    }
    Ok(value / 100.0)
}

/// Softmax over two log-probabilities, numerically stable under extreme
/// inputs: `P(yes) = exp(lp_yes) / (exp(lp_yes) + exp(lp_no))`.
pub fn yes_no_confidence(logp_yes: f64, logp_no: f64) -> f64 {
    let m = logp_yes.max(logp_no);
    let ey = (logp_yes - m).exp();
    let en = (logp_no - m).exp();
    ey / (ey + en)
}
