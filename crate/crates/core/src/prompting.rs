//! Prompt construction and response parsing.
//!
//! Templates live in `templates/*.txt` as plain text with `{name}`
//! placeholders. Parsing is total over arbitrary text: it either returns a
//! rectangular, finite, clamped matrix or a [`ParseError`] that names the
//! offending line.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::objective::ObjectiveSpec;
use crate::pool::Candidate;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptMode {
    Explore,
    Exploit,
    NsgaExplore,
    NsgaExploit,
    Trajectory,
    RandomExplore,
    RandomExploit,
}

impl PromptMode {
    pub const ALL: [PromptMode; 7] = [
        PromptMode::Explore,
        PromptMode::Exploit,
        PromptMode::NsgaExplore,
        PromptMode::NsgaExploit,
        PromptMode::Trajectory,
        PromptMode::RandomExplore,
        PromptMode::RandomExploit,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PromptMode::Explore => "explore",
            PromptMode::Exploit => "exploit",
            PromptMode::NsgaExplore => "nsga_explore",
            PromptMode::NsgaExploit => "nsga_exploit",
            PromptMode::Trajectory => "trajectory",
            PromptMode::RandomExplore => "random_explore",
            PromptMode::RandomExploit => "random_exploit",
        }
    }

    /// Whether the prompt embeds candidate values.
    pub fn needs_context(self) -> bool {
        !matches!(self, PromptMode::RandomExplore | PromptMode::RandomExploit)
    }

    /// True for modes that ask for points far from the context.
    pub fn is_explore(self) -> bool {
        matches!(self, PromptMode::Explore | PromptMode::NsgaExplore | PromptMode::RandomExplore)
    }

    /// Shape of the expected answer.
    pub fn response_format(self) -> ResponseFormat {
        match self {
            PromptMode::NsgaExplore | PromptMode::NsgaExploit => ResponseFormat::FlatList,
            PromptMode::Trajectory => ResponseFormat::TrailingValues,
            _ => ResponseFormat::CsvMatrix,
        }
    }
}

impl fmt::Display for PromptMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PromptMode {
    type Err = CoreError;

    fn from_str(s: &str) -> Result<Self> {
        PromptMode::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| CoreError::Parameter(format!("unknown prompt mode `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResponseFormat {
    CsvMatrix,
    FlatList,
    TrailingValues,
}

const RESEARCHER: &str = "You are an optimization researcher tasked to minimize the value of loss.";
const TRAJECTORY_RESEARCHER: &str = "You are an optimization researcher tasked to minimize the value of function loss";
const ASSISTANT: &str = "You are an intelligent assistant who can understand great technical details.";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptTemplate {
    pub mode: PromptMode,
    /// Identity sentence bound to `{role}`; empty for the random templates.
    pub role_preamble: String,
    pub body: String,
}

impl PromptTemplate {
    pub fn standard(mode: PromptMode) -> Self {
        let (role, body) = match mode {
            PromptMode::Explore => (RESEARCHER, include_str!("../templates/explore.txt")),
            PromptMode::Exploit => (RESEARCHER, include_str!("../templates/exploit.txt")),
            PromptMode::NsgaExplore => (ASSISTANT, include_str!("../templates/nsga_explore.txt")),
            PromptMode::NsgaExploit => (ASSISTANT, include_str!("../templates/nsga_exploit.txt")),
            PromptMode::Trajectory => (TRAJECTORY_RESEARCHER, include_str!("../templates/trajectory.txt")),
            PromptMode::RandomExplore => ("", include_str!("../templates/random_explore.txt")),
            PromptMode::RandomExploit => ("", include_str!("../templates/random_exploit.txt")),
        };
        Self { mode, role_preamble: role.to_string(), body: body.to_string() }
    }

    /// Placeholder names in order of first appearance.
    pub fn placeholders(&self) -> Vec<String> {
        let mut names: Vec<String> = Vec::new();
        for m in placeholder_regex().captures_iter(&self.body) {
            let name = m[1].to_string();
            if !names.contains(&name) {
                names.push(name);
            }
        }
        names
    }

    /// Substitute every placeholder in one pass. Inserted values are never
    /// rescanned, so candidate text cannot inject placeholders.
    pub fn render(&self, bindings: &BTreeMap<&str, String>) -> Result<String> {
        let mut out = String::with_capacity(self.body.len() + 256);
        let mut last = 0;
        for m in placeholder_regex().captures_iter(&self.body) {
            let whole = m.get(0).expect("match");
            let name = &m[1];
            let value = bindings.get(name).ok_or_else(|| {
                CoreError::Parameter(format!("template `{}` has unbound placeholder {{{name}}}", self.mode))
            })?;
            out.push_str(&self.body[last..whole.start()]);
            out.push_str(value);
            last = whole.end();
        }
        out.push_str(&self.body[last..]);
        Ok(out)
    }
}

fn placeholder_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\{([a-z_]+)\}").expect("valid regex"))
}

/// True if `text` still contains a `{name}` token.
pub fn has_residual_placeholder(text: &str) -> bool {
    placeholder_regex().is_match(text)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JitterDistribution {
    Uniform,
    #[default]
    Gaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct JitterPolicy {
    /// Fraction of each dimension's bound range; absolute for unbounded dims.
    pub scale: f64,
    pub distribution: JitterDistribution,
    pub seed: u64,
}

impl Default for JitterPolicy {
    fn default() -> Self {
        Self { scale: 1e-3, distribution: JitterDistribution::Gaussian, seed: 0 }
    }
}

impl JitterPolicy {
    pub fn none() -> Self {
        Self { scale: 0.0, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.scale >= 0.0 && self.scale.is_finite()) {
            return Err(CoreError::Parameter(format!("jitter scale must be non-negative, got {}", self.scale)));
        }
        Ok(())
    }
}

/// Jitter `x` with an RNG seeded from `policy.seed` alone.
pub fn apply_jitter(x: &[f64], policy: &JitterPolicy, spec: &ObjectiveSpec) -> Result<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(policy.seed);
    apply_jitter_with(x, policy, spec, &mut rng)
}

/// Jitter `x` drawing from a caller-owned stream, then clamp into bounds.
pub fn apply_jitter_with<R: Rng + ?Sized>(
    x: &[f64],
    policy: &JitterPolicy,
    spec: &ObjectiveSpec,
    rng: &mut R,
) -> Result<Vec<f64>> {
    policy.validate()?;
    if x.len() != spec.num_vars {
        return Err(CoreError::DimensionMismatch { expected: spec.num_vars, got: x.len() });
    }
    if policy.scale == 0.0 {
        return Ok(x.to_vec());
    }
    let mut out = Vec::with_capacity(x.len());
    for (i, &v) in x.iter().enumerate() {
        let range =
            if spec.lower[i].is_finite() && spec.upper[i].is_finite() { spec.upper[i] - spec.lower[i] } else { 1.0 };
        let a = policy.scale * range;
        let delta = match policy.distribution {
            JitterDistribution::Uniform => rng.random_range(-a..=a),
            JitterDistribution::Gaussian => Normal::new(0.0, a).expect("finite positive std").sample(rng),
        };
        out.push(v + delta);
    }
    Ok(spec.clamp(&out))
}

/// A rendered prompt plus the jittered context rows it displays.
#[derive(Debug, Clone, PartialEq)]
pub struct BuiltPrompt {
    pub mode: PromptMode,
    pub text: String,
    pub context: Vec<Candidate>,
}

/// Render `template` for `pool_view`. The caller orders `pool_view`; rows are
/// shown in that order with jittered variables and unjittered losses.
pub fn build_prompt<R: Rng + ?Sized>(
    template: &PromptTemplate,
    pool_view: &[Candidate],
    spec: &ObjectiveSpec,
    jitter: &JitterPolicy,
    num_candidates: usize,
    rng: &mut R,
) -> Result<BuiltPrompt> {
    jitter.validate()?;
    if num_candidates == 0 {
        return Err(CoreError::Parameter("num_candidates must be positive".into()));
    }
    let mode = template.mode;
    if mode.needs_context() && pool_view.is_empty() {
        return Err(CoreError::Parameter(format!("{mode} prompt needs at least one context candidate")));
    }
    let mut context = Vec::new();
    if mode.needs_context() {
        for c in pool_view {
            if !c.is_evaluated() {
                return Err(CoreError::Unevaluated { iteration: c.iteration_born });
            }
            if c.f.len() < spec.num_objectives {
                return Err(CoreError::DimensionMismatch { expected: spec.num_objectives, got: c.f.len() });
            }
            let x = apply_jitter_with(&c.x, jitter, spec, rng)?;
            context.push(Candidate { x, ..c.clone() });
        }
    }

    let n = spec.num_vars;
    let mut b: BTreeMap<&str, String> = BTreeMap::new();
    b.insert("role", template.role_preamble.clone());
    b.insert("num_vars", n.to_string());
    b.insert("num_candidates", num_candidates.to_string());
    b.insert("precision", "%.6f".to_string());
    b.insert("bounds", bounds_text(spec));
    b.insert("example_block", example_block(n));
    match mode {
        PromptMode::Explore | PromptMode::Exploit => {
            let names: Vec<String> = (1..=n).map(|i| format!("var{i}")).collect();
            b.insert("var_list", names.join(", "));
            b.insert("header", format!("{}, loss", names.join(", ")));
            let sep = if mode == PromptMode::Explore { "," } else { ", " };
            let rows: Vec<String> = context
                .iter()
                .map(|c| {
                    let mut cells: Vec<String> = c.x.iter().map(|v| format!("{v:.6}")).collect();
                    cells.push(format!("{:.6}", c.value()));
                    cells.join(sep)
                })
                .collect();
            b.insert("candidate_block", rows.join("\n"));
        }
        PromptMode::NsgaExplore | PromptMode::NsgaExploit => {
            let names = nsga_names(n);
            b.insert("var_list", names.join(", "));
            let loss_word = if mode == PromptMode::NsgaExplore { "Loss" } else { "loss" };
            let eq = if mode == PromptMode::NsgaExplore { " =" } else { "=" };
            let lines: Vec<String> = context
                .iter()
                .enumerate()
                .map(|(k, c)| {
                    let vars: Vec<String> = names.iter().zip(&c.x).map(|(nm, v)| format!("{nm}={v:.4}")).collect();
                    format!(
                        "Candidate {}: {}, function {loss_word} f1={:.4}, function {loss_word} f2{eq}{:.4}",
                        k + 1,
                        vars.join(", "),
                        c.f[0],
                        c.f.get(1).copied().unwrap_or(f64::NAN)
                    )
                })
                .collect();
            b.insert("candidate_block", lines.join("\n"));
            let ranges: Vec<String> = names
                .iter()
                .enumerate()
                .map(|(i, nm)| format!("{}<'{nm}'<{}", spec.search_lower()[i], spec.search_upper()[i]))
                .collect();
            b.insert("var_ranges", join_and(&ranges));
            b.insert("group", if n == 2 { "pairs" } else { "sets" }.to_string());
            b.insert("num_values", (num_candidates * n).to_string());
            let first: Vec<String> = names.iter().map(|nm| format!("{nm}1")).collect();
            let second: Vec<String> = names.iter().map(|nm| format!("{nm}2")).collect();
            let last: Vec<String> = names.iter().map(|nm| format!("{nm}n")).collect();
            b.insert("format_hint", format!("{}, {}, ..., {}", first.join(", "), second.join(", "), last.join(", ")));
        }
        PromptMode::Trajectory => {
            let names: Vec<String> = if n == 1 { vec!["n".into()] } else { (1..=n).map(|i| format!("n{i}")).collect() };
            let var_phrase = join_and(&names);
            let role = if n == 1 {
                format!("{}.", template.role_preamble)
            } else {
                format!("{} with {} input variables {var_phrase}.", template.role_preamble, count_word(n))
            };
            b.insert("role", role);
            b.insert("var_count", if n == 1 { "1 variable".into() } else { format!("{n} variables") });
            b.insert("var_list", names.join(", "));
            b.insert(
                "request_phrase",
                match n {
                    1 => "(n) value".to_string(),
                    2 => format!("({}) pair value", names.join(", ")),
                    _ => format!("({}) values", names.join(", ")),
                },
            );
            b.insert("var_phrase", var_phrase);
            b.insert(
                "output_phrase",
                if n == 1 {
                    "just a numerical value for next variable".to_string()
                } else {
                    format!("{} numerical values for ({}) only", count_word(n), names.join(", "))
                },
            );
            let lines: Vec<String> = context
                .iter()
                .map(|c| {
                    let vars: Vec<String> = names.iter().zip(&c.x).map(|(nm, v)| format!("{nm}={v:.5}")).collect();
                    format!("candidate: {}; loss: {:.5}", vars.join(", "), c.value())
                })
                .collect();
            b.insert("candidate_block", lines.join("\n"));
        }
        PromptMode::RandomExplore | PromptMode::RandomExploit => {}
    }
    let text = template.render(&b)?;
    Ok(BuiltPrompt { mode, text, context })
}

fn nsga_names(n: usize) -> Vec<String> {
    if n <= 26 {
        (0..n).map(|i| ((b'a' + i as u8) as char).to_string()).collect()
    } else {
        (1..=n).map(|i| format!("x{i}")).collect()
    }
}

fn join_and(items: &[String]) -> String {
    match items {
        [] => String::new(),
        [one] => one.clone(),
        [init @ .., last] => format!("{} and {last}", init.join(", ")),
    }
}

fn count_word(n: usize) -> String {
    const WORDS: [&str; 11] = ["zero", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten"];
    WORDS.get(n).map(|w| w.to_string()).unwrap_or_else(|| n.to_string())
}

/// `"-2 and 2"` when every dimension shares the same search box, otherwise a
/// per-variable list.
pub fn bounds_text(spec: &ObjectiveSpec) -> String {
    let lo = spec.search_lower();
    let hi = spec.search_upper();
    if lo.iter().all(|v| *v == lo[0]) && hi.iter().all(|v| *v == hi[0]) {
        format!("{} and {}", lo[0], hi[0])
    } else {
        let parts: Vec<String> = (0..spec.num_vars).map(|i| format!("var{}: {} and {}", i + 1, lo[i], hi[i])).collect();
        format!("the per-variable limits ({})", parts.join(", "))
    }
}

/// Example rows shown in the exploit and random templates.
pub fn example_block(num_vars: usize) -> String {
    const BASE: [&str; 6] = ["0.8166", "0.1868", "0.6788", "0.0772", "0.1853", "0.3935"];
    let row =
        |r: usize| -> String { (0..num_vars).map(|j| BASE[(2 * r + j) % BASE.len()]).collect::<Vec<_>>().join(", ") };
    format!("{}\n{}\n    ...\n{}", row(0), row(1), row(2))
}

/// Sentence appended to a prompt when the previous answer failed to parse.
pub fn corrective_suffix(mode: PromptMode, rows: usize, cols: usize) -> String {
    match mode.response_format() {
        ResponseFormat::CsvMatrix => format!(
            "\n\nYour previous answer could not be parsed. Reply with exactly {rows} lines of {cols} comma-separated numbers and nothing else."
        ),
        ResponseFormat::FlatList => format!(
            "\n\nYour previous answer could not be parsed. Reply with exactly {} comma-separated numbers and nothing else.",
            rows * cols
        ),
        ResponseFormat::TrailingValues => format!(
            "\n\nYour previous answer could not be parsed. End your answer with exactly {cols} numerical value(s)."
        ),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParsedResponse {
    pub rows: Vec<Vec<f64>>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ParseError {
    #[error("no numeric rows in response")]
    EmptyResponse,
    #[error("line {line}: unparseable token `{token}`")]
    TokenError { line: usize, token: String },
    #[error(
        "line {line}: expected {expected_rows}x{expected_cols} values, found {found_rows} rows / {found_cols} columns"
    )]
    CountMismatch { line: usize, expected_rows: usize, expected_cols: usize, found_rows: usize, found_cols: usize },
}

enum LineKind {
    Blank,
    Numbers(Vec<f64>),
    Text,
    Mixed(String),
}

const TRIM_CHARS: &[char] = &['[', ']', '(', ')', '"', '\'', '`', ';'];

fn classify(line: &str) -> LineKind {
    let tokens: Vec<&str> = line
        .split(|c: char| c == ',' || c.is_whitespace())
        .map(|t| t.trim_matches(TRIM_CHARS))
        .filter(|t| !t.is_empty())
        .collect();
    if tokens.is_empty() {
        return LineKind::Blank;
    }
    let mut numbers = Vec::with_capacity(tokens.len());
    let mut bad = None;
    for t in &tokens {
        match t.parse::<f64>() {
            Ok(v) => numbers.push(v),
            Err(_) => {
                if bad.is_none() {
                    bad = Some(t.to_string());
                }
            }
        }
    }
    match bad {
        None => LineKind::Numbers(numbers),
        Some(_) if numbers.is_empty() => LineKind::Text,
        Some(token) => LineKind::Mixed(token),
    }
}

/// Remove fence lines; returns (line number, text) pairs, 1-based.
fn strip_fences<'a>(raw: &'a str, warnings: &mut Vec<String>) -> Vec<(usize, &'a str)> {
    let mut out = Vec::new();
    let mut stripped = false;
    for (i, line) in raw.lines().enumerate() {
        if line.trim_start().starts_with("```") {
            stripped = true;
        } else {
            out.push((i + 1, line));
        }
    }
    if stripped {
        warnings.push("stripped code fences".into());
    }
    out
}

/// Collect the numeric block: leading prose is dropped, the block ends at the
/// first blank or text-only line after rows have been seen.
fn numeric_block(raw: &str, warnings: &mut Vec<String>) -> std::result::Result<Vec<(usize, Vec<f64>)>, ParseError> {
    let lines = strip_fences(raw, warnings);
    let mut rows: Vec<(usize, Vec<f64>)> = Vec::new();
    let mut dropped_header = false;
    let mut trailing = false;
    for (ln, line) in lines {
        if trailing {
            break;
        }
        match classify(line) {
            LineKind::Blank => {
                if !rows.is_empty() {
                    trailing = true;
                }
            }
            LineKind::Text | LineKind::Mixed(_) if rows.is_empty() => dropped_header = true,
            LineKind::Text => trailing = true,
            LineKind::Mixed(token) => return Err(ParseError::TokenError { line: ln, token }),
            LineKind::Numbers(v) => {
                if let Some(pos) = v.iter().position(|x| !x.is_finite()) {
                    let token = line
                        .split(|c: char| c == ',' || c.is_whitespace())
                        .map(|t| t.trim_matches(TRIM_CHARS))
                        .filter(|t| !t.is_empty())
                        .nth(pos)
                        .unwrap_or("")
                        .to_string();
                    return Err(ParseError::TokenError { line: ln, token });
                }
                rows.push((ln, v));
            }
        }
    }
    if dropped_header {
        warnings.push("dropped leading non-numeric lines".into());
    }
    if trailing {
        let rest = raw.lines().skip(rows.last().map(|r| r.0).unwrap_or(0)).any(|l| {
            let t = l.trim();
            !t.is_empty() && !t.starts_with("```")
        });
        if rest {
            warnings.push("removed trailing text".into());
        }
    }
    Ok(rows)
}

fn clamp_rows(rows: &mut [Vec<f64>], spec: &ObjectiveSpec, warnings: &mut Vec<String>) {
    let mut clamped = 0;
    for row in rows.iter_mut() {
        let c = spec.clamp(row);
        clamped += c.iter().zip(row.iter()).filter(|(a, b)| a != b).count();
        *row = c;
    }
    if clamped > 0 {
        warnings.push(format!("clamped {clamped} values into bounds"));
    }
}

fn check_shape(
    expected_rows: usize,
    expected_cols: usize,
    spec: &ObjectiveSpec,
) -> std::result::Result<(), ParseError> {
    if expected_rows == 0 || expected_cols == 0 || expected_cols != spec.num_vars {
        return Err(ParseError::CountMismatch {
            line: 0,
            expected_rows,
            expected_cols,
            found_rows: 0,
            found_cols: spec.num_vars,
        });
    }
    Ok(())
}

/// Parse a bare CSV matrix of `expected_rows x expected_cols`.
pub fn parse_csv_matrix(
    raw: &str,
    expected_rows: usize,
    expected_cols: usize,
    spec: &ObjectiveSpec,
) -> std::result::Result<ParsedResponse, ParseError> {
    check_shape(expected_rows, expected_cols, spec)?;
    let mut warnings = Vec::new();
    let block = numeric_block(raw, &mut warnings)?;
    if block.is_empty() {
        return Err(ParseError::EmptyResponse);
    }
    if let Some((ln, v)) = block.iter().find(|(_, v)| v.len() != expected_cols) {
        return Err(ParseError::CountMismatch {
            line: *ln,
            expected_rows,
            expected_cols,
            found_rows: block.len(),
            found_cols: v.len(),
        });
    }
    if block.len() != expected_rows {
        let ln = block.get(expected_rows).unwrap_or_else(|| block.last().expect("non-empty")).0;
        return Err(ParseError::CountMismatch {
            line: ln,
            expected_rows,
            expected_cols,
            found_rows: block.len(),
            found_cols: expected_cols,
        });
    }
    let mut rows: Vec<Vec<f64>> = block.into_iter().map(|(_, v)| v).collect();
    clamp_rows(&mut rows, spec, &mut warnings);
    Ok(ParsedResponse { rows, warnings })
}

/// Parse a flat list `a1, b1, a2, b2, ...` (optionally bracketed or split
/// across lines) and reshape it row-major.
pub fn parse_flat_list(
    raw: &str,
    expected_rows: usize,
    expected_cols: usize,
    spec: &ObjectiveSpec,
) -> std::result::Result<ParsedResponse, ParseError> {
    check_shape(expected_rows, expected_cols, spec)?;
    let mut warnings = Vec::new();
    let block = numeric_block(raw, &mut warnings)?;
    if block.is_empty() {
        return Err(ParseError::EmptyResponse);
    }
    let last_line = block.last().expect("non-empty").0;
    let values: Vec<f64> = block.into_iter().flat_map(|(_, v)| v).collect();
    if values.len() != expected_rows * expected_cols {
        return Err(ParseError::CountMismatch {
            line: last_line,
            expected_rows,
            expected_cols,
            found_rows: values.len() / expected_cols,
            found_cols: values.len() % expected_cols,
        });
    }
    let mut rows: Vec<Vec<f64>> = values.chunks(expected_cols).map(|c| c.to_vec()).collect();
    clamp_rows(&mut rows, spec, &mut warnings);
    Ok(ParsedResponse { rows, warnings })
}

fn number_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?").expect("valid regex"))
}

/// Take the last `expected_cols` numbers in free text as a single row.
pub fn parse_trailing_values(
    raw: &str,
    expected_cols: usize,
    spec: &ObjectiveSpec,
) -> std::result::Result<ParsedResponse, ParseError> {
    check_shape(1, expected_cols, spec)?;
    let mut warnings = Vec::new();
    let kept: Vec<(usize, &str)> = strip_fences(raw, &mut warnings);
    let mut found: Vec<(usize, f64)> = Vec::new();
    for (ln, line) in &kept {
        for m in number_regex().find_iter(line) {
            if let Ok(v) = m.as_str().parse::<f64>() {
                found.push((*ln, v));
            }
        }
    }
    if found.is_empty() {
        return Err(ParseError::EmptyResponse);
    }
    if found.len() < expected_cols {
        return Err(ParseError::CountMismatch {
            line: found.last().expect("non-empty").0,
            expected_rows: 1,
            expected_cols,
            found_rows: 1,
            found_cols: found.len(),
        });
    }
    let tail = &found[found.len() - expected_cols..];
    if let Some((ln, _)) = tail.iter().find(|(_, v)| !v.is_finite()) {
        return Err(ParseError::TokenError { line: *ln, token: "non-finite".into() });
    }
    if found.len() > expected_cols || kept.iter().any(|(_, l)| l.chars().any(char::is_alphabetic)) {
        warnings.push("ignored leading text".into());
    }
    let mut rows = vec![tail.iter().map(|(_, v)| *v).collect::<Vec<f64>>()];
    clamp_rows(&mut rows, spec, &mut warnings);
    Ok(ParsedResponse { rows, warnings })
}

/// Dispatch on the response format of `mode`.
pub fn parse_response(
    mode: PromptMode,
    raw: &str,
    expected_rows: usize,
    expected_cols: usize,
    spec: &ObjectiveSpec,
) -> std::result::Result<ParsedResponse, ParseError> {
    match mode.response_format() {
        ResponseFormat::CsvMatrix => parse_csv_matrix(raw, expected_rows, expected_cols, spec),
        ResponseFormat::FlatList => parse_flat_list(raw, expected_rows, expected_cols, spec),
        ResponseFormat::TrailingValues => {
            if expected_rows != 1 {
                return Err(ParseError::CountMismatch {
                    line: 0,
                    expected_rows,
                    expected_cols,
                    found_rows: 1,
                    found_cols: expected_cols,
                });
            }
            parse_trailing_values(raw, expected_cols, spec)
        }
    }
}

/// Render rows the way a compliant model would answer `mode`.
pub fn render_rows(mode: PromptMode, rows: &[Vec<f64>]) -> String {
    match mode.response_format() {
        ResponseFormat::CsvMatrix => rows
            .iter()
            .map(|r| r.iter().map(|v| format!("{v:.6}")).collect::<Vec<_>>().join(", "))
            .collect::<Vec<_>>()
            .join("\n"),
        ResponseFormat::FlatList => {
            let flat: Vec<String> = rows.iter().flatten().map(|v| format!("{v:.6}")).collect();
            format!("[{}]", flat.join(", "))
        }
        ResponseFormat::TrailingValues => {
            rows.first().map(|r| r.iter().map(|v| format!("{v:.6}")).collect::<Vec<_>>().join(", ")).unwrap_or_default()
        }
    }
}
