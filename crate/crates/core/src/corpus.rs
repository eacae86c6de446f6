//! Post/comment corpus ingestion and verdict mining.
//!
//! Corpus exports are JSONL, one post per line:
//!
//! ```text
//! {"id": "p1", "title": "AITA for ...", "body": "...", "comments": [{"id": "c1", "body": "NTA ..."}]}
//! ```
//!
//! Verdicts are mined from comment bodies with a [`VerdictLexicon`]. A
//! comment that matches both polarities is discarded and counted as
//! ambiguous.

use std::collections::HashSet;
use std::fmt;
use std::io::{BufRead, Write};
use std::path::Path;

use rayon::prelude::*;
use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const DEFAULT_PREFIX: &str = "AITA for";
pub const WIBTA_PREFIX: &str = "WIBTA for";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Comment {
    pub id: String,
    pub post_id: String,
    pub body: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Post {
    pub id: String,
    pub title: String,
    /// Title with the verdict-question prefix removed.
    pub situation: String,
    pub body: String,
    pub comments: Vec<Comment>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Verdict {
    #[serde(rename = "YTA")]
    Yta,
    #[serde(rename = "NTA")]
    Nta,
}

impl Verdict {
    /// Classifier label: YTA is the positive class.
    pub fn label(self) -> u8 {
        match self {
            Verdict::Yta => 1,
            Verdict::Nta => 0,
        }
    }

    pub fn is_yta(self) -> bool {
        self == Verdict::Yta
    }

    pub fn from_label(label: u8) -> Self {
        if label == 1 {
            Verdict::Yta
        } else {
            Verdict::Nta
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Yta => "YTA",
            Verdict::Nta => "NTA",
        })
    }
}

impl std::str::FromStr for Verdict {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "YTA" => Ok(Verdict::Yta),
            "NTA" => Ok(Verdict::Nta),
            other => Err(Error::domain(format!("unknown verdict `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerdictRecord {
    pub comment_id: String,
    pub post_id: String,
    pub verdict: Verdict,
    /// Comment body with every lexicon token removed.
    pub scrubbed_text: String,
}

impl VerdictRecord {
    /// Corpus-wide verdict id, `<post_id>/<comment_id>`. Embedding files for
    /// classifier inputs are keyed by this id.
    pub fn id(&self) -> String {
        verdict_id(&self.post_id, &self.comment_id)
    }
}

pub fn verdict_id(post_id: &str, comment_id: &str) -> String {
    format!("{post_id}/{comment_id}")
}

/// Outcome of matching one comment against the lexicon.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerdictMatch {
    Verdict(Verdict),
    Ambiguous,
    NoVerdict,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct LexiconFile {
    yta: Vec<String>,
    nta: Vec<String>,
}

/// YTA/NTA patterns, matched case-insensitively on whole tokens.
#[derive(Debug, Clone)]
pub struct VerdictLexicon {
    yta_patterns: Vec<String>,
    nta_patterns: Vec<String>,
    yta: Regex,
    nta: Regex,
    scrub: Regex,
}

impl Default for VerdictLexicon {
    fn default() -> Self {
        VerdictLexicon::new(
            ["YTA", "you're the asshole", "you are the asshole"],
            ["NTA", "not the asshole", "not an asshole"],
        )
        .expect("default lexicon is valid")
    }
}

impl VerdictLexicon {
    pub fn new<I, J, S, T>(yta: I, nta: J) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        J: IntoIterator<Item = T>,
        S: Into<String>,
        T: Into<String>,
    {
        let yta_patterns: Vec<String> = yta
            .into_iter()
            .map(Into::into)
            .map(|p| normalize_pattern(&p))
            .collect();
        let nta_patterns: Vec<String> = nta
            .into_iter()
            .map(Into::into)
            .map(|p| normalize_pattern(&p))
            .collect();
        if yta_patterns.is_empty() || nta_patterns.is_empty() {
            return Err(Error::Lexicon("both pattern sets must be non-empty".into()));
        }
        if let Some(p) = yta_patterns.iter().chain(&nta_patterns).find(|p| p.is_empty()) {
            return Err(Error::Lexicon(format!("empty pattern `{p}`")));
        }
        let yta_keys: HashSet<String> = yta_patterns.iter().map(|p| p.to_lowercase()).collect();
        if let Some(p) = nta_patterns
            .iter()
            .find(|p| yta_keys.contains(&p.to_lowercase()))
        {
            return Err(Error::Lexicon(format!(
                "pattern `{p}` appears in both YTA and NTA sets"
            )));
        }

        let yta_alt = alternation(&yta_patterns);
        let nta_alt = alternation(&nta_patterns);
        let compile = |src: String| {
            Regex::new(&src).map_err(|e| Error::Lexicon(format!("bad pattern: {e}")))
        };
        Ok(VerdictLexicon {
            yta: compile(format!("(?i)(?:{yta_alt})"))?,
            nta: compile(format!("(?i)(?:{nta_alt})"))?,
            scrub: compile(format!("(?i)(?:{yta_alt}|{nta_alt})[.,!?:;]*"))?,
            yta_patterns,
            nta_patterns,
        })
    }

    /// Load a lexicon from a TOML file with `yta = [...]` and `nta = [...]`.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file: LexiconFile =
            toml::from_str(&text).map_err(|e| Error::Lexicon(format!("{}: {e}", path.display())))?;
        VerdictLexicon::new(file.yta, file.nta)
    }

    pub fn yta_patterns(&self) -> &[String] {
        &self.yta_patterns
    }

    pub fn nta_patterns(&self) -> &[String] {
        &self.nta_patterns
    }

    pub fn classify(&self, text: &str) -> VerdictMatch {
        match (self.yta.is_match(text), self.nta.is_match(text)) {
            (true, false) => VerdictMatch::Verdict(Verdict::Yta),
            (false, true) => VerdictMatch::Verdict(Verdict::Nta),
            (true, true) => VerdictMatch::Ambiguous,
            (false, false) => VerdictMatch::NoVerdict,
        }
    }

    pub fn contains_token(&self, text: &str) -> bool {
        self.yta.is_match(text) || self.nta.is_match(text)
    }

    /// Remove every lexicon token (plus trailing punctuation) and normalize
    /// whitespace. Repeats until no token remains, since a removal can join
    /// two fragments into a new phrase match.
    pub fn scrub(&self, text: &str) -> String {
        let mut current = normalize_whitespace(text);
        while self.scrub.is_match(&current) {
            current = normalize_whitespace(&self.scrub.replace_all(&current, " "));
        }
        current
    }
}

fn normalize_pattern(p: &str) -> String {
    p.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn alternation(patterns: &[String]) -> String {
    patterns
        .iter()
        .map(|p| pattern_regex(p))
        .collect::<Vec<_>>()
        .join("|")
}

fn pattern_regex(pattern: &str) -> String {
    let body = pattern
        .split(' ')
        .map(|word| {
            word.chars()
                .map(|c| match c {
                    '\'' | '’' => "['’]".to_string(),
                    c => regex::escape(&c.to_string()),
                })
                .collect::<String>()
        })
        .collect::<Vec<_>>()
        .join(r"\s+");
    let is_word = |c: Option<char>| c.is_some_and(|c| c.is_alphanumeric() || c == '_');
    let lead = if is_word(pattern.chars().next()) { r"\b" } else { "" };
    let trail = if is_word(pattern.chars().last()) { r"\b" } else { "" };
    format!("{lead}{body}{trail}")
}

fn normalize_whitespace(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// `rest` after a case-insensitive match of `prefix`, where any run of
/// whitespace in the prefix matches any run of whitespace in the text and the
/// match must end at whitespace or end of text.
fn strip_prefix_words<'t>(text: &'t str, prefix: &str) -> Option<&'t str> {
    let mut rest = text;
    for (k, word) in prefix.split_whitespace().enumerate() {
        if k > 0 {
            let trimmed = rest.trim_start();
            if trimmed.len() == rest.len() {
                return None;
            }
            rest = trimmed;
        }
        let head = rest.get(..word.len())?;
        if !head.eq_ignore_ascii_case(word) {
            return None;
        }
        rest = &rest[word.len()..];
    }
    rest.chars()
        .next()
        .is_none_or(char::is_whitespace)
        .then_some(rest)
}

/// Strip a leading verdict-question prefix (case-insensitive) from a title.
///
/// A prefix only matches when followed by whitespace or the end of the title,
/// so "AITA forgetting" is left alone.
pub fn extract_situation<S: AsRef<str>>(title: &str, prefixes: &[S]) -> String {
    let mut rest = title.trim();
    'strip: loop {
        for prefix in prefixes {
            if let Some(after) = strip_prefix_words(rest, prefix.as_ref()) {
                if after.len() < rest.len() {
                    rest = after.trim_start();
                    continue 'strip;
                }
            }
        }
        break;
    }
    rest.trim_end().to_string()
}

/// Prefix list for the configured options.
pub fn situation_prefixes(strip_wibta: bool) -> Vec<String> {
    let mut prefixes = vec![DEFAULT_PREFIX.to_string()];
    if strip_wibta {
        prefixes.push(WIBTA_PREFIX.to_string());
    }
    prefixes
}

pub fn extract_verdict(comment: &Comment, lexicon: &VerdictLexicon) -> Option<VerdictRecord> {
    match lexicon.classify(&comment.body) {
        VerdictMatch::Verdict(verdict) => Some(VerdictRecord {
            comment_id: comment.id.clone(),
            post_id: comment.post_id.clone(),
            verdict,
            scrubbed_text: lexicon.scrub(&comment.body),
        }),
        VerdictMatch::Ambiguous | VerdictMatch::NoVerdict => None,
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct CorpusStats {
    pub post_count: usize,
    pub comment_count: usize,
    pub verdict_count: usize,
    pub nta_count: usize,
    pub yta_count: usize,
    pub ambiguous_count: usize,
    pub no_verdict_count: usize,
}

impl CorpusStats {
    /// Flat `key=value` block, one line per counter.
    pub fn to_key_value(&self) -> String {
        format!(
            "post_count={}\ncomment_count={}\nverdict_count={}\nnta_count={}\nyta_count={}\nambiguous_count={}\nno_verdict_count={}\n",
            self.post_count,
            self.comment_count,
            self.verdict_count,
            self.nta_count,
            self.yta_count,
            self.ambiguous_count,
            self.no_verdict_count
        )
    }
}

/// Mined verdicts in corpus order, plus counters.
#[derive(Debug, Clone, Default)]
pub struct MinedVerdicts {
    pub records: Vec<VerdictRecord>,
    pub stats: CorpusStats,
}

pub fn mine_verdicts(posts: &[Post], lexicon: &VerdictLexicon) -> MinedVerdicts {
    let mut mined = MinedVerdicts::default();
    mined.stats.post_count = posts.len();
    for comment in posts.iter().flat_map(|p| &p.comments) {
        mined.stats.comment_count += 1;
        match lexicon.classify(&comment.body) {
            VerdictMatch::Verdict(verdict) => {
                mined.stats.verdict_count += 1;
                match verdict {
                    Verdict::Yta => mined.stats.yta_count += 1,
                    Verdict::Nta => mined.stats.nta_count += 1,
                }
                mined.records.push(VerdictRecord {
                    comment_id: comment.id.clone(),
                    post_id: comment.post_id.clone(),
                    verdict,
                    scrubbed_text: lexicon.scrub(&comment.body),
                });
            }
            VerdictMatch::Ambiguous => mined.stats.ambiguous_count += 1,
            VerdictMatch::NoVerdict => mined.stats.no_verdict_count += 1,
        }
    }
    mined
}

pub fn corpus_stats(posts: &[Post], lexicon: &VerdictLexicon) -> CorpusStats {
    mine_verdicts(posts, lexicon).stats
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CommentLine {
    id: String,
    body: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PostLine {
    id: String,
    title: String,
    body: String,
    comments: Vec<CommentLine>,
}

/// A line that could not be turned into a post. Parsing continues past it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LineError {
    /// 1-based line number.
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, Default)]
pub struct ParsedCorpus {
    pub posts: Vec<Post>,
    pub errors: Vec<LineError>,
}

fn parse_line<S: AsRef<str>>(
    line_no: usize,
    line: &str,
    prefixes: &[S],
) -> std::result::Result<Post, LineError> {
    let err = |message: String| LineError {
        line: line_no,
        message,
    };
    let record: PostLine = serde_json::from_str(line).map_err(|e| err(e.to_string()))?;
    if record.id.is_empty() {
        return Err(err("empty post id".into()));
    }
    let mut seen = HashSet::new();
    for c in &record.comments {
        if c.id.is_empty() {
            return Err(err("empty comment id".into()));
        }
        if !seen.insert(c.id.as_str()) {
            return Err(err(format!("duplicate comment id `{}`", c.id)));
        }
    }
    let situation = extract_situation(&record.title, prefixes);
    let comments = record
        .comments
        .into_iter()
        .map(|c| Comment {
            id: c.id,
            post_id: record.id.clone(),
            body: c.body,
        })
        .collect();
    Ok(Post {
        id: record.id,
        title: record.title,
        situation,
        body: record.body,
        comments,
    })
}

/// Parse a JSONL corpus. Blank lines are skipped; malformed lines are
/// reported per line; a duplicate post id aborts.
pub fn parse_corpus<R: BufRead, S: AsRef<str> + Sync>(
    reader: R,
    prefixes: &[S],
) -> Result<ParsedCorpus> {
    let mut lines = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io("<corpus stream>", e))?;
        if !line.trim().is_empty() {
            lines.push((idx + 1, line));
        }
    }
    let parsed: Vec<_> = lines
        .par_iter()
        .map(|(no, line)| parse_line(*no, line, prefixes))
        .collect();

    let mut corpus = ParsedCorpus::default();
    let mut ids = HashSet::new();
    for (result, (line_no, _)) in parsed.into_iter().zip(&lines) {
        match result {
            Ok(post) => {
                if !ids.insert(post.id.clone()) {
                    return Err(Error::DuplicatePost {
                        id: post.id,
                        line: *line_no,
                    });
                }
                corpus.posts.push(post);
            }
            Err(e) => corpus.errors.push(e),
        }
    }
    Ok(corpus)
}

pub fn read_corpus<S: AsRef<str> + Sync>(path: &Path, prefixes: &[S]) -> Result<ParsedCorpus> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_corpus(std::io::BufReader::new(file), prefixes)
}

/// Write posts back out as JSONL. The situation is derived, so it is not
/// stored.
pub fn write_corpus<W: Write>(mut writer: W, posts: &[Post]) -> std::io::Result<()> {
    for post in posts {
        let line = PostLine {
            id: post.id.clone(),
            title: post.title.clone(),
            body: post.body.clone(),
            comments: post
                .comments
                .iter()
                .map(|c| CommentLine {
                    id: c.id.clone(),
                    body: c.body.clone(),
                })
                .collect(),
        };
        serde_json::to_writer(&mut writer, &line)?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prefixes() -> Vec<String> {
        situation_prefixes(false)
    }

    fn comment(body: &str) -> Comment {
        Comment {
            id: "c".into(),
            post_id: "p".into(),
            body: body.into(),
        }
    }

    #[test]
    fn situation_prefix_stripping() {
        let p = prefixes();
        assert_eq!(extract_situation("AITA for leaving low tips", &p), "leaving low tips");
        assert_eq!(
            extract_situation("Helping my sister take my parents cat", &p),
            "Helping my sister take my parents cat"
        );
        assert_eq!(extract_situation("aita for X", &p), "X");
        assert_eq!(extract_situation("  AITA   for   spacing  ", &p), "spacing");
        assert_eq!(extract_situation("AITA forgetting", &p), "AITA forgetting");
        assert_eq!(extract_situation("AITA for AITA for twice", &p), "twice");
        assert_eq!(extract_situation("AITA for", &p), "");
    }

    #[test]
    fn wibta_only_behind_flag() {
        let title = "WIBTA for skipping the wedding";
        assert_eq!(extract_situation(title, &situation_prefixes(false)), title);
        assert_eq!(
            extract_situation(title, &situation_prefixes(true)),
            "skipping the wedding"
        );
    }

    #[test]
    fn single_token_verdict_is_scrubbed() {
        let lex = VerdictLexicon::default();
        let rec = extract_verdict(&comment("NTA, she was way out of line"), &lex).unwrap();
        assert_eq!(rec.verdict, Verdict::Nta);
        assert_eq!(rec.scrubbed_text, "she was way out of line");
    }

    #[test]
    fn phrase_verdict() {
        let lex = VerdictLexicon::default();
        let rec = extract_verdict(&comment("You're the asshole here, honestly"), &lex).unwrap();
        assert_eq!(rec.verdict, Verdict::Yta);
        assert_eq!(rec.scrubbed_text, "here, honestly");
        let curly = extract_verdict(&comment("you’re the   asshole"), &lex).unwrap();
        assert_eq!(curly.verdict, Verdict::Yta);
    }

    #[test]
    fn both_polarities_discarded() {
        let lex = VerdictLexicon::default();
        let c = comment("YTA at first but after the edit NTA");
        assert_eq!(lex.classify(&c.body), VerdictMatch::Ambiguous);
        assert!(extract_verdict(&c, &lex).is_none());
    }

    #[test]
    fn whole_token_matching() {
        let lex = VerdictLexicon::default();
        assert_eq!(lex.classify("I wanta say something"), VerdictMatch::NoVerdict);
        assert_eq!(lex.classify("NTAs everywhere"), VerdictMatch::NoVerdict);
        assert_eq!(lex.classify("nta."), VerdictMatch::Verdict(Verdict::Nta));
    }

    #[test]
    fn scrubbing_reaches_fixed_point() {
        let lex = VerdictLexicon::default();
        // Removing YTA joins "not the asshole".
        let s = lex.scrub("not the YTA asshole");
        assert!(!lex.contains_token(&s), "{s}");
    }

    #[test]
    fn lexicon_validation() {
        assert!(VerdictLexicon::new(Vec::<String>::new(), ["NTA"]).is_err());
        assert!(VerdictLexicon::new(["NTA"], ["nta"]).is_err());
        assert!(VerdictLexicon::new(["  "], ["NTA"]).is_err());
    }

    #[test]
    fn lexicon_from_toml() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("lex.toml");
        std::fs::write(&path, "yta = [\"YTA\", \"YWBTA\"]\nnta = [\"NTA\"]\n").unwrap();
        let lex = VerdictLexicon::from_file(&path).unwrap();
        assert_eq!(lex.classify("YWBTA tbh"), VerdictMatch::Verdict(Verdict::Yta));
    }

    #[test]
    fn parse_post_line() {
        let line = r#"{"id":"p1","title":"AITA for leaving low tips","body":"...","comments":[]}"#;
        let parsed = parse_corpus(line.as_bytes(), &prefixes()).unwrap();
        assert_eq!(parsed.posts.len(), 1);
        assert_eq!(parsed.posts[0].situation, "leaving low tips");
        assert!(parsed.posts[0].comments.is_empty());
        let stats = corpus_stats(&parsed.posts, &VerdictLexicon::default());
        assert_eq!(stats.verdict_count, 0);
    }

    #[test]
    fn malformed_line_is_reported_and_skipped() {
        let input = "{\"id\":\"p1\",\"title\":\"t\",\"body\":\"b\",\"comments\":[]}\nnot json\n\n{\"id\":\"p2\",\"title\":\"t\",\"body\":\"b\",\"comments\":[]}\n";
        let parsed = parse_corpus(input.as_bytes(), &prefixes()).unwrap();
        assert_eq!(parsed.posts.len(), 2);
        assert_eq!(parsed.errors.len(), 1);
        assert_eq!(parsed.errors[0].line, 2);
    }

    #[test]
    fn duplicate_post_id_is_fatal() {
        let line = r#"{"id":"p1","title":"t","body":"b","comments":[]}"#;
        let input = format!("{line}\n{line}\n");
        match parse_corpus(input.as_bytes(), &prefixes()) {
            Err(Error::DuplicatePost { id, line }) => {
                assert_eq!(id, "p1");
                assert_eq!(line, 2);
            }
            other => panic!("expected duplicate error, got {other:?}"),
        }
    }

    #[test]
    fn stats_hand_count() {
        let line = r#"{"id":"p1","title":"t","body":"b","comments":[{"id":"a","body":"NTA"},{"id":"b","body":"YTA"},{"id":"c","body":"meh"}]}"#;
        let parsed = parse_corpus(line.as_bytes(), &prefixes()).unwrap();
        let stats = corpus_stats(&parsed.posts, &VerdictLexicon::default());
        assert_eq!(stats.post_count, 1);
        assert_eq!(stats.verdict_count, 2);
        assert_eq!(stats.nta_count, 1);
        assert_eq!(stats.yta_count, 1);
        assert_eq!(stats.no_verdict_count, 1);
        assert_eq!(corpus_stats(&[], &VerdictLexicon::default()), CorpusStats::default());
    }

    #[test]
    fn comments_keep_order_and_post_id() {
        let line = r#"{"id":"p9","title":"t","body":"b","comments":[{"id":"z","body":"1"},{"id":"a","body":"2"}]}"#;
        let parsed = parse_corpus(line.as_bytes(), &prefixes()).unwrap();
        let ids: Vec<_> = parsed.posts[0].comments.iter().map(|c| c.id.as_str()).collect();
        assert_eq!(ids, ["z", "a"]);
        assert!(parsed.posts[0].comments.iter().all(|c| c.post_id == "p9"));
    }
}
