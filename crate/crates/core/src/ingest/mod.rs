//! HTML ingestion: forgiving parse, template scrubbing and list-candidate extraction.

mod text;

use std::collections::VecDeque;

use ego_tree::NodeRef;
use regex::Regex;
use scraper::{Html, Node};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use text::{segment_sentences, tokenize, Sentence};
pub(crate) use text::{normalize_token, token_spans};

/// Tag used for text leaves in the DOM.
pub const TEXT_TAG: &str = "#text";

/// Tags removed by [`scrub_template`] unless configured otherwise.
pub const DEFAULT_SCRUB_TAGS: &[&str] = &["script", "style", "nav", "header", "footer", "aside", "form"];

const BLOCK_TAGS: &[&str] = &[
    "html", "body", "main", "article", "section", "div", "p", "ol", "ul", "li", "dl", "dt", "dd",
    "table", "thead", "tbody", "tfoot", "tr", "td", "th", "caption", "pre", "blockquote", "h1",
    "h2", "h3", "h4", "h5", "h6", "br", "hr", "figure", "figcaption", "header", "footer", "nav",
    "aside", "form", "fieldset", "address", "details", "summary", "center",
];

fn is_block(tag: &str) -> bool {
    BLOCK_TAGS.contains(&tag)
}

pub fn is_list_tag(tag: &str) -> bool {
    tag == "ol" || tag == "ul"
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomNode {
    pub tag: String,
    /// Own text: direct text children for elements, the content for text leaves.
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class: Option<String>,
    pub children: Vec<DomNode>,
    pub node_path: Vec<usize>,
}

impl DomNode {
    pub fn is_text(&self) -> bool {
        self.tag == TEXT_TAG
    }

    pub fn is_list(&self) -> bool {
        is_list_tag(&self.tag)
    }

    /// Depth-first pre-order iterator over this node and its descendants.
    pub fn descendants(&self) -> impl Iterator<Item = &DomNode> {
        let mut stack = vec![self];
        std::iter::from_fn(move || {
            let node = stack.pop()?;
            stack.extend(node.children.iter().rev());
            Some(node)
        })
    }

    /// Whitespace-normalized text of the whole subtree.
    pub fn full_text(&self) -> String {
        let mut out = String::new();
        for node in self.descendants().filter(|n| n.is_text()) {
            out.push_str(&node.text);
        }
        collapse_whitespace(&out).trim().to_string()
    }

    fn renumber(&mut self, path: Vec<usize>) {
        for (i, child) in self.children.iter_mut().enumerate() {
            let mut p = path.clone();
            p.push(i);
            child.renumber(p);
        }
        self.node_path = path;
    }

    fn refresh_own_text(&mut self) {
        if self.is_text() {
            return;
        }
        let own: String = self
            .children
            .iter()
            .filter(|c| c.is_text())
            .map(|c| c.text.as_str())
            .collect();
        self.text = collapse_whitespace(&own).trim().to_string();
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub url: String,
    pub title: String,
    pub dom: DomNode,
}

impl Document {
    pub fn node_at(&self, path: &[usize]) -> Option<&DomNode> {
        let mut node = &self.dom;
        for &i in path {
            node = node.children.get(i)?;
        }
        Some(node)
    }

    /// Number of `ol`/`ul` elements, counted by a full-tree scan.
    pub fn list_count(&self) -> usize {
        self.dom.descendants().filter(|n| n.is_list()).count()
    }
}

pub(crate) fn collapse_whitespace(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut in_ws = false;
    for c in s.chars() {
        if c.is_whitespace() {
            if !in_ws {
                out.push(' ');
            }
            in_ws = true;
        } else {
            out.push(c);
            in_ws = false;
        }
    }
    out
}

/// Parses raw bytes as HTML. Invalid UTF-8 is replaced; malformed markup
/// yields a best-effort tree. The `head` element is dropped after its
/// `title` is read, and anchors are unwrapped so only their text remains.
pub fn parse_document(raw: &[u8], url: &str) -> Result<Document> {
    let source = String::from_utf8_lossy(raw);
    if source.trim().is_empty() {
        return Err(Error::EmptyInput);
    }
    let html = Html::parse_document(&source);
    let root = html.root_element();

    let mut title = String::new();
    for child in root.children() {
        if let Node::Element(el) = child.value() {
            if el.name() == "head" {
                for d in child.descendants() {
                    if let Node::Element(e) = d.value() {
                        if e.name() == "title" {
                            let t: String = d
                                .descendants()
                                .filter_map(|n| n.value().as_text().map(|t| t.to_string()))
                                .collect();
                            title = collapse_whitespace(&t).trim().to_string();
                        }
                    }
                }
            }
        }
    }

    let mut dom = convert_element(*root).unwrap_or_else(|| DomNode {
        tag: "html".into(),
        text: String::new(),
        id: None,
        class: None,
        children: Vec::new(),
        node_path: Vec::new(),
    });
    dom.renumber(Vec::new());
    Ok(Document {
        url: url.to_string(),
        title,
        dom,
    })
}

fn convert_children(node: NodeRef<'_, Node>) -> Vec<DomNode> {
    let mut out: Vec<DomNode> = Vec::new();
    for child in node.children() {
        match child.value() {
            Node::Text(t) => push_text(&mut out, &collapse_whitespace(t)),
            Node::Element(el) => {
                let name = el.name().to_ascii_lowercase();
                if name == "head" {
                    continue;
                }
                if name == "a" {
                    for grand in convert_children(child) {
                        if grand.is_text() {
                            push_text(&mut out, &grand.text);
                        } else {
                            out.push(grand);
                        }
                    }
                    continue;
                }
                if let Some(n) = convert_element(child) {
                    out.push(n);
                }
            }
            _ => {}
        }
    }
    out
}

fn push_text(out: &mut Vec<DomNode>, text: &str) {
    if text.is_empty() {
        return;
    }
    if let Some(last) = out.last_mut() {
        if last.is_text() {
            last.text.push_str(text);
            last.text = collapse_whitespace(&last.text);
            return;
        }
    }
    out.push(DomNode {
        tag: TEXT_TAG.into(),
        text: text.to_string(),
        id: None,
        class: None,
        children: Vec::new(),
        node_path: Vec::new(),
    });
}

fn convert_element(node: NodeRef<'_, Node>) -> Option<DomNode> {
    let el = node.value().as_element()?;
    let mut dom = DomNode {
        tag: el.name().to_ascii_lowercase(),
        text: String::new(),
        id: el.id().map(str::to_string),
        class: el.attr("class").map(str::to_string),
        children: convert_children(node),
        node_path: Vec::new(),
    };
    dom.refresh_own_text();
    Some(dom)
}

/// What [`scrub_template`] removes.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScrubConfig {
    pub tags: Vec<String>,
    /// Regular expressions matched case-insensitively against `class` and `id`.
    pub class_id_patterns: Vec<String>,
}

impl Default for ScrubConfig {
    fn default() -> Self {
        ScrubConfig {
            tags: DEFAULT_SCRUB_TAGS.iter().map(|s| s.to_string()).collect(),
            class_id_patterns: vec![
                r"\bbreadcrumbs?\b".into(),
                r"\bsidebar\b".into(),
                r"\bnavbar\b".into(),
                r"\bsite-(header|footer)\b".into(),
                r"\bcookie".into(),
            ],
        }
    }
}

impl ScrubConfig {
    fn compile(&self) -> Result<Vec<Regex>> {
        self.class_id_patterns
            .iter()
            .map(|p| {
                Regex::new(&format!("(?i){p}"))
                    .map_err(|e| Error::Config(format!("bad scrub pattern {p:?}: {e}")))
            })
            .collect()
    }
}

/// Removes template elements with the default [`ScrubConfig`].
pub fn scrub_template(doc: &Document) -> Document {
    scrub_template_with(doc, &ScrubConfig::default()).expect("default scrub patterns compile")
}

pub fn scrub_template_with(doc: &Document, cfg: &ScrubConfig) -> Result<Document> {
    let patterns = cfg.compile()?;
    let mut dom = doc.dom.clone();
    scrub_node(&mut dom, cfg, &patterns);
    dom.renumber(Vec::new());
    Ok(Document {
        url: doc.url.clone(),
        title: doc.title.clone(),
        dom,
    })
}

fn is_template(node: &DomNode, cfg: &ScrubConfig, patterns: &[Regex]) -> bool {
    if node.is_text() {
        return false;
    }
    if cfg.tags.contains(&node.tag) {
        return true;
    }
    let attrs = [node.class.as_deref(), node.id.as_deref()];
    attrs
        .into_iter()
        .flatten()
        .any(|a| patterns.iter().any(|re| re.is_match(a)))
}

fn scrub_node(node: &mut DomNode, cfg: &ScrubConfig, patterns: &[Regex]) {
    let children = std::mem::take(&mut node.children);
    let mut kept: Vec<DomNode> = Vec::with_capacity(children.len());
    for mut child in children {
        if is_template(&child, cfg, patterns) {
            continue;
        }
        if child.is_text() {
            push_text(&mut kept, &child.text);
            continue;
        }
        scrub_node(&mut child, cfg, patterns);
        kept.push(child);
    }
    node.children = kept;
    node.refresh_own_text();
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ListKind {
    Ordered,
    Unordered,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ListItem {
    pub text: String,
    pub sentences: Vec<Sentence>,
    pub sublist_paths: Vec<Vec<usize>>,
    /// Sentence indices that start a new paragraph or sub-list item.
    pub paragraph_breaks: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ListCandidate {
    pub doc_url: String,
    pub node_path: Vec<usize>,
    pub list_kind: ListKind,
    pub items: Vec<ListItem>,
    pub context: Vec<Sentence>,
    pub depth: usize,
}

impl ListCandidate {
    pub fn sentences(&self) -> impl Iterator<Item = &Sentence> {
        self.items.iter().flat_map(|i| i.sentences.iter())
    }

    /// Whole list text, items separated by newlines.
    pub fn text(&self) -> String {
        self.items
            .iter()
            .map(|i| i.text.as_str())
            .collect::<Vec<_>>()
            .join("\n")
    }
}

/// Linearized text of a subtree. Block elements become segment boundaries;
/// each segment remembers how many lists enclose it.
#[derive(Default)]
struct Flattener {
    text: String,
    segments: Vec<Segment>,
    open: Option<(usize, usize)>,
    list_spans: Vec<(Vec<usize>, usize, usize)>,
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    start: usize,
    end: usize,
    list_depth: usize,
}

impl Flattener {
    fn boundary(&mut self) {
        if let Some((start, depth)) = self.open.take() {
            self.segments.push(Segment {
                start,
                end: self.text.len(),
                list_depth: depth,
            });
        }
        if !self.text.is_empty() && !self.text.ends_with('\n') {
            self.text.push('\n');
        }
    }

    fn push_text(&mut self, t: &str, list_depth: usize) {
        let t = if self.open.is_none() { t.trim_start() } else { t };
        if t.is_empty() {
            return;
        }
        if self.open.is_none() {
            self.open = Some((self.text.len(), list_depth));
        }
        self.text.push_str(t);
    }

    fn walk(&mut self, node: &DomNode, list_depth: usize) {
        if node.is_text() {
            self.push_text(&node.text, list_depth);
            return;
        }
        let block = is_block(&node.tag);
        if block {
            self.boundary();
        }
        let list = node.is_list();
        let start = self.text.len();
        let depth = if list { list_depth + 1 } else { list_depth };
        for child in &node.children {
            self.walk(child, depth);
        }
        if block {
            self.boundary();
        }
        if list {
            self.list_spans.push((node.node_path.clone(), start, self.text.len()));
        }
    }

    fn finish(mut self) -> Self {
        self.boundary();
        self
    }

    /// Sentences of all segments with `list_depth <= max_depth`, spans in
    /// flattened-text coordinates, plus the sentence index where each
    /// segment starts.
    fn sentences(&self, max_depth: usize) -> (Vec<Sentence>, Vec<usize>) {
        let mut out = Vec::new();
        let mut starts = Vec::new();
        for seg in self.segments.iter().filter(|s| s.list_depth <= max_depth) {
            let body = &self.text[seg.start..seg.end];
            let found = segment_sentences(body);
            if found.is_empty() {
                continue;
            }
            starts.push(out.len());
            out.extend(found.into_iter().map(|mut s| {
                s.char_span = (s.char_span.0 + seg.start, s.char_span.1 + seg.start);
                s
            }));
        }
        (out, starts)
    }
}

/// Flattened document text with the byte span of every list node, the
/// coordinate system for context sentence spans.
pub struct FlatDocument {
    pub text: String,
    pub list_spans: Vec<(Vec<usize>, usize, usize)>,
    pub outside_sentences: Vec<Sentence>,
}

pub fn flatten_document(doc: &Document) -> FlatDocument {
    let mut f = Flattener::default();
    f.walk(&doc.dom, 0);
    let f = f.finish();
    let (outside_sentences, _) = f.sentences(0);
    FlatDocument {
        text: f.text,
        list_spans: f.list_spans,
        outside_sentences,
    }
}

fn build_item(li: &DomNode) -> ListItem {
    let mut f = Flattener::default();
    for child in &li.children {
        f.walk(child, 0);
    }
    let f = f.finish();
    let (sentences, starts) = f.sentences(usize::MAX);

    // Rebase spans onto the item text: sentences joined by single spaces.
    let mut text = String::new();
    let mut rebased = Vec::with_capacity(sentences.len());
    for mut s in sentences {
        if !text.is_empty() {
            text.push(' ');
        }
        let start = text.len();
        text.push_str(&s.text);
        s.char_span = (start, text.len());
        rebased.push(s);
    }

    let mut sublist_paths = Vec::new();
    collect_direct_sublists(li, &mut sublist_paths);

    ListItem {
        text,
        sentences: rebased,
        sublist_paths,
        paragraph_breaks: starts.into_iter().filter(|&i| i > 0).collect(),
    }
}

fn collect_direct_sublists(node: &DomNode, out: &mut Vec<Vec<usize>>) {
    for child in &node.children {
        if child.is_list() {
            out.push(child.node_path.clone());
        } else {
            collect_direct_sublists(child, out);
        }
    }
}

fn build_candidate(doc: &Document, list: &DomNode, depth: usize, context: Vec<Sentence>) -> ListCandidate {
    let lis: Vec<&DomNode> = list.children.iter().filter(|c| c.tag == "li").collect();
    let items = if lis.is_empty() {
        // no <li> children: treat the whole list body as a single item
        vec![build_item(list)]
    } else {
        lis.into_iter().map(build_item).collect()
    };
    ListCandidate {
        doc_url: doc.url.clone(),
        node_path: list.node_path.clone(),
        list_kind: if list.tag == "ol" {
            ListKind::Ordered
        } else {
            ListKind::Unordered
        },
        items,
        context,
        depth,
    }
}

/// Every `ol`/`ul` of `doc` in breadth-first order, each with the last `k`
/// sentences of non-list text that precede it.
pub fn extract_list_candidates(doc: &Document, k: usize) -> Vec<ListCandidate> {
    let flat = flatten_document(doc);
    let mut out = Vec::new();
    let mut queue: VecDeque<(&DomNode, usize)> = VecDeque::from([(&doc.dom, 0)]);
    while let Some((node, depth)) = queue.pop_front() {
        if node.is_list() {
            out.push(build_candidate(doc, node, depth, context_for(&flat, &node.node_path, k)));
        }
        let child_depth = depth + usize::from(node.is_list());
        queue.extend(node.children.iter().filter(|c| !c.is_text()).map(|c| (c, child_depth)));
    }
    out
}

pub(crate) fn context_for(flat: &FlatDocument, path: &[usize], k: usize) -> Vec<Sentence> {
    let Some(&(_, start, _)) = flat.list_spans.iter().find(|(p, _, _)| p == path) else {
        return Vec::new();
    };
    let preceding: Vec<&Sentence> = flat
        .outside_sentences
        .iter()
        .take_while(|s| s.char_span.1 <= start)
        .collect();
    preceding[preceding.len().saturating_sub(k)..]
        .iter()
        .map(|s| (*s).clone())
        .collect()
}

/// Builds the candidate for a single list node, or `None` if `path` is not a list.
pub fn candidate_at(doc: &Document, path: &[usize], k: usize) -> Option<ListCandidate> {
    let node = doc.node_at(path)?;
    if !node.is_list() {
        return None;
    }
    let depth = (0..path.len())
        .filter(|&n| doc.node_at(&path[..n]).is_some_and(DomNode::is_list))
        .count();
    let flat = flatten_document(doc);
    Some(build_candidate(doc, node, depth, context_for(&flat, path, k)))
}
