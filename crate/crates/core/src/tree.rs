//! Ordered labeled data trees, forests, and their brace-string encoding.
//!
//! Nodes of a tree are numbered in preorder, and every tree owns a contiguous
//! range of globally unique [`NodeId`]s. A [`DataTree`] may also be a *view*
//! on a subtree of a larger tree, in which case it shares the node identities
//! of the enclosing tree.

use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use thiserror::Error;

static NEXT_NODE_ID: AtomicU64 = AtomicU64::new(1);

fn allocate_ids(count: usize) -> u64 {
    NEXT_NODE_ID.fetch_add(count as u64, Ordering::Relaxed)
}

/// A node label. Labels follow identifier lexing rules.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Label(Arc<str>);

impl Label {
    pub fn new(text: &str) -> Result<Label, TreeParseError> {
        if is_identifier(text) {
            Ok(Label(Arc::from(text)))
        } else {
            Err(TreeParseError::BadLabel { offset: 0, label: text.to_string() })
        }
    }

    pub fn doc() -> Label {
        Label(Arc::from("doc"))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// `[A-Za-z_][A-Za-z0-9_]*`
pub fn is_identifier(text: &str) -> bool {
    let mut chars = text.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Globally unique node identity. Never reused within a process.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct NodeId(pub u64);

#[derive(Debug)]
struct TreeData {
    base: u64,
    labels: Vec<Label>,
    parent: Vec<Option<u32>>,
    children: Vec<Vec<u32>>,
    // number of nodes in the subtree rooted at each index
    extent: Vec<u32>,
}

/// An ordered labeled tree (or a view on a subtree of one).
#[derive(Clone)]
pub struct DataTree {
    data: Arc<TreeData>,
    root: u32,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TreeParseError {
    #[error("empty input")]
    Empty,
    #[error("bad label `{label}` at offset {offset}")]
    BadLabel { offset: usize, label: String },
    #[error("unbalanced braces at offset {offset}")]
    Unbalanced { offset: usize },
    #[error("unexpected character `{found}` at offset {offset}")]
    Unexpected { offset: usize, found: char },
    #[error("trailing input at offset {offset}")]
    Trailing { offset: usize },
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("node {0:?} does not occur in the tree")]
pub struct NodeLookupError(pub NodeId);

/// Builds a tree in preorder: `open` a node, add its children, `close` it.
#[derive(Default)]
pub struct TreeBuilder {
    labels: Vec<Label>,
    parent: Vec<Option<u32>>,
    children: Vec<Vec<u32>>,
    stack: Vec<u32>,
}

impl TreeBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn open(&mut self, label: Label) -> &mut Self {
        let idx = self.labels.len() as u32;
        let parent = self.stack.last().copied();
        if let Some(p) = parent {
            self.children[p as usize].push(idx);
        } else {
            assert!(idx == 0, "a tree has a single root");
        }
        self.labels.push(label);
        self.parent.push(parent);
        self.children.push(Vec::new());
        self.stack.push(idx);
        self
    }

    pub fn close(&mut self) -> &mut Self {
        self.stack.pop().expect("close without open");
        self
    }

    pub fn leaf(&mut self, label: Label) -> &mut Self {
        self.open(label).close()
    }

    /// Copies the subtree `t` below the currently open node.
    pub fn copy(&mut self, t: &DataTree) -> &mut Self {
        self.open(t.label(t.root()).clone());
        for c in t.children(t.root()) {
            self.copy(&t.subtree_view(c));
        }
        self.close()
    }

    pub fn depth(&self) -> usize {
        self.stack.len()
    }

    pub fn finish(self) -> DataTree {
        assert!(self.stack.is_empty(), "unclosed nodes");
        assert!(!self.labels.is_empty(), "empty tree");
        let n = self.labels.len();
        let mut extent = vec![1u32; n];
        for i in (0..n).rev() {
            if let Some(p) = self.parent[i] {
                extent[p as usize] += extent[i];
            }
        }
        let base = allocate_ids(n);
        DataTree {
            data: Arc::new(TreeData {
                base,
                labels: self.labels,
                parent: self.parent,
                children: self.children,
                extent,
            }),
            root: 0,
        }
    }
}

impl DataTree {
    pub fn leaf(label: Label) -> DataTree {
        let mut b = TreeBuilder::new();
        b.leaf(label);
        b.finish()
    }

    fn index(&self, n: NodeId) -> Option<u32> {
        let lo = self.data.base + self.root as u64;
        let hi = lo + self.data.extent[self.root as usize] as u64;
        (n.0 >= lo && n.0 < hi).then(|| (n.0 - self.data.base) as u32)
    }

    fn id(&self, idx: u32) -> NodeId {
        NodeId(self.data.base + idx as u64)
    }

    pub fn root(&self) -> NodeId {
        self.id(self.root)
    }

    pub fn contains(&self, n: NodeId) -> bool {
        self.index(n).is_some()
    }

    pub fn len(&self) -> usize {
        self.data.extent[self.root as usize] as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// All nodes in document order (preorder).
    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        let lo = self.root;
        (lo..lo + self.len() as u32).map(move |i| self.id(i))
    }

    /// Preorder rank of `n` within this tree.
    pub fn rank(&self, n: NodeId) -> Option<usize> {
        self.index(n).map(|i| (i - self.root) as usize)
    }

    fn idx(&self, n: NodeId) -> u32 {
        self.index(n).unwrap_or_else(|| panic!("node {n:?} not in tree"))
    }

    /// Panics if `n` is not a node of this tree.
    pub fn label(&self, n: NodeId) -> &Label {
        &self.data.labels[self.idx(n) as usize]
    }

    pub fn children(&self, n: NodeId) -> impl ExactSizeIterator<Item = NodeId> + '_ {
        let base = self.data.base;
        self.data.children[self.idx(n) as usize].iter().map(move |&c| NodeId(base + c as u64))
    }

    pub fn child_count(&self, n: NodeId) -> usize {
        self.data.children[self.idx(n) as usize].len()
    }

    pub fn parent(&self, n: NodeId) -> Option<NodeId> {
        let i = self.idx(n);
        if i == self.root {
            return None;
        }
        self.data.parent[i as usize].map(|p| self.id(p))
    }

    fn sibling(&self, n: NodeId, offset: isize) -> Option<NodeId> {
        let p = self.parent(n)?;
        let siblings = &self.data.children[self.idx(p) as usize];
        let me = self.idx(n);
        let pos = siblings.iter().position(|&c| c == me)? as isize + offset;
        if pos < 0 {
            return None;
        }
        siblings.get(pos as usize).map(|&c| self.id(c))
    }

    pub fn next_sibling(&self, n: NodeId) -> Option<NodeId> {
        self.sibling(n, 1)
    }

    pub fn prev_sibling(&self, n: NodeId) -> Option<NodeId> {
        self.sibling(n, -1)
    }

    /// A view on the subtree rooted at `n`, sharing node identities.
    pub fn subtree_view(&self, n: NodeId) -> DataTree {
        DataTree { data: self.data.clone(), root: self.idx(n) }
    }

    /// A fresh copy (new node identities) of the subtree rooted at `n`.
    pub fn subtree_at(&self, n: NodeId) -> Result<DataTree, NodeLookupError> {
        if !self.contains(n) {
            return Err(NodeLookupError(n));
        }
        let mut b = TreeBuilder::new();
        b.copy(&self.subtree_view(n));
        Ok(b.finish())
    }

    /// A fresh copy of the whole tree.
    pub fn deep_copy(&self) -> DataTree {
        let mut b = TreeBuilder::new();
        b.copy(self);
        b.finish()
    }

    /// Child-index path from the root to `n`.
    pub fn path_of(&self, n: NodeId) -> Option<Vec<usize>> {
        self.index(n)?;
        let mut path = Vec::new();
        let mut cur = n;
        while let Some(p) = self.parent(cur) {
            let pos = self.children(p).position(|c| c == cur).expect("child of parent");
            path.push(pos);
            cur = p;
        }
        path.reverse();
        Some(path)
    }

    pub fn node_at_path(&self, path: &[usize]) -> Option<NodeId> {
        let mut cur = self.root();
        for &i in path {
            cur = self.children(cur).nth(i)?;
        }
        Some(cur)
    }

    pub fn depth(&self) -> usize {
        fn go(t: &DataTree, n: NodeId) -> usize {
            1 + t.children(n).map(|c| go(t, c)).max().unwrap_or(0)
        }
        go(self, self.root())
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes().filter(|&n| self.child_count(n) == 0).count()
    }
}

impl fmt::Debug for DataTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DataTree({})", tree_to_string(self))
    }
}

/// A sequence of node-disjoint trees.
#[derive(Clone, Debug, Default)]
pub struct DataForest(pub Vec<DataTree>);

impl DataForest {
    pub fn new(trees: Vec<DataTree>) -> Self {
        DataForest(trees)
    }

    pub fn trees(&self) -> &[DataTree] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

fn write_tree(t: &DataTree, n: NodeId, out: &mut String) {
    out.push_str(t.label(n).as_str());
    out.push('{');
    for c in t.children(n) {
        write_tree(t, c, out);
    }
    out.push('}');
}

/// `label{child encodings}` recursively.
pub fn tree_to_string(t: &DataTree) -> String {
    let mut out = String::new();
    write_tree(t, t.root(), &mut out);
    out
}

pub fn forest_to_string(f: &DataForest) -> String {
    f.0.iter().map(tree_to_string).collect()
}

struct BraceParser<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> BraceParser<'a> {
    fn skip_ws(&mut self) {
        while let Some(c) = self.src[self.pos..].chars().next() {
            if c.is_whitespace() {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.src[self.pos..].chars().next()
    }

    fn label(&mut self) -> Result<Label, TreeParseError> {
        self.skip_ws();
        let start = self.pos;
        let rest = &self.src[start..];
        let len = rest
            .char_indices()
            .find(|&(_, c)| !(c.is_ascii_alphanumeric() || c == '_'))
            .map(|(i, _)| i)
            .unwrap_or(rest.len());
        if len == 0 {
            return match rest.chars().next() {
                None => Err(TreeParseError::Unbalanced { offset: start }),
                Some(c) => Err(TreeParseError::Unexpected { offset: start, found: c }),
            };
        }
        let text = &rest[..len];
        self.pos += len;
        Label::new(text).map_err(|_| TreeParseError::BadLabel { offset: start, label: text.to_string() })
    }

    fn expect_open(&mut self) -> Result<(), TreeParseError> {
        match self.peek() {
            Some('{') => {
                self.pos += 1;
                Ok(())
            }
            None => Err(TreeParseError::Unbalanced { offset: self.pos }),
            Some(c) => Err(TreeParseError::Unexpected { offset: self.pos, found: c }),
        }
    }

    fn tree(&mut self, b: &mut TreeBuilder) -> Result<(), TreeParseError> {
        let label = self.label()?;
        self.expect_open()?;
        b.open(label);
        loop {
            match self.peek() {
                Some('}') => {
                    self.pos += 1;
                    b.close();
                    return Ok(());
                }
                None => return Err(TreeParseError::Unbalanced { offset: self.pos }),
                Some(_) => self.tree(b)?,
            }
        }
    }

    fn forest(&mut self) -> Result<Vec<DataTree>, TreeParseError> {
        let mut trees = Vec::new();
        while let Some(c) = self.peek() {
            if c == '}' {
                return Err(TreeParseError::Unbalanced { offset: self.pos });
            }
            let mut b = TreeBuilder::new();
            self.tree(&mut b)?;
            trees.push(b.finish());
        }
        Ok(trees)
    }
}

/// Parses a single brace-encoded tree. Whitespace between tokens is ignored.
pub fn parse_tree(s: &str) -> Result<DataTree, TreeParseError> {
    let mut p = BraceParser { src: s, pos: 0 };
    if p.peek().is_none() {
        return Err(TreeParseError::Empty);
    }
    let mut b = TreeBuilder::new();
    p.tree(&mut b)?;
    if p.peek().is_some() {
        return Err(TreeParseError::Trailing { offset: p.pos });
    }
    Ok(b.finish())
}

/// Parses a concatenation of brace-encoded trees (possibly empty).
pub fn parse_forest(s: &str) -> Result<DataForest, TreeParseError> {
    let mut p = BraceParser { src: s, pos: 0 };
    Ok(DataForest(p.forest()?))
}

/// Affixes a fresh `doc` root on top of the forest.
pub fn maketree(f: &DataForest) -> DataTree {
    let mut b = TreeBuilder::new();
    b.open(Label::doc());
    for t in &f.0 {
        b.copy(t);
    }
    b.close();
    b.finish()
}

/// The top-level subtrees of `t`, sharing node identities with `t`.
pub fn choproot(t: &DataTree) -> DataForest {
    DataForest(t.children(t.root()).map(|c| t.subtree_view(c)).collect())
}

/// `doc` root with one leaf child per symbol of `s`.
pub fn flattree<S: AsRef<str>>(s: &[S]) -> DataTree {
    let mut b = TreeBuilder::new();
    b.open(Label::doc());
    for sym in s {
        b.leaf(Label::new(sym.as_ref()).expect("flattree symbol must be a label"));
    }
    b.close();
    b.finish()
}

/// The token sequence of the brace encoding, with `{`/`}` spelled
/// `lbrace`/`rbrace`.
pub fn string_symbols(t: &DataTree) -> Vec<String> {
    fn go(t: &DataTree, n: NodeId, out: &mut Vec<String>) {
        out.push(t.label(n).to_string());
        out.push("lbrace".into());
        for c in t.children(n) {
            go(t, c, out);
        }
        out.push("rbrace".into());
    }
    let mut out = Vec::new();
    go(t, t.root(), &mut out);
    out
}

/// Inverse of [`string_symbols`]; `None` if the symbols are not a tree encoding.
pub fn tree_from_symbols<S: AsRef<str>>(symbols: &[S]) -> Option<DataTree> {
    let mut b = TreeBuilder::new();
    let mut i = 0;
    let mut opened = false;
    while i < symbols.len() {
        match symbols[i].as_ref() {
            "rbrace" => {
                if b.depth() == 0 {
                    return None;
                }
                b.close();
                i += 1;
            }
            "lbrace" => return None,
            label => {
                if opened && b.depth() == 0 {
                    return None;
                }
                if symbols.get(i + 1).map(|s| s.as_ref()) != Some("lbrace") {
                    return None;
                }
                b.open(Label::new(label).ok()?);
                opened = true;
                i += 2;
            }
        }
    }
    (opened && b.depth() == 0).then(|| b.finish())
}

/// Ordered labeled isomorphism, i.e. equality of encodings.
pub fn is_isomorphic(t1: &DataTree, t2: &DataTree) -> bool {
    fn go(a: &DataTree, x: NodeId, b: &DataTree, y: NodeId) -> bool {
        a.label(x) == b.label(y)
            && a.child_count(x) == b.child_count(y)
            && a.children(x).zip(b.children(y)).all(|(cx, cy)| go(a, cx, b, cy))
    }
    go(t1, t1.root(), t2, t2.root())
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXAMPLE: &str = "a{b{}c{a{}b{}}c{}}";

    #[test]
    fn running_example_round_trip() {
        let t = parse_tree(EXAMPLE).unwrap();
        assert_eq!(t.len(), 6);
        assert_eq!(tree_to_string(&t), EXAMPLE);
        let spaced = parse_tree(" a { b{ } c{a{}  b{}}\n c{} }").unwrap();
        assert_eq!(tree_to_string(&spaced), EXAMPLE);
    }

    #[test]
    fn leaf_encoding() {
        assert_eq!(tree_to_string(&parse_tree("a{}").unwrap()), "a{}");
    }

    #[test]
    fn parse_errors() {
        assert_eq!(parse_tree("a{b{}").unwrap_err(), TreeParseError::Unbalanced { offset: 5 });
        assert_eq!(parse_tree("   ").unwrap_err(), TreeParseError::Empty);
        assert!(matches!(parse_tree("a{}}"), Err(TreeParseError::Trailing { .. })));
        assert!(matches!(parse_tree("9a{}"), Err(TreeParseError::BadLabel { .. })));
        assert!(matches!(parse_tree("a{-}"), Err(TreeParseError::Unexpected { .. })));
    }

    #[test]
    fn maketree_and_choproot() {
        assert_eq!(tree_to_string(&maketree(&DataForest::default())), "doc{}");
        let f = parse_forest("a{}b{}").unwrap();
        let t = maketree(&f);
        assert_eq!(tree_to_string(&t), "doc{a{}b{}}");
        let back = choproot(&t);
        assert_eq!(forest_to_string(&back), "a{}b{}");
        assert!(choproot(&parse_tree("doc{}").unwrap()).is_empty());
        // choproot shares identities with its argument
        let kids: Vec<_> = t.children(t.root()).collect();
        assert_eq!(back.0.iter().map(|s| s.root()).collect::<Vec<_>>(), kids);
    }

    #[test]
    fn subtree_copies_are_fresh() {
        let t = parse_tree(EXAMPLE).unwrap();
        let c = t.children(t.root()).nth(1).unwrap();
        let s = t.subtree_at(c).unwrap();
        assert_eq!(tree_to_string(&s), "c{a{}b{}}");
        assert!(!t.contains(s.root()));
        let whole = t.subtree_at(t.root()).unwrap();
        assert!(is_isomorphic(&whole, &t));
        let other = parse_tree("x{}").unwrap();
        assert_eq!(t.subtree_at(other.root()).unwrap_err(), NodeLookupError(other.root()));
    }

    #[test]
    fn flat_trees() {
        let empty: [&str; 0] = [];
        assert_eq!(tree_to_string(&flattree(&empty)), "doc{}");
        assert_eq!(tree_to_string(&flattree(&["a", "a"])), "doc{a{}a{}}");
        let t = parse_tree(EXAMPLE).unwrap();
        let flat = flattree(&string_symbols(&t));
        assert_eq!(flat.len(), 1 + 3 * t.len());
        assert_eq!(flat.depth(), 2);
    }

    #[test]
    fn symbols_round_trip() {
        let t = parse_tree(EXAMPLE).unwrap();
        let back = tree_from_symbols(&string_symbols(&t)).unwrap();
        assert!(is_isomorphic(&t, &back));
        assert!(tree_from_symbols(&["a", "lbrace"]).is_none());
        assert!(tree_from_symbols(&["a", "lbrace", "rbrace", "b", "lbrace", "rbrace"]).is_none());
    }

    #[test]
    fn isomorphism() {
        let t = parse_tree(EXAMPLE).unwrap();
        assert!(is_isomorphic(&t, &t));
        assert!(is_isomorphic(&t, &t.deep_copy()));
        assert!(!is_isomorphic(&parse_tree("a{b{}}").unwrap(), &parse_tree("a{c{}}").unwrap()));
    }

    #[test]
    fn siblings_and_paths() {
        let t = parse_tree(EXAMPLE).unwrap();
        let kids: Vec<_> = t.children(t.root()).collect();
        assert_eq!(t.next_sibling(kids[0]), Some(kids[1]));
        assert_eq!(t.prev_sibling(kids[0]), None);
        assert_eq!(t.next_sibling(kids[2]), None);
        assert_eq!(t.next_sibling(t.root()), None);
        let inner = t.children(kids[1]).nth(1).unwrap();
        assert_eq!(t.path_of(inner), Some(vec![1, 1]));
        assert_eq!(t.node_at_path(&[1, 1]), Some(inner));
        // a view's root has no siblings
        let view = t.subtree_view(kids[1]);
        assert_eq!(view.next_sibling(view.root()), None);
        assert_eq!(view.len(), 3);
    }
}
