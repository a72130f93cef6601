//! Minimal acyclic word automata.
//!
//! Construction follows the sorted-input incremental algorithm of Daciuk,
//! Mihov, Watson and Watson: words are added in lexicographic order and the
//! suffix of the previous word is minimized against a register of
//! already-canonical states before the next word branches off.

use std::collections::{HashMap, VecDeque};

use super::{LexiconError, WordList};

/// Binary layout magic.
pub const MAGIC: &[u8; 4] = b"SDWG";
pub const VERSION: u8 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DawgNode {
    pub is_final: bool,
    /// Outgoing edges sorted by label.
    pub edges: Vec<(u8, u32)>,
}

/// Minimal deterministic acyclic automaton over `a`-`z`. Node 0 is the root.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dawg {
    nodes: Vec<DawgNode>,
}

impl Default for Dawg {
    fn default() -> Self {
        Dawg::empty()
    }
}

impl Dawg {
    /// Automaton accepting nothing: a single non-final root.
    pub fn empty() -> Self {
        Dawg { nodes: vec![DawgNode { is_final: false, edges: Vec::new() }] }
    }

    pub fn nodes(&self) -> &[DawgNode] {
        &self.nodes
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.nodes.iter().map(|n| n.edges.len()).sum()
    }

    /// True when the automaton accepts no word.
    pub fn is_empty(&self) -> bool {
        // Every stored node lies on a path to an accepting node, so the
        // language is empty exactly when the root is a dead end.
        !self.nodes[0].is_final && self.nodes[0].edges.is_empty()
    }

    fn step(&self, node: u32, label: u8) -> Option<u32> {
        let edges = &self.nodes[node as usize].edges;
        edges.binary_search_by_key(&label, |&(l, _)| l).ok().map(|i| edges[i].1)
    }

    pub fn contains(&self, word: &str) -> bool {
        let mut node = 0u32;
        for b in word.bytes() {
            match self.step(node, b) {
                Some(next) => node = next,
                None => return false,
            }
        }
        self.nodes[node as usize].is_final
    }

    /// Every accepted word in lexicographic order.
    pub fn words(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut prefix = Vec::new();
        self.collect(0, &mut prefix, &mut out);
        out
    }

    fn collect(&self, node: u32, prefix: &mut Vec<u8>, out: &mut Vec<String>) {
        let n = &self.nodes[node as usize];
        if n.is_final {
            out.push(String::from_utf8(prefix.clone()).expect("labels are ASCII"));
        }
        for &(label, target) in &n.edges {
            prefix.push(label);
            self.collect(target, prefix, out);
            prefix.pop();
        }
    }
}

struct Builder {
    nodes: Vec<DawgNode>,
    register: HashMap<DawgNode, u32>,
    /// Path of the previous word: (parent, label, child) not yet minimized.
    unchecked: Vec<(u32, u8, u32)>,
}

impl Builder {
    fn new() -> Self {
        Builder { nodes: vec![DawgNode { is_final: false, edges: Vec::new() }], register: HashMap::new(), unchecked: Vec::new() }
    }

    fn minimize(&mut self, down_to: usize) {
        while self.unchecked.len() > down_to {
            let (parent, label, child) = self.unchecked.pop().expect("length checked");
            let key = self.nodes[child as usize].clone();
            match self.register.get(&key) {
                Some(&existing) => {
                    let edge = self.nodes[parent as usize]
                        .edges
                        .iter_mut()
                        .find(|(l, _)| *l == label)
                        .expect("edge on the unchecked path");
                    edge.1 = existing;
                }
                None => {
                    self.register.insert(key, child);
                }
            }
        }
    }

    fn add(&mut self, word: &[u8], prefix_len: usize) {
        self.minimize(prefix_len);
        let mut node = self.unchecked.last().map_or(0, |&(_, _, c)| c);
        for &b in &word[prefix_len..] {
            let next = self.nodes.len() as u32;
            self.nodes.push(DawgNode { is_final: false, edges: Vec::new() });
            // Sorted input means new labels are always the largest so far.
            self.nodes[node as usize].edges.push((b, next));
            self.unchecked.push((node, b, next));
            node = next;
        }
        self.nodes[node as usize].is_final = true;
    }

    /// Drops unreachable nodes and numbers the rest breadth-first from the root.
    fn finish(mut self) -> Dawg {
        self.minimize(0);
        let mut index = vec![u32::MAX; self.nodes.len()];
        let mut order = Vec::new();
        let mut queue = VecDeque::from([0u32]);
        index[0] = 0;
        order.push(0u32);
        while let Some(n) = queue.pop_front() {
            for &(_, t) in &self.nodes[n as usize].edges {
                if index[t as usize] == u32::MAX {
                    index[t as usize] = order.len() as u32;
                    order.push(t);
                    queue.push_back(t);
                }
            }
        }
        let nodes = order
            .iter()
            .map(|&old| {
                let n = &self.nodes[old as usize];
                DawgNode { is_final: n.is_final, edges: n.edges.iter().map(|&(l, t)| (l, index[t as usize])).collect() }
            })
            .collect();
        Dawg { nodes }
    }
}

/// Builds the minimal automaton accepting exactly the list's words.
pub fn build_dawg(wl: &WordList) -> Result<Dawg, LexiconError> {
    for w in wl.words() {
        if w.is_empty() || !w.bytes().all(|b| b.is_ascii_lowercase()) {
            return Err(LexiconError::OutOfAlphabet(w.clone()));
        }
    }
    let mut words: Vec<&[u8]> = wl.words().iter().map(|w| w.as_bytes()).collect();
    words.sort_unstable();
    words.dedup();

    let mut builder = Builder::new();
    let mut prev: &[u8] = &[];
    for w in words {
        let common = prev.iter().zip(w).take_while(|(a, b)| a == b).count();
        builder.add(w, common);
        prev = w;
    }
    Ok(builder.finish())
}

pub fn serialize_dawg(d: &Dawg) -> Vec<u8> {
    let mut out = Vec::with_capacity(9 + d.nodes.len() * 2 + d.edge_count() * 5);
    out.extend_from_slice(MAGIC);
    out.push(VERSION);
    out.extend_from_slice(&(d.nodes.len() as u32).to_le_bytes());
    for n in &d.nodes {
        out.push(n.is_final as u8);
        out.push(n.edges.len() as u8);
        for &(label, target) in &n.edges {
            out.push(label);
            out.extend_from_slice(&target.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8], LexiconError> {
        if self.bytes.len() - self.pos < n {
            return Err(LexiconError::Corrupt(format!("truncated at byte {}", self.pos)));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8, LexiconError> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32, LexiconError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("four bytes")))
    }
}

/// Decodes and validates a serialized automaton: magic, version, bounds,
/// label order and acyclicity.
pub fn deserialize_dawg(bytes: &[u8]) -> Result<Dawg, LexiconError> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err(LexiconError::Corrupt("bad magic".into()));
    }
    let version = r.u8()?;
    if version != VERSION {
        return Err(LexiconError::Corrupt(format!("unsupported version {version}")));
    }
    let count = r.u32()?;
    if count == 0 {
        return Err(LexiconError::Corrupt("no root node".into()));
    }
    // Each node needs at least two bytes; reject absurd counts before allocating.
    if (count as usize).saturating_mul(2) > bytes.len() - r.pos {
        return Err(LexiconError::Corrupt(format!("node count {count} exceeds file size")));
    }
    let mut nodes = Vec::with_capacity(count as usize);
    for i in 0..count {
        let is_final = match r.u8()? {
            0 => false,
            1 => true,
            f => return Err(LexiconError::Corrupt(format!("node {i}: bad final flag {f}"))),
        };
        let n_edges = r.u8()?;
        let mut edges: Vec<(u8, u32)> = Vec::with_capacity(n_edges as usize);
        for _ in 0..n_edges {
            let label = r.u8()?;
            let target = r.u32()?;
            if !label.is_ascii_lowercase() {
                return Err(LexiconError::Corrupt(format!("node {i}: label byte {label:#04x} outside a-z")));
            }
            if target >= count {
                return Err(LexiconError::Corrupt(format!("node {i}: dangling target {target}")));
            }
            if edges.last().is_some_and(|&(prev, _)| prev >= label) {
                return Err(LexiconError::Corrupt(format!("node {i}: edge labels not strictly sorted")));
            }
            edges.push((label, target));
        }
        nodes.push(DawgNode { is_final, edges });
    }
    if r.pos != bytes.len() {
        return Err(LexiconError::Corrupt(format!("{} trailing bytes", bytes.len() - r.pos)));
    }
    check_acyclic(&nodes)?;
    Ok(Dawg { nodes })
}

fn check_acyclic(nodes: &[DawgNode]) -> Result<(), LexiconError> {
    // 0 = unvisited, 1 = on stack, 2 = done
    let mut state = vec![0u8; nodes.len()];
    for start in 0..nodes.len() {
        if state[start] != 0 {
            continue;
        }
        let mut stack: Vec<(usize, usize)> = vec![(start, 0)];
        state[start] = 1;
        while let Some(&mut (n, ref mut next)) = stack.last_mut() {
            if *next < nodes[n].edges.len() {
                let t = nodes[n].edges[*next].1 as usize;
                *next += 1;
                match state[t] {
                    0 => {
                        state[t] = 1;
                        stack.push((t, 0));
                    }
                    1 => return Err(LexiconError::Corrupt(format!("cycle through node {t}"))),
                    _ => {}
                }
            } else {
                state[n] = 2;
                stack.pop();
            }
        }
    }
    Ok(())
}
