use std::collections::{BTreeSet, HashSet, VecDeque};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Edge<L> {
    pub from: usize,
    pub label: L,
    pub to: usize,
}

/// Explored state space. Nodes at the depth cap, or left incomplete by the
/// state cap, are recorded as unexpanded and set `truncated`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateGraph<N, L> {
    pub nodes: Vec<N>,
    pub edges: Vec<Edge<L>>,
    pub initial: usize,
    pub truncated: bool,
    pub expanded: Vec<bool>,
}

impl<N, L> StateGraph<N, L> {
    pub fn new(initial: N) -> Self {
        StateGraph {
            nodes: vec![initial],
            edges: Vec::new(),
            initial: 0,
            truncated: false,
            expanded: vec![false],
        }
    }

    pub fn add_node(&mut self, node: N) -> usize {
        self.nodes.push(node);
        self.expanded.push(false);
        self.nodes.len() - 1
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.nodes.len()];
        for (i, e) in self.edges.iter().enumerate() {
            adj[e.from].push(i);
        }
        adj
    }

    fn reach(&self, start: usize, forward: bool) -> Vec<bool> {
        let mut adj = vec![Vec::new(); self.nodes.len()];
        for e in &self.edges {
            if forward {
                adj[e.from].push(e.to);
            } else {
                adj[e.to].push(e.from);
            }
        }
        let mut seen = vec![false; self.nodes.len()];
        let mut queue = VecDeque::from([start]);
        seen[start] = true;
        while let Some(n) = queue.pop_front() {
            for &m in &adj[n] {
                if !seen[m] {
                    seen[m] = true;
                    queue.push_back(m);
                }
            }
        }
        seen
    }

    /// Nodes from which the initial node can be reached again.
    pub fn reaches_initial(&self) -> Vec<bool> {
        self.reach(self.initial, false)
    }

    /// Every node reachable from the initial node can return to it.
    pub fn strongly_connected_to_initial(&self) -> bool {
        let fwd = self.reach(self.initial, true);
        let back = self.reaches_initial();
        fwd.iter().zip(back).all(|(&f, b)| !f || b)
    }
}

/// Set of label words over a graph, with a flag for incomplete exploration.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Language {
    pub words: BTreeSet<Vec<String>>,
    /// Some path was cut off by the exploration caps before reaching full length.
    pub lower_bound: bool,
}

impl Language {
    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn contains(&self, word: &[&str]) -> bool {
        self.words
            .iter()
            .any(|w| w.len() == word.len() && w.iter().zip(word).all(|(a, b)| a == b))
    }

    /// Words of length at most `depth`.
    pub fn restrict(&self, depth: usize) -> Language {
        Language {
            words: self
                .words
                .iter()
                .filter(|w| w.len() <= depth)
                .cloned()
                .collect(),
            lower_bound: self.lower_bound,
        }
    }
}

impl<N, L> StateGraph<N, L> {
    /// Prefix-closed set of observable words of length at most `depth` along
    /// paths from the initial node. `observe` maps an edge to the labels it
    /// emits; an empty list is a silent step.
    pub fn language(&self, depth: usize, observe: impl Fn(&L) -> Vec<String>) -> Language {
        let adj = self.adjacency();
        let mut lang = Language::default();
        let mut seen: HashSet<(usize, Vec<String>)> = HashSet::new();
        let mut queue = VecDeque::from([(self.initial, Vec::new())]);
        seen.insert((self.initial, Vec::new()));
        while let Some((n, word)) = queue.pop_front() {
            lang.words.insert(word.clone());
            if word.len() < depth && !self.expanded[n] {
                lang.lower_bound = true;
            }
            for &ei in &adj[n] {
                let e = &self.edges[ei];
                let mut w = word.clone();
                for l in observe(&e.label) {
                    if w.len() == depth {
                        break;
                    }
                    w.push(l);
                    lang.words.insert(w.clone());
                }
                if seen.insert((e.to, w.clone())) {
                    queue.push_back((e.to, w));
                }
            }
        }
        lang
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cycle_is_strongly_connected() {
        let mut g: StateGraph<u8, ()> = StateGraph::new(0);
        let a = g.add_node(1);
        let b = g.add_node(2);
        g.edges.push(Edge {
            from: 0,
            label: (),
            to: a,
        });
        g.edges.push(Edge {
            from: a,
            label: (),
            to: b,
        });
        g.edges.push(Edge {
            from: b,
            label: (),
            to: 0,
        });
        assert!(g.strongly_connected_to_initial());
        g.edges.pop();
        assert!(!g.strongly_connected_to_initial());
        assert_eq!(g.reaches_initial(), vec![true, false, false]);
    }

    #[test]
    fn language_elides_silent_steps_and_caps_length() {
        let mut g: StateGraph<(), &str> = StateGraph::new(());
        let a = g.add_node(());
        g.edges.push(Edge {
            from: 0,
            label: "",
            to: a,
        });
        g.edges.push(Edge {
            from: a,
            label: "x",
            to: 0,
        });
        g.expanded = vec![true, true];
        let obs = |l: &&str| {
            if l.is_empty() {
                vec![]
            } else {
                vec![l.to_string()]
            }
        };
        let lang = g.language(2, obs);
        assert_eq!(lang.len(), 3);
        assert!(lang.contains(&["x", "x"]));
        assert!(!lang.lower_bound);
        g.expanded[a] = false;
        assert!(g.language(2, obs).lower_bound);
    }
}
