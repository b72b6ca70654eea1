use crate::rates::Generator;

/// Strongly connected components of the positive-rate graph, with the closed
/// ones (no positive rate leaving the component) singled out.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct ClassSummary {
    /// Components in reverse topological order of the condensation.
    pub classes: Vec<Vec<usize>>,
    /// Indices into `classes` of the closed components.
    pub closed: Vec<usize>,
}

impl ClassSummary {
    pub fn transient_states(&self) -> usize {
        self.classes
            .iter()
            .enumerate()
            .filter(|(i, _)| !self.closed.contains(i))
            .map(|(_, c)| c.len())
            .sum()
    }
}

pub fn communicating_classes(g: &Generator) -> ClassSummary {
    let classes = tarjan(g.len(), |v| g.row(v).0);
    let mut comp = vec![0; g.len()];
    for (c, members) in classes.iter().enumerate() {
        for &v in members {
            comp[v] = c;
        }
    }
    let closed = (0..classes.len())
        .filter(|&c| {
            classes[c]
                .iter()
                .all(|&v| g.row(v).0.iter().all(|&w| comp[w] == c))
        })
        .collect();
    ClassSummary { classes, closed }
}

/// Iterative Tarjan; each component is returned sorted ascending.
fn tarjan<'a>(n: usize, succ: impl Fn(usize) -> &'a [usize]) -> Vec<Vec<usize>> {
    const UNSEEN: usize = usize::MAX;
    let mut index = vec![UNSEEN; n];
    let mut low = vec![0; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut out = Vec::new();
    let mut counter = 0;
    // (vertex, next successor position)
    let mut frames: Vec<(usize, usize)> = Vec::new();
    for root in 0..n {
        if index[root] != UNSEEN {
            continue;
        }
        frames.push((root, 0));
        index[root] = counter;
        low[root] = counter;
        counter += 1;
        stack.push(root);
        on_stack[root] = true;
        while let Some(&(v, pos)) = frames.last() {
            let next = succ(v);
            if pos < next.len() {
                let w = next[pos];
                frames.last_mut().expect("nonempty").1 += 1;
                if index[w] == UNSEEN {
                    index[w] = counter;
                    low[w] = counter;
                    counter += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    frames.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
                continue;
            }
            frames.pop();
            if let Some(&(parent, _)) = frames.last() {
                low[parent] = low[parent].min(low[v]);
            }
            if low[v] == index[v] {
                let mut comp = Vec::new();
                loop {
                    let w = stack.pop().expect("component root is on the stack");
                    on_stack[w] = false;
                    comp.push(w);
                    if w == v {
                        break;
                    }
                }
                comp.sort_unstable();
                out.push(comp);
            }
        }
    }
    out
}
