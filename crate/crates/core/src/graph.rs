//! Small graph utilities shared by the solvers.

/// Disjoint-set forest with path halving and union by size.
#[derive(Debug, Clone)]
pub struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        let (big, small) = if self.size[ra] >= self.size[rb] { (ra, rb) } else { (rb, ra) };
        self.parent[small] = big;
        self.size[big] += self.size[small];
    }
}

/// Component labels for an undirected graph given as an edge iterator.
///
/// Labels are dense (`0..count`) and assigned in order of each component's
/// smallest node id, so the labelling is deterministic.
pub fn component_labels<I>(n: usize, edges: I) -> (Vec<usize>, usize)
where
    I: IntoIterator<Item = (usize, usize)>,
{
    let mut uf = UnionFind::new(n);
    for (i, j) in edges {
        uf.union(i, j);
    }
    let mut root_label = vec![usize::MAX; n];
    let mut labels = vec![0; n];
    let mut count = 0;
    for (node, label) in labels.iter_mut().enumerate() {
        let root = uf.find(node);
        if root_label[root] == usize::MAX {
            root_label[root] = count;
            count += 1;
        }
        *label = root_label[root];
    }
    (labels, count)
}

/// Sizes of each labelled component.
pub fn component_sizes(labels: &[usize], count: usize) -> Vec<usize> {
    let mut sizes = vec![0; count];
    for &l in labels {
        sizes[l] += 1;
    }
    sizes
}

/// Subtract the per-group mean from `values` in place.
pub fn center_per_group(values: &mut [f64], labels: &[usize], count: usize) {
    let mut sums = vec![0.0; count];
    let mut sizes = vec![0usize; count];
    for (v, &l) in values.iter().zip(labels) {
        sums[l] += *v;
        sizes[l] += 1;
    }
    for (v, &l) in values.iter_mut().zip(labels) {
        *v -= sums[l] / sizes[l] as f64;
    }
}
