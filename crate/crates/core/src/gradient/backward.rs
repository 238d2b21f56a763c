use nalgebra::DVector;

use crate::tree::MarkovTree;

/// Backward sweep along a freshly expanded path.
///
/// With `b` marking nodes new on this path:
/// `S^(n) = b dC^(n)`, `ΔC^(n) = b C^(n)`, and for `r < n`
/// `S^(r) = b dC^(r) + Pr^(r+1) S^(r+1) + ΔC^(r+1) dPr^(r+1)`,
/// `ΔC^(r) = b C^(r) + Pr^(r+1) ΔC^(r+1)`.
/// Each `S^(r)` is added to the node's persistent accumulator.
pub fn backward_gradient_update(tree: &mut MarkovTree, path: &[usize]) {
    let dim = tree.dim();
    let mut s_next = DVector::zeros(dim);
    let mut dc_next = 0.0;
    let mut child: Option<usize> = None;
    for &id in path.iter().rev() {
        let (s, dc) = {
            let node = tree.node(id);
            let b = if node.visited { 1.0 } else { 0.0 };
            let mut s: DVector<f64> = node.cost_gradient() * b;
            let mut dc = b * node.cost;
            if let Some(c) = child {
                let ch = tree.node(c);
                s += &s_next * ch.probability;
                s += ch.probability_gradient() * dc_next;
                dc += ch.probability * dc_next;
            }
            (s, dc)
        };
        let node = tree.node_mut(id);
        node.gradient += &s;
        node.delta_cost = dc;
        s_next = s;
        dc_next = dc;
        child = Some(id);
    }
}

/// `dC'/dx^(0)` of the root by direct recursion over the instantiated tree:
/// `G(v) = dC(v) + Σ_c [Pr(c) G(c) + C'(c) dPr(c)]`.
pub fn recursive_gradient(tree: &MarkovTree) -> DVector<f64> {
    fn visit(tree: &MarkovTree, id: usize) -> DVector<f64> {
        let node = tree.node(id);
        let mut g = node.cost_gradient().clone();
        for &c in node.children.values() {
            let ch = tree.node(c);
            g += visit(tree, c) * ch.probability;
            g += ch.probability_gradient() * ch.equivalent_cost;
        }
        g
    }
    visit(tree, crate::tree::ROOT)
}
