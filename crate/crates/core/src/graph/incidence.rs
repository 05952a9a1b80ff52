use super::{Graph, GraphError, VertexKind};
use nalgebra::DMatrix;

/// Oriented incidence matrix: `+1` where vertex `i` is the tail of edge `j`,
/// `-1` where it is the head. Open edge ends contribute nothing.
pub fn incidence_matrix(g: &Graph) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(g.vertices.len(), g.edges.len());
    for (j, &[tail, head]) in g.edge_matrix.iter().enumerate() {
        if tail > 0 {
            m[(tail - 1, j)] += 1.0;
        }
        if head > 0 {
            m[(head - 1, j)] -= 1.0;
        }
    }
    m
}

/// Splits `m` into the rows of internal (dynamic and algebraic) vertices and
/// the rows of external vertices. Assumes the graph is normalized.
pub fn partition_incidence(m: &DMatrix<f64>, g: &Graph) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = g.vertices.iter().take_while(|v| v.kind != VertexKind::External).count();
    let upper = m.rows(0, n).into_owned();
    let lower = m.rows(n, m.nrows() - n).into_owned();
    (upper, lower)
}

/// Block 0/1 matrix mapping flow entries onto vertex states. Block `(i, j)`
/// has `row_sizes[i]` rows and `col_sizes[j]` columns.
#[derive(Clone, Debug, PartialEq)]
pub struct SMatrix {
    pub row_sizes: Vec<usize>,
    pub col_sizes: Vec<usize>,
    blocks: Vec<DMatrix<f64>>,
}

impl SMatrix {
    pub fn from_blocks(row_sizes: Vec<usize>, col_sizes: Vec<usize>, blocks: Vec<DMatrix<f64>>) -> Self {
        assert_eq!(blocks.len(), row_sizes.len() * col_sizes.len());
        SMatrix { row_sizes, col_sizes, blocks }
    }

    /// Every block a 1x1 one.
    pub fn ones(vertices: usize, edges: usize) -> Self {
        SMatrix::from_blocks(vec![1; vertices], vec![1; edges], vec![DMatrix::from_element(1, 1, 1.0); vertices * edges])
    }

    pub fn block(&self, i: usize, j: usize) -> &DMatrix<f64> {
        &self.blocks[i * self.col_sizes.len() + j]
    }
}

/// S blocks for every internal vertex: entry `(m, n)` of block `(i, j)` is 1
/// when flow entry `n` of edge `j` targets state `m` of vertex `i`.
pub fn s_matrix(g: &Graph) -> SMatrix {
    let rows: Vec<usize> = g
        .vertices
        .iter()
        .filter(|v| v.kind != VertexKind::External)
        .map(|v| v.state_count)
        .collect();
    let cols: Vec<usize> = g.edges.iter().map(|e| e.flow_arity()).collect();
    let mut blocks = Vec::with_capacity(rows.len() * cols.len());
    for &r in &rows {
        for e in &g.edges {
            let mut b = DMatrix::zeros(r, e.flow_arity());
            for (n, &m) in e.targets.iter().enumerate() {
                if m >= 1 && m <= r && n < e.flow_arity() {
                    b[(m - 1, n)] = 1.0;
                }
            }
            blocks.push(b);
        }
    }
    SMatrix::from_blocks(rows, cols, blocks)
}

/// Blockwise product: block `(i, j)` of the result is `m[i, j] * S_ij`.
pub fn khatri_rao(m: &DMatrix<f64>, s: &SMatrix) -> Result<DMatrix<f64>, GraphError> {
    if m.nrows() != s.row_sizes.len() || m.ncols() != s.col_sizes.len() {
        return Err(GraphError::Dimension(format!(
            "incidence is {}x{} but S has {}x{} blocks",
            m.nrows(),
            m.ncols(),
            s.row_sizes.len(),
            s.col_sizes.len()
        )));
    }
    let total_rows: usize = s.row_sizes.iter().sum();
    let total_cols: usize = s.col_sizes.iter().sum();
    let mut out = DMatrix::zeros(total_rows, total_cols);
    let mut r0 = 0;
    for (i, &rs) in s.row_sizes.iter().enumerate() {
        let mut c0 = 0;
        for (j, &cs) in s.col_sizes.iter().enumerate() {
            let b = s.block(i, j);
            if b.nrows() != rs || b.ncols() != cs {
                return Err(GraphError::Dimension(format!(
                    "S block ({}, {}) is {}x{}, expected {rs}x{cs}",
                    i + 1,
                    j + 1,
                    b.nrows(),
                    b.ncols()
                )));
            }
            let mij = m[(i, j)];
            if mij != 0.0 {
                out.view_mut((r0, c0), (rs, cs)).copy_from(&(b * mij));
            }
            c0 += cs;
        }
        r0 += rs;
    }
    Ok(out)
}

/// External routing matrix over all internal states and flow entries, built
/// from the graph's routing rows.
pub fn route_matrix(g: &Graph) -> DMatrix<f64> {
    let mut state_offset = Vec::new();
    let mut k = 0;
    for v in &g.vertices {
        state_offset.push(k);
        if v.kind != VertexKind::External {
            k += v.state_count;
        }
    }
    let mut flow_offset = Vec::new();
    let mut f = 0;
    for e in &g.edges {
        flow_offset.push(f);
        f += e.flow_arity();
    }
    let mut d = DMatrix::zeros(k, f);
    for r in &g.external_flow_map {
        d[(state_offset[r.vertex - 1] + r.state - 1, flow_offset[r.edge - 1] + r.entry - 1)] += r.sign;
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{EdgeSpec, VertexSpec};

    #[test]
    fn incidence_of_a_listed_edge_row() {
        let mut g = Graph::new("g");
        g.add_vertex(VertexSpec::dynamic("a", &["x_dot"]));
        g.add_vertex(VertexSpec::dynamic("b", &["x_dot"]));
        g.add_edge(EdgeSpec::new("e", &["xt - xh"]), 2, 1);
        let m = incidence_matrix(&g);
        assert_eq!(m, DMatrix::from_column_slice(2, 1, &[-1.0, 1.0]));
    }

    #[test]
    fn chain_incidence_and_partition() {
        let mut g = Graph::new("g");
        g.add_vertex(VertexSpec::dynamic("a", &["x_dot"]));
        g.add_vertex(VertexSpec::dynamic("b", &["x_dot"]));
        g.add_vertex(VertexSpec::external("c", 1));
        g.add_edge(EdgeSpec::new("e1", &["xt - xh"]), 1, 2);
        g.add_edge(EdgeSpec::new("e2", &["xt - xh"]).external(), 2, 3);
        let m = incidence_matrix(&g);
        assert_eq!(m, DMatrix::from_row_slice(3, 2, &[1.0, 0.0, -1.0, 1.0, 0.0, -1.0]));
        let (up, low) = partition_incidence(&m, &g);
        assert_eq!(up.nrows(), 2);
        assert_eq!(low, DMatrix::from_row_slice(1, 2, &[0.0, -1.0]));
        let s = s_matrix(&g);
        assert_eq!(khatri_rao(&up, &s).unwrap(), up);
    }

    #[test]
    fn zero_edges_gives_empty_columns() {
        let mut g = Graph::new("g");
        g.add_vertex(VertexSpec::dynamic("a", &["x_dot"]));
        assert_eq!(incidence_matrix(&g).shape(), (1, 0));
    }

    #[test]
    fn identity_block_expands_to_identity() {
        let m = DMatrix::from_element(1, 1, 1.0);
        let s = SMatrix::from_blocks(vec![2], vec![2], vec![DMatrix::identity(2, 2)]);
        assert_eq!(khatri_rao(&m, &s).unwrap(), DMatrix::<f64>::identity(2, 2));
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let m = DMatrix::zeros(2, 1);
        assert!(khatri_rao(&m, &SMatrix::ones(1, 1)).is_err());
    }
}
