use super::AnalysisError;
use crate::expr::Expr;
use crate::graph::symbols::{input_number, End};
use crate::graph::{DisturbanceSource, Graph, VertexKind};
use crate::sim::{DynamicSystem, Trajectory};
use std::collections::{BTreeMap, HashMap};

/// Decomposition of one flow entry as `f + Σ g_k·u_k`.
#[derive(Clone, Debug, PartialEq)]
pub struct EntryForm {
    pub edge: usize,
    pub entry: usize,
    pub affine: bool,
    /// The entry with every input set to zero.
    pub f: Expr,
    /// Input coefficient per input variable that appears in the entry.
    pub g: BTreeMap<String, Expr>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PassivityReport {
    pub entries: Vec<EntryForm>,
}

impl PassivityReport {
    pub fn all_affine(&self) -> bool {
        self.entries.iter().all(|e| e.affine)
    }

    /// Edges (1-based) with at least one entry that is not input-affine.
    pub fn offending_edges(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.entries.iter().filter(|e| !e.affine).map(|e| e.edge).collect();
        v.dedup();
        v
    }
}

/// Checks every edge equation for the input-affine form `f_j + g_j·u`.
///
/// An entry is affine when all second partials with respect to input
/// variables (including mixed ones) simplify to zero.
pub fn passivity_form_check(g: &Graph) -> PassivityReport {
    let mut entries = Vec::new();
    for (j, e) in g.edges.iter().enumerate() {
        for (k, eq) in e.equations.iter().enumerate() {
            let inputs: Vec<String> = eq.free_symbols().into_iter().filter(|s| input_number(s).is_some()).collect();
            let mut gains = BTreeMap::new();
            let mut affine = true;
            for a in &inputs {
                let da = eq.differentiate(a).simplify();
                for b in &inputs {
                    if !da.differentiate(b).simplify().is_zero() {
                        affine = false;
                    }
                }
                gains.insert(a.clone(), da);
            }
            let zero: HashMap<String, Expr> = inputs.iter().map(|s| (s.clone(), Expr::Const(0.0))).collect();
            let f = eq.substitute(&zero).simplify();
            entries.push(EntryForm { edge: j + 1, entry: k + 1, affine, f, g: gains });
        }
    }
    PassivityReport { entries }
}

/// Running supply integral `z(t) = ∫ uᵀy dt` and its bound.
#[derive(Clone, Debug, PartialEq)]
pub struct PassivityTrace {
    pub times: Vec<f64>,
    pub z: Vec<f64>,
    pub beta: f64,
}

impl PassivityTrace {
    pub fn max(&self) -> f64 {
        self.z.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Trapezoidal accumulation of `uᵀy` over the time grid. The flag is set
/// when `z` exceeds `beta` anywhere.
pub fn passivity_index(
    u: &[Vec<f64>],
    y: &[Vec<f64>],
    times: &[f64],
    beta: f64,
) -> Result<(PassivityTrace, bool), AnalysisError> {
    if u.len() != times.len() || y.len() != times.len() {
        return Err(AnalysisError::Argument(format!(
            "series lengths {} and {} do not match the {} grid points",
            u.len(),
            y.len(),
            times.len()
        )));
    }
    let supply: Vec<f64> = u
        .iter()
        .zip(y)
        .map(|(a, b)| {
            if a.len() != b.len() {
                return Err(AnalysisError::Argument("u and y widths differ".into()));
            }
            Ok(a.iter().zip(b).map(|(p, q)| p * q).sum())
        })
        .collect::<Result<_, _>>()?;
    let mut z = Vec::with_capacity(times.len());
    let mut acc = 0.0;
    for k in 0..times.len() {
        if k > 0 {
            acc += 0.5 * (times[k] - times[k - 1]) * (supply[k] + supply[k - 1]);
        }
        z.push(acc);
    }
    let trace = PassivityTrace { times: times.to_vec(), z, beta };
    let violated = trace.max() > beta;
    Ok((trace, violated))
}

#[derive(Clone, Copy)]
enum Potential {
    State(usize),
    Disturbance(usize),
    Zero,
}

/// Outputs `y = -G(x, xᵗ)(M̄ᵀx + M̲ᵀxᵗ)` for the whole graph treated as one
/// subsystem, one row per trajectory sample. `G` is the input gain of each
/// flow entry and the bracket is the tail-minus-head potential of the entry's
/// target state; open ends carry zero potential.
pub fn passivity_outputs(g: &Graph, sys: &DynamicSystem, traj: &Trajectory) -> Result<Vec<Vec<f64>>, AnalysisError> {
    if sys.state_count() != g.total_states() || sys.flow_count() != g.total_flow_entries() {
        return Err(AnalysisError::Argument("system was not assembled from this graph".into()));
    }
    let mut offset = vec![usize::MAX; g.vertices.len()];
    let mut n = 0;
    for (i, v) in g.vertices.iter().enumerate() {
        if v.kind != VertexKind::External {
            offset[i] = n;
            n += v.state_count;
        }
    }
    let mut dist = HashMap::new();
    for (k, d) in g.disturbances().into_iter().enumerate() {
        if let DisturbanceSource::Vertex { vertex, state } = d.source {
            dist.insert((vertex, state), k);
        }
    }
    let potential = |v: usize, s: usize| -> Potential {
        if v == 0 {
            return Potential::Zero;
        }
        let spec = g.vertex(v);
        let s = s.min(spec.state_count);
        match spec.kind {
            VertexKind::External => dist.get(&(v, s)).map_or(Potential::Zero, |&k| Potential::Disturbance(k)),
            _ => Potential::State(offset[v - 1] + s - 1),
        }
    };
    let mut ends = Vec::new();
    for (j, e) in g.edges.iter().enumerate() {
        for k in 0..e.flow_arity() {
            let s = e.targets.get(k).copied().filter(|&s| s > 0).unwrap_or(1);
            ends.push((potential(g.endpoint(j + 1, End::Tail), s), potential(g.endpoint(j + 1, End::Head), s)));
        }
    }
    let mut out = Vec::with_capacity(traj.len());
    for r in 0..traj.len() {
        let (x, u, d) = (&traj.states[r], &traj.inputs[r], &traj.disturbances[r]);
        let value = |p: Potential| match p {
            Potential::State(i) => x[i],
            Potential::Disturbance(k) => d[k],
            Potential::Zero => 0.0,
        };
        let gain = sys.flow_input_jacobian(&sys.point(traj.times[r], x, u, d))?;
        let mut y = vec![0.0; u.len()];
        for (f, (t, h)) in ends.iter().enumerate() {
            let delta = value(*t) - value(*h);
            for (k, yk) in y.iter_mut().enumerate() {
                *yk -= gain[(f, k)] * delta;
            }
        }
        out.push(y);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{EdgeSpec, InputSpec, Parameter, VertexSpec};
    use crate::sim::{simulate, Hold};

    fn one_edge(eq: &str) -> Graph {
        let mut g = Graph::new("e");
        let a = g.add_vertex(VertexSpec::dynamic("a", &["x_dot"]).ic(&[1.0]));
        let b = g.add_vertex(VertexSpec::dynamic("b", &["x_dot"]).ic(&[0.0]));
        g.add_edge(EdgeSpec::new("e", &[eq]), a, b);
        for p in ["cp_f", "hA", "k"] {
            g.add_parameter(Parameter::scalar(p, p, 1.0, ""));
        }
        g.add_input(InputSpec::new("u", "u1", "").nominal(0.5));
        g
    }

    #[test]
    fn advection_is_affine() {
        let r = passivity_form_check(&one_edge("cp_f*u1*xt"));
        assert!(r.all_affine());
        assert!(r.entries[0].f.is_zero());
        assert_eq!(r.entries[0].g["u1"], Expr::parse("cp_f*xt").unwrap());
    }

    #[test]
    fn conduction_has_no_gain() {
        let r = passivity_form_check(&one_edge("hA*(xt-xh)"));
        assert!(r.all_affine());
        assert!(r.entries[0].g.is_empty());
        assert_eq!(r.entries[0].f, Expr::parse("hA*(xt-xh)").unwrap());
    }

    #[test]
    fn quadratic_input_is_flagged() {
        let r = passivity_form_check(&one_edge("k*u1^2*xt"));
        assert!(!r.all_affine());
        assert_eq!(r.offending_edges(), vec![1]);
    }

    #[test]
    fn constant_supply_accumulates_linearly() {
        let t: Vec<f64> = (0..11).map(|k| k as f64 * 0.1).collect();
        let u = vec![vec![2.0]; 11];
        let y = vec![vec![1.5]; 11];
        let (trace, violated) = passivity_index(&u, &y, &t, 10.0).unwrap();
        for (z, t) in trace.z.iter().zip(&t) {
            assert!((z - 3.0 * t).abs() < 1e-14);
        }
        assert!(!violated);
        assert!(passivity_index(&u, &y, &t, 2.0).unwrap().1);
    }

    #[test]
    fn zero_input_never_violates() {
        let t = vec![0.0, 1.0, 2.0];
        let u = vec![vec![0.0]; 3];
        let y = vec![vec![5.0]; 3];
        let (trace, violated) = passivity_index(&u, &y, &t, 1e-12).unwrap();
        assert_eq!(trace.z, vec![0.0; 3]);
        assert!(!violated);
    }

    #[test]
    fn advection_output_is_gain_times_potential_drop() {
        let g = one_edge("cp_f*u1*xt");
        let sys = DynamicSystem::from_graph(&g).unwrap();
        let traj = simulate(&sys, &[1.0, 0.0], &Hold, (0.0, 0.1), 0.05).unwrap();
        let y = passivity_outputs(&g, &sys, &traj).unwrap();
        for (r, yr) in y.iter().enumerate() {
            let x = &traj.states[r];
            assert!((yr[0] + x[0] * (x[0] - x[1])).abs() < 1e-14);
        }
    }
}
