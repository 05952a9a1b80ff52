use super::symbolic::{derivative_symbol, parse_channel_symbol, parse_state_symbol, SymbolicSystem};
use super::SimError;
use crate::expr::{Compiled, EvalError, Expr, Function};
use crate::graph::{Graph, ParamValue, TableFunction};
use nalgebra::{DMatrix, DVector};
use std::collections::HashMap;
use std::sync::Arc;

/// Eight-point Gauss-Legendre nodes and weights on [-1, 1].
const GAUSS8: [(f64, f64); 8] = [
    (-0.9602898564975363, 0.1012285362903763),
    (-0.7966664774136267, 0.2223810344533745),
    (-0.525_532_409_916_329, 0.3137066458778873),
    (-0.1834346424956498, 0.362_683_783_378_362),
    (0.1834346424956498, 0.362_683_783_378_362),
    (0.525_532_409_916_329, 0.3137066458778873),
    (0.7966664774136267, 0.2223810344533745),
    (0.9602898564975363, 0.1012285362903763),
];

/// A compiled scalar with sparse gradients in the states and inputs.
#[derive(Clone, Debug)]
struct Scalar {
    value: Compiled,
    dx: Vec<(usize, Compiled)>,
    du: Vec<(usize, Compiled)>,
    depends_on_point: bool,
}

#[derive(Clone, Debug)]
struct Row {
    coeffs: Vec<(usize, Scalar)>,
    flows: Vec<(usize, f64)>,
    /// `extra - lhs(x, 0)`.
    source: Scalar,
}

/// A compiled model: `Σ_k C_rk(x) ẋ_k = F_r(x, u, d, t)` per row, with
/// algebraic rows carrying no coefficients.
///
/// Evaluators read a flat point vector laid out as
/// `[x | u | d | scalar parameters | t]`, built by [`DynamicSystem::point`].
#[derive(Clone, Debug)]
pub struct DynamicSystem {
    symbolic: SymbolicSystem,
    n: usize,
    m: usize,
    nd: usize,
    param_names: Vec<String>,
    param_values: Vec<f64>,
    flows: Vec<Scalar>,
    rows: Vec<Row>,
    blocks: Vec<Vec<usize>>,
    algebraic: Vec<usize>,
    tables: Vec<Arc<TableFunction>>,
}

struct Compiler<'a> {
    n: usize,
    m: usize,
    slots: &'a HashMap<String, usize>,
    funcs: &'a HashMap<String, Arc<dyn Function>>,
}

impl Compiler<'_> {
    fn compile(&self, e: &Expr) -> Result<Compiled, SimError> {
        Compiled::compile(e, self.slots, self.funcs).map_err(|err| match err {
            EvalError::Unbound(s) => SimError::Structure(format!("unresolvable symbol '{s}' in {e}")),
            other => SimError::Eval(other),
        })
    }

    fn scalar(&self, e: &Expr) -> Result<Scalar, SimError> {
        let e = e.simplify();
        let mut dx = Vec::new();
        let mut du = Vec::new();
        let mut depends_on_point = false;
        for s in e.free_symbols() {
            if let Some((i, false)) = parse_state_symbol(&s) {
                if i < self.n {
                    depends_on_point = true;
                    let d = e.differentiate(&s).simplify();
                    if !d.is_zero() {
                        dx.push((i, self.compile(&d)?));
                    }
                }
            } else if let Some(k) = parse_channel_symbol(&s, 'u') {
                if k < self.m {
                    depends_on_point = true;
                    let d = e.differentiate(&s).simplify();
                    if !d.is_zero() {
                        du.push((k, self.compile(&d)?));
                    }
                }
            } else if parse_channel_symbol(&s, 'd').is_some() || s == "t" {
                depends_on_point = true;
            }
        }
        dx.sort_by_key(|p| p.0);
        du.sort_by_key(|p| p.0);
        Ok(Scalar { value: self.compile(&e)?, dx, du, depends_on_point })
    }
}

fn find(parent: &mut [usize], i: usize) -> usize {
    let mut r = i;
    while parent[r] != r {
        r = parent[r];
    }
    let mut i = i;
    while parent[i] != r {
        let next = parent[i];
        parent[i] = r;
        i = next;
    }
    r
}

/// Solves a small dense block, rejecting numerically singular matrices.
fn solve_block(c: DMatrix<f64>, f: DVector<f64>) -> Option<DVector<f64>> {
    let scale = c.amax();
    if !(scale > 0.0) || !scale.is_finite() {
        return None;
    }
    if c.nrows() == 1 {
        return Some(DVector::from_element(1, f[0] / c[(0, 0)]));
    }
    let lu = c.lu();
    let pivot = lu.u().diagonal().amin();
    if pivot < 1e-13 * scale {
        return None;
    }
    lu.solve(&f)
}

impl DynamicSystem {
    /// Assembles a validated graph.
    pub fn from_graph(g: &Graph) -> Result<Self, SimError> {
        Self::new(SymbolicSystem::from_graph(g)?)
    }

    pub fn new(symbolic: SymbolicSystem) -> Result<Self, SimError> {
        let n = symbolic.states.len();
        let m = symbolic.inputs.len();
        let nd = symbolic.disturbances.len();
        if symbolic.rows.len() != n {
            return Err(SimError::Structure(format!("{} balance rows for {n} states", symbolic.rows.len())));
        }
        let mut slots = HashMap::new();
        for i in 0..n {
            slots.insert(super::symbolic::state_symbol(i), i);
        }
        for (k, c) in symbolic.inputs.iter().enumerate() {
            slots.insert(c.var.clone(), n + k);
        }
        for (k, c) in symbolic.disturbances.iter().enumerate() {
            slots.insert(c.var.clone(), n + m + k);
        }
        let mut param_names = Vec::new();
        let mut param_values = Vec::new();
        let mut funcs: HashMap<String, Arc<dyn Function>> = HashMap::new();
        let mut tables = Vec::new();
        for p in &symbolic.parameters {
            match &p.value {
                ParamValue::Scalar(v) => {
                    slots.insert(p.var.clone(), n + m + nd + param_names.len());
                    param_names.push(p.var.clone());
                    param_values.push(*v);
                }
                ParamValue::Table(t) => {
                    let f = Arc::new(TableFunction::new(p.var.clone(), t.clone()));
                    funcs.insert(p.var.clone(), f.clone());
                    tables.push(f);
                }
            }
        }
        slots.insert("t".into(), n + m + nd + param_names.len());
        let cc = Compiler { n, m, slots: &slots, funcs: &funcs };

        let flows = symbolic.flows.iter().map(|f| cc.scalar(&f.expr)).collect::<Result<Vec<_>, _>>()?;

        let mut rows = Vec::with_capacity(n);
        let mut parent: Vec<usize> = (0..n).collect();
        for (r, spec) in symbolic.rows.iter().enumerate() {
            let zero_dots: HashMap<String, Expr> = (0..n).map(|k| (derivative_symbol(k), Expr::Const(0.0))).collect();
            let mut coeffs = Vec::new();
            for s in spec.lhs.free_symbols() {
                let Some((k, true)) = parse_state_symbol(&s) else { continue };
                if k >= n {
                    return Err(SimError::Structure(format!("row {} references unknown derivative {s}", r + 1)));
                }
                let c = spec.lhs.differentiate(&s).simplify();
                if c.is_zero() {
                    continue;
                }
                if c.free_symbols().iter().any(|s| matches!(parse_state_symbol(s), Some((_, true)))) {
                    return Err(SimError::Structure(format!("row {} is not linear in the derivatives", r + 1)));
                }
                coeffs.push((k, cc.scalar(&c)?));
                let (a, b) = (find(&mut parent, r), find(&mut parent, k));
                parent[a] = b;
            }
            coeffs.sort_by_key(|c| c.0);
            let lhs0 = spec.lhs.substitute(&zero_dots);
            let source = cc.scalar(&crate::expr::sub(spec.extra.clone(), lhs0))?;
            rows.push(Row { coeffs, flows: spec.flows.clone(), source });
        }

        let algebraic: Vec<usize> = (0..n).filter(|&r| rows[r].coeffs.is_empty()).collect();
        for &r in &algebraic {
            if !symbolic.states[r].algebraic {
                return Err(SimError::Structure(format!(
                    "dynamic state '{}' has no capacitance",
                    symbolic.states[r].name
                )));
            }
        }
        let mut groups: HashMap<usize, Vec<usize>> = HashMap::new();
        for r in 0..n {
            if !rows[r].coeffs.is_empty() {
                let root = find(&mut parent, r);
                groups.entry(root).or_default().push(r);
            }
        }
        let mut blocks: Vec<Vec<usize>> = groups.into_values().collect();
        blocks.sort();

        let sys = DynamicSystem {
            symbolic,
            n,
            m,
            nd,
            param_names,
            param_values,
            flows,
            rows,
            blocks,
            algebraic,
            tables,
        };
        sys.check_constant_blocks()?;
        Ok(sys)
    }

    /// Rejects blocks whose coefficients do not depend on the point and are
    /// singular for the bound parameter values.
    fn check_constant_blocks(&self) -> Result<(), SimError> {
        let p = self.point(0.0, &vec![0.0; self.n], &vec![0.0; self.m], &vec![0.0; self.nd]);
        for block in &self.blocks {
            let constant = block.iter().all(|&r| self.rows[r].coeffs.iter().all(|(_, c)| !c.depends_on_point));
            if !constant {
                continue;
            }
            let c = self.block_matrix(block, &p)?;
            let f = DVector::from_element(block.len(), 1.0);
            if solve_block(c, f).is_none() {
                return Err(SimError::Singular { state: self.symbolic.states[block[0]].name.clone(), t: 0.0 });
            }
        }
        Ok(())
    }

    pub fn symbolic(&self) -> &SymbolicSystem {
        &self.symbolic
    }

    pub fn state_count(&self) -> usize {
        self.n
    }

    pub fn input_count(&self) -> usize {
        self.m
    }

    pub fn disturbance_count(&self) -> usize {
        self.nd
    }

    pub fn flow_count(&self) -> usize {
        self.flows.len()
    }

    pub fn is_dae(&self) -> bool {
        !self.algebraic.is_empty()
    }

    /// Indices of algebraic states.
    pub fn algebraic_states(&self) -> &[usize] {
        &self.algebraic
    }

    /// Groups of states coupled through their capacitance coefficients.
    pub fn coupling_blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn state_names(&self) -> Vec<String> {
        self.symbolic.states.iter().map(|s| s.name.clone()).collect()
    }

    pub fn default_inputs(&self) -> Vec<f64> {
        self.symbolic.inputs.iter().map(|c| c.default).collect()
    }

    pub fn default_disturbances(&self) -> Vec<f64> {
        self.symbolic.disturbances.iter().map(|c| c.default).collect()
    }

    /// Initial conditions in layout order, if every state has one.
    pub fn initial_state(&self) -> Option<Vec<f64>> {
        self.symbolic.states.iter().map(|s| s.initial).collect()
    }

    pub fn parameter(&self, name: &str) -> Option<f64> {
        self.param_names.iter().position(|p| p == name).map(|i| self.param_values[i])
    }

    /// A copy with some scalar parameters rebound.
    pub fn with_parameters(&self, values: &[(&str, f64)]) -> Result<Self, SimError> {
        let mut out = self.clone();
        for (name, v) in values {
            let i = self
                .param_names
                .iter()
                .position(|p| p == name)
                .ok_or_else(|| SimError::Argument(format!("unknown scalar parameter '{name}'")))?;
            out.param_values[i] = *v;
            for p in &mut out.symbolic.parameters {
                if p.var == *name {
                    p.value = ParamValue::Scalar(*v);
                }
            }
        }
        out.check_constant_blocks()?;
        Ok(out)
    }

    /// Lays out an evaluation point.
    pub fn point(&self, t: f64, x: &[f64], u: &[f64], d: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.n);
        let mut p = Vec::with_capacity(self.n + self.m + self.nd + self.param_values.len() + 1);
        p.extend_from_slice(x);
        p.extend_from_slice(u);
        p.extend_from_slice(d);
        p.extend_from_slice(&self.param_values);
        p.push(t);
        p
    }
    pub(crate) fn time_of(&self, p: &[f64]) -> f64 {
        p[p.len() - 1]
    }

    /// Every flow entry at `p`.
    pub fn flow_values(&self, p: &[f64]) -> Result<Vec<f64>, SimError> {
        self.flows.iter().map(|f| f.value.eval(p).map_err(SimError::from)).collect()
    }

    fn row_rhs(&self, r: usize, p: &[f64], flows: &[f64]) -> Result<f64, SimError> {
        let row = &self.rows[r];
        let mut acc = row.source.value.eval(p)?;
        for &(j, c) in &row.flows {
            acc += c * flows[j];
        }
        Ok(acc)
    }

    /// Balance right-hand sides `F_r` for every row.
    pub fn rhs(&self, p: &[f64]) -> Result<DVector<f64>, SimError> {
        let flows = self.flow_values(p)?;
        self.rhs_with_flows(p, &flows)
    }

    fn rhs_with_flows(&self, p: &[f64], flows: &[f64]) -> Result<DVector<f64>, SimError> {
        let mut f = DVector::zeros(self.n);
        for r in 0..self.n {
            f[r] = self.row_rhs(r, p, flows)?;
        }
        Ok(f)
    }

    /// Full capacitance matrix `C(x)`; algebraic rows are zero.
    pub fn capacitance(&self, p: &[f64]) -> Result<DMatrix<f64>, SimError> {
        let mut c = DMatrix::zeros(self.n, self.n);
        for (r, row) in self.rows.iter().enumerate() {
            for (k, s) in &row.coeffs {
                c[(r, *k)] = s.value.eval(p)?;
            }
        }
        Ok(c)
    }

    fn block_matrix(&self, block: &[usize], p: &[f64]) -> Result<DMatrix<f64>, SimError> {
        let mut c = DMatrix::zeros(block.len(), block.len());
        for (a, &r) in block.iter().enumerate() {
            for (k, s) in &self.rows[r].coeffs {
                let b = block.iter().position(|q| q == k).expect("coefficient inside its block");
                c[(a, b)] = s.value.eval(p)?;
            }
        }
        Ok(c)
    }

    /// Solves `C(x) ẋ = F` block by block for the dynamic states, given `F`.
    pub fn solve_capacitance(&self, p: &[f64], f: &DVector<f64>) -> Result<DVector<f64>, SimError> {
        let mut xdot = DVector::zeros(self.n);
        for block in &self.blocks {
            let c = self.block_matrix(block, p)?;
            let rhs = DVector::from_iterator(block.len(), block.iter().map(|&r| f[r]));
            let sol = solve_block(c, rhs).ok_or_else(|| SimError::Singular {
                state: self.symbolic.states[block[0]].name.clone(),
                t: self.time_of(p),
            })?;
            for (a, &r) in block.iter().enumerate() {
                xdot[r] = sol[a];
            }
        }
        Ok(xdot)
    }

    /// State derivative of an ODE system at `p`.
    pub fn derivative(&self, p: &[f64]) -> Result<DVector<f64>, SimError> {
        if self.is_dae() {
            return Err(SimError::Structure("explicit derivative requested for a system with algebraic states".into()));
        }
        let f = self.rhs(p)?;
        self.solve_capacitance(p, &f)
    }

    /// `(∂F/∂x, ∂F/∂u)` from the symbolic gradients.
    pub fn rhs_jacobians(&self, p: &[f64]) -> Result<(DMatrix<f64>, DMatrix<f64>), SimError> {
        let mut gx = vec![Vec::new(); self.flows.len()];
        let mut gu = vec![Vec::new(); self.flows.len()];
        for (j, f) in self.flows.iter().enumerate() {
            for (i, d) in &f.dx {
                gx[j].push((*i, d.eval(p)?));
            }
            for (k, d) in &f.du {
                gu[j].push((*k, d.eval(p)?));
            }
        }
        let mut jx: DMatrix<f64> = DMatrix::zeros(self.n, self.n);
        let mut ju: DMatrix<f64> = DMatrix::zeros(self.n, self.m);
        for (r, row) in self.rows.iter().enumerate() {
            for (i, d) in &row.source.dx {
                jx[(r, *i)] += d.eval(p)?;
            }
            for (k, d) in &row.source.du {
                ju[(r, *k)] += d.eval(p)?;
            }
            for &(j, c) in &row.flows {
                for &(i, v) in &gx[j] {
                    jx[(r, i)] += c * v;
                }
                for &(k, v) in &gu[j] {
                    ju[(r, k)] += c * v;
                }
            }
        }
        if jx.iter().chain(ju.iter()).any(|v: &f64| !v.is_finite()) {
            return Err(SimError::Eval(EvalError::Domain {
                subexpr: "rhs jacobian".into(),
                reason: "non-finite derivative".into(),
            }));
        }
        Ok((jx, ju))
    }

    /// `∂Γ/∂u`, one row per flow entry.
    pub fn flow_input_jacobian(&self, p: &[f64]) -> Result<DMatrix<f64>, SimError> {
        let mut j = DMatrix::zeros(self.flows.len(), self.m);
        for (r, f) in self.flows.iter().enumerate() {
            for (k, d) in &f.du {
                j[(r, *k)] = d.eval(p)?;
            }
        }
        Ok(j)
    }

    /// Matrix with entries `Σ_k ∂C_rk/∂x_l · v_k`.
    pub fn capacitance_directional(&self, p: &[f64], v: &DVector<f64>) -> Result<DMatrix<f64>, SimError> {
        let mut out = DMatrix::zeros(self.n, self.n);
        for (r, row) in self.rows.iter().enumerate() {
            for (k, c) in &row.coeffs {
                if v[*k] == 0.0 {
                    continue;
                }
                for (l, d) in &c.dx {
                    out[(r, *l)] += d.eval(p)? * v[*k];
                }
            }
        }
        Ok(out)
    }

    /// Stored quantity per row, `∫₀¹ Σ_k C_rk(s·x) x_k ds`.
    pub fn stored(&self, p: &[f64]) -> Result<DVector<f64>, SimError> {
        let x: Vec<f64> = p[..self.n].to_vec();
        let mut q = p.to_vec();
        let mut out = DVector::zeros(self.n);
        for &(xi, w) in &GAUSS8 {
            let (s, w) = (0.5 * (1.0 + xi), 0.5 * w);
            for i in 0..self.n {
                q[i] = s * x[i];
            }
            for (r, row) in self.rows.iter().enumerate() {
                for (k, c) in &row.coeffs {
                    out[r] += w * c.value.eval(&q)? * x[*k];
                }
            }
        }
        Ok(out)
    }

    /// Total stored energy and net external power at `p`.
    pub fn energy_and_power(&self, p: &[f64]) -> Result<(f64, f64), SimError> {
        Ok((self.stored(p)?.sum(), self.rhs(p)?.sum()))
    }

    pub(crate) fn reset_table_flags(&self) {
        for t in &self.tables {
            t.reset();
        }
    }

    pub(crate) fn table_warnings(&self) -> Vec<String> {
        self.tables
            .iter()
            .filter(|t| t.extrapolated())
            .map(|t| format!("table '{}' evaluated outside its grid (held flat)", t.name))
            .collect()
    }
}
