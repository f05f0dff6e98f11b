//! Stiffness assembly for the Laplacian, DOF classification and the
//! partitioned solve of a quadrilateral problem and its conjugate.
//!
//! Element bubbles are condensed statically; the remaining skeleton unknowns
//! that are free in both problems (class `B`) are factored once and every
//! solve proceeds through the Schur complement on its boundary unknowns.

pub mod dense;
pub mod sparse;

use std::collections::HashMap;
use std::io::Write;
use std::sync::atomic::{AtomicUsize, Ordering};

use serde::{Deserialize, Serialize};

use crate::basis::{gauss_legendre, ShapeSet};
use crate::error::{Error, Result};
use crate::geometry::problem::BoundaryTag;
pub use crate::mesh::ElementMap;
use crate::mesh::Mesh;
use dense::{dot, DenseCholesky};
use sparse::{minimum_degree, SparseCholesky, Triplets};

/// Process-wide count of `A_BB` factorizations.
pub static BB_FACTORIZATIONS: AtomicUsize = AtomicUsize::new(0);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DofClass {
    /// Free in both the problem and its conjugate.
    B,
    /// Dirichlet `u = 0`.
    D0,
    /// Dirichlet `u = 1`.
    D1,
    /// Neumann; Dirichlet `0` in the conjugate problem.
    N0,
    /// Neumann; Dirichlet `1` in the conjugate problem.
    N1,
}

impl DofClass {
    pub fn is_dirichlet(self) -> bool {
        matches!(self, DofClass::D0 | DofClass::D1)
    }

    fn swapped(self) -> Self {
        match self {
            DofClass::D0 => DofClass::N0,
            DofClass::D1 => DofClass::N1,
            DofClass::N0 => DofClass::D0,
            DofClass::N1 => DofClass::D1,
            DofClass::B => DofClass::B,
        }
    }
}

/// Boundary roles of the primal problem on a quadrilateral.
pub fn primal_role(tag: BoundaryTag) -> DofClass {
    match tag {
        BoundaryTag::Gamma1 => DofClass::N1,
        BoundaryTag::Gamma2 => DofClass::D0,
        BoundaryTag::Gamma3 => DofClass::N0,
        BoundaryTag::Gamma4 | BoundaryTag::Inner => DofClass::D1,
        BoundaryTag::Outer => DofClass::D0,
    }
}

/// Boundary roles of the conjugate problem: `u2 = 1` on `γ1`, `0` on `γ3`.
pub fn conjugate_role(tag: BoundaryTag) -> DofClass {
    primal_role(tag).swapped()
}

/// Global DOF numbering (nodes, then `p - 1` modes per edge, then `(p - 1)²`
/// bubbles per element) with a class per DOF.
#[derive(Clone, Debug, PartialEq)]
pub struct DofTable {
    pub p: usize,
    pub n_nodes: usize,
    pub n_edges: usize,
    pub n_elements: usize,
    pub classes: Vec<DofClass>,
}

impl DofTable {
    /// Classifies DOFs from the boundary tags of `mesh`. A node on several
    /// arcs takes the Dirichlet class when any of its arcs is Dirichlet.
    pub fn classify(mesh: &Mesh, p: usize, role: impl Fn(BoundaryTag) -> DofClass) -> Result<Self> {
        let mut table = Self {
            p,
            n_nodes: mesh.nodes.len(),
            n_edges: mesh.edges.len(),
            n_elements: mesh.elements.len(),
            classes: Vec::new(),
        };
        let mut classes = vec![DofClass::B; mesh.dof_count(p)];
        let multiplicity = mesh.edge_multiplicity();
        let mut node_class: Vec<Option<DofClass>> = vec![None; mesh.nodes.len()];
        for (e, edge) in mesh.edges.iter().enumerate() {
            if multiplicity[e] != 1 {
                continue;
            }
            let class = role(edge.tag.ok_or(Error::UntaggedEdge(e))?);
            for i in 2..=p {
                classes[table.edge_dof(e, i)] = class;
            }
            for &n in &edge.nodes {
                node_class[n] = match (node_class[n], class) {
                    (None, c) => Some(c),
                    (Some(a), c) if a == c => Some(a),
                    (Some(a), c) if a.is_dirichlet() && c.is_dirichlet() => {
                        return Err(Error::Problem(format!(
                            "node {n} joins Dirichlet arcs with different values"
                        )))
                    }
                    (Some(a), c) => Some(if a.is_dirichlet() {
                        a
                    } else if c.is_dirichlet() {
                        c
                    } else {
                        a
                    }),
                };
            }
        }
        for (n, c) in node_class.into_iter().enumerate() {
            if let Some(c) = c {
                classes[n] = c;
            }
        }
        table.classes = classes;
        Ok(table)
    }

    pub fn primal(mesh: &Mesh, p: usize) -> Result<Self> {
        Self::classify(mesh, p, primal_role)
    }

    pub fn conjugate(mesh: &Mesh, p: usize) -> Result<Self> {
        Self::classify(mesh, p, conjugate_role)
    }

    /// Table with the roles `D1↔N1`, `D0↔N0` exchanged DOF by DOF.
    pub fn swapped(&self) -> Self {
        Self {
            classes: self.classes.iter().map(|c| c.swapped()).collect(),
            ..self.clone()
        }
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn skeleton_len(&self) -> usize {
        self.n_nodes + self.n_edges * (self.p - 1)
    }

    pub fn count(&self, class: DofClass) -> usize {
        self.classes.iter().filter(|&&c| c == class).count()
    }

    pub fn node_dof(&self, n: usize) -> usize {
        n
    }

    pub fn edge_dof(&self, e: usize, i: usize) -> usize {
        self.n_nodes + e * (self.p - 1) + (i - 2)
    }

    pub fn bubble_start(&self, el: usize) -> usize {
        self.skeleton_len() + el * (self.p - 1) * (self.p - 1)
    }

    /// Value of a DOF fixed by its class: nodal `D1` DOFs are 1, every other
    /// known coefficient is 0.
    pub fn dirichlet_value(&self, dof: usize) -> f64 {
        if dof < self.n_nodes && self.classes[dof] == DofClass::D1 {
            1.0
        } else {
            0.0
        }
    }
}

/// Global DOF ids and sign flags of the local modes of every element.
#[derive(Clone, Debug)]
pub struct DofMap {
    pub n_local: usize,
    pub n_skeleton_local: usize,
    pub dofs: Vec<usize>,
    pub signs: Vec<f64>,
}

impl DofMap {
    pub fn new(mesh: &Mesh, p: usize) -> Self {
        let shape = ShapeSet::new(p);
        let n_local = shape.len();
        let n_nodes = mesh.nodes.len();
        let skeleton = n_nodes + mesh.edges.len() * (p - 1);
        let mut dofs = Vec::with_capacity(mesh.elements.len() * n_local);
        let mut signs = Vec::with_capacity(dofs.capacity());
        for (k, el) in mesh.elements.iter().enumerate() {
            for &n in &el.nodes {
                dofs.push(n);
                signs.push(1.0);
            }
            for s in 0..4 {
                for i in 2..=p {
                    dofs.push(n_nodes + el.edges[s] * (p - 1) + (i - 2));
                    signs.push(if i % 2 == 1 { el.signs[s] as f64 } else { 1.0 });
                }
            }
            let start = skeleton + k * (p - 1) * (p - 1);
            for b in 0..(p - 1) * (p - 1) {
                dofs.push(start + b);
                signs.push(1.0);
            }
        }
        Self {
            n_local,
            n_skeleton_local: 4 * p,
            dofs,
            signs,
        }
    }

    pub fn element(&self, e: usize) -> (&[usize], &[f64]) {
        let r = e * self.n_local..(e + 1) * self.n_local;
        (&self.dofs[r.clone()], &self.signs[r])
    }
}

/// Element stiffness matrices in the global sign convention.
#[derive(Clone, Debug)]
pub struct StiffnessSystem {
    pub p: usize,
    pub ndof: usize,
    pub map: DofMap,
    kel: Vec<f64>,
}

/// Reference-square quadrature table: points, weights and mode gradients
/// stored mode-major.
pub struct Quadrature {
    pub points: Vec<(f64, f64)>,
    pub weights: Vec<f64>,
    gxi: Vec<f64>,
    geta: Vec<f64>,
}

impl Quadrature {
    pub fn new(shape: &ShapeSet, order: usize) -> Self {
        let (x, w) = gauss_legendre(order);
        let nq = order * order;
        let nm = shape.len();
        let mut points = Vec::with_capacity(nq);
        let mut weights = Vec::with_capacity(nq);
        let mut gxi = vec![0.0; nm * nq];
        let mut geta = vec![0.0; nm * nq];
        let (mut v, mut a, mut b) = (vec![0.0; nm], vec![0.0; nm], vec![0.0; nm]);
        for i in 0..order {
            for j in 0..order {
                let q = points.len();
                points.push((x[i], x[j]));
                weights.push(w[i] * w[j]);
                shape.eval_all(x[i], x[j], &mut v, &mut a, &mut b);
                for m in 0..nm {
                    gxi[m * nq + q] = a[m];
                    geta[m * nq + q] = b[m];
                }
            }
        }
        Self {
            points,
            weights,
            gxi,
            geta,
        }
    }
}

/// Stiffness matrix of one element (local sign convention, row-major).
pub fn element_stiffness(
    map: &ElementMap,
    quad: &Quadrature,
    nm: usize,
    element: usize,
) -> Result<Vec<f64>> {
    let nq = quad.points.len();
    let (mut ca, mut cb, mut cc) = (vec![0.0; nq], vec![0.0; nq], vec![0.0; nq]);
    for (q, &(xi, eta)) in quad.points.iter().enumerate() {
        let (_, fx, fy) = map.eval_with_jacobian(xi, eta);
        let det = fx.re * fy.im - fy.re * fx.im;
        if det <= 0.0 || !det.is_finite() {
            return Err(Error::Jacobian { element, det });
        }
        let s = quad.weights[q] / det;
        ca[q] = s * (fy.im * fy.im + fy.re * fy.re);
        cb[q] = -s * (fy.im * fx.im + fy.re * fx.re);
        cc[q] = s * (fx.im * fx.im + fx.re * fx.re);
    }
    let mut hx = vec![0.0; nm * nq];
    let mut hy = vec![0.0; nm * nq];
    for m in 0..nm {
        let (gx, gy) = (
            &quad.gxi[m * nq..(m + 1) * nq],
            &quad.geta[m * nq..(m + 1) * nq],
        );
        for q in 0..nq {
            hx[m * nq + q] = ca[q] * gx[q] + cb[q] * gy[q];
            hy[m * nq + q] = cb[q] * gx[q] + cc[q] * gy[q];
        }
    }
    let mut k = vec![0.0; nm * nm];
    for i in 0..nm {
        let (gx, gy) = (
            &quad.gxi[i * nq..(i + 1) * nq],
            &quad.geta[i * nq..(i + 1) * nq],
        );
        for j in i..nm {
            let v = dot(gx, &hx[j * nq..(j + 1) * nq]) + dot(gy, &hy[j * nq..(j + 1) * nq]);
            k[i * nm + j] = v;
            k[j * nm + i] = v;
        }
    }
    Ok(k)
}

/// Assembles the element matrices of the Laplacian with `(p + 2)²` Gauss points.
pub fn assemble(mesh: &Mesh, table: &DofTable) -> Result<StiffnessSystem> {
    let p = table.p;
    let shape = ShapeSet::new(p);
    let quad = Quadrature::new(&shape, p + 2);
    let map = DofMap::new(mesh, p);
    let nm = shape.len();
    let mut kel = Vec::with_capacity(mesh.elements.len() * nm * nm);
    for e in 0..mesh.elements.len() {
        let mut k = element_stiffness(&mesh.element_map(e), &quad, nm, e)?;
        let (_, signs) = map.element(e);
        for i in 0..nm {
            for j in 0..nm {
                k[i * nm + j] *= signs[i] * signs[j];
            }
        }
        kel.extend_from_slice(&k);
    }
    Ok(StiffnessSystem {
        p,
        ndof: table.len(),
        map,
        kel,
    })
}

/// Coefficient vector over all DOFs of a mesh at uniform order `p`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Field {
    pub p: usize,
    pub coeffs: Vec<f64>,
}

impl StiffnessSystem {
    pub fn n_elements(&self) -> usize {
        self.kel.len() / (self.map.n_local * self.map.n_local)
    }

    pub fn element_matrix(&self, e: usize) -> &[f64] {
        let n2 = self.map.n_local * self.map.n_local;
        &self.kel[e * n2..(e + 1) * n2]
    }

    /// `xᵀ A y`.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        for v in [x, y] {
            if v.len() != self.ndof {
                return Err(Error::Dimension {
                    expected: self.ndof,
                    got: v.len(),
                });
            }
        }
        let nm = self.map.n_local;
        let mut total = 0.0;
        let mut ly = vec![0.0; nm];
        for e in 0..self.n_elements() {
            let (dofs, _) = self.map.element(e);
            let k = self.element_matrix(e);
            for (l, &d) in ly.iter_mut().zip(dofs) {
                *l = y[d];
            }
            for i in 0..nm {
                let xi = x[dofs[i]];
                if xi != 0.0 {
                    total += xi * dot(&k[i * nm..(i + 1) * nm], &ly);
                }
            }
        }
        Ok(total)
    }

    /// `A x`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let nm = self.map.n_local;
        let mut out = vec![0.0; self.ndof];
        let mut lx = vec![0.0; nm];
        for e in 0..self.n_elements() {
            let (dofs, _) = self.map.element(e);
            let k = self.element_matrix(e);
            for (l, &d) in lx.iter_mut().zip(dofs) {
                *l = x[d];
            }
            for i in 0..nm {
                out[dofs[i]] += dot(&k[i * nm..(i + 1) * nm], &lx);
            }
        }
        out
    }

    /// Energy `xᵀ A x` of a field; for a primal solution this is the modulus.
    pub fn energy(&self, f: &Field) -> Result<f64> {
        self.bilinear(&f.coeffs, &f.coeffs)
    }

    /// Writes the assembled matrix (lower triangle) in Matrix Market format.
    pub fn write_matrix_market(&self, mut w: impl Write) -> Result<()> {
        let nm = self.map.n_local;
        let mut entries: HashMap<(usize, usize), f64> = HashMap::new();
        for e in 0..self.n_elements() {
            let (dofs, _) = self.map.element(e);
            let k = self.element_matrix(e);
            for i in 0..nm {
                for j in 0..nm {
                    if dofs[i] >= dofs[j] {
                        *entries.entry((dofs[i], dofs[j])).or_default() += k[i * nm + j];
                    }
                }
            }
        }
        let mut sorted: Vec<_> = entries.into_iter().collect();
        sorted.sort_by_key(|&((r, c), _)| (c, r));
        writeln!(w, "%%MatrixMarket matrix coordinate real symmetric")?;
        writeln!(w, "{} {} {}", self.ndof, self.ndof, sorted.len())?;
        for ((r, c), v) in sorted {
            writeln!(w, "{} {} {:.17e}", r + 1, c + 1, v)?;
        }
        Ok(())
    }
}

struct Bubble {
    /// `K_ii⁻¹ K_ie`, row-major `(n_internal × n_skeleton_local)`.
    coupling: Vec<f64>,
}

/// Static condensation of the bubbles plus a factorization of the skeleton
/// block that is free in every solve.
pub struct PartitionedSolver<'a> {
    sys: &'a StiffnessSystem,
    bubbles: Vec<Bubble>,
    /// Condensed element matrices over the skeleton modes.
    schur: Vec<f64>,
    b_index: Vec<usize>,
    b_dofs: Vec<usize>,
    chol: Option<SparseCholesky>,
    factorizations: usize,
}

/// Solution of one problem on the skeleton plus bubbles.
pub struct Solve {
    pub field: Field,
}

const NONE: usize = usize::MAX;

impl<'a> PartitionedSolver<'a> {
    /// Condenses bubbles and factors the skeleton block over `free_in_all`
    /// (the `B` DOFs).
    pub fn new(
        sys: &'a StiffnessSystem,
        table: &DofTable,
        free_in_all: impl Fn(usize) -> bool,
    ) -> Result<Self> {
        let nm = sys.map.n_local;
        let ns = sys.map.n_skeleton_local;
        let ni = nm - ns;
        let mut bubbles = Vec::with_capacity(sys.n_elements());
        let mut schur = Vec::with_capacity(sys.n_elements() * ns * ns);
        for e in 0..sys.n_elements() {
            let k = sys.element_matrix(e);
            let coupling = if ni > 0 {
                let mut kii = vec![0.0; ni * ni];
                for i in 0..ni {
                    kii[i * ni..(i + 1) * ni]
                        .copy_from_slice(&k[(ns + i) * nm + ns..(ns + i + 1) * nm]);
                }
                let chol = DenseCholesky::factor(kii, ni)?;
                let mut coupling = vec![0.0; ni * ns];
                let mut col = vec![0.0; ni];
                for j in 0..ns {
                    for i in 0..ni {
                        col[i] = k[(ns + i) * nm + j];
                    }
                    chol.solve_in_place(&mut col);
                    for i in 0..ni {
                        coupling[i * ns + j] = col[i];
                    }
                }
                coupling
            } else {
                Vec::new()
            };
            for i in 0..ns {
                for j in 0..ns {
                    let mut v = k[i * nm + j];
                    for m in 0..ni {
                        v -= k[i * nm + ns + m] * coupling[m * ns + j];
                    }
                    schur.push(v);
                }
            }
            bubbles.push(Bubble { coupling });
        }
        let nskel = table.skeleton_len();
        let mut b_index = vec![NONE; nskel];
        let mut b_dofs = Vec::new();
        for d in 0..nskel {
            if free_in_all(d) {
                b_index[d] = b_dofs.len();
                b_dofs.push(d);
            }
        }
        let mut solver = Self {
            sys,
            bubbles,
            schur,
            b_index,
            b_dofs,
            chol: None,
            factorizations: 0,
        };
        solver.factor_bb(table)?;
        Ok(solver)
    }

    fn factor_bb(&mut self, table: &DofTable) -> Result<()> {
        let nb = self.b_dofs.len();
        let ns = self.sys.map.n_skeleton_local;
        let mut t = Triplets::new(nb);
        // Supervariables: one per node and one per edge, so the ordering works
        // on the coarse entity graph.
        let group_of = |d: usize| -> usize {
            if d < table.n_nodes {
                d
            } else {
                table.n_nodes + (d - table.n_nodes) / (table.p - 1)
            }
        };
        let n_entities = table.n_nodes + table.n_edges;
        let mut groups: Vec<Vec<usize>> = vec![Vec::new(); n_entities];
        for (bi, &d) in self.b_dofs.iter().enumerate() {
            groups[group_of(d)].push(bi);
        }
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n_entities];
        for e in 0..self.sys.n_elements() {
            let (dofs, _) = self.sys.map.element(e);
            let s = &self.schur[e * ns * ns..(e + 1) * ns * ns];
            let local_b: Vec<(usize, usize)> = (0..ns)
                .filter_map(|i| {
                    let b = self.b_index[dofs[i]];
                    (b != NONE).then_some((i, b))
                })
                .collect();
            for &(i, bi) in &local_b {
                for &(j, bj) in &local_b {
                    if bi >= bj {
                        t.add(bi, bj, s[i * ns + j]);
                    }
                }
            }
            let mut ents: Vec<usize> = local_b.iter().map(|&(i, _)| group_of(dofs[i])).collect();
            ents.sort_unstable();
            ents.dedup();
            for &a in &ents {
                adj[a].extend(ents.iter().copied().filter(|&b| b != a));
            }
        }
        let nonempty: Vec<usize> = (0..n_entities).filter(|&g| !groups[g].is_empty()).collect();
        let mut compact = vec![NONE; n_entities];
        for (k, &g) in nonempty.iter().enumerate() {
            compact[g] = k;
        }
        let groups_c: Vec<Vec<usize>> = nonempty.iter().map(|&g| groups[g].clone()).collect();
        let adj_c: Vec<Vec<usize>> = nonempty
            .iter()
            .map(|&g| adj[g].iter().map(|&h| compact[h]).collect())
            .collect();
        let perm = minimum_degree(&groups_c, &adj_c);
        self.chol = Some(SparseCholesky::factor(&t, perm)?);
        self.factorizations += 1;
        BB_FACTORIZATIONS.fetch_add(1, Ordering::Relaxed);
        Ok(())
    }

    /// Number of `A_BB` factorizations performed by this solver.
    pub fn factorizations(&self) -> usize {
        self.factorizations
    }

    pub fn b_len(&self) -> usize {
        self.b_dofs.len()
    }

    /// Solves with the skeleton DOFs in `free` (disjoint from `B`) as extra
    /// unknowns; every other non-`B` skeleton DOF takes `known(dof)`.
    pub fn solve(
        &self,
        table: &DofTable,
        free: &[usize],
        known: impl Fn(usize) -> f64,
    ) -> Result<Field> {
        let chol = self.chol.as_ref().expect("factored in new");
        let nskel = table.skeleton_len();
        let ns = self.sys.map.n_skeleton_local;
        let nb = self.b_dofs.len();
        let nx = free.len();
        let mut x_index = vec![NONE; nskel];
        for (k, &d) in free.iter().enumerate() {
            if self.b_index[d] != NONE {
                return Err(Error::Argument(format!("DOF {d} is already in B")));
            }
            x_index[d] = k;
        }
        let mut values = vec![0.0; nskel];
        for d in 0..nskel {
            if self.b_index[d] == NONE && x_index[d] == NONE {
                values[d] = known(d);
            }
        }
        // Right-hand sides −S_{·K} g and the couplings S_BX, S_XX.
        let mut r_b = vec![0.0; nb];
        let mut r_x = vec![0.0; nx];
        let mut s_xx = vec![0.0; nx * nx];
        let mut s_bx: Vec<Vec<(usize, f64)>> = vec![Vec::new(); nx];
        for e in 0..self.sys.n_elements() {
            let (dofs, _) = self.sys.map.element(e);
            let s = &self.schur[e * ns * ns..(e + 1) * ns * ns];
            for i in 0..ns {
                let (bi, xi) = (self.b_index[dofs[i]], x_index[dofs[i]]);
                if bi == NONE && xi == NONE {
                    continue;
                }
                for j in 0..ns {
                    let dj = dofs[j];
                    let v = s[i * ns + j];
                    let (bj, xj) = (self.b_index[dj], x_index[dj]);
                    if bj == NONE && xj == NONE {
                        let g = values[dj];
                        if g != 0.0 {
                            if bi != NONE {
                                r_b[bi] -= v * g;
                            } else {
                                r_x[xi] -= v * g;
                            }
                        }
                    } else if xi != NONE && xj != NONE {
                        s_xx[xi * nx + xj] += v;
                    } else if bi != NONE && xj != NONE {
                        s_bx[xj].push((self.b_dofs[bi], v));
                    }
                }
            }
        }
        for col in &mut s_bx {
            col.sort_unstable_by_key(|&(d, _)| d);
            col.dedup_by(|a, b| {
                if a.0 == b.0 {
                    b.1 += a.1;
                    true
                } else {
                    false
                }
            });
            for entry in col.iter_mut() {
                entry.0 = self.b_index[entry.0];
            }
        }

        let mut x_b;
        if nx > 0 {
            // W = L⁻¹ P S_BX column by column, regrouped by row for T = S_XX − WᵀW.
            let mut work = vec![0.0; nb];
            let mut mark = vec![false; nb];
            let mut w_cols: Vec<Vec<(u32, f64)>> = Vec::with_capacity(nx);
            let mut row_len = vec![0usize; nb];
            for col in &s_bx {
                let pattern = chol.forward_sparse(col, &mut work, &mut mark);
                let mut entries = Vec::with_capacity(pattern.len());
                for &r in &pattern {
                    if work[r] != 0.0 {
                        entries.push((r as u32, work[r]));
                        row_len[r] += 1;
                    }
                    work[r] = 0.0;
                }
                w_cols.push(entries);
            }
            let mut row_start = vec![0usize; nb + 1];
            for r in 0..nb {
                row_start[r + 1] = row_start[r] + row_len[r];
            }
            let mut fill = row_start.clone();
            let mut rows_j = vec![0u32; row_start[nb]];
            let mut rows_v = vec![0.0; row_start[nb]];
            for (j, col) in w_cols.iter().enumerate() {
                for &(r, v) in col {
                    let r = r as usize;
                    rows_j[fill[r]] = j as u32;
                    rows_v[fill[r]] = v;
                    fill[r] += 1;
                }
            }
            for r in 0..nb {
                let (js, vs) = (
                    &rows_j[row_start[r]..row_start[r + 1]],
                    &rows_v[row_start[r]..row_start[r + 1]],
                );
                for a in 0..js.len() {
                    let row = &mut s_xx[js[a] as usize * nx..];
                    let va = vs[a];
                    for b in 0..=a {
                        row[js[b] as usize] -= va * vs[b];
                    }
                }
            }
            // Reduced right-hand side r_X − Wᵀ L⁻¹ P r_B.
            let mut y: Vec<f64> = chol.perm.iter().map(|&o| r_b[o]).collect();
            chol.forward(&mut y);
            for (j, col) in w_cols.iter().enumerate() {
                r_x[j] -= col.iter().map(|&(r, v)| v * y[r as usize]).sum::<f64>();
            }
            drop(w_cols);
            let t = DenseCholesky::factor(s_xx, nx)?;
            t.solve_in_place(&mut r_x);
            x_b = r_b;
            for (j, col) in s_bx.iter().enumerate() {
                for &(b, v) in col {
                    x_b[b] -= v * r_x[j];
                }
            }
            x_b = chol.solve(&x_b);
        } else {
            x_b = chol.solve(&r_b);
        }
        for (bi, &d) in self.b_dofs.iter().enumerate() {
            values[d] = x_b[bi];
        }
        for (k, &d) in free.iter().enumerate() {
            values[d] = r_x[k];
        }
        Ok(self.expand(table, values))
    }

    /// Recovers bubble coefficients from skeleton values.
    fn expand(&self, table: &DofTable, mut values: Vec<f64>) -> Field {
        let ns = self.sys.map.n_skeleton_local;
        let nm = self.sys.map.n_local;
        let ni = nm - ns;
        values.resize(table.len(), 0.0);
        let mut xe = vec![0.0; ns];
        for (e, bubble) in self.bubbles.iter().enumerate() {
            let (dofs, _) = self.sys.map.element(e);
            for i in 0..ns {
                xe[i] = values[dofs[i]];
            }
            for m in 0..ni {
                values[dofs[ns + m]] = -dot(&bubble.coupling[m * ns..(m + 1) * ns], &xe);
            }
        }
        Field {
            p: table.p,
            coeffs: values,
        }
    }
}

/// Primal and conjugate solutions sharing one `A_BB` factorization.
pub struct PairSolution {
    pub u1: Field,
    pub u2: Field,
    pub factorizations: usize,
}

/// Solves `u1` (`0` on `γ2`, `1` on `γ4`) and `u2` (`0` on `γ3`, `1` on `γ1`).
pub fn solve_pair(
    sys: &StiffnessSystem,
    primal: &DofTable,
    conjugate: &DofTable,
) -> Result<PairSolution> {
    if primal.len() != sys.ndof || conjugate.len() != sys.ndof {
        return Err(Error::Dimension {
            expected: sys.ndof,
            got: primal.len(),
        });
    }
    let nskel = primal.skeleton_len();
    let free_in_all =
        |d: usize| primal.classes[d] == DofClass::B && conjugate.classes[d] == DofClass::B;
    for (which, table) in [("primal", primal), ("conjugate", conjugate)] {
        if table.count(DofClass::D1) == 0 {
            return Err(Error::Singular(format!(
                "{which} problem has no u = 1 DOFs"
            )));
        }
    }
    let solver = PartitionedSolver::new(sys, primal, free_in_all)?;
    let neumann = |t: &DofTable| -> Vec<usize> {
        (0..nskel)
            .filter(|&d| matches!(t.classes[d], DofClass::N0 | DofClass::N1) && !free_in_all(d))
            .collect()
    };
    let u1 = solver.solve(primal, &neumann(primal), |d| primal.dirichlet_value(d))?;
    let u2 = solver.solve(conjugate, &neumann(conjugate), |d| {
        conjugate.dirichlet_value(d)
    })?;
    Ok(PairSolution {
        u1,
        u2,
        factorizations: solver.factorizations(),
    })
}

/// Dirichlet problem with every boundary DOF known (`D0`/`D1` only).
pub fn solve_dirichlet(sys: &StiffnessSystem, table: &DofTable) -> Result<Field> {
    let solver = PartitionedSolver::new(sys, table, |d| table.classes[d] == DofClass::B)?;
    solver.solve(table, &[], |d| table.dirichlet_value(d))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::problem::BlockLayout;
    use crate::mesh::refine_geometric;
    use crate::Point;
    use approx::assert_relative_eq;

    /// Rectangle `[0, 1] × [0, h]` with corners `1 + ih, ih, 0, 1`.
    fn rectangle(h: f64, nx: usize, ny: usize) -> Mesh {
        let mut l = BlockLayout::default();
        for j in 0..=ny {
            for i in 0..=nx {
                l.vertex(Point::new(i as f64 / nx as f64, h * j as f64 / ny as f64));
            }
        }
        let id = |i: usize, j: usize| j * (nx + 1) + i;
        for j in 0..ny {
            for i in 0..nx {
                l.block([id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)]);
            }
        }
        for i in 0..nx {
            l.edge(id(i, 0), id(i + 1, 0), None, Some(BoundaryTag::Gamma3));
            l.edge(id(i, ny), id(i + 1, ny), None, Some(BoundaryTag::Gamma1));
        }
        for j in 0..ny {
            l.edge(id(0, j), id(0, j + 1), None, Some(BoundaryTag::Gamma2));
            l.edge(id(nx, j), id(nx, j + 1), None, Some(BoundaryTag::Gamma4));
        }
        refine_geometric(&l, 0, 0.15).unwrap()
    }

    #[test]
    fn p1_unit_square_element_matrix() {
        let mesh = rectangle(1.0, 1, 1);
        let table = DofTable::primal(&mesh, 1).unwrap();
        let sys = assemble(&mesh, &table).unwrap();
        let k = sys.element_matrix(0);
        for i in 0..4 {
            assert_relative_eq!(k[i * 4 + i], 2.0 / 3.0, epsilon = 1e-14);
        }
        assert_relative_eq!(k[1], -1.0 / 6.0, epsilon = 1e-14);
        assert_relative_eq!(k[2], -1.0 / 3.0, epsilon = 1e-14);
        assert_eq!(table.count(DofClass::D0), 2);
        assert_eq!(table.count(DofClass::D1), 2);
        assert_eq!(table.count(DofClass::B), 0);
        let t2 = DofTable::primal(&mesh, 2).unwrap();
        for c in [DofClass::D0, DofClass::D1, DofClass::N0, DofClass::N1] {
            assert_eq!(t2.classes[4..8].iter().filter(|&&x| x == c).count(), 1);
        }
        assert_eq!(t2.count(DofClass::B), 1);
    }

    #[test]
    fn constants_are_in_the_kernel_and_linear_energy_is_area() {
        let mesh = rectangle(0.7, 3, 2);
        let table = DofTable::primal(&mesh, 4).unwrap();
        let sys = assemble(&mesh, &table).unwrap();
        let mut one = vec![0.0; sys.ndof];
        one[..table.n_nodes].fill(1.0);
        assert!(sys.apply(&one).iter().all(|v| v.abs() < 1e-12));
        let x: Vec<f64> = (0..sys.ndof)
            .map(|d| {
                if d < table.n_nodes {
                    mesh.nodes[d].re
                } else {
                    0.0
                }
            })
            .collect();
        assert_relative_eq!(sys.bilinear(&x, &x).unwrap(), 0.7, epsilon = 1e-13);
    }

    #[test]
    fn rectangle_pair_is_linear_and_reciprocal() {
        let h = 1.7;
        let mesh = rectangle(h, 2, 3);
        for p in [1, 3] {
            let primal = DofTable::primal(&mesh, p).unwrap();
            let conj = DofTable::conjugate(&mesh, p).unwrap();
            let sys = assemble(&mesh, &primal).unwrap();
            let sol = solve_pair(&sys, &primal, &conj).unwrap();
            assert_eq!(sol.factorizations, 1);
            for (n, z) in mesh.nodes.iter().enumerate() {
                assert_relative_eq!(sol.u1.coeffs[n], z.re, epsilon = 1e-12);
                assert_relative_eq!(sol.u2.coeffs[n], z.im / h, epsilon = 1e-12);
            }
            let m = sys.energy(&sol.u1).unwrap();
            let mc = sys.energy(&sol.u2).unwrap();
            assert_relative_eq!(m, h, epsilon = 1e-12);
            assert_relative_eq!(m * mc, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn swap_exchanges_roles_away_from_junctions() {
        let mesh = rectangle(1.0, 2, 2);
        let primal = DofTable::primal(&mesh, 3).unwrap();
        let conj = DofTable::conjugate(&mesh, 3).unwrap();
        let swapped = primal.swapped();
        let corners: Vec<usize> = mesh
            .nodes
            .iter()
            .enumerate()
            .filter(|(_, z)| (z.re == 0.0 || z.re == 1.0) && (z.im == 0.0 || z.im == 1.0))
            .map(|(i, _)| i)
            .collect();
        for d in 0..primal.len() {
            if corners.contains(&d) {
                assert!(conj.classes[d].is_dirichlet() && primal.classes[d].is_dirichlet());
            } else {
                assert_eq!(swapped.classes[d], conj.classes[d]);
            }
        }
    }

    #[test]
    fn matrix_market_header() {
        let mesh = rectangle(1.0, 1, 1);
        let table = DofTable::primal(&mesh, 2).unwrap();
        let sys = assemble(&mesh, &table).unwrap();
        let mut out = Vec::new();
        sys.write_matrix_market(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(text.starts_with("%%MatrixMarket matrix coordinate real symmetric\n9 9 "));
    }
}
