use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::evolution::{ImplicitEulerOperators, LinearEvolution, ProblemData};
use crate::fem::UniformMesh;
use crate::linalg::{BandCholesky, CsrMatrix, TripletBuilder};
use crate::Scalar;

/// Diffusivity of both heat presets.
pub const HEAT_DIFFUSIVITY: f64 = 0.03;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryCondition {
    /// Homogeneous Dirichlet; boundary nodes are eliminated.
    Dirichlet,
    /// Natural boundary condition on the full `H^1` space.
    Neumann,
}

/// Where the control acts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ControlRegion {
    /// Element-wise constants on the triangles inside the closed box
    /// `[x0, x1] x [y0, y1]`.
    Distributed { x0: f64, x1: f64, y0: f64, y1: f64 },
    /// Edge-wise constants on the boundary edges, entering as a Neumann flux.
    Boundary,
}

/// Assembled P1 operators of `-kappa Laplace` on the free nodes.
#[derive(Debug, Clone)]
pub struct FemOperators<T> {
    mesh: UniformMesh<T>,
    bc: BoundaryCondition,
    kappa: T,
    /// node index -> free dof
    dof_of_node: Vec<Option<usize>>,
    node_of_dof: Vec<usize>,
    mass: CsrMatrix<T>,
    stiffness: CsrMatrix<T>,
    control: CsrMatrix<T>,
    control_weights: Vec<T>,
    /// triangle (distributed) or boundary edge (Neumann) of each control dof
    control_cells: Vec<usize>,
}

impl<T: Scalar> FemOperators<T> {
    pub fn assemble(mesh: UniformMesh<T>, bc: BoundaryCondition, kappa: T, region: ControlRegion) -> Result<Self> {
        let nn = mesh.node_count();
        let mut dof_of_node = vec![None; nn];
        let mut node_of_dof = Vec::new();
        for (k, slot) in dof_of_node.iter_mut().enumerate() {
            if bc == BoundaryCondition::Neumann || !mesh.is_boundary_node(k) {
                *slot = Some(node_of_dof.len());
                node_of_dof.push(k);
            }
        }
        let nd = node_of_dof.len();
        if nd == 0 {
            return Err(Error::ConfigError("mesh has no free nodes".into()));
        }
        let mut mass = TripletBuilder::new(nd, nd);
        let mut stiff = TripletBuilder::new(nd, nd);
        let twelfth = T::one() / T::lit(12.0);
        for (t, tri) in mesh.triangles().iter().enumerate() {
            let area = mesh.signed_area(t);
            let p = tri.map(|v| mesh.nodes()[v]);
            // gradients of barycentric coordinates times 2|T|
            let grads: [[T; 2]; 3] = std::array::from_fn(|a| {
                let (b, c) = ((a + 1) % 3, (a + 2) % 3);
                [p[b][1] - p[c][1], p[c][0] - p[b][0]]
            });
            let scale = T::one() / (T::lit(4.0) * area);
            for a in 0..3 {
                let Some(ia) = dof_of_node[tri[a]] else { continue };
                for b in 0..3 {
                    let Some(ib) = dof_of_node[tri[b]] else { continue };
                    let m = if a == b { T::lit(2.0) } else { T::one() };
                    mass.add(ia, ib, m * area * twelfth);
                    stiff.add(ia, ib, (grads[a][0] * grads[b][0] + grads[a][1] * grads[b][1]) * scale);
                }
            }
        }
        let mut control_cells = Vec::new();
        let mut control_weights = Vec::new();
        let mut entries: Vec<(usize, usize, T)> = Vec::new();
        match region {
            ControlRegion::Distributed { x0, x1, y0, y1 } => {
                if bc != BoundaryCondition::Dirichlet {
                    return Err(Error::ConfigError("distributed control is only set up with Dirichlet conditions".into()));
                }
                let (x0, x1, y0, y1) = (T::lit(x0), T::lit(x1), T::lit(y0), T::lit(y1));
                let slack = T::lit(1e-12);
                let inside = |q: [T; 2]| q[0] >= x0 - slack && q[0] <= x1 + slack && q[1] >= y0 - slack && q[1] <= y1 + slack;
                let third = T::one() / T::lit(3.0);
                for (t, tri) in mesh.triangles().iter().enumerate() {
                    if !tri.iter().all(|&v| inside(mesh.nodes()[v])) {
                        continue;
                    }
                    let j = control_cells.len();
                    let area = mesh.signed_area(t);
                    control_cells.push(t);
                    control_weights.push(area);
                    for &v in tri {
                        // a node on the Dirichlet boundary carries no dof
                        if let Some(i) = dof_of_node[v] {
                            entries.push((i, j, area * third));
                        }
                    }
                }
            }
            ControlRegion::Boundary => {
                for (e, edge) in mesh.boundary_edges().iter().enumerate() {
                    let j = control_cells.len();
                    let len = mesh.edge_length(e);
                    control_cells.push(e);
                    control_weights.push(len);
                    for &v in edge {
                        if let Some(i) = dof_of_node[v] {
                            entries.push((i, j, len * T::lit(0.5)));
                        }
                    }
                }
            }
        }
        if control_cells.is_empty() {
            return Err(Error::ConfigError("control region contains no mesh cells".into()));
        }
        let mut control = TripletBuilder::new(nd, control_cells.len());
        for (i, j, v) in entries {
            control.add(i, j, v);
        }
        Ok(Self {
            mesh,
            bc,
            kappa,
            dof_of_node,
            node_of_dof,
            mass: mass.build(),
            stiffness: stiff.build(),
            control: control.build(),
            control_weights,
            control_cells,
        })
    }

    pub fn mesh(&self) -> &UniformMesh<T> {
        &self.mesh
    }

    pub fn boundary_condition(&self) -> BoundaryCondition {
        self.bc
    }

    pub fn diffusivity(&self) -> T {
        self.kappa
    }

    pub fn mass(&self) -> &CsrMatrix<T> {
        &self.mass
    }

    pub fn stiffness(&self) -> &CsrMatrix<T> {
        &self.stiffness
    }

    /// Map from control dofs to load vectors.
    pub fn control_operator(&self) -> &CsrMatrix<T> {
        &self.control
    }

    pub fn control_weights(&self) -> &[T] {
        &self.control_weights
    }

    pub fn control_cells(&self) -> &[usize] {
        &self.control_cells
    }

    pub fn node_of_dof(&self) -> &[usize] {
        &self.node_of_dof
    }

    pub fn dof_of_node(&self, node: usize) -> Option<usize> {
        self.dof_of_node[node]
    }

    /// Nodal interpolant restricted to the free dofs.
    pub fn interpolate(&self, f: impl Fn(T, T) -> T) -> Vec<T> {
        self.node_of_dof
            .iter()
            .map(|&k| {
                let [x, y] = self.mesh.nodes()[k];
                f(x, y)
            })
            .collect()
    }
}

impl<T: Scalar> ImplicitEulerOperators<T> for FemOperators<T> {
    type Factor = BandCholesky<T>;

    fn state_dim(&self) -> usize {
        self.node_of_dof.len()
    }

    fn control_dim(&self) -> usize {
        self.control_cells.len()
    }

    fn factor_step(&self, s: T) -> Result<BandCholesky<T>> {
        BandCholesky::factor_combination(&[(T::one(), &self.mass), (s * self.kappa, &self.stiffness)])
    }

    fn mass_mul(&self, x: &[T], out: &mut [T]) {
        self.mass.mul_vec_into(x, out);
    }

    fn operator_mul(&self, x: &[T], out: &mut [T]) {
        self.stiffness.mul_vec_into(x, out);
        out.iter_mut().for_each(|o| *o = *o * self.kappa);
    }

    fn control_mul_add(&self, alpha: T, u: &[T], out: &mut [T]) {
        self.control.mul_vec_add(alpha, u, out);
    }

    fn control_tmul(&self, p: &[T], out: &mut [T]) {
        self.control.tmul_vec_into(p, out);
    }
}

/// Heat equation `y' - kappa Laplace y = B u` with the `L^2(Omega)` state norm.
pub type HeatSystem<T> = LinearEvolution<T, FemOperators<T>>;

impl<T: Scalar> HeatSystem<T> {
    /// Number of mesh nodes `N = (n + 1)^2`, including eliminated ones.
    pub fn node_count(&self) -> usize {
        self.operators().mesh().node_count()
    }
}

/// Assembles a heat system on the `n x n` uniform mesh.
#[allow(clippy::too_many_arguments)]
pub fn build_heat_system<T: Scalar>(
    n: usize,
    bc: BoundaryCondition,
    region: ControlRegion,
    initial_state: impl Fn(T, T) -> T,
    target: impl Fn(T, T) -> T,
    radius: T,
    lower: T,
    upper: T,
) -> Result<HeatSystem<T>> {
    let mesh = UniformMesh::new(n)?;
    let ops = FemOperators::assemble(mesh, bc, T::lit(HEAT_DIFFUSIVITY), region)?;
    let nc = ops.control_cells.len();
    let data = ProblemData {
        initial_state: ops.interpolate(initial_state),
        target: ops.interpolate(target),
        radius,
        lower: vec![lower; nc],
        upper: vec![upper; nc],
        weights: ops.control_weights.clone(),
    };
    LinearEvolution::new(ops, data)
}

fn heat_initial_state<T: Scalar>(x: T, y: T) -> T {
    let pi = T::lit(PI);
    T::lit(4.0) * (pi * x * x).sin() * (pi * y).sin().powi(3)
}

/// Dirichlet heat equation with control on `(0.25, 0.75)^2`, `u in [-5, 0]`,
/// `delta0 = 0.1`. Requires `4 | n` so the control square is resolved.
pub fn heat_distributed_preset<T: Scalar>(n: usize) -> Result<HeatSystem<T>> {
    if n < 4 || n % 4 != 0 {
        return Err(Error::ConfigError(format!("heat-distributed needs n >= 4 divisible by 4, got {n}")));
    }
    let target = |x: T, y: T| -T::lit(2.0) * x.min(T::one() - x).min(y).min(T::one() - y);
    build_heat_system(
        n,
        BoundaryCondition::Dirichlet,
        ControlRegion::Distributed { x0: 0.25, x1: 0.75, y0: 0.25, y1: 0.75 },
        heat_initial_state,
        target,
        T::lit(0.1),
        T::lit(-5.0),
        T::zero(),
    )
}

/// Neumann boundary control on all boundary edges, `u in [-5, 5]`,
/// `y_d = 0`, `delta0 = 0.1`.
pub fn heat_neumann_preset<T: Scalar>(n: usize) -> Result<HeatSystem<T>> {
    if n < 2 {
        return Err(Error::ConfigError(format!("heat-neumann needs n >= 2, got {n}")));
    }
    build_heat_system(
        n,
        BoundaryCondition::Neumann,
        ControlRegion::Boundary,
        heat_initial_state,
        |_, _| T::zero(),
        T::lit(0.1),
        T::lit(-5.0),
        T::lit(5.0),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolution::{Control, EvolutionSystem, TimeGrid};

    #[test]
    fn distributed_preset_counts() {
        let sys = heat_distributed_preset::<f64>(8).unwrap();
        assert_eq!(sys.node_count(), 81);
        assert_eq!(sys.operators().mesh().triangles().len(), 128);
        assert_eq!(sys.control_dim(), 32);
        assert_eq!(sys.state_dim(), 49);
        assert!(heat_distributed_preset::<f64>(6).is_err());
        assert!(heat_distributed_preset::<f64>(0).is_err());
    }

    #[test]
    fn target_and_initial_values() {
        let sys = heat_distributed_preset::<f64>(8).unwrap();
        let ops = sys.operators();
        let centre = ops.dof_of_node(4 * 9 + 4).unwrap();
        assert_eq!(sys.target()[centre], -1.0);
        let neu = heat_neumann_preset::<f64>(8).unwrap();
        for j in 0..9 {
            let d = neu.operators().dof_of_node(j * 9).unwrap();
            assert_eq!(neu.initial_state()[d], 0.0);
        }
    }

    #[test]
    fn neumann_control_counts_and_loads() {
        let sys = heat_neumann_preset::<f64>(8).unwrap();
        assert_eq!(sys.control_dim(), 32);
        let c = sys.operators().control_operator();
        let total: f64 = c.values().iter().sum();
        assert!((total - 4.0).abs() < 1e-14);
        for (s, w) in c.column_sums().iter().zip(sys.control_weights()) {
            assert!((s - w).abs() < 1e-15);
            assert!((w - 1.0 / 8.0).abs() < 1e-15);
        }
        assert!(heat_neumann_preset::<f64>(1).is_err());
    }

    #[test]
    fn assembly_identities() {
        let sys = heat_neumann_preset::<f64>(5).unwrap();
        let ops = sys.operators();
        let mass_total: f64 = ops.mass().values().iter().sum();
        assert!((mass_total - 1.0).abs() < 1e-12);
        for s in ops.stiffness().row_sums() {
            assert!(s.abs() < 1e-12);
        }
        assert!(ops.mass().is_symmetric(1e-15));
        assert!(ops.stiffness().is_symmetric(1e-15));
        let dir = heat_distributed_preset::<f64>(8).unwrap();
        let c = dir.operators().control_operator();
        for (s, w) in c.column_sums().iter().zip(dir.control_weights()) {
            assert!((s - w).abs() < 1e-15);
        }
        assert!(c.values().iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn constants_are_stationary_under_neumann() {
        let sys = build_heat_system::<f64>(
            6,
            BoundaryCondition::Neumann,
            ControlRegion::Boundary,
            |_, _| 1.0,
            |_, _| 0.0,
            0.1,
            -1.0,
            1.0,
        )
        .unwrap();
        let g = TimeGrid::new(10).unwrap();
        let u = Control::midpoint(g, sys.lower().to_vec(), sys.upper().to_vec()).unwrap();
        let y = sys.solve_state(3.0, &u).unwrap();
        for m in 0..=10 {
            assert!(y.node(m).iter().all(|v| (v - 1.0).abs() < 1e-12));
        }
    }
}
