use crate::error::{Error, Result};

/// Side of the rectangle `[0, Lx] × [0, Ly]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Side {
    Bottom,
    Right,
    Top,
    Left,
}

/// Which sides carry homogeneous Dirichlet conditions. All other boundary nodes are Neumann.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct DirichletSides {
    pub bottom: bool,
    pub right: bool,
    pub top: bool,
    pub left: bool,
}

impl DirichletSides {
    pub const ALL: DirichletSides = DirichletSides {
        bottom: true,
        right: true,
        top: true,
        left: true,
    };

    pub const BOTTOM: DirichletSides = DirichletSides {
        bottom: true,
        right: false,
        top: false,
        left: false,
    };

    pub const NONE: DirichletSides = DirichletSides {
        bottom: false,
        right: false,
        top: false,
        left: false,
    };

    pub fn contains(&self, side: Side) -> bool {
        match side {
            Side::Bottom => self.bottom,
            Side::Right => self.right,
            Side::Top => self.top,
            Side::Left => self.left,
        }
    }

    pub fn any(&self) -> bool {
        self.bottom || self.right || self.top || self.left
    }
}

/// Portion `[from, to]` of one side, parametrized by the tangential coordinate
/// (`x` on bottom/top, `y` on left/right).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundarySegment {
    pub side: Side,
    pub from: f64,
    pub to: f64,
}

impl BoundarySegment {
    pub fn whole(side: Side, mesh: &RectangleMesh) -> Self {
        let len = match side {
            Side::Bottom | Side::Top => mesh.lx(),
            Side::Left | Side::Right => mesh.ly(),
        };
        BoundarySegment { side, from: 0.0, to: len }
    }
}

/// Uniform triangulation of a rectangle: each of the `nx × ny` cells is split along
/// its lower-left to upper-right diagonal.
///
/// Nodes are numbered `i + j·(nx+1)` and cells `i + j·nx`, both with `x` fastest.
#[derive(Clone, Debug)]
pub struct RectangleMesh {
    lx: f64,
    ly: f64,
    nx: usize,
    ny: usize,
    dirichlet_sides: DirichletSides,
    dirichlet: Vec<bool>,
    free: Vec<usize>,
    node_to_dof: Vec<Option<usize>>,
}

impl RectangleMesh {
    pub fn new(lx: f64, ly: f64, nx: usize, ny: usize, dirichlet_sides: DirichletSides) -> Result<Self> {
        if !(lx > 0.0 && ly > 0.0 && lx.is_finite() && ly.is_finite()) {
            return Err(Error::invalid(format!("domain extents must be positive, got {lx} x {ly}")));
        }
        if nx < 2 || ny < 2 {
            return Err(Error::invalid(format!("need at least 2x2 cells, got {nx}x{ny}")));
        }
        let nnodes = (nx + 1) * (ny + 1);
        let mut dirichlet = vec![false; nnodes];
        for j in 0..=ny {
            for i in 0..=nx {
                let on = (j == 0 && dirichlet_sides.bottom)
                    || (j == ny && dirichlet_sides.top)
                    || (i == 0 && dirichlet_sides.left)
                    || (i == nx && dirichlet_sides.right);
                dirichlet[i + j * (nx + 1)] = on;
            }
        }
        let free: Vec<usize> = (0..nnodes).filter(|&n| !dirichlet[n]).collect();
        let mut node_to_dof = vec![None; nnodes];
        for (d, &n) in free.iter().enumerate() {
            node_to_dof[n] = Some(d);
        }
        Ok(RectangleMesh {
            lx,
            ly,
            nx,
            ny,
            dirichlet_sides,
            dirichlet,
            free,
            node_to_dof,
        })
    }

    pub fn unit_square(n: usize, dirichlet_sides: DirichletSides) -> Result<Self> {
        Self::new(1.0, 1.0, n, n, dirichlet_sides)
    }

    pub fn lx(&self) -> f64 {
        self.lx
    }
    pub fn ly(&self) -> f64 {
        self.ly
    }
    pub fn nx(&self) -> usize {
        self.nx
    }
    pub fn ny(&self) -> usize {
        self.ny
    }
    pub fn hx(&self) -> f64 {
        self.lx / self.nx as f64
    }
    pub fn hy(&self) -> f64 {
        self.ly / self.ny as f64
    }

    pub fn dirichlet_sides(&self) -> DirichletSides {
        self.dirichlet_sides
    }

    pub fn node_count(&self) -> usize {
        (self.nx + 1) * (self.ny + 1)
    }

    pub fn cell_count(&self) -> usize {
        self.nx * self.ny
    }

    /// Number of unknowns after Dirichlet elimination.
    pub fn dof_count(&self) -> usize {
        self.free.len()
    }

    #[inline]
    pub fn node_index(&self, i: usize, j: usize) -> usize {
        i + j * (self.nx + 1)
    }

    pub fn node_coords(&self, node: usize) -> (f64, f64) {
        let i = node % (self.nx + 1);
        let j = node / (self.nx + 1);
        (i as f64 * self.hx(), j as f64 * self.hy())
    }

    pub fn cell_centroid(&self, cell: usize) -> (f64, f64) {
        let i = cell % self.nx;
        let j = cell / self.nx;
        ((i as f64 + 0.5) * self.hx(), (j as f64 + 0.5) * self.hy())
    }

    pub fn is_dirichlet(&self, node: usize) -> bool {
        self.dirichlet[node]
    }

    pub fn is_boundary(&self, node: usize) -> bool {
        let i = node % (self.nx + 1);
        let j = node / (self.nx + 1);
        i == 0 || j == 0 || i == self.nx || j == self.ny
    }

    /// Node ids of the unknowns, in DOF order.
    pub fn free_nodes(&self) -> &[usize] {
        &self.free
    }

    pub fn dof_of(&self, node: usize) -> Option<usize> {
        self.node_to_dof[node]
    }

    /// Triangles as `(cell, [v0, v1, v2])` with counterclockwise vertices.
    pub fn triangles(&self) -> impl Iterator<Item = (usize, [usize; 3])> + '_ {
        (0..self.ny).flat_map(move |j| {
            (0..self.nx).flat_map(move |i| {
                let cell = i + j * self.nx;
                let v00 = self.node_index(i, j);
                let v10 = self.node_index(i + 1, j);
                let v11 = self.node_index(i + 1, j + 1);
                let v01 = self.node_index(i, j + 1);
                [(cell, [v00, v10, v11]), (cell, [v00, v11, v01])]
            })
        })
    }

    /// Boundary edges of `seg` as node pairs. An edge belongs to the segment when its
    /// midpoint lies in `[from, to]`.
    pub fn segment_edges(&self, seg: &BoundarySegment) -> Vec<(usize, usize)> {
        let (a, b) = (seg.from.min(seg.to), seg.from.max(seg.to));
        let eps = 1e-12 * self.lx.max(self.ly);
        let inside = |m: f64| m >= a - eps && m <= b + eps;
        let mut edges = Vec::new();
        match seg.side {
            Side::Bottom | Side::Top => {
                let j = if seg.side == Side::Bottom { 0 } else { self.ny };
                for i in 0..self.nx {
                    if inside((i as f64 + 0.5) * self.hx()) {
                        edges.push((self.node_index(i, j), self.node_index(i + 1, j)));
                    }
                }
            }
            Side::Left | Side::Right => {
                let i = if seg.side == Side::Left { 0 } else { self.nx };
                for j in 0..self.ny {
                    if inside((j as f64 + 0.5) * self.hy()) {
                        edges.push((self.node_index(i, j), self.node_index(i, j + 1)));
                    }
                }
            }
        }
        edges
    }

    /// Restricts a nodal vector to the unknowns.
    pub fn restrict(&self, nodal: &[f64]) -> Vec<f64> {
        assert_eq!(nodal.len(), self.node_count());
        self.free.iter().map(|&n| nodal[n]).collect()
    }

    /// Extends a DOF vector to all nodes with zeros on Dirichlet nodes.
    pub fn extend(&self, dofs: &[f64]) -> Vec<f64> {
        assert_eq!(dofs.len(), self.dof_count());
        let mut out = vec![0.0; self.node_count()];
        for (&n, &v) in self.free.iter().zip(dofs) {
            out[n] = v;
        }
        out
    }

    /// Nodal interpolant of `f`.
    pub fn interpolate(&self, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        (0..self.node_count())
            .map(|n| {
                let (x, y) = self.node_coords(n);
                f(x, y)
            })
            .collect()
    }

    /// Uniformly refined copy (`h` halved in both directions).
    pub fn refined(&self) -> Result<Self> {
        Self::new(self.lx, self.ly, 2 * self.nx, 2 * self.ny, self.dirichlet_sides)
    }
}
