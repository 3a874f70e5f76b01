use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tensor-product node grid on an interval or a rectangle.
///
/// Nodes are numbered `i + nx * j`. Lumped trapezoid weights are attached to
/// every node (`mass`) and to every boundary node (`boundary_weight`); all
/// quadratures and the assembled operators use these same weights, so the
/// discrete summation-by-parts identities hold to rounding.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    dim: usize,
    extents: Vec<f64>,
    counts: Vec<usize>,
    spacing: Vec<f64>,
    boundary_index: Vec<usize>,
    interior_index: Vec<usize>,
    boundary_slot: Vec<Option<usize>>,
    mass: Vec<f64>,
    boundary_weight: Vec<f64>,
    stiffness: Vec<Coupling>,
    stiffness_diag: Vec<f64>,
}

/// Off-diagonal entry `K[a][b] = K[b][a] = value` of the stiffness matrix, `a < b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Coupling {
    pub a: usize,
    pub b: usize,
    pub value: f64,
}

/// Serializable description of a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub dim: usize,
    pub extents: Vec<f64>,
    pub counts: Vec<usize>,
}

impl Grid {
    pub fn new(spec: &GridSpec) -> Result<Self> {
        let GridSpec {
            dim,
            extents,
            counts,
        } = spec;
        let dim = *dim;
        if dim != 1 && dim != 2 {
            return Err(Error::InvalidGrid(format!("dimension {dim} not in {{1, 2}}")));
        }
        if extents.len() != dim || counts.len() != dim {
            return Err(Error::InvalidGrid(format!(
                "need {dim} extents and counts, got {} and {}",
                extents.len(),
                counts.len()
            )));
        }
        for (axis, (&len, &n)) in extents.iter().zip(counts).enumerate() {
            if !(len > 0.0 && len.is_finite()) {
                return Err(Error::InvalidGrid(format!("extent {len} on axis {axis}")));
            }
            if n < 3 {
                return Err(Error::InvalidGrid(format!(
                    "axis {axis} has {n} nodes, need at least 3"
                )));
            }
        }
        let spacing: Vec<f64> = extents
            .iter()
            .zip(counts)
            .map(|(&l, &n)| l / (n - 1) as f64)
            .collect();

        let nx = counts[0];
        let ny = if dim == 2 { counts[1] } else { 1 };
        let hx = spacing[0];
        let hy = if dim == 2 { spacing[1] } else { 1.0 };
        let mx: Vec<f64> = axis_mass(nx, hx);
        let my: Vec<f64> = if dim == 2 { axis_mass(ny, hy) } else { vec![1.0] };

        let total = nx * ny;
        let mut mass = vec![0.0; total];
        let mut boundary_index = Vec::new();
        let mut interior_index = Vec::new();
        let mut boundary_slot = vec![None; total];
        let mut boundary_weight = Vec::new();
        for j in 0..ny {
            for i in 0..nx {
                let id = i + nx * j;
                mass[id] = mx[i] * my[j];
                let on_x = i == 0 || i == nx - 1;
                let on_y = dim == 2 && (j == 0 || j == ny - 1);
                if on_x || on_y {
                    // length of Γ attributed to this node by the perimeter trapezoid rule
                    let mut w = 0.0;
                    if on_x {
                        w += my[j];
                    }
                    if on_y {
                        w += mx[i];
                    }
                    boundary_slot[id] = Some(boundary_index.len());
                    boundary_index.push(id);
                    boundary_weight.push(w);
                } else {
                    interior_index.push(id);
                }
            }
        }

        let mut stiffness = Vec::new();
        let mut stiffness_diag = vec![0.0; total];
        for j in 0..ny {
            for i in 0..nx {
                let id = i + nx * j;
                if i + 1 < nx {
                    let value = -my[j] / hx;
                    stiffness.push(Coupling { a: id, b: id + 1, value });
                    stiffness_diag[id] -= value;
                    stiffness_diag[id + 1] -= value;
                }
                if dim == 2 && j + 1 < ny {
                    let value = -mx[i] / hy;
                    stiffness.push(Coupling { a: id, b: id + nx, value });
                    stiffness_diag[id] -= value;
                    stiffness_diag[id + nx] -= value;
                }
            }
        }

        Ok(Self {
            dim,
            extents: extents.clone(),
            counts: counts.clone(),
            spacing,
            boundary_index,
            interior_index,
            boundary_slot,
            mass,
            boundary_weight,
            stiffness,
            stiffness_diag,
        })
    }

    pub fn uniform_1d(length: f64, nodes: usize) -> Result<Self> {
        Self::new(&GridSpec {
            dim: 1,
            extents: vec![length],
            counts: vec![nodes],
        })
    }

    pub fn uniform_2d(lx: f64, ly: f64, nx: usize, ny: usize) -> Result<Self> {
        Self::new(&GridSpec {
            dim: 2,
            extents: vec![lx, ly],
            counts: vec![nx, ny],
        })
    }

    pub fn spec(&self) -> GridSpec {
        GridSpec {
            dim: self.dim,
            extents: self.extents.clone(),
            counts: self.counts.clone(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn extents(&self) -> &[f64] {
        &self.extents
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing
    }

    pub fn node_count(&self) -> usize {
        self.mass.len()
    }

    pub fn boundary_count(&self) -> usize {
        self.boundary_index.len()
    }

    pub fn boundary_index(&self) -> &[usize] {
        &self.boundary_index
    }

    pub fn interior_index(&self) -> &[usize] {
        &self.interior_index
    }

    /// Position of `node` in the boundary ordering, if it lies on Γ.
    pub fn boundary_slot(&self, node: usize) -> Option<usize> {
        self.boundary_slot[node]
    }

    /// Trapezoid weight of every node (cell volume attributed to it).
    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    /// Trapezoid weight of every boundary node along Γ.
    pub fn boundary_weight(&self) -> &[f64] {
        &self.boundary_weight
    }

    /// Half-bandwidth of the operators under the natural node ordering.
    pub fn bandwidth(&self) -> usize {
        if self.dim == 1 {
            1
        } else {
            self.counts[0]
        }
    }

    /// Physical coordinates of a node.
    pub fn coords(&self, node: usize) -> [f64; 2] {
        let nx = self.counts[0];
        let (i, j) = (node % nx, node / nx);
        let y = if self.dim == 2 {
            j as f64 * self.spacing[1]
        } else {
            0.0
        };
        [i as f64 * self.spacing[0], y]
    }

    pub fn volume(&self) -> f64 {
        self.extents.iter().product()
    }

    /// Measure of Γ (two endpoints in 1D, perimeter in 2D).
    pub fn boundary_measure(&self) -> f64 {
        self.boundary_weight.iter().sum()
    }

    pub(crate) fn stiffness(&self) -> &[Coupling] {
        &self.stiffness
    }

    pub(crate) fn stiffness_diag(&self) -> &[f64] {
        &self.stiffness_diag
    }

    /// `out += K w`, with `K` the symmetric positive semidefinite stiffness matrix.
    pub(crate) fn add_stiffness(&self, w: &[f64], out: &mut [f64]) {
        for (o, (&d, &x)) in out.iter_mut().zip(self.stiffness_diag.iter().zip(w)) {
            *o += d * x;
        }
        for c in &self.stiffness {
            out[c.a] += c.value * w[c.b];
            out[c.b] += c.value * w[c.a];
        }
    }
}

fn axis_mass(n: usize, h: f64) -> Vec<f64> {
    let mut m = vec![h; n];
    m[0] = 0.5 * h;
    m[n - 1] = 0.5 * h;
    m
}
