use crate::mesh::PolygonalMesh;
use crate::poly::dim_signed;
use crate::vem::{ElementDofLayout, Family};

/// Global numbering: vertex values (conforming only), then edge blocks, then
/// cell-interior blocks. Edge blocks are shared by the two incident cells and
/// parametrized from the lower to the higher vertex index.
#[derive(Clone, Debug)]
pub struct GlobalDofMap {
    pub family: Family,
    pub k: usize,
    pub num_dofs: usize,
    /// Local-to-global map per cell, in the [`ElementDofLayout`] order.
    pub cell_dofs: Vec<Vec<usize>>,
    /// Per cell, whether each local edge runs from lower to higher vertex index.
    pub cell_aligned: Vec<Vec<bool>>,
    pub is_boundary: Vec<bool>,
}

impl GlobalDofMap {
    pub fn new(mesh: &PolygonalMesh, family: Family, k: usize) -> Self {
        let nv = mesh.num_vertices();
        let ne = mesh.num_edges();
        let per_vertex = usize::from(family == Family::C);
        let per_edge = match family {
            Family::Nc => k,
            Family::C => k - 1,
        };
        let nint = dim_signed(k as isize - 2);
        let edge_base = nv * per_vertex;
        let cell_base = edge_base + ne * per_edge;
        let num_dofs = cell_base + mesh.num_cells() * nint;

        let mut is_boundary = vec![false; num_dofs];
        let bv = mesh.boundary_vertices();
        if per_vertex > 0 {
            for (v, &b) in bv.iter().enumerate() {
                is_boundary[v] = b;
            }
        }
        for (e, edge) in mesh.edges().iter().enumerate() {
            if edge.is_boundary() {
                for j in 0..per_edge {
                    is_boundary[edge_base + e * per_edge + j] = true;
                }
            }
        }

        let mut cell_dofs = Vec::with_capacity(mesh.num_cells());
        let mut cell_aligned = Vec::with_capacity(mesh.num_cells());
        for c in 0..mesh.num_cells() {
            let verts = &mesh.cells()[c];
            let layout = ElementDofLayout::new(family, k, verts.len());
            let mut map = vec![0; layout.count()];
            if per_vertex > 0 {
                for (i, &v) in verts.iter().enumerate() {
                    map[layout.vertex(i)] = v;
                }
            }
            for (f, &e) in mesh.cell_edges(c).iter().enumerate() {
                for j in 0..per_edge {
                    map[layout.edge(f, j)] = edge_base + e * per_edge + j;
                }
            }
            for g in 0..nint {
                map[layout.interior(g)] = cell_base + c * nint + g;
            }
            cell_dofs.push(map);
            cell_aligned.push((0..verts.len()).map(|f| mesh.edge_aligned(c, f)).collect());
        }
        Self {
            family,
            k,
            num_dofs,
            cell_dofs,
            cell_aligned,
            is_boundary,
        }
    }

    pub fn boundary_dofs(&self) -> Vec<usize> {
        (0..self.num_dofs).filter(|&i| self.is_boundary[i]).collect()
    }

    pub fn free_dofs(&self) -> Vec<usize> {
        (0..self.num_dofs).filter(|&i| !self.is_boundary[i]).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_mesh, MeshFamily, MeshParams};

    #[test]
    fn two_by_two_quads() {
        let m = generate_mesh(MeshFamily::UniformQuads, MeshParams::divisions(2)).unwrap();
        let nc = GlobalDofMap::new(&m, Family::Nc, 1);
        assert_eq!(nc.num_dofs, 12);
        assert_eq!(nc.free_dofs().len(), 4);
        let c = GlobalDofMap::new(&m, Family::C, 2);
        assert_eq!(c.num_dofs, 25);
        assert_eq!(c.free_dofs().len(), 1 + 4 + 4);
    }

    #[test]
    fn every_global_dof_is_used() {
        let m = generate_mesh(MeshFamily::ConvexPoly, MeshParams::divisions(3)).unwrap();
        for family in [Family::Nc, Family::C] {
            for k in 1..=3 {
                let map = GlobalDofMap::new(&m, family, k);
                let mut used = vec![false; map.num_dofs];
                for cell in &map.cell_dofs {
                    let mut local = cell.clone();
                    local.sort_unstable();
                    local.dedup();
                    assert_eq!(local.len(), cell.len());
                    for &g in cell {
                        used[g] = true;
                    }
                }
                assert!(used.iter().all(|&u| u));
            }
        }
    }
}
