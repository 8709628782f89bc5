//! Interface transfer operators between non-matching interface polylines.
//!
//! Nearest-element interpolation projects each target node onto its closest
//! source edge; the mortar operator enforces weak equality, H = M_tt^-1 M_ts
//! with Gauss-integrated segment products. Direct application (H x) is the
//! consistent mode used for displacements; the transpose (H^T f) is the
//! conservative mode for forces, which preserves interface virtual work.
//!
//! Operators are built once from the undeformed interfaces and reused; their
//! shape derivatives are excluded throughout.

use crate::error::{FsiError, Result};
use crate::meshkit::{tag_polyline, Mesh2D, Point};
use crate::numkit::{DirectSolver, SparseMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MappingMethod {
    NearestElement,
    Mortar,
}

/// Ordered interface polyline with arc-length parametrization.
#[derive(Debug, Clone)]
pub struct InterfacePolyline {
    /// global mesh node ids in chain order
    pub nodes: Vec<usize>,
    pub points: Vec<Point>,
    /// cumulative arc length at each node
    pub arc: Vec<f64>,
}

impl InterfacePolyline {
    pub fn from_tag(mesh: &Mesh2D, tag: &str) -> Result<Self> {
        let nodes = tag_polyline(mesh, tag)?;
        let points: Vec<Point> = nodes.iter().map(|&n| mesh.nodes()[n]).collect();
        let mut arc = vec![0.0; points.len()];
        for i in 1..points.len() {
            let d = [
                points[i][0] - points[i - 1][0],
                points[i][1] - points[i - 1][1],
            ];
            arc[i] = arc[i - 1] + (d[0] * d[0] + d[1] * d[1]).sqrt();
        }
        Ok(Self { nodes, points, arc })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn total_length(&self) -> f64 {
        *self.arc.last().unwrap_or(&0.0)
    }

    /// Closest point over all segments: (segment index, parameter in [0,1],
    /// squared distance, arc coordinate). Lowest segment index wins ties.
    fn project(&self, p: Point) -> (usize, f64, f64, f64) {
        let mut best = (0usize, 0.0f64, f64::INFINITY, 0.0f64);
        for s in 0..self.points.len() - 1 {
            let a = self.points[s];
            let b = self.points[s + 1];
            let ab = [b[0] - a[0], b[1] - a[1]];
            let ap = [p[0] - a[0], p[1] - a[1]];
            let ab2 = ab[0] * ab[0] + ab[1] * ab[1];
            let t = if ab2 > 0.0 {
                ((ap[0] * ab[0] + ap[1] * ab[1]) / ab2).clamp(0.0, 1.0)
            } else {
                0.0
            };
            let q = [a[0] + t * ab[0], a[1] + t * ab[1]];
            let d2 = (p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2);
            if d2 < best.2 {
                let arc = self.arc[s] + t * (self.arc[s + 1] - self.arc[s]);
                best = (s, t, d2, arc);
            }
        }
        best
    }

    /// Linear shape-function values at an arc coordinate.
    fn shape_at_arc(&self, s: f64) -> (usize, f64) {
        let s = s.clamp(0.0, self.total_length());
        let mut seg = self.arc.partition_point(|&a| a <= s);
        seg = seg.saturating_sub(1).min(self.points.len() - 2);
        let len = self.arc[seg + 1] - self.arc[seg];
        let t = if len > 0.0 { (s - self.arc[seg]) / len } else { 0.0 };
        (seg, t)
    }
}

/// Sparse interface transfer matrix with its construction metadata.
#[derive(Debug, Clone)]
pub struct MappingOperator {
    /// target-nodes x source-nodes
    pub h: SparseMatrix,
    pub source: InterfacePolyline,
    pub target: InterfacePolyline,
    pub method: MappingMethod,
}

fn coincidence_tolerance(source: &InterfacePolyline, target: &InterfacePolyline) -> f64 {
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for p in source.points.iter().chain(&target.points) {
        for d in 0..2 {
            lo[d] = lo[d].min(p[d]);
            hi[d] = hi[d].max(p[d]);
        }
    }
    let diag = ((hi[0] - lo[0]).powi(2) + (hi[1] - lo[1]).powi(2)).sqrt();
    1e-8 * diag.max(f64::MIN_POSITIVE)
}

fn check_coincident(source: &InterfacePolyline, target: &InterfacePolyline) -> Result<f64> {
    if source.is_empty() || target.is_empty() {
        return Err(FsiError::Dimension(
            "mapping needs nonempty source and target interfaces".into(),
        ));
    }
    let tol = coincidence_tolerance(source, target);
    for p in &target.points {
        let (_, _, d2, _) = source.project(*p);
        if d2.sqrt() > tol {
            return Err(FsiError::MeshInvalid(format!(
                "interfaces not geometrically coincident: target node at ({:.6}, {:.6}) is {:.3e} from the source polyline (tol {tol:.3e})",
                p[0], p[1], d2.sqrt()
            )));
        }
    }
    for p in &source.points {
        let (_, _, d2, _) = target.project(*p);
        if d2.sqrt() > tol {
            return Err(FsiError::MeshInvalid(format!(
                "interfaces not geometrically coincident: source node at ({:.6}, {:.6}) is {:.3e} from the target polyline (tol {tol:.3e})",
                p[0], p[1], d2.sqrt()
            )));
        }
    }
    Ok(tol)
}

/// Node-for-node matching test at 1e-12 x bbox; returns the permutation
/// target index -> source index when the discretizations coincide exactly.
fn matching_permutation(
    source: &InterfacePolyline,
    target: &InterfacePolyline,
) -> Option<Vec<usize>> {
    if source.len() != target.len() {
        return None;
    }
    let tol = coincidence_tolerance(source, target) * 1e-4; // 1e-12 x bbox
    let mut used = vec![false; source.len()];
    let mut perm = Vec::with_capacity(target.len());
    for p in &target.points {
        let mut found = None;
        for (j, q) in source.points.iter().enumerate() {
            if !used[j] {
                let d = ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt();
                if d <= tol {
                    found = Some(j);
                    break;
                }
            }
        }
        let j = found?;
        used[j] = true;
        perm.push(j);
    }
    Some(perm)
}

/// Nearest-element interpolation operator from source to target.
pub fn build_nearest_element(
    source: &InterfacePolyline,
    target: &InterfacePolyline,
) -> Result<MappingOperator> {
    check_coincident(source, target)?;
    if let Some(perm) = matching_permutation(source, target) {
        return Ok(identity_operator(source, target, perm, MappingMethod::NearestElement));
    }
    let mut trips = Vec::with_capacity(2 * target.len());
    for (i, p) in target.points.iter().enumerate() {
        let (seg, t, _, _) = source.project(*p);
        if t <= 0.0 {
            trips.push((i, seg, 1.0));
        } else if t >= 1.0 {
            trips.push((i, seg + 1, 1.0));
        } else {
            trips.push((i, seg, 1.0 - t));
            trips.push((i, seg + 1, t));
        }
    }
    let h = SparseMatrix::from_triplets(target.len(), source.len(), &trips)?;
    Ok(MappingOperator {
        h,
        source: source.clone(),
        target: target.clone(),
        method: MappingMethod::NearestElement,
    })
}

fn identity_operator(
    source: &InterfacePolyline,
    target: &InterfacePolyline,
    perm: Vec<usize>,
    method: MappingMethod,
) -> MappingOperator {
    let trips: Vec<_> = perm.iter().enumerate().map(|(i, &j)| (i, j, 1.0)).collect();
    let h = SparseMatrix::from_triplets(target.len(), source.len(), &trips).expect("in range");
    MappingOperator {
        h,
        source: source.clone(),
        target: target.clone(),
        method,
    }
}

/// Mortar operator from source to target: H = M_tt^-1 M_ts with the target
/// mass matrix and the mixed mass integrated segment-wise on the target
/// polyline, split at source-node images, 3-point Gauss per sub-segment.
pub fn build_mortar(
    source: &InterfacePolyline,
    target: &InterfacePolyline,
) -> Result<MappingOperator> {
    check_coincident(source, target)?;
    if let Some(perm) = matching_permutation(source, target) {
        return Ok(identity_operator(source, target, perm, MappingMethod::Mortar));
    }
    let h = mortar_matrix(source, target)?;
    Ok(MappingOperator {
        h,
        source: source.clone(),
        target: target.clone(),
        method: MappingMethod::Mortar,
    })
}

/// Mortar assembly without the matching-interface shortcut.
pub(crate) fn mortar_matrix(
    source: &InterfacePolyline,
    target: &InterfacePolyline,
) -> Result<SparseMatrix> {
    let nt = target.len();
    let ns = source.len();
    // target 1D mass matrix
    let mut mtt_trips = Vec::with_capacity(4 * (nt - 1));
    for s in 0..nt - 1 {
        let len = target.arc[s + 1] - target.arc[s];
        mtt_trips.push((s, s, len / 3.0));
        mtt_trips.push((s + 1, s + 1, len / 3.0));
        mtt_trips.push((s, s + 1, len / 6.0));
        mtt_trips.push((s + 1, s, len / 6.0));
    }
    let mtt = SparseMatrix::from_triplets(nt, nt, &mtt_trips)?;

    // mixed mass: integrate over each target segment, split where the image
    // on the source polyline crosses a source node
    const GAUSS: [(f64, f64); 3] = [
        (-0.774596669241483377035853079956, 5.0 / 9.0),
        (0.0, 8.0 / 9.0),
        (0.774596669241483377035853079956, 5.0 / 9.0),
    ];
    let mut mts = vec![std::collections::BTreeMap::<usize, f64>::new(); nt];
    for seg in 0..nt - 1 {
        let seg_len = target.arc[seg + 1] - target.arc[seg];
        if seg_len <= 0.0 {
            return Err(FsiError::MeshInvalid(format!(
                "degenerate target interface segment {seg}"
            )));
        }
        let (_, _, _, sa) = source.project(target.points[seg]);
        let (_, _, _, sb) = source.project(target.points[seg + 1]);
        // source arc breakpoints strictly between the endpoint images
        let (lo, hi) = if sa <= sb { (sa, sb) } else { (sb, sa) };
        let mut breaks: Vec<f64> = source
            .arc
            .iter()
            .copied()
            .filter(|&s| s > lo && s < hi)
            .collect();
        breaks.sort_by(|x, y| x.total_cmp(y));
        if sa > sb {
            breaks.reverse();
        }
        let mut stops = Vec::with_capacity(breaks.len() + 2);
        stops.push(sa);
        stops.extend(breaks);
        stops.push(sb);
        let span = sb - sa;
        for w in stops.windows(2) {
            let (s0, s1) = (w[0], w[1]);
            if (s1 - s0).abs() <= f64::EPSILON * source.total_length() {
                continue;
            }
            // target-side parameters of the sub-segment via the linear
            // arc-to-arc map of this segment
            let t0 = if span.abs() > 0.0 { (s0 - sa) / span } else { 0.0 };
            let t1 = if span.abs() > 0.0 { (s1 - sa) / span } else { 1.0 };
            let jac = 0.5 * (t1 - t0) * seg_len;
            for &(xi, wgt) in &GAUSS {
                let t = 0.5 * ((1.0 - xi) * t0 + (1.0 + xi) * t1);
                let s_src = sa + t * span;
                let (sseg, ts) = source.shape_at_arc(s_src);
                let phi_t = [1.0 - t, t];
                let phi_s = [1.0 - ts, ts];
                for (phi, &row) in phi_t.iter().zip(&[seg, seg + 1]) {
                    for (psi, &col) in phi_s.iter().zip(&[sseg, sseg + 1]) {
                        *mts[row].entry(col).or_insert(0.0) += wgt * jac * phi * psi;
                    }
                }
            }
        }
    }

    // H columns: solve M_tt h_col = m_col for each source node
    let solver = DirectSolver::new(&mtt)?;
    let mut trips = Vec::new();
    for col in 0..ns {
        let mut rhs = vec![0.0; nt];
        let mut nonzero = false;
        for (row, entry) in mts.iter().enumerate() {
            if let Some(&v) = entry.get(&col) {
                rhs[row] = v;
                nonzero = true;
            }
        }
        if !nonzero {
            continue;
        }
        let hcol = solver.solve(&rhs)?;
        for (row, &v) in hcol.iter().enumerate() {
            if v != 0.0 {
                trips.push((row, col, v));
            }
        }
    }
    SparseMatrix::from_triplets(nt, ns, &trips)
}

impl MappingOperator {
    /// Consistent application: target = H source. Used for displacements.
    pub fn map_consistent(&self, field: &[[f64; 2]]) -> Result<Vec<[f64; 2]>> {
        if field.len() != self.source.len() {
            return Err(FsiError::Dimension(format!(
                "consistent map: field length {} != source nodes {}",
                field.len(),
                self.source.len()
            )));
        }
        let mut out = vec![[0.0; 2]; self.target.len()];
        for i in 0..self.target.len() {
            for (j, v) in self.h.row(i) {
                out[i][0] += v * field[j][0];
                out[i][1] += v * field[j][1];
            }
        }
        Ok(out)
    }

    /// Conservative application: source = H^T force. Used for forces paired
    /// with a consistent displacement map; preserves interface virtual work.
    pub fn map_conservative(&self, force: &[[f64; 2]]) -> Result<Vec<[f64; 2]>> {
        if force.len() != self.target.len() {
            return Err(FsiError::Dimension(format!(
                "conservative map: force length {} != target nodes {}",
                force.len(),
                self.target.len()
            )));
        }
        let mut out = vec![[0.0; 2]; self.source.len()];
        for i in 0..self.target.len() {
            for (j, v) in self.h.row(i) {
                out[j][0] += v * force[i][0];
                out[j][1] += v * force[i][1];
            }
        }
        Ok(out)
    }

    /// Scalar variants used by the sensitivity transport.
    pub fn map_consistent_scalar(&self, field: &[f64]) -> Result<Vec<f64>> {
        if field.len() != self.source.len() {
            return Err(FsiError::Dimension("consistent map: scalar length".into()));
        }
        Ok(self.h.apply(field))
    }

    pub fn map_conservative_scalar(&self, force: &[f64]) -> Result<Vec<f64>> {
        if force.len() != self.target.len() {
            return Err(FsiError::Dimension("conservative map: scalar length".into()));
        }
        Ok(self.h.apply_transpose(force))
    }

    /// Gathers a full-mesh nodal field into the operator's source ordering.
    pub fn gather_source(&self, full: &[[f64; 2]]) -> Vec<[f64; 2]> {
        self.source.nodes.iter().map(|&n| full[n]).collect()
    }

    /// Gathers a full-mesh nodal field into the operator's target ordering.
    pub fn gather_target(&self, full: &[[f64; 2]]) -> Vec<[f64; 2]> {
        self.target.nodes.iter().map(|&n| full[n]).collect()
    }

    /// Row-sum deviation from exact consistency (constant reproduction).
    pub fn max_row_sum_error(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.h.rows() {
            let s: f64 = self.h.row(i).map(|(_, v)| v).sum();
            worst = worst.max((s - 1.0).abs());
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn straight_polyline(xs: &[f64]) -> InterfacePolyline {
        let points: Vec<Point> = xs.iter().map(|&x| [x, 0.0]).collect();
        let mut arc = vec![0.0; xs.len()];
        for i in 1..xs.len() {
            arc[i] = arc[i - 1] + (points[i][0] - points[i - 1][0]).abs();
        }
        InterfacePolyline {
            nodes: (0..xs.len()).collect(),
            points,
            arc,
        }
    }

    fn uniform(n: usize) -> InterfacePolyline {
        let xs: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
        straight_polyline(&xs)
    }

    #[test]
    fn identical_discretizations_give_identity() {
        let src = uniform(8);
        let tgt = uniform(8);
        for op in [
            build_nearest_element(&src, &tgt).unwrap(),
            build_mortar(&src, &tgt).unwrap(),
        ] {
            for i in 0..tgt.len() {
                for j in 0..src.len() {
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert_eq!(op.h.get(i, j), expect, "({i},{j})");
                }
            }
        }
    }

    #[test]
    fn reversed_matching_polyline_gives_permuted_identity() {
        let src = uniform(5);
        let xs: Vec<f64> = (0..=5).rev().map(|i| i as f64 / 5.0).collect();
        let tgt = straight_polyline(&xs);
        let op = build_nearest_element(&src, &tgt).unwrap();
        for i in 0..tgt.len() {
            assert_eq!(op.h.get(i, 5 - i), 1.0);
        }
    }

    #[test]
    fn midpoint_target_gets_half_half_weights() {
        let src = straight_polyline(&[0.0, 1.0]);
        let tgt = straight_polyline(&[0.0, 0.5, 1.0]);
        let op = build_nearest_element(&src, &tgt).unwrap();
        assert!((op.h.get(1, 0) - 0.5).abs() < 1e-15);
        assert!((op.h.get(1, 1) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn constant_field_is_mapped_exactly() {
        let src = uniform(7);
        let tgt = uniform(11);
        for op in [
            build_nearest_element(&src, &tgt).unwrap(),
            build_mortar(&src, &tgt).unwrap(),
        ] {
            let field = vec![[3.7, -3.7]; src.len()];
            let mapped = op.map_consistent(&field).unwrap();
            for v in mapped {
                assert!((v[0] - 3.7).abs() <= 1e-12, "{:?} {:?}", op.method, v);
                assert!((v[1] + 3.7).abs() <= 1e-12);
            }
            assert!(op.max_row_sum_error() <= 1e-12, "{:?}", op.method);
        }
    }

    #[test]
    fn mortar_reproduces_linear_fields() {
        let src = uniform(6);
        let xs: Vec<f64> = vec![0.0, 0.13, 0.21, 0.38, 0.55, 0.71, 0.86, 1.0];
        let tgt = straight_polyline(&xs);
        let op = build_mortar(&src, &tgt).unwrap();
        let field: Vec<[f64; 2]> = src.points.iter().map(|p| [p[0], 2.0 * p[0]]).collect();
        let mapped = op.map_consistent(&field).unwrap();
        for (i, v) in mapped.iter().enumerate() {
            let x = tgt.points[i][0];
            assert!((v[0] - x).abs() <= 1e-10, "node {i}: {} vs {x}", v[0]);
            assert!((v[1] - 2.0 * x).abs() <= 1e-10);
        }
    }

    #[test]
    fn mortar_raw_assembly_is_identity_on_matching_interfaces() {
        let src = uniform(9);
        let tgt = uniform(9);
        let h = mortar_matrix(&src, &tgt).unwrap();
        for i in 0..tgt.len() {
            for j in 0..src.len() {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((h.get(i, j) - expect).abs() <= 1e-12, "({i},{j}) {}", h.get(i, j));
            }
        }
    }

    #[test]
    fn nearest_element_matches_pointwise_interpolation_oracle() {
        let src = uniform(5);
        let xs: Vec<f64> = vec![0.0, 0.08, 0.33, 0.47, 0.62, 0.88, 1.0];
        let tgt = straight_polyline(&xs);
        let op = build_nearest_element(&src, &tgt).unwrap();
        // piecewise-linear nodal field on the source
        let field: Vec<[f64; 2]> = src
            .points
            .iter()
            .map(|p| [(3.0 * p[0]).sin(), p[0] * p[0]])
            .collect();
        let mapped = op.map_consistent(&field).unwrap();
        for (i, &x) in xs.iter().enumerate() {
            // direct interpolation oracle on the uniform source grid
            let t = x * 5.0;
            let seg = (t.floor() as usize).min(4);
            let w = t - seg as f64;
            for c in 0..2 {
                let expect = (1.0 - w) * field[seg][c] + w * field[seg + 1][c];
                assert!((mapped[i][c] - expect).abs() <= 1e-12, "node {i} comp {c}");
            }
        }
    }

    #[test]
    fn conservative_transfer_preserves_totals_and_energy() {
        let src = uniform(6);
        let xs: Vec<f64> = vec![0.0, 0.1, 0.28, 0.45, 0.66, 0.83, 0.95, 1.0];
        let tgt = straight_polyline(&xs);
        for op in [
            build_nearest_element(&src, &tgt).unwrap(),
            build_mortar(&src, &tgt).unwrap(),
        ] {
            let force: Vec<[f64; 2]> = tgt
                .points
                .iter()
                .map(|p| [(7.0 * p[0]).cos(), 1.0 - p[0]])
                .collect();
            let mapped = op.map_conservative(&force).unwrap();
            for c in 0..2 {
                let tot_t: f64 = force.iter().map(|f| f[c]).sum();
                let tot_s: f64 = mapped.iter().map(|f| f[c]).sum();
                assert!((tot_t - tot_s).abs() <= 1e-12 * tot_t.abs().max(1.0), "{:?}", op.method);
            }
            // transpose energy identity, exact algebra
            let disp: Vec<[f64; 2]> = src
                .points
                .iter()
                .map(|p| [p[0] * 0.3, (2.0 * p[0]).sin()])
                .collect();
            let mapped_disp = op.map_consistent(&disp).unwrap();
            let work_target: f64 = mapped_disp
                .iter()
                .zip(&force)
                .map(|(u, f)| u[0] * f[0] + u[1] * f[1])
                .sum();
            let work_source: f64 = disp
                .iter()
                .zip(&mapped)
                .map(|(u, f)| u[0] * f[0] + u[1] * f[1])
                .sum();
            assert!((work_target - work_source).abs() <= 1e-13 * work_target.abs().max(1.0));
        }
    }

    #[test]
    fn empty_interface_is_rejected() {
        let src = InterfacePolyline {
            nodes: vec![],
            points: vec![],
            arc: vec![],
        };
        let tgt = uniform(3);
        assert!(build_nearest_element(&src, &tgt).is_err());
    }

    #[test]
    fn non_coincident_interfaces_are_rejected() {
        let src = uniform(4);
        let mut tgt = uniform(4);
        for p in tgt.points.iter_mut() {
            p[1] += 0.1;
        }
        assert!(build_mortar(&src, &tgt).is_err());
    }
}
